//! Short-time Fourier transform, synchrosqueezing and band reconstruction.
//!
//! Convention: `V(t_m, η) = Δt Σ_k f(t_m + kΔt) h(k) e^{−i2πηkΔt}`, with a
//! frame at every sample and zero extension past the ends. The phase of a
//! tone is carried by `V`, so summing the squeezed coefficients over a band
//! and scaling by `Δξ / h(0)` returns the component itself.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::curve::IFCurve;
use crate::error::{Error, Result};
use crate::signal::{ComplexSignal, Sample, Signal};

/// Discretised Gaussian `exp(−u²/2)` on `u ∈ [−half_support, half_support]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    length: usize,
    half_support: f64,
}

impl WindowSpec {
    pub const DEFAULT_LENGTH: usize = 377;
    pub const TUNED_LENGTH: usize = 677;
    pub const DEFAULT_HALF_SUPPORT: f64 = 6.0;

    pub fn new(length: usize) -> Result<Self> {
        Self::with_support(length, Self::DEFAULT_HALF_SUPPORT)
    }

    pub fn with_support(length: usize, half_support: f64) -> Result<Self> {
        if length < 3 || length % 2 == 0 {
            return Err(Error::InvalidWindow(format!("length must be odd and at least 3, got {length}")));
        }
        if !(half_support > 0.0 && half_support.is_finite()) {
            return Err(Error::InvalidWindow(format!("support must be positive, got {half_support}")));
        }
        Ok(Self { length, half_support })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn half_len(&self) -> usize {
        (self.length - 1) / 2
    }

    pub fn half_support(&self) -> f64 {
        self.half_support
    }

    fn scale(&self) -> f64 {
        self.half_support / self.half_len() as f64
    }

    /// `h(k)` for `k = −L..=L`.
    pub fn values(&self) -> Vec<f64> {
        let l = self.half_len() as isize;
        let a = self.scale();
        (-l..=l).map(|k| (-0.5 * (k as f64 * a).powi(2)).exp()).collect()
    }

    /// `h′(τ)` in 1/s at `τ = kΔt`, `k = −L..=L`.
    pub fn derivative(&self, sample_rate: f64) -> Vec<f64> {
        let l = self.half_len() as isize;
        let a = self.scale();
        (-l..=l)
            .zip(self.values())
            .map(|(k, h)| -a * a * k as f64 * sample_rate * h)
            .collect()
    }

    /// Value at the centre, the normaliser of the reconstruction.
    pub fn peak(&self) -> f64 {
        1.0
    }

    /// Standard deviation of the window in seconds.
    pub fn time_spread(&self, sample_rate: f64) -> f64 {
        1.0 / (self.scale() * sample_rate)
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            length: Self::DEFAULT_LENGTH,
            half_support: Self::DEFAULT_HALF_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SSTConfig {
    pub delta_xi: f64,
    /// Coefficients with `|V| ≤ γ · max|V|` are not reassigned.
    pub magnitude_threshold: f64,
    pub max_frequency: f64,
}

impl Default for SSTConfig {
    fn default() -> Self {
        Self {
            delta_xi: 0.01,
            magnitude_threshold: 1e-4,
            max_frequency: 10.0,
        }
    }
}

impl SSTConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_xi > 0.0 && self.delta_xi.is_finite()) {
            return Err(Error::InvalidConfig(format!("Δξ must be positive, got {}", self.delta_xi)));
        }
        if !(0.0..1.0).contains(&self.magnitude_threshold) {
            return Err(Error::InvalidConfig(format!(
                "magnitude threshold must lie in [0, 1), got {}",
                self.magnitude_threshold
            )));
        }
        if !(self.max_frequency > 0.0 && self.max_frequency.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "maximum frequency must be positive, got {}",
                self.max_frequency
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.max_frequency / self.delta_xi + 1e-9).floor() as usize + 1
    }
}

/// Complex time-frequency matrix with bins `qΔξ`, `q = 0..n`, and frames at
/// `t₀ + mΔt`. Stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TFRGrid {
    values: Vec<Complex64>,
    n_bins: usize,
    n_frames: usize,
    delta_xi: f64,
    frame_start: f64,
    frame_step: f64,
}

impl TFRGrid {
    pub fn new(
        values: Vec<Complex64>,
        n_bins: usize,
        n_frames: usize,
        delta_xi: f64,
        frame_start: f64,
        frame_step: f64,
    ) -> Result<Self> {
        if n_bins == 0 || n_frames == 0 {
            return Err(Error::InvalidConfig("time-frequency grid must be nonempty".into()));
        }
        if values.len() != n_bins * n_frames {
            return Err(Error::mismatch(
                format!("{} values ({n_bins} bins × {n_frames} frames)", n_bins * n_frames),
                values.len(),
            ));
        }
        if !(delta_xi > 0.0 && frame_step > 0.0 && frame_start.is_finite()) {
            return Err(Error::InvalidConfig("grid axes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Format("time-frequency values must be finite".into()));
        }
        Ok(Self { values, n_bins, n_frames, delta_xi, frame_start, frame_step })
    }

    pub fn zeros(n_bins: usize, n_frames: usize, delta_xi: f64, frame_start: f64, frame_step: f64) -> Result<Self> {
        Self::new(vec![Complex64::default(); n_bins * n_frames], n_bins, n_frames, delta_xi, frame_start, frame_step)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn delta_xi(&self) -> f64 {
        self.delta_xi
    }

    pub fn frame_start(&self) -> f64 {
        self.frame_start
    }

    pub fn frame_step(&self) -> f64 {
        self.frame_step
    }

    pub fn bin_frequency(&self, q: usize) -> f64 {
        q as f64 * self.delta_xi
    }

    pub fn frame_time(&self, m: usize) -> f64 {
        self.frame_start + m as f64 * self.frame_step
    }

    pub fn bin_frequencies(&self) -> Vec<f64> {
        (0..self.n_bins).map(|q| self.bin_frequency(q)).collect()
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames).map(|m| self.frame_time(m)).collect()
    }

    /// Frame-major storage: frame `m` occupies `[m·n, (m+1)·n)`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.values[frame * self.n_bins + bin]
    }

    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.values[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> + '_ {
        self.values.chunks_exact(self.n_bins)
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn total_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum()
    }

    pub fn check_same_axes(&self, other: &TFRGrid) -> Result<()> {
        if self.n_bins != other.n_bins
            || self.n_frames != other.n_frames
            || self.delta_xi != other.delta_xi
            || self.frame_start != other.frame_start
            || self.frame_step != other.frame_step
        {
            return Err(Error::mismatch(
                format!("{} bins × {} frames", self.n_bins, self.n_frames),
                format!("{} bins × {} frames", other.n_bins, other.n_frames),
            ));
        }
        Ok(())
    }

    /// Zeroes, frame by frame, every bin within `halfwidth` Hz of `frequencies[m]`.
    pub fn suppress_band(&mut self, frequencies: &[f64], halfwidth: f64) -> Result<()> {
        if frequencies.len() != self.n_frames {
            return Err(Error::mismatch(format!("{} frames", self.n_frames), frequencies.len()));
        }
        let n = self.n_bins;
        for (frame, &f) in self.values.chunks_exact_mut(n).zip(frequencies) {
            let lo = ((f - halfwidth) / self.delta_xi).ceil().max(0.0) as usize;
            let hi = ((f + halfwidth) / self.delta_xi).floor();
            if hi >= 0.0 && lo < n {
                frame[lo..=(hi as usize).min(n - 1)].fill(Complex64::default());
            }
        }
        Ok(())
    }

    pub fn try_add_assign(&mut self, other: &TFRGrid) -> Result<()> {
        self.check_same_axes(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

enum Backend {
    Fft { fft: Arc<dyn Fft<f64>>, len: usize },
    // Used when `sample_rate / Δξ` is not an integer.
    Direct { twiddles: Vec<Complex64> },
}

/// Computes `V_h` and `V_{h′}` frame by frame.
struct FrameTransform {
    window: Vec<f64>,
    window_derivative: Vec<f64>,
    half_len: usize,
    n_bins: usize,
    dt: f64,
    backend: Backend,
    buffer: Vec<Complex64>,
    second: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FrameTransform {
    fn new(window: &WindowSpec, sample_rate: f64, config: &SSTConfig) -> Self {
        let n_bins = config.n_bins();
        let ratio = sample_rate / config.delta_xi;
        let half_len = window.half_len();
        let backend = if (ratio - ratio.round()).abs() < 1e-9 * ratio && ratio.round() as usize >= n_bins {
            let len = ratio.round() as usize;
            let fft = FftPlanner::new().plan_fft_forward(len);
            Backend::Fft { fft, len }
        } else {
            let dt = 1.0 / sample_rate;
            let twiddles = (0..n_bins)
                .flat_map(|q| {
                    let eta = q as f64 * config.delta_xi;
                    (0..window.length()).map(move |i| {
                        let k = i as f64 - half_len as f64;
                        Complex64::from_polar(1.0, -2.0 * PI * eta * k * dt)
                    })
                })
                .collect();
            Backend::Direct { twiddles }
        };
        let (buffer_len, scratch_len) = match &backend {
            Backend::Fft { fft, len } => (*len, fft.get_inplace_scratch_len()),
            Backend::Direct { .. } => (window.length(), 0),
        };
        Self {
            window: window.values(),
            window_derivative: window.derivative(sample_rate),
            half_len,
            n_bins,
            dt: 1.0 / sample_rate,
            backend,
            buffer: vec![Complex64::default(); buffer_len],
            second: vec![Complex64::default(); buffer_len],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// Writes `V_h(t_m, ·)` into `vh` and, when given, `V_{h′}(t_m, ·)` into `vdh`.
    fn frame<T: Sample>(&mut self, samples: &[T], m: usize, vh: &mut [Complex64], vdh: Option<&mut [Complex64]>) {
        let n = samples.len() as isize;
        let l = self.half_len as isize;
        let lo = (-l).max(-(m as isize));
        let hi = l.min(n - 1 - m as isize);
        match &self.backend {
            Backend::Fft { fft, len } => {
                let len = *len;
                let real_packed = T::IS_REAL;
                self.buffer.fill(Complex64::default());
                if !real_packed {
                    self.second.fill(Complex64::default());
                }
                for k in lo..=hi {
                    let x = samples[(m as isize + k) as usize];
                    let w = (k + l) as usize;
                    let idx = k.rem_euclid(len as isize) as usize;
                    if real_packed {
                        let x = x.re();
                        self.buffer[idx] += Complex64::new(x * self.window[w], x * self.window_derivative[w]);
                    } else {
                        let z = x.to_complex();
                        self.buffer[idx] += z * self.window[w];
                        self.second[idx] += z * self.window_derivative[w];
                    }
                }
                fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
                if real_packed {
                    let mut vdh = vdh;
                    for q in 0..self.n_bins {
                        let a = self.buffer[q];
                        let b = self.buffer[(len - q) % len].conj();
                        vh[q] = (a + b) * (0.5 * self.dt);
                        if let Some(d) = vdh.as_deref_mut() {
                            // (a − b) / (2i)
                            let diff = a - b;
                            d[q] = Complex64::new(diff.im, -diff.re) * (0.5 * self.dt);
                        }
                    }
                } else {
                    for (v, x) in vh.iter_mut().zip(&self.buffer) {
                        *v = x * self.dt;
                    }
                    if let Some(d) = vdh {
                        fft.process_with_scratch(&mut self.second, &mut self.scratch);
                        for (v, x) in d.iter_mut().zip(&self.second) {
                            *v = x * self.dt;
                        }
                    }
                }
            }
            Backend::Direct { twiddles } => {
                let width = self.window.len();
                self.buffer.fill(Complex64::default());
                for k in lo..=hi {
                    self.buffer[(k + l) as usize] = samples[(m as isize + k) as usize].to_complex();
                }
                let mut vdh = vdh;
                for q in 0..self.n_bins {
                    let tw = &twiddles[q * width..(q + 1) * width];
                    let mut acc = Complex64::default();
                    let mut acc_d = Complex64::default();
                    for (((x, t), h), dh) in self.buffer.iter().zip(tw).zip(&self.window).zip(&self.window_derivative) {
                        let p = x * t;
                        acc += p * h;
                        acc_d += p * dh;
                    }
                    vh[q] = acc * self.dt;
                    if let Some(d) = vdh.as_deref_mut() {
                        d[q] = acc_d * self.dt;
                    }
                }
            }
        }
    }
}

fn check_window<T: Sample>(signal: &Signal<T>, window: &WindowSpec) -> Result<()> {
    if window.length() >= signal.len() {
        return Err(Error::InvalidWindow(format!(
            "window of {} samples does not fit a signal of {} samples",
            window.length(),
            signal.len()
        )));
    }
    Ok(())
}

/// STFT with a frame at every sample.
pub fn stft<T: Sample>(signal: &Signal<T>, window: &WindowSpec, config: &SSTConfig) -> Result<TFRGrid> {
    config.validate()?;
    check_window(signal, window)?;
    let mut transform = FrameTransform::new(window, signal.sample_rate(), config);
    let n_bins = config.n_bins();
    let n_frames = signal.len();
    let mut values = vec![Complex64::default(); n_bins * n_frames];
    for (m, out) in values.chunks_exact_mut(n_bins).enumerate() {
        transform.frame(signal.samples(), m, out, None);
    }
    TFRGrid::new(values, n_bins, n_frames, config.delta_xi, signal.start_time(), signal.dt())
}

/// Synchrosqueezed STFT: each coefficient above the threshold moves to the
/// bin nearest `ω = η − Im[V_{h′} / (2π V_h)]`.
pub fn synchrosqueeze<T: Sample>(signal: &Signal<T>, window: &WindowSpec, config: &SSTConfig) -> Result<TFRGrid> {
    config.validate()?;
    check_window(signal, window)?;
    let mut transform = FrameTransform::new(window, signal.sample_rate(), config);
    let n_bins = config.n_bins();
    let n_frames = signal.len();
    let mut coefficients = vec![Complex64::default(); n_bins * n_frames];
    let mut targets = vec![u32::MAX; n_bins * n_frames];
    let mut derivative = vec![Complex64::default(); n_bins];
    let mut max_magnitude: f64 = 0.0;
    for (m, (vh, target)) in coefficients
        .chunks_exact_mut(n_bins)
        .zip(targets.chunks_exact_mut(n_bins))
        .enumerate()
    {
        transform.frame(signal.samples(), m, vh, Some(&mut derivative));
        for (q, ((v, d), t)) in vh.iter().zip(&derivative).zip(target.iter_mut()).enumerate() {
            let magnitude = v.norm();
            max_magnitude = max_magnitude.max(magnitude);
            if magnitude == 0.0 {
                continue;
            }
            let omega = q as f64 * config.delta_xi - (d / v).im / (2.0 * PI);
            let bin = (omega / config.delta_xi).round();
            if bin >= 0.0 && bin < n_bins as f64 {
                *t = bin as u32;
            }
        }
    }
    let threshold = config.magnitude_threshold * max_magnitude;
    let mut squeezed = vec![Complex64::default(); n_bins * n_frames];
    for ((out, vh), target) in squeezed
        .chunks_exact_mut(n_bins)
        .zip(coefficients.chunks_exact(n_bins))
        .zip(targets.chunks_exact(n_bins))
    {
        for (v, &t) in vh.iter().zip(target) {
            if t != u32::MAX && v.norm() > threshold {
                out[t as usize] += v;
            }
        }
    }
    TFRGrid::new(squeezed, n_bins, n_frames, config.delta_xi, signal.start_time(), signal.dt())
}

/// Reconstruction along a curve together with the frames whose band held no bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BandReconstruction {
    pub signal: ComplexSignal,
    pub empty_band_frames: Vec<usize>,
}

/// `(Δξ / h(0)) Σ_{|qΔξ − c(m)| ≤ b} S(q, m)` for every frame `m`.
///
/// For a real signal only the positive-frequency half is summed; twice the
/// real part of the result estimates the real component.
pub fn reconstruct_along_curve(
    sst: &TFRGrid,
    curve: &IFCurve,
    band_b: f64,
    window: &WindowSpec,
) -> Result<BandReconstruction> {
    if !(band_b > 0.0) {
        return Err(Error::InvalidConfig(format!("band half-width must be positive, got {band_b}")));
    }
    if curve.len() != sst.n_frames() {
        return Err(Error::InvalidCurve(format!(
            "curve has {} frames, grid has {}",
            curve.len(),
            sst.n_frames()
        )));
    }
    let dxi = sst.delta_xi();
    let top = sst.bin_frequency(sst.n_bins() - 1);
    let scale = dxi / window.peak();
    let tol = 1e-9 * dxi;
    let mut out = Vec::with_capacity(sst.n_frames());
    let mut empty = Vec::new();
    for (m, (frame, &c)) in sst.frames().zip(curve.frequencies()).enumerate() {
        if !(c.is_finite() && c >= -tol && c <= top + tol) {
            return Err(Error::InvalidCurve(format!("curve value {c} Hz at frame {m} is outside [0, {top}] Hz")));
        }
        let lo = ((c - band_b - tol) / dxi).ceil().max(0.0) as usize;
        let hi_f = ((c + band_b + tol) / dxi).floor();
        if hi_f < lo as f64 {
            empty.push(m);
            out.push(Complex64::default());
            continue;
        }
        let hi = (hi_f as usize).min(sst.n_bins() - 1);
        let sum: Complex64 = frame[lo..=hi].iter().sum();
        out.push(sum * scale);
    }
    let signal = Signal::with_start(out, 1.0 / sst.frame_step(), sst.frame_start())?;
    Ok(BandReconstruction { signal, empty_band_frames: empty })
}

/// Zero-phase band-pass: keeps DFT bins with `low ≤ |f| ≤ high`.
pub fn bandpass_reconstruct<T: Sample>(signal: &Signal<T>, low: f64, high: f64) -> Result<Signal<T>> {
    let fs = signal.sample_rate();
    let nyquist = fs / 2.0;
    if !(low >= 0.0 && low < high && high <= nyquist) {
        return Err(Error::InvalidBand { low, high, nyquist });
    }
    let n = signal.len();
    let mut planner = FftPlanner::new();
    let mut buffer: Vec<Complex64> = signal.samples().iter().map(|x| x.to_complex()).collect();
    planner.plan_fft_forward(n).process(&mut buffer);
    let tol = 1e-9 * fs / n as f64;
    for (k, v) in buffer.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { n as f64 - k as f64 } * fs / n as f64;
        if f < low - tol || f > high + tol {
            *v = Complex64::default();
        }
    }
    planner.plan_fft_inverse(n).process(&mut buffer);
    let scale = 1.0 / n as f64;
    Ok(signal.with_samples(buffer.into_iter().map(|z| T::from_complex(z * scale)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, synthesize_real, IMTSpec, RealSignal, SampleGrid};

    const FS: f64 = 100.0;

    fn tone(nu: f64, len: usize) -> ComplexSignal {
        synthesize(&IMTSpec::tone(1.0, nu), &SampleGrid::new(len, FS).unwrap()).unwrap()
    }

    /// Direct evaluation of the transform sum at one frame and frequency.
    fn direct_stft(x: &[Complex64], window: &WindowSpec, m: usize, eta: f64) -> Complex64 {
        let h = window.values();
        let l = window.half_len() as isize;
        (-l..=l)
            .filter_map(|k| {
                let j = m as isize + k;
                (0..x.len() as isize).contains(&j).then(|| {
                    x[j as usize] * h[(k + l) as usize] * Complex64::from_polar(1.0, -2.0 * PI * eta * k as f64 / FS)
                })
            })
            .sum::<Complex64>()
            / FS
    }

    #[test]
    fn window_shape() {
        assert!(WindowSpec::new(4).is_err());
        assert!(WindowSpec::new(1).is_err());
        let w = WindowSpec::new(377).unwrap();
        let h = w.values();
        assert_eq!(h.len(), 377);
        assert_eq!(h[188], 1.0);
        assert!((h[0] - (-18.0f64).exp()).abs() < 1e-20);
        assert!(h.iter().all(|&x| x > 0.0));
        // Derivative against central differences.
        let d = w.derivative(FS);
        let fd = (h[101] - h[99]) * FS / 2.0;
        assert!((d[100] - fd).abs() < 1e-3 * fd.abs());
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let x = tone(1.3, 600);
        let window = WindowSpec::new(101).unwrap();
        let config = SSTConfig::default();
        let grid = stft(&x, &window, &config).unwrap();
        for (m, q) in [(0, 130), (300, 130), (300, 0), (599, 500), (50, 1000)] {
            let expected = direct_stft(x.samples(), &window, m, q as f64 * 0.01);
            assert!((grid.get(q, m) - expected).norm() < 1e-12, "m={m} q={q}");
        }
        // Real input takes the packed path.
        let real = x.real_part();
        let grid = stft(&real, &window, &config).unwrap();
        let xr: Vec<Complex64> = real.samples().iter().map(|&v| v.into()).collect();
        for (m, q) in [(10, 130), (300, 77)] {
            let expected = direct_stft(&xr, &window, m, q as f64 * 0.01);
            assert!((grid.get(q, m) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn direct_backend_matches_fft_backend() {
        let x = tone(1.0, 400).real_part();
        let window = WindowSpec::new(61).unwrap();
        let fft = stft(&x, &window, &SSTConfig { max_frequency: 2.0, ..SSTConfig::default() }).unwrap();
        let odd = SSTConfig { delta_xi: 0.03, max_frequency: 2.0, ..SSTConfig::default() };
        let direct = stft(&x, &window, &odd).unwrap();
        for m in [0, 200, 399] {
            for q in 0..direct.n_bins() {
                assert!((direct.get(q, m) - fft.get(3 * q, m)).norm() < 1e-12);
            }
        }
        let sq = synchrosqueeze(&x, &window, &odd).unwrap();
        assert_eq!(sq.n_bins(), 67);
    }

    #[test]
    fn zero_signal_gives_zero_grids() {
        let x = RealSignal::zeros(&SampleGrid::new(500, FS).unwrap());
        let w = WindowSpec::new(101).unwrap();
        assert_eq!(stft(&x, &w, &SSTConfig::default()).unwrap().max_magnitude(), 0.0);
        assert_eq!(synchrosqueeze(&x, &w, &SSTConfig::default()).unwrap().max_magnitude(), 0.0);
    }

    #[test]
    fn window_longer_than_signal() {
        let x = tone(1.0, 300);
        assert!(matches!(
            stft(&x, &WindowSpec::new(377).unwrap(), &SSTConfig::default()),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn tone_peaks_at_its_bin() {
        let x = tone(1.0, 1000);
        let grid = stft(&x, &WindowSpec::default(), &SSTConfig::default()).unwrap();
        for m in 200..800 {
            let frame = grid.frame(m);
            let argmax = (0..frame.len()).max_by(|&a, &b| frame[a].norm().total_cmp(&frame[b].norm())).unwrap();
            assert_eq!(argmax, 100);
        }
    }

    #[test]
    fn linearity_in_amplitude() {
        let x = tone(2.0, 500).real_part();
        let w = WindowSpec::new(101).unwrap();
        let a = stft(&x, &w, &SSTConfig::default()).unwrap();
        let b = stft(&x.scale(4.0), &w, &SSTConfig::default()).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert_eq!(u * 4.0, *v);
        }
    }

    #[test]
    fn squeezed_tone_is_concentrated() {
        let x = tone(1.7, 1200);
        let config = SSTConfig::default();
        let s = synchrosqueeze(&x, &WindowSpec::default(), &config).unwrap();
        let frames = 200..1000;
        let hits = frames
            .clone()
            .filter(|&m| {
                let frame = s.frame(m);
                let total: f64 = frame.iter().map(|v| v.norm()).sum();
                let near: f64 = frame[169..=171].iter().map(|v| v.norm()).sum();
                near >= 0.95 * total
            })
            .count();
        assert!(hits as f64 >= 0.95 * frames.len() as f64);

        let v = stft(&x, &WindowSpec::default(), &config).unwrap();
        assert!(s.total_magnitude() <= v.total_magnitude());
    }

    #[test]
    fn bandpass_passes_and_blocks() {
        let grid = SampleGrid::new(2000, FS).unwrap();
        let x = synthesize_real(&IMTSpec::tone(1.0, 2.0), &grid).unwrap();
        let inside = bandpass_reconstruct(&x, 1.5, 2.5).unwrap();
        assert!(crate::signal::relative_error_l2(&inside, &x, 1.0).unwrap() < 1e-2);
        let outside = bandpass_reconstruct(&x, 3.0, 4.0).unwrap();
        assert!(outside.norm_l2().powi(2) <= 1e-4 * x.norm_l2().powi(2));
        let all = bandpass_reconstruct(&x, 0.0, 50.0).unwrap();
        for (a, b) in all.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(bandpass_reconstruct(&x, 2.0, 1.0), Err(Error::InvalidBand { .. })));
        assert!(matches!(bandpass_reconstruct(&x, 0.0, 60.0), Err(Error::InvalidBand { .. })));
    }
}
