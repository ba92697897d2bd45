//! Uniformly sampled signals, synthetic IMT/AHM generators, seeded noise
//! and the error metrics used throughout the crate.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Default sampling rate of every synthetic experiment, in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 100.0;

/// Scalar sample type of a [`Signal`]: either `f64` or `Complex64`.
pub trait Sample:
    Copy
    + Default
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const IS_REAL: bool;

    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn to_complex(self) -> Complex64;
    /// Projects a complex value onto the sample type (real part for `f64`).
    fn from_complex(z: Complex64) -> Self;
    fn from_real(x: f64) -> Self;
}

impl Sample for f64 {
    const IS_REAL: bool = true;

    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Sample for Complex64 {
    const IS_REAL: bool = false;

    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        z
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Uniform time grid: sample `j` sits at `start_time + j / sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub len: usize,
    pub sample_rate: f64,
    pub start_time: f64,
}

impl SampleGrid {
    pub fn new(len: usize, sample_rate: f64) -> Result<Self> {
        Self::with_start(len, sample_rate, 0.0)
    }

    pub fn with_start(len: usize, sample_rate: f64, start_time: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidSpec("grid must contain at least one sample".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSpec(format!("sample rate must be positive, got {sample_rate}")));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidSpec("start time must be finite".into()));
        }
        Ok(Self { len, sample_rate, start_time })
    }

    /// Grid covering `duration` seconds (`round(duration * rate)` samples).
    pub fn from_duration(duration: f64, sample_rate: f64) -> Result<Self> {
        let len = (duration * sample_rate).round();
        if !(len >= 1.0) {
            return Err(Error::InvalidSpec(format!("duration {duration} s yields no samples")));
        }
        Self::new(len as usize, sample_rate)
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        self.start_time + j as f64 / self.sample_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.time(j))
    }
}

/// A uniformly sampled real or complex time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T = f64> {
    samples: Vec<T>,
    sample_rate: f64,
    start_time: f64,
}

pub type RealSignal = Signal<f64>;
pub type ComplexSignal = Signal<Complex64>;

impl<T: Sample> Signal<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self> {
        Self::with_start(samples, sample_rate, 0.0)
    }

    pub fn with_start(samples: Vec<T>, sample_rate: f64, start_time: f64) -> Result<Self> {
        SampleGrid::with_start(samples.len(), sample_rate, start_time)?;
        Ok(Self { samples, sample_rate, start_time })
    }

    pub fn zeros(grid: &SampleGrid) -> Self {
        Self {
            samples: vec![T::default(); grid.len],
            sample_rate: grid.sample_rate,
            start_time: grid.start_time,
        }
    }

    /// Builds a signal on `grid` from a function of time.
    pub fn from_fn(grid: &SampleGrid, f: impl Fn(f64) -> T) -> Self {
        Self {
            samples: grid.times().map(f).collect(),
            sample_rate: grid.sample_rate,
            start_time: grid.start_time,
        }
    }

    /// Same grid, new samples. Panics if the length differs.
    pub fn with_samples<U: Sample>(&self, samples: Vec<U>) -> Signal<U> {
        assert_eq!(samples.len(), self.samples.len(), "sample count must match the grid");
        Signal {
            samples,
            sample_rate: self.sample_rate,
            start_time: self.start_time,
        }
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    #[inline]
    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn grid(&self) -> SampleGrid {
        SampleGrid {
            len: self.samples.len(),
            sample_rate: self.sample_rate,
            start_time: self.start_time,
        }
    }

    pub fn time(&self, j: usize) -> f64 {
        self.start_time + j as f64 / self.sample_rate
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Signal<U> {
        self.with_samples(self.samples.iter().map(|&x| f(x)).collect())
    }

    pub fn real_part(&self) -> RealSignal {
        self.map(Sample::re)
    }

    pub fn to_complex(&self) -> ComplexSignal {
        self.map(Sample::to_complex)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| x * alpha)
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2(&self.samples)
    }

    /// Checks that `other` lives on the same grid (length and rate).
    pub fn check_same_grid<U: Sample>(&self, other: &Signal<U>) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::mismatch(
                format!("{} samples", self.len()),
                format!("{} samples", other.len()),
            ));
        }
        if self.sample_rate != other.sample_rate {
            return Err(Error::mismatch(
                format!("{} Hz", self.sample_rate),
                format!("{} Hz", other.sample_rate),
            ));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(&a, &b)| a + b).collect()))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(&a, &b)| a - b).collect()))
    }
}

pub(crate) fn norm_l2<T: Sample>(xs: &[T]) -> f64 {
    xs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Time-dependent scalar function used by the synthetic models.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An ε-IMT function `A(t) e^{i2πφ(t)}`.
///
/// `frequency` is the instantaneous frequency φ′ in Hz. It is carried
/// alongside the phase so ground-truth curves never depend on numerical
/// differentiation.
#[derive(Clone)]
pub struct IMTSpec {
    pub amplitude: TimeFn,
    pub phase: TimeFn,
    pub frequency: TimeFn,
    pub epsilon: f64,
    /// Upper bound on |φ″| over the domain (M″).
    pub phase_second_derivative_bound: f64,
}

impl fmt::Debug for IMTSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IMTSpec")
            .field("epsilon", &self.epsilon)
            .field("phase_second_derivative_bound", &self.phase_second_derivative_bound)
            .finish_non_exhaustive()
    }
}

impl IMTSpec {
    pub fn new(
        amplitude: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phase: impl Fn(f64) -> f64 + Send + Sync + 'static,
        frequency: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            amplitude: Arc::new(amplitude),
            phase: Arc::new(phase),
            frequency: Arc::new(frequency),
            epsilon: 0.0,
            phase_second_derivative_bound: 0.0,
        }
    }

    /// Like [`IMTSpec::new`] but with φ′ obtained by central differences of φ.
    pub fn from_phase(
        amplitude: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phase: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let phase: TimeFn = Arc::new(phase);
        let p = Arc::clone(&phase);
        const H: f64 = 1e-5;
        Self {
            amplitude: Arc::new(amplitude),
            phase,
            frequency: Arc::new(move |t| (p(t + H) - p(t - H)) / (2.0 * H)),
            epsilon: 0.0,
            phase_second_derivative_bound: 0.0,
        }
    }

    /// Pure tone `amplitude · e^{i2π freq t}` (an ε = 0 IMT function).
    pub fn tone(amplitude: f64, freq: f64) -> Self {
        Self::new(move |_| amplitude, move |t| freq * t, move |_| freq)
    }

    /// Linear chirp with iF `f0 + rate·t`.
    pub fn linear_chirp(amplitude: f64, f0: f64, rate: f64) -> Self {
        let mut spec = Self::new(
            move |_| amplitude,
            move |t| f0 * t + 0.5 * rate * t * t,
            move |t| f0 + rate * t,
        );
        spec.phase_second_derivative_bound = rate.abs();
        spec
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_phase_second_derivative_bound(mut self, bound: f64) -> Self {
        self.phase_second_derivative_bound = bound;
        self
    }

    /// Boundedness conditions on the grid: A > 0, φ′ > 0 and φ strictly increasing.
    pub fn validate(&self, grid: &SampleGrid) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidSpec(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        let mut previous_phase = f64::NEG_INFINITY;
        for t in grid.times() {
            let a = (self.amplitude)(t);
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidSpec(format!("amplitude must be positive, A({t}) = {a}")));
            }
            let nu = (self.frequency)(t);
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "instantaneous frequency must be positive, φ′({t}) = {nu}"
                )));
            }
            let phase = (self.phase)(t);
            if !(phase > previous_phase) || !phase.is_finite() {
                return Err(Error::InvalidSpec(format!("phase must be strictly increasing at t = {t}")));
            }
            previous_phase = phase;
        }
        Ok(())
    }

    /// Smallest ε for which the growth conditions hold on the grid, using
    /// central differences with step Δt.
    pub fn growth_ratio(&self, grid: &SampleGrid) -> f64 {
        let h = grid.dt();
        grid.times()
            .map(|t| {
                let nu = (self.frequency)(t);
                let da = ((self.amplitude)(t + h) - (self.amplitude)(t - h)) / (2.0 * h);
                let d2phi = ((self.frequency)(t + h) - (self.frequency)(t - h)) / (2.0 * h);
                da.abs().max(d2phi.abs()) / nu
            })
            .fold(0.0, f64::max)
    }

    /// Growth conditions `|A′| ≤ εφ′` and `|φ″| ≤ εφ′` on the grid.
    pub fn check_growth(&self, grid: &SampleGrid) -> Result<()> {
        let h = grid.dt();
        let slack = 1e-9;
        for t in grid.times() {
            let bound = self.epsilon * (self.frequency)(t);
            let da = ((self.amplitude)(t + h) - (self.amplitude)(t - h)) / (2.0 * h);
            let d2phi = ((self.frequency)(t + h) - (self.frequency)(t - h)) / (2.0 * h);
            if da.abs() > bound + slack {
                return Err(Error::InvalidSpec(format!("|A′({t})| = {} exceeds εφ′ = {bound}", da.abs())));
            }
            if d2phi.abs() > bound + slack {
                return Err(Error::InvalidSpec(format!("|φ″({t})| = {} exceeds εφ′ = {bound}", d2phi.abs())));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar((self.amplitude)(t), 2.0 * PI * (self.phase)(t))
    }

    #[inline]
    pub fn eval_real(&self, t: f64) -> f64 {
        (self.amplitude)(t) * (2.0 * PI * (self.phase)(t)).cos()
    }
}

/// Adaptive harmonic model: a sum of IMT functions with separated iFs.
///
/// Components are stored in the caller's order; the separation condition is
/// checked between consecutive entries, lowest frequency first.
#[derive(Debug, Clone)]
pub struct AHMSpec {
    pub components: Vec<IMTSpec>,
    pub separation: f64,
}

impl AHMSpec {
    pub fn new(components: Vec<IMTSpec>, separation: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSpec("an AHM needs at least one component".into()));
        }
        if !(separation > 0.0) {
            return Err(Error::InvalidSpec(format!("separation must be positive, got {separation}")));
        }
        Ok(Self { components, separation })
    }

    /// `φ′_{ℓ+1}(t) − φ′_ℓ(t) ≥ d` for every adjacent pair on the grid.
    pub fn check_separation(&self, grid: &SampleGrid) -> Result<()> {
        for t in grid.times() {
            for pair in self.components.windows(2) {
                let gap = (pair[1].frequency)(t) - (pair[0].frequency)(t);
                if gap < self.separation {
                    return Err(Error::InvalidSpec(format!(
                        "separation violated at t = {t}: gap {gap} < {}",
                        self.separation
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Anything that can be rendered as a sum of IMT functions.
pub trait HarmonicModel {
    fn imts(&self) -> &[IMTSpec];
}

impl HarmonicModel for IMTSpec {
    fn imts(&self) -> &[IMTSpec] {
        std::slice::from_ref(self)
    }
}

impl HarmonicModel for AHMSpec {
    fn imts(&self) -> &[IMTSpec] {
        &self.components
    }
}

impl HarmonicModel for [IMTSpec] {
    fn imts(&self) -> &[IMTSpec] {
        self
    }
}

/// Complex analytic samples `Σ_ℓ A_ℓ(t_j) e^{i2πφ_ℓ(t_j)}`.
pub fn synthesize<M: HarmonicModel + ?Sized>(spec: &M, grid: &SampleGrid) -> Result<ComplexSignal> {
    for imt in spec.imts() {
        imt.validate(grid)?;
    }
    Ok(Signal::from_fn(grid, |t| spec.imts().iter().map(|c| c.eval(t)).sum()))
}

/// Real projection `Σ_ℓ A_ℓ(t_j) cos(2πφ_ℓ(t_j))`.
pub fn synthesize_real<M: HarmonicModel + ?Sized>(spec: &M, grid: &SampleGrid) -> Result<RealSignal> {
    for imt in spec.imts() {
        imt.validate(grid)?;
    }
    Ok(Signal::from_fn(grid, |t| spec.imts().iter().map(|c| c.eval_real(t)).sum()))
}

/// Additive white Gaussian noise with a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub standard_deviation: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(standard_deviation: f64, seed: u64) -> Self {
        Self { standard_deviation, seed }
    }
}

/// Standard normal stream: Box–Muller over ChaCha8.
///
/// Uniforms are built from the top 53 bits of each `u64` so the stream
/// depends only on the ChaCha8 key stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform_open(&mut self) -> f64 {
        // (0, 1]: never zero, so ln() stays finite.
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Returns `(noisy, noise)` with `noisy = signal + noise` pointwise.
///
/// Noise is real-valued; for complex signals it is added to the real part.
pub fn add_noise<T: Sample>(signal: &Signal<T>, noise: &NoiseSpec) -> Result<(Signal<T>, Signal<T>)> {
    if !(noise.standard_deviation >= 0.0 && noise.standard_deviation.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "noise standard deviation must be nonnegative, got {}",
            noise.standard_deviation
        )));
    }
    let mut stream = GaussianStream::new(noise.seed);
    let realization: Vec<T> = (0..signal.len())
        .map(|_| T::from_real(noise.standard_deviation * stream.next_normal()))
        .collect();
    let noisy = signal
        .samples()
        .iter()
        .zip(&realization)
        .map(|(&s, &n)| s + n)
        .collect();
    Ok((signal.with_samples(noisy), signal.with_samples(realization)))
}

/// `20 log10(‖signal‖₂ / ‖noise‖₂)`.
pub fn snr_db<T: Sample>(signal: &Signal<T>, noise: &Signal<T>) -> Result<f64> {
    signal.check_same_grid(noise)?;
    let noise_norm = noise.norm_l2();
    if noise_norm == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    Ok(20.0 * (signal.norm_l2() / noise_norm).log10())
}

/// Number of strict interior local extrema of a real sequence.
///
/// A maximal run of equal values counts once, as a maximum when both
/// neighbouring runs are lower and as a minimum when both are higher.
pub fn count_extrema(samples: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::with_capacity(samples.len());
    for &x in samples {
        if runs.last() != Some(&x) {
            runs.push(x);
        }
    }
    runs.windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count()
}

/// Samples dropped at each end for a trim of `trim` seconds.
pub fn trim_samples(sample_rate: f64, trim: f64) -> usize {
    (trim * sample_rate).round().max(0.0) as usize
}

/// `‖estimate − truth‖₂ / ‖truth‖₂` with `trim` seconds removed at both ends.
pub fn relative_error_l2<T: Sample>(estimate: &Signal<T>, truth: &Signal<T>, trim: f64) -> Result<f64> {
    estimate.check_same_grid(truth)?;
    let cut = trim_samples(truth.sample_rate(), trim);
    if 2 * cut >= truth.len() {
        return Err(Error::InvalidConfig(format!(
            "trim of {trim} s removes all {} samples",
            truth.len()
        )));
    }
    let range = cut..truth.len() - cut;
    let reference = norm_l2(&truth.samples()[range.clone()]);
    if reference == 0.0 {
        return Err(Error::UndefinedError);
    }
    let diff: f64 = estimate.samples()[range.clone()]
        .iter()
        .zip(&truth.samples()[range])
        .map(|(&e, &t)| (e - t).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / reference)
}
