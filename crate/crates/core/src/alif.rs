//! Adaptive local iterative filtering.
//!
//! The moving average `ℒ_σ f(y) = ∫ 𝒦_σ(y, x) f(x) dx` uses the Gaussian
//! kernel `𝒦_σ(y, x) ∝ exp(−|y − x|² / σ(y)²)` whose width depends on the
//! output position only. On the sample grid each row is a Riemann sum,
//! truncated where the exponent drops below −36 and renormalised to sum to
//! one, so constants pass through unchanged on any finite grid. With a
//! constant σ the operator is an ordinary convolution (plain iterative
//! filtering).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{count_extrema, norm_l2, Sample, Signal};

/// Kernel rows are cut where `(Δ/σ)²` exceeds this value.
pub const KERNEL_EXPONENT_CUTOFF: f64 = 36.0;

/// Per-sample kernel scale σ(t_j) in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthProfile {
    sigma: Vec<f64>,
    sample_rate: f64,
}

impl BandwidthProfile {
    pub fn new(sigma: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidProfile("profile is empty".into()));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidProfile(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some((j, s)) = sigma.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidProfile(format!("σ must be positive and finite, σ[{j}] = {s}")));
        }
        Ok(Self { sigma, sample_rate })
    }

    pub fn constant(sigma: f64, len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![sigma; len], sample_rate)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    fn check_aligned<T: Sample>(&self, signal: &Signal<T>) -> Result<()> {
        if self.sigma.len() != signal.len() || self.sample_rate != signal.sample_rate() {
            return Err(Error::mismatch(
                format!("profile of {} samples at {} Hz", signal.len(), signal.sample_rate()),
                format!("{} samples at {} Hz", self.sigma.len(), self.sample_rate),
            ));
        }
        Ok(())
    }
}

/// How the signal is continued past its ends before filtering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryExtension {
    /// Mirror about the end samples (the end sample is not repeated).
    #[default]
    Reflect,
    Periodic,
    /// No extension: rows are cut at the ends and renormalised.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlifConfig {
    /// Inner loop stops once `‖f_{m+1} − f_m‖₂ / ‖f_m‖₂` falls below this.
    pub stop_tolerance: f64,
    pub max_inner_iterations: usize,
    pub max_outer_components: usize,
    pub boundary: BoundaryExtension,
}

impl Default for AlifConfig {
    fn default() -> Self {
        Self {
            stop_tolerance: 1e-3,
            max_inner_iterations: 200,
            max_outer_components: 16,
            boundary: BoundaryExtension::Reflect,
        }
    }
}

impl AlifConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stop_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "stop tolerance must be positive, got {}",
                self.stop_tolerance
            )));
        }
        if self.max_inner_iterations == 0 || self.max_outer_components == 0 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One kernel row `k ↦ 𝒦_σ(t_center, t_center + kΔt)Δt`, `k ∈ [−W, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub center: usize,
    pub half_width: usize,
    pub weights: Vec<f64>,
}

impl KernelRow {
    /// Weight of the sample at `center + offset`; zero beyond the truncation.
    pub fn weight_at(&self, offset: isize) -> f64 {
        if offset.unsigned_abs() > self.half_width {
            0.0
        } else {
            self.weights[(offset + self.half_width as isize) as usize]
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Normalised half row `[w_0, w_1, …, w_W]` with `w_0 + 2 Σ_{k≥1} w_k = 1`.
fn half_kernel(sigma: f64, sample_rate: f64) -> Vec<f64> {
    let step = 1.0 / (sigma * sample_rate);
    let half_width = (KERNEL_EXPONENT_CUTOFF.sqrt() / step).floor() as usize;
    let mut half: Vec<f64> = (0..=half_width)
        .map(|k| {
            let x = k as f64 * step;
            (-x * x).exp()
        })
        .collect();
    let total = half[0] + 2.0 * half[1..].iter().sum::<f64>();
    for w in &mut half {
        *w /= total;
    }
    half
}

/// Kernel row of the moving average at `center`.
pub fn kernel_row(profile: &BandwidthProfile, center: usize) -> Result<KernelRow> {
    let sigma = *profile
        .sigma
        .get(center)
        .ok_or_else(|| Error::InvalidProfile(format!("center {center} outside a profile of {} samples", profile.len())))?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidProfile(format!("σ({center}) = {sigma} is not positive")));
    }
    let half = half_kernel(sigma, profile.sample_rate);
    let half_width = half.len() - 1;
    let weights = half[1..].iter().rev().chain(half.iter()).copied().collect();
    Ok(KernelRow { center, half_width, weights })
}

/// The discretised moving average `ℒ_σ` for a fixed profile.
///
/// Rows are built once and shared between centres with identical σ, so
/// repeated application inside the sifting loop costs one pass over the
/// kernel taps per sample.
#[derive(Debug, Clone)]
pub struct AlifOperator {
    len: usize,
    boundary: BoundaryExtension,
    pad: usize,
    rows: Vec<Arc<[f64]>>,
    // Renormalisation of rows cut at the ends (only for `BoundaryExtension::None`).
    edge_scale: Vec<f64>,
}

impl AlifOperator {
    pub fn new(profile: &BandwidthProfile, boundary: BoundaryExtension) -> Result<Self> {
        let mut cache: HashMap<u64, Arc<[f64]>> = HashMap::new();
        let rows: Vec<Arc<[f64]>> = profile
            .sigma
            .iter()
            .map(|&s| {
                Arc::clone(
                    cache
                        .entry(s.to_bits())
                        .or_insert_with(|| half_kernel(s, profile.sample_rate).into()),
                )
            })
            .collect();
        let len = rows.len();
        let pad = rows.iter().map(|r| r.len() - 1).max().unwrap_or(0);
        let edge_scale = if boundary == BoundaryExtension::None {
            rows.iter()
                .enumerate()
                .map(|(j, half)| {
                    let w = half.len() - 1;
                    let left = w.min(j);
                    let right = w.min(len - 1 - j);
                    let kept = half[0] + half[1..=left].iter().sum::<f64>() + half[1..=right].iter().sum::<f64>();
                    1.0 / kept
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { len, boundary, pad, rows, edge_scale })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn source_index(&self, i: isize) -> Option<usize> {
        let n = self.len as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self.boundary {
            BoundaryExtension::None => None,
            BoundaryExtension::Periodic => Some(i.rem_euclid(n) as usize),
            BoundaryExtension::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let period = 2 * (n - 1);
                let r = i.rem_euclid(period);
                Some(if r < n { r } else { period - r } as usize)
            }
        }
    }

    fn extend<T: Sample>(&self, input: &[T], ext: &mut Vec<T>) {
        ext.clear();
        ext.extend((-(self.pad as isize)..(self.len + self.pad) as isize).map(|i| {
            self.source_index(i).map_or(T::default(), |s| input[s])
        }));
    }

    /// `output = ℒ_σ input`.
    pub fn apply<T: Sample>(&self, input: &[T], output: &mut [T]) {
        let mut ext = Vec::with_capacity(self.len + 2 * self.pad);
        self.apply_with_buffer(input, output, &mut ext);
    }

    fn apply_with_buffer<T: Sample>(&self, input: &[T], output: &mut [T], ext: &mut Vec<T>) {
        assert_eq!(input.len(), self.len);
        assert_eq!(output.len(), self.len);
        self.extend(input, ext);
        for (j, (out, half)) in output.iter_mut().zip(&self.rows).enumerate() {
            let c = j + self.pad;
            let w = half.len() - 1;
            let right = &ext[c + 1..=c + w];
            let left = &ext[c - w..c];
            let mut acc = ext[c] * half[0];
            for ((&h, &r), &l) in half[1..].iter().zip(right).zip(left.iter().rev()) {
                acc += (r + l) * h;
            }
            *out = if self.edge_scale.is_empty() { acc } else { acc * self.edge_scale[j] };
        }
    }

    /// `output = (I − ℒ_σ)^k input`.
    pub fn apply_high_pass<T: Sample>(&self, input: &[T], k: usize) -> Vec<T> {
        let mut current = input.to_vec();
        let mut average = vec![T::default(); self.len];
        let mut ext = Vec::with_capacity(self.len + 2 * self.pad);
        for _ in 0..k {
            self.apply_with_buffer(&current, &mut average, &mut ext);
            for (c, &a) in current.iter_mut().zip(&average) {
                *c -= a;
            }
        }
        current
    }
}

/// `ℒ_σ f`.
pub fn moving_average<T: Sample>(signal: &Signal<T>, profile: &BandwidthProfile, config: &AlifConfig) -> Result<Signal<T>> {
    profile.check_aligned(signal)?;
    let op = AlifOperator::new(profile, config.boundary)?;
    let mut out = vec![T::default(); signal.len()];
    op.apply(signal.samples(), &mut out);
    Ok(signal.with_samples(out))
}

/// `𝒮_σ^{(K)} f = (I − ℒ_σ)^K f`.
pub fn iterate_operator<T: Sample>(
    signal: &Signal<T>,
    profile: &BandwidthProfile,
    k: usize,
    config: &AlifConfig,
) -> Result<Signal<T>> {
    profile.check_aligned(signal)?;
    if k == 0 {
        return Ok(signal.clone());
    }
    let op = AlifOperator::new(profile, config.boundary)?;
    Ok(signal.with_samples(op.apply_high_pass(signal.samples(), k)))
}

/// Factor `(1 − e^{−π²(φ′/ϕ′)²})^K` by which K sifting steps with
/// `σ = 1/ϕ′` scale a component of instantaneous frequency φ′.
pub fn theoretical_attenuation(phi_prime: f64, varphi_prime: f64, k: u32) -> f64 {
    let ratio = phi_prime / varphi_prime;
    (1.0 - (-PI * PI * ratio * ratio).exp()).powi(k as i32)
}

/// Envelope `H(y)` of the single-step freezing error for an IMT function
/// with amplitude `A(y)`, iF `φ′(y)`, `M″ = sup|φ″|`, filtered with
/// `σ = 1/ϕ′(y)`; the error is at most `ε·H(y)`.
pub fn freezing_error_envelope(amplitude: f64, phi_prime: f64, varphi_prime: f64, m2: f64) -> f64 {
    phi_prime / (PI.sqrt() * varphi_prime)
        + PI * amplitude * phi_prime / (varphi_prime * varphi_prime)
        + m2 / (4.0 * varphi_prime * varphi_prime)
}

/// Result of one sifting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerLoopOutcome<T = f64> {
    pub imt: Signal<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Repeats `f_{m+1} = f_m − ℒ_σ f_m` until the relative ℓ² change drops
/// below the stop tolerance or the iteration cap is reached.
pub fn alif_inner_loop<T: Sample>(
    signal: &Signal<T>,
    profile: &BandwidthProfile,
    config: &AlifConfig,
) -> Result<InnerLoopOutcome<T>> {
    config.validate()?;
    profile.check_aligned(signal)?;
    let op = AlifOperator::new(profile, config.boundary)?;
    let mut current = signal.samples().to_vec();
    let mut average = vec![T::default(); current.len()];
    let mut ext = Vec::with_capacity(current.len() + 2 * op.pad);
    for m in 1..=config.max_inner_iterations {
        op.apply_with_buffer(&current, &mut average, &mut ext);
        let base = norm_l2(&current);
        let change = norm_l2(&average);
        for (c, &a) in current.iter_mut().zip(&average) {
            *c -= a;
        }
        if base == 0.0 || change / base < config.stop_tolerance {
            return Ok(InnerLoopOutcome {
                imt: signal.with_samples(current),
                iterations: m,
                converged: true,
            });
        }
    }
    Ok(InnerLoopOutcome {
        imt: signal.with_samples(current),
        iterations: config.max_inner_iterations,
        converged: false,
    })
}

/// Output of the two-loop decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T = f64> {
    pub imts: Vec<Signal<T>>,
    pub trend: Signal<T>,
    pub iterations_used: Vec<usize>,
    /// False when the profile provider failed and the loop was aborted.
    pub complete: bool,
    pub failure: Option<String>,
}

impl<T: Sample> Decomposition<T> {
    /// `Σ imts + trend`.
    pub fn reconstruct(&self) -> Signal<T> {
        let mut acc = self.trend.samples().to_vec();
        for imt in &self.imts {
            for (a, &x) in acc.iter_mut().zip(imt.samples()) {
                *a += x;
            }
        }
        self.trend.with_samples(acc)
    }
}

/// Outer loop: while the remainder has at least two extrema, ask the
/// provider for a profile, sift one component and subtract it.
///
/// A provider error stops the loop; the partial result is returned with
/// `complete == false`.
pub fn alif_decompose<T, P>(signal: &Signal<T>, mut profile_provider: P, config: &AlifConfig) -> Result<Decomposition<T>>
where
    T: Sample,
    P: FnMut(&Signal<T>) -> Result<BandwidthProfile>,
{
    config.validate()?;
    let mut remainder = signal.clone();
    let mut imts = Vec::new();
    let mut iterations_used = Vec::new();
    let mut failure = None;
    while imts.len() < config.max_outer_components && extrema_of(&remainder) >= 2 {
        let step = profile_provider(&remainder).and_then(|profile| alif_inner_loop(&remainder, &profile, config));
        match step {
            Ok(outcome) => {
                remainder = remainder.try_sub(&outcome.imt)?;
                iterations_used.push(outcome.iterations);
                imts.push(outcome.imt);
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(Decomposition {
        imts,
        trend: remainder,
        iterations_used,
        complete: failure.is_none(),
        failure,
    })
}

pub(crate) fn extrema_of<T: Sample>(signal: &Signal<T>) -> usize {
    let real: Vec<f64> = signal.samples().iter().map(|x| x.re()).collect();
    count_extrema(&real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, synthesize_real, IMTSpec, RealSignal, SampleGrid};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    const FS: f64 = 100.0;

    fn periodic() -> AlifConfig {
        AlifConfig {
            boundary: BoundaryExtension::Periodic,
            ..AlifConfig::default()
        }
    }

    fn varying_profile(len: usize) -> BandwidthProfile {
        let sigma = (0..len).map(|j| 0.2 + 0.1 * (j as f64 / len as f64)).collect();
        BandwidthProfile::new(sigma, FS).unwrap()
    }

    #[test]
    fn rows_sum_to_one() {
        let profile = varying_profile(300);
        for center in [0, 1, 150, 299] {
            let row = kernel_row(&profile, center).unwrap();
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_sigma_row_is_symmetric() {
        let profile = BandwidthProfile::constant(0.3, 500, FS).unwrap();
        let row = kernel_row(&profile, 250).unwrap();
        for k in 0..=row.half_width as isize {
            assert_eq!(row.weight_at(k), row.weight_at(-k));
        }
    }

    #[test]
    fn half_width_at_inverse_e() {
        // exp(−(kΔt)²/σ²) = e⁻¹ ⇔ k = σ/Δt = 10 samples.
        let profile = BandwidthProfile::constant(0.1, 200, FS).unwrap();
        let row = kernel_row(&profile, 100).unwrap();
        assert_relative_eq!(row.weight_at(10) / row.weight_at(0), (-1.0f64).exp(), max_relative = 1e-12);
        assert_eq!(row.half_width, 60);
    }

    #[test]
    fn invalid_profiles() {
        assert!(matches!(BandwidthProfile::new(vec![0.1, 0.0], FS), Err(Error::InvalidProfile(_))));
        assert!(matches!(BandwidthProfile::new(vec![0.1, f64::NAN], FS), Err(Error::InvalidProfile(_))));
        let profile = BandwidthProfile::constant(0.1, 10, FS).unwrap();
        assert!(kernel_row(&profile, 10).is_err());
    }

    #[test]
    fn kernel_is_not_symmetric_for_varying_profile() {
        let profile = varying_profile(400);
        let asymmetric = (0..400).step_by(7).any(|y| {
            let row_y = kernel_row(&profile, y).unwrap();
            (y + 1..400.min(y + 30)).any(|x| {
                let row_x = kernel_row(&profile, x).unwrap();
                let d = x as isize - y as isize;
                (row_y.weight_at(d) - row_x.weight_at(-d)).abs() > 1e-12
            })
        });
        assert!(asymmetric);
    }

    #[test]
    fn constants_are_preserved() {
        let grid = SampleGrid::new(400, FS).unwrap();
        let c = RealSignal::from_fn(&grid, |_| 2.5);
        for boundary in [BoundaryExtension::Reflect, BoundaryExtension::Periodic, BoundaryExtension::None] {
            let config = AlifConfig { boundary, ..AlifConfig::default() };
            let out = moving_average(&c, &varying_profile(400), &config).unwrap();
            for &x in out.samples() {
                assert!((x - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn misaligned_profile_is_rejected() {
        let grid = SampleGrid::new(100, FS).unwrap();
        let s = RealSignal::zeros(&grid);
        let profile = BandwidthProfile::constant(0.1, 99, FS).unwrap();
        assert!(matches!(
            moving_average(&s, &profile, &AlifConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reflect_commutes_with_time_reversal() {
        let grid = SampleGrid::new(700, FS).unwrap();
        let s = RealSignal::from_fn(&grid, |t| (2.0 * PI * 1.3 * t).sin() + 0.2 * t * t);
        let reversed = s.with_samples(s.samples().iter().rev().copied().collect());
        let profile = BandwidthProfile::constant(0.8, 700, FS).unwrap();
        let config = AlifConfig::default();
        let a = moving_average(&s, &profile, &config).unwrap();
        let b = moving_average(&reversed, &profile, &config).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples().iter().rev()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn tone_is_scaled_by_gaussian_transfer() {
        // σ = 1/ν: the factor is e^{−π²}.
        let nu = 2.0;
        let grid = SampleGrid::new(1000, FS).unwrap();
        let tone = synthesize(&IMTSpec::tone(1.0, nu), &grid).unwrap();
        let profile = BandwidthProfile::constant(1.0 / nu, 1000, FS).unwrap();
        let out = moving_average(&tone, &profile, &periodic()).unwrap();
        let expected = (-PI * PI).exp();
        for (o, x) in out.samples().iter().zip(tone.samples()) {
            assert!((o / x - expected).norm() < 1e-9 * expected);
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let grid = SampleGrid::new(50, FS).unwrap();
        let s = RealSignal::from_fn(&grid, |t| t.sin());
        let profile = BandwidthProfile::constant(0.1, 50, FS).unwrap();
        assert_eq!(iterate_operator(&s, &profile, 0, &AlifConfig::default()).unwrap(), s);
    }

    #[test]
    fn three_steps_on_matched_tone() {
        // (1 − e^{−π²})³ ≈ 0.999845, checked against an independent
        // rectangle-rule convolution of the full (untruncated) Gaussian.
        let nu = 1.0;
        let len = 2000;
        let grid = SampleGrid::new(len, FS).unwrap();
        let tone = synthesize(&IMTSpec::tone(1.0, nu), &grid).unwrap();
        let profile = BandwidthProfile::constant(1.0 / nu, len, FS).unwrap();
        let out = iterate_operator(&tone, &profile, 3, &periodic()).unwrap();

        let sigma = 1.0 / nu;
        let dt = 1.0 / FS;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for k in -3000i32..=3000 {
            let s = k as f64 * dt;
            let w = (-(s / sigma).powi(2)).exp();
            num += Complex64::from_polar(w, 2.0 * PI * nu * s);
            den += w;
        }
        let single = 1.0 - num / den;
        let quadrature = single.powi(3);
        assert_relative_eq!(quadrature.re, 0.999845, epsilon = 1e-6);

        let j = len / 2;
        let measured = out.samples()[j] / tone.samples()[j];
        assert!((measured - quadrature).norm() < 1e-10);
        assert_relative_eq!(measured.re, theoretical_attenuation(nu, 1.0 / sigma, 3), max_relative = 1e-10);
    }

    #[test]
    fn two_tone_modulation_factors() {
        let len = 3000;
        let grid = SampleGrid::new(len, FS).unwrap();
        let low = synthesize(&IMTSpec::tone(1.0, 1.0), &grid).unwrap();
        let high = synthesize(&IMTSpec::tone(1.0, 3.0), &grid).unwrap();
        let mix = low.try_add(&high).unwrap();
        let profile = BandwidthProfile::constant(1.0 / 3.0, len, FS).unwrap();
        let out = iterate_operator(&mix, &profile, 10, &periodic()).unwrap();
        let project = |tone: &Signal<Complex64>| {
            let num: Complex64 = out.samples().iter().zip(tone.samples()).map(|(o, t)| o * t.conj()).sum();
            num.re / len as f64
        };
        assert_relative_eq!(project(&low), theoretical_attenuation(1.0, 3.0, 10), max_relative = 1e-6);
        assert_relative_eq!(project(&high), theoretical_attenuation(3.0, 3.0, 10), max_relative = 1e-6);
        assert!((theoretical_attenuation(3.0, 3.0, 10) - 0.9995).abs() < 1e-4);
    }

    #[test]
    fn attenuation_formula() {
        assert_eq!(theoretical_attenuation(2.0, 1.0, 0), 1.0);
        assert_relative_eq!(theoretical_attenuation(1.5, 1.5, 1), 1.0 - (-PI * PI).exp());
        let direct = (1.0 - (-PI * PI * 0.25f64).exp()).powi(10);
        assert_relative_eq!(theoretical_attenuation(0.5, 1.0, 10), direct, max_relative = 1e-15);
        let mut last = 1.0;
        for k in 1..30 {
            let v = theoretical_attenuation(0.5, 1.0, k);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn inner_loop_on_zero_signal() {
        let grid = SampleGrid::new(200, FS).unwrap();
        let zero = RealSignal::zeros(&grid);
        let profile = BandwidthProfile::constant(0.5, 200, FS).unwrap();
        let out = alif_inner_loop(&zero, &profile, &AlifConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert!(out.imt.samples().iter().all(|&x| x == 0.0));
    }

    fn interior_correlation(a: &RealSignal, b: &RealSignal, trim: usize) -> f64 {
        let r = trim..a.len() - trim;
        let ab: f64 = a.samples()[r.clone()].iter().zip(&b.samples()[r.clone()]).map(|(x, y)| x * y).sum();
        let aa: f64 = a.samples()[r.clone()].iter().map(|x| x * x).sum();
        let bb: f64 = b.samples()[r].iter().map(|x| x * x).sum();
        ab / (aa * bb).sqrt()
    }

    #[test]
    fn inner_loop_keeps_a_matched_tone() {
        let grid = SampleGrid::new(2000, FS).unwrap();
        let tone = synthesize_real(&IMTSpec::tone(1.0, 2.0), &grid).unwrap();
        let profile = BandwidthProfile::constant(0.5, 2000, FS).unwrap();
        let out = alif_inner_loop(&tone, &profile, &AlifConfig::default()).unwrap();
        assert!(out.converged);
        assert!(interior_correlation(&out.imt, &tone, 300) > 0.999);
    }

    #[test]
    fn inner_loop_separates_two_tones() {
        let len = 3000;
        let grid = SampleGrid::new(len, FS).unwrap();
        let low = synthesize_real(&IMTSpec::tone(1.0, 1.0), &grid).unwrap();
        let high = synthesize_real(&IMTSpec::tone(1.0, 3.0), &grid).unwrap();
        let mix = low.try_add(&high).unwrap();
        let profile = BandwidthProfile::constant(1.0 / 3.0, len, FS).unwrap();
        let config = periodic();
        let out = alif_inner_loop(&mix, &profile, &config).unwrap();
        assert!(interior_correlation(&out.imt, &high, 0) > 0.99);
        // Residual low-tone content follows the predicted decay at the stopping step.
        let project = |tone: &RealSignal| {
            out.imt.samples().iter().zip(tone.samples()).map(|(o, t)| o * t).sum::<f64>()
                / tone.samples().iter().map(|t| t * t).sum::<f64>()
        };
        let m = out.iterations as u32;
        assert_relative_eq!(project(&low), theoretical_attenuation(1.0, 3.0, m), max_relative = 1e-6);
        assert_relative_eq!(project(&high), theoretical_attenuation(3.0, 3.0, m), max_relative = 1e-6);
    }

    #[test]
    fn ramp_has_no_components() {
        let grid = SampleGrid::new(300, FS).unwrap();
        let ramp = RealSignal::from_fn(&grid, |t| 3.0 * t - 1.0);
        let dec = alif_decompose(&ramp, |_| unreachable!(), &AlifConfig::default()).unwrap();
        assert!(dec.imts.is_empty());
        assert_eq!(dec.trend, ramp);
        assert!(dec.complete);
    }

    #[test]
    fn two_tone_decomposition() {
        let len = 3000;
        let grid = SampleGrid::new(len, FS).unwrap();
        let low = synthesize_real(&IMTSpec::tone(1.0, 0.5), &grid).unwrap();
        let high = synthesize_real(&IMTSpec::tone(1.0, 3.0), &grid).unwrap();
        let mix = low.try_add(&high).unwrap();
        let mut sigmas = vec![1.0 / 3.0, 1.0 / 0.5].into_iter();
        let config = AlifConfig {
            max_outer_components: 2,
            ..AlifConfig::default()
        };
        let dec = alif_decompose(
            &mix,
            |r| BandwidthProfile::constant(sigmas.next().unwrap(), r.len(), FS),
            &config,
        )
        .unwrap();
        assert_eq!(dec.imts.len(), 2);
        assert!(interior_correlation(&dec.imts[0], &high, 300) > 0.99);
        assert!(interior_correlation(&dec.imts[1], &low, 300) > 0.99);
        let rec = dec.reconstruct();
        let err = rec.try_sub(&mix).unwrap().norm_l2() / mix.norm_l2();
        assert!(err < 1e-10);
    }

    #[test]
    fn provider_failure_returns_partial_result() {
        let grid = SampleGrid::new(500, FS).unwrap();
        let s = synthesize_real(&IMTSpec::tone(1.0, 2.0), &grid).unwrap();
        let mut calls = 0;
        let dec = alif_decompose(
            &s,
            |r| {
                calls += 1;
                if calls == 1 {
                    BandwidthProfile::constant(0.5, r.len(), FS)
                } else {
                    Err(Error::NoCurve)
                }
            },
            &AlifConfig::default(),
        )
        .unwrap();
        assert!(!dec.complete);
        assert_eq!(dec.imts.len(), 1);
        assert!(dec.failure.is_some());
        let err = dec.reconstruct().try_sub(&s).unwrap().norm_l2() / s.norm_l2();
        assert!(err < 1e-12);
    }
}
