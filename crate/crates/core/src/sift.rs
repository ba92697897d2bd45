//! Synchrosqueezing-driven iterative filtering.
//!
//! Each pass squeezes the remainder, takes the highest-frequency meaningful
//! ridge, turns it into a bandwidth profile `σ(t) = ξ / ν(t)` and sifts one
//! component out with ALIF. The remainder after the last pass is the
//! residual, so components and residual always add back to the input.

use serde::{Deserialize, Serialize};

use crate::alif::{alif_inner_loop, extrema_of, iterate_operator, AlifConfig, BandwidthProfile};
use crate::curve::{extract_curve, extract_with_lower_bound, grid_mean_magnitude, ridge_mean_magnitude, ExtractionConfig, IFCurve};
use crate::error::{Error, Result};
use crate::signal::{Sample, Signal};
use crate::sst::{synchrosqueeze, SSTConfig, TFRGrid, WindowSpec};

/// What decides that the remainder still holds an oscillatory component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationTest {
    /// At least two extrema and a meaningful ridge.
    #[default]
    ExtremaCount,
    /// A meaningful ridge.
    RidgeEnergy,
    /// Always extract until `max_components`.
    ComponentCap,
}

/// Low-pass applied before sifting: the component is sifted from
/// `r − (I − ℒ_{ratio/ν})^K r`, which removes content well above the
/// ridge (mostly broadband noise) that a pure high-pass would keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighFrequencyGuard {
    pub ratio: f64,
    pub iterations: usize,
}

impl Default for HighFrequencyGuard {
    fn default() -> Self {
        Self { ratio: 0.55, iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SIFTConfig {
    pub sst: SSTConfig,
    pub window: WindowSpec,
    pub extraction: ExtractionConfig,
    pub alif: AlifConfig,
    pub xi: f64,
    pub max_components: usize,
    pub oscillation_test: OscillationTest,
    /// Per-pass prior iF in Hz, one value per sample, highest frequency first.
    #[serde(skip)]
    pub priors: Vec<Vec<f64>>,
    pub guard: Option<HighFrequencyGuard>,
    /// Ridges weaker than this fraction of the first ridge end the loop.
    pub min_relative_ridge: f64,
    /// Width of the moving median applied to each ridge, seconds.
    pub smoothing: f64,
}

impl Default for SIFTConfig {
    fn default() -> Self {
        Self {
            sst: SSTConfig::default(),
            window: WindowSpec::default(),
            extraction: ExtractionConfig {
                min_frequency: 0.1,
                ..ExtractionConfig::default()
            },
            alif: AlifConfig::default(),
            xi: 1.4,
            max_components: 8,
            oscillation_test: OscillationTest::default(),
            priors: Vec::new(),
            guard: Some(HighFrequencyGuard::default()),
            min_relative_ridge: 0.05,
            smoothing: 0.5,
        }
    }
}

impl SIFTConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidConfig(format!("ξ must be positive, got {}", self.xi)));
        }
        if self.max_components == 0 {
            return Err(Error::InvalidConfig("max_components must be at least 1".into()));
        }
        if let Some(g) = &self.guard {
            if !(g.ratio > 0.0) {
                return Err(Error::InvalidConfig(format!("guard ratio must be positive, got {}", g.ratio)));
            }
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::InvalidConfig(format!("smoothing width must be nonnegative, got {}", self.smoothing)));
        }
        self.sst.validate()?;
        self.extraction.validate()?;
        self.alif.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostics {
    pub inner_iterations: usize,
    pub converged: bool,
    pub ridge_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SIFTResult<T = f64> {
    /// Highest frequency first.
    pub imts: Vec<Signal<T>>,
    pub residual: Signal<T>,
    /// Smoothed ridges used to build each profile.
    pub curves: Vec<IFCurve>,
    pub diagnostics: Vec<ComponentDiagnostics>,
    /// Set when no curve could be extracted on the first pass.
    pub first_pass_failed: bool,
}

impl<T: Sample> SIFTResult<T> {
    pub fn reconstruct(&self) -> Signal<T> {
        let mut acc = self.residual.samples().to_vec();
        for imt in &self.imts {
            for (a, &x) in acc.iter_mut().zip(imt.samples()) {
                *a += x;
            }
        }
        self.residual.with_samples(acc)
    }
}

/// `σ(t_j) = ξ / ν(t_j)` in seconds.
pub fn profile_from_curve(curve: &IFCurve, xi: f64) -> Result<BandwidthProfile> {
    if let Some((m, f)) = curve.frequencies().iter().enumerate().find(|(_, f)| !(**f > 0.0)) {
        return Err(Error::InvalidCurve(format!("frequency {f} Hz at frame {m} is not positive")));
    }
    let sigma = curve.frequencies().iter().map(|f| xi / f).collect();
    BandwidthProfile::new(sigma, 1.0 / curve.frame_step())
}

fn is_meaningful(tfr: &TFRGrid, curve: &IFCurve, threshold: f64) -> bool {
    ridge_mean_magnitude(tfr, curve) >= threshold * grid_mean_magnitude(tfr)
}

/// The ridge to extract next.
///
/// With a prior the ridge is searched in the prior band only. Without one,
/// the best ridge is found, then repeatedly the best ridge lying at least
/// `prior_halfwidth` above the current one; the last meaningful ridge wins.
pub fn highest_frequency_curve(tfr: &TFRGrid, config: &ExtractionConfig) -> Result<IFCurve> {
    if config.prior.is_some() {
        return extract_curve(tfr, config);
    }
    let mut current = extract_curve(tfr, config)?;
    if !is_meaningful(tfr, &current, config.meaningfulness) {
        return Err(Error::NoCurve);
    }
    let margin = (config.prior_halfwidth / tfr.delta_xi()).ceil().max(1.0) as usize;
    loop {
        let lower: Vec<usize> = current.bins().iter().map(|&q| q + margin).collect();
        if lower.iter().any(|&q| q >= tfr.n_bins()) {
            return Ok(current);
        }
        match extract_with_lower_bound(tfr, config, Some(&lower)) {
            Ok((above, _)) if is_meaningful(tfr, &above, config.meaningfulness) => current = above,
            Ok(_) | Err(Error::NoCurve) => return Ok(current),
            Err(e) => return Err(e),
        }
    }
}

/// Running median over `width` samples (shrinking at the ends).
pub fn moving_median(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut window = Vec::with_capacity(2 * half + 1);
    (0..values.len())
        .map(|j| {
            window.clear();
            window.extend_from_slice(&values[j.saturating_sub(half)..(j + half + 1).min(values.len())]);
            window.sort_unstable_by(f64::total_cmp);
            let n = window.len();
            if n % 2 == 1 {
                window[n / 2]
            } else {
                0.5 * (window[n / 2 - 1] + window[n / 2])
            }
        })
        .collect()
}

fn smooth_curve(tfr: &TFRGrid, curve: &IFCurve, seconds: f64) -> Result<IFCurve> {
    let width = (seconds / curve.frame_step()).round() as usize;
    if width < 2 {
        return Ok(curve.clone());
    }
    IFCurve::from_frequencies(tfr, moving_median(curve.frequencies(), width | 1))
}

/// Decomposes `signal` into components ordered from high to low frequency.
pub fn sift_decompose<T: Sample>(signal: &Signal<T>, config: &SIFTConfig) -> Result<SIFTResult<T>> {
    config.validate()?;
    if signal.len() <= config.window.length() {
        return Err(Error::InvalidWindow(format!(
            "window of {} samples does not fit a signal of {} samples",
            config.window.length(),
            signal.len()
        )));
    }
    let mut remainder = signal.clone();
    let mut result = SIFTResult {
        imts: Vec::new(),
        residual: signal.clone(),
        curves: Vec::new(),
        diagnostics: Vec::new(),
        first_pass_failed: false,
    };
    let mut first_ridge: Option<f64> = None;
    let test = config.oscillation_test;
    for pass in 0..config.max_components {
        if test == OscillationTest::ExtremaCount && extrema_of(&remainder) < 2 {
            break;
        }
        let sst = synchrosqueeze(&remainder, &config.window, &config.sst)?;
        let mut extraction = config.extraction.clone();
        if let Some(prior) = config.priors.get(pass) {
            extraction.prior = Some(IFCurve::from_frequencies(&sst, prior.clone())?);
        }
        let curve = if test == OscillationTest::ComponentCap || extraction.prior.is_some() {
            extract_curve(&sst, &extraction)
        } else {
            highest_frequency_curve(&sst, &extraction)
        };
        let curve = match curve {
            Ok(c) => c,
            Err(Error::NoCurve) => {
                result.first_pass_failed = pass == 0;
                break;
            }
            Err(e) => return Err(e),
        };
        let ridge_mean = ridge_mean_magnitude(&sst, &curve);
        if test != OscillationTest::ComponentCap {
            if let Some(first) = first_ridge {
                if ridge_mean < config.min_relative_ridge * first {
                    break;
                }
            }
        }
        first_ridge.get_or_insert(ridge_mean);

        let curve = smooth_curve(&sst, &curve, config.smoothing)?;
        let profile = profile_from_curve(&curve, config.xi)?;
        let band_input = match &config.guard {
            Some(guard) => {
                let upper = BandwidthProfile::new(
                    curve.frequencies().iter().map(|f| guard.ratio / f).collect(),
                    profile.sample_rate(),
                )?;
                let high = iterate_operator(&remainder, &upper, guard.iterations, &config.alif)?;
                remainder.try_sub(&high)?
            }
            None => remainder.clone(),
        };
        let outcome = alif_inner_loop(&band_input, &profile, &config.alif)?;
        remainder = remainder.try_sub(&outcome.imt)?;
        result.imts.push(outcome.imt);
        result.curves.push(curve);
        result.diagnostics.push(ComponentDiagnostics {
            inner_iterations: outcome.iterations,
            converged: outcome.converged,
            ridge_mean,
        });
    }
    result.residual = remainder;
    Ok(result)
}

/// Sum of the synchrosqueezed transforms of the components.
pub fn sift_tfr<T: Sample>(imts: &[Signal<T>], window: &WindowSpec, config: &SSTConfig) -> Result<TFRGrid> {
    let (first, rest) = imts
        .split_first()
        .ok_or_else(|| Error::InvalidConfig("SIFT-TFR needs at least one component".into()))?;
    let mut total = synchrosqueeze(first, window, config)?;
    for imt in rest {
        first.check_same_grid(imt)?;
        total.try_add_assign(&synchrosqueeze(imt, window, config)?)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_real, GaussianStream, IMTSpec, RealSignal, SampleGrid};
    use num_complex::Complex64;

    const FS: f64 = 100.0;

    fn flat_curve(freq: f64, len: usize) -> IFCurve {
        let grid = TFRGrid::zeros(1001, len, 0.01, 0.0, 1.0 / FS).unwrap();
        IFCurve::from_frequencies(&grid, vec![freq; len]).unwrap()
    }

    #[test]
    fn profile_values() {
        let p = profile_from_curve(&flat_curve(1.0, 50), 1.0).unwrap();
        assert!(p.sigma().iter().all(|&s| s == 1.0));
        let p = profile_from_curve(&flat_curve(2.0, 50), 1.4).unwrap();
        assert!(p.sigma().iter().all(|&s| (s - 0.7).abs() < 1e-15));
        let grid = TFRGrid::zeros(1001, 100, 0.01, 0.0, 1.0 / FS).unwrap();
        let rising = IFCurve::from_frequencies(&grid, (0..100).map(|j| 1.0 + 0.01 * j as f64).collect()).unwrap();
        let p = profile_from_curve(&rising, 1.4).unwrap();
        assert!(p.sigma().windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(profile_from_curve(&flat_curve(0.0, 10), 1.0), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn median_filter() {
        assert_eq!(moving_median(&[1.0, 9.0, 1.0, 1.0, 5.0], 3), vec![5.0, 1.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn trend_only_signal() {
        let grid = SampleGrid::new(800, FS).unwrap();
        let ramp = RealSignal::from_fn(&grid, |t| 0.5 * t + 1.0);
        let out = sift_decompose(&ramp, &SIFTConfig::default()).unwrap();
        assert!(out.imts.is_empty());
        assert_eq!(out.residual, ramp);
        assert!(!out.first_pass_failed);
    }

    #[test]
    fn tone_plus_offset() {
        let grid = SampleGrid::new(1500, FS).unwrap();
        let tone = synthesize_real(&IMTSpec::tone(1.0, 2.0), &grid).unwrap();
        let signal = RealSignal::from_fn(&grid, |t| 0.7 + (2.0 * std::f64::consts::PI * 2.0 * t).cos());
        let out = sift_decompose(&signal, &SIFTConfig::default()).unwrap();
        assert_eq!(out.imts.len(), 1, "{:?}", out.diagnostics);
        let r = 200..1300;
        let imt = &out.imts[0].samples()[r.clone()];
        let t = &tone.samples()[r.clone()];
        let corr = imt.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
            / (imt.iter().map(|a| a * a).sum::<f64>() * t.iter().map(|b| b * b).sum::<f64>()).sqrt();
        assert!(corr > 0.99);
        let mean = out.residual.samples()[r.clone()].iter().sum::<f64>() / r.len() as f64;
        assert!((mean - 0.7).abs() < 0.02);
        let err = out.reconstruct().try_sub(&signal).unwrap().norm_l2() / signal.norm_l2();
        assert!(err < 1e-10);
    }

    #[test]
    fn tfr_of_nothing_is_an_error() {
        let empty: Vec<RealSignal> = Vec::new();
        assert!(sift_tfr(&empty, &WindowSpec::default(), &SSTConfig::default()).is_err());
    }

    #[test]
    fn pure_noise_grids_are_not_meaningful() {
        let trials = 40;
        let mut rejected = 0;
        for seed in 0..trials {
            let mut rng = GaussianStream::new(seed);
            let (bins, frames) = (201, 300);
            let values = (0..bins * frames)
                .map(|_| Complex64::new(rng.next_normal(), rng.next_normal()))
                .collect();
            let grid = TFRGrid::new(values, bins, frames, 0.01, 0.0, 0.01).unwrap();
            if matches!(highest_frequency_curve(&grid, &ExtractionConfig::default()), Err(Error::NoCurve)) {
                rejected += 1;
            }
        }
        assert!(rejected as f64 >= 0.9 * trials as f64, "rejected {rejected} of {trials}");
    }
}
