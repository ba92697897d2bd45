//! Synthetic benchmark: signals with known components, seeded noise, and
//! the relative error of each method's estimate of each component.

mod blind;
mod config;
mod plot;
mod presets;
mod report;

pub use blind::{decompose_blind, BlindDecomposition, ComponentSummary};
pub use config::{ExperimentConfig, Method, MethodParams, NoiseLevel, SCHEMA_VERSION};
pub use plot::{emit_tfr_plotdata, ridge_frequency_moment};
pub use presets::{ComponentExpr, Preset, SignalSpec};
pub use report::{emit_report, BenchmarkReport, ErrorRecord, MethodStats, RealizationInfo, ReportFormat, SnrStats};

use std::time::Instant;

use rayon::prelude::*;

use crate::curve::{extract_curve, ExtractionConfig, IFCurve};
use crate::error::{Error, Result};
use crate::sift::{sift_decompose, OscillationTest, SIFTConfig};
use crate::signal::{add_noise, relative_error_l2, snr_db, synthesize_real, NoiseSpec, RealSignal, SampleGrid};
use crate::sst::{bandpass_reconstruct, reconstruct_along_curve, synchrosqueeze, TFRGrid, WindowSpec};

/// The clean signal of an experiment with its components and their iFs.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub clean: RealSignal,
    /// Highest frequency first.
    pub components: Vec<RealSignal>,
    /// iF of each component at every sample, Hz.
    pub frequencies: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let grid = SampleGrid::from_duration(config.duration, config.sample_rate)?;
        let specs = config.signal.components()?;
        let components = specs
            .iter()
            .map(|s| synthesize_real(s, &grid))
            .collect::<Result<Vec<_>>>()?;
        let frequencies = specs
            .iter()
            .map(|s| grid.times().map(|t| (s.frequency)(t)).collect())
            .collect();
        let mut clean = RealSignal::zeros(&grid);
        for c in &components {
            clean = clean.try_add(c)?;
        }
        Ok(Self { clean, components, frequencies })
    }

    /// Noise standard deviation for the configured level.
    pub fn noise_sd(&self, noise: Option<NoiseLevel>) -> f64 {
        match noise {
            None => 0.0,
            Some(NoiseLevel::StandardDeviation(sd)) => sd,
            Some(NoiseLevel::TargetSnrDb(snr)) => {
                self.clean.norm_l2() / ((self.clean.len() as f64).sqrt() * 10f64.powf(snr / 20.0))
            }
        }
    }
}

fn prior_extraction(params: &MethodParams, grid: &TFRGrid, prior: &[f64]) -> Result<ExtractionConfig> {
    Ok(ExtractionConfig {
        lambda: params.lambda,
        prior_halfwidth: params.prior_halfwidth,
        ..ExtractionConfig::default()
    }
    .with_prior(IFCurve::from_frequencies(grid, prior.to_vec())?))
}

/// Real component estimated from an SST grid along a ridge: twice the real
/// part of the band sum, since only positive frequencies are summed.
pub fn sst_estimate(sst: &TFRGrid, curve: &IFCurve, band_b: f64, window: &WindowSpec) -> Result<RealSignal> {
    let band = reconstruct_along_curve(sst, curve, band_b, window)?;
    Ok(band.signal.map(|z| 2.0 * z.re))
}

/// Estimates of every component by one method, using the true iFs as
/// priors for ridge extraction and to place the BPF bands.
pub fn estimate_components(
    method: Method,
    signal: &RealSignal,
    priors: &[Vec<f64>],
    params: &MethodParams,
) -> Result<Vec<RealSignal>> {
    match method {
        Method::Bpf => priors
            .iter()
            .map(|p| {
                let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &f| (a.min(f), b.max(f)));
                let nyquist = signal.sample_rate() / 2.0;
                bandpass_reconstruct(signal, (lo - params.band_b).max(0.0), (hi + params.band_b).min(nyquist))
            })
            .collect(),
        Method::Sst | Method::SstTuned => {
            let length = if method == Method::Sst {
                params.window_length
            } else {
                params.tuned_window_length
            };
            let window = WindowSpec::new(length)?;
            let sst = synchrosqueeze(signal, &window, &params.sst)?;
            priors
                .iter()
                .map(|p| {
                    let curve = extract_curve(&sst, &prior_extraction(params, &sst, p)?)?;
                    sst_estimate(&sst, &curve, params.band_b, &window)
                })
                .collect()
        }
        Method::Sift => {
            let config = sift_config(params, priors.to_vec())?;
            let result = sift_decompose(signal, &config)?;
            if result.imts.len() != priors.len() {
                return Err(Error::NoCurve);
            }
            Ok(result.imts)
        }
    }
}

/// SIFT configuration for a benchmark run: one pass per known component.
pub fn sift_config(params: &MethodParams, priors: Vec<Vec<f64>>) -> Result<SIFTConfig> {
    let defaults = SIFTConfig::default();
    Ok(SIFTConfig {
        sst: params.sst,
        window: WindowSpec::new(params.window_length)?,
        extraction: ExtractionConfig {
            lambda: params.lambda,
            prior_halfwidth: params.prior_halfwidth,
            ..defaults.extraction.clone()
        },
        xi: params.xi,
        max_components: priors.len().max(1),
        oscillation_test: OscillationTest::ComponentCap,
        priors,
        ..defaults
    })
}

fn run_realization(
    config: &ExperimentConfig,
    truth: &GroundTruth,
    sd: f64,
    index: usize,
) -> (RealizationInfo, Vec<ErrorRecord>) {
    let seed = config.seed.wrapping_add(index as u64);
    let (noisy, noise) = add_noise(&truth.clean, &NoiseSpec::new(sd, seed)).expect("noise level validated");
    let snr = if sd > 0.0 { snr_db(&truth.clean, &noise).ok() } else { None };
    let mut records = Vec::new();
    for &method in &config.methods {
        let estimates = estimate_components(method, &noisy, &truth.frequencies, &config.params);
        for (component, reference) in truth.components.iter().enumerate() {
            let outcome = estimates
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|est| relative_error_l2(&est[component], reference, config.trim).map_err(|e| e.to_string()));
            let (error, failure) = match outcome {
                Ok(e) if e.is_finite() => (Some(e), None),
                Ok(e) => (None, Some(format!("non-finite error {e}"))),
                Err(msg) => (None, Some(msg)),
            };
            records.push(ErrorRecord { realization: index, method, component, error, failure });
        }
    }
    (RealizationInfo { index, seed, snr_db: snr }, records)
}

/// Runs every realisation (in parallel over `config.workers` threads) and
/// aggregates in realisation order, so the report does not depend on the
/// worker count.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let truth = GroundTruth::new(config)?;
    for f in &truth.frequencies {
        if f.iter().any(|&v| !(v > 0.0 && v <= config.params.sst.max_frequency)) {
            return Err(Error::InvalidConfig(format!(
                "component frequencies must lie in (0, {}] Hz",
                config.params.sst.max_frequency
            )));
        }
    }
    let sd = truth.noise_sd(config.noise);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let started = Instant::now();
    let results: Vec<(RealizationInfo, Vec<ErrorRecord>)> = pool.install(|| {
        (0..config.realizations)
            .into_par_iter()
            .map(|r| run_realization(config, &truth, sd, r))
            .collect()
    });
    let runtime = started.elapsed().as_secs_f64();
    let (realizations, errors): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(BenchmarkReport::from_records(
        config.methods.clone(),
        truth.components.len(),
        config.seed,
        realizations,
        errors.into_iter().flatten().collect(),
        runtime,
    ))
}
