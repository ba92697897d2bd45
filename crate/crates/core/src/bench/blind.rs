use serde::Serialize;

use super::config::{Method, MethodParams};
use super::sift_config;
use crate::curve::{ridge_mean_magnitude, IFCurve};
use crate::error::{Error, Result};
use crate::sift::{highest_frequency_curve, sift_decompose, OscillationTest};
use crate::signal::RealSignal;
use crate::sst::{bandpass_reconstruct, synchrosqueeze, WindowSpec};

/// Components found without ground truth, highest frequency first.
#[derive(Debug, Clone)]
pub struct BlindDecomposition {
    pub components: Vec<RealSignal>,
    pub residual: RealSignal,
    pub curves: Vec<IFCurve>,
    pub diagnostics: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub mean_frequency: f64,
    pub inner_iterations: Option<usize>,
    pub converged: Option<bool>,
}

/// Decomposes a signal with no prior knowledge of its components.
///
/// SIFT runs its own loop. SST and BPF share one squeezed transform: ridges
/// are taken highest first, each one's band is cleared before the next
/// search, and the search stops when no meaningful ridge is left or a ridge
/// is weaker than `min_relative_ridge` of the first. SST reconstructs along
/// each ridge; BPF keeps the band spanned by the ridge, widened by `band_b`.
///
/// Fails with [`Error::NoCurve`] when no component is found.
pub fn decompose_blind(
    method: Method,
    signal: &RealSignal,
    params: &MethodParams,
    max_components: usize,
) -> Result<BlindDecomposition> {
    let mut config = sift_config(params, Vec::new())?;
    config.max_components = max_components.max(1);
    config.oscillation_test = OscillationTest::default();
    if method == Method::Sift {
        let result = sift_decompose(signal, &config)?;
        if result.imts.is_empty() {
            return Err(Error::NoCurve);
        }
        let diagnostics = result
            .curves
            .iter()
            .zip(&result.diagnostics)
            .map(|(c, d)| ComponentSummary {
                mean_frequency: c.mean_frequency(),
                inner_iterations: Some(d.inner_iterations),
                converged: Some(d.converged),
            })
            .collect();
        return Ok(BlindDecomposition {
            components: result.imts,
            residual: result.residual,
            curves: result.curves,
            diagnostics,
        });
    }
    let length = if method == Method::SstTuned { params.tuned_window_length } else { params.window_length };
    let window = WindowSpec::new(length)?;
    let sst = synchrosqueeze(signal, &window, &params.sst)?;
    let mut search = sst.clone();
    let mut curves = Vec::new();
    let mut first_ridge = None;
    while curves.len() < config.max_components {
        let curve = match highest_frequency_curve(&search, &config.extraction) {
            Ok(c) => c,
            Err(Error::NoCurve) => break,
            Err(e) => return Err(e),
        };
        let ridge = ridge_mean_magnitude(&sst, &curve);
        if ridge < config.min_relative_ridge * *first_ridge.get_or_insert(ridge) {
            break;
        }
        search.suppress_band(curve.frequencies(), params.prior_halfwidth)?;
        curves.push(curve);
    }
    if curves.is_empty() {
        return Err(Error::NoCurve);
    }
    let components = curves
        .iter()
        .map(|curve| match method {
            Method::Bpf => {
                let (lo, hi) = curve
                    .frequencies()
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &f| (a.min(f), b.max(f)));
                let nyquist = signal.sample_rate() / 2.0;
                bandpass_reconstruct(signal, (lo - params.band_b).max(0.0), (hi + params.band_b).min(nyquist))
            }
            _ => super::sst_estimate(&sst, curve, params.band_b, &window),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut residual = signal.clone();
    for c in &components {
        residual = residual.try_sub(c)?;
    }
    let diagnostics = curves
        .iter()
        .map(|c| ComponentSummary { mean_frequency: c.mean_frequency(), inner_iterations: None, converged: None })
        .collect();
    Ok(BlindDecomposition { components, residual, curves, diagnostics })
}
