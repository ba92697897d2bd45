//! Ridge extraction: the curve `c` maximising
//! `Σ_m log(|S(c(m), m)| / Σ|S|) − λ Σ_m |c(m) − c(m−1)|²`
//! over frames, found exactly by dynamic programming.
//!
//! The quadratic transition is a max-convolution with a parabola, computed
//! in linear time per frame from the upper envelope of shifted parabolas
//! (Felzenszwalb and Huttenlocher's distance transform).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sst::TFRGrid;

/// One frequency per TFR frame, as bin indices and Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct IFCurve {
    bins: Vec<usize>,
    frequencies: Vec<f64>,
    frame_start: f64,
    frame_step: f64,
}

impl IFCurve {
    pub fn from_bins(grid: &TFRGrid, bins: Vec<usize>) -> Result<Self> {
        if bins.len() != grid.n_frames() {
            return Err(Error::InvalidCurve(format!(
                "curve has {} frames, grid has {}",
                bins.len(),
                grid.n_frames()
            )));
        }
        if let Some(&q) = bins.iter().find(|&&q| q >= grid.n_bins()) {
            return Err(Error::InvalidCurve(format!("bin {q} outside a grid of {} bins", grid.n_bins())));
        }
        let frequencies = bins.iter().map(|&q| grid.bin_frequency(q)).collect();
        Ok(Self {
            bins,
            frequencies,
            frame_start: grid.frame_start(),
            frame_step: grid.frame_step(),
        })
    }

    /// Curve through arbitrary frequencies; bins are the nearest grid bins.
    pub fn from_frequencies(grid: &TFRGrid, frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.len() != grid.n_frames() {
            return Err(Error::InvalidCurve(format!(
                "curve has {} frames, grid has {}",
                frequencies.len(),
                grid.n_frames()
            )));
        }
        let top = grid.n_bins() as f64 - 0.5;
        let bins = frequencies
            .iter()
            .enumerate()
            .map(|(m, &f)| {
                let q = f / grid.delta_xi();
                if q.is_finite() && q >= -0.5 && q < top {
                    Ok(q.round().max(0.0) as usize)
                } else {
                    Err(Error::InvalidCurve(format!("frequency {f} Hz at frame {m} is outside the grid")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            bins,
            frequencies,
            frame_start: grid.frame_start(),
            frame_step: grid.frame_step(),
        })
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn frame_start(&self) -> f64 {
        self.frame_start
    }

    pub fn frame_step(&self) -> f64 {
        self.frame_step
    }

    pub fn frame_time(&self, m: usize) -> f64 {
        self.frame_start + m as f64 * self.frame_step
    }

    pub fn mean_frequency(&self) -> f64 {
        self.frequencies.iter().sum::<f64>() / self.frequencies.len() as f64
    }

    /// `Σ_m |c(m) − c(m−1)|²` in bins.
    pub fn total_squared_jump(&self) -> f64 {
        self.bins
            .windows(2)
            .map(|w| (w[1] as f64 - w[0] as f64).powi(2))
            .sum()
    }

    fn check_grid(&self, grid: &TFRGrid) -> Result<()> {
        if self.len() != grid.n_frames() {
            return Err(Error::InvalidCurve(format!(
                "prior has {} frames, grid has {}",
                self.len(),
                grid.n_frames()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Jump penalty λ, per squared bin.
    pub lambda: f64,
    #[serde(skip)]
    pub prior: Option<IFCurve>,
    /// Half-width in Hz of the band searched around the prior.
    pub prior_halfwidth: f64,
    /// Added to magnitudes before the log, relative to the grid maximum.
    pub magnitude_floor: f64,
    /// Largest allowed jump in bins between frames; `None` means unrestricted.
    pub max_jump: Option<usize>,
    /// Bins below this frequency are never selected.
    pub min_frequency: f64,
    /// A ridge is meaningful when its mean magnitude is at least this
    /// multiple of the grid mean.
    pub meaningfulness: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            prior: None,
            prior_halfwidth: 0.5,
            magnitude_floor: 1e-12,
            max_jump: None,
            min_frequency: 0.0,
            meaningfulness: 3.0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("λ must be nonnegative, got {}", self.lambda)));
        }
        if self.prior.is_some() && !(self.prior_halfwidth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior half-width must be positive, got {}",
                self.prior_halfwidth
            )));
        }
        if !(self.magnitude_floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "magnitude floor must be positive, got {}",
                self.magnitude_floor
            )));
        }
        Ok(())
    }

    pub fn with_prior(mut self, prior: IFCurve) -> Self {
        self.prior = Some(prior);
        self
    }
}

/// Inclusive admissible bin range per frame from the prior band and the
/// frequency floor, further raised by `lower_bins` when given.
fn admissible_ranges(grid: &TFRGrid, config: &ExtractionConfig, lower_bins: Option<&[usize]>) -> Result<Vec<(usize, usize)>> {
    let n = grid.n_bins();
    let dxi = grid.delta_xi();
    let tol = 1e-9;
    let floor_bin = ((config.min_frequency / dxi) - tol).ceil().max(0.0) as usize;
    if let Some(prior) = &config.prior {
        prior.check_grid(grid)?;
    }
    (0..grid.n_frames())
        .map(|m| {
            let (mut lo, mut hi) = (floor_bin, n - 1);
            if let Some(prior) = &config.prior {
                let c = prior.frequencies()[m];
                lo = lo.max(((c - config.prior_halfwidth) / dxi - tol).ceil().max(0.0) as usize);
                let top = ((c + config.prior_halfwidth) / dxi + tol).floor();
                if top < 0.0 {
                    return Err(Error::NoCurve);
                }
                hi = hi.min(top as usize);
            }
            if let Some(lower) = lower_bins {
                lo = lo.max(lower[m]);
            }
            if lo > hi {
                Err(Error::NoCurve)
            } else {
                Ok((lo, hi))
            }
        })
        .collect()
}

/// Exact maximiser of the ridge objective.
pub fn extract_curve(tfr: &TFRGrid, config: &ExtractionConfig) -> Result<IFCurve> {
    extract_curve_scored(tfr, config).map(|(curve, _)| curve)
}

/// As [`extract_curve`], also returning the objective value (including the
/// `−N log Σ|S|` normalisation).
pub fn extract_curve_scored(tfr: &TFRGrid, config: &ExtractionConfig) -> Result<(IFCurve, f64)> {
    extract_with_lower_bound(tfr, config, None)
}

pub(crate) fn extract_with_lower_bound(
    tfr: &TFRGrid,
    config: &ExtractionConfig,
    lower_bins: Option<&[usize]>,
) -> Result<(IFCurve, f64)> {
    config.validate()?;
    let max = tfr.max_magnitude();
    if max == 0.0 {
        return Err(Error::NoCurve);
    }
    let floor = config.magnitude_floor * max;
    let ranges = admissible_ranges(tfr, config, lower_bins)?;
    let n_bins = tfr.n_bins();
    let n_frames = tfr.n_frames();
    let score = |m: usize, q: usize| (tfr.get(q, m).norm() + floor).ln();

    let mut back = vec![u32::MAX; n_bins * n_frames];
    let mut best = vec![f64::NEG_INFINITY; n_bins];
    let mut next = vec![f64::NEG_INFINITY; n_bins];
    let mut envelope = Envelope::with_capacity(n_bins);
    let (lo, hi) = ranges[0];
    for q in lo..=hi {
        best[q] = score(0, q);
    }
    let mut previous = ranges[0];
    for m in 1..n_frames {
        let (lo, hi) = ranges[m];
        next.fill(f64::NEG_INFINITY);
        let back_row = &mut back[m * n_bins..(m + 1) * n_bins];
        match (config.max_jump, config.lambda) {
            (Some(jump), _) => {
                for q in lo..=hi {
                    let a = q.saturating_sub(jump).max(previous.0);
                    let b = (q + jump).min(previous.1);
                    let mut choice: Option<(usize, f64)> = None;
                    for p in (a..=b).filter(|_| a <= b) {
                        let v = best[p] - config.lambda * (q as f64 - p as f64).powi(2);
                        if v > f64::NEG_INFINITY && choice.map_or(true, |(_, c)| v > c) {
                            choice = Some((p, v));
                        }
                    }
                    if let Some((p, v)) = choice {
                        next[q] = v + score(m, q);
                        back_row[q] = p as u32;
                    }
                }
            }
            (None, lambda) if lambda == 0.0 => {
                let (p, v) = argmax(&best[previous.0..=previous.1]);
                let p = p + previous.0;
                for q in lo..=hi {
                    next[q] = v + score(m, q);
                    back_row[q] = p as u32;
                }
            }
            (None, lambda) => {
                envelope.build(&best, previous, lambda);
                envelope.query(lo..=hi, |q, p, v| {
                    next[q] = v + score(m, q);
                    back_row[q] = p as u32;
                });
            }
        }
        if next[lo..=hi].iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::NoCurve);
        }
        std::mem::swap(&mut best, &mut next);
        previous = (lo, hi);
    }
    let (last, _) = argmax(&best[previous.0..=previous.1]);
    let mut bins = vec![0usize; n_frames];
    bins[n_frames - 1] = last + previous.0;
    for m in (1..n_frames).rev() {
        bins[m - 1] = back[m * n_bins + bins[m]] as usize;
    }
    let objective = objective(tfr, &bins, config.lambda, floor);
    Ok((IFCurve::from_bins(tfr, bins)?, objective))
}

/// First maximum (lowest index on ties).
fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
}

/// Objective of a bin sequence with an absolute magnitude floor.
pub fn objective(tfr: &TFRGrid, bins: &[usize], lambda: f64, floor: f64) -> f64 {
    let fit: f64 = bins.iter().enumerate().map(|(m, &q)| (tfr.get(q, m).norm() + floor).ln()).sum();
    let jumps: f64 = bins.windows(2).map(|w| (w[1] as f64 - w[0] as f64).powi(2)).sum();
    fit - lambda * jumps - bins.len() as f64 * tfr.total_magnitude().ln()
}

/// Mean magnitude of the grid along a curve.
pub fn ridge_mean_magnitude(tfr: &TFRGrid, curve: &IFCurve) -> f64 {
    curve.bins().iter().enumerate().map(|(m, &q)| tfr.get(q, m).norm()).sum::<f64>() / curve.len() as f64
}

pub fn grid_mean_magnitude(tfr: &TFRGrid) -> f64 {
    tfr.total_magnitude() / tfr.values().len() as f64
}

/// Upper envelope of `p ↦ D(p) − λ(q − p)²` over the admissible `p`.
struct Envelope {
    positions: Vec<usize>,
    bounds: Vec<f64>,
    values: Vec<f64>,
    lambda: f64,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            positions: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
            values: Vec::with_capacity(n),
            lambda: 1.0,
        }
    }

    fn build(&mut self, d: &[f64], (lo, hi): (usize, usize), lambda: f64) {
        self.positions.clear();
        self.bounds.clear();
        self.values.clear();
        self.lambda = lambda;
        // Minimise f(p) + λ(q − p)² with f = −D.
        let key = |p: usize, f: f64| f + lambda * (p as f64) * (p as f64);
        for p in lo..=hi {
            if d[p] == f64::NEG_INFINITY {
                continue;
            }
            let f = -d[p];
            loop {
                let Some(&top) = self.positions.last() else {
                    self.positions.push(p);
                    self.values.push(f);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let ft = *self.values.last().unwrap();
                let s = (key(p, f) - key(top, ft)) / (2.0 * lambda * (p as f64 - top as f64));
                if s <= *self.bounds.last().unwrap() {
                    self.positions.pop();
                    self.values.pop();
                    self.bounds.pop();
                } else {
                    self.positions.push(p);
                    self.values.push(f);
                    self.bounds.push(s);
                    break;
                }
            }
        }
    }

    /// Calls `emit(q, p*, max_p D(p) − λ(q − p)²)` for increasing `q`.
    fn query(&self, qs: std::ops::RangeInclusive<usize>, mut emit: impl FnMut(usize, usize, f64)) {
        if self.positions.is_empty() {
            return;
        }
        let mut k = 0;
        for q in qs {
            let x = q as f64;
            while k + 1 < self.positions.len() && self.bounds[k + 1] < x {
                k += 1;
            }
            let p = self.positions[k];
            let v = -(self.values[k] + self.lambda * (x - p as f64).powi(2));
            emit(q, p, v);
        }
    }
}
