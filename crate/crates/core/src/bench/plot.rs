use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sst::TFRGrid;

/// Writes `magnitude.csv` (one row per frequency bin, one column per frame),
/// `times.csv` and `frequencies.csv` into `dir`.
pub fn emit_tfr_plotdata(grid: &TFRGrid, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join("magnitude.csv"))?;
    for q in 0..grid.n_bins() {
        w.write_record((0..grid.n_frames()).map(|m| grid.get(q, m).norm().to_string()))?;
    }
    w.flush()?;
    let column = |values: Vec<f64>| values.iter().map(|v| format!("{v}\n")).collect::<String>();
    std::fs::write(dir.join("times.csv"), column(grid.frame_times()))?;
    std::fs::write(dir.join("frequencies.csv"), column(grid.bin_frequencies()))?;
    Ok(())
}

/// Magnitude-weighted second moment of `η − ν(t_m)` over bins within
/// `halfwidth` of the reference iF `ν`, pooled over `frames`.
///
/// Small values mean the energy near the ridge sits tightly on it.
pub fn ridge_frequency_moment(tfr: &TFRGrid, reference: &[f64], halfwidth: f64, frames: Range<usize>) -> Result<f64> {
    if reference.len() != tfr.n_frames() || frames.end > tfr.n_frames() || frames.is_empty() {
        return Err(Error::mismatch(
            format!("reference over {} frames", tfr.n_frames()),
            format!("{} values, frames {frames:?}", reference.len()),
        ));
    }
    let mut weight = 0.0;
    let mut moment = 0.0;
    for m in frames {
        let nu = reference[m];
        let lo = ((nu - halfwidth) / tfr.delta_xi()).ceil().max(0.0) as usize;
        let hi = (((nu + halfwidth) / tfr.delta_xi()).floor() as usize).min(tfr.n_bins() - 1);
        for q in lo..=hi {
            let a = tfr.get(q, m).norm();
            weight += a;
            moment += a * (tfr.bin_frequency(q) - nu).powi(2);
        }
    }
    if weight == 0.0 {
        return Err(Error::UndefinedError);
    }
    Ok(moment / weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn plot_files_have_grid_shape() {
        let values = vec![
            Complex64::new(3.0, 4.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(-1.0 / 3.0, 0.0),
            Complex64::new(0.0, 2.0),
        ];
        let grid = TFRGrid::new(values, 2, 2, 0.5, 1.0, 0.25).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_tfr_plotdata(&grid, dir.path()).unwrap();
        let mags = std::fs::read_to_string(dir.path().join("magnitude.csv")).unwrap();
        let rows: Vec<Vec<f64>> = mags
            .lines()
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        // Rows are bins, columns frames; stored frame-major as [f0b0, f0b1, f1b0, f1b1].
        assert_eq!(rows, vec![vec![5.0, 1.0 / 3.0], vec![0.1, 2.0]]);
        let times = std::fs::read_to_string(dir.path().join("times.csv")).unwrap();
        assert_eq!(times, "1\n1.25\n");
        let freqs = std::fs::read_to_string(dir.path().join("frequencies.csv")).unwrap();
        assert_eq!(freqs, "0\n0.5\n");
    }

    #[test]
    fn moment_of_a_spike_on_the_ridge_is_zero() {
        let mut values = vec![Complex64::default(); 10 * 3];
        for m in 0..3 {
            values[m * 10 + 4] = Complex64::new(1.0, 0.0);
        }
        let grid = TFRGrid::new(values.clone(), 10, 3, 0.1, 0.0, 1.0).unwrap();
        assert!(ridge_frequency_moment(&grid, &[0.4; 3], 0.25, 0..3).unwrap() < 1e-20);
        values[5] = Complex64::new(1.0, 0.0);
        let grid = TFRGrid::new(values, 10, 3, 0.1, 0.0, 1.0).unwrap();
        let v = ridge_frequency_moment(&grid, &[0.4; 3], 0.25, 0..3).unwrap();
        assert!((v - 0.01 / 4.0).abs() < 1e-12);
    }
}
