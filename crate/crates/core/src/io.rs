//! File formats.
//!
//! * Signal CSV: header `time,value` (real) or `time,re,im` (complex). The
//!   sample rate and start time are recovered from the time column, which
//!   must be uniform.
//! * Signal binary: 4-byte magic (`SIGR` real, `SIGC` complex), `u32`
//!   version, `f64` sample rate, `u64` length, then little-endian `f64`
//!   samples (interleaved re/im for complex). The start time is not stored.
//! * TFR binary: `u64` bins, `u64` frames, `f64` Δξ, `f64` Δt, `f64` t₀,
//!   then the bins × frames matrix row by row as little-endian re/im pairs.
//! * Curve CSV: `frame_time,frequency_hz`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::curve::IFCurve;
use crate::error::{Error, Result};
use crate::signal::{Sample, Signal};
use crate::sst::TFRGrid;

const REAL_MAGIC: &[u8; 4] = b"SIGR";
const COMPLEX_MAGIC: &[u8; 4] = b"SIGC";
const SIGNAL_VERSION: u32 = 1;

pub fn write_signal_csv<T: Sample>(signal: &Signal<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if T::IS_REAL {
        w.write_record(["time", "value"])?;
    } else {
        w.write_record(["time", "re", "im"])?;
    }
    for (j, x) in signal.samples().iter().enumerate() {
        let t = signal.time(j).to_string();
        let z = x.to_complex();
        if T::IS_REAL {
            w.write_record([t, z.re.to_string()])?;
        } else {
            w.write_record([t, z.re.to_string(), z.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse {field:?} as a number")))
}

/// Reads a signal CSV; a real target rejects files with an imaginary column.
///
/// The rate is inferred from the time column and snapped to an integer when
/// within 1e-9 relative of one.
pub fn read_signal_csv<T: Sample>(path: &Path) -> Result<Signal<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    let columns = reader.headers()?.len();
    match (columns, T::IS_REAL) {
        (2, _) | (3, false) => {}
        (3, true) => return Err(Error::Format("expected a real signal (time,value), found complex columns".into())),
        _ => return Err(Error::Format(format!("expected 2 or 3 columns, found {columns}"))),
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        times.push(parse_f64(&row[0], line)?);
        let re = parse_f64(&row[1], line)?;
        let im = if columns == 3 { parse_f64(&row[2], line)? } else { 0.0 };
        samples.push(T::from_complex(Complex64::new(re, im)));
    }
    if times.len() < 2 {
        return Err(Error::Format("at least two samples are needed to infer the sample rate".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Format("time column must be increasing".into()));
    }
    for (j, t) in times.iter().enumerate() {
        let expected = times[0] + j as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt {
            return Err(Error::Format(format!("non-uniform sampling at row {}", j + 2)));
        }
    }
    // Decimal time stamps cannot carry rates like 100 Hz exactly.
    let rate = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
    let rate = if (rate - rate.round()).abs() < 1e-9 * rate { rate.round() } else { rate };
    Signal::with_start(samples, rate, times[0])
}

pub fn write_signal_binary<T: Sample>(signal: &Signal<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(if T::IS_REAL { REAL_MAGIC } else { COMPLEX_MAGIC })?;
    w.write_all(&SIGNAL_VERSION.to_le_bytes())?;
    w.write_all(&signal.sample_rate().to_le_bytes())?;
    w.write_all(&(signal.len() as u64).to_le_bytes())?;
    for x in signal.samples() {
        let z = x.to_complex();
        w.write_all(&z.re.to_le_bytes())?;
        if !T::IS_REAL {
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

pub fn read_signal_binary<T: Sample>(path: &Path) -> Result<Signal<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let magic: [u8; 4] = read_array(&mut r)?;
    let complex = match &magic {
        m if m == REAL_MAGIC => false,
        m if m == COMPLEX_MAGIC => true,
        _ => return Err(Error::Format("not a signal file (bad magic)".into())),
    };
    if complex && T::IS_REAL {
        return Err(Error::Format("expected a real signal, found a complex one".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != SIGNAL_VERSION {
        return Err(Error::Format(format!("unsupported signal file version {version}")));
    }
    let sample_rate = read_f64(&mut r)?;
    let len = read_u64(&mut r)? as usize;
    let samples = (0..len)
        .map(|_| {
            let re = read_f64(&mut r)?;
            let im = if complex { read_f64(&mut r)? } else { 0.0 };
            Ok(T::from_complex(Complex64::new(re, im)))
        })
        .collect::<Result<Vec<T>>>()?;
    Signal::new(samples, sample_rate)
}

/// Reads CSV or binary depending on the extension (`.csv` or anything else).
pub fn read_signal<T: Sample>(path: &Path) -> Result<Signal<T>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_signal_csv(path),
        _ => read_signal_binary(path),
    }
}

pub fn write_tfr_binary(grid: &TFRGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(grid.n_bins() as u64).to_le_bytes())?;
    w.write_all(&(grid.n_frames() as u64).to_le_bytes())?;
    w.write_all(&grid.delta_xi().to_le_bytes())?;
    w.write_all(&grid.frame_step().to_le_bytes())?;
    w.write_all(&grid.frame_start().to_le_bytes())?;
    for q in 0..grid.n_bins() {
        for m in 0..grid.n_frames() {
            let v = grid.get(q, m);
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tfr_binary(path: &Path) -> Result<TFRGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let n_bins = read_u64(&mut r)? as usize;
    let n_frames = read_u64(&mut r)? as usize;
    let delta_xi = read_f64(&mut r)?;
    let frame_step = read_f64(&mut r)?;
    let frame_start = read_f64(&mut r)?;
    let size = n_bins
        .checked_mul(n_frames)
        .filter(|&s| s <= 1 << 32)
        .ok_or_else(|| Error::Format(format!("implausible grid size {n_bins} × {n_frames}")))?;
    let mut values = vec![Complex64::default(); size];
    for q in 0..n_bins {
        for m in 0..n_frames {
            values[m * n_bins + q] = Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?);
        }
    }
    TFRGrid::new(values, n_bins, n_frames, delta_xi, frame_start, frame_step)
}

pub fn write_curve_csv(curve: &IFCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame_time", "frequency_hz"])?;
    for (m, f) in curve.frequencies().iter().enumerate() {
        w.write_record([curve.frame_time(m).to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Frame times and frequencies of a curve CSV.
pub fn read_curve_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut freqs = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != 2 {
            return Err(Error::Format(format!("line {}: expected 2 columns", i + 2)));
        }
        times.push(parse_f64(&row[0], i + 2)?);
        freqs.push(parse_f64(&row[1], i + 2)?);
    }
    Ok((times, freqs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, IMTSpec, RealSignal, SampleGrid};

    #[test]
    fn real_signal_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let grid = SampleGrid::with_start(300, 100.0, 2.5).unwrap();
        let s = RealSignal::from_fn(&grid, |t| (7.0 * t).sin() / 3.0);
        let csv = dir.path().join("s.csv");
        write_signal_csv(&s, &csv).unwrap();
        let back: RealSignal = read_signal(&csv).unwrap();
        assert_eq!(back.samples(), s.samples());
        assert!((back.sample_rate() - 100.0).abs() < 1e-9);
        assert!((back.start_time() - 2.5).abs() < 1e-12);
        let bin = dir.path().join("s.bin");
        write_signal_binary(&s, &bin).unwrap();
        let back: RealSignal = read_signal(&bin).unwrap();
        assert_eq!(back.samples(), s.samples());
        assert_eq!(back.sample_rate(), 100.0);
        assert_eq!(std::fs::metadata(&bin).unwrap().len(), 24 + 8 * 300);
    }

    #[test]
    fn complex_signal_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = synthesize(&IMTSpec::tone(1.0, 1.3), &SampleGrid::new(100, 50.0).unwrap()).unwrap();
        for name in ["c.csv", "c.bin"] {
            let path = dir.path().join(name);
            if name.ends_with("csv") {
                write_signal_csv(&s, &path).unwrap();
            } else {
                write_signal_binary(&s, &path).unwrap();
            }
            let back: Signal<Complex64> = read_signal(&path).unwrap();
            assert_eq!(back.samples(), s.samples());
            assert!(read_signal::<f64>(&path).is_err());
        }
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,value\n0,1\n0.01,2\n0.05,3\n").unwrap();
        assert!(matches!(read_signal_csv::<f64>(&path), Err(Error::Format(_))));
        std::fs::write(&path, "time,value\n0,1\n0.01,abc\n").unwrap();
        assert!(matches!(read_signal_csv::<f64>(&path), Err(Error::Format(_))));
        let bin = dir.path().join("bad.bin");
        std::fs::write(&bin, b"NOPE").unwrap();
        assert!(matches!(read_signal_binary::<f64>(&bin), Err(Error::Format(_))));
    }

    #[test]
    fn tfr_and_curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let values = (0..12).map(|i| Complex64::new(i as f64 / 7.0, -(i as f64))).collect();
        let grid = TFRGrid::new(values, 3, 4, 0.25, 1.5, 0.01).unwrap();
        let path = dir.path().join("g.tfr");
        write_tfr_binary(&grid, &path).unwrap();
        assert_eq!(read_tfr_binary(&path).unwrap(), grid);
        // Row-major over bins: the second value on disk is bin 0, frame 1.
        let bytes = std::fs::read(&path).unwrap();
        let re = f64::from_le_bytes(bytes[56..64].try_into().unwrap());
        assert_eq!(re, grid.get(0, 1).re);

        let curve = IFCurve::from_bins(&grid, vec![0, 1, 2, 1]).unwrap();
        let cpath = dir.path().join("c.csv");
        write_curve_csv(&curve, &cpath).unwrap();
        let (t, f) = read_curve_csv(&cpath).unwrap();
        assert_eq!(f, vec![0.0, 0.25, 0.5, 0.25]);
        assert_eq!(t[1], 1.51);
    }
}
