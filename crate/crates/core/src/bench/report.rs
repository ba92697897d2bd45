use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Method, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Seed and measured SNR of one noise realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationInfo {
    pub index: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
}

/// Relative error of one method on one component in one realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub realization: usize,
    pub method: Method,
    pub component: usize,
    pub error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub component: usize,
    /// None when every realisation failed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub components: usize,
    pub methods: Vec<Method>,
    pub seed_base: u64,
    pub realizations: Vec<RealizationInfo>,
    pub errors: Vec<ErrorRecord>,
    pub summary: Vec<MethodStats>,
    pub snr: Option<SnrStats>,
    /// Wall time of the run; not part of the reproducible content.
    pub runtime_seconds: f64,
}

/// Mean and sample standard deviation.
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

const CSV_HEADER: [&str; 8] = ["kind", "realization", "seed", "snr_db", "method", "component", "error", "failure"];

fn opt_to_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {name} from {field:?}")))
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, name).map(Some)
    }
}

impl BenchmarkReport {
    /// Builds the report and its aggregates from raw per-realisation results.
    pub fn from_records(
        methods: Vec<Method>,
        components: usize,
        seed_base: u64,
        realizations: Vec<RealizationInfo>,
        errors: Vec<ErrorRecord>,
        runtime_seconds: f64,
    ) -> Self {
        let summary = methods
            .iter()
            .flat_map(|&method| (0..components).map(move |component| (method, component)))
            .map(|(method, component)| {
                let rows = errors.iter().filter(|r| r.method == method && r.component == component);
                let values: Vec<f64> = rows.clone().filter_map(|r| r.error).collect();
                let failures = rows.filter(|r| r.error.is_none()).count();
                let stats = mean_std(&values);
                MethodStats {
                    method,
                    component,
                    mean: stats.map(|s| s.0),
                    std: stats.map(|s| s.1),
                    successes: values.len(),
                    failures,
                }
            })
            .collect();
        let snrs: Vec<f64> = realizations.iter().filter_map(|r| r.snr_db).collect();
        let snr = mean_std(&snrs).map(|(mean, std)| SnrStats { mean, std, count: snrs.len() });
        Self {
            schema_version: SCHEMA_VERSION,
            components,
            methods,
            seed_base,
            realizations,
            errors,
            summary,
            snr,
            runtime_seconds,
        }
    }

    pub fn stats(&self, method: Method, component: usize) -> Option<&MethodStats> {
        self.summary.iter().find(|s| s.method == method && s.component == component)
    }

    /// Equality of everything except the runtime.
    pub fn same_results(&self, other: &Self) -> bool {
        Self { runtime_seconds: 0.0, ..self.clone() } == Self { runtime_seconds: 0.0, ..other.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Long-format CSV of the raw results, with run metadata in `#` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# schema_version={}", self.schema_version).unwrap();
        writeln!(out, "# components={}", self.components).unwrap();
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        writeln!(out, "# methods={}", methods.join(";")).unwrap();
        writeln!(out, "# seed_base={}", self.seed_base).unwrap();
        writeln!(out, "# runtime_seconds={}", self.runtime_seconds).unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).unwrap();
        for r in &self.realizations {
            w.write_record([
                "realization".to_string(),
                r.index.to_string(),
                r.seed.to_string(),
                opt_to_string(&r.snr_db),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])
            .unwrap();
        }
        for e in &self.errors {
            w.write_record([
                "error".to_string(),
                e.realization.to_string(),
                String::new(),
                String::new(),
                e.method.name().to_string(),
                e.component.to_string(),
                opt_to_string(&e.error),
                e.failure.clone().unwrap_or_default(),
            ])
            .unwrap();
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(kv) => {
                    let (k, v) = kv.split_once('=').ok_or_else(|| Error::Format(format!("bad metadata line {line:?}")))?;
                    meta.insert(k.to_string(), v.to_string());
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| Error::Format(format!("missing metadata {k}")));
        let schema_version: u32 = parse_field(get("schema_version")?, "schema_version")?;
        if schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported report schema {schema_version}")));
        }
        let methods_field = get("methods")?;
        let methods = if methods_field.is_empty() {
            Vec::new()
        } else {
            methods_field.split(';').map(str::parse).collect::<Result<Vec<Method>>>()?
        };
        let mut realizations = Vec::new();
        let mut errors = Vec::new();
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        for row in reader.records() {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or("");
            match field(0) {
                "realization" => realizations.push(RealizationInfo {
                    index: parse_field(field(1), "realization")?,
                    seed: parse_field(field(2), "seed")?,
                    snr_db: parse_opt(field(3), "snr_db")?,
                }),
                "error" => errors.push(ErrorRecord {
                    realization: parse_field(field(1), "realization")?,
                    method: field(4).parse()?,
                    component: parse_field(field(5), "component")?,
                    error: parse_opt(field(6), "error")?,
                    failure: Some(field(7).to_string()).filter(|s| !s.is_empty()),
                }),
                other => return Err(Error::Format(format!("unknown row kind {other:?}"))),
            }
        }
        Ok(Self::from_records(
            methods,
            parse_field(get("components")?, "components")?,
            parse_field(get("seed_base")?, "seed_base")?,
            realizations,
            errors,
            parse_field(get("runtime_seconds")?, "runtime_seconds")?,
        ))
    }

    /// Methods as columns, components as rows, cells `mean (std)`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| IMT |");
        let mut rule = String::from("|---|");
        for m in &self.methods {
            write!(out, " {m} |").unwrap();
            rule.push_str("---|");
        }
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        if self.methods.is_empty() {
            return out;
        }
        for c in 0..self.components {
            write!(out, "| IMT{} |", c + 1).unwrap();
            for &m in &self.methods {
                match self.stats(m, c).and_then(|s| s.mean.zip(s.std)) {
                    Some((mean, std)) => write!(out, " {mean:.4} ({std:.4}) |").unwrap(),
                    None => out.push_str(" failed |"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, report.render(format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BenchmarkReport {
        let realizations = (0..3)
            .map(|i| RealizationInfo {
                index: i,
                seed: 40 + i as u64,
                snr_db: Some(1.7 + 0.1 * i as f64),
            })
            .collect();
        let mut errors = Vec::new();
        for r in 0..3 {
            for (k, m) in [Method::Sift, Method::Bpf].into_iter().enumerate() {
                for c in 0..2 {
                    let failed = r == 2 && m == Method::Bpf && c == 1;
                    errors.push(ErrorRecord {
                        realization: r,
                        method: m,
                        component: c,
                        error: (!failed).then(|| 0.1 * (r + c + k) as f64 + 1.0 / 3.0),
                        failure: failed.then(|| "no curve, \"quoted\"".to_string()),
                    });
                }
            }
        }
        BenchmarkReport::from_records(vec![Method::Sift, Method::Bpf], 2, 40, realizations, errors, 1.25)
    }

    #[test]
    fn aggregates() {
        let r = sample();
        let s = r.stats(Method::Bpf, 1).unwrap();
        assert_eq!((s.successes, s.failures), (2, 1));
        let s = r.stats(Method::Sift, 0).unwrap();
        assert!((s.mean.unwrap() - (0.1 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((s.std.unwrap() - 0.1).abs() < 1e-12);
        assert!((r.snr.as_ref().unwrap().mean - 1.8).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        assert_eq!(BenchmarkReport::from_csv(&r.to_csv()).unwrap(), r);
        assert_eq!(BenchmarkReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn markdown_shape() {
        let md = sample().to_markdown();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "| IMT | SIFT | BPF |");
        assert_eq!(lines[2].matches('|').count(), 4);
        let empty = BenchmarkReport::from_records(Vec::new(), 2, 0, Vec::new(), Vec::new(), 0.0);
        assert_eq!(empty.to_markdown(), "| IMT |\n|---|\n");
        assert_eq!(BenchmarkReport::from_csv(&empty.to_csv()).unwrap(), empty);
    }

    #[test]
    fn runtime_is_ignored_for_comparison() {
        let a = sample();
        let b = BenchmarkReport { runtime_seconds: 99.0, ..a.clone() };
        assert!(a.same_results(&b));
    }
}
