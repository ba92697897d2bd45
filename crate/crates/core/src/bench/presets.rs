//! Synthetic test signals for the benchmark.
//!
//! All presets are two unit-amplitude real components `cos(2πφ_ℓ(t))`,
//! listed highest frequency first, and do not depend on the duration.
//!
//! * `example1`, `example2`: exponential chirps `φ′₁ = 3.0·e^{−kt}` and
//!   `φ′₂ = 1.25·e^{−kt}` with `k = ln(2.5)/20`. Over 20 s the iFs sweep
//!   3.0 → 1.2 Hz and 1.25 → 0.5 Hz: never equal, but the ranges overlap.
//!   `example2` is the same signal, meant to be run with noise.
//! * `example3`: sinusoidal frequency modulation
//!   `φ′₁ = 1.9·(1 + 0.45 sin(2πt/20))`, `φ′₂ = 0.75·(1 + 0.45 sin(2πt/20))`.
//! * `example4`: linear iFs that cross at t = 10 s,
//!   `φ′₁ = 0.6 + 0.09t` and `φ′₂ = 2.4 − 0.09t`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::IMTSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Example1,
    Example2,
    Example3,
    Example4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Example1, Preset::Example2, Preset::Example3, Preset::Example4];

    pub fn components(self) -> Vec<IMTSpec> {
        match self {
            Preset::Example1 | Preset::Example2 => {
                let k = 2.5f64.ln() / 20.0;
                [3.0, 1.25]
                    .into_iter()
                    .map(|f0| {
                        IMTSpec::new(
                            |_| 1.0,
                            move |t| f0 * (1.0 - (-k * t).exp()) / k,
                            move |t| f0 * (-k * t).exp(),
                        )
                        .with_epsilon(1.01 * k)
                        .with_phase_second_derivative_bound(k * f0)
                    })
                    .collect()
            }
            Preset::Example3 => [1.9, 0.75]
                .into_iter()
                .map(|c| {
                    let w = 2.0 * PI / 20.0;
                    IMTSpec::new(
                        |_| 1.0,
                        move |t| c * (t + 0.45 * (1.0 - (w * t).cos()) / w),
                        move |t| c * (1.0 + 0.45 * (w * t).sin()),
                    )
                    .with_epsilon(0.45 * w / 0.55)
                    .with_phase_second_derivative_bound(c * 0.45 * w)
                })
                .collect(),
            Preset::Example4 => vec![
                IMTSpec::linear_chirp(1.0, 0.6, 0.09).with_epsilon(0.16),
                IMTSpec::linear_chirp(1.0, 2.4, -0.09).with_epsilon(0.16),
            ],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
            Preset::Example3 => "example3",
            Preset::Example4 => "example4",
        };
        f.write_str(name)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?}")))
    }
}

/// A component given as expressions in `t` (seconds), e.g.
/// `amplitude = "1 + 0.1 * math::sin(t)"`, `phase = "2.0 * t + 0.05 * t^2"`.
///
/// The phase is in cycles. `pi` is predefined. Integer literals use integer
/// arithmetic (`1/2` is 0), so write `0.5`. Without a `frequency`
/// expression the iF is obtained by differentiating the phase numerically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentExpr {
    pub amplitude: String,
    pub phase: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<String>,
}

fn evaluate(node: &Node<DefaultNumericTypes>, t: f64) -> std::result::Result<f64, evalexpr::EvalexprError<DefaultNumericTypes>> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("t".into(), Value::Float(t))?;
    ctx.set_value("pi".into(), Value::Float(PI))?;
    node.eval_number_with_context(&ctx)
}

fn compile(expr: &str) -> Result<impl Fn(f64) -> f64 + Send + Sync + 'static> {
    let node: Node<DefaultNumericTypes> =
        build_operator_tree(expr).map_err(|e| Error::InvalidConfig(format!("cannot parse {expr:?}: {e}")))?;
    // Unknown variables and type errors only show up on evaluation.
    evaluate(&node, 0.0).map_err(|e| Error::InvalidConfig(format!("cannot evaluate {expr:?}: {e}")))?;
    Ok(move |t| evaluate(&node, t).unwrap_or(f64::NAN))
}

impl ComponentExpr {
    pub fn to_spec(&self) -> Result<IMTSpec> {
        let amplitude = compile(&self.amplitude)?;
        let phase = compile(&self.phase)?;
        Ok(match &self.frequency {
            Some(f) => IMTSpec::new(amplitude, phase, compile(f)?),
            None => IMTSpec::from_phase(amplitude, phase),
        })
    }
}

/// Signal definition of an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Preset { preset: Preset },
    Custom { components: Vec<ComponentExpr> },
}

impl SignalSpec {
    /// Components, highest frequency first.
    pub fn components(&self) -> Result<Vec<IMTSpec>> {
        match self {
            SignalSpec::Preset { preset } => Ok(preset.components()),
            SignalSpec::Custom { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidConfig("custom signal needs at least one component".into()));
                }
                components.iter().map(ComponentExpr::to_spec).collect()
            }
        }
    }
}
