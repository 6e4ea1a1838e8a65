//! JSON run configuration: one document describing the model (loss, tail
//! index, angular measure, control measure), the integrand, and the
//! execution knobs. Parsing is strict: unknown fields are rejected and
//! errors carry line/column positions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{LossFunction, Point};
use crate::error::{Error, Result};
use crate::integral::Backend;
use crate::laws::{AngularMeasure, ProjectionBase};
use crate::measure::{Cell, Integrand, Interval, KernelKind, MeasureSpace, SimpleFunction};
use crate::supmeasure::SupMeasureSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    Euclidean { dimension: usize },
    LInfinity { dimension: usize },
    WeightedL1 { weights: Vec<f64> },
    Asymmetric1d { pos: f64, neg: f64 },
    Abs,
}

impl LossConfig {
    pub fn build(&self) -> Result<LossFunction> {
        Ok(match self {
            LossConfig::Euclidean { dimension } => LossFunction::euclidean(*dimension),
            LossConfig::LInfinity { dimension } => LossFunction::l_infinity(*dimension),
            LossConfig::WeightedL1 { weights } => LossFunction::weighted_l1(weights.clone())?,
            LossConfig::Asymmetric1d { pos, neg } => LossFunction::asymmetric_1d(*pos, *neg)?,
            LossConfig::Abs => LossFunction::abs(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaAtom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaConfig {
    Discrete { atoms: Vec<KappaAtom> },
    PointMass { direction: Vec<f64> },
    GaussianProjection,
    UniformCubeProjection,
}

impl KappaConfig {
    pub fn build(&self, loss: Arc<LossFunction>) -> Result<AngularMeasure> {
        match self {
            KappaConfig::Discrete { atoms } => AngularMeasure::discrete(
                loss,
                atoms
                    .iter()
                    .map(|a| (Point(a.direction.clone()), a.weight))
                    .collect(),
            ),
            KappaConfig::PointMass { direction } => {
                AngularMeasure::point_mass(loss, Point(direction.clone()))
            }
            KappaConfig::GaussianProjection => {
                Ok(AngularMeasure::projection(loss, ProjectionBase::Gaussian))
            }
            KappaConfig::UniformCubeProjection => {
                Ok(AngularMeasure::projection(loss, ProjectionBase::UniformCube))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub lo: f64,
    /// `null` means unbounded above.
    pub hi: Option<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub pieces: Vec<PieceConfig>,
}

impl MeasureConfig {
    pub fn build(&self) -> Result<MeasureSpace> {
        MeasureSpace::new(
            self.pieces
                .iter()
                .map(|p| {
                    (
                        Interval::new(p.lo, p.hi.unwrap_or(f64::INFINITY)),
                        p.weight,
                    )
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    pub lo: f64,
    /// `null` means unbounded above.
    pub hi: Option<f64>,
}

impl SupportConfig {
    fn build(&self) -> Cell {
        Cell::interval(self.lo, self.hi.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandConfig {
    Simple {
        parts: SimpleFunction,
    },
    ExpDecay {
        lambda: f64,
        support: SupportConfig,
        bound: f64,
    },
    Indicator {
        support: SupportConfig,
    },
    Triangle {
        height: f64,
        support: SupportConfig,
    },
    Power {
        exponent: f64,
        support: SupportConfig,
        bound: f64,
    },
}

impl IntegrandConfig {
    pub fn build(&self) -> Result<Integrand> {
        match self {
            IntegrandConfig::Simple { parts } => Ok(Integrand::simple(parts.clone())),
            IntegrandConfig::ExpDecay { lambda, support, bound } => Integrand::kernel(
                KernelKind::ExpDecay { lambda: *lambda },
                support.build(),
                *bound,
            ),
            IntegrandConfig::Indicator { support } => {
                Integrand::kernel(KernelKind::Indicator, support.build(), 1.0)
            }
            IntegrandConfig::Triangle { height, support } => Integrand::kernel(
                KernelKind::Triangle { height: *height },
                support.build(),
                *height,
            ),
            IntegrandConfig::Power { exponent, support, bound } => Integrand::kernel(
                KernelKind::Power { exponent: *exponent },
                support.build(),
                *bound,
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendConfig {
    Cells,
    Series,
}

impl BackendConfig {
    pub fn build(&self) -> Backend {
        match self {
            BackendConfig::Cells => Backend::Cells,
            BackendConfig::Series => Backend::Series,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    1.0
}
fn default_replications() -> usize {
    20_000
}
fn default_epsilon_trunc() -> f64 {
    1e-4
}
fn default_level() -> u32 {
    6
}
fn default_backend() -> BackendConfig {
    BackendConfig::Series
}
fn default_scale_factor() -> f64 {
    1.0
}

/// The whole run description. Every command reads the same document and
/// uses the parts it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    pub loss: LossConfig,
    pub kappa: KappaConfig,
    pub measure: MeasureConfig,
    /// Scale for the `sample` command.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Integrand for the `integrate` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<IntegrandConfig>,
    /// Time points for the `process` command (cumulative kernels).
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "default_backend")]
    pub backend: BackendConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_epsilon_trunc")]
    pub epsilon_trunc: f64,
    /// Dyadic approximation level for the cell backend.
    #[serde(default = "default_level")]
    pub level: u32,
    /// Verification knob: multiplies the reference scales the suite
    /// compares against. Anything but 1.0 must fail the suite.
    #[serde(default = "default_scale_factor")]
    pub reference_scale_factor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            alpha: 1.5,
            loss: LossConfig::Euclidean { dimension: 2 },
            kappa: KappaConfig::Discrete {
                atoms: vec![
                    KappaAtom {
                        direction: vec![1.0, 0.0],
                        weight: 0.25,
                    },
                    KappaAtom {
                        direction: vec![0.0, 1.0],
                        weight: 0.75,
                    },
                ],
            },
            measure: MeasureConfig {
                pieces: vec![PieceConfig {
                    lo: 0.0,
                    hi: Some(10.0),
                    weight: 1.0,
                }],
            },
            sigma: default_sigma(),
            integrand: Some(IntegrandConfig::ExpDecay {
                lambda: 1.0,
                support: SupportConfig {
                    lo: 0.0,
                    hi: Some(10.0),
                },
                bound: 1.0,
            }),
            times: vec![1.0, 2.0, 4.0, 8.0],
            backend: default_backend(),
            replications: default_replications(),
            epsilon_trunc: default_epsilon_trunc(),
            level: default_level(),
            reference_scale_factor: default_scale_factor(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha = {} must be finite and > 0", self.alpha)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma = {} must be >= 0", self.sigma)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if !(self.epsilon_trunc > 0.0 && self.epsilon_trunc < 1.0) {
            return Err(Error::Config(format!(
                "epsilon_trunc = {} must be in (0, 1)",
                self.epsilon_trunc
            )));
        }
        if !(self.reference_scale_factor > 0.0) {
            return Err(Error::Config("reference_scale_factor must be > 0".into()));
        }
        Ok(())
    }

    /// The model-level objects behind this configuration.
    pub fn build_spec(&self) -> Result<SupMeasureSpec> {
        let loss = Arc::new(self.loss.build()?);
        let kappa = self.kappa.build(loss)?;
        let space = self.measure.build()?;
        SupMeasureSpec::new(self.alpha, kappa, space)
    }
}
