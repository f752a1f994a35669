use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{derive_params, Adversary, EngineParams, ParamMode};
use crate::error::{Error, Result};
use crate::geometry::{Curve, Interval, Point};
use crate::porous::{CantorConstruction, CantorSpec, PorosityMode, PorousSetOracle};
use crate::preimage::preimage_measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Avoid,
    Halving,
    SigmaSchedule,
    Counterexample,
    PorosityCheck,
    Martingale,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Avoid => "avoid",
            ExperimentKind::Halving => "halving",
            ExperimentKind::SigmaSchedule => "sigma-schedule",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::PorosityCheck => "porosity-check",
            ExperimentKind::Martingale => "martingale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    FatCantor {
        mu: f64,
        depth: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        window: Option<[f64; 2]>,
        /// Power-`p` mode instead of `c`-porous when set.
        #[serde(default)]
        p: Option<f64>,
    },
    Ternary {
        depth: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        window: Option<[f64; 2]>,
    },
    Empty {
        #[serde(default = "default_c")]
        c: f64,
    },
    Union {
        #[serde(default = "default_c")]
        c: f64,
        pieces: Vec<OracleSpec>,
    },
}

fn default_c() -> f64 {
    0.5
}

impl OracleSpec {
    pub fn build(&self) -> Result<PorousSetOracle> {
        let window = |w: &Option<[f64; 2]>| -> Result<Interval> {
            let [lo, hi] = w.unwrap_or([0.0, 1.0]);
            Interval::new(lo, hi).map_err(|e| Error::Config {
                path: "oracle.window".into(),
                message: e.to_string(),
            })
        };
        match self {
            OracleSpec::FatCantor { mu, depth, c, window: w, p } => {
                let construction = CantorConstruction::fat(CantorSpec::new(*mu, *depth)?)?;
                let mode = match p {
                    Some(p) => PorosityMode::PowerP { p: *p },
                    None => PorosityMode::CPorous { c: *c },
                };
                PorousSetOracle::cylinder(construction, window(w)?, mode)
            }
            OracleSpec::Ternary { depth, c, window: w } => {
                PorousSetOracle::cylinder(CantorConstruction::ternary(*depth), window(w)?, PorosityMode::CPorous { c: *c })
            }
            OracleSpec::Empty { c } => PorousSetOracle::union(Vec::new(), *c),
            OracleSpec::Union { c, pieces } => {
                PorousSetOracle::union(pieces.iter().map(OracleSpec::build).collect::<Result<_>>()?, *c)
            }
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            OracleSpec::FatCantor { c, .. }
            | OracleSpec::Ternary { c, .. }
            | OracleSpec::Empty { c }
            | OracleSpec::Union { c, .. } => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    /// `t ↦ (t, 0)`.
    #[default]
    Horizontal,
    Affine { start: Vec<f64>, velocity: Vec<f64> },
    Polyline { times: Vec<f64>, points: Vec<Vec<f64>> },
}

impl CurveSpec {
    pub fn build(&self) -> Result<Curve> {
        match self {
            CurveSpec::Horizontal => Ok(Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))),
            CurveSpec::Affine { start, velocity } => {
                Ok(Curve::affine(Point::new(start.clone())?, Point::new(velocity.clone())?))
            }
            CurveSpec::Polyline { times, points } => {
                let pts = points.iter().map(|p| Point::new(p.clone())).collect::<Result<Vec<_>>>()?;
                Curve::piecewise_linear(times, &pts)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    #[default]
    Desk,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    #[default]
    Stay,
    WorstSampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSpec {
    #[serde(default)]
    pub mode: EngineMode,
    pub sigma: f64,
    pub eps: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub rounds: Option<u64>,
    #[serde(default)]
    pub adversary: AdversaryKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_true")]
    pub audit: bool,
    /// Schedule target for `sigma-schedule`.
    #[serde(default)]
    pub target: Option<f64>,
}

fn default_samples() -> usize {
    4
}

fn default_true() -> bool {
    true
}

impl EngineSpec {
    pub fn params(&self, f1: &Curve, oracle: &PorousSetOracle, c: f64, tol: f64) -> Result<EngineParams> {
        let mode = match self.mode {
            EngineMode::Desk => ParamMode::DeskRelaxed {
                lambda: self.lambda.ok_or_else(|| missing("engine.lambda", "desk"))?,
                round_cap: self.rounds.ok_or_else(|| missing("engine.rounds", "desk"))?,
            },
            EngineMode::Strict => ParamMode::Strict {
                sup_measure: Some(preimage_measure(f1, oracle, tol)?.measure.upper()),
            },
        };
        derive_params(f1, self.sigma, self.eps, c, mode)
    }

    pub fn adversary(&self, seed: u64) -> Adversary {
        match self.adversary {
            AdversaryKind::Stay => Adversary::Stay,
            AdversaryKind::WorstSampled => Adversary::WorstSampled {
                samples: self.samples,
                seed,
            },
        }
    }
}

fn missing(path: &str, mode: &str) -> Error {
    Error::Config {
        path: path.into(),
        message: format!("required when engine.mode = \"{mode}\""),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    pub mu: f64,
    pub p: f64,
    pub depth: usize,
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PorositySpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
}

fn default_points() -> usize {
    200
}

fn default_scales() -> Vec<f64> {
    vec![0.1, 0.03, 0.01]
}

impl Default for PorositySpec {
    fn default() -> Self {
        PorositySpec {
            points: default_points(),
            scales: default_scales(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Not echoed, so reports do not depend on where they are written.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub engine: Option<EngineSpec>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleSpec>,
    #[serde(default)]
    pub porosity: PorositySpec,
}

fn default_seed() -> u64 {
    1
}

fn default_tol() -> f64 {
    1e-7
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks everything `kind` will need before any computation starts.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::Config {
                    path: "kind".into(),
                    message: format!("config is for `{}`, not `{}`", k.name(), kind.name()),
                });
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config {
                path: "tol".into(),
                message: "must be positive".into(),
            });
        }
        let need = |present: bool, path: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config {
                    path: path.into(),
                    message: format!("required for `{}`", kind.name()),
                })
            }
        };
        match kind {
            ExperimentKind::Counterexample => need(self.counterexample.is_some(), "counterexample"),
            ExperimentKind::PorosityCheck => need(self.oracle.is_some(), "oracle"),
            ExperimentKind::SigmaSchedule => {
                need(matches!(self.oracle, Some(OracleSpec::Union { .. })), "oracle")?;
                need(self.engine.is_some(), "engine")?;
                need(self.engine.as_ref().and_then(|e| e.target).is_some(), "engine.target")?;
                self.check_engine()
            }
            ExperimentKind::Avoid | ExperimentKind::Halving | ExperimentKind::Martingale => {
                need(self.oracle.is_some(), "oracle")?;
                need(self.engine.is_some(), "engine")?;
                self.check_engine()
            }
        }
    }

    fn check_engine(&self) -> Result<()> {
        let Some(e) = &self.engine else { return Ok(()) };
        if e.mode == EngineMode::Desk {
            if e.lambda.is_none() {
                return Err(missing("engine.lambda", "desk"));
            }
            if e.rounds.is_none() {
                return Err(missing("engine.rounds", "desk"));
            }
        }
        Ok(())
    }

    /// The config with defaults filled in, as TOML.
    pub fn resolved(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }
}
