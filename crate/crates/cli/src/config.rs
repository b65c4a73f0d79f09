use std::path::Path;

use homdyn::boundary::{StepMeasure, StepMeasureSpec};
use homdyn::catalog;
use homdyn::classifier::{EmbeddingSpec, EmbeddingSpecRows, FlagConfig};
use homdyn::walk::TestFunction;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Classify,
    Walk,
    Lyapunov,
    Ldp,
    Renewal,
    Drift,
    Equidist,
    Decompose,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Classify => "classify",
            Self::Walk => "walk",
            Self::Lyapunov => "lyapunov",
            Self::Ldp => "ldp",
            Self::Renewal => "renewal",
            Self::Drift => "drift",
            Self::Equidist => "equidist",
            Self::Decompose => "decompose",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub flag: FlagConfig,
    pub embedding: EmbeddingSpecRows,
}

/// A catalog measure by name, or explicit atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuConfig {
    Named(String),
    Spec(StepMeasureSpec),
}

impl MuConfig {
    pub fn build(&self) -> Result<StepMeasure, CliError> {
        Ok(match self {
            Self::Named(n) => catalog::measure(n)?,
            Self::Spec(s) => StepMeasure::from_spec(s)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `min(λ₁(z), 1)`, the capped length of the shortest vector.
    CappedShortest,
    One,
}

/// Numeric knobs; each experiment reads the ones it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadruples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldp_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_monotone: Option<bool>,
    /// Starting base point as an angle in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Starting lattice basis as rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
    /// Record every `every`-th step of the series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuConfig>,
    #[serde(default)]
    pub params: Params,
}

/// What a run wrote, enough to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub seed: u64,
    pub wall_clock: f64,
}

pub const DEFAULT_SEED: u64 = 1;

fn parse_err(path: &Path, e: serde_json::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Reads a config, or the config recorded in a manifest.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    if value.get("config").is_some() && value.get("kind").is_none() {
        let m: Manifest = serde_json::from_value(value).map_err(|e| parse_err(path, e))?;
        Ok(m.config)
    } else {
        serde_json::from_value(value).map_err(|e| parse_err(path, e))
    }
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self { kind, seed: None, example: None, geometry: None, mu: None, params: Params::default() }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn example(&self) -> Result<Option<catalog::Example>, CliError> {
        self.example.as_deref().map(catalog::example).transpose().map_err(Into::into)
    }

    /// Flag and embedding from `geometry`, else from the example.
    pub fn geometry(&self) -> Result<(FlagConfig, EmbeddingSpec), CliError> {
        if let Some(g) = &self.geometry {
            return Ok((g.flag.clone(), EmbeddingSpec::from_rows(&g.embedding)?));
        }
        match self.example()? {
            Some(ex) => Ok((ex.flag, ex.embedding)),
            None => Err(CliError::Config(format!("{} needs `example` or `geometry`", self.kind.name()))),
        }
    }

    pub fn mu(&self) -> Result<StepMeasure, CliError> {
        self.mu.as_ref().ok_or_else(|| CliError::Config("missing `mu`".into()))?.build()
    }

    /// Fills every knob the experiment reads, so the written config replays
    /// the run on its own.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.example.is_some() && self.geometry.is_some() {
            return Err(CliError::Config("give either `example` or `geometry`, not both".into()));
        }
        if self.example.is_none() && self.geometry.is_none() {
            match self.kind {
                Kind::Equidist => self.example = Some("ex-reducible".into()),
                Kind::Decompose => self.example = Some("ex-principal-sl3".into()),
                _ => {}
            }
        }
        let ex = self.example()?;
        self.seed.get_or_insert(DEFAULT_SEED);
        let p = &mut self.params;
        let ex_mu = ex.as_ref().map(|e| e.measure);
        let mut default_mu = |name: &str| {
            if self.mu.is_none() {
                self.mu = Some(MuConfig::Named(ex_mu.unwrap_or(name).to_string()));
            }
        };
        match self.kind {
            Kind::Classify => {}
            Kind::Walk => {
                default_mu("positive-pair");
                p.steps.get_or_insert(ex.as_ref().map_or(10_000, |e| e.steps.min(10_000)));
                p.trials.get_or_insert(ex.as_ref().map_or(20, |e| e.trials.min(20)));
                p.theta0.get_or_insert(0.0);
                p.observable.get_or_insert(Observable::CappedShortest);
                p.every.get_or_insert(100);
                p.bins.get_or_insert(1000);
            }
            Kind::Lyapunov => {
                default_mu("positive-pair");
                p.steps.get_or_insert(10_000);
                p.trials.get_or_insert(100);
            }
            Kind::Ldp => {
                default_mu("ldp-spread");
                p.n_grid.get_or_insert_with(|| (1..=10).map(|k| 200 * k).collect());
                p.trials.get_or_insert(10_000);
                p.theta0.get_or_insert(0.0);
                p.lyapunov_steps.get_or_insert(10_000);
                p.lyapunov_trials.get_or_insert(100);
                p.r2_min.get_or_insert(0.9);
            }
            Kind::Renewal => {
                default_mu("ldp-spread");
                p.t.get_or_insert(25.0);
                p.k_max.get_or_insert(3000);
                p.trials.get_or_insert(20_000);
                p.theta0.get_or_insert(2.0);
                p.test_function.get_or_insert(TestFunction::Bump { slope: 0.5 });
                p.lyapunov_steps.get_or_insert(10_000);
                p.lyapunov_trials.get_or_insert(100);
                p.ldp_trials.get_or_insert(10_000);
                p.n_grid.get_or_insert_with(|| (1..=10).map(|k| 200 * k).collect());
                p.tol.get_or_insert(0.05);
            }
            Kind::Drift => {
                default_mu("positive-pair");
                p.quadruples.get_or_insert(50);
                p.steps.get_or_insert(60);
                p.word_len.get_or_insert(200);
                p.tol.get_or_insert(1e-2);
            }
            Kind::Equidist => {
                default_mu("positive-pair");
                p.steps.get_or_insert(100_000);
                p.trials.get_or_insert(200);
                p.burn_in.get_or_insert(1000);
                p.dt.get_or_insert(0.05);
                p.lyapunov_steps.get_or_insert(10_000);
                p.lyapunov_trials.get_or_insert(100);
                p.bins.get_or_insert(1000);
                p.tol.get_or_insert(0.05);
                p.product_tol.get_or_insert(0.05);
                p.check_monotone.get_or_insert(true);
            }
            Kind::Decompose => {
                default_mu("positive-pair");
                p.steps.get_or_insert(100_000);
                p.trials.get_or_insert(200);
                p.theta0.get_or_insert(0.0);
                p.bins.get_or_insert(1000);
                p.tol.get_or_insert(0.05);
            }
        }
        Ok(self)
    }
}
