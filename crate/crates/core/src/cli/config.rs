use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bernoulli::BernoulliMarket;
use crate::error::{Error, FieldError, Result};
use crate::general::{GeneralMarket, PayoffSpec};
use crate::ou::OUParams;
use crate::sde::{make_grid, SimConfig};

/// Which equilibrium an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bernoulli,
    General,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Model::Bernoulli),
            "general" => Ok(Model::General),
            _ => Err(Error::Parse(format!(
                "unknown model `{s}` (expected bernoulli or general)"
            ))),
        }
    }
}

/// A flat experiment description; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub r: f64,
    #[serde(default)]
    pub d: f64,
    /// Prior of the high outcome (Bernoulli model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Payoff reference such as `identity`, `softplus` or `table:path.csv` (general model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<String>,
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Bernoulli,
            r: 1.0,
            d: 0.0,
            p: Some(0.5),
            payoff: None,
            dt: 1e-3,
            t_end: 8.0,
            n_paths: 20_000,
            seed: 42,
            checkpoints: vec![1.0, 2.0, 4.0, 8.0],
            output_dir: None,
        }
    }
}

/// Overrides applied on top of a config file, one per field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<Model>,
    pub r: Option<f64>,
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub payoff: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub checkpoints: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
}

fn field(name: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: name.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Overlay flag values. Switching model drops the other model's payoff field
    /// unless it is set by the same overrides.
    pub fn apply(&mut self, o: &Overrides) {
        match o.model {
            Some(Model::General) if self.model != Model::General => self.p = None,
            Some(Model::Bernoulli) if self.model != Model::Bernoulli => self.payoff = None,
            _ => {}
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone().into(); } )* };
        }
        set!(model, r, d, dt, t_end, n_paths, seed, checkpoints);
        if o.model == Some(Model::Bernoulli) && self.p.is_none() {
            self.p = ExperimentConfig::default().p;
        }
        if let Some(p) = o.p {
            self.p = Some(p);
        }
        if let Some(s) = &o.payoff {
            self.payoff = Some(s.clone());
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
    }

    /// The payoff reference with the general model's default.
    pub fn payoff_ref(&self) -> &str {
        self.payoff.as_deref().unwrap_or("identity")
    }

    /// Every field-level problem at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let positive = |name: &str, v: f64, errs: &mut Vec<FieldError>| {
            if !(v > 0.0) || !v.is_finite() {
                errs.push(field(name, format!("must be finite and positive, got {v}")));
            }
        };
        positive("r", self.r, &mut errs);
        positive("dt", self.dt, &mut errs);
        positive("t_end", self.t_end, &mut errs);
        if !self.d.is_finite() {
            errs.push(field("d", "must be finite"));
        }
        if self.n_paths < 2 {
            errs.push(field(
                "n_paths",
                format!("need at least 2 paths, got {}", self.n_paths),
            ));
        }
        if self.dt > 0.0 && self.t_end > 0.0 && self.dt > self.t_end {
            errs.push(field(
                "dt",
                format!("step {} exceeds the horizon {}", self.dt, self.t_end),
            ));
        }
        match self.model {
            Model::Bernoulli => {
                match self.p {
                    None => errs.push(field("p", "required for the bernoulli model")),
                    Some(p) if !(p > 0.0 && p < 1.0) => {
                        errs.push(field("p", format!("must lie in (0, 1), got {p}")))
                    }
                    _ => {}
                }
                if self.payoff.is_some() {
                    errs.push(field("payoff", "only used by the general model"));
                }
            }
            Model::General => {
                if self.p.is_some() {
                    errs.push(field("p", "only used by the bernoulli model"));
                }
                if self.d != 0.0 {
                    errs.push(field(
                        "d",
                        "the general model has no drift constant; set d = 0",
                    ));
                }
                if self.r > 0.0 && self.r.is_finite() {
                    if let Err(e) = self.general_market() {
                        errs.push(field("payoff", e.to_string()));
                    }
                }
            }
        }
        if self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end {
            if let Ok(grid) = make_grid(self.t_end, self.dt) {
                for &t in &self.checkpoints {
                    if !(t >= 0.0 && t <= self.t_end) || grid.index_of(t).is_none() {
                        errs.push(field(
                            "checkpoints",
                            format!("checkpoint {t} is not a grid time"),
                        ));
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn bernoulli_market(&self) -> Result<BernoulliMarket> {
        BernoulliMarket::new(self.p.unwrap_or(f64::NAN), OUParams::new(self.r, self.d)?)
    }

    /// The payoff gets the growth exponent `0.5/(1+2r)`, admissible at any rate.
    pub fn general_market(&self) -> Result<GeneralMarket> {
        let spec =
            PayoffSpec::parse(self.payoff_ref())?.with_growth(2.0, 0.5 / (1.0 + 2.0 * self.r));
        GeneralMarket::new(self.r, spec)
    }

    /// Simulation settings: configured checkpoints plus the horizon.
    pub fn sim_config(&self) -> SimConfig {
        let mut cps = self.checkpoints.clone();
        cps.push(self.t_end);
        cps.sort_by(f64::total_cmp);
        cps.dedup();
        SimConfig::new(self.dt, self.t_end, self.n_paths, self.seed, cps)
    }
}

/// Parse a TOML config; syntax errors and unknown keys become field errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| {
        let span = e
            .span()
            .map(|s| format!(" at bytes {}..{}", s.start, s.end))
            .unwrap_or_default();
        Error::Config(vec![field("config", format!("{}{span}", e.message()))])
    })
}

/// Read, parse and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![field("path", format!("{}: {e}", path.display()))]))?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}
