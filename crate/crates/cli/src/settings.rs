//! Run settings: defaults, flat `key = value` config files and flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use forgesim::trainer::{OptimizerKind, TrainConfig};
use forgesim::{EstimatorMode, ModelSpec, DEFAULT_HIDDEN, DEFAULT_INIT_SCALE, DEFAULT_LAYERS};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Tfim1d,
    Tfim2d,
    Tv2x2,
}

impl FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <ModelName as ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Exact,
    Sampled,
}

impl FromStr for ModeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <ModeName as ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    s.parse::<OptimizerKind>().map_err(|e| e.to_string())
}

/// Everything that shapes a run's numbers. Output locations live elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub model: ModelName,
    pub n_total: usize,
    pub h_field: f64,
    pub t: f64,
    pub v: f64,
    pub layers: usize,
    pub hidden: usize,
    pub init_scale: f64,
    pub epochs: usize,
    pub phase1_epochs: usize,
    pub lr_omega: f64,
    pub lr_theta: f64,
    pub optimizer: OptimizerKind,
    pub mode: ModeName,
    pub n_sigma: usize,
    pub shots: usize,
    pub seed: u64,
    pub baseline: bool,
    pub checkpoint_every: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let train = TrainConfig::default();
        Settings {
            model: ModelName::Tfim1d,
            n_total: 8,
            h_field: 1.0,
            t: 1.0,
            v: 1.0,
            layers: DEFAULT_LAYERS,
            hidden: DEFAULT_HIDDEN,
            init_scale: DEFAULT_INIT_SCALE,
            epochs: train.epochs,
            phase1_epochs: train.phase1_epochs,
            lr_omega: train.lr_omega,
            lr_theta: train.lr_theta,
            optimizer: train.optimizer,
            mode: ModeName::Exact,
            n_sigma: forgesim::estimator::DEFAULT_N_SIGMA,
            shots: forgesim::estimator::DEFAULT_SHOTS,
            seed: train.seed,
            baseline: train.baseline,
            checkpoint_every: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("invalid value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("invalid value {value:?} for {key}: expected on/off")),
    }
}

impl Settings {
    /// Assign one setting from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "model" => self.model = parse(key, value)?,
            "n_total" => self.n_total = parse(key, value)?,
            "h_field" => self.h_field = parse(key, value)?,
            "t" => self.t = parse(key, value)?,
            "v" => self.v = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "init_scale" => self.init_scale = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "phase1_epochs" => self.phase1_epochs = parse(key, value)?,
            "lr_omega" => self.lr_omega = parse(key, value)?,
            "lr_theta" => self.lr_theta = parse(key, value)?,
            "optimizer" => {
                self.optimizer = parse_optimizer(value).map_err(|e| format!("invalid value {value:?} for {key}: {e}"))?
            }
            "mode" => self.mode = parse(key, value)?,
            "n_sigma" => self.n_sigma = parse(key, value)?,
            "shots" => self.shots = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "baseline" => self.baseline = parse_bool(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Apply a config file on top of the current values.
    ///
    /// Returns the `out` entry when the file has one.
    pub fn load_file(&mut self, path: &Path) -> Result<Option<String>, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        self.load_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }

    pub fn load_str(&mut self, text: &str) -> Result<Option<String>, String> {
        let mut seen = BTreeMap::new();
        let mut out = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {line_no}: expected `key = value`, found {line:?}"))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            if value.is_empty() {
                return Err(format!("line {line_no}: missing value for {key}"));
            }
            if let Some(first) = seen.insert(key.clone(), line_no) {
                return Err(format!("line {line_no}: {key} already set on line {first}"));
            }
            if key == "out" {
                out = Some(value.to_string());
                continue;
            }
            self.set(&key, value).map_err(|e| format!("line {line_no}: {e}"))?;
        }
        Ok(out)
    }

    pub fn spec(&self) -> ModelSpec {
        match self.model {
            ModelName::Tfim1d => ModelSpec::Tfim1d { n_total: self.n_total, h_field: self.h_field },
            ModelName::Tfim2d => ModelSpec::Tfim2d { h_field: self.h_field },
            ModelName::Tv2x2 => ModelSpec::Tv2x2 { t: self.t, v: self.v },
        }
    }

    pub fn estimator_mode(&self) -> EstimatorMode {
        match self.mode {
            ModeName::Exact => EstimatorMode::Exact,
            ModeName::Sampled => EstimatorMode::Sampled { n_sigma: self.n_sigma, shots: self.shots, seed: self.seed },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            phase1_epochs: self.phase1_epochs,
            lr_omega: self.lr_omega,
            lr_theta: self.lr_theta,
            optimizer: self.optimizer,
            mode: self.estimator_mode(),
            seed: self.seed,
            baseline: self.baseline,
            ..TrainConfig::default()
        }
    }

    /// All settings as JSON, keys sorted.
    pub fn echo(&self) -> Value {
        let map: BTreeMap<&str, Value> = BTreeMap::from([
            ("model", json!(self.model.to_string())),
            ("n_total", json!(self.n_total)),
            ("h_field", json!(self.h_field)),
            ("t", json!(self.t)),
            ("v", json!(self.v)),
            ("layers", json!(self.layers)),
            ("hidden", json!(self.hidden)),
            ("init_scale", json!(self.init_scale)),
            ("epochs", json!(self.epochs)),
            ("phase1_epochs", json!(self.phase1_epochs)),
            ("lr_omega", json!(self.lr_omega)),
            ("lr_theta", json!(self.lr_theta)),
            ("optimizer", json!(self.optimizer.to_string())),
            ("mode", json!(self.mode.to_string())),
            ("n_sigma", json!(self.n_sigma)),
            ("shots", json!(self.shots)),
            ("seed", json!(self.seed)),
            ("baseline", json!(self.baseline)),
            ("checkpoint_every", json!(self.checkpoint_every)),
        ]);
        json!(map)
    }

    /// SHA-256 of the echoed settings, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Model selection shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
pub struct ModelArgs {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long)]
    pub n_total: Option<usize>,
    #[arg(long)]
    pub h_field: Option<f64>,
    /// t-V hopping amplitude.
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// t-V interaction strength.
    #[arg(long = "v")]
    pub v: Option<f64>,
}

/// Training and estimator flags.
#[derive(Args, Debug, Default, Clone)]
pub struct TrainArgs {
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Half-width of the uniform draw for fresh circuit angles.
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub phase1_epochs: Option<usize>,
    #[arg(long)]
    pub lr_omega: Option<f64>,
    #[arg(long)]
    pub lr_theta: Option<f64>,
    #[arg(long, value_parser = parse_optimizer)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long, value_parser = |s: &str| parse_bool("baseline", s))]
    pub baseline: Option<bool>,
    /// Write a checkpoint every this many epochs (0 disables).
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

/// Estimator selection.
#[derive(Args, Debug, Default, Clone)]
pub struct ModeArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long)]
    pub n_sigma: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($settings:expr, $args:expr, $($field:ident),+) => {
        $(if let Some(v) = $args.$field.clone() { $settings.$field = v; })+
    };
}

/// Defaults, then the config file, then flags. Returns any `out` from the file.
pub fn resolve(
    model: &ModelArgs,
    train: Option<&TrainArgs>,
    mode: Option<&ModeArgs>,
) -> Result<(Settings, Option<String>), Failure> {
    let mut s = Settings::default();
    let out = match &model.config {
        Some(path) => s.load_file(path)?,
        None => None,
    };
    overlay!(s, model, model, n_total, h_field, t, v);
    if let Some(a) = train {
        overlay!(
            s,
            a,
            layers,
            hidden,
            init_scale,
            epochs,
            phase1_epochs,
            lr_omega,
            lr_theta,
            optimizer,
            baseline,
            checkpoint_every
        );
    }
    if let Some(a) = mode {
        overlay!(s, a, mode, n_sigma, shots, seed);
    }
    Ok((s, out))
}
