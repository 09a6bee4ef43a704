use std::path::{Path, PathBuf};

use clap::Args;
use forgesim::trainer::{train_with, Checkpoint};
use forgesim::{
    correlators, energy, exact_correlators, exact_ground_state, observable, validate_partition, EstimatorMode,
    ForgeError, ForgedModel, PauliString,
};
use serde_json::json;

use crate::failure::{Failure, EXIT_DIVERGED};
use crate::output::{
    correlator_table, num, read_checkpoint, write_checkpoint, write_correlators, write_json, write_text, write_timing,
    write_trace, FORMAT_VERSION,
};
use crate::settings::{resolve, ModeArgs, ModelArgs, Settings, TrainArgs};

const GIT_REVISION: &str = env!("FORGESIM_GIT_REV");
const DEFAULT_OUT: &str = "forgesim-out";

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Pauli word on the full register, e.g. `Z0Z4` or `ZIIIZIII`. Repeatable.
    #[arg(long)]
    pub observable: Vec<String>,
    #[command(flatten)]
    pub mode: ModeArgs,
}

#[derive(Args, Debug)]
pub struct EdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn ensure_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| Failure::io(&format!("cannot create {}", path.display()), e))
}

fn stamped(model: &ForgedModel, epoch: usize, energy: f64, hash: &str) -> Checkpoint {
    let mut c = Checkpoint::capture(model, epoch, energy);
    c.config_hash = hash.to_string();
    c
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let (settings, file_out) = resolve(&args.model, Some(&args.train), Some(&args.mode))?;
    let out = args.out.or(file_out.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let spec = settings.spec();
    let partition = spec.build()?;
    let mut config = settings.train_config();
    config.validate()?;

    // Reference values first: an oversized model fails before any training.
    let (ed_energy, ground) = exact_ground_state(&partition)?;
    let exact_corr = exact_correlators(&ground)?;
    let hash = settings.hash();

    let model = match &args.resume {
        Some(path) => {
            let ckpt = read_checkpoint(path)?;
            if ckpt.model != Some(spec) {
                return Err(Failure::usage(format!(
                    "checkpoint {} belongs to a different model ({:?})",
                    path.display(),
                    ckpt.model
                )));
            }
            config.start_epoch = ckpt.epoch;
            ckpt.restore()?
        }
        None => ForgedModel::from_spec(spec, settings.layers, settings.hidden, settings.init_scale, settings.seed)?,
    };
    ensure_dir(&out)?;

    let every = settings.checkpoint_every;
    let mut records = Vec::new();
    let mut side_error = None;
    let result = train_with(model, &config, |m, r| {
        records.push(*r);
        if every > 0 && (r.epoch + 1) % every == 0 {
            let path = out.join(format!("checkpoint_{:06}.json", r.epoch + 1));
            if let Err(e) = write_checkpoint(&path, &stamped(m, r.epoch + 1, r.energy, &hash)) {
                side_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = side_error {
        return Err(e);
    }
    write_trace(&out.join("trace.csv"), &records)?;
    write_timing(&out.join("timing.csv"), &records)?;

    let (model, trace) = match result {
        Ok(done) => done,
        Err(ForgeError::Training { epoch, reason, mut last_valid }) => {
            last_valid.config_hash = hash;
            let path = out.join("checkpoint_last_valid.json");
            write_checkpoint(&path, &last_valid)?;
            return Err(Failure {
                code: EXIT_DIVERGED,
                message: format!(
                    "training diverged at epoch {epoch}: {reason}; last valid parameters in {}",
                    path.display()
                ),
            });
        }
        Err(e) => return Err(e.into()),
    };

    let final_energy = energy(&model, EstimatorMode::Exact)?;
    let forged_corr = correlators(&model, EstimatorMode::Exact)?;
    let relative_error = (final_energy - ed_energy).abs() / ed_energy.abs();
    let max_corr_err = (&forged_corr - &exact_corr).abs().max();
    let next_epoch = config.start_epoch + trace.len();
    write_correlators(&out.join("correlators.csv"), &forged_corr, &exact_corr)?;
    write_checkpoint(&out.join("checkpoint.json"), &stamped(&model, next_epoch, final_energy, &hash))?;

    let summary = json!({
        "format_version": FORMAT_VERSION,
        "model": spec.name(),
        "n_qubits": partition.n_total(),
        "final_energy": final_energy,
        "final_energy_estimate": trace.last_energy(),
        "ed_energy": ed_energy,
        "relative_error": relative_error,
        "max_correlator_error": max_corr_err,
        "epochs_run": trace.len(),
        "start_epoch": config.start_epoch,
        "seed": settings.seed,
        "config": settings.echo(),
        "config_hash": hash,
        "git_revision": GIT_REVISION,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&out.join("summary.json"), &summary)?;

    println!("model {} ({} qubits), {} epochs", spec.name(), partition.n_total(), trace.len());
    println!("final energy {final_energy} (exact ground energy {ed_energy}, relative error {relative_error:.3e})");
    println!("max correlator error {max_corr_err:.3e}");
    println!("outputs in {}", out.display());
    Ok(())
}

fn parse_word(n_total: usize, text: &str) -> Result<PauliString, Failure> {
    PauliString::parse_sparse(n_total, text)
        .or_else(|sparse_err| {
            text.parse::<PauliString>()
                .ok()
                .filter(|w| w.n_qubits() == n_total)
                .ok_or(sparse_err)
        })
        .map_err(Failure::from)
}

pub fn eval(args: EvalArgs) -> Result<(), Failure> {
    let ckpt = read_checkpoint(&args.checkpoint)?;
    let model = ckpt.restore()?;
    let (settings, _) = resolve(&ModelArgs::default(), None, Some(&args.mode))?;
    let mode = settings.estimator_mode();
    if args.observable.is_empty() {
        println!("energy {}", num(energy(&model, mode)?));
    }
    for text in &args.observable {
        let word = parse_word(2 * model.n_sub(), text)?;
        println!("{text} {}", num(observable(&model, &word, mode)?));
    }
    Ok(())
}

pub fn validate(args: ModelArgs) -> Result<(), Failure> {
    let (settings, _) = resolve(&args, None, None)?;
    let partition = settings.spec().build()?;
    let report = validate_partition(&partition)?;
    println!("{report}");
    Ok(())
}

pub fn ed(args: EdArgs) -> Result<(), Failure> {
    let (settings, file_out) = resolve(&args.model, None, None)?;
    let spec = settings.spec();
    let partition = spec.build()?;
    let (e, ground) = exact_ground_state(&partition)?;
    let corr = exact_correlators(&ground)?;
    let table = correlator_table(&corr);
    println!("energy {}", num(e));
    print!("{table}");
    if let Some(out) = args.out.or(file_out.map(PathBuf::from)) {
        ensure_dir(&out)?;
        write_text(&out.join("correlators.csv"), &table)?;
        let summary = json!({
            "format_version": FORMAT_VERSION,
            "model": spec.name(),
            "n_qubits": partition.n_total(),
            "ed_energy": e,
            "config": model_echo(&settings),
            "git_revision": GIT_REVISION,
        });
        write_json(&out.join("ed.json"), &summary)?;
    }
    Ok(())
}

fn model_echo(s: &Settings) -> serde_json::Value {
    json!({ "model": s.model.to_string(), "n_total": s.n_total, "h_field": s.h_field, "t": s.t, "v": s.v })
}
