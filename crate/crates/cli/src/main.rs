// Copyright 2026 The DQNN Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! `dqnn` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dqnn::complexity::{circuit_cost, cost_row, render_csv, render_text, resource_table};
use dqnn::data::{gen_donut, gen_regression, gen_regression_noisy, write_state_bundle, SptGrid};
use dqnn::experiment::{evaluate_checkpoint, run_experiment, RunConfig};
use dqnn::grad::grad_check;
use dqnn::model::Checkpoint;
use dqnn::universality::{chord_overlap_identity_check, check_indicator_convergence, fit_bump_demo, ConvergenceSpec};
use dqnn::DqnnError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_CHECK_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "dqnn", version, about = "Train and check duplication-free quantum neural networks")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "DQNN_THREADS")]
    threads: Option<usize>,
    /// Directory for output artifacts.
    #[arg(long, global = true, env = "DQNN_OUTPUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV plus a manifest.
    GenData(GenDataArgs),
    /// Train a model from a JSON run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a checkpoint on the held-out data of a configuration.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Compare analytic gradients with central differences on random instances.
    GradCheck {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        heads: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        abs_floor: f64,
    },
    /// Circuit cost `n_g * n_b`, or the qubit table for `d` features.
    Complexity {
        #[arg(long)]
        ng: Option<u64>,
        #[arg(long)]
        nb: Option<u64>,
        #[arg(long)]
        d: Option<u64>,
        /// Polynomial order of the baselines.
        #[arg(long, default_value_t = 3)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Indicator-limit, chord-identity and bump-fit checks.
    UniversalityCheck {
        /// JSON file with a convergence spec; defaults are used otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 8)]
        features: usize,
    },
    /// Ground states of the cluster chain on a parameter grid.
    SptGen {
        #[arg(long, default_value_t = 8)]
        spins: usize,
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        /// Grid size as `H1xH2`.
        #[arg(long, default_value = "10x10", value_parser = parse_grid)]
        grid: (usize, usize),
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthetic {
    Regression,
    Donut,
}

#[derive(Args)]
struct GenDataArgs {
    kind: Synthetic,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    seed: u64,
    /// Gaussian label noise (regression only).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected H1xH2")?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

enum Failure {
    Lib(DqnnError),
    Check(String),
}

impl From<DqnnError> for Failure {
    fn from(e: DqnnError) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &DqnnError) -> u8 {
    match e {
        DqnnError::InvalidArgument(_) | DqnnError::Precondition(_) | DqnnError::OutOfRange { .. } => EXIT_VALIDATION,
        DqnnError::Parse { .. }
        | DqnnError::Schema(_)
        | DqnnError::Format(_)
        | DqnnError::Consistency(_)
        | DqnnError::ZeroNormImage { .. }
        | DqnnError::DomainViolation { .. }
        | DqnnError::MalformedEncoding(_)
        | DqnnError::Io { .. }
        | DqnnError::Json(_) => EXIT_DATA,
        DqnnError::Solver { .. } => EXIT_SOLVER,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), DqnnError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| DqnnError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), DqnnError> {
    std::fs::write(path, text).map_err(|e| DqnnError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), DqnnError> {
    std::fs::create_dir_all(dir).map_err(|e| DqnnError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn gen_data(out: &Path, args: &GenDataArgs) -> CmdResult {
    if args.m == 0 {
        return Err(DqnnError::InvalidArgument("--m must be positive".into()).into());
    }
    let (name, data) = match args.kind {
        Synthetic::Regression if args.noise > 0.0 => ("regression", gen_regression_noisy(args.m, args.seed, args.noise)),
        Synthetic::Regression => ("regression", gen_regression(args.m, args.seed)),
        Synthetic::Donut => ("donut", gen_donut(args.m, args.seed)),
    };
    ensure_dir(out)?;
    let csv = out.join(format!("{name}.csv"));
    data.write_csv(&csv)?;
    write_json(
        &out.join(format!("{name}.manifest.json")),
        &json!({"dataset": name, "samples": args.m, "seed": args.seed, "noise": args.noise, "file": csv.file_name().and_then(|f| f.to_str())}),
    )?;
    println!("wrote {} rows to {}", data.len(), csv.display());
    Ok(())
}

fn train(out: &Path, config: &Path) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    let out = cfg.output_dir.clone().unwrap_or_else(|| out.to_path_buf());
    let report = run_experiment(&cfg)?;
    ensure_dir(&out)?;
    let single = report.fits.len() == 1;
    let mut fits = Vec::new();
    for f in &report.fits {
        let suffix = if single { String::new() } else { format!("-{}", f.label) };
        f.checkpoint.save(&out.join(format!("checkpoint{suffix}.json")))?;
        f.history.write_csv(&out.join(format!("history{suffix}.csv")))?;
        write_json(
            &out.join(format!("history{suffix}.json")),
            &json!({"config_hash": report.config_hash, "master_seed": report.master_seed, "history": f.history}),
        )?;
        println!(
            "{}: train {} = {:.6}, test {} = {:.6}, final loss {:.6e} ({:.1}s)",
            f.label, f.metric, f.train_metric, f.metric, f.test_metric, f.history.final_loss, f.wall_clock_secs
        );
        fits.push(json!({
            "label": f.label,
            f.metric.clone(): f.test_metric,
            format!("train_{}", f.metric): f.train_metric,
            "initial_loss": f.history.initial_loss,
            "final_loss": f.history.final_loss,
            "epochs": f.history.epochs.len(),
            "restart": f.restart,
            "wall_clock_secs": f.wall_clock_secs,
        }));
    }
    let mut summary = json!({
        "task": report.task,
        "config_hash": report.config_hash,
        "master_seed": report.master_seed,
        "mean_test_metric": report.mean_test_metric,
        "wall_clock_secs": report.wall_clock_secs,
        "fits": fits,
    });
    if cfg.task.is_regression() {
        summary["mre"] = json!(report.mean_test_metric);
    } else {
        summary["accuracy"] = json!(report.mean_test_metric);
        summary["mean_test_error"] = json!(report.mean_test_error());
    }
    write_json(&out.join("summary.json"), &summary)?;
    Ok(())
}

fn eval(out: &Path, config: &Path, checkpoint: &Path) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let results = evaluate_checkpoint(&cfg, &ckpt)?;
    let metric = if cfg.task.is_regression() { "mre" } else { "accuracy" };
    for (label, v) in &results {
        println!("{label}: {metric} = {v:.6}");
    }
    ensure_dir(out)?;
    write_json(
        &out.join("eval.json"),
        &json!({
            "config_hash": cfg.hash(),
            "master_seed": cfg.train.seed,
            "checkpoint_hash": ckpt.config_hash,
            "metric": metric,
            "results": results.iter().map(|(l, v)| json!({"label": l, "value": v})).collect::<Vec<_>>(),
        }),
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn grad_check_cmd(out: &Path, n: usize, seeds: u64, heads: usize, step: f64, rel_tol: f64, abs_floor: f64) -> CmdResult {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut per_seed = Vec::new();
    for seed in 0..seeds {
        let rep = grad_check(n, heads, seed, step, rel_tol, abs_floor)?;
        worst = worst.max(rep.max_rel_err);
        if !rep.passed {
            failures.push(seed);
        }
        per_seed.push(json!({"seed": seed, "max_rel_err": rep.max_rel_err, "entries": rep.entries.len()}));
    }
    let passed = failures.is_empty();
    ensure_dir(out)?;
    write_json(
        &out.join("grad_check.json"),
        &json!({"n": n, "seeds": seeds, "heads": heads, "step": step, "rel_tol": rel_tol, "abs_floor": abs_floor,
                "max_rel_err": worst, "passed": passed, "failed_seeds": failures, "per_seed": per_seed}),
    )?;
    println!("grad-check n={n} seeds={seeds}: max relative error {worst:.3e} ({})", if passed { "pass" } else { "FAIL" });
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("max relative error {worst:.3e} exceeds {rel_tol:e}")))
    }
}

#[allow(clippy::too_many_arguments)]
fn complexity_cmd(ng: Option<u64>, nb: Option<u64>, d: Option<u64>, m: u64, layers: usize, qubits: usize, csv: bool) -> CmdResult {
    match (ng, nb, d) {
        (Some(ng), Some(nb), None) => {
            let row = cost_row("dqnn", ng, nb, qubits, layers)?;
            if csv {
                println!("n_g,n_b,c,ansatz_gates,ansatz_rotations");
                println!("{},{},{},{},{}", row.n_g, row.n_b, row.c, row.ansatz_gates, row.ansatz_rotations);
            } else {
                println!("{}", circuit_cost(ng, nb)?);
            }
            Ok(())
        }
        (None, nb, Some(d)) => {
            let table = resource_table(d, m, layers, nb.unwrap_or(1))?;
            print!("{}", if csv { render_csv(&table) } else { render_text(&table) });
            Ok(())
        }
        _ => Err(DqnnError::InvalidArgument("give either --ng and --nb, or --d".into()).into()),
    }
}

fn universality_cmd(out: &Path, spec: Option<&Path>, c: Option<f64>, features: usize) -> CmdResult {
    let mut s = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| DqnnError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(DqnnError::from)?
        }
        None => ConvergenceSpec::default(),
    };
    if let Some(c) = c {
        s.c = c;
    }
    let conv = check_indicator_convergence(&s)?;
    let mut worst_chord = 0.0f64;
    let pairs = dqnn::universality::sample_ring_states(&s.xi_features, s.kappa1, s.kappa2, 2000, 1.0, s.seed)?;
    for pair in pairs.chunks(2) {
        if let [x, y] = pair {
            worst_chord = worst_chord.max(chord_overlap_identity_check(x, y));
        }
    }
    let fit = fit_bump_demo(features)?;
    let passed = conv.pass && worst_chord < 1e-12 && fit.max_error < 0.05;
    ensure_dir(out)?;
    write_text(&out.join("universality.csv"), &conv.to_csv())?;
    write_json(
        &out.join("universality.json"),
        &json!({"spec": s, "convergence": conv, "chord_residual": worst_chord, "bump_fit": fit, "passed": passed}),
    )?;
    for r in &conv.rows {
        println!("a = {:>8}: inside {:.3e}, outside {:.3e}", r.a, r.inside_dev, r.outside_dev);
    }
    println!("chord identity residual {worst_chord:.3e}; bump fit max error {:.4}", fit.max_error);
    if passed {
        Ok(())
    } else {
        Err(Failure::Check("universality checks failed".into()))
    }
}

fn spt_gen(out: &Path, spins: usize, j: f64, grid: (usize, usize)) -> CmdResult {
    let g = SptGrid {
        num_spins: spins,
        j,
        ..SptGrid::standard(4)?
    };
    let data = g.sample(grid)?;
    ensure_dir(out)?;
    let path = out.join(format!("spt{spins}_{}x{}.bin", grid.0, grid.1));
    write_state_bundle(&path, &data)?;
    let counts = data.class_counts();
    write_json(
        &out.join(format!("spt{spins}_{}x{}.manifest.json", grid.0, grid.1)),
        &json!({"grid": g, "counts": [grid.0, grid.1], "spt": counts[0], "trivial": counts[1]}),
    )?;
    println!("wrote {} states to {} ({} labeled SPT)", data.len(), path.display(), counts[0]);
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let out = cli.out_dir.as_path();
    match &cli.cmd {
        Command::GenData(args) => gen_data(out, args),
        Command::Train { config } => train(out, config),
        Command::Eval { config, checkpoint } => eval(out, config, checkpoint),
        &Command::GradCheck {
            n,
            seeds,
            heads,
            step,
            rel_tol,
            abs_floor,
        } => grad_check_cmd(out, n, seeds, heads, step, rel_tol, abs_floor),
        &Command::Complexity {
            ng,
            nb,
            d,
            m,
            layers,
            qubits,
            csv,
        } => complexity_cmd(ng, nb, d, m, layers, qubits, csv),
        Command::UniversalityCheck { spec, c, features } => universality_cmd(out, spec.as_deref(), *c, *features),
        &Command::SptGen { spins, j, grid } => spt_gen(out, spins, j, grid),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
