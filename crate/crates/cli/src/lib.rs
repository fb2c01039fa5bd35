//! Command-line front end: every library operation as a subcommand writing
//! JSON or CSV plus a run manifest into the output directory.

mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use bipartite_glass::complexity::{curve, smallest_zero_m0};
use bipartite_glass::free_energy::limiting_free_energy;
use bipartite_glass::random_matrix::{sample_goe, smallest_eigenvalue, verify_hessian_covariance};
use bipartite_glass::simulator::{
    estimate_free_energy, estimate_overlap_moments, find_local_minima, ground_state_scan, kac_rice_mc,
    DescentOptions, HamiltonianSample, KacRiceOptions, McmcOptions,
};
use bipartite_glass::{Error, MixtureSpec, SeedStream};

pub use output::{fmt_f64, to_json};
use output::{curve_csv, minima_csv, num, sha256_hex, Artifacts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bipartite-glass", version, about = "Free energy and complexity of spherical bipartite spin glasses")]
struct Cli {
    /// Directory receiving results and the run manifest.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "BIPARTITE_GLASS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limiting free energy and the overlap fixed point.
    FreeEnergy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Upper and lower complexity bounds on a threshold grid.
    Complexity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t_max: f64,
        #[arg(long, default_value_t = 31)]
        t_steps: usize,
        /// Emit only the smallest zero of the upper bound (pure models).
        #[arg(long)]
        m0: bool,
    },
    /// Random-matrix checks.
    Rmt {
        #[command(subcommand)]
        command: RmtCommand,
    },
    /// Finite-N Monte Carlo.
    Simulate {
        #[command(subcommand)]
        command: SimCommand,
    },
}

#[derive(Subcommand, Debug)]
enum RmtCommand {
    /// Empirical Hessian covariances at the double north pole against closed forms.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mean smallest GOE eigenvalue.
    GoeEdge {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct SimCommon {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// Plain Monte Carlo estimate of the finite-N free energy.
    FreeEnergy {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, default_value_t = 200)]
        n_disorder: usize,
        #[arg(long, default_value_t = 100_000)]
        n_sphere: usize,
    },
    /// Overlap second moments under the Gibbs measure.
    Overlaps {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, default_value_t = 8)]
        n_disorder: usize,
        #[arg(long, default_value_t = 50)]
        burn_in: usize,
        #[arg(long, default_value_t = 200)]
        blocks: usize,
        #[arg(long, default_value_t = 50)]
        moves: usize,
        #[arg(long, default_value_t = 0.5)]
        scale: f64,
    },
    /// Multistart enumeration of local minima of one sampled Hamiltonian.
    Minima {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, default_value_t = 100)]
        n_starts: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Monte Carlo Kac-Rice count of critical points below `N t`.
    KacRice {
        #[command(flatten)]
        common: SimCommon,
        /// Level; `inf` counts at every energy.
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 48)]
        n_x: usize,
        #[arg(long, default_value_t = 2000)]
        n_mc: usize,
        /// Index to count, or `all`.
        #[arg(long, default_value = "0")]
        index: String,
        /// Drop the off-diagonal Hessian block.
        #[arg(long)]
        coupled: bool,
    },
    /// Best local minimum per Hamiltonian against the ground-state bound.
    GroundState {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, default_value_t = 100)]
        n_hams: usize,
        #[arg(long, default_value_t = 20)]
        n_starts: usize,
    },
}

/// Bad configuration or arguments; maps to the validation exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Invalid(String);

fn load_config(path: &Path, allow_empty: bool) -> Result<(MixtureSpec, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let spec: MixtureSpec = serde_json::from_slice(&bytes)
        .map_err(|e| Invalid(format!("config {}: {e}", path.display())))?;
    match spec.validate() {
        Ok(_) => {}
        Err(Error::EmptyMixture) if allow_empty => {}
        Err(e) => return Err(e.into()),
    }
    Ok((spec, sha256_hex(&bytes)))
}

struct Run {
    subcommand: &'static str,
    seed: Option<u64>,
    config_digest: Option<String>,
    parameters: Value,
    artifacts: Artifacts,
}

fn exit_code(e: &anyhow::Error) -> i32 {
    if let Some(err) = e.downcast_ref::<Error>() {
        if err.is_numeric() {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_VALIDATION
        }
    } else if e.downcast_ref::<Invalid>().is_some() {
        EXIT_VALIDATION
    } else {
        EXIT_IO
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = |name: &str| cli.out.join(name);
    let run = match &cli.command {
        Command::FreeEnergy { config, tol, max_iter } => {
            let (spec, digest) = load_config(config, false)?;
            let r = limiting_free_energy(&spec, *tol, *max_iter)?;
            let fp = &r.fixed_point;
            let mut run = Run::new("free-energy", None, Some(digest), json!({"tol": num(*tol), "max_iter": max_iter}));
            run.artifacts.write_json(
                &out("free_energy.json"),
                &json!({
                    "value": num(r.value),
                    "a0": num(fp.a0),
                    "b0": num(fp.b0),
                    "residuals": [num(fp.residual1), num(fp.residual2)],
                    "iterations": fp.iterations,
                    "hessian_psd": r.hessian_psd,
                    "grid_min_agrees": r.grid_min_agrees,
                }),
            )?;
            run
        }
        Command::Complexity { config, t_min, t_max, t_steps, m0 } => {
            let (spec, digest) = load_config(config, false)?;
            let params = json!({"t_min": num(*t_min), "t_max": num(*t_max), "t_steps": t_steps, "m0": m0});
            let mut run = Run::new("complexity", None, Some(digest), params);
            if *m0 {
                let (p, q) = spec
                    .pure_degrees()
                    .ok_or_else(|| Invalid("m0 needs a pure model".into()))?;
                let m = smallest_zero_m0(p, q, spec.gamma)?;
                run.artifacts.write_json(&out("m0.json"), &json!({"m0": num(m)}))?;
            } else {
                if *t_steps == 0 || !(t_min <= t_max) {
                    return Err(Invalid("need t_steps >= 1 and t_min <= t_max".into()).into());
                }
                let grid: Vec<f64> = (0..*t_steps)
                    .map(|i| {
                        if *t_steps == 1 {
                            *t_min
                        } else {
                            t_min + (t_max - t_min) * i as f64 / (*t_steps - 1) as f64
                        }
                    })
                    .collect();
                let c = curve(&spec, &grid)?;
                run.artifacts.write(&out("complexity.csv"), &curve_csv(&c)?)?;
            }
            run
        }
        Command::Rmt { command } => match command {
            RmtCommand::Check { config, n1, n2, samples, seed } => {
                let (spec, digest) = load_config(config, false)?;
                let report = verify_hessian_covariance(&spec, *n1, *n2, *samples, SeedStream::new(*seed))?;
                let params = json!({"n1": n1, "n2": n2, "samples": samples});
                let mut run = Run::new("rmt check", Some(*seed), Some(digest), params);
                run.artifacts.write_json(&out("covariance_report.json"), &serde_json::to_value(&report)?)?;
                run
            }
            RmtCommand::GoeEdge { n, samples, seed } => {
                if *n == 0 || *samples == 0 {
                    return Err(Invalid("need n >= 1 and samples >= 1".into()).into());
                }
                let mut rng = SeedStream::new(*seed).rng();
                let mut total = 0.0;
                for _ in 0..*samples {
                    total += smallest_eigenvalue(&sample_goe(*n, &mut rng).entries)?;
                }
                let mut run = Run::new("rmt goe-edge", Some(*seed), None, json!({"n": n, "samples": samples}));
                run.artifacts.write_json(
                    &out("goe_edge.json"),
                    &json!({"mean_lambda_min": num(total / *samples as f64), "target": num(-std::f64::consts::SQRT_2)}),
                )?;
                run
            }
        },
        Command::Simulate { command } => simulate(command, &out)?,
    };
    run.finish(&cli.out, started)
}

fn simulate(command: &SimCommand, out: &dyn Fn(&str) -> PathBuf) -> Result<Run> {
    let common = match command {
        SimCommand::FreeEnergy { common, .. }
        | SimCommand::Overlaps { common, .. }
        | SimCommand::Minima { common, .. }
        | SimCommand::KacRice { common, .. }
        | SimCommand::GroundState { common, .. } => common,
    };
    let allow_empty = matches!(command, SimCommand::FreeEnergy { .. } | SimCommand::Overlaps { .. });
    let (spec, digest) = load_config(&common.config, allow_empty)?;
    let (n1, n2, seed) = (common.n1, common.n2, SeedStream::new(common.seed));
    let base = |extra: Value| {
        let mut m = Map::new();
        m.insert("n1".into(), json!(n1));
        m.insert("n2".into(), json!(n2));
        if let Value::Object(e) = extra {
            m.extend(e);
        }
        Value::Object(m)
    };
    let new_run = |name: &'static str, extra: Value| Run::new(name, Some(common.seed), Some(digest.clone()), base(extra));
    let run = match command {
        SimCommand::FreeEnergy { n_disorder, n_sphere, .. } => {
            let est = estimate_free_energy(&spec, n1, n2, *n_disorder, *n_sphere, seed)?;
            let mut run = new_run("simulate free-energy", json!({"n_disorder": n_disorder, "n_sphere": n_sphere}));
            run.artifacts.write_json(
                &out("free_energy_mc.json"),
                &json!({"value": num(est.value), "stderr": num(est.stderr), "n_sphere": est.n_sphere,
                        "per_disorder": est.per_disorder.iter().map(|&x| num(x)).collect::<Vec<_>>()}),
            )?;
            run
        }
        SimCommand::Overlaps { n_disorder, burn_in, blocks, moves, scale, .. } => {
            let opts = McmcOptions {
                n_disorder: *n_disorder,
                burn_in_blocks: *burn_in,
                blocks: *blocks,
                moves_per_block: *moves,
                initial_scale: *scale,
            };
            let m = estimate_overlap_moments(&spec, n1, n2, &opts, seed)?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            let mut run = new_run("simulate overlaps", serde_json::to_value(opts)?);
            run.artifacts.write_json(&out("overlaps.json"), &serde_json::to_value(&m)?)?;
            run
        }
        SimCommand::Minima { n_starts, tol, .. } => {
            let h = HamiltonianSample::sample(&spec, n1, n2, seed.named("hamiltonian"))?;
            let opts = DescentOptions { tol: *tol, ..Default::default() };
            let search = find_local_minima(&h, *n_starts, &opts, seed.named("starts"))?;
            let mut run = new_run("simulate minima", json!({"n_starts": n_starts, "tol": num(*tol)}));
            run.artifacts.write(&out("minima.csv"), &minima_csv(&search)?)?;
            run
        }
        SimCommand::KacRice { t, n_x, n_mc, index, coupled, .. } => {
            let index = match index.as_str() {
                "all" => None,
                k => Some(k.parse::<usize>().map_err(|_| Invalid(format!("--index must be a count or `all`, got {k}")))?),
            };
            let opts = KacRiceOptions { n_x: *n_x, n_mc: *n_mc, index, coupled: *coupled };
            let est = kac_rice_mc(&spec, n1, n2, *t, &opts, seed)?;
            let mut run = new_run(
                "simulate kac-rice",
                json!({"t": num(*t), "n_x": n_x, "n_mc": n_mc, "index": index, "coupled": coupled}),
            );
            run.artifacts.write_json(
                &out("kac_rice.json"),
                &json!({"estimate": num(est.estimate), "stderr": num(est.stderr), "log_estimate": num(est.log_estimate),
                        "log_prefactor": num(est.log_prefactor), "window": [num(est.window.0), num(est.window.1)],
                        "tail_fraction": num(est.tail_fraction), "nodes": serde_json::to_value(&est.nodes)?}),
            )?;
            run
        }
        SimCommand::GroundState { n_hams, n_starts, .. } => {
            let scan = ground_state_scan(&spec, n1, n2, *n_hams, *n_starts, seed)?;
            let mut run = new_run("simulate ground-state", json!({"n_hams": n_hams, "n_starts": n_starts}));
            run.artifacts.write_json(&out("ground_state.json"), &serde_json::to_value(&scan)?)?;
            run
        }
    };
    Ok(run)
}

impl Run {
    fn new(subcommand: &'static str, seed: Option<u64>, config_digest: Option<String>, parameters: Value) -> Self {
        Run {
            subcommand,
            seed,
            config_digest,
            parameters,
            artifacts: Artifacts::default(),
        }
    }

    fn finish(mut self, dir: &Path, started: Instant) -> Result<()> {
        let outputs: Map<String, Value> = self
            .artifacts
            .files
            .iter()
            .map(|(p, d)| (p.file_name().unwrap().to_string_lossy().into_owned(), Value::String(d.clone())))
            .collect();
        let manifest = json!({
            "tool": "bipartite-glass",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "seed": self.seed,
            "config_sha256": self.config_digest,
            "parameters": self.parameters,
            "wall_clock_seconds": num(started.elapsed().as_secs_f64()),
            "outputs": outputs,
        });
        let path = dir.join("run_manifest.json");
        fs::write(&path, to_json(&manifest)).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.files.clear();
        Ok(())
    }
}
