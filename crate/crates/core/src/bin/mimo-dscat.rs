use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mimo_dscat::harness::{run_power_sweep, run_se_validation, ExperimentSpec};
use mimo_dscat::power::{
    check_feasibility_and_optimality, Algorithm, OptimalityReport, SinrTransform, SolverOptions,
};
use mimo_dscat::{NetworkConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "mimo-dscat",
    version,
    about = "Multi-cell massive MIMO uplink simulator"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Network configuration (JSON); defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    CoherenceRatio,
    InversePrelog,
}

impl From<Transform> for SinrTransform {
    fn from(t: Transform) -> Self {
        match t {
            Transform::CoherenceRatio => SinrTransform::CoherenceRatio,
            Transform::InversePrelog => SinrTransform::InversePrelog,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form vs Monte-Carlo SINR and SE at full power.
    ValidateSe {
        #[arg(long)]
        out: PathBuf,
        /// Antenna counts, comma separated; defaults to the config value.
        #[arg(long, value_delimiter = ',')]
        antennas: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        drops: usize,
        /// Monte-Carlo trials per drop (0 = closed form only).
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Power control over many drops and SE targets.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 1.75, 2.0])]
        xi: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
        algorithms: Vec<u8>,
        #[arg(long, default_value_t = 200)]
        drops: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Transform::CoherenceRatio)]
        transform: Transform,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Power control on a single drop.
    Optimize {
        /// Drop seed; the same seed always yields the same drop.
        #[arg(long, default_value_t = 1)]
        drop_seed: u64,
        /// SE target in b/s/Hz for every user.
        #[arg(long)]
        xi: f64,
        #[arg(long, default_value_t = 1)]
        algorithm: u8,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Transform::CoherenceRatio)]
        transform: Transform,
        /// Directory for `optimize.json` and `trace.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn algorithm(n: u8) -> anyhow::Result<Algorithm> {
    Algorithm::from_number(n).with_context(|| format!("unknown algorithm {n}, expected 1 or 2"))
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<NetworkConfig> {
    match path {
        Some(p) => NetworkConfig::from_json_file(p)
            .with_context(|| format!("reading config {}", p.display())),
        None => Ok(NetworkConfig::default()),
    }
}

#[derive(Serialize)]
struct OptimizeOutput {
    drop_seed: u64,
    xi: f64,
    algorithm: u8,
    epsilon: f64,
    p_star: Vec<f64>,
    sinr: Vec<f64>,
    satisfied: Vec<bool>,
    iterations: usize,
    converged: bool,
    total_power: f64,
    trace: Vec<f64>,
    report: OptimalityReport,
}

fn report_violations(violations: &[String]) -> ExitCode {
    if violations.is_empty() {
        return ExitCode::SUCCESS;
    }
    for v in violations {
        eprintln!("invariant violated: {v}");
    }
    ExitCode::from(2)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    let config = load_config(&cli.common.config)?;
    let mut spec = ExperimentSpec::new(config.clone());
    spec.master_seed = cli.common.seed;

    match cli.command {
        Command::ValidateSe {
            out,
            antennas,
            drops,
            trials,
        } => {
            if !antennas.is_empty() {
                spec.antennas = antennas;
            }
            spec.drops = drops;
            spec.mc_trials = trials;
            let result = run_se_validation(&spec)?;
            result.write(&out)?;
            for r in &result.results {
                print!(
                    "M={:<4} mean SE {:.4} b/s/Hz",
                    r.antennas,
                    r.mean_se_closed_form()
                );
                if let (Some(mc), Some(within)) = (&r.cdf_monte_carlo, r.fraction_within(0.03)) {
                    print!(
                        " (Monte-Carlo {:.4}, {:.1}% of users within 3%)",
                        mc.mean(),
                        100.0 * within
                    );
                }
                println!();
            }
            Ok(report_violations(&result.invariant_violations()))
        }
        Command::Sweep {
            xi,
            algorithms,
            drops,
            eps,
            transform,
            out,
        } => {
            spec.xi = xi;
            spec.algorithms = algorithms
                .into_iter()
                .map(algorithm)
                .collect::<anyhow::Result<_>>()?;
            spec.drops = drops;
            spec.epsilon = eps;
            spec.transform = transform.into();
            let sweep = run_power_sweep(&spec)?;
            sweep.write(&out)?;
            for s in &sweep.summaries {
                let sat = s.satisfied.map(|p| p.per_user).unwrap_or(f64::NAN);
                println!(
                    "xi={:<5} alg={} feasible {}/{} satisfied {:.3} mean power {:.3} mW (feasible drops)",
                    s.xi,
                    s.algorithm.number(),
                    s.feasible_drops,
                    s.drops,
                    sat,
                    s.mean_power_feasible.unwrap_or(f64::NAN),
                );
            }
            println!("{}", sweep.note);
            Ok(report_violations(&sweep.invariant_violations()))
        }
        Command::Optimize {
            drop_seed,
            xi,
            algorithm: number,
            eps,
            transform,
            out,
        } => {
            let algo = algorithm(number)?;
            if !(eps > 0.0) {
                bail!("--eps must be positive");
            }
            let scenario = Scenario::new(&config, drop_seed)?;
            let targets = scenario.targets(xi, transform.into())?;
            let alloc = scenario.optimize(&targets, algo, SolverOptions::with_epsilon(eps))?;
            let p_max = config.max_powers();
            let report = check_feasibility_and_optimality(
                &scenario.coefficients,
                &targets,
                &alloc.p,
                &p_max,
                eps,
            )?;

            let mut violations = Vec::new();
            if alloc
                .p
                .iter()
                .zip(&p_max)
                .any(|(&p, &cap)| !(0.0..=cap).contains(&p))
            {
                violations.push("power outside [0, P_max]".to_string());
            }
            if algo == Algorithm::MaxPower
                && alloc.all_satisfied()
                && alloc
                    .total_power_trace
                    .windows(2)
                    .any(|w| w[1] > w[0] * (1.0 + 1e-12))
            {
                violations.push("total power increased on a feasible drop".to_string());
            }
            if !alloc.converged {
                eprintln!(
                    "warning: not converged after {} iterations",
                    alloc.iterations
                );
            }

            let output = OptimizeOutput {
                drop_seed,
                xi,
                algorithm: number,
                epsilon: eps,
                total_power: alloc.total_power(),
                p_star: alloc.p.clone(),
                sinr: alloc.sinr.clone(),
                satisfied: alloc.satisfied.clone(),
                iterations: alloc.iterations,
                converged: alloc.converged,
                trace: alloc.total_power_trace.clone(),
                report,
            };
            let json = serde_json::to_string_pretty(&output)?;
            println!("{json}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("optimize.json"), format!("{json}\n"))?;
                let mut writer = csv::Writer::from_path(dir.join("trace.csv"))?;
                let mut header = vec!["iteration".to_string(), "total_power_mw".to_string()];
                header.extend((0..alloc.p.len()).map(|u| format!("p{u}_mw")));
                writer.write_record(&header)?;
                for (n, (total, p)) in alloc
                    .total_power_trace
                    .iter()
                    .zip(&alloc.power_trace)
                    .enumerate()
                {
                    let mut row = vec![n.to_string(), total.to_string()];
                    row.extend(p.iter().map(f64::to_string));
                    writer.write_record(&row)?;
                }
                writer.flush()?;
            }
            Ok(report_violations(&violations))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
