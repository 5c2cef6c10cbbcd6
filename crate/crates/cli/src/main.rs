//! `uav-aoi`: scenario generation, training, evaluation, sweeps and plots.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime or numeric error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use uav_aoi::harness::config::{parse_lambda_list, ExperimentConfig};
use uav_aoi::harness::metrics::write_csv;
use uav_aoi::harness::plot::emit_plots;
use uav_aoi::harness::scenario::{cluster_devices, generate_scenario, Scenario};
use uav_aoi::harness::sweep::{checkpoint_path, eval_cell, load_or_generate_scenario, run_sweep, train_cell};
use uav_aoi::nn::Checkpoint;
use uav_aoi::policy::PolicyKind;
use uav_aoi::{Error, Result};

#[derive(Parser)]
#[command(name = "uav-aoi", version, about = "UAV-relayed age-of-information scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place devices and cluster them; writes scenario.json.
    Generate(Common),
    /// Re-cluster the devices of an existing scenario.json.
    Cluster(Common),
    /// Train one DQN per lambda and training seed.
    Train(Common),
    /// Evaluate a policy on the run's scenario.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "dqn")]
        policy: PolicyArg,
        /// Checkpoint to evaluate; defaults to the run's checkpoint for the
        /// first lambda and first training seed.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and evaluate every lambda, evaluate the baselines, then plot.
    Sweep(Common),
    /// Render figures from a finished run directory.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); the shipped desk profile when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override: scenario seed for generate/cluster, training seed for
    /// train/sweep, evaluation seed for eval.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory (overrides run.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated lambda list, e.g. 0,25,100.
    #[arg(long)]
    lambda: Option<String>,
    /// Episode count: training episodes for train/sweep, evaluation
    /// episodes for eval.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    Dqn,
    Ga,
    Nn,
    Rw,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Dqn => PolicyKind::Dqn,
            PolicyArg::Ga => PolicyKind::Ga,
            PolicyArg::Nn => PolicyKind::Nn,
            PolicyArg::Rw => PolicyKind::Rw,
        }
    }
}

enum SeedUse {
    Scenario,
    Train,
    Eval,
}

fn load_config(c: &Common, seed_use: SeedUse, episodes_are_eval: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::desk(),
    };
    if let Some(out) = &c.out {
        cfg.run.output_dir = out.clone();
    }
    if let Some(l) = &c.lambda {
        cfg.run.lambdas = parse_lambda_list(l)?;
    }
    if let Some(n) = c.episodes {
        if episodes_are_eval {
            cfg.run.eval_episodes = n;
            cfg.run.logged_episodes = cfg.run.logged_episodes.min(n);
        } else {
            cfg.run.train_episodes = n;
        }
    }
    if let Some(s) = c.seed {
        match seed_use {
            SeedUse::Scenario => cfg.scenario.seed = s,
            SeedUse::Train => cfg.run.train_seeds = vec![s],
            SeedUse::Eval => cfg.run.eval_seed = s,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_clusters(s: &Scenario) {
    println!("capacity {} clusters {}", s.assignment.capacity, s.assignment.len());
    for (l, (m, c)) in s.assignment.members.iter().zip(&s.assignment.centroids).enumerate() {
        println!("cluster {}: {} devices, centroid ({:.1}, {:.1})", l + 1, m.len(), c[0], c[1]);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = load_config(&c, SeedUse::Scenario, false)?;
            let s = generate_scenario(&cfg, cfg.scenario.seed)?;
            let path = cfg.run.output_dir.join("scenario.json");
            s.save(&path)?;
            print_clusters(&s);
            println!("wrote {}", path.display());
        }
        Command::Cluster(c) => {
            let cfg = load_config(&c, SeedUse::Scenario, false)?;
            let path = cfg.run.output_dir.join("scenario.json");
            let mut s = Scenario::load(&path)?;
            s.assignment = cluster_devices(&cfg, &s.devices, cfg.scenario.seed)?;
            s.seed = cfg.scenario.seed;
            s.config_hash = cfg.hash()?;
            s.save(&path)?;
            print_clusters(&s);
            println!("wrote {}", path.display());
        }
        Command::Train(c) => {
            let cfg = load_config(&c, SeedUse::Train, false)?;
            let out = cfg.run.output_dir.as_path();
            let scenario = load_or_generate_scenario(&cfg, out)?;
            for &lambda in &cfg.run.lambdas {
                for &seed in &cfg.run.train_seeds {
                    let o = train_cell(&cfg, &scenario, lambda, seed, out)?;
                    let tail = &o.episodes[o.episodes.len().saturating_sub(100)..];
                    let mean = tail.iter().map(|e| e.reward).sum::<f64>() / tail.len().max(1) as f64;
                    println!(
                        "lambda {lambda} seed {seed}: {} episodes, {} gradient steps, last-100 mean reward {mean:.3} -> {}",
                        o.episodes.len(),
                        o.train_steps,
                        checkpoint_path(out, lambda, seed).display()
                    );
                }
            }
        }
        Command::Eval { common, policy, checkpoint } => {
            let cfg = load_config(&common, SeedUse::Eval, true)?;
            let out = cfg.run.output_dir.as_path();
            let scenario = load_or_generate_scenario(&cfg, out)?;
            let kind = PolicyKind::from(policy);
            let lambda = cfg.run.lambdas[0];
            let seed = cfg.run.train_seeds[0];
            let (point, _) = if kind == PolicyKind::Dqn {
                let path = checkpoint.unwrap_or_else(|| checkpoint_path(out, lambda, seed));
                let ck = Checkpoint::load(&path)?;
                eval_cell(&cfg, &scenario, kind, Some((&ck.net, lambda, seed)), out)?
            } else {
                eval_cell(&cfg, &scenario, kind, None, out)?
            };
            println!(
                "{} over {} episodes: reward {:.4} ± {:.4}, ergodic age {:.4} ± {:.4}, ergodic power {:.4e} ± {:.2e} W",
                point.policy,
                point.episodes,
                point.reward,
                point.reward_ci,
                point.ergodic_age,
                point.age_ci,
                point.ergodic_power_w,
                point.power_ci
            );
            let name = uav_aoi::harness::sweep::cell_name(kind, point.lambda, point.train_seed);
            write_csv(&out.join(format!("eval_{name}.csv")), &[point])?;
        }
        Command::Sweep(c) => {
            let cfg = load_config(&c, SeedUse::Train, false)?;
            let res = run_sweep(&cfg)?;
            for p in &res.points {
                println!(
                    "{:>3} lambda {:>6} seed {:>4}: reward {:>9.3}  age {:.4}  power {:.4e} W",
                    p.policy,
                    p.lambda.map_or("-".into(), |l| l.to_string()),
                    p.train_seed.map_or("-".into(), |s| s.to_string()),
                    p.reward,
                    p.ergodic_age,
                    p.ergodic_power_w
                );
            }
            plot_dir(&cfg.run.output_dir)?;
        }
        Command::Plot(c) => {
            let cfg = load_config(&c, SeedUse::Train, false)?;
            plot_dir(&cfg.run.output_dir)?;
        }
    }
    Ok(())
}

fn plot_dir(dir: &Path) -> Result<()> {
    for p in emit_plots(dir)? {
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}
