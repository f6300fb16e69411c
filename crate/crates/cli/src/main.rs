use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use harmonic_core::analysis;
use harmonic_core::equilibrium::{
    brute_force_epsilon_pne, find_pne_dynamics, find_pne_enumerative, verify_pne, DynamicsOptions,
    EnumerationOptions, Game,
};
use harmonic_core::harness::{
    self, delta_from_c, AdversarialPolicy, InstanceSpec, SweepConfig, SweepSpace,
};
use harmonic_core::Instance;
use serde_json::json;

#[derive(Parser)]
#[command(name = "harmonic-lab", version, about = "Equilibria and price of anarchy of the Harmonic facility-location mechanism")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Finder {
    Enum,
    Dyn,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Consistency,
    Robustness,
}

#[derive(Subcommand)]
enum Command {
    /// Find pure equilibria and report PoA.
    FindPne {
        instance: PathBuf,
        #[arg(long, conflicts_with = "c")]
        delta: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum, default_value = "enum")]
        finder: Finder,
        /// Grid resolution for the grid finder.
        #[arg(long, default_value_t = 64)]
        grid_k: usize,
    },
    /// Check a path profile `{"y": [...]}` for equilibrium.
    Verify {
        instance: PathBuf,
        profile: PathBuf,
        #[arg(long, conflicts_with = "c")]
        delta: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Optimal facility and prediction accuracy.
    Opt { instance: PathBuf },
    /// Seeded experiment sweep written as CSV.
    Sweep {
        kind: SweepKind,
        /// line, l2, l<p>, circle or segment.
        #[arg(long, default_value = "l2")]
        space: String,
        /// Agent counts, e.g. `3,4,5` or `3..8`.
        #[arg(long, default_value = "3..6")]
        n: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        c: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Consistency sweeps: move the prediction this fraction toward a
        /// random agent on odd trials.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        /// Robustness sweeps: far-corner, random-distant, antipode.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines log of every check report.
        #[arg(long)]
        checks: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Reproduce the circle, one-agent-on-prediction and L1 examples.
    PaperExamples,
}

/// Failure of a check rather than of the input.
struct CheckFailed;

fn load_spec(path: &Path) -> Result<InstanceSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn resolve_delta(spec: &InstanceSpec, inst: &Instance, delta: Option<f64>, c: Option<f64>) -> Result<f64> {
    if let Some(d) = delta {
        return Ok(d);
    }
    if let Some(c) = c {
        return Ok(delta_from_c(inst, c)?);
    }
    spec.resolve_delta(inst)?
        .context("no delta: pass --delta or --c, or set one in the instance file")
}

fn parse_n(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|v| Ok(v.trim().parse()?)).collect()
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn run(cli: Cli) -> Result<std::result::Result<(), CheckFailed>> {
    match cli.command {
        Command::FindPne {
            instance,
            delta,
            c,
            finder,
            grid_k,
        } => {
            let spec = load_spec(&instance)?;
            let inst = spec.instance()?;
            let delta = resolve_delta(&spec, &inst, delta, c)?;
            let certs = match finder {
                Finder::Enum => find_pne_enumerative(&inst, delta, &EnumerationOptions::default())?,
                Finder::Dyn => match find_pne_dynamics(&inst, delta, None, DynamicsOptions::default())? {
                    Ok(c) => vec![c],
                    Err(nc) => {
                        print_json(&json!({ "non_convergence": nc }));
                        return Ok(Err(CheckFailed));
                    }
                },
                Finder::Grid => {
                    let game = Game::new(&inst, delta)?;
                    let profiles = brute_force_epsilon_pne(&inst, delta, grid_k, game.eps())?;
                    print_json(&json!({ "delta": delta, "grid_k": grid_k, "profiles": profiles }));
                    return Ok(Ok(()));
                }
            };
            let poa = analysis::poa(&inst, &certs)?;
            let out: Vec<_> = certs.iter().map(|c| c.to_json()).collect();
            let sc: Vec<f64> = certs.iter().map(|c| c.social_cost).collect();
            print_json(&json!({
                "delta": delta,
                "equilibria": out,
                "social_cost": sc,
                "poa": poa,
            }));
            Ok(Ok(()))
        }
        Command::Verify {
            instance,
            profile,
            delta,
            c,
        } => {
            let spec = load_spec(&instance)?;
            let inst = spec.instance()?;
            let delta = resolve_delta(&spec, &inst, delta, c)?;
            let text = fs::read_to_string(&profile).with_context(|| format!("reading {}", profile.display()))?;
            let prof: serde_json::Value = serde_json::from_str(&text)?;
            let y: Vec<f64> = serde_json::from_value(prof.get("y").cloned().context("profile needs a \"y\" array")?)?;
            let eps = Game::new(&inst, delta)?.eps();
            match verify_pne(&inst, &y, delta, eps)? {
                Ok(cert) => {
                    print_json(&json!({ "equilibrium": true, "certificate": cert.to_json(), "social_cost": cert.social_cost }));
                    Ok(Ok(()))
                }
                Err(v) => {
                    print_json(&json!({ "equilibrium": false, "violations": v }));
                    Ok(Err(CheckFailed))
                }
            }
        }
        Command::Opt { instance } => {
            let inst = load_spec(&instance)?.instance()?;
            let opt = analysis::optimal_facility(&inst);
            let gamma = analysis::gamma_with_opt(&inst, opt.value).ok();
            print_json(&json!({ "opt": opt, "gamma": gamma, "prediction_cost": inst.prediction_cost() }));
            Ok(Ok(()))
        }
        Command::Sweep {
            kind,
            space,
            n,
            c,
            trials,
            seed,
            perturb,
            policy,
            out,
            checks,
            sequential,
        } => {
            let mut cfg = SweepConfig::new(SweepSpace::parse(&space)?, parse_n(&n)?, c, trials, seed);
            cfg.perturb = perturb;
            if !policy.is_empty() {
                cfg.policies = policy
                    .iter()
                    .map(|p| AdversarialPolicy::parse(p))
                    .collect::<Result<_, _>>()?;
            }
            if sequential {
                cfg.exec = harmonic_core::par::Execution::Sequential;
            }
            let result = match kind {
                SweepKind::Consistency => harness::run_consistency_sweep(&cfg)?,
                SweepKind::Robustness => harness::run_robustness_sweep(&cfg)?,
            };
            let csv = result.to_csv();
            match out {
                Some(path) => fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            if let Some(path) = checks {
                fs::write(&path, result.check_log()).with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!(
                "{} trials, max PoA {:.4}, K2 {:?}, K3 {:?}",
                result.records.len(),
                result.envelope.max_poa,
                result.envelope.k2,
                result.envelope.k3
            );
            for r in result.records.iter().filter(|r| !r.checks_passed) {
                for c in r.checks.iter().filter(|c| !c.pass) {
                    eprintln!("instance {} failed: {}", r.instance_id, c.to_json_line());
                }
            }
            Ok(if result.all_passed() { Ok(()) } else { Err(CheckFailed) })
        }
        Command::PaperExamples => {
            let rep = harness::reproduce_paper_examples()?;
            print_json(&serde_json::to_value(&rep)?);
            Ok(if rep.pass() { Ok(()) } else { Err(CheckFailed) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CheckFailed)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
