//! `idips`: learn, optimize, repair, evaluate and simulate action selection
//! policies, or serve the interactive demonstration loop.

mod serve;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use idips::demo::{agreement, find_predicates, load_demos, save_demos, Demonstration};
use idips::lang::{parse, print_predicate};
use idips::sim::{gen, metrics_csv, run_suite, summarize, summary_csv, Scenario};
use idips::synth::{idips as run_idips, optimize, synthesize, SynthConfig};
use idips::{DomainDefinition, Policy};

#[derive(Parser)]
#[command(name = "idips", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a policy from demonstrations, completing `--policy` if given.
    Synth {
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        min_score: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-fit the thresholds of a policy to demonstrations.
    Optimize {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the full localize, optimize and repair loop.
    Repair {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        min_score: f64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print how well a policy matches demonstrations.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Run seeded trials and write per-trial metrics.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Also write every visited state as a demonstration file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a built-in scenario (empty, hallway, door) or demonstrator
    /// policy (nice, greedy, door-nice).
    Export {
        name: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Serve the interactive session over websockets.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Directory with the UI bundle, served over plain HTTP.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn domain(path: &Option<PathBuf>) -> Result<DomainDefinition> {
    match path {
        Some(p) => DomainDefinition::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(DomainDefinition::social()),
    }
}

fn policy(path: &Path, dom: &DomainDefinition) -> Result<Policy> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, dom).with_context(|| format!("in {}", path.display()))
}

fn demos(path: &Path, dom: &DomainDefinition) -> Result<Vec<Demonstration>> {
    load_demos(path, dom).with_context(|| format!("loading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn config(min_score: f64) -> Result<SynthConfig> {
    let cfg = SynthConfig {
        min_score,
        ..SynthConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Per-transition score table; returns the lowest branch score.
fn score_table(p: &Policy, demos: &[Demonstration]) -> f64 {
    println!("{:<18} {:>6} {:>6} {:>6} {:>8}  predicate", "transition", "branch", "pos", "neg", "score");
    let mut worst: f64 = 1.0;
    for f in find_predicates(demos, p) {
        let s = f.score();
        let branch = f.branch.map_or("-".to_string(), |b| b.to_string());
        println!(
            "{:<18} {:>6} {:>6} {:>6} {:>7.1}%  {}",
            format!("{}->{}", f.from, f.to),
            branch,
            f.pos.len(),
            f.neg.len(),
            100.0 * s,
            print_predicate(&f.predicate)
        );
        worst = worst.min(s);
    }
    println!("agreement {:.1}% of {} demonstrations", 100.0 * agreement(p, demos), demos.len());
    println!("lowest predicate score {:.1}%", 100.0 * worst);
    worst
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth {
            demos: d,
            domain: dm,
            policy: p,
            min_score,
            output,
        } => {
            let dom = domain(&dm)?;
            let cfg = config(min_score)?;
            let d = demos(&d, &dom)?;
            let p0 = p.map(|p| policy(&p, &dom)).transpose()?;
            let out = match &p0 {
                None => synthesize(&d, None, &dom, &cfg)?,
                Some(p0) => run_idips(&d, Some(p0), &dom, &cfg)?.0,
            };
            write(&output, &out.to_string())?;
            let worst = score_table(&out, &d);
            if worst < min_score {
                bail!("synthesized policy scores {:.3} on its demonstrations, below {min_score}", worst);
            }
        }
        Cmd::Optimize {
            policy: p,
            demos: d,
            domain: dm,
            output,
        } => {
            let dom = domain(&dm)?;
            let p = policy(&p, &dom)?;
            let d = demos(&d, &dom)?;
            let out = optimize(&d, &p, &SynthConfig::default());
            write(&output, &out.to_string())?;
            score_table(&out, &d);
        }
        Cmd::Repair {
            policy: p,
            demos: d,
            domain: dm,
            min_score,
            output,
            report,
        } => {
            let dom = domain(&dm)?;
            let cfg = config(min_score)?;
            let p = policy(&p, &dom)?;
            let d = demos(&d, &dom)?;
            let (out, rep) = run_idips(&d, Some(&p), &dom, &cfg)?;
            write(&output, &out.to_string())?;
            if let Some(r) = report {
                write(&r, &rep.to_json())?;
            }
            println!("{}", rep.summary);
        }
        Cmd::Eval {
            policy: p,
            demos: d,
            domain: dm,
        } => {
            let dom = domain(&dm)?;
            let p = policy(&p, &dom)?;
            let d = demos(&d, &dom)?;
            score_table(&p, &d);
        }
        Cmd::Sim {
            scenario,
            policy: p,
            trials,
            seed,
            metrics,
            trace,
        } => {
            let dom = DomainDefinition::social();
            let sc = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let name = p_name(&p);
            let p = policy(&p, &dom)?;
            let seeds: Vec<u64> = (seed..seed + trials).collect();
            let rows = run_suite(std::slice::from_ref(&sc), &[(name, p.clone())], &seeds);
            if let Some(m) = metrics {
                write(&m, &metrics_csv(&rows))?;
            }
            if let Some(t) = trace {
                let mut all = Vec::new();
                for &s in &seeds {
                    all.extend(idips::sim::run_trial(&sc.with_seed(s), &p, true).trace);
                }
                save_demos(&all, &t).with_context(|| format!("writing {}", t.display()))?;
            }
            print!("{}", summary_csv(&summarize(&rows)));
        }
        Cmd::Export { name, output } => {
            let text = match name.as_str() {
                "empty" => gen::empty_corridor().to_json(),
                "hallway" => gen::hallway().to_json(),
                "door" => gen::door_hallway().to_json(),
                "nice" => gen::demonstrator(&[gen::NICE_DEMONSTRATOR]).to_string(),
                "greedy" => gen::demonstrator(&[gen::GREEDY_DEMONSTRATOR]).to_string(),
                "door-nice" => gen::demonstrator(&[gen::DOOR_RULES, gen::NICE_DEMONSTRATOR]).to_string(),
                other => bail!("no built-in named `{other}`"),
            };
            write(&output, &text)?;
        }
        Cmd::Serve {
            port,
            scenario,
            policy: p,
            domain: dm,
            static_dir,
        } => {
            let dom = domain(&dm)?;
            let sc = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let p = p.map(|p| policy(&p, &dom)).transpose()?;
            serve::serve(port, sc, p, dom, static_dir)?;
        }
    }
    Ok(())
}

/// Policy label for metrics rows: the policy file stem.
fn p_name(path: &Path) -> String {
    path.file_stem().map_or("policy".into(), |s| s.to_string_lossy().into_owned())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
