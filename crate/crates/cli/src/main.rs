//! `wfa`: command-line front end for weighted-automata computations.
//!
//! Exit codes: 0 success, 1 invalid input, 2 gamma cannot be certified,
//! 3 search budget exhausted before the interval closed (interval printed).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wfa_core::bisim::{largest_bisimulation, minimize};
use wfa_core::jsr::{wfa_irreducible, wfa_spectral_radius_with_budget, DEFAULT_NODE_BUDGET};
use wfa_core::learn::{
    hankel_from_wfa, learn_table, perturbation_experiment, spectral_learn, LearnExperiment,
};
use wfa_core::metric::{
    continuity_table, distance, distance_upper_bound, joint_tail_params,
    parameter_continuity_experiment, seminorm_interval,
};
use wfa_core::report::{fmt_bound, fmt_num};
use wfa_core::wfa::words_up_to;
use wfa_core::{
    CertifiedInterval, Error, HankelBlock, SearchOptions, Umdp, Vector, Wfa, DEFAULT_TOL,
};

#[derive(Parser)]
#[command(
    name = "wfa",
    version,
    about = "Weighted finite automata: bisimulation, JSR, certified distances, spectral learning"
)]
struct Cli {
    /// Worker threads; 1 gives bit-identical runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an automaton on words (symbols separated by spaces, or single-character symbols run together; "" or ε is the empty word).
    Eval {
        wfa: PathBuf,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Reverse automaton.
    Reverse {
        wfa: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Difference automaton computing f_A - f_B.
    Diff {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Minimal equivalent automaton.
    Minimize {
        wfa: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Orthonormal basis of the largest linear bisimulation, as JSON.
    Bisim {
        wfa: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Joint-spectral-radius bounds of the transition matrices.
    Jsr {
        wfa: PathBuf,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Products kept per level.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
    /// Whether the transition matrices have no common invariant subspace.
    Irreducible {
        wfa: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Certified interval for the discounted bisimulation distance.
    Distance {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        search: Search,
    },
    /// Certified interval for the seminorm of a state (default: the initial vector).
    Seminorm {
        wfa: PathBuf,
        /// Comma-separated state vector.
        #[arg(long)]
        vector: Option<String>,
        #[command(flatten)]
        search: Search,
    },
    /// Closed-form parameter-continuity bound on the distance of two automata of equal dimension.
    Bound {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
    /// Exact Hankel block of an automaton.
    Hankel {
        wfa: PathBuf,
        /// File with one prefix per line.
        #[arg(long)]
        prefixes: PathBuf,
        /// File with one suffix per line.
        #[arg(long)]
        suffixes: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Spectral learning from a Hankel block.
    Learn {
        block: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Experiment runners emitting CSV.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Unobservable MDPs.
    #[command(subcommand)]
    Umdp(UmdpCommand),
}

#[derive(Subcommand)]
enum Experiment {
    /// Perturb the Hankel block, relearn, and measure the distance to the source.
    Learn {
        wfa: PathBuf,
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Prefix file (default: all words up to the minimal dimension).
        #[arg(long)]
        prefixes: Option<PathBuf>,
        /// Suffix file (default: same as prefixes).
        #[arg(long)]
        suffixes: Option<PathBuf>,
    },
    /// Perturb the parameters along one random direction and compare the distance to the closed-form bound.
    Continuity {
        wfa: PathBuf,
        #[command(flatten)]
        common: ExperimentArgs,
    },
}

#[derive(Subcommand)]
enum UmdpCommand {
    /// Truncated discounted value of an action string.
    Value {
        umdp: PathBuf,
        #[arg(long)]
        actions: String,
        #[arg(long)]
        horizon: usize,
    },
    /// Certified interval for the supremum of the value over infinite action strings.
    Sup {
        umdp: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        #[arg(long, default_value_t = 8)]
        jsr_depth: usize,
    },
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Search {
    /// Discount factor.
    #[arg(long)]
    gamma: f64,
    /// Target width of the interval.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Maximal node expansions.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Product depth certifying admissibility of gamma.
    #[arg(long, default_value_t = 8)]
    jsr_depth: usize,
    /// Longest block for tail bounds.
    #[arg(long, default_value_t = 8)]
    max_block: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Search the automaton as given instead of its minimal quotient.
    #[arg(long)]
    no_reduce: bool,
}

impl Search {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            eps: self.eps,
            budget: self.budget,
            jsr_depth: self.jsr_depth,
            max_block: self.max_block,
            tol: self.tol,
            reduce: !self.no_reduce,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    gamma: f64,
    /// Comma-separated perturbation norms.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 20260101)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl ExperimentArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            eps: self.eps,
            budget: self.budget,
            ..SearchOptions::default()
        }
    }
}

/// Failure carrying its exit status.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit status {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_wfa(path: &Path) -> Result<Wfa> {
    Wfa::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_words(a: &Wfa, path: &Path) -> Result<Vec<Vec<usize>>> {
    read(path)?
        .lines()
        .enumerate()
        .map(|(i, line)| {
            a.parse_word(line)
                .with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(text: String, out: &Output) -> Result<()> {
    emit(&(text + "\n"), out.output.as_deref())
}

fn print_interval(iv: &CertifiedInterval) -> Result<()> {
    let witness = if iv.witness_prefix.is_empty() {
        "ε".to_string()
    } else {
        iv.witness_prefix.join(" ")
    };
    println!("lower {}", fmt_bound(iv.lower, false));
    println!("upper {}", fmt_bound(iv.upper, true));
    println!("gamma {}", fmt_num(iv.gamma));
    println!("depth {}", iv.depth_explored);
    println!("nodes {}", iv.nodes_expanded);
    println!("witness {witness}");
    println!("exhausted {}", iv.exhausted);
    if iv.exhausted {
        eprintln!(
            "budget exhausted with interval width {}",
            fmt_num(iv.width())
        );
        return Err(Exit(3).into());
    }
    Ok(())
}

fn parse_vector(text: &str, n: usize) -> Result<Vector> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{s}`"))
        })
        .collect::<Result<_>>()?;
    if values.len() != n {
        bail!(Error::DimensionMismatch {
            what: "state vector".into(),
            expected: n,
            found: values.len()
        });
    }
    Ok(Vector::from_vec(values))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval { wfa, words } => {
            let a = load_wfa(&wfa)?;
            for w in words {
                let x = a.parse_word(&w)?;
                println!("{}", fmt_num(a.evaluate_indices(&x)));
            }
        }
        Command::Reverse { wfa, out } => emit_json(load_wfa(&wfa)?.reverse().to_json(), &out)?,
        Command::Diff { first, second, out } => emit_json(
            load_wfa(&first)?.difference(&load_wfa(&second)?)?.to_json(),
            &out,
        )?,
        Command::Minimize { wfa, tol, out } => {
            emit_json(minimize(&load_wfa(&wfa)?, tol).to_json(), &out)?
        }
        Command::Bisim { wfa, tol, out } => {
            let w = largest_bisimulation(&load_wfa(&wfa)?, tol);
            let basis = w.basis();
            let columns: Vec<Vec<f64>> = (0..basis.ncols())
                .map(|j| basis.column(j).iter().copied().collect())
                .collect();
            let doc = serde_json::json!({ "dim": w.dim(), "basis": columns });
            emit_json(serde_json::to_string_pretty(&doc)?, &out)?;
        }
        Command::Jsr { wfa, depth, budget } => {
            let a = load_wfa(&wfa)?;
            let b = wfa_spectral_radius_with_budget(&a, depth, budget)?;
            println!("lower {}", fmt_bound(b.lower, false));
            println!("upper {}", fmt_bound(b.upper, true));
            println!("depth {}", b.depth);
            println!("full_depth {}", b.full_depth);
            println!("witness {}", a.to_symbols(&b.witness).join(" "));
        }
        Command::Irreducible { wfa, tol } => {
            println!("{}", wfa_irreducible(&load_wfa(&wfa)?, tol)?)
        }
        Command::Distance {
            first,
            second,
            search,
        } => {
            let iv = distance(
                &load_wfa(&first)?,
                &load_wfa(&second)?,
                search.gamma,
                &search.options(),
            )?;
            print_interval(&iv)?;
        }
        Command::Seminorm {
            wfa,
            vector,
            search,
        } => {
            let a = load_wfa(&wfa)?;
            let v = match vector {
                Some(text) => parse_vector(&text, a.dim())?,
                None => a.alpha().clone(),
            };
            print_interval(&seminorm_interval(&a, &v, search.gamma, &search.options())?)?;
        }
        Command::Bound {
            first,
            second,
            gamma,
        } => {
            let (a, b) = (load_wfa(&first)?, load_wfa(&second)?);
            let params = joint_tail_params(&a, &b, gamma)?;
            println!(
                "bound {}",
                fmt_bound(distance_upper_bound(&a, &b, gamma, &params)?, true)
            );
            println!("theta {}", fmt_num(params.theta));
        }
        Command::Hankel {
            wfa,
            prefixes,
            suffixes,
            out,
        } => {
            let a = load_wfa(&wfa)?;
            let p = load_words(&a, &prefixes)?;
            let s = load_words(&a, &suffixes)?;
            emit_json(hankel_from_wfa(&a, &p, &s)?.to_json(), &out)?;
        }
        Command::Learn {
            block,
            rank,
            tol,
            out,
        } => {
            let b = HankelBlock::from_json(&read(&block)?)
                .with_context(|| format!("in {}", block.display()))?;
            emit_json(spectral_learn(&b, rank, tol)?.to_json(), &out)?;
        }
        Command::Experiment(Experiment::Learn {
            wfa,
            common,
            trials,
            prefixes,
            suffixes,
        }) => {
            let a = load_wfa(&wfa)?;
            let p = match &prefixes {
                Some(path) => load_words(&a, path)?,
                None => words_up_to(a.alphabet().len(), minimize(&a, DEFAULT_TOL).dim()),
            };
            let s = match &suffixes {
                Some(path) => load_words(&a, path)?,
                None => p.clone(),
            };
            let cfg = LearnExperiment {
                prefixes: &p,
                suffixes: &s,
                scales: &common.scales,
                gamma: common.gamma,
                opts: common.options(),
                trials,
                seed: common.seed,
            };
            let rows = perturbation_experiment(&a, &cfg)?;
            emit(
                &learn_table(&rows, common.seed).render(),
                common.output.as_deref(),
            )?;
        }
        Command::Experiment(Experiment::Continuity { wfa, common }) => {
            let a = load_wfa(&wfa)?;
            let rows = parameter_continuity_experiment(
                &a,
                &common.scales,
                common.gamma,
                &common.options(),
                common.seed,
            )?;
            emit(
                &continuity_table(&rows, common.seed).render(),
                common.output.as_deref(),
            )?;
        }
        Command::Umdp(UmdpCommand::Value {
            umdp,
            actions,
            horizon,
        }) => {
            let u =
                Umdp::from_json(&read(&umdp)?).with_context(|| format!("in {}", umdp.display()))?;
            let x = u.parse_actions(&actions)?;
            println!("{}", fmt_num(u.value_truncated(&x, horizon)?));
        }
        Command::Umdp(UmdpCommand::Sup {
            umdp,
            eps,
            budget,
            jsr_depth,
        }) => {
            let u =
                Umdp::from_json(&read(&umdp)?).with_context(|| format!("in {}", umdp.display()))?;
            let opts = SearchOptions {
                eps,
                budget,
                jsr_depth,
                ..SearchOptions::default()
            };
            print_interval(&u.sup_value_interval(&opts)?)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::CannotCertify { .. } | Error::InadmissibleGamma { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if code != 3 {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}
