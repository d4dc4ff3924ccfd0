//! Command-line front end: every subcommand reads declarative inputs, runs a
//! seeded deterministic computation, and prints CSV (header row, shortest
//! round-trip decimals, LF endings) or canonical JSON to stdout.
//!
//! Exit codes: 0 on success, 2 on configuration/input errors, 3 when a
//! verified property fails.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use entrolab::bounds::{hteld_lower_bound, sample_complexity, BoundValue};
use entrolab::dist::JointPmf;
use entrolab::error::{Error, Result};
use entrolab::harness::{
    fig2_csv, fig2_data, fig2_svg, gap_csv, gap_experiment, hardness_csv, hteld_hardness,
    hteld_report, lemma4_csv, lemma4_verify, prior_bound_demo, prior_demo_csv, ExperimentConfig,
};
use entrolab::ib::{
    brute_force_encoder, deterministic_ib, solve_best_of, CompressionCriterion, IbProblem,
};
use entrolab::constructions::random_entropy_limited;

#[derive(Parser)]
#[command(
    name = "entrolab",
    version,
    about = "Seeded experiments on compression, information, and generalization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form sample bounds, reported in the log2 domain.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Fit a bottleneck encoder to an explicit joint table.
    Ib(IbArgs),
    /// Generalization-gap experiment described by a JSON config file.
    GapSim(GapSimArgs),
    /// Memorizer risk on the head-plus-uniform-tail family.
    HteldHardness(HardnessArgs),
    /// Solve the head-plus-tail construction and flag reference mismatches.
    HteldReport(ReportArgs),
    /// Projection-shift tail frequencies against the closed-form bound.
    Lemma4(Lemma4Args),
    /// Tail-bound comparison table (and optional SVG line plot).
    Fig2(Fig2Args),
    /// Restricted-class sample bound versus coupon-collector coverage.
    PriorDemo(PriorDemoArgs),
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Entropy-family sample complexity (2^(6H/eps) + log2(1/delta)) / eps^2.
    SampleComplexity {
        #[arg(long)]
        entropy: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Heavy-tail lower bound 2^((H-1)/eps).
    HteldLower {
        #[arg(long)]
        entropy: f64,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    /// Compression cost I(X;Xhat).
    MutualInfo,
    /// Compression cost H(Xhat).
    Entropy,
}

impl From<CriterionArg> for CompressionCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::MutualInfo => CompressionCriterion::MutualInfo,
            CriterionArg::Entropy => CompressionCriterion::Entropy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Enumerate every deterministic encoder.
    Bruteforce,
    /// Alternating self-consistent updates from random restarts.
    Selfconsistent,
    /// Agglomerative cluster merging.
    Greedy,
}

#[derive(Args)]
struct IbArgs {
    /// Path to a joint table JSON {"table": [["p(x,0)", "p(x,1)"], ...]}.
    #[arg(long)]
    joint: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 8)]
    restarts: u64,
}

#[derive(Args)]
struct GapSimArgs {
    /// Path to an experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct HardnessArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    eps: f64,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<u64>,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    eps: f64,
}

#[derive(Args)]
struct Lemma4Args {
    /// Support size of the seeded entropy-capped source.
    #[arg(long)]
    support: usize,
    /// Entropy cap of the source, in bits.
    #[arg(long)]
    h_max: f64,
    /// Seed for drawing the source itself.
    #[arg(long, default_value_t = 0)]
    pmf_seed: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    r: f64,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<u64>,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long)]
    points: usize,
    /// Also render the two curves to this SVG file.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PriorDemoArgs {
    #[arg(long)]
    support: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        let code = match err {
            Error::PropertyViolation(_) => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Bound(cmd) => {
            let bound = match cmd {
                BoundCommand::SampleComplexity {
                    entropy,
                    eps,
                    delta,
                } => sample_complexity(entropy, eps, delta)?,
                BoundCommand::HteldLower { entropy, eps } => hteld_lower_bound(entropy, eps)?,
            };
            print_bound(&bound);
            Ok(())
        }
        Command::Ib(args) => cmd_ib(args),
        Command::GapSim(args) => {
            let text = fs::read_to_string(&args.config)?;
            let cfg = ExperimentConfig::from_json_str(&text)?;
            let csv = gap_csv(&gap_experiment(&cfg)?);
            if let Some(path) = &cfg.output {
                fs::write(path, &csv)?;
            }
            print!("{csv}");
            Ok(())
        }
        Command::HteldHardness(args) => {
            let rows = hteld_hardness(args.gamma, args.eps, &args.n_list, args.trials, args.seed)?;
            print!("{}", hardness_csv(&rows));
            Ok(())
        }
        Command::HteldReport(args) => {
            let report = hteld_report(args.gamma, args.eps)?;
            println!("{}", report.to_json_value());
            Ok(())
        }
        Command::Lemma4(args) => {
            let p = random_entropy_limited(args.h_max, args.support, args.pmf_seed)?;
            let rows = lemma4_verify(&p, args.eps, args.r, &args.n_list, args.trials, args.seed)?;
            print!("{}", lemma4_csv(&rows));
            Ok(())
        }
        Command::Fig2(args) => {
            let rows = fig2_data(args.points)?;
            for row in &rows {
                if row.factorized_bound > row.markov_bound {
                    return Err(Error::PropertyViolation(format!(
                        "factorized bound {} exceeds the entropy bound {} at eps = {}",
                        row.factorized_bound, row.markov_bound, row.eps
                    )));
                }
            }
            if let Some(path) = &args.svg {
                fs::write(path, fig2_svg(&rows))?;
            }
            print!("{}", fig2_csv(&rows));
            Ok(())
        }
        Command::PriorDemo(args) => {
            let demo = prior_bound_demo(args.support, args.delta, args.eps, args.seed)?;
            print!("{}", prior_demo_csv(&demo));
            Ok(())
        }
    }
}

fn print_bound(bound: &BoundValue) {
    println!(
        "{}",
        json!({
            "log2_n": bound.log2_value,
            "linear_n": bound.linear_value,
        })
    );
}

fn cmd_ib(args: IbArgs) -> Result<()> {
    let text = fs::read_to_string(&args.joint)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let joint = JointPmf::from_json_value(&value)?;
    let prob = IbProblem::new(joint, args.beta, args.k, args.criterion.into())?;
    let (encoder, stats, objective, converged) = match args.method {
        MethodArg::Bruteforce => {
            let out = brute_force_encoder(&prob)?;
            (out.best, out.best_stats, out.best_objective, true)
        }
        MethodArg::Selfconsistent => {
            let out = solve_best_of(&prob, args.iters, args.tol, args.seed, args.restarts)?;
            (out.encoder, out.stats, out.objective, out.converged)
        }
        MethodArg::Greedy => {
            let out = deterministic_ib(&prob)?;
            (out.encoder, out.stats, out.objective, out.converged)
        }
    };
    println!(
        "{}",
        json!({
            "encoder": encoder.to_json_value(),
            "stats": {
                "i_xxhat": stats.i_xxhat,
                "i_yxhat": stats.i_yxhat,
                "h_xhat": stats.h_xhat,
                "objective": objective,
                "converged": converged,
            },
        })
    );
    Ok(())
}
