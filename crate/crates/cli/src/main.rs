//! `pmm`: exponent bounds, capacity regions and covering simulations for
//! partial matrix multiplication patterns.
//!
//! Exit status: 0 success / accept / true, 1 reject / false, 2 undetermined,
//! 64 usage error or malformed input.

mod input;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde::Deserialize;

use pmm_core::bounds::{
    laser_bound, laser_square_bound, omega_s_pattern_bound, rate_specific_bound, sum_inequality_omega,
    sum_inequality_rate_bound, BoundReport, LaserInput, RateCertificate, TightWitness,
};
use pmm_core::capacity::{
    membership, support_function, vertex_rates, MembershipResult, RateVector, SolverConfig, DEFAULT_SEED,
};
use pmm_core::info::{enumerate_types, multinomial, NType, DEFAULT_TYPE_CAP};
use pmm_core::pattern::Pattern;
use pmm_core::sim::{best_typed_failure_bound, simulate, typed_failure_bound, SimConfig};
use pmm_core::tensor::{DecompositionJson, EpsDecomposition, RankDecomposition, SparseTensor};

use input::{load, load_kpattern, load_pattern, parse_list, CliError, List};
use report::{float, fmt, fmt_list, Report};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_UNDETERMINED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "pmm", version, about = "Partial matrix multiplication toolkit")]
struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized solvers and simulations.
    #[arg(long, global = true, env = "PMM_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exponent bound from a pattern and a support-rank bound.
    Bound(BoundArgs),
    /// Capacity-region membership or support function.
    Capacity(CapacityArgs),
    /// Monte Carlo simulation of random covering maps.
    Simulate(SimulateArgs),
    /// Exact check of a rank or border-rank decomposition.
    Verify(VerifyArgs),
    /// Asymptotic sum inequality.
    Suminq(SuminqArgs),
    /// Laser-method bound for a tight block decomposition.
    Laser(LaserArgs),
    /// Type classes and their cardinalities.
    Types(TypesArgs),
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Pattern file (or `builtin:<name>`).
    #[arg(long)]
    pattern: String,
    /// Support-rank upper bound `L`.
    #[arg(long)]
    rank: u64,
    /// Bound the rectangular exponent at this rate instead (certified by membership).
    #[arg(long, value_parser = parse_list::<f64>)]
    rate: Option<List<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 32)]
    multistarts: usize,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    /// Points per edge of the separation-direction grid.
    #[arg(long, default_value_t = 25)]
    grid: usize,
    /// Local refinement rounds after the grid search.
    #[arg(long, default_value_t = 6)]
    refine: usize,
    /// Verdict margin.
    #[arg(long, default_value_t = 1e-4)]
    margin: f64,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            multistarts: self.multistarts,
            max_iterations: self.iterations,
            grid_resolution: self.grid,
            refine_rounds: self.refine,
            verdict_margin: self.margin,
            seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long)]
    pattern: String,
    /// Rate vector to test for membership.
    #[arg(long, value_parser = parse_list::<f64>, conflicts_with = "direction")]
    rate: Option<List<f64>>,
    /// Evaluate the support function along this nonnegative direction.
    #[arg(long, value_parser = parse_list::<f64>)]
    direction: Option<List<f64>>,
    /// List the chain-rule vertices of the uniform distribution.
    #[arg(long)]
    vertices: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    pattern: String,
    /// Tensor power.
    #[arg(long)]
    n: usize,
    #[arg(long, value_parser = parse_list::<f64>)]
    rate: List<f64>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Restrict to one type class: counts aligned with the pattern triples.
    #[arg(long, value_parser = parse_list::<u64>)]
    type_counts: Option<List<u64>>,
    /// Write per-trial missing-cell counts to this CSV file.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Target pattern; the decomposition is checked against its tensor.
    #[arg(long)]
    pattern: String,
    /// Border decomposition with polynomial coefficients.
    #[arg(long, conflicts_with = "decomposition")]
    border: Option<String>,
    /// Order `d` of the border decomposition.
    #[arg(long, requires = "border")]
    order: Option<usize>,
    /// Exact rank decomposition.
    #[arg(long)]
    decomposition: Option<String>,
    /// Only require the decomposition's support to equal the pattern.
    #[arg(long, requires = "decomposition")]
    support: bool,
}

#[derive(Args, Debug)]
struct SuminqArgs {
    /// Pattern sizes of the direct summands.
    #[arg(long, value_parser = parse_list::<u64>, conflicts_with = "input")]
    sizes: Option<List<u64>>,
    /// Rank bound of the direct sum.
    #[arg(long)]
    rank: Option<f64>,
    /// Rectangular form: JSON with `q`, `rank` and `components` (`pattern`, `rate`).
    #[arg(long)]
    input: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct LaserArgs {
    /// JSON with `support`, `q`, `blocks` (`pattern`, `rate`), `rank`, `witness`.
    #[arg(long)]
    input: String,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct TypesArgs {
    /// Alphabet size.
    #[arg(long, required_unless_present = "counts")]
    m: Option<usize>,
    /// Block length.
    #[arg(long, required_unless_present = "counts")]
    n: Option<u64>,
    /// A single type, given by its counts.
    #[arg(long, value_parser = parse_list::<u64>, conflicts_with_all = ["m", "n"])]
    counts: Option<List<u64>>,
    /// List every type.
    #[arg(long)]
    list: bool,
}

#[derive(Deserialize)]
struct ComponentJson {
    pattern: Pattern,
    rate: RateVector,
}

#[derive(Deserialize)]
struct SumInput {
    q: Vec<f64>,
    rank: f64,
    components: Vec<ComponentJson>,
}

#[derive(Deserialize)]
struct LaserJson {
    support: Pattern,
    q: Vec<f64>,
    blocks: Vec<ComponentJson>,
    rank: f64,
    witness: TightWitness,
}

fn certify_all(components: Vec<ComponentJson>, cfg: &SolverConfig) -> Result<Vec<RateCertificate>, CliError> {
    components
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            RateCertificate::certify(&c.pattern, &c.rate, cfg)
                .map_err(|e| CliError { code: EXIT_NEGATIVE, message: format!("component {i}: {e}") })
        })
        .collect()
}

fn bound_lines(r: &mut Report, b: &BoundReport) {
    r.line("formula", b.formula.clone()).line("bound", fmt(b.value));
    if let Some(w) = b.omega_bound {
        r.line("implied omega bound", fmt(w));
    }
    if b.degenerate {
        r.line("note", "degenerate: the inequality does not depend on the exponent");
    }
    r.field("bound", b).field("value", float(b.value));
}

fn run_bound(a: BoundArgs, seed: u64) -> Result<(Report, u8), CliError> {
    let pattern = load_pattern(&a.pattern)?;
    let mut r = Report::new("bound");
    let b = match a.rate.map(|l| l.0) {
        None => omega_s_pattern_bound(&pattern, a.rank)?,
        Some(rate) => {
            let rate = RateVector::new(rate)?;
            rate_specific_bound(&pattern, a.rank, &rate, &a.solver.config(seed))
                .map_err(|e| CliError { code: EXIT_NEGATIVE, message: e.to_string() })?
        }
    };
    bound_lines(&mut r, &b);
    Ok((r, EXIT_OK))
}

fn run_capacity(a: CapacityArgs, seed: u64) -> Result<(Report, u8), CliError> {
    let pattern = load_kpattern(&a.pattern)?;
    let cfg = a.solver.config(seed);
    let mut r = Report::new("capacity");
    r.field("pattern_size", pattern.len()).field("factors", pattern.arity());
    if !a.vertices && a.rate.is_none() && a.direction.is_none() {
        return Err(CliError::usage("capacity needs --rate, --direction or --vertices"));
    }
    let mut code = EXIT_OK;
    if a.vertices {
        let vs = vertex_rates(&pattern, &pattern.uniform())?;
        for v in &vs {
            r.line(format!("vertex {:?}", v.ordering), fmt_list(v.rate.as_slice()));
        }
        r.field("vertices", &vs);
    }
    if let Some(List(t)) = a.direction {
        let h = support_function(&pattern, &t, &cfg)?;
        r.line("direction", fmt_list(&t))
            .line("support value", fmt(h.value))
            .line("upper bound", fmt(h.upper_bound))
            .line("converged", h.converged.to_string());
        r.field("direction", &t).field("support", &h);
    }
    if let Some(List(rate)) = a.rate {
        let rate = RateVector::new(rate)?;
        let m = membership(&pattern, &rate, &cfg)?;
        r.line("rate", fmt_list(rate.as_slice()));
        match &m {
            MembershipResult::Accept { witness, min_slack, .. } => {
                r.line("verdict", "accept").line("min slack", fmt(*min_slack));
                let probs: Vec<f64> = witness.probs().to_vec();
                r.line("witness", fmt_list(&probs));
            }
            MembershipResult::Reject { direction, rate_value, support_value, gap, .. } => {
                code = EXIT_NEGATIVE;
                r.line("verdict", "reject")
                    .line("direction", fmt_list(direction))
                    .line("t.r", fmt(*rate_value))
                    .line("h(t)", fmt(*support_value))
                    .line("gap", fmt(*gap));
            }
            MembershipResult::Undetermined { best_min_slack, best_gap, .. } => {
                code = EXIT_UNDETERMINED;
                r.line("verdict", "undetermined")
                    .line("best min slack", fmt(*best_min_slack))
                    .line("best gap", fmt(*best_gap));
            }
        }
        r.field("rate", &rate).field("result", &m);
    }
    Ok((r, code))
}

fn run_simulate(a: SimulateArgs, seed: u64) -> Result<(Report, u8), CliError> {
    let pattern = load_pattern(&a.pattern)?;
    let rate = RateVector::new(a.rate.0)?;
    let mut cfg = SimConfig::new(a.n, rate.clone(), a.trials);
    cfg.seed = seed;
    if let Some(List(counts)) = a.type_counts {
        let outcomes = pattern.triples().iter().map(|t| t.to_vec()).collect();
        cfg.type_class = Some(NType::new(outcomes, counts)?);
    }
    let report = simulate(&pattern, &cfg)?;
    let typed = match &cfg.type_class {
        Some(t) => typed_failure_bound(&pattern, t, a.n, &rate)?,
        None => best_typed_failure_bound(&pattern, a.n, &rate)?.1,
    };
    if let Some(path) = &a.csv {
        std::fs::write(path, report.missing_csv()).map_err(|e| CliError::usage(format!("cannot write {path}: {e}")))?;
    }
    let mut r = Report::new("simulate");
    r.line("targets", format!("{:?}", report.targets))
        .line("trials", report.trials.to_string())
        .line("successes", report.successes.to_string())
        .line("failure rate", fmt(report.failure_rate))
        .line("std error", fmt(report.std_error))
        .line("typed bound (exact)", fmt(typed.union_exact))
        .line("typed bound (entropy)", fmt(typed.union_entropy))
        .line("per-cell bound", fmt(typed.per_cell_exact))
        .line("seconds", format!("{:.3}", report.seconds));
    r.field("n", report.n)
        .field("rate", &rate)
        .field("seed", seed)
        .field("targets", report.targets)
        .field("box_size", report.box_size)
        .field("domain_size", report.domain_size)
        .field("trials", report.trials)
        .field("successes", report.successes)
        .field("failure_rate", report.failure_rate)
        .field("std_error", report.std_error)
        .field("typed_bound", &typed);
    Ok((r, EXIT_OK))
}

fn run_verify(a: VerifyArgs) -> Result<(Report, u8), CliError> {
    let pattern = load_pattern(&a.pattern)?;
    let target = SparseTensor::from_pattern(&pattern);
    let mut r = Report::new("verify");
    let ok = if let Some(border) = &a.border {
        let d = EpsDecomposition::try_from(load::<DecompositionJson>(border)?)?;
        let order = a.order.unwrap_or(d.order());
        let ok = d.verify(&target, order)?;
        r.line("kind", "border").line("terms", d.len().to_string()).line("order", order.to_string());
        r.field("kind", "border").field("terms", d.len()).field("order", order);
        ok
    } else if let Some(path) = &a.decomposition {
        let d = RankDecomposition::try_from(load::<DecompositionJson>(path)?)?;
        let ok = if a.support { d.verify_support_witness(&pattern) } else { d.verify(&target) };
        let kind = if a.support { "support" } else { "rank" };
        r.line("kind", kind).line("terms", d.len().to_string());
        r.field("kind", kind).field("terms", d.len());
        ok
    } else {
        return Err(CliError::usage("verify needs --border or --decomposition"));
    };
    r.line("verified", ok.to_string());
    r.field("verified", ok);
    Ok((r, if ok { EXIT_OK } else { EXIT_NEGATIVE }))
}

fn run_suminq(a: SuminqArgs, seed: u64) -> Result<(Report, u8), CliError> {
    let mut r = Report::new("suminq");
    let b = if let Some(path) = &a.input {
        let inp: SumInput = load(path)?;
        let certs = certify_all(inp.components, &a.solver.config(seed))?;
        sum_inequality_rate_bound(&inp.q, inp.rank, &certs, a.solver.margin)?
    } else {
        let List(sizes) = a.sizes.ok_or_else(|| CliError::usage("suminq needs --sizes or --input"))?;
        let rank = a.rank.ok_or_else(|| CliError::usage("suminq --sizes needs --rank"))?;
        sum_inequality_omega(&sizes, rank)?
    };
    bound_lines(&mut r, &b);
    Ok((r, EXIT_OK))
}

fn run_laser(a: LaserArgs, seed: u64) -> Result<(Report, u8), CliError> {
    let inp: LaserJson = load(&a.input)?;
    let blocks = certify_all(inp.blocks, &a.solver.config(seed))?;
    let input = LaserInput { support: inp.support, q: inp.q, blocks, rank: inp.rank, witness: inp.witness };
    let b = laser_bound(&input, a.solver.margin)?;
    let mut r = Report::new("laser");
    bound_lines(&mut r, &b);
    if let Some(s) = laser_square_bound(&b) {
        r.line("square form", fmt(s));
    }
    Ok((r, EXIT_OK))
}

fn run_types(a: TypesArgs) -> Result<(Report, u8), CliError> {
    let mut r = Report::new("types");
    if let Some(List(counts)) = a.counts {
        let t = NType::unlabeled(counts.clone());
        let size = multinomial(&counts);
        let n = t.n();
        let h = t.to_distribution()?.entropy();
        let upper = (n as f64 * h).exp2();
        let lower = upper * (n as f64 + 1.0).powi(-(counts.len() as i32));
        r.line("counts", format!("{counts:?}"))
            .line("class size", size.to_string())
            .line("entropy", fmt(h))
            .line("lower estimate", fmt(lower))
            .line("upper estimate", fmt(upper));
        r.field("counts", &counts)
            .field("class_size", size.to_string())
            .field("entropy", h)
            .field("lower_estimate", lower)
            .field("upper_estimate", upper);
        return Ok((r, EXIT_OK));
    }
    let (m, n) = (a.m.unwrap_or(1), a.n.unwrap_or(1));
    let types = enumerate_types(m, n, DEFAULT_TYPE_CAP)?;
    let total: BigUint = types.iter().map(NType::type_class_size).sum();
    let expected = BigUint::from(m).pow(n as u32);
    let sums_match = total == expected;
    if a.list {
        let listed: Vec<_> = types.iter().map(|t| (t.counts().to_vec(), t.type_class_size().to_string())).collect();
        for (c, s) in &listed {
            r.line(format!("{c:?}"), s.clone());
        }
        r.field("types", listed);
    }
    r.line("types", types.len().to_string())
        .line("sum of class sizes", total.to_string())
        .line("m^n", expected.to_string())
        .line("consistent", sums_match.to_string());
    r.field("m", m)
        .field("n", n)
        .field("count", types.len())
        .field("total", total.to_string())
        .field("consistent", sums_match);
    Ok((r, if sums_match { EXIT_OK } else { EXIT_NEGATIVE }))
}

fn run(cli: Cli) -> Result<(Report, u8), CliError> {
    match cli.command {
        Command::Bound(a) => run_bound(a, cli.seed),
        Command::Capacity(a) => run_capacity(a, cli.seed),
        Command::Simulate(a) => run_simulate(a, cli.seed),
        Command::Verify(a) => run_verify(a),
        Command::Suminq(a) => run_suminq(a, cli.seed),
        Command::Laser(a) => run_laser(a, cli.seed),
        Command::Types(a) => run_types(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { input::EXIT_USAGE } else { EXIT_OK });
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok((report, code)) => {
            print!("{}", report.render(json));
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
