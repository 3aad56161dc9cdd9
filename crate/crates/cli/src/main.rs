//! `blockgraph` command-line front end.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 ordering hypothesis
//! violated, 3 numerical assertion failure, 64 usage error, 65 malformed
//! input, 74 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use blockgraph::bounds::{certify, CertificationReport};
use blockgraph::ensemble::{ensemble_specs, map_ordered, run_suite, Case, EnsembleConfig, Execution, Tally};
use blockgraph::model::io::{instance_from_json, instance_to_json, to_json};
use blockgraph::model::{generate, require_valid, BlockOperator, GeneratorSpec};
use blockgraph::{Error, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_SELFTEST: u8 = 1;
const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "blockgraph", version, about = "Invariant graph subspaces of 2×2 self-adjoint block operators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_rank: f64,
    /// Eigenvalue clustering width relative to max(1, ‖B‖).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_eig: f64,
    /// Principal-angle tolerance for subspace equality.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_sub: f64,
    /// Master seed for all randomness (ChaCha8).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Process instances on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

impl Global {
    fn tolerances(&self) -> Result<Tolerances, Failure> {
        let tol = Tolerances {
            tol_rank: self.tol_rank,
            tol_eig: self.tol_eig,
            tol_sub: self.tol_sub,
            ..Tolerances::default()
        };
        tol.validate().map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        Ok(tol)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance file.
    Generate(GenerateArgs),
    /// Certify an instance and print the report.
    Analyze {
        /// Instance JSON file.
        input: PathBuf,
    },
    /// Vary one parameter and write the bounds as CSV.
    Sweep(SweepArgs),
    /// Certify a seeded ensemble and report per-check counts.
    Selftest(SelftestArgs),
}

#[derive(Args, Clone)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    n0: usize,
    #[arg(long, default_value_t = 2)]
    n1: usize,
    /// dim Ker(A0 − λ).
    #[arg(long, default_value_t = 0)]
    ker0: usize,
    /// dim Ker(A1 − λ).
    #[arg(long, default_value_t = 0)]
    ker1: usize,
    /// Kernel directions linked by V.
    #[arg(long, default_value_t = 0)]
    link: usize,
    /// Make Ker(A0−λ)∩Ker V* and Ker(A1−λ)∩Ker V nontrivial.
    #[arg(long)]
    couple: bool,
    /// Distance of the non-kernel spectra from λ, in [0, 2].
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    #[arg(long, default_value_t = 1.0)]
    vnorm: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
}

impl GenerateArgs {
    fn spec(&self, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            n0: self.n0,
            n1: self.n1,
            ker0_dim: self.ker0,
            ker1_dim: self.ker1,
            gap: self.gap,
            vnorm: self.vnorm,
            couple_kernels: self.couple,
            link_dim: self.link,
            lambda: self.lambda,
            seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Parameter {
    /// Multiply V by the parameter.
    Vscale,
    /// Move A0 down and A1 up by half the parameter each.
    Gap,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    parameter: Parameter,
    #[arg(long, allow_negative_numbers = true)]
    start: f64,
    #[arg(long, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long)]
    steps: usize,
    /// Base instance file; otherwise one is generated from the flags below.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    base: GenerateArgs,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 16)]
    max_dim: usize,
    /// Extra instance files certified after the ensemble.
    #[arg(long)]
    include: Vec<PathBuf>,
    /// Where the first failing instance is written.
    #[arg(long, default_value = "selftest-repro.json")]
    repro: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HypothesisViolated(_) => EXIT_HYPOTHESIS,
            Error::Malformed(_)
            | Error::NonFinite
            | Error::NonHermitian { .. }
            | Error::ShapeMismatch { .. }
            | Error::InconsistentSpec(_)
            | Error::NegativeInput(_) => EXIT_DATA,
            Error::InvalidTolerances(_) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn read_instance(path: &Path) -> Result<BlockOperator, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    instance_from_json(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn cmd_generate(g: &Global, args: &GenerateArgs) -> Result<u8, Failure> {
    let tol = g.tolerances()?;
    let op = generate(&args.spec(g.seed))?;
    let text = instance_to_json(&op) + "\n";
    emit(g.output.as_deref(), &text)?;
    let reread = match &g.output {
        Some(p) => read_instance(p)?,
        None => instance_from_json(&text)?,
    };
    require_valid(&reread, &tol)?;
    Ok(0)
}

fn table(r: &CertificationReport) -> String {
    let mut lines = vec![
        format!("dims            n0 = {}, n1 = {}, λ = {:.6}", r.n0, r.n1, r.lambda),
        format!("‖B‖ = {:.6}  ‖V‖ = {:.6}  d = {:.6}", r.norm_b, r.vnorm, r.d),
        format!("δ− = {:.6e}  δ+ = {:.6e}  δ = {:.6e}", r.delta_minus, r.delta_plus, r.delta),
        format!("‖X‖    lower {:.12}  value {:.12}  upper {:.12}", r.lower_x, r.norm_x, r.upper_x),
        format!("‖P−Q‖  lower {:.12}  value {:.12}  upper {:.12}", r.lower_pq, r.norm_pq, r.upper_pq),
        format!("residual        {:.3e}", r.residual),
        format!(
            "kernels         Ker(A0−λ) {}, Ker(A1−λ) {}, N0 {}, N1 {}, K0 {}, K1 {}",
            r.dim_ker_a0, r.dim_ker_a1, r.dim_n0, r.dim_n1, r.dim_k0, r.dim_k1
        ),
        format!("multiplicity μ=1 {}", r.mu1_multiplicity),
        format!(
            "uniqueness      unique {}, strictly contractive {}, isolated {}",
            r.verdict.unique, r.verdict.strictly_contractive, r.verdict.isolated
        ),
        format!("gap empty       {}", r.gap_empty),
    ];
    for n in &r.notes {
        lines.push(format!("note            {n}"));
    }
    let failed: Vec<_> = r.failed_checks().collect();
    lines.push(format!("checks          {} passed, {} failed", r.checks.len() - failed.len(), failed.len()));
    for c in failed {
        lines.push(format!("FAIL {}: {:.3e} > {:.3e}", c.name, c.value, c.allowed));
    }
    lines.push(format!("all_pass        {}", r.all_pass));
    lines.join("\n") + "\n"
}

fn cmd_analyze(g: &Global, input: &Path) -> Result<u8, Failure> {
    let tol = g.tolerances()?;
    let op = read_instance(input)?;
    let report = certify(&op, &tol)?;
    let json = to_json(&report) + "\n";
    match &g.output {
        Some(p) => {
            emit(None, &table(&report))?;
            emit(Some(p), &json)?;
        }
        None => emit(None, &(table(&report) + &json))?,
    }
    Ok(if report.all_pass { 0 } else { EXIT_NUMERICAL })
}

fn sweep_values(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    if args.steps < 2 {
        return Err(Failure::new(EXIT_USAGE, "--steps must be at least 2"));
    }
    if !(args.start.is_finite() && args.stop.is_finite()) || args.start > args.stop {
        return Err(Failure::new(EXIT_USAGE, "--start must not exceed --stop"));
    }
    let n = args.steps - 1;
    Ok((0..=n)
        .map(|i| if i == n { args.stop } else { args.start + (args.stop - args.start) * i as f64 / n as f64 })
        .collect())
}

const SWEEP_HEADER: &str = "param,norm_X,norm_PQ,upper_X,lower_X,upper_PQ,lower_PQ,delta,d";

fn cmd_sweep(g: &Global, args: &SweepArgs) -> Result<u8, Failure> {
    let tol = g.tolerances()?;
    let values = sweep_values(args)?;
    let base = match &args.input {
        Some(p) => read_instance(p)?,
        None => generate(&args.base.spec(g.seed))?,
    };
    let rows = map_ordered(g.execution(), &values, |&p| {
        let op = match args.parameter {
            Parameter::Vscale => base.with_scaled_coupling(p),
            Parameter::Gap => base.with_extra_separation(p),
        }?;
        certify(&op, &tol).map(|r| (p, r))
    });
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(SWEEP_HEADER.split(',')).expect("in-memory write");
    let mut all_pass = true;
    for row in rows {
        let (p, r) = row?;
        all_pass &= r.all_pass;
        let fields = [p, r.norm_x, r.norm_pq, r.upper_x, r.lower_x, r.upper_pq, r.lower_pq, r.delta, r.d];
        csv.write_record(fields.iter().map(|x| format!("{x:.16e}")))
            .expect("in-memory write");
    }
    let bytes = csv.into_inner().expect("in-memory flush");
    emit(g.output.as_deref(), &String::from_utf8(bytes).expect("ASCII CSV"))?;
    Ok(if all_pass { 0 } else { EXIT_NUMERICAL })
}

fn cmd_selftest(g: &Global, args: &SelftestArgs) -> Result<u8, Failure> {
    if args.count == 0 {
        return Err(Failure::new(EXIT_USAGE, "--count must be positive"));
    }
    if args.max_dim == 0 {
        return Err(Failure::new(EXIT_USAGE, "--max-dim must be positive"));
    }
    let tol = g.tolerances()?;
    let members = ensemble_specs(&EnsembleConfig { count: args.count, max_dim: args.max_dim, seed: g.seed });
    let mut cases = members.iter().map(Case::from_member).collect::<Result<Vec<_>, _>>()?;
    for p in &args.include {
        cases.push(Case {
            label: p.display().to_string(),
            category: None,
            op: read_instance(p)?,
            seed: g.seed,
        });
    }
    let start = Instant::now();
    let outcomes = run_suite(&cases, g.execution(), &tol);
    let tally = Tally::from_outcomes(&outcomes);
    let mut out = String::new();
    for (name, (pass, fail)) in &tally.checks {
        out += &format!("check {name}: {pass} passed, {fail} failed\n");
    }
    for (kind, n) in &tally.errors {
        out += &format!("error {kind}: {n}\n");
    }
    out += &format!("instances {}/{} passed\n", tally.passed_instances, tally.instances);
    let first_failure = outcomes.iter().position(|o| !o.passed());
    if let Some(i) = first_failure {
        let (case, outcome) = (&cases[i], &outcomes[i]);
        let failed: Vec<String> = match &outcome.report {
            Err(e) => vec![e.to_string()],
            Ok(_) => outcome.checks().filter(|c| !c.passed).map(|c| c.name.clone()).collect(),
        };
        let meta = serde_json::json!({
            "label": case.label,
            "source": case.op.meta().cloned(),
            "failed": failed,
        });
        let repro = instance_to_json(&case.op.clone().with_meta(meta)) + "\n";
        fs::write(&args.repro, repro).map_err(|e| Failure::io(&args.repro, e))?;
        out += &format!("first failure {} written to {}\n", case.label, args.repro.display());
    }
    emit(g.output.as_deref(), &out)?;
    eprintln!("selftest finished in {:.2?}", start.elapsed());
    Ok(if first_failure.is_some() { EXIT_SELFTEST } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let g = &cli.global;
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(g, args),
        Command::Analyze { input } => cmd_analyze(g, input),
        Command::Sweep(args) => cmd_sweep(g, args),
        Command::Selftest(args) => cmd_selftest(g, args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
