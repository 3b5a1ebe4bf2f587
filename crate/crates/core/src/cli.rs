//! Command-line driver. Exit codes: 0 ok, 1 I/O, 2 usage, 3 budget,
//! 4 identity or bound violation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::count::{
    count, Algorithm, CountError, CountOptions, CountSpec, EntryDomain, Multiplicity, SquareRule,
    DEFAULT_BUDGET,
};
use crate::decomp::{
    canonicalize_eps, expansion_identity_check, r_eps, r_eps_vanishing_closed_form,
    st_identity_check, DecompError, REpsAlgorithm,
};
use crate::epsilon::{EpsilonError, EpsilonMatrix};
use crate::field::{FieldCtx, FieldElement, FieldError, FieldSpec};
use crate::poly::{weil_check, PolyError, PolyFq, WeilReport};
use crate::scan::{
    enumerate_odd_prime_powers, residual_summary, scan_residuals_streaming, search_smallest_q,
    write_csv, ClassRepresentatives, RMode, ScanConfig, ScanError, ScanRow, CSV_HEADER,
    DEFAULT_BIN_SIZE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "dioph",
    version,
    about = "Diophantine m-tuples over finite fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count Diophantine m-tuples with property D(r) over one field.
    Count(CountArgs),
    /// Check the character-sum expansion or one R(eps) decomposition exactly.
    Identity(IdentityArgs),
    /// Residual scan over a range of odd prime powers.
    Scan(ScanArgs),
    /// Smallest q with an m-tuple for every shift r.
    Search(SearchArgs),
    /// Weil bound for one polynomial or a seeded random suite.
    Weil(WeilArgs),
    /// Print the S-T decomposition report for one exponent vector.
    Decompose(DecomposeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Field as p, p^k, or a prime power q.
    #[arg(long)]
    pub field: String,
    /// Modulus coefficients c0,c1,..,ck (monic, irreducible).
    #[arg(long)]
    pub modulus: Option<String>,
}

impl FieldArgs {
    fn build(&self) -> Result<FieldCtx, CliError> {
        let mut spec: FieldSpec = self.field.parse()?;
        if let Some(list) = &self.modulus {
            spec = spec.with_modulus(list)?;
        }
        Ok(spec.build()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Worker threads (default: all cores).
    #[arg(long, env = "DIOPH_THREADS")]
    pub threads: Option<usize>,
    /// Work cap for enumeration routes.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

impl RunArgs {
    fn options(&self) -> CountOptions {
        CountOptions::default()
            .with_threads(self.threads)
            .with_budget(self.budget)
    }
}

#[derive(Debug, Clone, Args)]
pub struct VariantArgs {
    #[arg(long, default_value = "nonzero")]
    pub domain: EntryDomain,
    #[arg(long, default_value = "qr_only")]
    pub square_rule: SquareRule,
    #[arg(long, default_value = "ordered_with_repeats")]
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub m: usize,
    /// Shift r as an element code.
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long, default_value = "dfs")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Record wall time.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IdentityArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub m: usize,
    /// Shift r; all nonzero shifts when omitted.
    #[arg(long)]
    pub r: Option<u32>,
    /// Exponent vector in hex; without it the expansion identity is checked.
    #[arg(long)]
    pub eps: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub q_min: u64,
    #[arg(long)]
    pub q_max: u64,
    /// Only prime q.
    #[arg(long)]
    pub primes_only: bool,
    /// all, class (one shift per square class), or a fixed code.
    #[arg(long, default_value = "all")]
    pub r_mode: String,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long, default_value = "dfs")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Prime powers per bin in the envelope fit printed to stderr.
    #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
    pub bin_size: usize,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reps {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub q_max: u64,
    /// Square-class representatives to test.
    #[arg(long, value_enum, default_value_t = Reps::Smallest)]
    pub reps: Reps,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WeilArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Coefficient codes, constant term first; omit for the random suite.
    #[arg(long)]
    pub poly: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub max_degree: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    #[arg(long)]
    pub eps: String,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Violation(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Violation(_) => EXIT_VIOLATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EpsilonError> for CliError {
    fn from(e: EpsilonError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<DecompError> for CliError {
    fn from(e: DecompError) -> Self {
        match e {
            DecompError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            DecompError::IdentityViolated { .. } => CliError::Violation(e.to_string()),
            DecompError::Count(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Io(io) => CliError::Io(io),
            ScanError::Count(c) => c.into(),
            ScanError::Csv(_) | ScanError::Json(_) => CliError::Io(io::Error::other(e.to_string())),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Never exits the
/// process.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(
    cmd: &Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    match cmd {
        Command::Count(a) => cmd_count(a, stdout),
        Command::Identity(a) => cmd_identity(a, stdout),
        Command::Scan(a) => cmd_scan(a, stdout, stderr),
        Command::Search(a) => cmd_search(a, stdout),
        Command::Weil(a) => cmd_weil(a, stdout),
        Command::Decompose(a) => cmd_decompose(a, stdout),
    }
}

/// Writes to `--out` when given, else to stdout.
fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, body: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(body)?;
            f.flush()?;
        }
        None => stdout.write_all(body)?,
    }
    Ok(())
}

fn json_body<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    Ok(body)
}

fn shift(ctx: &FieldCtx, r: u32) -> Result<FieldElement, CliError> {
    if r == 0 || r >= ctx.q() {
        return Err(CliError::Usage(format!(
            "r = {r} is not a nonzero element code of F_{}",
            ctx.q()
        )));
    }
    Ok(FieldElement::new(r))
}

fn parse_eps(m: usize, hex: &str) -> Result<EpsilonMatrix, CliError> {
    let eps = EpsilonMatrix::from_hex(m, hex)?;
    if !eps.is_nonzero() {
        return Err(CliError::Usage("eps must be nonzero".into()));
    }
    Ok(eps)
}

pub fn cmd_count(a: &CountArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = a.field.build()?;
    let spec = CountSpec::new(a.m, shift(&ctx, a.r)?)
        .with_domain(a.variant.domain)
        .with_square_rule(a.variant.square_rule)
        .with_multiplicity(a.variant.multiplicity);
    let mut rep = count(&ctx, &spec, a.algo, &a.run.options())?;
    if !a.timing {
        rep.millis = 0;
    }
    let body = match a.out.format {
        Format::Text => {
            let text = rep.to_string();
            // the last line is wall time
            let text = if a.timing {
                text
            } else {
                text.lines()
                    .filter(|l| !l.starts_with("time"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            format!("{text}\n").into_bytes()
        }
        Format::Json => json_body(&rep.to_json())?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &[ScanRow::from_report(&rep, a.timing)])?;
            buf
        }
    };
    emit(&a.out.out, stdout, &body)?;
    Ok(EXIT_OK)
}

pub fn cmd_identity(a: &IdentityArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = a.field.build()?;
    let opts = a.run.options();
    let shifts: Vec<FieldElement> = match a.r {
        Some(r) => vec![shift(&ctx, r)?],
        None => ctx.nonzero_elements().collect(),
    };
    let eps = a.eps.as_deref().map(|h| parse_eps(a.m, h)).transpose()?;

    let mut lines = Vec::new();
    let mut reports = Vec::new();
    let mut all_hold = true;
    for r in shifts {
        match eps {
            None => {
                let rep = expansion_identity_check(&ctx, a.m, r, &opts)?;
                lines.push(format!(
                    "q={} m={} r={}: sum R(eps) = {} vs product sum = {}; restricted sum = {} vs 2^{} * N = {} -> {}",
                    rep.q,
                    rep.m,
                    rep.r,
                    rep.sum_r_eps,
                    rep.product_sum,
                    rep.restricted_sum,
                    rep.scale.trailing_zeros(),
                    rep.scale * rep.count,
                    verdict(rep.holds)
                ));
                all_hold &= rep.holds;
                reports.push(serde_json::to_value(&rep)?);
            }
            Some(eps) => {
                let (perm, canon) = canonicalize_eps(&eps)?;
                if canon.lower_is_zero() {
                    let closed = r_eps_vanishing_closed_form(&ctx, r, &canon)?;
                    let direct = r_eps(&ctx, r, &canon, REpsAlgorithm::DfsWeighted, &opts)?.value;
                    let holds = closed == direct;
                    lines.push(format!(
                        "q={} m={} r={} eps={} (canonical {}): R(eps) = {} vs closed form = {} -> {}",
                        ctx.q(),
                        a.m,
                        r,
                        eps.to_hex(),
                        canon.to_hex(),
                        direct,
                        closed,
                        verdict(holds)
                    ));
                    all_hold &= holds;
                    reports.push(json!({
                        "q": ctx.q(), "m": a.m, "r": r.code(), "eps": eps.to_hex(),
                        "canonical_eps": canon.to_hex(), "permutation": perm,
                        "r_direct": direct.to_string(), "closed_form": closed.to_string(),
                        "holds": holds,
                    }));
                } else {
                    let rep = st_identity_check(&ctx, r, &canon, &opts)?;
                    lines.push(format!(
                        "q={} m={} r={} eps={} (canonical {}): R(eps) = {} vs sum S*T/(q-1) = {} -> {}",
                        ctx.q(),
                        a.m,
                        r,
                        eps.to_hex(),
                        canon.to_hex(),
                        rep.r_direct,
                        crate::exact::format_ratio(&rep.r_via_st),
                        verdict(rep.identity_holds)
                    ));
                    all_hold &= rep.identity_holds;
                    let mut v = serde_json::to_value(&rep)?;
                    v["canonical_eps"] = json!(canon.to_hex());
                    v["eps"] = json!(eps.to_hex());
                    v["permutation"] = json!(perm);
                    reports.push(v);
                }
            }
        }
    }
    let body = match a.out.format {
        Format::Json => json_body(&reports)?,
        _ => format!("{}\n", lines.join("\n")).into_bytes(),
    };
    emit(&a.out.out, stdout, &body)?;
    if all_hold {
        Ok(EXIT_OK)
    } else {
        Err(CliError::Violation("identity violated".into()))
    }
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn cmd_scan(
    a: &ScanArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut fields = enumerate_odd_prime_powers(a.q_min, a.q_max)?;
    if a.primes_only {
        fields.retain(|&(_, k)| k == 1);
    }
    let r_mode: RMode = a.r_mode.parse()?;
    let mut cfg = ScanConfig::new(a.m, fields).with_r_mode(r_mode);
    cfg.domain = a.variant.domain;
    cfg.square_rule = a.variant.square_rule;
    cfg.multiplicity = a.variant.multiplicity;
    cfg.algorithm = a.algo;
    cfg.opts = a.run.options();
    cfg.timing = a.timing;

    let mut sink: Box<dyn Write + '_> = match &a.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(&mut *stdout),
    };
    let mut all = Vec::new();
    match a.format {
        Format::Csv | Format::Text => {
            writeln!(sink, "{CSV_HEADER}")?;
            scan_residuals_streaming(&cfg, |rows| {
                let mut wr = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_writer(Vec::new());
                for row in rows {
                    wr.serialize(row)?;
                }
                let bytes = wr
                    .into_inner()
                    .map_err(|e| io::Error::other(e.to_string()))?;
                sink.write_all(&bytes)?;
                sink.flush()?;
                all.extend_from_slice(rows);
                Ok(())
            })?;
        }
        Format::Json => {
            scan_residuals_streaming(&cfg, |rows| {
                all.extend_from_slice(rows);
                Ok(())
            })?;
            sink.write_all(&json_body(&all)?)?;
        }
    }
    sink.flush()?;
    drop(sink);

    let skipped = all.iter().filter(|r| r.is_skipped()).count();
    if skipped > 0 {
        writeln!(stderr, "{skipped} rows skipped (budget)")?;
    }
    if let Ok(s) = residual_summary(&all, a.bin_size) {
        writeln!(
            stderr,
            "rows {} max |E|/q^(m-1) {:.6} max |E|/q^(m-1/2) {:.6} envelope slope {}",
            s.rows,
            s.max_norm_1,
            s.max_norm_half,
            s.envelope_slope
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "n/a (insufficient data)".into())
        )?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_search(a: &SearchArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let reps = match a.reps {
        Reps::Smallest => ClassRepresentatives::Smallest,
        Reps::Largest => ClassRepresentatives::Largest,
    };
    let (found, failures) = match search_smallest_q(a.m, a.q_max, reps, &a.run.options()) {
        Ok(res) => (Some(res.q0), res.failures),
        Err(ScanError::NotFoundWithinRange { failures, .. }) => (None, failures),
        Err(e) => return Err(e.into()),
    };
    let body = match a.out.format {
        Format::Json => json_body(&json!({
            "m": a.m, "q_max": a.q_max, "q0": found, "failures": failures,
        }))?,
        _ => {
            let mut text = match found {
                Some(q0) => format!("m = {}: q0 = {}\n", a.m, q0),
                None => format!("m = {}: no q <= {} works\n", a.m, a.q_max),
            };
            for f in &failures {
                text.push_str(&format!("failure q = {} r = {}\n", f.q, f.r));
            }
            text.into_bytes()
        }
    };
    emit(&a.out.out, stdout, &body)?;
    Ok(EXIT_OK)
}

/// Summary of a seeded random Weil suite.
#[derive(Debug, Clone, Serialize)]
pub struct WeilSuite {
    pub q: u32,
    pub seed: u64,
    pub samples: usize,
    pub holds: usize,
    /// Draws rejected because they were squares over the closure.
    pub square_rejected: usize,
    /// Max `|sum| / ((deg - 1) sqrt q)` over samples of degree >= 2.
    pub max_ratio: f64,
}

/// Draws `samples` random non-square polynomials of degree 1..=max_degree
/// and checks each against the Weil bound.
pub fn weil_suite(
    ctx: &FieldCtx,
    samples: usize,
    seed: u64,
    max_degree: usize,
) -> Result<WeilSuite, PolyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = ctx.q();
    let mut suite = WeilSuite {
        q,
        seed,
        samples,
        holds: 0,
        square_rejected: 0,
        max_ratio: 0.0,
    };
    let mut done = 0;
    while done < samples {
        let d = rng.gen_range(1..=max_degree.max(1));
        let mut codes: Vec<u32> = (0..d).map(|_| rng.gen_range(0..q)).collect();
        codes.push(rng.gen_range(1..q));
        let f = PolyFq::from_codes(&codes);
        let rep = weil_check(ctx, &f)?;
        if rep.square_kernel {
            suite.square_rejected += 1;
            continue;
        }
        done += 1;
        if rep.holds {
            suite.holds += 1;
        }
        if rep.degree >= 2 {
            suite.max_ratio = suite.max_ratio.max(rep.sum.abs() as f64 / rep.degree_bound);
        }
    }
    Ok(suite)
}

pub fn cmd_weil(a: &WeilArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = a.field.build()?;
    let (body, ok) = match &a.poly {
        Some(text) => {
            let f = PolyFq::parse(&ctx, text)?;
            let rep: WeilReport = weil_check(&ctx, &f)?;
            let body = match a.out.format {
                Format::Json => json_body(&rep)?,
                _ => format!(
                    "f = {} over F_{}: degree {}, sum {}, bound {:.4}, {}\n",
                    f,
                    ctx.q(),
                    rep.degree,
                    rep.sum,
                    rep.degree_bound,
                    if rep.square_kernel {
                        "square over the closure (bound not applicable)"
                    } else if rep.holds {
                        "holds"
                    } else {
                        "VIOLATED"
                    }
                )
                .into_bytes(),
            };
            (body, rep.holds)
        }
        None => {
            let suite = weil_suite(&ctx, a.samples, a.seed, a.max_degree)?;
            let body = match a.out.format {
                Format::Json => json_body(&suite)?,
                _ => format!(
                    "F_{} seed {}: {}/{} holds ({} square draws rejected, max ratio {:.4})\n",
                    suite.q,
                    suite.seed,
                    suite.holds,
                    suite.samples,
                    suite.square_rejected,
                    suite.max_ratio
                )
                .into_bytes(),
            };
            (body, suite.holds == suite.samples)
        }
    };
    emit(&a.out.out, stdout, &body)?;
    if ok {
        Ok(EXIT_OK)
    } else {
        Err(CliError::Violation("Weil bound violated".into()))
    }
}

pub fn cmd_decompose(a: &DecomposeArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = a.field.build()?;
    let r = shift(&ctx, a.r)?;
    let eps = parse_eps(a.m, &a.eps)?;
    let (_, canon) = canonicalize_eps(&eps)?;
    let rep = st_identity_check(&ctx, r, &canon, &a.run.options())?;
    let body = match a.out.format {
        Format::Json => json_body(&rep)?,
        _ => {
            let fr = crate::exact::format_ratio;
            format!(
                "q {}\nm {}\nr {}\neps {} (canonical {})\nR(eps) direct {}\nR(eps) via S*T {}\n\
                 divisible by q-1 {}\nsquare-kernel tuples {}/{}\ncontribution A {}\ncontribution B {}\n\
                 Weil checks {} violations {} max |S|,|T| {} max ratio {:.4}\n|R(eps)|/q^(m-1) {:.6}\nidentity {}\n",
                rep.q,
                rep.m,
                rep.r,
                eps.to_hex(),
                rep.eps,
                rep.r_direct,
                fr(&rep.r_via_st),
                rep.st_divisible,
                rep.square_kernel_tuples,
                rep.total_tuples,
                fr(&rep.contribution_a),
                fr(&rep.contribution_b),
                rep.weil_checks,
                rep.weil_violations,
                rep.weil_max_abs,
                rep.weil_max_ratio,
                rep.bound_ratio,
                verdict(rep.identity_holds)
            )
            .into_bytes()
        }
    };
    emit(&a.out.out, stdout, &body)?;
    if !rep.identity_holds {
        return Err(CliError::Violation("S-T identity violated".into()));
    }
    if rep.weil_violations > 0 {
        return Err(CliError::Violation("Weil bound violated".into()));
    }
    Ok(EXIT_OK)
}
