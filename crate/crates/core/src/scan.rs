//! Batch experiments over many fields: residual scans, the envelope-slope
//! summary, and the search for the smallest q with `N_r(m, q) > 0` for all r.

use std::io::{Read, Write};
use std::str::FromStr;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::count::{
    count, Algorithm, CountError, CountOptions, CountReport, CountSpec, EntryDomain, Multiplicity,
    SquareRule,
};
use crate::exact;
use crate::field::{
    prime_power_decompose, FieldCtx, FieldElement, FieldError, DEFAULT_TABLE_LIMIT,
};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid range {q_min}..={q_max}: need 3 <= q_min <= q_max <= {limit}")]
    RangeError { q_min: u64, q_max: u64, limit: u64 },
    #[error("no rows to summarize")]
    EmptyInput,
    #[error("rows mix tuple lengths {0} and {1}")]
    MixedM(usize, usize),
    #[error("no q <= {q_max} has N_r({m}, q) > 0 for every r ({} failures)", failures.len())]
    NotFoundWithinRange {
        m: usize,
        q_max: u64,
        failures: Vec<Failure>,
    },
    #[error("bad r mode {0:?}: expected all, class, or an element code")]
    BadRMode(String),
    #[error("shift code {r} is not a nonzero element of F_{q}")]
    BadShift { r: u32, q: u32 },
    #[error("row has unparsable rational {0:?}")]
    BadRational(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// All odd prime powers in `q_min..=q_max`, ascending, as `(p, k)`.
pub fn enumerate_odd_prime_powers(q_min: u64, q_max: u64) -> Result<Vec<(u32, u32)>, ScanError> {
    if q_min < 3 || q_min > q_max || q_max > DEFAULT_TABLE_LIMIT {
        return Err(ScanError::RangeError {
            q_min,
            q_max,
            limit: DEFAULT_TABLE_LIMIT,
        });
    }
    Ok((q_min..=q_max)
        .filter(|q| q % 2 == 1)
        .filter_map(prime_power_decompose)
        .map(|(p, k)| (p as u32, k))
        .collect())
}

/// Which shifts r to visit per field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RMode {
    All,
    /// `r = 1` and the smallest non-square; by square-class invariance these
    /// cover every r.
    OnePerSquareClass,
    Fixed(u32),
}

impl FromStr for RMode {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(RMode::All),
            "class" | "one_per_square_class" => Ok(RMode::OnePerSquareClass),
            _ => s
                .parse()
                .map(RMode::Fixed)
                .map_err(|_| ScanError::BadRMode(s.to_string())),
        }
    }
}

impl RMode {
    pub fn shifts(&self, ctx: &FieldCtx) -> Result<Vec<FieldElement>, ScanError> {
        Ok(match *self {
            RMode::All => ctx.nonzero_elements().collect(),
            RMode::OnePerSquareClass => vec![FieldElement::ONE, ctx.smallest_nonsquare()],
            RMode::Fixed(r) => {
                if r == 0 || r >= ctx.q() {
                    return Err(ScanError::BadShift { r, q: ctx.q() });
                }
                vec![FieldElement::new(r)]
            }
        })
    }
}

/// One `(q, r, variant)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub q: u32,
    pub p: u32,
    pub k: u32,
    pub m: usize,
    pub r: u32,
    pub variant: String,
    /// Counting algorithm, or `skipped` when the row hit the budget.
    pub algo: String,
    pub count: Option<u128>,
    pub main_term: String,
    pub residual: String,
    pub residual_norm_1: Option<f64>,
    pub residual_norm_half: Option<f64>,
    pub millis: u64,
}

pub const CSV_HEADER: &str =
    "q,p,k,m,r,variant,algo,count,main_term,residual,residual_norm_1,residual_norm_half,millis";

impl ScanRow {
    pub fn from_report(rep: &CountReport, timing: bool) -> Self {
        ScanRow {
            q: rep.q,
            p: rep.p,
            k: rep.k,
            m: rep.m,
            r: rep.r,
            variant: rep.spec.variant(),
            algo: rep.algorithm.to_string(),
            count: Some(rep.count),
            main_term: exact::format_ratio(&rep.main_term),
            residual: exact::format_ratio(&rep.residual),
            residual_norm_1: Some(rep.residual_norm_1),
            residual_norm_half: Some(rep.residual_norm_half),
            millis: if timing { rep.millis } else { 0 },
        }
    }

    fn skipped(ctx: &FieldCtx, spec: &CountSpec) -> Self {
        ScanRow {
            q: ctx.q(),
            p: ctx.p(),
            k: ctx.k(),
            m: spec.m,
            r: spec.r.code(),
            variant: spec.variant(),
            algo: "skipped".into(),
            count: None,
            main_term: exact::format_ratio(&exact::main_term(ctx.q(), spec.m)),
            residual: String::new(),
            residual_norm_1: None,
            residual_norm_half: None,
            millis: 0,
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.count.is_none()
    }

    /// Recomputes both norms from the exact residual string.
    pub fn recompute_norms(&self) -> Result<Option<(f64, f64)>, ScanError> {
        if self.is_skipped() {
            return Ok(None);
        }
        let res = exact::parse_ratio(&self.residual)
            .ok_or_else(|| ScanError::BadRational(self.residual.clone()))?;
        Ok(Some(exact::residual_norms(&res, self.q, self.m)))
    }

    /// `|residual|` as a float, from the exact string.
    pub fn abs_residual(&self) -> Result<Option<f64>, ScanError> {
        if self.is_skipped() {
            return Ok(None);
        }
        let res = exact::parse_ratio(&self.residual)
            .ok_or_else(|| ScanError::BadRational(self.residual.clone()))?;
        Ok(res.abs().to_f64())
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub m: usize,
    /// Fields as `(p, k)`, in the order rows should appear.
    pub fields: Vec<(u32, u32)>,
    pub r_mode: RMode,
    pub domain: EntryDomain,
    pub square_rule: SquareRule,
    pub multiplicity: Multiplicity,
    pub algorithm: Algorithm,
    pub opts: CountOptions,
    /// Record wall time in `millis`; off keeps output byte-reproducible.
    pub timing: bool,
}

impl ScanConfig {
    pub fn new(m: usize, fields: Vec<(u32, u32)>) -> Self {
        ScanConfig {
            m,
            fields,
            r_mode: RMode::All,
            domain: EntryDomain::default(),
            square_rule: SquareRule::default(),
            multiplicity: Multiplicity::default(),
            algorithm: Algorithm::Dfs,
            opts: CountOptions::default(),
            timing: false,
        }
    }

    pub fn with_r_mode(mut self, mode: RMode) -> Self {
        self.r_mode = mode;
        self
    }

    fn spec(&self, r: FieldElement) -> CountSpec {
        CountSpec::new(self.m, r)
            .with_domain(self.domain)
            .with_square_rule(self.square_rule)
            .with_multiplicity(self.multiplicity)
    }

    fn rows_for_field(
        &self,
        p: u32,
        k: u32,
        inner: &CountOptions,
    ) -> Result<Vec<ScanRow>, ScanError> {
        let ctx = FieldCtx::new(p as u64, k, None)?;
        let mut rows = Vec::new();
        for r in self.r_mode.shifts(&ctx)? {
            let spec = self.spec(r);
            match count(&ctx, &spec, self.algorithm, inner) {
                Ok(rep) => rows.push(ScanRow::from_report(&rep, self.timing)),
                Err(CountError::BudgetExceeded { .. }) => rows.push(ScanRow::skipped(&ctx, &spec)),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(rows)
    }
}

/// Runs the scan, handing rows to `sink` in `(q, r)` order one batch of
/// fields at a time so partial output can be flushed.
pub fn scan_residuals_streaming(
    cfg: &ScanConfig,
    mut sink: impl FnMut(&[ScanRow]) -> Result<(), ScanError>,
) -> Result<(), ScanError> {
    let inner = CountOptions {
        threads: None,
        ..cfg.opts
    };
    let batch = cfg
        .opts
        .threads
        .unwrap_or_else(rayon::current_num_threads)
        .max(1);
    for chunk in cfg.fields.chunks(batch) {
        let results: Vec<Result<Vec<ScanRow>, ScanError>> = cfg.opts.install(|| {
            chunk
                .par_iter()
                .map(|&(p, k)| cfg.rows_for_field(p, k, &inner))
                .collect()
        });
        for rows in results {
            sink(&rows?)?;
        }
    }
    Ok(())
}

pub fn scan_residuals(cfg: &ScanConfig) -> Result<Vec<ScanRow>, ScanError> {
    let mut out = Vec::new();
    scan_residuals_streaming(cfg, |rows| {
        out.extend_from_slice(rows);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_csv<W: Write>(w: W, rows: &[ScanRow]) -> Result<(), ScanError> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ScanRow>, ScanError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<Vec<ScanRow>, _>>()
        .map_err(ScanError::from)
}

pub fn write_json<W: Write>(mut w: W, rows: &[ScanRow]) -> Result<(), ScanError> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<ScanRow>, ScanError> {
    Ok(serde_json::from_reader(r)?)
}

/// Why an envelope slope could not be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeStatus {
    Fitted,
    /// Fewer than two bins with a nonzero residual.
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub m: usize,
    pub rows: usize,
    pub max_norm_1: f64,
    pub max_norm_half: f64,
    /// Least-squares slope of `ln max|E|` against `ln q` over bins.
    pub envelope_slope: Option<f64>,
    pub slope_status: SlopeStatus,
    pub bins_used: usize,
    /// Bins whose largest residual is exactly zero; excluded from the fit.
    pub zero_bins: usize,
}

/// Default number of consecutive prime powers per bin in the envelope fit.
pub const DEFAULT_BIN_SIZE: usize = 3;

/// Summarizes a single-m scan. Skipped rows are ignored.
pub fn residual_summary(rows: &[ScanRow], bin_size: usize) -> Result<ResidualSummary, ScanError> {
    let live: Vec<&ScanRow> = rows.iter().filter(|r| !r.is_skipped()).collect();
    let first = live.first().ok_or(ScanError::EmptyInput)?;
    if let Some(other) = live.iter().find(|r| r.m != first.m) {
        return Err(ScanError::MixedM(first.m, other.m));
    }

    let mut max_norm_1 = 0f64;
    let mut max_norm_half = 0f64;
    // (q, max |E| over rows at q)
    let mut per_q: Vec<(u32, f64)> = Vec::new();
    for row in &live {
        let (n1, nh) = row.recompute_norms()?.expect("live row");
        max_norm_1 = max_norm_1.max(n1);
        max_norm_half = max_norm_half.max(nh);
        let e = row.abs_residual()?.expect("live row");
        match per_q.iter_mut().find(|(q, _)| *q == row.q) {
            Some(slot) => slot.1 = slot.1.max(e),
            None => per_q.push((row.q, e)),
        }
    }
    per_q.sort_by_key(|&(q, _)| q);

    let mut points = Vec::new();
    let mut zero_bins = 0;
    for bin in per_q.chunks(bin_size.max(1)) {
        let &(q, e) = bin
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty bin");
        if e == 0.0 {
            zero_bins += 1;
        } else {
            points.push(((q as f64).ln(), e.ln()));
        }
    }

    let (envelope_slope, slope_status) = if points.len() < 2 {
        (None, SlopeStatus::InsufficientData)
    } else {
        (Some(least_squares_slope(&points)), SlopeStatus::Fitted)
    };
    Ok(ResidualSummary {
        m: first.m,
        rows: live.len(),
        max_norm_1,
        max_norm_half,
        envelope_slope,
        slope_status,
        bins_used: points.len(),
        zero_bins,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// A field where some shift has no Diophantine m-tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub q: u32,
    pub r: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmallestQResult {
    pub m: usize,
    pub q0: u32,
    /// One witness per odd prime power below `q0`.
    pub failures: Vec<Failure>,
}

/// Which representative of each square class to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassRepresentatives {
    /// `1` and the smallest non-square code.
    #[default]
    Smallest,
    /// The largest square code and the largest non-square code.
    Largest,
}

impl ClassRepresentatives {
    pub fn shifts(self, ctx: &FieldCtx) -> [FieldElement; 2] {
        match self {
            ClassRepresentatives::Smallest => [FieldElement::ONE, ctx.smallest_nonsquare()],
            ClassRepresentatives::Largest => {
                let last = |want: i32| {
                    (1..ctx.q())
                        .rev()
                        .map(FieldElement::new)
                        .find(|&x| ctx.quad_char(x) == want)
                        .expect("both classes are nonempty")
                };
                [last(1), last(-1)]
            }
        }
    }
}

/// Smallest odd prime power q <= q_max with `N_r(m, q) > 0` for every
/// nonzero r, testing one shift per square class with the default variant.
pub fn search_smallest_q(
    m: usize,
    q_max: u64,
    reps: ClassRepresentatives,
    opts: &CountOptions,
) -> Result<SmallestQResult, ScanError> {
    let mut failures = Vec::new();
    if q_max < 3 {
        return Err(ScanError::NotFoundWithinRange { m, q_max, failures });
    }
    for (p, k) in enumerate_odd_prime_powers(3, q_max)? {
        let ctx = FieldCtx::new(p as u64, k, None)?;
        let mut witness = None;
        for r in reps.shifts(&ctx) {
            let n = count(&ctx, &CountSpec::new(m, r), Algorithm::Dfs, opts)?.count;
            if n == 0 {
                witness = Some(r);
                break;
            }
        }
        match witness {
            Some(r) => failures.push(Failure {
                q: ctx.q(),
                r: r.code(),
            }),
            None => {
                return Ok(SmallestQResult {
                    m,
                    q0: ctx.q(),
                    failures,
                })
            }
        }
    }
    Err(ScanError::NotFoundWithinRange { m, q_max, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_power_ranges() {
        let qs: Vec<u32> = enumerate_odd_prime_powers(3, 30)
            .unwrap()
            .iter()
            .map(|&(p, k)| p.pow(k))
            .collect();
        assert_eq!(qs, vec![3, 5, 7, 9, 11, 13, 17, 19, 23, 25, 27, 29]);
        assert!(enumerate_odd_prime_powers(4, 4).unwrap().is_empty());
        assert_eq!(
            enumerate_odd_prime_powers(121, 128).unwrap(),
            vec![(11, 2), (5, 3), (127, 1)]
        );
        assert!(matches!(
            enumerate_odd_prime_powers(2, 10),
            Err(ScanError::RangeError { .. })
        ));
        assert!(matches!(
            enumerate_odd_prime_powers(10, 5),
            Err(ScanError::RangeError { .. })
        ));
    }

    #[test]
    fn m4_q5_row() {
        let rows =
            scan_residuals(&ScanConfig::new(4, vec![(5, 1)]).with_r_mode(RMode::Fixed(1))).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].main_term, "625/64");
        let count = rows[0].count.unwrap();
        let want = exact::residual(count, 5, 4);
        assert_eq!(rows[0].residual, exact::format_ratio(&want));
    }

    #[test]
    fn m2_q5_all_shifts() {
        let rows = scan_residuals(&ScanConfig::new(2, vec![(5, 1)])).unwrap();
        let counts: Vec<u128> = rows.iter().map(|r| r.count.unwrap()).collect();
        assert_eq!(counts, vec![4, 8, 8, 4]);
        assert_eq!(
            rows.iter().map(|r| r.r).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
    }

    #[test]
    fn class_mode_gives_two_rows() {
        let rows =
            scan_residuals(&ScanConfig::new(3, vec![(7, 1)]).with_r_mode(RMode::OnePerSquareClass))
                .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].r, 1);
        assert_eq!(rows[1].r, 3);
    }

    #[test]
    fn budget_skips_rows() {
        let mut cfg = ScanConfig::new(4, vec![(5, 1), (7, 1)]).with_r_mode(RMode::Fixed(1));
        cfg.algorithm = Algorithm::Brute;
        cfg.opts = cfg.opts.with_budget(5000);
        let rows = scan_residuals(&cfg).unwrap();
        assert!(!rows[0].is_skipped());
        assert!(rows[1].is_skipped());
        assert_eq!(rows[1].algo, "skipped");
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = scan_residuals(&ScanConfig::new(3, vec![(5, 1), (3, 2)])).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        for row in &back {
            let (n1, nh) = row.recompute_norms().unwrap().unwrap();
            assert_eq!(Some(n1), row.residual_norm_1);
            assert_eq!(Some(nh), row.residual_norm_half);
        }

        let mut js = Vec::new();
        write_json(&mut js, &rows).unwrap();
        assert_eq!(read_json(&js[..]).unwrap(), rows);

        let mut empty = Vec::new();
        write_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), CSV_HEADER);
    }

    fn row(q: u32, m: usize, residual: &str) -> ScanRow {
        ScanRow {
            q,
            p: q,
            k: 1,
            m,
            r: 1,
            variant: "nonzero:qr_only:ordered_with_repeats".into(),
            algo: "dfs".into(),
            count: Some(0),
            main_term: "0/1".into(),
            residual: residual.into(),
            residual_norm_1: None,
            residual_norm_half: None,
            millis: 0,
        }
    }

    #[test]
    fn summary_edge_cases() {
        assert!(matches!(
            residual_summary(&[], 3),
            Err(ScanError::EmptyInput)
        ));
        let zeros = [row(5, 2, "0/1"), row(7, 2, "0/1")];
        let s = residual_summary(&zeros, 1).unwrap();
        assert_eq!(s.max_norm_1, 0.0);
        assert_eq!(s.envelope_slope, None);
        assert_eq!(s.zero_bins, 2);
        let single = [row(5, 2, "3/1")];
        let s = residual_summary(&single, 1).unwrap();
        assert_eq!(s.slope_status, SlopeStatus::InsufficientData);
        assert!(matches!(
            residual_summary(&[row(5, 2, "1/1"), row(7, 3, "1/1")], 1),
            Err(ScanError::MixedM(2, 3))
        ));
    }

    #[test]
    fn summary_slope_recovers_power_law() {
        let rows: Vec<ScanRow> = [5u32, 7, 11, 13, 17, 19]
            .iter()
            .map(|&q| row(q, 4, &format!("{}/1", (q as u64).pow(3))))
            .collect();
        let s = residual_summary(&rows, 1).unwrap();
        assert!((s.envelope_slope.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_q_for_pairs() {
        let res = search_smallest_q(
            2,
            9,
            ClassRepresentatives::Smallest,
            &CountOptions::default(),
        )
        .unwrap();
        assert_eq!(res.q0, 5);
        assert_eq!(res.failures, vec![Failure { q: 3, r: 1 }]);
        let alt = search_smallest_q(
            2,
            9,
            ClassRepresentatives::Largest,
            &CountOptions::default(),
        )
        .unwrap();
        assert_eq!(alt.q0, 5);

        match search_smallest_q(
            2,
            3,
            ClassRepresentatives::Smallest,
            &CountOptions::default(),
        ) {
            Err(ScanError::NotFoundWithinRange { failures, .. }) => {
                assert_eq!(failures, vec![Failure { q: 3, r: 1 }])
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
