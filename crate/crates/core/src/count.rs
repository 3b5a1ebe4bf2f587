//! Exact counts of Diophantine m-tuples with shift r over F_q.
//!
//! Three independent routes compute the same number:
//!
//! * [`count_brute`] enumerates every tuple and tests every pair;
//! * [`count_dfs`] enumerates non-decreasing tuples as cliques of the
//!   [`PairGraph`] (loops admit repeats) by intersecting neighbor bitsets,
//!   and weights each multiset by its number of orderings;
//! * [`count_expansion`] sums `prod (1 + chi(a_i a_j + r))` over tuples with
//!   no vanishing shifted product, where every factor is 0 or 2.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::field::{FieldCtx, FieldElement};
use crate::graph::{product_acceptance, PairGraph};

/// Default cap on brute-force work, in pair-predicate evaluations.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("tuple length m must be at least 2, got {0}")]
    TupleTooShort(usize),
    #[error("tuple length m = {0} is too large for exact counting")]
    TupleTooLong(usize),
    #[error("shift r must be nonzero")]
    ZeroShift,
    #[error("shift code {r} is out of range for q = {q}")]
    ShiftOutOfRange { r: u32, q: u32 },
    #[error("work estimate {required} exceeds the budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("variant {0} is not supported by the expansion counter")]
    UnsupportedVariant(String),
    #[error("unknown variant token {0:?}")]
    BadVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDomain {
    #[default]
    Nonzero,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareRule {
    /// Shifted products must be nonzero squares.
    #[default]
    QrOnly,
    /// Zero also counts as a square.
    QrOrZero,
}

impl SquareRule {
    pub fn accepts_zero(self) -> bool {
        self == SquareRule::QrOrZero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    #[default]
    OrderedWithRepeats,
    OrderedDistinct,
    UnorderedDistinct,
}

macro_rules! token_enum {
    ($ty:ty { $($variant:ident => $tok:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$(<$ty>::$variant),+];

            pub fn token(self) -> &'static str {
                match self { $(<$ty>::$variant => $tok),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $ty {
            type Err = CountError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($tok => Ok(<$ty>::$variant),)+
                    _ => Err(CountError::BadVariant(s.to_string())),
                }
            }
        }
    };
}

token_enum!(EntryDomain { Nonzero => "nonzero", All => "all" });
token_enum!(SquareRule { QrOnly => "qr_only", QrOrZero => "qr_or_zero" });
token_enum!(Multiplicity {
    OrderedWithRepeats => "ordered_with_repeats",
    OrderedDistinct => "ordered_distinct",
    UnorderedDistinct => "unordered_distinct",
});

/// What is being counted. Defaults: nonzero entries, nonzero-square shifted
/// products, ordered tuples with repeats allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CountSpec {
    pub m: usize,
    pub r: FieldElement,
    pub domain: EntryDomain,
    pub square_rule: SquareRule,
    pub multiplicity: Multiplicity,
}

impl CountSpec {
    pub fn new(m: usize, r: FieldElement) -> Self {
        CountSpec {
            m,
            r,
            domain: EntryDomain::default(),
            square_rule: SquareRule::default(),
            multiplicity: Multiplicity::default(),
        }
    }

    pub fn with_domain(mut self, domain: EntryDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_square_rule(mut self, rule: SquareRule) -> Self {
        self.square_rule = rule;
        self
    }

    pub fn with_multiplicity(mut self, multiplicity: Multiplicity) -> Self {
        self.multiplicity = multiplicity;
        self
    }

    pub fn with_shift(mut self, r: FieldElement) -> Self {
        self.r = r;
        self
    }

    pub fn is_default_variant(&self) -> bool {
        self.domain == EntryDomain::Nonzero
            && self.square_rule == SquareRule::QrOnly
            && self.multiplicity == Multiplicity::OrderedWithRepeats
    }

    /// `domain:squarerule:multiplicity`.
    pub fn variant(&self) -> String {
        format!("{}:{}:{}", self.domain, self.square_rule, self.multiplicity)
    }

    /// Parses a `domain:squarerule:multiplicity` string onto this spec.
    pub fn with_variant(self, s: &str) -> Result<Self, CountError> {
        let parts: Vec<&str> = s.split(':').collect();
        let [d, sr, mu] = parts[..] else {
            return Err(CountError::BadVariant(s.to_string()));
        };
        Ok(self
            .with_domain(d.parse()?)
            .with_square_rule(sr.parse()?)
            .with_multiplicity(mu.parse()?))
    }

    /// Every combination of the three flags.
    pub fn all_variants(m: usize, r: FieldElement) -> Vec<CountSpec> {
        let mut out = Vec::new();
        for &d in EntryDomain::ALL {
            for &s in SquareRule::ALL {
                for &mu in Multiplicity::ALL {
                    out.push(
                        CountSpec::new(m, r)
                            .with_domain(d)
                            .with_square_rule(s)
                            .with_multiplicity(mu),
                    );
                }
            }
        }
        out
    }

    pub fn validate(&self, ctx: &FieldCtx) -> Result<(), CountError> {
        if self.m < 2 {
            return Err(CountError::TupleTooShort(self.m));
        }
        // m! must fit the multiset weights
        if self.m > 30 {
            return Err(CountError::TupleTooLong(self.m));
        }
        if self.r.is_zero() {
            return Err(CountError::ZeroShift);
        }
        if self.r.code() >= ctx.q() {
            return Err(CountError::ShiftOutOfRange {
                r: self.r.code(),
                q: ctx.q(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Brute,
    #[default]
    Dfs,
    Expansion,
}

token_enum!(Algorithm { Brute => "brute", Dfs => "dfs", Expansion => "expansion" });

/// Execution knobs shared by the counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Cap on enumeration work for the brute and expansion routes.
    pub budget: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            threads: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl CountOptions {
    pub fn single_threaded() -> Self {
        CountOptions {
            threads: Some(1),
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub(crate) fn install<R: Send>(&self, job: impl FnOnce() -> R + Send) -> R {
        match self.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(job),
            None => job(),
        }
    }

    pub(crate) fn check_budget(&self, required: u128) -> Result<(), CountError> {
        if required > self.budget as u128 {
            Err(CountError::BudgetExceeded {
                required,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }
}

/// Result of one count, with the exact main term and residual.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub q: u32,
    pub p: u32,
    pub k: u32,
    pub m: usize,
    pub r: u32,
    pub spec: CountSpec,
    pub count: u128,
    pub main_term: BigRational,
    pub residual: BigRational,
    pub residual_norm_1: f64,
    pub residual_norm_half: f64,
    pub algorithm: Algorithm,
    pub millis: u64,
}

impl CountReport {
    pub fn new(
        ctx: &FieldCtx,
        spec: &CountSpec,
        count: u128,
        algorithm: Algorithm,
        millis: u64,
    ) -> Self {
        let main_term = exact::main_term(ctx.q(), spec.m);
        let residual = exact::residual(count, ctx.q(), spec.m);
        let (residual_norm_1, residual_norm_half) =
            exact::residual_norms(&residual, ctx.q(), spec.m);
        CountReport {
            q: ctx.q(),
            p: ctx.p(),
            k: ctx.k(),
            m: spec.m,
            r: spec.r.code(),
            spec: *spec,
            count,
            main_term,
            residual,
            residual_norm_1,
            residual_norm_half,
            algorithm,
            millis,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q": self.q,
            "p": self.p,
            "k": self.k,
            "m": self.m,
            "r": self.r,
            "variant": self.spec.variant(),
            "domain": self.spec.domain,
            "square_rule": self.spec.square_rule,
            "multiplicity": self.spec.multiplicity,
            "algo": self.algorithm,
            "count": self.count,
            "main_term": exact::format_ratio(&self.main_term),
            "residual": exact::format_ratio(&self.residual),
            "residual_norm_1": self.residual_norm_1,
            "residual_norm_half": self.residual_norm_half,
            "millis": self.millis,
        })
    }
}

impl fmt::Display for CountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "field      F_{} (p = {}, k = {})",
            self.q, self.p, self.k
        )?;
        writeln!(f, "m          {}", self.m)?;
        writeln!(f, "r          {}", self.r)?;
        writeln!(f, "variant    {}", self.spec.variant())?;
        writeln!(f, "algorithm  {}", self.algorithm)?;
        writeln!(f, "count      {}", self.count)?;
        writeln!(f, "main term  {}", exact::format_ratio(&self.main_term))?;
        writeln!(f, "residual   {}", exact::format_ratio(&self.residual))?;
        writeln!(f, "|E|/q^(m-1)    {:.6}", self.residual_norm_1)?;
        writeln!(f, "|E|/q^(m-1/2)  {:.6}", self.residual_norm_half)?;
        write!(f, "time       {} ms", self.millis)
    }
}

/// Counts with the chosen algorithm and wraps the result in a report.
pub fn count(
    ctx: &FieldCtx,
    spec: &CountSpec,
    algorithm: Algorithm,
    opts: &CountOptions,
) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let n = match algorithm {
        Algorithm::Brute => brute_count_value(ctx, spec, opts)?,
        Algorithm::Dfs => dfs_count_value(ctx, spec, opts)?,
        Algorithm::Expansion => expansion_count_value(ctx, spec, opts)?,
    };
    let millis = start.elapsed().as_millis() as u64;
    Ok(CountReport::new(ctx, spec, n, algorithm, millis))
}

pub fn count_brute(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<CountReport, CountError> {
    count(ctx, spec, Algorithm::Brute, opts)
}

pub fn count_dfs(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<CountReport, CountError> {
    count(ctx, spec, Algorithm::Dfs, opts)
}

pub fn count_expansion(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<CountReport, CountError> {
    count(ctx, spec, Algorithm::Expansion, opts)
}

fn domain_elements(ctx: &FieldCtx, domain: EntryDomain) -> Vec<FieldElement> {
    match domain {
        EntryDomain::Nonzero => ctx.nonzero_elements().collect(),
        EntryDomain::All => ctx.elements().collect(),
    }
}

fn tuple_work(n: usize, m: usize) -> u128 {
    (n as u128)
        .checked_pow(m as u32)
        .and_then(|t| t.checked_mul(exact::pair_count(m) as u128))
        .unwrap_or(u128::MAX)
}

/// Advances an odometer over `0..n` in every slot from `from` on; returns
/// false once exhausted.
fn advance(idx: &mut [usize], from: usize, n: usize) -> bool {
    for slot in (from..idx.len()).rev() {
        idx[slot] += 1;
        if idx[slot] < n {
            return true;
        }
        idx[slot] = 0;
    }
    false
}

fn brute_count_value(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<u128, CountError> {
    spec.validate(ctx)?;
    let elems = domain_elements(ctx, spec.domain);
    let n = elems.len();
    opts.check_budget(tuple_work(n, spec.m))?;
    let accept = product_acceptance(ctx, spec);
    let m = spec.m;

    let per_first = |first: usize| -> u128 {
        let mut idx = vec![0usize; m];
        idx[0] = first;
        let mut total = 0u128;
        loop {
            let shape_ok = match spec.multiplicity {
                Multiplicity::OrderedWithRepeats => true,
                Multiplicity::OrderedDistinct => {
                    (0..m).all(|i| (i + 1..m).all(|j| idx[i] != idx[j]))
                }
                Multiplicity::UnorderedDistinct => idx.windows(2).all(|w| w[0] < w[1]),
            };
            if shape_ok
                && (0..m).all(|i| {
                    (i + 1..m)
                        .all(|j| accept[ctx.mul(elems[idx[i]], elems[idx[j]]).code() as usize])
                })
            {
                total += 1;
            }
            if !advance(&mut idx, 1, n) {
                break;
            }
        }
        total
    };
    Ok(opts.install(|| (0..n).into_par_iter().map(per_first).sum()))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

struct DfsKernel<'a> {
    graph: &'a PairGraph,
    m: usize,
    multiplicity: Multiplicity,
    m_factorial: u128,
}

impl DfsKernel<'_> {
    /// Number of set bits with index strictly above `last`.
    fn count_above(cand: &[u64], last: usize) -> u128 {
        let w = last / 64;
        let b = last % 64;
        let head = if b == 63 {
            0
        } else {
            cand[w] & (!0u64 << (b + 1))
        };
        let tail: u32 = cand[w + 1..].iter().map(|x| x.count_ones()).sum();
        (head.count_ones() + tail) as u128
    }

    fn bit(cand: &[u64], i: usize) -> bool {
        (cand[i / 64] >> (i % 64)) & 1 == 1
    }

    /// `cand` is the intersection of the rows of the `depth` chosen entries,
    /// the last of which is `last` with current run length `run`; `denom` is
    /// the product of factorials of the run lengths so far.
    fn extend(
        &self,
        depth: usize,
        last: usize,
        run: u128,
        denom: u128,
        cand: &[u64],
        scratch: &mut [Vec<u64>],
    ) -> u128 {
        let repeats = self.multiplicity == Multiplicity::OrderedWithRepeats;
        if depth + 1 == self.m {
            let above = Self::count_above(cand, last);
            return match self.multiplicity {
                Multiplicity::OrderedWithRepeats => {
                    let mut t = above * (self.m_factorial / denom);
                    if Self::bit(cand, last) {
                        t += self.m_factorial / (denom * (run + 1));
                    }
                    t
                }
                Multiplicity::OrderedDistinct => above * self.m_factorial,
                Multiplicity::UnorderedDistinct => above,
            };
        }
        let (next, rest) = scratch.split_first_mut().expect("scratch per depth");
        let mut total = 0u128;
        let start = if repeats { last } else { last + 1 };
        let mut word = start / 64;
        let mut bits = cand.get(word).map_or(0, |w| w & (!0u64 << (start % 64)));
        loop {
            while bits == 0 {
                word += 1;
                if word >= cand.len() {
                    return total;
                }
                bits = cand[word];
            }
            let v = word * 64 + bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let row = self.graph.row(v);
            let mut any = 0u64;
            for ((dst, &a), &b) in next.iter_mut().zip(cand).zip(row) {
                *dst = a & b;
                any |= *dst;
            }
            if any == 0 {
                continue;
            }
            let (run2, denom2) = if v == last {
                (run + 1, denom * (run + 1))
            } else {
                (1, denom)
            };
            total += self.extend(depth + 1, v, run2, denom2, next, rest);
        }
    }
}

/// Clique-style count over an already built graph.
pub fn count_on_graph(
    graph: &PairGraph,
    m: usize,
    multiplicity: Multiplicity,
    opts: &CountOptions,
) -> u128 {
    let kernel = DfsKernel {
        graph,
        m,
        multiplicity,
        m_factorial: factorial(m),
    };
    let words = graph.words_per_row();
    let per_first = |first: usize| -> u128 {
        let mut scratch = vec![vec![0u64; words]; m.saturating_sub(2)];
        kernel.extend(1, first, 1, 1, graph.row(first), &mut scratch)
    };
    opts.install(|| {
        (0..graph.vertex_count())
            .into_par_iter()
            .map(per_first)
            .sum()
    })
}

fn dfs_count_value(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<u128, CountError> {
    spec.validate(ctx)?;
    let graph = PairGraph::build(ctx, spec);
    Ok(count_on_graph(&graph, spec.m, spec.multiplicity, opts))
}

/// The two sides produced by expanding `prod_{i<j} (1 + chi(a_i a_j + r))`
/// over `(F_q^*)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExpansionSums {
    /// Sum over all tuples; vanishing shifted products contribute a factor 1.
    pub full: i128,
    /// Sum over tuples with no vanishing shifted product; equals
    /// `2^{m(m-1)/2}` times the default-variant count.
    pub restricted: i128,
}

pub fn expansion_sums(
    ctx: &FieldCtx,
    m: usize,
    r: FieldElement,
    opts: &CountOptions,
) -> Result<ExpansionSums, CountError> {
    CountSpec::new(m, r).validate(ctx)?;
    let n = (ctx.q() - 1) as usize;
    opts.check_budget(tuple_work(n, m))?;
    let shifted: Vec<FieldElement> = ctx.elements().map(|x| ctx.add(x, r)).collect();

    let per_first = |first: usize| -> (i128, i128) {
        let mut idx = vec![0usize; m];
        idx[0] = first;
        let (mut full, mut restricted) = (0i128, 0i128);
        loop {
            let mut prod = 1i128;
            let mut any_zero = false;
            for i in 0..m {
                let ai = FieldElement::new(idx[i] as u32 + 1);
                for &j in &idx[i + 1..] {
                    let aj = FieldElement::new(j as u32 + 1);
                    let chi = ctx.quad_char(shifted[ctx.mul(ai, aj).code() as usize]);
                    any_zero |= chi == 0;
                    prod *= 1 + chi as i128;
                }
            }
            full += prod;
            if !any_zero {
                restricted += prod;
            }
            if !advance(&mut idx, 1, n) {
                break;
            }
        }
        (full, restricted)
    };
    let (full, restricted) = opts.install(|| {
        (0..n)
            .into_par_iter()
            .map(per_first)
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    });
    Ok(ExpansionSums { full, restricted })
}

fn expansion_count_value(
    ctx: &FieldCtx,
    spec: &CountSpec,
    opts: &CountOptions,
) -> Result<u128, CountError> {
    if !spec.is_default_variant() {
        return Err(CountError::UnsupportedVariant(spec.variant()));
    }
    let sums = expansion_sums(ctx, spec.m, spec.r, opts)?;
    let scale = 1i128 << exact::pair_count(spec.m);
    assert_eq!(
        sums.restricted % scale,
        0,
        "restricted expansion sum must be divisible by 2^M"
    );
    Ok((sums.restricted / scale) as u128)
}
