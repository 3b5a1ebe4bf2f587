//! Character-sum decomposition of the tuple count.
//!
//! Expanding `prod_{i<j} (1 + chi(a_i a_j + r))` over `(F_q^*)^m` gives a sum
//! over exponent vectors eps of
//!
//! ```text
//! R(eps) = sum_{a in (F_q^*)^m} prod_{i<j} chi(a_i a_j + r)^{eps_{i,j}}.
//! ```
//!
//! When only pairs `(1, j)` are active, `R(eps)` factors into one-variable
//! shifted sums, each equal to `-chi(r)`. Otherwise, with `eps_{1,2} = 1`,
//! averaging over the substitution `(a_1, a_j) -> (a_1 / b, a_j b)` gives
//!
//! ```text
//! (q - 1) R(eps) = sum_{a_2..a_m} S(a_2..a_m) T(a_2..a_m),
//! S = sum_{x != 0} chi(F(x)),  F(X) = prod_j (a_j X + r)^{eps_{1,j}},
//! T = sum_{b != 0} chi(G(b)),  G(X) = prod_{2<=i<j} (a_i a_j X^2 + r)^{eps_{i,j}}.
//! ```
//!
//! Everything here is exact integer or rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::count::{
    count_on_graph, expansion_sums, CountError, CountOptions, CountSpec, Multiplicity,
};
use crate::epsilon::{EpsilonError, EpsilonMatrix};
use crate::exact::{self, format_ratio};
use crate::field::{FieldCtx, FieldElement};
use crate::graph::PairGraph;
use crate::poly::{
    char_sum_poly, within_weil_bound, FactoredKernel, KernelFamily, PolyError, SumDomain,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompError {
    #[error("exponent vector must be nonzero")]
    ZeroEpsilon,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("work estimate {required} exceeds the budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("identity violated: direct {direct} != decomposed {decomposed}")]
    IdentityViolated { direct: String, decomposed: String },
    #[error(transparent)]
    Epsilon(#[from] EpsilonError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Count(CountError),
}

impl From<CountError> for DecompError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::BudgetExceeded { required, budget } => {
                DecompError::BudgetExceeded { required, budget }
            }
            other => DecompError::Count(other),
        }
    }
}

fn check_shift(ctx: &FieldCtx, r: FieldElement) -> Result<(), DecompError> {
    if r.is_zero() || r.code() >= ctx.q() {
        return Err(DecompError::PreconditionViolated(format!(
            "shift {r} must be a nonzero element of F_{}",
            ctx.q()
        )));
    }
    Ok(())
}

fn check_budget(opts: &CountOptions, required: u128) -> Result<(), DecompError> {
    opts.check_budget(required).map_err(DecompError::from)
}

fn pow_u128(base: u32, e: usize) -> u128 {
    (base as u128).checked_pow(e as u32).unwrap_or(u128::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum REpsAlgorithm {
    Naive,
    #[default]
    DfsWeighted,
}

/// Value of `R(eps)`; `trivial` marks `eps = 0`, where `R = (q-1)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct REps {
    pub value: i128,
    pub trivial: bool,
}

pub fn r_eps(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    algo: REpsAlgorithm,
    opts: &CountOptions,
) -> Result<REps, DecompError> {
    check_shift(ctx, r)?;
    let m = eps.m();
    let n = ctx.q() - 1;
    if !eps.is_nonzero() {
        return Ok(REps {
            value: (n as i128).pow(m as u32),
            trivial: true,
        });
    }
    check_budget(opts, pow_u128(n, m))?;
    let shifted: Vec<FieldElement> = ctx.elements().map(|x| ctx.add(x, r)).collect();
    // partners[t] = earlier variables s < t with eps_{s,t} = 1 (0-based)
    let partners: Vec<Vec<usize>> = (0..m)
        .map(|t| (0..t).filter(|&s| eps.get(s + 1, t + 1)).collect())
        .collect();
    let chi =
        |x: FieldElement, y: FieldElement| ctx.quad_char(shifted[ctx.mul(x, y).code() as usize]);

    let value = match algo {
        REpsAlgorithm::Naive => opts.install(|| {
            (1..=n)
                .into_par_iter()
                .map(|first| {
                    let mut a = vec![FieldElement::ONE; m];
                    a[0] = FieldElement::new(first);
                    let mut total = 0i128;
                    loop {
                        let mut prod = 1i32;
                        for (t, ps) in partners.iter().enumerate() {
                            for &s in ps {
                                prod *= chi(a[s], a[t]);
                            }
                        }
                        total += prod as i128;
                        // odometer over a[1..] in 1..=n
                        let mut slot = m - 1;
                        loop {
                            if slot == 0 {
                                return total;
                            }
                            if a[slot].code() < n {
                                a[slot] = FieldElement::new(a[slot].code() + 1);
                                break;
                            }
                            a[slot] = FieldElement::ONE;
                            slot -= 1;
                        }
                    }
                })
                .sum()
        }),
        REpsAlgorithm::DfsWeighted => {
            // variables that touch no active pair contribute a factor q-1
            let touched: Vec<bool> = (0..m)
                .map(|t| (0..m).any(|s| s != t && eps.get(s + 1, t + 1)))
                .collect();
            let free = touched.iter().filter(|&&b| !b).count();
            let order: Vec<usize> = (0..m).filter(|&t| touched[t]).collect();

            fn walk(
                depth: usize,
                order: &[usize],
                partners: &[Vec<usize>],
                a: &mut [FieldElement],
                n: u32,
                chi: &dyn Fn(FieldElement, FieldElement) -> i32,
            ) -> i128 {
                if depth == order.len() {
                    return 1;
                }
                let t = order[depth];
                let mut total = 0i128;
                for code in 1..=n {
                    let x = FieldElement::new(code);
                    let mut w = 1i32;
                    for &s in &partners[t] {
                        w *= chi(a[s], x);
                        if w == 0 {
                            break;
                        }
                    }
                    if w == 0 {
                        continue;
                    }
                    a[t] = x;
                    total += w as i128 * walk(depth + 1, order, partners, a, n, chi);
                }
                total
            }

            let first = order[0];
            let core: i128 = opts.install(|| {
                (1..=n)
                    .into_par_iter()
                    .map(|code| {
                        let mut a = vec![FieldElement::ONE; m];
                        a[first] = FieldElement::new(code);
                        walk(1, &order, &partners, &mut a, n, &chi)
                    })
                    .sum()
            });
            core * (n as i128).pow(free as u32)
        }
    };
    Ok(REps {
        value,
        trivial: false,
    })
}

/// A renumbering of the variables with `eps_{1,2} = 1` afterwards, and the
/// relabeled vector. `perm[k-1]` is the old index of new variable k.
pub fn canonicalize_eps(eps: &EpsilonMatrix) -> Result<(Vec<usize>, EpsilonMatrix), DecompError> {
    let m = eps.m();
    let &(i, j) = eps.pairs().first().ok_or(DecompError::ZeroEpsilon)?;
    let mut perm = vec![i, j];
    perm.extend((1..=m).filter(|&t| t != i && t != j));
    let out = eps.relabel(&perm);
    debug_assert!(out.get(1, 2));
    Ok((perm, out))
}

/// `sum_{a != 0} chi(a + r)` by direct summation.
pub fn shifted_character_sum(ctx: &FieldCtx, r: FieldElement) -> i64 {
    ctx.nonzero_elements()
        .map(|a| ctx.quad_char(ctx.add(a, r)) as i64)
        .sum()
}

/// Exact `R(eps)` when only pairs `(1, j)` are active:
/// `(-chi(r))^w (q-1)^{m-w}` with w the number of active pairs.
pub fn r_eps_vanishing_closed_form(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
) -> Result<i128, DecompError> {
    check_shift(ctx, r)?;
    if !eps.is_nonzero() {
        return Err(DecompError::ZeroEpsilon);
    }
    if !eps.lower_is_zero() {
        return Err(DecompError::PreconditionViolated(
            "closed form needs eps_{i,j} = 0 for all 2 <= i < j".into(),
        ));
    }
    let w = eps.row1_weight() as u32;
    let inner = -(ctx.quad_char(r) as i128);
    Ok(inner.pow(w) * ((ctx.q() - 1) as i128).pow(eps.m() as u32 - w))
}

fn check_rest(
    ctx: &FieldCtx,
    eps: &EpsilonMatrix,
    a_rest: &[FieldElement],
) -> Result<(), DecompError> {
    if a_rest.len() + 1 != eps.m() {
        return Err(DecompError::PreconditionViolated(format!(
            "expected {} values a_2..a_m, got {}",
            eps.m() - 1,
            a_rest.len()
        )));
    }
    if a_rest.iter().any(|a| a.is_zero() || a.code() >= ctx.q()) {
        return Err(DecompError::PreconditionViolated(
            "a_2..a_m must be nonzero field elements".into(),
        ));
    }
    Ok(())
}

/// `F(X) = prod_{j >= 2} (a_j X + r)^{eps_{1,j}}`; `a_rest[0]` is a_2.
pub fn f_kernel(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    a_rest: &[FieldElement],
) -> Result<FactoredKernel, DecompError> {
    check_shift(ctx, r)?;
    check_rest(ctx, eps, a_rest)?;
    let factors = (2..=eps.m())
        .map(|j| (a_rest[j - 2], eps.get(1, j)))
        .collect();
    Ok(FactoredKernel::new(KernelFamily::Linear, factors, r)?)
}

/// `G(X) = prod_{2 <= i < j} (a_i a_j X^2 + r)^{eps_{i,j}}`.
pub fn g_kernel(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    a_rest: &[FieldElement],
) -> Result<FactoredKernel, DecompError> {
    check_shift(ctx, r)?;
    check_rest(ctx, eps, a_rest)?;
    let m = eps.m();
    let mut factors = Vec::new();
    for i in 2..=m {
        for j in i + 1..=m {
            factors.push((ctx.mul(a_rest[i - 2], a_rest[j - 2]), eps.get(i, j)));
        }
    }
    Ok(FactoredKernel::new(KernelFamily::Quadratic, factors, r)?)
}

/// `S(a_2..a_m) = sum_{x != 0} chi(F(x))`.
pub fn s_sum(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    a_rest: &[FieldElement],
) -> Result<i64, DecompError> {
    if eps.row1_weight() == 0 {
        return Err(DecompError::PreconditionViolated(
            "F has degree 0: no active pair (1, j)".into(),
        ));
    }
    let f = f_kernel(ctx, r, eps, a_rest)?.expand(ctx);
    Ok(char_sum_poly(ctx, &f, SumDomain::Nonzero))
}

/// `T(a_2..a_m) = sum_{b != 0} chi(G(b))`.
pub fn t_sum(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    a_rest: &[FieldElement],
) -> Result<i64, DecompError> {
    if eps.lower_is_zero() {
        return Err(DecompError::PreconditionViolated(
            "G has degree 0: no active pair (i, j) with 2 <= i".into(),
        ));
    }
    let g = g_kernel(ctx, r, eps, a_rest)?.expand(ctx);
    Ok(char_sum_poly(ctx, &g, SumDomain::Nonzero))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct STDecompositionReport {
    pub q: u32,
    pub m: usize,
    pub r: u32,
    pub eps: String,
    /// `R(eps)` by direct summation.
    pub r_direct: i128,
    /// `(q-1)^{-1} sum S T`, exact.
    #[serde(serialize_with = "ser_ratio")]
    pub r_via_st: BigRational,
    /// `sum S T` is divisible by `q - 1`.
    pub st_divisible: bool,
    /// Tuples `(a_2..a_m)` where F or G is a square over the closure.
    pub square_kernel_tuples: u64,
    pub total_tuples: u64,
    /// Share of `r_via_st` from square-kernel tuples.
    #[serde(serialize_with = "ser_ratio")]
    pub contribution_a: BigRational,
    /// Share of `r_via_st` from the remaining tuples.
    #[serde(serialize_with = "ser_ratio")]
    pub contribution_b: BigRational,
    /// Max of `|S|`, `|T|` over non-square kernels.
    pub weil_max_abs: i64,
    /// Max of `|complete sum| / ((deg - 1) sqrt q)` over non-square kernels
    /// of degree at least 2.
    pub weil_max_ratio: f64,
    /// Non-square kernels checked against the bound (complete sums).
    pub weil_checks: u64,
    pub weil_violations: u64,
    /// `|R(eps)| / q^{m-1}`.
    pub bound_ratio: f64,
    pub identity_holds: bool,
}

fn ser_ratio<S: serde::Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(x))
}

impl STDecompositionReport {
    /// `Err(IdentityViolated)` when the two sides differ.
    pub fn ensure(self) -> Result<Self, DecompError> {
        if self.identity_holds {
            Ok(self)
        } else {
            Err(DecompError::IdentityViolated {
                direct: self.r_direct.to_string(),
                decomposed: format_ratio(&self.r_via_st),
            })
        }
    }
}

#[derive(Default, Clone, Copy)]
struct StTally {
    sum_st: i128,
    sum_st_square: i128,
    square_tuples: u64,
    tuples: u64,
    max_abs: i64,
    max_ratio: f64,
    checks: u64,
    violations: u64,
}

impl StTally {
    fn merge(mut self, o: StTally) -> StTally {
        self.sum_st += o.sum_st;
        self.sum_st_square += o.sum_st_square;
        self.square_tuples += o.square_tuples;
        self.tuples += o.tuples;
        self.max_abs = self.max_abs.max(o.max_abs);
        self.max_ratio = self.max_ratio.max(o.max_ratio);
        self.checks += o.checks;
        self.violations += o.violations;
        self
    }

    /// Checks the complete sum `partial + chi(f(0))` of a non-square kernel.
    fn weil(&mut self, ctx: &FieldCtx, partial: i64, kern: &FactoredKernel) {
        let degree = kern.degree();
        let at_zero = ctx.pow(kern.shift(), kern.active_coefficients().count() as u64);
        let complete = partial + ctx.quad_char(at_zero) as i64;
        self.checks += 1;
        self.max_abs = self.max_abs.max(partial.abs());
        if !within_weil_bound(complete, degree, ctx.q()) {
            self.violations += 1;
        }
        if degree >= 2 {
            let ratio = complete.abs() as f64 / ((degree - 1) as f64 * (ctx.q() as f64).sqrt());
            self.max_ratio = self.max_ratio.max(ratio);
        }
    }
}

/// Verifies `(q-1) R(eps) = sum S T` exactly and tallies the square-kernel
/// and Weil-bound statistics. Requires `eps_{1,2} = 1` and some active pair
/// `(i, j)` with `2 <= i`.
pub fn st_identity_check(
    ctx: &FieldCtx,
    r: FieldElement,
    eps: &EpsilonMatrix,
    opts: &CountOptions,
) -> Result<STDecompositionReport, DecompError> {
    check_shift(ctx, r)?;
    if !eps.is_nonzero() {
        return Err(DecompError::ZeroEpsilon);
    }
    if !eps.get(1, 2) {
        return Err(DecompError::PreconditionViolated(
            "eps must be canonical (eps_{1,2} = 1)".into(),
        ));
    }
    if eps.lower_is_zero() {
        return Err(DecompError::PreconditionViolated(
            "S-T decomposition needs some eps_{i,j} = 1 with 2 <= i < j".into(),
        ));
    }
    let m = eps.m();
    let n = ctx.q() - 1;
    check_budget(opts, pow_u128(n, m - 1).saturating_mul(ctx.q() as u128))?;

    let per_a2 = |a2: u32| -> Result<StTally, DecompError> {
        let mut tally = StTally::default();
        let mut rest = vec![FieldElement::ONE; m - 1];
        rest[0] = FieldElement::new(a2);
        loop {
            let fk = f_kernel(ctx, r, eps, &rest)?;
            let gk = g_kernel(ctx, r, eps, &rest)?;
            let s = char_sum_poly(ctx, &fk.expand(ctx), SumDomain::Nonzero);
            let t = char_sum_poly(ctx, &gk.expand(ctx), SumDomain::Nonzero);
            let st = s as i128 * t as i128;
            tally.sum_st += st;
            tally.tuples += 1;
            let (f_sq, g_sq) = (fk.is_square(), gk.is_square());
            if f_sq || g_sq {
                tally.square_tuples += 1;
                tally.sum_st_square += st;
            }
            if !f_sq {
                tally.weil(ctx, s, &fk);
            }
            if !g_sq {
                tally.weil(ctx, t, &gk);
            }
            let mut slot = m - 2;
            loop {
                if slot == 0 {
                    return Ok(tally);
                }
                if rest[slot].code() < n {
                    rest[slot] = FieldElement::new(rest[slot].code() + 1);
                    break;
                }
                rest[slot] = FieldElement::ONE;
                slot -= 1;
            }
        }
    };
    let tally = opts.install(|| {
        (1..=n)
            .into_par_iter()
            .map(per_a2)
            .try_reduce(StTally::default, |a, b| Ok(a.merge(b)))
    })?;

    let direct = r_eps(ctx, r, eps, REpsAlgorithm::DfsWeighted, opts)?.value;
    let den = BigInt::from(n);
    let r_via_st = BigRational::new(BigInt::from(tally.sum_st), den.clone());
    let contribution_a = BigRational::new(BigInt::from(tally.sum_st_square), den.clone());
    let contribution_b = BigRational::new(BigInt::from(tally.sum_st - tally.sum_st_square), den);
    let identity_holds = r_via_st == BigRational::from_integer(BigInt::from(direct));
    let bound_ratio = (BigRational::from_integer(BigInt::from(direct)).abs()
        / BigRational::from_integer(BigInt::from(ctx.q()).pow(m as u32 - 1)))
    .to_f64()
    .unwrap_or(f64::INFINITY);

    Ok(STDecompositionReport {
        q: ctx.q(),
        m,
        r: r.code(),
        eps: eps.to_hex(),
        r_direct: direct,
        r_via_st,
        st_divisible: tally.sum_st % n as i128 == 0,
        square_kernel_tuples: tally.square_tuples,
        total_tuples: tally.tuples,
        contribution_a,
        contribution_b,
        weil_max_abs: tally.max_abs,
        weil_max_ratio: tally.max_ratio,
        weil_checks: tally.checks,
        weil_violations: tally.violations,
        bound_ratio,
        identity_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionIdentityReport {
    pub q: u32,
    pub m: usize,
    pub r: u32,
    /// `sum_{all eps} R(eps)`, each `R` summed separately.
    pub sum_r_eps: i128,
    /// `sum_{(F_q^*)^m} prod (1 + chi(a_i a_j + r))`.
    pub product_sum: i128,
    /// The same sum over tuples with no vanishing shifted product.
    pub restricted_sum: i128,
    /// `product_sum - restricted_sum`: tuples with a zero shifted product.
    pub zero_product_correction: i128,
    /// Default-variant count from the clique counter.
    pub count: u128,
    /// `2^{m(m-1)/2}`.
    pub scale: u128,
    pub holds: bool,
}

/// Checks `sum_eps R(eps) = sum prod (1 + chi)` and
/// `restricted sum = 2^{m(m-1)/2} N_r(m, q)` exactly.
pub fn expansion_identity_check(
    ctx: &FieldCtx,
    m: usize,
    r: FieldElement,
    opts: &CountOptions,
) -> Result<ExpansionIdentityReport, DecompError> {
    check_shift(ctx, r)?;
    let pairs = exact::pair_count(m);
    let all: Vec<EpsilonMatrix> = EpsilonMatrix::enumerate(m)?.collect();
    check_budget(
        opts,
        pow_u128(ctx.q() - 1, m).saturating_mul(all.len() as u128),
    )?;

    let sum_r_eps = all
        .par_iter()
        .map(|e| r_eps(ctx, r, e, REpsAlgorithm::DfsWeighted, opts).map(|v| v.value))
        .try_reduce(|| 0i128, |a, b| Ok(a + b))?;
    let sums = expansion_sums(ctx, m, r, opts)?;
    let spec = CountSpec::new(m, r);
    spec.validate(ctx)?;
    let graph = PairGraph::build(ctx, &spec);
    let count = count_on_graph(&graph, m, Multiplicity::OrderedWithRepeats, opts);
    let scale = 1u128 << pairs;

    let holds = sum_r_eps == sums.full && sums.restricted == (scale * count) as i128;
    Ok(ExpansionIdentityReport {
        q: ctx.q(),
        m,
        r: r.code(),
        sum_r_eps,
        product_sum: sums.full,
        restricted_sum: sums.restricted,
        zero_product_correction: sums.full - sums.restricted,
        count,
        scale,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(c: u32) -> FieldElement {
        FieldElement::new(c)
    }

    fn opts() -> CountOptions {
        CountOptions::default()
    }

    fn eps(m: usize, pairs: &[(usize, usize)]) -> EpsilonMatrix {
        EpsilonMatrix::from_pairs(m, pairs).unwrap()
    }

    /// Independent oracle: literal sum over all tuples, no pruning.
    fn r_eps_oracle(ctx: &FieldCtx, r: FieldElement, ep: &EpsilonMatrix) -> i128 {
        let m = ep.m();
        let n = (ctx.q() - 1) as usize;
        let total = n.pow(m as u32);
        let mut acc = 0i128;
        for mut code in 0..total {
            let mut a = Vec::with_capacity(m);
            for _ in 0..m {
                a.push(FieldElement::new((code % n) as u32 + 1));
                code /= n;
            }
            let mut prod = 1i128;
            for (i, j) in ep.pairs() {
                let v = ctx.add(ctx.mul_by_poly(a[i - 1], a[j - 1]), r);
                prod *= ctx.quad_char_euler(v) as i128;
            }
            acc += prod;
        }
        acc
    }

    #[test]
    fn r_eps_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        let single = eps(4, &[(1, 2)]);
        for algo in [REpsAlgorithm::Naive, REpsAlgorithm::DfsWeighted] {
            assert_eq!(r_eps(&f5, e(1), &single, algo, &opts()).unwrap().value, -64);
        }
        assert_eq!(r_eps_oracle(&f5, e(1), &single), -64);

        let f7 = FieldCtx::prime(7).unwrap();
        let one = eps(2, &[(1, 2)]);
        assert_eq!(
            r_eps(&f7, e(3), &one, REpsAlgorithm::Naive, &opts())
                .unwrap()
                .value,
            6
        );

        let z = EpsilonMatrix::zero(3).unwrap();
        let v = r_eps(&f7, e(3), &z, REpsAlgorithm::Naive, &opts()).unwrap();
        assert_eq!(
            v,
            REps {
                value: 216,
                trivial: true
            }
        );
    }

    #[test]
    fn r_eps_routes_agree_with_oracle() {
        for (p, k) in [(3, 1), (5, 1), (3, 2)] {
            let ctx = FieldCtx::new(p, k, None).unwrap();
            for r in ctx.nonzero_elements() {
                for ep in EpsilonMatrix::enumerate(3).unwrap().skip(1) {
                    let want = r_eps_oracle(&ctx, r, &ep);
                    for algo in [REpsAlgorithm::Naive, REpsAlgorithm::DfsWeighted] {
                        assert_eq!(r_eps(&ctx, r, &ep, algo, &opts()).unwrap().value, want);
                    }
                }
            }
        }
    }

    #[test]
    fn canonicalize_examples() {
        let (perm, c) = canonicalize_eps(&eps(3, &[(2, 3)])).unwrap();
        assert_eq!(perm, vec![2, 3, 1]);
        assert_eq!(c.pairs(), vec![(1, 2)]);

        let already = eps(4, &[(1, 2), (3, 4)]);
        let (perm, c) = canonicalize_eps(&already).unwrap();
        assert_eq!(perm, vec![1, 2, 3, 4]);
        assert_eq!(c, already);

        let f7 = FieldCtx::prime(7).unwrap();
        let before = eps(4, &[(3, 4)]);
        let (_, after) = canonicalize_eps(&before).unwrap();
        assert!(after.get(1, 2));
        for r in f7.nonzero_elements() {
            assert_eq!(
                r_eps(&f7, r, &before, REpsAlgorithm::Naive, &opts()).unwrap(),
                r_eps(&f7, r, &after, REpsAlgorithm::Naive, &opts()).unwrap()
            );
        }
        assert_eq!(
            canonicalize_eps(&EpsilonMatrix::zero(4).unwrap()).unwrap_err(),
            DecompError::ZeroEpsilon
        );
    }

    #[test]
    fn relabeling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (p, k) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let ctx = FieldCtx::new(p, k, None).unwrap();
            for m in 2..=4 {
                for _ in 0..10 {
                    let ep = EpsilonMatrix::enumerate(m)
                        .unwrap()
                        .collect::<Vec<_>>()
                        .choose(&mut rng)
                        .copied()
                        .unwrap();
                    let mut perm: Vec<usize> = (1..=m).collect();
                    perm.shuffle(&mut rng);
                    let r = e(1 + (ctx.q() - 2).min(2));
                    let a = r_eps(&ctx, r, &ep, REpsAlgorithm::DfsWeighted, &opts()).unwrap();
                    let b = r_eps(
                        &ctx,
                        r,
                        &ep.relabel(&perm),
                        REpsAlgorithm::DfsWeighted,
                        &opts(),
                    )
                    .unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn vanishing_closed_form_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        assert_eq!(
            r_eps_vanishing_closed_form(&f5, e(1), &eps(4, &[(1, 2)])).unwrap(),
            -64
        );
        let w2 = eps(4, &[(1, 2), (1, 4)]);
        assert_eq!(f5.quad_char(e(2)), -1);
        assert_eq!(r_eps_vanishing_closed_form(&f5, e(2), &w2).unwrap(), 16);
        assert_eq!(
            r_eps(&f5, e(2), &w2, REpsAlgorithm::Naive, &opts())
                .unwrap()
                .value,
            16
        );
        assert!(matches!(
            r_eps_vanishing_closed_form(&f5, e(1), &eps(4, &[(1, 2), (2, 3)])),
            Err(DecompError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn inner_sum_is_minus_chi_r_not_minus_one() {
        // The one-variable shifted sum equals -chi(r); it is -1 only when r
        // is a square.
        let f7 = FieldCtx::prime(7).unwrap();
        for r in f7.nonzero_elements() {
            let s = shifted_character_sum(&f7, r);
            assert_eq!(s, -(f7.quad_char(r) as i64));
            assert_eq!(s == -1, f7.quad_char(r) == 1);
        }
        assert_eq!(shifted_character_sum(&f7, e(3)), 1);
    }

    #[test]
    fn s_sum_examples() {
        let f7 = FieldCtx::prime(7).unwrap();
        let row = eps(3, &[(1, 2)]);
        for a2 in f7.nonzero_elements() {
            assert_eq!(s_sum(&f7, e(3), &row, &[a2, e(1)]).unwrap(), 1);
        }
        let f5 = FieldCtx::prime(5).unwrap();
        let both = eps(3, &[(1, 2), (1, 3)]);
        assert_eq!(s_sum(&f5, e(1), &both, &[e(2), e(2)]).unwrap(), 3);
        assert!(matches!(
            s_sum(&f5, e(1), &eps(3, &[(2, 3)]), &[e(1), e(1)]),
            Err(DecompError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn t_sum_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        let lower = eps(3, &[(1, 2), (2, 3)]);
        // c = a_2 a_3 = 1
        assert_eq!(t_sum(&f5, e(1), &lower, &[e(1), e(1)]).unwrap(), -2);
        // c = 2
        assert_eq!(t_sum(&f5, e(1), &lower, &[e(1), e(2)]).unwrap(), 0);

        // G = (3X^2 + 1)^2 over F_7: products a_2 a_3 = a_2 a_4 = 3, so a_3 = a_4
        let f7 = FieldCtx::prime(7).unwrap();
        let two = eps(4, &[(1, 2), (2, 3), (2, 4)]);
        let rest = [e(1), e(3), e(3)];
        assert!(g_kernel(&f7, e(1), &two, &rest).unwrap().is_square());
        let roots = f7
            .nonzero_elements()
            .filter(|&b| f7.add(f7.mul(e(3), f7.mul(b, b)), e(1)).is_zero())
            .count() as i64;
        assert_eq!(t_sum(&f7, e(1), &two, &rest).unwrap(), 6 - roots);

        assert!(matches!(
            t_sum(&f5, e(1), &eps(3, &[(1, 2)]), &[e(1), e(1)]),
            Err(DecompError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn st_identity_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        let rep = st_identity_check(&f5, e(1), &eps(4, &[(1, 2), (2, 3)]), &opts()).unwrap();
        assert!(rep.identity_holds && rep.st_divisible);
        assert_eq!(rep.weil_violations, 0);

        let f7 = FieldCtx::prime(7).unwrap();
        let rep = st_identity_check(&f7, e(3), &EpsilonMatrix::all_ones(4).unwrap(), &opts())
            .unwrap()
            .ensure()
            .unwrap();
        assert_eq!(rep.weil_violations, 0);
        assert!(rep.weil_checks > 0);
        assert_eq!(
            rep.contribution_a.clone() + rep.contribution_b.clone(),
            rep.r_via_st
        );

        assert!(matches!(
            st_identity_check(&f5, e(1), &eps(4, &[(1, 2)]), &opts()),
            Err(DecompError::PreconditionViolated(_))
        ));
        assert!(matches!(
            st_identity_check(&f5, e(1), &eps(4, &[(2, 3)]), &opts()),
            Err(DecompError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn expansion_identity_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        let rep = expansion_identity_check(&f5, 2, e(1), &opts()).unwrap();
        assert_eq!(rep.sum_r_eps, 12);
        assert_eq!(rep.product_sum, 12);
        assert_eq!(rep.restricted_sum, 8);
        assert_eq!(rep.count, 4);
        assert_eq!(rep.zero_product_correction, 4);
        assert!(rep.holds);

        let f3 = FieldCtx::prime(3).unwrap();
        let rep = expansion_identity_check(&f3, 2, e(1), &opts()).unwrap();
        assert_eq!(rep.restricted_sum, 0);
        assert!(rep.holds);

        let rep = expansion_identity_check(&f5, 3, e(2), &opts()).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn budget_is_enforced() {
        let f7 = FieldCtx::prime(7).unwrap();
        let tight = opts().with_budget(10);
        assert!(matches!(
            r_eps(&f7, e(1), &eps(4, &[(1, 2)]), REpsAlgorithm::Naive, &tight),
            Err(DecompError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            expansion_identity_check(&f7, 3, e(1), &tight),
            Err(DecompError::BudgetExceeded { .. })
        ));
    }
}
