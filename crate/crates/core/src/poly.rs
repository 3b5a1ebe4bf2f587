//! Dense univariate polynomials over F_q.
//!
//! Besides ordinary arithmetic this module answers one structural question:
//! is `f` a constant times a square over the algebraic closure of F_q? Since
//! F_q is perfect, that holds iff every irreducible factor of `f` over F_q
//! occurs with even multiplicity. Multiplicities are read off from the chain
//! of radicals `rad(f), rad(f / rad(f)), ..`, where each radical is computed
//! with the characteristic-p correction: if `f' = 0` then `f = h(X^p)` and
//! `f` is the p-th power of the coefficient-wise p-th root of `h`.

use std::fmt;

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("gcd of two zero polynomials is undefined")]
    BothZeroGcd,
    #[error("operation requires a nonzero polynomial")]
    ZeroPolynomial,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("kernel shift must be nonzero")]
    ZeroShift,
    #[error("kernel coefficients must be nonzero")]
    ZeroCoefficient,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Dense polynomial, constant term first, without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PolyFq {
    coeffs: Vec<FieldElement>,
}

impl PolyFq {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        PolyFq { coeffs }
    }

    pub fn zero() -> Self {
        PolyFq { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(FieldElement::ONE)
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::new(vec![c])
    }

    /// `c X + d`.
    pub fn linear(c: FieldElement, d: FieldElement) -> Self {
        Self::new(vec![d, c])
    }

    pub fn from_codes(codes: &[u32]) -> Self {
        Self::new(codes.iter().map(|&c| FieldElement::new(c)).collect())
    }

    /// Parses the text form `c0,c1,...` (constant term first), validating
    /// each code against the field.
    pub fn parse(ctx: &FieldCtx, s: &str) -> Result<Self, PolyError> {
        let codes = crate::field::parse_code_list(s)?;
        let coeffs = codes
            .into_iter()
            .map(|c| ctx.elem(c as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(coeffs))
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> FieldElement {
        self.coeffs.last().copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn add(&self, ctx: &FieldCtx, other: &PolyFq) -> PolyFq {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| ctx.add(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &PolyFq) -> PolyFq {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| ctx.sub(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn scale(&self, ctx: &FieldCtx, c: FieldElement) -> PolyFq {
        Self::new(self.coeffs.iter().map(|&a| ctx.mul(a, c)).collect())
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &PolyFq) -> PolyFq {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(a, b));
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, ctx: &FieldCtx, mut e: u32) -> PolyFq {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(ctx, &base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(ctx, &base);
            }
        }
        acc
    }

    /// Horner evaluation.
    pub fn eval(&self, ctx: &FieldCtx, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    }

    pub fn derivative(&self, ctx: &FieldCtx) -> PolyFq {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| ctx.mul(ctx.from_int(i as i64), c))
                .collect(),
        )
    }

    /// Scales to leading coefficient 1; the zero polynomial is returned as is.
    pub fn monic(&self, ctx: &FieldCtx) -> PolyFq {
        match ctx.inv(self.leading()) {
            Ok(inv) => self.scale(ctx, inv),
            Err(_) => Self::zero(),
        }
    }

    pub fn div_rem(&self, ctx: &FieldCtx, divisor: &PolyFq) -> Result<(PolyFq, PolyFq), PolyError> {
        let dd = divisor.degree().ok_or(PolyError::DivisionByZero)?;
        let lead_inv = ctx.inv(divisor.leading())?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![FieldElement::ZERO; rem.len() - dd];
        for top in (dd..rem.len()).rev() {
            let c = ctx.mul(rem[top], lead_inv);
            if c.is_zero() {
                continue;
            }
            quot[top - dd] = c;
            for (i, &d) in divisor.coeffs.iter().enumerate() {
                let idx = top - dd + i;
                rem[idx] = ctx.sub(rem[idx], ctx.mul(c, d));
            }
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Exact quotient; panics in debug builds when the division leaves a remainder.
    fn div_exact(&self, ctx: &FieldCtx, divisor: &PolyFq) -> PolyFq {
        let (q, r) = self.div_rem(ctx, divisor).expect("nonzero divisor");
        debug_assert!(r.is_zero(), "inexact division");
        q
    }

    /// Monic gcd.
    pub fn gcd(&self, ctx: &FieldCtx, other: &PolyFq) -> Result<PolyFq, PolyError> {
        if self.is_zero() && other.is_zero() {
            return Err(PolyError::BothZeroGcd);
        }
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(ctx, &b)?;
            a = b;
            b = r;
        }
        Ok(a.monic(ctx))
    }

    /// For `f = h(X^p)`, the polynomial `g` with `g^p = f`.
    fn pth_root(&self, ctx: &FieldCtx) -> PolyFq {
        let p = ctx.p() as usize;
        // c -> c^(p^(k-1)) inverts the Frobenius c -> c^p on F_q.
        let frob_inv = (ctx.p() as u64).pow(ctx.k() - 1);
        Self::new(
            self.coeffs
                .iter()
                .step_by(p)
                .map(|&c| ctx.pow(c, frob_inv))
                .collect(),
        )
    }

    fn radical(&self, ctx: &FieldCtx) -> PolyFq {
        let f = self.monic(ctx);
        if f.degree().unwrap_or(0) == 0 {
            return Self::one();
        }
        let df = f.derivative(ctx);
        if df.is_zero() {
            return f.pth_root(ctx).radical(ctx);
        }
        let g = f.gcd(ctx, &df).expect("f is nonzero");
        // f / gcd(f, f') carries every factor whose multiplicity is prime to p;
        // the remaining ones live in g.
        let w = f.div_exact(ctx, &g);
        let rg = g.radical(ctx);
        let common = w.gcd(ctx, &rg).expect("w is nonzero");
        w.mul(ctx, &rg.div_exact(ctx, &common)).monic(ctx)
    }

    /// Square-free decomposition `f = lc * prod g_i^i`: returns the nonconstant
    /// `(g_i, i)` with `g_i` monic, square-free and pairwise coprime.
    pub fn squarefree_decomposition(
        &self,
        ctx: &FieldCtx,
    ) -> Result<Vec<(PolyFq, u32)>, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let mut out = Vec::new();
        let mut rest = self.monic(ctx);
        let mut layer = rest.radical(ctx);
        let mut multiplicity = 1u32;
        while layer.degree().unwrap_or(0) > 0 {
            rest = rest.div_exact(ctx, &layer);
            let next = rest.radical(ctx);
            // factors of multiplicity exactly `multiplicity`
            let exact = layer.div_exact(ctx, &next);
            if exact.degree().unwrap_or(0) > 0 {
                out.push((exact, multiplicity));
            }
            layer = next;
            multiplicity += 1;
        }
        Ok(out)
    }

    /// Product of the distinct monic irreducible factors.
    pub fn square_free_part(&self, ctx: &FieldCtx) -> Result<PolyFq, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        Ok(self.radical(ctx))
    }

    /// True iff every root over the algebraic closure has even multiplicity.
    pub fn is_square_in_closure(&self, ctx: &FieldCtx) -> Result<bool, PolyError> {
        Ok(self
            .squarefree_decomposition(ctx)?
            .iter()
            .all(|(_, e)| e % 2 == 0))
    }

    /// Text form `c0,c1,...`.
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.coeffs
            .iter()
            .map(|c| c.code().to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for PolyFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*X")?,
                _ => write!(f, "{c}*X^{i}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumDomain {
    All,
    Nonzero,
}

/// Exact `sum_{x in domain} chi(f(x))`.
pub fn char_sum_poly(ctx: &FieldCtx, f: &PolyFq, domain: SumDomain) -> i64 {
    let start = match domain {
        SumDomain::All => 0,
        SumDomain::Nonzero => 1,
    };
    ctx.elements()
        .skip(start)
        .map(|x| ctx.quad_char(f.eval(ctx, x)) as i64)
        .sum()
}

/// Exact form of `|sum| <= (degree - 1) sqrt(q)`; compares squares in integers.
pub fn within_weil_bound(sum: i64, degree: usize, q: u32) -> bool {
    if degree == 0 {
        return sum == 0;
    }
    let lhs = (sum as i128) * (sum as i128);
    let d = degree as i128 - 1;
    lhs <= d * d * q as i128
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeilReport {
    /// Complete sum over all of F_q.
    pub sum: i64,
    pub degree: usize,
    /// `(degree - 1) * sqrt(q)`.
    pub degree_bound: f64,
    /// The polynomial is a square over the closure, so the bound does not apply.
    pub square_kernel: bool,
    /// Bound satisfied; vacuously true when `square_kernel` is set.
    pub holds: bool,
}

pub fn weil_check(ctx: &FieldCtx, f: &PolyFq) -> Result<WeilReport, PolyError> {
    let square_kernel = f.is_square_in_closure(ctx)?;
    let degree = f.degree().expect("nonzero after the closure-square test");
    let sum = char_sum_poly(ctx, f, SumDomain::All);
    Ok(WeilReport {
        sum,
        degree,
        degree_bound: (degree as f64 - 1.0) * (ctx.q() as f64).sqrt(),
        square_kernel,
        holds: square_kernel || within_weil_bound(sum, degree, ctx.q()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Factors `c X + r`.
    Linear,
    /// Factors `c X^2 + r`.
    Quadratic,
}

/// A product `prod (c_i X + r)^{e_i}` or `prod (c_i X^2 + r)^{e_i}` with
/// `e_i in {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredKernel {
    family: KernelFamily,
    factors: Vec<(FieldElement, bool)>,
    shift: FieldElement,
}

impl FactoredKernel {
    pub fn new(
        family: KernelFamily,
        factors: Vec<(FieldElement, bool)>,
        shift: FieldElement,
    ) -> Result<Self, PolyError> {
        if shift.is_zero() {
            return Err(PolyError::ZeroShift);
        }
        if factors.iter().any(|(c, _)| c.is_zero()) {
            return Err(PolyError::ZeroCoefficient);
        }
        Ok(FactoredKernel {
            family,
            factors,
            shift,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn shift(&self) -> FieldElement {
        self.shift
    }

    pub fn factors(&self) -> &[(FieldElement, bool)] {
        &self.factors
    }

    pub fn active_coefficients(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.factors.iter().filter(|(_, on)| *on).map(|&(c, _)| c)
    }

    pub fn degree(&self) -> usize {
        let per = match self.family {
            KernelFamily::Linear => 1,
            KernelFamily::Quadratic => 2,
        };
        per * self.active_coefficients().count()
    }

    pub fn expand(&self, ctx: &FieldCtx) -> PolyFq {
        self.active_coefficients().fold(PolyFq::one(), |acc, c| {
            let factor = match self.family {
                KernelFamily::Linear => PolyFq::linear(c, self.shift),
                KernelFamily::Quadratic => PolyFq::new(vec![self.shift, FieldElement::ZERO, c]),
            };
            acc.mul(ctx, &factor)
        })
    }

    /// Closure-square test by multiset parity. Distinct coefficients give
    /// disjoint root sets (`r != 0`, q odd) and each single factor is
    /// square-free, so the product is a square iff every active coefficient
    /// value occurs an even number of times.
    pub fn is_square(&self) -> bool {
        let mut active: Vec<u32> = self.active_coefficients().map(|c| c.code()).collect();
        active.sort_unstable();
        active.chunk_by(|a, b| a == b).all(|run| run.len() % 2 == 0)
    }
}
