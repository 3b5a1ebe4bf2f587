//! Arithmetic in F_q for odd prime powers q = p^k.
//!
//! Elements are identified by an integer code in `0..q`: the coefficient
//! vector `(c_0, .., c_{k-1})` of the polynomial representative modulo the
//! field modulus, packed as base-p digits, `code = sum c_i p^i`. For prime
//! fields the code is the residue itself.
//!
//! Multiplication, inversion, powers and the quadratic character go through
//! exp/log tables built once per context. The polynomial-multiplication path
//! ([`FieldCtx::mul_by_poly`]) and the Euler-criterion character
//! ([`FieldCtx::quad_char_euler`]) are kept as slow cross-checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on q; the exp/log tables are O(q).
pub const DEFAULT_TABLE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("characteristic {0} is even; only odd prime powers are supported")]
    EvenCharacteristic(u64),
    #[error("modulus {0:?} is not a monic irreducible polynomial of the requested degree")]
    ReducibleModulus(Vec<u32>),
    #[error("field size {size} exceeds the table limit {limit}")]
    FieldTooLarge { size: u128, limit: u64 },
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("division by zero")]
    DivisionByZero,
    #[error("element code {code} is out of range for q = {q}")]
    InvalidElement { code: u64, q: u32 },
    #[error("cannot parse field spec {0:?}: expected \"p\", \"q\" or \"p^k\"")]
    BadFieldSpec(String),
    #[error("cannot parse coefficient list {0:?}")]
    BadCoefficients(String),
}

/// An element of F_q, identified by its canonical code.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps a code without range checking; see [`FieldCtx::elem`].
    #[inline]
    pub const fn new(code: u32) -> Self {
        FieldElement(code)
    }

    #[inline]
    pub const fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary operations accepted by [`FieldCtx::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
    Pow,
}

/// A field named as `p`, `p^k`, or a bare prime power `q`, with an optional
/// modulus override given as `c0,c1,...,ck`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub p: u64,
    pub k: u32,
    pub modulus: Option<Vec<u32>>,
}

impl FieldSpec {
    pub fn with_modulus(mut self, list: &str) -> Result<Self, FieldError> {
        self.modulus = Some(parse_code_list(list)?);
        Ok(self)
    }

    pub fn build(&self) -> Result<FieldCtx, FieldError> {
        FieldCtx::new(self.p, self.k, self.modulus.as_deref())
    }
}

impl FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::BadFieldSpec(s.to_string());
        let s = s.trim();
        if let Some((p, k)) = s.split_once('^') {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let k: u32 = k.trim().parse().map_err(|_| bad())?;
            return Ok(FieldSpec {
                p,
                k,
                modulus: None,
            });
        }
        let q: u64 = s.parse().map_err(|_| bad())?;
        // A bare integer names F_q; a bare prime is the k = 1 case.
        let (p, k) = match prime_power_decompose(q) {
            Some((p, k)) => (p, k),
            None => (q, 1),
        };
        Ok(FieldSpec {
            p,
            k,
            modulus: None,
        })
    }
}

/// Parses a comma-separated list of non-negative integer codes.
pub fn parse_code_list(s: &str) -> Result<Vec<u32>, FieldError> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| FieldError::BadCoefficients(s.to_string()))
}

/// Immutable arithmetic context for F_q.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    squares: Vec<u64>,
    generator: u32,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .field("generator", &self.generator)
            .finish()
    }
}

impl FieldCtx {
    /// Builds F_{p^k} with the default table limit.
    pub fn new(p: u64, k: u32, modulus: Option<&[u32]>) -> Result<Self, FieldError> {
        Self::with_limit(p, k, modulus, DEFAULT_TABLE_LIMIT)
    }

    /// Shorthand for the prime field F_p.
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        Self::new(p, 1, None)
    }

    pub fn with_limit(
        p: u64,
        k: u32,
        modulus: Option<&[u32]>,
        limit: u64,
    ) -> Result<Self, FieldError> {
        if p.is_multiple_of(2) {
            return Err(FieldError::EvenCharacteristic(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let size = (p as u128).checked_pow(k).unwrap_or(u128::MAX);
        if size > limit as u128 || size > u32::MAX as u128 {
            return Err(FieldError::FieldTooLarge { size, limit });
        }
        let p = p as u32;
        let q = size as u32;

        let modulus = match modulus {
            Some(m) => {
                let ok = m.len() == k as usize + 1
                    && m[k as usize] == 1
                    && m.iter().all(|&c| c < p)
                    && is_irreducible_mod_p(m, p);
                if !ok {
                    return Err(FieldError::ReducibleModulus(m.to_vec()));
                }
                m.to_vec()
            }
            None if k == 1 => vec![0, 1],
            None => smallest_irreducible(p, k),
        };

        let mut ctx = FieldCtx {
            p,
            k,
            q,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
            squares: Vec::new(),
            generator: 0,
        };
        ctx.build_tables();
        Ok(ctx)
    }

    fn build_tables(&mut self) {
        let order = self.q - 1;
        let factors = distinct_prime_factors(order as u64);
        let generator = (1..self.q)
            .find(|&g| {
                factors.iter().all(|&l| {
                    self.pow_by_poly(FieldElement(g), order as u64 / l) != FieldElement::ONE
                })
            })
            .expect("F_q^* is cyclic, so a generator exists");

        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![u32::MAX; self.q as usize];
        let mut x = FieldElement::ONE;
        for i in 0..order {
            exp.push(x.0);
            log[x.0 as usize] = i;
            x = self.mul_by_poly(x, FieldElement(generator));
        }
        debug_assert_eq!(x, FieldElement::ONE);

        let mut squares = vec![0u64; (self.q as usize).div_ceil(64)];
        for &code in exp.iter().step_by(2) {
            squares[code as usize / 64] |= 1 << (code % 64);
        }

        self.exp = exp;
        self.log = log;
        self.squares = squares;
        self.generator = generator;
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Monic modulus, constant term first; `[0, 1]` for prime fields.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn generator(&self) -> FieldElement {
        FieldElement(self.generator)
    }

    /// Squares bitmap over element codes; bit x set iff x is a nonzero square.
    pub fn squares_bitmap(&self) -> &[u64] {
        &self.squares
    }

    /// Discrete log with respect to [`Self::generator`]; `None` at zero.
    pub fn log(&self, x: FieldElement) -> Option<u32> {
        if x.is_zero() {
            None
        } else {
            Some(self.log[x.0 as usize])
        }
    }

    /// `generator^i`.
    pub fn exp(&self, i: u64) -> FieldElement {
        FieldElement(self.exp[(i % (self.q as u64 - 1)) as usize])
    }

    /// Checked conversion from a code.
    pub fn elem(&self, code: u64) -> Result<FieldElement, FieldError> {
        if code < self.q as u64 {
            Ok(FieldElement(code as u32))
        } else {
            Err(FieldError::InvalidElement { code, q: self.q })
        }
    }

    /// Embeds an integer through F_p ⊂ F_q.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.q).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (1..self.q).map(FieldElement)
    }

    #[inline]
    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if self.k == 1 {
            let s = x.0 + y.0;
            return FieldElement(if s >= self.p { s - self.p } else { s });
        }
        let (mut a, mut b) = (x.0, y.0);
        let (mut out, mut place) = (0u32, 1u32);
        while a != 0 || b != 0 {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn neg(&self, x: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement(if x.0 == 0 { 0 } else { self.p - x.0 });
        }
        let mut a = x.0;
        let (mut out, mut place) = (0u32, 1u32);
        while a != 0 {
            let d = a % self.p;
            out += ((self.p - d) % self.p) * place;
            place *= self.p;
            a /= self.p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn sub(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        self.add(x, self.neg(y))
    }

    #[inline]
    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        let order = self.q - 1;
        let mut e = self.log[x.0 as usize] + self.log[y.0 as usize];
        if e >= order {
            e -= order;
        }
        FieldElement(self.exp[e as usize])
    }

    pub fn inv(&self, x: FieldElement) -> Result<FieldElement, FieldError> {
        if x.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let order = self.q - 1;
        let l = self.log[x.0 as usize];
        Ok(FieldElement(self.exp[((order - l) % order) as usize]))
    }

    pub fn div(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// `x^e` with the convention `0^0 = 1`.
    pub fn pow(&self, x: FieldElement, e: u64) -> FieldElement {
        if x.is_zero() {
            return if e == 0 {
                FieldElement::ONE
            } else {
                FieldElement::ZERO
            };
        }
        let order = (self.q - 1) as u64;
        let l = self.log[x.0 as usize] as u64;
        FieldElement(self.exp[((l * (e % order)) % order) as usize])
    }

    /// Dispatches a [`FieldOp`]; for `Pow` the exponent is `y.code()`, for
    /// `Inv` the second operand is ignored.
    pub fn apply(
        &self,
        op: FieldOp,
        x: FieldElement,
        y: FieldElement,
    ) -> Result<FieldElement, FieldError> {
        Ok(match op {
            FieldOp::Add => self.add(x, y),
            FieldOp::Sub => self.sub(x, y),
            FieldOp::Mul => self.mul(x, y),
            FieldOp::Inv => self.inv(x)?,
            FieldOp::Pow => self.pow(x, y.0 as u64),
        })
    }

    /// Quadratic character: 0 at zero, +1 on nonzero squares, -1 otherwise.
    #[inline]
    pub fn quad_char(&self, x: FieldElement) -> i32 {
        if x.0 == 0 {
            0
        } else if self.log[x.0 as usize] & 1 == 0 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn is_nonzero_square(&self, x: FieldElement) -> bool {
        (self.squares[x.0 as usize / 64] >> (x.0 % 64)) & 1 == 1
    }

    /// The character via Euler's criterion `x^((q-1)/2)`, evaluated by
    /// polynomial arithmetic. Slow; used to cross-check the table path.
    pub fn quad_char_euler(&self, x: FieldElement) -> i32 {
        let v = self.pow_by_poly(x, (self.q as u64 - 1) / 2);
        if v.is_zero() {
            0
        } else if v == FieldElement::ONE {
            1
        } else {
            debug_assert_eq!(v, self.neg(FieldElement::ONE));
            -1
        }
    }

    /// Smallest code that is not a square, i.e. a representative of the
    /// non-trivial square class.
    pub fn smallest_nonsquare(&self) -> FieldElement {
        self.nonzero_elements()
            .find(|&x| self.quad_char(x) == -1)
            .expect("q odd, so non-squares exist")
    }

    /// Base-p digits of a code, lowest first, length k.
    pub fn digits(&self, x: FieldElement) -> Vec<u32> {
        let mut a = x.0;
        (0..self.k)
            .map(|_| {
                let d = a % self.p;
                a /= self.p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> FieldElement {
        let code = digits
            .iter()
            .rev()
            .fold(0u32, |acc, &d| acc * self.p + d % self.p);
        FieldElement(code)
    }

    /// Multiplication by explicit polynomial product and reduction modulo the
    /// field modulus. Independent of the exp/log tables.
    pub fn mul_by_poly(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        let a = self.digits(x);
        let b = self.digits(y);
        let p = self.p as u64;
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + ai as u64 * bj as u64) % p;
            }
        }
        let k = self.k as usize;
        for top in (k..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            // X^k = -(m_0 + .. + m_{k-1} X^{k-1})
            for (i, &mi) in self.modulus[..k].iter().enumerate() {
                let idx = top - k + i;
                prod[idx] = (prod[idx] + (p - c) * mi as u64) % p;
            }
            prod[top] = 0;
        }
        let low: Vec<u32> = prod[..k].iter().map(|&c| c as u32).collect();
        self.from_digits(&low)
    }

    fn pow_by_poly(&self, x: FieldElement, mut e: u64) -> FieldElement {
        let mut base = x;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_by_poly(acc, base);
            }
            base = self.mul_by_poly(base, base);
            e >>= 1;
        }
        acc
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// `Some((p, k))` when `q = p^k` for a prime p.
pub fn prime_power_decompose(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut rest, mut k) = (q, 0u32);
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Remainder of `f` modulo a monic `g` over F_p; both lowest-degree first.
fn rem_mod_p(f: &[u32], g: &[u32], p: u32) -> Vec<u32> {
    let p = p as u64;
    let mut r: Vec<u64> = f.iter().map(|&c| c as u64).collect();
    let dg = g.len() - 1;
    while r.len() > dg {
        let c = r.pop().unwrap();
        if c != 0 {
            let base = r.len() - dg;
            for (i, &gi) in g[..dg].iter().enumerate() {
                r[base + i] = (r[base + i] + (p - c) * gi as u64) % p;
            }
        }
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r.into_iter().map(|c| c as u32).collect()
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
fn is_irreducible_mod_p(f: &[u32], p: u32) -> bool {
    let n = f.len() - 1;
    if n == 0 {
        return false;
    }
    for d in 1..=n / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut c = low;
            for _ in 0..d {
                g.push((c % p as u64) as u32);
                c /= p as u64;
            }
            g.push(1);
            if rem_mod_p(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Monic irreducible of degree k whose lower coefficients have the smallest
/// base-p code.
fn smallest_irreducible(p: u32, k: u32) -> Vec<u32> {
    let count = (p as u64).pow(k);
    (0..count)
        .map(|low| {
            let mut f = Vec::with_capacity(k as usize + 1);
            let mut c = low;
            for _ in 0..k {
                f.push((c % p as u64) as u32);
                c /= p as u64;
            }
            f.push(1);
            f
        })
        .find(|f| is_irreducible_mod_p(f, p))
        .expect("irreducible polynomials of every degree exist over F_p")
}
