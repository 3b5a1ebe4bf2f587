//! Exponent vectors `eps in {0,1}^{m(m-1)/2}` indexed by pairs `(i, j)`,
//! `1 <= i < j <= m`.
//!
//! Pair order is lexicographic: `(1,2), (1,3), .., (1,m), (2,3), ..`; pair
//! number t is bit t of the packed value. The hex form is that value in
//! lowercase hexadecimal, so `(1,2)` alone is `1` and all pairs for m = 4
//! is `3f`.

use std::fmt;

use thiserror::Error;

/// Largest supported tuple length (`m(m-1)/2 <= 128`).
pub const MAX_M: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpsilonError {
    #[error("tuple length m = {0} is outside 2..={MAX_M}")]
    BadLength(usize),
    #[error("cannot parse {0:?} as a hex exponent vector")]
    BadHex(String),
    #[error("hex value {value} has bits beyond the {pairs} pairs of m = {m}")]
    TooManyBits {
        value: String,
        m: usize,
        pairs: usize,
    },
    #[error("pair ({0}, {1}) is not 1 <= i < j <= m")]
    BadPair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpsilonMatrix {
    m: usize,
    bits: u128,
}

impl EpsilonMatrix {
    pub fn zero(m: usize) -> Result<Self, EpsilonError> {
        if !(2..=MAX_M).contains(&m) {
            return Err(EpsilonError::BadLength(m));
        }
        Ok(EpsilonMatrix { m, bits: 0 })
    }

    pub fn all_ones(m: usize) -> Result<Self, EpsilonError> {
        let z = Self::zero(m)?;
        Ok(EpsilonMatrix {
            bits: z.full_mask(),
            ..z
        })
    }

    pub fn from_bits(m: usize, bits: u128) -> Result<Self, EpsilonError> {
        let z = Self::zero(m)?;
        if bits & !z.full_mask() != 0 {
            return Err(EpsilonError::TooManyBits {
                value: format!("{bits:x}"),
                m,
                pairs: z.pair_count(),
            });
        }
        Ok(EpsilonMatrix { bits, ..z })
    }

    pub fn from_pairs(m: usize, pairs: &[(usize, usize)]) -> Result<Self, EpsilonError> {
        let mut e = Self::zero(m)?;
        for &(i, j) in pairs {
            e.set(i, j, true)?;
        }
        Ok(e)
    }

    pub fn from_hex(m: usize, s: &str) -> Result<Self, EpsilonError> {
        let t = s.trim();
        let t = t.strip_prefix("0x").unwrap_or(t);
        let bits = u128::from_str_radix(t, 16).map_err(|_| EpsilonError::BadHex(s.to_string()))?;
        Self::from_bits(m, bits)
    }

    pub fn to_hex(&self) -> String {
        format!("{:x}", self.bits)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn pair_count(&self) -> usize {
        self.m * (self.m - 1) / 2
    }

    fn full_mask(&self) -> u128 {
        let n = self.pair_count();
        if n == 128 {
            u128::MAX
        } else {
            (1u128 << n) - 1
        }
    }

    /// Bit position of the 1-based pair `(i, j)`, `i < j`.
    pub fn pair_index(&self, i: usize, j: usize) -> Result<usize, EpsilonError> {
        if !(1 <= i && i < j && j <= self.m) {
            return Err(EpsilonError::BadPair(i, j));
        }
        // pairs in rows 1..i-1 come first
        let before: usize = (1..i).map(|a| self.m - a).sum();
        Ok(before + (j - i - 1))
    }

    /// `eps_{i,j}`; order of i and j does not matter. Panics on a bad pair.
    pub fn get(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let t = self.pair_index(i, j).expect("valid pair");
        (self.bits >> t) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) -> Result<(), EpsilonError> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let t = self.pair_index(i, j)?;
        if on {
            self.bits |= 1 << t;
        } else {
            self.bits &= !(1 << t);
        }
        Ok(())
    }

    /// Active pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.m {
            for j in i + 1..=self.m {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_nonzero(&self) -> bool {
        self.bits != 0
    }

    /// Number of active pairs `(1, j)`.
    pub fn row1_weight(&self) -> usize {
        (self.bits & ((1u128 << (self.m - 1)) - 1)).count_ones() as usize
    }

    /// Number of active pairs `(i, j)` with `2 <= i`.
    pub fn lower_weight(&self) -> usize {
        (self.bits >> (self.m - 1)).count_ones() as usize
    }

    pub fn lower_is_zero(&self) -> bool {
        self.lower_weight() == 0
    }

    /// Renumbers variables: new variable k is old variable `perm[k-1]`
    /// (1-based values), so `new_{k,l} = old_{perm[k], perm[l]}`.
    pub fn relabel(&self, perm: &[usize]) -> EpsilonMatrix {
        assert_eq!(perm.len(), self.m, "permutation length");
        let mut out = EpsilonMatrix { m: self.m, bits: 0 };
        for k in 1..=self.m {
            for l in k + 1..=self.m {
                if self.get(perm[k - 1], perm[l - 1]) {
                    out.set(k, l, true).expect("valid pair");
                }
            }
        }
        out
    }

    /// Every exponent vector for this m, including zero.
    pub fn enumerate(m: usize) -> Result<impl Iterator<Item = EpsilonMatrix>, EpsilonError> {
        let z = Self::zero(m)?;
        let n = z.pair_count();
        if n >= 64 {
            return Err(EpsilonError::BadLength(m));
        }
        Ok((0..(1u128 << n)).map(move |bits| EpsilonMatrix { m, bits }))
    }
}

impl fmt::Display for EpsilonMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .pairs()
            .iter()
            .map(|(i, j)| format!("({i},{j})"))
            .collect();
        write!(
            f,
            "m={} eps={} [{}]",
            self.m,
            self.to_hex(),
            pairs.join(" ")
        )
    }
}
