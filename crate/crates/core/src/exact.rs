//! Exact main term and residual bookkeeping.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// `m (m - 1) / 2`, the number of pairs.
pub fn pair_count(m: usize) -> usize {
    m * (m.saturating_sub(1)) / 2
}

/// `q^m / 2^{m(m-1)/2}` as an exact rational.
pub fn main_term(q: u32, m: usize) -> BigRational {
    let num = BigInt::from(q).pow(m as u32);
    let den = BigInt::from(1u8) << pair_count(m);
    BigRational::new(num, den)
}

pub fn residual(count: u128, q: u32, m: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(count)) - main_term(q, m)
}

/// `(|E| / q^{m-1}, |E| / q^{m-1/2})`.
pub fn residual_norms(residual: &BigRational, q: u32, m: usize) -> (f64, f64) {
    let scale = BigInt::from(q).pow(m as u32 - 1);
    let norm1 = (residual.abs() / BigRational::from_integer(scale))
        .to_f64()
        .unwrap_or(f64::INFINITY);
    (norm1, norm1 / (q as f64).sqrt())
}

/// Always `num/den`, also for integers.
pub fn format_ratio(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<BigInt>().ok()?,
            d.trim().parse::<BigInt>().ok()?,
        ),
        None => (s.trim().parse::<BigInt>().ok()?, BigInt::from(1u8)),
    };
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_term_is_reduced_fraction() {
        assert_eq!(format_ratio(&main_term(5, 4)), "625/64");
        assert_eq!(format_ratio(&main_term(4, 2)), "8/1");
        assert_eq!(format_ratio(&residual(4, 5, 2)), "-17/2");
    }

    #[test]
    fn ratio_round_trip() {
        let x = parse_ratio("-7/21").unwrap();
        assert_eq!(format_ratio(&x), "-1/3");
        assert_eq!(
            parse_ratio("12"),
            Some(BigRational::from_integer(12.into()))
        );
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("a/2"), None);
    }

    #[test]
    fn norms() {
        // |4 - 625/64| / 125 = 369/8000
        let (n1, nh) = residual_norms(&residual(4, 5, 4), 5, 4);
        assert!((n1 - 369.0 / 8000.0).abs() < 1e-15);
        assert!((nh - n1 / 5f64.sqrt()).abs() < 1e-15);
    }
}
