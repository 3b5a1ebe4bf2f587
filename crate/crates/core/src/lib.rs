//! Exact counting of Diophantine m-tuples over finite fields F_q, together
//! with executable forms of the character-sum identities and bounds behind
//! the asymptotic `N_r(m, q) = 2^{-m(m-1)/2} q^m + O(q^{m-1})`.

pub mod cli;
pub mod count;
pub mod decomp;
pub mod epsilon;
pub mod exact;
pub mod field;
pub mod graph;
pub mod poly;
pub mod scan;
