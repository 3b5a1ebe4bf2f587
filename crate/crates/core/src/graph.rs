//! Pair-compatibility graph: vertex set is the entry domain, `u ~ v` iff
//! `u v + r` passes the square rule. Loops are kept, since repeated entries
//! need `u^2 + r` to pass as well.

use crate::count::{CountSpec, EntryDomain};
use crate::field::{FieldCtx, FieldElement};

#[derive(Debug, Clone)]
pub struct PairGraph {
    offset: u32,
    n: usize,
    words: usize,
    rows: Vec<u64>,
    r: FieldElement,
}

/// `accept[x]` iff `x + r` passes the square rule, indexed by the code of x.
pub(crate) fn product_acceptance(ctx: &FieldCtx, spec: &CountSpec) -> Vec<bool> {
    ctx.elements()
        .map(|x| {
            let v = ctx.add(x, spec.r);
            ctx.is_nonzero_square(v) || (spec.square_rule.accepts_zero() && v.is_zero())
        })
        .collect()
}

impl PairGraph {
    pub fn build(ctx: &FieldCtx, spec: &CountSpec) -> Self {
        let accept = product_acceptance(ctx, spec);
        let offset = match spec.domain {
            EntryDomain::Nonzero => 1,
            EntryDomain::All => 0,
        };
        let n = (ctx.q() - offset) as usize;
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for i in 0..n {
            let u = FieldElement::new(i as u32 + offset);
            for j in i..n {
                let v = FieldElement::new(j as u32 + offset);
                if accept[ctx.mul(u, v).code() as usize] {
                    rows[i * words + j / 64] |= 1 << (j % 64);
                    rows[j * words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        PairGraph {
            offset,
            n,
            words,
            rows,
            r: spec.r,
        }
    }

    pub fn shift(&self) -> FieldElement {
        self.r
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn vertex(&self, index: usize) -> FieldElement {
        FieldElement::new(index as u32 + self.offset)
    }

    pub fn index_of(&self, x: FieldElement) -> Option<usize> {
        x.code()
            .checked_sub(self.offset)
            .map(|i| i as usize)
            .filter(|&i| i < self.n)
    }

    #[inline]
    pub fn row(&self, index: usize) -> &[u64] {
        &self.rows[index * self.words..(index + 1) * self.words]
    }

    #[inline]
    pub fn has_edge_idx(&self, i: usize, j: usize) -> bool {
        (self.row(i)[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn has_edge(&self, u: FieldElement, v: FieldElement) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self.has_edge_idx(i, j),
            _ => false,
        }
    }

    /// Neighbors of `u` in code order, including `u` itself when it has a loop.
    pub fn neighbors(&self, u: FieldElement) -> Vec<FieldElement> {
        let Some(i) = self.index_of(u) else {
            return Vec::new();
        };
        (0..self.n)
            .filter(|&j| self.has_edge_idx(i, j))
            .map(|j| self.vertex(j))
            .collect()
    }

    /// Non-loop edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(FieldElement, FieldElement)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge_idx(i, j) {
                    out.push((self.vertex(i), self.vertex(j)));
                }
            }
        }
        out
    }

    pub fn loops(&self) -> Vec<FieldElement> {
        (0..self.n)
            .filter(|&i| self.has_edge_idx(i, i))
            .map(|i| self.vertex(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::SquareRule;

    fn e(c: u32) -> FieldElement {
        FieldElement::new(c)
    }

    #[test]
    fn f5_shift_one_qr_only() {
        let ctx = FieldCtx::prime(5).unwrap();
        let g = PairGraph::build(&ctx, &CountSpec::new(2, e(1)));
        assert_eq!(g.neighbors(e(1)), vec![e(3)]);
        assert_eq!(g.edges(), vec![(e(1), e(3)), (e(2), e(4))]);
        assert!(g.loops().is_empty());
    }

    #[test]
    fn f5_shift_one_qr_or_zero() {
        let ctx = FieldCtx::prime(5).unwrap();
        let spec = CountSpec::new(2, e(1)).with_square_rule(SquareRule::QrOrZero);
        let g = PairGraph::build(&ctx, &spec);
        assert_eq!(g.edges(), vec![(e(1), e(3)), (e(1), e(4)), (e(2), e(4))]);
        assert_eq!(g.loops(), vec![e(2), e(3)]);
    }

    #[test]
    fn f3_shift_one_is_empty() {
        let ctx = FieldCtx::prime(3).unwrap();
        let g = PairGraph::build(&ctx, &CountSpec::new(2, e(1)));
        assert!(g.edges().is_empty() && g.loops().is_empty());
    }

    #[test]
    fn adjacency_is_symmetric() {
        for (p, k) in [(7, 1), (3, 2), (5, 2), (3, 3)] {
            let ctx = FieldCtx::new(p, k, None).unwrap();
            for r in ctx.nonzero_elements() {
                for spec in [
                    CountSpec::new(3, r),
                    CountSpec::new(3, r)
                        .with_domain(EntryDomain::All)
                        .with_square_rule(SquareRule::QrOrZero),
                ] {
                    let g = PairGraph::build(&ctx, &spec);
                    for i in 0..g.vertex_count() {
                        for j in 0..g.vertex_count() {
                            assert_eq!(g.has_edge_idx(i, j), g.has_edge_idx(j, i));
                        }
                    }
                }
            }
        }
    }
}
