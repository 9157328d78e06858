use super::{Element, FieldContext};

/// Incrementally maintained row echelon basis of a subspace of GF(q)^n.
///
/// Vectors may have different lengths; missing trailing entries are zero.
/// Rows are kept sorted by pivot column and normalized so the pivot is 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EchelonBasis {
    rows: Vec<Vec<Element>>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reduces `v` against the basis in place. The result is zero iff `v`
    /// lies in the span.
    pub fn reduce(&self, ctx: &FieldContext, v: &mut Vec<Element>) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if p >= v.len() {
                break;
            }
            let c = v[p];
            if c != 0 {
                if v.len() < row.len() {
                    v.resize(row.len(), 0);
                }
                ctx.mul_add_slice(&mut v[p..], &row[p..], c);
            }
        }
    }

    /// True when `v` is not in the span.
    pub fn is_independent(&self, ctx: &FieldContext, v: &[Element]) -> bool {
        let mut w = v.to_vec();
        self.reduce(ctx, &mut w);
        w.iter().any(|&x| x != 0)
    }

    /// Adds `v` to the basis if it extends the span. Returns whether it did.
    pub fn insert(&mut self, ctx: &FieldContext, v: &[Element]) -> bool {
        let mut w = v.to_vec();
        self.reduce(ctx, &mut w);
        self.insert_reduced(ctx, w)
    }

    pub(crate) fn insert_reduced(&mut self, ctx: &FieldContext, mut w: Vec<Element>) -> bool {
        let Some(p) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = ctx.inv_unchecked(w[p]);
        ctx.scale_slice(&mut w[p..], inv);
        while w.last() == Some(&0) {
            w.pop();
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, w);
        true
    }

    /// Merges every row of `other` into `self`; returns the number of rows
    /// that extended the span.
    pub fn extend_from(&mut self, ctx: &FieldContext, other: &EchelonBasis) -> usize {
        other
            .rows
            .iter()
            .filter(|r| self.insert(ctx, r))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{rank, FieldMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_tracks_matrix_rank() {
        for f in [FieldContext::gf2(), FieldContext::gf16(), FieldContext::gf256()] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..100 {
                let rows = rng.gen_range(1..8);
                let cols = rng.gen_range(1..8);
                let m = FieldMatrix::random(&f, rows, cols, &mut rng);
                let mut b = EchelonBasis::new();
                let mut grew = 0;
                for r in 0..rows {
                    let before = b.rank();
                    if b.insert(&f, m.row(r)) {
                        grew += 1;
                        assert_eq!(b.rank(), before + 1);
                    } else {
                        assert!(!b.is_independent(&f, m.row(r)));
                    }
                }
                assert_eq!(b.rank(), rank(&f, &m));
                assert_eq!(grew, b.rank());
            }
        }
    }

    #[test]
    fn variable_length_vectors_are_zero_padded() {
        let f = FieldContext::gf2();
        let mut b = EchelonBasis::new();
        assert!(b.insert(&f, &[1]));
        assert!(!b.insert(&f, &[1, 0, 0]));
        assert!(b.insert(&f, &[1, 1]));
        assert!(!b.is_independent(&f, &[0, 1, 0, 0]));
        assert!(b.is_independent(&f, &[0, 0, 0, 1]));
        assert!(!b.insert(&f, &[]));
        assert!(!b.insert(&f, &[0, 0]));
        assert_eq!(b.rank(), 2);
    }
}
