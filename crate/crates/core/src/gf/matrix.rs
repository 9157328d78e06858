use rand::Rng;

use super::{Element, FieldContext};
use crate::error::{Error, Result};

/// Dense row-major matrix over a finite field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Element>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from equal-length rows. `cols` disambiguates the empty case.
    pub fn from_rows<R: AsRef<[Element]>>(rows: &[R], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Every entry drawn uniformly from the field.
    pub fn random<R: Rng + ?Sized>(
        ctx: &FieldContext,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..rows * cols).map(|_| ctx.random_element(rng)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Element {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Element) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Element] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Element] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn into_rows(self) -> Vec<Vec<Element>> {
        if self.cols == 0 {
            return vec![Vec::new(); self.rows];
        }
        self.data.chunks(self.cols).map(<[u8]>::to_vec).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    /// Adds `c` times row `src` into row `dst`.
    fn row_mul_add(&mut self, ctx: &FieldContext, dst: usize, src: usize, c: Element) {
        debug_assert_ne!(dst, src);
        let cols = self.cols;
        let (d, s) = if dst < src {
            let (head, tail) = self.data.split_at_mut(src * cols);
            (&mut head[dst * cols..(dst + 1) * cols], &tail[..cols])
        } else {
            let (head, tail) = self.data.split_at_mut(dst * cols);
            (&mut tail[..cols], &head[src * cols..(src + 1) * cols])
        };
        ctx.mul_add_slice(d, s, c);
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, ctx: &FieldContext, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = FieldMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let c = self.get(r, k);
                if c != 0 {
                    let cols = other.cols;
                    ctx.mul_add_slice(
                        &mut out.data[r * cols..(r + 1) * cols],
                        other.row(k),
                        c,
                    );
                }
            }
        }
        Ok(out)
    }

    /// Reduces to row echelon form in place; returns the pivot columns.
    /// The pivot in each column is the first nonzero entry at or below the
    /// current row.
    fn echelonize(&mut self, ctx: &FieldContext) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = ctx.inv_unchecked(self.get(r, c));
            ctx.scale_slice(self.row_mut(r), inv);
            for i in r + 1..self.rows {
                let f = self.get(i, c);
                if f != 0 {
                    self.row_mul_add(ctx, i, r, f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }
}

/// Number of linearly independent rows.
pub fn rank(ctx: &FieldContext, m: &FieldMatrix) -> usize {
    let mut work = m.clone();
    work.echelonize(ctx).len()
}

/// Outcome of [`solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Unique(FieldMatrix),
    Singular,
}

/// Solves `A X = B` for square `A` by Gauss-Jordan elimination.
pub fn solve(ctx: &FieldContext, a: &FieldMatrix, b: &FieldMatrix) -> Result<Solution> {
    if a.rows != a.cols {
        return Err(Error::Dimension(format!(
            "coefficient matrix is {}x{}, expected square",
            a.rows, a.cols
        )));
    }
    if b.rows != a.rows {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, expected {}",
            b.rows, a.rows
        )));
    }
    let n = a.rows;
    let w = n + b.cols;
    let mut aug = FieldMatrix::zeros(n, w);
    for r in 0..n {
        aug.row_mut(r)[..n].copy_from_slice(a.row(r));
        aug.row_mut(r)[n..].copy_from_slice(b.row(r));
    }
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| aug.get(i, c) != 0) else {
            return Ok(Solution::Singular);
        };
        aug.swap_rows(c, p);
        let inv = ctx.inv_unchecked(aug.get(c, c));
        ctx.scale_slice(aug.row_mut(c), inv);
        for i in 0..n {
            if i != c {
                let f = aug.get(i, c);
                if f != 0 {
                    aug.row_mul_add(ctx, i, c, f);
                }
            }
        }
    }
    let mut x = FieldMatrix::zeros(n, b.cols);
    for r in 0..n {
        x.row_mut(r).copy_from_slice(&aug.row(r)[n..]);
    }
    Ok(Solution::Unique(x))
}

/// Probability that a uniformly random `received x messages` matrix over GF(q)
/// has full column rank: the product of `1 - q^-k` for k from
/// `received - messages + 1` to `received`.
pub fn random_invertibility_probability(q: u32, received: usize, messages: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::Domain(format!("field size {q} is not a field")));
    }
    if received < messages {
        return Err(Error::Domain(format!(
            "{received} received rows cannot have rank {messages}"
        )));
    }
    let q = q as f64;
    Ok((received - messages + 1..=received)
        .map(|k| 1.0 - q.powi(-(k.min(i32::MAX as usize) as i32)))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf2() -> FieldContext {
        FieldContext::gf2()
    }

    // Size of the row span of a binary matrix by enumerating all 2^rows
    // combinations of rows.
    fn binary_span_rank(m: &FieldMatrix) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u32..(1 << m.rows()) {
            let mut v = vec![0u8; m.cols()];
            for r in 0..m.rows() {
                if mask >> r & 1 == 1 {
                    for (x, &y) in v.iter_mut().zip(m.row(r)) {
                        *x ^= y;
                    }
                }
            }
            span.insert(v);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn rank_examples() {
        let f = gf2();
        assert_eq!(rank(&f, &FieldMatrix::zeros(3, 3)), 0);
        for k in 0..6 {
            assert_eq!(rank(&FieldContext::gf256(), &FieldMatrix::identity(k)), k);
        }
        let m = FieldMatrix::from_rows(&[[1u8, 1], [1, 1]], 2).unwrap();
        assert_eq!(binary_span_rank(&m), 1);
        assert_eq!(rank(&f, &m), 1);
    }

    #[test]
    fn rank_matches_span_enumeration() {
        let f = gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let rows = rng.gen_range(1..=4);
            let cols = rng.gen_range(1..=4);
            let m = FieldMatrix::random(&f, rows, cols, &mut rng);
            let r = rank(&f, &m);
            assert_eq!(r, binary_span_rank(&m));
            assert!(r <= rows.min(cols));
        }
    }

    #[test]
    fn solve_examples() {
        let f = gf2();
        let a = FieldMatrix::from_rows(&[[1u8, 1], [0, 1]], 2).unwrap();
        let b = FieldMatrix::from_rows(&[[1u8], [1]], 1).unwrap();
        // exhaustive oracle over the four candidate vectors
        let mut hits = Vec::new();
        for x0 in 0..2u8 {
            for x1 in 0..2u8 {
                let x = FieldMatrix::from_rows(&[[x0], [x1]], 1).unwrap();
                if a.mul(&f, &x).unwrap() == b {
                    hits.push(x);
                }
            }
        }
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0], FieldMatrix::from_rows(&[[0u8], [1]], 1).unwrap());
        assert_eq!(solve(&f, &a, &b).unwrap(), Solution::Unique(hits[0].clone()));

        let g = FieldContext::gf256();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = FieldMatrix::random(&g, 5, 3, &mut rng);
        assert_eq!(
            solve(&g, &FieldMatrix::identity(5), &b).unwrap(),
            Solution::Unique(b.clone())
        );

        let sing = FieldMatrix::from_rows(&[[3u8, 7], [3, 7]], 2).unwrap();
        let rhs = FieldMatrix::zeros(2, 1);
        assert_eq!(solve(&g, &sing, &rhs).unwrap(), Solution::Singular);
        assert!(solve(&g, &FieldMatrix::zeros(2, 3), &rhs).is_err());
        assert!(solve(&g, &FieldMatrix::identity(3), &rhs).is_err());
    }

    #[test]
    fn solve_round_trips_random_systems() {
        let g = FieldContext::gf256();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = FieldMatrix::random(&g, 6, 6, &mut rng);
            let b = FieldMatrix::random(&g, 6, 4, &mut rng);
            match solve(&g, &a, &b).unwrap() {
                Solution::Unique(x) => assert_eq!(a.mul(&g, &x).unwrap(), b),
                Solution::Singular => assert!(rank(&g, &a) < 6),
            }
        }
    }

    // Counts full-column-rank N x K binary matrices by enumeration.
    fn enumerate_full_rank_fraction(n: usize, k: usize) -> f64 {
        let f = gf2();
        let cells = n * k;
        let mut full = 0u64;
        for mask in 0u64..(1 << cells) {
            let rows: Vec<Vec<u8>> = (0..n)
                .map(|r| (0..k).map(|c| (mask >> (r * k + c) & 1) as u8).collect())
                .collect();
            let m = FieldMatrix::from_rows(&rows, k).unwrap();
            if rank(&f, &m) == k {
                full += 1;
            }
        }
        full as f64 / (1u64 << cells) as f64
    }

    #[test]
    fn invertibility_probability_examples() {
        let p22 = enumerate_full_rank_fraction(2, 2);
        assert_eq!(p22, 0.375);
        assert_eq!(random_invertibility_probability(2, 2, 2).unwrap(), p22);
        let p33 = enumerate_full_rank_fraction(3, 3);
        assert_eq!(p33, 21.0 / 64.0);
        assert!((random_invertibility_probability(2, 3, 3).unwrap() - p33).abs() < 1e-15);
        assert_eq!(random_invertibility_probability(16, 5, 0).unwrap(), 1.0);
        assert!(random_invertibility_probability(2, 2, 3).is_err());
    }

    #[test]
    fn invertibility_probability_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (q, k, n) in [(2u32, 3usize, 3usize), (2, 3, 5), (16, 4, 4)] {
            let f = FieldContext::with_order(q).unwrap();
            let p = random_invertibility_probability(q, n, k).unwrap();
            let samples = 100_000;
            let hits = (0..samples)
                .filter(|_| rank(&f, &FieldMatrix::random(&f, n, k, &mut rng)) == k)
                .count();
            let phat = hits as f64 / samples as f64;
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!((phat - p).abs() <= 3.0 * se, "q={q} K={k} N={n}: {phat} vs {p}");
        }
    }
}
