//! Auxiliary encoding vectors: each tracked packet is expressed over the
//! packets the source put on the network, so innovation can be judged
//! against a basis that grows with the run.
//!
//! Over GF(2) the vectors are bit-packed, which keeps the span tests of long
//! runs cheap; other fields store one symbol per byte.

use std::rc::Rc;

use crate::gf::{rank, EchelonBasis, Element, FieldContext, FieldMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Beta {
    /// The `n`-th source-emitted packet itself.
    Unit(usize),
    Bits(Vec<u64>),
    Bytes(Vec<Element>),
}

impl Beta {
    fn bit_words(&self) -> usize {
        match self {
            Beta::Unit(n) => n / 64 + 1,
            Beta::Bits(w) => w.len(),
            Beta::Bytes(_) => unreachable!("byte vector in a GF(2) space"),
        }
    }

    fn byte_len(&self) -> usize {
        match self {
            Beta::Unit(n) => n + 1,
            Beta::Bytes(v) => v.len(),
            Beta::Bits(_) => unreachable!("bit vector in a byte space"),
        }
    }

    fn to_bits(&self) -> Vec<u64> {
        match self {
            Beta::Unit(n) => {
                let mut w = vec![0u64; n / 64 + 1];
                w[n / 64] = 1 << (n % 64);
                w
            }
            Beta::Bits(w) => w.clone(),
            Beta::Bytes(_) => unreachable!("byte vector in a GF(2) space"),
        }
    }

    pub(crate) fn to_bytes(&self) -> Vec<Element> {
        match self {
            Beta::Unit(n) => {
                let mut v = vec![0; n + 1];
                v[*n] = 1;
                v
            }
            Beta::Bytes(v) => v.clone(),
            Beta::Bits(w) => (0..w.len() * 64)
                .map(|i| (w[i / 64] >> (i % 64) & 1) as Element)
                .collect(),
        }
    }
}

/// `Σ a_i β_i` over the field of `ctx`.
pub(crate) fn combine(ctx: &FieldContext, betas: &[Rc<Beta>], coefficients: &[Element]) -> Beta {
    debug_assert_eq!(betas.len(), coefficients.len());
    if ctx.order() == 2 {
        let words = betas.iter().map(|b| b.bit_words()).max().unwrap_or(0);
        let mut out = vec![0u64; words];
        for (b, &a) in betas.iter().zip(coefficients) {
            if a == 0 {
                continue;
            }
            match &**b {
                Beta::Unit(n) => out[n / 64] ^= 1 << (n % 64),
                Beta::Bits(w) => out.iter_mut().zip(w).for_each(|(o, x)| *o ^= x),
                Beta::Bytes(_) => unreachable!("byte vector in a GF(2) space"),
            }
        }
        Beta::Bits(out)
    } else {
        let len = betas.iter().map(|b| b.byte_len()).max().unwrap_or(0);
        let mut out = vec![0; len];
        for (b, &a) in betas.iter().zip(coefficients) {
            if a == 0 {
                continue;
            }
            match &**b {
                // addition in characteristic two is xor
                Beta::Unit(n) => out[*n] ^= a,
                Beta::Bytes(v) => ctx.mul_add_slice(&mut out[..v.len()], v, a),
                Beta::Bits(_) => unreachable!("bit vector in a byte space"),
            }
        }
        Beta::Bytes(out)
    }
}

/// Echelon basis over GF(2), one bit per coordinate.
#[derive(Clone, Debug, Default)]
pub(crate) struct BitBasis {
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

fn lowest_bit(w: &[u64]) -> Option<usize> {
    w.iter()
        .position(|&x| x != 0)
        .map(|i| i * 64 + w[i].trailing_zeros() as usize)
}

impl BitBasis {
    fn reduce(&self, v: &mut Vec<u64>) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if p / 64 >= v.len() {
                break;
            }
            if v[p / 64] >> (p % 64) & 1 == 1 {
                if v.len() < row.len() {
                    v.resize(row.len(), 0);
                }
                v.iter_mut().zip(row).skip(p / 64).for_each(|(a, b)| *a ^= b);
            }
        }
    }

    fn insert_reduced(&mut self, mut w: Vec<u64>) -> bool {
        let Some(p) = lowest_bit(&w) else {
            return false;
        };
        while w.last() == Some(&0) {
            w.pop();
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, w);
        true
    }
}

/// A vector reduced against a [`Span`], ready to be inserted.
pub(crate) enum Reduced {
    Bits(Vec<u64>),
    Bytes(Vec<Element>),
}

impl Reduced {
    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Reduced::Bits(w) => w.iter().all(|&x| x == 0),
            Reduced::Bytes(v) => v.iter().all(|&x| x == 0),
        }
    }
}

/// Span of a set of auxiliary vectors.
#[derive(Clone, Debug)]
pub(crate) enum Span {
    Bits(BitBasis),
    Bytes(EchelonBasis),
}

impl Span {
    pub(crate) fn new(ctx: &FieldContext) -> Self {
        if ctx.order() == 2 {
            Span::Bits(BitBasis::default())
        } else {
            Span::Bytes(EchelonBasis::new())
        }
    }

    pub(crate) fn reduce(&self, ctx: &FieldContext, b: &Beta) -> Reduced {
        match self {
            Span::Bits(basis) => {
                let mut w = b.to_bits();
                basis.reduce(&mut w);
                Reduced::Bits(w)
            }
            Span::Bytes(basis) => {
                let mut v = b.to_bytes();
                basis.reduce(ctx, &mut v);
                Reduced::Bytes(v)
            }
        }
    }

    /// Inserts a vector previously reduced against this span.
    pub(crate) fn insert_reduced(&mut self, ctx: &FieldContext, r: Reduced) -> bool {
        match (self, r) {
            (Span::Bits(basis), Reduced::Bits(w)) => basis.insert_reduced(w),
            (Span::Bytes(basis), Reduced::Bytes(v)) => basis.insert_reduced(ctx, v),
            _ => unreachable!("reduced vector from a different field"),
        }
    }

    pub(crate) fn insert(&mut self, ctx: &FieldContext, b: &Beta) -> bool {
        let r = self.reduce(ctx, b);
        self.insert_reduced(ctx, r)
    }
}

/// Rank of a set of auxiliary vectors by plain Gaussian elimination, kept
/// separate from the incremental bases so it can audit them.
pub(crate) fn rank_of(ctx: &FieldContext, betas: &[&Beta]) -> usize {
    if betas.is_empty() {
        return 0;
    }
    if ctx.order() == 2 {
        let mut rows: Vec<Vec<u64>> = betas.iter().map(|b| b.to_bits()).collect();
        let words = rows.iter().map(Vec::len).max().unwrap_or(0);
        rows.iter_mut().for_each(|r| r.resize(words, 0));
        let mut r = 0;
        for col in 0..words * 64 {
            let (wi, bit) = (col / 64, col % 64);
            let Some(p) = (r..rows.len()).find(|&i| rows[i][wi] >> bit & 1 == 1) else {
                continue;
            };
            rows.swap(r, p);
            let pivot = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row[wi] >> bit & 1 == 1 {
                    row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        r
    } else {
        let rows: Vec<Vec<Element>> = betas.iter().map(|b| b.to_bytes()).collect();
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let padded: Vec<Vec<Element>> = rows
            .into_iter()
            .map(|mut r| {
                r.resize(cols, 0);
                r
            })
            .collect();
        let m = FieldMatrix::from_rows(&padded, cols).expect("rows padded to a common length");
        rank(ctx, &m)
    }
}
