//! Arithmetic over GF(2^m) for m in {1, 4, 8}, plus the dense linear algebra
//! (rank, solve, incremental echelon bases) used by encoding and decoding.
//!
//! Multiplication goes through log/antilog tables built once per
//! [`FieldContext`]. Elements are stored as `u8`.

mod basis;
mod matrix;

pub use basis::EchelonBasis;
pub use matrix::{random_invertibility_probability, rank, solve, FieldMatrix, Solution};

use rand::Rng;

use crate::error::{Error, Result};

/// A field element. Only the low `m` bits are meaningful.
pub type Element = u8;

/// GF(2): x + 1.
pub const POLY_GF2: u32 = 0b11;
/// GF(16): x^4 + x + 1.
pub const POLY_GF16: u32 = 0x13;
/// GF(256): x^8 + x^4 + x^3 + x^2 + 1.
pub const POLY_GF256: u32 = 0x11D;

/// Immutable arithmetic context for GF(2^m).
#[derive(Clone, PartialEq, Eq)]
pub struct FieldContext {
    bits: u32,
    poly: u32,
    // exp has 2(q-1) entries so log a + log b never needs a modulo.
    exp: Vec<u8>,
    log: Vec<u8>,
}

impl std::fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldContext")
            .field("order", &self.order())
            .field("poly", &format_args!("{:#x}", self.poly))
            .finish()
    }
}

impl FieldContext {
    /// Builds GF(2^bits). Only 1, 4 and 8 bits are supported.
    pub fn new(bits: u32) -> Result<Self> {
        let poly = match bits {
            1 => POLY_GF2,
            4 => POLY_GF16,
            8 => POLY_GF256,
            other => {
                return Err(Error::UnsupportedField(format!(
                    "GF(2^{other}); supported exponents are 1, 4, 8"
                )))
            }
        };
        let q = 1usize << bits;
        let mut exp = vec![0u8; 2 * (q - 1)];
        let mut log = vec![0u8; q];
        let mut x = 1u32;
        for i in 0..q - 1 {
            exp[i] = x as u8;
            exp[i + q - 1] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & q as u32 != 0 {
                x ^= poly;
            }
        }
        Ok(Self {
            bits,
            poly,
            exp,
            log,
        })
    }

    /// Builds the field with `order` elements (2, 16 or 256).
    pub fn with_order(order: u32) -> Result<Self> {
        match order {
            2 => Self::new(1),
            16 => Self::new(4),
            256 => Self::new(8),
            other => Err(Error::UnsupportedField(format!(
                "GF({other}); supported orders are 2, 16, 256"
            ))),
        }
    }

    pub fn gf2() -> Self {
        Self::new(1).expect("GF(2) is supported")
    }

    pub fn gf16() -> Self {
        Self::new(4).expect("GF(16) is supported")
    }

    pub fn gf256() -> Self {
        Self::new(8).expect("GF(256) is supported")
    }

    /// The exponent m.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// The field size q = 2^m.
    pub fn order(&self) -> u32 {
        1 << self.bits
    }

    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    fn check(&self, a: Element) -> Result<()> {
        if (a as u32) < self.order() {
            Ok(())
        } else {
            Err(Error::OutOfField {
                value: a as u32,
                order: self.order(),
            })
        }
    }

    pub fn add(&self, a: Element, b: Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(a ^ b)
    }

    pub fn mul(&self, a: Element, b: Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self, a: Element) -> Result<Element> {
        self.check(a)?;
        if a == 0 {
            return Err(Error::Domain("zero has no multiplicative inverse".into()));
        }
        Ok(self.inv_unchecked(a))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, a: Element, b: Element) -> Element {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub(crate) fn inv_unchecked(&self, a: Element) -> Element {
        debug_assert!(a != 0);
        let q1 = self.order() as usize - 1;
        self.exp[(q1 - self.log[a as usize] as usize) % q1]
    }

    /// `dst += c * src` elementwise. `dst` must be at least as long as `src`.
    #[inline]
    pub fn mul_add_slice(&self, dst: &mut [Element], src: &[Element], c: Element) {
        debug_assert!(dst.len() >= src.len());
        match c {
            0 => {}
            1 => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
            _ => {
                let lc = self.log[c as usize] as usize;
                for (d, &s) in dst.iter_mut().zip(src) {
                    if s != 0 {
                        *d ^= self.exp[lc + self.log[s as usize] as usize];
                    }
                }
            }
        }
    }

    /// `v *= c` elementwise.
    pub fn scale_slice(&self, v: &mut [Element], c: Element) {
        match c {
            0 => v.iter_mut().for_each(|x| *x = 0),
            1 => {}
            _ => {
                let lc = self.log[c as usize] as usize;
                for x in v.iter_mut() {
                    if *x != 0 {
                        *x = self.exp[lc + self.log[*x as usize] as usize];
                    }
                }
            }
        }
    }

    /// A uniformly distributed element, zero included.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        if self.bits == 8 {
            rng.gen::<u8>()
        } else {
            rng.gen_range(0..self.order()) as u8
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Carry-less multiply followed by reduction, independent of the tables.
    fn clmul_reduce(a: u32, b: u32, bits: u32, poly: u32) -> u32 {
        let mut acc = 0u32;
        for i in 0..bits {
            if b >> i & 1 == 1 {
                acc ^= a << i;
            }
        }
        for i in (bits..2 * bits).rev() {
            if acc >> i & 1 == 1 {
                acc ^= poly << (i - bits);
            }
        }
        acc
    }

    fn fields() -> Vec<FieldContext> {
        vec![FieldContext::gf2(), FieldContext::gf16(), FieldContext::gf256()]
    }

    #[test]
    fn addition_examples() {
        let gf2 = FieldContext::gf2();
        assert_eq!(gf2.add(1, 1).unwrap(), 0);
        let gf16 = FieldContext::gf16();
        assert_eq!(gf16.add(0x9, 0x5).unwrap(), 0x9 ^ 0x5);
        assert_eq!(gf16.add(0x9, 0x5).unwrap(), 0xC);
        let gf256 = FieldContext::gf256();
        for a in 0..=255u8 {
            assert_eq!(gf256.add(a, 0).unwrap(), a);
        }
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(FieldContext::gf2().mul(1, 1).unwrap(), 1);
        let gf256 = FieldContext::gf256();
        assert_eq!(clmul_reduce(2, 3, 8, POLY_GF256), 6);
        assert_eq!(gf256.mul(0x02, 0x03).unwrap(), 0x06);
        for f in fields() {
            for a in 0..f.order() as u8 {
                assert_eq!(f.mul(a, 0).unwrap(), 0);
            }
        }
    }

    #[test]
    fn tables_match_carryless_oracle() {
        for f in fields() {
            let q = f.order();
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(
                        f.mul(a as u8, b as u8).unwrap() as u32,
                        clmul_reduce(a, b, f.bits(), f.polynomial()),
                        "GF({q}) {a}*{b}"
                    );
                }
            }
        }
    }

    #[test]
    fn inverses() {
        for f in fields() {
            for a in 1..f.order() {
                let a = a as u8;
                assert_eq!(f.mul(a, f.inv(a).unwrap()).unwrap(), 1);
            }
            assert!(f.inv(0).is_err());
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let gf16 = FieldContext::gf16();
        assert!(matches!(
            gf16.add(16, 1),
            Err(Error::OutOfField { value: 16, order: 16 })
        ));
        assert!(gf16.mul(1, 200).is_err());
        assert!(FieldContext::gf2().add(2, 0).is_err());
        assert!(FieldContext::new(3).is_err());
        assert!(FieldContext::with_order(8).is_err());
    }

    #[test]
    fn slice_helpers_agree_with_scalar_ops() {
        let f = FieldContext::gf256();
        let src: Vec<u8> = (0..=255).collect();
        for c in [0u8, 1, 2, 0x53, 0xff] {
            let mut dst: Vec<u8> = (0..=255).rev().collect();
            let expected: Vec<u8> = dst
                .iter()
                .zip(&src)
                .map(|(&d, &s)| d ^ f.mul(c, s).unwrap())
                .collect();
            f.mul_add_slice(&mut dst, &src, c);
            assert_eq!(dst, expected);
            let mut v = src.clone();
            f.scale_slice(&mut v, c);
            let expected: Vec<u8> = src.iter().map(|&s| f.mul(c, s).unwrap()).collect();
            assert_eq!(v, expected);
        }
    }

    proptest! {
        #[test]
        fn field_axioms(bits in prop::sample::select(vec![1u32, 4, 8]), a: u8, b: u8, c: u8) {
            let f = FieldContext::new(bits).unwrap();
            let m = (f.order() - 1) as u8;
            let (a, b, c) = (a & m, b & m, c & m);
            prop_assert_eq!(f.add(a, a).unwrap(), 0);
            prop_assert_eq!(f.add(a, b).unwrap(), f.add(b, a).unwrap());
            prop_assert_eq!(f.mul(a, b).unwrap(), f.mul(b, a).unwrap());
            prop_assert_eq!(
                f.add(f.add(a, b).unwrap(), c).unwrap(),
                f.add(a, f.add(b, c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                f.mul(f.mul(a, b).unwrap(), c).unwrap(),
                f.mul(a, f.mul(b, c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                f.mul(a, f.add(b, c).unwrap()).unwrap(),
                f.add(f.mul(a, b).unwrap(), f.mul(a, c).unwrap()).unwrap()
            );
            prop_assert_eq!(f.mul(a, 1).unwrap(), a);
        }
    }
}
