//! Truncated sparse polynomials with integer coefficients, used to raise
//! per-edge weight generating functions to the `j`-th power.

use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;

pub(crate) type Exponents = [u16; 4];

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Exponents, BigInt>,
}

impl Poly {
    pub fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert([0; 4], BigInt::from(1));
        Self { terms }
    }

    pub fn add_term(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// Product, keeping only monomials accepted by `keep`.
    pub fn mul_truncated(&self, other: &Poly, keep: impl Fn(&Exponents) -> bool) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                if keep(&e) {
                    out.add_term(e, ca * cb);
                }
            }
        }
        out
    }
}
