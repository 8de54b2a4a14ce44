//! The residue field 𝔽_{p^d} = 𝔽_p[x]/(f) in the power basis of the modulus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of the residue field, coordinates `c_0 .. c_{d-1}` in `[0, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    coords: Vec<u64>,
}

impl FieldElement {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

/// Arithmetic of 𝔽_p[x]/(f) for a monic irreducible `f` of degree `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueField {
    p: u64,
    /// Low coefficients `c_0 .. c_{d-1}` of the monic modulus.
    modulus: Vec<u64>,
}

impl ResidueField {
    pub(crate) fn new(p: u64, modulus: Vec<u64>) -> Self {
        ResidueField { p, modulus }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.modulus.len()
    }

    /// Number of elements, `p^d`. Context construction guarantees this fits.
    pub fn size(&self) -> u64 {
        self.p.pow(self.degree() as u32)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            coords: vec![0; self.degree()],
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    pub fn from_int(&self, v: i64) -> FieldElement {
        let mut e = self.zero();
        e.coords[0] = v.rem_euclid(self.p as i64) as u64;
        e
    }

    pub fn from_coords(&self, coords: &[u64]) -> Result<FieldElement> {
        if coords.len() != self.degree() {
            return Err(Error::MalformedScalar(format!(
                "field element needs {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|&&c| c >= self.p) {
            return Err(Error::MalformedScalar(format!(
                "coordinate {c} not reduced mod {}",
                self.p
            )));
        }
        Ok(FieldElement {
            coords: coords.to_vec(),
        })
    }

    /// Element whose coordinates are the base-p digits of `index`, `c_0` least significant.
    pub fn from_index(&self, mut index: u64) -> Result<FieldElement> {
        if index >= self.size() {
            return Err(Error::OutOfRange(format!("field index {index} ≥ {}", self.size())));
        }
        let mut e = self.zero();
        for c in e.coords.iter_mut() {
            *c = index % self.p;
            index /= self.p;
        }
        Ok(e)
    }

    pub fn index(&self, x: &FieldElement) -> u64 {
        x.coords.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    /// All field elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size()).map(move |i| self.from_index(i).expect("index in range"))
    }

    pub fn add(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let coords = x.coords.iter().zip(&y.coords).map(|(a, b)| (a + b) % self.p).collect();
        FieldElement { coords }
    }

    pub fn neg(&self, x: &FieldElement) -> FieldElement {
        let coords = x.coords.iter().map(|&a| (self.p - a) % self.p).collect();
        FieldElement { coords }
    }

    pub fn sub(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        self.add(x, &self.neg(y))
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let d = self.degree();
        let p = self.p;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &a) in x.coords.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coords.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b % p) % p;
            }
        }
        for k in (d..2 * d - 1).rev() {
            let t = prod[k];
            if t == 0 {
                continue;
            }
            prod[k] = 0;
            for (i, &c) in self.modulus.iter().enumerate() {
                // x^d = -(c_0 + ... + c_{d-1} x^{d-1})
                prod[k - d + i] = (prod[k - d + i] + (p - c) % p * t % p) % p;
            }
        }
        prod.truncate(d);
        FieldElement { coords: prod }
    }

    pub fn pow(&self, x: &FieldElement, mut e: u64) -> FieldElement {
        let mut base = x.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, x: &FieldElement) -> Option<FieldElement> {
        if x.is_zero() {
            None
        } else {
            Some(self.pow(x, self.size() - 2))
        }
    }

    /// The absolute Frobenius `x ↦ x^p`.
    pub fn frobenius(&self, x: &FieldElement) -> FieldElement {
        self.pow(x, self.p)
    }

    /// Inverse of the absolute Frobenius, `x ↦ x^{p^{d-1}}`.
    pub fn frobenius_inv(&self, x: &FieldElement) -> FieldElement {
        self.pow(x, self.size() / self.p)
    }
}

/// Remainder of `a` modulo the monic polynomial `b` over 𝔽_p (coefficients low to high).
fn poly_rem_monic(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = r.pop().expect("nonempty");
        if lead == 0 {
            continue;
        }
        let off = r.len() - db;
        for (i, &c) in b[..db].iter().enumerate() {
            r[off + i] = (r[off + i] + (p - c) % p * lead % p) % p;
        }
    }
    r
}

/// Monic polynomial with low coefficients given by the base-p digits of `index`.
fn monic_from_index(mut index: u64, degree: usize, p: u64) -> Vec<u64> {
    let mut coeffs = Vec::with_capacity(degree + 1);
    for _ in 0..degree {
        coeffs.push(index % p);
        index /= p;
    }
    coeffs.push(1);
    coeffs
}

/// Irreducibility over 𝔽_p by trial division with every monic polynomial of degree ≤ d/2.
pub(crate) fn is_irreducible(monic: &[u64], p: u64) -> bool {
    let d = monic.len() - 1;
    for k in 1..=d / 2 {
        for idx in 0..p.pow(k as u32) {
            let g = monic_from_index(idx, k, p);
            if poly_rem_monic(monic, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible polynomial of degree `d` over 𝔽_p,
/// ordering coefficient vectors by `(c_{d-1}, …, c_0)`. Returns `c_0 .. c_{d-1}`.
pub(crate) fn smallest_irreducible(p: u64, d: usize) -> Vec<u64> {
    (0..p.pow(d as u32))
        .map(|idx| monic_from_index(idx, d, p))
        .find(|f| is_irreducible(f, p))
        .map(|mut f| {
            f.pop();
            f
        })
        .expect("irreducible polynomials exist in every degree")
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}
