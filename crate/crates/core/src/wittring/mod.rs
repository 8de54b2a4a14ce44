//! Truncated Witt vectors W_N(𝔽_{p^d}), modelled as the unramified extension
//! ℤ_p[x]/(f) reduced mod p^N, with its Frobenius lift and Teichmüller lifts.
//!
//! Scalars are plain coordinate vectors; every operation goes through the
//! [`RingContext`] that owns the modulus and the precomputed Frobenius.

mod field;

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use field::{FieldElement, ResidueField};

use crate::error::{Error, Result};

/// Largest working modulus accepted, in bits.
pub const MAX_MODULUS_BITS: u64 = 16_384;
/// Largest prime accepted; keeps residue-field products inside `u64`.
pub const MAX_PRIME: u64 = (1 << 31) - 1;
/// Bound on `p^{d/2}`, the trial-division work for the modulus search.
const MAX_SEARCH: u64 = 50_000_000;

/// Element of W_N(𝔽_{p^d}): coordinates `c_0 .. c_{d-1}` in `[0, p^N)` in the
/// power basis of the modulus polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    coords: Vec<BigUint>,
}

impl PadicScalar {
    pub fn coords(&self) -> &[BigUint] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.len() == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            let parts: Vec<String> = self.coords.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", parts.join(","))
        }
    }
}

/// Serialized scalar: `{"coords": ["c0", …]}` with decimal-string coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub coords: Vec<String>,
}

/// Serialized context. `modulus` lists all `d+1` coefficients of the monic
/// modulus polynomial, constant term first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextJson {
    pub p: u64,
    pub d: usize,
    #[serde(rename = "N")]
    pub precision: u32,
    pub modulus: Vec<u64>,
}

/// Immutable description of W_N(𝔽_{p^d}).
#[derive(Clone, Debug)]
pub struct RingContext {
    p: u64,
    precision: u32,
    field: ResidueField,
    modulus: Vec<u64>,
    pn: BigUint,
    neg_modulus: Vec<BigUint>,
    frob: Vec<PadicScalar>,
    frob_inv: Vec<PadicScalar>,
}

impl PartialEq for RingContext {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.precision == other.precision && self.modulus == other.modulus
    }
}

impl Eq for RingContext {}

impl RingContext {
    /// Context for W_N(𝔽_{p^d}) using the lexicographically smallest monic
    /// irreducible polynomial of degree `d` over 𝔽_p.
    pub fn new(p: u64, d: usize, precision: u32) -> Result<Self> {
        check_parameters(p, d, precision)?;
        if p.checked_pow((d / 2) as u32).is_none_or(|w| w > MAX_SEARCH) {
            return Err(Error::Capacity(format!("modulus search over p^{} too large", d / 2)));
        }
        let modulus = field::smallest_irreducible(p, d);
        Self::build(p, modulus, precision)
    }

    /// Context for an explicitly given modulus (low coefficients `c_0 .. c_{d-1}`).
    pub fn with_modulus(p: u64, modulus: Vec<u64>, precision: u32) -> Result<Self> {
        check_parameters(p, modulus.len(), precision)?;
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidParameter(
                "modulus coefficients must lie in [0, p)".into(),
            ));
        }
        let mut monic = modulus.clone();
        monic.push(1);
        if !field::is_irreducible(&monic, p) {
            return Err(Error::InvalidParameter(format!(
                "modulus {monic:?} is reducible mod {p}"
            )));
        }
        Self::build(p, modulus, precision)
    }

    /// Same ring at a different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        check_parameters(self.p, self.degree(), precision)?;
        Self::build(self.p, self.modulus.clone(), precision)
    }

    fn build(p: u64, modulus: Vec<u64>, precision: u32) -> Result<Self> {
        let d = modulus.len();
        let pn = BigUint::from(p).pow(precision);
        let neg_modulus = modulus.iter().map(|&c| (&pn - BigUint::from(c)) % &pn).collect();
        let mut ctx = RingContext {
            p,
            precision,
            field: ResidueField::new(p, modulus.clone()),
            modulus,
            pn,
            neg_modulus,
            frob: Vec::new(),
            frob_inv: Vec::new(),
        };
        let basis: Vec<PadicScalar> = (0..d).map(|i| ctx.basis_power(i)).collect();
        if d == 1 {
            ctx.frob = basis.clone();
            ctx.frob_inv = basis;
            return Ok(ctx);
        }
        let beta = ctx.frobenius_of_generator();
        let mut frob = Vec::with_capacity(d);
        let mut acc = ctx.one();
        for _ in 0..d {
            frob.push(acc.clone());
            acc = ctx.mul(&acc, &beta);
        }
        ctx.frob = frob;
        // σ^{-1} = σ^{d-1}
        let frob_inv = basis
            .iter()
            .map(|b| (0..d - 1).fold(b.clone(), |x, _| ctx.frobenius(&x)))
            .collect();
        ctx.frob_inv = frob_inv;
        Ok(ctx)
    }

    /// The root of the modulus congruent to `α^p`, found by Newton iteration.
    fn frobenius_of_generator(&self) -> PadicScalar {
        let alpha = self.basis_power(1);
        let mut beta = self.pow(&alpha, self.p);
        for _ in 0..=2 * self.precision + 2 {
            let (f, df) = self.eval_modulus(&beta);
            if f.is_zero() {
                return beta;
            }
            let step = self.mul(&f, &self.inv(&df).expect("modulus is separable mod p"));
            beta = self.sub(&beta, &step);
        }
        panic!("Newton iteration for the Frobenius lift did not converge");
    }

    /// `(f(x), f'(x))` for the monic modulus `f`.
    fn eval_modulus(&self, x: &PadicScalar) -> (PadicScalar, PadicScalar) {
        let d = self.degree();
        let mut f = self.one();
        let mut df = self.from_int(d as i64);
        for i in (0..d).rev() {
            f = self.add(&self.mul(&f, x), &self.from_int(self.modulus[i] as i64));
            if i >= 1 {
                let c = self.from_int((i as u64 * self.modulus[i]) as i64);
                df = self.add(&self.mul(&df, x), &c);
            }
        }
        (f, df)
    }

    fn basis_power(&self, i: usize) -> PadicScalar {
        let mut coords = vec![BigUint::zero(); self.degree()];
        coords[i] = BigUint::one();
        PadicScalar { coords }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.modulus.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `p^N` as an integer.
    pub fn modulus_int(&self) -> &BigUint {
        &self.pn
    }

    /// Monic modulus coefficients, constant term first, leading 1 included.
    pub fn modulus_poly(&self) -> Vec<u64> {
        let mut m = self.modulus.clone();
        m.push(1);
        m
    }

    pub fn field(&self) -> &ResidueField {
        &self.field
    }

    pub fn to_json(&self) -> ContextJson {
        ContextJson {
            p: self.p,
            d: self.degree(),
            precision: self.precision,
            modulus: self.modulus_poly(),
        }
    }

    pub fn from_json(j: &ContextJson) -> Result<Self> {
        if j.modulus.len() != j.d + 1 || j.modulus.last() != Some(&1) {
            return Err(Error::InvalidParameter("modulus must be monic of degree d".into()));
        }
        Self::with_modulus(j.p, j.modulus[..j.d].to_vec(), j.precision)
    }

    // ---- construction ---------------------------------------------------

    pub fn zero(&self) -> PadicScalar {
        PadicScalar {
            coords: vec![BigUint::zero(); self.degree()],
        }
    }

    pub fn one(&self) -> PadicScalar {
        self.basis_power(0)
    }

    pub fn from_int(&self, v: i64) -> PadicScalar {
        let mut s = self.zero();
        let mag = BigUint::from(v.unsigned_abs()) % &self.pn;
        s.coords[0] = if v < 0 { (&self.pn - mag) % &self.pn } else { mag };
        s
    }

    /// `p^k` (zero when `k ≥ N`).
    pub fn p_power(&self, k: u32) -> PadicScalar {
        let mut s = self.zero();
        s.coords[0] = BigUint::from(self.p).pow(k) % &self.pn;
        s
    }

    pub fn from_coords(&self, coords: Vec<BigUint>) -> Result<PadicScalar> {
        if coords.len() != self.degree() {
            return Err(Error::MalformedScalar(format!(
                "expected {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| c >= &self.pn) {
            return Err(Error::MalformedScalar("coordinate not reduced mod p^N".into()));
        }
        Ok(PadicScalar { coords })
    }

    /// Reduce arbitrary integer coordinates into this context.
    pub fn reduce_coords(&self, coords: &[BigUint]) -> Result<PadicScalar> {
        self.from_coords(coords.iter().map(|c| c % &self.pn).collect())
    }

    pub fn scalar_to_json(&self, x: &PadicScalar) -> ScalarJson {
        ScalarJson {
            coords: x.coords.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn scalar_from_json(&self, j: &ScalarJson) -> Result<PadicScalar> {
        let coords = j
            .coords
            .iter()
            .map(|s| {
                s.parse::<BigUint>()
                    .map_err(|e| Error::MalformedScalar(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.from_coords(coords)
    }

    // ---- ring operations ------------------------------------------------

    pub fn add(&self, x: &PadicScalar, y: &PadicScalar) -> PadicScalar {
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| {
                let s = a + b;
                if s >= self.pn {
                    s - &self.pn
                } else {
                    s
                }
            })
            .collect();
        PadicScalar { coords }
    }

    pub fn neg(&self, x: &PadicScalar) -> PadicScalar {
        let coords = x
            .coords
            .iter()
            .map(|a| if a.is_zero() { BigUint::zero() } else { &self.pn - a })
            .collect();
        PadicScalar { coords }
    }

    pub fn sub(&self, x: &PadicScalar, y: &PadicScalar) -> PadicScalar {
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| if a >= b { a - b } else { &self.pn - b + a })
            .collect();
        PadicScalar { coords }
    }

    pub fn mul(&self, x: &PadicScalar, y: &PadicScalar) -> PadicScalar {
        let d = self.degree();
        if d == 1 {
            return PadicScalar {
                coords: vec![(&x.coords[0] * &y.coords[0]) % &self.pn],
            };
        }
        let mut prod = vec![BigUint::zero(); 2 * d - 1];
        for (i, a) in x.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.coords.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        for k in (d..2 * d - 1).rev() {
            let t = std::mem::take(&mut prod[k]) % &self.pn;
            if t.is_zero() {
                continue;
            }
            for (i, c) in self.neg_modulus.iter().enumerate() {
                if !c.is_zero() {
                    prod[k - d + i] += &t * c;
                }
            }
        }
        prod.truncate(d);
        PadicScalar {
            coords: prod.into_iter().map(|c| c % &self.pn).collect(),
        }
    }

    /// Multiply by an integer scalar.
    pub fn scale(&self, x: &PadicScalar, k: i64) -> PadicScalar {
        self.mul(x, &self.from_int(k))
    }

    pub fn pow(&self, x: &PadicScalar, mut e: u64) -> PadicScalar {
        let mut base = x.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Multiplicative inverse of a unit.
    pub fn inv(&self, x: &PadicScalar) -> Result<PadicScalar> {
        let v = self.valuation(x);
        if v != Some(0) {
            return Err(Error::NonInvertible { valuation: v });
        }
        let r = self.field.inv(&self.reduce(x)).expect("unit has nonzero residue");
        let mut y = self.lift(&r);
        let two = self.from_int(2);
        let one = self.one();
        // Newton: y <- y(2 - xy); doubles the number of correct digits.
        for _ in 0..=self.precision.ilog2() + 2 {
            let xy = self.mul(x, &y);
            if xy == one {
                return Ok(y);
            }
            y = self.mul(&y, &self.sub(&two, &xy));
        }
        debug_assert_eq!(self.mul(x, &y), one);
        Ok(y)
    }

    /// The Frobenius automorphism σ lifting `t ↦ t^p`.
    pub fn frobenius(&self, x: &PadicScalar) -> PadicScalar {
        self.apply_linear(&self.frob, x)
    }

    pub fn frobenius_inv(&self, x: &PadicScalar) -> PadicScalar {
        self.apply_linear(&self.frob_inv, x)
    }

    /// σ^k for any integer `k`.
    pub fn frobenius_pow(&self, x: &PadicScalar, k: i64) -> PadicScalar {
        let d = self.degree() as i64;
        let k = k.rem_euclid(d);
        (0..k).fold(x.clone(), |acc, _| self.frobenius(&acc))
    }

    fn apply_linear(&self, images: &[PadicScalar], x: &PadicScalar) -> PadicScalar {
        if self.degree() == 1 {
            return x.clone();
        }
        let mut acc = vec![BigUint::zero(); self.degree()];
        for (c, img) in x.coords.iter().zip(images) {
            if c.is_zero() {
                continue;
            }
            for (a, b) in acc.iter_mut().zip(&img.coords) {
                *a += c * b;
            }
        }
        PadicScalar {
            coords: acc.into_iter().map(|c| c % &self.pn).collect(),
        }
    }

    /// p-adic valuation, `None` when `x ≡ 0 mod p^N` (the "≥ N" sentinel).
    pub fn valuation(&self, x: &PadicScalar) -> Option<u32> {
        x.coords.iter().filter_map(|c| int_valuation(c, self.p)).min()
    }

    /// Exact division by `p^k`; `None` if `x` is not divisible. The top `k`
    /// digits of the quotient are unknown and returned as zero.
    pub fn div_p_power(&self, x: &PadicScalar, k: u32) -> Option<PadicScalar> {
        if k == 0 {
            return Some(x.clone());
        }
        let pk = BigUint::from(self.p).pow(k);
        let mut coords = Vec::with_capacity(self.degree());
        for c in &x.coords {
            let (q, r) = c.div_rem(&pk);
            if !r.is_zero() {
                return None;
            }
            coords.push(q);
        }
        Some(PadicScalar { coords })
    }

    /// Reduce mod `p^k` (keeps the representative in `[0, p^k)`).
    pub fn truncate(&self, x: &PadicScalar, k: u32) -> PadicScalar {
        if k >= self.precision {
            return x.clone();
        }
        let pk = BigUint::from(self.p).pow(k);
        PadicScalar {
            coords: x.coords.iter().map(|c| c % &pk).collect(),
        }
    }

    // ---- residue field --------------------------------------------------

    /// Reduction mod p.
    pub fn reduce(&self, x: &PadicScalar) -> FieldElement {
        let p = BigUint::from(self.p);
        let coords: Vec<u64> = x
            .coords
            .iter()
            .map(|c| (c % &p).to_u64().expect("residue fits"))
            .collect();
        self.field.from_coords(&coords).expect("reduced coordinates")
    }

    /// The naive lift with coordinates in `[0, p)`.
    pub fn lift(&self, a: &FieldElement) -> PadicScalar {
        PadicScalar {
            coords: a.coords().iter().map(|&c| BigUint::from(c) % &self.pn).collect(),
        }
    }

    /// Teichmüller lift: the unique `x ≡ a mod p` with `x^{p^d} = x`.
    pub fn teichmuller(&self, a: &FieldElement) -> PadicScalar {
        let q = self.field.size();
        let mut y = self.lift(a);
        for _ in 0..=self.precision {
            let next = self.pow(&y, q);
            if next == y {
                return y;
            }
            y = next;
        }
        y
    }
}

fn check_parameters(p: u64, d: usize, precision: u32) -> Result<()> {
    if p > MAX_PRIME {
        return Err(Error::Capacity(format!("prime {p} exceeds {MAX_PRIME}")));
    }
    if !field::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("degree d must be ≥ 1".into()));
    }
    if precision == 0 {
        return Err(Error::InvalidParameter("precision N must be ≥ 1".into()));
    }
    if p.checked_pow(d as u32).is_none_or(|q| q >= 1 << 62) {
        return Err(Error::Capacity(format!("residue field of size {p}^{d} too large")));
    }
    let bits = (precision as f64 * (p as f64).log2()).ceil() as u64;
    if bits > MAX_MODULUS_BITS {
        return Err(Error::Capacity(format!(
            "p^N = {p}^{precision} needs {bits} bits, limit is {MAX_MODULUS_BITS}"
        )));
    }
    Ok(())
}

fn int_valuation(c: &BigUint, p: u64) -> Option<u32> {
    if c.is_zero() {
        return None;
    }
    if p == 2 {
        return c.trailing_zeros().map(|t| t as u32);
    }
    let p = BigUint::from(p);
    let mut c = c.clone();
    let mut v = 0;
    loop {
        let (q, r) = c.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        c = q;
        v += 1;
    }
}
