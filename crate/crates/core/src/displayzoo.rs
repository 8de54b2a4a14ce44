//! Constructors for the displays N, M(m), their sums, the per-stratum modules
//! and the field-valued specializations of the universal deformation of the
//! supersingular module.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcrystal::{BasisLabel, DieudonneDisplay, Grading, Matrix};
use crate::wittring::{FieldElement, PadicScalar, RingContext};

/// Accumulates `F` and the pairing by basis label.
struct Builder<'a> {
    ctx: &'a RingContext,
    basis: Vec<BasisLabel>,
    index: BTreeMap<BasisLabel, usize>,
    frobenius: Matrix,
    pairing: Matrix,
}

impl<'a> Builder<'a> {
    fn new(ctx: &'a RingContext, basis: Vec<BasisLabel>) -> Self {
        let index = basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let n = basis.len();
        Builder {
            ctx,
            basis,
            index,
            frobenius: Matrix::zero(ctx, n),
            pairing: Matrix::zero(ctx, n),
        }
    }

    /// Add `coeff·target` to `F(source)`.
    fn f_add(&mut self, source: BasisLabel, target: BasisLabel, coeff: &PadicScalar) {
        let (j, i) = (self.index[&source], self.index[&target]);
        let v = self.ctx.add(self.frobenius.get(i, j), coeff);
        self.frobenius.set(i, j, v);
    }

    /// `⟨x, y⟩ = value`, `⟨y, x⟩ = −value`.
    fn pair(&mut self, x: BasisLabel, y: BasisLabel, value: i64) {
        let (i, j) = (self.index[&x], self.index[&y]);
        self.pairing.set(i, j, self.ctx.from_int(value));
        self.pairing.set(j, i, self.ctx.from_int(-value));
    }

    fn finish(self, ctx: Arc<RingContext>) -> DieudonneDisplay {
        let grading = Grading::by_family(&self.basis);
        DieudonneDisplay::new(ctx, self.basis, self.frobenius, self.pairing, grading)
            .expect("zoo displays are well-formed")
    }
}

fn sign(k: u32) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

fn m_basis(m: u32) -> Vec<BasisLabel> {
    (1..=m).map(BasisLabel::u).chain((1..=m).map(BasisLabel::v)).collect()
}

/// Pairing `⟨u_i, v_j⟩ = (−1)^i δ_ij` on the M(m) part.
fn pair_m(b: &mut Builder, m: u32) {
    for i in 1..=m {
        b.pair(BasisLabel::u(i), BasisLabel::v(i), sign(i));
    }
}

/// The rank-2 module N: `F v₀ = −u₀`, `F u₀ = p v₀`, `⟨u₀, v₀⟩ = 1`.
pub fn module_n(ctx: &Arc<RingContext>) -> DieudonneDisplay {
    let (u0, v0) = (BasisLabel::u(0), BasisLabel::v(0));
    let mut b = Builder::new(ctx, vec![u0, v0]);
    b.f_add(v0, u0, &ctx.from_int(-1));
    b.f_add(u0, v0, &ctx.p_power(1));
    b.pair(u0, v0, 1);
    b.finish(ctx.clone())
}

/// The rank-2m module M(m).
pub fn module_m(ctx: &Arc<RingContext>, m: u32) -> Result<DieudonneDisplay> {
    if m < 2 {
        return Err(Error::OutOfRange(format!("M(m) needs m ≥ 2, got {m}")));
    }
    let mut b = Builder::new(ctx, m_basis(m));
    let p = ctx.p_power(1);
    b.f_add(BasisLabel::u(1), BasisLabel::v(m), &ctx.from_int(sign(m)));
    for k in 2..=m {
        b.f_add(BasisLabel::v(k), BasisLabel::u(k - 1), &ctx.one());
        // u_k = V v_{k-1}
        b.f_add(BasisLabel::u(k), BasisLabel::v(k - 1), &p);
    }
    // v_1 = V u_m
    b.f_add(BasisLabel::v(1), BasisLabel::u(m), &p);
    pair_m(&mut b, m);
    Ok(b.finish(ctx.clone()))
}

/// Block sum. Labels of `d2` are tagged with a fresh summand number when they
/// would collide with labels of `d1`.
pub fn direct_sum(d1: &DieudonneDisplay, d2: &DieudonneDisplay) -> Result<DieudonneDisplay> {
    let ctx = d1.context();
    if ctx != d2.context() {
        return Err(Error::ContextMismatch(
            "direct sum of displays over different rings".into(),
        ));
    }
    let (n1, n2) = (d1.rank(), d2.rank());
    let collides = d2.basis().iter().any(|l| d1.basis().contains(l));
    let base = d1.basis().iter().map(|l| l.summand).max().unwrap_or(0) + 1;
    let mut basis = d1.basis().to_vec();
    basis.extend(d2.basis().iter().map(|l| {
        if collides {
            BasisLabel {
                summand: base + l.summand,
                ..*l
            }
        } else {
            *l
        }
    }));
    let block = |m1: &Matrix, m2: &Matrix| {
        Matrix::from_fn(n1 + n2, |i, j| match (i < n1, j < n1) {
            (true, true) => m1.get(i, j).clone(),
            (false, false) => m2.get(i - n1, j - n1).clone(),
            _ => ctx.zero(),
        })
    };
    let g1 = d1.grading();
    let g2 = d2.grading();
    let grading = Grading {
        u: g1.u.iter().copied().chain(g2.u.iter().map(|i| i + n1)).collect(),
        v: g1.v.iter().copied().chain(g2.v.iter().map(|i| i + n1)).collect(),
    };
    DieudonneDisplay::new(
        ctx.clone(),
        basis,
        block(d1.frobenius(), d2.frobenius()),
        block(d1.pairing(), d2.pairing()),
        grading,
    )
}

/// `d ⊕ N^r`.
pub fn with_copies_of_n(ctx: &Arc<RingContext>, d: DieudonneDisplay, r: u32) -> Result<DieudonneDisplay> {
    let n = module_n(ctx);
    (0..r).try_fold(d, |acc, _| direct_sum(&acc, &n))
}

/// Half-size `h = ⌊n/2⌋ + 1 − j` of the M-summand on stratum ξ_{2j}.
pub fn stratum_block_size(n: u32, j: u32) -> Result<u32> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("n must be ≥ 3, got {n}")));
    }
    if j < 1 || j > n / 2 {
        return Err(Error::OutOfRange(format!("j must lie in 1..={}, got {j}", n / 2)));
    }
    Ok(n / 2 + 1 - j)
}

/// `M(2h) ⊕ N^{r}` with `h = ⌊n/2⌋+1−j` and `r = n − 2h`, the only `r` giving rank `2n`.
pub fn expected_module(ctx: &Arc<RingContext>, n: u32, j: u32) -> Result<DieudonneDisplay> {
    let h = stratum_block_size(n, j)?;
    let r = n - 2 * h;
    with_copies_of_n(ctx, module_m(ctx, 2 * h)?, r)
}

/// `M(n)` for odd `n`, `M(n−1) ⊕ N` for even `n`.
pub fn supersingular_module(ctx: &Arc<RingContext>, n: u32) -> Result<DieudonneDisplay> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("n must be ≥ 3, got {n}")));
    }
    if n % 2 == 1 {
        module_m(ctx, n)
    } else {
        direct_sum(&module_m(ctx, n - 1)?, &module_n(ctx))
    }
}

/// A field-valued point of the local deformation space at a supersingular point.
/// Odd `n`: coordinates `(s_2, …, s_n)`; even `n`: `(s_0, s_2, …, s_{n−1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeformationPoint {
    n: u32,
    params: Vec<FieldElement>,
}

impl DeformationPoint {
    pub fn new(n: u32, params: Vec<FieldElement>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidPoint(format!("n must be ≥ 3, got {n}")));
        }
        if params.len() != (n - 1) as usize {
            return Err(Error::InvalidPoint(format!(
                "n = {n} needs {} parameters, got {}",
                n - 1,
                params.len()
            )));
        }
        Ok(DeformationPoint { n, params })
    }

    pub fn zero(ctx: &RingContext, n: u32) -> Result<Self> {
        Self::new(n, vec![ctx.field().zero(); n.saturating_sub(1) as usize])
    }

    /// Point with the listed coordinates set and all others zero.
    pub fn from_assignments(ctx: &RingContext, n: u32, assignments: &[(u32, FieldElement)]) -> Result<Self> {
        let mut pt = Self::zero(ctx, n)?;
        for (k, value) in assignments {
            let slot = pt
                .slot(*k)
                .ok_or_else(|| Error::InvalidPoint(format!("s{k} is not a coordinate for n = {n}")))?;
            pt.params[slot] = value.clone();
        }
        Ok(pt)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn params(&self) -> &[FieldElement] {
        &self.params
    }

    /// Coordinate names `k` of `s_k`, in parameter-vector order.
    pub fn coordinate_indices(n: u32) -> Vec<u32> {
        if n % 2 == 1 {
            (2..=n).collect()
        } else {
            std::iter::once(0).chain(2..n).collect()
        }
    }

    fn slot(&self, k: u32) -> Option<usize> {
        Self::coordinate_indices(self.n).iter().position(|&i| i == k)
    }

    /// `s_k`, or `None` if `k` is not a coordinate.
    pub fn s(&self, k: u32) -> Option<&FieldElement> {
        self.slot(k).map(|i| &self.params[i])
    }

    pub fn is_zero(&self) -> bool {
        self.params.iter().all(FieldElement::is_zero)
    }

    /// Coordinates rendered as `s2=…,s3=…` using field indices.
    pub fn describe(&self, ctx: &RingContext) -> String {
        Self::coordinate_indices(self.n)
            .iter()
            .zip(&self.params)
            .map(|(k, v)| format!("s{k}={}", ctx.field().index(v)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Which version of the deformation display to build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationForm {
    /// Signs adjusted so the quasipolarization extends: `F v₁ = p(u_m + ṡ_m u₁)`
    /// and, for even `n`, an extra `p ṡ₀ v₀` term in `F u₂`.
    #[default]
    Polarized,
    /// The relations exactly as written in the source: `F v₁ = p(u_m − ṡ_m u₁)` and
    /// no `v₀` term in `F u₂`. Fails the polarization check when `s_m ≠ 0` or `s₀ ≠ 0`.
    Literal,
}

impl DeformationForm {
    pub fn name(self) -> &'static str {
        match self {
            DeformationForm::Polarized => "polarized",
            DeformationForm::Literal => "literal",
        }
    }
}

impl fmt::Display for DeformationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeformationForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polarized" => Ok(DeformationForm::Polarized),
            "literal" => Ok(DeformationForm::Literal),
            _ => Err(Error::Parse(format!(
                "unknown deformation form {s:?} (polarized|literal)"
            ))),
        }
    }
}

/// The universal deformation specialized at `point`, parameters entering through
/// their Teichmüller lifts. Rows on `u₂`, `v₁`, `u_k`, `u₀` come from applying
/// `F` to the `V`-relations (`F∘V = p`).
pub fn deformation_display(
    ctx: &Arc<RingContext>,
    point: &DeformationPoint,
    form: DeformationForm,
) -> Result<DieudonneDisplay> {
    for v in point.params() {
        if v.coords().len() != ctx.degree() || v.coords().iter().any(|&c| c >= ctx.p()) {
            return Err(Error::InvalidPoint(
                "parameter does not lie in the residue field".into(),
            ));
        }
    }
    let n = point.n();
    let even = n % 2 == 0;
    let m = if even { n - 1 } else { n };
    let t = |k: u32| ctx.teichmuller(point.s(k).expect("coordinate exists"));
    let p = ctx.p_power(1);
    let pt = |x: &PadicScalar| ctx.mul(&p, x);
    let (u, v) = (BasisLabel::u, BasisLabel::v);

    let mut basis = m_basis(m);
    if even {
        basis.extend([u(0), v(0)]);
    }
    let mut b = Builder::new(ctx, basis);
    b.f_add(u(1), v(m), &ctx.from_int(-1));
    // u_2 = V(v_1 + Σ_{2≤j≤m} (−1)^j ṡ_j v_j [+ ṡ_0 v_0])
    b.f_add(u(2), v(1), &p);
    for j in 2..=m {
        b.f_add(u(2), v(j), &pt(&ctx.scale(&t(j), sign(j))));
    }
    for k in 3..=m {
        b.f_add(u(k), v(k - 1), &p);
    }
    // v_1 = V(u_m ± ṡ_m u_1)
    let sm = match form {
        DeformationForm::Polarized => t(m),
        DeformationForm::Literal => ctx.neg(&t(m)),
    };
    b.f_add(v(1), u(m), &p);
    b.f_add(v(1), u(1), &pt(&sm));
    b.f_add(v(2), u(1), &ctx.one());
    for k in 3..=m {
        b.f_add(v(k), u(k - 1), &ctx.one());
        b.f_add(v(k), u(1), &t(k - 1));
    }
    pair_m(&mut b, m);
    if even {
        let s0 = t(0);
        b.f_add(v(0), u(0), &ctx.from_int(-1));
        b.f_add(v(0), u(1), &ctx.neg(&s0));
        b.f_add(u(0), v(0), &p);
        if form == DeformationForm::Polarized {
            b.f_add(u(2), v(0), &pt(&s0));
        }
        b.pair(u(0), v(0), 1);
    }
    Ok(b.finish(ctx.clone()))
}

#[cfg(test)]
mod tests;
