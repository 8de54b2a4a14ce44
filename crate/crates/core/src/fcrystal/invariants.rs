use std::sync::Arc;

use serde::Serialize;

use super::matrix::Matrix;
use super::modp::{self, FieldMatrix};
use super::{BasisLabel, DieudonneDisplay, NewtonPolygon, Slope};
use crate::error::{Error, Result};
use crate::wittring::{PadicScalar, RingContext, ScalarJson};

/// `B = p·A⁻¹`, the matrix of `V` up to the inverse Frobenius twist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VOperator {
    pub matrix: Matrix,
    /// Entries of `matrix` are exact modulo `p^reliable_precision`.
    pub reliable_precision: u32,
    /// Valuation of `det A`.
    pub det_valuation: u32,
}

struct VComputation {
    op: VOperator,
    nonintegral: Vec<(usize, usize)>,
}

fn compute_v(d: &DieudonneDisplay) -> Result<VComputation> {
    let ctx = d.context();
    let (det, adj) = d.frobenius().det_adjugate(ctx);
    let n = ctx.precision();
    let v = match ctx.valuation(&det) {
        Some(v) if v < n => v,
        _ => return Err(Error::VNotComputable("det F ≡ 0 mod p^N".into())),
    };
    let reliable = if v == 0 { n } else { n - v };
    let unit = ctx.div_p_power(&det, v).expect("valuation computed above");
    let unit_inv = ctx.inv(&unit).expect("p-adic unit");
    let mut nonintegral = Vec::new();
    let mut b = Matrix::zero(ctx, d.rank());
    for i in 0..d.rank() {
        for j in 0..d.rank() {
            let e = adj.get(i, j);
            if e.is_zero() {
                continue;
            }
            // B = p·adj / (p^v·unit)
            let scaled = if v == 0 {
                Some(ctx.mul(&ctx.p_power(1), e))
            } else {
                ctx.div_p_power(e, v - 1)
            };
            match scaled {
                Some(s) => b.set(i, j, ctx.truncate(&ctx.mul(&s, &unit_inv), reliable)),
                None => nonintegral.push((i, j)),
            }
        }
    }
    Ok(VComputation {
        op: VOperator {
            matrix: b,
            reliable_precision: reliable,
            det_valuation: v,
        },
        nonintegral,
    })
}

/// The matrix `p·A⁻¹`; fails unless it is integral.
pub fn v_operator(d: &DieudonneDisplay) -> Result<VOperator> {
    let vc = compute_v(d)?;
    if let Some(&(i, j)) = vc.nonintegral.first() {
        return Err(Error::MalformedDisplay(format!(
            "V is not integral: entry ({}, {}) of p·A⁻¹",
            d.basis()[i],
            d.basis()[j]
        )));
    }
    Ok(vc.op)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Offending `(row, column)` basis labels.
    pub offending: Vec<(String, String)>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, d: &DieudonneDisplay, offending: Vec<(usize, usize)>, detail: String) -> Check {
    let labels = d.basis();
    Check {
        name,
        passed: offending.is_empty(),
        offending: offending
            .into_iter()
            .map(|(i, j)| (labels[i].to_string(), labels[j].to_string()))
            .collect(),
        detail,
    }
}

/// Checks every structural invariant of a display.
pub fn validate_display(d: &DieudonneDisplay) -> Result<ValidationReport> {
    let ctx = d.context();
    let n = d.rank();
    let a = d.frobenius();
    let j = d.pairing();
    let mut checks = Vec::new();

    checks.push(check(
        "frobenius_integral",
        d,
        vec![],
        "entries of A lie in W(k)".into(),
    ));

    let vc = compute_v(d)?;
    checks.push(check(
        "v_integral",
        d,
        vc.nonintegral.clone(),
        format!(
            "val det A = {}, p·A⁻¹ exact mod p^{}",
            vc.op.det_valuation, vc.op.reliable_precision
        ),
    ));

    let mut alt = Vec::new();
    for r in 0..n {
        for c in r..n {
            let bad = if r == c {
                !j.get(r, r).is_zero()
            } else {
                !ctx.add(j.get(r, c), j.get(c, r)).is_zero()
            };
            if bad {
                alt.push((r, c));
            }
        }
    }
    checks.push(check(
        "pairing_alternating",
        d,
        alt,
        "Jᵀ = −J with zero diagonal".into(),
    ));

    let (det_j, _) = j.det_adjugate(ctx);
    let unimodular = ctx.valuation(&det_j) == Some(0);
    checks.push(Check {
        name: "pairing_unimodular",
        passed: unimodular,
        offending: vec![],
        detail: format!(
            "val det J = {}",
            ctx.valuation(&det_j).map_or("∞".into(), |v| v.to_string())
        ),
    });

    let g = d.grading();
    let mut seen = vec![0u8; n];
    for &i in g.u.iter().chain(&g.v) {
        seen[i] += 1;
    }
    let partition = seen.iter().all(|&c| c == 1);
    checks.push(Check {
        name: "grading_partition",
        passed: partition,
        offending: vec![],
        detail: format!("{} u-indices, {} v-indices, rank {n}", g.u.len(), g.v.len()),
    });

    let mut same = Vec::new();
    for part in [&g.u, &g.v] {
        for &r in part.iter() {
            for &c in part.iter() {
                if !a.get(r, c).is_zero() {
                    same.push((r, c));
                }
            }
        }
    }
    same.sort();
    checks.push(check(
        "frobenius_swaps_grading",
        d,
        same,
        "F maps each eigenspace into the other".into(),
    ));

    Ok(ValidationReport { checks })
}

/// A pair `(e_i, e_j)` with `⟨F e_i, e_j⟩ ≠ σ(⟨e_i, V e_j⟩)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarizationViolation {
    pub row: BasisLabel,
    pub col: BasisLabel,
    pub discrepancy: PadicScalar,
}

#[derive(Serialize)]
pub struct PolarizationViolationJson {
    pub x: String,
    pub y: String,
    pub discrepancy: ScalarJson,
}

impl PolarizationViolation {
    pub fn to_json(&self, ctx: &RingContext) -> PolarizationViolationJson {
        PolarizationViolationJson {
            x: self.row.to_string(),
            y: self.col.to_string(),
            discrepancy: ctx.scalar_to_json(&self.discrepancy),
        }
    }
}

/// Evaluates `⟨F e_i, e_j⟩ − σ(⟨e_i, V e_j⟩)` on all basis pairs, modulo the
/// precision to which `V` is known.
pub fn polarization_check(d: &DieudonneDisplay) -> Result<Vec<PolarizationViolation>> {
    let ctx = d.context();
    let vop = v_operator(d)?;
    let (a, j, b) = (d.frobenius(), d.pairing(), &vop.matrix);
    let j_sigma = j.frobenius_twist(ctx, 1);
    let n = d.rank();
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let mut lhs = ctx.zero();
            let mut rhs = ctx.zero();
            for k in 0..n {
                // ⟨F e_r, e_c⟩ = Σ_k A_{kr} J_{kc};  σ⟨e_r, V e_c⟩ = Σ_k σ(J_{rk}) B_{kc}
                if !a.get(k, r).is_zero() && !j.get(k, c).is_zero() {
                    lhs = ctx.add(&lhs, &ctx.mul(a.get(k, r), j.get(k, c)));
                }
                if !j_sigma.get(r, k).is_zero() && !b.get(k, c).is_zero() {
                    rhs = ctx.add(&rhs, &ctx.mul(j_sigma.get(r, k), b.get(k, c)));
                }
            }
            let diff = ctx.truncate(&ctx.sub(&lhs, &rhs), vop.reliable_precision);
            if !diff.is_zero() {
                out.push(PolarizationViolation {
                    row: d.basis()[r],
                    col: d.basis()[c],
                    discrepancy: diff,
                });
            }
        }
    }
    Ok(out)
}

/// `A·σ(A)·…·σ^{d-1}(A)`, the matrix of the linear map `F^d`.
pub(crate) fn linearized_frobenius(d: &DieudonneDisplay) -> Matrix {
    let ctx = d.context();
    let a = d.frobenius();
    (1..ctx.degree() as i64).fold(a.clone(), |acc, k| acc.mul(ctx, &a.frobenius_twist(ctx, k)))
}

/// Newton polygon at the display's own precision, without the doubling check.
pub fn newton_polygon_single(d: &DieudonneDisplay) -> Result<NewtonPolygon> {
    let ctx = d.context();
    let chi = linearized_frobenius(d).charpoly(ctx);
    let vals: Vec<Option<u32>> = chi.iter().map(|c| ctx.valuation(c)).collect();
    let np = NewtonPolygon::from_coefficient_valuations(&vals)?;
    Ok(np.scaled_down(ctx.degree() as i64))
}

/// Newton slopes of `F`, recomputed on the canonical lift to precision `2N`;
/// the two results must agree.
pub fn newton_slopes(d: &DieudonneDisplay) -> Result<NewtonPolygon> {
    let ctx = d.context();
    let at_n = newton_polygon_single(d)?;
    let doubled = Arc::new(ctx.with_precision(2 * ctx.precision())?);
    let at_2n = newton_polygon_single(&d.lifted(doubled)?)?;
    if at_n != at_2n {
        return Err(Error::PrecisionUnstable {
            at_n: at_n.to_string(),
            at_2n: at_2n.to_string(),
        });
    }
    Ok(at_n)
}

pub fn p_rank(d: &DieudonneDisplay) -> Result<usize> {
    Ok(newton_slopes(d)?.multiplicity(Slope::from_integer(0)))
}

/// Rank of `F̄^r` on `D/pD` (`r` the rank), i.e. the dimension of the part on
/// which `F̄` is bijective: the p-rank, computed without slopes.
pub fn frobenius_stable_rank(d: &DieudonneDisplay) -> usize {
    let ctx = d.context();
    let f = ctx.field();
    let a_bar = reduce_matrix(ctx, d.frobenius());
    let n = d.rank();
    // F̄^k x = Ā σ(Ā) ⋯ σ^{k-1}(Ā) σ^k(x); σ^k on x does not change the rank.
    let mut prod = a_bar.clone();
    let mut twisted = a_bar;
    for _ in 1..n {
        twisted = twisted
            .iter()
            .map(|row| row.iter().map(|x| f.frobenius(x)).collect())
            .collect();
        prod = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(f.zero(), |acc, k| f.add(&acc, &f.mul(&prod[i][k], &twisted[k][j]))))
                    .collect()
            })
            .collect();
    }
    modp::rank(f, &prod)
}

fn reduce_matrix(ctx: &RingContext, m: &Matrix) -> FieldMatrix {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| ctx.reduce(m.get(i, j))).collect())
        .collect()
}

/// `dim ker F̄ ∩ ker V̄` on `D/pD`.
pub fn a_number(d: &DieudonneDisplay) -> Result<usize> {
    let ctx = d.context();
    let f = ctx.field();
    let a_bar = reduce_matrix(ctx, d.frobenius());
    let b_bar = reduce_matrix(ctx, &v_operator(d)?.matrix);
    // ker F̄ = σ⁻¹(ker Ā) since F̄x = Ā σ(x); ker V̄ = ker B̄ since V̄x = σ⁻¹(B̄ x).
    let ker_f: Vec<Vec<_>> = modp::kernel(f, &a_bar, d.rank())
        .into_iter()
        .map(|v| v.iter().map(|x| f.frobenius_inv(x)).collect())
        .collect();
    let images: FieldMatrix = ker_f.iter().map(|v| modp::apply(f, &b_bar, v)).collect();
    Ok(ker_f.len() - modp::rank(f, &images))
}

/// `(dim_u, dim_v)` of `D/VD` over the residue field.
pub fn signature(d: &DieudonneDisplay) -> Result<(usize, usize)> {
    let ctx = d.context();
    let f = ctx.field();
    let b_bar = reduce_matrix(ctx, &v_operator(d)?.matrix);
    let g = d.grading();
    // V swaps the eigenspaces, so V·D = V(D_v) ⊕ V(D_u) with V(D_v) ⊂ D_u.
    let image_rank = |cols: &[usize]| {
        let vecs: FieldMatrix = cols
            .iter()
            .map(|&c| b_bar.iter().map(|row| row[c].clone()).collect())
            .collect();
        modp::rank(f, &vecs)
    };
    Ok((
        g.u.len().saturating_sub(image_rank(&g.v)),
        g.v.len().saturating_sub(image_rank(&g.u)),
    ))
}
