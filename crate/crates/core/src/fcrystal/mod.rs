//! Displayed Dieudonné modules with 𝒪_L-grading and quasipolarization, and
//! their invariants.
//!
//! Convention: `F(c·x) = σ(c)·F(x)`. Column `j` of the Frobenius matrix `A`
//! holds the coordinates of `F e_j`, so in coordinates `F(x) = A·σ(x)`.
//! `V` is never stored: `V(x) = σ⁻¹(B x)` with `B = p·A⁻¹`.

mod invariants;
pub mod matrix;
pub mod modp;
mod polygon;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use invariants::{
    a_number, frobenius_stable_rank, newton_polygon_single, newton_slopes, p_rank, polarization_check, signature,
    v_operator, validate_display, Check, PolarizationViolation, VOperator, ValidationReport,
};
pub use matrix::Matrix;
pub use polygon::{NewtonPolygon, PolygonJson, Slope, SlopeJson};

use crate::error::{Error, Result};
use crate::wittring::{ContextJson, RingContext, ScalarJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    U,
    V,
}

/// Name of a basis vector, e.g. `u3`. Summands of a direct sum whose labels
/// would collide carry a nonzero `summand` tag, rendered `u0@1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub family: Family,
    pub index: u32,
    pub summand: u32,
}

impl BasisLabel {
    pub fn u(index: u32) -> Self {
        BasisLabel {
            family: Family::U,
            index,
            summand: 0,
        }
    }

    pub fn v(index: u32) -> Self {
        BasisLabel {
            family: Family::V,
            index,
            summand: 0,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            Family::U => 'u',
            Family::V => 'v',
        };
        if self.summand == 0 {
            write!(f, "{fam}{}", self.index)
        } else {
            write!(f, "{fam}{}@{}", self.index, self.summand)
        }
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedDisplay(format!("bad basis label {s:?}"));
        let mut chars = s.chars();
        let family = match chars.next() {
            Some('u') => Family::U,
            Some('v') => Family::V,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let (idx, summand) = match rest.split_once('@') {
            Some((i, t)) => (i, t.parse().map_err(|_| bad())?),
            None => (rest, 0),
        };
        Ok(BasisLabel {
            family,
            index: idx.parse().map_err(|_| bad())?,
            summand,
        })
    }
}

/// The two 𝒪_L-eigenspaces, as basis index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grading {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

impl Grading {
    /// Grading read off the label families.
    pub fn by_family(basis: &[BasisLabel]) -> Self {
        let pick = |fam| {
            basis
                .iter()
                .enumerate()
                .filter(|(_, l)| l.family == fam)
                .map(|(i, _)| i)
                .collect()
        };
        Grading {
            u: pick(Family::U),
            v: pick(Family::V),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DieudonneDisplay {
    ctx: Arc<RingContext>,
    basis: Vec<BasisLabel>,
    frobenius: Matrix,
    pairing: Matrix,
    grading: Grading,
}

/// File format: `frobenius` is column-major (`frobenius[j]` = coordinates of
/// `F e_j`), `pairing` is row-major (`pairing[i][j] = ⟨e_i, e_j⟩`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayJson {
    pub context: ContextJson,
    pub basis: Vec<String>,
    pub frobenius: Vec<Vec<ScalarJson>>,
    pub pairing: Vec<Vec<ScalarJson>>,
    pub grading: Grading,
}

impl DieudonneDisplay {
    pub fn new(
        ctx: Arc<RingContext>,
        basis: Vec<BasisLabel>,
        frobenius: Matrix,
        pairing: Matrix,
        grading: Grading,
    ) -> Result<Self> {
        let n = basis.len();
        if frobenius.dim() != n || pairing.dim() != n {
            return Err(Error::MalformedDisplay(format!(
                "basis has {n} vectors but matrices are {}×{0} and {}×{1}",
                frobenius.dim(),
                pairing.dim()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = basis.iter().find(|l| !seen.insert(**l)) {
            return Err(Error::MalformedDisplay(format!("duplicate basis label {dup}")));
        }
        if let Some(i) = grading.u.iter().chain(&grading.v).find(|&&i| i >= n) {
            return Err(Error::MalformedDisplay(format!("grading index {i} out of range")));
        }
        Ok(DieudonneDisplay {
            ctx,
            basis,
            frobenius,
            pairing,
            grading,
        })
    }

    pub fn context(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn basis(&self) -> &[BasisLabel] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn frobenius(&self) -> &Matrix {
        &self.frobenius
    }

    pub fn pairing(&self) -> &Matrix {
        &self.pairing
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn position(&self, label: &BasisLabel) -> Option<usize> {
        self.basis.iter().position(|l| l == label)
    }

    /// The same display with entries lifted (canonical representatives) into `ctx`.
    pub fn lifted(&self, ctx: Arc<RingContext>) -> Result<Self> {
        if ctx.p() != self.ctx.p() || ctx.modulus_poly() != self.ctx.modulus_poly() {
            return Err(Error::ContextMismatch("lift needs the same p and modulus".into()));
        }
        let lift = |m: &Matrix| -> Result<Matrix> {
            let mut out = Matrix::zero(&ctx, m.dim());
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    out.set(i, j, ctx.reduce_coords(m.get(i, j).coords())?);
                }
            }
            Ok(out)
        };
        let (frobenius, pairing) = (lift(&self.frobenius)?, lift(&self.pairing)?);
        Ok(DieudonneDisplay {
            ctx,
            basis: self.basis.clone(),
            frobenius,
            pairing,
            grading: self.grading.clone(),
        })
    }

    pub fn to_json(&self) -> DisplayJson {
        let n = self.rank();
        let c = &self.ctx;
        DisplayJson {
            context: c.to_json(),
            basis: self.basis.iter().map(ToString::to_string).collect(),
            frobenius: (0..n)
                .map(|j| (0..n).map(|i| c.scalar_to_json(self.frobenius.get(i, j))).collect())
                .collect(),
            pairing: (0..n)
                .map(|i| (0..n).map(|j| c.scalar_to_json(self.pairing.get(i, j))).collect())
                .collect(),
            grading: self.grading.clone(),
        }
    }

    pub fn from_json(j: &DisplayJson) -> Result<Self> {
        let ctx = Arc::new(RingContext::from_json(&j.context)?);
        let basis = j.basis.iter().map(|s| s.parse()).collect::<Result<Vec<BasisLabel>>>()?;
        let n = basis.len();
        let square = |rows: &Vec<Vec<ScalarJson>>, what: &str| -> Result<()> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::MalformedDisplay(format!("{what} must be {n}×{n}")));
            }
            Ok(())
        };
        square(&j.frobenius, "frobenius")?;
        square(&j.pairing, "pairing")?;
        let mut frobenius = Matrix::zero(&ctx, n);
        let mut pairing = Matrix::zero(&ctx, n);
        for a in 0..n {
            for b in 0..n {
                frobenius.set(b, a, ctx.scalar_from_json(&j.frobenius[a][b])?);
                pairing.set(a, b, ctx.scalar_from_json(&j.pairing[a][b])?);
            }
        }
        Self::new(ctx, basis, frobenius, pairing, j.grading.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_roundtrip() {
        for s in ["u1", "v12", "u0@2"] {
            assert_eq!(s.parse::<BasisLabel>().unwrap().to_string(), s);
        }
        assert!("w1".parse::<BasisLabel>().is_err());
        assert!("u".parse::<BasisLabel>().is_err());
        assert!("u1@x".parse::<BasisLabel>().is_err());
    }

    #[test]
    fn constructor_rejects_inconsistent_shapes() {
        let ctx = Arc::new(RingContext::new(3, 1, 4).unwrap());
        let basis = vec![BasisLabel::u(0), BasisLabel::v(0)];
        let g = Grading::by_family(&basis);
        let m2 = Matrix::zero(&ctx, 2);
        let m3 = Matrix::zero(&ctx, 3);
        assert!(DieudonneDisplay::new(ctx.clone(), basis.clone(), m3, m2.clone(), g.clone()).is_err());
        let dup = vec![BasisLabel::u(0), BasisLabel::u(0)];
        assert!(DieudonneDisplay::new(ctx.clone(), dup, m2.clone(), m2.clone(), g.clone()).is_err());
        let bad = Grading { u: vec![0], v: vec![5] };
        assert!(DieudonneDisplay::new(ctx, basis, m2.clone(), m2, bad).is_err());
    }
}
