//! Dense square matrices over W_N(𝔽_{p^d}) with zero-skipping products.
//!
//! The displays handled here have two or three nonzero entries per column, so
//! every product walks the nonzero pattern instead of the full index range.

use crate::wittring::{PadicScalar, RingContext};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    dim: usize,
    /// Row-major.
    data: Vec<PadicScalar>,
}

impl Matrix {
    pub fn zero(ctx: &RingContext, dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![ctx.zero(); dim * dim],
        }
    }

    pub fn identity(ctx: &RingContext, dim: usize) -> Self {
        let mut m = Self::zero(ctx, dim);
        for i in 0..dim {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> PadicScalar) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &PadicScalar {
        &self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: PadicScalar) {
        self.data[row * self.dim + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<PadicScalar> {
        (0..self.dim).map(|i| self.get(i, col).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn map(&self, f: impl Fn(&PadicScalar) -> PadicScalar) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Entrywise σ^k.
    pub fn frobenius_twist(&self, ctx: &RingContext, k: i64) -> Self {
        self.map(|x| ctx.frobenius_pow(x, k))
    }

    /// Nonzero positions grouped by column: `cols[j]` lists rows `i` with `a_ij ≠ 0`.
    pub fn column_support(&self) -> Vec<Vec<usize>> {
        (0..self.dim)
            .map(|j| (0..self.dim).filter(|&i| !self.get(i, j).is_zero()).collect())
            .collect()
    }

    pub fn mul(&self, ctx: &RingContext, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let support = rhs.column_support();
        let mut out = Matrix::zero(ctx, n);
        for (j, rows_k) in support.iter().enumerate() {
            for &k in rows_k {
                let b = rhs.get(k, j);
                for i in 0..n {
                    let a = self.get(i, k);
                    if !a.is_zero() {
                        let v = ctx.add(out.get(i, j), &ctx.mul(a, b));
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, ctx: &RingContext, v: &[PadicScalar]) -> Vec<PadicScalar> {
        let mut out = vec![ctx.zero(); self.dim];
        for (j, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let a = self.get(i, j);
                if !a.is_zero() {
                    *o = ctx.add(o, &ctx.mul(a, x));
                }
            }
        }
        out
    }

    /// Characteristic polynomial `det(xI - A)`, coefficients constant term first,
    /// by Berkowitz's division-free recursion over leading principal submatrices.
    pub fn charpoly(&self, ctx: &RingContext) -> Vec<PadicScalar> {
        let n = self.dim;
        let support = self.column_support();
        // coefficients, leading term first
        let mut poly = vec![ctx.one()];
        for r in 1..=n {
            let last = r - 1;
            let a = self.get(last, last);
            // Toeplitz column: 1, -a, -R c, -R M c, …, -R M^{r-2} c
            let mut col = Vec::with_capacity(r + 1);
            col.push(ctx.one());
            col.push(ctx.neg(a));
            let mut w: Vec<PadicScalar> = (0..last).map(|i| self.get(i, last).clone()).collect();
            for step in 0..last {
                let rw = (0..last).fold(ctx.zero(), |acc, k| {
                    let (rk, wk) = (self.get(last, k), &w[k]);
                    if rk.is_zero() || wk.is_zero() {
                        acc
                    } else {
                        ctx.add(&acc, &ctx.mul(rk, wk))
                    }
                });
                col.push(ctx.neg(&rw));
                if step + 1 < last {
                    w = leading_mul_vec(self, ctx, &support, last, &w);
                }
            }
            let mut next = vec![ctx.zero(); r + 1];
            for (i, slot) in next.iter_mut().enumerate() {
                for (k, c) in poly.iter().enumerate().take(i + 1) {
                    let t = &col[i - k];
                    if !t.is_zero() && !c.is_zero() {
                        *slot = ctx.add(slot, &ctx.mul(t, c));
                    }
                }
            }
            poly = next;
        }
        poly.reverse();
        poly
    }

    /// `(det A, adj A)` via Cayley–Hamilton, division-free.
    pub fn det_adjugate(&self, ctx: &RingContext) -> (PadicScalar, Matrix) {
        let n = self.dim;
        let chi = self.charpoly(ctx);
        let sign = |k: usize| if k % 2 == 0 { 1 } else { -1 };
        let det = ctx.scale(&chi[0], sign(n));
        // Q = A^{n-1} + c_{n-1} A^{n-2} + … + c_1 I, so A Q = -c_0 I.
        let mut q = Matrix::identity(ctx, n);
        for c in chi[1..n].iter().rev() {
            q = q.mul(ctx, self);
            for i in 0..n {
                let v = ctx.add(q.get(i, i), c);
                q.set(i, i, v);
            }
        }
        let adj = q.map(|x| ctx.scale(x, sign(n - 1)));
        (det, adj)
    }
}

/// `M w` where `M` is the leading `k × k` block of `a`.
fn leading_mul_vec(
    a: &Matrix,
    ctx: &RingContext,
    support: &[Vec<usize>],
    k: usize,
    w: &[PadicScalar],
) -> Vec<PadicScalar> {
    let mut out = vec![ctx.zero(); k];
    for (j, x) in w.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for &i in support[j].iter().filter(|&&i| i < k) {
            out[i] = ctx.add(&out[i], &ctx.mul(a.get(i, j), x));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;
    use proptest::prelude::*;

    use super::*;
    use crate::testutil::charpoly_rational;

    fn to_matrix(ctx: &RingContext, a: &[Vec<i64>]) -> Matrix {
        Matrix::from_fn(a.len(), |i, j| ctx.from_int(a[i][j]))
    }

    fn rational_to_scalar(ctx: &RingContext, x: &BigRational) -> PadicScalar {
        assert!(x.is_integer());
        let v: i64 = x.to_integer().try_into().unwrap();
        ctx.from_int(v)
    }

    #[test]
    fn small_charpoly_by_hand() {
        let ctx = RingContext::new(5, 1, 6).unwrap();
        // [[1,2],[3,4]]: x^2 - 5x - 2
        let m = to_matrix(&ctx, &[vec![1, 2], vec![3, 4]]);
        assert_eq!(m.charpoly(&ctx), vec![ctx.from_int(-2), ctx.from_int(-5), ctx.one()]);
        let (det, adj) = m.det_adjugate(&ctx);
        assert_eq!(det, ctx.from_int(-2));
        assert_eq!(adj, to_matrix(&ctx, &[vec![4, -2], vec![-3, 1]]));
    }

    proptest! {
        #[test]
        fn berkowitz_matches_faddeev_leverrier(
            entries in proptest::collection::vec(-9i64..10, 36),
            n in 1usize..=6,
            sparse in proptest::bool::ANY,
        ) {
            let ctx = RingContext::new(3, 1, 30).unwrap();
            let a: Vec<Vec<i64>> = (0..n)
                .map(|i| (0..n).map(|j| {
                    let e = entries[i * 6 + j];
                    if sparse && e % 3 != 0 { 0 } else { e }
                }).collect())
                .collect();
            let expected: Vec<PadicScalar> =
                charpoly_rational(&a).iter().map(|c| rational_to_scalar(&ctx, c)).collect();
            let m = to_matrix(&ctx, &a);
            prop_assert_eq!(m.charpoly(&ctx), expected);
            let (det, adj) = m.det_adjugate(&ctx);
            let prod = m.mul(&ctx, &adj);
            prop_assert_eq!(prod, Matrix::identity(&ctx, n).map(|x| ctx.mul(x, &det)));
        }
    }
}
