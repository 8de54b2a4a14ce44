//! Oracles shared by unit tests.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Faddeev–LeVerrier over ℚ, an independent route to the characteristic
/// polynomial; coefficients constant term first.
pub fn charpoly_rational(a: &[Vec<i64>]) -> Vec<BigRational> {
    let n = a.len();
    let q = |x: i64| BigRational::from_integer(BigInt::from(x));
    let am: Vec<Vec<BigRational>> = a.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let matmul = |x: &Vec<Vec<BigRational>>, y: &Vec<Vec<BigRational>>| {
        let mut out = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if x[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += &x[i][k] * &y[k][j];
                }
            }
        }
        out
    };
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        let mut mk = matmul(&am, &m);
        for (i, row) in mk.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        m = mk;
        let am_m = matmul(&am, &m);
        let tr: BigRational = (0..n).map(|i| am_m[i][i].clone()).sum();
        coeffs[n - k] = -tr / q(k as i64);
    }
    coeffs
}

/// p-adic valuation of an integer, `None` for zero.
pub fn int_valuation(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        x = q;
        v += 1;
    }
}
