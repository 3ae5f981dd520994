//! Exact rational row reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type QMatrix = Vec<Vec<BigRational>>;

pub fn from_integers(rows: &[Vec<i64>]) -> QMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(a: &mut QMatrix) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &QMatrix) -> usize {
    rref(&mut a.clone()).len()
}

/// Basis of `{x : A x = 0}` with `cols` unknowns.
pub fn kernel(a: &QMatrix, cols: usize) -> QMatrix {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); cols];
        v[free] = BigRational::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

pub fn transpose(a: &QMatrix, cols: usize) -> QMatrix {
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn inverse(a: &QMatrix) -> Option<QMatrix> {
    let n = a.len();
    let mut aug: QMatrix = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mul(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|r| {
            (0..cols)
                .map(|j| (0..inner).fold(BigRational::zero(), |acc, k| acc + &r[k] * &b[k][j]))
                .collect()
        })
        .collect()
}

/// Scale so the first nonzero entry is 1; if that leaves fractions, use
/// the primitive integer multiple with positive leading entry instead.
pub fn normalize_row(row: &mut [BigRational]) {
    let Some(lead) = row.iter().find(|x| !x.is_zero()).cloned() else {
        return;
    };
    for x in row.iter_mut() {
        *x /= &lead;
    }
    if row.iter().all(|x| x.is_integer()) {
        return;
    }
    let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scaled: Vec<BigInt> = row.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    for (x, s) in row.iter_mut().zip(scaled) {
        *x = BigRational::from_integer(s / &g);
    }
    debug_assert!(row.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_positive()));
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}
