use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solves `(I − β P) X = B` for row-major `P` (`n × n`) and `B` (`n × k`),
/// returning `X` row-major.
pub(crate) fn solve_resolvent(p: &[f64], n: usize, beta: f64, rhs: &[f64], k: usize, goal: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - beta * p[i * n + j]);
    let b = DMatrix::from_fn(n, k, |i, j| rhs[i * k + j]);
    let x = a.lu().solve(&b).ok_or(Error::Singular { goal })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { goal });
    }
    Ok((0..n * k).map(|idx| x[(idx / k, idx % k)]).collect())
}

/// Row vector times matrix: `out_j = Σ_i v_i m_ij`.
pub(crate) fn vec_mat(v: &[f64], m: &[f64], n: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (o, &mij) in out.iter_mut().zip(&m[i * n..(i + 1) * n]) {
            *o += vi * mij;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_resolvent() {
        // P swaps the states; (I − ½P)^{-1} = [[4/3, 2/3], [2/3, 4/3]].
        let x = solve_resolvent(&[0.0, 1.0, 1.0, 0.0], 2, 0.5, &[1.0, 0.0, 0.0, 1.0], 2, 0).unwrap();
        let expect = [4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        assert_eq!(
            solve_resolvent(&[1.0], 1, 1.0, &[1.0], 1, 3),
            Err(Error::Singular { goal: 3 })
        );
    }
}
