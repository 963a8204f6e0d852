//! Block-tridiagonal direct solver with 2×2 blocks.

use crate::model::Mat2;

pub(crate) const ZERO: Mat2 = [[0.0; 2]; 2];

#[inline]
pub(crate) fn scalar(s: f64) -> Mat2 {
    [[s, 0.0], [0.0, s]]
}

#[inline]
fn mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

#[inline]
fn mul_vec(x: &Mat2, y: [f64; 2]) -> [f64; 2] {
    [
        x[0][0] * y[0] + x[0][1] * y[1],
        x[1][0] * y[0] + x[1][1] * y[1],
    ]
}

#[inline]
fn sub(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [x[0][0] - y[0][0], x[0][1] - y[0][1]],
        [x[1][0] - y[1][0], x[1][1] - y[1][1]],
    ]
}

#[inline]
fn inverse(x: &Mat2) -> Option<Mat2> {
    let det = x[0][0] * x[1][1] - x[0][1] * x[1][0];
    let scale = x.iter().flatten().fold(0.0f64, |m, e| m.max(e.abs()));
    if !det.is_finite() || det.abs() <= f64::EPSILON * scale * scale * 1e-3 || scale == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    Some([
        [x[1][1] * inv, -x[0][1] * inv],
        [-x[1][0] * inv, x[0][0] * inv],
    ])
}

/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct BlockTridiag {
    pub lower: Vec<Mat2>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
}

/// Index of the block row whose pivot vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot(pub usize);

impl BlockTridiag {
    pub fn with_len(n: usize) -> Self {
        Self {
            lower: vec![ZERO; n],
            diag: vec![ZERO; n],
            upper: vec![ZERO; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solves in place; `rhs` is interleaved `[x0_0, x0_1, x1_0, ...]`.
    pub fn solve(&self, rhs: &mut [f64]) -> Result<(), SingularPivot> {
        let n = self.len();
        debug_assert_eq!(rhs.len(), 2 * n);
        if n == 0 {
            return Ok(());
        }
        // forward elimination: c'[i] = D'^-1 upper[i], d'[i] = D'^-1 (rhs - lower c'...)
        let mut cprime = vec![ZERO; n];
        let mut prev_c = ZERO;
        let mut prev_d = [0.0; 2];
        for i in 0..n {
            let (pivot, d) = if i == 0 {
                (self.diag[0], [rhs[0], rhs[1]])
            } else {
                let l = &self.lower[i];
                let ld = mul_vec(l, prev_d);
                (
                    sub(&self.diag[i], &mul(l, &prev_c)),
                    [rhs[2 * i] - ld[0], rhs[2 * i + 1] - ld[1]],
                )
            };
            let inv = inverse(&pivot).ok_or(SingularPivot(i))?;
            cprime[i] = mul(&inv, &self.upper[i]);
            let dp = mul_vec(&inv, d);
            rhs[2 * i] = dp[0];
            rhs[2 * i + 1] = dp[1];
            prev_c = cprime[i];
            prev_d = dp;
        }
        for i in (0..n - 1).rev() {
            let next = [rhs[2 * (i + 1)], rhs[2 * (i + 1) + 1]];
            let cx = mul_vec(&cprime[i], next);
            rhs[2 * i] -= cx[0];
            rhs[2 * i + 1] -= cx[1];
        }
        Ok(())
    }

    /// `y = A x`, for checking solves.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            let xi = [x[2 * i], x[2 * i + 1]];
            let mut acc = mul_vec(&self.diag[i], xi);
            if i > 0 {
                let t = mul_vec(&self.lower[i], [x[2 * i - 2], x[2 * i - 1]]);
                acc[0] += t[0];
                acc[1] += t[1];
            }
            if i + 1 < n {
                let t = mul_vec(&self.upper[i], [x[2 * i + 2], x[2 * i + 3]]);
                acc[0] += t[0];
                acc[1] += t[1];
            }
            y[2 * i] = acc[0];
            y[2 * i + 1] = acc[1];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_dominant(n: usize, seed: &[f64]) -> BlockTridiag {
        let mut m = BlockTridiag::with_len(n);
        let s = |k: usize| seed[k % seed.len()];
        for i in 0..n {
            m.lower[i] = [[s(4 * i), s(4 * i + 1)], [s(4 * i + 2), s(4 * i + 3)]];
            m.upper[i] = [[s(4 * i + 3), s(4 * i)], [s(4 * i + 1), s(4 * i + 2)]];
            m.diag[i] = [[6.0 + s(i), s(i + 7)], [s(i + 3), -6.0 - s(i + 1)]];
        }
        m
    }

    proptest! {
        #[test]
        fn solve_inverts_apply(
            n in 1usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 8..32),
            x in proptest::collection::vec(-10.0f64..10.0, 80),
        ) {
            let m = diag_dominant(n, &seed);
            let x = &x[..2 * n];
            let mut b = m.apply(x);
            m.solve(&mut b).unwrap();
            for (got, want) in b.iter().zip(x) {
                prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn reports_singular_pivot() {
        let mut m = BlockTridiag::with_len(3);
        m.diag = vec![scalar(1.0), ZERO, scalar(1.0)];
        let mut rhs = vec![1.0; 6];
        assert_eq!(m.solve(&mut rhs), Err(SingularPivot(1)));
    }
}
