//! Damped, shifted Newton iteration shared by the 1D and strip solvers.
//!
//! Each step solves `(J − σI) δ = −r` with `σ = shift_scale·‖r‖∞ + σ_indef`.
//! The residual-proportional part keeps steps along the near-null translation
//! mode of long intervals bounded and vanishes at convergence; `σ_indef` is a
//! pseudo-timestep that a system may request while its Jacobian is indefinite.
//! Steps are backtracked (halving) until the RMS residual decreases and the
//! iterate is admissible.

use crate::solver1d::{SolveError, SolveOptions};

pub(crate) trait NewtonSystem {
    fn unknowns(&self) -> usize;
    fn residual(&self, x: &[f64], r: &mut [f64]);
    /// Solves `(J(x) − shift·I) δ = rhs` in place.
    fn solve_shifted(&self, x: &[f64], shift: f64, rhs: &mut [f64]) -> Result<(), SolveError>;
    fn admissible(&self, x: &[f64]) -> bool;
    fn indefinite_shift(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub residual: f64,
    pub step: f64,
}

pub(crate) fn sup(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rms(r: &[f64]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
}

/// Returns the number of Newton steps taken. `x` holds the converged iterate.
pub(crate) fn solve<S: NewtonSystem>(
    sys: &S,
    x: &mut [f64],
    opts: &SolveOptions,
    log: &mut dyn FnMut(IterRecord),
) -> Result<usize, SolveError> {
    let n = sys.unknowns();
    debug_assert_eq!(x.len(), n);
    let mut r = vec![0.0; n];
    let mut trial_r = vec![0.0; n];
    let mut cand = vec![0.0; n];
    sys.residual(x, &mut r);
    let mut escalation = 1.0;

    for iter in 0..=opts.max_newton_iters {
        let res = sup(&r);
        if !res.is_finite() {
            return Err(SolveError::MaxIters {
                iters: iter,
                residual: res,
            });
        }
        if res <= opts.residual_tol {
            log(IterRecord {
                iter,
                residual: res,
                step: 0.0,
            });
            return Ok(iter);
        }
        if iter == opts.max_newton_iters {
            return Err(SolveError::MaxIters {
                iters: iter,
                residual: res,
            });
        }

        let shift = escalation * opts.shift_scale * res + sys.indefinite_shift(x);
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        sys.solve_shifted(x, shift, &mut delta)?;

        let merit = rms(&r);
        let mut t = 1.0;
        let mut accepted = None;
        let mut any_admissible = false;
        while t >= opts.min_step {
            for ((c, xi), d) in cand.iter_mut().zip(x.iter()).zip(&delta) {
                *c = xi + t * d;
            }
            if sys.admissible(&cand) {
                any_admissible = true;
                sys.residual(&cand, &mut trial_r);
                let m = rms(&trial_r);
                if m.is_finite() && m <= (1.0 - 1e-4 * t) * merit {
                    accepted = Some(t);
                    break;
                }
            }
            t *= 0.5;
        }

        match accepted {
            Some(t) => {
                x.copy_from_slice(&cand);
                std::mem::swap(&mut r, &mut trial_r);
                escalation = (escalation * 0.1).max(1.0);
                log(IterRecord {
                    iter,
                    residual: res,
                    step: t,
                });
            }
            None if !any_admissible => return Err(SolveError::PositivityLost { iter }),
            None => {
                // stiffen the shift toward a gradient-flow step and retry
                escalation *= 10.0;
                log(IterRecord {
                    iter,
                    residual: res,
                    step: 0.0,
                });
            }
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Full unshifted steps from a converged iterate, each kept only if it at
/// least halves the sup residual (at most `max_steps`). Takes an iterate that
/// stopped just under the tolerance down to roundoff, where differences in
/// the far tails become meaningful. Returns the steps kept.
pub(crate) fn polish<S: NewtonSystem>(
    sys: &S,
    x: &mut [f64],
    max_steps: usize,
) -> Result<usize, SolveError> {
    let mut r = vec![0.0; sys.unknowns()];
    sys.residual(x, &mut r);
    for step in 0..max_steps {
        let before = sup(&r);
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        sys.solve_shifted(x, 0.0, &mut delta)?;
        let cand: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi + d).collect();
        if !sys.admissible(&cand) {
            return Ok(step);
        }
        let mut trial = vec![0.0; r.len()];
        sys.residual(&cand, &mut trial);
        let after = sup(&trial);
        if after.is_nan() || after > 0.5 * before {
            return Ok(step);
        }
        x.copy_from_slice(&cand);
        r = trial;
    }
    Ok(max_steps)
}
