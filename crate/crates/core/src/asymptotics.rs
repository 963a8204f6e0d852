//! Tail decay rates and amplitudes of solved walls.
//!
//! On the right tail `b - u ~ ℓ₁ e^{-λ₋x}` and `v - a ~ ℓ₂ e^{-λ₋x}` with
//! `ℓ₂ = μ ℓ₁`. Rates come from free log-linear fits, amplitudes from fits
//! with the slope frozen at the theoretical rate. When `μ` is small the fast
//! mode `e^{-λ₊x}` (mostly along `v`) is not negligible on the window, so it
//! is fitted alongside as a companion term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid1d::Profile;
use crate::model::{Equilibria, LinearData, ModelError, Params};

/// Ordinates below this are treated as roundoff and end the window.
pub const ORDINATE_CUTOFF: f64 = 1e-12;
/// Minimum number of usable nodes in a fit window.
pub const MIN_WINDOW_NODES: usize = 20;
/// Fits whose log-space residual exceeds this are flagged unreliable.
pub const UNRELIABLE_RMS: f64 = 0.05;
/// Half-width of the band around `α = 1/2` routed to the log-corrected branch.
pub const CRITICAL_ALPHA_BAND: f64 = 1e-6;
/// Relative size of the fast companion at the window start below which it is
/// dropped from amplitude fits.
pub const COMPANION_CUTOFF: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("tail window holds {usable} usable nodes, need {MIN_WINDOW_NODES}")]
    TailTooShort { usable: usize },
    #[error("tail is not positive at x = {x}")]
    NonPositiveTail { x: f64 },
    #[error("invalid fit window [{lo}, {hi}] (fractions of R)")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("equilibria have no ordered wall states")]
    NoWallStates,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FitError {
    pub fn name(&self) -> &'static str {
        match self {
            FitError::TailTooShort { .. } => "TailTooShort",
            FitError::NonPositiveTail { .. } => "NonPositiveTail",
            FitError::InvalidWindow { .. } => "InvalidWindow",
            FitError::NoWallStates => "NoWallStates",
            FitError::Model(e) => e.name(),
        }
    }
}

/// Fit window as fractions of the half-length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        Self { lo: 0.3, hi: 0.8 }
    }
}

impl TailWindow {
    pub fn shifted(self, frac: f64) -> Self {
        Self {
            lo: self.lo + frac,
            hi: self.hi + frac,
        }
    }

    fn validate(&self) -> Result<(), FitError> {
        if self.lo > 0.0 && self.lo < self.hi && self.hi < 1.0 {
            Ok(())
        } else {
            Err(FitError::InvalidWindow {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    LineFit {
        slope,
        intercept,
        rms,
    }
}

/// `log A` for `y ≈ A e^{-rate·x}` with the rate held fixed.
fn frozen_log_amplitude(xs: &[f64], logs: &[f64], rate: f64) -> f64 {
    xs.iter().zip(logs).map(|(x, l)| l + rate * x).sum::<f64>() / xs.len() as f64
}

/// Amplitude `A` of `y ≈ A e^{-rate·x} + B e^{-fast·x}`, fitted as the
/// intercept of `y e^{rate·x}` against `e^{-(fast-rate)x}`. Falls back to the
/// single frozen exponential once the companion is negligible on the window.
fn companion_amplitude(xs: &[f64], ys: &[f64], logs: &[f64], rate: f64, fast: f64) -> f64 {
    let gap = fast - rate;
    if gap <= 0.0 || (-gap * xs[0]).exp() < COMPANION_CUTOFF {
        return frozen_log_amplitude(xs, logs, rate).exp();
    }
    let z: Vec<f64> = xs.iter().map(|x| (-gap * x).exp()).collect();
    let scaled: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y * (rate * x).exp())
        .collect();
    line_fit(&z, &scaled).intercept
}

/// Node range `[start, end)` of a tail window for the ordinate `f`, cut at the
/// first node where `f` drops below [`ORDINATE_CUTOFF`].
fn window_range(prof: &Profile, f: &[f64], win: TailWindow) -> Result<(usize, usize), FitError> {
    win.validate()?;
    let g = prof.grid();
    let r = g.half_length();
    let idx: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let x = g.node(i);
            x >= win.lo * r && x <= win.hi * r
        })
        .collect();
    let Some(&start) = idx.first() else {
        return Err(FitError::TailTooShort { usable: 0 });
    };
    let mut end = start;
    for &i in &idx {
        if f[i] < ORDINATE_CUTOFF {
            break;
        }
        end = i + 1;
    }
    if end - start < MIN_WINDOW_NODES {
        if f[start] <= 0.0 {
            return Err(FitError::NonPositiveTail { x: g.node(start) });
        }
        return Err(FitError::TailTooShort {
            usable: end - start,
        });
    }
    Ok((start, end))
}

fn log_slice(f: &[f64], range: (usize, usize)) -> Vec<f64> {
    f[range.0..range.1].iter().map(|y| y.ln()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Free-slope decay exponent of `b - u`.
    pub rate_u: f64,
    /// Free-slope decay exponent of `v - a`.
    pub rate_v: f64,
    /// Amplitude of `b - u` against `e^{-λ₋x}`.
    pub ell1: f64,
    /// Amplitude of `v - a` against `e^{-λ₋x}`.
    pub ell2: f64,
    pub window: [f64; 2],
    /// Larger of the two log-space residuals of the free fits.
    pub residual_rms: f64,
}

impl TailFit {
    pub fn reliable(&self) -> bool {
        self.residual_rms <= UNRELIABLE_RMS
    }

    pub fn amplitude_ratio(&self) -> f64 {
        self.ell2 / self.ell1
    }
}

/// Right-tail fit with the default window `[0.3R, 0.8R]`.
pub fn fit_decay(prof: &Profile, eq: &Equilibria, ld: &LinearData) -> Result<TailFit, FitError> {
    fit_decay_window(prof, eq, ld, TailWindow::default())
}

pub fn fit_decay_window(
    prof: &Profile,
    eq: &Equilibria,
    ld: &LinearData,
    win: TailWindow,
) -> Result<TailFit, FitError> {
    let (a, b) = eq.ab().ok_or(FitError::NoWallStates)?;
    let du: Vec<f64> = prof.u().iter().map(|u| b - u).collect();
    let dv: Vec<f64> = prof.v().iter().map(|v| v - a).collect();
    let ru = window_range(prof, &du, win)?;
    let rv = window_range(prof, &dv, win)?;
    let range = (ru.0, ru.1.min(rv.1));
    if range.1 - range.0 < MIN_WINDOW_NODES {
        return Err(FitError::TailTooShort {
            usable: range.1 - range.0,
        });
    }
    let nodes = prof.grid().nodes();
    let xs = &nodes[range.0..range.1];
    let lu = log_slice(&du, range);
    let lv = log_slice(&dv, range);
    let fu = line_fit(xs, &lu);
    let fv = line_fit(xs, &lv);
    let lam = ld.lambda_minus;
    Ok(TailFit {
        rate_u: -fu.slope,
        rate_v: -fv.slope,
        ell1: companion_amplitude(xs, &du[range.0..range.1], &lu, lam, ld.lambda_plus),
        ell2: companion_amplitude(xs, &dv[range.0..range.1], &lv, lam, ld.lambda_plus),
        window: [xs[0], xs[xs.len() - 1]],
        residual_rms: fu.rms.max(fv.rms),
    })
}

/// Left-tail fit: `b - v` and `u - a` as `x → -∞`, read off the right tail of
/// the swap-reflected profile. `ell1` is the amplitude of `b - v`, `ell2` of
/// `u - a`.
pub fn fit_left_tail(
    prof: &Profile,
    eq: &Equilibria,
    ld: &LinearData,
) -> Result<TailFit, FitError> {
    fit_decay(&prof.swap_reflect(), eq, ld)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundCheck {
    pub pass: bool,
    /// `min (b - u) e^{b√2 x}` over the window; positive when the bound holds there.
    pub epsilon: f64,
    pub rate_u: f64,
    /// `b√2`.
    pub bound_rate: f64,
}

/// Relative slack allowed on `rate_u ≤ b√2`.
pub const LOWER_BOUND_RATE_SLACK: f64 = 0.02;

/// Checks `b - u(x) ≥ ε e^{-b√2 x}` on the right tail.
pub fn check_lower_bound(prof: &Profile, eq: &Equilibria) -> Result<LowerBoundCheck, FitError> {
    let b = eq.b().ok_or(FitError::NoWallStates)?;
    let du: Vec<f64> = prof.u().iter().map(|u| b - u).collect();
    let range = window_range(prof, &du, TailWindow::default())?;
    let nodes = prof.grid().nodes();
    let xs = &nodes[range.0..range.1];
    let fit = line_fit(xs, &log_slice(&du, range));
    let bound_rate = b * std::f64::consts::SQRT_2;
    let epsilon = xs
        .iter()
        .zip(&du[range.0..range.1])
        .map(|(x, d)| d * (bound_rate * x).exp())
        .fold(f64::INFINITY, f64::min);
    let rate_u = -fit.slope;
    Ok(LowerBoundCheck {
        pass: rate_u <= bound_rate * (1.0 + LOWER_BOUND_RATE_SLACK) && epsilon > 0.0,
        epsilon,
        rate_u,
        bound_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaZeroBranch {
    /// `α > 1/2`: `b - u` decays at `√2`.
    Above,
    /// `α < 1/2`: `b - u` decays at `2√α`, slaved to `v²`.
    Below,
    /// `α = 1/2`: `b - u ≈ ℓ* x e^{-√2 x}`.
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaZeroReport {
    pub branch: OmegaZeroBranch,
    pub rate_v: f64,
    pub rate_v_theory: f64,
    /// Free-slope fit of `b - u`; for the critical branch this still carries
    /// the algebraic factor and is reported for comparison only.
    pub rate_u: f64,
    pub rate_u_theory: f64,
    /// `lim v e^{√α x}`.
    pub ell2_tilde: f64,
    /// Amplitude of `b - u` against its leading behaviour: `e^{-√2x}`,
    /// `e^{-2√α x}`, or `x e^{-√2 x}` by branch.
    pub ell1_tilde: f64,
    /// Predicted `ell1_tilde` from `ell2_tilde` where the theory fixes it.
    pub ell1_theory: Option<f64>,
    pub window_u: [f64; 2],
    pub window_v: [f64; 2],
}

impl OmegaZeroReport {
    pub fn amplitude_rel_err(&self) -> Option<f64> {
        self.ell1_theory.map(|t| ((self.ell1_tilde - t) / t).abs())
    }
}

pub fn omega_zero_branch(alpha: f64) -> OmegaZeroBranch {
    if (alpha - 0.5).abs() <= CRITICAL_ALPHA_BAND {
        OmegaZeroBranch::Critical
    } else if alpha > 0.5 {
        OmegaZeroBranch::Above
    } else {
        OmegaZeroBranch::Below
    }
}

/// Tail analysis of an `ω = 0` wall (`a = 0`, `b = 1`).
pub fn omega_zero_asymptotics(alpha: f64, prof: &Profile) -> Result<OmegaZeroReport, FitError> {
    Params::new(alpha, 0.0)?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let nodes = prof.grid().nodes();
    let win = TailWindow::default();

    let v: Vec<f64> = prof.v().to_vec();
    let rv = window_range(prof, &v, win)?;
    let xv = &nodes[rv.0..rv.1];
    let lv = log_slice(&v, rv);
    let rate_v = -line_fit(xv, &lv).slope;
    let rate_v_theory = alpha.sqrt();
    let ell2_tilde = frozen_log_amplitude(xv, &lv, rate_v_theory).exp();

    let du: Vec<f64> = prof.u().iter().map(|u| 1.0 - u).collect();
    let ru = window_range(prof, &du, win)?;
    let xu = &nodes[ru.0..ru.1];
    let lu = log_slice(&du, ru);
    let rate_u = -line_fit(xu, &lu).slope;

    let branch = omega_zero_branch(alpha);
    let (rate_u_theory, ell1_tilde, ell1_theory) = match branch {
        OmegaZeroBranch::Above => (sqrt2, frozen_log_amplitude(xu, &lu, sqrt2).exp(), None),
        OmegaZeroBranch::Below => {
            let r = 2.0 * alpha.sqrt();
            let theory = (alpha + 1.0) * ell2_tilde * ell2_tilde / (2.0 * (1.0 - 2.0 * alpha));
            (r, frozen_log_amplitude(xu, &lu, r).exp(), Some(theory))
        }
        OmegaZeroBranch::Critical => {
            // (b - u) e^{√2 x} = ℓ* x + O(1): the slope is ℓ*
            let scaled: Vec<f64> = xu
                .iter()
                .zip(&du[ru.0..ru.1])
                .map(|(x, d)| d * (sqrt2 * x).exp())
                .collect();
            let fit = line_fit(xu, &scaled);
            let theory = 3.0 * ell2_tilde * ell2_tilde / (4.0 * sqrt2);
            (sqrt2, fit.slope, Some(theory))
        }
    };

    Ok(OmegaZeroReport {
        branch,
        rate_v,
        rate_v_theory,
        rate_u,
        rate_u_theory,
        ell2_tilde,
        ell1_tilde,
        ell1_theory,
        window_u: [xu[0], xu[xu.len() - 1]],
        window_v: [xv[0], xv[xv.len() - 1]],
    })
}

/// Serialized fit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub alpha: f64,
    pub omega: f64,
    #[serde(rename = "R")]
    pub half_length: f64,
    pub h: f64,
    pub rate_u: f64,
    pub rate_v: f64,
    pub lambda_minus_theory: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub mu_theory: Option<f64>,
    pub window: [f64; 2],
    pub residual_rms: f64,
}

impl FitReport {
    pub fn new(p: &Params, prof: &Profile, ld: &LinearData, fit: &TailFit) -> Self {
        Self {
            alpha: p.alpha,
            omega: p.omega,
            half_length: prof.grid().half_length(),
            h: prof.grid().spacing(),
            rate_u: fit.rate_u,
            rate_v: fit.rate_v,
            lambda_minus_theory: ld.lambda_minus,
            ell1: fit.ell1,
            ell2: fit.ell2,
            mu_theory: ld.mu,
            window: fit.window,
            residual_rms: fit.residual_rms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid1d::Grid;
    use crate::model::{equilibria, linear_data};

    fn setup(alpha: f64, omega: f64) -> (Params, Equilibria, LinearData) {
        let p = Params::new(alpha, omega).unwrap();
        (p, equilibria(&p), linear_data(&p).unwrap())
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -1.5 * x + 0.25).collect();
        let f = line_fit(&xs, &ys);
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!((f.intercept - 0.25).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn synthetic_tail_is_recovered() {
        let (_, eq, ld) = setup(1.0, 0.2);
        let (a, b) = eq.ab().unwrap();
        let mu = ld.mu.unwrap();
        let lam = ld.lambda_minus;
        let g = Grid::with_spacing(20.0, 0.01).unwrap();
        let prof = Profile::from_fn(g, |x| {
            let e = (-lam * x).exp();
            (b - e, a + mu * e)
        })
        .unwrap();
        let fit = fit_decay(&prof, &eq, &ld).unwrap();
        assert!((fit.rate_u - lam).abs() < 1e-6);
        assert!((fit.rate_v - lam).abs() < 1e-6);
        assert!((fit.ell1 - 1.0).abs() < 1e-6);
        assert!((fit.ell2 - mu).abs() < 1e-6);
        assert!(fit.reliable());
        assert!(fit.window[0] >= 6.0 && fit.window[1] <= 16.0);
    }

    #[test]
    fn constant_profile_has_no_tail() {
        let (_, eq, ld) = setup(2.0, 0.5);
        let (a, b) = eq.ab().unwrap();
        let g = Grid::with_spacing(20.0, 0.01).unwrap();
        let prof = Profile::constant(g, b, a).unwrap();
        assert!(matches!(
            fit_decay(&prof, &eq, &ld),
            Err(FitError::NonPositiveTail { .. })
        ));
        assert!(matches!(
            check_lower_bound(&prof, &eq),
            Err(FitError::NonPositiveTail { .. })
        ));
    }

    #[test]
    fn fast_tail_is_too_short() {
        let (_, eq, ld) = setup(2.0, 0.5);
        let (a, b) = eq.ab().unwrap();
        let g = Grid::with_spacing(20.0, 0.2).unwrap();
        let prof = Profile::from_fn(g, |x| {
            let e = (-3.0 * x).exp();
            (b - e, a + e)
        })
        .unwrap();
        assert!(matches!(
            fit_decay(&prof, &eq, &ld),
            Err(FitError::TailTooShort { .. })
        ));
    }

    #[test]
    fn lower_bound_detects_fast_decay() {
        let (_, eq, _) = setup(2.0, 0.5);
        let (a, b) = eq.ab().unwrap();
        let g = Grid::with_spacing(20.0, 0.01).unwrap();
        let slow = Profile::from_fn(g, |x| (b - (-x).exp(), a + (-x).exp())).unwrap();
        let ok = check_lower_bound(&slow, &eq).unwrap();
        assert!(ok.pass && ok.epsilon > 0.0);
        let r = 2.0 * b * std::f64::consts::SQRT_2;
        let fast = Profile::from_fn(g, |x| (b - (-r * x).exp(), a + (-r * x).exp())).unwrap();
        let bad = check_lower_bound(&fast, &eq).unwrap();
        assert!(!bad.pass);
        assert!((bad.rate_u - r).abs() < 1e-6);
    }

    #[test]
    fn omega_zero_synthetic_v_tail() {
        let alpha: f64 = 4.0;
        let g = Grid::with_spacing(15.0, 0.005).unwrap();
        let prof = Profile::from_fn(g, |x| {
            (
                1.0 - 0.3 * (-std::f64::consts::SQRT_2 * x).exp(),
                (-alpha.sqrt() * x).exp(),
            )
        })
        .unwrap();
        let rep = omega_zero_asymptotics(alpha, &prof).unwrap();
        assert_eq!(rep.branch, OmegaZeroBranch::Above);
        assert!((rep.rate_v - 2.0).abs() < 1e-6);
        assert!((rep.ell2_tilde - 1.0).abs() < 1e-6);
        assert!((rep.rate_u - std::f64::consts::SQRT_2).abs() < 1e-6);
        assert!((rep.ell1_tilde - 0.3).abs() < 1e-6);
        assert!(rep.ell1_theory.is_none());
    }

    #[test]
    fn omega_zero_synthetic_branches() {
        let s2 = std::f64::consts::SQRT_2;
        let g = Grid::with_spacing(40.0, 0.01).unwrap();
        // α < 1/2 with the predicted slaved amplitude
        let alpha: f64 = 0.25;
        let l2: f64 = 0.7;
        let l1 = (alpha + 1.0) * l2 * l2 / (2.0 * (1.0 - 2.0 * alpha));
        let prof = Profile::from_fn(g, |x| {
            (
                1.0 - l1 * (-2.0 * alpha.sqrt() * x).exp(),
                l2 * (-alpha.sqrt() * x).exp(),
            )
        })
        .unwrap();
        let rep = omega_zero_asymptotics(alpha, &prof).unwrap();
        assert_eq!(rep.branch, OmegaZeroBranch::Below);
        assert!(rep.amplitude_rel_err().unwrap() < 1e-6);

        // α = 1/2: x e^{-√2 x} plus a pure exponential companion
        let alpha: f64 = 0.5 + 1e-7;
        let ls = 3.0 * l2 * l2 / (4.0 * s2);
        let prof = Profile::from_fn(g, |x| {
            (
                1.0 - (ls * x + 0.2) * (-s2 * x).exp(),
                l2 * (-(0.5f64).sqrt() * x).exp(),
            )
        })
        .unwrap();
        let rep = omega_zero_asymptotics(alpha, &prof).unwrap();
        assert_eq!(rep.branch, OmegaZeroBranch::Critical);
        assert!(rep.amplitude_rel_err().unwrap() < 1e-5);
    }

    #[test]
    fn branch_routing() {
        assert_eq!(omega_zero_branch(0.5 + 5e-7), OmegaZeroBranch::Critical);
        assert_eq!(omega_zero_branch(0.5 - 5e-7), OmegaZeroBranch::Critical);
        assert_eq!(omega_zero_branch(0.500002), OmegaZeroBranch::Above);
        assert_eq!(omega_zero_branch(0.25), OmegaZeroBranch::Below);
    }

    #[test]
    fn fit_report_serializes_all_fields() {
        let (p, eq, ld) = setup(1.0, 0.2);
        let (a, b) = eq.ab().unwrap();
        let lam = ld.lambda_minus;
        let g = Grid::with_spacing(20.0, 0.01).unwrap();
        let prof = Profile::from_fn(g, |x| (b - (-lam * x).exp(), a + (-lam * x).exp())).unwrap();
        let fit = fit_decay(&prof, &eq, &ld).unwrap();
        let json = serde_json::to_value(FitReport::new(&p, &prof, &ld, &fit)).unwrap();
        for key in [
            "alpha",
            "omega",
            "R",
            "h",
            "rate_u",
            "rate_v",
            "lambda_minus_theory",
            "ell1",
            "ell2",
            "mu_theory",
            "window",
            "residual_rms",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
