//! Numerical certificates: named pass/fail records for every property a wall
//! (or a constant solution) is known to have.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{
    check_lower_bound, fit_decay, omega_zero_asymptotics, FitError, OmegaZeroBranch,
};
use crate::grid1d::{first_derivative, recenter, symmetry_center, GridError, Profile};
use crate::model::{equilibria, hamiltonian, linear_data, Equilibria, Params, Regime};
use crate::solver1d::residual;

/// Reference tags carried by check records.
pub mod refs {
    pub const STATIONARY_SYSTEM: &str = "stationary-system";
    pub const A_PRIORI_BOUNDS: &str = "a-priori-bounds";
    pub const SUM_BOUNDS: &str = "u+v-bounds";
    pub const TRICHOTOMY: &str = "trichotomy";
    pub const MONOTONICITY: &str = "monotonicity";
    pub const HAMILTONIAN: &str = "hamiltonian-first-integral";
    pub const TAIL_LIMITS: &str = "tail-decay-limits";
    pub const DECAY_LOWER_BOUND: &str = "decay-lower-bound";
    pub const OMEGA_ZERO: &str = "omega-zero-asymptotics";
    pub const UNIQUENESS: &str = "uniqueness-up-to-translation";
    pub const CONSTANT_REGIME: &str = "constant-solution-regime";
    pub const ONE_DIMENSIONAL: &str = "one-dimensional-symmetry";

    pub const ALL: &[&str] = &[
        STATIONARY_SYSTEM,
        A_PRIORI_BOUNDS,
        SUM_BOUNDS,
        TRICHOTOMY,
        MONOTONICITY,
        HAMILTONIAN,
        TAIL_LIMITS,
        DECAY_LOWER_BOUND,
        OMEGA_ZERO,
        UNIQUENESS,
        CONSTANT_REGIME,
        ONE_DIMENSIONAL,
    ];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("profiles belong to different parameters ({0:?} vs {1:?})")]
    IncompatibleParams(Params, Params),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// All check tolerances in one place. Field names double as override keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub residual: f64,
    pub bounds: f64,
    pub trichotomy: f64,
    /// Differences between values this close to the end states are below
    /// resolution; there a decrease of at most this much (roundoff) is accepted.
    pub monotone_saturation: f64,
    pub hamiltonian_spread_factor: f64,
    pub hamiltonian_mean: f64,
    pub hamiltonian_max: f64,
    pub decay_rate_rel: f64,
    pub amplitude_ratio_rel: f64,
    pub lower_bound_slack: f64,
    pub omega_zero_rate_rel: f64,
    pub omega_zero_amplitude_rel: f64,
    pub sliding: f64,
    pub swap_reflection: f64,
    pub constant_regime: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            bounds: 1e-6,
            trichotomy: 1e-8,
            monotone_saturation: 1e-12,
            hamiltonian_spread_factor: 10.0,
            hamiltonian_mean: 1e-5,
            hamiltonian_max: 1e-6,
            decay_rate_rel: 0.02,
            amplitude_ratio_rel: 0.02,
            lower_bound_slack: 0.02,
            omega_zero_rate_rel: 0.02,
            omega_zero_amplitude_rel: 0.05,
            sliding: 1e-6,
            swap_reflection: 1e-6,
            constant_regime: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Value(f64),
    Interval([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub paper_ref: String,
    pub measured: f64,
    pub target: Target,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(
        name: &str,
        reference: &str,
        measured: f64,
        target: Target,
        tolerance: f64,
        pass: bool,
    ) -> Self {
        Self {
            name: name.to_string(),
            paper_ref: reference.to_string(),
            // non-finite numbers have no JSON form; they never pass anyway
            measured: if measured.is_finite() {
                measured
            } else {
                f64::MAX
            },
            target,
            tolerance,
            pass: pass && measured.is_finite(),
        }
    }

    /// `measured ≤ target + tolerance`.
    fn at_most(name: &str, reference: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            reference,
            measured,
            Target::Value(target),
            tolerance,
            measured <= target + tolerance,
        )
    }

    /// `measured ≥ target − tolerance`.
    fn at_least(name: &str, reference: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            reference,
            measured,
            Target::Value(target),
            tolerance,
            measured >= target - tolerance,
        )
    }

    /// `|measured − target| ≤ tolerance`.
    fn near(name: &str, reference: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            reference,
            measured,
            Target::Value(target),
            tolerance,
            (measured - target).abs() <= tolerance,
        )
    }

    fn within(
        name: &str,
        reference: &str,
        measured: f64,
        lo: f64,
        hi: f64,
        tolerance: f64,
    ) -> Self {
        Self::new(
            name,
            reference,
            measured,
            Target::Interval([lo, hi]),
            tolerance,
            measured >= lo - tolerance && measured <= hi + tolerance,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub alpha: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    #[serde(rename = "R")]
    pub half_length: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: ParamsRecord,
    pub grid: GridRecord,
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

impl Certificate {
    pub fn new(p: &Params, prof: &Profile, checks: Vec<CheckRecord>) -> Self {
        let overall_pass = checks.iter().all(|c| c.pass);
        Self {
            params: ParamsRecord {
                alpha: p.alpha,
                omega: p.omega,
            },
            grid: GridRecord {
                half_length: prof.grid().half_length(),
                h: prof.grid().spacing(),
            },
            checks,
            overall_pass,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate is plain data");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trichotomy {
    ConstantAB,
    ConstantBA,
    StrictlyInside,
}

impl Trichotomy {
    pub fn label(self) -> &'static str {
        match self {
            Trichotomy::ConstantAB => "constant_ab",
            Trichotomy::ConstantBA => "constant_ba",
            Trichotomy::StrictlyInside => "strictly_inside",
        }
    }
}

/// Sup distance to the nearer of `(a,b)`, `(b,a)` and the resulting label.
pub fn classify(eq: &Equilibria, prof: &Profile, tol: &Tolerances) -> Option<(Trichotomy, f64)> {
    let (a, b) = eq.ab()?;
    let dab = prof.distance_to_constant(a, b);
    let dba = prof.distance_to_constant(b, a);
    Some(if dab < tol.trichotomy && dab <= dba {
        (Trichotomy::ConstantAB, dab)
    } else if dba < tol.trichotomy {
        (Trichotomy::ConstantBA, dba)
    } else {
        (Trichotomy::StrictlyInside, dab.min(dba))
    })
}

fn wrong_regime(p: &Params, reference: &str) -> CheckRecord {
    CheckRecord::new(
        "WrongRegime",
        reference,
        p.ratio(),
        Target::Value(0.5),
        0.0,
        false,
    )
}

fn fold_max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

fn fold_min(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

/// Node-wise bounds: `u²+v² ≤ 1`, `uv ≥ ω/α`, `a ≤ u,v ≤ b`, the two-sided
/// bound on `u+v`, and the trichotomy label.
pub fn certify_bounds(
    p: &Params,
    eq: &Equilibria,
    prof: &Profile,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let Some((a, b)) = eq.ab() else {
        return vec![wrong_regime(p, refs::A_PRIORI_BOUNDS)];
    };
    let t = tol.bounds;
    let pairs = || prof.u().iter().zip(prof.v()).map(|(&u, &v)| (u, v));
    let ratio = p.ratio();
    let q = (2.0 + p.alpha) / 4.0;
    let sum_lo = ((1.0 + p.omega) / q.max(1.0)).sqrt();
    let sum_hi = ((1.0 + p.omega) / q.min(1.0)).sqrt();
    let mut out = vec![
        CheckRecord::at_most(
            "norm_le_one",
            refs::A_PRIORI_BOUNDS,
            fold_max(pairs().map(|(u, v)| u * u + v * v - 1.0)),
            0.0,
            t,
        ),
        CheckRecord::at_least(
            "product_ge_ratio",
            refs::A_PRIORI_BOUNDS,
            fold_min(pairs().map(|(u, v)| u * v - ratio)),
            0.0,
            t,
        ),
        CheckRecord::at_least(
            "lower_box",
            refs::A_PRIORI_BOUNDS,
            fold_min(pairs().map(|(u, v)| u.min(v))),
            a,
            t,
        ),
        CheckRecord::at_most(
            "upper_box",
            refs::A_PRIORI_BOUNDS,
            fold_max(pairs().map(|(u, v)| u.max(v))),
            b,
            t,
        ),
        CheckRecord::within(
            "sum_min",
            refs::SUM_BOUNDS,
            fold_min(pairs().map(|(u, v)| u + v)),
            sum_lo,
            sum_hi,
            t,
        ),
        CheckRecord::within(
            "sum_max",
            refs::SUM_BOUNDS,
            fold_max(pairs().map(|(u, v)| u + v)),
            sum_lo,
            sum_hi,
            t,
        ),
    ];
    if let Some((label, dist)) = classify(eq, prof, tol) {
        // the label is informational; a non-constant profile is held to the
        // box bounds above
        out.push(CheckRecord::new(
            &format!("trichotomy_{}", label.label()),
            refs::TRICHOTOMY,
            dist,
            Target::Value(tol.trichotomy),
            tol.trichotomy,
            true,
        ));
    }
    out
}

/// Smallest first difference of `sign·f` over the resolved part of the
/// profile, and whether the saturated part is non-decreasing up to roundoff. `None` when no
/// difference is resolved.
fn monotone_margin(f: &[f64], sign: f64, saturation: f64) -> (Option<f64>, bool) {
    let (first, last) = (f[0], f[f.len() - 1]);
    let saturated = |x: f64| (x - first).abs() <= saturation || (x - last).abs() <= saturation;
    let mut resolved: Option<f64> = None;
    let mut saturated_ok = true;
    for w in f.windows(2) {
        let d = sign * (w[1] - w[0]);
        if saturated(w[0]) && saturated(w[1]) {
            saturated_ok &= d >= -saturation;
        } else {
            resolved = Some(resolved.map_or(d, |m: f64| m.min(d)));
        }
    }
    (resolved, saturated_ok)
}

/// Strictly increasing `u`, strictly decreasing `v`.
///
/// Where both neighbours sit within `monotone_saturation` of an end state the
/// difference is below what double precision resolves around that state, and
/// only `≥ -monotone_saturation` is required there. A profile with no resolved
/// difference fails.
pub fn certify_monotone(prof: &Profile, tol: &Tolerances) -> Vec<CheckRecord> {
    let rec = |name: &str, f: &[f64], sign: f64| {
        let (margin, sat_ok) = monotone_margin(f, sign, tol.monotone_saturation);
        let net = sign * (f[f.len() - 1] - f[0]) > 0.0;
        let m = margin.unwrap_or(0.0);
        CheckRecord::new(
            name,
            refs::MONOTONICITY,
            m,
            Target::Value(0.0),
            0.0,
            margin.is_some() && m > 0.0 && sat_ok && net,
        )
    };
    vec![
        rec("increasing_u", prof.u(), 1.0),
        rec("decreasing_v", prof.v(), -1.0),
    ]
}

/// Values of the first integral at every node.
pub fn hamiltonian_values(p: &Params, prof: &Profile) -> Vec<f64> {
    let (du, dv) = first_derivative(prof);
    (0..prof.grid().len())
        .map(|i| hamiltonian(p, prof.u()[i], prof.v()[i], du[i], dv[i]))
        .collect()
}

/// Spread of the first integral against `factor·h²·max(u'²+v'²)`; for
/// continuation-final profiles also its mean against zero.
pub fn certify_hamiltonian(
    p: &Params,
    prof: &Profile,
    final_stage: bool,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let hs = hamiltonian_values(p, prof);
    let (du, dv) = first_derivative(prof);
    let scale = fold_max(du.iter().zip(&dv).map(|(a, b)| a * a + b * b));
    let h = prof.grid().spacing();
    let spread = fold_max(hs.iter().copied()) - fold_min(hs.iter().copied());
    let mut out = vec![CheckRecord::at_most(
        "hamiltonian_spread",
        refs::HAMILTONIAN,
        spread,
        0.0,
        tol.hamiltonian_spread_factor * h * h * scale,
    )];
    if final_stage {
        let mean = hs.iter().sum::<f64>() / hs.len() as f64;
        out.push(CheckRecord::near(
            "hamiltonian_mean",
            refs::HAMILTONIAN,
            mean,
            0.0,
            tol.hamiltonian_mean,
        ));
    }
    out
}

/// `max |h|` against zero. The discretization error of `h` is `O(h²)` with a
/// constant that grows with `α`, so this absolute bound is only meaningful on
/// sufficiently fine grids and is not part of [`certify_profile`].
pub fn certify_hamiltonian_max(p: &Params, prof: &Profile, tol: &Tolerances) -> CheckRecord {
    let max_abs = fold_max(hamiltonian_values(p, prof).iter().map(|x| x.abs()));
    CheckRecord::at_most(
        "hamiltonian_max_abs",
        refs::HAMILTONIAN,
        max_abs,
        0.0,
        tol.hamiltonian_max,
    )
}

/// Sup norm of the discrete Dirichlet residual.
pub fn certify_residual(p: &Params, prof: &Profile, tol: &Tolerances) -> CheckRecord {
    let r = fold_max(residual(p, prof).iter().map(|x| x.abs()));
    CheckRecord::at_most(
        "residual",
        refs::STATIONARY_SYSTEM,
        r.max(0.0),
        0.0,
        tol.residual,
    )
}

/// Tail rates and amplitude ratio against the linearization; for `ω = 0` the
/// branch-specific rates and amplitude relation instead.
pub fn certify_decay(p: &Params, prof: &Profile, tol: &Tolerances) -> Vec<CheckRecord> {
    let eq = equilibria(p);
    let fit_failure = |e: FitError| {
        CheckRecord::new(
            &format!("tail_fit_{}", e.name()),
            refs::TAIL_LIMITS,
            0.0,
            Target::Value(0.0),
            0.0,
            false,
        )
    };
    match p.regime() {
        Regime::ConstantOnly => vec![wrong_regime(p, refs::TAIL_LIMITS)],
        Regime::OmegaZero => match omega_zero_asymptotics(p.alpha, prof) {
            Err(e) => vec![fit_failure(e)],
            Ok(rep) => {
                let rt = tol.omega_zero_rate_rel;
                let mut out = vec![CheckRecord::near(
                    "omega_zero_rate_v",
                    refs::OMEGA_ZERO,
                    rep.rate_v,
                    rep.rate_v_theory,
                    rt * rep.rate_v_theory,
                )];
                if rep.branch != OmegaZeroBranch::Critical {
                    out.push(CheckRecord::near(
                        "omega_zero_rate_u",
                        refs::OMEGA_ZERO,
                        rep.rate_u,
                        rep.rate_u_theory,
                        rt * rep.rate_u_theory,
                    ));
                }
                if let Some(theory) = rep.ell1_theory {
                    out.push(CheckRecord::near(
                        "omega_zero_amplitude",
                        refs::OMEGA_ZERO,
                        rep.ell1_tilde,
                        theory,
                        tol.omega_zero_amplitude_rel * theory,
                    ));
                }
                out
            }
        },
        Regime::Heteroclinic => {
            let ld = match linear_data(p) {
                Ok(ld) => ld,
                Err(_) => return vec![wrong_regime(p, refs::TAIL_LIMITS)],
            };
            let fit = match fit_decay(prof, &eq, &ld) {
                Ok(f) => f,
                Err(e) => return vec![fit_failure(e)],
            };
            let lam = ld.lambda_minus;
            let mu = ld.mu.unwrap_or(f64::NAN);
            let mut out = vec![
                CheckRecord::near(
                    "decay_rate_u",
                    refs::TAIL_LIMITS,
                    fit.rate_u,
                    lam,
                    tol.decay_rate_rel * lam,
                ),
                CheckRecord::near(
                    "decay_rate_v",
                    refs::TAIL_LIMITS,
                    fit.rate_v,
                    lam,
                    tol.decay_rate_rel * lam,
                ),
                CheckRecord::near(
                    "amplitude_ratio",
                    refs::TAIL_LIMITS,
                    fit.amplitude_ratio(),
                    mu,
                    tol.amplitude_ratio_rel * mu,
                ),
            ];
            match check_lower_bound(prof, &eq) {
                Ok(lb) => out.push(CheckRecord::new(
                    "decay_lower_bound",
                    refs::DECAY_LOWER_BOUND,
                    lb.rate_u,
                    Target::Value(lb.bound_rate),
                    tol.lower_bound_slack * lb.bound_rate,
                    lb.rate_u <= lb.bound_rate * (1.0 + tol.lower_bound_slack) && lb.epsilon > 0.0,
                )),
                Err(e) => out.push(fit_failure(e)),
            }
            out
        }
    }
}

/// `v(x_s + t) = u(x_s − t)` about the centre `x_s` where `u = v`.
pub fn certify_swap_reflection(prof: &Profile, tol: &Tolerances) -> CheckRecord {
    let g = prof.grid();
    let r = g.half_length();
    let dev = match symmetry_center(prof) {
        None => f64::INFINITY,
        Some(xs) => fold_max((0..g.len()).filter_map(|i| {
            let x = g.node(i);
            let mirror = 2.0 * xs - x;
            (mirror.abs() <= r).then(|| (prof.v()[i] - prof.sample(mirror).0).abs())
        })),
    };
    CheckRecord::at_most(
        "swap_reflection",
        refs::UNIQUENESS,
        dev,
        0.0,
        tol.swap_reflection,
    )
}

/// Sup-norm difference of two walls after recentering, on their common interval.
pub fn sliding_distance(eq: &Equilibria, a: &Profile, b: &Profile) -> Result<f64, GridError> {
    let ra = recenter(a, eq)?;
    let rb = recenter(b, eq)?;
    let common = ra.grid().half_length().min(rb.grid().half_length());
    let g = ra.grid();
    Ok(fold_max((0..g.len()).filter_map(|i| {
        let x = g.node(i);
        (x.abs() <= common).then(|| {
            let (ub, vb) = rb.sample(x);
            (ra.u()[i] - ub).abs().max((ra.v()[i] - vb).abs())
        })
    }))
    .max(0.0))
}

pub fn sliding_test(
    (pa, a): (&Params, &Profile),
    (pb, b): (&Params, &Profile),
    tol: &Tolerances,
) -> Result<CheckRecord, CertifyError> {
    if pa != pb {
        return Err(CertifyError::IncompatibleParams(*pa, *pb));
    }
    let d = sliding_distance(&equilibria(pa), a, b)?;
    Ok(CheckRecord::at_most(
        "sliding",
        refs::UNIQUENESS,
        d,
        0.0,
        tol.sliding,
    ))
}

/// Deviation from `(c, c)`; a `WrongRegime` record outside the constant-only regime.
pub fn certify_constant_regime(p: &Params, prof: &Profile, tol: &Tolerances) -> Vec<CheckRecord> {
    if p.regime() != Regime::ConstantOnly {
        return vec![wrong_regime(p, refs::CONSTANT_REGIME)];
    }
    let c = equilibria(p).c;
    vec![CheckRecord::new(
        "constant_cc",
        refs::CONSTANT_REGIME,
        prof.distance_to_constant(c, c),
        Target::Value(c),
        tol.constant_regime,
        prof.distance_to_constant(c, c) <= tol.constant_regime,
    )]
}

/// Full certificate of a continuation-final profile. In the constant-only
/// regime this is the `(c, c)` check; otherwise residual, bounds,
/// monotonicity, first integral, tails, swap reflection, and sliding against
/// `partner` when one is given.
pub fn certify_profile(
    p: &Params,
    prof: &Profile,
    partner: Option<&Profile>,
    tol: &Tolerances,
) -> Result<Certificate, CertifyError> {
    if p.regime() == Regime::ConstantOnly {
        return Ok(Certificate::new(
            p,
            prof,
            certify_constant_regime(p, prof, tol),
        ));
    }
    let eq = equilibria(p);
    let mut checks = vec![certify_residual(p, prof, tol)];
    checks.extend(certify_bounds(p, &eq, prof, tol));
    checks.extend(certify_monotone(prof, tol));
    checks.extend(certify_hamiltonian(p, prof, true, tol));
    checks.extend(certify_decay(p, prof, tol));
    checks.push(certify_swap_reflection(prof, tol));
    if let Some(other) = partner {
        match sliding_test((p, prof), (p, other), tol) {
            Ok(rec) => checks.push(rec),
            Err(CertifyError::Grid(_)) => checks.push(CheckRecord::new(
                "sliding",
                refs::UNIQUENESS,
                f64::INFINITY,
                Target::Value(0.0),
                tol.sliding,
                false,
            )),
            Err(e) => return Err(e),
        }
    }
    Ok(Certificate::new(p, prof, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid1d::Grid;
    use crate::solver1d::{initial_guess, solve_on_grid, SolveOptions, Trace};

    fn params(alpha: f64, omega: f64) -> Params {
        Params::new(alpha, omega).unwrap()
    }

    fn solved(alpha: f64, omega: f64, r: f64, h: f64) -> (Params, Profile) {
        let p = params(alpha, omega);
        let lam = linear_data(&p).unwrap().lambda_minus;
        let g = Grid::with_spacing(r, h).unwrap();
        let prof =
            solve_on_grid(&p, g, &SolveOptions::default(), lam, &mut Trace::default()).unwrap();
        (p, prof)
    }

    fn find<'a>(recs: &'a [CheckRecord], name: &str) -> &'a CheckRecord {
        recs.iter()
            .find(|r| r.name == name)
            .unwrap_or_else(|| panic!("no record {name}"))
    }

    #[test]
    fn constant_end_state_passes_bounds() {
        let p = params(2.0, 0.5);
        let eq = equilibria(&p);
        let (a, b) = eq.ab().unwrap();
        let prof = Profile::constant(Grid::new(5.0, 99).unwrap(), a, b).unwrap();
        let recs = certify_bounds(&p, &eq, &prof, &Tolerances::default());
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
        assert!(find(&recs, "norm_le_one").measured.abs() < 1e-15);
        assert!(find(&recs, "product_ge_ratio").measured.abs() < 1e-15);
        assert!(recs.iter().any(|r| r.name == "trichotomy_constant_ab"));
    }

    #[test]
    fn corrupted_node_fails_norm_bound() {
        let (p, prof) = solved(2.0, 0.5, 10.0, 0.05);
        let (g, mut u, v) = prof.into_parts();
        u[g.len() / 3] = 1.1;
        let bad = Profile::new(g, u, v).unwrap();
        let recs = certify_bounds(&p, &equilibria(&p), &bad, &Tolerances::default());
        assert!(!find(&recs, "norm_le_one").pass);
        assert!(recs.iter().any(|r| r.name == "trichotomy_strictly_inside"));
    }

    #[test]
    fn monotonicity() {
        let tol = Tolerances::default();
        let p = params(2.0, 0.5);
        let eq = equilibria(&p);
        let g = Grid::with_spacing(10.0, 0.05).unwrap();
        let guess = initial_guess(g, &eq, 1.0).unwrap();
        assert!(certify_monotone(&guess, &tol).iter().all(|r| r.pass));
        let c = eq.c;
        let flat = Profile::constant(g, c, c).unwrap();
        assert!(certify_monotone(&flat, &tol).iter().all(|r| !r.pass));
        let (_, prof) = solved(2.0, 0.5, 40.0, 0.01);
        assert!(certify_monotone(&prof, &tol).iter().all(|r| r.pass));
    }

    #[test]
    fn hamiltonian_detects_bump() {
        let tol = Tolerances::default();
        let (p, prof) = solved(2.0, 0.5, 20.0, 0.01);
        let recs = certify_hamiltonian(&p, &prof, true, &tol);
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
        assert!(certify_hamiltonian_max(&p, &prof, &tol).pass);
        let (g, u, mut v) = prof.into_parts();
        for (i, vi) in v.iter_mut().enumerate() {
            let x = g.node(i) - 2.0;
            *vi += 1e-3 * (-x * x).exp();
        }
        let bumped = Profile::new(g, u, v).unwrap();
        assert!(
            !find(
                &certify_hamiltonian(&p, &bumped, false, &tol),
                "hamiltonian_spread"
            )
            .pass
        );
    }

    #[test]
    fn constant_equilibrium_has_zero_first_integral() {
        let p = params(2.0, 0.5);
        let (a, b) = equilibria(&p).ab().unwrap();
        let prof = Profile::constant(Grid::new(5.0, 99).unwrap(), a, b).unwrap();
        assert!(hamiltonian_values(&p, &prof)
            .iter()
            .all(|h| h.abs() < 1e-15));
    }

    #[test]
    fn sliding_same_profile_and_mismatch() {
        let tol = Tolerances::default();
        let (p, prof) = solved(2.0, 0.5, 10.0, 0.05);
        let rec = sliding_test((&p, &prof), (&p, &prof), &tol).unwrap();
        assert!(rec.measured < 1e-14);
        assert!(rec.pass);
        let q = params(2.0, 0.4);
        assert!(matches!(
            sliding_test((&p, &prof), (&q, &prof), &tol),
            Err(CertifyError::IncompatibleParams(..))
        ));
    }

    #[test]
    fn constant_regime_records() {
        let tol = Tolerances::default();
        let p = params(1.0, 1.0);
        let c = equilibria(&p).c;
        assert!((c - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let g = Grid::new(5.0, 49).unwrap();
        let recs = certify_constant_regime(&p, &Profile::constant(g, c, c).unwrap(), &tol);
        assert!(recs[0].pass);
        let h = params(2.0, 0.5);
        let recs = certify_constant_regime(&h, &Profile::constant(g, c, c).unwrap(), &tol);
        assert_eq!(recs[0].name, "WrongRegime");
        assert!(!recs[0].pass);
    }

    #[test]
    fn full_certificate_passes_and_is_deterministic() {
        let tol = Tolerances::default();
        let (p, prof) = solved(2.0, 0.5, 30.0, 0.01);
        let cert = certify_profile(&p, &prof, Some(&prof), &tol).unwrap();
        assert!(
            cert.overall_pass,
            "{:?}",
            cert.failures().collect::<Vec<_>>()
        );
        for rec in &cert.checks {
            assert!(
                refs::ALL.contains(&rec.paper_ref.as_str()),
                "{}",
                rec.paper_ref
            );
        }
        let again = certify_profile(&p, &prof, Some(&prof), &tol).unwrap();
        assert_eq!(cert.to_json(), again.to_json());
        let back: Certificate = serde_json::from_str(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn tolerance_overrides_parse() {
        let t: Tolerances = serde_json::from_str(r#"{"sliding": 1e-4}"#).unwrap();
        assert_eq!(t.sliding, 1e-4);
        assert_eq!(t.bounds, 1e-6);
        assert!(serde_json::from_str::<Tolerances>(r#"{"nope": 1}"#).is_err());
    }
}
