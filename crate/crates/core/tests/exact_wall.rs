// At α = 2 the wall is explicit:
//   u + v = sqrt(1 + ω),  u − v = sqrt(1 − ω) tanh(sqrt((1 − ω)/2) x).

use wallforge::grid1d::recenter;
use wallforge::solver1d::{continue_in_r, initial_guess, residual, solve_bvp, solve_bvp_traced};
use wallforge::{equilibria, ContinuationSchedule, Grid, Params, Profile, SolveOptions, Trace};

fn exact(omega: f64, x: f64) -> (f64, f64) {
    let s = (1.0 + omega).sqrt();
    let d = (1.0 - omega).sqrt() * ((0.5 * (1.0 - omega)).sqrt() * x).tanh();
    (0.5 * (s + d), 0.5 * (s - d))
}

fn error_vs_exact(omega: f64, prof: &Profile) -> f64 {
    let g = prof.grid();
    (0..g.len())
        .map(|i| {
            let (u, v) = exact(omega, g.node(i));
            (prof.u()[i] - u).abs().max((prof.v()[i] - v).abs())
        })
        .fold(0.0, f64::max)
}

fn solve(omega: f64, half_length: f64, h: f64) -> Profile {
    let p = Params::new(2.0, omega).unwrap();
    let grid = Grid::with_spacing(half_length, h).unwrap();
    let guess = initial_guess(grid, &equilibria(&p), 1.0).unwrap();
    solve_bvp(&p, grid, &guess, &SolveOptions::default()).unwrap()
}

#[test]
fn second_order_convergence_to_the_closed_form() {
    for omega in [0.1f64, 0.5, 0.9] {
        // truncation error ~ e^{-λ₋R} must sit below the O(h²) error
        let half_length = 25.0 / (2.0 * (1.0 - omega)).sqrt();
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| error_vs_exact(omega, &solve(omega, half_length, h)))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..=4.4).contains(&ratio), "omega {omega}: {errs:?}");
        }
        assert!(errs[2] < 1e-5, "omega {omega}: {errs:?}");
    }
}

#[test]
fn closed_form_has_the_right_end_states() {
    for omega in [0.1, 0.5, 0.9] {
        let p = Params::new(2.0, omega).unwrap();
        let eq = equilibria(&p);
        let (u, v) = exact(omega, 60.0);
        assert!((u - eq.b().unwrap()).abs() < 1e-12);
        assert!((v - eq.a().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn interior_nodes_lie_strictly_between_end_states() {
    let p = Params::new(2.0, 0.5).unwrap();
    let eq = equilibria(&p);
    let (a, b) = (eq.a().unwrap(), eq.b().unwrap());
    let prof = solve(0.5, 20.0, 0.01);
    let n = prof.u().len();
    for i in 1..n - 1 {
        for f in [prof.u()[i], prof.v()[i]] {
            assert!(a < f && f < b, "node {i}: {f}");
        }
    }
}

#[test]
fn residual_decreases_once_damping_engages() {
    let p = Params::new(2.0, 0.5).unwrap();
    let grid = Grid::with_spacing(10.0, 0.01).unwrap();
    let guess = initial_guess(grid, &equilibria(&p), 1.0).unwrap();
    let mut trace = Trace::default();
    let prof = solve_bvp_traced(&p, grid, &guess, &SolveOptions::default(), &mut trace).unwrap();
    let log = &trace.entries;
    assert!(log.len() >= 2);
    assert!(log[0].residual > 0.0);
    for w in log.windows(2) {
        assert!(w[1].residual < w[0].residual, "{log:?}");
    }
    let r = residual(&p, &prof)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(r <= SolveOptions::default().residual_tol);
}

#[test]
fn stages_agree_on_a_common_window_once_r_is_large() {
    for (alpha, omega) in [(2.0, 0.5), (1.0, 0.2), (4.0, 0.8)] {
        let p = Params::new(alpha, omega).unwrap();
        let eq = equilibria(&p);
        let sched = ContinuationSchedule::new(vec![5.0, 10.0, 20.0, 40.0], 0.01).unwrap();
        let stages = continue_in_r(&p, &sched, &SolveOptions::default()).unwrap();
        let centered: Vec<Profile> = stages.iter().map(|s| recenter(s, &eq).unwrap()).collect();
        let diff = |a: &Profile, b: &Profile| {
            let g = a.grid();
            (0..g.len())
                .filter(|&i| g.node(i).abs() <= 5.0)
                .map(|i| {
                    let (u, v) = b.sample(g.node(i));
                    (a.u()[i] - u).abs().max((a.v()[i] - v).abs())
                })
                .fold(0.0, f64::max)
        };
        let d = diff(&centered[2], &centered[3]);
        assert!(d <= 1e-6, "({alpha}, {omega}): {d:e}");
        // R = 5 is visibly different, so the comparison has teeth
        assert!(diff(&centered[0], &centered[3]) > d);
    }
}
