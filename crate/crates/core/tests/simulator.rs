use std::f64::consts::PI;

use mdhopf::linear::hopf_frequency;
use mdhopf::simulator::{
    classify_series, mode_amplitudes, plan_step, simulate, spectral_peaks, step_instantaneous, AttractorKind, Grid,
    InitialCondition, SimConfig,
};
use mdhopf::validation::convergence_order;
use mdhopf::{case_one, case_two, Branch, SimError};
use proptest::prelude::*;

/// Reaction-diffusion reference written with explicit ghost cells, valid when
/// the memory coupling is switched off.
fn reaction_diffusion_reference(
    (a, b, c): (f64, f64, f64),
    (d11, d22): (f64, f64),
    dx: f64,
    dt: f64,
    steps: usize,
    u: &mut [f64],
    v: &mut [f64],
) {
    let rhs = |u: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let m = u.len();
        let ghost = |w: &[f64], i: isize| w[i.clamp(0, m as isize - 1) as usize];
        let mut du = vec![0.0; m];
        let mut dv = vec![0.0; m];
        for i in 0..m {
            let k = i as isize;
            let lap_u = (ghost(u, k - 1) - 2.0 * u[i] + ghost(u, k + 1)) / (dx * dx);
            let lap_v = (ghost(v, k - 1) - 2.0 * v[i] + ghost(v, k + 1)) / (dx * dx);
            let pred = b * u[i] * v[i] / (1.0 + u[i]);
            du[i] = d11 * lap_u + u[i] * (1.0 - u[i] / a) - pred;
            dv[i] = d22 * lap_v + pred - c * v[i];
        }
        (du, dv)
    };
    let axpy = |x: &[f64], h: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + h * k).collect() };
    for _ in 0..steps {
        let (k1u, k1v) = rhs(u, v);
        let (k2u, k2v) = rhs(&axpy(u, 0.5 * dt, &k1u), &axpy(v, 0.5 * dt, &k1v));
        let (k3u, k3v) = rhs(&axpy(u, 0.5 * dt, &k2u), &axpy(v, 0.5 * dt, &k2v));
        let (k4u, k4v) = rhs(&axpy(u, dt, &k3u), &axpy(v, dt, &k3v));
        for i in 0..u.len() {
            u[i] += dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
}

#[test]
fn without_memory_coupling_matches_reaction_diffusion_reference() {
    let params = case_one().build().unwrap().with_point(0.0, 3.0);
    let eq = params.equilibrium().unwrap();
    let ic = InitialCondition::Cosine { amp_u: 0.05, amp_v: -0.02, k: 1.5 };
    let cfg = SimConfig::new(64, 10.0);
    let res = simulate(&params, &eq, &ic, &cfg).unwrap();
    let grid = Grid::new(64, 2.0).unwrap();
    let (mut u, mut v) = ic.fields(&grid, &eq);
    reaction_diffusion_reference((1.0, 9.0, 3.0), (0.6, 0.8), grid.dx, res.plan.dt, res.steps as usize, &mut u, &mut v);
    for i in 0..64 {
        assert!((u[i] - res.final_state.u[i]).abs() < 1e-8);
        assert!((v[i] - res.final_state.v[i]).abs() < 1e-8);
    }
}

#[test]
fn zero_delay_matches_instantaneous_stepper() {
    let params = case_one().build().unwrap().with_point(6.5, 0.0);
    let eq = params.equilibrium().unwrap();
    let ic = InitialCondition::Cosine { amp_u: 0.01, amp_v: 0.01, k: 1.0 };
    let res = simulate(&params, &eq, &ic, &SimConfig::new(64, 5.0)).unwrap();
    assert_eq!(res.plan.lag, 0);
    let grid = res.grid;
    let (mut u, mut v) = ic.fields(&grid, &eq);
    for _ in 0..res.steps {
        step_instantaneous(&grid, &params, res.plan.dt, &mut u, &mut v);
    }
    for i in 0..grid.m {
        assert!((u[i] - res.final_state.u[i]).abs() < 1e-10);
        assert!((v[i] - res.final_state.v[i]).abs() < 1e-10);
    }
}

#[test]
fn short_delay_approaches_instantaneous_flux() {
    // A delay of one step differs from the instantaneous flux by O(tau).
    let base = case_one().build().unwrap().with_point(6.5, 0.0);
    let eq = base.equilibrium().unwrap();
    let ic = InitialCondition::Cosine { amp_u: 0.01, amp_v: 0.01, k: 1.0 };
    let reference = simulate(&base, &eq, &ic, &SimConfig::new(64, 2.0)).unwrap();
    let mut errs = Vec::new();
    for tau in [0.02, 0.01] {
        let res = simulate(&base.with_point(6.5, tau), &eq, &ic, &SimConfig::new(64, 2.0)).unwrap();
        let e = res.final_state.u.iter().zip(&reference.final_state.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[1] < errs[0] && errs[0] < 1e-4, "{errs:?}");
}

#[test]
fn mode_projection_round_trip() {
    let grid = Grid::new(128, 2.0).unwrap();
    let field: Vec<f64> =
        (0..grid.m).map(|i| 0.5 + 0.03 * grid.gamma(2, grid.x(i)) - 0.01 * grid.gamma(5, grid.x(i))).collect();
    let c = mode_amplitudes(&grid, &field, 0.5, 7);
    let want = [0.0, 0.0, 0.03, 0.0, 0.0, -0.01, 0.0];
    for (got, want) in c.iter().zip(want) {
        assert!((got - want).abs() < 1e-6, "{c:?}");
    }
    let unit: Vec<f64> = (0..grid.m).map(|i| grid.gamma(2, grid.x(i))).collect();
    assert!((mode_amplitudes(&grid, &unit, 0.0, 3)[2] - 1.0).abs() < 1e-6);
}

#[test]
fn constant_series_is_an_equilibrium() {
    let t: Vec<f64> = (0..4000).map(|k| 0.5 * k as f64).collect();
    let x = vec![0.5; t.len()];
    assert_eq!(classify_series(&t, &x).unwrap().kind, AttractorKind::Equilibrium);
}

#[test]
fn synthetic_series_classification() {
    let t: Vec<f64> = (0..8000).map(|k| 0.5 * k as f64).collect();
    let quasi: Vec<f64> = t.iter().map(|&s| (0.2222 * s).sin() + 0.3 * (0.6629 * s).sin()).collect();
    let rep = classify_series(&t, &quasi).unwrap();
    assert_eq!(rep.kind, AttractorKind::QuasiPeriodic);
    for target in [0.2222, 0.6629] {
        assert!(rep.frequencies.iter().any(|p| ((p.angular() - target) / target).abs() < 0.01), "{rep:?}");
    }
    // An exact third harmonic stays periodic.
    let periodic: Vec<f64> = t.iter().map(|&s| (0.2222 * s).sin() + 0.3 * (3.0 * 0.2222 * s).sin()).collect();
    let rep = classify_series(&t, &periodic).unwrap();
    assert_eq!(rep.kind, AttractorKind::Periodic);
    assert!((2.0 * PI * rep.base_frequency.unwrap() - 0.2222).abs() < 0.01 * 0.2222);
    // Too few periods in the window.
    assert!(matches!(classify_series(&t[..200], &periodic[..200]), Err(SimError::WindowTooShort { .. })));
}

#[test]
fn spectral_peak_of_pure_tone() {
    let dt = 0.25;
    let x: Vec<f64> = (0..16384).map(|k| (2.0 * PI * 0.1234 * k as f64 * dt).cos()).collect();
    let peaks = spectral_peaks(&x, dt);
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0].frequency - 0.1234).abs() < 1e-4);
}

#[test]
fn rejects_coarse_grids_and_unstable_steps() {
    assert!(matches!(Grid::new(32, 2.0), Err(SimError::GridTooCoarse(32))));
    let params = case_one().build().unwrap().with_point(6.9, 12.0);
    let grid = Grid::new(64, 2.0).unwrap();
    let dt_max = grid.dt_max(&params);
    assert!(matches!(plan_step(&grid, &params, Some(2.0 * dt_max)), Err(SimError::CflViolation { .. })));
    let plan = plan_step(&grid, &params, Some(0.5 * dt_max)).unwrap();
    assert!(plan.dt <= 0.5 * dt_max);
    assert!((plan.dt * plan.lag as f64 - 12.0).abs() < 1e-12);
}

#[test]
fn linear_oscillation_frequency_near_hopf_curve() {
    // Just past the 2- curve the mode-2 perturbation oscillates at the
    // critical frequency while growing slowly.
    let params = case_one().build().unwrap().with_point(6.96, 12.5);
    let eq = params.equilibrium().unwrap();
    let omega = hopf_frequency(2, Branch::Minus, &params, &eq).unwrap();
    let ic = InitialCondition::Cosine { amp_u: 1e-4, amp_v: -1e-4, k: 1.0 };
    let mut cfg = SimConfig::new(128, 1500.0);
    cfg.n_modes = 4;
    let res = simulate(&params, &eq, &ic, &cfg).unwrap();
    let start = res.tail_start(1200.0);
    let c2: Vec<f64> = res.records.modes[start..].iter().map(|r| r[2]).collect();
    let peaks = spectral_peaks(&c2, cfg.record_every);
    let got = peaks[0].angular();
    assert!(((got - omega) / omega).abs() < 0.02, "{got} vs {omega}");
    assert_eq!(res.dominant_mode(1200.0), Some(2));
}

#[test]
fn observed_order_of_convergence() {
    // Near the double Hopf point the perturbation is still O(1e-3) at t = 100,
    // well above round-off on all three grids.
    let spec = mdhopf::ModelSpec { d21: 6.95, tau: 12.5, ..case_one() };
    let order = convergence_order(&spec, 100.0).unwrap();
    assert!(order >= 1.8, "{order}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_equilibrium_is_preserved(d21 in 0.0f64..10.0, tau in 0.0f64..20.0, second in any::<bool>()) {
        let spec = if second { case_two() } else { case_one() };
        let params = spec.build().unwrap().with_point(d21, tau);
        let eq = params.equilibrium().unwrap();
        let ic = InitialCondition::Cosine { amp_u: 0.0, amp_v: 0.0, k: 1.0 };
        let res = simulate(&params, &eq, &ic, &SimConfig::new(64, 2.0)).unwrap();
        prop_assert!(res.final_deviation() < 1e-12);
    }

    #[test]
    fn spatially_uniform_states_stay_uniform(du in -0.1f64..0.1, dv in -0.05f64..0.05, tau in 0.0f64..5.0) {
        // Uniform fields have no gradient, so they follow the kinetics ODE.
        let params = case_one().build().unwrap().with_point(7.0, tau);
        let eq = params.equilibrium().unwrap();
        let ic = InitialCondition::Fields { u: vec![eq.u_star + du; 64], v: vec![eq.v_star + dv; 64] };
        let res = simulate(&params, &eq, &ic, &SimConfig::new(64, 1.0)).unwrap();
        let u0 = res.final_state.u[0];
        let v0 = res.final_state.v[0];
        prop_assert!(res.final_state.u.iter().all(|u| (u - u0).abs() < 1e-13));
        prop_assert!(res.final_state.v.iter().all(|v| (v - v0).abs() < 1e-13));
    }
}
