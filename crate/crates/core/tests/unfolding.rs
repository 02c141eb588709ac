use mdhopf::unfolding::{
    amplitude_equilibria, amplitude_jacobian, classify_point, region_lines, sectors, simulate_amplitude, DynamicsLabel,
    EqKind, LineName,
};
use mdhopf::validation::{case_one_curves, case_two_curves, line_slopes, reference};
use mdhopf::{case_one, case_two, find_double_hopf, AmplitudeSystem, DoubleHopfPoint, Tolerances};
use proptest::prelude::*;

/// The reference case-one amplitude system.
fn reference_system() -> AmplitudeSystem {
    let c = reference::NF1;
    AmplitudeSystem::new([[c[0], c[1]], [c[2], c[3]]], [[c[4], c[5]], [c[6], c[7]]], 1e-12)
}

fn p1() -> DoubleHopfPoint {
    let params = case_one().build().unwrap();
    let eq = params.equilibrium().unwrap();
    let (c1, c2, bx) = case_one_curves();
    find_double_hopf(c1, c2, bx, &params, &eq, &Tolerances::default()).unwrap()
}

fn kinds(amp: &AmplitudeSystem, mu: [f64; 2]) -> Vec<(EqKind, bool)> {
    amplitude_equilibria(amp, mu, &Tolerances::default()).unwrap().iter().map(|e| (e.kind, e.stable)).collect()
}

#[test]
fn origin_has_only_trivial_equilibrium() {
    assert_eq!(kinds(&reference_system(), [0.0, 0.0]), vec![(EqKind::E0, false)]);
}

#[test]
fn semi_trivial_amplitude_matches_reference_display() {
    // r1^2 = 0.9331 mu2 - 0.0029 mu1.
    let amp = reference_system();
    let tol = Tolerances::default();
    for mu in [[0.0, 0.01], [0.2, 0.01], [-0.5, 0.02]] {
        let eqs = amplitude_equilibria(&amp, mu, &tol).unwrap();
        let e1 = eqs.iter().find(|e| e.kind == EqKind::E1).unwrap();
        let want = 0.9331 * mu[1] - 0.0029 * mu[0];
        assert!((e1.r1 * e1.r1 - want).abs() < 2e-3 * want.abs() + 1e-6, "{mu:?}: {}", e1.r1 * e1.r1);
    }
}

#[test]
fn interior_amplitudes_match_reference_display() {
    // E3 = (sqrt(6.1905e-4 mu1 + 0.0326 mu2), sqrt(0.8416e-4 mu1 - 0.0214 mu2)).
    let amp = reference_system();
    let tol = Tolerances::default();
    for k in 0..10 {
        let mu = [0.5 + 0.05 * k as f64, -0.001 - 0.0005 * k as f64];
        let x = 6.1905e-4 * mu[0] + 0.0326 * mu[1];
        let y = 0.8416e-4 * mu[0] - 0.0214 * mu[1];
        if x <= 0.0 || y <= 0.0 {
            continue;
        }
        let eqs = amplitude_equilibria(&amp, mu, &tol).unwrap();
        let e3 = eqs.iter().find(|e| e.kind == EqKind::E3).expect("interior equilibrium");
        assert!(((e3.r1 * e3.r1 - x) / x).abs() < 1e-2, "{mu:?}");
        assert!(((e3.r2 * e3.r2 - y) / y).abs() < 1e-2, "{mu:?}");
    }
}

#[test]
fn reference_slopes() {
    let got = line_slopes(&reference_system());
    // The reference coefficients carry four or five digits, so the ratios
    // they give agree with the reference slopes only to a few parts in 1e3.
    for (g, w) in got.iter().zip(reference::SLOPES1) {
        assert!(((g - w) / w).abs() < 5e-3, "{g} vs {w}");
    }
    let c = reference::NF1;
    assert!((got[0] + c[1] / c[0]).abs() < 1e-9 * got[0].abs());
}

#[test]
fn trivial_equilibrium_stability_follows_linear_rates() {
    let amp = reference_system();
    for mu in [[0.1, -0.01], [-0.1, -0.001], [0.3, 0.02]] {
        let d = amp.rates(mu);
        let e0 = amplitude_equilibria(&amp, mu, &Tolerances::default()).unwrap()[0];
        assert_eq!(e0.stable, d[0] < 0.0 && d[1] < 0.0);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let amp = reference_system();
    let mu = [0.7, -0.004];
    let r = [0.03, 0.05];
    let j = amplitude_jacobian(&amp, mu, r);
    let h = 1e-6;
    for col in 0..2 {
        let mut rp = r;
        let mut rm = r;
        rp[col] += h;
        rm[col] -= h;
        let (fp, fm) = (amp.field(mu, rp), amp.field(mu, rm));
        for row in 0..2 {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            assert!((fd - j[row][col]).abs() < 1e-6, "({row},{col}): {fd} vs {}", j[row][col]);
        }
    }
}

#[test]
fn reference_case_one_partition() {
    let amp = reference_system();
    let dhp = p1();
    let tol = Tolerances::default();
    let part = sectors(&amp, &dhp, &tol).unwrap();
    assert_eq!(part.sectors.len(), 6);
    // Neighbouring sectors may share a label (only an unstable branch
    // appears), but never an inventory.
    for w in part.sectors.windows(2) {
        assert_ne!(w[0].inventory, w[1].inventory);
    }
    assert_ne!(part.sectors[0].inventory, part.sectors[5].inventory);
    assert_eq!(part.sectors.iter().filter(|s| s.inventory.stable[0]).count(), 1);
    let at = |d21, tau| classify_point(&amp, &dhp, d21, tau, &tol).unwrap().label;
    assert_eq!(at(6.95, 12.5), DynamicsLabel::StableEquilibrium);
    assert_eq!(at(6.95, 14.0), DynamicsLabel::QuasiPeriodic);
    assert!(matches!(at(6.96, 12.5), DynamicsLabel::PeriodicMode(_)));
}

#[test]
fn region_two_has_stable_semi_trivial_orbit() {
    let amp = reference_system();
    let dhp = p1();
    let tol = Tolerances::default();
    let c = classify_point(&amp, &dhp, 6.96, 12.5, &tol).unwrap();
    let eqs = amplitude_equilibria(&amp, c.mu, &tol).unwrap();
    assert!(!eqs[0].stable);
    let stable: Vec<EqKind> = eqs.iter().filter(|e| e.stable).map(|e| e.kind).collect();
    assert_eq!(stable.len(), 1);
    assert!(matches!(stable[0], EqKind::E1 | EqKind::E2));
}

#[test]
fn flow_converges_to_predicted_equilibria() {
    let amp = reference_system();
    let tol = Tolerances::default();
    // Quasi-periodic sector: interior equilibrium is the attractor.
    let mu = [0.87, -0.0118];
    let e3 = amplitude_equilibria(&amp, mu, &tol).unwrap().into_iter().find(|e| e.kind == EqKind::E3).unwrap();
    let end = simulate_amplitude(&amp, mu, [0.05, 0.07], 40_000.0, 1e-9).unwrap().last();
    assert!((end[0] - e3.r1).abs() < 1e-6 && (end[1] - e3.r2).abs() < 1e-6, "{end:?} vs {e3:?}");
    // Axes are invariant.
    let end = simulate_amplitude(&amp, mu, [0.0, 0.0], 100.0, 1e-9).unwrap().last();
    assert_eq!(end, [0.0, 0.0]);
    let end = simulate_amplitude(&amp, mu, [0.0, 0.05], 1000.0, 1e-9).unwrap().last();
    assert_eq!(end[0], 0.0);
}

fn case_two_system() -> (AmplitudeSystem, DoubleHopfPoint) {
    let c = reference::NF2;
    let amp = AmplitudeSystem::new([[c[0], c[1]], [c[2], c[3]]], [[c[4], c[5]], [c[6], c[7]]], 1e-12);
    let params = case_two().build().unwrap();
    let eq = params.equilibrium().unwrap();
    let (c1, c2, bx) = case_two_curves();
    (amp, find_double_hopf(c1, c2, bx, &params, &eq, &Tolerances::default()).unwrap())
}

/// Integrate from each start and report which stable equilibria were reached;
/// `None` if some trajectory settles nowhere the inventory predicts.
fn reached(amp: &AmplitudeSystem, mu: [f64; 2], starts: &[[f64; 2]]) -> Option<Vec<EqKind>> {
    let eqs = amplitude_equilibria(amp, mu, &Tolerances::default()).unwrap();
    // Trajectories can linger near saddles, so the horizon follows the slowest
    // rate of any equilibrium except an unstable origin, which starts avoid.
    let slowest = eqs
        .iter()
        .filter(|e| e.kind != EqKind::E0 || e.stable)
        .flat_map(|e| e.eigenvalues.map(|z| z.re.abs()))
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t_end = (60.0 / slowest).min(1e8);
    let mut out = Vec::new();
    for r0 in starts {
        let end = simulate_amplitude(amp, mu, *r0, t_end, 1e-10).unwrap().last();
        let scale = eqs.iter().map(|e| e.r1.hypot(e.r2)).fold(r0[0].hypot(r0[1]), f64::max);
        let hit = eqs.iter().filter(|e| e.stable).find(|e| (e.r1 - end[0]).hypot(e.r2 - end[1]) < 1e-3 * scale)?;
        if !out.contains(&hit.kind) {
            out.push(hit.kind);
        }
    }
    out.sort();
    Some(out)
}

/// A point strictly inside sector `k`, away from its bounding rays.
fn inside(part: &mdhopf::unfolding::UnfoldingClassification, k: usize, frac: f64, radius: f64) -> [f64; 2] {
    let s = &part.sectors[k % part.sectors.len()];
    let theta = s.start_angle + frac * (s.end_angle - s.start_angle);
    // Angles are measured in the (mu2, mu1) plane.
    [radius * theta.sin(), radius * theta.cos()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn label_agrees_with_amplitude_flow(
        second in any::<bool>(),
        k in 0usize..6,
        frac in 0.05f64..0.95,
        radius in 0.02f64..1.0,
        starts in proptest::collection::vec((1e-3f64..0.5, 1e-3f64..0.5), 5),
    ) {
        let tol = Tolerances::default();
        let (amp, dhp) = if second { case_two_system() } else { (reference_system(), p1()) };
        let part = sectors(&amp, &dhp, &tol).unwrap();
        let mu = inside(&part, k, frac, radius);
        let eqs = amplitude_equilibria(&amp, mu, &tol).unwrap();
        let mut want: Vec<EqKind> = eqs.iter().filter(|e| e.stable).map(|e| e.kind).collect();
        want.sort();
        // Scale starts to the equilibrium amplitudes so each basin is sampled.
        let scale = eqs.iter().map(|e| e.r1.max(e.r2)).fold(0.0, f64::max).max(1e-3) * 2.0;
        let mut starts: Vec<[f64; 2]> = starts.iter().map(|&(a, b)| [a * scale, b * scale]).collect();
        if want.len() > 1 {
            // Near-axis starts reach each single-mode orbit.
            starts.push([scale, 1e-9]);
            starts.push([1e-9, scale]);
        }
        let found = reached(&amp, mu, &starts);
        prop_assert_eq!(found, Some(want));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inventory_changes_exactly_across_lines(which in 0usize..4, end in any::<bool>(), t in 0.05f64..1.0) {
        let amp = reference_system();
        let dhp = p1();
        let tol = Tolerances::default();
        let lines = region_lines(&amp);
        let name = [LineName::H1, LineName::H2, LineName::L1, LineName::L2][which];
        let line = lines.iter().find(|l| l.name == name).unwrap();
        let ray = line.rays[if end { 0 } else { line.rays.len() - 1 }];
        // Rays are (mu2, mu1); offsets are relative to the distance from P1.
        let normal = [-ray[1], ray[0]];
        let at = |off: f64| {
            let mu2 = t * ray[0] + off * t * normal[0];
            let mu1 = t * ray[1] + off * t * normal[1];
            classify_point(&amp, &dhp, dhp.d21_c + mu2, dhp.tau_c + mu1, &tol).unwrap()
        };
        let (a, b) = (at(1e-4), at(-1e-4));
        prop_assert_ne!(&a.inventory, &b.inventory);
        prop_assert_eq!(&a.inventory, &at(2e-4).inventory);
        prop_assert_eq!(&b.inventory, &at(-2e-4).inventory);
    }
}
