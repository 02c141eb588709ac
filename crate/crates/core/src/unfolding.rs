//! Planar amplitude system near the double Hopf point: equilibria, region
//! lines, sectors and dynamics labels.
//!
//! Coordinates are `mu = (mu1, mu2) = (tau - tau_c, d21 - d21_c)`. Lines are
//! reported as slopes `s` in `tau - tau_c = s (d21 - d21_c)`, i.e. in the plane
//! with `mu2` horizontal and `mu1` vertical.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::UnfoldingError;
use crate::linear::{Branch, DoubleHopfPoint};
use crate::normalform::AmplitudeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EqKind {
    E0,
    E1,
    E2,
    E3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEquilibrium {
    pub kind: EqKind,
    pub r1: f64,
    pub r2: f64,
    pub eigenvalues: [C64; 2],
    pub stable: bool,
}

/// Jacobian of the amplitude field at `r`.
pub fn amplitude_jacobian(amp: &AmplitudeSystem, mu: [f64; 2], r: [f64; 2]) -> [[f64; 2]; 2] {
    let d = amp.rates(mu);
    let p = amp.p;
    let (x, y) = (r[0] * r[0], r[1] * r[1]);
    [
        [d[0] + 3.0 * p[0][0] * x + p[0][1] * y, 2.0 * p[0][1] * r[0] * r[1]],
        [2.0 * p[1][0] * r[0] * r[1], d[1] + p[1][0] * x + 3.0 * p[1][1] * y],
    ]
}

fn eig2(m: [[f64; 2]; 2]) -> [C64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = C64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    [tr / 2.0 + disc, tr / 2.0 - disc]
}

/// Eigenvalues at `(r1, r2)` and whether both have negative real part.
pub fn stability_of(amp: &AmplitudeSystem, mu: [f64; 2], r: [f64; 2]) -> ([C64; 2], bool) {
    let ev = eig2(amplitude_jacobian(amp, mu, r));
    (ev, ev.iter().all(|z| z.re < 0.0))
}

/// E0 always, E1/E2 where `r^2 = -delta/p > 0`, E3 where both squared
/// amplitudes of the interior solution are positive.
pub fn amplitude_equilibria(
    amp: &AmplitudeSystem,
    mu: [f64; 2],
    tol: &Tolerances,
) -> Result<Vec<AmplitudeEquilibrium>, UnfoldingError> {
    let p = amp.p;
    if p[0][0].abs() < tol.degenerate_cubic || p[1][1].abs() < tol.degenerate_cubic {
        return Err(UnfoldingError::DegenerateCubic(format!("p11 = {:e}, p22 = {:e}", p[0][0], p[1][1])));
    }
    let d = amp.rates(mu);
    let mut out = Vec::new();
    let mut push = |kind, r1: f64, r2: f64| {
        let (eigenvalues, stable) = stability_of(amp, mu, [r1, r2]);
        out.push(AmplitudeEquilibrium { kind, r1, r2, eigenvalues, stable });
    };
    push(EqKind::E0, 0.0, 0.0);
    let x1 = -d[0] / p[0][0];
    if x1 > 0.0 {
        push(EqKind::E1, x1.sqrt(), 0.0);
    }
    let y2 = -d[1] / p[1][1];
    if y2 > 0.0 {
        push(EqKind::E2, 0.0, y2.sqrt());
    }
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    if det.abs() >= tol.degenerate_cubic {
        let (x, y) = interior_squares(amp, d);
        if x > 0.0 && y > 0.0 {
            push(EqKind::E3, x.sqrt(), y.sqrt());
        }
    }
    Ok(out)
}

/// Squared amplitudes `(r1^2, r2^2)` of the interior solution for rates `d`.
fn interior_squares(amp: &AmplitudeSystem, d: [f64; 2]) -> (f64, f64) {
    let p = amp.p;
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    ((-d[0] * p[1][1] + d[1] * p[0][1]) / det, (-d[1] * p[0][0] + d[0] * p[1][0]) / det)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineName {
    /// `delta_1 = 0`.
    H1,
    /// `delta_2 = 0`.
    H2,
    /// Interior solution meets E1 (`r2 = 0`).
    L1,
    /// Interior solution meets E2 (`r1 = 0`).
    L2,
}

impl fmt::Display for LineName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A line through the origin `a mu1 + b mu2 = 0` with its admissible rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLine {
    pub name: LineName,
    /// `tau - tau_c = slope (d21 - d21_c)`; `None` for a vertical line.
    pub slope: Option<f64>,
    /// `d21 - d21_c = inverse_slope (tau - tau_c)`; `None` for a horizontal line.
    pub inverse_slope: Option<f64>,
    /// Unit directions `(mu2, mu1)` of the rays that belong to the boundary.
    pub rays: Vec<[f64; 2]>,
    /// Sign of `d21 - d21_c` on the ray for half-lines, `None` for full lines.
    pub side: Option<f64>,
}

fn line_from(name: LineName, a: f64, b: f64) -> Option<(RegionLine, [f64; 2])> {
    if a == 0.0 && b == 0.0 {
        return None;
    }
    // a mu1 + b mu2 = 0  <=>  direction (mu2, mu1) = (a, -b).
    let norm = a.hypot(b);
    let dir = [a / norm, -b / norm];
    let slope = if a != 0.0 { Some(-b / a) } else { None };
    let inverse_slope = if b != 0.0 { Some(-a / b) } else { None };
    Some((RegionLine { name, slope, inverse_slope, rays: Vec::new(), side: None }, dir))
}

/// The four region boundaries. H-lines are full lines; L-lines are the
/// half-lines on which the interior equilibrium merges with E1 or E2.
pub fn region_lines(amp: &AmplitudeSystem) -> Vec<RegionLine> {
    let dl = amp.delta;
    let p = amp.p;
    let mut out = Vec::new();
    for (name, row) in [(LineName::H1, 0), (LineName::H2, 1)] {
        if let Some((mut line, dir)) = line_from(name, dl[row][0], dl[row][1]) {
            line.rays = vec![dir, [-dir[0], -dir[1]]];
            out.push(line);
        }
    }
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    if det == 0.0 {
        return out;
    }
    // r2^2 = 0: d1 p21 - d2 p11 = 0; r1^2 = 0: d2 p12 - d1 p22 = 0.
    let l1 = (dl[0][0] * p[1][0] - dl[1][0] * p[0][0], dl[0][1] * p[1][0] - dl[1][1] * p[0][0]);
    let l2 = (dl[1][0] * p[0][1] - dl[0][0] * p[1][1], dl[1][1] * p[0][1] - dl[0][1] * p[1][1]);
    for (name, (a, b), other) in [(LineName::L1, l1, 0usize), (LineName::L2, l2, 1usize)] {
        let Some((mut line, dir)) = line_from(name, a, b) else { continue };
        for sign in [1.0, -1.0] {
            let ray = [sign * dir[0], sign * dir[1]];
            let (x, y) = interior_squares(amp, amp.rates([ray[1], ray[0]]));
            let partner = if other == 0 { x } else { y };
            if partner > 0.0 {
                line.rays.push(ray);
                line.side = Some(ray[0].signum());
            }
        }
        if !line.rays.is_empty() {
            out.push(line);
        }
    }
    out
}

/// Spatial mode and frequency branch of a bifurcating periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeTag {
    pub n: u32,
    pub branch: Branch,
}

impl fmt::Display for ModeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode {}{}", self.n, self.branch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsLabel {
    StableEquilibrium,
    PeriodicMode(ModeTag),
    QuasiPeriodic,
    Bistable(ModeTag, ModeTag),
    /// One periodic orbit is stable and the other exists unstable; orbits
    /// leave the unstable one for the stable one.
    ConnectingOrbit {
        from: ModeTag,
        to: ModeTag,
    },
    /// Any other combination of stable amplitude equilibria.
    Coexisting(Vec<EqKind>),
    /// No stable amplitude equilibrium; the cubic truncation does not decide.
    Unresolved,
}

impl fmt::Display for DynamicsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsLabel::StableEquilibrium => write!(f, "StableEquilibrium"),
            DynamicsLabel::PeriodicMode(m) => write!(f, "PeriodicMode({},{})", m.n, m.branch),
            DynamicsLabel::QuasiPeriodic => write!(f, "QuasiPeriodic"),
            DynamicsLabel::Bistable(a, b) => write!(f, "Bistable({},{}|{},{})", a.n, a.branch, b.n, b.branch),
            DynamicsLabel::ConnectingOrbit { from, to } => {
                write!(f, "ConnectingOrbit({},{}->{},{})", from.n, from.branch, to.n, to.branch)
            }
            DynamicsLabel::Coexisting(kinds) => write!(f, "Coexisting({kinds:?})"),
            DynamicsLabel::Unresolved => write!(f, "Unresolved"),
        }
    }
}

/// Which amplitude equilibria exist and which are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inventory {
    pub exists: [bool; 4],
    pub stable: [bool; 4],
}

impl Inventory {
    pub fn of(eqs: &[AmplitudeEquilibrium]) -> Self {
        let mut inv = Inventory { exists: [false; 4], stable: [false; 4] };
        for e in eqs {
            let k = e.kind as usize;
            inv.exists[k] = true;
            inv.stable[k] = e.stable;
        }
        inv
    }

    pub fn stable_kinds(&self) -> Vec<EqKind> {
        [EqKind::E0, EqKind::E1, EqKind::E2, EqKind::E3].into_iter().filter(|k| self.stable[*k as usize]).collect()
    }

    pub fn label(&self, m1: ModeTag, m2: ModeTag) -> DynamicsLabel {
        let stable = self.stable_kinds();
        match stable.as_slice() {
            [] => DynamicsLabel::Unresolved,
            [EqKind::E0] => DynamicsLabel::StableEquilibrium,
            [EqKind::E3] => DynamicsLabel::QuasiPeriodic,
            [EqKind::E1, EqKind::E2] => DynamicsLabel::Bistable(m1, m2),
            [EqKind::E1] if self.exists[EqKind::E2 as usize] => DynamicsLabel::ConnectingOrbit { from: m2, to: m1 },
            [EqKind::E1] => DynamicsLabel::PeriodicMode(m1),
            [EqKind::E2] if self.exists[EqKind::E1 as usize] => DynamicsLabel::ConnectingOrbit { from: m1, to: m2 },
            [EqKind::E2] => DynamicsLabel::PeriodicMode(m2),
            other => DynamicsLabel::Coexisting(other.to_vec()),
        }
    }
}

/// Mode tags of the two critical pairs.
pub fn mode_tags(dhp: &DoubleHopfPoint) -> (ModeTag, ModeTag) {
    (ModeTag { n: dhp.n1, branch: dhp.curve1.branch }, ModeTag { n: dhp.n2, branch: dhp.curve2.branch })
}

/// An angular sector of the `(mu2, mu1)` plane between consecutive rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    /// 1-based, counter-clockwise from the sector where E0 is stable.
    pub index: usize,
    pub start_angle: f64,
    pub end_angle: f64,
    pub label: DynamicsLabel,
    pub inventory: Inventory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingClassification {
    pub lines: Vec<RegionLine>,
    pub sectors: Vec<Sector>,
}

fn angle_of(ray: [f64; 2]) -> f64 {
    ray[1].atan2(ray[0]).rem_euclid(2.0 * PI)
}

fn inventory_at(amp: &AmplitudeSystem, mu: [f64; 2], tol: &Tolerances) -> Result<Inventory, UnfoldingError> {
    Ok(Inventory::of(&amplitude_equilibria(amp, mu, tol)?))
}

/// Partition the plane by the region lines and label each sector.
pub fn sectors(
    amp: &AmplitudeSystem,
    dhp: &DoubleHopfPoint,
    tol: &Tolerances,
) -> Result<UnfoldingClassification, UnfoldingError> {
    let lines = region_lines(amp);
    let mut angles: Vec<f64> = lines.iter().flat_map(|l| l.rays.iter().map(|r| angle_of(*r))).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let (m1, m2) = mode_tags(dhp);
    let mut raw = Vec::new();
    let count = angles.len();
    for k in 0..count {
        let start = angles[k];
        let end = if k + 1 < count { angles[k + 1] } else { angles[0] + 2.0 * PI };
        let mid = 0.5 * (start + end);
        let inventory = inventory_at(amp, [mid.sin(), mid.cos()], tol)?;
        raw.push((start, end, inventory));
    }
    let first = raw.iter().position(|(_, _, inv)| inv.stable[0]).unwrap_or(0);
    let sectors = (0..raw.len())
        .map(|i| {
            let (start, end, inventory) = raw[(first + i) % raw.len()];
            Sector { index: i + 1, start_angle: start, end_angle: end, label: inventory.label(m1, m2), inventory }
        })
        .collect();
    Ok(UnfoldingClassification { lines, sectors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub d21: f64,
    pub tau: f64,
    pub mu: [f64; 2],
    pub region: usize,
    pub label: DynamicsLabel,
    pub inventory: Inventory,
    /// Set when `max(|mu1|, |mu2|)` exceeds the validity radius.
    pub outside_validity: bool,
}

/// Dynamics label and sector index of the point `(d21, tau)`.
pub fn classify_point(
    amp: &AmplitudeSystem,
    dhp: &DoubleHopfPoint,
    d21: f64,
    tau: f64,
    tol: &Tolerances,
) -> Result<Classification, UnfoldingError> {
    let mu = [tau - dhp.tau_c, d21 - dhp.d21_c];
    let part = sectors(amp, dhp, tol)?;
    let angle = angle_of([mu[1], mu[0]]);
    let region = part
        .sectors
        .iter()
        .find(|s| {
            let (a, b) = (s.start_angle, s.end_angle);
            (angle >= a && angle < b) || (angle + 2.0 * PI >= a && angle + 2.0 * PI < b)
        })
        .map(|s| s.index)
        .unwrap_or(0);
    let inventory = inventory_at(amp, mu, tol)?;
    let (m1, m2) = mode_tags(dhp);
    Ok(Classification {
        d21,
        tau,
        mu,
        region,
        label: inventory.label(m1, m2),
        inventory,
        outside_validity: mu[0].abs().max(mu[1].abs()) > tol.validity_radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
}

impl AmplitudeTrajectory {
    pub fn last(&self) -> [f64; 2] {
        *self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrate the amplitude equations with an adaptive Dormand-Prince 5(4)
/// pair. Zero components stay exactly zero.
pub fn simulate_amplitude(
    amp: &AmplitudeSystem,
    mu: [f64; 2],
    r0: [f64; 2],
    t_end: f64,
    rtol: f64,
) -> Result<AmplitudeTrajectory, UnfoldingError> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
    if r0[0] < 0.0 || r0[1] < 0.0 {
        return Err(UnfoldingError::StepFailure { t: 0.0, reason: "initial amplitudes must be non-negative".into() });
    }
    let f = |r: [f64; 2]| amp.field(mu, r);
    let mut t = 0.0;
    let mut r = r0;
    let mut h = (t_end / 1000.0).max(1e-6);
    let mut traj = AmplitudeTrajectory { times: vec![0.0], states: vec![r0] };
    let mut k0 = f(r);
    let mut steps = 0usize;
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [[0.0; 2]; 7];
        k[0] = k0;
        for s in 1..7 {
            let mut y = r;
            for (j, kj) in k.iter().enumerate().take(s) {
                y[0] += h * A[s - 1][j] * kj[0];
                y[1] += h * A[s - 1][j] * kj[1];
            }
            k[s] = f(y);
        }
        let mut y5 = r;
        for (j, kj) in k.iter().enumerate().take(6) {
            y5[0] += h * A[5][j] * kj[0];
            y5[1] += h * A[5][j] * kj[1];
        }
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let e: f64 = (0..7).map(|j| E[j] * k[j][c]).sum::<f64>() * h;
            let scale = 1e-14 + rtol * r[c].abs().max(y5[c].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() || !y5[0].is_finite() || !y5[1].is_finite() {
            // Overshoot of the cubic terms; retry with a smaller step.
            h *= 0.2;
            steps += 1;
            if h < 1e-12 {
                return Err(UnfoldingError::StepFailure { t, reason: "non-finite state".into() });
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            r = [y5[0].max(0.0), y5[1].max(0.0)];
            k0 = k[6];
            traj.times.push(t);
            traj.states.push(r);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        if h < 1e-12 || steps > 5_000_000 {
            return Err(UnfoldingError::StepFailure { t, reason: format!("step size collapsed to {h:e}") });
        }
    }
    Ok(traj)
}
