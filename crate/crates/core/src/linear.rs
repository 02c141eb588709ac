//! Linear stability of the coexistence state.
//!
//! Mode `n` of the linearization has characteristic function
//!
//! ```text
//! Gamma_n(lambda) = det(lambda I + kappa D1 + kappa e^{-lambda tau} D2 - A)
//!                 = lambda^2 - T_n lambda + J_n - K_n e^{-lambda tau}
//! ```
//!
//! with `kappa = (n/ell)^2`, `D1 = diag(d11, d22)`, `D2 = [[0, 0], [-d21 v*, 0]]`
//! and `K_n = d21 v* a12 kappa`. Purely imaginary roots `i omega` solve
//! `omega^4 + P_n omega^2 + Q_n = 0`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::LinearError;
use crate::kinetics::{Equilibrium, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "+" | "plus" | "Plus" => Some(Branch::Plus),
            "-" | "minus" | "Minus" => Some(Branch::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A Hopf curve `tau_{n,j}^{branch}(d21)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurveLabel {
    pub n: u32,
    pub branch: Branch,
    pub j: u32,
}

impl CurveLabel {
    pub fn new(n: u32, branch: Branch, j: u32) -> Self {
        Self { n, branch, j }
    }
}

impl fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tau_{{{},{}}}^{}", self.n, self.j, self.branch)
    }
}

impl std::str::FromStr for CurveLabel {
    type Err = String;

    /// Parses `n<sign>j`, e.g. `2+1` or `2-0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let pos = s.find(['+', '-']).ok_or_else(|| format!("curve `{s}`: expected n+j or n-j"))?;
        let n = s[..pos].trim().parse().map_err(|_| format!("curve `{s}`: bad mode number"))?;
        let j = s[pos + 1..].trim().parse().map_err(|_| format!("curve `{s}`: bad branch index"))?;
        let branch = Branch::parse(&s[pos..pos + 1]).expect("sign checked above");
        Ok(CurveLabel { n, branch, j })
    }
}

/// Coefficients of the mode-`n` characteristic quartic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicData {
    pub n: u32,
    pub kappa: f64,
    pub t: f64,
    pub j: f64,
    /// Memory coupling `d21 v* a12 kappa`.
    pub k: f64,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
}

/// `lambda I + kappa D1 + kappa e^{-lambda tau} D2 - A`.
pub fn char_matrix(n: u32, lambda: C64, params: &ModelParams, eq: &Equilibrium) -> Matrix2<C64> {
    let kappa = params.kappa(n);
    let delay = (-lambda * params.tau).exp();
    Matrix2::new(
        lambda + kappa * params.d11 - eq.a11,
        C64::from(-eq.a12),
        -kappa * params.d21 * eq.v_star * delay - eq.a21,
        lambda + kappa * params.d22 - eq.a22,
    )
}

/// Time-rescaled matrix `lambda I + tau_c kappa D1 + tau_c kappa e^{-lambda} D2 - tau_c A`
/// used by the normal form, where time is measured in units of `tau_c` and
/// `D2` carries `d21_c`.
pub fn char_matrix_rescaled(
    n: u32,
    lambda: C64,
    d21_c: f64,
    tau_c: f64,
    params: &ModelParams,
    eq: &Equilibrium,
) -> Matrix2<C64> {
    let kappa = params.kappa(n);
    let delay = (-lambda).exp();
    Matrix2::new(
        lambda + tau_c * (kappa * params.d11 - eq.a11),
        C64::from(-tau_c * eq.a12),
        -tau_c * kappa * d21_c * eq.v_star * delay - tau_c * eq.a21,
        lambda + tau_c * (kappa * params.d22 - eq.a22),
    )
}

/// `Gamma_n(lambda)` in expanded scalar form.
pub fn char_det(n: u32, lambda: C64, params: &ModelParams, eq: &Equilibrium) -> C64 {
    let cd = quartic_data(n, params, eq);
    lambda * lambda - cd.t * lambda + cd.j - cd.k * (-lambda * params.tau).exp()
}

/// `d Gamma_n / d lambda`.
pub fn char_det_dlambda(n: u32, lambda: C64, params: &ModelParams, eq: &Equilibrium) -> C64 {
    let cd = quartic_data(n, params, eq);
    2.0 * lambda - cd.t + cd.k * params.tau * (-lambda * params.tau).exp()
}

pub fn quartic_data(n: u32, params: &ModelParams, eq: &Equilibrium) -> CharacteristicData {
    let kappa = params.kappa(n);
    let t = eq.trace() - (params.d11 + params.d22) * kappa;
    let j = params.d11 * params.d22 * kappa * kappa - (params.d11 * eq.a22 + params.d22 * eq.a11) * kappa + eq.det();
    let k = params.d21 * eq.v_star * eq.a12 * kappa;
    let p = t * t - 2.0 * j;
    let q = (j - k) * (j + k);
    CharacteristicData { n, kappa, t, j, k, p, q, delta: p * p - 4.0 * q }
}

/// Positive roots `omega_n^{+-}` of `omega^4 + P omega^2 + Q = 0`, plus branch first.
pub fn hopf_frequencies(n: u32, params: &ModelParams, eq: &Equilibrium) -> Vec<(Branch, f64)> {
    let cd = quartic_data(n, params, eq);
    if cd.k == 0.0 || cd.delta < 0.0 {
        return Vec::new();
    }
    let sq = cd.delta.sqrt();
    let mut out = Vec::new();
    for branch in [Branch::Plus, Branch::Minus] {
        // Written to avoid cancellation when P^2 >> |Q|.
        let w2 = if (branch == Branch::Plus) == (cd.p <= 0.0) {
            (-cd.p + branch.sign() * sq) / 2.0
        } else {
            let big = (-cd.p - branch.sign() * sq) / 2.0;
            if big == 0.0 {
                0.0
            } else {
                cd.q / big
            }
        };
        if w2 > 0.0 {
            if branch == Branch::Minus && cd.delta == 0.0 {
                continue;
            }
            out.push((branch, w2.sqrt()));
        }
    }
    out
}

/// One frequency branch, if present.
pub fn hopf_frequency(n: u32, branch: Branch, params: &ModelParams, eq: &Equilibrium) -> Option<f64> {
    hopf_frequencies(n, params, eq).into_iter().find(|(b, _)| *b == branch).map(|(_, w)| w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfCurvePoint {
    pub n: u32,
    pub branch: Branch,
    pub j: u32,
    pub omega: f64,
    pub tau_crit: f64,
    pub d21: f64,
    /// True when the bare arccos angle had to be reflected to `2 pi - theta`.
    pub branch_corrected: bool,
    pub residual: f64,
}

/// Critical delays `tau_{n,j}^{branch}` for `j = 0..=j_max` at the current d21.
pub fn hopf_delays(
    n: u32,
    branch: Branch,
    j_max: u32,
    params: &ModelParams,
    eq: &Equilibrium,
    tol: &Tolerances,
) -> Result<Vec<HopfCurvePoint>, LinearError> {
    let cd = quartic_data(n, params, eq);
    let omega = hopf_frequency(n, branch, params, eq).ok_or(LinearError::NoImaginaryRoot { n, p: cd.p, q: cd.q })?;
    let (theta, corrected) = hopf_angle(&cd, omega, tol)?;
    let mut out = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let tau = (theta + 2.0 * PI * j as f64) / omega;
        let at = params.with_point(params.d21, tau);
        let residual = char_det(n, C64::new(0.0, omega), &at, eq).norm();
        if residual >= tol.characteristic_residual {
            return Err(LinearError::Refinement(format!(
                "residual {residual:.3e} at n = {n}, branch {branch}, j = {j}"
            )));
        }
        out.push(HopfCurvePoint {
            n,
            branch,
            j,
            omega,
            tau_crit: tau,
            d21: params.d21,
            branch_corrected: corrected,
            residual,
        });
    }
    Ok(out)
}

/// The angle `theta = omega tau mod 2 pi` at which `i omega` is a root.
///
/// `cos theta = (J - omega^2)/K` fixes theta up to reflection; the imaginary
/// part `sin theta = omega T / K` picks the branch.
fn hopf_angle(cd: &CharacteristicData, omega: f64, tol: &Tolerances) -> Result<(f64, bool), LinearError> {
    let c = (cd.j - omega * omega) / cd.k;
    if c.abs() > 1.0 + tol.arccos_slack {
        return Err(LinearError::DegenerateWindow { n: cd.n, value: c });
    }
    let theta = c.clamp(-1.0, 1.0).acos();
    let s = omega * cd.t / cd.k;
    let residual = |th: f64| (th.sin() - s).abs();
    if residual(2.0 * PI - theta) < residual(theta) {
        Ok((2.0 * PI - theta, true))
    } else {
        Ok((theta, false))
    }
}

/// Thresholds for mode `n`: `d21^(n)` where `Q_n` changes sign and, when it
/// exists, `d21^*(n)` where the discriminant vanishes.
pub fn critical_d21(n: u32, params: &ModelParams, eq: &Equilibrium) -> (f64, Option<f64>) {
    let cd = quartic_data(n, params, eq);
    let scale = eq.v_star * eq.a12.abs() * cd.kappa;
    let d_q = cd.j / scale;
    let disc = 4.0 * cd.t * cd.t * cd.j - cd.t.powi(4);
    let d_star = if disc >= 0.0 { Some(disc.sqrt() / (2.0 * scale)) } else { None };
    (d_q, d_star)
}

/// Newton refinement of a root of `Gamma_n`.
pub fn refine_root(
    n: u32,
    lambda0: C64,
    params: &ModelParams,
    eq: &Equilibrium,
    tol: f64,
    max_iter: usize,
) -> Result<C64, LinearError> {
    let mut lambda = lambda0;
    for _ in 0..max_iter {
        let d = char_det_dlambda(n, lambda, params, eq);
        if d.norm() == 0.0 {
            break;
        }
        let step = char_det(n, lambda, params, eq) / d;
        lambda -= step;
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            break;
        }
        if step.norm() <= tol * (1.0 + lambda.norm()) {
            return Ok(lambda);
        }
    }
    Err(LinearError::Refinement(format!("Newton from {lambda0} did not converge for mode {n}")))
}

/// `Re d lambda / d tau` at a root `lambda` by implicit differentiation.
pub fn crossing_speed(n: u32, lambda: C64, params: &ModelParams, eq: &Equilibrium) -> f64 {
    let cd = quartic_data(n, params, eq);
    let e = (-lambda * params.tau).exp();
    let g_tau = cd.k * lambda * e;
    let g_lambda = 2.0 * lambda - cd.t + cd.k * params.tau * e;
    (-g_tau / g_lambda).re
}

/// Same quantity by following the root to `tau +- h` with Newton.
pub fn crossing_speed_fd(
    n: u32,
    omega: f64,
    params: &ModelParams,
    eq: &Equilibrium,
    h: f64,
) -> Result<f64, LinearError> {
    let start = C64::new(0.0, omega);
    let up = refine_root(n, start, &params.with_point(params.d21, params.tau + h), eq, 1e-14, 60)?;
    let down = refine_root(n, start, &params.with_point(params.d21, params.tau - h), eq, 1e-14, 60)?;
    Ok((up.re - down.re) / (2.0 * h))
}

/// Number of roots with nonnegative real part for mode `n`, counted by
/// following the imaginary-axis crossings from `tau = 0`.
pub fn unstable_count_by_crossings(n: u32, params: &ModelParams, eq: &Equilibrium) -> usize {
    let cd = quartic_data(n, params, eq);
    let at_zero = quadratic_unstable_count(cd.t, cd.j - cd.k);
    if cd.k == 0.0 || params.tau == 0.0 {
        return at_zero;
    }
    let tol = Tolerances { characteristic_residual: f64::INFINITY, ..Tolerances::default() };
    let mut count = at_zero as i64;
    for (_, omega) in hopf_frequencies(n, params, eq) {
        let Ok((theta, _)) = hopf_angle(&cd, omega, &tol) else { continue };
        let first = theta / omega;
        if first > params.tau {
            continue;
        }
        let direction = {
            let at = params.with_point(params.d21, first);
            crossing_speed(n, C64::new(0.0, omega), &at, eq).signum()
        };
        let period = 2.0 * PI / omega;
        let crossings = ((params.tau - first) / period).floor() as i64 + 1;
        count += 2 * crossings * direction as i64;
    }
    count.max(0) as usize
}

/// Roots of `lambda^2 - t lambda + c` with nonnegative real part.
fn quadratic_unstable_count(t: f64, c: f64) -> usize {
    if c < 0.0 {
        1
    } else if t >= 0.0 {
        2
    } else if c == 0.0 {
        1
    } else {
        0
    }
}

/// Radius containing every root with nonnegative real part.
fn right_half_radius(cd: &CharacteristicData) -> f64 {
    let b = cd.t.abs();
    let c = cd.j.abs() + cd.k.abs();
    (b + (b * b + 4.0 * c).sqrt()) / 2.0 + 1.0
}

/// Roots of `Gamma_n` inside `[-shift, R] x [-R, R]` by the argument principle.
pub fn unstable_count_by_winding(n: u32, params: &ModelParams, eq: &Equilibrium, shift: f64) -> usize {
    let cd = quartic_data(n, params, eq);
    let r = right_half_radius(&cd);
    let corners = [C64::new(-shift, -r), C64::new(r, -r), C64::new(r, r), C64::new(-shift, r)];
    let g = |z: C64| z * z - cd.t * z + cd.j - cd.k * (-z * params.tau).exp();
    let mut total = 0.0;
    for k in 0..4 {
        total += arg_change(&g, corners[k], corners[(k + 1) % 4], 0);
    }
    (total / (2.0 * PI)).round().max(0.0) as usize
}

fn arg_change(g: &dyn Fn(C64) -> C64, a: C64, b: C64, depth: u32) -> f64 {
    const PIECES: usize = 64;
    let mut total = 0.0;
    let mut prev_z = a;
    let mut prev = g(a);
    for i in 1..=PIECES {
        let z = a + (b - a) * (i as f64 / PIECES as f64);
        let val = g(z);
        let d = (val / prev).arg();
        if d.abs() > 0.5 && depth < 12 {
            total += arg_change(g, prev_z, z, depth + 1);
        } else {
            total += d;
        }
        prev_z = z;
        prev = val;
    }
    total
}

/// Best-effort location of the rightmost root of mode `n` by Newton from
/// the imaginary-axis frequencies and a coarse grid of seeds.
pub fn rightmost_root(n: u32, params: &ModelParams, eq: &Equilibrium) -> Option<C64> {
    let cd = quartic_data(n, params, eq);
    let r = right_half_radius(&cd);
    let mut seeds: Vec<C64> = hopf_frequencies(n, params, eq).into_iter().map(|(_, w)| C64::new(0.0, w)).collect();
    for i in 0..=8 {
        for k in 0..=4 {
            seeds.push(C64::new(r * (k as f64 / 4.0 - 0.25), r * i as f64 / 8.0));
        }
    }
    seeds
        .into_iter()
        .filter_map(|s| refine_root(n, s, params, eq, 1e-12, 80).ok())
        .filter(|z| char_det(n, *z, params, eq).norm() < 1e-8 && z.im >= -1e-12)
        .max_by(|a, b| a.re.total_cmp(&b.re))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStability {
    pub n: u32,
    pub unstable_roots: usize,
    pub rightmost: Option<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable { leading_modes: Vec<u32> },
    Inconclusive { mode: u32, by_crossings: usize, by_winding: usize },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable { .. } => "Unstable",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn leading_mode(&self) -> Option<u32> {
        match self {
            Verdict::Unstable { leading_modes } => leading_modes.first().copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub n_max: u32,
    pub unstable_modes: Vec<ModeStability>,
}

/// Smallest mode count past which no mode can lose stability.
///
/// Beyond the largest real root (in kappa) of `T`, `P`, `J - K` and `J + K`
/// all four have their large-kappa sign, so those modes have no imaginary
/// roots and are stable at `tau = 0`.
pub fn auto_n_max(params: &ModelParams, eq: &Equilibrium) -> u32 {
    let min_d = params.d11.min(params.d22);
    let start = (params.ell * (eq.trace().max(0.0) / min_d).sqrt()).ceil() as u32 + 5;
    let (d11, d22) = (params.d11, params.d22);
    let kv = params.d21 * eq.v_star * eq.a12;
    // J(kappa) = c2 kappa^2 + c1 kappa + c0
    let (c2, c1, c0) = (d11 * d22, -(d11 * eq.a22 + d22 * eq.a11), eq.det());
    let t1 = -(d11 + d22);
    let t0 = eq.trace();
    let mut kappa_tail: f64 = (t0 / -t1).max(0.0);
    let quads = [
        // P = T^2 - 2J
        (t1 * t1 - 2.0 * c2, 2.0 * t0 * t1 - 2.0 * c1, t0 * t0 - 2.0 * c0),
        (c2, c1 - kv, c0),
        (c2, c1 + kv, c0),
    ];
    for (a, b, c) in quads {
        if a != 0.0 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                kappa_tail = kappa_tail.max((-b + s) / (2.0 * a)).max((-b - s) / (2.0 * a));
            }
        }
    }
    let n_tail = (params.ell * kappa_tail.sqrt()).floor() as u32 + 1;
    let mut n_max = start;
    while n_max < n_tail {
        n_max *= 2;
    }
    n_max
}

/// Stability of the coexistence state at the parameters' `(d21, tau)`.
///
/// Each mode is decided twice: by counting imaginary-axis crossings from
/// `tau = 0` and by an argument-principle winding count. Disagreement yields
/// [`Verdict::Inconclusive`].
pub fn stability_verdict(params: &ModelParams, eq: &Equilibrium, n_max: Option<u32>) -> StabilityReport {
    let n_max = n_max.unwrap_or(0).max(auto_n_max(params, eq));
    let mut unstable = Vec::new();
    for n in 0..=n_max {
        let by_crossings = unstable_count_by_crossings(n, params, eq);
        let by_winding = unstable_count_by_winding(n, params, eq, 1e-9);
        if by_crossings != by_winding {
            return StabilityReport {
                verdict: Verdict::Inconclusive { mode: n, by_crossings, by_winding },
                n_max,
                unstable_modes: unstable,
            };
        }
        if by_crossings > 0 {
            unstable.push(ModeStability { n, unstable_roots: by_crossings, rightmost: rightmost_root(n, params, eq) });
        }
    }
    let verdict = if unstable.is_empty() {
        Verdict::Stable
    } else {
        let mut order: Vec<&ModeStability> = unstable.iter().collect();
        order.sort_by(|a, b| {
            let ra = a.rightmost.map(|z| z.re).unwrap_or(f64::NEG_INFINITY);
            let rb = b.rightmost.map(|z| z.re).unwrap_or(f64::NEG_INFINITY);
            rb.total_cmp(&ra)
        });
        Verdict::Unstable { leading_modes: order.iter().map(|m| m.n).collect() }
    };
    StabilityReport { verdict, n_max, unstable_modes: unstable }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resonance {
    Strong { m1: u32, m2: u32 },
    Weak { m1: u32, m2: u32 },
    Nonresonant,
}

impl Resonance {
    pub fn is_strong(&self) -> bool {
        matches!(self, Resonance::Strong { .. })
    }
}

/// Low-order resonance test `m1 omega1 = m2 omega2`, strong for
/// `m1 + m2 <= 4`, weak for `m1 + m2 <= 12`.
pub fn resonance_check(omega1: f64, omega2: f64, m_tol: f64) -> Resonance {
    let hit = |limit: u32| {
        for sum in 2..=limit {
            for m1 in 1..sum {
                let m2 = sum - m1;
                if (m1 as f64 * omega1 - m2 as f64 * omega2).abs() < m_tol * (omega1 + omega2) {
                    return Some((m1, m2));
                }
            }
        }
        None
    };
    if let Some((m1, m2)) = hit(4) {
        Resonance::Strong { m1, m2 }
    } else if let Some((m1, m2)) = hit(12) {
        Resonance::Weak { m1, m2 }
    } else {
        Resonance::Nonresonant
    }
}

/// Intersection of two Hopf curves, with mode 1 the lower `(n, omega)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleHopfPoint {
    pub d21_c: f64,
    pub tau_c: f64,
    pub n1: u32,
    pub n2: u32,
    pub omega1: f64,
    pub omega2: f64,
    pub omega1c: f64,
    pub omega2c: f64,
    pub curve1: CurveLabel,
    pub curve2: CurveLabel,
    pub resonance: Resonance,
    pub residuals: [f64; 2],
    /// `Re d lambda / d tau` for each pair at the point.
    pub crossing_speeds: [f64; 2],
}

/// Rectangle in `(d21, tau)` to search for a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub d21: (f64, f64),
    pub tau: (f64, f64),
}

fn curve_tau(label: CurveLabel, d21: f64, params: &ModelParams, eq: &Equilibrium) -> Option<(f64, f64)> {
    let at = params.with_point(d21, params.tau);
    let cd = quartic_data(label.n, &at, eq);
    let omega = hopf_frequency(label.n, label.branch, &at, eq)?;
    let tol = Tolerances { arccos_slack: 1e-9, ..Tolerances::default() };
    let (theta, _) = hopf_angle(&cd, omega, &tol).ok()?;
    Some(((theta + 2.0 * PI * label.j as f64) / omega, omega))
}

/// Sample a Hopf curve on a d21 grid, skipping points where it is undefined.
pub fn hopf_curve_polyline(
    label: CurveLabel,
    d21_range: (f64, f64),
    samples: usize,
    params: &ModelParams,
    eq: &Equilibrium,
) -> Vec<HopfCurvePoint> {
    let tol = Tolerances::default();
    (0..samples)
        .filter_map(|i| {
            let s = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.0 };
            let d21 = d21_range.0 + s * (d21_range.1 - d21_range.0);
            let at = params.with_point(d21, params.tau);
            hopf_delays(label.n, label.branch, label.j, &at, eq, &tol).ok().and_then(|v| v.last().copied())
        })
        .collect()
}

/// Locate `tau_{curve1}(d21) = tau_{curve2}(d21)` inside the box by a sign
/// scan followed by bisection.
pub fn find_double_hopf(
    curve1: CurveLabel,
    curve2: CurveLabel,
    search: SearchBox,
    params: &ModelParams,
    eq: &Equilibrium,
    tol: &Tolerances,
) -> Result<DoubleHopfPoint, LinearError> {
    let (lo, hi) = search.d21;
    let no_crossing = LinearError::NoCrossing { lo, hi };
    let diff = |d: f64| -> Option<f64> {
        let (t1, _) = curve_tau(curve1, d, params, eq)?;
        let (t2, _) = curve_tau(curve2, d, params, eq)?;
        Some(t1 - t2)
    };
    const SCAN: usize = 400;
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=SCAN {
        let d = lo + (hi - lo) * i as f64 / SCAN as f64;
        let Some(v) = diff(d) else {
            prev = None;
            continue;
        };
        if let Some((pd, pv)) = prev {
            if pv == 0.0 || pv.signum() != v.signum() {
                bracket = Some((pd, d, pv));
                break;
            }
        }
        prev = Some((d, v));
    }
    let (mut a, mut b, mut fa) = bracket.ok_or(no_crossing.clone())?;
    while (b - a).abs() > tol.bisection * a.abs().max(1.0) {
        let m = 0.5 * (a + b);
        let fm = diff(m).ok_or(no_crossing.clone())?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let d21_c = 0.5 * (a + b);
    let (tau_1, w_1) = curve_tau(curve1, d21_c, params, eq).ok_or(no_crossing.clone())?;
    let (tau_2, w_2) = curve_tau(curve2, d21_c, params, eq).ok_or(no_crossing.clone())?;
    let tau_c = 0.5 * (tau_1 + tau_2);
    if tau_c < search.tau.0 || tau_c > search.tau.1 {
        return Err(no_crossing);
    }
    let mut pairs = [(curve1, w_1), (curve2, w_2)];
    pairs.sort_by(|x, y| (x.0.n, x.1).partial_cmp(&(y.0.n, y.1)).unwrap());
    let [(c1, omega1), (c2, omega2)] = pairs;
    let at = params.with_point(d21_c, tau_c);
    let residuals =
        [char_det(c1.n, C64::new(0.0, omega1), &at, eq).norm(), char_det(c2.n, C64::new(0.0, omega2), &at, eq).norm()];
    for r in residuals {
        if r >= tol.characteristic_residual {
            return Err(LinearError::Refinement(format!("double Hopf residual {r:.3e}")));
        }
    }
    let crossing_speeds =
        [crossing_speed(c1.n, C64::new(0.0, omega1), &at, eq), crossing_speed(c2.n, C64::new(0.0, omega2), &at, eq)];
    Ok(DoubleHopfPoint {
        d21_c,
        tau_c,
        n1: c1.n,
        n2: c2.n,
        omega1,
        omega2,
        omega1c: tau_c * omega1,
        omega2c: tau_c * omega2,
        curve1: c1,
        curve2: c2,
        resonance: resonance_check(omega1, omega2, tol.resonance),
        residuals,
        crossing_speeds,
    })
}

/// One node of a stability map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub d21: f64,
    pub tau: f64,
    pub verdict: Verdict,
}

/// Verdicts on the tensor grid `d21s x taus`, evaluated in parallel. The
/// output order is row-major in `(d21, tau)` regardless of scheduling.
pub fn stability_map(params: &ModelParams, eq: &Equilibrium, d21s: &[f64], taus: &[f64]) -> Vec<MapCell> {
    let nodes: Vec<(f64, f64)> = d21s.iter().flat_map(|&d| taus.iter().map(move |&t| (d, t))).collect();
    nodes
        .par_iter()
        .map(|&(d21, tau)| {
            let at = params.with_point(d21, tau);
            MapCell { d21, tau, verdict: stability_verdict(&at, eq, None).verdict }
        })
        .collect()
}
