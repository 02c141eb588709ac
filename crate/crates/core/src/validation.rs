//! Acceptance suite: one [`CriterionResult`] per numbered criterion, each
//! carrying the measured values next to the targets.
//!
//! Failures are data. Nothing here panics or returns an error; a stage that
//! cannot be computed becomes a failed check with the error message as the
//! measured value.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{case_one, case_two, ModelSpec, Tolerances};
use crate::kinetics::{taylor_coefficients, DerivativeSource, Equilibrium, ModelParams, TaylorTable};
use crate::linear::{
    critical_d21, find_double_hopf, quartic_data, stability_verdict, Branch, CurveLabel, DoubleHopfPoint, SearchBox,
    Verdict,
};
use crate::normalform::{
    eigenbasis, eigenbasis_residuals, normal_form, AmplitudeSystem, CaseTag, HSolver, NormalFormCoefficients,
};
use crate::simulator::{simulate, AttractorKind, AttractorReport, InitialCondition, SimConfig, SimResult};
use crate::unfolding::{
    amplitude_equilibria, classify_point, region_lines, sectors, simulate_amplitude, DynamicsLabel, EqKind, LineName,
};

/// Target values the suite compares against.
pub mod reference {
    pub const THRESHOLD_D21_2: (f64, f64) = (524.0, 75.0);
    pub const THRESHOLD_D21_3: (f64, f64) = (1612.0, 225.0);
    pub const THRESHOLD_D21_1: (f64, f64) = (1316.0, 75.0);
    pub const THRESHOLD_STAR_2: (f64, f64) = (927.0, 134.0);
    pub const THRESHOLD_STAR_1: (f64, f64) = (6851.0, 633.0);

    pub const P1: (f64, f64) = (6.9618, 13.1290);
    pub const P1_OMEGA: (f64, f64) = (0.2222, 0.6629);
    pub const P2: (f64, f64) = (4.1350, 4.0276);
    pub const P2_OMEGA: (f64, f64) = (0.2671, 0.3666);

    /// `(delta1, delta2, p)` as `[d11, d12, d21, d22, p11, p12, p21, p22]`.
    pub const NF1: [f64; 8] = [-4.1681e-4, 0.1332, 0.0036, 0.1311, -0.1428, 6.003, -5.4981, -2.2507];
    pub const NF2: [f64; 8] = [0.0781, 0.1224, 0.0595, 0.1653, -1.4203, -4.2174, -1.8176, -2.3315];

    /// Slopes of `H1, H2, L1, L2` in `tau - tau_c = s (d21 - d21_c)`.
    pub const SLOPES1: [f64; 4] = [319.6, -36.4988, 254.4824, -52.6919];
    pub const SLOPES2: [f64; 4] = [-2.7794, -1.5672, 0.2140, -5.991];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn new(label: impl Into<String>, measured: impl Into<String>, expected: impl Into<String>, pass: bool) -> Self {
        Self { label: label.into(), measured: measured.into(), expected: expected.into(), pass }
    }

    fn error(label: impl Into<String>, err: impl fmt::Display) -> Self {
        Self::new(label, format!("error: {err}"), "computable", false)
    }

    /// `|measured - target| <= tol`.
    fn abs(label: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(label, fmt_num(measured), format!("{} ± {tol:e}", fmt_num(target)), (measured - target).abs() <= tol)
    }

    /// `|measured - target| <= tol |target|`.
    fn rel(label: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        let dev = rel_dev(measured, target);
        Self::new(
            label,
            format!("{} (rel {dev:.2e})", fmt_num(measured)),
            format!("{} rel ± {tol:e}", fmt_num(target)),
            dev <= tol,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub skipped: bool,
    /// Overrides the all-checks rule when a criterion has an accepted
    /// alternative outcome.
    pub verdict_override: Option<bool>,
}

impl CriterionResult {
    fn new(id: u8, title: &str) -> Self {
        Self { id, title: title.into(), checks: Vec::new(), notes: Vec::new(), skipped: false, verdict_override: None }
    }

    fn skipped(id: u8, title: &str, why: &str) -> Self {
        let mut r = Self::new(id, title);
        r.skipped = true;
        r.notes.push(why.into());
        r
    }

    pub fn status(&self) -> Status {
        if self.skipped {
            Status::Skipped
        } else if self.verdict_override.unwrap_or_else(|| !self.checks.is_empty() && self.checks.iter().all(|c| c.pass))
        {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// One line: status, id, title and the failing checks.
    pub fn summary_line(&self) -> String {
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {} (want {})", c.label, c.measured, c.expected))
            .collect();
        let mut line = format!("{} criterion {:>2}: {}", self.status(), self.id, self.title);
        if !failing.is_empty() {
            line.push_str(" | ");
            line.push_str(&failing.join("; "));
        }
        line
    }
}

/// Horizons and resolution of the simulation criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub m: usize,
    /// End time of the decay run.
    pub t_equilibrium: f64,
    /// End time of the runs near the double Hopf point, where linear rates
    /// are of order `1e-5`.
    pub t_near_critical: f64,
    /// End time of the bistability runs.
    pub t_bistable: f64,
    /// Tail window used for classification.
    pub tail: f64,
    pub record_every: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            m: 256,
            t_equilibrium: 3000.0,
            t_near_critical: 20000.0,
            t_bistable: 4000.0,
            tail: 2000.0,
            record_every: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub analysis: bool,
    pub simulations: bool,
    /// Criterion 11 (random property suites).
    pub properties: bool,
    pub seed: u64,
    pub random_parameter_sets: usize,
    pub amplitude_points: usize,
    pub simulation: SimulationSettings,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            analysis: true,
            simulations: false,
            properties: true,
            seed: 20240613,
            random_parameter_sets: 20,
            amplitude_points: 200,
            simulation: SimulationSettings::default(),
        }
    }
}

/// Everything derived at one double Hopf point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub eq: Equilibrium,
    pub taylor: TaylorTable,
    pub dhp: DoubleHopfPoint,
    pub nf: NormalFormCoefficients,
    pub amp: AmplitudeSystem,
}

/// Curves and search box of the first worked example.
pub fn case_one_curves() -> (CurveLabel, CurveLabel, SearchBox) {
    (
        CurveLabel::new(2, Branch::Plus, 1),
        CurveLabel::new(2, Branch::Minus, 0),
        SearchBox { d21: (6.5, 7.5), tau: (0.0, 30.0) },
    )
}

/// Curves and search box of the second worked example.
pub fn case_two_curves() -> (CurveLabel, CurveLabel, SearchBox) {
    (
        CurveLabel::new(1, Branch::Plus, 0),
        CurveLabel::new(2, Branch::Plus, 0),
        SearchBox { d21: (3.0, 6.0), tau: (0.0, 30.0) },
    )
}

/// Locate the double Hopf point and compute its normal form.
pub fn analyse(
    spec: &ModelSpec,
    curves: (CurveLabel, CurveLabel, SearchBox),
    solver: HSolver,
    tol: &Tolerances,
) -> Result<PointAnalysis, String> {
    let params = spec.build().map_err(|e| e.to_string())?;
    let eq = params.equilibrium().map_err(|e| e.to_string())?;
    let taylor = taylor_coefficients(params.kinetics.as_ref(), &eq, 3, DerivativeSource::ClosedForm)
        .map_err(|e| e.to_string())?;
    let dhp = find_double_hopf(curves.0, curves.1, curves.2, &params, &eq, tol).map_err(|e| e.to_string())?;
    let (nf, amp) = normal_form(&dhp, &params, &eq, &taylor, solver, tol).map_err(|e| e.to_string())?;
    Ok(PointAnalysis { spec: spec.clone(), params, eq, taylor, dhp, nf, amp })
}

/// Coefficients in the order of [`reference::NF1`].
pub fn coefficient_vector(amp: &AmplitudeSystem) -> [f64; 8] {
    [
        amp.delta[0][0],
        amp.delta[0][1],
        amp.delta[1][0],
        amp.delta[1][1],
        amp.p[0][0],
        amp.p[0][1],
        amp.p[1][0],
        amp.p[1][1],
    ]
}

const COEFF_NAMES: [&str; 8] = ["delta1.mu1", "delta1.mu2", "delta2.mu1", "delta2.mu2", "p11", "p12", "p21", "p22"];

/// Slopes in `H1, H2, L1, L2` order; vertical lines become infinite.
pub fn line_slopes(amp: &AmplitudeSystem) -> [f64; 4] {
    let lines = region_lines(amp);
    let mut out = [f64::NAN; 4];
    for line in lines {
        let k = match line.name {
            LineName::H1 => 0,
            LineName::H2 => 1,
            LineName::L1 => 2,
            LineName::L2 => 3,
        };
        out[k] = line.slope.unwrap_or(f64::INFINITY);
    }
    out
}

fn rel_dev(measured: f64, target: f64) -> f64 {
    if target == 0.0 {
        measured.abs()
    } else {
        ((measured - target) / target).abs()
    }
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) {
        format!("{x:.6e}")
    } else {
        format!("{x:.6}")
    }
}

fn ratio((num, den): (f64, f64)) -> f64 {
    num / den
}

/// Run the selected criteria.
pub fn run(opts: &ValidationOptions) -> Vec<CriterionResult> {
    let tol = Tolerances::default();
    let p1 = analyse(&case_one(), case_one_curves(), HSolver::Auto, &tol);
    let p2 = analyse(&case_two(), case_two_curves(), HSolver::Auto, &tol);
    let mut out = Vec::new();
    if opts.analysis {
        out.push(criterion_1());
        out.push(criterion_2());
        out.push(criterion_3(&p1));
        out.push(criterion_4(&p2));
        out.push(match &p1 {
            Ok(a) => criterion_5(&a.amp),
            Err(e) => failed(5, TITLES[4], e),
        });
        out.push(criterion_6(&p1, &tol));
        let c4 = out[3].status() == Status::Pass;
        out.push(criterion_7(&p2, c4, &tol));
        out.push(criterion_8());
    } else {
        for id in 1..=8 {
            out.push(CriterionResult::skipped(id, TITLES[id as usize - 1], "analysis criteria not selected"));
        }
    }
    if opts.simulations {
        let (c9, c10) = simulation_criteria(&opts.simulation);
        out.push(c9);
        out.push(c10);
    } else {
        out.push(CriterionResult::skipped(9, TITLES[8], "simulation criteria not selected"));
        out.push(CriterionResult::skipped(10, TITLES[9], "simulation criteria not selected"));
    }
    if opts.properties {
        out.push(criterion_11(opts, &p1, &p2, &tol));
    } else {
        out.push(CriterionResult::skipped(11, TITLES[10], "property suites not selected"));
    }
    out
}

pub const TITLES: [&str; 11] = [
    "instability thresholds",
    "sign of P_n",
    "double Hopf point, first example",
    "double Hopf point, second example",
    "normal form, first example",
    "region lines and sectors, first example",
    "normal form and region lines, second example",
    "stability below the d21* threshold",
    "simulation vs unfolding, first example",
    "bistability, second example",
    "property suites",
];

fn failed(id: u8, title: &str, err: &str) -> CriterionResult {
    let mut r = CriterionResult::new(id, title);
    r.checks.push(Check::error("analysis", err));
    r
}

fn case_one_point() -> Option<(ModelParams, Equilibrium)> {
    let params = case_one().build().ok()?;
    let eq = params.equilibrium().ok()?;
    Some((params, eq))
}

pub fn criterion_1() -> CriterionResult {
    let mut r = CriterionResult::new(1, TITLES[0]);
    let Some((params, eq)) = case_one_point() else {
        r.checks.push(Check::error("model", "case one parameters rejected"));
        return r;
    };
    let targets = [
        ("d21^(2)", 2, false, reference::THRESHOLD_D21_2),
        ("d21^(3)", 3, false, reference::THRESHOLD_D21_3),
        ("d21^(1)", 1, false, reference::THRESHOLD_D21_1),
        ("d21*^(2)", 2, true, reference::THRESHOLD_STAR_2),
        ("d21*^(1)", 1, true, reference::THRESHOLD_STAR_1),
    ];
    for (label, n, star, target) in targets {
        let (dq, ds) = critical_d21(n, &params, &eq);
        let value = if star { ds.unwrap_or(f64::NAN) } else { dq };
        r.checks.push(Check::rel(label, value, ratio(target), 1e-10));
    }
    r
}

pub fn criterion_2() -> CriterionResult {
    let mut r = CriterionResult::new(2, TITLES[1]);
    let Some((params, eq)) = case_one_point() else {
        r.checks.push(Check::error("model", "case one parameters rejected"));
        return r;
    };
    for n in 1..=2 {
        let p = quartic_data(n, &params, &eq).p;
        r.checks.push(Check::new(format!("P_{n}"), fmt_num(p), "< 0", p < 0.0));
    }
    let wrong: Vec<u32> = (3..=200).filter(|&n| quartic_data(n, &params, &eq).p <= 0.0).collect();
    r.checks.push(Check::new(
        "P_n for n = 3..200",
        if wrong.is_empty() { "all positive".to_string() } else { format!("non-positive at {wrong:?}") },
        "> 0",
        wrong.is_empty(),
    ));
    r
}

fn point_checks(r: &mut CriterionResult, dhp: &DoubleHopfPoint, loc: (f64, f64), omega: (f64, f64)) {
    r.checks.push(Check::abs("d21_c", dhp.d21_c, loc.0, 1e-2));
    r.checks.push(Check::abs("tau_c", dhp.tau_c, loc.1, 1e-2));
    let mut w = [dhp.omega1, dhp.omega2];
    w.sort_by(f64::total_cmp);
    r.checks.push(Check::abs("omega (lower)", w[0], omega.0, 1e-3));
    r.checks.push(Check::abs("omega (upper)", w[1], omega.1, 1e-3));
}

pub fn criterion_3(p1: &Result<PointAnalysis, String>) -> CriterionResult {
    let mut r = CriterionResult::new(3, TITLES[2]);
    match p1 {
        Ok(a) => {
            point_checks(&mut r, &a.dhp, reference::P1, reference::P1_OMEGA);
            for (k, res) in a.dhp.residuals.iter().enumerate() {
                r.checks.push(Check::new(format!("residual {}", k + 1), format!("{res:.2e}"), "< 1e-8", *res < 1e-8));
            }
        }
        Err(e) => r.checks.push(Check::error("detection", e)),
    }
    r
}

pub fn criterion_4(p2: &Result<PointAnalysis, String>) -> CriterionResult {
    let mut r = CriterionResult::new(4, TITLES[3]);
    match p2 {
        Ok(a) => {
            point_checks(&mut r, &a.dhp, reference::P2, reference::P2_OMEGA);
            // Independent plausibility of the target pair: substitute it into
            // the frequency quartic of each mode.
            for (label, n, w) in [("mode 1", 1, reference::P2_OMEGA.1), ("mode 2", 2, reference::P2_OMEGA.0)] {
                let at = a.params.with_point(a.dhp.d21_c, a.dhp.tau_c);
                let cd = quartic_data(n, &at, &a.eq);
                let res = w.powi(4) + cd.p * w * w + cd.q;
                r.notes.push(format!("quartic residual of target omega {w} for {label}: {res:.4}"));
            }
        }
        Err(e) => r.checks.push(Check::error("detection", e)),
    }
    r
}

/// Coefficient, sign-pattern and case-tag checks against the first example.
pub fn criterion_5(amp: &AmplitudeSystem) -> CriterionResult {
    let mut r = CriterionResult::new(5, TITLES[4]);
    let got = coefficient_vector(amp);
    for k in 0..8 {
        r.checks.push(Check::rel(COEFF_NAMES[k], got[k], reference::NF1[k], 0.02));
    }
    let signs_ok = got.iter().zip(reference::NF1).all(|(g, t)| g.signum() == t.signum());
    r.checks.push(Check::new("sign pattern", sign_string(&got), sign_string(&reference::NF1), signs_ok));
    r.checks.push(Check::new("case", format!("{:?}", amp.case), "Simple", amp.case == CaseTag::Simple));
    r
}

fn sign_string(x: &[f64]) -> String {
    x.iter().map(|v| if *v < 0.0 { '-' } else { '+' }).collect()
}

pub fn criterion_6(p1: &Result<PointAnalysis, String>, tol: &Tolerances) -> CriterionResult {
    let mut r = CriterionResult::new(6, TITLES[5]);
    let a = match p1 {
        Ok(a) => a,
        Err(e) => return failed(6, TITLES[5], e),
    };
    let slopes = line_slopes(&a.amp);
    for (k, name) in ["H1", "H2", "L1", "L2"].iter().enumerate() {
        r.checks.push(Check::rel(*name, slopes[k], reference::SLOPES1[k], 0.02));
    }
    match sectors(&a.amp, &a.dhp, tol) {
        Ok(s) => {
            r.checks.push(Check::new("sector count", s.sectors.len().to_string(), "6", s.sectors.len() == 6));
            for sec in &s.sectors {
                r.notes.push(format!("sector {}: {}", sec.index, sec.label));
            }
        }
        Err(e) => r.checks.push(Check::error("sectors", e)),
    }
    r
}

/// Second example. Passes outright when the coefficients and slopes match,
/// or through the discrepancy route: criterion 4 passes and the point
/// (4.4, 4.3) is still classified as bistable.
pub fn criterion_7(p2: &Result<PointAnalysis, String>, criterion_4_passed: bool, tol: &Tolerances) -> CriterionResult {
    let mut r = CriterionResult::new(7, TITLES[6]);
    let a = match p2 {
        Ok(a) => a,
        Err(e) => return failed(7, TITLES[6], e),
    };
    let got = coefficient_vector(&a.amp);
    for k in 0..8 {
        r.checks.push(Check::rel(COEFF_NAMES[k], got[k], reference::NF2[k], 0.02));
    }
    // H-lines are matched as an unordered pair: which delta is called the
    // first is a naming convention.
    let slopes = line_slopes(&a.amp);
    let (h_direct, h_swapped) = (
        rel_dev(slopes[0], reference::SLOPES2[0]).max(rel_dev(slopes[1], reference::SLOPES2[1])),
        rel_dev(slopes[1], reference::SLOPES2[0]).max(rel_dev(slopes[0], reference::SLOPES2[1])),
    );
    let (h_a, h_b) = if h_swapped < h_direct { (slopes[1], slopes[0]) } else { (slopes[0], slopes[1]) };
    r.checks.push(Check::rel("H (first)", h_a, reference::SLOPES2[0], 0.02));
    r.checks.push(Check::rel("H (second)", h_b, reference::SLOPES2[1], 0.02));
    r.checks.push(Check::rel("L1", slopes[2], reference::SLOPES2[2], 0.02));
    r.checks.push(Check::rel("L2", slopes[3], reference::SLOPES2[3], 0.02));
    let direct = r.checks.iter().all(|c| c.pass);
    if !direct {
        r.notes.push(format!(
            "discrepancy report at detected point (d21_c, tau_c) = ({:.6}, {:.6}):",
            a.dhp.d21_c, a.dhp.tau_c
        ));
        for k in 0..8 {
            r.notes.push(format!(
                "  {} computed {} target {} (rel {:.2e})",
                COEFF_NAMES[k],
                fmt_num(got[k]),
                fmt_num(reference::NF2[k]),
                rel_dev(got[k], reference::NF2[k])
            ));
        }
        let bistable = match classify_point(&a.amp, &a.dhp, 4.4, 4.3, tol) {
            Ok(c) => {
                r.notes.push(format!("classification at (4.4, 4.3): {}", c.label));
                matches!(c.label, DynamicsLabel::Bistable(..))
            }
            Err(e) => {
                r.notes.push(format!("classification at (4.4, 4.3) failed: {e}"));
                false
            }
        };
        r.notes.push(format!(
            "alternative outcome requires criterion 4 to pass ({criterion_4_passed}) and (4.4, 4.3) to stay bistable ({bistable})"
        ));
        r.verdict_override = Some(criterion_4_passed && bistable);
    }
    r
}

pub fn criterion_8() -> CriterionResult {
    let mut r = CriterionResult::new(8, TITLES[7]);
    let Some((params, eq)) = case_one_point() else {
        r.checks.push(Check::error("model", "case one parameters rejected"));
        return r;
    };
    let limit = ratio(reference::THRESHOLD_STAR_2);
    let nodes: Vec<(f64, f64)> =
        (1..=20).flat_map(|k| [0.0, 1.0, 10.0, 50.0].map(|tau| (limit * k as f64 / 21.0, tau))).collect();
    let bad: Vec<String> = nodes
        .par_iter()
        .filter_map(|&(d21, tau)| {
            let v = stability_verdict(&params.with_point(d21, tau), &eq, None).verdict;
            (v != Verdict::Stable).then(|| format!("({d21:.4}, {tau}): {v:?}"))
        })
        .collect();
    r.checks.push(Check::new(
        "80 nodes d21 in (0, 927/134), tau in {0, 1, 10, 50}",
        if bad.is_empty() { "all Stable".to_string() } else { bad.join(", ") },
        "Stable",
        bad.is_empty(),
    ));
    r
}

/// One simulation of the acceptance set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCase {
    pub name: String,
    pub spec: ModelSpec,
    pub ic: InitialCondition,
    pub t_end: f64,
}

/// The runs behind criteria 9 and 10 with their initial data.
pub fn simulation_cases(s: &SimulationSettings) -> Vec<SimulationCase> {
    let at = |base: ModelSpec, d21: f64, tau: f64| ModelSpec { d21, tau, ..base };
    let cos = |amp_u: f64, amp_v: f64, k: f64| InitialCondition::Cosine { amp_u, amp_v, k };
    vec![
        SimulationCase {
            name: "(6.95, 12.5)".into(),
            spec: at(case_one(), 6.95, 12.5),
            ic: cos(0.005, -0.005, 1.0),
            t_end: s.t_equilibrium,
        },
        SimulationCase {
            name: "(6.96, 12.5)".into(),
            spec: at(case_one(), 6.96, 12.5),
            ic: cos(0.005, -0.005, 1.0),
            t_end: s.t_near_critical,
        },
        SimulationCase {
            name: "(6.945, 13.9)".into(),
            spec: at(case_one(), 6.945, 13.9),
            ic: cos(0.01, -0.01, 1.0),
            t_end: s.t_near_critical,
        },
        SimulationCase {
            name: "(6.95, 14)".into(),
            spec: at(case_one(), 6.95, 14.0),
            ic: cos(0.02, 0.01, 1.0),
            t_end: s.t_near_critical,
        },
        SimulationCase {
            name: "(4.4, 4.3) cos(x/2)".into(),
            spec: at(case_two(), 4.4, 4.3),
            ic: cos(0.1, 0.1, 0.5),
            t_end: s.t_bistable,
        },
        SimulationCase {
            name: "(4.4, 4.3) cos(x)".into(),
            spec: at(case_two(), 4.4, 4.3),
            ic: cos(0.1, 0.1, 1.0),
            t_end: s.t_bistable,
        },
    ]
}

/// Run one case and classify its tail.
pub fn run_simulation_case(
    case: &SimulationCase,
    s: &SimulationSettings,
) -> Result<(SimResult, AttractorReport), String> {
    let params = case.spec.build().map_err(|e| e.to_string())?;
    let eq = params.equilibrium().map_err(|e| e.to_string())?;
    let cfg = SimConfig { record_every: s.record_every, ..SimConfig::new(s.m, case.t_end) };
    let result = simulate(&params, &eq, &case.ic, &cfg).map_err(|e| e.to_string())?;
    let report = result.classify(s.tail.min(case.t_end)).map_err(|e| e.to_string())?;
    Ok((result, report))
}

fn describe(report: &AttractorReport) -> String {
    let freqs: Vec<String> = report.frequencies.iter().map(|p| format!("{:.4}", p.angular())).collect();
    format!(
        "{} mode {:?} omega [{}] base {} ptp {:.2e}",
        report.kind,
        report.dominant_mode,
        freqs.join(", "),
        report.base_frequency.map(|f| format!("{:.4}", 2.0 * PI * f)).unwrap_or_else(|| "-".into()),
        report.peak_to_peak
    )
}

/// Criteria 9 and 10. Runs are independent and execute in parallel.
pub fn simulation_criteria(s: &SimulationSettings) -> (CriterionResult, CriterionResult) {
    let cases = simulation_cases(s);
    let outcomes: Vec<Result<(SimResult, AttractorReport), String>> =
        cases.par_iter().map(|c| run_simulation_case(c, s)).collect();
    let mut c9 = CriterionResult::new(9, TITLES[8]);
    let mut c10 = CriterionResult::new(10, TITLES[9]);
    let (w_minus, w_plus) = reference::P1_OMEGA;
    let within = |f: Option<f64>, target: f64| f.map(|f| rel_dev(2.0 * PI * f, target) <= 0.05).unwrap_or(false);
    for (case, outcome) in cases.iter().zip(&outcomes) {
        let (res, rep) = match outcome {
            Ok(x) => x,
            Err(e) => {
                let target = if case.spec.kinetics.b > 1.0 { &mut c9 } else { &mut c10 };
                target.checks.push(Check::error(&case.name, e));
                continue;
            }
        };
        let desc = describe(rep);
        match case.name.as_str() {
            "(6.95, 12.5)" => {
                let dev = res.final_deviation();
                c9.checks.push(Check::new(
                    "(6.95, 12.5) sup-norm at t = 3000",
                    format!("{dev:.3e} [{desc}]"),
                    "< 1e-4",
                    dev < 1e-4,
                ));
            }
            "(6.96, 12.5)" => {
                let ok = rep.kind == AttractorKind::Periodic
                    && rep.dominant_mode == Some(2)
                    && within(rep.base_frequency, w_minus);
                c9.checks.push(Check::new(
                    format!("{} at t = {}", case.name, case.t_end),
                    desc,
                    format!("Periodic, mode 2, base omega {w_minus} ± 5%"),
                    ok,
                ));
            }
            "(6.945, 13.9)" => {
                let ok = rep.kind == AttractorKind::Periodic && within(rep.base_frequency, w_plus);
                c9.checks.push(Check::new(
                    format!("{} at t = {}", case.name, case.t_end),
                    desc,
                    format!("Periodic, base omega {w_plus} ± 5%"),
                    ok,
                ));
            }
            "(6.95, 14)" => {
                let has = |target: f64| rep.frequencies.iter().any(|p| rel_dev(p.angular(), target) <= 0.05);
                let ok = rep.kind == AttractorKind::QuasiPeriodic && has(0.22) && has(0.66);
                c9.checks.push(Check::new(
                    format!("{} at t = {}", case.name, case.t_end),
                    desc,
                    "QuasiPeriodic, omega near 0.22 and 0.66",
                    ok,
                ));
            }
            _ => {
                let want = if case.name.contains("x/2") { 1 } else { 2 };
                let ok = rep.kind == AttractorKind::Periodic && rep.dominant_mode == Some(want);
                c10.checks.push(Check::new(
                    format!("{} at t = {}", case.name, case.t_end),
                    desc,
                    format!("Periodic, mode {want}"),
                    ok,
                ));
            }
        }
    }
    (c9, c10)
}

/// Random parameter sets near a worked example with a double Hopf point on
/// the same pair of curves.
#[allow(clippy::type_complexity)]
fn perturbed_points(
    base: &ModelSpec,
    curves: (CurveLabel, CurveLabel, SearchBox),
    count: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<Result<(ModelSpec, DoubleHopfPoint, ModelParams, Equilibrium, TaylorTable), String>> {
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count {
        attempts += 1;
        let mut spec = base.clone();
        spec.d11 *= rng.gen_range(0.98..1.02);
        spec.d22 *= rng.gen_range(0.98..1.02);
        spec.kinetics.a *= rng.gen_range(0.995..1.005);
        let Ok(params) = spec.build() else { continue };
        let Ok(eq) = params.equilibrium() else { continue };
        let Ok(taylor) = taylor_coefficients(params.kinetics.as_ref(), &eq, 3, DerivativeSource::ClosedForm) else {
            continue;
        };
        let Ok(dhp) = find_double_hopf(curves.0, curves.1, curves.2, &params, &eq, tol) else { continue };
        out.push(Ok((spec, dhp, params, eq, taylor)));
    }
    if out.len() < count {
        out.push(Err(format!("only {} of {count} perturbed parameter sets had a double Hopf point", out.len())));
    }
    out
}

/// Largest relative difference between the cubic coefficients of two
/// normal forms.
fn b_difference(a: &NormalFormCoefficients, b: &NormalFormCoefficients) -> f64 {
    [(a.b2100, b.b2100), (a.b1011, b.b1011), (a.b0021, b.b0021), (a.b1110, b.b1110)]
        .iter()
        .map(|(x, y)| (x - y).norm() / x.norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Stable amplitude equilibria reached by integrating from a spread of
/// initial amplitudes. Returns `None` when a trajectory has not settled.
fn reached_kinds(amp: &AmplitudeSystem, mu: [f64; 2], tol: &Tolerances, t_end: f64) -> Option<[bool; 4]> {
    let eqs = amplitude_equilibria(amp, mu, tol).ok()?;
    let mut reached = [false; 4];
    let seeds = [1e-3, 0.03, 0.3, 1.0];
    for &a in &seeds {
        for &b in &seeds {
            let traj = simulate_amplitude(amp, mu, [a, b], t_end, 1e-10).ok()?;
            let end = traj.last();
            let nearest = eqs
                .iter()
                .map(|e| (e.kind, (e.r1 - end[0]).hypot(e.r2 - end[1])))
                .min_by(|x, y| x.1.total_cmp(&y.1))?;
            let scale = eqs.iter().map(|e| e.r1.max(e.r2)).fold(1e-3, f64::max);
            if nearest.1 > 1e-3 * scale {
                return None;
            }
            reached[nearest.0 as usize] = true;
        }
    }
    Some(reached)
}

/// Amplitude-equation classification against direct integration of the
/// amplitude equations at random `mu`.
fn amplitude_agreement(
    amp: &AmplitudeSystem,
    points: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    let mut guard = 0;
    while checked < points && guard < 50 * points {
        guard += 1;
        let angle = rng.gen_range(0.0..2.0 * PI);
        let radius = rng.gen_range(0.05..1.0);
        let mu = [radius * angle.sin(), radius * angle.cos()];
        let Ok(eqs) = amplitude_equilibria(amp, mu, tol) else { continue };
        // Skip points next to a boundary, where convergence is arbitrarily slow.
        let slowest = eqs.iter().flat_map(|e| e.eigenvalues.iter().map(|l| l.re.abs())).fold(f64::INFINITY, f64::min);
        if slowest < 1e-3 * radius {
            continue;
        }
        let predicted: Vec<EqKind> = eqs.iter().filter(|e| e.stable).map(|e| e.kind).collect();
        let t_end = (60.0 / slowest).min(1e7);
        checked += 1;
        match reached_kinds(amp, mu, tol, t_end) {
            Some(reached) => {
                let reached: Vec<EqKind> = [EqKind::E0, EqKind::E1, EqKind::E2, EqKind::E3]
                    .into_iter()
                    .filter(|k| reached[*k as usize])
                    .collect();
                if reached != predicted {
                    mismatches.push(format!("mu {mu:?}: predicted {predicted:?}, integrated {reached:?}"));
                }
            }
            None => mismatches.push(format!("mu {mu:?}: integration did not settle")),
        }
    }
    if checked < points {
        mismatches.push(format!("only {checked} of {points} admissible points sampled"));
    }
    (checked, mismatches)
}

/// Observed order of the simulator from three nested grids at `t = 100`.
pub fn convergence_order(spec: &ModelSpec, t_end: f64) -> Result<f64, String> {
    let params = spec.build().map_err(|e| e.to_string())?;
    let eq = params.equilibrium().map_err(|e| e.to_string())?;
    let ic = InitialCondition::Cosine { amp_u: 0.005, amp_v: -0.005, k: 1.0 };
    let runs: Vec<Vec<f64>> = [64usize, 128, 256]
        .par_iter()
        .map(|&m| {
            let cfg = SimConfig { record_every: t_end, ..SimConfig::new(m, t_end) };
            simulate(&params, &eq, &ic, &cfg).map(|r| r.final_state.u).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    // Pairwise averages of fine cells land on the coarse centers.
    let restrict = |fine: &[f64]| -> Vec<f64> { fine.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect() };
    let diff = |coarse: &[f64], fine: &[f64]| -> f64 {
        coarse.iter().zip(restrict(fine)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let e1 = diff(&runs[0], &runs[1]);
    let e2 = diff(&runs[1], &runs[2]);
    Ok((e1 / e2).log2())
}

pub fn criterion_11(
    opts: &ValidationOptions,
    p1: &Result<PointAnalysis, String>,
    p2: &Result<PointAnalysis, String>,
    tol: &Tolerances,
) -> CriterionResult {
    let mut r = CriterionResult::new(11, TITLES[10]);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Eigenbasis and h residuals at both points.
    for (name, p) in [("P1", p1), ("P2", p2)] {
        match p {
            Ok(a) => {
                let res = eigenbasis_residuals(&eigenbasis(&a.dhp, &a.params, &a.eq), &a.params, &a.eq);
                let worst = res.kernel.max(res.adjoint_kernel).max(res.pairing).max(res.cross_pairing);
                r.checks.push(Check::new(
                    format!("{name} eigenbasis residual"),
                    format!("{worst:.2e}"),
                    "< 1e-8",
                    worst < 1e-8,
                ));
                r.checks.push(Check::new(
                    format!("{name} h residual"),
                    format!("{:.2e}", a.nf.h_residual),
                    "< 1e-8",
                    a.nf.h_residual < 1e-8,
                ));
            }
            Err(e) => r.checks.push(Check::error(name, e)),
        }
    }

    // Closed-form vs generic h on random parameter sets.
    let half = opts.random_parameter_sets / 2;
    let mut sets = perturbed_points(&case_one(), case_one_curves(), half, &mut rng, tol);
    sets.extend(perturbed_points(&case_two(), case_two_curves(), opts.random_parameter_sets - half, &mut rng, tol));
    let mut worst_agreement: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let mut problems = Vec::new();
    for set in &sets {
        match set {
            Ok((_, dhp, params, eq, taylor)) => {
                let cf = normal_form(dhp, params, eq, taylor, HSolver::ClosedForm, tol);
                let gen = normal_form(dhp, params, eq, taylor, HSolver::Generic, tol);
                match (cf, gen) {
                    (Ok((a, _)), Ok((b, _))) => {
                        worst_agreement = worst_agreement.max(b_difference(&a, &b));
                        worst_h = worst_h.max(a.h_residual).max(b.h_residual);
                    }
                    (Err(e), _) | (_, Err(e)) => problems.push(e.to_string()),
                }
            }
            Err(e) => problems.push(e.clone()),
        }
    }
    r.checks.push(Check::new(
        format!("closed-form vs generic h ({} sets)", sets.len()),
        if problems.is_empty() { format!("{worst_agreement:.2e}") } else { problems.join("; ") },
        "< 1e-8",
        problems.is_empty() && worst_agreement < 1e-8,
    ));
    r.checks.push(Check::new("h residual, random sets", format!("{worst_h:.2e}"), "< 1e-8", worst_h < 1e-8));

    // Amplitude classification vs amplitude ODE.
    for (name, p) in [("P1", p1), ("P2", p2)] {
        if let Ok(a) = p {
            let (n, mismatches) = amplitude_agreement(&a.amp, opts.amplitude_points, &mut rng, tol);
            r.checks.push(Check::new(
                format!("{name} amplitude classification vs ODE ({n} points)"),
                if mismatches.is_empty() { "all agree".to_string() } else { mismatches.join("; ") },
                "all agree",
                mismatches.is_empty(),
            ));
        }
    }

    // Taylor coefficients vs finite differences.
    for (name, spec) in [("first example", case_one()), ("second example", case_two())] {
        let check = spec.build().map_err(|e| e.to_string()).and_then(|params| {
            let eq = params.equilibrium().map_err(|e| e.to_string())?;
            let kin = params.kinetics.as_ref();
            let exact = taylor_coefficients(kin, &eq, 3, DerivativeSource::ClosedForm).map_err(|e| e.to_string())?;
            let numeric = taylor_coefficients(kin, &eq, 3, DerivativeSource::Numeric).map_err(|e| e.to_string())?;
            let scale = exact.f.max_abs().max(exact.g.max_abs()).max(1.0);
            Ok(exact.f.max_diff(&numeric.f).max(exact.g.max_diff(&numeric.g)) / scale)
        });
        r.checks.push(match check {
            Ok(d) => {
                Check::new(format!("Taylor vs finite differences, {name}"), format!("{d:.2e}"), "< 1e-6", d < 1e-6)
            }
            Err(e) => Check::error(format!("Taylor, {name}"), e),
        });
    }

    // Simulator order of convergence.
    let spec = ModelSpec { d21: 6.95, tau: 12.5, ..case_one() };
    r.checks.push(match convergence_order(&spec, 100.0) {
        Ok(order) => Check::new("simulator order", format!("{order:.3}"), ">= 1.8", order >= 1.8),
        Err(e) => Check::error("simulator order", e),
    });
    r
}
