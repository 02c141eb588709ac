//! Third-order normal form at a double Hopf point.
//!
//! Time is rescaled by `tau_c`, so the delay sits at `theta = -1` and the
//! critical frequencies become `omega_jc = tau_c omega_j`. The center
//! subspace is spanned by `phi_1, conj(phi_1), phi_2, conj(phi_2)` with
//! `phi_j(theta) = phi_j(0) e^{i omega_jc theta}` on spatial mode `n_j`.
//! Monomials `z1^q1 conj(z1)^q2 z2^q3 conj(z2)^q4` are written as `[q1, q2, q3, q4]`.
//!
//! The pipeline is: eigenbasis, quadratic/cubic Taylor data (reaction and
//! delayed advection), second-order coefficients for the unfolding
//! parameters, the h-equations for the quadratic part of the center
//! manifold, four steps of cubic cross terms, and assembly into the
//! amplitude equations
//!
//! ```text
//! r1' = r1 (delta_11 mu1 + delta_12 mu2 + p11 r1^2 + p12 r2^2)
//! r2' = r2 (delta_21 mu1 + delta_22 mu2 + p21 r1^2 + p22 r2^2)
//! ```
//!
//! with `mu1 = tau - tau_c` and `mu2 = d21 - d21_c`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::NormalFormError;
use crate::kinetics::{Equilibrium, ModelParams, TaylorTable};
use crate::linear::{char_matrix_rescaled, DoubleHopfPoint};

pub type V2 = Vector2<C64>;
pub type Mono = [u8; 4];

pub const M2000: Mono = [2, 0, 0, 0];
pub const M0200: Mono = [0, 2, 0, 0];
pub const M0020: Mono = [0, 0, 2, 0];
pub const M0002: Mono = [0, 0, 0, 2];
pub const M1100: Mono = [1, 1, 0, 0];
pub const M0011: Mono = [0, 0, 1, 1];
pub const M1010: Mono = [1, 0, 1, 0];
pub const M1001: Mono = [1, 0, 0, 1];
pub const M0110: Mono = [0, 1, 1, 0];
pub const M0101: Mono = [0, 1, 0, 1];
pub const M2100: Mono = [2, 1, 0, 0];
pub const M1011: Mono = [1, 0, 1, 1];
pub const M0021: Mono = [0, 0, 2, 1];
pub const M1110: Mono = [1, 1, 1, 0];

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Bilinear `psi^T v` without conjugation.
pub fn dot(psi: &V2, v: &V2) -> C64 {
    psi[0] * v[0] + psi[1] * v[1]
}

fn conj(v: &V2) -> V2 {
    v.map(|z| z.conj())
}

fn e2(x: C64) -> V2 {
    V2::new(C64::new(0.0, 0.0), x)
}

fn zero() -> V2 {
    V2::zeros()
}

pub fn mono_label(q: Mono) -> String {
    q.iter().map(|d| char::from(b'0' + d)).collect()
}

/// Eigenvector data of one critical pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub n: u32,
    pub kappa: f64,
    pub omega: f64,
    pub omega_c: f64,
    pub phi0: V2,
    pub psi0: V2,
    pub alpha: C64,
}

impl ModeBasis {
    pub fn phi(&self, theta: f64) -> V2 {
        self.phi0 * (I * self.omega_c * theta).exp()
    }

    pub fn psi(&self, s: f64) -> V2 {
        self.psi0 * (-I * self.omega_c * s).exp()
    }
}

/// Right and left eigenvectors for both pairs, normalized so that the
/// bilinear pairing `<psi_j, phi_j> = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub modes: [ModeBasis; 2],
    pub d21_c: f64,
    pub tau_c: f64,
    pub ell: f64,
}

impl EigenBasis {
    /// Center vector `k` of `(phi_1, conj phi_1, phi_2, conj phi_2)` at `theta = 0`,
    /// its rescaled frequency and spatial mode.
    pub fn center(&self, k: usize) -> (V2, f64, u32) {
        let m = &self.modes[k / 2];
        if k.is_multiple_of(2) {
            (m.phi0, m.omega_c, m.n)
        } else {
            (conj(&m.phi0), -m.omega_c, m.n)
        }
    }

    pub fn center_at(&self, k: usize, theta: f64) -> V2 {
        let (v, rate, _) = self.center(k);
        v * (I * rate * theta).exp()
    }

    /// Left vector paired with center vector `k`.
    pub fn dual(&self, k: usize) -> V2 {
        let m = &self.modes[k / 2];
        if k.is_multiple_of(2) {
            m.psi0
        } else {
            conj(&m.psi0)
        }
    }

    /// Multiply `phi_j` by `factor` and divide `psi_j` by it; the pairing and
    /// the cubic coefficients transform covariantly.
    pub fn rescaled(&self, j: usize, factor: C64) -> EigenBasis {
        let mut out = *self;
        out.modes[j].phi0 *= factor;
        out.modes[j].psi0 /= factor;
        out
    }
}

/// Eigenvectors at the double Hopf point. `phi(0) = (1, (i omega + kappa d11 - a11)/a12)`.
pub fn eigenbasis(dhp: &DoubleHopfPoint, params: &ModelParams, eq: &Equilibrium) -> EigenBasis {
    let tau_c = dhp.tau_c;
    let build = |n: u32, omega: f64| {
        let kappa = params.kappa(n);
        let omega_c = tau_c * omega;
        let x1 = I * omega + kappa * params.d11 - eq.a11;
        let x2 = I * omega + kappa * params.d22 - eq.a22;
        let phi0 = V2::new(c(1.0), x1 / eq.a12);
        let den = x1 + x2 + tau_c * eq.a12 * dhp.d21_c * eq.v_star * kappa * (-I * omega_c).exp();
        let alpha = x2 / den;
        let psi0 = V2::new(alpha, alpha * eq.a12 / x2);
        ModeBasis { n, kappa, omega, omega_c, phi0, psi0, alpha }
    };
    EigenBasis {
        modes: [build(dhp.n1, dhp.omega1), build(dhp.n2, dhp.omega2)],
        d21_c: dhp.d21_c,
        tau_c,
        ell: params.ell,
    }
}

/// Bilinear pairing `<psi_a, phi_b>` between left vector `a` and center
/// vector `b` (indices as in [`EigenBasis::center`]).
pub fn pairing(basis: &EigenBasis, params: &ModelParams, eq: &Equilibrium, a: usize, b: usize) -> C64 {
    let (_, rate_a, n_a) = basis.center(a);
    let (phi, rate_b, n_b) = basis.center(b);
    if n_a != n_b {
        return c(0.0);
    }
    let psi = basis.dual(a);
    let kappa = params.kappa(n_a);
    let delayed = basis.tau_c * kappa * basis.d21_c * eq.v_star * psi[1] * phi[0];
    let gap = rate_b - rate_a;
    let integral = if gap.abs() < 1e-14 { c(1.0) } else { (c(1.0) - (-I * gap).exp()) / (I * gap) };
    dot(&psi, &phi) + delayed * (-I * rate_a).exp() * integral
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisResiduals {
    /// `max |M(i omega_c) phi|`.
    pub kernel: f64,
    /// `max |psi^T M(i omega_c)|`.
    pub adjoint_kernel: f64,
    /// `max |<psi_j, phi_j> - 1|`.
    pub pairing: f64,
    /// Largest off-diagonal pairing among the four center vectors.
    pub cross_pairing: f64,
}

pub fn eigenbasis_residuals(basis: &EigenBasis, params: &ModelParams, eq: &Equilibrium) -> BasisResiduals {
    let mut kernel: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    for m in &basis.modes {
        let mt = char_matrix_rescaled(m.n, I * m.omega_c, basis.d21_c, basis.tau_c, params, eq);
        kernel = kernel.max((mt * m.phi0).camax());
        adjoint = adjoint.max((mt.transpose() * m.psi0).camax());
    }
    let mut pair: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let value = pairing(basis, params, eq, a, b);
            if a == b {
                pair = pair.max((value - 1.0).norm());
            } else {
                cross = cross.max(value.norm());
            }
        }
    }
    BasisResiduals { kernel, adjoint_kernel: adjoint, pairing: pair, cross_pairing: cross }
}

/// Problem data shared by every step: rescaled model, Taylor table, mode pair.
#[derive(Debug, Clone)]
pub struct NfContext {
    pub params: ModelParams,
    pub eq: Equilibrium,
    pub taylor: TaylorTable,
    pub basis: EigenBasis,
    pub n1: u32,
    pub n2: u32,
}

impl NfContext {
    pub fn new(params: &ModelParams, eq: &Equilibrium, taylor: &TaylorTable, basis: &EigenBasis) -> Self {
        Self {
            params: params.clone(),
            eq: *eq,
            taylor: *taylor,
            basis: *basis,
            n1: basis.modes[0].n,
            n2: basis.modes[1].n,
        }
    }

    fn tau_c(&self) -> f64 {
        self.basis.tau_c
    }

    fn ell(&self) -> f64 {
        self.params.ell
    }

    fn m_tilde(&self, n: u32, rate: f64) -> Matrix2<C64> {
        char_matrix_rescaled(n, I * rate, self.basis.d21_c, self.basis.tau_c, &self.params, &self.eq)
    }

    /// Rescaled quadratic reaction term `tau_c F2(x, y)` (symmetric bilinear).
    pub fn quad(&self, x: &V2, y: &V2) -> V2 {
        let t = self.tau_c();
        let comp = |k: usize| {
            let d = self.taylor.component(k);
            x[0] * y[0] * d.uu + (x[0] * y[1] + x[1] * y[0]) * d.uv + x[1] * y[1] * d.vv
        };
        V2::new(comp(0) * t, comp(1) * t)
    }

    /// Rescaled cubic reaction term `tau_c F3(x, y, z)` (symmetric trilinear).
    pub fn cubic(&self, x: &V2, y: &V2, z: &V2) -> V2 {
        let t = self.tau_c();
        let comp = |k: usize| {
            let d = self.taylor.component(k);
            x[0] * y[0] * z[0] * d.uuu
                + (x[0] * y[0] * z[1] + x[0] * y[1] * z[0] + x[1] * y[0] * z[0]) * d.uuv
                + (x[0] * y[1] * z[1] + x[1] * y[0] * z[1] + x[1] * y[1] * z[0]) * d.uvv
                + x[1] * y[1] * z[1] * d.vvv
        };
        V2::new(comp(0) * t, comp(1) * t)
    }

    /// Coefficient of the monomial `q` in `F_j(sum_k z_k phi_k(0))`.
    pub fn reaction_coeff(&self, q: Mono) -> V2 {
        let mut idx = Vec::new();
        for (k, &m) in q.iter().enumerate() {
            for _ in 0..m {
                idx.push(k);
            }
        }
        let v = |k: usize| self.basis.center(k).0;
        match idx.len() {
            2 => {
                let mult = if idx[0] == idx[1] { 1.0 } else { 2.0 };
                self.quad(&v(idx[0]), &v(idx[1])) * c(mult)
            }
            3 => {
                let mult = multinomial(&q) as f64;
                self.cubic(&v(idx[0]), &v(idx[1]), &v(idx[2])) * c(mult)
            }
            _ => zero(),
        }
    }

    fn adv_const(&self) -> C64 {
        c(-2.0 * self.basis.d21_c * self.tau_c())
    }
}

fn multinomial(q: &Mono) -> u64 {
    let fact = |n: u64| (1..=n).product::<u64>().max(1);
    let total: u64 = q.iter().map(|&x| x as u64).sum();
    q.iter().fold(fact(total), |acc, &x| acc / fact(x as u64))
}

/// Quadratic coefficients of the reaction part and the three delayed
/// advection tables `A^(d, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorData {
    pub reaction: BTreeMap<String, V2>,
    pub advection: BTreeMap<String, V2>,
    n1: u32,
    n2: u32,
    ell: f64,
    #[serde(skip)]
    raw_reaction: BTreeMap<Mono, V2>,
    #[serde(skip)]
    raw_advection: BTreeMap<(u8, Mono), V2>,
}

const QUADRATIC: [Mono; 10] = [M2000, M0200, M0020, M0002, M1100, M0011, M1010, M1001, M0110, M0101];

impl TaylorData {
    fn ad(&self, j: u8, q: Mono) -> V2 {
        self.raw_advection.get(&(j, q)).copied().unwrap_or_else(zero)
    }

    pub fn reaction(&self, q: Mono) -> V2 {
        self.raw_reaction.get(&q).copied().unwrap_or_else(zero)
    }

    /// `A~_q`: reaction plus advection as seen by modes `2 n1`, `2 n2`, `n2 - n1`.
    pub fn tilde(&self, q: Mono) -> V2 {
        let (n1, n2, l2) = (self.n1 as f64, self.n2 as f64, self.ell * self.ell);
        match q {
            M1010 | M1001 | M0110 | M0101 => {
                self.reaction(q) + self.ad(1, q) * c(n1 * n2 / l2)
                    - self.ad(2, q) * c(n1 * n1 / l2)
                    - self.ad(3, q) * c(n2 * n2 / l2)
            }
            M2000 | M0200 | M1100 => self.reaction(q) - (self.ad(1, q) + self.ad(2, q)) * c(n1 * n1 / l2),
            _ => self.reaction(q) - (self.ad(1, q) + self.ad(2, q)) * c(n2 * n2 / l2),
        }
    }

    /// `A^_q` for the sum mode `n1 + n2`.
    pub fn hat(&self, q: Mono) -> V2 {
        let (n1, n2, l2) = (self.n1 as f64, self.n2 as f64, self.ell * self.ell);
        self.reaction(q)
            - self.ad(1, q) * c(n1 * n2 / l2)
            - self.ad(2, q) * c(n1 * n1 / l2)
            - self.ad(3, q) * c(n2 * n2 / l2)
    }

    /// `A(breve)_q` for mode 0 when `n1 = n2`.
    pub fn breve(&self, q: Mono) -> V2 {
        let (n1, l2) = (self.n1 as f64, self.ell * self.ell);
        self.reaction(q) + (self.ad(1, q) - self.ad(2, q) - self.ad(3, q)) * c(n1 * n1 / l2)
    }
}

/// Reaction and advection coefficient tables at the double Hopf point.
pub fn advection_coeffs(ctx: &NfContext) -> TaylorData {
    let b = &ctx.basis;
    let cst = ctx.adv_const();
    let (ph1, ph2) = (b.modes[0].phi0, b.modes[1].phi0);
    // Center vector 1 is the conjugate of vector 0 and never enters the
    // tables on its own.
    let d1 = b.center_at(0, -1.0)[0];
    let d3 = b.center_at(2, -1.0)[0];
    let d4 = b.center_at(3, -1.0)[0];
    let mut ad: BTreeMap<(u8, Mono), V2> = BTreeMap::new();
    ad.insert((1, M1010), e2(d1 * ph2[1] + d3 * ph1[1]) * cst);
    ad.insert((1, M1001), e2(d1 * ph2[1].conj() + d4 * ph1[1]) * cst);
    for j in [1, 2] {
        ad.insert((j, M2000), e2(d1 * ph1[1]) * cst);
        ad.insert((j, M0020), e2(d3 * ph2[1]) * cst);
        ad.insert((j, M1100), e2(c(2.0 * (d1 * ph1[1].conj()).re)) * cst);
        ad.insert((j, M0011), e2(c(2.0 * (d3 * ph2[1].conj()).re)) * cst);
    }
    ad.insert((2, M1010), e2(d1 * ph2[1]) * cst);
    ad.insert((3, M1010), e2(d3 * ph1[1]) * cst);
    ad.insert((2, M1001), e2(d1 * ph2[1].conj()) * cst);
    ad.insert((3, M1001), e2(d4 * ph1[1]) * cst);
    let conj_of = |ad: &BTreeMap<(u8, Mono), V2>, key: (u8, Mono)| ad.get(&key).map(conj).unwrap_or_else(zero);
    for j in [1, 2] {
        let v = conj_of(&ad, (1, M2000));
        ad.insert((j, M0200), v);
        let v = conj_of(&ad, (1, M0020));
        ad.insert((j, M0002), v);
    }
    for j in [1, 2, 3] {
        let v = conj_of(&ad, (j, M1001));
        ad.insert((j, M0110), v);
        let v = conj_of(&ad, (j, M1010));
        ad.insert((j, M0101), v);
    }
    let mut raw_reaction = BTreeMap::new();
    for q in QUADRATIC.iter().chain([M2100, M1011, M0021, M1110].iter()) {
        raw_reaction.insert(*q, ctx.reaction_coeff(*q));
    }
    TaylorData {
        reaction: raw_reaction.iter().map(|(q, v)| (mono_label(*q), *v)).collect(),
        advection: ad.iter().map(|((j, q), v)| (format!("{j}:{}", mono_label(*q)), *v)).collect(),
        n1: ctx.n1,
        n2: ctx.n2,
        ell: ctx.ell(),
        raw_reaction,
        raw_advection: ad,
    }
}

/// Coefficients of the unfolding parameters in the second-order normal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    /// Coefficient of `mu1 z_j` for `j = 1, 2`.
    pub b1: [C64; 2],
    /// Coefficient of `mu2 z_j`.
    pub b2: [C64; 2],
}

impl SecondOrder {
    /// `delta[j] = (Re b1 / 2, Re b2 / 2)`.
    pub fn deltas(&self) -> [[f64; 2]; 2] {
        [[0.5 * self.b1[0].re, 0.5 * self.b2[0].re], [0.5 * self.b1[1].re, 0.5 * self.b2[1].re]]
    }
}

pub fn second_order_nf(ctx: &NfContext) -> SecondOrder {
    let b = &ctx.basis;
    let d2c = Matrix2::new(c(0.0), c(0.0), c(-b.d21_c * ctx.eq.v_star), c(0.0));
    let mut b1 = [c(0.0); 2];
    let mut b2 = [c(0.0); 2];
    for (j, m) in b.modes.iter().enumerate() {
        b1[j] = 2.0 * I * m.omega * dot(&m.psi0, &m.phi0);
        b2[j] = c(-2.0 * m.kappa * b.tau_c / b.d21_c) * dot(&m.psi0, &(d2c * m.phi(-1.0)));
    }
    SecondOrder { b1, b2 }
}

/// Representation of one solved `h_{n, q}(theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HShape {
    /// `sum_k v_k e^{i r_k theta}`.
    Exponential(Vec<(V2, f64)>),
    /// Values on `theta_k = -k / (len - 1)`, interpolated with Hermite cubics
    /// using the ODE for slopes.
    Sampled(Vec<V2>),
}

/// The boundary value problem defining `h_{n, q}`:
///
/// ```text
/// h'(theta) - i rate h(theta) = sum_k f_k e^{i rho_k theta},   -1 <= theta < 0
/// h'(0) - L0 h = jump
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HProblem {
    pub n: u32,
    pub mono: Mono,
    pub rate: f64,
    pub jump: V2,
    pub forcing: Vec<(V2, f64)>,
}

impl HProblem {
    pub fn forcing_at(&self, theta: f64) -> V2 {
        self.forcing.iter().fold(zero(), |acc, (v, rho)| acc + v * (I * rho * theta).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEntry {
    pub problem: HProblem,
    pub shape: HShape,
}

impl HEntry {
    pub fn eval(&self, theta: f64) -> V2 {
        match &self.shape {
            HShape::Exponential(terms) => terms.iter().fold(zero(), |acc, (v, r)| acc + v * (I * r * theta).exp()),
            HShape::Sampled(values) => {
                let steps = values.len() - 1;
                let x = (-theta).clamp(0.0, 1.0) * steps as f64;
                let k = (x.floor() as usize).min(steps - 1);
                let h = 1.0 / steps as f64;
                let (t0, t1) = (-(k as f64) * h, -((k + 1) as f64) * h);
                let (y0, y1) = (values[k], values[k + 1]);
                let (s0, s1) = (self.slope(t0, &y0), self.slope(t1, &y1));
                let s = x - k as f64;
                // Hermite basis on the interval from t0 to t1 (step -h).
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                y0 * c(h00) + s0 * c(-h * h10) + y1 * c(h01) + s1 * c(-h * h11)
            }
        }
    }

    fn slope(&self, theta: f64, y: &V2) -> V2 {
        y * (I * self.problem.rate) + self.problem.forcing_at(theta)
    }

    pub fn derivative(&self, theta: f64) -> V2 {
        match &self.shape {
            HShape::Exponential(terms) => {
                terms.iter().fold(zero(), |acc, (v, r)| acc + v * (I * r * (I * r * theta).exp()))
            }
            HShape::Sampled(_) => self.slope(theta, &self.eval(theta)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HPath {
    ClosedForm,
    Generic,
}

/// All `h_{n, q}` needed by the cubic steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HCoefficients {
    pub path: HPath,
    pub entries: Vec<HEntry>,
}

impl HCoefficients {
    pub fn get(&self, n: u32, q: Mono) -> Option<&HEntry> {
        self.entries.iter().find(|e| e.problem.n == n && e.problem.mono == q)
    }

    /// `h_{n, q}(theta)`, zero when the entry does not exist.
    pub fn eval(&self, n: u32, q: Mono, theta: f64) -> V2 {
        self.get(n, q).map(|e| e.eval(theta)).unwrap_or_else(zero)
    }

    /// Largest residual of the ODE on a theta grid and of the jump condition.
    pub fn max_residual(&self, ctx: &NfContext) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for e in &self.entries {
            let r = h_residual(ctx, e);
            if r > worst.0 {
                worst = (r, format!("h_{{{}, {}}}", e.problem.n, mono_label(e.problem.mono)));
            }
        }
        worst
    }
}

/// Residual of one solved entry: ODE residual at 41 nodes plus the jump.
pub fn h_residual(ctx: &NfContext, e: &HEntry) -> f64 {
    let p = &e.problem;
    let mut worst: f64 = 0.0;
    for k in 0..=40 {
        let theta = -(k as f64) / 40.0;
        let r = e.derivative(theta) - e.eval(theta) * (I * p.rate) - p.forcing_at(theta);
        worst = worst.max(r.camax());
    }
    let jump = e.derivative(0.0) - apply_l0(ctx, p.n, &e.eval(0.0), &e.eval(-1.0)) - p.jump;
    worst.max(jump.camax())
}

/// Rescaled linear operator `L0` on mode `n` acting on a function with
/// values `y0 = y(0)` and `y1 = y(-1)`.
fn apply_l0(ctx: &NfContext, n: u32, y0: &V2, y1: &V2) -> V2 {
    let t = ctx.tau_c();
    let kappa = ctx.params.kappa(n);
    let (p, eq) = (&ctx.params, &ctx.eq);
    let a = Matrix2::new(c(eq.a11), c(eq.a12), c(eq.a21), c(eq.a22));
    let d1 = Matrix2::new(c(p.d11), c(0.0), c(0.0), c(p.d22));
    let d2 = Matrix2::new(c(0.0), c(0.0), c(-ctx.basis.d21_c * eq.v_star), c(0.0));
    (a * y0 - d1 * y0 * c(kappa)) * c(t) - d2 * y1 * c(t * kappa)
}

/// Spatial-mode family of an h-equation and its projection weight.
struct HSpec {
    n: u32,
    mono: Mono,
    weight: f64,
    rhs: V2,
    /// Center vectors (indices into the basis) of the same spatial mode that
    /// resonate with this monomial and must be projected out.
    centers: Vec<usize>,
}

fn rate_of(basis: &EigenBasis, q: Mono) -> f64 {
    let w1 = basis.modes[0].omega_c;
    let w2 = basis.modes[1].omega_c;
    (q[0] as f64 - q[1] as f64) * w1 + (q[2] as f64 - q[3] as f64) * w2
}

fn h_specs(ctx: &NfContext, td: &TaylorData) -> Result<Vec<HSpec>, NormalFormError> {
    let (n1, n2) = (ctx.n1, ctx.n2);
    let lp = ctx.ell() * PI;
    let s1 = 1.0 / lp.sqrt();
    let s2 = 1.0 / (2.0 * lp).sqrt();
    let spec = |n, mono, weight, rhs| HSpec { n, mono, weight, rhs, centers: Vec::new() };
    let mut out = Vec::new();
    for q in [M2000, M0020, M1100, M0011] {
        out.push(spec(0, q, s1, td.reaction(q)));
    }
    if n1 == n2 {
        for q in [M1010, M1001, M0110] {
            out.push(spec(0, q, s1, td.breve(q)));
        }
        for q in [M2000, M0020, M1100, M0011] {
            out.push(spec(2 * n1, q, s2, td.tilde(q)));
        }
        for q in [M1010, M1001, M0110] {
            out.push(spec(2 * n1, q, s2, td.hat(q)));
        }
        return Ok(out);
    }
    let resonant_2 = n2 == 2 * n1;
    for q in [M2000, M1100] {
        let mut s = spec(2 * n1, q, s2, td.tilde(q));
        if resonant_2 {
            s.centers = vec![2, 3];
        }
        out.push(s);
    }
    for q in [M0020, M0011] {
        out.push(spec(2 * n2, q, s2, td.tilde(q)));
    }
    for q in [M1010, M1001, M0110] {
        out.push(spec(n1 + n2, q, s2, td.hat(q)));
    }
    for q in [M1010, M1001, M0110] {
        let mut s = spec(n2 - n1, q, s2, td.tilde(q));
        if resonant_2 {
            s.centers = vec![0, 1];
        }
        out.push(s);
    }
    Ok(out)
}

fn problem_of(ctx: &NfContext, spec: &HSpec) -> HProblem {
    let rate = rate_of(&ctx.basis, spec.mono);
    let forcing = spec
        .centers
        .iter()
        .map(|&k| {
            let (phi, rho, _) = ctx.basis.center(k);
            (phi * (dot(&ctx.basis.dual(k), &spec.rhs) * spec.weight), rho)
        })
        .collect();
    HProblem { n: spec.n, mono: spec.mono, rate, jump: spec.rhs * c(spec.weight), forcing }
}

/// Center-correction constants `C1..C10` for the `n2 = 2 n1` interaction,
/// keyed by `(mono, center index)`.
fn center_constants(ctx: &NfContext, td: &TaylorData) -> BTreeMap<(Mono, usize), C64> {
    let b = &ctx.basis;
    let (w1, w2) = (b.modes[0].omega_c, b.modes[1].omega_c);
    let (ps1, ps2) = (b.modes[0].psi0, b.modes[1].psi0);
    let q = |psi: &V2, m: Mono| dot(psi, &td.tilde(m));
    let mut out = BTreeMap::new();
    out.insert((M2000, 2), q(&ps2, M2000) / (I * (w2 - 2.0 * w1)));
    out.insert((M2000, 3), -q(&conj(&ps2), M2000) / (I * (w2 + 2.0 * w1)));
    out.insert((M1100, 2), q(&ps2, M1100) / (I * w2));
    out.insert((M1100, 3), -q(&conj(&ps2), M1100) / (I * w2));
    out.insert((M1010, 0), -q(&ps1, M1010) / (I * w2));
    out.insert((M1010, 1), -q(&conj(&ps1), M1010) / (I * (2.0 * w1 + w2)));
    out.insert((M1001, 0), q(&ps1, M1001) / (I * w2));
    out.insert((M1001, 1), -q(&conj(&ps1), M1001) / (I * (2.0 * w1 - w2)));
    out.insert((M0110, 0), q(&ps1, M0110) / (I * (2.0 * w1 - w2)));
    out.insert((M0110, 1), -q(&conj(&ps1), M0110) / (I * w2));
    out
}

/// Steps for the generic boundary-value solver.
pub const GENERIC_STEPS: usize = 8000;

/// Solve every h-equation, by closed forms or by the generic shooting solver.
pub fn solve_h(ctx: &NfContext, td: &TaylorData, path: HPath) -> Result<HCoefficients, NormalFormError> {
    let (n1, n2) = (ctx.n1, ctx.n2);
    if path == HPath::ClosedForm && n1 != n2 && n2 == 3 * n1 {
        return Err(NormalFormError::UnsupportedModes {
            n1,
            n2,
            reason: "no closed-form h for n2 = 3 n1; use the generic path",
        });
    }
    let constants = if n1 != n2 && n2 == 2 * n1 { center_constants(ctx, td) } else { BTreeMap::new() };
    let mut entries = Vec::new();
    for spec in h_specs(ctx, td)? {
        let problem = problem_of(ctx, &spec);
        let shape = match path {
            HPath::ClosedForm => {
                let mut rhs = spec.rhs;
                let mut terms = Vec::new();
                for &k in &spec.centers {
                    let (phi, rho, _) = ctx.basis.center(k);
                    let ck = constants[&(spec.mono, k)];
                    rhs -= ctx.m_tilde(spec.n, rho) * phi * ck;
                    terms.push((phi * (ck * spec.weight), rho));
                }
                let m = ctx.m_tilde(spec.n, problem.rate);
                let lead = solve2(&m, &rhs).ok_or_else(|| NormalFormError::Singular {
                    n: spec.n,
                    rate: problem.rate,
                    reason: format!("M~ singular for h_{{{}, {}}}", spec.n, mono_label(spec.mono)),
                })?;
                terms.insert(0, (lead * c(spec.weight), problem.rate));
                HShape::Exponential(terms)
            }
            HPath::Generic => HShape::Sampled(shoot(ctx, &problem, GENERIC_STEPS)?),
        };
        entries.push(HEntry { problem, shape });
    }
    Ok(HCoefficients { path, entries })
}

fn solve2(m: &Matrix2<C64>, rhs: &V2) -> Option<V2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = m.camax().max(1.0);
    if det.norm() < 1e-13 * scale * scale {
        return None;
    }
    Some(V2::new((m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det, (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / det))
}

/// Integrate `h' = i rate h + g(theta)` from 0 to -1 with RK4 for the
/// homogeneous and particular parts, then fix `h(0)` from the jump condition.
fn shoot(ctx: &NfContext, p: &HProblem, steps: usize) -> Result<Vec<V2>, NormalFormError> {
    let dt = -1.0 / steps as f64;
    let rhs = |theta: f64, y: &V2, forced: bool| -> V2 {
        let mut d = y * (I * p.rate);
        if forced {
            d += p.forcing_at(theta);
        }
        d
    };
    let integrate = |y0: V2, forced: bool| -> Vec<V2> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut y = y0;
        out.push(y);
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = rhs(t, &y, forced);
            let k2 = rhs(t + 0.5 * dt, &(y + k1 * c(0.5 * dt)), forced);
            let k3 = rhs(t + 0.5 * dt, &(y + k2 * c(0.5 * dt)), forced);
            let k4 = rhs(t + dt, &(y + k3 * c(dt)), forced);
            y += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
            out.push(y);
        }
        out
    };
    let hom0 = integrate(V2::new(c(1.0), c(0.0)), false);
    let hom1 = integrate(V2::new(c(0.0), c(1.0)), false);
    let part = integrate(zero(), true);
    // Jump: h'(0) - L0 h = jump, with h = Y x + h_p and h'(0) = i rate x + g(0).
    let y_end = Matrix2::from_columns(&[hom0[steps], hom1[steps]]);
    let l0_cols: Vec<V2> = (0..2)
        .map(|k| {
            let e = if k == 0 { V2::new(c(1.0), c(0.0)) } else { V2::new(c(0.0), c(1.0)) };
            e * (I * p.rate) - apply_l0(ctx, p.n, &e, &(y_end * e))
        })
        .collect();
    let system = Matrix2::from_columns(&[l0_cols[0], l0_cols[1]]);
    let target = p.jump - p.forcing_at(0.0) + apply_l0(ctx, p.n, &zero(), &part[steps]);
    let x = solve2(&system, &target).ok_or_else(|| NormalFormError::Singular {
        n: p.n,
        rate: p.rate,
        reason: "shooting system singular".into(),
    })?;
    Ok((0..=steps).map(|k| hom0[k] * x[0] + hom1[k] * x[1] + part[k]).collect())
}

/// Cubic coefficient contributions, ordered `(z1^2 conj z1, z1 z2 conj z2)` for the
/// first equation and `(z2^2 conj z2, z1 conj z1 z2)` for the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicTerms {
    pub t11: C64,
    pub t12: C64,
    pub t31: C64,
    pub t32: C64,
}

impl CubicTerms {
    fn zero() -> Self {
        Self { t11: c(0.0), t12: c(0.0), t31: c(0.0), t32: c(0.0) }
    }
}

/// Step 1: projections of the cubic reaction terms.
pub fn cubic_step1(ctx: &NfContext, td: &TaylorData) -> CubicTerms {
    let lp = ctx.ell() * PI;
    let (ps1, ps2) = (ctx.basis.modes[0].psi0, ctx.basis.modes[1].psi0);
    let cross = if ctx.n1 == ctx.n2 { 3.0 / (2.0 * lp) } else { 1.0 / lp };
    CubicTerms {
        t11: dot(&ps1, &td.reaction(M2100)) * (3.0 / (2.0 * lp)),
        t12: dot(&ps1, &td.reaction(M1011)) * cross,
        t31: dot(&ps2, &td.reaction(M0021)) * (3.0 / (2.0 * lp)),
        t32: dot(&ps2, &td.reaction(M1110)) * cross,
    }
}

/// Step 2: products of second-order normal-form terms, nonzero only for the
/// `n2 = 2 n1` interaction where quadratic terms project onto the center.
pub fn cubic_step2(ctx: &NfContext, td: &TaylorData) -> CubicTerms {
    if ctx.n1 == ctx.n2 || ctx.n2 != 2 * ctx.n1 {
        return CubicTerms::zero();
    }
    let b = &ctx.basis;
    let (w1, w2) = (b.modes[0].omega_c, b.modes[1].omega_c);
    let (ps1, ps2) = (b.modes[0].psi0, b.modes[1].psi0);
    let (cps1, cps2) = (conj(&ps1), conj(&ps2));
    let q = |psi: &V2, m: Mono| dot(psi, &td.tilde(m));
    let f = c(1.0) / (2.0 * I * ctx.ell() * PI);
    let t11 = f
        * (-q(&ps1, M1010) * q(&ps2, M1100) / w2 + q(&ps1, M1001) * q(&cps2, M1100) / w2
            - q(&ps1, M0110) * q(&ps2, M2000) / (w2 - 2.0 * w1)
            + q(&ps1, M0101) * q(&cps2, M2000) / (w2 + 2.0 * w1));
    let t12 = f
        * (-q(&ps1, M1010) * q(&ps1, M1001) / w2 + q(&ps1, M1001) * q(&ps1, M1010) / w2
            - q(&ps1, M0110) * q(&cps1, M1001) / (w2 - 2.0 * w1)
            + q(&ps1, M0101) * q(&cps1, M1010) / (w2 + 2.0 * w1));
    let t32 = f
        * (c(2.0) * q(&ps2, M2000) * q(&ps1, M0110) / (w2 - 2.0 * w1)
            + q(&ps2, M1100) * q(&ps1, M1010) / w2
            + q(&ps2, M1100) * q(&cps1, M0110) / w2
            + c(2.0) * q(&ps2, M0200) * q(&cps1, M1010) / (w2 + 2.0 * w1));
    CubicTerms { t11, t12, t31: c(0.0), t32 }
}

/// Step 3: quadratic reaction acting on center vectors and h.
pub fn cubic_step3(ctx: &NfContext, h: &HCoefficients) -> CubicTerms {
    let (n1, n2) = (ctx.n1, ctx.n2);
    let lp = ctx.ell() * PI;
    let (s1, s2) = (1.0 / lp.sqrt(), 1.0 / (2.0 * lp).sqrt());
    let dl = if n1 == n2 { s1 } else { s2 };
    let (ps1, ps2) = (ctx.basis.modes[0].psi0, ctx.basis.modes[1].psi0);
    let s = |k: usize, n: u32, q: Mono| ctx.quad(&ctx.basis.center(k).0, &h.eval(n, q, 0.0)) * c(2.0);
    let (m11, m22, mp, mm) = (2 * n1, 2 * n2, n1 + n2, n2 - n1);
    let t11 =
        dot(&ps1, &(s(0, 0, M1100) + s(1, 0, M2000))) * s1 + dot(&ps1, &(s(0, m11, M1100) + s(1, m11, M2000))) * s2;
    let t12 = dot(&ps1, &s(0, 0, M0011)) * s1
        + dot(&ps1, &s(0, m11, M0011)) * s2
        + dot(&ps1, &(s(2, mp, M1001) + s(3, mp, M1010))) * s2
        + dot(&ps1, &(s(2, mm, M1001) + s(3, mm, M1010))) * dl;
    let t31 =
        dot(&ps2, &(s(2, 0, M0011) + s(3, 0, M0020))) * s1 + dot(&ps2, &(s(2, m22, M0011) + s(3, m22, M0020))) * s2;
    let t32 = dot(&ps2, &s(2, 0, M1100)) * s1
        + dot(&ps2, &s(2, m22, M1100)) * s2
        + dot(&ps2, &(s(0, mp, M0110) + s(1, mp, M1010))) * s2
        + dot(&ps2, &(s(0, mm, M0110) + s(1, mm, M1010))) * dl;
    CubicTerms { t11, t12, t31, t32 }
}

/// Step 4: delayed advection acting on center vectors and h.
pub fn cubic_step4(ctx: &NfContext, h: &HCoefficients) -> CubicTerms {
    let (n1, n2) = (ctx.n1, ctx.n2);
    let l2 = ctx.ell() * ctx.ell();
    let lp = ctx.ell() * PI;
    let (s1, s2) = (1.0 / lp.sqrt(), 1.0 / (2.0 * lp).sqrt());
    let dl = if n1 == n2 { s1 } else { s2 };
    let (ps1, ps2) = (ctx.basis.modes[0].psi0, ctx.basis.modes[1].psi0);
    let cst = ctx.adv_const();
    let (k1, k2) = (ctx.basis.modes[0].kappa, ctx.basis.modes[1].kappa);
    // Advection pieces S_d^(j) for center vector k times h_{n, q}.
    let sd = |j: u8, k: usize, n: u32, q: Mono| -> V2 {
        let ph0 = ctx.basis.center_at(k, 0.0);
        let ph1 = ctx.basis.center_at(k, -1.0);
        let y0 = h.eval(n, q, 0.0);
        let y1 = h.eval(n, q, -1.0);
        let first = e2(ph1[0] * y0[1]) * cst;
        let second = e2(ph0[1] * y1[0]) * cst;
        match j {
            1 => first,
            2 => first + second,
            _ => second,
        }
    };
    // Wavenumber weights; for the cross term the sign depends on whether the
    // target mode is the sum `n_i + k` or the difference.
    let weight = |ni: u32, j: u8, k: u32, target_is_sum: bool| -> f64 {
        let (ni, k) = (ni as f64, k as f64);
        match j {
            1 => -ni * ni / l2,
            2 => {
                if target_is_sum {
                    -ni * k / l2
                } else {
                    ni * k / l2
                }
            }
            _ => -k * k / l2,
        }
    };
    let sum_d = |ni: u32, k: u32, center: usize, q: Mono, target_is_sum: bool| -> V2 {
        (1..=3u8).fold(zero(), |acc, j| acc + sd(j, center, k, q) * c(weight(ni, j, k, target_is_sum)))
    };
    let (m11, m22, mp, mm) = (2 * n1, 2 * n2, n1 + n2, n2 - n1);
    let mm_is_sum = n1 != n2;
    let t11 = -dot(&ps1, &(sd(1, 0, 0, M1100) + sd(1, 1, 0, M2000))) * (s1 * k1)
        + dot(&ps1, &(sum_d(n1, m11, 0, M1100, false) + sum_d(n1, m11, 1, M2000, false))) * s2;
    let t12 = -dot(&ps1, &sd(1, 0, 0, M0011)) * (s1 * k1)
        + dot(&ps1, &sum_d(n1, m11, 0, M0011, false)) * s2
        + dot(&ps1, &(sum_d(n2, mp, 2, M1001, false) + sum_d(n2, mp, 3, M1010, false))) * s2
        + dot(&ps1, &(sum_d(n2, mm, 2, M1001, false) + sum_d(n2, mm, 3, M1010, false))) * dl;
    let t31 = -dot(&ps2, &(sd(1, 2, 0, M0011) + sd(1, 3, 0, M0020))) * (s1 * k2)
        + dot(&ps2, &(sum_d(n2, m22, 2, M0011, false) + sum_d(n2, m22, 3, M0020, false))) * s2;
    let t32 = -dot(&ps2, &sd(1, 2, 0, M1100)) * (s1 * k2)
        + dot(&ps2, &sum_d(n2, m22, 2, M1100, false)) * s2
        + dot(&ps2, &(sum_d(n1, mp, 0, M0110, false) + sum_d(n1, mp, 1, M1010, false))) * s2
        + dot(&ps2, &(sum_d(n1, mm, 0, M0110, mm_is_sum) + sum_d(n1, mm, 1, M1010, mm_is_sum))) * dl;
    CubicTerms { t11, t12, t31, t32 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// `p11 p22 > 0`.
    Simple,
    /// `p11 p22 < 0`.
    Difficult,
    /// `|p11 p22|` below tolerance; the cubic truncation does not decide.
    Degenerate,
}

/// Truncated amplitude equations in rescaled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSystem {
    /// `delta[j] = (coefficient of mu1, coefficient of mu2)` in equation `j`.
    pub delta: [[f64; 2]; 2],
    /// `p[j][k]` multiplies `r_{k+1}^2` in equation `j`.
    pub p: [[f64; 2]; 2],
    pub case: CaseTag,
}

impl AmplitudeSystem {
    pub fn new(delta: [[f64; 2]; 2], p: [[f64; 2]; 2], degenerate_tol: f64) -> Self {
        let prod = p[0][0] * p[1][1];
        let case = if prod.abs() < degenerate_tol {
            CaseTag::Degenerate
        } else if prod > 0.0 {
            CaseTag::Simple
        } else {
            CaseTag::Difficult
        };
        Self { delta, p, case }
    }

    /// Linear growth rates `(delta_1(mu), delta_2(mu))`.
    pub fn rates(&self, mu: [f64; 2]) -> [f64; 2] {
        [self.delta[0][0] * mu[0] + self.delta[0][1] * mu[1], self.delta[1][0] * mu[0] + self.delta[1][1] * mu[1]]
    }

    pub fn field(&self, mu: [f64; 2], r: [f64; 2]) -> [f64; 2] {
        let d = self.rates(mu);
        let (x, y) = (r[0] * r[0], r[1] * r[1]);
        [r[0] * (d[0] + self.p[0][0] * x + self.p[0][1] * y), r[1] * (d[1] + self.p[1][0] * x + self.p[1][1] * y)]
    }
}

/// Every intermediate and final quantity of the normal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCoefficients {
    pub second_order: SecondOrder,
    pub step1: CubicTerms,
    pub step2: CubicTerms,
    pub step3: CubicTerms,
    pub step4: CubicTerms,
    /// `B_{2100}, B_{1011}, B_{0021}, B_{1110}`.
    pub b2100: C64,
    pub b1011: C64,
    pub b0021: C64,
    pub b1110: C64,
    pub h_path: HPath,
    pub h_residual: f64,
}

/// Combine the steps: `B = C + 3/2 (D + E + Ed)` and `p = Re B / 6`.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    second: SecondOrder,
    step1: CubicTerms,
    step2: CubicTerms,
    step3: CubicTerms,
    step4: CubicTerms,
    h_path: HPath,
    h_residual: f64,
    tol: &Tolerances,
) -> (NormalFormCoefficients, AmplitudeSystem) {
    let b = |c1: C64, d: C64, e: C64, ed: C64| c1 + 1.5 * (d + e + ed);
    let b2100 = b(step1.t11, step2.t11, step3.t11, step4.t11);
    let b1011 = b(step1.t12, step2.t12, step3.t12, step4.t12);
    let b0021 = b(step1.t31, step2.t31, step3.t31, step4.t31);
    let b1110 = b(step1.t32, step2.t32, step3.t32, step4.t32);
    let p = [[b2100.re / 6.0, b1011.re / 6.0], [b1110.re / 6.0, b0021.re / 6.0]];
    let amp = AmplitudeSystem::new(second.deltas(), p, tol.degenerate_cubic);
    let nf = NormalFormCoefficients {
        second_order: second,
        step1,
        step2,
        step3,
        step4,
        b2100,
        b1011,
        b0021,
        b1110,
        h_path,
        h_residual,
    };
    (nf, amp)
}

/// Choice of h solver for [`normal_form`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HSolver {
    /// Closed forms where they exist, generic otherwise.
    Auto,
    ClosedForm,
    Generic,
}

/// Full pipeline from a double Hopf point to the amplitude system.
pub fn normal_form(
    dhp: &DoubleHopfPoint,
    params: &ModelParams,
    eq: &Equilibrium,
    taylor: &TaylorTable,
    solver: HSolver,
    tol: &Tolerances,
) -> Result<(NormalFormCoefficients, AmplitudeSystem), NormalFormError> {
    if let crate::linear::Resonance::Strong { m1, m2 } = dhp.resonance {
        return Err(NormalFormError::StrongResonance { m1, m2 });
    }
    let basis = eigenbasis(dhp, params, eq);
    normal_form_with_basis(&basis, params, eq, taylor, solver, tol)
}

/// Same as [`normal_form`] with a caller-supplied eigenbasis.
pub fn normal_form_with_basis(
    basis: &EigenBasis,
    params: &ModelParams,
    eq: &Equilibrium,
    taylor: &TaylorTable,
    solver: HSolver,
    tol: &Tolerances,
) -> Result<(NormalFormCoefficients, AmplitudeSystem), NormalFormError> {
    let ctx = NfContext::new(params, eq, taylor, basis);
    let (n1, n2) = (ctx.n1, ctx.n2);
    if n1 > n2 {
        return Err(NormalFormError::UnsupportedModes { n1, n2, reason: "modes must satisfy n1 <= n2" });
    }
    let td = advection_coeffs(&ctx);
    let path = match solver {
        HSolver::ClosedForm => HPath::ClosedForm,
        HSolver::Generic => HPath::Generic,
        HSolver::Auto if n1 != n2 && n2 == 3 * n1 => HPath::Generic,
        HSolver::Auto => HPath::ClosedForm,
    };
    let h = solve_h(&ctx, &td, path)?;
    let (residual, label) = h.max_residual(&ctx);
    if residual >= tol.h_residual {
        return Err(NormalFormError::Residual { label, residual, tolerance: tol.h_residual });
    }
    let second = second_order_nf(&ctx);
    let s1 = cubic_step1(&ctx, &td);
    let s2 = cubic_step2(&ctx, &td);
    let s3 = cubic_step3(&ctx, &h);
    let s4 = cubic_step4(&ctx, &h);
    Ok(assemble(second, s1, s2, s3, s4, path, residual, tol))
}
