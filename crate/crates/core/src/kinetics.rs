//! Reaction kinetics, model parameters and the coexistence equilibrium.
//!
//! The model is
//!
//! ```text
//! u_t = d11 u_xx + f(u, v)
//! v_t = d22 v_xx - d21 (v u_x(x, t - tau))_x + g(u, v)
//! ```
//!
//! on `(0, ell * pi)` with Neumann walls. Kinetics are pluggable through the
//! [`Kinetics`] trait; [`Holling2`] is the built-in instance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Partial derivatives of one scalar reaction term at a point.
///
/// Field names spell the differentiation variables, so `uuv` is
/// `d^3 f / du^2 dv`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub u: f64,
    pub v: f64,
    pub uu: f64,
    pub uv: f64,
    pub vv: f64,
    pub uuu: f64,
    pub uuv: f64,
    pub uvv: f64,
    pub vvv: f64,
}

impl Partials {
    /// Derivative with `i` differentiations in `u` and `j` in `v`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (1, 0) => self.u,
            (0, 1) => self.v,
            (2, 0) => self.uu,
            (1, 1) => self.uv,
            (0, 2) => self.vv,
            (3, 0) => self.uuu,
            (2, 1) => self.uuv,
            (1, 2) => self.uvv,
            (0, 3) => self.vvv,
            _ => 0.0,
        }
    }

    fn entries(&self) -> [f64; 9] {
        [self.u, self.v, self.uu, self.uv, self.vv, self.uuu, self.uuv, self.uvv, self.vvv]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|x| x.is_finite())
    }

    /// Largest absolute entry, used as a scale for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest entry-wise difference to `other`.
    pub fn max_diff(&self, other: &Partials) -> f64 {
        self.entries().iter().zip(other.entries()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A pair of reaction terms `f` (prey) and `g` (predator).
pub trait Kinetics: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn f(&self, u: f64, v: f64) -> f64;

    fn g(&self, u: f64, v: f64) -> f64;

    /// Hand-coded partials up to third order, if the family provides them.
    fn closed_form_partials(&self, _u: f64, _v: f64) -> Option<(Partials, Partials)> {
        None
    }

    /// The positive coexistence equilibrium `(u*, v*)`.
    fn positive_equilibrium(&self) -> Result<(f64, f64), ModelError>;

    /// Named parameters, echoed into manifests and reports.
    fn parameters(&self) -> Vec<(&'static str, f64)>;

    /// Evaluate both reaction terms over whole fields.
    fn eval_fields(&self, u: &[f64], v: &[f64], fu: &mut [f64], gv: &mut [f64]) {
        for i in 0..u.len() {
            fu[i] = self.f(u[i], v[i]);
            gv[i] = self.g(u[i], v[i]);
        }
    }
}

/// Holling type II functional response:
/// `f = u(1 - u/a) - b u v / (1 + u)`, `g = b u v / (1 + u) - c v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holling2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Holling2 {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ModelError> {
        for (name, value) in [("kinetics.a", a), ("kinetics.b", b), ("kinetics.c", c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value, reason: "must be positive" });
            }
        }
        Ok(Self { a, b, c })
    }

    /// `gamma = c / (b - c)`, the prey density at coexistence.
    pub fn gamma(&self) -> f64 {
        self.c / (self.b - self.c)
    }
}

impl Kinetics for Holling2 {
    fn name(&self) -> &str {
        "holling2"
    }

    #[inline]
    fn f(&self, u: f64, v: f64) -> f64 {
        u * (1.0 - u / self.a) - self.b * u * v / (1.0 + u)
    }

    #[inline]
    fn g(&self, u: f64, v: f64) -> f64 {
        self.b * u * v / (1.0 + u) - self.c * v
    }

    fn closed_form_partials(&self, u: f64, v: f64) -> Option<(Partials, Partials)> {
        // h(u) = u / (1 + u) carries all the nonlinearity of the response.
        let w = 1.0 + u;
        let h = u / w;
        let h1 = 1.0 / (w * w);
        let h2 = -2.0 / (w * w * w);
        let h3 = 6.0 / (w * w * w * w);
        let b = self.b;
        let f = Partials {
            u: 1.0 - 2.0 * u / self.a - b * v * h1,
            v: -b * h,
            uu: -2.0 / self.a - b * v * h2,
            uv: -b * h1,
            vv: 0.0,
            uuu: -b * v * h3,
            uuv: -b * h2,
            uvv: 0.0,
            vvv: 0.0,
        };
        let g = Partials {
            u: b * v * h1,
            v: b * h - self.c,
            uu: b * v * h2,
            uv: b * h1,
            vv: 0.0,
            uuu: b * v * h3,
            uuv: b * h2,
            uvv: 0.0,
            vvv: 0.0,
        };
        Some((f, g))
    }

    fn positive_equilibrium(&self) -> Result<(f64, f64), ModelError> {
        let eq = holling2_equilibrium(self.a, self.b, self.c)?;
        Ok((eq.u_star, eq.v_star))
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.a), ("b", self.b), ("c", self.c)]
    }

    fn eval_fields(&self, u: &[f64], v: &[f64], fu: &mut [f64], gv: &mut [f64]) {
        let inv_a = 1.0 / self.a;
        for (((&u, &v), fu), gv) in u.iter().zip(v).zip(fu.iter_mut()).zip(gv.iter_mut()) {
            let p = self.b * u * v / (1.0 + u);
            *fu = u * (1.0 - u * inv_a) - p;
            *gv = p - self.c * v;
        }
    }
}

/// Diffusion, memory and domain parameters plus the kinetics in use.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub d11: f64,
    pub d22: f64,
    pub d21: f64,
    pub tau: f64,
    pub ell: f64,
    pub kinetics: Arc<dyn Kinetics>,
}

impl ModelParams {
    pub fn new(
        d11: f64,
        d22: f64,
        d21: f64,
        tau: f64,
        ell: f64,
        kinetics: Arc<dyn Kinetics>,
    ) -> Result<Self, ModelError> {
        let p = Self { d11, d22, d21, tau, ell, kinetics };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let checks: [(&'static str, f64, bool, &'static str); 5] = [
            ("d11", self.d11, self.d11 > 0.0, "must be positive"),
            ("d22", self.d22, self.d22 > 0.0, "must be positive"),
            ("d21", self.d21, self.d21 >= 0.0, "must be non-negative"),
            ("tau", self.tau, self.tau >= 0.0, "must be non-negative"),
            ("ell", self.ell, self.ell > 0.0, "must be positive"),
        ];
        for (name, value, ok, reason) in checks {
            if !value.is_finite() || !ok {
                return Err(ModelError::InvalidParameter { name, value, reason });
            }
        }
        Ok(())
    }

    /// Copy with a different `(d21, tau)` pair.
    pub fn with_point(&self, d21: f64, tau: f64) -> Self {
        Self { d21, tau, ..self.clone() }
    }

    /// Eigenvalue of `-d^2/dx^2` on mode `n`: `(n / ell)^2`.
    pub fn kappa(&self, n: u32) -> f64 {
        let k = n as f64 / self.ell;
        k * k
    }

    /// Coexistence equilibrium with its Jacobian, using closed-form partials
    /// when the kinetics provide them.
    pub fn equilibrium(&self) -> Result<Equilibrium, ModelError> {
        let (u, v) = self.kinetics.positive_equilibrium()?;
        let (fp, gp) = match self.kinetics.closed_form_partials(u, v) {
            Some(p) => p,
            None => numeric_partials(self.kinetics.as_ref(), u, v, 1),
        };
        Ok(Equilibrium { u_star: u, v_star: v, a11: fp.u, a12: fp.v, a21: gp.u, a22: gp.v })
    }
}

/// Positive steady state and the linearization of the kinetics there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub u_star: f64,
    pub v_star: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Equilibrium {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn jacobian(&self) -> (f64, f64, f64, f64) {
        (self.a11, self.a12, self.a21, self.a22)
    }

    pub fn max_abs_entry(&self) -> f64 {
        [self.a11, self.a12, self.a21, self.a22].iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Closed-form Holling-II equilibrium `(gamma, v_gamma)` and its Jacobian.
pub fn holling2_equilibrium(a: f64, b: f64, c: f64) -> Result<Equilibrium, ModelError> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(ModelError::NoPositiveEquilibrium(format!("a, b, c must be positive (got {a}, {b}, {c})")));
    }
    if b <= c * (1.0 + a) / a {
        return Err(ModelError::NoPositiveEquilibrium(format!(
            "need b > c(1 + a)/a = {}, got b = {b}",
            c * (1.0 + a) / a
        )));
    }
    let gamma = c / (b - c);
    let v = (a - gamma) * (1.0 + gamma) / (a * b);
    Ok(Equilibrium {
        u_star: gamma,
        v_star: v,
        a11: gamma * (a - 1.0 - 2.0 * gamma) / (a * (1.0 + gamma)),
        a12: -c,
        a21: (a - gamma) / (a * (1.0 + gamma)),
        a22: 0.0,
    })
}

/// Jacobian entries `(a11, a12, a21, a22)` of the kinetics at `eq`.
pub fn jacobian_at(eq: &Equilibrium) -> (f64, f64, f64, f64) {
    eq.jacobian()
}

/// Second- and third-order partials of `f` and `g` at the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorTable {
    pub f: Partials,
    pub g: Partials,
    pub order: u8,
}

impl TaylorTable {
    /// Partials of component `k` (0 = f, 1 = g).
    pub fn component(&self, k: usize) -> &Partials {
        if k == 0 {
            &self.f
        } else {
            &self.g
        }
    }
}

/// How to obtain Taylor coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeSource {
    ClosedForm,
    Numeric,
}

/// Taylor table of order 2 or 3 at `(u*, v*)`. Closed forms are used when
/// available and requested; otherwise finite differences.
pub fn taylor_coefficients(
    kin: &dyn Kinetics,
    eq: &Equilibrium,
    order: u8,
    source: DerivativeSource,
) -> Result<TaylorTable, ModelError> {
    if !(order == 2 || order == 3) {
        return Err(ModelError::InvalidParameter { name: "order", value: order as f64, reason: "must be 2 or 3" });
    }
    let (u, v) = (eq.u_star, eq.v_star);
    let (mut f, mut g) = match (source, kin.closed_form_partials(u, v)) {
        (DerivativeSource::ClosedForm, Some(p)) => p,
        _ => numeric_partials(kin, u, v, 3),
    };
    if !(f.is_finite() && g.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "partials",
            value: f64::NAN,
            reason: "non-finite derivative at the equilibrium",
        });
    }
    if order == 2 {
        for p in [&mut f, &mut g] {
            p.uuu = 0.0;
            p.uuv = 0.0;
            p.uvv = 0.0;
            p.vvv = 0.0;
        }
    }
    Ok(TaylorTable { f, g, order })
}

/// Finite-difference step for a derivative of the given order at `x`.
///
/// First derivatives use `max(1e-5, 1e-5 |x|)`. Higher orders need larger
/// steps because roundoff grows like `eps / h^k`.
pub fn fd_step(order: u32, x: f64) -> f64 {
    let base = match order {
        1 => 1e-5,
        2 => 1e-3,
        _ => 2e-3,
    };
    base * x.abs().max(1.0)
}

fn d1(phi: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-phi(x + 2.0 * h) + 8.0 * phi(x + h) - 8.0 * phi(x - h) + phi(x - 2.0 * h)) / (12.0 * h)
}

fn d2(phi: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-phi(x + 2.0 * h) + 16.0 * phi(x + h) - 30.0 * phi(x) + 16.0 * phi(x - h) - phi(x - 2.0 * h)) / (12.0 * h * h)
}

fn d3(phi: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-phi(x + 3.0 * h) + 8.0 * phi(x + 2.0 * h) - 13.0 * phi(x + h) + 13.0 * phi(x - h) - 8.0 * phi(x - 2.0 * h)
        + phi(x - 3.0 * h))
        / (8.0 * h * h * h)
}

/// Mixed partial `d^(i+j) F / du^i dv^j` by nested fourth-order central
/// stencils, differentiating in `v` first.
pub fn numeric_mixed(func: &dyn Fn(f64, f64) -> f64, u: f64, v: f64, i: u32, j: u32) -> f64 {
    let total = i + j;
    let hu = fd_step(total.max(i), u);
    let hv = fd_step(total.max(j), v);
    let dv = |uu: f64| -> f64 {
        let row = |vv: f64| func(uu, vv);
        match j {
            0 => row(v),
            1 => d1(&row, v, hv),
            2 => d2(&row, v, hv),
            _ => d3(&row, v, hv),
        }
    };
    match i {
        0 => dv(u),
        1 => d1(&dv, u, hu),
        2 => d2(&dv, u, hu),
        _ => d3(&dv, u, hu),
    }
}

/// Same as [`numeric_mixed`] but differentiating in `u` first.
pub fn numeric_mixed_u_first(func: &dyn Fn(f64, f64) -> f64, u: f64, v: f64, i: u32, j: u32) -> f64 {
    let swapped = |a: f64, b: f64| func(b, a);
    numeric_mixed(&swapped, v, u, j, i)
}

/// All partials up to `max_order` by finite differences.
pub fn numeric_partials(kin: &dyn Kinetics, u: f64, v: f64, max_order: u32) -> (Partials, Partials) {
    let fun_f = |x: f64, y: f64| kin.f(x, y);
    let fun_g = |x: f64, y: f64| kin.g(x, y);
    let build = |func: &dyn Fn(f64, f64) -> f64| {
        let d = |i: u32, j: u32| if i + j <= max_order { numeric_mixed(func, u, v, i, j) } else { 0.0 };
        Partials {
            u: d(1, 0),
            v: d(0, 1),
            uu: d(2, 0),
            uv: d(1, 1),
            vv: d(0, 2),
            uuu: d(3, 0),
            uuv: d(2, 1),
            uvv: d(1, 2),
            vvv: d(0, 3),
        }
    };
    (build(&fun_f), build(&fun_g))
}
