//! Method-of-lines integration of the delayed advection system and
//! attractor diagnostics.
//!
//! Cells are centered at `x_i = (i + 1/2) dx` with `dx = ell pi / M`.
//! Diffusion uses central differences with mirror ghost cells; the memory
//! term is a conservative flux `F = -d21 v_face u_x(face, t - tau)` with zero
//! flux at both walls. Time stepping is classical RK4 with
//! `dt = tau / k` for an integer `k`, so the delayed gradient is an exact
//! history sample at the first and last stage and the average of two
//! consecutive samples at the midpoint stages.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::kinetics::{Equilibrium, ModelParams};

/// Uniform cell-centered grid on `(0, ell pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub m: usize,
    pub dx: f64,
    pub ell: f64,
}

impl Grid {
    pub fn new(m: usize, ell: f64) -> Result<Self, SimError> {
        if m < 64 {
            return Err(SimError::GridTooCoarse(m));
        }
        Ok(Self { m, dx: ell * PI / m as f64, ell })
    }

    pub fn length(&self) -> f64 {
        self.ell * PI
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Largest stable explicit step `0.4 dx^2 / max(d11, d22)`.
    pub fn dt_max(&self, params: &ModelParams) -> f64 {
        0.4 * self.dx * self.dx / params.d11.max(params.d22)
    }

    /// Normalized Neumann eigenfunction `gamma_n` at `x`.
    pub fn gamma(&self, n: usize, x: f64) -> f64 {
        if n == 0 {
            1.0 / self.length().sqrt()
        } else {
            (2.0 / self.length()).sqrt() * (n as f64 * x / self.ell).cos()
        }
    }

    /// Linear interpolation of a cell field at `x`, constant beyond the
    /// outermost centers.
    pub fn sample(&self, field: &[f64], x: f64) -> f64 {
        let s = x / self.dx - 0.5;
        if s <= 0.0 {
            return field[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= self.m {
            return field[self.m - 1];
        }
        let w = s - i as f64;
        field[i] * (1.0 - w) + field[i + 1] * w
    }
}

/// Time step and delay lag actually used for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub dt: f64,
    /// Delay in steps: `tau = lag dt`. Zero means no delay.
    pub lag: usize,
}

/// Choose `dt <= min(requested, dt_max)` with `tau` an integer multiple of it.
pub fn plan_step(grid: &Grid, params: &ModelParams, requested: Option<f64>) -> Result<StepPlan, SimError> {
    let dt_max = grid.dt_max(params);
    let target = match requested {
        Some(dt) if dt > dt_max => return Err(SimError::CflViolation { dt, dt_max }),
        Some(dt) if dt > 0.0 => dt,
        _ => dt_max,
    };
    if params.tau == 0.0 {
        return Ok(StepPlan { dt: target, lag: 0 });
    }
    let lag = (params.tau / target).ceil() as usize;
    Ok(StepPlan { dt: params.tau / lag as f64, lag })
}

/// Ring buffer of face gradients `u_x` at past step indices.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    faces: usize,
    slots: usize,
    head: usize,
    data: Vec<f64>,
}

impl History {
    /// Constant history equal to `initial` on `[-tau, 0]`.
    pub fn constant(initial: &[f64], lag: usize) -> Self {
        let faces = initial.len();
        let slots = lag + 1;
        let mut data = Vec::with_capacity(faces * slots);
        for _ in 0..slots {
            data.extend_from_slice(initial);
        }
        Self { faces, slots, head: 0, data }
    }

    /// Sample `back` steps before the newest one.
    pub fn lagged(&self, back: usize) -> &[f64] {
        let slot = (self.head + self.slots - back % self.slots) % self.slots;
        &self.data[slot * self.faces..(slot + 1) * self.faces]
    }

    /// Append the newest sample, dropping the oldest.
    pub fn push(&mut self, sample: &[f64]) {
        self.head = (self.head + 1) % self.slots;
        let start = self.head * self.faces;
        self.data[start..start + self.faces].copy_from_slice(sample);
    }

    pub fn span_steps(&self) -> usize {
        self.slots - 1
    }
}

/// Face gradients `(u_i - u_{i-1}) / dx` on faces `0..=M`, zero at the walls.
pub fn face_gradient(u: &[f64], dx: f64, out: &mut [f64]) {
    let m = u.len();
    out[0] = 0.0;
    out[m] = 0.0;
    let inv = 1.0 / dx;
    for f in 1..m {
        out[f] = (u[f] - u[f - 1]) * inv;
    }
}

/// Current fields plus the delay history.
#[derive(Debug, Clone)]
pub struct SimState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub steps: u64,
    pub history: History,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `u = u* + amp_u cos(k x)`, `v = v* + amp_v cos(k x)`.
    Cosine { amp_u: f64, amp_v: f64, k: f64 },
    /// Explicit cell values.
    Fields { u: Vec<f64>, v: Vec<f64> },
}

impl InitialCondition {
    pub fn describe(&self) -> String {
        match self {
            InitialCondition::Cosine { amp_u, amp_v, k } => {
                format!("u = u* + {amp_u} cos({k} x), v = v* + {amp_v} cos({k} x), history constant on [-tau, 0]")
            }
            InitialCondition::Fields { .. } => "explicit fields, history constant on [-tau, 0]".into(),
        }
    }

    pub fn fields(&self, grid: &Grid, eq: &Equilibrium) -> (Vec<f64>, Vec<f64>) {
        match self {
            InitialCondition::Cosine { amp_u, amp_v, k } => (0..grid.m)
                .map(|i| {
                    let c = (k * grid.x(i)).cos();
                    (eq.u_star + amp_u * c, eq.v_star + amp_v * c)
                })
                .unzip(),
            InitialCondition::Fields { u, v } => (u.clone(), v.clone()),
        }
    }
}

impl SimState {
    pub fn new(u: Vec<f64>, v: Vec<f64>, grid: &Grid, plan: &StepPlan) -> Self {
        let mut g = vec![0.0; grid.m + 1];
        face_gradient(&u, grid.dx, &mut g);
        Self { u, v, t: 0.0, steps: 0, history: History::constant(&g, plan.lag) }
    }

    pub fn sup_deviation(&self, eq: &Equilibrium) -> f64 {
        self.u.iter().zip(&self.v).fold(0.0_f64, |m, (u, v)| m.max((u - eq.u_star).abs()).max((v - eq.v_star).abs()))
    }
}

/// Scratch buffers for one RK4 step.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    plan: StepPlan,
    ku: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
    su: Vec<f64>,
    sv: Vec<f64>,
    mid: Vec<f64>,
    grad: Vec<f64>,
    flux: Vec<f64>,
    fu: Vec<f64>,
    gv: Vec<f64>,
}

/// Stage derivative. `g` is the face gradient entering the memory flux and
/// `flux` is scratch of length `M + 1`.
#[allow(clippy::too_many_arguments)]
fn rhs(
    params: &ModelParams,
    dx: f64,
    u: &[f64],
    v: &[f64],
    g: &[f64],
    flux: &mut [f64],
    fu: &mut [f64],
    gv: &mut [f64],
    du: &mut [f64],
    dv: &mut [f64],
) {
    let m = u.len();
    let inv_dx2 = 1.0 / (dx * dx);
    let inv_dx = 1.0 / dx;
    let (d11, d22, d21) = (params.d11, params.d22, params.d21);
    params.kinetics.eval_fields(u, v, fu, gv);
    flux[0] = 0.0;
    flux[m] = 0.0;
    let c = -0.5 * d21;
    for f in 1..m {
        flux[f] = c * (v[f - 1] + v[f]) * g[f];
    }
    // Mirror ghost cells make the wall Laplacian one-sided.
    du[0] = d11 * (u[1] - u[0]) * inv_dx2 + fu[0];
    dv[0] = d22 * (v[1] - v[0]) * inv_dx2 + flux[1] * inv_dx + gv[0];
    for i in 1..m - 1 {
        du[i] = d11 * (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2 + fu[i];
        dv[i] = d22 * (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_dx2 + (flux[i + 1] - flux[i]) * inv_dx + gv[i];
    }
    let l = m - 1;
    du[l] = d11 * (u[l - 1] - u[l]) * inv_dx2 + fu[l];
    dv[l] = d22 * (v[l - 1] - v[l]) * inv_dx2 - flux[l] * inv_dx + gv[l];
}

impl Stepper {
    pub fn new(grid: Grid, plan: StepPlan) -> Self {
        let z = || vec![0.0; grid.m];
        Self {
            grid,
            plan,
            ku: [z(), z(), z(), z()],
            kv: [z(), z(), z(), z()],
            su: z(),
            sv: z(),
            mid: vec![0.0; grid.m + 1],
            grad: vec![0.0; grid.m + 1],
            flux: vec![0.0; grid.m + 1],
            fu: z(),
            gv: z(),
        }
    }

    pub fn plan(&self) -> StepPlan {
        self.plan
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Evaluate stage `s` at `(su, sv)`; `delayed` selects the history
    /// sample (`None` uses the gradient of the stage itself).
    fn stage(&mut self, params: &ModelParams, s: usize, delayed: Option<Delayed<'_>>) {
        let dx = self.grid.dx;
        let g: &[f64] = match delayed {
            Some(Delayed::Sample(g)) => g,
            Some(Delayed::Midpoint) => &self.mid,
            None => {
                face_gradient(&self.su, dx, &mut self.grad);
                &self.grad
            }
        };
        rhs(
            params,
            dx,
            &self.su,
            &self.sv,
            g,
            &mut self.flux,
            &mut self.fu,
            &mut self.gv,
            &mut self.ku[s],
            &mut self.kv[s],
        );
    }

    /// Advance one step. With `lag = 0` the memory flux uses the current
    /// gradient (no history is consulted).
    pub fn step(&mut self, state: &mut SimState, params: &ModelParams) -> Result<(), SimError> {
        let dt = self.plan.dt;
        let lag = self.plan.lag;
        let m = self.grid.m;
        if lag > 0 {
            let a = state.history.lagged(lag);
            let b = state.history.lagged(lag - 1);
            for f in 0..=m {
                self.mid[f] = 0.5 * (a[f] + b[f]);
            }
        }
        let offsets = [0.0, 0.5 * dt, 0.5 * dt, dt];
        #[allow(clippy::needless_range_loop)]
        for s in 0..4 {
            if s == 0 {
                self.su.copy_from_slice(&state.u);
                self.sv.copy_from_slice(&state.v);
            } else {
                let h = offsets[s];
                for i in 0..m {
                    self.su[i] = state.u[i] + h * self.ku[s - 1][i];
                    self.sv[i] = state.v[i] + h * self.kv[s - 1][i];
                }
            }
            let delayed = if lag == 0 {
                None
            } else {
                Some(match s {
                    0 => Delayed::Sample(state.history.lagged(lag)),
                    3 => Delayed::Sample(state.history.lagged(lag - 1)),
                    _ => Delayed::Midpoint,
                })
            };
            self.stage(params, s, delayed);
        }
        let w = dt / 6.0;
        for i in 0..m {
            state.u[i] += w * (self.ku[0][i] + 2.0 * (self.ku[1][i] + self.ku[2][i]) + self.ku[3][i]);
            state.v[i] += w * (self.kv[0][i] + 2.0 * (self.kv[1][i] + self.kv[2][i]) + self.kv[3][i]);
        }
        state.steps += 1;
        state.t = state.steps as f64 * dt;
        if lag > 0 {
            face_gradient(&state.u, self.grid.dx, &mut self.grad);
            state.history.push(&self.grad);
        }
        if state.steps.is_multiple_of(1024) && !fields_finite(state) {
            return Err(SimError::NonFiniteField { t: state.t });
        }
        Ok(())
    }
}

enum Delayed<'a> {
    Sample(&'a [f64]),
    Midpoint,
}

fn fields_finite(state: &SimState) -> bool {
    state.u.iter().chain(&state.v).all(|x| x.is_finite())
}

/// Integration of the system without any memory machinery: the advection
/// flux always uses the instantaneous gradient. Used as a reference for the
/// delayed integrator.
pub fn step_instantaneous(grid: &Grid, params: &ModelParams, dt: f64, u: &mut [f64], v: &mut [f64]) {
    let m = grid.m;
    let mut g = vec![0.0; m + 1];
    let mut flux = vec![0.0; m + 1];
    let (mut fu, mut gv) = (vec![0.0; m], vec![0.0; m]);
    let mut ku = vec![vec![0.0; m]; 4];
    let mut kv = vec![vec![0.0; m]; 4];
    let (mut su, mut sv) = (u.to_vec(), v.to_vec());
    let h = [0.0, 0.5 * dt, 0.5 * dt, dt];
    for s in 0..4 {
        if s > 0 {
            for i in 0..m {
                su[i] = u[i] + h[s] * ku[s - 1][i];
                sv[i] = v[i] + h[s] * kv[s - 1][i];
            }
        }
        face_gradient(&su, grid.dx, &mut g);
        let (a, b) = (&mut ku[s], &mut kv[s]);
        rhs(params, grid.dx, &su, &sv, &g, &mut flux, &mut fu, &mut gv, a, b);
    }
    for i in 0..m {
        u[i] += dt / 6.0 * (ku[0][i] + 2.0 * (ku[1][i] + ku[2][i]) + ku[3][i]);
        v[i] += dt / 6.0 * (kv[0][i] + 2.0 * (kv[1][i] + kv[2][i]) + kv[3][i]);
    }
}

/// Cosine-mode coefficients `c_n = sum_i w_i gamma_n(x_i) dx`.
#[derive(Debug, Clone)]
pub struct ModeProjector {
    weights: Vec<Vec<f64>>,
}

impl ModeProjector {
    pub fn new(grid: &Grid, n_modes: usize) -> Self {
        let weights = (0..n_modes).map(|n| (0..grid.m).map(|i| grid.gamma(n, grid.x(i)) * grid.dx).collect()).collect();
        Self { weights }
    }

    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    /// Coefficients of `field - offset`.
    pub fn project(&self, field: &[f64], offset: f64) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().zip(field).map(|(w, f)| w * (f - offset)).sum()).collect()
    }
}

/// Cosine coefficients of a field relative to `offset`.
pub fn mode_amplitudes(grid: &Grid, field: &[f64], offset: f64, n_modes: usize) -> Vec<f64> {
    ModeProjector::new(grid, n_modes).project(field, offset)
}

/// What to record during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub m: usize,
    /// Requested step; rounded down so that `tau` is a multiple of it.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Spacing of probe, mode and deviation records.
    pub record_every: f64,
    /// Spacing of full snapshots; `None` keeps only the final state.
    pub snapshot_every: Option<f64>,
    pub probes: Vec<f64>,
    pub n_modes: usize,
}

impl SimConfig {
    pub fn new(m: usize, t_end: f64) -> Self {
        Self { m, dt: None, t_end, record_every: 0.5, snapshot_every: None, probes: vec![PI / 5.0], n_modes: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Time series recorded every `record_every`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Records {
    pub t: Vec<f64>,
    /// `probe_u[p][k]` is `u` at probe `p`, record `k`.
    pub probe_u: Vec<Vec<f64>>,
    pub probe_v: Vec<Vec<f64>>,
    /// `modes[k][n]` is the coefficient of `u - u*` on `gamma_n`.
    pub modes: Vec<Vec<f64>>,
    /// Sup-norm distance to the equilibrium.
    pub deviation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub grid: Grid,
    pub plan: StepPlan,
    pub equilibrium: (f64, f64),
    pub records: Records,
    pub snapshots: Vec<Snapshot>,
    pub final_state: Snapshot,
    pub steps: u64,
}

impl SimResult {
    pub fn final_deviation(&self) -> f64 {
        let (us, vs) = self.equilibrium;
        self.final_state
            .u
            .iter()
            .zip(&self.final_state.v)
            .fold(0.0_f64, |m, (u, v)| m.max((u - us).abs()).max((v - vs).abs()))
    }

    /// Records with `t >= t_end - window`.
    pub fn tail_start(&self, window: f64) -> usize {
        let t_end = self.records.t.last().copied().unwrap_or(0.0);
        self.records.t.iter().position(|&t| t >= t_end - window - 1e-9).unwrap_or(0)
    }

    /// Mode with the largest time-averaged coefficient energy over the tail.
    pub fn dominant_mode(&self, window: f64) -> Option<usize> {
        let start = self.tail_start(window);
        let rows = &self.records.modes[start..];
        let n = rows.first()?.len();
        (0..n)
            .map(|k| (k, rows.iter().map(|r| r[k] * r[k]).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    }

    /// Classify the tail of the first probe's `u` series.
    pub fn classify(&self, window: f64) -> Result<AttractorReport, SimError> {
        let start = self.tail_start(window);
        let t = &self.records.t[start..];
        let x = &self.records.probe_u.first().ok_or(SimError::WindowTooShort { window, period: f64::NAN })?[start..];
        let mut report = classify_series(t, x)?;
        report.dominant_mode = self.dominant_mode(window);
        report.final_deviation = self.final_deviation();
        Ok(report)
    }
}

/// Integrate from the initial condition to `cfg.t_end`.
pub fn simulate(
    params: &ModelParams,
    eq: &Equilibrium,
    ic: &InitialCondition,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let grid = Grid::new(cfg.m, params.ell)?;
    let plan = plan_step(&grid, params, cfg.dt)?;
    let (u, v) = ic.fields(&grid, eq);
    let mut state = SimState::new(u, v, &grid, &plan);
    let mut stepper = Stepper::new(grid, plan);
    let projector = ModeProjector::new(&grid, cfg.n_modes);
    let total = (cfg.t_end / plan.dt).round() as u64;
    let record_stride = ((cfg.record_every / plan.dt).round() as u64).max(1);
    let snap_stride = cfg.snapshot_every.map(|s| ((s / plan.dt).round() as u64).max(1));

    let mut records = Records {
        probe_u: vec![Vec::new(); cfg.probes.len()],
        probe_v: vec![Vec::new(); cfg.probes.len()],
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let record = |state: &SimState, records: &mut Records| {
        records.t.push(state.t);
        for (p, &x) in cfg.probes.iter().enumerate() {
            records.probe_u[p].push(grid.sample(&state.u, x));
            records.probe_v[p].push(grid.sample(&state.v, x));
        }
        records.modes.push(projector.project(&state.u, eq.u_star));
        records.deviation.push(state.sup_deviation(eq));
    };
    record(&state, &mut records);
    if snap_stride.is_some() {
        snapshots.push(Snapshot { t: 0.0, u: state.u.clone(), v: state.v.clone() });
    }
    while state.steps < total {
        stepper.step(&mut state, params)?;
        if state.steps.is_multiple_of(record_stride) {
            record(&state, &mut records);
        }
        if let Some(s) = snap_stride {
            if state.steps.is_multiple_of(s) {
                snapshots.push(Snapshot { t: state.t, u: state.u.clone(), v: state.v.clone() });
            }
        }
    }
    if !fields_finite(&state) {
        return Err(SimError::NonFiniteField { t: state.t });
    }
    Ok(SimResult {
        grid,
        plan,
        equilibrium: (eq.u_star, eq.v_star),
        records,
        snapshots,
        final_state: Snapshot { t: state.t, u: state.u, v: state.v },
        steps: state.steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttractorKind {
    Equilibrium,
    Periodic,
    QuasiPeriodic,
    Unclassified,
}

impl std::fmt::Display for AttractorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttractorKind::Equilibrium => "Equilibrium",
            AttractorKind::Periodic => "Periodic",
            AttractorKind::QuasiPeriodic => "QuasiPeriodic",
            AttractorKind::Unclassified => "Unclassified",
        })
    }
}

/// Spectral peak in cycles per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub power_fraction: f64,
}

impl Peak {
    pub fn angular(&self) -> f64 {
        2.0 * PI * self.frequency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    pub dominant_mode: Option<usize>,
    /// Up to two strongest peaks, strongest first.
    pub frequencies: Vec<Peak>,
    /// Lowest significant frequency (the fundamental of a periodic orbit).
    pub base_frequency: Option<f64>,
    pub peak_to_peak: f64,
    pub final_deviation: f64,
    pub window: f64,
}

/// Peaks below this share of the total power are ignored.
pub const PEAK_FRACTION: f64 = 0.01;
/// Series with smaller peak-to-peak range count as equilibria.
pub const FLAT_RANGE: f64 = 1e-6;
/// Minimum number of periods of the strongest peak inside the window.
pub const MIN_PERIODS: f64 = 50.0;

/// Classify a uniformly sampled series.
///
/// A peak at `f` is a harmonic of the fundamental `f0` when `f / f0` is
/// within 2% of an integer `k` *and* `|f - k f0|` is below a quarter of the
/// window's frequency resolution. The second condition separates genuine
/// harmonics from nearby incommensurate frequencies such as `3:1` near
/// misses.
pub fn classify_series(t: &[f64], x: &[f64]) -> Result<AttractorReport, SimError> {
    let n = x.len();
    let window = if n > 1 { t[n - 1] - t[0] } else { 0.0 };
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ptp = hi - lo;
    let mut report = AttractorReport {
        kind: AttractorKind::Equilibrium,
        dominant_mode: None,
        frequencies: Vec::new(),
        base_frequency: None,
        peak_to_peak: ptp,
        final_deviation: f64::NAN,
        window,
    };
    if n < 4 || ptp < FLAT_RANGE {
        return Ok(report);
    }
    let dt = window / (n - 1) as f64;
    let peaks = spectral_peaks(x, dt);
    let resolution = 1.0 / window;
    let Some(strongest) = peaks.first() else {
        report.kind = AttractorKind::Unclassified;
        return Ok(report);
    };
    let period = 1.0 / strongest.frequency;
    if window < MIN_PERIODS * period {
        return Err(SimError::WindowTooShort { window, period });
    }
    let base = peaks.iter().map(|p| p.frequency).fold(f64::INFINITY, f64::min);
    let harmonic = |f: f64| {
        let r = f / base;
        let k = r.round();
        k >= 1.0 && (r - k).abs() <= 0.02 * k && (f - k * base).abs() <= 0.25 * resolution
    };
    report.kind = if peaks.iter().all(|p| harmonic(p.frequency)) {
        AttractorKind::Periodic
    } else {
        AttractorKind::QuasiPeriodic
    };
    report.base_frequency = Some(base);
    report.frequencies = peaks.into_iter().take(2).collect();
    Ok(report)
}

/// Significant peaks of the Hann-windowed periodogram, strongest first.
pub fn spectral_peaks(x: &[f64], dt: f64) -> Vec<Peak> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let padded = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..padded)
        .map(|i| {
            if i < n {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
                Complex::new((x[i] - mean) * w, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let half = padded / 2;
    let power: Vec<f64> = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power[1..].iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    // Hann main lobe spans two raw bins either side.
    let lobe = 2 * padded / n + 1;
    let mut peaks = Vec::new();
    for k in 1..half {
        if power[k] < power[k - 1] || power[k] < power[k + 1] {
            continue;
        }
        let a = k.saturating_sub(lobe).max(1);
        let b = (k + lobe).min(half);
        if power[a..=b].iter().any(|&p| p > power[k]) {
            continue;
        }
        let fraction = power[a..=b].iter().sum::<f64>() / total;
        if fraction < PEAK_FRACTION {
            continue;
        }
        // Parabolic refinement on log power.
        let (l, c, r) = (power[k - 1].max(1e-300).ln(), power[k].ln(), power[k + 1].max(1e-300).ln());
        let denom = l - 2.0 * c + r;
        let shift = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        peaks.push(Peak { frequency: (k as f64 + shift) / (padded as f64 * dt), power_fraction: fraction });
    }
    peaks.sort_by(|a, b| b.power_fraction.total_cmp(&a.power_fraction));
    peaks
}
