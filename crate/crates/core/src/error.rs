use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("no positive coexistence equilibrium: {0}")]
    NoPositiveEquilibrium(String),
    #[error("unknown kinetics family `{0}`")]
    UnknownKinetics(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("mode {n}: no purely imaginary root (P = {p:.6e}, Q = {q:.6e})")]
    NoImaginaryRoot { n: u32, p: f64, q: f64 },
    #[error("mode {n}: arccos argument {value} outside [-1, 1]")]
    DegenerateWindow { n: u32, value: f64 },
    #[error("curves do not cross in the d21 window [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("root refinement failed: {0}")]
    Refinement(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error("characteristic matrix singular at mode {n}, rate {rate}: {reason}")]
    Singular { n: u32, rate: f64, reason: String },
    #[error("strong resonance {m1}:{m2} between the Hopf frequencies")]
    StrongResonance { m1: u32, m2: u32 },
    #[error("mode pair ({n1}, {n2}) is not supported: {reason}")]
    UnsupportedModes { n1: u32, n2: u32, reason: &'static str },
    #[error("h residual {residual:.3e} exceeds {tolerance:.1e} for {label}")]
    Residual { label: String, residual: f64, tolerance: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dt = {dt:.3e} exceeds the explicit limit {dt_max:.3e}")]
    CflViolation { dt: f64, dt_max: f64 },
    #[error("non-finite field at t = {t}")]
    NonFiniteField { t: f64 },
    #[error("grid needs at least 64 cells, got {0}")]
    GridTooCoarse(usize),
    #[error("tail window {window:.1} covers fewer than 50 periods of {period:.3}")]
    WindowTooShort { window: f64, period: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldingError {
    #[error("degenerate cubic coefficients: {0}")]
    DegenerateCubic(String),
    #[error("amplitude integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
}
