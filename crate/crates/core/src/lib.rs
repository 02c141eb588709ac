//! Analysis toolkit for a predator–prey system with memory-based diffusion:
//! the predator drifts along the prey gradient observed one delay `tau` in
//! the past.
//!
//! The modules follow the analysis pipeline:
//!
//! * [`kinetics`] — reaction terms, equilibria and Taylor coefficients;
//! * [`linear`] — characteristic equation, Hopf curves, stability and double
//!   Hopf points;
//! * [`normalform`] — centre-manifold reduction to amplitude equations;
//! * [`unfolding`] — equilibria of the amplitude system and the sector
//!   picture around a double Hopf point;
//! * [`simulator`] — finite-volume integration of the full delayed PDE.

pub mod config;
pub mod error;
pub mod kinetics;
pub mod linear;
pub mod normalform;
pub mod simulator;
pub mod unfolding;
pub mod validation;

pub use config::{case_one, case_two, KineticsSpec, ModelSpec, Tolerances};
pub use error::{LinearError, ModelError, NormalFormError, SimError, UnfoldingError};
pub use kinetics::{
    taylor_coefficients, DerivativeSource, Equilibrium, Holling2, Kinetics, ModelParams, Partials, TaylorTable,
};
pub use linear::{
    find_double_hopf, hopf_delays, stability_map, stability_verdict, Branch, CurveLabel, DoubleHopfPoint,
    HopfCurvePoint, Resonance, SearchBox, StabilityReport, Verdict,
};
pub use normalform::{normal_form, AmplitudeSystem, CaseTag, HSolver, NormalFormCoefficients};
pub use simulator::{simulate, AttractorKind, AttractorReport, Grid, InitialCondition, SimConfig, SimResult};
pub use unfolding::{classify_point, sectors, Classification, DynamicsLabel, UnfoldingClassification};

pub use nalgebra;
pub use num_complex;
