//! Verb settings. Each verb reads an optional section of the config file
//! (`[stability_map]`, `[simulate]`, ...) and command-line flags override
//! individual fields.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mdhopf::linear::{CurveLabel, SearchBox};
use mdhopf::validation::{case_one_curves, case_two_curves};
use mdhopf::ModelSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `lo:hi:n` — `n` evenly spaced values including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

impl FromStr for GridRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("range `{s}`: `{p}` is not a number"));
        match parts.as_slice() {
            [lo, hi, n] => Ok(Self {
                lo: num(lo)?,
                hi: num(hi)?,
                n: n.trim().parse().map_err(|_| format!("range `{s}`: `{n}` is not a count"))?,
            }),
            [lo, hi] => Ok(Self { lo: num(lo)?, hi: num(hi)?, n: 2 }),
            _ => Err(format!("range `{s}`: expected lo:hi:n")),
        }
    }
}

impl fmt::Display for GridRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl Serialize for GridRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GridRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Curve label kept in its textual form (`2+1`) for config files and
/// manifests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve(pub CurveLabel);

impl FromStr for Curve {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(Curve)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.0.n, self.0.branch, self.0.j)
    }
}

impl Serialize for Curve {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Curve {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which pair of Hopf curves to intersect and where.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSearch {
    pub curve1: Curve,
    pub curve2: Curve,
    pub d21_range: [f64; 2],
    pub tau_range: [f64; 2],
}

impl PointSearch {
    pub fn search_box(&self) -> SearchBox {
        SearchBox { d21: (self.d21_range[0], self.d21_range[1]), tau: (self.tau_range[0], self.tau_range[1]) }
    }

    /// Defaults for the two worked examples, recognised by their kinetics.
    pub fn default_for(spec: &ModelSpec) -> Option<Self> {
        let k = &spec.kinetics;
        let from = |(c1, c2, b): (CurveLabel, CurveLabel, SearchBox)| Self {
            curve1: Curve(c1),
            curve2: Curve(c2),
            d21_range: [b.d21.0, b.d21.1],
            tau_range: [b.tau.0, b.tau.1],
        };
        if (k.a, k.b, k.c) == (1.0, 9.0, 3.0) {
            Some(from(case_one_curves()))
        } else if (k.a, k.b, k.c) == (1.0, 0.3, 0.1) {
            Some(from(case_two_curves()))
        } else {
            None
        }
    }
}

/// Optional overrides of [`PointSearch`] collected from flags.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct PointArgs {
    /// First Hopf curve, e.g. `2+1` for tau_{2,1}^+.
    #[arg(long)]
    pub curve1: Option<Curve>,
    /// Second Hopf curve, e.g. `2-0`.
    #[arg(long)]
    pub curve2: Option<Curve>,
    /// Search interval in d21 as `lo:hi`.
    #[arg(long, value_parser = parse_pair)]
    pub d21_range: Option<[f64; 2]>,
    /// Search interval in tau as `lo:hi`.
    #[arg(long, value_parser = parse_pair)]
    pub tau_range: Option<[f64; 2]>,
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}`: expected lo:hi"))?;
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
    Ok([num(a)?, num(b)?])
}

/// Resolve the point search from config section `[point]`, flags and the
/// built-in defaults, in increasing order of precedence for flags.
pub fn resolve_point(config: Option<&toml::Table>, spec: &ModelSpec, args: &PointArgs) -> Result<PointSearch> {
    let from_file: Option<PointSearch> = section(config, "point")?;
    let base = from_file.or_else(|| PointSearch::default_for(spec));
    let merged = match base {
        Some(b) => PointSearch {
            curve1: args.curve1.unwrap_or(b.curve1),
            curve2: args.curve2.unwrap_or(b.curve2),
            d21_range: args.d21_range.unwrap_or(b.d21_range),
            tau_range: args.tau_range.unwrap_or(b.tau_range),
        },
        None => match (args.curve1, args.curve2, args.d21_range, args.tau_range) {
            (Some(curve1), Some(curve2), Some(d21_range), Some(tau_range)) => {
                PointSearch { curve1, curve2, d21_range, tau_range }
            }
            _ => bail!("no [point] section in the config: pass --curve1, --curve2, --d21-range and --tau-range"),
        },
    };
    Ok(merged)
}

/// Deserialize an optional section of the config file.
pub fn section<T: DeserializeOwned>(config: Option<&toml::Table>, name: &str) -> Result<Option<T>> {
    let Some(value) = config.and_then(|c| c.get(name)) else {
        return Ok(None);
    };
    let parsed = value.clone().try_into().with_context(|| format!("config section [{name}]"))?;
    Ok(Some(parsed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityMapSettings {
    pub d21: GridRange,
    pub tau: GridRange,
    /// Hopf curves overlaid as polylines.
    pub curves: Vec<Curve>,
    pub curve_samples: usize,
}

impl Default for StabilityMapSettings {
    fn default() -> Self {
        Self {
            d21: GridRange::new(6.9, 7.0, 21),
            tau: GridRange::new(0.0, 20.0, 41),
            curves: Vec::new(),
            curve_samples: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfCurveSettings {
    pub d21: GridRange,
    pub n_max: u32,
    pub j_max: u32,
}

impl Default for HopfCurveSettings {
    fn default() -> Self {
        Self { d21: GridRange::new(6.9, 7.0, 101), n_max: 3, j_max: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Auto,
    ClosedForm,
    Generic,
}

impl From<Solver> for mdhopf::HSolver {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Auto => mdhopf::HSolver::Auto,
            Solver::ClosedForm => mdhopf::HSolver::ClosedForm,
            Solver::Generic => mdhopf::HSolver::Generic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ClassifySettings {
    /// Explicit `(d21, tau)` points.
    pub points: Vec<[f64; 2]>,
    /// Optional grid, used when no points are given.
    pub d21: Option<GridRange>,
    pub tau: Option<GridRange>,
}

impl ClassifySettings {
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        if !self.points.is_empty() {
            return self.points.clone();
        }
        match (self.d21, self.tau) {
            (Some(d), Some(t)) => {
                d.values().into_iter().flat_map(|x| t.values().into_iter().map(move |y| [x, y])).collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    pub m: usize,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub record_every: f64,
    /// Spacing of full-field snapshots in the trajectory CSV.
    pub snapshot_every: f64,
    pub probes: Vec<f64>,
    pub n_modes: usize,
    /// `u = u* + amp_u cos(k x)`, `v = v* + amp_v cos(k x)`.
    pub amp_u: f64,
    pub amp_v: f64,
    pub k: f64,
    /// Amplitude of seeded uniform noise added to both fields.
    pub noise: f64,
    /// Tail window for the attractor report.
    pub tail: f64,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            m: 256,
            t_end: 500.0,
            dt: None,
            record_every: 0.5,
            snapshot_every: 10.0,
            probes: vec![std::f64::consts::PI / 5.0],
            n_modes: 6,
            amp_u: 0.005,
            amp_v: -0.005,
            k: 1.0,
            noise: 0.0,
            tail: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub solver: Solver,
    /// Classification grid around the double Hopf point, as offsets.
    pub d21_offsets: GridRange,
    pub tau_offsets: GridRange,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            solver: Solver::Auto,
            d21_offsets: GridRange::new(-0.05, 0.05, 5),
            tau_offsets: GridRange::new(-1.0, 1.0, 5),
        }
    }
}
