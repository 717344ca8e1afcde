//! JSON problem descriptions, one schema per subcommand. Unknown fields are rejected.

use serde::Deserialize;

use finsler_core::geometry::DomainSpec;
use finsler_core::nonlinearity::NonlinearitySpec;
use finsler_core::norms::NormSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormCheck {
    pub norm: NormSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoCheck {
    pub p: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Points at which `Ψ` is tabulated when (KO) holds.
    #[serde(default = "default_psi_points")]
    pub psi_at: Vec<f64>,
}

fn default_psi_points() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solve1d {
    pub interval: [f64; 2],
    #[serde(default = "one")]
    pub gamma: f64,
    pub p: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Interior sample points written to the CSV.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_margins")]
    pub margins: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    200
}

fn default_margins() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

/// `k` is a finite boundary value; the large solution is computed when absent.
#[derive(Debug, Deserialize)]
#[serde(tag = "geometry", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolveRadial {
    /// `{R1 < H₀(x) < R2}`, blowing up on the inner sphere.
    Annulus {
        r1: f64,
        r2: f64,
        norm: NormSpec,
        p: f64,
        nonlinearity: NonlinearitySpec,
        #[serde(default)]
        k: Option<f64>,
    },
    /// `{H₀(x) < R}` in dimension `dim`.
    Ball {
        r: f64,
        dim: usize,
        p: f64,
        nonlinearity: NonlinearitySpec,
        #[serde(default)]
        k: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Planar {
    pub domain: DomainSpec,
    pub norm: NormSpec,
    pub p: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Grid spacing, overridden by `--grid`.
    #[serde(default)]
    pub h: Option<f64>,
    /// Constant Dirichlet data; the large solution when absent.
    #[serde(default)]
    pub boundary_value: Option<f64>,
    /// Distance bands for `asymptotics`.
    #[serde(default = "default_bands")]
    pub bands: Vec<[f64; 2]>,
    /// Interior relative tolerance for `uniqueness`.
    #[serde(default = "default_uniqueness_tol")]
    pub uniqueness_tol: f64,
}

fn default_bands() -> Vec<[f64; 2]> {
    vec![[0.05, 0.1], [0.1, 0.2]]
}

fn default_uniqueness_tol() -> f64 {
    0.03
}

pub const DEFAULT_GRID: f64 = 1.0 / 32.0;
