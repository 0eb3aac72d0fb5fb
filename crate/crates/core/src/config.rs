//! Tolerances and sampling defaults. Every certificate records the values
//! it was produced with.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// A sampled value with `|v| <= zero` counts as zero.
    pub zero: f64,
    /// Minimum `|∂1 h|` on Z for transversality.
    pub margin: f64,
    /// `|Im λ| <= eig_real * max(1, |Re λ|)` counts as a real eigenvalue.
    pub eig_real: f64,
    /// `‖A² + I‖ <= complex_structure` flags A as a complex structure.
    pub complex_structure: f64,
    /// Relative singular-value cutoff for ranks and kernels.
    pub rank: f64,
    /// Minimum |u| for b-map factorizations.
    pub u_min: f64,
    /// Minimum margin of θ∧σ^{n-1} (or θ∧ω^{n-1}) on Z.
    pub collar: f64,
    /// Minimum |Pfaffian| accepted as nondegenerate.
    pub nondegenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-10,
            margin: 1e-6,
            eig_real: 1e-9,
            complex_structure: 1e-12,
            rank: 1e-9,
            u_min: 1e-6,
            collar: 1e-8,
            nondegenerate: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tol: Tolerances,
    /// Target number of base grid points per chart.
    pub grid_points: usize,
    /// Unit-sphere directions sampled per base point.
    pub sphere_samples: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol: Tolerances::default(),
            grid_points: 10_000,
            sphere_samples: 32,
            seed: 0,
        }
    }
}
