//! Coordinate charts and sampling grids.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("chart dimension {0} must be even and at least 2")]
    Dimension(usize),
    #[error("domain has {got} intervals for dimension {dim}")]
    DomainLength { dim: usize, got: usize },
    #[error("empty interval on axis {0}")]
    EmptyInterval(usize),
    #[error("has_z requires x1 = 0 in the interior of the x1 interval")]
    ZOutside,
}

/// A box chart; the hypersurface, when present, is `{x1 = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BChart {
    pub dim: usize,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    #[serde(default = "yes")]
    pub has_z: bool,
}

fn yes() -> bool {
    true
}

impl BChart {
    pub fn new(domain: Vec<[f64; 2]>, periodic: Vec<bool>, has_z: bool) -> Result<Self, ChartError> {
        let c = BChart {
            dim: domain.len(),
            domain,
            periodic,
            has_z,
        };
        c.validate()?;
        Ok(c)
    }

    /// The box `[-h, h]^dim`, non-periodic.
    pub fn cube(dim: usize, half: f64, has_z: bool) -> Self {
        BChart::new(vec![[-half, half]; dim], vec![false; dim], has_z).expect("valid cube")
    }

    /// Periodic unit torus chart `[-1/2, 1/2)^dim`.
    pub fn torus(dim: usize, has_z: bool) -> Self {
        BChart::new(vec![[-0.5, 0.5]; dim], vec![true; dim], has_z).expect("valid torus")
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        if self.dim < 2 || self.dim % 2 != 0 {
            return Err(ChartError::Dimension(self.dim));
        }
        if self.domain.len() != self.dim {
            return Err(ChartError::DomainLength { dim: self.dim, got: self.domain.len() });
        }
        for (k, [lo, hi]) in self.domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(ChartError::EmptyInterval(k));
            }
        }
        if self.has_z && !(self.domain[0][0] < 0.0 && 0.0 < self.domain[0][1]) {
            return Err(ChartError::ZOutside);
        }
        Ok(())
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic.get(axis).copied().unwrap_or(false)
    }

    /// Grid with about `target` points in total.
    pub fn grid(&self, target: usize) -> Grid {
        let per_axis = ((target.max(1) as f64).powf(1.0 / self.dim as f64).ceil() as usize).max(2);
        self.grid_per_axis(per_axis)
    }

    pub fn grid_per_axis(&self, per_axis: usize) -> Grid {
        let axes: Vec<Vec<f64>> = (0..self.dim)
            .map(|k| {
                let [lo, hi] = self.domain[k];
                let mut v: Vec<f64> = if self.is_periodic(k) {
                    (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / per_axis as f64).collect()
                } else {
                    (0..per_axis)
                        .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                        .collect()
                };
                if k == 0 && self.has_z && !v.contains(&0.0) {
                    v.push(0.0);
                    v.sort_by(f64::total_cmp);
                }
                v
            })
            .collect();
        Grid::from_axes(axes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub per_axis: Vec<usize>,
    pub total: usize,
    pub includes_z: bool,
}

/// Cartesian product of per-axis sample values.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Self {
        Grid { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].len();
            p[k] = self.axes[k][idx % n];
            idx /= n;
        }
        p
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Points of the grid lying on `{x1 = 0}`.
    pub fn z_points(&self) -> Vec<Vec<f64>> {
        let mut axes = self.axes.clone();
        axes[0] = vec![0.0];
        Grid::from_axes(axes).points()
    }

    /// Same grid with the first axis replaced.
    pub fn with_first_axis(&self, values: Vec<f64>) -> Grid {
        let mut axes = self.axes.clone();
        axes[0] = values;
        Grid::from_axes(axes)
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            per_axis: self.axes.iter().map(Vec::len).collect(),
            total: self.len(),
            includes_z: self.axes.first().is_some_and(|a| a.contains(&0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_grid_contains_z() {
        let g = BChart::torus(4, true).grid(10_000);
        assert_eq!(g.len(), 10_000);
        assert!(g.spec().includes_z);
        assert_eq!(g.z_points().len(), 1000);
    }

    #[test]
    fn z_must_be_interior() {
        assert_eq!(
            BChart::new(vec![[0.0, 1.0], [0.0, 1.0]], vec![], true),
            Err(ChartError::ZOutside)
        );
        assert!(matches!(BChart::new(vec![[0.0, 1.0]; 3], vec![], false), Err(ChartError::Dimension(3))));
    }

    #[test]
    fn odd_point_counts_get_a_zero_line() {
        let g = BChart::cube(2, 1.0, true).grid_per_axis(4);
        assert!(g.axis(0).contains(&0.0));
        assert_eq!(g.axis(0).len(), 5);
    }
}
