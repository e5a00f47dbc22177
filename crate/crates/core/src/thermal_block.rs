//! Thermal-block benchmark: 2D heat equation on the unit square with four
//! parametric circular conductivity regions, one Neumann inflow input on
//! the left edge, insulated top/bottom, Dirichlet-zero right edge, and four
//! average-temperature outputs.
//!
//! The discretization is a cell-centered finite-difference/finite-volume
//! Laplacian on `grid_n x grid_n` cells with conservative flux coupling:
//! each interior face carries the arithmetic mean of the adjacent cell
//! conductivities. Faces split affinely over the parameters, so
//! `A(theta) = A_0 + sum_p theta_p A_p` holds exactly and `A(theta)` is
//! symmetric negative definite for every positive conductivity, which
//! makes Galerkin reduction provably stability preserving here.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{AffineLTISystem, ParameterPoint};

pub const CIRCLE_CENTERS: [(f64, f64); 4] =
    [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalBlockConfig {
    /// Cells per axis; the state dimension is `grid_n^2`.
    pub grid_n: usize,
    pub circle_radius: f64,
    /// Conductivity bounds for the parametric variants.
    pub theta_domain: (f64, f64),
    /// Background conductivity `theta_0`.
    pub background: f64,
}

impl Default for ThermalBlockConfig {
    fn default() -> Self {
        ThermalBlockConfig {
            grid_n: 16,
            circle_radius: 0.2,
            theta_domain: (1.0, 10.0),
            background: 1.0,
        }
    }
}

impl ThermalBlockConfig {
    pub fn with_grid(grid_n: usize) -> Self {
        ThermalBlockConfig {
            grid_n,
            ..Default::default()
        }
    }

    pub fn state_dim(&self) -> usize {
        self.grid_n * self.grid_n
    }
}

/// Per-cell region label: 0 = background, 1..=4 = circle index.
pub fn region_labels(cfg: &ThermalBlockConfig) -> Result<Vec<u8>> {
    validate_geometry(cfg)?;
    let n = cfg.grid_n;
    let h = 1.0 / n as f64;
    let r2 = cfg.circle_radius * cfg.circle_radius;
    let mut labels = vec![0u8; n * n];
    for j in 0..n {
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            let y = (j as f64 + 0.5) * h;
            for (p, (cx, cy)) in CIRCLE_CENTERS.iter().enumerate() {
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if d2 <= r2 {
                    labels[j * n + i] = (p + 1) as u8;
                    break;
                }
            }
        }
    }
    for p in 1..=4u8 {
        if !labels.contains(&p) {
            return Err(Error::Geometry {
                reason: format!(
                    "region {p} contains no cell at grid_n = {n}; increase the resolution"
                ),
            });
        }
    }
    Ok(labels)
}

fn validate_geometry(cfg: &ThermalBlockConfig) -> Result<()> {
    if cfg.grid_n < 8 {
        return Err(Error::Config {
            reason: format!("grid_n must be at least 8, got {}", cfg.grid_n),
        });
    }
    let r = cfg.circle_radius;
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Geometry {
            reason: format!("circle radius must be positive, got {r}"),
        });
    }
    for (p, (cx, cy)) in CIRCLE_CENTERS.iter().enumerate() {
        let margin = cx.min(*cy).min(1.0 - cx).min(1.0 - cy);
        if r >= margin {
            return Err(Error::Geometry {
                reason: format!("circle {} touches the boundary (radius {r})", p + 1),
            });
        }
    }
    for (p, (ax, ay)) in CIRCLE_CENTERS.iter().enumerate() {
        for (q, (bx, by)) in CIRCLE_CENTERS.iter().enumerate().skip(p + 1) {
            let dist = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            if 2.0 * r >= dist {
                return Err(Error::Geometry {
                    reason: format!(
                        "circles {} and {} overlap or touch (radius {r})",
                        p + 1,
                        q + 1
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Builds the affine-parametric benchmark system: `E = I`, five affine
/// diffusion terms, a single inflow input with weight `1/h` on the left
/// boundary cells, and four region-averaging output rows.
pub fn build(cfg: &ThermalBlockConfig) -> Result<AffineLTISystem> {
    let labels = region_labels(cfg)?;
    let n = cfg.grid_n;
    let dim = n * n;
    let h = 1.0 / n as f64;
    let w = 1.0 / (h * h);

    let mut a_terms = vec![DMatrix::zeros(dim, dim); 5];
    let idx = |i: usize, j: usize| j * n + i;
    // Each face couples its two cells with the mean conductivity; the mean
    // splits the face weight evenly over the two region terms. Background
    // (label 0) contributes with conductivity theta_0 into A_0.
    let add = |term: usize, scale: f64, a: usize, b: Option<usize>, m: &mut Vec<DMatrix<f64>>| {
        let weight = if term == 0 {
            scale * cfg.background
        } else {
            scale
        };
        m[term][(a, a)] -= weight;
        if let Some(b) = b {
            m[term][(b, b)] -= weight;
            m[term][(a, b)] += weight;
            m[term][(b, a)] += weight;
        }
    };
    for j in 0..n {
        for i in 0..n {
            let cell = idx(i, j);
            let label = labels[cell] as usize;
            // Vertical interior face to the right neighbor.
            if i + 1 < n {
                let nb = idx(i + 1, j);
                let nb_label = labels[nb] as usize;
                add(label, 0.5 * w, cell, Some(nb), &mut a_terms);
                add(nb_label, 0.5 * w, cell, Some(nb), &mut a_terms);
            } else {
                // Dirichlet face at x = 1, boundary value at distance h/2.
                add(label, 2.0 * w, cell, None, &mut a_terms);
            }
            // Horizontal interior face to the top neighbor; the remaining
            // boundary faces (left, top, bottom) are Neumann and add nothing.
            if j + 1 < n {
                let nb = idx(i, j + 1);
                let nb_label = labels[nb] as usize;
                add(label, 0.5 * w, cell, Some(nb), &mut a_terms);
                add(nb_label, 0.5 * w, cell, Some(nb), &mut a_terms);
            }
        }
    }

    let mut b = DMatrix::zeros(dim, 1);
    for j in 0..n {
        b[(idx(0, j), 0)] = 1.0 / h;
    }

    let mut c = DMatrix::zeros(4, dim);
    for p in 1..=4u8 {
        let count = labels.iter().filter(|&&l| l == p).count() as f64;
        for (cell, &l) in labels.iter().enumerate() {
            if l == p {
                c[((p - 1) as usize, cell)] = 1.0 / count;
            }
        }
    }

    AffineLTISystem::new(DMatrix::identity(dim, dim), a_terms, b, c)
}

/// Parameter selector for the three benchmark parameterizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSpec {
    /// The fixed operating point `theta = sqrt(10) * (5, 5/2, 5/3, 5/4)`.
    Fixed,
    /// One scalar `s` in `[1, 10]` scaling `(5, 5/2, 5/3, 5/4)`.
    Single(f64),
    /// All four conductivities free in `[1, 10]^4`.
    Multi([f64; 4]),
}

/// Scaling pattern shared by the fixed and single-parameter variants.
pub const VARIANT_PATTERN: [f64; 4] = [5.0, 5.0 / 2.0, 5.0 / 3.0, 5.0 / 4.0];

pub fn variant_theta(spec: ThetaSpec) -> ParameterPoint {
    match spec {
        ThetaSpec::Fixed => variant_theta(ThetaSpec::Single(10f64.sqrt())),
        ThetaSpec::Single(s) => ParameterPoint(VARIANT_PATTERN.iter().map(|p| p * s).collect()),
        ThetaSpec::Multi(t) => ParameterPoint(t.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dimensions_at_default_grid() {
        let sys = build(&ThermalBlockConfig::with_grid(16)).unwrap();
        assert_eq!(sys.state_dim(), 256);
        assert_eq!(sys.input_dim(), 1);
        assert_eq!(sys.output_dim(), 4);
        assert_eq!(sys.param_dim(), 4);
    }

    #[test]
    fn labels_partition_cells() {
        let cfg = ThermalBlockConfig::with_grid(16);
        let labels = region_labels(&cfg).unwrap();
        assert_eq!(labels.len(), 256);
        assert!(labels.iter().all(|&l| l <= 4));
        for p in 0..=4u8 {
            assert!(labels.contains(&p));
        }
    }

    #[test]
    fn dissipative_at_domain_corners() {
        let sys = build(&ThermalBlockConfig::with_grid(16)).unwrap();
        for theta in [[1.0; 4], [10.0; 4]] {
            let a = sys.assemble(&ParameterPoint(theta.to_vec())).unwrap();
            let sym = (&a + a.transpose()) * 0.5;
            let max_eig = sym.symmetric_eigen().eigenvalues.max();
            assert!(max_eig < 0.0, "A({theta:?}) not dissipative: {max_eig}");
        }
    }

    #[test]
    fn output_rows_average_to_one() {
        let sys = build(&ThermalBlockConfig::with_grid(16)).unwrap();
        let ones = nalgebra::DVector::from_element(sys.state_dim(), 1.0);
        let y = sys.output_map() * ones;
        for q in 0..4 {
            assert_relative_eq!(y[q], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn geometry_rejections() {
        let overlap = ThermalBlockConfig {
            circle_radius: 0.25,
            ..ThermalBlockConfig::with_grid(16)
        };
        assert!(matches!(build(&overlap), Err(Error::Geometry { .. })));
        let empty = ThermalBlockConfig {
            circle_radius: 0.01,
            ..ThermalBlockConfig::with_grid(8)
        };
        assert!(matches!(build(&empty), Err(Error::Geometry { .. })));
        assert!(build(&ThermalBlockConfig::with_grid(7)).is_err());
    }

    #[test]
    fn variant_values() {
        let fixed = variant_theta(ThetaSpec::Fixed);
        assert_relative_eq!(fixed.0[0], 5.0 * 10f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(fixed.0[0], 15.8113883, epsilon = 1e-6);
        let single = variant_theta(ThetaSpec::Single(1.0));
        assert_relative_eq!(single.0[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(single.0[1], 2.5, epsilon = 1e-12);
        assert_relative_eq!(single.0[2], 5.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(single.0[3], 1.25, epsilon = 1e-12);
        let multi = variant_theta(ThetaSpec::Multi([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(multi.0, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn input_hits_left_column_only() {
        let cfg = ThermalBlockConfig::with_grid(16);
        let sys = build(&cfg).unwrap();
        let h = 1.0 / 16.0;
        for j in 0..16 {
            assert_eq!(sys.input_map()[(j * 16, 0)], 1.0 / h);
        }
        let nnz = sys.input_map().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nnz, 16);
    }
}
