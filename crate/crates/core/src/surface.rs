//! Discrete reference geometry of the shell base surface.
//!
//! The parameter domain is an axis-aligned rectangle sampled on a tensor
//! product grid. Node `(i, j)` has linear index `i + n1 * j`, with `i` running
//! along `x₁`. Chart derivatives are taken with the same finite-difference
//! operator that the kinematics applies to the unknown fields, so the
//! reference configuration is exactly strain-free on the grid.

use std::path::Path;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::{AlgebraError, Mat3, Rotation, Vec3};

/// Minimum distance between two distinct nodes of an injective chart.
pub const INJECTIVITY_FLOOR: f64 = 1e-12;

/// Default lower bound `a₀` in `det(a_αβ) ≥ a₀²`.
pub const DEFAULT_METRIC_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("grid needs at least 3 nodes per direction and a non-empty rectangle (got {n1}×{n2} on [{x1_lo}, {x1_hi}]×[{x2_lo}, {x2_hi}])")]
    InvalidGrid { n1: usize, n2: usize, x1_lo: f64, x1_hi: f64, x2_lo: f64, x2_hi: f64 },
    #[error("degenerate metric at node {node}: det(a_αβ) = {det:e} < a₀² = {floor:e}")]
    DegenerateMetric { node: usize, det: f64, floor: f64 },
    #[error("chart is not injective: nodes {first} and {second} are {distance:e} apart")]
    NonInjectiveChart { first: usize, second: usize, distance: f64 },
    #[error("chart director d₃ at node {node} is not aligned with the surface normal (d₃·n⁰ = {alignment})")]
    FrameMismatch { node: usize, alignment: f64 },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("tabulated chart: {0}")]
    Tabulated(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Edge of the parameter rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    /// `x₁ = x₁,min`
    West,
    /// `x₁ = x₁,max`
    East,
    /// `x₂ = x₂,min`
    South,
    /// `x₂ = x₂,max`
    North,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::West, Edge::East, Edge::South, Edge::North];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Grid {
    pub fn new(n1: usize, n2: usize, x1: [f64; 2], x2: [f64; 2]) -> Result<Grid, SurfaceError> {
        let g = Grid { n1, n2, x1, x2 };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_square(n: usize) -> Grid {
        Grid { n1: n, n2: n, x1: [0.0, 1.0], x2: [0.0, 1.0] }
    }

    pub fn validate(&self) -> Result<(), SurfaceError> {
        let ok = self.n1 >= 3
            && self.n2 >= 3
            && self.x1[1] > self.x1[0]
            && self.x2[1] > self.x2[0]
            && self.x1.iter().chain(self.x2.iter()).all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SurfaceError::InvalidGrid {
                n1: self.n1,
                n2: self.n2,
                x1_lo: self.x1[0],
                x1_hi: self.x1[1],
                x2_lo: self.x2[0],
                x2_hi: self.x2[1],
            })
        }
    }

    pub fn h1(&self) -> f64 {
        (self.x1[1] - self.x1[0]) / (self.n1 - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        (self.x2[1] - self.x2[0]) / (self.n2 - 1) as f64
    }

    pub fn spacing(&self, alpha: usize) -> f64 {
        if alpha == 0 {
            self.h1()
        } else {
            self.h2()
        }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n1 * j
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.n1, node / self.n1)
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.ij(node);
        [self.x1[0] + i as f64 * self.h1(), self.x2[0] + j as f64 * self.h2()]
    }

    pub fn on_edge(&self, node: usize, edge: Edge) -> bool {
        let (i, j) = self.ij(node);
        match edge {
            Edge::West => i == 0,
            Edge::East => i == self.n1 - 1,
            Edge::South => j == 0,
            Edge::North => j == self.n2 - 1,
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        Edge::ALL.iter().any(|&e| self.on_edge(node, e))
    }

    /// Second-order finite-difference weights for `∂_α` at `node`:
    /// central in the interior, one-sided at the two ends of the grid line.
    pub fn stencil(&self, node: usize, alpha: usize) -> Stencil {
        let (i, j) = self.ij(node);
        let (pos, n, stride) = if alpha == 0 { (i, self.n1, 1) } else { (j, self.n2, self.n1) };
        let inv = 1.0 / (2.0 * self.spacing(alpha));
        let mut s = Stencil::new();
        if pos == 0 {
            s.push((node, -3.0 * inv));
            s.push((node + stride, 4.0 * inv));
            s.push((node + 2 * stride, -inv));
        } else if pos == n - 1 {
            s.push((node, 3.0 * inv));
            s.push((node - stride, -4.0 * inv));
            s.push((node - 2 * stride, inv));
        } else {
            s.push((node - stride, -inv));
            s.push((node + stride, inv));
        }
        s
    }

    /// Trapezoidal weight of `node` in the parameter rectangle (without the area factor).
    pub fn trapezoid_weight(&self, node: usize) -> f64 {
        let (i, j) = self.ij(node);
        let t = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        t(i, self.n1) * t(j, self.n2) * self.h1() * self.h2()
    }

    /// Nodes on `edge`, ordered along the edge.
    pub fn edge_nodes(&self, edge: Edge) -> Vec<usize> {
        match edge {
            Edge::West => (0..self.n2).map(|j| self.index(0, j)).collect(),
            Edge::East => (0..self.n2).map(|j| self.index(self.n1 - 1, j)).collect(),
            Edge::South => (0..self.n1).map(|i| self.index(i, 0)).collect(),
            Edge::North => (0..self.n1).map(|i| self.index(i, self.n2 - 1)).collect(),
        }
    }
}

/// Finite-difference weights as `(node, coefficient)` pairs.
pub type Stencil = ArrayVec<(usize, f64), 3>;

/// Apply `∂_α` to a per-node vector field at one node.
pub fn derivative(grid: &Grid, field: &[Vec3], node: usize, alpha: usize) -> Vec3 {
    grid.stencil(node, alpha)
        .iter()
        .fold(Vec3::ZERO, |acc, &(k, w)| acc + field[k] * w)
}

/// One row of a tabulated chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedNode {
    pub x1: f64,
    pub x2: f64,
    pub y0: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

/// Analytic or tabulated description of the reference surface `y⁰` and
/// structure tensor `Q⁰ = dᵢ⁰ ⊗ eᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart {
    /// `y⁰ = (x₁, x₂, 0)`, `Q⁰ = 1`.
    Flat,
    /// `y⁰ = (ρ cos(x₁/ρ), ρ sin(x₁/ρ), x₂)` with `d₁⁰` along the hoop
    /// direction, `d₂⁰ = e₃` and `d₃⁰` the outward normal.
    Cylinder { radius: f64 },
    /// Per-node values, `x₁` running fastest.
    Tabulated(Vec<TabulatedNode>),
}

impl Chart {
    /// Read a tabulated chart from CSV with columns
    /// `x1,x2,y0x,y0y,y0z,d1x,d1y,d1z,d2x,d2y,d2z,d3x,d3y,d3z`.
    pub fn read_tabulated(path: &Path) -> Result<Chart, SurfaceError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| SurfaceError::Tabulated(format!("{}: {e}", path.display())))?;
        let mut nodes = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| SurfaceError::Tabulated(format!("row {row}: {e}")))?;
            if record.len() != 14 {
                return Err(SurfaceError::Tabulated(format!("row {row}: expected 14 columns, found {}", record.len())));
            }
            let mut v = [0.0; 14];
            for (k, field) in record.iter().enumerate() {
                v[k] = field
                    .parse()
                    .map_err(|e| SurfaceError::Tabulated(format!("row {row}, column {k}: {e}")))?;
            }
            nodes.push(TabulatedNode {
                x1: v[0],
                x2: v[1],
                y0: Vec3::new(v[2], v[3], v[4]),
                d1: Vec3::new(v[5], v[6], v[7]),
                d2: Vec3::new(v[8], v[9], v[10]),
                d3: Vec3::new(v[11], v[12], v[13]),
            });
        }
        Ok(Chart::Tabulated(nodes))
    }

    /// Position and chart directors at every grid node.
    fn sample(&self, grid: &Grid) -> Result<Vec<(Vec3, [Vec3; 3])>, SurfaceError> {
        match self {
            Chart::Flat => Ok((0..grid.len())
                .map(|n| {
                    let [x1, x2] = grid.coords(n);
                    (Vec3::new(x1, x2, 0.0), [Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)])
                })
                .collect()),
            Chart::Cylinder { radius } => {
                let rho = *radius;
                if !(rho > 0.0) || !rho.is_finite() {
                    return Err(SurfaceError::InvalidChart(format!("cylinder radius must be positive, got {rho}")));
                }
                Ok((0..grid.len())
                    .map(|n| {
                        let [x1, x2] = grid.coords(n);
                        let (s, c) = (x1 / rho).sin_cos();
                        (
                            Vec3::new(rho * c, rho * s, x2),
                            [Vec3::new(-s, c, 0.0), Vec3::unit(2), Vec3::new(c, s, 0.0)],
                        )
                    })
                    .collect())
            }
            Chart::Tabulated(rows) => {
                if rows.len() != grid.len() {
                    return Err(SurfaceError::Tabulated(format!(
                        "{} rows for a {}×{} grid",
                        rows.len(),
                        grid.n1,
                        grid.n2
                    )));
                }
                let tol = 1e-9 * (grid.h1().min(grid.h2()));
                rows.iter()
                    .enumerate()
                    .map(|(n, r)| {
                        let [x1, x2] = grid.coords(n);
                        if (r.x1 - x1).abs() > tol || (r.x2 - x2).abs() > tol {
                            return Err(SurfaceError::Tabulated(format!(
                                "row {n} has coordinates ({}, {}), expected ({x1}, {x2})",
                                r.x1, r.x2
                            )));
                        }
                        Ok((r.y0, [r.d1, r.d2, r.d3]))
                    })
                    .collect()
            }
        }
    }
}

/// Reference geometry at one grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeGeometry {
    pub x: [f64; 2],
    pub y0: Vec3,
    /// Covariant basis `a_α = ∂_α y⁰`.
    pub a_cov: [Vec3; 2],
    /// Contravariant basis, `a^α · a_β = δ^α_β`.
    pub a_con: [Vec3; 2],
    pub normal: Vec3,
    pub metric: [[f64; 2]; 2],
    pub det_metric: f64,
    /// Structure tensor `Q⁰` with columns `dᵢ⁰`, `d₃⁰ = n⁰`.
    pub q0: Rotation,
    /// Surface unit tensor `a = a_α ⊗ a^α = 1 − n⁰ ⊗ n⁰`.
    pub proj: Mat3,
    /// `c = d₁⁰ ⊗ d₂⁰ − d₂⁰ ⊗ d₁⁰`.
    pub c: Mat3,
    /// Columns of the initial curvature, `k⁰_α = K⁰ a_α`.
    pub k0: [Vec3; 2],
    pub k0_tensor: Mat3,
    /// `b = −Grad_s n⁰` (tangential part).
    pub b: Mat3,
    /// Quadrature weight including the area factor `√det(a_αβ)`.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct ReferenceSurface {
    pub grid: Grid,
    pub nodes: Vec<NodeGeometry>,
}

impl ReferenceSurface {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn reference_positions(&self) -> Vec<Vec3> {
        self.nodes.iter().map(|n| n.y0).collect()
    }

    /// Length element of `edge` at `node`: trapezoid weight times `‖a_τ‖`.
    pub fn edge_weight(&self, node: usize, edge: Edge) -> f64 {
        let g = &self.grid;
        let (alpha, pos, n) = match edge {
            Edge::West | Edge::East => (1, g.ij(node).1, g.n2),
            Edge::South | Edge::North => (0, g.ij(node).0, g.n1),
        };
        let t = if pos == 0 || pos == n - 1 { 0.5 } else { 1.0 };
        t * g.spacing(alpha) * self.nodes[node].a_cov[alpha].norm()
    }

    pub fn total_area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

/// Build the discrete reference surface with the default metric floor.
pub fn build_reference(chart: &Chart, grid: &Grid) -> Result<ReferenceSurface, SurfaceError> {
    build_reference_with_floor(chart, grid, DEFAULT_METRIC_FLOOR)
}

pub fn build_reference_with_floor(chart: &Chart, grid: &Grid, a0: f64) -> Result<ReferenceSurface, SurfaceError> {
    grid.validate()?;
    let samples = chart.sample(grid)?;
    let y0: Vec<Vec3> = samples.iter().map(|s| s.0).collect();
    check_injective(&y0)?;

    let n = grid.len();
    let mut partial = Vec::with_capacity(n);
    for node in 0..n {
        let a_cov = [derivative(grid, &y0, node, 0), derivative(grid, &y0, node, 1)];
        let metric = [
            [a_cov[0].dot(&a_cov[0]), a_cov[0].dot(&a_cov[1])],
            [a_cov[1].dot(&a_cov[0]), a_cov[1].dot(&a_cov[1])],
        ];
        let det = metric[0][0] * metric[1][1] - metric[0][1] * metric[1][0];
        if !(det >= a0 * a0) {
            return Err(SurfaceError::DegenerateMetric { node, det, floor: a0 * a0 });
        }
        let inv = [[metric[1][1] / det, -metric[0][1] / det], [-metric[1][0] / det, metric[0][0] / det]];
        let a_con = [
            a_cov[0] * inv[0][0] + a_cov[1] * inv[0][1],
            a_cov[0] * inv[1][0] + a_cov[1] * inv[1][1],
        ];
        let normal = a_cov[0].cross(&a_cov[1]).normalized();

        let chart_dirs = samples[node].1;
        let alignment = chart_dirs[2].normalized().dot(&normal);
        if !(alignment > 0.5) {
            return Err(SurfaceError::FrameMismatch { node, alignment });
        }
        let mut d1 = chart_dirs[0] - normal * chart_dirs[0].dot(&normal);
        if d1.norm() < 1e-8 {
            d1 = a_cov[0];
        }
        let d1 = d1.normalized();
        let d2 = normal.cross(&d1);
        let q0 = Rotation::project(&Mat3::from_cols(d1, d2, normal))?;
        partial.push((a_cov, a_con, normal, metric, det, q0));
    }

    let normals: Vec<Vec3> = partial.iter().map(|p| p.2).collect();
    let dirs: [Vec<Vec3>; 3] = [0, 1, 2].map(|k| partial.iter().map(|p| p.5.director(k)).collect());

    let nodes = partial
        .into_iter()
        .enumerate()
        .map(|(node, (a_cov, a_con, normal, metric, det, q0))| {
            let proj = Mat3::IDENTITY - normal.outer(&normal);
            let d = [q0.director(0), q0.director(1), q0.director(2)];
            let c = d[0].outer(&d[1]) - d[1].outer(&d[0]);
            let mut k0 = [Vec3::ZERO; 2];
            let mut b = Mat3::ZERO;
            for alpha in 0..2 {
                let dd = [0, 1, 2].map(|k| derivative(grid, &dirs[k], node, alpha));
                k0[alpha] = q0.apply(&body_curvature(&d, &dd));
                let dn = derivative(grid, &normals, node, alpha);
                b -= (proj * dn).outer(&a_con[alpha]);
            }
            let k0_tensor = k0[0].outer(&a_con[0]) + k0[1].outer(&a_con[1]);
            NodeGeometry {
                x: grid.coords(node),
                y0: y0[node],
                a_cov,
                a_con,
                normal,
                metric,
                det_metric: det,
                q0,
                proj,
                c,
                k0,
                k0_tensor,
                b,
                weight: grid.trapezoid_weight(node) * det.sqrt(),
            }
        })
        .collect();

    Ok(ReferenceSurface { grid: grid.clone(), nodes })
}

/// Body-frame curvature vector `κ` with `Rᵀ∂R = skew(κ)`, from a director
/// triad `d` and its derivative `dd`:
/// `κ = (−d₂·∂d₃, d₁·∂d₃, ½(d₂·∂d₁ − d₁·∂d₂))`.
///
/// The bending components use only `∂d₃`, so they are unchanged by any
/// rotation of `d₁, d₂` about `d₃`.
pub fn body_curvature(d: &[Vec3; 3], dd: &[Vec3; 3]) -> Vec3 {
    Vec3::new(
        -d[1].dot(&dd[2]),
        d[0].dot(&dd[2]),
        0.5 * (d[1].dot(&dd[0]) - d[0].dot(&dd[1])),
    )
}

fn check_injective(points: &[Vec3]) -> Result<(), SurfaceError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if points[b][0] - points[a][0] > INJECTIVITY_FLOOR {
                break;
            }
            let distance = (points[a] - points[b]).norm();
            if distance <= INJECTIVITY_FLOOR {
                return Err(SurfaceError::NonInjectiveChart { first: a.min(b), second: a.max(b), distance });
            }
        }
    }
    Ok(())
}

/// `Grad_s f = ∂_α f ⊗ a^α` at every node.
pub fn surface_gradient(field: &[Vec3], surf: &ReferenceSurface) -> Vec<Mat3> {
    (0..surf.len())
        .map(|node| {
            let g = &surf.nodes[node];
            (0..2).fold(Mat3::ZERO, |acc, alpha| {
                acc + derivative(&surf.grid, field, node, alpha).outer(&g.a_con[alpha])
            })
        })
        .collect()
}

/// Initial structure curvature `K⁰ = axl(∂_α Q⁰ Q⁰ᵀ) ⊗ a^α` at every node.
pub fn initial_curvature(chart: &Chart, grid: &Grid) -> Result<Vec<Mat3>, SurfaceError> {
    Ok(build_reference(chart, grid)?.nodes.into_iter().map(|n| n.k0_tensor).collect())
}
