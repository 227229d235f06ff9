//! Discrete total energy, its gradient, and a limited-memory quasi-Newton
//! minimizer on the product of positions and rotations.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::{exp_so3, orthogonality_residual, Mat3, Rotation, Vec3};
use crate::constitutive::{
    drill_free_density, drill_free_partials, drill_free_strain_gradient, jacobi_eigen, quadratic_density,
    quadratic_gradient, resultants_with, EngineeringConstants, MaterialModel,
};
use crate::kinematics::{
    alt_from_spatial, node_strain, strain_measures, Configuration, DirectorFields, NodeJet, SpatialJet, StrainState,
};
use crate::surface::{Edge, NodeGeometry, ReferenceSurface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no Dirichlet edge: the problem admits rigid motions (set allow_null_space to solve anyway)")]
    NullSpaceDetected,
    #[error("{0} must be positive and finite")]
    InvalidOption(&'static str),
    #[error("configuration has {found} nodes, surface has {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

/// Strain-energy density used by the functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EnergyModel {
    /// Quadratic form in `(E^e, K^e)`.
    Quadratic(MaterialModel),
    /// Drill-free energy in `(𝓔, γ, Ψ)`, evaluated from `F` and `d₃`.
    FullDrillFree(EngineeringConstants),
}

impl EnergyModel {
    fn density(&self, geom: &NodeGeometry, r: &Rotation, jet: &NodeJet) -> f64 {
        match self {
            EnergyModel::Quadratic(m) => {
                let (s, _) = node_strain(geom, r, jet);
                quadratic_density(m, &geom.normal, &s.e, &s.k)
            }
            EnergyModel::FullDrillFree(k) => drill_free_density(k, &alt_from_spatial(geom, &SpatialJet::new(geom, r, jet))),
        }
    }

    /// Resultants `N = Q ∂W/∂E^e`, `M = Q ∂W/∂K^e` at every node.
    pub fn resultants(&self, state: &StrainState, cfg: &Configuration, surf: &ReferenceSurface) -> Vec<(Mat3, Mat3)> {
        match self {
            EnergyModel::Quadratic(m) => {
                resultants_with(state, cfg, surf, |node, s| quadratic_gradient(m, &surf.nodes[node].normal, &s.e, &s.k))
            }
            EnergyModel::FullDrillFree(k) => {
                resultants_with(state, cfg, surf, |node, s| drill_free_strain_gradient(k, &surf.nodes[node], s))
            }
        }
    }
}

/// Partial derivatives of the nodal density with respect to the grid jet.
struct NodePartials {
    density: f64,
    /// `∂W/∂(∂_α y)`
    dp: [Vec3; 2],
    /// `∂W/∂dₖ`
    dd: [Vec3; 3],
    /// `∂W/∂(∂_α dₖ)`
    dv: [[Vec3; 3]; 2],
}

fn quadratic_partials(m: &MaterialModel, geom: &NodeGeometry, r: &Rotation, jet: &NodeJet) -> NodePartials {
    let (strain, _) = node_strain(geom, r, jet);
    let density = quadratic_density(m, &geom.normal, &strain.e, &strain.k);
    let (se, sk) = quadratic_gradient(m, &geom.normal, &strain.e, &strain.k);
    let q0t = geom.q0.matrix().transpose();
    let rm = r.matrix();
    let d = [r.director(0), r.director(1), r.director(2)];
    let mut out = NodePartials { density, dp: [Vec3::ZERO; 2], dd: [Vec3::ZERO; 3], dv: [[Vec3::ZERO; 3]; 2] };
    for alpha in 0..2 {
        let e = q0t * (se * geom.a_con[alpha]);
        out.dp[alpha] = *rm * e;
        for k in 0..3 {
            out.dd[k] += jet.p[alpha] * e[k];
        }
        let m = q0t * (sk * geom.a_con[alpha]);
        let v = &jet.dd[alpha];
        out.dv[alpha][2] = d[0] * m[1] - d[1] * m[0];
        out.dv[alpha][0] = d[1] * (0.5 * m[2]);
        out.dv[alpha][1] = d[0] * (-0.5 * m[2]);
        out.dd[0] += v[2] * m[1] - v[1] * (0.5 * m[2]);
        out.dd[1] += v[0] * (0.5 * m[2]) - v[2] * m[0];
    }
    out
}

fn drill_free_node_partials(k: &EngineeringConstants, geom: &NodeGeometry, r: &Rotation, jet: &NodeJet) -> NodePartials {
    let s = SpatialJet::new(geom, r, jet);
    let alt = alt_from_spatial(geom, &s);
    let density = drill_free_density(k, &alt);
    let (s_eps, s_gamma, s_psi) = drill_free_partials(k, &alt);
    let t = s_eps + s_psi * geom.b.transpose();
    let d_f = s.f * t.sym() + s.d3.outer(&s_gamma) + s.grad_d3 * s_psi.transpose();
    let d_g = s.f * s_psi;
    let mut out = NodePartials { density, dp: [Vec3::ZERO; 2], dd: [Vec3::ZERO; 3], dv: [[Vec3::ZERO; 3]; 2] };
    out.dd[2] = s.f * s_gamma;
    for alpha in 0..2 {
        out.dp[alpha] = d_f * geom.a_con[alpha];
        let rr = d_g * geom.a_con[alpha];
        let v = jet.dd[alpha][2];
        let (d3r, d3v) = (s.d3.dot(&rr), s.d3.dot(&v));
        out.dv[alpha][2] = rr - s.d3 * d3r;
        out.dd[2] -= v * d3r + rr * d3v;
    }
    out
}

// ---------------------------------------------------------------------------
// Loads and boundary conditions

/// Dead loads: surface force `f`, director couple `c̃` (potential `c̃·d₃`),
/// and per-edge force `n*` and director couple `m̃*` on traction edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub force: Vec<Vec3>,
    pub director_couple: Vec<Vec3>,
    pub edge_force: [Vec3; 4],
    pub edge_director_couple: [Vec3; 4],
}

impl LoadSpec {
    pub fn none(n: usize) -> LoadSpec {
        LoadSpec::uniform(n, Vec3::ZERO, Vec3::ZERO)
    }

    pub fn uniform(n: usize, force: Vec3, director_couple: Vec3) -> LoadSpec {
        LoadSpec {
            force: vec![force; n],
            director_couple: vec![director_couple; n],
            edge_force: [Vec3::ZERO; 4],
            edge_director_couple: [Vec3::ZERO; 4],
        }
    }

    /// Loads seen from a frame rotated by `rbar`.
    pub fn rotated(&self, rbar: &Rotation) -> LoadSpec {
        let rot = |v: &Vec3| rbar.apply(v);
        LoadSpec {
            force: self.force.iter().map(rot).collect(),
            director_couple: self.director_couple.iter().map(rot).collect(),
            edge_force: self.edge_force.map(|v| rot(&v)),
            edge_director_couple: self.edge_director_couple.map(|v| rot(&v)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeCondition {
    Traction,
    /// `y* = R̄ y⁰ + t`, `R* = R̄ Q⁰` with `R̄ = exp(skew(rotation))`.
    Dirichlet { rotation: Vec3, translation: Vec3 },
}

impl EdgeCondition {
    pub const CLAMPED: EdgeCondition = EdgeCondition::Dirichlet { rotation: Vec3::ZERO, translation: Vec3::ZERO };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    /// West, east, south, north.
    pub edges: [EdgeCondition; 4],
    pub fixed: Vec<bool>,
    pub y_star: Vec<Vec3>,
    pub r_star: Vec<Rotation>,
}

fn edge_slot(edge: Edge) -> usize {
    Edge::ALL.iter().position(|e| *e == edge).expect("edge listed in Edge::ALL")
}

impl BoundaryConditions {
    pub fn new(surf: &ReferenceSurface, edges: [EdgeCondition; 4]) -> BoundaryConditions {
        let n = surf.len();
        let mut bc = BoundaryConditions {
            edges,
            fixed: vec![false; n],
            y_star: surf.reference_positions(),
            r_star: surf.nodes.iter().map(|g| g.q0).collect(),
        };
        for (slot, edge) in Edge::ALL.iter().enumerate() {
            if let EdgeCondition::Dirichlet { rotation, translation } = edges[slot] {
                let rbar = exp_so3(&rotation);
                for node in surf.grid.edge_nodes(*edge) {
                    bc.fixed[node] = true;
                    bc.y_star[node] = rbar.apply(&surf.nodes[node].y0) + translation;
                    bc.r_star[node] = rbar.compose(&surf.nodes[node].q0);
                }
            }
        }
        bc
    }

    pub fn free(surf: &ReferenceSurface) -> BoundaryConditions {
        BoundaryConditions::new(surf, [EdgeCondition::Traction; 4])
    }

    pub fn clamped(surf: &ReferenceSurface, edges: &[Edge]) -> BoundaryConditions {
        let mut conds = [EdgeCondition::Traction; 4];
        for e in edges {
            conds[edge_slot(*e)] = EdgeCondition::CLAMPED;
        }
        BoundaryConditions::new(surf, conds)
    }

    pub fn has_dirichlet(&self) -> bool {
        self.fixed.iter().any(|&f| f)
    }

    pub fn is_traction(&self, edge: Edge) -> bool {
        matches!(self.edges[edge_slot(edge)], EdgeCondition::Traction)
    }

    /// Overwrite the prescribed values on fixed nodes.
    pub fn impose(&self, cfg: &Configuration) -> Configuration {
        let mut out = cfg.clone();
        for node in 0..out.len() {
            if self.fixed[node] {
                out.y[node] = self.y_star[node];
                out.r[node] = self.r_star[node];
            }
        }
        out
    }

    /// Boundary data seen from a frame rotated by `rbar`.
    pub fn rotated(&self, rbar: &Rotation) -> BoundaryConditions {
        let edges = self.edges.map(|e| match e {
            EdgeCondition::Traction => e,
            EdgeCondition::Dirichlet { rotation, translation } => EdgeCondition::Dirichlet {
                rotation: crate::algebra3::log_so3_unchecked(&rbar.compose(&exp_so3(&rotation))),
                translation: rbar.apply(&translation),
            },
        });
        BoundaryConditions {
            edges,
            fixed: self.fixed.clone(),
            y_star: self.y_star.iter().map(|y| rbar.apply(y)).collect(),
            r_star: self.r_star.iter().map(|r| rbar.compose(r)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Functional and gradient

/// Per-node gradient: `g_y = ∂I/∂y` and `g_w`, the derivative with respect to
/// a left rotation increment `R ← exp(skew w) R` at `w = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub g_y: Vec<Vec3>,
    pub g_w: Vec<Vec3>,
}

impl Gradient {
    pub fn zeros(n: usize) -> Gradient {
        Gradient { g_y: vec![Vec3::ZERO; n], g_w: vec![Vec3::ZERO; n] }
    }

    pub fn dot(&self, o: &Gradient) -> f64 {
        let a: f64 = self.g_y.iter().zip(&o.g_y).map(|(x, y)| x.dot(y)).sum();
        let b: f64 = self.g_w.iter().zip(&o.g_w).map(|(x, y)| x.dot(y)).sum();
        a + b
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Gradient {
        Gradient { g_y: self.g_y.iter().map(|v| *v * s).collect(), g_w: self.g_w.iter().map(|v| *v * s).collect() }
    }

    fn axpy(&mut self, a: f64, x: &Gradient) {
        for (s, v) in self.g_y.iter_mut().zip(&x.g_y) {
            *s += *v * a;
        }
        for (s, v) in self.g_w.iter_mut().zip(&x.g_w) {
            *s += *v * a;
        }
    }

    fn difference(&self, o: &Gradient) -> Gradient {
        let mut d = self.clone();
        d.axpy(-1.0, o);
        d
    }
}

/// `cfg ⊕ t·δ`: `y + tδ_y`, `R ← exp(t skew δ_w) R`.
pub fn retract(cfg: &Configuration, dir: &Gradient, t: f64) -> Configuration {
    Configuration {
        y: cfg.y.iter().zip(&dir.g_y).map(|(y, d)| *y + *d * t).collect(),
        r: cfg.r.iter().zip(&dir.g_w).map(|(r, d)| if *d == Vec3::ZERO { *r } else { exp_so3(&(*d * t)).compose(r) }).collect(),
    }
}

/// Load potential `Λ(y, R)`.
pub fn load_potential(cfg: &Configuration, surf: &ReferenceSurface, loads: &LoadSpec, bc: &BoundaryConditions) -> f64 {
    let mut total = 0.0;
    for (node, g) in surf.nodes.iter().enumerate() {
        let u = cfg.y[node] - g.y0;
        let d3 = cfg.r[node].director(2);
        total += g.weight * (loads.force[node].dot(&u) + loads.director_couple[node].dot(&d3));
    }
    for (slot, edge) in Edge::ALL.iter().enumerate() {
        if !bc.is_traction(*edge) {
            continue;
        }
        for node in surf.grid.edge_nodes(*edge) {
            let u = cfg.y[node] - surf.nodes[node].y0;
            let d3 = cfg.r[node].director(2);
            total += surf.edge_weight(node, *edge) * (loads.edge_force[slot].dot(&u) + loads.edge_director_couple[slot].dot(&d3));
        }
    }
    total
}

/// `∫ W dS` by nodal quadrature, summed in node order.
pub fn strain_energy(cfg: &Configuration, surf: &ReferenceSurface, model: &EnergyModel) -> f64 {
    let dirs = DirectorFields::new(cfg);
    let density: Vec<f64> = (0..surf.len())
        .into_par_iter()
        .map(|node| model.density(&surf.nodes[node], &cfg.r[node], &dirs.jet(cfg, surf, node)))
        .collect();
    density.iter().zip(&surf.nodes).map(|(w, g)| w * g.weight).sum()
}

/// Discrete functional `I = ∫ W dS − Λ`.
pub fn total_energy(
    cfg: &Configuration,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
) -> f64 {
    strain_energy(cfg, surf, model) - load_potential(cfg, surf, loads, bc)
}

/// Functional value and gradient in one pass.
pub fn energy_and_gradient(
    cfg: &Configuration,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
) -> (f64, Gradient) {
    let n = surf.len();
    let grid = &surf.grid;
    let dirs = DirectorFields::new(cfg);
    let partials: Vec<NodePartials> = (0..n)
        .into_par_iter()
        .map(|node| {
            let geom = &surf.nodes[node];
            let jet = dirs.jet(cfg, surf, node);
            match model {
                EnergyModel::Quadratic(m) => quadratic_partials(m, geom, &cfg.r[node], &jet),
                EnergyModel::FullDrillFree(k) => drill_free_node_partials(k, geom, &cfg.r[node], &jet),
            }
        })
        .collect();

    let mut g = Gradient::zeros(n);
    // Adjoints of the director fields.
    let mut adj = [vec![Vec3::ZERO; n], vec![Vec3::ZERO; n], vec![Vec3::ZERO; n]];
    let mut strain = 0.0;
    for (node, p) in partials.iter().enumerate() {
        let w = surf.nodes[node].weight;
        strain += p.density * w;
        for k in 0..3 {
            adj[k][node] += p.dd[k] * w;
        }
        for alpha in 0..2 {
            for (m, coef) in grid.stencil(node, alpha) {
                let s = w * coef;
                g.g_y[m] += p.dp[alpha] * s;
                for k in 0..3 {
                    adj[k][m] += p.dv[alpha][k] * s;
                }
            }
        }
    }

    for (node, geom) in surf.nodes.iter().enumerate() {
        g.g_y[node] -= loads.force[node] * geom.weight;
        adj[2][node] -= loads.director_couple[node] * geom.weight;
    }
    for (slot, edge) in Edge::ALL.iter().enumerate() {
        if !bc.is_traction(*edge) {
            continue;
        }
        for node in grid.edge_nodes(*edge) {
            let ew = surf.edge_weight(node, *edge);
            g.g_y[node] -= loads.edge_force[slot] * ew;
            adj[2][node] -= loads.edge_director_couple[slot] * ew;
        }
    }

    for node in 0..n {
        if bc.fixed[node] {
            g.g_y[node] = Vec3::ZERO;
            continue;
        }
        let mut gw = Vec3::ZERO;
        for k in 0..3 {
            gw += dirs.d[k][node].cross(&adj[k][node]);
        }
        g.g_w[node] = gw;
    }
    (strain - load_potential(cfg, surf, loads, bc), g)
}

pub fn energy_gradient(
    cfg: &Configuration,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
) -> Gradient {
    energy_and_gradient(cfg, surf, model, loads, bc).1
}

// ---------------------------------------------------------------------------
// Preconditioner

/// Spacing of the node colouring used to probe the Hessian: the gradient at a
/// node depends on nodes at most four grid steps away.
const COLOR_PERIOD: usize = 5;

/// Block eigenvalues below this fraction of the largest one are raised to
/// it, which keeps drill null directions from dominating the step.
pub const EIGENVALUE_FLOOR: f64 = 1e-6;

/// Inverses of the 6×6 nodal diagonal blocks of the Hessian, probed by
/// central differences of the gradient with a coloured node pattern.
#[derive(Clone, Debug)]
pub struct BlockPreconditioner {
    blocks: Vec<[[f64; 6]; 6]>,
}

impl BlockPreconditioner {
    pub fn identity(n: usize) -> BlockPreconditioner {
        let mut b = [[0.0; 6]; 6];
        for (i, row) in b.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        BlockPreconditioner { blocks: vec![b; n] }
    }

    pub fn probe(
        cfg: &Configuration,
        surf: &ReferenceSurface,
        model: &EnergyModel,
        loads: &LoadSpec,
        bc: &BoundaryConditions,
    ) -> BlockPreconditioner {
        let n = surf.len();
        let grid = &surf.grid;
        let mut hess = vec![[[0.0; 6]; 6]; n];
        let h = 1e-6;
        for ci in 0..COLOR_PERIOD {
            for cj in 0..COLOR_PERIOD {
                let members: Vec<usize> = (0..n)
                    .filter(|&node| {
                        let (i, j) = grid.ij(node);
                        i % COLOR_PERIOD == ci && j % COLOR_PERIOD == cj && !bc.fixed[node]
                    })
                    .collect();
                if members.is_empty() {
                    continue;
                }
                for dof in 0..6 {
                    let mut dir = Gradient::zeros(n);
                    for &node in &members {
                        if dof < 3 {
                            dir.g_y[node][dof] = 1.0;
                        } else {
                            dir.g_w[node][dof - 3] = 1.0;
                        }
                    }
                    let gp = energy_gradient(&retract(cfg, &dir, h), surf, model, loads, bc);
                    let gm = energy_gradient(&retract(cfg, &dir, -h), surf, model, loads, bc);
                    for &node in &members {
                        for a in 0..3 {
                            hess[node][a][dof] = (gp.g_y[node][a] - gm.g_y[node][a]) / (2.0 * h);
                            hess[node][a + 3][dof] = (gp.g_w[node][a] - gm.g_w[node][a]) / (2.0 * h);
                        }
                    }
                }
            }
        }
        let decomposed: Vec<([f64; 6], [[f64; 6]; 6])> = hess
            .iter()
            .map(|b| {
                let mut s = *b;
                for i in 0..6 {
                    for j in 0..i {
                        let avg = 0.5 * (s[i][j] + s[j][i]);
                        s[i][j] = avg;
                        s[j][i] = avg;
                    }
                }
                jacobi_eigen(s)
            })
            .collect();
        let largest = decomposed.iter().flat_map(|(v, _)| v.iter().map(|x| x.abs())).fold(0.0f64, f64::max);
        if largest == 0.0 {
            return BlockPreconditioner::identity(n);
        }
        let floor = EIGENVALUE_FLOOR * largest;
        let blocks = decomposed
            .iter()
            .map(|(vals, vecs)| {
                let mut inv = [[0.0; 6]; 6];
                for k in 0..6 {
                    let lambda = vals[k].abs().max(floor);
                    for i in 0..6 {
                        for j in 0..6 {
                            inv[i][j] += vecs[i][k] * vecs[j][k] / lambda;
                        }
                    }
                }
                inv
            })
            .collect();
        BlockPreconditioner { blocks }
    }

    fn apply(&self, g: &Gradient) -> Gradient {
        let mut out = Gradient::zeros(g.g_y.len());
        for (node, b) in self.blocks.iter().enumerate() {
            let x = [g.g_y[node][0], g.g_y[node][1], g.g_y[node][2], g.g_w[node][0], g.g_w[node][1], g.g_w[node][2]];
            for a in 0..6 {
                let v: f64 = (0..6).map(|c| b[a][c] * x[c]).sum();
                if a < 3 {
                    out.g_y[node][a] = v;
                } else {
                    out.g_w[node][a - 3] = v;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Minimizer

/// Which strain-energy density a case is solved with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Quadratic energy with drill-active coefficients from engineering constants.
    #[default]
    QuadraticDrillActive,
    /// Quadratic energy with drill-free coefficients from engineering constants.
    QuadraticDrillFree,
    /// Drill-free energy in the alternative measures.
    FullDrillFree,
    /// Quadratic energy with user-supplied coefficients.
    QuadraticCustom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub energy_model: ModelKind,
    pub max_iter: usize,
    /// Stop when `‖g‖ ≤ grad_tol · ‖g₀‖`.
    pub grad_tol: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub memory: usize,
    pub max_backtracks: usize,
    pub precondition: bool,
    pub allow_null_space: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            energy_model: ModelKind::default(),
            max_iter: 20_000,
            grad_tol: 1e-8,
            backtrack: 0.5,
            armijo: 1e-4,
            memory: 10,
            max_backtracks: 60,
            precondition: true,
            allow_null_space: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.grad_tol) {
            return Err(SolverError::InvalidOption("grad_tol"));
        }
        if !(positive(self.backtrack) && self.backtrack < 1.0) {
            return Err(SolverError::InvalidOption("backtrack"));
        }
        if !(positive(self.armijo) && self.armijo < 1.0) {
            return Err(SolverError::InvalidOption("armijo"));
        }
        if self.memory == 0 {
            return Err(SolverError::InvalidOption("memory"));
        }
        if self.max_backtracks == 0 {
            return Err(SolverError::InvalidOption("max_backtracks"));
        }
        Ok(())
    }
}

/// Relative size of the rounding noise assumed for the functional.
pub const NOISE_FACTOR: f64 = 1e-12;

/// An iterate is also accepted when the preconditioned step it would take
/// moves no node by more than this fraction of the surface diameter and
/// turns no director by more than this many radians.
pub const STATIONARY_STEP: f64 = 1e-14;

fn diameter(surf: &ReferenceSurface) -> f64 {
    let mut lo = Vec3([f64::INFINITY; 3]);
    let mut hi = Vec3([f64::NEG_INFINITY; 3]);
    for g in &surf.nodes {
        for k in 0..3 {
            lo[k] = lo[k].min(g.y0[k]);
            hi[k] = hi[k].max(g.y0[k]);
        }
    }
    (hi - lo).norm()
}

fn step_resolved(precond: &BlockPreconditioner, g: &Gradient, length: f64) -> bool {
    let step = precond.apply(g);
    step.g_y.iter().all(|d| d.norm() <= STATIONARY_STEP * length) && step.g_w.iter().all(|d| d.norm() <= STATIONARY_STEP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
    LineSearchFailure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub config: Configuration,
    /// Functional value after every accepted step, starting with the initial one.
    pub energy_history: Vec<f64>,
    pub initial_gradient_norm: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub strain: StrainState,
    pub resultants: Vec<(Mat3, Mat3)>,
    /// Value of `I` at the final configuration.
    pub functional: f64,
    pub strain_energy: f64,
    /// Largest `‖RᵀR − 1‖` seen at any node over all iterates.
    pub max_orthogonality_residual: f64,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn max_orthogonality(cfg: &Configuration) -> f64 {
    cfg.r.iter().map(|r| orthogonality_residual(r.matrix())).fold(0.0, f64::max)
}

/// Limited-memory BFGS with backtracking Armijo line search. Positions are
/// updated additively, rotations by left exponential increments; curvature
/// pairs are reused without transport.
pub fn minimize(
    cfg0: &Configuration,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
    opts: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    if cfg0.len() != surf.len() || cfg0.r.len() != surf.len() {
        return Err(SolverError::SizeMismatch { expected: surf.len(), found: cfg0.len() });
    }
    if !bc.has_dirichlet() && !opts.allow_null_space {
        return Err(SolverError::NullSpaceDetected);
    }
    let mut x = bc.impose(cfg0);
    let (mut f, mut g) = energy_and_gradient(&x, surf, model, loads, bc);
    let g0 = g.norm();
    let mut history = vec![f];
    let mut max_orth = max_orthogonality(&x);
    let precond = if opts.precondition {
        BlockPreconditioner::probe(&x, surf, model, loads, bc)
    } else {
        BlockPreconditioner::identity(surf.len())
    };
    let mut memory: VecDeque<(Gradient, Gradient, f64)> = VecDeque::with_capacity(opts.memory);
    let length = diameter(surf);
    let stationary = |g: &Gradient| g.norm() <= opts.grad_tol * g0 || step_resolved(&precond, g, length);
    let mut status = SolveStatus::IterationCap;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if stationary(&g) {
            status = SolveStatus::Converged;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
            }
            let dir = two_loop(&g, &memory, &precond);
            let slope = g.dot(&dir);
            if !(slope < 0.0) {
                memory.clear();
                continue;
            }
            let noise = energy_noise(&x, surf, model, loads, bc);
            if let Some(step) = line_search(&x, f, &dir, slope, noise, surf, model, loads, bc, opts) {
                accepted = Some((dir, step));
                break;
            }
        }
        let Some((dir, (t, x_new, f_new, g_new))) = accepted else {
            status = SolveStatus::LineSearchFailure;
            break;
        };
        let s = dir.scaled(t);
        let y = g_new.difference(&g);
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        max_orth = max_orth.max(max_orthogonality(&x));
        iterations += 1;
    }
    if status == SolveStatus::IterationCap && stationary(&g) {
        status = SolveStatus::Converged;
    }
    let strain = strain_measures(&x, surf);
    let resultants = model.resultants(&strain, &x, surf);
    let strain_total = strain_energy(&x, surf, model);
    Ok(SolveResult {
        status,
        energy_history: history,
        initial_gradient_norm: g0,
        gradient_norm: g.norm(),
        iterations,
        strain,
        resultants,
        functional: f,
        strain_energy: strain_total,
        max_orthogonality_residual: max_orth,
        config: x,
    })
}

fn two_loop(g: &Gradient, memory: &VecDeque<(Gradient, Gradient, f64)>, precond: &BlockPreconditioner) -> Gradient {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y);
        alphas.push(a);
    }
    let mut r = precond.apply(&q);
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&r);
        r.axpy(a - b, s);
    }
    r.scaled(-1.0)
}

/// Backtracking Armijo search. When the energy change is below the rounding
/// noise of `I`, sufficient decrease is judged from the slope at the trial
/// point instead: for a quadratic, `φ'(t) ≤ (2c − 1) φ'(0)` is equivalent to
/// the Armijo condition.
#[allow(clippy::too_many_arguments)]
fn line_search(
    x: &Configuration,
    f: f64,
    dir: &Gradient,
    slope: f64,
    noise: f64,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
    opts: &SolverConfig,
) -> Option<(f64, Configuration, f64, Gradient)> {
    let mut t = 1.0;
    for _ in 0..opts.max_backtracks {
        let trial = retract(x, dir, t);
        let f_trial = total_energy(&trial, surf, model, loads, bc);
        if f_trial <= f + opts.armijo * t * slope {
            let (f_new, g_new) = energy_and_gradient(&trial, surf, model, loads, bc);
            return Some((t, trial, f_new, g_new));
        }
        if (f_trial - f).abs() <= noise {
            let (f_new, g_new) = energy_and_gradient(&trial, surf, model, loads, bc);
            if g_new.dot(dir) <= (2.0 * opts.armijo - 1.0) * slope {
                return Some((t, trial, f_new, g_new));
            }
        }
        t *= opts.backtrack;
    }
    None
}

/// Rounding noise of `I`, estimated from the magnitudes of its two parts.
fn energy_noise(cfg: &Configuration, surf: &ReferenceSurface, model: &EnergyModel, loads: &LoadSpec, bc: &BoundaryConditions) -> f64 {
    NOISE_FACTOR * (strain_energy(cfg, surf, model).abs() + load_potential(cfg, surf, loads, bc).abs())
}

/// Rayleigh quotient `δᵀHδ / δᵀδ` of the Hessian of `I` at `cfg`, with
/// `Hδ` from central differences of the gradient.
pub fn ritz_value(
    cfg: &Configuration,
    dir: &Gradient,
    surf: &ReferenceSurface,
    model: &EnergyModel,
    loads: &LoadSpec,
    bc: &BoundaryConditions,
) -> f64 {
    let t = 1e-5 / dir.norm().max(f64::MIN_POSITIVE);
    let gp = energy_gradient(&retract(cfg, dir, t), surf, model, loads, bc);
    let gm = energy_gradient(&retract(cfg, dir, -t), surf, model, loads, bc);
    let hd = gp.difference(&gm).scaled(1.0 / (2.0 * t));
    hd.dot(dir) / dir.dot(dir)
}
