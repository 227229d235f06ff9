//! Drill invariance checks, the characteristic flow of the invariance
//! condition, and its first integrals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::{drill_rotation, Mat3, Vec3};
use crate::constitutive::{
    coefficients_drill_active, drill_free_density, energy_drill_free, energy_quadratic, jacobi_eigen, ConstitutiveError,
    EnergyReport, EngineeringConstants, MaterialModel,
};
use crate::fields::SmoothField;
use crate::kinematics::{
    alt_strain_forms, alt_strain_measures, representation_arguments, strain_measures, Configuration, KinematicsError,
};
use crate::surface::{NodeGeometry, ReferenceSurface};

pub const DEFAULT_DRILL_AMPLITUDE: f64 = std::f64::consts::FRAC_PI_4;
pub const MIN_ODE_STEPS: usize = 16;

#[derive(Debug, Error)]
pub enum InvarianceError {
    #[error("at least {MIN_ODE_STEPS} integration steps required, got {0}")]
    TooFewSteps(usize),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

/// Drill angle field `θ(x₁, x₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrillField {
    Constant { theta: f64 },
    /// `θ = θ₀ + g·x`
    Linear { offset: f64, gradient: [f64; 2] },
    RandomSmooth { amplitude: f64, seed: u64, modes: usize },
}

impl DrillField {
    pub fn random(seed: u64) -> DrillField {
        DrillField::RandomSmooth { amplitude: DEFAULT_DRILL_AMPLITUDE, seed, modes: 5 }
    }

    pub fn angles(&self, surf: &ReferenceSurface) -> Vec<f64> {
        match *self {
            DrillField::Constant { theta } => vec![theta; surf.len()],
            DrillField::Linear { offset, gradient } => {
                surf.nodes.iter().map(|g| offset + gradient[0] * g.x[0] + gradient[1] * g.x[1]).collect()
            }
            DrillField::RandomSmooth { amplitude, seed, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // First component of a vector field, rescaled so |θ| ≤ amplitude.
                let field = SmoothField::random(&mut rng, modes, amplitude * 3f64.sqrt());
                surf.nodes.iter().map(|g| field.eval(g.x)[0]).collect()
            }
        }
    }

    pub fn negated(&self) -> DrillField {
        match *self {
            DrillField::Constant { theta } => DrillField::Constant { theta: -theta },
            DrillField::Linear { offset, gradient } => DrillField::Linear { offset: -offset, gradient: [-gradient[0], -gradient[1]] },
            DrillField::RandomSmooth { amplitude, seed, modes } => DrillField::RandomSmooth { amplitude: -amplitude, seed, modes },
        }
    }
}

/// `R ← R_θ(d₃) R` per node; `y` unchanged.
pub fn apply_drill_angles(cfg: &Configuration, angles: &[f64]) -> Configuration {
    let r = cfg
        .r
        .iter()
        .zip(angles)
        .map(|(r, &theta)| {
            let d3 = r.director(2);
            drill_rotation(&d3, theta).expect("directors of a rotation are unit vectors").compose(r)
        })
        .collect();
    Configuration { y: cfg.y.clone(), r }
}

pub fn apply_drill(cfg: &Configuration, field: &DrillField, surf: &ReferenceSurface) -> Configuration {
    apply_drill_angles(cfg, &field.angles(surf))
}

/// `|after − before| / max(|before|, floor)`.
fn relative_change(before: f64, after: f64, floor: f64) -> f64 {
    (after - before).abs() / before.abs().max(floor)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrillInvarianceReport {
    pub free_before: f64,
    pub free_after: f64,
    /// Relative change of the drill-free energy, evaluated through `F`, `d₃`.
    pub delta_free: f64,
    /// Same, evaluated through the `E^e/K^e` form of the measures.
    pub delta_free_strain_form: f64,
    pub active_before: f64,
    pub active_after: f64,
    pub delta_active: f64,
}

fn drill_free_strain_form(cfg: &Configuration, k: &EngineeringConstants, surf: &ReferenceSurface) -> f64 {
    alt_strain_forms(cfg, surf).iter().zip(&surf.nodes).map(|((_, ek), g)| drill_free_density(k, ek) * g.weight).sum()
}

fn drill_free_total(cfg: &Configuration, m: &MaterialModel, surf: &ReferenceSurface) -> Result<f64, InvarianceError> {
    let state = strain_measures(cfg, surf);
    let alt = alt_strain_measures(&state, cfg, surf)?;
    Ok(energy_drill_free(&alt, m, surf)?.total)
}

/// Drill-free energy and drill-active quadratic energy before and after the
/// drill field is applied. `m` supplies the engineering constants.
pub fn drill_invariance_report(
    cfg: &Configuration,
    surf: &ReferenceSurface,
    m: &MaterialModel,
    field: &DrillField,
) -> Result<DrillInvarianceReport, InvarianceError> {
    let k = *m.constants()?;
    let active = coefficients_drill_active(k)?;
    let drilled = apply_drill(cfg, field, surf);
    let free_before = drill_free_total(cfg, m, surf)?;
    let free_after = drill_free_total(&drilled, m, surf)?;
    let strain_before = drill_free_strain_form(cfg, &k, surf);
    let strain_after = drill_free_strain_form(&drilled, &k, surf);
    let quad = |c: &Configuration| -> EnergyReport { energy_quadratic(&strain_measures(c, surf), &active, surf) };
    let active_before = quad(cfg).total;
    let active_after = quad(&drilled).total;
    // Energies below this are treated as zero when forming relative changes.
    let floor = 1e-12 * (k.stretching_stiffness() + k.bending_stiffness()) * surf.total_area();
    Ok(DrillInvarianceReport {
        free_before,
        free_after,
        delta_free: relative_change(free_before, free_after, floor),
        delta_free_strain_form: relative_change(strain_before, strain_after, floor),
        active_before,
        active_after,
        delta_active: relative_change(active_before, active_after, floor),
    })
}

// ---------------------------------------------------------------------------
// Representation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    /// Largest nodal change of `FᵀF`, `d₃F`, `FᵀGrad_s d₃` under the drill.
    pub argument_change: f64,
    /// Largest nodal change of `E^e` and of `K^e`.
    pub strain_change: f64,
    pub curvature_change: f64,
}

pub fn representation_check(cfg: &Configuration, surf: &ReferenceSurface, field: &DrillField) -> RepresentationReport {
    let drilled = apply_drill(cfg, field, surf);
    let before = representation_arguments(cfg, surf);
    let after = representation_arguments(&drilled, surf);
    let argument_change = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a.0 - b.0).max_abs().max((a.1 - b.1).max_abs()).max((a.2 - b.2).max_abs()))
        .fold(0.0, f64::max);
    let s0 = strain_measures(cfg, surf);
    let s1 = strain_measures(&drilled, surf);
    let (mut strain_change, mut curvature_change) = (0.0f64, 0.0f64);
    for (a, b) in s0.nodes.iter().zip(&s1.nodes) {
        strain_change = strain_change.max((a.e - b.e).norm());
        curvature_change = curvature_change.max((a.k - b.k).norm());
    }
    RepresentationReport { argument_change, strain_change, curvature_change }
}

/// Runs [`representation_check`] on `samples` random configurations and
/// random drill fields; returns one report per sample.
pub fn representation_closure_check(
    surf: &ReferenceSurface,
    samples: usize,
    seed: u64,
) -> Vec<RepresentationReport> {
    use crate::fields::{random_configuration, RandomConfigSpec};
    (0..samples as u64)
        .map(|i| {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(i);
            let cfg = random_configuration(surf, &RandomConfigSpec::default(), s);
            representation_check(&cfg, surf, &DrillField::random(s ^ 0x5eed))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Characteristic flow

/// Coefficients frozen at one surface point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenGeometry {
    pub proj: Mat3,
    pub c: Mat3,
    pub k0: Mat3,
    pub normal: Vec3,
    /// Tangent directions `d₁⁰, d₂⁰` and contravariant basis, used to build
    /// strain states in the admissible span `dᵢ⁰ ⊗ a^α`.
    pub directors: [Vec3; 3],
    pub a_con: [Vec3; 2],
}

impl FrozenGeometry {
    pub fn from_node(g: &NodeGeometry) -> FrozenGeometry {
        FrozenGeometry {
            proj: g.proj,
            c: g.c,
            k0: g.k0_tensor,
            normal: g.normal,
            directors: [g.q0.director(0), g.q0.director(1), g.q0.director(2)],
            a_con: g.a_con,
        }
    }

    /// `Σ z[3α+i] dᵢ⁰ ⊗ a^α`.
    pub fn tensor(&self, z: &[f64]) -> Mat3 {
        let mut t = Mat3::ZERO;
        for alpha in 0..2 {
            for i in 0..3 {
                t += self.directors[i].outer(&self.a_con[alpha]) * z[3 * alpha + i];
            }
        }
        t
    }

    /// Closed-form flow map `exp(s c) = n⁰⊗n⁰ + cos s a + sin s c`.
    pub fn flow_map(&self, s: f64) -> Mat3 {
        self.normal.outer(&self.normal) + self.proj * s.cos() + self.c * s.sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub e: Mat3,
    pub k: Mat3,
}

fn rate(g: &FrozenGeometry, x: &OdeState) -> OdeState {
    OdeState { e: g.c * (x.e + g.proj), k: g.c * (x.k + g.k0) }
}

fn axpy(x: &OdeState, h: f64, d: &OdeState) -> OdeState {
    OdeState { e: x.e + d.e * h, k: x.k + d.k * h }
}

/// Classical RK4 for `dE/ds = c(E + a)`, `dK/ds = c(K + K⁰)`. Returns the
/// `steps + 1` states at `s = i·s_max/steps`.
pub fn ode_flow(
    initial: &OdeState,
    g: &FrozenGeometry,
    s_max: f64,
    steps: usize,
) -> Result<Vec<OdeState>, InvarianceError> {
    if steps < MIN_ODE_STEPS {
        return Err(InvarianceError::TooFewSteps(steps));
    }
    let h = s_max / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = *initial;
    // Compensated (Kahan) accumulation of the increments.
    let mut carry = OdeState { e: Mat3::ZERO, k: Mat3::ZERO };
    out.push(x);
    for _ in 0..steps {
        let k1 = rate(g, &x);
        let k2 = rate(g, &axpy(&x, 0.5 * h, &k1));
        let k3 = rate(g, &axpy(&x, 0.5 * h, &k2));
        let k4 = rate(g, &axpy(&x, h, &k3));
        let de = (k1.e + k2.e * 2.0 + k3.e * 2.0 + k4.e) * (h / 6.0) - carry.e;
        let dk = (k1.k + k2.k * 2.0 + k3.k * 2.0 + k4.k) * (h / 6.0) - carry.k;
        let next = OdeState { e: x.e + de, k: x.k + dk };
        carry = OdeState { e: (next.e - x.e) - de, k: (next.k - x.k) - dk };
        x = next;
        out.push(x);
    }
    Ok(out)
}

/// Exact solution of the flow at parameter `s`.
pub fn exact_flow(initial: &OdeState, g: &FrozenGeometry, s: f64) -> OdeState {
    let m = g.flow_map(s);
    OdeState { e: m * (initial.e + g.proj) - g.proj, k: m * (initial.k + g.k0) - g.k0 }
}

/// Values of the four first integrals at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    /// `(E+a)ᵀ(E+a)`
    pub stretch: Mat3,
    /// `n⁰E`
    pub normal_strain: Vec3,
    /// `n⁰K`
    pub normal_curvature: Vec3,
    /// `(E+a)ᵀc(K+K⁰)`
    pub coupling: Mat3,
}

pub fn first_integrals(x: &OdeState, g: &FrozenGeometry) -> FirstIntegrals {
    let ea = x.e + g.proj;
    FirstIntegrals {
        stretch: ea.transpose() * ea,
        normal_strain: x.e.transpose() * g.normal,
        normal_curvature: x.k.transpose() * g.normal,
        coupling: ea.transpose() * g.c * (x.k + g.k0),
    }
}

/// Max over the trajectory of `‖U_k(s) − U_k(0)‖` for the four integrals.
pub fn first_integral_drift(trajectory: &[OdeState], g: &FrozenGeometry) -> [f64; 4] {
    let u0 = first_integrals(&trajectory[0], g);
    trajectory.iter().fold([0.0; 4], |acc, x| {
        let u = first_integrals(x, g);
        [
            acc[0].max((u.stretch - u0.stretch).norm()),
            acc[1].max((u.normal_strain - u0.normal_strain).norm()),
            acc[2].max((u.normal_curvature - u0.normal_curvature).norm()),
            acc[3].max((u.coupling - u0.coupling).norm()),
        ]
    })
}

/// Drift of `tr E`, which is not conserved by the flow.
pub fn trace_drift(trajectory: &[OdeState]) -> f64 {
    let t0 = trajectory[0].e.trace();
    trajectory.iter().map(|x| (x.e.trace() - t0).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Singular values of the Jacobian of all four integrals, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Rank with `n⁰K` left out.
    pub rank_without_normal_curvature: usize,
}

fn stacked_integrals(z: &[f64; 12], g: &FrozenGeometry, include_normal_curvature: bool) -> Vec<f64> {
    let x = OdeState { e: g.tensor(&z[..6]), k: g.tensor(&z[6..]) };
    let u = first_integrals(&x, g);
    let mut v: Vec<f64> = u.stretch.to_array().to_vec();
    v.extend(u.normal_strain.0);
    if include_normal_curvature {
        v.extend(u.normal_curvature.0);
    }
    v.extend(u.coupling.to_array());
    v
}

fn jacobian_rank(z: &[f64; 12], g: &FrozenGeometry, include_normal_curvature: bool) -> (Vec<f64>, usize) {
    let h = 1e-6;
    let cols: Vec<Vec<f64>> = (0..12)
        .map(|j| {
            let (mut zp, mut zm) = (*z, *z);
            zp[j] += h;
            zm[j] -= h;
            let (p, m) = (stacked_integrals(&zp, g, include_normal_curvature), stacked_integrals(&zm, g, include_normal_curvature));
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let mut jtj = [[0.0; 12]; 12];
    for i in 0..12 {
        for j in 0..12 {
            jtj[i][j] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
        }
    }
    let (values, _) = jacobi_eigen(jtj);
    let mut sv: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank = sv.iter().filter(|&&s| s > 1e-6 * sv[0]).count();
    (sv, rank)
}

/// Numerical rank of the Jacobian of the stacked first integrals with
/// respect to the 12 components of `(E^e, K^e)` at the point `z`.
pub fn first_integral_rank(z: &[f64; 12], g: &FrozenGeometry) -> RankReport {
    let (singular_values, rank) = jacobian_rank(z, g, true);
    let (_, rank_without_normal_curvature) = jacobian_rank(z, g, false);
    RankReport { singular_values, rank, rank_without_normal_curvature }
}
