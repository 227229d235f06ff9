//! Strain-energy densities, coefficient sets and their admissibility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::{Mat3, Vec3};
use crate::kinematics::{alt_from_strain, AltNodeStrain, AltStrainState, Configuration, NodeStrain, StrainState};
use crate::surface::{NodeGeometry, ReferenceSurface};

/// Relative tolerance used to decide strictness of the admissibility
/// inequalities and the sign of Hessian eigenvalues.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid material parameter {name} = {value}, required {bound}")]
    InvalidParameter { name: &'static str, value: f64, bound: &'static str },
    #[error("material model has no engineering constants")]
    MissingConstants,
}

/// Origin of a coefficient set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSet {
    DrillActive,
    DrillFree,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineeringConstants {
    pub young: f64,
    pub poisson: f64,
    pub thickness: f64,
    #[serde(default = "one")]
    pub alpha_s: f64,
    #[serde(default = "one")]
    pub alpha_t: f64,
    #[serde(default = "five_sixths")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

fn five_sixths() -> f64 {
    5.0 / 6.0
}

impl EngineeringConstants {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            ("young", self.young, self.young > 0.0, "young > 0"),
            ("poisson", self.poisson, (0.0..0.5).contains(&self.poisson), "Poisson bound 0 <= poisson < 1/2"),
            ("thickness", self.thickness, self.thickness > 0.0, "thickness > 0"),
            ("alpha_s", self.alpha_s, self.alpha_s > 0.0, "alpha_s > 0"),
            ("alpha_t", self.alpha_t, self.alpha_t > 0.0, "alpha_t > 0"),
            ("kappa", self.kappa, self.kappa > 0.0, "kappa > 0"),
        ];
        for (name, value, ok, bound) in checks {
            if !ok || !value.is_finite() {
                return Err(ConstitutiveError::InvalidParameter { name, value, bound });
            }
        }
        Ok(())
    }

    /// Stretching stiffness `C = Eh/(1−ν²)`.
    pub fn stretching_stiffness(&self) -> f64 {
        self.young * self.thickness / (1.0 - self.poisson * self.poisson)
    }

    /// Bending stiffness `D = Eh³/(12(1−ν²))`.
    pub fn bending_stiffness(&self) -> f64 {
        self.young * self.thickness.powi(3) / (12.0 * (1.0 - self.poisson * self.poisson))
    }
}

/// Coefficients of the isotropic quadratic energy: `alpha` membrane/shear
/// (force/length), `beta` bending/twist/drill (force·length).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub set: CoefficientSet,
    pub constants: Option<EngineeringConstants>,
}

impl MaterialModel {
    pub fn custom(alpha: [f64; 4], beta: [f64; 4]) -> MaterialModel {
        MaterialModel { alpha, beta, set: CoefficientSet::Custom, constants: None }
    }

    pub fn constants(&self) -> Result<&EngineeringConstants, ConstitutiveError> {
        self.constants.as_ref().ok_or(ConstitutiveError::MissingConstants)
    }
}

pub fn coefficients_drill_active(c: EngineeringConstants) -> Result<MaterialModel, ConstitutiveError> {
    c.validate()?;
    let (cs, ds, nu) = (c.stretching_stiffness(), c.bending_stiffness(), c.poisson);
    Ok(MaterialModel {
        alpha: [cs * nu, 0.0, cs * (1.0 - nu), c.alpha_s * cs * (1.0 - nu)],
        beta: [ds * nu, 0.0, ds * (1.0 - nu), c.alpha_t * ds * (1.0 - nu)],
        set: CoefficientSet::DrillActive,
        constants: Some(c),
    })
}

pub fn coefficients_drill_free(c: EngineeringConstants) -> Result<MaterialModel, ConstitutiveError> {
    c.validate()?;
    let (cs, ds, nu) = (c.stretching_stiffness(), c.bending_stiffness(), c.poisson);
    let half = cs * (1.0 - nu) / 2.0;
    Ok(MaterialModel {
        alpha: [cs * nu, half, half, half * c.kappa],
        beta: [ds * (nu - 1.0) / 2.0, -ds * nu, ds, 0.0],
        set: CoefficientSet::DrillFree,
        constants: Some(c),
    })
}

// ---------------------------------------------------------------------------
// Quadratic energy

fn block_energy(c: &[f64; 4], proj: &Mat3, n0: &Vec3, x: &Mat3) -> f64 {
    let xp = *proj * *x;
    let tr = xp.trace();
    let xn = x.transpose() * *n0;
    0.5 * (c[0] * tr * tr + c[1] * (xp * xp).trace() + c[2] * xp.ddot(&xp) + c[3] * xn.dot(&xn))
}

fn block_gradient(c: &[f64; 4], proj: &Mat3, n0: &Vec3, x: &Mat3) -> Mat3 {
    let xp = *proj * *x;
    *proj * (c[0] * xp.trace()) + *proj * xp.transpose() * c[1] + xp * c[2] + n0.outer(&(x.transpose() * *n0)) * c[3]
}

/// Quadratic energy density `W(E^e, K^e)` at a node with normal `n0`.
pub fn quadratic_density(m: &MaterialModel, n0: &Vec3, e: &Mat3, k: &Mat3) -> f64 {
    let proj = Mat3::IDENTITY - n0.outer(n0);
    block_energy(&m.alpha, &proj, n0, e) + block_energy(&m.beta, &proj, n0, k)
}

/// `(∂W/∂E^e, ∂W/∂K^e)` of the quadratic energy.
pub fn quadratic_gradient(m: &MaterialModel, n0: &Vec3, e: &Mat3, k: &Mat3) -> (Mat3, Mat3) {
    let proj = Mat3::IDENTITY - n0.outer(n0);
    (block_gradient(&m.alpha, &proj, n0, e), block_gradient(&m.beta, &proj, n0, k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Energy per unit reference area at each node.
    pub density: Vec<f64>,
    /// Quadrature sum over the surface.
    pub total: f64,
}

impl EnergyReport {
    fn integrate(density: Vec<f64>, surf: &ReferenceSurface) -> EnergyReport {
        let total = density.iter().zip(&surf.nodes).map(|(w, g)| w * g.weight).sum();
        EnergyReport { density, total }
    }
}

pub fn energy_quadratic(state: &StrainState, m: &MaterialModel, surf: &ReferenceSurface) -> EnergyReport {
    let density = state
        .nodes
        .par_iter()
        .zip(&surf.nodes)
        .map(|(s, g)| quadratic_density(m, &g.normal, &s.e, &s.k))
        .collect();
    EnergyReport::integrate(density, surf)
}

// ---------------------------------------------------------------------------
// Energies without drilling stiffness

/// `Ŵ(𝓔, γ, Ψ)` for stiffnesses `C`, `D`, Poisson ratio and shear factor.
pub fn drill_free_density(k: &EngineeringConstants, s: &AltNodeStrain) -> f64 {
    let (cs, ds, nu) = (k.stretching_stiffness(), k.bending_stiffness(), k.poisson);
    let tr_e = s.eps.trace();
    let tr_p = s.psi.trace();
    let membrane = cs * ((1.0 - nu) * s.eps.ddot(&s.eps) + nu * tr_e * tr_e);
    let shear = 0.5 * cs * (1.0 - nu) * k.kappa * s.gamma.dot(&s.gamma);
    let bending = ds * (0.5 * (1.0 - nu) * s.psi.ddot(&s.psi) + 0.5 * (1.0 - nu) * (s.psi * s.psi).trace() + nu * tr_p * tr_p);
    0.5 * (membrane + shear + bending)
}

/// Partial derivatives `(∂Ŵ/∂𝓔, ∂Ŵ/∂γ, ∂Ŵ/∂Ψ)`.
pub fn drill_free_partials(k: &EngineeringConstants, s: &AltNodeStrain) -> (Mat3, Vec3, Mat3) {
    let (cs, ds, nu) = (k.stretching_stiffness(), k.bending_stiffness(), k.poisson);
    let d_eps = (s.eps * (1.0 - nu) + Mat3::IDENTITY * (nu * s.eps.trace())) * cs;
    let d_gamma = s.gamma * (0.5 * cs * (1.0 - nu) * k.kappa);
    let d_psi = ((s.psi + s.psi.transpose()) * (0.5 * (1.0 - nu)) + Mat3::IDENTITY * (nu * s.psi.trace())) * ds;
    (d_eps, d_gamma, d_psi)
}

/// `(∂Ŵ/∂E^e, ∂Ŵ/∂K^e)` of the drill-free energy, through the `E^e/K^e`
/// form of the alternative measures.
pub fn drill_free_strain_gradient(k: &EngineeringConstants, geom: &NodeGeometry, s: &NodeStrain) -> (Mat3, Mat3) {
    let alt = alt_from_strain(geom, s);
    let (s_eps, s_gamma, s_psi) = drill_free_partials(k, &alt);
    let e = s.e;
    let t = s_psi * geom.b.transpose();
    let se = e * s_eps
        + geom.proj * s_eps
        + geom.normal.outer(&s_gamma)
        + geom.c * s.k * s_psi.transpose()
        + e * t.sym()
        + geom.proj * t.skew_part();
    let sk = geom.c.transpose() * (e + geom.proj) * s_psi;
    (se, sk)
}

pub fn energy_drill_free(
    alt: &AltStrainState,
    m: &MaterialModel,
    surf: &ReferenceSurface,
) -> Result<EnergyReport, ConstitutiveError> {
    let k = m.constants()?;
    let density = alt.nodes.par_iter().map(|s| drill_free_density(k, s)).collect();
    Ok(EnergyReport::integrate(density, surf))
}

/// Quadratic energy without drilling stiffness written directly in the
/// engineering constants.
pub fn reduced_quadratic_density(k: &EngineeringConstants, s: &NodeStrain) -> f64 {
    let (cs, ds, nu) = (k.stretching_stiffness(), k.bending_stiffness(), k.poisson);
    let (ep, kp) = (s.e_par, s.k_par);
    let half = (1.0 - nu) / 2.0;
    let membrane =
        cs * (nu * ep.trace().powi(2) + half * (ep * ep).trace() + half * ep.ddot(&ep)) + cs * half * k.kappa * s.e_normal.dot(&s.e_normal);
    let bending = ds * (kp.ddot(&kp) - half * kp.trace().powi(2) - nu * (kp * kp).trace());
    0.5 * (membrane + bending)
}

pub fn energy_reduced_quadratic(
    state: &StrainState,
    m: &MaterialModel,
    surf: &ReferenceSurface,
) -> Result<EnergyReport, ConstitutiveError> {
    let k = m.constants()?;
    let density = state
        .nodes
        .par_iter()
        .map(|s| reduced_quadratic_density(k, s))
        .collect();
    Ok(EnergyReport::integrate(density, surf))
}

/// Force and couple resultants `N = Q ∂W/∂E^e`, `M = Q ∂W/∂K^e` of the
/// quadratic energy.
pub fn stress_resultants(
    state: &StrainState,
    cfg: &Configuration,
    m: &MaterialModel,
    surf: &ReferenceSurface,
) -> Vec<(Mat3, Mat3)> {
    resultants_with(state, cfg, surf, |node, s| quadratic_gradient(m, &surf.nodes[node].normal, &s.e, &s.k))
}

/// Resultants `N = Q S_E`, `M = Q S_K` for any conjugate-stress map.
pub fn resultants_with<G>(state: &StrainState, cfg: &Configuration, surf: &ReferenceSurface, conjugate: G) -> Vec<(Mat3, Mat3)>
where
    G: Fn(usize, &NodeStrain) -> (Mat3, Mat3),
{
    state
        .nodes
        .iter()
        .enumerate()
        .map(|(node, s)| {
            let q = cfg.elastic_rotation(surf, node);
            let (se, sk) = conjugate(node, s);
            (q * se, q * sk)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Admissibility

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub label: String,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormSpectrum {
    /// Ascending eigenvalues of the Hessian of `W` in the orthonormal
    /// component basis `(E_{iα}, K_{iα})`.
    pub eigenvalues: Vec<f64>,
    pub membrane: Vec<f64>,
    pub bending: Vec<f64>,
    pub min_eigenvalue: f64,
    pub null_directions: Vec<Vec<f64>>,
    pub symmetry_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub inequalities: Vec<Inequality>,
    pub satisfied: bool,
    pub spectrum: QuadraticFormSpectrum,
    /// Inequalities verdict agrees with positivity of the spectrum.
    pub consistent: bool,
}

impl AdmissibilityReport {
    /// Constant in `W ≥ C₀(‖E^e‖² + ‖K^e‖²)`.
    pub fn coercivity_constant(&self) -> f64 {
        0.5 * self.spectrum.min_eigenvalue
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<16} {:>14}  verdict\n", "inequality", "margin");
        for i in &self.inequalities {
            out += &format!("{:<16} {:>14.6e}  {}\n", i.label, i.margin, if i.holds { "ok" } else { "violated" });
        }
        out += &format!("smallest eigenvalue {:.6e}, overall {}\n", self.spectrum.min_eigenvalue, if self.satisfied { "satisfied" } else { "violated" });
        out
    }
}

fn coefficient_scale(m: &MaterialModel) -> (f64, f64) {
    let s = |c: &[f64; 4]| c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (s(&m.alpha), s(&m.beta))
}

pub fn check_coercivity(m: &MaterialModel) -> AdmissibilityReport {
    let (sa, sb) = coefficient_scale(m);
    let mut inequalities = Vec::with_capacity(8);
    for (name, c, scale) in [("alpha", &m.alpha, sa), ("beta", &m.beta, sb)] {
        let margins = [
            ("2{0}1+{0}2+{0}3", 2.0 * c[0] + c[1] + c[2]),
            ("{0}2+{0}3", c[1] + c[2]),
            ("{0}3-{0}2", c[2] - c[1]),
            ("{0}4", c[3]),
        ];
        for (label, margin) in margins {
            inequalities.push(Inequality {
                label: label.replace("{0}", name),
                margin,
                holds: margin > ADMISSIBILITY_TOLERANCE * scale,
            });
        }
    }
    let satisfied = inequalities.iter().all(|i| i.holds);
    let spectrum = quadratic_form_spectrum(m);
    let scale = spectrum.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let positive = spectrum.min_eigenvalue > ADMISSIBILITY_TOLERANCE * scale;
    AdmissibilityReport { inequalities, satisfied, consistent: satisfied == positive, spectrum }
}

/// Cartesian strain tensor with components `x[3α + i] = E_{iα}` on the
/// flat frame `a^α = e_α`, `n⁰ = e₃`.
pub fn flat_tensor(x: &[f64]) -> Mat3 {
    let mut t = Mat3::ZERO;
    for alpha in 0..2 {
        for i in 0..3 {
            t.0[i][alpha] = x[3 * alpha + i];
        }
    }
    t
}

fn flat_components(t: &Mat3) -> [f64; 6] {
    let mut x = [0.0; 6];
    for alpha in 0..2 {
        for i in 0..3 {
            x[3 * alpha + i] = t.0[i][alpha];
        }
    }
    x
}

/// Hessian of `W` in the 12 components `(E_{iα}, K_{iα})` of the flat frame,
/// assembled column by column from the closed-form gradient.
pub fn energy_hessian(m: &MaterialModel) -> [[f64; 12]; 12] {
    let n0 = Vec3::unit(2);
    let mut h = [[0.0; 12]; 12];
    for j in 0..12 {
        let mut z = [0.0; 12];
        z[j] = 1.0;
        let (se, sk) = quadratic_gradient(m, &n0, &flat_tensor(&z[..6]), &flat_tensor(&z[6..]));
        let (ge, gk) = (flat_components(&se), flat_components(&sk));
        for i in 0..6 {
            h[i][j] = ge[i];
            h[i + 6][j] = gk[i];
        }
    }
    h
}

pub fn quadratic_form_spectrum(m: &MaterialModel) -> QuadraticFormSpectrum {
    let mut h = energy_hessian(m);
    let mut symmetry_residual = 0.0f64;
    for i in 0..12 {
        for j in 0..i {
            symmetry_residual = symmetry_residual.max((h[i][j] - h[j][i]).abs());
            let avg = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = avg;
            h[j][i] = avg;
        }
    }
    let (values, vectors) = jacobi_eigen(h);
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let scale = eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let is_membrane = |i: usize| (0..6).map(|r| vectors[r][i].powi(2)).sum::<f64>() > 0.5;
    let mut membrane: Vec<f64> = order.iter().filter(|&&i| is_membrane(i)).map(|&i| values[i]).collect();
    let mut bending: Vec<f64> = order.iter().filter(|&&i| !is_membrane(i)).map(|&i| values[i]).collect();
    membrane.sort_by(f64::total_cmp);
    bending.sort_by(f64::total_cmp);
    let null_directions = order
        .iter()
        .filter(|&&i| values[i].abs() <= ADMISSIBILITY_TOLERANCE * scale)
        .map(|&i| (0..12).map(|r| vectors[r][i]).collect())
        .collect();
    QuadraticFormSpectrum {
        min_eigenvalue: eigenvalues[0],
        eigenvalues,
        membrane,
        bending,
        null_directions,
        symmetry_residual,
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues and the matrix whose columns are the eigenvectors.
pub fn jacobi_eigen<const N: usize>(mut a: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..N).flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut values = [0.0; N];
    for i in 0..N {
        values[i] = a[i][i];
    }
    (values, v)
}
