//! Configuration fields and the strain measures built from them.
//!
//! Derivatives of the rotation field are taken through the directors
//! `dₖ = R eₖ`: with `∂_α dₖ` from the grid stencil, the body curvature is
//! `κ_α = (−d₂·∂d₃, d₁·∂d₃, ½(d₂·∂d₁ − d₁·∂d₂))` and
//! `K^e a_α = Q⁰κ_α − k⁰_α`. The bending part of `κ` depends on `d₃` alone,
//! which makes the identities relating `(E^e, K^e)` to `(F, Grad_s d₃)` hold
//! exactly on the grid, not just up to discretization error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::{skew, Mat3, Rotation, Vec3};
use crate::surface::{body_curvature, derivative, surface_gradient, NodeGeometry, ReferenceSurface};

/// Tolerance above which the two algebraic forms of the alternative measures
/// are reported as a mismatch.
pub const FORM_MISMATCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("alternative strain measure {quantity} disagrees between its two forms at node {node}: {difference:e}")]
    FormMismatch { node: usize, quantity: &'static str, difference: f64 },
    #[error("configuration has {found} nodes, surface has {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

/// Unknown fields: position `y` and total rotation `R = Q Q⁰` per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub y: Vec<Vec3>,
    pub r: Vec<Rotation>,
}

impl Configuration {
    /// `y = y⁰`, `R = Q⁰` (so `Q = 1`).
    pub fn reference(surf: &ReferenceSurface) -> Configuration {
        Configuration {
            y: surf.nodes.iter().map(|n| n.y0).collect(),
            r: surf.nodes.iter().map(|n| n.q0).collect(),
        }
    }

    /// Superpose the rigid motion `y ↦ R̄ y + c̄`, `R ↦ R̄ R`.
    pub fn rigidly_moved(&self, rbar: &Rotation, cbar: Vec3) -> Configuration {
        Configuration {
            y: self.y.iter().map(|y| rbar.apply(y) + cbar).collect(),
            r: self.r.iter().map(|r| rbar.compose(r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Elastic rotation `Q = R Q⁰ᵀ`.
    pub fn elastic_rotation(&self, surf: &ReferenceSurface, node: usize) -> Mat3 {
        *self.r[node].matrix() * surf.nodes[node].q0.matrix().transpose()
    }

    pub fn displacement(&self, surf: &ReferenceSurface) -> Vec<Vec3> {
        self.y.iter().zip(&surf.nodes).map(|(y, n)| *y - n.y0).collect()
    }

    /// Director field `dₖ = R eₖ`.
    pub fn directors(&self, k: usize) -> Vec<Vec3> {
        self.r.iter().map(|r| r.director(k)).collect()
    }

    pub fn check_size(&self, surf: &ReferenceSurface) -> Result<(), KinematicsError> {
        if self.y.len() != surf.len() || self.r.len() != surf.len() {
            return Err(KinematicsError::SizeMismatch { expected: surf.len(), found: self.y.len().min(self.r.len()) });
        }
        Ok(())
    }
}

/// Grid derivatives needed at one node: `p_α = ∂_α y` and `∂_α dₖ`.
#[derive(Clone, Copy, Debug)]
pub struct NodeJet {
    pub p: [Vec3; 2],
    pub dd: [[Vec3; 3]; 2],
}

/// Precomputed director fields of a configuration.
pub struct DirectorFields {
    pub d: [Vec<Vec3>; 3],
}

impl DirectorFields {
    pub fn new(cfg: &Configuration) -> DirectorFields {
        DirectorFields { d: [cfg.directors(0), cfg.directors(1), cfg.directors(2)] }
    }

    pub fn jet(&self, cfg: &Configuration, surf: &ReferenceSurface, node: usize) -> NodeJet {
        let g = &surf.grid;
        let mut jet = NodeJet { p: [Vec3::ZERO; 2], dd: [[Vec3::ZERO; 3]; 2] };
        for alpha in 0..2 {
            jet.p[alpha] = derivative(g, &cfg.y, node, alpha);
            for k in 0..3 {
                jet.dd[alpha][k] = derivative(g, &self.d[k], node, alpha);
            }
        }
        jet
    }
}

/// Strain tensors at one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStrain {
    /// `E^e = (Qᵀ∂_α y − a_α) ⊗ a^α`
    pub e: Mat3,
    /// `K^e = axl(Qᵀ∂_α Q) ⊗ a^α`
    pub k: Mat3,
    pub e_par: Mat3,
    pub k_par: Mat3,
    /// Normal row `n⁰E^e`, stored as the vector `E^{eT} n⁰`.
    pub e_normal: Vec3,
    pub k_normal: Vec3,
}

impl NodeStrain {
    pub fn new(e: Mat3, k: Mat3, n0: &Vec3) -> NodeStrain {
        let proj = Mat3::IDENTITY - n0.outer(n0);
        NodeStrain {
            e,
            k,
            e_par: proj * e,
            k_par: proj * k,
            e_normal: e.transpose() * *n0,
            k_normal: k.transpose() * *n0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrainState {
    pub nodes: Vec<NodeStrain>,
}

impl StrainState {
    pub fn max_membrane_norm(&self) -> f64 {
        self.nodes.iter().map(|s| s.e.norm()).fold(0.0, f64::max)
    }
}

/// Alternative (drill-insensitive) measures at one node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AltNodeStrain {
    /// `𝓔 = ½(FᵀF − a)`
    pub eps: Mat3,
    /// `γ = d₃F`, stored as `Fᵀd₃`.
    pub gamma: Vec3,
    /// Bending-twist tensor `Ψ`.
    pub psi: Mat3,
    /// Zhilin's bending-twist tensor `Φ`.
    pub phi: Mat3,
}

impl AltNodeStrain {
    pub fn max_abs_difference(&self, o: &AltNodeStrain) -> [(&'static str, f64); 4] {
        [
            ("eps", (self.eps - o.eps).max_abs()),
            ("gamma", (self.gamma - o.gamma).max_abs()),
            ("psi", (self.psi - o.psi).max_abs()),
            ("phi", (self.phi - o.phi).max_abs()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AltStrainState {
    pub nodes: Vec<AltNodeStrain>,
}

/// Strain tensors at one node from its rotation and grid jet; also returns
/// the body curvatures `κ_α`.
pub fn node_strain(geom: &NodeGeometry, r: &Rotation, jet: &NodeJet) -> (NodeStrain, [Vec3; 2]) {
    let rt = r.matrix().transpose();
    let q0 = geom.q0.matrix();
    let d = [r.director(0), r.director(1), r.director(2)];
    let mut e = Mat3::ZERO;
    let mut k = Mat3::ZERO;
    let mut kappa = [Vec3::ZERO; 2];
    for alpha in 0..2 {
        let stretch = *q0 * (rt * jet.p[alpha]) - geom.a_cov[alpha];
        e += stretch.outer(&geom.a_con[alpha]);
        kappa[alpha] = body_curvature(&d, &jet.dd[alpha]);
        let curv = *q0 * kappa[alpha] - geom.k0[alpha];
        k += curv.outer(&geom.a_con[alpha]);
    }
    (NodeStrain::new(e, k, &geom.normal), kappa)
}

/// `F = Grad_s y = ∂_α y ⊗ a^α`.
pub fn deformation_gradient(cfg: &Configuration, surf: &ReferenceSurface) -> Vec<Mat3> {
    surface_gradient(&cfg.y, surf)
}

pub fn strain_measures(cfg: &Configuration, surf: &ReferenceSurface) -> StrainState {
    let dirs = DirectorFields::new(cfg);
    let nodes = (0..surf.len())
        .into_par_iter()
        .map(|node| node_strain(&surf.nodes[node], &cfg.r[node], &dirs.jet(cfg, surf, node)).0)
        .collect();
    StrainState { nodes }
}

/// Deformation quantities entering the drill-insensitive representation:
/// `F`, `d₃`, and the tangential part of `Grad_s d₃`.
#[derive(Clone, Copy, Debug)]
pub struct SpatialJet {
    pub f: Mat3,
    pub d3: Vec3,
    pub grad_d3: Mat3,
}

impl SpatialJet {
    pub fn new(geom: &NodeGeometry, r: &Rotation, jet: &NodeJet) -> SpatialJet {
        let d3 = r.director(2);
        let tangential = Mat3::IDENTITY - d3.outer(&d3);
        let mut f = Mat3::ZERO;
        let mut grad_d3 = Mat3::ZERO;
        for alpha in 0..2 {
            f += jet.p[alpha].outer(&geom.a_con[alpha]);
            grad_d3 += (tangential * jet.dd[alpha][2]).outer(&geom.a_con[alpha]);
        }
        SpatialJet { f, d3, grad_d3 }
    }

    /// The three arguments `(FᵀF, d₃F, FᵀGrad_s d₃)` of the drill-invariant representation.
    pub fn representation_arguments(&self) -> (Mat3, Vec3, Mat3) {
        let ft = self.f.transpose();
        (ft * self.f, ft * self.d3, ft * self.grad_d3)
    }
}

/// `𝓔, γ, Ψ, Φ` from `F`, `d₃` and `Grad_s d₃` (`Grad_s n⁰ = −b`).
pub fn alt_from_spatial(geom: &NodeGeometry, s: &SpatialJet) -> AltNodeStrain {
    let ft = s.f.transpose();
    let eps = (ft * s.f - geom.proj) * 0.5;
    let gamma = ft * s.d3;
    let psi = ft * s.grad_d3 + geom.b + eps * geom.b;
    let n_cross_b = skew(&geom.normal) * geom.b;
    let phi = ft * (skew(&s.d3) * s.grad_d3) + n_cross_b + eps * n_cross_b;
    AltNodeStrain { eps, gamma, psi, phi }
}

/// `𝓔, γ, Ψ, Φ` from the strain tensors `E^e, K^e`.
pub fn alt_from_strain(geom: &NodeGeometry, s: &NodeStrain) -> AltNodeStrain {
    let et = s.e.transpose();
    let half_ete = et * s.e * 0.5;
    let eps = half_ete + s.e_par.sym();
    let gamma = s.e_normal;
    let shift = half_ete + s.e_par.skew_part();
    let psi = (et + geom.proj) * geom.c * s.k + shift * geom.b;
    let phi = (et + geom.proj) * s.k_par - shift * geom.c * geom.b;
    AltNodeStrain { eps, gamma, psi, phi }
}

/// Both forms of the alternative measures at every node: `(F-form, E/K-form)`.
pub fn alt_strain_forms(cfg: &Configuration, surf: &ReferenceSurface) -> Vec<(AltNodeStrain, AltNodeStrain)> {
    let dirs = DirectorFields::new(cfg);
    (0..surf.len())
        .into_par_iter()
        .map(|node| {
            let geom = &surf.nodes[node];
            let jet = dirs.jet(cfg, surf, node);
            let (strain, _) = node_strain(geom, &cfg.r[node], &jet);
            let spatial = SpatialJet::new(geom, &cfg.r[node], &jet);
            (alt_from_spatial(geom, &spatial), alt_from_strain(geom, &strain))
        })
        .collect()
}

/// Alternative strain measures, stored in the `F`-form after checking that
/// the `E^e/K^e`-form agrees with it.
pub fn alt_strain_measures(
    state: &StrainState,
    cfg: &Configuration,
    surf: &ReferenceSurface,
) -> Result<AltStrainState, KinematicsError> {
    cfg.check_size(surf)?;
    if state.nodes.len() != surf.len() {
        return Err(KinematicsError::SizeMismatch { expected: surf.len(), found: state.nodes.len() });
    }
    let dirs = DirectorFields::new(cfg);
    let mut nodes = Vec::with_capacity(surf.len());
    for (node, strain) in state.nodes.iter().enumerate() {
        let geom = &surf.nodes[node];
        let spatial = SpatialJet::new(geom, &cfg.r[node], &dirs.jet(cfg, surf, node));
        let f_form = alt_from_spatial(geom, &spatial);
        let ek_form = alt_from_strain(geom, strain);
        for (quantity, diff) in f_form.max_abs_difference(&ek_form) {
            let scale = 1.0 + f_form.eps.max_abs().max(f_form.psi.max_abs()).max(f_form.phi.max_abs());
            if !(diff <= FORM_MISMATCH_TOLERANCE * scale) {
                return Err(KinematicsError::FormMismatch { node, quantity, difference: diff });
            }
        }
        nodes.push(f_form);
    }
    Ok(AltStrainState { nodes })
}

/// `(FᵀF, d₃F, FᵀGrad_s d₃)` at every node.
pub fn representation_arguments(cfg: &Configuration, surf: &ReferenceSurface) -> Vec<(Mat3, Vec3, Mat3)> {
    let dirs = DirectorFields::new(cfg);
    (0..surf.len())
        .map(|node| {
            SpatialJet::new(&surf.nodes[node], &cfg.r[node], &dirs.jet(cfg, surf, node)).representation_arguments()
        })
        .collect()
}

/// Measures of the linearized theory for a displacement `u` and a field of
/// small rotations `ψ`:
/// `𝓔 = sym(a Grad_s u)`, `γ = n⁰ Grad_s u + c ψ`,
/// `Ψ = c Grad_s(aψ) + skew(a Grad_s u) b`, `Φ = a Grad_s(aψ) − skew(a Grad_s u) c b`.
pub fn linearized_measures(u: &[Vec3], psi: &[Vec3], surf: &ReferenceSurface) -> AltStrainState {
    let grad_u = surface_gradient(u, surf);
    let tangential_psi: Vec<Vec3> = psi.iter().zip(&surf.nodes).map(|(p, g)| g.proj * *p).collect();
    let grad_apsi = surface_gradient(&tangential_psi, surf);
    let nodes = surf
        .nodes
        .iter()
        .enumerate()
        .map(|(node, g)| {
            let agu = g.proj * grad_u[node];
            let sk = agu.skew_part();
            AltNodeStrain {
                eps: agu.sym(),
                gamma: grad_u[node].transpose() * g.normal + g.c * psi[node],
                psi: g.c * grad_apsi[node] + sk * g.b,
                phi: g.proj * grad_apsi[node] - sk * g.c * g.b,
            }
        })
        .collect();
    AltStrainState { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra3::{exp_so3, orthogonality_residual};
    use crate::fields::{random_configuration, RandomConfigSpec};
    use crate::surface::{build_reference, Chart, Grid};

    fn flat(n: usize) -> ReferenceSurface {
        build_reference(&Chart::Flat, &Grid::unit_square(n)).unwrap()
    }

    #[test]
    fn reference_is_strain_free() {
        for surf in [flat(7), build_reference(&Chart::Cylinder { radius: 0.9 }, &Grid::unit_square(9)).unwrap()] {
            let cfg = Configuration::reference(&surf);
            let state = strain_measures(&cfg, &surf);
            for s in &state.nodes {
                assert!(s.e.max_abs() < 1e-13 && s.k.max_abs() < 1e-12, "{s:?}");
            }
            let alt = alt_strain_measures(&state, &cfg, &surf).unwrap();
            for a in &alt.nodes {
                assert!(a.eps.max_abs() < 1e-13 && a.gamma.max_abs() < 1e-13);
                assert!(a.psi.max_abs() < 1e-12 && a.phi.max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn undeformed_gradient_is_surface_unit_tensor() {
        let surf = flat(5);
        for (f, g) in deformation_gradient(&Configuration::reference(&surf), &surf).iter().zip(&surf.nodes) {
            assert!((*f - g.proj).max_abs() < 1e-14);
        }
    }

    #[test]
    fn in_plane_stretch() {
        let surf = flat(6);
        let lambda = 1.3;
        let mut cfg = Configuration::reference(&surf);
        for (y, g) in cfg.y.iter_mut().zip(&surf.nodes) {
            *y = Vec3::new(lambda * g.y0[0], g.y0[1], 0.0);
        }
        let expected = Vec3::unit(0).outer(&Vec3::unit(0)) * lambda + Vec3::unit(1).outer(&Vec3::unit(1));
        for f in deformation_gradient(&cfg, &surf) {
            assert!((f - expected).max_abs() < 1e-12);
        }
        let state = strain_measures(&cfg, &surf);
        let alt = alt_strain_measures(&state, &cfg, &surf).unwrap();
        let eps = Vec3::unit(0).outer(&Vec3::unit(0)) * (0.5 * (lambda * lambda - 1.0));
        for a in &alt.nodes {
            assert!((a.eps - eps).max_abs() < 1e-12);
        }
    }

    #[test]
    fn rigid_motion_is_strain_free_and_frame_indifferent() {
        let surf = build_reference(&Chart::Cylinder { radius: 1.1 }, &Grid::unit_square(8)).unwrap();
        let rbar = exp_so3(&Vec3::new(0.4, -1.2, 0.7));
        let cbar = Vec3::new(1.0, 2.0, -3.0);
        let rigid = Configuration::reference(&surf).rigidly_moved(&rbar, cbar);
        for (f, g) in deformation_gradient(&rigid, &surf).iter().zip(&surf.nodes) {
            assert!((*f - *rbar.matrix() * g.proj).max_abs() < 1e-12);
        }
        for s in strain_measures(&rigid, &surf).nodes {
            assert!(s.e.max_abs() < 1e-12 && s.k.max_abs() < 1e-11);
        }

        let cfg = random_configuration(&surf, &RandomConfigSpec::default(), 4);
        let a = strain_measures(&cfg, &surf);
        let b = strain_measures(&cfg.rigidly_moved(&rbar, cbar), &surf);
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            assert!((x.e - y.e).max_abs() < 1e-12 && (x.k - y.k).max_abs() < 1e-12);
        }
    }

    #[test]
    fn drill_field_linear_in_x1() {
        // y = y⁰, Q = exp(θ skew(e₃)) with θ = x₁ on the flat plate:
        // E^e = (Qᵀ − 1) a, K^e = e₃ ⊗ e₁.
        let surf = flat(9);
        let mut cfg = Configuration::reference(&surf);
        for (r, g) in cfg.r.iter_mut().zip(&surf.nodes) {
            *r = exp_so3(&Vec3::new(0.0, 0.0, g.x[0]));
        }
        let state = strain_measures(&cfg, &surf);
        for (s, g) in state.nodes.iter().zip(&surf.nodes) {
            let theta = g.x[0];
            let (sn, cs) = theta.sin_cos();
            let e = Mat3([[cs - 1.0, sn, 0.0], [-sn, cs - 1.0, 0.0], [0.0, 0.0, 0.0]]);
            assert!((s.e - e).max_abs() < 1e-12);
            // The drill row comes from a second-order stencil of cos/sin.
            let k = Vec3::unit(2).outer(&Vec3::unit(0));
            assert!((s.k - k).max_abs() < 1e-2, "{:?}", s.k);
        }
    }

    #[test]
    fn tangential_parts_have_zero_normal_row() {
        let surf = build_reference(&Chart::Cylinder { radius: 0.8 }, &Grid::unit_square(7)).unwrap();
        let cfg = random_configuration(&surf, &RandomConfigSpec::default(), 9);
        for (s, g) in strain_measures(&cfg, &surf).nodes.iter().zip(&surf.nodes) {
            assert!((s.e_par.transpose() * g.normal).max_abs() < 1e-13);
            assert!((s.k_par.transpose() * g.normal).max_abs() < 1e-13);
            assert!((s.e_par + g.normal.outer(&s.e_normal) - s.e).max_abs() < 1e-13);
        }
    }

    #[test]
    fn dual_forms_agree_on_random_configurations() {
        for (chart, seed) in [(Chart::Flat, 1), (Chart::Cylinder { radius: 0.7 }, 2), (Chart::Cylinder { radius: 2.0 }, 3)] {
            let surf = build_reference(&chart, &Grid::unit_square(11)).unwrap();
            let cfg = random_configuration(&surf, &RandomConfigSpec::default(), seed);
            for (f, ek) in alt_strain_forms(&cfg, &surf) {
                for (q, d) in f.max_abs_difference(&ek) {
                    assert!(d < 1e-10, "{q}: {d}");
                }
            }
        }
    }

    #[test]
    fn linearized_measures_vanish_for_zero_fields_and_pure_drill() {
        let surf = flat(8);
        let zero = vec![Vec3::ZERO; surf.len()];
        for a in linearized_measures(&zero, &zero, &surf).nodes {
            assert_eq!(a, AltNodeStrain::default());
        }
        let drill: Vec<Vec3> = surf.nodes.iter().map(|g| g.normal * (g.x[0] * 2.0 + g.x[1].sin())).collect();
        for a in linearized_measures(&zero, &drill, &surf).nodes {
            assert!(a.eps.max_abs() < 1e-15 && a.gamma.max_abs() < 1e-15);
            assert!(a.psi.max_abs() < 1e-15 && a.phi.max_abs() < 1e-15);
        }
    }

    #[test]
    fn linearized_measures_are_the_small_amplitude_limit() {
        let surf = flat(9);
        let u: Vec<Vec3> = surf
            .nodes
            .iter()
            .map(|g| Vec3::new((g.x[1] * 2.0).sin(), g.x[0] * g.x[1], (3.0 * g.x[0]).cos()))
            .collect();
        let psi: Vec<Vec3> = surf
            .nodes
            .iter()
            .map(|g| Vec3::new(g.x[0] - 0.5, (g.x[1] * 1.7).cos(), g.x[0] * g.x[1]))
            .collect();
        let lin = linearized_measures(&u, &psi, &surf);
        let error_at = |eps: f64| {
            let cfg = Configuration {
                y: surf.nodes.iter().zip(&u).map(|(g, u)| g.y0 + *u * eps).collect(),
                r: surf.nodes.iter().zip(&psi).map(|(g, p)| exp_so3(&(*p * eps)).compose(&g.q0)).collect(),
            };
            let state = strain_measures(&cfg, &surf);
            let alt = alt_strain_measures(&state, &cfg, &surf).unwrap();
            alt.nodes
                .iter()
                .zip(&lin.nodes)
                .map(|(a, l)| {
                    let scaled = AltNodeStrain {
                        eps: a.eps * (1.0 / eps),
                        gamma: a.gamma * (1.0 / eps),
                        psi: a.psi * (1.0 / eps),
                        phi: a.phi * (1.0 / eps),
                    };
                    scaled.max_abs_difference(l).iter().map(|x| x.1).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let e1 = error_at(1e-2);
        let e2 = error_at(1e-3);
        assert!(e1 < 0.1 && e2 < 1e-2, "{e1} {e2}");
        let ratio = e1 / e2;
        assert!(ratio > 8.0 && ratio < 12.0, "linear convergence expected, ratio {ratio}");
    }

    #[test]
    fn rotations_stay_orthogonal_in_random_fields() {
        let surf = flat(6);
        let cfg = random_configuration(&surf, &RandomConfigSpec::default(), 5);
        assert!(cfg.r.iter().all(|r| orthogonality_residual(r.matrix()) < 1e-12));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn strain_is_unchanged_by_superposed_rigid_motion(
                seed in any::<u64>(),
                w in proptest::array::uniform3(-3.0f64..3.0),
                c in proptest::array::uniform3(-5.0f64..5.0),
                curved in any::<bool>(),
            ) {
                let chart = if curved { Chart::Cylinder { radius: 0.9 } } else { Chart::Flat };
                let surf = build_reference(&chart, &Grid::unit_square(8)).unwrap();
                let cfg = random_configuration(&surf, &RandomConfigSpec::default(), seed);
                let moved = cfg.rigidly_moved(&exp_so3(&Vec3(w)), Vec3(c));
                let (a, b) = (strain_measures(&cfg, &surf), strain_measures(&moved, &surf));
                for (p, q) in a.nodes.iter().zip(&b.nodes) {
                    prop_assert!((p.e - q.e).max_abs() < 1e-12);
                    prop_assert!((p.k - q.k).max_abs() < 1e-12);
                }
            }
        }
    }
}
