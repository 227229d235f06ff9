//! Seeded verification suites. Each check records a measured value, its
//! tolerance and a verdict; cases run in parallel and are reported in a
//! fixed order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra3::{exp_so3, Vec3};
use crate::constitutive::{
    check_coercivity, coefficients_drill_active, coefficients_drill_free, energy_drill_free, energy_quadratic,
    energy_reduced_quadratic, flat_tensor, quadratic_density, reduced_quadratic_density, EngineeringConstants,
    MaterialModel,
};
use crate::fields::{random_configuration, RandomConfigSpec};
use crate::invariance::{
    drill_invariance_report, first_integral_drift, first_integral_rank, ode_flow, representation_check, trace_drift,
    DrillField, FrozenGeometry, OdeState,
};
use crate::kinematics::{alt_strain_forms, alt_strain_measures, strain_measures, Configuration, NodeStrain};
use crate::solver::{energy_gradient, retract, strain_energy, total_energy, BoundaryConditions, EnergyModel, Gradient, LoadSpec};
use crate::surface::{build_reference, Chart, Edge, Grid, ReferenceSurface};

/// Random configurations, drill fields and ODE states per suite.
pub const CASES: usize = 20;
pub const DRILL_FREE_TOLERANCE: f64 = 1e-9;
pub const DRILL_ACTIVE_MIN_CHANGE: f64 = 1e-3;
pub const DRIFT_TOLERANCE: f64 = 1e-8;
pub const ODE_STEPS: usize = 512;
pub const DUAL_FORM_TOLERANCE: f64 = 1e-10;
pub const FRAME_TOLERANCE: f64 = 1e-12;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_GRID: usize = 16;
pub const REMAINDER_MIN_ORDER: f64 = 2.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Drill,
    Ode,
    Representation,
    Coercivity,
    Gradient,
    All,
}

impl Suite {
    pub const SINGLE: [Suite; 5] = [Suite::Drill, Suite::Ode, Suite::Representation, Suite::Coercivity, Suite::Gradient];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Drill => "drill",
            Suite::Ode => "ode",
            Suite::Representation => "representation",
            Suite::Coercivity => "coercivity",
            Suite::Gradient => "gradient",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Suite, String> {
        Suite::SINGLE
            .iter()
            .chain(&[Suite::All])
            .find(|suite| suite.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown suite `{s}` (expected drill, ode, representation, coercivity, gradient or all)"))
    }
}

/// One line of a verification report. Quantities ending in `_exceeds` are
/// lower bounds (pass when `value > tolerance`); all others pass when
/// `value ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(case: &str, quantity: &str, value: f64, tolerance: f64) -> Check {
        Check { case: case.into(), quantity: quantity.into(), value, tolerance, pass: value <= tolerance }
    }

    pub fn exceeds(case: &str, quantity: &str, value: f64, tolerance: f64) -> Check {
        Check { case: case.into(), quantity: format!("{quantity}_exceeds"), value, tolerance, pass: value > tolerance }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.pass)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of case `index` of `suite` derived from the run seed.
pub fn case_seed(seed: u64, suite: Suite, index: usize) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(((suite as u64) << 32) | index as u64))
}

/// `E = 1`, `ν = 0.3`, `h = 0.1`, unit shear factors, `κ = 5/6`.
pub fn reference_constants() -> EngineeringConstants {
    EngineeringConstants { young: 1.0, poisson: 0.3, thickness: 0.1, alpha_s: 1.0, alpha_t: 1.0, kappa: 5.0 / 6.0 }
}

fn surface(index: usize, n: usize) -> ReferenceSurface {
    let chart = if index % 2 == 0 { Chart::Cylinder { radius: 0.9 } } else { Chart::Flat };
    build_reference(&chart, &Grid::unit_square(n)).expect("built-in charts are valid")
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Drill => drill_suite(seed),
        Suite::Ode => ode_suite(seed),
        Suite::Representation => representation_suite(seed),
        Suite::Coercivity => coercivity_suite(seed),
        Suite::Gradient => gradient_suite(seed),
        Suite::All => Suite::SINGLE.iter().flat_map(|s| run_suite(*s, seed)).collect(),
    }
}

fn parallel_cases<F>(n: usize, f: F) -> Vec<Check>
where
    F: Fn(usize) -> Vec<Check> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

fn drill_suite(seed: u64) -> Vec<Check> {
    let model = coefficients_drill_free(reference_constants()).expect("reference constants are valid");
    let mut checks = parallel_cases(CASES, |i| {
        let s = case_seed(seed, Suite::Drill, i);
        let surf = surface(i, 16);
        let cfg = random_configuration(&surf, &RandomConfigSpec::default(), s);
        let case = format!("drill/{i:02}");
        match drill_invariance_report(&cfg, &surf, &model, &DrillField::random(splitmix(s))) {
            Ok(r) => vec![
                Check::at_most(&case, "drill_free_relative_change", r.delta_free, DRILL_FREE_TOLERANCE),
                Check::at_most(&case, "drill_free_strain_form_relative_change", r.delta_free_strain_form, DRILL_FREE_TOLERANCE),
                Check::exceeds(&case, "drill_active_relative_change", r.delta_active, DRILL_ACTIVE_MIN_CHANGE),
            ],
            Err(e) => vec![Check::at_most(&case, &format!("error: {e}"), f64::NAN, 0.0)],
        }
    });
    let surf = surface(0, 16);
    let reference = Configuration::reference(&surf);
    let r = drill_invariance_report(&reference, &surf, &model, &DrillField::random(seed));
    let value = r.map(|r| r.delta_free).unwrap_or(f64::NAN);
    checks.push(Check::at_most("drill/reference", "drill_free_relative_change", value, DRILL_FREE_TOLERANCE));
    checks
}

fn ode_geometry(rng: &mut ChaCha8Rng) -> FrozenGeometry {
    let surf = surface(0, 12);
    FrozenGeometry::from_node(&surf.nodes[rng.gen_range(0..surf.len())])
}

fn ode_suite(seed: u64) -> Vec<Check> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut checks = parallel_cases(CASES, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, Suite::Ode, i));
        let g = ode_geometry(&mut rng);
        let z: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = OdeState { e: g.tensor(&z[..6]), k: g.tensor(&z[6..]) };
        let case = format!("ode/{i:02}");
        let (fine, coarse) = match (ode_flow(&x, &g, two_pi, ODE_STEPS), ode_flow(&x, &g, two_pi, ODE_STEPS / 2)) {
            (Ok(f), Ok(c)) => (f, c),
            _ => return vec![Check::at_most(&case, "integration_error", f64::NAN, 0.0)],
        };
        let d = first_integral_drift(&fine, &g);
        let dc = first_integral_drift(&coarse, &g);
        let mut out: Vec<Check> = ["stretch", "normal_strain", "normal_curvature", "coupling"]
            .iter()
            .zip(d)
            .map(|(name, v)| Check::at_most(&case, &format!("drift_{name}"), v, DRIFT_TOLERANCE))
            .collect();
        // Step-halving ratio r within [8, 32] ⇔ |log₂ r − 4| ≤ 1.
        for (k, name) in [(0, "stretch"), (3, "coupling")] {
            let order = ((dc[k] / d[k]).log2() - 4.0).abs();
            out.push(Check::at_most(&case, &format!("halving_order_deviation_{name}"), order, 1.0));
        }
        out.push(Check::exceeds(&case, "trace_drift_control", trace_drift(&fine), 1e-3));
        out
    });
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, Suite::Ode, CASES));
    let g = ode_geometry(&mut rng);
    let z: [f64; 12] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let r = first_integral_rank(&z, &g);
    checks.push(Check::exceeds("ode/rank", "first_integral_rank", r.rank as f64, 10.5));
    checks.push(Check::exceeds("ode/rank", "first_integral_rank_without_normal_curvature", r.rank_without_normal_curvature as f64, 8.5));
    checks
}

fn representation_suite(seed: u64) -> Vec<Check> {
    let active = coefficients_drill_active(reference_constants()).expect("reference constants are valid");
    let free = coefficients_drill_free(reference_constants()).expect("reference constants are valid");
    parallel_cases(CASES, |i| {
        let s = case_seed(seed, Suite::Representation, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let surf = surface(i, 12);
        let cfg = random_configuration(&surf, &RandomConfigSpec::default(), s);
        let case = format!("representation/{i:02}");
        let r = representation_check(&cfg, &surf, &DrillField::random(splitmix(s)));
        let mut out = vec![
            Check::at_most(&case, "representation_argument_change", r.argument_change, DUAL_FORM_TOLERANCE),
            Check::exceeds(&case, "strain_change_control", r.strain_change, 1e-3),
        ];
        let mut dual = [0.0f64; 4];
        for (f, ek) in alt_strain_forms(&cfg, &surf) {
            for (slot, (_, d)) in f.max_abs_difference(&ek).iter().enumerate() {
                dual[slot] = dual[slot].max(*d);
            }
        }
        for (name, d) in ["eps", "gamma", "psi", "phi"].iter().zip(dual) {
            out.push(Check::at_most(&case, &format!("dual_form_difference_{name}"), d, DUAL_FORM_TOLERANCE));
        }
        let w = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let shift = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let rbar = exp_so3(&w);
        let (a, b) = (strain_measures(&cfg, &surf), strain_measures(&cfg.rigidly_moved(&rbar, shift), &surf));
        let frame = a
            .nodes
            .iter()
            .zip(&b.nodes)
            .map(|(p, q)| (p.e - q.e).max_abs().max((p.k - q.k).max_abs()))
            .fold(0.0, f64::max);
        out.push(Check::at_most(&case, "frame_indifference", frame, FRAME_TOLERANCE));
        let rigid = Configuration::reference(&surf).rigidly_moved(&rbar, shift);
        let k = reference_constants();
        let scale = (k.stretching_stiffness() + k.bending_stiffness()) * surf.total_area();
        let state = strain_measures(&rigid, &surf);
        let quadratic = energy_quadratic(&state, &active, &surf).total;
        let full = alt_strain_measures(&state, &rigid, &surf)
            .ok()
            .and_then(|alt| energy_drill_free(&alt, &free, &surf).ok())
            .map_or(f64::NAN, |e| e.total);
        out.push(Check::at_most(&case, "rigid_motion_energy_drill_active", quadratic.abs() / scale, FRAME_TOLERANCE));
        out.push(Check::at_most(&case, "rigid_motion_energy_drill_free", full.abs() / scale, FRAME_TOLERANCE));
        out
    })
}

fn random_strain(rng: &mut ChaCha8Rng) -> [f64; 12] {
    std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
}

fn coercivity_suite(seed: u64) -> Vec<Check> {
    let k = reference_constants();
    let mut out = Vec::new();
    let active = check_coercivity(&coefficients_drill_active(k).expect("reference constants are valid"));
    for i in &active.inequalities {
        out.push(Check::exceeds("coercivity/drill_active", &format!("margin {}", i.label), i.margin, 0.0));
    }
    out.push(Check::exceeds("coercivity/drill_active", "min_eigenvalue", active.spectrum.min_eigenvalue, 0.0));
    let free = check_coercivity(&coefficients_drill_free(k).expect("reference constants are valid"));
    for i in &free.inequalities {
        if i.holds {
            out.push(Check::exceeds("coercivity/drill_free", &format!("margin {}", i.label), i.margin, 0.0));
        } else {
            out.push(Check::at_most("coercivity/drill_free", &format!("abs margin {}", i.label), i.margin.abs(), 1e-14));
        }
    }
    out.push(Check::at_most("coercivity/drill_free", "abs_min_eigenvalue", free.spectrum.min_eigenvalue.abs(), 1e-12));
    out.push(Check::exceeds("coercivity/drill_free", "null_directions", free.spectrum.null_directions.len() as f64, 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, Suite::Coercivity, 0));
    let disagreements = (0..1000)
        .filter(|_| {
            let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let b: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            !check_coercivity(&MaterialModel::custom(a, b)).consistent
        })
        .count();
    out.push(Check::at_most("coercivity/random_coefficients", "verdict_disagreements", disagreements as f64, 0.0));

    let m = coefficients_drill_free(k).expect("reference constants are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, Suite::Coercivity, 1));
    let n0 = Vec3::unit(2);
    let identity = (0..1000)
        .map(|_| {
            let z = random_strain(&mut rng);
            let (e, kk) = (flat_tensor(&z[..6]), flat_tensor(&z[6..]));
            let a = reduced_quadratic_density(&k, &NodeStrain::new(e, kk, &n0));
            let b = quadratic_density(&m, &n0, &e, &kk);
            (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most("coercivity/reduced_form", "max_relative_difference", identity, 1e-12));
    out.push(Check::exceeds("coercivity/remainder", "observed_order", remainder_order(case_seed(seed, Suite::Coercivity, 2)), REMAINDER_MIN_ORDER));
    out
}

/// Smallest observed order of `energy_drill_free − reduced quadratic` over
/// `ε ∈ {1e-1, 1e-2, 1e-3}` on a scaled random configuration.
pub fn remainder_order(seed: u64) -> f64 {
    let surf = surface(0, 9);
    let m = coefficients_drill_free(reference_constants()).expect("reference constants are valid");
    let base = random_configuration(&surf, &RandomConfigSpec { displacement: 1.0, rotation: 1.0, modes: 4 }, seed);
    let remainder = |eps: f64| -> f64 {
        let cfg = Configuration {
            y: surf.nodes.iter().zip(&base.y).map(|(g, y)| g.y0 + (*y - g.y0) * eps).collect(),
            r: base
                .r
                .iter()
                .zip(&surf.nodes)
                .map(|(r, g)| {
                    let w = crate::algebra3::log_so3_unchecked(&r.compose(&g.q0.transpose()));
                    exp_so3(&(w * eps)).compose(&g.q0)
                })
                .collect(),
        };
        let state = strain_measures(&cfg, &surf);
        let full = alt_strain_measures(&state, &cfg, &surf)
            .ok()
            .and_then(|alt| energy_drill_free(&alt, &m, &surf).ok())
            .map_or(f64::NAN, |e| e.total);
        let reduced = energy_reduced_quadratic(&state, &m, &surf).map_or(f64::NAN, |e| e.total);
        full - reduced
    };
    let r: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&e| remainder(e)).collect();
    (r[0] / r[1]).abs().log10().min((r[1] / r[2]).abs().log10())
}

pub const FD_STEP: f64 = 1e-5;

/// Fourth-order central difference `[f(−2t) − 8f(−t) + 8f(t) − f(2t)] / 12t`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, t: f64) -> f64 {
    (f(-2.0 * t) - 8.0 * f(-t) + 8.0 * f(t) - f(2.0 * t)) / (12.0 * t)
}

/// Loaded, partly clamped case used for gradient checks.
pub fn gradient_case(seed: u64) -> (ReferenceSurface, Configuration, LoadSpec, BoundaryConditions) {
    let surf = surface(0, GRADIENT_GRID);
    let bc = BoundaryConditions::clamped(&surf, &[Edge::West]);
    let cfg = bc.impose(&random_configuration(&surf, &RandomConfigSpec::default(), seed));
    let mut loads = LoadSpec::uniform(surf.len(), Vec3::new(0.1, 0.2, -0.3), Vec3::new(0.05, -0.02, 0.07));
    loads.edge_force[1] = Vec3::new(0.2, 0.0, 0.1);
    loads.edge_director_couple[3] = Vec3::new(0.0, 0.3, 0.0);
    (surf, cfg, loads, bc)
}

fn gradient_suite(seed: u64) -> Vec<Check> {
    let k = reference_constants();
    let models = [
        ("quadratic_drill_active", EnergyModel::Quadratic(coefficients_drill_active(k).expect("valid"))),
        ("quadratic_drill_free", EnergyModel::Quadratic(coefficients_drill_free(k).expect("valid"))),
        ("full_drill_free", EnergyModel::FullDrillFree(k)),
    ];
    let (surf, cfg, loads, bc) = gradient_case(case_seed(seed, Suite::Gradient, 0));
    let gradients: Vec<Gradient> = models.iter().map(|(_, m)| energy_gradient(&cfg, &surf, m, &loads, &bc)).collect();
    parallel_cases(models.len() * CASES, |job| {
        let (mi, i) = (job / CASES, job % CASES);
        let (name, model) = &models[mi];
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, Suite::Gradient, 1 + i));
        let mut d = Gradient::zeros(surf.len());
        for node in (0..surf.len()).filter(|&n| !bc.fixed[n]) {
            d.g_y[node] = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            d.g_w[node] = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let f = |t: f64| total_energy(&retract(&cfg, &d, t), &surf, model, &loads, &bc);
        let fd = central_difference(f, FD_STEP);
        let analytic = gradients[mi].dot(&d);
        let error = (fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE);
        vec![Check::at_most(&format!("gradient/{name}/{i:02}"), "relative_error", error, GRADIENT_TOLERANCE)]
    })
}

/// Strain energy of `cfg` scaled by `(C + D)·area` of the reference constants.
pub fn scaled_strain_energy(cfg: &Configuration, surf: &ReferenceSurface, model: &EnergyModel) -> f64 {
    let k = reference_constants();
    strain_energy(cfg, surf, model) / ((k.stretching_stiffness() + k.bending_stiffness()) * surf.total_area())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::SINGLE.iter().chain(&[Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn case_seeds_differ() {
        let a = case_seed(7, Suite::Drill, 0);
        assert_ne!(a, case_seed(7, Suite::Drill, 1));
        assert_ne!(a, case_seed(7, Suite::Ode, 0));
        assert_ne!(a, case_seed(8, Suite::Drill, 0));
        assert_eq!(a, case_seed(7, Suite::Drill, 0));
    }

    #[test]
    fn check_directions() {
        assert!(Check::at_most("c", "q", 1.0, 1.0).pass);
        assert!(!Check::at_most("c", "q", f64::NAN, 1.0).pass);
        let e = Check::exceeds("c", "q", 1.0, 1.0);
        assert!(!e.pass && e.quantity == "q_exceeds");
        assert!(!all_pass(&[]));
    }

    #[test]
    fn coercivity_suite_passes() {
        let checks = run_suite(Suite::Coercivity, 1);
        assert!(all_pass(&checks), "{checks:#?}");
    }
}
