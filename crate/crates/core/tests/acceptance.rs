//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{clamped_plate, PlateData};
use shell_core::algebra3::{exp_so3, Vec3};
use shell_core::constitutive::{check_coercivity, coefficients_drill_active, coefficients_drill_free, EngineeringConstants};
use shell_core::kinematics::Configuration;
use shell_core::output::max_deflection;
use shell_core::solver::{minimize, BoundaryConditions, EdgeCondition, EnergyModel, LoadSpec, SolverConfig};
use shell_core::surface::{build_reference, Chart, Edge, Grid, ReferenceSurface};
use shell_core::verify::{run_suite, scaled_strain_energy, Check, Suite, CASES};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome { pass, detail: detail.into() }
    }

    fn and(self, other: Outcome) -> Outcome {
        Outcome::new(self.pass && other.pass, format!("{}; {}", self.detail, other.detail))
    }
}

/// All selected checks pass; reports how many there were and the first failure.
fn checks_pass<'a>(checks: impl IntoIterator<Item = &'a Check>, min_count: usize) -> Outcome {
    let selected: Vec<&Check> = checks.into_iter().collect();
    let failed: Vec<&&Check> = selected.iter().filter(|c| !c.pass).collect();
    let mut detail = format!("{} checks", selected.len());
    if let Some(c) = failed.first() {
        detail += &format!(", {} failed, first {} {} = {:e} (tolerance {:e})", failed.len(), c.case, c.quantity, c.value, c.tolerance);
    }
    Outcome::new(selected.len() >= min_count && failed.is_empty(), detail)
}

fn worst<'a>(checks: impl IntoIterator<Item = &'a Check>) -> f64 {
    checks.into_iter().map(|c| c.value).fold(0.0, f64::max)
}

fn constants() -> EngineeringConstants {
    EngineeringConstants { young: 1.0, poisson: 0.3, thickness: 0.1, alpha_s: 1.0, alpha_t: 1.0, kappa: 5.0 / 6.0 }
}

fn models() -> [(&'static str, EnergyModel); 3] {
    let k = constants();
    [
        ("quadratic_drill_active", EnergyModel::Quadratic(coefficients_drill_active(k).unwrap())),
        ("quadratic_drill_free", EnergyModel::Quadratic(coefficients_drill_free(k).unwrap())),
        ("full_drill_free", EnergyModel::FullDrillFree(k)),
    ]
}

fn square(chart: Chart, n: usize) -> ReferenceSurface {
    build_reference(&chart, &Grid::unit_square(n)).unwrap()
}

fn drill_invariance(all: &[Check]) -> Outcome {
    let drill: Vec<&Check> = all.iter().filter(|c| c.case.starts_with("drill/")).collect();
    let free = drill.iter().copied().filter(|c| c.quantity.starts_with("drill_free"));
    let control: Vec<&Check> = drill.iter().copied().filter(|c| c.quantity.starts_with("drill_active")).collect();
    let smallest_control = control.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let out = checks_pass(drill.iter().copied(), 3 * CASES);
    Outcome::new(
        out.pass && control.len() == CASES,
        format!("{}; drill-free change <= {:.2e}, drill-active change >= {:.2e}", out.detail, worst(free), smallest_control),
    )
}

fn first_integrals(all: &[Check]) -> Outcome {
    let ode: Vec<&Check> = all.iter().filter(|c| c.case.starts_with("ode/")).collect();
    let drift = worst(ode.iter().copied().filter(|c| c.quantity.starts_with("drift_")));
    let order = worst(ode.iter().copied().filter(|c| c.quantity.starts_with("halving_order_deviation")));
    let out = checks_pass(ode.iter().copied(), 4 * CASES);
    Outcome::new(out.pass, format!("{}; max drift {drift:.2e}, max |log2(ratio) - 4| {order:.5}", out.detail))
}

fn coercivity(all: &[Check]) -> Outcome {
    let suite = checks_pass(
        all.iter().filter(|c| {
            ["coercivity/drill_active", "coercivity/drill_free", "coercivity/random_coefficients"].contains(&c.case.as_str())
        }),
        10,
    );
    let k = constants();
    let active = check_coercivity(&coefficients_drill_active(k).unwrap());
    let free = check_coercivity(&coefficients_drill_free(k).unwrap());
    let active_ok = active.inequalities.len() == 8
        && active.inequalities.iter().all(|i| i.margin > 0.0)
        && active.spectrum.min_eigenvalue > 0.0;
    let degenerate = ["alpha3-alpha2", "2beta1+beta2+beta3", "beta4"];
    let free_ok = degenerate.iter().all(|label| {
        free.inequalities.iter().any(|i| i.label == *label && i.margin.abs() <= 1e-14)
    }) && free.spectrum.min_eigenvalue.abs() <= 1e-12;
    suite.and(Outcome::new(
        active_ok && free_ok,
        format!(
            "drill-active min eigenvalue {:.3e}, drill-free min eigenvalue {:.1e}",
            active.spectrum.min_eigenvalue, free.spectrum.min_eigenvalue
        ),
    ))
}

fn constitutive_identities(all: &[Check]) -> Outcome {
    let identity = all.iter().filter(|c| c.case == "coercivity/reduced_form");
    let order = all.iter().find(|c| c.case == "coercivity/remainder").map_or(f64::NAN, |c| c.value);
    let out = checks_pass(all.iter().filter(|c| c.case == "coercivity/reduced_form" || c.case == "coercivity/remainder"), 2);
    Outcome::new(out.pass, format!("{}; identity difference {:.2e}, remainder order {order:.3}", out.detail, worst(identity)))
}

fn dual_forms(all: &[Check]) -> Outcome {
    let dual: Vec<&Check> = all.iter().filter(|c| c.quantity.starts_with("dual_form_difference")).collect();
    let out = checks_pass(dual.iter().copied(), 4 * CASES);
    Outcome::new(out.pass, format!("{}; max difference {:.2e}", out.detail, worst(dual.iter().copied())))
}

fn gradients(all: &[Check]) -> Outcome {
    let grad: Vec<&Check> = all.iter().filter(|c| c.case.starts_with("gradient/")).collect();
    let out = checks_pass(grad.iter().copied(), 3 * CASES);
    Outcome::new(out.pass, format!("{}; max relative error {:.2e}", out.detail, worst(grad.iter().copied())))
}

/// Solve a loaded clamped-cantilever cylinder, then the same problem seen from
/// a rotated frame; the second solution must be the rotated first one.
fn solver_equivariance() -> Outcome {
    let surf = square(Chart::Cylinder { radius: 0.9 }, 10);
    let (_, model) = &models()[0];
    let bc = BoundaryConditions::new(
        &surf,
        [EdgeCondition::CLAMPED, EdgeCondition::Traction, EdgeCondition::Traction, EdgeCondition::Traction],
    );
    let mut loads = LoadSpec::uniform(surf.len(), Vec3::new(0.0, 1e-4, -2e-4), Vec3::ZERO);
    loads.edge_force[1] = Vec3::new(0.0, 0.0, 1e-4);
    let opts = SolverConfig { grad_tol: 1e-10, ..SolverConfig::default() };
    let start = Configuration::reference(&surf);
    let rbar = exp_so3(&Vec3::new(0.7, -0.4, 1.1));
    let a = minimize(&start, &surf, model, &loads, &bc, &opts).unwrap();
    let b = minimize(&start.rigidly_moved(&rbar, Vec3::ZERO), &surf, model, &loads.rotated(&rbar), &bc.rotated(&rbar), &opts).unwrap();
    let moved = a.config.rigidly_moved(&rbar, Vec3::ZERO);
    let scale = max_deflection(&a.config, &surf).max(f64::MIN_POSITIVE);
    let dy = moved.y.iter().zip(&b.config.y).map(|(p, q)| (*p - *q).max_abs()).fold(0.0, f64::max) / scale;
    let dr = moved.r.iter().zip(&b.config.r).map(|(p, q)| (*p.matrix() - *q.matrix()).max_abs()).fold(0.0, f64::max);
    let de = (a.strain_energy - b.strain_energy).abs() / a.strain_energy;
    Outcome::new(
        a.converged() && b.converged() && dy < 1e-6 && dr < 1e-6 && de < 1e-8,
        format!("position difference {dy:.2e} (relative), rotation difference {dr:.2e}, strain energy difference {de:.2e}"),
    )
}

fn frame_indifference(all: &[Check]) -> Outcome {
    let frame: Vec<&Check> = all.iter().filter(|c| c.quantity == "frame_indifference").collect();
    let out = checks_pass(frame.iter().copied(), CASES);
    Outcome::new(out.pass, format!("{}; max strain change {:.2e}", out.detail, worst(frame.iter().copied()))).and(solver_equivariance())
}

fn linearized_consistency() -> Outcome {
    const N: usize = 48;
    const PRESSURE: f64 = 1e-5;
    let k = constants();
    let surf = square(Chart::Flat, N);
    let bc = BoundaryConditions::clamped(&surf, &Edge::ALL);
    let loads = LoadSpec::uniform(surf.len(), Vec3::new(0.0, 0.0, PRESSURE), Vec3::ZERO);
    let start = Instant::now();
    let r = minimize(&Configuration::reference(&surf), &surf, &EnergyModel::FullDrillFree(k), &loads, &bc, &SolverConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let shell = max_deflection(&r.config, &surf);
    let strain = r.strain.max_membrane_norm();
    let oracle = clamped_plate(&PlateData {
        n: N,
        young: k.young,
        poisson: k.poisson,
        thickness: k.thickness,
        shear_factor: k.kappa,
        pressure: PRESSURE,
    });
    let reference = oracle.max_deflection();
    let mismatch = (shell - reference).abs() / reference;
    let active = minimize(&Configuration::reference(&surf), &surf, &models()[0].1, &loads, &bc, &SolverConfig::default()).unwrap();
    Outcome::new(
        r.converged() && oracle.residual <= 1e-12 && mismatch < 0.02 && strain < 1e-3 && elapsed < 60.0,
        format!(
            "{N}x{N}: shell {shell:.6e}, oracle {reference:.6e} ({} CG iterations), relative mismatch {:.2e}, max |E^e| {strain:.2e}, {elapsed:.1} s; drill-active coefficients give {:.6e}",
            oracle.iterations,
            mismatch,
            max_deflection(&active.config, &surf)
        ),
    )
}

fn rigid_motions(all: &[Check]) -> Outcome {
    let mut pass = true;
    let mut largest_functional = 0.0f64;
    let mut most_iterations = 0;
    let k = constants();
    for chart in [Chart::Flat, Chart::Cylinder { radius: 0.9 }] {
        let surf = square(chart, 12);
        let bc = BoundaryConditions::clamped(&surf, &Edge::ALL);
        for (_, model) in models() {
            let r = minimize(&Configuration::reference(&surf), &surf, &model, &LoadSpec::none(surf.len()), &bc, &SolverConfig::default()).unwrap();
            let scale = (k.stretching_stiffness() + k.bending_stiffness()) * surf.total_area();
            pass &= r.converged() && r.functional.abs() / scale < 1e-12 && r.iterations <= 1;
            largest_functional = largest_functional.max(r.functional.abs() / scale);
            most_iterations = most_iterations.max(r.iterations);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut largest_energy = 0.0f64;
    for i in 0..CASES {
        let chart = if i % 2 == 0 { Chart::Cylinder { radius: 0.9 } } else { Chart::Flat };
        let surf = square(chart, 12);
        let w = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let shift = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let moved = Configuration::reference(&surf).rigidly_moved(&exp_so3(&w), shift);
        for (_, model) in models() {
            largest_energy = largest_energy.max(scaled_strain_energy(&moved, &surf, &model).abs());
        }
    }
    pass &= largest_energy < 1e-12;
    let suite = checks_pass(all.iter().filter(|c| c.quantity.starts_with("rigid_motion_energy")), 2 * CASES);
    Outcome::new(
        pass,
        format!("zero load: scaled |I| <= {largest_functional:.2e}, at most {most_iterations} iterations; rigid-motion scaled energy <= {largest_energy:.2e}"),
    )
    .and(suite)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = |threads: usize| {
        let path = dir.path().join(format!("report-{threads}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_shell"))
            .args(["--threads", &threads.to_string(), "verify", "--suite", "all", "--seed", &SEED.to_string(), "--out"])
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        (status.code(), std::fs::read(&path).unwrap_or_default())
    };
    let (code1, one) = report(1);
    let (code8, eight) = report(8);
    Outcome::new(
        code1 == Some(0) && code8 == Some(0) && !one.is_empty() && one == eight,
        format!("exit codes {code1:?}/{code8:?}, {} bytes, identical: {}", one.len(), one == eight),
    )
}

fn main() {
    let all = run_suite(Suite::All, SEED);
    let criteria: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("drill invariance", &|| drill_invariance(&all)),
        ("first integrals", &|| first_integrals(&all)),
        ("coercivity", &|| coercivity(&all)),
        ("constitutive identities", &|| constitutive_identities(&all)),
        ("dual-form strain equivalence", &|| dual_forms(&all)),
        ("gradient correctness", &|| gradients(&all)),
        ("frame indifference", &|| frame_indifference(&all)),
        ("linearized consistency", &linearized_consistency),
        ("rigid motions and reference state", &|| rigid_motions(&all)),
        ("determinism", &determinism),
    ];
    let mut failures = 0;
    for (number, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        println!("{:>2} {:<34} {}  {}", number + 1, name, if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
        if !outcome.pass {
            failures += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
