//! Case files: reference surface, material, loads, boundary data and solver
//! options, read from JSON with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra3::Vec3;
use crate::constitutive::{
    coefficients_drill_active, coefficients_drill_free, ConstitutiveError, EngineeringConstants, MaterialModel,
};
use crate::fields::{random_configuration, RandomConfigSpec};
use crate::kinematics::Configuration;
use crate::solver::{BoundaryConditions, EdgeCondition, EnergyModel, LoadSpec, ModelKind, SolverConfig, SolverError};
use crate::surface::{build_reference_with_floor, Chart, Edge, Grid, ReferenceSurface, SurfaceError, DEFAULT_METRIC_FLOOR};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Material(#[from] ConstitutiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Flat,
    Cylinder { radius: f64 },
    /// CSV file, relative paths resolved against the config file.
    Tabulated { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "unit_interval")]
    pub x1: [f64; 2],
    #[serde(default = "unit_interval")]
    pub x2: [f64; 2],
    #[serde(default = "metric_floor")]
    pub metric_floor: f64,
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn metric_floor() -> f64 {
    DEFAULT_METRIC_FLOOR
}

fn one() -> f64 {
    1.0
}

fn five_sixths() -> f64 {
    5.0 / 6.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    Engineering {
        young: f64,
        poisson: f64,
        thickness: f64,
        #[serde(default = "one")]
        alpha_s: f64,
        #[serde(default = "one")]
        alpha_t: f64,
        #[serde(default = "five_sixths")]
        kappa: f64,
        /// Free-form note on where the constants come from.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<String>,
    },
    Coefficients {
        alpha: [f64; 4],
        beta: [f64; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<String>,
    },
}

impl MaterialSpec {
    pub fn constants(&self) -> Option<EngineeringConstants> {
        match *self {
            MaterialSpec::Engineering { young, poisson, thickness, alpha_s, alpha_t, kappa, .. } => {
                Some(EngineeringConstants { young, poisson, thickness, alpha_s, alpha_t, kappa })
            }
            MaterialSpec::Coefficients { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadsSpec {
    /// Surface force per unit reference area.
    #[serde(default)]
    pub force: Vec3,
    /// Dead director couple `c̃`, potential `c̃·d₃`.
    #[serde(default)]
    pub director_couple: Vec3,
}

/// Boundary data for one edge; edge loads can only be given on traction edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgeSpec {
    Traction {
        #[serde(default)]
        force: Vec3,
        #[serde(default)]
        director_couple: Vec3,
    },
    /// `y* = R̄y⁰ + t`, `R* = R̄Q⁰`; both default to the reference values.
    Dirichlet {
        #[serde(default)]
        rotation: Vec3,
        #[serde(default)]
        translation: Vec3,
    },
}

impl Default for EdgeSpec {
    fn default() -> Self {
        EdgeSpec::Traction { force: Vec3::ZERO, director_couple: Vec3::ZERO }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub west: EdgeSpec,
    #[serde(default)]
    pub east: EdgeSpec,
    #[serde(default)]
    pub south: EdgeSpec,
    #[serde(default)]
    pub north: EdgeSpec,
}

impl BoundarySpec {
    pub fn edge(&self, edge: Edge) -> &EdgeSpec {
        match edge {
            Edge::West => &self.west,
            Edge::East => &self.east,
            Edge::South => &self.south,
            Edge::North => &self.north,
        }
    }
}

/// Random smooth perturbation of the reference state used as initial guess.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub seed: u64,
    #[serde(default)]
    pub displacement: f64,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    5
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub chart: ChartSpec,
    pub grid: GridSpec,
    pub material: MaterialSpec,
    #[serde(default)]
    pub loads: LoadsSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A case ready to be handed to the minimizer.
#[derive(Clone, Debug)]
pub struct Case {
    pub surface: ReferenceSurface,
    pub model: EnergyModel,
    pub loads: LoadSpec,
    pub bc: BoundaryConditions,
    pub initial: Configuration,
    pub options: SolverConfig,
}

impl CaseConfig {
    pub fn from_json(text: &str) -> Result<CaseConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<CaseConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        CaseConfig::from_json(&text)
    }

    pub fn chart(&self, base_dir: &Path) -> Result<Chart, ConfigError> {
        Ok(match &self.chart {
            ChartSpec::Flat => Chart::Flat,
            ChartSpec::Cylinder { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(ConfigError::Invalid(format!("cylinder radius must be positive, got {radius}")));
                }
                Chart::Cylinder { radius: *radius }
            }
            ChartSpec::Tabulated { path } => Chart::read_tabulated(&base_dir.join(path))?,
        })
    }

    pub fn surface(&self, base_dir: &Path) -> Result<ReferenceSurface, ConfigError> {
        let g = &self.grid;
        let grid = Grid::new(g.n1, g.n2, g.x1, g.x2)?;
        Ok(build_reference_with_floor(&self.chart(base_dir)?, &grid, g.metric_floor)?)
    }

    /// Energy model for `kind` with this case's material.
    pub fn energy_model(&self, kind: ModelKind) -> Result<EnergyModel, ConfigError> {
        let needs_constants = || {
            ConfigError::Invalid(format!("energy model {kind:?} needs engineering constants, not raw coefficients"))
        };
        Ok(match kind {
            ModelKind::QuadraticDrillActive => {
                EnergyModel::Quadratic(coefficients_drill_active(self.material.constants().ok_or_else(needs_constants)?)?)
            }
            ModelKind::QuadraticDrillFree => {
                EnergyModel::Quadratic(coefficients_drill_free(self.material.constants().ok_or_else(needs_constants)?)?)
            }
            ModelKind::FullDrillFree => {
                let k = self.material.constants().ok_or_else(needs_constants)?;
                k.validate()?;
                EnergyModel::FullDrillFree(k)
            }
            ModelKind::QuadraticCustom => match self.material {
                MaterialSpec::Coefficients { alpha, beta, .. } => {
                    if alpha.iter().chain(&beta).any(|c| !c.is_finite()) {
                        return Err(ConfigError::Invalid("coefficients must be finite".into()));
                    }
                    EnergyModel::Quadratic(MaterialModel::custom(alpha, beta))
                }
                MaterialSpec::Engineering { .. } => {
                    return Err(ConfigError::Invalid("energy model quadratic_custom needs material type \"coefficients\"".into()))
                }
            },
        })
    }

    pub fn load_spec(&self, surf: &ReferenceSurface) -> LoadSpec {
        let mut loads = LoadSpec::uniform(surf.len(), self.loads.force, self.loads.director_couple);
        for (slot, edge) in Edge::ALL.iter().enumerate() {
            if let EdgeSpec::Traction { force, director_couple } = *self.boundary.edge(*edge) {
                loads.edge_force[slot] = force;
                loads.edge_director_couple[slot] = director_couple;
            }
        }
        loads
    }

    pub fn boundary_conditions(&self, surf: &ReferenceSurface) -> BoundaryConditions {
        let edges = Edge::ALL.map(|e| match *self.boundary.edge(e) {
            EdgeSpec::Traction { .. } => EdgeCondition::Traction,
            EdgeSpec::Dirichlet { rotation, translation } => EdgeCondition::Dirichlet { rotation, translation },
        });
        BoundaryConditions::new(surf, edges)
    }

    fn check_finite(&self) -> Result<(), ConfigError> {
        let mut vectors = vec![("loads.force", self.loads.force), ("loads.director_couple", self.loads.director_couple)];
        for (edge, name) in Edge::ALL.iter().zip(["west", "east", "south", "north"]) {
            let (a, b) = match *self.boundary.edge(*edge) {
                EdgeSpec::Traction { force, director_couple } => (force, director_couple),
                EdgeSpec::Dirichlet { rotation, translation } => (rotation, translation),
            };
            vectors.push((name, a));
            vectors.push((name, b));
        }
        match vectors.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(ConfigError::Invalid(format!("non-finite vector in {name}"))),
            None => Ok(()),
        }
    }

    pub fn build(&self, base_dir: &Path) -> Result<Case, ConfigError> {
        self.build_with(base_dir, self.solver.energy_model)
    }

    /// As [`CaseConfig::build`] with the energy model replaced by `kind`.
    pub fn build_with(&self, base_dir: &Path, kind: ModelKind) -> Result<Case, ConfigError> {
        self.solver.validate()?;
        self.check_finite()?;
        let model = self.energy_model(kind)?;
        let surface = self.surface(base_dir)?;
        let initial = match self.initial {
            None => Configuration::reference(&surface),
            Some(init) => {
                if !(init.displacement.is_finite() && init.rotation.is_finite()) {
                    return Err(ConfigError::Invalid("initial perturbation amplitudes must be finite".into()));
                }
                let spec = RandomConfigSpec { displacement: init.displacement, rotation: init.rotation, modes: init.modes };
                random_configuration(&surface, &spec, init.seed)
            }
        };
        Ok(Case {
            loads: self.load_spec(&surface),
            bc: self.boundary_conditions(&surface),
            initial,
            model,
            options: SolverConfig { energy_model: kind, ..self.solver },
            surface,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLATE: &str = r#"{
        "chart": {"type": "flat"},
        "grid": {"n1": 6, "n2": 5},
        "material": {"type": "engineering", "young": 1.0, "poisson": 0.3, "thickness": 0.1},
        "loads": {"force": [0.0, 0.0, 1e-4]},
        "boundary": {"west": {"type": "dirichlet"}, "east": {"type": "traction", "force": [1e-3, 0.0, 0.0]}}
    }"#;

    #[test]
    fn parses_minimal_plate() {
        let c = CaseConfig::from_json(PLATE).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.boundary.south, EdgeSpec::default());
        let case = c.build(Path::new(".")).unwrap();
        assert_eq!(case.surface.len(), 30);
        assert!(case.bc.fixed[case.surface.grid.index(0, 3)]);
        assert!(!case.bc.fixed[case.surface.grid.index(1, 3)]);
        assert_eq!(case.loads.edge_force[1], Vec3::new(1e-3, 0.0, 0.0));
        assert!(matches!(case.model, EnergyModel::Quadratic(m) if m.set == crate::constitutive::CoefficientSet::DrillActive));
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = PLATE.replace("\"thickness\": 0.1", "\"thickness\": 0.1, \"thicknes\": 2");
        match CaseConfig::from_json(&text) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "material");
                assert!(message.contains("thicknes"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let text = PLATE.replace("\"n2\": 5", "\"n2\": 5, \"n3\": 1");
        assert!(matches!(CaseConfig::from_json(&text), Err(ConfigError::Schema { path, .. }) if path == "grid.n3"));
    }

    #[test]
    fn edge_loads_on_dirichlet_edges_are_rejected() {
        let text = PLATE.replace(r#"{"type": "dirichlet"}"#, r#"{"type": "dirichlet", "force": [1, 0, 0]}"#);
        assert!(matches!(CaseConfig::from_json(&text), Err(ConfigError::Schema { path, .. }) if path == "boundary.west"));
    }

    #[test]
    fn poisson_bound_is_named() {
        let c = CaseConfig::from_json(&PLATE.replace("0.3", "0.7")).unwrap();
        let err = c.build(Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("Poisson bound"), "{err}");
    }

    #[test]
    fn custom_coefficients_need_custom_model() {
        let text = PLATE.replace(
            r#"{"type": "engineering", "young": 1.0, "poisson": 0.3, "thickness": 0.1}"#,
            r#"{"type": "coefficients", "alpha": [1, 0, 1, 1], "beta": [1, 0, 1, 1]}"#,
        );
        let c = CaseConfig::from_json(&text).unwrap();
        assert!(matches!(c.build(Path::new(".")), Err(ConfigError::Invalid(_))));
        let ok = c.build_with(Path::new("."), ModelKind::QuadraticCustom).unwrap();
        assert_eq!(ok.options.energy_model, ModelKind::QuadraticCustom);
    }

    #[test]
    fn round_trips_through_json() {
        let c = CaseConfig::from_json(PLATE).unwrap();
        let again = CaseConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn seeded_initial_guess() {
        let text = PLATE.replace(r#""loads""#, r#""initial": {"seed": 4, "displacement": 0.01}, "loads""#);
        let c = CaseConfig::from_json(&text).unwrap();
        let a = c.build(Path::new(".")).unwrap().initial;
        let b = c.build(Path::new(".")).unwrap().initial;
        assert_eq!(a, b);
        assert_ne!(a, Configuration::reference(&c.surface(Path::new(".")).unwrap()));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec3> {
            proptest::array::uniform3(-1e3f64..1e3).prop_map(Vec3)
        }

        fn edge() -> impl Strategy<Value = EdgeSpec> {
            prop_oneof![
                (vec3(), vec3()).prop_map(|(force, director_couple)| EdgeSpec::Traction { force, director_couple }),
                (vec3(), vec3()).prop_map(|(rotation, translation)| EdgeSpec::Dirichlet { rotation, translation }),
            ]
        }

        proptest! {
            #[test]
            fn config_survives_json(
                young in 1e-3f64..1e6,
                poisson in 0.0f64..0.5,
                thickness in 1e-4f64..1.0,
                kappa in 0.1f64..1.0,
                force in vec3(),
                couple in vec3(),
                edges in proptest::array::uniform4(edge()),
                radius in 0.1f64..10.0,
                grad_tol in 1e-14f64..1e-2,
                seed in proptest::option::of(any::<u64>()),
            ) {
                let c = CaseConfig {
                    chart: ChartSpec::Cylinder { radius },
                    grid: GridSpec { n1: 7, n2: 9, x1: [0.0, 0.5], x2: [-0.25, 0.75], metric_floor: 1e-6 },
                    material: MaterialSpec::Engineering { young, poisson, thickness, alpha_s: 1.0, alpha_t: 1.0, kappa, provenance: None },
                    loads: LoadsSpec { force, director_couple: couple },
                    boundary: BoundarySpec { west: edges[0], east: edges[1], south: edges[2], north: edges[3] },
                    solver: SolverConfig { grad_tol, ..SolverConfig::default() },
                    initial: seed.map(|seed| InitialSpec { seed, displacement: 1e-3, rotation: 1e-2, modes: 3 }),
                    output: OutputSpec::default(),
                };
                let text = crate::output::to_json(&c);
                prop_assert_eq!(CaseConfig::from_json(&text).unwrap(), c);
            }
        }
    }
}
