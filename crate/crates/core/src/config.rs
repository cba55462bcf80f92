//! Run configuration (TOML, or JSON by file extension).

use std::path::Path;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::beam::{BeamParams, Coefficient};
use crate::coupled::{build_coupled, Assembly, AssemblyOptions, CoupledSystem};
use crate::error::{Error, Result};
use crate::hydro::PlatformParams;
use crate::mesh::FluidGeometry;
use crate::timeloop::{ForcingSpec, InitialData, RunSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub depth: f64,
    pub tank_half_length: f64,
    pub hull_half_beam: f64,
    pub hull_draft: f64,
    pub y_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    pub mass: f64,
    pub inertia: f64,
    pub fluid_density: f64,
    pub gravity: f64,
    pub mooring_surge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Constant(f64),
    Table { y: Vec<f64>, values: Vec<f64> },
}

impl CoefficientConfig {
    fn build(&self) -> Result<Coefficient<f64>> {
        match self {
            CoefficientConfig::Constant(c) => Ok(Coefficient::Constant(*c)),
            CoefficientConfig::Table { y, values } => Coefficient::table(y.clone(), values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub y0: f64,
    pub length: f64,
    pub density: CoefficientConfig,
    pub rigidity: CoefficientConfig,
    pub tip_mass: f64,
    pub tip_inertia: f64,
    pub n_elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub dt: f64,
    pub duration: f64,
    pub output_every: usize,
    pub mesh_target_size: f64,
    #[serde(default = "default_tolerance")]
    pub solver_tolerance: f64,
    /// Surface abscissa sampled for `v_probe`.
    pub probe_x: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_tolerance() -> f64 {
    crate::potential::default_tolerance::<f64>()
}

fn default_modes() -> usize {
    20
}

/// Initial state: rigid platform data, a static tip-load beam shape and one surface sloshing shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub q0: [f64; 3],
    #[serde(default)]
    pub q1: [f64; 3],
    /// Elastic tip deflection on top of the rigid motion.
    #[serde(default)]
    pub tip_deflection: f64,
    #[serde(default)]
    pub surface_amplitude: f64,
    #[serde(default = "default_surface_mode")]
    pub surface_mode: usize,
}

fn default_surface_mode() -> usize {
    1
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { q0: [0.0; 3], q1: [0.0; 3], tip_deflection: 0.0, surface_amplitude: 0.0, surface_mode: default_surface_mode() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "names::mesh")]
    pub mesh: String,
    #[serde(default = "names::mesh_quality")]
    pub mesh_quality: String,
    #[serde(default = "names::operators")]
    pub operators: String,
    #[serde(default = "names::timeseries")]
    pub timeseries: String,
    #[serde(default = "names::modes")]
    pub modes: String,
    #[serde(default = "names::verify")]
    pub verify: String,
}

mod names {
    pub fn mesh() -> String {
        "mesh.txt".into()
    }
    pub fn mesh_quality() -> String {
        "mesh_quality.json".into()
    }
    pub fn operators() -> String {
        "operators.json".into()
    }
    pub fn timeseries() -> String {
        "timeseries.csv".into()
    }
    pub fn modes() -> String {
        "modes.csv".into()
    }
    pub fn verify() -> String {
        "verify.txt".into()
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            mesh: names::mesh(),
            mesh_quality: names::mesh_quality(),
            operators: names::operators(),
            timeseries: names::timeseries(),
            modes: names::modes(),
            verify: names::verify(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub platform: PlatformConfig,
    pub beam: BeamConfig,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub forcing: ForcingSpec<f64>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beam.tip_mass > 0.0) || !(self.beam.tip_inertia > 0.0) {
            return Err(Error::Config("beam.tip_mass and beam.tip_inertia must be positive".into()));
        }
        if self.beam.n_elements < 4 {
            return Err(Error::Config("beam.n_elements must be at least 4".into()));
        }
        if self.initial.surface_mode == 0 {
            return Err(Error::Config("initial.surface_mode must be at least 1".into()));
        }
        self.settings().steps()?;
        self.forcing.validate(self.numerics.duration)?;
        self.platform().validate()?;
        self.beam_params()?.validate()?;
        self.geometry()?;
        Ok(())
    }

    /// A zero half-beam and draft describe a tank without a hull.
    pub fn geometry(&self) -> Result<FluidGeometry<f64>> {
        let g = &self.geometry;
        if g.hull_half_beam == 0.0 && g.hull_draft == 0.0 {
            return FluidGeometry::open_tank(g.depth, g.tank_half_length, self.numerics.mesh_target_size);
        }
        FluidGeometry::new(g.depth, g.tank_half_length, g.hull_half_beam, g.hull_draft, g.y_g, self.numerics.mesh_target_size)
    }

    pub fn platform(&self) -> PlatformParams<f64> {
        let p = &self.platform;
        PlatformParams {
            mass: p.mass,
            inertia: p.inertia,
            y_g: self.geometry.y_g,
            fluid_density: p.fluid_density,
            gravity: p.gravity,
            mooring_surge: p.mooring_surge,
        }
    }

    pub fn beam_params(&self) -> Result<BeamParams<f64>> {
        let b = &self.beam;
        Ok(BeamParams {
            y0: b.y0,
            length: b.length,
            density: b.density.build()?,
            rigidity: b.rigidity.build()?,
            tip_mass: b.tip_mass,
            tip_inertia: b.tip_inertia,
            n_elements: b.n_elements,
        })
    }

    pub fn settings(&self) -> RunSettings<f64> {
        let n = &self.numerics;
        RunSettings { dt: n.dt, duration: n.duration, output_every: n.output_every, probe_x: n.probe_x }
    }

    pub fn assemble(&self, options: AssemblyOptions) -> Result<Assembly<f64>> {
        build_coupled(&self.geometry()?, &self.platform(), &self.beam_params()?, options, self.numerics.solver_tolerance)
    }

    /// Reduced initial data for an assembled system.
    pub fn initial_data(&self, sys: &CoupledSystem<f64>) -> Result<InitialData<f64>> {
        initial_from(&self.initial, self.geometry.tank_half_length, sys)
    }
}

/// Static tip-load shape of a uniform cantilever, unit tip deflection, at height `s` above the clamp.
fn tip_load_shape(s: f64, length: f64) -> (f64, f64) {
    let l3 = length.powi(3);
    let w = (3.0 * length * s * s - s.powi(3)) / (2.0 * l3);
    let dw = (6.0 * length * s - 3.0 * s * s) / (2.0 * l3);
    (w, dw)
}

pub fn initial_from(init: &InitialConfig, tank_half_length: f64, sys: &CoupledSystem<f64>) -> Result<InitialData<f64>> {
    let q0 = Vector3::from(init.q0);
    let q1 = Vector3::from(init.q1);
    let beam = &sys.beam;
    let y0 = beam.params.y0;
    let length = beam.params.length;
    let mut w0 = beam.rigid_field(&q0, sys.y_g);
    for (k, &y) in beam.nodes.iter().enumerate() {
        let (w, dw) = tip_load_shape(y - y0, length);
        w0[2 * k] += init.tip_deflection * w;
        w0[2 * k + 1] += init.tip_deflection * dw;
    }
    let w1 = beam.rigid_field(&q1, sys.y_g);
    let k = init.surface_mode as f64 * std::f64::consts::PI / (2.0 * tank_half_length);
    let v0 = DVector::from_iterator(
        sys.surface_x.len(),
        sys.surface_x.iter().map(|&x| init.surface_amplitude * (k * (x + tank_half_length)).cos()),
    );
    let v1 = DVector::zeros(sys.surface_x.len());
    InitialData::from_full(sys, v0, v1, q0, q1, &w0, &w1)
}

/// Baseline configuration used by `floatbeam` examples and tests.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/baseline.toml");
