//! Scenario files: one TOML document drives every command.

use std::fs;
use std::path::{Path, PathBuf};

use ghostsim::fieldgrid::{make_grid, sample_spectrum, Grid1D, ObjectSpec, SpectrumKind, SpectrumProfile, SpectrumSpec, Table};
use ghostsim::geometry::{DualWeights, Geometry, SourceKind};
use ghostsim::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub units: Units,
    pub geometry: GeometryBlock,
    pub source: SourceBlock,
    #[serde(default)]
    pub object: ObjectBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub wavelength: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            length: "mm".into(),
            wavelength: "nm".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeName {
    I,
    II,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub scheme: SchemeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z3: Option<f64>,
    pub f: Option<f64>,
    pub fc: Option<f64>,
    pub wavelength_nm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceName {
    Thermal,
    Quantum,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumBlock {
    Flat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
    Gaussian {
        width: f64,
    },
    Table {
        path: PathBuf,
    },
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        SpectrumBlock::Flat { bandwidth: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsBlock {
    pub classical: f64,
    pub quantum: f64,
}

impl Default for WeightsBlock {
    fn default() -> Self {
        WeightsBlock {
            classical: 1.0,
            quantum: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub kind: SourceName,
    #[serde(default)]
    pub power_spectrum: SpectrumBlock,
    #[serde(default)]
    pub biphoton: SpectrumBlock,
    #[serde(default)]
    pub weights: WeightsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectBlock {
    Uniform,
    SingleSlit { width: f64, center: f64 },
    DoubleSlit { separation: f64, width: f64 },
    Gaussian { waist: f64 },
    Table { path: PathBuf },
}

impl Default for ObjectBlock {
    fn default() -> Self {
        ObjectBlock::Uniform
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub realizations: usize,
    pub seed: u64,
    pub fixed_coordinate: f64,
    pub allow_defocus: bool,
    pub tolerance: f64,
    pub object_height: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            realizations: 1000,
            seed: 0,
            fixed_coordinate: 0.0,
            allow_defocus: false,
            tolerance: 1e-9,
            object_height: 1.0,
        }
    }
}

fn missing(name: &str) -> Error {
    Error::InvalidInput(format!("scenario is missing geometry.{name}"))
}

impl Scenario {
    /// Reads a scenario and makes every table path absolute, relative to the
    /// scenario's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut sc: Scenario =
            toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        sc.resolve_paths(&base)?;
        Ok(sc)
    }

    fn resolve_paths(&mut self, base: &Path) -> Result<(), Error> {
        let fix = |p: &mut PathBuf| -> Result<(), Error> {
            let full = if p.is_absolute() { p.clone() } else { base.join(&*p) };
            *p = fs::canonicalize(&full)
                .map_err(|e| Error::InvalidInput(format!("table {}: {e}", full.display())))?;
            Ok(())
        };
        for s in [&mut self.source.power_spectrum, &mut self.source.biphoton] {
            if let SpectrumBlock::Table { path } = s {
                fix(path)?;
            }
        }
        if let ObjectBlock::Table { path } = &mut self.object {
            fix(path)?;
        }
        Ok(())
    }

    pub fn to_manifest(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn wavenumber(&self) -> Result<f64, Error> {
        let nm = self.geometry.wavelength_nm.ok_or_else(|| missing("wavelength_nm"))?;
        if !(nm.is_finite() && nm > 0.0) {
            return Err(Error::InvalidInput("wavelength must be positive".into()));
        }
        Ok(Geometry::wavenumber_from_nm(nm))
    }

    /// Geometry with whatever distances the file supplies.
    pub fn geometry(&self) -> Result<Geometry, Error> {
        let g = &self.geometry;
        let z2 = g.z2.ok_or_else(|| missing("z2"))?;
        let f = g.f.ok_or_else(|| missing("f"))?;
        let fc = g.fc.ok_or_else(|| missing("fc"))?;
        let k = self.wavenumber()?;
        let geom = match g.scheme {
            SchemeName::I => {
                let z3 = g.z3.ok_or_else(|| missing("z3"))?;
                let mut geom = Geometry::scheme_i(z2, z3, f, fc, k);
                if let Some(z1) = g.z1 {
                    geom = geom.with_z1(z1);
                }
                geom
            }
            SchemeName::II => {
                let z1 = g.z1.ok_or_else(|| missing("z1"))?;
                let mut geom = Geometry::scheme_ii(z1, z2, f, fc, k);
                if let Some(z3) = g.z3 {
                    geom = geom.with_z3(z3);
                }
                geom
            }
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Geometry with both `z1` and `z3`, as the wave model needs.
    pub fn full_geometry(&self) -> Result<Geometry, Error> {
        let geom = self.geometry()?;
        geom.require_z1()?;
        geom.require_z3()?;
        Ok(geom)
    }

    pub fn weights(&self) -> Result<DualWeights, Error> {
        DualWeights::new(self.source.weights.classical, self.source.weights.quantum)
    }

    pub fn source_kind(&self) -> Result<SourceKind, Error> {
        Ok(match self.source.kind {
            SourceName::Thermal => SourceKind::ThermalClassical,
            SourceName::Quantum => SourceKind::QuantumEntangled,
            SourceName::Dual => SourceKind::DualTypeI(self.weights()?),
        })
    }

    pub fn grid(&self) -> Result<Grid1D, Error> {
        make_grid(self.grid.n, self.grid.length)
    }

    pub fn object(&self) -> Result<ObjectSpec, Error> {
        Ok(match &self.object {
            ObjectBlock::Uniform => ObjectSpec::Uniform,
            ObjectBlock::SingleSlit { width, center } => ObjectSpec::SingleSlit {
                width: *width,
                center: *center,
            },
            ObjectBlock::DoubleSlit { separation, width } => ObjectSpec::DoubleSlit {
                separation: *separation,
                width: *width,
            },
            ObjectBlock::Gaussian { waist } => ObjectSpec::Gaussian { waist: *waist },
            ObjectBlock::Table { path } => ObjectSpec::Table(Table::from_path(path)?),
        })
    }

    pub fn spectrum(&self, kind: SpectrumKind, grid: &Grid1D) -> Result<SpectrumProfile, Error> {
        let block = match kind {
            SpectrumKind::PowerSpectrum => &self.source.power_spectrum,
            SpectrumKind::BiphotonAmplitude => &self.source.biphoton,
        };
        let spec = match block {
            SpectrumBlock::Flat { bandwidth } => SpectrumSpec::Flat {
                bandwidth: bandwidth.unwrap_or(f64::INFINITY),
            },
            SpectrumBlock::Gaussian { width } => SpectrumSpec::Gaussian { width: *width },
            SpectrumBlock::Table { path } => SpectrumSpec::Table(Table::from_path(path)?),
        };
        sample_spectrum(&spec, kind, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[geometry]
scheme = "I"
z1 = 10.0
z2 = 20.0
z3 = 15.0
f = 10.0
fc = 50.0
wavelength_nm = 800.0

[source]
kind = "dual"
power_spectrum = { kind = "gaussian", width = 40.0 }
weights = { classical = 1.0, quantum = 2.0 }

[object]
kind = "double_slit"
separation = 0.4
width = 0.05

[grid]
n = 256
length = 4.0

[run]
realizations = 10
seed = 3
fixed_coordinate = 0.0
allow_defocus = false
tolerance = 1e-9
object_height = 1.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let sc: Scenario = toml::from_str(EXAMPLE).unwrap();
        assert_eq!(sc.source.biphoton, SpectrumBlock::Flat { bandwidth: None });
        assert!(matches!(sc.source_kind().unwrap(), SourceKind::DualTypeI(w) if w.quantum == 2.0));
        let again: Scenario = toml::from_str(&sc.to_manifest()).unwrap();
        assert_eq!(sc, again);
        assert_eq!(sc.to_manifest(), again.to_manifest());
    }

    #[test]
    fn missing_focal_length_is_invalid() {
        let text = EXAMPLE.replace("f = 10.0\n", "");
        let sc: Scenario = toml::from_str(&text).unwrap();
        assert!(matches!(sc.geometry(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = EXAMPLE.replace("[grid]", "[grid]\nspacing = 2");
        assert!(toml::from_str::<Scenario>(&text).is_err());
    }
}
