use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ghostsim::coincidence::{build_layout, dual_image, ghost_image, GhostImage, ImageOptions};
use ghostsim::fieldgrid::SpectrumKind;
use ghostsim::geometry::{
    dual_solve, solve_coincidence_image, Correlation, DualWeights, Geometry, ImageSolution, Scheme, SourceKind,
};
use ghostsim::montecarlo::accumulate;
use ghostsim::raydiagram::{build_scenes, render};
use ghostsim::Error;

use crate::scenario::{Scenario, SourceName};

/// Files to write once everything has been computed.
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
}

impl Output {
    fn new() -> Self {
        Output {
            files: Vec::new(),
            stdout: String::new(),
        }
    }

    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes every file through a temporary sibling renamed into place.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, Error> {
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn options(sc: &Scenario) -> ImageOptions {
    ImageOptions {
        fixed_coordinate: sc.run.fixed_coordinate,
        allow_defocus: sc.run.allow_defocus,
        tolerance: sc.run.tolerance,
        oversample: None,
    }
}

/// Full wave-model geometry. A single-source scenario may leave the unknown
/// distance out; it is then placed on the imaging equation.
fn wave_geometry(sc: &Scenario, corr: Option<Correlation>) -> Result<Geometry, Error> {
    let geom = sc.geometry()?;
    let have = match geom.scheme {
        Scheme::I => geom.z1.is_some(),
        Scheme::II => geom.z3.is_some(),
    };
    match corr {
        Some(c) if !have => {
            let src = match c {
                Correlation::Classical => SourceKind::ThermalClassical,
                Correlation::Quantum => SourceKind::QuantumEntangled,
            };
            let sol = solve_coincidence_image(&geom, src)?;
            let geom = match geom.scheme {
                Scheme::I => geom.with_z1(sol.image_distance),
                Scheme::II => geom.with_z3(sol.image_distance),
            };
            geom.validate()?;
            Ok(geom)
        }
        _ => sc.full_geometry(),
    }
}

fn csv(img: &GhostImage) -> Vec<u8> {
    let mut buf = Vec::new();
    img.write_csv(&mut buf).expect("in-memory write");
    buf
}

fn solution_row(out: &mut String, name: &str, sol: &ImageSolution) {
    let _ = writeln!(
        out,
        "{:<10} {:>14.6} {:>14.6} {:>8} {:>14.6}",
        name,
        sol.image_distance,
        sol.magnification,
        if sol.reality.is_real() { "real" } else { "virtual" },
        sol.joint_path
    );
}

/// Both-branch solutions of the imaging equation for the scenario layout.
pub fn solve(sc: &Scenario) -> Result<Output, Error> {
    let geom = sc.geometry()?.with_unknown_cleared();
    let unknown = match geom.scheme {
        Scheme::I => "z1",
        Scheme::II => "z3",
    };
    let (cl, qu) = dual_solve(&geom, DualWeights::new(1.0, 1.0)?)?;
    let mut out = Output::new();
    let _ = writeln!(
        out.stdout,
        "{:<10} {:>14} {:>14} {:>8} {:>14}",
        "branch",
        unknown,
        "magnification",
        "image",
        "joint_path"
    );
    solution_row(&mut out.stdout, "classical", &cl);
    solution_row(&mut out.stdout, "quantum", &qu);
    Ok(out)
}

fn image_files(out: &mut Output, sc: &Scenario, weights: Option<DualWeights>) -> Result<(), Error> {
    let corr = match sc.source.kind {
        SourceName::Thermal if weights.is_none() => Some(Correlation::Classical),
        SourceName::Quantum if weights.is_none() => Some(Correlation::Quantum),
        _ => None,
    };
    let geom = wave_geometry(sc, corr)?;
    let grid = sc.grid()?;
    let object = sc.object()?;
    let opts = options(sc);
    match weights {
        None => {
            let (corr, kind) = match sc.source.kind {
                SourceName::Thermal => (Correlation::Classical, SpectrumKind::PowerSpectrum),
                SourceName::Quantum => (Correlation::Quantum, SpectrumKind::BiphotonAmplitude),
                SourceName::Dual => unreachable!("dual sources carry weights"),
            };
            let spectrum = sc.spectrum(kind, &grid)?;
            let img = ghost_image(&geom, corr, &object, &grid, &spectrum, &opts)?;
            let _ = writeln!(
                out.stdout,
                "{} image: residual {:.3e}, visibility {:.6}",
                corr.branch(),
                img.residual,
                img.visibility
            );
            out.file("image.csv", csv(&img));
        }
        Some(w) => {
            let s = sc.spectrum(SpectrumKind::PowerSpectrum, &grid)?;
            let b = sc.spectrum(SpectrumKind::BiphotonAmplitude, &grid)?;
            let d = dual_image(&geom, &object, &grid, &s, &b, w, &opts)?;
            for img in [&d.classical, &d.quantum] {
                let _ = writeln!(
                    out.stdout,
                    "{} image: residual {:.3e}, visibility {:.6}",
                    img.correlation_kind.branch(),
                    img.residual,
                    img.visibility
                );
            }
            out.file("image_classical.csv", csv(&d.classical));
            out.file("image_quantum.csv", csv(&d.quantum));
            let mut comb = String::from("coordinate,combined\n");
            for (x, v) in d.classical.coordinates.iter().zip(&d.combined) {
                let _ = writeln!(comb, "{x:.10e},{v:.10e}");
            }
            out.file("image_combined.csv", comb.into_bytes());
        }
    }
    out.file("manifest.toml", sc.to_manifest().into_bytes());
    Ok(())
}

pub fn image(sc: &Scenario) -> Result<Output, Error> {
    let mut out = Output::new();
    let weights = match sc.source.kind {
        SourceName::Dual => Some(sc.weights()?),
        _ => None,
    };
    image_files(&mut out, sc, weights)?;
    Ok(out)
}

/// Both images of a type-I source, with the imaging-equation solutions.
pub fn dual(sc: &Scenario) -> Result<Output, Error> {
    let mut out = solve(sc)?;
    image_files(&mut out, sc, Some(sc.weights()?))?;
    Ok(out)
}

pub fn monte_carlo(sc: &Scenario) -> Result<Output, Error> {
    if sc.source.kind == SourceName::Quantum {
        return Err(Error::InvalidInput(
            "Monte-Carlo sampling covers thermal light only; the entangled image is deterministic".into(),
        ));
    }
    let geom = wave_geometry(sc, Some(Correlation::Classical))?;
    let grid = sc.grid()?;
    let object = sc.object()?;
    let s = sc.spectrum(SpectrumKind::PowerSpectrum, &grid)?;
    if sc.run.realizations == 0 {
        return Err(Error::InvalidInput("run.realizations must be at least 1".into()));
    }
    let layout = build_layout(&geom, Correlation::Classical, &object, &grid, &options(sc))?;
    let emp = accumulate(&s, &layout.h1, &layout.h2, sc.run.realizations, sc.run.seed)?;
    let manifest = vec![
        format!("seed = {}", sc.run.seed),
        format!("realizations = {}", sc.run.realizations),
        format!("grid = n {} length {} mm", sc.grid.n, sc.grid.length),
        format!(
            "geometry = scheme {} z1 {} z2 {} z3 {} f {} fc {} mm, wavelength {} nm",
            geom.scheme,
            geom.require_z1()?,
            geom.z2,
            geom.require_z3()?,
            geom.f,
            geom.fc,
            sc.geometry.wavelength_nm.unwrap_or_default()
        ),
        format!("fixed_coordinate = {}", sc.run.fixed_coordinate),
    ];
    let mut buf = Vec::new();
    emp.write_csv(&manifest, &mut buf)?;
    let mut out = Output::new();
    let _ = writeln!(
        out.stdout,
        "{} realizations, seed {}, {} x {} detector pairs",
        emp.realizations,
        emp.seed,
        emp.x1.len(),
        emp.x2.len()
    );
    out.file("mc.csv", buf);
    out.file("manifest.toml", sc.to_manifest().into_bytes());
    Ok(out)
}

pub fn rays(sc: &Scenario) -> Result<Output, Error> {
    let geom = sc.geometry()?;
    let scenes = build_scenes(&geom, sc.source_kind()?, sc.run.object_height)?;
    let mut out = Output::new();
    for scene in &scenes {
        let name = match scene.correlation {
            Correlation::Classical => "rays_classical.svg",
            Correlation::Quantum => "rays_quantum.svg",
        };
        let reality = match scene.final_image {
            Some((_, r)) if r.is_real() => "real",
            Some(_) => "virtual",
            None => "none",
        };
        let _ = writeln!(
            out.stdout,
            "{}: image distance {:.6}, height {:.6}, {reality}",
            scene.correlation.branch(),
            scene.image_distance,
            scene.image_height
        );
        out.file(name, render(scene).into_bytes());
    }
    out.file("manifest.toml", sc.to_manifest().into_bytes());
    Ok(out)
}
