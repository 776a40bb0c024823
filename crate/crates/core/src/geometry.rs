//! Coincidence imaging equations and real/virtual classification.
//!
//! The two arms of a coincidence imaging setup are described by the axial
//! distances `z1`, `z2`, `z3`, the focal length `f` of the imaging lens and the
//! focal length `fc` of the collective lens. The joint path `z2 - z1`
//! (thermal) or `z2 + z1` (entangled) plays the role of one conjugate distance
//! in an ordinary thin-lens law:
//!
//! ```text
//! 1/(z2 - z1) + 1/z3 = 1/f     thermal source
//! 1/(z2 + z1) + 1/z3 = 1/f     entangled source
//! ```
//!
//! In scheme I the joint path is the image distance and `z1` (the position of
//! the scanning detector) is solved for. In scheme II the joint path is the
//! object distance and `z3` (lens to scanning detector) is solved for.

use std::fmt;

use crate::error::{Branch, Error, Result};

/// Arrangement of object and imaging lens relative to the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Object and imaging lens share arm 2; detector D1 in arm 1 scans.
    I,
    /// Object in arm 1 before a collective lens; lens F and detector D2 in arm 2.
    II,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::I => f.write_str("I"),
            Scheme::II => f.write_str("II"),
        }
    }
}

/// The two kinds of spatial correlation a source can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    /// Self-correlation of transverse wavevectors (thermal light).
    Classical,
    /// Anticorrelated wavevector pairs (two-photon entanglement).
    Quantum,
}

impl Correlation {
    pub fn branch(self) -> Branch {
        match self {
            Correlation::Classical => Branch::Classical,
            Correlation::Quantum => Branch::Quantum,
        }
    }

    /// Sign with which `z1` enters the joint path `z2 ± z1`.
    pub fn joint_sign(self) -> f64 {
        match self {
            Correlation::Classical => -1.0,
            Correlation::Quantum => 1.0,
        }
    }
}

/// Mixing weights of a type-I source carrying both correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualWeights {
    pub classical: f64,
    pub quantum: f64,
}

impl DualWeights {
    pub fn new(classical: f64, quantum: f64) -> Result<Self> {
        let w = DualWeights { classical, quantum };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.classical) || !ok(self.quantum) {
            return Err(Error::invalid("dual weights must be finite and non-negative"));
        }
        if self.classical == 0.0 && self.quantum == 0.0 {
            return Err(Error::invalid("dual weights must not both be zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    ThermalClassical,
    QuantumEntangled,
    DualTypeI(DualWeights),
}

impl SourceKind {
    /// The single correlation of a non-dual source.
    pub fn correlation(&self) -> Option<Correlation> {
        match self {
            SourceKind::ThermalClassical => Some(Correlation::Classical),
            SourceKind::QuantumEntangled => Some(Correlation::Quantum),
            SourceKind::DualTypeI(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reality {
    Real,
    Virtual,
}

impl Reality {
    pub fn from_distance(d: f64) -> Self {
        if d > 0.0 {
            Reality::Real
        } else {
            Reality::Virtual
        }
    }

    pub fn is_real(self) -> bool {
        self == Reality::Real
    }
}

impl fmt::Display for Reality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reality::Real => f.write_str("Real"),
            Reality::Virtual => f.write_str("Virtual"),
        }
    }
}

/// Axial layout of a coincidence imaging setup.
///
/// `z1` is source to D1 (scheme I) or source to object (scheme II); `z2` is
/// source to imaging lens F; `z3` is object to F (scheme I) or F to D2
/// (scheme II). The distance that the imaging equation solves for (`z1` in
/// scheme I, `z3` in scheme II) may be left as `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub scheme: Scheme,
    pub z1: Option<f64>,
    pub z2: f64,
    pub z3: Option<f64>,
    pub f: f64,
    pub fc: f64,
    /// Wavenumber `2π/λ` in rad/mm.
    pub k: f64,
}

impl Geometry {
    /// Scheme I layout with the detector distance `z1` left unknown.
    pub fn scheme_i(z2: f64, z3: f64, f: f64, fc: f64, k: f64) -> Self {
        Geometry {
            scheme: Scheme::I,
            z1: None,
            z2,
            z3: Some(z3),
            f,
            fc,
            k,
        }
    }

    /// Scheme II layout with the detector distance `z3` left unknown.
    pub fn scheme_ii(z1: f64, z2: f64, f: f64, fc: f64, k: f64) -> Self {
        Geometry {
            scheme: Scheme::II,
            z1: Some(z1),
            z2,
            z3: None,
            f,
            fc,
            k,
        }
    }

    pub fn with_z1(mut self, z1: f64) -> Self {
        self.z1 = Some(z1);
        self
    }

    pub fn with_z3(mut self, z3: f64) -> Self {
        self.z3 = Some(z3);
        self
    }

    /// Wavenumber for a vacuum wavelength given in nanometres.
    pub fn wavenumber_from_nm(wavelength_nm: f64) -> f64 {
        2.0 * std::f64::consts::PI / (wavelength_nm * 1e-6)
    }

    /// Checks the invariants shared by every operation.
    ///
    /// In scheme I a supplied `z1` may take either sign: a negative value
    /// places D1 on a virtual plane behind the source, which is how the wave
    /// model evaluates a virtual coincidence image.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite")))
            }
        };
        finite("z2", self.z2)?;
        finite("f", self.f)?;
        finite("fc", self.fc)?;
        finite("k", self.k)?;
        if self.z2 <= 0.0 {
            return Err(Error::invalid("z2 must be positive"));
        }
        if self.f == 0.0 {
            return Err(Error::invalid("focal length f must be nonzero"));
        }
        if self.fc <= 0.0 {
            return Err(Error::invalid("collective focal length fc must be positive"));
        }
        if self.k <= 0.0 {
            return Err(Error::invalid("wavenumber k must be positive"));
        }
        if let Some(z1) = self.z1 {
            finite("z1", z1)?;
            if self.scheme == Scheme::II && z1 <= 0.0 {
                return Err(Error::invalid("scheme II z1 (source to object) must be positive"));
            }
        }
        if let Some(z3) = self.z3 {
            finite("z3", z3)?;
            if z3 <= 0.0 {
                return Err(Error::invalid("z3 must be positive"));
            }
        }
        Ok(())
    }

    pub fn require_z1(&self) -> Result<f64> {
        self.z1.ok_or_else(|| Error::invalid("z1 is required"))
    }

    pub fn require_z3(&self) -> Result<f64> {
        self.z3.ok_or_else(|| Error::invalid("z3 is required"))
    }

    /// Same layout with the distance the imaging equation solves for cleared.
    pub fn with_unknown_cleared(&self) -> Self {
        let mut g = *self;
        match g.scheme {
            Scheme::I => g.z1 = None,
            Scheme::II => g.z3 = None,
        }
        g
    }

    /// Transverse scale from object to coincidence image: the image of an
    /// object point `x` appears at `magnification * x` on the scanning detector.
    pub fn image_scale(&self) -> Result<f64> {
        let z3 = self.require_z3()?;
        let d = self.f - z3;
        if d == 0.0 {
            return Err(Error::degenerate("z3 equals f"));
        }
        Ok(match self.scheme {
            Scheme::I => self.f / d,
            Scheme::II => d / self.f,
        })
    }

    /// Relative residual of the imaging equation for a fully specified layout,
    /// `|1/J + 1/z3 - 1/f| * |f|` with `J` the joint path.
    pub fn imaging_residual(&self, corr: Correlation) -> Result<f64> {
        let z1 = self.require_z1()?;
        let z3 = self.require_z3()?;
        let joint = self.z2 + corr.joint_sign() * z1;
        if joint == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(((1.0 / joint + 1.0 / z3 - 1.0 / self.f) * self.f).abs())
    }
}

/// Solution of the coincidence imaging equation for one correlation branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSolution {
    pub correlation: Correlation,
    /// Solved `z1` (scheme I) or solved `z3` (scheme II).
    pub image_distance: f64,
    /// Signed transverse scale from object to image, negative when inverted.
    pub magnification: f64,
    pub reality: Reality,
    /// `z2 ± z1`.
    pub joint_path: f64,
}

/// Solves the coincidence imaging equation for the unknown distance.
///
/// The unknown (`z1` for scheme I, `z3` for scheme II) must be `None`.
pub fn solve_coincidence_image(geom: &Geometry, src: SourceKind) -> Result<ImageSolution> {
    let corr = src.correlation().ok_or_else(|| {
        Error::invalid("dual source has two branches; use dual_solve")
    })?;
    solve_branch(geom, corr)
}

fn solve_branch(geom: &Geometry, corr: Correlation) -> Result<ImageSolution> {
    geom.validate()?;
    let f = geom.f;
    match geom.scheme {
        Scheme::I => {
            if geom.z1.is_some() {
                return Err(Error::invalid("scheme I solves for z1; leave it unspecified"));
            }
            let z3 = geom.require_z3()?;
            if z3 == f {
                return Err(Error::degenerate("z3 equals f: joint path is infinite"));
            }
            let joint = z3 * f / (z3 - f);
            // classical: z2 - z1 = J, quantum: z2 + z1 = J
            let z1 = corr.joint_sign() * (joint - geom.z2);
            if z1 == 0.0 {
                return Err(Error::degenerate("solved z1 is zero: detector at the source"));
            }
            Ok(ImageSolution {
                correlation: corr,
                image_distance: z1,
                magnification: f / (f - z3),
                reality: Reality::from_distance(z1),
                joint_path: joint,
            })
        }
        Scheme::II => {
            if geom.z3.is_some() {
                return Err(Error::invalid("scheme II solves for z3; leave it unspecified"));
            }
            let z1 = geom.require_z1()?;
            let joint = geom.z2 + corr.joint_sign() * z1;
            if joint == 0.0 {
                return Err(Error::degenerate("joint path is zero"));
            }
            if joint == f {
                return Err(Error::degenerate("joint path equals f: image at infinity"));
            }
            let z3 = joint * f / (joint - f);
            Ok(ImageSolution {
                correlation: corr,
                image_distance: z3,
                magnification: (f - z3) / f,
                reality: Reality::from_distance(z3),
                joint_path: joint,
            })
        }
    }
}

/// Real/virtual flag of the coincidence image for a fully specified layout.
///
/// The flag is the sign of the distance solved from the imaging equation; a
/// supplied value of that distance is ignored.
pub fn classify_reality(geom: &Geometry, src: SourceKind) -> Result<Reality> {
    let sol = solve_coincidence_image(&geom.with_unknown_cleared(), src)?;
    Ok(sol.reality)
}

/// Classical and quantum solutions for one physical setup, in that order.
pub fn dual_solve(geom: &Geometry, weights: DualWeights) -> Result<(ImageSolution, ImageSolution)> {
    weights.validate()?;
    let g = geom.with_unknown_cleared();
    let classical =
        solve_branch(&g, Correlation::Classical).map_err(|e| e.in_branch(Branch::Classical))?;
    let quantum =
        solve_branch(&g, Correlation::Quantum).map_err(|e| e.in_branch(Branch::Quantum))?;
    Ok((classical, quantum))
}
