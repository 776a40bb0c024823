//! Arm transfer functions `h(x, q)`.
//!
//! `h(x, q) = (1/√2π) ∫ h(x, x') exp(-i q x') dx'` is the field at detector
//! coordinate `x` produced by the source-plane plane wave `exp(-i q x)/√2π`.
//! A [`TransferMap`] samples it on a list of detector coordinates (rows) and
//! on the wavevector nodes of a [`Grid1D`] (columns).
//!
//! Maps are produced two independent ways: the closed forms for the two
//! imaging schemes, and [`compose_arm`], which chains elementary paraxial
//! operators (free space, thin lens, mask, two-focal-plane collective lens).

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::io::{self, Write};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fieldgrid::{Grid1D, ObjectQuadrature, PhaseFactor, SamplingReport};
use crate::geometry::{Geometry, Scheme};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Composed,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct TransferMap {
    /// `h[[i, j]] = h(detector[i], grid.q(j))`.
    pub h: Array2<Complex64>,
    pub detector: Vec<f64>,
    pub grid: Grid1D,
    pub provenance: Provenance,
}

impl TransferMap {
    fn from_rows(rows: Vec<Vec<Complex64>>, detector: &[f64], grid: &Grid1D, provenance: Provenance) -> Result<Self> {
        let cols = grid.q_len();
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let h = Array2::from_shape_vec((detector.len(), cols), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("transfer map has non-finite entries"));
        }
        Ok(TransferMap {
            h,
            detector: detector.to_vec(),
            grid: *grid,
            provenance,
        })
    }

    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    /// `Σ_i |h(x_i, q_j)|² dx`.
    pub fn column_energy(&self, j: usize) -> f64 {
        self.h.column(j).iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn same_grid(&self, other: &TransferMap) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "transfer maps on grids (n={}, L={}) and (n={}, L={})",
                self.grid.n(),
                self.grid.length(),
                other.grid.n(),
                other.grid.length()
            )));
        }
        Ok(())
    }

    /// Plain-text dump, one `x q re im` row per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# x q re im")?;
        for (i, x) in self.detector.iter().enumerate() {
            for j in 0..self.grid.q_len() {
                let v = self.h[[i, j]];
                writeln!(w, "{:.10e} {:.10e} {:.10e} {:.10e}", x, self.grid.q(j), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// `‖a e^{iφ} - b‖ / ‖b‖` with `φ` the best-fitting global phase.
pub fn relative_l2_after_phase(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let inner: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let rot = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x * rot - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `exp(i θ)` with `θ` reduced modulo 2π first.
fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta.rem_euclid(TAU))
}

#[derive(Debug, Clone)]
pub enum ArmElement {
    FreeSpace(f64),
    ThinLens(f64),
    Mask(ObjectQuadrature),
    /// Lens of focal length `fc` with its input and output planes in the two
    /// focal planes.
    CollectiveFF(f64),
}

#[derive(Debug, Clone)]
pub struct ArmDescription {
    pub elements: Vec<ArmElement>,
    pub k: f64,
}

impl ArmDescription {
    /// The two arms of a fully specified layout, as element chains.
    pub fn for_geometry(geom: &Geometry, object: &ObjectQuadrature) -> Result<(Self, Self)> {
        geom.validate()?;
        let z1 = geom.require_z1()?;
        let z3 = geom.require_z3()?;
        use ArmElement::*;
        let (a1, a2) = match geom.scheme {
            Scheme::I => (
                vec![FreeSpace(z1)],
                vec![
                    FreeSpace(geom.z2),
                    ThinLens(geom.f),
                    FreeSpace(z3),
                    Mask(object.clone()),
                    CollectiveFF(geom.fc),
                ],
            ),
            Scheme::II => (
                vec![FreeSpace(z1), Mask(object.clone()), CollectiveFF(geom.fc)],
                vec![FreeSpace(geom.z2), ThinLens(geom.f), FreeSpace(z3)],
            ),
        };
        Ok((
            ArmDescription { elements: a1, k: geom.k },
            ArmDescription { elements: a2, k: geom.k },
        ))
    }

    fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::invalid("arm has no elements"));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::invalid("wavenumber must be positive"));
        }
        let mut masks = 0;
        for (i, e) in self.elements.iter().enumerate() {
            match e {
                ArmElement::FreeSpace(z) if !(z.is_finite() && *z >= 0.0) => {
                    return Err(Error::invalid("free-space distances must be non-negative"))
                }
                ArmElement::ThinLens(f) if !(f.is_finite() && *f != 0.0) => {
                    return Err(Error::invalid("lens focal length must be nonzero"))
                }
                ArmElement::CollectiveFF(fc) => {
                    if !(fc.is_finite() && *fc > 0.0) {
                        return Err(Error::invalid("collective focal length must be positive"));
                    }
                    if i + 1 != self.elements.len() {
                        return Err(Error::invalid("the collective lens must be the last element"));
                    }
                }
                ArmElement::Mask(_) => masks += 1,
                _ => {}
            }
        }
        if masks > 1 {
            return Err(Error::invalid("at most one mask per arm"));
        }
        Ok(())
    }
}

/// `amp · exp(i (a x² + b x + phase))`.
#[derive(Debug, Clone, Copy)]
struct Chirp {
    amp: Complex64,
    a: f64,
    b: f64,
    phase: f64,
}

impl Chirp {
    fn at(&self, x: f64) -> Complex64 {
        self.amp * cis(self.a * x * x + self.b * x + self.phase)
    }

    /// Exact Fresnel propagation over `z`.
    fn propagate(self, z: f64, k: f64) -> Result<Self> {
        if z == 0.0 {
            return Ok(self);
        }
        let s = 1.0 + 2.0 * self.a * z / k;
        if s.abs() < 1e-12 {
            return Err(Error::degenerate("field focuses to a point inside the arm"));
        }
        let mut amp = self.amp / s.abs().sqrt();
        if s < 0.0 {
            amp *= -I;
        }
        Ok(Chirp {
            amp,
            a: self.a / s,
            b: self.b / s,
            phase: self.phase + (k * z).rem_euclid(TAU) - self.b * self.b * z / (2.0 * k * s),
        })
    }

    /// `∫ chirp(x) exp(-i k x u / fc) dx` at output coordinate `u`.
    fn fourier(&self, u: f64, k: f64, fc: f64) -> Result<Complex64> {
        if self.a == 0.0 {
            return Err(Error::degenerate("plane wave at the collective lens focuses to a point"));
        }
        let beta = self.b - k * u / fc;
        let gauss = (PI / self.a.abs()).sqrt() * cis(FRAC_PI_4 * self.a.signum());
        Ok(self.amp * gauss * cis(self.phase - beta * beta / (4.0 * self.a)))
    }
}

/// Sampled field on an object-plane lattice.
struct Lattice<'a> {
    quad: &'a ObjectQuadrature,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Lattice<'_> {
    fn freqs(&self) -> Vec<f64> {
        let m = self.quad.nodes().len();
        let dp = TAU / (m as f64 * self.quad.spacing());
        (0..m)
            .map(|i| if i < (m + 1) / 2 { i as f64 } else { i as f64 - m as f64 } * dp)
            .collect()
    }

    fn propagate(&self, field: &mut [Complex64], z: f64, k: f64) {
        let (fwd, inv) = self.fft.as_ref().expect("planned");
        fwd.process(field);
        let m = field.len() as f64;
        for (v, p) in field.iter_mut().zip(self.freqs()) {
            *v *= cis(k * z - p * p * z / (2.0 * k)) / m;
        }
        inv.process(field);
    }
}

/// Composes an arm from its elements and samples it at `detector`.
///
/// The field starts as the plane wave `exp(-i q x)/√2π` and stays in closed
/// quadratic-phase form through free space and lenses, where propagation is
/// exact. A mask samples it onto the object quadrature lattice; afterwards
/// free space uses the lattice's discrete Fourier pair and lenses multiply
/// pointwise. The collective lens integrates the field against
/// `√(k/2π fc) e^{2ik fc} exp(-i k x u/fc)`.
pub fn compose_arm(arm: &ArmDescription, grid: &Grid1D, detector: &[f64]) -> Result<TransferMap> {
    arm.validate()?;
    composition_sampling(arm)?.into_result()?;
    let k = arm.k;

    let mask = arm.elements.iter().find_map(|e| match e {
        ArmElement::Mask(q) => Some(q),
        _ => None,
    });
    let lattice = mask.map(|quad| {
        let needs_fft = arm
            .elements
            .iter()
            .skip_while(|e| !matches!(e, ArmElement::Mask(_)))
            .any(|e| matches!(e, ArmElement::FreeSpace(_)));
        let fft = needs_fft.then(|| {
            let mut planner = FftPlanner::new();
            let m = quad.nodes().len();
            (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
        });
        Lattice { quad, fft }
    });
    let ends_in_lattice = mask.is_some() && !matches!(arm.elements.last(), Some(ArmElement::CollectiveFF(_)));
    let lattice_rows: Vec<usize> = if ends_in_lattice {
        let quad = mask.unwrap();
        let x0 = quad.nodes()[0];
        detector
            .iter()
            .map(|&x| {
                let idx = ((x - x0) / quad.spacing()).round();
                let i = idx as usize;
                if idx < 0.0 || i >= quad.nodes().len() || (quad.nodes()[i] - x).abs() > 1e-9 * quad.spacing() {
                    Err(Error::invalid("detector coordinates must lie on the mask lattice"))
                } else {
                    Ok(i)
                }
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let columns: Vec<Vec<Complex64>> = (0..grid.q_len())
        .into_par_iter()
        .map(|j| {
            let mut chirp = Chirp {
                amp: Complex64::new(1.0 / TAU.sqrt(), 0.0),
                a: 0.0,
                b: -grid.q(j),
                phase: 0.0,
            };
            let mut sampled: Option<Vec<Complex64>> = None;
            for e in &arm.elements {
                match (e, sampled.as_mut()) {
                    (ArmElement::FreeSpace(z), None) => chirp = chirp.propagate(*z, k)?,
                    (ArmElement::ThinLens(f), None) => chirp.a -= k / (2.0 * f),
                    (ArmElement::Mask(q), None) => {
                        sampled = Some(
                            q.nodes().iter().zip(q.values()).map(|(&x, t)| chirp.at(x) * t).collect(),
                        );
                    }
                    (ArmElement::FreeSpace(z), Some(field)) => {
                        lattice.as_ref().unwrap().propagate(field, *z, k);
                    }
                    (ArmElement::ThinLens(f), Some(field)) => {
                        let q = mask.unwrap();
                        for (v, &x) in field.iter_mut().zip(q.nodes()) {
                            *v *= cis(-k * x * x / (2.0 * f));
                        }
                    }
                    (ArmElement::Mask(_), Some(_)) => unreachable!("validated"),
                    (ArmElement::CollectiveFF(fc), field) => {
                        let c = (k / (TAU * fc)).sqrt() * cis(2.0 * k * fc);
                        return detector
                            .iter()
                            .map(|&u| match field.as_deref() {
                                None => Ok(c * chirp.fourier(u, k, *fc)?),
                                Some(field) => {
                                    let q = mask.unwrap();
                                    let nodes = q.nodes();
                                    let sum: Complex64 = q
                                        .support()
                                        .map(|i| field[i] * cis(-k * nodes[i] * u / fc))
                                        .sum();
                                    Ok(c * sum * q.spacing())
                                }
                            })
                            .collect();
                    }
                }
            }
            Ok(match sampled {
                None => detector.iter().map(|&x| chirp.at(x)).collect(),
                Some(field) => lattice_rows.iter().map(|&i| field[i]).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<Complex64>> = (0..detector.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    TransferMap::from_rows(rows, detector, grid, Provenance::Composed)
}

/// Quadratic phase factors that a composition samples on the mask lattice.
fn composition_sampling(arm: &ArmDescription) -> Result<SamplingReport> {
    let k = arm.k;
    let mut a = 0.0;
    let mut lattice: Option<&ObjectQuadrature> = None;
    let mut factors = Vec::new();
    let edge_step = |coef: f64, edge: f64, h: f64| {
        let inner = (edge - h).max(0.0);
        (coef * (edge * edge - inner * inner)).abs()
    };
    for e in &arm.elements {
        match (e, lattice) {
            (ArmElement::FreeSpace(z), None) => {
                let s = 1.0 + 2.0 * a * z / k;
                if s.abs() < 1e-12 {
                    return Err(Error::degenerate("field focuses to a point inside the arm"));
                }
                a /= s;
            }
            (ArmElement::ThinLens(f), None) => a -= k / (2.0 * f),
            (ArmElement::Mask(q), None) => {
                factors.push(PhaseFactor {
                    name: "incident chirp on mask".into(),
                    step: edge_step(a, q.extent(), q.spacing()),
                });
                lattice = Some(q);
            }
            (ArmElement::FreeSpace(z), Some(q)) => {
                let m = q.nodes().len() as f64;
                let dp = TAU / (m * q.spacing());
                let pm = PI / q.spacing();
                factors.push(PhaseFactor {
                    name: format!("lattice free space exp(-i p² {z}/2k)"),
                    step: ((pm * pm - (pm - dp).powi(2)) * z / (2.0 * k)).abs(),
                });
            }
            (ArmElement::ThinLens(f), Some(q)) => {
                let edge = q.nodes()[0].abs();
                factors.push(PhaseFactor {
                    name: format!("lattice lens exp(-i k x²/2·{f})"),
                    step: edge_step(k / (2.0 * f), edge, q.spacing()),
                });
            }
            _ => {}
        }
    }
    Ok(SamplingReport { factors })
}

fn rows_par<F>(detector: &[f64], grid: &Grid1D, row: F) -> Vec<Vec<Complex64>>
where
    F: Fn(f64, &[f64]) -> Vec<Complex64> + Sync,
{
    let qs = grid.q_nodes();
    detector.par_iter().map(|&x| row(x, &qs)).collect()
}

/// Scheme I arm 1: free space from the source to D1.
///
/// `h1(x1, q) = (1/√2π) exp[i k z1 - i q x1 - i q² z1/2k]`
pub fn closed_form_s1_arm1(geom: &Geometry, grid: &Grid1D, detector: &[f64]) -> Result<TransferMap> {
    geom.validate()?;
    let z1 = geom.require_z1()?;
    let k = geom.k;
    let norm = 1.0 / TAU.sqrt();
    let kz = (k * z1).rem_euclid(TAU);
    let rows = rows_par(detector, grid, |x1, qs| {
        qs.iter()
            .map(|&q| norm * cis(kz - q * x1 - q * q * z1 / (2.0 * k)))
            .collect()
    });
    TransferMap::from_rows(rows, detector, grid, Provenance::ClosedForm)
}

/// Scheme I arm 2: imaging lens, object, collective lens, bucket detector D2.
///
/// ```text
/// h2(x2, q) = (1/2π) √(k f / (i (f - z3) fc))
///           · exp[i k (z2 + z3 + 2 fc) - i q²/2k (z2 + z3 f/(f - z3))]
///           · ∫ T(x) exp[i k x²/2(z3 - f) - i (k x2/fc + q f/(f - z3)) x] dx
/// ```
pub fn closed_form_s1_arm2(
    geom: &Geometry,
    object: &ObjectQuadrature,
    grid: &Grid1D,
    detector: &[f64],
) -> Result<TransferMap> {
    geom.validate()?;
    let z3 = geom.require_z3()?;
    let (k, f, fc, z2) = (geom.k, geom.f, geom.fc, geom.z2);
    if z3 == f {
        return Err(Error::degenerate("z3 equals f"));
    }
    let pre = (Complex64::new(k * f / ((f - z3) * fc), 0.0) / I).sqrt() / TAU;
    let z_eff = z2 + z3 * f / (f - z3);
    let global = (k * (z2 + z3 + 2.0 * fc)).rem_euclid(TAU);
    let scale = f / (f - z3);
    let nodes = object.nodes();
    let weighted: Vec<(f64, Complex64)> = object
        .support()
        .map(|i| {
            let x = nodes[i];
            (x, object.values()[i] * cis(k * x * x / (2.0 * (z3 - f))) * object.spacing())
        })
        .collect();
    let rows = rows_par(detector, grid, |x2, qs| {
        qs.iter()
            .map(|&q| {
                let nu = k * x2 / fc + q * scale;
                let inner: Complex64 = weighted.iter().map(|&(x, g)| g * cis(-nu * x)).sum();
                pre * cis(global - q * q * z_eff / (2.0 * k)) * inner
            })
            .collect()
    });
    TransferMap::from_rows(rows, detector, grid, Provenance::ClosedForm)
}

/// Scheme II arm 1: object followed by the collective lens and bucket D1.
///
/// ```text
/// h1(x1, q) = (1/2π) √(k / (i fc)) exp[i k (z1 + 2 fc) - i z1 q²/2k]
///           · ∫ T(x) exp[-i (k x1/fc + q) x] dx
/// ```
pub fn closed_form_s2_arm1(
    geom: &Geometry,
    object: &ObjectQuadrature,
    grid: &Grid1D,
    detector: &[f64],
) -> Result<TransferMap> {
    geom.validate()?;
    let z1 = geom.require_z1()?;
    let (k, fc) = (geom.k, geom.fc);
    let pre = (Complex64::new(k / fc, 0.0) / I).sqrt() / TAU;
    let global = (k * (z1 + 2.0 * fc)).rem_euclid(TAU);
    let nodes = object.nodes();
    let weighted: Vec<(f64, Complex64)> = object
        .support()
        .map(|i| (nodes[i], object.values()[i] * object.spacing()))
        .collect();
    let rows = rows_par(detector, grid, |x1, qs| {
        qs.iter()
            .map(|&q| {
                let nu = k * x1 / fc + q;
                let inner: Complex64 = weighted.iter().map(|&(x, g)| g * cis(-nu * x)).sum();
                pre * cis(global - z1 * q * q / (2.0 * k)) * inner
            })
            .collect()
    });
    TransferMap::from_rows(rows, detector, grid, Provenance::ClosedForm)
}

/// Scheme II arm 2: imaging lens followed by the scanning detector D2.
///
/// ```text
/// h2(x2, q) = √(f / 2π(f - z3)) exp[i k (z2 + z3) - i q²/2k (z2 + z3 f/(f - z3))
///                                  - i q x2 f/(f - z3) - i k x2²/2(f - z3)]
/// ```
pub fn closed_form_s2_arm2(geom: &Geometry, grid: &Grid1D, detector: &[f64]) -> Result<TransferMap> {
    geom.validate()?;
    let z3 = geom.require_z3()?;
    let (k, f, z2) = (geom.k, geom.f, geom.z2);
    if z3 == f {
        return Err(Error::degenerate("z3 equals f"));
    }
    let amp = Complex64::new(f / (TAU * (f - z3)), 0.0).sqrt();
    let z_eff = z2 + z3 * f / (f - z3);
    let global = (k * (z2 + z3)).rem_euclid(TAU);
    let scale = f / (f - z3);
    let rows = rows_par(detector, grid, |x2, qs| {
        let chirp = -k * x2 * x2 / (2.0 * (f - z3));
        qs.iter()
            .map(|&q| amp * cis(global - q * q * z_eff / (2.0 * k) - q * x2 * scale + chirp))
            .collect()
    });
    TransferMap::from_rows(rows, detector, grid, Provenance::ClosedForm)
}

/// Closed-form maps for both arms of a fully specified layout.
pub fn closed_form_arms(
    geom: &Geometry,
    object: &ObjectQuadrature,
    grid: &Grid1D,
    detector1: &[f64],
    detector2: &[f64],
) -> Result<(TransferMap, TransferMap)> {
    match geom.scheme {
        Scheme::I => Ok((
            closed_form_s1_arm1(geom, grid, detector1)?,
            closed_form_s1_arm2(geom, object, grid, detector2)?,
        )),
        Scheme::II => Ok((
            closed_form_s2_arm1(geom, object, grid, detector1)?,
            closed_form_s2_arm2(geom, grid, detector2)?,
        )),
    }
}
