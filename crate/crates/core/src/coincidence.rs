//! Joint intensities and ghost images.

use std::io::{self, Write};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldgrid::{
    sample_object, validate_sampling, Grid1D, ObjectQuadrature, ObjectSpec, SpectrumKind, SpectrumProfile,
};
use crate::geometry::{Correlation, DualWeights, Geometry, Scheme};
use crate::kernels::{closed_form_arms, TransferMap};

/// Joint intensity over detector pairs, rows indexed by `x1`, columns by `x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointIntensityResult {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub total: Array2<f64>,
    /// Product of the two marginal intensities; zero for entangled light.
    pub background: Array2<f64>,
    pub correlation: Array2<f64>,
}

fn check_inputs(h1: &TransferMap, h2: &TransferMap, spectrum: &SpectrumProfile, kind: SpectrumKind) -> Result<()> {
    h1.same_grid(h2)?;
    spectrum.check_grid(&h1.grid)?;
    if spectrum.kind != kind {
        return Err(Error::invalid(match kind {
            SpectrumKind::PowerSpectrum => "thermal light needs a power spectrum",
            SpectrumKind::BiphotonAmplitude => "entangled light needs a biphoton amplitude",
        }));
    }
    Ok(())
}

/// Thermal source:
/// `∫S|h1(x1,-q)|² · ∫S|h2(x2,-q)|² + |∫S h1*(x1,-q) h2(x2,-q)|²`.
pub fn joint_intensity_classical(
    h1: &TransferMap,
    h2: &TransferMap,
    s: &SpectrumProfile,
) -> Result<JointIntensityResult> {
    check_inputs(h1, h2, s, SpectrumKind::PowerSpectrum)?;
    let grid = h1.grid;
    let cols = grid.q_len();
    let w: Vec<f64> = (0..cols).map(|j| s.weight(&grid, j).re).collect();
    // entry j of a reordered row holds h(x, -q_j)
    let neg = |h: &TransferMap, i: usize| -> Vec<Complex64> { (0..cols).map(|j| h.h[[i, grid.negated(j)]]).collect() };
    let marginal = |h: &TransferMap| -> Vec<f64> {
        (0..h.rows())
            .map(|i| neg(h, i).iter().zip(&w).map(|(h, w)| w * h.norm_sqr()).sum())
            .collect()
    };
    let m1 = marginal(h1);
    let m2 = marginal(h2);
    let rows2: Vec<Vec<Complex64>> = (0..h2.rows()).map(|i| neg(h2, i)).collect();
    let corr_rows: Vec<Vec<f64>> = (0..h1.rows())
        .into_par_iter()
        .map(|i1| {
            let a: Vec<Complex64> = neg(h1, i1).iter().zip(&w).map(|(h, w)| h.conj() * *w).collect();
            rows2
                .iter()
                .map(|b| a.iter().zip(b).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr())
                .collect()
        })
        .collect();
    let shape = (h1.rows(), h2.rows());
    let correlation = Array2::from_shape_fn(shape, |(i, j)| corr_rows[i][j]);
    let background = Array2::from_shape_fn(shape, |(i, j)| m1[i] * m2[j]);
    Ok(JointIntensityResult {
        x1: h1.detector.clone(),
        x2: h2.detector.clone(),
        total: &background + &correlation,
        background,
        correlation,
    })
}

/// Entangled source: `|∫W h1(x1,-q) h2(x2,q)|²`.
pub fn joint_intensity_quantum(
    h1: &TransferMap,
    h2: &TransferMap,
    w: &SpectrumProfile,
) -> Result<JointIntensityResult> {
    check_inputs(h1, h2, w, SpectrumKind::BiphotonAmplitude)?;
    let grid = h1.grid;
    let cols = grid.q_len();
    let rows2: Vec<Vec<Complex64>> = (0..h2.rows())
        .map(|i| (0..cols).map(|j| h2.h[[i, j]] * w.weight(&grid, j)).collect())
        .collect();
    let corr_rows: Vec<Vec<f64>> = (0..h1.rows())
        .into_par_iter()
        .map(|i1| {
            let a: Vec<Complex64> = (0..cols).map(|j| h1.h[[i1, grid.negated(j)]]).collect();
            rows2
                .iter()
                .map(|b| a.iter().zip(b).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr())
                .collect()
        })
        .collect();
    let shape = (h1.rows(), h2.rows());
    let correlation = Array2::from_shape_fn(shape, |(i, j)| corr_rows[i][j]);
    Ok(JointIntensityResult {
        x1: h1.detector.clone(),
        x2: h2.detector.clone(),
        total: correlation.clone(),
        background: Array2::zeros(shape),
        correlation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageOptions {
    /// Coordinate of the bucket detector behind the collective lens.
    pub fixed_coordinate: f64,
    pub allow_defocus: bool,
    /// Largest accepted imaging-equation residual when defocus is not allowed.
    pub tolerance: f64,
    /// Object quadrature oversampling; `None` picks `ceil(|magnification|)`.
    pub oversample: Option<usize>,
}

impl Default for ImageOptions {
    fn default() -> Self {
        ImageOptions {
            fixed_coordinate: 0.0,
            allow_defocus: false,
            tolerance: 1e-9,
            oversample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhostImage {
    pub correlation_kind: Correlation,
    pub scan_axis: ScanAxis,
    pub fixed_coordinate: f64,
    pub coordinates: Vec<f64>,
    pub total: Vec<f64>,
    pub background: Vec<f64>,
    pub correlation: Vec<f64>,
    pub background_subtracted: Vec<f64>,
    /// Object-to-image transverse scale of the layout.
    pub magnification: f64,
    pub residual: f64,
    /// Visibility over the default region of interest.
    pub visibility: f64,
    roi: (f64, f64),
}

impl GhostImage {
    /// Default region of interest: the predicted image of the object support
    /// with a margin on each side, or the whole scan for objects without
    /// compact support.
    pub fn default_roi(&self) -> (f64, f64) {
        self.roi
    }

    /// The image signal: the correlation term, which is the background
    /// subtracted total.
    pub fn signal(&self) -> &[f64] {
        &self.background_subtracted
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "coordinate,total,background,correlation,background_subtracted")?;
        for i in 0..self.coordinates.len() {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                self.coordinates[i], self.total[i], self.background[i], self.correlation[i], self.background_subtracted[i]
            )?;
        }
        Ok(())
    }
}

/// `(max - min)/(max + min)` of the total profile over `roi`.
pub fn visibility(img: &GhostImage, roi: Option<(f64, f64)>) -> Result<f64> {
    let (lo, hi) = roi.unwrap_or(img.roi);
    profile_visibility(&img.coordinates, &img.total, lo, hi)
}

fn profile_visibility(coords: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let span = 1e-9 * (hi - lo).abs().max(1.0);
    let sel: Vec<f64> = coords
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= lo - span && **x <= hi + span)
        .map(|(_, v)| *v)
        .collect();
    if sel.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let max = sel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = sel.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    if max + min <= 0.0 {
        return Ok(0.0);
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

/// Object quadrature used for a layout: oversampled so that image points of
/// the lattice fall on the detector grid, and limited to the part of the
/// object imaged inside the detector window.
pub fn object_quadrature(
    geom: &Geometry,
    object: &ObjectSpec,
    grid: &Grid1D,
    oversample: Option<usize>,
) -> Result<ObjectQuadrature> {
    let m = geom.image_scale()?;
    let r = match oversample {
        Some(r) => r,
        None => (m.abs().ceil() as usize).clamp(1, 16),
    };
    let profile = sample_object(object, grid)?;
    let quad = ObjectQuadrature::new(&profile, grid, r)?;
    Ok(if m.abs() > 1.0 {
        quad.with_field_of_view(grid.length() / (2.0 * m.abs()))
    } else {
        quad
    })
}

/// Both arm maps of a layout, with the bucket detector at one fixed
/// coordinate. The scanning detector covers the grid, or only the central
/// `|M| L` of it when `|M| < 1`: the wavevector sum repeats the image with
/// that period on the scan axis.
#[derive(Debug, Clone)]
pub struct Layout {
    pub h1: TransferMap,
    pub h2: TransferMap,
    pub scan_axis: ScanAxis,
    pub magnification: f64,
    pub residual: f64,
    /// Predicted image of the object support on the scan axis, widened by
    /// half its width (at least two samples) on each side so that it holds
    /// dark samples next to the image.
    pub roi: (f64, f64),
}

impl Layout {
    pub fn scan(&self) -> &[f64] {
        match self.scan_axis {
            ScanAxis::X1 => &self.h1.detector,
            ScanAxis::X2 => &self.h2.detector,
        }
    }
}

/// Validates a layout for one branch and builds its closed-form arm maps.
pub fn build_layout(
    geom: &Geometry,
    correlation: Correlation,
    object: &ObjectSpec,
    grid: &Grid1D,
    options: &ImageOptions,
) -> Result<Layout> {
    geom.validate()?;
    geom.require_z1()?;
    geom.require_z3()?;
    let residual = geom.imaging_residual(correlation)?;
    if !options.allow_defocus && !(residual <= options.tolerance) {
        return Err(Error::ImagingEquationUnsatisfied { residual });
    }
    let quad = object_quadrature(geom, object, grid, options.oversample)?;
    validate_sampling(geom, grid, Some(&quad))?.into_result()?;

    let m = geom.image_scale()?;
    let half = 0.5 * grid.length() * m.abs().min(1.0);
    let scan: Vec<f64> = grid.xs().into_iter().filter(|x| (-half..half).contains(x)).collect();
    let fixed = [options.fixed_coordinate];
    let (axis, d1, d2) = match geom.scheme {
        Scheme::I => (ScanAxis::X1, &scan[..], &fixed[..]),
        Scheme::II => (ScanAxis::X2, &fixed[..], &scan[..]),
    };
    let (h1, h2) = closed_form_arms(geom, &quad, grid, d1, d2)?;
    let roi = match object.support() {
        Some((a, b)) => {
            let (p, q) = (a * m, b * m);
            let pad = (0.5 * (p - q).abs()).max(2.0 * grid.dx());
            ((p.min(q) - pad).max(scan[0]), (p.max(q) + pad).min(scan[scan.len() - 1]))
        }
        None => (scan[0], scan[scan.len() - 1]),
    };
    Ok(Layout {
        h1,
        h2,
        scan_axis: axis,
        magnification: m,
        residual,
        roi,
    })
}

fn spectrum_kind(correlation: Correlation) -> SpectrumKind {
    match correlation {
        Correlation::Classical => SpectrumKind::PowerSpectrum,
        Correlation::Quantum => SpectrumKind::BiphotonAmplitude,
    }
}

/// Ghost image of `object` for one correlation branch.
///
/// The scanning detector is D1 in scheme I and D2 in scheme II; the other
/// detector sits behind the collective lens at `options.fixed_coordinate`.
pub fn ghost_image(
    geom: &Geometry,
    correlation: Correlation,
    object: &ObjectSpec,
    grid: &Grid1D,
    spectrum: &SpectrumProfile,
    options: &ImageOptions,
) -> Result<GhostImage> {
    if spectrum.kind != spectrum_kind(correlation) {
        return Err(Error::invalid("spectrum kind does not match the source"));
    }
    spectrum.check_grid(grid)?;
    let layout = build_layout(geom, correlation, object, grid, options)?;
    let joint = match correlation {
        Correlation::Classical => joint_intensity_classical(&layout.h1, &layout.h2, spectrum)?,
        Correlation::Quantum => joint_intensity_quantum(&layout.h1, &layout.h2, spectrum)?,
    };
    let flat = |a: &Array2<f64>| a.iter().cloned().collect::<Vec<f64>>();
    let total = flat(&joint.total);
    let corr = flat(&joint.correlation);
    let scan = layout.scan().to_vec();
    let roi = layout.roi;
    let vis = profile_visibility(&scan, &total, roi.0, roi.1)?;
    Ok(GhostImage {
        correlation_kind: correlation,
        scan_axis: layout.scan_axis,
        fixed_coordinate: options.fixed_coordinate,
        coordinates: scan,
        total,
        background: flat(&joint.background),
        background_subtracted: corr.clone(),
        correlation: corr,
        magnification: layout.magnification,
        residual: layout.residual,
        visibility: vis,
        roi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualImage {
    pub classical: GhostImage,
    pub quantum: GhostImage,
    pub weights: DualWeights,
    /// `w_cl · classical total + w_qu · quantum correlation`.
    pub combined: Vec<f64>,
}

/// Both images of a type-I source on one physical layout.
///
/// Each branch is evaluated whether or not the layout satisfies its own
/// imaging equation; the residual of each is reported on its image.
#[allow(clippy::too_many_arguments)]
pub fn dual_image(
    geom: &Geometry,
    object: &ObjectSpec,
    grid: &Grid1D,
    s: &SpectrumProfile,
    w: &SpectrumProfile,
    weights: DualWeights,
    options: &ImageOptions,
) -> Result<DualImage> {
    weights.validate()?;
    let opts = ImageOptions {
        allow_defocus: true,
        ..*options
    };
    let classical = ghost_image(geom, Correlation::Classical, object, grid, s, &opts)
        .map_err(|e| e.in_branch(Correlation::Classical.branch()))?;
    let quantum = ghost_image(geom, Correlation::Quantum, object, grid, w, &opts)
        .map_err(|e| e.in_branch(Correlation::Quantum.branch()))?;
    let combined = classical
        .total
        .iter()
        .zip(&quantum.correlation)
        .map(|(c, q)| weights.classical * c + weights.quantum * q)
        .collect();
    Ok(DualImage {
        classical,
        quantum,
        weights,
        combined,
    })
}

/// Peak over sum of a non-negative profile; larger is sharper.
pub fn peak_sharpness(profile: &[f64]) -> f64 {
    let sum: f64 = profile.iter().map(|v| v.max(0.0)).sum();
    if sum <= 0.0 {
        return 0.0;
    }
    profile.iter().cloned().fold(0.0, f64::max) / sum
}

/// Centres of the `count` largest contiguous regions where the profile
/// exceeds half its maximum, in ascending order.
pub fn peak_centers(coords: &[f64], profile: &[f64], count: usize) -> Vec<f64> {
    let max = profile.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut regions: Vec<(f64, f64)> = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=profile.len() {
        let above = i < profile.len() && profile[i] > 0.5 * max;
        match (above, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let area: f64 = profile[s..i].iter().sum();
                regions.push((area, 0.5 * (coords[s] + coords[i - 1])));
                start = None;
            }
            _ => {}
        }
    }
    regions.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut centers: Vec<f64> = regions.into_iter().take(count).map(|r| r.1).collect();
    centers.sort_by(f64::total_cmp);
    centers
}

/// Peak-normalized copy of a profile.
pub fn normalized(profile: &[f64]) -> Vec<f64> {
    let max = profile.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return profile.to_vec();
    }
    profile.iter().map(|v| v / max).collect()
}
