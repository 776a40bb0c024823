//! Sampling grids, object transmissions and source spectra.
//!
//! The position grid has `n` samples `x[j] = (j - n/2) dx` over a window of
//! length `L`. The wavevector grid is its discrete Fourier dual,
//! `q[j] = (j - n/2) dq` with `dq = 2π/L`. Wavevector integrals run over the
//! `n + 1` nodes `j = 0..=n`, which span `[-q_max, q_max]` symmetrically so that
//! every node has its negative on the grid; the two Nyquist end nodes carry
//! half weight, which makes the quadrature identical to a periodic DFT sum.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::invalid(format!("grid size must be even and at least 16, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("grid length must be positive and finite"));
        }
        Ok(Grid1D { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dq(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Number of wavevector integration nodes, `n + 1`.
    pub fn q_len(&self) -> usize {
        self.n + 1
    }

    pub fn q(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dq()
    }

    pub fn q_nodes(&self) -> Vec<f64> {
        (0..self.q_len()).map(|j| self.q(j)).collect()
    }

    /// Quadrature weight of wavevector node `j`.
    pub fn q_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n {
            0.5 * self.dq()
        } else {
            self.dq()
        }
    }

    /// Index of the node at `-q[j]`.
    pub fn negated(&self, j: usize) -> usize {
        self.n - j
    }

    pub fn q_max(&self) -> f64 {
        self.q(self.n)
    }
}

/// Make a grid; see [`Grid1D::new`].
pub fn make_grid(n: usize, length: f64) -> Result<Grid1D> {
    Grid1D::new(n, length)
}

/// Two-column `(coordinate, value)` or three-column `(coordinate, re, im)`
/// whitespace-separated table. Lines starting with `#` are comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub coords: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            let cols = cols.map_err(|e| Error::invalid(format!("table line {}: {e}", lineno + 1)))?;
            let value = match cols.as_slice() {
                [_, v] => Complex64::new(*v, 0.0),
                [_, re, im] => Complex64::new(*re, *im),
                _ => {
                    return Err(Error::invalid(format!(
                        "table line {}: expected 2 or 3 columns, found {}",
                        lineno + 1,
                        cols.len()
                    )))
                }
            };
            if !cols.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("table line {}: non-finite value", lineno + 1)));
            }
            rows.push((cols[0], value));
        }
        if rows.len() < 2 {
            return Err(Error::invalid("table needs at least two rows"));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("table coordinates must be strictly increasing"));
        }
        Ok(Table {
            coords: rows.iter().map(|r| r.0).collect(),
            values: rows.iter().map(|r| r.1).collect(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Table::parse(&text)
    }

    /// Linear interpolation; zero outside the tabulated range.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let c = &self.coords;
        if x < c[0] || x > c[c.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let i = c.partition_point(|&v| v <= x).clamp(1, c.len() - 1);
        let t = (x - c[i - 1]) / (c[i] - c[i - 1]);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// Object transmission descriptors.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectSpec {
    /// Fully transmitting, `T ≡ 1`.
    Uniform,
    SingleSlit { width: f64, center: f64 },
    /// Two slits of equal width centred at `±separation/2`.
    DoubleSlit { separation: f64, width: f64 },
    /// `T(x) = exp(-x²/w²)`.
    Gaussian { waist: f64 },
    Table(Table),
}

impl ObjectSpec {
    fn validate(&self, grid: &Grid1D) -> Result<()> {
        let half = grid.length() / 2.0;
        let check_band = |lo: f64, hi: f64| {
            if lo < -half || hi > half {
                Err(Error::invalid(format!(
                    "slit [{lo}, {hi}] does not fit the grid window [-{half}, {half}]"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            ObjectSpec::Uniform => Ok(()),
            ObjectSpec::SingleSlit { width, center } => {
                if !(*width > 0.0 && width.is_finite() && center.is_finite()) {
                    return Err(Error::invalid("slit width must be positive"));
                }
                check_band(center - width / 2.0, center + width / 2.0)
            }
            ObjectSpec::DoubleSlit { separation, width } => {
                if !(*width > 0.0 && width.is_finite() && separation.is_finite()) {
                    return Err(Error::invalid("slit width must be positive"));
                }
                if width >= separation {
                    return Err(Error::invalid("double-slit width must be below the separation"));
                }
                check_band(-separation / 2.0 - width / 2.0, separation / 2.0 + width / 2.0)
            }
            ObjectSpec::Gaussian { waist } => {
                if *waist > 0.0 && waist.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("gaussian waist must be positive"))
                }
            }
            ObjectSpec::Table(t) => {
                if t.values.iter().any(|v| v.norm() > 1.0 + 1e-12) {
                    Err(Error::invalid("object table has |T| > 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Samples the transmission at `nodes`, treating each node as the centre of
    /// a cell of width `spacing`. Binary slits take the covered fraction of the
    /// cell.
    pub fn sample_at(&self, nodes: &[f64], spacing: f64) -> Vec<Complex64> {
        let cover = |x: f64, lo: f64, hi: f64| {
            let a = (x - spacing / 2.0).max(lo);
            let b = (x + spacing / 2.0).min(hi);
            ((b - a) / spacing).clamp(0.0, 1.0)
        };
        nodes
            .iter()
            .map(|&x| {
                let t = match self {
                    ObjectSpec::Uniform => 1.0,
                    ObjectSpec::SingleSlit { width, center } => {
                        cover(x, center - width / 2.0, center + width / 2.0)
                    }
                    ObjectSpec::DoubleSlit { separation, width } => {
                        let c = separation / 2.0;
                        let w = width / 2.0;
                        cover(x, -c - w, -c + w) + cover(x, c - w, c + w)
                    }
                    ObjectSpec::Gaussian { waist } => (-(x / waist).powi(2)).exp(),
                    ObjectSpec::Table(t) => return t.interpolate(x),
                };
                Complex64::new(t, 0.0)
            })
            .collect()
    }

    /// Smallest interval outside of which the transmission vanishes, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            ObjectSpec::Uniform | ObjectSpec::Gaussian { .. } => None,
            ObjectSpec::SingleSlit { width, center } => {
                Some((center - width / 2.0, center + width / 2.0))
            }
            ObjectSpec::DoubleSlit { separation, width } => {
                let e = separation / 2.0 + width / 2.0;
                Some((-e, e))
            }
            ObjectSpec::Table(t) => Some((t.coords[0], t.coords[t.coords.len() - 1])),
        }
    }
}

/// Object transmission sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectProfile {
    pub spec: ObjectSpec,
    pub values: Vec<Complex64>,
}

pub fn sample_object(spec: &ObjectSpec, grid: &Grid1D) -> Result<ObjectProfile> {
    spec.validate(grid)?;
    let values = spec.sample_at(&grid.xs(), grid.dx());
    if values.iter().any(|v| v.norm() > 1.0 + 1e-12) {
        return Err(Error::invalid("sampled object has |T| > 1"));
    }
    Ok(ObjectProfile {
        spec: spec.clone(),
        values,
    })
}

/// Quadrature rule for integrals over the object plane.
///
/// Nodes form a uniform lattice with spacing `dx / oversample` over the grid
/// window. Oversampling resolves the object finely enough for images that are
/// magnified relative to the object; an optional field of view zeroes object
/// points that would image outside the detector window.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectQuadrature {
    spacing: f64,
    nodes: Vec<f64>,
    values: Vec<Complex64>,
    support: Range<usize>,
}

impl ObjectQuadrature {
    pub fn new(object: &ObjectProfile, grid: &Grid1D, oversample: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::invalid("oversample factor must be at least 1"));
        }
        let (nodes, values, spacing) = if oversample == 1 {
            (grid.xs(), object.values.clone(), grid.dx())
        } else {
            let m = grid.n() * oversample;
            let spacing = grid.dx() / oversample as f64;
            let nodes: Vec<f64> = (0..m)
                .map(|j| (j as f64 - (m / 2) as f64) * spacing)
                .collect();
            let values = object.spec.sample_at(&nodes, spacing);
            (nodes, values, spacing)
        };
        Ok(Self::from_parts(spacing, nodes, values))
    }

    fn from_parts(spacing: f64, nodes: Vec<f64>, values: Vec<Complex64>) -> Self {
        let first = values.iter().position(|v| *v != Complex64::new(0.0, 0.0));
        let support = match first {
            Some(a) => {
                let b = values.iter().rposition(|v| *v != Complex64::new(0.0, 0.0)).unwrap();
                a..b + 1
            }
            None => 0..0,
        };
        ObjectQuadrature {
            spacing,
            nodes,
            values,
            support,
        }
    }

    /// Zeroes every node with `|x| > half_width`.
    pub fn with_field_of_view(self, half_width: f64) -> Self {
        let values = self
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(x, v)| if x.abs() > half_width { Complex64::new(0.0, 0.0) } else { *v })
            .collect();
        Self::from_parts(self.spacing, self.nodes, values)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Index range holding every nonzero transmission value.
    pub fn support(&self) -> Range<usize> {
        self.support.clone()
    }

    /// Largest `|x|` over the support, or 0 for an opaque object.
    pub fn extent(&self) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        self.nodes[self.support.start]
            .abs()
            .max(self.nodes[self.support.end - 1].abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Real, non-negative `S(q)` of a thermal source.
    PowerSpectrum,
    /// Possibly complex `W(q)` of an entangled pair.
    BiphotonAmplitude,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSpec {
    /// 1 for `|q| <= bandwidth`, 0 beyond; an infinite bandwidth is the
    /// broadband limit, flat over the whole simulated band.
    Flat { bandwidth: f64 },
    /// `exp(-q²/(2 width²))`.
    Gaussian { width: f64 },
    Table(Table),
}

impl SpectrumSpec {
    pub fn broadband() -> Self {
        SpectrumSpec::Flat {
            bandwidth: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    pub kind: SpectrumKind,
    pub grid: Grid1D,
    /// One value per wavevector node, `grid.q_len()` entries.
    pub values: Vec<Complex64>,
}

impl SpectrumProfile {
    /// Spectrum value times quadrature weight at node `j`.
    pub fn weight(&self, grid: &Grid1D, j: usize) -> Complex64 {
        self.values[j] * grid.q_weight(j)
    }

    pub fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.values.len() != grid.q_len() || self.grid != *grid {
            return Err(Error::GridMismatch(format!(
                "spectrum sampled on (n={}, L={}), needed on (n={}, L={})",
                self.grid.n(),
                self.grid.length(),
                grid.n(),
                grid.length()
            )));
        }
        Ok(())
    }
}

pub fn sample_spectrum(spec: &SpectrumSpec, kind: SpectrumKind, grid: &Grid1D) -> Result<SpectrumProfile> {
    let qs = grid.q_nodes();
    let values: Vec<Complex64> = match spec {
        SpectrumSpec::Flat { bandwidth } => {
            if bandwidth.is_nan() || *bandwidth < 0.0 {
                return Err(Error::invalid("spectrum bandwidth must be non-negative"));
            }
            qs.iter()
                .map(|q| Complex64::new(if q.abs() <= *bandwidth { 1.0 } else { 0.0 }, 0.0))
                .collect()
        }
        SpectrumSpec::Gaussian { width } => {
            if !(*width > 0.0) {
                return Err(Error::invalid("spectrum width must be positive"));
            }
            qs.iter()
                .map(|q| Complex64::new((-0.5 * (q / width).powi(2)).exp(), 0.0))
                .collect()
        }
        SpectrumSpec::Table(t) => qs.iter().map(|&q| t.interpolate(q)).collect(),
    };
    if kind == SpectrumKind::PowerSpectrum
        && values.iter().any(|v| v.im != 0.0 || v.re < 0.0 || !v.re.is_finite())
    {
        return Err(Error::invalid("power spectrum must be real and non-negative"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("spectrum must be finite"));
    }
    Ok(SpectrumProfile {
        kind,
        grid: *grid,
        values,
    })
}

/// Phase step of one quadratic phase factor between adjacent samples at the
/// edge of its integration domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFactor {
    pub name: String,
    /// Radians per sample; must stay below π.
    pub step: f64,
}

impl PhaseFactor {
    /// `1 - step/π`; negative when the factor is aliased.
    pub fn margin(&self) -> f64 {
        1.0 - self.step / PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingReport {
    pub factors: Vec<PhaseFactor>,
}

impl SamplingReport {
    pub fn worst_margin(&self) -> f64 {
        self.factors.iter().map(PhaseFactor::margin).fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self) -> impl Iterator<Item = &PhaseFactor> {
        self.factors.iter().filter(|f| f.step >= PI)
    }

    pub fn is_ok(&self) -> bool {
        self.violations().next().is_none()
    }

    /// `Ok(self)` when every factor is resolved, else a sampling error.
    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::SamplingViolation(self))
        }
    }
}

impl fmt::Display for SamplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut bad = self.violations().peekable();
        if bad.peek().is_none() {
            return write!(f, "all phase factors resolved (worst margin {:.3})", self.worst_margin());
        }
        let parts: Vec<String> = bad
            .map(|p| format!("{} steps {:.3} rad per sample", p.name, p.step))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

fn q_factor(name: &str, grid: &Grid1D, z_eff: f64, k: f64) -> PhaseFactor {
    let qm = grid.q_max();
    let qi = qm - grid.dq();
    PhaseFactor {
        name: name.to_string(),
        step: ((qm * qm - qi * qi) * z_eff / (2.0 * k)).abs(),
    }
}

/// Checks every quadratic phase factor that enters a quadrature of the
/// scheme's joint intensity.
///
/// Wavevector factors `exp(-i q² z/2k)` are checked at `±q_max`. The
/// object-plane factor `exp(i k x²/2(z3 - f))` of scheme I is checked at the
/// edge of the object support with the object quadrature spacing, or at the
/// grid edge when no object is given. Factors evaluated pointwise and never
/// integrated (the detector-plane chirp of the scheme II imaging arm) do not
/// alias and are not listed.
pub fn validate_sampling(
    geom: &Geometry,
    grid: &Grid1D,
    object: Option<&ObjectQuadrature>,
) -> Result<SamplingReport> {
    geom.validate()?;
    let z1 = geom.require_z1()?;
    let z3 = geom.require_z3()?;
    let f = geom.f;
    let k = geom.k;
    if z3 == f {
        return Err(Error::degenerate("z3 equals f"));
    }
    let z_img = geom.z2 + z3 * f / (f - z3);
    let mut factors = vec![
        q_factor("arm 1 exp(-i q² z1/2k)", grid, z1, k),
        q_factor("arm 2 exp(-i q² (z2 + z3 f/(f - z3))/2k)", grid, z_img, k),
    ];
    if geom.scheme == Scheme::I {
        let (edge, spacing) = match object {
            Some(o) => (o.extent(), o.spacing()),
            None => (grid.length() / 2.0, grid.dx()),
        };
        let inner = (edge - spacing).max(0.0);
        factors.push(PhaseFactor {
            name: "object plane exp(i k x²/2(z3 - f))".to_string(),
            step: k * (edge * edge - inner * inner) / (2.0 * (z3 - f).abs()),
        });
    }
    Ok(SamplingReport { factors })
}
