//! Monte-Carlo sampling of thermal light.
//!
//! Each realization draws independent circular Gaussian amplitudes `F(q_j)`
//! with `⟨|F(q_j)|²⟩ = S(q_j) w_j`, `w_j` the wavevector quadrature weight.
//! Realization `r` of a run with seed `s` uses ChaCha stream `r` of key `s`,
//! so every draw is reproducible independently of scheduling.

use std::io::{self, Write};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldgrid::{Grid1D, SpectrumKind, SpectrumProfile};
use crate::kernels::TransferMap;

/// Realizations summed serially per block before blocks are combined in
/// index order.
const BLOCK: usize = 64;
/// Blocks evaluated concurrently between ordered merges.
const WAVE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub amplitudes: Vec<Complex64>,
    pub seed: u64,
    pub stream: u64,
}

pub fn draw_realization(s: &SpectrumProfile, grid: &Grid1D, seed: u64, stream: u64) -> Result<Realization> {
    if s.kind != SpectrumKind::PowerSpectrum {
        return Err(Error::invalid("Monte-Carlo sampling needs a power spectrum"));
    }
    s.check_grid(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let amplitudes = (0..grid.q_len())
        .map(|j| {
            let sigma = (s.weight(grid, j).re / 2.0).sqrt();
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            Complex64::new(g1, g2) * sigma
        })
        .collect();
    Ok(Realization {
        amplitudes,
        seed,
        stream,
    })
}

/// `I(x_i) = |Σ_j h(x_i, -q_j) F(q_j)|²`.
pub fn propagate(h: &TransferMap, r: &Realization) -> Result<Vec<f64>> {
    if r.amplitudes.len() != h.grid.q_len() {
        return Err(Error::GridMismatch(format!(
            "realization has {} amplitudes, map has {} columns",
            r.amplitudes.len(),
            h.grid.q_len()
        )));
    }
    Ok(intensity(h, &r.amplitudes))
}

fn intensity(h: &TransferMap, f: &[Complex64]) -> Vec<f64> {
    let n = h.grid.n();
    (0..h.rows())
        .map(|i| {
            let row = h.h.row(i);
            f.iter()
                .enumerate()
                .map(|(j, a)| row[n - j] * a)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect()
}

/// Sample moments of the intensities at both detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCorrelation {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub mean1: Vec<f64>,
    pub mean2: Vec<f64>,
    /// `⟨I1(x1) I2(x2)⟩`.
    pub joint: Array2<f64>,
    /// `⟨I1 I2⟩ - ⟨I1⟩⟨I2⟩`.
    pub covariance: Array2<f64>,
    /// Standard errors of the means; NaN for a single realization.
    pub stderr1: Vec<f64>,
    pub stderr2: Vec<f64>,
    pub joint_stderr: Array2<f64>,
}

#[derive(Clone)]
struct Sums {
    s1: Vec<f64>,
    s2: Vec<f64>,
    q1: Vec<f64>,
    q2: Vec<f64>,
    s12: Array2<f64>,
    q12: Array2<f64>,
}

impl Sums {
    fn zero(n1: usize, n2: usize) -> Self {
        Sums {
            s1: vec![0.0; n1],
            s2: vec![0.0; n2],
            q1: vec![0.0; n1],
            q2: vec![0.0; n2],
            s12: Array2::zeros((n1, n2)),
            q12: Array2::zeros((n1, n2)),
        }
    }

    fn add_sample(&mut self, i1: &[f64], i2: &[f64]) {
        for (k, v) in i1.iter().enumerate() {
            self.s1[k] += v;
            self.q1[k] += v * v;
        }
        for (k, v) in i2.iter().enumerate() {
            self.s2[k] += v;
            self.q2[k] += v * v;
        }
        for (a, va) in i1.iter().enumerate() {
            for (b, vb) in i2.iter().enumerate() {
                let p = va * vb;
                self.s12[[a, b]] += p;
                self.q12[[a, b]] += p * p;
            }
        }
    }

    fn merge(&mut self, o: &Sums) {
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.s1, &o.s1);
        add(&mut self.s2, &o.s2);
        add(&mut self.q1, &o.q1);
        add(&mut self.q2, &o.q2);
        self.s12 += &o.s12;
        self.q12 += &o.q12;
    }
}

fn mean_and_stderr(sum: f64, sq: f64, m: f64) -> (f64, f64) {
    let mean = sum / m;
    if m < 2.0 {
        return (mean, f64::NAN);
    }
    let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
    (mean, (var / m).sqrt())
}

/// Sample moments over `m` realizations with both arms driven by the same
/// field; bit-identical for a fixed seed.
pub fn accumulate(
    s: &SpectrumProfile,
    h1: &TransferMap,
    h2: &TransferMap,
    m: usize,
    seed: u64,
) -> Result<EmpiricalCorrelation> {
    if m == 0 {
        return Err(Error::invalid("at least one realization is required"));
    }
    h1.same_grid(h2)?;
    let grid = h1.grid;
    if s.kind != SpectrumKind::PowerSpectrum {
        return Err(Error::invalid("Monte-Carlo sampling needs a power spectrum"));
    }
    s.check_grid(&grid)?;
    let (n1, n2) = (h1.rows(), h2.rows());
    let blocks = m.div_ceil(BLOCK);
    let block_sums = |b: usize| -> Result<Sums> {
        let mut acc = Sums::zero(n1, n2);
        for r in b * BLOCK..((b + 1) * BLOCK).min(m) {
            let f = draw_realization(s, &grid, seed, r as u64)?;
            acc.add_sample(&intensity(h1, &f.amplitudes), &intensity(h2, &f.amplitudes));
        }
        Ok(acc)
    };
    let mut total = Sums::zero(n1, n2);
    for wave in (0..blocks).step_by(WAVE) {
        let parts: Vec<Sums> = (wave..(wave + WAVE).min(blocks))
            .into_par_iter()
            .map(block_sums)
            .collect::<Result<_>>()?;
        for p in &parts {
            total.merge(p);
        }
    }

    let mf = m as f64;
    let (mean1, stderr1): (Vec<f64>, Vec<f64>) =
        total.s1.iter().zip(&total.q1).map(|(a, b)| mean_and_stderr(*a, *b, mf)).unzip();
    let (mean2, stderr2): (Vec<f64>, Vec<f64>) =
        total.s2.iter().zip(&total.q2).map(|(a, b)| mean_and_stderr(*a, *b, mf)).unzip();
    let joint = total.s12.mapv(|v| v / mf);
    let joint_stderr = Array2::from_shape_fn((n1, n2), |(a, b)| {
        mean_and_stderr(total.s12[[a, b]], total.q12[[a, b]], mf).1
    });
    let covariance = Array2::from_shape_fn((n1, n2), |(a, b)| joint[[a, b]] - mean1[a] * mean2[b]);
    Ok(EmpiricalCorrelation {
        x1: h1.detector.clone(),
        x2: h2.detector.clone(),
        realizations: m,
        seed,
        mean1,
        mean2,
        joint,
        covariance,
        stderr1,
        stderr2,
        joint_stderr,
    })
}

impl EmpiricalCorrelation {
    /// One row per detector pair, preceded by `# `-prefixed manifest lines.
    pub fn write_csv<W: Write>(&self, manifest: &[String], mut w: W) -> io::Result<()> {
        for line in manifest {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "x1,x2,mean1,stderr1,mean2,stderr2,joint,joint_stderr,covariance")?;
        for (a, x1) in self.x1.iter().enumerate() {
            for (b, x2) in self.x2.iter().enumerate() {
                writeln!(
                    w,
                    "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    x1,
                    x2,
                    self.mean1[a],
                    self.stderr1[a],
                    self.mean2[b],
                    self.stderr2[b],
                    self.joint[[a, b]],
                    self.joint_stderr[[a, b]],
                    self.covariance[[a, b]]
                )?;
            }
        }
        Ok(())
    }
}

/// Empirical fourth moment `⟨F*(q1) F*(q2) F(q2') F(q1')⟩` against the
/// Gaussian factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub value: Complex64,
    pub prediction: f64,
    pub standard_error: f64,
    pub realizations: usize,
}

impl MomentReport {
    pub fn deviation_in_stderr(&self) -> f64 {
        (self.value - self.prediction).norm() / self.standard_error
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.deviation_in_stderr() <= sigmas
    }
}

/// Probe indices `[q1, q2, q2', q1']`.
pub fn verify_gaussian_moment(
    s: &SpectrumProfile,
    grid: &Grid1D,
    m: usize,
    probe: [usize; 4],
    seed: u64,
) -> Result<MomentReport> {
    if m < 2 {
        return Err(Error::invalid("at least two realizations are required"));
    }
    if probe.iter().any(|&j| j >= grid.q_len()) {
        return Err(Error::invalid("probe index outside the wavevector grid"));
    }
    let [a, b, c, d] = probe;
    let samples: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|r| {
            let f = draw_realization(s, grid, seed, r as u64)?.amplitudes;
            Ok(f[a].conj() * f[b].conj() * f[c] * f[d])
        })
        .collect::<Result<_>>()?;
    let mf = m as f64;
    let mean: Complex64 = samples.iter().sum::<Complex64>() / mf;
    let var: f64 = samples.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (mf - 1.0);
    let p = |j: usize| s.weight(grid, j).re;
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let prediction = p(a) * p(b) * (delta(a, d) * delta(b, c) + delta(a, c) * delta(b, d));
    Ok(MomentReport {
        value: mean,
        prediction,
        standard_error: (var / mf).sqrt(),
        realizations: m,
    })
}
