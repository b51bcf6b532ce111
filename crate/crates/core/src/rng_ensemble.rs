//! Index-keyed random array and Wishart submatrix construction.
//!
//! Every entry of the conceptually infinite array is a pure function of
//! (seed, distribution, row, column). Overlapping submatrices therefore share
//! entries exactly, replicates are independent streams derived from the same
//! seed, and any parallel schedule reproduces identical data bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic::OverlapGeometry;
use crate::error::{Error, Result};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Entry law for the underlying array. All laws have mean 0 and unit
/// second absolute moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    RealGaussian,
    ComplexGaussian,
    Rademacher,
    UniformSym,
}

impl EntryDistribution {
    /// Symmetry class: 2 for complex entries, 1 otherwise.
    pub fn beta(self) -> u8 {
        match self {
            EntryDistribution::ComplexGaussian => 2,
            _ => 1,
        }
    }

    /// E|Z|^4 for the entry law.
    pub fn fourth_moment(self) -> f64 {
        match self {
            EntryDistribution::RealGaussian => 3.0,
            EntryDistribution::ComplexGaussian => 2.0,
            EntryDistribution::Rademacher => 1.0,
            EntryDistribution::UniformSym => 1.8,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, EntryDistribution::ComplexGaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryDistribution::RealGaussian => "real_gaussian",
            EntryDistribution::ComplexGaussian => "complex_gaussian",
            EntryDistribution::Rademacher => "rademacher",
            EntryDistribution::UniformSym => "uniform_sym",
        }
    }
}

const ROW_SALT: u64 = 0xA076_1D64_78BD_642F;
const COL_SALT: u64 = 0xE703_7ED1_A0B4_28DB;
const REPLICATE_SALT: u64 = 0x8EBC_6AF0_9C88_C6E3;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_key(seed: u64, i: u64, j: u64) -> u64 {
    let s = mix64(seed ^ i.wrapping_add(1).wrapping_mul(ROW_SALT));
    mix64(s ^ j.wrapping_add(1).wrapping_mul(COL_SALT))
}

fn key_to_rng(key: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    for (w, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        let word = mix64(key.wrapping_add((w as u64 + 1).wrapping_mul(GOLDEN_GAMMA)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Handle to one realization of the infinite array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayHandle {
    pub seed: u64,
    pub distribution: EntryDistribution,
}

impl ArrayHandle {
    pub fn new(seed: u64, distribution: EntryDistribution) -> Self {
        ArrayHandle { seed, distribution }
    }

    /// Derived handle for an independent replicate of the same experiment.
    pub fn for_replicate(&self, replicate: u64) -> Self {
        let seed = mix64(self.seed ^ replicate.wrapping_add(1).wrapping_mul(REPLICATE_SALT));
        ArrayHandle {
            seed,
            distribution: self.distribution,
        }
    }

    /// Array entry at global position (i, j); pure in (seed, distribution, i, j).
    pub fn entry(&self, i: u64, j: u64) -> Complex64 {
        let mut rng = key_to_rng(cell_key(self.seed, i, j));
        match self.distribution {
            EntryDistribution::RealGaussian => {
                let x: f64 = rng.sample(StandardNormal);
                Complex64::new(x, 0.0)
            }
            EntryDistribution::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            EntryDistribution::Rademacher => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(sign, 0.0)
            }
            EntryDistribution::UniformSym => {
                let u: f64 = rng.random();
                Complex64::new(2.0 * SQRT_3 * u - SQRT_3, 0.0)
            }
        }
    }

    fn entry_real(&self, i: u64, j: u64) -> f64 {
        self.entry(i, j).re
    }
}

/// Rectangular window into the array: rows [row0, row0+rows) x cols [col0, col0+cols).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmatrixSpec {
    pub row0: u64,
    pub col0: u64,
    pub rows: usize,
    pub cols: usize,
}

impl SubmatrixSpec {
    pub fn at_origin(rows: usize, cols: usize) -> Self {
        SubmatrixSpec {
            row0: 0,
            col0: 0,
            rows,
            cols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::DegenerateSubmatrix);
        }
        Ok(())
    }
}

/// Nested corner submatrices anchored at the origin: level y gives a
/// floor(y mu L) x floor(y nu L) window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerFamilySpec {
    pub mu: f64,
    pub nu: f64,
    pub levels: Vec<f64>,
    pub scale: usize,
}

impl CornerFamilySpec {
    pub fn new(mu: f64, nu: f64, levels: Vec<f64>, scale: usize) -> Result<Self> {
        if !(mu > 0.0 && nu > 0.0 && mu.is_finite() && nu.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "corner base shape must be positive, got mu = {mu}, nu = {nu}"
            )));
        }
        if scale == 0 {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        if levels.is_empty() {
            return Err(Error::InvalidParameter("no corner levels given".into()));
        }
        for w in levels.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "corner levels must be strictly increasing".into(),
                ));
            }
        }
        for &y in &levels {
            if !(y > 0.0 && y <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "corner level {y} outside (0, 1]"
                )));
            }
        }
        Ok(CornerFamilySpec {
            mu,
            nu,
            levels,
            scale,
        })
    }

    /// Integer window for one level; ties at integer boundaries resolve downward.
    pub fn window(&self, level: f64) -> Result<SubmatrixSpec> {
        let rows = (level * self.mu * self.scale as f64).floor() as usize;
        let cols = (level * self.nu * self.scale as f64).floor() as usize;
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyCorner { level });
        }
        Ok(SubmatrixSpec::at_origin(rows, cols))
    }
}

/// A keyed family of submatrices drawn per replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// Explicit windows; level keys are 1.0, 2.0, ... in list order.
    Blocks {
        blocks: Vec<SubmatrixSpec>,
        scale: usize,
    },
    Corners(CornerFamilySpec),
}

impl FamilySpec {
    pub fn scale(&self) -> usize {
        match self {
            FamilySpec::Blocks { scale, .. } => *scale,
            FamilySpec::Corners(c) => c.scale,
        }
    }

    /// (level key, window) pairs in family order.
    pub fn resolve(&self) -> Result<Vec<(f64, SubmatrixSpec)>> {
        match self {
            FamilySpec::Blocks { blocks, .. } => {
                if blocks.is_empty() {
                    return Err(Error::InvalidParameter("empty block family".into()));
                }
                blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        b.validate()?;
                        Ok(((i + 1) as f64, *b))
                    })
                    .collect()
            }
            FamilySpec::Corners(c) => c.levels.iter().map(|&y| Ok((y, c.window(y)?))).collect(),
        }
    }
}

/// Two overlapping blocks realized at integer scale from a limiting shape.
/// Block 1 sits at the origin; block 2 is offset so the shared window has
/// exactly floor(mu12 L) rows and floor(nu12 L) columns.
pub fn pair_blocks(geom: &OverlapGeometry, scale: usize) -> Result<FamilySpec> {
    let l = scale as f64;
    let m1 = (geom.mu1 * l).floor() as usize;
    let n1 = (geom.nu1 * l).floor() as usize;
    let m2 = (geom.mu2 * l).floor() as usize;
    let n2 = (geom.nu2 * l).floor() as usize;
    let m12 = (geom.mu12 * l).floor() as usize;
    let n12 = (geom.nu12 * l).floor() as usize;
    if m1 == 0 || n1 == 0 || m2 == 0 || n2 == 0 {
        return Err(Error::DegenerateSubmatrix);
    }
    let b1 = SubmatrixSpec::at_origin(m1, n1);
    let b2 = SubmatrixSpec {
        row0: (m1 - m12) as u64,
        col0: (n1 - n12) as u64,
        rows: m2,
        cols: n2,
    };
    Ok(FamilySpec::Blocks {
        blocks: vec![b1, b2],
        scale,
    })
}

/// Owned matrix data; real and complex entry laws stay on separate paths.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixData {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl MatrixData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixData::Real(m) => m.shape(),
            MatrixData::Complex(m) => m.shape(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self {
            MatrixData::Real(m) => Complex64::new(m[(i, j)], 0.0),
            MatrixData::Complex(m) => m[(i, j)],
        }
    }
}

/// Materialize the window of the array selected by `spec`.
pub fn materialize(handle: &ArrayHandle, spec: &SubmatrixSpec) -> Result<MatrixData> {
    spec.validate()?;
    let data = if handle.distribution.is_complex() {
        MatrixData::Complex(DMatrix::from_fn(spec.rows, spec.cols, |i, j| {
            handle.entry(spec.row0 + i as u64, spec.col0 + j as u64)
        }))
    } else {
        MatrixData::Real(DMatrix::from_fn(spec.rows, spec.cols, |i, j| {
            handle.entry_real(spec.row0 + i as u64, spec.col0 + j as u64)
        }))
    };
    Ok(data)
}

/// Scaled sample covariance form S* S / scale (smaller side squared), exactly
/// symmetrized as (M + M*) / 2.
pub fn wishart(s: &MatrixData, scale: usize) -> Result<MatrixData> {
    if scale == 0 {
        return Err(Error::InvalidParameter("scale must be positive".into()));
    }
    let (m, n) = s.shape();
    if m == 0 || n == 0 {
        return Err(Error::DegenerateSubmatrix);
    }
    let inv = 1.0 / scale as f64;
    let out = match s {
        MatrixData::Real(a) => {
            let w = if m >= n {
                a.tr_mul(a)
            } else {
                a * a.transpose()
            } * inv;
            MatrixData::Real((&w + w.transpose()) * 0.5)
        }
        MatrixData::Complex(a) => {
            let w = if m >= n { a.ad_mul(a) } else { a * a.adjoint() } * Complex64::new(inv, 0.0);
            MatrixData::Complex((&w + w.adjoint()) * Complex64::new(0.5, 0.0))
        }
    };
    Ok(out)
}

/// Materialized nested corners, one entry per level, in level order.
pub fn corner_family(
    handle: &ArrayHandle,
    spec: &CornerFamilySpec,
) -> Result<Vec<(f64, MatrixData)>> {
    spec.levels
        .iter()
        .map(|&y| Ok((y, materialize(handle, &spec.window(y)?)?)))
        .collect()
}
