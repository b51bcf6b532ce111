//! Sobolev norms of test functions, evaluated from grid samples through a
//! direct Fourier transform.

// Guards are written negated so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::error::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// A real function sampled on a uniform grid over [x0, x1], endpoints
/// included. The function must have decayed to numerical zero at both ends,
/// otherwise the transform sees a truncated signal.
#[derive(Debug, Clone)]
pub struct GridFunction {
    x0: f64,
    x1: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x0: f64, x1: f64, values: Vec<f64>) -> Result<Self> {
        if !(x1 > x0 && x0.is_finite() && x1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid interval is empty: [{x0}, {x1}]"
            )));
        }
        if values.len() < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid samples must be finite".into(),
            ));
        }
        Ok(Self { x0, x1, values })
    }

    /// Samples `f` at `n` equally spaced points spanning [x0, x1].
    pub fn sample(x0: f64, x1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 samples, got {n}"
            )));
        }
        let dx = (x1 - x0) / (n - 1) as f64;
        let values = (0..n).map(|j| f(x0 + j as f64 * dx)).collect();
        Self::new(x0, x1, values)
    }

    pub fn step(&self) -> f64 {
        (self.x1 - self.x0) / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_decayed(&self) -> Result<()> {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * peak.max(1.0);
        let first = self.values.first().copied().unwrap_or(0.0);
        let last = self.values.last().copied().unwrap_or(0.0);
        if first.abs() > tol || last.abs() > tol {
            return Err(Error::SupportExceedsGrid);
        }
        Ok(())
    }

    /// |transform|^2 at frequency `k`, with the 1 / (2 pi) forward convention.
    fn transform_abs2(&self, k: f64) -> f64 {
        let dx = self.step();
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let x = self.x0 + j as f64 * dx;
            let w = if j == 0 || j == self.values.len() - 1 {
                0.5
            } else {
                1.0
            };
            let (s, c) = (k * x).sin_cos();
            re += w * v * c;
            im -= w * v * s;
        }
        (re * re + im * im) * dx * dx / (TWO_PI * TWO_PI)
    }
}

/// Parameters of the norm: smoothness exponent `s` (must exceed 3/2) and the
/// frequency cutoff/grid used for the outer integral.
#[derive(Debug, Clone, Copy)]
pub struct SobolevSpec {
    pub s: f64,
    pub k_max: f64,
    pub n_k: usize,
}

impl SobolevSpec {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 1.5) {
            return Err(Error::InvalidParameter(format!(
                "smoothness exponent must exceed 3/2, got {s}"
            )));
        }
        Ok(Self {
            s,
            k_max: 40.0,
            n_k: 2001,
        })
    }

    pub fn with_frequency_grid(mut self, k_max: f64, n_k: usize) -> Result<Self> {
        if !(k_max > 0.0) || n_k < 9 {
            return Err(Error::InvalidParameter(format!(
                "frequency grid is too coarse: k_max = {k_max}, n_k = {n_k}"
            )));
        }
        self.k_max = k_max;
        self.n_k = n_k;
        Ok(self)
    }
}

/// Weighted L2 norm of the transform: the square root of
/// integral of (1 + |k|)^(2 s) |transform(k)|^2 over the line.
///
/// The transform of a real function has even modulus, so the integral is
/// twice the [0, k_max] part, evaluated with composite Simpson weights.
pub fn sobolev_norm(phi: &GridFunction, spec: &SobolevSpec) -> Result<f64> {
    if !(spec.s > 1.5) {
        return Err(Error::InvalidParameter(format!(
            "smoothness exponent must exceed 3/2, got {}",
            spec.s
        )));
    }
    phi.check_decayed()?;
    let n = if spec.n_k.is_multiple_of(2) {
        spec.n_k + 1
    } else {
        spec.n_k
    };
    let dk = spec.k_max / (n - 1) as f64;
    let mut acc = 0.0;
    for t in 0..n {
        let k = t as f64 * dk;
        let w = if t == 0 || t == n - 1 {
            1.0
        } else if t % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (1.0 + k).powf(2.0 * spec.s) * phi.transform_abs2(k);
    }
    Ok((2.0 * acc * dk / 3.0).sqrt())
}

/// Norm of a finitely supported family: square root of the weighted sum of
/// squared single-function norms. Weights must be positive and finite.
pub fn planar_sobolev_norm(
    weights: &[f64],
    funcs: &[GridFunction],
    spec: &SobolevSpec,
) -> Result<f64> {
    if weights.len() != funcs.len() || weights.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "got {} weights for {} functions",
            weights.len(),
            funcs.len()
        )));
    }
    let mut acc = 0.0;
    for (w, phi) in weights.iter().zip(funcs) {
        if !(*w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        let norm = sobolev_norm(phi, spec)?;
        acc += w * norm * norm;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_grid(n: usize) -> GridFunction {
        GridFunction::sample(-10.0, 10.0, n, |x| (-0.5 * x * x).exp()).unwrap()
    }

    #[test]
    fn gaussian_norm_matches_direct_transform() {
        // The bell curve transforms to exp(-k^2 / 2) / sqrt(2 pi); integrate
        // the weighted square of that closed form independently.
        let s = 2.0;
        let spec = SobolevSpec::new(s)
            .unwrap()
            .with_frequency_grid(12.0, 4001)
            .unwrap();
        let got = sobolev_norm(&gaussian_grid(4001), &spec).unwrap();

        let n = 48_001usize;
        let dk = 12.0 / (n - 1) as f64;
        let mut acc = 0.0;
        for t in 0..n {
            let k = t as f64 * dk;
            let w = if t == 0 || t == n - 1 {
                1.0
            } else if t % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * (1.0 + k).powf(2.0 * s) * (-k * k).exp() / TWO_PI;
        }
        let want = (2.0 * acc * dk / 3.0).sqrt();
        assert!(
            ((got - want) / want).abs() < 1e-8,
            "norm {got} vs oracle {want}"
        );
    }

    #[test]
    fn norm_is_stable_under_grid_refinement() {
        let spec = SobolevSpec::new(1.8)
            .unwrap()
            .with_frequency_grid(14.0, 2001)
            .unwrap();
        let coarse = sobolev_norm(&gaussian_grid(1501), &spec).unwrap();
        let fine = sobolev_norm(&gaussian_grid(3001), &spec).unwrap();
        let fine_k = sobolev_norm(
            &gaussian_grid(3001),
            &spec.with_frequency_grid(14.0, 4001).unwrap(),
        )
        .unwrap();
        assert!(((coarse - fine) / fine).abs() < 1e-6);
        assert!(((fine_k - fine) / fine).abs() < 1e-6);
    }

    #[test]
    fn norm_grows_with_the_smoothness_exponent() {
        let grid = gaussian_grid(2001);
        let mut prev = 0.0;
        for s in [1.6, 2.0, 2.5, 3.0] {
            let spec = SobolevSpec::new(s).unwrap();
            let norm = sobolev_norm(&grid, &spec).unwrap();
            assert!(norm > prev, "s = {s}: {norm} <= {prev}");
            prev = norm;
        }
    }

    #[test]
    fn truncated_support_is_rejected() {
        let grid = GridFunction::sample(-2.0, 2.0, 801, |x| (-0.5 * x * x).exp()).unwrap();
        let spec = SobolevSpec::new(2.0).unwrap();
        assert!(matches!(
            sobolev_norm(&grid, &spec),
            Err(Error::SupportExceedsGrid)
        ));
    }

    #[test]
    fn rough_exponents_are_rejected() {
        assert!(matches!(
            SobolevSpec::new(1.5),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            SobolevSpec::new(0.7),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn family_norm_reduces_to_the_single_norm() {
        let grid = gaussian_grid(1201);
        let spec = SobolevSpec::new(2.0).unwrap();
        let single = sobolev_norm(&grid, &spec).unwrap();
        let split = planar_sobolev_norm(&[0.5, 0.5], &[grid.clone(), grid.clone()], &spec).unwrap();
        assert!((split - single).abs() < 1e-12 * single);
        let scaled = planar_sobolev_norm(&[4.0], &[grid], &spec).unwrap();
        assert!((scaled - 2.0 * single).abs() < 1e-12 * single);
    }

    #[test]
    fn nonpositive_weights_are_rejected() {
        let grid = gaussian_grid(1201);
        let spec = SobolevSpec::new(2.0).unwrap();
        let err = planar_sobolev_norm(&[0.0], &[grid], &spec).unwrap_err();
        assert!(matches!(err, Error::InvalidMeasure(_)));
    }
}
