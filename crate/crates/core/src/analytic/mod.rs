//! Deterministic predictions for the limiting spectral statistics:
//! tree/cycle series, mode sums, contour quadrature, chart and kernel
//! functions, Sobolev norms, and the limiting density.

mod chart;
mod covariance;
mod series;
mod sobolev;

pub use chart::{
    coupling_kernel, gff_kernel, mp_density, mp_support, omega_forward, omega_inverse,
};
pub use covariance::{
    QuadratureConfig, covariance_modes, covariance_quadrature, limit_mean, planar_covariance,
    t1_limit, t2_limit,
};
pub use series::{gen_f, gen_g, narayana_even, narayana_number, narayana_odd};
pub use sobolev::{GridFunction, SobolevSpec, planar_sobolev_norm, sobolev_norm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng_ensemble::EntryDistribution;

/// Limiting shape of two overlapping submatrices: block i has shape
/// (mu_i, nu_i) per unit scale and the shared window has shape (mu12, nu12).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapGeometry {
    pub mu1: f64,
    pub nu1: f64,
    pub mu2: f64,
    pub nu2: f64,
    pub mu12: f64,
    pub nu12: f64,
}

impl OverlapGeometry {
    pub fn new(mu1: f64, nu1: f64, mu2: f64, nu2: f64, mu12: f64, nu12: f64) -> Result<Self> {
        let g = OverlapGeometry {
            mu1,
            nu1,
            mu2,
            nu2,
            mu12,
            nu12,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.mu1, self.nu1, self.mu2, self.nu2];
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidGeometry(format!(
                "block shapes must be positive, got {self:?}"
            )));
        }
        let slack = 1.0 + 1e-12;
        if !(self.mu12 >= 0.0 && self.mu12 <= self.mu1.min(self.mu2) * slack) {
            return Err(Error::InvalidGeometry(format!(
                "row overlap {} exceeds min({}, {})",
                self.mu12, self.mu1, self.mu2
            )));
        }
        if !(self.nu12 >= 0.0 && self.nu12 <= self.nu1.min(self.nu2) * slack) {
            return Err(Error::InvalidGeometry(format!(
                "column overlap {} exceeds min({}, {})",
                self.nu12, self.nu1, self.nu2
            )));
        }
        let c = self.coupling();
        if c > 1.0 + 1e-9 {
            return Err(Error::ContourCondition { coupling: c });
        }
        Ok(())
    }

    /// Both blocks identical and fully shared.
    pub fn full_overlap(mu: f64, nu: f64) -> Result<Self> {
        OverlapGeometry::new(mu, nu, mu, nu, mu, nu)
    }

    /// No shared rows or columns.
    pub fn disjoint(mu1: f64, nu1: f64, mu2: f64, nu2: f64) -> Result<Self> {
        OverlapGeometry::new(mu1, nu1, mu2, nu2, 0.0, 0.0)
    }

    /// Corners of one (mu, nu)-shaped array at depths y and z: the smaller
    /// corner is entirely contained in the larger.
    pub fn nested_corners(y: f64, z: f64, mu: f64, nu: f64) -> Result<Self> {
        let m = y.min(z);
        OverlapGeometry::new(y * mu, y * nu, z * mu, z * nu, m * mu, m * nu)
    }

    pub fn theta(&self) -> f64 {
        (self.mu12 * self.nu12) / (self.mu1 * self.nu1 * self.mu2 * self.nu2)
    }

    pub fn gamma1(&self) -> f64 {
        self.mu1 / self.nu1
    }

    pub fn gamma2(&self) -> f64 {
        self.mu2 / self.nu2
    }

    /// Coupling c = theta * sqrt(mu1 nu1 mu2 nu2) in [0, 1]; 1 iff the shared
    /// window has maximal area, 0 iff the blocks are disjoint.
    pub fn coupling(&self) -> f64 {
        (self.mu12 * self.nu12) / (self.mu1 * self.nu1 * self.mu2 * self.nu2).sqrt()
    }
}

/// Symmetry class of the entry law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    Orthogonal,
    Unitary,
    Symplectic,
}

impl SymmetryClass {
    pub fn beta(self) -> u8 {
        match self {
            SymmetryClass::Orthogonal => 1,
            SymmetryClass::Unitary => 2,
            SymmetryClass::Symplectic => 4,
        }
    }
}

/// Mode weights of the limiting covariance. The first mode carries the
/// excess fourth moment of the entry law; higher modes depend only on the
/// symmetry class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    pub class: SymmetryClass,
    pub a1: f64,
}

impl BetaWeights {
    pub fn new(class: SymmetryClass, fourth_moment: f64) -> Result<Self> {
        if !(fourth_moment.is_finite() && fourth_moment >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fourth absolute moment must be >= 1, got {fourth_moment}"
            )));
        }
        Ok(BetaWeights {
            class,
            a1: fourth_moment - 1.0,
        })
    }

    /// Weights for Gaussian entries of the given class: a1 = 2 / beta.
    pub fn gaussian(class: SymmetryClass) -> Self {
        BetaWeights {
            class,
            a1: 2.0 / class.beta() as f64,
        }
    }

    pub fn from_distribution(dist: EntryDistribution) -> Self {
        let class = match dist.beta() {
            2 => SymmetryClass::Unitary,
            _ => SymmetryClass::Orthogonal,
        };
        BetaWeights {
            class,
            a1: dist.fourth_moment() - 1.0,
        }
    }

    /// Weight of mode n >= 1.
    pub fn weight(&self, n: usize) -> f64 {
        assert!(n >= 1, "mode index starts at 1");
        if n == 1 {
            return self.a1;
        }
        match self.class {
            SymmetryClass::Orthogonal => 2.0,
            SymmetryClass::Unitary => 1.0,
            SymmetryClass::Symplectic => 1.0 + 0.25f64.powi(n as i32),
        }
    }
}

/// Finite discrete measure on corner depths: (level, weight) pairs with
/// levels in (0, 1] strictly increasing and positive weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no support points".into()));
        }
        for &(y, w) in &points {
            if !(y > 0.0 && y <= 1.0) {
                return Err(Error::InvalidMeasure(format!("level {y} outside (0, 1]")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} must be positive and finite"
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidMeasure(
                    "levels must be strictly increasing".into(),
                ));
            }
        }
        Ok(DiscreteMeasure { points })
    }

    pub fn dirac(level: f64) -> Result<Self> {
        DiscreteMeasure::new(vec![(level, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}
