//! Limiting covariance predictions for configured statistics: bilinear
//! assembly over statistic parts and monomial degrees, with the overlap
//! geometry chosen per level pair.

use anyhow::{Result, bail};

use wishart_gff::analytic::{BetaWeights, OverlapGeometry, covariance_modes};
use wishart_gff::spectra::StatisticDef;

use crate::config::FamilyShape;

/// Geometry of the pair (level `a` carries the first degree argument).
fn level_pair_geometry(shape: &FamilyShape, a: f64, b: f64) -> Result<OverlapGeometry> {
    match shape {
        FamilyShape::Pair(geom) => {
            let g = match ((a - 1.0).abs() < 1e-9, (b - 1.0).abs() < 1e-9) {
                (true, true) => OverlapGeometry::full_overlap(geom.mu1, geom.nu1)?,
                (false, false) => OverlapGeometry::full_overlap(geom.mu2, geom.nu2)?,
                (true, false) => *geom,
                (false, true) => OverlapGeometry::new(
                    geom.mu2, geom.nu2, geom.mu1, geom.nu1, geom.mu12, geom.nu12,
                )?,
            };
            Ok(g)
        }
        FamilyShape::Corners { mu, nu, .. } => Ok(OverlapGeometry::nested_corners(a, b, *mu, *nu)?),
    }
}

/// Limiting Cov(X_i, X_j) for two configured statistics: sum over part pairs
/// and over monomial degrees >= 1 of the mode-sum covariance. Constant
/// polynomial terms never fluctuate and drop out.
pub fn statistic_pair_covariance(
    shape: &FamilyShape,
    weights: &BetaWeights,
    si: &StatisticDef,
    sj: &StatisticDef,
) -> Result<f64> {
    let mut total = 0.0;
    for &(la, wa) in &si.parts {
        for &(lb, wb) in &sj.parts {
            let geom = level_pair_geometry(shape, la, lb)?;
            for (dega, &ca) in si.poly.iter().enumerate().skip(1) {
                if ca == 0.0 {
                    continue;
                }
                for (degb, &cb) in sj.poly.iter().enumerate().skip(1) {
                    if cb == 0.0 {
                        continue;
                    }
                    total += wa * wb * ca * cb * covariance_modes(dega, degb, &geom, weights)?;
                }
            }
        }
    }
    if !total.is_finite() {
        bail!(
            "analytic covariance diverged for {:?} / {:?}",
            si.label,
            sj.label
        );
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wishart_gff::analytic::{DiscreteMeasure, SymmetryClass, planar_covariance};

    #[test]
    fn pair_shape_orients_the_cross_block() {
        let geom = OverlapGeometry::new(1.2, 0.9, 0.8, 1.1, 0.5, 0.6).unwrap();
        let shape = FamilyShape::Pair(geom);
        let weights = BetaWeights::gaussian(SymmetryClass::Orthogonal);
        let s1 = StatisticDef::trace_power("a", 1.0, 2);
        let s2 = StatisticDef::trace_power("b", 2.0, 3);
        let ij = statistic_pair_covariance(&shape, &weights, &s1, &s2).unwrap();
        let ji = statistic_pair_covariance(&shape, &weights, &s2, &s1).unwrap();
        assert!((ij - ji).abs() < 1e-12 * (1.0 + ij.abs()));
        let direct = covariance_modes(2, 3, &geom, &weights).unwrap();
        assert!((ij - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn self_block_uses_full_overlap() {
        let geom = OverlapGeometry::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let shape = FamilyShape::Pair(geom);
        let weights = BetaWeights::gaussian(SymmetryClass::Orthogonal);
        let s = StatisticDef::trace_power("a", 1.0, 1);
        let var = statistic_pair_covariance(&shape, &weights, &s, &s).unwrap();
        assert!((var - 2.0).abs() < 1e-12, "var {var}");
    }

    #[test]
    fn corner_planar_prediction_matches_the_library_routine() {
        let shape = FamilyShape::Corners {
            mu: 1.0,
            nu: 1.0,
            levels: vec![0.5, 1.0],
        };
        let weights = BetaWeights::gaussian(SymmetryClass::Orthogonal);
        let s = StatisticDef {
            label: "planar".into(),
            parts: vec![(0.5, 0.5), (1.0, 0.5)],
            poly: vec![0.0, 1.0],
        };
        let got = statistic_pair_covariance(&shape, &weights, &s, &s).unwrap();
        let rho = DiscreteMeasure::new(vec![(0.5, 0.5), (1.0, 0.5)]).unwrap();
        let want = planar_covariance(1, 1, &rho, &rho, 1.0, 1.0, &weights).unwrap();
        assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
        assert!((got - 0.875).abs() < 1e-12);
    }

    #[test]
    fn polynomial_coefficients_enter_bilinearly() {
        let geom = OverlapGeometry::full_overlap(1.0, 1.0).unwrap();
        let shape = FamilyShape::Pair(geom);
        let weights = BetaWeights::gaussian(SymmetryClass::Unitary);
        let s1 = StatisticDef::on_level("p", 1.0, vec![3.0, 2.0]);
        let s2 = StatisticDef::on_level("q", 1.0, vec![-1.0, 0.0, 0.5]);
        let got = statistic_pair_covariance(&shape, &weights, &s1, &s2).unwrap();
        let c11 = covariance_modes(1, 2, &geom, &weights).unwrap();
        assert!((got - 2.0 * 0.5 * c11).abs() < 1e-12 * (1.0 + got.abs()));
    }
}
