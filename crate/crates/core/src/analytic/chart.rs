//! Bulk chart of the corner process, the field kernel in both of its forms,
//! and the limiting one-point density.

use num_complex::Complex64;

use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;

/// Chart map from the open upper half-plane to (position, depth) pairs:
/// x = |z| (mu + nu) + 2 sqrt(mu nu) Re z, y = |z|.
// The guard is written negated so that a NaN radius fails validation.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn omega_inverse(z: Complex64, mu: f64, nu: f64) -> Result<(f64, f64)> {
    check_shape(mu, nu)?;
    let y = z.norm();
    if !(y > 0.0) || z.im < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "chart point must lie in the closed upper half-plane away from 0, got {z}"
        )));
    }
    Ok((y * (mu + nu) + 2.0 * (mu * nu).sqrt() * z.re, y))
}

/// Inverse chart: recovers the half-plane point from (position, depth).
/// The position must lie inside the spectral band of depth y.
pub fn omega_forward(x: f64, y: f64, mu: f64, nu: f64) -> Result<Complex64> {
    check_shape(mu, nu)?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "depth must be positive, got {y}"
        )));
    }
    let half_width = 2.0 * y * (mu * nu).sqrt();
    let centered = x - y * (mu + nu);
    if centered.abs() > half_width {
        return Err(Error::OutsideBulk { x, y });
    }
    let re = centered / (2.0 * (mu * nu).sqrt());
    let im = (y * y - re * re).max(0.0).sqrt();
    Ok(Complex64::new(re, im))
}

fn check_shape(mu: f64, nu: f64) -> Result<()> {
    if !(mu > 0.0 && nu > 0.0 && mu.is_finite() && nu.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "shape must be positive, got mu = {mu}, nu = {nu}"
        )));
    }
    Ok(())
}

/// Field covariance kernel between two chart points z1 = x1 + i y1 and
/// z2 = x2 + i y2 in (position, depth) coordinates:
/// (1 / 2 pi) log |(W1 - conj W2) / (W1 - W2)| with W_i the forward chart.
pub fn gff_kernel(z1: Complex64, z2: Complex64, mu: f64, nu: f64) -> Result<f64> {
    if !(z1.im > 0.0 && z2.im > 0.0) {
        return Err(Error::InvalidParameter(
            "kernel points must lie in the open upper half-plane".into(),
        ));
    }
    let w1 = omega_forward(z1.re, z1.im, mu, nu)?;
    let w2 = omega_forward(z2.re, z2.im, mu, nu)?;
    let num = (w1 - w2.conj()).norm();
    let den = (w1 - w2).norm();
    if den == 0.0 || !num.is_finite() {
        return Err(Error::KernelSingularity);
    }
    Ok((num / den).ln() / (2.0 * PI))
}

/// Contour form of the kernel: log |(1 - theta zeta1 zeta2) / (1 - theta
/// zeta1 conj(zeta2))|, written so that theta = 0 decouples the arguments.
pub fn coupling_kernel(theta: f64, zeta1: Complex64, zeta2: Complex64) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coupling parameter must be nonnegative, got {theta}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let num = (one - zeta1 * zeta2 * theta).norm();
    let den = (one - zeta1 * zeta2.conj() * theta).norm();
    if num < 1e-300 || den < 1e-300 {
        return Err(Error::KernelSingularity);
    }
    Ok((num / den).ln())
}

/// Support of the limiting one-point density of W(1).
pub fn mp_support(mu: f64, nu: f64) -> Result<(f64, f64)> {
    check_shape(mu, nu)?;
    let (rm, rn) = (mu.sqrt(), nu.sqrt());
    Ok(((rm - rn) * (rm - rn), (rm + rn) * (rm + rn)))
}

/// Limiting one-point density of the scaled eigenvalue measure of W(1):
/// sqrt((b - x)(x - a)) / (2 pi x) on [a, b], zero outside. Total mass is
/// min(mu, nu).
pub fn mp_density(x: f64, mu: f64, nu: f64) -> Result<f64> {
    let (a, b) = mp_support(mu, nu)?;
    if x <= a || x >= b || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((b - x) * (x - a)).sqrt() / (2.0 * PI * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imaginary_axis_maps_to_the_band_center() {
        let (x, y) = omega_inverse(Complex64::new(0.0, 0.7), 1.3, 0.8).unwrap();
        assert!((x - 0.7 * (1.3 + 0.8)).abs() < 1e-14);
        assert!((y - 0.7).abs() < 1e-14);
    }

    #[test]
    fn positive_real_axis_maps_to_the_right_edge() {
        let y = 0.9;
        let (x, got_y) = omega_inverse(Complex64::new(y, 0.0), 1.0, 0.64).unwrap();
        let edge = y * (1.0f64.sqrt() + 0.8).powi(2);
        assert!((x - edge).abs() < 1e-12);
        assert!((got_y - y).abs() < 1e-14);
    }

    #[test]
    fn chart_round_trip_is_tight() {
        let (mu, nu) = (1.1, 0.6);
        let mut worst = 0.0f64;
        for iy in 1..=10 {
            for ix in 0..=20 {
                let y = iy as f64 / 10.0;
                let (a, b) = (
                    y * (mu + nu) - 2.0 * y * (mu * nu).sqrt(),
                    y * (mu + nu) + 2.0 * y * (mu * nu).sqrt(),
                );
                let x = a + (b - a) * ix as f64 / 20.0;
                let z = omega_forward(x, y, mu, nu).unwrap();
                let (x2, y2) = omega_inverse(z, mu, nu).unwrap();
                worst = worst.max((x2 - x).abs().max((y2 - y).abs()));
            }
        }
        assert!(worst <= 1e-12, "round-trip error {worst:e}");
    }

    #[test]
    fn positions_off_the_band_are_rejected() {
        let err = omega_forward(10.0, 0.5, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::OutsideBulk { .. }));
    }

    #[test]
    fn contour_kernel_matches_its_mode_series() {
        let cases = [
            (0.3, 0.9, 0.8, 0.4, 2.2),
            (0.95, 1.0, 1.0, 1.1, 0.3),
            (0.5, 0.7, 1.3, 2.0, 2.8),
        ];
        for (tr, r1, r2, p1, p2) in cases {
            let theta = tr / (r1 * r2);
            let z1 = Complex64::from_polar(r1, p1);
            let z2 = Complex64::from_polar(r2, p2);
            let got = coupling_kernel(theta, z1, z2).unwrap();
            let mut want = 0.0;
            for n in 1..2000 {
                want += 2.0 * tr.powi(n) * (n as f64 * p1).sin() * (n as f64 * p2).sin() / n as f64;
            }
            assert!(
                (got - want).abs() < 1e-8,
                "tr = {tr}: kernel {got} vs series {want}"
            );
        }
    }

    #[test]
    fn kernel_on_the_critical_circle_is_a_sine_ratio() {
        let (mu, nu) = (1.2f64, 0.7);
        let theta = 1.0 / (mu * nu);
        let r = (mu * nu).sqrt();
        let (p1, p2) = (0.8, 1.9);
        let got = coupling_kernel(
            theta,
            Complex64::from_polar(r, p1),
            Complex64::from_polar(r, p2),
        )
        .unwrap();
        let want = (((p1 + p2) / 2.0).sin().abs() / ((p1 - p2) / 2.0).sin().abs()).ln();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn chart_kernel_agrees_with_contour_kernel_for_nested_corners() {
        // Depths y1, y2 of a (mu, nu) array couple through
        // theta = min(y1, y2)^2 / (y1^2 y2^2 mu nu); on the chart circles the
        // two kernel forms coincide up to the 2 pi normalization.
        let (mu, nu) = (1.0, 0.8);
        let (y1, y2) = (0.6f64, 1.0);
        let theta = y1.min(y2).powi(2) / (y1 * y1 * y2 * y2 * mu * nu);
        for (p1, p2) in [(0.5, 1.2), (2.0, 2.9), (0.3, 0.31)] {
            let w1 = Complex64::from_polar(y1, p1);
            let w2 = Complex64::from_polar(y2, p2);
            let (x1, yy1) = omega_inverse(w1, mu, nu).unwrap();
            let (x2, yy2) = omega_inverse(w2, mu, nu).unwrap();
            let via_chart =
                gff_kernel(Complex64::new(x1, yy1), Complex64::new(x2, yy2), mu, nu).unwrap();
            let scaled = (mu * nu).sqrt();
            let via_contour = coupling_kernel(
                theta,
                Complex64::from_polar(y1 * scaled, p1),
                Complex64::from_polar(y2 * scaled, p2),
            )
            .unwrap();
            assert!(
                (2.0 * PI * via_chart - via_contour).abs() < 1e-10,
                "p1 = {p1}, p2 = {p2}"
            );
        }
    }

    #[test]
    fn coincident_kernel_points_are_singular() {
        let z = Complex64::new(2.0, 0.5);
        let err = gff_kernel(z, z, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::KernelSingularity));
    }

    #[test]
    fn density_integrates_to_the_thin_side_mass() {
        for (mu, nu) in [(1.0, 1.0), (1.0, 0.4), (0.5, 2.0)] {
            let (a, b) = mp_support(mu, nu).unwrap();
            // substitute x = midpoint + half-width cos u to absorb the edge roots
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let n = 20_000;
            let mut acc = 0.0;
            for t in 0..n {
                let u = PI * (t as f64 + 0.5) / n as f64;
                let x = mid + half * u.cos();
                acc += half * half * u.sin() * u.sin() / x;
            }
            let mass = acc * PI / n as f64 / (2.0 * PI);
            assert!(
                (mass - mu.min(nu)).abs() < 1e-6,
                "mu = {mu}, nu = {nu}: mass {mass}"
            );
        }
    }

    #[test]
    fn density_value_at_the_square_band_center() {
        // mu = nu = 1: density at x = 2 is sqrt(4) / (4 pi) = 1 / (2 pi).
        let got = mp_density(2.0, 1.0, 1.0).unwrap();
        assert!((got - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert_eq!(mp_density(4.5, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(mp_density(-1.0, 1.0, 1.0).unwrap(), 0.0);
    }
}
