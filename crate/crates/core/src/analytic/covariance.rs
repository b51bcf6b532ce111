//! Limiting covariance of centered trace powers for overlapping Wishart
//! matrices, computed along independent routes: an exact finite mode sum,
//! a torus quadrature of the underlying double contour integral, and the
//! tree/cycle split of the series expansion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::series::{gen_f, gen_g, series_power};
use super::{BetaWeights, DiscreteMeasure, OverlapGeometry, SymmetryClass};
use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;
const MAX_DEGREE: usize = 40;

fn check_degrees(k: usize, l: usize) -> Result<()> {
    if k == 0 || l == 0 || k > MAX_DEGREE || l > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "trace powers must lie in 1..={MAX_DEGREE}, got k = {k}, l = {l}"
        )));
    }
    Ok(())
}

/// Coefficients of (a + b cos t)^d in the basis cos(m t), m = 0..d.
fn cos_power_coeffs(a: f64, b: f64, d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d + 1];
    c[0] = 1.0;
    for step in 0..d {
        let mut next = vec![0.0; d + 1];
        for (m, &v) in c.iter().enumerate().take(step + 1) {
            if v == 0.0 {
                continue;
            }
            next[m] += a * v;
            if m == 0 {
                next[1] += b * v;
            } else {
                next[m - 1] += 0.5 * b * v;
                next[m + 1] += 0.5 * b * v;
            }
        }
        c = next;
    }
    c
}

/// S_n = 2 int_0^pi sin(n t) (mu + nu + 2 sqrt(mu nu) cos t)^(deg - 1) sin t dt
/// for n = 0..deg (index 0 unused). Exact trig-polynomial integration; S_n = 0
/// for n > deg.
fn sine_moments(mu: f64, nu: f64, deg: usize) -> Vec<f64> {
    let c = cos_power_coeffs(mu + nu, 2.0 * (mu * nu).sqrt(), deg - 1);
    let coeff = |m: usize| if m < c.len() { c[m] } else { 0.0 };
    (0..=deg)
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            let lead = if n == 1 { PI } else { 0.5 * PI };
            lead * coeff(n - 1) - 0.5 * PI * coeff(n + 1)
        })
        .collect()
}

/// Limiting covariance of the centered trace powers (tr W1^k, tr W2^l) as a
/// finite sum over coupled sine modes:
///
///   k l sqrt(mu1 nu1 mu2 nu2) / pi^2
///     * sum_{n=1}^{min(k,l)} a_n c^n / n * S_n(1) * S_n(2),
///
/// where c is the coupling of the overlap geometry. Exact for every c in
/// [0, 1], including the fully shared case c = 1.
pub fn covariance_modes(
    k: usize,
    l: usize,
    geom: &OverlapGeometry,
    weights: &BetaWeights,
) -> Result<f64> {
    check_degrees(k, l)?;
    geom.validate()?;
    let c = geom.coupling().min(1.0);
    let s1 = sine_moments(geom.mu1, geom.nu1, k);
    let s2 = sine_moments(geom.mu2, geom.nu2, l);
    let mut sum = 0.0;
    for n in 1..=k.min(l) {
        sum += weights.weight(n) * c.powi(n as i32) / n as f64 * s1[n] * s2[n];
    }
    let front = (k * l) as f64 * (geom.mu1 * geom.nu1 * geom.mu2 * geom.nu2).sqrt() / (PI * PI);
    Ok(front * sum)
}

/// Glued-tree contribution: pairs of plane trees joined along one shared
/// edge cell, weighted by the excess fourth moment of the entry law.
pub fn t1_limit(k: usize, l: usize, geom: &OverlapGeometry, fourth_moment: f64) -> Result<f64> {
    check_degrees(k, l)?;
    geom.validate()?;
    let f1 = gen_f(geom.gamma1(), k)?[k];
    let f2 = gen_f(geom.gamma2(), l)?[l];
    // theta nu1 nu2 without the intermediate theta: mu12 nu12 / (mu1 mu2).
    let tnn = geom.mu12 * geom.nu12 / (geom.mu1 * geom.mu2);
    Ok(geom.nu1.powi(k as i32)
        * geom.nu2.powi(l as i32)
        * (fourth_moment - 1.0)
        * tnn
        * (k * l) as f64
        * f1
        * f2)
}

/// Glued-cycle contribution: planted forests around a shared cycle of length
/// r >= 2, reindexed so that coefficient extraction truncates at min(k, l).
pub fn t2_limit(k: usize, l: usize, geom: &OverlapGeometry, weights: &BetaWeights) -> Result<f64> {
    check_degrees(k, l)?;
    geom.validate()?;
    let rmax = k.min(l);
    if rmax < 2 {
        return Ok(0.0);
    }
    let g1 = gen_g(geom.gamma1(), k)?;
    let g2 = gen_g(geom.gamma2(), l)?;
    let tnn = geom.mu12 * geom.nu12 / (geom.mu1 * geom.mu2);
    let mut sum = 0.0;
    for r in 2..=rmax {
        let p1 = series_power(&g1, r, k - r);
        let p2 = series_power(&g2, r, l - r);
        sum += weights.weight(r) / r as f64 * tnn.powi(r as i32) * p1[k - r] * p2[l - r];
    }
    Ok(sum * (k * l) as f64 * geom.nu1.powi(k as i32) * geom.nu2.powi(l as i32))
}

/// Leading coefficient of E tr W^k per unit scale. Symmetric in (mu, nu).
pub fn limit_mean(k: usize, mu: f64, nu: f64) -> Result<f64> {
    if k == 0 || k > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "trace power must lie in 1..={MAX_DEGREE}, got {k}"
        )));
    }
    if !(mu > 0.0 && nu > 0.0 && mu.is_finite() && nu.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "shape must be positive, got mu = {mu}, nu = {nu}"
        )));
    }
    let (lo, hi) = if mu <= nu { (mu, nu) } else { (nu, mu) };
    let f = gen_f(hi / lo, k)?;
    Ok(lo.powi(k as i32 + 1) * f[k])
}

/// Covariance of two planar statistics with polynomial factors x^k and x^l:
/// the measures mix nested-corner geometries bilinearly.
pub fn planar_covariance(
    k: usize,
    l: usize,
    rho1: &DiscreteMeasure,
    rho2: &DiscreteMeasure,
    mu: f64,
    nu: f64,
    weights: &BetaWeights,
) -> Result<f64> {
    let mut acc = 0.0;
    for &(y, wy) in rho1.points() {
        for &(z, wz) in rho2.points() {
            let geom = OverlapGeometry::nested_corners(y, z, mu, nu)?;
            acc += wy * wz * covariance_modes(k, l, &geom, weights)?;
        }
    }
    Ok(acc)
}

/// Controls for the torus quadrature of the double contour integral.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative agreement required between successive grid refinements.
    pub rel_tol: f64,
    pub initial_points: usize,
    pub max_points: usize,
    /// Above this coupling the contours shrink and the result is
    /// Richardson-extrapolated in the shrink parameter.
    pub direct_coupling_max: f64,
    pub shrink_stages: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-9,
            initial_points: 64,
            max_points: 8192,
            direct_coupling_max: 0.9,
            shrink_stages: 4,
        }
    }
}

/// Mode-generating kernel sum_{n>=1} a_n w^n / n on the unit disc.
fn psi(weights: &BetaWeights, w: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if w.norm() < 0.01 {
        // short series; avoids cancellation in -ln(1 - w) - w for tiny w
        let mut acc = w * weights.a1;
        let mut wn = w;
        for n in 2..=12u32 {
            wn *= w;
            acc += wn * (weights.weight(n as usize) / n as f64);
        }
        return acc;
    }
    let base = -(one - w).ln() - w;
    let tail = match weights.class {
        SymmetryClass::Orthogonal => base * 2.0,
        SymmetryClass::Unitary => base,
        SymmetryClass::Symplectic => {
            let q = w * 0.25;
            base + (-(one - q).ln() - q)
        }
    };
    tail + w * weights.a1
}

/// One torus quadrature pass: N x N trapezoid points on contours of radius
/// sigma * sqrt(gamma_i).
fn torus_pass(
    k: usize,
    l: usize,
    geom: &OverlapGeometry,
    weights: &BetaWeights,
    sigma: f64,
    n_points: usize,
) -> Complex64 {
    let axis = |gamma: f64, deg: usize| -> Vec<Complex64> {
        let r = sigma * gamma.sqrt();
        (0..n_points)
            .map(|t| {
                let phi = 2.0 * PI * t as f64 / n_points as f64;
                let y = Complex64::from_polar(r, phi);
                let zinv = gamma / y + (1.0 + gamma) + y;
                let mut b = Complex64::new(1.0, 0.0);
                for _ in 0..deg - 1 {
                    b *= zinv;
                }
                b * (Complex64::new(1.0, 0.0) - gamma / (y * y)) * y
            })
            .collect()
    };
    let b1 = axis(geom.gamma1(), k);
    let b2 = axis(geom.gamma2(), l);
    // theta nu1 nu2 r1 r2 = coupling * sigma^2
    let w_amp = geom.coupling() * sigma * sigma;
    let psi_vals: Vec<Complex64> = (0..n_points)
        .map(|s| {
            let phase = 2.0 * PI * s as f64 / n_points as f64;
            psi(weights, Complex64::from_polar(w_amp, phase))
        })
        .collect();
    let mut conv = vec![Complex64::new(0.0, 0.0); n_points];
    for (t, &x) in b1.iter().enumerate() {
        for (u, &yv) in b2.iter().enumerate() {
            let s = (t + u) % n_points;
            conv[s] += x * yv;
        }
    }
    let total: Complex64 = conv.iter().zip(&psi_vals).map(|(cv, pv)| cv * pv).sum();
    total
        * ((k * l) as f64 * geom.nu1.powi(k as i32) * geom.nu2.powi(l as i32)
            / (n_points * n_points) as f64)
}

fn converge_at_sigma(
    k: usize,
    l: usize,
    geom: &OverlapGeometry,
    weights: &BetaWeights,
    sigma: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut n = cfg.initial_points.max(4 * (k.max(l) + 2));
    let mut prev = torus_pass(k, l, geom, weights, sigma, n);
    loop {
        n *= 2;
        if n > cfg.max_points {
            return Err(Error::QuadratureDiverged(format!(
                "no grid convergence below {} points at shrink {sigma}",
                cfg.max_points
            )));
        }
        let cur = torus_pass(k, l, geom, weights, sigma, n);
        let diff = (cur - prev).norm();
        if diff <= cfg.rel_tol * cur.norm().max(1e-9) {
            if cur.im.abs() > 1e-7 * (1.0 + cur.re.abs()) {
                return Err(Error::QuadratureDiverged(format!(
                    "imaginary residue {:e}",
                    cur.im
                )));
            }
            return Ok(cur.re);
        }
        prev = cur;
    }
}

/// Numerical evaluation of the double contour integral over full circles
/// |y_i| = sqrt(gamma_i). For coupling c below `direct_coupling_max` the
/// natural contours are used directly; nearer the singular coupling c = 1
/// the radii shrink (the integrand is radius-independent by analyticity)
/// and the stages are Richardson-extrapolated in the shrink parameter.
pub fn covariance_quadrature(
    k: usize,
    l: usize,
    geom: &OverlapGeometry,
    weights: &BetaWeights,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_degrees(k, l)?;
    geom.validate()?;
    let c = geom.coupling().min(1.0);
    if c <= cfg.direct_coupling_max {
        return converge_at_sigma(k, l, geom, weights, 1.0, cfg);
    }
    let stages = cfg.shrink_stages.max(2);
    // effective couplings c sigma^2 spaced away from 1
    let targets: Vec<f64> = (0..stages)
        .map(|j| 0.5 + 0.45 * j as f64 / (stages - 1) as f64)
        .collect();
    let mut hs = Vec::with_capacity(stages);
    let mut qs = Vec::with_capacity(stages);
    for &tc in &targets {
        let sigma = (tc / c).sqrt();
        hs.push(1.0 - sigma * sigma);
        qs.push(converge_at_sigma(k, l, geom, weights, sigma, cfg)?);
    }
    // Neville extrapolation to h = 0
    let mut table = qs.clone();
    for m in 1..stages {
        for j in (m..stages).rev() {
            let denom = hs[j] - hs[j - m];
            table[j] = table[j] + (table[j] - table[j - 1]) * hs[j] / -denom;
        }
    }
    let extrapolated = table[stages - 1];
    let spread = qs
        .iter()
        .map(|q| (q - extrapolated).abs())
        .fold(0.0f64, f64::max);
    let scale = extrapolated.abs().max(1e-9);
    if spread > 1e4 * cfg.rel_tol * scale {
        return Err(Error::QuadratureDiverged(format!(
            "shrink stages disagree: spread {spread:e} on scale {scale:e}"
        )));
    }
    Ok(extrapolated)
}
