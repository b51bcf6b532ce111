//! Tree-counting polynomials and the planted-tree generating functions.
//!
//! Rooted plane trees with k edges, graded by the number of odd-depth or
//! even-depth vertices, are counted by the Narayana polynomials. `gen_f`
//! expands the closed-form generating function
//!   F(z, g) = (z (1 - g) + 1 - sqrt((z (1 - g) + 1)^2 - 4 z)) / (2 z)
//! as a power series in z, and G = F (g - 1 + F) satisfies F = 1 + z G.

use crate::error::{Error, Result};

const MAX_ORDER: usize = 60;

fn binomial_u128(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for t in 0..r {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    acc
}

/// Narayana number N(k, j) = C(k, j) C(k, j - 1) / k for 1 <= j <= k.
pub fn narayana_number(k: usize, j: usize) -> Result<f64> {
    if k == 0 || j == 0 || j > k {
        return Err(Error::InvalidParameter(format!(
            "Narayana number needs 1 <= j <= k, got k = {k}, j = {j}"
        )));
    }
    if k > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {k} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    let num = binomial_u128(k as u64, j as u64) * binomial_u128(k as u64, j as u64 - 1);
    Ok((num / k as u128) as f64)
}

/// Sum of gamma^(odd-depth vertices) over rooted plane trees with k edges.
pub fn narayana_odd(k: usize, gamma: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let mut acc = 0.0;
    for j in (1..=k).rev() {
        acc = acc * gamma + narayana_number(k, j)?;
    }
    Ok(acc * gamma)
}

/// Sum of gamma^(even-depth vertices) over rooted plane trees with k edges.
/// Coincides with the odd grading for k >= 1; the one-vertex tree has a
/// single even vertex.
pub fn narayana_even(k: usize, gamma: f64) -> Result<f64> {
    if k == 0 {
        return Ok(gamma);
    }
    narayana_odd(k, gamma)
}

/// Coefficients c_0..c_n of the series F(z, gamma), expanded from the closed
/// form by a square-root series recurrence (no tree counting involved).
pub fn gen_f(gamma: f64, n: usize) -> Result<Vec<f64>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if n > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {n} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    // u(z) = (z (1 - gamma) + 1)^2 - 4 z, s = sqrt(u) with s_0 = 1:
    // s_m = (u_m - sum_{j=1}^{m-1} s_j s_{m-j}) / 2.
    let len = n + 2;
    let mut u = vec![0.0; len];
    u[0] = 1.0;
    if len > 1 {
        u[1] = 2.0 * (1.0 - gamma) - 4.0;
    }
    if len > 2 {
        u[2] = (1.0 - gamma) * (1.0 - gamma);
    }
    let mut s = vec![0.0; len];
    s[0] = 1.0;
    for m in 1..len {
        let mut conv = 0.0;
        for j in 1..m {
            conv += s[j] * s[m - j];
        }
        s[m] = 0.5 * (u[m] - conv);
    }
    // numerator z (1 - gamma) + 1 - s(z) vanishes at order 0; F_k = num_{k+1} / 2.
    let mut f = vec![0.0; n + 1];
    for (k, fk) in f.iter_mut().enumerate() {
        let mut num = -s[k + 1];
        if k + 1 == 1 {
            num += 1.0 - gamma;
        }
        *fk = num * 0.5;
    }
    Ok(f)
}

/// Coefficients c_0..c_n of G(z, gamma) = F (gamma - 1 + F).
pub fn gen_g(gamma: f64, n: usize) -> Result<Vec<f64>> {
    let f = gen_f(gamma, n)?;
    let mut g = vec![0.0; n + 1];
    for k in 0..=n {
        let mut conv = 0.0;
        for j in 0..=k {
            conv += f[j] * f[k - j];
        }
        g[k] = conv + (gamma - 1.0) * f[k];
    }
    Ok(g)
}

/// Truncated power of a series: coefficients 0..n of base^r.
pub(crate) fn series_power(base: &[f64], r: usize, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n + 1];
    acc[0] = 1.0;
    for _ in 0..r {
        let mut next = vec![0.0; n + 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in base.iter().take(n + 1 - i).enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}
