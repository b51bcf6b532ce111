//! From samples to spectra: eigenvalue extraction, linear statistics, and
//! Monte Carlo moment estimation with batch-means standard errors.
//!
//! Replicates are embarrassingly parallel and every per-replicate quantity is
//! a pure function of (seed, replicate), so estimates are bit-identical for
//! any thread count. Reductions accumulate in fixed index order with
//! compensated summation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::rng_ensemble::{ArrayHandle, FamilySpec, MatrixData, materialize, wishart};

/// Eigenvalues of a Hermitian matrix, sorted ascending.
///
/// The input is checked for Hermitian symmetry up to a small multiple of its
/// magnitude; sampled covariance matrices are symmetrized at construction,
/// so a failure here means the caller built the matrix by hand.
pub fn eigenvalues(w: &MatrixData) -> Result<Vec<f64>> {
    let (rows, cols) = w.shape();
    if rows != cols {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues need a square matrix, got {rows} x {cols}"
        )));
    }
    let mut magnitude = 0.0f64;
    let mut asymmetry = 0.0f64;
    for i in 0..rows {
        for j in i..cols {
            let a = w.get(i, j);
            let b = w.get(j, i).conj();
            magnitude = magnitude.max(a.norm());
            asymmetry = asymmetry.max((a - b).norm());
        }
    }
    if asymmetry > 1e-8 * (1.0 + magnitude) {
        return Err(Error::NotHermitian { asymmetry });
    }
    let mut eigs: Vec<f64> = match w {
        MatrixData::Real(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        MatrixData::Complex(m) => m.symmetric_eigenvalues().iter().copied().collect(),
    };
    eigs.sort_by(|a, b| a.total_cmp(b));
    Ok(eigs)
}

/// Spectrum of one family member in one replicate.
///
/// `trace` is the diagonal sum of the matrix itself. The eigenvalue sum
/// agrees with it only up to solver roundoff, so statistics use `trace` for
/// their linear part; for entry laws that fix the diagonal (sign entries)
/// this keeps tr W bit-identical across replicates.
#[derive(Debug, Clone)]
pub struct LevelSpectrum {
    pub level: f64,
    pub rows: usize,
    pub cols: usize,
    pub trace: f64,
    pub eigenvalues: Vec<f64>,
}

/// All spectra of one replicate, in family order.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub replicate: u64,
    pub levels: Vec<LevelSpectrum>,
}

impl SpectralSample {
    pub fn level(&self, level: f64) -> Result<&LevelSpectrum> {
        self.levels
            .iter()
            .find(|s| s.level == level)
            .ok_or(Error::UnknownLevel { level })
    }
}

/// Draws replicate `replicate` of the family and diagonalizes every member.
pub fn sample_spectra(
    handle: &ArrayHandle,
    family: &FamilySpec,
    replicate: u64,
) -> Result<SpectralSample> {
    let h = handle.for_replicate(replicate);
    let scale = family.scale();
    let mut levels = Vec::new();
    for (level, window) in family.resolve()? {
        let s = materialize(&h, &window)?;
        let w = wishart(&s, scale)?;
        let side = w.shape().0;
        let trace = (0..side).map(|i| w.get(i, i).re).sum();
        let eigs = eigenvalues(&w)?;
        levels.push(LevelSpectrum {
            level,
            rows: window.rows,
            cols: window.cols,
            trace,
            eigenvalues: eigs,
        });
    }
    Ok(SpectralSample { replicate, levels })
}

/// Sum of p(lambda) over a spectrum, with p given by ascending coefficients.
pub fn linear_statistic(eigenvalues: &[f64], poly: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &x in eigenvalues {
        let mut p = 0.0;
        for &c in poly.iter().rev() {
            p = p * x + c;
        }
        let t = acc + p;
        comp += if acc.abs() >= p.abs() {
            (acc - t) + p
        } else {
            (p - t) + acc
        };
        acc = t;
    }
    acc + comp
}

/// Weighted combination of the same polynomial statistic across levels:
/// sum over atoms (y, w) of w * sum_i p(lambda_i(y)).
pub fn planar_statistic(
    sample: &SpectralSample,
    measure: &DiscreteMeasure,
    poly: &[f64],
) -> Result<f64> {
    let mut acc = 0.0;
    for &(level, weight) in measure.points() {
        acc += weight * linear_statistic(&sample.level(level)?.eigenvalues, poly);
    }
    Ok(acc)
}

/// Number of eigenvalues at or above `x`; `eigenvalues` must be sorted.
pub fn height_count(eigenvalues: &[f64], x: f64) -> usize {
    eigenvalues.len() - eigenvalues.partition_point(|&v| v < x)
}

/// Both sides of the exchange identity
/// integral of f(x) * height(x) over the support = sum_i F(lambda_i),
/// where F is the running integral of f from the left end of the support.
#[derive(Debug, Clone, Copy)]
pub struct HeightIdentityCheck {
    /// Quadrature of f times the eigenvalue counting height.
    pub integral: f64,
    /// Sum of the antiderivative over the spectrum.
    pub boundary_sum: f64,
    /// Sum of |F(lambda_i)|, for relative error scaling.
    pub scale: f64,
}

impl HeightIdentityCheck {
    pub fn residual(&self) -> f64 {
        (self.integral - self.boundary_sum).abs()
    }
}

/// Evaluates the exchange identity for one spectrum.
///
/// The left side splits the support at the eigenvalues, so the height is
/// constant on each piece and the quadrature error is pure Simpson error in
/// f. The right side accumulates the antiderivative on a half-step grid.
/// The support must start at or below zero and extend past the spectrum.
pub fn height_identity_check(
    eigenvalues: &[f64],
    poly: &[f64],
    support: (f64, f64),
    step: f64,
) -> Result<HeightIdentityCheck> {
    let (a, b) = support;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    if eigenvalues.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    let top = eigenvalues.last().copied().unwrap_or(0.0);
    if !(a <= 0.0 && b >= top + 1.0) {
        return Err(Error::SupportExcludesSpectrum);
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));

    let f = |x: f64| {
        let mut p = 0.0;
        for &c in poly.iter().rev() {
            p = p * x + c;
        }
        p
    };

    // Left side: piecewise-constant height times Simpson quadrature of f.
    let mut cuts = vec![a];
    cuts.extend(sorted.iter().copied().filter(|&v| v > a && v < b));
    cuts.push(b);
    let mut integral = 0.0;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let n = (((hi - lo) / step).ceil() as usize)
            .max(2)
            .next_multiple_of(2);
        let h = (hi - lo) / n as f64;
        let mut seg = f(lo) + f(hi);
        for j in 1..n {
            seg += f(lo + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        let height = height_count(&sorted, 0.5 * (lo + hi)) as f64;
        integral += height * seg * h / 3.0;
    }

    // Right side: cumulative Simpson of f on a half-step grid, then the
    // antiderivative at each eigenvalue with a sub-cell trapezoid correction.
    let h = step / 2.0;
    let n = (((b - a) / h).ceil() as usize).max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let fs: Vec<f64> = (0..=n).map(|j| f(a + j as f64 * h)).collect();
    let mut cum = vec![0.0; n + 1];
    for m in 0..n / 2 {
        let j = 2 * m;
        cum[j + 1] = cum[j] + h / 12.0 * (5.0 * fs[j] + 8.0 * fs[j + 1] - fs[j + 2]);
        cum[j + 2] = cum[j] + h / 3.0 * (fs[j] + 4.0 * fs[j + 1] + fs[j + 2]);
    }
    let mut boundary_sum = 0.0;
    let mut scale = 0.0;
    for &v in &sorted {
        let j = (((v - a) / h).floor() as usize).min(n - 1);
        let x_j = a + j as f64 * h;
        let val = cum[j] + (v - x_j) * 0.5 * (fs[j] + f(v));
        boundary_sum += val;
        scale += val.abs();
    }
    Ok(HeightIdentityCheck {
        integral,
        boundary_sum,
        scale,
    })
}

/// One named statistic: a polynomial applied to one or more levels with
/// weights. A plain single-matrix statistic is one part with weight 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatisticDef {
    pub label: String,
    /// (level key, weight) atoms.
    pub parts: Vec<(f64, f64)>,
    /// Ascending polynomial coefficients, constant term first.
    pub poly: Vec<f64>,
}

impl StatisticDef {
    /// Single-level statistic tr p(W(level)).
    pub fn on_level(label: impl Into<String>, level: f64, poly: Vec<f64>) -> Self {
        StatisticDef {
            label: label.into(),
            parts: vec![(level, 1.0)],
            poly,
        }
    }

    /// Pure power statistic tr W(level)^k.
    pub fn trace_power(label: impl Into<String>, level: f64, k: usize) -> Self {
        let mut poly = vec![0.0; k + 1];
        poly[k] = 1.0;
        Self::on_level(label, level, poly)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parts.is_empty() {
            return Err(Error::InvalidStatistic(format!(
                "statistic {:?} has no parts",
                self.label
            )));
        }
        if self.poly.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidStatistic(format!(
                "statistic {:?} has a zero polynomial",
                self.label
            )));
        }
        for &(level, weight) in &self.parts {
            if !(level.is_finite() && weight.is_finite() && weight != 0.0) {
                return Err(Error::InvalidStatistic(format!(
                    "statistic {:?} has a bad part ({level}, {weight})",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// Value on one sample: constant and linear parts come from the matrix
    /// side count and exact trace, higher powers from the spectrum.
    pub fn evaluate(&self, sample: &SpectralSample) -> Result<f64> {
        let mut acc = 0.0;
        for &(level, weight) in &self.parts {
            let spec = sample.level(level)?;
            let mut part = 0.0;
            for (j, &c) in self.poly.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                part += c * match j {
                    0 => spec.eigenvalues.len() as f64,
                    1 => spec.trace,
                    _ => neumaier(spec.eigenvalues.iter().map(|&x| x.powi(j as i32))),
                };
            }
            acc += weight * part;
        }
        Ok(acc)
    }
}

/// Sample moments of a vector statistic with batch-means standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSummary {
    pub replicates: usize,
    pub batches: usize,
    pub mean: Vec<f64>,
    pub se_mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub se_cov: Vec<Vec<f64>>,
    pub k3: Vec<f64>,
    pub se_k3: Vec<f64>,
    pub k4: Vec<f64>,
    pub se_k4: Vec<f64>,
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = acc + v;
        comp += if acc.abs() >= v.abs() {
            (acc - t) + v
        } else {
            (v - t) + acc
        };
        acc = t;
    }
    acc + comp
}

/// Plain (no standard errors) moments of a slice of rows.
/// Raw (mean, covariance, third cumulant, fourth cumulant) block.
type RawMoments = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

fn plain_moments(rows: &[Vec<f64>], dim: usize) -> RawMoments {
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|j| neumaier(rows.iter().map(|r| r[j])) / n)
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        for k in j..dim {
            let s = neumaier(rows.iter().map(|r| (r[j] - mean[j]) * (r[k] - mean[k])));
            let c = s / (n - 1.0);
            cov[j][k] = c;
            cov[k][j] = c;
        }
    }
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    for j in 0..dim {
        let m2 = neumaier(rows.iter().map(|r| (r[j] - mean[j]).powi(2))) / n;
        let m3 = neumaier(rows.iter().map(|r| (r[j] - mean[j]).powi(3))) / n;
        let m4 = neumaier(rows.iter().map(|r| (r[j] - mean[j]).powi(4))) / n;
        k3[j] = m3;
        k4[j] = m4 - 3.0 * m2 * m2;
    }
    (mean, cov, k3, k4)
}

fn batch_se(batch_values: &[f64]) -> f64 {
    let b = batch_values.len() as f64;
    let m = neumaier(batch_values.iter().copied()) / b;
    let var = neumaier(batch_values.iter().map(|v| (v - m) * (v - m))) / (b - 1.0);
    (var / b).sqrt()
}

/// Reduces per-replicate statistic rows to moments with batch-means errors.
///
/// The full-sample estimates use every row; standard errors come from
/// splitting the first `batches * floor(n / batches)` rows into equal
/// batches and treating per-batch estimates as independent draws. Requires
/// at least two batches and two rows per batch.
pub fn reduce_rows(rows: &[Vec<f64>], batches: usize) -> Result<MomentSummary> {
    let n = rows.len();
    if batches < 2 || n < 2 * batches {
        return Err(Error::TooFewReplicates {
            replicates: n,
            batches,
        });
    }
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidParameter(
            "statistic rows must share a nonzero length".into(),
        ));
    }
    let (mean, cov, k3, k4) = plain_moments(rows, dim);

    let per = n / batches;
    let mut batch: Vec<RawMoments> = Vec::with_capacity(batches);
    for t in 0..batches {
        batch.push(plain_moments(&rows[t * per..(t + 1) * per], dim));
    }
    let se_mean: Vec<f64> = (0..dim)
        .map(|j| batch_se(&batch.iter().map(|b| b.0[j]).collect::<Vec<_>>()))
        .collect();
    let mut se_cov = vec![vec![0.0; dim]; dim];
    #[allow(clippy::needless_range_loop)]
    for j in 0..dim {
        for k in j..dim {
            let se = batch_se(&batch.iter().map(|b| b.1[j][k]).collect::<Vec<_>>());
            se_cov[j][k] = se;
            se_cov[k][j] = se;
        }
    }
    let se_k3: Vec<f64> = (0..dim)
        .map(|j| batch_se(&batch.iter().map(|b| b.2[j]).collect::<Vec<_>>()))
        .collect();
    let se_k4: Vec<f64> = (0..dim)
        .map(|j| batch_se(&batch.iter().map(|b| b.3[j]).collect::<Vec<_>>()))
        .collect();
    Ok(MomentSummary {
        replicates: n,
        batches,
        mean,
        se_mean,
        cov,
        se_cov,
        k3,
        se_k3,
        k4,
        se_k4,
    })
}

/// Evaluates every statistic on one replicate, in definition order.
pub fn statistic_row(
    handle: &ArrayHandle,
    family: &FamilySpec,
    stats: &[StatisticDef],
    replicate: u64,
) -> Result<Vec<f64>> {
    let sample = sample_spectra(handle, family, replicate)?;
    stats.iter().map(|s| s.evaluate(&sample)).collect()
}

/// Full Monte Carlo moment report for a family of statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub schema_version: String,
    pub seed: u64,
    pub distribution: String,
    pub scale: usize,
    pub labels: Vec<String>,
    pub moments: MomentSummary,
}

impl CovarianceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Upper triangle of the covariance estimate as CSV rows.
    pub fn covariance_csv(&self) -> String {
        let mut out = String::from("statistic_i,statistic_j,cov,se_cov\n");
        for j in 0..self.labels.len() {
            for k in j..self.labels.len() {
                out.push_str(&format!(
                    "{},{},{:.12e},{:.12e}\n",
                    self.labels[j],
                    self.labels[k],
                    self.moments.cov[j][k],
                    self.moments.se_cov[j][k]
                ));
            }
        }
        out
    }
}

/// Runs `replicates` independent draws of the family, evaluates the
/// statistics, and reduces them. Replicates run in parallel; the result does
/// not depend on the thread count.
pub fn estimate_moments(
    handle: &ArrayHandle,
    family: &FamilySpec,
    stats: &[StatisticDef],
    replicates: usize,
    batches: usize,
) -> Result<CovarianceReport> {
    if stats.is_empty() {
        return Err(Error::InvalidStatistic("no statistics requested".into()));
    }
    for s in stats {
        s.validate()?;
    }
    if batches < 2 || replicates < 2 * batches {
        return Err(Error::TooFewReplicates {
            replicates,
            batches,
        });
    }
    family.resolve()?;
    let rows: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| statistic_row(handle, family, stats, r))
        .collect::<Result<_>>()?;
    let moments = reduce_rows(&rows, batches)?;
    Ok(CovarianceReport {
        schema_version: "1".into(),
        seed: handle.seed,
        distribution: handle.distribution.name().into(),
        scale: family.scale(),
        labels: stats.iter().map(|s| s.label.clone()).collect(),
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::OverlapGeometry;
    use crate::rng_ensemble::{EntryDistribution, SubmatrixSpec, pair_blocks};

    fn square_family(side: usize, scale: usize) -> FamilySpec {
        FamilySpec::Blocks {
            blocks: vec![SubmatrixSpec::at_origin(side, side)],
            scale,
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        for dist in [
            EntryDistribution::RealGaussian,
            EntryDistribution::ComplexGaussian,
            EntryDistribution::Rademacher,
        ] {
            let h = ArrayHandle::new(7, dist);
            let s = materialize(&h, &SubmatrixSpec::at_origin(12, 9)).unwrap();
            let w = wishart(&s, 10).unwrap();
            let eigs = eigenvalues(&w).unwrap();
            assert_eq!(eigs.len(), 9);
            let tr: f64 = (0..9).map(|i| w.get(i, i).re).sum();
            let sum: f64 = eigs.iter().sum();
            assert!((tr - sum).abs() < 1e-10 * (1.0 + tr.abs()));
            assert!(eigs.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let err = eigenvalues(&MatrixData::Real(m)).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn trace_statistic_is_deterministic_for_sign_entries() {
        // With +-1 entries every diagonal entry of S^T S is exactly the row
        // count, so tr W is the same number in every replicate.
        let h = ArrayHandle::new(99, EntryDistribution::Rademacher);
        let family = square_family(8, 10);
        let stats = [StatisticDef::trace_power("t1", 1.0, 1)];
        let report = estimate_moments(&h, &family, &stats, 24, 4).unwrap();
        assert_eq!(report.moments.cov[0][0], 0.0);
        assert!((report.moments.mean[0] - 8.0 * 8.0 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_trace_variance_matches_the_exact_finite_size_value() {
        // Var tr W = (E|Z|^4 - 1) m n / L^2 exactly at every size.
        let h = ArrayHandle::new(5, EntryDistribution::RealGaussian);
        let family = square_family(20, 25);
        let stats = [StatisticDef::trace_power("t1", 1.0, 1)];
        let report = estimate_moments(&h, &family, &stats, 4000, 20).unwrap();
        let want = 2.0 * 400.0 / 625.0;
        let got = report.moments.cov[0][0];
        let se = report.moments.se_cov[0][0];
        assert!(
            (got - want).abs() < 5.0 * se,
            "var {got} vs {want} (se {se})"
        );
    }

    #[test]
    fn cross_trace_covariance_matches_the_shared_area() {
        // Cov(tr W1, tr W2) = (E|Z|^4 - 1) m12 n12 / L^2 exactly.
        let geom = OverlapGeometry::new(1.0, 1.0, 1.0, 1.0, 0.6, 0.6).unwrap();
        let family = pair_blocks(&geom, 30).unwrap();
        let h = ArrayHandle::new(11, EntryDistribution::ComplexGaussian);
        let stats = [
            StatisticDef::trace_power("a", 1.0, 1),
            StatisticDef::trace_power("b", 2.0, 1),
        ];
        let report = estimate_moments(&h, &family, &stats, 4000, 20).unwrap();
        let want = 1.0 * 18.0 * 18.0 / 900.0;
        let got = report.moments.cov[0][1];
        let se = report.moments.se_cov[0][1];
        assert!(
            (got - want).abs() < 5.0 * se,
            "cov {got} vs {want} (se {se})"
        );
    }

    #[test]
    fn reports_are_bit_identical_across_runs() {
        let h = ArrayHandle::new(123, EntryDistribution::UniformSym);
        let geom = OverlapGeometry::new(1.0, 0.8, 0.9, 1.0, 0.7, 0.6).unwrap();
        let family = pair_blocks(&geom, 40).unwrap();
        let stats = [
            StatisticDef::trace_power("p1", 1.0, 2),
            StatisticDef::trace_power("p2", 2.0, 3),
        ];
        let a = estimate_moments(&h, &family, &stats, 60, 5).unwrap();
        let b = estimate_moments(&h, &family, &stats, 60, 5).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn too_few_replicates_are_rejected() {
        let h = ArrayHandle::new(1, EntryDistribution::RealGaussian);
        let family = square_family(4, 4);
        let stats = [StatisticDef::trace_power("t", 1.0, 1)];
        assert!(matches!(
            estimate_moments(&h, &family, &stats, 9, 5),
            Err(Error::TooFewReplicates { .. })
        ));
        assert!(matches!(
            estimate_moments(&h, &family, &stats, 8, 1),
            Err(Error::TooFewReplicates { .. })
        ));
    }

    #[test]
    fn height_count_counts_from_above() {
        let eigs = [0.5, 1.0, 1.0, 2.5];
        assert_eq!(height_count(&eigs, 0.0), 4);
        assert_eq!(height_count(&eigs, 1.0), 3);
        assert_eq!(height_count(&eigs, 1.0 + 1e-12), 1);
        assert_eq!(height_count(&eigs, 3.0), 0);
    }

    #[test]
    fn height_identity_is_exact_for_one_atom() {
        // One eigenvalue at t: both sides equal F(t); for f = x on [0, b]
        // that is t^2 / 2.
        let check = height_identity_check(&[1.7], &[0.0, 1.0], (0.0, 3.0), 1e-3).unwrap();
        assert!((check.boundary_sum - 1.7f64 * 1.7 / 2.0).abs() < 1e-9);
        assert!(check.residual() < 1e-10);
    }

    #[test]
    fn height_identity_holds_on_a_sampled_spectrum() {
        let h = ArrayHandle::new(77, EntryDistribution::RealGaussian);
        let family = square_family(30, 30);
        let sample = sample_spectra(&h, &family, 0).unwrap();
        let eigs = &sample.levels[0].eigenvalues;
        let top = eigs.last().unwrap() + 1.5;
        let check = height_identity_check(eigs, &[0.5, -1.0, 0.25], (-0.5, top), 1e-3).unwrap();
        assert!(
            check.residual() < 1e-7 * (check.scale + 1.0),
            "residual {}",
            check.residual()
        );
    }

    #[test]
    fn height_identity_rejects_short_support() {
        let err = height_identity_check(&[2.0], &[0.0, 1.0], (0.0, 2.5), 1e-3).unwrap_err();
        assert!(matches!(err, Error::SupportExcludesSpectrum));
        let err = height_identity_check(&[2.0], &[0.0, 1.0], (0.5, 4.0), 1e-3).unwrap_err();
        assert!(matches!(err, Error::SupportExcludesSpectrum));
    }

    #[test]
    fn planar_statistic_combines_levels() {
        let h = ArrayHandle::new(3, EntryDistribution::RealGaussian);
        let family = FamilySpec::Corners(
            crate::rng_ensemble::CornerFamilySpec::new(1.0, 1.0, vec![0.5, 1.0], 20).unwrap(),
        );
        let sample = sample_spectra(&h, &family, 2).unwrap();
        let rho = DiscreteMeasure::new(vec![(0.5, 0.5), (1.0, 0.5)]).unwrap();
        let got = planar_statistic(&sample, &rho, &[0.0, 1.0]).unwrap();
        let a = linear_statistic(&sample.level(0.5).unwrap().eigenvalues, &[0.0, 1.0]);
        let b = linear_statistic(&sample.level(1.0).unwrap().eigenvalues, &[0.0, 1.0]);
        assert!((got - 0.5 * (a + b)).abs() < 1e-12 * (1.0 + got.abs()));
        let missing = DiscreteMeasure::new(vec![(0.25, 1.0)]).unwrap();
        assert!(matches!(
            planar_statistic(&sample, &missing, &[0.0, 1.0]),
            Err(Error::UnknownLevel { .. })
        ));
    }

    #[test]
    fn spectrum_mean_tracks_the_limit_density_mean() {
        // mean eigenvalue of W(1) at mu = nu = 1 tends to 1.
        let h = ArrayHandle::new(21, EntryDistribution::RealGaussian);
        let family = square_family(150, 150);
        let sample = sample_spectra(&h, &family, 0).unwrap();
        let eigs = &sample.levels[0].eigenvalues;
        let mean = eigs.iter().sum::<f64>() / eigs.len() as f64;
        assert!((mean - 1.0).abs() < 0.12, "mean {mean}");
    }

    #[test]
    #[ignore = "timing probe for sizing the acceptance sweeps"]
    fn eigensolve_throughput_probe() {
        use std::time::Instant;
        for (side, scale, reps) in [(100usize, 100usize, 20u64), (200, 200, 10), (400, 400, 3)] {
            let h = ArrayHandle::new(1, EntryDistribution::RealGaussian);
            let family = square_family(side, scale);
            let start = Instant::now();
            for r in 0..reps {
                let _ = sample_spectra(&h, &family, r).unwrap();
            }
            let per = start.elapsed().as_secs_f64() / reps as f64;
            println!("side {side}: {per:.4} s/replicate");
        }
    }
}
