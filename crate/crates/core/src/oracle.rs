//! Brute-force oracles: exhaustive plane-tree enumeration and exact
//! finite-size trace moments from entry-moment sums.
//!
//! Nothing here shares code with the fast paths. The tree enumerator checks
//! the combinatorial series coefficients; the trace-moment enumerator checks
//! Monte Carlo estimates and, at growing sizes, the limit formulas. Both are
//! exponential and guarded by explicit state budgets.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng_ensemble::{EntryDistribution, SubmatrixSpec};

/// A rooted plane tree; only the child order matters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    pub children: Vec<PlaneTree>,
}

impl PlaneTree {
    pub fn leaf() -> Self {
        PlaneTree { children: vec![] }
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(|c| 1 + c.edge_count()).sum()
    }

    /// Vertices at odd and even depth, the root sitting at even depth zero.
    pub fn depth_counts(&self) -> (usize, usize) {
        fn walk(t: &PlaneTree, depth: usize, odd: &mut usize, even: &mut usize) {
            if depth.is_multiple_of(2) {
                *even += 1;
            } else {
                *odd += 1;
            }
            for c in &t.children {
                walk(c, depth + 1, odd, even);
            }
        }
        let (mut odd, mut even) = (0, 0);
        walk(self, 0, &mut odd, &mut even);
        (odd, even)
    }
}

const TREE_EDGE_BUDGET: usize = 10;

/// Every rooted plane tree with exactly `edges` edges, by the first-subtree
/// decomposition: a nonempty tree splits into the subtree under the first
/// child and the tree formed by the remaining children.
pub fn enumerate_plane_trees(edges: usize) -> Result<Vec<PlaneTree>> {
    if edges > TREE_EDGE_BUDGET {
        let states = catalan_u128(edges);
        return Err(Error::EnumerationBudget {
            states,
            budget: catalan_u128(TREE_EDGE_BUDGET),
        });
    }
    let mut by_edges: Vec<Vec<PlaneTree>> = vec![vec![PlaneTree::leaf()]];
    for k in 1..=edges {
        let mut level = Vec::new();
        for a in 0..k {
            for first in &by_edges[a] {
                for rest in &by_edges[k - 1 - a] {
                    let mut t = rest.clone();
                    t.children.insert(0, first.clone());
                    level.push(t);
                }
            }
        }
        by_edges.push(level);
    }
    Ok(by_edges.pop().unwrap())
}

/// k-th Catalan number, exact; the number of plane trees with k edges.
pub fn catalan_u128(k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Sums gamma^(odd depth count) and gamma^(even depth count) over all plane
/// trees with `edges` edges, straight from the enumeration.
pub fn narayana_from_trees(edges: usize, gamma: f64) -> Result<(f64, f64)> {
    let mut odd_sum = 0.0;
    let mut even_sum = 0.0;
    for t in enumerate_plane_trees(edges)? {
        let (odd, even) = t.depth_counts();
        odd_sum += gamma.powi(odd as i32);
        even_sum += gamma.powi(even as i32);
    }
    Ok((odd_sum, even_sum))
}

/// Mixed entry moments E[Z^p conj(Z)^q], tabulated analytically per law.
/// Real laws depend only on p + q; the rotation-invariant complex law is
/// diagonal in (p, q).
#[derive(Debug, Clone)]
pub struct MomentTable {
    distribution: EntryDistribution,
    /// For real laws: E Z^m at index m. For the complex law: E |Z|^(2p) at
    /// index p.
    values: Vec<f64>,
}

impl MomentTable {
    pub fn new(distribution: EntryDistribution, max_order: usize) -> Self {
        let values = if distribution.is_complex() {
            (0..=max_order).map(factorial).collect()
        } else {
            (0..=max_order)
                .map(|m| real_moment(distribution, m))
                .collect()
        };
        MomentTable {
            distribution,
            values,
        }
    }

    pub fn moment(&self, p: usize, q: usize) -> f64 {
        if self.distribution.is_complex() {
            if p != q {
                return 0.0;
            }
            self.values.get(p).copied().unwrap_or_else(|| factorial(p))
        } else {
            let m = p + q;
            self.values
                .get(m)
                .copied()
                .unwrap_or_else(|| real_moment(self.distribution, m))
        }
    }
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|i| i as f64).product()
}

fn real_moment(distribution: EntryDistribution, m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    match distribution {
        // (m - 1)!! pairings of a standard normal
        EntryDistribution::RealGaussian => (1..=m).step_by(2).map(|i| i as f64).product(),
        EntryDistribution::Rademacher => 1.0,
        // uniform on [-sqrt(3), sqrt(3)]: E Z^m = 3^(m/2) / (m + 1)
        EntryDistribution::UniformSym => 3f64.powi(m as i32 / 2) / (m + 1) as f64,
        EntryDistribution::ComplexGaussian => unreachable!("complex law uses the diagonal table"),
    }
}

const STATE_BUDGET: u128 = 10_000_000;

/// Cell exponent bookkeeping for one summand: (row, col, plain, conj).
struct CellCounts {
    cells: Vec<(u64, u64, u32, u32)>,
}

impl CellCounts {
    fn with_capacity(n: usize) -> Self {
        CellCounts {
            cells: Vec::with_capacity(n),
        }
    }

    fn clear(&mut self) {
        self.cells.clear();
    }

    fn add(&mut self, i: u64, a: u64, conjugated: bool) {
        for c in &mut self.cells {
            if c.0 == i && c.1 == a {
                if conjugated {
                    c.3 += 1;
                } else {
                    c.2 += 1;
                }
                return;
            }
        }
        self.cells
            .push((i, a, u32::from(!conjugated), u32::from(conjugated)));
    }

    fn expectation(&self, table: &MomentTable) -> f64 {
        let mut prod = 1.0;
        for &(_, _, p, q) in &self.cells {
            prod *= table.moment(p as usize, q as usize);
            if prod == 0.0 {
                return 0.0;
            }
        }
        prod
    }
}

/// Walks the trace-power index pattern for one matrix: the t-th hop
/// contributes a conjugated factor at (i_t, a_t) and a plain factor at
/// (i_t, a_(t+1)), indices cyclic. Offsets place the window in the common
/// array so overlapping windows share cells.
fn accumulate_cycle(counts: &mut CellCounts, rows: &[u64], cols: &[u64], off: (u64, u64)) {
    let k = rows.len();
    for t in 0..k {
        counts.add(off.0 + rows[t], off.1 + cols[t], true);
        counts.add(off.0 + rows[t], off.1 + cols[(t + 1) % k], false);
    }
}

struct Odometer {
    digits: Vec<u64>,
    radix: Vec<u64>,
}

impl Odometer {
    fn new(radix: Vec<u64>) -> Self {
        Odometer {
            digits: vec![0; radix.len()],
            radix,
        }
    }

    fn step(&mut self) -> bool {
        for (d, &r) in self.digits.iter_mut().zip(&self.radix) {
            *d += 1;
            if *d < r {
                return true;
            }
            *d = 0;
        }
        false
    }
}

fn window_states(spec: &SubmatrixSpec, power: u32) -> u128 {
    ((spec.rows as u128) * (spec.cols as u128)).pow(power)
}

/// E tr (S* S / L)^k for an m x n window, by summing entry moments over
/// every index assignment.
pub fn exact_trace_moment(
    k: usize,
    spec: &SubmatrixSpec,
    scale: usize,
    table: &MomentTable,
) -> Result<f64> {
    if k == 0 || scale == 0 {
        return Err(Error::InvalidParameter(format!(
            "need power >= 1 and scale >= 1, got k = {k}, L = {scale}"
        )));
    }
    spec.validate()?;
    let states = window_states(spec, k as u32);
    if states > STATE_BUDGET {
        return Err(Error::EnumerationBudget {
            states,
            budget: STATE_BUDGET,
        });
    }
    let mut radix = vec![spec.rows as u64; k];
    radix.extend(std::iter::repeat_n(spec.cols as u64, k));
    let mut odo = Odometer::new(radix);
    let mut counts = CellCounts::with_capacity(2 * k);
    let mut total = 0.0;
    loop {
        counts.clear();
        let (rows, cols) = odo.digits.split_at(k);
        accumulate_cycle(&mut counts, rows, cols, (0, 0));
        total += counts.expectation(table);
        if !odo.step() {
            break;
        }
    }
    Ok(total / (scale as f64).powi(k as i32))
}

/// Exact Cov(tr W1^k, tr W2^l) for two windows of the same array at finite
/// size, including every finite-size correction the limit formulas drop.
pub fn exact_trace_covariance(
    k: usize,
    l: usize,
    spec1: &SubmatrixSpec,
    spec2: &SubmatrixSpec,
    scale: usize,
    table: &MomentTable,
) -> Result<f64> {
    if k == 0 || l == 0 || scale == 0 {
        return Err(Error::InvalidParameter(format!(
            "need powers >= 1 and scale >= 1, got k = {k}, l = {l}, L = {scale}"
        )));
    }
    spec1.validate()?;
    spec2.validate()?;
    let states = window_states(spec1, k as u32).saturating_mul(window_states(spec2, l as u32));
    if states > STATE_BUDGET {
        return Err(Error::EnumerationBudget {
            states,
            budget: STATE_BUDGET,
        });
    }
    let mut radix = vec![spec1.rows as u64; k];
    radix.extend(std::iter::repeat_n(spec1.cols as u64, k));
    radix.extend(std::iter::repeat_n(spec2.rows as u64, l));
    radix.extend(std::iter::repeat_n(spec2.cols as u64, l));
    let off1 = (spec1.row0, spec1.col0);
    let off2 = (spec2.row0, spec2.col0);
    let mut odo = Odometer::new(radix);
    let mut counts = CellCounts::with_capacity(2 * (k + l));
    let mut joint = 0.0;
    loop {
        counts.clear();
        let (first, second) = odo.digits.split_at(2 * k);
        let (rows1, cols1) = first.split_at(k);
        let (rows2, cols2) = second.split_at(l);
        accumulate_cycle(&mut counts, rows1, cols1, off1);
        accumulate_cycle(&mut counts, rows2, cols2, off2);
        joint += counts.expectation(table);
        if !odo.step() {
            break;
        }
    }
    let joint = joint / (scale as f64).powi((k + l) as i32);
    let mean1 = exact_trace_moment(k, spec1, scale, table)?;
    let mean2 = exact_trace_moment(l, spec2, scale, table)?;
    Ok(joint - mean1 * mean2)
}

/// Same-law check value used by the table tests: E[Z^p conj(Z)^q] estimated
/// directly from the definition for the complex Gaussian at small orders.
#[allow(dead_code)]
fn complex_gaussian_moment_by_wick(p: usize, q: usize) -> Complex64 {
    // E[Z^p conj(Z)^q] = delta_pq p! for Z = (X + iY)/sqrt(2)
    if p == q {
        Complex64::new(factorial(p), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{narayana_even, narayana_odd};

    #[test]
    fn tree_counts_are_catalan() {
        let want = [1usize, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (k, &c) in want.iter().enumerate() {
            let trees = enumerate_plane_trees(k).unwrap();
            assert_eq!(trees.len(), c, "k = {k}");
            assert!(trees.iter().all(|t| t.edge_count() == k));
        }
    }

    #[test]
    fn oversized_enumerations_are_refused() {
        assert!(matches!(
            enumerate_plane_trees(11),
            Err(Error::EnumerationBudget { .. })
        ));
        let big = SubmatrixSpec::at_origin(40, 40);
        let table = MomentTable::new(EntryDistribution::RealGaussian, 16);
        assert!(matches!(
            exact_trace_moment(4, &big, 40, &table),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn tree_sums_match_the_closed_form_polynomials() {
        for k in 0..=8 {
            for gamma in [0.3, 1.0, 2.5] {
                let (odd, even) = narayana_from_trees(k, gamma).unwrap();
                let want_odd = narayana_odd(k, gamma).unwrap();
                let want_even = narayana_even(k, gamma).unwrap();
                assert!(
                    (odd - want_odd).abs() < 1e-9 * (1.0 + want_odd.abs()),
                    "odd k = {k}, gamma = {gamma}: {odd} vs {want_odd}"
                );
                assert!(
                    (even - want_even).abs() < 1e-9 * (1.0 + want_even.abs()),
                    "even k = {k}, gamma = {gamma}: {even} vs {want_even}"
                );
            }
        }
    }

    #[test]
    fn moment_tables_match_their_definitions() {
        let g = MomentTable::new(EntryDistribution::RealGaussian, 8);
        assert_eq!(g.moment(2, 0), 1.0);
        assert_eq!(g.moment(2, 2), 3.0);
        assert_eq!(g.moment(3, 3), 15.0);
        assert_eq!(g.moment(1, 2), 0.0);
        let r = MomentTable::new(EntryDistribution::Rademacher, 8);
        assert_eq!(r.moment(4, 2), 1.0);
        assert_eq!(r.moment(1, 0), 0.0);
        let u = MomentTable::new(EntryDistribution::UniformSym, 8);
        assert_eq!(u.moment(1, 1), 1.0);
        assert!((u.moment(2, 2) - 1.8).abs() < 1e-15);
        assert!((u.moment(3, 3) - 27.0 / 7.0).abs() < 1e-15);
        let c = MomentTable::new(EntryDistribution::ComplexGaussian, 8);
        for p in 0..5 {
            for q in 0..5 {
                let want = complex_gaussian_moment_by_wick(p, q);
                assert_eq!(c.moment(p, q), want.re, "p = {p}, q = {q}");
            }
        }
    }

    #[test]
    fn first_power_mean_is_the_window_area() {
        let table = MomentTable::new(EntryDistribution::UniformSym, 4);
        let spec = SubmatrixSpec::at_origin(3, 5);
        let got = exact_trace_moment(1, &spec, 7, &table).unwrap();
        assert_eq!(got, 15.0 / 7.0);
    }

    #[test]
    fn scalar_second_power_is_the_fourth_moment() {
        for (dist, want) in [
            (EntryDistribution::RealGaussian, 3.0),
            (EntryDistribution::ComplexGaussian, 2.0),
            (EntryDistribution::Rademacher, 1.0),
            (EntryDistribution::UniformSym, 1.8),
        ] {
            let table = MomentTable::new(dist, 8);
            let spec = SubmatrixSpec::at_origin(1, 1);
            let got = exact_trace_moment(2, &spec, 1, &table).unwrap();
            assert!((got - want).abs() < 1e-14, "{dist:?}: {got}");
        }
    }

    #[test]
    fn scalar_first_power_variance_is_the_centered_fourth_moment() {
        let table = MomentTable::new(EntryDistribution::RealGaussian, 8);
        let spec = SubmatrixSpec::at_origin(1, 1);
        let got = exact_trace_covariance(1, 1, &spec, &spec, 1, &table).unwrap();
        assert_eq!(got, 2.0);
    }

    #[test]
    fn first_power_variance_matches_the_closed_form() {
        // Var tr W = (E|Z|^4 - 1) m n / L^2 for every real law and size.
        for dist in [
            EntryDistribution::RealGaussian,
            EntryDistribution::UniformSym,
            EntryDistribution::Rademacher,
        ] {
            let table = MomentTable::new(dist, 8);
            let spec = SubmatrixSpec::at_origin(3, 4);
            let got = exact_trace_covariance(1, 1, &spec, &spec, 5, &table).unwrap();
            let want = (dist.fourth_moment() - 1.0) * 12.0 / 25.0;
            assert!((got - want).abs() < 1e-12, "{dist:?}: {got} vs {want}");
        }
    }

    #[test]
    fn second_power_variance_drifts_toward_its_limit() {
        // Full square windows at growing scale; the limit values are 36 for
        // the real Gaussian law and half that for the complex one.
        for (dist, limit) in [
            (EntryDistribution::RealGaussian, 36.0),
            (EntryDistribution::ComplexGaussian, 18.0),
        ] {
            let table = MomentTable::new(dist, 16);
            let mut prev_gap = f64::INFINITY;
            for l in [2usize, 3, 4, 5] {
                let spec = SubmatrixSpec::at_origin(l, l);
                let cov = exact_trace_covariance(2, 2, &spec, &spec, l, &table).unwrap();
                let gap = (cov - limit).abs();
                assert!(
                    gap < prev_gap,
                    "{dist:?} L = {l}: gap {gap} did not shrink from {prev_gap}"
                );
                prev_gap = gap;
            }
            // leading finite-size correction is O(1/L)
            assert!(prev_gap < limit * 0.26, "gap at L = 5: {prev_gap}");
        }
    }

    #[test]
    fn frozen_small_size_values_hold() {
        let spec = SubmatrixSpec::at_origin(3, 3);
        let real = MomentTable::new(EntryDistribution::RealGaussian, 16);
        let got = exact_trace_covariance(2, 2, &spec, &spec, 3, &real).unwrap();
        assert!((got - 464.0 / 9.0).abs() < 1e-10, "real {got}");
        let sign = MomentTable::new(EntryDistribution::Rademacher, 16);
        let got = exact_trace_covariance(2, 2, &spec, &spec, 3, &sign).unwrap();
        assert!((got - 16.0 / 9.0).abs() < 1e-10, "sign {got}");
    }

    #[test]
    fn disjoint_windows_are_uncorrelated() {
        let table = MomentTable::new(EntryDistribution::RealGaussian, 12);
        let a = SubmatrixSpec {
            row0: 0,
            col0: 0,
            rows: 2,
            cols: 2,
        };
        let b = SubmatrixSpec {
            row0: 2,
            col0: 2,
            rows: 2,
            cols: 2,
        };
        let got = exact_trace_covariance(2, 2, &a, &b, 3, &table).unwrap();
        assert!(got.abs() < 1e-12, "cov {got}");
    }

    #[test]
    fn overlap_correlates_only_through_shared_cells() {
        // Shifting one window off the other must reduce to the disjoint case
        // even when the windows touch.
        let table = MomentTable::new(EntryDistribution::ComplexGaussian, 12);
        let a = SubmatrixSpec {
            row0: 0,
            col0: 0,
            rows: 2,
            cols: 3,
        };
        let shared = SubmatrixSpec {
            row0: 1,
            col0: 1,
            rows: 2,
            cols: 3,
        };
        let apart = SubmatrixSpec {
            row0: 5,
            col0: 7,
            rows: 2,
            cols: 3,
        };
        let with_overlap = exact_trace_covariance(1, 2, &a, &shared, 4, &table).unwrap();
        let without = exact_trace_covariance(1, 2, &a, &apart, 4, &table).unwrap();
        assert!(without.abs() < 1e-12);
        assert!(with_overlap.abs() > 1e-3, "overlap cov {with_overlap}");
    }
}
