//! Exact discrete optimal transport between equal-size clouds under squared
//! Euclidean cost, solved as a linear assignment problem.
//!
//! The solver is a shortest-augmenting-path Hungarian method with row and
//! column potentials, `O(n^3)`. It returns the potentials as a dual
//! certificate. An exhaustive oracle and two monotonicity checks sit beside
//! it for verification.

use itertools::Itertools;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{dist2, dot, norm, PointCloud};

/// Largest instance [`brute_force_assignment`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Slack used by the monotonicity checks, relative to the magnitudes involved.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// Row-major `n x n` matrix of squared distances `|u_i - X_j|^2`.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn squared_euclidean(reference: &PointCloud, target: &PointCloud) -> Result<Self> {
        check_instance(reference, target)?;
        let n = reference.len();
        let mut data = Vec::with_capacity(n * n);
        for u in reference {
            for x in target {
                data.push(dist2(u.coords(), x.coords()));
            }
        }
        Ok(CostMatrix { n, data })
    }

    /// Wraps a row-major matrix. Entries must be finite.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n || n == 0 {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if let Some(pos) = data.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(CostMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn permutation_cost(&self, sigma: &[usize]) -> f64 {
        sigma.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Dual potentials with `row[i] + col[j] <= c_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

impl DualCertificate {
    pub fn objective(&self) -> f64 {
        self.row.iter().sum::<f64>() + self.col.iter().sum::<f64>()
    }
}

/// An optimal (or candidate) pairing of reference index `i` with target
/// index `sigma[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub sigma: Vec<usize>,
    pub total_cost: f64,
    pub certificate: Option<DualCertificate>,
}

impl Serialize for Matching {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Matching", 2)?;
        s.serialize_field("sigma", &self.sigma)?;
        s.serialize_field("cost", &self.total_cost)?;
        s.end()
    }
}

impl Matching {
    /// Builds a matching from a permutation, computing its cost.
    pub fn from_permutation(sigma: Vec<usize>, cost: &CostMatrix) -> Result<Self> {
        if sigma.len() != cost.n() || !is_permutation(&sigma) {
            return Err(Error::InvalidArgument("sigma is not a permutation of 0..n".into()));
        }
        let total_cost = cost.permutation_cost(&sigma);
        Ok(Matching { sigma, total_cost, certificate: None })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Target index to reference index.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.sigma.len()];
        for (i, &j) in self.sigma.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }

    /// Primal cost minus dual objective. `None` without a certificate.
    pub fn duality_gap(&self) -> Option<f64> {
        self.certificate.as_ref().map(|c| self.total_cost - c.objective())
    }

    /// Largest violation of dual feasibility and of complementary slackness,
    /// each relative to `1 + |c_ij|`.
    pub fn certificate_residuals(&self, cost: &CostMatrix) -> Option<(f64, f64)> {
        let cert = self.certificate.as_ref()?;
        let n = cost.n();
        let mut feasibility = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let c = cost.get(i, j);
                feasibility = feasibility.max((cert.row[i] + cert.col[j] - c) / (1.0 + c.abs()));
            }
        }
        let slackness = self
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let c = cost.get(i, j);
                (c - cert.row[i] - cert.col[j]).abs() / (1.0 + c.abs())
            })
            .fold(0.0f64, f64::max);
        Some((feasibility, slackness))
    }
}

fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    sigma.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
}

fn check_instance(reference: &PointCloud, target: &PointCloud) -> Result<()> {
    if reference.len() != target.len() {
        return Err(Error::SizeMismatch { reference: reference.len(), target: target.len() });
    }
    reference.check_same_dim(target)
}

/// Minimum-cost perfect assignment of a dense square matrix.
///
/// Returns the row-to-column assignment and feasible potentials
/// `(row, col)` with `row[i] + col[j] <= c_ij`, tight on the assignment.
pub fn solve_lsap(n: usize, cost: &[f64]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)] / scale;

    // One-based arrays; row 0 / column 0 are the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = a(i0, j) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0; n];
    for j in 1..=n {
        sigma[owner[j] - 1] = j - 1;
    }
    let row = u[1..].iter().map(|x| x * scale).collect();
    let col = v[1..].iter().map(|x| x * scale).collect();
    (sigma, row, col)
}

/// Optimal transport map from `reference` to `target` under squared
/// Euclidean cost.
///
/// The assignment is solved on the centred cross term
/// `-2 <u_i - mean(u), X_j - mean(X)>`, which differs from `|u_i - X_j|^2` by
/// a row term plus a column term and so has the same minimizers; it keeps
/// magnitudes linear rather than quadratic in far-away points. The
/// potentials are lifted back to the squared-distance cost. The method is
/// deterministic: identical inputs give identical output.
pub fn solve_assignment(reference: &PointCloud, target: &PointCloud) -> Result<Matching> {
    check_instance(reference, target)?;
    let n = reference.len();
    let ubar = reference.centroid();
    let xbar = target.centroid();
    let a: Vec<Vec<f64>> = reference.iter().map(|u| u.diff(&ubar)).collect();
    let b: Vec<Vec<f64>> = target.iter().map(|x| x.diff(&xbar)).collect();
    let mut reduced = Vec::with_capacity(n * n);
    for ai in &a {
        for bj in &b {
            reduced.push(-2.0 * dot(ai, bj));
        }
    }
    let (sigma, row, col) = solve_lsap(n, &reduced);

    // |u_i - X_j|^2 = reduced_ij + |u_i - xbar|^2 + (|b_j|^2 - 2 <ubar - xbar, b_j>)
    let shift = ubar.diff(&xbar);
    let row = row.iter().zip(reference).map(|(r, u)| r + dist2(u.coords(), xbar.coords())).collect();
    let col = col.iter().zip(&b).map(|(c, bj)| c + dot(bj, bj) - 2.0 * dot(&shift, bj)).collect();
    let total_cost = sigma.iter().enumerate().map(|(i, &j)| dist2(reference[i].coords(), target[j].coords())).sum();
    Ok(Matching { sigma, total_cost, certificate: Some(DualCertificate { row, col }) })
}

/// Exhaustive minimum over all `n!` permutations; among (near-)ties the
/// lexicographically smallest permutation wins. Refuses `n > 10`.
pub fn brute_force_assignment(reference: &PointCloud, target: &PointCloud) -> Result<Matching> {
    check_instance(reference, target)?;
    let n = reference.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge { n, max: BRUTE_FORCE_MAX_N });
    }
    let cost = CostMatrix::squared_euclidean(reference, target)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..n).permutations(n) {
        let c = cost.permutation_cost(&perm);
        let better = match &best {
            None => true,
            Some((b, _)) => c < b - 1e-12 * (1.0 + b.abs()),
        };
        if better {
            best = Some((c, perm));
        }
    }
    let (total_cost, sigma) = best.expect("at least one permutation");
    Ok(Matching { sigma, total_cost, certificate: None })
}

/// A pair `(i, j)` with `<u_i - u_j, T(u_i) - T(u_j)> < 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairViolation {
    pub i: usize,
    pub j: usize,
    pub inner_product: f64,
}

/// Checks `<u_i - u_j, T(u_i) - T(u_j)> >= 0` for every pair, up to
/// [`MONOTONE_TOLERANCE`] times the product of the two difference norms.
pub fn check_pairwise_monotone(m: &Matching, reference: &PointCloud, target: &PointCloud) -> Vec<PairViolation> {
    let n = m.len();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let du = reference[i].diff(&reference[j]);
            let dt = target[m.sigma[i]].diff(&target[m.sigma[j]]);
            let inner = dot(&du, &dt);
            if inner < -MONOTONE_TOLERANCE * (norm(&du) * norm(&dt)).max(1.0) {
                violations.push(PairViolation { i, j, inner_product: inner });
            }
        }
    }
    violations
}

/// Outcome of a cyclical-monotonicity check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CycleReport {
    pub cycles_checked: u64,
    /// A reference-index cycle whose rotation would lower the cost.
    pub violation: Option<Vec<usize>>,
}

impl CycleReport {
    pub fn is_monotone(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that no cycle `i_1 -> ... -> i_L` of length `2..=max_cycle_len`
/// can lower the cost by handing each `T(u_{i_k})` to `u_{i_{k-1}}`.
///
/// Enumerates `O(n^L)` cycles; intended for `L <= 5`.
pub fn check_cyclical_monotone(
    m: &Matching,
    reference: &PointCloud,
    target: &PointCloud,
    max_cycle_len: usize,
) -> Result<CycleReport> {
    let cost = CostMatrix::squared_euclidean(reference, target)?;
    let mut report = CycleReport::default();
    let mut path = Vec::with_capacity(max_cycle_len);
    for start in 0..m.len() {
        path.clear();
        path.push(start);
        if extend_cycles(m, &cost, max_cycle_len, &mut path, &mut report) {
            break;
        }
    }
    Ok(report)
}

fn extend_cycles(
    m: &Matching,
    cost: &CostMatrix,
    max_len: usize,
    path: &mut Vec<usize>,
    report: &mut CycleReport,
) -> bool {
    if path.len() >= 2 {
        report.cycles_checked += 1;
        let len = path.len();
        let current: f64 = path.iter().map(|&i| cost.get(i, m.sigma[i])).sum();
        let rotated: f64 = (0..len).map(|k| cost.get(path[k], m.sigma[path[(k + 1) % len]])).sum();
        if rotated < current - MONOTONE_TOLERANCE * (1.0 + current.abs()) {
            report.violation = Some(path.clone());
            return true;
        }
    }
    if path.len() == max_len {
        return false;
    }
    // Rotations are enumerated once by keeping the smallest index first.
    for next in path[0] + 1..m.len() {
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        let found = extend_cycles(m, cost, max_len, path, report);
        path.pop();
        if found {
            return true;
        }
    }
    false
}
