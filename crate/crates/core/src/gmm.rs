//! Gaussian mixture over node embeddings: community detection (soft
//! assignments) and community embedding (one mean and covariance per
//! community), fitted by EM.
//!
//! The mixture is kept away from singular solutions by flooring the
//! covariance diagonal at a configurable ε after every M-step. Responsibility
//! computation runs entirely in log space.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg;

const LN_2PI: f64 = 1.8378770664093453;

/// Components with summed responsibility below this are considered empty and
/// reseeded from the worst-explained node.
const RESEED_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GmmError {
    #[error("covariance of component {component} is singular even after flooring")]
    SingularCovariance { component: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    /// Full d×d covariance per community; the correctness reference.
    Full,
    /// Diagonal-only covariance; much cheaper at large d.
    Diagonal,
}

/// Mixture parameters plus cached inverses and log-determinants. Immutable
/// once built; rebuilt by every M-step.
#[derive(Debug, Clone)]
pub struct GmmState {
    weights: Vec<f64>,
    means: Array2<f64>,
    covariances: Vec<Array2<f64>>,
    inverses: Vec<Array2<f64>>,
    log_dets: Vec<f64>,
    mode: CovarianceMode,
    floor: f64,
}

/// Per-node soft community memberships γ, row-stochastic |V|×K.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub gamma: Array2<f64>,
}

/// Per-node ranked community ids, strongest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityAssignment {
    pub per_node: Vec<Vec<u32>>,
}

impl GmmState {
    /// Build a state from raw parameters: floors the covariance diagonal at
    /// `floor` and caches each component's inverse and log-determinant.
    ///
    /// A covariance that stays numerically singular after the floor (rank
    /// deficiency off the diagonal) is inflated by `floor·I` a few times; if
    /// that still fails it is a hard error.
    pub fn new(
        weights: Vec<f64>,
        means: Array2<f64>,
        mut covariances: Vec<Array2<f64>>,
        mode: CovarianceMode,
        floor: f64,
    ) -> Result<Self, GmmError> {
        let k = weights.len();
        assert_eq!(means.nrows(), k);
        assert_eq!(covariances.len(), k);
        assert!(floor > 0.0);
        let weight_sum: f64 = weights.iter().sum();
        assert!((weight_sum - 1.0).abs() < 1e-9, "mixing weights must sum to 1");

        let mut inverses = Vec::with_capacity(k);
        let mut log_dets = Vec::with_capacity(k);
        for (idx, cov) in covariances.iter_mut().enumerate() {
            if matches!(mode, CovarianceMode::Diagonal) {
                let diag = cov.diag().to_owned();
                cov.fill(0.0);
                cov.diag_mut().assign(&diag);
            }
            for v in cov.diag_mut() {
                if *v < floor {
                    *v = floor;
                }
            }
            match mode {
                CovarianceMode::Diagonal => {
                    let d = cov.nrows();
                    let mut inv = Array2::<f64>::zeros((d, d));
                    let mut log_det = 0.0;
                    for j in 0..d {
                        inv[(j, j)] = 1.0 / cov[(j, j)];
                        log_det += cov[(j, j)].ln();
                    }
                    inverses.push(inv);
                    log_dets.push(log_det);
                }
                CovarianceMode::Full => {
                    let mut attempt = 0;
                    let l = loop {
                        match linalg::cholesky(cov.view()) {
                            Ok(l) => break l,
                            Err(_) if attempt < 3 => {
                                attempt += 1;
                                for j in 0..cov.nrows() {
                                    cov[(j, j)] += floor * 10f64.powi(attempt);
                                }
                            }
                            Err(_) => {
                                return Err(GmmError::SingularCovariance { component: idx })
                            }
                        }
                    };
                    log_dets.push(linalg::log_det_from_cholesky(&l));
                    inverses.push(linalg::inverse_from_cholesky(&l));
                }
            }
        }
        Ok(GmmState { weights, means, covariances, inverses, log_dets, mode, floor })
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn mean(&self, k: usize) -> ArrayView1<'_, f64> {
        self.means.row(k)
    }

    pub fn covariances(&self) -> &[Array2<f64>] {
        &self.covariances
    }

    /// Cached Σ_k⁻¹; constant between M-steps.
    pub fn inverse(&self, k: usize) -> &Array2<f64> {
        &self.inverses[k]
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// log N(x | ψ_k, Σ_k) using the cached factorization.
    pub fn log_pdf(&self, k: usize, x: ArrayView1<f64>) -> f64 {
        let d = self.dim() as f64;
        let diff = &x - &self.mean(k);
        let quad = match self.mode {
            CovarianceMode::Diagonal => {
                let cov = &self.covariances[k];
                diff.iter()
                    .enumerate()
                    .map(|(j, v)| v * v / cov[(j, j)])
                    .sum::<f64>()
            }
            CovarianceMode::Full => linalg::quadratic_form(self.inverses[k].view(), diff.view()),
        };
        -0.5 * (d * LN_2PI + self.log_dets[k] + quad)
    }
}

/// log N(x | mean, cov) for a standalone covariance matrix. Fails if the
/// matrix is not positive definite.
pub fn gaussian_log_pdf(
    x: ArrayView1<f64>,
    mean: ArrayView1<f64>,
    cov: ArrayView2<f64>,
) -> Result<f64, GmmError> {
    let l = linalg::cholesky(cov).map_err(|_| GmmError::SingularCovariance { component: 0 })?;
    let log_det = linalg::log_det_from_cholesky(&l);
    let inv = linalg::inverse_from_cholesky(&l);
    let diff = &x - &mean;
    let quad = linalg::quadratic_form(inv.view(), diff.view());
    Ok(-0.5 * (x.len() as f64 * LN_2PI + log_det + quad))
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// E-step: posterior responsibilities γ_ik ∝ π_k·N(φ_i | ψ_k, Σ_k),
/// normalized per node in log space.
pub fn e_step(phi: ArrayView2<f64>, gmm: &GmmState) -> Responsibilities {
    let k = gmm.component_count();
    let log_weights: Vec<f64> = gmm.weights.iter().map(|w| w.ln()).collect();
    let rows: Vec<Vec<f64>> = phi
        .outer_iter()
        .into_par_iter()
        .map(|x| {
            let logs: Vec<f64> =
                (0..k).map(|c| log_weights[c] + gmm.log_pdf(c, x)).collect();
            let lse = log_sum_exp(&logs);
            logs.iter().map(|l| (l - lse).exp()).collect()
        })
        .collect();
    let mut gamma = Array2::<f64>::zeros((phi.nrows(), k));
    for (i, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            gamma[(i, c)] = v;
        }
    }
    Responsibilities { gamma }
}

/// M-step: closed-form weight, mean and covariance updates from the current
/// responsibilities, followed by the diagonal floor.
///
/// A component whose summed responsibility is below threshold is reseeded at
/// the node the mixture currently explains worst; the returned list names
/// any such components.
pub fn m_step(
    phi: ArrayView2<f64>,
    resp: &Responsibilities,
    mode: CovarianceMode,
    floor: f64,
) -> Result<(GmmState, Vec<usize>), GmmError> {
    let n = phi.nrows();
    let d = phi.ncols();
    let k = resp.gamma.ncols();
    assert_eq!(resp.gamma.nrows(), n);

    let mut counts: Vec<f64> = (0..k).map(|c| resp.gamma.column(c).sum()).collect();
    let empty: Vec<usize> =
        (0..k).filter(|&c| counts[c] < RESEED_THRESHOLD).collect();

    let mut means = Array2::<f64>::zeros((k, d));
    for c in 0..k {
        if empty.contains(&c) {
            continue;
        }
        let mut acc = Array1::<f64>::zeros(d);
        for i in 0..n {
            let g = resp.gamma[(i, c)];
            if g > 0.0 {
                acc.scaled_add(g, &phi.row(i));
            }
        }
        means.row_mut(c).assign(&(acc / counts[c]));
    }

    let mut covariances: Vec<Array2<f64>> = (0..k)
        .into_par_iter()
        .map(|c| {
            let mut cov = Array2::<f64>::zeros((d, d));
            if empty.contains(&c) {
                return cov;
            }
            let mean = means.row(c);
            match mode {
                CovarianceMode::Full => {
                    for i in 0..n {
                        let g = resp.gamma[(i, c)];
                        if g == 0.0 {
                            continue;
                        }
                        let diff = &phi.row(i) - &mean;
                        for a in 0..d {
                            let ga = g * diff[a];
                            for b in 0..=a {
                                cov[(a, b)] += ga * diff[b];
                            }
                        }
                    }
                    for a in 0..d {
                        for b in 0..a {
                            cov[(a, b)] /= counts[c];
                            cov[(b, a)] = cov[(a, b)];
                        }
                        cov[(a, a)] /= counts[c];
                    }
                }
                CovarianceMode::Diagonal => {
                    for i in 0..n {
                        let g = resp.gamma[(i, c)];
                        if g == 0.0 {
                            continue;
                        }
                        let diff = &phi.row(i) - &mean;
                        for a in 0..d {
                            cov[(a, a)] += g * diff[a] * diff[a];
                        }
                    }
                    for a in 0..d {
                        cov[(a, a)] /= counts[c];
                    }
                }
            }
            cov
        })
        .collect();

    if !empty.is_empty() {
        // Reseed each empty component at the node the mixture explains
        // worst (lowest max-responsibility), with a spherical covariance at
        // the data variance.
        let variance = mean_dimension_variance(phi).max(floor);
        let mut worst: Vec<usize> = (0..n).collect();
        worst.sort_by(|&a, &b| {
            let ma = resp.gamma.row(a).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mb = resp.gamma.row(b).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            ma.partial_cmp(&mb).unwrap().then(a.cmp(&b))
        });
        for (slot, &c) in empty.iter().enumerate() {
            let i = worst[slot.min(n - 1)];
            means.row_mut(c).assign(&phi.row(i));
            let mut cov = Array2::<f64>::zeros((d, d));
            for a in 0..d {
                cov[(a, a)] = variance;
            }
            covariances[c] = cov;
            counts[c] = 1.0;
        }
    }

    let total: f64 = counts.iter().sum();
    let weights: Vec<f64> = counts.iter().map(|c| c / total).collect();
    let state = GmmState::new(weights, means, covariances, mode, floor)?;
    Ok((state, empty))
}

fn mean_dimension_variance(phi: ArrayView2<f64>) -> f64 {
    let n = phi.nrows() as f64;
    let d = phi.ncols();
    let mut total = 0.0;
    for j in 0..d {
        let col = phi.column(j);
        let mean = col.sum() / n;
        total += col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    }
    total / d as f64
}

/// −Σ_i log Σ_k π_k·N(φ_i | ψ_k, Σ_k), stabilized by log-sum-exp.
pub fn negative_log_likelihood(phi: ArrayView2<f64>, gmm: &GmmState) -> f64 {
    let k = gmm.component_count();
    let log_weights: Vec<f64> = gmm.weights.iter().map(|w| w.ln()).collect();
    let per_node: Vec<f64> = phi
        .outer_iter()
        .into_par_iter()
        .map(|x| {
            let logs: Vec<f64> =
                (0..k).map(|c| log_weights[c] + gmm.log_pdf(c, x)).collect();
            -log_sum_exp(&logs)
        })
        .collect();
    // Summed in node order so the value does not depend on the thread count.
    per_node.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Spread the initial means with distance-squared-proportional seeding.
    KMeansPlusPlus,
    /// K distinct nodes chosen uniformly.
    RandomNodes,
}

/// A fitted mixture: the state, responsibilities consistent with it, and
/// how many empty components had to be reseeded along the way.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: GmmState,
    pub resp: Responsibilities,
    pub reseeded: usize,
}

/// Fit a K-component mixture to the embeddings with `t2` EM alternations
/// from a fresh initialization. Returns the final state together with
/// responsibilities consistent with it.
pub fn fit<R: rand::Rng>(
    phi: ArrayView2<f64>,
    k: usize,
    t2: usize,
    init: InitStrategy,
    mode: CovarianceMode,
    floor: f64,
    rng: &mut R,
) -> Result<FitResult, GmmError> {
    assert!(k >= 1 && t2 >= 1);
    let n = phi.nrows();
    let d = phi.ncols();
    assert!(k <= n, "cannot fit {k} communities to {n} nodes");

    let mut means = Array2::<f64>::zeros((k, d));
    match init {
        InitStrategy::KMeansPlusPlus => {
            let first = rng.random_range(0..n);
            means.row_mut(0).assign(&phi.row(first));
            let mut dist2: Vec<f64> = (0..n)
                .map(|i| {
                    let diff = &phi.row(i) - &means.row(0);
                    diff.dot(&diff)
                })
                .collect();
            for c in 1..k {
                let total: f64 = dist2.iter().sum();
                let pick = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut chosen = n - 1;
                    for (i, w) in dist2.iter().enumerate() {
                        target -= w;
                        if target <= 0.0 {
                            chosen = i;
                            break;
                        }
                    }
                    chosen
                } else {
                    rng.random_range(0..n)
                };
                means.row_mut(c).assign(&phi.row(pick));
                for i in 0..n {
                    let diff = &phi.row(i) - &means.row(c);
                    let d2 = diff.dot(&diff);
                    if d2 < dist2[i] {
                        dist2[i] = d2;
                    }
                }
            }
        }
        InitStrategy::RandomNodes => {
            let mut picked = Vec::with_capacity(k);
            while picked.len() < k {
                let i = rng.random_range(0..n);
                if !picked.contains(&i) {
                    picked.push(i);
                }
            }
            for (c, &i) in picked.iter().enumerate() {
                means.row_mut(c).assign(&phi.row(i));
            }
        }
    }

    let variance = mean_dimension_variance(phi).max(floor);
    let covariances: Vec<Array2<f64>> = (0..k)
        .map(|_| {
            let mut cov = Array2::<f64>::zeros((d, d));
            for a in 0..d {
                cov[(a, a)] = variance;
            }
            cov
        })
        .collect();
    let weights = vec![1.0 / k as f64; k];
    let state = GmmState::new(weights, means, covariances, mode, floor)?;
    fit_warm(phi, state, t2)
}

/// Run `t2` EM alternations from an existing state (warm start across outer
/// training iterations), then one final E-step so the returned
/// responsibilities match the returned parameters.
pub fn fit_warm(
    phi: ArrayView2<f64>,
    mut state: GmmState,
    t2: usize,
) -> Result<FitResult, GmmError> {
    let mut reseeded = 0;
    for _ in 0..t2 {
        let resp = e_step(phi, &state);
        let (next, empties) = m_step(phi, &resp, state.mode, state.floor)?;
        reseeded += empties.len();
        state = next;
    }
    let resp = e_step(phi, &state);
    Ok(FitResult { state, resp, reseeded })
}

/// Top-N community ids per node by responsibility, ties broken toward the
/// lower community id.
pub fn predict_communities(resp: &Responsibilities, top_n: usize) -> CommunityAssignment {
    let k = resp.gamma.ncols();
    assert!(top_n >= 1 && top_n <= k);
    let per_node = resp
        .gamma
        .outer_iter()
        .map(|row| {
            let mut order: Vec<u32> = (0..k as u32).collect();
            order.sort_by(|&a, &b| {
                row[b as usize]
                    .partial_cmp(&row[a as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order.truncate(top_n);
            order
        })
        .collect();
    CommunityAssignment { per_node }
}
