//! Embedding tables and the three SGD kernels.
//!
//! Each node owns two vectors: φ (its embedding) and φ′ (its context role in
//! skip-gram scoring). Three update kernels descend on the three loss terms:
//! edge similarity, sampled-softmax context similarity, and the pull towards
//! community centers. Every kernel consumes the pre-update values of all rows
//! it touches, so each step is exactly one gradient step of its loss term.

use ndarray::{Array1, Array2};

use crate::gmm::{GmmState, Responsibilities};
use crate::graph::{Graph, NodeId};

/// Node embeddings φ and context embeddings φ′, both |V|×d.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTables {
    pub phi: Array2<f64>,
    pub phi_ctx: Array2<f64>,
}

impl EmbeddingTables {
    pub fn node_count(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn all_finite(&self) -> bool {
        self.phi.iter().all(|v| v.is_finite()) && self.phi_ctx.iter().all(|v| v.is_finite())
    }
}

/// φ rows uniform in [−0.5/d, 0.5/d], φ′ all zero (word2vec-style init).
pub fn init_embeddings<R: rand::Rng>(n: usize, d: usize, rng: &mut R) -> EmbeddingTables {
    assert!(n >= 1 && d >= 1);
    let half = 0.5 / d as f64;
    let phi = Array2::from_shape_fn((n, d), |_| rng.random_range(-half..half));
    EmbeddingTables { phi, phi_ctx: Array2::zeros((n, d)) }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// log σ(x) = −softplus(−x), stable for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// One descent step on the edge term for edge (i, j): both endpoints move
/// towards each other by lr·σ(−φ_j·φ_i), evaluated at the pre-update rows.
pub fn sgd_first_order(tables: &mut EmbeddingTables, i: NodeId, j: NodeId, lr: f64) {
    let dot = tables.phi.row(i as usize).dot(&tables.phi.row(j as usize));
    let g = lr * sigmoid(-dot);
    let d = tables.dim();
    if i == j {
        return; // self-loops never occur in a valid graph
    }
    for c in 0..d {
        let a = tables.phi[(i as usize, c)];
        let b = tables.phi[(j as usize, c)];
        tables.phi[(i as usize, c)] = a + g * b;
        tables.phi[(j as usize, c)] = b + g * a;
    }
}

/// One descent step on the sampled-softmax context term for the pair
/// (center, context) with the given negative draws. Touches φ_center,
/// φ′_context and each φ′_negative; all scalars come from the pre-update
/// state, so a duplicated negative accumulates both its contributions.
pub fn sgd_second_order(
    tables: &mut EmbeddingTables,
    center: NodeId,
    context: NodeId,
    negatives: &[NodeId],
    alpha: f64,
    lr: f64,
) {
    let mut delta_center = vec![0.0; tables.dim()];
    sgd_second_order_with(tables, center, context, negatives, alpha, lr, &mut delta_center);
}

/// Allocation-free variant for the hot loop; `scratch` holds the center
/// delta (length d) and `scalars` the per-row gains (length 1 + m).
pub(crate) fn sgd_second_order_with(
    tables: &mut EmbeddingTables,
    center: NodeId,
    context: NodeId,
    negatives: &[NodeId],
    alpha: f64,
    lr: f64,
    scratch: &mut [f64],
) {
    let d = tables.dim();
    debug_assert_eq!(scratch.len(), d);
    let i = center as usize;
    let step = lr * alpha;

    // First pass: every dot product against the pre-update rows, so a
    // negative drawn twice contributes twice at the same scalar.
    let g_pos = sigmoid(-tables.phi.row(i).dot(&tables.phi_ctx.row(context as usize)));
    let mut g_negs = [0.0f64; 16];
    let mut g_negs_spill;
    let g_negs: &mut [f64] = if negatives.len() <= 16 {
        &mut g_negs[..negatives.len()]
    } else {
        g_negs_spill = vec![0.0; negatives.len()];
        &mut g_negs_spill
    };
    for (g, &neg) in g_negs.iter_mut().zip(negatives) {
        *g = sigmoid(tables.phi.row(i).dot(&tables.phi_ctx.row(neg as usize)));
    }

    // Second pass: apply. The center delta uses the pre-update context rows,
    // the context rows use the pre-update center row (applied last).
    scratch.fill(0.0);
    for c in 0..d {
        scratch[c] += g_pos * tables.phi_ctx[(context as usize, c)];
    }
    for (g, &neg) in g_negs.iter().zip(negatives) {
        for c in 0..d {
            scratch[c] -= g * tables.phi_ctx[(neg as usize, c)];
        }
    }
    for c in 0..d {
        tables.phi_ctx[(context as usize, c)] += step * g_pos * tables.phi[(i, c)];
    }
    for (g, &neg) in g_negs.iter().zip(negatives) {
        for c in 0..d {
            tables.phi_ctx[(neg as usize, c)] -= step * g * tables.phi[(i, c)];
        }
    }
    for c in 0..d {
        tables.phi[(i, c)] += step * scratch[c];
    }
}

/// One descent step on the community term for node i:
/// φ_i ← φ_i − lr·(β/K)·Σ_k γ_ik·Σ_k⁻¹·(φ_i − ψ_k).
pub fn sgd_community(
    tables: &mut EmbeddingTables,
    i: NodeId,
    gmm: &GmmState,
    resp: &Responsibilities,
    beta: f64,
    lr: f64,
) {
    sgd_community_clipped(tables, i, gmm, resp, beta, lr, f64::INFINITY);
}

/// Community step with the gradient clamped elementwise to ±`clip` before
/// the learning rate is applied. A freshly refit mixture can carry near-floor
/// variances whose inverse turns the pull into a catapult; bounding each
/// gradient component keeps the phase stable without touching its direction
/// in the common case.
pub fn sgd_community_clipped(
    tables: &mut EmbeddingTables,
    i: NodeId,
    gmm: &GmmState,
    resp: &Responsibilities,
    beta: f64,
    lr: f64,
    clip: f64,
) {
    if beta == 0.0 {
        return;
    }
    let k = gmm.component_count();
    let d = tables.dim();
    let scale = beta / k as f64;
    let mut delta = Array1::<f64>::zeros(d);
    let row = tables.phi.row(i as usize).to_owned();
    for c in 0..k {
        let w = resp.gamma[(i as usize, c)];
        if w == 0.0 {
            continue;
        }
        let diff = &row - &gmm.mean(c);
        let pull = gmm.inverse(c).dot(&diff);
        delta.scaled_add(w, &pull);
    }
    for c in 0..d {
        let gradient = (scale * delta[c]).clamp(-clip, clip);
        tables.phi[(i as usize, c)] -= lr * gradient;
    }
}

/// Edge loss over the whole graph: −Σ_{(i,j)∈E} log σ(φ_j·φ_i).
pub fn loss_first_order(tables: &EmbeddingTables, graph: &Graph) -> f64 {
    graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let dot = tables.phi.row(i as usize).dot(&tables.phi.row(j as usize));
            -log_sigmoid(dot)
        })
        .sum()
}

/// A (center, context) pair together with the negatives that were drawn for
/// it, for replaying a Monte Carlo loss estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledPair {
    pub center: NodeId,
    pub context: NodeId,
    pub negatives: Vec<NodeId>,
}

/// Monte Carlo context loss over recorded pairs:
/// −α·Σ [log σ(φ′_j·φ_i) + Σ_t log σ(−φ′_l·φ_i)].
pub fn loss_second_order(tables: &EmbeddingTables, pairs: &[SampledPair], alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for pair in pairs {
        let i = pair.center as usize;
        let pos = tables.phi.row(i).dot(&tables.phi_ctx.row(pair.context as usize));
        let mut delta = log_sigmoid(pos);
        for &neg in &pair.negatives {
            let dot = tables.phi.row(i).dot(&tables.phi_ctx.row(neg as usize));
            delta += log_sigmoid(-dot);
        }
        total -= delta;
    }
    alpha * total
}

/// Community surrogate loss: −(β/K)·Σ_i Σ_k w_ik·log N(φ_i | ψ_k, Σ_k),
/// with the per-node membership weights w given by `resp`.
pub fn loss_community_bound(
    tables: &EmbeddingTables,
    gmm: &GmmState,
    resp: &Responsibilities,
    beta: f64,
) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let k = gmm.component_count();
    let mut total = 0.0;
    for i in 0..tables.node_count() {
        for c in 0..k {
            let w = resp.gamma[(i, c)];
            if w > 0.0 {
                total -= w * gmm.log_pdf(c, tables.phi.row(i));
            }
        }
    }
    beta / k as f64 * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{self, CovarianceMode};
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    const LN_2: f64 = std::f64::consts::LN_2;

    fn random_tables(n: usize, d: usize, seed: u64) -> EmbeddingTables {
        let mut rng = substream(seed, "test-tables", 0, 0);
        EmbeddingTables {
            phi: Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0)),
            phi_ctx: Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0)),
        }
    }

    #[test]
    fn init_is_in_range_and_deterministic() {
        let mut rng = substream(1, "init", 0, 0);
        let t = init_embeddings(3, 2, &mut rng);
        assert!(t.phi.iter().all(|v| v.abs() <= 0.25));
        assert!(t.phi_ctx.iter().all(|v| *v == 0.0));

        let mut rng2 = substream(1, "init", 0, 0);
        let t2 = init_embeddings(3, 2, &mut rng2);
        assert_eq!(t, t2);

        let mut rng3 = substream(1, "init", 0, 0);
        let big = init_embeddings(34, 128, &mut rng3);
        assert_eq!(big.phi.shape(), &[34, 128]);
        assert_eq!(big.phi_ctx.shape(), &[34, 128]);
    }

    #[test]
    fn first_order_zero_state_is_fixed() {
        let mut t = EmbeddingTables { phi: Array2::zeros((2, 2)), phi_ctx: Array2::zeros((2, 2)) };
        sgd_first_order(&mut t, 0, 1, 0.5);
        assert!(t.phi.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn first_order_hand_example() {
        let mut t = EmbeddingTables {
            phi: array![[1.0, 0.0], [0.0, 1.0]],
            phi_ctx: Array2::zeros((2, 2)),
        };
        sgd_first_order(&mut t, 0, 1, 1.0);
        assert_abs_diff_eq!(t.phi[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi[(0, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi[(1, 1)], 1.0, epsilon = 1e-15);
    }

    /// Central finite differences of `f` with respect to `table[(row, c)]`.
    fn fd_gradient<F: FnMut(&EmbeddingTables) -> f64>(
        tables: &EmbeddingTables,
        row: usize,
        ctx_table: bool,
        mut f: F,
    ) -> Vec<f64> {
        let h = 1e-5;
        let d = tables.dim();
        let mut grad = vec![0.0; d];
        let mut work = tables.clone();
        for c in 0..d {
            let base = if ctx_table { work.phi_ctx[(row, c)] } else { work.phi[(row, c)] };
            if ctx_table {
                work.phi_ctx[(row, c)] = base + h;
            } else {
                work.phi[(row, c)] = base + h;
            }
            let plus = f(&work);
            if ctx_table {
                work.phi_ctx[(row, c)] = base - h;
            } else {
                work.phi[(row, c)] = base - h;
            }
            let minus = f(&work);
            if ctx_table {
                work.phi_ctx[(row, c)] = base;
            } else {
                work.phi[(row, c)] = base;
            }
            grad[c] = (plus - minus) / (2.0 * h);
        }
        grad
    }

    fn assert_matches_negated_gradient(update: &[f64], fd: &[f64]) {
        let scale = fd.iter().map(|v| v.abs()).fold(1e-12, f64::max);
        for (u, g) in update.iter().zip(fd) {
            assert!(
                (u + g).abs() / scale < 1e-5,
                "update {u} vs gradient {g} (scale {scale})"
            );
        }
    }

    #[test]
    fn first_order_matches_finite_differences() {
        for trial in 0..20 {
            let t = random_tables(4, 8, 100 + trial);
            let (i, j) = (0u32, 2u32);
            let loss = |tb: &EmbeddingTables| {
                -log_sigmoid(tb.phi.row(j as usize).dot(&tb.phi.row(i as usize)))
            };
            let fd_i = fd_gradient(&t, i as usize, false, loss);
            let fd_j = fd_gradient(&t, j as usize, false, loss);
            let mut after = t.clone();
            let lr = 1e-3;
            sgd_first_order(&mut after, i, j, lr);
            let upd_i: Vec<f64> =
                (0..8).map(|c| (after.phi[(i as usize, c)] - t.phi[(i as usize, c)]) / lr).collect();
            let upd_j: Vec<f64> =
                (0..8).map(|c| (after.phi[(j as usize, c)] - t.phi[(j as usize, c)]) / lr).collect();
            assert_matches_negated_gradient(&upd_i, &fd_i);
            assert_matches_negated_gradient(&upd_j, &fd_j);
        }
    }

    #[test]
    fn second_order_zero_state_is_fixed() {
        let mut t = EmbeddingTables { phi: Array2::zeros((3, 2)), phi_ctx: Array2::zeros((3, 2)) };
        sgd_second_order(&mut t, 0, 1, &[2, 2], 1.0, 0.7);
        assert!(t.phi.iter().all(|v| *v == 0.0));
        assert!(t.phi_ctx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn second_order_hand_example_no_negatives() {
        let mut t = EmbeddingTables {
            phi: Array2::zeros((2, 2)),
            phi_ctx: array![[0.0, 0.0], [1.0, 0.0]],
        };
        sgd_second_order(&mut t, 0, 1, &[], 1.0, 1.0);
        assert_abs_diff_eq!(t.phi[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi[(0, 1)], 0.0, epsilon = 1e-15);
        // φ_i was zero, so the context row gains nothing.
        assert_abs_diff_eq!(t.phi_ctx[(1, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn second_order_matches_finite_differences() {
        for trial in 0..20 {
            let t = random_tables(6, 8, 200 + trial);
            let center = 0u32;
            let context = 3u32;
            let negatives = [1u32, 4, 4, 5]; // includes a duplicate
            let alpha = 0.7;
            let loss = |tb: &EmbeddingTables| {
                let i = center as usize;
                let mut delta =
                    log_sigmoid(tb.phi.row(i).dot(&tb.phi_ctx.row(context as usize)));
                for &neg in &negatives {
                    delta += log_sigmoid(-tb.phi.row(i).dot(&tb.phi_ctx.row(neg as usize)));
                }
                -alpha * delta
            };
            let lr = 1e-3;
            let mut after = t.clone();
            sgd_second_order(&mut after, center, context, &negatives, alpha, lr);

            let fd_center = fd_gradient(&t, center as usize, false, loss);
            let upd: Vec<f64> = (0..8)
                .map(|c| (after.phi[(center as usize, c)] - t.phi[(center as usize, c)]) / lr)
                .collect();
            assert_matches_negated_gradient(&upd, &fd_center);

            for row in [context as usize, 1, 4, 5] {
                let fd = fd_gradient(&t, row, true, loss);
                let upd: Vec<f64> =
                    (0..8).map(|c| (after.phi_ctx[(row, c)] - t.phi_ctx[(row, c)]) / lr).collect();
                assert_matches_negated_gradient(&upd, &fd);
            }
        }
    }

    fn small_gmm(k: usize, d: usize, seed: u64) -> GmmState {
        let mut rng = substream(seed, "test-kernel-gmm", 0, 0);
        let means = Array2::from_shape_fn((k, d), |_| rng.random_range(-1.0..1.0));
        let covs: Vec<Array2<f64>> = (0..k)
            .map(|_| {
                let a = Array2::from_shape_fn((d, d), |_| rng.random_range(-0.4..0.4));
                let mut cov = a.dot(&a.t());
                for j in 0..d {
                    cov[(j, j)] += 0.8;
                }
                cov
            })
            .collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let z: f64 = raw.iter().sum();
        GmmState::new(
            raw.into_iter().map(|w| w / z).collect(),
            means,
            covs,
            CovarianceMode::Full,
            1e-9,
        )
        .unwrap()
    }

    fn row_stochastic(n: usize, k: usize, seed: u64) -> Responsibilities {
        let mut rng = substream(seed, "test-resp", 0, 0);
        let mut gamma = Array2::<f64>::zeros((n, k));
        for i in 0..n {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let z: f64 = raw.iter().sum();
            for c in 0..k {
                gamma[(i, c)] = raw[c] / z;
            }
        }
        Responsibilities { gamma }
    }

    #[test]
    fn community_step_vanishes_at_the_mean() {
        let d = 3;
        let gmm = GmmState::new(
            vec![1.0],
            Array2::from_shape_fn((1, d), |(_, j)| j as f64),
            vec![Array2::eye(d)],
            CovarianceMode::Full,
            1e-9,
        )
        .unwrap();
        let mut t = EmbeddingTables {
            phi: Array2::from_shape_fn((1, d), |(_, j)| j as f64),
            phi_ctx: Array2::zeros((1, d)),
        };
        let resp = Responsibilities { gamma: Array2::ones((1, 1)) };
        let before = t.phi.clone();
        sgd_community(&mut t, 0, &gmm, &resp, 1.0, 0.5);
        assert_eq!(t.phi, before);
    }

    #[test]
    fn community_step_identity_covariance_hand_example() {
        let gmm = GmmState::new(
            vec![1.0],
            Array2::zeros((1, 2)),
            vec![Array2::eye(2)],
            CovarianceMode::Full,
            1e-9,
        )
        .unwrap();
        let mut t = EmbeddingTables {
            phi: array![[2.0, 0.0]],
            phi_ctx: Array2::zeros((1, 2)),
        };
        let resp = Responsibilities { gamma: Array2::ones((1, 1)) };
        sgd_community(&mut t, 0, &gmm, &resp, 1.0, 1.0);
        // Moves by −(β/K)·w·Σ⁻¹(φ−ψ) = −(2, 0) with w = 1.
        assert_abs_diff_eq!(t.phi[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn community_step_matches_finite_differences() {
        for trial in 0..20 {
            let t = random_tables(5, 8, 300 + trial);
            let gmm = small_gmm(3, 8, 400 + trial);
            let resp = row_stochastic(5, 3, 500 + trial);
            let beta = 0.8;
            let node = 2u32;
            let loss = |tb: &EmbeddingTables| loss_community_bound(tb, &gmm, &resp, beta);
            let fd = fd_gradient(&t, node as usize, false, loss);
            let lr = 1e-3;
            let mut after = t.clone();
            sgd_community(&mut after, node, &gmm, &resp, beta, lr);
            let upd: Vec<f64> = (0..8)
                .map(|c| (after.phi[(node as usize, c)] - t.phi[(node as usize, c)]) / lr)
                .collect();
            assert_matches_negated_gradient(&upd, &fd);
        }
    }

    #[test]
    fn kernels_touch_only_their_rows() {
        let t = random_tables(8, 4, 600);
        let gmm = small_gmm(2, 4, 601);
        let resp = row_stochastic(8, 2, 602);

        let mut a = t.clone();
        sgd_first_order(&mut a, 1, 5, 0.1);
        for row in 0..8 {
            if row != 1 && row != 5 {
                assert_eq!(a.phi.row(row), t.phi.row(row));
            }
        }
        assert_eq!(a.phi_ctx, t.phi_ctx);

        let mut b = t.clone();
        sgd_second_order(&mut b, 2, 6, &[0, 3], 1.0, 0.1);
        for row in 0..8 {
            if row != 2 {
                assert_eq!(b.phi.row(row), t.phi.row(row));
            }
            if ![6usize, 0, 3].contains(&row) {
                assert_eq!(b.phi_ctx.row(row), t.phi_ctx.row(row));
            }
        }

        let mut c = t.clone();
        sgd_community(&mut c, 4, &gmm, &resp, 1.0, 0.1);
        for row in 0..8 {
            if row != 4 {
                assert_eq!(c.phi.row(row), t.phi.row(row));
            }
        }
        assert_eq!(c.phi_ctx, t.phi_ctx);
    }

    #[test]
    fn community_step_with_zero_beta_is_a_noop() {
        let t = random_tables(4, 3, 700);
        let gmm = small_gmm(2, 3, 701);
        let resp = row_stochastic(4, 2, 702);
        let mut after = t.clone();
        sgd_community(&mut after, 1, &gmm, &resp, 0.0, 0.5);
        assert_eq!(after, t);
    }

    #[test]
    fn first_order_loss_closed_forms() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let zero = EmbeddingTables { phi: Array2::zeros((3, 2)), phi_ctx: Array2::zeros((3, 2)) };
        assert_abs_diff_eq!(loss_first_order(&zero, &g), 2.0 * LN_2, epsilon = 1e-12);

        // Single edge with identical rows of squared norm x → −log σ(x).
        let g1 = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let t = EmbeddingTables {
            phi: array![[0.6, 0.8], [0.6, 0.8]],
            phi_ctx: Array2::zeros((2, 2)),
        };
        assert_abs_diff_eq!(loss_first_order(&t, &g1), -log_sigmoid(1.0), epsilon = 1e-12);

        // 78·log 2 for an all-zero karate-sized edge set.
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/karate.edges"
        ))
        .unwrap();
        let karate = crate::graph::load_edge_list(std::io::Cursor::new(text)).unwrap().graph;
        let zero34 =
            EmbeddingTables { phi: Array2::zeros((34, 2)), phi_ctx: Array2::zeros((34, 2)) };
        assert_abs_diff_eq!(loss_first_order(&zero34, &karate), 78.0 * LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(78.0 * LN_2, 54.06548, epsilon = 1e-4);
    }

    #[test]
    fn first_order_loss_matches_naive_oracle() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]).unwrap();
        let t = random_tables(6, 4, 800);
        let mut naive = 0.0;
        for &(i, j) in g.edges() {
            let mut dot = 0.0;
            for c in 0..4 {
                dot += t.phi[(i as usize, c)] * t.phi[(j as usize, c)];
            }
            naive -= (1.0 / (1.0 + (-dot).exp())).ln();
        }
        assert_abs_diff_eq!(loss_first_order(&t, &g), naive, epsilon = 1e-12);
    }

    #[test]
    fn second_order_loss_closed_forms_and_oracle() {
        let zero = EmbeddingTables { phi: Array2::zeros((4, 2)), phi_ctx: Array2::zeros((4, 2)) };
        let pairs: Vec<SampledPair> = (0..3)
            .map(|i| SampledPair { center: i, context: (i + 1) % 4, negatives: vec![0, 2] })
            .collect();
        // P pairs, m negatives, all-zero tables → α·P·(1+m)·log 2.
        let alpha = 0.9;
        assert_abs_diff_eq!(
            loss_second_order(&zero, &pairs, alpha),
            alpha * 3.0 * 3.0 * LN_2,
            epsilon = 1e-12
        );
        assert_eq!(loss_second_order(&zero, &pairs, 0.0), 0.0);

        let t = random_tables(4, 3, 900);
        let mut naive = 0.0;
        for p in &pairs {
            let dot = |a: usize, b: usize| {
                (0..3).map(|c| t.phi[(a, c)] * t.phi_ctx[(b, c)]).sum::<f64>()
            };
            let mut delta = (1.0 / (1.0 + (-dot(p.center as usize, p.context as usize)).exp())).ln();
            for &n in &p.negatives {
                delta += (1.0 / (1.0 + dot(p.center as usize, n as usize).exp())).ln();
            }
            naive -= alpha * delta;
        }
        assert_abs_diff_eq!(loss_second_order(&t, &pairs, alpha), naive, epsilon = 1e-12);
    }

    #[test]
    fn community_bound_closed_form_at_the_mean() {
        let d = 4usize;
        let n = 6usize;
        let gmm = GmmState::new(
            vec![1.0],
            Array2::zeros((1, d)),
            vec![Array2::eye(d)],
            CovarianceMode::Full,
            1e-9,
        )
        .unwrap();
        let t = EmbeddingTables { phi: Array2::zeros((n, d)), phi_ctx: Array2::zeros((n, d)) };
        let resp = Responsibilities { gamma: Array2::ones((n, 1)) };
        let beta = 1.3;
        let expect = beta / 1.0 * n as f64 * d as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(loss_community_bound(&t, &gmm, &resp, beta), expect, epsilon = 1e-10);
        assert_eq!(loss_community_bound(&t, &gmm, &resp, 0.0), 0.0);
    }

    #[test]
    fn community_bound_dominates_mixture_likelihood() {
        // With the mixture weights as per-node weights, the surrogate upper
        // bounds (β/K)·NLL for any state.
        for trial in 0..20 {
            let t = random_tables(12, 4, 1000 + trial);
            let gmm = small_gmm(3, 4, 1100 + trial);
            let beta = 0.7;
            let pi_rows = Responsibilities {
                gamma: Array2::from_shape_fn((12, 3), |(_, c)| gmm.weights()[c]),
            };
            let bound = loss_community_bound(&t, &gmm, &pi_rows, beta);
            let nll = gmm::negative_log_likelihood(t.phi.view(), &gmm);
            assert!(
                bound + 1e-12 >= beta / 3.0 * nll,
                "bound {bound} vs scaled NLL {}",
                beta / 3.0 * nll
            );
        }
    }
}
