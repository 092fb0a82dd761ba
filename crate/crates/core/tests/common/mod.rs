//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use hierlab_core::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0` with a dense two-phase
/// tableau simplex and Bland's rule. `b` must be nonnegative.
pub fn lp_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    // columns: x (n), artificials (m), rhs
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            // reduced costs r_j = c_j - c_B · column_j
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let r = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                if r < -1e-11 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return };
            let mut leave = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                if t[i][j] > 1e-12 {
                    let ratio = t[i][width - 1] / t[i][j];
                    if ratio < best - 1e-12
                        || (ratio < best + 1e-12
                            && leave.is_some_and(|l: usize| basis[i] < basis[l]))
                    {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let i = leave.expect("phase problems here are bounded");
            let p = t[i][j];
            for v in t[i].iter_mut() {
                *v /= p;
            }
            for r in 0..m {
                if r != i && t[r][j] != 0.0 {
                    let f = t[r][j];
                    for k in 0..width {
                        t[r][k] -= f * t[i][k];
                    }
                }
            }
            basis[i] = j;
        }
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].fill(1.0);
    phase(&mut t, &mut basis, &phase1, n + m);
    // drive remaining (zero-valued) artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !basis.contains(&j) && t[i][j].abs() > 1e-9) {
                let p = t[i][j];
                for v in t[i].iter_mut() {
                    *v /= p;
                }
                for r in 0..m {
                    if r != i && t[r][j] != 0.0 {
                        let f = t[r][j];
                        for k in 0..width {
                            t[r][k] -= f * t[i][k];
                        }
                    }
                }
                basis[i] = j;
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat(1e6).take(m));
    phase(&mut t, &mut basis, &phase2, n);
    (0..m)
        .filter(|&i| basis[i] < n)
        .map(|i| c[basis[i]] * t[i][width - 1])
        .sum()
}

/// Optimal transport cost between `supply` and `demand` as a plain LP.
pub fn transport_lp(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].fill(1.0);
        a.push(row);
        b.push(supply[i]);
    }
    // the last demand row is implied by the others
    for j in 0..n - 1 {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(demand[j]);
    }
    lp_min(&a, &b, cost)
}

/// All-pairs hop distances by Floyd-Warshall; `f64::INFINITY` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for &(u, v) in g.edges() {
        d[u][v] = 1.0;
        d[v][u] = 1.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Betweenness by explicit enumeration of every shortest path between every
/// unordered pair.
pub fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let d = floyd_warshall(g);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if !d[s][t].is_finite() {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let last = *p.last().unwrap();
                if last == t {
                    paths.push(p);
                    continue;
                }
                for &w in g.neighbors(last) {
                    if d[s][w] == d[s][last] + 1.0 && d[s][w] + d[w][t] == d[s][t] {
                        let mut q = p.clone();
                        q.push(w);
                        stack.push(q);
                    }
                }
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / total;
                }
            }
        }
    }
    bc
}

/// Erdős-Rényi style random graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Vanilla Ollivier-Ricci curvature `1 - W(m_u, m_v)` with mass `α` on the
/// node and `(1 - α)/deg` on each neighbor, ground metric from Floyd-Warshall
/// and transport solved by [`transport_lp`].
pub fn vanilla_ricci(g: &Graph, u: usize, v: usize, alpha: f64) -> f64 {
    let d = floyd_warshall(g);
    let support = |x: usize| -> Vec<(usize, f64)> {
        let nb = g.neighbors(x);
        let mut s = vec![(x, alpha)];
        s.extend(nb.iter().map(|&w| (w, (1.0 - alpha) / nb.len() as f64)));
        s
    };
    let (su, sv) = (support(u), support(v));
    let cost: Vec<f64> = su
        .iter()
        .flat_map(|&(a, _)| sv.iter().map(|&(b, _)| d[a][b]).collect::<Vec<_>>())
        .collect();
    let supply: Vec<f64> = su.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = sv.iter().map(|s| s.1).collect();
    1.0 - transport_lp(&supply, &demand, &cost) / d[u][v]
}

/// Dense row-major matrix product.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Logits of a two-layer mean-aggregating GCN,
/// `Â·ReLU(Â·X·W1 + b1)·W2 + b2` with `Â = (D + I)^{-1}(A + I)`,
/// built from dense matrices. `tau` overrides `Â` when given.
pub fn dense_gcn_logits(
    g: &Graph,
    x: &[Vec<f64>],
    w1: &[Vec<f64>],
    b1: &[f64],
    w2: &[Vec<f64>],
    b2: &[f64],
    tau: Option<&[Vec<f64>]>,
) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let a_hat: Vec<Vec<f64>> = match tau {
        Some(t) => t.to_vec(),
        None => (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                let w = 1.0 / (g.neighbors(i).len() + 1) as f64;
                row[i] = w;
                for &j in g.neighbors(i) {
                    row[j] = w;
                }
                row
            })
            .collect(),
    };
    let mut h = matmul(&matmul(&a_hat, x), w1);
    for row in &mut h {
        for (v, b) in row.iter_mut().zip(b1) {
            *v = (*v + b).max(0.0);
        }
    }
    let mut out = matmul(&matmul(&a_hat, &h), w2);
    for row in &mut out {
        for (v, b) in row.iter_mut().zip(b2) {
            *v += b;
        }
    }
    out
}

/// Largest entrywise relative error between the analytic gradient and central
/// differences with step `eps`, with magnitudes below 1e-6 treated as 1e-6.
/// Returns the error and the name of the worst tensor.
pub fn model_gradient_error(
    model: &hierlab_core::model::Model,
    params: &hierlab_core::model::ModelParams,
    eps: f64,
) -> (f64, &'static str) {
    let (_, grad) = model.loss_and_grad(params);
    let analytic: Vec<(&'static str, Vec<f64>)> = grad
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.to_vec()))
        .collect();
    let mut worst = (0.0, "");
    let mut probe = params.clone();
    for (k, (name, g)) in analytic.iter().enumerate() {
        for (i, &gi) in g.iter().enumerate() {
            let orig = probe.tensors()[k].1[i];
            probe.tensors_mut()[k].1[i] = orig + eps;
            let up = model.loss(&model.forward(&probe));
            probe.tensors_mut()[k].1[i] = orig - eps;
            let down = model.loss(&model.forward(&probe));
            probe.tensors_mut()[k].1[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            let err = (fd - gi).abs() / fd.abs().max(gi.abs()).max(1e-6);
            if err > worst.0 {
                worst = (err, *name);
            }
        }
    }
    worst
}
