//! Exact discrete optimal transport via the transportation simplex.
//!
//! The basis is a spanning tree over row and column nodes. Entering cells are
//! chosen by most negative reduced cost; after a run of degenerate pivots the
//! rule switches to lowest-index entering to break potential cycling.

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

/// Minimal-cost transport plan between `supply` (rows) and `demand` (columns).
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    /// Basic cells `(row, col, flow)`; degenerate cells carry zero flow.
    pub flows: Vec<(usize, usize, f64)>,
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x ≥ 0`. `cost` is row-major `supply.len() × demand.len()` and
/// must be finite. Total supply and demand must agree within 1e-9.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "transport needs nonempty supports".into(),
        ));
    }
    if cost.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: cost.len(),
        });
    }
    if supply
        .iter()
        .chain(demand)
        .any(|&x| !(x >= 0.0) || !x.is_finite())
    {
        return Err(Error::InvalidArgument(
            "masses must be finite and nonnegative".into(),
        ));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!(
            "unbalanced transport: supply {ts} vs demand {td}"
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "transport costs must be finite".into(),
        ));
    }
    let mut solver = Simplex::northwest(supply, demand, cost);
    solver.optimize()?;
    Ok(solver.plan())
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    /// basic cells (row, col, flow)
    cells: Vec<(usize, usize, f64)>,
    /// cell ids incident to each tree node; rows are 0..m, columns m..m+n
    incident: Vec<Vec<usize>>,
    in_basis: Vec<bool>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn northwest(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]);
            cells.push((i, j, x));
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        // rounding residue lands on the last cell
        let last = cells.len() - 1;
        cells[last].2 += s[m - 1].max(0.0);

        let mut incident = vec![Vec::new(); m + n];
        let mut in_basis = vec![false; m * n];
        for (k, &(i, j, _)) in cells.iter().enumerate() {
            incident[i].push(k);
            incident[m + j].push(k);
            in_basis[i * n + j] = true;
        }
        Simplex {
            m,
            n,
            cost,
            cells,
            incident,
            in_basis,
            u: vec![0.0; m],
            v: vec![0.0; n],
        }
    }

    fn compute_potentials(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut done = vec![false; m + n];
        let mut stack = vec![0usize];
        done[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &k in &self.incident[node] {
                let (i, j, _) = self.cells[k];
                let c = self.cost[i * n + j];
                if node < m {
                    if !done[m + j] {
                        self.v[j] = c - self.u[i];
                        done[m + j] = true;
                        stack.push(m + j);
                    }
                } else if !done[i] {
                    self.u[i] = c - self.v[j];
                    done[i] = true;
                    stack.push(i);
                }
            }
        }
    }

    /// Tree path from column `j` to row `i` as a list of cell ids.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut via = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let start = self.m + j;
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &k in &self.incident[node] {
                let (ci, cj, _) = self.cells[k];
                let other = if node < self.m { self.m + cj } else { ci };
                if !seen[other] {
                    seen[other] = true;
                    via[other] = k;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = i;
        while node != start {
            let k = via[node];
            path.push(k);
            let (ci, cj, _) = self.cells[k];
            node = if node < self.m { self.m + cj } else { ci };
        }
        path.reverse();
        path
    }

    fn optimize(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let max_pivots = 200 * (m + n) * (m + n) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..max_pivots {
            self.compute_potentials();
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -COST_TOL;
            'scan: for i in 0..m {
                for j in 0..n {
                    if self.in_basis[i * n + j] {
                        continue;
                    }
                    let r = self.cost[i * n + j] - self.u[i] - self.v[j];
                    if r < best {
                        entering = Some((i, j));
                        if bland {
                            break 'scan;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                return Ok(());
            };

            // cycle: entering (+), then path cells alternate -, +, ...
            let path = self.tree_path(ei, ej);
            let mut theta = f64::INFINITY;
            let mut leaving = usize::MAX;
            for &k in path.iter().step_by(2) {
                let f = self.cells[k].2;
                if f < theta || (f == theta && bland && k < leaving) {
                    theta = f;
                    leaving = k;
                }
            }
            for (pos, &k) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.cells[k].2 -= theta;
                } else {
                    self.cells[k].2 += theta;
                }
            }
            self.cells[leaving].2 = 0.0;
            degenerate = if theta <= 0.0 { degenerate + 1 } else { 0 };

            let (li, lj, _) = self.cells[leaving];
            self.in_basis[li * n + lj] = false;
            self.incident[li].retain(|&k| k != leaving);
            self.incident[m + lj].retain(|&k| k != leaving);
            self.cells[leaving] = (ei, ej, theta);
            self.in_basis[ei * n + ej] = true;
            self.incident[ei].push(leaving);
            self.incident[m + ej].push(leaving);
        }
        Err(Error::InvalidArgument(format!(
            "transport simplex did not converge on a {m}x{n} problem"
        )))
    }

    fn plan(&self) -> TransportPlan {
        let cost = self
            .cells
            .iter()
            .map(|&(i, j, f)| f * self.cost[i * self.n + j])
            .sum();
        TransportPlan {
            cost,
            flows: self.cells.clone(),
        }
    }
}
