//! Primal network simplex on the bipartite transportation graph.
//!
//! Sources are nodes `0..m`, sinks are nodes `m..m+n`. A basis is a spanning
//! tree with exactly `m + n - 1` cells; tree cells may carry zero flow
//! (degenerate). Node potentials satisfy `pi[i] + pi[m + j] = c(i, j)` on every
//! tree cell, so `(pi[..m], pi[m..])` is a dual pair `(h, k)` at termination.
//!
//! Entering cells are priced by block search (most negative reduced cost in
//! the first block that has one, ties toward the smallest `(i, j)`). The
//! leaving cell follows the strongly feasible tree rule, so degenerate pivots
//! cannot cycle.

use crate::error::{OtError, Result};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct TreeEdge<S> {
    i: usize,
    j: usize,
    flow: S,
}

/// Optimal basis of a transportation problem.
#[derive(Debug, Clone)]
pub(crate) struct Basis<S> {
    /// `(i, j, flow)` for every tree cell, degenerate ones included.
    pub cells: Vec<(usize, usize, S)>,
    pub h: Vec<S>,
    pub k: Vec<S>,
    pub iterations: usize,
}

struct Tree<S> {
    m: usize,
    parent: Vec<usize>,
    pedge: Vec<usize>,
    depth: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
    edges: Vec<TreeEdge<S>>,
    pi: Vec<S>,
    stack: Vec<usize>,
}

impl<S: Scalar> Tree<S> {
    fn edge_cost<C: Fn(usize, usize) -> S>(&self, e: usize, cost: &C) -> S {
        let ed = self.edges[e];
        cost(ed.i, ed.j)
    }

    /// Recomputes parent, depth and potentials for the subtree hanging below
    /// `start` (whose own parent fields are already set).
    fn relabel_from<C: Fn(usize, usize) -> S>(&mut self, start: usize, cost: &C) {
        self.stack.clear();
        self.stack.push(start);
        while let Some(v) = self.stack.pop() {
            let p = self.parent[v];
            for idx in 0..self.adj[v].len() {
                let (w, e) = self.adj[v][idx];
                if w == p {
                    continue;
                }
                self.parent[w] = v;
                self.pedge[w] = e;
                self.depth[w] = self.depth[v] + 1;
                let c = self.edge_cost(e, cost);
                self.pi[w] = c - self.pi[v];
                self.stack.push(w);
            }
        }
    }

    fn remove_adj(&mut self, v: usize, e: usize) {
        let pos = self.adj[v].iter().position(|&(_, ee)| ee == e).expect("edge present");
        self.adj[v].swap_remove(pos);
    }

    fn sink(&self, j: usize) -> usize {
        self.m + j
    }
}

/// Builds the north-west corner basis rooted at source 0. Weights must be
/// positive. When a row and a column are exhausted together the column
/// advances first, so every zero-flow cell attaches a new sink below its
/// source and the tree is strongly feasible.
fn north_west_corner<S: Scalar>(supply: &[S], demand: &[S]) -> Vec<TreeEdge<S>> {
    let (m, n) = (supply.len(), demand.len());
    let mut cells = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    let mut ra = supply[0];
    let mut rb = demand[0];
    loop {
        if i == m - 1 && j == n - 1 {
            cells.push(TreeEdge { i, j, flow: ra.max(S::zero()) });
            break;
        }
        if j == n - 1 || (i < m - 1 && ra < rb) {
            let f = if j == n - 1 { ra } else { ra.min(rb) }.max(S::zero());
            cells.push(TreeEdge { i, j, flow: f });
            rb -= f;
            i += 1;
            ra = supply[i];
        } else {
            let f = if i == m - 1 { rb } else { rb.min(ra) }.max(S::zero());
            cells.push(TreeEdge { i, j, flow: f });
            ra -= f;
            j += 1;
            rb = demand[j];
        }
    }
    debug_assert_eq!(cells.len(), m + n - 1);
    cells
}

/// Solves `min sum c_ij x_ij` subject to row sums `supply` and column sums
/// `demand`. Both vectors must be nonnegative with (nearly) equal totals.
///
/// Atoms of zero weight are left out of the flow problem; their potentials
/// are the largest values that keep the dual constraints satisfied.
pub(crate) fn solve_transportation<S: Scalar, C: Fn(usize, usize) -> S>(
    supply: &[S],
    demand: &[S],
    cost: &C,
    cost_scale: S,
) -> Result<Basis<S>> {
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > S::zero()).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > S::zero()).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(OtError::ZeroTotalMass);
    }
    if rows.len() == supply.len() && cols.len() == demand.len() {
        return solve_positive(supply, demand, cost, cost_scale);
    }
    let sub_supply: Vec<S> = rows.iter().map(|&i| supply[i]).collect();
    let sub_demand: Vec<S> = cols.iter().map(|&j| demand[j]).collect();
    let sub_cost = |a: usize, b: usize| cost(rows[a], cols[b]);
    let sub = solve_positive(&sub_supply, &sub_demand, &sub_cost, cost_scale)?;

    let mut h = vec![S::nan(); supply.len()];
    let mut k = vec![S::nan(); demand.len()];
    for (a, &i) in rows.iter().enumerate() {
        h[i] = sub.h[a];
    }
    for (b, &j) in cols.iter().enumerate() {
        k[j] = sub.k[b];
    }
    for j in 0..demand.len() {
        if k[j].is_nan() {
            k[j] = rows.iter().map(|&i| cost(i, j) - h[i]).fold(S::infinity(), S::min);
        }
    }
    for i in 0..supply.len() {
        if h[i].is_nan() {
            h[i] = (0..demand.len()).map(|j| cost(i, j) - k[j]).fold(S::infinity(), S::min);
        }
    }
    Ok(Basis {
        cells: sub.cells.iter().map(|&(a, b, f)| (rows[a], cols[b], f)).collect(),
        h,
        k,
        iterations: sub.iterations,
    })
}

fn solve_positive<S: Scalar, C: Fn(usize, usize) -> S>(
    supply: &[S],
    demand: &[S],
    cost: &C,
    cost_scale: S,
) -> Result<Basis<S>> {
    let (m, n) = (supply.len(), demand.len());
    let nodes = m + n;
    let init = north_west_corner(supply, demand);

    let mut tree = Tree {
        m,
        parent: vec![NONE; nodes],
        pedge: vec![NONE; nodes],
        depth: vec![0; nodes],
        adj: vec![Vec::new(); nodes],
        edges: init,
        pi: vec![S::zero(); nodes],
        stack: Vec::new(),
    };
    for (e, ed) in tree.edges.iter().enumerate() {
        tree.adj[ed.i].push((m + ed.j, e));
        tree.adj[m + ed.j].push((ed.i, e));
    }
    tree.relabel_from(0, cost);

    let total_arcs = m * n;
    let block = ((total_arcs as f64).sqrt().ceil() as usize).clamp(16, total_arcs.max(16));
    let rc_tol = S::tol(1e-12) * cost_scale.max(S::one());
    let max_iterations = 200 * (nodes as u64) * (nodes as u64) + 100_000;

    let mut next_arc = 0usize;
    let mut iterations = 0usize;
    let mut path_u: Vec<usize> = Vec::new();
    let mut path_v: Vec<usize> = Vec::new();

    let reduced = |tree: &Tree<S>, i: usize, j: usize| cost(i, j) - tree.pi[i] - tree.pi[m + j];

    loop {
        // Pricing: best candidate of the first block that has one.
        let mut entering: Option<(usize, usize, S)> = None;
        let mut scanned = 0usize;
        let mut in_block = 0usize;
        let mut a = next_arc;
        while scanned < total_arcs {
            let (i, j) = (a / n, a % n);
            let r = reduced(&tree, i, j);
            if r < -rc_tol {
                let better = match entering {
                    None => true,
                    Some((bi, bj, br)) => r < br || (r == br && (i, j) < (bi, bj)),
                };
                if better {
                    entering = Some((i, j, r));
                }
            }
            scanned += 1;
            in_block += 1;
            a += 1;
            if a == total_arcs {
                a = 0;
            }
            if in_block >= block {
                if entering.is_some() {
                    break;
                }
                in_block = 0;
            }
        }
        next_arc = a;
        let Some((ei, ej, _)) = entering else { break };

        iterations += 1;
        if iterations as u64 > max_iterations {
            return Err(OtError::NonConvergence {
                iterations,
                residual: f64::NAN,
            });
        }

        // Cycle: entering cell, then tree path from sink ej back to source ei.
        let (mut u, mut v) = (tree.sink(ej), ei);
        path_u.clear();
        path_v.clear();
        while u != v {
            if tree.depth[u] >= tree.depth[v] {
                path_u.push(tree.pedge[u]);
                u = tree.parent[u];
            } else {
                path_v.push(tree.pedge[v]);
                v = tree.parent[v];
            }
        }
        // Along sink ej -> apex -> source ei, even positions lose flow.
        let path_len = path_u.len() + path_v.len();
        let edge_at = |p: usize| -> usize {
            if p < path_u.len() {
                path_u[p]
            } else {
                path_v[path_len - 1 - p]
            }
        };
        // Leaving cell: the last blocking cell met when the cycle is walked
        // from the apex down to ei, across the entering cell, and back up from
        // ej. This keeps the tree strongly feasible, which rules out cycling.
        let mut theta = S::infinity();
        let mut leave_pos = NONE;
        for p in (path_u.len()..path_len).chain(0..path_u.len()) {
            if p % 2 != 0 {
                continue;
            }
            let flow = tree.edges[edge_at(p)].flow;
            if flow <= theta {
                theta = flow;
                leave_pos = p;
            }
        }
        debug_assert!(leave_pos != NONE);
        if theta > S::zero() {
            for p in 0..path_len {
                let e = edge_at(p);
                if p % 2 == 0 {
                    tree.edges[e].flow -= theta;
                } else {
                    tree.edges[e].flow += theta;
                }
            }
        }
        let leave = edge_at(leave_pos);
        let leaving_on_sink_side = leave_pos < path_u.len();

        // Tree surgery: drop `leave`, insert the entering cell in its slot.
        let le = tree.edges[leave];
        tree.remove_adj(le.i, leave);
        tree.remove_adj(m + le.j, leave);
        tree.edges[leave] = TreeEdge {
            i: ei,
            j: ej,
            flow: theta,
        };
        tree.adj[ei].push((m + ej, leave));
        tree.adj[m + ej].push((ei, leave));
        // The endpoint of the entering cell that was cut off from the root.
        let (inner, outer) = if leaving_on_sink_side {
            (m + ej, ei)
        } else {
            (ei, m + ej)
        };
        tree.parent[inner] = outer;
        tree.pedge[inner] = leave;
        tree.depth[inner] = tree.depth[outer] + 1;
        tree.pi[inner] = cost(ei, ej) - tree.pi[outer];
        tree.relabel_from(inner, cost);
    }

    let cells = tree.edges.iter().map(|e| (e.i, e.j, e.flow)).collect();
    let h = tree.pi[..m].to_vec();
    let k = tree.pi[m..].to_vec();
    Ok(Basis {
        cells,
        h,
        k,
        iterations,
    })
}
