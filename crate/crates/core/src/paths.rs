//! K-path length matrices for multiplex networks.
//!
//! The entry `p^K_ij` is the length of a shortest multiplex path from `v_i`
//! to `v_j` using at most `K` intra-layer edges, where the length is the sum
//! of edge weights plus `gamma` for every change of layer between consecutive
//! intra-layer edges. No switch cost is charged before the first or after the
//! last edge of a path.
//!
//! Two engines are provided:
//!
//! * a per-source dynamic program over `(vertex, last-edge-layer)` states,
//!   valid for every `gamma >= 0` ([`k_path_sequence`], [`k_path_gamma`],
//!   [`path_length_matrix`]);
//! * the plain min-plus power of `P^1`, the `gamma = 0` special case
//!   ([`k_path_minplus_power`]).
//!
//! Alongside each matrix the engines track, per vertex pair, the set of
//! layers of the first and last intra-layer edges over *all* optimal paths
//! (the start and arrival layer sets). Since every edge weight is strictly
//! positive, optimal walks never repeat a vertex, so the state space is
//! exhausted after `N - 1` steps and the per-pair sets are exact.
//!
//! The per-source state is `O(N * L)` and sources are independent, so the
//! computation is row-parallel; rows are written disjointly and the result is
//! bitwise identical regardless of the parallelism degree.

use crate::model::{LayerSet, MultiplexNetwork, PathTensor, SwitchCost};
use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("min-plus power requires gamma = 0, got {0}")]
    NonzeroGamma(f64),
    #[error("operands have mismatched dimensions")]
    DimensionMismatch,
}

/// Shortest multiplex path lengths under an edge budget, together with the
/// per-pair start and arrival layer sets.
#[derive(Debug, Clone, PartialEq)]
pub struct KPathResult {
    k: usize,
    gamma: SwitchCost,
    n: usize,
    l: usize,
    p: Array2<f64>,
    arrival: Vec<u64>,
    start: Vec<u64>,
    fixed_point: bool,
}

impl KPathResult {
    /// The edge budget `K` this matrix was computed for.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> SwitchCost {
        self.gamma
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_layers(&self) -> usize {
        self.l
    }

    /// `p^K_ij`; zero diagonal, `+inf` for unreachable pairs.
    #[inline]
    pub fn length(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.p
    }

    /// Layers of the last intra-layer edges over all optimal paths `i -> j`;
    /// empty when `p^K_ij` is `0` or `+inf`.
    #[inline]
    pub fn arrival_set(&self, i: usize, j: usize) -> LayerSet {
        LayerSet::from_raw(self.arrival[i * self.n + j])
    }

    /// Layers of the first intra-layer edges over all optimal paths `i -> j`.
    #[inline]
    pub fn start_set(&self, i: usize, j: usize) -> LayerSet {
        LayerSet::from_raw(self.start[i * self.n + j])
    }

    /// True when this result provably equals the unbounded-budget fixed
    /// point, layer sets included.
    pub fn is_fixed_point(&self) -> bool {
        self.fixed_point
    }
}

/// `P^1`: the entrywise minimum of the path tensor over layers, with the
/// argmin layers as both start and arrival sets. Independent of `gamma`.
pub fn one_path_matrix(pt: &PathTensor) -> KPathResult {
    let (n, l) = (pt.n_vertices(), pt.n_layers());
    let mut p = Array2::<f64>::from_elem((n, n), f64::INFINITY);
    let mut sets = vec![0u64; n * n];
    for i in 0..n {
        p[(i, i)] = 0.0;
    }
    for (layer, i, j, w) in pt.edges() {
        let cur = p[(i, j)];
        if w < cur {
            p[(i, j)] = w;
            sets[i * n + j] = 1 << layer;
        } else if w == cur {
            sets[i * n + j] |= 1 << layer;
        }
    }
    KPathResult {
        k: 1,
        gamma: SwitchCost::ZERO,
        n,
        l,
        p,
        arrival: sets.clone(),
        start: sets,
        fixed_point: false,
    }
}

/// One min-plus power step, `P^K = P^{K-1} (min,+) P^1`, with the layer sets
/// composed from the arg-min decomposition. Only valid for `gamma = 0`;
/// rejects anything else.
pub fn k_path_minplus_power(
    prev: &KPathResult,
    p1: &KPathResult,
) -> Result<KPathResult, PathError> {
    if !prev.gamma.is_zero() {
        return Err(PathError::NonzeroGamma(prev.gamma.value()));
    }
    if prev.n != p1.n || prev.l != p1.l {
        return Err(PathError::DimensionMismatch);
    }
    let n = prev.n;
    let mut p = Array2::<f64>::zeros((n, n));
    let mut arrival = vec![0u64; n * n];
    let mut start = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut best = f64::INFINITY;
            for h in 0..n {
                let c = prev.p[(i, h)] + p1.p[(h, j)];
                if c < best {
                    best = c;
                }
            }
            p[(i, j)] = best;
            if !best.is_finite() {
                continue;
            }
            let (mut arr, mut st) = (0u64, 0u64);
            for h in 0..n {
                if prev.p[(i, h)] + p1.p[(h, j)] != best {
                    continue;
                }
                if h == j {
                    // the optimal (K-1)-path already ends at j
                    arr |= prev.arrival[i * n + j];
                    st |= prev.start[i * n + j];
                } else if h == i {
                    // a single optimal edge
                    arr |= p1.arrival[i * n + j];
                    st |= p1.start[i * n + j];
                } else {
                    arr |= p1.arrival[h * n + j];
                    st |= prev.start[i * n + h];
                }
            }
            arrival[i * n + j] = arr;
            start[i * n + j] = st;
        }
    }
    Ok(KPathResult {
        k: prev.k + 1,
        gamma: SwitchCost::ZERO,
        n,
        l: prev.l,
        p,
        arrival,
        start,
        fixed_point: false,
    })
}

/// Flat edge list in a fixed order, shared read-only by all sources.
struct EdgeList {
    edges: Vec<(u32, u32, u16, f64)>,
}

impl EdgeList {
    fn from_tensor(pt: &PathTensor) -> EdgeList {
        EdgeList {
            edges: pt
                .edges()
                .map(|(l, i, j, w)| (i as u32, j as u32, l as u16, w))
                .collect(),
        }
    }
}

/// Row history of a single source: the `(step, row, masks)` snapshots at the
/// steps where the row or its arrival masks changed. Rows are constant
/// between snapshots.
struct SourceHistory {
    changes: Vec<(usize, Vec<f64>, Vec<u64>)>,
    /// True when the full `(vertex, layer)` state reached its closure within
    /// the step cap, which certifies that no later step could change anything.
    state_stable: bool,
}

impl SourceHistory {
    fn at(&self, k: usize) -> (&[f64], &[u64]) {
        // last change with step <= k; k >= 1 and the first change has step 1
        let idx = self
            .changes
            .partition_point(|&(step, _, _)| step <= k)
            .saturating_sub(1);
        let (_, row, masks) = &self.changes[idx];
        (row, masks)
    }

    fn last_change(&self) -> usize {
        self.changes.last().map(|&(s, _, _)| s).unwrap_or(1)
    }
}

/// The layer-state DP for one source vertex. State `d[v][l]` is the length of
/// a cheapest multiplex walk from `source` to `v` whose last intra-layer edge
/// lies in layer `l`, using at most `t` edges after `t` relaxation steps. The
/// source itself has no incumbent layer: its outgoing edges start at cost 0
/// and the first edge never pays a switch.
fn dp_source(
    source: usize,
    n: usize,
    l: usize,
    edges: &EdgeList,
    gamma: f64,
    k_cap: usize,
) -> SourceHistory {
    let mut d = vec![f64::INFINITY; n * l];
    let mut minall = vec![f64::INFINITY; n];
    let mut row = vec![f64::INFINITY; n];
    let mut masks = vec![0u64; n];
    let mut changes: Vec<(usize, Vec<f64>, Vec<u64>)> = Vec::new();
    let mut state_stable = false;

    for step in 1..=k_cap {
        for v in 0..n {
            let mut m = f64::INFINITY;
            for li in 0..l {
                let dv = d[v * l + li];
                if dv < m {
                    m = dv;
                }
            }
            minall[v] = m;
        }
        let mut new_d = d.clone();
        let mut changed = false;
        for &(u, v, le, w) in &edges.edges {
            let (u, v, le) = (u as usize, v as usize, le as usize);
            let base = if u == source {
                0.0
            } else if gamma == 0.0 {
                minall[u]
            } else {
                let same = d[u * l + le];
                let switch = minall[u] + gamma;
                if same < switch {
                    same
                } else {
                    switch
                }
            };
            let cand = base + w;
            let slot = v * l + le;
            if cand < new_d[slot] {
                new_d[slot] = cand;
                changed = true;
            }
        }
        d = new_d;
        if !changed {
            state_stable = true;
            break;
        }
        // extract the row and argmin-layer masks for this step
        let mut row_changed = false;
        for v in 0..n {
            if v == source {
                continue;
            }
            let mut m = f64::INFINITY;
            for li in 0..l {
                let dv = d[v * l + li];
                if dv < m {
                    m = dv;
                }
            }
            let mask = if m.is_finite() {
                let mut b = 0u64;
                for li in 0..l {
                    if d[v * l + li] == m {
                        b |= 1 << li;
                    }
                }
                b
            } else {
                0
            };
            if m != row[v] || mask != masks[v] {
                row[v] = m;
                masks[v] = mask;
                row_changed = true;
            }
        }
        if row_changed || changes.is_empty() {
            let mut snapshot = row.clone();
            snapshot[source] = 0.0;
            changes.push((step, snapshot, masks.clone()));
        }
    }
    if changes.is_empty() {
        // isolated source: the all-infinity row, stable from step 1
        let mut snapshot = vec![f64::INFINITY; n];
        snapshot[source] = 0.0;
        changes.push((1, snapshot, vec![0u64; n]));
    }
    SourceHistory { changes, state_stable }
}

/// The sequence `P^1, P^2, ..., P^k_stop` with layer sets, where `k_stop` is
/// the last step at which any entry or set changed (capped at `k_max`).
pub struct KPathSequence {
    entries: Vec<KPathResult>,
    fixed_point_k: usize,
    complete: bool,
}

impl KPathSequence {
    /// Entries for `k = 1..=len`, in order.
    pub fn entries(&self) -> &[KPathResult] {
        &self.entries
    }

    /// The result for budget `k`, clamping to the final entry once the
    /// sequence has stabilized.
    pub fn at(&self, k: usize) -> &KPathResult {
        assert!(k >= 1, "edge budget must be at least 1");
        &self.entries[k.min(self.entries.len()) - 1]
    }

    pub fn final_result(&self) -> &KPathResult {
        self.entries.last().expect("sequence is never empty")
    }

    /// The smallest `k` whose matrix equals the final matrix entrywise.
    pub fn fixed_point_k(&self) -> usize {
        self.fixed_point_k
    }

    /// True when the final entry provably equals the unbounded fixed point.
    pub fn complete(&self) -> bool {
        self.complete
    }
}

/// Runs the layer-state DP from every source (and, on the transposed tensor,
/// from every target, which yields the start-layer sets) and assembles the
/// per-budget results.
pub fn k_path_sequence(
    pt: &PathTensor,
    gamma: SwitchCost,
    k_max: Option<usize>,
) -> KPathSequence {
    let (n, l) = (pt.n_vertices(), pt.n_layers());
    let k_cap = k_max.unwrap_or_else(|| n.saturating_sub(1)).max(1);
    let g = gamma.value();

    let fwd_edges = EdgeList::from_tensor(pt);
    let bwd_edges = EdgeList::from_tensor(&pt.transposed());

    let run = |edges: &EdgeList| -> Vec<SourceHistory> {
        (0..n)
            .into_par_iter()
            .map(|i| dp_source(i, n, l, edges, g, k_cap))
            .collect()
    };
    let fwd = run(&fwd_edges);
    let bwd = run(&bwd_edges);

    let all_stable = fwd.iter().chain(&bwd).all(|h| h.state_stable);
    // With strictly positive weights optimal walks are vertex-simple, so
    // n - 1 steps exhaust every path; stability is then implied.
    let complete = all_stable || k_cap >= n.saturating_sub(1);
    let k_stop = fwd
        .iter()
        .chain(&bwd)
        .map(|h| h.last_change())
        .max()
        .unwrap_or(1)
        .min(k_cap)
        .max(1);

    let mut entries = Vec::with_capacity(k_stop);
    for k in 1..=k_stop {
        let mut p = Array2::<f64>::zeros((n, n));
        let mut arrival = vec![0u64; n * n];
        let mut start = vec![0u64; n * n];
        for i in 0..n {
            let (row, masks) = fwd[i].at(k);
            p.row_mut(i)
                .iter_mut()
                .zip(row)
                .for_each(|(dst, &v)| *dst = v);
            arrival[i * n..(i + 1) * n].copy_from_slice(masks);
        }
        for j in 0..n {
            let (_, masks) = bwd[j].at(k);
            for i in 0..n {
                start[i * n + j] = masks[i];
            }
        }
        entries.push(KPathResult {
            k,
            gamma,
            n,
            l,
            p,
            arrival,
            start,
            fixed_point: false,
        });
    }

    let final_p = entries.last().expect("at least one entry").p.clone();
    let fixed_point_k = entries
        .iter()
        .find(|e| e.p == final_p)
        .map(|e| e.k)
        .unwrap_or(k_stop);
    if complete {
        let last = entries.last().unwrap();
        let (fa, fs) = (last.arrival.clone(), last.start.clone());
        for e in entries.iter_mut() {
            e.fixed_point = e.p == final_p && e.arrival == fa && e.start == fs;
        }
    }
    KPathSequence { entries, fixed_point_k, complete }
}

/// `P^k` for one budget `k >= 1` under switching cost `gamma`.
///
/// `pt` must be the path tensor of `net`. Unreachable pairs get `+inf` and
/// empty layer sets.
pub fn k_path_gamma(
    net: &MultiplexNetwork,
    pt: &PathTensor,
    gamma: SwitchCost,
    k: usize,
) -> KPathResult {
    assert!(k >= 1, "edge budget must be at least 1");
    debug_assert_eq!(net.n_vertices(), pt.n_vertices());
    debug_assert_eq!(net.n_layers(), pt.n_layers());
    let seq = k_path_sequence(pt, gamma, Some(k));
    let mut res = seq.at(k).clone();
    // the caller asked for budget k even if the sequence stabilized earlier
    res.k = k.min(res.n.saturating_sub(1)).max(res.k);
    res
}

/// Iterates `P^1, P^2, ...` until matrix and layer sets repeat (or `k_max`,
/// default `N - 1`), returning the final result and the smallest `k` whose
/// matrix equals it.
pub fn path_length_matrix(
    net: &MultiplexNetwork,
    pt: &PathTensor,
    gamma: SwitchCost,
    k_max: Option<usize>,
) -> (KPathResult, usize) {
    debug_assert_eq!(net.n_vertices(), pt.n_vertices());
    let seq = k_path_sequence(pt, gamma, k_max);
    (seq.final_result().clone(), seq.fixed_point_k())
}

/// Diameter of a path length matrix: the maximum finite off-diagonal entry,
/// every pair attaining it (1-based), and whether any pair is unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct Diameter {
    /// `None` when no finite off-diagonal entry exists.
    pub value: Option<f64>,
    /// All `(i, j)` with `p_ij` equal to the maximum, 1-based, lexicographic.
    pub pairs: Vec<(usize, usize)>,
    pub disconnected: bool,
}

pub fn diameter(res: &KPathResult) -> Diameter {
    let n = res.n_vertices();
    let mut best = f64::NEG_INFINITY;
    let mut disconnected = false;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = res.length(i, j);
            if v.is_finite() {
                if v > best {
                    best = v;
                }
            } else {
                disconnected = true;
            }
        }
    }
    if best == f64::NEG_INFINITY {
        return Diameter { value: None, pairs: Vec::new(), disconnected };
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && res.length(i, j) == best {
                pairs.push((i + 1, j + 1));
            }
        }
    }
    Diameter { value: Some(best), pairs, disconnected }
}
