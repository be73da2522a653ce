//! Multiplex data model: layered adjacency, the path tensor, the supra-adjacency
//! matrix and aggregate support structure.
//!
//! A multiplex has `N` vertices shared by `L` layers. Each layer is a weighted
//! directed graph over the common vertex set; a weight of zero means "no edge",
//! any positive weight is a traversal cost. Absent edges are represented as
//! `f64::INFINITY` wherever extended-real arithmetic is needed: infinity
//! propagates through addition and loses to any finite value under `min`, so it
//! is safe inside min-plus computations (no large-finite surrogates).
//!
//! Vertices and layers are indexed from 0 in this API; report types and file
//! formats use 1-based indices.

use ndarray::Array2;
use thiserror::Error;

/// Hard cap on the number of layers, imposed by the bitmask representation of
/// layer sets ([`LayerSet`]).
pub const MAX_LAYERS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network must have at least one vertex and one layer")]
    Empty,
    #[error("at most {MAX_LAYERS} layers are supported, got {0}")]
    TooManyLayers(usize),
    #[error("self-loop on vertex {vertex} in layer {layer}")]
    SelfLoop { layer: usize, vertex: usize },
    #[error("edge weight must be positive and finite, got {weight} for ({src}, {dst}) in layer {layer}")]
    BadWeight {
        layer: usize,
        src: usize,
        dst: usize,
        weight: f64,
    },
    #[error("vertex index {index} out of bounds (n = {n})")]
    VertexOutOfBounds { index: usize, n: usize },
    #[error("layer index {index} out of bounds (l = {l})")]
    LayerOutOfBounds { index: usize, l: usize },
    #[error("duplicate edge ({src}, {dst}) in layer {layer}")]
    DuplicateEdge { layer: usize, src: usize, dst: usize },
    #[error("negative switch cost {0}")]
    NegativeSwitchCost(f64),
    #[error("label count {got} does not match expected {expected}")]
    LabelCount { got: usize, expected: usize },
}

/// Nonnegative cost charged for each change of layer between consecutive
/// intra-layer edges of a path.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SwitchCost(f64);

impl SwitchCost {
    pub const ZERO: SwitchCost = SwitchCost(0.0);

    pub fn new(gamma: f64) -> Result<Self, NetworkError> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(NetworkError::NegativeSwitchCost(gamma));
        }
        Ok(SwitchCost(gamma))
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for SwitchCost {
    type Error = NetworkError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        SwitchCost::new(v)
    }
}

impl std::fmt::Display for SwitchCost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of layer indices, backed by a 64-bit mask (hence [`MAX_LAYERS`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct LayerSet(u64);

impl LayerSet {
    pub const EMPTY: LayerSet = LayerSet(0);

    #[inline]
    pub fn insert(&mut self, layer: usize) {
        debug_assert!(layer < MAX_LAYERS);
        self.0 |= 1 << layer;
    }

    #[inline]
    pub fn contains(&self, layer: usize) -> bool {
        layer < MAX_LAYERS && self.0 & (1 << layer) != 0
    }

    #[inline]
    pub fn union(self, other: LayerSet) -> LayerSet {
        LayerSet(self.0 | other.0)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Ascending iterator over the contained 0-based layer indices.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.0;
        (0..MAX_LAYERS).filter(move |l| bits & (1 << l) != 0)
    }

    pub fn from_raw(bits: u64) -> Self {
        LayerSet(bits)
    }

    pub fn raw(&self) -> u64 {
        self.0
    }
}

impl FromIterator<usize> for LayerSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = LayerSet::EMPTY;
        for l in iter {
            s.insert(l);
        }
        s
    }
}

impl std::fmt::Display for LayerSet {
    /// 1-based, e.g. `{1,3}`; matches the convention of the report types.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (pos, l) in self.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        write!(f, "}}")
    }
}

/// One layer: sparse out-adjacency plus a symmetry flag.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// `out[i]` lists `(j, w)` with `w > 0`, sorted by `j`.
    out: Vec<Vec<(u32, f64)>>,
    undirected: bool,
    edge_count: usize,
}

/// An immutable multiplex network: `L` weighted directed layers over `N`
/// shared vertices. All operations on it are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexNetwork {
    n: usize,
    layers: Vec<Layer>,
    vertex_labels: Option<Vec<String>>,
    layer_labels: Option<Vec<String>>,
}

impl MultiplexNetwork {
    /// Builds a network from `(layer, src, dst, weight)` records, 0-based.
    ///
    /// Rejects self-loops, nonpositive or non-finite weights, out-of-bounds
    /// indices and duplicate `(layer, src, dst)` records.
    pub fn from_edges<I>(
        n_vertices: usize,
        n_layers: usize,
        edges: I,
    ) -> Result<Self, NetworkError>
    where
        I: IntoIterator<Item = (usize, usize, usize, f64)>,
    {
        if n_vertices == 0 || n_layers == 0 {
            return Err(NetworkError::Empty);
        }
        if n_layers > MAX_LAYERS {
            return Err(NetworkError::TooManyLayers(n_layers));
        }
        let mut out = vec![vec![Vec::<(u32, f64)>::new(); n_vertices]; n_layers];
        for (l, i, j, w) in edges {
            if l >= n_layers {
                return Err(NetworkError::LayerOutOfBounds { index: l, l: n_layers });
            }
            if i >= n_vertices {
                return Err(NetworkError::VertexOutOfBounds { index: i, n: n_vertices });
            }
            if j >= n_vertices {
                return Err(NetworkError::VertexOutOfBounds { index: j, n: n_vertices });
            }
            if i == j {
                return Err(NetworkError::SelfLoop { layer: l, vertex: i });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(NetworkError::BadWeight { layer: l, src: i, dst: j, weight: w });
            }
            out[l][i].push((j as u32, w));
        }
        let layers = out
            .into_iter()
            .enumerate()
            .map(|(l, mut adj)| {
                let mut edge_count = 0;
                for (i, row) in adj.iter_mut().enumerate() {
                    row.sort_unstable_by_key(|&(j, _)| j);
                    for pair in row.windows(2) {
                        if pair[0].0 == pair[1].0 {
                            return Err(NetworkError::DuplicateEdge {
                                layer: l,
                                src: i,
                                dst: pair[0].0 as usize,
                            });
                        }
                    }
                    edge_count += row.len();
                }
                let undirected = is_symmetric(&adj);
                Ok(Layer { out: adj, undirected, edge_count })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultiplexNetwork { n: n_vertices, layers, vertex_labels: None, layer_labels: None })
    }

    /// Builds a network from dense per-layer adjacency matrices
    /// (zero = no edge). Intended for small inputs and tests.
    pub fn from_dense(layers: &[Array2<f64>]) -> Result<Self, NetworkError> {
        let n = layers.first().map(|a| a.nrows()).ok_or(NetworkError::Empty)?;
        let mut edges = Vec::new();
        for (l, a) in layers.iter().enumerate() {
            for ((i, j), &w) in a.indexed_iter() {
                if w != 0.0 {
                    edges.push((l, i, j, w));
                }
            }
        }
        Self::from_edges(n, layers.len(), edges)
    }

    pub fn with_vertex_labels(mut self, labels: Vec<String>) -> Result<Self, NetworkError> {
        if labels.len() != self.n {
            return Err(NetworkError::LabelCount { got: labels.len(), expected: self.n });
        }
        self.vertex_labels = Some(labels);
        Ok(self)
    }

    pub fn with_layer_labels(mut self, labels: Vec<String>) -> Result<Self, NetworkError> {
        if labels.len() != self.layers.len() {
            return Err(NetworkError::LabelCount {
                got: labels.len(),
                expected: self.layers.len(),
            });
        }
        self.layer_labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Weight of edge `i -> j` in layer `l`, or 0.0 when absent.
    pub fn weight(&self, layer: usize, i: usize, j: usize) -> f64 {
        self.layers[layer].out[i]
            .binary_search_by_key(&(j as u32), |&(v, _)| v)
            .map(|pos| self.layers[layer].out[i][pos].1)
            .unwrap_or(0.0)
    }

    /// True iff layer `l`'s adjacency is symmetric.
    pub fn layer_is_undirected(&self, layer: usize) -> bool {
        self.layers[layer].undirected
    }

    pub fn layer_edge_count(&self, layer: usize) -> usize {
        self.layers[layer].edge_count
    }

    pub fn total_edge_count(&self) -> usize {
        self.layers.iter().map(|l| l.edge_count).sum()
    }

    /// Out-edges `(j, w)` of vertex `i` in layer `l`, ascending by `j`.
    pub fn out_edges(&self, layer: usize, i: usize) -> &[(u32, f64)] {
        &self.layers[layer].out[i]
    }

    /// All edges of one layer as `(src, dst, weight)`.
    pub fn layer_edges(&self, layer: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.layers[layer]
            .out
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j as usize, w)))
    }

    /// All edges as `(layer, src, dst, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        (0..self.n_layers()).flat_map(move |l| {
            self.layer_edges(l).map(move |(i, j, w)| (l, i, j, w))
        })
    }

    pub fn vertex_labels(&self) -> Option<&[String]> {
        self.vertex_labels.as_deref()
    }

    pub fn layer_labels(&self) -> Option<&[String]> {
        self.layer_labels.as_deref()
    }

    /// Every layer transposed; labels preserved. An involution.
    pub fn transpose(&self) -> MultiplexNetwork {
        let mut out = vec![vec![Vec::<(u32, f64)>::new(); self.n]; self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate() {
            for (i, row) in layer.out.iter().enumerate() {
                for &(j, w) in row {
                    out[l][j as usize].push((i as u32, w));
                }
            }
        }
        let layers = out
            .into_iter()
            .zip(&self.layers)
            .map(|(mut adj, orig)| {
                for row in adj.iter_mut() {
                    row.sort_unstable_by_key(|&(j, _)| j);
                }
                Layer { out: adj, undirected: orig.undirected, edge_count: orig.edge_count }
            })
            .collect();
        MultiplexNetwork {
            n: self.n,
            layers,
            vertex_labels: self.vertex_labels.clone(),
            layer_labels: self.layer_labels.clone(),
        }
    }

    /// Returns a copy with `f` applied to every edge weight. `f` must return
    /// a positive finite weight; this is enforced by reconstruction.
    pub fn map_weights<F>(&self, mut f: F) -> Result<MultiplexNetwork, NetworkError>
    where
        F: FnMut(usize, usize, usize, f64) -> f64,
    {
        let edges: Vec<_> = self
            .edges()
            .map(|(l, i, j, w)| (l, i, j, f(l, i, j, w)))
            .collect();
        let mut net = Self::from_edges(self.n, self.layers.len(), edges)?;
        net.vertex_labels = self.vertex_labels.clone();
        net.layer_labels = self.layer_labels.clone();
        Ok(net)
    }

    /// Aggregated adjacency `A+ = sum of layer adjacencies` and its boolean
    /// support mask.
    pub fn aggregate(&self) -> AggregateStructure {
        let mut a_plus = Array2::<f64>::zeros((self.n, self.n));
        for (_, i, j, w) in self.edges() {
            a_plus[(i, j)] += w;
        }
        let support = a_plus.mapv(|v| v > 0.0);
        AggregateStructure { a_plus, support }
    }
}

fn is_symmetric(adj: &[Vec<(u32, f64)>]) -> bool {
    for (i, row) in adj.iter().enumerate() {
        for &(j, w) in row {
            let back = adj[j as usize]
                .binary_search_by_key(&(i as u32), |&(v, _)| v)
                .map(|pos| adj[j as usize][pos].1);
            if back != Ok(w) {
                return false;
            }
        }
    }
    true
}

/// Layerwise edge-weight tensor with absent edges at `+inf` and a zero
/// diagonal; the operand of the min-plus path computations.
///
/// Storage mirrors the sparse layers; `get` materializes the extended-real
/// view.
#[derive(Debug, Clone)]
pub struct PathTensor {
    n: usize,
    layers: Vec<Vec<Vec<(u32, f64)>>>,
}

impl PathTensor {
    pub fn from_network(net: &MultiplexNetwork) -> PathTensor {
        PathTensor {
            n: net.n_vertices(),
            layers: net
                .layers
                .iter()
                .map(|layer| layer.out.clone())
                .collect(),
        }
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// `p_ij^(l)`: the edge weight, `0` on the diagonal, `+inf` otherwise.
    pub fn get(&self, layer: usize, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.layers[layer][i]
            .binary_search_by_key(&(j as u32), |&(v, _)| v)
            .map(|pos| self.layers[layer][i][pos].1)
            .unwrap_or(f64::INFINITY)
    }

    /// Finite off-diagonal entries as `(layer, src, dst, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.layers.iter().enumerate().flat_map(|(l, adj)| {
            adj.iter().enumerate().flat_map(move |(i, row)| {
                row.iter().map(move |&(j, w)| (l, i, j as usize, w))
            })
        })
    }

    /// Tensor with every layer transposed.
    pub fn transposed(&self) -> PathTensor {
        let mut layers = vec![vec![Vec::<(u32, f64)>::new(); self.n]; self.layers.len()];
        for (l, i, j, w) in self.edges() {
            layers[l][j].push((i as u32, w));
        }
        for adj in layers.iter_mut() {
            for row in adj.iter_mut() {
                row.sort_unstable_by_key(|&(j, _)| j);
            }
        }
        PathTensor { n: self.n, layers }
    }
}

/// The `NL x NL` supra-adjacency matrix `B(gamma)`: layer adjacencies as
/// diagonal blocks, `gamma * I_N` in every off-diagonal block. Stored as
/// sorted nonzero triplets; supra index of vertex `i` in layer `l` is
/// `l * N + i`.
#[derive(Debug, Clone)]
pub struct SupraMatrix {
    n: usize,
    l: usize,
    gamma: SwitchCost,
    entries: Vec<(usize, usize, f64)>,
}

impl SupraMatrix {
    pub fn new(net: &MultiplexNetwork, gamma: SwitchCost) -> SupraMatrix {
        let (n, l) = (net.n_vertices(), net.n_layers());
        let mut entries = Vec::with_capacity(net.total_edge_count() + n * l * (l - 1));
        for (layer, i, j, w) in net.edges() {
            entries.push((layer * n + i, layer * n + j, w));
        }
        if !gamma.is_zero() {
            for l1 in 0..l {
                for l2 in 0..l {
                    if l1 != l2 {
                        for i in 0..n {
                            entries.push((l1 * n + i, l2 * n + i, gamma.value()));
                        }
                    }
                }
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        SupraMatrix { n, l, gamma, entries }
    }

    /// `(NL, NL)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.n * self.l, self.n * self.l)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_layers(&self) -> usize {
        self.l
    }

    pub fn gamma(&self) -> SwitchCost {
        self.gamma
    }

    /// Nonzero entries `(row, col, value)`, sorted by `(row, col)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Dense form; quadratic in `N * L`, meant for small networks.
    pub fn to_dense(&self) -> Array2<f64> {
        let nl = self.n * self.l;
        let mut b = Array2::<f64>::zeros((nl, nl));
        for &(r, c, v) in &self.entries {
            b[(r, c)] = v;
        }
        b
    }
}

/// Aggregated adjacency `A+` with support mask `S+`; the support constrains
/// which vertex pairs qualify for strengthening.
#[derive(Debug, Clone)]
pub struct AggregateStructure {
    a_plus: Array2<f64>,
    support: Array2<bool>,
}

impl AggregateStructure {
    pub fn a_plus(&self) -> &Array2<f64> {
        &self.a_plus
    }

    #[inline]
    pub fn supported(&self, i: usize, j: usize) -> bool {
        self.support[(i, j)]
    }

    pub fn support(&self) -> &Array2<bool> {
        &self.support
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn example_net() -> MultiplexNetwork {
        // Three shuttle companies over four sites; mixes directed and
        // undirected edges inside each layer.
        let a1 = array![
            [0.0, 1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 0.5, 0.0, 0.0]
        ];
        let a2 = array![
            [0.0, 0.5, 0.5, 0.0],
            [0.5, 0.0, 0.0, 0.0],
            [0.5, 0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0, 0.0]
        ];
        let a3 = array![
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [1.5, 1.0, 0.5, 0.0]
        ];
        MultiplexNetwork::from_dense(&[a1, a2, a3]).unwrap()
    }

    #[test]
    fn rejects_self_loop() {
        let err = MultiplexNetwork::from_edges(3, 1, [(0, 1, 1, 2.0)]).unwrap_err();
        assert_eq!(err, NetworkError::SelfLoop { layer: 0, vertex: 1 });
    }

    #[test]
    fn rejects_bad_weight() {
        assert!(matches!(
            MultiplexNetwork::from_edges(3, 1, [(0, 0, 1, 0.0)]),
            Err(NetworkError::BadWeight { .. })
        ));
        assert!(matches!(
            MultiplexNetwork::from_edges(3, 1, [(0, 0, 1, -2.0)]),
            Err(NetworkError::BadWeight { .. })
        ));
        assert!(matches!(
            MultiplexNetwork::from_edges(3, 1, [(0, 0, 1, f64::NAN)]),
            Err(NetworkError::BadWeight { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_edge() {
        assert!(matches!(
            MultiplexNetwork::from_edges(3, 1, [(0, 0, 1, 1.0), (0, 0, 1, 2.0)]),
            Err(NetworkError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn switch_cost_validation() {
        assert!(SwitchCost::new(-0.1).is_err());
        assert!(SwitchCost::new(f64::INFINITY).is_err());
        assert_eq!(SwitchCost::new(0.3).unwrap().value(), 0.3);
    }

    #[test]
    fn path_tensor_entries() {
        let net = example_net();
        let pt = PathTensor::from_network(&net);
        // layer 3, entry (4, 1) in 1-based indexing
        assert_eq!(pt.get(2, 3, 0), 1.5);
        // layer 1 has no edge 2 -> 1
        assert_eq!(pt.get(0, 1, 0), f64::INFINITY);
        for l in 0..3 {
            for i in 0..4 {
                assert_eq!(pt.get(l, i, i), 0.0);
            }
        }
    }

    #[test]
    fn undirected_flag_per_layer() {
        let sym = array![[0.0, 2.0], [2.0, 0.0]];
        let asym = array![[0.0, 2.0], [1.0, 0.0]];
        let net = MultiplexNetwork::from_dense(&[sym, asym]).unwrap();
        assert!(net.layer_is_undirected(0));
        assert!(!net.layer_is_undirected(1));
    }

    #[test]
    fn transpose_is_involution() {
        let net = example_net();
        assert_eq!(net.transpose().transpose(), net);
        assert_eq!(net.transpose().weight(2, 0, 3), 1.5);
    }

    #[test]
    fn aggregate_support() {
        let net = example_net();
        let agg = net.aggregate();
        assert_eq!(agg.a_plus()[(2, 3)], 2.0);
        assert!(agg.supported(2, 3));
        assert_eq!(agg.a_plus()[(0, 3)], 0.0);
        assert!(!agg.supported(0, 3));
    }

    #[test]
    fn aggregate_of_edgeless_network() {
        let net = MultiplexNetwork::from_edges(3, 2, []).unwrap();
        let agg = net.aggregate();
        assert!(agg.a_plus().iter().all(|&v| v == 0.0));
        assert!(agg.support().iter().all(|&s| !s));
    }

    #[test]
    fn supra_matrix_blocks() {
        let net = example_net();
        let gamma = SwitchCost::new(0.3).unwrap();
        let b = SupraMatrix::new(&net, gamma).to_dense();
        assert_eq!(b.nrows(), 12);
        // diagonal blocks hold the layers
        assert_eq!(b[(0, 1)], 1.0); // a_12 in layer 1
        assert_eq!(b[(4, 5)], 0.5); // a_12 in layer 2
        assert_eq!(b[(11, 8)], 1.5); // a_41 in layer 3
        // off-diagonal blocks are gamma * I
        for i in 0..4 {
            assert_eq!(b[(i, 4 + i)], 0.3);
            assert_eq!(b[(8 + i, i)], 0.3);
        }
        assert_eq!(b[(0, 5)], 0.0);
    }

    #[test]
    fn supra_matrix_gamma_zero_has_no_interlayer_entries() {
        let net = example_net();
        let b = SupraMatrix::new(&net, SwitchCost::ZERO);
        assert!(b.entries().iter().all(|&(r, c, _)| r / 4 == c / 4));
    }

    #[test]
    fn supra_matrix_single_vertex_two_layers() {
        let net = MultiplexNetwork::from_edges(1, 2, []).unwrap();
        let b = SupraMatrix::new(&net, SwitchCost::new(0.3).unwrap()).to_dense();
        assert_eq!(b, array![[0.0, 0.3], [0.3, 0.0]]);
    }

    #[test]
    fn layer_set_roundtrip() {
        let s: LayerSet = [0, 2, 5].into_iter().collect();
        assert!(s.contains(0) && s.contains(2) && s.contains(5));
        assert!(!s.contains(1));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(format!("{s}"), "{1,3,6}");
    }
}
