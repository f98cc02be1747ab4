//! Dense weighted graphs, vertex sets, partitions, and the density/degree
//! primitives every other module is built on.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;

/// Absolute tolerance used for real-valued identity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Weighted,
    Simple,
}

/// Symmetric edge weights in `[0, 1]` on vertices `0..n`, zero diagonal.
///
/// Only the strict upper triangle is stored, row-major. A `Simple` graph holds
/// weights in `{0, 1}` only; every mutating entry point enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    kind: GraphKind,
    upper: Vec<f64>,
}

#[inline]
fn tri_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[inline]
fn row_start(n: usize, u: usize) -> usize {
    // number of stored entries in rows 0..u
    u * (2 * n - u - 1) / 2
}

fn check_weight(kind: GraphKind, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) || w.is_nan() {
        return Err(invalid(format!("edge weight {w} outside [0, 1]")));
    }
    if kind == GraphKind::Simple && w != 0.0 && w != 1.0 {
        return Err(invalid(format!("simple graph weight {w} not in {{0, 1}}")));
    }
    Ok(())
}

impl WeightedGraph {
    pub fn empty(n: usize, kind: GraphKind) -> Self {
        Self {
            n,
            kind,
            upper: vec![0.0; tri_len(n)],
        }
    }

    /// Build from the strict upper triangle in row-major order.
    pub fn from_upper(n: usize, kind: GraphKind, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != tri_len(n) {
            return Err(invalid(format!(
                "upper triangle of n={n} needs {} entries, got {}",
                tri_len(n),
                upper.len()
            )));
        }
        for &w in &upper {
            check_weight(kind, w)?;
        }
        Ok(Self { n, kind, upper })
    }

    /// Build by evaluating `f(u, v)` for every `u < v`.
    pub fn from_fn<F>(n: usize, kind: GraphKind, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut g = Self::empty(n, kind);
        par::for_each_row(g.rows_mut(), |u, row| {
            for (k, w) in row.iter_mut().enumerate() {
                *w = f(u, u + 1 + k);
            }
        });
        for &w in &g.upper {
            check_weight(kind, w)?;
        }
        Ok(g)
    }

    /// Simple graph from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n, GraphKind::Simple);
        for &(u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(invalid(format!("bad edge ({u}, {v}) for n={n}")));
            }
            g.set_weight(u, v, 1.0)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_simple(&self) -> bool {
        self.kind == GraphKind::Simple
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    fn index(&self, u: usize, v: usize) -> usize {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        row_start(self.n, a) + (b - a - 1)
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        if u == v {
            0.0
        } else {
            self.upper[self.index(u, v)]
        }
    }

    pub fn set_weight(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u == v {
            return Err(invalid("diagonal weights are fixed at 0"));
        }
        if u >= self.n || v >= self.n {
            return Err(invalid(format!("vertex out of range for n={}", self.n)));
        }
        check_weight(self.kind, w)?;
        let i = self.index(u, v);
        self.upper[i] = w;
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v) > 0.0
    }

    /// Mutable views of each stored row; row `u` holds weights `(u, u+1..n)`.
    pub(crate) fn rows_mut(&mut self) -> Vec<&mut [f64]> {
        let n = self.n;
        let mut rows = Vec::with_capacity(n);
        let mut rest: &mut [f64] = &mut self.upper;
        for u in 0..n {
            let (row, tail) = rest.split_at_mut(n - u - 1);
            rows.push(row);
            rest = tail;
        }
        rows
    }

    /// Stored row `u`: weights to vertices `u+1..n`.
    pub fn row(&self, u: usize) -> &[f64] {
        let s = row_start(self.n, u);
        &self.upper[s..s + (self.n - u - 1)]
    }

    /// Weighted degree of `v` over the whole graph.
    pub fn degree(&self, v: usize) -> f64 {
        (0..self.n).map(|u| self.weight(v, u)).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        par::map_range(self.n, |v| self.degree(v))
    }

    /// Sum of all edge weights (each unordered pair once).
    pub fn total_weight(&self) -> f64 {
        self.upper.iter().sum()
    }

    /// Number of nonzero-weight pairs.
    pub fn edge_count(&self) -> usize {
        self.upper.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.row(u)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(move |(k, &w)| (u, u + 1 + k, w))
        })
    }

    /// Induced subgraph on `vs` (relabelled `0..vs.len()` in order).
    pub fn induced(&self, vs: &[usize]) -> WeightedGraph {
        let mut g = WeightedGraph::empty(vs.len(), self.kind);
        for (i, &u) in vs.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate().skip(i + 1) {
                let idx = g.index(i, j);
                g.upper[idx] = self.weight(u, v);
            }
        }
        g
    }

    /// Entrywise `self += other`; the result is re-validated against `[0, 1]`.
    pub fn add_assign(&mut self, other: &WeightedGraph) -> Result<()> {
        if other.n != self.n {
            return Err(invalid("graph sizes differ"));
        }
        for (a, b) in self.upper.iter_mut().zip(&other.upper) {
            *a += *b;
        }
        if self.kind == GraphKind::Simple && other.upper.iter().any(|&w| w != 0.0) {
            self.kind = GraphKind::Weighted;
        }
        for &w in &self.upper {
            check_weight(self.kind, w)?;
        }
        Ok(())
    }

    /// Promote to `Simple` if every weight is 0 or 1.
    pub fn into_simple_if_binary(mut self) -> Self {
        if self.upper.iter().all(|&w| w == 0.0 || w == 1.0) {
            self.kind = GraphKind::Simple;
        }
        self
    }

    /// Raw cross sum `Σ_{a∈A, b∈B} w(a, b)`. Sets may overlap; diagonal is 0.
    pub fn cross_sum(&self, a: &[usize], b: &[usize]) -> f64 {
        a.iter()
            .map(|&u| b.iter().map(|&v| self.weight(u, v)).sum::<f64>())
            .sum()
    }
}

/// Sorted, duplicate-free list of vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    /// Accepts any order; rejects duplicates.
    pub fn new(mut vs: Vec<usize>) -> Result<Self> {
        vs.sort_unstable();
        if vs.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("vertex set contains duplicates"));
        }
        Ok(Self(vs))
    }

    pub fn range(lo: usize, hi: usize) -> Self {
        Self((lo..hi).collect())
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= n => Err(invalid(format!("vertex {v} out of range for n={n}"))),
            _ => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn intersection_len(&self, other: &VertexSet) -> usize {
        self.0.iter().filter(|v| other.contains(**v)).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl From<VertexSet> for Vec<usize> {
    fn from(s: VertexSet) -> Self {
        s.0
    }
}

/// Assignment of `0..n` to clusters `0..ell`; every cluster is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    n: usize,
    ell: usize,
    assign: Vec<usize>,
}

#[derive(Deserialize)]
struct PartitionRepr {
    n: usize,
    ell: usize,
    assign: Vec<usize>,
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PartitionRepr::deserialize(d)?;
        Partition::new(r.n, r.ell, r.assign).map_err(serde::de::Error::custom)
    }
}

impl Partition {
    pub fn new(n: usize, ell: usize, assign: Vec<usize>) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("partition needs at least one cluster"));
        }
        if assign.len() != n {
            return Err(invalid(format!(
                "assignment has {} entries for n={n}",
                assign.len()
            )));
        }
        let mut sizes = vec![0usize; ell];
        for &c in &assign {
            if c >= ell {
                return Err(invalid(format!("cluster id {c} >= ell={ell}")));
            }
            sizes[c] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(invalid(format!("cluster {empty} is empty")));
        }
        Ok(Self { n, ell, assign })
    }

    /// Build from an assignment whose ids may be sparse; clusters are relabelled
    /// in order of first appearance of their smallest vertex.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let assign: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self::new(labels.len(), map.len(), assign)
    }

    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut assign = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= n {
                    return Err(invalid(format!("vertex {v} out of range")));
                }
                if assign[v] != usize::MAX {
                    return Err(invalid(format!("vertex {v} assigned twice")));
                }
                assign[v] = c;
            }
        }
        if assign.contains(&usize::MAX) {
            return Err(invalid("clusters do not cover all vertices"));
        }
        Self::new(n, clusters.len(), assign)
    }

    /// `parts` consecutive intervals of equal length; requires `parts | n`.
    pub fn intervals(n: usize, parts: usize) -> Result<Self> {
        if parts == 0 || n % parts != 0 {
            return Err(invalid(format!("{parts} does not divide n={n}")));
        }
        let len = n / parts;
        Self::new(n, parts, (0..n).map(|v| v / len).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assign[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.ell];
        for &c in &self.assign {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn clusters(&self) -> Vec<VertexSet> {
        let mut out = vec![Vec::new(); self.ell];
        for (v, &c) in self.assign.iter().enumerate() {
            out[c].push(v);
        }
        out.into_iter().map(VertexSet).collect()
    }

    /// Clusters relabelled in canonical order (by smallest member).
    pub fn canonical(&self) -> Partition {
        Partition::from_labels(&self.assign).expect("relabelling a valid partition")
    }
}

/// `max |V_i| − min |V_i| ≤ 1`.
pub fn check_equitable(p: &Partition) -> bool {
    let sizes = p.sizes();
    let max = sizes.iter().max().copied().unwrap_or(0);
    let min = sizes.iter().min().copied().unwrap_or(0);
    max - min <= 1
}

fn check_pair_args(g: &WeightedGraph, a: &VertexSet, b: &VertexSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("vertex sets must be nonempty"));
    }
    a.check_bounds(g.n())?;
    b.check_bounds(g.n())?;
    if !a.is_disjoint(b) {
        return Err(invalid("vertex sets must be disjoint"));
    }
    Ok(())
}

pub(crate) fn validate_pair(g: &WeightedGraph, a: &VertexSet, b: &VertexSet) -> Result<()> {
    check_pair_args(g, a, b)
}

/// `e(A, B) / (|A| |B|)` for disjoint nonempty `A`, `B`.
pub fn pair_density(g: &WeightedGraph, a: &VertexSet, b: &VertexSet) -> Result<f64> {
    check_pair_args(g, a, b)?;
    Ok(g.cross_sum(a.as_slice(), b.as_slice()) / (a.len() as f64 * b.len() as f64))
}

/// Density between possibly overlapping sets (diagonal weights are zero).
pub fn set_density(g: &WeightedGraph, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("vertex sets must be nonempty"));
    }
    Ok(g.cross_sum(a, b) / (a.len() as f64 * b.len() as f64))
}

/// `Σ_{b∈B} w(v, b)`.
pub fn degree_into(g: &WeightedGraph, v: usize, b: &VertexSet) -> Result<f64> {
    if b.is_empty() {
        return Err(invalid("target set must be nonempty"));
    }
    if v >= g.n() {
        return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
    }
    b.check_bounds(g.n())?;
    Ok(b.iter().map(|u| g.weight(v, u)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gallery(half: usize) -> (WeightedGraph, VertexSet, VertexSet) {
        // A = 0..2h, B = 2h..4h; (A^i, B^i) complete, crossings empty
        let n = 4 * half;
        let g = WeightedGraph::from_fn(n, GraphKind::Simple, |u, v| {
            let side = |x: usize| (x % (2 * half)) / half;
            let in_a = |x: usize| x < 2 * half;
            if in_a(u) != in_a(v) && side(u) == side(v) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        (g, VertexSet::range(0, 2 * half), VertexSet::range(2 * half, n))
    }

    #[test]
    fn density_of_complete_and_empty_pairs() {
        let full = WeightedGraph::from_fn(6, GraphKind::Simple, |_, _| 1.0).unwrap();
        let a = VertexSet::range(0, 3);
        let b = VertexSet::range(3, 6);
        assert_eq!(pair_density(&full, &a, &b).unwrap(), 1.0);
        let none = WeightedGraph::empty(6, GraphKind::Simple);
        assert_eq!(pair_density(&none, &a, &b).unwrap(), 0.0);
    }

    #[test]
    fn gallery_pair_has_half_density() {
        let (g, a, b) = gallery(4);
        assert_eq!(pair_density(&g, &a, &b).unwrap(), 0.5);
    }

    #[test]
    fn density_rejects_bad_sets() {
        let g = WeightedGraph::empty(4, GraphKind::Simple);
        let a = VertexSet::range(0, 2);
        let empty = VertexSet::new(vec![]).unwrap();
        assert!(pair_density(&g, &a, &empty).is_err());
        assert!(pair_density(&g, &a, &VertexSet::range(1, 3)).is_err());
    }

    #[test]
    fn degree_of_isolated_vertex_and_star_center() {
        let star = WeightedGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let leaves = VertexSet::range(1, 5);
        assert_eq!(degree_into(&star, 0, &leaves).unwrap(), 4.0);
        let iso = WeightedGraph::empty(5, GraphKind::Simple);
        assert_eq!(degree_into(&iso, 0, &leaves).unwrap(), 0.0);
    }

    #[test]
    fn equitable_examples() {
        let p = Partition::new(10, 5, (0..10).map(|v| v / 2).collect()).unwrap();
        assert!(check_equitable(&p));
        let p = Partition::from_clusters(
            10,
            &[vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]],
        )
        .unwrap();
        assert!(check_equitable(&p));
        let p = Partition::from_clusters(
            10,
            &[vec![0, 1, 2, 3, 4], vec![5, 6, 7], vec![8, 9]],
        )
        .unwrap();
        assert!(!check_equitable(&p));
    }

    #[test]
    fn simple_graphs_reject_fractional_weights() {
        let mut g = WeightedGraph::empty(3, GraphKind::Simple);
        assert!(g.set_weight(0, 1, 0.5).is_err());
        assert!(g.set_weight(1, 1, 1.0).is_err());
        let mut w = WeightedGraph::empty(3, GraphKind::Weighted);
        assert!(w.set_weight(0, 2, 1.5).is_err());
        w.set_weight(2, 0, 0.25).unwrap();
        assert_eq!(w.weight(0, 2), 0.25);
    }

    #[test]
    fn partition_rejects_empty_clusters() {
        assert!(Partition::new(3, 3, vec![0, 0, 1]).is_err());
        assert!(Partition::new(3, 0, vec![]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = (WeightedGraph, bool)> {
        (4usize..14, any::<bool>(), any::<u64>()).prop_map(|(n, simple, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let kind = if simple { GraphKind::Simple } else { GraphKind::Weighted };
            let upper = (0..n * (n - 1) / 2)
                .map(|_| {
                    if simple {
                        f64::from(u8::from(rng.gen_bool(0.5)))
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect();
            (WeightedGraph::from_upper(n, kind, upper).unwrap(), simple)
        })
    }

    proptest! {
        #[test]
        fn density_conserves_degree_mass((g, simple) in arb_graph(), split in 1usize..100) {
            let n = g.n();
            let k = 1 + split % (n - 1);
            let a = VertexSet::range(0, k);
            let b = VertexSet::range(k, n);
            let d = pair_density(&g, &a, &b).unwrap();
            let mass: f64 = a.iter().map(|v| degree_into(&g, v, &b).unwrap()).sum();
            let area = (a.len() * b.len()) as f64;
            prop_assert!((d * area - mass).abs() <= 1e-9 * area);
            let d_rev = pair_density(&g, &b, &a).unwrap();
            prop_assert!((d - d_rev).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&d));
            if simple {
                prop_assert!((d * area - (d * area).round()).abs() <= 1e-9);
            }
        }
    }
}
