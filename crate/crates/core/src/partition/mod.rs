//! Partition-level degularity: validity checks, form transforms, and
//! refinement measurements.

mod cascade;
mod search;

use rand::seq::SliceRandom;
use serde::Serialize;

pub use cascade::{cascade_audit, CascadeConfig, CascadeLevel, CascadeReport, HypothesisFlags};
pub use search::{min_complexity_search, SearchConfig, SearchMode, SearchResult};

use crate::error::{invalid, precondition, Result};
use crate::graph::{check_equitable, Partition, VertexSet, WeightedGraph};
use crate::pair::check_degular;
use crate::par;
use crate::rng::{stream_rng, Stream};

const COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionVerdict {
    pub eps: f64,
    pub ell: usize,
    pub equitable: bool,
    /// Number of non-degular partners of each cluster.
    pub bad_counts: Vec<usize>,
    /// Unordered non-degular pairs `(i, j)`, `i < j`.
    pub bad_pairs: Vec<(usize, usize)>,
    /// Ordered non-degular pairs, `2 · bad_pairs.len()`.
    pub aggregate_bad: usize,
    /// Every cluster is degular with at least `(1 − ε) ℓ` others.
    pub degree_form: bool,
    /// At most `ε ℓ²` ordered pairs are non-degular.
    pub aggregate_form: bool,
    /// Equitable and degree form.
    pub pass: bool,
}

/// Degularity of every pair of clusters.
fn bad_pair_list(g: &WeightedGraph, clusters: &[VertexSet], eps: f64) -> Result<Vec<(usize, usize)>> {
    let ell = clusters.len();
    let pairs: Vec<(usize, usize)> = (0..ell)
        .flat_map(|i| ((i + 1)..ell).map(move |j| (i, j)))
        .collect();
    let verdicts = par::map_slice(&pairs, |&(i, j)| check_degular(g, &clusters[i], &clusters[j], eps).map(|v| v.pass));
    let mut bad = Vec::new();
    for (pair, ok) in pairs.into_iter().zip(verdicts) {
        if !ok? {
            bad.push(pair);
        }
    }
    Ok(bad)
}

pub(crate) fn verdict_from_bad(eps: f64, ell: usize, equitable: bool, bad_pairs: Vec<(usize, usize)>) -> PartitionVerdict {
    let mut bad_counts = vec![0usize; ell];
    for &(i, j) in &bad_pairs {
        bad_counts[i] += 1;
        bad_counts[j] += 1;
    }
    let need = (1.0 - eps) * ell as f64;
    let degree_form = bad_counts
        .iter()
        .all(|&b| (ell - 1 - b) as f64 + COUNT_TOL >= need);
    let aggregate_bad = 2 * bad_pairs.len();
    let aggregate_form = aggregate_bad as f64 <= eps * (ell * ell) as f64 + COUNT_TOL;
    PartitionVerdict {
        eps,
        ell,
        equitable,
        bad_counts,
        bad_pairs,
        aggregate_bad,
        degree_form,
        aggregate_form,
        pass: equitable && degree_form,
    }
}

pub fn check_degular_partition(g: &WeightedGraph, p: &Partition, eps: f64) -> Result<PartitionVerdict> {
    if p.n() != g.n() {
        return Err(invalid(format!("partition is on {} vertices, graph on {}", p.n(), g.n())));
    }
    if p.ell() < 2 {
        return Err(invalid("partition needs at least two clusters"));
    }
    let bad = bad_pair_list(g, &p.clusters(), eps)?;
    Ok(verdict_from_bad(eps, p.ell(), check_equitable(p), bad))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormTransform {
    pub partition: Partition,
    /// Original indices of the removed clusters.
    pub removed: Vec<usize>,
    /// `|removed| ≤ ε h / 2`, the bound that counting ordered bad pairs gives.
    pub removal_within_counting_bound: bool,
    /// `|removed| ≤ ε h / 4`.
    pub removal_within_quarter_bound: bool,
    pub verdict: PartitionVerdict,
}

/// Drop every cluster with more than `(ε/4) h` non-degular partners at
/// `ε²/8` and spread its vertices, by increasing index, each onto a currently
/// smallest surviving cluster (lowest index on ties).
pub fn aggregate_to_degree_form(g: &WeightedGraph, p: &Partition, eps: f64) -> Result<FormTransform> {
    if !check_equitable(p) {
        return Err(precondition("input partition is not equitable"));
    }
    let fine = eps * eps / 8.0;
    let pre = check_degular_partition(g, p, fine)?;
    if !pre.aggregate_form {
        return Err(precondition(format!(
            "partition is not {fine}-degular in aggregate form ({} ordered bad pairs)",
            pre.aggregate_bad
        )));
    }
    let h = p.ell();
    let limit = eps / 4.0 * h as f64;
    let removed: Vec<usize> = (0..h).filter(|&i| pre.bad_counts[i] as f64 > limit).collect();
    let removal_within_counting_bound = removed.len() as f64 <= eps * h as f64 / 2.0 + COUNT_TOL;
    let removal_within_quarter_bound = removed.len() as f64 <= limit + COUNT_TOL;
    assert!(
        removal_within_counting_bound,
        "removed {} clusters, more than eps*h/2 allows",
        removed.len()
    );
    if removed.len() == h {
        return Err(precondition("every cluster would be removed"));
    }
    let survivors: Vec<usize> = (0..h).filter(|i| !removed.contains(i)).collect();
    let mut relabel = vec![usize::MAX; h];
    for (k, &c) in survivors.iter().enumerate() {
        relabel[c] = k;
    }
    let sizes = p.sizes();
    let mut new_sizes: Vec<usize> = survivors.iter().map(|&c| sizes[c]).collect();
    let mut assign = vec![0usize; p.n()];
    for (v, &c) in p.assign().iter().enumerate() {
        if relabel[c] != usize::MAX {
            assign[v] = relabel[c];
        } else {
            let (k, _) = new_sizes
                .iter()
                .enumerate()
                .min_by_key(|&(k, &s)| (s, k))
                .expect("at least one survivor");
            assign[v] = k;
            new_sizes[k] += 1;
        }
    }
    let partition = Partition::new(p.n(), survivors.len(), assign)?;
    let verdict = if partition.ell() >= 2 {
        check_degular_partition(g, &partition, eps)?
    } else {
        verdict_from_bad(eps, 1, true, Vec::new())
    };
    Ok(FormTransform {
        partition,
        removed,
        removal_within_counting_bound,
        removal_within_quarter_bound,
        verdict,
    })
}

/// `Σ |V_i||V_j|` over ordered pairs `i ≠ j` that are degular at `eps`.
pub fn degular_mass(g: &WeightedGraph, p: &Partition, eps: f64) -> Result<f64> {
    let clusters = p.clusters();
    let bad = bad_pair_list(g, &clusters, eps)?;
    let sizes: Vec<f64> = clusters.iter().map(|c| c.len() as f64).collect();
    let total: f64 = sizes.iter().sum();
    let squares: f64 = sizes.iter().map(|s| s * s).sum();
    let bad_mass: f64 = bad.iter().map(|&(i, j)| 2.0 * sizes[i] * sizes[j]).sum();
    Ok(total * total - squares - bad_mass)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualizeReport {
    pub cell_size: usize,
    pub cells_before_transform: usize,
    pub leftovers: usize,
    pub degular_mass: f64,
    pub transform: FormTransform,
}

/// From clusters of arbitrary sizes to an equitable degree-form partition:
/// cut each cluster into random cells of `⌊εn/(2ℓ)⌋` vertices, deal the
/// leftovers over a random permutation of the cells, then apply
/// [`aggregate_to_degree_form`].
pub fn equalize_partition(g: &WeightedGraph, p: &Partition, eps: f64, seed: u64) -> Result<EqualizeReport> {
    let n = p.n();
    if n != g.n() {
        return Err(invalid("partition and graph sizes differ"));
    }
    let nf = n as f64;
    let mass = if p.ell() >= 2 { degular_mass(g, p, eps / 2.0)? } else { 0.0 };
    if mass + COUNT_TOL < (1.0 - eps / 2.0) * nf * nf {
        return Err(precondition(format!(
            "degular mass {mass} below (1 - eps/2) n^2 = {}",
            (1.0 - eps / 2.0) * nf * nf
        )));
    }
    let cell = (eps * nf / (2.0 * p.ell() as f64)).floor() as usize;
    if cell == 0 {
        return Err(invalid("target cell size eps*n/(2*ell) is below 1"));
    }
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut leftovers = Vec::new();
    for (i, cluster) in p.clusters().into_iter().enumerate() {
        let mut members = cluster.into_vec();
        members.shuffle(&mut stream_rng(seed, Stream::Equalize, &[i as u64]));
        let whole = members.len() / cell * cell;
        leftovers.extend_from_slice(&members[whole..]);
        cells.extend(members[..whole].chunks(cell).map(<[usize]>::to_vec));
    }
    if cells.len() < 2 {
        return Err(precondition("fewer than two cells of the target size"));
    }
    let mut rng = stream_rng(seed, Stream::Equalize, &[u64::MAX]);
    leftovers.sort_unstable();
    leftovers.shuffle(&mut rng);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.shuffle(&mut rng);
    let leftover_count = leftovers.len();
    for (k, v) in leftovers.into_iter().enumerate() {
        cells[order[k % order.len()]].push(v);
    }
    let cells_before = cells.len();
    let equal = Partition::from_clusters(n, &cells)?;
    let transform = aggregate_to_degree_form(g, &equal, eps)?;
    Ok(EqualizeReport {
        cell_size: cell,
        cells_before_transform: cells_before,
        leftovers: leftover_count,
        degular_mass: mass,
        transform,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCover {
    pub cluster: usize,
    pub best_cell: usize,
    pub overlap: usize,
    pub size: usize,
    pub deficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    pub clusters: Vec<ClusterCover>,
    /// Least `β` with `P` β-refining `Q`: the largest deficiency.
    pub beta: f64,
}

/// For each cluster of `p`, the cell of `q` covering most of it.
pub fn refinement_beta(p: &Partition, q: &Partition) -> Result<RefinementReport> {
    if p.n() != q.n() {
        return Err(invalid("partitions are on different vertex sets"));
    }
    let mut counts = vec![vec![0usize; q.ell()]; p.ell()];
    for v in 0..p.n() {
        counts[p.cluster_of(v)][q.cluster_of(v)] += 1;
    }
    let clusters: Vec<ClusterCover> = counts
        .iter()
        .enumerate()
        .map(|(z, row)| {
            let size: usize = row.iter().sum();
            let (best_cell, &overlap) = row
                .iter()
                .enumerate()
                .max_by_key(|&(c, &k)| (k, std::cmp::Reverse(c)))
                .expect("q has a cell");
            ClusterCover {
                cluster: z,
                best_cell,
                overlap,
                size,
                deficiency: 1.0 - overlap as f64 / size as f64,
            }
        })
        .collect();
    let beta = clusters.iter().map(|c| c.deficiency).fold(0.0, f64::max);
    Ok(RefinementReport { clusters, beta })
}
