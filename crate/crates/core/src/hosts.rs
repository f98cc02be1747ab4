//! Degular partitions of (almost) regular graphs, and embedding any graph as
//! an induced subgraph of an almost regular one.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graph::{GraphKind, Partition, WeightedGraph};
use crate::partition::{check_degular_partition, PartitionVerdict};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquipartitionReport {
    pub partition: Partition,
    pub verdict: PartitionVerdict,
    pub min_degree: f64,
    pub max_degree: f64,
    /// `max − min ≤ εn/2`.
    pub near_regular: bool,
    pub warnings: Vec<String>,
}

/// Uniformly random equitable partition into `L` clusters and its full
/// pairwise degularity verdict.
pub fn random_equipartition_degularity(g: &WeightedGraph, l: usize, eps: f64, seed: u64) -> Result<EquipartitionReport> {
    let n = g.n();
    if l < 2 || l > n {
        return Err(invalid(format!("L = {l} must lie in 2..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Equipartition, &[]));
    let mut assign = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        assign[v] = k % l;
    }
    let partition = Partition::new(n, l, assign)?;
    let verdict = check_degular_partition(g, &partition, eps)?;
    let degrees = g.degrees();
    let min_degree = degrees.iter().copied().fold(f64::INFINITY, f64::min);
    let max_degree = degrees.iter().copied().fold(0.0, f64::max);
    let near_regular = max_degree - min_degree <= eps * n as f64 / 2.0 + 1e-9;
    let mut warnings = Vec::new();
    if !near_regular {
        warnings.push(format!(
            "degrees span {min_degree}..{max_degree}, more than eps*n/2 apart"
        ));
    }
    let floor = 20.0 / (eps * eps) * (n as f64).ln();
    if ((n / l) as f64) < floor {
        warnings.push(format!(
            "cluster size {} below 20 eps^-2 ln n = {floor:.0}",
            n / l
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(EquipartitionReport {
        partition,
        verdict,
        min_degree,
        max_degree,
        near_regular,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Infeasibility {
    OddSum { sum: usize },
    /// `Σ_{i≤k} d_i > k(k−1) + Σ_{i>k} min(d_i, k)` on the sorted sequence.
    ErdosGallai { k: usize, lhs: usize, rhs: usize },
}

/// First violated Erdős–Gallai inequality, or `None` if the sequence is graphic.
pub fn erdos_gallai(d: &[usize]) -> Option<Infeasibility> {
    let sum: usize = d.iter().sum();
    if sum % 2 == 1 {
        return Some(Infeasibility::OddSum { sum });
    }
    let mut s = d.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    let mut lhs = 0;
    for k in 1..=s.len() {
        lhs += s[k - 1];
        let rhs = k * (k - 1) + s[k..].iter().map(|&x| x.min(k)).sum::<usize>();
        if lhs > rhs {
            return Some(Infeasibility::ErdosGallai { k, lhs, rhs });
        }
    }
    None
}

/// Largest-first realization: the vertex of largest remaining degree is
/// joined to the next-largest ones (ties to the lowest index).
pub fn realize_degree_sequence(d: &[usize]) -> Result<std::result::Result<WeightedGraph, Infeasibility>> {
    let n = d.len();
    if let Some(&bad) = d.iter().find(|&&x| x >= n.max(1)) {
        return Err(invalid(format!("degree {bad} exceeds n - 1 = {}", n.saturating_sub(1))));
    }
    if let Some(cert) = erdos_gallai(d) {
        return Ok(Err(cert));
    }
    let mut g = WeightedGraph::empty(n, GraphKind::Simple);
    let mut left = d.to_vec();
    loop {
        let mut order: Vec<usize> = (0..n).filter(|&v| left[v] > 0).collect();
        if order.is_empty() {
            break;
        }
        order.sort_by_key(|&v| (std::cmp::Reverse(left[v]), v));
        let v = order[0];
        let k = left[v];
        if k > order.len() - 1 {
            unreachable!("graphic sequence ran out of partners");
        }
        for &u in &order[1..=k] {
            g.set_weight(v, u, 1.0)?;
            left[u] -= 1;
        }
        left[v] = 0;
    }
    Ok(Ok(g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedReport {
    pub n: usize,
    /// `H[0..n] = G` exactly.
    pub induced_matches: bool,
    pub min_degree: usize,
    pub max_degree: usize,
    pub spread: usize,
    /// W-side vertices (host indices) whose target was relaxed by one.
    pub parity_repairs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub host: WeightedGraph,
    pub report: EmbedReport,
}

/// `H` on `2n` vertices with `H[V] = G` for `V = 0..n` and every degree
/// within one of `n − 1`. Vertices of `V`, by increasing deficiency, are
/// joined to the currently least-loaded vertices of `W = n..2n`; then `H[W]`
/// realizes the remaining degrees.
pub fn embed_into_almost_regular(g: &WeightedGraph) -> Result<Embedding> {
    if !g.is_simple() {
        return Err(invalid("embedding needs a simple graph"));
    }
    let n = g.n();
    if n == 0 {
        return Err(invalid("graph must have at least one vertex"));
    }
    let mut h = WeightedGraph::empty(2 * n, GraphKind::Simple);
    for (u, v, _) in g.edges() {
        h.set_weight(u, v, 1.0)?;
    }
    let deficiency: Vec<usize> = (0..n).map(|v| n - 1 - g.degree(v) as usize).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (deficiency[v], v));
    let mut load = vec![0usize; n];
    for &v in &order {
        let mut ws: Vec<usize> = (0..n).collect();
        ws.sort_by_key(|&w| (load[w], w));
        for &w in &ws[..deficiency[v]] {
            h.set_weight(v, n + w, 1.0)?;
            load[w] += 1;
        }
    }
    let mut targets: Vec<usize> = load.iter().map(|&l| n - 1 - l).collect();
    let mut parity_repairs = Vec::new();
    let inner = loop {
        match realize_degree_sequence(&targets)? {
            Ok(inner) => break inner,
            Err(cert) => {
                let w = (0..n)
                    .filter(|&w| targets[w] > 0)
                    .max_by_key(|&w| (targets[w], std::cmp::Reverse(w)))
                    .ok_or_else(|| invalid("cannot repair an all-zero sequence"))?;
                log::warn!("W-side targets not graphic ({cert:?}); relaxing vertex {} by one", n + w);
                targets[w] -= 1;
                parity_repairs.push(n + w);
            }
        }
    };
    for (u, v, _) in inner.edges() {
        h.set_weight(n + u, n + v, 1.0)?;
    }
    let degrees: Vec<usize> = h.degrees().iter().map(|&d| d as usize).collect();
    let min_degree = *degrees.iter().min().expect("nonempty");
    let max_degree = *degrees.iter().max().expect("nonempty");
    let vs: Vec<usize> = (0..n).collect();
    let report = EmbedReport {
        n,
        induced_matches: h.induced(&vs).upper() == g.upper(),
        min_degree,
        max_degree,
        spread: max_degree - min_degree,
        parity_repairs,
    };
    Ok(Embedding { host: h, report })
}

/// `C_n(±1..±k)`: `u ~ v` iff their cyclic distance is at most `k`.
pub fn circulant(n: usize, k: usize) -> Result<WeightedGraph> {
    if 2 * k >= n {
        return Err(invalid(format!("circulant needs 2k < n (k = {k}, n = {n})")));
    }
    WeightedGraph::from_fn(n, GraphKind::Simple, |u, v| {
        let d = u.abs_diff(v);
        if d.min(n - d) <= k {
            1.0
        } else {
            0.0
        }
    })
}
