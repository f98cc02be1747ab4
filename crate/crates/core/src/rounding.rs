//! Randomized rounding of a weighted graph and the density-deviation audit.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, precondition, Result};
use crate::graph::{GraphKind, VertexSet, WeightedGraph};
use crate::pair::check_degular;
use crate::par;
use crate::rng::{derive, stream_rng, Stream};

/// Independent coin flip per pair with the weight as probability. Row `u`
/// draws from its own stream keyed by `(seed, u)`, so the result does not
/// depend on scheduling.
pub fn round_to_simple(gw: &WeightedGraph, seed: u64) -> WeightedGraph {
    let mut out = WeightedGraph::empty(gw.n(), GraphKind::Simple);
    par::for_each_row(out.rows_mut(), |u, row| {
        let mut rng = stream_rng(seed, Stream::Rounding, &[u as u64]);
        for (slot, &w) in row.iter_mut().zip(gw.row(u)) {
            let x: f64 = rng.gen();
            *slot = if x < w { 1.0 } else { 0.0 };
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// `⌈20 ζ⁻² log n⌉`.
pub fn sampling_floor(n: usize, zeta: f64, base: LogBase) -> usize {
    (20.0 / (zeta * zeta) * base.log(n as f64)).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub zeta: f64,
    pub samples: usize,
    /// Defaults to [`sampling_floor`].
    pub min_size: Option<usize>,
    pub log_base: LogBase,
    pub seed: u64,
}

impl AuditConfig {
    pub fn new(zeta: f64, samples: usize, seed: u64) -> Self {
        Self {
            zeta,
            samples,
            min_size: None,
            log_base: LogBase::Natural,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingAudit {
    pub config: AuditConfig,
    pub min_size: usize,
    pub max_deviation: f64,
    pub exceedances: usize,
    pub exceed_fraction: f64,
    pub pass: bool,
}

/// Sample `samples` pairs of random sets, each of a uniform size in
/// `min_size..=n` (the two sets may overlap), and compare densities.
pub fn audit_rounding(gw: &WeightedGraph, gs: &WeightedGraph, cfg: &AuditConfig) -> Result<RoundingAudit> {
    let n = gw.n();
    if gs.n() != n {
        return Err(invalid("graphs have different orders"));
    }
    if !(cfg.zeta > 0.0) {
        return Err(invalid(format!("zeta = {} must be positive", cfg.zeta)));
    }
    let min_size = cfg.min_size.unwrap_or_else(|| sampling_floor(n, cfg.zeta, cfg.log_base));
    if min_size > n || min_size == 0 {
        return Err(invalid(format!("sampling floor {min_size} not in 1..={n}")));
    }
    let devs: Vec<f64> = par::map_range(cfg.samples, |k| {
        let mut rng = stream_rng(cfg.seed, Stream::AuditRounding, &[k as u64]);
        let mut draw = || {
            let size = rng.gen_range(min_size..=n);
            sample(&mut rng, n, size).into_vec()
        };
        let (a, b) = (draw(), draw());
        let area = (a.len() * b.len()) as f64;
        (gw.cross_sum(&a, &b) / area - gs.cross_sum(&a, &b) / area).abs()
    });
    let exceedances = devs.iter().filter(|&&d| d > cfg.zeta).count();
    Ok(RoundingAudit {
        config: *cfg,
        min_size,
        max_deviation: devs.iter().copied().fold(0.0, f64::max),
        exceedances,
        exceed_fraction: if cfg.samples == 0 { 0.0 } else { exceedances as f64 / cfg.samples as f64 },
        pass: exceedances == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub graph: WeightedGraph,
    pub audit: RoundingAudit,
    /// Seed actually used for the accepted draw.
    pub seed: u64,
    pub retries: usize,
}

/// Redraw until the audit passes, at most `max_retries` extra times; the
/// last draw is returned either way.
pub fn round_with_retries(gw: &WeightedGraph, seed: u64, audit: &AuditConfig, max_retries: usize) -> Result<RoundingOutcome> {
    let mut attempt = 0;
    loop {
        let s = if attempt == 0 {
            seed
        } else {
            derive(seed, Stream::Rounding, &[u64::MAX, attempt as u64])
        };
        let graph = round_to_simple(gw, s);
        let report = audit_rounding(gw, &graph, audit)?;
        if report.pass || attempt == max_retries {
            return Ok(RoundingOutcome {
                graph,
                audit: report,
                seed: s,
                retries: attempt,
            });
        }
        attempt += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub eps_simple: f64,
    pub eps_weighted: f64,
    pub zeta: f64,
    pub pass_weighted: bool,
    pub violators_weighted_a: Vec<usize>,
    pub violators_weighted_b: Vec<usize>,
    /// Vertices violating in both graphs.
    pub overlap_a: Vec<usize>,
    pub overlap_b: Vec<usize>,
    /// `|d_w(A, B) − d_s(A, B)|`.
    pub density_gap: f64,
    /// Largest density gap over the pair and the weighted violator sets.
    pub max_rounding_gap: f64,
    /// The rounding itself moved a density by more than `ζ`.
    pub rounding_suspect: bool,
    pub asserted: bool,
    pub pass: bool,
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().filter(|v| b.binary_search(v).is_ok()).copied().collect()
}

/// A pair degular at `ε'` in the rounded graph should be `4ε'`-degular in
/// the weighted one. Asserted only when `ζ ≤ ε'` and both sides reach the
/// sampling floor.
pub fn degularity_transfer_check(
    gw: &WeightedGraph,
    gs: &WeightedGraph,
    a: &VertexSet,
    b: &VertexSet,
    eps: f64,
    zeta: f64,
    floor: usize,
) -> Result<TransferReport> {
    let simple = check_degular(gs, a, b, eps)?;
    if !simple.pass {
        return Err(precondition(format!("(A, B) is not {eps}-degular in the rounded graph")));
    }
    let weighted = check_degular(gw, a, b, 4.0 * eps)?;
    let at_eps = check_degular(gw, a, b, eps)?;
    let gap = |x: &[usize], y: &[usize]| {
        let area = (x.len() * y.len()) as f64;
        (gw.cross_sum(x, y) / area - gs.cross_sum(x, y) / area).abs()
    };
    let density_gap = gap(a.as_slice(), b.as_slice());
    let mut max_gap = density_gap;
    for set in [&at_eps.low_a, &at_eps.high_a] {
        if !set.is_empty() {
            max_gap = max_gap.max(gap(set, b.as_slice()));
        }
    }
    for set in [&at_eps.low_b, &at_eps.high_b] {
        if !set.is_empty() {
            max_gap = max_gap.max(gap(a.as_slice(), set));
        }
    }
    let asserted = zeta <= eps && a.len() >= floor && b.len() >= floor;
    Ok(TransferReport {
        eps_simple: eps,
        eps_weighted: 4.0 * eps,
        zeta,
        pass_weighted: weighted.pass,
        overlap_a: intersect(&weighted.violators_a, &simple.violators_a),
        overlap_b: intersect(&weighted.violators_b, &simple.violators_b),
        violators_weighted_a: weighted.violators_a,
        violators_weighted_b: weighted.violators_b,
        density_gap,
        max_rounding_gap: max_gap,
        rounding_suspect: max_gap > zeta,
        asserted,
        pass: !asserted || weighted.pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(n: usize, w: f64) -> WeightedGraph {
        WeightedGraph::from_fn(n, GraphKind::Weighted, |_, _| w).unwrap()
    }

    #[test]
    fn zero_and_one_weights_are_kept() {
        let ones = round_to_simple(&constant(30, 1.0), 3);
        assert_eq!(ones.edge_count(), 30 * 29 / 2);
        assert_eq!(round_to_simple(&constant(30, 0.0), 3).edge_count(), 0);
    }

    #[test]
    fn half_weights_give_binomial_edge_counts() {
        let g = constant(1000, 0.5);
        let m = (1000 * 999 / 2) as f64;
        let sd = (m * 0.25).sqrt();
        for seed in 0..3 {
            let count = round_to_simple(&g, seed).edge_count() as f64;
            assert!((count - m / 2.0).abs() <= 4.0 * sd, "seed {seed}: {count}");
        }
    }

    #[test]
    fn rounding_is_deterministic() {
        let g = constant(50, 0.3);
        assert_eq!(round_to_simple(&g, 9), round_to_simple(&g, 9));
        assert_ne!(round_to_simple(&g, 9), round_to_simple(&g, 10));
    }

    #[test]
    fn identity_audit_and_trivial_zeta() {
        let g = round_to_simple(&constant(40, 0.5), 1);
        let mut cfg = AuditConfig::new(0.1, 50, 2);
        cfg.min_size = Some(10);
        let rep = audit_rounding(&g, &g, &cfg).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        let w = constant(40, 0.5);
        cfg.zeta = 1.0;
        assert!(audit_rounding(&w, &g, &cfg).unwrap().pass);
    }

    #[test]
    fn oversized_floor_is_an_argument_error() {
        let g = constant(64, 0.5);
        assert_eq!(sampling_floor(4096, 0.1, LogBase::Natural), 16636);
        assert!(audit_rounding(&g, &g, &AuditConfig::new(0.1, 10, 0)).is_err());
    }

    #[test]
    fn transfer_flags_unrelated_rounding() {
        let n = 40;
        let gw = constant(n, 0.9);
        let gs = WeightedGraph::empty(n, GraphKind::Simple);
        let a = VertexSet::range(0, 20);
        let b = VertexSet::range(20, 40);
        let rep = degularity_transfer_check(&gw, &gs, &a, &b, 0.05, 0.05, 1).unwrap();
        assert!(rep.rounding_suspect);
        assert!(rep.pass_weighted);
        // half of A fully joined to B: far from degular in the weighted graph
        let split = WeightedGraph::from_fn(n, GraphKind::Weighted, |u, v| {
            let (lo, hi) = (u.min(v), u.max(v));
            if lo < 10 && hi >= 20 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let rep = degularity_transfer_check(&split, &gs, &a, &b, 0.05, 0.05, 1).unwrap();
        assert!(!rep.pass_weighted && !rep.pass);
        assert!(rep.asserted && rep.rounding_suspect);
        let same = degularity_transfer_check(&gs, &gs, &a, &b, 0.05, 0.05, 1).unwrap();
        assert!(same.pass && !same.rounding_suspect);
    }

    #[test]
    fn retries_stop_on_pass() {
        let g = constant(60, 0.5);
        let mut cfg = AuditConfig::new(0.2, 20, 0);
        cfg.min_size = Some(30);
        let out = round_with_retries(&g, 4, &cfg, 5).unwrap();
        assert!(out.audit.pass);
        assert_eq!(out.retries, 0);
    }
}
