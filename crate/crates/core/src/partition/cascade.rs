//! Level-by-level refinement audit of a partition against the construction.

use serde::Serialize;

use super::{check_degular_partition, refinement_beta, PartitionVerdict};
use crate::construction::ConstructionBundle;
use crate::error::{invalid, Result};
use crate::graph::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeConfig {
    /// Below this many vertices the audit never asserts.
    pub n_floor: usize,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self { n_floor: 1 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisFlags {
    /// `32 ε / μ < δ`
    pub eps_over_mu: bool,
    /// `4000 ε < δ`
    pub eps: bool,
    /// `1600 β < δ`
    pub beta: bool,
    /// `δ < 1/2`
    pub delta: bool,
    /// `s δ ≤ 0.1`
    pub s_delta: bool,
    pub all: bool,
}

impl HypothesisFlags {
    pub fn evaluate(eps: f64, beta: f64, mu: f64, delta: f64, s: usize) -> Self {
        let eps_over_mu = mu > 0.0 && 32.0 * eps / mu < delta;
        let e = 4000.0 * eps < delta;
        let b = 1600.0 * beta < delta;
        let d = delta < 0.5;
        let sd = s as f64 * delta <= 0.1 + 1e-12;
        Self {
            eps_over_mu,
            eps: e,
            beta: b,
            delta: d,
            s_delta: sd,
            all: eps_over_mu && e && b && d && sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeLevel {
    pub r: usize,
    pub beta_r: f64,
    /// `Z` β-refines `X_{r−1}` (always false at `r = 0`).
    pub refines_previous: bool,
    /// `Z` (β + 8μ)-refines `X_r`.
    pub refines_here: bool,
    /// Refines the previous level but not this one.
    pub failure_path: bool,
    /// Non-degular pairs of `Z`, counted on the failure path.
    pub bad_pair_count: Option<usize>,
    /// Clusters `Z₀` with more than `εℓ` non-degular partners.
    pub clusters_over_eps_ell: Option<usize>,
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeReport {
    pub eps: f64,
    pub beta: f64,
    pub mu: f64,
    pub delta: f64,
    pub n: usize,
    pub ell: usize,
    pub hypotheses: HypothesisFlags,
    pub assertion_mode: bool,
    pub levels: Vec<CascadeLevel>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl CascadeReport {
    /// Plot rows `(r, beta_r, bad_pair_count)`; the count is empty off the
    /// failure path.
    pub fn csv_rows(&self) -> Vec<(usize, f64, Option<usize>)> {
        self.levels.iter().map(|l| (l.r, l.beta_r, l.bad_pair_count)).collect()
    }
}

/// Measure how well `Z` refines each level `X_r` and follow the failure
/// path: where `Z` β-refines `X_{r−1}` but not `X_r` at `β + 8μ`, count the
/// clusters with more than `εℓ` non-degular partners.
pub fn cascade_audit(
    b: &ConstructionBundle,
    z: &Partition,
    eps: f64,
    beta: f64,
    mu: f64,
    cfg: &CascadeConfig,
) -> Result<CascadeReport> {
    let n = b.levels.n();
    if z.n() != n {
        return Err(invalid(format!("partition has {} vertices, bundle {n}", z.n())));
    }
    let s = b.s();
    let delta = b.params.delta;
    let hypotheses = HypothesisFlags::evaluate(eps, beta, mu, delta, s);
    let assertion_mode = hypotheses.all && n >= cfg.n_floor;
    let betas = (0..=s)
        .map(|r| refinement_beta(z, &b.level_partition(r)).map(|rep| rep.beta))
        .collect::<Result<Vec<f64>>>()?;

    let mut verdict: Option<PartitionVerdict> = None;
    let mut levels = Vec::with_capacity(s + 1);
    for r in 0..=s {
        let refines_previous = r > 0 && betas[r - 1] <= beta + 1e-12;
        let refines_here = betas[r] <= beta + 8.0 * mu + 1e-12;
        let failure_path = refines_previous && !refines_here;
        let mut row = CascadeLevel {
            r,
            beta_r: betas[r],
            refines_previous,
            refines_here,
            failure_path,
            bad_pair_count: None,
            clusters_over_eps_ell: None,
            asserted: false,
            pass: true,
        };
        if failure_path && z.ell() >= 2 {
            if verdict.is_none() {
                verdict = Some(check_degular_partition(&b.total, z, eps)?);
            }
            let v = verdict.as_ref().expect("just computed");
            let threshold = eps * z.ell() as f64;
            let over = v.bad_counts.iter().filter(|&&c| c as f64 > threshold).count();
            row.bad_pair_count = Some(v.bad_pairs.len());
            row.clusters_over_eps_ell = Some(over);
            row.asserted = assertion_mode;
            row.pass = !assertion_mode || over > 0;
        }
        levels.push(row);
    }
    let mut notes = Vec::new();
    if betas[0] > eps {
        notes.push(format!(
            "Z is not an eps-refinement of X_0 (beta_0 = {:.4}); the cascade has no starting level",
            betas[0]
        ));
    }
    if !assertion_mode {
        notes.push(if hypotheses.all {
            format!("report-only: n = {n} below the assertion floor {}", cfg.n_floor)
        } else {
            "report-only: hypotheses on eps, beta, mu, delta, s do not all hold".to_string()
        });
    }
    let pass = levels.iter().all(|l| l.pass);
    Ok(CascadeReport {
        eps,
        beta,
        mu,
        delta,
        n,
        ell: z.ell(),
        hypotheses,
        assertion_mode,
        levels,
        notes,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_construction;

    #[test]
    fn finest_level_refines_everything() {
        let b = build_construction(64, 3, 0.02, 1, 1).unwrap();
        let z = b.level_partition(3);
        let rep = cascade_audit(&b, &z, 0.05, 0.0, 0.001, &CascadeConfig::default()).unwrap();
        assert!(rep.levels.iter().all(|l| l.beta_r == 0.0 && !l.failure_path));
        assert!(rep.pass && !rep.assertion_mode);
    }

    #[test]
    fn coarse_partition_takes_the_failure_path() {
        let b = build_construction(64, 3, 0.02, 1, 1).unwrap();
        let z = b.level_partition(1);
        let rep = cascade_audit(&b, &z, 0.05, 0.0, 0.001, &CascadeConfig::default()).unwrap();
        let row = &rep.levels[2];
        assert!(row.failure_path);
        assert_eq!(row.beta_r, 0.5);
        assert!(row.bad_pair_count.is_some());
        assert!(!rep.levels[1].failure_path && !rep.levels[3].failure_path);
        assert_eq!(rep.csv_rows().len(), 4);
    }

    #[test]
    fn hypothesis_flags() {
        let h = HypothesisFlags::evaluate(1e-6, 1e-6, 1e-2, 0.01, 10);
        assert!(h.all);
        let h = HypothesisFlags::evaluate(0.05, 0.0, 0.001, 0.02, 3);
        assert!(!h.eps && !h.eps_over_mu && h.beta && h.s_delta);
    }
}
