//! Balanced bipartition systems and `(M, D)`-separators.
//!
//! A system is `D` bipartitions `(A_i, B_i)` of the ground set `0..M`, stored as
//! a `D × M` membership matrix (row `i` marks `A_i`). A separator is a
//! 0.2-balanced system in which every element lies on the `A` side of exactly
//! `D/2` rows; for odd `D` the generalized mode accepts column sums in
//! `{⌊D/2⌋, ⌈D/2⌉}`.
//!
//! The builder is Las Vegas: a randomized first stage of `D*` rows followed by
//! a greedy completion that drives every column to its target count.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::rng::{stream_rng, Stream};

/// Default tower constant (the `9999` in `M ≤ 2^⌈D/9999⌉`).
pub const DEFAULT_C_EXP: u64 = 9999;
/// Default Las Vegas retry cap for the random stage.
pub const DEFAULT_RETRY_CAP: usize = 1000;
/// Balance parameter required of a separator.
pub const SEPARATOR_BALANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatorMode {
    /// Every column sums to exactly `D/2` (requires even `D`).
    Exact,
    /// Column sums lie in `{⌊D/2⌋, ⌈D/2⌉}`.
    Generalized,
}

impl SeparatorMode {
    pub fn for_rows(d: usize) -> Self {
        if d % 2 == 0 {
            SeparatorMode::Exact
        } else {
            SeparatorMode::Generalized
        }
    }
}

/// How a system was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuildStage {
    /// `M = 2`: half the rows are `{1}`, the rest `{2}`.
    Explicit,
    /// Random stage of `D* = 2⌈0.45 D⌉ < D` rows gated on the starred
    /// properties, then greedy completion.
    TwoStage,
    /// `2⌈0.45 D⌉ ≥ D`: the random stage takes the largest even `D* ≤ D` and
    /// the final system is gated on the full separator check instead.
    ShortSchedule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartitionSystem {
    m: usize,
    d: usize,
    mode: SeparatorMode,
    membership: Vec<Vec<bool>>,
}

impl BipartitionSystem {
    /// Rows given as 0-based element lists.
    pub fn from_rows(m: usize, rows: &[Vec<usize>], mode: SeparatorMode) -> Result<Self> {
        let mut membership = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let mut mask = vec![false; m];
            for &t in row {
                if t >= m {
                    return Err(invalid(format!("row {i}: element {t} outside 0..{m}")));
                }
                if mask[t] {
                    return Err(invalid(format!("row {i}: element {t} repeated")));
                }
                mask[t] = true;
            }
            membership.push(mask);
        }
        Ok(Self {
            m,
            d: rows.len(),
            mode,
            membership,
        })
    }

    fn from_membership(m: usize, mode: SeparatorMode, membership: Vec<Vec<bool>>) -> Self {
        Self {
            m,
            d: membership.len(),
            mode,
            membership,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> SeparatorMode {
        self.mode
    }

    /// Membership mask of `A_i`.
    pub fn row(&self, i: usize) -> &[bool] {
        &self.membership[i]
    }

    /// `A_i` as sorted 0-based elements.
    pub fn row_elements(&self, i: usize) -> Vec<usize> {
        self.membership[i]
            .iter()
            .enumerate()
            .filter_map(|(t, &x)| x.then_some(t))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.m];
        for row in &self.membership {
            for (t, &x) in row.iter().enumerate() {
                sums[t] += usize::from(x);
            }
        }
        sums
    }

    /// Per-element signatures across rows, packed in 64-bit words.
    fn signatures(&self) -> Vec<Vec<u64>> {
        let words = self.d.div_ceil(64);
        let mut sig = vec![vec![0u64; words]; self.m];
        for (i, row) in self.membership.iter().enumerate() {
            for (t, &x) in row.iter().enumerate() {
                if x {
                    sig[t][i / 64] |= 1 << (i % 64);
                }
            }
        }
        sig
    }

    /// Minimum over distinct `t < t'` of the number of rows splitting them,
    /// with the minimizing pair. `None` when `M < 2`.
    pub fn min_split(&self) -> Option<(usize, (usize, usize))> {
        min_split_of(&self.signatures())
    }

    /// Reorder-free JSON form (1-based element labels).
    pub fn to_json(&self) -> SeparatorJson {
        SeparatorJson {
            m: self.m,
            d: self.d,
            rows: (0..self.d)
                .map(|i| self.row_elements(i).into_iter().map(|t| t + 1).collect())
                .collect(),
            mode: self.mode,
        }
    }

    pub fn from_json(json: &SeparatorJson) -> Result<Self> {
        if json.rows.len() != json.d {
            return Err(invalid(format!(
                "D = {} but {} rows given",
                json.d,
                json.rows.len()
            )));
        }
        let rows: Vec<Vec<usize>> = json
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&t| {
                        t.checked_sub(1)
                            .ok_or_else(|| invalid("separator labels are 1-based"))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(json.m, &rows, json.mode)
    }
}

fn min_split_of(sig: &[Vec<u64>]) -> Option<(usize, (usize, usize))> {
    let mut best: Option<(usize, (usize, usize))> = None;
    for t in 0..sig.len() {
        for u in (t + 1)..sig.len() {
            let split: u32 = sig[t]
                .iter()
                .zip(&sig[u])
                .map(|(a, b)| (a ^ b).count_ones())
                .sum();
            let split = split as usize;
            if best.is_none_or(|(b, _)| split < b) {
                best = Some((split, (t, u)));
            }
        }
    }
    best
}

/// JSON interchange form: `{"M":…, "D":…, "rows":[[t,…],…], "mode":…}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorJson {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub rows: Vec<Vec<usize>>,
    pub mode: SeparatorMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatorReport {
    pub m: usize,
    pub d: usize,
    pub c_bal: f64,
    pub mode: SeparatorMode,
    /// BP1: every row has exactly `M/2` elements.
    pub rows_half_sized: bool,
    pub bad_rows: Vec<usize>,
    /// BP3: minimum split count over distinct pairs (`D` when `M < 2`).
    pub min_split_count: usize,
    pub min_split_fraction: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub split_threshold: f64,
    pub balanced: bool,
    /// column sum → number of elements with that sum
    pub column_histogram: BTreeMap<usize, usize>,
    pub s1_exact: bool,
    pub s1_generalized: bool,
    pub pass: bool,
}

/// Check BP1, BP3 at balance `c_bal`, and S1 in the system's declared mode.
pub fn verify_separator(s: &BipartitionSystem, c_bal: f64) -> SeparatorReport {
    let bad_rows: Vec<usize> = (0..s.d)
        .filter(|&i| s.m % 2 != 0 || s.membership[i].iter().filter(|&&x| x).count() != s.m / 2)
        .collect();
    let (min_split_count, worst_pair) = match s.min_split() {
        Some((c, p)) => (c, Some(p)),
        None => (s.d, None),
    };
    let min_split_fraction = if s.d == 0 {
        0.0
    } else {
        min_split_count as f64 / s.d as f64
    };
    let split_threshold = (0.5 - c_bal) * s.d as f64;
    let balanced = min_split_count as f64 >= split_threshold - 1e-9;

    let sums = s.column_sums();
    let mut column_histogram = BTreeMap::new();
    for &c in &sums {
        *column_histogram.entry(c).or_insert(0) += 1;
    }
    let s1_exact = s.d % 2 == 0 && sums.iter().all(|&c| 2 * c == s.d);
    let s1_generalized = sums.iter().all(|&c| c == s.d / 2 || c == s.d.div_ceil(2));
    let s1_ok = match s.mode {
        SeparatorMode::Exact => s1_exact,
        SeparatorMode::Generalized => s1_generalized,
    };
    SeparatorReport {
        m: s.m,
        d: s.d,
        c_bal,
        mode: s.mode,
        rows_half_sized: bad_rows.is_empty(),
        bad_rows,
        min_split_count,
        min_split_fraction,
        worst_pair,
        split_threshold,
        balanced,
        column_histogram,
        s1_exact,
        s1_generalized,
        pass: s.m % 2 == 0 && balanced && s1_ok && (0..s.d).all(|i| {
            s.membership[i].iter().filter(|&&x| x).count() == s.m / 2
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeparatorConfig {
    pub retry_cap: usize,
}

impl Default for SeparatorConfig {
    fn default() -> Self {
        Self {
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeparatorBuild {
    pub system: BipartitionSystem,
    pub stage: BuildStage,
    /// Random-stage draws consumed (1 = first draw accepted).
    pub attempts: usize,
}

/// `M ≤ 2^⌈D / c_exp⌉`.
pub fn size_bound_holds(m: usize, d: usize, c_exp: u64) -> bool {
    let e = (d as u64).div_ceil(c_exp);
    e >= 63 || (m as u64) <= (1u64 << e)
}

pub fn build_separator(m: usize, d: usize, c_exp: u64, seed: u64) -> Result<BipartitionSystem> {
    build_separator_with(m, d, c_exp, seed, &SeparatorConfig::default()).map(|b| b.system)
}

pub fn build_separator_with(
    m: usize,
    d: usize,
    c_exp: u64,
    seed: u64,
    cfg: &SeparatorConfig,
) -> Result<SeparatorBuild> {
    if m < 2 || m % 2 != 0 {
        return Err(invalid(format!("M = {m} must be even and at least 2")));
    }
    if d == 0 {
        return Err(invalid("D must be at least 1"));
    }
    if c_exp == 0 {
        return Err(invalid("c_exp must be at least 1"));
    }
    if !size_bound_holds(m, d, c_exp) {
        return Err(invalid(format!(
            "M = {m} exceeds 2^ceil(D/c_exp) for D = {d}, c_exp = {c_exp}"
        )));
    }
    let mode = SeparatorMode::for_rows(d);

    if m == 2 {
        let membership = (0..d)
            .map(|i| if i < d.div_ceil(2) { vec![true, false] } else { vec![false, true] })
            .collect();
        return Ok(SeparatorBuild {
            system: BipartitionSystem::from_membership(m, mode, membership),
            stage: BuildStage::Explicit,
            attempts: 0,
        });
    }

    let paper_d_star = 2 * (0.45 * d as f64).ceil() as usize;
    let (stage, d_star) = if paper_d_star < d {
        (BuildStage::TwoStage, paper_d_star)
    } else {
        (BuildStage::ShortSchedule, d - d % 2)
    };

    let mut rng = stream_rng(seed, Stream::Separator, &[m as u64, d as u64, c_exp]);
    let mut last_failure = String::from("no attempt made");
    for attempt in 1..=cfg.retry_cap.max(1) {
        let mut rows = random_stage(&mut rng, m, d_star);
        if stage == BuildStage::TwoStage {
            if let Some(failed) = starred_gate_failure(&rows, m, d) {
                last_failure = failed;
                continue;
            }
        }
        let targets = column_targets(&mut rng, m, d, mode);
        greedy_completion(&mut rows, &targets, d);
        let system = BipartitionSystem::from_membership(m, mode, rows);
        let report = verify_separator(&system, SEPARATOR_BALANCE);
        if report.pass {
            return Ok(SeparatorBuild {
                system,
                stage,
                attempts: attempt,
            });
        }
        last_failure = format!(
            "BP3: min split {} < {:.3}",
            report.min_split_count, report.split_threshold
        );
    }
    Err(Error::ConstructionFailure {
        property: last_failure,
        attempts: cfg.retry_cap.max(1),
    })
}

/// `d_star / 2` uniform half-subsets, each followed by its complement.
fn random_stage(rng: &mut ChaCha8Rng, m: usize, d_star: usize) -> Vec<Vec<bool>> {
    let mut rows = Vec::with_capacity(d_star);
    for _ in 0..d_star / 2 {
        let mut a = vec![false; m];
        for t in sample(rng, m, m / 2) {
            a[t] = true;
        }
        let b = a.iter().map(|x| !x).collect();
        rows.push(a);
        rows.push(b);
    }
    rows
}

/// Checks BP2* (`≥ 0.3 D` splits per pair) and S1* (column counts in
/// `[0.41 D, 0.49 D]`) on the random stage; returns the failed property.
fn starred_gate_failure(rows: &[Vec<bool>], m: usize, d: usize) -> Option<String> {
    let d = d as f64;
    let mut counts = vec![0usize; m];
    for row in rows {
        for (t, &x) in row.iter().enumerate() {
            counts[t] += usize::from(x);
        }
    }
    if let Some(t) = counts
        .iter()
        .position(|&c| (c as f64) < 0.41 * d || (c as f64) > 0.49 * d)
    {
        return Some(format!("S1*: element {} appears {} times", t + 1, counts[t]));
    }
    let sys = BipartitionSystem::from_membership(m, SeparatorMode::Generalized, rows.to_vec());
    if let Some((split, (t, u))) = sys.min_split() {
        if (split as f64) < 0.3 * d {
            return Some(format!("BP2*: pair ({}, {}) split {split} times", t + 1, u + 1));
        }
    }
    None
}

/// Final column sums: `D/2` for even `D`; for odd `D` a seeded uniform choice
/// of `M/2` columns get `⌈D/2⌉` and the rest `⌊D/2⌋`.
fn column_targets(rng: &mut ChaCha8Rng, m: usize, d: usize, mode: SeparatorMode) -> Vec<usize> {
    match mode {
        SeparatorMode::Exact => vec![d / 2; m],
        SeparatorMode::Generalized => {
            let mut targets = vec![d / 2; m];
            for t in sample(rng, m, m / 2) {
                targets[t] += 1;
            }
            targets
        }
    }
}

/// Appends rows until `rows.len() == d`; each new row takes the `M/2`
/// elements with the largest remaining need `χ(t)`, lowest index first.
fn greedy_completion(rows: &mut Vec<Vec<bool>>, targets: &[usize], d: usize) {
    let m = targets.len();
    let mut counts = vec![0usize; m];
    for row in rows.iter() {
        for (t, &x) in row.iter().enumerate() {
            counts[t] += usize::from(x);
        }
    }
    let r_total = d - rows.len();
    for j in 1..=r_total {
        let remaining = r_total - j + 1;
        let chi: Vec<usize> = targets
            .iter()
            .zip(&counts)
            .map(|(&tg, &c)| tg.checked_sub(c).expect("column count exceeds its target"))
            .collect();
        assert!(
            chi.iter().all(|&c| c <= remaining),
            "greedy invariant: some chi exceeds the {remaining} remaining rows"
        );
        assert_eq!(
            chi.iter().sum::<usize>(),
            remaining * m / 2,
            "greedy invariant: chi mass"
        );
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| chi[b].cmp(&chi[a]).then(a.cmp(&b)));
        let mut row = vec![false; m];
        for &t in &order[..m / 2] {
            assert!(chi[t] > 0, "greedy selected a saturated element");
            row[t] = true;
            counts[t] += 1;
        }
        rows.push(row);
    }
}

/// Nonnegative weights on `0..M` summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some(t) = lambda.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid(format!("mass at {t} is negative or not finite")));
        }
        let total: f64 = lambda.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self(lambda))
    }

    /// Uniform `1/M` on every coordinate.
    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Number of rows with `min(Σ_{A_i} λ, Σ_{B_i} λ) ≥ ζ`.
///
/// Preconditions: `ζ ∈ (0, 1/8)`, `‖λ‖_∞ ≤ 1 − 8ζ`, and `s` is
/// 1/5-balanced. Under them the count is at least `⌈D/15⌉`.
pub fn mass_split_count(s: &BipartitionSystem, lambda: &MassVector, zeta: f64) -> Result<usize> {
    if !(zeta > 0.0 && zeta < 0.125) {
        return Err(precondition(format!("zeta = {zeta} outside (0, 1/8)")));
    }
    if lambda.0.len() != s.m {
        return Err(invalid(format!(
            "mass vector has {} entries, system has M = {}",
            lambda.0.len(),
            s.m
        )));
    }
    let cap = 1.0 - 8.0 * zeta;
    if let Some(t) = lambda.0.iter().position(|&x| x > cap + 1e-12) {
        return Err(precondition(format!(
            "lambda[{}] = {} exceeds 1 - 8 zeta = {cap}",
            t + 1,
            lambda.0[t]
        )));
    }
    let report = verify_separator(s, SEPARATOR_BALANCE);
    if !(report.rows_half_sized && report.balanced) {
        return Err(precondition("bipartition system is not 1/5-balanced"));
    }
    Ok(s.membership
        .iter()
        .filter(|row| {
            let a: f64 = row
                .iter()
                .zip(&lambda.0)
                .filter_map(|(&x, &l)| x.then_some(l))
                .sum();
            let total: f64 = lambda.0.iter().sum();
            a.min(total - a) >= zeta - 1e-12
        })
        .count())
}

/// Draw uniformly from the simplex (normalized exponentials).
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn two_element_system_is_explicit() {
        let s = build_separator(2, 4, 9999, 0).unwrap();
        let rows: Vec<_> = (0..4).map(|i| s.row_elements(i)).collect();
        assert_eq!(rows, vec![vec![0], vec![0], vec![1], vec![1]]);
        let r = verify_separator(&s, 0.2);
        assert!(r.pass && r.s1_exact);
        assert_eq!(r.min_split_fraction, 1.0);
        assert_eq!(s.to_json().rows, vec![vec![1], vec![1], vec![2], vec![2]]);
    }

    #[test]
    fn single_row_on_two_elements_is_generalized() {
        let s = build_separator(2, 1, 1, 0).unwrap();
        assert_eq!(s.row_elements(0), vec![0]);
        assert_eq!(s.column_sums(), vec![1, 0]);
        assert_eq!(s.mode(), SeparatorMode::Generalized);
        let r = verify_separator(&s, 0.2);
        assert!(r.pass && r.s1_generalized && !r.s1_exact);
    }

    #[test]
    fn eight_by_forty_builds_an_exact_separator() {
        let b = build_separator_with(8, 40, 10, 7, &SeparatorConfig::default()).unwrap();
        assert_eq!(b.stage, BuildStage::TwoStage);
        let r = verify_separator(&b.system, 0.2);
        assert!(r.pass && r.s1_exact, "{r:?}");
        assert!(r.min_split_fraction >= 0.3);
        assert!(b.system.column_sums().iter().all(|&c| c == 20));
    }

    #[test]
    fn duplicate_rows_are_not_balanced() {
        let rows = vec![vec![0, 1]; 6];
        let s = BipartitionSystem::from_rows(4, &rows, SeparatorMode::Exact).unwrap();
        let r = verify_separator(&s, 0.2);
        assert!(!r.balanced && !r.pass);
        assert_eq!(r.min_split_count, 0);
        assert_eq!(r.worst_pair, Some((0, 1)));
    }

    #[test]
    fn odd_row_counts_use_generalized_targets() {
        let b = build_separator_with(4, 3, 1, 11, &SeparatorConfig::default()).unwrap();
        assert_eq!(b.stage, BuildStage::ShortSchedule);
        let r = verify_separator(&b.system, 0.2);
        assert!(r.pass && r.s1_generalized);
        let mut sums = b.system.column_sums();
        sums.sort_unstable();
        assert_eq!(sums, vec![1, 1, 2, 2]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_separator(3, 4, 1, 0).is_err());
        assert!(build_separator(4, 0, 1, 0).is_err());
        // 2^ceil(4/9999) = 2 < 4
        assert!(matches!(
            build_separator(4, 4, 9999, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn infeasible_parameters_exhaust_the_retry_cap() {
        // a row and its complement never split the pairs inside the row
        let cfg = SeparatorConfig { retry_cap: 5 };
        let err = build_separator_with(4, 2, 1, 0, &cfg).unwrap_err();
        assert!(matches!(err, Error::ConstructionFailure { attempts: 5, .. }));
    }

    #[test]
    fn builder_is_deterministic() {
        let a = build_separator(16, 60, 5, 3).unwrap();
        let b = build_separator(16, 60, 5, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_separator(16, 60, 5, 4).unwrap());
    }

    #[test]
    fn uniform_mass_splits_every_row() {
        let s = build_separator(8, 40, 10, 1).unwrap();
        let count = mass_split_count(&s, &MassVector::uniform(8), 0.1).unwrap();
        assert_eq!(count, 40);
    }

    #[test]
    fn point_mass_violates_the_sup_norm_precondition() {
        let s = build_separator(8, 40, 10, 1).unwrap();
        let mut e = vec![0.0; 8];
        e[3] = 1.0;
        let err = mass_split_count(&s, &MassVector::new(e).unwrap(), 0.1).unwrap_err();
        assert!(err.to_string().contains("lambda[4]"), "{err}");
    }

    #[test]
    fn random_masses_split_at_least_a_fifteenth_of_rows() {
        let s = build_separator(8, 40, 10, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 200 {
            let lam = random_simplex_point(&mut rng, 8);
            if lam.iter().any(|&x| x > 1.0 - 8.0 * 0.05) {
                continue;
            }
            let c = mass_split_count(&s, &MassVector::new(lam).unwrap(), 0.05).unwrap();
            assert!(c >= 3);
            checked += 1;
        }
    }

    #[test]
    fn json_round_trip() {
        let s = build_separator(8, 40, 10, 2).unwrap();
        let json = serde_json::to_string(&s.to_json()).unwrap();
        assert!(json.contains("\"M\":8") && json.contains("\"mode\":\"exact\""));
        let back: SeparatorJson = serde_json::from_str(&json).unwrap();
        assert_eq!(BipartitionSystem::from_json(&back).unwrap(), s);
    }
}
