//! Smallest complexity `ℓ` admitting a degree-form degular partition.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::check_degular_partition;
use crate::error::{invalid, Result};
use crate::graph::{Partition, VertexSet, WeightedGraph};
use crate::pair::check_degular;
use crate::par;
use crate::rng::{stream_rng, Stream};

pub const EXHAUSTIVE_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Cap on partitions evaluated (exhaustive) or swap steps (local search).
    pub budget: u64,
    pub restarts: usize,
    pub steps_per_run: u64,
    pub initial_temperature: f64,
    /// Geometric cooling ratio per step.
    pub cooling: f64,
    pub start: Option<Partition>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            budget: 10_000_000,
            restarts: 4,
            steps_per_run: 2_000,
            initial_temperature: 1.0,
            cooling: 0.99,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub mode: SearchMode,
    pub ell: Option<usize>,
    pub partition: Option<Partition>,
    /// Local search only certifies an upper bound.
    pub upper_bound_only: bool,
    pub ell_min: usize,
    pub evaluated: u64,
    pub budget_exhausted: bool,
}

/// `max(2, ⌈1/ε⌉)`: degree form needs `(1 − ε) ℓ ≤ ℓ − 1`.
pub fn min_admissible_ell(eps: f64) -> Option<usize> {
    if eps <= 0.0 {
        return None;
    }
    Some(((1.0 / eps) - 1e-9).ceil().max(2.0) as usize)
}

pub fn min_complexity_search(g: &WeightedGraph, eps: f64, cfg: &SearchConfig, seed: u64) -> Result<SearchResult> {
    let n = g.n();
    let ell_min = min_admissible_ell(eps);
    let mut result = SearchResult {
        mode: cfg.mode,
        ell: None,
        partition: None,
        upper_bound_only: cfg.mode == SearchMode::LocalSearch,
        ell_min: ell_min.unwrap_or(0),
        evaluated: 0,
        budget_exhausted: false,
    };
    let Some(ell_min) = ell_min else {
        return Ok(result);
    };
    match cfg.mode {
        SearchMode::Exhaustive => {
            if n > EXHAUSTIVE_MAX_N {
                return Err(invalid(format!(
                    "exhaustive search needs n <= {EXHAUSTIVE_MAX_N}, got {n}"
                )));
            }
            for ell in ell_min..=n {
                let candidates = equitable_partitions(n, ell);
                let left = cfg.budget - result.evaluated;
                let take = candidates.len().min(usize::try_from(left).unwrap_or(usize::MAX));
                let hit = par::find_first(&candidates[..take], |assign| {
                    valid(g, &Partition::new(n, ell, assign.clone()).expect("enumerated partition"), eps)
                });
                match hit {
                    Some(i) => {
                        result.evaluated += i as u64 + 1;
                        result.ell = Some(ell);
                        result.partition = Some(Partition::new(n, ell, candidates[i].clone())?);
                        return Ok(result);
                    }
                    None => result.evaluated += take as u64,
                }
                if take < candidates.len() {
                    result.budget_exhausted = true;
                    return Ok(result);
                }
            }
            Ok(result)
        }
        SearchMode::LocalSearch => {
            let mut ell_max = n;
            if let Some(start) = &cfg.start {
                if start.n() != n {
                    return Err(invalid("start partition is on a different vertex set"));
                }
                result.evaluated += 1;
                if start.ell() >= 2 && valid(g, start, eps) {
                    result.ell = Some(start.ell());
                    result.partition = Some(start.clone());
                    ell_max = start.ell().saturating_sub(1);
                }
            }
            for ell in ell_min..=ell_max.min(n) {
                let left = cfg.budget.saturating_sub(result.evaluated);
                if left == 0 {
                    result.budget_exhausted = true;
                    break;
                }
                let restarts = cfg.restarts.max(1);
                let steps = cfg.steps_per_run.min(left / restarts as u64).max(1);
                let runs = par::map_range(restarts, |k| {
                    let mut rng = stream_rng(seed, Stream::Search, &[ell as u64, k as u64]);
                    anneal(g, eps, ell, steps, cfg, &mut rng)
                });
                result.evaluated += runs.iter().map(|r| r.1).sum::<u64>();
                if let Some((Some(p), _)) = runs.into_iter().find(|r| r.0.is_some()) {
                    result.ell = Some(ell);
                    result.partition = Some(p);
                    break;
                }
            }
            Ok(result)
        }
    }
}

fn valid(g: &WeightedGraph, p: &Partition, eps: f64) -> bool {
    check_degular_partition(g, p, eps).map(|v| v.pass).unwrap_or(false)
}

/// Canonical (restricted-growth) assignments with cluster sizes `⌊n/ℓ⌋` or `⌈n/ℓ⌉`.
pub fn equitable_partitions(n: usize, ell: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if ell == 0 || ell > n {
        return out;
    }
    let (q, big) = (n / ell, n % ell);
    let mut assign = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(ell);
    fn rec(
        n: usize,
        ell: usize,
        q: usize,
        big: usize,
        assign: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = assign.len();
        if v == n {
            if sizes.len() == ell && sizes.iter().filter(|&&s| s == q + 1).count() == big {
                out.push(assign.clone());
            }
            return;
        }
        let deficit: usize = sizes.iter().map(|&s| q.saturating_sub(s)).sum::<usize>() + (ell - sizes.len()) * q;
        if n - v < deficit {
            return;
        }
        let full = sizes.iter().filter(|&&s| s == q + 1).count();
        for c in 0..=sizes.len().min(ell - 1) {
            let s = sizes.get(c).copied().unwrap_or(0);
            if s == q + 1 || (s == q && full == big) {
                continue;
            }
            if c == sizes.len() {
                sizes.push(0);
            }
            sizes[c] += 1;
            assign.push(c);
            rec(n, ell, q, big, assign, sizes, out);
            assign.pop();
            sizes[c] -= 1;
            if sizes[c] == 0 {
                sizes.pop();
            }
        }
    }
    rec(n, ell, q, big, &mut assign, &mut sizes, &mut out);
    out
}

struct Annealer<'a> {
    g: &'a WeightedGraph,
    eps: f64,
    ell: usize,
    members: Vec<Vec<usize>>,
    bad: Vec<Vec<bool>>,
}

impl Annealer<'_> {
    fn pair_bad(&self, i: usize, j: usize) -> bool {
        let a = VertexSet::new(self.members[i].clone()).expect("distinct members");
        let b = VertexSet::new(self.members[j].clone()).expect("distinct members");
        !check_degular(self.g, &a, &b, self.eps).map(|v| v.pass).unwrap_or(false)
    }

    fn refresh(&mut self, i: usize) {
        for j in 0..self.ell {
            if j != i {
                let b = self.pair_bad(i, j);
                self.bad[i][j] = b;
                self.bad[j][i] = b;
            }
        }
    }

    /// `violating · (ℓ² + 1) + bad pairs`: lexicographic in the two counts.
    fn objective(&self) -> u64 {
        let ell = self.ell;
        let need = (1.0 - self.eps) * ell as f64;
        let mut violating = 0u64;
        let mut pairs = 0u64;
        for row in &self.bad {
            let b = row.iter().filter(|&&x| x).count();
            pairs += b as u64;
            if ((ell - 1 - b) as f64) + 1e-9 < need {
                violating += 1;
            }
        }
        violating * (ell as u64 * ell as u64 + 1) + pairs / 2
    }
}

/// One simulated-annealing run over size-preserving swaps.
fn anneal(
    g: &WeightedGraph,
    eps: f64,
    ell: usize,
    steps: u64,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> (Option<Partition>, u64) {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut members = vec![Vec::new(); ell];
    for (k, &v) in order.iter().enumerate() {
        members[k % ell].push(v);
    }
    let mut st = Annealer {
        g,
        eps,
        ell,
        members,
        bad: vec![vec![false; ell]; ell],
    };
    for i in 0..ell {
        for j in (i + 1)..ell {
            let b = st.pair_bad(i, j);
            st.bad[i][j] = b;
            st.bad[j][i] = b;
        }
    }
    let mut f = st.objective();
    let mut temp = cfg.initial_temperature;
    let mut used = 0;
    while f > 0 && used < steps {
        used += 1;
        let (ci, cj) = {
            let ci = rng.gen_range(0..ell);
            let mut cj = rng.gen_range(0..ell - 1);
            if cj >= ci {
                cj += 1;
            }
            (ci, cj)
        };
        let (pi, pj) = (rng.gen_range(0..st.members[ci].len()), rng.gen_range(0..st.members[cj].len()));
        let saved = st.bad.clone();
        let (u, v) = (st.members[ci][pi], st.members[cj][pj]);
        st.members[ci][pi] = v;
        st.members[cj][pj] = u;
        st.refresh(ci);
        st.refresh(cj);
        let nf = st.objective();
        let accept = nf <= f || rng.gen::<f64>() < (-((nf - f) as f64) / temp.max(1e-300)).exp();
        if accept {
            f = nf;
        } else {
            st.members[ci][pi] = u;
            st.members[cj][pj] = v;
            st.bad = saved;
        }
        temp *= cfg.cooling;
    }
    if f > 0 {
        return (None, used);
    }
    let mut assign = vec![0; n];
    for (c, ms) in st.members.iter().enumerate() {
        for &v in ms {
            assign[v] = c;
        }
    }
    let p = Partition::new(n, ell, assign).expect("annealer keeps clusters nonempty");
    (Some(p), used)
}
