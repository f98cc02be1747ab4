//! Degularity and regularity of a single pair `(A, B)`.

use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::graph::{validate_pair, GraphKind, VertexSet, WeightedGraph, DEFAULT_TOL};
use crate::par;

/// Exhaustive regularity checks enumerate every subset of each side.
pub const EXHAUSTIVE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegularityVerdict {
    pub eps: f64,
    pub density: f64,
    /// `e(A, B) / |A|`, the mean degree of `A` into `B`.
    pub mean_a: f64,
    /// `e(A, B) / |B|`.
    pub mean_b: f64,
    /// Vertices of `A` whose degree into `B` is off the mean by more than `ε|B|`.
    pub violators_a: Vec<usize>,
    pub violators_b: Vec<usize>,
    /// Violators below the mean (`A_1`) and above it (`A_2`).
    pub low_a: Vec<usize>,
    pub high_a: Vec<usize>,
    pub low_b: Vec<usize>,
    pub high_b: Vec<usize>,
    pub pass: bool,
}

enum Side {
    Low,
    High,
    Ok,
}

/// Classify `deg(v, other)` against the mean, exactly for simple graphs.
fn classify(
    g: &WeightedGraph,
    side: &VertexSet,
    other: &VertexSet,
    total: f64,
    eps: f64,
) -> (Vec<usize>, Vec<usize>) {
    let (ns, no) = (side.len() as f64, other.len() as f64);
    let degs: Vec<f64> = par::map_slice(side.as_slice(), |&v| {
        other.iter().map(|u| g.weight(v, u)).sum()
    });
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (&v, &d) in side.as_slice().iter().zip(&degs) {
        let verdict = if g.kind() == GraphKind::Simple {
            // |A| deg − e is an integer; compare against ε |A| |B| without division
            let diff = ns * d - total;
            let bound = eps * ns * no;
            if diff < -bound {
                Side::Low
            } else if diff > bound {
                Side::High
            } else {
                Side::Ok
            }
        } else {
            let bound = eps * no + DEFAULT_TOL * no;
            let diff = d - total / ns;
            if diff < -bound {
                Side::Low
            } else if diff > bound {
                Side::High
            } else {
                Side::Ok
            }
        };
        match verdict {
            Side::Low => low.push(v),
            Side::High => high.push(v),
            Side::Ok => {}
        }
    }
    (low, high)
}

fn merged(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

fn within_fraction(count: usize, eps: f64, size: usize) -> bool {
    count as f64 <= eps * size as f64 + 1e-12
}

/// Linear-time exact degularity check: the violator sets are the minimal
/// exceptional sets, so no subset search is needed.
pub fn check_degular(g: &WeightedGraph, a: &VertexSet, b: &VertexSet, eps: f64) -> Result<DegularityVerdict> {
    validate_pair(g, a, b)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(invalid(format!("eps = {eps} must be nonnegative")));
    }
    let total = g.cross_sum(a.as_slice(), b.as_slice());
    let (low_a, high_a) = classify(g, a, b, total, eps);
    let (low_b, high_b) = classify(g, b, a, total, eps);
    let violators_a = merged(&low_a, &high_a);
    let violators_b = merged(&low_b, &high_b);
    let pass = within_fraction(violators_a.len(), eps, a.len())
        && within_fraction(violators_b.len(), eps, b.len());
    Ok(DegularityVerdict {
        eps,
        density: total / (a.len() as f64 * b.len() as f64),
        mean_a: total / a.len() as f64,
        mean_b: total / b.len() as f64,
        violators_a,
        violators_b,
        low_a,
        high_a,
        low_b,
        high_b,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityMethod {
    Exhaustive,
    DegreeWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityWitness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub density: f64,
    pub pair_density: f64,
    pub deviation: f64,
}

impl RegularityWitness {
    /// Re-check `|A'| > ε|A|`, `|B'| > ε|B|`, `|d(A',B') − d(A,B)| > ε`.
    pub fn certifies(&self, g: &WeightedGraph, a: &VertexSet, b: &VertexSet, eps: f64) -> bool {
        if self.a.is_empty() || self.b.is_empty() {
            return false;
        }
        if self.a.iter().any(|v| !a.contains(*v)) || self.b.iter().any(|v| !b.contains(*v)) {
            return false;
        }
        let sub = g.cross_sum(&self.a, &self.b) / (self.a.len() * self.b.len()) as f64;
        let whole = g.cross_sum(a.as_slice(), b.as_slice()) / (a.len() * b.len()) as f64;
        self.a.len() as f64 > eps * a.len() as f64
            && self.b.len() as f64 > eps * b.len() as f64
            && (sub - whole).abs() > eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub eps: f64,
    pub pass: bool,
    pub witness: Option<RegularityWitness>,
    pub method: RegularityMethod,
}

fn mask_members(mask: u32, side: &[usize]) -> Vec<usize> {
    side.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// Exhaustive check over all subset pairs with `|A'| > ε|A|`, `|B'| > ε|B|`.
/// On failure returns the subset pair of largest deviation (ties to the
/// smallest masks).
pub fn check_regular_exhaustive(g: &WeightedGraph, a: &VertexSet, b: &VertexSet, eps: f64) -> Result<RegularityVerdict> {
    validate_pair(g, a, b)?;
    if a.len() > EXHAUSTIVE_CAP || b.len() > EXHAUSTIVE_CAP {
        return Err(Error::Capacity(format!(
            "exhaustive regularity needs |A|, |B| <= {EXHAUSTIVE_CAP} (got {}, {}); use the degree witness",
            a.len(),
            b.len()
        )));
    }
    if eps.is_nan() || eps < 0.0 {
        return Err(invalid(format!("eps = {eps} must be nonnegative")));
    }
    let (na, nb) = (a.len(), b.len());
    let simple = g.is_simple();
    let total = g.cross_sum(a.as_slice(), b.as_slice());
    let whole = total / (na * nb) as f64;
    let b_masks: Vec<u32> = (1u32..1 << nb)
        .filter(|m| m.count_ones() as f64 > eps * nb as f64)
        .collect();
    let a_masks: Vec<u32> = (1u32..1 << na)
        .filter(|m| m.count_ones() as f64 > eps * na as f64)
        .collect();
    let tol = if simple { 0.0 } else { DEFAULT_TOL };

    let best: Vec<Option<(f64, u32, u32)>> = par::map_slice(&a_masks, |&am| {
        let mut col = vec![0.0f64; nb];
        for (i, &u) in a.as_slice().iter().enumerate() {
            if am >> i & 1 == 1 {
                for (j, v) in b.iter().enumerate() {
                    col[j] += g.weight(u, v);
                }
            }
        }
        let mut sums = vec![0.0f64; 1 << nb];
        for m in 1usize..1 << nb {
            let low = m.trailing_zeros() as usize;
            sums[m] = sums[m & (m - 1)] + col[low];
        }
        let ka = am.count_ones() as f64;
        let mut best: Option<(f64, u32, u32)> = None;
        for &bm in &b_masks {
            let kb = bm.count_ones() as f64;
            let dev = if simple {
                // integer numerators, one rounding at the end
                (sums[bm as usize] * (na * nb) as f64 - total * ka * kb).abs() / (ka * kb * (na * nb) as f64)
            } else {
                (sums[bm as usize] / (ka * kb) - whole).abs()
            };
            let violates = if simple {
                (sums[bm as usize] * (na * nb) as f64 - total * ka * kb).abs() > eps * ka * kb * (na * nb) as f64
            } else {
                dev > eps + tol
            };
            if violates && best.is_none_or(|(d, _, _)| dev > d) {
                best = Some((dev, am, bm));
            }
        }
        best
    });
    let winner = best.into_iter().flatten().fold(None, |acc: Option<(f64, u32, u32)>, cand| match acc {
        Some(cur) if cur.0 >= cand.0 => Some(cur),
        _ => Some(cand),
    });
    let witness = winner.map(|(dev, am, bm)| {
        let wa = mask_members(am, a.as_slice());
        let wb = mask_members(bm, b.as_slice());
        let density = g.cross_sum(&wa, &wb) / (wa.len() * wb.len()) as f64;
        RegularityWitness {
            a: wa,
            b: wb,
            density,
            pair_density: whole,
            deviation: dev,
        }
    });
    Ok(RegularityVerdict {
        eps,
        pass: witness.is_none(),
        witness,
        method: RegularityMethod::Exhaustive,
    })
}

/// One-sided witness from the low or high violator sets at `ε`: sound (any
/// witness certifies `ε`-irregularity) but incomplete.
pub fn degree_witness_irregularity(
    g: &WeightedGraph,
    a: &VertexSet,
    b: &VertexSet,
    eps: f64,
) -> Result<Option<RegularityWitness>> {
    if eps >= 1.0 {
        return Ok(None);
    }
    let v = check_degular(g, a, b, eps)?;
    let whole = v.density;
    let candidates = [
        (&v.low_a, true),
        (&v.high_a, true),
        (&v.low_b, false),
        (&v.high_b, false),
    ];
    for (set, on_a) in candidates {
        let size = if on_a { a.len() } else { b.len() };
        if set.len() as f64 > eps * size as f64 {
            let (wa, wb) = if on_a {
                (set.clone(), b.as_slice().to_vec())
            } else {
                (a.as_slice().to_vec(), set.clone())
            };
            let density = g.cross_sum(&wa, &wb) / (wa.len() * wb.len()) as f64;
            return Ok(Some(RegularityWitness {
                a: wa,
                b: wb,
                density,
                pair_density: whole,
                deviation: (density - whole).abs(),
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetBoundReport {
    pub eps: f64,
    pub subset_density: f64,
    pub pair_density: f64,
    /// `|d(X, B) − d(A, B)|`.
    pub deviation: f64,
    /// `(1 + |A| / |X|) ε`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// For a degular pair, density from any nonempty `X ⊆ A` into `B` stays
/// within `(1 + |A|/|X|) ε` of `d(A, B)`.
pub fn subset_density_bound_check(
    g: &WeightedGraph,
    a: &VertexSet,
    b: &VertexSet,
    x: &VertexSet,
    eps: f64,
) -> Result<SubsetBoundReport> {
    if x.is_empty() {
        return Err(invalid("X must be nonempty"));
    }
    if x.iter().any(|v| !a.contains(v)) {
        return Err(invalid("X must be a subset of A"));
    }
    let v = check_degular(g, a, b, eps)?;
    if !v.pass {
        return Err(precondition(format!("(A, B) is not {eps}-degular")));
    }
    let sub = g.cross_sum(x.as_slice(), b.as_slice()) / (x.len() * b.len()) as f64;
    let deviation = (sub - v.density).abs();
    let bound = (1.0 + a.len() as f64 / x.len() as f64) * eps;
    Ok(SubsetBoundReport {
        eps,
        subset_density: sub,
        pair_density: v.density,
        deviation,
        bound,
        slack: bound - deviation,
        holds: deviation <= bound + DEFAULT_TOL,
    })
}

/// The half-half pair: `A = A¹ ∪ A²`, `B = B¹ ∪ B²` with `(A^i, B^i)`
/// complete and the crossing pairs empty. Vertices `0..2h` form `A`.
pub fn gallery_pair(half: usize) -> (WeightedGraph, VertexSet, VertexSet) {
    let n = 4 * half;
    let mut edges = Vec::new();
    for i in 0..2 {
        for u in i * half..(i + 1) * half {
            for v in (2 + i) * half..(3 + i) * half {
                edges.push((u, v));
            }
        }
    }
    let g = WeightedGraph::from_edges(n, &edges).expect("gallery edges are valid");
    (g, VertexSet::range(0, 2 * half), VertexSet::range(2 * half, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete_pair(k: usize) -> (WeightedGraph, VertexSet, VertexSet) {
        let mut edges = Vec::new();
        for u in 0..k {
            for v in k..2 * k {
                edges.push((u, v));
            }
        }
        (
            WeightedGraph::from_edges(2 * k, &edges).unwrap(),
            VertexSet::range(0, k),
            VertexSet::range(k, 2 * k),
        )
    }

    fn random_pair(rng: &mut ChaCha8Rng, k: usize, p: f64, weighted: bool) -> (WeightedGraph, VertexSet, VertexSet) {
        let mut g = WeightedGraph::empty(2 * k, if weighted { GraphKind::Weighted } else { GraphKind::Simple });
        for u in 0..k {
            for v in k..2 * k {
                let w = if weighted {
                    rng.gen::<f64>()
                } else if rng.gen_bool(p) {
                    1.0
                } else {
                    0.0
                };
                g.set_weight(u, v, w).unwrap();
            }
        }
        (g, VertexSet::range(0, k), VertexSet::range(k, 2 * k))
    }

    /// Independent brute force: plain nested loops over subsets, no DP.
    fn brute_regular(g: &WeightedGraph, a: &VertexSet, b: &VertexSet, eps: f64) -> bool {
        let av: Vec<usize> = a.iter().collect();
        let bv: Vec<usize> = b.iter().collect();
        let d = g.cross_sum(&av, &bv) / (av.len() * bv.len()) as f64;
        for am in 1u32..1 << av.len() {
            let sa: Vec<usize> = (0..av.len()).filter(|i| am >> i & 1 == 1).map(|i| av[i]).collect();
            if sa.len() as f64 <= eps * av.len() as f64 {
                continue;
            }
            for bm in 1u32..1 << bv.len() {
                let sb: Vec<usize> = (0..bv.len()).filter(|i| bm >> i & 1 == 1).map(|i| bv[i]).collect();
                if sb.len() as f64 <= eps * bv.len() as f64 {
                    continue;
                }
                let e: f64 = sa.iter().map(|&u| sb.iter().map(|&v| g.weight(u, v)).sum::<f64>()).sum();
                if (e / (sa.len() * sb.len()) as f64 - d).abs() > eps + 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn complete_pair_is_degular_and_regular() {
        let (g, a, b) = complete_pair(5);
        let v = check_degular(&g, &a, &b, 0.0).unwrap();
        assert!(v.pass && v.violators_a.is_empty() && v.violators_b.is_empty());
        assert!(check_regular_exhaustive(&g, &a, &b, 0.1).unwrap().pass);
        assert!(degree_witness_irregularity(&g, &a, &b, 0.1).unwrap().is_none());
    }

    #[test]
    fn gallery_pair_degular_but_irregular() {
        let (g, a, b) = gallery_pair(4);
        let v = check_degular(&g, &a, &b, 0.0).unwrap();
        assert!(v.pass && v.violators_a.is_empty());
        let r = check_regular_exhaustive(&g, &a, &b, 0.499).unwrap();
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!(w.a, vec![0, 1, 2, 3]);
        assert_eq!(w.b, vec![8, 9, 10, 11]);
        assert_eq!((w.density, w.pair_density), (1.0, 0.5));
        assert!(w.certifies(&g, &a, &b, 0.499));
        assert!(degree_witness_irregularity(&g, &a, &b, 0.4).unwrap().is_none());
    }

    #[test]
    fn single_hub_vertex_breaks_degularity() {
        let edges: Vec<(usize, usize)> = (10..20).map(|v| (0, v)).collect();
        let g = WeightedGraph::from_edges(20, &edges).unwrap();
        let (a, b) = (VertexSet::range(0, 10), VertexSet::range(10, 20));
        let v = check_degular(&g, &a, &b, 0.05).unwrap();
        assert!(!v.pass);
        assert_eq!(v.high_a, vec![0]);
        assert!(v.violators_a.len() as f64 > 0.5);
    }

    #[test]
    fn capacity_error_above_cap() {
        let (g, a, b) = complete_pair(13);
        assert!(matches!(check_regular_exhaustive(&g, &a, &b, 0.1), Err(Error::Capacity(_))));
    }

    #[test]
    fn rejects_overlapping_or_empty_sets() {
        let (g, a, _) = complete_pair(3);
        assert!(check_degular(&g, &a, &a, 0.1).is_err());
        assert!(check_degular(&g, &a, &VertexSet::new(vec![]).unwrap(), 0.1).is_err());
    }

    #[test]
    fn exhaustive_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..40 {
            let (g, a, b) = random_pair(&mut rng, 6, 0.5, trial % 4 == 0);
            for eps in [0.1, 0.3] {
                let fast = check_regular_exhaustive(&g, &a, &b, eps).unwrap();
                assert_eq!(fast.pass, brute_regular(&g, &a, &b, eps), "trial {trial} eps {eps}");
                if let Some(w) = fast.witness {
                    assert!(w.certifies(&g, &a, &b, eps));
                }
            }
        }
    }

    #[test]
    fn subset_bound_identity_and_precondition() {
        let (g, a, b) = complete_pair(4);
        let r = subset_density_bound_check(&g, &a, &b, &VertexSet::new(vec![1, 2]).unwrap(), 0.1).unwrap();
        assert_eq!(r.deviation, 0.0);
        let r = subset_density_bound_check(&g, &a, &b, &a, 0.2).unwrap();
        assert!(r.holds && (r.bound - 0.4).abs() < 1e-15);
        let edges: Vec<(usize, usize)> = (4..8).map(|v| (0, v)).collect();
        let star = WeightedGraph::from_edges(8, &edges).unwrap();
        assert!(matches!(
            subset_density_bound_check(&star, &a, &b, &a, 0.1),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn degularity_is_monotone_in_eps(seed in any::<u64>(), e1 in 0.0f64..0.6, bump in 0.0f64..0.4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, a, b) = random_pair(&mut rng, 7, 0.4, seed % 2 == 0);
            if check_degular(&g, &a, &b, e1).unwrap().pass {
                prop_assert!(check_degular(&g, &a, &b, e1 + bump).unwrap().pass);
            }
        }

        #[test]
        fn violators_are_exactly_the_out_of_band_vertices(seed in any::<u64>(), eps in 0.0f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, a, b) = random_pair(&mut rng, 8, 0.5, seed % 3 == 0);
            let v = check_degular(&g, &a, &b, eps).unwrap();
            for u in a.iter() {
                let d: f64 = b.iter().map(|w| g.weight(u, w)).sum();
                let off = (d - v.mean_a).abs() > eps * b.len() as f64 + 1e-9 * b.len() as f64;
                prop_assert_eq!(off, v.violators_a.contains(&u));
            }
        }

        #[test]
        fn degree_witness_is_sound(seed in any::<u64>(), eps in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, a, b) = random_pair(&mut rng, 9, 0.3, seed % 2 == 1);
            if let Some(w) = degree_witness_irregularity(&g, &a, &b, eps).unwrap() {
                prop_assert!(w.certifies(&g, &a, &b, eps));
            }
        }

        #[test]
        fn regular_implies_twice_degular(seed in any::<u64>(), eps in 0.05f64..0.4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, a, b) = random_pair(&mut rng, 6, 0.5, false);
            if check_regular_exhaustive(&g, &a, &b, eps).unwrap().pass {
                let one = check_degular(&g, &a, &b, eps).unwrap();
                prop_assert!(one.low_a.len() as f64 <= eps * 6.0 && one.high_a.len() as f64 <= eps * 6.0);
                prop_assert!(check_degular(&g, &a, &b, 2.0 * eps).unwrap().pass);
            }
        }
    }
}
