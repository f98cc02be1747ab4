//! Regular bipartite tournaments between the sub-blocks of a level.
//!
//! Nodes are `(block, sub)` with `block < m_prev` and `sub < M`. For every
//! block pair `i < j` an `M × M` orientation matrix `O_ij` says whether the arc
//! runs `(i, t) → (j, t')` (`true`) or `(j, t') → (i, t)` (`false`).

use serde::Serialize;

use crate::error::{invalid, Result};

/// The cyclic orientation: `O[t][t'] = true` iff `t'` is one of the `M/2`
/// residues starting at `t`. Indices are 0-based here; with 1-based labels
/// this is `t' ∈ {t, t+1, …, t+M/2−1} mod M`.
pub fn build_cyclic_tournament(m: usize) -> Result<Vec<Vec<bool>>> {
    if m < 2 || m % 2 != 0 {
        return Err(invalid(format!("M = {m} must be even and at least 2")));
    }
    Ok((0..m)
        .map(|t| (0..m).map(|u| (u + m - t) % m < m / 2).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TournamentLayer {
    m_prev: usize,
    m: usize,
    /// Row-major `M × M` matrices, one per block pair in lexicographic order.
    pairs: Vec<Vec<bool>>,
}

fn pair_index(m_prev: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m_prev);
    // pairs (0,1),(0,2),…,(0,m-1),(1,2),…
    i * (2 * m_prev - i - 1) / 2 + (j - i - 1)
}

/// Same cyclic matrix on every block pair.
pub fn build_layer(m_prev: usize, m: usize) -> Result<TournamentLayer> {
    if m_prev < 2 {
        return Err(invalid(format!("m_prev = {m_prev} must be at least 2")));
    }
    let cyc = build_cyclic_tournament(m)?;
    let flat: Vec<bool> = cyc.into_iter().flatten().collect();
    Ok(TournamentLayer {
        m_prev,
        m,
        pairs: vec![flat; m_prev * (m_prev - 1) / 2],
    })
}

impl TournamentLayer {
    pub fn m_prev(&self) -> usize {
        self.m_prev
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Target in/out-degree `(m_prev − 1) · M / 2`.
    pub fn degree(&self) -> usize {
        (self.m_prev - 1) * self.m / 2
    }

    pub fn node_count(&self) -> usize {
        self.m_prev * self.m
    }

    /// Flat node id `block · M + sub`.
    pub fn node(&self, block: usize, sub: usize) -> usize {
        block * self.m + sub
    }

    /// Whether the arc between two nodes in different blocks runs `a → b`.
    /// `None` for nodes in the same block.
    pub fn arc(&self, a: usize, b: usize) -> Option<bool> {
        let (bi, ti) = (a / self.m, a % self.m);
        let (bj, tj) = (b / self.m, b % self.m);
        match bi.cmp(&bj) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => {
                Some(self.pairs[pair_index(self.m_prev, bi, bj)][ti * self.m + tj])
            }
            std::cmp::Ordering::Greater => {
                Some(!self.pairs[pair_index(self.m_prev, bj, bi)][tj * self.m + ti])
            }
        }
    }

    /// Flip the orientation of one arc (fault injection and alternative layers).
    pub fn flip(&mut self, a: usize, b: usize) -> Result<()> {
        let (bi, ti) = (a / self.m, a % self.m);
        let (bj, tj) = (b / self.m, b % self.m);
        if a >= self.node_count() || b >= self.node_count() || bi == bj {
            return Err(invalid("flip needs nodes in two different blocks"));
        }
        let (lo, hi, tl, th) = if bi < bj { (bi, bj, ti, tj) } else { (bj, bi, tj, ti) };
        let cell = &mut self.pairs[pair_index(self.m_prev, lo, hi)][tl * self.m + th];
        *cell = !*cell;
        Ok(())
    }

    /// Sorted in-neighbours of `node`.
    pub fn in_neighbors(&self, node: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&u| self.arc(u, node) == Some(true))
            .collect()
    }

    pub fn out_neighbors(&self, node: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&u| self.arc(node, u) == Some(true))
            .collect()
    }

    /// `(in, out)` degree of every node.
    pub fn degrees(&self) -> Vec<(usize, usize)> {
        let mut deg = vec![(0usize, 0usize); self.node_count()];
        for i in 0..self.m_prev {
            for j in (i + 1)..self.m_prev {
                let mat = &self.pairs[pair_index(self.m_prev, i, j)];
                for t in 0..self.m {
                    for u in 0..self.m {
                        let (a, b) = (self.node(i, t), self.node(j, u));
                        let (from, to) = if mat[t * self.m + u] { (a, b) } else { (b, a) };
                        deg[from].1 += 1;
                        deg[to].0 += 1;
                    }
                }
            }
        }
        deg
    }

    /// Directed arcs as 1-based `[block, sub]` labels.
    pub fn to_json(&self) -> Vec<ArcJson> {
        let mut arcs = Vec::new();
        for a in 0..self.node_count() {
            for b in 0..self.node_count() {
                if self.arc(a, b) == Some(true) {
                    arcs.push(ArcJson {
                        from: [a / self.m + 1, a % self.m + 1],
                        to: [b / self.m + 1, b % self.m + 1],
                    });
                }
            }
        }
        arcs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcJson {
    pub from: [usize; 2],
    pub to: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDeviation {
    /// 0-based `(block, sub)`.
    pub node: (usize, usize),
    pub in_degree: usize,
    pub out_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerReport {
    pub m_prev: usize,
    pub m: usize,
    pub expected_degree: usize,
    pub bad_nodes: Vec<NodeDeviation>,
    /// Block pairs `(i, j)` whose matrix has a row or column sum other than `M/2`.
    pub irregular_pairs: Vec<(usize, usize)>,
    pub pass: bool,
}

pub fn verify_layer(t: &TournamentLayer) -> LayerReport {
    let expected = t.degree();
    let bad_nodes: Vec<NodeDeviation> = t
        .degrees()
        .into_iter()
        .enumerate()
        .filter(|(_, (i, o))| *i != expected || *o != expected)
        .map(|(v, (i, o))| NodeDeviation {
            node: (v / t.m, v % t.m),
            in_degree: i,
            out_degree: o,
        })
        .collect();
    let half = t.m / 2;
    let mut irregular_pairs = Vec::new();
    for i in 0..t.m_prev {
        for j in (i + 1)..t.m_prev {
            let mat = &t.pairs[pair_index(t.m_prev, i, j)];
            let rows_ok = (0..t.m).all(|r| (0..t.m).filter(|&c| mat[r * t.m + c]).count() == half);
            let cols_ok = (0..t.m).all(|c| (0..t.m).filter(|&r| mat[r * t.m + c]).count() == half);
            if !(rows_ok && cols_ok) {
                irregular_pairs.push((i, j));
            }
        }
    }
    LayerReport {
        m_prev: t.m_prev,
        m: t.m,
        expected_degree: expected,
        pass: bad_nodes.is_empty() && irregular_pairs.is_empty(),
        bad_nodes,
        irregular_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal evaluation of the 1-based successor-window definition.
    fn window(t1: usize, m: usize, offset: usize) -> Vec<usize> {
        (0..m / 2)
            .map(|k| {
                let r = (t1 + offset + k) % m;
                if r == 0 {
                    m
                } else {
                    r
                }
            })
            .collect()
    }

    #[test]
    fn cyclic_matrix_small_cases() {
        assert_eq!(
            build_cyclic_tournament(2).unwrap(),
            vec![vec![true, false], vec![false, true]]
        );
        let o = build_cyclic_tournament(4).unwrap();
        // 1-based t = 2 → J+ = {2, 3}
        assert_eq!(window(2, 4, 0), vec![2, 3]);
        assert_eq!(o[1], vec![false, true, true, false]);
        assert!(build_cyclic_tournament(5).is_err());
    }

    #[test]
    fn cyclic_matrix_matches_windows_and_complement() {
        for m in [2, 4, 6, 8, 10] {
            let o = build_cyclic_tournament(m).unwrap();
            for t1 in 1..=m {
                let plus = window(t1, m, 0);
                for u1 in 1..=m {
                    assert_eq!(o[t1 - 1][u1 - 1], plus.contains(&u1));
                }
                // reverse arcs (j, u) → (i, t1) are exactly u ∈ J++ relation
                for u1 in 1..=m {
                    let reverse = window(u1, m, 1).contains(&t1);
                    assert_eq!(!o[t1 - 1][u1 - 1], reverse, "m={m} t={t1} u={u1}");
                }
            }
            for row in &o {
                assert_eq!(row.iter().filter(|&&x| x).count(), m / 2);
            }
        }
    }

    #[test]
    fn layer_degrees_match_small_cases() {
        let l = build_layer(2, 2).unwrap();
        assert_eq!(l.degree(), 1);
        assert_eq!(l.degrees(), vec![(1, 1); 4]);
        assert_eq!(build_layer(3, 2).unwrap().degree(), 2);
        let l = build_layer(2, 4).unwrap();
        assert_eq!(l.degree(), 2);
        let r = verify_layer(&l);
        assert!(r.pass && r.irregular_pairs.is_empty());
    }

    #[test]
    fn flipped_arc_is_reported_on_both_endpoints() {
        let mut l = build_layer(3, 4).unwrap();
        let (a, b) = (l.node(0, 1), l.node(2, 3));
        let before = l.arc(a, b).unwrap();
        l.flip(a, b).unwrap();
        assert_eq!(l.arc(a, b), Some(!before));
        let r = verify_layer(&l);
        assert!(!r.pass);
        let nodes: Vec<_> = r.bad_nodes.iter().map(|d| d.node).collect();
        assert_eq!(nodes, vec![(0, 1), (2, 3)]);
        assert_eq!(r.irregular_pairs, vec![(0, 2)]);
    }

    #[test]
    fn tournament_is_total_and_antisymmetric() {
        let l = build_layer(4, 6).unwrap();
        for a in 0..l.node_count() {
            for b in 0..l.node_count() {
                match (l.arc(a, b), l.arc(b, a)) {
                    (None, None) => assert_eq!(a / 6, b / 6),
                    (Some(x), Some(y)) => assert_ne!(x, y),
                    _ => panic!("asymmetric arc lookup"),
                }
            }
        }
        assert_eq!(l.in_neighbors(0).len(), l.degree());
        assert_eq!(l.out_neighbors(0).len(), l.degree());
    }

    #[test]
    fn json_export_lists_every_arc_once() {
        let l = build_layer(2, 2).unwrap();
        let arcs = l.to_json();
        assert_eq!(arcs.len(), 4);
        assert!(arcs.contains(&ArcJson { from: [1, 1], to: [2, 1] }));
        assert!(arcs.contains(&ArcJson { from: [2, 1], to: [1, 2] }));
    }
}
