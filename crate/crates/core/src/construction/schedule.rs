use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Default cap on any `m_r`.
pub const DEFAULT_BLOCK_CAP: u64 = 1 << 24;

/// Block counts of the nested level structure.
///
/// `m_0 = 2`, `M_r = 2^⌈m_{r−1} / (4 c_exp)⌉`, `m_r = m_{r−1} M_r`, and the
/// tournament degree `D_r = (m_{r−1} − 1) M_r / 2` for the levels `1..s−1`
/// that feed a layer graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSchedule {
    pub s: usize,
    pub c_exp: u64,
    /// `m_0..=m_s`
    pub m: Vec<u64>,
    /// `M_1..=M_s` (index `r − 1`)
    pub big_m: Vec<u64>,
    /// `D_1..=D_{s−1}` (index `r − 1`)
    pub d: Vec<u64>,
    /// Levels `r ∈ 1..s` whose `D_r` is odd, so their separators run in
    /// generalized mode.
    pub odd_levels: Vec<usize>,
}

pub fn compute_schedule(s: usize, c_exp: u64) -> Result<LevelSchedule> {
    compute_schedule_capped(s, c_exp, DEFAULT_BLOCK_CAP)
}

pub fn compute_schedule_capped(s: usize, c_exp: u64, cap: u64) -> Result<LevelSchedule> {
    if s == 0 {
        return Err(invalid("depth s must be at least 1"));
    }
    if c_exp == 0 {
        return Err(invalid("c_exp must be at least 1"));
    }
    let mut m = vec![2u64];
    let mut big_m = Vec::with_capacity(s);
    for r in 1..=s {
        let prev = m[r - 1];
        let exp = prev.div_ceil(4 * c_exp);
        let too_big = |detail: String| Error::Size { level: r, detail };
        if exp >= 63 {
            return Err(too_big(format!("M_{r} = 2^{exp} overflows")));
        }
        let mr = 1u64 << exp;
        let next = prev
            .checked_mul(mr)
            .filter(|&v| v <= cap)
            .ok_or_else(|| too_big(format!("m_{r} = {prev} * {mr} exceeds cap {cap}")))?;
        big_m.push(mr);
        m.push(next);
    }
    let d: Vec<u64> = (1..s).map(|r| (m[r - 1] - 1) * big_m[r - 1] / 2).collect();
    let odd_levels = d
        .iter()
        .enumerate()
        .filter(|(_, &dr)| dr % 2 == 1)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(LevelSchedule {
        s,
        c_exp,
        m,
        big_m,
        d,
        odd_levels,
    })
}

impl LevelSchedule {
    /// `m_r`.
    pub fn blocks(&self, r: usize) -> usize {
        self.m[r] as usize
    }

    /// `M_r` for `1 ≤ r ≤ s`.
    pub fn split(&self, r: usize) -> usize {
        self.big_m[r - 1] as usize
    }

    /// `D_r = (m_{r−1} − 1) M_r / 2` for any `1 ≤ r ≤ s`.
    pub fn tournament_degree(&self, r: usize) -> u64 {
        (self.m[r - 1] - 1) * self.big_m[r - 1] / 2
    }

    /// Tower base `a = 2^{1/(4 c_exp)}`.
    pub fn tower_base(&self) -> f64 {
        2f64.powf(1.0 / (4.0 * self.c_exp as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight-line recomputation of the recurrence with rational ceilings.
    fn oracle(s: usize, c: u64) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
        let mut m = vec![2u64];
        let mut big = vec![];
        let mut d = vec![];
        for r in 1..=s {
            let prev = m[r - 1];
            let mut e = prev / (4 * c);
            if e * 4 * c < prev {
                e += 1;
            }
            let mr = 2u64.pow(e as u32);
            big.push(mr);
            m.push(prev * mr);
            d.push((m[r] - mr) / 2);
        }
        (m, big, d)
    }

    #[test]
    fn depth_three_with_large_constant() {
        let sch = compute_schedule(3, 9999).unwrap();
        assert_eq!(sch.m, vec![2, 4, 8, 16]);
        assert_eq!(sch.big_m, vec![2, 2, 2]);
        assert_eq!(sch.d, vec![1, 3]);
        assert_eq!(sch.odd_levels, vec![1, 2]);
        let (m, big, d) = oracle(3, 9999);
        assert_eq!((sch.m.clone(), sch.big_m.clone()), (m, big));
        assert_eq!(sch.d, d[..2]);
    }

    #[test]
    fn depth_four_with_unit_constant() {
        let sch = compute_schedule(4, 1).unwrap();
        assert_eq!(sch.m, vec![2, 4, 8, 32, 8192]);
        assert_eq!(sch.big_m, vec![2, 2, 4, 256]);
        assert_eq!(sch.d, vec![1, 3, 14]);
        assert_eq!(sch.tournament_degree(4), 3968);
        let (m, big, d) = oracle(4, 1);
        assert_eq!(sch.m, m);
        assert_eq!(sch.big_m, big);
        assert_eq!(d, vec![1, 3, 14, 3968]);
    }

    #[test]
    fn depth_one_has_a_single_split() {
        for c in [1, 2, 9999] {
            let sch = compute_schedule(1, c).unwrap();
            assert_eq!(sch.m, vec![2, 4]);
            assert!(sch.d.is_empty());
        }
    }

    #[test]
    fn structural_identities_hold() {
        for c in 1..6 {
            for s in 1..5 {
                let Ok(sch) = compute_schedule(s, c) else { continue };
                for r in 1..=s {
                    let dr = sch.tournament_degree(r);
                    assert_eq!(2 * dr, sch.m[r] - sch.big_m[r - 1]);
                    assert!(4 * dr >= sch.m[r]);
                    assert!(sch.m[r] > sch.m[r - 1]);
                }
                for r in 2..s {
                    assert!(sch.tournament_degree(r) > sch.tournament_degree(r - 1));
                }
            }
        }
    }

    #[test]
    fn cap_violation_names_the_level() {
        let err = compute_schedule(5, 1).unwrap_err();
        assert!(matches!(err, Error::Size { level: 5, .. }), "{err}");
        assert!(compute_schedule_capped(3, 1, 16).is_err());
    }
}
