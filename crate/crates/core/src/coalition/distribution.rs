use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CoalitionError, ObservedCoalitions, Result};

/// Exact `C(n, k)`; each partial product is itself a binomial coefficient, so the division never truncates.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub cardinality: usize,
    pub all: u128,
    pub all_pct: f64,
    pub obs: usize,
    pub obs_pct: f64,
}

/// Possible versus observed coalitions by size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionDistribution {
    pub n: usize,
    pub rows: Vec<DistributionRow>,
    pub total_all: u128,
    pub total_obs: usize,
}

impl CoalitionDistribution {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cardinality,all,all_pct,obs,obs_pct\n");
        for r in &self.rows {
            writeln!(s, "{},{},{:.4},{},{:.4}", r.cardinality, r.all, r.all_pct, r.obs, r.obs_pct).unwrap();
        }
        let obs_pct = if self.total_obs == 0 { 0.0 } else { 100.0 };
        writeln!(s, "total,{},100.0000,{},{:.4}", self.total_all, self.total_obs, obs_pct).unwrap();
        s
    }
}

/// Tabulates sizes `1..=k_max` for a roster of `n <= 64`; observed coalitions larger than `k_max` are not counted.
pub fn coalition_distribution(observed: &ObservedCoalitions, n: usize, k_max: usize) -> Result<CoalitionDistribution> {
    if k_max == 0 || k_max > n || n > 64 {
        return Err(CoalitionError::BadCardinality { k_max, n });
    }
    let mut obs = vec![0usize; k_max + 1];
    for c in observed.keys() {
        if (1..=k_max).contains(&c.len()) {
            obs[c.len()] += 1;
        }
    }
    let all: Vec<u128> = (0..=k_max).map(|k| binomial(n as u32, k as u32)).collect();
    let total_all: u128 = all[1..].iter().sum();
    let total_obs: usize = obs[1..].iter().sum();
    let rows = (1..=k_max)
        .map(|k| DistributionRow {
            cardinality: k,
            all: all[k],
            all_pct: 100.0 * all[k] as f64 / total_all as f64,
            obs: obs[k],
            obs_pct: if total_obs == 0 { 0.0 } else { 100.0 * obs[k] as f64 / total_obs as f64 },
        })
        .collect();
    Ok(CoalitionDistribution { n, rows, total_all, total_obs })
}

#[cfg(test)]
mod tests {
    use super::super::Coalition;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eighteen_player_roster() {
        let d = coalition_distribution(&ObservedCoalitions::new(), 18, 10).unwrap();
        assert_eq!(d.rows[2].all, 816);
        assert_eq!(d.rows[4].all, 8568);
        assert_eq!(d.total_all, 199_139);
    }

    #[test]
    fn large_rosters_do_not_overflow() {
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
        assert_eq!(binomial(120, 60), 96_614_908_840_363_322_603_893_139_521_372_656);
    }

    #[test]
    fn observed_counts_and_csv() {
        let o: ObservedCoalitions = [Coalition(0b1), Coalition(0b11), Coalition(0b110), Coalition(0b111)]
            .into_iter()
            .map(|c| (c, vec![0]))
            .collect();
        let d = coalition_distribution(&o, 3, 2).unwrap();
        assert_eq!(d.rows.iter().map(|r| r.obs).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d.total_obs, 3);
        let csv = d.to_csv();
        assert!(csv.starts_with("cardinality,all,all_pct,obs,obs_pct\n1,3,50.0000,1,33.3333\n"));
        assert!(csv.ends_with("total,6,100.0000,3,100.0000\n"));
    }

    #[test]
    fn bad_bounds() {
        assert!(coalition_distribution(&ObservedCoalitions::new(), 5, 0).is_err());
        assert!(coalition_distribution(&ObservedCoalitions::new(), 5, 6).is_err());
    }

    proptest! {
        #[test]
        fn pascal(n in 1u32..100, k in 1u32..100) {
            prop_assume!(k <= n);
            prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
        }
    }
}
