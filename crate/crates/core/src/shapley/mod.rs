//! Classical and restricted Shapley values.
//!
//! Permutation weights `s!(n-s-1)!/n!` are handled in log space. The
//! restricted value renormalizes them over the coalitions a player was
//! actually seen joining, so it is defined for any roster size.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

use crate::coalition::{Coalition, RestrictedSupport, WorthTable};

/// Largest roster the exact `2^n` oracle accepts.
pub const CLASSICAL_MAX_PLAYERS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ShapleyError {
    #[error("exact Shapley limited to {CLASSICAL_MAX_PLAYERS} players, got {0}")]
    TooLarge(usize),
    #[error("player {0} has an empty support")]
    EmptySupport(usize),
    #[error("support coalition {coalition} has {size} members, not below n = {n}")]
    CoalitionTooLarge { coalition: Coalition, size: usize, n: usize },
    #[error("no worth for coalition {0}")]
    MissingWorth(Coalition),
    #[error("game needs {expected} worths, got {got}")]
    BadGame { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ShapleyError>;

/// A game given by its full characteristic function, indexed by coalition mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub n: usize,
    worth: Vec<f64>,
}

impl Game {
    /// `worth[mask]` for every mask in `0..2^n`; `worth[0]` is forced to 0.
    pub fn new(n: usize, mut worth: Vec<f64>) -> Result<Self> {
        if n > CLASSICAL_MAX_PLAYERS {
            return Err(ShapleyError::TooLarge(n));
        }
        if worth.len() != 1 << n {
            return Err(ShapleyError::BadGame { expected: 1 << n, got: worth.len() });
        }
        worth[0] = 0.0;
        Ok(Self { n, worth })
    }

    pub fn from_fn(n: usize, f: impl Fn(Coalition) -> f64) -> Result<Self> {
        if n > CLASSICAL_MAX_PLAYERS {
            return Err(ShapleyError::TooLarge(n));
        }
        Self::new(n, (0..1u64 << n).map(|m| f(Coalition(m))).collect())
    }

    pub fn worth(&self, c: Coalition) -> f64 {
        self.worth[c.0 as usize]
    }

    pub fn grand(&self) -> Coalition {
        Coalition((1u64 << self.n) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClassicalExact,
    Restricted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub method: Method,
    /// Population size used in the permutation weights.
    pub n: usize,
    /// `None` for players with no support.
    pub values: Vec<Option<f64>>,
    pub support_sizes: Vec<usize>,
}

/// `ln( c! (n-c-1)! / n! )`.
pub fn log_weight(n: usize, c: usize) -> f64 {
    ln_factorial(c as u64) + ln_factorial((n - c - 1) as u64) - ln_factorial(n as u64)
}

/// Exact Shapley value by enumerating every coalition without each player.
pub fn classical_shapley(game: &Game) -> Result<ShapleyResult> {
    let n = game.n;
    if n > CLASSICAL_MAX_PLAYERS {
        return Err(ShapleyError::TooLarge(n));
    }
    if n == 0 {
        return Ok(ShapleyResult { method: Method::ClassicalExact, n, values: vec![], support_sizes: vec![] });
    }
    let weights: Vec<f64> = (0..n).map(|s| log_weight(n, s).exp()).collect();
    let values = (0..n)
        .map(|i| {
            let mut phi = 0.0;
            for m in 0..1u64 << n {
                let s = Coalition(m);
                if !s.contains(i) {
                    phi += weights[s.len()] * (game.worth(s.with(i)) - game.worth(s));
                }
            }
            Some(phi)
        })
        .collect();
    Ok(ShapleyResult { method: Method::ClassicalExact, n, values, support_sizes: vec![1 << (n - 1); n] })
}

/// Permutation weights renormalized over `support` (log-sum-exp).
pub fn restricted_weights(n: usize, support: &[Coalition]) -> Result<Vec<f64>> {
    let mut logs = Vec::with_capacity(support.len());
    for &c in support {
        if c.len() >= n {
            return Err(ShapleyError::CoalitionTooLarge { coalition: c, size: c.len(), n });
        }
        logs.push(log_weight(n, c.len()));
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if logs.is_empty() {
        return Err(ShapleyError::EmptySupport(usize::MAX));
    }
    let norm = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(logs.into_iter().map(|l| (l - norm).exp()).collect())
}

/// A player's support with weights fixed, ready to be evaluated against many worth functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSupport {
    pub player: usize,
    pub coalitions: Vec<Coalition>,
    pub weights: Vec<f64>,
}

/// Weighted supports for a whole roster; players without support are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedPlan {
    pub n: usize,
    pub players: Vec<Option<WeightedSupport>>,
}

impl RestrictedPlan {
    /// `supports[i]` is player `i`'s support, or `None` when it was empty.
    pub fn new(n: usize, supports: &[Option<RestrictedSupport>]) -> Result<Self> {
        let players = supports
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                None => Ok(None),
                Some(s) => {
                    let coalitions: Vec<Coalition> = s.coalitions().collect();
                    let weights = restricted_weights(n, &coalitions).map_err(|e| match e {
                        ShapleyError::EmptySupport(_) => ShapleyError::EmptySupport(i),
                        other => other,
                    })?;
                    Ok(Some(WeightedSupport { player: s.player, coalitions, weights }))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, players })
    }

    /// Every coalition whose worth the plan reads.
    pub fn referenced(&self) -> impl Iterator<Item = Coalition> + '_ {
        self.players
            .iter()
            .flatten()
            .flat_map(|p| p.coalitions.iter().flat_map(move |&c| [c, c.with(p.player)]))
    }

    /// `phi_i = sum_C w_i(C) [v(C + i) - v(C)]` with `v` supplied by the caller.
    pub fn evaluate(&self, mut worth: impl FnMut(Coalition) -> Option<f64>) -> Result<Vec<Option<f64>>> {
        let mut out = Vec::with_capacity(self.players.len());
        for p in &self.players {
            let Some(p) = p else {
                out.push(None);
                continue;
            };
            let mut phi = 0.0;
            for (&c, &w) in p.coalitions.iter().zip(&p.weights) {
                let with = c.with(p.player);
                let a = worth(with).ok_or(ShapleyError::MissingWorth(with))?;
                let b = worth(c).ok_or(ShapleyError::MissingWorth(c))?;
                phi += w * (a - b);
            }
            out.push(Some(phi));
        }
        Ok(out)
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.as_ref().map_or(0, |p| p.coalitions.len())).collect()
    }
}

/// Restricted Shapley value of every player against a worth table.
pub fn restricted_shapley(n: usize, supports: &[Option<RestrictedSupport>], worth: &WorthTable) -> Result<ShapleyResult> {
    let plan = RestrictedPlan::new(n, supports)?;
    let values = plan.evaluate(|c| worth.worth(c))?;
    Ok(ShapleyResult { method: Method::Restricted, n, values, support_sizes: plan.support_sizes() })
}
