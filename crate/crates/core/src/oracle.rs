//! Exact small-instance oracles.
//!
//! These enumerate every branch of a single competing-model step, so that the
//! submartingale drift of `Z` can be computed exactly rather than estimated,
//! and provide a finite-difference Jacobian to check the analytic
//! linearization against the mean-field map.

use std::collections::BTreeMap;

use rand::Rng;

use crate::bonabeau::fight_probability;
use crate::competing::{
    step_competing, z_increment_closed_form, z_statistic, CompetingParams, CompetingState,
    EdgeSelection,
};
use crate::error::{check_range, Error, Result};
use crate::graph::SiteGraph;
use crate::linalg::Matrix;

/// Largest agent count accepted by the enumerators.
pub const MAX_ENUMERATION: usize = 12;

const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fight {
    pub attacker: usize,
    pub defender: usize,
    pub attacker_won: bool,
}

/// One (edge, roles, outcome) branch of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepBranch {
    /// `None` for the no-op branch when no fightable edge remains under
    /// [`EdgeSelection::FightableOnly`].
    pub edge: Option<(usize, usize)>,
    pub fight: Option<Fight>,
    pub probability: f64,
    pub next: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub branches: Vec<StepBranch>,
}

impl StepDistribution {
    /// Branches merged by next state, in lexicographic state order.
    pub fn outcomes(&self) -> Vec<(Vec<i64>, f64)> {
        let mut merged: BTreeMap<&[i64], f64> = BTreeMap::new();
        for b in &self.branches {
            *merged.entry(&b.next).or_insert(0.0) += b.probability;
        }
        merged.into_iter().map(|(k, v)| (k.to_vec(), v)).collect()
    }

    /// Probability that the step is a fight.
    pub fn fight_probability(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.fight.is_some())
            .fold(0.0, |acc, b| acc + b.probability)
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

fn check_scale(state: &CompetingState, g: &SiteGraph) -> Result<()> {
    if state.n() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: state.n(),
        });
    }
    if g.n() > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            n: g.n(),
            max: MAX_ENUMERATION,
        });
    }
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    Ok(())
}

/// Every branch of one [`step_competing`] call from `state`, with its exact
/// probability.
pub fn enumerate_competing_step(
    state: &CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
) -> Result<StepDistribution> {
    check_scale(state, g)?;
    let ell = p.ell();
    let active = |i: usize| !state.is_absorbed(i, ell);
    let candidates: Vec<(usize, usize)> = match p.selection {
        EdgeSelection::AllEdges => g.edges().to_vec(),
        EdgeSelection::FightableOnly => g
            .edges()
            .iter()
            .copied()
            .filter(|&(u, v)| active(u) && active(v))
            .collect(),
    };
    if candidates.is_empty() {
        return Ok(StepDistribution {
            branches: vec![StepBranch {
                edge: None,
                fight: None,
                probability: 1.0,
                next: state.h.clone(),
            }],
        });
    }
    let eta = p.eta_at(state.t);
    let per_edge = 1.0 / candidates.len() as f64;
    let mut branches = Vec::new();
    for &(u, v) in &candidates {
        if !(active(u) && active(v)) {
            branches.push(StepBranch {
                edge: Some((u, v)),
                fight: None,
                probability: per_edge,
                next: state.h.clone(),
            });
            continue;
        }
        for (attacker, defender) in [(u, v), (v, u)] {
            let q = fight_probability(state.h[attacker] as f64, state.h[defender] as f64, eta);
            for (attacker_won, prob) in [(true, q), (false, 1.0 - q)] {
                let mut next = state.h.clone();
                let (w, l) = if attacker_won {
                    (attacker, defender)
                } else {
                    (defender, attacker)
                };
                next[w] += 1;
                next[l] -= p.loser_loss;
                branches.push(StepBranch {
                    edge: Some((u, v)),
                    fight: Some(Fight {
                        attacker,
                        defender,
                        attacker_won,
                    }),
                    probability: per_edge * 0.5 * prob,
                    next,
                });
            }
        }
    }
    Ok(StepDistribution { branches })
}

/// Both sides of the submartingale inequality `E[dZ] >= 4n P(fight)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZIncrement {
    pub expected: f64,
    pub lower_bound: f64,
    pub fight_probability: f64,
}

impl ZIncrement {
    pub fn margin(&self) -> f64 {
        self.expected - self.lower_bound
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -PROBABILITY_TOL
    }
}

pub fn expected_z_increment(
    state: &CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
) -> Result<ZIncrement> {
    let dist = enumerate_competing_step(state, g, p)?;
    let z0 = z_statistic(&state.h) as i64;
    let expected = dist
        .branches
        .iter()
        .map(|b| b.probability * (z_statistic(&b.next) as i64 - z0) as f64)
        .sum();
    let fight_probability = dist.fight_probability();
    Ok(ZIncrement {
        expected,
        lower_bound: 4.0 * state.n() as f64 * fight_probability,
        fight_probability,
    })
}

/// Fight branches whose recomputed `Z` increment differs from the closed form
/// `4n[(h_p' - h_p)(h_p - h_q) + 1]`.
pub fn pathwise_mismatches(state: &CompetingState, dist: &StepDistribution) -> Vec<StepBranch> {
    let z0 = z_statistic(&state.h) as i64;
    dist.branches
        .iter()
        .filter(|b| {
            b.fight.is_some_and(|f| {
                let delta = b.next[f.attacker] - state.h[f.attacker];
                let actual = z_statistic(&b.next) as i64 - z0;
                actual
                    != z_increment_closed_form(
                        state.n(),
                        delta,
                        state.h[f.attacker],
                        state.h[f.defender],
                    )
            })
        })
        .cloned()
        .collect()
}

/// True when every edge between two active agents joins equal powers, the
/// case in which the submartingale bound is tight.
pub fn fightable_pairs_level(state: &CompetingState, g: &SiteGraph, ell: i64) -> bool {
    g.edges().iter().all(|&(u, v)| {
        state.is_absorbed(u, ell) || state.is_absorbed(v, ell) || state.h[u] == state.h[v]
    })
}

/// Central-difference Jacobian `J_ij = d map_i / d x_j` at `point`.
pub fn finite_difference_jacobian<F>(map: F, point: &[f64], eps: f64) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    check_range(
        "eps",
        eps,
        (1e-8..=1e-4).contains(&eps),
        "must lie in [1e-8, 1e-4]",
    )?;
    let n = point.len();
    let mut jac = Matrix::zeros(n);
    let mut x = point.to_vec();
    for j in 0..n {
        x[j] = point[j] + eps;
        let plus = map(&x)?;
        x[j] = point[j] - eps;
        let minus = map(&x)?;
        x[j] = point[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * eps);
        }
    }
    Ok(jac)
}

/// Total-variation distance between `samples` engine steps from `state` and
/// the exact step distribution.
pub fn empirical_vs_exact<R: Rng + ?Sized>(
    state: &CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
    samples: u64,
    rng: &mut R,
) -> Result<f64> {
    check_range(
        "samples",
        samples as f64,
        samples >= 10_000,
        "must be at least 10000",
    )?;
    let exact = enumerate_competing_step(state, g, p)?.outcomes();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    for _ in 0..samples {
        let mut s = state.clone();
        step_competing(&mut s, g, p, rng)?;
        *counts.entry(s.h).or_insert(0) += 1;
    }
    let mut tv = 0.0;
    for (next, prob) in &exact {
        let seen = counts.remove(next).unwrap_or(0);
        tv += (seen as f64 / samples as f64 - prob).abs();
    }
    // states the engine produced that the enumeration says are impossible
    tv += counts
        .values()
        .map(|&c| c as f64 / samples as f64)
        .sum::<f64>();
    Ok(0.5 * tv)
}

/// A state reached by running the engine from zero for a random number of
/// steps (at most `max_steps`, fewer if fights end first).
pub fn sample_reachable_state<R: Rng + ?Sized>(
    g: &SiteGraph,
    p: &CompetingParams,
    max_steps: u64,
    rng: &mut R,
) -> Result<CompetingState> {
    let steps = rng.gen_range(0..=max_steps);
    let mut state = CompetingState::zeros(g.n());
    for _ in 0..steps {
        step_competing(&mut state, g, p, rng)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Boundary, Family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fam(f: Family, n: usize) -> SiteGraph {
        SiteGraph::family(f, n, Boundary::Open).unwrap()
    }

    #[test]
    fn two_agents_from_zero() {
        let g = fam(Family::Complete, 2);
        let p = CompetingParams::constant(1, 1.0).unwrap();
        let s = CompetingState::zeros(2);
        let d = enumerate_competing_step(&s, &g, &p).unwrap();
        assert_eq!(d.outcomes(), vec![(vec![-1, 1], 0.5), (vec![1, -1], 0.5)]);
        assert_eq!(d.fight_probability(), 1.0);
        let z = expected_z_increment(&s, &g, &p).unwrap();
        assert_eq!(z.expected, 8.0);
        assert_eq!(z.lower_bound, 8.0);
    }

    #[test]
    fn terminal_pair() {
        let g = fam(Family::Complete, 2);
        let p = CompetingParams::constant(1, 1.0).unwrap();
        let s = CompetingState::from_vec(vec![1, -1]);
        let d = enumerate_competing_step(&s, &g, &p).unwrap();
        assert_eq!(d.outcomes(), vec![(vec![1, -1], 1.0)]);
        assert_eq!(d.fight_probability(), 0.0);
        let z = expected_z_increment(&s, &g, &p).unwrap();
        assert_eq!((z.expected, z.lower_bound), (0.0, 0.0));
    }

    #[test]
    fn triangle_from_zero() {
        let g = fam(Family::Complete, 3);
        let p = CompetingParams::constant(1, 1.0).unwrap();
        let d = enumerate_competing_step(&CompetingState::zeros(3), &g, &p).unwrap();
        let out = d.outcomes();
        assert_eq!(out.len(), 6);
        for (_, prob) in &out {
            assert!((prob - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((d.fight_probability() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strict_margin_for_unequal_fighters() {
        let g = fam(Family::Path, 3);
        let p = CompetingParams::constant(3, 1.0).unwrap();
        let s = CompetingState::from_vec(vec![2, -1, -1]);
        let z = expected_z_increment(&s, &g, &p).unwrap();
        assert!(z.margin() > 0.1);
        assert!(!fightable_pairs_level(&s, &g, 3));
        assert!(pathwise_mismatches(&s, &enumerate_competing_step(&s, &g, &p).unwrap()).is_empty());
    }

    #[test]
    fn corrupted_rule_breaks_identity() {
        let g = fam(Family::Complete, 3);
        let mut p = CompetingParams::constant(2, 1.0).unwrap();
        p.loser_loss = 2;
        let s = CompetingState::zeros(3);
        let d = enumerate_competing_step(&s, &g, &p).unwrap();
        assert!(!pathwise_mismatches(&s, &d).is_empty());
    }

    #[test]
    fn too_large_is_rejected() {
        let g = fam(Family::Path, 13);
        let p = CompetingParams::constant(1, 1.0).unwrap();
        assert_eq!(
            enumerate_competing_step(&CompetingState::zeros(13), &g, &p),
            Err(Error::TooLarge { n: 13, max: 12 })
        );
    }

    #[test]
    fn fightable_only_distribution() {
        let g = fam(Family::Path, 3);
        let p = CompetingParams::constant(1, 1.0)
            .unwrap()
            .with_selection(EdgeSelection::FightableOnly);
        let s = CompetingState::from_vec(vec![1, -1, 0]);
        let d = enumerate_competing_step(&s, &g, &p).unwrap();
        assert_eq!(d.outcomes(), vec![(vec![1, -1, 0], 1.0)]);
        assert!(d.branches[0].edge.is_none());
    }

    #[test]
    fn empirical_matches_enumeration() {
        let g = fam(Family::Complete, 2);
        let p = CompetingParams::constant(1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tv = empirical_vs_exact(&CompetingState::zeros(2), &g, &p, 100_000, &mut rng).unwrap();
        assert!(tv < 0.01, "{tv}");
        let tv = empirical_vs_exact(
            &CompetingState::from_vec(vec![1, -1]),
            &g,
            &p,
            10_000,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tv, 0.0);
        assert!(empirical_vs_exact(&CompetingState::zeros(2), &g, &p, 10, &mut rng).is_err());
    }

    #[test]
    fn finite_difference_of_linear_map() {
        let f = |x: &[f64]| Ok(vec![2.0 * x[0] + x[1], -x[0] + 3.0 * x[1]]);
        let j = finite_difference_jacobian(f, &[0.4, -1.0], 1e-5).unwrap();
        let want = Matrix::from_rows(&[vec![2.0, 1.0], vec![-1.0, 3.0]]).unwrap();
        assert!(j.max_abs_diff(&want) < 1e-9);
        assert!(finite_difference_jacobian(f, &[0.0, 0.0], 1e-2).is_err());
    }
}
