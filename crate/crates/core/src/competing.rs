//! The terminating competing model: integer powers, winner +1, loser -1, no
//! relaxation, and an absorbing power `-ell` below which nobody fights.
//!
//! `Z_t = sum over ordered pairs (h_i - h_j)^2` grows by
//! `4n[(h_p' - h_p)(h_p - h_q) + 1]` on a fight between `p` and `q`, which makes
//! it a bounded submartingale; fights therefore stop in finite time.

use rand::Rng;

use crate::bonabeau::{fight_probability, FightEvent};
use crate::error::{check_range, Error, Result};
use crate::graph::SiteGraph;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// Time-dependent Fermi steepness `eta_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaSchedule {
    Constant(f64),
    /// Sorted `(t_start, eta)` table; the first entry must start at 0.
    Piecewise(Vec<(u64, f64)>),
}

impl EtaSchedule {
    pub fn piecewise(table: Vec<(u64, f64)>) -> Result<Self> {
        match table.first() {
            Some(&(0, _)) => {}
            Some(&(t, _)) => {
                return Err(Error::Param {
                    name: "eta_schedule",
                    value: t as f64,
                    expected: "first entry must start at t = 0",
                })
            }
            None => {
                return Err(Error::Param {
                    name: "eta_schedule",
                    value: 0.0,
                    expected: "at least one entry",
                })
            }
        }
        for w in table.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Param {
                    name: "eta_schedule",
                    value: w[1].0 as f64,
                    expected: "strictly increasing start times",
                });
            }
        }
        for &(_, eta) in &table {
            check_range("eta", eta, eta > 0.0, "must be > 0")?;
        }
        Ok(EtaSchedule::Piecewise(table))
    }

    pub fn eta_at(&self, t: u64) -> f64 {
        match self {
            EtaSchedule::Constant(eta) => *eta,
            EtaSchedule::Piecewise(table) => {
                let idx = table.partition_point(|&(start, _)| start <= t);
                table[idx.saturating_sub(1)].1
            }
        }
    }
}

/// Which edges a step draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeSelection {
    /// Uniform over all edges; edges touching an absorbed agent give a no-op.
    #[default]
    AllEdges,
    /// Uniform over edges whose endpoints are both still active.
    FightableOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetingParams {
    ell: i64,
    schedule: EtaSchedule,
    pub selection: EdgeSelection,
    /// Power the loser gives up. Always 1 in the model; other values exist
    /// only as a negative control for the verification suites.
    #[doc(hidden)]
    pub loser_loss: i64,
}

impl CompetingParams {
    pub fn new(ell: i64, schedule: EtaSchedule) -> Result<Self> {
        check_range("ell", ell as f64, ell >= 1, "must be a positive integer")?;
        if let EtaSchedule::Constant(eta) = schedule {
            check_range("eta", eta, eta > 0.0, "must be > 0")?;
        }
        Ok(CompetingParams {
            ell,
            schedule,
            selection: EdgeSelection::AllEdges,
            loser_loss: 1,
        })
    }

    pub fn constant(ell: i64, eta: f64) -> Result<Self> {
        Self::new(ell, EtaSchedule::Constant(eta))
    }

    pub fn with_selection(mut self, selection: EdgeSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn ell(&self) -> i64 {
        self.ell
    }

    pub fn schedule(&self) -> &EtaSchedule {
        &self.schedule
    }

    pub fn eta_at(&self, t: u64) -> f64 {
        self.schedule.eta_at(t)
    }
}

/// Integer power vector for the competing model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompetingState {
    pub h: Vec<i64>,
    pub t: u64,
}

impl CompetingState {
    pub fn zeros(n: usize) -> Self {
        CompetingState {
            h: vec![0; n],
            t: 0,
        }
    }

    pub fn from_vec(h: Vec<i64>) -> Self {
        CompetingState { h, t: 0 }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn is_absorbed(&self, i: usize, ell: i64) -> bool {
        self.h[i] <= -ell
    }

    pub fn absorbed(&self, ell: i64) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.is_absorbed(i, ell))
            .collect()
    }

    pub fn total(&self) -> i64 {
        self.h.iter().sum()
    }

    pub fn z(&self) -> u64 {
        z_statistic(&self.h)
    }

    pub fn sigma(&self) -> f64 {
        let h: Vec<f64> = self.h.iter().map(|&x| x as f64).collect();
        crate::bonabeau::sigma(&h)
    }

    fn fightable(&self, u: usize, v: usize, ell: i64) -> bool {
        !self.is_absorbed(u, ell) && !self.is_absorbed(v, ell)
    }
}

/// `sum over ordered pairs (i, j) of (h_i - h_j)^2`.
///
/// Computed as `2 n sum h^2 - 2 (sum h)^2`, which is exact in integers.
pub fn z_statistic(h: &[i64]) -> u64 {
    let n = h.len() as i128;
    let sum: i128 = h.iter().map(|&x| x as i128).sum();
    let sq: i128 = h.iter().map(|&x| (x as i128) * (x as i128)).sum();
    (2 * n * sq - 2 * sum * sum) as u64
}

/// The closed-form `Z` increment for a fight where `p`'s power changes by
/// `delta` (+1 or -1) against `q`: `4n[delta (h_p - h_q) + 1]`.
pub fn z_increment_closed_form(n: usize, delta: i64, hp: i64, hq: i64) -> i64 {
    4 * n as i64 * (delta * (hp - hq) + 1)
}

fn pick_edge<R: Rng + ?Sized>(
    state: &CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
    rng: &mut R,
) -> Option<(usize, usize)> {
    match p.selection {
        EdgeSelection::AllEdges => Some(g.edges()[rng.gen_range(0..g.edge_count())]),
        EdgeSelection::FightableOnly => {
            let live: Vec<(usize, usize)> = g
                .edges()
                .iter()
                .copied()
                .filter(|&(u, v)| state.fightable(u, v, p.ell))
                .collect();
            (!live.is_empty()).then(|| live[rng.gen_range(0..live.len())])
        }
    }
}

/// One competing-model step. Returns the fight, or `None` when the drawn edge
/// touches an absorbed agent.
pub fn step_competing<R: Rng + ?Sized>(
    state: &mut CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
    rng: &mut R,
) -> Result<Option<FightEvent>> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    if state.n() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: state.n(),
        });
    }
    let t = state.t;
    state.t += 1;
    let Some((u, v)) = pick_edge(state, g, p, rng) else {
        return Ok(None);
    };
    if !state.fightable(u, v, p.ell) {
        return Ok(None);
    }
    let (attacker, defender) = if rng.gen::<bool>() { (u, v) } else { (v, u) };
    let q = fight_probability(
        state.h[attacker] as f64,
        state.h[defender] as f64,
        p.eta_at(t),
    );
    let event = FightEvent {
        t,
        attacker,
        defender,
        attacker_won: rng.gen::<f64>() < q,
    };
    state.h[event.winner()] += 1;
    state.h[event.loser()] -= p.loser_loss;
    Ok(Some(event))
}

/// True when no edge joins two active agents, so no fight can ever happen
/// again.
pub fn is_terminal(state: &CompetingState, g: &SiteGraph, ell: i64) -> bool {
    g.edges().iter().all(|&(u, v)| !state.fightable(u, v, ell))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminationOutcome {
    pub state: CompetingState,
    /// False when the step cap was hit first.
    pub terminal: bool,
    /// Steps taken until the terminal condition held (or the cap).
    pub steps: u64,
    pub fights: u64,
    /// `Z` before any fight followed by `Z` after each fight.
    pub z_trace: Vec<u64>,
}

/// Runs from the all-zero state until [`is_terminal`] holds or `step_cap`
/// steps have elapsed.
pub fn run_to_termination<R: Rng + ?Sized>(
    g: &SiteGraph,
    p: &CompetingParams,
    rng: &mut R,
    step_cap: u64,
) -> Result<TerminationOutcome> {
    run_from(CompetingState::zeros(g.n()), g, p, rng, step_cap)
}

/// [`run_to_termination`] from an arbitrary start.
pub fn run_from<R: Rng + ?Sized>(
    mut state: CompetingState,
    g: &SiteGraph,
    p: &CompetingParams,
    rng: &mut R,
    step_cap: u64,
) -> Result<TerminationOutcome> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let start = state.t;
    let mut z_trace = vec![state.z()];
    let mut fights = 0;
    // terminal status only changes when a fight happens
    let mut terminal = is_terminal(&state, g, p.ell);
    while !terminal && state.t - start < step_cap {
        if step_competing(&mut state, g, p, rng)?.is_some() {
            fights += 1;
            z_trace.push(state.z());
            terminal = is_terminal(&state, g, p.ell);
        }
    }
    Ok(TerminationOutcome {
        steps: state.t - start,
        state,
        terminal,
        fights,
        z_trace,
    })
}
