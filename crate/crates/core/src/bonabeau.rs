//! Stochastic Bonabeau dynamics: fights decided by a Fermi function, winner
//! gains 1, loser loses `F`, and every agent's power relaxes by `(1 - mu)`
//! each step.
//!
//! Two selection modes exist. On a fully occupied site graph an edge is drawn
//! uniformly and a fair coin assigns attacker and defender. On a partially
//! occupied square lattice a uniform agent picks a uniform neighbouring site
//! and either moves (vacant) or attacks its occupant.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{check_range, Error, Result};
use crate::graph::{Boundary, Family, SiteGraph};

/// Model constants `eta`, `F` and `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonabeauParams {
    eta: f64,
    loss: f64,
    mu: f64,
}

impl BonabeauParams {
    /// `eta > 0`, `loss >= 1`, `mu` in `(0, 1)`.
    pub fn new(eta: f64, loss: f64, mu: f64) -> Result<Self> {
        check_range("eta", eta, eta > 0.0, "must be > 0")?;
        check_range("F", loss, loss >= 1.0, "must be >= 1")?;
        check_range("mu", mu, mu > 0.0 && mu < 1.0, "must lie in (0,1)")?;
        Ok(BonabeauParams { eta, loss, mu })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Power lost by the loser of a fight (`F`).
    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `(1 + F) * eta`, the coupling that controls stability.
    pub fn coupling(&self) -> f64 {
        (1.0 + self.loss) * self.eta
    }
}

/// Per-agent power vector and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerState {
    pub h: Vec<f64>,
    pub t: u64,
}

impl PowerState {
    /// The egalitarian start: everybody at zero.
    pub fn zeros(n: usize) -> Self {
        PowerState {
            h: vec![0.0; n],
            t: 0,
        }
    }

    pub fn from_vec(h: Vec<f64>) -> Self {
        PowerState { h, t: 0 }
    }

    /// Zero state plus independent uniform noise in `[-amplitude, amplitude]`.
    pub fn perturbed<R: Rng + ?Sized>(n: usize, amplitude: f64, rng: &mut R) -> Self {
        let h = (0..n)
            .map(|_| {
                if amplitude > 0.0 {
                    rng.gen_range(-amplitude..=amplitude)
                } else {
                    0.0
                }
            })
            .collect();
        PowerState { h, t: 0 }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn total(&self) -> f64 {
        self.h.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.h.len() as f64
    }

    pub fn sigma(&self) -> f64 {
        sigma(&self.h)
    }
}

/// Population standard deviation `sqrt(mean((h - mean(h))^2))`.
pub fn sigma(h: &[f64]) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let n = h.len() as f64;
    let mean = h.iter().sum::<f64>() / n;
    (h.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// One fight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FightEvent {
    pub t: u64,
    pub attacker: usize,
    pub defender: usize,
    pub attacker_won: bool,
}

impl FightEvent {
    pub fn winner(&self) -> usize {
        if self.attacker_won {
            self.attacker
        } else {
            self.defender
        }
    }

    pub fn loser(&self) -> usize {
        if self.attacker_won {
            self.defender
        } else {
            self.attacker
        }
    }
}

const FERMI_FLOOR: f64 = -700.0;

/// Probability that an agent with power `hi` beats one with power `hj`:
/// `1 / (1 + exp(-eta (hi - hj)))`.
///
/// Evaluated on the branch that never exponentiates a positive argument, so it
/// is monotone and never NaN for finite inputs. Arguments below `-700` are
/// clamped so the result stays strictly positive.
pub fn fight_probability(hi: f64, hj: f64, eta: f64) -> f64 {
    let x = eta * (hi - hj);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.max(FERMI_FLOOR).exp();
        e / (1.0 + e)
    }
}

/// Powers smaller in magnitude than this are flushed to zero on relaxation so
/// long runs never enter subnormal arithmetic.
pub const FLUSH_TO_ZERO: f64 = 1e-250;

/// Multiplies every power by `(1 - mu)`.
pub fn relax(state: &mut PowerState, mu: f64) {
    let keep = 1.0 - mu;
    state.h.iter_mut().for_each(|h| {
        let x = *h * keep;
        *h = if x.abs() < FLUSH_TO_ZERO { 0.0 } else { x };
    });
}

fn resolve_fight<R: Rng + ?Sized>(
    h: &mut [f64],
    attacker: usize,
    defender: usize,
    p: &BonabeauParams,
    t: u64,
    rng: &mut R,
) -> FightEvent {
    let q = fight_probability(h[attacker], h[defender], p.eta);
    let attacker_won = rng.gen::<f64>() < q;
    let event = FightEvent {
        t,
        attacker,
        defender,
        attacker_won,
    };
    h[event.winner()] += 1.0;
    h[event.loser()] -= p.loss;
    event
}

/// One fully occupied step: uniform edge, fair-coin roles, Fermi outcome,
/// then relaxation of every agent.
pub fn step_fully_occupied<R: Rng + ?Sized>(
    state: &mut PowerState,
    g: &SiteGraph,
    p: &BonabeauParams,
    rng: &mut R,
) -> Result<FightEvent> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    if state.n() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: state.n(),
        });
    }
    let (u, v) = g.edges()[rng.gen_range(0..g.edge_count())];
    let (attacker, defender) = if rng.gen::<bool>() { (u, v) } else { (v, u) };
    let event = resolve_fight(&mut state.h, attacker, defender, p, state.t, rng);
    relax(state, p.mu);
    state.t += 1;
    Ok(event)
}

/// Agents on a square lattice with vacancies.
#[derive(Debug, Clone)]
pub struct LatticeWorld {
    lattice: SiteGraph,
    occupant: Vec<Option<usize>>,
    position: Vec<usize>,
    rho: f64,
}

impl LatticeWorld {
    /// `side x side` lattice holding `round(rho * side^2)` agents at uniformly
    /// random distinct sites.
    pub fn new<R: Rng + ?Sized>(
        side: usize,
        boundary: Boundary,
        rho: f64,
        rng: &mut R,
    ) -> Result<Self> {
        check_range("rho", rho, rho > 0.0 && rho <= 1.0, "must lie in (0,1]")?;
        let lattice = SiteGraph::family(Family::Lattice2d, side * side, boundary)?;
        let sites = lattice.n();
        let agents = (rho * sites as f64).round() as usize;
        if agents == 0 {
            return Err(Error::Param {
                name: "rho",
                value: rho,
                expected: "must place at least one agent",
            });
        }
        let mut order: Vec<usize> = (0..sites).collect();
        order.shuffle(rng);
        order.truncate(agents);
        Self::with_positions(lattice, order, rho)
    }

    /// Places agent `k` at `positions[k]`.
    pub fn with_positions(lattice: SiteGraph, positions: Vec<usize>, rho: f64) -> Result<Self> {
        let mut occupant = vec![None; lattice.n()];
        for (agent, &site) in positions.iter().enumerate() {
            if site >= lattice.n() || occupant[site].is_some() {
                return Err(Error::Param {
                    name: "position",
                    value: site as f64,
                    expected: "distinct in-range sites",
                });
            }
            occupant[site] = Some(agent);
        }
        Ok(LatticeWorld {
            lattice,
            occupant,
            position: positions,
            rho,
        })
    }

    pub fn lattice(&self) -> &SiteGraph {
        &self.lattice
    }

    pub fn agents(&self) -> usize {
        self.position.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn position(&self, agent: usize) -> usize {
        self.position[agent]
    }

    pub fn occupant(&self, site: usize) -> Option<usize> {
        self.occupant[site]
    }

    /// Checks that `occupant` and `position` are mutually inverse.
    pub fn is_consistent(&self) -> bool {
        let placed = self.occupant.iter().filter(|o| o.is_some()).count();
        placed == self.position.len()
            && self
                .position
                .iter()
                .enumerate()
                .all(|(a, &s)| self.occupant[s] == Some(a))
    }

    fn swap_sites(&mut self, a: usize, b: usize) {
        let (sa, sb) = (self.position[a], self.position[b]);
        self.position.swap(a, b);
        self.occupant[sa] = Some(b);
        self.occupant[sb] = Some(a);
    }

    fn move_to(&mut self, agent: usize, site: usize) {
        let from = self.position[agent];
        self.occupant[from] = None;
        self.occupant[site] = Some(agent);
        self.position[agent] = site;
    }
}

/// One lattice step. Relaxation follows every step unless `relax_on_move` is
/// false, in which case pure movement steps skip it.
pub fn step_lattice<R: Rng + ?Sized>(
    world: &mut LatticeWorld,
    state: &mut PowerState,
    p: &BonabeauParams,
    relax_on_move: bool,
    rng: &mut R,
) -> Result<Option<FightEvent>> {
    if state.n() != world.agents() {
        return Err(Error::SizeMismatch {
            expected: world.agents(),
            got: state.n(),
        });
    }
    let agent = rng.gen_range(0..world.agents());
    let neighbors = world.lattice.neighbors(world.position[agent]);
    let mut event = None;
    if !neighbors.is_empty() {
        let target = neighbors[rng.gen_range(0..neighbors.len())];
        match world.occupant[target] {
            None => world.move_to(agent, target),
            Some(defender) => {
                let e = resolve_fight(&mut state.h, agent, defender, p, state.t, rng);
                if e.attacker_won {
                    world.swap_sites(agent, defender);
                }
                event = Some(e);
            }
        }
    }
    if event.is_some() || relax_on_move {
        relax(state, p.mu);
    }
    state.t += 1;
    Ok(event)
}

/// Something that advances a [`PowerState`] by one step.
pub trait Stepper<R: Rng + ?Sized> {
    fn step(&mut self, state: &mut PowerState, rng: &mut R) -> Result<Option<FightEvent>>;
}

/// Fully occupied dynamics on a fixed site graph.
#[derive(Debug, Clone)]
pub struct FullyOccupied<'g> {
    pub graph: &'g SiteGraph,
    pub params: BonabeauParams,
}

impl<R: Rng + ?Sized> Stepper<R> for FullyOccupied<'_> {
    fn step(&mut self, state: &mut PowerState, rng: &mut R) -> Result<Option<FightEvent>> {
        step_fully_occupied(state, self.graph, &self.params, rng).map(Some)
    }
}

/// Partially occupied lattice dynamics.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub world: LatticeWorld,
    pub params: BonabeauParams,
    pub relax_on_move: bool,
}

impl<R: Rng + ?Sized> Stepper<R> for Lattice {
    fn step(&mut self, state: &mut PowerState, rng: &mut R) -> Result<Option<FightEvent>> {
        step_lattice(
            &mut self.world,
            state,
            &self.params,
            self.relax_on_move,
            rng,
        )
    }
}

/// What [`run`] records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    /// Sample every `stride` steps (and at step 0).
    pub stride: u64,
    /// Keep the sample series, not just the running averages.
    pub keep_samples: bool,
    pub record_fights: bool,
    /// Samples with `average_from <= t <= average_until` enter the
    /// time-averaged sigma.
    pub average_from: u64,
    pub average_until: u64,
}

impl Default for Monitor {
    fn default() -> Self {
        Monitor {
            stride: 1,
            keep_samples: true,
            record_fights: false,
            average_from: 0,
            average_until: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: u64,
    pub sigma: f64,
    pub mean_power: f64,
    pub total_power: f64,
    /// Fights per step since the previous sample.
    pub fight_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub state: PowerState,
    pub samples: Vec<TrajectorySample>,
    pub fight_log: Vec<FightEvent>,
    pub fights: u64,
    pub steps: u64,
    /// Mean of sampled sigma over the averaging window, if it held any sample.
    pub sigma_average: Option<f64>,
    pub window_samples: u64,
}

impl TrajectoryStats {
    pub fn fight_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.fights as f64 / self.steps as f64
        }
    }
}

/// Advances `initial` by `steps` steps. Deterministic given the RNG state.
pub fn run<S, R>(
    initial: PowerState,
    stepper: &mut S,
    steps: u64,
    rng: &mut R,
    monitor: Monitor,
) -> Result<TrajectoryStats>
where
    S: Stepper<R> + ?Sized,
    R: Rng + ?Sized,
{
    let stride = monitor.stride.max(1);
    let start = initial.t;
    let mut stats = TrajectoryStats {
        state: initial,
        samples: Vec::new(),
        fight_log: Vec::new(),
        fights: 0,
        steps: 0,
        sigma_average: None,
        window_samples: 0,
    };
    let mut sigma_sum = 0.0;
    let mut fights_since = 0u64;
    let mut steps_since = 0u64;
    let mut sample = |stats: &mut TrajectoryStats, fights_since: u64, steps_since: u64| {
        let s = &stats.state;
        let sig = s.sigma();
        if (monitor.average_from..=monitor.average_until).contains(&s.t) {
            sigma_sum += sig;
            stats.window_samples += 1;
        }
        if monitor.keep_samples {
            stats.samples.push(TrajectorySample {
                t: s.t,
                sigma: sig,
                mean_power: s.mean(),
                total_power: s.total(),
                fight_rate: if steps_since == 0 {
                    0.0
                } else {
                    fights_since as f64 / steps_since as f64
                },
            });
        }
    };
    sample(&mut stats, 0, 0);
    for k in 1..=steps {
        if let Some(event) = stepper.step(&mut stats.state, rng)? {
            stats.fights += 1;
            fights_since += 1;
            if monitor.record_fights {
                stats.fight_log.push(event);
            }
        }
        steps_since += 1;
        if k % stride == 0 || k == steps {
            sample(&mut stats, fights_since, steps_since);
            fights_since = 0;
            steps_since = 0;
        }
    }
    stats.steps = stats.state.t - start;
    if stats.window_samples > 0 {
        stats.sigma_average = Some(sigma_sum / stats.window_samples as f64);
    }
    Ok(stats)
}
