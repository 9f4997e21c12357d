//! `verify`: checks the engines against the exact one-step enumerator and
//! the Jacobian against finite differences on a small graph.

use std::fmt::Write;

use bonabeau_core::competing::EtaSchedule;
use bonabeau_core::meanfield::meanfield_agent_map;
use bonabeau_core::oracle::{
    empirical_vs_exact, enumerate_competing_step, expected_z_increment, fightable_pairs_level,
    finite_difference_jacobian, pathwise_mismatches, sample_reachable_state,
};
use bonabeau_core::seed::{fnv1a, replicate_rng};
use bonabeau_core::spectral::build_jacobian;
use bonabeau_core::{BonabeauParams, CompetingParams, CompetingState};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Seed-stream keys for the individual suites.
const SUBMARTINGALE: u64 = 1;
const ENGINE: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub text: String,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures == 0)
    }
}

fn state_hash(h: &[i64]) -> u64 {
    let bytes: Vec<u8> = h.iter().flat_map(|x| x.to_le_bytes()).collect();
    fnv1a(&bytes)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Runs the submartingale, conservation, Jacobian and engine-vs-oracle
/// suites. Deterministic given the config's seed.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let v = cfg.verify;
    let g = cfg.graph.build(None)?;
    let ell = cfg.params.ell.unwrap_or(1);
    let schedule = match (&cfg.params.eta_schedule, cfg.params.eta) {
        (Some(s), _) => s.clone(),
        (None, eta) => EtaSchedule::Constant(eta.unwrap_or(1.0)),
    };
    let engine = CompetingParams::new(ell, schedule)?.with_selection(cfg.params.selection);
    let mut rule = engine.clone();
    rule.loser_loss = v.loser_loss;

    let mut text = String::new();
    let w = &mut text;
    writeln!(
        w,
        "# verify graph={} n={} edges={} ell={} seed={} loser_loss={}",
        cfg.graph.id(None),
        g.n(),
        g.edge_count(),
        ell,
        cfg.master_seed,
        v.loser_loss
    )
    .unwrap();
    let mut suites = Vec::new();

    // States come from the unmodified engine; the rule under test is applied
    // only in the enumeration, so a corrupted rule shows up as a mismatch.
    writeln!(
        w,
        "\n## submartingale: E[dZ] >= 4n P(fight), pathwise dZ identity"
    )
    .unwrap();
    writeln!(w, "state_hash          E[dZ]                    bound                    margin                   level pathwise result").unwrap();
    let mut rng = replicate_rng(cfg.master_seed, SUBMARTINGALE, 0);
    let mut states = Vec::with_capacity(v.states);
    let mut failures = 0;
    for _ in 0..v.states {
        let s = sample_reachable_state(&g, &engine, v.max_steps, &mut rng)?;
        let inc = expected_z_increment(&s, &g, &rule)?;
        let dist = enumerate_competing_step(&s, &g, &rule)?;
        let mismatches = pathwise_mismatches(&s, &dist).len();
        let level = fightable_pairs_level(&s, &g, ell);
        let tight = inc.margin().abs() <= 1e-12;
        let ok = inc.holds() && mismatches == 0 && tight == level;
        failures += usize::from(!ok);
        writeln!(
            w,
            "{:016x}  {:<23.16e}  {:<23.16e}  {:<23.16e}  {:<5} {:<8} {}",
            state_hash(&s.h),
            inc.expected,
            inc.lower_bound,
            inc.margin(),
            level,
            mismatches,
            verdict(ok)
        )
        .unwrap();
        states.push(s);
    }
    suites.push(SuiteResult {
        name: "submartingale",
        checks: v.states,
        failures,
    });

    writeln!(
        w,
        "\n## conservation: sum h = 0 and h >= -ell after one step of the rule"
    )
    .unwrap();
    let mut failures = 0;
    for s in &states {
        let dist = enumerate_competing_step(s, &g, &rule)?;
        let bad = dist
            .branches
            .iter()
            .filter(|b| b.next.iter().sum::<i64>() != 0 || b.next.iter().any(|&x| x < -ell))
            .count();
        if bad > 0 {
            failures += 1;
            writeln!(
                w,
                "{:016x}  {bad} violating branches  FAIL",
                state_hash(&s.h)
            )
            .unwrap();
        }
    }
    writeln!(w, "{} states, {} failing", states.len(), failures).unwrap();
    suites.push(SuiteResult {
        name: "conservation",
        checks: states.len(),
        failures,
    });

    writeln!(
        w,
        "\n## jacobian: central differences of the mean-field map vs analytic"
    )
    .unwrap();
    let params = BonabeauParams::new(
        cfg.params.eta.unwrap_or(1.0),
        cfg.params.loss.unwrap_or(1.5),
        cfg.params.mu.unwrap_or(0.3),
    )?;
    let jac = build_jacobian(&g, &params)?;
    let fd = finite_difference_jacobian(
        |h| meanfield_agent_map(h, &g, &params),
        &vec![0.0; g.n()],
        v.eps,
    )?;
    let diff = jac.max_abs_diff(&fd);
    let ok = diff <= 1e-6;
    writeln!(
        w,
        "eta={:?} F={:?} mu={:?} eps={:e} max_abs_diff={:.16e} tol=1e-6 {}",
        params.eta(),
        params.loss(),
        params.mu(),
        v.eps,
        diff,
        verdict(ok)
    )
    .unwrap();
    suites.push(SuiteResult {
        name: "jacobian",
        checks: 1,
        failures: usize::from(!ok),
    });

    let tol = 5.0 / (v.samples as f64).sqrt();
    writeln!(
        w,
        "\n## engine: total variation between sampled and exact step (tol {tol:.6})"
    )
    .unwrap();
    let mut rng = replicate_rng(cfg.master_seed, ENGINE, 0);
    let mut failures = 0;
    let picks: Vec<CompetingState> = std::iter::once(CompetingState::zeros(g.n()))
        .chain(states.iter().cloned())
        .take(v.engine_states)
        .collect();
    for s in &picks {
        let tv = empirical_vs_exact(s, &g, &rule, v.samples, &mut rng)?;
        let ok = tv < tol;
        failures += usize::from(!ok);
        writeln!(
            w,
            "{:016x}  tv={:.6}  {}",
            state_hash(&s.h),
            tv,
            verdict(ok)
        )
        .unwrap();
    }
    suites.push(SuiteResult {
        name: "engine",
        checks: picks.len(),
        failures,
    });

    writeln!(w, "\n## summary").unwrap();
    for s in &suites {
        writeln!(
            w,
            "{:<14} {:>6} checks {:>6} failures  {}",
            s.name,
            s.checks,
            s.failures,
            verdict(s.failures == 0)
        )
        .unwrap();
    }
    Ok(VerifyReport { text, suites })
}
