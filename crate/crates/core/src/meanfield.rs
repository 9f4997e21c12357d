//! Deterministic mean-field approximation of the fully occupied dynamics.
//!
//! Each agent `i` is involved in a fight with probability `d_i / |E|`, giving
//!
//! ```text
//! h_i' = (1 - d_i/|E|)(1 - mu) h_i
//!      + (1 - mu)/|E| * sum_{j in N_i} [h_i + (1 + F) Q_ij - F]
//! ```
//!
//! Summing over agents the `Q_ij` terms pair up, so the population mean obeys
//! the scalar recursion `hbar' = (1 - mu) hbar + drift` with
//! `drift = (1 - mu)(1 - F)/n`.

use crate::bonabeau::{fight_probability, BonabeauParams};
use crate::error::{check_range, Error, Result};
use crate::graph::SiteGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanfieldConfig {
    mu: f64,
    loss: f64,
    n: usize,
}

impl MeanfieldConfig {
    pub fn new(mu: f64, loss: f64, n: usize) -> Result<Self> {
        check_range("mu", mu, mu > 0.0 && mu < 1.0, "must lie in (0,1)")?;
        check_range("F", loss, loss >= 1.0, "must be >= 1")?;
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(MeanfieldConfig { mu, loss, n })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(1 - mu)(1 - F)/n`; never positive, zero exactly when `F = 1`.
    pub fn drift_const(&self) -> f64 {
        (1.0 - self.mu) * (1.0 - self.loss) / self.n as f64
    }
}

/// `hbar' = (1 - mu) hbar + drift_const`.
pub fn mean_step(hbar: f64, cfg: &MeanfieldConfig) -> f64 {
    (1.0 - cfg.mu) * hbar + cfg.drift_const()
}

/// Fixed point of [`mean_step`]: `(1 - mu)(1 - F)/(mu n)`.
pub fn mean_limit(cfg: &MeanfieldConfig) -> f64 {
    cfg.drift_const() / cfg.mu
}

/// `t`-fold iterate of [`mean_step`] in closed form:
/// `(1 - mu)^t h0 + drift (1 - (1 - mu)^t)/mu`.
pub fn mean_closed_form(h0: f64, t: u64, cfg: &MeanfieldConfig) -> f64 {
    let decay = (1.0 - cfg.mu).powf(t as f64);
    decay * h0 + cfg.drift_const() * (1.0 - decay) / cfg.mu
}

/// One application of the per-agent mean-field map.
pub fn meanfield_agent_map(h: &[f64], g: &SiteGraph, params: &BonabeauParams) -> Result<Vec<f64>> {
    let edges = g.edge_count();
    if edges == 0 {
        return Err(Error::NoEdges);
    }
    if h.len() != g.n() {
        return Err(Error::SizeMismatch {
            expected: g.n(),
            got: h.len(),
        });
    }
    let e = edges as f64;
    let keep = 1.0 - params.mu();
    let loss = params.loss();
    let out = (0..g.n())
        .map(|i| {
            let d = g.degree(i) as f64;
            let fights: f64 = g
                .neighbors(i)
                .iter()
                .map(|&j| h[i] + (1.0 + loss) * fight_probability(h[i], h[j], params.eta()) - loss)
                .sum();
            (1.0 - d / e) * keep * h[i] + keep / e * fights
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Boundary, Family};

    #[test]
    fn config_validation() {
        assert!(MeanfieldConfig::new(0.0, 1.0, 3).is_err());
        assert!(MeanfieldConfig::new(0.5, 0.9, 3).is_err());
        assert!(MeanfieldConfig::new(0.5, 1.0, 0).is_err());
        let c = MeanfieldConfig::new(0.5, 1.0, 3).unwrap();
        assert_eq!(c.drift_const(), 0.0);
        let c = MeanfieldConfig::new(0.5, 1.01, 3).unwrap();
        assert!(c.drift_const() < 0.0);
    }

    #[test]
    fn mean_step_examples() {
        let c = MeanfieldConfig::new(0.3, 1.0, 10).unwrap();
        assert_eq!(mean_step(2.0, &c), 0.7 * 2.0);

        let c = MeanfieldConfig::new(0.5, 3.0, 4).unwrap();
        assert_eq!(c.drift_const(), -0.25);
        assert_eq!(mean_step(0.0, &c), -0.25);
        assert_eq!(mean_limit(&c), -0.5);
        assert_eq!(mean_step(mean_limit(&c), &c), mean_limit(&c));
    }

    #[test]
    fn limit_vanishes_with_population() {
        let mut prev = f64::NEG_INFINITY;
        for n in [1, 10, 100, 1000, 10_000] {
            let l = mean_limit(&MeanfieldConfig::new(0.2, 2.0, n).unwrap());
            assert!(l > prev && l < 0.0);
            prev = l;
        }
        assert!(prev.abs() < 1e-3);
        assert_eq!(mean_limit(&MeanfieldConfig::new(0.2, 1.0, 7).unwrap()), 0.0);
    }

    #[test]
    fn zero_state_image() {
        let g = SiteGraph::family(Family::Star, 6, Boundary::Open).unwrap();
        let p = BonabeauParams::new(1.0, 1.0, 0.3).unwrap();
        let out = meanfield_agent_map(&[0.0; 6], &g, &p).unwrap();
        assert!(out.iter().all(|&x| x.abs() < 1e-15));

        // with Q = 1/2 each agent moves by (1-mu) d_i (1 - F) / (2|E|)
        let p = BonabeauParams::new(1.0, 3.0, 0.3).unwrap();
        let out = meanfield_agent_map(&[0.0; 6], &g, &p).unwrap();
        for (i, x) in out.iter().enumerate() {
            let want = 0.7 * g.degree(i) as f64 * (1.0 - 3.0) / (2.0 * 5.0);
            assert!((x - want).abs() < 1e-15);
        }
    }

    #[test]
    fn map_errors() {
        let p = BonabeauParams::new(1.0, 1.0, 0.3).unwrap();
        let g = SiteGraph::from_edges(2, []).unwrap();
        assert_eq!(meanfield_agent_map(&[0.0; 2], &g, &p), Err(Error::NoEdges));
        let g = SiteGraph::family(Family::Path, 2, Boundary::Open).unwrap();
        assert!(meanfield_agent_map(&[0.0; 3], &g, &p).is_err());
    }
}
