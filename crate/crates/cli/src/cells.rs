//! Expansion of sweep grids into parameter cells.

use std::collections::BTreeMap;

use bonabeau_core::seed::fnv1a;
use bonabeau_core::SiteGraph;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// One point of the parameter grid. Fields the model does not use are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Vertex-count override for family graphs.
    pub n: Option<usize>,
    pub loss: Option<f64>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub ell: Option<i64>,
}

fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map_or("-".into(), |x| format!("{x:?}"))
}

impl Cell {
    /// Parameter values in a fixed textual form. `{:?}` on floats is the
    /// shortest exact representation, so equal values give equal strings.
    pub fn canonical(&self) -> String {
        format!(
            "n={};F={};eta={};mu={};ell={}",
            opt(&self.n),
            opt(&self.loss),
            opt(&self.eta),
            opt(&self.mu),
            opt(&self.ell)
        )
    }

    /// Seed-stream key. Depends only on the cell's own values, so adding
    /// cells to a grid leaves the streams of existing cells untouched.
    pub fn key(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }

    pub fn loss(&self) -> Result<f64, CliError> {
        self.loss
            .ok_or_else(|| CliError::Config("params.F: required".into()))
    }

    pub fn eta(&self) -> Result<f64, CliError> {
        self.eta
            .ok_or_else(|| CliError::Config("params.eta: required".into()))
    }

    pub fn mu(&self) -> Result<f64, CliError> {
        self.mu
            .ok_or_else(|| CliError::Config("params.mu: required".into()))
    }

    pub fn ell(&self) -> Result<i64, CliError> {
        self.ell
            .ok_or_else(|| CliError::Config("params.ell: required".into()))
    }
}

fn axis<T: Clone>(grid: &Option<Vec<T>>, base: Option<T>) -> Vec<Option<T>> {
    match grid {
        Some(values) => values.iter().cloned().map(Some).collect(),
        None => vec![base],
    }
}

/// Cartesian product of the grids, falling back to the base parameters on
/// axes without a grid. Axis order from outermost: n, F, eta, mu, ell.
pub fn expand(cfg: &ExperimentConfig) -> Vec<Cell> {
    let s = &cfg.sweep;
    let p = &cfg.params;
    let mut cells = Vec::new();
    for n in axis(&s.n, None) {
        for loss in axis(&s.loss, p.loss) {
            for eta in axis(&s.eta, p.eta) {
                for mu in axis(&s.mu, p.mu) {
                    for ell in axis(&s.ell, p.ell) {
                        cells.push(Cell {
                            n,
                            loss,
                            eta,
                            mu,
                            ell,
                        });
                    }
                }
            }
        }
    }
    cells
}

/// Graphs for every distinct `n` among `cells`, built once.
pub fn graphs(
    cfg: &ExperimentConfig,
    cells: &[Cell],
) -> Result<BTreeMap<Option<usize>, SiteGraph>, CliError> {
    let mut out = BTreeMap::new();
    for c in cells {
        if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(c.n) {
            slot.insert(cfg.graph.build(c.n)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const BASE: &str = r#"
        model = "bonabeau_full"
        steps = 100
        graph.family = "star"
        graph.n = 10
        params.eta = 1.0
        params.F = 1.0
        params.mu = 0.2
    "#;

    #[test]
    fn no_grid_is_one_cell() {
        let cfg = parse_config(BASE, None).unwrap();
        let cells = expand(&cfg);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].canonical(), "n=-;F=1.0;eta=1.0;mu=0.2;ell=-");
    }

    #[test]
    fn product_order() {
        let cfg = parse_config(
            &format!("{BASE}\nsweep.F = [1.0, 3.0]\nsweep.mu = [0.1, 0.2, 0.3]"),
            None,
        )
        .unwrap();
        let cells = expand(&cfg);
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].loss, Some(1.0));
        assert_eq!(cells[2].mu, Some(0.3));
        assert_eq!(cells[3].loss, Some(3.0));
        assert_eq!(cells[3].mu, Some(0.1));
    }

    #[test]
    fn keys_survive_grid_growth() {
        let small = parse_config(&format!("{BASE}\nsweep.mu = [0.1, 0.2]"), None).unwrap();
        let large =
            parse_config(&format!("{BASE}\nsweep.mu = [0.05, 0.1, 0.15, 0.2]"), None).unwrap();
        let a: Vec<u64> = expand(&small).iter().map(Cell::key).collect();
        let b: Vec<u64> = expand(&large).iter().map(Cell::key).collect();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[3]);
        assert_ne!(b[0], b[1]);
    }
}
