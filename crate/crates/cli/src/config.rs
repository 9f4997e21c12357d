//! Experiment configuration: a single TOML document with dotted sections.
//!
//! ```toml
//! model = "bonabeau_full"      # bonabeau_full | bonabeau_lattice | competing
//! seed = 42
//! steps = 1000000
//! replicates = 5
//!
//! graph.family = "star"        # or graph.edge_list = "edges.txt"
//! graph.n = 100
//!
//! params.eta = 1.0
//! params.F = 1.0
//! params.mu = 0.2
//!
//! sweep.F = [1.0, 1.5, 3.0]
//! sweep.mu = [0.05, 0.10, 0.15]
//! ```
//!
//! Unknown keys are rejected. See the README for every key and its default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bonabeau_core::competing::{EdgeSelection, EtaSchedule, DEFAULT_STEP_CAP};
use bonabeau_core::{Boundary, Family, SiteGraph};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    BonabeauFull,
    BonabeauLattice,
    Competing,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::BonabeauFull => "bonabeau_full",
            Model::BonabeauLattice => "bonabeau_lattice",
            Model::Competing => "competing",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<String>,
    seed: Option<u64>,
    steps: Option<u64>,
    warmup: Option<u64>,
    measure_window: Option<u64>,
    replicates: Option<u32>,
    sample_stride: Option<u64>,
    graph: Option<RawGraph>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    meanfield: RawMeanfield,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    plot: RawPlot,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    family: Option<String>,
    n: Option<usize>,
    boundary: Option<String>,
    edge_list: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    eta: Option<f64>,
    #[serde(rename = "F")]
    loss: Option<f64>,
    mu: Option<f64>,
    ell: Option<i64>,
    eta_schedule: Option<Vec<(u64, f64)>>,
    rho: Option<f64>,
    relax_on_move: Option<bool>,
    selection: Option<String>,
    step_cap: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInit {
    perturbation: Option<f64>,
}

#[derive(Debug, Deserialize, Default, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub n: Option<Vec<usize>>,
    #[serde(rename = "F")]
    pub loss: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub ell: Option<Vec<i64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMeanfield {
    h0: Option<f64>,
    iterations: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    states: Option<usize>,
    max_steps: Option<u64>,
    samples: Option<u64>,
    engine_states: Option<usize>,
    eps: Option<f64>,
    loser_loss: Option<i64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPlot {
    x: Option<String>,
}

/// Where the site graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Family {
        family: Family,
        n: usize,
        boundary: Boundary,
    },
    EdgeList(PathBuf),
}

impl GraphSpec {
    /// Builds the graph, substituting `n` for family graphs when a sweep
    /// overrides it.
    pub fn build(&self, n: Option<usize>) -> Result<SiteGraph, CliError> {
        match self {
            GraphSpec::Family {
                family,
                n: base,
                boundary,
            } => Ok(SiteGraph::family(*family, n.unwrap_or(*base), *boundary)?),
            GraphSpec::EdgeList(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!(
                        "graph.edge_list: cannot read {}: {e}",
                        path.display()
                    ))
                })?;
                Ok(SiteGraph::from_edge_list(&text)?)
            }
        }
    }

    /// Stable identifier echoed in every output row. Lattices carry their
    /// boundary condition.
    pub fn id(&self, n: Option<usize>) -> String {
        match self {
            GraphSpec::Family {
                family,
                n: base,
                boundary,
            } => {
                let n = n.unwrap_or(*base);
                match family {
                    Family::Lattice2d => format!("{family}-{n}-{}", boundary.name()),
                    _ => format!("{family}-{n}"),
                }
            }
            GraphSpec::EdgeList(path) => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                format!("edges-{}", stem.replace([',', '"', '\n'], "_"))
            }
        }
    }

    pub fn base_n(&self) -> Option<usize> {
        match self {
            GraphSpec::Family { n, .. } => Some(*n),
            GraphSpec::EdgeList(_) => None,
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            GraphSpec::Family { boundary, .. } => *boundary,
            GraphSpec::EdgeList(_) => Boundary::default(),
        }
    }
}

/// Base model parameters; any of them may be overridden per sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub eta: Option<f64>,
    pub loss: Option<f64>,
    pub mu: Option<f64>,
    pub ell: Option<i64>,
    pub eta_schedule: Option<EtaSchedule>,
    pub rho: Option<f64>,
    pub relax_on_move: bool,
    pub selection: EdgeSelection,
    pub step_cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanfieldSettings {
    pub h0: f64,
    pub iterations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    pub states: usize,
    pub max_steps: u64,
    pub samples: u64,
    pub engine_states: usize,
    pub eps: f64,
    pub loser_loss: i64,
}

/// Sweep axis usable as the plot's x coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Mu,
    Eta,
    Loss,
    N,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Mu => "mu",
            Axis::Eta => "eta",
            Axis::Loss => "F",
            Axis::N => "n",
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mu" => Ok(Axis::Mu),
            "eta" => Ok(Axis::Eta),
            "F" => Ok(Axis::Loss),
            "n" => Ok(Axis::N),
            other => Err(format!(
                "plot.x: unknown axis `{other}` (expected mu, eta, F or n)"
            )),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub graph: GraphSpec,
    pub params: ParamSet,
    pub steps: Option<u64>,
    pub warmup: u64,
    pub measure_window: u64,
    pub replicates: u32,
    pub sample_stride: u64,
    pub master_seed: u64,
    pub perturbation: f64,
    pub sweep: RawSweep,
    pub meanfield: MeanfieldSettings,
    pub verify: VerifySettings,
    pub plot_x: Axis,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(msg()))
    }
}

fn check_mu(key: &str, v: f64) -> Result<(), CliError> {
    check(v > 0.0 && v < 1.0, || {
        format!("{key} must lie in (0,1), got {v}")
    })
}

fn check_eta(key: &str, v: f64) -> Result<(), CliError> {
    check(v > 0.0 && v.is_finite(), || {
        format!("{key} must be > 0, got {v}")
    })
}

fn check_loss(key: &str, v: f64) -> Result<(), CliError> {
    check(v >= 1.0 && v.is_finite(), || {
        format!("{key} must be >= 1, got {v}")
    })
}

fn check_ell(key: &str, v: i64) -> Result<(), CliError> {
    check(v >= 1, || {
        format!("{key} must be a positive integer, got {v}")
    })
}

fn check_grid<T: Copy>(
    key: &str,
    grid: &Option<Vec<T>>,
    each: impl Fn(&str, T) -> Result<(), CliError>,
) -> Result<(), CliError> {
    if let Some(values) = grid {
        check(!values.is_empty(), || format!("{key} must not be empty"))?;
        for &v in values {
            each(key, v)?;
        }
    }
    Ok(())
}

/// Parses and validates a TOML configuration document. Relative edge-list
/// paths are resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;

    let model = match raw.model.as_deref() {
        Some("bonabeau_full") => Model::BonabeauFull,
        Some("bonabeau_lattice") => Model::BonabeauLattice,
        Some("competing") => Model::Competing,
        Some(other) => {
            return Err(invalid(format!(
                "model: unknown model `{other}` (expected bonabeau_full, bonabeau_lattice or competing)"
            )))
        }
        None => return Err(invalid("model: missing (expected bonabeau_full, bonabeau_lattice or competing)")),
    };

    let raw_graph = raw.graph.ok_or_else(|| {
        invalid("graph: missing graph spec (set graph.family and graph.n, or graph.edge_list)")
    })?;
    let graph = match (raw_graph.family, raw_graph.edge_list) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "graph: set either graph.family or graph.edge_list, not both",
            ))
        }
        (None, None) => {
            return Err(invalid(
                "graph: missing graph spec (set graph.family and graph.n, or graph.edge_list)",
            ))
        }
        (Some(family), None) => {
            let family =
                Family::from_str(&family).map_err(|e| invalid(format!("graph.family: {e}")))?;
            let n = raw_graph
                .n
                .ok_or_else(|| invalid("graph.n: missing vertex count"))?;
            check(n >= 1, || "graph.n must be >= 1".into())?;
            let boundary = match raw_graph.boundary {
                Some(b) => {
                    Boundary::from_str(&b).map_err(|e| invalid(format!("graph.boundary: {e}")))?
                }
                None => Boundary::default(),
            };
            GraphSpec::Family {
                family,
                n,
                boundary,
            }
        }
        (None, Some(path)) => {
            check(
                raw_graph.n.is_none() && raw_graph.boundary.is_none(),
                || "graph.n and graph.boundary only apply to graph.family".into(),
            )?;
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path,
            };
            GraphSpec::EdgeList(path)
        }
    };

    let p = raw.params;
    if let Some(v) = p.eta {
        check_eta("params.eta", v)?;
    }
    if let Some(v) = p.loss {
        check_loss("params.F", v)?;
    }
    if let Some(v) = p.mu {
        check_mu("params.mu", v)?;
    }
    if let Some(v) = p.ell {
        check_ell("params.ell", v)?;
    }
    if let Some(v) = p.rho {
        check(v > 0.0 && v <= 1.0, || {
            format!("params.rho must lie in (0,1], got {v}")
        })?;
    }
    let eta_schedule = match p.eta_schedule {
        Some(table) => Some(
            EtaSchedule::piecewise(table)
                .map_err(|e| invalid(format!("params.eta_schedule: {e}")))?,
        ),
        None => None,
    };
    check(p.eta.is_none() || eta_schedule.is_none(), || {
        "params.eta and params.eta_schedule are mutually exclusive".into()
    })?;
    let selection = match p.selection.as_deref() {
        None | Some("all_edges") => EdgeSelection::AllEdges,
        Some("fightable_only") => EdgeSelection::FightableOnly,
        Some(other) => {
            return Err(invalid(format!(
                "params.selection: unknown mode `{other}` (expected all_edges or fightable_only)"
            )))
        }
    };
    let step_cap = p.step_cap.unwrap_or(DEFAULT_STEP_CAP);
    check(step_cap >= 1, || "params.step_cap must be >= 1".into())?;

    let sweep = raw.sweep;
    check_grid("sweep.mu", &sweep.mu, check_mu)?;
    check_grid("sweep.eta", &sweep.eta, check_eta)?;
    check_grid("sweep.F", &sweep.loss, check_loss)?;
    check_grid("sweep.ell", &sweep.ell, check_ell)?;
    check_grid("sweep.n", &sweep.n, |k, v: usize| {
        check(v >= 1, || format!("{k} values must be >= 1"))
    })?;
    if sweep.n.is_some() {
        check(matches!(graph, GraphSpec::Family { .. }), || {
            "sweep.n requires graph.family".into()
        })?;
    }

    let resolved = |base: Option<f64>, grid: &Option<Vec<f64>>| base.is_some() || grid.is_some();
    match model {
        Model::BonabeauFull | Model::BonabeauLattice => {
            for (key, ok) in [
                ("params.eta", resolved(p.eta, &sweep.eta)),
                ("params.F", resolved(p.loss, &sweep.loss)),
                ("params.mu", resolved(p.mu, &sweep.mu)),
            ] {
                check(ok, || format!("{key}: required for model {model}"))?;
            }
        }
        Model::Competing => {
            check(p.ell.is_some() || sweep.ell.is_some(), || {
                "params.ell: required for model competing".into()
            })?;
            check(
                p.eta.is_some() || eta_schedule.is_some() || sweep.eta.is_some(),
                || "params.eta: required for model competing (or params.eta_schedule)".into(),
            )?;
            check(p.loss.is_none() && sweep.loss.is_none(), || {
                "params.F: the competing model fixes F = 1".into()
            })?;
        }
    }
    if model == Model::BonabeauLattice {
        check(p.rho.is_some(), || {
            "params.rho: required for model bonabeau_lattice".into()
        })?;
        check(
            matches!(
                graph,
                GraphSpec::Family {
                    family: Family::Lattice2d,
                    ..
                }
            ),
            || "graph.family: model bonabeau_lattice needs lattice2d".into(),
        )?;
    }

    if let Some(steps) = raw.steps {
        check(steps >= 1, || "steps must be >= 1".into())?;
    }
    let steps = raw.steps;
    let total = steps.unwrap_or(0);
    let measure_window = raw.measure_window.unwrap_or(total / 5);
    let warmup = match raw.warmup {
        Some(w) => w,
        None => total.saturating_sub(measure_window),
    };
    if steps.is_some() {
        check(warmup.saturating_add(measure_window) <= total, || {
            format!(
                "warmup + measure_window must be <= steps ({warmup} + {measure_window} > {total})"
            )
        })?;
    } else {
        check(raw.warmup.is_none() && raw.measure_window.is_none(), || {
            "warmup and measure_window need steps".into()
        })?;
    }
    let replicates = raw.replicates.unwrap_or(1);
    check(replicates >= 1, || "replicates must be >= 1".into())?;
    let sample_stride = raw.sample_stride.unwrap_or(10);
    check(sample_stride >= 1, || "sample_stride must be >= 1".into())?;
    let perturbation = raw.init.perturbation.unwrap_or(0.0);
    check(perturbation >= 0.0 && perturbation.is_finite(), || {
        format!("init.perturbation must be >= 0, got {perturbation}")
    })?;

    let meanfield = MeanfieldSettings {
        h0: raw.meanfield.h0.unwrap_or(0.0),
        iterations: raw.meanfield.iterations.unwrap_or(200),
    };
    check(meanfield.h0.is_finite(), || {
        "meanfield.h0 must be finite".into()
    })?;

    let v = raw.verify;
    let verify = VerifySettings {
        states: v.states.unwrap_or(200),
        max_steps: v.max_steps.unwrap_or(20),
        samples: v.samples.unwrap_or(20_000),
        engine_states: v.engine_states.unwrap_or(5),
        eps: v.eps.unwrap_or(1e-6),
        loser_loss: v.loser_loss.unwrap_or(1),
    };
    check(verify.samples >= 10_000, || {
        "verify.samples must be >= 10000".into()
    })?;
    check((1e-8..=1e-4).contains(&verify.eps), || {
        format!("verify.eps must lie in [1e-8, 1e-4], got {}", verify.eps)
    })?;
    check(verify.loser_loss >= 1, || {
        "verify.loser_loss must be >= 1".into()
    })?;

    let plot_x = match raw.plot.x {
        Some(x) => Axis::from_str(&x).map_err(invalid)?,
        None => Axis::Mu,
    };

    Ok(ExperimentConfig {
        model,
        graph,
        params: ParamSet {
            eta: p.eta,
            loss: p.loss,
            mu: p.mu,
            ell: p.ell,
            eta_schedule,
            rho: p.rho,
            relax_on_move: p.relax_on_move.unwrap_or(true),
            selection,
            step_cap,
        },
        steps,
        warmup,
        measure_window,
        replicates,
        sample_stride,
        master_seed: raw.seed.unwrap_or(0),
        perturbation,
        sweep,
        meanfield,
        verify,
        plot_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        model = "bonabeau_full"
        seed = 42
        steps = 1000000
        graph.family = "star"
        graph.n = 100
        params.eta = 1.0
        params.F = 1.0
        params.mu = 0.2
    "#;

    fn err(text: &str) -> String {
        match parse_config(text, None) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.model, Model::BonabeauFull);
        assert_eq!(c.master_seed, 42);
        assert_eq!(c.measure_window, 200_000);
        assert_eq!(c.warmup, 800_000);
        assert_eq!(c.replicates, 1);
        assert_eq!(c.graph.id(None), "star-100");
        assert_eq!(c.params.mu, Some(0.2));
    }

    #[test]
    fn table_syntax_is_equivalent() {
        let text = r#"
            model = "bonabeau_full"
            seed = 42
            steps = 1000000
            [graph]
            family = "star"
            n = 100
            [params]
            eta = 1.0
            F = 1.0
            mu = 0.2
        "#;
        assert_eq!(
            parse_config(text, None).unwrap(),
            parse_config(MINIMAL, None).unwrap()
        );
    }

    #[test]
    fn range_errors_name_the_key() {
        let m = err(&MINIMAL.replace("params.mu = 0.2", "params.mu = 1.0"));
        assert!(m.contains("mu must lie in (0,1)"), "{m}");
        let m = err(&MINIMAL.replace("params.F = 1.0", "params.F = 0.5"));
        assert!(m.contains("params.F"), "{m}");
        let m = err(&format!("{MINIMAL}\nsweep.mu = [0.2, 1.5]"));
        assert!(m.contains("sweep.mu must lie in (0,1)"), "{m}");
        let m = err(&format!("{MINIMAL}\nsweep.eta = []"));
        assert!(m.contains("sweep.eta must not be empty"), "{m}");
    }

    #[test]
    fn window_validation() {
        let m = err(&format!("{MINIMAL}\nwarmup = 2000000"));
        assert!(m.contains("warmup + measure_window"), "{m}");
    }

    #[test]
    fn unknown_and_missing_keys() {
        let m = err(&format!("{MINIMAL}\nparams.gamma = 3"));
        assert!(m.contains("gamma"), "{m}");
        let m = err(&MINIMAL.replace("bonabeau_full", "voter"));
        assert!(m.contains("model") && m.contains("voter"), "{m}");
        let m = err(r#"model = "bonabeau_full""#);
        assert!(m.starts_with("graph"), "{m}");
        let m = err(&MINIMAL.replace("params.mu = 0.2", ""));
        assert!(m.contains("params.mu"), "{m}");
        let m = err(&MINIMAL.replace("graph.family = \"star\"", "graph.family = \"tree\""));
        assert!(m.contains("graph.family"), "{m}");
    }

    #[test]
    fn competing_config() {
        let text = r#"
            model = "competing"
            graph.family = "path"
            graph.n = 10
            params.ell = 2
            params.eta_schedule = [[0, 1.0], [100, 0.5]]
            params.selection = "fightable_only"
            replicates = 4
        "#;
        let c = parse_config(text, None).unwrap();
        assert_eq!(c.params.selection, EdgeSelection::FightableOnly);
        assert_eq!(c.params.step_cap, DEFAULT_STEP_CAP);
        assert!(c.params.eta_schedule.is_some());

        let m = err(&text.replace("params.ell = 2", "params.ell = 0"));
        assert!(m.contains("params.ell"), "{m}");
        let m = err(&format!("{text}\nparams.F = 2.0"));
        assert!(m.contains("F = 1"), "{m}");
    }

    #[test]
    fn lattice_needs_rho_and_lattice_graph() {
        let text = r#"
            model = "bonabeau_lattice"
            steps = 1000
            graph.family = "lattice2d"
            graph.n = 16
            graph.boundary = "open"
            params.eta = 1.0
            params.F = 1.0
            params.mu = 0.2
            params.rho = 0.5
        "#;
        let c = parse_config(text, None).unwrap();
        assert_eq!(c.graph.id(None), "lattice2d-16-open");
        let m = err(&text.replace("params.rho = 0.5", ""));
        assert!(m.contains("params.rho"), "{m}");
        let m = err(&text
            .replace("lattice2d", "star")
            .replace("graph.boundary = \"open\"", ""));
        assert!(m.contains("lattice2d"), "{m}");
    }

    #[test]
    fn edge_list_paths_resolve() {
        let text = r#"
            model = "bonabeau_full"
            graph.edge_list = "g.txt"
            params.eta = 1.0
            params.F = 1.0
            params.mu = 0.5
        "#;
        let c = parse_config(text, Some(Path::new("/data"))).unwrap();
        assert_eq!(c.graph, GraphSpec::EdgeList(PathBuf::from("/data/g.txt")));
        assert_eq!(c.graph.id(None), "edges-g");
        let m = err(&format!("{text}\nsweep.n = [3]"));
        assert!(m.contains("sweep.n"), "{m}");
    }
}
