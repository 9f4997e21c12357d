//! Subcommand implementations. Each returns its outputs as in-memory
//! artifacts; `main` decides where they go.

use bonabeau_core::bonabeau::{run, FullyOccupied, Lattice, Monitor};
use bonabeau_core::competing::{run_to_termination, EdgeSelection, EtaSchedule};
use bonabeau_core::meanfield::{mean_closed_form, mean_limit, meanfield_agent_map};
use bonabeau_core::seed::{replicate_rng, replicate_seed};
use bonabeau_core::spectral::{
    asymptotic_critical_coupling, asymptotic_critical_mu, lambda1, report_from_lambda1,
};
use bonabeau_core::{
    BonabeauParams, Classification, CompetingParams, LatticeWorld, MeanfieldConfig, PowerState,
    SiteGraph,
};
use rayon::prelude::*;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::cells::{self, Cell};
use crate::config::{Axis, ExperimentConfig, Model};
use crate::error::CliError;
use crate::output::{float, Table};
use crate::row;
use crate::svg::{emit_svg, PlotPoint};

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

impl Artifact {
    fn new(name: &str, content: String) -> Self {
        Artifact {
            name: name.into(),
            content,
        }
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))
}

fn require_model(cfg: &ExperimentConfig, cmd: &str, allowed: &[Model]) -> Result<(), CliError> {
    if allowed.contains(&cfg.model) {
        Ok(())
    } else {
        let names: Vec<&str> = allowed.iter().map(|m| m.name()).collect();
        Err(CliError::Config(format!(
            "model: `{cmd}` needs {}, got {}",
            names.join(" or "),
            cfg.model
        )))
    }
}

fn bonabeau_params(cell: &Cell) -> Result<BonabeauParams, CliError> {
    Ok(BonabeauParams::new(cell.eta()?, cell.loss()?, cell.mu()?)?)
}

const STABILITY_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "edge_count",
    "lambda1",
    "mu",
    "eta",
    "F",
    "coupling",
    "indicator",
    "classification",
    "critical_coupling",
    "asymptotic_threshold",
    "critical_mu",
    "asymptotic_critical_mu",
];

/// Linear stability of the egalitarian state for every grid cell.
pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    require_model(cfg, "stability", &[Model::BonabeauFull])?;
    let cells = cells::expand(cfg);
    let graphs = cells::graphs(cfg, &cells)?;
    let mut spectra = BTreeMap::new();
    let mut table = Table::new(STABILITY_HEADER);
    for cell in &cells {
        let g = &graphs[&cell.n];
        let params = bonabeau_params(cell)?;
        let l1 = match spectra.entry(cell.n) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(slot) => {
                if g.edge_count() == 0 {
                    return Err(bonabeau_core::Error::NoEdges.into());
                }
                if !g.is_connected() {
                    return Err(
                        bonabeau_core::Error::Disconnected(g.connected_components().len()).into(),
                    );
                }
                *slot.insert(lambda1(g)?)
            }
        };
        let r = report_from_lambda1(g.n(), g.edge_count(), l1, &params);
        table.push(row![
            cfg.graph.id(cell.n),
            g.n(),
            g.edge_count(),
            float(r.lambda1),
            float(params.mu()),
            float(params.eta()),
            float(params.loss()),
            float(params.coupling()),
            float(r.indicator),
            r.classification,
            float(r.critical_coupling),
            float(asymptotic_critical_coupling(params.mu())?),
            float(r.critical_mu()),
            float(asymptotic_critical_mu(params.coupling())),
        ]);
    }
    Ok(table)
}

/// Aggregate of one sweep cell over its replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub graph_id: String,
    pub n: usize,
    pub cell_key: u64,
    pub replicates: u32,
    pub mean_sigma: f64,
    pub sd_sigma: f64,
    pub fight_rate: f64,
    /// Fully occupied model only.
    pub predicted: Option<Classification>,
    pub critical_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct ReplicateResult {
    seed: u64,
    sigma: f64,
    fight_rate: f64,
    final_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: Table,
    pub replicates: Table,
}

const SWEEP_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "model",
    "F",
    "eta",
    "mu",
    "rho",
    "steps",
    "warmup",
    "measure_window",
    "sample_stride",
    "perturbation",
    "replicates",
    "master_seed",
    "cell_key",
    "mean_sigma",
    "sd_sigma",
    "fight_rate",
    "predicted_classification",
    "critical_mu",
];

const REPLICATE_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "model",
    "F",
    "eta",
    "mu",
    "rho",
    "steps",
    "warmup",
    "measure_window",
    "sample_stride",
    "perturbation",
    "master_seed",
    "cell_key",
    "replicate",
    "seed",
    "time_avg_sigma",
    "final_sigma",
    "fight_rate",
];

fn run_replicate(
    cfg: &ExperimentConfig,
    g: &SiteGraph,
    cell: &Cell,
    replicate: u32,
    steps: u64,
) -> Result<ReplicateResult, CliError> {
    let key = cell.key();
    let mut rng = replicate_rng(cfg.master_seed, key, replicate as u64);
    let params = bonabeau_params(cell)?;
    let monitor = Monitor {
        stride: cfg.sample_stride,
        keep_samples: false,
        record_fights: false,
        average_from: cfg.warmup,
        average_until: cfg.warmup + cfg.measure_window,
    };
    let stats = match cfg.model {
        Model::BonabeauFull => {
            let initial = PowerState::perturbed(g.n(), cfg.perturbation, &mut rng);
            let mut stepper = FullyOccupied { graph: g, params };
            run(initial, &mut stepper, steps, &mut rng, monitor)?
        }
        Model::BonabeauLattice => {
            let side = (g.n() as f64).sqrt().round() as usize;
            let rho = cfg.params.rho.expect("validated");
            let world = LatticeWorld::new(side, cfg.graph.boundary(), rho, &mut rng)?;
            let initial = PowerState::perturbed(world.agents(), cfg.perturbation, &mut rng);
            let mut stepper = Lattice {
                world,
                params,
                relax_on_move: cfg.params.relax_on_move,
            };
            run(initial, &mut stepper, steps, &mut rng, monitor)?
        }
        Model::Competing => unreachable!("rejected before dispatch"),
    };
    let sigma = stats.sigma_average.ok_or_else(|| {
        CliError::Config(format!(
            "measure window [{}, {}] holds no sample; lower sample_stride",
            monitor.average_from, monitor.average_until
        ))
    })?;
    Ok(ReplicateResult {
        seed: replicate_seed(cfg.master_seed, key, replicate as u64),
        sigma,
        fight_rate: stats.fight_rate(),
        final_sigma: stats.state.sigma(),
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Runs every (cell, replicate) pair, in parallel, and aggregates the
/// time-averaged sigma per cell. Output order and values do not depend on
/// the thread count.
pub fn cmd_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepOutput, CliError> {
    require_model(cfg, "sweep", &[Model::BonabeauFull, Model::BonabeauLattice])?;
    let steps = cfg
        .steps
        .ok_or_else(|| CliError::Config("steps: required for sweep".into()))?;
    let cells = cells::expand(cfg);
    let graphs = cells::graphs(cfg, &cells)?;
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<ReplicateResult> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| run_replicate(cfg, &graphs[&cells[c].n], &cells[c], r, steps))
            .collect::<Result<_, _>>()
    })?;

    let rho = match cfg.model {
        Model::BonabeauLattice => float(cfg.params.rho.expect("validated")),
        _ => "1".into(),
    };
    let mut summary = Table::new(SWEEP_HEADER);
    let mut replicates = Table::new(REPLICATE_HEADER);
    let mut rows = Vec::with_capacity(cells.len());
    let mut spectra = BTreeMap::new();
    for (c, cell) in cells.iter().enumerate() {
        let g = &graphs[&cell.n];
        let params = bonabeau_params(cell)?;
        let key = cell.key();
        let graph_id = cfg.graph.id(cell.n);
        let reps = &results[c * cfg.replicates as usize..(c + 1) * cfg.replicates as usize];
        let common = row![
            graph_id,
            g.n(),
            cfg.model,
            float(params.loss()),
            float(params.eta()),
            float(params.mu()),
            rho,
            steps,
            cfg.warmup,
            cfg.measure_window,
            cfg.sample_stride,
            float(cfg.perturbation),
        ];
        for (r, res) in reps.iter().enumerate() {
            let mut line = common.clone();
            line.extend(row![
                cfg.master_seed,
                key,
                r,
                res.seed,
                float(res.sigma),
                float(res.final_sigma),
                float(res.fight_rate),
            ]);
            replicates.push(line);
        }

        let sigmas: Vec<f64> = reps.iter().map(|r| r.sigma).collect();
        let (mean_sigma, sd_sigma) = mean_sd(&sigmas);
        let fight_rate = reps.iter().map(|r| r.fight_rate).sum::<f64>() / reps.len() as f64;
        let (predicted, critical_mu) =
            if cfg.model == Model::BonabeauFull && g.is_connected() && g.edge_count() > 0 {
                let l1 = match spectra.entry(cell.n) {
                    Entry::Occupied(e) => *e.get(),
                    Entry::Vacant(slot) => *slot.insert(lambda1(g)?),
                };
                let r = report_from_lambda1(g.n(), g.edge_count(), l1, &params);
                (Some(r.classification), Some(r.critical_mu()))
            } else {
                (None, None)
            };
        let mut line = common;
        line.extend(row![
            cfg.replicates,
            cfg.master_seed,
            key,
            float(mean_sigma),
            float(sd_sigma),
            float(fight_rate),
            predicted.map_or("na".into(), |p| p.to_string()),
            critical_mu.map_or("na".into(), float),
        ]);
        summary.push(line);
        rows.push(SweepRow {
            cell: cell.clone(),
            graph_id,
            n: g.n(),
            cell_key: key,
            replicates: cfg.replicates,
            mean_sigma,
            sd_sigma,
            fight_rate,
            predicted,
            critical_mu,
        });
    }
    Ok(SweepOutput {
        rows,
        summary,
        replicates,
    })
}

fn schedule_label(s: &EtaSchedule) -> String {
    match s {
        EtaSchedule::Constant(e) => float(*e),
        EtaSchedule::Piecewise(table) => table
            .iter()
            .map(|(t, e)| format!("{t}:{e:?}"))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn competing_params(cfg: &ExperimentConfig, cell: &Cell) -> Result<CompetingParams, CliError> {
    let schedule = match (cell.eta, &cfg.params.eta_schedule) {
        (Some(e), _) => EtaSchedule::Constant(e),
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(CliError::Config("params.eta: required".into())),
    };
    Ok(CompetingParams::new(cell.ell()?, schedule)?.with_selection(cfg.params.selection))
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> u64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

const COMPETING_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "ell",
    "eta",
    "selection",
    "step_cap",
    "master_seed",
    "cell_key",
    "replicate",
    "seed",
    "terminal",
    "steps",
    "fights",
    "final_Z",
    "final_sigma",
    "absorbed",
];

const COMPETING_SUMMARY_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "ell",
    "eta",
    "selection",
    "step_cap",
    "master_seed",
    "cell_key",
    "replicates",
    "terminal",
    "fights_min",
    "fights_q25",
    "fights_median",
    "fights_q75",
    "fights_max",
    "min_final_sigma",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CompetingOutput {
    pub runs: Table,
    pub summary: Table,
}

/// Runs the competing model to termination for every cell and replicate.
pub fn cmd_competing(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<CompetingOutput, CliError> {
    require_model(cfg, "competing", &[Model::Competing])?;
    let cells = cells::expand(cfg);
    let graphs = cells::graphs(cfg, &cells)?;
    let params: Vec<CompetingParams> = cells
        .iter()
        .map(|c| competing_params(cfg, c))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let outcomes = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let mut rng = replicate_rng(cfg.master_seed, cells[c].key(), r as u64);
                run_to_termination(
                    &graphs[&cells[c].n],
                    &params[c],
                    &mut rng,
                    cfg.params.step_cap,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let selection = match cfg.params.selection {
        EdgeSelection::AllEdges => "all_edges",
        EdgeSelection::FightableOnly => "fightable_only",
    };
    let mut runs = Table::new(COMPETING_HEADER);
    let mut summary = Table::new(COMPETING_SUMMARY_HEADER);
    for (c, cell) in cells.iter().enumerate() {
        let g = &graphs[&cell.n];
        let p = &params[c];
        let key = cell.key();
        let common = row![
            cfg.graph.id(cell.n),
            g.n(),
            p.ell(),
            schedule_label(p.schedule()),
            selection,
            cfg.params.step_cap,
            cfg.master_seed,
            key,
        ];
        let reps = &outcomes[c * cfg.replicates as usize..(c + 1) * cfg.replicates as usize];
        for (r, o) in reps.iter().enumerate() {
            let mut line = common.clone();
            line.extend(row![
                r,
                replicate_seed(cfg.master_seed, key, r as u64),
                o.terminal,
                o.steps,
                o.fights,
                o.state.z(),
                float(o.state.sigma()),
                o.state.absorbed(p.ell()).len(),
            ]);
            runs.push(line);
        }
        let mut fights: Vec<u64> = reps.iter().map(|o| o.fights).collect();
        fights.sort_unstable();
        let min_sigma = reps
            .iter()
            .map(|o| o.state.sigma())
            .fold(f64::INFINITY, f64::min);
        let mut line = common;
        line.extend(row![
            cfg.replicates,
            reps.iter().filter(|o| o.terminal).count(),
            fights[0],
            quantile(&fights, 0.25),
            quantile(&fights, 0.5),
            quantile(&fights, 0.75),
            fights[fights.len() - 1],
            float(min_sigma),
        ]);
        summary.push(line);
    }
    Ok(CompetingOutput { runs, summary })
}

const MEANFIELD_HEADER: &[&str] = &[
    "graph_id",
    "n",
    "mu",
    "eta",
    "F",
    "master_seed",
    "cell_key",
    "t",
    "mean",
    "mean_closed_form",
    "mean_limit",
    "sigma",
];

/// Iterates the per-agent mean-field map from `h0` (plus the configured
/// perturbation) and tracks the population mean against its closed form.
pub fn cmd_meanfield(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    require_model(cfg, "meanfield", &[Model::BonabeauFull])?;
    let cells = cells::expand(cfg);
    let graphs = cells::graphs(cfg, &cells)?;
    let mut table = Table::new(MEANFIELD_HEADER);
    for cell in &cells {
        let g = &graphs[&cell.n];
        let params = bonabeau_params(cell)?;
        let mf = MeanfieldConfig::new(params.mu(), params.loss(), g.n())?;
        let key = cell.key();
        let mut rng = replicate_rng(cfg.master_seed, key, 0);
        let mut h = PowerState::perturbed(g.n(), cfg.perturbation, &mut rng).h;
        h.iter_mut().for_each(|x| *x += cfg.meanfield.h0);
        let h0 = h.iter().sum::<f64>() / g.n() as f64;
        let limit = mean_limit(&mf);
        for t in 0..=cfg.meanfield.iterations {
            if t > 0 {
                h = meanfield_agent_map(&h, g, &params)?;
            }
            let mean = h.iter().sum::<f64>() / g.n() as f64;
            table.push(row![
                cfg.graph.id(cell.n),
                g.n(),
                float(params.mu()),
                float(params.eta()),
                float(params.loss()),
                cfg.master_seed,
                key,
                t,
                float(mean),
                float(mean_closed_form(h0, t, &mf)),
                float(limit),
                float(bonabeau_core::sigma(&h)),
            ]);
        }
    }
    Ok(table)
}

/// Reads a sweep summary CSV and renders time-averaged sigma against `axis`.
pub fn cmd_plot(sweep_csv: &str, axis: Axis) -> Result<String, CliError> {
    let mut reader = csv::Reader::from_reader(sweep_csv.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Plot(format!("input lacks column `{name}`")))
    };
    let x_col = col(axis.name())?;
    let f_col = col("F")?;
    let s_col = col("mean_sigma")?;
    let group_cols: Vec<usize> = ["graph_id", "n", "eta", "mu", "rho"]
        .iter()
        .filter(|&&c| c != axis.name())
        .map(|c| col(c))
        .collect::<Result<_, _>>()?;
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let num = |i: usize| -> Result<f64, CliError> {
            let s = &record[i];
            s.parse::<f64>().map_err(|_| {
                CliError::Plot(format!(
                    "row {}: column `{}` is not a number: {s}",
                    line + 1,
                    &headers[i]
                ))
            })
        };
        let group = group_cols
            .iter()
            .map(|&i| format!("{}={}", &headers[i], &record[i]))
            .collect::<Vec<_>>()
            .join(" ");
        points.push(PlotPoint {
            x: num(x_col)?,
            loss: num(f_col)?,
            group,
            sigma: num(s_col)?,
        });
    }
    emit_svg(&points, axis.name())
}

/// Everything `sweep` writes: summary CSV, per-replicate CSV and the plot.
pub fn sweep_artifacts(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<Artifact>, CliError> {
    let out = cmd_sweep(cfg, threads)?;
    let csv = out.summary.to_csv()?;
    let svg = cmd_plot(&csv, cfg.plot_x)?;
    Ok(vec![
        Artifact::new("sweep.csv", csv),
        Artifact::new("sweep_replicates.csv", out.replicates.to_csv()?),
        Artifact::new("sweep.svg", svg),
    ])
}

pub fn competing_artifacts(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<Artifact>, CliError> {
    let out = cmd_competing(cfg, threads)?;
    Ok(vec![
        Artifact::new("competing.csv", out.runs.to_csv()?),
        Artifact::new("competing_summary.csv", out.summary.to_csv()?),
    ])
}

pub fn stability_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    Ok(vec![Artifact::new(
        "stability.csv",
        cmd_stability(cfg)?.to_csv()?,
    )])
}

pub fn meanfield_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    Ok(vec![Artifact::new(
        "meanfield.csv",
        cmd_meanfield(cfg)?.to_csv()?,
    )])
}

pub fn plot_artifacts(sweep_csv: &str, axis: Axis) -> Result<Vec<Artifact>, CliError> {
    Ok(vec![Artifact::new("plot.svg", cmd_plot(sweep_csv, axis)?)])
}
