//! Linear stability of the egalitarian state.
//!
//! Around a uniform power vector the mean-field map has Jacobian
//! `J = (1 - mu) (a L + I)` with `a = (1 + F) eta / (4 |E|)` and `L` the graph
//! Laplacian, so every Laplacian eigenvalue `b` maps to the Jacobian eigenvalue
//! `(1 - mu)(1 + a b)`. The dominant one, built from the largest Laplacian
//! eigenvalue `lambda1`, decides stability.

use std::fmt;

use crate::bonabeau::BonabeauParams;
use crate::error::{check_range, Error, Result};
use crate::graph::SiteGraph;
use crate::linalg::Matrix;

/// Half-width of the band around 1 reported as [`Classification::Marginal`].
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

impl Classification {
    pub fn from_indicator(indicator: f64) -> Self {
        if indicator < 1.0 - MARGINAL_TOL {
            Classification::Stable
        } else if indicator > 1.0 + MARGINAL_TOL {
            Classification::Unstable
        } else {
            Classification::Marginal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub edge_count: usize,
    /// Largest Laplacian eigenvalue.
    pub lambda1: f64,
    pub params: BonabeauParams,
    /// `(1 + F) eta / (4 |E|)`.
    pub a_coeff: f64,
    /// Dominant Jacobian eigenvalue `(1 - mu)(1 + lambda1 a)`.
    pub indicator: f64,
    pub classification: Classification,
    /// Value of `(1 + F) eta` at which the indicator equals 1.
    pub critical_coupling: f64,
}

impl StabilityReport {
    /// The `mu` at which this graph's indicator crosses 1 for the same
    /// `(1 + F) eta`.
    pub fn critical_mu(&self) -> f64 {
        critical_mu(self.lambda1, self.edge_count, self.params.coupling())
    }
}

/// `a = (1 + F) eta / (4 |E|)`.
pub fn a_coeff(params: &BonabeauParams, edge_count: usize) -> f64 {
    params.coupling() / (4.0 * edge_count as f64)
}

/// `max over edges (i, j) of d_i + d_j - |N_i ∩ N_j|`, an upper bound on the
/// largest Laplacian eigenvalue that never exceeds `n`.
pub fn das_bound(g: &SiteGraph) -> Result<f64> {
    g.edges()
        .iter()
        .map(|&(i, j)| g.degree(i) + g.degree(j) - g.common_neighbors(i, j))
        .max()
        .map(|b| b as f64)
        .ok_or(Error::NoEdges)
}

/// Jacobian eigenvalue `(1 - mu)(1 + a b)` paired with Laplacian eigenvalue `b`.
pub fn jacobian_eig_from_laplacian(
    b: f64,
    params: &BonabeauParams,
    edge_count: usize,
) -> Result<f64> {
    check_range("b", b, b >= -1e-9, "Laplacian eigenvalues are >= 0")?;
    if edge_count == 0 {
        return Err(Error::NoEdges);
    }
    Ok((1.0 - params.mu()) * (1.0 + a_coeff(params, edge_count) * b))
}

/// Jacobian of the mean-field map at a uniform power vector.
pub fn build_jacobian(g: &SiteGraph, params: &BonabeauParams) -> Result<Matrix> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let keep = 1.0 - params.mu();
    let a = a_coeff(params, g.edge_count());
    let mut j = Matrix::zeros(g.n());
    for i in 0..g.n() {
        j[(i, i)] = keep * (1.0 + a * g.degree(i) as f64);
        for &k in g.neighbors(i) {
            j[(i, k)] = -keep * a;
        }
    }
    Ok(j)
}

/// Largest Laplacian eigenvalue from the dense solver.
pub fn lambda1(g: &SiteGraph) -> Result<f64> {
    let eig = g.laplacian().eigenvalues()?;
    Ok(*eig.last().expect("non-empty spectrum"))
}

/// Stability of the egalitarian state on a connected graph.
pub fn stability_report(g: &SiteGraph, params: &BonabeauParams) -> Result<StabilityReport> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let components = g.connected_components().len();
    if components > 1 {
        return Err(Error::Disconnected(components));
    }
    let lambda1 = lambda1(g)?;
    Ok(report_from_lambda1(g.n(), g.edge_count(), lambda1, params))
}

/// Builds the report from a known `lambda1`, e.g. the closed form `n` for a
/// star or complete graph.
pub fn report_from_lambda1(
    n: usize,
    edge_count: usize,
    lambda1: f64,
    params: &BonabeauParams,
) -> StabilityReport {
    let a = a_coeff(params, edge_count);
    let keep = 1.0 - params.mu();
    let indicator = keep * (1.0 + lambda1 * a);
    StabilityReport {
        n,
        edge_count,
        lambda1,
        params: *params,
        a_coeff: a,
        indicator,
        classification: Classification::from_indicator(indicator),
        critical_coupling: 4.0 * params.mu() * edge_count as f64 / (lambda1 * keep),
    }
}

/// `4 mu / (1 - mu)`: below this coupling every connected graph is stable as
/// `n` grows, above it some graph (the star) is not.
pub fn asymptotic_critical_coupling(mu: f64) -> Result<f64> {
    check_range("mu", mu, mu > 0.0 && mu < 1.0, "must lie in (0,1)")?;
    Ok(4.0 * mu / (1.0 - mu))
}

/// Solves `(1 - mu)(1 + lambda1 coupling / (4 |E|)) = 1` for `mu`.
pub fn critical_mu(lambda1: f64, edge_count: usize, coupling: f64) -> f64 {
    let k = lambda1 * coupling / (4.0 * edge_count as f64);
    k / (1.0 + k)
}

/// Finite-`n` critical `mu` on a star (`lambda1 = n`, `|E| = n - 1`).
pub fn star_critical_mu(n: usize, coupling: f64) -> f64 {
    critical_mu(n as f64, n - 1, coupling)
}

/// Limit of [`star_critical_mu`] as `n` grows: `c / (4 + c)`.
pub fn asymptotic_critical_mu(coupling: f64) -> f64 {
    coupling / (4.0 + coupling)
}
