use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("lattice2d needs a perfect-square vertex count, got {0}")]
    NotSquare(usize),
    #[error("self-loop at vertex {vertex} (line {line})")]
    SelfLoop { vertex: usize, line: usize },
    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    VertexOutOfRange { u: usize, v: usize, n: usize },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains no edges")]
    EmptyEdgeList,
    #[error("edge list leaves vertex {0} unused; ids must be dense")]
    VertexGap(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph is disconnected ({0} components); analyze each component separately")]
    Disconnected(usize),
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix dimension {0} is outside the supported range 1..=2048")]
    Dimension(usize),
    #[error("rows have inconsistent lengths")]
    Ragged,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("{name} = {value} is out of range: {expected}")]
    Param {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("state has {got} agents but the graph has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
    #[error("enumeration is limited to {max} agents, got {n}")]
    TooLarge { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Param {
            name,
            value,
            expected,
        })
    }
}
