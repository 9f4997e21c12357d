//! Simple undirected site graphs and their Laplacians.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Named graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Path,
    Star,
    Cycle,
    Complete,
    Lattice2d,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::Star => "star",
            Family::Cycle => "cycle",
            Family::Complete => "complete",
            Family::Lattice2d => "lattice2d",
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "star" => Ok(Family::Star),
            "cycle" => Ok(Family::Cycle),
            "complete" => Ok(Family::Complete),
            "lattice2d" => Ok(Family::Lattice2d),
            other => Err(format!("unknown graph family `{other}`")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Boundary condition for `lattice2d`; ignored by the other families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary `{other}`")),
        }
    }
}

/// An immutable simple undirected graph on vertices `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; adjacency lists are
/// sorted and symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl SiteGraph {
    /// Builds a graph from an edge iterator. Duplicate edges (in either
    /// orientation) collapse; self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::VertexOutOfRange { u, v, n });
            }
            if u == v {
                return Err(Error::SelfLoop { vertex: u, line: 0 });
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_sorted_set(n, set))
    }

    fn from_sorted_set(n: usize, set: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        SiteGraph {
            n,
            edges: set.into_iter().collect(),
            adjacency,
        }
    }

    /// Builds one of the standard families. The star's hub is vertex 0; the
    /// lattice is `L x L` with `L = sqrt(n)`, row-major ids and 4-neighbour
    /// adjacency.
    pub fn family(family: Family, n: usize, boundary: Boundary) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut set = BTreeSet::new();
        let mut add = |u: usize, v: usize| {
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        };
        match family {
            Family::Path => (1..n).for_each(|i| add(i - 1, i)),
            Family::Star => (1..n).for_each(|i| add(0, i)),
            Family::Cycle => {
                (1..n).for_each(|i| add(i - 1, i));
                if n > 2 {
                    add(n - 1, 0);
                }
            }
            Family::Complete => {
                for i in 0..n {
                    for j in i + 1..n {
                        add(i, j);
                    }
                }
            }
            Family::Lattice2d => {
                let side = exact_sqrt(n).ok_or(Error::NotSquare(n))?;
                let id = |r: usize, c: usize| r * side + c;
                for r in 0..side {
                    for c in 0..side {
                        if c + 1 < side {
                            add(id(r, c), id(r, c + 1));
                        } else if boundary == Boundary::Periodic {
                            add(id(r, c), id(r, 0));
                        }
                        if r + 1 < side {
                            add(id(r, c), id(r + 1, c));
                        } else if boundary == Boundary::Periodic {
                            add(id(r, c), id(0, c));
                        }
                    }
                }
            }
        }
        Ok(Self::from_sorted_set(n, set))
    }

    /// Parses the edge-list text format: one `u v` pair per line,
    /// whitespace separated, `#` begins a comment, blank lines ignored.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let mut next_id = || -> Result<usize> {
                let tok = tokens.next().ok_or_else(|| Error::Parse {
                    line,
                    message: "expected two vertex ids".into(),
                })?;
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{tok}` is not a non-negative integer"),
                })
            };
            let u = next_id()?;
            let v = next_id()?;
            if let Some(extra) = tokens.next() {
                return Err(Error::Parse {
                    line,
                    message: format!("unexpected trailing token `{extra}`"),
                });
            }
            if u == v {
                return Err(Error::SelfLoop { vertex: u, line });
            }
            set.insert((u.min(v), u.max(v)));
        }
        let n = match set.iter().map(|&(_, v)| v).max() {
            Some(max) => max + 1,
            None => return Err(Error::EmptyEdgeList),
        };
        let mut seen = vec![false; n];
        for &(u, v) in &set {
            seen[u] = true;
            seen[v] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::VertexGap(gap));
        }
        Ok(Self::from_sorted_set(n, set))
    }

    /// Renders the graph in the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// A uniformly random recursive tree: vertex `i` attaches to a uniform
    /// earlier vertex, then ids are shuffled.
    pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut labels: Vec<usize> = (0..n).collect();
        labels.shuffle(rng);
        let edges = (1..n).map(|i| (labels[i], labels[rng.gen_range(0..i)]));
        Self::from_edges(n, edges)
    }

    /// A random tree plus `extra` uniformly drawn additional edges (fewer if
    /// the graph saturates). Always connected.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> Result<Self> {
        let tree = Self::random_tree(n, rng)?;
        let max_edges = n * (n - 1) / 2;
        let mut set: BTreeSet<(usize, usize)> = tree.edges.into_iter().collect();
        let target = (set.len() + extra).min(max_edges);
        while set.len() < target {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        Ok(Self::from_sorted_set(n, set))
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        Self::from_edges(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Number of vertices adjacent to both `i` and `j`.
    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.adjacency[i], &self.adjacency[j]);
        let (mut x, mut y, mut count) = (0, 0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
        count
    }

    /// `diag(d) - A` as a dense matrix.
    pub fn laplacian(&self) -> LaplacianMatrix {
        let mut m = Matrix::zeros(self.n);
        for (i, list) in self.adjacency.iter().enumerate() {
            m[(i, i)] = list.len() as f64;
        }
        for &(u, v) in &self.edges {
            m[(u, v)] = -1.0;
            m[(v, u)] = -1.0;
        }
        LaplacianMatrix(m)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            label[start] = id;
            let mut head = 0;
            while head < members.len() {
                let v = members[head];
                head += 1;
                for &w in &self.adjacency[v] {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Dense graph Laplacian. Entries are small integers, so row sums are exactly
/// zero in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(Matrix);

impl LaplacianMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        crate::linalg::symmetric_eigenvalues(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(family: Family, n: usize) -> SiteGraph {
        SiteGraph::family(family, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn star_degrees() {
        let s = g(Family::Star, 5);
        assert_eq!(s.degrees(), vec![4, 1, 1, 1, 1]);
        assert_eq!(s.edge_count(), 4);
    }

    #[test]
    fn path_edges() {
        assert_eq!(g(Family::Path, 3).edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn torus_3x3() {
        let t = g(Family::Lattice2d, 9);
        assert!(t.degrees().iter().all(|&d| d == 4));
        assert_eq!(t.edge_count(), 18);
        // vertex 0 = (0,0): right (0,1)=1, left wrap (0,2)=2, down (1,0)=3, up wrap (2,0)=6
        assert_eq!(t.neighbors(0), &[1, 2, 3, 6]);
    }

    #[test]
    fn open_lattice() {
        let t = SiteGraph::family(Family::Lattice2d, 9, Boundary::Open).unwrap();
        assert_eq!(t.edge_count(), 12);
        assert_eq!(t.degree(4), 4);
        assert_eq!(t.degree(0), 2);
    }

    #[test]
    fn family_errors() {
        assert_eq!(
            SiteGraph::family(Family::Lattice2d, 10, Boundary::Open),
            Err(Error::NotSquare(10))
        );
        assert_eq!(
            SiteGraph::family(Family::Path, 0, Boundary::Open),
            Err(Error::EmptyGraph)
        );
    }

    #[test]
    fn small_cycles_stay_simple() {
        assert_eq!(g(Family::Cycle, 2).edge_count(), 1);
        assert_eq!(g(Family::Cycle, 1).edge_count(), 0);
        assert_eq!(g(Family::Cycle, 5).edge_count(), 5);
    }

    #[test]
    fn edge_list_parsing() {
        let p = SiteGraph::from_edge_list("0 1\n1 2").unwrap();
        assert_eq!(p, g(Family::Path, 3));

        let d = SiteGraph::from_edge_list("0 1\n0 1\n1 0").unwrap();
        assert_eq!(d.edge_count(), 1);

        let c = SiteGraph::from_edge_list("# header\n\n0 1 # trailing\n  2 1\n").unwrap();
        assert_eq!(c.n(), 3);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            SiteGraph::from_edge_list("0 0"),
            Err(Error::SelfLoop { vertex: 0, line: 1 })
        ));
        assert!(matches!(
            SiteGraph::from_edge_list("0 x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SiteGraph::from_edge_list("0 1 2"),
            Err(Error::Parse { .. })
        ));
        assert_eq!(SiteGraph::from_edge_list(""), Err(Error::EmptyEdgeList));
        assert_eq!(
            SiteGraph::from_edge_list("# only\n"),
            Err(Error::EmptyEdgeList)
        );
        assert_eq!(
            SiteGraph::from_edge_list("0 1\n3 4"),
            Err(Error::VertexGap(2))
        );
        assert!(matches!(
            SiteGraph::from_edge_list("-1 2"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let t = g(Family::Lattice2d, 16);
        assert_eq!(SiteGraph::from_edge_list(&t.to_edge_list()).unwrap(), t);
    }

    #[test]
    fn laplacians() {
        let l = g(Family::Path, 2).laplacian();
        assert_eq!(l.matrix().to_rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);

        let l = g(Family::Star, 3).laplacian();
        assert_eq!(
            l.matrix().to_rows(),
            vec![
                vec![2.0, -1.0, -1.0],
                vec![-1.0, 1.0, 0.0],
                vec![-1.0, 0.0, 1.0]
            ]
        );

        let l = g(Family::Complete, 3).laplacian();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { -1.0 };
                assert_eq!(l.matrix()[(i, j)], want);
            }
        }
    }

    #[test]
    fn components() {
        assert_eq!(
            g(Family::Path, 3).connected_components(),
            vec![vec![0, 1, 2]]
        );
        let empty = SiteGraph::from_edges(2, []).unwrap();
        assert_eq!(empty.connected_components(), vec![vec![0], vec![1]]);
        let two = SiteGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(two.connected_components(), vec![vec![0, 1], vec![2, 3]]);
        let mixed = SiteGraph::from_edges(5, [(4, 1), (0, 3)]).unwrap();
        assert_eq!(
            mixed.connected_components(),
            vec![vec![0, 3], vec![1, 4], vec![2]]
        );
    }

    #[test]
    fn common_neighbor_counts() {
        let k = g(Family::Complete, 5);
        assert_eq!(k.common_neighbors(0, 1), 3);
        let s = g(Family::Star, 5);
        assert_eq!(s.common_neighbors(0, 1), 0);
        assert_eq!(s.common_neighbors(1, 2), 1);
    }

    #[test]
    fn random_graphs_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..40 {
            let t = SiteGraph::random_tree(n, &mut rng).unwrap();
            assert_eq!(t.edge_count(), n - 1);
            assert!(t.is_connected());
            let c = SiteGraph::random_connected(n, 2 * n, &mut rng).unwrap();
            assert!(c.is_connected());
            assert!(c.edge_count() <= n * (n - 1) / 2);
        }
    }
}
