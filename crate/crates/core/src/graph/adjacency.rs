use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric binary adjacency matrix with zero diagonal.
///
/// Stored as sorted neighbor lists (CSR); the public contract is that of the
/// dense 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl AdjacencyMatrix {
    /// Build from an edge iterator. Each pair is treated as undirected,
    /// duplicates collapse and self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("{n} nodes exceeds u32 index range")));
        }
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                continue;
            }
            lists[i].push(j as u32);
            lists[j].push(i as u32);
        }
        Ok(Self::from_lists(lists))
    }

    fn from_lists(mut lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    /// Build from a dense 0/1 matrix given row by row. The upper triangle is
    /// authoritative; the diagonal is ignored.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut edges = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate().skip(i + 1) {
                match x {
                    0 => {}
                    1 => edges.push((i, j)),
                    other => {
                        return Err(Error::invalid(format!("entry ({i}, {j}) = {other} is not binary")))
                    }
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn empty(n: usize) -> Self {
        Self::from_lists(vec![Vec::new(); n])
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Entry `A[i][j]` as 0 or 1.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.has_edge(i, j))
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.n();
        let mut out = vec![vec![0u8; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for &j in self.neighbors(i) {
                row[j as usize] = 1;
            }
        }
        out
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut map = vec![u32::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            map[v] = k as u32;
        }
        let lists = nodes
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .iter()
                    .filter_map(|&w| Some(map[w as usize]).filter(|&m| m != u32::MAX))
                    .collect()
            })
            .collect();
        Self::from_lists(lists)
    }
}

/// Ordered set of distinct node ids below some bound `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    /// Sorts and validates the ids.
    pub fn new(mut ids: Vec<usize>, n: usize) -> Result<Self> {
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate node id {}", w[0])));
        }
        if let Some(&last) = ids.last() {
            if last >= n {
                return Err(Error::invalid(format!("node id {last} out of range for {n} nodes")));
            }
        }
        Ok(Self(ids))
    }

    pub(crate) fn from_sorted(ids: Vec<usize>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self(ids)
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// Ids in `0..n` not in this set.
    pub fn complement(&self, n: usize) -> Self {
        let mut mask = vec![true; n];
        for &i in &self.0 {
            mask[i] = false;
        }
        Self((0..n).filter(|&i| mask[i]).collect())
    }

    /// Boolean membership mask over `0..n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.0 {
            mask[i] = true;
        }
        mask
    }
}

/// Read-only rectangle of an adjacency matrix: the rows in `rows`, all columns.
#[derive(Clone, Copy, Debug)]
pub struct RectView<'a> {
    source: &'a AdjacencyMatrix,
    rows: &'a NodeSet,
}

impl<'a> RectView<'a> {
    pub fn new(source: &'a AdjacencyMatrix, rows: &'a NodeSet) -> Result<Self> {
        if rows.ids().last().is_some_and(|&r| r >= source.n()) {
            return Err(Error::invalid("rectangle rows exceed graph size"));
        }
        Ok(Self { source, rows })
    }

    pub fn source(&self) -> &'a AdjacencyMatrix {
        self.source
    }

    pub fn rows(&self) -> &'a NodeSet {
        self.rows
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.source.n())
    }

    /// Entry `(r, j)` equals `source[rows[r]][j]`.
    pub fn get(&self, r: usize, j: usize) -> u8 {
        self.source.get(self.rows.ids()[r], j)
    }

    pub fn row_neighbors(&self, r: usize) -> &'a [u32] {
        self.source.neighbors(self.rows.ids()[r])
    }
}
