use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::AdjacencyMatrix;
use crate::error::{Error, Result};

/// Mapping between node tokens in a file and dense ids `0..n`, in order of
/// first appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.names.len();
        self.names.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Restrict to `ids` (e.g. a connected component); `ids[k]` becomes `k`.
    pub fn restrict(&self, ids: &[usize]) -> Self {
        let mut out = Self::default();
        for &i in ids {
            out.intern(&self.names[i]);
        }
        out
    }
}

/// Read an undirected edge list file.
///
/// With `symmetrize`, a line `a b` adds the edge in both directions. Without
/// it the file is read as directed and only reciprocated pairs are kept, so
/// the result is still symmetric.
pub fn load_edge_list(path: impl AsRef<Path>, symmetrize: bool) -> Result<(AdjacencyMatrix, IdMap)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(BufReader::new(file), symmetrize, path)
}

/// Parse an edge list from any reader; `origin` is only used in error messages.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    symmetrize: bool,
    origin: impl AsRef<Path>,
) -> Result<(AdjacencyMatrix, IdMap)> {
    let origin = origin.as_ref();
    let mut ids = IdMap::default();
    let mut arcs = Vec::new();
    let mut data_lines = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                path: origin.to_owned(),
                line: lineno + 1,
                msg: format!("expected two node tokens, got {line:?}"),
            });
        };
        data_lines += 1;
        let (i, j) = (ids.intern(a), ids.intern(b));
        if i != j {
            arcs.push((i, j));
        }
    }
    if data_lines == 0 {
        return Err(Error::EmptyGraph(origin.to_owned()));
    }
    let n = ids.len();
    let graph = if symmetrize {
        AdjacencyMatrix::from_edges(n, arcs)?
    } else {
        let directed: HashSet<(usize, usize)> = arcs.iter().copied().collect();
        let mutual = arcs
            .into_iter()
            .filter(|&(i, j)| i < j && directed.contains(&(j, i)));
        AdjacencyMatrix::from_edges(n, mutual)?
    };
    Ok((graph, ids))
}

/// Write one `i j` line per undirected edge (`i < j`), using the tokens in
/// `ids` when given.
pub fn write_edge_list<W: Write>(mut out: W, graph: &AdjacencyMatrix, ids: Option<&IdMap>) -> std::io::Result<()> {
    for (i, j) in graph.edges() {
        match ids {
            Some(map) => writeln!(out, "{} {}", map.name(i), map.name(j))?,
            None => writeln!(out, "{i} {j}")?,
        }
    }
    out.flush()
}
