use std::collections::VecDeque;

use super::AdjacencyMatrix;

/// Induced subgraph on the largest connected component, plus the original
/// id of each retained node (ascending).
///
/// Ties go to the component containing the smallest node id.
pub fn largest_connected_component(graph: &AdjacencyMatrix) -> (AdjacencyMatrix, Vec<usize>) {
    let n = graph.n();
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        comp[start] = c;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in graph.neighbors(v) {
                let w = w as usize;
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    // components are numbered by their smallest node, so the first maximum wins ties
    let best = sizes
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, usize)>, (c, &s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((c, s)),
        })
        .map(|(c, _)| c);
    let keep: Vec<usize> = match best {
        Some(c) => (0..n).filter(|&v| comp[v] == c).collect(),
        None => Vec::new(),
    };
    (graph.induced(&keep), keep)
}
