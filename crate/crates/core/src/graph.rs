//! Edge-list parsing, simplification and the immutable simple-graph type.
//!
//! Raw input is tolerated in almost any shape: directed or undirected, with
//! or without weights, with repeated edges and self-loops. [`simplify`]
//! reduces it to a [`SimpleGraph`]: undirected, unweighted, no multi-edges,
//! no self-loops. Node labels are compacted to `0..n` in order of first
//! appearance and the mapping is kept in a [`LabelMap`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index.
pub type NodeId = u32;

/// One record of a raw edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub source: String,
    pub target: String,
    pub weight: Option<f64>,
}

/// An edge list as read from disk, before simplification.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawEdgeList {
    pub edges: Vec<RawEdge>,
    pub directed: bool,
    /// Capacity hint for the label table. Does not add nodes.
    pub node_count_hint: Option<usize>,
    /// Number of edges that carried a non-integer weight.
    pub fractional_weights: usize,
}

impl RawEdgeList {
    pub fn from_pairs<S: ToString>(pairs: impl IntoIterator<Item = (S, S)>, directed: bool) -> Self {
        RawEdgeList {
            edges: pairs
                .into_iter()
                .map(|(s, t)| RawEdge {
                    source: s.to_string(),
                    target: t.to_string(),
                    weight: None,
                })
                .collect(),
            directed,
            node_count_hint: None,
            fractional_weights: 0,
        }
    }
}

/// Options for [`parse_edge_list`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Token separator; `None` splits on any run of whitespace.
    pub delimiter: Option<char>,
    /// Read a third column as a numeric weight.
    pub weighted: bool,
    pub directed: bool,
    /// Lines whose first non-blank character is one of these are skipped.
    pub comment_prefixes: Vec<char>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: None,
            weighted: false,
            directed: false,
            comment_prefixes: vec!['#', '%'],
        }
    }
}

/// Parse an edge list from a line-oriented reader.
///
/// Blank lines and comment lines are skipped. Each remaining line must hold
/// at least two tokens. When `opts.weighted` is set a third token, if
/// present, must parse as a real number; otherwise extra tokens are ignored.
pub fn parse_edge_list<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<RawEdgeList> {
    let mut out = RawEdgeList {
        directed: opts.directed,
        ..Default::default()
    };
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed
            .chars()
            .next()
            .is_some_and(|c| opts.comment_prefixes.contains(&c))
        {
            continue;
        }
        let tokens: Vec<&str> = match opts.delimiter {
            None => trimmed.split_whitespace().collect(),
            Some(d) => trimmed.split(d).map(str::trim).filter(|t| !t.is_empty()).collect(),
        };
        if tokens.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected at least 2 tokens, found {}", tokens.len()),
            });
        }
        let weight = if opts.weighted {
            match tokens.get(2) {
                Some(tok) => {
                    let w: f64 = tok.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("non-numeric weight {tok:?}"),
                    })?;
                    if w.fract() != 0.0 {
                        out.fractional_weights += 1;
                    }
                    Some(w)
                }
                None => None,
            }
        } else {
            None
        };
        out.edges.push(RawEdge {
            source: tokens[0].to_string(),
            target: tokens[1].to_string(),
            weight,
        });
    }
    if out.fractional_weights > 0 {
        log::warn!(
            "{} edge(s) carry fractional weights; weights are discarded",
            out.fractional_weights
        );
    }
    Ok(out)
}

/// Open a file for reading, transparently decompressing gzip input.
pub fn open_maybe_gzip(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path).map_err(Error::with_path(path))?;
    let mut magic = [0u8; 2];
    let got = file.read(&mut magic).map_err(Error::with_path(path))?;
    drop(file);
    let file = File::open(path).map_err(Error::with_path(path))?;
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Read and parse an edge-list file (plain or gzip).
pub fn read_edge_list_file(path: &Path, opts: &ParseOptions) -> Result<RawEdgeList> {
    parse_edge_list(open_maybe_gzip(path)?, opts)
}

/// Mapping between dense node indices and the original labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    labels: Vec<String>,
}

impl LabelMap {
    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node as usize]
    }

    pub fn index_of(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(|i| i as NodeId)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Two-column text: `index<TAB>label`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{i}\t{l}")?;
        }
        Ok(())
    }
}

/// Counters describing what [`simplify`] removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplifyStats {
    pub raw_edges: usize,
    pub self_loops_removed: usize,
    pub duplicates_collapsed: usize,
    /// Nodes whose only appearance in the input was in a self-loop. They are
    /// kept as degree-0 nodes.
    pub loop_only_nodes: usize,
    pub fractional_weights: usize,
}

/// Output of [`simplify`].
#[derive(Debug, Clone)]
pub struct Simplified {
    pub graph: SimpleGraph,
    pub labels: LabelMap,
    pub stats: SimplifyStats,
}

/// Reduce a raw edge list to a simple undirected graph.
pub fn simplify(raw: &RawEdgeList) -> Simplified {
    let mut index: HashMap<&str, NodeId> =
        HashMap::with_capacity(raw.node_count_hint.unwrap_or(0));
    let mut labels: Vec<String> = Vec::with_capacity(raw.node_count_hint.unwrap_or(0));
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::with_capacity(raw.edges.len());
    let mut self_loops = 0;

    for e in &raw.edges {
        let u = intern(&e.source, &mut index, &mut labels);
        let v = intern(&e.target, &mut index, &mut labels);
        if u == v {
            self_loops += 1;
        } else {
            pairs.push((u.min(v), u.max(v)));
        }
    }

    let n = labels.len();
    let before = pairs.len();
    let graph = SimpleGraph::from_canonical_pairs(n, pairs);
    let loop_only_nodes = (0..n).filter(|&i| graph.degree(i) == 0).count();

    Simplified {
        stats: SimplifyStats {
            raw_edges: raw.edges.len(),
            self_loops_removed: self_loops,
            duplicates_collapsed: before - graph.edge_count(),
            loop_only_nodes,
            fractional_weights: raw.fractional_weights,
        },
        graph,
        labels: LabelMap { labels },
    }
}

fn intern<'a>(label: &'a str, index: &mut HashMap<&'a str, NodeId>, labels: &mut Vec<String>) -> NodeId {
    *index.entry(label).or_insert_with(|| {
        labels.push(label.to_string());
        (labels.len() - 1) as NodeId
    })
}

/// Immutable undirected simple graph in compressed adjacency form.
///
/// Neighbor lists are sorted and contain neither the node itself nor
/// duplicates; adjacency is symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        SimpleGraph {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    /// Build from arbitrary index pairs, dropping self-loops and duplicates.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let pairs: Vec<_> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        Self::from_canonical_pairs(n, pairs)
    }

    fn from_canonical_pairs(n: usize, mut pairs: Vec<(NodeId, NodeId)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut deg = vec![0usize; n];
        for &(u, v) in &pairs {
            assert!((v as usize) < n, "edge endpoint {v} out of range for n={n}");
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0 as NodeId; offsets[n]];
        // Pairs are sorted by (u, v), so each u's higher neighbors arrive in
        // order; lower neighbors arrive in order of their own index. Both
        // halves interleave correctly only after a per-node sort.
        for &(u, v) in &pairs {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        SimpleGraph { offsets, neighbors }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> &[NodeId] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).binary_search(&(b as NodeId)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u as NodeId, v))
        })
    }

    /// Degrees in node order. Sums to `2m`.
    pub fn degree_sequence(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Degrees sorted ascending.
    pub fn sorted_degrees(&self) -> Vec<usize> {
        let mut d = self.degree_sequence();
        d.sort_unstable();
        d
    }

    /// A raw edge list that simplifies back to this exact graph.
    ///
    /// Every node is first introduced by a self-loop line in index order, so
    /// label compaction reproduces the same indices and isolated nodes
    /// survive the round trip.
    pub fn to_raw(&self) -> RawEdgeList {
        let loops = (0..self.node_count()).map(|i| (i, i));
        let edges = self.edges().map(|(u, v)| (u as usize, v as usize));
        RawEdgeList::from_pairs(loops.chain(edges), false)
    }

    /// Write `u v` lines. Isolated nodes are written as `i i` so that the
    /// node count survives re-simplification.
    pub fn write_edge_list<W: Write>(&self, mut w: W, labels: Option<&LabelMap>) -> io::Result<()> {
        let name = |i: usize| -> String {
            match labels {
                Some(l) => l.label(i as NodeId).to_string(),
                None => i.to_string(),
            }
        };
        writeln!(w, "# n={} m={}", self.node_count(), self.edge_count())?;
        for i in 0..self.node_count() {
            if self.degree(i) == 0 {
                let l = name(i);
                writeln!(w, "{l} {l}")?;
            }
        }
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", name(u as usize), name(v as usize))?;
        }
        Ok(())
    }
}

/// Connected components of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    /// Component id of each node; ids are assigned in order of the smallest
    /// node they contain.
    pub component: Vec<u32>,
    /// Size of each component.
    pub sizes: Vec<usize>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Σ C(|V_m|, 2): the number of unordered reachable pairs.
    pub fn reachable_pairs(&self) -> u64 {
        self.sizes.iter().map(|&s| pairs_in(s)).sum()
    }

    /// Nodes of each component, ascending.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut out: Vec<Vec<NodeId>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (node, &c) in self.component.iter().enumerate() {
            out[c as usize].push(node as NodeId);
        }
        out
    }
}

pub(crate) fn pairs_in(size: usize) -> u64 {
    let s = size as u64;
    s * s.saturating_sub(1) / 2
}

/// Label connected components by breadth-first search.
pub fn connected_components(g: &SimpleGraph) -> ComponentPartition {
    const UNSEEN: u32 = u32::MAX;
    let n = g.node_count();
    let mut component = vec![UNSEEN; n];
    let mut sizes = Vec::new();
    let mut queue = Vec::new();
    for start in 0..n {
        if component[start] != UNSEEN {
            continue;
        }
        let id = sizes.len() as u32;
        component[start] = id;
        queue.clear();
        queue.push(start as NodeId);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            for &v in g.neighbors(u) {
                if component[v as usize] == UNSEEN {
                    component[v as usize] = id;
                    queue.push(v);
                }
            }
        }
        sizes.push(queue.len());
    }
    ComponentPartition { component, sizes }
}

/// Degree of every node, in index order.
pub fn degree_sequence(g: &SimpleGraph) -> Vec<usize> {
    g.degree_sequence()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<RawEdgeList> {
        parse_edge_list(text.as_bytes(), &ParseOptions::default())
    }

    fn graph_of(pairs: &[(&str, &str)]) -> Simplified {
        simplify(&RawEdgeList::from_pairs(pairs.iter().copied(), false))
    }

    #[test]
    fn parses_plain_pairs() {
        let raw = parse("1 2\n2 3\n").unwrap();
        let pairs: Vec<_> = raw.edges.iter().map(|e| (e.source.as_str(), e.target.as_str())).collect();
        assert_eq!(pairs, vec![("1", "2"), ("2", "3")]);
        assert!(raw.edges.iter().all(|e| e.weight.is_none()));
    }

    #[test]
    fn skips_comments_and_reads_weights() {
        let opts = ParseOptions {
            weighted: true,
            ..Default::default()
        };
        let raw = parse_edge_list("# c\na b 3.5\n".as_bytes(), &opts).unwrap();
        assert_eq!(raw.edges.len(), 1);
        assert_eq!(raw.edges[0].source, "a");
        assert_eq!(raw.edges[0].target, "b");
        assert_eq!(raw.edges[0].weight, Some(3.5));
        assert_eq!(raw.fractional_weights, 1);

        let raw = parse("% matrix-market style comment\n\n  x y\n").unwrap();
        assert_eq!(raw.edges.len(), 1);
    }

    #[test]
    fn arity_violation_reports_line() {
        match parse("1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("1 2\n# ok\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_weight_is_an_error() {
        let opts = ParseOptions {
            weighted: true,
            ..Default::default()
        };
        assert!(matches!(
            parse_edge_list("a b heavy\n".as_bytes(), &opts),
            Err(Error::Parse { line: 1, .. })
        ));
        // without weights the extra column is ignored
        assert!(parse("a b heavy\n").is_ok());
    }

    #[test]
    fn custom_delimiter() {
        let opts = ParseOptions {
            delimiter: Some(','),
            ..Default::default()
        };
        let raw = parse_edge_list("node a,node b\n".as_bytes(), &opts).unwrap();
        assert_eq!(raw.edges[0].source, "node a");
        assert_eq!(raw.edges[0].target, "node b");
    }

    #[test]
    fn collapses_and_drops_loops() {
        let s = graph_of(&[("1", "2"), ("2", "1"), ("3", "3")]);
        assert_eq!(s.graph.node_count(), 3);
        assert_eq!(s.graph.edge_count(), 1);
        assert!(s.graph.has_edge(0, 1));
        assert_eq!(s.labels.label(2), "3");
        assert_eq!(s.graph.degree(2), 0);
        assert_eq!(s.stats.self_loops_removed, 1);
        assert_eq!(s.stats.duplicates_collapsed, 1);
        assert_eq!(s.stats.loop_only_nodes, 1);
    }

    #[test]
    fn directed_input_is_symmetrized() {
        let raw = RawEdgeList::from_pairs([("a", "b"), ("b", "c")], true);
        let s = simplify(&raw);
        assert_eq!(s.graph.edge_count(), 2);
        let a = s.labels.index_of("a").unwrap() as usize;
        let b = s.labels.index_of("b").unwrap() as usize;
        let c = s.labels.index_of("c").unwrap() as usize;
        assert!(s.graph.has_edge(b, a));
        assert!(s.graph.has_edge(c, b));
        assert!(!s.graph.has_edge(a, c));
    }

    #[test]
    fn pure_self_loop() {
        let s = graph_of(&[("x", "x")]);
        assert_eq!(s.graph.node_count(), 1);
        assert_eq!(s.graph.edge_count(), 0);
    }

    #[test]
    fn empty_input() {
        let s = simplify(&RawEdgeList::default());
        assert_eq!(s.graph.node_count(), 0);
        assert_eq!(s.graph.edge_count(), 0);
        assert_eq!(connected_components(&s.graph).count(), 0);
    }

    #[test]
    fn components() {
        let path = graph_of(&[("a", "b"), ("b", "c")]);
        assert_eq!(connected_components(&path.graph).sizes, vec![3]);

        let two = graph_of(&[("a", "b"), ("c", "d")]);
        let p = connected_components(&two.graph);
        assert_eq!(p.sizes, vec![2, 2]);
        assert_eq!(p.reachable_pairs(), 2);

        let p = connected_components(&SimpleGraph::empty(4));
        assert_eq!(p.sizes, vec![1, 1, 1, 1]);
        assert_eq!(p.reachable_pairs(), 0);
    }

    #[test]
    fn degree_sequences() {
        let k3 = SimpleGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        assert_eq!(degree_sequence(&k3), vec![2, 2, 2]);
        let p4 = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(degree_sequence(&p4), vec![1, 2, 2, 1]);
        let star = SimpleGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]);
        assert_eq!(degree_sequence(&star), vec![3, 1, 1, 1]);
    }

    #[test]
    fn gzip_input_is_detected() {
        use flate2::{write::GzEncoder, Compression};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"1 2\n2 3\n").unwrap();
        enc.finish().unwrap();
        let raw = read_edge_list_file(&path, &ParseOptions::default()).unwrap();
        assert_eq!(raw.edges.len(), 2);
    }

    #[test]
    fn written_edge_list_round_trips() {
        let g = SimpleGraph::from_edges(5, [(0, 3), (1, 3)]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf, None).unwrap();
        let back = simplify(&parse(std::str::from_utf8(&buf).unwrap()).unwrap());
        assert_eq!(back.graph.node_count(), 5);
        assert_eq!(back.graph.sorted_degrees(), g.sorted_degrees());
    }

    fn arb_raw() -> impl Strategy<Value = Vec<(u8, u8)>> {
        prop::collection::vec((0u8..15, 0u8..15), 0..60)
    }

    fn check_invariants(g: &SimpleGraph) {
        let mut total = 0;
        for i in 0..g.node_count() {
            let nb = g.neighbors(i);
            total += nb.len();
            assert!(nb.windows(2).all(|w| w[0] < w[1]), "sorted, no duplicates");
            assert!(!nb.contains(&(i as NodeId)), "no self-loops");
            for &j in nb {
                assert!(g.neighbors(j as usize).binary_search(&(i as NodeId)).is_ok());
            }
        }
        assert_eq!(total, 2 * g.edge_count());
    }

    proptest! {
        #[test]
        fn simplified_graphs_are_simple(pairs in arb_raw()) {
            let s = simplify(&RawEdgeList::from_pairs(pairs.iter().copied(), false));
            check_invariants(&s.graph);
            prop_assert_eq!(s.graph.degree_sequence().iter().sum::<usize>(), 2 * s.graph.edge_count());
            prop_assert_eq!(s.labels.len(), s.graph.node_count());
        }

        #[test]
        fn resimplifying_is_identity(pairs in arb_raw()) {
            let g = simplify(&RawEdgeList::from_pairs(pairs.iter().copied(), false)).graph;
            let again = simplify(&g.to_raw()).graph;
            prop_assert_eq!(g, again);
        }

        #[test]
        fn order_independent(pairs in arb_raw(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut crate::seed::rng_from_seed(seed));
            let a = simplify(&RawEdgeList::from_pairs(pairs.iter().copied(), false)).graph;
            let b = simplify(&RawEdgeList::from_pairs(shuffled.iter().copied(), false)).graph;
            prop_assert_eq!(a.node_count(), b.node_count());
            prop_assert_eq!(a.edge_count(), b.edge_count());
            prop_assert_eq!(a.sorted_degrees(), b.sorted_degrees());
        }
    }
}
