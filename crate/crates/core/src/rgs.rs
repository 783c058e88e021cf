//! Graph-valued focal elements.
//!
//! A [`GraphEvent`] subsumes both other algebras: an edgeless graph is a set
//! of samples and a single directed chain is a permutation. The module also
//! carries the graph surgery the velocity-ranking operator relies on: cycle
//! removal, shortcut deletion and path enumeration. All algorithms are
//! exhaustive and intended for the handful of nodes a ranking problem has.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{Event, Label, SetEvent};
use crate::rps::PermEvent;

pub type Edge = (Label, Label);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop on `{0}`")]
    SelfLoop(Label),
    #[error("edge {0}->{1} has an endpoint that is not a node")]
    DanglingEdge(Label, Label),
}

/// Directed graph over sample identifiers, kept in canonical (sorted) form.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr")]
pub struct GraphEvent {
    nodes: BTreeSet<Label>,
    edges: BTreeSet<Edge>,
}

#[derive(Deserialize)]
struct GraphRepr {
    nodes: Vec<Label>,
    edges: Vec<Edge>,
}

impl TryFrom<GraphRepr> for GraphEvent {
    type Error = GraphError;

    fn try_from(repr: GraphRepr) -> Result<Self, Self::Error> {
        GraphEvent::new(repr.nodes, repr.edges)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Edgeless,
    Chain,
    Dag,
    Cyclic,
}

impl GraphEvent {
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = Label>,
        E: IntoIterator<Item = Edge>,
    {
        let nodes: BTreeSet<Label> = nodes.into_iter().collect();
        let mut checked = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !nodes.contains(&u) || !nodes.contains(&v) {
                return Err(GraphError::DanglingEdge(u, v));
            }
            checked.insert((u, v));
        }
        Ok(Self {
            nodes,
            edges: checked,
        })
    }

    /// Graph whose nodes are exactly the endpoints of `edges`.
    pub fn from_edges<E>(edges: E) -> Result<Self, GraphError>
    where
        E: IntoIterator<Item = Edge>,
    {
        let edges: Vec<Edge> = edges.into_iter().collect();
        let nodes = edges
            .iter()
            .flat_map(|(u, v)| [u.clone(), v.clone()])
            .collect::<BTreeSet<_>>();
        Self::new(nodes, edges)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &BTreeSet<Label> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        self.edges.contains(&(u.to_owned(), v.to_owned()))
    }

    pub fn successors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Label> + 'a {
        self.edges
            .range((node.to_owned(), Label::new())..)
            .take_while(move |(u, _)| u == node)
            .map(|(_, v)| v)
    }

    pub fn in_degree(&self, node: &str) -> usize {
        self.edges.iter().filter(|(_, v)| v == node).count()
    }

    pub fn out_degree(&self, node: &str) -> usize {
        self.successors(node).count()
    }

    fn without_edge(&self, edge: &Edge) -> Self {
        let mut out = self.clone();
        out.edges.remove(edge);
        out
    }

    /// Every node reachable from `start` by a path of length ≥ 0.
    pub fn reachable_from(&self, start: &str) -> BTreeSet<Label> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.to_owned()];
        while let Some(node) = stack.pop() {
            if seen.insert(node.clone()) {
                stack.extend(self.successors(&node).cloned());
            }
        }
        seen
    }

    pub fn reaches(&self, from: &str, to: &str) -> bool {
        self.reachable_from(from).contains(to)
    }
}

impl Event for GraphEvent {
    fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn labels(&self) -> Vec<&Label> {
        self.nodes.iter().collect()
    }
}

impl fmt::Display for GraphEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let isolated: Vec<&Label> = self
            .nodes
            .iter()
            .filter(|n| !self.edges.iter().any(|(u, v)| u == *n || v == *n))
            .collect();
        write!(f, "[")?;
        let mut first = true;
        for (u, v) in &self.edges {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{u}->{v}")?;
        }
        for n in isolated {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{n}")?;
        }
        write!(f, "]")
    }
}

/// Edgeless graph over the set's members.
pub fn from_set(event: &SetEvent) -> GraphEvent {
    GraphEvent {
        nodes: event.members().clone(),
        edges: BTreeSet::new(),
    }
}

/// Single directed chain through the permutation.
pub fn from_perm(event: &PermEvent) -> GraphEvent {
    let seq = event.sequence();
    GraphEvent {
        nodes: seq.iter().cloned().collect(),
        edges: seq
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect(),
    }
}

/// Node set of an edgeless graph, `None` otherwise.
pub fn to_set(graph: &GraphEvent) -> Option<SetEvent> {
    graph
        .edges
        .is_empty()
        .then(|| SetEvent::new(graph.nodes.iter().cloned()))
}

/// Decodes a chain (or a single isolated node) back into a permutation.
pub fn to_perm(graph: &GraphEvent) -> Option<PermEvent> {
    match graph.nodes.len() {
        0 => return Some(PermEvent::empty()),
        1 => return PermEvent::new(graph.nodes.iter().cloned()),
        _ => {}
    }
    if classify(graph) != GraphKind::Chain {
        return None;
    }
    let mut current = graph.nodes.iter().find(|n| graph.in_degree(n) == 0)?;
    let mut sequence = vec![current.clone()];
    while let Some(next) = graph.successors(current).next() {
        sequence.push(next.clone());
        current = next;
    }
    PermEvent::new(sequence)
}

pub fn classify(graph: &GraphEvent) -> GraphKind {
    if graph.edges.is_empty() {
        return GraphKind::Edgeless;
    }
    if find_cycle(graph).is_some() {
        return GraphKind::Cyclic;
    }
    let n = graph.nodes.len();
    let is_chain = graph.edges.len() == n - 1
        && graph
            .nodes
            .iter()
            .all(|v| graph.in_degree(v) <= 1 && graph.out_degree(v) <= 1)
        && graph
            .nodes
            .iter()
            .filter(|v| graph.in_degree(v) == 0)
            .count()
            == 1;
    if is_chain {
        GraphKind::Chain
    } else {
        GraphKind::Dag
    }
}

/// First directed cycle met by a depth-first search that visits nodes and
/// successors in ascending label order. The cycle is returned as its node
/// sequence; the closing edge runs from the last node back to the first.
pub fn find_cycle(graph: &GraphEvent) -> Option<Vec<Label>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&Label, Mark> = BTreeMap::new();
    for root in &graph.nodes {
        if marks.contains_key(root) {
            continue;
        }
        let mut path: Vec<&Label> = vec![root];
        let mut iters = vec![graph.successors(root)];
        marks.insert(root, Mark::Open);
        while let Some(it) = iters.last_mut() {
            match it.next() {
                Some(next) => match marks.get(next) {
                    Some(Mark::Open) => {
                        let start = path.iter().position(|n| *n == next)?;
                        return Some(path[start..].iter().map(|n| (*n).clone()).collect());
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next, Mark::Open);
                        path.push(next);
                        iters.push(graph.successors(next));
                    }
                },
                None => {
                    iters.pop();
                    if let Some(done) = path.pop() {
                        marks.insert(done, Mark::Done);
                    }
                }
            }
        }
    }
    None
}

/// Number of edges in the longest simple path starting at `start`.
pub fn longest_simple_path_from(graph: &GraphEvent, start: &str) -> usize {
    fn walk<'a>(graph: &'a GraphEvent, node: &'a str, on_path: &mut BTreeSet<&'a str>) -> usize {
        let mut best = 0;
        for next in graph.successors(node) {
            if on_path.insert(next.as_str()) {
                best = best.max(1 + walk(graph, next, on_path));
                on_path.remove(next.as_str());
            }
        }
        best
    }
    let mut on_path = BTreeSet::from([start]);
    walk(graph, start, &mut on_path)
}

/// Breaks every directed cycle.
///
/// Repeatedly takes the first cycle found by [`find_cycle`]. Each cycle edge
/// `u->v` is scored by the longest simple path that still starts at `u` once
/// the edge itself is gone; the edge with the highest score is deleted, ties
/// going to the smallest source then the smallest target label. The deleted
/// edge is therefore the one whose source reaches furthest without it.
///
/// Inputs are expected to carry no bidirectional pair; the speed-graph
/// operator cancels those before calling this.
pub fn remove_cycles(graph: &GraphEvent) -> GraphEvent {
    let mut current = graph.clone();
    while let Some(cycle) = find_cycle(&current) {
        let cycle_edges =
            (0..cycle.len()).map(|i| (cycle[i].clone(), cycle[(i + 1) % cycle.len()].clone()));
        let victim = cycle_edges
            .map(|edge| {
                let reach = longest_simple_path_from(&current.without_edge(&edge), &edge.0);
                (reach, edge)
            })
            // max reach, then smallest (source, target)
            .min_by(|(ra, ea), (rb, eb)| rb.cmp(ra).then_with(|| ea.cmp(eb)))
            .map(|(_, edge)| edge)
            .expect("a cycle has at least one edge");
        current.edges.remove(&victim);
    }
    current
}

/// Deletes every shortcut edge `u->v` for which another `u->...->v` path of
/// two or more edges exists, so only the longer routes survive. Input must
/// be acyclic; reachability is preserved.
pub fn longest_path_reduce(graph: &GraphEvent) -> GraphEvent {
    let shortcuts: Vec<Edge> = graph
        .edges
        .iter()
        .filter(|(u, v)| graph.successors(u).any(|w| w != v && graph.reaches(w, v)))
        .cloned()
        .collect();
    let mut out = graph.clone();
    for edge in &shortcuts {
        out.edges.remove(edge);
    }
    out
}

/// Node union and edge union.
pub fn merge_overlay<'a, I>(graphs: I) -> GraphEvent
where
    I: IntoIterator<Item = &'a GraphEvent>,
{
    let mut out = GraphEvent::empty();
    for g in graphs {
        out.nodes.extend(g.nodes.iter().cloned());
        out.edges.extend(g.edges.iter().cloned());
    }
    out
}

/// Every simple directed path from `start` to `end`, in lexicographic order.
/// `start == end` yields the single zero-length path.
pub fn enumerate_paths(graph: &GraphEvent, start: &str, end: &str) -> Vec<Vec<Label>> {
    fn walk(graph: &GraphEvent, end: &str, path: &mut Vec<Label>, out: &mut Vec<Vec<Label>>) {
        let last = path.last().expect("path starts non-empty").clone();
        if last == end {
            out.push(path.clone());
            return;
        }
        for next in graph.successors(&last) {
            if !path.contains(next) {
                path.push(next.clone());
                walk(graph, end, path, out);
                path.pop();
            }
        }
    }
    if !graph.nodes.contains(start) || !graph.nodes.contains(end) {
        return Vec::new();
    }
    let mut out = Vec::new();
    walk(graph, end, &mut vec![start.to_owned()], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(list: &[(&str, &str)]) -> GraphEvent {
        GraphEvent::from_edges(list.iter().map(|(u, v)| (u.to_string(), v.to_string()))).unwrap()
    }

    fn perm(labels: &[&str]) -> PermEvent {
        PermEvent::new(labels.iter().copied()).unwrap()
    }

    #[test]
    fn construction_checks_invariants() {
        assert_eq!(
            GraphEvent::from_edges([("A".into(), "A".into())]),
            Err(GraphError::SelfLoop("A".into()))
        );
        assert_eq!(
            GraphEvent::new(["A".to_string()], [("A".into(), "B".into())]),
            Err(GraphError::DanglingEdge("A".into(), "B".into()))
        );
        let dup =
            GraphEvent::from_edges([("A".into(), "B".into()), ("A".into(), "B".into())]).unwrap();
        assert_eq!(dup.edges().len(), 1);
    }

    #[test]
    fn set_and_perm_embeddings() {
        let g = from_set(&SetEvent::new(["A", "B"]));
        assert_eq!(g.nodes().len(), 2);
        assert!(g.edges().is_empty());
        assert_eq!(classify(&g), GraphKind::Edgeless);
        assert_eq!(to_set(&g), Some(SetEvent::new(["A", "B"])));
        assert!(from_set(&SetEvent::empty()).is_empty());
        assert_eq!(from_set(&SetEvent::new(["A"])).nodes().len(), 1);

        let p = perm(&["A", "B", "C"]);
        let g = from_perm(&p);
        assert_eq!(g, edges(&[("A", "B"), ("B", "C")]));
        assert_eq!(classify(&g), GraphKind::Chain);
        assert_eq!(to_perm(&g), Some(p));
        let single = from_perm(&perm(&["A"]));
        assert!(single.edges().is_empty());
        assert_eq!(to_perm(&single), Some(perm(&["A"])));
        // an unsorted chain decodes in chain order, not label order
        assert_eq!(
            to_perm(&from_perm(&perm(&["C", "A", "B"]))),
            Some(perm(&["C", "A", "B"]))
        );
    }

    #[test]
    fn classify_kinds() {
        assert_eq!(
            classify(&edges(&[("A", "B"), ("B", "A")])),
            GraphKind::Cyclic
        );
        assert_eq!(classify(&edges(&[("A", "B"), ("A", "C")])), GraphKind::Dag);
        let mut split = edges(&[("A", "B")]);
        split.nodes.insert("C".into());
        assert_eq!(classify(&split), GraphKind::Dag);
        assert_eq!(to_perm(&split), None);
    }

    #[test]
    fn cycle_detection() {
        assert_eq!(
            find_cycle(&edges(&[("A", "B"), ("B", "C"), ("C", "A")])),
            Some(vec!["A".into(), "B".into(), "C".into()])
        );
        assert_eq!(
            find_cycle(&edges(&[("A", "B"), ("A", "C"), ("B", "C")])),
            None
        );
    }

    #[test]
    fn remove_cycles_keeps_acyclic_input() {
        let g = edges(&[("A", "B"), ("B", "C"), ("A", "C")]);
        assert_eq!(remove_cycles(&g), g);
    }

    #[test]
    fn remove_cycles_drops_edge_of_furthest_reaching_source() {
        let g = edges(&[("A", "B"), ("B", "C"), ("C", "A"), ("A", "D"), ("D", "E")]);
        let out = remove_cycles(&g);
        assert_eq!(
            out,
            edges(&[("B", "C"), ("C", "A"), ("A", "D"), ("D", "E")])
        );
    }

    #[test]
    fn remove_cycles_tie_breaks_on_labels() {
        // symmetric 3-cycle: every source reaches 1 step without its edge
        let out = remove_cycles(&edges(&[("A", "B"), ("B", "C"), ("C", "A")]));
        assert_eq!(out, edges(&[("B", "C"), ("C", "A")]));
    }

    #[test]
    fn longest_path_reduce_examples() {
        let g = edges(&[("A", "B"), ("B", "C"), ("A", "C")]);
        assert_eq!(longest_path_reduce(&g), edges(&[("A", "B"), ("B", "C")]));
        let chain = edges(&[("A", "B"), ("B", "C")]);
        assert_eq!(longest_path_reduce(&chain), chain);
        let edgeless = from_set(&SetEvent::new(["A", "B"]));
        assert_eq!(longest_path_reduce(&edgeless), edgeless);
    }

    #[test]
    fn overlay_unions() {
        let a = edges(&[("A", "B")]);
        let b = edges(&[("B", "C")]);
        assert_eq!(merge_overlay([&a]), a);
        assert_eq!(merge_overlay([&a, &b]), edges(&[("A", "B"), ("B", "C")]));
        assert_eq!(merge_overlay([&a, &a]), a);
    }

    #[test]
    fn path_enumeration() {
        let chain = edges(&[("A", "B"), ("B", "C")]);
        assert_eq!(
            enumerate_paths(&chain, "A", "C"),
            vec![vec!["A".to_string(), "B".into(), "C".into()]]
        );
        assert_eq!(
            enumerate_paths(&chain, "B", "B"),
            vec![vec!["B".to_string()]]
        );
        assert!(enumerate_paths(&chain, "C", "A").is_empty());
        let diamond = edges(&[("A", "B"), ("B", "D"), ("A", "C"), ("C", "D")]);
        assert_eq!(
            enumerate_paths(&diamond, "A", "D"),
            vec![
                vec!["A".to_string(), "B".into(), "D".into()],
                vec!["A".to_string(), "C".into(), "D".into()],
            ]
        );
    }

    #[test]
    fn json_shape() {
        let g = edges(&[("B", "C"), ("A", "B")]);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(
            json,
            r#"{"nodes":["A","B","C"],"edges":[["A","B"],["B","C"]]}"#
        );
        let back: GraphEvent = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert!(
            serde_json::from_str::<GraphEvent>(r#"{"nodes":["A"],"edges":[["A","A"]]}"#).is_err()
        );
    }
}
