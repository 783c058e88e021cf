//! Random generators and independent reference implementations shared by
//! the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use eprm::evidence::{Event, MassAssignment, SampleSpace, SetEvent, MASS_TOLERANCE};
use eprm::rgs::{Edge, GraphEvent};
use eprm::rps::PermEvent;
use rand::seq::SliceRandom;
use rand::Rng;

pub const LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

pub fn space(n: usize) -> SampleSpace {
    SampleSpace::new(LABELS[..n].iter().copied()).unwrap()
}

/// Masses that sum to one, each bounded away from zero.
pub fn random_weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Source over an `n`-element space as a map from non-empty bitmask to mass.
pub fn random_mask_source<R: Rng>(rng: &mut R, n: usize) -> BTreeMap<u32, f64> {
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.shuffle(rng);
    let k = rng.random_range(1..=masks.len().min(4));
    masks
        .into_iter()
        .take(k)
        .zip(random_weights(rng, k))
        .collect()
}

pub fn mask_to_set(mask: u32) -> SetEvent {
    SetEvent::new(
        LABELS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, l)| *l),
    )
}

pub fn mask_source(n: usize, src: &BTreeMap<u32, f64>) -> MassAssignment<SetEvent> {
    MassAssignment::new(space(n), src.iter().map(|(&m, &w)| (mask_to_set(m), w))).unwrap()
}

/// Dempster's rule by direct enumeration over bitmasks. Returns `None` when
/// the two sources are in total conflict.
pub fn dempster_oracle(
    a: &BTreeMap<u32, f64>,
    b: &BTreeMap<u32, f64>,
) -> Option<(BTreeMap<u32, f64>, f64)> {
    let mut raw = BTreeMap::new();
    let mut conflict = 0.0;
    for (&ma, &wa) in a {
        for (&mb, &wb) in b {
            let meet = ma & mb;
            if meet == 0 {
                conflict += wa * wb;
            } else {
                *raw.entry(meet).or_insert(0.0) += wa * wb;
            }
        }
    }
    if raw.is_empty() {
        return None;
    }
    let scale = 1.0 - conflict;
    Some((
        raw.into_iter().map(|(m, w)| (m, w / scale)).collect(),
        conflict,
    ))
}

pub fn random_perm<R: Rng>(rng: &mut R, n: usize) -> PermEvent {
    let mut labels: Vec<&str> = LABELS[..n].to_vec();
    labels.shuffle(rng);
    let len = rng.random_range(1..=n);
    PermEvent::new(labels.into_iter().take(len)).unwrap()
}

pub fn random_perm_source<R: Rng>(rng: &mut R, n: usize) -> MassAssignment<PermEvent> {
    let k = rng.random_range(1..=3);
    let mut entries: BTreeMap<PermEvent, f64> = BTreeMap::new();
    for w in random_weights(rng, k) {
        *entries.entry(random_perm(rng, n)).or_insert(0.0) += w;
    }
    MassAssignment::new(space(n), entries).unwrap()
}

/// Arbitrary directed graph on up to `max_nodes` labels, no self-loops.
/// Cycles and opposite edge pairs are allowed.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> GraphEvent {
    let n = rng.random_range(1..=max_nodes);
    let density = rng.random_range(0.1..0.6);
    let nodes: Vec<&str> = LABELS[..n].to_vec();
    let mut edges = Vec::new();
    for u in &nodes {
        for v in &nodes {
            if u != v && rng.random_bool(density) {
                edges.push((u.to_string(), v.to_string()));
            }
        }
    }
    GraphEvent::new(nodes.iter().map(|l| l.to_string()), edges).unwrap()
}

pub fn random_graph_source<R: Rng>(rng: &mut R, n: usize) -> MassAssignment<GraphEvent> {
    let k = rng.random_range(1..=3);
    let mut entries: BTreeMap<GraphEvent, f64> = BTreeMap::new();
    for w in random_weights(rng, k) {
        let mut g = random_graph(rng, n);
        if g.is_empty() {
            g = GraphEvent::new(["a".to_string()], Vec::<Edge>::new()).unwrap();
        }
        *entries.entry(g).or_insert(0.0) += w;
    }
    MassAssignment::new(space(n), entries).unwrap()
}

/// Net edge vote of two graphs, written out pair by pair.
pub fn vote_oracle(a: &GraphEvent, b: &GraphEvent) -> GraphEvent {
    let mut labels: BTreeSet<&String> = BTreeSet::new();
    for (u, v) in a.edges().iter().chain(b.edges()) {
        labels.insert(u);
        labels.insert(v);
    }
    let labels: Vec<&String> = labels.into_iter().collect();
    let mut edges = Vec::new();
    for (i, u) in labels.iter().enumerate() {
        for v in &labels[i + 1..] {
            let forward = a.has_edge(u, v) as i32 + b.has_edge(u, v) as i32;
            let backward = a.has_edge(v, u) as i32 + b.has_edge(v, u) as i32;
            if forward > backward {
                edges.push(((*u).clone(), (*v).clone()));
            } else if backward > forward {
                edges.push(((*v).clone(), (*u).clone()));
            }
        }
    }
    GraphEvent::from_edges(edges).unwrap()
}

/// Pairs `(u, v)` with a non-empty path from `u` to `v`, by Floyd-Warshall.
pub fn closure(g: &GraphEvent) -> BTreeSet<(String, String)> {
    let nodes: Vec<&String> = g.nodes().iter().collect();
    let n = nodes.len();
    let idx = |l: &String| nodes.iter().position(|x| *x == l).unwrap();
    let mut r = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        r[idx(u)][idx(v)] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if r[i][j] {
                out.insert((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    out
}

pub fn is_acyclic(g: &GraphEvent) -> bool {
    closure(g).iter().all(|(u, v)| u != v)
}

/// No edge `u->v` that is also implied by a longer path.
pub fn is_shortcut_free(g: &GraphEvent) -> bool {
    g.edges().iter().all(|edge| {
        let rest: Vec<Edge> = g.edges().iter().filter(|e| *e != edge).cloned().collect();
        let without = GraphEvent::new(g.nodes().iter().cloned(), rest).unwrap();
        !closure(&without).contains(edge)
    })
}

/// Sum to one within tolerance and no empty focal element.
pub fn well_formed<E: Event>(m: &MassAssignment<E>) -> bool {
    (m.total() - 1.0).abs() <= MASS_TOLERANCE && m.iter().all(|(e, w)| !e.is_empty() && w > 0.0)
}
