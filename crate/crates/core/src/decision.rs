//! Velocity-ranking decisions over a simulated case.
//!
//! Two procedures are compared. The mean velocity decision ranks the aircraft
//! a sensor saw by their mean sensed speed, independently per sensor. The
//! conflict resolution decision turns each sensor's speeds into a graph-valued
//! evidential source, fuses the sources with an edge-voting pattern operator
//! and reads the ranking off the heaviest fused graph.
//!
//! Aircraft are numbered from 1. Graph nodes carry the decimal index as
//! their label; an edge `a -> b` states that `a` is slower than `b`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airsim::{Case, SensorReadings, MAX_AIRCRAFT};
use crate::evidence::{EvidenceError, Label, MassAssignment, SampleSpace};
use crate::pattern::{
    fuse_sequence, BpaAlgorithm, Decision, DecisionOperator, PatternError, PatternOperator,
    PreferenceParams,
};
use crate::rgs::{enumerate_paths, longest_path_reduce, remove_cycles, Edge, GraphEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("case {0}: no sensor observed two or more aircraft")]
    InvalidCase(u64),
    #[error("case {id} has {count} aircraft; at most {MAX_AIRCRAFT} are supported")]
    TooManyAircraft { id: u64, count: usize },
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResultState {
    True,
    False,
    Conflict,
    Invalid,
}

impl ResultState {
    pub const ALL: [ResultState; 4] = [
        ResultState::True,
        ResultState::False,
        ResultState::Conflict,
        ResultState::Invalid,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResultState::True => "True",
            ResultState::False => "False",
            ResultState::Conflict => "Conflict",
            ResultState::Invalid => "Invalid",
        }
    }
}

impl fmt::Display for ResultState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    /// Aircraft sequences, slowest first.
    pub chains: Vec<Vec<usize>>,
    pub state: ResultState,
}

impl DecisionOutcome {
    pub fn invalid() -> Self {
        Self {
            chains: Vec::new(),
            state: ResultState::Invalid,
        }
    }

    fn classified(chains: Vec<Vec<usize>>, truth: &[usize]) -> Self {
        let state = classify_result(&chains, truth);
        Self { chains, state }
    }
}

/// Speeds seen by one sensor, keyed by aircraft; only aircraft with at least
/// one reading are kept.
pub type SpeedTable = BTreeMap<usize, Vec<f64>>;

pub fn speed_table(readings: &SensorReadings) -> SpeedTable {
    readings
        .iter()
        .filter(|(_, r)| !r.is_empty())
        .map(|(&a, r)| (a, r.iter().map(|p| p[1]).collect()))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn mean_speeds(speeds: &SpeedTable) -> BTreeMap<usize, f64> {
    speeds.iter().map(|(&a, v)| (a, mean(v))).collect()
}

/// Aircraft by ascending mean speed, ties to the smaller index.
pub fn rank_by_mean(means: &BTreeMap<usize, f64>) -> Vec<usize> {
    let mut order: Vec<usize> = means.keys().copied().collect();
    order.sort_by(|a, b| means[a].total_cmp(&means[b]).then(a.cmp(b)));
    order
}

/// Verdict of a set of ranking chains against the true order.
///
/// A chain naming fewer than two aircraft is uninformative. An informative
/// chain is right when every pair it orders agrees with `truth`, so a
/// partial ranking can still be right. Uninformative chains are ignored
/// unless nothing else is present; right and wrong chains together are a
/// conflict.
pub fn classify_result(chains: &[Vec<usize>], truth: &[usize]) -> ResultState {
    let position: BTreeMap<usize, usize> = truth.iter().enumerate().map(|(p, &a)| (a, p)).collect();
    let chain_state = |chain: &Vec<usize>| {
        if chain.len() < 2 {
            return ResultState::Invalid;
        }
        let positions: Option<Vec<usize>> =
            chain.iter().map(|a| position.get(a).copied()).collect();
        match positions {
            Some(p) if p.windows(2).all(|w| w[0] < w[1]) => ResultState::True,
            _ => ResultState::False,
        }
    };
    let (mut any_true, mut any_false) = (false, false);
    for chain in chains {
        match chain_state(chain) {
            ResultState::True => any_true = true,
            ResultState::False => any_false = true,
            _ => {}
        }
    }
    match (any_true, any_false) {
        (true, true) => ResultState::Conflict,
        (true, false) => ResultState::True,
        (false, true) => ResultState::False,
        (false, false) => ResultState::Invalid,
    }
}

fn check_fleet(case: &Case) -> Result<(), DecisionError> {
    if case.aircraft.len() > MAX_AIRCRAFT {
        return Err(DecisionError::TooManyAircraft {
            id: case.id,
            count: case.aircraft.len(),
        });
    }
    Ok(())
}

/// Sensors that saw at least two aircraft, in ascending sensor order.
pub fn informative_sensors(case: &Case) -> Vec<(usize, SpeedTable)> {
    case.readings
        .iter()
        .map(|(&s, r)| (s, speed_table(r)))
        .filter(|(_, t)| t.len() >= 2)
        .collect()
}

/// Mean velocity decision: one chain per informative sensor.
pub fn mvd(case: &Case) -> Result<DecisionOutcome, DecisionError> {
    check_fleet(case)?;
    let chains: Vec<Vec<usize>> = informative_sensors(case)
        .iter()
        .map(|(_, speeds)| rank_by_mean(&mean_speeds(speeds)))
        .collect();
    if chains.is_empty() {
        return Err(DecisionError::InvalidCase(case.id));
    }
    Ok(DecisionOutcome::classified(chains, &case.truth))
}

/// Counts per non-empty aircraft subset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalCount {
    counts: BTreeMap<BTreeSet<usize>, u64>,
}

impl IntervalCount {
    pub fn get(&self, subset: &BTreeSet<usize>) -> u64 {
        self.counts.get(subset).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BTreeSet<usize>, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (k, *v))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }
}

/// Counts, for every pooled speed, the aircraft whose observed speed range
/// could have produced it. A speed that fits every aircraft carries no
/// distinguishing information and is skipped; otherwise each non-empty
/// subset of the fitting aircraft is incremented.
pub fn interval_count(speeds: &SpeedTable) -> IntervalCount {
    let ranges: Vec<(usize, f64, f64)> = speeds
        .iter()
        .map(|(&a, v)| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (a, lo, hi)
        })
        .collect();
    let mut count = IntervalCount::default();
    if ranges.len() < 2 {
        return count;
    }
    for &v in speeds.values().flatten() {
        let belong: Vec<usize> = ranges
            .iter()
            .filter(|(_, lo, hi)| *lo <= v && v <= *hi)
            .map(|(a, _, _)| *a)
            .collect();
        if belong.len() == ranges.len() {
            continue;
        }
        for mask in 1u32..(1 << belong.len()) {
            let subset: BTreeSet<usize> = belong
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &a)| a)
                .collect();
            *count.counts.entry(subset).or_insert(0) += 1;
        }
    }
    count
}

/// Ordered groups of aircraft, slowest group first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankingChain {
    pub groups: Vec<BTreeSet<usize>>,
}

impl RankingChain {
    /// Cartesian product between every pair of consecutive groups.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.groups
            .windows(2)
            .flat_map(|w| {
                let (slow, fast) = (&w[0], &w[1]);
                slow.iter()
                    .flat_map(move |&a| fast.iter().map(move |&b| (a, b)))
            })
            .collect()
    }
}

/// Treats the aircraft of `merged` as one indistinguishable group whose mean
/// is taken over their pooled speeds; the others keep their own means.
/// Groups are sorted by mean, ties to the group with the smaller index.
pub fn rank_groups(speeds: &SpeedTable, merged: &BTreeSet<usize>) -> RankingChain {
    let mut groups: Vec<(f64, BTreeSet<usize>)> = speeds
        .iter()
        .filter(|(a, _)| merged.len() < 2 || !merged.contains(a))
        .map(|(&a, v)| (mean(v), BTreeSet::from([a])))
        .collect();
    if merged.len() >= 2 {
        let pooled: Vec<f64> = merged
            .iter()
            .filter_map(|a| speeds.get(a))
            .flatten()
            .copied()
            .collect();
        groups.push((mean(&pooled), merged.clone()));
    }
    groups.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.first().cmp(&b.1.first()))
    });
    RankingChain {
        groups: groups.into_iter().map(|(_, g)| g).collect(),
    }
}

fn label(a: usize) -> Label {
    a.to_string()
}

fn chain_graph(speeds: &SpeedTable, merged: &BTreeSet<usize>) -> GraphEvent {
    let edges: Vec<Edge> = rank_groups(speeds, merged)
        .edges()
        .into_iter()
        .map(|(a, b)| (label(a), label(b)))
        .collect();
    GraphEvent::new(speeds.keys().map(|&a| label(a)), edges)
        .expect("edges join distinct detected aircraft")
}

/// Builds the sensor's graph-valued source: every counted subset maps to
/// the ranking graph obtained by merging it, with mass proportional to its
/// count. Subsets yielding the same graph pool their mass.
pub fn counts_to_source(
    space: &SampleSpace,
    speeds: &SpeedTable,
    counts: &IntervalCount,
) -> Result<MassAssignment<GraphEvent>, EvidenceError> {
    let total = counts.total() as f64;
    MassAssignment::new(
        space.clone(),
        counts
            .iter()
            .map(|(subset, n)| (chain_graph(speeds, subset), n as f64 / total)),
    )
}

/// Speeds of one sensor together with the case's sample space.
#[derive(Clone, Debug)]
pub struct SensorSnapshot {
    pub space: SampleSpace,
    pub speeds: SpeedTable,
}

/// Interval counting followed by graph conversion.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntervalGraphBpa;

impl BpaAlgorithm<SensorSnapshot, GraphEvent> for IntervalGraphBpa {
    fn name(&self) -> &'static str {
        "interval-graph"
    }

    fn assign(&self, input: &SensorSnapshot) -> Result<MassAssignment<GraphEvent>, EvidenceError> {
        let counts = interval_count(&input.speeds);
        if counts.is_empty() {
            return Err(EvidenceError::NoSources);
        }
        counts_to_source(&input.space, &input.speeds, &counts)
    }
}

/// Edge vote between two graphs: per unordered node pair the directions
/// are tallied over both operands, opposite directions cancelling one for
/// one. Surviving net directions form the graph, which then has its cycles
/// broken and its shortcut edges removed. Nodes are the endpoints of
/// surviving edges, so a fully cancelled vote yields the empty graph.
pub fn speed_graph_po(a: &GraphEvent, b: &GraphEvent) -> GraphEvent {
    let mut tally: BTreeMap<(&Label, &Label), i64> = BTreeMap::new();
    for (u, v) in a.edges().iter().chain(b.edges()) {
        if u < v {
            *tally.entry((u, v)).or_insert(0) += 1;
        } else {
            *tally.entry((v, u)).or_insert(0) -= 1;
        }
    }
    let edges = tally.into_iter().filter_map(|((lo, hi), net)| match net {
        n if n > 0 => Some((lo.clone(), hi.clone())),
        n if n < 0 => Some((hi.clone(), lo.clone())),
        _ => None,
    });
    let voted = GraphEvent::from_edges(edges).expect("votes never produce self-loops");
    longest_path_reduce(&remove_cycles(&voted))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SpeedGraph;

impl PatternOperator<GraphEvent> for SpeedGraph {
    fn name(&self) -> &'static str {
        "speed-graph"
    }

    fn apply(&self, a: &GraphEvent, b: &GraphEvent) -> GraphEvent {
        speed_graph_po(a, b)
    }
}

/// Reads rankings off a fused graph source: the heaviest graphs (all ties,
/// folded with the speed-graph operator in canonical order) are split into
/// every path from an in-degree-0 node to an out-degree-0 node.
pub fn ranking_paths(source: &MassAssignment<GraphEvent>) -> Vec<Vec<Label>> {
    let mut best = source.argmax().into_iter();
    let Some(first) = best.next() else {
        return Vec::new();
    };
    let graph = best.fold(first.clone(), |acc, g| speed_graph_po(&acc, g));
    let starts: Vec<&Label> = graph
        .nodes()
        .iter()
        .filter(|n| graph.in_degree(n) == 0)
        .collect();
    let ends: Vec<&Label> = graph
        .nodes()
        .iter()
        .filter(|n| graph.out_degree(n) == 0)
        .collect();
    let mut paths = Vec::new();
    for s in &starts {
        for e in &ends {
            paths.extend(enumerate_paths(&graph, s, e));
        }
    }
    paths
}

/// Decision operator form of [`ranking_paths`].
#[derive(Clone, Copy, Debug, Default)]
pub struct CrdDecision;

impl DecisionOperator<GraphEvent> for CrdDecision {
    fn name(&self) -> &'static str {
        "crd"
    }

    fn decide(
        &self,
        source: &MassAssignment<GraphEvent>,
        _preferences: &PreferenceParams,
    ) -> Result<Decision<GraphEvent>, PatternError> {
        Ok(Decision::Chains(ranking_paths(source)))
    }
}

/// Intermediate products of a conflict resolution decision.
#[derive(Clone, Debug, PartialEq)]
pub struct CrdTrace {
    pub sources: Vec<(usize, MassAssignment<GraphEvent>)>,
    /// `None` when the sources were in total conflict or none existed.
    pub fused: Option<MassAssignment<GraphEvent>>,
    pub outcome: DecisionOutcome,
}

fn parse_chain(chain: &[Label]) -> Vec<usize> {
    chain
        .iter()
        .map(|l| l.parse().expect("graph labels are aircraft indices"))
        .collect()
}

pub fn crd_trace(case: &Case) -> Result<CrdTrace, DecisionError> {
    check_fleet(case)?;
    let sensors = informative_sensors(case);
    if sensors.is_empty() {
        return Err(DecisionError::InvalidCase(case.id));
    }
    let space = SampleSpace::indexed(case.aircraft.len())?;
    let mut sources = Vec::new();
    for (s, speeds) in sensors {
        let counts = interval_count(&speeds);
        if counts.is_empty() {
            continue;
        }
        sources.push((s, counts_to_source(&space, &speeds, &counts)?));
    }
    let ordered: Vec<MassAssignment<GraphEvent>> = sources.iter().map(|(_, m)| m.clone()).collect();
    let fused = match fuse_sequence(&ordered, &SpeedGraph) {
        Ok(fused) => Some(fused),
        Err(EvidenceError::TotalConflict | EvidenceError::NoSources) => None,
        Err(e) => return Err(e.into()),
    };
    let outcome = match &fused {
        Some(f) => DecisionOutcome::classified(
            ranking_paths(f).iter().map(|c| parse_chain(c)).collect(),
            &case.truth,
        ),
        None => DecisionOutcome::invalid(),
    };
    Ok(CrdTrace {
        sources,
        fused,
        outcome,
    })
}

/// Conflict resolution decision.
pub fn crd(case: &Case) -> Result<DecisionOutcome, DecisionError> {
    crd_trace(case).map(|t| t.outcome)
}
