//! Pattern fusion: pluggable pattern operators, two-source fusion, ordered
//! multi-source fusion and preference-bearing decision operators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{
    ensure_same_space, pignistic, Event, EvidenceError, FusionTally, Label, MassAssignment,
    SetEvent,
};
use crate::rps::{right_intersect, PermEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("unknown {kind} operator `{name}`")]
    UnknownOperator { kind: &'static str, name: String },
    #[error("decision operator `{operator}` failed: {reason}")]
    Decision {
        operator: &'static str,
        reason: String,
    },
}

/// Binary operation closed over one event algebra. The empty event is a
/// legal result and is pooled as conflict by [`fuse_two`].
pub trait PatternOperator<E: Event>: Send + Sync {
    fn name(&self) -> &'static str;

    fn apply(&self, a: &E, b: &E) -> E;
}

/// Opaque user preferences handed to a decision operator.
pub type PreferenceParams = BTreeMap<String, serde_json::Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision<E> {
    /// Probability per sample.
    Distribution(BTreeMap<Label, f64>),
    /// Selected focal elements.
    Focal(Vec<E>),
    /// Ordered sample sequences, earliest first.
    Chains(Vec<Vec<Label>>),
}

pub trait DecisionOperator<E: Event>: Send + Sync {
    fn name(&self) -> &'static str;

    fn decide(
        &self,
        source: &MassAssignment<E>,
        preferences: &PreferenceParams,
    ) -> Result<Decision<E>, PatternError>;
}

/// Turns raw input into an evidential source.
pub trait BpaAlgorithm<I, E: Event> {
    fn name(&self) -> &'static str;

    fn assign(&self, input: &I) -> Result<MassAssignment<E>, EvidenceError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Intersection;

impl PatternOperator<SetEvent> for Intersection {
    fn name(&self) -> &'static str {
        "intersection"
    }

    fn apply(&self, a: &SetEvent, b: &SetEvent) -> SetEvent {
        a.intersection(b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Union;

impl PatternOperator<SetEvent> for Union {
    fn name(&self) -> &'static str {
        "union"
    }

    fn apply(&self, a: &SetEvent, b: &SetEvent) -> SetEvent {
        a.union(b)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RightIntersection;

impl PatternOperator<PermEvent> for RightIntersection {
    fn name(&self) -> &'static str {
        "rps-right"
    }

    fn apply(&self, a: &PermEvent, b: &PermEvent) -> PermEvent {
        right_intersect(a, b)
    }
}

/// Fuses two sources under `po` and also reports the conflict mass that was
/// pooled on the empty event.
pub fn fuse_two_with_conflict<E, P>(
    a: &MassAssignment<E>,
    b: &MassAssignment<E>,
    po: &P,
) -> Result<(MassAssignment<E>, f64), EvidenceError>
where
    E: Event,
    P: PatternOperator<E> + ?Sized,
{
    ensure_same_space(a, b)?;
    let mut tally = FusionTally::new();
    for (ea, ma) in a.iter() {
        for (eb, mb) in b.iter() {
            tally.add(po.apply(ea, eb), ma * mb);
        }
    }
    tally.normalize(a.space())
}

/// Cartesian product of the two sources; every pair deposits its product
/// mass on `po(C1, C2)` and the empty-event mass is redistributed by
/// normalization.
pub fn fuse_two<E, P>(
    a: &MassAssignment<E>,
    b: &MassAssignment<E>,
    po: &P,
) -> Result<MassAssignment<E>, EvidenceError>
where
    E: Event,
    P: PatternOperator<E> + ?Sized,
{
    fuse_two_with_conflict(a, b, po).map(|(fused, _)| fused)
}

/// Strict left fold of [`fuse_two`] in the given order. Pattern operators
/// need not be associative or commutative, so the order is part of the
/// contract.
pub fn fuse_sequence<E, P>(
    sources: &[MassAssignment<E>],
    po: &P,
) -> Result<MassAssignment<E>, EvidenceError>
where
    E: Event,
    P: PatternOperator<E> + ?Sized,
{
    let (first, rest) = sources.split_first().ok_or(EvidenceError::NoSources)?;
    rest.iter()
        .try_fold(first.clone(), |acc, next| fuse_two(&acc, next, po))
}

pub fn decide<E, D>(
    source: &MassAssignment<E>,
    dmo: &D,
    preferences: &PreferenceParams,
) -> Result<Decision<E>, PatternError>
where
    E: Event,
    D: DecisionOperator<E> + ?Sized,
{
    dmo.decide(source, preferences)
}

/// Pignistic probabilities; the preference-free decision.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pignistic;

impl DecisionOperator<SetEvent> for Pignistic {
    fn name(&self) -> &'static str {
        "pignistic"
    }

    fn decide(
        &self,
        source: &MassAssignment<SetEvent>,
        _preferences: &PreferenceParams,
    ) -> Result<Decision<SetEvent>, PatternError> {
        Ok(Decision::Distribution(pignistic(source)))
    }
}

/// Focal elements of maximal mass, ties included.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxMass;

impl<E: Event> DecisionOperator<E> for MaxMass {
    fn name(&self) -> &'static str {
        "max-mass"
    }

    fn decide(
        &self,
        source: &MassAssignment<E>,
        _preferences: &PreferenceParams,
    ) -> Result<Decision<E>, PatternError> {
        Ok(Decision::Focal(
            source.argmax().into_iter().cloned().collect(),
        ))
    }
}

/// Class probabilities produced by a classifier, aligned with the space.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassScores {
    pub space: crate::evidence::SampleSpace,
    pub probabilities: Vec<f64>,
}

impl ClassScores {
    fn ranked(&self) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> =
            self.probabilities.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }

    fn label(&self, index: usize) -> &Label {
        &self.space.elements()[index]
    }
}

/// Keeps the two most probable classes and shares the remaining probability
/// equally between them.
#[derive(Clone, Copy, Debug, Default)]
pub struct TopTwoShare;

impl BpaAlgorithm<ClassScores, SetEvent> for TopTwoShare {
    fn name(&self) -> &'static str {
        "top-two-share"
    }

    fn assign(&self, input: &ClassScores) -> Result<MassAssignment<SetEvent>, EvidenceError> {
        let ranked = input.ranked();
        let top: Vec<(usize, f64)> = ranked.iter().take(2).copied().collect();
        let rest: f64 = ranked.iter().skip(2).map(|(_, p)| p).sum();
        let share = rest / top.len() as f64;
        MassAssignment::new(
            input.space.clone(),
            top.into_iter()
                .map(|(i, p)| (SetEvent::new([input.label(i).clone()]), p + share)),
        )
    }
}

/// All mass on the most probable class.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArgmaxClass;

impl BpaAlgorithm<ClassScores, SetEvent> for ArgmaxClass {
    fn name(&self) -> &'static str {
        "argmax-class"
    }

    fn assign(&self, input: &ClassScores) -> Result<MassAssignment<SetEvent>, EvidenceError> {
        let (best, _) = input.ranked()[0];
        MassAssignment::new(
            input.space.clone(),
            [(SetEvent::new([input.label(best).clone()]), 1.0)],
        )
    }
}

/// Classes with equal probability are merged into one focal element
/// carrying their summed probability. Zero-probability classes are dropped.
#[derive(Clone, Copy, Debug)]
pub struct MergeEqualScores {
    pub tolerance: f64,
}

impl Default for MergeEqualScores {
    fn default() -> Self {
        Self { tolerance: 1e-9 }
    }
}

impl BpaAlgorithm<ClassScores, SetEvent> for MergeEqualScores {
    fn name(&self) -> &'static str {
        "merge-equal"
    }

    fn assign(&self, input: &ClassScores) -> Result<MassAssignment<SetEvent>, EvidenceError> {
        let mut groups: Vec<(f64, Vec<Label>, f64)> = Vec::new();
        for (i, p) in input.ranked() {
            if p <= 0.0 {
                continue;
            }
            match groups.last_mut() {
                Some((value, members, total)) if (*value - p).abs() <= self.tolerance => {
                    members.push(input.label(i).clone());
                    *total += p;
                }
                _ => groups.push((p, vec![input.label(i).clone()], p)),
            }
        }
        MassAssignment::new(
            input.space.clone(),
            groups
                .into_iter()
                .map(|(_, members, total)| (SetEvent::new(members), total)),
        )
    }
}
