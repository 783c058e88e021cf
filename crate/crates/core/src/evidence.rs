//! Sample spaces, mass assignments and the classical set-valued combination
//! rules (Dempster, disjunctive), the pignistic transform and the
//! repeatable-set plus operator.
//!
//! Every mass assignment is generic over its event algebra so that the same
//! container carries set, permutation and graph focal elements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for every mass comparison.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Opaque sample identifier.
pub type Label = String;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("sample space must contain at least one element")]
    EmptySpace,
    #[error("duplicate sample identifier `{0}`")]
    DuplicateLabel(Label),
    #[error("sources are defined over different sample spaces")]
    SpaceMismatch,
    #[error("total conflict: every product mass lands on the empty event")]
    TotalConflict,
    #[error("no sources to combine")]
    NoSources,
    #[error("invalid mass assignment: {}", render_violations(.0))]
    Invalid(Vec<Violation>),
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Ordered list of distinct sample identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SampleSpace {
    elements: Vec<Label>,
}

impl SampleSpace {
    pub fn new<I, S>(elements: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<Label>,
    {
        let elements: Vec<Label> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(EvidenceError::EmptySpace);
        }
        let mut seen = BTreeSet::new();
        for label in &elements {
            if !seen.insert(label.as_str()) {
                return Err(EvidenceError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { elements })
    }

    /// Space `{"1", "2", ..., "n"}`.
    pub fn indexed(n: usize) -> Result<Self, EvidenceError> {
        Self::new((1..=n).map(|i| i.to_string()))
    }

    pub fn elements(&self) -> &[Label] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.elements.iter().any(|e| e == label)
    }
}

impl<'de> Deserialize<'de> for SampleSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let elements = Vec::<Label>::deserialize(deserializer)?;
        SampleSpace::new(elements).map_err(serde::de::Error::custom)
    }
}

/// A focal-element algebra: sets, permutations or graphs over a sample space.
///
/// The `Ord` implementation is the canonical ordering used to key fusion maps.
pub trait Event:
    Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync + Serialize + DeserializeOwned
{
    /// The empty event only ever exists transiently during fusion.
    fn is_empty(&self) -> bool;

    /// Every sample identifier mentioned by the event.
    fn labels(&self) -> Vec<&Label>;

    fn within(&self, space: &SampleSpace) -> bool {
        self.labels().into_iter().all(|l| space.contains(l))
    }
}

/// Subset of a sample space, stored sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SetEvent {
    members: BTreeSet<Label>,
}

impl SetEvent {
    pub fn new<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Label>,
    {
        Self {
            members: members.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole frame, i.e. the vacuous focal element.
    pub fn full(space: &SampleSpace) -> Self {
        Self::new(space.elements().iter().cloned())
    }

    pub fn members(&self) -> &BTreeSet<Label> {
        &self.members
    }

    /// Emptiness comes from [`Event::is_empty`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.members.contains(label)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            members: self.members.intersection(&other.members).cloned().collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            members: self.members.union(&other.members).cloned().collect(),
        }
    }
}

impl Event for SetEvent {
    fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn labels(&self) -> Vec<&Label> {
        self.members.iter().collect()
    }
}

impl fmt::Display for SetEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// A failed mass-assignment invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyEventPresent { mass: f64 },
    MassOutOfRange { event: String, mass: f64 },
    SumNotOne { sum: f64 },
    OutsideSpace { event: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyEventPresent { mass } => {
                write!(f, "empty event carries an entry (mass {mass})")
            }
            Violation::MassOutOfRange { event, mass } => {
                write!(f, "mass {mass} of {event} is outside [0, 1]")
            }
            Violation::SumNotOne { sum } => write!(f, "masses sum to {sum}, not 1"),
            Violation::OutsideSpace { event } => {
                write!(f, "{event} mentions samples outside the sample space")
            }
        }
    }
}

/// An evidential source: focal elements of one algebra with their masses.
#[derive(Clone, Debug, PartialEq)]
pub struct MassAssignment<E: Event> {
    space: SampleSpace,
    entries: BTreeMap<E, f64>,
}

impl<E: Event> MassAssignment<E> {
    /// Builds and validates. Duplicate events are merged additively.
    pub fn new<I>(space: SampleSpace, entries: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = (E, f64)>,
    {
        let assignment = Self::from_raw(space, entries);
        let violations = assignment.validate();
        if violations.is_empty() {
            Ok(assignment)
        } else {
            Err(EvidenceError::Invalid(violations))
        }
    }

    /// Builds without validating; see [`MassAssignment::validate`].
    pub fn from_raw<I>(space: SampleSpace, entries: I) -> Self
    where
        I: IntoIterator<Item = (E, f64)>,
    {
        let mut map = BTreeMap::new();
        for (event, mass) in entries {
            *map.entry(event).or_insert(0.0) += mass;
        }
        Self {
            space,
            entries: map,
        }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    /// Entries in canonical event order.
    pub fn iter(&self) -> impl Iterator<Item = (&E, f64)> + '_ {
        self.entries.iter().map(|(e, m)| (e, *m))
    }

    pub fn focal_elements(&self) -> impl Iterator<Item = &E> + '_ {
        self.entries.keys()
    }

    pub fn mass(&self, event: &E) -> f64 {
        self.entries.get(event).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Lists every broken invariant; an empty list means the source is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (event, &mass) in &self.entries {
            if event.is_empty() {
                violations.push(Violation::EmptyEventPresent { mass });
            } else if !event.within(&self.space) {
                violations.push(Violation::OutsideSpace {
                    event: event.to_string(),
                });
            }
            if !(0.0..=1.0 + MASS_TOLERANCE).contains(&mass) || mass.is_nan() {
                violations.push(Violation::MassOutOfRange {
                    event: event.to_string(),
                    mass,
                });
            }
        }
        let sum = self.total();
        if (sum - 1.0).abs() > MASS_TOLERANCE || sum.is_nan() {
            violations.push(Violation::SumNotOne { sum });
        }
        violations
    }

    /// Same space, same focal elements, masses within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((ea, ma), (eb, mb))| ea == eb && (ma - mb).abs() <= tol)
    }

    /// Events carrying the largest mass (all ties within tolerance), in
    /// canonical order.
    pub fn argmax(&self) -> Vec<&E> {
        let best = self
            .entries
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.entries
            .iter()
            .filter(|(_, &m)| best - m <= MASS_TOLERANCE)
            .map(|(e, _)| e)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "E: DeserializeOwned", serialize = "E: Serialize"))]
struct EntryRepr<E> {
    event: E,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "E: DeserializeOwned", serialize = "E: Serialize"))]
struct AssignmentRepr<E> {
    space: SampleSpace,
    entries: Vec<EntryRepr<E>>,
}

impl<E: Event> Serialize for MassAssignment<E> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = AssignmentRepr {
            space: self.space.clone(),
            entries: self
                .entries
                .iter()
                .map(|(event, &mass)| EntryRepr {
                    event: event.clone(),
                    mass,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

/// Deserialization does not validate, so malformed sources can still be
/// inspected with [`MassAssignment::validate`].
impl<'de, E: Event> Deserialize<'de> for MassAssignment<E> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = AssignmentRepr::<E>::deserialize(deserializer)?;
        Ok(Self::from_raw(
            repr.space,
            repr.entries.into_iter().map(|e| (e.event, e.mass)),
        ))
    }
}

/// Accumulator for product masses, with the empty-event mass kept apart.
pub(crate) struct FusionTally<E: Event> {
    entries: BTreeMap<E, f64>,
    conflict: f64,
}

impl<E: Event> FusionTally<E> {
    pub(crate) fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
            conflict: 0.0,
        }
    }

    pub(crate) fn add(&mut self, event: E, mass: f64) {
        if event.is_empty() {
            self.conflict += mass;
        } else {
            *self.entries.entry(event).or_insert(0.0) += mass;
        }
    }

    /// Redistributes the pooled empty mass over the surviving events.
    pub(crate) fn normalize(
        self,
        space: &SampleSpace,
    ) -> Result<(MassAssignment<E>, f64), EvidenceError> {
        let kept: f64 = self.entries.values().sum();
        // kept == 1 - conflict for normalized inputs; dividing by the kept
        // total keeps rounding error out of the fused sum.
        if kept <= 0.0 {
            return Err(EvidenceError::TotalConflict);
        }
        let entries = self
            .entries
            .into_iter()
            .filter(|(_, m)| *m != 0.0)
            .map(|(e, m)| (e, m / kept))
            .collect();
        Ok((
            MassAssignment {
                space: space.clone(),
                entries,
            },
            self.conflict,
        ))
    }
}

pub(crate) fn ensure_same_space<E: Event>(
    a: &MassAssignment<E>,
    b: &MassAssignment<E>,
) -> Result<(), EvidenceError> {
    if a.space == b.space {
        Ok(())
    } else {
        Err(EvidenceError::SpaceMismatch)
    }
}

/// Dempster's rule for two set-valued sources. Returns the fused source and
/// the conflict mass that was redistributed.
pub fn dempster_combine(
    a: &MassAssignment<SetEvent>,
    b: &MassAssignment<SetEvent>,
) -> Result<(MassAssignment<SetEvent>, f64), EvidenceError> {
    ensure_same_space(a, b)?;
    let mut tally = FusionTally::new();
    for (ea, ma) in a.iter() {
        for (eb, mb) in b.iter() {
            tally.add(ea.intersection(eb), ma * mb);
        }
    }
    tally.normalize(a.space())
}

/// Left fold of [`dempster_combine`] over the sources.
pub fn combine_many(
    sources: &[MassAssignment<SetEvent>],
) -> Result<MassAssignment<SetEvent>, EvidenceError> {
    let (first, rest) = sources.split_first().ok_or(EvidenceError::NoSources)?;
    rest.iter().try_fold(first.clone(), |acc, next| {
        dempster_combine(&acc, next).map(|(fused, _)| fused)
    })
}

/// Disjunctive combination: product masses land on the union, so no
/// normalization is ever required.
pub fn dcr_combine(
    a: &MassAssignment<SetEvent>,
    b: &MassAssignment<SetEvent>,
) -> Result<MassAssignment<SetEvent>, EvidenceError> {
    ensure_same_space(a, b)?;
    let mut entries = BTreeMap::new();
    for (ea, ma) in a.iter() {
        for (eb, mb) in b.iter() {
            let product = ma * mb;
            if product != 0.0 {
                *entries.entry(ea.union(eb)).or_insert(0.0) += product;
            }
        }
    }
    Ok(MassAssignment {
        space: a.space.clone(),
        entries,
    })
}

/// Pignistic probability: each focal element splits its mass evenly among
/// its members. The result covers every sample of the space.
pub fn pignistic(source: &MassAssignment<SetEvent>) -> BTreeMap<Label, f64> {
    let mut probabilities: BTreeMap<Label, f64> = source
        .space()
        .elements()
        .iter()
        .map(|l| (l.clone(), 0.0))
        .collect();
    for (event, mass) in source.iter() {
        if event.is_empty() {
            continue;
        }
        let share = mass / event.len() as f64;
        for member in event.members() {
            *probabilities.entry(member.clone()).or_insert(0.0) += share;
        }
    }
    probabilities
}

/// Repeatable set: element label with its multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset {
    counts: BTreeMap<Label, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<Label>,
    {
        let mut set = Self::new();
        for (label, count) in counts {
            set.insert(label, count);
        }
        set
    }

    pub fn insert(&mut self, label: impl Into<Label>, count: u64) {
        if count > 0 {
            *self.counts.entry(label.into()).or_insert(0) += count;
        }
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, u64)> + '_ {
        self.counts.iter().map(|(l, c)| (l, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Pointwise multiplicity addition.
pub fn multiset_plus(a: &Multiset, b: &Multiset) -> Multiset {
    let mut out = a.clone();
    for (label, count) in b.iter() {
        out.insert(label.clone(), count);
    }
    out
}
