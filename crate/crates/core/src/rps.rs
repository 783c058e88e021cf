//! Permutation events and the ordered intersections of random permutation
//! sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::evidence::{
    ensure_same_space, Event, EvidenceError, FusionTally, Label, MassAssignment,
};

/// Ordered sequence of distinct samples. Order is significant.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PermEvent {
    sequence: Vec<Label>,
}

impl PermEvent {
    /// Returns `None` when a label repeats.
    pub fn new<I, S>(sequence: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<Label>,
    {
        let sequence: Vec<Label> = sequence.into_iter().map(Into::into).collect();
        let distinct: BTreeSet<&Label> = sequence.iter().collect();
        (distinct.len() == sequence.len()).then_some(Self { sequence })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sequence(&self) -> &[Label] {
        &self.sequence
    }

    /// Emptiness comes from [`Event::is_empty`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.sequence.iter().any(|l| l == label)
    }

    /// Elements that lie in both operands, in the order they take in `order`.
    fn common_in_order_of(order: &Self, other: &Self) -> Self {
        Self {
            sequence: order
                .sequence
                .iter()
                .filter(|l| other.contains(l))
                .cloned()
                .collect(),
        }
    }
}

impl Event for PermEvent {
    fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    fn labels(&self) -> Vec<&Label> {
        self.sequence.iter().collect()
    }
}

impl fmt::Display for PermEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.sequence.join(","))
    }
}

/// Common elements of `a` and `b`, ordered as in `a`.
pub fn left_intersect(a: &PermEvent, b: &PermEvent) -> PermEvent {
    PermEvent::common_in_order_of(a, b)
}

/// Common elements of `a` and `b`, ordered as in `b`.
pub fn right_intersect(a: &PermEvent, b: &PermEvent) -> PermEvent {
    PermEvent::common_in_order_of(b, a)
}

/// Right-orthogonal combination of permutation sources: products land on the
/// right intersection, empty results are pooled as conflict and redistributed.
pub fn rps_right_combine(
    sources: &[MassAssignment<PermEvent>],
) -> Result<MassAssignment<PermEvent>, EvidenceError> {
    let (first, rest) = sources.split_first().ok_or(EvidenceError::NoSources)?;
    rest.iter().try_fold(first.clone(), |acc, next| {
        ensure_same_space(&acc, next)?;
        let mut tally = FusionTally::new();
        for (ea, ma) in acc.iter() {
            for (eb, mb) in next.iter() {
                tally.add(right_intersect(ea, eb), ma * mb);
            }
        }
        tally.normalize(acc.space()).map(|(fused, _)| fused)
    })
}

/// Number of non-empty permutation events over `n` samples,
/// `sum_{i=1..n} n!/(n-i)!`. `None` on overflow.
pub fn pes_size(n: u32) -> Option<u128> {
    let mut total: u128 = 0;
    let mut falling: u128 = 1;
    for i in 0..n {
        falling = falling.checked_mul(u128::from(n - i))?;
        total = total.checked_add(falling)?;
    }
    Some(total)
}
