//! Name-keyed registries so operators and decision methods can be picked
//! from configuration or the command line.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::airsim::Case;
use crate::decision::{crd, mvd, CrdDecision, DecisionError, DecisionOutcome, SpeedGraph};
use crate::evidence::{Event, SetEvent};
use crate::pattern::{
    DecisionOperator, Intersection, MaxMass, PatternError, PatternOperator, Pignistic,
    RightIntersection, Union,
};
use crate::rgs::GraphEvent;
use crate::rps::PermEvent;

/// Pattern and decision operators available for one event algebra.
pub struct OperatorRegistry<E: Event> {
    patterns: BTreeMap<&'static str, Arc<dyn PatternOperator<E>>>,
    decisions: BTreeMap<&'static str, Arc<dyn DecisionOperator<E>>>,
}

impl<E: Event> Default for OperatorRegistry<E> {
    fn default() -> Self {
        Self {
            patterns: BTreeMap::new(),
            decisions: BTreeMap::new(),
        }
    }
}

impl<E: Event> OperatorRegistry<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers under the operator's own name, replacing any previous entry.
    pub fn with_pattern(mut self, op: impl PatternOperator<E> + 'static) -> Self {
        self.patterns.insert(op.name(), Arc::new(op));
        self
    }

    pub fn with_decision(mut self, op: impl DecisionOperator<E> + 'static) -> Self {
        self.decisions.insert(op.name(), Arc::new(op));
        self
    }

    pub fn pattern(&self, name: &str) -> Result<Arc<dyn PatternOperator<E>>, PatternError> {
        self.patterns
            .get(name)
            .cloned()
            .ok_or_else(|| PatternError::UnknownOperator {
                kind: "pattern",
                name: name.to_owned(),
            })
    }

    pub fn decision(&self, name: &str) -> Result<Arc<dyn DecisionOperator<E>>, PatternError> {
        self.decisions
            .get(name)
            .cloned()
            .ok_or_else(|| PatternError::UnknownOperator {
                kind: "decision",
                name: name.to_owned(),
            })
    }

    pub fn pattern_names(&self) -> Vec<&'static str> {
        self.patterns.keys().copied().collect()
    }

    pub fn decision_names(&self) -> Vec<&'static str> {
        self.decisions.keys().copied().collect()
    }
}

pub fn set_operators() -> OperatorRegistry<SetEvent> {
    OperatorRegistry::new()
        .with_pattern(Intersection)
        .with_pattern(Union)
        .with_decision(Pignistic)
        .with_decision(MaxMass)
}

pub fn perm_operators() -> OperatorRegistry<PermEvent> {
    OperatorRegistry::new()
        .with_pattern(RightIntersection)
        .with_decision(MaxMass)
}

pub fn graph_operators() -> OperatorRegistry<GraphEvent> {
    OperatorRegistry::new()
        .with_pattern(SpeedGraph)
        .with_decision(MaxMass)
        .with_decision(CrdDecision)
}

/// A whole-case ranking procedure.
pub trait DecisionMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, case: &Case) -> Result<DecisionOutcome, DecisionError>;
}

pub struct MeanVelocity;

impl DecisionMethod for MeanVelocity {
    fn name(&self) -> &'static str {
        "mvd"
    }

    fn run(&self, case: &Case) -> Result<DecisionOutcome, DecisionError> {
        mvd(case)
    }
}

pub struct ConflictResolution;

impl DecisionMethod for ConflictResolution {
    fn name(&self) -> &'static str {
        "crd"
    }

    fn run(&self, case: &Case) -> Result<DecisionOutcome, DecisionError> {
        crd(case)
    }
}

#[derive(Clone)]
pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Arc<dyn DecisionMethod>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    pub fn with(mut self, method: impl DecisionMethod + 'static) -> Self {
        self.methods.insert(method.name(), Arc::new(method));
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn DecisionMethod>> {
        self.methods.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::empty().with(MeanVelocity).with(ConflictResolution)
    }
}
