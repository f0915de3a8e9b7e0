//! Finite-state generators, event attributes and natural projections.
//!
//! A [`Generator`] is a deterministic automaton with a partial transition
//! function and a set of marker states. States are dense indices; a generator
//! with zero states denotes the empty language.

mod ops;

pub(crate) use ops::{quotient, silent_closure};

pub use ops::{
    canonical, coreachable_states, determinize, is_nonblocking, language_equal, minimize,
    minimize_with_partition, project_generator, project_string, reachable_states, restrict,
    selfloop, shortest_path, sync, sync_product, sync_product_within, trim, Determinized,
    LanguageDiff, Nonblocking, Product,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type EventId = u32;
pub type StateId = usize;
pub type EventSet = BTreeSet<EventId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventAttrs {
    pub controllable: bool,
    pub observable: bool,
}

/// Global registry of event attributes. The controllable/uncontrollable and
/// observable/unobservable classes are partitions of the registered alphabet
/// by construction: every registered event carries exactly one pair of flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTable {
    entries: BTreeMap<EventId, EventAttrs>,
}

impl EventTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an event. Re-registering with identical flags is a no-op.
    pub fn insert(&mut self, event: EventId, attrs: EventAttrs) -> Result<()> {
        match self.entries.get(&event) {
            Some(existing) if *existing != attrs => Err(Error::ConflictingAttributes { event }),
            _ => {
                self.entries.insert(event, attrs);
                Ok(())
            }
        }
    }

    pub fn merge(&mut self, other: &EventTable) -> Result<()> {
        for (&event, &attrs) in &other.entries {
            self.insert(event, attrs)?;
        }
        Ok(())
    }

    pub fn get(&self, event: EventId) -> Option<EventAttrs> {
        self.entries.get(&event).copied()
    }

    pub fn contains(&self, event: EventId) -> bool {
        self.entries.contains_key(&event)
    }

    pub fn is_controllable(&self, event: EventId) -> bool {
        self.get(event).is_some_and(|a| a.controllable)
    }

    pub fn is_observable(&self, event: EventId) -> bool {
        self.get(event).is_none_or(|a| a.observable)
    }

    /// Marks `event` unobservable, keeping its controllability.
    pub fn hide(&mut self, event: EventId) -> Result<()> {
        match self.entries.get_mut(&event) {
            Some(attrs) => {
                attrs.observable = false;
                Ok(())
            }
            None => Err(Error::Precondition(format!(
                "cannot hide unregistered event {event}"
            ))),
        }
    }

    pub fn events(&self) -> impl Iterator<Item = (EventId, EventAttrs)> + '_ {
        self.entries.iter().map(|(&e, &a)| (e, a))
    }

    pub fn controllable(&self) -> EventSet {
        self.filter(|a| a.controllable)
    }

    pub fn uncontrollable(&self) -> EventSet {
        self.filter(|a| !a.controllable)
    }

    pub fn observable(&self) -> EventSet {
        self.filter(|a| a.observable)
    }

    pub fn unobservable(&self) -> EventSet {
        self.filter(|a| !a.observable)
    }

    fn filter(&self, pred: impl Fn(&EventAttrs) -> bool) -> EventSet {
        self.entries
            .iter()
            .filter(|(_, a)| pred(a))
            .map(|(&e, _)| e)
            .collect()
    }

    /// The observation mask induced by the observable flags.
    pub fn mask(&self) -> ObservationMask {
        ObservationMask::from_unobservable(self.unobservable())
    }

    /// Fails if some event of `g` is not registered.
    pub fn check_covers(&self, g: &Generator) -> Result<()> {
        match g.alphabet().iter().find(|e| !self.contains(**e)) {
            Some(&event) => Err(Error::UnregisteredEvent {
                generator: g.name().to_string(),
                event,
            }),
            None => Ok(()),
        }
    }
}

/// Natural projection onto the observable events.
///
/// Stored as the set of erased events so that one mask can be applied to
/// generators over different sub-alphabets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservationMask {
    hidden: EventSet,
}

impl ObservationMask {
    /// Every event is observable.
    pub fn full() -> Self {
        Self::default()
    }

    pub fn from_unobservable(hidden: impl IntoIterator<Item = EventId>) -> Self {
        Self {
            hidden: hidden.into_iter().collect(),
        }
    }

    /// Mask keeping exactly `observable` within `context`.
    pub fn from_observable(context: &EventSet, observable: &EventSet) -> Self {
        Self {
            hidden: context.difference(observable).copied().collect(),
        }
    }

    pub fn is_observable(&self, event: EventId) -> bool {
        !self.hidden.contains(&event)
    }

    pub fn unobservable(&self) -> &EventSet {
        &self.hidden
    }

    pub fn observable_in(&self, context: &EventSet) -> EventSet {
        context.difference(&self.hidden).copied().collect()
    }

    pub fn is_full(&self) -> bool {
        self.hidden.is_empty()
    }

    pub fn project(&self, s: &[EventId]) -> Vec<EventId> {
        project_string(s, self)
    }
}

/// Deterministic finite generator with a partial transition function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    name: String,
    initial: StateId,
    marked: Vec<bool>,
    alphabet: EventSet,
    // Outgoing transitions of each state, sorted by event.
    delta: Vec<Vec<(EventId, StateId)>>,
    labels: Option<Vec<String>>,
}

impl Generator {
    /// Builds and validates a generator.
    pub fn new(
        name: impl Into<String>,
        state_count: usize,
        initial: StateId,
        markers: impl IntoIterator<Item = StateId>,
        alphabet: impl IntoIterator<Item = EventId>,
        transitions: impl IntoIterator<Item = (StateId, EventId, StateId)>,
    ) -> Result<Self> {
        let name = name.into();
        let alphabet: EventSet = alphabet.into_iter().collect();
        if state_count > 0 && initial >= state_count {
            return Err(Error::malformed(
                &name,
                format!("initial state {initial} out of range"),
            ));
        }
        let mut marked = vec![false; state_count];
        for m in markers {
            if m >= state_count {
                return Err(Error::malformed(&name, format!("marker {m} out of range")));
            }
            marked[m] = true;
        }
        let mut delta: Vec<Vec<(EventId, StateId)>> = vec![Vec::new(); state_count];
        for (s, e, t) in transitions {
            if s >= state_count || t >= state_count {
                return Err(Error::malformed(
                    &name,
                    format!("transition [{s},{e},{t}] has an endpoint out of range"),
                ));
            }
            if !alphabet.contains(&e) {
                return Err(Error::malformed(
                    &name,
                    format!("transition [{s},{e},{t}] uses event {e} outside the alphabet"),
                ));
            }
            delta[s].push((e, t));
        }
        for (s, out) in delta.iter_mut().enumerate() {
            out.sort_unstable();
            if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::malformed(
                    &name,
                    format!("state {s} has two transitions on event {}", w[0].0),
                ));
            }
        }
        Ok(Self {
            name,
            initial: if state_count == 0 { 0 } else { initial },
            marked,
            alphabet,
            delta,
            labels: None,
        })
    }

    /// The generator of the empty language over `alphabet`.
    pub fn empty(name: impl Into<String>, alphabet: EventSet) -> Self {
        Self {
            name: name.into(),
            initial: 0,
            marked: Vec::new(),
            alphabet,
            delta: Vec::new(),
            labels: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn state_count(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// `None` for the empty generator.
    pub fn initial(&self) -> Option<StateId> {
        (!self.is_empty()).then_some(self.initial)
    }

    pub fn is_marked(&self, q: StateId) -> bool {
        self.marked[q]
    }

    pub fn markers(&self) -> impl Iterator<Item = StateId> + '_ {
        self.marked
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(q, _)| q)
    }

    pub fn alphabet(&self) -> &EventSet {
        &self.alphabet
    }

    pub fn next(&self, q: StateId, e: EventId) -> Option<StateId> {
        let out = &self.delta[q];
        out.binary_search_by_key(&e, |&(ev, _)| ev)
            .ok()
            .map(|i| out[i].1)
    }

    pub fn outgoing(&self, q: StateId) -> &[(EventId, StateId)] {
        &self.delta[q]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(s, out)| out.iter().map(move |&(e, t)| (s, e, t)))
    }

    pub fn transition_count(&self) -> usize {
        self.delta.iter().map(Vec::len).sum()
    }

    /// Runs `s` from the initial state.
    pub fn run(&self, s: &[EventId]) -> Option<StateId> {
        let mut q = self.initial()?;
        for &e in s {
            q = self.next(q, e)?;
        }
        Some(q)
    }

    pub fn accepts_closed(&self, s: &[EventId]) -> bool {
        self.run(s).is_some()
    }

    pub fn accepts_marked(&self, s: &[EventId]) -> bool {
        self.run(s).is_some_and(|q| self.marked[q])
    }

    /// Optional per-state provenance labels (debugging and DOT only).
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        if labels.len() == self.state_count() {
            self.labels = Some(labels);
        }
        self
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Replaces the alphabet; every used event must stay in it.
    pub fn with_alphabet(mut self, alphabet: EventSet) -> Result<Self> {
        if let Some((s, e, _)) = self.transitions().find(|(_, e, _)| !alphabet.contains(e)) {
            return Err(Error::malformed(
                &self.name,
                format!("event {e} used at state {s} is missing from the new alphabet"),
            ));
        }
        self.alphabet = alphabet;
        Ok(self)
    }

    /// Events that actually label a transition.
    pub fn used_events(&self) -> EventSet {
        self.delta.iter().flatten().map(|&(e, _)| e).collect()
    }
}

/// Incremental construction of generators inside the crate.
pub(crate) struct Builder {
    name: String,
    alphabet: EventSet,
    marked: Vec<bool>,
    delta: Vec<Vec<(EventId, StateId)>>,
}

impl Builder {
    pub(crate) fn new(name: impl Into<String>, alphabet: EventSet) -> Self {
        Self {
            name: name.into(),
            alphabet,
            marked: Vec::new(),
            delta: Vec::new(),
        }
    }

    pub(crate) fn add_state(&mut self, marked: bool) -> StateId {
        self.marked.push(marked);
        self.delta.push(Vec::new());
        self.delta.len() - 1
    }

    pub(crate) fn add_transition(&mut self, s: StateId, e: EventId, t: StateId) {
        self.delta[s].push((e, t));
    }

    /// State 0 becomes the initial state.
    pub(crate) fn finish(mut self) -> Generator {
        for out in &mut self.delta {
            out.sort_unstable();
            out.dedup_by_key(|p| p.0);
        }
        Generator {
            name: self.name,
            initial: 0,
            marked: self.marked,
            alphabet: self.alphabet,
            delta: self.delta,
            labels: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nondeterminism() {
        let err = Generator::new("g", 2, 0, [0], [1], [(0, 1, 0), (0, 1, 1)]).unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));
    }

    #[test]
    fn rejects_out_of_range_and_foreign_events() {
        assert!(Generator::new("g", 1, 1, [], [1], []).is_err());
        assert!(Generator::new("g", 1, 0, [3], [1], []).is_err());
        assert!(Generator::new("g", 1, 0, [], [1], [(0, 1, 2)]).is_err());
        assert!(Generator::new("g", 1, 0, [], [1], [(0, 2, 0)]).is_err());
    }

    #[test]
    fn event_table_rejects_conflicts() {
        let mut t = EventTable::new();
        let a = EventAttrs {
            controllable: true,
            observable: true,
        };
        t.insert(11, a).unwrap();
        t.insert(11, a).unwrap();
        let err = t
            .insert(
                11,
                EventAttrs {
                    controllable: false,
                    observable: true,
                },
            )
            .unwrap_err();
        assert!(matches!(err, Error::ConflictingAttributes { event: 11 }));
    }

    #[test]
    fn event_classes_partition_the_table() {
        let mut t = EventTable::new();
        for e in 10..20u32 {
            t.insert(
                e,
                EventAttrs {
                    controllable: e % 2 == 1,
                    observable: e % 3 != 0,
                },
            )
            .unwrap();
        }
        let all: EventSet = t.events().map(|(e, _)| e).collect();
        let (c, uc) = (t.controllable(), t.uncontrollable());
        assert!(c.is_disjoint(&uc));
        assert_eq!(&c | &uc, all);
        let (o, uo) = (t.observable(), t.unobservable());
        assert!(o.is_disjoint(&uo));
        assert_eq!(&o | &uo, all);
    }
}
