//! Controllability, relative observability and supremal sublanguage synthesis.
//!
//! All fixpoints work on a recognizer that refines the plant: every state of
//! the working structure remembers the state of `plant || spec` it sits on,
//! so deleting a state or transition removes exactly the strings that must go.

use crate::automata::quotient;
use crate::automata::{
    self, minimize, restrict, sync_product, trim, EventId, EventSet, EventTable, Generator,
    ObservationMask, StateId,
};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, HashMap, VecDeque};

#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub plant: Generator,
    pub spec: Generator,
    pub mask: ObservationMask,
    pub table: EventTable,
}

impl SynthesisProblem {
    pub fn new(
        plant: Generator,
        spec: Generator,
        mask: ObservationMask,
        table: EventTable,
    ) -> Result<Self> {
        if let Some(e) = spec.alphabet().difference(plant.alphabet()).next() {
            return Err(Error::Precondition(format!(
                "specification `{}` uses event {e} outside the alphabet of plant `{}`",
                spec.name(),
                plant.name()
            )));
        }
        table.check_covers(&plant)?;
        Ok(Self {
            plant,
            spec,
            mask,
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityWitness {
    pub string: Vec<EventId>,
    pub event: EventId,
}

/// Verdict of [`is_controllable`]; `violation` is a shortest `(s, σ)` with
/// `s` in the closure of K, `sσ` in L(G) but not in the closure of K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controllability {
    pub violation: Option<ControllabilityWitness>,
}

impl Controllability {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn is_controllable(
    k: &Generator,
    plant: &Generator,
    table: &EventTable,
) -> Result<Controllability> {
    let (Some(k0), Some(g0)) = (k.initial(), plant.initial()) else {
        if k.is_empty() {
            return Ok(Controllability { violation: None });
        }
        return Err(Error::PropertyViolated {
            property: format!("containment of `{}` in L({})", k.name(), plant.name()),
            witness: Vec::new(),
        });
    };
    type Pair = (StateId, StateId);
    let mut parent: HashMap<Pair, Option<(Pair, EventId)>> = HashMap::new();
    parent.insert((k0, g0), None);
    let mut queue = VecDeque::from([(k0, g0)]);
    let path_to = |parent: &HashMap<_, Option<(_, EventId)>>, mut cur: (StateId, StateId)| {
        let mut path = Vec::new();
        while let Some(Some((p, e))) = parent.get(&cur) {
            path.push(*e);
            cur = *p;
        }
        path.reverse();
        path
    };
    while let Some((x, q)) = queue.pop_front() {
        for &(e, t) in k.outgoing(x) {
            let Some(qt) = plant.next(q, e) else {
                let mut witness = path_to(&parent, (x, q));
                witness.push(e);
                return Err(Error::PropertyViolated {
                    property: format!("containment of `{}` in L({})", k.name(), plant.name()),
                    witness,
                });
            };
            if let std::collections::hash_map::Entry::Vacant(v) = parent.entry((t, qt)) {
                v.insert(Some(((x, q), e)));
                queue.push_back((t, qt));
            }
        }
        for &(e, _) in plant.outgoing(q) {
            if !table.is_controllable(e) && k.next(x, e).is_none() {
                return Ok(Controllability {
                    violation: Some(ControllabilityWitness {
                        string: path_to(&parent, (x, q)),
                        event: e,
                    }),
                });
            }
        }
    }
    Ok(Controllability { violation: None })
}

/// A working recognizer whose states project onto states of `plant || spec`
/// (`base`) and hence onto plant states.
#[derive(Clone)]
struct Refining {
    g: Generator,
    base: Vec<StateId>,
    plant_state: Vec<StateId>,
}

/// Reachable and coreachable states among `keep`.
fn trim_mask(g: &Generator, keep: &[bool]) -> Vec<bool> {
    let n = g.state_count();
    let mut reach = vec![false; n];
    if let Some(q0) = g.initial().filter(|&q| keep[q]) {
        reach[q0] = true;
        let mut stack = vec![q0];
        while let Some(q) = stack.pop() {
            for &(_, t) in g.outgoing(q) {
                if keep[t] && !reach[t] {
                    reach[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, _, t) in g.transitions() {
        if reach[s] && reach[t] {
            preds[t].push(s);
        }
    }
    let mut co = vec![false; n];
    let mut stack: Vec<StateId> = (0..n).filter(|&q| reach[q] && g.is_marked(q)).collect();
    for &q in &stack {
        co[q] = true;
    }
    while let Some(q) = stack.pop() {
        for &p in &preds[q] {
            if !co[p] {
                co[p] = true;
                stack.push(p);
            }
        }
    }
    co
}

/// Deletes states until the surviving structure is trim and controllable.
fn enforce_controllable(
    r: &Refining,
    plant: &Generator,
    table: &EventTable,
    mut keep: Vec<bool>,
) -> Vec<bool> {
    loop {
        keep = trim_mask(&r.g, &keep);
        let mut changed = false;
        for x in 0..r.g.state_count() {
            if !keep[x] {
                continue;
            }
            let q = r.plant_state[x];
            let bad = plant.outgoing(q).iter().any(|&(e, _)| {
                !table.is_controllable(e) && r.g.next(x, e).is_none_or(|t| !keep[t])
            });
            if bad {
                keep[x] = false;
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

/// `plant || spec` with its closed-behaviour ambient recognizer: the trim
/// product recognizes C = E || L_m(G) and refines the plant.
fn ambient_structure(p: &SynthesisProblem) -> Refining {
    let prod = sync_product(&[&p.plant, &p.spec]);
    let reach = automata::reachable_states(&prod.generator);
    let co = automata::coreachable_states(&prod.generator);
    let keep: Vec<bool> = reach.iter().zip(&co).map(|(a, b)| *a && *b).collect();
    let (g, map) = restrict(&prod.generator, &keep);
    let mut plant_state = vec![0; g.state_count()];
    for (old, new) in map.iter().enumerate() {
        if let Some(q) = new {
            plant_state[*q] = prod.components[old][0];
        }
    }
    Refining {
        g: g.without_labels(),
        base: (0..plant_state.len()).collect(),
        plant_state,
    }
}

/// Restricts `r` to `keep` and merges states that sit on the same base state
/// and have the same future.
fn compact(r: &Refining, keep: &[bool]) -> Refining {
    let (g, map) = restrict(&r.g, keep);
    let mut base = vec![0; g.state_count()];
    for (old, new) in map.iter().enumerate() {
        if let Some(q) = new {
            base[*q] = old;
        }
    }
    let (g, qmap) = quotient(&g, &base.iter().map(|&o| r.base[o]).collect::<Vec<_>>());
    let mut merged = Refining {
        base: vec![0; g.state_count()],
        plant_state: vec![0; g.state_count()],
        g,
    };
    for (old, new) in qmap.iter().enumerate() {
        if let Some(q) = new {
            merged.base[*q] = r.base[base[old]];
            merged.plant_state[*q] = r.plant_state[base[old]];
        }
    }
    merged
}

fn supcon_structure(p: &SynthesisProblem) -> Refining {
    let base = ambient_structure(p);
    let keep = enforce_controllable(&base, &p.plant, &p.table, vec![true; base.g.state_count()]);
    compact(&base, &keep)
}

fn finish(r: &Refining, name: String) -> Generator {
    minimize(&r.g).with_name(name)
}

/// Supremal controllable sublanguage of `E || L_m(G)` with respect to `L(G)`.
pub fn supcon(p: &SynthesisProblem) -> Generator {
    finish(
        &supcon_structure(p),
        format!("supcon({},{})", p.plant.name(), p.spec.name()),
    )
}

/// A lookalike pair `(s, s')` with `P(s) = P(s')` that breaks relative
/// observability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelObsWitness {
    pub s: Vec<EventId>,
    pub s_prime: Vec<EventId>,
    pub kind: RelObsKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelObsKind {
    /// `sσ` in the closure of K, `s'σ` in L(G) but not in the closure of K.
    Transition(EventId),
    /// `s` in K, `s'` in the closure of C and in L_m(G) but not in K.
    Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeObservability {
    pub violation: Option<RelObsWitness>,
}

impl RelativeObservability {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Clone, Copy)]
enum TwinMove {
    Both(EventId),
    Left(EventId),
    Right(EventId),
}

/// Decides whether K (recognized by `k`) is observable relative to the
/// closed ambient language recognized by `ambient`, with respect to `plant`
/// and `mask`. Explores pairs of lookalike strings: observable events move
/// both sides, unobservable events move one side at a time.
pub fn check_relative_observability(
    k: &Generator,
    ambient: &Generator,
    plant: &Generator,
    mask: &ObservationMask,
) -> RelativeObservability {
    let k = trim(k);
    let ambient = trim(ambient);
    let (Some(k0), Some(c0), Some(g0)) = (k.initial(), ambient.initial(), plant.initial()) else {
        return RelativeObservability { violation: None };
    };
    // (K state of s, ambient state of s', plant state of s', K state of s' if any)
    type Twin = (StateId, StateId, StateId, Option<StateId>);
    let start: Twin = (k0, c0, g0, Some(k0));
    let mut parent: HashMap<Twin, Option<(Twin, TwinMove)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);

    let unwind = |parent: &HashMap<Twin, Option<(Twin, TwinMove)>>, mut cur: Twin| {
        let (mut s, mut sp) = (Vec::new(), Vec::new());
        while let Some(Some((prev, mv))) = parent.get(&cur) {
            match *mv {
                TwinMove::Both(e) => {
                    s.push(e);
                    sp.push(e);
                }
                TwinMove::Left(e) => s.push(e),
                TwinMove::Right(e) => sp.push(e),
            }
            cur = *prev;
        }
        s.reverse();
        sp.reverse();
        (s, sp)
    };

    while let Some(node) = queue.pop_front() {
        let (x, c, q, y) = node;
        for &(e, _) in k.outgoing(x) {
            let eligible = plant.next(q, e).is_some();
            let in_k = y.and_then(|y| k.next(y, e)).is_some();
            if eligible && !in_k {
                let (s, s_prime) = unwind(&parent, node);
                return RelativeObservability {
                    violation: Some(RelObsWitness {
                        s,
                        s_prime,
                        kind: RelObsKind::Transition(e),
                    }),
                };
            }
        }
        if k.is_marked(x) && plant.is_marked(q) && !y.is_some_and(|y| k.is_marked(y)) {
            let (s, s_prime) = unwind(&parent, node);
            return RelativeObservability {
                violation: Some(RelObsWitness {
                    s,
                    s_prime,
                    kind: RelObsKind::Marking,
                }),
            };
        }

        let mut push = |next: Twin, mv: TwinMove, queue: &mut VecDeque<Twin>| {
            if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(next) {
                v.insert(Some((node, mv)));
                queue.push_back(next);
            }
        };
        for &(e, xt) in k.outgoing(x) {
            if mask.is_observable(e) {
                let (Some(ct), Some(qt)) = (ambient.next(c, e), plant.next(q, e)) else {
                    continue;
                };
                push(
                    (xt, ct, qt, y.and_then(|y| k.next(y, e))),
                    TwinMove::Both(e),
                    &mut queue,
                );
            } else {
                push((xt, c, q, y), TwinMove::Left(e), &mut queue);
            }
        }
        for &(e, ct) in ambient.outgoing(c) {
            if mask.is_observable(e) {
                continue;
            }
            let Some(qt) = plant.next(q, e) else { continue };
            push(
                (x, ct, qt, y.and_then(|y| k.next(y, e))),
                TwinMove::Right(e),
                &mut queue,
            );
        }
    }
    RelativeObservability { violation: None }
}

type Lookalike = (StateId, Option<StateId>);

/// The working recognizer refined by the set of lookalike positions: each
/// state pairs a state of `k` with the set of (ambient state, K state or
/// none) reachable by strings with the same projection.
struct LookalikeRefinement {
    g: Generator,
    k_state: Vec<StateId>,
    class: Vec<usize>,
    sets: Vec<Vec<Lookalike>>,
}

fn refine_by_lookalikes(
    k: &Generator,
    ambient: &Generator,
    ambient_of_k: &[StateId],
    mask: &ObservationMask,
) -> LookalikeRefinement {
    let closure = |seed: Vec<Lookalike>| -> Vec<Lookalike> {
        let mut seen: std::collections::HashSet<Lookalike> = seed.iter().copied().collect();
        let mut stack = seed;
        let mut out = stack.clone();
        while let Some((a, y)) = stack.pop() {
            for &(e, at) in ambient.outgoing(a) {
                if mask.is_observable(e) {
                    continue;
                }
                let next = (at, y.and_then(|y| k.next(y, e)));
                if seen.insert(next) {
                    stack.push(next);
                    out.push(next);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    };

    let k0 = k.initial().expect("refinement of an empty recognizer");
    let mut sets: Vec<Vec<Lookalike>> = Vec::new();
    let mut set_index: HashMap<Vec<Lookalike>, usize> = HashMap::new();
    let mut intern = |set: Vec<Lookalike>, sets: &mut Vec<Vec<Lookalike>>| -> usize {
        if let Some(&i) = set_index.get(&set) {
            return i;
        }
        sets.push(set.clone());
        set_index.insert(set, sets.len() - 1);
        sets.len() - 1
    };
    let w0 = intern(closure(vec![(ambient_of_k[k0], Some(k0))]), &mut sets);

    let mut step_memo: HashMap<(usize, EventId), usize> = HashMap::new();
    let mut b = automata::Builder::new(k.name(), k.alphabet().clone());
    let mut index: HashMap<(StateId, usize), StateId> = HashMap::new();
    let mut nodes: Vec<(StateId, usize)> = vec![(k0, w0)];
    index.insert((k0, w0), 0);
    b.add_state(k.is_marked(k0));
    let mut cursor = 0;
    while cursor < nodes.len() {
        let (x, w) = nodes[cursor];
        for &(e, xt) in k.outgoing(x) {
            let wt = if mask.is_observable(e) {
                match step_memo.get(&(w, e)) {
                    Some(&wt) => wt,
                    None => {
                        let moved: Vec<Lookalike> = sets[w]
                            .iter()
                            .filter_map(|&(a, y)| {
                                ambient
                                    .next(a, e)
                                    .map(|at| (at, y.and_then(|y| k.next(y, e))))
                            })
                            .collect();
                        let wt = intern(closure(moved), &mut sets);
                        step_memo.insert((w, e), wt);
                        wt
                    }
                }
            } else {
                w
            };
            let target = *index.entry((xt, wt)).or_insert_with(|| {
                nodes.push((xt, wt));
                b.add_state(k.is_marked(xt))
            });
            b.add_transition(cursor, e, target);
        }
        cursor += 1;
    }
    LookalikeRefinement {
        g: b.finish(),
        k_state: nodes.iter().map(|n| n.0).collect(),
        class: nodes.iter().map(|n| n.1).collect(),
        sets,
    }
}

/// The ambient language C against which lookalike strings are judged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Ambient {
    /// C = E || L_m(G).
    Specification,
    /// C = the supremal controllable sublanguage of E || L_m(G).
    #[default]
    Controllable,
}

/// Supremal controllable and C-observable sublanguage of `E || L_m(G)` with
/// the default ambient.
pub fn sup_rco(p: &SynthesisProblem) -> Generator {
    sup_rco_with(p, Ambient::default())
}

/// Supremal controllable and C-observable sublanguage of `E || L_m(G)`; the
/// ambient C is held fixed throughout the iteration.
pub fn sup_rco_with(p: &SynthesisProblem, choice: Ambient) -> Generator {
    let name = format!("suprco({},{})", p.plant.name(), p.spec.name());
    let mut current = supcon_structure(p);
    let ambient = match choice {
        Ambient::Specification => ambient_structure(p),
        Ambient::Controllable => current.clone(),
    };
    // ambient states are determined by the product state underneath
    let mut by_base: HashMap<StateId, StateId> = HashMap::new();
    for (a, &b) in ambient.base.iter().enumerate() {
        by_base.insert(b, a);
    }
    loop {
        if current.g.is_empty() {
            return Generator::empty(name, p.plant.alphabet().clone());
        }
        let ambient_of_k: Vec<StateId> = current.base.iter().map(|b| by_base[b]).collect();
        let refined = refine_by_lookalikes(&current.g, &ambient.g, &ambient_of_k, &p.mask);
        let k = &current.g;
        let r = &refined.g;
        let mut b = automata::Builder::new(r.name(), r.alphabet().clone());
        let mut changed = false;
        for x in 0..r.state_count() {
            let set = &refined.sets[refined.class[x]];
            let mut marked = r.is_marked(x);
            if marked
                && set.iter().any(|&(a, y)| {
                    p.plant.is_marked(ambient.plant_state[a]) && !y.is_some_and(|y| k.is_marked(y))
                })
            {
                marked = false;
                changed = true;
            }
            b.add_state(marked);
        }
        for x in 0..r.state_count() {
            let set = &refined.sets[refined.class[x]];
            for &(e, t) in r.outgoing(x) {
                let violates = set.iter().any(|&(a, y)| {
                    p.plant.next(ambient.plant_state[a], e).is_some()
                        && y.and_then(|y| k.next(y, e)).is_none()
                });
                if violates {
                    changed = true;
                } else {
                    b.add_transition(x, e, t);
                }
            }
        }
        if !changed {
            return finish(&current, name);
        }
        let pruned = Refining {
            g: b.finish(),
            base: refined.k_state.iter().map(|&kx| current.base[kx]).collect(),
            plant_state: refined
                .k_state
                .iter()
                .map(|&kx| current.plant_state[kx])
                .collect(),
        };
        let keep = enforce_controllable(
            &pruned,
            &p.plant,
            &p.table,
            vec![true; pruned.g.state_count()],
        );
        current = compact(&pruned, &keep);
    }
}

/// Supremal controllable and normal sublanguage of `E || L_m(G)`: the
/// closure is normal with respect to L(G) and the language itself with
/// respect to L_m(G). Only used as a comparator.
pub fn sup_cn(p: &SynthesisProblem) -> Generator {
    let name = format!("supcn({},{})", p.plant.name(), p.spec.name());
    let mut current = supcon_structure(p);
    loop {
        if current.g.is_empty() {
            return Generator::empty(name, p.plant.alphabet().clone());
        }
        let refined = refine_by_lookalikes(&current.g, &p.plant, &current.plant_state, &p.mask);
        let k = &current.g;
        let r = &refined.g;
        let keep: Vec<bool> = (0..r.state_count())
            .map(|x| {
                refined.sets[refined.class[x]]
                    .iter()
                    .all(|(_, y)| y.is_some())
            })
            .collect();
        let mut b = automata::Builder::new(r.name(), r.alphabet().clone());
        let mut unmarked = false;
        for x in 0..r.state_count() {
            let lookalike_unmarked = refined.sets[refined.class[x]]
                .iter()
                .any(|&(q, y)| p.plant.is_marked(q) && !y.is_some_and(|y| k.is_marked(y)));
            let marked = r.is_marked(x) && !lookalike_unmarked;
            unmarked |= marked != r.is_marked(x);
            b.add_state(marked);
        }
        if !unmarked && keep.iter().all(|&k| k) {
            return finish(&current, name);
        }
        for (x, e, t) in r.transitions() {
            b.add_transition(x, e, t);
        }
        let pruned = Refining {
            base: refined.k_state.iter().map(|&kx| current.base[kx]).collect(),
            plant_state: refined
                .k_state
                .iter()
                .map(|&kx| current.plant_state[kx])
                .collect(),
            g: b.finish(),
        };
        let keep = enforce_controllable(&pruned, &p.plant, &p.table, keep);
        current = compact(&pruned, &keep);
    }
}

/// Partial-observation supervisor realized on uncertainty sets.
#[derive(Debug, Clone)]
pub struct PoSupervisor {
    pub automaton: Generator,
    /// Controllable events eligible in the plant but disabled, per state.
    pub disabled: Vec<EventSet>,
    /// The states of the K recognizer each supervisor state stands for.
    pub uncertainty: Vec<Vec<StateId>>,
}

impl PoSupervisor {
    pub fn state_count(&self) -> usize {
        self.automaton.state_count()
    }

    /// Size of the minimal generator with the same closed and marked languages.
    pub fn minimized_size(&self) -> usize {
        minimize(&self.automaton).state_count()
    }

    /// Wraps an existing generator, recomputing the disabled map against `plant`.
    pub fn from_generator(automaton: Generator, plant: &Generator, table: &EventTable) -> Self {
        let disabled = disabled_map(&automaton, plant, table);
        let uncertainty = (0..automaton.state_count()).map(|x| vec![x]).collect();
        Self {
            automaton,
            disabled,
            uncertainty,
        }
    }
}

fn disabled_map(sup: &Generator, plant: &Generator, table: &EventTable) -> Vec<EventSet> {
    let mut disabled = vec![EventSet::new(); sup.state_count()];
    let prod = sync_product(&[sup, plant]);
    for comp in &prod.components {
        let (x, q) = (comp[0], comp[1]);
        for &(e, _) in plant.outgoing(q) {
            let participates = sup.alphabet().contains(&e);
            if participates && table.is_controllable(e) && sup.next(x, e).is_none() {
                disabled[x].insert(e);
            }
        }
    }
    disabled
}

/// Realizes a feasible supervisor for K by the subset construction over
/// unobservable events. Unobservable events enabled somewhere in an
/// uncertainty set become selfloops; plant events outside K's alphabet are
/// selflooped everywhere.
pub fn build_po_supervisor(
    k: &Generator,
    plant: &Generator,
    mask: &ObservationMask,
    table: &EventTable,
) -> Result<PoSupervisor> {
    let k = minimize(&trim(k));
    let ctrl = is_controllable(&k, plant, table)?;
    if let Some(w) = ctrl.violation {
        let mut witness = w.string;
        witness.push(w.event);
        return Err(Error::PropertyViolated {
            property: format!("controllability of `{}`", k.name()),
            witness,
        });
    }
    let obs = check_relative_observability(&k, &k, plant, mask);
    if let Some(w) = obs.violation {
        return Err(Error::PropertyViolated {
            property: format!(
                "observability of `{}` (lookalike {:?})",
                k.name(),
                w.s_prime
            ),
            witness: w.s,
        });
    }
    let alphabet: EventSet = plant.alphabet().union(k.alphabet()).copied().collect();
    if k.is_empty() {
        return Ok(PoSupervisor {
            automaton: Generator::empty(k.name(), alphabet),
            disabled: Vec::new(),
            uncertainty: Vec::new(),
        });
    }
    let det = automata::determinize(&k, &|e| !mask.is_observable(e));
    let d = &det.generator;
    let private: EventSet = plant.alphabet().difference(k.alphabet()).copied().collect();
    let mut b = automata::Builder::new(k.name(), alphabet);
    for x in 0..d.state_count() {
        b.add_state(d.is_marked(x));
    }
    for x in 0..d.state_count() {
        for &(e, t) in d.outgoing(x) {
            b.add_transition(x, e, t);
        }
        let mut loops: BTreeMap<EventId, ()> = BTreeMap::new();
        for &q in &det.subsets[x] {
            for &(e, _) in k.outgoing(q) {
                if !mask.is_observable(e) {
                    loops.insert(e, ());
                }
            }
        }
        for &e in loops.keys().chain(private.iter()) {
            b.add_transition(x, e, x);
        }
    }
    let labels = d.labels().map(|l| l.to_vec());
    let mut automaton = b.finish();
    if let Some(l) = labels {
        automaton = automaton.with_labels(l);
    }
    let closed_loop = automata::sync(&[plant, &automaton]);
    let diff = automata::language_equal(&closed_loop, &k);
    if let Some(w) = diff.closed_witness.or(diff.marked_witness) {
        return Err(Error::PropertyViolated {
            property: format!("realization of `{}` by uncertainty sets", k.name()),
            witness: w,
        });
    }
    let disabled = disabled_map(&automaton, plant, table);
    Ok(PoSupervisor {
        automaton,
        disabled,
        uncertainty: det.subsets,
    })
}

/// True iff the synchronous product of `gs` is nonblocking.
pub fn nonconflict(gs: &[&Generator]) -> bool {
    automata::is_nonblocking(&automata::sync(gs)).holds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{language_equal, EventAttrs};

    fn table(events: &[(EventId, bool, bool)]) -> EventTable {
        let mut t = EventTable::new();
        for &(e, c, o) in events {
            t.insert(
                e,
                EventAttrs {
                    controllable: c,
                    observable: o,
                },
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn plant_language_is_controllable() {
        let g = Generator::new("g", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let t = table(&[(1, true, true), (2, false, true)]);
        assert!(is_controllable(&g, &g, &t).unwrap().holds());
    }

    #[test]
    fn uncontrollable_exit_gives_witness() {
        // plant a -> b with b uncontrollable; K = {a}
        let g = Generator::new("g", 3, 0, [1, 2], [1, 2], [(0, 1, 1), (1, 2, 2)]).unwrap();
        let k = Generator::new("k", 2, 0, [1], [1, 2], [(0, 1, 1)]).unwrap();
        let t = table(&[(1, true, true), (2, false, true)]);
        let v = is_controllable(&k, &g, &t).unwrap().violation.unwrap();
        assert_eq!(v.string, vec![1]);
        assert_eq!(v.event, 2);
    }

    #[test]
    fn containment_failure_is_an_error() {
        let g = Generator::new("g", 1, 0, [0], [1], []).unwrap();
        let k = Generator::new("k", 2, 0, [1], [1], [(0, 1, 1)]).unwrap();
        let t = table(&[(1, true, true)]);
        assert!(matches!(
            is_controllable(&k, &g, &t),
            Err(Error::PropertyViolated { .. })
        ));
    }

    #[test]
    fn supcon_with_spec_equal_to_plant_is_trim_plant() {
        let g =
            Generator::new("g", 3, 0, [0], [1, 2, 3], [(0, 1, 1), (1, 2, 0), (1, 3, 2)]).unwrap();
        let t = table(&[(1, true, true), (2, false, true), (3, true, true)]);
        let p = SynthesisProblem::new(g.clone(), g.clone(), ObservationMask::full(), t).unwrap();
        assert!(language_equal(&supcon(&p), &trim(&g)).equal());
    }

    #[test]
    fn supcon_removes_forbidden_controllable_transition() {
        // plant: 0 -1-> 1 -2-> 0, 0 -3-> 0 ; spec forbids 3
        let g =
            Generator::new("g", 2, 0, [0], [1, 2, 3], [(0, 1, 1), (1, 2, 0), (0, 3, 0)]).unwrap();
        let e = Generator::new("e", 1, 0, [0], [1, 2, 3], [(0, 1, 0), (0, 2, 0)]).unwrap();
        let t = table(&[(1, true, true), (2, false, true), (3, true, true)]);
        let p = SynthesisProblem::new(g, e, ObservationMask::full(), t).unwrap();
        let k = supcon(&p);
        assert!(k.accepts_marked(&[1, 2, 1, 2]));
        assert!(!k.accepts_closed(&[3]));
    }

    #[test]
    fn spec_outside_plant_alphabet_is_rejected() {
        let g = Generator::new("g", 1, 0, [0], [1], []).unwrap();
        let e = Generator::new("e", 1, 0, [0], [1, 9], []).unwrap();
        let t = table(&[(1, true, true)]);
        assert!(SynthesisProblem::new(g, e, ObservationMask::full(), t).is_err());
    }

    #[test]
    fn relative_observability_trivial_under_full_observation() {
        let g = Generator::new("g", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        assert!(check_relative_observability(&g, &g, &g, &ObservationMask::full()).holds());
    }

    #[test]
    fn relative_observability_direct_violation() {
        // plant: 0 -u-> 1, 0 -a-> 2 ; 1 -a-> 3, all marked
        // K allows a after ε but not after u (u unobservable): lookalikes ε, u
        let g = Generator::new(
            "g",
            4,
            0,
            [0, 1, 2, 3],
            [1, 9],
            [(0, 9, 1), (0, 1, 2), (1, 1, 3)],
        )
        .unwrap();
        let k = Generator::new("k", 3, 0, [0, 1, 2], [1, 9], [(0, 9, 1), (0, 1, 2)]).unwrap();
        let mask = ObservationMask::from_unobservable([9]);
        let v = check_relative_observability(&k, &g, &g, &mask)
            .violation
            .unwrap();
        assert_eq!(v.kind, RelObsKind::Transition(1));
        assert_eq!(v.s, Vec::<EventId>::new());
        assert_eq!(v.s_prime, vec![9]);
    }

    #[test]
    fn sup_rco_equals_supcon_under_full_observation() {
        let g = Generator::new(
            "g",
            3,
            0,
            [0],
            [1, 2, 3, 4],
            [(0, 1, 1), (1, 2, 0), (0, 3, 2), (2, 4, 0)],
        )
        .unwrap();
        let e = Generator::new(
            "e",
            2,
            0,
            [0],
            [1, 2, 3, 4],
            [(0, 1, 1), (1, 2, 0), (0, 3, 1)],
        )
        .unwrap();
        let t = table(&[
            (1, true, true),
            (2, false, true),
            (3, true, true),
            (4, false, true),
        ]);
        let p = SynthesisProblem::new(g, e, ObservationMask::full(), t).unwrap();
        assert!(language_equal(&sup_rco(&p), &supcon(&p)).equal());
        assert!(language_equal(&sup_cn(&p), &supcon(&p)).equal());
    }

    #[test]
    fn normality_forbids_unobservable_disablement() {
        // 0 -u-> 1 -a-> 2 with u controllable and unobservable; the spec
        // allows only ε. Disabling u is invisible to normality, so sup_cn is
        // empty, while u lies outside the ambient language and sup_rco keeps ε.
        let g = Generator::new("g", 3, 0, [0, 1, 2], [1, 9], [(0, 9, 1), (1, 1, 2)]).unwrap();
        let e = Generator::new("e", 1, 0, [0], [1, 9], []).unwrap();
        let t = table(&[(1, false, true), (9, true, false)]);
        let p = SynthesisProblem::new(g, e, ObservationMask::from_unobservable([9]), t).unwrap();
        let k = supcon(&p);
        assert!(k.accepts_marked(&[]));
        assert!(!k.accepts_closed(&[9]));
        assert!(sup_cn(&p).is_empty());
        let rco = sup_rco(&p);
        assert!(rco.accepts_marked(&[]));
    }

    #[test]
    fn po_supervisor_full_observation_matches_k() {
        let g = Generator::new("g", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let t = table(&[(1, true, true), (2, false, true)]);
        let sup = build_po_supervisor(&g, &g, &ObservationMask::full(), &t).unwrap();
        assert_eq!(sup.state_count(), 2);
        assert!(sup.disabled.iter().all(|d| d.is_empty()));
    }

    #[test]
    fn po_supervisor_rejects_unobservable_k() {
        let g = Generator::new(
            "g",
            4,
            0,
            [0, 1, 2, 3],
            [1, 9],
            [(0, 9, 1), (0, 1, 2), (1, 1, 3)],
        )
        .unwrap();
        let k = Generator::new("k", 3, 0, [0, 1, 2], [1, 9], [(0, 9, 1), (0, 1, 2)]).unwrap();
        let t = table(&[(1, true, true), (9, false, false)]);
        let err = build_po_supervisor(&k, &g, &ObservationMask::from_unobservable([9]), &t);
        assert!(matches!(err, Err(Error::PropertyViolated { .. })));
    }

    #[test]
    fn nonconflict_single_trim_generator() {
        let g = Generator::new("g", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        assert!(nonconflict(&[&g]));
    }
}
