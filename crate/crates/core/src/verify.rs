//! Brute-force oracles and a step-wise closed-loop simulator.

use crate::automata::{EventId, Generator, ObservationMask, StateId};
use crate::localization::LocalController;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

/// All strings of length at most `depth` in L(g) and in L_m(g).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundedLanguage {
    pub closed: BTreeSet<Vec<EventId>>,
    pub marked: BTreeSet<Vec<EventId>>,
}

pub fn enumerate_language(g: &Generator, depth: usize) -> BoundedLanguage {
    let mut out = BoundedLanguage::default();
    let Some(q0) = g.initial() else { return out };
    let mut frontier = vec![(q0, Vec::new())];
    for level in 0..=depth {
        let mut next = Vec::new();
        for (q, s) in frontier {
            if g.is_marked(q) {
                out.marked.insert(s.clone());
            }
            if level < depth {
                for &(e, t) in g.outgoing(q) {
                    let mut s2 = s.clone();
                    s2.push(e);
                    next.push((t, s2));
                }
            }
            out.closed.insert(s);
        }
        frontier = next;
    }
    out
}

/// Joint state of a set of generators run in lockstep: an event moves every
/// component whose alphabet contains it and must be defined in all of them.
#[derive(Debug, Clone)]
pub struct Lockstep<'a> {
    pub parts: Vec<&'a Generator>,
}

impl<'a> Lockstep<'a> {
    pub fn new(parts: Vec<&'a Generator>) -> Self {
        Self { parts }
    }

    pub fn initial(&self) -> Option<Vec<StateId>> {
        self.parts.iter().map(|g| g.initial()).collect()
    }

    pub fn step(&self, state: &[StateId], e: EventId) -> Option<Vec<StateId>> {
        let mut next = state.to_vec();
        let mut owned = false;
        for (i, g) in self.parts.iter().enumerate() {
            if g.alphabet().contains(&e) {
                owned = true;
                next[i] = g.next(state[i], e)?;
            }
        }
        owned.then_some(next)
    }

    pub fn is_marked(&self, state: &[StateId]) -> bool {
        self.parts.iter().zip(state).all(|(g, &q)| g.is_marked(q))
    }

    /// Events enabled at `state`, in increasing order.
    pub fn enabled(&self, state: &[StateId]) -> Vec<EventId> {
        let mut candidates: BTreeSet<EventId> = BTreeSet::new();
        for (g, &q) in self.parts.iter().zip(state) {
            candidates.extend(g.outgoing(q).iter().map(|&(e, _)| e));
        }
        candidates
            .into_iter()
            .filter(|&e| self.step(state, e).is_some())
            .collect()
    }
}

/// Compares the bounded languages of two lockstep systems without building
/// either product; returns a shortest distinguishing string (closed first,
/// then marked) of length at most `depth`.
pub fn bounded_difference(a: &Lockstep, b: &Lockstep, depth: usize) -> Option<Vec<EventId>> {
    type Node = (Option<Vec<StateId>>, Option<Vec<StateId>>);
    let start: Node = (a.initial(), b.initial());
    let mut seen: HashSet<Node> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![(start, Vec::new())];
    let mut marked_witness = None;
    for level in 0..=depth {
        let mut next = Vec::new();
        for ((x, y), s) in frontier {
            if x.is_some() != y.is_some() {
                return Some(s);
            }
            let mx = x.as_ref().is_some_and(|x| a.is_marked(x));
            let my = y.as_ref().is_some_and(|y| b.is_marked(y));
            if mx != my && marked_witness.is_none() {
                marked_witness = Some(s.clone());
            }
            if level == depth {
                continue;
            }
            let mut events: BTreeSet<EventId> = BTreeSet::new();
            if let Some(x) = &x {
                events.extend(a.enabled(x));
            }
            if let Some(y) = &y {
                events.extend(b.enabled(y));
            }
            for e in events {
                let node = (
                    x.as_ref().and_then(|x| a.step(x, e)),
                    y.as_ref().and_then(|y| b.step(y, e)),
                );
                if seen.insert(node.clone()) {
                    let mut s2 = s.clone();
                    s2.push(e);
                    next.push((node, s2));
                }
            }
        }
        frontier = next;
    }
    marked_witness
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefusalKind {
    /// The plant cannot execute the event here.
    Ineligible,
    /// A controller disables the event.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub component: String,
    pub event: EventId,
    pub kind: RefusalKind,
}

/// A plant running under a set of controllers.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub plant: Generator,
    pub controllers: Vec<Generator>,
    pub mask: ObservationMask,
    pub plant_state: StateId,
    pub controller_states: Vec<StateId>,
    pub trace: Vec<EventId>,
}

impl ClosedLoop {
    pub fn new(
        plant: Generator,
        controllers: Vec<Generator>,
        mask: ObservationMask,
    ) -> Option<Self> {
        let plant_state = plant.initial()?;
        let controller_states = controllers
            .iter()
            .map(|c| c.initial())
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            plant,
            controllers,
            mask,
            plant_state,
            controller_states,
            trace: Vec::new(),
        })
    }

    pub fn from_local(
        plant: Generator,
        locs: &[LocalController],
        mask: ObservationMask,
    ) -> Option<Self> {
        Self::new(
            plant,
            locs.iter().map(|l| l.automaton.clone()).collect(),
            mask,
        )
    }

    /// Executes `e`, or reports the first component that refuses it.
    pub fn step(&self, e: EventId) -> Result<ClosedLoop, Refusal> {
        let Some(q) = self.plant.next(self.plant_state, e) else {
            return Err(Refusal {
                component: self.plant.name().to_string(),
                event: e,
                kind: RefusalKind::Ineligible,
            });
        };
        let mut next = self.clone();
        next.plant_state = q;
        for (i, c) in self.controllers.iter().enumerate() {
            if !c.alphabet().contains(&e) {
                continue;
            }
            match c.next(self.controller_states[i], e) {
                Some(t) => next.controller_states[i] = t,
                None => {
                    return Err(Refusal {
                        component: c.name().to_string(),
                        event: e,
                        kind: RefusalKind::Disabled,
                    })
                }
            }
        }
        next.trace.push(e);
        Ok(next)
    }

    pub fn run(&self, events: &[EventId]) -> Result<ClosedLoop, Refusal> {
        let mut cur = self.clone();
        for &e in events {
            cur = cur.step(e)?;
        }
        Ok(cur)
    }

    pub fn enabled(&self) -> Vec<EventId> {
        self.plant
            .outgoing(self.plant_state)
            .iter()
            .map(|&(e, _)| e)
            .filter(|&e| self.step(e).is_ok())
            .collect()
    }

    pub fn is_marked(&self) -> bool {
        self.plant.is_marked(self.plant_state)
            && self
                .controllers
                .iter()
                .zip(&self.controller_states)
                .all(|(c, &x)| c.is_marked(x))
    }

    /// What the observer sees of the trace so far.
    pub fn observed(&self) -> Vec<EventId> {
        crate::automata::project_string(&self.trace, &self.mask)
    }

    fn key(&self) -> (StateId, Vec<StateId>) {
        (self.plant_state, self.controller_states.clone())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExploreReport {
    /// Strings of length at most the depth accepted by the closed loop.
    pub reached: BTreeSet<Vec<EventId>>,
    /// Reached strings that leave the closure of the safe language.
    pub safety_violations: Vec<Vec<EventId>>,
    /// Strings leading to joint states from which no marked joint state was
    /// found within the search horizon.
    pub blocking: Vec<Vec<EventId>>,
}

/// Breadth-first exploration of the closed loop up to `depth`. Safety is
/// judged against `safe` (closed language); blocking is searched for within
/// `2 * depth` further steps.
pub fn exhaustive_explore(
    start: &ClosedLoop,
    depth: usize,
    safe: Option<&Generator>,
) -> ExploreReport {
    let mut report = ExploreReport::default();
    let mut frontier = vec![start.clone()];
    let mut first_seen: HashMap<(StateId, Vec<StateId>), Vec<EventId>> = HashMap::new();
    first_seen.insert(start.key(), Vec::new());
    for level in 0..=depth {
        let mut next = Vec::new();
        for cl in frontier {
            if let Some(safe) = safe {
                if !safe.accepts_closed(&cl.trace) {
                    report.safety_violations.push(cl.trace.clone());
                }
            }
            if level < depth {
                for e in cl.enabled() {
                    let stepped = cl.step(e).expect("enabled event steps");
                    first_seen
                        .entry(stepped.key())
                        .or_insert_with(|| stepped.trace.clone());
                    next.push(stepped);
                }
            }
            report.reached.insert(cl.trace);
        }
        frontier = next;
    }
    let horizon = 2 * depth.max(1);
    let mut keys: Vec<_> = first_seen.into_iter().collect();
    keys.sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
    for (_, trace) in keys {
        let cl = start.run(&trace).expect("recorded trace replays");
        if !reaches_marker(&cl, horizon) {
            report.blocking.push(trace);
        }
    }
    report
}

fn reaches_marker(cl: &ClosedLoop, horizon: usize) -> bool {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(cl.clone(), 0)]);
    seen.insert(cl.key());
    while let Some((c, d)) = queue.pop_front() {
        if c.is_marked() {
            return true;
        }
        if d == horizon {
            continue;
        }
        for e in c.enabled() {
            let n = c.step(e).expect("enabled event steps");
            if seen.insert(n.key()) {
                queue.push_back((n, d + 1));
            }
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    /// Controllers with an unobservable event moving between distinct states.
    pub structural_failures: Vec<String>,
    /// Lookalike pairs that reached states with different enabled events.
    pub spot_failures: Vec<(String, Vec<EventId>, Vec<EventId>)>,
    pub pairs_checked: usize,
    pub seed: u64,
}

impl Feasibility {
    pub fn holds(&self) -> bool {
        self.structural_failures.is_empty() && self.spot_failures.is_empty()
    }
}

pub const FEASIBILITY_SEED: u64 = 0x5eed;
const SPOT_PAIRS: usize = 200;
const WALK_LENGTH: usize = 12;

/// Structural feasibility of every controller plus random lookalike-pair
/// spot checks with a fixed seed.
pub fn check_feasibility(controllers: &[&Generator], mask: &ObservationMask) -> Feasibility {
    let mut out = Feasibility {
        structural_failures: Vec::new(),
        spot_failures: Vec::new(),
        pairs_checked: 0,
        seed: FEASIBILITY_SEED,
    };
    for c in controllers {
        if c.transitions()
            .any(|(s, e, t)| s != t && !mask.is_observable(e))
        {
            out.structural_failures.push(c.name().to_string());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(FEASIBILITY_SEED);
    for c in controllers {
        let hidden: Vec<EventId> = c
            .alphabet()
            .iter()
            .copied()
            .filter(|&e| !mask.is_observable(e))
            .collect();
        let Some(q0) = c.initial() else { continue };
        let mut attempts = 0;
        let mut checked = 0;
        while checked < SPOT_PAIRS && attempts < 4 * SPOT_PAIRS {
            attempts += 1;
            let mut s = Vec::new();
            let mut q = q0;
            for _ in 0..rng.gen_range(0..=WALK_LENGTH) {
                let Some(&(e, t)) = c.outgoing(q).choose(&mut rng) else {
                    break;
                };
                s.push(e);
                q = t;
            }
            let mut s2 = s.clone();
            if !hidden.is_empty() && (s2.is_empty() || rng.gen_bool(0.5)) {
                let at = rng.gen_range(0..=s2.len());
                s2.insert(at, *hidden.choose(&mut rng).unwrap());
            } else if let Some(i) = (0..s2.len()).find(|&i| !mask.is_observable(s2[i])) {
                s2.remove(i);
            }
            let (Some(x), Some(y)) = (c.run(&s), c.run(&s2)) else {
                continue;
            };
            checked += 1;
            let ex: Vec<EventId> = c.outgoing(x).iter().map(|&(e, _)| e).collect();
            let ey: Vec<EventId> = c.outgoing(y).iter().map(|&(e, _)| e).collect();
            if ex != ey {
                out.spot_failures.push((c.name().to_string(), s, s2));
            }
        }
        out.pairs_checked += checked;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::sync;

    fn loop1() -> Generator {
        Generator::new("a", 1, 0, [0], [1], [(0, 1, 0)]).unwrap()
    }

    #[test]
    fn enumeration_of_a_single_loop() {
        let l = enumerate_language(&loop1(), 3);
        let expect: BTreeSet<Vec<EventId>> = [vec![], vec![1], vec![1, 1], vec![1, 1, 1]]
            .into_iter()
            .collect();
        assert_eq!(l.closed, expect);
        assert_eq!(l.marked, expect);
        let z = enumerate_language(&loop1(), 0);
        assert_eq!(z.closed.len(), 1);
    }

    #[test]
    fn refusal_names_the_component() {
        let plant = Generator::new("P", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let ctrl = Generator::new("C", 1, 0, [0], [1], []).unwrap();
        let cl = ClosedLoop::new(plant, vec![ctrl], ObservationMask::full()).unwrap();
        let r = cl.step(1).unwrap_err();
        assert_eq!(r.component, "C");
        assert_eq!(r.kind, RefusalKind::Disabled);
        let r = cl.step(2).unwrap_err();
        assert_eq!(r.kind, RefusalKind::Ineligible);
    }

    #[test]
    fn simulation_agrees_with_product() {
        let plant =
            Generator::new("P", 2, 0, [0], [1, 2, 3], [(0, 1, 1), (1, 2, 0), (0, 3, 0)]).unwrap();
        let ctrl = Generator::new("C", 2, 0, [0, 1], [1, 3], [(0, 1, 1), (1, 3, 0)]).unwrap();
        let cl =
            ClosedLoop::new(plant.clone(), vec![ctrl.clone()], ObservationMask::full()).unwrap();
        let rep = exhaustive_explore(&cl, 6, None);
        assert_eq!(
            rep.reached,
            enumerate_language(&sync(&[&plant, &ctrl]), 6).closed
        );
    }

    #[test]
    fn bounded_difference_finds_shortest() {
        let a = Generator::new("a", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let b = Generator::new("b", 2, 0, [0], [1, 2], [(0, 1, 1)]).unwrap();
        let la = Lockstep::new(vec![&a]);
        let lb = Lockstep::new(vec![&b]);
        assert_eq!(bounded_difference(&la, &lb, 5), Some(vec![1, 2]));
        assert_eq!(bounded_difference(&la, &la, 5), None);
    }

    #[test]
    fn injected_unobservable_move_is_infeasible() {
        let c = Generator::new("C", 2, 0, [0], [1, 13], [(0, 13, 1), (1, 1, 0)]).unwrap();
        let f = check_feasibility(&[&c], &ObservationMask::from_unobservable([13]));
        assert!(!f.holds());
        let ok = Generator::new("D", 1, 0, [0], [1, 13], [(0, 13, 0), (0, 1, 0)]).unwrap();
        assert!(check_feasibility(&[&ok], &ObservationMask::from_unobservable([13])).holds());
    }
}
