//! Random small instances and independent reference implementations used to
//! cross-check the library.

#![allow(dead_code)]

use desloc::automata::{EventAttrs, EventId, EventSet, EventTable, Generator, ObservationMask};
use desloc::synthesis::SynthesisProblem;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Debug, Clone)]
pub struct Instance {
    pub plant: Generator,
    pub spec: Generator,
    pub table: EventTable,
    pub mask: ObservationMask,
}

impl Instance {
    pub fn problem(&self) -> SynthesisProblem {
        SynthesisProblem::new(
            self.plant.clone(),
            self.spec.clone(),
            self.mask.clone(),
            self.table.clone(),
        )
        .expect("random instance is well formed")
    }
}

pub fn random_generator(
    rng: &mut impl Rng,
    name: &str,
    max_states: usize,
    alphabet: &[EventId],
    density: f64,
) -> Generator {
    let n = rng.gen_range(1..=max_states);
    let mut transitions = Vec::new();
    for s in 0..n {
        for &e in alphabet {
            if rng.gen_bool(density) {
                transitions.push((s, e, rng.gen_range(0..n)));
            }
        }
    }
    let markers: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    Generator::new(name, n, 0, markers, alphabet.iter().copied(), transitions)
        .expect("random generator is well formed")
}

/// Plant with at most 5 states over at most 6 events, at most 2 of them
/// unobservable; specification with at most 3 states over a subset of the
/// plant's events.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n_events = rng.gen_range(2..=6);
    let events: Vec<EventId> = (1..=n_events).collect();
    let plant = random_generator(rng, "G", 5, &events, 0.5);
    let mut spec_events: Vec<EventId> = events
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(0.7))
        .collect();
    if spec_events.is_empty() {
        spec_events.push(events[0]);
    }
    let spec = random_generator(rng, "E", 3, &spec_events, 0.6);
    let mut shuffled = events.clone();
    shuffled.shuffle(rng);
    let hidden: Vec<EventId> =
        shuffled[..rng.gen_range(0..=2usize.min(n_events as usize))].to_vec();
    let mut table = EventTable::new();
    for &e in &events {
        table
            .insert(
                e,
                EventAttrs {
                    controllable: rng.gen_bool(0.5),
                    observable: !hidden.contains(&e),
                },
            )
            .unwrap();
    }
    Instance {
        plant,
        spec,
        table,
        mask: ObservationMask::from_unobservable(hidden),
    }
}

pub fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

/// Shortest string on which `a` is not included in `b`, closed or marked.
pub fn inclusion_witness(a: &Generator, b: &Generator) -> Option<Vec<EventId>> {
    let (a0, b0) = match (a.initial(), b.initial()) {
        (None, _) => return None,
        (Some(_), None) => return Some(Vec::new()),
        (Some(x), Some(y)) => (x, y),
    };
    let mut seen = HashSet::from([(a0, b0)]);
    let mut queue = VecDeque::from([((a0, b0), Vec::new())]);
    while let Some(((x, y), s)) = queue.pop_front() {
        if a.is_marked(x) && !b.is_marked(y) {
            return Some(s);
        }
        for &(e, x2) in a.outgoing(x) {
            let mut s2 = s.clone();
            s2.push(e);
            match b.next(y, e) {
                None => return Some(s2),
                Some(y2) => {
                    if seen.insert((x2, y2)) {
                        queue.push_back(((x2, y2), s2));
                    }
                }
            }
        }
    }
    None
}

/// Reachable part of `spec || plant` where the spec alphabet is contained in
/// the plant's; states are (spec state, plant state).
pub struct PairProduct {
    pub states: Vec<(usize, usize)>,
    pub events: Vec<EventId>,
    /// `delta[x][i]` is the successor of `x` under `events[i]`.
    pub delta: Vec<Vec<Option<usize>>>,
    pub marked: Vec<bool>,
}

pub fn pair_product(spec: &Generator, plant: &Generator) -> PairProduct {
    let events: Vec<EventId> = plant.alphabet().iter().copied().collect();
    let mut out = PairProduct {
        states: Vec::new(),
        events: events.clone(),
        delta: Vec::new(),
        marked: Vec::new(),
    };
    let (Some(e0), Some(g0)) = (spec.initial(), plant.initial()) else {
        return out;
    };
    let mut index = HashMap::new();
    index.insert((e0, g0), 0);
    out.states.push((e0, g0));
    let mut i = 0;
    while i < out.states.len() {
        let (x, q) = out.states[i];
        let mut row = Vec::new();
        for &e in &events {
            let x2 = if spec.alphabet().contains(&e) {
                spec.next(x, e)
            } else {
                Some(x)
            };
            let next = match (x2, plant.next(q, e)) {
                (Some(x2), Some(q2)) => {
                    let n = out.states.len();
                    let id = *index.entry((x2, q2)).or_insert(n);
                    if id == n {
                        out.states.push((x2, q2));
                    }
                    Some(id)
                }
                _ => None,
            };
            row.push(next);
        }
        out.marked.push(spec.is_marked(x) && plant.is_marked(q));
        out.delta.push(row);
        i += 1;
    }
    out
}

impl PairProduct {
    /// Reachable and coreachable states of the restriction to `keep`.
    pub fn trim_mask(&self, keep: u64) -> u64 {
        if keep & 1 == 0 {
            return 0;
        }
        let n = self.states.len();
        let mut reach = 1u64;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for t in self.delta[x].iter().flatten() {
                if keep >> t & 1 == 1 && reach >> t & 1 == 0 {
                    reach |= 1 << t;
                    stack.push(*t);
                }
            }
        }
        let mut co: u64 = (0..n)
            .filter(|&x| reach >> x & 1 == 1 && self.marked[x])
            .fold(0, |m, x| m | 1 << x);
        loop {
            let mut grown = co;
            for x in 0..n {
                if reach >> x & 1 == 1
                    && self.delta[x]
                        .iter()
                        .flatten()
                        .any(|&t| co >> t & 1 == 1 && reach >> t & 1 == 1)
                {
                    grown |= 1 << x;
                }
            }
            if grown == co {
                return reach & co;
            }
            co = grown;
        }
    }

    /// No uncontrollable plant-eligible event leaves `keep` from a kept state.
    pub fn controllable(&self, keep: u64, plant: &Generator, table: &EventTable) -> bool {
        (0..self.states.len())
            .filter(|&x| keep >> x & 1 == 1)
            .all(|x| {
                let q = self.states[x].1;
                self.events.iter().enumerate().all(|(i, &e)| {
                    table.is_controllable(e)
                        || plant.next(q, e).is_none()
                        || self.delta[x][i].is_some_and(|t| keep >> t & 1 == 1)
                })
            })
    }

    pub fn to_generator(&self, keep: u64, alphabet: &EventSet) -> Generator {
        let ids: Vec<usize> = (0..self.states.len())
            .filter(|&x| keep >> x & 1 == 1)
            .collect();
        let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        if ids.is_empty() {
            return Generator::empty("oracle", alphabet.clone());
        }
        let mut transitions = Vec::new();
        for (i, &x) in ids.iter().enumerate() {
            for (j, &e) in self.events.iter().enumerate() {
                if let Some(&t) = self.delta[x][j].as_ref().and_then(|t| pos.get(t)) {
                    transitions.push((i, e, t));
                }
            }
        }
        let markers: Vec<usize> = ids
            .iter()
            .enumerate()
            .filter(|&(_, &x)| self.marked[x])
            .map(|(i, _)| i)
            .collect();
        Generator::new(
            "oracle",
            ids.len(),
            0,
            markers,
            alphabet.iter().copied(),
            transitions,
        )
        .expect("oracle generator is well formed")
    }
}

/// Supremal controllable sublanguage by enumerating every subset of product
/// states: the union of all trim subsets whose language is controllable.
/// `None` when the product is too large to enumerate.
pub fn brute_supcon(inst: &Instance) -> Option<Generator> {
    let prod = pair_product(&inst.spec, &inst.plant);
    let n = prod.states.len();
    if n > 16 {
        return None;
    }
    let mut union = 0u64;
    for keep in 0..(1u64 << n) {
        if keep & 1 == 0 {
            continue;
        }
        let t = prod.trim_mask(keep);
        if t != keep || t & !union == 0 {
            continue;
        }
        if prod.controllable(t, &inst.plant, &inst.table) {
            union |= t;
        }
    }
    Some(prod.to_generator(prod.trim_mask(union), inst.plant.alphabet()))
}

/// All strings of `g` up to `depth`, with the state each reaches.
pub fn strings(g: &Generator, depth: usize) -> Vec<(Vec<EventId>, usize)> {
    let Some(q0) = g.initial() else {
        return Vec::new();
    };
    let mut out = vec![(Vec::new(), q0)];
    let mut i = 0;
    while i < out.len() {
        let (s, q) = out[i].clone();
        if s.len() < depth {
            for &(e, t) in g.outgoing(q) {
                let mut s2 = s.clone();
                s2.push(e);
                out.push((s2, t));
            }
        }
        i += 1;
    }
    out
}

pub fn project(s: &[EventId], mask: &ObservationMask) -> Vec<EventId> {
    s.iter()
        .copied()
        .filter(|&e| mask.is_observable(e))
        .collect()
}

/// A bounded search for a relative-observability violation of K with
/// respect to ambient C: lookalikes `s` in the closure of K and `s'` in the
/// closure of C, both no longer than `depth`.
pub fn relobs_violation(
    k: &Generator,
    c: &Generator,
    plant: &Generator,
    mask: &ObservationMask,
    depth: usize,
) -> Option<(Vec<EventId>, Vec<EventId>)> {
    let k = desloc::automata::trim(k);
    let c = desloc::automata::trim(c);
    let mut by_proj: HashMap<Vec<EventId>, Vec<Vec<EventId>>> = HashMap::new();
    for (s, _) in strings(&c, depth) {
        by_proj.entry(project(&s, mask)).or_default().push(s);
    }
    for (s, x) in strings(&k, depth) {
        let Some(lookalikes) = by_proj.get(&project(&s, mask)) else {
            continue;
        };
        for s2 in lookalikes {
            if violates(&k, plant, x, s2) {
                return Some((s, s2.clone()));
            }
        }
    }
    None
}

/// Whether the lookalike pair `(s, s2)` breaks relative observability,
/// given that `s` reaches `x` in `k` and `s2` lies in the ambient closure.
pub fn violates(k: &Generator, plant: &Generator, x: usize, s2: &[EventId]) -> bool {
    let Some(q2) = plant.run(s2) else {
        return false;
    };
    let y2 = k.run(s2);
    for &(e, _) in k.outgoing(x) {
        if plant.next(q2, e).is_some() && y2.and_then(|y| k.next(y, e)).is_none() {
            return true;
        }
    }
    k.is_marked(x) && plant.is_marked(q2) && !y2.is_some_and(|y| k.is_marked(y))
}

/// A continuation of `q` whose kept-event projection is exactly `t` and
/// which ends in a marked state.
pub fn has_marked_continuation(g: &Generator, q: usize, keep: &EventSet, t: &[EventId]) -> bool {
    let mut seen = HashSet::from([(q, 0usize)]);
    let mut stack = vec![(q, 0usize)];
    while let Some((x, i)) = stack.pop() {
        if i == t.len() && g.is_marked(x) {
            return true;
        }
        for &(e, y) in g.outgoing(x) {
            let next = if keep.contains(&e) {
                if i < t.len() && t[i] == e {
                    Some(i + 1)
                } else {
                    None
                }
            } else {
                Some(i)
            };
            if let Some(j) = next {
                if seen.insert((y, j)) {
                    stack.push((y, j));
                }
            }
        }
    }
    false
}

/// A bounded search for a natural-observer violation: `s` and marked `w` no
/// longer than `depth`.
pub fn observer_violation(
    g: &Generator,
    keep: &EventSet,
    depth: usize,
) -> Option<(Vec<EventId>, Vec<EventId>)> {
    let proj = |s: &[EventId]| -> Vec<EventId> {
        s.iter().copied().filter(|e| keep.contains(e)).collect()
    };
    let all = strings(g, depth);
    let marked: HashSet<Vec<EventId>> = all
        .iter()
        .filter(|(_, q)| g.is_marked(*q))
        .map(|(s, _)| proj(s))
        .collect();
    for (s, q) in &all {
        let ps = proj(s);
        for w in &marked {
            if w.starts_with(&ps) {
                let t = &w[ps.len()..];
                if !has_marked_continuation(g, *q, keep, t) {
                    return Some((s.clone(), t.to_vec()));
                }
            }
        }
    }
    None
}
