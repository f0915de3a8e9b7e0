use super::{Builder, EventId, EventSet, Generator, ObservationMask, StateId};
use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};

// Products larger than this carry no per-state provenance labels.
const LABEL_LIMIT: usize = 10_000;

pub fn reachable_states(g: &Generator) -> Vec<bool> {
    let mut seen = vec![false; g.state_count()];
    let Some(q0) = g.initial() else {
        return seen;
    };
    seen[q0] = true;
    let mut stack = vec![q0];
    while let Some(q) = stack.pop() {
        for &(_, t) in g.outgoing(q) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

pub fn coreachable_states(g: &Generator) -> Vec<bool> {
    let n = g.state_count();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, _, t) in g.transitions() {
        preds[t].push(s);
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<StateId> = g.markers().collect();
    for &m in &stack {
        seen[m] = true;
    }
    while let Some(q) = stack.pop() {
        for &p in &preds[q] {
            if !seen[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    seen
}

/// Keeps the states flagged in `keep`, preserving their relative order.
/// Returns the old-to-new index map; the result is empty when the initial
/// state is dropped.
pub fn restrict(g: &Generator, keep: &[bool]) -> (Generator, Vec<Option<StateId>>) {
    let n = g.state_count();
    let mut map = vec![None; n];
    if g.initial().is_none_or(|q0| !keep[q0]) {
        return (Generator::empty(g.name(), g.alphabet().clone()), map);
    }
    let mut b = Builder::new(g.name(), g.alphabet().clone());
    // the initial state must become index 0
    let q0 = g.initial().unwrap();
    map[q0] = Some(b.add_state(g.is_marked(q0)));
    for q in (0..n).filter(|&q| keep[q] && q != q0) {
        map[q] = Some(b.add_state(g.is_marked(q)));
    }
    for (s, e, t) in g.transitions() {
        if let (Some(ns), Some(nt)) = (map[s], map[t]) {
            b.add_transition(ns, e, nt);
        }
    }
    let mut out = b.finish();
    if let Some(labels) = g.labels() {
        let mut new_labels = vec![String::new(); out.state_count()];
        for (q, m) in map.iter().enumerate() {
            if let Some(nq) = m {
                new_labels[*nq] = labels[q].clone();
            }
        }
        out = out.with_labels(new_labels);
    }
    (out, map)
}

pub fn trim(g: &Generator) -> Generator {
    let reach = reachable_states(g);
    let coreach = coreachable_states(g);
    let keep: Vec<bool> = reach.iter().zip(&coreach).map(|(a, b)| *a && *b).collect();
    restrict(g, &keep).0
}

/// Shortest event string from `from` to a state satisfying `target`.
pub fn shortest_path(
    g: &Generator,
    from: StateId,
    target: impl Fn(StateId) -> bool,
) -> Option<(StateId, Vec<EventId>)> {
    let mut parent: Vec<Option<(StateId, EventId)>> = vec![None; g.state_count()];
    let mut seen = vec![false; g.state_count()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(q) = queue.pop_front() {
        if target(q) {
            let mut path = Vec::new();
            let mut cur = q;
            while let Some((p, e)) = parent[cur] {
                path.push(e);
                cur = p;
            }
            path.reverse();
            return Some((q, path));
        }
        for &(e, t) in g.outgoing(q) {
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((q, e));
                queue.push_back(t);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonblocking {
    /// A reachable state that cannot reach a marker, with a string reaching it.
    pub blocking: Option<(StateId, Vec<EventId>)>,
}

impl Nonblocking {
    pub fn holds(&self) -> bool {
        self.blocking.is_none()
    }
}

pub fn is_nonblocking(g: &Generator) -> Nonblocking {
    let Some(q0) = g.initial() else {
        return Nonblocking { blocking: None };
    };
    let coreach = coreachable_states(g);
    Nonblocking {
        blocking: shortest_path(g, q0, |q| !coreach[q]),
    }
}

/// Reachable synchronous product together with the component state tuple of
/// every product state.
#[derive(Debug, Clone)]
pub struct Product {
    pub generator: Generator,
    pub components: Vec<Vec<StateId>>,
}

pub fn sync_product(gs: &[&Generator]) -> Product {
    sync_product_within(gs, usize::MAX).expect("unbounded product")
}

/// Like [`sync_product`], but gives up once more than `budget` states have
/// been discovered.
pub fn sync_product_within(gs: &[&Generator], budget: usize) -> Option<Product> {
    let alphabet: EventSet = gs
        .iter()
        .flat_map(|g| g.alphabet().iter().copied())
        .collect();
    let name = gs.iter().map(|g| g.name()).collect::<Vec<_>>().join("||");
    if gs.iter().any(|g| g.is_empty()) || gs.is_empty() {
        return Some(Product {
            generator: Generator::empty(name, alphabet),
            components: Vec::new(),
        });
    }
    let owners: Vec<(EventId, Vec<usize>)> = alphabet
        .iter()
        .map(|&e| {
            let who = (0..gs.len())
                .filter(|&i| gs[i].alphabet().contains(&e))
                .collect();
            (e, who)
        })
        .collect();

    let mut b = Builder::new(name, alphabet);
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut components: Vec<Vec<StateId>> = Vec::new();
    let start: Vec<StateId> = gs.iter().map(|g| g.initial().unwrap()).collect();
    let is_marked = |t: &[StateId]| t.iter().zip(gs).all(|(&q, g)| g.is_marked(q));
    b.add_state(is_marked(&start));
    index.insert(start.clone(), 0);
    components.push(start);
    let mut cursor = 0;
    while cursor < components.len() {
        let tuple = components[cursor].clone();
        'events: for (e, who) in &owners {
            let mut next = tuple.clone();
            for &i in who {
                match gs[i].next(tuple[i], *e) {
                    Some(t) => next[i] = t,
                    None => continue 'events,
                }
            }
            let target = match index.get(&next) {
                Some(&t) => t,
                None => {
                    if components.len() >= budget {
                        return None;
                    }
                    let t = b.add_state(is_marked(&next));
                    index.insert(next.clone(), t);
                    components.push(next);
                    t
                }
            };
            b.add_transition(cursor, *e, target);
        }
        cursor += 1;
    }
    let mut generator = b.finish();
    if components.len() <= LABEL_LIMIT {
        let labels = components
            .iter()
            .map(|t| {
                let parts: Vec<String> = t.iter().map(|q| q.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect();
        generator = generator.with_labels(labels);
    }
    Some(Product {
        generator,
        components,
    })
}

/// Reachable synchronous product over the union alphabet.
pub fn sync(gs: &[&Generator]) -> Generator {
    sync_product(gs).generator
}

/// Subset construction treating `silent` events as unobservable moves.
#[derive(Debug, Clone)]
pub struct Determinized {
    pub generator: Generator,
    /// The sorted set of source states represented by each state.
    pub subsets: Vec<Vec<StateId>>,
}

pub(crate) fn silent_closure(
    g: &Generator,
    seed: impl IntoIterator<Item = StateId>,
    silent: &dyn Fn(EventId) -> bool,
) -> Vec<StateId> {
    let mut seen = vec![false; g.state_count()];
    let mut stack: Vec<StateId> = Vec::new();
    for q in seed {
        if !seen[q] {
            seen[q] = true;
            stack.push(q);
        }
    }
    let mut out = stack.clone();
    while let Some(q) = stack.pop() {
        for &(e, t) in g.outgoing(q) {
            if silent(e) && !seen[t] {
                seen[t] = true;
                stack.push(t);
                out.push(t);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Determinizes `g` with `silent` events erased. A subset state is marked iff
/// it contains a marker state. The result alphabet is the non-silent part of
/// `g`'s alphabet.
pub fn determinize(g: &Generator, silent: &dyn Fn(EventId) -> bool) -> Determinized {
    let alphabet: EventSet = g
        .alphabet()
        .iter()
        .copied()
        .filter(|&e| !silent(e))
        .collect();
    let Some(q0) = g.initial() else {
        return Determinized {
            generator: Generator::empty(g.name(), alphabet),
            subsets: Vec::new(),
        };
    };
    let mut b = Builder::new(g.name(), alphabet.clone());
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut subsets: Vec<Vec<StateId>> = Vec::new();
    let start = silent_closure(g, [q0], silent);
    b.add_state(start.iter().any(|&q| g.is_marked(q)));
    index.insert(start.clone(), 0);
    subsets.push(start);
    let mut cursor = 0;
    while cursor < subsets.len() {
        let current = subsets[cursor].clone();
        let mut moves: std::collections::BTreeMap<EventId, Vec<StateId>> = Default::default();
        for &q in &current {
            for &(e, t) in g.outgoing(q) {
                if !silent(e) {
                    moves.entry(e).or_default().push(t);
                }
            }
        }
        for (e, targets) in moves {
            let next = silent_closure(g, targets, silent);
            let t = match index.get(&next) {
                Some(&t) => t,
                None => {
                    let t = b.add_state(next.iter().any(|&q| g.is_marked(q)));
                    index.insert(next.clone(), t);
                    subsets.push(next);
                    t
                }
            };
            b.add_transition(cursor, e, t);
        }
        cursor += 1;
    }
    let labels = subsets
        .iter()
        .map(|s| {
            let parts: Vec<String> = s.iter().map(|q| q.to_string()).collect();
            format!("{{{}}}", parts.join(","))
        })
        .collect();
    Determinized {
        generator: b.finish().with_labels(labels),
        subsets,
    }
}

/// Minimal deterministic generator for the natural projection of `g` onto
/// `keep` (closed and marked languages both projected).
pub fn project_generator(g: &Generator, keep: &EventSet) -> Generator {
    let det = determinize(g, &|e| !keep.contains(&e));
    minimize(&det.generator)
}

/// Coarsest congruence refining `initial` (and the marking) under the partial
/// transition function; an undefined transition is its own outcome.
fn refine(g: &Generator, initial: &[usize]) -> Vec<usize> {
    let n = g.state_count();
    let mut class = vec![0usize; n];
    let mut seed: HashMap<(usize, bool), usize> = HashMap::new();
    for q in 0..n {
        let len = seed.len();
        class[q] = *seed.entry((initial[q], g.is_marked(q))).or_insert(len);
    }
    let mut count = seed.len();
    loop {
        let mut sigs: HashMap<(usize, Vec<(EventId, usize)>), usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for q in 0..n {
            let sig = (
                class[q],
                g.outgoing(q).iter().map(|&(e, t)| (e, class[t])).collect(),
            );
            let len = sigs.len();
            next[q] = *sigs.entry(sig).or_insert(len);
        }
        let new_count = sigs.len();
        class = next;
        if new_count == count {
            return class;
        }
        count = new_count;
    }
}

/// Minimal generator with the same closed and marked languages, in
/// canonical (breadth-first) state order.
pub fn minimize(g: &Generator) -> Generator {
    minimize_with_partition(g, &vec![0; g.state_count()])
}

/// Like [`minimize`], but never merges states in different `partition` classes.
pub fn minimize_with_partition(g: &Generator, partition: &[usize]) -> Generator {
    quotient(g, partition).0
}

/// Minimization that also reports where each state of `g` went (`None` for
/// unreachable states).
pub(crate) fn quotient(g: &Generator, partition: &[usize]) -> (Generator, Vec<Option<StateId>>) {
    let reach = reachable_states(g);
    let (r, map) = restrict(g, &reach);
    if r.is_empty() {
        return (r, map);
    }
    let mut init = vec![0usize; r.state_count()];
    for (old, new) in map.iter().enumerate() {
        if let Some(q) = new {
            init[*q] = partition[old];
        }
    }
    let class = refine(&r, &init);
    let classes = class.iter().copied().max().unwrap() + 1;
    let mut rep = vec![usize::MAX; classes];
    for q in 0..r.state_count() {
        if rep[class[q]] == usize::MAX {
            rep[class[q]] = q;
        }
    }
    // r's initial state is 0, so class[0] is the initial class
    let mut order: Vec<usize> = vec![class[0]];
    order.extend((0..classes).filter(|&c| c != class[0]));
    let mut pos = vec![0usize; classes];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    let mut b = Builder::new(r.name(), r.alphabet().clone());
    for &c in &order {
        b.add_state(r.is_marked(rep[c]));
    }
    for &c in &order {
        for &(e, t) in r.outgoing(rep[c]) {
            b.add_transition(pos[c], e, pos[class[t]]);
        }
    }
    let merged = b.finish();
    let (canon, order_map) = canonical_map(&merged);
    let out_map = map
        .iter()
        .map(|m| m.and_then(|q| order_map[pos[class[q]]]))
        .collect();
    (canon, out_map)
}

/// Renumbers reachable states in breadth-first order (events ascending) and
/// drops unreachable ones.
pub fn canonical(g: &Generator) -> Generator {
    canonical_map(g).0
}

pub(crate) fn canonical_map(g: &Generator) -> (Generator, Vec<Option<StateId>>) {
    let mut map: Vec<Option<StateId>> = vec![None; g.state_count()];
    let Some(q0) = g.initial() else {
        return (Generator::empty(g.name(), g.alphabet().clone()), map);
    };
    let mut order = vec![q0];
    map[q0] = Some(0);
    let mut cursor = 0;
    while cursor < order.len() {
        let q = order[cursor];
        for &(_, t) in g.outgoing(q) {
            if map[t].is_none() {
                map[t] = Some(order.len());
                order.push(t);
            }
        }
        cursor += 1;
    }
    let mut b = Builder::new(g.name(), g.alphabet().clone());
    for &q in &order {
        b.add_state(g.is_marked(q));
    }
    for (i, &q) in order.iter().enumerate() {
        for &(e, t) in g.outgoing(q) {
            b.add_transition(i, e, map[t].unwrap());
        }
    }
    let out = b.finish();
    let out = match g.labels() {
        Some(labels) => out.with_labels(order.iter().map(|&q| labels[q].clone()).collect()),
        None => out,
    };
    (out, map)
}

/// Outcome of comparing two generators; each witness is a shortest string in
/// the symmetric difference of the respective languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageDiff {
    pub closed_witness: Option<Vec<EventId>>,
    pub marked_witness: Option<Vec<EventId>>,
}

impl LanguageDiff {
    pub fn closed_equal(&self) -> bool {
        self.closed_witness.is_none()
    }

    pub fn marked_equal(&self) -> bool {
        self.marked_witness.is_none()
    }

    pub fn equal(&self) -> bool {
        self.closed_equal() && self.marked_equal()
    }
}

fn bfs_pairs(
    a: &Generator,
    b: &Generator,
    differs: impl Fn(Option<StateId>, Option<StateId>) -> bool,
) -> Option<Vec<EventId>> {
    type Pair = (Option<StateId>, Option<StateId>);
    let start: Pair = (a.initial(), b.initial());
    if start == (None, None) {
        return None;
    }
    let mut parent: HashMap<Pair, Option<(Pair, EventId)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(pair) = queue.pop_front() {
        if differs(pair.0, pair.1) {
            let mut path = Vec::new();
            let mut cur = pair;
            while let Some(Some((p, e))) = parent.get(&cur) {
                path.push(*e);
                cur = *p;
            }
            path.reverse();
            return Some(path);
        }
        let mut events: Vec<EventId> = Vec::new();
        if let Some(q) = pair.0 {
            events.extend(a.outgoing(q).iter().map(|p| p.0));
        }
        if let Some(q) = pair.1 {
            events.extend(b.outgoing(q).iter().map(|p| p.0));
        }
        events.sort_unstable();
        events.dedup();
        for e in events {
            let next = (
                pair.0.and_then(|q| a.next(q, e)),
                pair.1.and_then(|q| b.next(q, e)),
            );
            if next == (None, None) || parent.contains_key(&next) {
                continue;
            }
            parent.insert(next, Some((pair, e)));
            queue.push_back(next);
        }
    }
    None
}

/// Decides equality of the closed and of the marked languages separately.
pub fn language_equal(a: &Generator, b: &Generator) -> LanguageDiff {
    let closed_witness = bfs_pairs(a, b, |x, y| x.is_some() != y.is_some());
    let (ta, tb) = (trim(a), trim(b));
    let marked_witness = bfs_pairs(&ta, &tb, |x, y| {
        x.is_some_and(|q| ta.is_marked(q)) != y.is_some_and(|q| tb.is_marked(q))
    });
    LanguageDiff {
        closed_witness,
        marked_witness,
    }
}

/// Adds a selfloop on each of `events` at every state.
pub fn selfloop(g: &Generator, events: &EventSet) -> Result<Generator> {
    for (s, e, t) in g.transitions() {
        if events.contains(&e) && s != t {
            return Err(Error::SelfloopConflict {
                generator: g.name().to_string(),
                event: e,
            });
        }
    }
    let alphabet: EventSet = g.alphabet().union(events).copied().collect();
    let mut b = Builder::new(g.name(), alphabet);
    let q0 = g.initial();
    let order: Vec<StateId> = match q0 {
        Some(q0) => std::iter::once(q0)
            .chain((0..g.state_count()).filter(|&q| q != q0))
            .collect(),
        None => Vec::new(),
    };
    let mut pos = vec![0; g.state_count()];
    for (i, &q) in order.iter().enumerate() {
        pos[q] = i;
        b.add_state(g.is_marked(q));
    }
    for (s, e, t) in g.transitions() {
        b.add_transition(pos[s], e, pos[t]);
    }
    for &q in &order {
        for &e in events {
            b.add_transition(pos[q], e, pos[q]);
        }
    }
    let out = b.finish();
    Ok(match g.labels() {
        Some(l) => out.with_labels(order.iter().map(|&q| l[q].clone()).collect()),
        None => out,
    })
}

/// Erases the unobservable events of `s`, preserving order.
pub fn project_string(s: &[EventId], mask: &ObservationMask) -> Vec<EventId> {
    s.iter()
        .copied()
        .filter(|&e| mask.is_observable(e))
        .collect()
}
