use crate::automata::{determinize, silent_closure, EventId, EventSet, Generator, StateId};
use std::collections::{BTreeMap, HashMap, VecDeque};

/// Verdict of the natural observer check. A violation `(s, t)` means `P(s)t`
/// is the projection of a marked string but no continuation of `s` with
/// projection `t` is marked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverCheck {
    pub violation: Option<(Vec<EventId>, Vec<EventId>)>,
}

impl ObserverCheck {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

struct Subsets {
    index: HashMap<Vec<StateId>, usize>,
    sets: Vec<Vec<StateId>>,
}

impl Subsets {
    fn intern(&mut self, s: Vec<StateId>) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        self.sets.push(s.clone());
        self.index.insert(s, self.sets.len() - 1);
        self.sets.len() - 1
    }
}

/// Decides whether the natural projection onto `keep` is an observer for `g`.
///
/// For every reachable pair of a state `q` and the abstraction state `h`
/// reached by the same string, the marked continuations of `h` must all be
/// marked continuations of `q`; this is a language inclusion between two
/// subset automata, checked by a joint walk shared across all pairs.
pub fn check_natural_observer(g: &Generator, keep: &EventSet) -> ObserverCheck {
    let Some(q0) = g.initial() else {
        return ObserverCheck { violation: None };
    };
    let silent = |e: EventId| !keep.contains(&e);
    let det = determinize(g, &silent);
    let h = &det.generator;
    let marked = |set: &[StateId]| set.iter().any(|&q| g.is_marked(q));

    // reachable (q, h) pairs with a shortest string to each
    let mut seeds: Vec<((StateId, StateId), Vec<EventId>)> = Vec::new();
    let mut seen: HashMap<(StateId, StateId), usize> = HashMap::new();
    let mut queue = VecDeque::from([((q0, 0), Vec::new())]);
    seen.insert((q0, 0), 0);
    while let Some(((q, x), s)) = queue.pop_front() {
        for &(e, t) in g.outgoing(q) {
            let next = if silent(e) {
                (t, x)
            } else {
                match h.next(x, e) {
                    Some(y) => (t, y),
                    None => continue,
                }
            };
            if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(next) {
                slot.insert(0);
                let mut s2 = s.clone();
                s2.push(e);
                queue.push_back((next, s2));
            }
        }
        seeds.push(((q, x), s));
    }

    let mut subsets = Subsets {
        index: HashMap::new(),
        sets: Vec::new(),
    };
    let mut step_memo: HashMap<(usize, EventId), usize> = HashMap::new();
    // node -> (seed index, parent node, event)
    type Node = (usize, StateId);
    let mut parent: HashMap<Node, (usize, Option<(Node, EventId)>)> = HashMap::new();
    let mut queue: VecDeque<(usize, StateId)> = VecDeque::new();
    for (i, ((q, x), _)) in seeds.iter().enumerate() {
        let a = subsets.intern(silent_closure(g, [*q], &silent));
        if let std::collections::hash_map::Entry::Vacant(v) = parent.entry((a, *x)) {
            v.insert((i, None));
            queue.push_back((a, *x));
        }
    }
    while let Some((a, x)) = queue.pop_front() {
        if h.is_marked(x) && !marked(&subsets.sets[a]) {
            let mut t = Vec::new();
            let mut cur = (a, x);
            let seed = loop {
                let (seed, p) = parent[&cur];
                match p {
                    Some((prev, e)) => {
                        t.push(e);
                        cur = prev;
                    }
                    None => break seed,
                }
            };
            t.reverse();
            return ObserverCheck {
                violation: Some((seeds[seed].1.clone(), t)),
            };
        }
        let seed = parent[&(a, x)].0;
        for &(e, y) in h.outgoing(x) {
            let a2 = match step_memo.get(&(a, e)) {
                Some(&a2) => a2,
                None => {
                    let moved: Vec<StateId> = subsets.sets[a]
                        .iter()
                        .filter_map(|&q| g.next(q, e))
                        .collect();
                    let a2 = subsets.intern(silent_closure(g, moved, &silent));
                    step_memo.insert((a, e), a2);
                    a2
                }
            };
            if let std::collections::hash_map::Entry::Vacant(v) = parent.entry((a2, y)) {
                v.insert((seed, Some(((a, x), e))));
                queue.push_back((a2, y));
            }
        }
    }
    ObserverCheck { violation: None }
}

/// Grows `seed` until the projection is an observer for every generator:
/// each round adds the smallest unkept event on the violating string, or
/// the smallest unkept event of the offending generator if that string has
/// none.
pub fn minimal_observer_extension(gs: &[&Generator], seed: &EventSet) -> EventSet {
    let mut keep = seed.clone();
    let mut memo: BTreeMap<usize, bool> = BTreeMap::new();
    loop {
        let mut grew = false;
        for (i, g) in gs.iter().enumerate() {
            if memo.get(&i) == Some(&true) {
                continue;
            }
            let local: EventSet = keep.intersection(g.alphabet()).copied().collect();
            match check_natural_observer(g, &local).violation {
                None => {
                    memo.insert(i, true);
                }
                Some((s, _)) => {
                    let added = s
                        .iter()
                        .copied()
                        .filter(|e| !keep.contains(e))
                        .min()
                        .or_else(|| g.alphabet().difference(&keep).next().copied())
                        .expect("identity projection is an observer");
                    keep.insert(added);
                    grew = true;
                    memo.clear();
                    break;
                }
            }
        }
        if !grew {
            return keep;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_projection_is_observer() {
        let g = Generator::new("g", 3, 0, [2], [1, 2], [(0, 1, 1), (1, 2, 2), (0, 2, 0)]).unwrap();
        assert!(check_natural_observer(&g, g.alphabet()).holds());
    }

    #[test]
    fn hidden_choice_breaks_observer() {
        // 0 -u-> 1 -a-> 2(m), 0 -v-> 3 (dead end, no a); projection keeps a
        let g =
            Generator::new("g", 4, 0, [2], [1, 8, 9], [(0, 9, 1), (1, 1, 2), (0, 8, 3)]).unwrap();
        let check = check_natural_observer(&g, &EventSet::from([1]));
        let (s, t) = check.violation.unwrap();
        assert_eq!(s, vec![8]);
        assert_eq!(t, vec![1]);
        let ext = minimal_observer_extension(&[&g], &EventSet::from([1]));
        assert!(ext.contains(&8));
        let local: EventSet = ext.intersection(g.alphabet()).copied().collect();
        assert!(check_natural_observer(&g, &local).holds());
    }
}
