//! Per-event localization of partial-observation supervisors and
//! control-equivalent supervisor reduction.
//!
//! Both work by greedily merging supervisor states whose control decisions
//! never contradict each other, closing each merge under successors so the
//! quotient stays deterministic.

use crate::automata::{
    self, language_equal, sync, Builder, EventId, EventSet, EventTable, Generator, ObservationMask,
    StateId,
};
use crate::error::{Error, Result};
use crate::synthesis::PoSupervisor;
use std::collections::BTreeMap;

/// Control decisions of each supervisor state for a set of target events,
/// evaluated over the supervisor/plant pairs that are actually reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlData {
    pub targets: EventSet,
    /// Target events defined at the state and eligible in the plant.
    pub enabled: Vec<EventSet>,
    /// Target events eligible in the plant but undefined at the state.
    pub disabled: Vec<EventSet>,
    pub marked_sup: Vec<bool>,
    /// Some plant state paired with this supervisor state is marked.
    pub marked_plant: Vec<bool>,
}

impl ControlData {
    pub fn state_count(&self) -> usize {
        self.enabled.len()
    }

    pub fn is_enabled(&self, x: StateId, alpha: EventId) -> bool {
        self.enabled[x].contains(&alpha)
    }

    pub fn is_disabled(&self, x: StateId, alpha: EventId) -> bool {
        self.disabled[x].contains(&alpha)
    }

    /// Controllable target events disabled at some state.
    pub fn ever_disabled(&self) -> EventSet {
        self.disabled.iter().flatten().copied().collect()
    }
}

fn control_data_for(sup: &Generator, plant: &Generator, targets: EventSet) -> ControlData {
    let n = sup.state_count();
    let mut d = ControlData {
        targets,
        enabled: vec![EventSet::new(); n],
        disabled: vec![EventSet::new(); n],
        marked_sup: (0..n).map(|x| sup.is_marked(x)).collect(),
        marked_plant: vec![false; n],
    };
    let prod = automata::sync_product(&[sup, plant]);
    for comp in &prod.components {
        let (x, q) = (comp[0], comp[1]);
        if plant.is_marked(q) {
            d.marked_plant[x] = true;
        }
        for &(e, _) in plant.outgoing(q) {
            if !d.targets.contains(&e) || !sup.alphabet().contains(&e) {
                continue;
            }
            if sup.next(x, e).is_some() {
                d.enabled[x].insert(e);
            } else {
                d.disabled[x].insert(e);
            }
        }
    }
    d
}

/// Control data of `sup` for the single controllable event `alpha`.
pub fn compute_control_data(
    sup: &PoSupervisor,
    plant: &Generator,
    table: &EventTable,
    alpha: EventId,
) -> Result<ControlData> {
    if !table.is_controllable(alpha) {
        return Err(Error::NotControllableEvent { event: alpha });
    }
    if !sup.automaton.alphabet().contains(&alpha) {
        return Err(Error::Precondition(format!(
            "event {alpha} is not in the alphabet of `{}`",
            sup.automaton.name()
        )));
    }
    Ok(control_data_for(
        &sup.automaton,
        plant,
        EventSet::from([alpha]),
    ))
}

pub fn control_consistent(x: StateId, y: StateId, d: &ControlData) -> bool {
    d.enabled[x].is_disjoint(&d.disabled[y])
        && d.disabled[x].is_disjoint(&d.enabled[y])
        && !(d.marked_plant[x] && d.marked_plant[y] && d.marked_sup[x] != d.marked_sup[y])
}

#[derive(Clone)]
struct Class {
    enabled: EventSet,
    disabled: EventSet,
    /// plant-marked member that is marked / unmarked in the supervisor
    marked: bool,
    unmarked: bool,
    succ: BTreeMap<EventId, StateId>,
}

impl Class {
    fn compatible(&self, other: &Class) -> bool {
        self.enabled.is_disjoint(&other.disabled)
            && self.disabled.is_disjoint(&other.enabled)
            && !(self.marked && other.unmarked)
            && !(self.unmarked && other.marked)
    }
}

#[derive(Clone)]
struct Partition {
    parent: Vec<StateId>,
    class: Vec<Option<Class>>,
}

impl Partition {
    fn find(&self, mut x: StateId) -> StateId {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b` together with all successor classes
    /// the merge forces; returns false, leaving garbage behind, if some
    /// forced merge is inconsistent.
    fn merge(&mut self, a: StateId, b: StateId) -> bool {
        let mut work = vec![(a, b)];
        while let Some((a, b)) = work.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            let cb = self.class[rb].take().expect("root has class data");
            let ca = self.class[ra].as_mut().expect("root has class data");
            if !ca.compatible(&cb) {
                return false;
            }
            ca.enabled.extend(cb.enabled.iter().copied());
            ca.disabled.extend(cb.disabled.iter().copied());
            ca.marked |= cb.marked;
            ca.unmarked |= cb.unmarked;
            for (e, t) in cb.succ {
                match ca.succ.get(&e) {
                    Some(&s) => work.push((s, t)),
                    None => {
                        ca.succ.insert(e, t);
                    }
                }
            }
            self.parent[rb] = ra;
        }
        true
    }
}

/// Greedy partition of the supervisor states into control-consistent cells
/// closed under successors. Cells are listed by their smallest member.
pub fn build_control_cover(sup: &Generator, d: &ControlData) -> Vec<Vec<StateId>> {
    let n = sup.state_count();
    let mut part = Partition {
        parent: (0..n).collect(),
        class: (0..n)
            .map(|x| {
                Some(Class {
                    enabled: d.enabled[x].clone(),
                    disabled: d.disabled[x].clone(),
                    marked: d.marked_plant[x] && d.marked_sup[x],
                    unmarked: d.marked_plant[x] && !d.marked_sup[x],
                    succ: sup.outgoing(x).iter().copied().collect(),
                })
            })
            .collect(),
    };
    for i in 0..n {
        for j in i + 1..n {
            if part.find(i) == part.find(j) {
                continue;
            }
            let snapshot = part.clone();
            if !part.merge(i, j) {
                part = snapshot;
            }
        }
    }
    let mut cells: BTreeMap<StateId, Vec<StateId>> = BTreeMap::new();
    for x in 0..n {
        cells.entry(part.find(x)).or_default().push(x);
    }
    let mut out: Vec<Vec<StateId>> = cells.into_values().collect();
    out.sort();
    out
}

/// Checks that every cell is pairwise consistent and that each event sends
/// all members of a cell into a single cell.
pub fn check_cover(sup: &Generator, d: &ControlData, cover: &[Vec<StateId>]) -> Result<()> {
    let cell_of = cell_index(sup, cover)?;
    for cell in cover {
        for (i, &x) in cell.iter().enumerate() {
            for &y in &cell[i + 1..] {
                if !control_consistent(x, y, d) {
                    return Err(Error::Precondition(format!(
                        "states {x} and {y} share a cell but are not control consistent"
                    )));
                }
            }
        }
        let mut target: BTreeMap<EventId, usize> = BTreeMap::new();
        for &x in cell {
            for &(e, t) in sup.outgoing(x) {
                if *target.entry(e).or_insert(cell_of[t]) != cell_of[t] {
                    return Err(Error::Precondition(format!(
                        "cell containing {x} has no unique successor under event {e}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn cell_index(sup: &Generator, cover: &[Vec<StateId>]) -> Result<Vec<usize>> {
    let mut cell_of = vec![usize::MAX; sup.state_count()];
    for (c, cell) in cover.iter().enumerate() {
        for &x in cell {
            if x >= cell_of.len() || cell_of[x] != usize::MAX {
                return Err(Error::Precondition(format!(
                    "state {x} is out of range or appears in two cells"
                )));
            }
            cell_of[x] = c;
        }
    }
    if cell_of.contains(&usize::MAX) {
        return Err(Error::Precondition("cover misses a state".into()));
    }
    Ok(cell_of)
}

/// Quotient of `sup` by `cover`. Events undefined at every member of a cell
/// and never disabled there become selfloops; `keep` decides which
/// all-selfloop events stay in the alphabet.
fn quotient_by_cover(
    sup: &Generator,
    d: &ControlData,
    cover: &[Vec<StateId>],
    name: String,
    keep: &dyn Fn(EventId) -> bool,
) -> Result<Generator> {
    check_cover(sup, d, cover)?;
    let cell_of = cell_index(sup, cover)?;
    let init_cell = match sup.initial() {
        Some(q) => cell_of[q],
        None => return Ok(Generator::empty(name, sup.alphabet().clone())),
    };
    // initial cell first, then the rest in order
    let mut order: Vec<usize> = vec![init_cell];
    order.extend((0..cover.len()).filter(|&c| c != init_cell));
    let mut pos = vec![0; cover.len()];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    let mut delta: Vec<BTreeMap<EventId, usize>> = vec![BTreeMap::new(); cover.len()];
    let mut marked = vec![false; cover.len()];
    for &c in &order {
        let cell = &cover[c];
        let p = pos[c];
        marked[p] = !cell.iter().any(|&x| d.marked_plant[x] && !d.marked_sup[x]);
        for &x in cell {
            for &(e, t) in sup.outgoing(x) {
                delta[p].insert(e, pos[cell_of[t]]);
            }
        }
        for &e in sup.alphabet() {
            if !delta[p].contains_key(&e) && !cell.iter().any(|&x| d.disabled[x].contains(&e)) {
                delta[p].insert(e, p);
            }
        }
    }
    let alphabet: EventSet = sup
        .alphabet()
        .iter()
        .copied()
        .filter(|&e| keep(e) || delta.iter().enumerate().any(|(p, m)| m.get(&e) != Some(&p)))
        .collect();
    let mut b = Builder::new(name, alphabet.clone());
    for &m in &marked {
        b.add_state(m);
    }
    for (p, m) in delta.iter().enumerate() {
        for (&e, &t) in m {
            if alphabet.contains(&e) {
                b.add_transition(p, e, t);
            }
        }
    }
    Ok(b.finish())
}

/// A controller that may disable only `event`.
#[derive(Debug, Clone)]
pub struct LocalController {
    pub automaton: Generator,
    pub event: EventId,
}

impl LocalController {
    pub fn alphabet(&self) -> &EventSet {
        self.automaton.alphabet()
    }

    pub fn state_count(&self) -> usize {
        self.automaton.state_count()
    }

    /// Structural checks: the alphabet holds `event` plus observable events
    /// only, unobservable events label only selfloops, and every other event
    /// is defined everywhere.
    pub fn check_invariants(&self, mask: &ObservationMask) -> Result<()> {
        let g = &self.automaton;
        let fail = |reason: String| Err(Error::malformed(g.name(), reason));
        if !g.alphabet().contains(&self.event) {
            return fail(format!(
                "controlled event {} missing from alphabet",
                self.event
            ));
        }
        for &e in g.alphabet() {
            if e != self.event && !mask.is_observable(e) {
                return fail(format!("unobservable event {e} in alphabet"));
            }
        }
        for (s, e, t) in g.transitions() {
            if !mask.is_observable(e) && s != t {
                return fail(format!("unobservable event {e} moves {s} to {t}"));
            }
        }
        for x in 0..g.state_count() {
            for &e in g.alphabet() {
                if e != self.event && g.next(x, e).is_none() {
                    return fail(format!("event {e} blocked at state {x}"));
                }
            }
        }
        Ok(())
    }
}

/// Builds the controller for `alpha` induced by `cover`.
pub fn induce_local_controller(
    sup: &PoSupervisor,
    d: &ControlData,
    cover: &[Vec<StateId>],
    alpha: EventId,
) -> Result<LocalController> {
    let sup_name = sup.automaton.name();
    let automaton = quotient_by_cover(
        &sup.automaton,
        d,
        cover,
        format!("{sup_name}_{alpha}"),
        &|e| e == alpha,
    )?;
    Ok(LocalController {
        automaton,
        event: alpha,
    })
}

/// Result of localizing one supervisor.
#[derive(Debug, Clone)]
pub struct Localization {
    pub controllers: Vec<LocalController>,
    /// Controllable events of the supervisor that it never disables.
    pub never_disabled: Vec<EventId>,
}

/// One local controller per controllable event that `sup` disables somewhere,
/// named `<sup>_<event>`. A supervisor that disables nothing but still
/// unmarks plant-marked strings gets a single marking controller.
pub fn localize(sup: &PoSupervisor, plant: &Generator, table: &EventTable) -> Result<Localization> {
    let mut out = Localization {
        controllers: Vec::new(),
        never_disabled: Vec::new(),
    };
    for &alpha in sup.automaton.alphabet() {
        if !table.is_controllable(alpha) {
            continue;
        }
        let d = compute_control_data(sup, plant, table, alpha)?;
        if d.ever_disabled().is_empty() {
            out.never_disabled.push(alpha);
            continue;
        }
        let cover = build_control_cover(&sup.automaton, &d);
        out.controllers
            .push(induce_local_controller(sup, &d, &cover, alpha)?);
    }
    // every controller carries the marking decisions; without any, one
    // controller that disables nothing still has to mark
    let g = &sup.automaton;
    if out.controllers.is_empty() {
        let carrier = out
            .never_disabled
            .first()
            .or_else(|| g.alphabet().iter().next())
            .copied();
        if let Some(alpha) = carrier {
            let d = control_data_for(g, plant, EventSet::from([alpha]));
            if (0..d.state_count()).any(|x| d.marked_plant[x] && !d.marked_sup[x]) {
                let cover = build_control_cover(g, &d);
                out.never_disabled.retain(|&e| e != alpha);
                out.controllers
                    .push(induce_local_controller(sup, &d, &cover, alpha)?);
            }
        }
    }
    Ok(out)
}

/// Synchronous product of controllers for the same event.
pub fn merge_local_controllers(locs: &[LocalController]) -> Result<LocalController> {
    let Some(first) = locs.first() else {
        return Err(Error::Precondition("no controllers to merge".into()));
    };
    if let Some(other) = locs.iter().find(|l| l.event != first.event) {
        return Err(Error::Precondition(format!(
            "cannot merge controller for {} with controller for {}",
            first.event, other.event
        )));
    }
    let gs: Vec<&Generator> = locs.iter().map(|l| &l.automaton).collect();
    let automaton = if gs.len() == 1 {
        gs[0].clone()
    } else {
        sync(&gs).without_labels()
    };
    Ok(LocalController {
        automaton: automaton.with_name(format!("LOC_{}", first.event)),
        event: first.event,
    })
}

/// Shortest string on which plant-under-controllers and plant-under-`sup`
/// differ, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlEquivalence {
    pub closed_witness: Option<Vec<EventId>>,
    pub marked_witness: Option<Vec<EventId>>,
}

impl ControlEquivalence {
    pub fn holds(&self) -> bool {
        self.closed_witness.is_none() && self.marked_witness.is_none()
    }
}

pub fn verify_control_equivalence(
    plant: &Generator,
    sup: &Generator,
    locs: &[&Generator],
) -> ControlEquivalence {
    let mut with_locs: Vec<&Generator> = vec![plant];
    with_locs.extend(locs.iter().copied());
    let diff = language_equal(&sync(&with_locs), &sync(&[plant, sup]));
    ControlEquivalence {
        closed_witness: diff.closed_witness,
        marked_witness: diff.marked_witness,
    }
}

/// Control-equivalent reduction of `sup` over all its controllable events at
/// once. Falls back to `sup` itself if the reduced model fails the
/// equivalence check or is not smaller.
pub fn reduce_supervisor(sup: &PoSupervisor, plant: &Generator, table: &EventTable) -> Generator {
    let g = &sup.automaton;
    let targets: EventSet = g
        .alphabet()
        .iter()
        .copied()
        .filter(|&e| table.is_controllable(e))
        .collect();
    let d = control_data_for(g, plant, targets);
    let cover = build_control_cover(g, &d);
    let name = format!("{}SIM", g.name().strip_suffix("SUP").unwrap_or(g.name()));
    let Ok(reduced) = quotient_by_cover(g, &d, &cover, name.clone(), &|_| false) else {
        return g.clone();
    };
    if reduced.state_count() <= g.state_count()
        && verify_control_equivalence(plant, g, &[&reduced]).holds()
    {
        reduced
    } else {
        g.clone().with_name(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::EventAttrs;
    use crate::synthesis::{build_po_supervisor, sup_rco, SynthesisProblem};

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

    /// Two machines feeding a one-slot buffer: 1 and 3 start (controllable),
    /// 2 and 4 finish; the buffer is filled by 2 and emptied by 3.
    fn buffer_problem() -> (Generator, PoSupervisor, EventTable) {
        let m1 = Generator::new("M1", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let m2 = Generator::new("M2", 2, 0, [0], [3, 4], [(0, 3, 1), (1, 4, 0)]).unwrap();
        let plant = sync(&[&m1, &m2]);
        let spec = Generator::new("B", 2, 0, [0], [2, 3], [(0, 2, 1), (1, 3, 0)]).unwrap();
        let t = table(&[
            (1, true, true),
            (2, false, true),
            (3, true, true),
            (4, false, true),
        ]);
        let p =
            SynthesisProblem::new(plant.clone(), spec, ObservationMask::full(), t.clone()).unwrap();
        let k = sup_rco(&p);
        let sup = build_po_supervisor(&k, &plant, &ObservationMask::full(), &t).unwrap();
        (plant, sup, t)
    }

    #[test]
    fn consistency_is_reflexive_and_symmetric() {
        let (plant, sup, t) = buffer_problem();
        for alpha in [1, 3] {
            let d = compute_control_data(&sup, &plant, &t, alpha).unwrap();
            for x in 0..d.state_count() {
                assert!(control_consistent(x, x, &d));
                for y in 0..d.state_count() {
                    assert_eq!(control_consistent(x, y, &d), control_consistent(y, x, &d));
                }
            }
        }
    }

    #[test]
    fn uncontrollable_target_is_rejected() {
        let (plant, sup, t) = buffer_problem();
        assert!(matches!(
            compute_control_data(&sup, &plant, &t, 2),
            Err(Error::NotControllableEvent { event: 2 })
        ));
    }

    #[test]
    fn buffer_controllers_have_two_states() {
        let (plant, sup, t) = buffer_problem();
        let loc = localize(&sup, &plant, &t).unwrap();
        let sizes: Vec<_> = loc
            .controllers
            .iter()
            .map(|c| (c.event, c.state_count()))
            .collect();
        assert_eq!(sizes, vec![(1, 2), (3, 2)]);
        for c in &loc.controllers {
            c.check_invariants(&ObservationMask::full()).unwrap();
        }
        let gs: Vec<&Generator> = loc.controllers.iter().map(|c| &c.automaton).collect();
        assert!(verify_control_equivalence(&plant, &sup.automaton, &gs).holds());
    }

    #[test]
    fn dropping_a_controller_breaks_equivalence() {
        let (plant, sup, t) = buffer_problem();
        let loc = localize(&sup, &plant, &t).unwrap();
        let only_first = [&loc.controllers[0].automaton];
        let eq = verify_control_equivalence(&plant, &sup.automaton, &only_first);
        assert!(!eq.holds());
    }

    #[test]
    fn cover_is_consistent_and_closed() {
        let (plant, sup, t) = buffer_problem();
        let d = compute_control_data(&sup, &plant, &t, 1).unwrap();
        let cover = build_control_cover(&sup.automaton, &d);
        check_cover(&sup.automaton, &d, &cover).unwrap();
    }

    #[test]
    fn merge_requires_same_event() {
        let (plant, sup, t) = buffer_problem();
        let loc = localize(&sup, &plant, &t).unwrap();
        assert!(merge_local_controllers(&loc.controllers).is_err());
        let one = merge_local_controllers(&loc.controllers[..1]).unwrap();
        assert_eq!(one.state_count(), loc.controllers[0].state_count());
    }

    #[test]
    fn supervisor_that_disables_nothing_localizes_to_nothing() {
        let (plant, _, t) = buffer_problem();
        let sup = PoSupervisor::from_generator(plant.clone(), &plant, &t);
        let loc = localize(&sup, &plant, &t).unwrap();
        assert!(loc.controllers.is_empty());
        assert_eq!(loc.never_disabled, vec![1, 3]);
    }

    #[test]
    fn reduction_is_control_equivalent_and_not_larger() {
        let (plant, sup, t) = buffer_problem();
        let r = reduce_supervisor(&sup, &plant, &t);
        assert!(r.state_count() <= sup.state_count());
        assert!(verify_control_equivalence(&plant, &sup.automaton, &[&r]).holds());
    }
}
