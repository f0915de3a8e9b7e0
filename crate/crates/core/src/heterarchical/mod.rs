//! Heterarchical synthesis: decentralized supervisors, subsystem
//! coordination over observer abstractions, and localization of the result.

mod observer;
mod pipeline;

pub use observer::{check_natural_observer, minimal_observer_extension, ObserverCheck};
pub use pipeline::{
    decentralized_plant_of, run_pipeline, verify_global_equivalence, verify_supervised_system,
    Check, GlobalReport, GroupResult, GroupSpec, HeterarchicalArray, Manifest, Module, ModuleRef,
    StageRecord, TopGroup, VerificationMode, DEFAULT_STATE_BUDGET, DEFAULT_THEOREM_DEPTH,
};

use crate::automata::{selfloop, sync, trim, EventSet, EventTable, Generator, ObservationMask};
use crate::error::{Error, Result};
use crate::synthesis::{build_po_supervisor, sup_rco, PoSupervisor, SynthesisProblem};

/// Indices of the plants sharing at least one event with `spec`.
pub fn coupled_plants(spec: &Generator, plants: &[Generator]) -> Vec<usize> {
    plants
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.alphabet().is_disjoint(spec.alphabet()))
        .map(|(i, _)| i)
        .collect()
}

/// Synchronous product of the plants event-coupled to `spec`.
pub fn build_decentralized_plant(spec: &Generator, plants: &[Generator]) -> Result<Generator> {
    let idx = coupled_plants(spec, plants);
    if idx.is_empty() {
        return Err(Error::Precondition(format!(
            "specification `{}` shares no event with any plant",
            spec.name()
        )));
    }
    let gs: Vec<&Generator> = idx.iter().map(|&i| &plants[i]).collect();
    Ok(sync(&gs).without_labels())
}

/// Partial-observation supervisor for one specification against its
/// decentralized plant, named `<spec>SUP`.
pub fn synthesize_decentralized(
    spec: &Generator,
    plants: &[Generator],
    mask: &ObservationMask,
    table: &EventTable,
) -> Result<(Generator, PoSupervisor)> {
    let plant = build_decentralized_plant(spec, plants)?;
    let problem = SynthesisProblem::new(plant.clone(), spec.clone(), mask.clone(), table.clone())?;
    let k = sup_rco(&problem);
    let name = format!("{}SUP", spec.name());
    if k.is_empty() {
        return Err(Error::EmptySynthesis { name });
    }
    let mut sup = build_po_supervisor(&k, &plant, mask, table)?;
    sup.automaton = sup.automaton.with_name(name);
    Ok((plant, sup))
}

/// Synchronous product of the given modules.
pub fn compose_subsystem(name: &str, members: &[&Generator]) -> Result<Generator> {
    if members.is_empty() {
        return Err(Error::Precondition(format!(
            "subsystem `{name}` has no members"
        )));
    }
    Ok(sync(members).without_labels().with_name(name))
}

/// Coordinator making `sub` nonblocking; a one-state selfloop when `sub` is
/// already nonblocking.
pub fn synthesize_coordinator(
    name: &str,
    sub: &Generator,
    mask: &ObservationMask,
    table: &EventTable,
) -> Result<PoSupervisor> {
    if crate::automata::is_nonblocking(sub).holds() {
        let one = Generator::new(name, 1, 0, [0], sub.alphabet().iter().copied(), [])?;
        let identity = selfloop(&one, sub.alphabet())?;
        return Ok(PoSupervisor::from_generator(identity, sub, table));
    }
    let problem = SynthesisProblem::new(sub.clone(), trim(sub), mask.clone(), table.clone())?;
    let k = sup_rco(&problem);
    if k.is_empty() {
        return Err(Error::EmptySynthesis {
            name: name.to_string(),
        });
    }
    let mut co = build_po_supervisor(&k, sub, mask, table)?;
    co.automaton = co.automaton.with_name(name);
    Ok(co)
}

/// Events that belong to at least two of the given alphabets.
pub fn shared_alphabet(gs: &[&Generator]) -> EventSet {
    let mut seen = EventSet::new();
    let mut shared = EventSet::new();
    for g in gs {
        for &e in g.alphabet() {
            if !seen.insert(e) {
                shared.insert(e);
            }
        }
    }
    shared
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{is_nonblocking, language_equal};
    use crate::fixtures;

    #[test]
    fn decentralized_plants_follow_event_coupling() {
        let plants = fixtures::plants();
        let specs = fixtures::specs();
        let names = |spec: &Generator| -> Vec<String> {
            coupled_plants(spec, &plants)
                .into_iter()
                .map(|i| plants[i].name().to_string())
                .collect()
        };
        assert_eq!(names(&specs[0]), ["A1", "A2"]);
        assert_eq!(names(&specs[8]), ["A1", "A2"]);
        let lonely = Generator::new("X", 1, 0, [0], [99], []).unwrap();
        assert!(build_decentralized_plant(&lonely, &plants).is_err());
    }

    #[test]
    fn shared_alphabet_is_order_independent() {
        let a = Generator::new("a", 1, 0, [0], [1, 2], []).unwrap();
        let b = Generator::new("b", 1, 0, [0], [2, 3], []).unwrap();
        let c = Generator::new("c", 1, 0, [0], [3, 4], []).unwrap();
        assert_eq!(shared_alphabet(&[&a, &b, &c]), EventSet::from([2, 3]));
        assert_eq!(shared_alphabet(&[&c, &a, &b]), EventSet::from([2, 3]));
        assert!(shared_alphabet(&[&a, &c]).is_empty());
    }

    #[test]
    fn coordinator_of_nonblocking_group_is_identity() {
        let g = Generator::new("g", 2, 0, [0], [1, 2], [(0, 1, 1), (1, 2, 0)]).unwrap();
        let t = fixtures::event_table();
        let co = synthesize_coordinator("CO", &g, &ObservationMask::full(), &t).unwrap();
        assert_eq!(co.state_count(), 1);
        assert!(language_equal(&sync(&[&g, &co.automaton]), &g).equal());
    }

    #[test]
    fn coordinator_removes_blocking() {
        // 3 (controllable) leads to a dead end
        let g =
            Generator::new("g", 3, 0, [0], [1, 2, 3], [(0, 1, 1), (1, 2, 0), (0, 3, 2)]).unwrap();
        let mut t = EventTable::new();
        for e in [1, 2, 3] {
            t.insert(
                e,
                crate::automata::EventAttrs {
                    controllable: e % 2 == 1,
                    observable: true,
                },
            )
            .unwrap();
        }
        let co = synthesize_coordinator("CO", &g, &ObservationMask::full(), &t).unwrap();
        assert!(is_nonblocking(&sync(&[&g, &co.automaton])).holds());
    }
}
