//! The AGV workcell corpus: five vehicles, four shared zones, three
//! workstation buffers and the input parts station.
//!
//! Odd events are controllable; {13, 23, 31, 42, 53} are unobservable.

use crate::automata::{EventAttrs, EventId, EventTable, Generator, ObservationMask};
use crate::heterarchical::{
    GroupSpec, Manifest, ModuleRef, DEFAULT_STATE_BUDGET, DEFAULT_THEOREM_DEPTH,
};

pub const UNOBSERVABLE: [EventId; 5] = [13, 23, 31, 42, 53];

/// Σ_sub expected from the top-level shared alphabet step.
pub const SHARED_EVENTS: [EventId; 11] = [11, 12, 21, 24, 26, 32, 33, 50, 51, 52, 53];

fn cycle(name: &str, events: &[EventId]) -> Generator {
    let n = events.len();
    let transitions: Vec<_> = events
        .iter()
        .enumerate()
        .map(|(i, &e)| (i, e, (i + 1) % n))
        .collect();
    Generator::new(name, n, 0, [0], events.iter().copied(), transitions)
        .expect("vehicle cycle is well formed")
}

pub fn plants() -> Vec<Generator> {
    vec![
        cycle("A1", &[11, 10, 13, 12]),
        cycle("A2", &[21, 18, 20, 22, 23, 24, 26, 28]),
        cycle("A3", &[33, 34, 31, 32]),
        cycle("A4", &[41, 40, 42, 43, 44, 46]),
        cycle("A5", &[51, 50, 53, 52]),
    ]
}

/// Two vehicles sharing a zone: state 1 means the first is inside, state 2
/// the second.
fn zone(name: &str, first: [[EventId; 2]; 2], second: [[EventId; 2]; 2]) -> Generator {
    let [enter1, exit1] = first;
    let [enter2, exit2] = second;
    let mut t = Vec::new();
    for e in enter1 {
        t.push((0, e, 1));
    }
    for e in exit1 {
        t.push((1, e, 0));
    }
    for e in enter2 {
        t.push((0, e, 2));
    }
    for e in exit2 {
        t.push((2, e, 0));
    }
    let alphabet = t.iter().map(|&(_, e, _)| e).collect::<Vec<_>>();
    Generator::new(name, 3, 0, [0], alphabet, t).expect("zone spec is well formed")
}

fn buffer(name: &str, n: usize, transitions: &[(usize, EventId, usize)]) -> Generator {
    let alphabet = transitions.iter().map(|&(_, e, _)| e).collect::<Vec<_>>();
    Generator::new(name, n, 0, [0], alphabet, transitions.iter().copied())
        .expect("buffer spec is well formed")
}

pub fn specs() -> Vec<Generator> {
    vec![
        zone("Z1", [[11, 13], [10, 12]], [[20, 23], [22, 24]]),
        zone("Z2", [[18, 24], [20, 26]], [[33, 31], [34, 32]]),
        zone("Z3", [[21, 26], [18, 28]], [[41, 44], [40, 46]]),
        zone("Z4", [[40, 43], [42, 44]], [[51, 53], [50, 52]]),
        buffer("WS13", 2, &[(0, 32, 1), (1, 50, 0)]),
        buffer("WS14", 2, &[(0, 46, 1), (1, 50, 0)]),
        buffer("WS2", 2, &[(0, 12, 1), (1, 34, 0)]),
        buffer("WS3", 2, &[(0, 28, 1), (1, 42, 0)]),
        buffer("IPS", 3, &[(0, 10, 1), (1, 13, 0), (0, 22, 2), (2, 23, 0)]),
    ]
}

pub fn event_table() -> EventTable {
    let mut table = EventTable::new();
    for g in plants() {
        for &e in g.alphabet() {
            table
                .insert(
                    e,
                    EventAttrs {
                        controllable: e % 2 == 1,
                        observable: !UNOBSERVABLE.contains(&e),
                    },
                )
                .expect("event attributes are consistent");
        }
    }
    table
}

pub fn mask() -> ObservationMask {
    ObservationMask::from_unobservable(UNOBSERVABLE)
}

/// The two-subsystem decomposition with IPS, Z1 and Z2 in between.
pub fn manifest() -> Manifest {
    let plant = |n: &str| ModuleRef::Plant(n.to_string());
    let sup = |n: &str| ModuleRef::Supervisor(n.to_string());
    Manifest {
        plants: plants(),
        specs: specs(),
        table: event_table(),
        mask: mask(),
        groups: vec![
            GroupSpec {
                name: "SUB1".into(),
                members: vec![
                    plant("A2"),
                    plant("A4"),
                    plant("A5"),
                    sup("WS3"),
                    sup("WS14"),
                    sup("Z3"),
                    sup("Z4"),
                ],
            },
            GroupSpec {
                name: "SUB2".into(),
                members: vec![
                    plant("A1"),
                    plant("A3"),
                    plant("A5"),
                    sup("WS2"),
                    sup("WS13"),
                ],
            },
        ],
        between: vec!["IPS".into(), "Z1".into(), "Z2".into()],
        abstraction_seed: None,
        harmless_removal: false,
        state_budget: DEFAULT_STATE_BUDGET,
        theorem_depth: DEFAULT_THEOREM_DEPTH,
    }
}
