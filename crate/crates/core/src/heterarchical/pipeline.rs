use super::{
    build_decentralized_plant, compose_subsystem, coupled_plants, minimal_observer_extension,
    shared_alphabet, synthesize_coordinator, synthesize_decentralized, ObserverCheck,
};
use crate::automata::{
    is_nonblocking, language_equal, project_generator, sync, sync_product_within, trim, EventId,
    EventSet, EventTable, Generator, ObservationMask,
};
use crate::error::{Error, Result};
use crate::localization::{
    localize, merge_local_controllers, reduce_supervisor, verify_control_equivalence,
    LocalController, Localization,
};
use crate::synthesis::PoSupervisor;
use crate::verify::{bounded_difference, Lockstep};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;
pub const DEFAULT_THEOREM_DEPTH: usize = 12;

/// A member of a subsystem: a plant component or the supervisor of a
/// specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleRef {
    Plant(String),
    Supervisor(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    pub name: String,
    pub members: Vec<ModuleRef>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub plants: Vec<Generator>,
    pub specs: Vec<Generator>,
    pub table: EventTable,
    pub mask: ObservationMask,
    pub groups: Vec<GroupSpec>,
    /// Specifications whose supervisors sit between the groups.
    pub between: Vec<String>,
    pub abstraction_seed: Option<EventSet>,
    /// Drop supervisors that cannot affect nonblocking; honoured only under
    /// full observation.
    pub harmless_removal: bool,
    pub state_budget: usize,
    pub theorem_depth: usize,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        for g in self.plants.iter().chain(&self.specs) {
            self.table.check_covers(g)?;
        }
        for p in &self.plants {
            if !self
                .specs
                .iter()
                .any(|s| !s.alphabet().is_disjoint(p.alphabet()))
            {
                return Err(Error::Precondition(format!(
                    "plant `{}` is coupled to no specification",
                    p.name()
                )));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for g in self.plants.iter().chain(&self.specs) {
            if !names.insert(g.name()) {
                return Err(Error::Precondition(format!(
                    "duplicate name `{}`",
                    g.name()
                )));
            }
        }
        for group in &self.groups {
            for m in &group.members {
                self.resolve_ref(m)?;
            }
        }
        for b in &self.between {
            self.spec_index(b)?;
        }
        Ok(())
    }

    fn spec_index(&self, name: &str) -> Result<usize> {
        let bare = name.strip_suffix("SUP").unwrap_or(name);
        self.specs
            .iter()
            .position(|s| s.name() == name || s.name() == bare)
            .ok_or_else(|| Error::Precondition(format!("unknown specification `{name}`")))
    }

    fn resolve_ref(&self, m: &ModuleRef) -> Result<usize> {
        match m {
            ModuleRef::Plant(n) => self
                .plants
                .iter()
                .position(|p| p.name() == n)
                .ok_or_else(|| Error::Precondition(format!("unknown plant `{n}`"))),
            ModuleRef::Supervisor(n) => self.spec_index(n),
        }
    }

    /// Resolves a bare name: a plant name, a specification name, or a
    /// specification name with a `SUP` suffix.
    pub fn module_ref(&self, name: &str) -> Result<ModuleRef> {
        if self.plants.iter().any(|p| p.name() == name) {
            return Ok(ModuleRef::Plant(name.to_string()));
        }
        let i = self.spec_index(name)?;
        Ok(ModuleRef::Supervisor(self.specs[i].name().to_string()))
    }
}

/// A supervisor or coordinator together with the plant it was built for.
#[derive(Debug, Clone)]
pub struct Module {
    pub name: String,
    pub plant: Generator,
    pub components: Vec<String>,
    pub sup: PoSupervisor,
}

#[derive(Debug, Clone)]
pub struct GroupResult {
    pub name: String,
    pub subsystem: Generator,
    pub blocking: bool,
    pub coordinator: Option<Module>,
    /// The nonblocking subsystem: trim product of the subsystem and its
    /// coordinator (the subsystem itself if no coordinator was needed).
    pub nonblocking: Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub witness: Option<Vec<EventId>>,
}

impl Check {
    fn new(name: impl Into<String>, witness: Option<Vec<EventId>>) -> Self {
        Check {
            name: name.into(),
            pass: witness.is_none(),
            witness,
        }
    }

    fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            witness: None,
        }
    }
}

/// One line of the run report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub artifact: String,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimized_states: Option<usize>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct TopGroup {
    pub product: Generator,
    pub blocking: bool,
    pub coordinator: Option<Module>,
}

#[derive(Debug, Clone)]
pub struct HeterarchicalArray {
    pub supervisors: Vec<Module>,
    pub groups: Vec<GroupResult>,
    /// Reduced models of the supervisors between groups.
    pub reduced: Vec<Generator>,
    pub shared: EventSet,
    pub extended: EventSet,
    pub abstractions: Vec<Generator>,
    pub top: Option<TopGroup>,
    pub localizations: Vec<(String, Localization)>,
    /// Per-event controllers after merging across supervisors.
    pub merged: Vec<LocalController>,
    /// Controlled events per plant component.
    pub by_agent: BTreeMap<String, Vec<EventId>>,
    pub stages: Vec<StageRecord>,
}

impl HeterarchicalArray {
    pub fn supervisor(&self, name: &str) -> Option<&Module> {
        self.supervisors.iter().find(|m| m.name == name)
    }

    /// All coordinators, group coordinators first.
    pub fn coordinators(&self) -> Vec<&Module> {
        self.groups
            .iter()
            .filter_map(|g| g.coordinator.as_ref())
            .chain(self.top.iter().filter_map(|t| t.coordinator.as_ref()))
            .collect()
    }

    /// Local controllers named `<module>_<event>` across all modules.
    pub fn controllers(&self) -> Vec<&LocalController> {
        self.localizations
            .iter()
            .flat_map(|(_, l)| l.controllers.iter())
            .collect()
    }
}

fn in_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn strip_sup(name: &str) -> &str {
    name.strip_suffix("SUP").unwrap_or(name)
}

pub fn run_pipeline(manifest: &Manifest) -> Result<HeterarchicalArray> {
    in_stage("manifest", manifest.validate())?;
    let mask = &manifest.mask;
    let table = &manifest.table;
    let mut stages = Vec::new();

    // decentralized supervisors
    let mut supervisors = Vec::new();
    for spec in &manifest.specs {
        let (plant, sup) = in_stage(
            "decentralized",
            synthesize_decentralized(spec, &manifest.plants, mask, table),
        )?;
        let components = coupled_plants(spec, &manifest.plants)
            .into_iter()
            .map(|i| manifest.plants[i].name().to_string())
            .collect();
        stages.push(StageRecord {
            stage: "decentralized".into(),
            artifact: sup.automaton.name().to_string(),
            states: sup.state_count(),
            minimized_states: Some(sup.minimized_size()),
            checks: vec![Check::flag(
                "unobservable events only selfloop",
                sup.automaton
                    .transitions()
                    .all(|(x, e, y)| x == y || mask.is_observable(e)),
            )],
        });
        supervisors.push(Module {
            name: sup.automaton.name().to_string(),
            plant,
            components,
            sup,
        });
    }

    let full_observation = mask.is_full();
    let harmless = |i: usize| -> bool {
        manifest.harmless_removal
            && full_observation
            && manifest.specs[i].state_count() > 0
            && is_harmless(&supervisors[i])
    };

    // subsystems and their coordinators
    let mut groups = Vec::new();
    let mut coordinator_count = 0;
    for group in &manifest.groups {
        let mut members: Vec<&Generator> = Vec::new();
        for m in &group.members {
            let i = manifest.resolve_ref(m)?;
            match m {
                ModuleRef::Plant(_) => members.push(&manifest.plants[i]),
                ModuleRef::Supervisor(_) if harmless(i) => {}
                ModuleRef::Supervisor(_) => members.push(&supervisors[i].sup.automaton),
            }
        }
        let sub = in_stage("subsystem", compose_subsystem(&group.name, &members))?;
        let blocking = !is_nonblocking(&sub).holds();
        stages.push(StageRecord {
            stage: "subsystem".into(),
            artifact: group.name.clone(),
            states: trim(&sub).state_count(),
            minimized_states: None,
            checks: vec![Check::flag("nonblocking", !blocking)],
        });
        let (coordinator, nonblocking) = if blocking {
            coordinator_count += 1;
            let name = format!("CO{coordinator_count}");
            let co = in_stage(
                "coordinator",
                synthesize_coordinator(&name, &sub, mask, table),
            )?;
            let nsub = trim(&sync(&[&sub, &co.automaton]))
                .without_labels()
                .with_name(format!("N{}", group.name));
            stages.push(StageRecord {
                stage: "coordinator".into(),
                artifact: name.clone(),
                states: co.state_count(),
                minimized_states: Some(co.minimized_size()),
                checks: vec![Check::flag("nonblocking", is_nonblocking(&nsub).holds())],
            });
            stages.push(StageRecord {
                stage: "subsystem".into(),
                artifact: nsub.name().to_string(),
                states: nsub.state_count(),
                minimized_states: None,
                checks: vec![],
            });
            let module = Module {
                name,
                plant: sub.clone(),
                components: group
                    .members
                    .iter()
                    .map(|m| match m {
                        ModuleRef::Plant(n) | ModuleRef::Supervisor(n) => n.clone(),
                    })
                    .collect(),
                sup: co,
            };
            (Some(module), nsub)
        } else {
            (None, trim(&sub).without_labels())
        };
        groups.push(GroupResult {
            name: group.name.clone(),
            subsystem: sub,
            blocking,
            coordinator,
            nonblocking,
        });
    }

    // reduced in-between supervisors
    let mut reduced = Vec::new();
    for b in &manifest.between {
        let i = manifest.spec_index(b)?;
        if harmless(i) {
            continue;
        }
        let m = &supervisors[i];
        let sim = reduce_supervisor(&m.sup, &m.plant, table);
        let eq = verify_control_equivalence(&m.plant, &m.sup.automaton, &[&sim]);
        stages.push(StageRecord {
            stage: "reduction".into(),
            artifact: sim.name().to_string(),
            states: sim.state_count(),
            minimized_states: None,
            checks: vec![Check::new(
                "control equivalence",
                eq.closed_witness.or(eq.marked_witness),
            )],
        });
        reduced.push(sim);
    }

    // abstraction and top-level coordination
    let mut shared = EventSet::new();
    let mut extended = EventSet::new();
    let mut abstractions = Vec::new();
    let mut top = None;
    if groups.len() + reduced.len() > 1 && !groups.is_empty() {
        let mut parts: Vec<&Generator> = groups.iter().map(|g| &g.nonblocking).collect();
        parts.extend(reduced.iter());
        shared = shared_alphabet(&parts);
        if let Some(seed) = &manifest.abstraction_seed {
            shared.extend(seed.iter().copied());
        }
        let nsubs: Vec<&Generator> = groups.iter().map(|g| &g.nonblocking).collect();
        extended = minimal_observer_extension(&nsubs, &shared);
        let mut checks = vec![Check::flag(
            "observer extension unchanged",
            extended == shared,
        )];
        for g in &nsubs {
            let local: EventSet = extended.intersection(g.alphabet()).copied().collect();
            let ObserverCheck { violation } = super::check_natural_observer(g, &local);
            checks.push(Check::new(
                format!("natural observer {}", g.name()),
                violation.map(|(mut s, t)| {
                    s.extend(t);
                    s
                }),
            ));
        }
        stages.push(StageRecord {
            stage: "shared alphabet".into(),
            artifact: "Sigma_sub".into(),
            states: extended.len(),
            minimized_states: None,
            checks,
        });
        for g in &groups {
            let qc = project_generator(&g.nonblocking, &extended)
                .without_labels()
                .with_name(format!("QC_{}", g.nonblocking.name()));
            stages.push(StageRecord {
                stage: "abstraction".into(),
                artifact: qc.name().to_string(),
                states: qc.state_count(),
                minimized_states: None,
                checks: vec![],
            });
            abstractions.push(qc);
        }
        let mut parts: Vec<&Generator> = abstractions.iter().collect();
        parts.extend(reduced.iter());
        let product = sync(&parts).without_labels().with_name("TOP");
        let blocking = !is_nonblocking(&product).holds();
        stages.push(StageRecord {
            stage: "top group".into(),
            artifact: "TOP".into(),
            states: trim(&product).state_count(),
            minimized_states: None,
            checks: vec![Check::flag("nonblocking", !blocking)],
        });
        let coordinator = if blocking {
            let name = format!("CO{}", coordinator_count + 1);
            let co = in_stage(
                "coordinator",
                synthesize_coordinator(&name, &product, mask, table),
            )?;
            let closed = sync(&[&product, &co.automaton]);
            stages.push(StageRecord {
                stage: "coordinator".into(),
                artifact: name.clone(),
                states: co.state_count(),
                minimized_states: Some(co.minimized_size()),
                checks: vec![Check::flag("nonblocking", is_nonblocking(&closed).holds())],
            });
            Some(Module {
                name,
                plant: product.clone(),
                components: parts.iter().map(|g| g.name().to_string()).collect(),
                sup: co,
            })
        } else {
            None
        };
        top = Some(TopGroup {
            product,
            blocking,
            coordinator,
        });
    }

    // localization
    let mut localizations = Vec::new();
    let mut modules: Vec<&Module> = supervisors.iter().collect();
    modules.extend(
        groups
            .iter()
            .filter_map(|g| g.coordinator.as_ref())
            .chain(top.iter().filter_map(|t| t.coordinator.as_ref())),
    );
    for m in &modules {
        let mut named = m.sup.clone();
        named.automaton = named.automaton.with_name(strip_sup(&m.name));
        let loc = in_stage("localization", localize(&named, &m.plant, table))?;
        let gs: Vec<&Generator> = loc.controllers.iter().map(|c| &c.automaton).collect();
        let eq = verify_control_equivalence(&m.plant, &m.sup.automaton, &gs);
        let mut checks = vec![Check::new(
            "control equivalence",
            eq.closed_witness.or(eq.marked_witness),
        )];
        for c in &loc.controllers {
            checks.push(Check::flag(
                format!("invariants {}", c.automaton.name()),
                c.check_invariants(mask).is_ok(),
            ));
        }
        for c in &loc.controllers {
            stages.push(StageRecord {
                stage: "local controller".into(),
                artifact: c.automaton.name().to_string(),
                states: c.state_count(),
                minimized_states: None,
                checks: vec![],
            });
        }
        stages.push(StageRecord {
            stage: "localization".into(),
            artifact: m.name.clone(),
            states: loc.controllers.len(),
            minimized_states: None,
            checks,
        });
        localizations.push((m.name.clone(), loc));
    }

    let mut per_event: BTreeMap<EventId, Vec<LocalController>> = BTreeMap::new();
    for (_, loc) in &localizations {
        for c in &loc.controllers {
            per_event.entry(c.event).or_default().push(c.clone());
        }
    }
    let mut merged = Vec::new();
    let mut by_agent: BTreeMap<String, Vec<EventId>> = BTreeMap::new();
    for (e, locs) in per_event {
        let m = in_stage("merge", merge_local_controllers(&locs))?;
        stages.push(StageRecord {
            stage: "merged controller".into(),
            artifact: m.automaton.name().to_string(),
            states: m.state_count(),
            minimized_states: None,
            checks: vec![Check::flag("invariants", m.check_invariants(mask).is_ok())],
        });
        merged.push(m);
        if let Some(agent) = manifest.plants.iter().find(|p| p.alphabet().contains(&e)) {
            by_agent
                .entry(agent.name().to_string())
                .or_default()
                .push(e);
        }
    }

    Ok(HeterarchicalArray {
        supervisors,
        groups,
        reduced,
        shared,
        extended,
        abstractions,
        top,
        localizations,
        merged,
        by_agent,
        stages,
    })
}

/// Conservative harmlessness test: the supervisor leaves both languages of
/// its own plant untouched, so removing it cannot change anything.
fn is_harmless(m: &Module) -> bool {
    language_equal(&sync(&[&m.plant, &m.sup.automaton]), &m.plant).equal()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum VerificationMode {
    Exact { states: usize },
    Bounded { depth: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub mode: VerificationMode,
    pub checks: Vec<Check>,
}

impl GlobalReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Safety, nonblocking, per-supervisor control equivalence and equality of
/// the localized system with the supervised one. Exact when the supervised
/// system fits the state budget, bounded-depth otherwise.
pub fn verify_global_equivalence(array: &HeterarchicalArray, manifest: &Manifest) -> GlobalReport {
    let mut checks = Vec::new();
    for (name, loc) in &array.localizations {
        let m = array
            .supervisors
            .iter()
            .chain(array.coordinators())
            .find(|m| &m.name == name)
            .expect("localization belongs to a module");
        let gs: Vec<&Generator> = loc.controllers.iter().map(|c| &c.automaton).collect();
        let eq = verify_control_equivalence(&m.plant, &m.sup.automaton, &gs);
        checks.push(Check::new(
            format!("control equivalence {name}"),
            eq.closed_witness.or(eq.marked_witness),
        ));
    }
    let sups: Vec<&Generator> = array
        .supervisors
        .iter()
        .chain(array.coordinators())
        .map(|m| &m.sup.automaton)
        .collect();
    let locs: Vec<&Generator> = array.merged.iter().map(|c| &c.automaton).collect();
    let mut report = verify_supervised_system(manifest, &sups, &locs);
    checks.append(&mut report.checks);
    report.checks = checks;
    report
}

/// Safety and nonblocking of the plant under `supervisors`, and equality of
/// the plant under `locs` with it.
pub fn verify_supervised_system(
    manifest: &Manifest,
    supervisors: &[&Generator],
    locs: &[&Generator],
) -> GlobalReport {
    let plants: Vec<&Generator> = manifest.plants.iter().collect();
    let mut sys_parts = plants.clone();
    sys_parts.extend(supervisors.iter().copied());
    let mut loc_parts = plants;
    loc_parts.extend(locs.iter().copied());
    let mut checks = Vec::new();
    let budget = manifest.state_budget;
    let exact = sync_product_within(&sys_parts, budget).and_then(|sys| {
        let loc = sync_product_within(&loc_parts, budget)?;
        Some((sys.generator, loc.generator))
    });
    let mode = match exact {
        Some((sys, loc)) => {
            let with_specs = {
                let mut parts: Vec<&Generator> = vec![&sys];
                parts.extend(manifest.specs.iter());
                sync(&parts)
            };
            let safety = language_equal(&with_specs, &sys);
            checks.push(Check::new(
                "safety",
                safety.closed_witness.or(safety.marked_witness),
            ));
            let nb = is_nonblocking(&sys);
            checks.push(Check::new("nonblocking", nb.blocking.map(|(_, s)| s)));
            let eq = language_equal(&loc, &sys);
            checks.push(Check::new(
                "localized system equals supervised system",
                eq.closed_witness.or(eq.marked_witness),
            ));
            VerificationMode::Exact {
                states: sys.state_count(),
            }
        }
        None => {
            let depth = manifest.theorem_depth;
            let sys = Lockstep::new(sys_parts.clone());
            let with_specs = {
                let mut parts = sys_parts.clone();
                parts.extend(manifest.specs.iter());
                Lockstep::new(parts)
            };
            checks.push(Check::new(
                "safety",
                bounded_difference(&with_specs, &sys, depth),
            ));
            checks.push(Check::new("nonblocking", bounded_blocking(&sys, depth)));
            checks.push(Check::new(
                "localized system equals supervised system",
                bounded_difference(&Lockstep::new(loc_parts.clone()), &sys, depth),
            ));
            VerificationMode::Bounded { depth }
        }
    };
    GlobalReport { mode, checks }
}

/// A string of length at most `depth` after which no marked state is found
/// within `2 * depth` more steps.
fn bounded_blocking(sys: &Lockstep, depth: usize) -> Option<Vec<EventId>> {
    use std::collections::{HashSet, VecDeque};
    let start = sys.initial()?;
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some((x, s)) = queue.pop_front() {
        let mut inner_seen = HashSet::new();
        inner_seen.insert(x.clone());
        let mut inner = VecDeque::from([(x.clone(), 0usize)]);
        let mut found = false;
        while let Some((y, d)) = inner.pop_front() {
            if sys.is_marked(&y) {
                found = true;
                break;
            }
            if d < 2 * depth {
                for e in sys.enabled(&y) {
                    let z = sys.step(&y, e).expect("enabled");
                    if inner_seen.insert(z.clone()) {
                        inner.push_back((z, d + 1));
                    }
                }
            }
        }
        if !found {
            return Some(s);
        }
        if s.len() < depth {
            for e in sys.enabled(&x) {
                let z = sys.step(&x, e).expect("enabled");
                if seen.insert(z.clone()) {
                    let mut s2 = s.clone();
                    s2.push(e);
                    queue.push_back((z, s2));
                }
            }
        }
    }
    None
}

/// Convenience: decentralized plant of the named specification.
pub fn decentralized_plant_of(manifest: &Manifest, spec: &str) -> Result<Generator> {
    let i = manifest.spec_index(spec)?;
    build_decentralized_plant(&manifest.specs[i], &manifest.plants)
}
