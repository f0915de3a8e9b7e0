//! JSON file formats, DOT export and pipeline output.

use crate::automata::{EventAttrs, EventId, EventSet, EventTable, Generator, ObservationMask};
use crate::error::{Error, Result};
use crate::heterarchical::{
    GlobalReport, GroupSpec, HeterarchicalArray, Manifest, ModuleRef, StageRecord,
    VerificationMode, DEFAULT_STATE_BUDGET, DEFAULT_THEOREM_DEPTH,
};
use crate::localization::LocalController;
use crate::synthesis::PoSupervisor;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub id: EventId,
    pub controllable: bool,
    pub observable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// The event a local controller is responsible for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<EventId>,
    /// Per state, the controllable events a supervisor disables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disabled: Option<Vec<Vec<EventId>>>,
}

impl Annotations {
    fn is_empty(&self) -> bool {
        self.labels.is_none() && self.controls.is_none() && self.disabled.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonFile {
    pub name: String,
    pub states: usize,
    pub initial: usize,
    pub marker: Vec<usize>,
    pub events: Vec<EventEntry>,
    pub transitions: Vec<[u64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Annotations>,
}

impl AutomatonFile {
    /// Canonical document for `g`; attributes of events missing from
    /// `table` default to uncontrollable and observable.
    pub fn from_generator(g: &Generator, table: &EventTable) -> Self {
        let events = g
            .alphabet()
            .iter()
            .map(|&id| {
                let a = table.get(id).unwrap_or(EventAttrs {
                    controllable: false,
                    observable: true,
                });
                EventEntry {
                    id,
                    controllable: a.controllable,
                    observable: a.observable,
                }
            })
            .collect();
        let annotations = Annotations {
            labels: g.labels().map(|l| l.to_vec()),
            ..Annotations::default()
        };
        AutomatonFile {
            name: g.name().to_string(),
            states: g.state_count(),
            initial: g.initial().unwrap_or(0),
            marker: g.markers().collect(),
            events,
            transitions: g
                .transitions()
                .map(|(s, e, t)| [s as u64, e as u64, t as u64])
                .collect(),
            annotations: (!annotations.is_empty()).then_some(annotations),
        }
    }

    pub fn to_generator(&self) -> Result<(Generator, EventTable)> {
        let mut table = EventTable::new();
        for e in &self.events {
            table.insert(
                e.id,
                EventAttrs {
                    controllable: e.controllable,
                    observable: e.observable,
                },
            )?;
        }
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for &[s, e, t] in &self.transitions {
            let e = EventId::try_from(e)
                .map_err(|_| Error::malformed(&self.name, format!("event id {e} too large")))?;
            transitions.push((s as usize, e, t as usize));
        }
        let mut g = Generator::new(
            self.name.clone(),
            self.states,
            self.initial,
            self.marker.iter().copied(),
            self.events.iter().map(|e| e.id),
            transitions,
        )?;
        if let Some(labels) = self.annotations.as_ref().and_then(|a| a.labels.clone()) {
            if labels.len() != self.states {
                return Err(Error::malformed(
                    &self.name,
                    "label count differs from state count",
                ));
            }
            g = g.with_labels(labels);
        }
        Ok((g, table))
    }

    /// Canonical text: one event or transition per line.
    pub fn to_json(&self) -> String {
        let rows = |items: Vec<String>| {
            if items.is_empty() {
                "[]".to_string()
            } else {
                format!("[\n    {}\n  ]", items.join(",\n    "))
            }
        };
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"name\": {},", compact(&self.name));
        let _ = writeln!(out, "  \"states\": {},", self.states);
        let _ = writeln!(out, "  \"initial\": {},", self.initial);
        let _ = writeln!(out, "  \"marker\": {},", compact(&self.marker));
        let events = self.events.iter().map(compact).collect();
        let _ = writeln!(out, "  \"events\": {},", rows(events));
        let transitions = self.transitions.iter().map(compact).collect();
        let _ = write!(out, "  \"transitions\": {}", rows(transitions));
        if let Some(a) = &self.annotations {
            let _ = write!(out, ",\n  \"annotations\": {}", compact(a));
        }
        out.push_str("\n}\n");
        out
    }
}

fn compact<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("value serializes")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn format_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn parse_automaton(text: &str, origin: &Path) -> Result<(Generator, EventTable)> {
    let file: AutomatonFile = serde_json::from_str(text).map_err(|e| format_error(origin, e))?;
    file.to_generator()
}

pub fn load_automaton(path: &Path) -> Result<(Generator, EventTable)> {
    parse_automaton(&read(path)?, path)
}

pub fn save_automaton(path: &Path, g: &Generator, table: &EventTable) -> Result<()> {
    write(path, &AutomatonFile::from_generator(g, table).to_json())
}

/// A supervisor document carrying its disabled-event map.
pub fn supervisor_file(sup: &PoSupervisor, table: &EventTable) -> AutomatonFile {
    let mut file = AutomatonFile::from_generator(&sup.automaton, table);
    let mut ann = file.annotations.take().unwrap_or_default();
    ann.disabled = Some(
        sup.disabled
            .iter()
            .map(|d| d.iter().copied().collect())
            .collect(),
    );
    file.annotations = Some(ann);
    file
}

/// A local controller document carrying its controlled event.
pub fn controller_file(c: &LocalController, table: &EventTable) -> AutomatonFile {
    let mut file = AutomatonFile::from_generator(&c.automaton, table);
    let mut ann = file.annotations.take().unwrap_or_default();
    ann.controls = Some(c.event);
    file.annotations = Some(ann);
    file
}

pub fn save_supervisor(path: &Path, sup: &PoSupervisor, table: &EventTable) -> Result<()> {
    write(path, &supervisor_file(sup, table).to_json())
}

pub fn save_controller(path: &Path, c: &LocalController, table: &EventTable) -> Result<()> {
    write(path, &controller_file(c, table).to_json())
}

/// Loads a controller file; the controlled event comes from the annotation.
pub fn load_controller(path: &Path) -> Result<(LocalController, EventTable)> {
    let text = read(path)?;
    let file: AutomatonFile = serde_json::from_str(&text).map_err(|e| format_error(path, e))?;
    let event = file
        .annotations
        .as_ref()
        .and_then(|a| a.controls)
        .ok_or_else(|| format_error(path, "missing `annotations.controls`"))?;
    let (automaton, table) = file.to_generator()?;
    Ok((LocalController { automaton, event }, table))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFlags {
    #[serde(default)]
    pub harmless_removal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub plants: Vec<PathBuf>,
    pub specs: Vec<PathBuf>,
    #[serde(default)]
    pub unobservable: Vec<EventId>,
    #[serde(default)]
    pub groups: Vec<GroupEntry>,
    #[serde(default)]
    pub between: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstraction_seed: Option<Vec<EventId>>,
    #[serde(default)]
    pub flags: ManifestFlags,
    pub out: PathBuf,
}

/// A loaded manifest with its output directory resolved against the
/// manifest's location.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub out: PathBuf,
}

pub fn load_manifest(path: &Path) -> Result<LoadedManifest> {
    let text = read(path)?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| format_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut table = EventTable::new();
    let mut load_all = |paths: &[PathBuf]| -> Result<Vec<Generator>> {
        paths
            .iter()
            .map(|p| {
                let (g, t) = load_automaton(&base.join(p))?;
                table.merge(&t)?;
                Ok(g)
            })
            .collect()
    };
    let plants = load_all(&file.plants)?;
    let specs = load_all(&file.specs)?;
    for &e in &file.unobservable {
        table.hide(e)?;
    }
    let mask = ObservationMask::from_unobservable(table.unobservable());
    let mut manifest = Manifest {
        plants,
        specs,
        table,
        mask,
        groups: Vec::new(),
        between: file.between.clone(),
        abstraction_seed: file
            .abstraction_seed
            .as_ref()
            .map(|s| s.iter().copied().collect::<EventSet>()),
        harmless_removal: file.flags.harmless_removal,
        state_budget: file.flags.state_budget.unwrap_or(DEFAULT_STATE_BUDGET),
        theorem_depth: file.flags.theorem_depth.unwrap_or(DEFAULT_THEOREM_DEPTH),
    };
    for g in &file.groups {
        let members = g
            .members
            .iter()
            .map(|m| manifest.module_ref(m))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| format_error(path, e))?;
        manifest.groups.push(GroupSpec {
            name: g.name.clone(),
            members,
        });
    }
    manifest.validate().map_err(|e| format_error(path, e))?;
    Ok(LoadedManifest {
        manifest,
        out: base.join(&file.out),
    })
}

/// Writes every plant and specification of `manifest` as `<name>.json`
/// under `dir`, plus the manifest itself as `dir/<file_name>`.
pub fn save_manifest(dir: &Path, file_name: &str, manifest: &Manifest, out: &Path) -> Result<()> {
    let paths = |gs: &[Generator]| -> Result<Vec<PathBuf>> {
        gs.iter()
            .map(|g| {
                let rel = PathBuf::from(format!("{}.json", g.name()));
                save_automaton(&dir.join(&rel), g, &manifest.table)?;
                Ok(rel)
            })
            .collect()
    };
    let plants = paths(&manifest.plants)?;
    let specs = paths(&manifest.specs)?;
    let member = |m: &ModuleRef| match m {
        ModuleRef::Plant(n) => n.clone(),
        ModuleRef::Supervisor(n) => format!("{n}SUP"),
    };
    let file = ManifestFile {
        plants,
        specs,
        unobservable: manifest.mask.unobservable().iter().copied().collect(),
        groups: manifest
            .groups
            .iter()
            .map(|g| GroupEntry {
                name: g.name.clone(),
                members: g.members.iter().map(member).collect(),
            })
            .collect(),
        between: manifest.between.clone(),
        abstraction_seed: manifest
            .abstraction_seed
            .as_ref()
            .map(|s| s.iter().copied().collect()),
        flags: ManifestFlags {
            harmless_removal: manifest.harmless_removal,
            theorem_depth: Some(manifest.theorem_depth),
            state_budget: Some(manifest.state_budget),
        },
        out: out.to_path_buf(),
    };
    write(
        &dir.join(file_name),
        &(serde_json::to_string_pretty(&file).expect("manifest serializes") + "\n"),
    )
}

/// DOT rendering: markers double-circled, an entry arrow on the initial
/// state, controllable edges bold with a tick on the label, unobservable
/// edges dashed.
pub fn export_dot(g: &Generator, table: &EventTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(g.name()));
    if g.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n  __init [shape=point];\n");
    for q in 0..g.state_count() {
        let shape = if g.is_marked(q) {
            "doublecircle"
        } else {
            "circle"
        };
        let label = g.labels().map_or_else(|| q.to_string(), |l| l[q].clone());
        let _ = writeln!(out, "  {q} [shape={shape}, label={}];", quote(&label));
    }
    let _ = writeln!(out, "  __init -> {};", g.initial().unwrap_or(0));
    for (s, e, t) in g.transitions() {
        let mut attrs = Vec::new();
        if table.is_controllable(e) {
            attrs.push(format!("label={}", quote(&format!("{e}'"))));
            attrs.push("style=bold".to_string());
        } else {
            attrs.push(format!("label={}", quote(&e.to_string())));
        }
        if !table.is_observable(e) {
            attrs.push("style=dashed".to_string());
        }
        let _ = writeln!(out, "  {s} -> {t} [{}];", attrs.join(", "));
    }
    out.push_str("}\n");
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub kind: String,
    pub name: String,
    pub states: usize,
    pub json: String,
    pub dot: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Index {
    pub artifacts: Vec<IndexEntry>,
    pub shared_alphabet: Vec<EventId>,
    pub controllers_by_agent: std::collections::BTreeMap<String, Vec<EventId>>,
}

/// The run report: the pipeline stages followed by one record for the
/// global verification.
pub fn report_records(array: &HeterarchicalArray, global: &GlobalReport) -> Vec<StageRecord> {
    let mut records = array.stages.clone();
    let (artifact, states) = match global.mode {
        VerificationMode::Exact { states } => ("exact".to_string(), states),
        VerificationMode::Bounded { depth } => (format!("bounded depth {depth}"), 0),
    };
    records.push(StageRecord {
        stage: "verification".into(),
        artifact,
        states,
        minimized_states: None,
        checks: global.checks.clone(),
    });
    records
}

/// Writes every artifact as JSON and DOT under `out`, plus `index.json` and
/// `report.json`.
pub fn write_pipeline_output(
    out: &Path,
    array: &HeterarchicalArray,
    global: &GlobalReport,
    table: &EventTable,
) -> Result<Index> {
    let mut index = Index {
        artifacts: Vec::new(),
        shared_alphabet: array.extended.iter().copied().collect(),
        controllers_by_agent: array.by_agent.clone(),
    };
    let mut emit = |kind: &str, g: &Generator, json: String| -> Result<()> {
        let rel_json = format!("{kind}/{}.json", g.name());
        let rel_dot = format!("{kind}/{}.dot", g.name());
        write(&out.join(&rel_json), &json)?;
        write(&out.join(&rel_dot), &export_dot(g, table))?;
        index.artifacts.push(IndexEntry {
            kind: kind.to_string(),
            name: g.name().to_string(),
            states: g.state_count(),
            json: rel_json,
            dot: rel_dot,
        });
        Ok(())
    };
    let sup_json = |sup: &PoSupervisor| supervisor_file(sup, table).to_json();
    let plain = |g: &Generator| AutomatonFile::from_generator(g, table).to_json();
    for m in &array.supervisors {
        emit("supervisors", &m.sup.automaton, sup_json(&m.sup))?;
    }
    for g in &array.groups {
        emit("subsystems", &g.subsystem, plain(&g.subsystem))?;
        if let Some(co) = &g.coordinator {
            emit("coordinators", &co.sup.automaton, sup_json(&co.sup))?;
            emit("subsystems", &g.nonblocking, plain(&g.nonblocking))?;
        }
    }
    for r in &array.reduced {
        emit("reduced", r, plain(r))?;
    }
    for a in &array.abstractions {
        emit("abstractions", a, plain(a))?;
    }
    if let Some(top) = &array.top {
        emit("subsystems", &top.product, plain(&top.product))?;
        if let Some(co) = &top.coordinator {
            emit("coordinators", &co.sup.automaton, sup_json(&co.sup))?;
        }
    }
    let ctrl_json = |c: &LocalController| controller_file(c, table).to_json();
    for c in array.controllers() {
        emit("controllers", &c.automaton, ctrl_json(c))?;
    }
    for c in &array.merged {
        emit("merged", &c.automaton, ctrl_json(c))?;
    }
    let records = report_records(array, global);
    write(
        &out.join("report.json"),
        &(serde_json::to_string_pretty(&records).expect("report serializes") + "\n"),
    )?;
    write(
        &out.join("index.json"),
        &(serde_json::to_string_pretty(&index).expect("index serializes") + "\n"),
    )?;
    Ok(index)
}

/// Supervisors, coordinators and merged controllers read back from a
/// pipeline output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub supervisors: Vec<Generator>,
    pub merged: Vec<LocalController>,
    pub table: EventTable,
}

pub fn load_artifacts(dir: &Path) -> Result<Artifacts> {
    let index_path = dir.join("index.json");
    let index: Index =
        serde_json::from_str(&read(&index_path)?).map_err(|e| format_error(&index_path, e))?;
    let mut out = Artifacts {
        supervisors: Vec::new(),
        merged: Vec::new(),
        table: EventTable::new(),
    };
    for entry in &index.artifacts {
        let path = dir.join(&entry.json);
        match entry.kind.as_str() {
            "supervisors" | "coordinators" => {
                let (g, t) = load_automaton(&path)?;
                out.table.merge(&t)?;
                out.supervisors.push(g);
            }
            "merged" => {
                let (c, t) = load_controller(&path)?;
                out.table.merge(&t)?;
                out.merged.push(c);
            }
            _ => {}
        }
    }
    if out.supervisors.is_empty() {
        return Err(format_error(&index_path, "index lists no supervisors"));
    }
    Ok(out)
}

/// Parses a trace: one decimal event id per line; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<EventId>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<EventId>().map_err(|_| Error::Format {
                path: "trace".into(),
                reason: format!("`{l}` is not an event id"),
            })
        })
        .collect()
}
