use clap::{Parser, Subcommand, ValueEnum};
use desloc::automata::{project_generator, sync, trim, EventId, EventSet, EventTable, Generator};
use desloc::heterarchical::{
    check_natural_observer, minimal_observer_extension, run_pipeline, synthesize_coordinator,
    verify_global_equivalence, verify_supervised_system, GlobalReport, VerificationMode,
};
use desloc::io::{self, load_automaton, load_controller, save_automaton, save_controller};
use desloc::localization::{
    localize, merge_local_controllers, reduce_supervisor, verify_control_equivalence,
    LocalController,
};
use desloc::synthesis::{
    build_po_supervisor, sup_rco_with, supcon, Ambient, PoSupervisor, SynthesisProblem,
};
use desloc::verify::{ClosedLoop, RefusalKind};
use desloc::{Error, ObservationMask};
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "desloc",
    version,
    about = "Supervisor synthesis and localization for discrete-event systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Problem {
    #[arg(long)]
    plant: Vec<PathBuf>,
    #[arg(long)]
    spec: PathBuf,
    /// Extra unobservable events, comma separated.
    #[arg(long, value_delimiter = ',')]
    unobservable: Vec<EventId>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AmbientArg {
    Spec,
    Controllable,
}

#[derive(Subcommand)]
enum Command {
    /// Synchronous product.
    Sync {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "SYNC")]
        name: String,
        #[command(flatten)]
        output: Output,
    },
    /// Reachable and coreachable part.
    Trim {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Supremal controllable sublanguage.
    Supcon {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        output: Output,
    },
    /// Supremal controllable and relatively observable sublanguage.
    Suprco {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value = "controllable")]
        ambient: AmbientArg,
        #[command(flatten)]
        output: Output,
    },
    /// Partial-observation supervisor realizing the relatively observable
    /// supremal sublanguage.
    Posup {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Coordinator making a subsystem nonblocking.
    Coord {
        input: PathBuf,
        #[arg(long, default_value = "CO")]
        name: String,
        #[arg(long, value_delimiter = ',')]
        unobservable: Vec<EventId>,
        #[command(flatten)]
        output: Output,
    },
    /// Natural observer check for the projection onto the kept events.
    ObserverCheck {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<EventId>,
    },
    /// Extends a seed alphabet until every projection is a natural observer.
    Minext {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<EventId>,
    },
    /// Natural projection onto the kept events.
    Abstract {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<EventId>,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Control-equivalent reduction of a supervisor.
    Reduce {
        #[arg(long, required = true)]
        plant: Vec<PathBuf>,
        #[arg(long)]
        sup: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// One local controller per disabled controllable event.
    Localize {
        #[arg(long, required = true)]
        plant: Vec<PathBuf>,
        #[arg(long)]
        sup: PathBuf,
        /// Directory receiving one file per controller.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Merges controllers for the same event.
    MergeLoc {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Checks a pipeline output directory: safety and nonblocking of the
    /// supervised system, and equality with the system under the merged
    /// local controllers.
    Verify { manifest: PathBuf, dir: PathBuf },
    /// Checks that local controllers are control equivalent to one supervisor.
    Equiv {
        #[arg(long, required = true)]
        plant: Vec<PathBuf>,
        #[arg(long)]
        sup: PathBuf,
        #[arg(required = true)]
        controllers: Vec<PathBuf>,
    },
    /// Replays a trace from standard input, one event id per line, printing
    /// accept or refuse for each event.
    Simulate {
        #[arg(long, required = true)]
        plant: Vec<PathBuf>,
        controllers: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        unobservable: Vec<EventId>,
    },
    /// Runs the full heterarchical pipeline described by a manifest.
    Pipeline {
        manifest: PathBuf,
        /// Overrides the manifest's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graphviz rendering.
    Dot {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Writes a bundled example corpus with its manifest.
    Fixtures {
        #[arg(value_enum)]
        corpus: Corpus,
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    Agv,
}

/// A run that completed but found a property violated.
struct Violation(String);

enum Failure {
    Input(String),
    Property(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Property(e.to_string())
        }
    }
}

impl From<Violation> for Failure {
    fn from(v: Violation) -> Self {
        Failure::Property(v.0)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_all(paths: &[PathBuf], table: &mut EventTable) -> CliResult<Vec<Generator>> {
    paths
        .iter()
        .map(|p| {
            let (g, t) = load_automaton(p)?;
            table.merge(&t)?;
            Ok(g)
        })
        .collect()
}

fn load_one(path: &Path, table: &mut EventTable) -> CliResult<Generator> {
    let (g, t) = load_automaton(path)?;
    table.merge(&t)?;
    Ok(g)
}

fn hide(table: &mut EventTable, events: &[EventId]) -> CliResult<ObservationMask> {
    for &e in events {
        table.hide(e)?;
    }
    Ok(table.mask())
}

fn plant_of(paths: &[PathBuf], table: &mut EventTable) -> CliResult<Generator> {
    let plants = load_all(paths, table)?;
    if plants.len() == 1 {
        return Ok(plants.into_iter().next().expect("one plant"));
    }
    let refs: Vec<&Generator> = plants.iter().collect();
    Ok(sync(&refs).without_labels().with_name("PLANT"))
}

fn problem(p: &Problem) -> CliResult<(SynthesisProblem, EventTable)> {
    if p.plant.is_empty() {
        return Err(Failure::Input("at least one --plant is required".into()));
    }
    let mut table = EventTable::new();
    let plant = plant_of(&p.plant, &mut table)?;
    let spec = load_one(&p.spec, &mut table)?;
    let mask = hide(&mut table, &p.unobservable)?;
    let problem = SynthesisProblem::new(plant, spec, mask, table.clone())?;
    Ok((problem, table))
}

fn emit(output: &Output, g: &Generator, table: &EventTable) -> CliResult {
    match &output.out {
        Some(path) => save_automaton(path, g, table)?,
        None => print!("{}", io::AutomatonFile::from_generator(g, table).to_json()),
    }
    Ok(())
}

fn emit_text(output: &Output, text: &str) -> CliResult {
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn events(set: &EventSet) -> String {
    set.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn trace(s: &[EventId]) -> String {
    if s.is_empty() {
        "ε".to_string()
    } else {
        s.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn supervisor(plant: &Generator, path: &Path, table: &mut EventTable) -> CliResult<PoSupervisor> {
    let g = load_one(path, table)?;
    Ok(PoSupervisor::from_generator(g, plant, table))
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Sync {
            inputs,
            name,
            output,
        } => {
            let mut table = EventTable::new();
            let gs = load_all(&inputs, &mut table)?;
            let refs: Vec<&Generator> = gs.iter().collect();
            emit(
                &output,
                &sync(&refs).without_labels().with_name(name),
                &table,
            )
        }
        Command::Trim { input, output } => {
            let mut table = EventTable::new();
            let g = load_one(&input, &mut table)?;
            emit(&output, &trim(&g), &table)
        }
        Command::Supcon { problem: p, output } => {
            let (p, table) = problem(&p)?;
            emit(&output, &supcon(&p), &table)
        }
        Command::Suprco {
            problem: p,
            ambient,
            output,
        } => {
            let (p, table) = problem(&p)?;
            let choice = match ambient {
                AmbientArg::Spec => Ambient::Specification,
                AmbientArg::Controllable => Ambient::Controllable,
            };
            emit(&output, &sup_rco_with(&p, choice), &table)
        }
        Command::Posup {
            problem: p,
            name,
            output,
        } => {
            let (p, table) = problem(&p)?;
            let k = sup_rco_with(&p, Ambient::default());
            let name = name.unwrap_or_else(|| format!("{}SUP", p.spec.name()));
            if k.is_empty() {
                return Err(Error::EmptySynthesis { name }.into());
            }
            let mut sup = build_po_supervisor(&k, &p.plant, &p.mask, &table)?;
            sup.automaton = sup.automaton.with_name(name);
            match &output.out {
                Some(path) => io::save_supervisor(path, &sup, &table)?,
                None => print!("{}", io::supervisor_file(&sup, &table).to_json()),
            }
            Ok(())
        }
        Command::Coord {
            input,
            name,
            unobservable,
            output,
        } => {
            let mut table = EventTable::new();
            let sub = load_one(&input, &mut table)?;
            let mask = hide(&mut table, &unobservable)?;
            let co = synthesize_coordinator(&name, &sub, &mask, &table)?;
            emit(&output, &co.automaton, &table)
        }
        Command::ObserverCheck { input, keep } => {
            let mut table = EventTable::new();
            let g = load_one(&input, &mut table)?;
            let keep: EventSet = keep.into_iter().collect();
            match check_natural_observer(&g, &keep).violation {
                None => {
                    println!("observer: yes");
                    Ok(())
                }
                Some((s, t)) => Err(Violation(format!(
                    "observer: no; after {} no continuation projecting to {} reaches a marked state",
                    trace(&s),
                    trace(&t)
                ))
                .into()),
            }
        }
        Command::Minext { inputs, seed } => {
            let mut table = EventTable::new();
            let gs = load_all(&inputs, &mut table)?;
            let refs: Vec<&Generator> = gs.iter().collect();
            let ext = minimal_observer_extension(&refs, &seed.into_iter().collect());
            println!("{}", events(&ext));
            Ok(())
        }
        Command::Abstract {
            input,
            keep,
            name,
            output,
        } => {
            let mut table = EventTable::new();
            let g = load_one(&input, &mut table)?;
            let keep: EventSet = keep.into_iter().collect();
            let name = name.unwrap_or_else(|| format!("QC_{}", g.name()));
            emit(
                &output,
                &project_generator(&g, &keep).with_name(name),
                &table,
            )
        }
        Command::Reduce { plant, sup, output } => {
            let mut table = EventTable::new();
            let plant = plant_of(&plant, &mut table)?;
            let sup = supervisor(&plant, &sup, &mut table)?;
            emit(&output, &reduce_supervisor(&sup, &plant, &table), &table)
        }
        Command::Localize { plant, sup, dir } => {
            let mut table = EventTable::new();
            let plant = plant_of(&plant, &mut table)?;
            let sup = supervisor(&plant, &sup, &mut table)?;
            let loc = localize(&sup, &plant, &table)?;
            for c in &loc.controllers {
                let path = dir.join(format!("{}.json", c.automaton.name()));
                save_controller(&path, c, &table)?;
                println!("{} {} states", path.display(), c.state_count());
            }
            if !loc.never_disabled.is_empty() {
                let never: EventSet = loc.never_disabled.iter().copied().collect();
                println!("never disabled: {}", events(&never));
            }
            Ok(())
        }
        Command::MergeLoc { inputs, output } => {
            let mut table = EventTable::new();
            let mut locs = Vec::new();
            for p in &inputs {
                let (c, t) = load_controller(p)?;
                table.merge(&t)?;
                locs.push(c);
            }
            let merged = merge_local_controllers(&locs)?;
            emit_text(&output, &io::controller_file(&merged, &table).to_json())
        }
        Command::Verify { manifest, dir } => {
            let loaded = io::load_manifest(&manifest)?;
            let artifacts = io::load_artifacts(&dir)?;
            let sups: Vec<&Generator> = artifacts.supervisors.iter().collect();
            let locs: Vec<&Generator> = artifacts.merged.iter().map(|c| &c.automaton).collect();
            let report = verify_supervised_system(&loaded.manifest, &sups, &locs);
            finish_report(&report)
        }
        Command::Equiv {
            plant,
            sup,
            controllers,
        } => {
            let mut table = EventTable::new();
            let plant = plant_of(&plant, &mut table)?;
            let sup = load_one(&sup, &mut table)?;
            let locs = load_all(&controllers, &mut table)?;
            let refs: Vec<&Generator> = locs.iter().collect();
            let eq = verify_control_equivalence(&plant, &sup, &refs);
            if let Some(w) = eq.closed_witness {
                return Err(
                    Violation(format!("closed behaviours differ after {}", trace(&w))).into(),
                );
            }
            if let Some(w) = eq.marked_witness {
                return Err(Violation(format!("marked behaviours differ on {}", trace(&w))).into());
            }
            println!("control equivalent");
            Ok(())
        }
        Command::Simulate {
            plant,
            controllers,
            unobservable,
        } => {
            let mut table = EventTable::new();
            let plant = plant_of(&plant, &mut table)?;
            let mut locs = Vec::new();
            for p in &controllers {
                let (c, t) = load_controller(p)?;
                table.merge(&t)?;
                locs.push(c);
            }
            let mask = hide(&mut table, &unobservable)?;
            let mut input = String::new();
            std::io::stdin()
                .read_to_string(&mut input)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
            let events = io::parse_trace(&input)?;
            simulate(plant, &locs, mask, &events)
        }
        Command::Pipeline { manifest, out } => {
            let loaded = io::load_manifest(&manifest)?;
            let array = run_pipeline(&loaded.manifest)?;
            let report = verify_global_equivalence(&array, &loaded.manifest);
            let out = out.unwrap_or(loaded.out);
            io::write_pipeline_output(&out, &array, &report, &loaded.manifest.table)?;
            for r in io::report_records(&array, &report) {
                let checks: Vec<String> = r
                    .checks
                    .iter()
                    .map(|c| format!("{}={}", c.name, if c.pass { "yes" } else { "no" }))
                    .collect();
                println!(
                    "{:<18} {:<16} {:>8}  {}",
                    r.stage,
                    r.artifact,
                    r.states,
                    checks.join(" ")
                );
            }
            finish_report(&report)
        }
        Command::Dot { input, output } => {
            let mut table = EventTable::new();
            let g = load_one(&input, &mut table)?;
            emit_text(&output, &io::export_dot(&g, &table))
        }
        Command::Fixtures { corpus, dir } => match corpus {
            Corpus::Agv => {
                let manifest = desloc::fixtures::manifest();
                io::save_manifest(&dir, "agv.json", &manifest, Path::new("out"))?;
                println!("{}", dir.join("agv.json").display());
                Ok(())
            }
        },
    }
}

fn finish_report(report: &GlobalReport) -> CliResult {
    let mode = match report.mode {
        VerificationMode::Exact { states } => format!("exact, {states} states"),
        VerificationMode::Bounded { depth } => format!("bounded, depth {depth}"),
    };
    if report.holds() {
        println!("verification passed ({mode})");
        return Ok(());
    }
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| match &c.witness {
            Some(w) => format!("{} (witness {})", c.name, trace(w)),
            None => c.name.clone(),
        })
        .collect();
    Err(Violation(format!(
        "verification failed ({mode}): {}",
        failed.join("; ")
    ))
    .into())
}

fn simulate(
    plant: Generator,
    locs: &[LocalController],
    mask: ObservationMask,
    events: &[EventId],
) -> CliResult {
    let Some(mut state) = ClosedLoop::from_local(plant, locs, mask) else {
        return Err(Failure::Input(
            "plant or controller has no initial state".into(),
        ));
    };
    for &e in events {
        match state.step(e) {
            Ok(next) => {
                println!("{e} accept");
                state = next;
            }
            Err(r) => {
                let why = match r.kind {
                    RefusalKind::Ineligible => "not eligible in",
                    RefusalKind::Disabled => "disabled by",
                };
                println!("{e} refuse ({why} {})", r.component);
            }
        }
    }
    println!("marked: {}", if state.is_marked() { "yes" } else { "no" });
    Ok(())
}
