use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use hybridplan::controller::{build_controller_dataset, Calibration, ControllerConfig, ControllerRecord, Skeleton};
use hybridplan::domain::generate::{
    generate_blocks_dataset, generate_maze_dataset, BlocksConfig, GenerationError, MazeConfig, Splits,
};
use hybridplan::domain::{validate_plan, BlocksWorld, DomainTag, MazeGrid, Problem, Split, World};
use hybridplan::emit::{emit_datasets, EmitConfig};
use hybridplan::eval::{budget_sweep, markdown_table, meta_plan_for, plot_data, write_csv, BudgetReport, PlannerKind, PlannerSpec};
use hybridplan::hybrid::{solve_hybrid, HybridConfig};
use hybridplan::search::TraceConfig;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::opts::{Command, Opts};
use crate::CliError;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Replaces `path` only once the full contents are on disk.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io_error(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = vec![];
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct DomainProbe {
    domain: DomainTag,
}

/// Domain from the flag, else from the first problem in the file.
fn domain_of(opts: &Opts, path: &Path) -> Result<DomainTag, CliError> {
    if let Some(d) = opts.domain {
        return Ok(d);
    }
    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let first = BufReader::new(file)
        .lines()
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty problem file", path.display())))?
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let probe: DomainProbe = serde_json::from_str(&first).map_err(|e| CliError::Data(format!("{}:1: {e}", path.display())))?;
    Ok(probe.domain)
}

fn generation_error(e: GenerationError) -> CliError {
    match e {
        GenerationError::Config(m) => CliError::Usage(m),
        e @ GenerationError::Exhausted { .. } => CliError::Exhausted(e.to_string()),
    }
}

fn write_splits<W: World>(splits: &Splits<W>, path: &Path, name: &str) -> Result<String, CliError> {
    let all: Vec<&Problem<W>> = splits.iter().collect();
    write_atomic(path, &jsonl(&all))?;
    Ok(format!(
        "wrote {} {name} problems ({}/{}/{}) to {}",
        all.len(),
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        path.display()
    ))
}

fn gen_maze(opts: &Opts) -> Result<String, CliError> {
    let d = MazeConfig::default();
    let cfg = MazeConfig {
        rows: opts.rows.unwrap_or(d.rows),
        cols: opts.cols.unwrap_or(d.cols),
        obstacle_fraction: opts.obstacle_fraction.unwrap_or(d.obstacle_fraction),
        train: opts.train.unwrap_or(d.train),
        val: opts.val.unwrap_or(d.val),
        test: opts.test.unwrap_or(d.test),
        ..d
    };
    let splits = generate_maze_dataset(opts.seed(), &cfg).map_err(generation_error)?;
    write_splits(&splits, &opts.output("maze.jsonl"), "maze")
}

fn gen_blocks(opts: &Opts) -> Result<String, CliError> {
    let d = BlocksConfig::default();
    let cfg = BlocksConfig {
        min_blocks: opts.min_blocks.unwrap_or(d.min_blocks),
        max_blocks: opts.max_blocks.unwrap_or(d.max_blocks),
        train: opts.train.unwrap_or(d.train),
        val: opts.val.unwrap_or(d.val),
        test: opts.test.unwrap_or(d.test),
        ..d
    };
    let splits = generate_blocks_dataset(opts.seed(), &cfg).map_err(generation_error)?;
    write_splits(&splits, &opts.output("blocks.jsonl"), "blocksworld")
}

fn in_split<W: World>(problems: &[Problem<W>], split: Split) -> Vec<Problem<W>> {
    problems.iter().filter(|p| p.split == split).cloned().collect()
}

fn controller_config(opts: &Opts, domain: DomainTag) -> ControllerConfig {
    ControllerConfig::new(opts.x(), opts.selector(domain))
        .with_bias(opts.bias())
        .with_variant(opts.variant())
        .with_seed(opts.seed())
}

fn build_controller_data<W: Skeleton>(opts: &Opts, domain: DomainTag, problems: &[Problem<W>]) -> Result<String, CliError> {
    let train = in_split(problems, opts.split.unwrap_or(Split::Train));
    if train.is_empty() {
        return Err(CliError::Data("no problems in the selected split".into()));
    }
    let cfg = controller_config(opts, domain);
    let records = build_controller_dataset(&train, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    let calibration = Calibration::fit(&train, cfg.selector).map_err(|e| CliError::Data(e.to_string()))?;
    let out = opts.output("controller.jsonl");
    let calib_path = opts
        .calibration
        .clone()
        .unwrap_or_else(|| out.with_file_name("calibration.json"));
    let calib_bytes = serde_json::to_vec_pretty(&calibration).expect("calibration serializes");
    write_atomic(&out, &jsonl(&records))?;
    write_atomic(&calib_path, &calib_bytes)?;
    let easy = records.iter().filter(|r| r.meta_plan.is_sys1_only()).count();
    Ok(format!(
        "wrote {} controller records ({easy} fast-planner only) to {} and calibration to {}",
        records.len(),
        out.display(),
        calib_path.display()
    ))
}

fn emit<W: Skeleton>(opts: &Opts, domain: DomainTag, problems: &[Problem<W>]) -> Result<String, CliError> {
    let train = in_split(problems, opts.split.unwrap_or(Split::Train));
    let cfg = controller_config(opts, domain);
    let (records, controller): (Vec<ControllerRecord<W::State>>, _) = match &opts.controller {
        Some(path) => (read_jsonl(path)?, None),
        None => (
            build_controller_dataset(&train, &cfg).map_err(|e| CliError::Data(e.to_string()))?,
            Some(cfg),
        ),
    };
    let config = EmitConfig {
        domain,
        algorithm: opts.algorithm(),
        trace: TraceConfig::for_domain(domain).with_seed(opts.seed()),
        seed: opts.seed(),
        controller,
    };
    let dir = opts.output("datasets");
    let manifest = emit_datasets(&train, &records, &config, &dir).map_err(|e| match e {
        hybridplan::emit::EmitError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let counts: Vec<String> = manifest.files.iter().map(|f| format!("{} {}", f.records, f.file)).collect();
    Ok(format!("wrote {} to {}", counts.join(", "), dir.display()))
}

fn planner_spec(opts: &Opts, domain: DomainTag) -> PlannerSpec {
    let trace = TraceConfig::for_domain(domain).with_seed(opts.seed());
    match opts.planner() {
        PlannerKind::System1 => PlannerSpec::system1(),
        PlannerKind::System2 => PlannerSpec::system2(opts.algorithm(), trace),
        PlannerKind::System1x => PlannerSpec::hybrid(opts.algorithm(), trace, controller_config(opts, domain)),
    }
}

fn calibration<W: Skeleton>(opts: &Opts, spec: &PlannerSpec, problems: &[Problem<W>]) -> Result<Option<Calibration>, CliError> {
    let Some(ctrl) = spec.controller else {
        return Ok(None);
    };
    if let Some(path) = &opts.calibration {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let calib: Calibration = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if calib.thresholds.len() != 101 {
            return Err(CliError::Data(format!("{}: expected 101 thresholds", path.display())));
        }
        return Ok(Some(calib));
    }
    let train = in_split(problems, Split::Train);
    if train.is_empty() {
        return Err(CliError::Data("no training problems to calibrate on; pass --calibration".into()));
    }
    Calibration::fit(&train, ctrl.selector)
        .map(Some)
        .map_err(|e| CliError::Data(e.to_string()))
}

fn evaluation_set<W: World>(opts: &Opts, problems: &[Problem<W>]) -> Result<Vec<Problem<W>>, CliError> {
    let set = in_split(problems, opts.split.unwrap_or(Split::Test));
    if set.is_empty() {
        Err(CliError::Data("no problems in the selected split".into()))
    } else {
        Ok(set)
    }
}

fn plan<W: Skeleton>(opts: &Opts, domain: DomainTag, problems: &[Problem<W>]) -> Result<String, CliError> {
    let spec = planner_spec(opts, domain);
    let calib = calibration(opts, &spec, problems)?;
    let set = evaluation_set(opts, problems)?;
    let config = HybridConfig::new(spec.algorithm, spec.trace).with_budget(opts.budget);
    let records = set
        .par_iter()
        .map(|p| {
            let mp = meta_plan_for(p, &spec, calib.as_ref()).map_err(|e| CliError::Data(format!("{}: {e}", p.id)))?;
            let run = solve_hybrid(p, &mp, &config);
            let valid = run.completed && validate_plan(p, &run.plan).is_valid();
            Ok(run.record(valid))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = opts.output("runs.jsonl");
    write_atomic(&out, &jsonl(&records))?;
    let valid = records.iter().filter(|r| r.valid).count();
    let se: u64 = records.iter().map(|r| r.states_explored).sum();
    Ok(format!(
        "{} on {} problems: validity {:.3}, avg states explored {:.2}; wrote {}",
        spec.label(),
        records.len(),
        valid as f64 / records.len() as f64,
        se as f64 / records.len() as f64,
        out.display()
    ))
}

fn report<W: Skeleton>(opts: &Opts, domain: DomainTag, problems: &[Problem<W>], grid: &[f64]) -> Result<BudgetReport, CliError> {
    let spec = planner_spec(opts, domain);
    let calib = calibration(opts, &spec, problems)?;
    let set = evaluation_set(opts, problems)?;
    budget_sweep(&set, &spec, calib.as_ref(), grid).map_err(|e| CliError::Data(e.to_string()))
}

/// CSV to `--out` or stdout, plus the optional plot file and table.
fn publish(opts: &Opts, report: BudgetReport) -> Result<String, CliError> {
    let reports = [report];
    let mut csv = vec![];
    write_csv(&reports, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let mut notes = vec![];
    match &opts.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            notes.push(format!("wrote {}", path.display()));
        }
        None => io::stdout().write_all(&csv).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if let Some(path) = &opts.plot {
        let bytes = serde_json::to_vec_pretty(&plot_data(&reports)).expect("plot data serializes");
        write_atomic(path, &bytes)?;
        notes.push(format!("wrote {}", path.display()));
    }
    if opts.markdown {
        print!("{}", markdown_table(&reports));
    }
    let [report] = reports;
    let default = report.rows.last().expect("default row");
    Ok(format!(
        "{}: {} rows; default validity {:.3}, optimality {:.3}, avg states explored {:.2}{}{}",
        report.planner,
        report.rows.len(),
        default.validity.value(),
        default.optimality.value(),
        default.avg_se(),
        if notes.is_empty() { "" } else { "; " },
        notes.join("; ")
    ))
}

fn with_problems<W: Skeleton>(command: Command, opts: &Opts, domain: DomainTag, path: &Path) -> Result<String, CliError> {
    let problems: Vec<Problem<W>> = read_jsonl(path)?;
    if let Some(bad) = problems.iter().find(|p| p.domain != domain) {
        return Err(CliError::Data(format!("problem {} is not a {domain} problem", bad.id)));
    }
    for p in &problems {
        p.check().map_err(|e| CliError::Data(format!("problem {}: {e}", p.id)))?;
    }
    match command {
        Command::BuildControllerData => build_controller_data(opts, domain, &problems),
        Command::EmitDatasets => emit(opts, domain, &problems),
        Command::Plan => plan(opts, domain, &problems),
        Command::Eval => publish(opts, report(opts, domain, &problems, &[])?),
        Command::Sweep => {
            let grid = opts
                .budgets
                .clone()
                .ok_or_else(|| CliError::Usage("--budgets is required for sweep".into()))?;
            publish(opts, report(opts, domain, &problems, &grid)?)
        }
        Command::GenMaze | Command::GenBlocks => unreachable!("generation needs no problem file"),
    }
}

pub fn execute(command: Command, opts: &Opts) -> Result<String, CliError> {
    opts.validate()?;
    match command {
        Command::GenMaze => gen_maze(opts),
        Command::GenBlocks => gen_blocks(opts),
        _ => {
            if command == Command::Sweep && opts.budgets.is_none() {
                return Err(CliError::Usage("--budgets is required for sweep".into()));
            }
            let path = opts.require_problems()?;
            let domain = domain_of(opts, path)?;
            if let Some(sel) = opts.selector {
                if sel.domain() != domain {
                    return Err(CliError::Usage(format!("--selector {sel} does not apply to {domain} problems")));
                }
            }
            match domain {
                DomainTag::Maze => with_problems::<MazeGrid>(command, opts, domain, path),
                DomainTag::Blocks => with_problems::<BlocksWorld>(command, opts, domain, path),
            }
        }
    }
}
