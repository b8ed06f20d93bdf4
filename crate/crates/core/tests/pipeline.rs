use hybridplan::controller::{build_controller_dataset, Calibration, ControllerConfig, Mode};
use hybridplan::domain::generate::{generate_blocks_dataset, generate_maze_dataset, BlocksConfig, MazeConfig};
use hybridplan::domain::{validate_plan, BlocksWorld, DomainTag, MazeGrid, Split};
use hybridplan::emit::{check_round_trip, emit_datasets, read_records, EmitConfig, MANIFEST_FILE};
use hybridplan::eval::{budget_sweep, run_planner, Budget, PlannerSpec};
use hybridplan::hardness::HardnessSelector;
use hybridplan::hybrid::{solve_single, HybridConfig};
use hybridplan::search::{run_search, Algorithm, TraceConfig};

fn maze_config() -> MazeConfig {
    MazeConfig {
        train: 120,
        val: 10,
        test: 40,
        ..MazeConfig::default()
    }
}

#[test]
fn maze_emission_round_trips_and_is_reproducible() {
    let splits = generate_maze_dataset(5, &maze_config()).unwrap();
    let train = splits.get(Split::Train);
    let ctrl_cfg = ControllerConfig::new(0.5, HardnessSelector::MazeObstacles);
    let records = build_controller_dataset(train, &ctrl_cfg).unwrap();
    let config = EmitConfig {
        domain: DomainTag::Maze,
        algorithm: Algorithm::Astar,
        trace: TraceConfig::for_domain(DomainTag::Maze),
        seed: 5,
        controller: Some(ctrl_cfg),
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = emit_datasets(train, &records, &config, a.path()).unwrap();
    emit_datasets(train, &records, &config, b.path()).unwrap();
    for entry in &manifest.files {
        let bytes = std::fs::read(a.path().join(&entry.file)).unwrap();
        assert_eq!(bytes, std::fs::read(b.path().join(&entry.file)).unwrap(), "{}", entry.file);
        let recs = read_records(&a.path().join(&entry.file)).unwrap();
        assert_eq!(recs.len(), entry.records);
        for rec in &recs {
            check_round_trip::<MazeGrid>(rec).unwrap();
        }
    }
    assert!(a.path().join(MANIFEST_FILE).exists());
}

#[test]
fn blocks_emission_round_trips() {
    let cfg = BlocksConfig {
        train: 40,
        val: 4,
        test: 4,
        ..BlocksConfig::default()
    };
    let splits = generate_blocks_dataset(9, &cfg).unwrap();
    let train = splits.get(Split::Train);
    let ctrl_cfg = ControllerConfig::new(0.5, HardnessSelector::BlocksDistance);
    let records = build_controller_dataset(train, &ctrl_cfg).unwrap();
    let config = EmitConfig {
        domain: DomainTag::Blocks,
        algorithm: Algorithm::Astar,
        trace: TraceConfig::for_domain(DomainTag::Blocks),
        seed: 9,
        controller: Some(ctrl_cfg),
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = emit_datasets(train, &records, &config, dir.path()).unwrap();
    for entry in &manifest.files {
        for rec in read_records(&dir.path().join(&entry.file)).unwrap() {
            check_round_trip::<BlocksWorld>(&rec).unwrap();
        }
    }
}

#[test]
fn full_hybrid_equals_search_planner() {
    let splits = generate_maze_dataset(6, &maze_config()).unwrap();
    let test = splits.get(Split::Test);
    let trace = TraceConfig::for_domain(DomainTag::Maze);
    let calib = Calibration::fit(splits.get(Split::Train), HardnessSelector::MazeObstacles).unwrap();
    let hybrid = PlannerSpec::hybrid(Algorithm::Astar, trace, ControllerConfig::new(1.0, HardnessSelector::MazeObstacles));
    let sys2 = PlannerSpec::system2(Algorithm::Astar, trace);
    assert_eq!(run_planner(test, &hybrid, Some(&calib), None), run_planner(test, &sys2, None, None));
}

#[test]
fn search_planner_is_valid_and_optimal_on_unseen_problems() {
    let splits = generate_maze_dataset(7, &maze_config()).unwrap();
    let config = HybridConfig::new(Algorithm::Astar, TraceConfig::for_domain(DomainTag::Maze));
    for p in splits.get(Split::Test) {
        let run = solve_single(p, Mode::Sys2, &config);
        assert!(validate_plan(p, &run.plan).is_valid());
        assert_eq!(Some(run.plan.len()), p.optimal_length);
        assert_eq!(run.states_explored, run_search(p, Algorithm::Astar, &config.trace).states_explored());
    }
}

#[test]
fn sweep_rows_respect_targets() {
    let splits = generate_maze_dataset(8, &maze_config()).unwrap();
    let test = splits.get(Split::Test);
    let spec = PlannerSpec::system2(Algorithm::Bfs, TraceConfig::for_domain(DomainTag::Maze));
    let report = budget_sweep(test, &spec, None, &[4.0, 8.0, 12.0]).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(report.rows[3].budget, Budget::Default);
    for row in &report.rows[..3] {
        let Budget::Target(t) = row.budget else { panic!("target row expected") };
        if t < report.rows[3].avg_se() {
            assert!(row.avg_se() <= t + 1e-9, "{} > {t}", row.avg_se());
        }
    }
    let v: Vec<f64> = report.rows.iter().map(|r| r.validity.value()).collect();
    assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
}
