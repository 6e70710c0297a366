use entroreact::crn::fixtures::so2;
use entroreact::diagnostics::{entropy_monotonicity_report, Series};
use entroreact::grid::Grid;
use entroreact::par;
use entroreact::solver::{
    load_checkpoint, run, run_from, save_checkpoint, Profile, RunControl, SimulationConfig, Termination,
};

fn so2_config(grid: Grid, t_end: f64) -> SimulationConfig {
    SimulationConfig::from_network(
        so2(),
        grid,
        vec![
            Profile::Cosine { a: 1.0, b: 0.5, k: 1.0 },
            Profile::Constant(1.0),
            Profile::Cosine { a: 1.0, b: -0.5, k: 1.0 },
        ],
        t_end,
    )
}

fn csv(series: &Series) -> Vec<u8> {
    let mut out = Vec::new();
    series.write_csv(&mut out).unwrap();
    out
}

#[test]
fn checkpoint_resume_is_transparent() {
    let cfg = so2_config(Grid::interval(1.0, 64).unwrap(), 2.0);
    let whole = run(&cfg).unwrap().into_result().unwrap();

    let first = run_from(
        &cfg,
        entroreact::solver::init_state(&cfg).unwrap(),
        RunControl {
            halt_at: Some(0.7),
            record_initial: true,
        },
    )
    .unwrap();
    assert!(matches!(first.termination, Termination::Halted));
    let bytes = save_checkpoint(&first.state);
    let restored = load_checkpoint(&bytes).unwrap();
    assert_eq!(restored, first.state);
    let second = run_from(&cfg, restored, RunControl::default()).unwrap().into_result().unwrap();

    let mut joined = first.series;
    joined.extend(second.series);
    assert_eq!(csv(&joined), csv(&whole.series));
    assert_eq!(second.state, whole.state);
    let a = entropy_monotonicity_report(&joined).unwrap();
    let b = entropy_monotonicity_report(&whole.series).unwrap();
    assert_eq!(a, b);
    assert!(a.max_jump <= 1e-10);
}

#[test]
fn rectangle_run_conserves_and_dissipates() {
    let mut cfg = so2_config(Grid::rectangle(1.0, 1.0, 16, 16).unwrap(), 1.0);
    cfg.initial[1] = Profile::Gaussian { a: 1.0, c: 0.5, x0: 0.3, w: 0.2 };
    let out = run(&cfg).unwrap().into_result().unwrap();
    assert!(out.stats.max_conservation_drift < 1e-9, "{:?}", out.stats);
    assert!(out.stats.max_entropy_jump <= 1e-10);
    let first = out.series.records.first().unwrap().total_distance();
    let last = out.series.records.last().unwrap().total_distance();
    assert!(last < first);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    // large enough to take the chunked parallel paths
    let cfg = so2_config(Grid::interval(1.0, 4096).unwrap(), 0.05);
    let one = par::with_threads(1, || run(&cfg).unwrap().into_result().unwrap());
    let four = par::with_threads(4, || run(&cfg).unwrap().into_result().unwrap());
    assert_eq!(one.state, four.state);
    assert_eq!(csv(&one.series), csv(&four.series));
}

#[test]
fn empty_horizon_gives_empty_series() {
    let cfg = so2_config(Grid::interval(1.0, 8).unwrap(), 0.0);
    let out = run(&cfg).unwrap().into_result().unwrap();
    assert!(out.series.is_empty());
    assert_eq!(out.stats.accepted, 0);
}
