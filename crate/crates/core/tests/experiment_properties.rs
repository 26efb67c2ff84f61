use proptest::prelude::*;

use repcap::experiment::{
    self, deep_shallow_ratio, ratio_to_cg, run_cell, run_matrix, Aggregation, CellSpec, CrossCheckTable,
    ExperimentConfig, NamedArch, Stats,
};
use repcap::netcore::ArchitectureSpec;
use repcap::optim::{Method, OptimizerConfig};
use repcap::probgen::{InputDistribution, SizeClass};

fn quick_config(methods: Vec<Method>, seeds: Vec<u64>, budget: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(SizeClass::A, seeds[0]);
    cfg.methods = methods;
    cfg.seeds = seeds;
    cfg.budget = budget;
    cfg.reset_optimizers();
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregates_lie_between_extremes(values in proptest::collection::vec(0.0f64..1e3, 1..20)) {
        let s = Stats::of(&values).unwrap();
        prop_assert!(s.min <= s.median && s.median <= s.max);
        prop_assert!(s.min <= s.mean * (1.0 + 1e-12) && s.mean <= s.max * (1.0 + 1e-12));
    }

    #[test]
    fn ratios_are_plain_quotients(a in 1e-9f64..1e3, b in 1e-9f64..1e3) {
        prop_assert_eq!(ratio_to_cg(a, b), Some(a / b));
        prop_assert_eq!(deep_shallow_ratio(a, b), Some(a / b));
        prop_assert_eq!(ratio_to_cg(a, 0.0), None);
    }
}

#[test]
fn matrix_has_table_block_structure_and_consistent_ratios() {
    let cfg = quick_config(Method::ALL.to_vec(), vec![5, 6, 7], 4);
    let r = run_matrix(&cfg, 2).unwrap();
    let t = &r.table;
    assert_eq!(t.rows.len(), 28);
    assert_eq!(t.summary.len(), 8);
    assert_eq!(t.rows.iter().filter(|r| r.self_fit).count(), 12);

    for row in &t.rows {
        let cg = t.row(&row.network, &row.data_source, Method::Cg).unwrap();
        match row.method {
            Method::Cg => assert!(row.ratio_to_cg.is_none()),
            _ => {
                let expect = row.f_opt.unwrap() / cg.f_opt.unwrap();
                let got = row.ratio_to_cg.unwrap();
                assert!((got - expect).abs() <= 1e-12 * expect);
            }
        }
        let cross_deep_on_shallow = row.data_source == "A_1" && row.network != "A_1";
        assert_eq!(row.deep_shallow_ratio.is_some(), cross_deep_on_shallow);
        if cross_deep_on_shallow {
            let den = t.row("A_1", &row.network, row.method).unwrap().f_opt.unwrap();
            let expect = row.f_opt.unwrap() / den;
            assert!((row.deep_shallow_ratio.unwrap() - expect).abs() <= 1e-12 * expect);
        }
        let s = row.f_opt_stats.unwrap();
        assert!(s.min <= row.f_opt.unwrap() && row.f_opt.unwrap() <= s.max);
        assert_eq!(row.seeds, 3);
        assert_eq!(row.failed_seeds, 0);
    }
    for cell in r.cells.iter().filter(|c| c.spec.method() == Method::Cg) {
        assert!(cell.f_opt_agg().unwrap() <= cell.f_init_agg().unwrap());
    }
}

#[test]
fn persisted_store_round_trips_and_reproduces_ratios() {
    let cfg = quick_config(vec![Method::Sgd, Method::Cg], vec![21, 22], 3);
    let r = run_matrix(&cfg, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.jsonl");
    experiment::persist(&r, &path).unwrap();
    let back = experiment::load(&path).unwrap();
    assert_eq!(back, r);

    // everything needed to rerun is in the stored config
    let rerun = run_matrix(&back.config, 1).unwrap();
    assert_eq!(rerun, r);

    let rebuilt = CrossCheckTable::from_cells(back.config.size_class, back.config.aggregation, &back.cells);
    for (a, b) in rebuilt.rows.iter().zip(&back.table.rows) {
        for (x, y) in [(a.ratio_to_cg, b.ratio_to_cg), (a.deep_shallow_ratio, b.deep_shallow_ratio)] {
            match (x, y) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-12 * y.abs()),
                (None, None) => {}
                other => panic!("ratio presence differs: {other:?}"),
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = quick_config(vec![Method::Rmsprop, Method::Cg], vec![1, 2, 3], 5);
    let mut a = Vec::new();
    let mut b = Vec::new();
    experiment::write_store(&run_matrix(&cfg, 1).unwrap(), &mut a).unwrap();
    experiment::write_store(&run_matrix(&cfg, 4).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn changing_one_seed_leaves_other_runs_alone() {
    let a = run_matrix(&quick_config(vec![Method::Adadelta], vec![1, 2], 3), 1).unwrap();
    let b = run_matrix(&quick_config(vec![Method::Adadelta], vec![1, 9], 3), 1).unwrap();
    for (ca, cb) in a.cells.iter().zip(&b.cells) {
        assert_eq!(ca.runs[0], cb.runs[0]);
        assert_ne!(ca.runs[1], cb.runs[1]);
    }
}

#[test]
fn mean_aggregation_is_reported_alongside_median() {
    let mut cfg = quick_config(vec![Method::Sgd], vec![3, 4, 5, 6], 2);
    cfg.aggregation = Aggregation::Mean;
    let r = run_matrix(&cfg, 1).unwrap();
    for row in &r.table.rows {
        let s = row.f_opt_stats.unwrap();
        assert_eq!(row.f_opt, Some(s.mean));
    }
}

#[test]
fn self_fit_cg_cell_improves_by_three_orders() {
    let cfg = ExperimentConfig::new(SizeClass::A, 0);
    let (network, data_source) = cfg.blocks().into_iter().next().unwrap();
    let spec = CellSpec {
        network,
        data_source,
        n_samples: 80,
        input_distribution: InputDistribution::StandardNormal,
        optimizer: OptimizerConfig::defaults(Method::Cg),
        seeds: vec![3],
    };
    let r = run_cell(&spec, Aggregation::Median).unwrap();
    assert!(r.f_opt_agg().unwrap() < 1e-3 * r.f_init_agg().unwrap());
}

#[test]
fn all_seeds_failing_fails_the_cell() {
    // a non-finite saturation factor cannot pass validation; use an architecture whose
    // generated targets overflow instead
    let arch = ArchitectureSpec::new(2, 1, 1, 2, 1e300).unwrap();
    let named = NamedArch {
        name: "huge".into(),
        arch,
    };
    let spec = CellSpec {
        network: named.clone(),
        data_source: named,
        n_samples: 3,
        input_distribution: InputDistribution::StandardNormal,
        optimizer: OptimizerConfig::defaults(Method::Sgd).with_budget(2),
        seeds: vec![1, 2],
    };
    match run_cell(&spec, Aggregation::Median) {
        Err(repcap::Error::CellFailed(2)) => {}
        other => panic!("expected cell failure, got {other:?}"),
    }
}
