use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mimo_dscat::harness::{run_power_sweep, run_se_validation, CdfSeries, ExperimentSpec};
use mimo_dscat::power::Algorithm;
use mimo_dscat::NetworkConfig;

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn small_spec(seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(NetworkConfig::default().with_antennas(12));
    spec.master_seed = seed;
    spec.drops = 6;
    spec
}

#[test]
fn sweep_outputs_do_not_depend_on_thread_count() {
    let spec = small_spec(9);
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3, 8] {
        let dir = tmp.path().join(format!("t{threads}"));
        in_pool(threads, || run_power_sweep(&spec).unwrap())
            .write(&dir)
            .unwrap();
        outputs.push(read_dir(&dir));
    }
    assert!(outputs[0].keys().any(|k| k == "allocations.csv"));
    assert!(outputs[0].len() > 5);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let other = tmp.path().join("other");
    run_power_sweep(&small_spec(10))
        .unwrap()
        .write(&other)
        .unwrap();
    assert_ne!(
        outputs[0]["allocations.csv"],
        read_dir(&other)["allocations.csv"]
    );
}

#[test]
fn se_validation_outputs_do_not_depend_on_thread_count() {
    let mut spec = small_spec(4);
    spec.drops = 3;
    spec.antennas = vec![8, 12];
    // several Monte-Carlo chunks per drop
    spec.mc_trials = 700;
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    in_pool(1, || run_se_validation(&spec).unwrap())
        .write(&a)
        .unwrap();
    in_pool(4, || run_se_validation(&spec).unwrap())
        .write(&b)
        .unwrap();
    let (a, b) = (read_dir(&a), read_dir(&b));
    assert!(a.contains_key("se_m8.csv") && a.contains_key("rel_err_cdf_m12.csv"));
    assert_eq!(a, b);
}

#[test]
fn sweep_reports_consistent_summaries() {
    let mut spec = small_spec(2);
    spec.xi = vec![0.5, 2.0];
    let sweep = run_power_sweep(&spec).unwrap();
    assert!(sweep.invariant_violations().is_empty());
    assert_eq!(sweep.drops.len(), 12);
    for xi in [0.5, 2.0] {
        for alg in [Algorithm::MaxPower, Algorithm::SoftRemoval] {
            let s = sweep.summary(xi, alg).unwrap();
            assert_eq!(s.drops, 6);
            let feasible = sweep.outcomes_at(xi).filter(|d| d.feasible).count();
            assert_eq!(s.feasible_drops, feasible);
        }
    }
    let easy = sweep
        .summary(0.5, Algorithm::MaxPower)
        .unwrap()
        .satisfied
        .unwrap();
    let hard = sweep
        .summary(2.0, Algorithm::MaxPower)
        .unwrap()
        .satisfied
        .unwrap();
    assert!(easy.per_user >= hard.per_user);
    for d in &sweep.drops {
        for o in &d.outcomes {
            assert!(o.within_box);
            assert!((o.total_power - o.p.iter().sum::<f64>()).abs() < 1e-9);
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small_spec(0);
    spec.drops = 0;
    assert!(run_power_sweep(&spec).is_err());
    let mut spec = small_spec(0);
    spec.xi = vec![-1.0];
    assert!(run_power_sweep(&spec).is_err());
    let mut spec = small_spec(0);
    spec.antennas = vec![];
    assert!(run_se_validation(&spec).is_err());
}

#[test]
fn cdf_series_is_an_empirical_distribution() {
    let cdf = CdfSeries::from_samples("x", &[3.0, 1.0, 2.0, 2.0]).unwrap();
    assert_eq!(cdf.values, vec![1.0, 2.0, 2.0, 3.0]);
    assert_eq!(cdf.fractions, vec![0.25, 0.5, 0.75, 1.0]);
    assert_eq!(cdf.evaluate(2.0), 0.75);
    assert_eq!(cdf.evaluate(0.5), 0.0);
    assert_eq!(cdf.mean(), 2.0);
    assert!(CdfSeries::from_samples("x", &[]).is_err());
    assert!(CdfSeries::from_samples("x", &[f64::NAN]).is_err());

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cdf.csv");
    cdf.write_csv(&path).unwrap();
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("value,cum_fraction"));
    assert_eq!(text.lines().count(), 5);
}
