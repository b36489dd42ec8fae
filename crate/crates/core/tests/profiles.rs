use proptest::prelude::*;
use qsocp::profile::*;

fn record(problem: usize, config: usize, time_s: f64, solved: bool) -> BenchRecord {
    BenchRecord {
        problem: format!("p{problem}"),
        config: format!("s{config}"),
        time_s,
        status: if solved { "OPT" } else { FAILED }.into(),
        objective: 0.0,
        iterations: 3,
    }
}

fn record_sets() -> impl Strategy<Value = Vec<BenchRecord>> {
    (1usize..8, 1usize..4).prop_flat_map(|(np, ns)| {
        prop::collection::vec((1e-4f64..10.0, prop::bool::weighted(0.85)), np * ns).prop_map(move |cells| {
            cells.into_iter().enumerate().map(|(i, (t, ok))| record(i / ns, i % ns, t, ok)).collect()
        })
    })
}

fn taus(curve: &ProfileCurve) -> Vec<f64> {
    let mut t: Vec<f64> = curve.breakpoints().iter().map(|b| b.0).collect();
    t.extend([0.0, 0.5, 1.0, 1.5, 3.0, 1e3, f64::MAX]);
    t.sort_by(f64::total_cmp);
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn curves_are_monotone_and_bounded(records in record_sets()) {
        let pr = perf_profiles(&records).unwrap();
        for c in pr.relative.iter().chain(&pr.absolute) {
            let vals: Vec<f64> = taus(c).iter().map(|&t| c.eval(t)).collect();
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
        // every problem someone solved has a fastest solver with ratio 1
        let at_one: f64 = pr.relative.iter().map(|c| c.eval(1.0)).sum();
        let any_solved = pr.problems.iter().filter(|p| records.iter().any(|r| &r.problem == *p && r.solved())).count();
        prop_assert!(at_one * pr.problems.len() as f64 >= any_solved as f64 - 1e-9);
    }

    #[test]
    fn csv_round_trip_preserves_profiles(records in record_sets()) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(perf_profiles(&back).unwrap(), perf_profiles(&records).unwrap());
    }
}

#[test]
fn definition_on_a_hand_example() {
    let rs = [record(1, 1, 1.0, true), record(1, 2, 2.0, true), record(2, 1, 4.0, true), record(2, 2, 2.0, true)];
    let pr = perf_profiles(&rs).unwrap();
    assert_eq!((pr.relative[0].eval(1.0), pr.relative[0].eval(2.0)), (0.5, 1.0));
    assert_eq!((pr.relative[1].eval(1.0), pr.relative[1].eval(1.99)), (0.5, 0.5));
    assert_eq!(pr.absolute[1].eval(2.0), 1.0);
}

#[test]
fn single_solver_is_always_best() {
    let rs: Vec<_> = (0..5).map(|p| record(p, 0, 0.1 * (p + 1) as f64, true)).collect();
    assert_eq!(perf_profiles(&rs).unwrap().relative[0].eval(1.0), 1.0);
}

#[test]
fn failures_stay_below_one() {
    let rs = [record(1, 1, 1.0, true), record(2, 1, 1.0, false)];
    let pr = perf_profiles(&rs).unwrap();
    assert_eq!(pr.relative[0].eval(f64::MAX), 0.5);
    assert_eq!(pr.absolute[0].eval(f64::MAX), 0.5);
}

#[test]
fn repeats_keep_the_fastest_run() {
    let rs = [record(1, 1, 3.0, true), record(1, 1, 1.0, true), record(1, 2, 2.0, true)];
    let pr = perf_profiles(&rs).unwrap();
    assert_eq!(pr.relative[0].eval(1.0), 1.0);
    assert_eq!(pr.relative[1].eval(1.9), 0.0);
}

#[test]
fn profile_csv_lists_breakpoints() {
    let rs = [record(1, 1, 1.0, true), record(1, 2, 2.0, true)];
    let mut out = Vec::new();
    write_profiles(&mut out, &perf_profiles(&rs).unwrap()).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,solver,tau,rho");
    assert!(lines.contains(&"relative,s2,2.0,1.0"));
    assert!(lines.contains(&"absolute,s1,1.0,1.0"));
}
