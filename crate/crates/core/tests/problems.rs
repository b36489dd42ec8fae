mod common;

use common::{dense, dense_sym};
use qsocp::problems::*;
use qsocp::{solve, Error, ProblemData, Settings, Status};

fn generated() -> Vec<(&'static str, ProblemData)> {
    vec![
        ("portfolio", gen_portfolio(5, 10, 3).unwrap()),
        ("lasso", gen_lasso(10, 2, 3).unwrap()),
        ("mars", gen_mars_landing(10, 48.0).unwrap()),
        ("quadcopter", gen_quadcopter_mpc(6).unwrap()),
    ]
}

#[test]
fn generators_are_deterministic() {
    for ((name, a), (_, b)) in generated().into_iter().zip(generated()) {
        assert_eq!(encode_instance(&a), encode_instance(&b), "{name}");
    }
    assert_ne!(encode_instance(&gen_portfolio(5, 10, 3).unwrap()), encode_instance(&gen_portfolio(5, 10, 4).unwrap()));
}

#[test]
fn instance_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, p) in generated() {
        let path = dir.path().join(format!("{name}.bin"));
        write_instance(&path, &p).unwrap();
        let back = read_instance(&path).unwrap();
        assert_eq!(encode_instance(&back), encode_instance(&p), "{name}");
        // the dense view of the loaded file matches the original data
        assert_eq!(dense_sym(back.quad()), dense_sym(p.quad()));
        assert_eq!(dense(back.a()), dense(p.a()));
        assert_eq!(dense(back.g()), dense(p.g()));
        assert_eq!((back.q(), back.b(), back.h()), (p.q(), p.b(), p.h()));
    }
}

#[test]
fn damaged_instance_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    let bytes = encode_instance(&gen_lasso(4, 2, 1).unwrap());
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(read_instance(&path).is_err());
    assert!(matches!(decode_instance(&bytes[..2]), Err(Error::Malformed(_))));
    let mut bad = bytes.clone();
    bad[30] ^= 0x10;
    assert!(matches!(decode_instance(&bad), Err(Error::Checksum { .. })));
    assert!(matches!(read_instance(dir.path().join("missing.bin")), Err(Error::Io(_))));
}

#[test]
fn lasso_weight_recomputed_from_a_loaded_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lasso.bin");
    write_instance(&path, &gen_lasso(10, 2, 8).unwrap()).unwrap();
    let p = read_instance(&path).unwrap();
    let (x, y, lambda) = LassoData::from_problem(&p).unwrap();
    let xd = dense(&x);
    let xty = xd.transpose() * common::vec(&y);
    assert_eq!(lambda, xty.amax() / 5.0);
    // θ = 0 with r = −ȳ is feasible and costs ½‖ȳ‖²
    let mut origin = vec![0.0; p.n()];
    origin[p.n() - y.len()..].iter_mut().zip(&y).for_each(|(r, v)| *r = -v);
    let half_sq = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
    assert!((p.objective(&origin) - half_sq).abs() <= 1e-12 * half_sq);
}

#[test]
fn benchmark_generators_solve() {
    let r = solve(&gen_lasso(10, 2, 5).unwrap(), &Settings::default(), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    let p = gen_portfolio(5, 10, 2).unwrap();
    let r = solve(&p, &Settings::default(), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.x[..50].iter().sum::<f64>() - 1.0).abs() <= 1e-8);
}

#[test]
fn landing_feasibility_depends_on_flight_time() {
    let ok = solve(&gen_mars_landing(25, 48.0).unwrap(), &Settings::default(), None).unwrap();
    assert_eq!(ok.status, Status::Optimal);
    let short = solve(&gen_mars_landing(25, 25.0).unwrap(), &Settings::default(), None).unwrap();
    assert_eq!(short.status, Status::PrimalInfeasible);
}

#[test]
fn problem_dimensions() {
    let n = 25;
    let p = gen_mars_landing(n, 48.0).unwrap();
    assert_eq!(p.n(), NODE_VARS * (n + 1));
    assert_eq!(p.cone().soc_count(), n + 1);
    assert!(p.cone().soc_dims().iter().all(|&d| d == 4));

    let p = gen_quadcopter_mpc(15).unwrap();
    assert_eq!(p.n(), 12 * 16 + 4 * 15);
    assert_eq!(p.p(), 12 * 16);
    assert_eq!(p.cone().soc_count(), 0);
    let x_init_rows = &p.b()[..12];
    let r = solve(&p, &Settings::with_tolerance(1e-6), None).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!(r.x[..12].iter().zip(x_init_rows).all(|(a, b)| (a - b).abs() <= 1e-6));

    assert!(gen_mars_landing(1, 48.0).is_err());
    assert!(gen_quadcopter_mpc(1).is_err());
    assert!(gen_portfolio(0, 3, 1).is_err());
    assert!(gen_lasso(3, 0, 1).is_err());
}
