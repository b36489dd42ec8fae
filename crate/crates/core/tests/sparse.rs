mod common;

use common::{dense, dense_sym, inf_norm, random_dense, random_psd, sparse, sparse_upper};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qsocp::problems::Rng;
use qsocp::sparse::*;

/// Random quasi-definite `[H₁₁ Bᵀ; B −H₂₂]` in upper-triangular storage.
fn quasi_definite(rng: &mut Rng, n1: usize, n2: usize) -> (SparseCcs, Vec<f64>) {
    let n = n1 + n2;
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (n1, n1)).copy_from(&random_psd(rng, n1, 2.min(n1), 1.0));
    k.view_mut((n1, n1), (n2, n2)).copy_from(&-random_psd(rng, n2, 2.min(n2), 1.0));
    let b = random_dense(rng, n2, n1, 0.3);
    k.view_mut((n1, 0), (n2, n1)).copy_from(&b);
    k.view_mut((0, n1), (n1, n2)).copy_from(&b.transpose());
    let signs = (0..n).map(|i| if i < n1 { 1.0 } else { -1.0 }).collect();
    (sparse_upper(&k), signs)
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ldl_reconstructs_and_solves(n1 in 1usize..25, n2 in 1usize..15, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (k, signs) = quasi_definite(&mut rng, n1, n2);
        let perm = amd_order(&k).unwrap();
        prop_assert!(is_permutation(&perm));
        let sym = symbolic_ldl(&k, &perm).unwrap();
        let num = numeric_ldl(&k, &sym, &signs, 1e-13, 1e-7).unwrap();
        prop_assert_eq!(num.dyn_reg_count(), 0);
        for (d, s) in num.d_values().iter().zip(sym.perm().iter().map(|&i| signs[i])) {
            prop_assert!(d * s > 0.0);
        }
        let n = n1 + n2;
        let mut l = DMatrix::<f64>::identity(n, n);
        for c in 0..n {
            for idx in sym.l_col_offsets()[c]..sym.l_col_offsets()[c + 1] {
                l[(sym.l_row_indices()[idx], c)] = num.l_values()[idx];
            }
        }
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(num.d_values()));
        let kd = dense_sym(&k);
        let kp = DMatrix::from_fn(n, n, |i, j| kd[(perm[i], perm[j])]);
        prop_assert!((&l * d * l.transpose() - &kp).norm() <= 1e-10 * kp.norm());

        let rhs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let x = ldl_solve(&sym, &num, &rhs);
        let oracle = kd.clone().lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
        let diff: Vec<f64> = x.iter().zip(oracle.iter()).map(|(a, b)| a - b).collect();
        prop_assert!(inf_norm(&diff) <= 1e-8 * inf_norm(oracle.as_slice()).max(1.0));
    }

    #[test]
    fn refinement_recovers_unregularized_solution(n1 in 1usize..20, n2 in 1usize..10, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (k, signs) = quasi_definite(&mut rng, n1, n2);
        let mut reg = k.clone();
        for c in 0..k.ncols() {
            let idx = reg.find(c, c).unwrap();
            reg.values_mut()[idx] += signs[c] * 1e-7;
        }
        let sym = symbolic_ldl(&k, &amd_order(&k).unwrap()).unwrap();
        let num = numeric_ldl(&reg, &sym, &signs, 1e-13, 1e-7).unwrap();
        let rhs: Vec<f64> = (0..k.ncols()).map(|_| rng.normal()).collect();
        let (_, unrefined) = iterative_refinement(&k, &sym, &num, &rhs, 1e-12, 0).unwrap();
        let (x, out) = iterative_refinement(&k, &sym, &num, &rhs, 1e-12, 20).unwrap();
        prop_assert!(out.residual <= unrefined.residual);
        let mut r = rhs.clone();
        k.symv_upper(-1.0, &x, &mut r);
        prop_assert_eq!(inf_norm(&r), out.residual);
        prop_assert!(out.residual < 1e-9);
    }

    #[test]
    fn ccs_roundtrips(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let d = random_dense(&mut rng, rows, cols, 0.4);
        let s = sparse(&d);
        prop_assert_eq!(dense(&s), d.clone());
        prop_assert_eq!(dense(&s.transpose()), d.transpose());
        let x: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
        let mut y = vec![0.0; rows];
        s.gemv(1.0, &x, &mut y);
        let oracle = &d * DVector::from_column_slice(&x);
        let diff: Vec<f64> = y.iter().zip(oracle.iter()).map(|(a, b)| a - b).collect();
        prop_assert!(inf_norm(&diff) < 1e-12);
    }
}

#[test]
fn triplets_sum_duplicates_and_reject_out_of_range() {
    let m = ccs_from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]).unwrap();
    assert_eq!(m.get(0, 0), 4.0);
    assert_eq!(m.nnz(), 2);
    assert!(ccs_from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
}

#[test]
fn arrow_matrix_has_no_fill() {
    for n in [5, 20, 60] {
        let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 4.0)).collect();
        t.extend((1..n).map(|i| (0, i, 1.0)));
        let k = SparseCcs::from_triplets(n, n, &t).unwrap();
        let sym = symbolic_ldl(&k, &amd_order(&k).unwrap()).unwrap();
        assert_eq!(sym.fill_in(), 0, "n={n}");
    }
}

#[test]
fn tiny_pivot_is_regularized_with_expected_sign() {
    let k = SparseCcs::from_triplets(2, 2, &[(0, 0, 1e-20), (1, 1, -1.0)]).unwrap();
    let sym = symbolic_ldl(&k, &[0, 1]).unwrap();
    let num = numeric_ldl(&k, &sym, &[1.0, -1.0], 1e-13, 1e-7).unwrap();
    assert_eq!(num.dyn_reg_count(), 1);
    assert_eq!(num.d_values()[0], 1e-7);
}
