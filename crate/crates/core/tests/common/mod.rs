//! Dense oracles and random instance builders shared by integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qsocp::cones::ConeSpec;
use qsocp::problems::Rng;
use qsocp::sparse::SparseCcs;
use qsocp::ipm::{Engine, IterateState};
use qsocp::ProblemData;

pub fn dense(m: &SparseCcs) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, k) in m.entries() {
        d[(r, c)] += m.values()[k];
    }
    d
}

/// Full symmetric matrix from a stored upper triangle.
pub fn dense_sym(m: &SparseCcs) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, k) in m.entries() {
        d[(r, c)] += m.values()[k];
        if r != c {
            d[(c, r)] += m.values()[k];
        }
    }
    d
}

pub fn sparse(d: &DMatrix<f64>) -> SparseCcs {
    let mut t = Vec::new();
    for c in 0..d.ncols() {
        for r in 0..d.nrows() {
            if d[(r, c)] != 0.0 {
                t.push((r, c, d[(r, c)]));
            }
        }
    }
    SparseCcs::from_triplets(d.nrows(), d.ncols(), &t).unwrap()
}

pub fn sparse_upper(d: &DMatrix<f64>) -> SparseCcs {
    let mut t = Vec::new();
    for c in 0..d.ncols() {
        for r in 0..=c {
            if d[(r, c)] != 0.0 {
                t.push((r, c, d[(r, c)]));
            }
        }
    }
    SparseCcs::from_triplets(d.nrows(), d.ncols(), &t).unwrap()
}

pub fn vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn random_dense(rng: &mut Rng, rows: usize, cols: usize, density: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| if rng.bernoulli(density) { rng.normal() } else { 0.0 })
}

pub fn random_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

/// `MᵀM + shift·I` with `M` of the given rank.
pub fn random_psd(rng: &mut Rng, n: usize, rank: usize, shift: f64) -> DMatrix<f64> {
    let m = random_dense(rng, rank, n, 0.7);
    m.transpose() * m + DMatrix::identity(n, n) * shift
}

pub fn objective(q_mat: &DMatrix<f64>, q: &[f64], x: &[f64]) -> f64 {
    let xv = vec(x);
    0.5 * xv.dot(&(q_mat * &xv)) + vec(q).dot(&xv)
}

/// Solve `[[Q, Aᵀ], [A, 0]] [x; y] = [−q; b]`.
pub fn eq_qp_oracle(q_mat: &DMatrix<f64>, q: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (n, p) = (q_mat.nrows(), a.nrows());
    let mut k = DMatrix::zeros(n + p, n + p);
    k.view_mut((0, 0), (n, n)).copy_from(q_mat);
    k.view_mut((n, 0), (p, n)).copy_from(a);
    k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
    let mut rhs = DVector::zeros(n + p);
    for i in 0..n {
        rhs[i] = -q[i];
    }
    for i in 0..p {
        rhs[n + i] = b[i];
    }
    let sol = k.lu().solve(&rhs)?;
    Some(sol.rows(0, n).iter().copied().collect())
}

/// Minimize a strictly convex QP with `Ax = b`, `Gx ≤ h` by enumerating every
/// active set and keeping the KKT point. Returns `(x, objective)`.
pub fn active_set_oracle(
    q_mat: &DMatrix<f64>,
    q: &[f64],
    a: &DMatrix<f64>,
    b: &[f64],
    g: &DMatrix<f64>,
    h: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let (n, p, m) = (q_mat.nrows(), a.nrows(), g.nrows());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = p + act.len();
        if k > n {
            continue;
        }
        let mut c = DMatrix::zeros(k, n);
        let mut d = Vec::with_capacity(k);
        for i in 0..p {
            c.row_mut(i).copy_from(&a.row(i));
            d.push(b[i]);
        }
        for (j, &i) in act.iter().enumerate() {
            c.row_mut(p + j).copy_from(&g.row(i));
            d.push(h[i]);
        }
        let dim = n + k;
        let mut kk = DMatrix::zeros(dim, dim);
        kk.view_mut((0, 0), (n, n)).copy_from(q_mat);
        kk.view_mut((n, 0), (k, n)).copy_from(&c);
        kk.view_mut((0, n), (n, k)).copy_from(&c.transpose());
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            rhs[i] = -q[i];
        }
        for i in 0..k {
            rhs[n + i] = d[i];
        }
        let lu = kk.lu();
        if lu.determinant().abs() < 1e-12 {
            continue;
        }
        let Some(sol) = lu.solve(&rhs) else { continue };
        let x: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let gx = g * vec(&x);
        let feasible = (0..m).all(|i| gx[i] <= h[i] + 1e-9);
        let dual_ok = (0..act.len()).all(|j| sol[n + p + j] >= -1e-9);
        if feasible && dual_ok {
            let f = objective(q_mat, q, &x);
            if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                best = Some((x, f));
            }
        }
    }
    best
}

/// A random feasible instance together with its optimal value.
pub struct Planted {
    pub problem: ProblemData,
    pub optimum: f64,
    pub kind: &'static str,
}

/// Equality-constrained strictly convex QP solved by a dense KKT system;
/// the inequality rows are inactive at the optimum.
pub fn planted_eq_qp(rng: &mut Rng) -> Planted {
    let n = 2 + (rng.next_u64() % 11) as usize;
    let p = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
    let m = 1 + (rng.next_u64() % 6) as usize;
    let qm = random_psd(rng, n, n, 0.5);
    let q = random_vec(rng, n);
    let a = random_dense(rng, p, n, 0.8) + DMatrix::from_fn(p, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let b = random_vec(rng, p);
    let x = eq_qp_oracle(&qm, &q, &a, &b).expect("nonsingular KKT");
    let g = random_dense(rng, m, n, 0.7);
    let gx = &g * vec(&x);
    let h: Vec<f64> = (0..m).map(|i| gx[i] + rng.uniform_in(0.5, 2.0)).collect();
    let problem = ProblemData::new(
        sparse_upper(&qm),
        q.clone(),
        sparse(&a),
        b,
        sparse(&g),
        h,
        ConeSpec::nonnegative(m).unwrap(),
    )
    .unwrap();
    Planted { optimum: objective(&qm, &q, &x), problem, kind: "eq-qp" }
}

/// Small inequality-constrained QP solved by active-set enumeration.
pub fn planted_ineq_qp(rng: &mut Rng) -> Planted {
    loop {
        let n = 2 + (rng.next_u64() % 5) as usize;
        let p = (rng.next_u64() % 2) as usize;
        let m = 2 + (rng.next_u64() % 7) as usize;
        let qm = random_psd(rng, n, n, 0.2);
        let q: Vec<f64> = random_vec(rng, n).iter().map(|v| 3.0 * v).collect();
        let a = random_dense(rng, p, n, 1.0);
        let g = random_dense(rng, m, n, 0.8);
        let x0 = random_vec(rng, n);
        let b: Vec<f64> = (&a * vec(&x0)).iter().copied().collect();
        let gx = &g * vec(&x0);
        let h: Vec<f64> = (0..m).map(|i| gx[i] + rng.uniform_in(0.0, 1.0)).collect();
        let Some((_, f)) = active_set_oracle(&qm, &q, &a, &b, &g, &h) else { continue };
        let problem = ProblemData::new(
            sparse_upper(&qm),
            q,
            sparse(&a),
            b,
            sparse(&g),
            h,
            ConeSpec::nonnegative(m).unwrap(),
        )
        .unwrap();
        return Planted { problem, optimum: f, kind: "ineq-qp" };
    }
}

/// Mixed-cone problem built around a chosen primal-dual pair satisfying the
/// optimality conditions, so its optimal value is known in closed form.
/// Draws are repeated until `A` has full row rank and `[Q; A; G]` full
/// column rank, the usual assumptions under which the KKT matrix is
/// nonsingular.
pub fn planted_socp(rng: &mut Rng) -> Planted {
    loop {
        let (planted, qm, a, g) = planted_socp_draw(rng);
        let stacked = DMatrix::from_fn(qm.nrows() + a.nrows() + g.nrows(), qm.ncols(), |r, c| {
            if r < qm.nrows() {
                qm[(r, c)]
            } else if r < qm.nrows() + a.nrows() {
                a[(r - qm.nrows(), c)]
            } else {
                g[(r - qm.nrows() - a.nrows(), c)]
            }
        });
        if full_rank(&stacked) && full_rank(&a.transpose()) {
            return planted;
        }
    }
}

/// Full column rank with a relative singular-value threshold of `1e-6`.
fn full_rank(m: &DMatrix<f64>) -> bool {
    if m.ncols() == 0 {
        return true;
    }
    if m.nrows() < m.ncols() {
        return false;
    }
    let sv = m.singular_values();
    sv.min() > 1e-6 * sv.max()
}

fn planted_socp_draw(rng: &mut Rng) -> (Planted, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let l = (rng.next_u64() % 5) as usize;
    let nsoc = 1 + (rng.next_u64() % 3) as usize;
    let dims: Vec<usize> = (0..nsoc).map(|_| 2 + (rng.next_u64() % 4) as usize).collect();
    let cone = ConeSpec::new(l, dims.clone()).unwrap();
    let m = cone.dim();
    let n = 3 + (rng.next_u64() % 18) as usize;
    let p = (rng.next_u64() % (n as u64).min(6)) as usize;
    let qm = if rng.bernoulli(0.5) {
        DMatrix::zeros(n, n)
    } else {
        let r = 1 + (rng.next_u64() % 3) as usize;
        random_psd(rng, n, r, 0.0)
    };
    let a = random_dense(rng, p, n, 0.8);
    let g = random_dense(rng, m, n, 0.6);
    let x = random_vec(rng, n);
    let y = random_vec(rng, p);
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; m];
    for i in 0..l {
        if rng.bernoulli(0.5) {
            s[i] = rng.uniform_in(0.1, 2.0);
        } else {
            z[i] = rng.uniform_in(0.1, 2.0);
        }
    }
    let mut off = l;
    for &d in &dims {
        let mut u = random_vec(rng, d - 1);
        let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= nu);
        match rng.next_u64() % 3 {
            0 => {
                // s interior, z = 0
                s[off] = 1.0 + rng.uniform_in(0.1, 1.0);
                for j in 1..d {
                    s[off + j] = u[j - 1];
                }
            }
            1 => {
                z[off] = 1.0 + rng.uniform_in(0.1, 1.0);
                for j in 1..d {
                    z[off + j] = u[j - 1];
                }
            }
            _ => {
                // both on the boundary, on opposite rays
                let (ts, tz) = (rng.uniform_in(0.2, 2.0), rng.uniform_in(0.2, 2.0));
                s[off] = ts;
                z[off] = tz;
                for j in 1..d {
                    s[off + j] = ts * u[j - 1];
                    z[off + j] = -tz * u[j - 1];
                }
            }
        }
        off += d;
    }
    let xv = vec(&x);
    let qv = -(&qm * &xv) - a.transpose() * vec(&y) - g.transpose() * vec(&z);
    let q: Vec<f64> = qv.iter().copied().collect();
    let b: Vec<f64> = (&a * &xv).iter().copied().collect();
    let gx = &g * &xv;
    let h: Vec<f64> = (0..m).map(|i| gx[i] + s[i]).collect();
    let optimum = objective(&qm, &q, &x);
    let problem = ProblemData::new(sparse_upper(&qm), q, sparse(&a), b, sparse(&g), h, cone).unwrap();
    (Planted { problem, optimum, kind: "socp" }, qm, a, g)
}

/// Jordan product on a cone product.
pub fn jordan(u: &[f64], v: &[f64], cone: &ConeSpec) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for i in 0..cone.nn_count() {
        out[i] = u[i] * v[i];
    }
    for (off, d) in cone.soc_blocks() {
        out[off] = (0..d).map(|j| u[off + j] * v[off + j]).sum();
        for j in 1..d {
            out[off + j] = u[off] * v[off + j] + v[off] * u[off + j];
        }
    }
    out
}

fn soc_det(x: &[f64]) -> f64 {
    x[0] * x[0] - x[1..].iter().map(|v| v * v).sum::<f64>()
}

/// Dense NT scaling matrix `W` (symmetric) and `λ = W z`, computed from the
/// textbook formulas independently of the library.
pub fn nt_dense(s: &[f64], z: &[f64], cone: &ConeSpec) -> (DMatrix<f64>, Vec<f64>) {
    let m = cone.dim();
    let mut w = DMatrix::zeros(m, m);
    for i in 0..cone.nn_count() {
        w[(i, i)] = (s[i] / z[i]).sqrt();
    }
    for (off, d) in cone.soc_blocks() {
        let sb = &s[off..off + d];
        let zb = &z[off..off + d];
        let (ds, dz) = (soc_det(sb).sqrt(), soc_det(zb).sqrt());
        let sn: Vec<f64> = sb.iter().map(|v| v / ds).collect();
        let zn: Vec<f64> = zb.iter().map(|v| v / dz).collect();
        let gamma = ((1.0 + sn.iter().zip(&zn).map(|(a, b)| a * b).sum::<f64>()) / 2.0).sqrt();
        let mut wb = vec![0.0; d];
        wb[0] = (sn[0] + zn[0]) / (2.0 * gamma);
        for j in 1..d {
            wb[j] = (sn[j] - zn[j]) / (2.0 * gamma);
        }
        let eta = (ds / dz).sqrt();
        w[(off, off)] = eta * wb[0];
        for j in 1..d {
            w[(off, off + j)] = eta * wb[j];
            w[(off + j, off)] = eta * wb[j];
            for k in 1..d {
                let id = if j == k { 1.0 } else { 0.0 };
                w[(off + j, off + k)] = eta * (id + wb[j] * wb[k] / (1.0 + wb[0]));
            }
        }
    }
    let lambda = (&w * vec(z)).iter().copied().collect();
    (w, lambda)
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn random_interior(rng: &mut Rng, cone: &ConeSpec) -> Vec<f64> {
    let mut x = vec![0.0; cone.dim()];
    for v in x.iter_mut().take(cone.nn_count()) {
        *v = 10f64.powf(rng.uniform_in(-3.0, 1.0));
    }
    for (off, d) in cone.soc_blocks() {
        let scale = 10f64.powf(rng.uniform_in(-2.0, 1.0));
        let mut nrm = 0.0;
        for j in 1..d {
            x[off + j] = scale * rng.normal();
            nrm += x[off + j] * x[off + j];
        }
        x[off] = nrm.sqrt() + scale * 10f64.powf(rng.uniform_in(-3.0, 0.5));
    }
    x
}

/// Rows of the linearized homogeneous system evaluated densely at the
/// iterate the direction was computed from. Returns the worst row residual
/// over `1 + ‖d‖∞`, where `d` is the full right-hand side.
pub fn direction_row_error(p: &ProblemData, st: &IterateState, e: &Engine) -> f64 {
    let cone = p.cone();
    let (qm, a, g) = (dense_sym(p.quad()), dense(p.a()), dense(p.g()));
    let (x, y, z, s) = (vec(&st.x), vec(&st.y), vec(&st.z), vec(&st.s));
    let (tau, kappa) = (st.tau, st.kappa);
    let (q, b, h) = (vec(p.q()), vec(p.b()), vec(p.h()));
    let qx = &qm * &x;
    let xqx = x.dot(&qx);
    let rx = -&qx - a.transpose() * &y - g.transpose() * &z - &q * tau;
    let ry = &a * &x - &b * tau;
    let rz = &g * &x + &s - &h * tau;
    let rtau = q.dot(&x) + b.dot(&y) + h.dot(&z) + xqx / tau + kappa;
    let mu = (st.s.iter().zip(&st.z).map(|(a, b)| a * b).sum::<f64>() + kappa * tau) / (cone.cone_count() + 1) as f64;
    let sigma = e.sigma();
    let (w, lambda) = nt_dense(&st.s, &st.z, cone);
    let winv = w.clone().try_inverse().unwrap();
    let af = e.affine();
    let d = e.combined();
    let (dx, dy, dz, ds) = (vec(&d.dx), vec(&d.dy), vec(&d.dz), vec(&d.ds));

    let mut worst = 0.0f64;
    let mut rhs_norm = 0.0f64;
    let mut row = |lhs: &[DVector<f64>], rhs: DVector<f64>| {
        let sum = lhs.iter().fold(DVector::zeros(rhs.len()), |acc, t| acc + t);
        worst = worst.max((sum - &rhs).amax());
        rhs_norm = rhs_norm.max(rhs.amax());
    };
    let one = |v: f64| DVector::from_element(1, v);
    let c = 1.0 - sigma;
    row(&[-(&qm * &dx), -(a.transpose() * &dy), -(g.transpose() * &dz), -&q * d.dtau], -&rx * c);
    row(&[&a * &dx, -&b * d.dtau], -&ry * c);
    row(&[&g * &dx, ds.clone(), -&h * d.dtau], -&rz * c);
    row(
        &[
            one((&q + &qx * (2.0 / tau)).dot(&dx)),
            one(b.dot(&dy)),
            one(h.dot(&dz)),
            one(-xqx / (tau * tau) * d.dtau),
            one(d.dkappa),
        ],
        one(-rtau * c),
    );
    // complementarity rows
    let wads: Vec<f64> = (&winv * vec(&af.ds)).iter().copied().collect();
    let wadz: Vec<f64> = (&w * vec(&af.dz)).iter().copied().collect();
    let mut ds_rhs = jordan(&lambda, &lambda, cone);
    for i in 0..cone.nn_count() {
        ds_rhs[i] -= sigma * mu;
    }
    for (off, _) in cone.soc_blocks() {
        ds_rhs[off] -= sigma * mu;
    }
    let corr = jordan(&wads, &wadz, cone);
    let ds_rhs: Vec<f64> = ds_rhs.iter().zip(&corr).map(|(a, b)| -(a + b)).collect();
    let wds: Vec<f64> = (&winv * &ds).iter().copied().collect();
    let wdz: Vec<f64> = (&w * &dz).iter().copied().collect();
    row(&[vec(&jordan(&lambda, &wds, cone)), vec(&jordan(&lambda, &wdz, cone))], vec(&ds_rhs));
    row(
        &[one(kappa * d.dtau), one(tau * d.dkappa)],
        one(-(kappa * tau - sigma * mu + af.dkappa * af.dtau)),
    );
    worst / (1.0 + rhs_norm)
}
