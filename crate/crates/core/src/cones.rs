//! Nonnegative and second-order cones: Jordan algebra, interiority, line
//! search geometry and Nesterov-Todd scaling.
//!
//! A cone product is always laid out as `l` nonnegative coordinates followed
//! by the second-order blocks in order. Vectors living in the cone are plain
//! `f64` slices of length [`ConeSpec::dim`].

use crate::error::{Error, Result};

/// Radicands in the sparse SOC expansion this close to zero are clamped.
const EXPANSION_CLAMP: f64 = 1e-14;

/// Ordered cone composition: `nn_count` nonnegative cones, then one
/// second-order cone per entry of `soc_dims`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConeSpec {
    nn_count: usize,
    soc_dims: Vec<usize>,
}

impl ConeSpec {
    pub fn new(nn_count: usize, soc_dims: Vec<usize>) -> Result<Self> {
        if let Some(d) = soc_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidCone(format!(
                "second-order cone dimension must be at least 2, got {d}"
            )));
        }
        let spec = ConeSpec { nn_count, soc_dims };
        if spec.dim() == 0 {
            return Err(Error::InvalidCone("total cone dimension is zero".into()));
        }
        Ok(spec)
    }

    /// The nonnegative orthant of dimension `l`.
    pub fn nonnegative(l: usize) -> Result<Self> {
        Self::new(l, Vec::new())
    }

    pub fn nn_count(&self) -> usize {
        self.nn_count
    }

    pub fn soc_dims(&self) -> &[usize] {
        &self.soc_dims
    }

    pub fn soc_count(&self) -> usize {
        self.soc_dims.len()
    }

    /// Total dimension `m = l + sum(d_i)`.
    pub fn dim(&self) -> usize {
        self.nn_count + self.soc_dims.iter().sum::<usize>()
    }

    /// Number of constituent cones, `l + n_soc`. This is the degree used in
    /// the duality measure.
    pub fn cone_count(&self) -> usize {
        self.nn_count + self.soc_dims.len()
    }

    /// Iterator over `(offset, dim)` of every second-order block.
    pub fn soc_blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.soc_dims.iter().scan(self.nn_count, |off, &d| {
            let start = *off;
            *off += d;
            Some((start, d))
        })
    }

    fn check(&self, len: usize, what: &str) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} has length {len}, cone dimension is {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `x0^2 - |x1|^2` with a compensated sum of exact (FMA) products; near the
/// boundary the plain difference loses most of its digits.
#[inline]
fn soc_det(x: &[f64]) -> f64 {
    let mut s = x[0] * x[0];
    let mut err = x[0].mul_add(x[0], -s);
    for &v in &x[1..] {
        let p = v * v;
        let pe = v.mul_add(v, -p);
        // two-sum of s and -p
        let t = s - p;
        let bv = t - s;
        err += (s - (t - bv)) + (-p - bv) - pe;
        s = t;
    }
    s + err
}

/// Identity element `e`: ones on the orthant, `(1, 0, ..., 0)` per SOC block.
pub fn identity_element(cone: &ConeSpec) -> Vec<f64> {
    let mut e = vec![0.0; cone.dim()];
    add_identity(cone, &mut e, 1.0);
    e
}

/// `x += alpha * e`.
pub fn add_identity(cone: &ConeSpec, x: &mut [f64], alpha: f64) {
    for xi in &mut x[..cone.nn_count] {
        *xi += alpha;
    }
    for (off, _) in cone.soc_blocks() {
        x[off] += alpha;
    }
}

/// Jordan product `u ∘ v`.
pub fn jordan_product(u: &[f64], v: &[f64], cone: &ConeSpec) -> Result<Vec<f64>> {
    cone.check(u.len(), "u")?;
    cone.check(v.len(), "v")?;
    let mut out = vec![0.0; u.len()];
    jordan_product_into(u, v, cone, &mut out);
    Ok(out)
}

pub(crate) fn jordan_product_into(u: &[f64], v: &[f64], cone: &ConeSpec, out: &mut [f64]) {
    let l = cone.nn_count;
    for i in 0..l {
        out[i] = u[i] * v[i];
    }
    for (off, d) in cone.soc_blocks() {
        let (ub, vb) = (&u[off..off + d], &v[off..off + d]);
        let o = &mut out[off..off + d];
        o[0] = dot(ub, vb);
        for k in 1..d {
            o[k] = ub[0] * vb[k] + vb[0] * ub[k];
        }
    }
}

/// The inverse of the Jordan product operator: returns `v` with
/// `lambda ∘ v = w`.
pub fn jordan_inverse_op(lambda: &[f64], w: &[f64], cone: &ConeSpec) -> Result<Vec<f64>> {
    cone.check(lambda.len(), "lambda")?;
    cone.check(w.len(), "w")?;
    if !in_interior(lambda, cone) {
        return Err(Error::SingularOperator);
    }
    let mut out = vec![0.0; w.len()];
    jordan_inverse_into(lambda, w, cone, &mut out);
    Ok(out)
}

/// Unchecked variant of [`jordan_inverse_op`]; `lambda` must be interior.
pub(crate) fn jordan_inverse_into(lambda: &[f64], w: &[f64], cone: &ConeSpec, out: &mut [f64]) {
    let l = cone.nn_count;
    for i in 0..l {
        out[i] = w[i] / lambda[i];
    }
    for (off, d) in cone.soc_blocks() {
        let (lb, wb) = (&lambda[off..off + d], &w[off..off + d]);
        let det = soc_det(lb);
        let l1w1 = dot(&lb[1..], &wb[1..]);
        let v0 = (lb[0] * wb[0] - l1w1) / det;
        let o = &mut out[off..off + d];
        o[0] = v0;
        for k in 1..d {
            o[k] = (wb[k] - v0 * lb[k]) / lb[0];
        }
    }
}

/// Per-block determinant: `x_i` on the orthant, `x0^2 - |x1|^2` per SOC.
pub fn cone_det(x: &[f64], cone: &ConeSpec) -> Result<Vec<f64>> {
    cone.check(x.len(), "x")?;
    let mut out = Vec::with_capacity(cone.cone_count());
    out.extend_from_slice(&x[..cone.nn_count]);
    out.extend(cone.soc_blocks().map(|(off, d)| soc_det(&x[off..off + d])));
    Ok(out)
}

/// Strict interiority test.
pub fn in_interior(x: &[f64], cone: &ConeSpec) -> bool {
    if x.len() != cone.dim() {
        return false;
    }
    x[..cone.nn_count].iter().all(|&v| v > 0.0)
        && cone.soc_blocks().all(|(off, d)| {
            let b = &x[off..off + d];
            b[0] > 0.0 && soc_det(b) > 0.0
        })
}

/// Smallest `alpha` such that `v + alpha e` is interior, i.e. the
/// infimum of shifts along the identity that enter the cone.
pub fn interior_shift(v: &[f64], cone: &ConeSpec) -> f64 {
    let mut alpha = f64::NEG_INFINITY;
    for &vi in &v[..cone.nn_count] {
        alpha = alpha.max(-vi);
    }
    for (off, d) in cone.soc_blocks() {
        let b = &v[off..off + d];
        alpha = alpha.max(norm(&b[1..]) - b[0]);
    }
    alpha
}

/// Largest step `alpha` with `x + alpha dx` in the cone interior. Returns
/// `f64::INFINITY` when the ray never leaves the cone.
pub fn step_to_boundary(x: &[f64], dx: &[f64], cone: &ConeSpec) -> Result<f64> {
    cone.check(x.len(), "x")?;
    cone.check(dx.len(), "dx")?;
    if !in_interior(x, cone) {
        return Err(Error::NotInterior);
    }
    Ok(max_step(x, dx, cone))
}

/// Unchecked step-to-boundary used inside the iteration loop.
pub(crate) fn max_step(x: &[f64], dx: &[f64], cone: &ConeSpec) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..cone.nn_count {
        if dx[i] < 0.0 {
            alpha = alpha.min(-x[i] / dx[i]);
        }
    }
    for (off, d) in cone.soc_blocks() {
        alpha = alpha.min(soc_max_step(&x[off..off + d], &dx[off..off + d]));
    }
    alpha
}

/// Smallest positive root of `det(x + a dx) = a2 a^2 + 2 b a + c`.
fn soc_max_step(x: &[f64], dx: &[f64]) -> f64 {
    let a2 = soc_det(dx);
    let b = x[0] * dx[0] - dot(&x[1..], &dx[1..]);
    let c = soc_det(x);
    let scale = dx.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if a2.abs() <= 1e-15 * scale {
        // Ray parallel to the boundary: det is affine in the step.
        return if b < 0.0 { -c / (2.0 * b) } else { f64::INFINITY };
    }
    let mut disc = b * b - a2 * c;
    if disc < 0.0 {
        if disc > -1e-14 * (b * b).max(a2.abs() * c) {
            disc = 0.0;
        } else {
            // No real root: det never vanishes along the ray.
            return f64::INFINITY;
        }
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (-b / a2, -b / a2)
    } else {
        (q / a2, c / q)
    };
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Nesterov-Todd scaling of a cone product, stored block-wise together with
/// the scaled point `lambda = W^{-T} s = W z` and the sparse expansion terms
/// of each second-order block.
#[derive(Debug, Clone, PartialEq)]
pub struct NtScaling {
    cone: ConeSpec,
    /// `w = sqrt(s/z)` per orthant coordinate.
    nn_w: Vec<f64>,
    /// `eta` per SOC block.
    eta: Vec<f64>,
    /// Normalized scaling points, concatenated per SOC block.
    wbar: Vec<f64>,
    /// Expansion scalars `(a, u0, u1, v1)` per SOC block.
    expansion: Vec<[f64; 4]>,
    lambda: Vec<f64>,
}

impl NtScaling {
    /// The scaling `W = I` (unit point), as used when the KKT system is
    /// first assembled and during initialization.
    pub fn identity(cone: &ConeSpec) -> Self {
        let wbar = identity_element(&ConeSpec {
            nn_count: 0,
            soc_dims: cone.soc_dims.clone(),
        });
        let expansion = cone
            .soc_blocks()
            .map(|(off, d)| expansion_scalars(&wbar[off - cone.nn_count..off - cone.nn_count + d]))
            .collect::<Result<Vec<_>>>()
            .expect("identity expansion is well defined");
        NtScaling {
            cone: cone.clone(),
            nn_w: vec![1.0; cone.nn_count],
            eta: vec![1.0; cone.soc_count()],
            wbar,
            expansion,
            lambda: identity_element(cone),
        }
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    /// Cached scaled point `lambda`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn nn_w(&self) -> &[f64] {
        &self.nn_w
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.eta[k]
    }

    /// Normalized scaling point of SOC block `k`.
    pub fn wbar(&self, k: usize) -> &[f64] {
        let (off, d) = self.soc_range(k);
        &self.wbar[off..off + d]
    }

    /// Sparse expansion scalars `(a, u0, u1, v1)` of SOC block `k`.
    pub fn expansion(&self, k: usize) -> [f64; 4] {
        self.expansion[k]
    }

    fn soc_range(&self, k: usize) -> (usize, usize) {
        let off: usize = self.cone.soc_dims[..k].iter().sum();
        (off, self.cone.soc_dims[k])
    }

    /// Recompute the scaling in place for a new interior pair `(s, z)`.
    pub fn update(&mut self, s: &[f64], z: &[f64]) -> Result<()> {
        let l = self.cone.nn_count;
        for i in 0..l {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return Err(Error::ScalingFailure(format!(
                    "orthant coordinate {i} is not interior (s={}, z={})",
                    s[i], z[i]
                )));
            }
            self.nn_w[i] = (s[i] / z[i]).sqrt();
            self.lambda[i] = (s[i] * z[i]).sqrt();
        }
        let mut woff = 0;
        for (k, (off, d)) in self.cone.soc_blocks().enumerate() {
            let sb = &s[off..off + d];
            let zb = &z[off..off + d];
            let sdet = soc_det(sb);
            let zdet = soc_det(zb);
            if !(sb[0] > 0.0 && zb[0] > 0.0 && sdet > 0.0 && zdet > 0.0) {
                return Err(Error::ScalingFailure(format!(
                    "second-order block {k} is not interior"
                )));
            }
            let sres = sdet.sqrt();
            let zres = zdet.sqrt();
            let sz = dot(sb, zb) / (sres * zres);
            let gamma = ((1.0 + sz) / 2.0).sqrt();
            let wb = &mut self.wbar[woff..woff + d];
            wb[0] = (sb[0] / sres + zb[0] / zres) / (2.0 * gamma);
            for j in 1..d {
                wb[j] = (sb[j] / sres - zb[j] / zres) / (2.0 * gamma);
            }
            let eta = (sdet / zdet).sqrt().sqrt();
            self.eta[k] = eta;
            // lambda = W z
            let w1z1 = dot(&wb[1..], &zb[1..]);
            let lam = &mut self.lambda[off..off + d];
            lam[0] = eta * (wb[0] * zb[0] + w1z1);
            let coef = zb[0] + w1z1 / (1.0 + wb[0]);
            for j in 1..d {
                lam[j] = eta * (zb[j] + coef * wb[j]);
            }
            self.expansion[k] = expansion_scalars(wb)?;
            woff += d;
        }
        Ok(())
    }

    /// `out = W v`.
    pub fn apply_w_into(&self, v: &[f64], out: &mut [f64]) {
        let l = self.cone.nn_count;
        for i in 0..l {
            out[i] = self.nn_w[i] * v[i];
        }
        let mut woff = 0;
        for (k, (off, d)) in self.cone.soc_blocks().enumerate() {
            let wb = &self.wbar[woff..woff + d];
            let vb = &v[off..off + d];
            let eta = self.eta[k];
            let w1v1 = dot(&wb[1..], &vb[1..]);
            let coef = vb[0] + w1v1 / (1.0 + wb[0]);
            out[off] = eta * (wb[0] * vb[0] + w1v1);
            for j in 1..d {
                out[off + j] = eta * (vb[j] + coef * wb[j]);
            }
            woff += d;
        }
    }

    /// `out = W^{-T} v`. The NT scaling is symmetric, so this is `W^{-1} v`.
    pub fn apply_w_inv_t_into(&self, v: &[f64], out: &mut [f64]) {
        let l = self.cone.nn_count;
        for i in 0..l {
            out[i] = v[i] / self.nn_w[i];
        }
        let mut woff = 0;
        for (k, (off, d)) in self.cone.soc_blocks().enumerate() {
            let wb = &self.wbar[woff..woff + d];
            let vb = &v[off..off + d];
            let eta = self.eta[k];
            let w1v1 = dot(&wb[1..], &vb[1..]);
            let coef = -vb[0] + w1v1 / (1.0 + wb[0]);
            out[off] = (wb[0] * vb[0] - w1v1) / eta;
            for j in 1..d {
                out[off + j] = (vb[j] + coef * wb[j]) / eta;
            }
            woff += d;
        }
    }

    pub fn apply_w(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_w_into(v, &mut out);
        out
    }

    /// `W^T v`; identical to [`NtScaling::apply_w`] since `W` is symmetric.
    pub fn apply_w_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.apply_w(v)
    }

    pub fn apply_w_inverse_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_w_inv_t_into(v, &mut out);
        out
    }
}

/// Compute the NT scaling for the interior pair `(s, z)`.
pub fn nt_scaling_update(s: &[f64], z: &[f64], cone: &ConeSpec) -> Result<NtScaling> {
    cone.check(s.len(), "s")?;
    cone.check(z.len(), "z")?;
    let mut w = NtScaling::identity(cone);
    w.update(s, z)?;
    Ok(w)
}

/// Terms of the sparse expansion of one SOC block `eta^2 * Wbar^2`:
/// `Wbar^2 = diag(a, I) + u u^T - v v^T`, with `u = (u0, u1 wbar1)` and
/// `v = (0, v1 wbar1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocExpansion {
    pub a: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn soc_sparse_expansion(_eta: f64, wbar: &[f64]) -> Result<SocExpansion> {
    if wbar.len() < 2 || !(wbar[0] > 0.0) {
        return Err(Error::ExpansionFailure("wbar must have wbar0 > 0".into()));
    }
    let [a, u0, u1, v1] = expansion_scalars(wbar)?;
    let mut u = vec![u0];
    u.extend(wbar[1..].iter().map(|w| u1 * w));
    let mut v = vec![0.0];
    v.extend(wbar[1..].iter().map(|w| v1 * w));
    Ok(SocExpansion { a, u, v })
}

fn clamp_radicand(x: f64, what: &str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -EXPANSION_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::ExpansionFailure(format!("negative radicand in {what}: {x:e}")))
    }
}

/// `(a, u0, u1, v1)` for a normalized scaling point.
fn expansion_scalars(wbar: &[f64]) -> Result<[f64; 4]> {
    let w0 = wbar[0];
    let q = dot(&wbar[1..], &wbar[1..]);
    let c = 1.0 + w0 + q / (1.0 + w0);
    let dbar = 1.0 + 2.0 / (1.0 + w0) + q / ((1.0 + w0) * (1.0 + w0));
    let a = 0.5 * (w0 * w0 + q - c * c * q / (1.0 + dbar * q));
    let u0_sq = clamp_radicand(w0 * w0 + q - a, "u0")?;
    let u0 = u0_sq.sqrt();
    if u0 == 0.0 {
        return Err(Error::ExpansionFailure("u0 vanished".into()));
    }
    let u1 = c / u0;
    let v1 = clamp_radicand(c * c / u0_sq - dbar, "v1")?.sqrt();
    Ok([a, u0, u1, v1])
}
