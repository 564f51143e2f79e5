//! Dense complex matrix kernel.
//!
//! [`CMat`] is the carrier for every operator in the crate. Factorizations are
//! delegated to nalgebra; this module adds the validation, tolerances and
//! spectral bookkeeping the rest of the crate relies on.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Range, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default angular tolerance for merging unitary eigenvalues into one projection.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const SVD_EPS: f64 = f64::EPSILON;
const MAX_SWEEPS: usize = 10_000;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    m: DMatrix<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMat({}x{}) {:?}", self.rows(), self.cols(), self.m.as_slice())
    }
}

impl CMat {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("{rows}x{cols}: both dimensions must be positive")));
        }
        if rows.checked_mul(cols) != Some(entries.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows.saturating_mul(cols),
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m: DMatrix::from_row_slice(rows, cols, &entries) })
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Empty);
        }
        let out = Self { m };
        if !out.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(out)
    }

    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { m: DMatrix::from_fn(rows, cols, f) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { m: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { cr(d[i]) } else { C64::new(0.0, 0.0) })
    }

    /// 1x1 matrix.
    pub fn scalar(z: C64) -> Self {
        Self::from_fn(1, 1, |_, _| z)
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.m[(i, j)] = z;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.m
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self { m: self.m.map(|z| z * s) }
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self { m: self.m.view((r0, c0), (nr, nc)).into_owned() }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMat) {
        self.m.view_mut((r0, c0), (b.rows(), b.cols())).copy_from(&b.m);
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator norm (largest singular value). NaN for non-finite input.
    pub fn op_norm(&self) -> f64 {
        match singular_values(self) {
            Ok(s) => s.first().copied().unwrap_or(0.0),
            Err(_) => f64::NAN,
        }
    }

    /// `self^k` for `k >= 0`.
    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::identity(self.rows());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn hermitian_part(&self) -> Self {
        Self { m: (&self.m + self.m.adjoint()) * cr(0.5) }
    }

    /// Operator-norm residual `||self* self - I||`.
    pub fn unitarity_residual(&self) -> f64 {
        let r = (&self.adjoint() * self - &Self::identity(self.cols())).hermitian_part();
        if !r.is_finite() {
            return f64::NAN;
        }
        // Hermitian, so the operator norm is the largest |eigenvalue|.
        match sym_eigen(r.m.clone(), false) {
            Some((evals, _)) => evals.iter().fold(0.0, |a, &l| a.max(l.abs())),
            None => r.op_norm(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&CMat> for &CMat {
            type Output = CMat;
            fn $f(self, rhs: &CMat) -> CMat {
                CMat { m: &self.m $op &rhs.m }
            }
        }
        impl $tr<CMat> for CMat {
            type Output = CMat;
            fn $f(self, rhs: CMat) -> CMat {
                CMat { m: self.m $op rhs.m }
            }
        }
        impl $tr<&CMat> for CMat {
            type Output = CMat;
            fn $f(self, rhs: &CMat) -> CMat {
                CMat { m: self.m $op &rhs.m }
            }
        }
        impl $tr<CMat> for &CMat {
            type Output = CMat;
            fn $f(self, rhs: CMat) -> CMat {
                CMat { m: &self.m $op rhs.m }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat { m: -&self.m }
    }
}

impl Neg for CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat { m: -self.m }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.row_major().into_iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MatrixFile::deserialize(d)?;
        let entries = f.entries.into_iter().map(|[re, im]| c(re, im)).collect();
        CMat::from_row_major(f.rows, f.cols, entries).map_err(serde::de::Error::custom)
    }
}

/// Schatten index: a finite `p >= 1` or the operator norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchattenOrder {
    Finite(f64),
    Inf,
}

impl SchattenOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Self::Inf)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Self::Finite(p))
        } else {
            Err(Error::InvalidSchattenOrder(p))
        }
    }

    /// The value of `p`, with `Inf` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(p) => p,
            Self::Inf => f64::INFINITY,
        }
    }

    /// `1/p`, zero for `Inf`.
    pub fn recip(self) -> f64 {
        match self {
            Self::Finite(p) => 1.0 / p,
            Self::Inf => 0.0,
        }
    }
}

impl fmt::Display for SchattenOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for SchattenOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Self::Inf);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a Schatten order: {s:?}")))?;
        Self::new(p)
    }
}

impl Serialize for SchattenOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(p) => s.serialize_f64(*p),
            Self::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SchattenOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => SchattenOrder::new(p),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let svd = nalgebra::SVD::try_new(m.m.clone(), false, false, SVD_EPS, MAX_SWEEPS)
        .ok_or(Error::Convergence("singular value decomposition"))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Thin SVD `m = W diag(s) V*` with singular values descending.
pub struct Svd {
    pub left: CMat,
    pub values: Vec<f64>,
    pub right: CMat,
}

pub fn svd(m: &CMat) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let d = nalgebra::SVD::try_new(m.m.clone(), true, true, SVD_EPS, MAX_SWEEPS)
        .ok_or(Error::Convergence("singular value decomposition"))?;
    let u = d.u.expect("requested");
    let vt = d.v_t.expect("requested");
    let mut order: Vec<usize> = (0..d.singular_values.len()).collect();
    order.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let left = CMat::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let right = CMat::from_fn(vt.ncols(), order.len(), |i, j| vt[(order[j], i)].conj());
    let values = order.iter().map(|&k| d.singular_values[k]).collect();
    Ok(Svd { left, values, right })
}

/// Schatten p-norm: the l^p norm of the singular values.
///
/// For `p < 1.5` singular values below `1e-14 * s_max` are dropped before summing.
pub fn schatten_norm(m: &CMat, p: SchattenOrder) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if p == SchattenOrder::Finite(2.0) {
        return Ok(m.frobenius());
    }
    Ok(schatten_from_singular_values(&singular_values(m)?, p))
}

/// Schatten norm from singular values sorted in descending order.
pub fn schatten_from_singular_values(s: &[f64], p: SchattenOrder) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    match p {
        SchattenOrder::Inf => smax,
        SchattenOrder::Finite(p) => {
            let floor = if p < 1.5 { 1e-14 * smax } else { 0.0 };
            lp_norm(s.iter().copied().filter(|&x| x > floor), p, smax)
        }
    }
}

/// `(sum x^q)^{1/q}` for any `q > 0`, scaled by `xmax` to avoid overflow.
pub(crate) fn lp_norm(xs: impl Iterator<Item = f64>, q: f64, xmax: f64) -> f64 {
    if xmax == 0.0 {
        return 0.0;
    }
    let sum: f64 = xs.map(|x| (x / xmax).powf(q)).sum();
    xmax * sum.powf(1.0 / q)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub evals: Vec<f64>,
    pub evecs: CMat,
}

impl HermEig {
    /// `V g(Λ) V*`.
    pub fn apply(&self, g: impl Fn(f64) -> C64) -> CMat {
        let v = self.evecs.as_dmatrix();
        let mut scaled = v.clone();
        for (j, &l) in self.evals.iter().enumerate() {
            let gj = g(l);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= gj;
            }
        }
        CMat::wrap(scaled * v.adjoint())
    }
}

fn check_square(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// Hermitian eigendecomposition. The input is symmetrized before factoring.
pub fn herm_eig(h: &CMat, tol: f64) -> Result<HermEig> {
    check_square(h)?;
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = h.op_norm();
    let defect = (h - &h.adjoint()).op_norm();
    if defect > tol * scale {
        return Err(Error::NotHermitian { defect });
    }
    let (vals, vecs) = sym_eigen(h.hermitian_part().m, true).ok_or(Error::Convergence("Hermitian eigensolver"))?;
    let vecs = vecs.expect("eigenvectors requested");
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let evals = order.iter().map(|&k| vals[k]).collect();
    let n = h.rows();
    let evecs = CMat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(HermEig { evals, evecs })
}

/// Symmetric eigensolve after an exact power-of-two rescaling to unit size.
///
/// nalgebra's QR iteration can emit inf/NaN when every entry is near the
/// roundoff floor (e.g. `u*u - I` for a unitary `u`), because the rotations
/// underflow into subnormals. `None` on non-convergence or non-finite output.
fn sym_eigen(m: DMatrix<C64>, vectors: bool) -> Option<(Vec<f64>, Option<DMatrix<C64>>)> {
    let big = m.iter().fold(0.0, |a: f64, z| a.max(z.norm()));
    if big == 0.0 {
        let n = m.nrows();
        return Some((vec![0.0; n], vectors.then(|| DMatrix::identity(n, n))));
    }
    let s = (-big.log2().floor()).clamp(-1000.0, 1000.0).exp2();
    let e = nalgebra::SymmetricEigen::try_new(m.map(|z| z * s), SVD_EPS, MAX_SWEEPS)?;
    let vals: Vec<f64> = e.eigenvalues.iter().map(|l| l / s).collect();
    if !vals.iter().all(|l| l.is_finite()) || !e.eigenvectors.iter().all(|z| z.is_finite()) {
        return None;
    }
    Some((vals, vectors.then_some(e.eigenvectors)))
}

/// Positive square root of a positive semidefinite matrix.
pub fn psd_sqrt(h: &CMat, tol: f64) -> Result<CMat> {
    let e = herm_eig(h, tol.max(1e-12))?;
    let min = e.evals.first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotPsd { min_eig: min });
    }
    Ok(e.apply(|l| cr(l.max(0.0).sqrt())).hermitian_part())
}

/// `exp(-t H)` for Hermitian `H`.
pub fn herm_exp_neg(h: &CMat, t: f64, tol: f64) -> Result<CMat> {
    let e = herm_eig(h, tol)?;
    Ok(e.apply(|l| cr((-t * l).exp())))
}

/// Spectral decomposition of a unitary: distinct phases with orthogonal projections.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    phases: Vec<f64>,
    vectors: CMat,
    groups: Vec<Range<usize>>,
}

impl SpectralDecomp {
    /// Number of distinct spectral projections.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    /// One phase per projection, in `[0, 2π)`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Orthonormal eigenbasis, columns grouped by projection.
    pub fn basis(&self) -> &CMat {
        &self.vectors
    }

    pub fn group_columns(&self, j: usize) -> Range<usize> {
        self.groups[j].clone()
    }

    /// Phase attached to each basis column.
    pub fn column_phases(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (g, r) in self.groups.iter().enumerate() {
            for k in r.clone() {
                out[k] = self.phases[g];
            }
        }
        out
    }

    pub fn projection(&self, j: usize) -> CMat {
        let r = self.groups[j].clone();
        let v = self.vectors.block(0, r.start, self.dim(), r.len());
        &v * &v.adjoint()
    }

    pub fn projections(&self) -> Vec<CMat> {
        (0..self.len()).map(|j| self.projection(j)).collect()
    }

    /// `Σ g(λ_j) P_j`.
    pub fn apply(&self, g: impl Fn(f64) -> C64) -> CMat {
        let v = self.vectors.as_dmatrix();
        let mut scaled = v.clone();
        for (gi, r) in self.groups.iter().enumerate() {
            let val = g(self.phases[gi]);
            for j in r.clone() {
                for i in 0..scaled.nrows() {
                    scaled[(i, j)] *= val;
                }
            }
        }
        CMat::wrap(scaled * v.adjoint())
    }

    /// `Σ e^{iλ_j} P_j`.
    pub fn reconstruct(&self) -> CMat {
        self.apply(C64::cis)
    }
}

/// Spectral decomposition of a unitary with the default grouping tolerance.
pub fn unitary_eig(u: &CMat, tol: f64) -> Result<SpectralDecomp> {
    unitary_eig_grouped(u, tol, DEFAULT_GROUP_TOL)
}

pub fn unitary_eig_grouped(u: &CMat, tol: f64, group_tol: f64) -> Result<SpectralDecomp> {
    check_square(u)?;
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    let residual = u.unitarity_residual();
    if !(residual <= tol) {
        return Err(Error::NotUnitary { residual });
    }
    let n = u.rows();
    // A normal matrix has a diagonal Schur form, so the Schur vectors are eigenvectors.
    let schur = nalgebra::Schur::try_new(u.m.clone(), SVD_EPS, MAX_SWEEPS)
        .ok_or(Error::Convergence("Schur decomposition"))?;
    let (q, t) = schur.unpack();
    let mut cols: Vec<(f64, usize)> = (0..n)
        .map(|k| (t[(k, k)].arg().rem_euclid(TAU) % TAU, k))
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut groups: Vec<Vec<(f64, usize)>> = Vec::new();
    for item in cols {
        match groups.last_mut() {
            Some(g) if item.0 - g.last().unwrap().0 <= group_tol => g.push(item),
            _ => groups.push(vec![item]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0].0;
        let last = groups.last().unwrap().last().unwrap().0;
        if first + TAU - last <= group_tol {
            let tail = groups.pop().unwrap();
            groups[0].splice(0..0, tail);
        }
    }

    let mut phases = Vec::with_capacity(groups.len());
    let mut ranges = Vec::with_capacity(groups.len());
    let mut order = Vec::with_capacity(n);
    for g in &groups {
        let start = order.len();
        let mean: C64 = g.iter().map(|&(_, k)| t[(k, k)] / t[(k, k)].norm()).sum();
        let phase = if g.len() == 1 { g[0].0 } else { mean.arg().rem_euclid(TAU) % TAU };
        phases.push(phase);
        order.extend(g.iter().map(|&(_, k)| k));
        ranges.push(start..order.len());
    }
    let vectors = CMat::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(SpectralDecomp { phases, vectors, groups: ranges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn haar(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        CMat::wrap(gaussian(rng, n).into_dmatrix().qr().q())
    }

    #[test]
    fn schatten_diag_examples() {
        let d = CMat::from_real_diag(&[3.0, 4.0]);
        assert!((schatten_norm(&d, SchattenOrder::new(2.0).unwrap()).unwrap() - 5.0).abs() < 1e-14);
        assert!((schatten_norm(&d, SchattenOrder::new(1.0).unwrap()).unwrap() - 7.0).abs() < 1e-14);
        assert!((schatten_norm(&d, SchattenOrder::Inf).unwrap() - 4.0).abs() < 1e-14);
        assert!((schatten_norm(&d, SchattenOrder::new(3.0).unwrap()).unwrap() - 91f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn schatten_order_rejects_below_one() {
        assert!(SchattenOrder::new(0.5).is_err());
        assert!(SchattenOrder::new(f64::NAN).is_err());
        assert_eq!("INF".parse::<SchattenOrder>().unwrap(), SchattenOrder::Inf);
        assert_eq!("1.5".parse::<SchattenOrder>().unwrap(), SchattenOrder::Finite(1.5));
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(matches!(
            CMat::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
        let mut m = CMat::identity(2);
        m.set(0, 1, c(f64::INFINITY, 0.0));
        assert!(matches!(schatten_norm(&m, SchattenOrder::Inf), Err(Error::NonFinite)));
    }

    #[test]
    fn shape_checks() {
        assert!(CMat::from_row_major(2, 2, vec![c(1.0, 0.0)]).is_err());
        assert!(CMat::from_row_major(0, 2, vec![]).is_err());
        assert!(herm_eig(&CMat::zeros(2, 3), 1e-12).is_err());
    }

    #[test]
    fn pauli_x_and_identity_spectra() {
        let x = CMat::from_row_major(2, 2, vec![cr(0.0), cr(1.0), cr(1.0), cr(0.0)]).unwrap();
        let e = herm_eig(&x, 1e-12).unwrap();
        assert!((e.evals[0] + 1.0).abs() < 1e-14 && (e.evals[1] - 1.0).abs() < 1e-14);
        let e = herm_eig(&CMat::identity(4), 1e-12).unwrap();
        assert!(e.evals.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn herm_eig_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = gaussian(&mut rng, 5);
        let h = g.hermitian_part();
        let e = herm_eig(&h, 1e-12).unwrap();
        assert!(e.evals.windows(2).all(|w| w[0] <= w[1]));
        let rec = e.apply(cr);
        assert!((&rec - &h).op_norm() <= 1e-12 * h.op_norm());
        assert!(e.evecs.unitarity_residual() < 1e-12);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMat::from_row_major(2, 2, vec![cr(0.0), cr(1.0), cr(0.0), cr(0.0)]).unwrap();
        assert!(matches!(herm_eig(&m, 1e-10), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_sqrt_examples() {
        let s = psd_sqrt(&CMat::from_real_diag(&[4.0, 9.0]), 1e-12).unwrap();
        assert!((&s - &CMat::from_real_diag(&[2.0, 3.0])).max_abs() < 1e-14);
        let z = psd_sqrt(&CMat::zeros(3, 3), 1e-12).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let bad = CMat::from_real_diag(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&bad, 1e-12), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gaussian(&mut rng, 6);
        let h = &g * &g.adjoint();
        let s = psd_sqrt(&h, 1e-12).unwrap();
        assert!((&(&s * &s) - &h).frobenius() <= 1e-11 * h.frobenius());
        assert!((&s - &s.adjoint()).max_abs() == 0.0);
    }

    #[test]
    fn unitary_eig_examples() {
        let d = unitary_eig(&CMat::identity(3), 1e-10).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.phases()[0].abs() < 1e-15);
        assert!((&d.projection(0) - &CMat::identity(3)).max_abs() < 1e-14);

        let d = unitary_eig(&CMat::from_diag(&[cr(1.0), c(0.0, 1.0)]), 1e-10).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.phases()[0].abs() < 1e-15);
        assert!((d.phases()[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn unitary_eig_merges_across_zero() {
        let e = 1e-10;
        let u = CMat::from_diag(&[C64::cis(e), C64::cis(TAU - e), C64::cis(1.0)]);
        let d = unitary_eig(&u, 1e-10).unwrap();
        assert_eq!(d.len(), 2);
        let sizes: Vec<usize> = (0..2).map(|j| d.group_columns(j).len()).collect();
        assert!(sizes.contains(&2));
    }

    #[test]
    fn unitary_eig_rejects() {
        assert!(matches!(
            unitary_eig(&CMat::from_real_diag(&[1.0, 2.0]), 1e-10),
            Err(Error::NotUnitary { .. })
        ));
        assert!(unitary_eig(&CMat::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn resolution_of_identity_random_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = haar(&mut rng, 8);
        let d = unitary_eig(&u, 1e-10).unwrap();
        let ps = d.projections();
        let sum = ps.iter().fold(CMat::zeros(8, 8), |acc, p| acc + p);
        assert!((&sum - &CMat::identity(8)).op_norm() < 1e-11);
        for (j, pj) in ps.iter().enumerate() {
            for (k, pk) in ps.iter().enumerate() {
                let prod = pj * pk;
                let want = if j == k { pj.clone() } else { CMat::zeros(8, 8) };
                assert!((&prod - &want).op_norm() < 1e-10);
            }
        }
        assert!((&d.reconstruct() - &u).op_norm() < 1e-11);
        assert!(d.phases().iter().all(|&p| (0.0..TAU).contains(&p)));
    }

    #[test]
    fn json_shape() {
        let m = CMat::from_row_major(1, 2, vec![c(1.5, -2.0), c(0.1, 3e-300)]).unwrap();
        let s = m.to_json();
        assert_eq!(s, r#"{"rows":1,"cols":2,"entries":[[1.5,-2.0],[0.1,3e-300]]}"#);
        assert_eq!(CMat::from_json(&s).unwrap(), m);
        assert!(CMat::from_json(r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#).is_err());
        assert!(CMat::from_json(r#"{"rows":1,"cols":1,"entries":[[1,0]],"x":1}"#).is_err());
    }
}
