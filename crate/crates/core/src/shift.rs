//! Spectral shift function recovered from trace moments, and the trace formula
//! `Tr[(f(T₁) - f(T₀)) X] = ∫_0^{2π} (d/dt) f(e^{it}) η(t) dt`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calculus::{finite_dilation, fourier_eval, Contraction};
use crate::circlefn::CircleFunction;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};

/// Points in the plot grid `t_k = 2πk/PLOT_POINTS`.
pub const PLOT_POINTS: usize = 1024;

/// `η_N(t) = (1/2π) Σ_{0<|n|≤N} ĉ(n) e^{-int}`, with `ĉ(n) = ∫_0^{2π} e^{int} η(t) dt`
/// and the constant term fixed to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftFunction {
    n: usize,
    coeffs: Vec<C64>,
}

impl ShiftFunction {
    pub fn zero(n: usize) -> Self {
        Self { n, coeffs: vec![c(0.0, 0.0); 2 * n + 1] }
    }

    /// From `(n, ĉ(n))` pairs; `n = 0` and `|n| > degree` are rejected.
    pub fn from_coeffs(degree: usize, pairs: impl IntoIterator<Item = (i64, C64)>) -> Result<Self> {
        let mut out = Self::zero(degree);
        for (k, z) in pairs {
            if k == 0 {
                return Err(Error::InvalidArgument("the constant term of η is fixed to 0".into()));
            }
            if k.unsigned_abs() as usize > degree {
                return Err(Error::DegreeOverflow { degree: k.unsigned_abs() as usize, max: degree });
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite);
            }
            out.coeffs[(k + degree as i64) as usize] = z;
        }
        Ok(out)
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.n {
            return c(0.0, 0.0);
        }
        self.coeffs[(k + self.n as i64) as usize]
    }

    fn set(&mut self, k: i64, z: C64) {
        self.coeffs[(k + self.n as i64) as usize] = z;
    }

    /// Nonzero coefficients in increasing `n`.
    pub fn coeffs(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let d = self.n as i64;
        self.coeffs.iter().enumerate().map(move |(i, &z)| (i as i64 - d, z)).filter(|(_, z)| *z != c(0.0, 0.0))
    }

    /// Keeps the coefficients with `|n| ≤ degree`.
    pub fn truncate(&self, degree: usize) -> Self {
        let mut out = Self::zero(degree);
        for k in 1..=degree.min(self.n) as i64 {
            out.set(k, self.coeff(k));
            out.set(-k, self.coeff(-k));
        }
        out
    }

    pub fn eval(&self, t: f64) -> C64 {
        let mut s = c(0.0, 0.0);
        for k in 1..=self.n as i64 {
            let e = C64::cis(-(k as f64) * t);
            s += self.coeff(k) * e + self.coeff(-k) * e.conj();
        }
        s / TAU
    }

    /// `∫_0^{2π} e^{imt} η_N(t) dt` by the trapezoid rule on `4N + 4` points
    /// (exact for trigonometric polynomials of this degree).
    pub fn reintegrate(&self, m: i64) -> C64 {
        let pts = 4 * self.n + 4;
        let h = TAU / pts as f64;
        (0..pts).map(|k| C64::cis(m as f64 * k as f64 * h) * self.eval(k as f64 * h)).sum::<C64>() * h
    }

    /// `(2π/M) Σ_k |η_N(t_k)|` on a uniform grid of `points` nodes.
    pub fn l1_grid_norm(&self, points: usize) -> f64 {
        let h = TAU / points as f64;
        (0..points).map(|k| self.eval(k as f64 * h).norm()).sum::<f64>() * h
    }

    /// `(t_k, η_N(t_k))` on the plot grid.
    pub fn samples(&self) -> Vec<(f64, C64)> {
        let h = TAU / PLOT_POINTS as f64;
        (0..PLOT_POINTS).map(|k| (k as f64 * h, self.eval(k as f64 * h))).collect()
    }

    /// Two-column text `(t, Re η_N)` and `(t, Im η_N)`.
    pub fn plot_text(&self) -> (String, String) {
        let (mut re, mut im) = (String::new(), String::new());
        for (t, z) in self.samples() {
            let _ = writeln!(re, "{t:?} {:?}", z.re);
            let _ = writeln!(im, "{t:?} {:?}", z.im);
        }
        (re, im)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shift function serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftFile {
    #[serde(rename = "N")]
    n: usize,
    coeffs: BTreeMap<String, [f64; 2]>,
}

impl Serialize for ShiftFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut pairs: Vec<(i64, C64)> = self.coeffs().collect();
        pairs.sort_by_key(|&(k, _)| k);
        // Keys are emitted in numeric order.
        use serde::ser::SerializeMap;
        struct Coeffs<'a>(&'a [(i64, C64)]);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (k, z) in self.0 {
                    m.serialize_entry(&k.to_string(), &[z.re, z.im])?;
                }
                m.end()
            }
        }
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ShiftFunction", 2)?;
        st.serialize_field("N", &self.n)?;
        st.serialize_field("coeffs", &Coeffs(&pairs))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ShiftFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = ShiftFile::deserialize(d)?;
        if file.n > MAX_SHIFT_DEGREE {
            return Err(D::Error::custom(format!("N = {} exceeds {MAX_SHIFT_DEGREE}", file.n)));
        }
        let mut pairs = Vec::with_capacity(file.coeffs.len());
        for (k, [re, im]) in file.coeffs {
            let idx: i64 = k.trim().parse().map_err(|_| D::Error::custom(format!("invalid coefficient index {k:?}")))?;
            pairs.push((idx, c(re, im)));
        }
        ShiftFunction::from_coeffs(file.n, pairs).map_err(D::Error::custom)
    }
}

/// Largest `N` accepted from files.
pub const MAX_SHIFT_DEGREE: usize = 1 << 16;

fn check_square_same(t0: &CMat, t1: &CMat, x: &CMat) -> Result<()> {
    let n = t0.rows();
    for (name, m) in [("T0", t0), ("T1", t1), ("X", x)] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
        }
    }
    Ok(())
}

fn trace_prod(a: &CMat, x: &CMat) -> C64 {
    let n = a.rows();
    let mut s = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a.get(i, k) * x.get(k, i);
        }
    }
    s
}

/// `Tr[(T₁^{(n)} - T₀^{(n)}) X]` with `T^{(n)} = (T*)^{|n|}` for `n < 0`.
pub fn moment(t0: &CMat, t1: &CMat, x: &CMat, n: i64) -> Result<C64> {
    check_square_same(t0, t1, x)?;
    if n == 0 {
        return Err(Error::InvalidArgument("moment index must be nonzero".into()));
    }
    let k = n.unsigned_abs() as usize;
    let (a0, a1) = if n > 0 { (t0.pow(k), t1.pow(k)) } else { (t0.adjoint().pow(k), t1.adjoint().pow(k)) };
    Ok(trace_prod(&(&a1 - &a0), x))
}

fn from_moments(n: usize, mut moments: impl FnMut(usize) -> (C64, C64)) -> ShiftFunction {
    let mut out = ShiftFunction::zero(n);
    for k in 1..=n {
        let (pos, neg) = moments(k);
        let ik = c(0.0, k as f64);
        out.set(k as i64, pos / ik);
        out.set(-(k as i64), neg / -ik);
    }
    out
}

/// `ĉ(n) = moment(n) / (in)` for `0 < |n| ≤ N`.
pub fn eta_recover(t0: &CMat, t1: &CMat, x: &CMat, n: usize) -> Result<ShiftFunction> {
    check_square_same(t0, t1, x)?;
    let (mut p0, mut p1) = (CMat::identity(t0.rows()), CMat::identity(t0.rows()));
    let (mut q0, mut q1) = (p0.clone(), p1.clone());
    let (s0, s1) = (t0.adjoint(), t1.adjoint());
    Ok(from_moments(n, |_| {
        p0 = &p0 * t0;
        p1 = &p1 * t1;
        q0 = &q0 * &s0;
        q1 = &q1 * &s1;
        (trace_prod(&(&p1 - &p0), x), trace_prod(&(&q1 - &q0), x))
    }))
}

/// As [`eta_recover`], with powers taken as compressions of the finite dilations of degree `N`.
pub fn eta_recover_dilation(t0: &Contraction, t1: &Contraction, x: &CMat, n: usize) -> Result<ShiftFunction> {
    check_square_same(t0.mat(), t1.mat(), x)?;
    if n == 0 {
        return Ok(ShiftFunction::zero(0));
    }
    let (pos0, neg0) = finite_dilation(t0, n)?.power_compressions(n);
    let (pos1, neg1) = finite_dilation(t1, n)?.power_compressions(n);
    Ok(from_moments(n, |k| {
        (trace_prod(&(&pos1[k] - &pos0[k]), x), trace_prod(&(&neg1[k] - &neg0[k]), x))
    }))
}

/// Both sides of the trace formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePairing {
    pub lhs: C64,
    pub rhs: C64,
}

impl TracePairing {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// `Tr[(f(T₁) - f(T₀)) X]` and `Σ_{n≠0} i n c_n ĉ(n)`, the integral of `f' η_N` by orthogonality.
pub fn trace_pairing(f: &CircleFunction, t0: &CMat, t1: &CMat, x: &CMat, eta: &ShiftFunction) -> Result<TracePairing> {
    check_square_same(t0, t1, x)?;
    if f.degree() > eta.degree() {
        return Err(Error::DegreeOverflow { degree: f.degree(), max: eta.degree() });
    }
    let d = &fourier_eval(f, t1)? - &fourier_eval(f, t0)?;
    let lhs = trace_prod(&d, x);
    let rhs = f.coeffs().filter(|&(k, _)| k != 0).map(|(k, z)| c(0.0, k as f64) * z * eta.coeff(k)).sum();
    Ok(TracePairing { lhs, rhs })
}

pub fn trace_formula_check(f: &CircleFunction, t0: &CMat, t1: &CMat, x: &CMat, eta: &ShiftFunction) -> Result<f64> {
    Ok(trace_pairing(f, t0, t1, x, eta)?.residual())
}

/// `2 · trunc_err(f) · ‖X‖_2 · √n`: how far a truncated polynomial's pairing may sit
/// from that of its source function.
pub fn truncation_allowance(f: &CircleFunction, x: &CMat) -> f64 {
    2.0 * f.trunc_err() * x.frobenius() * (x.rows() as f64).sqrt()
}

/// Largest coefficient deviation between two recoveries of the same degree.
pub fn uniqueness_check(a: &ShiftFunction, b: &ShiftFunction) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!("shift functions have N = {} and N = {}", a.n, b.n)));
    }
    Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}
