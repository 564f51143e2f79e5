//! Functions on the unit circle held as Fourier coefficient tables.
//!
//! A [`CircleFunction`] is a trigonometric polynomial `Σ_{|n|≤d} c_n e^{int}`,
//! optionally paired with a closed-form sampler of the function it was derived
//! from. The Lipschitz seminorms are computed once and cached:
//!
//! * `lip_arc`: sup of `|f(e^{iλ}) - f(e^{iμ})| / |λ - μ|`, i.e. `max_t |d/dt f(e^{it})|`;
//! * `lip_chordal`: sup of `|f(z) - f(w)| / |z - w|` over distinct `z, w` on the circle.
//!
//! They always satisfy `lip_arc ≤ lip_chordal ≤ (π/2) lip_arc`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, C64};

pub mod zoo;

/// Point evaluator `t ↦ f(e^{it})`.
pub type Sampler = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Default diagonal cutoff for [`divided_difference`].
pub const DEFAULT_DIAG_TOL: f64 = 1e-12;

/// Kernel constant of the Jackson truncation certificate: `‖f - J_N f‖_∞ ≤ C_J L / N`
/// for `f` with arc-Lipschitz constant `L`. The exact ratio `N·E_N` increases
/// towards `12 ln 2 / π ≈ 2.6476`.
pub const JACKSON_CONSTANT: f64 = 2.7;

const SEMINORM_GRID: usize = 8192;
const REFINE_CANDIDATES: usize = 16;

#[derive(Clone)]
pub struct CircleFunction {
    degree: usize,
    /// `coeffs[n + degree] = c_n`.
    coeffs: Vec<C64>,
    sampler: Option<Sampler>,
    sampler_exact: bool,
    sampler_only: bool,
    name: Option<String>,
    trunc_err: f64,
    lip_hint: Option<f64>,
    lip_arc: OnceLock<f64>,
    lip_chordal: OnceLock<f64>,
    sup: OnceLock<f64>,
}

impl fmt::Debug for CircleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleFunction")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("sampler_only", &self.sampler_only)
            .field("trunc_err", &self.trunc_err)
            .finish()
    }
}

impl CircleFunction {
    fn build(degree: usize, coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * degree + 1);
        Self {
            degree,
            coeffs,
            sampler: None,
            sampler_exact: false,
            sampler_only: false,
            name: None,
            trunc_err: 0.0,
            lip_hint: None,
            lip_arc: OnceLock::new(),
            lip_chordal: OnceLock::new(),
            sup: OnceLock::new(),
        }
    }

    /// Trigonometric polynomial from `(n, c_n)` pairs; repeated indices add up.
    pub fn from_coeffs(pairs: impl IntoIterator<Item = (i64, C64)>) -> Self {
        let map: BTreeMap<i64, C64> = pairs.into_iter().fold(BTreeMap::new(), |mut m, (n, z)| {
            *m.entry(n).or_insert(c(0.0, 0.0)) += z;
            m
        });
        let degree = map
            .iter()
            .filter(|(_, z)| **z != c(0.0, 0.0))
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![c(0.0, 0.0); 2 * degree + 1];
        for (n, z) in map {
            if n.unsigned_abs() as usize <= degree {
                coeffs[(n + degree as i64) as usize] = z;
            }
        }
        Self::build(degree, coeffs)
    }

    /// `z^n` (with `z^{-n}` meaning `z̄^n` on the circle).
    pub fn monomial(n: i64) -> Self {
        let mut f = Self::from_coeffs([(n, cr(1.0))]);
        f.sampler = Some(Arc::new(move |t: f64| C64::cis(n as f64 * t)));
        f.sampler_exact = true;
        f
    }

    pub fn constant(value: C64) -> Self {
        Self::from_coeffs([(0, value)])
    }

    /// A function known only through point samples. `lip_hint` is a certified
    /// arc-Lipschitz constant; without it the seminorm routines refuse the function.
    pub fn from_sampler(sampler: Sampler, lip_hint: Option<f64>) -> Self {
        let mut f = Self::build(0, vec![c(0.0, 0.0)]);
        f.sampler = Some(sampler);
        f.sampler_only = true;
        f.lip_hint = lip_hint;
        f
    }

    /// Attach a closed-form sampler. `exact` asserts that it equals the polynomial.
    pub fn with_sampler(mut self, sampler: Sampler, exact: bool) -> Self {
        self.sampler = Some(sampler);
        self.sampler_exact = exact;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_trunc_err(mut self, err: f64) -> Self {
        self.trunc_err = err;
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Display id: the zoo name, or `poly<degree>`.
    pub fn id(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("poly{}", self.degree))
    }

    /// Certified sup-norm distance between the polynomial and its source (0 if exact).
    pub fn trunc_err(&self) -> f64 {
        self.trunc_err
    }

    pub fn is_trig_poly(&self) -> bool {
        !self.sampler_only
    }

    pub fn sampler(&self) -> Option<&Sampler> {
        self.sampler.as_ref()
    }

    pub fn sampler_is_exact(&self) -> bool {
        self.sampler_exact
    }

    pub fn coeff(&self, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.degree {
            return c(0.0, 0.0);
        }
        self.coeffs[(n + self.degree as i64) as usize]
    }

    /// Nonzero coefficients `(n, c_n)` in increasing `n`.
    pub fn coeffs(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let d = self.degree as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &z)| (k as i64 - d, z))
            .filter(|(_, z)| *z != c(0.0, 0.0))
    }

    pub(crate) fn require_poly(&self) -> Result<()> {
        if self.sampler_only {
            Err(Error::InvalidArgument(format!(
                "{} is sampler-only; a coefficient table is required",
                self.id()
            )))
        } else {
            Ok(())
        }
    }

    /// `f(e^{it})`: the polynomial, or the sampler for sampler-only functions.
    pub fn eval(&self, t: f64) -> C64 {
        match (&self.sampler, self.sampler_only) {
            (Some(s), true) => s(t),
            _ => self.eval_poly(t),
        }
    }

    /// The source function (sampler when present), used to measure truncation error.
    pub fn eval_source(&self, t: f64) -> C64 {
        match &self.sampler {
            Some(s) => s(t),
            None => self.eval_poly(t),
        }
    }

    fn eval_poly(&self, t: f64) -> C64 {
        self.derivs::<1>(t)[0]
    }

    /// `d/dt f(e^{it})`.
    pub fn derivative(&self, t: f64) -> C64 {
        self.derivs::<2>(t)[1]
    }

    /// `[f, f', f'', ...]` in the angle variable.
    fn derivs<const K: usize>(&self, t: f64) -> [C64; K] {
        let mut out = [c(0.0, 0.0); K];
        let d = self.degree as i64;
        for (k, &z) in self.coeffs.iter().enumerate() {
            if z == c(0.0, 0.0) {
                continue;
            }
            let n = k as i64 - d;
            let mut term = z * C64::cis(n as f64 * t);
            let step = c(0.0, n as f64);
            for slot in out.iter_mut() {
                *slot += term;
                term *= step;
            }
        }
        out
    }

    /// `Σ_{n≠0} |n c_n|`.
    pub fn weighted_coeff_sum(&self) -> f64 {
        self.coeffs().filter(|(n, _)| *n != 0).map(|(n, z)| n.unsigned_abs() as f64 * z.norm()).sum()
    }

    /// `(Σ_{n≠0} |n c_n|^2)^{1/2}`, the L² norm of the angular derivative.
    pub fn derivative_l2(&self) -> f64 {
        self.coeffs().map(|(n, z)| (n as f64 * z.norm()).powi(2)).sum::<f64>().sqrt()
    }

    fn sampler_lip(&self) -> Result<f64> {
        let hint = self.lip_hint.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{} is sampler-only and has no Lipschitz hint",
                self.id()
            ))
        })?;
        let s = self.sampler.as_ref().expect("sampler-only functions carry a sampler");
        let h = TAU / SEMINORM_GRID as f64;
        let observed = (0..SEMINORM_GRID)
            .map(|i| (s((i + 1) as f64 * h) - s(i as f64 * h)).norm() / h)
            .fold(0.0, f64::max);
        if observed > hint * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz hint {hint} contradicted by observed difference quotient {observed}"
            )));
        }
        Ok(hint)
    }

    /// Arc Lipschitz seminorm `max_t |d/dt f(e^{it})|`.
    pub fn lip_arc(&self) -> Result<f64> {
        if self.sampler_only {
            return self.sampler_lip();
        }
        Ok(*self.lip_arc.get_or_init(|| {
            grid_refined_max(self.degree, |t| {
                let [_, d1, d2, d3] = self.derivs::<4>(t);
                (
                    d1.norm_sqr(),
                    2.0 * (d1.conj() * d2).re,
                    2.0 * (d2.norm_sqr() + (d1.conj() * d3).re),
                )
            })
            .sqrt()
        }))
    }

    /// Chordal Lipschitz seminorm `sup |f(z) - f(w)| / |z - w|`.
    pub fn lip_chordal(&self) -> Result<f64> {
        if self.sampler_only {
            return Ok(self.sampler_lip()? * PI / 2.0);
        }
        let arc = self.lip_arc()?;
        Ok(*self.lip_chordal.get_or_init(|| chordal_sup(self).max(arc)))
    }

    /// Arc-Lipschitz upper certificate from the grid maximum and a bound on the
    /// curvature of `|f'|²`; always `≥ lip_arc`.
    pub fn lip_arc_certificate(&self) -> Result<f64> {
        self.require_poly()?;
        let s = |k: i32| -> f64 {
            self.coeffs().map(|(n, z)| (n.unsigned_abs() as f64).powi(k) * z.norm()).sum()
        };
        let (s1, s2, s3) = (s(1), s(2), s(3));
        let m = grid_size(self.degree);
        let h = TAU / m as f64;
        let grid = (0..m).map(|i| self.derivative(i as f64 * h).norm_sqr()).fold(0.0, f64::max);
        let curvature = 2.0 * (s2 * s2 + s1 * s3);
        Ok((grid + 0.5 * curvature * (h / 2.0).powi(2)).sqrt().max(self.lip_arc()?))
    }

    /// `‖f‖_∞` on the circle.
    pub fn sup_norm(&self) -> f64 {
        if self.sampler_only {
            let s = self.sampler.as_ref().expect("sampler-only functions carry a sampler");
            let h = TAU / SEMINORM_GRID as f64;
            return (0..SEMINORM_GRID).map(|i| s(i as f64 * h).norm()).fold(0.0, f64::max);
        }
        *self.sup.get_or_init(|| {
            grid_refined_max(self.degree, |t| {
                let [d0, d1, d2] = self.derivs::<3>(t);
                (d0.norm_sqr(), 2.0 * (d0.conj() * d1).re, 2.0 * (d1.norm_sqr() + (d0.conj() * d2).re))
            })
            .sqrt()
        })
    }

    /// `a f + b g` as a trigonometric polynomial.
    pub fn lin_comb(a: C64, f: &CircleFunction, b: C64, g: &CircleFunction) -> CircleFunction {
        let mut out = Self::from_coeffs(
            f.coeffs().map(|(n, z)| (n, a * z)).chain(g.coeffs().map(|(n, z)| (n, b * z))),
        );
        out.trunc_err = a.norm() * f.trunc_err + b.norm() * g.trunc_err;
        out
    }

    /// Pointwise product `f g` (coefficient convolution). Samplers are dropped.
    pub fn product(f: &CircleFunction, g: &CircleFunction) -> CircleFunction {
        let gc: Vec<(i64, C64)> = g.coeffs().collect();
        let mut out = Self::from_coeffs(
            f.coeffs().flat_map(|(n, a)| gc.iter().map(move |&(m, b)| (n + m, a * b))),
        );
        out.trunc_err = f.trunc_err * g.sup_norm() + g.trunc_err * f.sup_norm() + f.trunc_err * g.trunc_err;
        out
    }

    /// Max distance between sampler and polynomial on a uniform grid.
    pub fn sampler_deviation(&self, points: usize) -> Option<f64> {
        let s = self.sampler.as_ref()?;
        if self.sampler_only {
            return None;
        }
        let h = TAU / points as f64;
        Some((0..points).map(|i| (s(i as f64 * h) - self.eval_poly(i as f64 * h)).norm()).fold(0.0, f64::max))
    }

    /// Stable evaluation of `(p(z) - p(w)) / (z - w)` for `z = e^{ia}, w = e^{ib}`.
    fn poly_divided_difference(&self, a: f64, b: f64) -> C64 {
        let z = C64::cis(a);
        let w = C64::cis(b);
        let dz = z - w;
        if dz.norm() > 0.25 {
            return (self.eval_poly(a) - self.eval_poly(b)) / dz;
        }
        // D_n = (z^n - w^n)/(z - w) = z D_{n-1} + w^{n-1};
        // D_{-n} = -D_n z̄^n w̄^n on the circle.
        let mut acc = c(0.0, 0.0);
        let mut dn = c(0.0, 0.0);
        let mut wpow = cr(1.0);
        let mut zwbar = cr(1.0);
        let zwc = (z * w).conj();
        for n in 1..=self.degree as i64 {
            dn = z * dn + wpow;
            wpow *= w;
            zwbar *= zwc;
            acc += self.coeff(n) * dn - self.coeff(-n) * dn * zwbar;
        }
        acc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("function serialization is infallible")
    }

    /// Parses the coefficient file format. When `zoo_name` names a zoo entry with
    /// identical coefficients, the zoo entry (with its sampler and certificate) is returned.
    pub fn from_json(s: &str) -> Result<Self> {
        let f: CircleFunction = serde_json::from_str(s)?;
        if let Some(z) = f.name().and_then(zoo::by_name) {
            if z.degree == f.degree && z.coeffs == f.coeffs {
                return Ok(z);
            }
        }
        Ok(f)
    }
}

/// `(f(e^{iλ}) - f(e^{iμ})) / (e^{iλ} - e^{iμ})`, and 0 when the two points are
/// within `diag_tol` of each other. Symmetric in `(λ, μ)` bit for bit.
pub fn divided_difference(f: &CircleFunction, lambda: f64, mu: f64, diag_tol: f64) -> C64 {
    let (a, b) = {
        let (x, y) = (lambda.rem_euclid(TAU), mu.rem_euclid(TAU));
        if x <= y {
            (lambda, mu)
        } else {
            (mu, lambda)
        }
    };
    let dz = C64::cis(a) - C64::cis(b);
    if dz.norm() <= diag_tol {
        return c(0.0, 0.0);
    }
    if f.sampler_only {
        (f.eval(a) - f.eval(b)) / dz
    } else {
        f.poly_divided_difference(a, b)
    }
}

fn grid_size(degree: usize) -> usize {
    SEMINORM_GRID.max(64 * degree)
}

/// Maximum over the circle of a smooth periodic `φ(t) ≥ 0`, given `(φ, φ', φ'')`:
/// uniform grid plus Newton refinement at the largest local maxima.
fn grid_refined_max(degree: usize, phi: impl Fn(f64) -> (f64, f64, f64)) -> f64 {
    let m = grid_size(degree);
    let h = TAU / m as f64;
    let vals: Vec<f64> = (0..m).map(|i| phi(i as f64 * h).0).collect();
    let mut best = vals.iter().copied().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| vals[i] >= vals[(i + m - 1) % m] && vals[i] >= vals[(i + 1) % m])
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    for &i in peaks.iter().take(REFINE_CANDIDATES) {
        let t0 = i as f64 * h;
        let mut t = t0;
        for _ in 0..60 {
            let (_, d1, d2) = phi(t);
            if !(d2 < 0.0) {
                break;
            }
            let step = -d1 / d2;
            let next = (t + step).clamp(t0 - 2.0 * h, t0 + 2.0 * h);
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        best = best.max(phi(t).0);
    }
    best
}

/// Sup of `|h(λ, λ + s)|` over `s ∈ (0, π]` by grid search plus compass refinement.
fn chordal_sup(f: &CircleFunction) -> f64 {
    let m = (32 * f.degree).max(2048);
    let h = TAU / m as f64;
    let vals: Vec<C64> = (0..m).map(|i| f.eval_poly(i as f64 * h)).collect();
    let chords: Vec<f64> = (0..=m / 2).map(|k| 2.0 * (PI * k as f64 / m as f64).sin()).collect();

    const KEEP: usize = 24;
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(KEEP + 1);
    for i in 0..m {
        for k in 1..=m / 2 {
            let q = (vals[(i + k) % m] - vals[i]).norm() / chords[k];
            if cand.len() == KEEP && q <= cand[KEEP - 1].0 {
                continue;
            }
            let near = cand.iter().position(|&(_, ci, ck)| {
                let di = (ci as isize - i as isize).unsigned_abs();
                di.min(m - di) <= 3 && (ck as isize - k as isize).unsigned_abs() <= 3
            });
            match near {
                Some(pos) if cand[pos].0 >= q => continue,
                Some(pos) => {
                    cand.remove(pos);
                }
                None => {}
            }
            let at = cand.partition_point(|&(v, _, _)| v >= q);
            cand.insert(at, (q, i, k));
            cand.truncate(KEEP);
        }
    }

    let psi = |lam: f64, s: f64| -> f64 {
        let s = s.clamp(1e-9, PI);
        f.poly_divided_difference(lam, lam + s).norm()
    };
    let mut best = cand.first().map_or(0.0, |x| x.0);
    for &(_, i, k) in &cand {
        let (mut lam, mut s) = (i as f64 * h, k as f64 * h);
        let mut val = psi(lam, s);
        let mut step = h;
        let mut iters = 0;
        while step > 1e-13 && iters < 4000 {
            iters += 1;
            let mut moved = false;
            for (dl, ds) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let (nl, ns) = (lam + dl, (s + ds).clamp(1e-9, PI));
                let v = psi(nl, ns);
                if v > val {
                    lam = nl;
                    s = ns;
                    val = v;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}

/// Jackson-kernel approximant of degree `≤ n` of a sampled function.
///
/// `lip` is an arc-Lipschitz constant of the sampled function; the returned
/// bound `C_J · lip / n` dominates `‖f - J_n f‖_∞`.
pub fn jackson_truncate(sampler: Sampler, n: usize, lip: f64) -> Result<(CircleFunction, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("Jackson truncation needs degree N >= 1".into()));
    }
    if !(lip >= 0.0) || !lip.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid Lipschitz constant {lip}")));
    }
    let m = (n / 2 + 1) as i64;
    let support = (2 * m - 2) as usize;
    // Fejér triangle a_k = m - |k|; the Jackson weights are its self-convolution.
    let tri = |k: i64| if k.abs() < m { m - k.abs() } else { 0 };
    let conv: Vec<i64> = (-(support as i64)..=support as i64)
        .map(|k| (-(m - 1)..m).map(|j| tri(j) * tri(k - j)).sum())
        .collect();
    let center = conv[support] as f64;

    let nodes = (16 * n).max(16384);
    let table: Vec<C64> = (0..nodes).map(|r| C64::cis(-TAU * r as f64 / nodes as f64)).collect();
    let samples: Vec<C64> = (0..nodes).map(|j| sampler(TAU * j as f64 / nodes as f64)).collect();
    if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut raw = Vec::with_capacity(2 * support + 1);
    for k in -(support as i64)..=support as i64 {
        let kk = k.rem_euclid(nodes as i64) as usize;
        let sum: C64 = samples.iter().enumerate().map(|(j, &v)| v * table[(kk * j) % nodes]).sum();
        let weight = conv[(k + support as i64) as usize] as f64 / center;
        raw.push((k, sum / nodes as f64 * weight));
    }
    let scale = raw.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    // Roundoff level of an M-term DFT sum.
    let floor = nodes as f64 * f64::EPSILON * scale;
    let poly = CircleFunction::from_coeffs(raw.into_iter().filter(|(_, z)| z.norm() > floor));
    let err = JACKSON_CONSTANT * lip / n as f64;
    let mut out = poly.with_trunc_err(err);
    out.sampler = Some(sampler);
    Ok((out, err))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    degree: usize,
    coeffs: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zoo_name: Option<String>,
}

impl Serialize for CircleFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        struct Coeffs<'a>(&'a CircleFunction);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(None)?;
                for (n, z) in self.0.coeffs() {
                    map.serialize_entry(&n.to_string(), &[z.re, z.im])?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("degree", &self.degree)?;
        map.serialize_entry("coeffs", &Coeffs(self))?;
        if let Some(name) = &self.name {
            map.serialize_entry("zoo_name", name)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for CircleFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = FunctionFile::deserialize(d)?;
        if file.degree > 1 << 20 {
            return Err(D::Error::custom(format!("degree {} is too large", file.degree)));
        }
        let mut coeffs = vec![c(0.0, 0.0); 2 * file.degree + 1];
        for (key, [re, im]) in file.coeffs {
            let n: i64 = key.trim().parse().map_err(|_| D::Error::custom(format!("bad index {key:?}")))?;
            if n.unsigned_abs() as usize > file.degree {
                return Err(D::Error::custom(format!("index {n} exceeds degree {}", file.degree)));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(D::Error::custom("non-finite coefficient"));
            }
            coeffs[(n + file.degree as i64) as usize] += c(re, im);
        }
        let mut f = CircleFunction::build(file.degree, coeffs);
        f.name = file.zoo_name;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eval_examples() {
        assert!(close(CircleFunction::monomial(1).eval(FRAC_PI_2), c(0.0, 1.0), 1e-15));
        let one = CircleFunction::constant(cr(1.0));
        assert!(close(one.eval(0.3), cr(1.0), 0.0));
        let cos2 = CircleFunction::from_coeffs([(1, cr(1.0)), (-1, cr(1.0))]);
        for t in [0.0, 0.4, 2.0, 5.5] {
            assert!(close(cos2.eval(t), cr(2.0 * t.cos()), 1e-14));
        }
    }

    #[test]
    fn lip_arc_examples() {
        assert!((CircleFunction::monomial(1).lip_arc().unwrap() - 1.0).abs() < 1e-12);
        assert!((CircleFunction::monomial(3).lip_arc().unwrap() - 3.0).abs() < 1e-12);
        let f = CircleFunction::from_coeffs([(1, cr(1.0)), (2, cr(1.0))]);
        // dense-grid oracle: |i e^{it} + 2i e^{2it}| is maximal at t = 0.
        let oracle = (0..200_000)
            .map(|i| {
                let t = TAU * i as f64 / 200_000.0;
                (c(0.0, 1.0) * C64::cis(t) + c(0.0, 2.0) * C64::cis(2.0 * t)).norm()
            })
            .fold(0.0, f64::max);
        assert!((oracle - 3.0).abs() < 1e-9);
        assert!((f.lip_arc().unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn lip_chordal_examples() {
        assert!((CircleFunction::monomial(1).lip_chordal().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(CircleFunction::constant(c(2.0, 1.0)).lip_chordal().unwrap(), 0.0);
    }

    #[test]
    fn sampler_only_needs_hint() {
        let s: Sampler = Arc::new(|t: f64| cr(t.sin().abs()));
        let f = CircleFunction::from_sampler(s.clone(), None);
        assert!(f.lip_arc().is_err());
        assert!(f.lip_chordal().is_err());
        let g = CircleFunction::from_sampler(s.clone(), Some(1.0));
        assert_eq!(g.lip_arc().unwrap(), 1.0);
        let bad = CircleFunction::from_sampler(s, Some(0.5));
        assert!(bad.lip_arc().is_err());
    }

    #[test]
    fn divided_difference_examples() {
        let sq = CircleFunction::monomial(2);
        for (l, m) in [(0.1, 2.0), (1.0, 1.0 + 1e-7), (3.0, -2.5)] {
            let want = C64::cis(l) + C64::cis(m);
            assert!(close(divided_difference(&sq, l, m, DEFAULT_DIAG_TOL), want, 1e-12));
        }
        let z = CircleFunction::monomial(1);
        assert!(close(divided_difference(&z, 0.3, 4.0, DEFAULT_DIAG_TOL), cr(1.0), 1e-14));
        assert_eq!(divided_difference(&z, 0.7, 0.7, DEFAULT_DIAG_TOL), c(0.0, 0.0));
    }

    #[test]
    fn divided_difference_negative_powers() {
        let f = CircleFunction::from_coeffs([(-3, c(0.5, 0.2)), (2, cr(-1.0)), (0, cr(4.0))]);
        for (l, m) in [(0.2, 0.2 + 1e-6), (1.0, 2.5), (6.0, 0.1)] {
            let direct = (f.eval(l) - f.eval(m)) / (C64::cis(l) - C64::cis(m));
            assert!(close(divided_difference(&f, l, m, DEFAULT_DIAG_TOL), direct, 1e-8));
        }
    }

    #[test]
    fn weighted_coeff_sums() {
        assert_eq!(CircleFunction::monomial(1).weighted_coeff_sum(), 1.0);
        let f = CircleFunction::from_coeffs([(3, cr(1.0)), (-1, cr(1.0))]);
        assert_eq!(f.weighted_coeff_sum(), 4.0);
        let g = CircleFunction::from_coeffs((1..=5).map(|n| (n, cr(1.0 / (n * n) as f64))));
        let oracle: f64 = (1..=5).map(|n| 1.0 / n as f64).sum();
        assert!((oracle - 137.0 / 60.0).abs() < 1e-15);
        assert!((g.weighted_coeff_sum() - oracle).abs() < 1e-14);
    }

    #[test]
    fn jackson_rejects_zero_degree() {
        let s: Sampler = Arc::new(|_| cr(1.0));
        assert!(jackson_truncate(s, 0, 1.0).is_err());
    }

    #[test]
    fn jackson_constant_sampler() {
        let s: Sampler = Arc::new(|_| c(2.0, -1.0));
        let (f, err) = jackson_truncate(s, 16, 0.0).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(f.degree(), 0);
        assert!(close(f.coeff(0), c(2.0, -1.0), 1e-15));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f = CircleFunction::from_coeffs([(-2, c(0.25, 1.0)), (1, cr(3.0))]).with_name("custom");
        let s = f.to_json();
        assert_eq!(s, r#"{"degree":2,"coeffs":{"-2":[0.25,1.0],"1":[3.0,0.0]},"zoo_name":"custom"}"#);
        let g = CircleFunction::from_json(&s).unwrap();
        assert_eq!(g.coeff(-2), f.coeff(-2));
        assert_eq!(g.name(), Some("custom"));
        assert!(CircleFunction::from_json(r#"{"degree":1,"coeffs":{"2":[1,0]}}"#).is_err());
        assert!(CircleFunction::from_json(r#"{"degree":1,"coeffs":{"x":[1,0]}}"#).is_err());
    }

    #[test]
    fn zoo_names_resolve() {
        let f = zoo::by_name("abs_im_z_j64").unwrap();
        let g = CircleFunction::from_json(&f.to_json()).unwrap();
        assert!(g.trunc_err() > 0.0);
        assert!(g.sampler().is_some());
    }
}
