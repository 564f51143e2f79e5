//! Inequality checkers for contraction pairs and the integral identity
//! `A - B = ∫_0^∞ e^{-tA} (A² - B²) e^{-tB} dt`.

use std::f64::consts::SQRT_2;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::calculus::{defects, finite_dilation_with, fourier_eval, Contraction, DefectPair};
use crate::circlefn::CircleFunction;
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, lp_norm, schatten_from_singular_values, schatten_norm, singular_values, CMat, SchattenOrder,
};

/// Relative part of the pass tolerance: a record passes when `slack ≥ -PASS_TOL · max(1, rhs)`.
pub const PASS_TOL: f64 = 1e-9;

/// Smallest `‖T₁ - T₀‖_p` accepted as a ratio denominator.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// One evaluated inequality `lhs ≤ rhs = constant_used · (norm factor)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    pub slack: f64,
    pub p: SchattenOrder,
    pub instance_id: String,
}

impl BoundReport {
    pub fn new(lhs: f64, constant: f64, factor: f64, p: SchattenOrder) -> Self {
        let rhs = constant * factor;
        Self { lhs, rhs, constant_used: constant, slack: rhs - lhs, p, instance_id: String::new() }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.instance_id = id.into();
        self
    }

    pub fn abs_tol(&self) -> f64 {
        PASS_TOL * self.rhs.max(1.0)
    }

    pub fn pass(&self) -> bool {
        self.lhs.is_finite() && self.rhs.is_finite() && self.slack >= -self.abs_tol()
    }
}

/// Schatten `p`-norm of the difference, with shape checks.
fn diff_norm(a: &CMat, b: &CMat, p: SchattenOrder) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    schatten_norm(&(a - b), p)
}

/// `(Σ s_i^q)^{1/q}` over singular values; a quasi-norm for `q < 1`.
pub fn schatten_quasi_norm(m: &CMat, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent {q} must be positive")));
    }
    let s = singular_values(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if q.is_infinite() {
        return Ok(smax);
    }
    Ok(lp_norm(s.iter().copied().filter(|&x| x > 1e-14 * smax), q, smax))
}

/// Panel layout for [`exp_integral_diff`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Uniform panels on `[0, T_max]` before refinement.
    pub initial_panels: usize,
    /// Target for the summed panel error, relative to `‖A² - B²‖_F / δ`.
    pub rel_tol: f64,
    /// Bisection depth limit per initial panel.
    pub max_depth: u32,
    pub adaptive: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { order: 16, initial_panels: 16, rel_tol: 1e-13, max_depth: 40, adaptive: true }
    }
}

/// Outcome of [`exp_integral_diff`].
#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: CMat,
    /// Panel error estimate plus the analytic tail bound, in operator norm.
    pub quad_err: f64,
    pub tail_bound: f64,
    pub t_max: f64,
    pub panels: usize,
}

/// Truncation point `max(40/δ, 40)`.
pub fn quad_horizon(delta: f64) -> f64 {
    (40.0 / delta).max(40.0)
}

const PSD_TOL: f64 = 1e-10;

fn check_positive_contraction(m: &CMat, name: &str) -> Result<crate::linalg::HermEig> {
    let e = herm_eig(m, 1e-10).map_err(|err| match err {
        Error::Shape(s) => Error::Shape(format!("{name}: {s}")),
        other => other,
    })?;
    let min = e.evals.first().copied().unwrap_or(0.0);
    let max = e.evals.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eig: min });
    }
    if max > 1.0 + 1e-10 {
        return Err(Error::NotContraction { norm: max });
    }
    Ok(e)
}

fn check_lower_bound(b: &crate::linalg::HermEig, delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    let min = b.evals.first().copied().unwrap_or(f64::INFINITY);
    if min < delta * (1.0 - 1e-9) - 1e-14 {
        return Err(Error::InvalidArgument(format!("B ⪰ δI fails: min eigenvalue {min} < δ = {delta}")));
    }
    Ok(())
}

/// Evaluates `∫_0^{T_max} e^{-tA} (A² - B²) e^{-tB} dt` in the eigenbases of `A`
/// and `B`, where the integrand is `C_ij e^{-t(α_i + β_j)}`.
pub fn exp_integral_diff(a: &CMat, b: &CMat, delta: f64, quad: &QuadConfig) -> Result<QuadResult> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!("A is {}x{}, B is {}x{}", a.rows(), a.cols(), b.rows(), b.cols())));
    }
    let ea = check_positive_contraction(a, "A")?;
    let eb = check_positive_contraction(b, "B")?;
    check_lower_bound(&eb, delta)?;
    if quad.order == 0 || quad.initial_panels == 0 {
        return Err(Error::InvalidArgument("quadrature order and panel count must be positive".into()));
    }
    let diff_sq = &(a * a) - &(b * b);
    let c = &(&ea.evecs.adjoint() * &diff_sq) * &eb.evecs;
    let n = a.rows();
    let rates: Vec<f64> =
        (0..n * n).map(|k| (ea.evals[k / n].max(0.0) + eb.evals[k % n]).max(0.0)).collect();
    let t_max = quad_horizon(delta);
    let tail_bound = diff_sq.op_norm() * (-delta * t_max).exp() / delta;

    let rule = GaussLegendre::new(NonZeroUsize::new(quad.order).expect("checked above"));
    let nodes = rule.as_node_weight_pairs();
    // Per-entry integral of e^{-s t} over [lo, hi].
    let kernel = |lo: f64, hi: f64| -> Vec<f64> {
        let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
        rates
            .iter()
            .map(|&s| nodes.iter().map(|&(x, w)| w * (-s * (mid + half * x)).exp()).sum::<f64>() * half)
            .collect()
    };
    let weighted_norm = |k: &[f64]| -> f64 {
        k.iter().enumerate().map(|(idx, &v)| v * v * c.get(idx / n, idx % n).norm_sqr()).sum::<f64>().sqrt()
    };

    let c_norm = c.frobenius();
    let budget = quad.rel_tol * c_norm / delta;
    let mut total = vec![0.0; n * n];
    let mut est_sum = 0.0;
    let mut panels = 0usize;
    let h0 = t_max / quad.initial_panels as f64;
    let mut stack: Vec<(f64, f64, u32, Vec<f64>)> = (0..quad.initial_panels)
        .rev()
        .map(|i| {
            let (lo, hi) = (i as f64 * h0, if i + 1 == quad.initial_panels { t_max } else { (i + 1) as f64 * h0 });
            (lo, hi, 0, kernel(lo, hi))
        })
        .collect();
    while let Some((lo, hi, depth, whole)) = stack.pop() {
        if !quad.adaptive || c_norm == 0.0 {
            total.iter_mut().zip(&whole).for_each(|(t, w)| *t += w);
            panels += 1;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (left, right) = (kernel(lo, mid), kernel(mid, hi));
        let refined: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let diff: Vec<f64> = whole.iter().zip(&refined).map(|(w, r)| w - r).collect();
        let est = weighted_norm(&diff);
        let allowed = budget * (hi - lo) / t_max;
        if est <= allowed || depth >= quad.max_depth {
            total.iter_mut().zip(&refined).for_each(|(t, r)| *t += r);
            est_sum += est;
            panels += 2;
        } else {
            stack.push((mid, hi, depth + 1, right));
            stack.push((lo, mid, depth + 1, left));
        }
    }

    let y = CMat::from_fn(n, n, |i, j| c.get(i, j) * total[i * n + j]);
    let value = &(&ea.evecs * &y) * &eb.evecs.adjoint();
    Ok(QuadResult { value, quad_err: est_sum + tail_bound, tail_bound, t_max, panels })
}

/// `‖A - B‖_p ≤ δ⁻¹ ‖A² - B²‖_p` for positive contractions with `B ⪰ δI`.
pub fn sqrt_lipschitz_check(a: &CMat, b: &CMat, delta: f64, p: SchattenOrder) -> Result<BoundReport> {
    check_positive_contraction(a, "A")?;
    let eb = check_positive_contraction(b, "B")?;
    check_lower_bound(&eb, delta)?;
    let lhs = diff_norm(a, b, p)?;
    let sq = schatten_norm(&(&(a * a) - &(b * b)), p)?;
    Ok(BoundReport::new(lhs, 1.0 / delta, sq, p))
}

/// Defect-difference bounds for a strict `T₀`.
#[derive(Clone, Debug)]
pub struct DefectDiffReport {
    /// `‖D_{T₁} - D_{T₀}‖_p ≤ (2/δ) ‖T₁ - T₀‖_p`.
    pub d: BoundReport,
    /// `‖D_{T₁*} - D_{T₀*}‖_p ≤ (2/δ) ‖T₁ - T₀‖_p`.
    pub d_star: BoundReport,
    /// `‖T₁*T₁ - T₀*T₀‖_p ≤ 2 ‖T₁ - T₀‖_p`.
    pub gram: BoundReport,
    /// `‖T₁T₁* - T₀T₀*‖_p ≤ 2 ‖T₁ - T₀‖_p`.
    pub gram_star: BoundReport,
}

impl DefectDiffReport {
    pub fn pass(&self) -> bool {
        self.d.pass() && self.d_star.pass() && self.gram.pass() && self.gram_star.pass()
    }
}

fn same_dim(t0: &Contraction, t1: &Contraction) -> Result<()> {
    if t0.dim() != t1.dim() {
        return Err(Error::DimensionMismatch(format!("T0 is {0}x{0}, T1 is {1}x{1}", t0.dim(), t1.dim())));
    }
    Ok(())
}

pub fn defect_diff_check(t0: &Contraction, t1: &Contraction, p: SchattenOrder) -> Result<DefectDiffReport> {
    defect_diff_check_with(t0, t1, &defects(t0)?, &defects(t1)?, p)
}

pub fn defect_diff_check_with(
    t0: &Contraction,
    t1: &Contraction,
    d0: &DefectPair,
    d1: &DefectPair,
    p: SchattenOrder,
) -> Result<DefectDiffReport> {
    same_dim(t0, t1)?;
    t0.require_strict()?;
    let dt = diff_norm(t1.mat(), t0.mat(), p)?;
    let k = 2.0 / t0.delta();
    let (m0, m1) = (t0.mat(), t1.mat());
    let gram = diff_norm(&(&m1.adjoint() * m1), &(&m0.adjoint() * m0), p)?;
    let gram_star = diff_norm(&(m1 * &m1.adjoint()), &(m0 * &m0.adjoint()), p)?;
    Ok(DefectDiffReport {
        d: BoundReport::new(diff_norm(&d1.d_t, &d0.d_t, p)?, k, dt, p),
        d_star: BoundReport::new(diff_norm(&d1.d_tstar, &d0.d_tstar, p)?, k, dt, p),
        gram: BoundReport::new(gram, 2.0, dt, p),
        gram_star: BoundReport::new(gram_star, 2.0, dt, p),
    })
}

/// `2^{1/p} (2 + δ) / δ`.
pub fn dilation_constant(delta: f64, p: SchattenOrder) -> f64 {
    2f64.powf(p.recip()) * (2.0 + delta) / delta
}

/// `k_p = 2^{1/p}(1 + √2)` for `p ≥ 2`, `2^{1/p}(1 + 2^{2/p})` otherwise.
pub fn k_p(p: SchattenOrder) -> f64 {
    let r = p.recip();
    if p.value() >= 2.0 {
        2f64.powf(r) * (1.0 + SQRT_2)
    } else {
        2f64.powf(r) * (1.0 + 2f64.powf(2.0 * r))
    }
}

/// Singular values of a fixed difference, for evaluating several Schatten orders.
#[derive(Clone, Debug)]
pub struct DiffNorms {
    sv: Vec<f64>,
    frob: f64,
}

impl DiffNorms {
    pub fn new(m: &CMat) -> Result<Self> {
        Ok(Self { sv: singular_values(m)?, frob: m.frobenius() })
    }

    pub fn of_diff(a: &CMat, b: &CMat) -> Result<Self> {
        if a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Self::new(&(a - b))
    }

    /// Same value as [`schatten_norm`] on the original matrix.
    pub fn norm(&self, p: SchattenOrder) -> f64 {
        if p == SchattenOrder::Finite(2.0) {
            return self.frob;
        }
        schatten_from_singular_values(&self.sv, p)
    }

    /// `(Σ s_i^q)^{1/q}`, a quasi-norm for `q < 1`.
    pub fn quasi(&self, q: f64) -> f64 {
        let smax = self.sv.first().copied().unwrap_or(0.0);
        if q.is_infinite() {
            return smax;
        }
        lp_norm(self.sv.iter().copied().filter(|&x| x > 1e-14 * smax), q, smax)
    }

    /// `max(‖·‖_p, ‖·‖_{p/2}^{1/2})`.
    pub fn mixed(&self, p: SchattenOrder) -> f64 {
        let half = match p {
            SchattenOrder::Inf => f64::INFINITY,
            SchattenOrder::Finite(v) => v / 2.0,
        };
        self.norm(p).max(self.quasi(half).sqrt())
    }
}

/// Dilation-difference bound with the two-part split of `u₁ - u₀`.
#[derive(Clone, Debug)]
pub struct DilationDiffReport {
    pub bound: BoundReport,
    /// Norm of the blocks `ΔT` and `-ΔT*`: `2^{1/p} ‖ΔT‖_p`.
    pub split_a: f64,
    /// Norm of the defect blocks: `(‖ΔD*‖_p^p + ‖ΔD‖_p^p)^{1/p}`.
    pub split_b: f64,
    /// `‖u₁ - u₀‖_p ≤ split_a + split_b`.
    pub split: BoundReport,
}

impl DilationDiffReport {
    pub fn pass(&self) -> bool {
        self.bound.pass() && self.split.pass()
    }
}

/// Difference of two finite dilations of the same degree, with its block pieces.
#[derive(Clone, Debug)]
pub struct DilationDiff {
    pub full: DiffNorms,
    pub dt: DiffNorms,
    pub dt_adj: DiffNorms,
    pub dd: DiffNorms,
    pub dd_star: DiffNorms,
    pub delta: f64,
}

impl DilationDiff {
    pub fn new(t0: &Contraction, t1: &Contraction, n: usize) -> Result<Self> {
        same_dim(t0, t1)?;
        t0.require_strict()?;
        let u0 = finite_dilation_with(t0, &defects(t0)?, n)?;
        let u1 = finite_dilation_with(t1, &defects(t1)?, n)?;
        let diff = u1.u() - u0.u();
        let b = t0.dim();
        let blk = |r: usize, c: usize| diff.block(r * b, c * b, b, b);
        Ok(Self {
            full: DiffNorms::new(&diff)?,
            dt: DiffNorms::new(&blk(0, 0))?,
            dt_adj: DiffNorms::new(&blk(1, n))?,
            dd: DiffNorms::new(&blk(1, 0))?,
            dd_star: DiffNorms::new(&blk(0, n))?,
            delta: t0.delta(),
        })
    }

    pub fn report(&self, p: SchattenOrder) -> DilationDiffReport {
        let join = |a: f64, b: f64| match p {
            SchattenOrder::Inf => a.max(b),
            SchattenOrder::Finite(q) => lp_norm([a, b].into_iter(), q, a.max(b)),
        };
        // The two pieces occupy disjoint block rows and columns, so their singular
        // values are the union of the blocks' singular values.
        let split_a = join(self.dt.norm(p), self.dt_adj.norm(p));
        let split_b = join(self.dd_star.norm(p), self.dd.norm(p));
        let lhs = self.full.norm(p);
        DilationDiffReport {
            bound: BoundReport::new(lhs, dilation_constant(self.delta, p), self.dt.norm(p), p),
            split_a,
            split_b,
            split: BoundReport::new(lhs, 1.0, split_a + split_b, p),
        }
    }
}

pub fn dilation_diff_check(t0: &Contraction, t1: &Contraction, n: usize, p: SchattenOrder) -> Result<DilationDiffReport> {
    Ok(DilationDiff::new(t0, t1, n)?.report(p))
}

/// `f(T₁) - f(T₀)` through the Fourier path, with its singular values.
pub fn calculus_diff(f: &CircleFunction, t0: &Contraction, t1: &Contraction) -> Result<DiffNorms> {
    same_dim(t0, t1)?;
    DiffNorms::of_diff(&fourier_eval(f, t1.mat())?, &fourier_eval(f, t0.mat())?)
}

/// `‖f(T₁) - f(T₀)‖_p ≤ (Σ_{n≠0} |n c_n|) ‖T₁ - T₀‖_p`.
pub fn series_bound_check(f: &CircleFunction, t0: &Contraction, t1: &Contraction, p: SchattenOrder) -> Result<BoundReport> {
    let dt = DiffNorms::of_diff(t1.mat(), t0.mat())?;
    Ok(series_bound_from(f, &calculus_diff(f, t0, t1)?, &dt, p))
}

pub fn series_bound_from(f: &CircleFunction, df: &DiffNorms, dt: &DiffNorms, p: SchattenOrder) -> BoundReport {
    BoundReport::new(df.norm(p), f.weighted_coeff_sum(), dt.norm(p), p)
}

/// `√2 ‖f‖_{Lip} (1 - max(‖T₀‖, ‖T₁‖)²)^{-1/2}`.
pub fn strict_pair_constant(lip: f64, norm0: f64, norm1: f64) -> f64 {
    let r = norm0.max(norm1);
    SQRT_2 * lip / ((1.0 - r) * (1.0 + r)).sqrt()
}

/// `‖f(T₁) - f(T₀)‖_p` against the strict-pair constant, chordal seminorm.
pub fn strict_pair_check(f: &CircleFunction, t0: &Contraction, t1: &Contraction, p: SchattenOrder) -> Result<BoundReport> {
    let dt = DiffNorms::of_diff(t1.mat(), t0.mat())?;
    strict_pair_from(f, t0, t1, &calculus_diff(f, t0, t1)?, &dt, p)
}

pub fn strict_pair_from(
    f: &CircleFunction,
    t0: &Contraction,
    t1: &Contraction,
    df: &DiffNorms,
    dt: &DiffNorms,
    p: SchattenOrder,
) -> Result<BoundReport> {
    t0.require_strict()?;
    t1.require_strict()?;
    let k = strict_pair_constant(f.lip_chordal()?, t0.norm(), t1.norm());
    Ok(BoundReport::new(df.norm(p), k, dt.norm(p), p))
}

/// `‖f(T₁) - f(T₀)‖_2 ≤ √2 (2 + δ)/δ · ‖f‖_{Lip} · ‖T₁ - T₀‖_2` for strict `T₀`,
/// obtained by compressing `f(u₁) - f(u₀)` and bounding the unitary difference.
pub fn p2_chain_check(f: &CircleFunction, t0: &Contraction, t1: &Contraction) -> Result<BoundReport> {
    p2_chain_from(f, t0, &calculus_diff(f, t0, t1)?, &DiffNorms::of_diff(t1.mat(), t0.mat())?)
}

pub fn p2_chain_from(f: &CircleFunction, t0: &Contraction, df: &DiffNorms, dt: &DiffNorms) -> Result<BoundReport> {
    t0.require_strict()?;
    let p = SchattenOrder::Finite(2.0);
    Ok(BoundReport::new(df.norm(p), p2_chain_constant(f, t0.delta())?, dt.norm(p), p))
}

/// `√2 (2 + δ)/δ · ‖f‖_{Lip}`.
pub fn p2_chain_constant(f: &CircleFunction, delta: f64) -> Result<f64> {
    Ok(dilation_constant(delta, SchattenOrder::Finite(2.0)) * f.lip_chordal()?)
}

/// Measured Lipschitz ratio of one instance, with reference constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub instance_id: String,
    pub p: SchattenOrder,
    pub f_id: String,
    /// `(1 - ‖T₀‖²)^{1/2}`; zero for a non-strict `T₀`.
    pub delta: f64,
    pub lhs: f64,
    pub diff_norm: f64,
    pub lip_arc: f64,
    pub lip_chordal: f64,
    /// `lhs / (lip_arc · ‖ΔT‖_p)`.
    pub ratio: f64,
    /// `lhs / (lip_chordal · ‖ΔT‖_p)`.
    pub ratio_chordal: f64,
    /// `2^{1/p}(2 + δ)/δ`, infinite when `δ = 0`.
    pub envelope: f64,
    pub k_p: f64,
    /// `max(‖ΔT‖_p, ‖ΔT‖_{p/2}^{1/2})`.
    pub mixed_norm: f64,
    /// `lhs / (lip_arc · mixed_norm)`.
    pub ratio_mixed: f64,
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Lipschitz ratio of `f` on `(T₀, T₁)`, with `f(Tᵢ)` valid for dilation degree `n ≥ deg f`.
pub fn lipschitz_ratio(
    f: &CircleFunction,
    t0: &Contraction,
    t1: &Contraction,
    p: SchattenOrder,
    n: usize,
) -> Result<RatioRecord> {
    if f.degree() > n {
        return Err(Error::DegreeOverflow { degree: f.degree(), max: n });
    }
    let dt = DiffNorms::of_diff(t1.mat(), t0.mat())?;
    lipschitz_ratio_from(f, t0.delta(), &calculus_diff(f, t0, t1)?, &dt, p)
}

pub fn lipschitz_ratio_from(
    f: &CircleFunction,
    delta: f64,
    df: &DiffNorms,
    dt: &DiffNorms,
    p: SchattenOrder,
) -> Result<RatioRecord> {
    let den = dt.norm(p);
    if !(den >= MIN_DENOMINATOR) {
        return Err(Error::InvalidArgument(format!("degenerate denominator ‖T1 - T0‖_p = {den:e}")));
    }
    let lhs = df.norm(p);
    let (la, lc) = (f.lip_arc()?, f.lip_chordal()?);
    let mixed = dt.mixed(p);
    Ok(RatioRecord {
        instance_id: String::new(),
        p,
        f_id: f.id(),
        delta,
        lhs,
        diff_norm: den,
        lip_arc: la,
        lip_chordal: lc,
        ratio: safe_ratio(lhs, la * den),
        ratio_chordal: safe_ratio(lhs, lc * den),
        envelope: if delta > 0.0 { dilation_constant(delta, p) } else { f64::INFINITY },
        k_p: k_p(p),
        mixed_norm: mixed,
        ratio_mixed: safe_ratio(lhs, la * mixed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};

    fn scalar(x: f64) -> Contraction {
        Contraction::new(CMat::scalar(cr(x))).unwrap()
    }

    #[test]
    fn scalar_integral() {
        let a = CMat::scalar(cr(0.9));
        let b = CMat::scalar(cr(0.5));
        let q = exp_integral_diff(&a, &b, 0.5, &QuadConfig::default()).unwrap();
        assert!((q.value.get(0, 0) - cr(0.4)).norm() < 1e-13);
        assert!(q.quad_err < 1e-12);
        let z = exp_integral_diff(&b, &b, 0.5, &QuadConfig::default()).unwrap();
        assert_eq!(z.value.max_abs(), 0.0);
        assert_eq!(z.quad_err, 0.0);
    }

    #[test]
    fn integral_preconditions() {
        let a = CMat::scalar(cr(0.9));
        assert!(exp_integral_diff(&a, &CMat::scalar(cr(0.2)), 0.5, &QuadConfig::default()).is_err());
        assert!(exp_integral_diff(&a, &a, 0.0, &QuadConfig::default()).is_err());
        assert!(matches!(
            exp_integral_diff(&CMat::scalar(cr(-0.5)), &a, 0.5, &QuadConfig::default()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn scalar_sqrt_lip() {
        for p in [SchattenOrder::Finite(1.0), SchattenOrder::Finite(2.0), SchattenOrder::Inf] {
            let r = sqrt_lipschitz_check(&CMat::scalar(cr(0.9)), &CMat::scalar(cr(0.5)), 0.5, p).unwrap();
            assert!((r.lhs - 0.4).abs() < 1e-15);
            assert!((r.rhs - 1.12).abs() < 1e-14);
            assert!(r.pass());
        }
    }

    #[test]
    fn scalar_defect_diff() {
        for t in [0.1, 0.5, 0.99, 1.0] {
            let r = defect_diff_check(&scalar(0.0), &scalar(t), SchattenOrder::Finite(2.0)).unwrap();
            assert!((r.d.lhs - (1.0 - (1.0 - t * t).sqrt())).abs() < 1e-14);
            assert!((r.d.rhs - 2.0 * t).abs() < 1e-15);
            assert!(r.pass());
        }
        assert!(matches!(
            defect_diff_check(&scalar(1.0), &scalar(0.0), SchattenOrder::Inf),
            Err(Error::NotStrict { .. })
        ));
    }

    #[test]
    fn dilation_constant_spot() {
        let p1 = SchattenOrder::Finite(1.0);
        assert_eq!(dilation_constant(1.0, p1), 6.0);
        let r = dilation_diff_check(&scalar(0.0), &scalar(0.3), 3, p1).unwrap();
        assert_eq!(r.bound.constant_used, 6.0);
        assert!(r.pass());
        let same = dilation_diff_check(&scalar(0.4), &scalar(0.4), 2, p1).unwrap();
        assert_eq!(same.bound.lhs, 0.0);
    }

    #[test]
    fn k_p_branches() {
        assert!((k_p(SchattenOrder::Finite(2.0)) - SQRT_2 * (1.0 + SQRT_2)).abs() < 1e-15);
        assert!((k_p(SchattenOrder::Inf) - (1.0 + SQRT_2)).abs() < 1e-15);
        assert!((k_p(SchattenOrder::Finite(1.0)) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn series_identity_function() {
        let t0 = scalar(0.3);
        let t1 = Contraction::new(CMat::scalar(c(0.1, 0.6))).unwrap();
        let r = series_bound_check(&CircleFunction::monomial(1), &t0, &t1, SchattenOrder::Inf).unwrap();
        assert_eq!(r.constant_used, 1.0);
        assert_eq!(r.slack, 0.0);
        let k = series_bound_check(&CircleFunction::constant(c(2.0, 1.0)), &t0, &t1, SchattenOrder::Inf).unwrap();
        assert_eq!(k.lhs, 0.0);
    }

    #[test]
    fn strict_pair_scalar_constant() {
        let r = strict_pair_check(&CircleFunction::monomial(1), &scalar(0.1), &scalar(0.2), SchattenOrder::Finite(2.0))
            .unwrap();
        assert!((r.constant_used - SQRT_2 / 0.96f64.sqrt()).abs() < 1e-12);
        assert!((r.lhs / 0.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_commuting_unitaries() {
        let (al, be) = (0.4f64, 1.3f64);
        let t0 = Contraction::new(CMat::scalar(C64::cis(al))).unwrap();
        let t1 = Contraction::new(CMat::scalar(C64::cis(be))).unwrap();
        let r = lipschitz_ratio(&CircleFunction::monomial(2), &t0, &t1, SchattenOrder::Finite(2.0), 2).unwrap();
        let closed = (C64::cis(2.0 * al) - C64::cis(2.0 * be)).norm() / (C64::cis(al) - C64::cis(be)).norm();
        assert!((r.ratio * r.lip_arc - closed).abs() < 1e-12);
        assert!(r.ratio * r.lip_arc <= 2.0);
        let id = lipschitz_ratio(&CircleFunction::monomial(1), &scalar(0.2), &scalar(0.7), SchattenOrder::Inf, 1).unwrap();
        assert!((id.ratio - 1.0).abs() < 1e-12);
    }

    use crate::linalg::C64;
}
