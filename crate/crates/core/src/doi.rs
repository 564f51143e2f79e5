//! Double operator integrals over finite spectral decompositions.
//!
//! For decompositions `E = Σ_j e^{iλ_j} P_j` and `F = Σ_k e^{iμ_k} Q_k`,
//! `T_Φ(X) = Σ_{j,k} Φ(λ_j, μ_k) P_j X Q_k`. It is evaluated as a Hadamard
//! product in the eigenbases, `W_E (Φ ∘ (W_E* X W_F)) W_F*`, which is the same
//! sum with a fixed evaluation order.

use std::fmt;
use std::sync::Arc;

use crate::calculus::{calc_spectral_decomp, UNITARY_TOL};
use crate::circlefn::{divided_difference, CircleFunction, DEFAULT_DIAG_TOL};
use crate::error::{Error, Result};
use crate::linalg::{cr, unitary_eig, CMat, SpectralDecomp, C64};

/// Spectral pairs closer than this (but above the diagonal tolerance) are reported.
pub const NEAR_DIAGONAL_WARN: f64 = 1e-8;

/// Relative slack allowed when checking symbol values against `sup_bound`.
const BOUND_SLACK: f64 = 1e-8;

/// Tolerance for the resolution-of-identity check on decompositions.
const BASIS_TOL: f64 = 1e-10;

pub type SymbolFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// A bounded symbol `Φ(λ, μ)` on the torus.
#[derive(Clone)]
pub struct DoiSymbol {
    eval: SymbolFn,
    sup_bound: f64,
}

impl fmt::Debug for DoiSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoiSymbol").field("sup_bound", &self.sup_bound).finish_non_exhaustive()
    }
}

impl DoiSymbol {
    pub fn new(eval: impl Fn(f64, f64) -> C64 + Send + Sync + 'static, sup_bound: f64) -> Self {
        Self { eval: Arc::new(eval), sup_bound }
    }

    pub fn constant(z: C64) -> Self {
        Self::new(move |_, _| z, z.norm())
    }

    /// `φ₁(λ) φ₂(μ)`.
    pub fn separable(
        phi1: impl Fn(f64) -> C64 + Send + Sync + 'static,
        phi2: impl Fn(f64) -> C64 + Send + Sync + 'static,
        sup_bound: f64,
    ) -> Self {
        Self::new(move |l, m| phi1(l) * phi2(m), sup_bound)
    }

    /// `h^{[1]}(λ, μ)` for `f`, bounded by the chordal Lipschitz seminorm.
    pub fn divided_difference(f: &CircleFunction) -> Result<Self> {
        Self::divided_difference_with(f, DEFAULT_DIAG_TOL)
    }

    pub fn divided_difference_with(f: &CircleFunction, diag_tol: f64) -> Result<Self> {
        let bound = f.lip_chordal()?;
        let f = f.clone();
        Ok(Self::new(move |l, m| divided_difference(&f, l, m, diag_tol), bound))
    }

    pub fn eval(&self, lambda: f64, mu: f64) -> C64 {
        (self.eval)(lambda, mu)
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Pointwise product `ΦΨ`.
    pub fn mul(&self, other: &DoiSymbol) -> DoiSymbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(move |l, m| a(l, m) * b(l, m), self.sup_bound * other.sup_bound)
    }

    /// `αΦ + βΨ`.
    pub fn lin_comb(alpha: C64, phi: &DoiSymbol, beta: C64, psi: &DoiSymbol) -> DoiSymbol {
        let (a, b) = (phi.eval.clone(), psi.eval.clone());
        Self::new(
            move |l, m| alpha * a(l, m) + beta * b(l, m),
            alpha.norm() * phi.sup_bound + beta.norm() * psi.sup_bound,
        )
    }
}

fn check_decomp(d: &SpectralDecomp) -> Result<()> {
    let w = d.basis();
    let r = w.unitarity_residual();
    if !(r <= BASIS_TOL) {
        return Err(Error::InvalidArgument(format!(
            "spectral decomposition violates the resolution of identity (residual {r:e})"
        )));
    }
    Ok(())
}

/// Symbol values on every pair of eigenvalue groups, checked against the bound.
fn symbol_table(phi: &DoiSymbol, e: &SpectralDecomp, f: &SpectralDecomp) -> Result<Vec<C64>> {
    let limit = phi.sup_bound * (1.0 + BOUND_SLACK) + 1e-14;
    let mut out = Vec::with_capacity(e.len() * f.len());
    for &l in e.phases() {
        for &m in f.phases() {
            let v = phi.eval(l, m);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite);
            }
            if v.norm() > limit {
                return Err(Error::SymbolBound { value: v.norm(), bound: phi.sup_bound });
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// `T_Φ(X) = Σ_{j,k} Φ(λ_j, μ_k) P_j X Q_k`.
pub fn doi_apply(phi: &DoiSymbol, e: &SpectralDecomp, f: &SpectralDecomp, x: &CMat) -> Result<CMat> {
    if x.rows() != e.dim() || x.cols() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, decompositions act on {} and {}",
            x.rows(),
            x.cols(),
            e.dim(),
            f.dim()
        )));
    }
    check_decomp(e)?;
    check_decomp(f)?;
    let table = symbol_table(phi, e, f)?;
    let (we, wf) = (e.basis(), f.basis());
    let mut y = &(&we.adjoint() * x) * wf;
    let nf = f.len();
    for (j, rows) in (0..e.len()).map(|j| (j, e.group_columns(j))) {
        for k in 0..nf {
            let s = table[j * nf + k];
            for r in rows.clone() {
                for col in f.group_columns(k) {
                    y.set(r, col, s * y.get(r, col));
                }
            }
        }
    }
    Ok(&(we * &y) * &wf.adjoint())
}

/// Number of eigenvalue pairs with `diag_tol < |e^{iλ} - e^{iμ}| ≤ NEAR_DIAGONAL_WARN`.
pub fn near_diagonal_pairs(e: &SpectralDecomp, f: &SpectralDecomp) -> usize {
    let mut n = 0;
    for &l in e.phases() {
        for &m in f.phases() {
            let d = (C64::cis(l) - C64::cis(m)).norm();
            if d > DEFAULT_DIAG_TOL && d <= NEAR_DIAGONAL_WARN {
                n += 1;
            }
        }
    }
    n
}

/// `T_{h^{[1]}}(U - V)`, which equals `f(U) - f(V)` for trigonometric polynomials.
pub fn birman_solomyak_delta(f: &CircleFunction, u: &CMat, v: &CMat) -> Result<CMat> {
    if u.rows() != v.rows() {
        return Err(Error::DimensionMismatch(format!("U is {}x{}, V is {}x{}", u.rows(), u.cols(), v.rows(), v.cols())));
    }
    let (e, fd) = decompose_pair(u, v)?;
    birman_solomyak_delta_with(f, &e, &fd, &(u - v))
}

/// [`birman_solomyak_delta`] with precomputed decompositions and `diff = U - V`.
pub fn birman_solomyak_delta_with(f: &CircleFunction, e: &SpectralDecomp, fd: &SpectralDecomp, diff: &CMat) -> Result<CMat> {
    doi_apply(&DoiSymbol::divided_difference(f)?, e, fd, diff)
}

/// `‖f(U)X - Xf(V) - T_{h^{[1]}}(UX - XV)‖_2`.
pub fn commutator_identity_check(f: &CircleFunction, u: &CMat, v: &CMat, x: &CMat) -> Result<f64> {
    if x.rows() != u.rows() || x.cols() != v.rows() {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, U is {}x{}, V is {}x{}",
            x.rows(),
            x.cols(),
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let (e, fd) = decompose_pair(u, v)?;
    commutator_identity_with(f, &e, &fd, x, &(&(u * x) - &(x * v)))
}

/// [`commutator_identity_check`] with precomputed decompositions and `ux_xv = UX - XV`.
pub fn commutator_identity_with(
    f: &CircleFunction,
    e: &SpectralDecomp,
    fd: &SpectralDecomp,
    x: &CMat,
    ux_xv: &CMat,
) -> Result<f64> {
    let fu = calc_spectral_decomp(f, e);
    let fv = calc_spectral_decomp(f, fd);
    let lhs = &(&fu * x) - &(x * &fv);
    let rhs = doi_apply(&DoiSymbol::divided_difference(f)?, e, fd, ux_xv)?;
    Ok((&lhs - &rhs).frobenius())
}

/// Spectral decompositions of a unitary pair, warning on near-diagonal spectral pairs.
pub fn decompose_pair(u: &CMat, v: &CMat) -> Result<(SpectralDecomp, SpectralDecomp)> {
    let e = unitary_eig(u, UNITARY_TOL)?;
    let f = unitary_eig(v, UNITARY_TOL)?;
    let near = near_diagonal_pairs(&e, &f);
    if near > 0 {
        log::warn!("{near} spectral pair(s) within {NEAR_DIAGONAL_WARN:e} of the divided-difference diagonal");
    }
    Ok((e, f))
}

/// Coefficients used by [`doi_algebra_check`] for the linearity identity.
pub const ALGEBRA_ALPHA: C64 = C64 { re: 0.75, im: -0.5 };
pub const ALGEBRA_BETA: C64 = C64 { re: -1.25, im: 0.25 };

/// Residuals `(‖T_{ΦΨ}X - T_Φ T_Ψ X‖_2, ‖T_{αΦ+βΨ}X - αT_Φ X - βT_Ψ X‖_2)`
/// with `α = ALGEBRA_ALPHA`, `β = ALGEBRA_BETA`.
pub fn doi_algebra_check(
    e: &SpectralDecomp,
    f: &SpectralDecomp,
    phi: &DoiSymbol,
    psi: &DoiSymbol,
    x: &CMat,
) -> Result<(f64, f64)> {
    let t_phi = |y: &CMat| doi_apply(phi, e, f, y);
    let t_psi_x = doi_apply(psi, e, f, x)?;
    let prod = doi_apply(&phi.mul(psi), e, f, x)?;
    let mult = (&prod - &t_phi(&t_psi_x)?).frobenius();
    let lin = doi_apply(&DoiSymbol::lin_comb(ALGEBRA_ALPHA, phi, ALGEBRA_BETA, psi), e, f, x)?;
    let expect = &t_phi(x)?.scale(ALGEBRA_ALPHA) + &t_psi_x.scale(ALGEBRA_BETA);
    Ok((mult, (&lin - &expect).frobenius()))
}

/// `e^{inλ}` as a symbol in the first variable.
pub fn left_character(n: i64) -> DoiSymbol {
    DoiSymbol::separable(move |l| C64::cis(n as f64 * l), |_| cr(1.0), 1.0)
}

/// `e^{inμ}` as a symbol in the second variable.
pub fn right_character(n: i64) -> DoiSymbol {
    DoiSymbol::separable(|_| cr(1.0), move |m| C64::cis(n as f64 * m), 1.0)
}
