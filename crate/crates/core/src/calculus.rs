//! Contractions, defect operators, finite unitary power dilations and the
//! functional calculus `f(T) = P_H f(U) |_H`.
//!
//! The dilation used here lives on `N + 1` copies of the base space:
//!
//! ```text
//!     | T    0  0 ... 0  D_T* |
//!     | D_T  0  0 ... 0  -T*  |
//! U = | 0    I  0 ... 0  0    |
//!     | 0    0  I ... 0  0    |
//!     | ...          I   0    |
//! ```
//!
//! It is unitary for every contraction and `P_H U^k |_H = T^k`,
//! `P_H U^{-k} |_H = (T*)^k` for `0 ≤ k ≤ N`.

use crate::circlefn::CircleFunction;
use crate::error::{Error, Result};
use crate::linalg::{cr, svd, unitary_eig, CMat, SpectralDecomp, C64};

/// Inputs with operator norm in `(1, 1 + NORM_SLACK]` are rescaled to norm 1.
pub const NORM_SLACK: f64 = 1e-10;

/// Unitarity tolerance accepted by the spectral calculus.
pub const UNITARY_TOL: f64 = 1e-10;

/// A square matrix with operator norm at most 1.
#[derive(Clone, Debug)]
pub struct Contraction {
    mat: CMat,
    norm: f64,
    delta: f64,
    renormalized: bool,
}

impl Contraction {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Shape(format!("contraction must be square, got {}x{}", mat.rows(), mat.cols())));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let norm = mat.op_norm();
        if norm > 1.0 + NORM_SLACK {
            return Err(Error::NotContraction { norm });
        }
        if norm > 1.0 {
            return Ok(Self { mat: mat.scale_re(1.0 / norm), norm: 1.0, delta: 0.0, renormalized: true });
        }
        let delta = if norm < 1.0 { ((1.0 - norm) * (1.0 + norm)).sqrt() } else { 0.0 };
        Ok(Self { mat, norm, delta, renormalized: false })
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Operator norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Strictness margin `(1 - ‖T‖²)^{1/2}`, zero unless strict.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_strict(&self) -> bool {
        self.norm < 1.0
    }

    /// Whether the input was rescaled from a norm slightly above 1.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn require_strict(&self) -> Result<()> {
        if self.is_strict() {
            Ok(())
        } else {
            Err(Error::NotStrict { norm: self.norm })
        }
    }

    pub fn adjoint(&self) -> CMat {
        self.mat.adjoint()
    }

    /// `T^k` for `k ≥ 0`, `(T*)^{|k|}` for `k < 0`.
    pub fn signed_power(&self, k: i64) -> CMat {
        if k >= 0 {
            self.mat.pow(k as usize)
        } else {
            self.mat.adjoint().pow(k.unsigned_abs() as usize)
        }
    }
}

/// `D_T = (I - T*T)^{1/2}` and `D_{T*} = (I - TT*)^{1/2}`.
#[derive(Clone, Debug)]
pub struct DefectPair {
    pub d_t: CMat,
    pub d_tstar: CMat,
}

impl DefectPair {
    /// `(‖D_T² + T*T - I‖, ‖D_{T*}² + TT* - I‖, ‖T D_T - D_{T*} T‖)` in operator norm.
    pub fn residuals(&self, t: &Contraction) -> (f64, f64, f64) {
        let m = t.mat();
        let id = CMat::identity(t.dim());
        let gram = (&(&self.d_t * &self.d_t) + &(&m.adjoint() * m) - &id).op_norm();
        let gram_star = (&(&self.d_tstar * &self.d_tstar) + &(m * &m.adjoint()) - &id).op_norm();
        let inter = (&(m * &self.d_t) - &(&self.d_tstar * m)).op_norm();
        (gram, gram_star, inter)
    }
}

/// Defect operators, computed from one SVD `T = W Σ V*` as
/// `D_T = V (I - Σ²)^{1/2} V*` and `D_{T*} = W (I - Σ²)^{1/2} W*`.
pub fn defects(t: &Contraction) -> Result<DefectPair> {
    let s = svd(t.mat())?;
    let roots: Vec<C64> =
        s.values.iter().map(|&x| cr(((1.0 - x) * (1.0 + x)).max(0.0).sqrt())).collect();
    let root_diag = CMat::from_diag(&roots);
    let d_t = (&(&s.right * &root_diag) * &s.right.adjoint()).hermitian_part();
    let d_tstar = (&(&s.left * &root_diag) * &s.left.adjoint()).hermitian_part();
    Ok(DefectPair { d_t, d_tstar })
}

/// Unitary on `N + 1` copies of the base space reproducing powers `|k| ≤ N`.
#[derive(Clone, Debug)]
pub struct FiniteDilation {
    u: CMat,
    base_dim: usize,
    valid_degree: usize,
    unitarity_residual: f64,
}

impl FiniteDilation {
    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Number of base-space blocks, `N + 1`.
    pub fn blocks(&self) -> usize {
        self.valid_degree + 1
    }

    /// The block carrying the embedded base space.
    pub fn block_index_of_h(&self) -> usize {
        0
    }

    pub fn valid_degree(&self) -> usize {
        self.valid_degree
    }

    /// `‖u*u - I‖` in operator norm, measured at construction.
    pub fn unitarity_residual(&self) -> f64 {
        self.unitarity_residual
    }

    /// `P_H A |_H` for an operator on the dilation space.
    pub fn compress(&self, a: &CMat) -> CMat {
        a.block(0, 0, self.base_dim, self.base_dim)
    }

    /// `P_H u^k |_H` for `k = 0..=kmax` (first) and `P_H u^{-k} |_H` (second).
    pub fn power_compressions(&self, kmax: usize) -> (Vec<CMat>, Vec<CMat>) {
        let n = self.base_dim;
        let m = self.u.rows();
        let embed = CMat::from_fn(m, n, |i, j| if i == j { cr(1.0) } else { cr(0.0) });
        let walk = |op: &CMat| {
            let mut cur = embed.clone();
            let mut out = Vec::with_capacity(kmax + 1);
            out.push(cur.block(0, 0, n, n));
            for _ in 0..kmax {
                cur = op * &cur;
                out.push(cur.block(0, 0, n, n));
            }
            out
        };
        (walk(&self.u), walk(&self.u.adjoint()))
    }

    /// Largest `‖P_H u^{±k}|_H - T^{±k}‖` over `0 ≤ k ≤ N`.
    pub fn power_residual(&self, t: &Contraction) -> f64 {
        let (pos, neg) = self.power_compressions(self.valid_degree);
        let mut tk = CMat::identity(self.base_dim);
        let mut tsk = CMat::identity(self.base_dim);
        let ts = t.adjoint();
        let mut worst: f64 = 0.0;
        for k in 0..=self.valid_degree {
            if k > 0 {
                tk = &tk * t.mat();
                tsk = &tsk * &ts;
            }
            worst = worst.max((&pos[k] - &tk).op_norm()).max((&neg[k] - &tsk).op_norm());
        }
        worst
    }
}

/// Builds the finite block dilation of `t` reproducing powers up to `n`.
pub fn finite_dilation(t: &Contraction, n: usize) -> Result<FiniteDilation> {
    finite_dilation_with(t, &defects(t)?, n)
}

pub fn finite_dilation_with(t: &Contraction, d: &DefectPair, n: usize) -> Result<FiniteDilation> {
    if n == 0 {
        return Err(Error::InvalidArgument("dilation degree N must be at least 1".into()));
    }
    let b = t.dim();
    let m = (n + 1) * b;
    let mut u = CMat::zeros(m, m);
    u.set_block(0, 0, t.mat());
    u.set_block(b, 0, &d.d_t);
    u.set_block(0, n * b, &d.d_tstar);
    u.set_block(b, n * b, &-t.adjoint());
    let id = CMat::identity(b);
    for k in 1..n {
        u.set_block((k + 1) * b, k * b, &id);
    }
    let unitarity_residual = u.unitarity_residual();
    if !(unitarity_residual <= 1e-8) {
        return Err(Error::DilationNotUnitary { residual: unitarity_residual });
    }
    Ok(FiniteDilation { u, base_dim: b, valid_degree: n, unitarity_residual })
}

/// Dilation degree used by harness flows: `2 deg f + 2`.
pub fn default_dilation_degree(f: &CircleFunction) -> usize {
    2 * f.degree() + 2
}

/// `p(T) = Σ_{n<0} c_n (T*)^{|n|} + Σ_{n≥0} c_n T^n`.
///
/// The returned bound is the function's truncation certificate; by the von Neumann
/// inequality it dominates `‖f(T) - p(T)‖` for the sampled source `f`.
pub fn calc_fourier(f: &CircleFunction, t: &Contraction) -> Result<(CMat, f64)> {
    Ok((fourier_eval(f, t.mat())?, f.trunc_err()))
}

/// [`calc_fourier`] on an arbitrary square matrix.
pub fn fourier_eval(f: &CircleFunction, m: &CMat) -> Result<CMat> {
    f.require_poly()?;
    let n = m.rows();
    let mut out = CMat::identity(n).scale(f.coeff(0));
    let adj = m.adjoint();
    let mut pos = CMat::identity(n);
    let mut neg = CMat::identity(n);
    for k in 1..=f.degree() as i64 {
        pos = &pos * m;
        neg = &neg * &adj;
        let (cp, cn) = (f.coeff(k), f.coeff(-k));
        if cp != cr(0.0) {
            out = out + pos.scale(cp);
        }
        if cn != cr(0.0) {
            out = out + neg.scale(cn);
        }
    }
    Ok(out)
}

/// `Σ_j f(e^{iλ_j}) P_j` for a unitary `u`.
pub fn calc_spectral(f: &CircleFunction, u: &CMat) -> Result<CMat> {
    Ok(calc_spectral_decomp(f, &unitary_eig(u, UNITARY_TOL)?))
}

pub fn calc_spectral_decomp(f: &CircleFunction, d: &SpectralDecomp) -> CMat {
    d.apply(|l| f.eval(l))
}

/// `P_H f(U) |_H` through the finite dilation of degree `n ≥ deg f`.
pub fn calc_dilation(f: &CircleFunction, t: &Contraction, n: usize) -> Result<(CMat, f64)> {
    f.require_poly()?;
    if f.degree() > n {
        return Err(Error::DegreeOverflow { degree: f.degree(), max: n });
    }
    let dil = finite_dilation(t, n)?;
    let full = calc_spectral(f, dil.u())?;
    Ok((dil.compress(&full), f.trunc_err()))
}

/// `‖(fg)(T) - f(T) g(T)‖`: the calculus is linear but not multiplicative.
pub fn multiplicativity_defect(f: &CircleFunction, g: &CircleFunction, t: &Contraction) -> Result<f64> {
    let fg = CircleFunction::product(f, g);
    let lhs = fourier_eval(&fg, t.mat())?;
    let rhs = &fourier_eval(f, t.mat())? * &fourier_eval(g, t.mat())?;
    Ok((&lhs - &rhs).op_norm())
}
