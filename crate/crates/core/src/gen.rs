//! Seeded random instances for the verification campaign.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::calculus::Contraction;
use crate::error::Result;
use crate::linalg::{c, herm_eig, schatten_norm, CMat, SchattenOrder, C64};

/// Bisection steps used when clipping a perturbed matrix back into the unit ball.
const CLIP_STEPS: usize = 80;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Gaussian matrix rescaled to operator norm `target_norm`.
pub fn gen_contraction_rng(rng: &mut impl Rng, n: usize, target_norm: f64) -> Result<Contraction> {
    let target = target_norm.clamp(0.0, 1.0);
    let g = gaussian_matrix(rng, n, n);
    if target == 0.0 {
        return Contraction::new(CMat::zeros(n, n));
    }
    let s = g.op_norm();
    Contraction::new(g.scale_re(target / s))
}

pub fn gen_contraction(seed: u64, n: usize, target_norm: f64) -> Result<Contraction> {
    gen_contraction_rng(&mut rng_from_seed(seed), n, target_norm)
}

/// Orthonormalized Gaussian matrix with the phases of `R`'s diagonal divided out.
pub fn gen_unitary_rng(rng: &mut impl Rng, n: usize) -> CMat {
    let qr = gaussian_matrix(rng, n, n).into_dmatrix().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    CMat::from_dmatrix(q).expect("orthonormal factor of a finite matrix is finite")
}

pub fn gen_unitary(seed: u64, n: usize) -> CMat {
    gen_unitary_rng(&mut rng_from_seed(seed), n)
}

/// `U exp(iεH)` for a random Hermitian `H` with `‖H‖ = 1`.
pub fn perturb_unitary(rng: &mut impl Rng, u: &CMat, eps: f64) -> Result<CMat> {
    let n = u.rows();
    let g = gaussian_matrix(rng, n, n);
    let h = g.hermitian_part();
    let h = h.scale_re(1.0 / h.op_norm().max(f64::MIN_POSITIVE));
    let e = herm_eig(&h, 1e-12)?;
    Ok(u * &e.apply(|l| C64::cis(eps * l)))
}

/// A base contraction and its perturbation.
#[derive(Clone, Debug)]
pub struct PairSample {
    pub t0: Contraction,
    pub t1: Contraction,
    /// Whether `T₀ + Δ` left the ball and was pulled back along the segment.
    pub clipped: bool,
    /// Fraction of `Δ` kept; 1 when not clipped.
    pub scale: f64,
}

/// `T₀` with `‖T₀‖ = norm0` and `T₁ = T₀ + sΔ`, `‖Δ‖_p = gap`, where `s ≤ 1` is the
/// largest step keeping `‖T₁‖ ≤ limit`.
pub fn gen_pair_with_gap_rng(
    rng: &mut impl Rng,
    n: usize,
    norm0: f64,
    gap: f64,
    p: SchattenOrder,
    limit: f64,
) -> Result<PairSample> {
    let t0 = gen_contraction_rng(rng, n, norm0)?;
    let g = gaussian_matrix(rng, n, n);
    let gn = schatten_norm(&g, p)?;
    let delta = if gap > 0.0 && gn > 0.0 { g.scale_re(gap / gn) } else { CMat::zeros(n, n) };
    let at = |s: f64| t0.mat() + &delta.scale_re(s);
    let (mut lo, mut hi) = (0.0, 1.0);
    let clipped = at(1.0).op_norm() > limit;
    if clipped {
        // ‖T₀ + sΔ‖ is convex in s and below the limit at s = 0.
        for _ in 0..CLIP_STEPS {
            let mid = 0.5 * (lo + hi);
            if at(mid).op_norm() <= limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        lo = 1.0;
    }
    let t1 = Contraction::new(at(lo))?;
    Ok(PairSample { t0, t1, clipped, scale: lo })
}

pub fn gen_pair_with_gap(seed: u64, n: usize, norm0: f64, gap: f64, p: SchattenOrder) -> Result<PairSample> {
    gen_pair_with_gap_rng(&mut rng_from_seed(seed), n, norm0, gap, p, 1.0)
}

/// `W diag(λ) W*` with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn gen_psd_rng(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> CMat {
    let w = gen_unitary_rng(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    (&(&w * &CMat::from_real_diag(&d)) * &w.adjoint()).hermitian_part()
}

/// Log-uniform draw from `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_norms() {
        assert_eq!(gen_contraction(1, 3, 0.0).unwrap().mat().max_abs(), 0.0);
        let t = gen_contraction(2, 1, 1.0).unwrap();
        assert!((t.mat().get(0, 0).norm() - 1.0).abs() < 1e-15);
        for (seed, target) in [(3u64, 0.3), (4, 0.95), (5, 1.0)] {
            let t = gen_contraction(seed, 5, target).unwrap();
            assert!((t.mat().op_norm() - target).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let a = gen_contraction(7, 4, 0.5).unwrap();
        let b = gen_contraction(7, 4, 0.5).unwrap();
        assert_eq!(a.mat().row_major(), b.mat().row_major());
        assert_eq!(gen_unitary(9, 3).row_major(), gen_unitary(9, 3).row_major());
    }

    #[test]
    fn unitary_residual() {
        for seed in 0..50 {
            assert!(gen_unitary(seed, 1 + (seed as usize % 8)).unitarity_residual() <= 1e-12);
        }
        assert!((gen_unitary(1, 1).get(0, 0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pair_gap_without_clipping() {
        let p = SchattenOrder::Finite(1.5);
        let s = gen_pair_with_gap(11, 4, 0.5, 1e-3, p).unwrap();
        assert!(!s.clipped);
        assert!((schatten_norm(&(s.t1.mat() - s.t0.mat()), p).unwrap() - 1e-3).abs() < 1e-10);
        let z = gen_pair_with_gap(11, 4, 0.5, 0.0, p).unwrap();
        assert_eq!((z.t1.mat() - z.t0.mat()).max_abs(), 0.0);
    }

    #[test]
    fn pair_clipping() {
        let s = gen_pair_with_gap(12, 3, 0.99, 2.0, SchattenOrder::Inf).unwrap();
        assert!(s.clipped);
        assert!(s.scale < 1.0);
        assert!(s.t1.norm() <= 1.0);
        assert!(s.t1.norm() > 1.0 - 1e-9);
    }
}
