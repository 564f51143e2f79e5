//! Built-in test functions.
//!
//! Smooth and non-smooth, analytic and non-analytic: monomials `z^n` for
//! `|n| ≤ 8`, `Re z`, `Im z`, Jackson approximants of `|Im z|` (Lipschitz, outside
//! the disk algebra) and of the arc-distance sawtooth, and seeded random
//! polynomials with decaying coefficients.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{jackson_truncate, CircleFunction, Sampler};
use crate::linalg::{c, cr};

/// Degrees of the seeded random polynomials `rand_poly_0..`.
pub const RANDOM_POLY_DEGREES: [usize; 4] = [3, 6, 12, 24];

/// Degrees at which the non-smooth zoo members are Jackson-truncated.
pub const JACKSON_DEGREES: [usize; 2] = [16, 64];

/// `|Im z| = |sin t|`.
pub fn abs_im_sampler() -> Sampler {
    Arc::new(|t: f64| cr(t.sin().abs()))
}

/// Arc distance from `t` to the point `1`: `min(t, 2π - t)` for `t ∈ [0, 2π)`.
pub fn sawtooth_sampler() -> Sampler {
    Arc::new(|t: f64| {
        let t = t.rem_euclid(TAU);
        cr(t.min(TAU - t))
    })
}

pub fn abs_im_jackson(n: usize) -> CircleFunction {
    let (f, _) = jackson_truncate(abs_im_sampler(), n, 1.0).expect("n >= 1");
    f.with_name(format!("abs_im_z_j{n}"))
}

pub fn sawtooth_jackson(n: usize) -> CircleFunction {
    let (f, _) = jackson_truncate(sawtooth_sampler(), n, 1.0).expect("n >= 1");
    f.with_name(format!("sawtooth_j{n}"))
}

pub fn random_poly(index: usize, degree: usize) -> CircleFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
    let d = degree as i64;
    let pairs: Vec<_> = (-d..=d)
        .map(|n| {
            let w = 1.0 / (1.0 + n.abs() as f64).powi(2);
            (n, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (2.0 * w))
        })
        .collect();
    CircleFunction::from_coeffs(pairs).with_name(format!("rand_poly_{index}"))
}

fn build() -> Vec<CircleFunction> {
    let mut out: Vec<CircleFunction> =
        (-8..=8).map(|n| CircleFunction::monomial(n).with_name(format!("z^{n}"))).collect();
    out.push(
        CircleFunction::from_coeffs([(1, cr(0.5)), (-1, cr(0.5))])
            .with_sampler(Arc::new(|t: f64| cr(t.cos())), true)
            .with_name("re_z"),
    );
    out.push(
        CircleFunction::from_coeffs([(1, c(0.0, -0.5)), (-1, c(0.0, 0.5))])
            .with_sampler(Arc::new(|t: f64| cr(t.sin())), true)
            .with_name("im_z"),
    );
    for n in JACKSON_DEGREES {
        out.push(abs_im_jackson(n));
        out.push(sawtooth_jackson(n));
    }
    for (k, d) in RANDOM_POLY_DEGREES.into_iter().enumerate() {
        out.push(random_poly(k, d));
    }
    out
}

/// The full zoo, built once per process.
pub fn all() -> &'static [CircleFunction] {
    static ZOO: OnceLock<Vec<CircleFunction>> = OnceLock::new();
    ZOO.get_or_init(build)
}

pub fn names() -> Vec<&'static str> {
    all().iter().filter_map(|f| f.name()).collect()
}

pub fn by_name(name: &str) -> Option<CircleFunction> {
    get(name).cloned()
}

/// Shared zoo member, keeping its cached seminorms.
pub fn get(name: &str) -> Option<&'static CircleFunction> {
    all().iter().find(|f| f.name() == Some(name))
}

/// Zoo members of degree at most `max_degree`.
pub fn up_to_degree(max_degree: usize) -> Vec<CircleFunction> {
    all().iter().filter(|f| f.degree() <= max_degree).cloned().collect()
}
