use crate::error::{Error, Result};
use crate::prob::math::log_sum_exp;
use crate::prob::rng::RngStream;
use crate::prob::simplex::SimplexVector;

/// Marsaglia-Tsang for shape >= 1. Returns a Gamma(shape, 1) draw.
fn gamma_mt(shape: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = rng.next_standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.next_f64_pos();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if libm::log(u) < 0.5 * x2 + d * (1.0 - v + libm::log(v)) {
            return d * v;
        }
    }
}

/// Log of a Gamma(shape, 1) draw. Shapes below 1 go through the boost
/// identity `Gamma(a) = Gamma(a+1) * U^(1/a)` in log space, which keeps
/// tiny concentrations (eta = 0.01 and smaller) from underflowing.
fn log_gamma_draw(shape: f64, rng: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        libm::log(gamma_mt(shape, rng))
    } else {
        let g = gamma_mt(shape + 1.0, rng);
        let u = rng.next_f64_pos();
        libm::log(g) + libm::log(u) / shape
    }
}

/// A Gamma(shape, 1) draw in linear space.
pub fn sample_standard_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !shape.is_finite() || shape <= 0.0 {
        return Err(Error::invalid(format!(
            "gamma shape must be positive and finite, got {shape}"
        )));
    }
    Ok(libm::exp(log_gamma_draw(shape, rng)))
}

/// Draw from a Dirichlet distribution with the given concentration vector.
///
/// Sampled as per-coordinate Gamma draws normalized in log space, so the
/// output satisfies the simplex invariants for concentrations spanning at
/// least 1e-3 to 1e3.
pub fn sample_dirichlet(concentration: &[f64], rng: &mut RngStream) -> Result<SimplexVector> {
    if concentration.is_empty() {
        return Err(Error::invalid("dirichlet concentration must be non-empty"));
    }
    for (i, &a) in concentration.iter().enumerate() {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::invalid(format!(
                "dirichlet concentration entry {i} is {a}, must be positive and finite"
            )));
        }
    }
    let logs: Vec<f64> = concentration
        .iter()
        .map(|&a| log_gamma_draw(a, rng))
        .collect();
    let norm = log_sum_exp(&logs)?;
    let weights: Vec<f64> = logs.iter().map(|&l| libm::exp(l - norm)).collect();
    SimplexVector::new(weights)
}

/// Sample an index with probability `weights[i] / sum(weights)`. Weights
/// need not be normalized.
///
/// Draw protocol: one uniform in `[0, 1)`, then inverse-CDF over the prefix
/// sums in index order. Scaling all weights by a power of two leaves the
/// returned index bit-identical.
pub fn sample_categorical(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::invalid(format!(
                "categorical weight {i} is {w}, must be finite and non-negative"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::invalid("categorical weights are all zero"));
    }
    let target = rng.next_f64() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 {
            last_positive = Some(i);
            if target < acc {
                return Ok(i);
            }
        }
    }
    // Rounding can leave target marginally at or above the final prefix sum.
    Ok(last_positive.expect("total > 0 implies a positive weight"))
}
