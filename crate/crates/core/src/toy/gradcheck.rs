//! Central finite-difference verification of the analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::policy::PolicyParams;
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Denominator floor for relative errors, so that coordinates whose true
/// gradient is ~0 are judged by absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub worst_coordinate: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// `(f(w + h) - f(w - h)) / 2h` along one coordinate.
pub fn central_difference<F>(
    params: &mut PolicyParams,
    coordinate: usize,
    h: f64,
    objective: &F,
) -> Result<f64>
where
    F: Fn(&PolicyParams) -> Result<f64>,
{
    let original = params.logits[coordinate];
    params.logits[coordinate] = original + h;
    let plus = objective(params);
    params.logits[coordinate] = original - h;
    let minus = objective(params);
    params.logits[coordinate] = original;
    Ok((plus? - minus?) / (2.0 * h))
}

/// Picks `k` distinct coordinates out of `candidates` (deduplicated).
pub fn sample_coordinates(mut candidates: Vec<usize>, k: usize, seed: u64) -> Vec<usize> {
    candidates.sort_unstable();
    candidates.dedup();
    if k >= candidates.len() {
        return candidates;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Compares `analytic` against central differences of `objective` at the
/// given coordinates.
pub fn check_gradient<F>(
    params: &PolicyParams,
    analytic: &[f64],
    objective: F,
    coordinates: &[usize],
    h: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&PolicyParams) -> Result<f64>,
{
    if coordinates.is_empty() {
        return Err(Error::arg("no coordinates to check"));
    }
    if analytic.len() != params.num_params() {
        return Err(Error::arg("gradient length does not match parameter count"));
    }
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        coordinates: coordinates.len(),
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_coordinate: coordinates[0],
    };
    for &c in coordinates {
        let numeric = central_difference(&mut probe, c, h, &objective)?;
        let rel = relative_error(analytic[c], numeric);
        report.max_abs_error = report.max_abs_error.max((analytic[c] - numeric).abs());
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_coordinate = c;
        }
    }
    Ok(report)
}
