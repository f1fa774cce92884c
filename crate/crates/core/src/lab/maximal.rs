use serde::{Deserialize, Serialize};

use super::report::{summarize, MaximalReport, TailRow};
use super::spec::{BoundarySource, ModelRef};
use super::{boundary_rng, replica_rng};
use crate::boundary::{BoundaryGroup, FolnerOrientation};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::process::{ProcessModel, RegionEvaluator};
use crate::tree::Site;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for RGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 6.0,
            step: 0.05,
        }
    }
}

impl RGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

fn default_n_range() -> [u32; 2] {
    [1, 3]
}

fn default_replicas() -> usize {
    10_000
}

/// Input of [`run_maximal`]; the sets are horoballs `B_n` for `n` in `n_range`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalSpec {
    pub model: ModelRef,
    #[serde(default = "default_n_range")]
    pub n_range: [u32; 2],
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundarySource,
    #[serde(default)]
    pub grid: RGrid,
    #[serde(default)]
    pub orientation: FolnerOrientation,
}

/// Smallest `r` with `e^(r - log|E|) >= 1 + e^(-2 log|E|) e^r`, namely
/// `log(|E|^2 / (|E| - 1))`.
pub fn r0_analytic(states: usize) -> f64 {
    let e = states as f64;
    (e * e / (e - 1.0)).ln()
}

fn r0_condition(r: f64, states: usize) -> bool {
    let log_e = (states as f64).ln();
    (r - log_e).exp() >= 1.0 + (r - 2.0 * log_e).exp()
}

/// Empirical tail of `sup_n I(alpha_{B_n}) / |B_n|` against `|E|^2 e^(-r)`.
pub fn run_maximal(
    spec: &MaximalSpec,
    model: &ProcessModel,
    exec: Execution,
) -> Result<MaximalReport> {
    let [lo, hi] = spec.n_range;
    if spec.replicas == 0 || lo > hi || spec.grid.step <= 0.0 || spec.grid.stop < spec.grid.start {
        return Err(Error::InvalidSpec("bad replicas, n_range or grid".into()));
    }
    let group = BoundaryGroup::new(model.degree())?.with_orientation(spec.orientation);
    let xi = spec.boundary.resolve(
        group.alphabet(),
        hi as usize + 1,
        &mut boundary_rng(spec.seed),
    )?;
    let sets: Vec<Vec<Site>> = (lo..=hi)
        .map(|n| group.horoball(&xi, n))
        .collect::<Result<_>>()?;
    let whole = RegionEvaluator::new(model.alphabet(), &sets.concat())?;
    let targets = sets
        .iter()
        .map(|s| {
            Ok((
                RegionEvaluator::new(model.alphabet(), s)?,
                whole.slots_of(s)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let sups: Vec<f64> = map_indexed(exec, spec.replicas, |replica| {
        let values = whole.sample(model, &mut replica_rng(spec.seed, replica));
        targets
            .iter()
            .map(|(eval, slots)| {
                let sub: Vec<usize> = slots.iter().map(|&i| values[i]).collect();
                eval.normalized_info(model, &sub)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let q = model.num_states();
    let coefficient = (q * q) as f64;
    let grid = spec.grid.points();
    let r0_grid = grid.iter().copied().find(|&r| r0_condition(r, q));
    let total = spec.replicas as f64;
    let rows: Vec<TailRow> = grid
        .iter()
        .map(|&r| {
            let exceed = sups.iter().filter(|&&s| s > r).count();
            let p = exceed as f64 / total;
            let se = (p * (1.0 - p) / total).sqrt();
            let bound = coefficient * (-r).exp();
            let checked = r0_grid.is_some_and(|r0| r > r0);
            TailRow {
                r,
                exceed,
                empirical: p,
                se,
                bound,
                checked,
                violation: checked && p - 3.0 * se > bound,
            }
        })
        .collect();
    let r0 = r0_analytic(q);
    let (integral_estimate, _, integral_se) = summarize(&sups);
    let constant_c = r0 + coefficient * (-r0).exp();
    Ok(MaximalReport {
        model: model.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        boundary_prefix: xi.to_string(),
        n_range: spec.n_range,
        replicas: spec.replicas,
        r0_analytic: r0,
        r0_grid,
        bound_coefficient: coefficient,
        violations: rows.iter().filter(|r| r.violation).count(),
        rows,
        integral_estimate,
        integral_se,
        constant_c,
        integral_within_constant: integral_estimate - 3.0 * integral_se <= constant_c,
    })
}
