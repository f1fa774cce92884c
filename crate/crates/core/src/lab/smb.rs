use std::time::Instant;

use super::report::{ConvergenceReport, HComparison, SmbRow};
use super::spec::{ExperimentSpec, Mode};
use super::{boundary_rng, replica_rng};
use crate::boundary::BoundaryGroup;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::process::{ProcessModel, RegionEvaluator};
use crate::tree::Site;

struct Target {
    mode: Mode,
    n: u32,
    eval: RegionEvaluator,
    slots: Vec<usize>,
}

/// Normalized information `I(alpha_{F_n}) / |F_n|` along the spec's set
/// sequence, one pathwise sample per replica.
pub fn run_smb(
    spec: &ExperimentSpec,
    model: &ProcessModel,
    exec: Execution,
) -> Result<ConvergenceReport> {
    let start = Instant::now();
    spec.validate()?;
    if model.degree() != spec.d {
        return Err(Error::InvalidSpec(format!(
            "model is for d = {}, spec has d = {}",
            model.degree(),
            spec.d
        )));
    }
    let group = BoundaryGroup::new(spec.d)?.with_orientation(spec.orientation);
    let hi = spec.n_range[1];
    let xi = spec.boundary.resolve(
        group.alphabet(),
        hi as usize + 1,
        &mut boundary_rng(spec.seed),
    )?;

    let mut wanted: Vec<(Mode, u32)> = spec.ns().map(|n| (spec.mode, n)).collect();
    if spec.compare {
        for mode in [Mode::Horoball, Mode::MetricSpheres] {
            if mode != spec.mode && hi >= mode.min_n() {
                wanted.push((mode, hi));
            }
        }
    }
    let mut sets = Vec::with_capacity(wanted.len());
    for &(mode, n) in &wanted {
        let set = mode.set(&group, &xi, n)?;
        if set.len() as u128 != mode.set_size(spec.d, n) {
            return Err(Error::Construction(format!(
                "{mode} at n = {n} has {} sites, expected {}",
                set.len(),
                mode.set_size(spec.d, n)
            )));
        }
        sets.push(set);
    }
    let union: Vec<Site> = sets.concat();
    let whole = RegionEvaluator::new(model.alphabet(), &union)?;
    let targets = wanted
        .iter()
        .zip(&sets)
        .map(|(&(mode, n), set)| {
            Ok(Target {
                mode,
                n,
                eval: RegionEvaluator::new(model.alphabet(), set)?,
                slots: whole.slots_of(set)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_replica: Vec<Vec<f64>> = map_indexed(exec, spec.replicas, |replica| {
        let values = whole.sample(model, &mut replica_rng(spec.seed, replica));
        targets
            .iter()
            .map(|t| {
                let sub: Vec<usize> = t.slots.iter().map(|&i| values[i]).collect();
                t.eval.normalized_info(model, &sub)
            })
            .collect()
    });

    let rows: Vec<SmbRow> = targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let values = per_replica.iter().map(|v| v[k]).collect();
            SmbRow::new(t.mode, t.n, t.eval.region().len(), values)
        })
        .collect();
    let find = |mode: Mode| rows.iter().find(|r| r.mode == mode && r.n == hi);
    let comparison = match (
        spec.compare,
        find(Mode::Horoball),
        find(Mode::MetricSpheres),
    ) {
        (true, Some(h), Some(s)) => Some(HComparison::new(h, s)),
        _ => None,
    };
    Ok(ConvergenceReport {
        spec: spec.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        boundary_prefix: Some(xi.to_string()),
        rows,
        comparison,
        wall_time: start.elapsed(),
    })
}
