use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::replica_rng;
use super::report::{DecompositionReport, DecompositionRow, PsiReport, PsiRow};
use crate::boundary::{BoundaryGroup, FolnerOrientation};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::process::{
    fit_decay, pairwise_sum, psi_coeff, DecayFit, DecayPoint, ProcessModel, RegionEvaluator,
    MAX_PSI_ATOMS,
};
use crate::tree::{self, Site};

use super::spec::ModelRef;

fn default_k_max() -> usize {
    6
}

fn default_block_n() -> usize {
    2
}

fn default_n_max() -> usize {
    3
}

fn default_replicas() -> usize {
    100
}

/// Input of [`run_psi_decay`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    pub model: ModelRef,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Largest `n` for which Følner block pairs are evaluated.
    #[serde(default = "default_block_n")]
    pub block_n_max: usize,
    #[serde(default)]
    pub orientation: FolnerOrientation,
}

/// The site `k` steps out along the ray `1 2 1 2 ...`.
fn ray(k: usize) -> Site {
    let letters: Vec<u8> = (0..k).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
    Site::from_word(&letters)
}

pub(crate) fn set_distance(u: &[Site], v: &[Site]) -> usize {
    u.iter()
        .flat_map(|a| v.iter().map(move |b| tree::distance(a, b)))
        .min()
        .unwrap_or(0)
}

fn singleton_points(model: &ProcessModel, k_max: usize) -> Result<Vec<DecayPoint>> {
    (1..=k_max)
        .map(|k| {
            Ok(DecayPoint {
                distance: k,
                psi: psi_coeff(model, &[Site::root()], &[ray(k)])?,
                u_size: 1,
                v_size: 1,
            })
        })
        .collect()
}

fn try_fit(points: &[DecayPoint], d: usize) -> Result<Option<DecayFit>> {
    match fit_decay(points, d) {
        Ok(fit) => Ok(Some(fit)),
        Err(Error::DegenerateFit(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Relative slack when comparing a coefficient with its fitted bound; the
/// fit is exact for singleton Ising pairs, so equality is the typical case.
const BOUND_SLACK: f64 = 1e-9;

/// Psi coefficients for singletons and two-site sets along a ray, a decay
/// fit, and the Følner block pairs `(F^1 u ... u F^j, F^(j+1))`.
pub fn run_psi_decay(spec: &PsiSpec, model: &ProcessModel) -> Result<PsiReport> {
    let d = model.degree();
    let mut rows = Vec::new();
    let singles = singleton_points(model, spec.k_max)?;
    let mut pairs = Vec::new();
    for k in 1..=spec.k_max {
        let far = ray(k);
        let u = [Site::root(), Site::from_word(&[3])];
        let v = [far.clone(), far.child(3)];
        pairs.push(DecayPoint {
            distance: set_distance(&u, &v),
            psi: psi_coeff(model, &u, &v)?,
            u_size: 2,
            v_size: 2,
        });
    }
    for (kind, points) in [("singleton", &singles), ("pair", &pairs)] {
        rows.extend(points.iter().map(|p| PsiRow {
            kind: kind.into(),
            n: None,
            j: None,
            distance: p.distance,
            u_size: p.u_size,
            v_size: p.v_size,
            psi: p.psi,
            bound: None,
            within_bound: None,
        }));
    }
    let fit = try_fit(&singles, d)?;
    let all: Vec<DecayPoint> = singles.iter().chain(&pairs).copied().collect();
    let fit_all = try_fit(&all, d)?;
    let trivially_zero = all.iter().all(|p| p.psi == 0.0);

    let group = BoundaryGroup::new(d)?.with_orientation(spec.orientation);
    let q = model.num_states() as u128;
    let mut skipped_blocks = 0;
    for n in 1..=spec.block_n_max {
        let blocks: Vec<Vec<Site>> = group.sphere_partition(n)?.into_values().collect();
        for j in 1..blocks.len() {
            let head: Vec<Site> = blocks[..j].concat();
            let sites = (head.len() + blocks[j].len()) as u32;
            if q.checked_pow(sites).is_none_or(|c| c > MAX_PSI_ATOMS) {
                skipped_blocks += blocks.len() - j;
                break;
            }
            let psi = psi_coeff(model, &head, &blocks[j])?;
            let distance = set_distance(&head, &blocks[j]);
            let (bound, within_bound) = match fit {
                Some(f) => {
                    let b = f.c
                        * (head.len() * blocks[j].len()) as f64
                        * (-f.lambda * distance as f64).exp();
                    (Some(b), Some(psi <= b * (1.0 + BOUND_SLACK)))
                }
                None => (None, Some(psi == 0.0)),
            };
            rows.push(PsiRow {
                kind: "block".into(),
                n: Some(n),
                j: Some(j),
                distance,
                u_size: head.len(),
                v_size: blocks[j].len(),
                psi,
                bound,
                within_bound,
            });
        }
    }
    Ok(PsiReport {
        model: model.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rows,
        fit,
        fit_all,
        trivially_zero,
        skipped_blocks,
    })
}

/// `log(1 + C0 (d-1)^(-2 eps n))` with `C0 = C d^2 / (d-1)^2` and
/// `eps = lambda / (2 log(d-1)) - 1`.
pub fn gap_bound(c: f64, lambda: f64, d: usize, n: usize) -> f64 {
    let b = (d - 1) as f64;
    let c0 = c * (d * d) as f64 / (b * b);
    if c0 == 0.0 {
        return 0.0;
    }
    let eps = lambda / (2.0 * b.ln()) - 1.0;
    (c0 * (-2.0 * eps * n as f64 * b.ln()).exp()).ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub c: f64,
    pub lambda: f64,
}

/// Input of [`run_decomposition`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub model: ModelRef,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Decay constants for the gap bound; fitted from singleton pairs when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitParams>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub orientation: FolnerOrientation,
}

/// Absolute tolerance of the nu-average identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

struct Level {
    n: usize,
    sphere: Vec<Site>,
    sphere_eval: RegionEvaluator,
    sphere_slots: Vec<usize>,
    blocks: Vec<(RegionEvaluator, Vec<usize>)>,
    /// Block index of each depth-(n+1) cylinder.
    cylinder_block: Vec<usize>,
}

/// Compares the nu-average of normalized block information with the block
/// sum over the sphere, and the block sum with the sphere information.
pub fn run_decomposition(
    spec: &DecompositionSpec,
    model: &ProcessModel,
    exec: Execution,
) -> Result<DecompositionReport> {
    if spec.n_max == 0 || spec.replicas == 0 {
        return Err(Error::InvalidSpec(
            "n_max and replicas must be positive".into(),
        ));
    }
    let d = model.degree();
    let (c, lambda) = match spec.fit {
        Some(f) => (f.c, f.lambda),
        None => match try_fit(&singleton_points(model, spec.k_max)?, d)? {
            Some(f) => (f.c, f.lambda),
            None => (0.0, f64::INFINITY),
        },
    };
    let group = BoundaryGroup::new(d)?.with_orientation(spec.orientation);
    let spheres: Vec<Vec<Site>> = (1..=spec.n_max)
        .map(|n| group.tree().sphere(2 * n))
        .collect::<Result<_>>()?;
    let union: Vec<Site> = spheres.concat();
    let whole = RegionEvaluator::new(model.alphabet(), &union)?;
    let mut levels = Vec::new();
    for (n, sphere) in (1..=spec.n_max).zip(spheres) {
        let partition = group.sphere_partition(n)?;
        let mut distinct: BTreeMap<Vec<Site>, usize> = BTreeMap::new();
        let mut cylinder_block = Vec::with_capacity(partition.len());
        for block in partition.values() {
            let next = distinct.len();
            cylinder_block.push(*distinct.entry(block.clone()).or_insert(next));
        }
        let mut ordered: Vec<(usize, Vec<Site>)> =
            distinct.into_iter().map(|(b, i)| (i, b)).collect();
        ordered.sort();
        let sphere_eval = RegionEvaluator::new(model.alphabet(), &sphere)?;
        let blocks = ordered
            .into_iter()
            .map(|(_, b)| {
                Ok((
                    RegionEvaluator::new(model.alphabet(), &b)?,
                    sphere_eval.slots_of(&b)?,
                ))
            })
            .collect::<Result<_>>()?;
        levels.push(Level {
            n,
            sphere_slots: whole.slots_of(&sphere)?,
            sphere,
            sphere_eval,
            blocks,
            cylinder_block,
        });
    }

    let per_replica: Vec<Vec<DecompositionRow>> =
        try_map_indexed(exec, spec.replicas, |replica| {
            let values = whole.sample(model, &mut replica_rng(spec.seed, replica));
            levels
                .iter()
                .map(|level| {
                    let on_sphere: Vec<usize> =
                        level.sphere_slots.iter().map(|&i| values[i]).collect();
                    let size = level.sphere.len() as f64;
                    let info: Vec<f64> = level
                        .blocks
                        .iter()
                        .map(|(eval, slots)| {
                            let sub: Vec<usize> = slots.iter().map(|&i| on_sphere[i]).collect();
                            -eval.log_prob(model, &sub)
                        })
                        .collect();
                    let weight = 1.0 / (d as f64 * ((d - 1) as f64).powi(level.n as i32));
                    let nu_terms: Vec<f64> = level
                        .cylinder_block
                        .iter()
                        .map(|&b| weight * info[b] / level.blocks[b].1.len() as f64)
                        .collect();
                    let nu_average = pairwise_sum(&nu_terms);
                    let block_sum = pairwise_sum(&info);
                    let block_average = block_sum / size;
                    let sphere_info = -level.sphere_eval.log_prob(model, &on_sphere);
                    Ok(DecompositionRow {
                        n: level.n,
                        replica,
                        nu_average,
                        block_average,
                        identity_error: (nu_average - block_average).abs(),
                        gap: (block_sum - sphere_info).abs() / size,
                        bound: gap_bound(c, lambda, d, level.n),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
    let mut rows: Vec<DecompositionRow> = per_replica.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.replica));
    let mean_gap = (1..=spec.n_max)
        .map(|n| {
            let gaps: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.gap).collect();
            (n, gaps.iter().sum::<f64>() / gaps.len() as f64)
        })
        .collect();
    let max_identity_error = rows.iter().map(|r| r.identity_error).fold(0.0, f64::max);
    let b = (d - 1) as f64;
    Ok(DecompositionReport {
        model: model.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        c,
        lambda,
        epsilon: lambda / (2.0 * b.ln()) - 1.0,
        c0: c * (d * d) as f64 / (b * b),
        rows,
        mean_gap,
        max_identity_error,
        identity_tolerance: IDENTITY_TOLERANCE,
    })
}
