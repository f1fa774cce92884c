//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use treequipart::process::{ModelKind, ProcessModel, StateSpace};
use treequipart::Site;

/// Joint law of every site in the spanning subtree of `region` (with the
/// root), listed as (assignment, probability) over all assignments.
pub fn full_joint(model: &ProcessModel, region: &[Site]) -> (Vec<Site>, Vec<(Vec<usize>, f64)>) {
    let mut span = BTreeSet::new();
    span.insert(Site::root());
    for s in region {
        for k in 0..=s.len() {
            span.insert(s.prefix(k));
        }
    }
    let nodes: Vec<Site> = span.into_iter().collect();
    let parents: Vec<usize> = nodes
        .iter()
        .map(|s| {
            s.parent()
                .map_or(0, |p| nodes.iter().position(|t| *t == p).unwrap())
        })
        .collect();
    let q = model.num_states();
    let total = q.pow(nodes.len() as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let values: Vec<usize> = (0..nodes.len())
            .map(|_| {
                let v = c % q;
                c /= q;
                v
            })
            .collect();
        let p = match model.kind() {
            ModelKind::Iid { p } => values.iter().map(|&v| p[v]).product(),
            ModelKind::MarkovTree { pi, kernel } => {
                let mut p = pi[values[0]];
                for i in 1..nodes.len() {
                    p *= kernel[values[parents[i]]][values[i]];
                }
                p
            }
        };
        out.push((values, p));
    }
    (nodes, out)
}

/// Distribution of the values on `region` (in the given order), by summing
/// the full joint.
pub fn brute_marginal(model: &ProcessModel, region: &[Site]) -> BTreeMap<Vec<usize>, f64> {
    let (nodes, joint) = full_joint(model, region);
    let idx: Vec<usize> = region
        .iter()
        .map(|s| nodes.iter().position(|t| t == s).unwrap())
        .collect();
    let mut law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (values, p) in joint {
        *law.entry(idx.iter().map(|&i| values[i]).collect())
            .or_default() += p;
    }
    law
}

pub fn brute_psi(model: &ProcessModel, u: &[Site], v: &[Site]) -> f64 {
    let mut all = u.to_vec();
    all.extend_from_slice(v);
    let joint = brute_marginal(model, &all);
    let mut mu: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut mv: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (x, p) in &joint {
        *mu.entry(x[..u.len()].to_vec()).or_default() += p;
        *mv.entry(x[u.len()..].to_vec()).or_default() += p;
    }
    let mut sup = 0.0f64;
    for (x, p) in &joint {
        let (a, b) = (mu[&x[..u.len()]], mv[&x[u.len()..]]);
        if a > 0.0 && b > 0.0 {
            sup = sup.max((p / (a * b) - 1.0).abs());
        }
    }
    sup
}

/// Random reversible chain: symmetric positive weights, `pi` from the row sums.
pub fn random_reversible(d: usize, q: usize, rng: &mut impl Rng) -> ProcessModel {
    let mut w = vec![vec![0.0; q]; q];
    for (i, j) in (0..q).flat_map(|i| (i..q).map(move |j| (i, j))) {
        let x: f64 = rng.gen_range(0.05..1.0);
        w[i][j] = x;
        w[j][i] = x;
    }
    let rows: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = rows.iter().sum();
    let pi: Vec<f64> = rows.iter().map(|r| r / total).collect();
    let kernel = (0..q)
        .map(|i| (0..q).map(|j| w[i][j] / rows[i]).collect())
        .collect();
    ProcessModel::markov_tree(d, StateSpace::numbered(q).unwrap(), pi, kernel).unwrap()
}

pub fn random_iid(d: usize, q: usize, rng: &mut impl Rng) -> ProcessModel {
    let raw: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ProcessModel::iid(
        d,
        StateSpace::numbered(q).unwrap(),
        raw.iter().map(|x| x / total).collect(),
    )
    .unwrap()
}

/// Random distinct sites in the ball of radius `radius`.
pub fn random_region(d: usize, radius: usize, size: usize, rng: &mut impl Rng) -> Vec<Site> {
    let mut out = BTreeSet::new();
    while out.len() < size {
        let len = rng.gen_range(0..=radius);
        let mut w: Vec<u8> = Vec::new();
        while w.len() < len {
            let x = rng.gen_range(1..=d as u8);
            if w.last() != Some(&x) {
                w.push(x);
            }
        }
        out.insert(Site::from_word(&w));
    }
    out.into_iter().collect()
}

pub fn spanning_size(region: &[Site]) -> usize {
    let mut span = BTreeSet::new();
    span.insert(Site::root());
    for s in region {
        for k in 0..=s.len() {
            span.insert(s.prefix(k));
        }
    }
    span.len()
}

/// `log mu` of the atom fixing `values` on `region`, by summing the chain
/// weights over every assignment of the interior of the spanning subtree.
pub fn brute_log_prob(model: &ProcessModel, region: &[Site], values: &[usize]) -> f64 {
    let mut span = BTreeSet::new();
    span.insert(Site::root());
    for s in region {
        for k in 0..=s.len() {
            span.insert(s.prefix(k));
        }
    }
    let nodes: Vec<Site> = span.into_iter().collect();
    let q = model.num_states();
    let fixed: Vec<Option<usize>> = nodes
        .iter()
        .map(|s| region.iter().position(|t| t == s).map(|i| values[i]))
        .collect();
    if let ModelKind::Iid { p } = model.kind() {
        return values.iter().map(|&v| p[v].ln()).sum();
    }
    let ModelKind::MarkovTree { pi, kernel } = model.kind() else {
        unreachable!()
    };
    let parents: Vec<usize> = nodes
        .iter()
        .map(|s| {
            s.parent()
                .map_or(0, |p| nodes.iter().position(|t| *t == p).unwrap())
        })
        .collect();
    let free: Vec<usize> = (0..nodes.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut state: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let mut total = 0.0;
    for code in 0..q.pow(free.len() as u32) {
        let mut c = code;
        for &i in &free {
            state[i] = c % q;
            c /= q;
        }
        let mut p = pi[state[0]];
        for i in 1..nodes.len() {
            p *= kernel[state[parents[i]]][state[i]];
        }
        total += p;
    }
    total.ln()
}
