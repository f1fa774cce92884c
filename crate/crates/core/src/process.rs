//! Exactly evaluable invariant processes on the tree: i.i.d. fields and
//! homogeneous Markov tree fields with a reversible edge kernel.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Alphabet, Site};

/// Largest spanning subtree handled by exact evaluation.
pub const MAX_SPANNING_SITES: usize = 100_000;
/// Default atom cap for exact entropy.
pub const MAX_ENTROPY_ATOMS: u128 = 1 << 16;
/// Atom cap for joint enumeration in `psi_coeff`.
pub const MAX_PSI_ATOMS: u128 = 1 << 20;

const PROB_TOL: f64 = 1e-9;
const BALANCE_TOL: f64 = 1e-12;

/// Sums with pairwise splitting to keep rounding error logarithmic.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StateSpace {
    states: Vec<String>,
}

impl StateSpace {
    pub fn new(states: Vec<String>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidModel("need at least two states".into()));
        }
        let unique: BTreeSet<&String> = states.iter().collect();
        if unique.len() != states.len() {
            return Err(Error::InvalidModel("state names must be distinct".into()));
        }
        Ok(Self { states })
    }

    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.states[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn names(&self) -> &[String] {
        &self.states
    }
}

impl TryFrom<Vec<String>> for StateSpace {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StateSpace> for Vec<String> {
    fn from(s: StateSpace) -> Self {
        s.states
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Iid { p: Vec<f64> },
    MarkovTree { pi: Vec<f64>, kernel: Vec<Vec<f64>> },
}

/// A process law on the `d`-regular tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ProcessModel {
    alphabet: Alphabet,
    states: StateSpace,
    kind: ModelKind,
    beta: Option<f64>,
    log_p: Vec<f64>,
}

fn check_probability(v: &[f64], what: &str, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidModel(format!(
            "{what} has {} entries, expected {n}",
            v.len()
        )));
    }
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidModel(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

impl ProcessModel {
    pub fn iid(d: usize, states: StateSpace, p: Vec<f64>) -> Result<Self> {
        check_probability(&p, "p", states.len())?;
        Self::assemble(d, states, ModelKind::Iid { p }, None)
    }

    pub fn markov_tree(
        d: usize,
        states: StateSpace,
        pi: Vec<f64>,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = states.len();
        check_probability(&pi, "pi", n)?;
        if kernel.len() != n {
            return Err(Error::InvalidModel(format!(
                "M has {} rows, expected {n}",
                kernel.len()
            )));
        }
        for (i, row) in kernel.iter().enumerate() {
            check_probability(row, &format!("row {i} of M"), n)?;
        }
        for i in 0..n {
            for j in 0..n {
                let residual = pi[i] * kernel[i][j] - pi[j] * kernel[j][i];
                if residual.abs() > BALANCE_TOL {
                    return Err(Error::InvalidModel(format!(
                        "detailed balance fails at ({i},{j}) by {residual:e}"
                    )));
                }
            }
        }
        Self::assemble(d, states, ModelKind::MarkovTree { pi, kernel }, None)
    }

    fn assemble(d: usize, states: StateSpace, kind: ModelKind, beta: Option<f64>) -> Result<Self> {
        let alphabet = Alphabet::new(d)?;
        let log_p = match &kind {
            ModelKind::Iid { p } => p.iter().map(|x| x.ln()).collect(),
            ModelKind::MarkovTree { .. } => Vec::new(),
        };
        Ok(Self {
            alphabet,
            states,
            kind,
            beta,
            log_p,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.alphabet.degree()
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.kind, ModelKind::Iid { .. })
    }

    /// Single-site marginal.
    pub fn marginal(&self) -> &[f64] {
        match &self.kind {
            ModelKind::Iid { p } => p,
            ModelKind::MarkovTree { pi, .. } => pi,
        }
    }
}

/// Ising model with states `+`, `-`.
pub fn build_ising(d: usize, beta: f64) -> Result<ProcessModel> {
    if !beta.is_finite() {
        return Err(Error::InvalidModel("beta must be finite".into()));
    }
    let same = 1.0 / (1.0 + (-2.0 * beta).exp());
    let diff = 1.0 / (1.0 + (2.0 * beta).exp());
    let states = StateSpace::new(vec!["+".into(), "-".into()])?;
    let mut model = ProcessModel::markov_tree(
        d,
        states,
        vec![0.5, 0.5],
        vec![vec![same, diff], vec![diff, same]],
    )?;
    model.beta = Some(beta);
    Ok(model)
}

/// Potts model with states `1..=n` and kernel `M_ij` proportional to
/// `exp(-beta [i = j])`.
pub fn build_potts(d: usize, n: usize, beta: f64) -> Result<ProcessModel> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("Potts needs N >= 2, got {n}")));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidModel("beta must be finite".into()));
    }
    let others = (n - 1) as f64;
    let (diag, off) = if beta >= 0.0 {
        let w = (-beta).exp();
        (w / (w + others), 1.0 / (w + others))
    } else {
        let w = beta.exp();
        (1.0 / (1.0 + others * w), w / (1.0 + others * w))
    };
    let kernel = (0..n)
        .map(|i| (0..n).map(|j| if i == j { diag } else { off }).collect())
        .collect();
    let mut model =
        ProcessModel::markov_tree(d, StateSpace::numbered(n)?, vec![1.0 / n as f64; n], kernel)?;
    model.beta = Some(beta);
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<StateSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<Vec<f64>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    kernel: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

fn require<T>(v: Option<T>, field: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidModel(format!("kind {kind:?} needs field {field:?}")))
}

impl TryFrom<ModelFile> for ProcessModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let states = |len: usize| match f.states.clone() {
            Some(s) => Ok(s),
            None => StateSpace::numbered(len),
        };
        let mut model = match f.kind.as_str() {
            "iid" => {
                let p = require(f.p.clone(), "p", "iid")?;
                ProcessModel::iid(f.d, states(p.len())?, p)?
            }
            "markov-tree" => {
                let pi = require(f.pi.clone(), "pi", "markov-tree")?;
                let kernel = require(f.kernel.clone(), "M", "markov-tree")?;
                ProcessModel::markov_tree(f.d, states(pi.len())?, pi, kernel)?
            }
            "ising" => build_ising(f.d, require(f.beta, "beta", "ising")?)?,
            "potts" => build_potts(
                f.d,
                require(f.n, "N", "potts")?,
                require(f.beta, "beta", "potts")?,
            )?,
            other => return Err(Error::InvalidModel(format!("unknown kind {other:?}"))),
        };
        if model.beta.is_none() {
            model.beta = f.beta;
        }
        Ok(model)
    }
}

impl From<ProcessModel> for ModelFile {
    fn from(m: ProcessModel) -> Self {
        let (kind, p, pi, kernel) = match m.kind {
            ModelKind::Iid { p } => ("iid", Some(p), None, None),
            ModelKind::MarkovTree { pi, kernel } => ("markov-tree", None, Some(pi), Some(kernel)),
        };
        ModelFile {
            kind: kind.into(),
            d: m.alphabet.degree(),
            states: Some(m.states),
            p,
            pi,
            kernel,
            beta: m.beta,
            n: None,
        }
    }
}

/// Values on a finite region, as state indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Configuration {
    values: BTreeMap<Site, usize>,
}

impl Configuration {
    pub fn new(values: BTreeMap<Site, usize>) -> Self {
        Self { values }
    }

    pub fn from_pairs(region: &[Site], values: &[usize]) -> Self {
        Self::new(region.iter().cloned().zip(values.iter().copied()).collect())
    }

    pub fn region(&self) -> Vec<Site> {
        self.values.keys().cloned().collect()
    }

    pub fn get(&self, site: &Site) -> Option<usize> {
        self.values.get(site).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &BTreeMap<Site, usize> {
        &self.values
    }

    /// Restriction to `region`; fails if a site is missing.
    pub fn restrict(&self, region: &[Site]) -> Result<Configuration> {
        let mut out = BTreeMap::new();
        for s in region {
            let v = self
                .get(s)
                .ok_or_else(|| Error::MissingValue(s.to_string()))?;
            out.insert(s.clone(), v);
        }
        Ok(Self::new(out))
    }

    /// Site-to-state-name map for export.
    pub fn to_named(&self, states: &StateSpace) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|(s, &v)| (s.to_string(), states.name(v).to_string()))
            .collect()
    }
}

/// Precomputed spanning subtree of a region, rooted at `e`.
///
/// Nodes are stored in lexicographic order, so every parent precedes its
/// children. Region sites keep their sorted order.
#[derive(Clone, Debug)]
pub struct RegionEvaluator {
    region: Vec<Site>,
    nodes: Vec<Site>,
    parent: Vec<usize>,
    observed: Vec<Option<usize>>,
}

impl RegionEvaluator {
    pub fn new(alphabet: Alphabet, region: &[Site]) -> Result<Self> {
        let region: Vec<Site> = region
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut span = BTreeSet::new();
        span.insert(Site::root());
        for s in &region {
            for &x in s.letters() {
                alphabet.check_letter(x)?;
            }
            for k in 1..=s.len() {
                if span.insert(s.prefix(k)) && span.len() > MAX_SPANNING_SITES {
                    return Err(Error::CapExceeded {
                        what: "spanning subtree",
                        requested: span.len() as u128,
                        cap: MAX_SPANNING_SITES as u128,
                    });
                }
            }
        }
        let nodes: Vec<Site> = span.into_iter().collect();
        let position: HashMap<&Site, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let parent = nodes
            .iter()
            .map(|s| s.parent().map_or(0, |p| position[&p]))
            .collect();
        let mut observed = vec![None; nodes.len()];
        for (slot, s) in region.iter().enumerate() {
            observed[position[s]] = Some(slot);
        }
        Ok(Self {
            region,
            nodes,
            parent,
            observed,
        })
    }

    /// The region, sorted and deduplicated; value slices follow this order.
    pub fn region(&self) -> &[Site] {
        &self.region
    }

    pub fn spanning_size(&self) -> usize {
        self.nodes.len()
    }

    /// Positions of `sub` within [`Self::region`].
    pub fn slots_of(&self, sub: &[Site]) -> Result<Vec<usize>> {
        sub.iter()
            .map(|s| {
                self.region
                    .binary_search(s)
                    .map_err(|_| Error::MissingValue(s.to_string()))
            })
            .collect()
    }

    /// Natural log of the probability of the atom with these values.
    pub fn log_prob(&self, model: &ProcessModel, values: &[usize]) -> f64 {
        assert_eq!(values.len(), self.region.len(), "one value per region site");
        match &model.kind {
            ModelKind::Iid { .. } => {
                let mut counts = vec![0u64; model.num_states()];
                for &v in values {
                    counts[v] += 1;
                }
                let terms: Vec<f64> = grouped_terms(&counts, &model.log_p)
                    .map(|(w, l)| w as f64 * l)
                    .collect();
                pairwise_sum(&terms)
            }
            ModelKind::MarkovTree { kernel, .. } => self.markov_log_prob(model, kernel, values),
        }
    }

    /// `-log_prob / |region|`. For i.i.d. models, states with equal
    /// probability are pooled before dividing, so a uniform law returns
    /// `log |E|` bit for bit.
    pub fn normalized_info(&self, model: &ProcessModel, values: &[usize]) -> f64 {
        let k = values.len();
        if k == 0 {
            return 0.0;
        }
        match &model.kind {
            ModelKind::Iid { .. } => {
                let mut counts = vec![0u64; model.num_states()];
                for &v in values {
                    counts[v] += 1;
                }
                let terms: Vec<f64> = grouped_terms(&counts, &model.log_p)
                    .map(|(w, l)| (w as f64 / k as f64) * -l)
                    .collect();
                pairwise_sum(&terms) + 0.0
            }
            _ => -self.log_prob(model, values) / k as f64 + 0.0,
        }
    }

    fn markov_log_prob(&self, model: &ProcessModel, kernel: &[Vec<f64>], values: &[usize]) -> f64 {
        let q = model.num_states();
        let n = self.nodes.len();
        let mut messages = vec![1.0f64; n * q];
        for (i, slot) in self.observed.iter().enumerate() {
            if let Some(slot) = slot {
                let row = &mut messages[i * q..(i + 1) * q];
                for (x, m) in row.iter_mut().enumerate() {
                    if x != values[*slot] {
                        *m = 0.0;
                    }
                }
            }
        }
        let mut scales = Vec::with_capacity(n);
        let mut outgoing = vec![0.0f64; q];
        for i in (1..n).rev() {
            let row = &mut messages[i * q..(i + 1) * q];
            let top = row.iter().cloned().fold(0.0, f64::max);
            if top == 0.0 {
                return f64::NEG_INFINITY;
            }
            row.iter_mut().for_each(|m| *m /= top);
            scales.push(top.ln());
            for (x, out) in outgoing.iter_mut().enumerate() {
                *out = kernel[x].iter().zip(row.iter()).map(|(k, m)| k * m).sum();
            }
            let p = self.parent[i];
            for (x, out) in outgoing.iter().enumerate() {
                messages[p * q + x] *= out;
            }
        }
        let ModelKind::MarkovTree { pi, .. } = &model.kind else {
            unreachable!()
        };
        let root: f64 = pi.iter().zip(&messages[..q]).map(|(p, m)| p * m).sum();
        scales.push(root.ln());
        pairwise_sum(&scales)
    }

    /// Exact sample of the region's values.
    pub fn sample<R: Rng + ?Sized>(&self, model: &ProcessModel, rng: &mut R) -> Vec<usize> {
        let mut out = vec![0usize; self.region.len()];
        match &model.kind {
            ModelKind::Iid { p } => {
                let law = WeightedIndex::new(p).expect("validated law");
                for v in out.iter_mut() {
                    *v = law.sample(rng);
                }
            }
            ModelKind::MarkovTree { pi, kernel } => {
                let root = WeightedIndex::new(pi).expect("validated law");
                let rows: Vec<WeightedIndex<f64>> = kernel
                    .iter()
                    .map(|r| WeightedIndex::new(r).expect("validated kernel"))
                    .collect();
                let mut state = vec![0usize; self.nodes.len()];
                state[0] = root.sample(rng);
                for i in 1..self.nodes.len() {
                    state[i] = rows[state[self.parent[i]]].sample(rng);
                }
                for (i, slot) in self.observed.iter().enumerate() {
                    if let Some(slot) = slot {
                        out[*slot] = state[i];
                    }
                }
            }
        }
        out
    }

    /// Calls `f` on every assignment of the region, in odometer order.
    pub fn for_each_atom(
        &self,
        num_states: usize,
        cap: u128,
        mut f: impl FnMut(&[usize]),
    ) -> Result<()> {
        let k = self.region.len();
        let count = (num_states as u128)
            .checked_pow(k as u32)
            .filter(|&c| c <= cap)
            .ok_or(Error::CapExceeded {
                what: "atoms",
                requested: (num_states as u128).saturating_pow(k as u32),
                cap,
            })?;
        let mut values = vec![0usize; k];
        for _ in 0..count {
            f(&values);
            for v in values.iter_mut().rev() {
                *v += 1;
                if *v < num_states {
                    break;
                }
                *v = 0;
            }
        }
        Ok(())
    }
}

/// `(total count, log p)` per distinct log-probability value.
fn grouped_terms<'a>(counts: &'a [u64], log_p: &'a [f64]) -> impl Iterator<Item = (u64, f64)> + 'a {
    let mut groups: Vec<(u64, f64)> = Vec::new();
    for (&c, &l) in counts.iter().zip(log_p) {
        if c == 0 {
            continue;
        }
        match groups.iter_mut().find(|(_, g)| *g == l) {
            Some(g) => g.0 += c,
            None => groups.push((c, l)),
        }
    }
    groups.into_iter()
}

/// Draws the configuration on `region`.
pub fn sample_region<R: Rng + ?Sized>(
    model: &ProcessModel,
    region: &[Site],
    rng: &mut R,
) -> Result<Configuration> {
    let eval = RegionEvaluator::new(model.alphabet(), region)?;
    let values = eval.sample(model, rng);
    Ok(Configuration::from_pairs(eval.region(), &values))
}

/// `log mu` of the atom containing `config`.
pub fn exact_region_prob(model: &ProcessModel, config: &Configuration) -> Result<f64> {
    let eval = RegionEvaluator::new(model.alphabet(), &config.region())?;
    let values: Vec<usize> = config.values.values().copied().collect();
    if let Some(&bad) = values.iter().find(|&&v| v >= model.num_states()) {
        return Err(Error::InvalidModel(format!(
            "state index {bad} out of range"
        )));
    }
    Ok(eval.log_prob(model, &values))
}

/// Information function `-log mu(atom)`.
pub fn info_value(model: &ProcessModel, config: &Configuration) -> Result<f64> {
    Ok(-exact_region_prob(model, config)? + 0.0)
}

/// Shannon entropy of the partition generated by `region`.
pub fn entropy_exact(model: &ProcessModel, region: &[Site]) -> Result<f64> {
    entropy_exact_capped(model, region, MAX_ENTROPY_ATOMS)
}

pub fn entropy_exact_capped(model: &ProcessModel, region: &[Site], cap: u128) -> Result<f64> {
    let eval = RegionEvaluator::new(model.alphabet(), region)?;
    let mut terms = Vec::new();
    eval.for_each_atom(model.num_states(), cap, |values| {
        let l = eval.log_prob(model, values);
        if l.is_finite() {
            terms.push(-l.exp() * l);
        }
    })?;
    Ok(pairwise_sum(&terms) + 0.0)
}

/// Treatment of atoms with zero probability in [`psi_coeff_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroAtoms {
    #[default]
    Exclude,
    Infinite,
}

/// The psi-mixing coefficient `sup |mu(A cap B) / (mu(A) mu(B)) - 1|`
/// over atoms `A` of `U` and `B` of `V`.
pub fn psi_coeff(model: &ProcessModel, u: &[Site], v: &[Site]) -> Result<f64> {
    psi_coeff_with(model, u, v, ZeroAtoms::Exclude, MAX_PSI_ATOMS)
}

pub fn psi_coeff_with(
    model: &ProcessModel,
    u: &[Site],
    v: &[Site],
    zero: ZeroAtoms,
    cap: u128,
) -> Result<f64> {
    let uset: BTreeSet<&Site> = u.iter().collect();
    if let Some(s) = v.iter().find(|s| uset.contains(s)) {
        return Err(Error::Overlap(s.to_string()));
    }
    let q = model.num_states();
    let alphabet = model.alphabet();
    let eu = RegionEvaluator::new(alphabet, u)?;
    let ev = RegionEvaluator::new(alphabet, v)?;
    let mut union: Vec<Site> = eu.region().to_vec();
    union.extend_from_slice(ev.region());
    let joint = RegionEvaluator::new(alphabet, &union)?;
    let (slots_u, slots_v) = (joint.slots_of(eu.region())?, joint.slots_of(ev.region())?);

    let total = (q as u128).checked_pow(joint.region().len() as u32);
    if total.is_none_or(|t| t > cap) {
        return Err(Error::CapExceeded {
            what: "psi atoms",
            requested: total.unwrap_or(u128::MAX),
            cap,
        });
    }
    let mut log_u = HashMap::new();
    eu.for_each_atom(q, cap, |a| {
        log_u.insert(a.to_vec(), eu.log_prob(model, a));
    })?;
    let mut log_v = HashMap::new();
    ev.for_each_atom(q, cap, |b| {
        log_v.insert(b.to_vec(), ev.log_prob(model, b));
    })?;

    let mut sup = 0.0f64;
    let (mut a, mut b) = (vec![0; slots_u.len()], vec![0; slots_v.len()]);
    joint.for_each_atom(q, cap, |values| {
        for (x, &s) in a.iter_mut().zip(&slots_u) {
            *x = values[s];
        }
        for (x, &s) in b.iter_mut().zip(&slots_v) {
            *x = values[s];
        }
        let marginals = log_u[&a] + log_v[&b];
        if !marginals.is_finite() {
            if zero == ZeroAtoms::Infinite {
                sup = f64::INFINITY;
            }
            return;
        }
        let ratio = (joint.log_prob(model, values) - marginals).exp();
        sup = sup.max((ratio - 1.0).abs());
    })?;
    Ok(sup)
}

/// One observation for [`fit_decay`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub distance: usize,
    pub psi: f64,
    pub u_size: usize,
    pub v_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub c: f64,
    /// `2 log(d - 1)`.
    pub threshold: f64,
    pub exceeds_threshold: bool,
    pub points_used: usize,
}

/// Least-squares fit of `log psi - log(|U||V|) = log C - lambda * distance`.
/// Points with `psi <= 0` are skipped.
pub fn fit_decay(points: &[DecayPoint], d: usize) -> Result<DecayFit> {
    Alphabet::new(d)?;
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.psi > 0.0 && p.psi.is_finite())
        .map(|p| {
            let x = p.distance as f64;
            (x, p.psi.ln() - ((p.u_size * p.v_size) as f64).ln())
        })
        .collect();
    if data.len() < 2 {
        return Err(Error::DegenerateFit(
            "need at least two points with psi > 0",
        ));
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all distances are equal"));
    }
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let lambda = -slope;
    let c = (my - slope * mx).exp();
    let threshold = 2.0 * ((d - 1) as f64).ln();
    Ok(DecayFit {
        lambda,
        c,
        threshold,
        exceeds_threshold: lambda > threshold,
        points_used: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(t: &str) -> Site {
        t.parse().unwrap()
    }

    fn fair(d: usize) -> ProcessModel {
        ProcessModel::iid(d, StateSpace::numbered(2).unwrap(), vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn ising_kernel() {
        let m = build_ising(3, 0.2).unwrap();
        let ModelKind::MarkovTree { kernel, .. } = m.kind() else {
            panic!()
        };
        assert!((kernel[0][0] - 0.598687660112452).abs() < 1e-12);
        let flat = build_ising(3, 0.0).unwrap();
        let ModelKind::MarkovTree { kernel, .. } = flat.kind() else {
            panic!()
        };
        assert_eq!(kernel[0], vec![0.5, 0.5]);
    }

    #[test]
    fn potts_kernel() {
        let m = build_potts(3, 3, 1.0).unwrap();
        let ModelKind::MarkovTree { kernel, .. } = m.kind() else {
            panic!()
        };
        let e = (-1.0f64).exp();
        assert!((kernel[1][1] - e / (e + 2.0)).abs() < 1e-15);
        assert!((kernel[1][1] - 0.1554).abs() < 1e-4);
        let hard = build_potts(3, 3, 200.0).unwrap();
        let ModelKind::MarkovTree { kernel, .. } = hard.kind() else {
            panic!()
        };
        assert!(kernel[0][0] < 1e-80 && (kernel[0][1] - 0.5).abs() < 1e-15);
        let flat = build_potts(3, 4, 0.0).unwrap();
        assert_eq!(flat.marginal(), &[0.25; 4]);
        assert!(build_potts(3, 1, 0.0).is_err());
        assert!(build_potts(3, 3, -50.0).is_ok());
    }

    #[test]
    fn validation() {
        let st = StateSpace::numbered(2).unwrap();
        assert!(ProcessModel::iid(3, st.clone(), vec![0.4, 0.5]).is_err());
        assert!(ProcessModel::markov_tree(
            3,
            st.clone(),
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]]
        )
        .is_err());
        assert!(ProcessModel::markov_tree(
            3,
            st,
            vec![5.0 / 6.0, 1.0 / 6.0],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]]
        )
        .is_ok());
        assert!(StateSpace::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = build_ising(3, 0.2).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ProcessModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let p: ProcessModel =
            serde_json::from_str(r#"{"kind":"potts","d":4,"N":3,"beta":1.0}"#).unwrap();
        assert_eq!(p.num_states(), 3);
        let i: ProcessModel =
            serde_json::from_str(r#"{"kind":"iid","d":3,"states":["H","T"],"p":[0.3,0.7]}"#)
                .unwrap();
        assert_eq!(i.states().name(1), "T");
        assert!(serde_json::from_str::<ProcessModel>(r#"{"kind":"ising","d":3}"#).is_err());
    }

    #[test]
    fn iid_fair_information_is_exact() {
        let m = fair(3);
        let region: Vec<Site> = crate::RegularTree::new(3).unwrap().ball(4).unwrap();
        let eval = RegionEvaluator::new(m.alphabet(), &region).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v = eval.sample(&m, &mut rng);
            assert_eq!(eval.normalized_info(&m, &v), std::f64::consts::LN_2);
            assert_eq!(
                -eval.log_prob(&m, &v),
                region.len() as f64 * std::f64::consts::LN_2
            );
        }
    }

    #[test]
    fn two_neighbours_plus() {
        let m = build_ising(3, 0.7).unwrap();
        let c = Configuration::new([(s("1"), 0), (s("12"), 0)].into_iter().collect());
        let same = 1.0 / (1.0 + (-1.4f64).exp());
        let got = exact_region_prob(&m, &c).unwrap();
        assert!((got - (0.5 * same).ln()).abs() < 1e-14);
    }

    #[test]
    fn empty_region() {
        let m = build_ising(3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_region(&m, &[], &mut rng).unwrap().is_empty());
        assert_eq!(
            exact_region_prob(&m, &Configuration::default()).unwrap(),
            0.0
        );
        assert_eq!(entropy_exact(&m, &[]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_examples() {
        let biased =
            ProcessModel::iid(3, StateSpace::numbered(2).unwrap(), vec![0.3, 0.7]).unwrap();
        let hp = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        let region = [s("1"), s("2"), s("31")];
        assert!((entropy_exact(&biased, &region).unwrap() - 3.0 * hp).abs() < 1e-12);
        let m = build_ising(3, 0.2).unwrap();
        let p = 1.0 / (1.0 + (-0.4f64).exp());
        let h = std::f64::consts::LN_2 - p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((entropy_exact(&m, &[Site::root(), s("1")]).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn entropy_cap() {
        let region = crate::RegularTree::new(3).unwrap().ball(3).unwrap();
        assert!(matches!(
            entropy_exact(&fair(3), &region),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn singleton_psi_is_tanh_power() {
        let m = build_ising(3, 0.2).unwrap();
        let t = 0.2f64.tanh();
        for (a, b, k) in [("1", "2", 2), ("", "121", 3), ("12", "3121", 6)] {
            let psi = psi_coeff(&m, &[s(a)], &[s(b)]).unwrap();
            assert!((psi - t.powi(k)).abs() < 1e-12, "{a} {b}");
            assert_eq!(psi, psi_coeff(&m, &[s(b)], &[s(a)]).unwrap());
        }
        assert_eq!(psi_coeff(&fair(3), &[s("1")], &[s("2")]).unwrap(), 0.0);
        assert!(matches!(
            psi_coeff(&m, &[s("1")], &[s("1")]),
            Err(Error::Overlap(_))
        ));
    }

    #[test]
    fn zero_atoms_policy() {
        let hard = build_potts(3, 2, 800.0).unwrap();
        let (u, v) = ([s("1")], [s("2")]);
        assert!(psi_coeff(&hard, &u, &v).unwrap().is_finite());
        let st = StateSpace::numbered(3).unwrap();
        let sparse = ProcessModel::iid(3, st, vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(psi_coeff(&sparse, &u, &v).unwrap(), 0.0);
        assert_eq!(
            psi_coeff_with(&sparse, &u, &v, ZeroAtoms::Infinite, MAX_PSI_ATOMS).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn fit_exact_exponential() {
        let pts: Vec<DecayPoint> = (1..=5)
            .map(|k| DecayPoint {
                distance: k,
                psi: (-2.0 * k as f64).exp(),
                u_size: 1,
                v_size: 1,
            })
            .collect();
        let fit = fit_decay(&pts, 3).unwrap();
        assert!((fit.lambda - 2.0).abs() < 1e-9 && (fit.c - 1.0).abs() < 1e-9);
        assert!(fit.exceeds_threshold);
        let same: Vec<DecayPoint> = pts
            .iter()
            .map(|p| DecayPoint { distance: 1, ..*p })
            .collect();
        assert!(matches!(fit_decay(&same, 3), Err(Error::DegenerateFit(_))));
        assert!(fit_decay(&pts[..1], 3).is_err());
    }

    #[test]
    fn configuration_export() {
        let m = build_ising(3, 0.2).unwrap();
        let c = Configuration::new([(s("1"), 0), (s("23"), 1)].into_iter().collect());
        let named = c.to_named(m.states());
        assert_eq!(named["1"], "+");
        assert_eq!(named["23"], "-");
        assert!(c.restrict(&[s("2")]).is_err());
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
