//! Exhaustive invariant suites behind `treequipart verify`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::psi::set_distance;
use crate::automorphism::{geodesic_mapper, horosphere_mapper, DepthAutomorphism};
use crate::boundary::{BoundaryGroup, BoundaryPrefix, GroupElement, PsSampler};
use crate::error::{Error, Result};
use crate::process::{
    build_ising, build_potts, entropy_exact, exact_region_prob, psi_coeff, Configuration,
    ProcessModel, RegionEvaluator, StateSpace,
};
use crate::tree::{Alphabet, RegularTree, Site};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Group,
    Partition,
    Automorphism,
    Process,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Group,
        Suite::Partition,
        Suite::Automorphism,
        Suite::Process,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Group => "group",
            Suite::Partition => "partition",
            Suite::Automorphism => "automorphism",
            Suite::Process => "process",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, failures: usize, total: usize) {
        self.0.push(Check {
            name: name.into(),
            passed: failures == 0,
            detail: format!("{failures} failures in {total} cases"),
        });
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Group => group_suite()?,
        Suite::Partition => partition_suite()?,
        Suite::Automorphism => automorphism_suite(seed)?,
        Suite::Process => process_suite(seed)?,
    };
    Ok(SuiteReport { suite, checks })
}

fn group_suite() -> Result<Vec<Check>> {
    let mut out = Checks(Vec::new());
    let depth = 5;
    for d in [3usize, 4] {
        let g = BoundaryGroup::new(d)?;
        let prefixes = g.cylinders(depth)?;
        let b = (d - 1) as u64;

        let (mut bad, mut total) = (0, 0);
        for n in 1..=3u32 {
            let (gn, gn1) = (g.generator(n)?, g.generator(n + 1)?);
            for xi in &prefixes {
                let mut y = xi.clone();
                for _ in 0..b {
                    y = g.act(gn1, &y)?;
                }
                total += 1;
                bad += usize::from(y != g.act(gn, xi)?);
            }
        }
        out.push(
            format!("d={d}: psi_n = psi_(n+1)^(d-1), n <= 3"),
            bad,
            total,
        );

        let (mut bad, mut total) = (0, 0);
        for n in 1..depth as u32 {
            let gn = g.generator(n)?;
            for xi in &prefixes {
                let mut y = g.act(gn, xi)?;
                let mut len = 1u64;
                while &y != xi {
                    y = g.act(gn, &y)?;
                    len += 1;
                }
                total += 1;
                bad += usize::from(len != b.pow(n));
            }
        }
        out.push(format!("d={d}: orbit length of g_n is (d-1)^n"), bad, total);

        let elements = g.elements(3)?;
        let (mut bad, mut total) = (0, 0);
        for xi in &prefixes {
            let images: BTreeMap<GroupElement, BoundaryPrefix> = elements
                .iter()
                .map(|&h| Ok((h, g.act(h, xi)?)))
                .collect::<Result<_>>()?;
            for &x in &elements {
                for &h in &elements {
                    total += 1;
                    bad += usize::from(g.act(g.mul(x, h)?, xi)? != g.act(x, &images[&h])?);
                }
            }
        }
        out.push(format!("d={d}: act(gh) = act(g) act(h) on G_3"), bad, total);

        let (mut bad, mut total) = (0, 0);
        for n in 1..depth as u32 {
            let elements = g.elements(n)?;
            for xi in &prefixes {
                let orbit: BTreeSet<BoundaryPrefix> = elements
                    .iter()
                    .map(|&h| g.act(h, xi))
                    .collect::<Result<_>>()?;
                let class: BTreeSet<BoundaryPrefix> = prefixes
                    .iter()
                    .filter(|z| z.tail(n as usize + 1) == xi.tail(n as usize + 1))
                    .cloned()
                    .collect();
                total += 1;
                bad += usize::from(orbit != class);
            }
        }
        out.push(
            format!("d={d}: G_n orbits are the n-tail classes"),
            bad,
            total,
        );
    }
    Ok(out.0)
}

/// Partition, block size and separation checks for one `(d, n)`.
pub fn partition_failures(g: &BoundaryGroup, n: usize) -> Result<[usize; 3]> {
    let d = g.degree();
    let partition = g.sphere_partition(n)?;
    let sphere: BTreeSet<Site> = g.tree().sphere(2 * n)?.into_iter().collect();
    let blocks: BTreeSet<&Vec<Site>> = partition.values().collect();
    let mut seen = BTreeSet::new();
    let mut cover_bad = 0;
    for block in &blocks {
        for s in block.iter() {
            if !seen.insert(s.clone()) || !sphere.contains(s) {
                cover_bad += 1;
            }
        }
    }
    cover_bad += sphere.len() - seen.len().min(sphere.len());
    let size_bad = blocks
        .iter()
        .filter(|b| b.len() != (d - 1).pow(n as u32 - 1))
        .count();
    let list: Vec<&Vec<Site>> = blocks.into_iter().collect();
    let mut sep_bad = 0;
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            sep_bad += usize::from(set_distance(list[i], list[j]) < 2 * n);
        }
    }
    Ok([cover_bad, size_bad, sep_bad])
}

fn partition_suite() -> Result<Vec<Check>> {
    let mut out = Checks(Vec::new());
    for (d, n_max) in [(3usize, 4usize), (4, 3)] {
        let g = BoundaryGroup::new(d)?;
        for n in 1..=n_max {
            let [cover, size, sep] = partition_failures(&g, n)?;
            out.push(format!("d={d} n={n}: blocks partition S_2n"), cover, 1);
            out.push(
                format!("d={d} n={n}: blocks have (d-1)^(n-1) sites"),
                size,
                1,
            );
            out.push(format!("d={d} n={n}: blocks are 2n-separated"), sep, 1);
        }
    }
    let g = BoundaryGroup::new(3)?;
    let table: BTreeMap<String, Vec<String>> = g
        .sphere_partition(1)?
        .into_iter()
        .map(|(u, b)| (u.to_string(), b.iter().map(|s| s.to_string()).collect()))
        .collect();
    let expected: BTreeMap<String, Vec<String>> = [
        ("12", "13"),
        ("13", "12"),
        ("21", "23"),
        ("23", "21"),
        ("31", "32"),
        ("32", "31"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), vec![b.to_string()]))
    .collect();
    out.push(
        "d=3 n=1: hand-derived block table",
        usize::from(table != expected),
        1,
    );
    Ok(out.0)
}

fn automorphism_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Checks(Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for d in [3usize, 4] {
        let alphabet = Alphabet::new(d)?;
        let g = BoundaryGroup::new(d)?;
        let sampler = PsSampler::new(alphabet);
        let radius = 6;

        let (mut bad, mut total) = (0, 0);
        for u in RegularTree::new(d)?.ball(3)? {
            for a in alphabet.letters_except(u.last()) {
                for b in alphabet.letters_except(u.last()) {
                    let f = DepthAutomorphism::flip(alphabet, &u, a, b, (u.len() + 2).min(radius))?;
                    total += 1;
                    bad += usize::from(!f.verify().is_ok());
                }
            }
        }
        out.push(format!("d={d}: flips verify"), bad, total);

        let (mut bad_geo, mut bad_horo, mut bad_sites, mut total) = (0, 0, 0, 0);
        for _ in 0..20 {
            let xi = sampler.sample(radius + 1, &mut rng);
            let zeta = sampler.sample(radius + 1, &mut rng);
            total += 1;
            bad_geo += usize::from(
                !geodesic_mapper(alphabet, &xi, &zeta, radius)?
                    .verify()
                    .is_ok(),
            );
            let phi = horosphere_mapper(&g, &xi, &zeta, 3, radius)?;
            bad_horo += usize::from(!phi.verify().is_ok());
            for h in g.elements(3)? {
                bad_sites += usize::from(phi.apply(&g.site_of(h, &xi)?)? != g.site_of(h, &zeta)?);
            }
        }
        out.push(
            format!("d={d}: geodesic mappers verify (R = 6)"),
            bad_geo,
            total,
        );
        out.push(
            format!("d={d}: horosphere mappers verify (n = 3, R = 6)"),
            bad_horo,
            total,
        );
        out.push(
            format!("d={d}: horosphere mappers carry s(g, xi) to s(g, zeta)"),
            bad_sites,
            total,
        );
    }
    Ok(out.0)
}

fn random_region<R: Rng>(d: usize, radius: usize, size: usize, rng: &mut R) -> Vec<Site> {
    let sites = RegularTree::new(d)
        .expect("valid degree")
        .ball(radius)
        .expect("small ball");
    let mut out = BTreeSet::new();
    while out.len() < size.min(sites.len()) {
        out.insert(sites[rng.gen_range(0..sites.len())].clone());
    }
    out.into_iter().collect()
}

fn process_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = Checks(Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<ProcessModel> = vec![
        build_ising(3, 0.2)?,
        build_ising(4, -0.7)?,
        build_potts(3, 3, 1.0)?,
        ProcessModel::iid(3, StateSpace::numbered(2)?, vec![0.3, 0.7])?,
    ];

    let (mut bad, mut total) = (0, 0);
    for model in &models {
        for _ in 0..20 {
            let region = random_region(model.degree(), 4, 5, &mut rng);
            let (base, extra) = region.split_at(4);
            let eval = RegionEvaluator::new(model.alphabet(), base)?;
            let values = eval.sample(model, &mut rng);
            let c = Configuration::from_pairs(eval.region(), &values);
            let lp = exact_region_prob(model, &c)?;
            let mut sum = 0.0;
            for x in 0..model.num_states() {
                let mut v = c.values().clone();
                v.insert(extra[0].clone(), x);
                sum += exact_region_prob(model, &Configuration::new(v))?.exp();
            }
            total += 1;
            bad += usize::from((sum - lp.exp()).abs() > 1e-10);
        }
    }
    out.push("marginal consistency", bad, total);

    let (mut bad, mut total) = (0, 0);
    for model in &models {
        for _ in 0..10 {
            let all = random_region(model.degree(), 3, 4, &mut rng);
            let (u, v) = all.split_at(2);
            total += 1;
            bad += usize::from(psi_coeff(model, u, v)? != psi_coeff(model, v, u)?);
        }
    }
    out.push("psi symmetry", bad, total);

    let g = BoundaryGroup::new(3)?;
    let sampler = PsSampler::new(g.alphabet());
    let (mut bad, mut total) = (0, 0);
    for _ in 0..10 {
        let xi = sampler.sample(5, &mut rng);
        let zeta = sampler.sample(5, &mut rng);
        let phi = horosphere_mapper(&g, &xi, &zeta, 2, 4)?;
        let region = random_region(3, 4, 6, &mut rng);
        let image: Vec<Site> = region.iter().map(|u| phi.apply(u)).collect::<Result<_>>()?;
        for model in models.iter().filter(|m| m.degree() == 3) {
            total += 1;
            bad += usize::from(
                (entropy_exact(model, &region)? - entropy_exact(model, &image)?).abs() > 1e-10,
            );
        }
    }
    out.push("entropy invariant under horosphere mappers", bad, total);

    let ising = &models[0];
    let t = 0.2f64.tanh();
    let (mut bad, mut total) = (0, 0);
    for k in 1..=6 {
        let w: Vec<u8> = (0..k).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
        let psi = psi_coeff(ising, &[Site::root()], &[Site::from_word(&w)])?;
        total += 1;
        bad += usize::from((psi - t.powi(k)).abs() > 1e-12);
    }
    out.push("ising singleton psi = tanh(beta)^k", bad, total);

    let fair = ProcessModel::iid(3, StateSpace::numbered(2)?, vec![0.5, 0.5])?;
    let ball = RegularTree::new(3)?.ball(4)?;
    let eval = RegionEvaluator::new(fair.alphabet(), &ball)?;
    let (mut bad, mut total) = (0, 0);
    for _ in 0..20 {
        let v = eval.sample(&fair, &mut rng);
        total += 1;
        bad += usize::from(eval.normalized_info(&fair, &v) != std::f64::consts::LN_2);
    }
    out.push("fair coin information is log 2", bad, total);
    Ok(out.0)
}
