mod common;

use std::collections::BTreeMap;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treequipart::automorphism::{geodesic_mapper, horosphere_mapper};
use treequipart::process::*;
use treequipart::{BoundaryGroup, PsSampler, RegularTree, Site};

fn s(t: &str) -> Site {
    t.parse().unwrap()
}

fn random_model(rng: &mut ChaCha8Rng) -> ProcessModel {
    let d = rng.gen_range(3..=4);
    match rng.gen_range(0..4) {
        0 => build_ising(d, rng.gen_range(-1.0..1.5)).unwrap(),
        1 => build_potts(d, 3, rng.gen_range(-1.0..2.0)).unwrap(),
        2 => random_reversible(d, rng.gen_range(2..=3), rng),
        _ => random_iid(d, rng.gen_range(2..=3), rng),
    }
}

#[test]
fn exact_probabilities_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 60 {
        let model = random_model(&mut rng);
        let size = rng.gen_range(1..=8);
        let region = random_region(model.degree(), 3, size, &mut rng);
        let budget = if model.num_states() == 2 { 13 } else { 8 };
        if spanning_size(&region) > budget {
            continue;
        }
        let law = brute_marginal(&model, &region);
        for (values, p) in law.iter().take(6) {
            let c = Configuration::from_pairs(&region, values);
            let got = exact_region_prob(&model, &c).unwrap();
            assert!((got - p.ln()).abs() < 1e-10, "{got} vs {}", p.ln());
        }
        checked += 1;
    }
}

#[test]
fn psi_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 25 {
        let model = random_model(&mut rng);
        let all = random_region(model.degree(), 3, rng.gen_range(2..=5), &mut rng);
        let budget = if model.num_states() == 2 { 12 } else { 7 };
        if spanning_size(&all) > budget {
            continue;
        }
        let cut = rng.gen_range(1..all.len());
        let (u, v) = all.split_at(cut);
        let got = psi_coeff(&model, u, v).unwrap();
        assert!((got - brute_psi(&model, u, v)).abs() < 1e-10);
        assert_eq!(got, psi_coeff(&model, v, u).unwrap());
        checked += 1;
    }
}

#[test]
fn marginal_consistency_and_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let model = random_model(&mut rng);
        let region = random_region(model.degree(), 4, 5, &mut rng);
        let (base, extra) = region.split_at(4);
        let c = sample_region(&model, base, &mut rng).unwrap();
        let lp = exact_region_prob(&model, &c).unwrap();
        let mut total = 0.0;
        for x in 0..model.num_states() {
            let mut values: BTreeMap<Site, usize> = c.values().clone();
            values.insert(extra[0].clone(), x);
            let lx = exact_region_prob(&model, &Configuration::new(values)).unwrap();
            assert!(lx <= lp + 1e-12);
            total += lx.exp();
        }
        assert!((total - lp.exp()).abs() < 1e-10);
    }
}

#[test]
fn entropy_is_invariant_under_automorphisms() {
    let g = BoundaryGroup::new(3).unwrap();
    let sampler = PsSampler::new(g.alphabet());
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let model = build_ising(3, 0.4).unwrap();
    let potts = build_potts(3, 3, 0.8).unwrap();
    for _ in 0..6 {
        let xi = sampler.sample(5, &mut rng);
        let zeta = sampler.sample(5, &mut rng);
        let maps = [
            horosphere_mapper(&g, &xi, &zeta, 2, 4).unwrap(),
            geodesic_mapper(g.alphabet(), &xi, &zeta, 4).unwrap(),
        ];
        for phi in maps {
            let region = random_region(3, 4, 6, &mut rng);
            let image: Vec<Site> = region.iter().map(|u| phi.apply(u).unwrap()).collect();
            for m in [&model, &potts] {
                let (a, b) = (
                    entropy_exact(m, &region).unwrap(),
                    entropy_exact(m, &image).unwrap(),
                );
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn correlations_decay_with_distance() {
    let model = build_ising(3, 0.5).unwrap();
    let u = [Site::root(), s("1")];
    let mut previous = f64::INFINITY;
    for k in 1..=8 {
        // V sits on the ray 2323..., k steps from the root
        let w: Vec<u8> = (0..k).map(|i| if i % 2 == 0 { 2 } else { 3 }).collect();
        let far = Site::from_word(&w);
        let v = [far.clone(), far.child(1)];
        let mut all = u.to_vec();
        all.extend_from_slice(&v);
        let joint = RegionEvaluator::new(model.alphabet(), &all).unwrap();
        let eu = RegionEvaluator::new(model.alphabet(), &u).unwrap();
        let ev = RegionEvaluator::new(model.alphabet(), &v).unwrap();
        let su = joint.slots_of(&u).unwrap();
        let sv = joint.slots_of(&v).unwrap();
        let mut worst = 0.0f64;
        joint
            .for_each_atom(2, 1 << 10, |x| {
                let a: Vec<usize> = su.iter().map(|&i| x[i]).collect();
                let b: Vec<usize> = sv.iter().map(|&i| x[i]).collect();
                let pj = joint.log_prob(&model, x).exp();
                let pa = eu.log_prob(&model, &a).exp();
                let pb = ev.log_prob(&model, &b).exp();
                worst = worst.max((pj - pa * pb).abs());
            })
            .unwrap();
        assert!(worst < previous, "k={k}");
        previous = worst;
    }
}

#[test]
fn telescoping_bound_on_second_sphere() {
    let g = BoundaryGroup::new(3).unwrap();
    let model = build_ising(3, 0.3).unwrap();
    let blocks: Vec<Vec<Site>> = g.sphere_partition(1).unwrap().into_values().collect();
    let mut lower = 1.0;
    let mut upper = 1.0;
    for j in 1..blocks.len() {
        let head: Vec<Site> = blocks[..j].concat();
        let psi = psi_coeff(&model, &head, &blocks[j]).unwrap();
        lower *= 1.0 - psi;
        upper *= 1.0 + psi;
    }
    let sphere = RegularTree::new(3).unwrap().sphere(2).unwrap();
    let eval = RegionEvaluator::new(model.alphabet(), &sphere).unwrap();
    let block_evals: Vec<(RegionEvaluator, Vec<usize>)> = blocks
        .iter()
        .map(|b| {
            (
                RegionEvaluator::new(model.alphabet(), b).unwrap(),
                eval.slots_of(b).unwrap(),
            )
        })
        .collect();
    let mut seen = 0;
    eval.for_each_atom(2, 64, |x| {
        let joint = eval.log_prob(&model, x);
        let product: f64 = block_evals
            .iter()
            .map(|(e, slots)| {
                let v: Vec<usize> = slots.iter().map(|&i| x[i]).collect();
                e.log_prob(&model, &v)
            })
            .sum();
        let ratio = (joint - product).exp();
        assert!(
            lower - 1e-12 <= ratio && ratio <= upper + 1e-12,
            "{lower} {ratio} {upper}"
        );
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 64);
}

#[test]
fn sampling_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let fair = ProcessModel::iid(3, StateSpace::numbered(2).unwrap(), vec![0.5, 0.5]).unwrap();
    let one = RegionEvaluator::new(fair.alphabet(), &[s("12")]).unwrap();
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| one.sample(&fair, &mut rng)[0] == 0)
        .count() as f64;
    assert!((hits / n as f64 - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());

    let beta = 0.2;
    let ising = build_ising(3, beta).unwrap();
    let same = 1.0 / (1.0 + (-2.0 * beta).exp());
    let pair = RegionEvaluator::new(ising.alphabet(), &[s("21"), s("213")]).unwrap();
    let agree = (0..n)
        .filter(|_| {
            let v = pair.sample(&ising, &mut rng);
            v[0] == v[1]
        })
        .count() as f64;
    let se = (same * (1.0 - same) / n as f64).sqrt();
    assert!((agree / n as f64 - same).abs() < 3.0 * se);
}

#[test]
fn information_matches_atom_frequencies() {
    let model = build_ising(3, 0.3).unwrap();
    let region = [s("1"), s("12"), s("2"), s("313")];
    let eval = RegionEvaluator::new(model.alphabet(), &region).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 1_000_000usize;
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(eval.sample(&model, &mut rng)).or_default() += 1;
    }
    for (values, c) in counts {
        let p = eval.log_prob(&model, &values).exp();
        let freq = c as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "{values:?}: {freq} vs {p}");
        let info = -eval.log_prob(&model, &values);
        assert!(info >= 0.0);
    }
}

#[test]
fn uniform_information_is_bounded_by_log_states() {
    let potts = build_potts(4, 3, 0.0).unwrap();
    let region = RegularTree::new(4).unwrap().ball(2).unwrap();
    let eval = RegionEvaluator::new(potts.alphabet(), &region).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let v = eval.sample(&potts, &mut rng);
        assert!(eval.normalized_info(&potts, &v) <= 3f64.ln() + 1e-12);
    }
}

#[test]
fn psi_decreases_along_a_ray() {
    let model = build_ising(3, 0.2).unwrap();
    let mut last = f64::INFINITY;
    for k in 1..=6 {
        let w: Vec<u8> = (0..k).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
        let psi = psi_coeff(&model, &[Site::root()], &[Site::from_word(&w)]).unwrap();
        assert!(psi < last);
        last = psi;
    }
}
