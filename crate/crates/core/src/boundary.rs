//! Finite-depth boundary of the tree and the amenable group acting on it.
//!
//! A boundary point is a one-sided infinite reduced sequence; here it is
//! always handled through a finite prefix, and every operation states the
//! depth it reads. Two points are tail-equivalent at level `n` when they
//! differ only in their first `n` entries. Each such class carries a linear
//! order, encoded by [`BoundaryGroup::rank`] as a mixed-radix number whose
//! least significant digit is entry `n` (its index among the letters allowed
//! before entry `n + 1`). The cyclic shift of that order generates the
//! level-`n` cyclic group, and the union over all levels is the group `G` of
//! `(d-1)`-adic roots of unity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tree::{self, check_reduced, concat_reduce, Alphabet, Letter, RegularTree, Site};

/// Highest group level accepted by default.
pub const DEFAULT_MAX_LEVEL: u32 = 12;

/// Initial segment `xi_1 ... xi_N` of a boundary point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryPrefix {
    entries: Vec<Letter>,
}

impl BoundaryPrefix {
    pub fn new(alphabet: Alphabet, entries: Vec<Letter>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DepthTooSmall {
                depth: 0,
                needed: 1,
            });
        }
        for &x in &entries {
            alphabet.check_letter(x)?;
        }
        check_reduced(&entries)?;
        Ok(Self { entries })
    }

    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        Self::new(alphabet, tree::parse_letters(text)?)
    }

    pub(crate) fn from_entries(entries: Vec<Letter>) -> Self {
        debug_assert!(!entries.is_empty() && check_reduced(&entries).is_ok());
        Self { entries }
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Letter] {
        &self.entries
    }

    /// Entry at 1-based position `i`.
    pub fn entry(&self, i: usize) -> Letter {
        self.entries[i - 1]
    }

    /// The geodesic vertex `xi_1 ... xi_k`.
    pub fn vertex(&self, k: usize) -> Site {
        Site::from_reduced(self.entries[..k].to_vec())
    }

    /// Entries from 1-based position `from` onward.
    pub fn tail(&self, from: usize) -> &[Letter] {
        &self.entries[from - 1..]
    }

    pub fn require_depth(&self, needed: usize) -> Result<()> {
        if self.depth() < needed {
            return Err(Error::DepthTooSmall {
                depth: self.depth(),
                needed,
            });
        }
        Ok(())
    }
}

impl fmt::Display for BoundaryPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        tree::format_letters(&self.entries, f)
    }
}

impl FromStr for BoundaryPrefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entries = tree::parse_letters(s)?;
        if entries.is_empty() {
            return Err(Error::Parse(s.to_string()));
        }
        check_reduced(&entries)?;
        Ok(Self { entries })
    }
}

impl Serialize for BoundaryPrefix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BoundaryPrefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The root of unity `g_n^m`, stored in lowest terms: either the identity
/// (`0:0`) or a level `n > 0` with `(d-1)` not dividing `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    level: u32,
    exponent: u64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        level: 0,
        exponent: 0,
    };

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_identity(&self) -> bool {
        self.level == 0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.exponent)
    }
}

/// How the coset index `j` of a Følner block is selected.
///
/// Both variants pick the letter `a` the same way; they differ in which
/// boundary point must show `a` at entry `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FolnerOrientation {
    /// Entry `n` of `g^-1 xi` equals `a`, for `g` in the coset. This is the
    /// letter at position `n + 1` of every block site, and the blocks
    /// partition the even sphere for every degree.
    #[default]
    SiteLetter,
    /// Entry `n` of `g_n^j xi` equals `a`. Agrees with `SiteLetter` for
    /// `d = 3`, still partitions for `d = 4`, and fails to cover the sphere
    /// from `d = 5` on.
    ActionLetter,
}

/// Group `G = union of G_n` acting on boundary prefixes of a fixed degree.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryGroup {
    tree: RegularTree,
    max_level: u32,
    orientation: FolnerOrientation,
}

impl BoundaryGroup {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            tree: RegularTree::new(d)?,
            max_level: DEFAULT_MAX_LEVEL,
            orientation: FolnerOrientation::default(),
        })
    }

    pub fn with_max_level(mut self, max_level: u32) -> Self {
        self.max_level = max_level;
        self
    }

    pub fn with_orientation(mut self, orientation: FolnerOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_tree(mut self, tree: RegularTree) -> Self {
        self.tree = tree;
        self
    }

    pub fn tree(&self) -> &RegularTree {
        &self.tree
    }

    pub fn alphabet(&self) -> Alphabet {
        self.tree.alphabet()
    }

    pub fn degree(&self) -> usize {
        self.tree.degree()
    }

    fn base(&self) -> u64 {
        self.alphabet().branching() as u64
    }

    fn check_level(&self, level: u32) -> Result<()> {
        let fits = (self.base() as u128).pow(level) < (1u128 << 62);
        if level > self.max_level || !fits {
            return Err(Error::CapExceeded {
                what: "group level",
                requested: level as u128,
                cap: self.max_level as u128,
            });
        }
        Ok(())
    }

    /// `|G_n| = (d-1)^n`, also the size of every level-`n` class.
    pub fn order(&self, level: u32) -> u64 {
        self.base().pow(level)
    }

    /// Canonical form of `g_level^exponent` (exponent taken modulo the order).
    pub fn element(&self, level: u32, exponent: i128) -> Result<GroupElement> {
        self.check_level(level)?;
        let order = self.order(level) as i128;
        let mut m = exponent.rem_euclid(order) as u64;
        let mut n = level;
        let b = self.base();
        while n > 0 && m.is_multiple_of(b) {
            m /= b;
            n -= 1;
        }
        if m == 0 {
            n = 0;
        }
        Ok(GroupElement {
            level: n,
            exponent: m,
        })
    }

    /// The generator `g_n`.
    pub fn generator(&self, level: u32) -> Result<GroupElement> {
        self.element(level, 1)
    }

    /// Validates an element given in `level:exponent` form.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let (l, m) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(text.to_string()))?;
        let level: u32 = l
            .trim()
            .parse()
            .map_err(|_| Error::Parse(text.to_string()))?;
        let exponent: u64 = m
            .trim()
            .parse()
            .map_err(|_| Error::Parse(text.to_string()))?;
        self.check_level(level)?;
        if exponent >= self.order(level) {
            return Err(Error::InvalidGroupElement {
                level,
                exponent,
                reason: "exponent not below (d-1)^level",
            });
        }
        let canon = self.element(level, exponent as i128)?;
        if canon.level != level {
            return Err(Error::InvalidGroupElement {
                level,
                exponent,
                reason: "not in lowest terms",
            });
        }
        Ok(canon)
    }

    /// Exponent of `g` written at a higher level `n >= level(g)`.
    pub fn exponent_at(&self, g: GroupElement, level: u32) -> u64 {
        debug_assert!(level >= g.level);
        g.exponent * self.base().pow(level - g.level)
    }

    /// Product in `G`: addition of `m/(d-1)^n` modulo 1.
    pub fn mul(&self, g: GroupElement, h: GroupElement) -> Result<GroupElement> {
        let level = g.level.max(h.level);
        let sum = self.exponent_at(g, level) as i128 + self.exponent_at(h, level) as i128;
        self.element(level, sum)
    }

    pub fn inv(&self, g: GroupElement) -> GroupElement {
        if g.is_identity() {
            return g;
        }
        GroupElement {
            level: g.level,
            exponent: self.order(g.level) - g.exponent,
        }
    }

    pub fn pow(&self, g: GroupElement, k: i128) -> Result<GroupElement> {
        self.element(g.level, g.exponent as i128 * k)
    }

    /// All of `G_n`, ordered by exponent at level `n`.
    pub fn elements(&self, level: u32) -> Result<Vec<GroupElement>> {
        self.check_level(level)?;
        (0..self.order(level))
            .map(|m| self.element(level, m as i128))
            .collect()
    }

    /// `V_n = G_n \ G_(n-1)`: elements whose canonical level is exactly `n`.
    pub fn shell_elements(&self, level: u32) -> Result<Vec<GroupElement>> {
        Ok(self
            .elements(level)?
            .into_iter()
            .filter(|g| g.level == level)
            .collect())
    }

    /// Position of `xi` in its level-`n` class, zero-based.
    pub fn rank(&self, xi: &BoundaryPrefix, n: u32) -> Result<u64> {
        xi.require_depth(n as usize + 1)?;
        self.check_level(n)?;
        let a = self.alphabet();
        let b = self.base();
        let mut r = 0u64;
        for k in 1..=n as usize {
            r = r * b + a.digit_of(xi.entry(k), xi.entry(k + 1)) as u64;
        }
        Ok(r)
    }

    /// The prefix of rank `r` in the level-`n` class fixed by `tail`
    /// (entries `n + 1, n + 2, ...`).
    pub fn unrank(&self, r: u64, n: u32, tail: &[Letter]) -> Result<BoundaryPrefix> {
        self.check_level(n)?;
        let size = self.order(n);
        if r >= size {
            return Err(Error::RankOutOfRange {
                rank: r,
                level: n,
                size,
            });
        }
        let a = self.alphabet();
        let Some(&first) = tail.first() else {
            return Err(Error::DepthTooSmall {
                depth: n as usize,
                needed: n as usize + 1,
            });
        };
        a.check_letter(first)?;
        let b = self.base();
        let n = n as usize;
        let mut entries = vec![0; n + tail.len()];
        entries[n..].copy_from_slice(tail);
        let mut rest = r;
        for pos in (0..n).rev() {
            let digit = (rest % b) as usize;
            rest /= b;
            entries[pos] = a.letter_at(digit, entries[pos + 1]);
        }
        Ok(BoundaryPrefix { entries })
    }

    /// Action of `g = g_n^m` on a prefix: advance the rank by `m` in the
    /// level-`n` class. Entries beyond position `n` are untouched.
    pub fn act(&self, g: GroupElement, xi: &BoundaryPrefix) -> Result<BoundaryPrefix> {
        let n = g.level;
        xi.require_depth(n as usize + 1)?;
        if g.is_identity() {
            return Ok(xi.clone());
        }
        let r = self.rank(xi, n)?;
        let shifted = (r + g.exponent) % self.order(n);
        self.unrank(shifted, n, xi.tail(n as usize + 1))
    }

    /// Shortest word `u` with `zeta = u^-1 xi`, for prefixes agreeing from
    /// entry `n + 1` on: the reduction of `xi_1 ... xi_n zeta_n ... zeta_1`.
    pub fn cocycle_u(&self, xi: &BoundaryPrefix, zeta: &BoundaryPrefix, n: usize) -> Result<Site> {
        xi.require_depth(n + 1)?;
        zeta.require_depth(n + 1)?;
        let common = xi.depth().min(zeta.depth());
        if xi.entries[n..common] != zeta.entries[n..common] {
            return Err(Error::NotTailEquivalent(n));
        }
        let up = Site::from_reduced(xi.entries[..n].to_vec());
        let down = Site::from_reduced(zeta.entries[..n].iter().rev().copied().collect());
        Ok(concat_reduce(&up, &down))
    }

    /// The horosphere site `s(g, xi) = u(xi, g^-1 xi)`.
    pub fn site_of(&self, g: GroupElement, xi: &BoundaryPrefix) -> Result<Site> {
        let moved = self.act(self.inv(g), xi)?;
        self.cocycle_u(xi, &moved, g.level as usize)
    }

    /// Horospherical ball: `{s(g, xi) : g in G_n}`, in exponent order of `g`.
    pub fn horoball(&self, xi: &BoundaryPrefix, n: u32) -> Result<Vec<Site>> {
        xi.require_depth(n as usize + 1)?;
        self.elements(n)?
            .into_iter()
            .map(|g| self.site_of(g, xi))
            .collect()
    }

    /// Horospherical shell: `{s(g, xi) : g in G_n \ G_(n-1)}`; the root for `n = 0`.
    pub fn horoshell(&self, xi: &BoundaryPrefix, n: u32) -> Result<Vec<Site>> {
        if n == 0 {
            return self.horoball(xi, 0);
        }
        xi.require_depth(n as usize + 1)?;
        self.shell_elements(n)?
            .into_iter()
            .map(|g| self.site_of(g, xi))
            .collect()
    }

    /// Busemann value `d(v, xi_1..xi_K) - K`, evaluated at `K = depth(xi)`.
    pub fn busemann(&self, v: &Site, xi: &BoundaryPrefix) -> Result<i64> {
        xi.require_depth(v.len() + 1)?;
        let k = xi.depth();
        Ok(tree::distance(v, &xi.vertex(k)) as i64 - k as i64)
    }

    /// The letter `a` of the Følner block rule: the least letter other than
    /// `xi_n` that exceeds `xi_(n+1)`, falling back to the least letter other
    /// than `xi_n`.
    pub fn folner_letter(&self, xi: &BoundaryPrefix, n: usize) -> Result<Letter> {
        if n == 0 {
            return Err(Error::DepthTooSmall {
                depth: 0,
                needed: 1,
            });
        }
        xi.require_depth(n + 1)?;
        let (own, next) = (xi.entry(n), xi.entry(n + 1));
        let mut candidates = self.alphabet().letters_except(Some(own));
        let fallback = candidates.clone().next().expect("d > 2");
        Ok(candidates.find(|&x| x > next).unwrap_or(fallback))
    }

    /// Coset index `j` in `1..d` selecting the Følner block.
    pub fn folner_index(&self, xi: &BoundaryPrefix, n: usize) -> Result<u64> {
        let a = self.folner_letter(xi, n)?;
        let level = n as u32;
        for j in 1..self.base() {
            let g = self.element(level, j as i128)?;
            let moved = match self.orientation {
                FolnerOrientation::SiteLetter => self.act(self.inv(g), xi)?,
                FolnerOrientation::ActionLetter => self.act(g, xi)?,
            };
            if moved.entry(n) == a {
                return Ok(j);
            }
        }
        Err(Error::Construction(format!(
            "no coset index moves entry {n} of {xi} to {a}"
        )))
    }

    /// The Følner set `F_n^xi = g_n^j G_(n-1)`.
    pub fn folner_f(&self, xi: &BoundaryPrefix, n: usize) -> Result<Vec<GroupElement>> {
        let j = self.folner_index(xi, n)?;
        let level = n as u32;
        let b = self.base();
        (0..self.order(level - 1))
            .map(|k| self.element(level, (j + b * k) as i128))
            .collect()
    }

    /// Sites of the Følner block `{s(g, xi) : g in F_n^xi}`.
    pub fn folner_block(&self, xi: &BoundaryPrefix, n: usize) -> Result<Vec<Site>> {
        self.folner_f(xi, n)?
            .into_iter()
            .map(|g| self.site_of(g, xi))
            .collect()
    }

    /// Maps each `u` in the sphere of radius `n + 1` to its Følner block,
    /// using `u` itself as the boundary prefix.
    pub fn sphere_partition(&self, n: usize) -> Result<BTreeMap<Site, Vec<Site>>> {
        if n == 0 {
            return Err(Error::DepthTooSmall {
                depth: 0,
                needed: 1,
            });
        }
        let mut out = BTreeMap::new();
        for u in self.tree.sphere(n + 1)? {
            let xi = BoundaryPrefix::from_entries(u.letters().to_vec());
            let mut block = self.folner_block(&xi, n)?;
            block.sort();
            out.insert(u, block);
        }
        Ok(out)
    }

    /// Every reduced prefix of the given depth, in lexicographic order.
    pub fn cylinders(&self, depth: usize) -> Result<Vec<BoundaryPrefix>> {
        Ok(self
            .tree
            .sphere(depth)?
            .into_iter()
            .map(|u| BoundaryPrefix::from_entries(u.letters().to_vec()))
            .collect())
    }

    /// Patterson-Sullivan mass of any single cylinder of the given depth.
    pub fn cylinder_measure(&self, depth: usize) -> f64 {
        1.0 / tree::sphere_size(self.degree(), depth) as f64
    }
}

/// Draws prefixes from the Patterson-Sullivan measure: a uniform first
/// letter, then uniform moves to one of the `d - 1` other letters.
#[derive(Clone, Copy, Debug)]
pub struct PsSampler {
    alphabet: Alphabet,
}

impl PsSampler {
    pub fn new(alphabet: Alphabet) -> Self {
        Self { alphabet }
    }

    pub fn sample<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> BoundaryPrefix {
        assert!(depth >= 1, "prefix depth must be positive");
        let d = self.alphabet.degree();
        let mut entries = Vec::with_capacity(depth);
        entries.push(rng.gen_range(1..=d) as Letter);
        while entries.len() < depth {
            let prev = *entries.last().unwrap();
            let digit = rng.gen_range(0..d - 1);
            entries.push(self.alphabet.letter_at(digit, prev));
        }
        BoundaryPrefix { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn group(d: usize) -> BoundaryGroup {
        BoundaryGroup::new(d).unwrap()
    }

    fn xi(g: &BoundaryGroup, text: &str) -> BoundaryPrefix {
        BoundaryPrefix::parse(g.alphabet(), text).unwrap()
    }

    #[test]
    fn rank_examples() {
        let g = group(3);
        // a=1, b=2, c=3; trailing entries are padding
        assert_eq!(g.rank(&xi(&g, "1212"), 0).unwrap(), 0);
        let ranks: Vec<u64> = ["1212", "1312", "3212", "2312"]
            .iter()
            .map(|t| g.rank(&xi(&g, t), 2).unwrap())
            .collect();
        assert_eq!(ranks, [0, 1, 2, 3]);
        assert_eq!(g.rank(&xi(&g, "3212"), 1).unwrap(), 1);
        assert!(g.rank(&xi(&g, "12"), 2).is_err());
    }

    #[test]
    fn unrank_examples() {
        let g = group(3);
        assert_eq!(g.unrank(3, 2, &[1, 2]).unwrap(), xi(&g, "2312"));
        let p = xi(&g, "3121");
        assert_eq!(g.unrank(0, 0, p.entries()).unwrap(), p);
        assert!(matches!(
            g.unrank(4, 2, &[1]),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn canonical_elements() {
        let g = group(3);
        let g1 = g.generator(1).unwrap();
        assert_eq!(g.mul(g1, g1).unwrap(), GroupElement::IDENTITY);
        assert_eq!(g.inv(GroupElement::IDENTITY), GroupElement::IDENTITY);
        let g2 = g.generator(2).unwrap();
        assert_eq!(g.pow(g2, 2).unwrap(), g1);
        assert_eq!(g.element(3, 4).unwrap().to_string(), "1:1");
        assert_eq!(g.parse_element("2:3").unwrap().to_string(), "2:3");
        assert!(g.parse_element("2:2").is_err());
        assert!(g.parse_element("2:4").is_err());
        assert!(g.element(13, 1).is_err());
    }

    #[test]
    fn act_examples() {
        let g = group(3);
        let g1 = g.generator(1).unwrap();
        let g2 = g.generator(2).unwrap();
        assert_eq!(g.act(g1, &xi(&g, "121")).unwrap(), xi(&g, "321"));
        assert_eq!(g.act(g2, &xi(&g, "1212")).unwrap(), xi(&g, "1312"));
        let g2sq = g.pow(g2, 2).unwrap();
        assert_eq!(g.act(g2sq, &xi(&g, "1212")).unwrap(), xi(&g, "3212"));
        let p = xi(&g, "23");
        assert_eq!(g.act(GroupElement::IDENTITY, &p).unwrap(), p);
        assert!(g.act(g2, &xi(&g, "12")).is_err());
    }

    #[test]
    fn cocycle_examples() {
        let g = group(3);
        let a = xi(&g, "1212");
        assert_eq!(g.cocycle_u(&a, &a, 2).unwrap(), Site::root());
        assert_eq!(
            g.cocycle_u(&a, &xi(&g, "1312"), 2).unwrap().to_string(),
            "1231"
        );
        assert_eq!(
            g.cocycle_u(&a, &xi(&g, "3212"), 2).unwrap().to_string(),
            "13"
        );
        assert!(matches!(
            g.cocycle_u(&a, &xi(&g, "1323"), 2),
            Err(Error::NotTailEquivalent(2))
        ));
    }

    #[test]
    fn site_of_examples() {
        let g = group(3);
        let p = xi(&g, "1212");
        assert_eq!(g.site_of(GroupElement::IDENTITY, &p).unwrap(), Site::root());
        let g2inv = g.inv(g.generator(2).unwrap());
        assert_eq!(g.site_of(g2inv, &p).unwrap().to_string(), "1231");
    }

    #[test]
    fn busemann_examples() {
        let g = group(3);
        let p = xi(&g, "12131");
        assert_eq!(g.busemann(&Site::root(), &p).unwrap(), 0);
        assert_eq!(g.busemann(&"1".parse().unwrap(), &p).unwrap(), -1);
        assert_eq!(g.busemann(&"2".parse().unwrap(), &p).unwrap(), 1);
    }

    #[test]
    fn folner_examples() {
        let g = group(3);
        let p = xi(&g, "12");
        assert_eq!(g.folner_letter(&p, 1).unwrap(), 3);
        assert_eq!(g.folner_f(&p, 1).unwrap(), vec![g.generator(1).unwrap()]);
        assert_eq!(g.folner_letter(&xi(&g, "13"), 1).unwrap(), 2);
        let q = xi(&g, "1312");
        assert_eq!(g.folner_f(&q, 3).unwrap().len(), 4);
    }

    #[test]
    fn sphere_partition_degree_three_level_one() {
        let g = group(3);
        let map = g.sphere_partition(1).unwrap();
        let rendered: Vec<(String, Vec<String>)> = map
            .iter()
            .map(|(u, b)| (u.to_string(), b.iter().map(|s| s.to_string()).collect()))
            .collect();
        let expected = [
            ("12", "13"),
            ("13", "12"),
            ("21", "23"),
            ("23", "21"),
            ("31", "32"),
            ("32", "31"),
        ];
        assert_eq!(rendered.len(), 6);
        for ((u, b), (eu, eb)) in rendered.iter().zip(expected) {
            assert_eq!(u, eu);
            assert_eq!(b, &vec![eb.to_string()]);
        }
    }

    #[test]
    fn action_letter_orientation_breaks_partition_at_degree_five() {
        let g = group(5).with_orientation(FolnerOrientation::ActionLetter);
        let map = g.sphere_partition(1).unwrap();
        let mut all: Vec<Site> = map.values().flatten().cloned().collect();
        all.sort();
        all.dedup();
        assert!(all.len() < g.tree().sphere(2).unwrap().len());
        let ok = group(5).sphere_partition(1).unwrap();
        let covered: usize = ok.values().map(Vec::len).sum();
        assert_eq!(covered, 20);
    }

    #[test]
    fn ps_sampler_respects_reduced_constraint() {
        let a = Alphabet::new(4).unwrap();
        let s = PsSampler::new(a);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = s.sample(9, &mut rng);
            assert_eq!(p.depth(), 9);
            assert!(check_reduced(p.entries()).is_ok());
        }
    }

    #[test]
    fn ps_prefix_frequency_matches_cylinder_measure() {
        // P(xi_1 xi_2 = "12") = 1/6 for d = 3; 3 sigma binomial band
        let g = group(3);
        let s = PsSampler::new(g.alphabet());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 1_000_000u32;
        let mut hits = 0u32;
        let mut first = 0u32;
        for _ in 0..trials {
            let p = s.sample(2, &mut rng);
            if p.entries() == [1, 2] {
                hits += 1;
            }
            if p.entry(1) == 1 {
                first += 1;
            }
        }
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 3.0 * sigma);
        let q = 1.0 / 3.0;
        let sq = (q * (1.0 - q) / trials as f64).sqrt();
        assert!((first as f64 / trials as f64 - q).abs() < 3.0 * sq);
        assert!((g.cylinder_measure(2) - p).abs() < 1e-15);
    }
}
