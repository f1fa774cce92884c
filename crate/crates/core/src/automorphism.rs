//! Parity-preserving tree automorphisms restricted to a ball around the root.
//!
//! Every automorphism built here fixes the root, so it maps each sphere onto
//! itself and can be stored as a permutation table on the ball of radius `R`.
//! Constructions follow the flip-composition scheme: sibling subtrees are
//! swapped level by level in lexicographic order until the required sites
//! line up.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::boundary::{BoundaryGroup, BoundaryPrefix, GroupElement};
use crate::error::{Error, Result};
use crate::tree::{self, concat_reduce, Alphabet, BallIndex, Letter, Site};

/// Largest ball (in sites) an automorphism table may cover.
pub const MAX_TABLE_SITES: usize = 1 << 20;

/// A bijection of the ball of radius `R`, stored as a table of image indices.
#[derive(Clone, Debug)]
pub struct DepthAutomorphism {
    alphabet: Alphabet,
    index: BallIndex,
    table: Vec<u32>,
    parity_preserving: bool,
}

/// Invariant violations found by [`DepthAutomorphism::verify`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub bijective: bool,
    pub adjacency_violations: Vec<(Site, Site)>,
    pub parity_violations: Vec<Site>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.bijective && self.adjacency_violations.is_empty() && self.parity_violations.is_empty()
    }
}

/// Image of `v` under the flip swapping the subtrees under `u a` and `u b`:
/// the `i`-th site of each level of one subtree goes to the `i`-th site of
/// the same level of the other, in lexicographic order.
pub fn flip_site(alphabet: Alphabet, u: &Site, a: Letter, b: Letter, v: &Site) -> Site {
    let k = u.len();
    if a == b || v.len() <= k || !v.starts_with(u) {
        return v.clone();
    }
    let w = v.letters();
    let (from, to) = match w[k] {
        x if x == a => (a, b),
        x if x == b => (b, a),
        _ => return v.clone(),
    };
    let mut out = Vec::with_capacity(w.len());
    out.extend_from_slice(&w[..k]);
    out.push(to);
    let (mut prev_old, mut prev_new) = (from, to);
    for &x in &w[k + 1..] {
        let y = alphabet.letter_at(alphabet.digit_of(x, prev_old), prev_new);
        out.push(y);
        prev_old = x;
        prev_new = y;
    }
    Site::from_reduced(out)
}

impl DepthAutomorphism {
    pub fn identity(alphabet: Alphabet, radius: usize) -> Result<Self> {
        let index = BallIndex::new(alphabet, radius, MAX_TABLE_SITES)?;
        let table = (0..index.len() as u32).collect();
        Ok(Self {
            alphabet,
            index,
            table,
            parity_preserving: true,
        })
    }

    /// Tabulates `f` on the ball; fails if some image leaves the ball.
    pub fn from_fn(alphabet: Alphabet, radius: usize, f: impl Fn(&Site) -> Site) -> Result<Self> {
        let index = BallIndex::new(alphabet, radius, MAX_TABLE_SITES)?;
        let mut table = Vec::with_capacity(index.len());
        for i in 0..index.len() {
            let image = f(&index.site_at(i));
            let j = index.index_of(&image).ok_or_else(|| Error::OutsideRadius {
                site: image.to_string(),
                radius,
            })?;
            table.push(j as u32);
        }
        let mut out = Self {
            alphabet,
            index,
            table,
            parity_preserving: true,
        };
        out.parity_preserving = out.parity_violations().is_empty();
        Ok(out)
    }

    /// The flip automorphism exchanging the subtrees under `u a` and `u b`,
    /// identity everywhere else.
    pub fn flip(alphabet: Alphabet, u: &Site, a: Letter, b: Letter, radius: usize) -> Result<Self> {
        alphabet.check_letter(a)?;
        alphabet.check_letter(b)?;
        if !tree::compatible(u, a) || !tree::compatible(u, b) {
            return Err(Error::IncompatibleLetters {
                site: u.to_string(),
                a,
                b,
            });
        }
        if radius < u.len() + 1 {
            return Err(Error::OutsideRadius {
                site: u.to_string(),
                radius,
            });
        }
        Self::from_fn(alphabet, radius, |v| flip_site(alphabet, u, a, b, v))
    }

    pub fn radius(&self) -> usize {
        self.index.radius()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn parity_preserving(&self) -> bool {
        self.parity_preserving
    }

    pub fn apply(&self, u: &Site) -> Result<Site> {
        let i = self.index.index_of(u).ok_or_else(|| Error::OutsideRadius {
            site: u.to_string(),
            radius: self.radius(),
        })?;
        Ok(self.index.site_at(self.table[i] as usize))
    }

    /// `self` after `other`, on the smaller of the two balls.
    pub fn compose(&self, other: &DepthAutomorphism) -> Result<DepthAutomorphism> {
        let radius = self.radius().min(other.radius());
        Self::from_fn(self.alphabet, radius, |u| {
            let v = other.apply(u).expect("inside the smaller ball");
            self.apply(&v).expect("root-fixing maps preserve length")
        })
    }

    pub fn inverse(&self) -> DepthAutomorphism {
        let mut table = vec![0u32; self.table.len()];
        for (i, &j) in self.table.iter().enumerate() {
            table[j as usize] = i as u32;
        }
        Self {
            alphabet: self.alphabet,
            index: self.index.clone(),
            table,
            parity_preserving: self.parity_preserving,
        }
    }

    /// The same map on a smaller ball.
    pub fn restrict(&self, radius: usize) -> Result<DepthAutomorphism> {
        if radius > self.radius() {
            return Err(Error::RadiusMismatch(radius, self.radius()));
        }
        Self::from_fn(self.alphabet(), radius, |u| {
            self.apply(u).expect("inside the larger ball")
        })
    }

    /// Post-composes the flip at `(u, a, b)` in place.
    fn flip_after(&mut self, u: &Site, a: Letter, b: Letter) {
        let alphabet = self.alphabet;
        for slot in self.table.iter_mut() {
            let image = self.index.site_at(*slot as usize);
            let flipped = flip_site(alphabet, u, a, b, &image);
            *slot = self
                .index
                .index_of(&flipped)
                .expect("flips preserve length") as u32;
        }
    }

    fn parity_violations(&self) -> Vec<Site> {
        self.table
            .iter()
            .enumerate()
            .filter_map(|(i, &j)| {
                let (u, v) = (self.index.site_at(i), self.index.site_at(j as usize));
                (u.parity() != v.parity()).then_some(u)
            })
            .collect()
    }

    /// Re-checks bijectivity, adjacency and parity on the whole ball.
    pub fn verify(&self) -> VerifyReport {
        let mut seen = vec![false; self.table.len()];
        let mut bijective = true;
        for &j in &self.table {
            let slot = &mut seen[j as usize];
            if *slot {
                bijective = false;
            }
            *slot = true;
        }
        let mut adjacency_violations = Vec::new();
        for i in 1..self.table.len() {
            let u = self.index.site_at(i);
            let parent = u.parent().expect("non-root");
            let (fu, fp) = (
                self.index.site_at(self.table[i] as usize),
                self.apply(&parent).expect("parent inside ball"),
            );
            if tree::distance(&fu, &fp) != 1 {
                adjacency_violations.push((parent, u));
            }
        }
        VerifyReport {
            bijective,
            adjacency_violations,
            parity_violations: self.parity_violations(),
        }
    }

    /// `(site, image)` pairs in ball order.
    pub fn pairs(&self) -> impl Iterator<Item = (Site, Site)> + '_ {
        self.table
            .iter()
            .enumerate()
            .map(|(i, &j)| (self.index.site_at(i), self.index.site_at(j as usize)))
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &j)| i == j as usize)
    }
}

impl PartialEq for DepthAutomorphism {
    fn eq(&self, other: &Self) -> bool {
        self.radius() == other.radius() && self.table == other.table
    }
}

impl Serialize for DepthAutomorphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.table.len()))?;
        for (u, v) in self.pairs() {
            seq.serialize_element(&(u.to_string(), v.to_string()))?;
        }
        seq.end()
    }
}

/// Left multiplication by a fixed site, `v -> by * v`. Not root-fixing, so it
/// is applied pointwise rather than tabulated on a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeftTranslation {
    pub by: Site,
}

impl LeftTranslation {
    pub fn new(by: Site) -> Self {
        Self { by }
    }

    pub fn apply(&self, v: &Site) -> Site {
        concat_reduce(&self.by, v)
    }

    /// `(site, image)` pairs over the ball of radius `radius`.
    pub fn table(&self, alphabet: Alphabet, radius: usize) -> Result<Vec<(Site, Site)>> {
        let index = BallIndex::new(alphabet, radius, MAX_TABLE_SITES)?;
        Ok((0..index.len())
            .map(|i| {
                let v = index.site_at(i);
                let image = self.apply(&v);
                (v, image)
            })
            .collect())
    }

    /// `(theta o phi)(v)`.
    pub fn after(&self, phi: &DepthAutomorphism, v: &Site) -> Result<Site> {
        Ok(self.apply(&phi.apply(v)?))
    }
}

fn check_geodesic_depths(xi: &BoundaryPrefix, zeta: &BoundaryPrefix, radius: usize) -> Result<()> {
    xi.require_depth(radius)?;
    zeta.require_depth(radius)
}

/// Stage automorphisms `phi_1, ..., phi_R` of the geodesic construction:
/// `phi_k` maps `xi_1..xi_i` to `zeta_1..zeta_i` for every `i <= k`.
pub fn geodesic_stages(
    alphabet: Alphabet,
    xi: &BoundaryPrefix,
    zeta: &BoundaryPrefix,
    radius: usize,
) -> Result<Vec<DepthAutomorphism>> {
    check_geodesic_depths(xi, zeta, radius)?;
    let mut phi = DepthAutomorphism::identity(alphabet, radius)?;
    let mut stages = Vec::with_capacity(radius);
    for k in 0..radius {
        // phi already maps xi_1..xi_k to zeta_1..zeta_k
        let image = phi.apply(&xi.vertex(k + 1))?;
        let current = image.last().expect("non-root");
        let wanted = zeta.entry(k + 1);
        if current != wanted {
            phi.flip_after(&zeta.vertex(k), current, wanted);
        }
        stages.push(phi.clone());
    }
    Ok(stages)
}

/// Root-fixing automorphism of the ball of radius `R` mapping the geodesic
/// ray of `xi` onto that of `zeta`.
pub fn geodesic_mapper(
    alphabet: Alphabet,
    xi: &BoundaryPrefix,
    zeta: &BoundaryPrefix,
    radius: usize,
) -> Result<DepthAutomorphism> {
    if radius == 0 {
        return DepthAutomorphism::identity(alphabet, 0);
    }
    Ok(geodesic_stages(alphabet, xi, zeta, radius)?
        .pop()
        .expect("radius >= 1"))
}

/// Ordering key for shell elements: exponent digits, least significant
/// first. Elements sharing the first `j` digits form one coset of
/// `G_(m-j)`, so this visits the nested cosets in lexicographic order.
fn coset_key(group: &BoundaryGroup, g: GroupElement) -> Vec<u64> {
    let b = group.degree() as u64 - 1;
    let mut e = g.exponent();
    (0..g.level())
        .map(|_| {
            let digit = e % b;
            e /= b;
            digit
        })
        .collect()
}

/// Root-fixing automorphism of the ball of radius `R >= 2n` mapping
/// `s(g, xi)` to `s(g, zeta)` for every `g` in `G_n`.
///
/// Starts from the geodesic mapper, then for each shell level `m = 1..=n`
/// and depth `j = 1..=m` rearranges the children of the already matched
/// vertices so that the coset blocks below them line up.
pub fn horosphere_mapper(
    group: &BoundaryGroup,
    xi: &BoundaryPrefix,
    zeta: &BoundaryPrefix,
    n: u32,
    radius: usize,
) -> Result<DepthAutomorphism> {
    let levels = n as usize;
    if radius < 2 * levels {
        return Err(Error::OutsideRadius {
            site: format!("horoball of level {n}"),
            radius,
        });
    }
    xi.require_depth(radius + 1)?;
    zeta.require_depth(radius + 1)?;
    let mut phi = geodesic_mapper(group.alphabet(), xi, zeta, radius)?;

    for m in 1..=n {
        let mut shell = group.shell_elements(m)?;
        shell.sort_by_key(|&g| coset_key(group, g));
        let pairs: Vec<(Site, Site)> = shell
            .iter()
            .map(|&g| Ok((group.site_of(g, xi)?, group.site_of(g, zeta)?)))
            .collect::<Result<_>>()?;
        let m = m as usize;
        for depth in m + 1..=2 * m {
            for (from, to) in &pairs {
                let (x, y) = (from.prefix(depth), to.prefix(depth));
                let current = phi.apply(&x)?;
                if current == y {
                    continue;
                }
                let parent = y.parent().expect("depth >= 2");
                if current.parent().as_ref() != Some(&parent) {
                    return Err(Error::Construction(format!(
                        "{x} maps to {current}, not a sibling of {y}"
                    )));
                }
                phi.flip_after(&parent, current.last().unwrap(), y.last().unwrap());
            }
        }
    }

    for g in group.elements(n)? {
        let (from, to) = (group.site_of(g, xi)?, group.site_of(g, zeta)?);
        if phi.apply(&from)? != to {
            return Err(Error::Construction(format!(
                "{g}: {from} does not reach {to}"
            )));
        }
    }
    Ok(phi)
}
