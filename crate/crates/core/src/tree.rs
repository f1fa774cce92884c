//! The d-regular tree as the Cayley graph of the d-fold free product of Z/2.
//!
//! Vertices are reduced words over the letters `1..=d`; every letter is its own
//! inverse, so the group product of two words is their concatenation with
//! adjacent equal letters cancelled. The empty word is the root.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Letter = u8;

/// Default cap on the number of sites a single sphere enumeration may return.
///
/// For d = 3 this admits radius 12 (6144 sites) and rejects radius 13.
pub const DEFAULT_MAX_SPHERE: usize = 8192;

/// Generating set `{1, ..., d}` with its natural order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet {
    d: usize,
}

impl Alphabet {
    pub fn new(d: usize) -> Result<Self> {
        if !(3..=u8::MAX as usize).contains(&d) {
            return Err(Error::InvalidDegree(d));
        }
        Ok(Self { d })
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// `d - 1`, the branching factor below any non-root vertex.
    pub fn branching(&self) -> usize {
        self.d - 1
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        1..=self.d as Letter
    }

    /// Letters different from `excluded`, in alphabet order.
    pub fn letters_except(&self, excluded: Option<Letter>) -> impl Iterator<Item = Letter> + Clone {
        self.letters().filter(move |&x| Some(x) != excluded)
    }

    pub fn check_letter(&self, letter: Letter) -> Result<()> {
        if letter == 0 || letter as usize > self.d {
            return Err(Error::InvalidLetter { letter, d: self.d });
        }
        Ok(())
    }

    /// Zero-based position of `letter` among the letters different from `excluded`.
    pub fn digit_of(&self, letter: Letter, excluded: Letter) -> usize {
        debug_assert_ne!(letter, excluded);
        (letter as usize - 1) - usize::from(letter > excluded)
    }

    /// Inverse of [`Alphabet::digit_of`].
    pub fn letter_at(&self, digit: usize, excluded: Letter) -> Letter {
        debug_assert!(digit < self.d - 1);
        let candidate = digit as Letter + 1;
        if candidate >= excluded {
            candidate + 1
        } else {
            candidate
        }
    }

    /// Validates that `letters` is a reduced word over this alphabet.
    pub fn site(&self, letters: Vec<Letter>) -> Result<Site> {
        for &x in &letters {
            self.check_letter(x)?;
        }
        check_reduced(&letters)?;
        Ok(Site(letters))
    }

    pub fn parse_site(&self, text: &str) -> Result<Site> {
        self.site(parse_letters(text)?)
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Alphabet::new(d)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.d
    }
}

pub(crate) fn check_reduced(letters: &[Letter]) -> Result<()> {
    for (i, w) in letters.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(Error::NotReduced {
                letter: w[0],
                position: i + 1,
            });
        }
    }
    Ok(())
}

/// Parses `"121"` style strings, or `"1.12.3"` when some letter exceeds 9.
pub(crate) fn parse_letters(text: &str) -> Result<Vec<Letter>> {
    let text = text.trim();
    if text.is_empty() || text == "e" {
        return Ok(Vec::new());
    }
    if text.contains('.') {
        text.split('.')
            .map(|t| {
                t.parse::<Letter>()
                    .map_err(|_| Error::Parse(text.to_string()))
            })
            .collect()
    } else {
        text.chars()
            .map(|c| match c.to_digit(10) {
                Some(v) if v > 0 => Ok(v as Letter),
                _ => Err(Error::Parse(text.to_string())),
            })
            .collect()
    }
}

pub(crate) fn format_letters(letters: &[Letter], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if letters.iter().all(|&x| x <= 9) {
        for x in letters {
            write!(f, "{x}")?;
        }
    } else {
        for (i, x) in letters.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{x}")?;
        }
    }
    Ok(())
}

/// Bipartition class of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// A vertex of the tree: a reduced word, ordered lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<Letter>);

impl Site {
    pub fn root() -> Self {
        Site(Vec::new())
    }

    /// Builds a site without checking the alphabet range. The word is reduced
    /// on the way in, so the result is always a valid vertex.
    pub fn from_word(letters: &[Letter]) -> Self {
        Site(reduce(letters.iter().copied()))
    }

    pub(crate) fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(check_reduced(&letters).is_ok());
        Site(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn parent(&self) -> Option<Site> {
        if self.0.is_empty() {
            None
        } else {
            Some(Site(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, len: usize) -> Site {
        Site(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn starts_with(&self, other: &Site) -> bool {
        self.0.starts_with(&other.0)
    }

    /// Appends a compatible letter.
    pub fn child(&self, letter: Letter) -> Site {
        debug_assert!(compatible(self, letter));
        let mut w = self.0.clone();
        w.push(letter);
        Site(w)
    }

    /// Group inverse: letters are involutions, so this is the reversal.
    pub fn inverse(&self) -> Site {
        Site(self.0.iter().rev().copied().collect())
    }

    pub fn parity(&self) -> Parity {
        parity(self)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_letters(&self.0, f)
    }
}

impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = parse_letters(s)?;
        check_reduced(&letters)?;
        Ok(Site(letters))
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn reduce(letters: impl IntoIterator<Item = Letter>) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for x in letters {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

/// Reduced word of the group product `u * v`.
pub fn concat_reduce(u: &Site, v: &Site) -> Site {
    let mut out = u.0.clone();
    let mut rest = v.0.iter().copied().peekable();
    while let (Some(&x), Some(&y)) = (out.last(), rest.peek()) {
        if x != y {
            break;
        }
        out.pop();
        rest.next();
    }
    out.extend(rest);
    Site(out)
}

/// Path distance, `|u^-1 v|`.
pub fn distance(u: &Site, v: &Site) -> usize {
    let common = u.0.iter().zip(&v.0).take_while(|(a, b)| a == b).count();
    (u.len() - common) + (v.len() - common)
}

/// Whether `x` may follow the last letter of `u`.
pub fn compatible(u: &Site, x: Letter) -> bool {
    u.last() != Some(x)
}

pub fn parity(u: &Site) -> Parity {
    if u.len().is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// `|S_r| = d (d-1)^(r-1)` for `r >= 1`.
pub fn sphere_size(d: usize, r: usize) -> u128 {
    if r == 0 {
        1
    } else {
        d as u128 * (d as u128 - 1).pow(r as u32 - 1)
    }
}

pub fn ball_size(d: usize, r: usize) -> u128 {
    (0..=r).map(|k| sphere_size(d, k)).sum()
}

/// The regular tree of a fixed degree together with enumeration caps.
#[derive(Clone, Copy, Debug)]
pub struct RegularTree {
    alphabet: Alphabet,
    max_sphere: usize,
}

impl RegularTree {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            alphabet: Alphabet::new(d)?,
            max_sphere: DEFAULT_MAX_SPHERE,
        })
    }

    pub fn with_max_sphere(mut self, cap: usize) -> Self {
        self.max_sphere = cap;
        self
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.alphabet.degree()
    }

    fn guard(&self, what: &'static str, requested: u128) -> Result<()> {
        if requested > self.max_sphere as u128 {
            return Err(Error::CapExceeded {
                what,
                requested,
                cap: self.max_sphere as u128,
            });
        }
        Ok(())
    }

    /// All sites at distance `r` from the root, in lexicographic order.
    pub fn sphere(&self, r: usize) -> Result<Vec<Site>> {
        self.guard("sphere", sphere_size(self.degree(), r))?;
        let mut layer = vec![Site::root()];
        for _ in 0..r {
            layer = layer
                .iter()
                .flat_map(|u| {
                    self.alphabet
                        .letters_except(u.last())
                        .map(move |x| u.child(x))
                })
                .collect();
        }
        Ok(layer)
    }

    /// Spheres of radius `0..=r`, concatenated.
    pub fn ball(&self, r: usize) -> Result<Vec<Site>> {
        let mut out = Vec::new();
        for k in 0..=r {
            out.extend(self.sphere(k)?);
        }
        Ok(out)
    }

    /// The `k`-th level of the subtree under `u`, ordered lexicographically.
    pub fn subtree_level(&self, u: &Site, k: usize) -> Result<Vec<Site>> {
        self.guard(
            "subtree level",
            (self.alphabet.branching() as u128).pow(k as u32),
        )?;
        let mut layer = vec![u.clone()];
        for _ in 0..k {
            layer = layer
                .iter()
                .flat_map(|v| {
                    self.alphabet
                        .letters_except(v.last())
                        .map(move |x| v.child(x))
                })
                .collect();
        }
        Ok(layer)
    }
}

/// Dense indexing of the ball of radius `R`, consistent with the
/// concatenated lexicographic sphere order of [`RegularTree::ball`].
#[derive(Clone, Debug)]
pub struct BallIndex {
    alphabet: Alphabet,
    radius: usize,
    offsets: Vec<usize>,
}

impl BallIndex {
    pub fn new(alphabet: Alphabet, radius: usize, cap: usize) -> Result<Self> {
        let total = ball_size(alphabet.degree(), radius);
        if total > cap as u128 {
            return Err(Error::CapExceeded {
                what: "ball",
                requested: total,
                cap: cap as u128,
            });
        }
        let offsets = (0..=radius)
            .map(|r| {
                if r == 0 {
                    0
                } else {
                    ball_size(alphabet.degree(), r - 1) as usize
                }
            })
            .collect();
        Ok(Self {
            alphabet,
            radius,
            offsets,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        ball_size(self.alphabet.degree(), self.radius) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        let w = site.letters();
        if w.len() > self.radius {
            return None;
        }
        if w.is_empty() {
            return Some(0);
        }
        let b = self.alphabet.branching();
        let mut pos = w[0] as usize - 1;
        for pair in w.windows(2) {
            pos = pos * b + self.alphabet.digit_of(pair[1], pair[0]);
        }
        Some(self.offsets[w.len()] + pos)
    }

    pub fn site_at(&self, index: usize) -> Site {
        let len = self.offsets.partition_point(|&o| o <= index) - 1;
        if len == 0 {
            return Site::root();
        }
        let b = self.alphabet.branching();
        let mut pos = index - self.offsets[len];
        let mut digits = vec![0usize; len - 1];
        for slot in digits.iter_mut().rev() {
            *slot = pos % b;
            pos /= b;
        }
        let mut letters = Vec::with_capacity(len);
        letters.push(pos as Letter + 1);
        for dg in digits {
            let prev = *letters.last().unwrap();
            letters.push(self.alphabet.letter_at(dg, prev));
        }
        Site(letters)
    }
}
