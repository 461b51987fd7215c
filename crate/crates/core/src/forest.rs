//! Decorated planar rooted trees and forests.
//!
//! Text form used in reports and CSV files:
//!
//! ```text
//! forest := "e" | tree tree*
//! tree   := "•" letter | "[" tree tree* "]" letter
//! letter := digits | "(" digits "," digits ")"
//! ```
//!
//! `e` is the empty forest, `•2` a single vertex decorated by 2, `[•2]1` the ladder
//! with root 1 and child 2, and `[•3•2]1` the cherry whose children are 3 then 2
//! from left to right. A forest is the juxtaposition of its trees, e.g. `•1[•2]1`.
//! Bracket letters of the extended alphabet are written `(i,j)`, e.g. `[•1](1,2)`.
//! The parser also accepts `*` in place of `•` and `(ij)` for single digit pairs.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest degree supported by the truncated algebras.
pub const MAX_DEPTH: usize = 3;

/// Decoration of a vertex: a base letter `i` or a bracket letter `(i,j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Base(u16),
    Bracket(u16, u16),
}

impl Letter {
    pub fn is_base(self) -> bool {
        matches!(self, Letter::Base(_))
    }

    pub fn is_bracket(self) -> bool {
        matches!(self, Letter::Bracket(..))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Base(i) => write!(f, "{i}"),
            Letter::Bracket(i, j) => write!(f, "({i},{j})"),
        }
    }
}

/// Base alphabet `1..=d`.
pub fn base_alphabet(d: usize) -> Vec<Letter> {
    (1..=d as u16).map(Letter::Base).collect()
}

/// Extended alphabet: base letters followed by all brackets `(i,j)` in lexicographic order.
pub fn extended_alphabet(d: usize) -> Vec<Letter> {
    let mut out = base_alphabet(d);
    for i in 1..=d as u16 {
        for j in 1..=d as u16 {
            out.push(Letter::Bracket(i, j));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanarTree {
    pub root: Letter,
    pub children: PlanarForest,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PlanarForest {
    trees: Vec<PlanarTree>,
}

/// The one-vertex tree `•_letter`.
pub fn single(letter: Letter) -> PlanarTree {
    PlanarTree {
        root: letter,
        children: PlanarForest::empty(),
    }
}

/// Grafts the trees of `forest` onto a new root decorated by `letter`.
pub fn b_plus(forest: &PlanarForest, letter: Letter) -> PlanarTree {
    PlanarTree {
        root: letter,
        children: forest.clone(),
    }
}

/// Planar juxtaposition `a b`.
pub fn concat(a: &PlanarForest, b: &PlanarForest) -> PlanarForest {
    let mut trees = a.trees.clone();
    trees.extend(b.trees.iter().cloned());
    PlanarForest { trees }
}

impl PlanarTree {
    pub fn new(root: Letter, children: PlanarForest) -> Self {
        PlanarTree { root, children }
    }

    pub fn degree(&self) -> usize {
        1 + self.children.degree()
    }

    /// Inverse of [`b_plus`].
    pub fn split_root(&self) -> (Letter, &PlanarForest) {
        (self.root, &self.children)
    }

    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn to_forest(&self) -> PlanarForest {
        PlanarForest {
            trees: vec![self.clone()],
        }
    }

    pub fn letters(&self, out: &mut Vec<Letter>) {
        out.push(self.root);
        for c in &self.children.trees {
            c.letters(out);
        }
    }

    fn write_into(&self, s: &mut String) {
        if self.children.is_empty() {
            s.push('•');
        } else {
            s.push('[');
            for c in &self.children.trees {
                c.write_into(s);
            }
            s.push(']');
        }
        s.push_str(&self.root.to_string());
    }
}

impl PlanarForest {
    pub fn empty() -> Self {
        PlanarForest { trees: Vec::new() }
    }

    pub fn from_trees(trees: Vec<PlanarTree>) -> Self {
        PlanarForest { trees }
    }

    pub fn single(letter: Letter) -> Self {
        single(letter).to_forest()
    }

    /// Forest of single vertices `•_{l1} •_{l2} ...`.
    pub fn word(letters: &[Letter]) -> Self {
        PlanarForest {
            trees: letters.iter().map(|&l| single(l)).collect(),
        }
    }

    pub fn trees(&self) -> &[PlanarTree] {
        &self.trees
    }

    pub fn into_trees(self) -> Vec<PlanarTree> {
        self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn is_tree(&self) -> bool {
        self.trees.len() == 1
    }

    pub fn as_tree(&self) -> Option<&PlanarTree> {
        if self.trees.len() == 1 {
            self.trees.first()
        } else {
            None
        }
    }

    pub fn degree(&self) -> usize {
        self.trees.iter().map(PlanarTree::degree).sum()
    }

    pub fn concat(&self, other: &PlanarForest) -> PlanarForest {
        concat(self, other)
    }

    pub fn push(&mut self, tree: PlanarTree) {
        self.trees.push(tree);
    }

    /// Splits off the rightmost tree.
    pub fn split_last(&self) -> Option<(PlanarForest, &PlanarTree)> {
        let (last, rest) = self.trees.split_last()?;
        Some((PlanarForest { trees: rest.to_vec() }, last))
    }

    /// Consecutive sub-forest of trees `lo..hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> PlanarForest {
        PlanarForest {
            trees: self.trees[lo..hi].to_vec(),
        }
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for t in &self.trees {
            t.letters(&mut out);
        }
        out
    }

    pub fn is_decorated_by(&self, alphabet: &[Letter]) -> bool {
        self.letters().iter().all(|l| alphabet.contains(l))
    }

    pub fn has_bracket(&self) -> bool {
        self.letters().iter().any(|l| l.is_bracket())
    }

    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn parse(input: &str) -> Result<PlanarForest> {
        Parser::new(input).forest()
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_into(&mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for PlanarForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trees.is_empty() {
            return f.write_str("e");
        }
        let mut s = String::new();
        for t in &self.trees {
            t.write_into(&mut s);
        }
        f.write_str(&s)
    }
}

/// Canonical text key, injective on forests.
pub fn canonical_key(forest: &PlanarForest) -> String {
    forest.key()
}

impl Ord for PlanarForest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.key().cmp(&other.key()))
    }
}

impl PartialOrd for PlanarForest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PlanarTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.key().cmp(&other.key()))
    }
}

impl PartialOrd for PlanarTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<PlanarTree> for PlanarForest {
    fn from(t: PlanarTree) -> Self {
        t.to_forest()
    }
}

impl std::str::FromStr for PlanarForest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlanarForest::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse {
            input: self.src.to_string(),
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn forest(&mut self) -> Result<PlanarForest> {
        self.skip_ws();
        if self.rest() == "e" || self.rest() == "∅" {
            return Ok(PlanarForest::empty());
        }
        if self.rest().is_empty() {
            return self.err("empty input");
        }
        let trees = self.trees()?;
        self.skip_ws();
        if !self.rest().is_empty() {
            return self.err("trailing characters");
        }
        Ok(PlanarForest { trees })
    }

    fn trees(&mut self) -> Result<Vec<PlanarTree>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let r = self.rest();
            if r.starts_with('•') || r.starts_with('*') || r.starts_with('[') {
                out.push(self.tree()?);
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn tree(&mut self) -> Result<PlanarTree> {
        let r = self.rest();
        if let Some(c) = r.chars().next().filter(|&c| c == '•' || c == '*') {
            self.pos += c.len_utf8();
            let l = self.letter()?;
            return Ok(single(l));
        }
        self.pos += 1;
        let children = self.trees()?;
        if children.is_empty() {
            return self.err("bracket without children");
        }
        self.skip_ws();
        if !self.rest().starts_with(']') {
            return self.err("expected ']'");
        }
        self.pos += 1;
        let l = self.letter()?;
        Ok(PlanarTree {
            root: l,
            children: PlanarForest { trees: children },
        })
    }

    fn digits(&mut self) -> Result<u16> {
        let r = self.rest();
        let n = r.bytes().take_while(|b| b.is_ascii_digit()).count();
        if n == 0 {
            return self.err("expected a letter index");
        }
        let v: u16 = match r[..n].parse() {
            Ok(v) => v,
            Err(_) => return self.err("letter index overflow"),
        };
        if v == 0 {
            return self.err("letter indices start at 1");
        }
        self.pos += n;
        Ok(v)
    }

    fn letter(&mut self) -> Result<Letter> {
        if self.rest().starts_with('(') {
            self.pos += 1;
            let r = self.rest();
            let close = match r.find(')') {
                Some(c) => c,
                None => return self.err("unclosed bracket letter"),
            };
            let inner = &r[..close];
            let (i, j) = if let Some((a, b)) = inner.split_once(',') {
                (a.trim().parse::<u16>(), b.trim().parse::<u16>())
            } else if inner.len() == 2 && inner.bytes().all(|b| b.is_ascii_digit()) {
                (inner[..1].parse::<u16>(), inner[1..].parse::<u16>())
            } else {
                return self.err("bracket letter must be (i,j)");
            };
            match (i, j) {
                (Ok(i), Ok(j)) if i > 0 && j > 0 => {
                    self.pos += close + 1;
                    Ok(Letter::Bracket(i, j))
                }
                _ => self.err("bad bracket letter"),
            }
        } else {
            Ok(Letter::Base(self.digits()?))
        }
    }
}

fn check_depth(n: usize) -> Result<()> {
    if n > MAX_DEPTH {
        Err(Error::UnsupportedDepth(n))
    } else {
        Ok(())
    }
}

/// All forests of degree at most `n` over the base alphabet `1..=d`, sorted by (degree, key).
pub fn enumerate_forests(d: usize, n: usize) -> Result<Vec<PlanarForest>> {
    enumerate_forests_over(&base_alphabet(d), n)
}

/// All forests of degree at most `n` over an arbitrary alphabet, sorted by (degree, key).
pub fn enumerate_forests_over(alphabet: &[Letter], n: usize) -> Result<Vec<PlanarForest>> {
    check_depth(n)?;
    let by_degree = forests_by_degree(alphabet, n);
    let mut out = Vec::new();
    for mut level in by_degree {
        level.sort_by_cached_key(|f| f.key());
        out.extend(level);
    }
    Ok(out)
}

/// All trees of degree `1..=n`, sorted by (degree, key).
pub fn enumerate_trees_over(alphabet: &[Letter], n: usize) -> Result<Vec<PlanarTree>> {
    Ok(enumerate_forests_over(alphabet, n)?
        .into_iter()
        .filter_map(|f| f.as_tree().cloned())
        .collect())
}

fn forests_by_degree(alphabet: &[Letter], n: usize) -> Vec<Vec<PlanarForest>> {
    let mut forests: Vec<Vec<PlanarForest>> = vec![vec![PlanarForest::empty()]];
    let mut trees: Vec<Vec<PlanarTree>> = vec![Vec::new()];
    for k in 1..=n {
        let mut tk = Vec::new();
        for ch in &forests[k - 1] {
            for &l in alphabet {
                tk.push(b_plus(ch, l));
            }
        }
        trees.push(tk);
        let mut fk = Vec::new();
        for first in 1..=k {
            for t in &trees[first] {
                for rest in &forests[k - first] {
                    let mut v = vec![t.clone()];
                    v.extend(rest.trees.iter().cloned());
                    fk.push(PlanarForest { trees: v });
                }
            }
        }
        forests.push(fk);
    }
    forests
}

/// Number of forests of degree exactly `k` over `d` letters: `C_k d^k`.
pub fn count_forests(d: usize, k: usize) -> usize {
    let mut c = 1usize;
    for i in 0..k {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c * d.pow(k as u32)
}

/// Interning table from forests to dense indices.
#[derive(Clone, Debug, Default)]
pub struct ForestIndex {
    forests: Vec<PlanarForest>,
    lookup: BTreeMap<String, usize>,
}

impl ForestIndex {
    pub fn new(forests: Vec<PlanarForest>) -> Self {
        let lookup = forests.iter().enumerate().map(|(i, f)| (f.key(), i)).collect();
        ForestIndex { forests, lookup }
    }

    pub fn len(&self) -> usize {
        self.forests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forests.is_empty()
    }

    pub fn get(&self, f: &PlanarForest) -> Option<usize> {
        self.lookup.get(&f.key()).copied()
    }

    pub fn get_key(&self, key: &str) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    pub fn forest(&self, i: usize) -> &PlanarForest {
        &self.forests[i]
    }

    pub fn forests(&self) -> &[PlanarForest] {
        &self.forests
    }
}
