//! Random recursive trees.
//!
//! Vertices carry labels `1..=n`; vertex 1 is the root and every other
//! vertex points to a parent with a strictly smaller label, so labels
//! increase along branches away from the root. Growing attaches vertex
//! `n+1` to a uniform vertex of the current tree, which couples the whole
//! sequence in an increasing fashion.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Arena-backed labeled rooted tree with the increasing-parent invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursiveTree {
    parent: Vec<u32>,        // indexed by label-1; parent[0] = 0 sentinel
    children: Vec<Vec<u32>>, // ascending by construction
}

impl RecursiveTree {
    /// The one-vertex tree.
    pub fn single() -> Self {
        RecursiveTree { parent: vec![0], children: vec![Vec::new()] }
    }

    /// Rebuild from a parent array (`parents[v-2]` is the parent of `v`).
    pub fn from_parents(parents: &[u32]) -> Result<Self> {
        let mut tree = RecursiveTree::single();
        for (i, &p) in parents.iter().enumerate() {
            let v = i as u32 + 2;
            if p == 0 || p >= v {
                return Err(Error::InvalidArgument(format!(
                    "parent of {v} must lie in 1..{v}, got {p}"
                )));
            }
            tree.attach(p);
        }
        Ok(tree)
    }

    pub fn n(&self) -> u32 {
        self.parent.len() as u32
    }

    /// Parent label, `None` for the root.
    pub fn parent(&self, v: u32) -> Option<u32> {
        assert!(v >= 1 && v <= self.n(), "vertex {v} out of range");
        if v == 1 {
            None
        } else {
            Some(self.parent[(v - 1) as usize])
        }
    }

    pub fn children(&self, v: u32) -> &[u32] {
        assert!(v >= 1 && v <= self.n(), "vertex {v} out of range");
        &self.children[(v - 1) as usize]
    }

    /// Attach a new vertex below `parent`, returning its label.
    pub fn attach(&mut self, parent: u32) -> u32 {
        let v = self.n() + 1;
        assert!(parent >= 1 && parent < v, "parent {parent} out of range");
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.children[(parent - 1) as usize].push(v);
        v
    }

    /// Attach vertex `n+1` to a uniform vertex of the current tree. Old
    /// vertices and edges are untouched (inclusion coupling).
    pub fn grow<R: Rng>(&mut self, rng: &mut R) -> u32 {
        let parent = rng.random_range(1..=self.n());
        self.attach(parent)
    }

    pub fn root_degree(&self) -> usize {
        self.children[0].len()
    }

    /// Number of vertices in the subtree rooted at `v` (including `v`).
    pub fn subtree_size(&self, v: u32) -> u64 {
        let mut stack = vec![v];
        let mut count = 0u64;
        while let Some(u) = stack.pop() {
            count += 1;
            stack.extend_from_slice(self.children(u));
        }
        count
    }

    /// Depth of `v` (root has depth 0).
    pub fn depth(&self, v: u32) -> u32 {
        let mut d = 0;
        let mut w = v;
        while let Some(p) = self.parent(w) {
            d += 1;
            w = p;
        }
        d
    }

    /// Full invariant check; construction keeps these true, import paths
    /// call it explicitly.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for v in 2..=n {
            let p = self.parent[(v - 1) as usize];
            if p == 0 || p >= v {
                return Err(Error::InvalidArgument(format!(
                    "parent[{v}] = {p} violates parent < v"
                )));
            }
            if !self.children(p).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "children list of {p} misses {v}"
                )));
            }
        }
        let listed: usize = self.children.iter().map(Vec::len).sum();
        if listed != (n - 1) as usize {
            return Err(Error::InvalidArgument(
                "children lists are not the inverse of the parent array".into(),
            ));
        }
        Ok(())
    }

    /// Text export: first line `n`, then `v parent[v]` for `v = 2..=n`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n());
        for v in 2..=self.n() {
            let _ = writeln!(out, "{} {}", v, self.parent[(v - 1) as usize]);
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let n: u32 = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tree file".into()))?
            .trim()
            .parse()
            .map_err(|_| Error::Parse("bad vertex count".into()))?;
        if n == 0 {
            return Err(Error::Parse("vertex count must be >= 1".into()));
        }
        let mut parents = Vec::with_capacity((n - 1) as usize);
        for v in 2..=n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing line for vertex {v}")))?;
            let mut it = line.split_whitespace();
            let lv: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing label on line for {v}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad label on line for {v}")))?;
            if lv != v {
                return Err(Error::Parse(format!("expected vertex {v}, got {lv}")));
            }
            let p: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing parent for {v}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad parent for {v}")))?;
            parents.push(p);
        }
        let tree = RecursiveTree::from_parents(&parents)?;
        tree.validate()?;
        Ok(tree)
    }

    /// Canonical encoding of the radius-`r` neighborhood of `v` in the
    /// tree metric.
    pub fn ball(&self, v: u32, r: u32) -> Result<Ball> {
        if v == 0 || v > self.n() {
            return Err(Error::InvalidArgument(format!(
                "vertex {v} not in 1..={}",
                self.n()
            )));
        }
        Ok(Ball(encode_ball(self, v, r)))
    }
}

/// Uniform random recursive tree on `n` vertices: every one of the
/// `(n-1)!` recursive trees is equally likely.
pub fn sample_recursive_tree<R: Rng>(n: u32, rng: &mut R) -> Result<RecursiveTree> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut tree = RecursiveTree::single();
    for _ in 1..n {
        tree.grow(rng);
    }
    debug_assert!(tree.validate().is_ok());
    Ok(tree)
}

/// Rooted radius-`r` ball, canonically encoded as a parenthesis string.
/// Equal strings exactly characterize rooted isomorphism of balls.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ball(String);

impl Ball {
    pub fn encoding(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Ball {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Neighborhood access used by the canonical ball encoder, so the same
/// encoding serves both `RecursiveTree` and flat parent/children arrays.
pub trait Adjacency {
    fn parent_of(&self, v: u32) -> Option<u32>;
    fn children_of(&self, v: u32) -> &[u32];
}

impl Adjacency for RecursiveTree {
    fn parent_of(&self, v: u32) -> Option<u32> {
        self.parent(v)
    }

    fn children_of(&self, v: u32) -> &[u32] {
        self.children(v)
    }
}

/// AHU-style canonical form: children encodings are sorted at every level,
/// so the string is invariant under rooted isomorphism.
pub fn encode_ball<A: Adjacency>(adj: &A, center: u32, r: u32) -> String {
    fn rec<A: Adjacency>(adj: &A, v: u32, from: Option<u32>, budget: u32) -> String {
        if budget == 0 {
            return "()".to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        if let Some(p) = adj.parent_of(v) {
            if Some(p) != from {
                parts.push(rec(adj, p, Some(v), budget - 1));
            }
        }
        for &c in adj.children_of(v) {
            if Some(c) != from {
                parts.push(rec(adj, c, Some(v), budget - 1));
            }
        }
        parts.sort_unstable();
        let mut out = String::with_capacity(2 + parts.iter().map(String::len).sum::<usize>());
        out.push('(');
        for p in parts {
            out.push_str(&p);
        }
        out.push(')');
        out
    }
    rec(adj, center, None, r)
}
