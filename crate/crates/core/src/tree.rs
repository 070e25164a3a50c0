//! Append-only storage for growing labelled trees.
//!
//! Vertices are labelled `1..=n` by arrival time and are never relabelled.
//! The neighbour list of a vertex is its parent (for every vertex but 1)
//! followed by its children in arrival order, so position `i` in the list is
//! stable once it exists and uniform neighbour sampling is a single index draw.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type Vertex = u32;

/// Parent sentinel for the root.
pub const NO_PARENT: Vertex = 0;

const NO_CHILDREN: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthTree {
    // All per-vertex arrays are indexed by label; slot 0 is unused.
    parent: Vec<Vertex>,
    degree: Vec<u32>,
    leaf_count: Vec<u32>,
    depth: Vec<u32>,
    child_slot: Vec<u32>,
    children: Vec<Vec<Vertex>>,
    // census[k] = number of vertices of degree k
    census: Vec<u64>,
}

impl Default for GrowthTree {
    fn default() -> Self {
        Self::seed()
    }
}

impl GrowthTree {
    /// The two-vertex tree with the single edge {1, 2}.
    pub fn seed() -> Self {
        Self::with_capacity(2)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let cap = capacity.max(2) + 1;
        let mut tree = GrowthTree {
            parent: Vec::with_capacity(cap),
            degree: Vec::with_capacity(cap),
            leaf_count: Vec::with_capacity(cap),
            depth: Vec::with_capacity(cap),
            child_slot: Vec::with_capacity(cap),
            children: Vec::new(),
            census: Vec::new(),
        };
        tree.reset();
        tree
    }

    /// Reset to the seed tree, keeping allocations.
    pub fn reset(&mut self) {
        self.parent.clear();
        self.degree.clear();
        self.leaf_count.clear();
        self.depth.clear();
        self.child_slot.clear();
        self.children.clear();
        self.census.clear();

        self.parent.extend_from_slice(&[NO_PARENT, NO_PARENT, 1]);
        self.degree.extend_from_slice(&[0, 1, 1]);
        self.leaf_count.extend_from_slice(&[0, 1, 1]);
        self.depth.extend_from_slice(&[0, 0, 1]);
        self.child_slot.extend_from_slice(&[NO_CHILDREN, 0, NO_CHILDREN]);
        self.children.push(vec![2]);
        self.census.extend_from_slice(&[0, 2]);
    }

    /// Builds a tree from its parent sequence: `parents[i]` is the parent of
    /// vertex `i + 2`, so `parents[0]` must be 1.
    pub fn from_parents(parents: &[Vertex]) -> Result<Self> {
        match parents.first() {
            Some(1) => {}
            Some(&p) => {
                return Err(Error::invalid(format!(
                    "vertex 2 must attach to vertex 1, got {p}"
                )))
            }
            None => return Err(Error::invalid("parent sequence is empty")),
        }
        let mut tree = Self::with_capacity(parents.len() + 1);
        for &p in &parents[1..] {
            tree.attach(p)?;
        }
        Ok(tree)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        (self.parent.len() - 1) as u32
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        v >= 1 && v <= self.n()
    }

    fn check(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v as u64,
                n: self.n() as u64,
            })
        }
    }

    /// Parent of `v`, or `None` for the root.
    #[inline]
    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        match self.parent[v as usize] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> u32 {
        self.degree[v as usize]
    }

    /// Number of neighbours of `v` that are leaves.
    #[inline]
    pub fn leaf_count(&self, v: Vertex) -> u32 {
        self.leaf_count[v as usize]
    }

    #[inline]
    pub fn depth(&self, v: Vertex) -> u32 {
        self.depth[v as usize]
    }

    #[inline]
    pub fn is_leaf(&self, v: Vertex) -> bool {
        self.degree[v as usize] == 1
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        match self.child_slot[v as usize] {
            NO_CHILDREN => &[],
            slot => &self.children[slot as usize],
        }
    }

    /// The `i`-th entry of the neighbour list of `v` (parent first, then children).
    #[inline]
    pub fn neighbour(&self, v: Vertex, i: u32) -> Vertex {
        let p = self.parent[v as usize];
        if p != NO_PARENT {
            if i == 0 {
                return p;
            }
            self.children(v)[(i - 1) as usize]
        } else {
            self.children(v)[i as usize]
        }
    }

    pub fn neighbours(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.parent(v)
            .into_iter()
            .chain(self.children(v).iter().copied())
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.n()
    }

    /// Edges as `(child, parent)` in arrival order of the child.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (2..=self.n()).map(move |c| (c, self.parent[c as usize]))
    }

    /// Parent sequence `(W_1, ..., W_{n-1})`.
    pub fn parent_sequence(&self) -> Vec<Vertex> {
        self.parent[2..].to_vec()
    }

    /// Degree histogram: entry `k` is the number of vertices of degree `k`.
    /// Maintained incrementally; the last entry is always non-zero.
    pub fn census(&self) -> &[u64] {
        &self.census
    }

    pub fn max_degree(&self) -> u32 {
        (self.census.len() - 1) as u32
    }

    /// Number of vertices of degree at least `k`.
    pub fn count_degree_at_least(&self, k: u32) -> u64 {
        let k = (k as usize).max(1);
        self.census.get(k..).map_or(0, |s| s.iter().sum())
    }

    pub fn leaves(&self) -> u64 {
        self.census[1]
    }

    /// Adds vertex `n + 1` as a child of `target` and returns its label.
    pub fn attach(&mut self, target: Vertex) -> Result<Vertex> {
        self.check(target)?;
        Ok(self.attach_unchecked(target))
    }

    pub(crate) fn attach_unchecked(&mut self, target: Vertex) -> Vertex {
        let m = self.n() + 1;
        let t = target as usize;
        let old_deg = self.degree[t];
        if old_deg == 1 {
            // target stops being a leaf; its only neighbour loses a leaf neighbour
            let only = self.neighbour(target, 0) as usize;
            self.leaf_count[only] -= 1;
        }
        self.leaf_count[t] += 1;
        self.degree[t] = old_deg + 1;

        self.census[old_deg as usize] -= 1;
        if self.census.len() <= (old_deg + 1) as usize {
            self.census.push(0);
        }
        self.census[(old_deg + 1) as usize] += 1;
        self.census[1] += 1;

        match self.child_slot[t] {
            NO_CHILDREN => {
                self.child_slot[t] = self.children.len() as u32;
                self.children.push(vec![m]);
            }
            slot => self.children[slot as usize].push(m),
        }

        self.parent.push(target);
        self.degree.push(1);
        // the new vertex's only neighbour is `target`, which now has degree >= 2
        self.leaf_count.push(0);
        self.depth.push(self.depth[t] + 1);
        self.child_slot.push(NO_CHILDREN);
        m
    }

    /// Uniform neighbour of `v`, using exactly one draw.
    #[inline]
    pub fn sample_uniform_neighbour(&self, v: Vertex, rng: &mut RngStream) -> Vertex {
        let i = rng.below(self.degree(v) as u64) as u32;
        self.neighbour(v, i)
    }

    /// Uniform vertex in `1..=n`, using exactly one draw.
    #[inline]
    pub fn sample_uniform_vertex(&self, rng: &mut RngStream) -> Vertex {
        1 + rng.below(self.n() as u64) as Vertex
    }

    /// Graph distance, by walking the deeper endpoint up to the common ancestor.
    pub fn distance(&self, u: Vertex, v: Vertex) -> Result<u32> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.distance_unchecked(u, v))
    }

    pub(crate) fn distance_unchecked(&self, mut u: Vertex, mut v: Vertex) -> u32 {
        let mut d = 0;
        while self.depth[u as usize] > self.depth[v as usize] {
            u = self.parent[u as usize];
            d += 1;
        }
        while self.depth[v as usize] > self.depth[u as usize] {
            v = self.parent[v as usize];
            d += 1;
        }
        while u != v {
            u = self.parent[u as usize];
            v = self.parent[v as usize];
            d += 2;
        }
        d
    }

    /// Recomputes every derived field from the parent array and compares.
    /// O(n); meant for tests and post-mortem checks, not the growth loop.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.n() as usize;
        let fail = |msg: String| Err(Error::InvariantViolation(msg));
        let mut deg = vec![0u32; n + 1];
        for (c, p) in self.edges() {
            if p == NO_PARENT || p >= c {
                return fail(format!("vertex {c} has parent {p}"));
            }
            deg[c as usize] += 1;
            deg[p as usize] += 1;
            if self.depth(c) != self.depth(p) + 1 {
                return fail(format!("depth of {c} is not depth of {p} plus one"));
            }
            if !self.children(p).contains(&c) {
                return fail(format!("{c} missing from children of {p}"));
            }
        }
        if self.depth(1) != 0 || self.parent(1).is_some() {
            return fail("vertex 1 is not the root".into());
        }
        let degree_sum: u64 = deg.iter().map(|&d| d as u64).sum();
        if degree_sum != 2 * (n as u64 - 1) {
            return fail(format!("degree sum {degree_sum} for n = {n}"));
        }
        let mut census = vec![0u64; self.census.len().max(2)];
        for v in 1..=n {
            if deg[v] != self.degree[v] {
                return fail(format!("degree of {v}: stored {} actual {}", self.degree[v], deg[v]));
            }
            let leaves = self
                .neighbours(v as Vertex)
                .filter(|&u| deg[u as usize] == 1)
                .count() as u32;
            if leaves != self.leaf_count[v] {
                return fail(format!(
                    "leaf count of {v}: stored {} actual {leaves}",
                    self.leaf_count[v]
                ));
            }
            if self.leaf_count[v] > self.degree[v] {
                return fail(format!("leaf count of {v} exceeds its degree"));
            }
            match census.get_mut(deg[v] as usize) {
                Some(c) => *c += 1,
                None => return fail(format!("degree {} outside census", deg[v])),
            }
            for u in self.neighbours(v as Vertex) {
                if !self.neighbours(u).any(|w| w as usize == v) {
                    return fail(format!("{u} is a neighbour of {v} but not vice versa"));
                }
            }
        }
        if census != self.census {
            return fail("degree census out of date".into());
        }
        Ok(())
    }

    /// Serializes in the frozen-tree text format: `n=<n>` followed by one
    /// `<child> <parent>` line per edge in arrival order.
    pub fn to_frozen_string(&self) -> String {
        let mut out = String::with_capacity(self.n() as usize * 12);
        let _ = writeln!(out, "n={}", self.n());
        for (c, p) in self.edges() {
            let _ = writeln!(out, "{c} {p}");
        }
        out
    }

    pub fn write_frozen<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n={}", self.n())?;
        for (c, p) in self.edges() {
            writeln!(w, "{c} {p}")?;
        }
        w.flush()
    }

    pub fn read_frozen<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            line: line + 1,
            message,
        };
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty input".into()))?;
        let header = header.map_err(|e| parse_err(0, e.to_string()))?;
        let n: u32 = header
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(0, format!("expected `n=<int>`, got `{header}`")))?;
        if n < 2 {
            return Err(parse_err(0, format!("a frozen tree needs n >= 2, got {n}")));
        }
        let mut tree = GrowthTree::with_capacity(n as usize);
        for expected_child in 2..=n {
            let (i, line) = lines.next().ok_or_else(|| {
                parse_err(expected_child as usize - 1, format!("missing edge for vertex {expected_child}"))
            })?;
            let line = line.map_err(|e| parse_err(i, e.to_string()))?;
            let mut parts = line.split_ascii_whitespace();
            let (Some(c), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(i, format!("expected `<child> <parent>`, got `{line}`")));
            };
            let c: u32 = c.parse().map_err(|_| parse_err(i, format!("bad child `{c}`")))?;
            let p: u32 = p.parse().map_err(|_| parse_err(i, format!("bad parent `{p}`")))?;
            if c != expected_child {
                return Err(parse_err(i, format!("expected child {expected_child}, got {c}")));
            }
            if p == 0 || p >= c {
                return Err(parse_err(i, format!("parent {p} of {c} must be in 1..{c}")));
            }
            if c == 2 {
                continue;
            }
            tree.attach_unchecked(p);
        }
        for (i, line) in lines {
            let line = line.map_err(|e| parse_err(i, e.to_string()))?;
            if !line.trim().is_empty() {
                return Err(parse_err(i, "trailing content after last edge".into()));
            }
        }
        Ok(tree)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_frozen(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_frozen(file)
    }
}
