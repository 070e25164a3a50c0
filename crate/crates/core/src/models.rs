//! Attachment laws and the growth loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::schedule::Schedule;
use crate::stats::{StatSnapshot, StatsConfig};
use crate::tree::{GrowthTree, Vertex};

/// Which growth law is applied at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// Attach to the endpoint of a `k`-step simple random walk started at a
    /// uniform vertex. `k = 1` is the random friend tree.
    Friend {
        #[serde(default = "default_walk_length")]
        k: u32,
    },
    /// With probability `p` attach to the uniform vertex itself, otherwise to
    /// a uniform neighbour of it.
    Redirect { p: f64 },
    /// Uniform random recursive tree.
    Urrt,
    /// Linear preferential attachment.
    Pa,
}

fn default_walk_length() -> u32 {
    1
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Friend { k: 1 }
    }
}

impl ModelSpec {
    pub fn friend() -> Self {
        ModelSpec::Friend { k: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Friend { k: 0 } => Err(Error::InvalidModel(
                "friend requires k >= 1 (use the urrt model for k = 0)".into(),
            )),
            ModelSpec::Redirect { p } if !(p > 0.0 && p < 1.0) => Err(Error::InvalidModel(
                format!("redirect requires 0 < p < 1, got {p}"),
            )),
            _ => Ok(()),
        }
    }

    /// Random draws consumed by one step; constant per model.
    pub fn draws_per_step(&self) -> u64 {
        match *self {
            ModelSpec::Friend { k } => k as u64 + 1,
            ModelSpec::Redirect { .. } => 3,
            ModelSpec::Urrt => 1,
            ModelSpec::Pa => 2,
        }
    }

    /// Samples the attachment target for vertex `n + 1`. The model must be valid.
    #[inline]
    pub fn step(&self, tree: &GrowthTree, rng: &mut RngStream) -> Vertex {
        match *self {
            ModelSpec::Friend { k } => walk_step(tree, rng, k),
            ModelSpec::Redirect { p } => redirect_step_unchecked(tree, rng, p),
            ModelSpec::Urrt => urrt_step(tree, rng),
            ModelSpec::Pa => pa_step(tree, rng),
        }
    }

    /// Short name used in file names and tables.
    pub fn label(&self) -> String {
        match *self {
            ModelSpec::Friend { k } => format!("friend-k{k}"),
            ModelSpec::Redirect { p } => format!("redirect-p{p}"),
            ModelSpec::Urrt => "urrt".into(),
            ModelSpec::Pa => "pa".into(),
        }
    }

    /// Builds a model from a name plus the optional `k` / `p` parameters.
    pub fn from_parts(kind: &str, k: Option<u32>, p: Option<f64>) -> Result<Self> {
        let model = match kind.to_ascii_lowercase().as_str() {
            "friend" | "rft" => ModelSpec::Friend { k: k.unwrap_or(1) },
            "redirect" => ModelSpec::Redirect {
                p: p.ok_or_else(|| Error::InvalidModel("redirect needs p".into()))?,
            },
            "urrt" => ModelSpec::Urrt,
            "pa" => ModelSpec::Pa,
            other => return Err(Error::InvalidModel(format!("unknown model `{other}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::Friend { k } => write!(f, "friend(k={k})"),
            ModelSpec::Redirect { p } => write!(f, "redirect(p={p})"),
            ModelSpec::Urrt => f.write_str("urrt"),
            ModelSpec::Pa => f.write_str("pa"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Accepts `friend`, `friend:2`, `redirect:0.3`, `urrt`, `pa`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((kind, arg)) => (kind, Some(arg)),
            None => (s, None),
        };
        let bad = || Error::InvalidModel(format!("bad model parameter in `{s}`"));
        match kind {
            "friend" | "rft" => {
                let k = arg.map(|a| a.parse::<u32>().map_err(|_| bad())).transpose()?;
                Self::from_parts(kind, k, None)
            }
            "redirect" => {
                let p = arg.map(|a| a.parse::<f64>().map_err(|_| bad())).transpose()?;
                Self::from_parts(kind, None, p)
            }
            _ if arg.is_none() => Self::from_parts(kind, None, None),
            _ => Err(Error::InvalidModel(format!("`{kind}` takes no parameter"))),
        }
    }
}

#[inline]
fn walk_step(tree: &GrowthTree, rng: &mut RngStream, k: u32) -> Vertex {
    let mut w = tree.sample_uniform_vertex(rng);
    for _ in 0..k {
        w = tree.sample_uniform_neighbour(w, rng);
    }
    w
}

/// Uniform vertex, then a `k`-step simple random walk (backtracking allowed).
/// Consumes exactly `k + 1` draws.
pub fn friend_step(tree: &GrowthTree, rng: &mut RngStream, k: u32) -> Result<Vertex> {
    if k == 0 {
        return Err(Error::InvalidModel("friend requires k >= 1".into()));
    }
    Ok(walk_step(tree, rng, k))
}

/// Uniform vertex; one draw.
#[inline]
pub fn urrt_step(tree: &GrowthTree, rng: &mut RngStream) -> Vertex {
    tree.sample_uniform_vertex(rng)
}

/// Degree-proportional target via a uniform edge endpoint; two draws.
#[inline]
pub fn pa_step(tree: &GrowthTree, rng: &mut RngStream) -> Vertex {
    // every edge is {u, parent(u)} for exactly one u >= 2
    let u = 2 + rng.below(tree.n() as u64 - 1) as Vertex;
    if rng.below(2) == 0 {
        u
    } else {
        tree.parent(u).expect("non-root vertex has a parent")
    }
}

/// Uniform `V`, uniform neighbour `W` of `V`, then `V` with probability `p`
/// and `W` otherwise. Three draws.
pub fn redirect_step(tree: &GrowthTree, rng: &mut RngStream, p: f64) -> Result<Vertex> {
    ModelSpec::Redirect { p }.validate()?;
    Ok(redirect_step_unchecked(tree, rng, p))
}

#[inline]
fn redirect_step_unchecked(tree: &GrowthTree, rng: &mut RngStream, p: f64) -> Vertex {
    let v = tree.sample_uniform_vertex(rng);
    let w = tree.sample_uniform_neighbour(v, rng);
    if rng.unit() < p {
        v
    } else {
        w
    }
}

/// Called at every scheduled snapshot during [`grow`].
pub trait Observer {
    fn observe(&mut self, tree: &GrowthTree, snapshot: &StatSnapshot);
}

impl<F: FnMut(&GrowthTree, &StatSnapshot)> Observer for F {
    fn observe(&mut self, tree: &GrowthTree, snapshot: &StatSnapshot) {
        self(tree, snapshot)
    }
}

#[derive(Debug, Clone)]
pub struct Growth {
    pub tree: GrowthTree,
    pub snapshots: Vec<StatSnapshot>,
}

/// Grows a tree from the seed edge to `n_target` vertices, emitting a
/// snapshot (and notifying every observer) at each scheduled size.
pub fn grow(
    model: &ModelSpec,
    n_target: u32,
    rng: &mut RngStream,
    schedule: &Schedule,
    stats: &StatsConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Growth> {
    model.validate()?;
    if n_target < 2 {
        return Err(Error::invalid(format!("n_target must be >= 2, got {n_target}")));
    }
    let points = schedule.points(n_target as u64)?;
    let mut tree = GrowthTree::with_capacity(n_target as usize);
    let mut snapshots = Vec::with_capacity(points.len());
    let mut next = points.iter().copied().peekable();
    loop {
        let n = tree.n() as u64;
        while next.peek().is_some_and(|&p| p < n) {
            next.next();
        }
        if next.peek() == Some(&n) {
            next.next();
            let snap = StatSnapshot::compute(&tree, stats);
            for obs in observers.iter_mut() {
                obs.observe(&tree, &snap);
            }
            snapshots.push(snap);
        }
        if tree.n() >= n_target {
            break;
        }
        let target = model.step(&tree, rng);
        tree.attach_unchecked(target);
    }
    Ok(Growth { tree, snapshots })
}

/// Grows `tree` in place until it has `n_target` vertices. No snapshots.
pub fn grow_into(tree: &mut GrowthTree, model: &ModelSpec, n_target: u32, rng: &mut RngStream) {
    while tree.n() < n_target {
        let target = model.step(tree, rng);
        tree.attach_unchecked(target);
    }
}

/// Grows a fresh tree to `n_target` vertices. No snapshots.
pub fn grow_tree(model: &ModelSpec, n_target: u32, rng: &mut RngStream) -> Result<GrowthTree> {
    model.validate()?;
    if n_target < 2 {
        return Err(Error::invalid(format!("n_target must be >= 2, got {n_target}")));
    }
    let mut tree = GrowthTree::with_capacity(n_target as usize);
    grow_into(&mut tree, model, n_target, rng);
    Ok(tree)
}
