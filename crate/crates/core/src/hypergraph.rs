//! Exact multi-hypergraphs over dense vertex ids `0..N`.
//!
//! A [`Hypergraph`] is a multiset of vertex subsets. Subsets of size one are
//! *patches*, the empty subset is *debris*. Removing a vertex deletes it from
//! every edge, so edge counts are conserved while edges shrink. Collapsing
//! repeatedly removes a vertex under a uniformly chosen patch until no patch
//! is left; the set of removed vertices is the identifiable set, which does
//! not depend on the choices made. The complement of the identifiable set is
//! the 2-core under the usual peeling duality.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;

use crate::beta_series::BetaSeries;
use crate::error::{Error, Result};
use crate::rng;

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n_vertices: usize,
    edges: BTreeMap<Vec<VertexId>, u64>,
}

/// Edge counts with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EdgeStats {
    pub patches: u64,
    pub debris: u64,
    pub total: u64,
}

/// Snapshot taken after each removal during [`Hypergraph::collapse_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollapseStep {
    pub vertex: VertexId,
    pub patches: u64,
    pub debris: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOutcome {
    /// Removed vertices in removal order.
    pub identified: Vec<VertexId>,
    /// The patch-free hypergraph left behind.
    pub stable: Hypergraph,
    /// Final debris minus initial debris: edges that collapsed during the run.
    pub identifiable_edge_count: u64,
    /// All final debris, counting edges that were debris from the start.
    pub final_debris: u64,
    pub trajectory: Option<Vec<CollapseStep>>,
}

impl CollapseOutcome {
    pub fn identified_set(&self) -> BTreeSet<VertexId> {
        self.identified.iter().copied().collect()
    }
}

impl Hypergraph {
    pub fn new(n_vertices: usize) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::domain("a hypergraph needs at least one vertex"));
        }
        if n_vertices > VertexId::MAX as usize {
            return Err(Error::domain("too many vertices for 32-bit ids"));
        }
        Ok(Self {
            n_vertices,
            edges: BTreeMap::new(),
        })
    }

    pub fn from_edges<I, E>(n_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Vec<VertexId>>,
    {
        let mut h = Self::new(n_vertices)?;
        for e in edges {
            h.add_edge(e.into())?;
        }
        Ok(h)
    }

    /// Adds one edge instance; the vertex list is sorted and must be
    /// duplicate-free.
    pub fn add_edge(&mut self, mut edge: Vec<VertexId>) -> Result<()> {
        edge.sort_unstable();
        if edge.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("edge {edge:?} repeats a vertex")));
        }
        if let Some(&v) = edge.last() {
            if v as usize >= self.n_vertices {
                return Err(Error::domain(format!(
                    "vertex {v} out of range for N = {}",
                    self.n_vertices
                )));
            }
        }
        *self.edges.entry(edge).or_insert(0) += 1;
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Distinct edges with their multiplicities, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&[VertexId], u64)> {
        self.edges.iter().map(|(e, &m)| (e.as_slice(), m))
    }

    pub fn multiplicity(&self, edge: &[VertexId]) -> u64 {
        self.edges.get(edge).copied().unwrap_or(0)
    }

    pub fn stats(&self) -> EdgeStats {
        let mut s = EdgeStats::default();
        for (e, &m) in &self.edges {
            match e.len() {
                0 => s.debris += m,
                1 => s.patches += m,
                _ => {}
            }
            s.total += m;
        }
        s
    }

    /// Number of edge instances whose vertex set lies inside `set`.
    pub fn edges_within(&self, set: &BTreeSet<VertexId>) -> u64 {
        self.edges
            .iter()
            .filter(|(e, _)| e.iter().all(|v| set.contains(v)))
            .map(|(_, &m)| m)
            .sum()
    }

    /// Deletes `v` from every edge. Edges merge when they become equal.
    pub fn remove_vertex(&self, v: VertexId) -> Result<Hypergraph> {
        if v as usize >= self.n_vertices {
            return Err(Error::domain(format!("vertex {v} out of range")));
        }
        let mut edges = BTreeMap::new();
        for (e, &m) in &self.edges {
            let key: Vec<VertexId> = e.iter().copied().filter(|&u| u != v).collect();
            *edges.entry(key).or_insert(0) += m;
        }
        Ok(Hypergraph {
            n_vertices: self.n_vertices,
            edges,
        })
    }

    /// Draws a Poisson(β) hypergraph on `n_vertices` vertices: for each size
    /// `j` a Poisson(`N β_j`) number of edges, each on an independent uniform
    /// `j`-subset.
    pub fn sample_poisson<R: Rng + ?Sized>(
        n_vertices: usize,
        series: &BetaSeries,
        rng: &mut R,
    ) -> Result<Hypergraph> {
        let mut h = Hypergraph::new(n_vertices)?;
        if series.degree() > n_vertices {
            return Err(Error::domain(format!(
                "degree {} exceeds N = {n_vertices}",
                series.degree()
            )));
        }
        let n = n_vertices as f64;
        for (j, &beta_j) in series.coeffs().iter().enumerate() {
            let count = rng::poisson(rng, n * beta_j);
            for _ in 0..count {
                let mut edge: Vec<VertexId> = rand::seq::index::sample(rng, n_vertices, j)
                    .into_iter()
                    .map(|v| v as VertexId)
                    .collect();
                edge.sort_unstable();
                *h.edges.entry(edge).or_insert(0) += 1;
            }
        }
        Ok(h)
    }

    /// Collapses until stable, choosing each patch uniformly among patch
    /// instances (multiplicity counts).
    pub fn collapse_all<R: Rng + ?Sized>(&self, rng: &mut R, record_trajectory: bool) -> CollapseOutcome {
        let mut engine = CollapseEngine::new(self);
        let initial_debris = engine.debris;
        let mut identified = Vec::new();
        let mut trajectory = record_trajectory.then(Vec::new);
        while !engine.patch_bag.is_empty() {
            let pick = engine.patch_bag[rng.random_range(0..engine.patch_bag.len())];
            let v = engine.instances[pick][0];
            engine.remove(v);
            identified.push(v);
            if let Some(t) = trajectory.as_mut() {
                t.push(CollapseStep {
                    vertex: v,
                    patches: engine.patch_bag.len() as u64,
                    debris: engine.debris,
                    total: engine.instances.len() as u64,
                });
            }
        }
        let final_debris = engine.debris;
        CollapseOutcome {
            identified,
            stable: engine.into_hypergraph(self.n_vertices),
            identifiable_edge_count: final_debris - initial_debris,
            final_debris,
            trajectory,
        }
    }

    /// Deterministic peeling fixpoint: seeded with every patched vertex, a
    /// vertex joins once some edge containing it has all its other members
    /// already in the set.
    pub fn identifiable_set(&self) -> BTreeSet<VertexId> {
        let n = self.n_vertices;
        let edges: Vec<&Vec<VertexId>> = self.edges.keys().filter(|e| !e.is_empty()).collect();
        let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            for &v in e.iter() {
                incidence[v as usize].push(i);
            }
        }
        // outside[i] = members of edge i not yet identified
        let mut outside: Vec<usize> = edges.iter().map(|e| e.len()).collect();
        let mut in_set = vec![false; n];
        let mut queue: Vec<VertexId> = Vec::new();
        for e in &edges {
            if e.len() == 1 && !in_set[e[0] as usize] {
                in_set[e[0] as usize] = true;
                queue.push(e[0]);
            }
        }
        while let Some(v) = queue.pop() {
            for &i in &incidence[v as usize] {
                outside[i] -= 1;
                if outside[i] == 1 {
                    if let Some(&u) = edges[i].iter().find(|&&u| !in_set[u as usize]) {
                        in_set[u as usize] = true;
                        queue.push(u);
                    }
                }
            }
        }
        (0..n as VertexId).filter(|&v| in_set[v as usize]).collect()
    }

    /// Vertices not identifiable; under peeling duality this is the 2-core.
    pub fn two_core(&self) -> BTreeSet<VertexId> {
        let id = self.identifiable_set();
        (0..self.n_vertices as VertexId).filter(|v| !id.contains(v)).collect()
    }
}

/// Instance-level working copy used during collapse.
struct CollapseEngine {
    instances: Vec<Vec<VertexId>>,
    incidence: Vec<Vec<usize>>,
    patch_bag: Vec<usize>,
    bag_pos: Vec<usize>,
    debris: u64,
}

const NOT_IN_BAG: usize = usize::MAX;

impl CollapseEngine {
    fn new(h: &Hypergraph) -> Self {
        let mut instances = Vec::new();
        let mut incidence = vec![Vec::new(); h.n_vertices];
        let mut patch_bag = Vec::new();
        let mut bag_pos = Vec::new();
        let mut debris = 0;
        for (e, &m) in &h.edges {
            for _ in 0..m {
                let id = instances.len();
                for &v in e {
                    incidence[v as usize].push(id);
                }
                match e.len() {
                    0 => debris += 1,
                    1 => {
                        bag_pos.push(patch_bag.len());
                        patch_bag.push(id);
                        instances.push(e.clone());
                        continue;
                    }
                    _ => {}
                }
                bag_pos.push(NOT_IN_BAG);
                instances.push(e.clone());
            }
        }
        Self {
            instances,
            incidence,
            patch_bag,
            bag_pos,
            debris,
        }
    }

    fn bag_insert(&mut self, id: usize) {
        self.bag_pos[id] = self.patch_bag.len();
        self.patch_bag.push(id);
    }

    fn bag_remove(&mut self, id: usize) {
        let pos = self.bag_pos[id];
        let last = *self.patch_bag.last().expect("non-empty bag");
        self.patch_bag.swap_remove(pos);
        if last != id {
            self.bag_pos[last] = pos;
        }
        self.bag_pos[id] = NOT_IN_BAG;
    }

    fn remove(&mut self, v: VertexId) {
        let touched = std::mem::take(&mut self.incidence[v as usize]);
        for id in touched {
            let len = self.instances[id].len();
            if len == 1 {
                self.bag_remove(id);
                self.instances[id].clear();
                self.debris += 1;
            } else {
                let edge = &mut self.instances[id];
                let at = edge.binary_search(&v).expect("incidence is consistent");
                edge.remove(at);
                if edge.len() == 1 {
                    self.bag_insert(id);
                }
            }
        }
    }

    fn into_hypergraph(self, n_vertices: usize) -> Hypergraph {
        let mut edges = BTreeMap::new();
        for e in self.instances {
            *edges.entry(e).or_insert(0) += 1;
        }
        Hypergraph { n_vertices, edges }
    }
}
