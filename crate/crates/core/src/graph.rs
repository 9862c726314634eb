//! The dual graph of a maximal sphere system.
//!
//! Vertices are pants (3-punctured 3-spheres), edges are the spheres of the
//! system. Incidence is recorded per sphere end ([`HalfEdge`]) so that loop
//! edges, spheres with both sides in the same pants, need no special casing.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{HalfEdge, PVertex, SphereId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("rank below 2 unsupported (got {0})")]
    RankBelowTwo(u32),
    #[error("invalid sphere graph: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Where one end of a sphere edge attaches: a pants and one of its three slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEnd {
    pub p: PVertex,
    pub slot: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereEdge {
    pub id: SphereId,
    pub ends: [EdgeEnd; 2],
}

impl SphereEdge {
    pub fn is_loop(&self) -> bool {
        self.ends[0].p == self.ends[1].p
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawGraph {
    rank: u32,
    p_vertices: Vec<PVertex>,
    edges: Vec<SphereEdge>,
}

/// Cubic multigraph modelling the sphere system. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "RawGraph", into = "RawGraph")]
pub struct SphereGraph {
    rank: u32,
    p_vertices: Vec<PVertex>,
    edges: Vec<SphereEdge>,
    edge_index: HashMap<SphereId, usize>,
    // (slot, half-edge) per pants, sorted by slot
    incident: BTreeMap<PVertex, Vec<(u8, HalfEdge)>>,
}

impl PartialEq for SphereGraph {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.p_vertices == other.p_vertices && self.edges == other.edges
    }
}

impl Eq for SphereGraph {}

impl From<RawGraph> for SphereGraph {
    fn from(raw: RawGraph) -> Self {
        SphereGraph::from_parts(raw.rank, raw.p_vertices, raw.edges)
    }
}

impl From<SphereGraph> for RawGraph {
    fn from(g: SphereGraph) -> Self {
        RawGraph {
            rank: g.rank,
            p_vertices: g.p_vertices,
            edges: g.edges,
        }
    }
}

impl SphereGraph {
    /// Assemble a graph without checking it; see [`SphereGraph::validate`].
    pub fn from_parts(rank: u32, p_vertices: Vec<PVertex>, edges: Vec<SphereEdge>) -> Self {
        let edge_index = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
        let mut incident: BTreeMap<PVertex, Vec<(u8, HalfEdge)>> =
            p_vertices.iter().map(|&p| (p, Vec::new())).collect();
        for e in &edges {
            for (end, at) in e.ends.iter().enumerate() {
                incident
                    .entry(at.p)
                    .or_default()
                    .push((at.slot, HalfEdge::new(e.id, end as u8)));
            }
        }
        for list in incident.values_mut() {
            list.sort();
        }
        SphereGraph {
            rank,
            p_vertices,
            edges,
            edge_index,
            incident,
        }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn p_vertices(&self) -> &[PVertex] {
        &self.p_vertices
    }

    pub fn edges(&self) -> &[SphereEdge] {
        &self.edges
    }

    pub fn edge(&self, id: SphereId) -> Option<&SphereEdge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    pub fn sphere_ids(&self) -> impl Iterator<Item = SphereId> + '_ {
        self.edges.iter().map(|e| e.id)
    }

    /// The pants a half-edge attaches to.
    pub fn pants_of(&self, h: HalfEdge) -> Option<PVertex> {
        self.edge(h.sphere).map(|e| e.ends[h.end as usize].p)
    }

    /// The half-edges at a pants, in slot order.
    pub fn half_edges_at(&self, p: PVertex) -> Vec<HalfEdge> {
        self.incident
            .get(&p)
            .map(|v| v.iter().map(|&(_, h)| h).collect())
            .unwrap_or_default()
    }

    pub fn has_vertex(&self, p: PVertex) -> bool {
        self.incident.contains_key(&p)
    }

    pub fn betti(&self) -> i64 {
        self.edges.len() as i64 - self.p_vertices.len() as i64 + 1
    }

    /// Empty iff the graph is a connected cubic multigraph of first Betti
    /// number equal to its rank.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        if self.rank < 2 {
            diags.push(format!("rank {} below 2", self.rank));
        }
        let declared: BTreeSet<PVertex> = self.p_vertices.iter().copied().collect();
        if declared.len() != self.p_vertices.len() {
            diags.push("duplicate P-vertex identifiers".to_string());
        }
        let mut seen_edges = BTreeSet::new();
        for e in &self.edges {
            if !seen_edges.insert(e.id) {
                diags.push(format!("duplicate sphere identifier {}", e.id));
            }
            for end in &e.ends {
                if !declared.contains(&end.p) {
                    diags.push(format!("sphere {} attaches to unknown P-vertex {}", e.id, end.p));
                }
                if end.slot > 2 {
                    diags.push(format!("sphere {} uses slot {} (must be 0, 1 or 2)", e.id, end.slot));
                }
            }
        }
        for p in &self.p_vertices {
            let slots = self.incident.get(p).map(Vec::as_slice).unwrap_or(&[]);
            if slots.len() != 3 {
                diags.push(format!("P-vertex {} has {} half-edges", p, slots.len()));
            } else {
                let distinct: BTreeSet<u8> = slots.iter().map(|&(s, _)| s).collect();
                if distinct.len() != 3 {
                    diags.push(format!("P-vertex {} has a repeated slot", p));
                }
            }
        }
        if !self.p_vertices.is_empty() && !self.is_connected() {
            diags.push("graph disconnected".to_string());
        }
        if self.p_vertices.is_empty() {
            diags.push("graph has no P-vertices".to_string());
        }
        if self.betti() != self.rank as i64 {
            diags.push(format!(
                "first Betti number {} (E={}, V={}) differs from rank {}",
                self.betti(),
                self.edges.len(),
                self.p_vertices.len(),
                self.rank
            ));
        }
        diags
    }

    pub fn check(&self) -> Result<(), GraphError> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            Err(GraphError::Invalid(diags))
        }
    }

    fn is_connected(&self) -> bool {
        let Some(&start) = self.p_vertices.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for h in self.half_edges_at(p) {
                if let Some(q) = self.pants_of(h.opposite()) {
                    if seen.insert(q) {
                        queue.push_back(q);
                    }
                }
            }
        }
        self.p_vertices.iter().all(|p| seen.contains(p))
    }

    /// Graphviz rendering: pants as circles, spheres as labelled edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph sphere_system {\n  node [shape=circle];\n");
        for p in &self.p_vertices {
            let _ = writeln!(out, "  {p};");
        }
        for e in &self.edges {
            let _ = writeln!(out, "  {} -- {} [label=\"{}\"];", e.ends[0].p, e.ends[1].p, e.id);
        }
        out.push_str("}\n");
        out
    }
}

/// Necklace of digons: pants `p_{2i}`, `p_{2i+1}` joined by two parallel
/// spheres, consecutive digons joined by one sphere, the last closing back to
/// `p0`. For rank 2 this is the theta graph.
pub fn build_standard(n: u32) -> Result<SphereGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::RankBelowTwo(n));
    }
    let v = 2 * n - 2;
    let p_vertices: Vec<PVertex> = (0..v).map(PVertex).collect();
    let mut next_slot = vec![0u8; v as usize];
    let mut edges = Vec::new();
    let mut add = |a: u32, b: u32, edges: &mut Vec<SphereEdge>| {
        let (a, b) = (a.min(b), a.max(b));
        let sa = next_slot[a as usize];
        next_slot[a as usize] += 1;
        let sb = next_slot[b as usize];
        next_slot[b as usize] += 1;
        let id = SphereId(edges.len() as u32);
        edges.push(SphereEdge {
            id,
            ends: [
                EdgeEnd {
                    p: PVertex(a),
                    slot: sa,
                },
                EdgeEnd {
                    p: PVertex(b),
                    slot: sb,
                },
            ],
        });
    };
    for block in 0..v / 2 {
        let (a, b) = (2 * block, 2 * block + 1);
        add(a, b, &mut edges);
        add(a, b, &mut edges);
    }
    for block in 0..v / 2 - 1 {
        add(2 * block + 1, 2 * block + 2, &mut edges);
    }
    add(v - 1, 0, &mut edges);
    Ok(SphereGraph::from_parts(n, p_vertices, edges))
}

/// Uniform random pairing of the `6n - 6` pants slots, redrawn until the
/// resulting cubic multigraph is connected. Reproducible per seed.
pub fn random_cubic(n: u32, seed: u64) -> Result<SphereGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::RankBelowTwo(n));
    }
    let v = 2 * n - 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<EdgeEnd> = (0..v)
        .flat_map(|p| (0..3u8).map(move |slot| EdgeEnd { p: PVertex(p), slot }))
        .collect();
    loop {
        points.shuffle(&mut rng);
        let edges: Vec<SphereEdge> = points
            .chunks(2)
            .enumerate()
            .map(|(i, pair)| {
                let (a, b) = if (pair[0].p, pair[0].slot) <= (pair[1].p, pair[1].slot) {
                    (pair[0], pair[1])
                } else {
                    (pair[1], pair[0])
                };
                SphereEdge {
                    id: SphereId(i as u32),
                    ends: [a, b],
                }
            })
            .collect();
        let g = SphereGraph::from_parts(n, (0..v).map(PVertex).collect(), edges);
        if g.is_connected() {
            return Ok(g);
        }
    }
}

/// An oriented free generator carried by a non-tree sphere edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    /// 1-based generator index.
    pub index: u32,
    /// Crossing the sphere out of this half-edge reads the generator positively.
    pub tail: HalfEdge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorLabeling {
    pub spanning_tree: BTreeSet<SphereId>,
    pub labels: BTreeMap<SphereId, Generator>,
}

impl GeneratorLabeling {
    /// Signed letter read when crossing out of half-edge `from`, if the sphere
    /// is not a tree edge.
    pub fn letter(&self, from: HalfEdge) -> Option<i32> {
        self.labels.get(&from.sphere).map(|g| {
            let i = g.index as i32;
            if g.tail == from {
                i
            } else {
                -i
            }
        })
    }
}

/// Breadth-first spanning tree from the least pants, scanning incident spheres
/// in identifier order; the remaining spheres become `x1..xn` in identifier
/// order, oriented from the lesser to the greater pants (loops: end 0 to end 1).
pub fn label_generators(g: &SphereGraph) -> GeneratorLabeling {
    let mut tree = BTreeSet::new();
    if let Some(&start) = g.p_vertices.iter().min() {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let mut around = g.half_edges_at(p);
            around.sort();
            for h in around {
                let Some(q) = g.pants_of(h.opposite()) else { continue };
                if seen.insert(q) {
                    tree.insert(h.sphere);
                    queue.push_back(q);
                }
            }
        }
    }
    let mut non_tree: Vec<&SphereEdge> = g.edges.iter().filter(|e| !tree.contains(&e.id)).collect();
    non_tree.sort_by_key(|e| e.id);
    let labels = non_tree
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let tail_end = if e.ends[0].p <= e.ends[1].p { 0 } else { 1 };
            (
                e.id,
                Generator {
                    index: i as u32 + 1,
                    tail: HalfEdge::new(e.id, tail_end),
                },
            )
        })
        .collect();
    GeneratorLabeling {
        spanning_tree: tree,
        labels,
    }
}
