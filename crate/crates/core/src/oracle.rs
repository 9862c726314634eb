//! Verification harness: random normal tori, inverse-move perturbation,
//! exhaustive confluence search and the round-trip/minimality experiments.
//!
//! Every trial is driven by its own seed, so any failure can be replayed
//! from the seed recorded in the report.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{label_generators, random_cubic, GeneratorLabeling, GraphError, SphereGraph};
use crate::ids::{CircleId, HalfEdge, PVertex, PieceId, RegionId, Side, SphereId};
use crate::normal_graph::{CanonicalForm, DecoratedGraph, NormalGraphError, NormalTorus, Sign};
use crate::normalize::{apply_move, find_moves, flip_frame, normalize, MoveError, NormalizeError, TraceStep};
use crate::position::{BoundarySlot, Circle, Piece, RegionTree, TorusPosition};

const GENERATOR_RETRIES: usize = 10_000;
const PERTURB_RETRIES: usize = 500;
pub const DEFAULT_CONFLUENCE_BOUND: usize = 12;
pub const DEFAULT_MAX_STATES: usize = 200_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("size bound {0} is below 2 pieces")]
    SizeBound(usize),
    #[error("no normal torus found after {0} attempts")]
    GeneratorExhausted(usize),
    #[error("no applicable inverse move at step {0}")]
    NoInverseMove(usize),
    #[error("total count {count} exceeds the search bound {bound}")]
    TooLarge { count: usize, bound: usize },
    #[error("state space exceeded {0} positions")]
    StateOverflow(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    NormalGraph(#[from] NormalGraphError),
    #[error(transparent)]
    Move(#[from] MoveError),
}

// ---------------------------------------------------------------------------
// random normal tori

struct Builder<'a> {
    g: &'a SphereGraph,
    pieces: BTreeMap<PieceId, Piece>,
    circles: BTreeMap<CircleId, Circle>,
}

impl Builder<'_> {
    fn add_piece(&mut self, pants: PVertex) -> PieceId {
        let id = PieceId(self.pieces.len() as u32);
        self.pieces.insert(
            id,
            Piece {
                pants,
                genus: 0,
                boundary: Vec::new(),
                uncrossed_sides: BTreeMap::new(),
            },
        );
        id
    }

    /// New circle on `h.sphere` with `a` at `h` and `b` at the opposite end.
    fn glue(&mut self, a: PieceId, h: HalfEdge, b: PieceId) {
        let c = CircleId(self.circles.len() as u32);
        self.circles.insert(c, Circle { sphere: h.sphere });
        self.pieces.get_mut(&a).unwrap().boundary.push(BoundarySlot {
            circle: c,
            half_edge: h,
        });
        self.pieces.get_mut(&b).unwrap().boundary.push(BoundarySlot {
            circle: c,
            half_edge: h.opposite(),
        });
    }

    fn label(&mut self, p: PieceId, h: HalfEdge, side: Side) {
        self.pieces.get_mut(&p).unwrap().uncrossed_sides.insert(h, side);
    }

    /// Grow a tree hanging off `parent` through its half-edge `via`.
    fn grow(&mut self, rng: &mut ChaCha8Rng, parent: PieceId, via: HalfEdge, budget: &mut usize) {
        let entry = via.opposite();
        let pants = self.g.pants_of(entry).expect("valid graph");
        let child = self.add_piece(pants);
        self.glue(parent, via, child);
        *budget -= 1;
        let mut others: Vec<HalfEdge> = self
            .g
            .half_edges_at(pants)
            .into_iter()
            .filter(|&h| h != entry)
            .collect();
        others.shuffle(rng);
        let roll: f64 = rng.gen();
        if *budget >= 2 && roll < 0.2 {
            *budget -= 1;
            self.grow(rng, child, others[0], budget);
            *budget += 1;
            self.grow(rng, child, others[1], budget);
        } else if *budget >= 1 && roll < 0.5 {
            self.grow(rng, child, others[0], budget);
            let side = random_side(rng);
            self.label(child, others[1], side);
        } else {
            let side = random_side(rng);
            self.label(child, others[0], side);
            self.label(child, others[1], side.flip());
        }
    }
}

fn random_side(rng: &mut ChaCha8Rng) -> Side {
    if rng.gen() {
        Side::A
    } else {
        Side::B
    }
}

fn is_proper_power(seq: &[HalfEdge]) -> bool {
    let n = seq.len();
    (1..n).any(|d| n.is_multiple_of(d) && (0..n).all(|i| seq[i] == seq[(i + d) % n]))
}

/// Exit half-edges of a closed immersed path with at most `max_len` steps.
fn sample_axis(g: &SphereGraph, rng: &mut ChaCha8Rng, max_len: usize) -> Option<Vec<HalfEdge>> {
    let start = *g.p_vertices().choose(rng)?;
    let first = *g.half_edges_at(start).choose(rng)?;
    let mut exits = vec![first];
    loop {
        let entry = exits.last().unwrap().opposite();
        let p = g.pants_of(entry)?;
        if p == start && entry != first && rng.gen_bool(0.6) {
            return (!is_proper_power(&exits)).then_some(exits);
        }
        if exits.len() >= max_len {
            return None;
        }
        let choices: Vec<HalfEdge> = g.half_edges_at(p).into_iter().filter(|&h| h != entry).collect();
        exits.push(*choices.choose(rng)?);
    }
}

fn random_region_trees(
    g: &SphereGraph,
    circles: &BTreeMap<CircleId, Circle>,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<SphereId, RegionTree> {
    let mut next = 0u32;
    let mut trees = BTreeMap::new();
    for s in g.sphere_ids() {
        let mut tree = RegionTree::single_region(RegionId(next));
        next += 1;
        for (&c, circle) in circles {
            if circle.sphere != s {
                continue;
            }
            let nodes: Vec<RegionId> = tree.nodes.iter().copied().collect();
            let at = *nodes.choose(rng).unwrap();
            let fresh = RegionId(next);
            next += 1;
            tree.nodes.insert(fresh);
            tree.edges.insert(c, if rng.gen() { [at, fresh] } else { [fresh, at] });
        }
        trees.insert(s, tree);
    }
    trees
}

/// A random normal torus on `g` with at most `size_bound` pieces: a closed
/// immersed axis with random trees attached, random leaf labels (disks get
/// opposite labels) and random per-piece frames.
pub fn random_normal_torus(g: &Arc<SphereGraph>, seed: u64, size_bound: usize) -> Result<TorusPosition, OracleError> {
    if size_bound < 2 {
        return Err(OracleError::SizeBound(size_bound));
    }
    g.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATOR_RETRIES {
        let Some(axis) = sample_axis(g, &mut rng, size_bound) else {
            continue;
        };
        let len = axis.len();
        let mut b = Builder {
            g,
            pieces: BTreeMap::new(),
            circles: BTreeMap::new(),
        };
        let ids: Vec<PieceId> = axis.iter().map(|&h| b.add_piece(g.pants_of(h).unwrap())).collect();
        for i in 0..len {
            b.glue(ids[i], axis[i], ids[(i + 1) % len]);
        }
        let mut budget = size_bound - len;
        for i in 0..len {
            let entry = axis[(i + len - 1) % len].opposite();
            let pants = b.pieces[&ids[i]].pants;
            let Some(third) = g.half_edges_at(pants).into_iter().find(|&h| h != entry && h != axis[i]) else {
                continue;
            };
            if budget >= 1 && rng.gen_bool(0.4) {
                b.grow(&mut rng, ids[i], third, &mut budget);
            } else {
                let side = random_side(&mut rng);
                b.label(ids[i], third, side);
            }
        }
        for p in b.pieces.values_mut() {
            p.boundary.sort();
        }
        let region_trees = random_region_trees(g, &b.circles, &mut rng);
        let side_transport = b.circles.keys().map(|&c| (c, true)).collect();
        let mut t = TorusPosition {
            graph: g.clone(),
            pieces: b.pieces,
            circles: b.circles,
            region_trees,
            side_transport,
        };
        let ids: Vec<PieceId> = t.pieces.keys().copied().collect();
        for pid in ids {
            if rng.gen() {
                flip_frame(&mut t, pid);
            }
        }
        if t.validate().is_empty() && t.is_normal().normal && t.nesting_violations().is_empty() {
            return Ok(t);
        }
    }
    Err(OracleError::GeneratorExhausted(GENERATOR_RETRIES))
}

// ---------------------------------------------------------------------------
// inverse moves

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbOptions {
    /// Probability that a step attempts an inverse Cap instead of an inverse Slide.
    pub cap_probability: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions { cap_probability: 0.0 }
    }
}

/// Split a circle in two. One side piece gains a circle; the other is cut
/// into two pieces, one on each new circle. Undone by a Slide.
fn inverse_slide(t: &TorusPosition, rng: &mut ChaCha8Rng) -> Option<TorusPosition> {
    let slots = t.circle_slots();
    let eligible: Vec<CircleId> = slots
        .iter()
        .filter(|(_, s)| s.len() == 2 && s[0].0 != s[1].0)
        .map(|(&c, _)| c)
        .collect();
    let c = *eligible.choose(rng)?;
    let mut pair = slots[&c].clone();
    pair.shuffle(rng);
    let (f, h) = pair[0];
    let (fp, hp) = pair[1];
    let sphere = h.sphere;

    let mut next = t.clone();
    let c2 = next.next_circle_id();
    let x2 = next.next_region_id();
    let fp2 = next.next_piece_id();

    // The cut piece must see every untouched sphere on the side facing the
    // region the two new circles will share; then both halves do too.
    let parent_sides: BTreeSet<Side> = t.pieces[&fp].uncrossed_sides.values().copied().collect();
    let ends = t.region_trees.get(&sphere)?.edges[&c];
    let i = match parent_sides.iter().next() {
        _ if parent_sides.len() > 1 => return None,
        Some(&side) => (0..2).find(|&i| t.facing_side(c, hp, ends[i]) == Some(side))?,
        None => rng.gen_range(0..2),
    };
    let (r, x) = (ends[i], ends[1 - i]);
    let sigma = t.facing_side(c, hp, r)?;
    let tree = next.region_trees.get_mut(&sphere)?;
    for other in tree.incident(x) {
        if other != c && rng.gen() {
            let e = tree.edges.get_mut(&other).unwrap();
            for end in e.iter_mut() {
                if *end == x {
                    *end = x2;
                }
            }
        }
    }
    tree.nodes.insert(x2);
    let mut split_ends = ends;
    split_ends[1 - i] = x2;
    tree.edges.insert(c2, split_ends);

    next.circles.insert(c2, Circle { sphere });
    let bit = next.side_transport[&c];
    next.side_transport.insert(c2, bit);

    let fpiece = next.pieces.get_mut(&f)?;
    fpiece.boundary.push(BoundarySlot {
        circle: c2,
        half_edge: h,
    });
    fpiece.boundary.sort();

    let parent = next.pieces.remove(&fp)?;
    let mut keep = vec![BoundarySlot {
        circle: c,
        half_edge: hp,
    }];
    let mut split = vec![BoundarySlot {
        circle: c2,
        half_edge: hp,
    }];
    for &b in &parent.boundary {
        if b.circle == c && b.half_edge == hp {
            continue;
        }
        if rng.gen() {
            split.push(b);
        } else {
            keep.push(b);
        }
    }
    let g1 = rng.gen_range(0..=parent.genus);
    let make = |boundary: Vec<BoundarySlot>, genus: u32| {
        let mut p = Piece {
            pants: parent.pants,
            genus,
            boundary,
            uncrossed_sides: BTreeMap::new(),
        };
        p.boundary.sort();
        let crossed = p.crossed_half_edges();
        for h2 in t.graph.half_edges_at(parent.pants) {
            if !crossed.contains(&h2) {
                p.uncrossed_sides.insert(h2, sigma);
            }
        }
        p
    };
    next.pieces.insert(fp, make(keep, g1));
    next.pieces.insert(fp2, make(split, parent.genus - g1));
    Some(next)
}

/// Whether region `r` of the untouched half-edge `h` of piece `f` lies in
/// the chamber next to `f`: no other piece of the pants separates them.
fn reachable_from(t: &TorusPosition, f: PieceId, h: HalfEdge, r: RegionId) -> bool {
    let piece = &t.pieces[&f];
    let Some(anchor) = piece.boundary.first() else {
        return false;
    };
    let Some(ends) = t
        .region_trees
        .get(&anchor.half_edge.sphere)
        .and_then(|tr| tr.edges.get(&anchor.circle))
    else {
        return false;
    };
    t.pieces
        .iter()
        .filter(|(&g, p)| g != f && p.pants == piece.pants)
        .all(|(&g, _)| {
            let of_f = t.side_of(g, anchor.half_edge, ends[0]);
            of_f.is_some() && of_f == t.side_of(g, h, r)
        })
}

/// Push a piece across one of its untouched spheres: it gains a circle
/// bounding a new boundary-parallel disk on the far side. Undone by a Cap.
fn inverse_cap(t: &TorusPosition, rng: &mut ChaCha8Rng) -> Option<TorusPosition> {
    let options: Vec<(PieceId, HalfEdge)> = t
        .pieces
        .iter()
        .flat_map(|(&p, piece)| piece.uncrossed_sides.keys().map(move |&h| (p, h)))
        .collect();
    let (pid, h) = *options.choose(rng)?;
    let mut next = t.clone();
    let c = next.next_circle_id();
    let r2 = next.next_region_id();
    let d = next.next_piece_id();
    let bit: bool = rng.gen();

    let far = h.opposite();
    // F faces the finger tip with the side away from the sphere, and so does
    // the disk with its ball side
    let disk_side = t.pieces[&pid].uncrossed_sides.get(&h)?.transport(bit);
    // the new leaf region r2 closes off the ball on the disk's far side
    let end0_faces_ball = if far.end == 0 {
        disk_side.flip() == Side::A
    } else {
        Side::A.transport(bit) == disk_side.flip()
    };
    // the finger enters the sphere through a region no other piece separates from F
    let nodes: Vec<RegionId> = t
        .region_trees
        .get(&h.sphere)?
        .nodes
        .iter()
        .copied()
        .filter(|&r| reachable_from(t, pid, h, r))
        .collect();
    let r = *nodes.choose(rng)?;
    let tree = next.region_trees.get_mut(&h.sphere)?;
    tree.nodes.insert(r2);
    tree.edges.insert(c, if end0_faces_ball { [r2, r] } else { [r, r2] });
    next.circles.insert(c, Circle { sphere: h.sphere });
    next.side_transport.insert(c, bit);

    let piece = next.pieces.get_mut(&pid)?;
    piece.uncrossed_sides.remove(&h)?;
    piece.boundary.push(BoundarySlot {
        circle: c,
        half_edge: h,
    });
    piece.boundary.sort();

    let pants = t.graph.pants_of(far)?;
    let disk = Piece {
        pants,
        genus: 0,
        boundary: vec![BoundarySlot {
            circle: c,
            half_edge: far,
        }],
        uncrossed_sides: t
            .graph
            .half_edges_at(pants)
            .into_iter()
            .filter(|&x| x != far)
            .map(|x| (x, disk_side))
            .collect(),
    };
    next.pieces.insert(d, disk);
    Some(next)
}

/// Apply `k` random inverse Slides.
pub fn perturb(t: &TorusPosition, seed: u64, k: usize) -> Result<TorusPosition, OracleError> {
    perturb_with(t, seed, k, PerturbOptions::default())
}

/// Apply `k` random inverse moves. Candidates breaking validity or planar
/// parity, or adding a pair of pieces that cannot be disjoint, are redrawn.
pub fn perturb_with(
    t: &TorusPosition,
    seed: u64,
    k: usize,
    opts: PerturbOptions,
) -> Result<TorusPosition, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = t.clone();
    for step in 0..k {
        let mut accepted = None;
        let tangles = cur.nesting_violations().len();
        for _ in 0..PERTURB_RETRIES {
            let cap = opts.cap_probability > 0.0 && rng.gen_bool(opts.cap_probability.min(1.0));
            let candidate = if cap {
                inverse_cap(&cur, &mut rng)
            } else {
                inverse_slide(&cur, &mut rng)
            };
            if let Some(c) = candidate {
                if c.validate().is_empty()
                    && c.parity_violations().is_empty()
                    && c.nesting_violations().len() <= tangles
                {
                    accepted = Some(c);
                    break;
                }
            }
        }
        cur = accepted.ok_or(OracleError::NoInverseMove(step))?;
    }
    Ok(cur)
}

/// Random renaming of pieces, circles and regions.
pub fn relabel(t: &TorusPosition, seed: u64) -> TorusPosition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = |n: usize| {
        let mut v: Vec<u32> = (0..n as u32).collect();
        v.shuffle(&mut rng);
        v
    };
    let piece_map: BTreeMap<PieceId, PieceId> = t
        .pieces
        .keys()
        .copied()
        .zip(perm(t.pieces.len()).into_iter().map(PieceId))
        .collect();
    let circle_map: BTreeMap<CircleId, CircleId> = t
        .circles
        .keys()
        .copied()
        .zip(perm(t.circles.len()).into_iter().map(CircleId))
        .collect();
    let regions: BTreeSet<RegionId> = t.region_trees.values().flat_map(|r| r.nodes.iter().copied()).collect();
    let region_map: BTreeMap<RegionId, RegionId> = regions
        .iter()
        .copied()
        .zip(perm(regions.len()).into_iter().map(RegionId))
        .collect();

    let pieces = t
        .pieces
        .iter()
        .map(|(id, p)| {
            let mut q = p.clone();
            for b in &mut q.boundary {
                b.circle = circle_map[&b.circle];
            }
            q.boundary.sort();
            (piece_map[id], q)
        })
        .collect();
    let region_trees = t
        .region_trees
        .iter()
        .map(|(&s, tree)| {
            let nodes = tree.nodes.iter().map(|r| region_map[r]).collect();
            let edges = tree
                .edges
                .iter()
                .map(|(c, e)| (circle_map[c], [region_map[&e[0]], region_map[&e[1]]]))
                .collect();
            (s, RegionTree { nodes, edges })
        })
        .collect();
    TorusPosition {
        graph: t.graph.clone(),
        pieces,
        circles: t.circles.iter().map(|(c, x)| (circle_map[c], *x)).collect(),
        region_trees,
        side_transport: t.side_transport.iter().map(|(c, b)| (circle_map[c], *b)).collect(),
    }
}

// ---------------------------------------------------------------------------
// confluence

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfluenceReport {
    /// Every terminal position is normal and all share one canonical form.
    pub confluent: bool,
    pub outcomes: BTreeSet<CanonicalForm>,
    pub states: usize,
    pub terminals: usize,
    /// Violations of terminal positions that are not normal.
    pub stuck: Vec<String>,
}

fn state_key(t: &TorusPosition) -> String {
    serde_json::to_string(&(&t.pieces, &t.circles, &t.region_trees, &t.side_transport)).expect("serializable")
}

/// Canonical form of a normal position, decorated from its least piece.
pub fn canonical_form(t: &TorusPosition) -> Result<CanonicalForm, NormalGraphError> {
    Ok(decorate_default(&NormalTorus::from_position(t)?)?.canonicalize())
}

fn decorate_default(nt: &NormalTorus) -> Result<DecoratedGraph, NormalGraphError> {
    let base = *nt
        .nodes
        .keys()
        .next()
        .ok_or_else(|| NormalGraphError::Invalid(vec!["no nodes".into()]))?;
    nt.decorate(base, Side::A)
}

pub fn confluence_search(t: &TorusPosition, bound: usize) -> Result<ConfluenceReport, OracleError> {
    confluence_search_with(t, bound, DEFAULT_MAX_STATES)
}

/// Breadth-first exploration of every maximal move sequence from `t`.
pub fn confluence_search_with(
    t: &TorusPosition,
    bound: usize,
    max_states: usize,
) -> Result<ConfluenceReport, OracleError> {
    let count = t.total_intersection();
    if count > bound {
        return Err(OracleError::TooLarge { count, bound });
    }
    let diags = t.validate();
    if !diags.is_empty() {
        return Err(NormalizeError::Invalid(diags).into());
    }
    let mut seen = BTreeSet::from([state_key(t)]);
    let mut queue = VecDeque::from([t.clone()]);
    let mut outcomes = BTreeSet::new();
    let mut stuck = Vec::new();
    let mut terminals = 0;
    while let Some(cur) = queue.pop_front() {
        let moves = find_moves(&cur);
        if moves.is_empty() {
            terminals += 1;
            let check = cur.is_normal();
            if check.normal {
                outcomes.insert(canonical_form(&cur)?);
            } else {
                stuck.push(check.violations.join("; "));
            }
            continue;
        }
        for m in moves {
            let next = apply_move(&cur, m)?;
            if seen.insert(state_key(&next)) {
                if seen.len() > max_states {
                    return Err(OracleError::StateOverflow(max_states));
                }
                queue.push_back(next);
            }
        }
    }
    Ok(ConfluenceReport {
        confluent: stuck.is_empty() && outcomes.len() == 1,
        outcomes,
        states: seen.len(),
        terminals,
        stuck,
    })
}

// ---------------------------------------------------------------------------
// fuzzing

/// Property a failed trial violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// Generator or perturbation failed.
    Setup,
    Monotone,
    Stuck,
    Idempotence,
    Confluence,
    Minimality,
    RoundTrip,
    SolidTorus,
    Decoration,
    Structure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub k: usize,
    pub property: Property,
    pub message: String,
    pub counterexample: Option<TorusPosition>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: usize,
    /// Total circle count of each perturbed instance.
    pub sizes: Vec<usize>,
    pub traces: Vec<Vec<TraceStep>>,
    pub failures: Vec<Failure>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failures_of(&self, property: Property) -> impl Iterator<Item = &Failure> {
        self.failures.iter().filter(move |f| f.property == property)
    }

    pub fn summary(&self) -> String {
        let mut by: BTreeMap<Property, usize> = BTreeMap::new();
        for f in &self.failures {
            *by.entry(f.property).or_default() += 1;
        }
        let steps: usize = self.traces.iter().map(Vec::len).sum();
        let max = self.sizes.iter().max().copied().unwrap_or(0);
        let mut s = format!(
            "seed {} trials {} moves {} max-circles {} failures {}",
            self.seed,
            self.trials,
            steps,
            max,
            self.failures.len()
        );
        for (p, n) in by {
            s.push_str(&format!(" {p:?}={n}"));
        }
        s
    }

    fn merge(seed: u64, trials: Vec<Trial>) -> FuzzReport {
        let mut r = FuzzReport {
            seed,
            trials: trials.len(),
            sizes: Vec::new(),
            traces: Vec::new(),
            failures: Vec::new(),
        };
        for t in trials {
            r.sizes.push(t.size);
            r.traces.push(t.trace);
            r.failures.extend(t.failures);
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: usize,
    pub rank: u32,
    /// Perturbation depth drawn uniformly from 0..=max_k.
    pub max_k: usize,
    /// Piece bound for the random normal tori.
    pub size_bound: usize,
    pub perturb: PerturbOptions,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            trials: 100,
            rank: 2,
            max_k: 8,
            size_bound: 8,
            perturb: PerturbOptions { cap_probability: 0.25 },
        }
    }
}

struct Trial {
    size: usize,
    trace: Vec<TraceStep>,
    failures: Vec<Failure>,
}

struct Recorder {
    seed: u64,
    k: usize,
    failures: Vec<Failure>,
}

impl Recorder {
    fn fail(&mut self, property: Property, message: impl Into<String>, t: Option<&TorusPosition>) {
        self.failures.push(Failure {
            seed: self.seed,
            k: self.k,
            property,
            message: message.into(),
            counterexample: t.cloned(),
        });
    }
}

fn is_cyclically_reduced(w: &[i32]) -> bool {
    !w.is_empty() && w.windows(2).all(|p| p[0] != -p[1]) && (w.len() == 1 || w[0] != -w[w.len() - 1])
}

fn check_structure(rec: &mut Recorder, nt: &NormalTorus, lab: &GeneratorLabeling, t: &TorusPosition) {
    let diags = nt.validate();
    if !diags.is_empty() {
        rec.fail(Property::Structure, diags.join("; "), Some(t));
    }
    let [disks, _, pants] = nt.count_by_type();
    if disks != pants {
        rec.fail(Property::Structure, format!("{disks} disks but {pants} pants"), Some(t));
    }
    match nt.axis_word(lab) {
        Ok(w) if is_cyclically_reduced(&w.letters) => {}
        Ok(w) => rec.fail(
            Property::Structure,
            format!("axis word {w} not cyclically reduced"),
            Some(t),
        ),
        Err(e) => rec.fail(Property::Structure, e.to_string(), Some(t)),
    }
}

/// Decoration laws on one decorated graph; returns its canonical form.
fn check_decoration(rec: &mut Recorder, d: &DecoratedGraph, t: &TorusPosition, seed: u64) -> CanonicalForm {
    let diags = d.validate();
    if !diags.is_empty() {
        rec.fail(Property::Decoration, diags.join("; "), Some(t));
    }
    let canon = d.canonicalize();
    if d.flipped().canonicalize() != canon {
        rec.fail(Property::Decoration, "global flip changed the canonical form", Some(t));
    }
    match canonical_form(&relabel(t, seed)) {
        Ok(c) if c == canon => {}
        Ok(_) => rec.fail(Property::Decoration, "relabeling changed the canonical form", Some(t)),
        Err(e) => rec.fail(Property::Decoration, format!("relabeled position: {e}"), Some(t)),
    }
    let (plus, minus) = d.sides();
    let one_side = plus.is_empty() || minus.is_empty();
    let signs: BTreeSet<Sign> = d.signs.iter().map(|s| s.sign).collect();
    if d.bounds_solid_torus() != one_side || one_side != (signs.len() <= 1) {
        rec.fail(
            Property::Decoration,
            "solid-torus criterion disagrees with the sign partition",
            Some(t),
        );
    }
    canon
}

/// Run every check on a normal torus `nt` and a perturbation `perturbed` of
/// it by `k` inverse moves.
fn check_instance(seed: u64, k: usize, nt: &TorusPosition, perturbed: &TorusPosition) -> Trial {
    let mut rec = Recorder {
        seed,
        k,
        failures: Vec::new(),
    };
    let size = perturbed.total_intersection();
    let lab = label_generators(&nt.graph);

    for (t, what) in [(nt, "seed torus"), (perturbed, "perturbed position")] {
        let diags = t.validate();
        if !diags.is_empty() {
            rec.fail(Property::Structure, format!("{what}: {}", diags.join("; ")), Some(t));
        }
    }
    if perturbed.total_intersection() != nt.total_intersection() + k {
        rec.fail(
            Property::Setup,
            "perturbation did not add one circle per move",
            Some(perturbed),
        );
    }

    let base = match NormalTorus::from_position(nt) {
        Ok(n) => n,
        Err(e) => {
            rec.fail(Property::Setup, format!("seed torus: {e}"), Some(nt));
            return Trial {
                size,
                trace: Vec::new(),
                failures: rec.failures,
            };
        }
    };
    check_structure(&mut rec, &base, &lab, nt);
    let base_dec = match decorate_default(&base) {
        Ok(d) => d,
        Err(e) => {
            rec.fail(Property::Decoration, e.to_string(), Some(nt));
            return Trial {
                size,
                trace: Vec::new(),
                failures: rec.failures,
            };
        }
    };
    let base_canon = check_decoration(&mut rec, &base_dec, nt, seed);

    match normalize(nt) {
        Ok(n) if n.trace.is_empty() && &n.position == nt => {}
        Ok(n) => rec.fail(
            Property::Idempotence,
            format!("{} moves on a normal torus", n.trace.len()),
            Some(nt),
        ),
        Err(e) => rec.fail(Property::Idempotence, e.to_string(), Some(nt)),
    }

    let result = match normalize(perturbed) {
        Ok(n) => n,
        Err(e) => {
            let property = match e {
                NormalizeError::StuckNonNormal { .. } => Property::Stuck,
                NormalizeError::NotMonotone(_) => Property::Monotone,
                _ => Property::Structure,
            };
            rec.fail(property, e.to_string(), Some(perturbed));
            return Trial {
                size,
                trace: Vec::new(),
                failures: rec.failures,
            };
        }
    };

    let mut state = perturbed.clone();
    for step in &result.trace {
        let total_before: usize = step.before.values().sum();
        let total_after: usize = step.after.values().sum();
        if total_after + 1 != total_before || step.after.iter().any(|(s, n)| *n > step.before[s]) {
            rec.fail(Property::Monotone, format!("step {step}"), Some(perturbed));
        }
        match apply_move(&state, step.mv) {
            Ok(next) => state = next,
            Err(e) => {
                rec.fail(Property::Structure, format!("replay: {e}"), Some(perturbed));
                break;
            }
        }
        if state.intersection_vector() != step.after {
            rec.fail(
                Property::Monotone,
                format!("trace counts disagree with replay at {step}"),
                Some(perturbed),
            );
        }
        let diags = state.validate();
        if !diags.is_empty() {
            rec.fail(
                Property::Structure,
                format!("after {}: {}", step.mv, diags.join("; ")),
                Some(perturbed),
            );
        }
    }

    let final_counts = result.position.intersection_vector();
    let start_counts = perturbed.intersection_vector();
    if final_counts != nt.intersection_vector() || final_counts.iter().any(|(s, n)| *n > start_counts[s]) {
        rec.fail(
            Property::Minimality,
            format!(
                "normal form counts {final_counts:?} vs seed torus {:?}",
                nt.intersection_vector()
            ),
            Some(perturbed),
        );
    }
    if result.trace.len() != k {
        rec.fail(
            Property::Minimality,
            format!("trace length {} for {k} inverse moves", result.trace.len()),
            Some(perturbed),
        );
    }

    check_structure(&mut rec, &result.normal_torus, &lab, perturbed);
    match decorate_default(&result.normal_torus) {
        Ok(d) => {
            let canon = check_decoration(&mut rec, &d, &result.position, seed);
            if canon != base_canon {
                rec.fail(Property::RoundTrip, format!("{canon} vs {base_canon}"), Some(perturbed));
            }
            if d.bounds_solid_torus() != base_dec.bounds_solid_torus() {
                rec.fail(
                    Property::SolidTorus,
                    "bounds_solid_torus changed along the round trip",
                    Some(perturbed),
                );
            }
        }
        Err(e) => rec.fail(Property::Decoration, e.to_string(), Some(perturbed)),
    }
    Trial {
        size,
        trace: result.trace,
        failures: rec.failures,
    }
}

fn setup_failure(seed: u64, k: usize, e: OracleError) -> Trial {
    Trial {
        size: 0,
        trace: Vec::new(),
        failures: vec![Failure {
            seed,
            k,
            property: Property::Setup,
            message: e.to_string(),
            counterexample: None,
        }],
    }
}

fn trial_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Per-trial random graph of the configured rank, random normal torus,
/// random perturbation depth, full round-trip checks.
pub fn fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(cfg.seed, i);
            let k = ChaCha8Rng::seed_from_u64(s ^ 0x5eed).gen_range(0..=cfg.max_k);
            let setup = random_cubic(cfg.rank, s)
                .map_err(OracleError::from)
                .and_then(|g| random_normal_torus(&Arc::new(g), s, cfg.size_bound))
                .and_then(|nt| perturb_with(&nt, s, k, cfg.perturb).map(|p| (nt, p)));
            match setup {
                Ok((nt, p)) => check_instance(s, k, &nt, &p),
                Err(e) => setup_failure(s, k, e),
            }
        })
        .collect();
    FuzzReport::merge(cfg.seed, trials)
}

/// Perturb a fixed normal torus `trials` times by `k` inverse Slides and
/// check the normal form recovers its per-sphere counts.
pub fn minimality_experiment(nt: &TorusPosition, trials: usize, k: usize, seed: u64) -> FuzzReport {
    minimality_experiment_with(nt, trials, k, seed, PerturbOptions::default())
}

/// As [`minimality_experiment`], with inverse Caps mixed in. Some normal tori
/// admit no inverse Slide at all.
pub fn minimality_experiment_with(
    nt: &TorusPosition,
    trials: usize,
    k: usize,
    seed: u64,
    opts: PerturbOptions,
) -> FuzzReport {
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            match perturb_with(nt, s, k, opts) {
                Ok(p) => check_instance(s, k, nt, &p),
                Err(e) => setup_failure(s, k, e),
            }
        })
        .collect();
    FuzzReport::merge(seed, results)
}

/// Exhaustive confluence search on random normal tori perturbed up to the
/// circle bound.
pub fn confluence_fuzz(cfg: &FuzzConfig, bound: usize) -> FuzzReport {
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(cfg.seed, i);
            let setup = random_cubic(cfg.rank, s)
                .map_err(OracleError::from)
                .and_then(|g| random_normal_torus(&Arc::new(g), s, cfg.size_bound));
            let nt = match setup {
                Ok(nt) => nt,
                Err(e) => return setup_failure(s, 0, e),
            };
            let room = bound.saturating_sub(nt.total_intersection());
            let k = ChaCha8Rng::seed_from_u64(s ^ 0x5eed).gen_range(0..=cfg.max_k.min(room));
            let p = match perturb_with(&nt, s, k, cfg.perturb) {
                Ok(p) => p,
                Err(e) => return setup_failure(s, k, e),
            };
            let mut rec = Recorder {
                seed: s,
                k,
                failures: Vec::new(),
            };
            let want = canonical_form(&nt);
            match (confluence_search(&p, bound), want) {
                (Ok(r), Ok(want)) => {
                    if !r.confluent || !r.outcomes.contains(&want) {
                        let outcomes: Vec<String> = r.outcomes.iter().map(ToString::to_string).collect();
                        rec.fail(
                            Property::Confluence,
                            format!(
                                "{} outcomes [{}], stuck {:?}",
                                r.outcomes.len(),
                                outcomes.join(", "),
                                r.stuck
                            ),
                            Some(&p),
                        );
                    }
                }
                (Err(e), _) => rec.fail(Property::Confluence, e.to_string(), Some(&p)),
                (_, Err(e)) => rec.fail(Property::Setup, e.to_string(), Some(&nt)),
            }
            Trial {
                size: p.total_intersection(),
                trace: Vec::new(),
                failures: rec.failures,
            }
        })
        .collect();
    FuzzReport::merge(cfg.seed, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::build_standard;

    #[test]
    fn random_tori_are_normal_and_reproducible() {
        for n in 2..=4 {
            let g = Arc::new(random_cubic(n, 7).unwrap());
            for seed in 0..50 {
                let t = random_normal_torus(&g, seed, 8).unwrap();
                assert!(t.validate().is_empty());
                assert!(t.is_normal().normal);
                assert!(t.pieces.len() <= 8);
                assert!(t.nesting_violations().is_empty());
                assert_eq!(t, random_normal_torus(&g, seed, 8).unwrap());
            }
        }
    }

    #[test]
    fn perturbation_keeps_pieces_disjoint() {
        let g = Arc::new(random_cubic(3, 1).unwrap());
        for seed in 0..40 {
            let t = random_normal_torus(&g, seed, 8).unwrap();
            let p = perturb_with(&t, seed, 6, PerturbOptions { cap_probability: 0.5 }).unwrap();
            assert!(p.nesting_violations().is_empty(), "seed {seed}");
        }
        let t2 = crate::fixtures::t2();
        for seed in 0..20 {
            assert!(perturb(&t2, seed, 4).unwrap().nesting_violations().len() <= 1);
        }
    }

    #[test]
    fn smallest_random_torus_is_two_cylinders() {
        let g = fixtures::theta();
        for seed in 0..20 {
            let t = random_normal_torus(&g, seed, 2).unwrap();
            assert_eq!(t.pieces.len(), 2);
            assert!(t.pieces.values().all(|p| p.boundary.len() == 2));
        }
    }

    #[test]
    fn size_bound_below_two_is_rejected() {
        assert!(matches!(
            random_normal_torus(&fixtures::theta(), 0, 1),
            Err(OracleError::SizeBound(1))
        ));
    }

    #[test]
    fn proper_powers_detected() {
        let a = HalfEdge::new(SphereId(0), 0);
        let b = HalfEdge::new(SphereId(1), 1);
        assert!(is_proper_power(&[a, b, a, b]));
        assert!(!is_proper_power(&[a, b, b]));
        assert!(!is_proper_power(&[a]));
    }

    #[test]
    fn one_inverse_slide_on_t0_is_t1_shaped() {
        let t = perturb(&fixtures::t0(), 0, 1).unwrap();
        assert_eq!(t.total_intersection(), 3);
        assert_eq!(t.pieces.len(), 3);
        let mut shapes: Vec<usize> = t.pieces.values().map(|p| p.boundary.len()).collect();
        shapes.sort();
        assert_eq!(shapes, vec![1, 2, 3]);
        let moves = find_moves(&t);
        assert!(moves.iter().any(|m| matches!(m, crate::normalize::Move::Slide { .. })));
        assert_eq!(apply_move(&t, moves[0]).unwrap(), fixtures::t0());
    }

    #[test]
    fn perturb_adds_k_circles() {
        for seed in 0..20 {
            let t = perturb(&fixtures::t0(), seed, 3).unwrap();
            assert_eq!(t.total_intersection(), 5);
            assert!(t.validate().is_empty());
        }
        assert_eq!(perturb(&fixtures::t0(), 1, 0).unwrap(), fixtures::t0());
    }

    #[test]
    fn inverse_cap_is_undone_by_cap() {
        let opts = PerturbOptions { cap_probability: 1.0 };
        for seed in 0..20 {
            let t = perturb_with(&fixtures::t0(), seed, 1, opts).unwrap();
            let moves = find_moves(&t);
            assert_eq!(moves.len(), 1, "{moves:?}");
            assert_eq!(apply_move(&t, moves[0]).unwrap(), fixtures::t0());
        }
    }

    #[test]
    fn confluence_on_fixtures() {
        let r = confluence_search(&fixtures::t1(), DEFAULT_CONFLUENCE_BOUND).unwrap();
        assert!(r.confluent);
        assert_eq!(r.outcomes.len(), 1);
        let r = confluence_search(&fixtures::t0(), DEFAULT_CONFLUENCE_BOUND).unwrap();
        assert!(r.confluent && r.states == 1 && r.terminals == 1);
        for seed in 0..20 {
            let p = perturb(&fixtures::t0(), seed, 2).unwrap();
            let r = confluence_search(&p, DEFAULT_CONFLUENCE_BOUND).unwrap();
            assert!(r.confluent, "{seed}: {r:?}");
            assert!(r.outcomes.contains(&canonical_form(&fixtures::t0()).unwrap()));
        }
    }

    #[test]
    fn confluence_bound_enforced() {
        let p = perturb(&fixtures::t0(), 0, 5).unwrap();
        assert!(matches!(
            confluence_search(&p, 4),
            Err(OracleError::TooLarge { count: 7, bound: 4 })
        ));
        assert!(matches!(
            confluence_search_with(&p, 12, 1),
            Err(OracleError::StateOverflow(1))
        ));
    }

    #[test]
    fn stuck_terminal_breaks_confluence() {
        let r = confluence_search(&fixtures::double_cylinder(), DEFAULT_CONFLUENCE_BOUND).unwrap();
        assert!(!r.confluent);
        assert!(!r.stuck.is_empty());
    }

    #[test]
    fn relabeling_keeps_validity_and_form() {
        let t = fixtures::t2();
        for seed in 0..10 {
            let r = relabel(&t, seed);
            assert!(r.validate().is_empty());
            assert_eq!(canonical_form(&r).unwrap(), canonical_form(&t).unwrap());
        }
    }

    #[test]
    fn minimality_on_fixtures() {
        for t in [fixtures::t0(), fixtures::t2()] {
            for k in 0..=5 {
                let r = minimality_experiment(&t, 30, k, 11);
                assert!(r.passed(), "k={k}: {:?}", r.failures.first());
            }
        }
    }

    #[test]
    fn small_fuzz_run_passes() {
        let cfg = FuzzConfig {
            trials: 60,
            ..FuzzConfig::default()
        };
        let r = fuzz(&cfg);
        assert!(
            r.passed(),
            "{}\n{:?}",
            r.summary(),
            r.failures.first().map(|f| (&f.property, &f.message, f.seed))
        );
        assert_eq!(r.sizes.len(), 60);
        assert_eq!(fuzz(&cfg), r);
    }

    #[test]
    fn standard_graph_fuzz() {
        let g = Arc::new(build_standard(3).unwrap());
        let nt = random_normal_torus(&g, 3, 6).unwrap();
        let r = minimality_experiment(&nt, 40, 4, 0);
        assert!(r.passed(), "{:?}", r.failures.first());
    }
}
