//! The dual graph of a normal torus and its decoration.
//!
//! Each piece of a normal torus becomes a Y-node over its pants: a disk is
//! type 1 (one crossing, two leaves), a cylinder type 2 (two crossings, one
//! leaf), a pants piece type 3 (three crossings). The node/crossing graph is
//! connected with first Betti number one and immerses into the sphere graph,
//! so the cover picture is recovered by path lifting and never built.
//!
//! A decoration signs every leaf by the side of the torus its sphere lies on,
//! relative to a transverse orientation fixed at a base piece. Two decorated
//! graphs are equivalent when they agree up to an isomorphism over the sphere
//! graph, a global sign flip and reversal of the axis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GeneratorLabeling, SphereGraph};
use crate::ids::{CircleId, HalfEdge, PVertex, PieceId, Side, SphereId};
use crate::position::{PieceKind, TorusPosition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalGraphError {
    #[error("position is not normal: {}", .0.join("; "))]
    NotNormal(Vec<String>),
    #[error("invalid normal torus: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("nontrivial side-transport monodromy on cycle ({}) (Klein bottle)", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))]
    KleinBottle(Vec<PieceId>),
    #[error("unknown base piece {0}")]
    UnknownBase(PieceId),
    #[error("decorated graphs live over different sphere graphs")]
    DifferentGraphs,
    #[error("axis word is trivial")]
    TrivialAxis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YNode {
    pub pants: PVertex,
    pub kind: PieceKind,
}

impl YNode {
    /// 1, 2 or 3: the number of boundary spheres the piece crosses.
    pub fn y_type(&self) -> u8 {
        match self.kind {
            PieceKind::Disk => 1,
            PieceKind::Cylinder => 2,
            PieceKind::Pants => 3,
        }
    }
}

/// A circle seen as an edge between the nodes at its two sphere ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub sphere: SphereId,
    /// Node at sphere end 0 and end 1.
    pub ends: [PieceId; 2],
    pub transport: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Leaf {
    pub piece: PieceId,
    pub half_edge: HalfEdge,
    pub label: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stub {
    Leaf(Side),
    Cross(CircleId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalTorus {
    pub graph: Arc<SphereGraph>,
    pub nodes: BTreeMap<PieceId, YNode>,
    pub crossings: BTreeMap<CircleId, Crossing>,
    pub leaves: Vec<Leaf>,
}

impl NormalTorus {
    pub fn from_position(t: &TorusPosition) -> Result<Self, NormalGraphError> {
        let diags = t.validate();
        if !diags.is_empty() {
            return Err(NormalGraphError::Invalid(diags));
        }
        let check = t.is_normal();
        if !check.normal {
            return Err(NormalGraphError::NotNormal(check.violations));
        }
        let mut nodes = BTreeMap::new();
        let mut leaves = Vec::new();
        for (&pid, piece) in &t.pieces {
            let kind = t.normal_kind(piece).ok_or_else(|| {
                NormalGraphError::NotNormal(vec![format!("piece {pid} is not a disk, cylinder or pants")])
            })?;
            nodes.insert(
                pid,
                YNode {
                    pants: piece.pants,
                    kind,
                },
            );
            for (&h, &label) in &piece.uncrossed_sides {
                leaves.push(Leaf {
                    piece: pid,
                    half_edge: h,
                    label,
                });
            }
        }
        leaves.sort();
        let mut crossings = BTreeMap::new();
        for (c, slots) in t.circle_slots() {
            let mut ends = [slots[0].0, slots[1].0];
            if slots[0].1.end == 1 {
                ends.swap(0, 1);
            }
            crossings.insert(
                c,
                Crossing {
                    sphere: t.circles[&c].sphere,
                    ends,
                    transport: t.side_transport[&c],
                },
            );
        }
        let nt = NormalTorus {
            graph: t.graph.clone(),
            nodes,
            crossings,
            leaves,
        };
        let diags = nt.validate();
        if diags.is_empty() {
            Ok(nt)
        } else {
            Err(NormalGraphError::Invalid(diags))
        }
    }

    fn stubs(&self, n: PieceId) -> BTreeMap<HalfEdge, Stub> {
        let mut out = BTreeMap::new();
        for (&c, x) in &self.crossings {
            for end in 0..2u8 {
                if x.ends[end as usize] == n {
                    out.insert(HalfEdge::new(x.sphere, end), Stub::Cross(c));
                }
            }
        }
        for l in self.leaves.iter().filter(|l| l.piece == n) {
            out.insert(l.half_edge, Stub::Leaf(l.label));
        }
        out
    }

    fn degree(&self, n: PieceId) -> usize {
        self.crossings
            .values()
            .map(|x| x.ends.iter().filter(|&&e| e == n).count())
            .sum()
    }

    pub fn count_by_type(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for node in self.nodes.values() {
            out[node.y_type() as usize - 1] += 1;
        }
        out
    }

    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let g = &*self.graph;
        let mut stub_count: BTreeMap<(PieceId, HalfEdge), usize> = BTreeMap::new();
        for (c, x) in &self.crossings {
            for end in 0..2u8 {
                let n = x.ends[end as usize];
                let h = HalfEdge::new(x.sphere, end);
                match self.nodes.get(&n) {
                    None => diags.push(format!("crossing {c} ends at unknown node {n}")),
                    Some(node) if g.pants_of(h) != Some(node.pants) => diags.push(format!(
                        "crossing {c} maps end {end} of {} to node {n} over {}",
                        x.sphere, node.pants
                    )),
                    Some(_) => *stub_count.entry((n, h)).or_default() += 1,
                }
            }
        }
        for l in &self.leaves {
            *stub_count.entry((l.piece, l.half_edge)).or_default() += 1;
        }
        for (&n, node) in &self.nodes {
            let expected: BTreeSet<HalfEdge> = g.half_edges_at(node.pants).into_iter().collect();
            for h in &expected {
                match stub_count.get(&(n, *h)).copied().unwrap_or(0) {
                    1 => {}
                    k => diags.push(format!("node {n} uses half-edge {h} {k} times (not an immersion)")),
                }
            }
            let degree = self.degree(n);
            if degree != node.y_type() as usize {
                diags.push(format!("node {n} of kind {:?} has {degree} crossings", node.kind));
            }
            if node.kind == PieceKind::Disk {
                let labels: BTreeSet<Side> = self.leaves.iter().filter(|l| l.piece == n).map(|l| l.label).collect();
                if labels.len() != 2 {
                    diags.push(format!("disk node {n} is boundary-parallel"));
                }
            }
        }
        let edges: Vec<(CircleId, PieceId, PieceId)> =
            self.crossings.iter().map(|(&c, x)| (c, x.ends[0], x.ends[1])).collect();
        if crate::position::count_components(self.nodes.keys().copied(), &edges) != 1 {
            diags.push("node graph disconnected".to_string());
        }
        let betti = self.crossings.len() as i64 - self.nodes.len() as i64 + 1;
        if betti != 1 {
            diags.push(format!("node graph has first Betti number {betti} (expected 1)"));
        }
        let [t1, _, t3] = self.count_by_type();
        if t1 != t3 {
            diags.push(format!("{t1} type-1 nodes but {t3} type-3 nodes"));
        }
        diags
    }

    /// Nodes on the unique cycle, found by pruning hanging trees.
    fn core(&self) -> BTreeSet<PieceId> {
        let mut alive: BTreeSet<PieceId> = self.nodes.keys().copied().collect();
        loop {
            let prune: Vec<PieceId> = alive
                .iter()
                .copied()
                .filter(|&n| {
                    self.crossings
                        .values()
                        .map(|x| {
                            x.ends.iter().filter(|&&e| e == n).count()
                                * usize::from(x.ends.iter().all(|e| alive.contains(e)))
                        })
                        .sum::<usize>()
                        <= 1
                })
                .collect();
            if prune.is_empty() {
                return alive;
            }
            for n in prune {
                alive.remove(&n);
            }
        }
    }

    /// The axis as (node, entry half-edge, exit half-edge), starting at the
    /// least node and leaving through its lesser core half-edge.
    fn cycle(&self) -> Vec<(PieceId, HalfEdge, HalfEdge)> {
        let core = self.core();
        let Some(&start) = core.iter().next() else {
            return Vec::new();
        };
        let core_stubs = |n: PieceId| -> Vec<HalfEdge> {
            self.stubs(n)
                .into_iter()
                .filter_map(|(h, s)| match s {
                    Stub::Cross(c) => {
                        let other = self.crossings[&c].ends[h.opposite().end as usize];
                        core.contains(&other).then_some(h)
                    }
                    Stub::Leaf(_) => None,
                })
                .collect()
        };
        let start_stubs = core_stubs(start);
        let (first_in, first_out) = (start_stubs[1], start_stubs[0]);
        let mut out = Vec::new();
        let (mut node, mut entry, mut exit) = (start, first_in, first_out);
        loop {
            out.push((node, entry, exit));
            let c = match self.stubs(node)[&exit] {
                Stub::Cross(c) => c,
                Stub::Leaf(_) => unreachable!("core exit is a crossing"),
            };
            let next_entry = exit.opposite();
            let next = self.crossings[&c].ends[next_entry.end as usize];
            if next == start && next_entry == first_in {
                return out;
            }
            let next_exit = core_stubs(next)
                .into_iter()
                .find(|&h| h != next_entry)
                .expect("core node has two core stubs");
            node = next;
            entry = next_entry;
            exit = next_exit;
            if out.len() > self.nodes.len() {
                return out;
            }
        }
    }

    fn branch_from(&self, node: PieceId, entry: HalfEdge, via: CircleId) -> BranchNode {
        let mut children = Vec::new();
        for (h, stub) in self.stubs(node) {
            if h == entry {
                continue;
            }
            if let Stub::Cross(c) = stub {
                let child = self.crossings[&c].ends[h.opposite().end as usize];
                children.push(self.branch_from(child, h.opposite(), c));
            }
        }
        BranchNode {
            piece: node,
            via,
            children,
        }
    }

    pub fn fundamental_domain(&self) -> FundamentalDomain {
        let cycle = self.cycle();
        let mut axis = Vec::new();
        let mut branches = BTreeMap::new();
        for &(node, entry, exit) in &cycle {
            let stubs = self.stubs(node);
            let via = match stubs[&exit] {
                Stub::Cross(c) => c,
                Stub::Leaf(_) => unreachable!(),
            };
            axis.push(AxisStep {
                piece: node,
                entry,
                exit,
                via,
            });
            for (h, stub) in stubs {
                if h == entry || h == exit {
                    continue;
                }
                if let Stub::Cross(c) = stub {
                    let child = self.crossings[&c].ends[h.opposite().end as usize];
                    branches.insert(node, self.branch_from(child, h.opposite(), c));
                }
            }
        }
        FundamentalDomain { axis, branches }
    }

    /// The conjugacy class carried by the axis, as a cyclic word in the
    /// generators of the labeling.
    pub fn axis_word(&self, lab: &GeneratorLabeling) -> Result<CyclicWord, NormalGraphError> {
        let letters: Vec<i32> = self
            .cycle()
            .iter()
            .filter_map(|&(_, _, exit)| lab.letter(exit))
            .collect();
        let word = CyclicWord::new(letters);
        if word.letters.is_empty() {
            Err(NormalGraphError::TrivialAxis)
        } else {
            Ok(word)
        }
    }

    /// Sign every leaf from a transverse orientation with side `base_side` of
    /// `base` positive.
    pub fn decorate(&self, base: PieceId, base_side: Side) -> Result<DecoratedGraph, NormalGraphError> {
        if !self.nodes.contains_key(&base) {
            return Err(NormalGraphError::UnknownBase(base));
        }
        let positive = self.orientation(base, base_side)?;
        let signs = self
            .leaves
            .iter()
            .map(|l| SignedLeaf {
                piece: l.piece,
                half_edge: l.half_edge,
                sign: if l.label == positive[&l.piece] {
                    Sign::Plus
                } else {
                    Sign::Minus
                },
            })
            .collect();
        Ok(DecoratedGraph {
            torus: self.clone(),
            signs,
        })
    }

    fn orientation(&self, base: PieceId, base_side: Side) -> Result<BTreeMap<PieceId, Side>, NormalGraphError> {
        let mut positive = BTreeMap::from([(base, base_side)]);
        let mut stack = vec![base];
        while let Some(n) = stack.pop() {
            for x in self.crossings.values() {
                for (from, to) in [(x.ends[0], x.ends[1]), (x.ends[1], x.ends[0])] {
                    if from != n {
                        continue;
                    }
                    let want = positive[&n].transport(x.transport);
                    match positive.get(&to) {
                        None => {
                            positive.insert(to, want);
                            stack.push(to);
                        }
                        Some(&have) if have != want => {
                            let mut cycle: Vec<PieceId> = vec![from, to];
                            cycle.sort();
                            cycle.dedup();
                            return Err(NormalGraphError::KleinBottle(cycle));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(positive)
    }

    pub fn to_dot(&self) -> String {
        render_dot(self, None)
    }
}

/// One step along the axis: the node, where the axis enters and leaves it,
/// and the circle it leaves through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisStep {
    pub piece: PieceId,
    pub entry: HalfEdge,
    pub exit: HalfEdge,
    pub via: CircleId,
}

/// A node of a finite tree hanging off the axis, reached through `via`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchNode {
    pub piece: PieceId,
    pub via: CircleId,
    pub children: Vec<BranchNode>,
}

impl BranchNode {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(BranchNode::size).sum::<usize>()
    }
}

/// Axis arc plus the finite trees meeting it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub axis: Vec<AxisStep>,
    pub branches: BTreeMap<PieceId, BranchNode>,
}

/// Freely and cyclically reduced word, stored in the least rotation of
/// itself or its inverse (`x1 < x1^-1 < x2 < ...`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CyclicWord {
    pub letters: Vec<i32>,
}

fn letter_key(l: i32) -> (u32, bool) {
    (l.unsigned_abs(), l < 0)
}

impl CyclicWord {
    pub fn new(letters: Vec<i32>) -> Self {
        let mut reduced: Vec<i32> = Vec::with_capacity(letters.len());
        for l in letters {
            if reduced.last() == Some(&-l) {
                reduced.pop();
            } else {
                reduced.push(l);
            }
        }
        while reduced.len() >= 2 && reduced[0] == -reduced[reduced.len() - 1] {
            reduced.pop();
            reduced.remove(0);
        }
        let inverse: Vec<i32> = reduced.iter().rev().map(|l| -l).collect();
        let mut best = reduced.clone();
        for w in [&reduced, &inverse] {
            for r in 0..w.len() {
                let mut cand = w.clone();
                cand.rotate_left(r);
                if cand
                    .iter()
                    .map(|&l| letter_key(l))
                    .lt(best.iter().map(|&l| letter_key(l)))
                {
                    best = cand;
                }
            }
        }
        CyclicWord { letters: best }
    }

    /// Plain-ASCII rendering, e.g. `x1 x2^-1`.
    pub fn to_ascii(&self) -> String {
        self.letters
            .iter()
            .map(|&l| if l > 0 { format!("x{l}") } else { format!("x{}^-1", -l) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn subscript(n: u32) -> String {
    n.to_string()
        .chars()
        .map(|c| char::from_u32('₀' as u32 + c.to_digit(10).unwrap()).unwrap())
        .collect()
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "x{}", subscript(l.unsigned_abs()))?;
            if l < 0 {
                f.write_str("⁻¹")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedLeaf {
    pub piece: PieceId,
    pub half_edge: HalfEdge,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedGraph {
    pub torus: NormalTorus,
    pub signs: Vec<SignedLeaf>,
}

/// Text code; equal codes iff the decorated graphs are equivalent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalForm(pub String);

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonOptions {
    /// Identify a torus with the one whose axis runs the other way.
    pub allow_reversal: bool,
}

impl Default for CanonOptions {
    fn default() -> Self {
        CanonOptions { allow_reversal: true }
    }
}

impl DecoratedGraph {
    fn sign_at(&self, piece: PieceId, h: HalfEdge) -> Option<Sign> {
        self.signs
            .iter()
            .find(|s| s.piece == piece && s.half_edge == h)
            .map(|s| s.sign)
    }

    pub fn flipped(&self) -> DecoratedGraph {
        let mut out = self.clone();
        for s in &mut out.signs {
            s.sign = s.sign.flip();
        }
        out
    }

    /// Violations of the decoration laws: missing signs, equal signs on a
    /// disk, signs not induced by one transverse orientation.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = self.torus.validate();
        for l in &self.torus.leaves {
            if self.sign_at(l.piece, l.half_edge).is_none() {
                diags.push(format!("leaf {}@{} has no sign", l.piece, l.half_edge));
            }
        }
        for (&n, node) in &self.torus.nodes {
            if node.kind == PieceKind::Disk {
                let signs: BTreeSet<Sign> = self.signs.iter().filter(|s| s.piece == n).map(|s| s.sign).collect();
                if signs.len() != 2 {
                    diags.push(format!("disk node {n} leaves do not carry opposite signs"));
                }
            }
        }
        if diags.is_empty() {
            if let Some(&base) = self.torus.nodes.keys().next() {
                let induced = [Side::A, Side::B].iter().any(|&side| {
                    self.torus
                        .decorate(base, side)
                        .map(|d| d.signs == self.signs)
                        .unwrap_or(false)
                });
                if !induced {
                    diags.push("signs are not induced by a single transverse orientation".to_string());
                }
            }
        }
        diags
    }

    /// Partition of the leaves into the positive and negative sides.
    pub fn sides(&self) -> (Vec<SignedLeaf>, Vec<SignedLeaf>) {
        self.signs.iter().partition(|s| s.sign == Sign::Plus)
    }

    /// The torus bounds a solid torus iff all leaves carry the same sign.
    pub fn bounds_solid_torus(&self) -> bool {
        let (plus, minus) = self.sides();
        plus.is_empty() || minus.is_empty()
    }

    fn tree_code(&self, node: PieceId, entry: HalfEdge, flip: bool, out: &mut String) {
        let nt = &self.torus;
        let _ = write!(out, "({}", nt.nodes[&node].pants);
        for (h, stub) in nt.stubs(node) {
            if h == entry {
                continue;
            }
            let _ = write!(out, " {h}");
            self.stub_code(node, h, stub, flip, out);
        }
        out.push(')');
    }

    fn stub_code(&self, node: PieceId, h: HalfEdge, stub: Stub, flip: bool, out: &mut String) {
        match stub {
            Stub::Leaf(_) => {
                let sign = self.sign_at(node, h).unwrap_or(Sign::Plus);
                out.push(if flip { sign.flip() } else { sign }.symbol());
            }
            Stub::Cross(c) => {
                let child = self.torus.crossings[&c].ends[h.opposite().end as usize];
                self.tree_code(child, h.opposite(), flip, out);
            }
        }
    }

    fn axis_element(&self, node: PieceId, entry: HalfEdge, exit: HalfEdge, flip: bool) -> String {
        let nt = &self.torus;
        let mut s = format!("[{} {entry}>{exit}", nt.nodes[&node].pants);
        for (h, stub) in nt.stubs(node) {
            if h != entry && h != exit {
                let _ = write!(s, " {h}");
                self.stub_code(node, h, stub, flip, &mut s);
            }
        }
        s.push(']');
        s
    }

    pub fn canonicalize(&self) -> CanonicalForm {
        self.canonicalize_with(CanonOptions::default())
    }

    /// Least code over rotations of the axis, its reversal (if allowed) and
    /// the two global sign states.
    pub fn canonicalize_with(&self, opts: CanonOptions) -> CanonicalForm {
        let cycle = self.torus.cycle();
        let mut best: Option<String> = None;
        for flip in [false, true] {
            let forward: Vec<String> = cycle
                .iter()
                .map(|&(n, entry, exit)| self.axis_element(n, entry, exit, flip))
                .collect();
            let mut directions = vec![forward];
            if opts.allow_reversal {
                directions.push(
                    cycle
                        .iter()
                        .rev()
                        .map(|&(n, entry, exit)| self.axis_element(n, exit, entry, flip))
                        .collect(),
                );
            }
            for seq in directions {
                for r in 0..seq.len().max(1) {
                    let mut rotated = seq.clone();
                    rotated.rotate_left(r);
                    let code = format!("{}|{}", self.torus.graph.rank(), rotated.concat());
                    if best.as_ref().is_none_or(|b| &code < b) {
                        best = Some(code);
                    }
                }
            }
        }
        CanonicalForm(best.unwrap_or_default())
    }

    pub fn to_dot(&self) -> String {
        render_dot(&self.torus, Some(self))
    }
}

/// Equivalence of decorated graphs over the same sphere graph.
pub fn equivalent(a: &DecoratedGraph, b: &DecoratedGraph) -> Result<bool, NormalGraphError> {
    equivalent_with(a, b, CanonOptions::default())
}

pub fn equivalent_with(a: &DecoratedGraph, b: &DecoratedGraph, opts: CanonOptions) -> Result<bool, NormalGraphError> {
    if a.torus.graph != b.torus.graph {
        return Err(NormalGraphError::DifferentGraphs);
    }
    Ok(a.canonicalize_with(opts) == b.canonicalize_with(opts))
}

fn render_dot(nt: &NormalTorus, decoration: Option<&DecoratedGraph>) -> String {
    let mut out = String::from("graph normal_torus {\n");
    for (n, node) in &nt.nodes {
        let shape = match node.kind {
            PieceKind::Disk => "triangle",
            PieceKind::Cylinder => "ellipse",
            PieceKind::Pants => "doublecircle",
        };
        let _ = writeln!(
            out,
            "  {n} [shape={shape}, label=\"{n}\\n{} type-{}\"];",
            node.pants,
            node.y_type()
        );
    }
    for (c, x) in &nt.crossings {
        let _ = writeln!(out, "  {} -- {} [label=\"{c}@{}\"];", x.ends[0], x.ends[1], x.sphere);
    }
    for (i, l) in nt.leaves.iter().enumerate() {
        let label = match decoration.and_then(|d| d.sign_at(l.piece, l.half_edge)) {
            Some(sign) => sign.symbol().to_string(),
            None => l.label.to_string(),
        };
        let _ = writeln!(out, "  leaf{i} [shape=plaintext, label=\"{label}\"];");
        let _ = writeln!(
            out,
            "  {} -- leaf{i} [style=dotted, label=\"{}\"];",
            l.piece, l.half_edge.sphere
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::label_generators;

    fn nt(t: &TorusPosition) -> NormalTorus {
        NormalTorus::from_position(t).unwrap()
    }

    #[test]
    fn t0_dual_graph() {
        let g = nt(&fixtures::t0());
        assert_eq!(g.count_by_type(), [0, 2, 0]);
        assert_eq!(g.crossings.len(), 2);
        assert_eq!(g.leaves.len(), 2);
    }

    #[test]
    fn t2_dual_graph() {
        let g = nt(&fixtures::t2());
        assert_eq!(g.count_by_type(), [1, 1, 1]);
        assert_eq!(g.crossings.len(), 3);
        assert_eq!(g.leaves.len(), 3);
        assert_eq!(g.crossings.len() as i64 - g.nodes.len() as i64 + 1, 1);
    }

    #[test]
    fn t1_is_rejected() {
        assert!(matches!(
            NormalTorus::from_position(&fixtures::t1()),
            Err(NormalGraphError::NotNormal(_))
        ));
    }

    #[test]
    fn decorations_of_t0() {
        let g = nt(&fixtures::t0());
        let plus = g.decorate(PieceId(0), Side::A).unwrap();
        assert!(plus.signs.iter().all(|s| s.sign == Sign::Plus));
        let minus = g.decorate(PieceId(0), Side::B).unwrap();
        assert!(minus.signs.iter().all(|s| s.sign == Sign::Minus));
        assert_eq!(plus.canonicalize(), minus.canonicalize());
        assert!(plus.bounds_solid_torus());
        let (p, m) = plus.sides();
        assert_eq!((p.len(), m.len()), (2, 0));
        let (p, m) = minus.sides();
        assert_eq!((p.len(), m.len()), (0, 2));
        assert!(plus.validate().is_empty(), "{:?}", plus.validate());
    }

    #[test]
    fn decorations_of_t2() {
        let g = nt(&fixtures::t2());
        let d = g.decorate(PieceId(2), Side::A).unwrap();
        let disk: BTreeSet<Sign> = d
            .signs
            .iter()
            .filter(|s| s.piece == PieceId(2))
            .map(|s| s.sign)
            .collect();
        assert_eq!(disk.len(), 2);
        let (p, m) = d.sides();
        assert_eq!(p.len() + m.len(), 3);
        assert!([(2, 1), (1, 2)].contains(&(p.len(), m.len())));
        assert!(!d.bounds_solid_torus());
        let (fp, fm) = d.flipped().sides();
        assert_eq!((fp.len(), fm.len()), (m.len(), p.len()));
    }

    #[test]
    fn canonical_form_separates_and_ignores_ids() {
        let d0 = nt(&fixtures::t0()).decorate(PieceId(0), Side::A).unwrap();
        let d2 = nt(&fixtures::t2()).decorate(PieceId(0), Side::A).unwrap();
        assert_ne!(d0.canonicalize(), d2.canonicalize());

        // swap the two piece ids of t0
        let mut t = fixtures::t0();
        let a = t.pieces.remove(&PieceId(0)).unwrap();
        let b = t.pieces.remove(&PieceId(1)).unwrap();
        t.pieces.insert(PieceId(7), a);
        t.pieces.insert(PieceId(3), b);
        let dp = nt(&t).decorate(PieceId(3), Side::A).unwrap();
        assert_eq!(dp.canonicalize(), d0.canonicalize());
        assert!(equivalent(&d0, &dp).unwrap());
        assert!(equivalent(&d0, &d0.flipped()).unwrap());
    }

    #[test]
    fn raw_sign_change_is_distinct() {
        let d0 = nt(&fixtures::t0()).decorate(PieceId(0), Side::A).unwrap();
        let mut raw = d0.clone();
        raw.signs[1].sign = Sign::Minus;
        assert!(!equivalent(&d0, &raw).unwrap());
        assert!(!raw.validate().is_empty());
    }

    #[test]
    fn different_graphs_are_rejected() {
        let d0 = nt(&fixtures::t0()).decorate(PieceId(0), Side::A).unwrap();
        let mut other = d0.clone();
        other.torus.graph = Arc::new(crate::graph::build_standard(3).unwrap());
        assert_eq!(equivalent(&d0, &other), Err(NormalGraphError::DifferentGraphs));
    }

    #[test]
    fn fundamental_domains() {
        let fd0 = nt(&fixtures::t0()).fundamental_domain();
        assert_eq!(
            fd0.axis.iter().map(|s| s.piece).collect::<Vec<_>>(),
            vec![PieceId(0), PieceId(1)]
        );
        assert!(fd0.branches.is_empty());

        let fd2 = nt(&fixtures::t2()).fundamental_domain();
        let mut axis: Vec<PieceId> = fd2.axis.iter().map(|s| s.piece).collect();
        axis.sort();
        assert_eq!(axis, vec![PieceId(0), PieceId(1)]);
        let vias: BTreeSet<CircleId> = fd2.axis.iter().map(|s| s.via).collect();
        assert_eq!(vias, BTreeSet::from([CircleId(0), CircleId(1)]));
        assert_eq!(
            fd2.branches,
            BTreeMap::from([(
                PieceId(0),
                BranchNode {
                    piece: PieceId(2),
                    via: CircleId(2),
                    children: vec![]
                }
            )])
        );
    }

    #[test]
    fn axis_words() {
        let lab = label_generators(&fixtures::theta());
        let w0 = nt(&fixtures::t0()).axis_word(&lab).unwrap();
        let w2 = nt(&fixtures::t2()).axis_word(&lab).unwrap();
        assert_eq!(w0.to_string(), "x₁");
        assert_eq!(w2.to_string(), "x₁");
        assert_eq!(w0.to_ascii(), "x1");
    }

    #[test]
    fn cyclic_word_normalization() {
        assert_eq!(CyclicWord::new(vec![2, 1, -1, -3, 1, -2]).letters, vec![1, -3]);
        assert_eq!(CyclicWord::new(vec![2, -3, 2, 1]).letters, vec![1, 2, -3, 2]);
        assert_eq!(CyclicWord::new(vec![-1]).letters, vec![1]);
        assert_eq!(CyclicWord::new(vec![2, 1]).letters, vec![1, 2]);
        assert_eq!(CyclicWord::new(vec![-2, -1]).letters, vec![1, 2]);
        assert_eq!(CyclicWord::new(vec![1, -2]).to_string(), "x₁x₂⁻¹");
        assert!(CyclicWord::new(vec![1, 2, -2, -1]).letters.is_empty());
    }
}
