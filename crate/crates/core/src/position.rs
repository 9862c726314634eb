//! Arbitrary torus positions relative to the sphere system.
//!
//! A position is a set of abstract pieces (genus plus boundary circles plus
//! side labels for the pants spheres they do not touch), the circles they are
//! glued along, one region tree per sphere describing how the circles sit on
//! that 2-sphere, and a co-orientation transport bit per circle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::SphereGraph;
use crate::ids::{CircleId, HalfEdge, PVertex, PieceId, RegionId, Side, SphereId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundarySlot {
    pub circle: CircleId,
    pub half_edge: HalfEdge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub pants: PVertex,
    pub genus: u32,
    pub boundary: Vec<BoundarySlot>,
    /// Side of this piece on which each untouched boundary sphere of its pants lies.
    pub uncrossed_sides: BTreeMap<HalfEdge, Side>,
}

impl Piece {
    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.boundary.len() as i64
    }

    pub fn circles_on(&self, h: HalfEdge) -> impl Iterator<Item = CircleId> + '_ {
        self.boundary.iter().filter(move |b| b.half_edge == h).map(|b| b.circle)
    }

    pub fn crossed_half_edges(&self) -> BTreeSet<HalfEdge> {
        self.boundary.iter().map(|b| b.half_edge).collect()
    }

    /// Reverse the piece's A/B convention.
    pub fn flip_labels(&mut self) {
        for side in self.uncrossed_sides.values_mut() {
            *side = side.flip();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circle {
    pub sphere: SphereId,
}

/// Complementary regions of the circles on one sphere (nodes) joined by the
/// circles (edges).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionTree {
    pub nodes: BTreeSet<RegionId>,
    /// The first region faces side A of the piece at sphere end 0 of the
    /// circle (and so side `A.transport(bit)` of the piece at end 1).
    pub edges: BTreeMap<CircleId, [RegionId; 2]>,
}

impl RegionTree {
    pub fn single_region(r: RegionId) -> Self {
        RegionTree {
            nodes: BTreeSet::from([r]),
            edges: BTreeMap::new(),
        }
    }

    pub fn degree(&self, r: RegionId) -> usize {
        self.edges.values().filter(|ends| ends.contains(&r)).count()
    }

    /// Circles incident to region `r`, in id order.
    pub fn incident(&self, r: RegionId) -> Vec<CircleId> {
        self.edges
            .iter()
            .filter(|(_, ends)| ends.contains(&r))
            .map(|(&c, _)| c)
            .collect()
    }

    /// The region both circles touch, if any.
    pub fn shared_region(&self, a: CircleId, b: CircleId) -> Option<RegionId> {
        let ea = self.edges.get(&a)?;
        let eb = self.edges.get(&b)?;
        ea.iter().copied().find(|r| eb.contains(r))
    }

    /// Circles strictly between `a` and `b` on the tree path joining them.
    pub fn circles_between(&self, a: CircleId, b: CircleId) -> Vec<CircleId> {
        let (Some(ea), Some(eb)) = (self.edges.get(&a), self.edges.get(&b)) else {
            return Vec::new();
        };
        let mut prev: BTreeMap<RegionId, (RegionId, CircleId)> = BTreeMap::new();
        let start = ea[0];
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(r) = queue.pop_front() {
            for (&c, ends) in &self.edges {
                if let Some(pos) = ends.iter().position(|&x| x == r) {
                    let next = ends[1 - pos];
                    if seen.insert(next) {
                        prev.insert(next, (r, c));
                        queue.push_back(next);
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = eb[0];
        while cur != start {
            let Some(&(p, c)) = prev.get(&cur) else {
                return Vec::new();
            };
            path.push(c);
            cur = p;
        }
        path.retain(|&c| c != a && c != b);
        path
    }

    fn shape_diagnostics(&self, sphere: SphereId, diags: &mut Vec<String>) {
        if self.nodes.len() != self.edges.len() + 1 {
            diags.push(format!(
                "region tree of {sphere}: {} nodes for {} circles",
                self.nodes.len(),
                self.edges.len()
            ));
        }
        for (c, ends) in &self.edges {
            for r in ends {
                if !self.nodes.contains(r) {
                    diags.push(format!(
                        "region tree of {sphere}: circle {c} ends at unknown region {r}"
                    ));
                }
            }
            if ends[0] == ends[1] {
                diags.push(format!(
                    "region tree of {sphere}: circle {c} is a self-loop at {}",
                    ends[0]
                ));
            }
        }
        if let Some(&start) = self.nodes.iter().next() {
            let mut seen = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(r) = queue.pop_front() {
                for ends in self.edges.values() {
                    if let Some(pos) = ends.iter().position(|&x| x == r) {
                        if seen.insert(ends[1 - pos]) {
                            queue.push_back(ends[1 - pos]);
                        }
                    }
                }
            }
            if seen.len() != self.nodes.len() {
                diags.push(format!("region tree of {sphere} is disconnected"));
            }
        } else {
            diags.push(format!("region tree of {sphere} has no regions"));
        }
    }
}

/// Normal piece kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Disk,
    Cylinder,
    Pants,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusPosition {
    pub graph: Arc<SphereGraph>,
    pub pieces: BTreeMap<PieceId, Piece>,
    pub circles: BTreeMap<CircleId, Circle>,
    pub region_trees: BTreeMap<SphereId, RegionTree>,
    /// Whether side A of the piece at one end of the circle continues to
    /// side A of the piece at the other end.
    pub side_transport: BTreeMap<CircleId, bool>,
}

/// Result of [`TorusPosition::is_normal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalCheck {
    pub normal: bool,
    pub violations: Vec<String>,
}

/// Render a half-edge as `s0@p0`, with the end index for loop spheres.
pub fn describe_half_edge(g: &SphereGraph, h: HalfEdge) -> String {
    match g.edge(h.sphere) {
        Some(e) if e.is_loop() => format!("{}:{}@{}", h.sphere, h.end, e.ends[h.end as usize].p),
        Some(e) => format!("{}@{}", h.sphere, e.ends[h.end as usize].p),
        None => h.to_string(),
    }
}

impl TorusPosition {
    pub fn empty(graph: Arc<SphereGraph>) -> Self {
        TorusPosition {
            graph,
            pieces: BTreeMap::new(),
            circles: BTreeMap::new(),
            region_trees: BTreeMap::new(),
            side_transport: BTreeMap::new(),
        }
    }

    /// Every boundary slot referencing each circle.
    pub fn circle_slots(&self) -> BTreeMap<CircleId, Vec<(PieceId, HalfEdge)>> {
        let mut out: BTreeMap<CircleId, Vec<(PieceId, HalfEdge)>> = BTreeMap::new();
        for (&pid, piece) in &self.pieces {
            for b in &piece.boundary {
                out.entry(b.circle).or_default().push((pid, b.half_edge));
            }
        }
        out
    }

    /// The piece glued to `circle` on the given side of its sphere.
    pub fn piece_at(&self, circle: CircleId, h: HalfEdge) -> Option<PieceId> {
        self.pieces
            .iter()
            .find(|(_, p)| p.boundary.iter().any(|b| b.circle == circle && b.half_edge == h))
            .map(|(&id, _)| id)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.pieces.values().map(Piece::euler_characteristic).sum()
    }

    /// Circle count per sphere; every sphere of the graph is present.
    pub fn intersection_vector(&self) -> BTreeMap<SphereId, usize> {
        let mut v: BTreeMap<SphereId, usize> = self.graph.sphere_ids().map(|s| (s, 0)).collect();
        for c in self.circles.values() {
            *v.entry(c.sphere).or_default() += 1;
        }
        v
    }

    /// Side of the piece glued to `circle` at half-edge `h` that faces region `r`.
    pub fn facing_side(&self, circle: CircleId, h: HalfEdge, r: RegionId) -> Option<Side> {
        let ends = self.region_trees.get(&h.sphere)?.edges.get(&circle)?;
        let at_end0 = if ends[0] == r {
            Side::A
        } else if ends[1] == r {
            Side::B
        } else {
            return None;
        };
        if h.end == 0 {
            Some(at_end0)
        } else {
            Some(at_end0.transport(*self.side_transport.get(&circle)?))
        }
    }

    pub fn total_intersection(&self) -> usize {
        self.circles.len()
    }

    pub fn next_piece_id(&self) -> PieceId {
        PieceId(self.pieces.keys().last().map_or(0, |p| p.0 + 1))
    }

    pub fn next_circle_id(&self) -> CircleId {
        CircleId(self.circles.keys().last().map_or(0, |c| c.0 + 1))
    }

    pub fn next_region_id(&self) -> RegionId {
        RegionId(
            self.region_trees
                .values()
                .flat_map(|t| t.nodes.iter())
                .map(|r| r.0 + 1)
                .max()
                .unwrap_or(0),
        )
    }

    /// Adjacency of the piece graph: one entry per circle joining its two sides.
    pub fn piece_graph_edges(&self) -> Vec<(CircleId, PieceId, PieceId)> {
        self.circle_slots()
            .into_iter()
            .filter(|(_, slots)| slots.len() == 2)
            .map(|(c, slots)| (c, slots[0].0, slots[1].0))
            .collect()
    }

    /// Propagate a global co-orientation from `base` (whose side `base_side`
    /// is declared positive). Returns, per piece, which of its sides is
    /// positive, or the pieces of a cycle with nontrivial monodromy.
    pub fn orient_from(&self, base: PieceId, base_side: Side) -> Result<BTreeMap<PieceId, Side>, Vec<PieceId>> {
        let edges = self.piece_graph_edges();
        let mut positive: BTreeMap<PieceId, Side> = BTreeMap::from([(base, base_side)]);
        let mut parent: BTreeMap<PieceId, PieceId> = BTreeMap::new();
        let mut queue = VecDeque::from([base]);
        while let Some(p) = queue.pop_front() {
            for &(c, a, b) in &edges {
                let bit = self.side_transport.get(&c).copied().unwrap_or(true);
                for (from, to) in [(a, b), (b, a)] {
                    if from != p {
                        continue;
                    }
                    let expected = positive[&p].transport(bit);
                    match positive.get(&to) {
                        None => {
                            positive.insert(to, expected);
                            parent.insert(to, p);
                            queue.push_back(to);
                        }
                        Some(&have) if have != expected => {
                            return Err(cycle_through(&parent, from, to));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(positive)
    }

    /// Structural diagnostics; empty iff the position is a valid torus position.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let g = &*self.graph;
        let gd = g.validate();
        if !gd.is_empty() {
            diags.extend(gd.into_iter().map(|d| format!("graph: {d}")));
            return diags;
        }
        for (&pid, piece) in &self.pieces {
            if !g.has_vertex(piece.pants) {
                diags.push(format!("piece {pid} lies in unknown pants {}", piece.pants));
                continue;
            }
            if piece.boundary.is_empty() {
                diags.push(format!("piece {pid} is closed (no boundary circles)"));
            }
            let pants_edges: BTreeSet<HalfEdge> = g.half_edges_at(piece.pants).into_iter().collect();
            for b in &piece.boundary {
                if !pants_edges.contains(&b.half_edge) {
                    diags.push(format!(
                        "piece {pid} boundary circle {} sits on half-edge {} outside its pants {}",
                        b.circle, b.half_edge, piece.pants
                    ));
                }
                match self.circles.get(&b.circle) {
                    None => diags.push(format!("piece {pid} references unknown circle {}", b.circle)),
                    Some(c) if c.sphere != b.half_edge.sphere => diags.push(format!(
                        "piece {pid} places circle {} on {} but the circle lies on {}",
                        b.circle, b.half_edge.sphere, c.sphere
                    )),
                    Some(_) => {}
                }
            }
            let crossed = piece.crossed_half_edges();
            for h in &pants_edges {
                if !crossed.contains(h) && !piece.uncrossed_sides.contains_key(h) {
                    diags.push(format!(
                        "piece {pid} has no side label for uncrossed half-edge {}",
                        describe_half_edge(g, *h)
                    ));
                }
            }
            for h in piece.uncrossed_sides.keys() {
                if crossed.contains(h) || !pants_edges.contains(h) {
                    diags.push(format!(
                        "piece {pid} has a side label for half-edge {h} it does not leave uncrossed"
                    ));
                }
            }
        }

        let slots = self.circle_slots();
        for (&cid, circle) in &self.circles {
            if g.edge(circle.sphere).is_none() {
                diags.push(format!("circle {cid} lies on unknown sphere {}", circle.sphere));
            }
            match slots.get(&cid).map(Vec::len).unwrap_or(0) {
                2 => {
                    let s = &slots[&cid];
                    if s[0].1 == s[1].1 {
                        diags.push(format!("circle {cid} attached twice at half-edge {}", s[0].1));
                    }
                }
                0 => diags.push(format!("circle {cid} has no incident piece")),
                1 => diags.push(format!("circle {cid} has one incident piece")),
                k => diags.push(format!("circle {cid} has {k} incident pieces")),
            }
            if !self.side_transport.contains_key(&cid) {
                diags.push(format!("circle {cid} has no side_transport bit"));
            }
        }
        for c in self.side_transport.keys() {
            if !self.circles.contains_key(c) {
                diags.push(format!("side_transport names unknown circle {c}"));
            }
        }

        for s in g.sphere_ids() {
            let Some(tree) = self.region_trees.get(&s) else {
                diags.push(format!("sphere {s} has no region tree"));
                continue;
            };
            tree.shape_diagnostics(s, &mut diags);
            for c in tree.edges.keys() {
                match self.circles.get(c) {
                    Some(circle) if circle.sphere == s => {}
                    Some(circle) => diags.push(format!(
                        "region tree of {s} lists circle {c} which lies on {}",
                        circle.sphere
                    )),
                    None => diags.push(format!("region tree of {s} lists unknown circle {c}")),
                }
            }
            for (cid, circle) in &self.circles {
                if circle.sphere == s && !tree.edges.contains_key(cid) {
                    diags.push(format!("circle {cid} missing from region tree of {s}"));
                }
            }
        }
        for s in self.region_trees.keys() {
            if g.edge(*s).is_none() {
                diags.push(format!("region tree for unknown sphere {s}"));
            }
        }
        if !diags.is_empty() {
            return diags;
        }

        if self.pieces.is_empty() {
            diags.push("position has no pieces".to_string());
            return diags;
        }
        let chi = self.euler_characteristic();
        if chi != 0 {
            diags.push(format!("Euler characteristic {chi} (expected 0)"));
        }
        let edges = self.piece_graph_edges();
        let components = count_components(self.pieces.keys().copied(), &edges);
        if components != 1 {
            diags.push(format!("piece graph disconnected ({components} components)"));
        } else {
            let base = *self.pieces.keys().next().unwrap();
            if let Err(cycle) = self.orient_from(base, Side::A) {
                let names: Vec<String> = cycle.iter().map(ToString::to_string).collect();
                diags.push(format!(
                    "monodromy nontrivial on cycle ({}) (surface would be a Klein bottle)",
                    names.join(",")
                ));
            }
            if self.pieces.values().all(|p| p.genus == 0) {
                let betti = edges.len() as i64 - self.pieces.len() as i64 + 1;
                if betti != 1 {
                    diags.push(format!("piece graph has first Betti number {betti} (expected 1)"));
                }
            }
        }
        diags
    }

    /// Kind of a piece if it is one of the three normal shapes (ignoring essentiality).
    pub fn normal_kind(&self, piece: &Piece) -> Option<PieceKind> {
        if piece.genus != 0 {
            return None;
        }
        let crossed = piece.crossed_half_edges();
        if crossed.len() != piece.boundary.len() {
            return None;
        }
        match piece.boundary.len() {
            1 => Some(PieceKind::Disk),
            2 => Some(PieceKind::Cylinder),
            3 => Some(PieceKind::Pants),
            _ => None,
        }
    }

    /// Whether a disk piece is boundary-parallel (both untouched spheres on one side).
    pub fn is_inessential_disk(piece: &Piece) -> bool {
        piece.boundary.len() == 1 && piece.genus == 0 && {
            let sides: BTreeSet<Side> = piece.uncrossed_sides.values().copied().collect();
            sides.len() == 1
        }
    }

    pub fn is_normal(&self) -> NormalCheck {
        let g = &*self.graph;
        let mut violations = Vec::new();
        for (&pid, piece) in &self.pieces {
            if piece.genus > 0 {
                violations.push(format!("piece {pid} has genus {}", piece.genus));
            }
            let mut per_edge: BTreeMap<HalfEdge, usize> = BTreeMap::new();
            for b in &piece.boundary {
                *per_edge.entry(b.half_edge).or_default() += 1;
            }
            for (h, n) in per_edge {
                if n == 2 {
                    violations.push(format!(
                        "piece {pid} meets half-edge ({}) twice",
                        describe_half_edge(g, h)
                    ));
                } else if n > 2 {
                    violations.push(format!(
                        "piece {pid} meets half-edge ({}) {n} times",
                        describe_half_edge(g, h)
                    ));
                }
            }
            if piece.boundary.is_empty() {
                violations.push(format!("piece {pid} is closed"));
            }
            if Self::is_inessential_disk(piece) {
                violations.push(format!("disk {pid} boundary-parallel"));
            }
        }
        NormalCheck {
            normal: violations.is_empty(),
            violations,
        }
    }

    /// Circle pairs of one piece on one sphere side that an odd number of
    /// another same-side piece's circles separate on the sphere. Embedded
    /// positions have none: a connected piece cannot cross another piece.
    ///
    /// Also reported: a piece facing one region of a sphere with different
    /// sides through different circles.
    pub fn parity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&pid, piece) in &self.pieces {
            let mut facing: BTreeMap<(HalfEdge, RegionId), Side> = BTreeMap::new();
            for b in &piece.boundary {
                let Some(ends) = self
                    .region_trees
                    .get(&b.half_edge.sphere)
                    .and_then(|t| t.edges.get(&b.circle))
                else {
                    continue;
                };
                for r in *ends {
                    let Some(side) = self.facing_side(b.circle, b.half_edge, r) else {
                        continue;
                    };
                    if let Some(&prev) = facing.get(&(b.half_edge, r)) {
                        if prev != side {
                            out.push(format!("{pid} faces region {r} of {} with both sides", b.half_edge));
                        }
                    } else {
                        facing.insert((b.half_edge, r), side);
                    }
                }
            }
        }
        for (&s, tree) in &self.region_trees {
            for end in 0..2u8 {
                let h = HalfEdge::new(s, end);
                let mut owner: BTreeMap<CircleId, PieceId> = BTreeMap::new();
                for (&pid, piece) in &self.pieces {
                    for c in piece.circles_on(h) {
                        owner.insert(c, pid);
                    }
                }
                let mut by_piece: BTreeMap<PieceId, Vec<CircleId>> = BTreeMap::new();
                for (&c, &p) in &owner {
                    by_piece.entry(p).or_default().push(c);
                }
                for (&pid, circles) in &by_piece {
                    for (i, &a) in circles.iter().enumerate() {
                        for &b in &circles[i + 1..] {
                            let mut counts: BTreeMap<PieceId, usize> = BTreeMap::new();
                            for c in tree.circles_between(a, b) {
                                if let Some(&o) = owner.get(&c) {
                                    if o != pid {
                                        *counts.entry(o).or_default() += 1;
                                    }
                                }
                            }
                            for (o, n) in counts {
                                if n % 2 == 1 {
                                    out.push(format!("circles {a}, {b} of {pid} on {h} separated by {o}"));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Side of piece `g` on which region `r` of half-edge `h` lies: through
    /// the nearest circle of `g` on that sphere side, or its label if `g`
    /// does not cross it.
    pub fn side_of(&self, g: PieceId, h: HalfEdge, r: RegionId) -> Option<Side> {
        let piece = self.pieces.get(&g)?;
        let own: BTreeSet<CircleId> = piece.circles_on(h).collect();
        if own.is_empty() {
            return piece.uncrossed_sides.get(&h).copied();
        }
        let tree = self.region_trees.get(&h.sphere)?;
        let mut seen = BTreeSet::from([r]);
        let mut queue = VecDeque::from([r]);
        while let Some(n) = queue.pop_front() {
            for (&c, ends) in &tree.edges {
                let Some(pos) = ends.iter().position(|&e| e == n) else {
                    continue;
                };
                if own.contains(&c) {
                    return self.facing_side(c, h, n);
                }
                if seen.insert(ends[1 - pos]) {
                    queue.push_back(ends[1 - pos]);
                }
            }
        }
        None
    }

    /// Pairs of pieces in one pants that cannot be disjoint: one piece meets
    /// both sides of the other, or some region lies beyond both of them.
    pub fn nesting_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &v in self.graph.p_vertices() {
            let ids: Vec<PieceId> = self
                .pieces
                .iter()
                .filter(|(_, p)| p.pants == v)
                .map(|(&id, _)| id)
                .collect();
            if ids.len() < 2 {
                continue;
            }
            let mut faces = Vec::new();
            for h in self.graph.half_edges_at(v) {
                if let Some(tree) = self.region_trees.get(&h.sphere) {
                    faces.extend(tree.nodes.iter().map(|&r| (h, r)));
                }
            }
            let sides: BTreeMap<(PieceId, HalfEdge, RegionId), Option<Side>> = ids
                .iter()
                .flat_map(|&g| faces.iter().map(move |&(h, r)| (g, h, r)))
                .map(|(g, h, r)| ((g, h, r), self.side_of(g, h, r)))
                .collect();
            // side of `a` holding piece `b`
            let holding = |a: PieceId, b: PieceId| -> Result<Option<Side>, ()> {
                let mut seen = BTreeSet::new();
                for slot in &self.pieces[&b].boundary {
                    let Some(ends) = self
                        .region_trees
                        .get(&slot.half_edge.sphere)
                        .and_then(|t| t.edges.get(&slot.circle))
                    else {
                        continue;
                    };
                    for &r in ends {
                        if let Some(Some(s)) = sides.get(&(a, slot.half_edge, r)) {
                            seen.insert(*s);
                        }
                    }
                }
                match seen.len() {
                    0 => Ok(None),
                    1 => Ok(seen.into_iter().next()),
                    _ => Err(()),
                }
            };
            for &a in &ids {
                for &b in &ids {
                    if a >= b {
                        continue;
                    }
                    let (ab, ba) = match (holding(a, b), holding(b, a)) {
                        (Err(()), _) => {
                            out.push(format!("{b} meets both sides of {a}"));
                            continue;
                        }
                        (_, Err(())) => {
                            out.push(format!("{a} meets both sides of {b}"));
                            continue;
                        }
                        (Ok(Some(x)), Ok(Some(y))) => (x, y),
                        _ => continue,
                    };
                    if let Some(&(h, r)) = faces
                        .iter()
                        .find(|&&(h, r)| sides[&(a, h, r)] == Some(ab.flip()) && sides[&(b, h, r)] == Some(ba.flip()))
                    {
                        out.push(format!("region {r} of {h} lies beyond both {a} and {b}"));
                    }
                }
            }
        }
        out
    }

    /// Graphviz rendering of the piece graph.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph pieces {\n");
        for (pid, piece) in &self.pieces {
            let _ = writeln!(
                out,
                "  {pid} [label=\"{pid}\\n{} g={} b={}\"];",
                piece.pants,
                piece.genus,
                piece.boundary.len()
            );
        }
        for (c, a, b) in self.piece_graph_edges() {
            let sphere = self.circles.get(&c).map(|x| x.sphere.to_string()).unwrap_or_default();
            let style = if self.side_transport.get(&c).copied().unwrap_or(true) {
                "solid"
            } else {
                "dashed"
            };
            let _ = writeln!(out, "  {a} -- {b} [label=\"{c}@{sphere}\", style={style}];");
        }
        out.push_str("}\n");
        out
    }
}

fn cycle_through(parent: &BTreeMap<PieceId, PieceId>, a: PieceId, b: PieceId) -> Vec<PieceId> {
    let ancestors = |mut x: PieceId| {
        let mut path = vec![x];
        while let Some(&p) = parent.get(&x) {
            path.push(p);
            x = p;
        }
        path
    };
    let pa = ancestors(a);
    let pb = ancestors(b);
    let common = pa.iter().find(|x| pb.contains(x)).copied();
    let mut cycle: Vec<PieceId> = pa.iter().copied().take_while(|&x| Some(x) != common).collect();
    if let Some(c) = common {
        cycle.push(c);
    }
    let tail: Vec<PieceId> = pb.iter().copied().take_while(|&x| Some(x) != common).collect();
    cycle.extend(tail.into_iter().rev());
    cycle.dedup();
    if let Some(min_at) = cycle.iter().enumerate().min_by_key(|(_, p)| **p).map(|(i, _)| i) {
        cycle.rotate_left(min_at);
    }
    cycle
}

pub(crate) fn count_components(nodes: impl Iterator<Item = PieceId>, edges: &[(CircleId, PieceId, PieceId)]) -> usize {
    let nodes: Vec<PieceId> = nodes.collect();
    let mut seen = BTreeSet::new();
    let mut components = 0;
    for &start in &nodes {
        if !seen.insert(start) {
            continue;
        }
        components += 1;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &(_, a, b) in edges {
                let next = if a == p {
                    b
                } else if b == p {
                    a
                } else {
                    continue;
                };
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn s(i: u32) -> SphereId {
        SphereId(i)
    }

    #[test]
    fn t0_is_valid_and_normal() {
        let t0 = fixtures::t0();
        assert_eq!(t0.validate(), Vec::<String>::new());
        assert_eq!(t0.euler_characteristic(), 0);
        assert_eq!(
            t0.intersection_vector(),
            BTreeMap::from([(s(0), 1), (s(1), 1), (s(2), 0)])
        );
        assert!(t0.is_normal().normal);
        assert!(t0.parity_violations().is_empty());
    }

    #[test]
    fn flipped_bit_is_a_klein_bottle() {
        let k = fixtures::klein();
        let diags = k.validate();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(
            diags[0].starts_with("monodromy nontrivial on cycle (F0,F1)"),
            "{diags:?}"
        );
    }

    #[test]
    fn deleting_a_piece_leaves_dangling_circles() {
        let mut t = fixtures::t0();
        t.pieces.remove(&PieceId(1));
        let diags = t.validate();
        assert!(
            diags.contains(&"circle c0 has one incident piece".to_string()),
            "{diags:?}"
        );
    }

    #[test]
    fn t1_is_valid_but_not_normal() {
        let t1 = fixtures::t1();
        assert!(t1.validate().is_empty(), "{:?}", t1.validate());
        assert_eq!(
            t1.intersection_vector(),
            BTreeMap::from([(s(0), 2), (s(1), 1), (s(2), 0)])
        );
        let check = t1.is_normal();
        assert!(!check.normal);
        assert_eq!(
            check.violations,
            vec!["piece F0 meets half-edge (s0@p0) twice".to_string()]
        );
    }

    #[test]
    fn t2_counts_and_disk_essentiality() {
        let t2 = fixtures::t2();
        assert!(t2.validate().is_empty(), "{:?}", t2.validate());
        assert_eq!(t2.euler_characteristic(), 0);
        assert_eq!(
            t2.intersection_vector(),
            BTreeMap::from([(s(0), 1), (s(1), 1), (s(2), 1)])
        );
        assert!(t2.is_normal().normal);

        let mut bad = t2.clone();
        let disk = bad.pieces.get_mut(&PieceId(2)).unwrap();
        for side in disk.uncrossed_sides.values_mut() {
            *side = Side::A;
        }
        let check = bad.is_normal();
        assert!(!check.normal);
        assert_eq!(check.violations, vec!["disk F2 boundary-parallel".to_string()]);
    }

    #[test]
    fn lone_disk_has_euler_characteristic_one() {
        let t2 = fixtures::t2();
        let mut lone = TorusPosition::empty(t2.graph.clone());
        lone.pieces.insert(PieceId(2), t2.pieces[&PieceId(2)].clone());
        assert_eq!(lone.euler_characteristic(), 1);
    }

    #[test]
    fn region_tree_path() {
        let t1 = fixtures::t1();
        let tree = &t1.region_trees[&s(0)];
        assert_eq!(tree.shared_region(CircleId(0), CircleId(3)), Some(RegionId(0)));
        assert!(tree.circles_between(CircleId(0), CircleId(3)).is_empty());
    }

    #[test]
    fn json_round_trip_preserves_position() {
        for t in [fixtures::t0(), fixtures::t1(), fixtures::t2()] {
            let text = serde_json::to_string(&t).unwrap();
            let back: TorusPosition = serde_json::from_str(&text).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn side_of_walks_to_the_nearest_own_circle() {
        let t1 = fixtures::t1();
        let s0 = HalfEdge::new(s(0), 1);
        // F1 crosses s0 through c0 only; r5 lies across c3, which is not F1's
        assert_eq!(t1.side_of(PieceId(1), s0, RegionId(0)), Some(Side::B));
        assert_eq!(t1.side_of(PieceId(1), s0, RegionId(5)), Some(Side::B));
        assert_eq!(t1.side_of(PieceId(1), s0, RegionId(1)), Some(Side::A));
        // uncrossed half-edges fall back to the label
        assert_eq!(
            t1.side_of(PieceId(1), HalfEdge::new(s(2), 1), RegionId(4)),
            Some(Side::A)
        );
    }

    #[test]
    fn nesting_flags_crossing_pieces() {
        assert!(fixtures::t0().nesting_violations().is_empty());
        assert!(fixtures::t1().nesting_violations().is_empty());
        assert!(fixtures::t0_with_parallel_disk().nesting_violations().is_empty());
        // t2's cylinder joins s0 to s1 while its disk separates them
        assert_eq!(
            fixtures::t2().nesting_violations(),
            vec!["F1 meets both sides of F2".to_string()]
        );
    }
}
