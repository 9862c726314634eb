//! Normalization as a terminating rewriting system.
//!
//! Two moves, each removing exactly one intersection circle:
//!
//! * **Slide**: a piece `F` meets one side of a sphere in two circles that
//!   share a region of that sphere. The circles are banded together across the
//!   shared region into one circle; `F` is cut along the arc joining them and
//!   the two pieces on the far side are banded into one.
//! * **Cap**: a boundary-parallel disk whose circle bounds an innermost region
//!   is pushed across the sphere, capping off the neighbouring piece.
//!
//! Only the end state of each elementary homotopy is represented. Merged
//! circles, pieces and regions keep the least of the merged identifiers, so
//! the state after a sequence of moves depends only on which objects merged.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{CircleId, HalfEdge, PieceId, RegionId, SphereId};
use crate::normal_graph::{NormalGraphError, NormalTorus};
use crate::position::{BoundarySlot, Piece, TorusPosition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum Move {
    Slide {
        piece: PieceId,
        half_edge: HalfEdge,
        first: CircleId,
        second: CircleId,
        region: RegionId,
    },
    Cap {
        disk: PieceId,
        circle: CircleId,
    },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Slide {
                piece,
                half_edge,
                first,
                second,
                region,
            } => {
                write!(f, "slide {piece} {half_edge} {first}+{second} via {region}")
            }
            Move::Cap { disk, circle } => write!(f, "cap {disk} {circle}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("inapplicable move: {0}")]
    Inapplicable(Move),
    #[error("side_transport mismatch on slide {0}: the input position is inconsistent")]
    TransportMismatch(Move),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("invalid position: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("disjoint from the sphere system: torus inessential or invalid input")]
    DisjointFromSpheres,
    #[error("stuck non-normal after {steps} moves: {}", .violations.join("; "))]
    StuckNonNormal {
        steps: usize,
        violations: Vec<String>,
        position: Box<TorusPosition>,
    },
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error("move {0} broke monotonicity")]
    NotMonotone(Move),
    #[error(transparent)]
    Graph(#[from] NormalGraphError),
}

/// One applied move with the per-sphere counts around it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(rename = "move")]
    pub mv: Move,
    pub before: BTreeMap<SphereId, usize>,
    pub after: BTreeMap<SphereId, usize>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts =
            |m: &BTreeMap<SphereId, usize>| m.iter().map(|(s, n)| format!("{s}:{n}")).collect::<Vec<_>>().join(" ");
        write!(f, "{} | {} -> {}", self.mv, counts(&self.before), counts(&self.after))
    }
}

fn move_key(t: &TorusPosition, m: &Move) -> (u8, u8, PieceId, HalfEdge, CircleId, CircleId) {
    match *m {
        Move::Slide {
            piece,
            half_edge,
            first,
            second,
            ..
        } => {
            let far = half_edge.opposite();
            let same = t.piece_at(first, far) == t.piece_at(second, far);
            (0, same as u8, piece, half_edge, first, second)
        }
        Move::Cap { disk, circle } => {
            let h = t.pieces[&disk].boundary[0].half_edge;
            (1, 0, disk, h, circle, circle)
        }
    }
}

/// Every applicable move, slides before caps, slides with distinct far-side
/// pieces first, then by identifiers.
pub fn find_moves(t: &TorusPosition) -> Vec<Move> {
    let mut moves = Vec::new();
    for (&pid, piece) in &t.pieces {
        let mut by_edge: BTreeMap<HalfEdge, Vec<CircleId>> = BTreeMap::new();
        for b in &piece.boundary {
            by_edge.entry(b.half_edge).or_default().push(b.circle);
        }
        for (h, mut circles) in by_edge {
            if circles.len() < 2 {
                continue;
            }
            circles.sort();
            let Some(tree) = t.region_trees.get(&h.sphere) else {
                continue;
            };
            for (i, &first) in circles.iter().enumerate() {
                for &second in &circles[i + 1..] {
                    if let Some(region) = tree.shared_region(first, second) {
                        moves.push(Move::Slide {
                            piece: pid,
                            half_edge: h,
                            first,
                            second,
                            region,
                        });
                    }
                }
            }
        }
        if TorusPosition::is_inessential_disk(piece) {
            let slot = piece.boundary[0];
            let Some(tree) = t.region_trees.get(&slot.half_edge.sphere) else {
                continue;
            };
            let innermost = ball_region(t, piece).is_some_and(|r| tree.degree(r) == 1);
            let neighbour = t.piece_at(slot.circle, slot.half_edge.opposite());
            let neighbour_ok = neighbour.is_some_and(|n| n != pid && t.pieces[&n].boundary.len() >= 2);
            if innermost && neighbour_ok {
                moves.push(Move::Cap {
                    disk: pid,
                    circle: slot.circle,
                });
            }
        }
    }
    moves.sort_by_key(|m| move_key(t, m));
    moves
}

/// Region of the disk's sphere on the side of the disk away from both
/// untouched spheres.
fn ball_region(t: &TorusPosition, disk: &Piece) -> Option<RegionId> {
    let slot = disk.boundary.first()?;
    let ball_side = disk.uncrossed_sides.values().next()?.flip();
    let ends = t.region_trees.get(&slot.half_edge.sphere)?.edges.get(&slot.circle)?;
    ends.iter()
        .copied()
        .find(|&r| t.facing_side(slot.circle, slot.half_edge, r) == Some(ball_side))
}

/// Swap the A/B convention of one piece, keeping every other piece's view
/// of the circles unchanged.
pub(crate) fn flip_frame(t: &mut TorusPosition, pid: PieceId) {
    let piece = t.pieces.get_mut(&pid).expect("piece exists");
    piece.flip_labels();
    let slots = piece.boundary.clone();
    for b in slots {
        if let Some(bit) = t.side_transport.get_mut(&b.circle) {
            *bit = !*bit;
        }
        if b.half_edge.end == 0 {
            if let Some(ends) = t
                .region_trees
                .get_mut(&b.half_edge.sphere)
                .and_then(|tr| tr.edges.get_mut(&b.circle))
            {
                ends.swap(0, 1);
            }
        }
    }
}

fn bits_agree(t: &TorusPosition, a: CircleId, b: CircleId) -> bool {
    t.side_transport.get(&a) == t.side_transport.get(&b)
}

/// Apply a move from [`find_moves`], producing the next position.
pub fn apply_move(t: &TorusPosition, m: Move) -> Result<TorusPosition, MoveError> {
    if !find_moves(t).contains(&m) {
        return Err(MoveError::Inapplicable(m));
    }
    match m {
        Move::Slide {
            piece,
            half_edge,
            first,
            second,
            region,
        } => apply_slide(t, m, piece, half_edge, first, second, region),
        Move::Cap { disk, circle } => Ok(apply_cap(t, disk, circle)),
    }
}

fn apply_slide(
    t: &TorusPosition,
    m: Move,
    piece: PieceId,
    h: HalfEdge,
    first: CircleId,
    second: CircleId,
    region: RegionId,
) -> Result<TorusPosition, MoveError> {
    let far = h.opposite();
    let far1 = t.piece_at(first, far).ok_or(MoveError::Inapplicable(m))?;
    let far2 = t.piece_at(second, far).ok_or(MoveError::Inapplicable(m))?;

    let mut next = t.clone();
    if !bits_agree(&next, first, second) {
        let mut fixed = None;
        for candidate in [far2, far1] {
            let mut trial = next.clone();
            flip_frame(&mut trial, candidate);
            if bits_agree(&trial, first, second) {
                fixed = Some(trial);
                break;
            }
        }
        next = fixed.ok_or(MoveError::TransportMismatch(m))?;
    }
    let bit = next.side_transport[&first];
    let sigma = next.facing_side(first, far, region).ok_or(MoveError::Inapplicable(m))?;
    let kept = first.min(second);
    let dropped = first.max(second);

    // region tree: the far regions of both circles merge and hang off the shared region
    let tree = next.region_trees.get_mut(&h.sphere).expect("validated");
    let other_end = |ends: [RegionId; 2]| if ends[0] == region { ends[1] } else { ends[0] };
    let x1 = other_end(tree.edges[&first]);
    let x2 = other_end(tree.edges[&second]);
    let (x_keep, x_drop) = (x1.min(x2), x1.max(x2));
    let mut oriented = tree.edges[&first];
    tree.edges.remove(&first);
    tree.edges.remove(&second);
    for ends in tree.edges.values_mut().chain(std::iter::once(&mut oriented)) {
        for r in ends.iter_mut() {
            if *r == x_drop {
                *r = x_keep;
            }
        }
    }
    tree.nodes.remove(&x_drop);
    tree.edges.insert(kept, oriented);

    next.circles.remove(&dropped);
    next.side_transport.remove(&dropped);
    next.side_transport.insert(kept, bit);

    // the sliding piece is cut along the arc joining the two circles
    let f = next.pieces.get_mut(&piece).expect("piece exists");
    f.boundary
        .retain(|b| !(b.half_edge == h && (b.circle == first || b.circle == second)));
    f.boundary.push(BoundarySlot {
        circle: kept,
        half_edge: h,
    });
    f.boundary.sort();

    // the far-side pieces are banded together across the merged circle
    let owner = |t: &TorusPosition, c: CircleId| t.piece_at(c, far).expect("far side glued");
    let p1 = owner(&next, first);
    let p2 = owner(&next, second);
    let strip = |p: &mut Piece| {
        p.boundary
            .retain(|b| !(b.half_edge == far && (b.circle == first || b.circle == second)));
    };
    if p1 == p2 {
        let p = next.pieces.get_mut(&p1).unwrap();
        strip(p);
        p.boundary.push(BoundarySlot {
            circle: kept,
            half_edge: far,
        });
        p.boundary.sort();
        p.genus += 1;
    } else {
        let mut a = next.pieces.remove(&p1).unwrap();
        let mut b = next.pieces.remove(&p2).unwrap();
        strip(&mut a);
        strip(&mut b);
        let mut merged = Piece {
            pants: a.pants,
            genus: a.genus + b.genus,
            boundary: a.boundary.iter().chain(b.boundary.iter()).copied().collect(),
            uncrossed_sides: BTreeMap::new(),
        };
        merged.boundary.push(BoundarySlot {
            circle: kept,
            half_edge: far,
        });
        merged.boundary.sort();
        let crossed = merged.crossed_half_edges();
        for h2 in next.graph.half_edges_at(merged.pants) {
            if crossed.contains(&h2) {
                continue;
            }
            // a sphere the two pieces see on different sides lies between
            // them, on the side away from the band
            let side = match (a.uncrossed_sides.get(&h2), b.uncrossed_sides.get(&h2)) {
                (Some(&x), Some(&y)) if x != y => sigma.flip(),
                (Some(&x), _) | (None, Some(&x)) => x,
                (None, None) => continue,
            };
            merged.uncrossed_sides.insert(h2, side);
        }
        next.pieces.insert(p1.min(p2), merged);
    }
    Ok(next)
}

fn apply_cap(t: &TorusPosition, disk: PieceId, circle: CircleId) -> TorusPosition {
    let mut next = t.clone();
    let d = next.pieces.remove(&disk).expect("disk exists");
    let h = d.boundary[0].half_edge;
    let far = h.opposite();
    let disk_side = *d.uncrossed_sides.values().next().expect("disk has uncrossed sides");
    let bit = next.side_transport.remove(&circle).unwrap_or(true);
    next.circles.remove(&circle);

    let nid = next.piece_at(circle, far).expect("neighbour glued");
    let n = next.pieces.get_mut(&nid).unwrap();
    n.boundary.retain(|b| !(b.circle == circle && b.half_edge == far));
    if !n.boundary.iter().any(|b| b.half_edge == far) {
        // the neighbour faced the ball with the disk's ball side; the sphere
        // now lies on its other side
        n.uncrossed_sides.insert(far, disk_side.transport(bit));
    }

    let leaf = ball_region(t, &d).expect("cap needs a ball region");
    let tree = next.region_trees.get_mut(&h.sphere).expect("validated");
    tree.edges.remove(&circle);
    tree.nodes.remove(&leaf);
    next
}

/// Outcome of a full normalization run.
#[derive(Clone, Debug)]
pub struct Normalization {
    pub position: TorusPosition,
    pub normal_torus: NormalTorus,
    pub trace: Vec<TraceStep>,
}

/// Apply the first available move until none applies. Returns the fixpoint
/// and the trace; does not require the fixpoint to be normal.
pub fn run_to_fixpoint(t: &TorusPosition) -> Result<(TorusPosition, Vec<TraceStep>), NormalizeError> {
    let mut current = t.clone();
    let mut trace = Vec::new();
    let budget = t.total_intersection();
    while let Some(&m) = find_moves(&current).first() {
        let before = current.intersection_vector();
        let next = apply_move(&current, m)?;
        let after = next.intersection_vector();
        let total_before: usize = before.values().sum();
        let total_after: usize = after.values().sum();
        if total_after + 1 != total_before || after.iter().any(|(s, n)| *n > before[s]) || trace.len() >= budget {
            return Err(NormalizeError::NotMonotone(m));
        }
        trace.push(TraceStep { mv: m, before, after });
        current = next;
    }
    Ok((current, trace))
}

/// Normalize a valid position with at least one intersection circle.
pub fn normalize(t: &TorusPosition) -> Result<Normalization, NormalizeError> {
    if t.total_intersection() == 0 {
        return Err(NormalizeError::DisjointFromSpheres);
    }
    let diags = t.validate();
    if !diags.is_empty() {
        return Err(NormalizeError::Invalid(diags));
    }
    let (position, trace) = run_to_fixpoint(t)?;
    let check = position.is_normal();
    if !check.normal {
        return Err(NormalizeError::StuckNonNormal {
            steps: trace.len(),
            violations: check.violations,
            position: Box::new(position),
        });
    }
    let normal_torus = NormalTorus::from_position(&position)?;
    Ok(Normalization {
        position,
        normal_torus,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ids::SphereId;
    use crate::position::RegionTree;

    #[test]
    fn normal_fixtures_have_no_moves() {
        assert!(find_moves(&fixtures::t0()).is_empty());
        assert!(find_moves(&fixtures::t2()).is_empty());
    }

    #[test]
    fn t1_has_exactly_one_slide() {
        let moves = find_moves(&fixtures::t1());
        assert_eq!(
            moves,
            vec![Move::Slide {
                piece: PieceId(0),
                half_edge: HalfEdge::new(SphereId(0), 0),
                first: CircleId(0),
                second: CircleId(3),
                region: RegionId(0),
            }]
        );
    }

    #[test]
    fn sliding_t1_gives_back_t0() {
        let t1 = fixtures::t1();
        let m = find_moves(&t1)[0];
        let out = apply_move(&t1, m).unwrap();
        assert!(out.validate().is_empty(), "{:?}", out.validate());
        assert_eq!(out, fixtures::t0());
    }

    #[test]
    fn parallel_disk_is_capped() {
        let t = fixtures::t0_with_parallel_disk();
        let moves = find_moves(&t);
        assert_eq!(
            moves,
            vec![Move::Cap {
                disk: PieceId(2),
                circle: CircleId(2)
            }]
        );
        let chi_before = t.pieces[&PieceId(0)].euler_characteristic();
        let out = apply_move(&t, moves[0]).unwrap();
        assert_eq!(out.pieces[&PieceId(0)].euler_characteristic(), chi_before + 1);
        assert_eq!(out.intersection_vector()[&SphereId(2)], 0);
        assert!(out.validate().is_empty(), "{:?}", out.validate());
        assert_eq!(out, fixtures::t0());
    }

    #[test]
    fn slide_onto_one_far_piece_adds_genus() {
        let t = fixtures::double_cylinder();
        let moves = find_moves(&t);
        assert_eq!(moves.len(), 2);
        let out = apply_move(&t, moves[0]).unwrap();
        assert_eq!(out.pieces[&PieceId(1)].genus, 1);
        assert_eq!(out.euler_characteristic(), 0);
        assert!(out.validate().is_empty(), "{:?}", out.validate());
        match normalize(&t) {
            Err(NormalizeError::StuckNonNormal { violations, .. }) => {
                assert!(violations.iter().any(|v| v.contains("genus")), "{violations:?}")
            }
            other => panic!("expected stuck, got {other:?}"),
        }
    }

    #[test]
    fn inapplicable_and_mismatched_moves_are_rejected() {
        let t0 = fixtures::t0();
        let bogus = Move::Cap {
            disk: PieceId(0),
            circle: CircleId(0),
        };
        assert_eq!(apply_move(&t0, bogus), Err(MoveError::Inapplicable(bogus)));

        // same far piece with conflicting bits cannot be re-framed
        let mut t = fixtures::double_cylinder();
        t.side_transport.insert(CircleId(1), false);
        let m = find_moves(&t)[0];
        assert_eq!(apply_move(&t, m), Err(MoveError::TransportMismatch(m)));
    }

    #[test]
    fn normalize_t1_and_t0() {
        let n = normalize(&fixtures::t1()).unwrap();
        assert_eq!(n.trace.len(), 1);
        assert_eq!(n.position, fixtures::t0());
        assert_eq!(n.trace[0].after.values().sum::<usize>(), 2);

        let n0 = normalize(&fixtures::t0()).unwrap();
        assert!(n0.trace.is_empty());
        assert_eq!(n0.normal_torus.nodes.len(), 2);
    }

    #[test]
    fn normalize_rejects_disjoint_and_invalid() {
        let mut t = fixtures::t0();
        t.circles.clear();
        t.side_transport.clear();
        for tree in t.region_trees.values_mut() {
            *tree = RegionTree::single_region(RegionId(tree.nodes.iter().next().unwrap().0));
        }
        for p in t.pieces.values_mut() {
            p.boundary.clear();
        }
        assert_eq!(normalize(&t).unwrap_err(), NormalizeError::DisjointFromSpheres);

        let k = fixtures::klein();
        assert!(matches!(normalize(&k), Err(NormalizeError::Invalid(_))));
    }
}
