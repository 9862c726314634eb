//! Small hand-built positions on the theta graph (rank 2, spheres s0, s1, s2
//! all running from p0 to p1). Used throughout the tests; the same positions
//! ship as JSON under `tests/data`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{build_standard, SphereGraph};
use crate::ids::{CircleId, HalfEdge, PVertex, PieceId, RegionId, Side, SphereId};
use crate::position::{BoundarySlot, Circle, Piece, RegionTree, TorusPosition};

pub fn theta() -> Arc<SphereGraph> {
    Arc::new(build_standard(2).expect("rank 2 is supported"))
}

fn he(s: u32, end: u8) -> HalfEdge {
    HalfEdge::new(SphereId(s), end)
}

/// `slots` are (circle, sphere, end); `labels` are (sphere, end, side).
pub(crate) fn piece(p: u32, slots: &[(u32, u32, u8)], labels: &[(u32, u8, Side)]) -> Piece {
    Piece {
        pants: PVertex(p),
        genus: 0,
        boundary: slots
            .iter()
            .map(|&(c, s, end)| BoundarySlot {
                circle: CircleId(c),
                half_edge: he(s, end),
            })
            .collect(),
        uncrossed_sides: labels.iter().map(|&(s, end, side)| (he(s, end), side)).collect(),
    }
}

type TreeEdges<'a> = (u32, &'a [(u32, u32, u32)]);

/// `trees` lists, per sphere, (circle, region, region) edges; spheres without
/// circles get a single region.
pub(crate) fn assemble(
    graph: Arc<SphereGraph>,
    pieces: Vec<(u32, Piece)>,
    circles: &[(u32, u32)],
    trees: &[TreeEdges<'_>],
    lone_regions: &[(u32, u32)],
) -> TorusPosition {
    let mut region_trees = BTreeMap::new();
    for &(s, edges) in trees {
        let mut t = RegionTree::default();
        for &(c, a, b) in edges {
            t.nodes.insert(RegionId(a));
            t.nodes.insert(RegionId(b));
            t.edges.insert(CircleId(c), [RegionId(a), RegionId(b)]);
        }
        region_trees.insert(SphereId(s), t);
    }
    for &(s, r) in lone_regions {
        region_trees.insert(SphereId(s), RegionTree::single_region(RegionId(r)));
    }
    TorusPosition {
        graph,
        pieces: pieces.into_iter().map(|(id, p)| (PieceId(id), p)).collect(),
        circles: circles
            .iter()
            .map(|&(c, s)| (CircleId(c), Circle { sphere: SphereId(s) }))
            .collect(),
        region_trees,
        side_transport: circles.iter().map(|&(c, _)| (CircleId(c), true)).collect(),
    }
}

/// Boundary of a neighbourhood of a loop crossing s0 and s1: two cylinders.
pub fn t0() -> TorusPosition {
    assemble(
        theta(),
        vec![
            (0, piece(0, &[(0, 0, 0), (1, 1, 0)], &[(2, 0, Side::A)])),
            (1, piece(1, &[(0, 0, 1), (1, 1, 1)], &[(2, 1, Side::A)])),
        ],
        &[(0, 0), (1, 1)],
        &[(0, &[(0, 1, 0)]), (1, &[(1, 2, 3)])],
        &[(2, 4)],
    )
}

/// t0 after one inverse slide: c0 split into c0 and c3 on s0. F0 meets s0
/// twice; F1 is now an essential disk on c0 and F2 a cylinder on {c3, c1}.
/// The shared region r0 faces side B of F1 and F2, so s2 lies on side B of F2.
pub fn t1() -> TorusPosition {
    assemble(
        theta(),
        vec![
            (0, piece(0, &[(0, 0, 0), (3, 0, 0), (1, 1, 0)], &[(2, 0, Side::A)])),
            (1, piece(1, &[(0, 0, 1)], &[(1, 1, Side::B), (2, 1, Side::A)])),
            (2, piece(1, &[(3, 0, 1), (1, 1, 1)], &[(2, 1, Side::B)])),
        ],
        &[(0, 0), (1, 1), (3, 0)],
        &[(0, &[(0, 1, 0), (3, 5, 0)]), (1, &[(1, 2, 3)])],
        &[(2, 4)],
    )
}

/// A pants piece in p0, a cylinder and an essential disk in p1.
pub fn t2() -> TorusPosition {
    assemble(
        theta(),
        vec![
            (0, piece(0, &[(0, 0, 0), (1, 1, 0), (2, 2, 0)], &[])),
            (1, piece(1, &[(0, 0, 1), (1, 1, 1)], &[(2, 1, Side::A)])),
            (2, piece(1, &[(2, 2, 1)], &[(0, 1, Side::A), (1, 1, Side::B)])),
        ],
        &[(0, 0), (1, 1), (2, 2)],
        &[(0, &[(0, 0, 1)]), (1, &[(1, 2, 3)]), (2, &[(2, 4, 5)])],
        &[],
    )
}

/// t0 with the transport bit of c1 flipped.
pub fn klein() -> TorusPosition {
    let mut t = t0();
    t.side_transport.insert(CircleId(1), false);
    t
}

/// t0 with a boundary-parallel disk F2 in p1 glued to F0 along a new circle
/// c2 on s2 (F0 becomes pants-like).
pub fn t0_with_parallel_disk() -> TorusPosition {
    assemble(
        theta(),
        vec![
            (0, piece(0, &[(0, 0, 0), (1, 1, 0), (2, 2, 0)], &[])),
            (1, piece(1, &[(0, 0, 1), (1, 1, 1)], &[(2, 1, Side::A)])),
            (2, piece(1, &[(2, 2, 1)], &[(0, 1, Side::A), (1, 1, Side::A)])),
        ],
        &[(0, 0), (1, 1), (2, 2)],
        &[(0, &[(0, 1, 0)]), (1, &[(1, 2, 3)]), (2, &[(2, 4, 5)])],
        &[],
    )
}

/// Two cylinders that both run twice through s0 and are glued to each other
/// along both circles. A valid (inessential) torus position whose only slide
/// has the same far-side piece for both circles.
pub fn double_cylinder() -> TorusPosition {
    assemble(
        theta(),
        vec![
            (
                0,
                piece(0, &[(0, 0, 0), (1, 0, 0)], &[(1, 0, Side::A), (2, 0, Side::A)]),
            ),
            (
                1,
                piece(1, &[(0, 0, 1), (1, 0, 1)], &[(1, 1, Side::A), (2, 1, Side::A)]),
            ),
        ],
        &[(0, 0), (1, 0)],
        &[(0, &[(0, 0, 1), (1, 0, 2)])],
        &[(1, 3), (2, 4)],
    )
}

/// t0 with every piece's A/B convention swapped: the same torus with the
/// opposite transverse orientation.
pub fn t0_flipped() -> TorusPosition {
    let mut t = t0();
    let ids: Vec<PieceId> = t.pieces.keys().copied().collect();
    for pid in ids {
        crate::normalize::flip_frame(&mut t, pid);
    }
    t
}

/// Every fixture under its file name.
pub fn named() -> Vec<(&'static str, TorusPosition)> {
    vec![
        ("t0", t0()),
        ("t0-flipped", t0_flipped()),
        ("t1", t1()),
        ("t2", t2()),
        ("klein", klein()),
        ("parallel-disk", t0_with_parallel_disk()),
        ("double-cylinder", double_cylinder()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_validate() {
        for (name, t) in named() {
            if name == "klein" {
                continue;
            }
            assert!(t.validate().is_empty(), "{name}: {:?}", t.validate());
            assert!(t.parity_violations().is_empty(), "{name}");
        }
    }

    #[test]
    fn flipping_every_frame_flips_every_label() {
        let (t, f) = (t0(), t0_flipped());
        assert_eq!(f.side_transport, t.side_transport);
        for (pid, p) in &t.pieces {
            for (h, side) in &p.uncrossed_sides {
                assert_eq!(f.pieces[pid].uncrossed_sides[h], side.flip());
            }
        }
    }
}
