//! Typed identifiers. Each serializes as a prefixed string (`p3`, `s0`, `F2`,
//! `c7`, `r1`) so that files stay readable and ids can key JSON maps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! prefixed_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .and_then(|rest| rest.parse::<u32>().ok())
                    .map($name)
                    .ok_or_else(|| format!("expected identifier of the form {}<n>, got {:?}", $prefix, s))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

prefixed_id!(
    /// A pants (3-punctured 3-sphere), i.e. a trivalent vertex of the sphere graph.
    PVertex, "p"
);
prefixed_id!(
    /// A sphere of the system, i.e. an edge of the sphere graph.
    SphereId, "s"
);
prefixed_id!(
    /// A connected component of the torus inside one pants.
    PieceId, "F"
);
prefixed_id!(
    /// An intersection circle of the torus with a sphere.
    CircleId, "c"
);
prefixed_id!(
    /// A complementary region of the circles on one sphere.
    RegionId, "r"
);

/// One end of a sphere edge: the sphere seen from the pants on that side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub sphere: SphereId,
    pub end: u8,
}

impl HalfEdge {
    pub fn new(sphere: SphereId, end: u8) -> Self {
        debug_assert!(end < 2);
        HalfEdge { sphere, end }
    }

    /// The other end of the same sphere.
    pub fn opposite(self) -> Self {
        HalfEdge {
            sphere: self.sphere,
            end: 1 - self.end,
        }
    }
}

impl fmt::Display for HalfEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sphere, self.end)
    }
}

impl FromStr for HalfEdge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sphere, end) = s
            .split_once(':')
            .ok_or_else(|| format!("expected half-edge of the form s<n>:<0|1>, got {s:?}"))?;
        let end: u8 = match end {
            "0" => 0,
            "1" => 1,
            _ => return Err(format!("half-edge end must be 0 or 1, got {s:?}")),
        };
        Ok(HalfEdge {
            sphere: sphere.parse()?,
            end,
        })
    }
}

impl Serialize for HalfEdge {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HalfEdge {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which complementary side of a piece something lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    /// Carry a side label across a circle whose transport bit is `bit`.
    pub fn transport(self, bit: bool) -> Side {
        if bit {
            self
        } else {
            self.flip()
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}
