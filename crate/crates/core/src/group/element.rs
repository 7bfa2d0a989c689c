use std::fmt;

/// A point of the base Cayley graph.
///
/// Lattice points are integer vectors; elements of the tree-like groups are
/// reduced words stored as flat byte strings of generator indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum GroupElement {
    Lattice(Vec<i32>),
    Word(Vec<u8>),
}

impl GroupElement {
    /// Word length / L1 norm.
    pub fn length(&self) -> u32 {
        match self {
            GroupElement::Lattice(v) => v.iter().map(|c| c.unsigned_abs()).sum(),
            GroupElement::Word(w) => w.len() as u32,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Lattice(v) => v.iter().all(|&c| c == 0),
            GroupElement::Word(w) => w.is_empty(),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => {
                write!(f, "(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            GroupElement::Word(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Word(w) => {
                for (i, g) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "g{g}")?;
                }
                Ok(())
            }
        }
    }
}

/// An edge label of the family tree: either stay put (the identity) or move
/// along generator `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Step(u8);

impl Step {
    pub const STAY: Step = Step(0);

    pub fn generator(g: u8) -> Step {
        assert!(g < u8::MAX, "generator index too large");
        Step(g + 1)
    }

    pub fn generator_index(self) -> Option<u8> {
        self.0.checked_sub(1)
    }

    /// Index into the outcome table `[identity, g_0, g_1, ...]`.
    pub fn outcome(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_outcome(i: usize) -> Step {
        Step(i as u8)
    }
}
