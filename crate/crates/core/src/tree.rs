//! Combinatorics and addressing of the infinite d-regular tree.
//!
//! The tree is never materialized; this module only answers structural
//! questions: how many vertices a level has, who a vertex's parent and
//! children are, and at which distance from the root an edge sits.
//!
//! Addressing: the root is the empty path. Its d children are indexed
//! 0..d-1; every deeper vertex has d-1 children indexed 0..d-2.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;
use std::fmt;

/// Degree configuration of the tree. Fixes all level combinatorics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    d: u32,
}

impl TreeConfig {
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDegree(d));
        }
        Ok(TreeConfig { d })
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    /// Number of children of a vertex at the given level: d at the root,
    /// d-1 everywhere else.
    pub fn branching(&self, level: u32) -> u32 {
        if level == 0 {
            self.d
        } else {
            self.d - 1
        }
    }

    /// |V_k|: 1 at the root level, d*(d-1)^(k-1) for k >= 1.
    pub fn level_size(&self, k: u32) -> BigUint {
        if k == 0 {
            return BigUint::one();
        }
        BigUint::from(self.d) * BigUint::from(self.d - 1).pow(k - 1)
    }
}

/// Path from the root: the sequence of child indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VertexAddress {
    path: Vec<u32>,
}

impl VertexAddress {
    pub fn root() -> Self {
        VertexAddress { path: Vec::new() }
    }

    /// Validates each index against the branching bound of its position.
    pub fn new(cfg: TreeConfig, path: Vec<u32>) -> Result<Self> {
        for (position, &index) in path.iter().enumerate() {
            let bound = cfg.branching(position as u32);
            if index >= bound {
                return Err(Error::InvalidAddress {
                    index,
                    position,
                    bound,
                });
            }
        }
        Ok(VertexAddress { path })
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// Distance from the root.
    pub fn level(&self) -> u32 {
        self.path.len() as u32
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    /// Drops the last path index.
    pub fn parent(&self) -> Result<VertexAddress> {
        if self.path.is_empty() {
            return Err(Error::RootHasNoParent);
        }
        let mut path = self.path.clone();
        path.pop();
        Ok(VertexAddress { path })
    }

    /// Children in index order: d of them at the root, d-1 otherwise.
    pub fn children(&self, cfg: TreeConfig) -> Vec<VertexAddress> {
        let n = cfg.branching(self.level());
        (0..n)
            .map(|i| {
                let mut path = self.path.clone();
                path.push(i);
                VertexAddress { path }
            })
            .collect()
    }

    /// Distance from the root to the edge (parent(self), self): the smaller
    /// of the two endpoint levels.
    pub fn edge_level(&self) -> Result<u32> {
        if self.path.is_empty() {
            return Err(Error::NoEdgeAtRoot);
        }
        Ok(self.level() - 1)
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, idx) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "]")
    }
}
