//! Vitali selection, density covers, sparse trees and martingale
//! disjointification.

mod cover;
mod disjoint;
mod tree;
mod vitali;

pub use cover::{child_cover, density_points};
pub use disjoint::{default_order, disjointify, disjointify_with_order, MartingaleFamily, SetTree};
pub use tree::{alpha_threshold, rank_of, sparsify_tree, top_atoms, SparseTree, TreeNode, TreeStats, MAX_TREE_NODES};
pub use vitali::{vitali_cover, vitali_indices};
