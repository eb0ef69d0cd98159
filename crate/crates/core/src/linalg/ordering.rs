//! Assembly trees for the multifrontal factorization.
//!
//! A tree lists supernodes in postorder. Each supernode owns a contiguous
//! range of pivots in the permuted numbering, and every subtree owns a
//! contiguous range ending at its root's last pivot.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TreeNode {
    /// First pivot (permuted numbering).
    pub start: usize,
    /// One past the last pivot.
    pub end: usize,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct EliminationTree {
    /// `perm[new] = old`.
    pub(crate) perm: Vec<usize>,
    pub(crate) nodes: Vec<TreeNode>,
}

impl EliminationTree {
    /// Builds a tree from a permutation and supernodes listed in postorder.
    /// Structural consistency with a matrix is checked at factorization time.
    pub fn new(perm: Vec<usize>, nodes: Vec<TreeNode>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidOrdering("permutation is not a bijection".into()));
            }
        }
        let mut next = 0;
        for (k, node) in nodes.iter().enumerate() {
            if node.start != next || node.end < node.start {
                return Err(Error::InvalidOrdering(format!("supernode {k} does not continue the pivot sequence")));
            }
            next = node.end;
            for &c in &node.children {
                if c >= k || nodes[c].parent != Some(k) {
                    return Err(Error::InvalidOrdering(format!("supernode {k} has an inconsistent child {c}")));
                }
            }
            if let Some(p) = node.parent {
                if p <= k || p >= nodes.len() {
                    return Err(Error::InvalidOrdering(format!("supernode {k} has parent {p} out of postorder")));
                }
            }
        }
        if next != n {
            return Err(Error::InvalidOrdering(format!("supernodes cover {next} of {n} pivots")));
        }
        Ok(Self { perm, nodes })
    }

    /// One dense supernode holding every unknown in natural order.
    pub fn dense(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            nodes: vec![TreeNode { start: 0, end: n, children: vec![], parent: None }],
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// First pivot of the subtree rooted at `k`.
    pub(crate) fn subtree_first(&self) -> Vec<usize> {
        let mut first: Vec<usize> = self.nodes.iter().map(|n| n.start).collect();
        for k in 0..self.nodes.len() {
            for &c in &self.nodes[k].children {
                first[k] = first[k].min(first[c]);
            }
        }
        first
    }
}

#[derive(Clone, Copy, Debug)]
struct Span {
    lo: usize,
    len: usize,
    /// The span is a whole periodic axis, so its ends are adjacent.
    wraps: bool,
}

/// Nested dissection of a structured `nx × ny` vertex grid.
///
/// `periodic[a]` marks axes whose first and last vertices are coupled.
/// `dof(ix, iy, c)` gives the matrix index of component `c` at a vertex, or
/// `None` when that unknown has been eliminated (Dirichlet node, pinned node).
pub fn grid_nested_dissection(
    nx: usize,
    ny: usize,
    periodic: [bool; 2],
    m: usize,
    leaf_vertices: usize,
    dof: impl Fn(usize, usize, usize) -> Option<usize>,
) -> Result<EliminationTree> {
    let mut b = Builder { m, leaf: leaf_vertices.max(1), dof: &dof, perm: Vec::new(), nodes: Vec::new() };
    let root = b.region(
        Span { lo: 0, len: nx, wraps: periodic[0] },
        Span { lo: 0, len: ny, wraps: periodic[1] },
        nx,
        ny,
    );
    if let Some(r) = root {
        b.nodes[r].parent = None;
    }
    let Builder { perm, nodes, .. } = b;
    EliminationTree::new(perm, nodes)
}

struct Builder<'a, F> {
    m: usize,
    leaf: usize,
    dof: &'a F,
    perm: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl<F: Fn(usize, usize, usize) -> Option<usize>> Builder<'_, F> {
    fn push_vertex(&mut self, ix: usize, iy: usize) {
        for c in 0..self.m {
            if let Some(d) = (self.dof)(ix, iy, c) {
                self.perm.push(d);
            }
        }
    }

    fn region(&mut self, sx: Span, sy: Span, nx: usize, ny: usize) -> Option<usize> {
        if sx.len == 0 || sy.len == 0 {
            return None;
        }
        let start = self.perm.len();
        let mut children = Vec::new();
        if sx.len * sy.len <= self.leaf || (sx.len < 3 && sy.len < 3) {
            for j in 0..sy.len {
                for i in 0..sx.len {
                    self.push_vertex((sx.lo + i) % nx, (sy.lo + j) % ny);
                }
            }
        } else {
            let split_x = sx.len >= sy.len;
            let (s, other) = if split_x { (sx, sy) } else { (sy, sx) };
            let (n_s, n_o) = if split_x { (nx, ny) } else { (ny, nx) };
            // Separator lines as offsets into `s`, and the two open pieces.
            let (cuts, pieces): (Vec<usize>, [Span; 2]) = if s.wraps {
                let half = s.len / 2;
                (
                    vec![0, half],
                    [
                        Span { lo: s.lo + 1, len: half.saturating_sub(1), wraps: false },
                        Span { lo: s.lo + half + 1, len: s.len - half - 1, wraps: false },
                    ],
                )
            } else {
                let mid = s.len / 2;
                (
                    vec![mid],
                    [
                        Span { lo: s.lo, len: mid, wraps: false },
                        Span { lo: s.lo + mid + 1, len: s.len - mid - 1, wraps: false },
                    ],
                )
            };
            let start_children = self.perm.len();
            for piece in pieces {
                let child = if split_x {
                    self.region(piece, other, nx, ny)
                } else {
                    self.region(other, piece, nx, ny)
                };
                children.extend(child);
            }
            let sep_start = self.perm.len();
            debug_assert!(sep_start >= start_children);
            for &cut in &cuts {
                let line = (s.lo + cut) % n_s;
                for t in 0..other.len {
                    let o = (other.lo + t) % n_o;
                    if split_x {
                        self.push_vertex(line, o);
                    } else {
                        self.push_vertex(o, line);
                    }
                }
            }
            if self.perm.len() == sep_start {
                // Separator carries no unknowns: splice the children into
                // a single chain so every subtree stays contiguous.
                return match children.len() {
                    0 => None,
                    1 => Some(children[0]),
                    _ => Some(self.finish(sep_start, children)),
                };
            }
            let k = self.finish(sep_start, children);
            return Some(k);
        }
        if self.perm.len() == start {
            return None;
        }
        Some(self.finish(start, children))
    }

    fn finish(&mut self, start: usize, children: Vec<usize>) -> usize {
        let k = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(k);
        }
        self.nodes.push(TreeNode { start, end: self.perm.len(), children, parent: None });
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_tree_is_single_node() {
        let t = EliminationTree::dense(5);
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn bad_permutation_rejected() {
        let nodes = vec![TreeNode { start: 0, end: 2, children: vec![], parent: None }];
        assert!(matches!(EliminationTree::new(vec![0, 0], nodes), Err(Error::InvalidOrdering(_))));
    }

    #[test]
    fn dissection_covers_every_dof_once() {
        for &(n, periodic) in &[(17usize, [false, false]), (16, [true, true]), (9, [true, false])] {
            let tree = grid_nested_dissection(n, n, periodic, 2, 8, |i, j, c| Some(2 * (j * n + i) + c)).unwrap();
            assert_eq!(tree.len(), 2 * n * n);
            let root = tree.nodes().last().unwrap();
            assert!(root.parent.is_none());
            assert_eq!(tree.nodes().iter().filter(|nd| nd.parent.is_none()).count(), 1);
        }
    }

    #[test]
    fn dissection_skips_eliminated_vertices() {
        let n = 10;
        let tree = grid_nested_dissection(n, n, [false, false], 1, 4, |i, j, _| {
            (i > 0 && j > 0 && i < n - 1 && j < n - 1).then(|| (j - 1) * (n - 2) + (i - 1))
        })
        .unwrap();
        assert_eq!(tree.len(), (n - 2) * (n - 2));
    }
}
