//! Multifrontal sparse direct factorization.
//!
//! Symmetric matrices are factored as `L D Lᵀ`, general ones as `L U` without
//! pivoting. Neither pivots, so the caller must supply matrices whose leading
//! principal minors stay away from zero (positive definite symmetric part is
//! enough). Fronts are dense row-major squares combined by extend-add.

use super::csr::CsrMatrix;
use super::ordering::EliminationTree;
use crate::error::{Error, Result};
use crate::scalar::{axpy_sub, dot, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Symmetric,
    General,
}

#[derive(Debug)]
struct Supernode<T> {
    start: usize,
    k: usize,
    /// Off-block row indices (permuted numbering), sorted.
    rows: Vec<usize>,
    /// Strictly lower part of the pivot block, rows packed: row `j` holds
    /// `L[j][0..j]` at offset `j(j-1)/2`.
    l11: Vec<T>,
    /// Pivots `D` (symmetric) or the diagonal of `U` (general).
    diag: Vec<T>,
    /// `L[r][0..k]` for each off-block row, row-major.
    l21: Vec<T>,
    /// General case only: strictly upper pivot block stored as packed rows
    /// of `Uᵀ`, and `Uᵀ[c][0..k]` for each off-block column.
    u11t: Vec<T>,
    u12t: Vec<T>,
}

/// Factorization of a square sparse matrix along an assembly tree.
#[derive(Debug)]
pub struct Factorization<T> {
    n: usize,
    structure: Structure,
    perm: Vec<usize>,
    nodes: Vec<Supernode<T>>,
}

#[inline]
fn packed(j: usize) -> usize {
    j * j.saturating_sub(1) / 2
}

impl<T: Scalar> Factorization<T> {
    pub fn new(a: &CsrMatrix<T>, tree: &EliminationTree, structure: Structure) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || tree.len() != n {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, ordering covers {}",
                a.nrows(),
                a.ncols(),
                tree.len()
            )));
        }
        let perm = tree.perm.clone();
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let owner = {
            let mut o = vec![0usize; n];
            for (k, nd) in tree.nodes.iter().enumerate() {
                o[nd.start..nd.end].iter_mut().for_each(|x| *x = k);
            }
            o
        };
        let first = tree.subtree_first();
        let transpose = (structure == Structure::General).then(|| a.transpose());

        let max_diag = a.diagonal().iter().fold(T::zero(), |m, d| m.max(d.abs()));
        let tol = max_diag * T::pivot_tolerance();

        let mut stack: Vec<(Vec<usize>, Vec<T>)> = Vec::new();
        let mut nodes: Vec<Supernode<T>> = Vec::with_capacity(tree.nodes.len());
        for (kn, tn) in tree.nodes.iter().enumerate() {
            let (start, end) = (tn.start, tn.end);
            let k = end - start;
            // Children's update matrices sit on top of the stack in order.
            let nchild = tn.children.len();
            let updates = stack.split_off(stack.len() - nchild);

            let mut rows: Vec<usize> = Vec::new();
            for p in start..end {
                let (cols, _) = a.row(perm[p]);
                rows.extend(cols.iter().map(|&c| iperm[c]).filter(|&c| c >= end));
                if let Some(t) = &transpose {
                    let (cols, _) = t.row(perm[p]);
                    rows.extend(cols.iter().map(|&c| iperm[c]).filter(|&c| c >= end));
                }
            }
            for (urows, _) in &updates {
                rows.extend(urows.iter().copied().filter(|&c| c >= end));
            }
            rows.sort_unstable();
            rows.dedup();
            for &r in &rows {
                let o = owner[r];
                let on = &tree.nodes[o];
                if !(first[o] <= first[kn] && on.end >= end) {
                    return Err(Error::InvalidOrdering(format!(
                        "pivot {} of supernode {kn} couples to row {r} outside its ancestors",
                        start
                    )));
                }
            }

            let f = k + rows.len();
            let idx = |g: usize| -> usize {
                if g < end {
                    g - start
                } else {
                    k + rows.binary_search(&g).expect("row present in front")
                }
            };
            let mut front = vec![T::zero(); f * f];
            for p in start..end {
                let lp = p - start;
                let (cols, vals) = a.row(perm[p]);
                for (&c, &v) in cols.iter().zip(vals) {
                    let g = iperm[c];
                    if g < start {
                        continue;
                    }
                    if g < end {
                        front[lp * f + g - start] += v;
                    } else {
                        let lg = idx(g);
                        front[lp * f + lg] += v;
                        if structure == Structure::Symmetric {
                            front[lg * f + lp] += v;
                        }
                    }
                }
                if let Some(t) = &transpose {
                    // Column p below the pivot block: entries A[g][p].
                    let (cols, vals) = t.row(perm[p]);
                    for (&c, &v) in cols.iter().zip(vals) {
                        let g = iperm[c];
                        if g >= end {
                            front[idx(g) * f + lp] += v;
                        }
                    }
                }
            }
            for (urows, umat) in updates {
                let u = urows.len();
                let map: Vec<usize> = urows.iter().map(|&g| idx(g)).collect();
                for (i, &mi) in map.iter().enumerate() {
                    let src = &umat[i * u..(i + 1) * u];
                    let dst = &mut front[mi * f..(mi + 1) * f];
                    for (&mj, &v) in map.iter().zip(src) {
                        dst[mj] += v;
                    }
                }
            }

            let (node, update) = match structure {
                Structure::Symmetric => factor_front_ldlt(&front, f, k, tol, start)?,
                Structure::General => factor_front_lu(&front, f, k, tol, start)?,
            };
            drop(front);
            stack.push((rows.clone(), update));
            nodes.push(Supernode { start, rows, ..node });
        }
        Ok(Self { n, structure, perm, nodes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// Stored factor entries.
    pub fn factor_nnz(&self) -> usize {
        self.nodes
            .iter()
            .map(|s| s.l11.len() + s.diag.len() + s.l21.len() + s.u11t.len() + s.u12t.len())
            .sum()
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&o| b[o]).collect();
        for s in &self.nodes {
            let k = s.k;
            let (head, tail) = x.split_at_mut(s.start + k);
            let xp = &mut head[s.start..];
            for j in 1..k {
                let o = packed(j);
                let d = dot(&s.l11[o..o + j], &xp[..j]);
                xp[j] -= d;
            }
            let off = s.start + k;
            for (r, &g) in s.rows.iter().enumerate() {
                tail[g - off] -= dot(&s.l21[r * k..(r + 1) * k], xp);
            }
        }
        if self.structure == Structure::Symmetric {
            for s in &self.nodes {
                for j in 0..s.k {
                    x[s.start + j] /= s.diag[j];
                }
            }
        }
        for s in self.nodes.iter().rev() {
            let k = s.k;
            let (upper, off) = match self.structure {
                Structure::Symmetric => (&s.l11, &s.l21),
                Structure::General => (&s.u11t, &s.u12t),
            };
            let mut xp: Vec<T> = x[s.start..s.start + k].to_vec();
            for (r, &g) in s.rows.iter().enumerate() {
                axpy_sub(&mut xp, x[g], &off[r * k..(r + 1) * k]);
            }
            for j in (0..k).rev() {
                if self.structure == Structure::General {
                    xp[j] /= s.diag[j];
                }
                let o = packed(j);
                let xj = xp[j];
                axpy_sub(&mut xp[..j], xj, &upper[o..o + j]);
            }
            x[s.start..s.start + k].copy_from_slice(&xp);
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn empty_node<T>() -> Supernode<T> {
    Supernode {
        start: 0,
        k: 0,
        rows: Vec::new(),
        l11: Vec::new(),
        diag: Vec::new(),
        l21: Vec::new(),
        u11t: Vec::new(),
        u12t: Vec::new(),
    }
}

fn check_pivot<T: Scalar>(d: T, tol: T, step: usize) -> Result<()> {
    if !(d.abs() > tol) || !d.is_finite() {
        return Err(Error::SingularPivot { step, value: d.to_f64_lossy() });
    }
    Ok(())
}

/// Partial `L D Lᵀ` of the first `k` columns of a symmetric front. Returns
/// the factor pieces and the Schur complement on the remaining rows.
fn factor_front_ldlt<T: Scalar>(
    front: &[T],
    f: usize,
    k: usize,
    tol: T,
    start: usize,
) -> Result<(Supernode<T>, Vec<T>)> {
    let u = f - k;
    let mut l11 = vec![T::zero(); packed(k)];
    let mut diag = vec![T::zero(); k];
    let mut l21 = vec![T::zero(); u * k];
    // y = L[r] * D for the current row.
    let mut y = vec![T::zero(); k];
    for r in 0..k {
        for j in 0..r {
            let o = packed(j);
            let yj = front[r * f + j] - dot(&y[..j], &l11[o..o + j]);
            y[j] = yj;
            l11[packed(r) + j] = yj / diag[j];
        }
        let o = packed(r);
        let d = front[r * f + r] - dot(&y[..r], &l11[o..o + r]);
        check_pivot(d, tol, start + r)?;
        diag[r] = d;
    }
    let mut w = vec![T::zero(); u * k];
    for r in 0..u {
        let fr = &front[(k + r) * f..(k + r) * f + k];
        let wr = &mut w[r * k..(r + 1) * k];
        for j in 0..k {
            let o = packed(j);
            let yj = fr[j] - dot(&wr[..j], &l11[o..o + j]);
            wr[j] = yj;
            l21[r * k + j] = yj / diag[j];
        }
    }
    let mut s = vec![T::zero(); u * u];
    for r in 0..u {
        for c in 0..=r {
            s[r * u + c] = front[(k + r) * f + k + c];
        }
    }
    // Four rows of W per pass so each row of L21 is read once per block.
    let mut r = 0;
    while r < u {
        let nb = (u - r).min(4);
        for c in 0..r + nb {
            let lc = &l21[c * k..(c + 1) * k];
            for b in 0..nb {
                let rr = r + b;
                if c <= rr {
                    s[rr * u + c] -= dot(&w[rr * k..(rr + 1) * k], lc);
                }
            }
        }
        r += nb;
    }
    for r in 0..u {
        for c in r + 1..u {
            s[r * u + c] = s[c * u + r];
        }
    }
    let node = Supernode { k, l11, diag, l21, ..empty_node() };
    Ok((node, s))
}

/// Partial Crout `L U` of the first `k` rows and columns of a general front.
fn factor_front_lu<T: Scalar>(
    front: &[T],
    f: usize,
    k: usize,
    tol: T,
    start: usize,
) -> Result<(Supernode<T>, Vec<T>)> {
    let u = f - k;
    let mut l11 = vec![T::zero(); packed(k)];
    let mut u11t = vec![T::zero(); packed(k)];
    let mut diag = vec![T::zero(); k];
    let mut l21 = vec![T::zero(); u * k];
    let mut u12t = vec![T::zero(); u * k];
    for j in 0..k {
        // Row j of U: diagonal, remaining pivot columns, off-block columns.
        let oj = packed(j);
        let d = front[j * f + j] - dot(&l11[oj..oj + j], &u11t[oj..oj + j]);
        check_pivot(d, tol, start + j)?;
        diag[j] = d;
        for c in j + 1..k {
            let oc = packed(c);
            let v = front[j * f + c] - dot(&l11[oj..oj + j], &u11t[oc..oc + j]);
            u11t[oc + j] = v;
        }
        for c in 0..u {
            let v = front[j * f + k + c] - dot(&l11[oj..oj + j], &u12t[c * k..c * k + j]);
            u12t[c * k + j] = v;
        }
        // Column j of L.
        for r in j + 1..k {
            let or = packed(r);
            let v = front[r * f + j] - dot(&l11[or..or + j], &u11t[oj..oj + j]);
            l11[or + j] = v / d;
        }
        for r in 0..u {
            let v = front[(k + r) * f + j] - dot(&l21[r * k..r * k + j], &u11t[oj..oj + j]);
            l21[r * k + j] = v / d;
        }
    }
    let mut s = vec![T::zero(); u * u];
    for r in 0..u {
        let lr = &l21[r * k..(r + 1) * k];
        for c in 0..u {
            s[r * u + c] = front[(k + r) * f + k + c] - dot(lr, &u12t[c * k..(c + 1) * k]);
        }
    }
    let node = Supernode { k, l11, diag, l21, u11t, u12t, ..empty_node() };
    Ok((node, s))
}
