//! V-representation polytopes, product polytopes, linear minimization
//! oracles, diameters, and affine hulls.
//!
//! A [`VPolytope`] is the convex hull of an explicit vertex list. The LMO is
//! a single linear pass over that list, one dot product per vertex, with ties
//! broken by lowest index so runs are deterministic. Stored points need not
//! all be extreme points of the hull; operations that require true vertex
//! sets (face enumeration) say so explicitly.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::vecops::{dist, dot};

/// Coordinates below this pairwise gap count as a duplicate vertex at
/// construction and are dropped.
pub const DEDUP_TOL: f64 = 1e-12;

/// Singular values below this threshold (relative to the largest) are treated
/// as zero when computing affine-hull ranks.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum PolytopeError {
    #[error("vertex list is empty")]
    EmptyVertexList,
    #[error("vertex {index} has length {got}, expected {expected}")]
    RaggedVertex {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("dimension mismatch: got {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("product polytope needs at least one block")]
    EmptyProduct,
    #[error("block {index} has ambient dimension {got}, expected {expected}")]
    BlockDimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
}

/// A polytope given as the convex hull of an explicit vertex list in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct VPolytope {
    vertices: Vec<Vec<f64>>,
    dim_ambient: usize,
}

impl VPolytope {
    /// Build a polytope from a vertex list. Verifies the list is non-empty
    /// and rectangular, and drops duplicate vertices (coordinate-wise within
    /// [`DEDUP_TOL`]), keeping first occurrences.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self, PolytopeError> {
        let first = vertices.first().ok_or(PolytopeError::EmptyVertexList)?;
        let n = first.len();
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != n {
                return Err(PolytopeError::RaggedVertex {
                    index: i,
                    got: v.len(),
                    expected: n,
                });
            }
        }
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            let dup = kept
                .iter()
                .any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
            if !dup {
                kept.push(v);
            }
        }
        Ok(Self {
            vertices: kept,
            dim_ambient: n,
        })
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    /// Linear minimization oracle: index and coordinates of the stored vertex
    /// minimizing `<g, v>`. Ties break to the lowest index.
    pub fn lmo(&self, g: &[f64]) -> Result<(usize, &[f64]), PolytopeError> {
        if g.len() != self.dim_ambient {
            return Err(PolytopeError::DimensionMismatch {
                got: g.len(),
                expected: self.dim_ambient,
            });
        }
        let mut best = 0usize;
        let mut best_val = dot(g, &self.vertices[0]);
        for (i, v) in self.vertices.iter().enumerate().skip(1) {
            let val = dot(g, v);
            if val < best_val {
                best = i;
                best_val = val;
            }
        }
        Ok((best, &self.vertices[best]))
    }

    /// Max pairwise Euclidean distance between stored vertices.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, v) in self.vertices.iter().enumerate() {
            for w in &self.vertices[i + 1..] {
                best = best.max(dist(v, w));
            }
        }
        best
    }

    /// Mean of the stored vertices.
    pub fn barycentre(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim_ambient];
        for v in &self.vertices {
            for (bi, vi) in b.iter_mut().zip(v) {
                *bi += vi;
            }
        }
        let m = self.vertices.len() as f64;
        for bi in &mut b {
            *bi /= m;
        }
        b
    }

    /// Translate every vertex by `t`.
    pub fn translate(&self, t: &[f64]) -> Result<Self, PolytopeError> {
        if t.len() != self.dim_ambient {
            return Err(PolytopeError::DimensionMismatch {
                got: t.len(),
                expected: self.dim_ambient,
            });
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(t).map(|(a, b)| a + b).collect())
            .collect();
        Ok(Self {
            vertices,
            dim_ambient: self.dim_ambient,
        })
    }

    /// Intrinsic dimension: rank of the affine hull of the vertex list.
    pub fn intrinsic_dim(&self) -> usize {
        affine_hull(&self.vertices).dim()
    }
}

/// An ordered product of polytope blocks, all in the same ambient dimension.
#[derive(Debug, Clone)]
pub struct ProductPolytope {
    blocks: Vec<VPolytope>,
    block_dim: usize,
}

impl ProductPolytope {
    pub fn new(blocks: Vec<VPolytope>) -> Result<Self, PolytopeError> {
        let first = blocks.first().ok_or(PolytopeError::EmptyProduct)?;
        let n = first.dim_ambient();
        for (i, b) in blocks.iter().enumerate() {
            if b.dim_ambient() != n {
                return Err(PolytopeError::BlockDimensionMismatch {
                    index: i,
                    got: b.dim_ambient(),
                    expected: n,
                });
            }
        }
        Ok(Self {
            blocks,
            block_dim: n,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Ambient dimension of one block.
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Ambient dimension of the product, `n * k`.
    pub fn dim_ambient(&self) -> usize {
        self.block_dim * self.blocks.len()
    }

    pub fn blocks(&self) -> &[VPolytope] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &VPolytope {
        &self.blocks[i]
    }

    /// The `i`-th length-n slice of a product-space vector.
    pub fn block_slice<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.block_dim..(i + 1) * self.block_dim]
    }

    /// Blockwise LMO: block `i` of the result is `lmo(block_i, g^i)`.
    pub fn product_lmo(&self, g: &[f64]) -> Result<Vec<(usize, &[f64])>, PolytopeError> {
        if g.len() != self.dim_ambient() {
            return Err(PolytopeError::DimensionMismatch {
                got: g.len(),
                expected: self.dim_ambient(),
            });
        }
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b.lmo(self.block_slice(g, i)))
            .collect()
    }

    /// Write the coordinates of the product vertex identified by per-block
    /// vertex indices into `out`.
    pub fn vertex_coords_into(&self, indices: &[u32], out: &mut [f64]) {
        debug_assert_eq!(indices.len(), self.blocks.len());
        debug_assert_eq!(out.len(), self.dim_ambient());
        for (i, (&vi, b)) in indices.iter().zip(&self.blocks).enumerate() {
            out[i * self.block_dim..(i + 1) * self.block_dim]
                .copy_from_slice(b.vertex(vi as usize));
        }
    }

    /// Coordinates of the product vertex identified by per-block indices.
    pub fn vertex_coords(&self, indices: &[u32]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_ambient()];
        self.vertex_coords_into(indices, &mut out);
        out
    }

    /// `<g, v>` for the product vertex `v` given by per-block indices,
    /// without materializing the vertex.
    pub fn vertex_dot(&self, indices: &[u32], g: &[f64]) -> f64 {
        indices
            .iter()
            .zip(&self.blocks)
            .enumerate()
            .map(|(i, (&vi, b))| dot(self.block_slice(g, i), b.vertex(vi as usize)))
            .sum()
    }
}

/// An affine subspace given by a base point and an orthonormal basis of its
/// direction space (empty basis for a single point).
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    base_point: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl AffineSubspace {
    pub fn new(base_point: Vec<f64>, basis: Vec<Vec<f64>>) -> Self {
        Self { base_point, basis }
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Dimension of the direction space.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base_point.len()
    }

    /// Residual of `p` after orthogonal projection onto the subspace:
    /// `(p - base) - sum_b <p - base, b> b`. Its norm is the distance from
    /// `p` to the subspace.
    pub fn project_residual(&self, p: &[f64]) -> Vec<f64> {
        debug_assert_eq!(p.len(), self.base_point.len());
        let mut r: Vec<f64> = p
            .iter()
            .zip(&self.base_point)
            .map(|(a, b)| a - b)
            .collect();
        for b in &self.basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        r
    }

    /// Distance from a point to the subspace.
    pub fn distance_to_point(&self, p: &[f64]) -> f64 {
        crate::vecops::norm(&self.project_residual(p))
    }
}

/// Affine hull of a non-empty point sequence: base point is the first point,
/// basis orthonormally spans the differences `p_j - p_0` (rank-revealing SVD
/// with threshold [`RANK_TOL`]).
pub fn affine_hull(points: &[Vec<f64>]) -> AffineSubspace {
    assert!(!points.is_empty(), "affine_hull needs at least one point");
    let base = points[0].clone();
    let n = base.len();
    if points.len() == 1 || n == 0 {
        return AffineSubspace::new(base, Vec::new());
    }
    // Columns are the difference vectors p_j - p_0.
    let m = points.len() - 1;
    let mat = DMatrix::<f64>::from_fn(n, m, |r, c| points[c + 1][r] - base[r]);
    let svd = mat.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = RANK_TOL * smax.max(1.0);
    let mut basis = Vec::new();
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            basis.push(u.column(j).iter().cloned().collect::<Vec<f64>>());
        }
    }
    AffineSubspace::new(base, basis)
}
