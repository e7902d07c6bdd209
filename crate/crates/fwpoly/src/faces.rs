//! Proper faces and facets of small V-polytopes via supporting-hyperplane
//! certificates.
//!
//! A vertex subset S is a face exactly when some linear functional is
//! constant on S and strictly smaller on every other vertex. We decide this
//! with a small LP that maximizes the separation margin under the
//! normalization `|w|_inf <= 1`; the optimal margin is an auditable witness.
//! Enumeration is exhaustive over vertex subsets (2^|V|) with a hard cap,
//! which is the right trade for the desk-scale instances that condition
//! numbers are computed on. Everything here assumes the stored vertex list
//! is in convex position (all points extreme).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polytope::{affine_hull, VPolytope};
use crate::simplex::{solve_lp, LpOutcome};

/// A subset S is declared a face when the maximized separation margin
/// exceeds this threshold.
pub const FACE_MARGIN_TOL: f64 = 1e-8;

/// Default cap on the vertex count for exhaustive face enumeration.
pub const DEFAULT_FACE_CAP: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum FaceError {
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("vertex index {index} out of range (polytope has {len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("face enumeration cap exceeded: {vertices} vertices > cap {cap}")]
    CapExceeded { vertices: usize, cap: usize },
    #[error("certificate LP did not converge")]
    LpFailure,
}

/// A face of a parent polytope, stored as the sorted indices of its vertices
/// plus the intrinsic dimension of its affine hull.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub vertex_indices: Vec<usize>,
    pub dim: usize,
}

impl Face {
    /// The improper face consisting of every vertex of `p`.
    pub fn full(p: &VPolytope) -> Self {
        Face {
            vertex_indices: (0..p.num_vertices()).collect(),
            dim: p.intrinsic_dim(),
        }
    }

    pub fn is_full(&self, p: &VPolytope) -> bool {
        self.vertex_indices.len() == p.num_vertices()
    }

    /// Coordinates of this face's vertices.
    pub fn vertex_coords(&self, p: &VPolytope) -> Vec<Vec<f64>> {
        self.vertex_indices
            .iter()
            .map(|&i| p.vertex(i).to_vec())
            .collect()
    }

    /// Coordinates of the parent's vertices outside this face.
    pub fn complement_coords(&self, p: &VPolytope) -> Vec<Vec<f64>> {
        (0..p.num_vertices())
            .filter(|i| !self.vertex_indices.contains(i))
            .map(|i| p.vertex(i).to_vec())
            .collect()
    }
}

fn checked_sorted_subset(p: &VPolytope, subset: &[usize]) -> Result<Vec<usize>, FaceError> {
    if subset.is_empty() {
        return Err(FaceError::EmptySubset);
    }
    let len = p.num_vertices();
    for &i in subset {
        if i >= len {
            return Err(FaceError::IndexOutOfRange { index: i, len });
        }
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Maximized separation margin for the subset S: the largest m such that
/// some functional (w, c) with `|w|_inf <= 1` satisfies `<w, v> = c` on S
/// and `<w, u> <= c - m` off S. Positive margins certify a face; the full
/// set is a face of the polytope itself (margin reported as infinity).
pub fn face_margin(p: &VPolytope, subset: &[usize]) -> Result<f64, FaceError> {
    let s = checked_sorted_subset(p, subset)?;
    if s.len() == p.num_vertices() {
        return Ok(f64::INFINITY);
    }
    let n = p.dim_ambient();
    // Variables (all nonnegative): wp (n), wn (n), cp, cn, mp, mn with
    // w = wp - wn, c = cp - cn, m = mp - mn.
    let n_vars = 2 * n + 4;
    let mut objective = vec![0.0; n_vars];
    objective[2 * n + 2] = 1.0;
    objective[2 * n + 3] = -1.0;

    let mut a_eq = Vec::with_capacity(s.len());
    let b_eq = vec![0.0; s.len()];
    for &vi in &s {
        let v = p.vertex(vi);
        let mut row = vec![0.0; n_vars];
        row[..n].copy_from_slice(v);
        for j in 0..n {
            row[n + j] = -v[j];
        }
        row[2 * n] = -1.0;
        row[2 * n + 1] = 1.0;
        a_eq.push(row);
    }

    let mut a_ub = Vec::new();
    let mut b_ub = Vec::new();
    let in_s = |i: usize| s.binary_search(&i).is_ok();
    for i in 0..p.num_vertices() {
        if in_s(i) {
            continue;
        }
        let u = p.vertex(i);
        let mut row = vec![0.0; n_vars];
        row[..n].copy_from_slice(u);
        for j in 0..n {
            row[n + j] = -u[j];
        }
        row[2 * n] = -1.0;
        row[2 * n + 1] = 1.0;
        row[2 * n + 2] = 1.0;
        row[2 * n + 3] = -1.0;
        a_ub.push(row);
        b_ub.push(0.0);
    }
    // |w_j| <= 1 as two rows per coordinate.
    for j in 0..n {
        let mut hi = vec![0.0; n_vars];
        hi[j] = 1.0;
        hi[n + j] = -1.0;
        a_ub.push(hi);
        b_ub.push(1.0);
        let mut lo = vec![0.0; n_vars];
        lo[j] = -1.0;
        lo[n + j] = 1.0;
        a_ub.push(lo);
        b_ub.push(1.0);
    }

    match solve_lp(&objective, &a_eq, &b_eq, &a_ub, &b_ub) {
        Ok(LpOutcome::Optimal { value, .. }) => Ok(value),
        // w = 0, c = 0, m = 0 is always feasible and the margin is bounded
        // under the box normalization, so neither branch is reachable.
        Ok(LpOutcome::Infeasible) | Ok(LpOutcome::Unbounded) => Err(FaceError::LpFailure),
        Err(_) => Err(FaceError::LpFailure),
    }
}

/// Whether the vertex subset S spans a face of `p`.
pub fn is_face(p: &VPolytope, subset: &[usize]) -> Result<bool, FaceError> {
    Ok(face_margin(p, subset)? > FACE_MARGIN_TOL)
}

/// All proper faces of `p` by exhaustive subset check, each annotated with
/// the dimension of its affine hull. Output is sorted by vertex-index set.
pub fn enumerate_proper_faces(p: &VPolytope) -> Result<Vec<Face>, FaceError> {
    enumerate_proper_faces_capped(p, DEFAULT_FACE_CAP)
}

/// As [`enumerate_proper_faces`] with an explicit vertex-count cap.
pub fn enumerate_proper_faces_capped(p: &VPolytope, cap: usize) -> Result<Vec<Face>, FaceError> {
    let m = p.num_vertices();
    if m > cap {
        return Err(FaceError::CapExceeded { vertices: m, cap });
    }
    let mut out = Vec::new();
    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut subset = Vec::with_capacity(m);
    for mask in 1..full {
        subset.clear();
        for i in 0..m {
            if mask & (1u64 << i) != 0 {
                subset.push(i);
            }
        }
        if is_face(p, &subset)? {
            let coords = subset.iter().map(|&i| p.vertex(i).to_vec()).collect::<Vec<_>>();
            let dim = affine_hull(&coords).dim();
            out.push(Face {
                vertex_indices: subset.clone(),
                dim,
            });
        }
    }
    out.sort();
    Ok(out)
}

/// The facets of `p`: proper faces of dimension `dim(p) - 1`.
pub fn facets(p: &VPolytope) -> Result<Vec<Face>, FaceError> {
    facets_capped(p, DEFAULT_FACE_CAP)
}

/// As [`facets`] with an explicit vertex-count cap.
pub fn facets_capped(p: &VPolytope, cap: usize) -> Result<Vec<Face>, FaceError> {
    let d = p.intrinsic_dim();
    let faces = enumerate_proper_faces_capped(p, cap)?;
    Ok(faces.into_iter().filter(|f| f.dim + 1 == d).collect())
}

/// Faces of a product from the factors' face lists. Inputs must contain each
/// factor's proper faces plus its full face; the output holds every product
/// `f1 x f2` except the full product, in the product's row-major vertex
/// indexing (`i * nq + j`), sorted by vertex-index set.
pub fn product_faces(
    faces_p: &[Face],
    np: usize,
    faces_q: &[Face],
    nq: usize,
) -> Vec<Face> {
    let mut out = Vec::with_capacity(faces_p.len() * faces_q.len());
    for f1 in faces_p {
        for f2 in faces_q {
            if f1.vertex_indices.len() == np && f2.vertex_indices.len() == nq {
                continue;
            }
            let mut idx = Vec::with_capacity(f1.vertex_indices.len() * f2.vertex_indices.len());
            for &i in &f1.vertex_indices {
                for &j in &f2.vertex_indices {
                    idx.push(i * nq + j);
                }
            }
            idx.sort_unstable();
            out.push(Face {
                vertex_indices: idx,
                dim: f1.dim + f2.dim,
            });
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> VPolytope {
        VPolytope::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap()
    }

    fn triangle() -> VPolytope {
        VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn unit_cube() -> VPolytope {
        let mut v = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    v.push(vec![x as f64, y as f64, z as f64]);
                }
            }
        }
        VPolytope::new(v).unwrap()
    }

    #[test]
    fn square_vertex_is_face() {
        assert!(is_face(&unit_square(), &[0]).unwrap());
    }

    #[test]
    fn square_diagonal_is_not_face() {
        assert!(!is_face(&unit_square(), &[0, 3]).unwrap());
    }

    #[test]
    fn square_bottom_edge_is_face() {
        assert!(is_face(&unit_square(), &[0, 1]).unwrap());
    }

    #[test]
    fn subset_errors() {
        assert_eq!(
            is_face(&unit_square(), &[]).unwrap_err(),
            FaceError::EmptySubset
        );
        assert!(matches!(
            is_face(&unit_square(), &[7]),
            Err(FaceError::IndexOutOfRange { index: 7, len: 4 })
        ));
    }

    #[test]
    fn segment_has_two_proper_faces() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let faces = enumerate_proper_faces(&seg).unwrap();
        assert_eq!(faces.len(), 2);
        assert!(faces.iter().all(|f| f.dim == 0));
    }

    #[test]
    fn square_has_eight_proper_faces() {
        let faces = enumerate_proper_faces(&unit_square()).unwrap();
        assert_eq!(faces.len(), 8);
        let verts = faces.iter().filter(|f| f.dim == 0).count();
        let edges = faces.iter().filter(|f| f.dim == 1).count();
        assert_eq!((verts, edges), (4, 4));
    }

    #[test]
    fn triangle_has_six_proper_faces() {
        let faces = enumerate_proper_faces(&triangle()).unwrap();
        assert_eq!(faces.len(), 6);
    }

    #[test]
    fn square_facets_are_the_four_edges() {
        let f = facets(&unit_square()).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f.iter().all(|x| x.dim == 1 && x.vertex_indices.len() == 2));
    }

    #[test]
    fn segment_facets_are_vertices() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let f = facets(&seg).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.iter().all(|x| x.dim == 0));
    }

    #[test]
    fn cube_has_six_quad_facets() {
        let f = facets(&unit_cube()).unwrap();
        assert_eq!(f.len(), 6);
        assert!(f.iter().all(|x| x.vertex_indices.len() == 4 && x.dim == 2));
    }

    #[test]
    fn cap_is_enforced() {
        let p = unit_cube();
        assert!(matches!(
            enumerate_proper_faces_capped(&p, 4),
            Err(FaceError::CapExceeded {
                vertices: 8,
                cap: 4
            })
        ));
    }

    #[test]
    fn every_facet_passes_is_face() {
        for p in [unit_square(), triangle(), unit_cube()] {
            for f in facets(&p).unwrap() {
                assert!(is_face(&p, &f.vertex_indices).unwrap());
            }
        }
    }

    #[test]
    fn product_of_segments_matches_square_enumeration() {
        // segment x segment with row-major indexing lands on the square with
        // vertex order (0,0),(0,1),(1,0),(1,1).
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let mut fp = enumerate_proper_faces(&seg).unwrap();
        fp.push(Face::full(&seg));
        let prod = product_faces(&fp, 2, &fp, 2);
        assert_eq!(prod.len(), 8);

        let square = VPolytope::new(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let direct = enumerate_proper_faces(&square).unwrap();
        assert_eq!(prod, direct);
    }

    #[test]
    fn product_face_counting() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let tri = triangle();
        let mut fs = enumerate_proper_faces(&seg).unwrap();
        fs.push(Face::full(&seg));
        let mut ft = enumerate_proper_faces(&tri).unwrap();
        ft.push(Face::full(&tri));
        let prod = product_faces(&fs, 2, &ft, 3);
        // (2 proper + 1 full) * (6 proper + 1 full) - full x full.
        assert_eq!(prod.len(), 3 * 7 - 1);
        // vertex x vertex products are exactly the product's vertices.
        let vertex_faces = prod.iter().filter(|f| f.vertex_indices.len() == 1).count();
        assert_eq!(vertex_faces, 6);
    }
}
