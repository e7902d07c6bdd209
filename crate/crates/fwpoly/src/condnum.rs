//! Polytope condition numbers by brute force on small instances: pyramidal
//! width, affine pyramidal width, and vertex-facet distance, plus the
//! closed-form composition rules for products.
//!
//! The distance kernel is the crate's own away-step FW on the quadratic
//! `|z|^2` with exact line search, run to FW gap 1e-12 and then polished by
//! solving the minimum-norm problem exactly over the final active set's
//! affine hull. When the polished point stays in the hull and passes the
//! global optimality test it is accepted, which brings distances to machine
//! precision; otherwise the AFW iterate stands.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::faces::{
    enumerate_proper_faces_capped, Face, FaceError, DEFAULT_FACE_CAP,
};
use crate::objective::SquaredNorm;
use crate::polytope::{affine_hull, AffineSubspace, PolytopeError, ProductPolytope, VPolytope};
use crate::solvers::{run_afw, SolverConfig, SolverError, StepRule};
use crate::vecops::{dot, norm, norm_sq};

/// FW-gap tolerance for the distance kernel.
pub const MIN_NORM_GAP_TOL: f64 = 1e-12;

/// Iteration cap for the AFW stage of one minimum-norm solve; the exact
/// finisher runs afterwards either way.
pub const MIN_NORM_MAX_ITERS: usize = 2_000;

/// Cap on explicit product vertex lists for brute-force product checks.
pub const PRODUCT_VERTEX_CAP: usize = 36;

#[derive(Debug, Error)]
pub enum CondError {
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("point list is empty")]
    EmptyInput,
    #[error("polytope needs at least 2 vertices, has {0}")]
    TooFewVertices(usize),
    #[error("inputs must be positive, got {0}")]
    NonPositiveInput(f64),
    #[error(
        "minimum-norm solve hit the iteration cap at gap {gap:.3e}; best norm {norm:.12e}"
    )]
    MinNormCap {
        gap: f64,
        norm: f64,
        point: Vec<f64>,
    },
    #[error("product has {vertices} vertices, exceeding the cap {cap}")]
    ProductCapExceeded { vertices: usize, cap: usize },
}

/// Result of a minimum-norm-point solve over a convex hull.
#[derive(Debug, Clone)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    pub norm: f64,
    /// FW gap at acceptance (0 when the polished exact point is taken).
    pub gap: f64,
    /// Convex weights over the input point list.
    pub weights: Vec<(usize, f64)>,
}

/// Brute-force condition numbers of one polytope, with the faces attaining
/// the minima.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub pw: f64,
    pub apw: f64,
    pub vf: f64,
    pub argmin_face_pw: Face,
    pub argmin_facet_vf: Face,
}

/// Minimizer of `|z|^2` over `conv(points)`: AFW toward gap 1e-12, then the
/// exact finisher, which solves the problem to active-set optimality and is
/// accepted whenever it certifies. The AFW iterate stands on the rare
/// numerical fallback when it converged on its own.
pub fn min_norm_point(points: &[Vec<f64>]) -> Result<MinNormPoint, CondError> {
    if points.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let hull = VPolytope::new(points.to_vec())?;
    let dim = hull.dim_ambient();
    let pp = ProductPolytope::new(vec![hull])?;
    let obj = SquaredNorm::new(dim);
    let config = SolverConfig {
        max_iters: MIN_NORM_MAX_ITERS,
        gap_tol: MIN_NORM_GAP_TOL,
        step_rule: StepRule::LineSearch,
        smoothness_l: None,
        record_trace: false,
    };
    let out = run_afw(&obj, &pp, &[0], &config)?;

    if let Some(exact) = wolfe_min_norm(pp.block(0).vertices()) {
        return Ok(exact);
    }
    if !out.converged {
        return Err(CondError::MinNormCap {
            gap: out.final_gap,
            norm: norm(&out.iterate.x),
            point: out.iterate.x,
        });
    }
    let weights = out
        .iterate
        .active
        .iter()
        .map(|(key, &w)| (key[0] as usize, w))
        .collect();
    Ok(MinNormPoint {
        norm: norm(&out.iterate.x),
        point: out.iterate.x,
        gap: out.final_gap,
        weights,
    })
}

/// Wolfe's minimum-norm-point algorithm with major/minor cycles. The corral
/// stays affinely independent: a strict violator of the first-order test at
/// the corral's affine minimizer never lies in the corral's affine hull and
/// always enters with positive affine weight, while minor cycles step along
/// the segment toward the affine solution exactly far enough to zero one
/// weight out. Finite in exact arithmetic; cycle caps guard the float
/// version.
fn wolfe_min_norm(verts: &[Vec<f64>]) -> Option<MinNormPoint> {
    let n = verts.len();
    let dim = verts[0].len();
    let vmax_sq = verts.iter().map(|v| norm_sq(v)).fold(1.0f64, f64::max);
    let tol_opt = 1e-11 * vmax_sq;

    let start = (0..n)
        .min_by(|&a, &b| {
            norm_sq(&verts[a])
                .partial_cmp(&norm_sq(&verts[b]))
                .expect("vertex norms are finite")
        })
        .expect("vertex list non-empty");
    let mut corral = vec![start];
    let mut w = vec![1.0f64];
    let mut x = verts[start].clone();
    let mut prev_xx = f64::INFINITY;
    let mut stalls = 0usize;

    for _major in 0..(4 * n + 64) {
        let xx = norm_sq(&x);
        let (j, best) = (0..n)
            .map(|i| (i, dot(&x, &verts[i])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("dots are finite"))
            .expect("vertex list non-empty");
        if best >= xx - tol_opt {
            let weights: Vec<(usize, f64)> = corral
                .iter()
                .cloned()
                .zip(w.iter().cloned())
                .filter(|&(_, wi)| wi > 0.0)
                .collect();
            return Some(MinNormPoint {
                norm: xx.sqrt(),
                point: x,
                gap: 2.0 * (xx - best).max(0.0),
                weights,
            });
        }
        // Progress guard against float-level cycling.
        if xx >= prev_xx {
            stalls += 1;
            if stalls > 2 {
                return None;
            }
        } else {
            stalls = 0;
        }
        prev_xx = xx;

        if corral.contains(&j) {
            return None;
        }
        corral.push(j);
        w.push(0.0);

        for _minor in 0..corral.len() + 2 {
            let u = affine_min_norm_weights(verts, &corral)?;
            if u.iter().all(|&ui| ui >= -1e-12) {
                let mut sum = 0.0;
                w = u.iter().map(|&ui| ui.max(0.0)).collect();
                for wi in &w {
                    sum += wi;
                }
                if sum <= 0.0 {
                    return None;
                }
                for wi in &mut w {
                    *wi /= sum;
                }
                x = combine(verts, &corral, &w, dim);
                break;
            }
            // Step from w toward u until the first weight hits zero.
            let mut theta = f64::INFINITY;
            let mut drop = None;
            for i in 0..corral.len() {
                if u[i] < -1e-12 {
                    let t = w[i] / (w[i] - u[i]);
                    if t < theta {
                        theta = t;
                        drop = Some(i);
                    }
                }
            }
            let drop = drop?;
            for i in 0..w.len() {
                w[i] = ((1.0 - theta) * w[i] + theta * u[i]).max(0.0);
            }
            corral.swap_remove(drop);
            w.swap_remove(drop);
            let sum: f64 = w.iter().sum();
            if sum <= 0.0 {
                return None;
            }
            for wi in &mut w {
                *wi /= sum;
            }
            x = combine(verts, &corral, &w, dim);
        }
    }
    None
}

fn combine(verts: &[Vec<f64>], corral: &[usize], w: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &wi) in corral.iter().zip(w) {
        crate::vecops::axpy(wi, &verts[i], &mut x);
    }
    x
}

/// Affine weights minimizing `|sum_i w_i v_i|^2` subject to `sum w = 1` over
/// the support, via the KKT system `[2G 1; 1' 0][w; nu] = [0; 1]`.
fn affine_min_norm_weights(verts: &[Vec<f64>], support: &[usize]) -> Option<Vec<f64>> {
    let m = support.len();
    let mut sys = DMatrix::<f64>::zeros(m + 1, m + 1);
    for (r, &ir) in support.iter().enumerate() {
        for (c, &ic) in support.iter().enumerate() {
            sys[(r, c)] = 2.0 * dot(&verts[ir], &verts[ic]);
        }
        sys[(r, m)] = 1.0;
        sys[(m, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let svd = sys.svd(true, true);
    let sol = svd.solve(&rhs, 1e-13).ok()?;
    let weights: Vec<f64> = (0..m).map(|r| sol[r]).collect();
    weights.iter().all(|w| w.is_finite()).then_some(weights)
}

/// `min_{x in conv(v1), y in conv(v2)} |x - y|` through the minimum-norm
/// point of the Minkowski difference.
pub fn dist_polytope_to_polytope(v1: &[Vec<f64>], v2: &[Vec<f64>]) -> Result<f64, CondError> {
    Ok(closest_pair(v1, v2)?.2)
}

/// Closest pair `(p, q)` between two hulls and their distance, recovered
/// from the difference hull's convex weights.
pub fn closest_pair(
    v1: &[Vec<f64>],
    v2: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>, f64), CondError> {
    if v1.is_empty() || v2.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let dim = v1[0].len();
    let mut diffs = Vec::with_capacity(v1.len() * v2.len());
    for a in v1 {
        for b in v2 {
            diffs.push(crate::vecops::sub(a, b));
        }
    }
    // Duplicate differences are deduped inside the solve; map the solver's
    // vertex indexing back to pair indices by position lookup.
    let deduped = VPolytope::new(diffs.clone())?;
    let mnp = min_norm_point(deduped.vertices())?;
    let mut p = vec![0.0; dim];
    let mut q = vec![0.0; dim];
    for &(di, w) in &mnp.weights {
        let target = deduped.vertex(di);
        let flat = diffs
            .iter()
            .position(|d| d.iter().zip(target).all(|(a, b)| (a - b).abs() <= 1e-12))
            .expect("deduped difference originates from the pair list");
        let (i, j) = (flat / v2.len(), flat % v2.len());
        crate::vecops::axpy(w, &v1[i], &mut p);
        crate::vecops::axpy(w, &v2[j], &mut q);
    }
    Ok((p, q, mnp.norm))
}

/// `dist(A, conv(v))`: project every point onto the orthogonal complement of
/// the subspace's direction space, then take the minimum-norm point of the
/// projected hull.
pub fn dist_affine_to_polytope(a: &AffineSubspace, v: &[Vec<f64>]) -> Result<f64, CondError> {
    if v.is_empty() {
        return Err(CondError::EmptyInput);
    }
    if v[0].len() != a.ambient_dim() {
        return Err(CondError::Polytope(PolytopeError::DimensionMismatch {
            got: v[0].len(),
            expected: a.ambient_dim(),
        }));
    }
    let projected: Vec<Vec<f64>> = v.iter().map(|p| a.project_residual(p)).collect();
    Ok(min_norm_point(&projected)?.norm)
}

fn proper_faces_checked(p: &VPolytope, cap: usize) -> Result<Vec<Face>, CondError> {
    if p.num_vertices() < 2 {
        return Err(CondError::TooFewVertices(p.num_vertices()));
    }
    Ok(enumerate_proper_faces_capped(p, cap)?)
}

fn min_over_faces<F>(faces: &[Face], mut value: F) -> Result<(f64, Face), CondError>
where
    F: FnMut(&Face) -> Result<f64, CondError>,
{
    let mut best: Option<(f64, Face)> = None;
    for f in faces {
        let d = value(f)?;
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            best = Some((d, f.clone()));
        }
    }
    best.ok_or(CondError::EmptyInput)
}

/// Pyramidal width: min over proper faces f of
/// `dist(conv(vert f), conv(vert(P) \ vert f))`.
pub fn pyramidal_width(p: &VPolytope) -> Result<f64, CondError> {
    Ok(pyramidal_width_detailed(p, DEFAULT_FACE_CAP)?.0)
}

pub fn pyramidal_width_detailed(p: &VPolytope, cap: usize) -> Result<(f64, Face), CondError> {
    let faces = proper_faces_checked(p, cap)?;
    pyramidal_width_over_faces(p.vertices(), &faces)
}

/// Minimum face distance over an explicit face list; shared by the direct
/// path and the product brute force.
pub fn pyramidal_width_over_faces(
    vertices: &[Vec<f64>],
    faces: &[Face],
) -> Result<(f64, Face), CondError> {
    min_over_faces(faces, |f| {
        let fv: Vec<Vec<f64>> = f.vertex_indices.iter().map(|&i| vertices[i].clone()).collect();
        let cv: Vec<Vec<f64>> = (0..vertices.len())
            .filter(|i| f.vertex_indices.binary_search(i).is_err())
            .map(|i| vertices[i].clone())
            .collect();
        dist_polytope_to_polytope(&fv, &cv)
    })
}

/// Affine pyramidal width: min over proper faces f of
/// `dist(aff(f), conv(vert(P) \ vert f))`.
pub fn affine_pyramidal_width(p: &VPolytope) -> Result<f64, CondError> {
    Ok(affine_pyramidal_width_detailed(p, DEFAULT_FACE_CAP)?.0)
}

pub fn affine_pyramidal_width_detailed(
    p: &VPolytope,
    cap: usize,
) -> Result<(f64, Face), CondError> {
    let faces = proper_faces_checked(p, cap)?;
    affine_pyramidal_width_over_faces(p.vertices(), &faces)
}

pub fn affine_pyramidal_width_over_faces(
    vertices: &[Vec<f64>],
    faces: &[Face],
) -> Result<(f64, Face), CondError> {
    min_over_faces(faces, |f| {
        let fv: Vec<Vec<f64>> = f.vertex_indices.iter().map(|&i| vertices[i].clone()).collect();
        let cv: Vec<Vec<f64>> = (0..vertices.len())
            .filter(|i| f.vertex_indices.binary_search(i).is_err())
            .map(|i| vertices[i].clone())
            .collect();
        dist_affine_to_polytope(&affine_hull(&fv), &cv)
    })
}

/// Vertex-facet distance: min over facets F of
/// `dist(aff(F), vert(P) \ vert(F))`, the second argument being a finite
/// point set so each term is a closed-form projection residual.
pub fn vertex_facet_distance(p: &VPolytope) -> Result<f64, CondError> {
    Ok(vertex_facet_distance_detailed(p, DEFAULT_FACE_CAP)?.0)
}

pub fn vertex_facet_distance_detailed(
    p: &VPolytope,
    cap: usize,
) -> Result<(f64, Face), CondError> {
    let faces = proper_faces_checked(p, cap)?;
    let intrinsic = p.intrinsic_dim();
    let facets: Vec<Face> = faces
        .into_iter()
        .filter(|f| f.dim + 1 == intrinsic)
        .collect();
    vertex_facet_distance_over_facets(p.vertices(), &facets)
}

pub fn vertex_facet_distance_over_facets(
    vertices: &[Vec<f64>],
    facets: &[Face],
) -> Result<(f64, Face), CondError> {
    min_over_faces(facets, |f| {
        let fv: Vec<Vec<f64>> = f.vertex_indices.iter().map(|&i| vertices[i].clone()).collect();
        let aff = affine_hull(&fv);
        let mut best = f64::INFINITY;
        for (i, u) in vertices.iter().enumerate() {
            if f.vertex_indices.binary_search(&i).is_err() {
                best = best.min(aff.distance_to_point(u));
            }
        }
        Ok(best)
    })
}

/// All three condition numbers plus the faces attaining them.
pub fn condition_report(p: &VPolytope) -> Result<ConditionReport, CondError> {
    condition_report_capped(p, DEFAULT_FACE_CAP)
}

pub fn condition_report_capped(p: &VPolytope, cap: usize) -> Result<ConditionReport, CondError> {
    let (pw, argmin_face_pw) = pyramidal_width_detailed(p, cap)?;
    let (apw, _) = affine_pyramidal_width_detailed(p, cap)?;
    let (vf, argmin_facet_vf) = vertex_facet_distance_detailed(p, cap)?;
    Ok(ConditionReport {
        pw,
        apw,
        vf,
        argmin_face_pw,
        argmin_facet_vf,
    })
}

/// Closed-form pyramidal width of a two-factor product:
/// `sqrt(a^2 b^2 / (a^2 + b^2))`.
pub fn product_pw_formula(a: f64, b: f64) -> Result<f64, CondError> {
    if a <= 0.0 {
        return Err(CondError::NonPositiveInput(a));
    }
    if b <= 0.0 {
        return Err(CondError::NonPositiveInput(b));
    }
    Ok((a * a * b * b / (a * a + b * b)).sqrt())
}

/// Lower bound for the k-fold product's pyramidal width:
/// `min_i delta_i / sqrt(2)^ceil(log2(k+1))`.
pub fn product_pw_lower_bound(deltas: &[f64]) -> Result<f64, CondError> {
    if deltas.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let mut min = f64::INFINITY;
    for &d in deltas {
        if d <= 0.0 {
            return Err(CondError::NonPositiveInput(d));
        }
        min = min.min(d);
    }
    let c = ceil_log2(deltas.len() as u64 + 1);
    Ok(min / 2.0f64.sqrt().powi(c as i32))
}

/// Vertex-facet distance of a product: the minimum over factors.
pub fn product_vf(vfs: &[f64]) -> Result<f64, CondError> {
    if vfs.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let mut min = f64::INFINITY;
    for &v in vfs {
        if v <= 0.0 {
            return Err(CondError::NonPositiveInput(v));
        }
        min = min.min(v);
    }
    Ok(min)
}

fn ceil_log2(m: u64) -> u32 {
    debug_assert!(m >= 1);
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// Explicit vertex list of a product of factors, row-major: the vertex with
/// per-factor indices `(i_1, ..., i_r)` sits at flat index
/// `((i_1 n_2 + i_2) n_3 + ...)`, with coordinates concatenated.
pub fn product_vertex_list(factors: &[&VPolytope]) -> Result<VPolytope, CondError> {
    if factors.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let mut verts: Vec<Vec<f64>> = factors[0].vertices().to_vec();
    for f in &factors[1..] {
        let mut next = Vec::with_capacity(verts.len() * f.num_vertices());
        for a in &verts {
            for b in f.vertices() {
                let mut v = a.clone();
                v.extend_from_slice(b);
                next.push(v);
            }
        }
        verts = next;
    }
    let count = verts.len();
    let p = VPolytope::new(verts)?;
    if p.num_vertices() != count {
        // Distinct factor vertices always produce distinct tuples; a dedup
        // here would corrupt the row-major indexing.
        return Err(CondError::ProductCapExceeded {
            vertices: count,
            cap: 0,
        });
    }
    Ok(p)
}

/// Proper faces of a product from its factors' lattices (products of faces),
/// in the row-major indexing of [`product_vertex_list`].
pub fn product_lattice(factors: &[&VPolytope], face_cap: usize) -> Result<Vec<Face>, CondError> {
    if factors.is_empty() {
        return Err(CondError::EmptyInput);
    }
    let mut faces = enumerate_proper_faces_capped(factors[0], face_cap)?;
    faces.push(Face::full(factors[0]));
    let mut count = factors[0].num_vertices();
    let mut dim_acc = factors[0].intrinsic_dim();
    for f in &factors[1..] {
        let mut next = enumerate_proper_faces_capped(f, face_cap)?;
        next.push(Face::full(f));
        let mut prod = crate::faces::product_faces(&faces, count, &next, f.num_vertices());
        count *= f.num_vertices();
        dim_acc += f.intrinsic_dim();
        // Re-append the full face of the accumulated product for the next
        // folding round; it is pushed after the sort, so it stays last.
        prod.push(Face {
            vertex_indices: (0..count).collect(),
            dim: dim_acc,
        });
        faces = prod;
    }
    faces.pop();
    Ok(faces)
}

/// Brute-force condition numbers of an explicit product, enumerating its
/// faces as products of the factors' faces. Capped at
/// [`PRODUCT_VERTEX_CAP`] product vertices.
pub struct ProductBrute {
    pub polytope: VPolytope,
    faces: Vec<Face>,
    intrinsic_dim: usize,
}

impl ProductBrute {
    pub fn new(factors: &[&VPolytope], face_cap: usize) -> Result<Self, CondError> {
        let total: usize = factors.iter().map(|f| f.num_vertices()).product();
        if total > PRODUCT_VERTEX_CAP {
            return Err(CondError::ProductCapExceeded {
                vertices: total,
                cap: PRODUCT_VERTEX_CAP,
            });
        }
        let polytope = product_vertex_list(factors)?;
        let faces = product_lattice(factors, face_cap)?;
        let intrinsic_dim = factors.iter().map(|f| f.intrinsic_dim()).sum();
        Ok(Self {
            polytope,
            faces,
            intrinsic_dim,
        })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn pyramidal_width(&self) -> Result<(f64, Face), CondError> {
        pyramidal_width_over_faces(self.polytope.vertices(), &self.faces)
    }

    pub fn affine_pyramidal_width(&self) -> Result<(f64, Face), CondError> {
        affine_pyramidal_width_over_faces(self.polytope.vertices(), &self.faces)
    }

    pub fn vertex_facet_distance(&self) -> Result<(f64, Face), CondError> {
        let facets: Vec<Face> = self
            .faces
            .iter()
            .filter(|f| f.dim + 1 == self.intrinsic_dim)
            .cloned()
            .collect();
        vertex_facet_distance_over_facets(self.polytope.vertices(), &facets)
    }
}
