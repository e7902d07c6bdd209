//! Seeded instance generation for the feasibility experiments, plus the on
//! disk JSON format.
//!
//! Disjoint instances sample each block's points uniformly from per-block
//! coordinate intervals `[ (w+g)(i-1), (w+g)(i-1) + w ]` (defaults w = g = 1,
//! i.e. `[2(i-1), 2i-1]`), so consecutive blocks are separated by at least
//! the gap in every coordinate. Intersecting instances are derived from a
//! disjoint one by translating each block after the first so that one of its
//! vertices lands on the midpoint between a vertex of block 1 and block 1's
//! barycentre; that midpoint is a certified common point and is recorded in
//! the metadata for tests.
//!
//! All randomness is ChaCha8 keyed by a 64-bit seed; block i draws from
//! stream i + 1 and the intersecting shift draws from stream 0, so identical
//! `(seed, k, n, flags)` regenerate bit-identical instances on any platform.

use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polytope::{PolytopeError, ProductPolytope, VPolytope};

/// Identity of the sampling algorithm, recorded in instance metadata.
pub const GENERATOR_VERSION: &str = "chacha8-uniform/1";

/// Generator identity for the convex-position (sphere) sampler.
pub const GENERATOR_VERSION_SPHERE: &str = "chacha8-sphere/1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("k must be >= 2 for disjoint generation, got {0}")]
    BadBlockCount(usize),
    #[error("n must be >= 1, got {0}")]
    BadDimension(usize),
    #[error("vertex range ({0}, {1}) is empty or zero")]
    BadVertexRange(usize, usize),
    #[error("instance blocks are inconsistent with metadata: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Generation knobs; the defaults follow the experimental protocol (vertex
/// counts in `[n, 2n]`, unit intervals with unit gaps).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenConfig {
    /// Inclusive vertex-count range per block; `None` takes `[n, 2n]`.
    pub vertex_range: Option<(usize, usize)>,
    pub interval_width: f64,
    pub interval_gap: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            vertex_range: None,
            interval_width: 1.0,
            interval_gap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceMeta {
    pub seed: u64,
    pub intersecting: bool,
    pub vertices_per_block: Vec<usize>,
    pub generator_version: String,
    /// Certified common point of all blocks, present for intersecting
    /// instances; for test use only.
    pub common_point: Option<Vec<f64>>,
    pub interval_width: f64,
    pub interval_gap: f64,
}

/// A serializable feasibility instance: k blocks of n-dimensional vertex
/// lists plus generation metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Instance {
    pub k: usize,
    pub n: usize,
    pub blocks: Vec<Vec<Vec<f64>>>,
    pub meta: InstanceMeta,
}

impl Instance {
    /// Build the product polytope over the instance blocks.
    pub fn product(&self) -> Result<ProductPolytope, InstanceError> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| VPolytope::new(b.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, b) in blocks.iter().enumerate() {
            if b.num_vertices() != self.blocks[i].len() {
                return Err(InstanceError::Inconsistent(format!(
                    "block {i} has duplicate vertices"
                )));
            }
            if b.dim_ambient() != self.n {
                return Err(InstanceError::Inconsistent(format!(
                    "block {i} has ambient dimension {}, expected {}",
                    b.dim_ambient(),
                    self.n
                )));
            }
        }
        Ok(ProductPolytope::new(blocks)?)
    }

    /// Validate invariants: block count, vertex counts against metadata, and
    /// coordinate lengths.
    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.blocks.len() != self.k {
            return Err(InstanceError::Inconsistent(format!(
                "{} blocks, meta says k = {}",
                self.blocks.len(),
                self.k
            )));
        }
        if self.meta.vertices_per_block.len() != self.k {
            return Err(InstanceError::Inconsistent(
                "vertices_per_block length differs from k".into(),
            ));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.len() != self.meta.vertices_per_block[i] {
                return Err(InstanceError::Inconsistent(format!(
                    "block {i} has {} vertices, meta says {}",
                    b.len(),
                    self.meta.vertices_per_block[i]
                )));
            }
            if let Some(v) = b.iter().find(|v| v.len() != self.n) {
                return Err(InstanceError::Inconsistent(format!(
                    "block {i} has a vertex of length {}, expected {}",
                    v.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, InstanceError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, InstanceError> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<(), InstanceError> {
        let mut s = self.to_json()?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self, InstanceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64 + 1);
    rng
}

/// Coordinate interval of block `i` (0-based) under the given config.
pub fn block_interval(cfg: &GenConfig, i: usize) -> (f64, f64) {
    let start = (cfg.interval_width + cfg.interval_gap) * i as f64;
    (start, start + cfg.interval_width)
}

/// Generate k mutually disjoint blocks: block i's coordinates are sampled
/// uniformly from its interval, with the per-block vertex count drawn from
/// the configured range. Deterministic under the seed.
pub fn generate_disjoint(
    k: usize,
    n: usize,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Instance, InstanceError> {
    if k < 2 {
        return Err(InstanceError::BadBlockCount(k));
    }
    if n == 0 {
        return Err(InstanceError::BadDimension(n));
    }
    let (lo, hi) = cfg.vertex_range.unwrap_or((n, 2 * n));
    if lo == 0 || hi < lo {
        return Err(InstanceError::BadVertexRange(lo, hi));
    }
    let mut blocks = Vec::with_capacity(k);
    let mut counts = Vec::with_capacity(k);
    for i in 0..k {
        let mut rng = block_rng(seed, i);
        let count = rng.random_range(lo..=hi);
        let (a, b) = block_interval(cfg, i);
        let mut verts = Vec::with_capacity(count);
        for _ in 0..count {
            verts.push((0..n).map(|_| rng.random_range(a..b)).collect::<Vec<f64>>());
        }
        counts.push(count);
        blocks.push(verts);
    }
    Ok(Instance {
        k,
        n,
        blocks,
        meta: InstanceMeta {
            seed,
            intersecting: false,
            vertices_per_block: counts,
            generator_version: GENERATOR_VERSION.into(),
            common_point: None,
            interval_width: cfg.interval_width,
            interval_gap: cfg.interval_gap,
        },
    })
}

/// Translate the blocks of a disjoint instance so they all share a point:
/// pick a vertex v of block 1 and shift every other block so one of its
/// vertices lands on the midpoint of v and block 1's barycentre. The shifted
/// vertex is snapped onto the midpoint exactly, so the recorded common point
/// lies in every block by construction.
pub fn make_intersecting(inst: &Instance, seed: u64) -> Result<Instance, InstanceError> {
    inst.validate()?;
    if inst.k < 2 {
        return Err(InstanceError::BadBlockCount(inst.k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);

    let p1 = VPolytope::new(inst.blocks[0].clone())?;
    let v_idx = rng.random_range(0..p1.num_vertices());
    let v = p1.vertex(v_idx).to_vec();
    let b1 = p1.barycentre();
    // Common point: v moved halfway toward the barycentre; inside block 1 by
    // convexity.
    let common: Vec<f64> = v.iter().zip(&b1).map(|(a, b)| a + 0.5 * (b - a)).collect();

    let mut blocks = vec![inst.blocks[0].clone()];
    for bi in 1..inst.k {
        let block = &inst.blocks[bi];
        let u_idx = rng.random_range(0..block.len());
        let t: Vec<f64> = common
            .iter()
            .zip(&block[u_idx])
            .map(|(c, u)| c - u)
            .collect();
        let mut shifted: Vec<Vec<f64>> = block
            .iter()
            .map(|vert| vert.iter().zip(&t).map(|(a, b)| a + b).collect())
            .collect();
        shifted[u_idx] = common.clone();
        blocks.push(shifted);
    }

    Ok(Instance {
        k: inst.k,
        n: inst.n,
        blocks,
        meta: InstanceMeta {
            seed: inst.meta.seed,
            intersecting: true,
            vertices_per_block: inst.meta.vertices_per_block.clone(),
            generator_version: inst.meta.generator_version.clone(),
            common_point: Some(common),
            interval_width: inst.meta.interval_width,
            interval_gap: inst.meta.interval_gap,
        },
    })
}

/// Sample `m` points in convex position in R^dim: points on a sphere of the
/// given radius around `center`, rejection-sampled so no two directions are
/// within ~11 degrees of each other. Points on a strictly convex surface are
/// all extreme, which the face-enumeration brute force requires.
pub fn sample_convex_position(
    dim: usize,
    m: usize,
    center: &[f64],
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> VPolytope {
    assert!(dim >= 1 && m >= 1 && center.len() == dim);
    let min_cos = 0.98;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut guard = 0usize;
    while dirs.len() < m {
        guard += 1;
        let d = random_unit(dim, rng);
        let ok = dirs.iter().all(|e| crate::vecops::dot(&d, e) < min_cos)
            || guard > 10_000;
        if ok {
            dirs.push(d);
        }
    }
    let verts = dirs
        .into_iter()
        .map(|d| {
            d.iter()
                .zip(center)
                .map(|(di, ci)| ci + radius * di)
                .collect()
        })
        .collect();
    VPolytope::new(verts).expect("sphere samples are distinct")
}

/// Disjoint blocks in convex position: block i's points sit on a sphere
/// contained in that block's coordinate box, with the sphere center jittered
/// inside the box so the closest approach between hulls lands on generic
/// face pairs rather than the symmetric vertex-to-vertex contact. Blocks
/// stay disjoint and every stored point is a true vertex; used where
/// condition numbers must be computable by brute force.
pub fn generate_disjoint_convex_pos(
    k: usize,
    n: usize,
    seed: u64,
    verts_per_block: usize,
    cfg: &GenConfig,
) -> Result<Instance, InstanceError> {
    if k < 2 {
        return Err(InstanceError::BadBlockCount(k));
    }
    if n == 0 {
        return Err(InstanceError::BadDimension(n));
    }
    if verts_per_block == 0 {
        return Err(InstanceError::BadVertexRange(0, 0));
    }
    let radius = 0.35 * cfg.interval_width;
    let margin = 0.5 * cfg.interval_width - radius;
    let mut blocks = Vec::with_capacity(k);
    for i in 0..k {
        let mut rng = block_rng(seed, i);
        let (a, b) = block_interval(cfg, i);
        let mid = 0.5 * (a + b);
        let center: Vec<f64> = (0..n)
            .map(|_| mid + rng.random_range(-margin..margin))
            .collect();
        let p = sample_convex_position(n, verts_per_block, &center, radius, &mut rng);
        blocks.push(p.vertices().to_vec());
    }
    Ok(Instance {
        k,
        n,
        blocks,
        meta: InstanceMeta {
            seed,
            intersecting: false,
            vertices_per_block: vec![verts_per_block; k],
            generator_version: GENERATOR_VERSION_SPHERE.into(),
            common_point: None,
            interval_width: cfg.interval_width,
            interval_gap: cfg.interval_gap,
        },
    })
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        // Box-Muller pairs give standard normals; normalize to the sphere.
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            v.push(r * u2.cos());
            if v.len() < dim {
                v.push(r * u2.sin());
            }
        }
        let norm = crate::vecops::norm(&v);
        if norm > 1e-6 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
    }
}
