//! Smooth objectives for the solvers: the generic contract, the
//! pairwise-distance feasibility objective, and quadratic test objectives.

use thiserror::Error;

use crate::vecops::dot;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("point has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
}

/// Contract consumed by the solvers: value, gradient, a smoothness constant,
/// and a PL constant (0 when unknown). Quadratic objectives additionally
/// expose a Hessian-vector product, which enables exact line search.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Smoothness constant L.
    fn smoothness(&self) -> f64;

    /// PL constant mu; 0 when unknown.
    fn pl_constant(&self) -> f64 {
        0.0
    }

    /// Hessian-vector product for quadratic objectives; `None` otherwise.
    fn hessian_vec(&self, _d: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// The pairwise-distance objective over a product of k blocks of dimension n:
///
/// ```text
/// f(x) = (1/2k) * sum_{i<j} |x^i - x^j|^2
/// ```
///
/// It is convex, 1-smooth and 1-PL, vanishes exactly when all blocks agree,
/// and equals `(1/2k) <M_k x, x>` for `M_k = (k I - 1 1^T) (x) I_n`. All
/// operations are matrix-free: the gradient block i is `x^i - mean_j x^j`,
/// computed in O(nk). This form is also numerically stable near the optimum,
/// where the pairwise differences are tiny.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntersectionObjective {
    k: usize,
    n: usize,
}

impl IntersectionObjective {
    pub fn new(k: usize, n: usize) -> Self {
        assert!(k >= 1 && n >= 1);
        Self { k, n }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.k * self.n {
            return Err(ObjectiveError::DimensionMismatch {
                got: x.len(),
                expected: self.k * self.n,
            });
        }
        Ok(())
    }

    /// Blockwise mean `(1/k) sum_i x^i`.
    pub fn block_mean(&self, x: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for i in 0..self.k {
            for (mj, xj) in m.iter_mut().zip(&x[i * self.n..(i + 1) * self.n]) {
                *mj += xj;
            }
        }
        for mj in &mut m {
            *mj /= self.k as f64;
        }
        m
    }

    /// Deviation of each block from the blockwise mean, computed relative to
    /// block 0 so that identical blocks give exact zeros: with
    /// `s_i = x^i - x^0`, the deviation is `s_i - mean_j(s_j)`.
    fn deviations(&self, x: &[f64]) -> Vec<f64> {
        let (k, n) = (self.k, self.n);
        let mut dev = vec![0.0; k * n];
        let x0 = &x[..n];
        for i in 0..k {
            for j in 0..n {
                dev[i * n + j] = x[i * n + j] - x0[j];
            }
        }
        for j in 0..n {
            let mut mj = 0.0;
            for i in 0..k {
                mj += dev[i * n + j];
            }
            mj /= k as f64;
            for i in 0..k {
                dev[i * n + j] -= mj;
            }
        }
        dev
    }

    /// `f(x) = (1/2k) sum_{i<j} |x^i - x^j|^2`, evaluated through the
    /// identity `sum_{i<j} |x^i - x^j|^2 = k sum_i |x^i - mean|^2`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        let dev = self.deviations(x);
        Ok(0.5 * crate::vecops::norm_sq(&dev))
    }

    /// Gradient: block i is `x^i - mean_j x^j`, equivalently `(1/k) M_k x`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(x)?;
        Ok(self.deviations(x))
    }

    /// Matrix-free `M_k x`: block i is `k x^i - sum_j x^j`, computed through
    /// the same block-0 shift as the gradient.
    pub fn apply_mk(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(x)?;
        let mut out = self.deviations(x);
        crate::vecops::scale(&mut out, self.k as f64);
        Ok(out)
    }

    /// The solver declares approximate feasibility once `f(x) <= eps / 2k`
    /// (valid when the intersection is nonempty, so `f* = 0`).
    pub fn feasibility_threshold(&self, eps: f64) -> Result<f64, ObjectiveError> {
        if eps <= 0.0 {
            return Err(ObjectiveError::NonPositiveEpsilon(eps));
        }
        Ok(eps / (2.0 * self.k as f64))
    }
}

impl SmoothObjective for IntersectionObjective {
    fn dim(&self) -> usize {
        self.k * self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).expect("dimension checked by caller")
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let g = self.grad(x).expect("dimension checked by caller");
        out.copy_from_slice(&g);
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn pl_constant(&self) -> f64 {
        1.0
    }

    fn hessian_vec(&self, d: &[f64]) -> Option<Vec<f64>> {
        // Hessian is (1/k) M_k, i.e. the same map as the gradient.
        Some(self.grad(d).expect("dimension checked by caller"))
    }
}

/// `f(z) = |z|^2` over R^d; gradient `2z`, Hessian `2I`, L = 2. This is the
/// distance kernel's objective for minimum-norm points over convex hulls.
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm {
    dim: usize,
}

impl SquaredNorm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothObjective for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        crate::vecops::norm_sq(x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = 2.0 * xi;
        }
    }

    fn smoothness(&self) -> f64 {
        2.0
    }

    fn pl_constant(&self) -> f64 {
        2.0
    }

    fn hessian_vec(&self, d: &[f64]) -> Option<Vec<f64>> {
        Some(d.iter().map(|x| 2.0 * x).collect())
    }
}

/// A dense quadratic `f(x) = 0.5 <H x, x> + <b, x>` with caller-supplied
/// smoothness constant, for exercising the solvers independently of the
/// feasibility objective. H must be symmetric.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    h: Vec<Vec<f64>>,
    b: Vec<f64>,
    smoothness: f64,
    pl: f64,
}

impl DenseQuadratic {
    pub fn new(h: Vec<Vec<f64>>, b: Vec<f64>, smoothness: f64, pl: f64) -> Self {
        let d = b.len();
        assert_eq!(h.len(), d);
        assert!(h.iter().all(|row| row.len() == d));
        Self {
            h,
            b,
            smoothness,
            pl,
        }
    }

    /// The linear objective `<b, x>`.
    pub fn linear(b: Vec<f64>) -> Self {
        let d = b.len();
        Self::new(vec![vec![0.0; d]; d], b, 0.0, 0.0)
    }

    fn hx(&self, x: &[f64]) -> Vec<f64> {
        self.h.iter().map(|row| dot(row, x)).collect()
    }
}

impl SmoothObjective for DenseQuadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(&self.hx(x), x) + dot(&self.b, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (hxi, bi)) in out.iter_mut().zip(self.hx(x).iter().zip(&self.b)) {
            *o = hxi + bi;
        }
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn pl_constant(&self) -> f64 {
        self.pl
    }

    fn hessian_vec(&self, d: &[f64]) -> Option<Vec<f64>> {
        Some(self.hx(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct double-loop evaluation of (1/2k) sum_{i<j} |x^i - x^j|^2,
    /// the oracle for the mean-deviation form used by `eval`.
    fn eval_pairwise(k: usize, n: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                for t in 0..n {
                    let d = x[i * n + t] - x[j * n + t];
                    acc += d * d;
                }
            }
        }
        acc / (2.0 * k as f64)
    }

    #[test]
    fn eval_examples() {
        let o = IntersectionObjective::new(2, 1);
        assert!((o.eval(&[1.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        let o = IntersectionObjective::new(3, 1);
        assert!((o.eval(&[0.0, 1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(o.eval(&[0.7, 0.7, 0.7]).unwrap(), 0.0);
    }

    #[test]
    fn eval_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(k, n) in &[(2usize, 3usize), (3, 2), (5, 4), (10, 1)] {
            let o = IntersectionObjective::new(k, n);
            for _ in 0..50 {
                let x: Vec<f64> = (0..k * n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let a = o.eval(&x).unwrap();
                let b = eval_pairwise(k, n, &x);
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let o = IntersectionObjective::new(3, 1);
        assert_eq!(o.grad(&[0.0, 1.0, 2.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        let o = IntersectionObjective::new(2, 1);
        assert_eq!(o.grad(&[1.0, 0.0]).unwrap(), vec![0.5, -0.5]);
        assert_eq!(o.grad(&[0.3, 0.3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_mk_examples() {
        let o = IntersectionObjective::new(2, 1);
        let y = o.apply_mk(&[1.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, -1.0]);
        let yy = o.apply_mk(&y).unwrap();
        assert_eq!(yy, vec![2.0, -2.0]);
        assert_eq!(o.apply_mk(&[0.4, 0.4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn feasibility_threshold_rule() {
        let o = IntersectionObjective::new(2, 1);
        assert!((o.feasibility_threshold(0.1).unwrap() - 0.025).abs() < 1e-18);
        let o = IntersectionObjective::new(10, 1);
        assert!((o.feasibility_threshold(1.0).unwrap() - 0.05).abs() < 1e-18);
        assert!(matches!(
            o.feasibility_threshold(0.0),
            Err(ObjectiveError::NonPositiveEpsilon(_))
        ));
    }

    #[test]
    fn gradient_norm_identity() {
        // |grad f|^2 = 2 f(x).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(k, n) in &[(2usize, 5usize), (3, 3), (10, 2)] {
            let o = IntersectionObjective::new(k, n);
            for _ in 0..30 {
                let x: Vec<f64> = (0..k * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let g = o.grad(&x).unwrap();
                let lhs = crate::vecops::norm_sq(&g);
                let rhs = 2.0 * o.eval(&x).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-30));
            }
        }
    }

    #[test]
    fn mk_is_idempotent_up_to_k() {
        // M_k^2 x = k M_k x.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &(k, n) in &[(2usize, 4usize), (5, 2)] {
            let o = IntersectionObjective::new(k, n);
            for _ in 0..30 {
                let x: Vec<f64> = (0..k * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let mx = o.apply_mk(&x).unwrap();
                let mmx = o.apply_mk(&mx).unwrap();
                for (a, b) in mmx.iter().zip(&mx) {
                    let want = k as f64 * b;
                    assert!((a - want).abs() <= 1e-12 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn gradient_is_one_lipschitz_and_f_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &(k, n) in &[(2usize, 3usize), (5, 2)] {
            let o = IntersectionObjective::new(k, n);
            for _ in 0..40 {
                let x: Vec<f64> = (0..k * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y: Vec<f64> = (0..k * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let gx = o.grad(&x).unwrap();
                let gy = o.grad(&y).unwrap();
                let grad_dist = crate::vecops::dist(&gx, &gy);
                let point_dist = crate::vecops::dist(&x, &y);
                assert!(grad_dist <= point_dist * (1.0 + 1e-9));
                // First-order convexity gap is nonnegative.
                let gap = o.eval(&y).unwrap()
                    - o.eval(&x).unwrap()
                    - crate::vecops::dot(&gx, &crate::vecops::sub(&y, &x));
                assert!(gap >= -1e-12, "convexity gap {gap}");
            }
        }
    }

    #[test]
    fn quadratic_growth_equality_for_two_identical_blocks() {
        // For k = 2, f(x) = |x1 - x2|^2 / 4 exactly equals half the squared
        // distance to the solution set when both blocks share a polytope.
        let o = IntersectionObjective::new(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let diff_sq: f64 = (0..3).map(|j| (x[j] - x[3 + j]) * (x[j] - x[3 + j])).sum();
            let f = o.eval(&x).unwrap();
            assert!((f - diff_sq / 4.0).abs() <= 1e-12 * f.max(1e-30));
        }
    }

    #[test]
    fn dense_quadratic_and_linear() {
        let q = DenseQuadratic::new(
            vec![vec![2.0, 0.0], vec![0.0, 4.0]],
            vec![1.0, -1.0],
            4.0,
            2.0,
        );
        // f(x) = x0^2 + 2 x1^2 + x0 - x1.
        assert!((q.value(&[1.0, 1.0]) - (1.0 + 2.0 + 1.0 - 1.0)).abs() < 1e-15);
        assert_eq!(q.gradient(&[1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(q.hessian_vec(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);

        let l = DenseQuadratic::linear(vec![2.0, -1.0]);
        assert_eq!(l.gradient(&[5.0, 5.0]), vec![2.0, -1.0]);
        assert_eq!(l.smoothness(), 0.0);
    }

    #[test]
    fn squared_norm_objective() {
        let o = SquaredNorm::new(2);
        assert_eq!(o.value(&[3.0, 4.0]), 25.0);
        assert_eq!(o.gradient(&[3.0, 4.0]), vec![6.0, 8.0]);
        assert_eq!(o.hessian_vec(&[1.0, -1.0]).unwrap(), vec![2.0, -2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let o = IntersectionObjective::new(2, 2);
        assert!(matches!(
            o.eval(&[1.0, 2.0, 3.0]),
            Err(ObjectiveError::DimensionMismatch { got: 3, expected: 4 })
        ));
        assert!(o.grad(&[0.0; 5]).is_err());
        assert!(o.apply_mk(&[0.0; 2]).is_err());
    }
}
