//! Distribution evolution over module orientations.
//!
//! Each member of the distribution population is a 4 x n matrix whose columns
//! are unit vectors of probability *amplitudes*: orientation `l` of module `j`
//! is drawn with probability `q[l][j]^2`. Exploration applies random
//! orthogonal transforms to a few columns of the worst members; refinement
//! either pulls a column toward the incumbent orientation (exploitation plus a
//! small plane rotation) or pushes it away (disturbance).

use nalgebra::Matrix4;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::Orientation;

pub type Column = [f64; 4];

/// Orientation vector of one individual.
pub type Solution = Vec<Orientation>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeaParams {
    /// Population size `np`.
    pub np: usize,
    /// Exploitation intensity, in (0, 1).
    pub alpha0: f64,
    /// Disturbance factor, in (0, 1).
    pub disturbance: f64,
    /// Probability of exploitation (vs. disturbance) per column, in [0, 1].
    pub p0: f64,
    /// Probability of resampling a position instead of inheriting it, in (0, 1].
    pub inherit: f64,
    /// Bound on the plane-rotation angle in radians.
    pub max_rotation: f64,
}

impl Default for DeaParams {
    fn default() -> Self {
        Self {
            np: 5,
            alpha0: 0.2,
            disturbance: 0.5,
            p0: 0.85,
            inherit: 0.5,
            max_rotation: std::f64::consts::PI / 18.0,
        }
    }
}

impl DeaParams {
    pub fn validate(&self) -> Result<(), String> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if self.np < 1 {
            return Err("np must be at least 1".into());
        }
        if !open(self.alpha0) {
            return Err(format!("alpha0 = {} is outside (0, 1)", self.alpha0));
        }
        if !open(self.disturbance) {
            return Err(format!("disturbance = {} is outside (0, 1)", self.disturbance));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(format!("p0 = {} is outside [0, 1]", self.p0));
        }
        if !(self.inherit > 0.0 && self.inherit <= 1.0) {
            return Err(format!("inherit = {} is outside (0, 1]", self.inherit));
        }
        if !(self.max_rotation >= 0.0 && self.max_rotation.is_finite()) {
            return Err(format!("max_rotation = {} must be finite and non-negative", self.max_rotation));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMatrix {
    columns: Vec<Column>,
}

impl ProbabilityMatrix {
    /// Every entry 1/2: each orientation equally likely.
    pub fn uniform(n: usize) -> Self {
        Self { columns: vec![[0.5; 4]; n] }
    }

    /// Columns are normalized; `None` if a column is zero, negative or non-finite.
    pub fn from_columns(columns: Vec<Column>) -> Option<Self> {
        let mut out = Vec::with_capacity(columns.len());
        for c in columns {
            if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return None;
            }
            out.push(normalized(c)?);
        }
        Some(Self { columns: out })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Largest `| |q_j| - 1 |` over columns.
    pub fn max_norm_deviation(&self) -> f64 {
        self.columns.iter().map(|c| (norm(c) - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Solution {
        self.columns.iter().map(|c| sample_column(c, rng)).collect()
    }
}

fn norm(c: &Column) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalized(c: Column) -> Option<Column> {
    let n = norm(&c);
    if n > 0.0 && n.is_finite() {
        Some(c.map(|v| v / n))
    } else {
        None
    }
}

fn renormalize(c: Column) -> Column {
    normalized(c.map(f64::abs)).unwrap_or([0.5; 4])
}

pub fn init_distribution(n: usize, np: usize) -> Vec<ProbabilityMatrix> {
    vec![ProbabilityMatrix::uniform(n); np]
}

/// Draws orientation `l` with probability `col[l]^2`.
pub fn sample_column<R: Rng + ?Sized>(col: &Column, rng: &mut R) -> Orientation {
    let total: f64 = col.iter().map(|v| v * v).sum();
    let mut t = rng.random::<f64>() * total;
    let mut last = 0;
    for (l, v) in col.iter().enumerate() {
        let p = v * v;
        if p > 0.0 {
            last = l;
            if t < p {
                return Orientation::ALL[l];
            }
            t -= p;
        }
    }
    Orientation::ALL[last]
}

/// Haar-distributed rotation in SO(4): QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q, then a column flip if det < 0.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    let g = Matrix4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..4 {
        if r[(k, k)] < 0.0 {
            let mut col = q.column_mut(k);
            col *= -1.0;
        }
    }
    if q.determinant() < 0.0 {
        let mut col = q.column_mut(0);
        col *= -1.0;
    }
    q
}

/// Applies `m` to a column, then folds signs back to non-negative amplitudes.
pub fn transform_column(col: &Column, m: &Matrix4<f64>) -> Column {
    let v = m * nalgebra::Vector4::from_column_slice(col);
    renormalize([v[0], v[1], v[2], v[3]])
}

/// Exploitation reweighting toward orientation `target` with intensity `alpha0`.
pub fn exploit_column(col: &Column, target: usize, alpha0: f64) -> Column {
    let mut out = [0.0; 4];
    for (l, v) in col.iter().enumerate() {
        let sq = (1.0 - alpha0) * v * v;
        out[l] = if l == target { (alpha0 + sq).sqrt() } else { sq.sqrt() };
    }
    out
}

/// Plane rotation by `theta` acting on rows `(l1, l2)`; a no-op when they coincide.
pub fn rotate_rows(col: &Column, l1: usize, l2: usize, theta: f64) -> Column {
    if l1 == l2 {
        return *col;
    }
    let (s, c) = theta.sin_cos();
    let (a, b) = (col[l1], col[l2]);
    let mut out = *col;
    out[l1] = c * a - s * b;
    out[l2] = s * a + c * b;
    renormalize(out)
}

/// New squared amplitudes after disturbing away from `l0` with factor `lambda`.
/// They sum to one for any unit input column.
pub fn disturbance_squares(col: &Column, l0: usize, lambda: f64) -> Column {
    let q0 = col[l0] * col[l0];
    let denom = 1.0 - (1.0 - lambda) * q0;
    let mut out = [0.0; 4];
    for (l, v) in col.iter().enumerate() {
        out[l] = if l == l0 { lambda * q0 / denom } else { v * v / denom };
    }
    out
}

pub fn disturb_column(col: &Column, l0: usize, lambda: f64) -> Column {
    renormalize(disturbance_squares(col, l0, lambda).map(f64::sqrt))
}

/// Admissible ranges for the number of explored members `m` and columns `c`.
pub fn exploration_ranges(np: usize, n: usize) -> (std::ops::RangeInclusive<usize>, std::ops::RangeInclusive<usize>) {
    // the best member is never explored
    let m_hi = (np / 2).max(1).min(np.saturating_sub(1));
    let m_lo = 1.min(m_hi);
    let c_hi = (n / 10).max(1).min(n);
    (m_lo..=m_hi, 1.min(c_hi)..=c_hi)
}

/// Replaces the `m` worst members (highest fitness) by copies with `c`
/// random columns transformed by random orthogonal matrices.
pub fn orth_exp_q<R: Rng + ?Sized>(q: &[ProbabilityMatrix], fitness: &[f64], rng: &mut R) -> Vec<ProbabilityMatrix> {
    assert_eq!(q.len(), fitness.len());
    let np = q.len();
    let mut out = q.to_vec();
    let Some(n) = q.first().map(ProbabilityMatrix::len) else { return out };
    let (m_range, c_range) = exploration_ranges(np, n);
    if *m_range.end() == 0 || *c_range.end() == 0 {
        return out;
    }
    let m = rng.random_range(m_range);
    let c = rng.random_range(c_range);

    let key = |i: usize| if fitness[i].is_nan() { f64::INFINITY } else { fitness[i] };
    let mut order: Vec<usize> = (0..np).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(b.cmp(&a)));
    for &i in order.iter().take(m) {
        for j in sample_indices(rng, n, c) {
            let mat = random_orthogonal(rng);
            out[i].columns[j] = transform_column(&out[i].columns[j], &mat);
        }
    }
    out
}

/// Each position is resampled from `q` with probability `inherit`, otherwise
/// copied from the incumbent. One RNG per member.
pub fn sample_p<R: Rng>(q: &[ProbabilityMatrix], p: &[Solution], inherit: f64, rngs: &mut [R]) -> Vec<Solution> {
    assert_eq!(q.len(), p.len());
    assert_eq!(q.len(), rngs.len());
    q.iter()
        .zip(p)
        .zip(rngs.iter_mut())
        .map(|((qi, vi), rng)| {
            qi.columns
                .iter()
                .zip(vi)
                .map(|(col, &v)| if rng.random::<f64>() < inherit { sample_column(col, rng) } else { v })
                .collect()
        })
        .collect()
}

/// Refines every column of every member using the sampled solutions
/// `p_new` and incumbents `p_inc`. One RNG per member.
pub fn refine_q<R: Rng>(
    p_new: &[Solution],
    p_inc: &[Solution],
    q: &[ProbabilityMatrix],
    params: &DeaParams,
    rngs: &mut [R],
) -> Vec<ProbabilityMatrix> {
    assert_eq!(q.len(), p_new.len());
    assert_eq!(q.len(), p_inc.len());
    assert_eq!(q.len(), rngs.len());
    q.iter()
        .zip(p_new.iter().zip(p_inc))
        .zip(rngs.iter_mut())
        .map(|((qi, (vn, vi)), rng)| {
            let columns = qi
                .columns
                .iter()
                .enumerate()
                .map(|(j, col)| {
                    let target = vi[j].index();
                    if rng.random::<f64>() <= params.p0 {
                        let pulled = exploit_column(col, target, params.alpha0);
                        let theta = if params.max_rotation > 0.0 {
                            rng.random_range(-params.max_rotation..=params.max_rotation)
                        } else {
                            0.0
                        };
                        rotate_rows(&renormalize(pulled), vn[j].index(), target, theta)
                    } else {
                        disturb_column(col, target, params.disturbance)
                    }
                })
                .collect();
            ProbabilityMatrix { columns }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRng};
    use approx::assert_relative_eq;
    use proptest::prelude::{any, prop_assert, proptest};

    fn unit_column<R: Rng>(rng: &mut R) -> Column {
        loop {
            let c: Column = std::array::from_fn(|_| rng.random::<f64>());
            if let Some(c) = normalized(c) {
                return c;
            }
        }
    }

    fn rngs(seed: u64, np: usize) -> Vec<StreamRng> {
        (0..np).map(|i| stream(seed, &[i as u64])).collect()
    }

    #[test]
    fn uniform_initialization() {
        let q = init_distribution(1, 5);
        assert_eq!(q.len(), 5);
        assert!(q.iter().all(|m| m == &q[0]));
        assert_eq!(q[0].column(0), &[0.5; 4]);
        assert_eq!(norm(q[0].column(0)), 1.0);
        // each orientation then has probability 1/4
        assert_eq!(q[0].column(0).map(|v| v * v), [0.25; 4]);
    }

    #[test]
    fn degenerate_columns_sample_deterministically() {
        let mut rng = stream(1, &[]);
        for _ in 0..100 {
            assert_eq!(sample_column(&[1.0, 0.0, 0.0, 0.0], &mut rng), Orientation::R0);
            assert_eq!(sample_column(&[0.0, 0.0, 0.0, 1.0], &mut rng), Orientation::R270);
        }
    }

    #[test]
    fn uniform_column_chi_square() {
        let mut rng = stream(2024, &[]);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[sample_column(&[0.5; 4], &mut rng).index()] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn orthogonal_transforms() {
        let mut rng = stream(3, &[]);
        for _ in 0..100 {
            let m = random_orthogonal(&mut rng);
            assert!((m.transpose() * m - Matrix4::identity()).abs().max() < 1e-12);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-12);
            let c = unit_column(&mut rng);
            assert_relative_eq!(norm(&transform_column(&c, &m)), 1.0, epsilon = 1e-12);
        }
        let c = [0.1, 0.2, 0.3, 0.5];
        let c = normalized(c).unwrap();
        let t = transform_column(&c, &Matrix4::identity());
        for l in 0..4 {
            assert_relative_eq!(t[l], c[l], epsilon = 1e-15);
        }
    }

    #[test]
    fn exploration_range_arithmetic() {
        let (m, c) = exploration_ranges(5, 10);
        assert_eq!((m, c), (1..=2, 1..=1));
        let (m, c) = exploration_ranges(5, 300);
        assert_eq!((m, c), (1..=2, 1..=30));
        // a single member is the best one and is never explored
        let (m, _) = exploration_ranges(1, 10);
        assert_eq!(*m.end(), 0);
    }

    #[test]
    fn exploitation_example() {
        let out = exploit_column(&[0.5; 4], 2, 0.2);
        assert_relative_eq!(out[2], 0.4f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(out[2], 0.63246, epsilon = 1e-5);
        for l in [0, 1, 3] {
            assert_relative_eq!(out[l], 0.2f64.sqrt(), epsilon = 1e-15);
            assert_relative_eq!(out[l], 0.44721, epsilon = 1e-5);
        }
        assert_relative_eq!(norm(&out), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_rotation_is_identity() {
        let c = normalized([0.3, 0.4, 0.5, 0.6]).unwrap();
        let r = rotate_rows(&c, 0, 3, 0.0);
        for l in 0..4 {
            assert_relative_eq!(r[l], c[l], epsilon = 1e-15);
        }
        assert_eq!(rotate_rows(&c, 2, 2, 0.7), c);
    }

    #[test]
    fn disturbance_example() {
        let sq = disturbance_squares(&[0.5; 4], 1, 0.5);
        assert_relative_eq!(sq[1], 0.125 / 0.875, epsilon = 1e-15);
        assert_relative_eq!(sq[1], 0.142857, epsilon = 1e-6);
        assert_relative_eq!(sq.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_with_inheritance_boundaries() {
        let q = vec![ProbabilityMatrix::from_columns(vec![[0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).unwrap(); 3];
        let p = vec![vec![Orientation::R0, Orientation::R270]; 3];
        let resampled = sample_p(&q, &p, 1.0, &mut rngs(5, 3));
        assert!(resampled.iter().all(|v| v == &vec![Orientation::R180, Orientation::R90]));
        let kept = sample_p(&q, &p, 0.0, &mut rngs(5, 3));
        assert_eq!(kept, p);
        let mixed = sample_p(&q, &p, 0.5, &mut rngs(6, 3));
        for v in &mixed {
            assert!(v[0] == Orientation::R0 || v[0] == Orientation::R180);
            assert!(v[1] == Orientation::R270 || v[1] == Orientation::R90);
        }
    }

    #[test]
    fn exploration_keeps_best_member() {
        let mut rng = stream(9, &[]);
        let mut q = init_distribution(20, 5);
        for m in q.iter_mut() {
            for c in m.columns.iter_mut() {
                *c = unit_column(&mut rng);
            }
        }
        for trial in 0..200u64 {
            let fitness: Vec<f64> = (0..5).map(|i| ((i as u64 * 7 + trial) % 5) as f64).collect();
            let best = fitness.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let out = orth_exp_q(&q, &fitness, &mut stream(trial, &[]));
            assert_eq!(out[best], q[best]);
            let changed = out.iter().zip(&q).filter(|(a, b)| a != b).count();
            assert!((1..=2).contains(&changed));
        }
    }

    #[test]
    fn refinement_is_seed_deterministic() {
        let q = init_distribution(12, 5);
        let mut r = stream(1, &[]);
        let p_new: Vec<Solution> = (0..5).map(|_| q[0].sample(&mut r)).collect();
        let p_inc: Vec<Solution> = (0..5).map(|_| q[0].sample(&mut r)).collect();
        let params = DeaParams::default();
        let a = refine_q(&p_new, &p_inc, &q, &params, &mut rngs(11, 5));
        let b = refine_q(&p_new, &p_inc, &q, &params, &mut rngs(11, 5));
        assert_eq!(a, b);
        // exploitation with p0 = 1 concentrates mass on the incumbent
        let greedy = DeaParams { p0: 1.0, max_rotation: 0.0, ..params };
        let c = refine_q(&p_new, &p_inc, &q, &greedy, &mut rngs(11, 5));
        for (m, v) in c.iter().zip(&p_inc) {
            for (col, o) in m.columns().iter().zip(v) {
                assert_relative_eq!(col[o.index()] * col[o.index()], 0.2 + 0.8 * 0.25, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(DeaParams::default().validate().is_ok());
        assert!(DeaParams { alpha0: 1.0, ..Default::default() }.validate().is_err());
        assert!(DeaParams { inherit: 0.0, ..Default::default() }.validate().is_err());
        assert!(DeaParams { np: 0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn exploitation_preserves_norm(a in 0.01f64..0.99, seed in any::<u64>(), target in 0usize..4) {
            let c = unit_column(&mut stream(seed, &[]));
            let out = exploit_column(&c, target, a);
            prop_assert!((norm(&out) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn disturbance_squares_sum_to_one(l in 0.01f64..0.99, seed in any::<u64>(), l0 in 0usize..4) {
            let c = unit_column(&mut stream(seed, &[]));
            let s: f64 = disturbance_squares(&c, l0, l).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn orthogonal_action_preserves_norm(seed in any::<u64>()) {
            let mut rng = stream(seed, &[]);
            let m = random_orthogonal(&mut rng);
            let c = unit_column(&mut rng);
            let v = m * nalgebra::Vector4::from_column_slice(&c);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
