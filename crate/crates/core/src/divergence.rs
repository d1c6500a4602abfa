//! Non-parametric KL divergence between state marginals from samples.
//!
//! Entropy is estimated with the Kozachenko-Leonenko k-nearest-neighbor
//! construction and cross entropy with its two-sample variant; KL divergence
//! is their difference:
//!
//! ```text
//! H(p)   = psi(n) - psi(k) + ln c_d + (d/n) sum_i ln rho_i
//! H(p,q) = psi(m) - psi(k) + ln c_d + (d/n) sum_i ln nu_i
//! KL(p,q) = H(p,q) - H(p)
//! ```
//!
//! where `rho_i` is the Euclidean distance from point `i` of `p` to its k-th
//! nearest neighbor among the other points of `p`, `nu_i` the distance to the
//! k-th nearest neighbor in `q`, `c_d` the d-dimensional unit-ball volume,
//! and `psi` the digamma function. Estimates can be negative; that is
//! estimator bias, not an error.
//!
//! Neighbor search is exact brute force: sample clouds stay small at this
//! scale and exactness keeps the tests honest. Per-point searches run in
//! parallel, with the log-distance sum reduced in index order so results are
//! identical for every thread count. Distances are floored at 1e-10 before
//! the logarithm, so duplicate points (replayed trajectories) can never
//! produce a silent `-inf`; unlike per-point jitter this keeps estimates
//! exactly invariant to point order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Distances below this are clamped before taking logs.
pub const DISTANCE_FLOOR: f64 = 1e-10;

/// A set of `n` points in d-dimensional space, stored row-major.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl SampleCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample cloud"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Empty("sample cloud dimension"));
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::Shape {
                    context: "sample cloud point",
                    expected: dim,
                    actual: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample cloud point"));
            }
            data.extend_from_slice(p);
        }
        Ok(SampleCloud {
            n: points.len(),
            dim,
            data,
        })
    }

    /// Pool every recorded state of the given trajectories into one cloud.
    pub fn from_trajectories(trajectories: &[Trajectory]) -> Result<Self> {
        let mut points = Vec::new();
        for t in trajectories {
            points.extend(t.states.iter().cloned());
        }
        if points.is_empty() {
            return Err(Error::Empty("trajectory states"));
        }
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Per-dimension standardized copy using this cloud's mean and standard
    /// deviation (constant dimensions are left unscaled).
    fn standardized(&self, mean: &[f64], std: &[f64]) -> SampleCloud {
        let mut data = self.data.clone();
        for row in 0..self.n {
            for d in 0..self.dim {
                let ix = row * self.dim + d;
                data[ix] = (data[ix] - mean[d]) / std[d];
            }
        }
        SampleCloud {
            data,
            n: self.n,
            dim: self.dim,
        }
    }
}

/// Digamma via the recurrence into Stirling's asymptotic region.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma domain");
    let mut value = 0.0;
    let mut z = x;
    while z < 16.0 {
        value -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    value + z.ln() - 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0 - inv2 * inv2 * inv2 / 252.0
}

/// ln of the d-dimensional unit-ball volume, computed exactly from the
/// integer / half-integer gamma function.
pub fn ln_unit_ball_volume(dim: usize) -> f64 {
    // c_d = pi^(d/2) / Gamma(d/2 + 1)
    let half_ln_pi = 0.5 * std::f64::consts::PI.ln();
    (dim as f64) * half_ln_pi - ln_gamma_half_integer(dim + 2)
}

/// ln Gamma(n/2) for integer n >= 1.
fn ln_gamma_half_integer(n: usize) -> f64 {
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(x+1) = x Gamma(x).
    let mut value = if n % 2 == 0 {
        0.0
    } else {
        0.5 * std::f64::consts::PI.ln()
    };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 - 1e-12 {
        value += x.ln();
        x += 1.0;
    }
    value
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// k-th smallest of `values` (1-indexed k), by partial selection.
fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let (_, kth, _) = values.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *kth
}

/// Mean of ln(distance to k-th nearest neighbor) from each point of `from`
/// into `to`, excluding self-pairs when the clouds are the same object.
fn mean_log_knn_distance(from: &SampleCloud, to: &SampleCloud, k: usize, exclude_self: bool) -> f64 {
    let logs: Vec<f64> = (0..from.len())
        .into_par_iter()
        .map(|i| {
            let origin = from.point(i);
            let mut dists: Vec<f64> = (0..to.len())
                .filter(|&j| !(exclude_self && j == i))
                .map(|j| squared_distance(origin, to.point(j)))
                .collect();
            let d2 = kth_smallest(&mut dists, k);
            d2.sqrt().max(DISTANCE_FLOOR).ln()
        })
        .collect();
    // Index-ordered summation keeps the reduction deterministic.
    logs.iter().sum::<f64>() / from.len() as f64
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    Ok(())
}

/// Kozachenko-Leonenko entropy estimate of a sample cloud.
pub fn knn_entropy(p: &SampleCloud, k: usize) -> Result<f64> {
    check_k(k)?;
    if p.len() < k + 1 {
        return Err(Error::invalid(format!(
            "entropy needs at least k+1 = {} points, got {}",
            k + 1,
            p.len()
        )));
    }
    let mean_log = mean_log_knn_distance(p, p, k, true);
    Ok(digamma(p.len() as f64) - digamma(k as f64)
        + ln_unit_ball_volume(p.dim())
        + p.dim() as f64 * mean_log)
}

/// Cross-entropy estimate: neighbor distances run from points of `p` into `q`.
pub fn knn_cross_entropy(p: &SampleCloud, q: &SampleCloud, k: usize) -> Result<f64> {
    check_k(k)?;
    if p.dim() != q.dim() {
        return Err(Error::Shape {
            context: "cross-entropy cloud dims",
            expected: p.dim(),
            actual: q.dim(),
        });
    }
    if q.len() < k {
        return Err(Error::invalid(format!(
            "cross-entropy needs at least k = {k} points in q, got {}",
            q.len()
        )));
    }
    let mean_log = mean_log_knn_distance(p, q, k, false);
    Ok(digamma(q.len() as f64) - digamma(k as f64)
        + ln_unit_ball_volume(p.dim())
        + p.dim() as f64 * mean_log)
}

/// KL(p, q) = H(p, q) - H(p). May legitimately be negative.
pub fn estimate_kl(p: &SampleCloud, q: &SampleCloud, k: usize) -> Result<f64> {
    estimate_kl_with(p, q, k, false)
}

/// As [`estimate_kl`], optionally standardizing both clouds per dimension
/// with the pooled mean and standard deviation first.
pub fn estimate_kl_with(
    p: &SampleCloud,
    q: &SampleCloud,
    k: usize,
    standardize: bool,
) -> Result<f64> {
    if !standardize {
        return Ok(knn_cross_entropy(p, q, k)? - knn_entropy(p, k)?);
    }
    let dim = p.dim();
    let total = (p.len() + q.len()) as f64;
    let mut mean = vec![0.0; dim];
    for cloud in [p, q] {
        for i in 0..cloud.len() {
            for (m, v) in mean.iter_mut().zip(cloud.point(i)) {
                *m += v;
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= total;
    }
    let mut var = vec![0.0; dim];
    for cloud in [p, q] {
        for i in 0..cloud.len() {
            for (vv, (v, m)) in var.iter_mut().zip(cloud.point(i).iter().zip(mean.iter())) {
                *vv += (v - m) * (v - m);
            }
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / total).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let ps = p.standardized(&mean, &std);
    let qs = q.standardized(&mean, &std);
    Ok(knn_cross_entropy(&ps, &qs, k)? - knn_entropy(&ps, k)?)
}

/// KL between a demonstration's pooled states and the pooled states of one
/// or more policy rollouts.
pub fn trajectory_kl(demo: &Trajectory, rollouts: &[Trajectory], k: usize) -> Result<f64> {
    if rollouts.is_empty() {
        return Err(Error::Empty("rollouts for trajectory KL"));
    }
    let p = SampleCloud::from_trajectories(std::slice::from_ref(demo))?;
    let q = SampleCloud::from_trajectories(rollouts)?;
    estimate_kl(&p, &q, k)
}
