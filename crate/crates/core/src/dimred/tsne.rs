//! Exact O(n^2) t-SNE.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    pairwise_affinities_with_floor, AffinityMatrix, DimredError, KlRecord, Layout2D, PointRole,
};
use crate::data::EmbeddingMatrix;
use crate::Scalar;

const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams<T> {
    pub perplexity: T,
    pub iterations: usize,
    pub learning_rate: T,
    pub early_exaggeration_factor: T,
    pub early_exaggeration_iters: usize,
    /// Momentum while exaggeration is active.
    pub initial_momentum: T,
    /// Momentum for the remaining iterations.
    pub final_momentum: T,
    pub seed: u64,
    pub min_prob: T,
    /// Standard deviation of the Gaussian initialization.
    pub init_std: T,
    /// KL is recorded every this many iterations, and after the last one.
    pub kl_every: usize,
}

impl<T: Scalar> Default for TsneParams<T> {
    fn default() -> Self {
        Self {
            perplexity: T::lit(15.0),
            iterations: 1000,
            learning_rate: T::lit(200.0),
            early_exaggeration_factor: T::lit(12.0),
            early_exaggeration_iters: 250,
            initial_momentum: T::lit(0.5),
            final_momentum: T::lit(0.8),
            seed: 0,
            min_prob: T::lit(1e-12),
            init_std: T::lit(1e-4),
            kl_every: 50,
        }
    }
}

impl<T: Scalar> TsneParams<T> {
    pub fn validate(&self) -> Result<(), DimredError> {
        let bad = |m: &str| Err(DimredError::InvalidParams(m.to_string()));
        if !(self.perplexity >= T::one()) {
            return bad("perplexity must be >= 1");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if !(self.learning_rate > T::zero()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.early_exaggeration_factor >= T::one()) {
            return bad("early_exaggeration_factor must be >= 1");
        }
        if !(self.min_prob >= T::zero()) || !(self.init_std > T::zero()) {
            return bad("min_prob must be >= 0 and init_std > 0");
        }
        if self.kl_every == 0 {
            return bad("kl_every must be >= 1");
        }
        Ok(())
    }
}

/// Student-t kernel values `1 / (1 + |y_i - y_j|^2)` and their off-diagonal sum.
fn student_t<T: Scalar>(y: &[[T; 2]]) -> (Vec<T>, T) {
    let n = y.len();
    let mut num = vec![T::zero(); n * n];
    let mut z = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = T::one() / (T::one() + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
        }
    }
    // Fixed-order reduction so results do not depend on scheduling.
    for v in &num {
        z += *v;
    }
    (num, z)
}

/// KL(P || Q) for a layout, summing over pairs with `p_ij > 0`.
pub fn kl_divergence<T: Scalar>(p: &AffinityMatrix<T>, y: &[[T; 2]]) -> T {
    let n = p.n();
    assert_eq!(y.len(), n);
    let (num, z) = student_t(y);
    let mut kl = T::zero();
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > T::zero() {
                let qij = num[i * n + j] / z;
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Analytic gradient of KL(exaggeration * P || Q) with respect to the layout.
pub fn kl_gradient<T: Scalar>(p: &AffinityMatrix<T>, y: &[[T; 2]], exaggeration: T) -> Vec<[T; 2]> {
    let n = p.n();
    let (num, z) = student_t(y);
    let four = T::lit(4.0);
    let mut grad = vec![[T::zero(); 2]; n];
    for i in 0..n {
        let mut g = [T::zero(); 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = num[i * n + j];
            let coeff = (exaggeration * p.get(i, j) - w / z) * w;
            g[0] += coeff * (y[i][0] - y[j][0]);
            g[1] += coeff * (y[i][1] - y[j][1]);
        }
        grad[i] = [four * g[0], four * g[1]];
    }
    grad
}

type Optimized<T> = (Vec<[T; 2]>, Vec<KlRecord<T>>);

pub(crate) fn optimize<T: Scalar>(
    p: &AffinityMatrix<T>,
    params: &TsneParams<T>,
) -> Result<Optimized<T>, DimredError> {
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut y: Vec<[T; 2]> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [T::lit(a) * params.init_std, T::lit(b) * params.init_std]
        })
        .collect();
    let mut update = vec![[T::zero(); 2]; n];
    let mut gains = vec![[T::one(); 2]; n];
    let mut trace = Vec::new();
    let (up, down, min_gain) = (T::lit(0.2), T::lit(0.8), T::lit(MIN_GAIN));

    for iter in 0..params.iterations {
        let exaggerating = iter < params.early_exaggeration_iters;
        let (exaggeration, momentum) = if exaggerating {
            (params.early_exaggeration_factor, params.initial_momentum)
        } else {
            (T::one(), params.final_momentum)
        };
        let grad = kl_gradient(p, &y, exaggeration);
        if grad.iter().flatten().any(|g| !g.is_finite()) {
            return Err(DimredError::NonFiniteGradient {
                iteration: iter + 1,
            });
        }
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > T::zero()) == (update[i][k] > T::zero());
                gains[i][k] = if same_sign {
                    gains[i][k] * down
                } else {
                    gains[i][k] + up
                }
                .max(min_gain);
                update[i][k] =
                    momentum * update[i][k] - params.learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += update[i][k];
            }
        }
        // KL is translation invariant; recentering keeps coordinates bounded.
        let nf = T::from_count(n);
        let cx = y.iter().map(|p| p[0]).sum::<T>() / nf;
        let cy = y.iter().map(|p| p[1]).sum::<T>() / nf;
        for pt in &mut y {
            pt[0] -= cx;
            pt[1] -= cy;
        }

        let done = iter + 1;
        if done % params.kl_every == 0 || done == params.iterations {
            trace.push(KlRecord {
                iteration: done,
                kl: kl_divergence(p, &y),
            });
        }
    }
    Ok((y, trace))
}

/// Fits a 2-D layout. Deterministic for fixed `(x, params)`.
pub fn tsne_fit<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    params: &TsneParams<T>,
) -> Result<Layout2D<T>, DimredError> {
    params.validate()?;
    if x.n() < 3 {
        return Err(DimredError::TooFewPoints { n: x.n(), min: 3 });
    }
    let p = pairwise_affinities_with_floor(x, params.perplexity, params.min_prob)?;
    let (coords, kl_trace) = optimize(&p, params)?;
    Ok(Layout2D {
        roles: vec![PointRole::Unassigned; coords.len()],
        coords,
        kl_trace,
        seed: params.seed,
    })
}
