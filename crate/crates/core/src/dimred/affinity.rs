use crate::data::{EmbeddingMatrix, MetricHint};
use crate::Scalar;

use super::DimredError;

const MAX_BISECTION_STEPS: usize = 100;
const PERPLEXITY_TOLERANCE: f64 = 1e-4;
const DEFAULT_MIN_PROB: f64 = 1e-12;

/// Joint input-space affinities of exact t-SNE.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    n: usize,
    /// Symmetric joint probabilities, row-major `n x n`, zero diagonal.
    p: Vec<T>,
    /// Row-conditional probabilities before symmetrization.
    conditional: Vec<T>,
    row_sigmas: Vec<T>,
    target_perplexity: T,
}

impl<T: Scalar> AffinityMatrix<T> {
    /// Wraps an arbitrary joint matrix. Used for gradient checks and tests.
    pub fn from_joint(n: usize, p: Vec<T>) -> Self {
        assert_eq!(p.len(), n * n);
        Self {
            n,
            conditional: p.clone(),
            p,
            row_sigmas: vec![T::zero(); n],
            target_perplexity: T::zero(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn joint(&self) -> &[T] {
        &self.p
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[i * self.n + j]
    }

    pub fn conditional_row(&self, i: usize) -> &[T] {
        &self.conditional[i * self.n..(i + 1) * self.n]
    }

    /// Gaussian bandwidth per row. Infinite when a row is equidistant to
    /// every other point and therefore uniform at any bandwidth.
    pub fn row_sigmas(&self) -> &[T] {
        &self.row_sigmas
    }

    pub fn target_perplexity(&self) -> T {
        self.target_perplexity
    }

    /// `2^H` of the conditional row, with `H` the Shannon entropy in bits.
    pub fn realized_perplexity(&self, i: usize) -> T {
        let bits: T = self
            .conditional_row(i)
            .iter()
            .filter(|&&p| p > T::zero())
            .map(|&p| -p * p.log2())
            .sum();
        T::lit(2.0).powf(bits)
    }
}

/// Squared euclidean distances, row-major `n x n`.
pub fn squared_distances<T: Scalar>(x: &EmbeddingMatrix<T>) -> Vec<T> {
    let n = x.n();
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        let a = x.row(i);
        for j in (i + 1)..n {
            let dist: T = a
                .iter()
                .zip(x.row(j))
                .map(|(&u, &v)| (u - v) * (u - v))
                .sum();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    d
}

/// Conditional distribution of one row at precision `beta = 1 / (2 sigma^2)`.
/// Returns the entropy in nats. `shifted` holds `d_ij - min_j d_ij`.
fn row_conditional<T: Scalar>(shifted: &[T], skip: usize, beta: T, out: &mut [T]) -> T {
    let mut sum = T::zero();
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        *o = if j == skip {
            T::zero()
        } else {
            (-beta * d).exp()
        };
        sum += *o;
    }
    let mut weighted = T::zero();
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        if j != skip {
            *o /= sum;
            weighted += *o * d;
        }
    }
    sum.ln() + beta * weighted
}

/// Calibrates per-row bandwidths to `perplexity` and symmetrizes.
pub fn pairwise_affinities<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    perplexity: T,
) -> Result<AffinityMatrix<T>, DimredError> {
    pairwise_affinities_with_floor(x, perplexity, T::lit(DEFAULT_MIN_PROB))
}

pub fn pairwise_affinities_with_floor<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    perplexity: T,
    min_prob: T,
) -> Result<AffinityMatrix<T>, DimredError> {
    let n = x.n();
    if n < 3 {
        return Err(DimredError::TooFewPoints { n, min: 3 });
    }
    if !(perplexity >= T::one() && perplexity < T::from_count(n - 1)) {
        return Err(DimredError::PerplexityOutOfRange {
            perplexity: perplexity.as_f64(),
            n,
        });
    }
    let dist = match x.metric_hint() {
        MetricHint::Euclidean => squared_distances(x),
        MetricHint::Cosine => squared_distances(&x.l2_normalized()),
    };

    let target_entropy = perplexity.ln();
    let mut conditional = vec![T::zero(); n * n];
    let mut row_sigmas = vec![T::zero(); n];
    let mut shifted = vec![T::zero(); n];
    let two = T::lit(2.0);

    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        let others = || {
            row.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
        };
        let dmin = others().fold(T::infinity(), T::min);
        let dmax = others().fold(T::neg_infinity(), T::max);
        for (s, &d) in shifted.iter_mut().zip(row) {
            *s = d - dmin;
        }
        let out = &mut conditional[i * n..(i + 1) * n];

        // Equidistant rows are uniform at every bandwidth.
        if dmax - dmin <= T::lit(1e-12) * dmax.max(T::min_positive_value()) {
            row_conditional(&shifted, i, T::zero(), out);
            row_sigmas[i] = T::infinity();
            continue;
        }

        let spread = others().map(|d| d - dmin).sum::<T>() / T::from_count(n - 1);
        let mut beta = T::one() / spread;
        let mut lo = T::zero();
        let mut hi = T::infinity();
        let mut entropy = row_conditional(&shifted, i, beta, out);
        for _ in 0..MAX_BISECTION_STEPS {
            let gap = entropy - target_entropy;
            if gap.abs() < T::lit(1e-12) {
                break;
            }
            if gap > T::zero() {
                lo = beta;
                beta = if hi.is_infinite() {
                    beta * two
                } else {
                    (beta + hi) / two
                };
            } else {
                hi = beta;
                beta = (beta + lo) / two;
            }
            entropy = row_conditional(&shifted, i, beta, out);
        }
        let achieved = entropy.exp();
        if (achieved - perplexity).abs() > T::lit(PERPLEXITY_TOLERANCE) {
            return Err(DimredError::PerplexityInfeasible {
                row: i,
                achieved: achieved.as_f64(),
                target: perplexity.as_f64(),
            });
        }
        row_sigmas[i] = (T::one() / (two * beta)).sqrt();
    }

    let denom = T::from_count(2 * n);
    let mut p = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (conditional[i * n + j] + conditional[j * n + i]) / denom;
                p[i * n + j] = v.max(min_prob);
            }
        }
    }
    let total: T = p.iter().copied().sum();
    p.iter_mut().for_each(|v| *v /= total);

    Ok(AffinityMatrix {
        n,
        p,
        conditional,
        row_sigmas,
        target_perplexity: perplexity,
    })
}
