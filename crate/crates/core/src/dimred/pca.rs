use nalgebra::{DMatrix, SymmetricEigen};

use super::DimredError;
use crate::data::EmbeddingMatrix;
use crate::Scalar;

/// Mean-centered projection onto the leading principal components.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection<T> {
    pub dims: usize,
    /// Row-major `n x dims` scores.
    pub coords: Vec<T>,
    /// Row-major `dims x d` unit components.
    pub components: Vec<T>,
    pub mean: Vec<T>,
    /// Every covariance eigenvalue (population normalization), descending.
    pub eigenvalues: Vec<T>,
}

impl<T: Scalar> PcaProjection<T> {
    pub fn total_variance(&self) -> T {
        self.eigenvalues.iter().copied().sum()
    }

    pub fn explained_variance_ratio(&self) -> Vec<T> {
        let total = self.total_variance();
        self.eigenvalues[..self.dims]
            .iter()
            .map(|&v| v / total)
            .collect()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    /// Maps scores back into the input space.
    pub fn reconstruct(&self, i: usize) -> Vec<T> {
        let d = self.mean.len();
        let mut out = self.mean.clone();
        for (k, &score) in self.point(i).iter().enumerate() {
            let comp = &self.components[k * d..(k + 1) * d];
            for (o, &c) in out.iter_mut().zip(comp) {
                *o += score * c;
            }
        }
        out
    }
}

/// Projects onto the top `dims` principal components.
///
/// Each component's sign is fixed so that its largest-magnitude loading is
/// positive, which makes the output independent of the eigensolver's sign
/// conventions.
pub fn pca_project<T: Scalar>(
    x: &EmbeddingMatrix<T>,
    dims: usize,
) -> Result<PcaProjection<T>, DimredError> {
    let (n, d) = (x.n(), x.d());
    let max = n.min(d);
    if dims == 0 || dims > max {
        return Err(DimredError::TooManyComponents { dims, max });
    }
    let mut mean = vec![0.0f64; d];
    for row in x.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v.as_f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x.row(i)[j].as_f64() - mean[j]);
    let cov = (centered.transpose() * &centered) / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Vec::with_capacity(dims * d);
    for &k in &order[..dims] {
        let col = eig.eigenvectors.column(k);
        let pivot = col
            .iter()
            .copied()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|&v| v * sign));
    }
    let mut coords = Vec::with_capacity(n * dims);
    for i in 0..n {
        for k in 0..dims {
            let comp = &components[k * d..(k + 1) * d];
            let s: f64 = (0..d).map(|j| centered[(i, j)] * comp[j]).sum();
            coords.push(T::lit(s));
        }
    }
    Ok(PcaProjection {
        dims,
        coords,
        components: components.into_iter().map(T::lit).collect(),
        mean: mean.into_iter().map(T::lit).collect(),
        eigenvalues: order
            .iter()
            .map(|&k| T::lit(eig.eigenvalues[k].max(0.0)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MetricHint;

    #[test]
    fn collinear_points_are_rank_one() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = EmbeddingMatrix::from_rows(&rows, MetricHint::Euclidean).unwrap();
        let p = pca_project(&x, 1).unwrap();
        assert!(p.explained_variance_ratio()[0] >= 1.0 - 1e-9);
        // largest loading positive
        assert!(p.components[1] > 0.0);
    }

    #[test]
    fn zero_or_excess_dims_rejected() {
        let x = EmbeddingMatrix::<f64>::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 5.0]],
            MetricHint::Euclidean,
        )
        .unwrap();
        assert!(pca_project(&x, 0).is_err());
        assert!(pca_project(&x, 3).is_err());
    }
}
