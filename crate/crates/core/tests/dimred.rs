use std::time::Instant;

use embviz_core::data::{EmbeddingMatrix, Label, MetricHint};
use embviz_core::dimred::{
    joint_layout, kl_divergence, kl_gradient, pairwise_affinities, pca_project, squared_distances,
    tsne_fit, AffinityMatrix, PointRole, TsneParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, d: usize, seed: u64) -> EmbeddingMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    EmbeddingMatrix::from_rows(&rows, MetricHint::Euclidean).unwrap()
}

/// `k` isotropic blobs with centers `sep` apart along separate axes.
fn blobs(
    per: usize,
    k: usize,
    d: usize,
    sep: f64,
    seed: u64,
) -> (EmbeddingMatrix<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..k {
        for _ in 0..per {
            let mut r: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            r[c % d] += sep;
            rows.push(r);
            labels.push(c);
        }
    }
    (
        EmbeddingMatrix::from_rows(&rows, MetricHint::Euclidean).unwrap(),
        labels,
    )
}

/// Shannon entropy (nats) of a Gaussian row rebuilt from sigma alone.
fn entropy_from_sigma(sq: &[f64], i: usize, sigma: f64) -> f64 {
    let w: Vec<f64> = sq
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if j == i {
                0.0
            } else {
                (-d / (2.0 * sigma * sigma)).exp()
            }
        })
        .collect();
    let z: f64 = w.iter().sum();
    -w.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| (v / z) * (v / z).ln())
        .sum::<f64>()
}

fn oracle_kl(p: &AffinityMatrix<f64>, y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                z += 1.0 / (1.0 + dx * dx + dy * dy);
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > 0.0 {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy) / z;
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

fn silhouette(y: &[[f64; 2]], labels: &[usize]) -> f64 {
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..y.len() {
            if i != j {
                sums[labels[j]] += dist(y[i], y[j]);
                counts[labels[j]] += 1;
            }
        }
        let a = sums[labels[i]] / counts[labels[i]] as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i])
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / y.len() as f64
}

#[test]
fn perplexity_calibration_against_sigma_oracle() {
    let start = Instant::now();
    for seed in 0..10 {
        let x = gaussian(100, 16, seed);
        let aff = pairwise_affinities(&x, 15.0).unwrap();
        let sq = squared_distances(&x);
        for i in 0..100 {
            let sigma = aff.row_sigmas()[i];
            let h = entropy_from_sigma(&sq[i * 100..(i + 1) * 100], i, sigma);
            assert!(
                (h.exp() - 15.0).abs() < 1e-4,
                "seed {seed} row {i}: {}",
                h.exp()
            );
            assert!((aff.realized_perplexity(i) - 15.0).abs() < 1e-4);
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn affinities_are_symmetric_normalized_and_hollow() {
    let x = gaussian(40, 5, 7);
    let aff = pairwise_affinities(&x, 10.0).unwrap();
    let n = aff.n();
    let mut sum = 0.0;
    for i in 0..n {
        assert_eq!(aff.get(i, i), 0.0);
        for j in 0..n {
            assert_eq!(aff.get(i, j), aff.get(j, i));
            sum += aff.get(i, j);
        }
    }
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn cosine_hint_ignores_row_scale() {
    let x = gaussian(30, 6, 2).with_metric_hint(MetricHint::Cosine);
    let scaled: Vec<Vec<f64>> = x
        .rows()
        .enumerate()
        .map(|(i, r)| r.iter().map(|v| v * (1.0 + i as f64)).collect())
        .collect();
    let y = EmbeddingMatrix::from_rows(&scaled, MetricHint::Cosine).unwrap();
    let a = pairwise_affinities(&x, 8.0).unwrap();
    let b = pairwise_affinities(&y, 8.0).unwrap();
    for (u, v) in a.joint().iter().zip(b.joint()) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let x = gaussian(5, 3, 11);
    let p = pairwise_affinities(&x, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<[f64; 2]> = (0..5)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();

    assert!((kl_divergence(&p, &y) - oracle_kl(&p, &y)).abs() < 1e-12);
    let g = kl_gradient(&p, &y, 1.0);
    let h = 1e-6;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..5 {
        for k in 0..2 {
            let mut plus = y.clone();
            let mut minus = y.clone();
            plus[i][k] += h;
            minus[i][k] -= h;
            let fd = (oracle_kl(&p, &plus) - oracle_kl(&p, &minus)) / (2.0 * h);
            num += (g[i][k] - fd).powi(2);
            den += fd.powi(2);
        }
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-4, "relative error {rel}");
}

#[test]
fn kl_descends_after_exaggeration() {
    let fixtures = [
        gaussian(80, 8, 1),
        blobs(30, 3, 6, 8.0, 2).0,
        gaussian(60, 32, 3).with_metric_hint(MetricHint::Cosine),
    ];
    let params = TsneParams::<f64>::default();
    for x in &fixtures {
        let layout = tsne_fit(x, &params).unwrap();
        let first_post = layout
            .kl_trace
            .iter()
            .find(|r| r.iteration > params.early_exaggeration_iters)
            .unwrap();
        let last = layout.kl_trace.last().unwrap();
        assert_eq!(last.iteration, 1000);
        assert!(
            last.kl <= first_post.kl + 1e-6,
            "{} > {}",
            last.kl,
            first_post.kl
        );
    }
}

#[test]
fn two_blobs_separate() {
    let (x, labels) = blobs(50, 2, 10, 10.0, 9);
    let layout = tsne_fit(&x, &TsneParams::default()).unwrap();
    let s = silhouette(&layout.coords, &labels);
    assert!(s > 0.5, "silhouette {s}");
}

#[test]
fn layouts_are_deterministic() {
    let x = gaussian(50, 4, 4);
    let params = TsneParams {
        iterations: 300,
        seed: 17,
        ..Default::default()
    };
    let a = tsne_fit(&x, &params).unwrap();
    let b = tsne_fit(&x, &params).unwrap();
    assert_eq!(a, b);
    let c = tsne_fit(&x, &TsneParams { seed: 18, ..params }).unwrap();
    assert_ne!(a.coords, c.coords);
}

#[test]
fn duplicate_query_lands_on_its_twin() {
    let (train, labels) = blobs(40, 3, 8, 6.0, 21);
    let labels: Vec<Label> = labels.into_iter().map(Label::Class).collect();
    let twin = 17;
    let query = train.select_rows(&[twin]).unwrap();
    let layout = joint_layout(&train, &labels, Some(&query), &TsneParams::default()).unwrap();
    assert_eq!(layout.query_indices(), vec![train.n()]);
    assert_eq!(layout.roles[twin], PointRole::Train(labels[twin]));

    let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let n = train.n();
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| d(layout.coords[i], layout.coords[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let q05 = nn[(0.05 * n as f64).floor() as usize];
    let gap = d(layout.coords[n], layout.coords[twin]);
    assert!(gap <= q05, "twin gap {gap} above 5% quantile {q05}");
}

#[test]
fn zero_queries_match_plain_fit() {
    let (train, labels) = blobs(20, 2, 5, 5.0, 3);
    let labels: Vec<Label> = labels.into_iter().map(Label::Class).collect();
    let params = TsneParams {
        iterations: 400,
        ..Default::default()
    };
    let joint = joint_layout(&train, &labels, None, &params).unwrap();
    let plain = tsne_fit(&train, &params).unwrap();
    assert_eq!(joint.coords, plain.coords);
    assert_eq!(joint.kl_trace, plain.kl_trace);
    assert!(joint.query_indices().is_empty());
}

#[test]
fn f32_layout_runs() {
    let x = gaussian(30, 4, 8).cast::<f32>();
    let layout = tsne_fit(
        &x,
        &TsneParams {
            iterations: 300,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(layout.coords.iter().flatten().all(|v| v.is_finite()));
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[test]
fn pca_reconstruction_error_equals_discarded_variance() {
    let x = gaussian(60, 6, 13);
    let (n, d) = (x.n(), x.d());
    let mean: Vec<f64> = (0..d)
        .map(|j| x.rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    x.rows()
                        .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                        .sum::<f64>()
                        / n as f64
                })
                .collect()
        })
        .collect();
    let oracle = jacobi_eigenvalues(cov);

    for dims in 1..=d {
        let pca = pca_project(&x, dims).unwrap();
        for (a, b) in pca.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
        let err: f64 = (0..n)
            .map(|i| {
                pca.reconstruct(i)
                    .iter()
                    .zip(x.row(i))
                    .map(|(r, v)| (r - v).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let discarded: f64 = oracle[dims..].iter().sum();
        assert!(
            (err - discarded).abs() < 1e-9,
            "dims {dims}: {err} vs {discarded}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn affinity_invariants(seed in any::<u64>(), n in 6usize..30, d in 1usize..6) {
        let x = gaussian(n, d, seed);
        let perp = (n as f64 - 1.0) / 3.0;
        let aff = pairwise_affinities(&x, perp.max(1.0)).unwrap();
        let total: f64 = aff.joint().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for i in 0..n {
            prop_assert_eq!(aff.get(i, i), 0.0);
            prop_assert!((aff.realized_perplexity(i) - perp.max(1.0)).abs() < 1e-4);
            for j in 0..i {
                prop_assert_eq!(aff.get(i, j), aff.get(j, i));
            }
        }
    }
}
