use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset, Label, Split, TaskKind};

/// Reassigns the train/query split.
///
/// Classification datasets are split per class, taking
/// `round(fraction * class_size)` members of each class into the query set.
/// Regression datasets are split uniformly. Unlabeled samples always land in
/// the query set since they cannot be used for training.
pub fn split_dataset(ds: &Dataset, query_fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(query_fraction > 0.0 && query_fraction < 1.0) {
        return Err(DataError::FractionOutOfRange(query_fraction));
    }
    if ds.len() < 2 {
        return Err(DataError::TooFewSamples(ds.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    for s in &mut out.samples {
        s.split = Split::Train;
        if s.label.is_none() {
            s.split = Split::Query;
        }
    }

    let groups: Vec<Vec<usize>> = match ds.task_kind {
        TaskKind::Classification => {
            let mut groups = vec![Vec::new(); ds.n_classes()];
            for (i, s) in ds.samples.iter().enumerate() {
                if let Some(Label::Class(c)) = s.label {
                    groups[c].push(i);
                }
            }
            groups
        }
        TaskKind::Regression => vec![ds
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label.is_some())
            .map(|(i, _)| i)
            .collect()],
    };

    for (class, mut members) in groups.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let n_query = (query_fraction * members.len() as f64).round() as usize;
        if n_query >= members.len() {
            return Err(match ds.task_kind {
                TaskKind::Classification => DataError::ClassLosesTrain { class },
                TaskKind::Regression => DataError::NoTrainSamples,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members[..n_query] {
            out.samples[i].split = Split::Query;
        }
    }
    Ok(out)
}

/// Keeps at most `cap` of the given rows, preserving class proportions.
///
/// Quotas are `cap * class_size / n` rounded by largest remainder (ties to
/// the smaller class). Value labels form a single stratum. The returned row
/// indices are sorted ascending; with `labels.len() <= cap` every row is kept.
pub fn stratified_subsample(labels: &[Label], cap: usize, seed: u64) -> Vec<usize> {
    let n = labels.len();
    if n <= cap {
        return (0..n).collect();
    }
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        strata.entry(l.class().unwrap_or(0)).or_default().push(i);
    }
    let mut quotas: Vec<(usize, usize, usize)> = strata
        .iter()
        .map(|(&c, rows)| {
            let exact = cap * rows.len();
            (c, exact / n, exact % n)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        quotas[b]
            .2
            .cmp(&quotas[a].2)
            .then(quotas[a].0.cmp(&quotas[b].0))
    });
    for &o in order.iter().take(cap - assigned) {
        quotas[o].1 += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(cap);
    for (c, quota, _) in quotas {
        let mut rows = strata[&c].clone();
        rows.shuffle(&mut rng);
        kept.extend_from_slice(&rows[..quota]);
    }
    kept.sort_unstable();
    kept
}
