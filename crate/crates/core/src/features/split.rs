use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::{rng, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec { seed, ..Default::default() }
    }
}

/// Seeded train/test partition of `0..labels.len()`, both sides sorted.
///
/// The train side has `round(fraction · n)` rows. When stratified, per-class
/// quotas are the floors of `fraction · n_class`, with the remainder handed
/// out by largest fractional part (class 0 first on ties).
pub fn split(labels: &[Label], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), FeatureError> {
    let n = labels.len();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(FeatureError::Input("train_fraction must lie strictly between 0 and 1".into()));
    }
    if n < 5 {
        return Err(FeatureError::Input(format!("need at least 5 rows to split, got {n}")));
    }
    let mut rng = rng::seeded(spec.seed);
    let target = (spec.train_fraction * n as f64).round() as usize;

    let mut train = Vec::with_capacity(target);
    if spec.stratified {
        let classes: [Vec<usize>; 2] = [Label::Real, Label::Fake]
            .map(|c| (0..n).filter(|&i| labels[i] == c).collect());
        if let Some(c) = classes.iter().position(|m| m.len() == 1) {
            return Err(FeatureError::Input(format!("class {c} has a single member; stratified split impossible")));
        }
        let exact: Vec<f64> = classes.iter().map(|m| spec.train_fraction * m.len() as f64).collect();
        let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
        let mut order = [0usize, 1];
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        let mut remaining = target.saturating_sub(quota.iter().sum());
        for &c in order.iter().cycle().take(4) {
            if remaining == 0 {
                break;
            }
            if quota[c] < classes[c].len() {
                quota[c] += 1;
                remaining -= 1;
            }
        }
        for (members, q) in classes.into_iter().zip(quota) {
            let mut members = members;
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..q]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train.extend_from_slice(&all[..target]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

/// Append minority-class rows drawn uniformly with replacement until both
/// classes have equal counts. Majority rows are untouched.
pub fn upsample(train: &[usize], labels: &[Label], seed: u64) -> Result<Vec<usize>, FeatureError> {
    let by_class: [Vec<usize>; 2] =
        [Label::Real, Label::Fake].map(|c| train.iter().copied().filter(|&i| labels[i] == c).collect());
    if by_class.iter().any(Vec::is_empty) {
        return Err(FeatureError::Input("both classes must be present in the training rows".into()));
    }
    let (minority, deficit) = if by_class[0].len() < by_class[1].len() {
        (&by_class[0], by_class[1].len() - by_class[0].len())
    } else {
        (&by_class[1], by_class[0].len() - by_class[1].len())
    };
    let mut rng = rng::seeded(seed);
    let mut out = train.to_vec();
    out.extend((0..deficit).map(|_| *minority.choose(&mut rng).expect("non-empty minority")));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n0: usize, n1: usize) -> Vec<Label> {
        let mut v = vec![Label::Real; n0];
        v.extend(vec![Label::Fake; n1]);
        v
    }

    fn count(idx: &[usize], l: &[Label], c: Label) -> usize {
        idx.iter().filter(|&&i| l[i] == c).count()
    }

    #[test]
    fn balanced_ten() {
        let l = labels(5, 5);
        let (train, test) = split(&l, &SplitSpec::with_seed(7)).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!((count(&train, &l, Label::Real), count(&train, &l, Label::Fake)), (4, 4));
        assert_eq!(split(&l, &SplitSpec::with_seed(7)).unwrap(), (train, test));
    }

    #[test]
    fn seventy_thirty() {
        let l = labels(70, 30);
        let (train, _) = split(&l, &SplitSpec::with_seed(1)).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!((count(&train, &l, Label::Real), count(&train, &l, Label::Fake)), (56, 24));
    }

    #[test]
    fn singleton_class_rejected() {
        assert!(split(&labels(9, 1), &SplitSpec::default()).is_err());
        assert!(split(&labels(2, 2), &SplitSpec::default()).is_err());
        let unstrat = SplitSpec { stratified: false, ..Default::default() };
        assert!(split(&labels(9, 1), &unstrat).is_ok());
    }

    #[test]
    fn upsample_parity() {
        let l = labels(6, 2);
        let train: Vec<usize> = (0..8).collect();
        let out = upsample(&train, &l, 3).unwrap();
        assert_eq!(out.len(), 12);
        assert_eq!(&out[..8], &train[..]);
        assert!(out[8..].iter().all(|&i| i == 6 || i == 7));
        let balanced: Vec<usize> = vec![0, 1, 6, 7];
        assert_eq!(upsample(&balanced, &l, 3).unwrap(), balanced);
        assert!(upsample(&[0, 1, 2], &l, 3).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_and_stratifies(n0 in 2usize..60, n1 in 2usize..60, seed in any::<u64>()) {
            prop_assume!(n0 + n1 >= 5);
            let l = labels(n0, n1);
            let n = n0 + n1;
            let (train, test) = split(&l, &SplitSpec::with_seed(seed)).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(train.len(), (0.8 * n as f64).round() as usize);
            for (c, nc) in [(Label::Real, n0), (Label::Fake, n1)] {
                let got = count(&train, &l, c) as f64;
                prop_assert!((got - 0.8 * nc as f64).abs() <= 1.0);
            }
        }

        #[test]
        fn upsample_balances_without_new_rows(n0 in 1usize..40, n1 in 1usize..40, seed in any::<u64>()) {
            let l = labels(n0, n1);
            let train: Vec<usize> = (0..n0 + n1).collect();
            let out = upsample(&train, &l, seed).unwrap();
            prop_assert_eq!(count(&out, &l, Label::Real), count(&out, &l, Label::Fake));
            let mut distinct = out.clone();
            distinct.sort_unstable();
            distinct.dedup();
            prop_assert_eq!(distinct, train);
        }
    }
}
