//! Stratified train/test splits and k-fold plans, deterministic per seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index plan for a split or a k-fold assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Per-sample fold assignment when built by [`stratified_kfold`].
    pub folds: Option<Vec<usize>>,
    pub seed: u64,
}

impl SplitPlan {
    /// Train/test index pair for one fold of a k-fold plan.
    pub fn fold(&self, fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let assignment = self
            .folds
            .as_ref()
            .ok_or_else(|| Error::ContractViolation("plan has no fold assignment".into()))?;
        let test: Vec<usize> = assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect();
        if test.is_empty() {
            return Err(Error::ContractViolation(format!("fold {fold} is empty")));
        }
        let train: Vec<usize> = assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect();
        Ok((train, test))
    }

    pub fn fold_count(&self) -> usize {
        self.folds
            .as_ref()
            .and_then(|f| f.iter().max().map(|m| m + 1))
            .unwrap_or(0)
    }
}

fn class_indices(labels: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0.0 {
            zeros.push(i);
        } else if l == 1.0 {
            ones.push(i);
        } else {
            return Err(Error::ContractViolation(format!(
                "label {l} not in {{0, 1}}"
            )));
        }
    }
    Ok((zeros, ones))
}

/// Stratified holdout split: each class is shuffled and cut at `ratio`,
/// preserving class proportions within rounding.
pub fn stratified_split(labels: &[f64], ratio: f64, seed: u64) -> Result<SplitPlan> {
    if labels.is_empty() || !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::ContractViolation(format!(
            "need nonempty labels and ratio in (0, 1), got {} labels, ratio {ratio}",
            labels.len()
        )));
    }
    let (zeros, ones) = class_indices(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut class in [zeros, ones] {
        class.shuffle(&mut rng);
        let n_train = (ratio * class.len() as f64).round() as usize;
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train,
        test,
        folds: None,
        seed,
    })
}

/// Stratified k-fold plan: per-class shuffle then round-robin assignment.
/// Every class must have at least `k` members.
pub fn stratified_kfold(labels: &[f64], k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::ContractViolation(format!("k = {k}, need >= 2")));
    }
    let (zeros, ones) = class_indices(labels)?;
    for (name, class) in [("0", &zeros), ("1", &ones)] {
        if class.len() < k {
            return Err(Error::InsufficientClassMembers(format!(
                "class {name} has {} members for k = {k}",
                class.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for mut class in [zeros, ones] {
        class.shuffle(&mut rng);
        for (j, idx) in class.into_iter().enumerate() {
            assignment[idx] = j % k;
        }
    }
    Ok(SplitPlan {
        train: Vec::new(),
        test: Vec::new(),
        folds: Some(assignment),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n_pos: usize, n_neg: usize) -> Vec<f64> {
        let mut l = vec![1.0; n_pos];
        l.extend(vec![0.0; n_neg]);
        l
    }

    #[test]
    fn split_preserves_class_counts() {
        let labels = labels(30, 70);
        let plan = stratified_split(&labels, 0.8, 9).unwrap();
        let train_pos = plan.train.iter().filter(|&&i| labels[i] == 1.0).count();
        let train_neg = plan.train.len() - train_pos;
        assert!(
            (train_pos as i64 - 24).abs() <= 1,
            "train_pos = {train_pos}"
        );
        assert!(
            (train_neg as i64 - 56).abs() <= 1,
            "train_neg = {train_neg}"
        );

        // Disjoint and exhaustive.
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_proportions_within_two_points() {
        let labels = labels(137, 363);
        let global = 137.0 / 500.0;
        let plan = stratified_split(&labels, 0.8, 3).unwrap();
        for part in [&plan.train, &plan.test] {
            let pos = part.iter().filter(|&&i| labels[i] == 1.0).count() as f64;
            let share = pos / part.len() as f64;
            assert!((share - global).abs() <= 0.02, "share {share} vs {global}");
        }
    }

    #[test]
    fn kfold_balanced_fixture() {
        let labels = labels(50, 50);
        let plan = stratified_kfold(&labels, 10, 4).unwrap();
        for fold in 0..10 {
            let (_, test) = plan.fold(fold).unwrap();
            assert_eq!(test.len(), 10);
            let pos = test.iter().filter(|&&i| labels[i] == 1.0).count();
            assert_eq!(pos, 5, "fold {fold} has {pos} positives");
        }
    }

    #[test]
    fn folds_are_disjoint_and_exhaustive() {
        let labels = labels(23, 41);
        let plan = stratified_kfold(&labels, 5, 11).unwrap();
        let mut seen = vec![false; labels.len()];
        for fold in 0..5 {
            let (train, test) = plan.fold(fold).unwrap();
            assert_eq!(train.len() + test.len(), labels.len());
            for &i in &test {
                assert!(!seen[i], "index {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn plans_are_deterministic_per_seed() {
        let labels = labels(40, 60);
        assert_eq!(
            stratified_split(&labels, 0.8, 7).unwrap(),
            stratified_split(&labels, 0.8, 7).unwrap()
        );
        assert_ne!(
            stratified_split(&labels, 0.8, 7).unwrap(),
            stratified_split(&labels, 0.8, 8).unwrap()
        );
        assert_eq!(
            stratified_kfold(&labels, 10, 7).unwrap(),
            stratified_kfold(&labels, 10, 7).unwrap()
        );
    }

    #[test]
    fn small_classes_are_rejected_for_kfold() {
        let labels = labels(5, 95);
        assert!(matches!(
            stratified_kfold(&labels, 10, 1),
            Err(Error::InsufficientClassMembers(_))
        ));
    }
}
