use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, Label};

/// Assignment of examples to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each example.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

fn check(n: usize, k: usize) -> Result<(), EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::BadFoldCount { n, k });
    }
    Ok(())
}

fn round_robin(order: &[usize], n: usize, k: usize, seed: u64) -> FoldPlan {
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    FoldPlan {
        k,
        seed,
        assignments,
    }
}

/// Seeded shuffle followed by round-robin assignment.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    check(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(round_robin(&order, n, k, seed))
}

/// Like [`kfold_split`] but shuffles within each class and deals the
/// political examples first, so every fold gets its share of each class
/// while overall fold sizes still differ by at most one.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    check(labels.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_political()).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_political()).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    pos.extend(neg);
    Ok(round_robin(&pos, labels.len(), k, seed))
}
