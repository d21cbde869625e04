use serde::{Deserialize, Serialize};

use super::{check_inputs, EvalError, Label};

/// Confusion counts with `Political` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn at_threshold(scores: &[f64], labels: &[Label], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l.is_political()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same table seen from the non-political class.
    pub fn mirrored(&self) -> Self {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

/// Precision, recall and F1 for one class. 0/0 is taken as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    /// Metrics for the class that `c` treats as positive.
    pub fn from_confusion(c: &Confusion) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: c.tp + c.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub political: ClassMetrics,
    pub non_political: ClassMetrics,
    pub macro_f1: f64,
    pub auc: f64,
    pub threshold: f64,
    pub confusion: Confusion,
}

/// Area under the ROC curve via the Mann-Whitney rank statistic. Tied
/// positive/negative pairs count one half.
pub fn auc_rank(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; a tie group shares its average rank
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let group_pos = order[i..=j].iter().filter(|&&k| labels[k].is_political()).count();
        pos_rank_sum += avg_rank * group_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Thresholded metrics plus AUC. An ad is predicted political when its
/// score is at least `threshold`.
pub fn compute_metrics(scores: &[f64], labels: &[Label], threshold: f64) -> Result<Metrics, EvalError> {
    let auc = auc_rank(scores, labels)?;
    let confusion = Confusion::at_threshold(scores, labels, threshold);
    let political = ClassMetrics::from_confusion(&confusion);
    let non_political = ClassMetrics::from_confusion(&confusion.mirrored());
    Ok(Metrics {
        accuracy: ratio(confusion.tp + confusion.tn, confusion.total()),
        political,
        non_political,
        macro_f1: (political.f1 + non_political.f1) / 2.0,
        auc,
        threshold,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{NonPolitical as N, Political as P};

    /// Counts correctly ordered positive/negative pairs directly.
    fn auc_pairs(scores: &[f64], labels: &[Label]) -> f64 {
        let mut good = 0.0;
        let mut total = 0.0;
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if li.is_political() && !lj.is_political() {
                    total += 1.0;
                    if scores[i] > scores[j] {
                        good += 1.0;
                    } else if scores[i] == scores[j] {
                        good += 0.5;
                    }
                }
            }
        }
        good / total
    }

    #[test]
    fn hand_confusion_table() {
        // political: TP=8, FP=2, FN=2; non-political: TP=18, FP=2, FN=2
        let mut scores = vec![0.9; 8];
        let mut labels = vec![P; 8];
        scores.extend([0.9; 2]);
        labels.extend([N; 2]);
        scores.extend([0.1; 2]);
        labels.extend([P; 2]);
        scores.extend([0.1; 18]);
        labels.extend([N; 18]);
        let m = compute_metrics(&scores, &labels, 0.5).unwrap();
        assert!((m.political.f1 - 0.8).abs() < 1e-12);
        assert!((m.non_political.f1 - 0.9).abs() < 1e-12);
        assert!((m.macro_f1 - 0.85).abs() < 1e-12);
        assert!((m.accuracy - 26.0 / 30.0).abs() < 1e-12);
        assert_eq!(m.political.support, 10);
        assert_eq!(m.non_political.support, 20);
    }

    #[test]
    fn perfect_separation() {
        let m = compute_metrics(&[0.9, 0.8, 0.2, 0.1], &[P, P, N, N], 0.5).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.auc, 1.0);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn auc_three_of_four_pairs() {
        let auc = auc_rank(&[0.8, 0.4, 0.6, 0.2], &[P, P, N, N]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(auc_rank(&[0.5, 0.5], &[P, N]).unwrap(), 0.5);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(compute_metrics(&[0.1, 0.2], &[P, P], 0.5), Err(EvalError::SingleClass)));
        assert!(matches!(compute_metrics(&[0.1], &[P, N], 0.5), Err(EvalError::LengthMismatch(1, 2))));
        assert!(matches!(compute_metrics(&[1.5, 0.2], &[P, N], 0.5), Err(EvalError::ScoreOutOfRange(..))));
        assert!(matches!(compute_metrics(&[], &[], 0.5), Err(EvalError::Empty)));
    }

    #[test]
    fn undefined_ratios_are_zero() {
        // nothing predicted political
        let m = compute_metrics(&[0.1, 0.2], &[P, N], 0.5).unwrap();
        assert_eq!(m.political.precision, 0.0);
        assert_eq!(m.political.f1, 0.0);
    }

    fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
        proptest::collection::vec((0u32..=20, any::<bool>()), 2..60).prop_filter_map("both classes", |v| {
            let scores: Vec<f64> = v.iter().map(|(s, _)| *s as f64 / 20.0).collect();
            let labels: Vec<Label> = v.iter().map(|(_, p)| Label::from_political(*p)).collect();
            let pos = labels.iter().filter(|l| l.is_political()).count();
            (pos > 0 && pos < labels.len()).then_some((scores, labels))
        })
    }

    proptest! {
        #[test]
        fn rank_auc_equals_pair_count((scores, labels) in scored()) {
            let a = auc_rank(&scores, &labels).unwrap();
            prop_assert!((a - auc_pairs(&scores, &labels)).abs() < 1e-12);
        }

        #[test]
        fn metrics_in_unit_interval((scores, labels) in scored(), t in 0.0f64..1.0) {
            let m = compute_metrics(&scores, &labels, t).unwrap();
            for v in [m.accuracy, m.macro_f1, m.auc, m.political.f1, m.political.precision,
                      m.political.recall, m.non_political.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((m.macro_f1 - (m.political.f1 + m.non_political.f1) / 2.0).abs() < 1e-12);
        }

        #[test]
        fn swapping_classes_mirrors_metrics((scores, labels) in scored()) {
            // avoid the tie at exactly 0.5, where both views predict "political"
            let scores: Vec<f64> = scores.iter().map(|s| if *s == 0.5 { 0.55 } else { *s }).collect();
            let flipped_scores: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let flipped_labels: Vec<Label> = labels.iter().map(|l| l.flipped()).collect();
            let a = compute_metrics(&scores, &labels, 0.5).unwrap();
            let b = compute_metrics(&flipped_scores, &flipped_labels, 0.5).unwrap();
            prop_assert_eq!(a.political, b.non_political);
            prop_assert_eq!(a.non_political, b.political);
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
            prop_assert!((a.auc - b.auc).abs() < 1e-12);
        }
    }
}
