use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Presorted, Stats, Tree};

/// Second-order split gain with L2 leaf penalty. Stats are `[1, g, h]`.
struct Newton {
    lambda: f64,
    min_child_weight: f64,
}

impl Newton {
    fn score(&self, s: &Stats) -> f64 {
        s[1] * s[1] / (s[2] + self.lambda)
    }
}

impl Criterion for Newton {
    fn gain(&self, parent: &Stats, l: &Stats, r: &Stats) -> Option<f64> {
        (l[2] >= self.min_child_weight && r[2] >= self.min_child_weight)
            .then(|| 0.5 * (self.score(l) + self.score(r) - self.score(parent)))
    }

    fn leaf(&self, s: &Stats) -> f64 {
        -s[1] / (s[2] + self.lambda)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_loss(margins: &[f64], y: &[bool]) -> f64 {
    let sum: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &yi)| {
            // softplus(-m) for positives, softplus(m) for negatives
            let z = if yi { -m } else { m };
            z.max(0.0) + (-z.abs()).exp().ln_1p()
        })
        .sum();
    sum / y.len() as f64
}

/// Boosted Newton trees on the logistic loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    trees: Vec<Tree>,
    /// Mean training log-loss after each round.
    loss_trace: Vec<f64>,
}

const LAMBDA: f64 = 1.0;
const MIN_CHILD_WEIGHT: f64 = 1.0;
const MAX_HALVINGS: usize = 30;

impl GradientBoosting {
    /// Each round's shrunken tree is halved until the training loss does not
    /// increase, which keeps the loss trace monotone.
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], n_estimators: usize, max_depth: usize, learning_rate: f64) -> Self {
        let data = Presorted::new(x);
        let crit = Newton {
            lambda: LAMBDA,
            min_child_weight: MIN_CHILD_WEIGHT,
        };
        let mut margins = vec![0.0; x.len()];
        let mut loss = log_loss(&margins, y);
        let mut trees = Vec::with_capacity(n_estimators);
        let mut trace = Vec::with_capacity(n_estimators);
        for _ in 0..n_estimators {
            let stats: Vec<Stats> = margins
                .iter()
                .zip(y)
                .map(|(&m, &yi)| {
                    let p = sigmoid(m);
                    [1.0, p - yi as u8 as f64, (p * (1.0 - p)).max(1e-16)]
                })
                .collect();
            let mut tree = grow(&data, &stats, &crit, max_depth, || None);
            tree.scale_leaves(learning_rate);
            let deltas: Vec<f64> = x.iter().map(|r| tree.predict(r)).collect();
            let mut c = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = margins.iter().zip(&deltas).map(|(m, d)| m + c * d).collect();
                let l = log_loss(&trial, y);
                if l <= loss {
                    accepted = Some((trial, l));
                    break;
                }
                c /= 2.0;
            }
            match accepted {
                Some((m, l)) => {
                    tree.scale_leaves(c);
                    margins = m;
                    loss = l;
                }
                None => tree.scale_leaves(0.0),
            }
            trees.push(tree);
            trace.push(loss);
        }
        GradientBoosting { trees, loss_trace: trace }
    }

    pub(crate) fn predict_pos(&self, x: &[f64]) -> f64 {
        sigmoid(self.trees.iter().map(|t| t.predict(x)).sum())
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separable_positives_exceed_point_nine() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 3) % 7) as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let m = GradientBoosting::fit(&x, &y, 100, 4, 0.1);
        assert_eq!(m.num_trees(), 100);
        assert!(m.max_tree_depth() <= 4);
        for (r, &c) in x.iter().zip(&y) {
            let p = m.predict_pos(r);
            if c {
                assert!(p > 0.9, "{p}");
            } else {
                assert!(p < 0.1, "{p}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn loss_trace_never_increases(
            rows in proptest::collection::vec((proptest::collection::vec(-3.0f64..3.0, 3), any::<bool>()), 4..40)
        ) {
            let x: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
            let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
            let m = GradientBoosting::fit(&x, &y, 30, 4, 0.1);
            let mut prev = log_loss(&vec![0.0; y.len()], &y);
            for &l in m.loss_trace() {
                prop_assert!(l <= prev + 1e-15);
                prev = l;
            }
        }
    }
}
