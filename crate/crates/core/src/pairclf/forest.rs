use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Presorted, Stats, Tree};
use crate::par;

/// Weighted Gini impurity decrease. Stats are `[w, w·y, _]`.
struct Gini;

fn gini(s: &Stats) -> f64 {
    let p = s[1] / s[0];
    2.0 * p * (1.0 - p)
}

impl Criterion for Gini {
    fn gain(&self, parent: &Stats, l: &Stats, r: &Stats) -> Option<f64> {
        (l[0] > 0.0 && r[0] > 0.0).then(|| parent[0] * gini(parent) - l[0] * gini(l) - r[0] * gini(r))
    }

    fn leaf(&self, s: &Stats) -> f64 {
        s[1] / s[0]
    }
}

/// Bagged Gini trees with `sqrt(dim)` candidate features per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], n_estimators: usize, max_depth: usize, seed: u64) -> Self {
        let data = Presorted::new(x);
        let dim = data.dim();
        let mtry = ((dim as f64).sqrt() as usize).clamp(1, dim.max(1));
        let trees = par::map_range(n_estimators, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut counts = vec![0.0; x.len()];
            for _ in 0..x.len() {
                counts[rng.random_range(0..x.len())] += 1.0;
            }
            let stats: Vec<Stats> = counts
                .iter()
                .zip(y)
                .map(|(&w, &yi)| [w, if yi { w } else { 0.0 }, 0.0])
                .collect();
            grow(&data, &stats, &Gini, max_depth, || {
                let mut mask = vec![false; dim];
                for f in sample(&mut rng, dim, mtry) {
                    mask[f] = true;
                }
                Some(mask)
            })
        });
        RandomForest { trees }
    }

    pub(crate) fn predict_pos(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
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

    fn blobs() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let c = i % 2 == 0;
            let shift = if c { 1.5 } else { -1.5 };
            x.push((0..6).map(|_| rng.random_range(-1.0..1.0) + shift).collect());
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn forest_size_and_depth_bound() {
        let (x, y) = blobs();
        let f = RandomForest::fit(&x, &y, 100, 4, 1);
        assert_eq!(f.num_trees(), 100);
        assert!(f.max_tree_depth() <= 4);
        let acc = x.iter().zip(&y).filter(|(r, &c)| (f.predict_pos(r) > 0.5) == c).count();
        assert!(acc >= 190, "{acc}");
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = blobs();
        assert_eq!(RandomForest::fit(&x, &y, 10, 4, 3), RandomForest::fit(&x, &y, 10, 4, 3));
        assert_ne!(RandomForest::fit(&x, &y, 10, 4, 3), RandomForest::fit(&x, &y, 10, 4, 4));
    }
}
