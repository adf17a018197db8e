use serde::{Deserialize, Serialize};

use crate::par;

/// Gaussian naive Bayes with per-class feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Log prior per class (negative, positive).
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

#[derive(Default, Clone)]
struct Moments {
    n: [f64; 2],
    sum: [Vec<f64>; 2],
    sq: [Vec<f64>; 2],
}

impl Moments {
    fn new(dim: usize) -> Self {
        Moments {
            n: [0.0; 2],
            sum: [vec![0.0; dim], vec![0.0; dim]],
            sq: [vec![0.0; dim], vec![0.0; dim]],
        }
    }

    fn merge(mut self, o: Moments) -> Moments {
        for c in 0..2 {
            self.n[c] += o.n[c];
            for (a, b) in self.sum[c].iter_mut().zip(&o.sum[c]) {
                *a += b;
            }
            for (a, b) in self.sq[c].iter_mut().zip(&o.sq[c]) {
                *a += b;
            }
        }
        self
    }
}

const SHARD: usize = 4096;

impl GaussianNb {
    /// `x` rows with labels `y`; both classes must be present.
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], var_smoothing: f64) -> Self {
        let dim = x[0].len();
        let idx: Vec<usize> = (0..x.len()).collect();
        let parts = par::map_chunks(&idx, SHARD, |chunk| {
            let mut m = Moments::new(dim);
            for &i in chunk {
                let c = y[i] as usize;
                m.n[c] += 1.0;
                for (k, &v) in x[i].iter().enumerate() {
                    m.sum[c][k] += v;
                }
            }
            m
        });
        let m = parts.into_iter().fold(Moments::new(dim), Moments::merge);
        let mean: [Vec<f64>; 2] = [0, 1].map(|c| m.sum[c].iter().map(|s| s / m.n[c]).collect());
        // second pass around the means for numerical stability
        let parts = par::map_chunks(&idx, SHARD, |chunk| {
            let mut m = Moments::new(dim);
            for &i in chunk {
                let c = y[i] as usize;
                for (k, &v) in x[i].iter().enumerate() {
                    let d = v - mean[c][k];
                    m.sq[c][k] += d * d;
                }
            }
            m
        });
        let sq = parts.into_iter().fold(Moments::new(dim), Moments::merge).sq;

        // largest per-feature variance over all rows
        let n = x.len() as f64;
        let overall_mean: Vec<f64> = (0..dim).map(|k| (m.sum[0][k] + m.sum[1][k]) / n).collect();
        let max_var = (0..dim)
            .map(|k| x.iter().map(|r| (r[k] - overall_mean[k]).powi(2)).sum::<f64>() / n)
            .fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 { var_smoothing * max_var } else { var_smoothing };

        let var = [0, 1].map(|c| sq[c].iter().map(|s| s / m.n[c] + epsilon).collect());
        GaussianNb {
            log_prior: [(m.n[0] / n).ln(), (m.n[1] / n).ln()],
            mean,
            var,
        }
    }

    pub(crate) fn predict_pos(&self, x: &[f64]) -> f64 {
        let log_lik = |c: usize, k: usize, v: f64| {
            let var = self.var[c][k];
            -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - self.mean[c][k]).powi(2) / (2.0 * var)
        };
        // log odds accumulated per feature, so features with identical class
        // moments cancel exactly
        let mut log_odds = self.log_prior[1] - self.log_prior[0];
        for (k, &v) in x.iter().enumerate() {
            log_odds += log_lik(1, k, v) - log_lik(0, k, v);
        }
        1.0 / (1.0 + (-log_odds).exp())
    }
}
