//! Feed-forward network with ReLU hidden layers and a sigmoid output, fitted
//! with Adam on the L2-penalized log-loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

pub(crate) struct MlpParams<'a> {
    pub hidden: &'a [usize],
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub n_iter_no_change: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const TOL: f64 = 1e-4;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlp {
    fn init<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                // Glorot uniform; the sigmoid output layer uses a narrower range
                let gain = if i == last { 2.0 } else { 6.0 };
                let bound = (gain / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    w: (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect(),
                    b: (0..fan_out).map(|_| rng.random_range(-bound..bound)).collect(),
                }
            })
            .collect();
        Mlp { layers }
    }

    /// Activations of every layer, input first.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let n = self.layers.len();
        for (li, l) in self.layers.iter().enumerate() {
            let a = acts.last().unwrap();
            let z: Vec<f64> = (0..l.outputs)
                .map(|o| l.b[o] + l.w[o * l.inputs..(o + 1) * l.inputs].iter().zip(a).map(|(w, v)| w * v).sum::<f64>())
                .collect();
            let out = if li + 1 == n { z.into_iter().map(sigmoid).collect() } else { z.into_iter().map(|v| v.max(0.0)).collect() };
            acts.push(out);
        }
        acts
    }

    pub(crate) fn predict_pos(&self, x: &[f64]) -> f64 {
        self.forward(x).last().unwrap()[0]
    }

    fn zero_like(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.layers.iter().map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()])).collect()
    }

    /// Penalized mean log-loss over `idx`.
    fn loss(&self, x: &[Vec<f64>], y: &[bool], idx: &[usize], alpha: f64) -> f64 {
        let data: f64 = idx
            .iter()
            .map(|&i| {
                let p = self.predict_pos(&x[i]).clamp(1e-15, 1.0 - 1e-15);
                if y[i] {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum();
        let n = idx.len() as f64;
        data / n + 0.5 * alpha * self.sq_weights() / n
    }

    fn sq_weights(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.w).map(|w| w * w).sum()
    }

    /// Gradient of the penalized mean loss over one mini-batch.
    fn gradient(&self, x: &[Vec<f64>], y: &[bool], batch: &[usize], alpha: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut grads = self.zero_like();
        let n = batch.len() as f64;
        for &i in batch {
            let acts = self.forward(&x[i]);
            // output delta of sigmoid + log-loss
            let mut delta = vec![acts.last().unwrap()[0] - y[i] as u8 as f64];
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let a = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..l.outputs {
                    gb[o] += delta[o] / n;
                    for k in 0..l.inputs {
                        gw[o * l.inputs + k] += delta[o] * a[k] / n;
                    }
                }
                if li > 0 {
                    delta = (0..l.inputs)
                        .map(|k| {
                            let s: f64 = (0..l.outputs).map(|o| l.w[o * l.inputs + k] * delta[o]).sum();
                            if a[k] > 0.0 { s } else { 0.0 }
                        })
                        .collect();
                }
            }
        }
        for (l, (gw, _)) in self.layers.iter().zip(&mut grads) {
            for (g, w) in gw.iter_mut().zip(&l.w) {
                *g += alpha * w / n;
            }
        }
        grads
    }

    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], p: &MlpParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut sizes = vec![x[0].len()];
        sizes.extend_from_slice(p.hidden);
        sizes.push(1);
        let mut net = Mlp::init(&sizes, &mut rng);

        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.shuffle(&mut rng);
        let n_val = (p.validation_fraction * x.len() as f64) as usize;
        let (val, mut train) = if n_val >= 2 && x.len() - n_val >= 2 {
            (idx[..n_val].to_vec(), idx[n_val..].to_vec())
        } else {
            (Vec::new(), idx)
        };

        let mut m = net.zero_like();
        let mut v = net.zero_like();
        let mut t = 0i32;
        let mut best = f64::INFINITY;
        let mut best_net = net.clone();
        let mut stall = 0;
        for _ in 0..p.max_epochs {
            train.shuffle(&mut rng);
            for batch in train.chunks(p.batch_size.max(1)) {
                let g = net.gradient(x, y, batch, p.alpha);
                t += 1;
                let lr = p.learning_rate * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t));
                for (li, layer) in net.layers.iter_mut().enumerate() {
                    let params = [(&mut layer.w, 0), (&mut layer.b, 1)];
                    for (theta, which) in params {
                        let (gs, ms, vs) = if which == 0 {
                            (&g[li].0, &mut m[li].0, &mut v[li].0)
                        } else {
                            (&g[li].1, &mut m[li].1, &mut v[li].1)
                        };
                        for k in 0..theta.len() {
                            ms[k] = BETA1 * ms[k] + (1.0 - BETA1) * gs[k];
                            vs[k] = BETA2 * vs[k] + (1.0 - BETA2) * gs[k] * gs[k];
                            theta[k] -= lr * ms[k] / (vs[k].sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
            let monitored = if val.is_empty() { &train } else { &val };
            let loss = net.loss(x, y, monitored, p.alpha);
            if loss < best - TOL {
                best = loss;
                best_net = net.clone();
                stall = 0;
            } else {
                stall += 1;
                if stall >= p.n_iter_no_change {
                    break;
                }
            }
        }
        if val.is_empty() {
            net
        } else {
            best_net
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> MlpParams<'static> {
        MlpParams {
            hidden: &[10, 10],
            alpha: 1e-4,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            n_iter_no_change: 10,
            validation_fraction: 0.1,
            seed,
        }
    }

    fn data() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let y = x.iter().map(|r| r[0] + r[1] > 0.0).collect();
        (x, y)
    }

    #[test]
    fn learns_a_linear_boundary() {
        let (x, y) = data();
        let net = Mlp::fit(&x, &y, &params(1));
        let acc = x.iter().zip(&y).filter(|(r, &c)| (net.predict_pos(r) > 0.5) == c).count();
        assert!(acc > 270, "{acc}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = data();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::init(&[2, 4, 3, 1], &mut rng);
        let batch: Vec<usize> = (0..20).collect();
        let g = net.gradient(&x, &y, &batch, 0.3);
        let h = 1e-6;
        for li in 0..net.layers.len() {
            for k in 0..net.layers[li].w.len() {
                let mut a = net.clone();
                a.layers[li].w[k] += h;
                let mut b = net.clone();
                b.layers[li].w[k] -= h;
                let fd = (a.loss(&x, &y, &batch, 0.3) - b.loss(&x, &y, &batch, 0.3)) / (2.0 * h);
                assert!((fd - g[li].0[k]).abs() < 1e-6, "layer {li} w{k}: {fd} vs {}", g[li].0[k]);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = data();
        assert_eq!(Mlp::fit(&x, &y, &params(1)), Mlp::fit(&x, &y, &params(1)));
    }
}
