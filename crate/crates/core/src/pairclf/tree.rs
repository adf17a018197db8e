//! Axis-aligned binary trees grown level by level over presorted features.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature as usize] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub(crate) fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left as usize).max(go(t, right as usize)),
            }
        }
        go(self, 0)
    }

    pub(crate) fn scale_leaves(&mut self, c: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= c;
            }
        }
    }
}

/// Per-sample sufficient statistics: `[weight, a, b]`.
pub(crate) type Stats = [f64; 3];

fn add(a: &mut Stats, b: &Stats) {
    for k in 0..3 {
        a[k] += b[k];
    }
}

fn sub(a: &Stats, b: &Stats) -> Stats {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Split quality and leaf values for one tree flavour.
pub(crate) trait Criterion {
    /// Improvement of splitting `parent` into `left` and `right`, or `None`
    /// when the split is not admissible.
    fn gain(&self, parent: &Stats, left: &Stats, right: &Stats) -> Option<f64>;
    fn leaf(&self, s: &Stats) -> f64;
}

/// Feature columns sorted once, shared by every tree grown on the data.
pub(crate) struct Presorted<'a> {
    pub x: &'a [Vec<f64>],
    order: Vec<Vec<u32>>,
}

impl<'a> Presorted<'a> {
    pub(crate) fn new(x: &'a [Vec<f64>]) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let order = (0..dim)
            .map(|f| {
                let mut o: Vec<u32> = (0..x.len() as u32).collect();
                o.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
                o
            })
            .collect();
        Presorted { x, order }
    }

    pub(crate) fn dim(&self) -> usize {
        self.order.len()
    }
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Open {
    node: usize,
    total: Stats,
    /// Allowed features, `None` meaning all.
    features: Option<Vec<bool>>,
}

/// Grows one tree. `stats[i]` with zero weight excludes sample `i`.
/// `feature_subset` draws the candidate features of each new node.
pub(crate) fn grow<C: Criterion>(
    data: &Presorted,
    stats: &[Stats],
    criterion: &C,
    max_depth: usize,
    mut feature_subset: impl FnMut() -> Option<Vec<bool>>,
) -> Tree {
    let n = data.x.len();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_of: Vec<Option<u32>> = (0..n).map(|i| (stats[i][0] > 0.0).then_some(0)).collect();
    let mut total = [0.0; 3];
    for s in stats.iter().filter(|s| s[0] > 0.0) {
        add(&mut total, s);
    }
    let mut open = vec![Open {
        node: 0,
        total,
        features: feature_subset(),
    }];

    for depth in 0..=max_depth {
        if open.is_empty() {
            break;
        }
        if depth == max_depth {
            for o in &open {
                nodes[o.node] = Node::Leaf { value: criterion.leaf(&o.total) };
            }
            break;
        }
        let mut best: Vec<Option<Best>> = (0..open.len()).map(|_| None).collect();
        let mut acc = vec![[0.0; 3]; open.len()];
        let mut last = vec![f64::NAN; open.len()];
        for f in 0..data.dim() {
            acc.iter_mut().for_each(|a| *a = [0.0; 3]);
            for &i in &data.order[f] {
                let Some(k) = node_of[i as usize] else { continue };
                let k = k as usize;
                if open[k].features.as_ref().is_some_and(|m| !m[f]) {
                    continue;
                }
                let v = data.x[i as usize][f];
                if acc[k][0] > 0.0 && v > last[k] {
                    let right = sub(&open[k].total, &acc[k]);
                    if let Some(g) = criterion.gain(&open[k].total, &acc[k], &right) {
                        if g > best[k].as_ref().map_or(0.0, |b| b.gain) {
                            let mid = last[k] + (v - last[k]) / 2.0;
                            let threshold = if mid < v { mid } else { last[k] };
                            best[k] = Some(Best { gain: g, feature: f, threshold });
                        }
                    }
                }
                add(&mut acc[k], &stats[i as usize]);
                last[k] = v;
            }
        }

        // open slot k -> (left open index, right open index) of the next level
        let mut route: Vec<Option<(u32, u32, usize, f64)>> = vec![None; open.len()];
        let mut next = Vec::new();
        for (k, o) in open.iter().enumerate() {
            match &best[k] {
                Some(b) => {
                    let l = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[o.node] = Node::Split {
                        feature: b.feature as u32,
                        threshold: b.threshold,
                        left: l as u32,
                        right: l as u32 + 1,
                    };
                    route[k] = Some((next.len() as u32, next.len() as u32 + 1, b.feature, b.threshold));
                    next.push(Open { node: l, total: [0.0; 3], features: None });
                    next.push(Open { node: l + 1, total: [0.0; 3], features: None });
                }
                None => nodes[o.node] = Node::Leaf { value: criterion.leaf(&o.total) },
            }
        }
        for i in 0..n {
            let Some(k) = node_of[i] else { continue };
            node_of[i] = route[k as usize].map(|(l, r, f, t)| {
                let child = if data.x[i][f] <= t { l } else { r };
                add(&mut next[child as usize].total, &stats[i]);
                child
            });
        }
        for o in &mut next {
            o.features = feature_subset();
        }
        open = next;
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Mean;

    impl Criterion for Mean {
        // variance reduction
        fn gain(&self, p: &Stats, l: &Stats, r: &Stats) -> Option<f64> {
            let sse = |s: &Stats| s[2] - s[1] * s[1] / s[0];
            Some(sse(p) - sse(l) - sse(r))
        }

        fn leaf(&self, s: &Stats) -> f64 {
            s[1] / s[0]
        }
    }

    fn stats(y: &[f64]) -> Vec<Stats> {
        y.iter().map(|&v| [1.0, v, v * v]).collect()
    }

    #[test]
    fn step_function_is_recovered() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 5.0 }).collect();
        let data = Presorted::new(&x);
        let t = grow(&data, &stats(&y), &Mean, 3, || None);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[3.0]), 1.0);
        assert_eq!(t.predict(&[3.6]), 5.0);
    }

    #[test]
    fn depth_limit_is_respected() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i % 5) as f64).collect();
        let data = Presorted::new(&x);
        for d in 0..5 {
            assert!(grow(&data, &stats(&y), &Mean, d, || None).depth() <= d);
        }
    }

    #[test]
    fn zero_weight_samples_are_ignored() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let mut s = stats(&[0.0, 0.0, 9.0, 9.0]);
        s[2] = [0.0; 3];
        s[3] = [0.0; 3];
        let t = grow(&Presorted::new(&x), &s, &Mean, 2, || None);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[3.0]), 0.0);
    }
}
