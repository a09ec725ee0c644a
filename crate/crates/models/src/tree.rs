//! Greedy binary trees over numeric rows.
//!
//! One builder serves both tree kinds in the crate: classification trees that
//! minimize Gini impurity and store class frequencies, and second-order
//! regression trees for boosting that store Newton steps `-G / (H + lambda)`.

use rand::seq::index;
use rand::Rng;

/// Split criterion. Per-row targets are pairs `(a, b)`: the label for Gini
/// (second slot unused), the gradient and hessian for Newton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Gini,
    Newton { lambda: f64 },
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    a: f64,
    b: f64,
}

impl Stats {
    fn add(&mut self, t: (f64, f64)) {
        self.n += 1.0;
        self.a += t.0;
        self.b += t.1;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

impl Criterion {
    /// Larger is better; children are compared against their parent.
    fn score(self, s: Stats) -> f64 {
        match self {
            // negative size-weighted Gini impurity: -n * 2p(1-p)
            Criterion::Gini => -2.0 * s.a * (s.n - s.a) / s.n,
            Criterion::Newton { lambda } => s.a * s.a / (s.b + lambda),
        }
    }

    fn leaf_value(self, s: Stats) -> f64 {
        match self {
            Criterion::Gini => s.a / s.n,
            Criterion::Newton { lambda } => -s.a / (s.b + lambda),
        }
    }

    /// Gini accepts zero-gain splits on impure nodes (XOR needs one);
    /// Newton steps need strict improvement.
    fn min_gain(self) -> f64 {
        match self {
            Criterion::Gini => -1e-12,
            Criterion::Newton { .. } => 1e-12,
        }
    }

    fn is_pure(self, s: Stats) -> bool {
        match self {
            Criterion::Gini => s.a == 0.0 || s.a == s.n,
            Criterion::Newton { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub min_split: usize,
    /// Features tried at each split; `None` tries all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            min_split: 2,
            max_features: None,
        }
    }
}

const LEAF: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    feature: usize,
    threshold: f64,
    left: usize,
    right: usize,
    value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
}

struct Builder<'a, R> {
    rows: &'a [Vec<f64>],
    targets: &'a [(f64, f64)],
    criterion: Criterion,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    n_features: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn stats(&self, idx: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &i in idx {
            s.add(self.targets[i]);
        }
        s
    }

    fn leaf(&mut self, s: Stats) -> usize {
        self.nodes.push(Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: self.criterion.leaf_value(s),
        });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize], parent: Stats) -> Option<(usize, f64)> {
        let features: Vec<usize> = match self.params.max_features {
            Some(k) if k < self.n_features => {
                let mut f = index::sample(self.rng, self.n_features, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.n_features).collect(),
        };
        let parent_score = self.criterion.score(parent);
        let min_gain = self.criterion.min_gain();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in features {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = Stats::default();
            for pos in 0..order.len() - 1 {
                left.add(self.targets[order[pos]]);
                let (v, next) = (self.rows[order[pos]][f], self.rows[order[pos + 1]][f]);
                let n_left = pos + 1;
                if v == next || n_left < min_leaf || order.len() - n_left < min_leaf {
                    continue;
                }
                let right = parent.minus(left);
                let gain = self.criterion.score(left) + self.criterion.score(right) - parent_score;
                if gain > min_gain && best.is_none_or(|(g, _, _)| gain > g) {
                    let mid = v + (next - v) / 2.0;
                    let threshold = if mid < next { mid } else { v };
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let s = self.stats(idx);
        let stop = self.params.max_depth.is_some_and(|d| depth >= d)
            || idx.len() < self.params.min_split.max(2)
            || idx.len() < 2 * self.params.min_leaf.max(1)
            || self.criterion.is_pure(s);
        if stop {
            return self.leaf(s);
        }
        let Some((feature, threshold)) = self.best_split(idx, s) else {
            return self.leaf(s);
        };
        let id = self.nodes.len();
        self.nodes.push(Node {
            feature,
            threshold,
            left: 0,
            right: 0,
            value: self.criterion.leaf_value(s),
        });
        idx.sort_by_key(|&i| self.rows[i][feature] > threshold);
        let split = idx.partition_point(|&i| self.rows[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }
}

impl Tree {
    /// Grows a tree on `sample` (row indices, repeats allowed).
    pub fn fit<R: Rng>(
        rows: &[Vec<f64>],
        targets: &[(f64, f64)],
        mut sample: Vec<usize>,
        criterion: Criterion,
        params: TreeParams,
        rng: &mut R,
    ) -> Tree {
        let n_features = rows.first().map_or(0, Vec::len);
        let mut b = Builder {
            rows,
            targets,
            criterion,
            params,
            rng,
            nodes: Vec::new(),
            n_features,
        };
        if sample.is_empty() {
            b.leaf(Stats {
                n: 1.0,
                a: 0.0,
                b: 0.0,
            });
        } else {
            b.build(&mut sample, 0);
        }
        Tree {
            nodes: b.nodes,
            n_features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left).max(walk(nodes, n.right))
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf_of(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                return i;
            }
            i = if x[n.feature] <= n.threshold {
                n.left
            } else {
                n.right
            };
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_of(x)].value
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            n.value *= factor;
        }
    }

    /// Adds `scale * tree(z_S)` to `out[S]` for every coalition `S`, where
    /// `z_S` takes features in `S` from `x` and the rest from `bg`.
    ///
    /// Each path is followed once; a leaf reached with forced-in set `I` and
    /// forced-out set `O` serves every `S` with `I ⊆ S` and `S ∩ O = ∅`.
    pub fn accumulate_coalitions(&self, x: &[f64], bg: &[f64], scale: f64, out: &mut [f64]) {
        let full = out.len() - 1;
        self.walk_coalitions(0, x, bg, 0, 0, full, scale, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_coalitions(
        &self,
        i: usize,
        x: &[f64],
        bg: &[f64],
        must_in: usize,
        must_out: usize,
        full: usize,
        scale: f64,
        out: &mut [f64],
    ) {
        let n = &self.nodes[i];
        if n.feature == LEAF {
            let v = scale * n.value;
            let free = full & !(must_in | must_out);
            let mut t = free;
            loop {
                out[must_in | t] += v;
                if t == 0 {
                    break;
                }
                t = (t - 1) & free;
            }
            return;
        }
        let f = n.feature;
        let bit = 1usize << f;
        let child = |goes_left: bool| if goes_left { n.left } else { n.right };
        let (x_left, bg_left) = (x[f] <= n.threshold, bg[f] <= n.threshold);
        if x_left == bg_left || must_in & bit != 0 {
            self.walk_coalitions(child(x_left), x, bg, must_in, must_out, full, scale, out);
        } else if must_out & bit != 0 {
            self.walk_coalitions(child(bg_left), x, bg, must_in, must_out, full, scale, out);
        } else {
            self.walk_coalitions(
                child(x_left),
                x,
                bg,
                must_in | bit,
                must_out,
                full,
                scale,
                out,
            );
            self.walk_coalitions(
                child(bg_left),
                x,
                bg,
                must_in,
                must_out | bit,
                full,
                scale,
                out,
            );
        }
    }
}
