use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{ModelError, TreeParams};
use crate::features::{RowView, SparseMatrix};
use crate::rng::SeededRng;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Classification; targets are 0/1.
    Gini,
    /// Regression on real targets.
    SquaredError,
}

pub(crate) struct GrowParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Non-constant features sampled per split; `None` uses every feature.
    pub max_features: Option<usize>,
}

/// Weighted sufficient statistics: `w = Σw`, `a = Σw·t`, `b = Σw·t²`.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    w: f64,
    a: f64,
    b: f64,
}

impl Acc {
    fn add(&mut self, w: f64, t: f64) {
        self.w += w;
        self.a += w * t;
        self.b += w * t * t;
    }

    fn plus(self, o: Acc) -> Acc {
        Acc { w: self.w + o.w, a: self.a + o.a, b: self.b + o.b }
    }

    fn minus(self, o: Acc) -> Acc {
        Acc { w: self.w - o.w, a: self.a - o.a, b: self.b - o.b }
    }

    fn impurity(self, c: Criterion) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        match c {
            Criterion::Gini => {
                let p = self.a / self.w;
                2.0 * p * (1.0 - p)
            }
            Criterion::SquaredError => (self.b / self.w - (self.a / self.w).powi(2)).max(0.0),
        }
    }
}

/// Impurity decrease of splitting `total` into `left` and `right`, as a
/// fraction of the node.
fn gain(c: Criterion, total: Acc, left: Acc, right: Acc) -> f64 {
    match c {
        Criterion::Gini => {
            total.impurity(c) - (left.w * left.impurity(c) + right.w * right.impurity(c)) / total.w
        }
        // algebraically equal to the variance decrease, without cancellation
        Criterion::SquaredError => {
            (left.a * left.a / left.w + right.a * right.a / right.w - total.a * total.a / total.w) / total.w
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    gain: f64,
    feature: u32,
    threshold: f64,
}

impl SplitChoice {
    /// Larger gain wins; gains within `tol` tie and fall to the lower
    /// (feature, threshold), whatever order candidates were seen in.
    fn beats(&self, other: &SplitChoice, tol: f64) -> bool {
        if self.gain > other.gain + tol {
            return true;
        }
        if self.gain < other.gain - tol {
            return false;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi || m.is_infinite() {
        lo
    } else {
        m
    }
}

pub(crate) struct TreeBuilder<'a> {
    x: &'a SparseMatrix,
    target: &'a [f64],
    weight: &'a [f64],
    params: &'a GrowParams,
    buckets: Vec<Vec<(f64, u32)>>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(x: &'a SparseMatrix, target: &'a [f64], weight: &'a [f64], params: &'a GrowParams) -> Self {
        TreeBuilder { x, target, weight, params, buckets: vec![Vec::new(); x.n_cols()] }
    }

    fn acc(&self, rows: &[usize]) -> Acc {
        let mut acc = Acc::default();
        for &r in rows {
            acc.add(self.weight[r], self.target[r]);
        }
        acc
    }

    /// Grow a tree over the rows with positive weight. `leaf_value` maps the
    /// rows of each leaf to its output.
    pub fn grow(
        &mut self,
        mut rng: Option<&mut SeededRng>,
        leaf_value: &mut dyn FnMut(&[usize]) -> f64,
    ) -> Vec<Node> {
        let rows: Vec<usize> = (0..self.x.n_rows()).filter(|&r| self.weight[r] > 0.0).collect();
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stack = vec![(rows, 0usize, 0usize)];
        while let Some((rows, depth, id)) = stack.pop() {
            let total = self.acc(&rows);
            let splittable = rows.len() >= self.params.min_samples_split
                && self.params.max_depth.is_none_or(|m| depth < m)
                && total.impurity(self.params.criterion) > f64::EPSILON;
            let split = if splittable { self.best_split(&rows, total, rng.as_deref_mut()) } else { None };
            match split {
                Some(s) => {
                    let (left, right): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&r| self.x.row(r).get(s.feature as usize) <= s.threshold);
                    let l = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[id] = Node::Split { feature: s.feature, threshold: s.threshold, left: l as u32, right: l as u32 + 1 };
                    stack.push((right, depth + 1, l + 1));
                    stack.push((left, depth + 1, l));
                }
                None => nodes[id] = Node::Leaf { value: leaf_value(&rows) },
            }
        }
        nodes
    }

    fn best_split(&mut self, rows: &[usize], total: Acc, rng: Option<&mut SeededRng>) -> Option<SplitChoice> {
        let mut touched: Vec<u32> = Vec::new();
        for &r in rows {
            let row = self.x.row(r);
            for (&j, &v) in row.indices.iter().zip(row.values) {
                let b = &mut self.buckets[j as usize];
                if b.is_empty() {
                    touched.push(j);
                }
                b.push((v, r as u32));
            }
        }
        touched.sort_unstable();
        let mut candidates: Vec<u32> = Vec::new();
        for &j in &touched {
            let b = &mut self.buckets[j as usize];
            b.sort_unstable_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            // nonzero entries against zero rows, or two distinct nonzero values
            if b.len() < rows.len() || b[0].0 != b[b.len() - 1].0 {
                candidates.push(j);
            }
        }
        if let (Some(k), Some(rng)) = (self.params.max_features, rng) {
            if k < candidates.len() {
                let mut picked = index::sample(rng, candidates.len(), k).into_vec();
                picked.sort_unstable();
                candidates = picked.into_iter().map(|i| candidates[i]).collect();
            }
        }
        let tol = 1e-12 * total.impurity(self.params.criterion);
        let mut best: Option<SplitChoice> = None;
        for &j in &candidates {
            if let Some(c) = self.best_threshold(j, rows.len(), total) {
                if best.is_none_or(|b| c.beats(&b, tol)) {
                    best = Some(c);
                }
            }
        }
        for &j in &touched {
            self.buckets[j as usize].clear();
        }
        best
    }

    /// Scan the distinct values of feature `j` in ascending order, with the
    /// implicit zero rows as one block.
    fn best_threshold(&self, j: u32, n_rows: usize, total: Acc) -> Option<SplitChoice> {
        let entries = &self.buckets[j as usize];
        let mut groups: Vec<(f64, Acc)> = Vec::new();
        let mut nonzero = Acc::default();
        let push = |groups: &mut Vec<(f64, Acc)>, v: f64, acc: Acc| match groups.last_mut() {
            Some((last, a)) if *last == v => *a = a.plus(acc),
            _ => groups.push((v, acc)),
        };
        let mut zero_inserted = entries.len() == n_rows;
        for &(v, r) in entries {
            if !zero_inserted && v > 0.0 {
                groups.push((0.0, Acc::default()));
                zero_inserted = true;
            }
            let mut a = Acc::default();
            a.add(self.weight[r as usize], self.target[r as usize]);
            nonzero = nonzero.plus(a);
            push(&mut groups, v, a);
        }
        if !zero_inserted {
            groups.push((0.0, Acc::default()));
        }
        if entries.len() < n_rows {
            let zeros = total.minus(nonzero);
            let g = groups.iter_mut().find(|g| g.0 == 0.0).expect("zero block present");
            g.1 = zeros;
        }
        let c = self.params.criterion;
        let tol = 1e-12 * total.impurity(c);
        let mut left = Acc::default();
        let mut best: Option<SplitChoice> = None;
        for w in 0..groups.len().saturating_sub(1) {
            left = left.plus(groups[w].1);
            let right = total.minus(left);
            let cand = SplitChoice { gain: gain(c, total, left, right), feature: j, threshold: midpoint(groups[w].0, groups[w + 1].0) };
            if best.is_none_or(|b| cand.beats(&b, tol)) {
                best = Some(cand);
            }
        }
        best
    }
}

pub(crate) fn eval_nodes(nodes: &[Node], row: RowView<'_>) -> f64 {
    let mut i = 0;
    loop {
        match nodes[i] {
            Node::Leaf { value } => return value,
            Node::Split { feature, threshold, left, right } => {
                i = if row.get(feature as usize) <= threshold { left as usize } else { right as usize };
            }
        }
    }
}

/// Weighted majority of the rows' labels, ties to 0.
pub(crate) fn majority_leaf<'a>(y: &'a [Label], weight: &'a [f64]) -> impl FnMut(&[usize]) -> f64 + 'a {
    move |rows: &[usize]| {
        let (mut w0, mut w1) = (0.0, 0.0);
        for &r in rows {
            if y[r].is_fake() {
                w1 += weight[r];
            } else {
                w0 += weight[r];
            }
        }
        if w1 > w0 {
            1.0
        } else {
            0.0
        }
    }
}

/// CART classifier with gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn fit(x: &SparseMatrix, y: &[Label], p: &TreeParams) -> Result<Self, ModelError> {
        if x.n_rows() != y.len() || y.is_empty() {
            return Err(ModelError::Input(format!("{} rows but {} labels", x.n_rows(), y.len())));
        }
        if !x.all_finite() {
            return Err(ModelError::Input("feature matrix contains non-finite values".into()));
        }
        let gp = GrowParams {
            criterion: Criterion::Gini,
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            max_features: None,
        };
        Ok(Self::fit_weighted(x, y, &vec![1.0; y.len()], &gp, None))
    }

    pub(crate) fn fit_weighted(
        x: &SparseMatrix,
        y: &[Label],
        weight: &[f64],
        gp: &GrowParams,
        rng: Option<&mut SeededRng>,
    ) -> Self {
        let target: Vec<f64> = y.iter().map(|l| f64::from(l.as_u8())).collect();
        let mut builder = TreeBuilder::new(x, &target, weight, gp);
        let nodes = builder.grow(rng, &mut majority_leaf(y, weight));
        DecisionTree { nodes }
    }

    pub fn predict_row(&self, row: RowView<'_>) -> Label {
        Label::from(eval_nodes(&self.nodes, row) > 0.5)
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left as usize).max(go(nodes, right as usize)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
