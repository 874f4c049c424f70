//! Histogram regression trees grown on gradient/Hessian statistics, with
//! monotone split constraints enforced through leaf-value bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::BinnedDataset;
use crate::error::{Error, Result};
use crate::spec::Monotone;

/// Split-finding and regularisation settings for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Leaf budget for best-first growth; `None` grows until `max_depth`.
    pub max_leaves: Option<usize>,
    pub min_data_in_leaf: usize,
    pub min_sum_hessian_in_leaf: f64,
    pub min_gain_to_split: f64,
    /// L1 penalty on leaf values: sums of gradients are soft-thresholded by it.
    pub lambda_l1: f64,
    /// L2 penalty on leaf values, added to Hessian sums.
    pub lambda_l2: f64,
    /// Shrinkage applied to every leaf value.
    pub learning_rate: f64,
    /// Multiplier on the Newton leaf value, `(J-1)/J` for a J-class head.
    pub redundancy: f64,
    pub allowed_columns: Vec<usize>,
    pub monotone: BTreeMap<usize, Monotone>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 1,
            max_leaves: None,
            min_data_in_leaf: 20,
            min_sum_hessian_in_leaf: 1e-3,
            min_gain_to_split: 0.0,
            lambda_l1: 0.0,
            lambda_l2: 0.0,
            learning_rate: 0.1,
            redundancy: 1.0,
            allowed_columns: Vec::new(),
            monotone: BTreeMap::new(),
        }
    }
}

impl TreeParams {
    /// `(J-1)/J`.
    pub fn redundancy_for(n_alts: usize) -> f64 {
        (n_alts as f64 - 1.0) / n_alts as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        bin: u16,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree stored as a preorder node list; node 0 is the root and a
/// split's left child immediately follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Stump sending `x <= threshold` left.
    pub fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        Tree {
            nodes: vec![
                Node::Split {
                    feature,
                    bin: 0,
                    threshold,
                    gain: 0.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
        }
    }

    /// Builds a tree from a preorder node list, checking its shape.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        fn walk(nodes: &[Node], i: usize, next: &mut usize) -> Result<()> {
            *next += 1;
            match nodes.get(i) {
                None => Err(Error::Model(format!("node {i} does not exist"))),
                Some(Node::Leaf { value }) if !value.is_finite() => Err(Error::Model(format!("leaf {i} is not finite"))),
                Some(Node::Leaf { .. }) => Ok(()),
                Some(Node::Split { left, right, .. }) => {
                    if *left != i + 1 || *left != *next {
                        return Err(Error::Model(format!("node {i} is not in preorder")));
                    }
                    walk(nodes, *left, next)?;
                    if *right != *next {
                        return Err(Error::Model(format!("node {i} is not in preorder")));
                    }
                    walk(nodes, *right, next)
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::Model("empty tree".into()));
        }
        let mut next = 0;
        walk(&nodes, 0, &mut next)?;
        if next != nodes.len() {
            return Err(Error::Model("unreachable nodes in tree".into()));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Sum of split gains.
    pub fn total_gain(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Split { gain, .. } => *gain,
                Node::Leaf { .. } => 0.0,
            })
            .sum()
    }

    /// Features used by any split, ascending.
    pub fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Split thresholds on `feature`, in node order.
    pub fn thresholds(&self, feature: usize) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(move |n| match n {
            Node::Split {
                feature: f, threshold, ..
            } if *f == feature => Some(*threshold),
            _ => None,
        })
    }

    /// Value of the leaf reached by `row` (indexed by feature).
    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_by(|f| row[f])
    }

    /// Like [`Tree::predict`] with feature values supplied by a closure.
    #[inline]
    pub fn predict_by(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if value(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Like [`Tree::predict`] but reports a row too short for the tree.
    pub fn try_predict(&self, row: &[f64]) -> Result<f64> {
        if let Some(&f) = self.features().last() {
            if f >= row.len() {
                return Err(Error::InvalidArgument(format!("row lacks feature {f}")));
            }
        }
        Ok(self.predict(row))
    }

    /// Multiplies every leaf by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }
}

/// Newton leaf value `-((J-1)/J) G / H`, before shrinkage.
pub fn leaf_value(sum_g: f64, sum_h: f64, n_alts: usize) -> Result<f64> {
    if !(sum_h > 0.0) {
        return Err(Error::Numerical(format!("hessian sum {sum_h} is not positive")));
    }
    Ok(-TreeParams::redundancy_for(n_alts) * sum_g / sum_h)
}

/// Loss reduction `((G_L^2/H_L) + (G_R^2/H_R) - (G_P^2/H_P)) / 2`.
pub fn split_gain(left: (f64, f64), right: (f64, f64), parent: (f64, f64)) -> Result<f64> {
    let tol = 1e-9 * (1.0 + parent.0.abs() + parent.1.abs());
    if (left.0 + right.0 - parent.0).abs() > tol || (left.1 + right.1 - parent.1).abs() > tol {
        return Err(Error::InvalidArgument("child sums do not add up to the parent".into()));
    }
    if !(left.1 > 0.0 && right.1 > 0.0 && parent.1 > 0.0) {
        return Err(Error::InvalidArgument("hessian sums must be positive".into()));
    }
    Ok(raw_gain(left, right, parent))
}

#[inline]
fn raw_gain(left: (f64, f64), right: (f64, f64), parent: (f64, f64)) -> f64 {
    0.5 * (left.0 * left.0 / left.1 + right.0 * right.0 / right.1 - parent.0 * parent.0 / parent.1)
}

#[inline]
fn soft_threshold(g: f64, l1: f64) -> f64 {
    if l1 == 0.0 {
        g
    } else {
        g.signum() * (g.abs() - l1).max(0.0)
    }
}

/// `T(G)^2 / (H + l2)` with `T` the L1 soft threshold.
#[inline]
fn score(s: (f64, f64), params: &TreeParams) -> f64 {
    let g = soft_threshold(s.0, params.lambda_l1);
    g * g / (s.1 + params.lambda_l2)
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    bin: u16,
    threshold: f64,
    gain: f64,
    left: (f64, f64),
    right: (f64, f64),
    left_value: f64,
    right_value: f64,
}

#[derive(Debug)]
struct GrowLeaf {
    rows: Vec<usize>,
    sum: (f64, f64),
    depth: usize,
    lower: f64,
    upper: f64,
    value: f64,
    best: Option<SplitCandidate>,
}

enum Grown {
    Leaf(f64),
    Split(SplitCandidate, usize, usize),
}

/// Grows one tree on all rows of `binned`.
pub fn build_tree(binned: &BinnedDataset, grad: &[f64], hess: &[f64], params: &TreeParams) -> Result<Tree> {
    let rows: Vec<usize> = (0..binned.n_rows()).collect();
    build_tree_on_rows(binned, grad, hess, rows, params)
}

/// Grows one tree on a subset of rows (used for bagging).
///
/// Splitting is best-first: the leaf whose best split has the largest gain is
/// split next, until `max_leaves`, `max_depth` or no admissible split remains.
/// Ties between splits favour the lower column index, then the lower bin.
pub fn build_tree_on_rows(
    binned: &BinnedDataset,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<usize>,
    params: &TreeParams,
) -> Result<Tree> {
    if grad.len() != binned.n_rows() || hess.len() != binned.n_rows() {
        return Err(Error::InvalidArgument("gradient length does not match the dataset".into()));
    }
    if params.allowed_columns.is_empty() {
        return Err(Error::InvalidArgument("no columns allowed for splitting".into()));
    }
    if let Some(&c) = params.allowed_columns.iter().find(|&&c| c >= binned.n_columns()) {
        return Err(Error::InvalidArgument(format!("column {c} is not in the binned dataset")));
    }
    let mut columns = params.allowed_columns.clone();
    columns.sort_unstable();
    columns.dedup();

    let sum = rows.iter().fold((0.0, 0.0), |acc, &r| (acc.0 + grad[r], acc.1 + hess[r]));
    let mut root = GrowLeaf {
        rows,
        sum,
        depth: 0,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        value: provisional(sum, params, f64::NEG_INFINITY, f64::INFINITY),
        best: None,
    };
    root.best = find_best_split(binned, grad, hess, &root, &columns, params);

    // arena of grown nodes; index 0 is the root
    let mut grown: Vec<Option<Grown>> = vec![None];
    let mut open: Vec<(usize, GrowLeaf)> = vec![(0, root)];
    let mut n_leaves = 1usize;
    let max_leaves = params.max_leaves.unwrap_or(usize::MAX);

    while n_leaves < max_leaves {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(k, (_, l))| l.best.map(|b| (k, b.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (k, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((k, g)),
            });
        let Some((k, _)) = pick else { break };
        let (slot, leaf) = open.swap_remove(k);
        let split = leaf.best.expect("picked leaf has a split");
        let col = binned.bins(split.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            leaf.rows.iter().partition(|&&r| col[r] <= split.bin);

        let (mut l_lo, mut l_hi, mut r_lo, mut r_hi) = (leaf.lower, leaf.upper, leaf.lower, leaf.upper);
        let mid = 0.5 * (split.left_value + split.right_value);
        match params.monotone.get(&split.feature).copied().unwrap_or_default() {
            Monotone::Increasing => {
                l_hi = l_hi.min(mid);
                r_lo = r_lo.max(mid);
            }
            Monotone::Decreasing => {
                l_lo = l_lo.max(mid);
                r_hi = r_hi.min(mid);
            }
            Monotone::None => {}
        }
        let depth = leaf.depth + 1;
        let mut left = GrowLeaf {
            rows: left_rows,
            sum: split.left,
            depth,
            lower: l_lo,
            upper: l_hi,
            value: split.left_value.clamp(l_lo, l_hi),
            best: None,
        };
        let mut right = GrowLeaf {
            rows: right_rows,
            sum: split.right,
            depth,
            lower: r_lo,
            upper: r_hi,
            value: split.right_value.clamp(r_lo, r_hi),
            best: None,
        };
        left.best = find_best_split(binned, grad, hess, &left, &columns, params);
        right.best = find_best_split(binned, grad, hess, &right, &columns, params);
        let (li, ri) = (grown.len(), grown.len() + 1);
        grown.push(None);
        grown.push(None);
        grown[slot] = Some(Grown::Split(split, li, ri));
        open.push((li, left));
        open.push((ri, right));
        n_leaves += 1;
    }
    for (slot, leaf) in open {
        grown[slot] = Some(Grown::Leaf(leaf.value));
    }

    let mut nodes = Vec::with_capacity(grown.len());
    emit_preorder(&grown, 0, params.learning_rate, &mut nodes);
    Ok(Tree { nodes })
}

fn emit_preorder(grown: &[Option<Grown>], i: usize, lr: f64, out: &mut Vec<Node>) {
    match grown[i].as_ref().expect("every grown node is resolved") {
        Grown::Leaf(v) => out.push(Node::Leaf { value: lr * v }),
        Grown::Split(s, l, r) => {
            let at = out.len();
            out.push(Node::Leaf { value: 0.0 });
            emit_preorder(grown, *l, lr, out);
            let right = out.len();
            emit_preorder(grown, *r, lr, out);
            out[at] = Node::Split {
                feature: s.feature,
                bin: s.bin,
                threshold: s.threshold,
                gain: s.gain,
                left: at + 1,
                right,
            };
        }
    }
}

/// Leaf value clamped to the node's monotone bounds, before shrinkage.
#[inline]
fn provisional(sum: (f64, f64), params: &TreeParams, lower: f64, upper: f64) -> f64 {
    let h = sum.1 + params.lambda_l2;
    if h > 0.0 {
        (-params.redundancy * soft_threshold(sum.0, params.lambda_l1) / h).clamp(lower, upper)
    } else {
        0.0f64.clamp(lower, upper)
    }
}

fn find_best_split(
    binned: &BinnedDataset,
    grad: &[f64],
    hess: &[f64],
    leaf: &GrowLeaf,
    columns: &[usize],
    params: &TreeParams,
) -> Option<SplitCandidate> {
    if leaf.depth >= params.max_depth || leaf.rows.len() < 2 * params.min_data_in_leaf.max(1) {
        return None;
    }
    let mut best: Option<SplitCandidate> = None;
    let mut hist_g = Vec::new();
    let mut hist_h = Vec::new();
    let mut hist_n = Vec::new();
    for &c in columns {
        let cb = binned.column_bins(c);
        let nb = cb.n_bins();
        if nb < 2 {
            continue;
        }
        hist_g.clear();
        hist_g.resize(nb, 0.0);
        hist_h.clear();
        hist_h.resize(nb, 0.0);
        hist_n.clear();
        hist_n.resize(nb, 0usize);
        let bins = binned.bins(c);
        for &r in &leaf.rows {
            let b = bins[r] as usize;
            hist_g[b] += grad[r];
            hist_h[b] += hess[r];
            hist_n[b] += 1;
        }
        let direction = params.monotone.get(&c).copied().unwrap_or_default();
        let total_n = leaf.rows.len();
        let (mut lg, mut lh, mut ln) = (0.0, 0.0, 0usize);
        for b in 0..nb - 1 {
            lg += hist_g[b];
            lh += hist_h[b];
            ln += hist_n[b];
            let rn = total_n - ln;
            if ln < params.min_data_in_leaf || rn < params.min_data_in_leaf {
                continue;
            }
            if hist_n[b] == 0 && ln > 0 {
                // identical partition to the previous threshold
                continue;
            }
            let left = (lg, lh);
            let right = (leaf.sum.0 - lg, leaf.sum.1 - lh);
            if left.1 < params.min_sum_hessian_in_leaf || right.1 < params.min_sum_hessian_in_leaf {
                continue;
            }
            let lv = provisional(left, params, leaf.lower, leaf.upper);
            let rv = provisional(right, params, leaf.lower, leaf.upper);
            let admissible = match direction {
                Monotone::None => true,
                Monotone::Increasing => lv < rv,
                Monotone::Decreasing => lv > rv,
            };
            if !admissible {
                continue;
            }
            let children = score(left, params) + score(right, params);
            let gain = 0.5 * (children - score(leaf.sum, params));
            // the second test rejects cancellation noise such as a constant gradient
            if !(gain > params.min_gain_to_split) || !(gain > 1e-12 * children) {
                continue;
            }
            if best.is_none_or(|bs| gain > bs.gain) {
                best = Some(SplitCandidate {
                    feature: c,
                    bin: b as u16,
                    threshold: cb.threshold(b),
                    gain,
                    left,
                    right,
                    left_value: lv,
                    right_value: rv,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{quantile_bins, ColumnBins};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binned_from(columns: &[Vec<f64>], max_bins: usize) -> BinnedDataset {
        let cbs: Vec<ColumnBins> = columns.iter().map(|c| quantile_bins(c, max_bins, 1)).collect();
        let bins = columns
            .iter()
            .zip(&cbs)
            .map(|(c, cb)| c.iter().map(|&x| cb.bin_of(x) as u16).collect())
            .collect();
        BinnedDataset::from_parts(cbs, bins).unwrap()
    }

    fn params(columns: Vec<usize>) -> TreeParams {
        TreeParams {
            allowed_columns: columns,
            min_data_in_leaf: 1,
            learning_rate: 1.0,
            ..TreeParams::default()
        }
    }

    #[test]
    fn leaf_value_cases() {
        assert_eq!(leaf_value(0.0, 1.0, 4).unwrap(), 0.0);
        assert_eq!(leaf_value(1.0, 1.0, 2).unwrap(), -0.5);
        let v = leaf_value(-3.2, 4.1, 4).unwrap();
        assert!((v - 0.585_365_853_658_536_8).abs() < 1e-15);
        assert!(leaf_value(1.0, 0.0, 2).is_err());
    }

    #[test]
    fn split_gain_cases() {
        assert_eq!(split_gain((1.0, 2.0), (1.0, 2.0), (2.0, 4.0)).unwrap(), 0.0);
        assert_eq!(split_gain((2.0, 1.0), (-2.0, 1.0), (0.0, 2.0)).unwrap(), 4.0);
        assert!(split_gain((2.0, 1.0), (-2.0, 1.0), (1.0, 2.0)).is_err());
    }

    #[test]
    fn split_gain_matches_taylor_loss_difference() {
        // brute force: minimise G w + H w^2 / 2 on a fine grid per region
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let l = (rng.gen_range(-5.0..5.0), rng.gen_range(0.1..5.0));
            let r = (rng.gen_range(-5.0..5.0), rng.gen_range(0.1..5.0));
            let p = (l.0 + r.0, l.1 + r.1);
            let taylor_min = |s: (f64, f64)| {
                let mut best = f64::INFINITY;
                let centre = -s.0 / s.1;
                for k in -2000..=2000 {
                    let w = centre + k as f64 * 1e-4;
                    best = best.min(s.0 * w + 0.5 * s.1 * w * w);
                }
                best
            };
            let oracle = taylor_min(p) - taylor_min(l) - taylor_min(r);
            let gain = split_gain(l, r, p).unwrap();
            assert!((gain - oracle).abs() < 1e-6, "{gain} vs {oracle}");
            assert!(gain >= -1e-12);
        }
    }

    #[test]
    fn constant_gradient_gives_single_leaf() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let b = binned_from(&[x], 16);
        let g = vec![0.3; 50];
        let h = vec![0.2; 50];
        let mut p = params(vec![0]);
        p.redundancy = 0.75;
        let t = build_tree(&b, &g, &h, &p).unwrap();
        assert!(t.is_leaf());
        let expected = leaf_value(0.3 * 50.0, 0.2 * 50.0, 4).unwrap();
        assert!((t.predict(&[0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn stump_prediction() {
        let t = Tree::stump(0, 5.0, -1.0, 1.0);
        assert_eq!(t.predict(&[4.0]), -1.0);
        assert_eq!(t.predict(&[6.0]), 1.0);
        assert_eq!(t.predict(&[5.0]), -1.0);
        assert!(Tree::leaf(3.0).predict(&[]) == 3.0);
        assert!(t.try_predict(&[]).is_err());
    }

    #[test]
    fn from_nodes_rejects_bad_shapes() {
        let t = Tree::stump(0, 1.0, 0.0, 1.0);
        assert!(Tree::from_nodes(t.nodes().to_vec()).is_ok());
        let mut bad = t.nodes().to_vec();
        bad.pop();
        assert!(Tree::from_nodes(bad).is_err());
        assert!(Tree::from_nodes(vec![]).is_err());
    }

    /// Exhaustive root-split oracle computed from raw rows.
    fn oracle_root(
        columns: &[Vec<f64>],
        cbs: &[&ColumnBins],
        g: &[f64],
        h: &[f64],
        p: &TreeParams,
    ) -> Option<(usize, f64, f64)> {
        let n = g.len();
        let total = (g.iter().sum::<f64>(), h.iter().sum::<f64>());
        let mut best: Option<(usize, f64, f64)> = None;
        for (c, col) in columns.iter().enumerate() {
            for &thr in &cbs[c].cuts {
                let (mut l, mut r, mut ln) = ((0.0, 0.0), (0.0, 0.0), 0);
                for i in 0..n {
                    if col[i] <= thr {
                        l.0 += g[i];
                        l.1 += h[i];
                        ln += 1;
                    } else {
                        r.0 += g[i];
                        r.1 += h[i];
                    }
                }
                if ln < p.min_data_in_leaf || n - ln < p.min_data_in_leaf {
                    continue;
                }
                if l.1 < p.min_sum_hessian_in_leaf || r.1 < p.min_sum_hessian_in_leaf {
                    continue;
                }
                let (lv, rv) = (-p.redundancy * l.0 / l.1, -p.redundancy * r.0 / r.1);
                let ok = match p.monotone.get(&c).copied().unwrap_or_default() {
                    Monotone::None => true,
                    Monotone::Increasing => lv < rv,
                    Monotone::Decreasing => lv > rv,
                };
                let terms = l.0 * l.0 / l.1 + r.0 * r.0 / r.1;
                let gain = 0.5 * (terms - total.0 * total.0 / total.1);
                if ok && gain > p.min_gain_to_split && gain > 1e-12 * terms && best.is_none_or(|b| gain > b.2) {
                    best = Some((c, thr, gain));
                }
            }
        }
        best
    }

    #[test]
    fn depth_one_split_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100 {
            let n = rng.gen_range(10..200);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..30) as f64).collect();
            // dyadic gradients keep every partial sum exact
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-64..64) as f64 / 64.0).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(1..64) as f64 / 64.0).collect();
            let b = binned_from(&[x.clone()], 16);
            let mut p = params(vec![0]);
            if case % 2 == 0 {
                p.monotone.insert(0, Monotone::Decreasing);
            }
            let t = build_tree(&b, &g, &h, &p).unwrap();
            let oracle = oracle_root(&[x], &[b.column_bins(0)], &g, &h, &p);
            match (t.nodes()[0].clone(), oracle) {
                (Node::Leaf { .. }, None) => {}
                (Node::Split { feature, threshold, gain, .. }, Some((c, thr, og))) => {
                    assert_eq!((feature, threshold, gain), (c, thr, og), "case {case}");
                }
                (node, o) => panic!("case {case}: tree {node:?} vs oracle {o:?}"),
            }
        }
    }

    #[test]
    fn decreasing_constraint_rejects_increasing_split() {
        // utility rises with x: the unconstrained best split has left < right
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|&v| if v < 20.0 { 0.5 } else { -0.5 }).collect();
        let h = vec![0.25; 40];
        let b = binned_from(&[x], 16);
        let free = build_tree(&b, &g, &h, &params(vec![0])).unwrap();
        match free.nodes()[1..] {
            [Node::Leaf { value: l }, Node::Leaf { value: r }] => assert!(l < r),
            _ => panic!("expected a stump"),
        }
        let mut p = params(vec![0]);
        p.monotone.insert(0, Monotone::Decreasing);
        let t = build_tree(&b, &g, &h, &p).unwrap();
        assert!(t.is_leaf());
    }

    #[test]
    fn monotone_depth_three_tree_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let n = 150;
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let b = binned_from(&[x0, x1], 16);
            let mut p = params(vec![0, 1]);
            p.max_depth = 3;
            p.monotone.insert(0, Monotone::Increasing);
            let t = build_tree(&b, &g, &h, &p).unwrap();
            let mut grid: Vec<f64> = t.thresholds(0).collect();
            grid.push(-1.0);
            grid.push(11.0);
            grid.sort_by(f64::total_cmp);
            for other in t.thresholds(1).chain([-1.0, 11.0]) {
                let vals: Vec<f64> = grid.iter().map(|&x| t.predict(&[x, other])).collect();
                assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
            }
        }
    }

    #[test]
    fn trees_only_use_allowed_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let g: Vec<f64> = cols[0].iter().map(|&v| v - 0.5).collect();
        let h = vec![0.25; n];
        let b = binned_from(&cols, 16);
        let mut p = params(vec![1, 2]);
        p.max_depth = 3;
        let t = build_tree(&b, &g, &h, &p).unwrap();
        assert!(t.features().iter().all(|f| *f == 1 || *f == 2));
    }

    #[test]
    fn l1_l2_penalties_shrink_leaves() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|&v| if v < 20.0 { 0.5 } else { -0.5 }).collect();
        let h = vec![0.25; 40];
        let b = binned_from(&[x], 16);
        let mut p = params(vec![0]);
        p.lambda_l1 = 2.0;
        p.lambda_l2 = 5.0;
        let t = build_tree(&b, &g, &h, &p).unwrap();
        // left: G = 10, H = 5 -> -(10 - 2) / (5 + 5)
        assert_eq!(t.predict(&[0.0]), -0.8);
        assert_eq!(t.predict(&[39.0]), 0.8);
        p.lambda_l1 = 10.0;
        assert!(build_tree(&b, &g, &h, &p).unwrap().is_leaf());
    }

    #[test]
    fn leaf_budget_limits_growth() {
        let x: Vec<f64> = (0..200).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|v| (v / 10.0).sin()).collect();
        let h = vec![0.25; 200];
        let b = binned_from(&[x], 64);
        let mut p = params(vec![0]);
        p.max_depth = 8;
        p.max_leaves = Some(5);
        let t = build_tree(&b, &g, &h, &p).unwrap();
        assert_eq!(t.n_leaves(), 5);
        assert!(Tree::from_nodes(t.nodes().to_vec()).is_ok());
    }

    #[test]
    fn interpreter_oracle_agrees_on_depth_two_tree() {
        fn interpret(nodes: &[Node], i: usize, row: &[f64]) -> f64 {
            match &nodes[i] {
                Node::Leaf { value } => *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    if row[*feature] > *threshold {
                        interpret(nodes, *right, row)
                    } else {
                        interpret(nodes, *left, row)
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let g: Vec<f64> = (0..n).map(|i| cols[0][i] * cols[1][i] - 0.25).collect();
        let h = vec![0.25; n];
        let b = binned_from(&cols, 16);
        let mut p = params(vec![0, 1]);
        p.max_depth = 2;
        let t = build_tree(&b, &g, &h, &p).unwrap();
        for _ in 0..1000 {
            let row = [rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5)];
            assert_eq!(t.predict(&row), interpret(t.nodes(), 0, &row));
        }
    }
}
