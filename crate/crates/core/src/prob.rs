//! Choice probability heads (multinomial and nested logit), cross-entropy,
//! per-utility gradients and Hessian diagonals, and BIC.

use crate::error::{Error, Result};
use crate::spec::NestSpec;

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-15;

/// Dense row-major `n_rows x n_cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { n_rows, n_cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Ok(Matrix {
            n_rows: rows.len(),
            n_cols,
            data: rows.concat(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    /// Values of column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }
}

/// N x J matrix of systematic utilities.
pub type UtilityMatrix = Matrix;

/// Per-observation, per-alternative first and second derivatives of the
/// negative log-likelihood with respect to the utility.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub grad: Matrix,
    pub hess: Matrix,
}

/// Probability head mapping utilities to choice probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Mnl,
    Nested(NestSpec),
}

impl Head {
    pub fn probs(&self, v: &UtilityMatrix) -> Result<Matrix> {
        match self {
            Head::Mnl => softmax_probs(v),
            Head::Nested(n) => nested_probs(v, n),
        }
    }

    pub fn row_probs(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Head::Mnl => softmax_row(v, out),
            Head::Nested(n) => nested_row(v, n, out),
        }
    }
}

fn check_finite(v: &UtilityMatrix) -> Result<()> {
    match v.as_slice().iter().position(|x| !x.is_finite()) {
        Some(p) => Err(Error::Numerical(format!(
            "non-finite utility at row {}, alternative {}",
            p / v.n_cols().max(1),
            p % v.n_cols().max(1)
        ))),
        None => Ok(()),
    }
}

/// Max-shifted softmax of one row.
pub fn softmax_row(v: &[f64], out: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax_probs(v: &UtilityMatrix) -> Result<Matrix> {
    check_finite(v)?;
    let mut p = Matrix::zeros(v.n_rows(), v.n_cols());
    for i in 0..v.n_rows() {
        softmax_row(v.row(i), p.row_mut(i));
    }
    Ok(p)
}

/// Two-level nested logit for one row: `P(i) = P(i|m) P(m)` with
/// `P(i|m) = exp(mu_m V_i) / sum_{j in m} exp(mu_m V_j)` and `P(m)` the softmax
/// of the nest log-sums `(1/mu_m) ln sum_{i in m} exp(mu_m V_i)`.
pub fn nested_row(v: &[f64], nest: &NestSpec, out: &mut [f64]) {
    let n_nests = nest.nests().len();
    let mut log_sum = vec![0.0; n_nests];
    let mut inclusive = vec![0.0; n_nests];
    for (m, members) in nest.nests().iter().enumerate() {
        let mu = nest.mu()[m];
        let a = members.iter().map(|&i| mu * v[i]).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = members.iter().map(|&i| (mu * v[i] - a).exp()).sum();
        log_sum[m] = a + s.ln();
        inclusive[m] = log_sum[m] / mu;
    }
    let mut nest_p = vec![0.0; n_nests];
    softmax_row(&inclusive, &mut nest_p);
    for (m, members) in nest.nests().iter().enumerate() {
        let mu = nest.mu()[m];
        for &i in members {
            out[i] = (mu * v[i] - log_sum[m]).exp() * nest_p[m];
        }
    }
}

pub fn nested_probs(v: &UtilityMatrix, nest: &NestSpec) -> Result<Matrix> {
    check_finite(v)?;
    if nest.n_alts() != v.n_cols() {
        return Err(Error::InvalidArgument(format!(
            "nest structure covers {} alternatives, utilities have {}",
            nest.n_alts(),
            v.n_cols()
        )));
    }
    let mut p = Matrix::zeros(v.n_rows(), v.n_cols());
    for i in 0..v.n_rows() {
        nested_row(v.row(i), nest, p.row_mut(i));
    }
    Ok(p)
}

/// Mean negative log-likelihood of the chosen alternatives.
pub fn cross_entropy(probs: &Matrix, choice: &[usize]) -> f64 {
    if choice.is_empty() {
        return 0.0;
    }
    let total: f64 = choice
        .iter()
        .enumerate()
        .map(|(n, &c)| -probs.get(n, c).max(PROB_FLOOR).ln())
        .sum();
    total / choice.len() as f64
}

/// Analytic gradient and Hessian diagonal of `-ln P(chosen)`.
///
/// For the multinomial head `g = p - y`, `h = p (1 - p)`. For the nested head,
/// with chosen alternative `c` in nest `m`:
///
/// `g_k = P(k) - mu_m [k = c] + (mu_m - 1) P(k|m) [k in m]`
///
/// `h_k = P(k) (mu_n (1 - P(k|n)) + P(k|n) (1 - P(n))) + (mu_m - 1) mu_m P(k|m) (1 - P(k|m)) [k in m]`
///
/// where `n` is the nest of `k`. Both reduce to the multinomial form when all
/// scales are 1.
pub fn grad_hess(probs: &Matrix, choice: &[usize], head: &Head) -> Result<GradHess> {
    let (n, j) = (probs.n_rows(), probs.n_cols());
    if choice.len() != n {
        return Err(Error::InvalidArgument(format!("{} choices for {n} probability rows", choice.len())));
    }
    if let Some(&c) = choice.iter().find(|&&c| c >= j) {
        return Err(Error::InvalidArgument(format!("choice {c} outside 0..{j}")));
    }
    let mut grad = Matrix::zeros(n, j);
    let mut hess = Matrix::zeros(n, j);
    match head {
        Head::Mnl => {
            for r in 0..n {
                for k in 0..j {
                    let p = probs.get(r, k);
                    let y = if choice[r] == k { 1.0 } else { 0.0 };
                    grad.set(r, k, p - y);
                    hess.set(r, k, p * (1.0 - p));
                }
            }
        }
        Head::Nested(nest) => {
            if nest.n_alts() != j {
                return Err(Error::InvalidArgument(format!(
                    "nested head over {} alternatives applied to {j}-column probabilities",
                    nest.n_alts()
                )));
            }
            let mut nest_p = vec![0.0; nest.nests().len()];
            for r in 0..n {
                let p = probs.row(r);
                for (m, members) in nest.nests().iter().enumerate() {
                    nest_p[m] = members.iter().map(|&k| p[k]).sum();
                }
                let c = choice[r];
                let mc = nest.nest_of(c);
                let mu_c = nest.mu()[mc];
                for k in 0..j {
                    let nk = nest.nest_of(k);
                    let mu_k = nest.mu()[nk];
                    let cond = if nest_p[nk] > 0.0 { p[k] / nest_p[nk] } else { 0.0 };
                    let mut g = p[k];
                    let mut h = p[k] * (mu_k * (1.0 - cond) + cond * (1.0 - nest_p[nk]));
                    if k == c {
                        g -= mu_c;
                    }
                    if nk == mc {
                        g += (mu_c - 1.0) * cond;
                        h += (mu_c - 1.0) * mu_c * cond * (1.0 - cond);
                    }
                    grad.set(r, k, g);
                    hess.set(r, k, h);
                }
            }
        }
    }
    Ok(GradHess { grad, hess })
}

/// `2 N L + df ln N` with `L` the mean negative log-likelihood.
pub fn bic(mean_loss: f64, df: usize, n: usize) -> f64 {
    let n = n as f64;
    2.0 * n * mean_loss + df as f64 * n.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row_probs(head: &Head, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        head.row_probs(v, &mut out);
        out
    }

    fn nll(head: &Head, v: &[f64], c: usize) -> f64 {
        -row_probs(head, v)[c].ln()
    }

    #[test]
    fn uniform_row() {
        let p = softmax_probs(&Matrix::from_rows(&[vec![0.0; 4]]).unwrap()).unwrap();
        assert_eq!(p.row(0), &[0.25; 4]);
    }

    #[test]
    fn ln2_row() {
        let p = softmax_probs(&Matrix::from_rows(&[vec![2f64.ln(), 0.0]]).unwrap()).unwrap();
        assert!((p.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_123_against_high_precision_values() {
        // e^k / (e + e^2 + e^3) evaluated at 40 digits with mpmath
        let expected = [
            0.090_030_573_170_380_457_998_022_101_484_5,
            0.244_728_471_054_797_652_472_959_618_340_8,
            0.665_240_955_774_821_889_529_018_280_174_7,
        ];
        let p = softmax_probs(&Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap()).unwrap();
        for k in 0..3 {
            assert!((p.get(0, k) - expected[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn nan_is_rejected() {
        let v = Matrix::from_rows(&[vec![0.0, f64::NAN]]).unwrap();
        assert!(softmax_probs(&v).is_err());
        assert!(nested_probs(&v, &NestSpec::singletons(2)).is_err());
    }

    #[test]
    fn extreme_utilities_do_not_overflow() {
        let v = Matrix::from_rows(&[vec![1000.0, 0.0, -1000.0]]).unwrap();
        let p = softmax_probs(&v).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        let n = NestSpec::new(vec![vec![0], vec![1, 2]], vec![1.0, 2.0], 3).unwrap();
        let p = nested_probs(&v, &n).unwrap();
        assert!(p.row(0).iter().all(|x| x.is_finite()));
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nested_three_alternatives_hand_evaluation() {
        // nests {0}, {1,2}, mu = 2, V = 0: inclusive value of {1,2} is ln(2)/2,
        // so P(0) = 1 / (1 + sqrt 2) and P(1) = P(2) = sqrt 2 / (2 (1 + sqrt 2))
        let n = NestSpec::new(vec![vec![0], vec![1, 2]], vec![1.0, 2.0], 3).unwrap();
        let p = row_probs(&Head::Nested(n), &[0.0, 0.0, 0.0]);
        let s2 = 2f64.sqrt();
        assert!((p[0] - 1.0 / (1.0 + s2)).abs() < 1e-15);
        assert!((p[1] - s2 / (2.0 * (1.0 + s2))).abs() < 1e-15);
        assert!((p[0] - 0.414_213_562_373_095_048_8).abs() < 1e-15);
    }

    #[test]
    fn unit_scales_reproduce_softmax() {
        let v = [0.3, -1.2, 2.5, 0.0];
        let n = NestSpec::new(vec![vec![0, 2], vec![1, 3]], vec![1.0, 1.0], 4).unwrap();
        let a = row_probs(&Head::Nested(n), &v);
        let b = row_probs(&Head::Mnl, &v);
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_nests_ignore_scale() {
        let v = [0.3, -1.2, 2.5];
        let n = NestSpec::new(vec![vec![0], vec![1], vec![2]], vec![1.7, 3.0, 1.2], 3).unwrap();
        let a = row_probs(&Head::Nested(n), &v);
        let b = row_probs(&Head::Mnl, &v);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_cases() {
        let perfect = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(cross_entropy(&perfect, &[0, 1]), 0.0);
        let uniform = Matrix::from_rows(&[vec![0.25; 4], vec![0.25; 4]]).unwrap();
        assert!((cross_entropy(&uniform, &[0, 3]) - 4f64.ln()).abs() < 1e-15);
        // clamped, finite
        assert!(cross_entropy(&perfect, &[1, 0]).is_finite());
    }

    #[test]
    fn mnl_grad_hess_cases() {
        let p = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let gh = grad_hess(&p, &[0, 0], &Head::Mnl).unwrap();
        assert_eq!((gh.grad.get(0, 0), gh.hess.get(0, 0)), (0.0, 0.0));
        assert_eq!((gh.grad.get(1, 0), gh.hess.get(1, 0)), (-0.5, 0.25));
    }

    #[test]
    fn head_mismatch_is_rejected() {
        let p = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let n = NestSpec::singletons(3);
        assert!(grad_hess(&p, &[0], &Head::Nested(n)).is_err());
        assert!(grad_hess(&p, &[0, 1], &Head::Mnl).is_err());
    }

    #[test]
    fn nested_gradient_matches_finite_differences() {
        let n = NestSpec::new(vec![vec![0, 3], vec![1, 2, 4]], vec![1.5, 1.5], 5).unwrap();
        let head = Head::Nested(n);
        let v = [0.4, -0.7, 1.1, 0.2, -0.3];
        for c in 0..5 {
            let p = Matrix::from_rows(&[row_probs(&head, &v)]).unwrap();
            let gh = grad_hess(&p, &[c], &head).unwrap();
            for k in 0..5 {
                let step = 1e-5;
                let mut up = v;
                let mut dn = v;
                up[k] += step;
                dn[k] -= step;
                let fd = (nll(&head, &up, c) - nll(&head, &dn, c)) / (2.0 * step);
                let g = gh.grad.get(0, k);
                assert!((g - fd).abs() <= 1e-5 * g.abs().max(1e-2), "g[{k}] {g} vs {fd}");
            }
        }
    }

    #[test]
    fn bic_cases() {
        assert_eq!(bic(0.0, 0, 10), 0.0);
        let b = bic(0.7, 10, 1000);
        assert!((b - (1400.0 + 10.0 * 1000f64.ln())).abs() < 1e-9);
        assert!((b - 1469.077_552_789_821_4).abs() < 1e-9);
        assert!(bic(0.6, 10, 1000) < b);
    }

    proptest! {
        #[test]
        fn rows_are_stochastic_and_shift_invariant(
            v in prop::collection::vec(-20.0f64..20.0, 4),
            shift in -50.0f64..50.0,
            mu in 1.0f64..3.0,
        ) {
            let nest = NestSpec::new(vec![vec![0, 1], vec![2], vec![3]], vec![mu, 1.0, 1.0], 4).unwrap();
            for head in [Head::Mnl, Head::Nested(nest)] {
                let p = row_probs(&head, &v);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
                let q = row_probs(&head, &shifted);
                for k in 0..4 {
                    prop_assert!((p[k] - q[k]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn mnl_hessian_positive_in_interior(v in prop::collection::vec(-5.0f64..5.0, 3), c in 0usize..3) {
            let p = Matrix::from_rows(&[row_probs(&Head::Mnl, &v)]).unwrap();
            let gh = grad_hess(&p, &[c], &Head::Mnl).unwrap();
            for k in 0..3 {
                prop_assert!(gh.hess.get(0, k) > 0.0);
            }
        }
    }
}
