//! Simulated choice data with known utilities, for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::ChoiceDataset;
use crate::prob::{Head, Matrix};
use crate::spec::{parse_spec, ModelSpec, NestSpec};

/// A true piecewise-constant utility term, same interval convention as
/// [`crate::StepFunction`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrueStep {
    pub alt: usize,
    pub variable: String,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl TrueStep {
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b < x)]
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub ds: ChoiceDataset,
    pub spec: ModelSpec,
    /// True systematic utilities (N x J).
    pub utilities: Matrix,
    /// True choice probabilities (N x J).
    pub probs: Matrix,
    pub steps: Vec<TrueStep>,
    pub constants: Vec<f64>,
}

impl Synthetic {
    /// Mean negative log-likelihood of the observed choices under the true model.
    pub fn bayes_ce(&self) -> f64 {
        crate::prob::cross_entropy(&self.probs, self.ds.choice())
    }
}

fn step(alt: usize, variable: &str, breakpoints: &[f64], values: &[f64]) -> TrueStep {
    TrueStep {
        alt,
        variable: variable.into(),
        breakpoints: breakpoints.to_vec(),
        values: values.to_vec(),
    }
}

fn simulate(n: usize, seed: u64, alts: &[&str], steps: Vec<TrueStep>, constants: Vec<f64>, head: &Head, spec: ModelSpec) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = alts.len();
    let mut names: Vec<String> = Vec::new();
    for s in &steps {
        if !names.contains(&s.variable) {
            names.push(s.variable.clone());
        }
    }
    let columns: Vec<Vec<f64>> = names
        .iter()
        .map(|_| (0..n).map(|_| (rng.gen_range(0.0..10.0f64) * 100.0).round() / 100.0).collect())
        .collect();
    let mut utilities = Matrix::zeros(n, j);
    for r in 0..n {
        for (i, c) in constants.iter().enumerate() {
            utilities.set(r, i, *c);
        }
        for s in &steps {
            let k = names.iter().position(|v| *v == s.variable).expect("variable listed");
            utilities.add(r, s.alt, s.eval(columns[k][r]));
        }
    }
    let probs = head.probs(&utilities).expect("finite utilities");
    let choice = (0..n)
        .map(|r| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let p = probs.row(r);
            for (i, &pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    return i;
                }
            }
            j - 1
        })
        .collect();
    // households of three trips
    let groups = Some((0..n).map(|r| format!("h{}", r / 3)).collect());
    let ds = ChoiceDataset::new(names, columns, choice, groups, alts.iter().map(|s| s.to_string()).collect())
        .expect("simulated data is valid");
    Synthetic {
        ds,
        spec,
        utilities,
        probs,
        steps,
        constants,
    }
}

/// Three alternatives with five decreasing four-level utility terms.
pub fn step_mnl(n: usize, seed: u64) -> Synthetic {
    let steps = vec![
        step(0, "time_a", &[2.5, 5.0, 7.5], &[0.0, -0.6, -1.2, -2.0]),
        step(1, "time_b", &[3.0, 6.0, 8.0], &[0.0, -0.8, -1.4, -2.0]),
        step(1, "cost_b", &[2.0, 4.0, 7.0], &[0.0, -0.5, -1.0, -1.5]),
        step(2, "time_c", &[1.5, 4.5, 7.0], &[0.0, -0.7, -1.5, -1.9]),
        step(2, "cost_c", &[3.5, 5.5, 8.5], &[0.0, -0.4, -1.2, -1.6]),
    ];
    let mut doc = String::from("alternatives = [\"a\", \"b\", \"c\"]\n");
    for s in &steps {
        doc += &format!(
            "[[parameter]]\nalt = \"{}\"\nvariables = [\"{}\"]\nmonotone = [\"decreasing\"]\n",
            ["a", "b", "c"][s.alt],
            s.variable
        );
    }
    let spec = parse_spec(&doc).expect("valid spec");
    simulate(n, seed, &["a", "b", "c"], steps, vec![0.0, 0.5, -0.3], &Head::Mnl, spec)
}

/// Four alternatives where the last two share a nest with scale `mu`.
pub fn nested_steps(n: usize, seed: u64, mu: f64) -> Synthetic {
    let alts = ["walk", "cycle", "pt", "drive"];
    let steps = vec![
        step(0, "time_walk", &[2.0, 4.0, 6.0], &[0.0, -0.8, -1.6, -2.6]),
        step(1, "time_cycle", &[3.0, 5.0, 8.0], &[0.0, -0.5, -1.2, -2.0]),
        step(2, "time_pt", &[2.5, 5.0, 7.5], &[0.0, -0.4, -0.9, -1.5]),
        step(3, "time_drive", &[2.0, 5.5, 8.0], &[0.0, -0.5, -1.0, -1.6]),
        step(3, "cost_drive", &[3.0, 6.0, 9.0], &[0.0, -0.3, -0.8, -1.2]),
    ];
    let mut doc = String::from("alternatives = [\"walk\", \"cycle\", \"pt\", \"drive\"]\n");
    for s in &steps {
        doc += &format!(
            "[[parameter]]\nalt = \"{}\"\nvariables = [\"{}\"]\nmonotone = [\"decreasing\"]\n",
            alts[s.alt], s.variable
        );
    }
    doc += &format!("[nest]\ngroups = [[\"walk\"], [\"cycle\"], [\"pt\", \"drive\"]]\nmu = [1.0, 1.0, {mu:?}]\n");
    let spec = parse_spec(&doc).expect("valid spec");
    let nest = NestSpec::new(vec![vec![0], vec![1], vec![2, 3]], vec![1.0, 1.0, mu], 4).expect("valid nests");
    simulate(n, seed, &alts, steps, vec![0.0, -0.2, 0.3, 0.4], &Head::Nested(nest), spec)
}
