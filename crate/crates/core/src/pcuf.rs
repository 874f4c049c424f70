//! Smoothing of step-function utilities into monotone splines, with knot
//! counts and positions chosen by BIC.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boost::{EnsembleKind, RUMBoostModel, StepFunction};
use crate::data::ChoiceDataset;
use crate::error::{Error, Result};
use crate::prob::{bic, cross_entropy, Head, Matrix, UtilityMatrix};
use crate::spline::SplineCurve;

const PROB_FLOOR: f64 = 1e-15;
/// Smallest knot gap, relative to the domain width.
const MIN_GAP: f64 = 1e-9;

/// How many degrees of freedom a curve with `Q + 1` knots counts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfRule {
    /// `Q + 1`: one per knot value.
    #[default]
    Values,
    /// `2 (Q + 1)`: knot values and positions.
    ValuesAndPositions,
}

impl DfRule {
    pub fn df(self, n_knots: usize) -> usize {
        match self {
            DfRule::Values => n_knots,
            DfRule::ValuesAndPositions => 2 * n_knots,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothParams {
    /// Inclusive bounds on knots per curve (knot count, not intervals).
    pub knot_bounds: (usize, usize),
    pub n_searches: usize,
    pub seed: u64,
    pub df_rule: DfRule,
    /// Round-robin passes over the curves when optimising positions.
    pub passes: usize,
    /// Objective evaluations per curve per pass.
    pub max_evals: usize,
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            knot_bounds: (3, 8),
            n_searches: 25,
            seed: 0,
            df_rule: DfRule::Values,
            passes: 2,
            max_evals: 150,
        }
    }
}

/// A spline that replaces one parameter's step function.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineOverride {
    /// Index into `ModelSpec::parameters`.
    pub param: usize,
    pub curve: SplineCurve,
}

/// A trained model with some one-variable parameters replaced by splines.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedModel {
    pub base: RUMBoostModel,
    /// Sorted by parameter.
    pub overrides: Vec<SplineOverride>,
    pub df: usize,
}

impl SmoothedModel {
    pub fn new(base: RUMBoostModel, mut overrides: Vec<SplineOverride>, df_rule: DfRule) -> Result<Self> {
        overrides.sort_by_key(|o| o.param);
        for w in overrides.windows(2) {
            if w[0].param == w[1].param {
                return Err(Error::InvalidArgument(format!("parameter {} is smoothed twice", w[0].param)));
            }
        }
        for o in &overrides {
            let p = base
                .spec
                .parameters
                .get(o.param)
                .ok_or_else(|| Error::InvalidArgument(format!("no parameter {}", o.param)))?;
            if p.variables.len() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "parameter ({}) has two variables and cannot be smoothed",
                    p.variables.join(", ")
                )));
            }
            if p.variables[0] != o.curve.variable {
                return Err(Error::InvalidArgument(format!(
                    "spline for '{}' attached to a parameter on '{}'",
                    o.curve.variable, p.variables[0]
                )));
            }
        }
        let df = overrides.iter().map(|o| df_rule.df(o.curve.knots.len())).sum();
        Ok(SmoothedModel { base, overrides, df })
    }

    /// The base model with no spline.
    pub fn unsmoothed(base: RUMBoostModel) -> Self {
        SmoothedModel {
            base,
            overrides: Vec::new(),
            df: 0,
        }
    }

    pub fn curve(&self, param: usize) -> Option<&SplineCurve> {
        self.overrides
            .binary_search_by_key(&param, |o| o.param)
            .ok()
            .map(|i| &self.overrides[i].curve)
    }

    /// Utilities with smoothed parameters evaluated through their splines.
    pub fn predict_utilities(&self, ds: &ChoiceDataset) -> Result<UtilityMatrix> {
        let cols = self.base.feature_columns(ds)?;
        self.base.utilities_with(&cols, ds.n_rows(), |e, _, value| match e.kind {
            EnsembleKind::Parameter(p) => match self.curve(p) {
                Some(c) => c.value(value(e.features[0])),
                None => e.predict_by(value),
            },
            EnsembleKind::FeBlock(_) => e.predict_by(value),
        })
    }

    pub fn predict_probs(&self, ds: &ChoiceDataset) -> Result<Matrix> {
        self.base.head().probs(&self.predict_utilities(ds)?)
    }

    pub fn cross_entropy(&self, ds: &ChoiceDataset) -> Result<f64> {
        Ok(cross_entropy(&self.predict_probs(ds)?, ds.choice()))
    }

    /// `2 N L + df ln N` on `ds`.
    pub fn bic(&self, ds: &ChoiceDataset) -> Result<f64> {
        Ok(bic(self.cross_entropy(ds)?, self.df, ds.n_rows()))
    }
}

pub fn smoothed_predict(sm: &SmoothedModel, ds: &ChoiceDataset) -> Result<Matrix> {
    sm.predict_probs(ds)
}

/// Knots at the `q / Q` quantiles of `values` (linear interpolation between
/// order statistics), endpoints pinned to the minimum and maximum. Duplicate
/// quantiles are dropped.
pub fn quantile_knots(values: &[f64], q: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut knots: Vec<f64> = (0..=q)
        .map(|i| {
            if i == 0 {
                return sorted[0];
            }
            if i == q {
                return sorted[n - 1];
            }
            let pos = (n - 1) as f64 * i as f64 / q as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[lo]
            }
        })
        .collect();
    knots.dedup();
    knots
}

/// Everything one BIC evaluation needs, with the non-smoothed part of the
/// utilities precomputed.
struct Objective<'a> {
    n: usize,
    j: usize,
    choice: &'a [usize],
    head: Head,
    /// Utilities of all ensembles except the targets (N x J, row-major).
    fixed: Vec<f64>,
    targets: Vec<Target>,
    df_rule: DfRule,
}

struct Target {
    param: usize,
    alt: usize,
    step: StepFunction,
    x: Vec<f64>,
    domain: (f64, f64),
}

impl Objective<'_> {
    fn curve(&self, t: usize, knots: Vec<f64>) -> Result<SplineCurve> {
        let tg = &self.targets[t];
        let values = knots.iter().map(|&k| tg.step.eval(k)).collect();
        SplineCurve::new(&tg.step.variable, knots, values)
    }

    fn contribution(&self, t: usize, curve: &SplineCurve) -> Vec<f64> {
        self.targets[t].x.iter().map(|&x| curve.value(x)).collect()
    }

    /// BIC with per-target contributions `contrib` and knot counts `knots`.
    fn bic(&self, contrib: &[&[f64]], n_knots: &[usize]) -> f64 {
        let losses: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map_init(
                || (vec![0.0; self.j], vec![0.0; self.j]),
                |(v, p), r| {
                    v.copy_from_slice(&self.fixed[r * self.j..(r + 1) * self.j]);
                    for (t, c) in contrib.iter().enumerate() {
                        v[self.targets[t].alt] += c[r];
                    }
                    self.head.row_probs(v, p);
                    -p[self.choice[r]].max(PROB_FLOOR).ln()
                },
            )
            .collect();
        let mean = losses.iter().sum::<f64>() / self.n as f64;
        let df = n_knots.iter().map(|&k| self.df_rule.df(k)).sum();
        bic(mean, df, self.n)
    }
}

fn build_objective<'a>(
    model: &RUMBoostModel,
    ds: &'a ChoiceDataset,
    params: &[usize],
    df_rule: DfRule,
) -> Result<Objective<'a>> {
    if params.is_empty() {
        return Err(Error::InvalidArgument("no parameters to smooth".into()));
    }
    let cols = model.feature_columns(ds)?;
    let mut targets = Vec::with_capacity(params.len());
    for &p in params {
        let step = model.utility_curve(p)?;
        let e = model.ensemble(EnsembleKind::Parameter(p)).expect("curve exists");
        let x = cols[e.features[0]].to_vec();
        let domain = model.feature_ranges[e.features[0]];
        targets.push(Target {
            param: p,
            alt: e.alt,
            step,
            x,
            domain,
        });
    }
    let fixed = model.utilities_with(&cols, ds.n_rows(), |e, _, value| match e.kind {
        EnsembleKind::Parameter(p) if params.contains(&p) => 0.0,
        _ => e.predict_by(value),
    })?;
    Ok(Objective {
        n: ds.n_rows(),
        j: model.n_alts(),
        choice: ds.choice(),
        head: model.head(),
        fixed: fixed.as_slice().to_vec(),
        targets,
        df_rule,
    })
}

/// Maps unconstrained `z` to knots on `[a, b]`: gaps are a softmax share of
/// the width above a minimum gap, so knots stay strictly ordered.
fn knots_from_z(z: &[f64], (a, b): (f64, f64)) -> Vec<f64> {
    let q = z.len();
    let gmin = MIN_GAP * (b - a);
    let free = (b - a) - q as f64 * gmin;
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut knots = Vec::with_capacity(q + 1);
    knots.push(a);
    let mut acc = a;
    for wi in &w[..q - 1] {
        acc += gmin + free * wi / total;
        knots.push(acc);
    }
    knots.push(b);
    knots
}

fn z_from_knots(knots: &[f64]) -> Vec<f64> {
    let (a, b) = (knots[0], knots[knots.len() - 1]);
    let gmin = MIN_GAP * (b - a);
    knots
        .windows(2)
        .map(|w| ((w[1] - w[0] - gmin).max(1e-12 * (b - a))).ln())
        .collect()
}

/// Minimises `f` from `x0` with a Nelder-Mead simplex (reflection 1,
/// expansion 2, contraction and shrink 1/2). Returns the best point and value.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(x0);
    simplex.push((x0.to_vec(), f0));
    if d == 0 {
        return (x0.to_vec(), f0);
    }
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    while evals.get() < max_evals {
        order(&mut simplex);
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if (worst - best).abs() <= 1e-10 * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[d].1 {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best.iter().zip(&s.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fx = eval(&x);
                    *s = (x, fx);
                }
            }
        }
    }
    order(&mut simplex);
    simplex.swap_remove(0)
}

/// Outcome of one knot-count draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    /// Knots per target, in target order.
    pub counts: Vec<usize>,
    /// BIC with knots at the quantile starting positions.
    pub initial_bic: f64,
    pub bic: f64,
}

#[derive(Debug, Clone)]
pub struct SmoothingResult {
    pub model: SmoothedModel,
    /// Targets actually smoothed (empty ensembles are skipped).
    pub params: Vec<usize>,
    pub searches: Vec<SearchRecord>,
    /// Index of the chosen search.
    pub best: usize,
    pub bic: f64,
}

/// Quantile starting knots for `q` intervals, reducing `q` when the step
/// function or the data cannot support it.
fn initial_knots(tg: &Target, q: usize) -> Vec<f64> {
    let (a, b) = tg.domain;
    let inside = tg.step.breakpoints.iter().filter(|&&x| a < x && x < b).count();
    let q_eff = q.min((inside + 1).max(2));
    if q_eff < q {
        log::warn!(
            "'{}': {} knot intervals requested but the curve has {} steps; using {}",
            tg.step.variable,
            q,
            inside + 1,
            q_eff
        );
    }
    let mut knots = quantile_knots(&tg.x, q_eff);
    if knots.len() < 3 {
        // heavy ties: fall back to even spacing
        knots = (0..=q_eff).map(|i| a + (b - a) * i as f64 / q_eff as f64).collect();
        knots[q_eff] = b;
    } else if knots.len() < q_eff + 1 {
        log::warn!(
            "'{}': tied quantiles leave {} knots instead of {}",
            tg.step.variable,
            knots.len(),
            q_eff + 1
        );
    }
    knots
}

struct SearchState {
    knots: Vec<Vec<f64>>,
    curves: Vec<SplineCurve>,
    contrib: Vec<Vec<f64>>,
}

impl SearchState {
    fn counts(&self) -> Vec<usize> {
        self.knots.iter().map(Vec::len).collect()
    }

    fn bic(&self, obj: &Objective) -> f64 {
        let c: Vec<&[f64]> = self.contrib.iter().map(Vec::as_slice).collect();
        obj.bic(&c, &self.counts())
    }
}

fn start_state(obj: &Objective, intervals: &[usize]) -> Result<SearchState> {
    let mut st = SearchState {
        knots: Vec::new(),
        curves: Vec::new(),
        contrib: Vec::new(),
    };
    for (t, &q) in intervals.iter().enumerate() {
        let knots = initial_knots(&obj.targets[t], q);
        let curve = obj.curve(t, knots.clone())?;
        st.contrib.push(obj.contribution(t, &curve));
        st.curves.push(curve);
        st.knots.push(knots);
    }
    Ok(st)
}

/// Optimises knot positions curve by curve against the full-model BIC.
fn optimise_positions(obj: &Objective, st: &mut SearchState, passes: usize, max_evals: usize) -> Result<f64> {
    let mut current = st.bic(obj);
    for _ in 0..passes {
        for t in 0..obj.targets.len() {
            if st.knots[t].len() < 3 {
                continue;
            }
            let domain = obj.targets[t].domain;
            let counts = st.counts();
            let objective = |z: &[f64]| {
                let knots = knots_from_z(z, domain);
                let Ok(curve) = obj.curve(t, knots) else {
                    return f64::INFINITY;
                };
                let mine = obj.contribution(t, &curve);
                let c: Vec<&[f64]> = st
                    .contrib
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if k == t { mine.as_slice() } else { v.as_slice() })
                    .collect();
                obj.bic(&c, &counts)
            };
            let z0 = z_from_knots(&st.knots[t]);
            let (z, value) = nelder_mead(objective, &z0, 0.5, max_evals);
            if value < current {
                let knots = knots_from_z(&z, domain);
                let curve = obj.curve(t, knots.clone())?;
                st.contrib[t] = obj.contribution(t, &curve);
                st.curves[t] = curve;
                st.knots[t] = knots;
                current = st.bic(obj);
            }
            current = sweep_knots(obj, st, t, current)?;
        }
    }
    Ok(current)
}

/// Pattern step over breakpoints: each interior knot of curve `t` may move to
/// either side of any step breakpoint between its neighbours. The simplex
/// works on a smooth parametrisation and tends to stall on the plateaus of a
/// step function; this moves knots onto the jumps.
fn sweep_knots(obj: &Objective, st: &mut SearchState, t: usize, mut current: f64) -> Result<f64> {
    let (a, b) = obj.targets[t].domain;
    let gmin = MIN_GAP * (b - a);
    let counts = st.counts();
    let breakpoints = obj.targets[t].step.breakpoints.clone();
    for i in 1..st.knots[t].len() - 1 {
        let (lo, hi) = (st.knots[t][i - 1] + gmin, st.knots[t][i + 1] - gmin);
        let candidates = breakpoints
            .iter()
            .flat_map(|&x| [x, x.next_up()])
            .filter(|&x| lo <= x && x <= hi && x != st.knots[t][i]);
        let mut best: Option<(f64, SplineCurve, Vec<f64>)> = None;
        for x in candidates {
            let mut knots = st.knots[t].clone();
            knots[i] = x;
            let Ok(curve) = obj.curve(t, knots) else {
                continue;
            };
            let mine = obj.contribution(t, &curve);
            let c: Vec<&[f64]> = st
                .contrib
                .iter()
                .enumerate()
                .map(|(k, v)| if k == t { mine.as_slice() } else { v.as_slice() })
                .collect();
            let value = obj.bic(&c, &counts);
            if value < best.as_ref().map_or(current, |b| b.0) {
                best = Some((value, curve, mine));
            }
        }
        if let Some((value, curve, mine)) = best {
            st.knots[t] = curve.knots.clone();
            st.curves[t] = curve;
            st.contrib[t] = mine;
            current = value;
        }
    }
    Ok(current)
}

fn smoothable(model: &RUMBoostModel, targets: &[usize]) -> Result<Vec<usize>> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no parameters to smooth".into()));
    }
    let mut kept = Vec::new();
    for &p in targets {
        let spec = model
            .spec
            .parameters
            .get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter {p}")))?;
        if spec.variables.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "parameter ({}) has two variables and cannot be smoothed",
                spec.variables.join(", ")
            )));
        }
        let e = model.ensemble(EnsembleKind::Parameter(p)).expect("parameter ensemble");
        if e.trees.is_empty() {
            log::warn!("'{}' of '{}' has no trees; left unsmoothed", spec.variables[0], model.spec.alt_names[spec.alt]);
            continue;
        }
        let (a, b) = model.feature_ranges[e.features[0]];
        if !(a < b) {
            log::warn!("'{}' is constant in the training data; left unsmoothed", spec.variables[0]);
            continue;
        }
        if !kept.contains(&p) {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Smooths one parameter with `q` knot intervals while every other parameter
/// keeps its current form in `sm`. Returns the curve with the BIC at its
/// quantile start and after optimisation.
pub fn fit_fixed_count(
    sm: &SmoothedModel,
    ds: &ChoiceDataset,
    param: usize,
    q: usize,
    params: &SmoothParams,
) -> Result<(SplineCurve, f64, f64)> {
    if q < 2 {
        return Err(Error::InvalidArgument("at least two knot intervals are needed".into()));
    }
    if smoothable(&sm.base, &[param])?.is_empty() {
        return Err(Error::InvalidArgument(format!("parameter {param} cannot be smoothed")));
    }
    let mut obj = build_objective(&sm.base, ds, &[param], params.df_rule)?;
    // fold the other overrides into the fixed part
    let cols = sm.base.feature_columns(ds)?;
    let fixed = sm.base.utilities_with(&cols, ds.n_rows(), |e, _, value| match e.kind {
        EnsembleKind::Parameter(p) if p == param => 0.0,
        EnsembleKind::Parameter(p) => match sm.curve(p) {
            Some(c) => c.value(value(e.features[0])),
            None => e.predict_by(value),
        },
        EnsembleKind::FeBlock(_) => e.predict_by(value),
    })?;
    obj.fixed = fixed.as_slice().to_vec();
    let extra_df: usize = sm
        .overrides
        .iter()
        .filter(|o| o.param != param)
        .map(|o| params.df_rule.df(o.curve.knots.len()))
        .sum();
    let mut st = start_state(&obj, &[q])?;
    let initial = st.bic(&obj);
    let fin = optimise_positions(&obj, &mut st, params.passes, params.max_evals)?;
    let adjust = extra_df as f64 * (ds.n_rows() as f64).ln();
    Ok((st.curves.remove(0), initial + adjust, fin + adjust))
}

/// Random search over knot counts for `targets` (parameter indices). Each of
/// `n_searches` seeded draws picks a count per curve within the bounds,
/// starts from quantile knots and optimises positions; the draw with the
/// lowest training BIC wins.
pub fn optimize_knot_counts(
    model: &RUMBoostModel,
    ds: &ChoiceDataset,
    targets: &[usize],
    params: &SmoothParams,
) -> Result<SmoothingResult> {
    let (lo, hi) = params.knot_bounds;
    if lo < 3 || hi < lo {
        return Err(Error::InvalidArgument(format!("knot bounds {lo}..{hi} must satisfy 3 <= lo <= hi")));
    }
    if params.n_searches == 0 {
        return Err(Error::InvalidArgument("at least one search is needed".into()));
    }
    let kept = smoothable(model, targets)?;
    if kept.is_empty() {
        return Ok(SmoothingResult {
            bic: SmoothedModel::unsmoothed(model.clone()).bic(ds)?,
            model: SmoothedModel::unsmoothed(model.clone()),
            params: kept,
            searches: Vec::new(),
            best: 0,
        });
    }
    let obj = build_objective(model, ds, &kept, params.df_rule)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let draws: Vec<Vec<usize>> = (0..params.n_searches)
        .map(|_| kept.iter().map(|_| rng.gen_range(lo..=hi) - 1).collect())
        .collect();
    let runs: Vec<Result<(SearchRecord, Vec<SplineCurve>)>> = draws
        .par_iter()
        .map(|intervals| {
            let mut st = start_state(&obj, intervals)?;
            let initial_bic = st.bic(&obj);
            let bic = optimise_positions(&obj, &mut st, params.passes, params.max_evals)?;
            Ok((
                SearchRecord {
                    counts: st.counts(),
                    initial_bic,
                    bic,
                },
                st.curves,
            ))
        })
        .collect();
    let mut searches = Vec::with_capacity(runs.len());
    let mut curves = Vec::with_capacity(runs.len());
    for r in runs {
        let (rec, c) = r?;
        log::info!("knots {:?}: BIC {:.4} -> {:.4}", rec.counts, rec.initial_bic, rec.bic);
        searches.push(rec);
        curves.push(c);
    }
    let best = (0..searches.len())
        .fold(0, |b, i| if searches[i].bic < searches[b].bic { i } else { b });
    let overrides = kept
        .iter()
        .zip(curves.swap_remove(best))
        .map(|(&param, curve)| SplineOverride { param, curve })
        .collect();
    let sm = SmoothedModel::new(model.clone(), overrides, params.df_rule)?;
    let full = sm.bic(ds)?;
    Ok(SmoothingResult {
        model: sm,
        params: obj.targets.iter().map(|t| t.param).collect(),
        searches,
        best,
        bic: full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::{train, RoundTree, TrainParams};
    use crate::spec::parse_spec;
    use crate::tree::Tree;
    use rand::Rng;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let (x, f) = nelder_mead(rosenbrock, &[-1.2, 1.0], 0.5, 5000);
        assert!(f < 1e-8, "{f} at {x:?}");
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_never_worse_than_start() {
        let f = |x: &[f64]| (x[0] - 3.0).abs().floor();
        let (_, v) = nelder_mead(f, &[0.0], 0.5, 50);
        assert!(v <= 3.0);
    }

    #[test]
    fn softmax_gaps_pin_endpoints_and_order_knots() {
        let k = knots_from_z(&[0.0, 5.0, -40.0, 1.0], (2.0, 10.0));
        assert_eq!((k[0], k[4]), (2.0, 10.0));
        let gmin = MIN_GAP * 8.0;
        assert!(k.windows(2).all(|w| w[1] - w[0] >= gmin * 0.999), "{k:?}");
        let back = knots_from_z(&z_from_knots(&[0.0, 1.0, 3.0, 4.0]), (0.0, 4.0));
        for (a, b) in back.iter().zip([0.0, 1.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_knots_of_uniform_grid() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantile_knots(&v, 4), vec![0.0, 25.0, 50.0, 75.0, 100.0]);
        let tied = vec![1.0; 50];
        assert_eq!(quantile_knots(&tied, 3), vec![1.0]);
    }

    fn logistic_model(n: usize) -> (RUMBoostModel, ChoiceDataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let choice = x
            .iter()
            .map(|&xi| {
                let v = -3.0 / (1.0 + (-(xi - 5.0)).exp());
                usize::from(rng.gen::<f64>() < 1.0 / (1.0 + (v - 0.0f64).exp()))
            })
            .collect();
        let ds = ChoiceDataset::new(vec!["x".into()], vec![x], choice, None, vec!["a".into(), "b".into()]).unwrap();
        let spec = parse_spec(
            r#"
alternatives = ["a", "b"]
[[parameter]]
alt = "a"
variables = ["x"]
monotone = ["decreasing"]
"#,
        )
        .unwrap();
        let p = TrainParams {
            num_rounds: 150,
            early_stopping_rounds: None,
            ..TrainParams::default()
        };
        (train(&ds, &spec, &p, None).unwrap(), ds)
    }

    #[test]
    fn no_overrides_reproduce_base_exactly() {
        let (m, ds) = logistic_model(400);
        let sm = SmoothedModel::unsmoothed(m.clone());
        assert_eq!(sm.predict_probs(&ds).unwrap(), m.predict_probs(&ds).unwrap());
    }

    #[test]
    fn optimised_bic_not_worse_than_quantile_start() {
        let (m, ds) = logistic_model(800);
        let params = SmoothParams {
            n_searches: 3,
            max_evals: 60,
            ..SmoothParams::default()
        };
        let res = optimize_knot_counts(&m, &ds, &[0], &params).unwrap();
        for s in &res.searches {
            assert!(s.bic <= s.initial_bic, "{s:?}");
            assert!(s.counts.iter().all(|&c| (3..=8).contains(&c)));
        }
        let c = res.model.curve(0).unwrap();
        let (a, b) = m.feature_ranges[0];
        assert_eq!(c.domain(), (a, b));
        assert!(c.knots.windows(2).all(|w| w[1] - w[0] >= MIN_GAP * (b - a) * 0.999));
        for i in 0..=10_000 {
            let x = a + (b - a) * i as f64 / 10_000.0;
            assert!(c.derivative(x) <= 1e-12);
        }
    }

    #[test]
    fn fixed_seed_gives_identical_results() {
        let (m, ds) = logistic_model(300);
        let params = SmoothParams {
            n_searches: 2,
            max_evals: 30,
            seed: 5,
            ..SmoothParams::default()
        };
        let a = optimize_knot_counts(&m, &ds, &[0], &params).unwrap();
        let b = optimize_knot_counts(&m, &ds, &[0], &params).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.searches, b.searches);
    }

    #[test]
    fn single_step_with_two_intervals_keeps_both_levels() {
        let ds = ChoiceDataset::new(
            vec!["x".into()],
            vec![(0..50).map(f64::from).collect()],
            (0..50).map(|i| i % 2).collect(),
            None,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let spec = parse_spec("alternatives = [\"a\", \"b\"]\n[[parameter]]\nalt = \"a\"\nvariables = [\"x\"]\n").unwrap();
        let mut m = RUMBoostModel::untrained(&spec, &ds).unwrap();
        m.ensembles[0].trees.push(RoundTree {
            round: 0,
            tree: Tree::stump(0, 20.5, 0.3, -0.2),
        });
        let sm = SmoothedModel::unsmoothed(m);
        let (c, init, fin) = fit_fixed_count(&sm, &ds, 0, 2, &SmoothParams::default()).unwrap();
        assert_eq!(c.values[0], 0.3);
        assert_eq!(c.values[c.values.len() - 1], -0.2);
        assert!(fin <= init);
    }

    #[test]
    fn constant_step_function_gives_constant_spline() {
        let ds = ChoiceDataset::new(
            vec!["x".into()],
            vec![(0..40).map(f64::from).collect()],
            (0..40).map(|i| i % 2).collect(),
            None,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let spec = parse_spec("alternatives = [\"a\", \"b\"]\n[[parameter]]\nalt = \"a\"\nvariables = [\"x\"]\n").unwrap();
        let mut m = RUMBoostModel::untrained(&spec, &ds).unwrap();
        // both leaves equal: the curve is flat
        m.ensembles[0].trees.push(RoundTree {
            round: 0,
            tree: Tree::stump(0, 10.5, 0.4, 0.4),
        });
        let sm = SmoothedModel::unsmoothed(m.clone());
        let (c, _, fin) = fit_fixed_count(&sm, &ds, 0, 3, &SmoothParams::default()).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.4));
        assert!(c.derivs.iter().all(|&d| d == 0.0));
        let smoothed = SmoothedModel::new(m, vec![SplineOverride { param: 0, curve: c.clone() }], DfRule::Values).unwrap();
        let base_ce = smoothed.base.cross_entropy(&ds).unwrap();
        let expected = bic(base_ce, c.knots.len(), 40);
        assert!((fin - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_target_list_is_an_error() {
        let (m, ds) = logistic_model(100);
        assert!(optimize_knot_counts(&m, &ds, &[], &SmoothParams::default()).is_err());
    }
}
