//! Behavioural outputs: marginal utilities, value-of-time surfaces and
//! distributions, interaction grids, and delimited tables for all of them.

use std::io::Write;

use crate::boost::{CurveBand, EnsembleKind, RUMBoostModel, StepFunction};
use crate::data::ChoiceDataset;
use crate::error::{Error, Result};
use crate::pcuf::SmoothedModel;
use crate::spline::SplineCurve;

/// A utility curve in either form.
#[derive(Debug, Clone, Copy)]
pub enum Curve<'a> {
    Step(&'a StepFunction),
    Spline(&'a SplineCurve),
}

/// Derivative of a smoothed curve at `x` (0 outside its domain).
pub fn marginal_utility(curve: Curve, x: f64) -> Result<f64> {
    match curve {
        Curve::Spline(c) => Ok(c.derivative(x)),
        Curve::Step(s) => Err(Error::InvalidArgument(format!(
            "'{}' is piecewise constant and has no usable derivative; smooth it first",
            s.variable
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotOptions {
    /// Values are clamped to `[caps.0, caps.1]`.
    pub caps: (f64, f64),
    /// Derivatives with smaller magnitude count as zero.
    pub threshold: f64,
    /// Multiplies the ratio, e.g. 60 when time is in minutes and VoT is per hour.
    pub time_scale: f64,
    /// Report `log10` of the capped value.
    pub log10: bool,
}

impl Default for VotOptions {
    fn default() -> Self {
        VotOptions {
            caps: (0.1, 100.0),
            threshold: 1e-9,
            time_scale: 1.0,
            log10: false,
        }
    }
}

impl VotOptions {
    fn validate(&self) -> Result<()> {
        if !(self.caps.0 > 0.0 && self.caps.0 <= self.caps.1) || !(self.threshold >= 0.0) || !(self.time_scale > 0.0) {
            return Err(Error::InvalidArgument("invalid value-of-time options".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotSurface {
    pub time_grid: Vec<f64>,
    pub cost_grid: Vec<f64>,
    /// `vot[i][k]` at `(time_grid[i], cost_grid[k])`; `NaN` where masked.
    pub vot: Vec<Vec<f64>>,
    pub masked: Vec<Vec<bool>>,
    pub caps: (f64, f64),
    pub log10: bool,
}

/// True when `x` lies in the first or last segment of `c` and the slope there
/// is below `threshold`.
fn in_flat_end(c: &SplineCurve, x: f64, d: f64, threshold: f64) -> bool {
    let k = c.knots.len();
    let first = x <= c.knots[1];
    let last = x >= c.knots[k - 2];
    (first || last) && d.abs() < threshold
}

/// Value of time at `(t, c)`, or `None` when the cell is masked.
pub fn vot_at(time: &SplineCurve, cost: &SplineCurve, t: f64, c: f64, opts: &VotOptions) -> Option<f64> {
    let (ta, tb) = time.domain();
    let (ca, cb) = cost.domain();
    if !(ta <= t && t <= tb && ca <= c && c <= cb) {
        return None;
    }
    let dt = time.derivative(t);
    let dc = cost.derivative(c);
    if dc.abs() < opts.threshold || in_flat_end(time, t, dt, opts.threshold) {
        return None;
    }
    let v = (opts.time_scale * dt / dc).clamp(opts.caps.0, opts.caps.1);
    Some(if opts.log10 { v.log10() } else { v })
}

fn smoothed_pair<'a>(sm: &'a SmoothedModel, time_param: usize, cost_param: usize) -> Result<(&'a SplineCurve, &'a SplineCurve)> {
    let get = |p: usize| {
        sm.curve(p).ok_or_else(|| {
            let name = sm
                .base
                .spec
                .parameters
                .get(p)
                .map_or_else(|| format!("parameter {p}"), |s| s.variables.join(", "));
            Error::InvalidArgument(format!("'{name}' is not smoothed; run the smoothing step on it first"))
        })
    };
    let (t, c) = (get(time_param)?, get(cost_param)?);
    let spec = &sm.base.spec.parameters;
    if spec[time_param].alt != spec[cost_param].alt {
        return Err(Error::InvalidArgument("time and cost parameters belong to different alternatives".into()));
    }
    Ok((t, c))
}

/// Value of time `V'_time / V'_cost` on a grid.
pub fn vot_surface(
    sm: &SmoothedModel,
    time_param: usize,
    cost_param: usize,
    time_grid: &[f64],
    cost_grid: &[f64],
    opts: &VotOptions,
) -> Result<VotSurface> {
    opts.validate()?;
    let (time, cost) = smoothed_pair(sm, time_param, cost_param)?;
    Ok(surface_from_curves(time, cost, time_grid, cost_grid, opts))
}

/// [`vot_surface`] for two free-standing curves.
pub fn surface_from_curves(
    time: &SplineCurve,
    cost: &SplineCurve,
    time_grid: &[f64],
    cost_grid: &[f64],
    opts: &VotOptions,
) -> VotSurface {
    let mut vot = Vec::with_capacity(time_grid.len());
    let mut masked = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let row: Vec<Option<f64>> = cost_grid.iter().map(|&c| vot_at(time, cost, t, c, opts)).collect();
        masked.push(row.iter().map(Option::is_none).collect());
        vot.push(row.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    VotSurface {
        time_grid: time_grid.to_vec(),
        cost_grid: cost_grid.to_vec(),
        vot,
        masked,
        caps: opts.caps,
        log10: opts.log10,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lows: Vec<f64>,
    pub highs: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Lower edge of the fullest bin.
    pub fn mode(&self) -> Option<(f64, f64)> {
        let (i, _) = self.counts.iter().enumerate().fold(None, |b: Option<(usize, usize)>, (i, &c)| match b {
            Some((_, bc)) if bc >= c => b,
            _ => Some((i, c)),
        })?;
        Some((self.lows[i], self.highs[i]))
    }
}

/// Equal-width histogram over `[min, max]`; the last bin includes its upper
/// edge. Identical values give one degenerate bin.
pub fn histogram(values: &[f64], n_bins: usize) -> Histogram {
    if values.is_empty() || n_bins == 0 {
        return Histogram {
            lows: vec![],
            highs: vec![],
            counts: vec![],
        };
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Histogram {
            lows: vec![lo],
            highs: vec![hi],
            counts: vec![values.len()],
        };
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    Histogram {
        lows: (0..n_bins).map(|b| lo + b as f64 * width).collect(),
        highs: (0..n_bins).map(|b| if b + 1 == n_bins { hi } else { lo + (b + 1) as f64 * width }).collect(),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVot {
    /// Rows kept, ascending.
    pub rows: Vec<usize>,
    pub vot: Vec<f64>,
    pub histogram: Histogram,
}

/// Value of time at every row's own time and cost. Rows with zero travel
/// time or a masked cell are dropped, then the highest 0.1% of values.
pub fn population_vot(
    sm: &SmoothedModel,
    ds: &ChoiceDataset,
    time_param: usize,
    cost_param: usize,
    opts: &VotOptions,
    n_bins: usize,
) -> Result<PopulationVot> {
    opts.validate()?;
    let (time, cost) = smoothed_pair(sm, time_param, cost_param)?;
    let t = ds.require_column(&time.variable)?;
    let c = ds.require_column(&cost.variable)?;
    let mut kept: Vec<(usize, f64)> = (0..ds.n_rows())
        .filter(|&r| t[r] != 0.0)
        .filter_map(|r| vot_at(time, cost, t[r], c[r], opts).map(|v| (r, v)))
        .collect();
    let drop = kept.len() / 1000;
    if drop > 0 {
        let mut order: Vec<usize> = (0..kept.len()).collect();
        order.sort_by(|&a, &b| kept[b].1.total_cmp(&kept[a].1).then(a.cmp(&b)));
        let mut gone = vec![false; kept.len()];
        order[..drop].iter().for_each(|&i| gone[i] = true);
        kept = kept.into_iter().zip(gone).filter(|(_, g)| !g).map(|(k, _)| k).collect();
    }
    let vot: Vec<f64> = kept.iter().map(|k| k.1).collect();
    Ok(PopulationVot {
        rows: kept.iter().map(|k| k.0).collect(),
        histogram: histogram(&vot, n_bins),
        vot,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourTable {
    pub variables: (String, String),
    pub grid_a: Vec<f64>,
    pub grid_b: Vec<f64>,
    /// `values[i][k]` at `(grid_a[i], grid_b[k])`.
    pub values: Vec<Vec<f64>>,
}

/// Evaluates a two-variable parameter's ensemble on a grid.
pub fn contour_table(model: &RUMBoostModel, param: usize, grid_a: &[f64], grid_b: &[f64]) -> Result<ContourTable> {
    let e = model
        .ensemble(EnsembleKind::Parameter(param))
        .ok_or_else(|| Error::InvalidArgument(format!("no parameter {param}")))?;
    if e.variables.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "parameter ({}) has one variable; export it as a curve instead",
            e.variables.join(", ")
        )));
    }
    let (fa, fb) = (e.features[0], e.features[1]);
    let values = grid_a
        .iter()
        .map(|&a| {
            grid_b
                .iter()
                .map(|&b| e.predict_by(|f| if f == fa { a } else if f == fb { b } else { 0.0 }))
                .collect()
        })
        .collect();
    Ok(ContourTable {
        variables: (e.variables[0].clone(), e.variables[1].clone()),
        grid_a: grid_a.to_vec(),
        grid_b: grid_b.to_vec(),
        values,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Comma-separated table with `#`-prefixed comment lines on top.
pub fn write_table<W: Write>(mut out: W, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<table>", e);
    for c in comments {
        writeln!(out, "# {c}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io {
        path: "<table>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Rows `x_low, x_high, value` of a step function.
pub fn step_rows(s: &StepFunction) -> Vec<Vec<String>> {
    (0..s.values.len())
        .map(|k| {
            let lo = if k == 0 { s.domain.0.min(s.breakpoints.first().copied().unwrap_or(s.domain.0)) } else { s.breakpoints[k - 1] };
            let hi = s.breakpoints.get(k).copied().unwrap_or(s.domain.1.max(lo));
            vec![num(lo), num(hi), num(s.values[k])]
        })
        .collect()
}

/// Rows `x, value, derivative` of a spline sampled at `n` points.
pub fn spline_rows(c: &SplineCurve, n: usize) -> Vec<Vec<String>> {
    let (a, b) = c.domain();
    linspace(a, b, n)
        .into_iter()
        .map(|x| {
            let (v, d) = c.eval(x);
            vec![num(x), num(v), num(d)]
        })
        .collect()
}

/// Rows `t, c, vot, masked`.
pub fn surface_rows(s: &VotSurface) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, &t) in s.time_grid.iter().enumerate() {
        for (k, &c) in s.cost_grid.iter().enumerate() {
            let m = s.masked[i][k];
            rows.push(vec![
                num(t),
                num(c),
                if m { String::new() } else { num(s.vot[i][k]) },
                if m { "1".into() } else { "0".into() },
            ]);
        }
    }
    rows
}

/// Rows `bin_low, bin_high, count`.
pub fn histogram_rows(h: &Histogram) -> Vec<Vec<String>> {
    (0..h.counts.len())
        .map(|b| vec![num(h.lows[b]), num(h.highs[b]), h.counts[b].to_string()])
        .collect()
}

/// Rows `a, b, value`.
pub fn contour_rows(t: &ContourTable) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, &a) in t.grid_a.iter().enumerate() {
        for (k, &b) in t.grid_b.iter().enumerate() {
            rows.push(vec![num(a), num(b), num(t.values[i][k])]);
        }
    }
    rows
}

/// Rows `x_low, x_high, mean, min, max, std`.
pub fn band_rows(b: &CurveBand) -> Vec<Vec<String>> {
    (0..b.mean.len())
        .map(|k| {
            let lo = if k == 0 { f64::NEG_INFINITY } else { b.breakpoints[k - 1] };
            let hi = b.breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
            vec![num(lo), num(hi), num(b.mean[k]), num(b.min[k]), num(b.max[k]), num(b.std[k])]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::RoundTree;
    use crate::pcuf::{DfRule, SplineOverride};
    use crate::spec::parse_spec;
    use crate::tree::{Node, Tree};

    fn linear(var: &str, slope: f64, lo: f64, hi: f64) -> SplineCurve {
        let knots = linspace(lo, hi, 4);
        let values = knots.iter().map(|x| slope * x).collect();
        SplineCurve::new(var, knots, values).unwrap()
    }

    fn smoothed(time: SplineCurve, cost: SplineCurve, ds: &ChoiceDataset) -> SmoothedModel {
        let spec = parse_spec(
            r#"
alternatives = ["drive", "walk"]
[[parameter]]
alt = "drive"
variables = ["time"]
[[parameter]]
alt = "drive"
variables = ["cost"]
"#,
        )
        .unwrap();
        let base = RUMBoostModel::untrained(&spec, ds).unwrap();
        SmoothedModel::new(
            base,
            vec![SplineOverride { param: 0, curve: time }, SplineOverride { param: 1, curve: cost }],
            DfRule::Values,
        )
        .unwrap()
    }

    fn data(time: Vec<f64>, cost: Vec<f64>) -> ChoiceDataset {
        let n = time.len();
        ChoiceDataset::new(
            vec!["time".into(), "cost".into()],
            vec![time, cost],
            vec![0; n],
            None,
            vec!["drive".into(), "walk".into()],
        )
        .unwrap()
    }

    #[test]
    fn marginal_utility_of_constant_and_linear_curves() {
        let flat = SplineCurve::new("x", vec![0.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        assert_eq!(marginal_utility(Curve::Spline(&flat), 0.7).unwrap(), 0.0);
        let l = linear("x", -2.0, 0.0, 3.0);
        assert!((marginal_utility(Curve::Spline(&l), 1.1).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(marginal_utility(Curve::Spline(&l), 5.0).unwrap(), 0.0);
        let s = StepFunction::constant("x", 0.0, (0.0, 1.0));
        assert!(marginal_utility(Curve::Step(&s), 0.5).is_err());
    }

    #[test]
    fn linear_curves_give_constant_surface() {
        let (bt, bc) = (1.3, 0.11);
        let ds = data(vec![0.5, 1.0], vec![1.0, 2.0]);
        let sm = smoothed(linear("time", -bt, 0.0, 2.0), linear("cost", -bc, 0.0, 10.0), &ds);
        let s = vot_surface(&sm, 0, 1, &linspace(0.0, 2.0, 21), &linspace(0.0, 10.0, 31), &VotOptions::default()).unwrap();
        let mut unmasked = 0;
        for i in 0..21 {
            for k in 0..31 {
                if !s.masked[i][k] {
                    unmasked += 1;
                    assert!((s.vot[i][k] - bt / bc).abs() < 1e-12);
                }
            }
        }
        assert_eq!(unmasked, 21 * 31);
    }

    #[test]
    fn zero_cost_slope_masks_everything() {
        let ds = data(vec![0.5], vec![1.0]);
        let flat = SplineCurve::new("cost", vec![0.0, 5.0, 10.0], vec![2.0; 3]).unwrap();
        let sm = smoothed(linear("time", -1.0, 0.0, 2.0), flat, &ds);
        let s = vot_surface(&sm, 0, 1, &linspace(0.0, 2.0, 5), &linspace(0.0, 10.0, 5), &VotOptions::default()).unwrap();
        assert!(s.masked.iter().flatten().all(|&m| m));
    }

    #[test]
    fn surface_matches_analytic_ratio() {
        // time curve t -> -t^2 sampled densely is close to its own spline;
        // the oracle is the spline's own derivative ratio, checked against
        // closed-form cubic derivatives on a two-knot curve
        let time = SplineCurve::from_parts("time", vec![0.0, 2.0], vec![0.0, -4.0], vec![-1.0, -3.0]).unwrap();
        let cost = SplineCurve::from_parts("cost", vec![0.0, 4.0], vec![0.0, -2.0], vec![-0.25, -0.75]).unwrap();
        // Hermite cubic with these ends: p(t) = y0 + d0 t + c2 t^2 + c3 t^3
        let analytic = |y1: f64, d0: f64, d1: f64, h: f64, x: f64| {
            let c2 = (3.0 * y1 / h - 2.0 * d0 - d1) / h;
            let c3 = (d0 + d1 - 2.0 * y1 / h) / (h * h);
            d0 + 2.0 * c2 * x + 3.0 * c3 * x * x
        };
        let opts = VotOptions {
            caps: (1e-6, 1e6),
            ..VotOptions::default()
        };
        for &t in &[0.3, 0.9, 1.5] {
            for &c in &[0.5, 2.0, 3.5] {
                let expect = analytic(-4.0, -1.0, -3.0, 2.0, t) / analytic(-2.0, -0.25, -0.75, 4.0, c);
                let got = vot_at(&time, &cost, t, c, &opts).unwrap();
                assert!((got - expect).abs() < 1e-6 * expect.abs(), "{got} vs {expect}");
            }
        }
    }

    #[test]
    fn caps_and_scale_invariance() {
        let time = SplineCurve::new("time", vec![0.0, 1.0, 2.0, 3.0], vec![0.0, -1.0, -3.0, -3.5]).unwrap();
        let cost = SplineCurve::new("cost", vec![0.0, 2.0, 5.0], vec![0.0, -0.1, -2.0]).unwrap();
        let g = (linspace(0.0, 3.0, 13), linspace(0.0, 5.0, 17));
        let o = VotOptions::default();
        let a = surface_from_curves(&time, &cost, &g.0, &g.1, &o);
        let b = surface_from_curves(&time.scaled(3.7), &cost.scaled(3.7), &g.0, &g.1, &o);
        assert_eq!(a.masked, b.masked);
        for i in 0..13 {
            for k in 0..17 {
                if !a.masked[i][k] {
                    assert!((a.vot[i][k] - b.vot[i][k]).abs() < 1e-10);
                    assert!((0.1..=100.0).contains(&a.vot[i][k]));
                    assert!(cost.derivative(g.1[k]).abs() >= 1e-9);
                }
            }
        }
    }

    #[test]
    fn population_matches_surface_and_drops_zero_time() {
        let n = 3000;
        let time: Vec<f64> = (0..n).map(|i| (i % 20) as f64 / 10.0).collect();
        let cost: Vec<f64> = (0..n).map(|i| (i % 37) as f64 / 4.0).collect();
        let ds = data(time.clone(), cost.clone());
        let tc = SplineCurve::new("time", vec![0.0, 0.5, 1.9], vec![0.0, -1.0, -1.5]).unwrap();
        let cc = SplineCurve::new("cost", vec![0.0, 3.0, 9.0], vec![0.0, -0.3, -2.0]).unwrap();
        let sm = smoothed(tc.clone(), cc.clone(), &ds);
        let o = VotOptions::default();
        let p = population_vot(&sm, &ds, 0, 1, &o, 20).unwrap();
        assert!(p.rows.iter().all(|&r| time[r] != 0.0));
        for (&r, &v) in p.rows.iter().zip(&p.vot) {
            let s = surface_from_curves(&tc, &cc, &[time[r]], &[cost[r]], &o);
            assert!(!s.masked[0][0]);
            assert!((s.vot[0][0] - v).abs() < 1e-12);
        }
        assert_eq!(p.histogram.counts.iter().sum::<usize>(), p.vot.len());
    }

    #[test]
    fn identical_rows_give_a_single_spike() {
        let ds = data(vec![1.0; 50], vec![2.0; 50]);
        let sm = smoothed(linear("time", -1.0, 0.0, 2.0), linear("cost", -0.5, 0.0, 4.0), &ds);
        let p = population_vot(&sm, &ds, 0, 1, &VotOptions::default(), 10).unwrap();
        assert_eq!(p.histogram.counts, vec![50]);
        assert!((p.vot[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsmoothed_parameters_are_refused() {
        let ds = data(vec![1.0], vec![1.0]);
        let mut sm = smoothed(linear("time", -1.0, 0.0, 2.0), linear("cost", -0.5, 0.0, 4.0), &ds);
        sm.overrides.pop();
        assert!(vot_surface(&sm, 0, 1, &[1.0], &[1.0], &VotOptions::default()).is_err());
    }

    #[test]
    fn contour_of_depth_two_tree() {
        let ds = data(vec![0.0, 5.0], vec![0.0, 5.0]);
        let spec = parse_spec(
            "alternatives = [\"drive\", \"walk\"]\n[[parameter]]\nalt = \"drive\"\nvariables = [\"time\", \"cost\"]\n",
        )
        .unwrap();
        let mut m = RUMBoostModel::untrained(&spec, &ds).unwrap();
        let empty = contour_table(&m, 0, &[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!(empty.values.iter().flatten().all(|&v| v == 0.0));
        let tree = Tree::from_nodes(vec![
            Node::Split { feature: 0, bin: 0, threshold: 1.0, gain: 1.0, left: 1, right: 4 },
            Node::Split { feature: 1, bin: 0, threshold: 2.0, gain: 1.0, left: 2, right: 3 },
            Node::Leaf { value: 1.0 },
            Node::Leaf { value: 2.0 },
            Node::Leaf { value: -1.0 },
        ])
        .unwrap();
        m.ensembles[0].trees.push(RoundTree { round: 0, tree: tree.clone() });
        let grid = linspace(-1.0, 4.0, 11);
        let t = contour_table(&m, 0, &grid, &grid).unwrap();
        for (i, &a) in grid.iter().enumerate() {
            for (k, &b) in grid.iter().enumerate() {
                assert_eq!(t.values[i][k], tree.predict(&[a, b]));
            }
        }
        let spec1 = parse_spec("alternatives = [\"drive\", \"walk\"]\n[[parameter]]\nalt = \"drive\"\nvariables = [\"time\"]\n").unwrap();
        let m1 = RUMBoostModel::untrained(&spec1, &ds).unwrap();
        assert!(contour_table(&m1, 0, &grid, &grid).is_err());
    }

    #[test]
    fn histogram_edges_and_counts() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0, 4.0], 4);
        assert_eq!(h.counts, vec![1, 1, 1, 2]);
        assert_eq!(h.lows, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(h.highs[3], 4.0);
    }

    #[test]
    fn tables_carry_comments_and_header() {
        let mut buf = Vec::new();
        let h = histogram(&[1.0, 2.0], 2);
        write_table(&mut buf, &["seed 3".into()], &["bin_low", "bin_high", "count"], &histogram_rows(&h)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "# seed 3\nbin_low,bin_high,count\n1,1.5,1\n1.5,2,1\n");
    }
}
