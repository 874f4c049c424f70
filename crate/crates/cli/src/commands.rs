use std::fs;
use std::path::Path;

use rumboost::boost::TrainOutput;
use rumboost::data::{grouped_kfold, load_dataset};
use rumboost::indicators::{
    band_rows, contour_rows, contour_table, histogram, histogram_rows, linspace, population_vot, spline_rows,
    step_rows, surface_rows, vot_surface, VotOptions,
};
use rumboost::model_io::{load_smoothed, save_smoothed};
use rumboost::pcuf::DfRule;
use rumboost::{
    bootstrap_utilities, cross_validate, individual_constants, optimize_knot_counts, parse_spec, train_logged,
    ChoiceDataset, ModelMeta, ModelSpec, NestSpec, RUMBoostModel, Schema, SmoothParams, SmoothedModel, TrainParams,
};

use crate::artifacts::{read_config, slug, ConfigHash, Failure, Outputs};
use crate::{BootstrapArgs, DataArgs, EvaluateArgs, IndicatorArgs, ParamArgs, SmoothArgs, TrainArgs};

fn load_data(
    data: &Path,
    schema: Option<&Path>,
    group: Option<&str>,
    alt_names: &[String],
) -> Result<ChoiceDataset, Failure> {
    let mut schema = match schema {
        Some(p) => Schema::parse(&read_config(p)?)?,
        None => {
            let text = fs::read_to_string(data).map_err(|e| Failure::data(format!("cannot read {}: {e}", data.display())))?;
            let header = text.lines().next().unwrap_or_default();
            Schema::for_serialized(alt_names, header.split(',').any(|h| h.trim() == "group"))
        }
    };
    if let Some(g) = group {
        schema.group = Some(g.to_string());
    }
    if schema.alternatives != alt_names {
        return Err(Failure::config(format!(
            "schema alternatives {:?} differ from the model's {:?}",
            schema.alternatives, alt_names
        )));
    }
    Ok(load_dataset(data, &schema)?)
}

fn hash_data(h: &mut ConfigHash, d: &DataArgs) -> Result<(), Failure> {
    h.file("data", &d.data)?;
    if let Some(s) = &d.schema {
        h.text("schema", &read_config(s)?);
    }
    h.text("group", d.group.as_deref().unwrap_or(""));
    Ok(())
}

fn train_params(a: &ParamArgs) -> Result<TrainParams, Failure> {
    let mut p = match &a.params {
        Some(path) => TrainParams::from_toml(&read_config(path)?)?,
        None => TrainParams::default(),
    };
    p.seed = a.seed;
    if let Some(r) = a.rounds {
        p.num_rounds = r;
    }
    if let Some(lr) = a.lr {
        p.learning_rate = lr;
    }
    if let Some(es) = a.early_stop {
        p.early_stopping_rounds = (es > 0).then_some(es);
    }
    p.validate()?;
    Ok(p)
}

fn parse_range(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::config(format!("{what} '{s}' is not a list of numbers separated by ':'")))?;
    Ok(parts)
}

fn mu_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let [lo, hi, step] = parse_range(s, "--mu-grid")?[..] else {
        return Err(Failure::config("--mu-grid expects LO:HI:STEP"));
    };
    if !(lo >= 1.0 && hi >= lo && step > 0.0) {
        return Err(Failure::config("--mu-grid needs 1 <= LO <= HI and STEP > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn apply_nest(spec: &mut ModelSpec, nested: Option<&str>, mu: f64) -> Result<(), Failure> {
    match nested {
        Some(groups) => spec.nest = Some(NestSpec::from_groups_str(groups, mu, &spec.alt_names)?),
        None => match &spec.nest {
            Some(n) => spec.nest = Some(n.with_mu(mu)?),
            None => return Err(Failure::config("a nest scale needs --nested or a [nest] section in the spec")),
        },
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn write_model_tables(out: &Outputs, model: &RUMBoostModel) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = model
        .spec
        .alt_names
        .iter()
        .zip(&model.ascs)
        .map(|(a, c)| vec![a.clone(), fmt(*c)])
        .collect();
    out.table("ascs.csv", "alternative-specific constants", &["alternative", "asc"], &rows)?;
    Ok(())
}

fn run_training(
    ds: &ChoiceDataset,
    spec: &ModelSpec,
    params: &TrainParams,
    valid: Option<&ChoiceDataset>,
    cv: Option<usize>,
    out: Option<(&Outputs, &str)>,
) -> Result<(TrainOutput, f64), Failure> {
    let Some(k) = cv else {
        let o = train_logged(ds, spec, params, valid)?;
        let score = match (o.best_valid_ce, valid) {
            (Some(v), _) => v,
            (None, Some(v)) => o.model.cross_entropy(v)?,
            (None, None) => o.model.cross_entropy(ds)?,
        };
        return Ok((o, score));
    };
    if ds.groups().is_none() {
        log::warn!("no group column: folds are drawn over single rows");
    }
    let folds = grouped_kfold(ds, k, params.seed)?;
    let res = cross_validate(ds, spec, params, &folds)?;
    if let Some((o, name)) = out {
        let mut rows: Vec<Vec<String>> = (0..k)
            .map(|f| vec![f.to_string(), fmt(res.fold_ce[f]), res.fold_best_round[f].to_string()])
            .collect();
        rows.push(vec!["mean".into(), fmt(res.mean_ce), res.mean_best_round.to_string()]);
        o.table(name, &format!("{k}-fold grouped cross-validation"), &["fold", "cross_entropy", "best_round"], &rows)?;
    }
    log::info!("cross-validation: mean CE {:.6}, mean best round {}", res.mean_ce, res.mean_best_round);
    let final_params = TrainParams {
        num_rounds: res.mean_best_round.max(1),
        early_stopping_rounds: None,
        ..params.clone()
    };
    let o = train_logged(ds, spec, &final_params, None)?;
    Ok((o, res.mean_ce))
}

pub fn train(a: TrainArgs) -> Result<(), Failure> {
    let mut params = train_params(&a.params)?;
    let mut spec = parse_spec(&read_config(&a.spec)?)?;
    if a.mu.is_some() && a.mu_grid.is_some() {
        return Err(Failure::config("--mu and --mu-grid are exclusive"));
    }
    if a.nested.is_some() || a.mu.is_some() {
        apply_nest(&mut spec, a.nested.as_deref(), a.mu.unwrap_or(1.0))?;
    }
    if matches!(a.cv, Some(k) if k < 2) {
        return Err(Failure::config("--cv needs at least 2 folds"));
    }
    if a.cv.is_some() && a.valid.is_some() {
        return Err(Failure::config("--cv and --valid are exclusive"));
    }
    if a.cv.is_some() && params.early_stopping_rounds.is_none() {
        log::warn!("cross-validation without early stopping: every fold runs all rounds");
        params.early_stopping_rounds = None;
    }

    let mut h = ConfigHash::new("train");
    h.text("spec", &spec.to_toml());
    h.text("params", &params.to_toml());
    hash_data(&mut h, &a.data)?;
    if let Some(v) = &a.valid {
        h.file("valid", v)?;
    }
    h.text("cv", &format!("{:?}", a.cv));
    h.text("mu-grid", a.mu_grid.as_deref().unwrap_or(""));
    let out = Outputs::create(&a.out, params.seed, h.finish())?;

    let ds = load_data(&a.data.data, a.data.schema.as_deref(), a.data.group.as_deref(), &spec.alt_names)?;
    let valid = match &a.valid {
        Some(v) => Some(load_data(v, a.data.schema.as_deref(), a.data.group.as_deref(), &spec.alt_names)?),
        None => None,
    };
    log::info!("{} rows, {} variables, {} alternatives", ds.n_rows(), ds.n_columns(), ds.n_alts());

    if let Some(grid) = &a.mu_grid {
        let grid = mu_grid(grid)?;
        if a.cv.is_none() && valid.is_none() && params.early_stopping_rounds.is_none() {
            return Err(Failure::config("--mu-grid needs --cv, --valid or early stopping to score each value"));
        }
        let mut rows = Vec::new();
        let mut best: Option<(f64, f64)> = None;
        for &mu in &grid {
            let mut s = spec.clone();
            apply_nest(&mut s, a.nested.as_deref(), mu)?;
            let (_, score) = run_training(&ds, &s, &params, valid.as_ref(), a.cv, None)?;
            log::info!("mu {mu}: validation CE {score:.6}");
            rows.push(vec![fmt(mu), fmt(score)]);
            if best.is_none_or(|b| score < b.1) {
                best = Some((mu, score));
            }
        }
        out.table("mu_search.csv", "nest scale search", &["mu", "validation_ce"], &rows)?;
        let (mu, _) = best.expect("non-empty grid");
        log::info!("selected mu {mu}");
        apply_nest(&mut spec, a.nested.as_deref(), mu)?;
    }

    let (o, _) = run_training(&ds, &spec, &params, valid.as_ref(), a.cv, Some((&out, "cv.csv")))?;
    let log_rows: Vec<Vec<String>> = o
        .log
        .iter()
        .map(|r| {
            vec![
                r.round.to_string(),
                fmt(r.train_ce),
                r.valid_ce.map(fmt).unwrap_or_default(),
                r.trees_added.to_string(),
            ]
        })
        .collect();
    out.table(
        "train_log.csv",
        "per-round cross-entropy",
        &["round", "train_ce", "valid_ce", "trees_added"],
        &log_rows,
    )?;
    write_model_tables(&out, &o.model)?;
    let meta = ModelMeta {
        config_hash: Some(out.hash.clone()),
    };
    let model_path = out.path("model.json")?;
    save_smoothed(&SmoothedModel::unsmoothed(o.model.clone()), &model_path, &meta)?;
    println!("model       {}", model_path.display());
    println!("rounds      {}", o.best_round);
    println!("trees       {}", o.model.n_trees());
    println!("train CE    {:.6}", o.model.cross_entropy(&ds)?);
    if let Some(v) = o.best_valid_ce {
        println!("valid CE    {v:.6}");
    }
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let (sm, _) = load_smoothed(&a.model)?;
    let ds = load_data(&a.data.data, a.data.schema.as_deref(), a.data.group.as_deref(), &sm.base.spec.alt_names)?;
    let ce = sm.cross_entropy(&ds)?;
    println!("rows           {}", ds.n_rows());
    println!("cross_entropy  {ce}");
    Ok(())
}

fn parse_targets(model: &RUMBoostModel, s: &str) -> Result<Vec<usize>, Failure> {
    if s.trim() == "all" {
        return Ok((0..model.spec.parameters.len())
            .filter(|&p| model.spec.parameters[p].variables.len() == 1)
            .collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (alt, var) = t
                .trim()
                .split_once(':')
                .ok_or_else(|| Failure::config(format!("smoothing target '{t}' is not ALT:VARIABLE")))?;
            Ok(model.curve_parameter(alt, var)?)
        })
        .collect()
}

pub fn smooth(a: SmoothArgs) -> Result<(), Failure> {
    let (sm, _) = load_smoothed(&a.model)?;
    let model = sm.base;
    let bounds = parse_range(&a.knot_bounds, "--knot-bounds")?;
    let [lo, hi] = bounds[..] else {
        return Err(Failure::config("--knot-bounds expects LO:HI"));
    };
    if lo.fract() != 0.0 || hi.fract() != 0.0 || lo < 0.0 {
        return Err(Failure::config("--knot-bounds must be whole numbers"));
    }
    let params = SmoothParams {
        knot_bounds: (lo as usize, hi as usize),
        n_searches: a.searches,
        seed: a.seed,
        df_rule: if a.df_positions { DfRule::ValuesAndPositions } else { DfRule::Values },
        ..SmoothParams::default()
    };
    let targets = match &a.smooth_targets {
        Some(s) => parse_targets(&model, s)?,
        None => Vec::new(),
    };

    let mut h = ConfigHash::new("smooth");
    h.file("model", &a.model)?;
    hash_data(&mut h, &a.data)?;
    h.text("targets", &format!("{targets:?}"));
    h.text("smooth", &format!("{params:?}"));
    let out = Outputs::create(&a.out, a.seed, h.finish())?;
    let meta = ModelMeta {
        config_hash: Some(out.hash.clone()),
    };
    let model_path = out.path("model.json")?;

    if targets.is_empty() {
        log::warn!("no smoothing targets given; writing the model unchanged");
        save_smoothed(&SmoothedModel::unsmoothed(model), &model_path, &meta)?;
        println!("model       {}", model_path.display());
        return Ok(());
    }
    let ds = load_data(&a.data.data, a.data.schema.as_deref(), a.data.group.as_deref(), &model.spec.alt_names)?;
    let res = optimize_knot_counts(&model, &ds, &targets, &params)?;

    let knot_rows: Vec<Vec<String>> = res
        .model
        .overrides
        .iter()
        .map(|o| {
            let p = &model.spec.parameters[o.param];
            let join = |v: &[f64]| v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(" ");
            vec![
                model.spec.alt_names[p.alt].clone(),
                o.curve.variable.clone(),
                o.curve.knots.len().to_string(),
                join(&o.curve.knots),
                join(&o.curve.values),
            ]
        })
        .collect();
    out.table(
        "knots.csv",
        "selected knots per smoothed curve",
        &["alternative", "variable", "n_knots", "positions", "values"],
        &knot_rows,
    )?;
    let search_rows: Vec<Vec<String>> = res
        .searches
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                s.counts.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                fmt(s.initial_bic),
                fmt(s.bic),
                u8::from(i == res.best).to_string(),
            ]
        })
        .collect();
    out.table(
        "searches.csv",
        "knot-count searches (counts in target order)",
        &["search", "counts", "initial_bic", "bic", "selected"],
        &search_rows,
    )?;
    save_smoothed(&res.model, &model_path, &meta)?;
    println!("model       {}", model_path.display());
    println!("curves      {}", res.model.overrides.len());
    println!("BIC         {:.4}", res.bic);
    println!("train CE    {:.6}", res.model.cross_entropy(&ds)?);
    Ok(())
}

pub fn indicators(a: IndicatorArgs) -> Result<(), Failure> {
    let (sm, meta) = load_smoothed(&a.model)?;
    let model = &sm.base;
    if a.grid < 2 || a.bins == 0 {
        return Err(Failure::config("--grid must be at least 2 and --bins positive"));
    }
    let opts = VotOptions {
        time_scale: a.time_scale,
        ..VotOptions::default()
    };
    let mut h = ConfigHash::new("indicators");
    h.file("model", &a.model)?;
    if let Some(d) = &a.data {
        h.file("data", d)?;
    }
    h.text("vot", &a.vot.join(","));
    h.text("options", &format!("{} {} {}", a.grid, a.time_scale, a.bins));
    let out = Outputs::create(&a.out, model.seed, h.finish())?;
    if let Some(parent) = &meta.config_hash {
        log::info!("model config {parent}");
    }
    let ds = match &a.data {
        Some(d) => Some(load_data(d, a.schema.as_deref(), None, &model.spec.alt_names)?),
        None => None,
    };

    write_model_tables(&out, model)?;
    let mut written = 0;
    for (p, spec) in model.spec.parameters.iter().enumerate() {
        let alt = slug(&model.spec.alt_names[spec.alt]);
        if spec.variables.len() == 1 {
            let step = model.utility_curve(p)?;
            out.table(
                &format!("curves/{alt}__{}.csv", slug(&spec.variables[0])),
                &format!("step utility of {} for {}", spec.variables[0], model.spec.alt_names[spec.alt]),
                &["x_low", "x_high", "utility"],
                &step_rows(&step),
            )?;
            if let Some(c) = sm.curve(p) {
                out.table(
                    &format!("splines/{alt}__{}.csv", slug(&spec.variables[0])),
                    &format!("smoothed utility of {} for {}", spec.variables[0], model.spec.alt_names[spec.alt]),
                    &["x", "utility", "derivative"],
                    &spline_rows(c, 4 * a.grid),
                )?;
            }
        } else {
            let e = model.ensemble(rumboost::EnsembleKind::Parameter(p)).expect("parameter ensemble");
            let (ra, rb) = (model.feature_ranges[e.features[0]], model.feature_ranges[e.features[1]]);
            let t = contour_table(model, p, &linspace(ra.0, ra.1, a.grid), &linspace(rb.0, rb.1, a.grid))?;
            out.table(
                &format!("contours/{alt}__{}__{}.csv", slug(&spec.variables[0]), slug(&spec.variables[1])),
                &format!("joint utility of ({}) for {}", spec.variables.join(", "), model.spec.alt_names[spec.alt]),
                &["a", "b", "utility"],
                &contour_rows(&t),
            )?;
        }
        written += 1;
    }

    for v in &a.vot {
        let parts: Vec<&str> = v.split(':').collect();
        let [alt, time, cost] = parts[..] else {
            return Err(Failure::config(format!("--vot '{v}' is not ALT:TIME:COST")));
        };
        let tp = model.curve_parameter(alt, time)?;
        let cp = model.curve_parameter(alt, cost)?;
        let (tc, cc) = match (sm.curve(tp), sm.curve(cp)) {
            (Some(t), Some(c)) => (t, c),
            _ => {
                return Err(Failure::config(format!(
                    "value of time for '{alt}' needs smoothed '{time}' and '{cost}'; run `rumboost smooth` on them first"
                )))
            }
        };
        let (ta, tb) = tc.domain();
        let (ca, cb) = cc.domain();
        let surface = vot_surface(&sm, tp, cp, &linspace(ta, tb, a.grid), &linspace(ca, cb, a.grid), &opts)?;
        out.table(
            &format!("vot/{}_surface.csv", slug(alt)),
            &format!("value of time for {alt}: d V/d {time} over d V/d {cost}"),
            &["time", "cost", "vot", "masked"],
            &surface_rows(&surface),
        )?;
        if let Some(ds) = &ds {
            let pop = population_vot(&sm, ds, tp, cp, &opts, a.bins)?;
            out.table(
                &format!("vot/{}_population.csv", slug(alt)),
                &format!("value of time for {alt} at observed time and cost ({} rows)", pop.vot.len()),
                &["bin_low", "bin_high", "count"],
                &histogram_rows(&pop.histogram),
            )?;
            if let Some((lo, hi)) = pop.histogram.mode() {
                println!("vot {alt}: population mode in [{lo:.4}, {hi:.4}] over {} rows", pop.vot.len());
            }
        }
    }

    if let Some(ds) = &ds {
        if !model.spec.fe_blocks.is_empty() {
            let consts = individual_constants(model, ds)?;
            for b in &model.spec.fe_blocks {
                let name = &model.spec.alt_names[b.alt];
                out.table(
                    &format!("constants/{}.csv", slug(name)),
                    &format!("individual constants of {name}"),
                    &["bin_low", "bin_high", "count"],
                    &histogram_rows(&histogram(&consts.column(b.alt), a.bins)),
                )?;
            }
        }
    }
    println!("curves      {written}");
    println!("output      {}", out.dir.display());
    Ok(())
}

pub fn bootstrap(a: BootstrapArgs) -> Result<(), Failure> {
    let params = train_params(&a.params)?;
    let spec = parse_spec(&read_config(&a.spec)?)?;
    let mut h = ConfigHash::new("bootstrap");
    h.text("spec", &spec.to_toml());
    h.text("params", &params.to_toml());
    hash_data(&mut h, &a.data)?;
    h.text("iterations", &a.bootstrap.to_string());
    let out = Outputs::create(&a.out, params.seed, h.finish())?;
    let ds = load_data(&a.data.data, a.data.schema.as_deref(), a.data.group.as_deref(), &spec.alt_names)?;
    let res = bootstrap_utilities(&ds, &spec, &params, a.bootstrap, params.seed)?;
    for b in &res.bands {
        let alt = &spec.alt_names[b.alt];
        out.table(
            &format!("bands/{}__{}.csv", slug(alt), slug(&b.variable)),
            &format!("{} bootstrap curves of {} for {alt}", a.bootstrap, b.variable),
            &["x_low", "x_high", "mean", "min", "max", "std"],
            &band_rows(b),
        )?;
    }
    println!("curves      {}", res.bands.len());
    println!("output      {}", out.dir.display());
    Ok(())
}
