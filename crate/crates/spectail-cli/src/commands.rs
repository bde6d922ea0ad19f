//! Subcommand implementations.
//!
//! Each command resolves and validates every parameter before any sampling
//! starts (so configuration problems exit 1 without touching the output
//! directory), runs its experiment with per-task child seeds derived from
//! the master seed, and writes the fixed output layout: `records.jsonl`
//! sorted by `(n, delta, method, block)`, a plot-ready `summary.csv`, any
//! subcommand-specific extras, and `manifest.json` last with checksums of
//! everything else.

use crate::config::Resolver;
use crate::output::{now_ms, OutDir, Record, RunManifest};
use crate::{usage_err, CheckKind, CliError, MethodKind, ModeKind};
use crate::{RateArgs, SampleArgs, StructureArgs, TailsArgs, VerifyArgs};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::Write;
use spectail::graph::{
    clique_number, frobenius_sq, motzkin_straus_optimize, spectral_bound_gap, summarize,
    WeightedGraph,
};
use spectail::rate;
use spectail::sampler::{decompose, plant_clique, sample_network, DecompositionPlan, ModelParams};
use spectail::structure::{
    clique_statistics, conditioned_samples, eigenvector_report, structure_report,
    ConditioningMethod, ConditioningSpec,
};
use spectail::tails::{
    fit_exponent, lower_tail_mc, lower_tail_level, upper_tail_level, upper_tail_naive,
    upper_tail_planted_lower, upper_tail_union_upper, TailEstimate,
};
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

/// Eigensolver tolerance for one-off summaries produced by the CLI.
const EIG_TOL: f64 = 1e-10;

/// Transition points are marked on rate curves up to this clique size.
const KINK_LADDER_MAX: u32 = 8;

/// Refuse rate grids beyond this many points.
const MAX_GRID_POINTS: usize = 1_000_000;

/// Derives one child seed per subtask from the master seed. Tasks are
/// numbered in a fixed order, so the schedule never depends on threads.
struct SeedSequence {
    source: ChaCha8Rng,
    issued: Vec<u64>,
}

impl SeedSequence {
    fn new(master: u64) -> Self {
        SeedSequence {
            source: ChaCha8Rng::seed_from_u64(master),
            issued: Vec::new(),
        }
    }

    fn next(&mut self) -> u64 {
        let seed = self.source.next_u64();
        self.issued.push(seed);
        seed
    }

    fn rng(&mut self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.next())
    }
}

fn manifest(
    command_line: Vec<String>,
    subcommand: &str,
    resolver: &Resolver,
    master_seed: u64,
    started_ms: u64,
    child_seeds: Vec<u64>,
) -> RunManifest {
    RunManifest {
        command_line,
        subcommand: subcommand.to_string(),
        resolved_config: resolver.resolved.clone(),
        master_seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started_ms,
        finished_unix_ms: 0,
        child_seeds,
        output_checksums: BTreeMap::new(),
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "grid {spec:?} must be start:stop:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| CliError::usage(format!("grid component {p:?} is invalid: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !start.is_finite() || !stop.is_finite() || !(step > 0.0) || !step.is_finite() {
        return Err(CliError::usage(format!(
            "grid {spec:?} needs finite bounds and a positive step"
        )));
    }
    let mut points = Vec::new();
    let mut i = 0usize;
    loop {
        let value = start + i as f64 * step;
        if value > stop + step * 1e-9 {
            break;
        }
        points.push(value);
        i += 1;
        if i > MAX_GRID_POINTS {
            return Err(CliError::usage(format!(
                "grid {spec:?} exceeds {MAX_GRID_POINTS} points"
            )));
        }
    }
    Ok(points)
}

fn parse_n_grid(spec: &str) -> Result<Vec<usize>, CliError> {
    let grid: Vec<usize> = spec
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| CliError::usage(format!("n-grid entry {p:?} is invalid: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(CliError::usage("n-grid must hold at least one vertex count"));
    }
    for pair in grid.windows(2) {
        if pair[0] >= pair[1] {
            return Err(CliError::usage("n-grid must be strictly increasing"));
        }
    }
    Ok(grid)
}

/// Rate profile fields used by the `rate` outputs. The library domain is
/// `delta > 0`; the origin is filled by the continuous extension
/// `psi(0) = 0` with minimizer 2 (`phi_0(2) = 0`) and `x_star = 2`, which
/// solves the stationarity equation at `delta = 0`.
fn rate_point(delta: f64) -> Result<(f64, Vec<u32>, u32, f64), CliError> {
    if delta == 0.0 {
        return Ok((0.0, vec![2], 2, 2.0));
    }
    let profile = rate::psi(delta).map_err(usage_err)?;
    Ok((profile.psi, profile.minimizers, profile.h, profile.x_star))
}

pub fn run_rate(
    args: RateArgs,
    mut resolver: Resolver,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let started = now_ms();
    let delta = resolver.opt(args.delta, "delta")?;
    let grid_spec = resolver.opt(args.grid, "grid")?;
    let ladder_max = resolver.opt(args.ladder, "ladder")?;
    let out = PathBuf::from(resolver.require(args.out, "out")?);

    let mut deltas = Vec::new();
    if let Some(d) = delta {
        deltas.push(d);
    }
    if let Some(spec) = &grid_spec {
        deltas.extend(parse_grid(spec)?);
    }
    if delta.is_none() && grid_spec.is_none() {
        return Err(CliError::usage("provide --delta or --grid"));
    }

    // Evaluate everything before creating any output.
    let mut rows = Vec::new();
    for &d in &deltas {
        rows.push((d, rate_point(d)?));
    }
    let ladder = rate::transition_points(KINK_LADDER_MAX).map_err(usage_err)?;
    let requested_ladder = match ladder_max {
        Some(k_max) => Some(rate::transition_points(k_max).map_err(usage_err)?.points),
        None => None,
    };

    let mut dir = OutDir::create(out)?;
    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    for (d, (psi, minimizers, h, x_star)) in &rows {
        let mut record = Record::new(0, *d, "rate", 0);
        record.set("psi", Value::from(*psi));
        record.set(
            "minimizers",
            Value::from(minimizers.iter().map(|&k| u64::from(k)).collect::<Vec<_>>()),
        );
        record.set("h", Value::from(u64::from(*h)));
        record.set("x_star", Value::from(*x_star));
        records.push(record);

        let at_kink = ladder.points[1..]
            .iter()
            .any(|p| (d - p).abs() <= 1e-6);
        csv_rows.push(vec![
            fmt(*d),
            fmt(*psi),
            h.to_string(),
            fmt(*x_star),
            if at_kink { "1".into() } else { "0".into() },
        ]);
    }
    dir.write_records(records)?;
    dir.write_csv("summary.csv", "delta,psi,h,x_star,at_kink", &csv_rows)?;

    let aggregate = if rows.len() == 1 {
        let (d, (psi, minimizers, h, x_star)) = &rows[0];
        json!({
            "delta": d,
            "psi": psi,
            "minimizers": minimizers,
            "h": h,
            "x_star": x_star,
            "ladder": requested_ladder,
        })
    } else {
        json!({
            "points": rows.len(),
            "delta_min": rows.first().map(|r| r.0),
            "delta_max": rows.last().map(|r| r.0),
            "ladder": requested_ladder,
        })
    };
    dir.write_file(
        "rate.json",
        &serde_json::to_string_pretty(&aggregate).map_err(usage_err)?,
    )?;
    dir.finish(manifest(
        command_line,
        "rate",
        &resolver,
        0,
        started,
        Vec::new(),
    ))
}

pub fn run_sample(
    args: SampleArgs,
    mut resolver: Resolver,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let started = now_ms();
    let n = resolver.require(args.n, "n")?;
    let d = resolver.require(args.d, "d")?;
    let seed = resolver.or_default(args.seed, "seed", 0)?;
    let epsilon = resolver.opt(args.epsilon, "epsilon")?;
    let delta = resolver.opt(args.delta, "delta")?;
    let plant = resolver.opt(args.plant, "plant")?;
    let out = PathBuf::from(resolver.require(args.out, "out")?);

    let params = ModelParams::new(n, d, seed).map_err(usage_err)?;
    if plant.is_some() && delta.is_none() {
        return Err(CliError::usage("--plant requires --delta"));
    }
    let plan = match (epsilon, delta) {
        (Some(eps), Some(dl)) => Some(DecompositionPlan::new(n, d, eps, dl).map_err(usage_err)?),
        (Some(_), None) => return Err(CliError::usage("--epsilon requires --delta")),
        _ => None,
    };

    let mut seeds = SeedSequence::new(seed);
    let mut rng = seeds.rng();
    let (graph, planted_vertices, method) = match plant {
        Some(k) => {
            let dl = delta.expect("checked above");
            let (g, vertices) = plant_clique(&params, k, dl, &mut rng).map_err(usage_err)?;
            (g, Some(vertices), "planted")
        }
        None => (sample_network(&params, &mut rng), None, "plain"),
    };
    let summary = summarize(&graph, EIG_TOL).map_err(usage_err)?;

    let mut record = Record::new(n as u64, delta.unwrap_or(0.0), method, 0);
    record.set("num_edges", Value::from(graph.num_edges() as u64));
    record.set("lambda1", Value::from(summary.lambda1));
    record.set("frob_sq", Value::from(summary.frob_sq));
    record.set(
        "clique_number",
        Value::from(summary.clique_number as u64),
    );
    let mut event_cell = String::new();
    if let Some(dl) = delta {
        let level = upper_tail_level(n, dl);
        let event = summary.lambda1 >= level;
        record.set("level", Value::from(level));
        record.set("upper_tail_event", Value::from(event));
        event_cell = event.to_string();
    }
    if let Some(vertices) = &planted_vertices {
        record.set(
            "planted_vertices",
            Value::from(vertices.iter().map(|&v| v as u64).collect::<Vec<_>>()),
        );
    }
    if let Some(plan) = &plan {
        let (heavy, light) = decompose(&graph, plan).map_err(usage_err)?;
        record.set("threshold", Value::from(plan.threshold));
        record.set("heavy_edges", Value::from(heavy.num_edges() as u64));
        record.set("light_edges", Value::from(light.num_edges() as u64));
    }

    let mut dir = OutDir::create(out)?;
    dir.write_file("network.edges", &graph.to_text())?;
    dir.write_records(vec![record])?;
    dir.write_csv(
        "summary.csv",
        "n,d,seed,num_edges,lambda1,frob_sq,clique_number,upper_tail_event",
        &[vec![
            n.to_string(),
            fmt(d),
            seed.to_string(),
            graph.num_edges().to_string(),
            fmt(summary.lambda1),
            fmt(summary.frob_sq),
            summary.clique_number.to_string(),
            event_cell,
        ]],
    )?;
    dir.finish(manifest(
        command_line,
        "sample",
        &resolver,
        seed,
        started,
        seeds.issued,
    ))
}

pub fn run_verify(
    args: VerifyArgs,
    mut resolver: Resolver,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let started = now_ms();
    let graph_path = PathBuf::from(resolver.require(args.graph, "graph")?);
    let check = resolver.require(args.check, "check")?;
    let out = resolver.opt(args.out, "out")?.map(PathBuf::from);

    let text = fs::read_to_string(&graph_path).map_err(|e| {
        CliError::usage(format!("cannot read graph {}: {e}", graph_path.display()))
    })?;
    let graph = if graph_path.extension().is_some_and(|e| e == "json") {
        WeightedGraph::from_json(&text).map_err(usage_err)?
    } else {
        WeightedGraph::from_text(&text).map_err(usage_err)?
    };

    let (report, pass, failure) = match check {
        CheckKind::SpectralBound => {
            let gap = spectral_bound_gap(&graph).map_err(usage_err)?;
            let frob = frobenius_sq(&graph);
            let (k, _) = clique_number(&graph);
            let pass = gap >= -1e-9 * frob.max(1.0);
            let report = json!({
                "check": check.to_string(),
                "graph": graph_path.display().to_string(),
                "clique_number": k,
                "frob_sq": frob,
                "gap": gap,
                "pass": pass,
            });
            let failure = format!(
                "spectral bound gap {gap} is negative beyond tolerance on {} \
                 (clique number {k}, squared Frobenius norm {frob})",
                graph_path.display()
            );
            (report, pass, failure)
        }
        CheckKind::MotzkinStraus => {
            let ms = motzkin_straus_optimize(&graph).map_err(usage_err)?;
            let (k, _) = clique_number(&graph);
            let target = (k as f64 - 1.0) / (2.0 * k as f64);
            let monotone = ms
                .objective_trace
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-12);
            let pass =
                (ms.value - target).abs() <= 1e-12 && monotone && ms.transport_value <= ms.value + 1e-12;
            let report = json!({
                "check": check.to_string(),
                "graph": graph_path.display().to_string(),
                "clique_number": k,
                "value": ms.value,
                "expected": target,
                "transport_value": ms.transport_value,
                "trace_monotone": monotone,
                "pass": pass,
            });
            let failure = format!(
                "simplex optimum {} differs from (k-1)/(2k) = {target} for clique number {k} \
                 on {} (transport value {}, monotone trace: {monotone})",
                ms.value,
                graph_path.display(),
                ms.transport_value
            );
            (report, pass, failure)
        }
    };

    let pretty = serde_json::to_string_pretty(&report).map_err(usage_err)?;
    // Tolerate a closed stdout (`spectail verify ... | head`): the reader
    // got everything it asked for, so a broken pipe is not an error.
    if let Err(err) = writeln!(std::io::stdout(), "{pretty}") {
        if err.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(CliError::invariant(format!("cannot write stdout: {err}")));
        }
    }
    if let Some(out) = out {
        let mut dir = OutDir::create(out)?;
        let mut record = Record::new(graph.n() as u64, 0.0, &check.to_string(), 0);
        if let Value::Object(map) = &report {
            for (key, value) in map {
                if key != "check" {
                    record.set(key, value.clone());
                }
            }
        }
        dir.write_records(vec![record])?;
        dir.write_csv(
            "summary.csv",
            "check,graph,pass",
            &[vec![
                check.to_string(),
                graph_path.display().to_string(),
                pass.to_string(),
            ]],
        )?;
        dir.finish(manifest(
            command_line,
            "verify",
            &resolver,
            0,
            started,
            Vec::new(),
        ))?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::invariant(failure))
    }
}

fn estimate_record(
    n: usize,
    delta: f64,
    method: &str,
    level: f64,
    estimate: &TailEstimate,
) -> Record {
    let mut record = Record::new(n as u64, delta, method, 0);
    record.set("probability", Value::from(estimate.probability));
    record.set("ci_low", Value::from(estimate.ci_low));
    record.set("ci_high", Value::from(estimate.ci_high));
    record.set("trials", Value::from(estimate.trials));
    record.set("hits", Value::from(estimate.hits));
    record.set("level", Value::from(level));
    record
}

fn check_estimate(n: usize, method: &str, e: &TailEstimate) -> Result<(), CliError> {
    let ordered = 0.0 <= e.ci_low
        && e.ci_low <= e.probability
        && e.probability <= e.ci_high
        && e.ci_high <= 1.0;
    if !ordered || e.hits > e.trials {
        return Err(CliError::invariant(format!(
            "tail estimate at n = {n} ({method}) is inconsistent: probability {}, \
             interval [{}, {}], {} hits of {} trials",
            e.probability, e.ci_low, e.ci_high, e.hits, e.trials
        )));
    }
    Ok(())
}

pub fn run_tails(
    args: TailsArgs,
    mut resolver: Resolver,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let started = now_ms();
    let mode = resolver.require(args.mode, "mode")?;
    let n_grid = parse_n_grid(&resolver.require(args.n_grid, "n-grid")?)?;
    let d = resolver.require(args.d, "d")?;
    let delta = resolver.require(args.delta, "delta")?;
    let trials = resolver.require(args.trials, "trials")?;
    let seed = resolver.or_default(args.seed, "seed", 0)?;
    let out = PathBuf::from(resolver.require(args.out, "out")?);

    // Validate every grid point before any sampling.
    let mut params_grid = Vec::new();
    for &n in &n_grid {
        params_grid.push(ModelParams::new(n, d, seed).map_err(usage_err)?);
    }
    if trials == 0 {
        return Err(CliError::usage("trials must be positive"));
    }
    let planted_k = match mode {
        ModeKind::Upper => {
            if !(delta > 0.0) || !delta.is_finite() {
                return Err(CliError::usage(format!(
                    "delta must be positive and finite, got {delta}"
                )));
            }
            rate::h(delta).map_err(usage_err)? as usize
        }
        ModeKind::Lower => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(CliError::usage(format!(
                    "lower mode needs delta in (0, 1), got {delta}"
                )));
            }
            0
        }
    };

    let mut seeds = SeedSequence::new(seed);
    let mut estimates: Vec<(usize, String, f64, TailEstimate)> = Vec::new();
    for params in &params_grid {
        let n = params.n;
        match mode {
            ModeKind::Upper => {
                let level = upper_tail_level(n, delta);
                let naive = upper_tail_naive(params, delta, trials, &mut seeds.rng())
                    .map_err(usage_err)?;
                let planted =
                    upper_tail_planted_lower(params, delta, planted_k, trials, &mut seeds.rng())
                        .map_err(usage_err)?;
                let union = upper_tail_union_upper(params, delta, trials, &mut seeds.rng())
                    .map_err(usage_err)?;
                estimates.push((n, "naive".into(), level, naive));
                estimates.push((n, "planted-lower".into(), level, planted));
                estimates.push((n, "union-upper".into(), level, union));
            }
            ModeKind::Lower => {
                let level = lower_tail_level(n, delta);
                let lower =
                    lower_tail_mc(params, delta, trials, &mut seeds.rng()).map_err(usage_err)?;
                estimates.push((n, "lower-mc".into(), level, lower));
            }
        }
    }

    // Exponent fit per method over the grid points with nonzero estimates.
    let methods: Vec<String> = match mode {
        ModeKind::Upper => vec!["naive".into(), "planted-lower".into(), "union-upper".into()],
        ModeKind::Lower => vec!["lower-mc".into()],
    };
    let mut fits: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    if n_grid.len() >= 3 {
        for method in &methods {
            let series: Vec<(usize, f64)> = estimates
                .iter()
                .filter(|(_, m, _, _)| m == method)
                .map(|(n, _, _, e)| (*n, e.probability))
                .collect();
            if series.iter().all(|&(_, p)| p > 0.0) {
                if let Ok(fit) = fit_exponent(&series) {
                    fits.insert(method.clone(), (fit.slope, fit.slope_ci.0, fit.slope_ci.1));
                }
            }
        }
    }

    let mut records = Vec::new();
    let mut csv_rows = Vec::new();
    for (n, method, level, estimate) in &estimates {
        check_estimate(*n, method, estimate)?;
        records.push(estimate_record(*n, delta, method, *level, estimate));
        let log_p = if estimate.probability > 0.0 {
            fmt(estimate.probability.ln())
        } else {
            String::new()
        };
        let double_log = if mode == ModeKind::Lower
            && estimate.probability > 0.0
            && estimate.probability < 1.0
        {
            fmt((1.0 / estimate.probability).ln().ln() / (*n as f64).ln())
        } else {
            String::new()
        };
        let (slope, lo, hi) = match fits.get(method) {
            Some(&(s, l, h)) => (fmt(s), fmt(l), fmt(h)),
            None => (String::new(), String::new(), String::new()),
        };
        csv_rows.push(vec![
            method.clone(),
            n.to_string(),
            fmt((*n as f64).ln()),
            log_p,
            double_log,
            slope,
            lo,
            hi,
        ]);
    }

    let mut dir = OutDir::create(out)?;
    dir.write_records(records)?;
    dir.write_csv(
        "summary.csv",
        "method,n,log_n,log_p,double_log_ratio,slope,slope_ci_low,slope_ci_high",
        &csv_rows,
    )?;
    dir.finish(manifest(
        command_line,
        "tails",
        &resolver,
        seed,
        started,
        seeds.issued,
    ))
}

pub fn run_structure(
    args: StructureArgs,
    mut resolver: Resolver,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let started = now_ms();
    let n = resolver.require(args.n, "n")?;
    let d = resolver.require(args.d, "d")?;
    let delta = resolver.require(args.delta, "delta")?;
    let kappa = resolver.require(args.kappa, "kappa")?;
    let samples = resolver.require(args.samples, "samples")?;
    let method = resolver.require(args.method, "method")?;
    let seed = resolver.or_default(args.seed, "seed", 0)?;
    let out = PathBuf::from(resolver.require(args.out, "out")?);

    let params = ModelParams::new(n, d, seed).map_err(usage_err)?;
    let library_method = match method {
        MethodKind::Rejection => ConditioningMethod::Rejection,
        MethodKind::Planted => ConditioningMethod::PlantedProxy,
    };
    let spec =
        ConditioningSpec::new(delta, library_method, kappa, samples).map_err(usage_err)?;

    let mut seeds = SeedSequence::new(seed);
    let ensemble = conditioned_samples(&params, &spec, &mut seeds.rng()).map_err(usage_err)?;
    let cliques = clique_statistics(&ensemble, delta).map_err(usage_err)?;

    // Per-sample analysis in parallel; collect preserves sample order.
    let reports: Vec<_> = ensemble
        .samples
        .par_iter()
        .map(|(g, summary)| {
            let full = structure_report(g, summary, delta, kappa)?;
            let events = eigenvector_report(g, summary, kappa)?;
            Ok((full, events, summary.lambda1))
        })
        .collect::<Result<_, spectail::structure::StructureError>>()
        .map_err(usage_err)?;

    let method_name = library_method.to_string();
    let mut records = Vec::new();
    let mut localized_and_flat = 0usize;
    let mut flatness_values = Vec::new();
    let mut deviation_values = Vec::new();
    for (index, (report, events, lambda1)) in reports.iter().enumerate() {
        if !(0.0..=1.0 + 1e-12).contains(&report.mass_on_clique)
            || report.flatness < 0.0
            || !report
                .t_set
                .iter()
                .all(|v| report.clique_vertices.contains(v))
        {
            return Err(CliError::invariant(format!(
                "structure report for sample {index} is inconsistent: mass {}, flatness {}, \
                 T of size {} against a clique of size {}",
                report.mass_on_clique,
                report.flatness,
                report.t_set.len(),
                report.k_x
            )));
        }
        if events.localized && events.flat {
            localized_and_flat += 1;
        }
        flatness_values.push(report.flatness);
        deviation_values.push(report.gaussian_l1_dev);

        let mut record = Record::new(n as u64, delta, &method_name, index as u64);
        record.set("k_x", Value::from(report.k_x as u64));
        record.set(
            "clique_vertices",
            Value::from(
                report
                    .clique_vertices
                    .iter()
                    .map(|&v| v as u64)
                    .collect::<Vec<_>>(),
            ),
        );
        record.set(
            "unique_max_clique",
            Value::from(report.unique_max_clique),
        );
        record.set(
            "all_big_cliques_inside",
            Value::from(report.all_big_cliques_inside),
        );
        record.set("mass_on_clique", Value::from(report.mass_on_clique));
        record.set("flatness", Value::from(report.flatness));
        record.set(
            "t_set",
            Value::from(report.t_set.iter().map(|&v| v as u64).collect::<Vec<_>>()),
        );
        record.set("gaussian_l1_dev", Value::from(report.gaussian_l1_dev));
        record.set("lambda1", Value::from(*lambda1));
        record.set("localized", Value::from(events.localized));
        record.set("flat", Value::from(events.flat));
        records.push(record);
    }

    let total = reports.len() as f64;
    let localization_frequency = localized_and_flat as f64 / total;
    let median_flatness = median(flatness_values);
    let median_deviation = median(deviation_values);
    let aggregate = json!({
        "n": n,
        "d": d,
        "delta": delta,
        "kappa": kappa,
        "method": method_name,
        "samples": reports.len(),
        "attempts": ensemble.attempts,
        "acceptance_rate": ensemble.acceptance_rate,
        "level": ensemble.level,
        "minimizers": cliques.minimizers,
        "minimizer_frequency": cliques.minimizer_frequency,
        "unique_frequency": cliques.unique_frequency,
        "containment_frequency": cliques.containment_frequency,
        "localization_frequency": localization_frequency,
        "median_flatness": median_flatness,
        "median_gaussian_dev": median_deviation,
        "regime_warning": cliques.regime_warning,
    });

    let mut dir = OutDir::create(out)?;
    dir.write_records(records)?;
    dir.write_csv(
        "summary.csv",
        "delta,kappa,n,samples,minimizer_frequency,localization_frequency,unique_frequency,\
         containment_frequency,median_gaussian_dev",
        &[vec![
            fmt(delta),
            fmt(kappa),
            n.to_string(),
            reports.len().to_string(),
            fmt(cliques.minimizer_frequency),
            fmt(localization_frequency),
            fmt(cliques.unique_frequency),
            fmt(cliques.containment_frequency),
            fmt(median_deviation),
        ]],
    )?;
    dir.write_file(
        "aggregate.json",
        &serde_json::to_string_pretty(&aggregate).map_err(usage_err)?,
    )?;
    dir.finish(manifest(
        command_line,
        "structure",
        &resolver,
        seed,
        started,
        seeds.issued,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_is_inclusive_and_validated() {
        let grid = parse_grid("0:30:0.1").unwrap();
        assert_eq!(grid.len(), 301);
        assert_eq!(grid[0], 0.0);
        assert!((grid[300] - 30.0).abs() < 1e-9);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1:-0.5").is_err());
        assert!(parse_grid("a:1:0.5").is_err());
    }

    #[test]
    fn n_grid_must_increase() {
        assert_eq!(parse_n_grid("128, 256,512").unwrap(), vec![128, 256, 512]);
        assert!(parse_n_grid("").is_err());
        assert!(parse_n_grid("128,128").is_err());
        assert!(parse_n_grid("256,128").is_err());
        assert!(parse_n_grid("12x").is_err());
    }

    #[test]
    fn rate_point_extends_continuously_to_zero() {
        let (psi, minimizers, h, x_star) = rate_point(0.0).unwrap();
        assert_eq!(psi, 0.0);
        assert_eq!(minimizers, vec![2]);
        assert_eq!(h, 2);
        assert_eq!(x_star, 2.0);
        let (psi, minimizers, _, _) = rate_point(3.0).unwrap();
        assert_eq!(psi, 3.0);
        assert_eq!(minimizers, vec![2, 3]);
        assert!(rate_point(-1.0).is_err());
    }

    #[test]
    fn medians_split_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
