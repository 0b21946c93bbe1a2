use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use star_spectra_core::analytic::{f_expansion, k_formfactor, r2_analytic, r3_connected, r3_full, Components};
use star_spectra_core::empirical::{estimate_r2, estimate_r3};
use star_spectra_core::orbits::{q_bruteforce, q_formula};
use star_spectra_core::spectrum::solve_spectrum_window;
use star_spectra_core::trace::{density_from_orbits, density_from_spectrum, relative_l2_distance, uniform_grid};
use star_spectra_core::{CorrelationEstimate, EnsembleConfig, OrbitClass, StarGraph, Truncation};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, manifest_path, real, truncation_path, Run};

pub fn run(cli: &Cli, argv: Vec<String>) -> CliResult<u8> {
    let run = Run::new(argv);
    match &cli.command {
        Command::Gen(a) => gen(run, a),
        Command::Spectrum(a) => spectrum(run, a),
        Command::Orbits(OrbitsCommand::Q(a)) => orbits_q(a),
        Command::TraceCheck(a) => trace_check(run, a),
        Command::Analytic(AnalyticCommand::F(a)) => analytic_f(run, a),
        Command::Analytic(AnalyticCommand::R3(a)) => analytic_r3(run, a),
        Command::Analytic(AnalyticCommand::R2(a)) => analytic_r2(run, a),
        Command::Analytic(AnalyticCommand::K(a)) => analytic_k(run, a),
        Command::Empirical(EmpiricalCommand::R2(a)) => empirical(run, a, Statistic::R2),
        Command::Empirical(EmpiricalCommand::R3(a)) => empirical(run, a, Statistic::R3),
        Command::Compare(a) => compare(run, a),
        Command::ExpansionTable(a) => expansion_table(run, a),
    }
    .map(|code| code.unwrap_or(0))
}

type Outcome = CliResult<Option<u8>>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| CliError::Json {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_graph(source: &GraphSource) -> CliResult<StarGraph> {
    match (&source.graph, source.v) {
        (Some(path), _) => read_json(path),
        (None, Some(v)) => Ok(StarGraph::random(v, source.seed.unwrap_or(0))?),
        (None, None) => Err(CliError::Validation("either --graph or --v is required".into())),
    }
}

fn gen(run: Run, a: &GenArgs) -> Outcome {
    let graph = StarGraph::random(a.v, a.seed)?;
    run.emit(a.out.as_deref(), &to_json(&graph)?, &[], json!({ "args": a }))?;
    Ok(None)
}

fn spectrum(run: Run, a: &SpectrumArgs) -> Outcome {
    let graph = load_graph(&a.source)?;
    let s = solve_spectrum_window(&graph, a.lambda_min, a.lambda_max)?;
    let rows: Vec<Vec<String>> = s
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![(i + 1).to_string(), real(e)])
        .collect();
    let config = json!({ "args": a, "graph": graph, "levels": s.len() });
    run.emit(a.out.as_deref(), &csv_bytes(&["index", "lambda"], &rows)?, &[], config)?;
    Ok(None)
}

fn orbits_q(a: &QArgs) -> Outcome {
    let class = OrbitClass::new(a.n.clone(), a.m.clone())?;
    let formula = || q_formula(&class);
    let brute = || q_bruteforce(&class, a.budget);
    match a.method {
        QMethod::Formula => println!("{}", formula()),
        QMethod::Brute => println!("{}", brute()?),
        QMethod::Both => {
            let (f, b) = (formula(), brute()?);
            let ok = f == b;
            println!("{f}  {b}  {}", if ok { "OK" } else { "MISMATCH" });
            if !ok {
                return Ok(Some(1));
            }
        }
    }
    Ok(None)
}

fn trace_check(run: Run, a: &TraceCheckArgs) -> Outcome {
    if !(a.lambda_lo > 0.0 && a.lambda_hi > a.lambda_lo) {
        return Err(CliError::Validation("need 0 < --lambda-lo < --lambda-hi".into()));
    }
    let graph = load_graph(&a.source)?;
    let grid = uniform_grid(a.lambda_lo, a.lambda_hi, a.points);
    let orbit = density_from_orbits(&graph, &grid, a.sigma, a.kmax, a.budget)?;
    // room for the Gaussian tails of levels just past the grid
    let spectrum = solve_spectrum_window(&graph, 0.0, a.lambda_hi + 15.0 * a.sigma + 1.0)?;
    let exact = density_from_spectrum(&spectrum, &grid, a.sigma)?;
    let distance = relative_l2_distance(&orbit, &exact)?;
    println!("relative L2 distance {}", real(distance));
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(orbit.values.iter().zip(&exact.values))
        .map(|(&x, (&o, &e))| vec![real(x), real(o), real(e)])
        .collect();
    let bytes = csv_bytes(&["lambda", "orbit_density", "spectral_density"], &rows)?;
    let config = json!({ "args": a, "graph": graph, "relative_l2_distance": distance });
    run.emit(a.out.as_deref(), &bytes, &[], config)?;
    Ok(None)
}

fn truncation(args: &TruncationArgs) -> CliResult<Truncation> {
    let t = args.resolve();
    t.validate()?;
    Ok(t)
}

/// Square grid `0, step, ..., tau_max` on both axes.
fn tau_grid(tau_max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && tau_max >= 0.0 && tau_max.is_finite()) {
        return Err(CliError::Validation("need --step > 0 and --tau-max >= 0".into()));
    }
    let count = (tau_max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| i as f64 * step).collect())
}

/// Writes the result plus a truncation sidecar when `out` is a file.
fn emit_analytic(run: Run, out: Option<&Path>, bytes: &[u8], t: &Truncation, args: Value) -> CliResult<()> {
    let extra: Vec<(PathBuf, Vec<u8>)> = match out {
        Some(path) => vec![(truncation_path(path), to_json(t)?)],
        None => Vec::new(),
    };
    run.emit(out, bytes, &extra, json!({ "args": args, "truncation": t }))
}

fn analytic_f(run: Run, a: &AnalyticFArgs) -> Outcome {
    let t = truncation(&a.truncation)?;
    let taus = tau_grid(a.tau_max, a.step)?;
    let mut rows = Vec::with_capacity(taus.len() * taus.len());
    for &tau in &taus {
        for &tau_p in &taus {
            let c = Components::evaluate(tau, tau_p, &t)?;
            rows.push(vec![
                real(tau),
                real(tau_p),
                real(c.f1),
                real(c.f2),
                real(c.f3),
                real(c.f4),
                real(c.total()),
                real(f_expansion(tau, tau_p)),
            ]);
        }
    }
    let header = ["tau", "tau_p", "F1", "F2", "F3", "F4", "F", "expansion"];
    emit_analytic(run, a.out.as_deref(), &csv_bytes(&header, &rows)?, &t, json!(a))?;
    Ok(None)
}

fn analytic_r3(run: Run, a: &AnalyticR3Args) -> Outcome {
    let t = truncation(&a.truncation)?;
    let row = vec![real(a.x), real(a.y), real(r3_full(a.x, a.y, &t)?), real(r3_connected(a.x, a.y, &t)?)];
    let bytes = csv_bytes(&["x", "y", "R3", "R3_connected"], &[row])?;
    emit_analytic(run, a.out.as_deref(), &bytes, &t, json!(a))?;
    Ok(None)
}

fn analytic_r2(run: Run, a: &AnalyticR2Args) -> Outcome {
    let t = truncation(&a.truncation)?;
    let bytes = csv_bytes(&["x", "R2"], &[vec![real(a.x), real(r2_analytic(a.x, &t)?)]])?;
    emit_analytic(run, a.out.as_deref(), &bytes, &t, json!(a))?;
    Ok(None)
}

fn analytic_k(run: Run, a: &AnalyticKArgs) -> Outcome {
    let t = truncation(&a.truncation)?;
    let bytes = csv_bytes(&["tau", "K"], &[vec![real(a.tau), real(k_formfactor(a.tau, &t)?)]])?;
    emit_analytic(run, a.out.as_deref(), &bytes, &t, json!(a))?;
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Statistic {
    R2,
    R3,
}

impl Statistic {
    fn name(self) -> &'static str {
        match self {
            Statistic::R2 => "r2",
            Statistic::R3 => "r3",
        }
    }
}

fn estimate_rows(est: &CorrelationEstimate) -> Vec<Vec<String>> {
    est.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row: Vec<String> = p.iter().map(|&c| real(c)).collect();
            row.extend([real(est.estimate[i]), real(est.stderr[i]), est.pairs[i].to_string()]);
            row
        })
        .collect()
}

fn empirical(run: Run, a: &EmpiricalArgs, stat: Statistic) -> Outcome {
    let config = EnsembleConfig {
        v: a.v,
        realizations: a.realizations,
        lambda_max: a.lambda_max,
        lambda_min: a.lambda_min,
        seed: a.seed,
        kernel_width: a.kernel_width,
        x_grid: a.x_grid.0.clone(),
        xy_grid: a
            .x_grid
            .0
            .iter()
            .flat_map(|&x| a.y_grid.0.iter().map(move |&y| (x, y)))
            .collect(),
    };
    let (est, header): (_, &[&str]) = match stat {
        Statistic::R2 => (estimate_r2(&config)?, &["x", "estimate", "stderr", "pairs"]),
        Statistic::R3 => (estimate_r3(&config)?, &["x", "y", "estimate", "stderr", "pairs"]),
    };
    let meta = json!({
        "args": a,
        "statistic": stat.name(),
        "ensemble": config,
        "kernel_width": est.kernel_width,
        "realizations": est.realizations,
        "warnings": est.warnings,
    });
    run.emit(a.out.as_deref(), &csv_bytes(header, &estimate_rows(&est))?, &[], meta)?;
    Ok(None)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (std::fs::canonicalize(a), std::fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn compare(run: Run, a: &CompareArgs) -> Outcome {
    let empirical_manifest = manifest_path(&a.empirical);
    let inputs = [&a.empirical, &empirical_manifest, &a.truncation];
    for out in [a.out.clone(), manifest_path(&a.out)] {
        if inputs.iter().any(|i| same_file(&out, i)) {
            return Err(CliError::Validation(format!("refusing to overwrite input {}", out.display())));
        }
    }
    if !empirical_manifest.exists() {
        return Err(CliError::Validation(format!(
            "ensemble metadata missing: {} not found",
            empirical_manifest.display()
        )));
    }
    if !a.truncation.exists() {
        return Err(CliError::Validation(format!(
            "analytic truncation metadata missing: {} not found",
            a.truncation.display()
        )));
    }
    let manifest: Value = read_json(&empirical_manifest)?;
    let ensemble = manifest
        .pointer("/config/ensemble")
        .filter(|e| e.is_object())
        .ok_or_else(|| CliError::Validation(format!("{} has no ensemble metadata", empirical_manifest.display())))?;
    let ensemble: EnsembleConfig = serde_json::from_value(ensemble.clone()).map_err(|source| CliError::Json {
        path: empirical_manifest.clone(),
        source,
    })?;
    let t: Truncation = read_json(&a.truncation)?;
    t.validate()?;

    let csv_err = |source| CliError::Csv {
        path: a.empirical.clone(),
        source,
    };
    let mut reader = csv::Reader::from_path(&a.empirical).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let coords = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "estimate", "stderr", "pairs"] => 1,
        ["x", "y", "estimate", "stderr", "pairs"] => 2,
        _ => return Err(CliError::Validation(format!("unexpected header {header:?}"))),
    };
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| -> CliResult<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("{}: bad number {:?}: {e}", a.empirical.display(), &record[i])))
        };
        let (estimate, stderr) = (field(coords)?, field(coords + 1)?);
        let analytic = if coords == 1 {
            r2_analytic(field(0)?, &t)?
        } else {
            r3_full(field(0)?, field(1)?, &t)?
        };
        let z = (estimate - analytic) / stderr;
        worst = worst.max(z.abs());
        let mut row: Vec<String> = (0..coords).map(|i| record[i].to_owned()).collect();
        row.extend([real(estimate), real(stderr), real(analytic), real(z)]);
        rows.push(row);
    }
    let mut out_header: Vec<&str> = header[..coords].iter().map(String::as_str).collect();
    out_header.extend(["empirical", "stderr", "analytic", "z"]);
    println!("{} points, max |z| {}", rows.len(), real(worst));
    let config = json!({ "args": a, "ensemble": ensemble, "truncation": t, "max_abs_z": worst });
    run.emit(Some(&a.out), &csv_bytes(&out_header, &rows)?, &[], config)?;
    Ok(None)
}

fn expansion_table(run: Run, a: &ExpansionArgs) -> Outcome {
    let t = truncation(&a.truncation)?;
    let taus = tau_grid(a.tau_max, a.step)?;
    let mut rows = Vec::new();
    for &tau in &taus {
        for &tau_p in &taus {
            let f = Components::evaluate(tau, tau_p, &t)?.total();
            let e = f_expansion(tau, tau_p);
            rows.push(vec![real(tau), real(tau_p), real(f), real(e), real(f - e)]);
        }
    }
    let header = ["tau", "tau_p", "F", "expansion", "difference"];
    emit_analytic(run, a.out.as_deref(), &csv_bytes(&header, &rows)?, &t, json!(a))?;
    Ok(None)
}
