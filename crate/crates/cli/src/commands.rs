use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use msqg::expectation::{compare_expectation, inner_sum, write_expectation_csv, write_sum_csv};
use msqg::flow::{GalerkinFlow, Truncation};
use msqg::gibbs::snapshot::{load_snapshot, save_snapshot};
use msqg::gibbs::{sample_field, GibbsLaw, GibbsSpec};
use msqg::invariance::{run_invariance_experiment, InvarianceConfig, ObservablePanel};
use msqg::report::{fmt_float, write_csv_row};
use msqg::spectral::alpha;
use msqg::stats::{z_score, Welford};
use msqg::{Field, LatticeBox, ModelParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{modes, InitialData, RunConfig, MAX_WINDOW};
use crate::CliError;

/// Whether the statistical checks of a command held.
pub type Verdict = bool;

fn law(params: &ModelParams, law: GibbsLaw) -> Result<GibbsSpec, CliError> {
    match law {
        GibbsLaw::Invariant => Ok(GibbsSpec::invariant(params)),
        GibbsLaw::MomentTable => Ok(GibbsSpec::moment_table(params)),
        GibbsLaw::Custom => Err(CliError::Config("the custom law is only available through the library".into())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `<name>.meta.json` next to an artifact: the configuration echo and its hash.
fn write_meta(config: &RunConfig, command: &str, artifacts: &[PathBuf], summary: Value) -> Result<(), CliError> {
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config.hash(),
        "config": config,
        "config_toml": config.to_toml(),
        "artifacts": artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": summary,
    });
    let path = config.out.join(format!("{command}.meta.json"));
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn coefficients(config: &RunConfig) -> Result<Verdict, CliError> {
    let params = config.params()?;
    let window = &config.coefficients;
    if window.h_extent > MAX_WINDOW {
        return Err(CliError::Config(format!("h_extent {} exceeds {MAX_WINDOW}", window.h_extent)));
    }
    let ks = modes(&window.k_modes);
    if ks.iter().any(|k| k.is_zero()) {
        return Err(CliError::Config("k = (0, 0) carries no coefficient".into()));
    }
    let path = config.out.join("coefficients.csv");
    let mut w = create(&path)?;
    write_csv_row(&mut w, &["k1", "k2", "h1", "h2", "alpha", "alpha_sym"])?;
    let mut rows = 0;
    for &k in &ks {
        for h in LatticeBox::new(window.h_extent).modes() {
            let a: f64 = alpha(k, h, &params)?;
            let b: f64 = alpha(k, k - h, &params)?;
            write_csv_row(&mut w, &[k.k1.to_string(), k.k2.to_string(), h.k1.to_string(), h.k2.to_string(), fmt_float(a), fmt_float(b)])?;
            rows += 1;
        }
    }
    w.flush()?;
    write_meta(config, "coefficients", &[path], json!({ "rows": rows }))?;
    Ok(true)
}

#[derive(Serialize)]
struct MomentSummary {
    members: usize,
    modes: usize,
    max_abs_z: f64,
    z_threshold: f64,
    pass: bool,
}

pub fn sample(config: &RunConfig) -> Result<Verdict, CliError> {
    let params = config.params()?;
    let s = &config.sample;
    if s.members == 0 {
        return Err(CliError::Config("sample.members must be positive".into()));
    }
    let spec = law(&params, s.law)?;
    let n = params.cutoff;
    let stream = config.stream(0);
    let box_modes: Vec<_> = LatticeBox::new(n).modes().filter(|k| !k.is_zero()).collect();
    let mut moments = vec![Welford::new(); box_modes.len()];
    let mut artifacts = Vec::new();
    for i in 0..s.members {
        let psi: Field = sample_field(&spec, n, &stream.child(i as u64))?;
        for (w, &k) in moments.iter_mut().zip(&box_modes) {
            w.push(psi.get(k).norm_sqr());
        }
        if i < s.snapshots {
            let path = config.out.join("samples").join(format!("sample_{i:05}.msqg"));
            std::fs::create_dir_all(path.parent().unwrap())?;
            save_snapshot(&path, &psi, params.delta, params.formulation_code())?;
            artifacts.push(path);
        }
    }
    let path = config.out.join("moments.csv");
    let mut w = create(&path)?;
    write_csv_row(&mut w, &["k1", "k2", "expected", "mean", "se", "z"])?;
    let mut max_abs_z: f64 = 0.0;
    for (m, &k) in moments.iter().zip(&box_modes) {
        let expected = spec.covariance(k)?;
        let z = z_score(m.mean() - expected, m.standard_error());
        max_abs_z = max_abs_z.max(z.abs());
        write_csv_row(&mut w, &[k.k1.to_string(), k.k2.to_string(), fmt_float(expected), fmt_float(m.mean()), fmt_float(m.standard_error()), fmt_float(z)])?;
    }
    w.flush()?;
    artifacts.push(path);
    // a z-test needs a sample of reasonable size
    let pass = s.members < 100 || max_abs_z <= s.z_threshold;
    let summary = MomentSummary { members: s.members, modes: box_modes.len(), max_abs_z, z_threshold: s.z_threshold, pass };
    write_meta(config, "sample", &artifacts, serde_json::to_value(&summary)?)?;
    Ok(pass)
}

pub fn evolve(config: &RunConfig) -> Result<Verdict, CliError> {
    let params = config.params()?;
    let e = &config.evolve;
    let n = params.cutoff;
    let initial: Field = match &e.initial {
        InitialData::Gibbs => sample_field(&law(&params, e.law)?, n, &config.stream(0))?,
        InitialData::Zero => Field::zeros(n, true),
        InitialData::Snapshot(path) => load_snapshot(path)?.1,
    };
    let flow = GalerkinFlow::new(&params, &config.integrator()?)?;
    let mut traj = flow.evolve(&initial, e.t_final)?;
    if e.initial == InitialData::Gibbs {
        traj = traj.with_provenance(Some(law(&params, e.law)?), Some(config.stream(0)));
    }
    let dir = config.out.join("trajectory");
    let mut artifacts = traj.save(&dir)?;
    let drift = traj.drift();
    let path = config.out.join("drift.json");
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(&path, serde_json::to_string_pretty(&json!({ "config_sha256": config.hash(), "drift": drift }))?)?;
    artifacts.push(path);
    write_meta(config, "evolve", &artifacts, serde_json::to_value(drift)?)?;
    Ok(true)
}

pub fn expectation(config: &RunConfig) -> Result<Verdict, CliError> {
    let params = config.params()?;
    let e = &config.expectation;
    let reports = modes(&e.k_modes).into_iter().map(|k| inner_sum(k, params.delta, e.radius)).collect::<Result<Vec<_>, _>>()?;
    let sums_path = config.out.join("sums.csv");
    let mut w = create(&sums_path)?;
    write_sum_csv(&mut w, &reports)?;
    w.flush()?;
    let mut artifacts = vec![sums_path];
    let verdicts: Vec<Value> = reports.iter().map(|r| json!({ "k": [r.k.k1, r.k.k2], "verdict": r.verdict.as_str(), "value": r.value() })).collect();

    let mut pass = true;
    let mut rows = Vec::new();
    // no dynamics, hence no comparison, at delta = 0
    if e.members > 0 && params.delta > 0.0 {
        let spec = GibbsSpec::invariant(&params);
        for (i, &s) in e.sobolev.iter().enumerate() {
            let row = compare_expectation(&params, &spec, s, e.members, &config.stream(i as u64))?;
            pass &= row.z_score().abs() <= e.z_threshold;
            rows.push(row);
        }
        let path = config.out.join("expectation.csv");
        let mut w = create(&path)?;
        write_expectation_csv(&mut w, &rows)?;
        w.flush()?;
        artifacts.push(path);
    }
    let z: Vec<f64> = rows.iter().map(|r| r.z_score()).collect();
    write_meta(config, "expectation", &artifacts, json!({ "sums": verdicts, "z": z, "pass": pass }))?;
    Ok(pass)
}

pub fn invariance(config: &RunConfig) -> Result<Verdict, CliError> {
    let params = config.params()?;
    let v = &config.invariance;
    let mut integrator = config.integrator()?;
    if v.bug_switch {
        integrator = integrator.with_truncation(Truncation::UnprojectedInput);
    }
    let mut run = InvarianceConfig::new(v.times.clone(), v.members, integrator);
    run.law = v.law;
    run.family_alpha = v.family_alpha;
    run.z_floor = v.z_floor;
    run.max_failure_rate = v.max_failure_rate;
    run.complement_extent = (v.complement_extent > 0).then_some(v.complement_extent);
    let report = run_invariance_experiment(&params, &run, &ObservablePanel::default(), &config.stream(0))?;

    std::fs::create_dir_all(&config.out)?;
    let json_path = config.out.join("invariance.json");
    let doc = json!({ "config_sha256": config.hash(), "config": config, "report": report });
    std::fs::write(&json_path, serde_json::to_string_pretty(&doc)?)?;
    let csv_path = config.out.join("invariance.csv");
    let mut w = create(&csv_path)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let summary = json!({ "passed": report.passed, "max_abs_z": report.max_abs_z, "min_ks_p_value": report.min_ks_p_value });
    write_meta(config, "invariance", &[json_path, csv_path], summary)?;
    Ok(report.passed)
}
