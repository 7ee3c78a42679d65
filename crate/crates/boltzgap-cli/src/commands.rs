use std::f64::consts::PI;
use std::path::Path;

use boltzgap::carleman::{
    dissipativity_radius, dp_tail, h_gamma, kernel_gamma, lemma_g_integral, BoundReport,
    BoundSample, KernelPoint, KernelQuadConfig,
};
use boltzgap::discretize::{assemble, build_grid, GeneratorMatrix};
use boltzgap::evolve::{certified_data, envelope_check, evolve, fit_decay, EvolveConfig};
use boltzgap::model::{maxwellian_radial, weight_inv_radial, ModelSpec, WeightSpec};
use boltzgap::report::{self, fmt_float, ResolventSample, SpectrumSummary};
use boltzgap::spectral::{resolvent_norm, spectrum, RateFunctions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{self, InitialSection, ReportConfig, RunConfig};
use crate::CliError;

/// One line of a run summary: a named quantity, optionally judged against
/// a threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub property: String,
    pub value: String,
    pub threshold: Option<String>,
    pub passed: Option<bool>,
}

fn info(property: &str, value: String) -> SummaryRow {
    SummaryRow { property: property.to_string(), value, threshold: None, passed: None }
}

fn check(property: &str, value: f64, threshold: f64, ok: bool) -> SummaryRow {
    SummaryRow {
        property: property.to_string(),
        value: fmt_float(value),
        threshold: Some(fmt_float(threshold)),
        passed: Some(ok),
    }
}

/// Summary document written by every subcommand, and the input the
/// `report` subcommand aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub seed: Option<u64>,
    pub passed: bool,
    pub rows: Vec<SummaryRow>,
}

fn finish(out: &Path, command: &str, seed: Option<u64>, rows: Vec<SummaryRow>) -> Result<(), CliError> {
    let passed = rows.iter().all(|r| r.passed != Some(false));
    let summary = RunSummary { command: command.to_string(), seed, passed, rows };
    report::save_json(&out.join(format!("{command}_summary.json")), "run_summary", &summary)?;
    if !passed {
        return Err(CliError::Verification(format!(
            "{command}: a checked property failed, see {command}_summary.json"
        )));
    }
    Ok(())
}

fn build_generator(cfg: &RunConfig) -> Result<GeneratorMatrix, CliError> {
    let spec = cfg.model.build()?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [grid] section".into()))?;
    let grid = build_grid(grid.n_radial, grid.n_angle, grid.r_max, cfg.model.d)?;
    Ok(assemble(&grid, &spec, cfg.assemble.normalization)?)
}

fn sigma_max_of(gen: &GeneratorMatrix) -> f64 {
    gen.sigma.iter().cloned().fold(0.0, f64::max)
}

pub fn assemble_cmd(cfg_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RunConfig = config::load(cfg_path)?;
    let gen = build_generator(&cfg)?;
    report::save_generator(&out.join("generator.json"), &gen)?;
    let mass_defect = gen.mass_defect();
    let residual = gen.equilibrium_residual();
    let rows = vec![
        info("n_radial", gen.n().to_string()),
        info("r_max", fmt_float(gen.grid.r_max)),
        info("gamma", fmt_float(gen.spec.gamma)),
        info("ell_b", fmt_float(gen.spec.ell_b)),
        info("normalization", format!("{:?}", gen.normalization)),
        check("mass_defect", mass_defect, 1e-8, mass_defect < 1e-8),
        check("equilibrium_residual", residual, 1e-3, residual < 1e-3),
    ];
    finish(out, "assemble", seed, rows)
}

pub fn spectrum_cmd(cfg_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RunConfig = config::load(cfg_path)?;
    let gap_threshold = cfg.spectrum.as_ref().map_or(1e-2, |s| s.gap_threshold);
    let gen = build_generator(&cfg)?;
    let rep = spectrum(&gen)?;
    let summary = SpectrumSummary::new(&rep, gap_threshold);
    report::save_json(&out.join("spectrum.json"), "spectrum", &summary)?;
    report::atomic_write(&out.join("eigenvalues.csv"), report::spectrum_csv(&rep).as_bytes())?;
    let mut rows = vec![
        info("lambda_star", fmt_float(rep.lambda_star)),
        info("eta", fmt_float(rep.eta)),
        info("sigma_max", fmt_float(rep.sigma_max)),
        info("mu2", fmt_float(rep.mu2)),
        info("no_gap", summary.no_gap.to_string()),
        check(
            "zero_mode_residual",
            rep.zero_mode_residual,
            1e-6,
            rep.zero_mode_residual < 1e-6,
        ),
    ];
    if gen.spec.is_hard() {
        rows.push(check(
            "gap_above_threshold",
            rep.lambda_star,
            gap_threshold,
            !summary.no_gap,
        ));
        let drift = (rep.mu2 / rep.lambda_star - 1.0).abs();
        rows.push(check("symmetrized_gap_agreement", drift, 0.05, drift < 0.05));
    }
    finish(out, "spectrum", seed, rows)
}

pub fn evolve_cmd(cfg_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RunConfig = config::load(cfg_path)?;
    let ev = cfg
        .evolve
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [evolve] section".into()))?;
    let gen = build_generator(&cfg)?;
    let m = gen.grid.maxwellian();
    let f0: Vec<f64> = match ev.initial {
        InitialSection::Bump { amplitude } => m
            .iter()
            .zip(&gen.grid.nodes)
            .map(|(&mm, &r)| mm * (1.0 + amplitude * (r * r - 3.0)).max(0.0))
            .collect(),
        InitialSection::Certified { rho0, damp } => {
            let g: Vec<f64> =
                m.iter().zip(&gen.grid.nodes).map(|(&mm, &r)| mm * (r * r - 3.0)).collect();
            certified_data(&gen, &g, rho0, damp)?
        }
    };
    let ecfg = EvolveConfig {
        t_final: ev.t_final,
        dt: ev.dt,
        method: ev.method,
        store_every: ev.store_every,
    };
    let traj = evolve(&gen, &f0, &ecfg)?;
    report::atomic_write(&out.join("trajectory.csv"), report::trajectory_csv(&traj).as_bytes())?;
    let m0 = traj.mass[0];
    let drift = traj.mass.iter().map(|&mv| (mv / m0 - 1.0).abs()).fold(0.0, f64::max);
    let min_component = traj
        .states
        .iter()
        .flat_map(|s| s.iter().cloned())
        .fold(f64::INFINITY, f64::min);
    let mut rows = vec![
        info("method", format!("{:?}", traj.method)),
        info("stored_samples", traj.times.len().to_string()),
        info("t_final", fmt_float(*traj.times.last().unwrap())),
        info("final_norm", fmt_float(*traj.norms.last().unwrap())),
        info("min_component", fmt_float(min_component)),
        check("mass_drift", drift, 1e-8, drift < 1e-8),
    ];
    if let Some(window) = ev.fit_window {
        let fit = fit_decay(&traj, window)?;
        rows.push(info("fit_rate", fmt_float(fit.rate)));
        rows.push(info("fit_residual", fmt_float(fit.residual)));
    }
    if let Some(c) = ev.envelope_c {
        let rf = RateFunctions::new(sigma_max_of(&gen)).map_err(CliError::Numerical)?;
        let env = envelope_check(&traj, &rf, c)?;
        report::atomic_write(&out.join("envelope.csv"), report::envelope_csv(&env).as_bytes())?;
        rows.push(check(
            "envelope_ratio_bounded",
            env.tail_max,
            2.0 * env.head_max,
            env.bounded,
        ));
    }
    finish(out, "evolve", seed, rows)
}

pub fn resolvent_cmd(cfg_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RunConfig = config::load(cfg_path)?;
    let rs = cfg
        .resolvent
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [resolvent] section".into()))?;
    if rs.alphas.is_empty() {
        return Err(CliError::Config("[resolvent] alphas must not be empty".into()));
    }
    if rs.alphas.iter().any(|&a| a == 0.0 || !a.is_finite()) {
        return Err(CliError::Config("[resolvent] alphas must be finite and nonzero".into()));
    }
    let gen = build_generator(&cfg)?;
    let sigma_max = sigma_max_of(&gen);
    let rf = RateFunctions::new(sigma_max).map_err(CliError::Numerical)?;
    let mut samples = Vec::with_capacity(rs.alphas.len());
    for &alpha in &rs.alphas {
        let norm = resolvent_norm(&gen, alpha)?;
        let theta = rf.theta(alpha.abs())?;
        samples.push(ResolventSample { alpha, norm, theta, ratio: norm / theta });
    }
    report::atomic_write(&out.join("resolvent.csv"), report::resolvent_csv(&samples).as_bytes())?;
    let sup = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let rows = vec![
        info("samples", samples.len().to_string()),
        info("sigma_max", fmt_float(sigma_max)),
        check("sup_ratio", sup, 1.0 + rs.ratio_tol, sup <= 1.0 + rs.ratio_tol),
    ];
    finish(out, "resolvent", seed, rows)
}

fn save_bound(out: &Path, name: &str, rep: &BoundReport) -> Result<(), CliError> {
    report::save_json(&out.join(format!("bound_{name}.json")), "bound_report", rep)?;
    report::atomic_write(
        &out.join(format!("bound_{name}.csv")),
        report::bounds_csv(rep).as_bytes(),
    )?;
    Ok(())
}

fn sample_point(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let r: f64 = rng.gen_range(0.05..6.0);
    let rho: f64 = rng.gen_range(0.05..6.0);
    let lambda: f64 = rng.gen_range(0.02..0.98);
    let lo = (r - rho).abs();
    let hi = r + rho;
    (r, rho, (lo + lambda * (hi - lo)).max(1e-3))
}

pub fn verify_cmd(cfg_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RunConfig = config::load(cfg_path)?;
    let vc = cfg.verify.unwrap_or_default();
    let spec = cfg.model.build()?;
    let seed_used = seed.unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_used);
    let qc = KernelQuadConfig { order: vc.order, skip_check: true, ..Default::default() };
    let mut rows = Vec::new();

    let closed_spec = ModelSpec::new(3, 1.0, 4.0 * PI, WeightSpec::Unit)?;
    let mut samples = Vec::new();
    while samples.len() < 200 {
        let (r, rho, d) = sample_point(&mut rng);
        let c = (r - rho) * (r + rho);
        let q = 0.5 * (d + c / d);
        let closed = 4.0 / (2.0 * PI).sqrt() / d * (-0.5 * q * q).exp();
        if closed < 1e-200 {
            continue;
        }
        let kg = kernel_gamma(&KernelPoint::new(r, rho, d)?, &closed_spec)?;
        samples.push(BoundSample::new(d, (kg / closed - 1.0).abs(), 1e-12));
    }
    let rep = BoundReport::dominance("hard_sphere_closed_form_defect", samples, 0.0);
    rows.push(check("closed_form_defect", rep.sup_ratio * 1e-12, 1e-12, rep.passed));
    save_bound(out, "closed_form", &rep)?;

    let mut samples = Vec::new();
    while samples.len() < vc.db_points {
        let (r, rho, d) = sample_point(&mut rng);
        let fwd = kernel_gamma(&KernelPoint::new(r, rho, d)?, &spec)? * maxwellian_radial(rho, 3);
        let bwd = kernel_gamma(&KernelPoint::new(rho, r, d)?, &spec)? * maxwellian_radial(r, 3);
        if bwd < 1e-250 {
            continue;
        }
        samples.push(BoundSample::new(d, (fwd / bwd - 1.0).abs(), 1e-8));
    }
    let rep = BoundReport::dominance("detailed_balance_defect", samples, 0.0);
    rows.push(check("detailed_balance_defect", rep.sup_ratio * 1e-8, 1e-8, rep.passed));
    save_bound(out, "detailed_balance", &rep)?;

    let exp_spec = ModelSpec::new(
        3,
        spec.gamma,
        spec.ell_b,
        WeightSpec::Exponential { a: vc.exp_a, s: 1.0 },
    )?;
    let alg_spec =
        ModelSpec::new(3, spec.gamma, spec.ell_b, WeightSpec::Algebraic { beta: vc.alg_beta })?;
    let envelope_sweep = |wspec: &ModelSpec, s: f64| -> Result<Vec<(f64, f64)>, CliError> {
        let mut pts = Vec::new();
        let mut w = 0.5;
        while w < qc.r_max {
            let h = h_gamma(w, wspec, &qc)?;
            let env = (1.0 + w.powf(wspec.gamma - s)) * weight_inv_radial(w, &wspec.weight);
            pts.push((w, h / env));
            w += 0.75;
        }
        Ok(pts)
    };
    let mut c0 = f64::NAN;
    match envelope_sweep(&exp_spec, 1.0) {
        Ok(pts) => {
            let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let samples =
                pts.iter().map(|&(w, r)| BoundSample::new(w, r, 4.0 * min)).collect::<Vec<_>>();
            let rep = BoundReport::dominance("column_mass_envelope_spread_exponential", samples, 0.0);
            c0 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            rows.push(check("column_mass_constant_exponential", c0, 4.0 * min, rep.passed));
            save_bound(out, "column_mass_exponential", &rep)?;
        }
        Err(e) => rows.push(info("column_mass_constant_exponential", format!("skipped: {e}"))),
    }
    match envelope_sweep(&alg_spec, 2.0) {
        Ok(pts) => {
            let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let samples =
                pts.iter().map(|&(w, r)| BoundSample::new(w, r, 4.0 * min)).collect::<Vec<_>>();
            let rep = BoundReport::dominance("column_mass_envelope_spread_algebraic", samples, 0.0);
            let sup = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            rows.push(check("column_mass_constant_algebraic", sup, 4.0 * min, rep.passed));
            save_bound(out, "column_mass_algebraic", &rep)?;
        }
        Err(e) => rows.push(info("column_mass_constant_algebraic", format!("skipped: {e}"))),
    }

    let squared = |v: f64| lemma_g_integral(v, &spec, &qc);
    match squared(0.0) {
        Ok(at_zero) => {
            let mut samples = Vec::new();
            for &v in &[0.0, 1.0, 2.0, 4.0, 6.0] {
                samples.push(BoundSample::new(v, (1.0 + v) * squared(v)?, 3.0 * at_zero));
            }
            let rep = BoundReport::dominance("squared_kernel_weighted_spread", samples, 0.0);
            rows.push(check("squared_kernel_spread", rep.sup_ratio * 3.0, 3.0, rep.passed));
            save_bound(out, "squared_kernel", &rep)?;
        }
        Err(e) => rows.push(info("squared_kernel_spread", format!("skipped: {e}"))),
    }

    if c0.is_finite() {
        let sigma0 = 0.8;
        match dissipativity_radius(&exp_spec, c0, sigma0, 16.0) {
            Ok(r_diss) => {
                let mut samples = Vec::new();
                for k in 1..=100 {
                    let v = r_diss + (16.0 - r_diss) * k as f64 / 100.0;
                    let lhs = c0 * (1.0 + v.powf(exp_spec.gamma - 1.0));
                    let rhs = sigma0 * (1.0 + v).powf(exp_spec.gamma) - sigma0;
                    samples.push(BoundSample::new(v, lhs, rhs));
                }
                let rep = BoundReport::dominance("dissipativity_margin_beyond_radius", samples, 1e-9);
                rows.push(check("dissipativity_radius", r_diss, 16.0, rep.passed && r_diss > 0.0));
                save_bound(out, "dissipativity", &rep)?;
            }
            Err(e) => rows.push(info("dissipativity_radius", format!("skipped: {e}"))),
        }
    } else {
        rows.push(info("dissipativity_radius", "skipped: no envelope constant".into()));
    }

    let weighted_tail = |r_tail: f64| dp_tail(2.0, r_tail, &exp_spec, &qc);
    match weighted_tail(2.0) {
        Ok(_) => {
            let mut samples = Vec::new();
            for k in 2..=7 {
                let r_tail = k as f64;
                samples.push(BoundSample::new(r_tail, weighted_tail(r_tail)?, 1.0));
            }
            let rep = BoundReport::decreasing("free_flow_tail_with_decaying_weight", samples);
            let last = rep.samples.last().unwrap().lhs;
            rows.push(check(
                "weighted_tail_vanishes",
                last,
                1e-8,
                rep.passed && last < 1e-8,
            ));
            save_bound(out, "tail_weighted", &rep)?;
        }
        Err(e) => rows.push(info("weighted_tail_vanishes", format!("skipped: {e}"))),
    }

    let unit_spec = ModelSpec::new(3, spec.gamma, spec.ell_b, WeightSpec::Unit)?;
    let mut samples = Vec::new();
    for k in 0..6 {
        let r_tail = 1.0 + 0.5 * k as f64;
        samples.push(BoundSample::new(r_tail, dp_tail(2.0 * r_tail, r_tail, &unit_spec, &qc)?, 0.3));
    }
    let rep = BoundReport::dominance("free_flow_tail_without_weight", samples, 0.0);
    let floor = rep.samples.iter().map(|s| s.lhs).fold(f64::INFINITY, f64::min);
    rows.push(check("unit_weight_tail_persists", floor, 0.3, !rep.passed && floor > 0.3));
    save_bound(out, "tail_unit_weight", &rep)?;

    finish(out, "verify", Some(seed_used), rows)
}

pub fn report_cmd(cfg_path: &Path, out: &Path, _seed: Option<u64>) -> Result<(), CliError> {
    let cfg: ReportConfig = config::load(cfg_path)?;
    if cfg.report.inputs.is_empty() {
        return Err(CliError::Config("[report] inputs must not be empty".into()));
    }
    let mut rows = Vec::new();
    let mut all_passed = true;
    for input in &cfg.report.inputs {
        let path = {
            let p = Path::new(input);
            if p.is_absolute() { p.to_path_buf() } else { out.join(p) }
        };
        let summary: RunSummary = report::load_json(&path, "run_summary")?;
        for row in &summary.rows {
            let status = match row.passed {
                Some(true) => "pass".to_string(),
                Some(false) => {
                    all_passed = false;
                    "FAIL".to_string()
                }
                None => String::new(),
            };
            rows.push(vec![
                summary.command.clone(),
                row.property.clone(),
                row.value.clone(),
                row.threshold.clone().unwrap_or_default(),
                status,
            ]);
        }
    }
    let table = report::markdown_table(&["run", "property", "value", "threshold", "status"], &rows);
    let text = format!("# {}\n\n{table}", cfg.report.title);
    report::atomic_write(&out.join("report.md"), text.as_bytes())?;
    if !all_passed {
        return Err(CliError::Verification("an aggregated run reports a failed check".into()));
    }
    Ok(())
}
