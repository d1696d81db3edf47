//! End-to-end simulation driver and run-directory writer.

use std::path::Path;

use hyprl_core::dynamics::{make_initial_state, StateSnapshot, TimeStepper};
use hyprl_core::grid::{write_field, FieldGrid, ScalarField};
use hyprl_core::initdata::generate;
use hyprl_core::monitor::{choose_mu, BootstrapLedger, Verdict, VerdictReport};
use hyprl_core::norms::{evaluate, gevrey_space_norm, tangential_u_check, NormCaps, NormReport, TangentialCheck};
use hyprl_core::weights::RadiusSchedule;
use hyprl_core::{Error, Result};

use crate::config::{MuSetting, RunConfig};
use crate::plots;

/// Everything a run produces, in memory; `write_run_dir` persists it.
pub struct RunData {
    pub config: RunConfig,
    pub mu: f64,
    pub t_final: f64,
    pub steps: usize,
    pub reports: Vec<NormReport>,
    pub ledger: BootstrapLedger,
    /// Relative `lambda_evolved - lambda_algebraic` defect per record.
    pub lambda_defects: Vec<(f64, f64)>,
    /// Boundary-condition violation per record.
    pub boundary_residuals: Vec<(f64, f64)>,
    /// Relative discrete divergence per record.
    pub divergences: Vec<(f64, f64)>,
    pub tangential: Vec<TangentialCheck>,
    /// `(time, u, phi, f, lambda)` dumps.
    pub dumps: Vec<(f64, StateSnapshot)>,
    pub blowup: Option<f64>,
}

impl RunData {
    pub fn verdict(&self) -> Verdict {
        self.ledger.verdict()
    }

    pub fn verdict_report(&self) -> VerdictReport {
        self.ledger.verdict_report(self.mu)
    }

    pub fn max_lambda_defect(&self) -> f64 {
        self.lambda_defects.iter().fold(0.0f64, |a, &(_, d)| a.max(d))
    }

    pub fn max_boundary_residual(&self) -> f64 {
        self.boundary_residuals.iter().fold(0.0f64, |a, &(_, d)| a.max(d))
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergences.iter().fold(0.0f64, |a, &(_, d)| a.max(d))
    }
}

/// Relative discrete divergence `max |dx u + dy v| / max |dx u|`.
fn divergence_residual(s: &StateSnapshot) -> Result<f64> {
    let dxu = s.u.dx()?;
    let v = s.velocity_v()?;
    let div = dxu.add(&v.dy()?)?;
    let scale = dxu.max_abs();
    if scale == 0.0 {
        Ok(0.0)
    } else {
        Ok(div.max_abs() / scale)
    }
}

fn record(
    data: &mut RunData,
    s: &StateSnapshot,
    schedule: &RadiusSchedule,
    caps: &NormCaps,
) -> Result<()> {
    let rho = schedule.radius_at(s.t.min(schedule.t_end))?;
    let report = evaluate(s, rho, caps)?;
    data.ledger.record(&report)?;
    data.lambda_defects.push((s.t, s.lambda_defect()?));
    data.boundary_residuals.push((s.t, s.boundary_residual()));
    data.divergences.push((s.t, divergence_residual(s)?));
    data.tangential.push(tangential_u_check(s, rho, caps)?);
    data.reports.push(report);
    Ok(())
}

/// Resolve the shrink rate: fixed, or the step policy fed by the empirical
/// initial constant and a pilot differential-inequality constant.
pub fn resolve_mu(config: &RunConfig, c0_emp: f64, data_norms: f64) -> f64 {
    match &config.schedule.mu {
        MuSetting::Fixed(mu) => *mu,
        MuSetting::Auto(_) => choose_mu(config.schedule.pilot_c, c0_emp, data_norms),
    }
}

/// Run the full monitored simulation described by the config.
pub fn run(config: &RunConfig) -> Result<RunData> {
    config.validate()?;
    let grid = FieldGrid::new(config.grid.nx, config.grid.ny, config.grid.ymax, config.model.ell)?;
    let caps = NormCaps {
        mmax: config.norms.mmax,
        kmax: config.norms.kmax,
        tail_tol: config.norms.tail_tol,
    };

    let u0 = generate(&config.u0, &grid)?;
    let u1 = generate(&config.u1, &grid)?;
    let data_norms = |rho: f64| -> Result<f64> {
        let g0 = gevrey_space_norm(&u0, rho, grid.ell, &caps)?;
        let g1 = gevrey_space_norm(&u1, rho, grid.ell + 1.0, &caps)?;
        Ok(g0.value_sq.sqrt() + g1.value_sq.sqrt())
    };
    let rho0 = config.schedule.rho0;
    let data_2rho0 = data_norms(2.0 * rho0)?;
    let data_rho0 = data_norms(rho0)?;

    let state0 = make_initial_state(&u0, &u1, config.model.eta)?;
    let x0 = evaluate(&state0, rho0, &caps)?.x2.max(0.0).sqrt();
    let c0_emp = if data_2rho0 > 0.0 { x0 / data_2rho0 } else { 0.0 };

    let mu = resolve_mu(config, c0_emp, data_2rho0);
    let t_final = config.schedule.t_final.unwrap_or(1.0 / mu);
    let schedule = RadiusSchedule::new(rho0, mu, Some(t_final))?;
    let stepper = TimeStepper::new(config.schedule.cfl_safety, config.schedule.dt_max)?;

    let mut data = RunData {
        config: config.clone(),
        mu,
        t_final,
        steps: 0,
        reports: Vec::new(),
        ledger: BootstrapLedger::new(c0_emp, data_2rho0, data_rho0),
        lambda_defects: Vec::new(),
        boundary_residuals: Vec::new(),
        divergences: Vec::new(),
        tangential: Vec::new(),
        dumps: Vec::new(),
        blowup: None,
    };

    let mut s = state0;
    record(&mut data, &s, &schedule, &caps)?;
    data.dumps.push((s.t, s.clone()));

    let dump_interval = t_final / (config.output.field_dumps.max(2) - 1) as f64;
    let mut next_dump = dump_interval;
    let mut since_record = 0usize;
    while s.t < t_final {
        let remaining = t_final - s.t;
        let dt = stepper.cfl_dt(&s)?.min(stepper.dt_max).min(remaining);
        match stepper.step_fixed_dt(&s, dt, None) {
            Ok(next) => s = next,
            Err(Error::Blowup { t, .. }) => {
                data.blowup = Some(t);
                data.ledger.mark_blowup(t);
                return Ok(data);
            }
            Err(e) => return Err(e),
        }
        data.steps += 1;
        since_record += 1;
        let done = s.t >= t_final - 1e-14;
        if since_record >= config.output.cadence || done {
            since_record = 0;
            record(&mut data, &s, &schedule, &caps)?;
        }
        if s.t >= next_dump - 1e-14 || done {
            next_dump += dump_interval;
            data.dumps.push((s.t, s.clone()));
        }
    }
    Ok(data)
}

/// Flat summary written as `verdict.json`.
#[derive(serde::Serialize)]
pub struct RunSummary {
    #[serde(flatten)]
    pub verdict: VerdictReport,
    pub t_final: f64,
    pub steps: usize,
    pub max_lambda_defect: f64,
    pub max_boundary_residual: f64,
    pub max_divergence: f64,
    pub records: usize,
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// `norms.csv`: one row per record with the honesty channels inline.
pub fn norms_csv(data: &RunData) -> String {
    let mut out = String::from(
        "t,rho,x2,y2,tail_ratio_m,tail_ratio_k,unresolved_mass,noise_flags,converged\n",
    );
    for r in &data.reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.rho),
            fmt(r.x2),
            fmt(r.y2),
            fmt(r.tail_ratio_m),
            fmt(r.tail_ratio_k),
            fmt(r.unresolved_mass),
            r.noise_flags.len(),
            r.converged
        ));
    }
    out
}

/// Persist a finished run: config snapshot, field dumps, time series,
/// verdict, plot. Partial data from a blown-up run is written the same way.
pub fn write_run_dir(dir: &Path, data: &RunData) -> Result<()> {
    std::fs::create_dir_all(dir.join("fields"))?;
    std::fs::write(dir.join("config.toml"), data.config.to_toml())?;
    std::fs::write(dir.join("norms.csv"), norms_csv(data))?;
    std::fs::write(dir.join("ledger.csv"), data.ledger.to_csv(data.mu))?;

    let summary = RunSummary {
        verdict: data.verdict_report(),
        t_final: data.t_final,
        steps: data.steps,
        max_lambda_defect: data.max_lambda_defect(),
        max_boundary_residual: data.max_boundary_residual(),
        max_divergence: data.max_divergence(),
        records: data.reports.len(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Format(format!("verdict serialization: {e}")))?;
    std::fs::write(dir.join("verdict.json"), json)?;

    for (i, (t, s)) in data.dumps.iter().enumerate() {
        let name = |field: &str| dir.join("fields").join(format!("{field}_{i:04}.bin"));
        let write = |field: &str, f: &ScalarField| write_field(&name(field), f, *t);
        write("u", &s.u)?;
        write("phi", &s.phi)?;
        write("f", &s.f)?;
        write("lambda", &s.lambda)?;
    }

    std::fs::write(dir.join("plots.svg"), plots::ledger_svg(&data.ledger))?;
    Ok(())
}

/// Simulate and persist; returns the verdict for exit-code mapping.
pub fn simulate_to_dir(config: &RunConfig, dir: &Path) -> Result<Verdict> {
    let data = run(config)?;
    write_run_dir(dir, &data)?;
    Ok(data.verdict_report().verdict)
}

/// Rebuild a ledger from a run directory and re-analyze it offline.
pub fn reanalyze(dir: &Path, mu_override: Option<f64>) -> Result<RunSummary> {
    let verdict_text = std::fs::read_to_string(dir.join("verdict.json"))?;
    let old: serde_json::Value = serde_json::from_str(&verdict_text)
        .map_err(|e| Error::Format(format!("verdict.json: {e}")))?;
    let get = |k: &str| old[k].as_f64().ok_or_else(|| Error::Format(format!("verdict.json missing {k}")));
    let c0 = get("c0_emp")?;
    let dn = get("data_norms")?;
    let dn0 = get("data_norms_at_rho0")?;
    let mu = mu_override.unwrap_or(get("mu")?);

    let mut ledger = BootstrapLedger::new(c0, dn, dn0);
    let csv = std::fs::read_to_string(dir.join("norms.csv"))?;
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 4 {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("norms.csv: {e}")));
        let mut report = NormReport {
            t: parse(cols[0])?,
            rho: parse(cols[1])?,
            x2: parse(cols[2])?,
            y2: parse(cols[3])?,
            terms_uaux: vec![],
            terms_lambda: vec![],
            terms_phi: vec![],
            terms_du: vec![],
            tail_ratio_m: 0.0,
            tail_ratio_k: 0.0,
            noise_flags: vec![],
            unresolved_mass: 0.0,
            converged: true,
        };
        if cols.len() >= 9 {
            report.tail_ratio_m = parse(cols[4])?;
            report.tail_ratio_k = parse(cols[5])?;
            report.unresolved_mass = parse(cols[6])?;
            report.converged = cols[8].trim() == "true";
        }
        ledger.record(&report)?;
    }
    if let Some(t) = old["verdict"].get("t").and_then(|v| v.as_f64()) {
        if old["verdict"]["kind"] == "blowup_at" {
            ledger.mark_blowup(t);
        }
    }
    Ok(RunSummary {
        verdict: ledger.verdict_report(mu),
        t_final: old["t_final"].as_f64().unwrap_or(f64::NAN),
        steps: old["steps"].as_u64().unwrap_or(0) as usize,
        max_lambda_defect: old["max_lambda_defect"].as_f64().unwrap_or(f64::NAN),
        max_boundary_residual: old["max_boundary_residual"].as_f64().unwrap_or(f64::NAN),
        max_divergence: old["max_divergence"].as_f64().unwrap_or(f64::NAN),
        records: ledger.samples().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        let mut c = RunConfig::parse(crate::config::SAMPLE_CONFIG).unwrap();
        c.schedule.t_final = Some(0.05);
        c.output.cadence = 10;
        c
    }

    #[test]
    fn zero_data_run_holds_with_zero_norm() {
        let mut c = small_config();
        c.u0.amplitude = 0.0;
        let data = run(&c).unwrap();
        assert_eq!(data.verdict(), Verdict::Holds);
        for r in &data.reports {
            assert_eq!(r.x2, 0.0);
        }
    }

    #[test]
    fn small_run_writes_complete_directory() {
        let c = small_config();
        let data = run(&c).unwrap();
        assert!(data.reports.len() >= 2);
        assert!(data.max_boundary_residual() < 1e-12);

        let dir = std::env::temp_dir().join("hyprl_runner_test");
        let _ = std::fs::remove_dir_all(&dir);
        write_run_dir(&dir, &data).unwrap();
        for name in ["config.toml", "norms.csv", "ledger.csv", "verdict.json", "plots.svg"] {
            assert!(dir.join(name).exists(), "{name} missing");
        }
        assert!(dir.join("fields/u_0000.bin").exists());

        let summary = reanalyze(&dir, None).unwrap();
        assert_eq!(summary.records, data.reports.len());
        assert_eq!(summary.verdict.verdict, data.verdict_report().verdict);
    }

    #[test]
    fn determinism_bitwise_csv() {
        let c = small_config();
        let a = norms_csv(&run(&c).unwrap());
        let b = norms_csv(&run(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn auto_mu_resolves_through_policy() {
        let mut c = small_config();
        c.schedule.mu = MuSetting::Auto("auto".into());
        c.schedule.pilot_c = 0.0;
        let data = run(&c).unwrap();
        assert_eq!(data.mu, 1.0);
    }
}
