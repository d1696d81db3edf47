//! Bootstrap monitoring of the a priori energy estimate.
//!
//! Along a run the ledger tracks `X(t)`, `Y(t)` and the running quantity
//! `sup X + (int Y^2)^{1/2}`, compares it against the bootstrap budget
//! `2 C0 (||u0|| + ||u1||)` (data norms at radius `2 rho0`), and fits the
//! smallest constant `C` making the sampled differential inequality
//!
//! ```text
//!   1/2 d/dt X^2  <=  (-mu + C + C X^4) Y^2
//! ```
//!
//! hold at every interior sample (`d/dt X^2` by centered differences). The
//! constants are empirical: the monitor fits them from the run, it never
//! asserts them.

use crate::error::{Error, Result};
use crate::norms::NormReport;

/// One recorded instant.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Sample {
    pub t: f64,
    pub rho: f64,
    pub x: f64,
    pub x2: f64,
    pub y2: f64,
    /// Running `int_0^t Y^2 ds` (trapezoid).
    pub int_y2: f64,
    /// Running `sup X`.
    pub sup_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "t")]
pub enum Verdict {
    Holds,
    ViolatedAt(f64),
    BlowupAt(f64),
    Inconclusive,
}

/// Result of fitting the differential inequality.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiffCheck {
    /// Smallest constant making the inequality hold at every interior sample.
    pub empirical_c: f64,
    /// Per-sample `(t, margin)` with the fitted constant: right side minus
    /// left side, nonnegative by construction (zero at the binding sample).
    pub margins: Vec<(f64, f64)>,
    /// Centered-difference estimates `(t, d/dt X^2)`.
    pub dx2_dt: Vec<(f64, f64)>,
    /// True when the derivative estimate is too sign-noisy to trust.
    pub inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct BootstrapLedger {
    /// Empirical initial constant `X(0) / (||u0|| + ||u1||)`.
    pub c0_emp: f64,
    /// Data norms `||u0||_{2 rho0, l} + ||u1||_{2 rho0, l+1}`.
    pub data_norms: f64,
    /// Same sum evaluated at `rho0` instead of `2 rho0` (logged for the
    /// radius-convention comparison).
    pub data_norms_at_rho0: f64,
    /// Bootstrap budget `2 c0_emp data_norms`.
    pub budget: f64,
    samples: Vec<Sample>,
    blowup: Option<f64>,
}

impl BootstrapLedger {
    pub fn new(c0_emp: f64, data_norms: f64, data_norms_at_rho0: f64) -> Self {
        BootstrapLedger {
            c0_emp,
            data_norms,
            data_norms_at_rho0,
            budget: 2.0 * c0_emp * data_norms,
            samples: Vec::new(),
            blowup: None,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Append one instant; times must be strictly increasing.
    pub fn record(&mut self, report: &NormReport) -> Result<()> {
        if !(report.x2.is_finite() && report.y2.is_finite()) {
            self.blowup.get_or_insert(report.t);
            return Err(Error::Blowup { t: report.t, context: "non-finite norm sample".into() });
        }
        let x = report.x2.max(0.0).sqrt();
        let (int_y2, sup_x) = match self.samples.last() {
            None => (0.0, x),
            Some(prev) => {
                if report.t <= prev.t {
                    return Err(Error::domain(format!(
                        "non-monotone ledger time: {} after {}",
                        report.t, prev.t
                    )));
                }
                let dt = report.t - prev.t;
                (prev.int_y2 + 0.5 * dt * (prev.y2 + report.y2), prev.sup_x.max(x))
            }
        };
        self.samples.push(Sample {
            t: report.t,
            rho: report.rho,
            x,
            x2: report.x2,
            y2: report.y2,
            int_y2,
            sup_x,
        });
        Ok(())
    }

    /// Declare numerical blowup (non-finite fields or exhausted CFL retries).
    pub fn mark_blowup(&mut self, t: f64) {
        self.blowup.get_or_insert(t);
    }

    pub fn sup_x(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.sup_x)
    }

    pub fn int_y2(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.int_y2)
    }

    /// `(sup X + (int Y^2)^{1/2}) / X(0)`: the directly checkable shadow of
    /// the decay conclusion. `None` before the first sample or at `X(0) = 0`.
    pub fn dssert_shadow(&self) -> Option<f64> {
        let first = self.samples.first()?;
        if first.x == 0.0 {
            return None;
        }
        Some((self.sup_x() + self.int_y2().sqrt()) / first.x)
    }

    /// Fit the smallest `C` for the differential inequality at the given `mu`.
    pub fn check_differential_inequality(&self, mu: f64) -> Result<DiffCheck> {
        let n = self.samples.len();
        if n < 3 {
            return Err(Error::domain(format!("need at least 3 samples, have {n}")));
        }
        let mut dx2_dt = Vec::with_capacity(n - 2);
        for i in 1..n - 1 {
            let a = &self.samples[i - 1];
            let b = &self.samples[i + 1];
            dx2_dt.push((self.samples[i].t, (b.x2 - a.x2) / (b.t - a.t)));
        }
        // sign-noise heuristic: flips among derivative entries that are
        // significant relative to the largest one
        let peak = dx2_dt.iter().fold(0.0f64, |m, &(_, d)| m.max(d.abs()));
        let significant: Vec<f64> = dx2_dt
            .iter()
            .map(|&(_, d)| d)
            .filter(|d| d.abs() > 0.05 * peak)
            .collect();
        let flips = significant.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        let inconclusive = significant.len() >= 4 && flips * 3 > significant.len();

        let mut c = 0.0f64;
        for (idx, &(_, d)) in dx2_dt.iter().enumerate() {
            let s = &self.samples[idx + 1];
            if s.y2 > 0.0 {
                let needed = (0.5 * d + mu * s.y2) / ((1.0 + s.x2 * s.x2) * s.y2);
                c = c.max(needed);
            }
        }
        let margins = dx2_dt
            .iter()
            .enumerate()
            .map(|(idx, &(t, d))| {
                let s = &self.samples[idx + 1];
                (t, (-mu + c + c * s.x2 * s.x2) * s.y2 - 0.5 * d)
            })
            .collect();
        Ok(DiffCheck { empirical_c: c, margins, dx2_dt, inconclusive })
    }

    /// Margins for externally supplied constants (e.g. a pilot-run `C`).
    pub fn margins_with(&self, mu: f64, c: f64) -> Result<Vec<(f64, f64)>> {
        let check = self.check_differential_inequality(mu)?;
        Ok(check
            .dx2_dt
            .iter()
            .enumerate()
            .map(|(idx, &(t, d))| {
                let s = &self.samples[idx + 1];
                (t, (-mu + c + c * s.x2 * s.x2) * s.y2 - 0.5 * d)
            })
            .collect())
    }

    /// Bootstrap verdict: blowup dominates, then the first budget crossing.
    pub fn verdict(&self) -> Verdict {
        if let Some(t) = self.blowup {
            return Verdict::BlowupAt(t);
        }
        for s in &self.samples {
            if s.sup_x + s.int_y2.sqrt() > self.budget {
                return Verdict::ViolatedAt(s.t);
            }
        }
        Verdict::Holds
    }

    /// CSV export: `t,rho,x,y2,int_y2,dx2_dt,margin` (derivative columns
    /// empty at the end points).
    pub fn to_csv(&self, mu: f64) -> String {
        let check = self.check_differential_inequality(mu).ok();
        let mut out = String::from("t,rho,x,y2,int_y2,dx2_dt,margin\n");
        for (i, s) in self.samples.iter().enumerate() {
            let (d, m) = match &check {
                Some(c) if i >= 1 && i + 1 < self.samples.len() => {
                    (format!("{:e}", c.dx2_dt[i - 1].1), format!("{:e}", c.margins[i - 1].1))
                }
                _ => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{d},{m}\n",
                s.t, s.rho, s.x, s.y2, s.int_y2
            ));
        }
        out
    }

    /// Full JSON verdict object for a run directory.
    pub fn verdict_report(&self, mu: f64) -> VerdictReport {
        let check = self.check_differential_inequality(mu).ok();
        let verdict = match (&check, self.verdict()) {
            (Some(c), Verdict::Holds) if c.inconclusive => Verdict::Inconclusive,
            (_, v) => v,
        };
        VerdictReport {
            verdict,
            mu,
            c0_emp: self.c0_emp,
            data_norms: self.data_norms,
            data_norms_at_rho0: self.data_norms_at_rho0,
            budget: self.budget,
            sup_x: self.sup_x(),
            int_y2: self.int_y2(),
            dssert_shadow: self.dssert_shadow(),
            empirical_c: check.as_ref().map(|c| c.empirical_c),
            derivative_inconclusive: check.as_ref().map(|c| c.inconclusive),
            samples: self.samples.len(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub mu: f64,
    pub c0_emp: f64,
    pub data_norms: f64,
    pub data_norms_at_rho0: f64,
    pub budget: f64,
    pub sup_x: f64,
    pub int_y2: f64,
    pub dssert_shadow: Option<f64>,
    pub empirical_c: Option<f64>,
    pub derivative_inconclusive: Option<bool>,
    pub samples: usize,
}

/// Step-size policy `mu = 2 (1/2 + C + C (2 C0)^4 d^4)` with `d` the data
/// norms; the factor 2 is the safety margin, and the result never drops
/// below the floor `mu = 1`.
pub fn choose_mu(c_emp: f64, c0_emp: f64, data_norms: f64) -> f64 {
    let quartic = c_emp * (2.0 * c0_emp).powi(4) * data_norms.powi(4);
    (2.0 * (0.5 + c_emp + quartic)).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(t: f64, rho: f64, x2: f64, y2: f64) -> NormReport {
        NormReport {
            t,
            rho,
            x2,
            y2,
            terms_uaux: vec![],
            terms_lambda: vec![],
            terms_phi: vec![],
            terms_du: vec![],
            tail_ratio_m: 0.0,
            tail_ratio_k: 0.0,
            noise_flags: vec![],
            unresolved_mass: 0.0,
            converged: true,
        }
    }

    #[test]
    fn record_examples() {
        let mut ledger = BootstrapLedger::new(1.0, 1.0, 1.0);
        ledger.record(&report(0.0, 0.1, 4.0, 9.0)).unwrap();
        assert_eq!(ledger.sup_x(), 2.0);
        assert_eq!(ledger.int_y2(), 0.0);

        // constant Y over one interval: trapezoid gives y2 * dt
        ledger.record(&report(0.5, 0.1, 4.0, 9.0)).unwrap();
        assert!((ledger.int_y2() - 4.5).abs() < 1e-15);

        // non-monotone time rejected
        assert!(ledger.record(&report(0.25, 0.1, 1.0, 1.0)).is_err());
    }

    #[test]
    fn sup_of_decaying_series_is_initial_value() {
        let mut ledger = BootstrapLedger::new(1.0, 1.0, 1.0);
        for i in 0..50 {
            let t = i as f64 * 0.02;
            let x0 = 3.0f64;
            let x = x0 * (-t).exp();
            ledger.record(&report(t, 0.1, x * x, x * x)).unwrap();
        }
        assert_eq!(ledger.sup_x(), 3.0);
        let shadow = ledger.dssert_shadow().unwrap();
        assert!(shadow > 1.0);
    }

    #[test]
    fn zero_trajectory_fits_zero_constant() {
        let mut ledger = BootstrapLedger::new(0.0, 0.0, 0.0);
        for i in 0..5 {
            ledger.record(&report(i as f64 * 0.1, 0.1, 0.0, 0.0)).unwrap();
        }
        let check = ledger.check_differential_inequality(1.0).unwrap();
        assert_eq!(check.empirical_c, 0.0);
        assert!(check.margins.iter().all(|&(_, m)| m >= 0.0));
        assert_eq!(ledger.verdict(), Verdict::Holds);
    }

    #[test]
    fn saturating_synthetic_series_is_a_boundary_case() {
        // X^2 = e^{-2 mu t}, Y^2 = X^2 saturates the inequality with C = 0
        let mu = 2.0;
        let dt = 1e-3;
        let mut ledger = BootstrapLedger::new(1.0, 1.0, 1.0);
        for i in 0..200 {
            let t = i as f64 * dt;
            let x2 = (-2.0 * mu * t).exp();
            ledger.record(&report(t, 0.1, x2, x2)).unwrap();
        }
        let check = ledger.check_differential_inequality(mu).unwrap();
        assert_eq!(check.empirical_c, 0.0);
        assert!(!check.inconclusive);
        // margin is the difference-scheme error of the saturated equality
        let worst = check.margins.iter().fold(0.0f64, |a, &(_, m)| a.max(m.abs()));
        assert!(worst < 10.0 * mu * mu * mu * dt * dt, "worst margin {worst:e}");
    }

    #[test]
    fn noisy_derivative_is_inconclusive() {
        let mut ledger = BootstrapLedger::new(1.0, 2.0, 2.0);
        for i in 0..40 {
            let t = i as f64 * 0.1;
            let x2 = 1.0 + 0.3 * (2.1 * i as f64).sin();
            ledger.record(&report(t, 0.1, x2, 1.0)).unwrap();
        }
        let check = ledger.check_differential_inequality(1.0).unwrap();
        assert!(check.inconclusive);
        let vr = ledger.verdict_report(1.0);
        assert_eq!(vr.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn verdict_detects_budget_crossing_and_blowup() {
        // budget = 2 * 1 * 0.5 = 1
        let mut ledger = BootstrapLedger::new(1.0, 0.5, 0.5);
        ledger.record(&report(0.0, 0.1, 0.25, 0.0)).unwrap();
        ledger.record(&report(0.1, 0.1, 0.64, 0.0)).unwrap();
        assert_eq!(ledger.verdict(), Verdict::Holds);
        ledger.record(&report(0.2, 0.1, 1.44, 0.0)).unwrap();
        assert_eq!(ledger.verdict(), Verdict::ViolatedAt(0.2));

        ledger.mark_blowup(0.3);
        assert_eq!(ledger.verdict(), Verdict::BlowupAt(0.3));
    }

    #[test]
    fn choose_mu_examples() {
        assert_eq!(choose_mu(0.0, 1.0, 0.0), 1.0);
        assert_eq!(choose_mu(1.0, 1.0, 1.0), 35.0);
        // doubling the data norms scales the quartic term by 16
        let base = choose_mu(1.0, 1.0, 1.0);
        let doubled = choose_mu(1.0, 1.0, 2.0);
        assert_eq!(doubled - 3.0, 16.0 * (base - 3.0));
    }

    #[test]
    fn csv_and_json_exports_have_expected_shape() {
        let mut ledger = BootstrapLedger::new(1.0, 1.0, 1.0);
        for i in 0..5 {
            let t = i as f64 * 0.1;
            let x2 = (-t).exp();
            ledger.record(&report(t, 0.1, x2, x2)).unwrap();
        }
        let csv = ledger.to_csv(1.0);
        assert!(csv.starts_with("t,rho,x,y2,int_y2,dx2_dt,margin\n"));
        assert_eq!(csv.lines().count(), 6);
        // interior rows carry derivative estimates
        assert!(csv.lines().nth(2).unwrap().split(',').nth(5).unwrap().len() > 0);

        let vr = ledger.verdict_report(1.0);
        let json = serde_json::to_string(&vr).unwrap();
        assert!(json.contains("\"verdict\""));
        assert!(json.contains("\"budget\""));
    }
}
