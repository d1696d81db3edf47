//! Factorial weight sequences and the shrinking analyticity-radius schedule.
//!
//! The weights
//!
//! ```text
//! H[rho, m, k] = rho^(m+k+1) (m+k+1)^9 / ((m+k)! (m!)^(1/2))
//! N[rho, m]    = H[rho, m, 0] = rho^(m+1) (m+1)^9 / (m!)^(3/2)
//! L[rho, k]    = H[rho, 1, k] = rho^(k+2) (k+2)^9 / (k+1)!
//! ```
//!
//! overflow `f64` well before the index ranges the norm tail studies need, so
//! everything is evaluated in log space. `ln n!` is accumulated with
//! compensated summation, which keeps the `H[m,0] = N[m]` identity bit-exact
//! (both sides are computed from the very same log expression) and the
//! squared weights within 1e-12 of the exact-rational mirror used by the
//! verifier module.

use crate::error::{Error, Result};

/// Cumulative `ln i!` table, Kahan-compensated.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        table.push(0.0);
        for i in 1..=max_n {
            let term = (i as f64).ln() - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
            table.push(sum);
        }
        LnFactorial { table }
    }

    #[inline]
    pub fn ln(&self, n: usize) -> f64 {
        self.table[n]
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }
}

/// `ln H[rho, m, k]`.
#[inline]
pub fn ln_weight_h(lnf: &LnFactorial, rho: f64, m: usize, k: usize) -> f64 {
    let s = m + k;
    (s as f64 + 1.0) * rho.ln() + 9.0 * (s as f64 + 1.0).ln() - lnf.ln(s) - 0.5 * lnf.ln(m)
}

/// `ln N[rho, m]`; same expression as `ln H[rho, m, 0]`, bit for bit.
#[inline]
pub fn ln_weight_n(lnf: &LnFactorial, rho: f64, m: usize) -> f64 {
    ln_weight_h(lnf, rho, m, 0)
}

/// `N[rho, m]`, one-off evaluation.
pub fn weight_n(rho: f64, m: usize) -> f64 {
    let lnf = LnFactorial::new(m);
    ln_weight_n(&lnf, rho, m).exp()
}

/// `H[rho, m, k]`, one-off evaluation.
pub fn weight_h(rho: f64, m: usize, k: usize) -> f64 {
    let lnf = LnFactorial::new(m + k);
    ln_weight_h(&lnf, rho, m, k).exp()
}

/// `L[rho, k] = H[rho, 1, k]`.
pub fn weight_l(rho: f64, k: usize) -> f64 {
    weight_h(rho, 1, k)
}

/// Radius schedule `rho(t) = rho0 exp(-mu t)` on `[0, T]`.
///
/// `mu >= 1` is accepted; the run records whether the strict `mu > 1` regime
/// was used (see [`RadiusSchedule::strict_mu`]).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RadiusSchedule {
    pub rho0: f64,
    pub mu: f64,
    pub t_end: f64,
}

impl RadiusSchedule {
    /// Horizon defaults to `1/mu` when `t_end` is not given.
    pub fn new(rho0: f64, mu: f64, t_end: Option<f64>) -> Result<Self> {
        if !(rho0 > 0.0) {
            return Err(Error::domain(format!("rho0 must be positive, got {rho0}")));
        }
        if !(mu >= 1.0) {
            return Err(Error::domain(format!("mu must be >= 1, got {mu}")));
        }
        let t_end = t_end.unwrap_or(1.0 / mu);
        if !(t_end > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {t_end}")));
        }
        Ok(RadiusSchedule { rho0, mu, t_end })
    }

    /// True when the run is in the strict `mu > 1` regime.
    pub fn strict_mu(&self) -> bool {
        self.mu > 1.0
    }

    /// `rho(t)`; errors outside `[0, T]`.
    pub fn radius_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside schedule window [0, {}]",
                self.t_end
            )));
        }
        Ok(self.rho0 * (-self.mu * t).exp())
    }

    /// `d/dt H[rho(t), m, k] = -mu (m+k+1) H[rho(t), m, k]`.
    pub fn weight_time_derivative(&self, t: f64, m: usize, k: usize) -> Result<f64> {
        let rho = self.radius_at(t)?;
        Ok(-self.mu * (m + k + 1) as f64 * weight_h(rho, m, k))
    }
}

/// Precomputed log weights at a fixed radius. Immutable after construction.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub rho: f64,
    pub mmax: usize,
    pub kmax: usize,
    pub ell: f64,
    log_n: Vec<f64>,
    log_h: Vec<f64>, // (mmax+1) x (kmax+1), row-major in m
    lnf: LnFactorial,
}

impl WeightTable {
    pub fn new(rho: f64, mmax: usize, kmax: usize, ell: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::domain(format!("rho must be positive, got {rho}")));
        }
        if !(ell >= 2.0) {
            return Err(Error::domain(format!("ell must be >= 2, got {ell}")));
        }
        let lnf = LnFactorial::new(mmax + kmax + 2);
        let mut log_n = Vec::with_capacity(mmax + 1);
        let mut log_h = Vec::with_capacity((mmax + 1) * (kmax + 1));
        for m in 0..=mmax {
            log_n.push(ln_weight_n(&lnf, rho, m));
            for k in 0..=kmax {
                log_h.push(ln_weight_h(&lnf, rho, m, k));
            }
        }
        Ok(WeightTable { rho, mmax, kmax, ell, log_n, log_h, lnf })
    }

    #[inline]
    pub fn log_n(&self, m: usize) -> f64 {
        self.log_n[m]
    }

    #[inline]
    pub fn log_h(&self, m: usize, k: usize) -> f64 {
        self.log_h[m * (self.kmax + 1) + k]
    }

    #[inline]
    pub fn n(&self, m: usize) -> f64 {
        self.log_n(m).exp()
    }

    #[inline]
    pub fn h(&self, m: usize, k: usize) -> f64 {
        self.log_h(m, k).exp()
    }

    /// `L[rho, k] = H[rho, 1, k]`.
    pub fn l(&self, k: usize) -> f64 {
        self.h(1, k)
    }

    pub fn ln_factorial(&self) -> &LnFactorial {
        &self.lnf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn radius_at_examples() {
        let s = RadiusSchedule::new(1.0, 4.0, None).unwrap();
        assert_eq!(s.radius_at(0.0).unwrap(), 1.0);
        // rho0 e^{-mu t} at mu t = 1
        assert!((s.radius_at(0.25).unwrap() - (-1.0f64).exp()).abs() < 1e-15);

        let s = RadiusSchedule::new(0.5, 2.0, None).unwrap();
        let r = s.radius_at(0.5).unwrap();
        assert!((r - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        // lower bound attained with equality at t = 1/mu
        assert!(s.rho0 / std::f64::consts::E <= r * (1.0 + 1e-15));
        assert!(r <= s.rho0);
    }

    #[test]
    fn radius_at_rejects_out_of_window() {
        let s = RadiusSchedule::new(1.0, 4.0, None).unwrap();
        assert!(s.radius_at(-0.1).is_err());
        assert!(s.radius_at(0.26).is_err());
    }

    #[test]
    fn weight_n_examples() {
        assert!((weight_n(1.0, 0) - 1.0).abs() < 1e-15);
        assert!((weight_n(1.0, 1) - 512.0).abs() / 512.0 < 1e-14);
        // 3^9 / 2^{3/2}; exact-rational mirror of the square is 3^18 / 2^3
        let expect = 19683.0 / 8.0f64.sqrt();
        assert!((weight_n(1.0, 2) - expect).abs() / expect < 1e-14);
        let sq = weight_n(1.0, 2).powi(2);
        let exact = 3f64.powi(18) / 8.0;
        assert!((sq - exact).abs() / exact < 1e-13);
    }

    #[test]
    fn weight_h_examples() {
        assert!((weight_h(1.0, 1, 0) - 512.0).abs() / 512.0 < 1e-14);
        assert_eq!(weight_h(1.0, 1, 0), weight_n(1.0, 1));
        let expect = 19683.0 / 2.0;
        assert!((weight_h(1.0, 1, 1) - expect).abs() / expect < 1e-14);
        assert!((weight_h(1.0, 0, 1) - 512.0).abs() / 512.0 < 1e-14);
    }

    #[test]
    fn h_m0_equals_n_bit_exact() {
        let t = WeightTable::new(0.137, 300, 40, 2.0).unwrap();
        for m in 0..=300 {
            assert_eq!(t.log_h(m, 0).to_bits(), t.log_n(m).to_bits());
        }
    }

    #[test]
    fn h_1k_equals_l_formula() {
        // L[rho,k] = rho^{k+2} (k+2)^9 / (k+1)!
        let t = WeightTable::new(0.25, 4, 60, 2.0).unwrap();
        let lnf = LnFactorial::new(70);
        for k in 0..=60 {
            let direct =
                ((k as f64 + 2.0) * 0.25f64.ln() + 9.0 * (k as f64 + 2.0).ln() - lnf.ln(k + 1))
                    .exp();
            let via_h = t.l(k);
            assert!((direct - via_h).abs() / direct < 1e-13, "k={k}");
        }
    }

    #[test]
    fn entries_finite_at_large_caps() {
        let t = WeightTable::new(0.05, 400, 100, 2.0).unwrap();
        for m in 0..=400 {
            for k in 0..=100 {
                assert!(t.log_h(m, k).is_finite());
            }
        }
        // and well past the default caps for the one-off path
        assert!(weight_n(1.0, 10_000) >= 0.0);
    }

    #[test]
    fn time_derivative_examples() {
        let s = RadiusSchedule::new(1.0, 1.0, None).unwrap();
        let d = s.weight_time_derivative(0.0, 0, 0).unwrap();
        assert!((d + 1.0).abs() < 1e-14); // -1 * 1 * N[1,0]

        // algebraic ratio is exactly -mu (m+k+1)
        let s = RadiusSchedule::new(0.7, 3.0, None).unwrap();
        for &(m, k) in &[(0usize, 0usize), (2, 5), (17, 3), (40, 0)] {
            let t = 0.1;
            let rho = s.radius_at(t).unwrap();
            let ratio = s.weight_time_derivative(t, m, k).unwrap() / weight_h(rho, m, k);
            assert!((ratio + 3.0 * (m + k + 1) as f64).abs() < 1e-10 * (m + k + 1) as f64);
        }
    }

    #[test]
    fn time_derivative_matches_central_difference() {
        let s = RadiusSchedule::new(1.0, 2.0, None).unwrap();
        let h = 1e-6;
        let t = 0.2;
        for &(m, k) in &[(0usize, 0usize), (1, 1), (3, 2)] {
            let fd = (weight_h(s.radius_at(t + h).unwrap(), m, k)
                - weight_h(s.radius_at(t - h).unwrap(), m, k))
                / (2.0 * h);
            let an = s.weight_time_derivative(t, m, k).unwrap();
            assert!((fd - an).abs() / an.abs() < 10.0 * h * h + 1e-9, "m={m} k={k}");
        }
    }

    proptest! {
        #[test]
        fn radius_stays_in_band(rho0 in 0.05f64..2.0, mu in 1.0f64..8.0, frac in 0.0f64..1.0) {
            let s = RadiusSchedule::new(rho0, mu, None).unwrap();
            let t = frac * s.t_end;
            let r = s.radius_at(t).unwrap();
            prop_assert!(r <= rho0 * (1.0 + 1e-14));
            prop_assert!(r >= rho0 / std::f64::consts::E * (1.0 - 1e-14));
        }

        #[test]
        fn h_k0_identity_holds_everywhere(rho in 0.01f64..3.0, m in 0usize..200) {
            let lnf = LnFactorial::new(m);
            prop_assert_eq!(
                ln_weight_h(&lnf, rho, m, 0).to_bits(),
                ln_weight_n(&lnf, rho, m).to_bits()
            );
        }
    }
}
