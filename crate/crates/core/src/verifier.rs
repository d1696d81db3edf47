//! Exact certification of the combinatorial weight inequalities.
//!
//! The convolution estimates behind the energy bound reduce to inequalities
//! between binomial coefficients and the factorial weights. For rational
//! radii every SQUARED ratio is rational (the half-integer factorial powers
//! drop out), so each inequality is swept over a finite index range in exact
//! big-integer arithmetic and summarized by a certificate: the supremum of
//! the weighted squared ratio, where it is attained, and whether the shell
//! maxima decrease past that point. A certificate is an empirical-constant
//! report over the requested range, not a proof for all indices.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;

use crate::dynamics::make_initial_state;
use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::initdata::{generate, DataSpec};
use crate::norms::{gevrey_space_norm, x_norm, NormCaps};

/// Hard cap on single-index sweeps (exact arithmetic cost bound).
pub const MAX_M: usize = 400;
/// Hard cap on `m + k` for the 4-tuple sweeps.
pub const MAX_MK: usize = 120;

/// Exact rational, kept unreduced; comparisons cross-multiply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fraction {
    num: BigInt,
    den: BigInt,
}

impl Fraction {
    pub fn new(num: BigInt, den: BigInt) -> Fraction {
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            Fraction { num: -num, den: -den }
        } else {
            Fraction { num, den }
        }
    }

    pub fn from_int(n: i64) -> Fraction {
        Fraction { num: BigInt::from(n), den: BigInt::one() }
    }

    pub fn ratio(num: i64, den: i64) -> Fraction {
        Fraction::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn zero() -> Fraction {
        Fraction::from_int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn mul(&self, other: &Fraction) -> Fraction {
        Fraction { num: &self.num * &other.num, den: &self.den * &other.den }
    }

    pub fn div(&self, other: &Fraction) -> Fraction {
        assert!(!other.num.is_zero(), "division by zero fraction");
        Fraction::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn add(&self, other: &Fraction) -> Fraction {
        Fraction {
            num: &self.num * &other.den + &other.num * &self.den,
            den: &self.den * &other.den,
        }
    }

    pub fn sub(&self, other: &Fraction) -> Fraction {
        Fraction {
            num: &self.num * &other.den - &other.num * &self.den,
            den: &self.den * &other.den,
        }
    }

    pub fn le(&self, other: &Fraction) -> bool {
        &self.num * &other.den <= &other.num * &self.den
    }

    pub fn lt(&self, other: &Fraction) -> bool {
        &self.num * &other.den < &other.num * &self.den
    }

    /// Nearest double, stable even when both parts overflow `f64`.
    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        let ns = (self.num.bits() as i64 - 64).max(0) as usize;
        let ds = (self.den.bits() as i64 - 64).max(0) as usize;
        let n = (&self.num >> ns).to_f64().unwrap_or(f64::NAN);
        let d = (&self.den >> ds).to_f64().unwrap_or(f64::NAN);
        (n / d) * 2.0f64.powi(ns as i32 - ds as i32)
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }
}

impl serde::Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Fraction", 2)?;
        st.serialize_field("num", &self.num.to_string())?;
        st.serialize_field("den", &self.den.to_string())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InequalityId {
    Fe1,
    Fe2,
    Fe3,
    Fe4,
    Fe5,
    Fe6,
    Fe10,
    Laetimate,
    YoungDis,
    FactSubadd,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityCertificate {
    pub inequality_id: InequalityId,
    pub max_m: usize,
    /// 0 for the single-index families.
    pub max_k: usize,
    pub rho: Fraction,
    /// Supremum of the weighted squared ratio over the range.
    pub sup_ratio_sq: Fraction,
    pub sup_ratio_sq_f64: f64,
    /// Index tuple attaining the supremum (empty range: no tuple).
    pub argmax: Vec<usize>,
    /// Shell maxima non-increasing past the argmax shell.
    pub monotone_tail: bool,
}

/// Factorials and radius powers shared by one sweep.
struct Tables {
    fact: Vec<BigInt>,
    rho_pow: Vec<Fraction>,
}

impl Tables {
    fn new(rho: &Fraction, max_fact: usize, max_pow: usize) -> Tables {
        let mut fact = Vec::with_capacity(max_fact + 1);
        fact.push(BigInt::one());
        for n in 1..=max_fact {
            let prev: BigInt = fact[n - 1].clone();
            fact.push(prev * n);
        }
        let mut rho_pow = Vec::with_capacity(max_pow + 1);
        rho_pow.push(Fraction::from_int(1));
        for p in 1..=max_pow {
            rho_pow.push(rho_pow[p - 1].mul(rho));
        }
        Tables { fact, rho_pow }
    }

    /// `binom(n, k)^2` as an exact fraction.
    fn binom_sq(&self, n: usize, k: usize) -> Fraction {
        let b = Fraction::new(
            self.fact[n].clone(),
            &self.fact[k] * &self.fact[n - k],
        );
        b.mul(&b)
    }

    /// `H_{rho,m,k}^2 = rho^{2(m+k+1)} (m+k+1)^{18} / ((m+k)!^2 m!)`.
    ///
    /// `k = -1` is admitted (the weights extrapolate; one boundary case of
    /// the fourth estimate reaches it).
    fn h_sq(&self, m: usize, k: i64) -> Fraction {
        let t = (m as i64 + k) as usize;
        let top = BigInt::from(t + 1).pow(18);
        let bottom = &self.fact[t] * &self.fact[t] * &self.fact[m];
        self.rho_pow[2 * (t + 1)].mul(&Fraction::new(top, bottom))
    }

    /// `N_{rho,m}^2 = H_{rho,m,0}^2`.
    fn n_sq(&self, m: usize) -> Fraction {
        self.h_sq(m, 0)
    }

    /// `L_{rho,k}^2 = H_{rho,1,k}^2`.
    fn l_sq(&self, k: usize) -> Fraction {
        self.h_sq(1, k as i64)
    }
}

/// Tracks the supremum and per-shell maxima during a sweep.
struct Tracker {
    sup: Fraction,
    argmax: Vec<usize>,
    argmax_shell: usize,
    shells: Vec<Option<Fraction>>,
}

impl Tracker {
    fn new() -> Tracker {
        Tracker { sup: Fraction::zero(), argmax: Vec::new(), argmax_shell: 0, shells: Vec::new() }
    }

    fn observe(&mut self, shell: usize, idx: &[usize], val: Fraction) {
        if self.shells.len() <= shell {
            self.shells.resize(shell + 1, None);
        }
        let cell = &mut self.shells[shell];
        let better = cell.as_ref().map_or(true, |c| c.lt(&val));
        if better {
            *cell = Some(val.clone());
        }
        if self.argmax.is_empty() || self.sup.lt(&val) {
            self.sup = val;
            self.argmax = idx.to_vec();
            self.argmax_shell = shell;
        }
    }

    fn finish(self, id: InequalityId, max_m: usize, max_k: usize, rho: Fraction) -> InequalityCertificate {
        // The floor in the index split makes neighboring shells alternate in
        // parity; each parity class of shell maxima is unimodal with its own
        // peak, so decay is certified per class past that class's maximum.
        let monotone_tail = (0..2).all(|p| {
            let class: Vec<&Fraction> = self
                .shells
                .iter()
                .enumerate()
                .filter(|(s, v)| s % 2 == p && v.is_some())
                .map(|(_, v)| v.as_ref().unwrap())
                .collect();
            let peak = match (0..class.len()).max_by(|&a, &b| {
                if class[a].le(class[b]) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            }) {
                Some(p) => p,
                None => return true,
            };
            class[peak..].windows(2).all(|w| w[1].le(w[0]))
        });
        let sup_f = self.sup.to_f64();
        InequalityCertificate {
            inequality_id: id,
            max_m,
            max_k,
            rho,
            sup_ratio_sq: self.sup,
            sup_ratio_sq_f64: sup_f,
            argmax: self.argmax,
            monotone_tail,
        }
    }
}

fn check_max_m(max_m: usize) -> Result<()> {
    if max_m > MAX_M {
        return Err(Error::domain(format!("max_m {max_m} exceeds cap {MAX_M}")));
    }
    Ok(())
}

/// First tangential split: for `j <= m/2`,
/// `binom(m,j) N_{m+1} / (N_{j+3} N_{m-j+1}) <= C/(j+1)`.
/// Weighted squared ratio: `(j+1)^2 binom^2 N_{m+1}^2 / (N_{j+3}^2 N_{m-j+1}^2)`.
pub fn verify_fe1(max_m: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_m)?;
    let t = Tables::new(rho, max_m + 4, 2 * (max_m + 5));
    let mut tr = Tracker::new();
    for m in 1..=max_m {
        let top = t.n_sq(m + 1);
        for j in 0..=m / 2 {
            let w = Fraction::from_int(((j + 1) * (j + 1)) as i64);
            let r = w
                .mul(&t.binom_sq(m, j))
                .mul(&top)
                .div(&t.n_sq(j + 3))
                .div(&t.n_sq(m - j + 1));
            tr.observe(m, &[m, j], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe1, max_m, 0, rho.clone()))
}

/// Second tangential split: for `m/2 < j <= m`,
/// `binom(m,j) N_{m+1} / (N_{j+1} N_{m-j+3}) <= C/(m-j+1)`.
pub fn verify_fe2(max_m: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_m)?;
    let t = Tables::new(rho, max_m + 4, 2 * (max_m + 5));
    let mut tr = Tracker::new();
    for m in 1..=max_m {
        let top = t.n_sq(m + 1);
        for j in m / 2 + 1..=m {
            let d = m - j + 1;
            let w = Fraction::from_int((d * d) as i64);
            let r = w
                .mul(&t.binom_sq(m, j))
                .mul(&top)
                .div(&t.n_sq(j + 1))
                .div(&t.n_sq(m - j + 3));
            tr.observe(m, &[m, j], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe2, max_m, 0, rho.clone()))
}

/// First vertical split: for `1 <= i <= (k+1)/2`,
/// `binom(k+1,i) (k+1)^{-1/2} L_k / (H_{4,i-1} L_{k+1-i}) <= C (k+2-i)^{1/2}/(i+1)`.
/// Squared, the half powers become the rational factors `1/(k+1)` and
/// `1/(k+2-i)`.
pub fn verify_fe3(max_k: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_k)?;
    let t = Tables::new(rho, max_k + 6, 2 * (max_k + 7));
    let mut tr = Tracker::new();
    for k in 0..=max_k {
        let top = t.l_sq(k);
        for i in 1..=(k + 1) / 2 {
            let w = Fraction::ratio(
                ((i + 1) * (i + 1)) as i64,
                ((k + 1) * (k + 2 - i)) as i64,
            );
            let r = w
                .mul(&t.binom_sq(k + 1, i))
                .mul(&top)
                .div(&t.h_sq(4, i as i64 - 1))
                .div(&t.l_sq(k + 1 - i));
            tr.observe(k, &[k, i], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe3, max_k, 0, rho.clone()))
}

/// Second vertical split: for `(k+1)/2 < i <= k+1`,
/// `binom(k+1,i) (k+1)^{-1/2} L_k / (H_{2,i-2} H_{3,k+2-i}) <= C/(k+3-i)`.
pub fn verify_fe4(max_k: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_k)?;
    let t = Tables::new(rho, max_k + 6, 2 * (max_k + 7));
    let mut tr = Tracker::new();
    for k in 0..=max_k {
        let top = t.l_sq(k);
        for i in (k + 1) / 2 + 1..=k + 1 {
            let d = k + 3 - i;
            let w = Fraction::ratio((d * d) as i64, (k + 1) as i64);
            let r = w
                .mul(&t.binom_sq(k + 1, i))
                .mul(&top)
                .div(&t.h_sq(2, i as i64 - 2))
                .div(&t.h_sq(3, (k + 2 - i) as i64));
            tr.observe(k, &[k, i], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe4, max_k, 0, rho.clone()))
}

/// Second mixed split: for `m/2 < j <= m`,
/// `binom(m,j) (m+1)^{1/2} N_{m+1} / (N_{j+1} H_{m-j+3,1}) <= C (j+1)^{1/2}/(m-j+1)`.
pub fn verify_fe5(max_m: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_m)?;
    let t = Tables::new(rho, max_m + 6, 2 * (max_m + 7));
    let mut tr = Tracker::new();
    for m in 1..=max_m {
        let top = t.n_sq(m + 1);
        for j in m / 2 + 1..=m {
            let d = m - j + 1;
            let w = Fraction::ratio(((m + 1) * d * d) as i64, (j + 1) as i64);
            let r = w
                .mul(&t.binom_sq(m, j))
                .mul(&top)
                .div(&t.n_sq(j + 1))
                .div(&t.h_sq(m - j + 3, 1));
            tr.observe(m, &[m, j], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe5, max_m, 0, rho.clone()))
}

/// First mixed split: for `1 <= j <= m/2`,
/// `binom(m,j) (m+1)^{1/2} N_{m+1} / (N_{j+3} H_{m-j+1,1}) <= C (m-j+1)^{3/2}/(j+1)`.
pub fn verify_fe6(max_m: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    check_max_m(max_m)?;
    let t = Tables::new(rho, max_m + 6, 2 * (max_m + 7));
    let mut tr = Tracker::new();
    for m in 2..=max_m {
        let top = t.n_sq(m + 1);
        for j in 1..=m / 2 {
            let d = m - j + 1;
            let w = Fraction::ratio(
                ((m + 1) * (j + 1) * (j + 1)) as i64,
                (d * d * d) as i64,
            );
            let r = w
                .mul(&t.binom_sq(m, j))
                .mul(&top)
                .div(&t.n_sq(j + 3))
                .div(&t.h_sq(m - j + 1, 1));
            tr.observe(m, &[m, j], r);
        }
    }
    Ok(tr.finish(InequalityId::Fe6, max_m, 0, rho.clone()))
}

/// Low-half 4-tuple estimate: for `1 <= i+j <= (m+k+1)/2` with `1 <= i <= k+1`,
/// `j <= m`:
/// `binom(m,j) binom(k+1,i) (m+k+1)^{-1/2} (m+1) H_{m+1,k} / (H_{j+4,i-1} H_{m-j+1,k+1-i})`
/// `<= (j+4)(m-j+1) (m+k-i-j+2)^{1/2} / (i+j+1)^2`.
pub fn verify_fe10(max_mk: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    if max_mk > MAX_MK {
        return Err(Error::domain(format!("max m+k {max_mk} exceeds cap {MAX_MK}")));
    }
    let t = Tables::new(rho, max_mk + 8, 2 * (max_mk + 9));
    let mut tr = Tracker::new();
    for s in 0..=max_mk {
        for m in 0..=s {
            let k = s - m;
            let top = Fraction::from_int(((m + 1) * (m + 1)) as i64).mul(&t.h_sq(m + 1, k as i64));
            for i in 1..=(k + 1).min((m + k + 1) / 2) {
                let jmax = ((m + k + 1) / 2 - i).min(m);
                for j in 0..=jmax {
                    let w = Fraction::new(
                        BigInt::from((i + j + 1).pow(4)),
                        BigInt::from(
                            (m + k + 1) as u64
                                * ((j + 4) * (j + 4) * (m - j + 1) * (m - j + 1)) as u64
                                * (m + k + 2 - i - j) as u64,
                        ),
                    );
                    let r = w
                        .mul(&t.binom_sq(m, j))
                        .mul(&t.binom_sq(k + 1, i))
                        .mul(&top)
                        .div(&t.h_sq(j + 4, i as i64 - 1))
                        .div(&t.h_sq(m - j + 1, (k + 1 - i) as i64));
                    tr.observe(s, &[m, k, i, j], r);
                }
            }
        }
    }
    Ok(tr.finish(InequalityId::Fe10, max_mk, max_mk, rho.clone()))
}

/// High-half 4-tuple estimate: for `(m+k+1)/2 <= i+j <= m+k+1` with
/// `2 <= i <= k+1`, `j <= m`:
/// `binom(m,j) binom(k+1,i) (m+k+1)^{-1/2} (m+1) H_{m+1,k} / (H_{j+2,i-2} H_{m-j+3,k+2-i})`
/// `<= C (j+1) / (m+k-i-j+2)^2`.
pub fn verify_laetimate(max_mk: usize, rho: &Fraction) -> Result<InequalityCertificate> {
    if max_mk > MAX_MK {
        return Err(Error::domain(format!("max m+k {max_mk} exceeds cap {MAX_MK}")));
    }
    let t = Tables::new(rho, max_mk + 8, 2 * (max_mk + 9));
    let mut tr = Tracker::new();
    for s in 0..=max_mk {
        for m in 0..=s {
            let k = s - m;
            let top = Fraction::from_int(((m + 1) * (m + 1)) as i64).mul(&t.h_sq(m + 1, k as i64));
            for i in 2..=k + 1 {
                let lo = ((m + k + 1) / 2).saturating_sub(i);
                for j in lo..=(m + k + 1 - i).min(m) {
                    if i + j < (m + k + 1) / 2 {
                        continue;
                    }
                    let d = m + k + 2 - i - j;
                    let w = Fraction::new(
                        BigInt::from(d.pow(4)),
                        BigInt::from(((m + k + 1) * (j + 1) * (j + 1)) as u64),
                    );
                    let r = w
                        .mul(&t.binom_sq(m, j))
                        .mul(&t.binom_sq(k + 1, i))
                        .mul(&top)
                        .div(&t.h_sq(j + 2, i as i64 - 2))
                        .div(&t.h_sq(m - j + 3, (k + 2 - i) as i64));
                    tr.observe(s, &[m, k, i, j], r);
                }
            }
        }
    }
    Ok(tr.finish(InequalityId::Laetimate, max_mk, max_mk, rho.clone()))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct YoungReport {
    pub trials: usize,
    pub length: usize,
    pub pass: bool,
    /// Smallest exact slack `rhs - lhs` over the trials, as a double.
    pub min_slack: f64,
}

/// Young's inequality for discrete convolution on nonnegative sequences:
/// `||p * q||_{l2}^2 <= ||q||_{l2}^2 ||p||_{l1}^2`, exact in rationals.
pub fn verify_young_dis(trials: usize, length: usize, seed: u64) -> YoungReport {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack: Option<Fraction> = None;
    let mut pass = true;
    for _ in 0..trials {
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Fraction> {
            (0..length)
                .map(|_| Fraction::ratio(rng.gen_range(0..100), rng.gen_range(1..100)))
                .collect()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let slack = young_slack(&p, &q);
        if slack.num.is_negative() {
            pass = false;
        }
        let smaller = min_slack.as_ref().map_or(true, |m| slack.lt(m));
        if smaller {
            min_slack = Some(slack);
        }
    }
    YoungReport {
        trials,
        length,
        pass,
        min_slack: min_slack.map_or(0.0, |m| m.to_f64()),
    }
}

/// Exact `||q||_2^2 ||p||_1^2 - ||p * q||_2^2` for nonnegative sequences.
pub fn young_slack(p: &[Fraction], q: &[Fraction]) -> Fraction {
    let mut conv = vec![Fraction::zero(); p.len() + q.len() - 1];
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            conv[i + j] = conv[i + j].add(&pi.mul(qj));
        }
    }
    let sum_sq = |v: &[Fraction]| {
        v.iter().fold(Fraction::zero(), |acc, x| acc.add(&x.mul(x)))
    };
    let p1 = p.iter().fold(Fraction::zero(), |acc, x| acc.add(x));
    sum_sq(&q).mul(&p1.mul(&p1)).sub(&sum_sq(&conv))
}

/// `p! q! <= (p+q)!` for all `p+q <= max_n`, and the 2-index binomial
/// restriction `binom(a1,b1) binom(a2,b2) <= binom(a1+a2, b1+b2)`.
pub fn verify_factorial_subadditivity(max_n: usize) -> bool {
    let mut fact = vec![BigInt::one()];
    for n in 1..=max_n {
        let prev: BigInt = fact[n - 1].clone();
        fact.push(prev * n);
    }
    for p in 0..=max_n {
        for q in 0..=max_n - p {
            if &fact[p] * &fact[q] > fact[p + q] {
                return false;
            }
        }
    }
    // 2-index binomial restriction on a smaller box (u128 is exact there)
    let cap = max_n.min(40);
    let binom = |n: usize, k: usize| -> u128 {
        let mut b: u128 = 1;
        for t in 0..k {
            b = b * (n - t) as u128 / (t + 1) as u128;
        }
        b
    };
    for a1 in 0..=cap {
        for a2 in 0..=cap - a1 {
            for b1 in 0..=a1 {
                for b2 in 0..=a2 {
                    if binom(a1, b1) * binom(a2, b2) > binom(a1 + a2, b1 + b2) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Exact scalar fact used in the initial bound: `k r^k <= (1-r)^{-1}` for
/// `r in {1/4, 1/3, 1/2}` and `k <= max_k`.
pub fn verify_geometric_fact(max_k: usize) -> bool {
    for &(n, d) in &[(1i64, 4i64), (1, 3), (1, 2)] {
        let r = Fraction::ratio(n, d);
        let bound = Fraction::ratio(d, d - n); // (1 - r)^{-1}
        let mut rk = Fraction::from_int(1);
        for k in 0..=max_k {
            let lhs = Fraction::from_int(k as i64).mul(&rk);
            if !lhs.le(&bound) {
                return false;
            }
            rk = rk.mul(&r);
        }
    }
    true
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InitBoundReport {
    /// `X(0) / (||u0|| + ||u1||)` with data norms at radius `2 rho0`.
    pub c0_emp: f64,
    pub x0: f64,
    pub data_norms_2rho0: f64,
    pub data_norms_rho0: f64,
    pub geometric_fact_ok: bool,
}

/// Empirical constant of the initial bound: generate the data, assemble the
/// compatible initial state, and compare `X(0)` at `rho0` against the data
/// norms at `2 rho0` (`u1` measured one weight power higher).
pub fn verify_init_bound(
    u0_spec: &DataSpec,
    u1_spec: &DataSpec,
    grid: &Arc<FieldGrid>,
    eta: f64,
    rho0: f64,
    caps: &NormCaps,
) -> Result<InitBoundReport> {
    let u0 = generate(u0_spec, grid)?;
    let u1 = generate(u1_spec, grid)?;
    let ell = grid.ell;

    let data_at = |rho: f64| -> Result<f64> {
        let g0 = gevrey_space_norm(&u0, rho, ell, caps)?;
        let g1 = gevrey_space_norm(&u1, rho, ell + 1.0, caps)?;
        if !(g0.converged && g1.converged) {
            return Err(Error::domain(format!(
                "data norms at rho {rho} not converged (tails {:e}, {:e})",
                g0.tail_ratio_m.max(g1.tail_ratio_m),
                g0.tail_ratio_k.max(g1.tail_ratio_k)
            )));
        }
        Ok(g0.value_sq.sqrt() + g1.value_sq.sqrt())
    };
    let data_norms_2rho0 = data_at(2.0 * rho0)?;
    let data_norms_rho0 = data_at(rho0)?;

    let x0 = if u0.max_abs() == 0.0 && u1.max_abs() == 0.0 {
        0.0
    } else {
        let state = make_initial_state(&u0, &u1, eta)?;
        x_norm(&state, rho0, caps)?.x2.max(0.0).sqrt()
    };
    let c0_emp = if data_norms_2rho0 > 0.0 { x0 / data_norms_2rho0 } else { 0.0 };
    Ok(InitBoundReport {
        c0_emp,
        x0,
        data_norms_2rho0,
        data_norms_rho0,
        geometric_fact_ok: verify_geometric_fact(200),
    })
}

/// Maximum relative disagreement between the float weight table and the
/// exact squared weights, over `m <= mmax`, `k <= kmax`.
pub fn weight_agreement(rho_num: i64, rho_den: i64, mmax: usize, kmax: usize) -> f64 {
    let rho = Fraction::ratio(rho_num, rho_den);
    let t = Tables::new(&rho, mmax + kmax + 1, 2 * (mmax + kmax + 2));
    let table = crate::weights::WeightTable::new(rho_num as f64 / rho_den as f64, mmax, kmax, 2.0)
        .expect("valid weight-table parameters");
    let mut worst = 0.0f64;
    for m in 0..=mmax {
        for k in 0..=kmax {
            let exact = t.h_sq(m, k as i64).to_f64();
            let float = table.h(m, k).powi(2);
            worst = worst.max((float - exact).abs() / exact);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_arithmetic_and_comparison() {
        let a = Fraction::ratio(2, 4); // unreduced on purpose
        let b = Fraction::ratio(1, 2);
        assert!(a.le(&b) && b.le(&a));
        assert!(Fraction::ratio(1, 3).lt(&b));
        assert_eq!(a.mul(&b).to_f64(), 0.25);
        assert_eq!(a.add(&b).to_f64(), 1.0);
        assert_eq!(a.sub(&b).to_f64(), 0.0);
        assert_eq!(Fraction::ratio(-3, -6).to_f64(), 0.5);
        assert_eq!(Fraction::ratio(3, -6).to_f64(), -0.5);
    }

    #[test]
    fn fraction_to_f64_survives_huge_parts() {
        let t = Tables::new(&Fraction::from_int(1), 400, 10);
        // 400!/399! = 400 even though both parts overflow f64; the shifted
        // division is approximate to a few ulps
        let r = Fraction::new(t.fact[400].clone(), t.fact[399].clone());
        assert!((r.to_f64() - 400.0).abs() < 400.0 * 1e-13);
    }

    #[test]
    fn fe1_exact_example() {
        // m=2, j=1, rho=1: ratio^2 = 4 binom(2,1)^2 N_3^2 / (N_4^2 N_2^2)
        // with N_m^2 = (m+1)^18 / (m!)^3
        let cert = verify_fe1(2, &Fraction::from_int(1)).unwrap();
        let n_sq = |m: u32| {
            Fraction::new(
                BigInt::from(m + 1).pow(18),
                (1..=m as u64).product::<u64>().pow(3).into(),
            )
        };
        let expect = Fraction::from_int(16)
            .mul(&n_sq(3))
            .div(&n_sq(4))
            .div(&n_sq(2));
        let m2j1 = {
            let t = Tables::new(&Fraction::from_int(1), 6, 14);
            Fraction::from_int(4)
                .mul(&t.binom_sq(2, 1))
                .mul(&t.n_sq(3))
                .div(&t.n_sq(4))
                .div(&t.n_sq(2))
        };
        assert_eq!(&m2j1.num * &expect.den, &expect.num * &m2j1.den);
        // the sweep's sup dominates this particular entry
        assert!(m2j1.le(&cert.sup_ratio_sq));
    }

    #[test]
    fn fe1_empty_range() {
        let cert = verify_fe1(0, &Fraction::from_int(1)).unwrap();
        assert!(cert.sup_ratio_sq.is_zero());
        assert!(cert.argmax.is_empty());
        assert!(cert.monotone_tail);
    }

    #[test]
    fn fe1_sweep_bounded_with_monotone_tail() {
        let cert = verify_fe1(200, &Fraction::from_int(1)).unwrap();
        assert!(cert.sup_ratio_sq_f64.is_finite() && cert.sup_ratio_sq_f64 > 0.0);
        assert!(cert.monotone_tail, "argmax {:?}", cert.argmax);
        // attained at small j
        assert!(cert.argmax[1] <= 3, "argmax {:?}", cert.argmax);
        // consistency across the radius window: bounded variation
        let lo = verify_fe1(200, &Fraction::ratio(3, 8)).unwrap();
        assert!(lo.sup_ratio_sq_f64.is_finite() && lo.sup_ratio_sq_f64 > 0.0);
    }

    #[test]
    fn fe2_through_fe6_sweeps_are_bounded() {
        let rho = Fraction::ratio(1, 2);
        for (id, cert) in [
            (InequalityId::Fe2, verify_fe2(120, &rho).unwrap()),
            (InequalityId::Fe3, verify_fe3(120, &rho).unwrap()),
            (InequalityId::Fe4, verify_fe4(120, &rho).unwrap()),
            (InequalityId::Fe5, verify_fe5(120, &rho).unwrap()),
            (InequalityId::Fe6, verify_fe6(120, &rho).unwrap()),
        ] {
            assert!(
                cert.sup_ratio_sq_f64.is_finite() && cert.sup_ratio_sq_f64 > 0.0,
                "{id:?}: sup {:e}",
                cert.sup_ratio_sq_f64
            );
            assert!(cert.monotone_tail, "{id:?}: argmax {:?}", cert.argmax);
        }
    }

    #[test]
    fn four_index_sweeps_are_bounded() {
        let rho = Fraction::ratio(1, 2);
        let fe10 = verify_fe10(40, &rho).unwrap();
        assert!(fe10.sup_ratio_sq_f64.is_finite() && fe10.sup_ratio_sq_f64 > 0.0);
        assert!(fe10.monotone_tail, "argmax {:?}", fe10.argmax);
        let lae = verify_laetimate(40, &rho).unwrap();
        assert!(lae.sup_ratio_sq_f64.is_finite() && lae.sup_ratio_sq_f64 > 0.0);
        assert!(lae.monotone_tail, "argmax {:?}", lae.argmax);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(verify_fe1(MAX_M + 1, &Fraction::from_int(1)).is_err());
        assert!(verify_fe10(MAX_MK + 1, &Fraction::from_int(1)).is_err());
    }

    #[test]
    fn young_delta_is_equality_and_zeros_pass() {
        // p = delta_0: convolution is q, slack exactly 0
        let delta: Vec<Fraction> = std::iter::once(Fraction::from_int(1))
            .chain((1..8).map(|_| Fraction::zero()))
            .collect();
        let q: Vec<Fraction> = (0..8).map(|i| Fraction::ratio(i + 1, 3)).collect();
        assert!(young_slack(&delta, &q).is_zero());

        let zeros = vec![Fraction::zero(); 8];
        assert!(young_slack(&zeros, &zeros).is_zero());
    }

    #[test]
    fn young_randomized_sweep_passes() {
        let report = verify_young_dis(1000, 12, 42);
        assert!(report.pass);
        assert!(report.min_slack >= 0.0);
        // reproducible under the same seed
        let again = verify_young_dis(1000, 12, 42);
        assert_eq!(report.min_slack, again.min_slack);
    }

    #[test]
    fn factorial_subadditivity_holds() {
        assert!(verify_factorial_subadditivity(60));
    }

    #[test]
    fn geometric_fact_holds_exactly() {
        assert!(verify_geometric_fact(200));
        // r = 1/2: max of k 2^{-k} is 1/2 at k = 1, well under 2
        let lhs = Fraction::from_int(1).mul(&Fraction::ratio(1, 2));
        assert!(lhs.le(&Fraction::from_int(2)));
    }

    #[test]
    fn float_weights_match_exact_squares() {
        let worst = weight_agreement(3, 10, 40, 20);
        assert!(worst < 1e-12, "worst rel disagreement {worst:e}");
    }

    #[test]
    fn init_bound_on_small_data() {
        use crate::initdata::{Family, YProfile};
        let grid = FieldGrid::new(16, 48, 15.0, 2.0).unwrap();
        let caps = NormCaps::default();
        let zero = DataSpec {
            family: Family::SingleMode { wavenumber: 1, phase: 0.0 },
            amplitude: 0.0,
            y_profile: YProfile::YExp,
        };
        let report = verify_init_bound(&zero, &zero, &grid, 0.5, 0.2, &caps).unwrap();
        assert_eq!(report.c0_emp, 0.0);
        assert!(report.geometric_fact_ok);

        let u0 = DataSpec {
            family: Family::SingleMode { wavenumber: 1, phase: 0.0 },
            amplitude: 1e-3,
            y_profile: YProfile::YExp,
        };
        let report = verify_init_bound(&u0, &zero, &grid, 0.5, 0.2, &caps).unwrap();
        assert!(report.c0_emp > 0.0 && report.c0_emp.is_finite());
        assert!(report.data_norms_2rho0 > report.data_norms_rho0);
    }

    #[test]
    fn certificate_serializes_with_decimal_strings() {
        let cert = verify_fe1(10, &Fraction::ratio(2, 5)).unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["inequality_id"], "FE1");
        assert!(json["sup_ratio_sq"]["num"].as_str().unwrap().chars().all(|c| c.is_ascii_digit()));
        assert!(json["rho"]["den"].as_str().unwrap() == "5");
    }
}


