//! Exact binomial coefficients, the `S(x)` series, and the calibrated
//! logarithmic approximations and bounds built on them.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration;
use crate::error::{Error, Result};
use crate::logval::{ln_big, LogValue};

/// `C(p, q)`, zero when `q < 0` or `q > p`.
pub fn exact_binom(p: u64, q: i64) -> BigUint {
    if q < 0 || q as u64 > p {
        return BigUint::zero();
    }
    let q = (q as u64).min(p - q as u64);
    let mut acc = BigUint::one();
    for i in 0..q {
        acc *= p - i;
        acc /= i + 1;
    }
    acc
}

/// `C(a, b)` with the zero extension to negative arguments.
pub fn binom_i(a: i64, b: i64) -> BigUint {
    if a < 0 {
        BigUint::zero()
    } else {
        exact_binom(a as u64, b)
    }
}

/// `C(n, k)` for `n <= 64`, which always fits in a `u64`.
pub fn binom_u64(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    u64::try_from(acc).expect("C(n,k) with n <= 64 fits in u64")
}

/// `ln C(p, q)` computed from the exact integer; `-inf` when it is zero.
pub fn ln_binom(p: u64, q: i64) -> f64 {
    ln_big(&exact_binom(p, q))
}

pub fn check_identity_basic1(p: i64, q: i64, r: i64) -> bool {
    binom_i(p, r) * binom_i(p - r, q - r) == binom_i(p, q) * binom_i(q, r)
}

/// Vandermonde's convolution split at `r`: `Σ_j C(p−r, j) C(r, q−j) = C(p, q)`.
pub fn check_identity_vandermonde(p: i64, r: i64, q: i64) -> Result<bool> {
    if !(0 <= r && r <= p) {
        return Err(Error::pre(format!("need 0 <= r <= p, got r={r}, p={p}")));
    }
    let sum: BigUint = (0..=q.max(0))
        .map(|j| binom_i(p - r, j) * binom_i(r, q - j))
        .sum();
    Ok(sum == binom_i(p, q))
}

pub fn check_pascal(p: u64, q: u64) -> bool {
    0 < q && q <= p && {
        let (p, q) = (p as i64, q as i64);
        binom_i(p, q) == binom_i(p - 1, q - 1) + binom_i(p - 1, q)
    }
}

/// `Σ_{j≥1} x^j / (j(j+1))`, truncated once the geometric tail bound
/// `x^{J+1} / ((J+1)(1−x))` drops below `tol`.
pub fn s_function(x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::pre(format!("x must lie in (0,1), got {x}")));
    }
    if !(tol > 0.0) {
        return Err(Error::pre("tol must be positive"));
    }
    let mut sum = 0.0;
    let mut pow = 1.0;
    let mut j = 1u64;
    loop {
        pow *= x;
        let jf = j as f64;
        sum += pow / (jf * (jf + 1.0));
        if pow * x / ((jf + 1.0) * (1.0 - x)) < tol {
            return Ok(sum);
        }
        j += 1;
    }
}

/// Closed form of the same series: `S(x) = 1 + (1−x) ln(1−x) / x`.
pub fn s_closed(x: f64) -> f64 {
    1.0 + (1.0 - x) * (-x).ln_1p() / x
}

/// An exact quantity, its approximation, and the bound the error must obey.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ApproxReport {
    pub exact: LogValue,
    pub approx: LogValue,
    pub abs_error: f64,
    pub bound: f64,
}

impl ApproxReport {
    fn new(exact: f64, approx: f64, bound: f64) -> Self {
        ApproxReport {
            exact: LogValue(exact),
            approx: LogValue(approx),
            abs_error: (exact - approx).abs(),
            bound,
        }
    }

    pub fn holds(&self) -> bool {
        self.abs_error <= self.bound
    }
}

/// The entropy-form estimate of `ln C(p, q)`.
pub fn ln_binom_estimate(p: u64, q: u64) -> f64 {
    let (pf, qf) = (p as f64, q as f64);
    qf * ((pf / qf).ln() + 1.0 - s_closed(qf / pf))
        + 0.5 * (pf / (2.0 * std::f64::consts::PI * qf * (pf - qf))).ln()
}

/// Checks the estimate against the exact value with bound `K / min(q, p−q)`,
/// using the stored calibrated `K`.
pub fn approx_ln_binom(p: u64, q: u64) -> Result<ApproxReport> {
    approx_ln_binom_with(p, q, calibration::constants().ln_binom_error)
}

pub fn approx_ln_binom_with(p: u64, q: u64, k: f64) -> Result<ApproxReport> {
    if !(0 < q && q < p) {
        return Err(Error::pre(format!("need 0 < q < p, got p={p}, q={q}")));
    }
    let bound = k / q.min(p - q) as f64;
    Ok(ApproxReport::new(
        ln_binom(p, q as i64),
        ln_binom_estimate(p, q),
        bound,
    ))
}

/// Two-sided bound on `ln C(n−m, l) − ln C(n, l)`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Sandwich {
    pub lower: f64,
    pub gap: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower <= self.gap + tol && self.gap <= self.upper + tol
    }
}

/// `l ln(1 − m/(n−l)) <= ln C(n−m,l) − ln C(n,l) <= −lm/n`.
pub fn check_lemma_basic2(n: u64, m: u64, l: u64) -> Result<Sandwich> {
    if l + m >= n {
        return Err(Error::pre(format!("need l + m < n, got n={n}, m={m}, l={l}")));
    }
    let (nf, mf, lf) = (n as f64, m as f64, l as f64);
    let gap = LogValue::ratio(
        &exact_binom(n - m, l as i64),
        &exact_binom(n, l as i64),
    )
    .value();
    Ok(Sandwich {
        lower: lf * (-mf / (nf - lf)).ln_1p(),
        gap,
        upper: -lf * mf / nf,
    })
}

/// Left side minus the right side of the `basic3` inequality without its
/// additive constant; the inequality holds with constant `K` iff this is `<= K`.
pub fn basic3_slack(l: u64, m: u64, j: u64) -> Result<f64> {
    if m == 0 || m * m > l {
        return Err(Error::pre(format!("need 1 <= m and m^2 <= l, got l={l}, m={m}")));
    }
    if !(1..=m).contains(&j) {
        return Err(Error::pre(format!("need 1 <= j <= m, got j={j}, m={m}")));
    }
    let lhs = ln_big(&(exact_binom(l - m, (m - j) as i64) * exact_binom(m, j as i64)));
    let (lf, mf, jf) = (l as f64, m as f64, j as f64);
    let rhs = ln_binom(l, m as i64) - jf * (jf * lf / (mf * mf)).ln() + jf + jf.ln();
    Ok(lhs - rhs)
}

pub fn check_lemma_basic3(l: u64, m: u64, j: u64, k: f64) -> Result<bool> {
    Ok(basic3_slack(l, m, j)? <= k)
}

/// `num / den` rounded to the nearest integer, ties to even.
pub fn round_half_even(num: u64, den: u64) -> u64 {
    let (f, rem) = (num / den, num % den);
    match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Less => f,
        std::cmp::Ordering::Greater => f + 1,
        std::cmp::Ordering::Equal => f + (f & 1),
    }
}

/// Proportional split of `ln C(p+q, r)` into `ln C(p, r_p) + ln C(q, r_q)`.
pub fn check_proportional(p: u64, q: u64, r: u64) -> Result<ApproxReport> {
    check_proportional_with(p, q, r, calibration::constants().proportional_error)
}

pub fn check_proportional_with(p: u64, q: u64, r: u64, k: f64) -> Result<ApproxReport> {
    if p == 0 || q == 0 || r > p + q {
        return Err(Error::pre(format!(
            "need p, q >= 1 and r <= p+q, got p={p}, q={q}, r={r}"
        )));
    }
    let s = p + q;
    let (rp, rq) = (round_half_even(r * p, s), round_half_even(r * q, s));
    Ok(ApproxReport::new(
        ln_binom(s, r as i64),
        ln_binom(p, rp as i64) + ln_binom(q, rq as i64),
        k * (s as f64).ln(),
    ))
}

/// `ln C(p, q)` for all `q <= p <= max_p`, each from its exact integer.
pub struct LnBinomTable {
    rows: Vec<Vec<f64>>,
}

impl LnBinomTable {
    pub fn new(max_p: u64) -> Self {
        let rows = (0..=max_p).into_par_iter().map(ln_binom_row).collect();
        LnBinomTable { rows }
    }

    /// `ln C(p, q)`, `-inf` when `q > p`.
    pub fn get(&self, p: u64, q: u64) -> f64 {
        self.rows[p as usize]
            .get(q as usize)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }
}

/// `ln C(p, q)` for `q = 0..=p`, walking the row with exact integers.
fn ln_binom_row(p: u64) -> Vec<f64> {
    let mut row = Vec::with_capacity(p as usize + 1);
    let mut c = BigUint::one();
    for q in 0..=p {
        row.push(ln_big(&c));
        c *= p - q;
        c /= q + 1;
    }
    row
}

/// Largest `|exact − estimate| · min(q, p−q)` over `2 <= q < p <= max_p`.
pub fn sweep_ln_binom_error(max_p: u64) -> f64 {
    (3..=max_p)
        .into_par_iter()
        .map(|p| {
            let row = ln_binom_row(p);
            (2..p)
                .map(|q| (row[q as usize] - ln_binom_estimate(p, q)).abs() * q.min(p - q) as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Largest [`basic3_slack`] over `l <= max_l`, `m^2 <= l`, `1 <= j <= m`.
pub fn sweep_basic3(max_l: u64) -> f64 {
    let table = LnBinomTable::new(max_l);
    (1..=max_l)
        .into_par_iter()
        .map(|l| {
            let mut worst = f64::NEG_INFINITY;
            let mut m = 1;
            while m * m <= l {
                for j in 1..=m {
                    let lhs = table.get(l - m, m - j) + table.get(m, j);
                    let (lf, mf, jf) = (l as f64, m as f64, j as f64);
                    let rhs = table.get(l, m) - jf * (jf * lf / (mf * mf)).ln() + jf + jf.ln();
                    worst = worst.max(lhs - rhs);
                }
                m += 1;
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Largest proportional-split error divided by `ln(p+q)` over `p, q <= max`.
pub fn sweep_proportional(max: u64) -> f64 {
    let table = LnBinomTable::new(2 * max);
    (1..=max)
        .into_par_iter()
        .map(|p| {
            let mut worst = f64::NEG_INFINITY;
            for q in 1..=max {
                let s = p + q;
                let ls = (s as f64).ln();
                for r in 0..=s {
                    let rp = round_half_even(r * p, s);
                    let rq = round_half_even(r * q, s);
                    let err = (table.get(s, r) - table.get(p, rp) - table.get(q, rq)).abs();
                    worst = worst.max(err / ls);
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(exact_binom(7, 3), BigUint::from(35u32));
        assert_eq!(exact_binom(7, 5), BigUint::from(21u32));
        assert_eq!(exact_binom(5, -1), BigUint::zero());
        assert_eq!(exact_binom(5, 6), BigUint::zero());
        assert_eq!(binom_u64(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn rounding_ties_to_even() {
        assert_eq!(round_half_even(5, 2), 2);
        assert_eq!(round_half_even(7, 2), 4);
        assert_eq!(round_half_even(7, 3), 2);
        assert_eq!(round_half_even(8, 3), 3);
    }

    #[test]
    fn table_matches_direct() {
        let t = LnBinomTable::new(40);
        for p in 0..=40u64 {
            for q in 0..=p {
                assert!((t.get(p, q) - ln_binom(p, q as i64)).abs() < 1e-12);
            }
        }
    }
}
