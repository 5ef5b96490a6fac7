//! Code parameters (alpha, beta, M, beta_c) computed two independent ways:
//! closed-form sums of binomials and powers, and coefficient extraction from
//! rational generating functions evaluated as truncated integer series.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::combinatorics::binomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("parameters (n, k, d, s) = ({n}, {k}, {d}, {s}) violate n-1 >= d >= k >= s-1 >= 1")]
    HypothesisViolated { n: usize, k: usize, d: usize, s: usize },
    #[error("layered parameters (k, s) = ({k}, {s}) violate k >= s-1 >= 1")]
    LayeredHypothesisViolated { k: usize, s: usize },
    #[error("parameter overflow computing {0}")]
    Overflow(&'static str),
}

/// The full parameter set of one code: the storage per node `alpha`, the
/// single-failure repair bandwidth `beta`, the file size `M`, and the
/// per-helper bandwidth `beta_c` for repairing c failures at once
/// (`beta_c[c-1]`, for c = 1..=k; c >= k degenerates to whole-share repair).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub s: usize,
    pub alpha: u64,
    pub beta: u64,
    pub file_size: u64,
    pub beta_c: Vec<u64>,
}

impl CodeParams {
    /// Per-helper symbols for repairing `c` simultaneous failures; for
    /// c >= k every helper ships its whole share instead.
    pub fn per_helper_bandwidth(&self, c: usize) -> u64 {
        assert!(c >= 1, "at least one failure");
        if c >= self.k {
            self.alpha
        } else {
            self.beta_c[c - 1]
        }
    }
}

pub fn validate_hypothesis(n: usize, k: usize, d: usize, s: usize) -> Result<(), ParamError> {
    if n > d && d >= k && k + 1 >= s && s >= 2 {
        Ok(())
    } else {
        Err(ParamError::HypothesisViolated { n, k, d, s })
    }
}

/// Raw closed-form sums (alpha, beta, M) for any d >= k >= 1, s >= 2,
/// without the n-dependent validation. With the convention 0^0 = 1 only the
/// p = 0 terms survive when d = k.
pub fn closed_form_sums(k: usize, d: usize, s: usize) -> (u64, u64, u64) {
    let l = (d - k) as u64;
    let sum = |top: usize, kk: usize| -> u64 {
        let mut acc: u128 = 0;
        for p in 0..=top {
            let q = top - p;
            acc += (l as u128).pow(p as u32) * binomial(kk, q) as u128;
        }
        acc as u64
    };
    let alpha = sum(s - 1, k);
    let beta = sum(s - 2, k - 1);
    let u_total: u128 = d as u128 * alpha as u128;
    let checks = sum(s, k) as u128;
    let m = (u_total - checks) as u64;
    (alpha, beta, m)
}

/// Raw closed-form beta_c from the binomial-difference sum
/// `Σ_{p+q=s-2} (d-k)^p (C(k, q+1) − C(k-c, q+1))`.
pub fn closed_form_beta_c(k: usize, d: usize, s: usize, c: usize) -> u64 {
    let l = (d - k) as u64;
    let mut acc: u128 = 0;
    for p in 0..=(s - 2) {
        let q = s - 2 - p;
        let diff = binomial(k, q + 1) - binomial(k.saturating_sub(c), q + 1);
        acc += (l as u128).pow(p as u32) * diff as u128;
    }
    acc as u64
}

/// Parameters by direct evaluation of the closed-form sums.
pub fn closed_form_params(n: usize, k: usize, d: usize, s: usize) -> Result<CodeParams, ParamError> {
    validate_hypothesis(n, k, d, s)?;
    let (alpha, beta, file_size) = closed_form_sums(k, d, s);
    let beta_c = (1..=k).map(|c| closed_form_beta_c(k, d, s, c)).collect();
    Ok(CodeParams { n, k, d, s, alpha, beta, file_size, beta_c })
}

/// Layered-code parameters: alpha = C(k, s-1), beta = C(k-1, s-2),
/// M = k C(k, s-1) − C(k, s), for the (k+1, k, k) configuration.
pub fn layered_params(k: usize, s: usize) -> Result<CodeParams, ParamError> {
    if !(k + 1 >= s && s >= 2) {
        return Err(ParamError::LayeredHypothesisViolated { k, s });
    }
    let alpha = binomial(k, s - 1);
    let beta = binomial(k - 1, s - 2);
    let file_size = k as u64 * alpha - binomial(k, s);
    let beta_c = (1..=k).map(|c| closed_form_beta_c(k, k, s, c)).collect();
    Ok(CodeParams { n: k + 1, k, d: k, s, alpha, beta, file_size, beta_c })
}

/// A formal power series truncated at order T, with exact integer
/// coefficients `c_0..c_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigInt>,
}

impl TruncatedSeries {
    pub fn from_ints(coeffs: Vec<i64>) -> Self {
        TruncatedSeries { coeffs: coeffs.into_iter().map(BigInt::from).collect() }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![BigInt::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = BigInt::one();
        s
    }

    /// (1 + x)^e truncated.
    pub fn binomial_power(e: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            *c = BigInt::from(binomial(e, i));
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &BigInt {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        TruncatedSeries {
            coeffs: (0..=order).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        TruncatedSeries {
            coeffs: (0..=order).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut coeffs = vec![BigInt::zero(); order + 1];
        for i in 0..=order {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=order - i {
                coeffs[i + j] += &self.coeffs[i] * &other.coeffs[j];
            }
        }
        TruncatedSeries { coeffs }
    }

    /// Multiplication by x: shifts coefficients up one degree.
    pub fn shift(&self) -> Self {
        let mut coeffs = vec![BigInt::zero()];
        coeffs.extend_from_slice(&self.coeffs[..self.coeffs.len() - 1]);
        TruncatedSeries { coeffs }
    }

    /// Division by `1 - a x` through the geometric recurrence
    /// `c_n = self_n + a c_(n-1)`.
    pub fn div_one_minus_ax(&self, a: i64) -> Self {
        let a = BigInt::from(a);
        let mut coeffs = self.coeffs.clone();
        for i in 1..coeffs.len() {
            let prev = coeffs[i - 1].clone();
            coeffs[i] += &a * prev;
        }
        TruncatedSeries { coeffs }
    }

    /// Exact long division by a series with unit constant term ±1.
    pub fn div_unit(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        assert!(
            other.coeffs[0] == BigInt::one() || other.coeffs[0] == -BigInt::one(),
            "divisor must have constant term ±1"
        );
        let mut q = vec![BigInt::zero(); order + 1];
        for i in 0..=order {
            let mut acc = self.coeffs[i].clone();
            for (j, qj) in q.iter().enumerate().take(i) {
                acc -= qj * &other.coeffs[i - j];
            }
            // division by ±1 is exact
            q[i] = if other.coeffs[0].is_one() { acc } else { -acc };
        }
        TruncatedSeries { coeffs: q }
    }
}

/// The generating function A(x) = x (1+x)^k / (1 - (d-k) x).
pub fn series_alpha(k: usize, d: usize, order: usize) -> TruncatedSeries {
    TruncatedSeries::binomial_power(k, order)
        .shift()
        .div_one_minus_ax((d - k) as i64)
}

/// The generating function B(x) = x^2 (1+x)^(k-1) / (1 - (d-k) x).
pub fn series_beta(k: usize, d: usize, order: usize) -> TruncatedSeries {
    TruncatedSeries::binomial_power(k - 1, order)
        .shift()
        .shift()
        .div_one_minus_ax((d - k) as i64)
}

/// The generating function M(x) = (-1 + d x)(1+x)^k / (1 - (d-k) x).
pub fn series_file_size(k: usize, d: usize, order: usize) -> TruncatedSeries {
    let bin = TruncatedSeries::binomial_power(k, order);
    let num = bin.shift().mul_scalar(d as i64).sub(&bin);
    num.div_one_minus_ax((d - k) as i64)
}

/// The generating function B_c(x) = A(x) (1 - 1/(1+x)^c), computed by exact
/// repeated division by (1 + x).
pub fn series_beta_c(k: usize, d: usize, c: usize, order: usize) -> TruncatedSeries {
    let mut inv = TruncatedSeries::one(order);
    let one_plus_x = TruncatedSeries::from_ints(
        std::iter::once(1)
            .chain(std::iter::once(1))
            .chain(std::iter::repeat(0))
            .take(order + 1)
            .collect(),
    );
    for _ in 0..c {
        inv = inv.div_unit(&one_plus_x);
    }
    let factor = TruncatedSeries::one(order).sub(&inv);
    series_alpha(k, d, order).mul(&factor)
}

impl TruncatedSeries {
    fn mul_scalar(&self, a: i64) -> Self {
        let a = BigInt::from(a);
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c * &a).collect() }
    }
}

fn extract_u64(series: &TruncatedSeries, s: usize, what: &'static str) -> Result<u64, ParamError> {
    let c = series.coeff(s);
    if c.is_negative() {
        return Err(ParamError::Overflow(what));
    }
    c.to_u64().ok_or(ParamError::Overflow(what))
}

/// Parameters as x^s coefficients of the generating functions, computed with
/// truncation order s + 4 for headroom.
pub fn ogf_params(n: usize, k: usize, d: usize, s: usize) -> Result<CodeParams, ParamError> {
    validate_hypothesis(n, k, d, s)?;
    let order = s + 4;
    let alpha = extract_u64(&series_alpha(k, d, order), s, "alpha")?;
    let beta = extract_u64(&series_beta(k, d, order), s, "beta")?;
    let file_size = extract_u64(&series_file_size(k, d, order), s, "M")?;
    let mut beta_c = Vec::with_capacity(k);
    for c in 1..=k {
        beta_c.push(extract_u64(&series_beta_c(k, d, c, order), s, "beta_c")?);
    }
    Ok(CodeParams { n, k, d, s, alpha, beta, file_size, beta_c })
}

/// Coefficients of `1/((1 - (d-k) x)(1 + x)^(d-k))`, the series counting
/// virtual layers per size.
pub fn appendix_sequence(d_minus_k: usize, depth: usize) -> Vec<BigInt> {
    if depth == 0 {
        return Vec::new();
    }
    let order = depth - 1;
    let one_plus_x_pow = TruncatedSeries::binomial_power(d_minus_k, order);
    let series = TruncatedSeries::one(order)
        .div_one_minus_ax(d_minus_k as i64)
        .div_unit(&one_plus_x_pow);
    series.coeffs()[..depth].to_vec()
}
