use serde::{Deserialize, Serialize};

use super::field::{FieldError, PrimeField};
use super::matrix::FieldMatrix;
use crate::combinatorics::subsets;

/// The n star vectors `u_h ∈ F^d` of a code, one per node, together with
/// their split into a W part (first k coordinates) and a V part (last d−k
/// coordinates). Valid configurations satisfy two spanning conditions:
/// (Sd) any d star vectors span F^d, and (Sk) the W parts of any k star
/// vectors span F^k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub field: PrimeField,
    /// Scalars generating the Vandermonde columns; empty for the layered
    /// (augmented identity) variant.
    pub star_scalars: Vec<u64>,
    /// One length-d vector per node.
    pub star_vectors: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanningCondition {
    Sd,
    Sk,
}

/// Result of the exhaustive (Sd)/(Sk) check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningReport {
    pub sd_ok: bool,
    pub sk_ok: bool,
    /// The first subset found to violate a condition, if any.
    pub first_failing_subset: Option<(SpanningCondition, Vec<usize>)>,
}

impl SpanningReport {
    pub fn all_ok(&self) -> bool {
        self.sd_ok && self.sk_ok
    }
}

fn validate_counts(n: usize, k: usize, d: usize) -> Result<(), FieldError> {
    if !(n > d && d >= k && k >= 1) {
        return Err(FieldError::BadParameters(format!(
            "need n-1 >= d >= k >= 1, got (n, k, d) = ({n}, {k}, {d})"
        )));
    }
    Ok(())
}

impl StarConfig {
    /// Vandermonde stars over the scalars `0..n-1`: node h gets
    /// `[1, a, a^2, ..., a^(d-1)]` with `a = h`. Satisfies (Sd) and (Sk)
    /// whenever the scalars are distinct, hence requires `|F| >= n`.
    pub fn vandermonde(n: usize, k: usize, d: usize, field: PrimeField) -> Result<Self, FieldError> {
        let scalars: Vec<u64> = (0..n as u64).collect();
        Self::vandermonde_with_scalars(n, k, d, field, scalars)
    }

    /// Vandermonde stars over caller-chosen distinct scalars.
    pub fn vandermonde_with_scalars(
        n: usize,
        k: usize,
        d: usize,
        field: PrimeField,
        scalars: Vec<u64>,
    ) -> Result<Self, FieldError> {
        validate_counts(n, k, d)?;
        if (field.modulus() as usize) < n {
            return Err(FieldError::FieldTooSmall {
                modulus: field.modulus(),
                needed: n as u64,
            });
        }
        if scalars.len() != n {
            return Err(FieldError::BadParameters(format!(
                "expected {} star scalars, got {}",
                n,
                scalars.len()
            )));
        }
        let mut seen = scalars.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != n || scalars.iter().any(|&a| a >= field.modulus()) {
            return Err(FieldError::BadParameters(
                "star scalars must be distinct field elements".into(),
            ));
        }
        let star_vectors = scalars
            .iter()
            .map(|&a| (0..d as u64).map(|e| field.pow(a, e)).collect())
            .collect();
        Ok(StarConfig {
            n,
            k,
            d,
            field,
            star_scalars: scalars,
            star_vectors,
        })
    }

    /// The layered configuration for `(n, k, d) = (k+1, k, k)`: the k
    /// standard basis vectors of F^k plus the all-one vector. Works over any
    /// field; GF(2) is used here.
    pub fn layered(k: usize) -> Result<Self, FieldError> {
        let field = PrimeField::new(2)?;
        Self::layered_over(k, field)
    }

    /// Layered configuration over a caller-chosen field.
    pub fn layered_over(k: usize, field: PrimeField) -> Result<Self, FieldError> {
        if k < 1 {
            return Err(FieldError::BadParameters("layered stars need k >= 1".into()));
        }
        let mut star_vectors: Vec<Vec<u64>> = Vec::with_capacity(k + 1);
        for h in 0..k {
            let mut e = vec![0u64; k];
            e[h] = 1;
            star_vectors.push(e);
        }
        star_vectors.push(vec![1u64; k]);
        Ok(StarConfig {
            n: k + 1,
            k,
            d: k,
            field,
            star_scalars: Vec::new(),
            star_vectors,
        })
    }

    /// Arbitrary star vectors, for experiments and negative tests. The
    /// spanning conditions are not enforced here; run [`check_sd_sk`].
    ///
    /// [`check_sd_sk`]: StarConfig::check_sd_sk
    pub fn from_vectors(
        n: usize,
        k: usize,
        d: usize,
        field: PrimeField,
        star_vectors: Vec<Vec<u64>>,
    ) -> Result<Self, FieldError> {
        validate_counts(n, k, d)?;
        if star_vectors.len() != n || star_vectors.iter().any(|v| v.len() != d) {
            return Err(FieldError::BadParameters(format!(
                "expected {n} star vectors of length {d}"
            )));
        }
        Ok(StarConfig {
            n,
            k,
            d,
            field,
            star_scalars: Vec::new(),
            star_vectors,
        })
    }

    /// W part of node h's star vector: the first k coordinates.
    pub fn w_part(&self, h: usize) -> &[u64] {
        &self.star_vectors[h][..self.k]
    }

    /// V part of node h's star vector: the last d−k coordinates.
    pub fn v_part(&self, h: usize) -> &[u64] {
        &self.star_vectors[h][self.k..]
    }

    /// Exhaustively tests (Sd) over all d-subsets and (Sk) over all
    /// k-subsets, reporting the first violation found.
    pub fn check_sd_sk(&self) -> SpanningReport {
        let mut report = SpanningReport {
            sd_ok: true,
            sk_ok: true,
            first_failing_subset: None,
        };
        for subset in subsets(self.n, self.d) {
            let rows: Vec<Vec<u64>> = subset.iter().map(|&h| self.star_vectors[h].clone()).collect();
            let m = FieldMatrix::from_rows(&rows, self.d).expect("star vectors have length d");
            if m.rank(self.field) != self.d {
                report.sd_ok = false;
                report
                    .first_failing_subset
                    .get_or_insert((SpanningCondition::Sd, subset));
                break;
            }
        }
        for subset in subsets(self.n, self.k) {
            let rows: Vec<Vec<u64>> = subset.iter().map(|&h| self.w_part(h).to_vec()).collect();
            let m = FieldMatrix::from_rows(&rows, self.k).expect("w parts have length k");
            if m.rank(self.field) != self.k {
                report.sk_ok = false;
                report
                    .first_failing_subset
                    .get_or_insert((SpanningCondition::Sk, subset));
                break;
            }
        }
        report
    }
}
