//! Explicit bases for the graded spaces `T^p(V) ⊗ {U|V|W|−} ⊗ Λ^q(W)` and
//! the structural maps on them: wedge-multiplication, cowedge-multiplication,
//! and the three coboundary operators.
//!
//! Throughout, `V = F^(d-k)` and `W = F^k`, and `U = F^d` splits as W on
//! coordinates `0..k` and V on coordinates `k..d`. Wedge basis elements are
//! strictly increasing index subsets; the sign of a non-sorted wedge word is
//! the parity of its inversion count.

use thiserror::Error;

use crate::combinatorics::{
    binomial, inversions, subset_rank, subset_unrank, subsets, tuple_insert_rank, tuple_rank,
    tuple_unrank,
};
use crate::finite_field::PrimeField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unsupported signature for this operator: {0}")]
    UnsupportedSignature(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// The middle factor of a graded space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Middle {
    /// No middle factor: `T^p(V) ⊗ Λ^q(W)`.
    None,
    U,
    V,
    W,
}

/// Signature of one graded space: tensor degree p, middle factor, wedge
/// degree q, and the dimensions of V and W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceSig {
    pub p: usize,
    pub middle: Middle,
    pub q: usize,
    pub vdim: usize,
    pub wdim: usize,
}

impl SpaceSig {
    pub fn new(p: usize, middle: Middle, q: usize, vdim: usize, wdim: usize) -> Self {
        SpaceSig { p, middle, q, vdim, wdim }
    }

    pub fn udim(&self) -> usize {
        self.vdim + self.wdim
    }

    pub fn middle_dim(&self) -> usize {
        match self.middle {
            Middle::None => 1,
            Middle::U => self.udim(),
            Middle::V => self.vdim,
            Middle::W => self.wdim,
        }
    }

    fn tensor_dim(&self) -> usize {
        if self.p == 0 {
            1
        } else {
            self.vdim.pow(self.p as u32)
        }
    }

    fn wedge_dim(&self) -> usize {
        binomial(self.wdim, self.q) as usize
    }

    /// Dimension `(d-k)^p * middle_dim * C(k, q)`; zero when `q > k`.
    pub fn dim(&self) -> usize {
        self.tensor_dim() * self.middle_dim() * self.wedge_dim()
    }

    /// Rank of a basis element. Enumeration order: v-tuple lexicographic
    /// (slowest), then middle coordinate, then w-subset lexicographic.
    pub fn rank_of(&self, idx: &BasisIndex) -> usize {
        debug_assert_eq!(idx.v_tuple.len(), self.p);
        debug_assert_eq!(idx.w_subset.len(), self.q);
        let v_rank = tuple_rank(self.vdim.max(1), &idx.v_tuple);
        let m_rank = match (self.middle, idx.middle_idx) {
            (Middle::None, None) => 0,
            (_, Some(m)) => m,
            _ => panic!("basis index missing middle coordinate"),
        };
        let w_rank = subset_rank(self.wdim, &idx.w_subset);
        (v_rank * self.middle_dim() + m_rank) * self.wedge_dim() + w_rank
    }

    pub fn basis_index(&self, rank: usize) -> BasisIndex {
        let wd = self.wedge_dim();
        let md = self.middle_dim();
        let w_rank = rank % wd;
        let m_rank = (rank / wd) % md;
        let v_rank = rank / (wd * md);
        BasisIndex {
            v_tuple: tuple_unrank(self.vdim.max(1), self.p, v_rank),
            middle_idx: match self.middle {
                Middle::None => None,
                _ => Some(m_rank),
            },
            w_subset: subset_unrank(self.wdim, self.q, w_rank),
        }
    }

    pub fn basis_iter(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        (0..self.dim()).map(|r| self.basis_index(r))
    }
}

/// Index of one basis tensor: a p-tuple of V coordinates, an optional middle
/// coordinate, and a strictly increasing q-subset of W coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisIndex {
    pub v_tuple: Vec<usize>,
    pub middle_idx: Option<usize>,
    pub w_subset: Vec<usize>,
}

/// A coefficient vector over the canonical basis of one graded space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub sig: SpaceSig,
    pub coeffs: Vec<u64>,
}

impl Tensor {
    pub fn zero(sig: SpaceSig) -> Self {
        Tensor { sig, coeffs: vec![0; sig.dim()] }
    }

    pub fn basis(sig: SpaceSig, rank: usize) -> Self {
        let mut t = Tensor::zero(sig);
        t.coeffs[rank] = 1;
        t
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, field: PrimeField, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.sig != other.sig {
            return Err(TensorError::SignatureMismatch(format!(
                "{:?} vs {:?}",
                self.sig, other.sig
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| field.add(a, b))
            .collect();
        Ok(Tensor { sig: self.sig, coeffs })
    }

    pub fn sub(&self, field: PrimeField, other: &Tensor) -> Result<Tensor, TensorError> {
        self.add(field, &other.scale(field, field.neg(1)))
    }

    pub fn scale(&self, field: PrimeField, c: u64) -> Tensor {
        Tensor {
            sig: self.sig,
            coeffs: self.coeffs.iter().map(|&a| field.mul(a, c)).collect(),
        }
    }
}

/// A formal sum of tensors in distinct graded spaces. Zero parts are dropped
/// and parts are kept sorted, so equal sums compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TensorSum {
    parts: Vec<Tensor>,
}

fn sig_key(sig: &SpaceSig) -> (usize, usize, u8) {
    let m = match sig.middle {
        Middle::None => 0u8,
        Middle::U => 1,
        Middle::V => 2,
        Middle::W => 3,
    };
    (sig.p, sig.q, m)
}

impl TensorSum {
    pub fn zero() -> Self {
        TensorSum::default()
    }

    pub fn from_tensor(t: Tensor) -> Self {
        let mut s = TensorSum::default();
        if !t.is_zero() {
            s.parts.push(t);
        }
        s
    }

    pub fn parts(&self) -> &[Tensor] {
        &self.parts
    }

    pub fn part(&self, sig: SpaceSig) -> Option<&Tensor> {
        self.parts.iter().find(|t| t.sig == sig)
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn add_tensor(&mut self, field: PrimeField, t: Tensor) {
        if t.is_zero() {
            return;
        }
        if let Some(existing) = self.parts.iter_mut().find(|u| u.sig == t.sig) {
            *existing = existing.add(field, &t).expect("matching signatures");
            if existing.is_zero() {
                self.parts.retain(|u| !u.is_zero());
            }
        } else {
            self.parts.push(t);
            self.parts.sort_by_key(|t| sig_key(&t.sig));
        }
    }

    pub fn add(&self, field: PrimeField, other: &TensorSum) -> TensorSum {
        let mut out = self.clone();
        for t in &other.parts {
            out.add_tensor(field, t.clone());
        }
        out
    }

    pub fn sub(&self, field: PrimeField, other: &TensorSum) -> TensorSum {
        self.add(field, &other.scale(field, field.neg(1)))
    }

    pub fn scale(&self, field: PrimeField, c: u64) -> TensorSum {
        let mut out = TensorSum::default();
        for t in &self.parts {
            out.add_tensor(field, t.scale(field, c));
        }
        out
    }
}

/// A tensor power `T^q(W)` before wedge normalization; basis indexed by
/// q-tuples over the W coordinates in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WTensor {
    pub wdim: usize,
    pub q: usize,
    pub coeffs: Vec<u64>,
}

impl WTensor {
    pub fn zero(wdim: usize, q: usize) -> Self {
        let dim = if q == 0 { 1 } else { wdim.pow(q as u32) };
        WTensor { wdim, q, coeffs: vec![0; dim] }
    }

    /// The pure word `w_{j_1} ⊗ ... ⊗ w_{j_q}` of basis vectors.
    pub fn word(wdim: usize, word: &[usize]) -> Self {
        let mut t = WTensor::zero(wdim, word.len());
        t.coeffs[tuple_rank(wdim.max(1), word)] = 1;
        t
    }
}

/// Normalizes a wedge word: `None` when an index repeats, otherwise the
/// sorted subset and whether the sorting permutation is odd.
pub fn wedge_word(word: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut sorted = word.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sorted, inversions(word) % 2 == 1))
}

/// Wedge-multiplication `Δ: T^q(W) → Λ^q(W)`: each basis word with a repeated
/// index maps to zero, every other word to the sorted wedge basis element
/// with the sign of the sorting permutation.
pub fn wedge_multiply(field: PrimeField, t: &WTensor) -> Tensor {
    let sig = SpaceSig::new(0, Middle::None, t.q, 0, t.wdim);
    let mut out = Tensor::zero(sig);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let word = tuple_unrank(t.wdim.max(1), t.q, rank);
        if let Some((sorted, odd)) = wedge_word(&word) {
            let target = subset_rank(t.wdim, &sorted);
            let signed = field.mul(c, field.sign(odd));
            out.coeffs[target] = field.add(out.coeffs[target], signed);
        }
    }
    out
}

/// A rank-1 tensor: p vectors in V, an optional middle vector, q vectors in
/// W, and a scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rank1 {
    pub v_factors: Vec<Vec<u64>>,
    pub middle: Option<Vec<u64>>,
    pub w_factors: Vec<Vec<u64>>,
    pub scalar: u64,
}

/// Multilinear expansion of a rank-1 tensor onto the canonical basis of the
/// given space; wedge factors pass through the sorted-sign normalization.
pub fn expand_rank1(field: PrimeField, r: &Rank1, sig: SpaceSig) -> Result<Tensor, TensorError> {
    if r.v_factors.len() != sig.p
        || r.w_factors.len() != sig.q
        || r.middle.is_some() != (sig.middle != Middle::None)
    {
        return Err(TensorError::ShapeMismatch(format!(
            "rank-1 factors ({} v, middle {}, {} w) do not fit {:?}",
            r.v_factors.len(),
            r.middle.is_some(),
            r.w_factors.len(),
            sig
        )));
    }
    let mdim = sig.middle_dim();
    if let Some(m) = &r.middle {
        if m.len() != mdim {
            return Err(TensorError::ShapeMismatch(format!(
                "middle vector of length {}, expected {}",
                m.len(),
                mdim
            )));
        }
    }
    for v in &r.v_factors {
        if v.len() != sig.vdim {
            return Err(TensorError::ShapeMismatch("V factor of wrong length".into()));
        }
    }
    for w in &r.w_factors {
        if w.len() != sig.wdim {
            return Err(TensorError::ShapeMismatch("W factor of wrong length".into()));
        }
    }

    let mut out = Tensor::zero(sig);
    if r.scalar == 0 || sig.dim() == 0 {
        return Ok(out);
    }
    // Expand the tensor-power part, the middle, and the wedge part
    // independently; the wedge part collects signed sorted subsets.
    let v_terms = expand_product(field, &r.v_factors, sig.vdim);
    let m_terms: Vec<(usize, u64)> = match &r.middle {
        None => vec![(0, 1)],
        Some(m) => m
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (i, c))
            .collect(),
    };
    let w_raw = expand_product(field, &r.w_factors, sig.wdim);
    let mut w_terms: Vec<(usize, u64)> = Vec::new();
    for (rank, c) in w_raw {
        let word = tuple_unrank(sig.wdim.max(1), sig.q, rank);
        if let Some((sorted, odd)) = wedge_word(&word) {
            w_terms.push((subset_rank(sig.wdim, &sorted), field.mul(c, field.sign(odd))));
        }
    }

    let wd = sig.wedge_dim();
    let md = sig.middle_dim();
    for &(vr, vc) in &v_terms {
        for &(mr, mc) in &m_terms {
            let base = (vr * md + mr) * wd;
            let vm = field.mul(field.mul(vc, mc), r.scalar);
            for &(wr, wc) in &w_terms {
                let idx = base + wr;
                out.coeffs[idx] = field.add(out.coeffs[idx], field.mul(vm, wc));
            }
        }
    }
    Ok(out)
}

/// All tuple-basis terms of a product of dense vectors, as (rank, coeff).
fn expand_product(field: PrimeField, factors: &[Vec<u64>], dim: usize) -> Vec<(usize, u64)> {
    let mut terms: Vec<(usize, u64)> = vec![(0, 1)];
    for f in factors {
        let mut next = Vec::with_capacity(terms.len() * dim);
        for &(rank, c) in &terms {
            for (i, &fi) in f.iter().enumerate() {
                if fi != 0 {
                    next.push((rank * dim + i, field.mul(c, fi)));
                }
            }
        }
        terms = next;
    }
    terms
}

/// Per-wedge-rank extraction table: for each basis wedge of `Λ^q(F^k)`, the
/// (middle coordinate, reduced wedge rank, odd sign) triples of pulling
/// each constituent to the front with alternating signs.
fn extraction_table(k: usize, q: usize) -> Vec<Vec<(usize, usize, bool)>> {
    subsets(k, q)
        .into_iter()
        .map(|sub| {
            sub.iter()
                .enumerate()
                .map(|(a, &w)| {
                    let mut rest = sub.clone();
                    rest.remove(a);
                    (w, subset_rank(k, &rest), a % 2 == 1)
                })
                .collect()
        })
        .collect()
}

/// Per-wedge-rank append table: for each basis wedge of `Λ^q(F^k)` and each
/// coordinate not already present, the enlarged wedge rank and the parity of
/// moving the appended coordinate into sorted position.
fn append_table(k: usize, q: usize) -> Vec<Vec<Option<(usize, bool)>>> {
    subsets(k, q)
        .into_iter()
        .map(|sub| {
            (0..k)
                .map(|coord| {
                    if sub.contains(&coord) {
                        return None;
                    }
                    let larger = sub.iter().filter(|&&x| x > coord).count();
                    let mut enlarged = sub.clone();
                    enlarged.insert(sub.len() - larger, coord);
                    Some((subset_rank(k, &enlarged), larger % 2 == 1))
                })
                .collect()
        })
        .collect()
}

/// Cowedge-multiplication `∇: T^p(V) ⊗ Λ^(q+1)(W) → T^p(V) ⊗ W ⊗ Λ^q(W)`.
/// On a basis tensor it brings each wedge constituent to the middle with
/// alternating signs.
pub fn cowedge(field: PrimeField, t: &Tensor) -> Result<Tensor, TensorError> {
    if t.sig.middle != Middle::None || t.sig.q == 0 {
        return Err(TensorError::UnsupportedSignature(format!(
            "cowedge needs a middle-free space of wedge degree >= 1, got {:?}",
            t.sig
        )));
    }
    let out_sig = SpaceSig::new(t.sig.p, Middle::W, t.sig.q - 1, t.sig.vdim, t.sig.wdim);
    let mut out = Tensor::zero(out_sig);
    let wd_in = t.sig.wedge_dim();
    let wd_out = out_sig.wedge_dim();
    let table = extraction_table(t.sig.wdim, t.sig.q);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w_rank = rank % wd_in;
        let v_rank = rank / wd_in; // middle dim is 1 on input
        for &(mid, rest_rank, odd) in &table[w_rank] {
            let target = (v_rank * t.sig.wdim + mid) * wd_out + rest_rank;
            let signed = field.mul(c, field.sign(odd));
            out.coeffs[target] = field.add(out.coeffs[target], signed);
        }
    }
    Ok(out)
}

/// Coboundary `∂_v^V`: inserts v into each of the p+1 gaps of the tensor
/// power segment with alternating signs. A middle-free space of tensor
/// degree 0 maps to the zero tensor of `U ⊗ Λ^q(W)`.
pub fn cobound_v(field: PrimeField, v: &[u64], t: &Tensor) -> Result<Tensor, TensorError> {
    if v.len() != t.sig.vdim {
        return Err(TensorError::ShapeMismatch(format!(
            "vector of length {} in V of dimension {}",
            v.len(),
            t.sig.vdim
        )));
    }
    match t.sig.middle {
        Middle::None if t.sig.p == 0 => {
            return Ok(Tensor::zero(SpaceSig::new(
                0,
                Middle::U,
                t.sig.q,
                t.sig.vdim,
                t.sig.wdim,
            )));
        }
        Middle::None => {
            return Err(TensorError::UnsupportedSignature(
                "cobound_v on a middle-free space of positive degree; include it first".into(),
            ));
        }
        _ => {}
    }
    let out_sig = SpaceSig::new(t.sig.p + 1, t.sig.middle, t.sig.q, t.sig.vdim, t.sig.wdim);
    let mut out = Tensor::zero(out_sig);
    let tail = t.sig.middle_dim() * t.sig.wedge_dim();
    let base = t.sig.vdim.max(1);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mw_rank = rank % tail;
        let v_rank = rank / tail;
        for gap in 0..=t.sig.p {
            let gap_sign = field.sign(gap % 2 == 1);
            for (coord, &vc) in v.iter().enumerate() {
                if vc == 0 {
                    continue;
                }
                let inserted = tuple_insert_rank(base, t.sig.p, v_rank, gap, coord);
                let target = inserted * tail + mw_rank;
                let add = field.mul(c, field.mul(vc, gap_sign));
                out.coeffs[target] = field.add(out.coeffs[target], add);
            }
        }
    }
    Ok(out)
}

/// Coboundary `∂_w^W`: appends `∧ w` to the wedge segment with the sign
/// `(-1)^(p+q)`, normalizing through the sorted wedge basis.
pub fn cobound_w(field: PrimeField, w: &[u64], t: &Tensor) -> Result<Tensor, TensorError> {
    if w.len() != t.sig.wdim {
        return Err(TensorError::ShapeMismatch(format!(
            "vector of length {} in W of dimension {}",
            w.len(),
            t.sig.wdim
        )));
    }
    if t.sig.middle == Middle::None {
        return Err(TensorError::UnsupportedSignature(
            "cobound_w needs a middle factor; include it first".into(),
        ));
    }
    let out_sig = SpaceSig::new(t.sig.p, t.sig.middle, t.sig.q + 1, t.sig.vdim, t.sig.wdim);
    let mut out = Tensor::zero(out_sig);
    if out_sig.dim() == 0 {
        return Ok(out);
    }
    let grade_sign = field.sign((t.sig.p + t.sig.q) % 2 == 1);
    let wd_in = t.sig.wedge_dim();
    let wd_out = out_sig.wedge_dim();
    let table = append_table(t.sig.wdim, t.sig.q);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w_rank = rank % wd_in;
        let vm_rank = rank / wd_in;
        for (coord, &wc) in w.iter().enumerate() {
            if wc == 0 {
                continue;
            }
            // Appended at the end, then moved to sorted position past every
            // larger element.
            let Some((enlarged, odd)) = table[w_rank][coord] else {
                continue;
            };
            let target = vm_rank * wd_out + enlarged;
            let sign = field.mul(grade_sign, field.sign(odd));
            let add = field.mul(c, field.mul(wc, sign));
            out.coeffs[target] = field.add(out.coeffs[target], add);
        }
    }
    Ok(out)
}

/// Coboundary `∂_u^U = ∂_v^V + ∂_w^W` for `u = (w-part, v-part)` under the
/// coordinate split of U. The two images live in different spaces, so the
/// result is a formal sum.
pub fn cobound_u(field: PrimeField, u: &[u64], t: &Tensor) -> Result<TensorSum, TensorError> {
    if u.len() != t.sig.udim() {
        return Err(TensorError::ShapeMismatch(format!(
            "vector of length {} in U of dimension {}",
            u.len(),
            t.sig.udim()
        )));
    }
    let (w_part, v_part) = u.split_at(t.sig.wdim);
    let mut out = TensorSum::zero();
    out.add_tensor(field, cobound_v(field, v_part, t)?);
    out.add_tensor(field, cobound_w(field, w_part, t)?);
    Ok(out)
}

/// Applies `∂_u^U` to every part of a formal sum.
pub fn cobound_u_sum(field: PrimeField, u: &[u64], s: &TensorSum) -> Result<TensorSum, TensorError> {
    let mut out = TensorSum::zero();
    for t in s.parts() {
        let image = cobound_u(field, u, t)?;
        out = out.add(field, &image);
    }
    Ok(out)
}

/// Inclusion of a V- or W-middle space into the U-middle space of the same
/// column: W occupies U coordinates `0..k`, V occupies `k..d`.
pub fn include(t: &Tensor, target: Middle) -> Result<Tensor, TensorError> {
    if target != Middle::U {
        return Err(TensorError::UnsupportedSignature(
            "inclusion targets the U-middle space".into(),
        ));
    }
    let offset = match t.sig.middle {
        Middle::W => 0,
        Middle::V => t.sig.wdim,
        _ => {
            return Err(TensorError::UnsupportedSignature(format!(
                "cannot include from {:?}",
                t.sig.middle
            )))
        }
    };
    let out_sig = SpaceSig::new(t.sig.p, Middle::U, t.sig.q, t.sig.vdim, t.sig.wdim);
    let mut out = Tensor::zero(out_sig);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut idx = t.sig.basis_index(rank);
        idx.middle_idx = Some(idx.middle_idx.expect("middle-full source") + offset);
        out.coeffs[out_sig.rank_of(&idx)] = c;
    }
    Ok(out)
}

/// Projection of a U-middle space onto its V- or W-middle summand.
pub fn project(t: &Tensor, target: Middle) -> Result<Tensor, TensorError> {
    if t.sig.middle != Middle::U {
        return Err(TensorError::UnsupportedSignature(
            "projection starts from the U-middle space".into(),
        ));
    }
    let (offset, span) = match target {
        Middle::W => (0, t.sig.wdim),
        Middle::V => (t.sig.wdim, t.sig.vdim),
        _ => {
            return Err(TensorError::UnsupportedSignature(format!(
                "cannot project onto {:?}",
                target
            )))
        }
    };
    let out_sig = SpaceSig::new(t.sig.p, target, t.sig.q, t.sig.vdim, t.sig.wdim);
    let mut out = Tensor::zero(out_sig);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let idx = t.sig.basis_index(rank);
        let m = idx.middle_idx.expect("U-middle source");
        if m >= offset && m < offset + span {
            let target_idx = BasisIndex {
                middle_idx: Some(m - offset),
                ..idx
            };
            out.coeffs[out_sig.rank_of(&target_idx)] = c;
        }
    }
    Ok(out)
}
