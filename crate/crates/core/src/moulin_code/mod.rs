//! The code itself: parity-check assembly over the graded U-spaces, message
//! encoding into a file functional, node share extraction, k-node download,
//! and d-helper repair of one or several failed nodes.
//!
//! The stored file is a functional `phi` on the direct sum of the U-spaces
//! `T^p(V) ⊗ U ⊗ Λ^q(W)` with `p + q = s - 1`, subject to one parity check
//! per basis element of the degree-s spaces `T^p(V) ⊗ Λ^(s-p)(W)`:
//!
//! - general check (1 <= p <= s-1): `phi(ν ⊗ ω) = phi(∇(ν ⊗ ω))`, the left
//!   side read through the inclusion that turns the last V factor into the
//!   middle, the right side through `W ⊂ U`;
//! - root check (p = 0): `phi(∇(ω)) = 0`;
//! - leaf check (p = s): `phi(ν) = 0`.
//!
//! Node h stores the restriction of `phi` to the spaces with the middle
//! replaced by its star vector (alpha symbols). Downloading walks the blocks
//! from `(p, q) = (s-1, 0)` to `(0, s-1)`, at each step combining k star
//! slices with the V-middle slice inferred from the previous block's checks
//! and inverting one d×d change of basis. Repair lives alongside in
//! [`ComplementChain`], [`HelpMessage`], and the repair methods on
//! [`CodeInstance`].

mod repair;

pub use repair::{ComplementChain, HelpMessage};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_params::{closed_form_params, CodeParams, ParamError};
use crate::combinatorics::{binomial, subset_rank, subset_unrank, subsets, tuples};
use crate::finite_field::{FieldError, FieldMatrix, PrimeField, StarConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("star configuration mismatch: {0}")]
    StarMismatch(String),
    #[error("star configuration violates ({0}): {1:?}")]
    SpanningCheckFailed(&'static str, Vec<usize>),
    #[error("node index {0} out of range")]
    BadNodeIndex(usize),
    #[error("expected {expected} shares/messages, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("duplicate node index {0}")]
    DuplicateNode(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("helper {0} is in the failing set")]
    HelperIsFailing(usize),
    #[error("failing set does not match the complement chain")]
    FailingSetMismatch,
    #[error("{got} failures with k = {k}: repair by whole-share download instead")]
    TooManyFailures { got: usize, k: usize },
    #[error("failing set is empty")]
    EmptyFailingSet,
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// One U-space block `T^p(V) ⊗ U ⊗ Λ^q(W)` of the file domain, with its
/// offsets into the file coordinate vector and into a node share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub p: usize,
    pub q: usize,
    /// dim T^p(V) = (d-k)^p
    pub tdim: usize,
    /// dim Λ^q(W) = C(k, q)
    pub wdim: usize,
    pub file_offset: usize,
    pub share_offset: usize,
}

impl Block {
    pub fn share_len(&self) -> usize {
        self.tdim * self.wdim
    }
}

/// Offsets of the graded blocks of one total degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub blocks: Vec<Block>,
    /// Total dimension of the U-spaces (d · share_dim).
    pub file_dim: usize,
    /// Total dimension with the middle pinned to one vector.
    pub share_dim: usize,
}

impl BlockLayout {
    /// Blocks (p, q) with p + q = degree, ascending p. Zero-dimensional
    /// blocks (q > k, or p >= 1 with d = k) are kept with zero length.
    fn new(degree: usize, vdim: usize, k: usize, d: usize) -> Self {
        let mut blocks = Vec::with_capacity(degree + 1);
        let mut file_offset = 0usize;
        let mut share_offset = 0usize;
        for p in 0..=degree {
            let q = degree - p;
            let tdim = if p == 0 { 1 } else { vdim.pow(p as u32) };
            let wdim = binomial(k, q) as usize;
            blocks.push(Block { p, q, tdim, wdim, file_offset, share_offset });
            file_offset += tdim * d * wdim;
            share_offset += tdim * wdim;
        }
        BlockLayout { blocks, file_dim: file_offset, share_dim: share_offset }
    }

    pub fn block(&self, p: usize) -> &Block {
        &self.blocks[p]
    }

    /// Index into the file coordinate vector: block p (with q implied),
    /// v-tuple rank, middle coordinate, wedge subset rank.
    pub fn file_index(&self, d: usize, p: usize, v_rank: usize, m: usize, w_rank: usize) -> usize {
        let b = &self.blocks[p];
        b.file_offset + (v_rank * d + m) * b.wdim + w_rank
    }

    /// Index into a share (middle pinned).
    pub fn share_index(&self, p: usize, v_rank: usize, w_rank: usize) -> usize {
        let b = &self.blocks[p];
        b.share_offset + v_rank * b.wdim + w_rank
    }
}

/// The stored file as a functional on the U-spaces: one evaluation per
/// canonical basis element, satisfying every parity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFunctional {
    pub evaluations: Vec<u64>,
}

/// One node's alpha-symbol share: the evaluations of phi with the middle
/// replaced by the node's star vector, blocks in ascending p.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeContent {
    pub node: usize,
    pub symbols: Vec<u64>,
}

/// A fully assembled code: parameters, field, star vectors, the parity-check
/// matrix, and the deterministic encoder basis of its null space.
#[derive(Debug, Clone)]
pub struct CodeInstance {
    params: CodeParams,
    field: PrimeField,
    stars: StarConfig,
    /// dim V = d - k
    vdim: usize,
    /// blocks of degree s-1 (the file domain / share layout)
    layout: BlockLayout,
    /// blocks of degree s-2 (the repair domain)
    help_layout: BlockLayout,
    check_matrix: FieldMatrix,
    check_rank: usize,
    /// file_dim x M; columns are the deterministic null-space basis
    encoder_basis: FieldMatrix,
    /// free columns of the check RREF; message symbol i sits at
    /// evaluations[free_cols[i]]
    free_cols: Vec<usize>,
}

/// Builds a code instance, verifying the parameter hypothesis, the field
/// size, and the star spanning conditions, then assembling the checks and
/// the encoder basis.
pub fn build_instance(
    n: usize,
    k: usize,
    d: usize,
    s: usize,
    field: PrimeField,
    stars: StarConfig,
) -> Result<CodeInstance, CodeError> {
    let params = closed_form_params(n, k, d, s)?;
    if stars.n != n || stars.k != k || stars.d != d {
        return Err(CodeError::StarMismatch(format!(
            "stars built for (n, k, d) = ({}, {}, {}), code wants ({}, {}, {})",
            stars.n, stars.k, stars.d, n, k, d
        )));
    }
    if stars.field != field {
        return Err(CodeError::StarMismatch("star field differs from code field".into()));
    }
    // A field of size n always suffices (Vandermonde stars exist), but
    // smaller fields are fine whenever the supplied stars span: the layered
    // augmented-identity configuration works over GF(2) for any k.
    let report = stars.check_sd_sk();
    if let Some((cond, subset)) = report.first_failing_subset {
        let name = match cond {
            crate::finite_field::SpanningCondition::Sd => "Sd",
            crate::finite_field::SpanningCondition::Sk => "Sk",
        };
        return Err(CodeError::SpanningCheckFailed(name, subset));
    }

    let vdim = d - k;
    let layout = BlockLayout::new(s - 1, vdim, k, d);
    let help_layout = BlockLayout::new(s - 2, vdim, k, d);
    if layout.share_dim as u64 != params.alpha {
        return Err(CodeError::Internal("share layout does not match alpha".into()));
    }

    // One check row per basis element of each degree-s space
    // T^p(V) ⊗ Λ^(s-p)(W): the included tensor minus the included cowedge
    // image, with the p = 0 (root) and p = s (leaf) halves degenerate.
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for p in 0..=s {
        let q = s - p;
        if q > k || (p >= 1 && vdim == 0) {
            continue;
        }
        let wsubs = subsets(k, q);
        for v_tuple in tuples(vdim.max(1), p) {
            for sub in &wsubs {
                let mut row = vec![0u64; layout.file_dim];
                if p >= 1 {
                    // last V factor becomes the middle (U coordinate k + j)
                    let prefix_rank = crate::combinatorics::tuple_rank(
                        vdim.max(1),
                        &v_tuple[..p - 1],
                    );
                    let m = k + v_tuple[p - 1];
                    let idx = layout.file_index(d, p - 1, prefix_rank, m, subset_rank(k, sub));
                    row[idx] = field.add(row[idx], 1);
                }
                if q >= 1 {
                    // minus the cowedge image, middle in W ⊂ U
                    let v_rank = crate::combinatorics::tuple_rank(vdim.max(1), &v_tuple);
                    for (a, &w) in sub.iter().enumerate() {
                        let mut rest = sub.clone();
                        rest.remove(a);
                        let idx =
                            layout.file_index(d, p, v_rank, w, subset_rank(k, &rest));
                        let sign = field.sign(a % 2 == 0); // minus (−1)^a
                        row[idx] = field.add(row[idx], sign);
                    }
                }
                rows.push(row);
            }
        }
    }
    let check_matrix = FieldMatrix::from_rows(&rows, layout.file_dim)?;
    let expected_rank: usize = {
        let mut acc = 0usize;
        for p in 0..=s {
            let q = s - p;
            let t = if p == 0 { 1 } else { vdim.pow(p as u32) };
            acc += t * binomial(k, q) as usize;
        }
        acc
    };
    let (encoder_basis, free_cols) = check_matrix.null_space_with_free_cols(field);
    let check_rank = layout.file_dim - encoder_basis.cols();
    if check_rank != expected_rank {
        return Err(CodeError::Internal(format!(
            "check rank {} differs from the degree-s dimension count {}",
            check_rank, expected_rank
        )));
    }
    if encoder_basis.cols() as u64 != params.file_size {
        return Err(CodeError::Internal(format!(
            "null space dimension {} differs from M = {}",
            encoder_basis.cols(),
            params.file_size
        )));
    }
    Ok(CodeInstance {
        params,
        field,
        stars,
        vdim,
        layout,
        help_layout,
        check_matrix,
        check_rank,
        encoder_basis,
        free_cols,
    })
}

impl CodeInstance {
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn stars(&self) -> &StarConfig {
        &self.stars
    }

    pub fn vdim(&self) -> usize {
        self.vdim
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn help_layout(&self) -> &BlockLayout {
        &self.help_layout
    }

    pub fn check_matrix(&self) -> &FieldMatrix {
        &self.check_matrix
    }

    pub fn check_rank(&self) -> usize {
        self.check_rank
    }

    pub fn encoder_basis(&self) -> &FieldMatrix {
        &self.encoder_basis
    }

    pub fn file_dim(&self) -> usize {
        self.layout.file_dim
    }

    /// Encodes an M-symbol message as phi = encoder_basis · message.
    pub fn encode(&self, message: &[u64]) -> Result<FileFunctional, CodeError> {
        if message.len() as u64 != self.params.file_size {
            return Err(CodeError::LengthMismatch {
                expected: self.params.file_size as usize,
                got: message.len(),
            });
        }
        let evaluations = self.encoder_basis.mul_vec(self.field, message)?;
        Ok(FileFunctional { evaluations })
    }

    /// Reads the message back off the free coordinates of phi. Inverse of
    /// [`encode`] on its image.
    ///
    /// [`encode`]: CodeInstance::encode
    pub fn decode_message(&self, phi: &FileFunctional) -> Result<Vec<u64>, CodeError> {
        if phi.evaluations.len() != self.layout.file_dim {
            return Err(CodeError::LengthMismatch {
                expected: self.layout.file_dim,
                got: phi.evaluations.len(),
            });
        }
        Ok(self.free_cols.iter().map(|&c| phi.evaluations[c]).collect())
    }

    /// True when phi satisfies every parity check.
    pub fn checks_hold(&self, phi: &FileFunctional) -> bool {
        match self.check_matrix.mul_vec(self.field, &phi.evaluations) {
            Ok(v) => v.iter().all(|&x| x == 0),
            Err(_) => false,
        }
    }

    /// The alpha symbols of node h: for every block and basis pair, the
    /// star-vector-weighted combination of phi's middle coordinates.
    pub fn extract_node(&self, phi: &FileFunctional, h: usize) -> Result<NodeContent, CodeError> {
        if h >= self.params.n {
            return Err(CodeError::BadNodeIndex(h));
        }
        if phi.evaluations.len() != self.layout.file_dim {
            return Err(CodeError::LengthMismatch {
                expected: self.layout.file_dim,
                got: phi.evaluations.len(),
            });
        }
        let d = self.params.d;
        let star = &self.stars.star_vectors[h];
        let mut symbols = Vec::with_capacity(self.layout.share_dim);
        for b in &self.layout.blocks {
            for v_rank in 0..b.tdim {
                for w_rank in 0..b.wdim {
                    let mut acc = 0u64;
                    for (m, &um) in star.iter().enumerate() {
                        if um == 0 {
                            continue;
                        }
                        let idx = self.layout.file_index(d, b.p, v_rank, m, w_rank);
                        acc = self.field.add(acc, self.field.mul(um, phi.evaluations[idx]));
                    }
                    symbols.push(acc);
                }
            }
        }
        Ok(NodeContent { node: h, symbols })
    }

    /// All n shares of an encoded file.
    pub fn extract_all(&self, phi: &FileFunctional) -> Result<Vec<NodeContent>, CodeError> {
        (0..self.params.n).map(|h| self.extract_node(phi, h)).collect()
    }

    /// Reconstructs phi exactly from any k shares: the leaf check seeds the
    /// last block, then each block's V-middle slice is pushed through the
    /// parity checks from the block before it, and the d×d change of basis
    /// (star vectors and the V coordinates, invertible by (Sk)) recovers the
    /// standard middle coordinates.
    pub fn download(&self, shares: &[NodeContent]) -> Result<FileFunctional, CodeError> {
        let k = self.params.k;
        let d = self.params.d;
        if shares.len() != k {
            return Err(CodeError::WrongCount { expected: k, got: shares.len() });
        }
        let mut seen = std::collections::BTreeSet::new();
        for sh in shares {
            if sh.node >= self.params.n {
                return Err(CodeError::BadNodeIndex(sh.node));
            }
            if !seen.insert(sh.node) {
                return Err(CodeError::DuplicateNode(sh.node));
            }
            if sh.symbols.len() != self.layout.share_dim {
                return Err(CodeError::LengthMismatch {
                    expected: self.layout.share_dim,
                    got: sh.symbols.len(),
                });
            }
        }

        // Change of basis: columns are the k star vectors then the V
        // coordinate vectors e_k .. e_(d-1).
        let mut basis = FieldMatrix::zeros(d, d);
        for (j, sh) in shares.iter().enumerate() {
            for m in 0..d {
                basis.set(m, j, self.stars.star_vectors[sh.node][m]);
            }
        }
        for j in 0..self.vdim {
            basis.set(k + j, k + j, 1);
        }
        let bt_inv = basis
            .transpose()
            .inverse(self.field)
            .map_err(|_| CodeError::Internal("change of basis singular: (Sk) violated".into()))?;

        let mut evaluations = vec![0u64; self.layout.file_dim];
        let mut y = vec![0u64; d];
        for p in (0..=(self.params.s - 1)).rev() {
            let b = self.layout.blocks[p];
            if b.share_len() == 0 {
                continue;
            }
            let q = b.q;
            for v_rank in 0..b.tdim {
                for w_rank in 0..b.wdim {
                    let sub = subset_unrank(k, q, w_rank);
                    for (j, sh) in shares.iter().enumerate() {
                        y[j] = sh.symbols[self.layout.share_index(p, v_rank, w_rank)];
                    }
                    for j in 0..self.vdim {
                        y[k + j] = if q == 0 {
                            // leaf check: phi vanishes on T^s(V)
                            0
                        } else {
                            // general check: phi(ν⊗v_j ⊗ ω) = phi(∇((ν·v_j) ⊗ ω)),
                            // read from the already recovered block (p+1, q-1)
                            let v_rank_up = v_rank * self.vdim + j;
                            let mut acc = 0u64;
                            for (a, &w) in sub.iter().enumerate() {
                                let mut rest = sub.clone();
                                rest.remove(a);
                                let idx = self.layout.file_index(
                                    d,
                                    p + 1,
                                    v_rank_up,
                                    w,
                                    subset_rank(k, &rest),
                                );
                                let term = evaluations[idx];
                                acc = if a % 2 == 0 {
                                    self.field.add(acc, term)
                                } else {
                                    self.field.sub(acc, term)
                                };
                            }
                            acc
                        };
                    }
                    let x = bt_inv.mul_vec(self.field, &y)?;
                    for (m, &xm) in x.iter().enumerate() {
                        evaluations[self.layout.file_index(d, p, v_rank, m, w_rank)] = xm;
                    }
                }
            }
        }
        Ok(FileFunctional { evaluations })
    }
}
