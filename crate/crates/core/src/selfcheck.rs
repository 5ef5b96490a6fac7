//! Self-verification suites: the algebraic identities, parameter agreement,
//! and end-to-end round trips, runnable from the CLI `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::code_params::{appendix_sequence, closed_form_params, ogf_params};
use crate::combinatorics::subsets;
use crate::finite_field::{PrimeField, StarConfig};
use crate::graded_tensor::{
    cobound_u, cobound_u_sum, cobound_v, cobound_w, cowedge, include, project, BasisIndex, Middle,
    SpaceSig, Tensor,
};
use crate::moulin_code::{build_instance, CodeInstance, HelpMessage, NodeContent};

/// How far the grids extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Standard,
    Deep,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &str, passed: bool, detail: impl Into<String>) -> SuiteResult {
    SuiteResult { name: name.to_string(), passed, detail: detail.into() }
}

/// Runs every suite; all must pass for a clean verify.
pub fn run_all(depth: Depth, seed: u64) -> Vec<SuiteResult> {
    let trials = match depth {
        Depth::Standard => 25,
        Depth::Deep => 120,
    };
    let mut out = vec![
        parameter_agreement(depth),
        appendix_fixture(),
        algebra_suite(seed, trials),
        commutator_suite(seed, trials, false),
        instance_dimensions(),
        download_suite(seed, depth),
        repair_suite(seed, depth),
        bandwidth_suite(seed),
    ];
    if depth == Depth::Deep {
        out.push(large_instance_suite(seed));
    }
    out
}

fn parameter_agreement(depth: Depth) -> SuiteResult {
    let d_max = match depth {
        Depth::Standard => 9,
        Depth::Deep => 10,
    };
    let mut checked = 0usize;
    for k in 1..=6usize {
        for d in k..=d_max {
            for s in 2..=k + 1 {
                let n = d + 1;
                let closed = match closed_form_params(n, k, d, s) {
                    Ok(p) => p,
                    Err(e) => return result("parameter agreement", false, e.to_string()),
                };
                let ogf = match ogf_params(n, k, d, s) {
                    Ok(p) => p,
                    Err(e) => return result("parameter agreement", false, e.to_string()),
                };
                if closed != ogf {
                    return result(
                        "parameter agreement",
                        false,
                        format!("closed form and ogf disagree at (k,d,s)=({k},{d},{s})"),
                    );
                }
                checked += 1;
            }
        }
    }
    result("parameter agreement", true, format!("{checked} parameter tuples"))
}

fn appendix_fixture() -> SuiteResult {
    let got = appendix_sequence(2, 8);
    let expect: Vec<num_bigint::BigInt> =
        [1, 0, 3, 2, 9, 12, 31, 54].iter().map(|&x| x.into()).collect();
    result(
        "virtual-layer series fixture",
        got == expect,
        format!("{got:?}"),
    )
}

fn random_tensor(rng: &mut ChaCha8Rng, field: PrimeField, sig: SpaceSig) -> Tensor {
    let coeffs = (0..sig.dim()).map(|_| rng.gen_range(0..field.modulus())).collect();
    Tensor { sig, coeffs }
}

fn random_vec(rng: &mut ChaCha8Rng, field: PrimeField, len: usize) -> Vec<u64> {
    (0..len).map(|_| rng.gen_range(0..field.modulus())).collect()
}

/// Coboundary identities (vanishing squares, linearity, anti-commutation,
/// the star-split square rule, and the middle direct-sum split) on random
/// tensors over GF(5) and GF(7) for every middle-full signature with
/// p+q <= 4, k <= 4, d−k <= 2.
pub fn algebra_suite(seed: u64, trials: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa1);
    let mut count = 0usize;
    for pmod in [5u64, 7] {
        let field = PrimeField::new(pmod).unwrap();
        for vdim in 0..=2usize {
            for wdim in 1..=4usize {
                for p in 0..=4usize {
                    for q in 0..=(4 - p).min(wdim) {
                        let sig = SpaceSig::new(p, Middle::U, q, vdim, wdim);
                        if sig.dim() == 0 {
                            continue;
                        }
                        for _ in 0..trials {
                            let t = random_tensor(&mut rng, field, sig);
                            let v = random_vec(&mut rng, field, vdim);
                            let v2 = random_vec(&mut rng, field, vdim);
                            let w = random_vec(&mut rng, field, wdim);
                            let u = random_vec(&mut rng, field, vdim + wdim);
                            count += 1;

                            let vv = cobound_v(field, &v, &cobound_v(field, &v, &t).unwrap())
                                .unwrap();
                            if !vv.is_zero() {
                                return result("coboundary identities", false, "(d_v)^2 != 0");
                            }
                            let anti = cobound_v(field, &v, &cobound_v(field, &v2, &t).unwrap())
                                .unwrap()
                                .add(
                                    field,
                                    &cobound_v(field, &v2, &cobound_v(field, &v, &t).unwrap())
                                        .unwrap(),
                                )
                                .unwrap();
                            if !anti.is_zero() {
                                return result(
                                    "coboundary identities",
                                    false,
                                    "d_v d_v' + d_v' d_v != 0",
                                );
                            }
                            let ww = cobound_w(field, &w, &cobound_w(field, &w, &t).unwrap())
                                .unwrap();
                            if !ww.is_zero() {
                                return result("coboundary identities", false, "(d_w)^2 != 0");
                            }
                            let cross = cobound_v(field, &v, &cobound_w(field, &w, &t).unwrap())
                                .unwrap()
                                .add(
                                    field,
                                    &cobound_w(field, &w, &cobound_v(field, &v, &t).unwrap())
                                        .unwrap(),
                                )
                                .unwrap();
                            if !cross.is_zero() {
                                return result(
                                    "coboundary identities",
                                    false,
                                    "d_v d_w + d_w d_v != 0",
                                );
                            }
                            let uu = cobound_u_sum(field, &u, &cobound_u(field, &u, &t).unwrap())
                                .unwrap();
                            if !uu.is_zero() {
                                return result("coboundary identities", false, "(d_u)^2 != 0");
                            }
                            // star-split square rule: d_u d_w = -d_u d_v
                            let (w_part, v_part) = u.split_at(wdim);
                            let dw = cobound_w(field, w_part, &t).unwrap();
                            let dv = cobound_v(field, v_part, &t).unwrap();
                            let lhs = cobound_u(field, &u, &dw).unwrap();
                            let rhs =
                                cobound_u(field, &u, &dv).unwrap().scale(field, field.neg(1));
                            if lhs != rhs {
                                return result(
                                    "coboundary identities",
                                    false,
                                    "d_u d_w != -d_u d_v",
                                );
                            }
                            // project/include consistency of the middle split
                            let back = include(&project(&t, Middle::W).unwrap(), Middle::U)
                                .unwrap()
                                .add(
                                    field,
                                    &include(&project(&t, Middle::V).unwrap(), Middle::U)
                                        .unwrap(),
                                )
                                .unwrap();
                            if back != t {
                                return result(
                                    "coboundary identities",
                                    false,
                                    "middle split is not a direct sum",
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    result("coboundary identities", true, format!("{count} random tensors"))
}

/// The commutator of each coboundary with the cowedge map. The
/// `flip_sign` hook negates the cowedge output and must make the suite
/// fail; it exists so mutation of the sign conventions is detectable.
pub fn commutator_suite(seed: u64, trials: usize, flip_sign: bool) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa2);
    let nabla = |field: PrimeField, t: &Tensor| {
        let raw = cowedge(field, t).unwrap();
        if flip_sign {
            raw.scale(field, field.neg(1))
        } else {
            raw
        }
    };
    let mut count = 0usize;
    for pmod in [5u64, 7] {
        let field = PrimeField::new(pmod).unwrap();
        for vdim in 1..=2usize {
            for wdim in 2..=4usize {
                for p in 1..=3usize {
                    for q in 1..=(4 - p).min(wdim) {
                        for _ in 0..trials.max(4) {
                            count += 1;
                            let v_word: Vec<usize> =
                                (0..p).map(|_| rng.gen_range(0..vdim)).collect();
                            let mut pool: Vec<usize> = (0..wdim).collect();
                            for i in (1..pool.len()).rev() {
                                pool.swap(i, rng.gen_range(0..=i));
                            }
                            let mut w_sub = pool[..q].to_vec();
                            w_sub.sort_unstable();
                            let v = random_vec(&mut rng, field, vdim);
                            let w = random_vec(&mut rng, field, wdim);

                            let free = SpaceSig::new(p, Middle::None, q, vdim, wdim);
                            let x = Tensor::basis(
                                free,
                                free.rank_of(&BasisIndex {
                                    v_tuple: v_word.clone(),
                                    middle_idx: None,
                                    w_subset: w_sub.clone(),
                                }),
                            );
                            let inc_sig = SpaceSig::new(p - 1, Middle::V, q, vdim, wdim);
                            let x_inc = include(
                                &Tensor::basis(
                                    inc_sig,
                                    inc_sig.rank_of(&BasisIndex {
                                        v_tuple: v_word[..p - 1].to_vec(),
                                        middle_idx: Some(v_word[p - 1]),
                                        w_subset: w_sub.clone(),
                                    }),
                                ),
                                Middle::U,
                            )
                            .unwrap();
                            let nabla_x = include(&nabla(field, &x), Middle::U).unwrap();
                            let p_sign = field.sign(p % 2 == 1);

                            // V part
                            let dv_free = refold(&cobound_v(field, &v, &x_inc).unwrap());
                            let lhs = cobound_v(field, &v, &nabla_x)
                                .unwrap()
                                .sub(field, &include(&nabla(field, &dv_free), Middle::U).unwrap())
                                .unwrap();
                            let appended = append_v(field, &x, &v);
                            let rhs = include(&nabla(field, &appended), Middle::U)
                                .unwrap()
                                .scale(field, p_sign);
                            if lhs != rhs {
                                return result(
                                    "cowedge commutators",
                                    false,
                                    format!("V commutator fails at p={p}, q={q}"),
                                );
                            }

                            // W part
                            let dw_free = refold(&cobound_w(field, &w, &x_inc).unwrap());
                            let lhs = cobound_w(field, &w, &nabla_x)
                                .unwrap()
                                .sub(field, &include(&nabla(field, &dw_free), Middle::U).unwrap())
                                .unwrap();
                            let mid_sig = SpaceSig::new(p, Middle::W, q, vdim, wdim);
                            let mut rhs_w = Tensor::zero(mid_sig);
                            for (coord, &wc) in w.iter().enumerate() {
                                if wc == 0 {
                                    continue;
                                }
                                let r = mid_sig.rank_of(&BasisIndex {
                                    v_tuple: v_word.clone(),
                                    middle_idx: Some(coord),
                                    w_subset: w_sub.clone(),
                                });
                                rhs_w.coeffs[r] = field.add(rhs_w.coeffs[r], wc);
                            }
                            let rhs =
                                include(&rhs_w, Middle::U).unwrap().scale(field, p_sign);
                            if lhs != rhs {
                                return result(
                                    "cowedge commutators",
                                    false,
                                    format!("W commutator fails at p={p}, q={q}"),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    result("cowedge commutators", true, format!("{count} random basis pairs"))
}

/// Folds a (V ⊂ U)-middle tensor back into the middle-free space one degree
/// up, inverse to the last-factor inclusion.
fn refold(t: &Tensor) -> Tensor {
    let v_mid = project(t, Middle::V).expect("U-middle input");
    let sig = v_mid.sig;
    let out_sig = SpaceSig::new(sig.p + 1, Middle::None, sig.q, sig.vdim, sig.wdim);
    let mut out = Tensor::zero(out_sig);
    for (rank, &c) in v_mid.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let idx = sig.basis_index(rank);
        let mut v_tuple = idx.v_tuple.clone();
        v_tuple.push(idx.middle_idx.unwrap());
        out.coeffs[out_sig.rank_of(&BasisIndex {
            v_tuple,
            middle_idx: None,
            w_subset: idx.w_subset,
        })] = c;
    }
    out
}

/// ν ⊗ ω → (ν ⊗ v) ⊗ ω in the middle-free spaces.
fn append_v(field: PrimeField, t: &Tensor, v: &[u64]) -> Tensor {
    let sig = t.sig;
    let out_sig = SpaceSig::new(sig.p + 1, Middle::None, sig.q, sig.vdim, sig.wdim);
    let mut out = Tensor::zero(out_sig);
    for (rank, &c) in t.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let idx = sig.basis_index(rank);
        for (coord, &vc) in v.iter().enumerate() {
            if vc == 0 {
                continue;
            }
            let mut v_tuple = idx.v_tuple.clone();
            v_tuple.push(coord);
            let r = out_sig.rank_of(&BasisIndex {
                v_tuple,
                middle_idx: None,
                w_subset: idx.w_subset.clone(),
            });
            out.coeffs[r] = field.add(out.coeffs[r], field.mul(c, vc));
        }
    }
    out
}

fn instance(n: usize, k: usize, d: usize, s: usize, p: u64) -> Result<CodeInstance, String> {
    let field = PrimeField::new(p).map_err(|e| e.to_string())?;
    let stars = StarConfig::vandermonde(n, k, d, field).map_err(|e| e.to_string())?;
    build_instance(n, k, d, s, field, stars).map_err(|e| e.to_string())
}

fn instance_dimensions() -> SuiteResult {
    // build_instance itself asserts check rank and null-space dimension, so
    // construction succeeding is the property.
    for (n, k, d, s, p) in [
        (4, 3, 3, 2, 5u64),
        (5, 3, 4, 2, 5),
        (5, 3, 4, 3, 5),
        (6, 4, 5, 3, 7),
    ] {
        match instance(n, k, d, s, p) {
            Ok(inst) => {
                if inst.encoder_basis().cols() as u64 != inst.params().file_size {
                    return result("parity rank and file size", false, "nullity != M");
                }
            }
            Err(e) => {
                return result(
                    "parity rank and file size",
                    false,
                    format!("({n},{k},{d},{s}): {e}"),
                )
            }
        }
    }
    result("parity rank and file size", true, "4 instances")
}

fn random_message(rng: &mut ChaCha8Rng, inst: &CodeInstance) -> Vec<u64> {
    let p = inst.field().modulus();
    (0..inst.params().file_size).map(|_| rng.gen_range(0..p)).collect()
}

fn download_suite(seed: u64, depth: Depth) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa3);
    let grid: &[(usize, usize, usize, usize, u64)] = match depth {
        Depth::Standard => &[(4, 3, 3, 2, 5), (5, 3, 4, 3, 5)],
        Depth::Deep => &[(4, 3, 3, 2, 5), (5, 3, 4, 3, 5), (6, 4, 5, 3, 7), (6, 2, 3, 2, 7)],
    };
    let mut count = 0usize;
    for &(n, k, d, s, p) in grid {
        let inst = match instance(n, k, d, s, p) {
            Ok(i) => i,
            Err(e) => return result("download round trip", false, e),
        };
        let msg = random_message(&mut rng, &inst);
        let phi = inst.encode(&msg).unwrap();
        let shares = inst.extract_all(&phi).unwrap();
        for subset in subsets(n, k) {
            let chosen: Vec<NodeContent> = subset.iter().map(|&h| shares[h].clone()).collect();
            let got = inst.download(&chosen).and_then(|phi| inst.decode_message(&phi));
            if got != Ok(msg.clone()) {
                return result(
                    "download round trip",
                    false,
                    format!("({n},{k},{d},{s}) subset {subset:?}"),
                );
            }
            count += 1;
        }
    }
    result("download round trip", true, format!("{count} k-subsets"))
}

fn repair_suite(seed: u64, depth: Depth) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa4);
    let grid: &[(usize, usize, usize, usize, u64)] = match depth {
        Depth::Standard => &[(5, 3, 4, 3, 5)],
        Depth::Deep => &[(5, 3, 4, 3, 5), (6, 4, 5, 3, 7), (5, 3, 4, 4, 5)],
    };
    let mut count = 0usize;
    for &(n, k, d, s, p) in grid {
        let inst = match instance(n, k, d, s, p) {
            Ok(i) => i,
            Err(e) => return result("repair round trip", false, e),
        };
        let msg = random_message(&mut rng, &inst);
        let phi = inst.encode(&msg).unwrap();
        let shares = inst.extract_all(&phi).unwrap();
        for f in 0..n {
            let chain = inst.complement_chain(&[f]).unwrap();
            let survivors: Vec<usize> = (0..n).filter(|&h| h != f).collect();
            for helper_set in subsets(survivors.len(), d) {
                let messages: Vec<HelpMessage> = helper_set
                    .iter()
                    .map(|&i| inst.help_message(&shares[survivors[i]], &chain).unwrap())
                    .collect();
                let rebuilt = inst.repair(&messages, &chain).unwrap();
                if rebuilt[0] != shares[f] {
                    return result(
                        "repair round trip",
                        false,
                        format!("({n},{k},{d},{s}) f={f} helpers {helper_set:?}"),
                    );
                }
                count += 1;
            }
        }
    }
    result("repair round trip", true, format!("{count} single repairs"))
}

fn bandwidth_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5);
    let inst = match instance(5, 3, 4, 3, 5) {
        Ok(i) => i,
        Err(e) => return result("help bandwidth", false, e),
    };
    let msg = random_message(&mut rng, &inst);
    let phi = inst.encode(&msg).unwrap();
    let mut detail = String::new();
    for f in [0usize, 3] {
        let chain = inst.complement_chain(&[f]).unwrap();
        let helper = (f + 1) % 5;
        let share = inst.extract_node(&phi, helper).unwrap();
        let help = inst.help_message(&share, &chain).unwrap();
        if help.symbols.len() as u64 != inst.params().beta {
            return result("help bandwidth", false, "length != beta");
        }
        let rank = inst.help_space_rank(helper, &[f]).unwrap() as u64;
        if rank > inst.params().beta {
            return result("help bandwidth", false, "rank exceeds beta");
        }
        detail = format!(
            "rank {} vs beta {}: {}",
            rank,
            inst.params().beta,
            if rank == inst.params().beta { "equality" } else { "strict" }
        );
    }
    result("help bandwidth", true, detail)
}

fn large_instance_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa6);
    let inst = match instance(8, 4, 7, 5, 11) {
        Ok(i) => i,
        Err(e) => return result("large instance", false, e),
    };
    let msg = random_message(&mut rng, &inst);
    let phi = inst.encode(&msg).unwrap();
    let shares = inst.extract_all(&phi).unwrap();
    for _ in 0..5 {
        let mut pool: Vec<usize> = (0..8).collect();
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.gen_range(0..=i));
        }
        let mut subset = pool[..4].to_vec();
        subset.sort_unstable();
        let chosen: Vec<NodeContent> = subset.iter().map(|&h| shares[h].clone()).collect();
        let got = inst.download(&chosen).and_then(|phi| inst.decode_message(&phi));
        if got != Ok(msg.clone()) {
            return result("large instance", false, format!("download subset {subset:?}"));
        }
    }
    let f = 3usize;
    let chain = inst.complement_chain(&[f]).unwrap();
    let messages: Vec<HelpMessage> = (0..8)
        .filter(|&h| h != f)
        .map(|h| inst.help_message(&shares[h], &chain).unwrap())
        .collect();
    let rebuilt = inst.repair(&messages, &chain).unwrap();
    if rebuilt[0] != shares[f] {
        return result("large instance", false, "repair mismatch");
    }
    result("large instance", true, "(8,4,7,5) download and repair")
}
