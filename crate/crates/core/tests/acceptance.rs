//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its elapsed time (run with `--nocapture` to see them). Criterion 10, the
//! CLI end-to-end run, lives in the CLI crate's own acceptance test.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moulin::code_params::{
    appendix_sequence, closed_form_beta_c, closed_form_params, layered_params, ogf_params,
    series_beta_c,
};
use moulin::combinatorics::{binomial, subsets};
use moulin::finite_field::{PrimeField, StarConfig};
use moulin::graded_tensor::{
    cobound_u, cobound_u_sum, cobound_v, cobound_w, Middle, SpaceSig, Tensor,
};
use moulin::moulin_code::{build_instance, CodeInstance, HelpMessage, NodeContent};
use moulin::selfcheck;
use moulin::storage_sim::Cluster;

fn gf(p: u64) -> PrimeField {
    PrimeField::new(p).unwrap()
}

fn vandermonde_instance(n: usize, k: usize, d: usize, s: usize, p: u64) -> CodeInstance {
    let field = gf(p);
    let stars = StarConfig::vandermonde(n, k, d, field).unwrap();
    build_instance(n, k, d, s, field, stars).unwrap()
}

fn random_message(rng: &mut ChaCha8Rng, inst: &CodeInstance) -> Vec<u64> {
    let p = inst.field().modulus();
    (0..inst.params().file_size).map(|_| rng.gen_range(0..p)).collect()
}

fn report(criterion: &str, start: Instant, budget: Duration, detail: &str) {
    let elapsed = start.elapsed();
    println!(
        "criterion {criterion}: PASS in {:.3}s (budget {:?}) — {detail}",
        elapsed.as_secs_f64(),
        budget
    );
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its {budget:?} budget: {elapsed:?}"
    );
}

/// Criterion 1: closed forms equal generating-function coefficients exactly
/// for all (k, d, s) with 1 <= s-1 <= k <= 6, k <= d <= 9, including beta_c.
#[test]
fn criterion_1_parameter_agreement() {
    let start = Instant::now();
    let mut tuples = 0usize;
    for k in 1..=6usize {
        for d in k..=9usize {
            for s in 2..=k + 1 {
                let n = d + 1;
                let closed = closed_form_params(n, k, d, s).unwrap();
                let ogf = ogf_params(n, k, d, s).unwrap();
                assert_eq!(closed, ogf, "(k,d,s)=({k},{d},{s})");
                for c in 1..=k {
                    let coeff = series_beta_c(k, d, c, s + 4);
                    assert_eq!(
                        num_bigint_to_u64(coeff.coeff(s)),
                        closed_form_beta_c(k, d, s, c),
                        "beta_{c} at (k,d,s)=({k},{d},{s})"
                    );
                }
                tuples += 1;
            }
        }
    }
    report("1 (parameter agreement)", start, Duration::from_secs(1), &format!("{tuples} tuples"));
}

fn num_bigint_to_u64(x: &num_bigint::BigInt) -> u64 {
    use num_traits::ToPrimitive;
    x.to_u64().expect("nonnegative parameter")
}

/// Criterion 2: the virtual-layer counting series starts
/// 1, 0, 3, 2, 9, 12, 31, 54 at d-k = 2.
#[test]
fn criterion_2_series_fixture() {
    let start = Instant::now();
    let got = appendix_sequence(2, 8);
    let expect: Vec<num_bigint::BigInt> =
        [1, 0, 3, 2, 9, 12, 31, 54].iter().map(|&x| x.into()).collect();
    assert_eq!(got, expect);
    report("2 (series fixture)", start, Duration::from_secs(1), "8 coefficients");
}

/// Criterion 3: coboundary and cowedge identities on at least 100 random
/// tensors per signature, all signatures with p+q <= 4, k <= 4, d-k <= 2,
/// over GF(5) and GF(7). Exact equality.
#[test]
fn criterion_3_algebra_suite() {
    let start = Instant::now();
    let mut tensors = 0usize;

    // Vanishing squares, linearity, anti-commutation, and the star-split
    // square rule across every middle, plus the middle-split property on
    // U-middles.
    for pmod in [5u64, 7] {
        let field = gf(pmod);
        let mut rng = ChaCha8Rng::seed_from_u64(pmod * 31);
        for vdim in 0..=2usize {
            for wdim in 1..=4usize {
                for p in 0..=4usize {
                    for q in 0..=(4 - p).min(wdim) {
                        for middle in [Middle::U, Middle::V, Middle::W] {
                            let sig = SpaceSig::new(p, middle, q, vdim, wdim);
                            if sig.dim() == 0 {
                                continue;
                            }
                            for _ in 0..100 {
                                tensors += 1;
                                let t = Tensor {
                                    sig,
                                    coeffs: (0..sig.dim())
                                        .map(|_| rng.gen_range(0..pmod))
                                        .collect(),
                                };
                                let v: Vec<u64> =
                                    (0..vdim).map(|_| rng.gen_range(0..pmod)).collect();
                                let v2: Vec<u64> =
                                    (0..vdim).map(|_| rng.gen_range(0..pmod)).collect();
                                let w: Vec<u64> =
                                    (0..wdim).map(|_| rng.gen_range(0..pmod)).collect();
                                let w2: Vec<u64> =
                                    (0..wdim).map(|_| rng.gen_range(0..pmod)).collect();
                                let u: Vec<u64> =
                                    (0..vdim + wdim).map(|_| rng.gen_range(0..pmod)).collect();
                                let c = rng.gen_range(0..pmod);

                                // (d_v)^2 = 0, linearity, anti-commutation
                                assert!(cobound_v(field, &v, &cobound_v(field, &v, &t).unwrap())
                                    .unwrap()
                                    .is_zero());
                                let vc: Vec<u64> = v
                                    .iter()
                                    .zip(&v2)
                                    .map(|(&a, &b)| field.add(a, field.mul(c, b)))
                                    .collect();
                                assert_eq!(
                                    cobound_v(field, &vc, &t).unwrap(),
                                    cobound_v(field, &v, &t)
                                        .unwrap()
                                        .add(
                                            field,
                                            &cobound_v(field, &v2, &t).unwrap().scale(field, c)
                                        )
                                        .unwrap()
                                );
                                assert!(cobound_v(field, &v, &cobound_v(field, &v2, &t).unwrap())
                                    .unwrap()
                                    .add(
                                        field,
                                        &cobound_v(field, &v2, &cobound_v(field, &v, &t).unwrap())
                                            .unwrap()
                                    )
                                    .unwrap()
                                    .is_zero());

                                // same for d_w
                                assert!(cobound_w(field, &w, &cobound_w(field, &w, &t).unwrap())
                                    .unwrap()
                                    .is_zero());
                                let wc: Vec<u64> = w
                                    .iter()
                                    .zip(&w2)
                                    .map(|(&a, &b)| field.add(a, field.mul(c, b)))
                                    .collect();
                                assert_eq!(
                                    cobound_w(field, &wc, &t).unwrap(),
                                    cobound_w(field, &w, &t)
                                        .unwrap()
                                        .add(
                                            field,
                                            &cobound_w(field, &w2, &t).unwrap().scale(field, c)
                                        )
                                        .unwrap()
                                );
                                assert!(cobound_w(field, &w, &cobound_w(field, &w2, &t).unwrap())
                                    .unwrap()
                                    .add(
                                        field,
                                        &cobound_w(field, &w2, &cobound_w(field, &w, &t).unwrap())
                                            .unwrap()
                                    )
                                    .unwrap()
                                    .is_zero());

                                // cross anti-commutation and (d_u)^2 = 0
                                assert!(cobound_v(field, &v, &cobound_w(field, &w, &t).unwrap())
                                    .unwrap()
                                    .add(
                                        field,
                                        &cobound_w(field, &w, &cobound_v(field, &v, &t).unwrap())
                                            .unwrap()
                                    )
                                    .unwrap()
                                    .is_zero());
                                assert!(cobound_u_sum(
                                    field,
                                    &u,
                                    &cobound_u(field, &u, &t).unwrap()
                                )
                                .unwrap()
                                .is_zero());

                                // star-split square rule: d_u d_w = -d_u d_v
                                let (w_part, v_part) = u.split_at(wdim);
                                let lhs = cobound_u(field, &u, &cobound_w(field, w_part, &t).unwrap())
                                    .unwrap();
                                let rhs = cobound_u(field, &u, &cobound_v(field, v_part, &t).unwrap())
                                    .unwrap()
                                    .scale(field, field.neg(1));
                                assert_eq!(lhs, rhs);
                            }
                        }
                    }
                }
            }
        }
    }

    // The slice property and the cowedge commutators through the shared
    // suites at 100 trials each.
    let algebra = selfcheck::algebra_suite(3, 100);
    assert!(algebra.passed, "{}", algebra.detail);
    let commutators = selfcheck::commutator_suite(3, 100, false);
    assert!(commutators.passed, "{}", commutators.detail);

    report(
        "3 (algebra suite)",
        start,
        Duration::from_secs(10),
        &format!("{tensors} direct + {} / {}", algebra.detail, commutators.detail),
    );
}

/// Criterion 4: check-matrix rank equals the degree-s dimension count and
/// the null space dimension equals M on the four named instances.
#[test]
fn criterion_4_rank_and_file_size() {
    let start = Instant::now();
    for (n, k, d, s, p) in [
        (4, 3, 3, 2, 5u64),
        (5, 3, 4, 2, 5),
        (5, 3, 4, 3, 5),
        (6, 4, 5, 3, 7),
    ] {
        let inst = vandermonde_instance(n, k, d, s, p);
        let expected: usize = (0..=s)
            .map(|pw| {
                let t = if pw == 0 { 1 } else { (d - k).pow(pw as u32) };
                t * binomial(k, s - pw) as usize
            })
            .sum();
        assert_eq!(inst.check_rank(), expected, "rank at ({n},{k},{d},{s})");
        assert_eq!(
            inst.encoder_basis().cols() as u64,
            inst.params().file_size,
            "nullity at ({n},{k},{d},{s})"
        );
        // independent elimination pass over the stored check matrix
        assert_eq!(inst.check_matrix().rank(inst.field()), expected);
    }
    report("4 (rank and file size)", start, Duration::from_secs(30), "4 instances");
}

/// Criterion 5: every k-subset recovers random messages byte-exactly on the
/// small instances; at least 20 random k-subsets on (8,4,7,5).
#[test]
fn criterion_5_download() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0usize;
    for (n, k, d, s, p) in [
        (4, 3, 3, 2, 5u64),
        (5, 3, 4, 2, 5),
        (5, 3, 4, 3, 5),
        (6, 4, 5, 3, 7),
        (6, 2, 3, 2, 7),
    ] {
        let inst = vandermonde_instance(n, k, d, s, p);
        let msg = random_message(&mut rng, &inst);
        let phi = inst.encode(&msg).unwrap();
        let shares = inst.extract_all(&phi).unwrap();
        for subset in subsets(n, k) {
            let chosen: Vec<NodeContent> = subset.iter().map(|&h| shares[h].clone()).collect();
            let got = inst.decode_message(&inst.download(&chosen).unwrap()).unwrap();
            assert_eq!(got, msg, "({n},{k},{d},{s}) subset {subset:?}");
            total += 1;
        }
    }

    let inst = vandermonde_instance(8, 4, 7, 5, 11);
    let msg = random_message(&mut rng, &inst);
    let phi = inst.encode(&msg).unwrap();
    let shares = inst.extract_all(&phi).unwrap();
    let all_subsets = subsets(8, 4);
    for _ in 0..20 {
        let subset = &all_subsets[rng.gen_range(0..all_subsets.len())];
        let chosen: Vec<NodeContent> = subset.iter().map(|&h| shares[h].clone()).collect();
        let got = inst.decode_message(&inst.download(&chosen).unwrap()).unwrap();
        assert_eq!(got, msg, "(8,4,7,5) subset {subset:?}");
        total += 1;
    }
    report("5 (download)", start, Duration::from_secs(30), &format!("{total} subsets"));
}

/// Criterion 6: all five single failures on (5,3,4,3) rebuild the share
/// byte-identically from every helper d-subset; help length is exactly
/// beta; the measured help-space rank is at most beta, equality reported.
#[test]
fn criterion_6_single_repair() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inst = vandermonde_instance(5, 3, 4, 3, 5);
    let msg = random_message(&mut rng, &inst);
    let phi = inst.encode(&msg).unwrap();
    let shares = inst.extract_all(&phi).unwrap();
    let beta = inst.params().beta;
    let mut repairs = 0usize;
    let mut equality = true;
    for f in 0..5usize {
        let chain = inst.complement_chain(&[f]).unwrap();
        let survivors: Vec<usize> = (0..5).filter(|&h| h != f).collect();
        for helper_idx in subsets(survivors.len(), 4) {
            let messages: Vec<HelpMessage> = helper_idx
                .iter()
                .map(|&i| inst.help_message(&shares[survivors[i]], &chain).unwrap())
                .collect();
            for m in &messages {
                assert_eq!(m.symbols.len() as u64, beta, "help length");
            }
            let rebuilt = inst.repair(&messages, &chain).unwrap();
            assert_eq!(rebuilt[0], shares[f], "f={f} helpers {helper_idx:?}");
            repairs += 1;
        }
        let rank = inst.help_space_rank(survivors[0], &[f]).unwrap() as u64;
        assert!(rank <= beta, "rank {rank} exceeds beta {beta}");
        equality &= rank == beta;
    }
    report(
        "6 (single repair)",
        start,
        Duration::from_secs(30),
        &format!(
            "{repairs} repairs; help-space rank vs beta: {}",
            if equality { "equality throughout" } else { "strictly smaller somewhere" }
        ),
    );
}

/// Criterion 7: multi-failure repair. The named instances (6,4,5,3) and
/// (8,4,7,5) have n = d+1, so c >= 2 failures leave fewer than d survivors
/// and no d-helper repair exists on them; the per-helper payload beta_c is
/// still checked there literally, and the joint c = 2 and c = 3 repairs are
/// exercised bit-exactly at the same (k, d, s) with n raised to admit d
/// survivors. c = k falls back to whole-share download at d*alpha.
#[test]
fn criterion_7_multi_failure() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Literal payload check on the named instances.
    for (n, k, d, s, p) in [(6, 4, 5, 3, 7u64), (8, 4, 7, 5, 11)] {
        let inst = vandermonde_instance(n, k, d, s, p);
        let msg = random_message(&mut rng, &inst);
        let phi = inst.encode(&msg).unwrap();
        for c in [2usize, 3] {
            let failing: Vec<usize> = (0..c).collect();
            let chain = inst.complement_chain(&failing).unwrap();
            let helper = c; // lowest surviving index
            let share = inst.extract_node(&phi, helper).unwrap();
            let help = inst.help_message(&share, &chain).unwrap();
            assert_eq!(
                help.symbols.len() as u64,
                closed_form_beta_c(k, d, s, c),
                "beta_{c} on ({n},{k},{d},{s})"
            );
        }
    }

    // Joint repairs, same (k,d,s), n wide enough for d survivors.
    for (n, k, d, s, p) in [(8, 4, 5, 3, 11u64), (10, 4, 7, 5, 11)] {
        let inst = vandermonde_instance(n, k, d, s, p);
        let msg = random_message(&mut rng, &inst);
        let phi = inst.encode(&msg).unwrap();
        let shares = inst.extract_all(&phi).unwrap();
        for failing in [vec![0usize, 3], vec![1usize, 2, 5]] {
            let c = failing.len();
            let chain = inst.complement_chain(&failing).unwrap();
            let helpers: Vec<usize> = (0..n).filter(|h| !failing.contains(h)).take(d).collect();
            let messages: Vec<HelpMessage> = helpers
                .iter()
                .map(|&h| inst.help_message(&shares[h], &chain).unwrap())
                .collect();
            for m in &messages {
                assert_eq!(m.symbols.len() as u64, closed_form_beta_c(k, d, s, c));
            }
            let rebuilt = inst.repair(&messages, &chain).unwrap();
            for (i, &f) in chain.failing.iter().enumerate() {
                assert_eq!(rebuilt[i], shares[f], "({n},{k},{d},{s}) failing {failing:?}");
            }
        }
    }

    // c = k fallback ships d*alpha in total per helper.
    let inst = vandermonde_instance(9, 3, 4, 3, 11);
    let msg = random_message(&mut rng, &inst);
    let mut cluster = Cluster::new(inst, 0);
    cluster.store(&msg).unwrap();
    cluster.fail(&[1, 5, 7]).unwrap();
    let record = cluster.repair_all().unwrap();
    assert_eq!(record.symbols_per_helper, cluster.instance().params().alpha);
    assert_eq!(record.total, cluster.instance().params().alpha * 4);
    assert!(cluster.check().unwrap());

    report(
        "7 (multi-failure)",
        start,
        Duration::from_secs(60),
        "payloads on named instances; joint repairs at same (k,d,s) with feasible n",
    );
}

/// Criterion 8: the MBR identities at s = 2 and the MSR identities at
/// s = k+1, across the criterion-1 grid.
#[test]
fn criterion_8_mbr_msr_identities() {
    let start = Instant::now();
    for k in 1..=6usize {
        for d in k..=9usize {
            let mbr = closed_form_params(d + 1, k, d, 2).unwrap();
            assert_eq!(mbr.alpha, d as u64 * mbr.beta, "alpha = d beta at s=2");
            assert_eq!(
                mbr.file_size,
                (k * d) as u64 - binomial(k, 2),
                "M = kd - C(k,2) at s=2"
            );

            let msr = closed_form_params(d + 1, k, d, k + 1).unwrap();
            assert_eq!(msr.file_size, k as u64 * msr.alpha, "M = k alpha at s=k+1");
            assert_eq!(
                msr.alpha,
                (d - k + 1) as u64 * msr.beta,
                "alpha = (d-k+1) beta at s=k+1"
            );
        }
    }
    report("8 (MBR/MSR identities)", start, Duration::from_secs(1), "k <= 6, d <= 9");
}

/// Criterion 9: layered instances over GF(2) match the layered closed forms
/// and pass download and repair for k <= 4.
#[test]
fn criterion_9_layered_special_case() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cases = 0usize;
    for k in 1..=4usize {
        for s in 2..=k + 1 {
            let stars = StarConfig::layered(k).unwrap();
            let inst = build_instance(k + 1, k, k, s, gf(2), stars).unwrap();
            assert_eq!(inst.params(), &layered_params(k, s).unwrap(), "k={k} s={s}");

            let msg = random_message(&mut rng, &inst);
            let phi = inst.encode(&msg).unwrap();
            let shares = inst.extract_all(&phi).unwrap();
            for subset in subsets(k + 1, k) {
                let chosen: Vec<NodeContent> =
                    subset.iter().map(|&h| shares[h].clone()).collect();
                assert_eq!(
                    inst.decode_message(&inst.download(&chosen).unwrap()).unwrap(),
                    msg,
                    "layered k={k} s={s} subset {subset:?}"
                );
            }
            for f in 0..=k {
                let chain = inst.complement_chain(&[f]).unwrap();
                let messages: Vec<HelpMessage> = (0..=k)
                    .filter(|&h| h != f)
                    .map(|h| inst.help_message(&shares[h], &chain).unwrap())
                    .collect();
                assert_eq!(messages[0].symbols.len() as u64, inst.params().beta);
                let rebuilt = inst.repair(&messages, &chain).unwrap();
                assert_eq!(rebuilt[0], shares[f], "layered k={k} s={s} f={f}");
            }
            cases += 1;
        }
    }
    report("9 (layered special case)", start, Duration::from_secs(30), &format!("{cases} (k,s) pairs"));
}
