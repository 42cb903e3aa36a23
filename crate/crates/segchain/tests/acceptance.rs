//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values. Every tolerance is pinned here in code; exact
//! criteria compare rationals for equality, float criteria carry explicit
//! epsilons. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use segchain::chain::{
    evolve, limit_distribution, mixing_time, pair_tv, tv_distance, worst_pair_tv, Distribution,
    MarkovChain,
};
use segchain::coupling::{
    coupling_inequality_check, mixing_time_upper_bound, segregation_bound_check, CouplingKernel,
};
use segchain::formulas::{
    kappa_experiment, nb_tv, threshold_decay, threshold_decay_sup, MeetingEvidence,
};
use segchain::meetflow::{
    build_flow_network, enumerate_trajectories, extract_coupling, max_flow,
    optimal_meeting_probability, verify_duality, MeetflowBudget,
};
use segchain::prob::{ratio_pow, ratio_to_f64};
use segchain::randchain::{instance_rng, random_chain};
use segchain::separation::{
    brute_force_optimal_separation, constant_threshold_separation, separation_value,
    EnumerationBudget, SeparatingSequence, SequenceFamily,
};
use segchain::zoo::{
    birth_death_chain, haggstrom_chain, near_half_alpha, negative_binomial_chain, snap_to_rational,
    two_state_chain, SNAP_REL_TOL,
};
use segchain::Prob;

use rand::Rng;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn prob(n: i64, d: i64) -> Prob {
    Prob::from_ratio(n, d).unwrap()
}

fn point(chain: &MarkovChain, label: &str) -> Distribution {
    Distribution::point(chain.n_states(), chain.state_index(label).unwrap())
}

/// Criterion 1: strong duality on 200 seeded random chains with up to 3
/// states and horizons up to 4: max-flow, 2 minus brute-force separation and
/// the extracted coupling's meeting mass agree as exact rationals on every
/// instance. Zero tolerance.
#[test]
fn criterion_1_strong_duality_fuzz() {
    let seed = 20_240_817u64;
    let instances = 200u64;
    for i in 0..instances {
        let mut rng = instance_rng(seed, i);
        let n = rng.gen_range(1..=3usize);
        let horizon = rng.gen_range(0..=4usize);
        let chain = random_chain(&mut rng, n, 6);
        let x = chain.label(rng.gen_range(0..n)).to_string();
        let y = chain.label(rng.gen_range(0..n)).to_string();
        let report = verify_duality(
            &chain,
            &x,
            &y,
            horizon,
            MeetflowBudget::default(),
            EnumerationBudget::default(),
        )
        .unwrap();
        assert!(
            report.equal,
            "instance {i} (|S|={n}, T={horizon}): flow {} vs 2 - sep {} vs extracted {}",
            report.meeting_probability, report.optimal_separation, report.extracted_meeting
        );
    }
    println!(
        "criterion 1 PASS: strong duality exact on {instances} random instances (|S|<=3, T<=4)"
    );
}

/// Criterion 2: the six-state example: at p = 7/10 the optimal meeting
/// probability at horizon 2 is exactly 1 and the retained total variation is
/// exactly 4/25; at the rational snap of sqrt(2)/2 the retained total
/// variation is within 1e-5 of 3 - 2 sqrt(2); at p = 9/10 the meeting
/// probability is exactly below 1.
#[test]
fn criterion_2_haggstrom_example() {
    let budget = MeetflowBudget::default();

    let zoo = haggstrom_chain(&prob(7, 10)).unwrap();
    let c2 = optimal_meeting_probability(&zoo.chain, "x", "y", 2, budget).unwrap();
    assert!(c2.is_one(), "C_2 at p=7/10 is {c2}");
    let from_x = limit_distribution(&zoo.chain, &point(&zoo.chain, "x")).unwrap();
    let from_y = limit_distribution(&zoo.chain, &point(&zoo.chain, "y")).unwrap();
    let tv = tv_distance(&from_x, &from_y).unwrap();
    assert_eq!(tv.ratio(), &r(4, 25), "TV limit at p=7/10");

    let snap = snap_to_rational(std::f64::consts::FRAC_1_SQRT_2, SNAP_REL_TOL).unwrap();
    let zoo = haggstrom_chain(&Prob::new(snap).unwrap()).unwrap();
    let from_x = limit_distribution(&zoo.chain, &point(&zoo.chain, "x")).unwrap();
    let from_y = limit_distribution(&zoo.chain, &point(&zoo.chain, "y")).unwrap();
    let tv_float = tv_distance(&from_x, &from_y).unwrap().to_f64();
    let target = 3.0 - 2.0 * std::f64::consts::SQRT_2;
    assert!(
        (tv_float - target).abs() <= 1e-5,
        "TV {tv_float} vs 3 - 2 sqrt(2) = {target}"
    );

    let zoo = haggstrom_chain(&prob(9, 10)).unwrap();
    let c2_out = optimal_meeting_probability(&zoo.chain, "x", "y", 2, budget).unwrap();
    assert!(c2_out.ratio() < &BigRational::one(), "C_2 at p=9/10 is {c2_out}");

    println!(
        "criterion 2 PASS: C_2(7/10) = 1, TV = 4/25; TV(snap sqrt2/2) = {tv_float:.7} ~ {target:.7}; C_2(9/10) = {c2_out} < 1"
    );
}

/// Criterion 3: the closed-form negative binomial total variation matches
/// the direct one-sided truncated summation and the exact-tail route for 20
/// rational p values, exactly; at p = m/(m+1) it equals p^(m+1) exactly.
#[test]
fn criterion_3_nb_total_variation() {
    let ps: Vec<BigRational> = vec![
        r(0, 1),
        r(1, 10),
        r(1, 7),
        r(1, 5),
        r(1, 4),
        r(1, 3),
        r(2, 5),
        r(3, 7),
        r(1, 2),
        r(4, 7),
        r(3, 5),
        r(5, 8),
        r(2, 3),
        r(7, 10),
        r(3, 4),
        r(7, 9),
        r(4, 5),
        r(5, 6),
        r(9, 10),
        r(19, 20),
    ];
    assert_eq!(ps.len(), 20);
    for p in &ps {
        let closed = nb_tv(p).unwrap();

        // One-sided truncated summation over the region where NB(1) is the
        // larger pmf, all in exact arithmetic.
        let q = BigRational::one() - p;
        let m = if p.is_zero() {
            0u64
        } else {
            (p / &q).floor().to_integer().to_u64().unwrap()
        };
        let mut truncated = BigRational::zero();
        for k in 0..=m {
            let nb1 = ratio_pow(p, k) * &q;
            let nb2 = BigRational::from_integer(BigInt::from(k + 1)) * ratio_pow(p, k) * &q * &q;
            truncated += nb1 - nb2;
        }
        assert_eq!(closed, truncated, "truncated sum route at p = {p}");

        // Tail route: P(NB(2) > m) - P(NB(1) > m) with exact geometric tails.
        let tail1 = ratio_pow(p, m + 1);
        let tail2 = ratio_pow(p, m + 1)
            * (BigRational::from_integer(BigInt::from(m + 2))
                - BigRational::from_integer(BigInt::from(m + 1)) * p);
        assert_eq!(closed, tail2 - tail1, "tail route at p = {p}");
    }

    // p = m / (m + 1) collapses to p^(m+1).
    for m in 1..=10u64 {
        let p = BigRational::new(BigInt::from(m), BigInt::from(m + 1));
        assert_eq!(nb_tv(&p).unwrap(), ratio_pow(&p, m + 1), "m = {m}");
    }
    println!("criterion 3 PASS: NB total variation exact on 20 p values and p = m/(m+1), m <= 10");
}

/// Criterion 4: the negative binomial chain at p = m/(m+1) for
/// m in {1, 4, 9}: the mimicking coupling is exactly marginal-correct and
/// not faithful, meets with probability exactly 1 by m + 2, the retained
/// total variation equals p^(m+1) exactly, and at m = 9 the value exceeds
/// 1/e - 0.02.
#[test]
fn criterion_4_nb_chain_segregation() {
    for m in [1u32, 4, 9] {
        let p = Prob::new(BigRational::new(BigInt::from(m), BigInt::from(m + 1))).unwrap();
        let (zoo, coupling) = negative_binomial_chain(m, &p).unwrap();
        let horizon = m as usize + 2;

        coupling.check_marginal_correctness(horizon + 2).unwrap();
        let faithful = coupling.check_faithful().unwrap();
        assert!(!faithful.faithful, "m = {m}: mimicking coupling must not be faithful");

        let mtd = coupling.meeting_time_distribution(horizon).unwrap();
        assert!(mtd.at(horizon).is_one(), "m = {m}: meeting by m+2 must be sure");

        let from_x = limit_distribution(&zoo.chain, &point(&zoo.chain, "x")).unwrap();
        let from_y = limit_distribution(&zoo.chain, &point(&zoo.chain, "y")).unwrap();
        let tv = tv_distance(&from_x, &from_y).unwrap();
        let expected = ratio_pow(p.ratio(), m as u64 + 1);
        assert_eq!(tv.ratio(), &expected, "m = {m}: TV limit");

        if m == 9 {
            let kept = tv.to_f64();
            let floor = (-1.0f64).exp() - 0.02;
            assert!(kept > floor, "m = 9: {kept} must exceed 1/e - 0.02 = {floor}");
        }
    }
    println!(
        "criterion 4 PASS: mimicking coupling marginal-correct, non-faithful, sure meeting by m+2, TV = p^(m+1) for m in {{1, 4, 9}}"
    );
}

/// Criterion 5: the two-state chain at horizon 10 with a rational rate just
/// below 1 - 2^(-1/10): brute-force optimal separation equals 2 (1 - a)^10
/// exactly, the total variation equals (1 - 2a)^10 exactly, and its float
/// value is within 1e-6 of (2^(1 - 1/10) - 1)^10.
#[test]
fn criterion_5_two_state_horizon_ten() {
    let horizon = 10usize;
    // Truncate toward zero at 12 digits so the rational rate sits on the
    // side where the constant singleton sequence stays optimal.
    let alpha_real = 1.0 - 2f64.powf(-0.1);
    let denom: i64 = 1_000_000_000_000;
    let alpha = Prob::new(r((alpha_real * denom as f64).floor() as i64, denom)).unwrap();

    let zoo = two_state_chain(&alpha).unwrap();
    let (sep, seq) = brute_force_optimal_separation(
        &zoo.chain,
        "0",
        "1",
        horizon,
        SequenceFamily::All,
        EnumerationBudget::default(),
    )
    .unwrap();
    let expected_sep = BigRational::from_integer(2.into())
        * ratio_pow(&alpha.complement().into_ratio(), horizon as u64);
    assert_eq!(sep.value, expected_sep, "brute-force separation");
    assert_eq!(seq.masks(), &vec![0b01u64; horizon + 1][..], "maximizer is the constant {{0}}");

    let tv = pair_tv(&zoo.chain, "0", "1", horizon as u64).unwrap();
    let expected_tv = ratio_pow(
        &(BigRational::one() - BigRational::from_integer(2.into()) * alpha.ratio()),
        horizon as u64,
    );
    assert_eq!(tv.ratio(), &expected_tv, "exact TV at T = 10");

    let target = (2f64.powf(0.9) - 1.0).powi(10);
    let tv_float = tv.to_f64();
    assert!(
        (tv_float - target).abs() <= 1e-6,
        "TV {tv_float} vs (2^(9/10) - 1)^10 = {target}"
    );
    println!(
        "criterion 5 PASS: S_10 = 2(1-a)^10 and TV = (1-2a)^10 exactly; float TV {tv_float:.7} within 1e-6 of {target:.7}"
    );
}

/// Criterion 6: the reflected birth-and-death chain at L = 6,
/// alpha = 1/1000, t in {0, 500, ..., 5000}: interior masses are at most
/// 2 alpha exactly; the corner-mass and total-variation approximations are
/// within 8 L alpha of the exact values and the confinement approximation is
/// within 8 k alpha, all plus a 1e-12 float-comparison tolerance.
#[test]
fn criterion_6_bd_asymptotics() {
    let l = 6u32;
    let alpha = prob(1, 1000);
    let alpha_f = 1e-3f64;
    let chain = birth_death_chain(l, &alpha).unwrap().chain;
    let two_alpha = r(2, 1000);
    let float_tol = 1e-12f64;
    let envelope_b = 8.0 * l as f64 * alpha_f;

    let mut worst_b = 0.0f64;
    let mut worst_c = 0.0f64;
    for step in 0..=10u64 {
        let t = step * 500;
        let rows = segchain::chain::kernel_power_rows(&chain, t);
        // (a) interior masses, exactly.
        for i in 1..l as usize {
            assert!(rows[0][i] <= two_alpha, "P^{t}(0,{i}) exceeds 2 alpha");
            assert_eq!(rows[0][i], rows[l as usize][l as usize - i], "corner symmetry at t={t}");
        }
        // (b) corner mass and total variation.
        let exact_corner = ratio_to_f64(&rows[0][0]);
        let diff = (exact_corner
            - segchain::formulas::bd_corner_mass_approx(l, alpha_f, t))
        .abs();
        assert!(diff <= envelope_b + float_tol, "corner at t={t}: {diff}");
        worst_b = worst_b.max(diff);

        let exact_tv = pair_tv(&chain, "0", "6", t).unwrap().to_f64();
        let diff = (exact_tv - segchain::formulas::bd_tv_approx(l, alpha_f, t)).abs();
        assert!(diff <= envelope_b + float_tol, "tv at t={t}: {diff}");
        worst_b = worst_b.max(diff);

        // (c) confinement within {0..k} for every threshold.
        for k in 0..l as usize {
            let report = constant_threshold_separation(&chain, t, k).unwrap();
            let exact = report.summand_x.to_f64();
            let approx = segchain::formulas::bd_confinement_approx(k as u32, alpha_f, t);
            let diff = (exact - approx).abs();
            assert!(
                diff <= 8.0 * k as f64 * alpha_f + float_tol,
                "confinement k={k} t={t}: {diff}"
            );
            worst_c = worst_c.max(diff - 8.0 * k as f64 * alpha_f);
        }
    }
    println!(
        "criterion 6 PASS: interior <= 2a exact; worst (b) residual {worst_b:.5} <= {envelope_b}; (c) residuals within 8ka (+1e-12)"
    );
}

/// Criterion 7: the near-half construction at desk scale: L = 8,
/// delta = 0.05, T = 40000 has every constant-threshold separation exactly
/// below 1 and retains total variation within 0.02 of the schedule target
/// exp(-(ln 2 + 0.05) * 9/8); full duality is certified exactly on the
/// shrunken instance L = 2, T = 5 instead of the astronomically large one.
#[test]
fn criterion_7_near_half_at_desk_scale() {
    let report = kappa_experiment(
        8,
        0.05,
        40_000,
        MeetflowBudget::default(),
        EnumerationBudget::default(),
    )
    .unwrap();
    assert!(report.constant_separations_below_one, "constant-threshold family");
    assert_eq!(report.evidence, MeetingEvidence::ConstantFamilyOnly);
    let deviation = (report.tv_kept - report.schedule_target).abs();
    assert!(
        deviation <= 0.02,
        "tv_kept {} vs target {} (|diff| = {deviation})",
        report.tv_kept,
        report.schedule_target
    );
    assert!((report.schedule_target - 0.4334).abs() < 1e-3);

    // Shrunken instance with the same schedule shape: duality certified.
    let shrunken = kappa_experiment(
        2,
        0.05,
        5,
        MeetflowBudget::default(),
        EnumerationBudget::default(),
    )
    .unwrap();
    assert_eq!(shrunken.evidence, MeetingEvidence::FullDuality);
    let alpha = near_half_alpha(2, 0.05, 5).unwrap();
    let bd = birth_death_chain(2, &alpha).unwrap();
    let duality = verify_duality(
        &bd.chain,
        "0",
        "2",
        5,
        MeetflowBudget::default(),
        EnumerationBudget::default(),
    )
    .unwrap();
    assert!(duality.equal, "shrunken duality must be exact");

    println!(
        "criterion 7 PASS: L=8 T=40000 tv_kept {:.4} within 0.02 of {:.4}, constant separations < 1; duality exact at L=2 T=5",
        report.tv_kept, report.schedule_target
    );
}

/// Criterion 8: shift-insensitivity and near-optimality of constant
/// thresholds on small birth-and-death instances: over L <= 4, T <= 5 and
/// alpha <= 1/100, cyclic shifts of boundary-respecting sequences change the
/// separation by at most 12 L alpha, and the best boundary-respecting
/// sequence is within 12 L alpha of the best constant threshold. Exact
/// arithmetic, zero violations.
#[test]
fn criterion_8_shift_and_constant_family() {
    let mut checked_sequences = 0usize;
    for l in [2u32, 3, 4] {
        for horizon in [3usize, 5] {
            for (num, den) in [(1i64, 100i64), (1, 200)] {
                let alpha = prob(num, den);
                let chain = birth_death_chain(l, &alpha).unwrap().chain;
                let x = "0".to_string();
                let y = l.to_string();
                let slack = r(12 * l as i64, 1) * r(num, den);

                // Best boundary-respecting sequence by exhaustive search.
                let (best, best_seq) = brute_force_optimal_separation(
                    &chain,
                    &x,
                    &y,
                    horizon,
                    SequenceFamily::BoundaryRespecting,
                    EnumerationBudget::default(),
                )
                .unwrap();

                // Best constant threshold.
                let mut best_constant = BigRational::zero();
                for k in 0..l as usize {
                    let value =
                        constant_threshold_separation(&chain, horizon as u64, k).unwrap().value;
                    best_constant = best_constant.max(value);
                }
                assert!(
                    best.value <= &best_constant + &slack,
                    "L={l} T={horizon} a={num}/{den}: best {} vs constant {} + 12La {}",
                    best.value,
                    best_constant,
                    slack
                );

                // Shift stability for the maximizer and a deterministic
                // sample of boundary-respecting sequences.
                let mut sample: Vec<SeparatingSequence> = vec![best_seq];
                let mut rng = instance_rng(0x5817F7, (l as u64) << 8 | horizon as u64);
                let interior_bits: u64 = ((1u64 << l) - 1) & !1;
                for _ in 0..40 {
                    let masks: Vec<u64> = (0..=horizon)
                        .map(|_| 1 | (rng.gen::<u64>() & interior_bits))
                        .collect();
                    sample.push(SeparatingSequence::new(l as usize + 1, masks).unwrap());
                }
                for k in 0..l as usize {
                    let mask = (1u64 << (k + 1)) - 1;
                    sample.push(
                        SeparatingSequence::constant(l as usize + 1, mask, horizon).unwrap(),
                    );
                }
                for seq in &sample {
                    assert!(segchain::separation::respects_boundary_structure(
                        &chain, seq, &x, &y
                    )
                    .unwrap());
                    let base = separation_value(&chain, &x, &y, seq).unwrap().value;
                    for a in 0..=horizon {
                        let shifted = seq.cyclic_shift(a).unwrap();
                        let value = separation_value(&chain, &x, &y, &shifted).unwrap().value;
                        let delta = (&value - &base).abs();
                        assert!(
                            delta <= slack,
                            "L={l} T={horizon} a={num}/{den} shift {a}: delta {delta} > {slack}"
                        );
                    }
                    checked_sequences += 1;
                }
            }
        }
    }
    println!(
        "criterion 8 PASS: zero violations over the sweep ({checked_sequences} sequences, all shifts)"
    );
}

/// Criterion 9: the universal bounds: the halved meeting bound holds for
/// every coupling the suite constructs, the coupling inequality holds for
/// every faithful one, the meeting-based mixing bound dominates the exact
/// mixing time on the two-state family, and total variation monotonicity
/// plus submultiplicativity hold on fuzz chains. All exact.
#[test]
fn criterion_9_universal_bounds() {
    let mut couplings = 0usize;

    // Independent and sticky couplings on seeded random chains.
    for i in 0..12u64 {
        let mut rng = instance_rng(0xBED5, i);
        let n = rng.gen_range(2..=4usize);
        let chain = random_chain(&mut rng, n, 5);
        let x = chain.label(0).to_string();
        let y = chain.label(n - 1).to_string();
        let horizon = 4usize;

        let independent = CouplingKernel::independent(&chain, &x, &y).unwrap();
        let sticky = independent.make_sticky().unwrap();
        for coupling in [&independent, &sticky] {
            assert!(coupling.check_faithful().unwrap().faithful);
            let mtd = coupling.meeting_time_distribution(horizon).unwrap();
            for t in 0..=horizon {
                assert!(coupling_inequality_check(&chain, &x, &y, &mtd, t).unwrap().pass);
                assert!(segregation_bound_check(&chain, &x, &y, &mtd, t).unwrap().pass);
            }
            couplings += 1;
        }
    }

    // The mimicking couplings (not faithful: only the halved bound applies).
    for m in [1u32, 3] {
        let p = Prob::new(BigRational::new(BigInt::from(m), BigInt::from(m + 1))).unwrap();
        let (zoo, coupling) = negative_binomial_chain(m, &p).unwrap();
        let horizon = m as usize + 2;
        let mtd = coupling.meeting_time_distribution(horizon).unwrap();
        for t in 0..=horizon {
            assert!(segregation_bound_check(&zoo.chain, "x", "y", &mtd, t).unwrap().pass);
        }
        couplings += 1;
    }

    // Extracted optimal couplings from fuzz instances.
    for i in 0..12u64 {
        let mut rng = instance_rng(0xF10D, i);
        let n = rng.gen_range(2..=3usize);
        let horizon = rng.gen_range(0..=3usize);
        let chain = random_chain(&mut rng, n, 5);
        let x = chain.label(0).to_string();
        let y = chain.label(n - 1).to_string();
        let xs = enumerate_trajectories(&chain, &x, horizon, MeetflowBudget::default()).unwrap();
        let ys = enumerate_trajectories(&chain, &y, horizon, MeetflowBudget::default()).unwrap();
        let net = build_flow_network(&xs, &ys).unwrap();
        let flow = max_flow(&net);
        let plan = extract_coupling(&net, &flow);
        let mtd = plan.to_trajectory_coupling(&chain, &xs, &ys).unwrap().meeting_time_distribution();
        for t in 0..=horizon {
            assert!(segregation_bound_check(&chain, &x, &y, &mtd, t).unwrap().pass);
        }
        couplings += 1;
    }

    // The meeting-based mixing bound dominates the exact mixing time.
    let pi = Distribution::uniform(2);
    for (num, den) in [(1i64, 2i64), (1, 4), (1, 8), (3, 10), (9, 10), (1, 3)] {
        let zoo = two_state_chain(&prob(num, den)).unwrap();
        let coupling = CouplingKernel::independent(&zoo.chain, "0", "1").unwrap();
        for n in 1..=3usize {
            let met = coupling.meeting_time_distribution(n).unwrap().at(n).clone();
            if met.is_zero() {
                continue;
            }
            let bound = mixing_time_upper_bound(n as u64, &met).unwrap();
            let exact = mixing_time(&zoo.chain, &pi, 256).unwrap();
            assert!(exact <= bound, "alpha {num}/{den}, n = {n}");
        }
    }

    // Monotonicity and submultiplicativity on fuzz chains.
    for i in 0..20u64 {
        let mut rng = instance_rng(0x5EED, i);
        let n = rng.gen_range(2..=4usize);
        let chain = random_chain(&mut rng, n, 5);
        for x in 0..n {
            for y in 0..n {
                let mut previous: Option<Prob> = None;
                for t in 0..=4u64 {
                    let dx = evolve(&chain, &Distribution::point(n, x), t).unwrap();
                    let dy = evolve(&chain, &Distribution::point(n, y), t).unwrap();
                    let tv = tv_distance(&dx, &dy).unwrap();
                    if let Some(prev) = previous {
                        assert!(tv <= prev, "instance {i}, pair ({x},{y}), t={t}");
                    }
                    previous = Some(tv);
                }
            }
        }
        for m in 0..=3u64 {
            for k in 0..=3u64 {
                let lhs = worst_pair_tv(&chain, m + k).unwrap().into_ratio();
                let rhs = worst_pair_tv(&chain, m).unwrap().into_ratio()
                    * worst_pair_tv(&chain, k).unwrap().into_ratio();
                assert!(lhs <= rhs, "instance {i}: m={m} k={k}");
            }
        }
    }

    println!(
        "criterion 9 PASS: halved bound on {couplings} couplings, coupling inequality on faithful ones, mixing bound dominates, monotonicity and submultiplicativity exact"
    );
}

/// Criterion 10: the two-sided decay supremum agrees with a 1e-6-resolution
/// grid search within 1e-6 for A in {0.01, 0.1, ln 2, 1, 3}.
#[test]
fn criterion_10_threshold_decay_sup() {
    let steps = 1_000_000u32;
    for a in [0.01f64, 0.1, std::f64::consts::LN_2, 1.0, 3.0] {
        let sup = threshold_decay_sup(a).unwrap();
        let mut grid_best = 0.0f64;
        for i in 1..steps {
            let x = i as f64 / steps as f64;
            grid_best = grid_best.max(threshold_decay(a, x));
        }
        let diff = (sup - grid_best).abs();
        assert!(sup >= grid_best - 1e-12, "A = {a}: sup below grid");
        assert!(diff <= 1e-6, "A = {a}: |sup - grid| = {diff}");
    }
    println!("criterion 10 PASS: decay supremum within 1e-6 of the 1e-6 grid search on all five A values");
}
