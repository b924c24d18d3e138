//! Acceptance suite: one test per headline property, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Run with
//! `cargo test -p osd-core --test acceptance`.

use num_bigint::BigUint;
use num_traits::One;

use osd_core::asym::{asym_unify, check_asymmetry, AsymFailReason, AsymOutcome, AsymSystem, Side};
use osd_core::compressed::{decide, CompressedOutcome};
use osd_core::generate::{mixed_corpus, sigma, sigma_prime, single_label_corpus};
use osd_core::hom::{decide_hom, typecheck};
use osd_core::oracle;
use osd_core::report::log_log_slope_of;
use osd_core::slp::SlpStore;
use osd_core::subst::{verify_unifier, DEFAULT_CAP};
use osd_core::system::{Rhs, StandardSystem};
use osd_core::ta::{ta_unify, TaOutcome};
use osd_core::vars::{VarId, VarTable};
use osd_core::FailReason;

fn sys(defs: &[(&str, &str)]) -> StandardSystem {
    let mut sys = StandardSystem::new(VarTable::new());
    for (l, r) in defs {
        let lhs = sys.vars.intern(l);
        let rhs = if let Some((a, b)) = r.split_once('+') {
            Rhs::Sum(sys.vars.intern(a.trim()), sys.vars.intern(b.trim()))
        } else if let Some((a, b)) = r.split_once('*') {
            Rhs::Prod(sys.vars.intern(a.trim()), sys.vars.intern(b.trim()))
        } else {
            Rhs::Var(sys.vars.intern(r.trim()))
        };
        sys.push(lhs, rhs);
    }
    sys
}

fn pass(criterion: &str, detail: &str) {
    println!("acceptance {criterion}: PASS - {detail}");
}

#[test]
fn criterion_01_exponential_baseline() {
    let start = std::time::Instant::now();
    let mut counts = Vec::new();
    for n in 0..=6u32 {
        let out = ta_unify(&sigma(n), 10_000_000);
        let TaOutcome::Unifiable { stats, .. } = out else {
            panic!("sigma({n}) must unify within budget");
        };
        counts.push(stats.rule_d);
    }
    for w in counts.windows(2) {
        assert!(w[1] > w[0], "splitting counts must strictly increase: {counts:?}");
    }
    for n in 2..6 {
        let ratio = counts[n + 1] as f64 / counts[n] as f64;
        assert!(ratio >= 2.0, "ratio at n={n} is {ratio}, counts {counts:?}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "sigma(0..=6) took {elapsed:?}");
    pass(
        "1 (exponential baseline)",
        &format!("splitting counts {counts:?}, total wall {elapsed:?}"),
    );
}

#[test]
fn criterion_02_polynomial_compressed_decider() {
    let mut pts = Vec::new();
    for n in 0..=14u32 {
        let s = sigma(n);
        let start = std::time::Instant::now();
        let out = decide(&s);
        let elapsed = start.elapsed();
        assert!(out.is_unifiable(), "sigma({n}) must unify");
        assert!(elapsed.as_secs() < 10, "sigma({n}) took {elapsed:?}");
        pts.push(((s.eqs.len() as f64).ln(), (out.stats().total_rules() as f64).ln()));
    }
    let slope = log_log_slope_of(&pts).expect("slope over 15 points");
    assert!(slope <= 4.5, "rule-count slope {slope}");
    pass(
        "2 (polynomial compressed decider)",
        &format!("all sigma(0..=14) unifiable, rule-count slope {slope:.2}"),
    );
}

#[test]
fn criterion_03_compression_witness() {
    // The family's longest final label sits at the deepest level of the
    // graph: levels run to n+2, and the label there has length 2^level - 1,
    // so sigma(n) peaks at 2^(n+2) - 1 (the n = 0 instance gives 3).
    let mut size_pts = Vec::new();
    for n in 0..=14u32 {
        let s = sigma(n);
        let CompressedOutcome::Unifiable { solved, stats } = decide(&s) else {
            panic!("sigma({n}) must unify");
        };
        let expect = (BigUint::one() << (n + 2)) - BigUint::one();
        assert_eq!(solved.max_label_len(), expect, "longest label of sigma({n})");
        let bound = 200 * (n as usize + 1).pow(4);
        assert!(
            stats.max_slp_size <= bound,
            "sigma({n}): {} productions exceeds {bound}",
            stats.max_slp_size
        );
        size_pts.push(((s.eqs.len() as f64).ln(), (stats.max_slp_size as f64).ln()));
    }
    let slope = log_log_slope_of(&size_pts).expect("slope");
    assert!(slope <= 4.5, "program-size slope {slope}");
    pass(
        "3 (compression witness)",
        &format!("labels reach 2^(n+2)-1 exactly; program-size slope {slope:.2}"),
    );
}

#[test]
fn criterion_04_oracle_equivalence_on_random_corpus() {
    let corpus = mixed_corpus(500);
    let mut finished = 0usize;
    for (seed, s) in corpus.iter().enumerate() {
        let compressed = decide(s).is_unifiable();
        match ta_unify(s, 10_000_000) {
            TaOutcome::Unifiable { .. } => {
                finished += 1;
                assert!(compressed, "seed {seed}: baseline says unifiable, decider disagrees");
            }
            TaOutcome::NotUnifiable { .. } => {
                finished += 1;
                assert!(!compressed, "seed {seed}: baseline says no, decider disagrees");
            }
            TaOutcome::BudgetExceeded { .. } => {}
        }
    }
    assert!(finished * 100 >= corpus.len() * 95, "only {finished}/500 finished");
    pass(
        "4 (oracle equivalence)",
        &format!("{finished}/500 baseline runs finished, 100% agreement"),
    );
}

#[test]
fn criterion_05_typed_fragment_agreement() {
    for n in 0..=10u32 {
        let s = sigma(n);
        let typed = typecheck(&s).expect("sigma is typed");
        assert_eq!(
            decide_hom(&typed).is_unifiable(),
            decide(&s).is_unifiable(),
            "sigma({n})"
        );
    }
    let mut in_fragment = 0usize;
    for (seed, s) in single_label_corpus(800).iter().enumerate() {
        let Ok(typed) = typecheck(s) else { continue };
        in_fragment += 1;
        assert_eq!(
            decide_hom(&typed).is_unifiable(),
            decide(s).is_unifiable(),
            "typed corpus seed {seed}"
        );
    }
    assert!(in_fragment >= 100, "corpus produced only {in_fragment} typed instances");
    pass(
        "5 (typed fragment)",
        &format!("sigma(0..=10) and {in_fragment} random typed instances all agree"),
    );
}

#[test]
fn criterion_06_slp_property_suite() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    // The exact example: five doublings of "ab".
    {
        let mut store = SlpStore::new();
        let a = VarId(0);
        let b = VarId(1);
        let pa = store.atom(a);
        let pb = store.atom(b);
        let mut p = store.concat(pa, pb);
        for _ in 0..5 {
            p = store.concat(p, p);
        }
        assert_eq!(store.size(p), 8);
        assert_eq!(store.len(p), &BigUint::from(64u32));
    }

    let mut rng = StdRng::seed_from_u64(1234);
    let mut store = SlpStore::new();
    let alphabet: Vec<VarId> = (0..3).map(VarId).collect();
    let mut pool: Vec<_> = alphabet.iter().map(|&v| store.atom(v)).collect();
    while pool.len() < 1000 {
        let i = pool[rng.gen_range(0..pool.len())];
        let j = pool[rng.gen_range(0..pool.len())];
        if store.depth(i).max(store.depth(j)) + 1 > 12 {
            continue;
        }
        // The exact size identity |K| = |P_I ∪ P_J| + 1 is asserted inside
        // `concat` itself on every call in this build; bound-check the
        // observable consequences here too.
        let (si, sj) = (store.size(i), store.size(j));
        let k = store.concat(i, j);
        assert!(store.size(k) <= si + sj + 1);
        assert!(store.size(k) > si.max(sj));
        assert!(store.depth(k) <= store.depth(i).max(store.depth(j)) + 1);
        assert_eq!(store.len(k), &(store.len(i) + store.len(j)));
        pool.push(k);
    }
    let cap = 1 << 20;
    let mut checked = 0u32;
    for _ in 0..1500 {
        let i = pool[rng.gen_range(0..pool.len())];
        let j = pool[rng.gen_range(0..pool.len())];
        let si = store.expand(i, cap).unwrap();
        let sj = store.expand(j, cap).unwrap();
        assert_eq!(store.equal(i, j), si == sj);
        assert_eq!(store.is_prefix(i, j), sj.starts_with(&si));
        let mm = store.first_mismatch(i, j);
        let oracle_mm = si
            .iter()
            .zip(sj.iter())
            .position(|(x, y)| x != y)
            .map(|p| (BigUint::from(p), si[p], sj[p]));
        assert_eq!(mm, oracle_mm);
        let keep = rng.gen_range(1..=si.len());
        let size_before = store.size(i);
        let depth_before = store.depth(i);
        let suf = store.suffix(i, &BigUint::from(keep)).unwrap();
        assert_eq!(store.expand(suf, cap).unwrap(), si[si.len() - keep..].to_vec());
        assert!(store.size(suf) <= size_before + depth_before as usize, "suffix size bound");
        assert!(store.depth(suf) <= depth_before, "suffix depth bound");
        checked += 1;
    }
    assert!(checked >= 1000);
    pass(
        "6 (SLP property suite)",
        &format!("{} programs, {checked} oracle comparisons, (ab)^32 has 8 productions", pool.len()),
    );
}

#[test]
fn criterion_07_unifier_soundness() {
    // Every materializable unifier from the baseline passes verification.
    let mut baseline_checked = 0usize;
    for s in mixed_corpus(500).iter() {
        if let TaOutcome::Unifiable { unifier: Some(u), .. } = ta_unify(s, 10_000_000) {
            verify_unifier(s, &u, DEFAULT_CAP).expect("baseline unifier must verify");
            baseline_checked += 1;
        }
    }
    // The compressed solved forms of the small family instances expand and
    // verify against the original equations.
    for n in 0..=3u32 {
        let s = sigma(n);
        let CompressedOutcome::Unifiable { solved, .. } = decide(&s) else {
            panic!("sigma({n}) must unify");
        };
        assert!(solved.is_dag_solved());
        let subst = solved.materialize(DEFAULT_CAP).expect("expansion fits the cap");
        verify_unifier(&s, &subst, DEFAULT_CAP).expect("expanded solved form must verify");
    }
    // Asymmetric unifiers satisfy their own stronger check.
    let mut asym_checked = 0usize;
    for n in 0..=3u32 {
        let s = sigma_prime(n);
        if let AsymOutcome::Unifiable { unifier: Some(u), .. } = asym_unify(&s, 10_000_000) {
            assert!(check_asymmetry(&u, &s), "sigma'({n}) unifier fails the asymmetry check");
            asym_checked += 1;
        } else {
            panic!("sigma'({n}) must unify");
        }
    }
    pass(
        "7 (unifier soundness)",
        &format!(
            "{baseline_checked} baseline unifiers, sigma(0..=3) expansions, {asym_checked} asymmetric unifiers all verify"
        ),
    );
}

#[test]
fn criterion_08_asymmetric_suite() {
    fn asys(defs: &[(&str, &str)]) -> AsymSystem {
        let mut sys = AsymSystem::new(VarTable::new());
        for (l, r) in defs {
            let side = |vars: &mut VarTable, s: &str| {
                if let Some((a, b)) = s.split_once('+') {
                    Side::Sum(vars.intern(a.trim()), vars.intern(b.trim()))
                } else if let Some((a, b)) = s.split_once('*') {
                    Side::Prod(vars.intern(a.trim()), vars.intern(b.trim()))
                } else {
                    Side::Var(vars.intern(s.trim()))
                }
            };
            let left = side(&mut sys.vars, l);
            let right = side(&mut sys.vars, r);
            sys.push(left, right);
        }
        sys
    }

    // The four hard-failure premises, with the expected rule.
    type Premise = (
        &'static [(&'static str, &'static str)],
        AsymFailReason,
        oracle::FailurePremise,
    );
    let premises: [Premise; 4] = [
        (
            &[("U", "V*W"), ("U", "X+Y")],
            AsymFailReason::RuleE,
            oracle::FailurePremise::ProductAndSumBothConstrained,
        ),
        (
            &[("U", "V*W"), ("W", "X+Y")],
            AsymFailReason::RuleEPrime,
            oracle::FailurePremise::SumUnderConstrainedFactor,
        ),
        (
            &[("U", "V*W"), ("X+Y", "U")],
            AsymFailReason::RuleF,
            oracle::FailurePremise::SumIntoConstrainedProduct,
        ),
        (
            &[("U", "V*W"), ("X+Y", "W")],
            AsymFailReason::RuleFPrime,
            oracle::FailurePremise::SumIntoConstrainedFactor,
        ),
    ];
    let universe = oracle::depth3_universe();
    for (defs, expected, premise) in premises {
        let s = asys(defs);
        match asym_unify(&s, 10_000) {
            AsymOutcome::NotUnifiable { reason, .. } => assert_eq!(reason, expected),
            other => panic!("{defs:?} must fail, got {:?}", other.stats()),
        }
        assert!(
            !oracle::failure_premise_has_depth3_unifier(premise, &universe),
            "{defs:?} has a depth-3 unifier, failure rule unsound"
        );
    }

    // The oriented family stays unifiable and doubles its splitting work.
    let mut counts = Vec::new();
    for n in 0..=5u32 {
        let s = sigma_prime(n);
        match asym_unify(&s, 10_000_000) {
            AsymOutcome::Unifiable { stats, unifier, .. } => {
                counts.push(stats.splitting_count());
                let u = unifier.expect("materializable at this scale");
                assert!(check_asymmetry(&u, &s), "sigma'({n})");
            }
            other => panic!("sigma'({n}) must unify, got {:?}", other.stats()),
        }
    }
    for n in 2..5 {
        let ratio = counts[n + 1] as f64 / counts[n] as f64;
        assert!(ratio >= 2.0, "splitting ratio at n={n} is {ratio}, counts {counts:?}");
    }
    pass(
        "8 (asymmetric suite)",
        &format!(
            "four failure premises rejected and search-confirmed over {} candidates; splitting counts {counts:?}",
            universe.len()
        ),
    );
}

#[test]
fn criterion_09_failure_detection() {
    let cases = [
        (vec![("Z", "V2+V3"), ("Z", "V1*V3")], FailReason::PropagationCycle),
        (vec![("X", "X1+X2"), ("X", "V*X2")], FailReason::PropagationCycle),
        (vec![("X", "Y+Z"), ("Y", "X*W")], FailReason::DependencyCycle),
    ];
    for (defs, expected) in &cases {
        let s = sys(defs);
        match ta_unify(&s, 100_000) {
            TaOutcome::NotUnifiable { reason, .. } => assert_eq!(reason, *expected, "{defs:?}"),
            other => panic!("baseline must reject {defs:?}, got {:?}", other.stats()),
        }
        match decide(&s) {
            CompressedOutcome::NotUnifiable { reason, .. } => {
                assert_eq!(reason, *expected, "{defs:?}")
            }
            other => panic!("decider must reject {defs:?}, got {:?}", other.stats()),
        }
    }
    pass(
        "9 (failure detection)",
        "both deciders reject the two propagation-cycle systems and the occurs-check system with matching reasons",
    );
}

#[test]
fn criterion_10_bookkeeping_assertions() {
    // Debug assertions are active in test builds; the bookkeeping checks
    // (label set never grows, class count never grows, at most two fresh
    // variables per class per pass, one sink after processing) live inside
    // the deciders and panic when violated. Sweep everything.
    for n in 0..=12u32 {
        let s = sigma(n);
        let out = decide(&s);
        assert!(out.is_unifiable());
        let stats = out.stats();
        assert!(stats.final_label_vars <= stats.initial_label_vars);
        assert!(stats.restarts <= stats.initial_label_vars as u64);
    }
    for n in 0..=10u32 {
        let typed = typecheck(&sigma(n)).unwrap();
        assert!(decide_hom(&typed).is_unifiable());
    }
    for n in 0..=4u32 {
        assert!(ta_unify(&sigma(n), 10_000_000).is_unifiable());
        assert!(asym_unify(&sigma_prime(n), 10_000_000).is_unifiable());
    }
    let mut label_merges = 0usize;
    for s in mixed_corpus(500).iter() {
        let out = decide(s);
        let stats = out.stats();
        assert!(stats.final_label_vars <= stats.initial_label_vars);
        assert!(stats.restarts <= stats.initial_label_vars as u64);
        if stats.restarts > 0 {
            label_merges += 1;
        }
        let _ = ta_unify(s, 1_000_000);
    }
    pass(
        "10 (bookkeeping assertions)",
        &format!(
            "full sweep with debug assertions enabled, no violations; {label_merges} corpus runs exercised restarts"
        ),
    );
}
