//! Problem generators: the adversarial σ/σ′ families and seeded random
//! standard-form systems.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asym::{AsymSystem, Side};
use crate::system::{Rhs, StandardSystem};
use crate::vars::{VarId, VarTable};

/// `X` followed by `i` ones and optionally a trailing two, e.g. `X_112`.
fn x_name(ones: u32, trailing_two: bool) -> String {
    let mut s = String::from("X");
    if ones > 0 || trailing_two {
        s.push('_');
        for _ in 0..ones {
            s.push('1');
        }
        if trailing_two {
            s.push('2');
        }
    }
    s
}

fn y_name(twos: u32, trailing_one: bool) -> String {
    let mut s = String::from("Y");
    if twos > 0 || trailing_one {
        s.push('_');
        for _ in 0..twos {
            s.push('2');
        }
        if trailing_one {
            s.push('1');
        }
    }
    s
}

/// The five equation schemas instantiated for all `0 <= i <= n`, as a set
/// (overlapping instances collapse). The single label variable is `T`.
///
/// The family is unifiable and no cancellation rule applies to it, yet it
/// forces the splitting-rule baseline into exponentially many sum
/// transformations.
pub fn sigma(n: u32) -> StandardSystem {
    let mut sys = StandardSystem::new(VarTable::new());
    let mut seen = BTreeSet::new();
    let mut push = |sys: &mut StandardSystem, lhs: VarId, rhs: Rhs| {
        if seen.insert((lhs, rhs)) {
            sys.push(lhs, rhs);
        }
    };
    let t = sys.vars.intern("T");
    for i in 0..=n {
        let x_i = sys.vars.intern(&x_name(i, false));
        let x_i1 = sys.vars.intern(&x_name(i + 1, false));
        let x_i2 = sys.vars.intern(&x_name(i, true));
        let y_i = sys.vars.intern(&y_name(i, false));
        let y_i1 = sys.vars.intern(&y_name(i, true));
        let y_next = sys.vars.intern(&y_name(i + 1, false));
        let x_i1_2 = sys.vars.intern(&x_name(i + 1, true));
        let x_i2_plain = sys.vars.intern(&x_name(i + 2, false));
        let x = sys.vars.intern("X");
        let y = sys.vars.intern("Y");

        push(&mut sys, x_i, Rhs::Sum(x_i1, x_i2));
        push(&mut sys, y_i, Rhs::Sum(y_i1, y_next));
        push(&mut sys, y_i1, Rhs::Prod(t, x_i2));
        push(&mut sys, x, Rhs::Prod(t, y));
        push(&mut sys, x_i1, Rhs::Sum(x_i2_plain, x_i1_2));
    }
    debug_assert!(sys.validate().is_ok());
    sys
}

/// The asymmetric orientation of [`sigma`]: the same five schemas with the
/// compound on the left and the irreducibility flag on the variable side.
pub fn sigma_prime(n: u32) -> AsymSystem {
    let symmetric = sigma(n);
    let mut sys = AsymSystem::new(symmetric.vars.clone());
    for eq in &symmetric.eqs {
        let left = match eq.rhs {
            Rhs::Var(v) => Side::Var(v),
            Rhs::Sum(a, b) => Side::Sum(a, b),
            Rhs::Prod(a, b) => Side::Prod(a, b),
        };
        sys.push(left, Side::Var(eq.lhs));
    }
    sys
}

/// Parameters for [`random_system`]. Generation is deterministic in the
/// seed and the parameters.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub seed: u64,
    /// Number of variables to draw from.
    pub vars: u32,
    pub sums: u32,
    pub prods: u32,
    /// Size of the pool used for product left factors.
    pub labels: u32,
    /// Bias toward reusing an existing left-hand side, to exercise the
    /// cancellation and splitting rules.
    pub share_lhs: f64,
    /// When set, right-side variables always have higher indices than the
    /// left side, which keeps both failure-detection graphs acyclic.
    pub acyclic: bool,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            vars: 8,
            sums: 5,
            prods: 5,
            labels: 3,
            share_lhs: 0.3,
            acyclic: false,
        }
    }
}

/// A seeded standard-form system over variables `v0..`.
pub fn random_system(spec: &GenSpec) -> StandardSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sys = StandardSystem::new(VarTable::new());
    let n = spec.vars.max(2);
    let ids: Vec<VarId> = (0..n).map(|i| sys.vars.intern(&format!("v{i}"))).collect();
    let labels = spec.labels.clamp(1, n) as usize;

    let mut lhs_pool: Vec<VarId> = Vec::new();
    let pick_lhs = |rng: &mut ChaCha8Rng, lhs_pool: &mut Vec<VarId>, ids: &[VarId]| {
        if !lhs_pool.is_empty() && rng.gen_bool(spec.share_lhs) {
            lhs_pool[rng.gen_range(0..lhs_pool.len())]
        } else {
            // Keep room below the top so acyclic mode can pick right sides.
            let max = if spec.acyclic { ids.len() - 1 } else { ids.len() };
            let v = ids[rng.gen_range(0..max)];
            lhs_pool.push(v);
            v
        }
    };

    let total = spec.sums + spec.prods;
    let mut kinds: Vec<bool> = (0..total).map(|i| i < spec.sums).collect();
    // Deterministic shuffle of sum/product order.
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, rng.gen_range(0..=i));
    }

    for is_sum in kinds {
        let lhs = pick_lhs(&mut rng, &mut lhs_pool, &ids);
        let pick_above = |rng: &mut ChaCha8Rng| {
            if spec.acyclic {
                let lo = lhs.0 + 1;
                ids[rng.gen_range(lo..n) as usize]
            } else {
                ids[rng.gen_range(0..n) as usize]
            }
        };
        let rhs = if is_sum {
            Rhs::Sum(pick_above(&mut rng), pick_above(&mut rng))
        } else {
            let label = ids[rng.gen_range(0..labels)];
            Rhs::Prod(label, pick_above(&mut rng))
        };
        sys.push(lhs, rhs);
    }
    debug_assert!(sys.validate().is_ok());
    sys
}

/// A deterministic mixed corpus of small systems: varying sizes, label
/// counts, sharing bias, with and without guaranteed acyclicity.
pub fn mixed_corpus(count: u64) -> Vec<StandardSystem> {
    (0..count)
        .map(|seed| {
            random_system(&GenSpec {
                seed,
                vars: 2 + (seed % 7) as u32,
                sums: 1 + (seed % 5) as u32,
                prods: 1 + (seed % 4) as u32,
                labels: 1 + (seed % 3) as u32,
                share_lhs: 0.25 + (seed % 4) as f64 * 0.15,
                acyclic: seed % 2 == 0,
            })
        })
        .collect()
}

/// Like [`mixed_corpus`] but with a single label variable, so most
/// instances land in the typed fragment.
pub fn single_label_corpus(count: u64) -> Vec<StandardSystem> {
    (0..count)
        .map(|seed| {
            random_system(&GenSpec {
                seed,
                vars: 2 + (seed % 7) as u32,
                sums: (seed % 5) as u32,
                prods: 1 + (seed % 4) as u32,
                labels: 1,
                share_lhs: 0.25 + (seed % 4) as f64 * 0.15,
                acyclic: seed % 2 == 0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ta::{ta_unify, TaOutcome};

    #[test]
    fn sigma_zero_is_the_five_schema_instance() {
        let sys = sigma(0);
        let rendered = sys.render();
        let expect = "\
X = X_1 + X_2
Y = Y_1 + Y_2
Y_1 = T * X_2
X = T * Y
X_1 = X_11 + X_12
";
        assert_eq!(rendered, expect);
    }

    #[test]
    fn sigma_sizes_grow_linearly() {
        // 3n + 5 distinct equations after collapsing overlapping schemas.
        for n in 0..6 {
            assert_eq!(sigma(n).eqs.len() as u32, 3 * n + 5);
        }
    }

    #[test]
    fn sigma_has_single_label_variable() {
        for n in 0..6 {
            let sys = sigma(n);
            let labels = sys.label_vars();
            assert_eq!(labels.len(), 1);
            assert_eq!(sys.vars.name(*labels.iter().next().unwrap()), "T");
        }
    }

    #[test]
    fn sigma_is_abc_reduced() {
        // No two sums or two products share a left-hand side, and there are
        // no variable equations.
        for n in 0..6 {
            let sys = sigma(n);
            for (i, a) in sys.eqs.iter().enumerate() {
                assert!(!matches!(a.rhs, Rhs::Var(_)));
                for b in sys.eqs.iter().skip(i + 1) {
                    if a.lhs == b.lhs {
                        let both_sum = matches!(a.rhs, Rhs::Sum(..)) && matches!(b.rhs, Rhs::Sum(..));
                        let both_prod =
                            matches!(a.rhs, Rhs::Prod(..)) && matches!(b.rhs, Rhs::Prod(..));
                        assert!(!both_sum && !both_prod, "cancellation redex in sigma({n})");
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_small_instances_unify() {
        for n in 0..3 {
            let sys = sigma(n);
            assert!(
                matches!(ta_unify(&sys, 1_000_000), TaOutcome::Unifiable { .. }),
                "sigma({n}) should be unifiable"
            );
        }
    }

    #[test]
    fn sigma_prime_erasure_matches_sigma() {
        for n in 0..4 {
            let erased = sigma_prime(n).symmetric_erasure();
            let direct = sigma(n);
            assert_eq!(erased.render(), direct.render());
        }
    }

    #[test]
    fn random_generation_is_deterministic() {
        let spec = GenSpec { seed: 42, ..GenSpec::default() };
        let a = random_system(&spec);
        let b = random_system(&spec);
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn random_systems_are_standard_form() {
        for seed in 0..50 {
            let spec = GenSpec { seed, acyclic: seed % 2 == 0, ..GenSpec::default() };
            let sys = random_system(&spec);
            sys.validate().unwrap();
            assert!(!sys.eqs.is_empty());
        }
    }
}
