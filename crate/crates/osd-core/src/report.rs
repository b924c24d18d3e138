//! Multi-algorithm benchmark runs with growth-curve summaries.
//!
//! Every (instance, algorithm) pair becomes one row. Decisions are
//! cross-referenced against the compressed decider, which always finishes;
//! rows that exceeded their budget are excluded from slope fits and listed
//! separately.

use std::fmt;

use crate::asym::{asym_unify, AsymOutcome, AsymSystem};
use crate::compressed::decide;
use crate::generate::{random_system, sigma, sigma_prime, GenSpec};
use crate::hom::{decide_hom, typecheck};
use crate::system::StandardSystem;
use crate::ta::{ta_unify, TaOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ta,
    Hom,
    Slp,
    Asym,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ta => "ta",
            Algorithm::Hom => "hom",
            Algorithm::Slp => "slp",
            Algorithm::Asym => "asym",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ta" => Ok(Algorithm::Ta),
            "hom" => Ok(Algorithm::Hom),
            "slp" => Ok(Algorithm::Slp),
            "asym" => Ok(Algorithm::Asym),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sigma,
    SigmaPrime,
    Random,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Sigma => "sigma",
            Family::SigmaPrime => "sigma-prime",
            Family::Random => "random",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigma" => Ok(Family::Sigma),
            "sigma-prime" => Ok(Family::SigmaPrime),
            "random" => Ok(Family::Random),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Unifiable,
    NotUnifiable,
    BudgetExceeded,
    NotInFragment,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Unifiable => "unifiable",
            Decision::NotUnifiable => "not-unifiable",
            Decision::BudgetExceeded => "budget-exceeded",
            Decision::NotInFragment => "not-in-fragment",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub family: Family,
    pub n: u32,
    pub algorithm: Algorithm,
    pub decision: Decision,
    pub system_size: usize,
    pub total_rules: u64,
    pub splitting: u64,
    pub fresh_vars: u64,
    pub max_slp_size: usize,
    pub max_label_len_binary: String,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "family,n,algorithm,decision,system_size,total_rules,splitting_count,fresh_vars,max_slp_size,max_label_len_binary,wall_ms";

#[derive(Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Human-readable descriptions of decision disagreements with the
    /// oracle column.
    pub mismatches: Vec<String>,
}

impl BenchReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
                r.family.name(),
                r.n,
                r.algorithm.name(),
                r.decision,
                r.system_size,
                r.total_rules,
                r.splitting,
                r.fresh_vars,
                r.max_slp_size,
                r.max_label_len_binary,
                r.wall_ms
            ));
        }
        out
    }

    fn series(&self, family: Family, alg: Algorithm) -> Vec<&BenchRow> {
        let mut rows: Vec<&BenchRow> = self
            .rows
            .iter()
            .filter(|r| r.family == family && r.algorithm == alg)
            .collect();
        rows.sort_by_key(|r| r.n);
        rows
    }

    /// Consecutive ratios of splitting-rule counts along a family, skipping
    /// budget-exceeded rows.
    pub fn splitting_ratios(&self, family: Family, alg: Algorithm) -> Vec<f64> {
        let rows = self.series(family, alg);
        rows.windows(2)
            .filter(|w| {
                w[0].decision != Decision::BudgetExceeded
                    && w[1].decision != Decision::BudgetExceeded
                    && w[0].splitting > 0
            })
            .map(|w| w[1].splitting as f64 / w[0].splitting as f64)
            .collect()
    }

    /// Least-squares slope of `ln(total_rules)` against `ln(system_size)`,
    /// excluding budget-exceeded rows.
    pub fn log_log_slope(&self, family: Family, alg: Algorithm) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .series(family, alg)
            .into_iter()
            .filter(|r| r.decision != Decision::BudgetExceeded && r.total_rules > 0)
            .map(|r| ((r.system_size as f64).ln(), (r.total_rules as f64).ln()))
            .collect();
        log_log_slope_of(&pts)
    }
}

/// Least-squares slope through (x, y) points.
pub fn log_log_slope_of(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// One benchmark instance: a symmetric system plus, for the asymmetric
/// family, its oriented form.
pub struct Instance {
    pub family: Family,
    pub n: u32,
    pub sym: StandardSystem,
    pub asym: Option<AsymSystem>,
}

pub fn instances(family: Family, max_n: u32, seed: u64) -> Vec<Instance> {
    (0..=max_n)
        .map(|n| match family {
            Family::Sigma => Instance { family, n, sym: sigma(n), asym: None },
            Family::SigmaPrime => {
                let a = sigma_prime(n);
                Instance { family, n, sym: a.symmetric_erasure(), asym: Some(a) }
            }
            Family::Random => {
                let spec = GenSpec {
                    seed: seed.wrapping_add(n as u64),
                    acyclic: n % 2 == 0,
                    ..GenSpec::default()
                };
                Instance { family, n, sym: random_system(&spec), asym: None }
            }
        })
        .collect()
}

/// Runs one algorithm on one instance.
pub fn run_one(alg: Algorithm, inst: &Instance, budget: u64) -> BenchRow {
    let mut row = BenchRow {
        family: inst.family,
        n: inst.n,
        algorithm: alg,
        decision: Decision::NotInFragment,
        system_size: inst.sym.eqs.len(),
        total_rules: 0,
        splitting: 0,
        fresh_vars: 0,
        max_slp_size: 0,
        max_label_len_binary: "0".to_string(),
        wall_ms: 0.0,
    };
    match alg {
        Algorithm::Ta => {
            let out = ta_unify(&inst.sym, budget);
            let stats = out.stats();
            row.total_rules = stats.total_rules();
            row.splitting = stats.rule_d;
            row.fresh_vars = stats.fresh_vars;
            row.wall_ms = stats.wall.as_secs_f64() * 1e3;
            row.decision = match out {
                TaOutcome::Unifiable { .. } => Decision::Unifiable,
                TaOutcome::NotUnifiable { .. } => Decision::NotUnifiable,
                TaOutcome::BudgetExceeded { .. } => Decision::BudgetExceeded,
            };
        }
        Algorithm::Hom => match typecheck(&inst.sym) {
            Err(_) => {}
            Ok(typed) => {
                let out = decide_hom(&typed);
                let stats = out.stats();
                row.total_rules = stats.total_rules();
                row.splitting = stats.rule_vii;
                row.fresh_vars = stats.fresh_vars;
                row.wall_ms = stats.wall.as_secs_f64() * 1e3;
                row.decision = if out.is_unifiable() {
                    Decision::Unifiable
                } else {
                    Decision::NotUnifiable
                };
            }
        },
        Algorithm::Slp => {
            let out = decide(&inst.sym);
            let stats = out.stats();
            row.total_rules = stats.total_rules();
            row.splitting = stats.rule_vii + stats.rule_viii;
            row.fresh_vars = stats.fresh_vars;
            row.max_slp_size = stats.max_slp_size;
            row.max_label_len_binary = stats.max_label_len.to_str_radix(2);
            row.wall_ms = stats.wall.as_secs_f64() * 1e3;
            row.decision = if out.is_unifiable() {
                Decision::Unifiable
            } else {
                Decision::NotUnifiable
            };
        }
        Algorithm::Asym => {
            let Some(asym) = &inst.asym else { return row };
            let out = asym_unify(asym, budget);
            let stats = out.stats();
            row.total_rules = stats.total_rules();
            row.splitting = stats.splitting_count();
            row.fresh_vars = stats.fresh_vars;
            row.wall_ms = stats.wall.as_secs_f64() * 1e3;
            row.decision = match out {
                AsymOutcome::Unifiable { .. } => Decision::Unifiable,
                AsymOutcome::NotUnifiable { .. } => Decision::NotUnifiable,
                AsymOutcome::BudgetExceeded { .. } => Decision::BudgetExceeded,
            };
        }
    }
    row
}

/// Runs every algorithm over every instance of the requested families.
pub fn run_bench(
    families: &[(Family, u32)],
    algorithms: &[Algorithm],
    budget: u64,
    seed: u64,
) -> BenchReport {
    let mut report = BenchReport::default();
    for &(family, max_n) in families {
        for inst in instances(family, max_n, seed) {
            // The oracle column: the compressed decider on the symmetric
            // system.
            let oracle = if decide(&inst.sym).is_unifiable() {
                Decision::Unifiable
            } else {
                Decision::NotUnifiable
            };
            for &alg in algorithms {
                let row = run_one(alg, &inst, budget);
                let comparable = match alg {
                    Algorithm::Ta | Algorithm::Slp | Algorithm::Hom => {
                        !matches!(row.decision, Decision::BudgetExceeded | Decision::NotInFragment)
                    }
                    // Asymmetric unifiability implies symmetric
                    // unifiability, not the converse.
                    Algorithm::Asym => row.decision == Decision::Unifiable,
                };
                if comparable && alg != Algorithm::Asym && row.decision != oracle {
                    report.mismatches.push(format!(
                        "{} n={} {}: {} but oracle says {}",
                        inst.family.name(),
                        inst.n,
                        alg.name(),
                        row.decision,
                        oracle
                    ));
                }
                if alg == Algorithm::Asym
                    && row.decision == Decision::Unifiable
                    && oracle != Decision::Unifiable
                {
                    report.mismatches.push(format!(
                        "{} n={} asym: unifiable but the symmetric oracle disagrees",
                        inst.family.name(),
                        inst.n
                    ));
                }
                report.rows.push(row);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_family_list_gives_empty_report() {
        let report = run_bench(&[], &[Algorithm::Ta], 1000, 0);
        assert!(report.rows.is_empty());
        assert!(report.csv().lines().count() == 1);
    }

    #[test]
    fn slope_fit_recovers_a_power_law() {
        // y = 3 x^2 on a log-log grid has slope 2.
        let pts: Vec<(f64, f64)> = (1..6)
            .map(|i| {
                let x = i as f64;
                (x.ln(), (3.0 * x * x).ln())
            })
            .collect();
        let slope = log_log_slope_of(&pts).unwrap();
        assert!((slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_bench_rows_have_consistent_decisions() {
        let report = run_bench(
            &[(Family::Sigma, 2)],
            &[Algorithm::Ta, Algorithm::Slp, Algorithm::Hom],
            1_000_000,
            0,
        );
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
        assert!(report.rows.iter().all(|r| r.decision == Decision::Unifiable));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let report = run_bench(&[(Family::Sigma, 1)], &[Algorithm::Slp], 1000, 0);
        let csv = report.csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), CSV_HEADER.split(',').count());
    }
}
