//! `osd`: solve, generate, benchmark and verify unification problems modulo
//! one-sided distributivity.
//!
//! Exit codes: 0 unifiable/verified, 1 not unifiable/failed, 2 budget or
//! materialization cap exceeded, 3 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use osd_core::asym::{asym_unify, AsymOutcome, AsymSystem};
use osd_core::compressed::{decide, CompressedOutcome};
use osd_core::generate::{random_system, sigma, sigma_prime, GenSpec};
use osd_core::hom::{decide_hom, typecheck};
use osd_core::parser::{parse_problem, parse_substitution, Problem};
use osd_core::report::{run_bench, Algorithm, Family};
use osd_core::subst::{
    verify_unifier, verify_unifier_as_solved_form, ClosureError, Substitution, VerifyError,
    DEFAULT_CAP,
};
use osd_core::system::StandardSystem;
use osd_core::ta::{ta_unify_traced, TaOutcome, DEFAULT_BUDGET};
use osd_core::term::is_normal;

#[derive(Parser)]
#[command(name = "osd", version, about = "Unification modulo one-sided distributivity")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Ta,
    Hom,
    Slp,
    Asym,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sigma,
    #[value(name = "sigma-prime")]
    SigmaPrime,
    Random,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Sigma => Family::Sigma,
            FamilyArg::SigmaPrime => Family::SigmaPrime,
            FamilyArg::Random => Family::Random,
        }
    }
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Algorithm {
        match a {
            AlgArg::Ta => Algorithm::Ta,
            AlgArg::Hom => Algorithm::Hom,
            AlgArg::Slp => Algorithm::Slp,
            AlgArg::Asym => Algorithm::Asym,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide a problem file and print the result.
    Solve {
        #[arg(long, value_enum)]
        alg: AlgArg,
        /// Rule-application budget for the splitting-rule algorithms.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Print run statistics as key=value lines.
        #[arg(long)]
        stats: bool,
        /// Print one line per rule application (only recorded for ta).
        #[arg(long)]
        trace: bool,
        /// Fail instead of falling back to slp when the problem is outside
        /// the single-homomorphism fragment.
        #[arg(long)]
        require_hom: bool,
        /// Materialization cap for printed unifiers, in term nodes.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        file: PathBuf,
    },
    /// Generate a problem file.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run families against algorithms and report growth curves.
    Bench {
        #[arg(long, value_enum, required = true)]
        family: Vec<FamilyArg>,
        #[arg(long, value_enum, required = true)]
        alg: Vec<AlgArg>,
        #[arg(long)]
        max_n: u32,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a substitution file against a problem file.
    Verify {
        problem: PathBuf,
        subst: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_NO: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;

fn main() -> ExitCode {
    // Die quietly when stdout closes early, e.g. when piped into `head`.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read_problem(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_problem(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Solve { alg, budget, stats, trace, require_hom, cap, file } => {
            solve(alg, budget, stats, trace, require_hom, cap, &file)
        }
        Cmd::Gen { family, n, seed, out } => {
            let text = match family {
                FamilyArg::Sigma => sigma(n).render(),
                FamilyArg::SigmaPrime => sigma_prime(n).render(),
                // The n-th instance of the seeded series, matching the rows
                // the bench command produces.
                FamilyArg::Random => random_system(&GenSpec {
                    seed: seed.wrapping_add(n as u64),
                    acyclic: n % 2 == 0,
                    ..GenSpec::default()
                })
                .render(),
            };
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Cmd::Bench { family, alg, max_n, budget, seed, csv } => {
            let families: Vec<(Family, u32)> =
                family.into_iter().map(|f| (f.into(), max_n)).collect();
            let algs: Vec<Algorithm> = alg.into_iter().map(Into::into).collect();
            let report = run_bench(&families, &algs, budget, seed);
            print!("{}", report.csv());
            for &(fam, _) in &families {
                for &a in &algs {
                    let ratios = report.splitting_ratios(fam, a);
                    if !ratios.is_empty() {
                        let shown: Vec<String> =
                            ratios.iter().map(|r| format!("{r:.2}")).collect();
                        println!("# {} {} splitting ratios: {}", fam.name(), a.name(), shown.join(" "));
                    }
                    if let Some(slope) = report.log_log_slope(fam, a) {
                        println!("# {} {} log-log slope: {slope:.3}", fam.name(), a.name());
                    }
                }
            }
            for m in &report.mismatches {
                println!("# MISMATCH: {m}");
            }
            if let Some(path) = csv {
                std::fs::write(&path, report.csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Verify { problem, subst, cap } => verify(&problem, &subst, cap),
    }
}

fn solve(
    alg: AlgArg,
    budget: u64,
    stats: bool,
    trace: bool,
    require_hom: bool,
    cap: u64,
    file: &Path,
) -> Result<u8> {
    let problem = read_problem(file)?;
    if trace && !matches!(alg, AlgArg::Ta) {
        eprintln!("note: rule traces are only recorded for --alg ta");
    }
    match (alg, problem) {
        (AlgArg::Asym, Problem::Asymmetric(sys)) => solve_asym(&sys, budget, stats),
        (AlgArg::Asym, Problem::Symmetric(_)) => {
            Err(anyhow!("--alg asym needs an asymmetric problem (use '=d' equations)"))
        }
        (_, Problem::Asymmetric(_)) => Err(anyhow!(
            "this problem is asymmetric; solve it with --alg asym"
        )),
        (AlgArg::Ta, Problem::Symmetric(sys)) => {
            let (outcome, trace_log) = ta_unify_traced(&sys, budget);
            if trace {
                for entry in &trace_log {
                    println!("{entry}");
                }
            }
            match outcome {
                TaOutcome::Unifiable { solved, unifier, stats: st } => {
                    println!("unifiable");
                    match unifier {
                        Some(u) => print!("{}", u.render(&solved.vars)),
                        None => println!("(unifier exceeds the materialization cap)"),
                    }
                    if stats {
                        print!("{}", st.render());
                    }
                    Ok(EXIT_OK)
                }
                TaOutcome::NotUnifiable { reason, stats: st } => {
                    println!("not unifiable ({reason})");
                    if stats {
                        print!("{}", st.render());
                    }
                    Ok(EXIT_NO)
                }
                TaOutcome::BudgetExceeded { stats: st } => {
                    println!("budget exceeded");
                    if stats {
                        print!("{}", st.render());
                    }
                    Ok(EXIT_BUDGET)
                }
            }
        }
        (AlgArg::Hom, Problem::Symmetric(sys)) => match typecheck(&sys) {
            Ok(typed) => {
                let outcome = decide_hom(&typed);
                if stats {
                    print!("{}", outcome.stats().render());
                }
                match outcome.is_unifiable() {
                    true => {
                        println!("unifiable");
                        Ok(EXIT_OK)
                    }
                    false => {
                        println!("not unifiable");
                        Ok(EXIT_NO)
                    }
                }
            }
            Err(e) if require_hom => {
                Err(anyhow!("outside the single-homomorphism fragment: {e}"))
            }
            Err(e) => {
                eprintln!("note: {e}; falling back to --alg slp");
                solve_slp(&sys, stats, cap)
            }
        },
        (AlgArg::Slp, Problem::Symmetric(sys)) => solve_slp(&sys, stats, cap),
    }
}

fn solve_slp(sys: &StandardSystem, stats: bool, cap: u64) -> Result<u8> {
    match decide(sys) {
        CompressedOutcome::Unifiable { solved, stats: st } => {
            println!("unifiable");
            print!("{}", solved.render());
            let _ = cap;
            if stats {
                print!("{}", st.render());
            }
            Ok(EXIT_OK)
        }
        CompressedOutcome::NotUnifiable { reason, stats: st } => {
            println!("not unifiable ({reason})");
            if stats {
                print!("{}", st.render());
            }
            Ok(EXIT_NO)
        }
    }
}

fn solve_asym(sys: &AsymSystem, budget: u64, stats: bool) -> Result<u8> {
    match asym_unify(sys, budget) {
        AsymOutcome::Unifiable { solved, unifier, stats: st } => {
            println!("unifiable");
            match unifier {
                Some(u) => print!("{}", u.render(&solved.vars)),
                None => println!("(unifier exceeds the materialization cap)"),
            }
            if stats {
                print!("{}", st.render());
            }
            Ok(EXIT_OK)
        }
        AsymOutcome::NotUnifiable { reason, stats: st } => {
            println!("not unifiable ({reason})");
            if stats {
                print!("{}", st.render());
            }
            Ok(EXIT_NO)
        }
        AsymOutcome::BudgetExceeded { stats: st } => {
            println!("budget exceeded");
            if stats {
                print!("{}", st.render());
            }
            Ok(EXIT_BUDGET)
        }
    }
}

fn verify(problem_path: &Path, subst_path: &Path, cap: u64) -> Result<u8> {
    let problem = read_problem(problem_path)?;
    let text = std::fs::read_to_string(subst_path)
        .with_context(|| format!("reading {}", subst_path.display()))?;
    match problem {
        Problem::Symmetric(mut sys) => {
            let subst = parse_substitution(&text, &mut sys.vars)
                .with_context(|| format!("parsing {}", subst_path.display()))?;
            // Substitution files usually hold dag-solved forms whose
            // bindings reference each other; close them into the
            // idempotent unifier they denote. Files with compressed chains
            // are checked without expanding the chains; cyclic files fall
            // back to a literal single-application check.
            enum Mode {
                Closed(Substitution),
                Compressed,
                Literal,
            }
            let has_chains = subst
                .map
                .values()
                .any(|b| matches!(b, osd_core::subst::Binding::Chain(..)));
            let mode = if has_chains {
                Mode::Compressed
            } else {
                match subst.closed(cap) {
                    Ok(c) => Mode::Closed(c),
                    Err(ClosureError::TooLarge { .. }) => Mode::Compressed,
                    Err(ClosureError::Cyclic(_)) => Mode::Literal,
                }
            };
            let mut all_ok = true;
            let mut capped = false;
            for (i, eq) in sys.eqs.iter().enumerate() {
                let mut single = StandardSystem::new(sys.vars.clone());
                single.push(eq.lhs, eq.rhs);
                let result = match &mode {
                    Mode::Closed(c) => verify_unifier(&single, c, cap),
                    Mode::Compressed => verify_unifier_as_solved_form(&single, &subst, cap),
                    Mode::Literal => verify_unifier(&single, &subst, cap),
                };
                match result {
                    Ok(()) => println!("equation {}: ok", i + 1),
                    Err(VerifyError::NotMaterializable { .. }) => {
                        println!("equation {}: not materializable under the cap", i + 1);
                        capped = true;
                    }
                    Err(e) => {
                        println!("equation {}: FAILED ({e})", i + 1);
                        all_ok = false;
                    }
                }
            }
            Ok(verdict(all_ok, capped))
        }
        Problem::Asymmetric(mut sys) => {
            let subst = parse_substitution(&text, &mut sys.vars)
                .with_context(|| format!("parsing {}", subst_path.display()))?;
            let subst = match subst.closed(cap) {
                Ok(c) => c,
                Err(ClosureError::Cyclic(_)) => subst,
                Err(ClosureError::TooLarge { .. }) => {
                    println!("substitution: not materializable under the cap");
                    return Ok(EXIT_BUDGET);
                }
            };
            let mut all_ok = true;
            for (i, eq) in sys.eqs.iter().enumerate() {
                let l = subst.apply(&eq.left.term());
                let r = subst.apply(&eq.right.term());
                let unified = osd_core::term::e_equal(&l, &r);
                let irreducible = is_normal(&r);
                if unified && irreducible {
                    println!("equation {}: ok", i + 1);
                } else if !unified {
                    println!("equation {}: FAILED (not unified)", i + 1);
                    all_ok = false;
                } else {
                    println!("equation {}: FAILED (right side reducible)", i + 1);
                    all_ok = false;
                }
            }
            Ok(verdict(all_ok, false))
        }
    }
}

fn verdict(all_ok: bool, capped: bool) -> u8 {
    if !all_ok {
        EXIT_NO
    } else if capped {
        EXIT_BUDGET
    } else {
        EXIT_OK
    }
}
