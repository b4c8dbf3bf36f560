//! Command-line front end for the toolkit. Every subcommand loads its
//! inputs, makes one library call, and prints a run report. Exit codes:
//! 0 for yes/accept/success, 1 for no/reject, 2 for usage problems
//! (including malformed files), 3 for an exhausted search budget.

mod convert;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use antcsp::budget::Budget;
use antcsp::con::con_reduce;
use antcsp::error::Error;
use antcsp::formula::{all_types, project_types, type_of, FormulaSet, PpFormula};
use antcsp::io;
use antcsp::linear::{
    level_after_tripling, regroup_to_width3, regroup_to_width4, triple_variables, LinearSystem,
};
use antcsp::poly::{
    check_identities, check_preservation, core_retract, find_polymorphism, has_bw_pair, is_core,
    IdentitySystem, OperationTable,
};
use antcsp::reduce::pp_reduce;
use antcsp::reflect::{
    frozen_tuples, full_reflection, implied_constraints, in_quasivariety, one_step_reflection,
    ReflectionResult,
};
use antcsp::robust::{engine, is_robust_upto};
use antcsp::sat::{
    dimacs_export, dimacs_import, gottlob_amplify, reduce_to_nsat, SignedClauseInstance,
};
use antcsp::solve::homomorphisms;
use antcsp::strategy::{ant_separator, candidate_family, check_strategy, establish_consistency};
use antcsp::theory::kfq_theory;
use antcsp::{PartialAssignment, Structure};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use report::{BudgetRecord, InputRecord, RunReport};

#[derive(Parser)]
#[command(
    name = "antcsp",
    version,
    about = "Finite-template constraint satisfaction toolkit"
)]
struct Cli {
    /// Node budget for searches; unlimited when absent (env ANTCSP_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Candidate order. Only the fixed lexicographic order is implemented;
    /// the flag is reserved.
    #[arg(long, global = true, default_value = "lex")]
    seed_order: String,

    /// Print the full run report as JSON.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,

    /// Print a short text report (the default).
    #[arg(long, global = true)]
    text: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PairArgs {
    /// Instance structure (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Template structure (JSON).
    #[arg(long)]
    template: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Find one homomorphism from the instance to the template.
    Solve(PairArgs),
    /// Enumerate homomorphisms from the instance to the template.
    Homs {
        #[command(flatten)]
        pair: PairArgs,
        /// Stop after this many homomorphisms.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Decide (k,F)-robust satisfiability.
    Robust {
        #[command(flatten)]
        pair: PairArgs,
        /// Number of pinned elements.
        #[arg(long)]
        k: usize,
        /// Compatibility formula set (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Check every level 0..=k instead of exactly k.
        #[arg(long)]
        upto: bool,
        /// Decision engine: solver, brute, or cross.
        #[arg(long, default_value = "solver")]
        engine: String,
    },
    /// Enlarge relations with frozen tuples and merge frozen pairs.
    Reflect {
        #[command(flatten)]
        pair: PairArgs,
        /// Arity of the frozen-tuple pass.
        #[arg(long)]
        k: usize,
        /// Compatibility formula set (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Number of one-step passes (default 1).
        #[arg(long, conflicts_with = "full")]
        steps: Option<usize>,
        /// Iterate to the fixed point.
        #[arg(long)]
        full: bool,
        /// Write the reflected structure here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide membership in the template's quasivariety.
    Qvar(PairArgs),
    /// List frozen tuples and frozen equalities.
    Frozen {
        #[command(flatten)]
        pair: PairArgs,
        /// Arity of the frozen-tuple pass.
        #[arg(long)]
        k: usize,
        /// Compatibility formula set (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
    },
    /// Rewrite instances along robustness-preserving reductions.
    Reduce {
        #[command(subcommand)]
        which: ReduceCommand,
    },
    /// Enumerate or test claw formulae.
    Claw {
        /// Named pp-definitions of the source symbols (JSON).
        #[arg(long)]
        defs: PathBuf,
        /// Wrist formula family (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Claw arity.
        #[arg(long)]
        k: usize,
        /// Wrist variable bound.
        #[arg(long)]
        ell: usize,
        /// Test this formula (JSON) for membership instead of enumerating.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Compute (k,F)-types.
    Types {
        /// Formula family (JSON).
        #[arg(long)]
        formulas: PathBuf,
        /// Tuple length.
        #[arg(long)]
        k: usize,
        /// Structure to evaluate a tuple's type in (JSON).
        #[arg(long, requires = "tuple")]
        structure: Option<PathBuf>,
        /// Comma-separated tuple, e.g. 0,2,1.
        #[arg(long, requires = "structure")]
        tuple: Option<String>,
        /// Project the k-variable types down to this many variables.
        #[arg(long, conflicts_with_all = ["structure", "tuple"])]
        project: Option<usize>,
    },
    /// Build and test local-consistency strategies.
    Strategy {
        #[command(subcommand)]
        which: StrategyCommand,
    },
    /// Search for polymorphisms and cores.
    Poly {
        #[command(subcommand)]
        which: PolyCommand,
    },
    /// Enumerate the quasi-equational theory of a template.
    Theory {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
        /// Premise arity.
        #[arg(long)]
        k: usize,
        /// Premise formula family (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
    },
    /// Convert between DIMACS CNF and structure files.
    Dimacs {
        #[command(subcommand)]
        which: DimacsCommand,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// Rewrite an instance along pp-definitions of its symbols.
    Pp {
        /// Instance structure (JSON).
        #[arg(long)]
        instance: PathBuf,
        /// Named pp-definitions (JSON).
        #[arg(long)]
        defs: PathBuf,
        /// Write the reduced structure here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplify width-3 clauses into their (2k+1)-copy expansion.
    Gottlob {
        /// Source clauses (DIMACS CNF).
        #[arg(long)]
        dimacs: PathBuf,
        /// Amplification level.
        #[arg(long)]
        k: usize,
        /// Write the amplified CNF here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chain wide clauses down to a fixed width (3 unless overridden).
    To3sat {
        /// Source clauses (DIMACS CNF).
        #[arg(long)]
        dimacs: PathBuf,
        /// Target clause width.
        #[arg(long, default_value_t = 3)]
        width: usize,
        /// Write the chained CNF here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eliminate constant relations against a core template.
    Con {
        #[command(flatten)]
        pair: PairArgs,
        /// Write the reduced structure here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Triple affine variables, then regroup widths 9 -> 4 -> 3.
    LinearChain {
        /// Linear system (JSON).
        #[arg(long)]
        system: PathBuf,
        /// Robustness level the chain is meant to carry.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Write the final width-3 system here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StrategyCommand {
    /// Collect every compatible partial map on at most `bound` elements.
    Candidate {
        #[command(flatten)]
        pair: PairArgs,
        /// Robustness level the family is drawn from.
        #[arg(long)]
        k: usize,
        /// Compatibility formula set (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Domain-size bound, at most k.
        #[arg(long)]
        bound: usize,
        /// Write the family here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the three strategy clauses for a family read from a file.
    Check {
        #[command(flatten)]
        pair: PairArgs,
        /// Strategy file (JSON).
        #[arg(long)]
        strategy: PathBuf,
    },
    /// Run the (j, j+1)-consistency fixed point.
    Establish {
        #[command(flatten)]
        pair: PairArgs,
        /// Consistency parameter.
        #[arg(long)]
        j: usize,
        /// Write the surviving strategy here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accept via a nonempty candidate family that passes the strategy check.
    Separator {
        #[command(flatten)]
        pair: PairArgs,
        /// Robustness level of the inputs.
        #[arg(long)]
        k: usize,
        /// Compatibility formula set (JSON); empty when absent.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Strategy parameter, below k.
        #[arg(long)]
        j: usize,
    },
}

#[derive(Subcommand)]
enum PolyCommand {
    /// Search for operations satisfying an identity system.
    Find {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
        /// Identity system: wnu:N, quasi-wnu:N, nu:N, none:N, or bw-pair.
        #[arg(long)]
        system: String,
        /// Write the found tables here (JSON array).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check operation tables against a template and identity system.
    Check {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
        /// Operation table (JSON); repeat for multi-operation systems.
        #[arg(long = "table", required = true)]
        tables: Vec<PathBuf>,
        /// Identity system to verify, if any.
        #[arg(long)]
        system: Option<String>,
    },
    /// Decide whether the template is a core.
    Core {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
    },
    /// Retract the template onto a minimal endomorphic image.
    Retract {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
        /// Write the retract here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for linked weak near-unanimity operations of arities 3 and 4.
    Bwpair {
        /// Template structure (JSON).
        #[arg(long)]
        template: PathBuf,
    },
}

#[derive(Subcommand)]
enum DimacsCommand {
    /// Read DIMACS CNF and write the structure view.
    Import {
        /// Source clauses (DIMACS CNF).
        #[arg(long)]
        dimacs: PathBuf,
        /// Write the structure here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a clause-patterned structure and write DIMACS CNF.
    Export {
        /// Instance structure over pattern relations (JSON).
        #[arg(long)]
        instance: PathBuf,
        /// Write the CNF here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ----- error and outcome plumbing -----

struct CliError {
    code: i32,
    msg: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = if e == Error::BudgetExceeded { 3 } else { 2 };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Attributes a library error to the file it arose from.
fn in_file<T>(path: &Path, r: antcsp::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut c = CliError::from(e);
        c.msg = format!("{}: {}", path.display(), c.msg);
        c
    })
}

struct Outcome {
    verdict: &'static str,
    exit: i32,
    details: Value,
    spent: Option<u64>,
}

impl Outcome {
    fn decide(yes: bool, details: Value) -> Outcome {
        Outcome {
            verdict: if yes { "yes" } else { "no" },
            exit: if yes { 0 } else { 1 },
            details,
            spent: None,
        }
    }

    fn ok(details: Value) -> Outcome {
        Outcome {
            verdict: "ok",
            exit: 0,
            details,
            spent: None,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli));
}

fn run(cli: &Cli) -> i32 {
    let started = Instant::now();
    if cli.seed_order != "lex" {
        eprintln!(
            "error: unknown seed order {:?}; only \"lex\" is implemented",
            cli.seed_order
        );
        return 2;
    }
    let limit = match resolve_budget(cli.budget) {
        Ok(l) => l,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let budget = match limit {
        Some(n) => Budget::new(n),
        None => Budget::unlimited(),
    };
    let mut inputs = Vec::new();
    let mut parameters = BTreeMap::new();
    match dispatch(&cli.command, budget, &mut inputs, &mut parameters) {
        Ok((command, outcome)) => {
            let rep = RunReport {
                command: command.to_string(),
                inputs,
                parameters,
                verdict: outcome.verdict.to_string(),
                details: outcome.details,
                budget: BudgetRecord {
                    limit,
                    spent: outcome.spent,
                },
                timing_ms: started.elapsed().as_millis(),
            };
            if cli.json {
                println!("{}", rep.render_json());
            } else {
                print!("{}", rep.render_text());
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

fn resolve_budget(flag: Option<u64>) -> Result<Option<u64>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ANTCSP_BUDGET") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("ANTCSP_BUDGET must be an integer, got {s:?}")),
        Err(_) => Ok(None),
    }
}

// ----- input loading -----

fn load_text(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<String> {
    match report::load_input(path) {
        Ok(l) => {
            inputs.push(l.record);
            Ok(l.text)
        }
        Err(msg) => Err(CliError { code: 2, msg }),
    }
}

fn load_structure(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<Structure> {
    let text = load_text(path, inputs)?;
    in_file(path, io::structure_from_str(&text))
}

fn load_pair(pair: &PairArgs, inputs: &mut Vec<InputRecord>) -> CliResult<(Structure, Structure)> {
    Ok((
        load_structure(&pair.instance, inputs)?,
        load_structure(&pair.template, inputs)?,
    ))
}

fn load_formulas(
    path: &Option<PathBuf>,
    inputs: &mut Vec<InputRecord>,
) -> CliResult<FormulaSet> {
    match path {
        Some(p) => {
            let text = load_text(p, inputs)?;
            in_file(p, io::formula_set_from_str(&text))
        }
        None => Ok(FormulaSet::empty()),
    }
}

fn load_formula(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<PpFormula> {
    let text = load_text(path, inputs)?;
    in_file(path, io::formula_from_str(&text))
}

fn load_defs(
    path: &Path,
    inputs: &mut Vec<InputRecord>,
) -> CliResult<BTreeMap<String, PpFormula>> {
    let text = load_text(path, inputs)?;
    in_file(path, io::definitions_from_str(&text))
}

fn load_clauses(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<SignedClauseInstance> {
    let text = load_text(path, inputs)?;
    in_file(path, dimacs_import(&text))
}

fn load_table(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<OperationTable> {
    let text = load_text(path, inputs)?;
    in_file(path, convert::table_from_str(&text))
}

fn write_out(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(|e| CliError {
        code: 2,
        msg: format!("{}: {e}", path.display()),
    })
}

fn parse_tuple(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| CliError {
                code: 2,
                msg: format!("bad tuple entry {:?}; expected 0,2,1 form", t.trim()),
            })
        })
        .collect()
}

fn clause_summary(inst: &SignedClauseInstance) -> Value {
    json!({
        "num_vars": inst.num_vars(),
        "width": inst.width(),
        "clauses": inst.clauses().len(),
    })
}

// ----- dispatch -----

fn dispatch(
    command: &Command,
    budget: Budget,
    inputs: &mut Vec<InputRecord>,
    parameters: &mut BTreeMap<String, Value>,
) -> CliResult<(&'static str, Outcome)> {
    match command {
        Command::Solve(pair) => {
            let (instance, template) = load_pair(pair, inputs)?;
            let mut iter =
                homomorphisms(&instance, &template, &PartialAssignment::new(), budget)?;
            let found = iter.next().transpose()?;
            let spent = iter.budget_spent();
            let mut outcome = match found {
                Some(h) => Outcome::decide(true, json!({"homomorphism": h.map})),
                None => Outcome::decide(false, json!({})),
            };
            outcome.spent = Some(spent);
            Ok(("solve", outcome))
        }
        Command::Homs { pair, limit } => {
            let (instance, template) = load_pair(pair, inputs)?;
            if let Some(l) = limit {
                parameters.insert("limit".into(), json!(l));
            }
            let mut iter =
                homomorphisms(&instance, &template, &PartialAssignment::new(), budget)?;
            let mut maps: Vec<Vec<usize>> = Vec::new();
            let mut truncated = false;
            while let Some(h) = iter.next() {
                let h = h?;
                if limit.is_some_and(|l| maps.len() >= l) {
                    truncated = true;
                    break;
                }
                maps.push(h.map);
            }
            let spent = iter.budget_spent();
            let any = !maps.is_empty() || truncated;
            let mut outcome = Outcome::decide(
                any,
                json!({"count": maps.len(), "truncated": truncated, "homomorphisms": maps}),
            );
            outcome.spent = Some(spent);
            Ok(("homs", outcome))
        }
        Command::Robust {
            pair,
            k,
            formulas,
            upto,
            engine: engine_name,
        } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let formulas = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            parameters.insert("upto".into(), json!(upto));
            parameters.insert("engine".into(), json!(engine_name));
            let eng = engine(engine_name)?;
            let verdict = if *upto {
                is_robust_upto(&instance, &template, *k, &formulas, budget, eng.as_ref())?
            } else {
                eng.decide(&instance, &template, *k, &formulas, budget)?
            };
            let (yes, details) = convert::verdict_details(&verdict);
            Ok(("robust", Outcome::decide(yes, details)))
        }
        Command::Reflect {
            pair,
            k,
            formulas,
            steps,
            full,
            out,
        } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let formulas = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            let result = if *full {
                parameters.insert("full".into(), json!(true));
                full_reflection(&instance, &template, *k, &formulas, budget)?
            } else {
                let steps = steps.unwrap_or(1);
                parameters.insert("steps".into(), json!(steps));
                let mut current = instance.clone();
                let mut composite: Vec<usize> = (0..instance.universe()).collect();
                let mut iterations = 0;
                for _ in 0..steps {
                    let one = one_step_reflection(&current, &template, *k, &formulas, budget)?;
                    composite = composite.iter().map(|&c| one.quotient_map[c]).collect();
                    current = one.structure;
                    iterations += 1;
                }
                ReflectionResult {
                    structure: current,
                    quotient_map: composite,
                    iterations,
                }
            };
            if let Some(p) = out {
                write_out(p, &io::structure_to_string_pretty(&result.structure))?;
            }
            Ok((
                "reflect",
                Outcome::ok(json!({
                    "iterations": result.iterations,
                    "universe_before": instance.universe(),
                    "universe_after": result.structure.universe(),
                    "quotient_map": result.quotient_map,
                    "structure": io::structure_to_json(&result.structure),
                })),
            ))
        }
        Command::Qvar(pair) => {
            let (instance, template) = load_pair(pair, inputs)?;
            let member = in_quasivariety(&instance, &template, budget)?;
            if member {
                Ok(("qvar", Outcome::decide(true, json!({}))))
            } else {
                let implied = implied_constraints(&instance, &template, budget)?;
                Ok((
                    "qvar",
                    Outcome::decide(
                        false,
                        json!({"implied": convert::implied_to_json(&instance, &implied)}),
                    ),
                ))
            }
        }
        Command::Frozen { pair, k, formulas } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let formulas = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            let rep = frozen_tuples(&instance, &template, *k, &formulas, budget)?;
            Ok((
                "frozen",
                Outcome::ok(convert::frozen_to_json(&instance, &rep)),
            ))
        }
        Command::Reduce { which } => dispatch_reduce(which, budget, inputs, parameters),
        Command::Claw {
            defs,
            formulas,
            k,
            ell,
            check,
        } => {
            let defs = load_defs(defs, inputs)?;
            let formulas = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            parameters.insert("ell".into(), json!(ell));
            match check {
                Some(phi_path) => {
                    let phi = load_formula(phi_path, inputs)?;
                    let member =
                        antcsp::claw::is_claw_formula(&phi, &defs, &formulas, *k, *ell, budget)?;
                    Ok(("claw", Outcome::decide(member, json!({}))))
                }
                None => {
                    let claws = antcsp::claw::claw_formulas(&defs, &formulas, *k, *ell, budget)?;
                    let listed: Vec<Value> = claws
                        .iter()
                        .map(|c| {
                            json!({
                                "formula": c.formula().to_string(),
                                "talon": c.talon(),
                                "wrist_members": c.wrist_members(),
                            })
                        })
                        .collect();
                    Ok((
                        "claw",
                        Outcome::ok(json!({"count": claws.len(), "claws": listed})),
                    ))
                }
            }
        }
        Command::Types {
            formulas,
            k,
            structure,
            tuple,
            project,
        } => {
            let fs = load_formulas(&Some(formulas.clone()), inputs)?;
            parameters.insert("k".into(), json!(k));
            if let (Some(spath), Some(ttext)) = (structure, tuple) {
                let s = load_structure(spath, inputs)?;
                let t = parse_tuple(ttext)?;
                parameters.insert("tuple".into(), json!(t));
                let ty = type_of(&s, &t, &fs, budget)?;
                let members: Vec<String> = ty.members.iter().map(|m| m.to_string()).collect();
                Ok((
                    "types",
                    Outcome::ok(json!({"members": members, "size": members.len()})),
                ))
            } else if let Some(l) = project {
                parameters.insert("project".into(), json!(l));
                let projected = project_types(&fs, *k, *l, budget)?;
                let members: Vec<String> =
                    projected.members().iter().map(|m| m.to_string()).collect();
                Ok((
                    "types",
                    Outcome::ok(json!({"members": members, "size": members.len()})),
                ))
            } else {
                let types = all_types(&fs, *k, budget)?;
                let mut listed = Vec::with_capacity(types.len());
                for t in &types {
                    listed.push(in_file(formulas, t.as_formula())?.to_string());
                }
                Ok((
                    "types",
                    Outcome::ok(json!({"count": types.len(), "types": listed})),
                ))
            }
        }
        Command::Strategy { which } => dispatch_strategy(which, budget, inputs, parameters),
        Command::Poly { which } => dispatch_poly(which, budget, inputs, parameters),
        Command::Theory {
            template,
            k,
            formulas,
        } => {
            let t = load_structure(template, inputs)?;
            let fs = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            let eqs = kfq_theory(&t, *k, &fs, budget)?;
            let listed: Vec<String> = eqs.iter().map(|e| e.to_string()).collect();
            Ok((
                "theory",
                Outcome::ok(json!({"count": eqs.len(), "equations": listed})),
            ))
        }
        Command::Dimacs { which } => dispatch_dimacs(which, inputs),
    }
}

fn dispatch_reduce(
    command: &ReduceCommand,
    budget: Budget,
    inputs: &mut Vec<InputRecord>,
    parameters: &mut BTreeMap<String, Value>,
) -> CliResult<(&'static str, Outcome)> {
    match command {
        ReduceCommand::Pp {
            instance,
            defs,
            out,
        } => {
            let s = load_structure(instance, inputs)?;
            let d = load_defs(defs, inputs)?;
            let reduced = pp_reduce(&s, &d)?;
            if let Some(p) = out {
                write_out(p, &io::structure_to_string_pretty(&reduced.structure))?;
            }
            let opens: Vec<Option<usize>> =
                (0..s.universe()).map(|e| reduced.open_element(e)).collect();
            Ok((
                "reduce pp",
                Outcome::ok(json!({
                    "universe": reduced.structure.universe(),
                    "open_elements": opens,
                    "structure": io::structure_to_json(&reduced.structure),
                })),
            ))
        }
        ReduceCommand::Gottlob { dimacs, k, out } => {
            let src = load_clauses(dimacs, inputs)?;
            parameters.insert("k".into(), json!(k));
            let amplified = gottlob_amplify(&src, *k)?;
            let text = dimacs_export(&amplified);
            if let Some(p) = out {
                write_out(p, &text)?;
            }
            let mut details = clause_summary(&amplified);
            details["dimacs"] = json!(text);
            Ok(("reduce gottlob", Outcome::ok(details)))
        }
        ReduceCommand::To3sat { dimacs, width, out } => {
            let src = load_clauses(dimacs, inputs)?;
            parameters.insert("width".into(), json!(width));
            let reduction = reduce_to_nsat(&src, *width)?;
            let text = dimacs_export(&reduction.instance);
            if let Some(p) = out {
                write_out(p, &text)?;
            }
            let mut details = clause_summary(&reduction.instance);
            details["open_vars"] = json!(reduction.open_vars);
            details["families"] = json!(reduction.families.len());
            details["chain_length"] =
                json!(reduction.families.first().map(|f| f.clauses.len()));
            details["dimacs"] = json!(text);
            Ok(("reduce to3sat", Outcome::ok(details)))
        }
        ReduceCommand::Con { pair, out } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let reduced = con_reduce(&instance, &template, budget)?;
            if let Some(p) = out {
                write_out(p, &io::structure_to_string_pretty(&reduced.structure))?;
            }
            Ok((
                "reduce con",
                Outcome::ok(json!({
                    "conflict": reduced.conflict,
                    "universe": reduced.structure.universe(),
                    "source_map": reduced.source_map,
                    "adjoined_map": reduced.adjoined_map,
                    "structure": io::structure_to_json(&reduced.structure),
                })),
            ))
        }
        ReduceCommand::LinearChain { system, k, out } => {
            let text = load_text(system, inputs)?;
            let sys = in_file(system, LinearSystem::from_json(&text))?;
            parameters.insert("k".into(), json!(k));
            let tripled = triple_variables(&sys, *k)?;
            let width4 = regroup_to_width4(&tripled)?;
            let width3 = regroup_to_width3(&width4)?;
            if let Some(p) = out {
                write_out(p, &width3.to_json())?;
            }
            let parse = |s: String| -> Value {
                serde_json::from_str(&s).expect("system JSON round-trips")
            };
            Ok((
                "reduce linear-chain",
                Outcome::ok(json!({
                    "level_after_tripling": level_after_tripling(*k),
                    "tripled": parse(tripled.to_json()),
                    "width4": parse(width4.to_json()),
                    "width3": parse(width3.to_json()),
                })),
            ))
        }
    }
}

fn dispatch_strategy(
    command: &StrategyCommand,
    budget: Budget,
    inputs: &mut Vec<InputRecord>,
    parameters: &mut BTreeMap<String, Value>,
) -> CliResult<(&'static str, Outcome)> {
    match command {
        StrategyCommand::Candidate {
            pair,
            k,
            formulas,
            bound,
            out,
        } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let fs = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            parameters.insert("bound".into(), json!(bound));
            let family = candidate_family(&instance, &template, *k, &fs, *bound, budget)?;
            let encoded = convert::strategy_to_json(&family);
            if let Some(p) = out {
                write_out(
                    p,
                    &serde_json::to_string_pretty(&encoded).expect("strategy serializes"),
                )?;
            }
            Ok((
                "strategy candidate",
                Outcome::ok(json!({"size": family.len(), "strategy": encoded})),
            ))
        }
        StrategyCommand::Check { pair, strategy } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let text = load_text(strategy, inputs)?;
            let family = in_file(strategy, convert::strategy_from_str(&text))?;
            match check_strategy(&family, &instance, &template)? {
                None => Ok((
                    "strategy check",
                    Outcome::decide(true, json!({"size": family.len()})),
                )),
                Some(violation) => Ok((
                    "strategy check",
                    Outcome::decide(false, json!({"violation": violation.to_string()})),
                )),
            }
        }
        StrategyCommand::Establish { pair, j, out } => {
            let (instance, template) = load_pair(pair, inputs)?;
            parameters.insert("j".into(), json!(j));
            match establish_consistency(&instance, &template, *j, budget)? {
                Some(family) => {
                    let encoded = convert::strategy_to_json(&family);
                    if let Some(p) = out {
                        write_out(
                            p,
                            &serde_json::to_string_pretty(&encoded)
                                .expect("strategy serializes"),
                        )?;
                    }
                    Ok((
                        "strategy establish",
                        Outcome::decide(
                            true,
                            json!({"size": family.len(), "strategy": encoded}),
                        ),
                    ))
                }
                None => Ok(("strategy establish", Outcome::decide(false, json!({})))),
            }
        }
        StrategyCommand::Separator {
            pair,
            k,
            formulas,
            j,
        } => {
            let (instance, template) = load_pair(pair, inputs)?;
            let fs = load_formulas(formulas, inputs)?;
            parameters.insert("k".into(), json!(k));
            parameters.insert("j".into(), json!(j));
            let verdict = ant_separator(&instance, &template, *k, &fs, *j, budget)?;
            let accept = verdict.is_accept();
            Ok((
                "strategy separator",
                Outcome {
                    verdict: if accept { "accept" } else { "reject" },
                    exit: if accept { 0 } else { 1 },
                    details: json!({}),
                    spent: None,
                },
            ))
        }
    }
}

fn dispatch_poly(
    command: &PolyCommand,
    budget: Budget,
    inputs: &mut Vec<InputRecord>,
    parameters: &mut BTreeMap<String, Value>,
) -> CliResult<(&'static str, Outcome)> {
    match command {
        PolyCommand::Find {
            template,
            system,
            out,
        } => {
            let t = load_structure(template, inputs)?;
            parameters.insert("system".into(), json!(system));
            let sys = IdentitySystem::by_name(system)?;
            match find_polymorphism(&t, &sys, budget)? {
                Some(tables) => {
                    let encoded: Vec<Value> = tables.iter().map(convert::table_to_json).collect();
                    if let Some(p) = out {
                        write_out(
                            p,
                            &serde_json::to_string_pretty(&encoded).expect("tables serialize"),
                        )?;
                    }
                    Ok(("poly find", Outcome::decide(true, json!({"tables": encoded}))))
                }
                None => Ok(("poly find", Outcome::decide(false, json!({})))),
            }
        }
        PolyCommand::Check {
            template,
            tables,
            system,
        } => {
            let t = load_structure(template, inputs)?;
            let mut parsed = Vec::with_capacity(tables.len());
            for p in tables {
                parsed.push(load_table(p, inputs)?);
            }
            let mut preserves = Vec::with_capacity(parsed.len());
            for table in &parsed {
                preserves.push(check_preservation(table, &t, budget)?);
            }
            let identities = match system {
                Some(name) => {
                    parameters.insert("system".into(), json!(name));
                    Some(check_identities(&parsed, &IdentitySystem::by_name(name)?)?)
                }
                None => None,
            };
            let yes = preserves.iter().all(|&b| b) && identities.unwrap_or(true);
            Ok((
                "poly check",
                Outcome::decide(
                    yes,
                    json!({"preserves": preserves, "identities": identities}),
                ),
            ))
        }
        PolyCommand::Core { template } => {
            let t = load_structure(template, inputs)?;
            let core = is_core(&t, budget)?;
            Ok(("poly core", Outcome::decide(core, json!({}))))
        }
        PolyCommand::Retract { template, out } => {
            let t = load_structure(template, inputs)?;
            let retract = core_retract(&t, budget)?;
            if let Some(p) = out {
                write_out(p, &io::structure_to_string_pretty(&retract))?;
            }
            Ok((
                "poly retract",
                Outcome::ok(json!({
                    "universe": retract.universe(),
                    "structure": io::structure_to_json(&retract),
                })),
            ))
        }
        PolyCommand::Bwpair { template } => {
            let t = load_structure(template, inputs)?;
            match has_bw_pair(&t, budget)? {
                Some((w3, w4)) => Ok((
                    "poly bwpair",
                    Outcome::decide(
                        true,
                        json!({"tables": [convert::table_to_json(&w3), convert::table_to_json(&w4)]}),
                    ),
                )),
                None => Ok(("poly bwpair", Outcome::decide(false, json!({})))),
            }
        }
    }
}

fn dispatch_dimacs(
    command: &DimacsCommand,
    inputs: &mut Vec<InputRecord>,
) -> CliResult<(&'static str, Outcome)> {
    match command {
        DimacsCommand::Import { dimacs, out } => {
            let inst = load_clauses(dimacs, inputs)?;
            let structure = inst.to_structure()?;
            if let Some(p) = out {
                write_out(p, &io::structure_to_string_pretty(&structure))?;
            }
            let mut details = clause_summary(&inst);
            details["structure"] = io::structure_to_json(&structure);
            Ok(("dimacs import", Outcome::ok(details)))
        }
        DimacsCommand::Export { instance, out } => {
            let s = load_structure(instance, inputs)?;
            let inst = convert::structure_to_clauses(&s)?;
            let text = dimacs_export(&inst);
            if let Some(p) = out {
                write_out(p, &text)?;
            }
            let mut details = clause_summary(&inst);
            details["dimacs"] = json!(text);
            Ok(("dimacs export", Outcome::ok(details)))
        }
    }
}
