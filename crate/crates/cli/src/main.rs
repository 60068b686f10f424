use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use multicp::factory::ex1_level2_tuple;
use multicp::gram::is_admissible;
use multicp::gram::FALSIFY_TOL;
use multicp::io::{
    counterexample_to_json, matrix_over_algebra_to_json, matrix_to_json, parse_map_document, residuals_to_json,
    triple_from_json, triple_to_json,
};
use multicp::linalg;
use multicp::norms::{Cb16Report, CbReport, LevelCheck, NORM_SLACK};
use multicp::stinespring::spanning_rank;
use multicp::*;
use serde_json::{json, Value};

const EQUIV_UNITARITY_TOL: f64 = 1e-9;
const EQUIV_TOL: f64 = 1e-7;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const STRUCTURAL_TOL: f64 = 1e-9;

/// Invariant block multilinear CP maps: checks, dilations and norm bounds.
///
/// MAP arguments are a JSON file path, `-` for stdin, or `fixture:<name>`
/// (see `multicp gen --list`). Reports are JSON on stdout.
///
/// Exit codes: 0 pass, 1 assertion failure, 2 input error,
/// 3 construction obstruction (non-PSD Gram or descent failure).
#[derive(Parser)]
#[command(name = "multicp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a map document and check its shapes and algebra.
    Validate { map: String },
    /// Invariance, symmetry, positivity and CP verdicts. With no selector, runs all four.
    Check(CheckArgs),
    /// Stinespring dilation from the Gram kernel, written as JSON.
    Dilate {
        map: String,
        /// Compress to the span of the dilation family (already minimal when built from the Gram kernel).
        #[arg(long)]
        minimal: bool,
        /// Write the triple here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unitary equivalence of two minimal dilation triples of the same map.
    Equiv { triple1: PathBuf, triple2: PathBuf, map: String },
    /// Norm estimates against ‖Φ(1,…,1)‖, and with --cb the completely bounded bounds.
    RussoDye(RussoDyeArgs),
    /// Print the generator document of a named fixture.
    Gen {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args)]
struct CheckArgs {
    map: String,
    #[arg(long)]
    invariant: bool,
    #[arg(long)]
    symmetric: bool,
    #[arg(long)]
    positivity: bool,
    #[arg(long)]
    cp: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Amplification levels sampled by the positivity falsifier.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    levels: Vec<usize>,
    /// Admissible tuples per level.
    #[arg(long, default_value_t = 500)]
    trials: usize,
}

#[derive(Args)]
struct RussoDyeArgs {
    map: String,
    #[arg(long)]
    cb: bool,
    /// Highest amplification level for --cb.
    #[arg(long, default_value_t = 3)]
    tmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 30)]
    iters: usize,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotCompletelyPositive { .. } | Error::DescentFailure { .. } | Error::NonHermitianGram { .. } => 3,
            Error::DimensionMismatch(..) => 1,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

type Outcome = std::result::Result<(Value, bool), Failure>;

fn fixture(name: &str) -> Option<Value> {
    let v = match name {
        "trace2" => json!({"kind": "trace", "n": 2}),
        "trace3" => json!({"kind": "trace", "n": 3}),
        "eval2" => json!({"kind": "eval", "points": 2, "marked": 0}),
        "eval3" => json!({"kind": "eval", "points": 3, "marked": 1}),
        "ex1" => json!({"kind": "eval", "points": 2, "marked": 0}),
        "psi" => json!({"kind": "psi"}),
        "schur-half" => json!({"kind": "schur", "lambda": [[[1.0, 0.0], [0.5, 0.0]], [[0.5, 0.0], [1.0, 0.0]]]}),
        "schur-bad" => json!({"kind": "schur", "lambda": [[[1.0, 0.0], [2.0, 0.0]], [[2.0, 0.0], [1.0, 0.0]]]}),
        "neg-trace2" => json!({"kind": "trace", "n": 2, "scale": [-1.0, 0.0]}),
        "neg-ex1" => json!({"kind": "eval", "points": 2, "marked": 0, "scale": [-1.0, 0.0]}),
        "icp3" => json!({"kind": "dilation", "block_dims": [2], "k": 3, "n": 1, "h": 2, "seed": 3}),
        _ => return None,
    };
    Some(v)
}

const FIXTURES: &[&str] =
    &["trace2", "trace3", "eval2", "eval3", "ex1", "psi", "schur-half", "schur-bad", "neg-trace2", "neg-ex1", "icp3"];

fn read_source(source: &str) -> anyhow::Result<String> {
    if let Some(name) = source.strip_prefix("fixture:") {
        let v = fixture(name).ok_or_else(|| anyhow!("unknown fixture `{name}`; try `multicp gen --list`"))?;
        return Ok(v.to_string());
    }
    if source == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(source).with_context(|| format!("reading {source}"))
}

fn load_map(source: &str) -> std::result::Result<BlockMultilinearMap, Failure> {
    let text = read_source(source)?;
    Ok(parse_map_document(&text)?)
}

fn load_triple(path: &Path) -> std::result::Result<DilationTriple, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(triple_from_json(&v)?)
}

fn shape(map: &BlockMultilinearMap) -> Value {
    json!({
        "block_dims": map.algebra().block_dims(),
        "k": map.k(),
        "n": map.n(),
        "h": map.h(),
    })
}

fn validate(source: &str) -> Outcome {
    let map = load_map(source)?;
    let alg = map.algebra();
    let structure = alg.check_associative() && alg.check_unit() && alg.check_involution();
    if !structure {
        return Err(anyhow!("structure constants fail associativity, unit or involution checks").into());
    }
    Ok((json!({ "command": "validate", "source": source, "map": shape(&map), "valid": true }), true))
}

/// Attached to reports on the ex1 map: the level-2 tuple with entry −1 is not admissible.
fn ex1_note(map: &BlockMultilinearMap) -> Option<Value> {
    let reference = multicp::factory::eval_example();
    if map.n() != 1 || map.algebra() != reference.algebra() || map.k() != 3 || map.h() != 1 {
        return None;
    }
    let same = map.entries()[0].coeffs().iter().zip(reference.coeffs()).all(|(a, b)| linalg::max_abs(&(a - b)) == 0.0);
    if !same {
        return None;
    }
    let tuple = ex1_level2_tuple();
    let value = map.evaluate_level(&tuple).ok()?;
    Some(json!({
        "tuple": tuple.iter().map(matrix_over_algebra_to_json).collect::<Vec<_>>(),
        "value": matrix_to_json(&value),
        "admissible": is_admissible(&tuple, 1e-12),
        "note": "the (1,1) entry is -1, but A1 != A3* so the tuple is outside the admissible set; \
                 it does not witness a failure of positivity, and the map is completely positive",
    }))
}

fn check(args: &CheckArgs) -> Outcome {
    let map = load_map(&args.map)?;
    let all = !(args.invariant || args.symmetric || args.positivity || args.cp);
    let tol = map.default_tol();
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("check"));
    report.insert("source".into(), json!(args.map));
    report.insert("map".into(), shape(&map));
    report.insert("seed".into(), json!(args.seed));
    report.insert("tolerance".into(), json!(tol));
    let mut pass = true;

    let inv_opts = InvarianceOptions { seed: args.seed, ..Default::default() };
    let invariance = map.invariance_report(&inv_opts);
    if all || args.invariant {
        let entries = map.entries_invariant(tol);
        pass &= invariance.invariant;
        report.insert(
            "invariant".into(),
            json!({
                "verdict": verdict(invariance.invariant),
                "block": invariance,
                "entries": entries,
                "exhaustive_limit": inv_opts.exhaustive_limit,
                "random_trials": inv_opts.random_trials,
            }),
        );
    }
    if all || args.symmetric {
        let defect = map.symmetry_defect();
        let ok = defect <= tol;
        pass &= ok;
        report.insert("symmetric".into(), json!({ "verdict": verdict(ok), "defect": defect, "tol": tol }));
    }
    if all || args.positivity {
        let opts =
            FalsifyOptions { levels: args.levels.clone(), trials: args.trials, seed: args.seed, tol: FALSIFY_TOL };
        let found = positivity_falsify(&map, &opts);
        pass &= found.is_none();
        report.insert(
            "positivity".into(),
            json!({
                "verdict": if found.is_some() { "fail" } else { "inconclusive" },
                "levels": opts.levels,
                "trials": opts.trials,
                "tol": opts.tol,
                "counterexample": found.as_ref().map(counterexample_to_json),
            }),
        );
    }
    if all || args.cp {
        let (section, ok) = cp_section(&map, invariance.invariant)?;
        pass &= ok;
        report.insert("cp".into(), section);
    }
    if let Some(note) = ex1_note(&map) {
        report.insert("ex1_note".into(), note);
    }
    Ok((Value::Object(report), pass))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn cp_section(map: &BlockMultilinearMap, invariant: bool) -> std::result::Result<(Value, bool), Failure> {
    let g = build_gram(map)?;
    let gram = match gram_is_psd(&g, None) {
        Ok(r) => json!(r),
        Err(Error::NonHermitianGram { defect, tol }) => json!({ "psd": false, "hermitian_defect": defect, "tol": tol }),
        Err(e) => return Err(e.into()),
    };
    if let Some(r) = cp_refute(map)? {
        // The Gram criterion only refutes complete positivity for invariant maps.
        let v = if invariant { "fail" } else { "inconclusive" };
        let witness: Vec<Value> = r.witness.iter().map(|z| json!([z.re, z.im])).collect();
        let section = json!({
            "verdict": v,
            "gram": gram,
            "refutation": { "kind": r.kind, "min_eigenvalue": r.min_eigenvalue, "witness": witness },
        });
        return Ok((section, v != "fail"));
    }
    let opts = DilateOptions::default();
    match dilate(map, &opts) {
        Ok(triple) => {
            let res = verify_dilation(map, &triple)?;
            let ok = res.reconstruction <= RECONSTRUCTION_TOL * (1.0 + map.max_coeff_norm())
                && res.structural() <= STRUCTURAL_TOL;
            let section = json!({
                "verdict": if ok { "pass" } else { "inconclusive" },
                "gram": gram,
                "certificate": { "kappa": triple.kappa(), "residuals": residuals_to_json(&res) },
                "rank_tol": opts.rank_tol,
                "descent_tol": opts.descent_tol,
            });
            Ok((section, ok))
        }
        Err(Error::DescentFailure { factor, basis, residual }) => Ok((
            json!({
                "verdict": "inconclusive",
                "gram": gram,
                "obstruction": { "factor": factor, "basis": basis, "residual": residual },
            }),
            true,
        )),
        Err(e) => Err(e.into()),
    }
}

fn dilate_cmd(source: &str, minimal: bool, out: Option<&Path>) -> Outcome {
    let map = load_map(source)?;
    let opts = DilateOptions::default();
    let mut triple = dilate(&map, &opts)?;
    let mut minimality = None;
    if minimal {
        let (compressed, report) = minimal_compress(&triple);
        triple = compressed;
        minimality = Some(report);
    }
    let res = verify_dilation(&map, &triple)?;
    let ok =
        res.reconstruction <= RECONSTRUCTION_TOL * (1.0 + map.max_coeff_norm()) && res.structural() <= STRUCTURAL_TOL;
    let body = triple_to_json(&triple, Some(&res));
    let mut report = json!({
        "command": "dilate",
        "source": source,
        "map": shape(&map),
        "kappa": triple.kappa(),
        "spanning_rank": spanning_rank(&triple),
        "residuals": residuals_to_json(&res),
        "reconstruction_tol": RECONSTRUCTION_TOL * (1.0 + map.max_coeff_norm()),
        "structural_tol": STRUCTURAL_TOL,
        "rank_tol": opts.rank_tol,
        "descent_tol": opts.descent_tol,
        "minimality": minimality,
        "pass": ok,
    });
    match out {
        Some(path) => {
            fs::write(path, pretty(&body)).with_context(|| format!("writing {}", path.display()))?;
            report["out"] = json!(path.display().to_string());
        }
        None => report["triple"] = body,
    }
    Ok((report, ok))
}

fn equiv(t1: &Path, t2: &Path, source: &str) -> Outcome {
    let map = load_map(source)?;
    let a = load_triple(t1)?;
    let b = load_triple(t2)?;
    let r = unitary_equivalence(&a, &b, &map)?;
    let ok = r.unitarity <= EQUIV_UNITARITY_TOL && r.intertwining <= EQUIV_TOL && r.v_matching <= EQUIV_TOL;
    Ok((
        json!({
            "command": "equiv",
            "source": source,
            "report": r,
            "u": matrix_to_json(&r.u),
            "unitarity_tol": EQUIV_UNITARITY_TOL,
            "tol": EQUIV_TOL,
            "pass": ok,
        }),
        ok,
    ))
}

fn estimate_json(e: &multicp::NormEstimate) -> Value {
    json!({
        "value": e.value,
        "level": e.level,
        "seed": e.seed,
        "restarts": e.restarts,
        "best_restart": e.best_restart,
        "iterations": e.iterations,
        "witness": e.witness.iter().map(matrix_over_algebra_to_json).collect::<Vec<_>>(),
    })
}

fn levels_json(levels: &[LevelCheck]) -> Vec<Value> {
    levels
        .iter()
        .map(|l| json!({ "estimate": estimate_json(&l.estimate), "bound": l.bound, "within": l.within }))
        .collect()
}

fn russo_dye(args: &RussoDyeArgs) -> Outcome {
    let map = load_map(&args.map)?;
    let opts = NormOptions { restarts: args.restarts, iters: args.iters, seed: args.seed, frozen_identity: Vec::new() };
    let r = russo_dye_check(&map, &opts)?;
    let mut pass = r.status == CheckStatus::Pass;
    let mut report = json!({
        "command": "russo-dye",
        "source": args.map,
        "map": shape(&map),
        "seed": args.seed,
        "restarts": args.restarts,
        "iters": args.iters,
        "slack": NORM_SLACK,
        "level1": {
            "status": r.status,
            "estimate": estimate_json(&r.estimate),
            "unit_norm": r.unit_norm,
            "unit_attainment": r.unit_attainment,
            "margin": r.margin,
            "invariant": r.invariance.invariant,
            "positivity_counterexample": r.positivity.as_ref().map(counterexample_to_json),
        },
    });
    if args.cb {
        let cb: CbReport = cb_russo_dye_check(&map, None, args.tmax, &opts)?;
        pass &= cb.pass;
        report["cb"] = json!({
            "pass": cb.pass,
            "tmax": args.tmax,
            "unit_norm": cb.unit_norm,
            "v_norm_sq": cb.v_norm_sq,
            "unit_v_gap": cb.unit_v_gap,
            "levels": levels_json(&cb.levels),
        });
        if matches!(map.k(), 3 | 4) {
            let b: Cb16Report = cb_16_bound_check(&map, args.tmax, &opts)?;
            pass &= b.pass;
            report["cb16"] = json!({ "pass": b.pass, "unit_norm": b.unit_norm, "levels": levels_json(&b.levels) });
        }
    }
    report["pass"] = json!(pass);
    Ok((report, pass))
}

fn gen(name: Option<&str>, list: bool) -> Outcome {
    if list || name.is_none() {
        return Ok((json!({ "fixtures": FIXTURES }), true));
    }
    let name = name.unwrap_or_default();
    let v = fixture(name).ok_or_else(|| anyhow!("unknown fixture `{name}`; try `multicp gen --list`"))?;
    Ok((v, true))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate { map } => validate(map),
        Command::Check(args) => check(args),
        Command::Dilate { map, minimal, out } => dilate_cmd(map, *minimal, out.as_deref()),
        Command::Equiv { triple1, triple2, map } => equiv(triple1, triple2, map),
        Command::RussoDye(args) => russo_dye(args),
        Command::Gen { name, list } => gen(name.as_deref(), *list),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, pass)) => {
            print!("{}", pretty(&report));
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
