//! `hamming-forge`: command-line driver for the set-family and shift tools.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hamming_forge::binom;
use hamming_forge::calibration::{self, SweepRanges};
use hamming_forge::circuit::{cliques_generated_at, Circuit, DnfTable};
use hamming_forge::generator::{find_generator, GeneratorConfig, Mode};
use hamming_forge::shift::{run_shift, ShiftConfig, ShiftOutcome, ShiftStatus};
use hamming_forge::sunflower::{
    find_sunflower_er, find_sunflower_small_core, verify_sunflower, DEFAULT_NODE_BUDGET,
};
use hamming_forge::{Error, Limits, SetFamily};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

const TOOL: &str = "hamming-forge";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "hamming-forge", version, about = "Exact set-family and shift-method experiments")]
struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Enumeration cap; overrides HAMMING_FORGE_CAP.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the exhaustive identity and bound suites.
    Identities(IdentitiesArgs),
    /// Recompute the calibrated constants file.
    BinomCalibrate(CalibrateArgs),
    /// Binomial tools.
    Binom {
        #[command(subcommand)]
        command: BinomCommand,
    },
    /// Find an extension generator and count valid sets.
    Generator(GeneratorArgs),
    /// Find a sunflower in a family.
    Sunflower(SunflowerArgs),
    /// Expand a circuit node into its DNF.
    Dnf(DnfArgs),
    /// Run the shift pipeline on a monotone circuit.
    Shift(ShiftArgs),
}

#[derive(Subcommand, Debug)]
enum BinomCommand {
    /// Same as `binom-calibrate`.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug, Serialize)]
struct IdentitiesArgs {
    /// Exhaustive range for the product and Vandermonde identities.
    #[arg(long, default_value_t = 20)]
    identity_max: i64,
    /// Largest row checked against Pascal's rule.
    #[arg(long, default_value_t = 64)]
    pascal_max: u64,
    /// Largest `n` for the exact sandwich.
    #[arg(long, default_value_t = 60)]
    sandwich_max: u64,
    /// Largest `p` for the log-binomial error sweep.
    #[arg(long, default_value_t = 2000)]
    ln_binom_max: u64,
    /// Largest `l` for the slack sweep.
    #[arg(long, default_value_t = 400)]
    basic3_max: u64,
    /// Largest part size for the proportional split sweep.
    #[arg(long, default_value_t = 200)]
    proportional_max: u64,
    /// Random families for the mark-sandwich and sphere identity suites.
    #[arg(long, default_value_t = 200)]
    families: u64,
    #[arg(long, hide = true)]
    #[serde(skip)]
    inject_fault: bool,
}

#[derive(Args, Debug, Serialize)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 2000)]
    ln_binom_max: u64,
    #[arg(long, default_value_t = 400)]
    basic3_max: u64,
    #[arg(long, default_value_t = 200)]
    proportional_max: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Args, Debug, Serialize)]
struct GeneratorArgs {
    /// Family file (`{"n":..,"m":..,"sets":[[..],..]}`).
    family: PathBuf,
    #[arg(long)]
    l: u32,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Samples in sampled mode.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    #[arg(long, default_value_t = 0.25)]
    eps_prime: f64,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    max_size: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SunflowerMethod {
    Er,
    SmallCore,
}

#[derive(Args, Debug, Serialize)]
struct SunflowerArgs {
    family: PathBuf,
    #[arg(long)]
    delta: u32,
    #[arg(long, value_enum, default_value_t = SunflowerMethod::Er)]
    method: SunflowerMethod,
    /// Valid-set length for the small-core method.
    #[arg(long)]
    l: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.25)]
    eps_prime: f64,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
}

#[derive(Args, Debug, Serialize)]
struct DnfArgs {
    circuit: PathBuf,
    /// Node identifier; the root when omitted.
    #[arg(long)]
    node: Option<u32>,
    /// Also list the `k`-cliques generated at the node.
    #[arg(long)]
    k: Option<u32>,
    /// Drop contradictory terms.
    #[arg(long)]
    drop_contradictions: bool,
}

#[derive(Args, Debug, Serialize)]
struct ShiftArgs {
    circuit: PathBuf,
    config: PathBuf,
    /// Seeds such as `1,2,5-9`; defaults to `--seed`.
    #[arg(long)]
    seeds: Option<String>,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::input(e.to_string())
    }
}

type Outcome = Result<(Value, String, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let limits = cli.cap.map(Limits::new).unwrap_or_else(Limits::from_env);
    let result = match &cli.command {
        Command::Identities(a) => identities(a, &cli),
        Command::BinomCalibrate(a) | Command::Binom { command: BinomCommand::Calibrate(a) } => calibrate(a),
        Command::Generator(a) => generator(a, &cli, &limits),
        Command::Sunflower(a) => sunflower(a, &cli, &limits),
        Command::Dnf(a) => dnf(a, &cli, &limits),
        Command::Shift(a) => shift(a, &cli, &limits),
    };
    match result {
        Ok((report, human, code)) => {
            let text = match &cli.command {
                // The calibration file is written verbatim.
                Command::BinomCalibrate(_) | Command::Binom { .. } => human,
                _ if cli.json => {
                    let mut s = serde_json::to_string_pretty(&report).expect("serializable");
                    s.push('\n');
                    s
                }
                _ => human,
            };
            if let Err(e) = emit(&text, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn envelope(command: &str, seed: u64, config: Value, result: Value) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_family(path: &Path) -> Result<SetFamily, Failure> {
    SetFamily::from_json(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    Circuit::parse(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    checked: u64,
    failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_failure: Option<String>,
}

impl Suite {
    fn bound(name: &'static str, checked: u64, worst: f64, limit: f64) -> Suite {
        let ok = worst <= limit;
        Suite {
            name,
            checked,
            failures: u64::from(!ok),
            first_failure: (!ok).then(|| format!("sweep maximum {worst} exceeds {limit}")),
        }
    }

    fn run<I: IntoParallelIterator>(name: &'static str, cases: I, check: impl Fn(&I::Item) -> bool + Sync) -> Suite
    where
        I::Item: std::fmt::Debug + Send,
    {
        let results: Vec<(bool, String)> = cases
            .into_par_iter()
            .map(|c| {
                let ok = check(&c);
                (ok, if ok { String::new() } else { format!("{c:?}") })
            })
            .collect();
        Suite {
            name,
            checked: results.len() as u64,
            failures: results.iter().filter(|r| !r.0).count() as u64,
            first_failure: results.into_iter().find(|r| !r.0).map(|r| r.1),
        }
    }
}

fn identities(a: &IdentitiesArgs, cli: &Cli) -> Outcome {
    let k = calibration::constants();
    let m = a.identity_max;
    let triples: Vec<(i64, i64, i64)> = (0..=m)
        .flat_map(|p| (0..=m).flat_map(move |q| (0..=m).map(move |r| (p, q, r))))
        .collect();
    let mut suites = vec![
        Suite::run("product_identity", triples.clone(), |&(p, q, r)| {
            binom::check_identity_basic1(p, q, r)
        }),
        Suite::run(
            "vandermonde",
            triples.into_iter().filter(|&(p, r, _)| r <= p).collect::<Vec<_>>(),
            |&(p, r, q)| binom::check_identity_vandermonde(p, r, q).unwrap_or(false),
        ),
        Suite::run(
            "pascal",
            (1..=a.pascal_max).flat_map(|p| (1..=p).map(move |q| (p, q))).collect::<Vec<_>>(),
            |&(p, q)| binom::check_pascal(p, q) != a.inject_fault,
        ),
        Suite::run(
            "sandwich",
            (1..=a.sandwich_max)
                .flat_map(|n| (0..n).flat_map(move |m| (1..n).filter(move |l| l + m < n).map(move |l| (n, m, l))))
                .collect::<Vec<_>>(),
            |&(n, m, l)| binom::check_lemma_basic2(n, m, l).is_ok_and(|s| s.holds(1e-9)),
        ),
    ];
    // The sweeps reuse exact rows, so they are checked through their maxima.
    let ln_cases = (a.ln_binom_max.saturating_sub(1)) * a.ln_binom_max.saturating_sub(2) / 2;
    suites.push(Suite::bound("ln_binom_error", ln_cases, binom::sweep_ln_binom_error(a.ln_binom_max), k.ln_binom_error));
    let basic3_cases = (1..=a.basic3_max).map(|l| (1..).take_while(|m| m * m <= l).sum::<u64>()).sum();
    suites.push(Suite::bound("basic3_slack", basic3_cases, binom::sweep_basic3(a.basic3_max), k.basic3_slack));
    let pm = a.proportional_max;
    let prop_cases = (1..=pm).flat_map(|p| (1..=pm).map(move |q| p + q + 1)).sum();
    suites.push(Suite::bound("proportional", prop_cases, binom::sweep_proportional(pm), k.proportional_error));
    let limits = Limits::default();
    let family_cases: Vec<u64> = (0..a.families).collect();
    let random_family = |i: u64| -> Option<SetFamily> {
        let seed = cli.seed.wrapping_add(i);
        let n = 4 + (seed % 7) as u32;
        let m = 1 + (seed / 7 % (n as u64 - 1)) as u32;
        let cap = binom::binom_u64(n, m) as usize;
        let size = 1 + (seed.wrapping_mul(0x9E37_79B9) % cap as u64) as usize;
        SetFamily::random(n, m, size, seed, &limits).ok()
    };
    suites.push(Suite::run("mark_sandwich", family_cases.clone(), |&i| {
        random_family(i).is_some_and(|u| (u.m()..=u.n()).all(|l| u.check_lemma1(l, &limits).unwrap_or(false)))
    }));
    suites.push(Suite::run("sphere_identity", family_cases, |&i| {
        random_family(i).is_some_and(|u| {
            (u.m()..=u.n()).all(|l| u.check_kappa_s_equals_kappa_d(l, &limits).unwrap_or(false))
        })
    }));
    let passed = suites.iter().all(|s| s.failures == 0);
    let mut human = String::new();
    for s in &suites {
        human.push_str(&format!(
            "{:<18} {:>9} checked  {}\n",
            s.name,
            s.checked,
            if s.failures == 0 { "ok".to_string() } else { format!("{} FAILED", s.failures) }
        ));
    }
    human.push_str(if passed { "all suites passed\n" } else { "identity violation\n" });
    let report = envelope(
        "identities",
        cli.seed,
        serde_json::to_value(a).expect("serializable"),
        json!({ "passed": passed, "suites": suites }),
    );
    Ok((report, human, if passed { 0 } else { 1 }))
}

fn calibrate(a: &CalibrateArgs) -> Outcome {
    let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Failure::input("SOURCE_DATE_EPOCH must be an integer"))?,
        Err(_) => SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let file = calibration::calibrate(
        SweepRanges {
            ln_binom_max_p: a.ln_binom_max,
            basic3_max_l: a.basic3_max,
            proportional_max: a.proportional_max,
        },
        timestamp,
    );
    let text = file.to_json();
    Ok((Value::Null, text, 0))
}

fn generator(a: &GeneratorArgs, cli: &Cli, limits: &Limits) -> Outcome {
    let u = load_family(&a.family)?;
    let cfg = GeneratorConfig {
        eps_prime: a.eps_prime,
        r_override: a.r,
        max_size: a.max_size,
        mode: match a.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled { budget: a.budget, seed: cli.seed },
        },
    };
    let report = find_generator(&u, a.l, a.lambda, &cfg, limits)?;
    let human = format!(
        "g = {}\nvalid {}/{} (complement sparsity {}, target {})\nsuccess: {}\n",
        report.g, report.valid_count, report.total_count, report.complement_sparsity, a.lambda, report.success
    );
    let env = envelope(
        "generator",
        cli.seed,
        serde_json::to_value(a).expect("serializable"),
        serde_json::to_value(&report).expect("serializable"),
    );
    Ok((env, human, 0))
}

fn sunflower(a: &SunflowerArgs, cli: &Cli, limits: &Limits) -> Outcome {
    if a.delta < 2 {
        return Err(Failure::input("--delta must be at least 2"));
    }
    let u = load_family(&a.family)?;
    let (found, extra) = match a.method {
        SunflowerMethod::Er => (find_sunflower_er(&u, a.delta)?, Value::Null),
        SunflowerMethod::SmallCore => {
            let l = a.l.ok_or_else(|| Failure::input("--l is required for the small-core method"))?;
            let cfg = GeneratorConfig {
                eps_prime: a.eps_prime,
                r_override: a.r,
                ..GeneratorConfig::default()
            };
            let out = find_sunflower_small_core(&u, a.delta, l, a.lambda, &cfg, a.node_budget, limits)?;
            let extra = json!({
                "generator": out.generator,
                "valid_sets": out.valid_sets,
                "reason": out.reason,
            });
            (out.sunflower, extra)
        }
    };
    if let Some(f) = &found {
        // Never emit an unverified sunflower.
        if !verify_sunflower(f, &u) {
            return Err(Failure {
                code: 1,
                msg: "internal error: sunflower failed verification".into(),
            });
        }
    }
    let human = match &found {
        Some(f) => format!("core {} with {} petals\n", f.core, f.petals.len()),
        None => "NotFound\n".to_string(),
    };
    let result = json!({
        "status": if found.is_some() { "found" } else { "not_found" },
        "sunflower": found,
        "details": extra,
    });
    let env = envelope("sunflower", cli.seed, serde_json::to_value(a).expect("serializable"), result);
    Ok((env, human, 0))
}

fn dnf(a: &DnfArgs, cli: &Cli, limits: &Limits) -> Outcome {
    let c = load_circuit(&a.circuit)?;
    let node = match a.node {
        Some(id) => c.node_by_id(id).ok_or_else(|| Failure::input(format!("no reachable node with id {id}")))?,
        None => c.root(),
    };
    let table = DnfTable::build(&c, limits, a.drop_contradictions)?;
    let terms = table.terms(node);
    let cliques = match a.k {
        Some(k) => Some(cliques_generated_at(&c, &table, node, k, limits)?),
        None => None,
    };
    let mut human = format!("node {}: {} terms\n", c.id(node), terms.len());
    for t in terms {
        human.push_str(&format!("  {t:?}\n"));
    }
    if let Some(cl) = &cliques {
        human.push_str(&format!("generated cliques: {}\n", cl.len()));
        for s in cl {
            human.push_str(&format!("  {s}\n"));
        }
    }
    let result = json!({
        "n": c.n(),
        "node": c.id(node),
        "monotone": c.is_monotone(),
        "term_count": terms.len(),
        "terms": terms,
        "generated_cliques": cliques,
    });
    let env = envelope("dnf", cli.seed, serde_json::to_value(a).expect("serializable"), result);
    Ok((env, human, 0))
}

/// Parses `1,2,5-9` into an ascending list without repeats.
fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::input(format!("malformed seed list {text:?}"));
    let mut out = std::collections::BTreeSet::new();
    for part in text.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi): (u64, u64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
                if lo > hi || hi - lo > 1_000_000 {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad())?);
            }
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Serialize)]
struct Run {
    seed: u64,
    config: ShiftConfig,
    outcome: ShiftOutcome,
}

fn shift(a: &ShiftArgs, cli: &Cli, limits: &Limits) -> Outcome {
    let c = load_circuit(&a.circuit)?;
    let base = ShiftConfig::from_json(&read(&a.config)?)
        .map_err(|e| Failure::input(format!("{}: {e}", a.config.display())))?;
    if base.n != c.n() {
        return Err(Failure::input(format!("config n={} but circuit n={}", base.n, c.n())));
    }
    if !c.is_monotone() {
        return Err(Failure::input("the shift pipeline needs a monotone circuit"));
    }
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![cli.seed],
    };
    let runs: Vec<Result<Run, Error>> = seeds
        .par_iter()
        .map(|&seed| {
            let config = ShiftConfig { seed, ..base.clone() };
            run_shift(&c, &config, limits).map(|outcome| Run { seed, config, outcome })
        })
        .collect();
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_, _>>()?;
    let count = |s: ShiftStatus| runs.iter().filter(|r| r.outcome.status == s).count();
    let mut stages = std::collections::BTreeMap::new();
    for r in &runs {
        if let Some(st) = r.outcome.failure_stage {
            *stages.entry(format!("{st:?}")).or_insert(0usize) += 1;
        }
    }
    let aggregate = json!({
        "runs": runs.len(),
        "success": count(ShiftStatus::Success),
        "vacuous": count(ShiftStatus::Vacuous),
        "failure": count(ShiftStatus::Failure),
        "counterexamples": runs.iter().filter(|r| r.outcome.is_success() && r.outcome.counterexample()).count(),
        "soundness": runs.iter().all(|r| r.outcome.audits.get("soundness").copied().unwrap_or(true)),
        "failure_stages": stages,
    });
    let mut human = String::new();
    for r in &runs {
        let o = &r.outcome;
        human.push_str(&format!("seed {}: {:?}", r.seed, o.status));
        if let Some(st) = o.failure_stage {
            human.push_str(&format!(" at {st:?}"));
        }
        if let Some(t) = &o.term {
            human.push_str(&format!(" term {t:?} counterexample={}", o.counterexample()));
        }
        human.push_str(&format!(" Q_trace={:?}\n", o.q_trace));
    }
    let config = json!({ "circuit": a.circuit, "shift": base, "seeds": seeds });
    let env = envelope("shift", cli.seed, config, json!({ "runs": runs, "aggregate": aggregate }));
    Ok((env, human, 0))
}
