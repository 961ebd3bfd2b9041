use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use coregauge::analysis::{core_check, core_rows, lipschitz_scan, AllocatorKind, CoreTolerance, DeltaRule};
use coregauge::instances::{gen_example1_pair, gen_path_uniform, gen_random, gen_theorem3_pair};
use coregauge::matching::{matching_guarantees, theorem1_allocate};
use coregauge::mst::{self, mst_allocate, theorem2_allocate};
use coregauge::shapley::{shapley_exact, shapley_sample};
use coregauge::{par, oracles, Allocation, GameInstance, GameKind};

#[derive(Parser)]
#[command(name = "coregauge", version, about = "Lipschitz-continuous approximate-core allocations for graph games")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "COREGAUGE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate-core allocation of an instance.
    Allocate {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = GameArg::Auto)]
        game: GameArg,
        /// Core relaxation for matching games, in (0, 1/2].
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the spanning tree game's auxiliary tree to this file.
        #[arg(long)]
        dump_tree: Option<PathBuf>,
        /// Offset b at which the dumped tree is built.
        #[arg(long, default_value_t = 0.5)]
        tree_offset: f64,
    },
    /// Checks an allocation against the (approximate) core.
    CoreCheck {
        instance: PathBuf,
        allocation: PathBuf,
        /// Core factor; defaults to the "alpha" field of the allocation file.
        #[arg(long)]
        alpha: Option<f64>,
        /// Write one CSV row per coalition.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shapley value, exact or sampled.
    Shapley {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Probes an allocator with single-edge weight increases.
    Lipschitz {
        instance: PathBuf,
        /// theorem1:EPS, theorem2, shapley_exact, raw_integrate_matching:ALPHA,
        /// raw_integrate_mst or exact_core_solve.
        #[arg(long)]
        allocator: String,
        /// Claimed constant; defaults to the proven one.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Deltas per edge: w_e * 10^-k for k below this.
        #[arg(long, default_value_t = 4)]
        levels: u32,
        /// Write one CSV row per probe.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Writes a generated instance.
    Gen {
        #[arg(value_enum)]
        generator: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Matching)]
        kind: KindArg,
        #[arg(long, default_value_t = 0.5)]
        edge_prob: f64,
        #[arg(long, default_value_t = 10.0)]
        w_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Member of a generated pair to emit.
        #[arg(long, value_enum, default_value_t = Which::Base)]
        which: Which,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Auto,
    Matching,
    Mst,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Matching,
    Mst,
}

impl From<KindArg> for GameKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Matching => GameKind::Matching,
            KindArg::Mst => GameKind::MinSpanningTree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Path,
    Example1,
    Theorem3,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Base,
    Perturbed,
}

/// Anything that makes the input unusable; exits with code 2.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<coregauge::Error> for InputError {
    fn from(e: coregauge::Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<serde_json::Error> for InputError {
    fn from(e: serde_json::Error) -> Self {
        InputError(format!("invalid JSON: {e}"))
    }
}

impl From<csv::Error> for InputError {
    fn from(e: csv::Error) -> Self {
        InputError(format!("csv: {e}"))
    }
}

fn input(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

type CmdResult = Result<Verdict, InputError>;

/// Whether a report passed; failing reports exit with code 1.
enum Verdict {
    Ok,
    Failed,
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), InputError> {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<GameInstance, InputError> {
    let inst = GameInstance::from_json(&read(path)?)
        .and_then(|i| i.ensure_valid().map(|_| i))
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(inst)
}

fn emit(text: &str) {
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn emit_json(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn allocation_json(x: &Allocation) -> Value {
    let map: Map<String, Value> = x.values().iter().enumerate().map(|(v, &val)| (v.to_string(), json!(val))).collect();
    Value::Object(map)
}

fn cmd_allocate(path: &Path, game: GameArg, epsilon: Option<f64>, dump_tree: Option<&Path>, tree_offset: f64) -> CmdResult {
    let inst = load_instance(path)?;
    let wanted = match game {
        GameArg::Auto => inst.kind(),
        GameArg::Matching => GameKind::Matching,
        GameArg::Mst => GameKind::MinSpanningTree,
    };
    if wanted != inst.kind() {
        return Err(input(format!("--game {wanted} but {} is a {} instance", path.display(), inst.kind())));
    }
    let (x, alpha, bound) = match inst.kind() {
        GameKind::Matching => {
            if dump_tree.is_some() {
                return Err(input("--dump-tree needs a spanning tree instance"));
            }
            let eps = epsilon.ok_or_else(|| input("matching games need --epsilon"))?;
            let g = matching_guarantees(eps)?;
            (theorem1_allocate(&inst, eps)?, g.core_factor, g.lipschitz)
        }
        GameKind::MinSpanningTree => {
            if let Some(out) = dump_tree {
                let trace = mst_allocate(&inst, tree_offset)?;
                write(out, &serde_json::to_string_pretty(&trace.tree.to_json_value())?)?;
            }
            (theorem2_allocate(&inst)?, mst::CORE_FACTOR, mst::lipschitz_bound())
        }
    };
    let grand = oracles::grand_value(&inst)?;
    emit_json(&json!({
        "allocation": allocation_json(&x),
        "grand_value": grand,
        "alpha": alpha,
        "lipschitz_bound": bound,
    }));
    eprintln!("{} game, {} agents: allocated {grand} with core factor {alpha}", inst.kind(), inst.n());
    Ok(Verdict::Ok)
}

/// Accepts a bare array, an agent-keyed object, or `allocate` output.
fn parse_allocation(v: &Value, n: usize) -> Result<(Allocation, Option<f64>), InputError> {
    let (body, alpha) = match v.get("allocation") {
        Some(body) => (body, v.get("alpha").and_then(Value::as_f64)),
        None => (v, None),
    };
    let number = |x: &Value| x.as_f64().ok_or_else(|| input(format!("allocation entry {x} is not a number")));
    let values = match body {
        Value::Array(xs) => xs.iter().map(number).collect::<Result<Vec<_>, _>>()?,
        Value::Object(map) => {
            let mut out = vec![None; n];
            for (k, x) in map {
                let v: usize = k.parse().map_err(|_| input(format!("allocation key {k:?} is not an agent id")))?;
                let slot = out.get_mut(v).ok_or_else(|| input(format!("allocation names agent {v} but n = {n}")))?;
                *slot = Some(number(x)?);
            }
            out.into_iter()
                .enumerate()
                .map(|(v, x)| x.ok_or_else(|| input(format!("allocation misses agent {v}"))))
                .collect::<Result<Vec<_>, _>>()?
        }
        _ => return Err(input("allocation must be an array or an object")),
    };
    if values.len() != n {
        return Err(input(format!("allocation has {} entries for {n} agents", values.len())));
    }
    Ok((Allocation::new(values), alpha))
}

fn cmd_core_check(inst_path: &Path, alloc_path: &Path, alpha: Option<f64>, csv_path: Option<&Path>) -> CmdResult {
    let inst = load_instance(inst_path)?;
    let raw: Value = serde_json::from_str(&read(alloc_path)?)?;
    let (x, file_alpha) = parse_allocation(&raw, inst.n())?;
    let alpha = alpha
        .or(file_alpha)
        .ok_or_else(|| input("no --alpha given and the allocation file has no \"alpha\""))?;
    let report = core_check(&inst, &x, alpha, CoreTolerance::default())?;
    if let Some(p) = csv_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in core_rows(&inst, &x, alpha)? {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| input(e.to_string()))?;
        write(p, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    }
    emit_json(&serde_json::to_value(&report)?);
    eprintln!(
        "{}: worst slack {} at {}, grand residual {}",
        if report.pass { "pass" } else { "FAIL" },
        report.worst_slack,
        report.worst_subset,
        report.grand_residual
    );
    Ok(if report.pass { Verdict::Ok } else { Verdict::Failed })
}

fn cmd_shapley(path: &Path, method: MethodArg, samples: usize, seed: u64) -> CmdResult {
    let inst = load_instance(path)?;
    let res = match method {
        MethodArg::Exact => shapley_exact(&inst)?,
        MethodArg::Sample => shapley_sample(&inst, samples, seed)?,
    };
    emit_json(&serde_json::to_value(&res)?);
    eprintln!("Shapley value of {} agents, total {}", inst.n(), res.values.iter().sum::<f64>());
    Ok(Verdict::Ok)
}

fn cmd_lipschitz(path: &Path, allocator: &str, bound: Option<f64>, tol: f64, levels: u32, csv_path: Option<&Path>) -> CmdResult {
    let inst = load_instance(path)?;
    let kind: AllocatorKind = allocator.parse()?;
    let bound = bound
        .or_else(|| kind.proven_bound())
        .ok_or_else(|| input(format!("{kind} has no proven constant; pass --bound")))?;
    if levels == 0 {
        return Err(input("--levels must be at least 1"));
    }
    let report = lipschitz_scan(kind, &inst, &DeltaRule::Grid { levels }, bound, tol)?;
    if let Some(p) = csv_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &report.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| input(e.to_string()))?;
        write(p, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    }
    emit_json(&serde_json::to_value(&report)?);
    eprintln!(
        "{}: max ratio {} against bound {} over {} probes",
        if report.pass { "pass" } else { "FAIL" },
        report.max_ratio,
        report.claimed_bound,
        report.rows.len()
    );
    Ok(if report.pass { Verdict::Ok } else { Verdict::Failed })
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    generator: Generator,
    n: usize,
    delta: f64,
    kind: KindArg,
    edge_prob: f64,
    w_max: f64,
    seed: u64,
    which: Which,
    output: Option<&Path>,
) -> CmdResult {
    let pick = |(a, b): (GameInstance, GameInstance)| match which {
        Which::Base => a,
        Which::Perturbed => b,
    };
    let inst = match generator {
        Generator::Path => gen_path_uniform(n)?,
        Generator::Example1 => pick(gen_example1_pair(n)?),
        Generator::Theorem3 => pick(gen_theorem3_pair(n, delta)?),
        Generator::Random => gen_random(kind.into(), n, edge_prob, w_max, seed)?,
    };
    let text = serde_json::to_string_pretty(&inst.to_json_value())?;
    match output {
        Some(p) => write(p, &format!("{text}\n"))?,
        None => emit(&text),
    }
    Ok(Verdict::Ok)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Allocate {
            instance,
            game,
            epsilon,
            dump_tree,
            tree_offset,
        } => cmd_allocate(&instance, game, epsilon, dump_tree.as_deref(), tree_offset),
        Command::CoreCheck {
            instance,
            allocation,
            alpha,
            csv,
        } => cmd_core_check(&instance, &allocation, alpha, csv.as_deref()),
        Command::Shapley {
            instance,
            method,
            samples,
            seed,
        } => cmd_shapley(&instance, method, samples, seed),
        Command::Lipschitz {
            instance,
            allocator,
            bound,
            tol,
            levels,
            csv,
        } => cmd_lipschitz(&instance, &allocator, bound, tol, levels, csv.as_deref()),
        Command::Gen {
            generator,
            n,
            delta,
            kind,
            edge_prob,
            w_max,
            seed,
            which,
            output,
        } => cmd_gen(generator, n, delta, kind, edge_prob, w_max, seed, which, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = cli.threads;
    match par::with_threads(threads, || run(cli)) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
