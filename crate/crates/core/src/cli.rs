//! Command-line front end. Exit status 0 on success, 1 when a well-formed
//! input fails a validation or soundness check, 2 on malformed input.
//! Diagnostics are JSON lines on stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::align::{align, frontier, restrict_diagram};
use crate::assign::Assignment;
use crate::cnf::{self, graphs_of, Cnf};
use crate::compile::{
    compile_primal, compile_split, decision_tree, grid_junction_diagram, psi_junction_fbdd, psi_layer_obdd,
};
use crate::diagram::{self, validate, Diagram};
use crate::formula::{Family, FormulaFamilyRequest, Orientation};
use crate::graph::{
    extract_neat, grid, pathwidth_exact, treewidth_exact_with_cap, width_min_with, Decomposition, Edge, Graph,
    LinearOrder, Matching, OrderSearch, WidthMode, EXHAUSTIVE_ORDER_CAP,
};
use crate::lowerbound::{certify, fooling_set, min_obdd_with, obdd_for_order, Engine, FoolingExperiment};
use crate::par::Exec;
use crate::{Error, Result, Var, BUILD_ID, DEFAULT_BRUTE_FORCE_CAP};

#[derive(Parser, Debug)]
#[command(name = "dnnf-lab", version, about = "Decision-DNNF workbench", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a CNF family as DIMACS.
    Gen(GenArgs),
    /// Compile a CNF (or a fixed grid family) into a diagram.
    Compile(CompileArgs),
    /// Count models of a diagram or CNF.
    Count(CountArgs),
    /// Evaluate a diagram or CNF on a total assignment.
    Eval(EvalArgs),
    /// Check the diagram invariants and report its class.
    Validate(ValidateArgs),
    /// Align a diagram by an assignment; with --order also report the frontier.
    Align(AlignArgs),
    /// Restrict a ∧d-OBDD by x ← i.
    Restrict(RestrictArgs),
    /// Width parameters of a graph.
    Width(WidthArgs),
    /// Graphviz export.
    ExportDot(DotArgs),
    /// Lower-bound experiments.
    Lb {
        #[command(subcommand)]
        cmd: LbCmd,
    },
    /// Minimal OBDD size over an order search.
    Minobdd(MinObddArgs),
    /// Execute an experiment manifest into a bundle directory.
    Run(RunArgs),
}

#[derive(Subcommand, Debug)]
enum LbCmd {
    Fool(ExperimentArgs),
    Certify(CertifyArgs),
    Minobdd(MinObddArgs),
}

#[derive(Args, Debug)]
struct GraphSource {
    /// Graph file (`v <name>` / `e <u> <v>` lines).
    #[arg(long, conflicts_with_all = ["grid", "matching_q"])]
    graph: Option<PathBuf>,
    /// The n×n grid.
    #[arg(long)]
    grid: Option<usize>,
    /// The matching u1-w1, …, uq-wq.
    #[arg(long = "matching-q")]
    matching_q: Option<usize>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[command(flatten)]
    src: GraphSource,
    /// E1 of the junction partition as a graph file; E2 is the rest. Grids
    /// default to (E_hor, E_vert).
    #[arg(long)]
    e1: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar with family, graph hash and partition.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Also write the graph itself.
    #[arg(long = "graph-out")]
    graph_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    /// dtree | primal | split | grid-junction | psi-layer | obdd
    #[arg(long)]
    method: String,
    #[arg(long)]
    cnf: Option<PathBuf>,
    #[arg(long)]
    decomp: Option<PathBuf>,
    /// Comma-separated 1-based clause ids for the split pipeline.
    #[arg(long)]
    long: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// hor | vert | junction
    #[arg(long)]
    orientation: Option<String>,
    /// Variable order for `--method obdd`.
    #[arg(long)]
    order: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "vtree-out")]
    vtree_out: Option<PathBuf>,
    /// Treewidth cap when no decomposition is given.
    #[arg(long = "tw-cap", default_value_t = 16)]
    tw_cap: usize,
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long, conflicts_with = "cnf")]
    diagram: Option<PathBuf>,
    #[arg(long)]
    cnf: Option<PathBuf>,
    /// Comma-separated universe; defaults to the declared variables.
    #[arg(long)]
    universe: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, conflicts_with = "cnf")]
    diagram: Option<PathBuf>,
    #[arg(long)]
    cnf: Option<PathBuf>,
    /// `name=bit` tokens joined by commas.
    #[arg(long)]
    assignment: String,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long)]
    order: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long)]
    assignment: String,
    #[arg(long)]
    order: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the frontier record (default: stdout).
    #[arg(long)]
    frontier: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RestrictArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long)]
    var: String,
    #[arg(long)]
    value: u8,
    /// Skip the essentiality check.
    #[arg(long)]
    waive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, conflicts_with = "sample")]
    exhaustive: bool,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "exhaustive-cap", default_value_t = EXHAUSTIVE_ORDER_CAP)]
    exhaustive_cap: usize,
}

impl SearchArgs {
    fn search(&self) -> Result<OrderSearch> {
        match (self.exhaustive, self.sample, self.seed) {
            (true, _, _) => Ok(OrderSearch::Exhaustive),
            (false, Some(count), Some(seed)) => Ok(OrderSearch::Sampled { count, seed }),
            (false, Some(_), None) => Err(Error::Malformed("--sample requires --seed".into())),
            (false, None, _) => Err(Error::Malformed("choose --exhaustive or --sample N --seed S".into())),
        }
    }
}

#[derive(Args, Debug)]
struct WidthArgs {
    #[arg(long)]
    graph: PathBuf,
    /// lsim | lmm | tw | pw | neat
    #[arg(long)]
    measure: String,
    #[command(flatten)]
    search: SearchArgs,
    /// Order of the doubled graph, for `--measure neat`.
    #[arg(long)]
    order: Option<PathBuf>,
    #[arg(long = "decomp-out")]
    decomp_out: Option<PathBuf>,
    #[arg(long = "tw-cap", default_value_t = 16)]
    tw_cap: usize,
}

#[derive(Args, Debug)]
struct DotArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    matching: PathBuf,
    #[arg(long)]
    order: PathBuf,
    /// and-obdd | obdd
    #[arg(long)]
    engine: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Omit the wall-clock field.
    #[arg(long = "no-clock")]
    no_clock: bool,
}

#[derive(Args, Debug)]
struct MinObddArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    cap: usize,
    /// Write the OBDD for the best order.
    #[arg(long = "diagram-out")]
    diagram_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Bundle directory (created).
    #[arg(long)]
    out: PathBuf,
}

/// Per-invocation settings that are not flags.
#[derive(Debug, Clone, Copy, Default)]
struct Ctx {
    /// Inside a manifest run: no wall-clock fields, no nested runs.
    bundle: bool,
}

/// Entry point used by the binary: `args[0]` is the program name.
pub fn main_with_args(args: &[String]) -> u8 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first), runs the verb, and returns the exit
/// status.
pub fn dispatch(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    dispatch_in(Ctx::default(), args, out, err)
}

fn dispatch_in(ctx: Ctx, args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            diag(err, "usage", &e.to_string().lines().next().unwrap_or("").to_string(), None);
            return 2;
        }
    };
    match run_cmd(ctx, cli.cmd, out, err) {
        Ok(()) => 0,
        Err(Failure::Err(e)) => {
            diag(err, e.kind(), &e.to_string(), None);
            if e.is_malformed() {
                2
            } else {
                1
            }
        }
        Err(Failure::Step { id, status }) => {
            diag(err, "step-failed", &format!("step {id} exited with {status}"), Some(&id));
            status
        }
    }
}

fn diag(err: &mut dyn Write, kind: &str, msg: &str, step: Option<&str>) {
    let mut v = serde_json::json!({"level": "error", "kind": kind, "message": msg});
    if let Some(s) = step {
        v["step"] = serde_json::json!(s);
    }
    let _ = writeln!(err, "{v}");
}

enum Failure {
    Err(Error),
    Step { id: String, status: u8 },
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Err(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::Malformed(format!("cannot read {}: {e}", p.display())))
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(p, text)?;
    Ok(())
}

/// Writes to `path` or, without one, to `out`.
fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn read_cnf(p: &Path) -> Result<Cnf> {
    cnf::from_dimacs(&read(p)?, None)
}

fn read_diagram(p: &Path) -> Result<Diagram> {
    diagram::from_json(&read(p)?)
}

fn read_order(p: &Path) -> Result<LinearOrder> {
    LinearOrder::parse(&read(p)?)
}

fn dimacs_file(phi: &Cnf) -> String {
    let (text, map) = cnf::to_dimacs(phi);
    format!("{map}{text}")
}

fn matching_graph(q: usize) -> Result<Graph> {
    if q == 0 {
        return Err(Error::Range("matching size must be positive".into()));
    }
    Graph::from_edges((1..=q).map(|i| (format!("u{i}"), format!("w{i}"))))
}

fn var_list(s: &str) -> BTreeSet<Var> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(Var::from).collect()
}

fn stats_line(method: &str, b: &Diagram, extra: serde_json::Value) -> String {
    let (dec, and, sink) = b.count_kind();
    let mut v = serde_json::json!({
        "build": BUILD_ID,
        "method": method,
        "nodes": b.size(),
        "decision": dec,
        "and": and,
        "sink": sink,
        "vars": b.vars().len(),
    });
    if let (Some(m), serde_json::Value::Object(e)) = (v.as_object_mut(), extra) {
        m.extend(e);
    }
    format!("{v}\n")
}

fn run_cmd(ctx: Ctx, cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Cmd::Gen(a) => gen(a, out),
        Cmd::Compile(a) => compile(a, out),
        Cmd::Count(a) => count(a, out),
        Cmd::Eval(a) => eval(a, out),
        Cmd::Validate(a) => {
            let b = read_diagram(&a.diagram)?;
            let order = a.order.as_deref().map(read_order).transpose()?;
            let class = validate(&b, order.as_ref())?;
            let v = serde_json::json!({
                "and_fbdd": class.and_fbdd,
                "fbdd": class.fbdd,
                "and_obdd": class.and_obdd,
                "obdd": class.obdd,
                "order": class.order.map(|o| o.as_slice().iter().map(|v| v.to_string()).collect::<Vec<_>>()),
            });
            writeln!(out, "{v}").map_err(Error::from)?;
            Ok(())
        }
        Cmd::Align(a) => {
            let b = read_diagram(&a.diagram)?;
            let g = Assignment::parse(&a.assignment)?;
            let al = align(&b, &g);
            emit(out, a.out.as_deref(), &al.to_json(&b))?;
            if let Some(o) = &a.order {
                let fr = frontier(&b, &read_order(o)?, &g)?;
                emit(out, a.frontier.as_deref(), &fr.to_json())?;
            }
            Ok(())
        }
        Cmd::Restrict(a) => {
            let b = read_diagram(&a.diagram)?;
            let i = match a.value {
                0 => false,
                1 => true,
                v => return Err(Error::Malformed(format!("--value must be 0 or 1, got {v}")).into()),
            };
            let r = restrict_diagram(&b, &a.var, i, a.waive)?;
            emit(out, a.out.as_deref(), &diagram::to_json(&r))?;
            Ok(())
        }
        Cmd::Width(a) => width(a, out),
        Cmd::ExportDot(a) => {
            let b = read_diagram(&a.diagram)?;
            emit(out, a.out.as_deref(), &diagram::to_dot(&b))?;
            Ok(())
        }
        Cmd::Lb { cmd } => match cmd {
            LbCmd::Fool(a) => {
                let exp = experiment(&a)?;
                emit(out, a.out.as_deref(), &fooling_set(&exp)?.render())?;
                Ok(())
            }
            LbCmd::Certify(a) => {
                let exp = experiment(&a.exp)?;
                let b = read_diagram(&a.diagram)?;
                let mut cert = certify(&b, &exp.order, &exp)?;
                if ctx.bundle || a.no_clock {
                    cert.wall_clock_ms = None;
                }
                emit(out, a.exp.out.as_deref(), &cert.to_json())?;
                if a.exp.out.is_some() {
                    writeln!(out, "{}", serde_json::json!({"bound": cert.bound, "injective": cert.injective}))
                        .map_err(Error::from)?;
                }
                Ok(())
            }
            LbCmd::Minobdd(a) => minobdd(a, out),
        },
        Cmd::Minobdd(a) => minobdd(a, out),
        Cmd::Run(a) => {
            if ctx.bundle {
                return Err(Error::Malformed("manifests cannot run manifests".into()).into());
            }
            run_experiment(&a.manifest, &a.out, err)
        }
    }
}

fn graph_from(src: &GraphSource) -> Result<(Graph, Option<(Vec<Edge>, Vec<Edge>)>)> {
    match (&src.graph, src.grid, src.matching_q) {
        (Some(p), None, None) => Ok((Graph::parse(&read(p)?)?, None)),
        (None, Some(n), None) => {
            let gr = grid(n)?;
            Ok((gr.graph, Some((gr.hor, gr.vert))))
        }
        (None, None, Some(q)) => Ok((matching_graph(q)?, None)),
        _ => Err(Error::Malformed("give exactly one of --graph, --grid, --matching-q".into())),
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    let family = Family::parse(&a.family)?;
    let (graph, default_part) = graph_from(&a.src)?;
    let partition = match (&a.e1, default_part) {
        (Some(p), _) => {
            let e1: BTreeSet<Edge> = Graph::parse(&read(p)?)?.edges().into_iter().collect();
            let e2 = graph.edges().into_iter().filter(|e| !e1.contains(e)).collect();
            Some((e1.into_iter().collect(), e2))
        }
        (None, d) => d,
    };
    let junction = matches!(family, Family::VcJunction | Family::PsiJunction);
    let req = FormulaFamilyRequest {
        family,
        graph,
        partition: if junction { partition } else { None },
    };
    let phi = req.generate()?;
    emit(out, a.out.as_deref(), &dimacs_file(&phi))?;
    if let Some(m) = &a.meta {
        write_file(m, &req.meta_json())?;
    }
    if let Some(g) = &a.graph_out {
        write_file(g, &req.graph.render())?;
    }
    if a.out.is_some() {
        writeln!(out, "{}", serde_json::json!({"family": family.name(), "vars": phi.vars().len(), "clauses": phi.len()}))
            .map_err(Error::from)?;
    }
    Ok(())
}

fn decomposition_for(phi: &Cnf, path: Option<&Path>, tw_cap: usize) -> Result<Decomposition> {
    match path {
        Some(p) => Decomposition::parse(&read(p)?),
        None => Ok(treewidth_exact_with_cap(&graphs_of(phi).0, tw_cap)?.1),
    }
}

fn need<'a, T>(x: &'a Option<T>, flag: &str) -> Result<&'a T> {
    x.as_ref().ok_or_else(|| Error::Malformed(format!("missing {flag}")))
}

fn compile(a: CompileArgs, out: &mut dyn Write) -> CmdResult {
    let (b, vt, extra) = match a.method.as_str() {
        "dtree" => {
            let phi = read_cnf(need(&a.cnf, "--cnf")?)?;
            let dt = decision_tree(&phi);
            let b = dt.to_diagram(Some(phi.vars()))?;
            (b, None, serde_json::json!({"tree_nodes": dt.size()}))
        }
        "primal" => {
            let phi = read_cnf(need(&a.cnf, "--cnf")?)?;
            let d = decomposition_for(&phi, a.decomp.as_deref(), a.tw_cap)?;
            let (b, vt) = compile_primal(&phi, &d)?;
            (b, Some(vt), serde_json::json!({"width": d.width()}))
        }
        "split" => {
            let phi = read_cnf(need(&a.cnf, "--cnf")?)?;
            let mut long = BTreeSet::new();
            for t in need(&a.long, "--long")?.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let id: usize = t
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad clause id {t:?}")))?;
                if id == 0 {
                    return Err(Error::Malformed("clause ids are 1-based".into()).into());
                }
                long.insert(id - 1);
            }
            let d = decomposition_for(&phi.without(&long), a.decomp.as_deref(), a.tw_cap)?;
            let (b, vt) = compile_split(&phi, &long, &d)?;
            (b, Some(vt), serde_json::json!({"width": d.width(), "long": long.len()}))
        }
        "grid-junction" => {
            let n = *need(&a.grid, "--grid")?;
            (grid_junction_diagram(n)?, None, serde_json::json!({"n": n}))
        }
        "psi-layer" => {
            let n = *need(&a.grid, "--grid")?;
            let o = a.orientation.as_deref().unwrap_or("hor");
            let b = if o == "junction" {
                psi_junction_fbdd(n)?
            } else {
                psi_layer_obdd(n, Orientation::parse(o)?)?.0
            };
            (b, None, serde_json::json!({"n": n, "orientation": o}))
        }
        "obdd" => {
            let phi = read_cnf(need(&a.cnf, "--cnf")?)?;
            let order = read_order(need(&a.order, "--order")?)?;
            (obdd_for_order(&phi, &order, a.cap)?, None, serde_json::json!({"cap": a.cap}))
        }
        m => return Err(Error::Malformed(format!("unknown method {m:?}")).into()),
    };
    match &a.out {
        Some(p) => {
            write_file(p, &diagram::to_json(&b))?;
            out.write_all(stats_line(&a.method, &b, extra).as_bytes()).map_err(Error::from)?;
        }
        None => out.write_all(diagram::to_json(&b).as_bytes()).map_err(Error::from)?,
    }
    if let (Some(p), Some(vt)) = (&a.vtree_out, vt) {
        write_file(p, &vt.render())?;
    }
    Ok(())
}

fn count(a: CountArgs, out: &mut dyn Write) -> CmdResult {
    let n = match (&a.diagram, &a.cnf) {
        (Some(p), None) => {
            let b = read_diagram(p)?;
            let u = a.universe.as_deref().map(var_list).unwrap_or_else(|| b.vars().clone());
            diagram::count_models(&b, &u)?.to_string()
        }
        (None, Some(p)) => {
            let phi = read_cnf(p)?;
            let u = a.universe.as_deref().map(var_list).unwrap_or_else(|| phi.vars());
            cnf::count_models_brute(Exec::default(), &phi, &u, a.cap)?.to_string()
        }
        _ => return Err(Error::Malformed("give --diagram or --cnf".into()).into()),
    };
    writeln!(out, "{n}").map_err(Error::from)?;
    Ok(())
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> CmdResult {
    let g = Assignment::parse(&a.assignment)?;
    let v = match (&a.diagram, &a.cnf) {
        (Some(p), None) => diagram::evaluate(&read_diagram(p)?, &g)?,
        (None, Some(p)) => cnf::evaluate(&read_cnf(p)?, &g)?,
        _ => return Err(Error::Malformed("give --diagram or --cnf".into()).into()),
    };
    writeln!(out, "{}", u8::from(v)).map_err(Error::from)?;
    Ok(())
}

fn width(a: WidthArgs, out: &mut dyn Write) -> CmdResult {
    let g = Graph::parse(&read(&a.graph)?)?;
    let strs = |o: &LinearOrder| o.as_slice().iter().map(|v| v.to_string()).collect::<Vec<_>>();
    let v = match a.measure.as_str() {
        "lsim" | "lmm" => {
            let mode = if a.measure == "lsim" { WidthMode::Lsim } else { WidthMode::Lmm };
            let search = a.search.search()?;
            if search == OrderSearch::Exhaustive && g.vertex_count() > a.search.exhaustive_cap {
                return Err(Error::Scale {
                    what: "exhaustive order search",
                    size: g.vertex_count(),
                    cap: a.search.exhaustive_cap,
                }
                .into());
            }
            let (w, o) = width_min_with(Exec::default(), &g, mode, search)?;
            serde_json::json!({"measure": a.measure, "width": w, "order": strs(&o)})
        }
        "tw" | "pw" => {
            let (w, d) = if a.measure == "tw" {
                treewidth_exact_with_cap(&g, a.tw_cap)?
            } else {
                pathwidth_exact(&g)?
            };
            if let Some(p) = &a.decomp_out {
                write_file(p, &d.render())?;
            }
            serde_json::json!({"measure": a.measure, "width": w})
        }
        "neat" => {
            let pi = read_order(need(&a.order, "--order")?)?;
            let nm = extract_neat(&g, &pi)?;
            serde_json::json!({
                "measure": "neat",
                "size": nm.matching.len(),
                "base_size": nm.base_size,
                "side": nm.side,
                "prefix_len": nm.prefix_len,
                "matching": nm.matching.pairs.iter().map(|(u, w)| [u.to_string(), w.to_string()]).collect::<Vec<_>>(),
            })
        }
        m => return Err(Error::Malformed(format!("unknown measure {m:?}")).into()),
    };
    writeln!(out, "{v}").map_err(Error::from)?;
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<FoolingExperiment> {
    let g = Graph::parse(&read(&a.graph)?)?;
    let m = Matching::parse(&read(&a.matching)?)?;
    let pi = read_order(&a.order)?;
    FoolingExperiment::new(g, &m, pi, Engine::parse(&a.engine)?)
}

fn minobdd(a: MinObddArgs, out: &mut dyn Write) -> CmdResult {
    let phi = read_cnf(&a.cnf)?;
    let search = a.search.search()?;
    let (size, order) = min_obdd_with(Exec::default(), &phi, search, a.search.exhaustive_cap, a.cap)?;
    if let Some(p) = &a.diagram_out {
        write_file(p, &diagram::to_json(&obdd_for_order(&phi, &order, a.cap)?))?;
    }
    let (mode, count, seed) = match search {
        OrderSearch::Exhaustive => ("exhaustive", None, None),
        OrderSearch::Sampled { count, seed } => ("sampled", Some(count), Some(seed)),
    };
    let v = serde_json::json!({
        "build": BUILD_ID,
        "size": size,
        "order": order.as_slice().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "search": mode,
        "samples": count,
        "seed": seed,
        "cap": a.cap,
        "exhaustive_cap": a.search.exhaustive_cap,
    });
    writeln!(out, "{v}").map_err(Error::from)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifests

/// `{name, seed?, files?, steps: [{id, args}]}`. `files` are written into the
/// bundle before the steps run; in step arguments `{bundle}` expands to the
/// bundle directory and `{seed}` to the manifest seed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    #[serde(default)]
    pub steps: Vec<ManifestStep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestStep {
    pub id: String,
    pub args: Vec<String>,
}

fn safe_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !s.starts_with('.')
}

/// Runs every step in order, writing `<id>.out` (stdout), `<id>.err`
/// (diagnostics) and `summary.tsv` into `bundle`.
fn run_experiment(manifest: &Path, bundle: &Path, err: &mut dyn Write) -> CmdResult {
    let text = read(manifest)?;
    let m: Manifest = serde_json::from_str(&text)?;
    for name in m.files.keys().chain(m.steps.iter().map(|s| &s.id)) {
        if !safe_name(name) {
            return Err(Error::Malformed(format!("unsafe bundle name {name:?}")).into());
        }
    }
    fs::create_dir_all(bundle)?;
    write_file(&bundle.join("manifest.json"), &text)?;
    for (name, content) in &m.files {
        write_file(&bundle.join(name), content)?;
    }
    let dir = bundle.to_string_lossy().to_string();
    let seed = m.seed.map(|s| s.to_string()).unwrap_or_default();
    let mut summary = String::from("step\tstatus\tstdout_sha256\tfirst_line\n");
    let ctx = Ctx { bundle: true };
    for step in &m.steps {
        let mut argv = vec![String::from("dnnf-lab")];
        argv.extend(step.args.iter().map(|a| a.replace("{bundle}", &dir).replace("{seed}", &seed)));
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let status = dispatch_in(ctx, &argv, &mut so, &mut se);
        write_file(&bundle.join(format!("{}.out", step.id)), &String::from_utf8_lossy(&so))?;
        if !se.is_empty() {
            write_file(&bundle.join(format!("{}.err", step.id)), &String::from_utf8_lossy(&se))?;
        }
        let first = String::from_utf8_lossy(&so).lines().next().unwrap_or("").replace('\t', " ");
        summary.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            step.id,
            status,
            hex::encode(Sha256::digest(&so)),
            first
        ));
        if status != 0 {
            write_file(&bundle.join("summary.tsv"), &summary)?;
            let _ = err.write_all(&se);
            return Err(Failure::Step {
                id: step.id.clone(),
                status,
            });
        }
    }
    write_file(&bundle.join("summary.tsv"), &summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (u8, String, String) {
        let argv: Vec<String> = std::iter::once("dnnf-lab").chain(args.iter().copied()).map(String::from).collect();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = dispatch(&argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn version_and_unknown_flag() {
        let (c, o, _) = run(&["--version"]);
        assert_eq!(c, 0);
        assert_eq!(o.trim(), BUILD_ID);
        let (c, _, e) = run(&["count", "--bogus"]);
        assert_eq!(c, 2);
        assert!(e.starts_with('{'));
    }

    #[test]
    fn gen_psi_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("psi2.cnf");
        let (c, o, _) = run(&["gen", "--family", "psi", "--grid", "2", "--out", p.to_str().unwrap()]);
        assert_eq!(c, 0, "{o}");
        let phi = read_cnf(&p).unwrap();
        assert_eq!((phi.vars().len(), phi.len()), (8, 10));
    }
}
