//! `pi-hier`: command-line front-end for the hierarchical-term analyses.
//!
//! Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or input
//! error, 3 inconclusive within the given bounds.

use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pi_hier_core::corpus::{corpus, entry, EntryKind};
use pi_hier_core::encodings::{encode_marking, Encoded};
use pi_hier_core::forest::{depth_exact, topology};
use pi_hier_core::normal_form::canonical;
use pi_hier_core::pretty::{pretty_nf, pretty_seq};
use pi_hier_core::tcompat::tshape_failure;
use pi_hier_core::{
    check_invariance, cover, encode_minsky, explore, forest_of, infer_with, nest_nu, nf, p_safe, parse, phi, pretty,
    typecheck_term, CoverVerdict, ExploreOptions, Hierarchy, InferOptions, InferenceStatus, MinskyMachine, ResetNet,
    Term, TypeEnv,
};

/// Enumeration cap for the exact depth of a term.
const DEPTH_LIMIT: u128 = 1 << 22;

#[derive(Parser, Debug)]
#[command(name = "pi-hier", version, about = "Analyses for hierarchical pi-calculus terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Emit Graphviz DOT where the command produces a graph.
    #[arg(long, global = true, conflicts_with = "json")]
    dot: bool,
    #[arg(long, global = true, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    #[arg(long, global = true, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    /// Step budget of the inference search.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    backtracks: u64,
    /// Exploration worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Hierarchy file (`.hier` text or JSON).
    #[arg(long, global = true)]
    hierarchy: Option<PathBuf>,
    /// Environment for the free names (`name : type` lines or JSON).
    #[arg(long, global = true)]
    env: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TermInput {
    /// Term file; `-` reads stdin.
    file: Option<PathBuf>,
    /// Term given inline.
    #[arg(short = 'e', long = "expr", conflicts_with = "file")]
    expr: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and pretty-print a term.
    Parse(TermInput),
    /// Print the normal form and its canonical key.
    Nf(TermInput),
    /// Print the forest of a term, or its communication topology.
    Forest {
        #[command(flatten)]
        input: TermInput,
        #[arg(long)]
        topology: bool,
    },
    /// Decide T-compatibility of an annotated term under `--hierarchy`.
    Tcompat {
        #[command(flatten)]
        input: TermInput,
        /// Check every subterm (T-shapedness) instead of the top level.
        #[arg(long)]
        shaped: bool,
    },
    /// Type-check an annotated term under `--hierarchy` and `--env`.
    Check(TermInput),
    /// Infer a chain hierarchy and annotations.
    Infer {
        #[command(flatten)]
        input: TermInput,
        /// Write the annotated term, hierarchy and environment to
        /// PREFIX.pi, PREFIX.hier and PREFIX.env.
        #[arg(long, value_name = "PREFIX")]
        write: Option<PathBuf>,
    },
    /// Explore the reachable states within the bounds.
    Explore(TermInput),
    /// Search for a reachable state embedding the query.
    Cover {
        #[command(flatten)]
        input: TermInput,
        #[arg(long, value_name = "FILE")]
        query: PathBuf,
    },
    /// Check that every explored state stays typable and T-shaped. Without
    /// `--hierarchy` the typing is inferred first.
    Invariance(TermInput),
    /// Encode a reset net or a Minsky machine given as JSON.
    Encode {
        #[command(subcommand)]
        what: EncodeKind,
        #[arg(long, value_name = "PREFIX", global = true)]
        write: Option<PathBuf>,
    },
    /// The built-in example corpus.
    Examples {
        #[command(subcommand)]
        what: ExamplesCmd,
    },
}

#[derive(Subcommand, Debug)]
enum EncodeKind {
    ResetNet {
        file: PathBuf,
        /// Marking to encode instead of the initial one, e.g. `1,0,2`.
        #[arg(long, value_delimiter = ',')]
        marking: Option<Vec<u32>>,
    },
    Minsky {
        file: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ExamplesCmd {
    List,
    Show { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Positive,
    Negative,
    Inconclusive,
}

impl Verdict {
    fn code(self) -> u8 {
        match self {
            Verdict::Positive => 0,
            Verdict::Negative => 1,
            Verdict::Inconclusive => 3,
        }
    }

    fn of(ok: bool) -> Verdict {
        if ok {
            Verdict::Positive
        } else {
            Verdict::Negative
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => ExitCode::from(v.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_source(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_term(src: &str, origin: &str) -> Result<Term> {
    parse(src).map_err(|e| anyhow!("{origin}:{e}"))
}

impl TermInput {
    fn load(&self) -> Result<Term> {
        match (&self.file, &self.expr) {
            (Some(p), None) => parse_term(&read_source(p)?, &p.display().to_string()),
            (None, Some(e)) => parse_term(e, "<expr>"),
            _ => bail!("give exactly one term: a file or --expr"),
        }
    }
}

impl Cli {
    fn explore_opts(&self) -> ExploreOptions {
        ExploreOptions { max_states: self.max_states as usize, max_depth: self.max_depth as usize, jobs: self.jobs }
    }

    fn hierarchy(&self) -> Result<Option<Hierarchy>> {
        self.hierarchy
            .as_ref()
            .map(|p| Hierarchy::parse(&read_source(p)?).with_context(|| format!("in {}", p.display())))
            .transpose()
    }

    fn require_hierarchy(&self) -> Result<Hierarchy> {
        self.hierarchy()?.ok_or_else(|| anyhow!("this command needs --hierarchy"))
    }

    fn type_env(&self) -> Result<TypeEnv> {
        match &self.env {
            Some(p) => TypeEnv::parse(&read_source(p)?).with_context(|| format!("in {}", p.display())),
            None => Ok(TypeEnv::new()),
        }
    }

    fn emit(&self, json: Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&json).expect("plain data"));
        } else {
            print!("{}", text());
        }
    }
}

fn env_json(env: &TypeEnv) -> Value {
    env.iter()
        .map(|(x, t)| (x.display().to_string(), Value::String(t.to_string())))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn write_bundle(prefix: &Path, term: &Term, h: &Hierarchy, env: &TypeEnv) -> Result<()> {
    let with = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    for (path, body) in
        [(with(".pi"), pretty(term) + "\n"), (with(".hier"), h.to_text()), (with(".env"), env.to_text())]
    {
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Verdict> {
    match &cli.command {
        Command::Parse(input) => {
            let t = input.load()?;
            let free: Vec<String> = t.free_names().iter().map(|x| x.display().to_string()).collect();
            cli.emit(json!({"term": pretty(&t), "free": free}), || format!("{}\n", pretty(&t)));
            Ok(Verdict::Positive)
        }
        Command::Nf(input) => {
            let n = nf(&input.load()?);
            let key = canonical(&n).to_string();
            cli.emit(json!({"nf": pretty_nf(&n), "canonical": key}), || format!("{}\n", pretty_nf(&n)));
            Ok(Verdict::Positive)
        }
        Command::Forest { input, topology: topo } => {
            let t = input.load()?;
            if *topo {
                let g = topology(&nf(&t));
                if cli.dot {
                    print!("{}", g.to_dot());
                } else {
                    let edges: Vec<Value> =
                        g.edges.iter().map(|(x, vs)| json!({"name": x.display(), "vertices": vs})).collect();
                    let vertices: Vec<String> = g.vertices.iter().map(pretty_seq).collect();
                    cli.emit(json!({"vertices": vertices, "edges": edges}), || {
                        let mut s = String::new();
                        for (i, v) in vertices.iter().enumerate() {
                            s.push_str(&format!("v{i}: {v}\n"));
                        }
                        for (x, vs) in &g.edges {
                            s.push_str(&format!("{}: {vs:?}\n", x.display()));
                        }
                        s
                    });
                }
                return Ok(Verdict::Positive);
            }
            let f = forest_of(&t);
            let nest = nest_nu(&t);
            let depth = depth_exact(&nf(&t), DEPTH_LIMIT).ok();
            if cli.dot {
                print!("{}", f.to_dot());
            } else {
                cli.emit(json!({"forest": f.to_json(), "nest": nest, "depth": depth}), || {
                    let d = depth.map_or_else(|| "unknown".to_string(), |d| d.to_string());
                    format!("{}nest: {nest}\ndepth: {d}\n", f.to_text())
                });
            }
            Ok(Verdict::Positive)
        }
        Command::Tcompat { input, shaped } => {
            let t = input.load()?;
            let h = cli.require_hierarchy()?;
            if *shaped {
                let failure = tshape_failure(&h, &t)?;
                cli.emit(json!({"t_shaped": failure.is_none(), "failure": failure}), || match &failure {
                    None => "T-shaped\n".to_string(),
                    Some(f) => format!("not T-shaped: {f}\n"),
                });
                return Ok(Verdict::of(failure.is_none()));
            }
            let out = phi(&h, &nf(&t))?;
            if cli.dot && out.ok {
                print!("{}", out.forest.to_dot());
            } else {
                cli.emit(json!({"compatible": out.ok, "forest": out.ok.then(|| out.forest.to_json()), "failure": out.failure}), || {
                    match &out.failure {
                        None => format!("T-compatible\n{}", out.forest.to_text()),
                        Some(f) => format!("not T-compatible: {f}\n"),
                    }
                });
            }
            Ok(Verdict::of(out.ok))
        }
        Command::Check(input) => {
            let t = input.load()?;
            let h = cli.require_hierarchy()?;
            let env = cli.type_env()?;
            let report = typecheck_term(&h, &env, &t);
            let shape = tshape_failure(&h, &t).ok().flatten().map(|f| f.to_string());
            let safe = p_safe(&h, &env, &t).ok();
            cli.emit(json!({"typable": report.ok, "violations": report.violations, "t_shaped": shape.is_none(), "shape_failure": shape, "p_safe": safe}), || {
                let mut s = String::from(if report.ok { "typable\n" } else { "not typable\n" });
                for v in &report.violations {
                    s.push_str(&format!("  {v}\n"));
                }
                match &shape {
                    None => s.push_str("T-shaped\n"),
                    Some(f) => s.push_str(&format!("not T-shaped: {f}\n")),
                }
                if let Some(safe) = safe {
                    s.push_str(if safe { "environment is safe\n" } else { "environment is not safe\n" });
                }
                s
            });
            Ok(Verdict::of(report.ok))
        }
        Command::Infer { input, write } => {
            let t = input.load()?;
            let r = infer_with(&t, InferOptions { max_backtracks: cli.backtracks });
            if let (Some(prefix), true) = (write, r.ok) {
                write_bundle(prefix, &r.term, &r.hierarchy, &r.env)?;
            }
            let mut out = r.to_json();
            out["term"] = Value::String(pretty(&r.term));
            cli.emit(out, || {
                let mut s = String::new();
                match &r.failure {
                    None => {
                        let chain: Vec<String> = r.hierarchy.nodes().iter().map(|b| b.to_string()).collect();
                        s.push_str(&format!("typable\nchain: {}\n", chain.join(" < ")));
                        for (x, ty) in r.env.iter() {
                            s.push_str(&format!("free {} : {ty}\n", x.display()));
                        }
                        s.push_str(&format!("term: {}\n", pretty(&r.term)));
                    }
                    Some(f) => s.push_str(&format!("not typable: {f}\n")),
                }
                s
            });
            Ok(match r.status {
                InferenceStatus::Ok => Verdict::Positive,
                InferenceStatus::Unsat => Verdict::Negative,
                InferenceStatus::Inconclusive => Verdict::Inconclusive,
            })
        }
        Command::Explore(input) => {
            let g = explore(&nf(&input.load()?), cli.explore_opts());
            if cli.dot {
                print!("{}", g.to_dot());
            } else {
                cli.emit(g.to_json(), || {
                    format!(
                        "states: {}\nedges: {}\ndeepest: {}\ncomplete: {}\n",
                        g.len(),
                        g.edges.len(),
                        g.max_depth_reached,
                        g.exact
                    )
                });
            }
            Ok(if g.exact { Verdict::Positive } else { Verdict::Inconclusive })
        }
        Command::Cover { input, query } => {
            let t = input.load()?;
            let q = parse_term(&read_source(query)?, &query.display().to_string())?;
            let rep = cover(&t, &q, cli.explore_opts());
            cli.emit(serde_json::to_value(&rep)?, || match &rep.verdict {
                CoverVerdict::Covered { state, depth, term } => {
                    format!("covered by state {state} at depth {depth}: {term}\n")
                }
                CoverVerdict::NotWithinBounds => format!("not covered within bounds ({} states)\n", rep.states),
                CoverVerdict::NotCoverable => format!("not coverable ({} states, exhaustive)\n", rep.states),
            });
            Ok(match rep.verdict {
                CoverVerdict::Covered { .. } => Verdict::Positive,
                CoverVerdict::NotCoverable => Verdict::Negative,
                CoverVerdict::NotWithinBounds => Verdict::Inconclusive,
            })
        }
        Command::Invariance(input) => {
            let t = input.load()?;
            let (h, env, t) = match cli.hierarchy()? {
                Some(h) => (h, cli.type_env()?, t),
                None => {
                    let r = infer_with(&t, InferOptions { max_backtracks: cli.backtracks });
                    match (&r.status, &r.failure) {
                        (InferenceStatus::Ok, _) => (r.hierarchy, r.env, r.term),
                        (status, f) => {
                            let why = f.as_ref().map(|f| f.to_string()).unwrap_or_default();
                            eprintln!("no typing to check: {why}");
                            cli.emit(json!({"preconditions": [why], "failure": null}), String::new);
                            return Ok(if *status == InferenceStatus::Inconclusive {
                                Verdict::Inconclusive
                            } else {
                                Verdict::Negative
                            });
                        }
                    }
                }
            };
            let rep = check_invariance(&h, &env, &t, cli.explore_opts())?;
            cli.emit(serde_json::to_value(&rep)?, || {
                let mut s = String::new();
                for p in &rep.preconditions {
                    s.push_str(&format!("precondition: {p}\n"));
                }
                match &rep.failure {
                    Some(f) => {
                        s.push_str(&format!("violation at state {} (depth {}): {}\n", f.state, f.depth, f.term));
                        for v in &f.typing {
                            s.push_str(&format!("  {v}\n"));
                        }
                        if let Some(sh) = &f.tshape {
                            s.push_str(&format!("  {sh}\n"));
                        }
                    }
                    None if rep.preconditions.is_empty() => {
                        let scope = if rep.exact { "all reachable" } else { "explored" };
                        s.push_str(&format!("no violations in {} {scope} states\n", rep.states_checked));
                    }
                    None => {}
                }
                s
            });
            Ok(Verdict::of(rep.ok()))
        }
        Command::Encode { what, write } => {
            let e: Encoded = match what {
                EncodeKind::ResetNet { file, marking } => {
                    let net: ResetNet = serde_json::from_str(&read_source(file)?)
                        .with_context(|| format!("reading a reset net from {}", file.display()))?;
                    let m = marking.clone().unwrap_or_else(|| net.initial.clone());
                    encode_marking(&net, &m)?
                }
                EncodeKind::Minsky { file } => {
                    let m: MinskyMachine = serde_json::from_str(&read_source(file)?)
                        .with_context(|| format!("reading a machine from {}", file.display()))?;
                    encode_minsky(&m)?
                }
            };
            if let Some(prefix) = write {
                write_bundle(prefix, &e.term, &e.hierarchy, &e.env)?;
            }
            cli.emit(
                json!({"term": pretty(&e.term), "hierarchy": e.hierarchy.to_json(), "env": env_json(&e.env)}),
                || format!("{}\n", pretty(&e.term)),
            );
            Ok(Verdict::Positive)
        }
        Command::Examples { what } => match what {
            ExamplesCmd::List => {
                let all = corpus();
                cli.emit(serde_json::to_value(&all)?, || {
                    all.iter()
                        .map(|e| {
                            let kind = match e.kind {
                                EntryKind::Process => "process".to_string(),
                                EntryKind::Query => format!("query on {}", e.query_for.unwrap_or("?")),
                            };
                            format!("{:<20} {:<24} {}\n", e.name, kind, e.description)
                        })
                        .collect()
                });
                Ok(Verdict::Positive)
            }
            ExamplesCmd::Show { name } => {
                let e = entry(name).ok_or_else(|| anyhow!("no example named `{name}`; see `examples list`"))?;
                cli.emit(serde_json::to_value(&e)?, || format!("{}\n", e.source));
                Ok(Verdict::Positive)
            }
        },
    }
}
