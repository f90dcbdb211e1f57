use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, ValueEnum};
use loopbound::analysis::{analyze, render_json, render_text, AnalysisOptions, RenderOptions, DEFAULT_SET_CAP};
use loopbound::ir::{parse_source, LowerOptions, SourceKind, DEFAULT_BACKBONE_CAP};
use loopbound::oracle::{validate_bounds, BoxSpec, ValidationReport, DEFAULT_STEP_CAP};
use loopbound::solver::{ExternalSolver, Solver};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Auto,
    Fg,
    Loopc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Symbolic upper bounds on how often each edge of a program can execute.
#[derive(Parser, Debug)]
#[command(name = "loopbound", version)]
struct Cli {
    /// Program to analyze (`.fg` flowgraph or `.loopc` source); `-` reads stdin.
    input: PathBuf,

    /// Input format; `auto` looks at the extension, then the contents.
    #[arg(long, value_enum, default_value = "auto")]
    kind: Kind,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Print the bound set of every edge.
    #[arg(long)]
    edge_bounds: bool,

    /// Print one bound per loop.
    #[arg(long)]
    loop_bounds: bool,

    /// Print asymptotic classes.
    #[arg(long)]
    asymptotic: bool,

    /// Check every bound against concrete runs over an input box.
    #[arg(long)]
    validate: bool,

    /// Input box for --validate: scalars in lo..=hi, arrays up to `size`
    /// entries with values in -val..=val.
    #[arg(long = "box", value_name = "LO:HI,SIZE,VAL", default_value_t = BoxSpec::default(), allow_hyphen_values = true)]
    input_box: BoxSpec,

    /// Steps after which a concrete run is cut off.
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,

    /// SMT-LIB2 solver that reads a script on stdin, such as z3 with
    /// `--solver-arg=-in`. Without it the built-in linear solver is used.
    #[arg(long, value_name = "PATH")]
    solver: Option<PathBuf>,

    /// Extra argument passed to the external solver; repeatable.
    #[arg(long = "solver-arg", value_name = "ARG", allow_hyphen_values = true)]
    solver_args: Vec<String>,

    /// Per-query limit for the external solver.
    #[arg(long, default_value_t = 2000)]
    solver_timeout_ms: u64,

    /// Drop backbones whose path condition is unsatisfiable.
    #[arg(long)]
    prune_infeasible: bool,

    /// Treat array stores as no-ops instead of rejecting them.
    #[arg(long)]
    ignore_array_writes: bool,

    /// Give up when a graph has more backbones than this.
    #[arg(long, default_value_t = DEFAULT_BACKBONE_CAP)]
    backbone_cap: usize,

    /// Largest number of bounds kept per edge.
    #[arg(long, default_value_t = DEFAULT_SET_CAP)]
    set_cap: usize,

    /// Keep loop counters symbolic instead of substituting the exit value of
    /// simple counting loops.
    #[arg(long)]
    no_smart_elim: bool,
}

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn options(cli: &Cli) -> AnalysisOptions {
    let solver = match &cli.solver {
        Some(path) => {
            let mut ext = ExternalSolver::new(path, Duration::from_millis(cli.solver_timeout_ms));
            ext.args = cli.solver_args.clone();
            Solver::with_external(ext)
        }
        None => Solver::internal(),
    };
    AnalysisOptions {
        backbone_cap: cli.backbone_cap,
        set_cap: cli.set_cap.max(1),
        prune_infeasible: cli.prune_infeasible,
        smart_elimination: !cli.no_smart_elim,
        solver,
    }
}

fn validation_text(v: &ValidationReport) -> String {
    let mut out = v.summary();
    out.push('\n');
    for x in &v.violations {
        out.push_str(&format!(
            "violation ({},{}): count {} > {} = {} on {:?}\n",
            x.src, x.dst, x.count, x.bound, x.value, x.input
        ));
    }
    if !v.skipped_edges.is_empty() {
        let ids: Vec<String> = v.skipped_edges.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("skipped (no bound): {}\n", ids.join(" ")));
    }
    out
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let text = read_input(&cli.input)?;
    let kind = match cli.kind {
        Kind::Fg => SourceKind::Fg,
        Kind::Loopc => SourceKind::Loopc,
        Kind::Auto => SourceKind::detect(cli.input.to_str(), &text),
    };
    let lower = LowerOptions {
        ignore_array_writes: cli.ignore_array_writes,
    };
    let name = cli.input.display();
    let g = parse_source(&text, kind, lower).map_err(|e| anyhow!("{name}: {e}"))?;
    let report = analyze(&g, &options(cli)).map_err(|e| anyhow!("{name}: {e}"))?;
    let validation = cli
        .validate
        .then(|| validate_bounds(&g, &report.bounds, cli.input_box, cli.step_cap));

    let out = match cli.format {
        Format::Text => {
            let sections = RenderOptions {
                edge_bounds: cli.edge_bounds,
                loop_bounds: cli.loop_bounds,
                asymptotic: cli.asymptotic,
            };
            let mut out = render_text(&report, sections);
            if let Some(v) = &validation {
                out.push_str(&validation_text(v));
            }
            out
        }
        Format::Json => {
            let mut json = render_json(&report);
            if let Some(v) = &validation {
                json["validation"] = serde_json::to_value(v)?;
            }
            serde_json::to_string_pretty(&json)? + "\n"
        }
    };
    // a closed pipe (`| head`) is not an error
    match std::io::stdout().lock().write_all(out.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(match validation {
        Some(v) if !v.is_sound() => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
