use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ionkin_core::quadrature::lobatto_rule;
use ionkin_core::report::{load_config, run, stability_report, table_reproduction};
use ionkin_core::spectral::{check_compatibility, required_nodes};
use ionkin_core::{Error, ExampleId, Grid2D, RunSpec, Truncation};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "IONKIN_OUT";

#[derive(Parser)]
#[command(name = "ionkin", version, about = "Recover p(t) in u_t = Δu - p(t)u + f under Ionkin conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a built-in example and write CSV/JSON output.
    Run(RunArgs),
    /// Reproduce the published error table for example 1 or 2.
    Table {
        example: ExampleId,
        /// Output directory (default: $IONKIN_OUT, then `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit an example against the existence conditions.
    Check {
        example: ExampleId,
        #[arg(long, default_value_t = 4)]
        trunc_m: usize,
        #[arg(long, default_value_t = 5)]
        trunc_k: usize,
    },
    /// Report whether a spec passes the explicit stability check (exit 3 if not).
    Stability {
        /// Optional config file; flags override its values.
        spec: Option<PathBuf>,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1 or 2.
    #[arg(long)]
    example: Option<String>,
    /// trapezoid, simpson, lobatto or spectral.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    trunc_m: Option<usize>,
    #[arg(long)]
    trunc_k: Option<usize>,
    /// Final time; defaults to the example's own.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory (default: config value, then $IONKIN_OUT, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the final-time u slice.
    #[arg(long)]
    emit_slices: bool,
}

fn default_out() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn build_spec(args: &RunArgs, config: Option<&Path>) -> ionkin_core::Result<RunSpec> {
    let mut map = match config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            map.insert(key.to_string(), v);
        }
    };
    set("example", args.example.clone());
    set("method", args.method.clone());
    set("nx", args.nx.map(|v| v.to_string()));
    set("ny", args.ny.map(|v| v.to_string()));
    set("nt", args.nt.map(|v| v.to_string()));
    set("trunc_m", args.trunc_m.map(|v| v.to_string()));
    set("trunc_k", args.trunc_k.map(|v| v.to_string()));
    set("horizon", args.horizon.map(|v| v.to_string()));
    set("output_dir", args.out.as_ref().map(|p| p.display().to_string()));
    if args.emit_slices {
        set("emit_slices", Some("true".into()));
    }
    if !map.contains_key("output_dir") {
        map.insert("output_dir".into(), default_out().display().to_string());
    }
    RunSpec::from_map(&map)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 1;
    };
    match e.root() {
        Error::InvalidSpec(_)
        | Error::InvalidArgument(_)
        | Error::InvalidResolution(_)
        | Error::Parity(_)
        | Error::InvalidTruncation(_)
        | Error::InvalidIndex(_)
        | Error::UnderResolved { .. }
        | Error::NotApplicable(_) => 2,
        Error::Unstable { .. } => 3,
        Error::Divergence { .. } | Error::NotConverged { .. } => 4,
        Error::Io(_) | Error::Json(_) => 5,
        _ => 1,
    }
}

fn execute(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run(args) => {
            let spec = build_spec(&args, args.config.as_deref())?;
            let report = run(&spec)?;
            println!("{spec}");
            println!("u error (max, t = T)   {:.6e}", report.u_error_max);
            println!("p error (max interior) {:.6e}", report.p_error_max);
            println!("r(0)                   {:.12}", report.r0);
            if let Some(m) = report.stability_margin {
                println!("stability margin       {m:.6}");
            }
            println!("wall time              {} ms", report.wall_ms);
            println!("output                 {}", spec.output_dir.display());
            Ok(0)
        }
        Command::Table { example, out } => {
            let dir = out.unwrap_or_else(default_out);
            let table = table_reproduction(example, &dir)?;
            print!("{table}");
            Ok(0)
        }
        Command::Check {
            example,
            trunc_m,
            trunc_k,
        } => {
            let trunc = Truncation::new(trunc_m, trunc_k)?;
            let nodes = required_nodes(trunc);
            let rule = lobatto_rule(&Grid2D::lobatto(nodes - 1, nodes - 1)?)?;
            let report = check_compatibility(&example.problem(), trunc, &rule)?;
            print!("{report}");
            Ok(0)
        }
        Command::Stability { spec, args } => {
            let config = args.config.as_deref().or(spec.as_deref());
            let spec = build_spec(&args, config)?;
            let report = stability_report(&spec).with_context(|| format!("stability check for {spec}"))?;
            println!("{spec}");
            println!("{report}");
            Ok(if report.admitted { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
