//! Batch front end: compile problems onto devices, verify emitted circuits,
//! print cost reports, and expose Steiner-tree computation for debugging.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible placement,
//! 4 verification failure, 5 resource cap exceeded.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parityc::device::{steiner_tree, DeviceGraph};
use parityc::error::Error;
use parityc::layout::CostOrder;
use parityc::pipeline::{compile, verify_emitted, CompileOptions, Manifest};
use parityc::problem::HcboProblem;
use parityc::qaoa::QaoaSchedule;
use parityc::qasm;

#[derive(Parser)]
#[command(
    name = "parityc",
    version,
    about = "Parity-architecture compiler for constrained binary optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostFlag {
    CnotFirst,
    DepthFirst,
}

#[derive(Args)]
struct PipelineArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// Device: a JSON file path, `chain:N`, or `grid:WxH`.
    #[arg(long)]
    device: String,
    /// Longest constraint the basis search may keep without ancillas.
    #[arg(long, default_value_t = 4)]
    max_constraint_len: usize,
    /// Seed for all randomness (layout restarts, move order).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total move evaluations across all restarts.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Independent random restarts of the hill climb.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Cost ordering for the search.
    #[arg(long, value_enum, default_value = "cnot-first")]
    cost: CostFlag,
    /// QAOA layers.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Comma-separated problem angles, one per layer.
    #[arg(long, default_value = "0.5")]
    gamma: String,
    /// Comma-separated driver angles, one per layer.
    #[arg(long, default_value = "0.5")]
    beta: String,
    /// Write the accepted-move trace as JSON lines.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a problem and emit circuit.qasm, report.json and layout.json.
    Compile {
        #[command(flatten)]
        args: PipelineArgs,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Re-check an emitted circuit against the intended operator.
    Verify {
        /// Circuit file produced by compile.
        #[arg(long)]
        circuit: PathBuf,
        /// Problem JSON file.
        #[arg(long)]
        problem: PathBuf,
        /// layout.json produced by compile.
        #[arg(long)]
        layout: PathBuf,
        /// Equivalence tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Compile and print the report to stdout without writing files.
    Stats {
        #[command(flatten)]
        args: PipelineArgs,
    },
    /// Compute the Steiner tree for a terminal set on a device.
    Steiner {
        /// Device: a JSON file path, `chain:N`, or `grid:WxH`.
        #[arg(long)]
        device: String,
        /// Comma-separated terminal node ids.
        #[arg(long)]
        terminals: String,
        /// Use the exponential exact search instead of the fast constructions.
        #[arg(long)]
        exact: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Input(_)
        | Error::DimensionMismatch { .. }
        | Error::UnknownId(_)
        | Error::Json(_) => 2,
        Error::Infeasible(_) | Error::MoveRejected(_) => 3,
        Error::Verification(_) => 4,
        Error::ResourceCap(_) => 5,
        Error::Io(_) => 2,
    }
}

fn load_device(spec: &str) -> Result<DeviceGraph, Error> {
    if let Some(n) = spec.strip_prefix("chain:") {
        let n = n
            .parse()
            .map_err(|_| Error::Input(format!("bad chain size: {spec}")))?;
        return DeviceGraph::chain(n);
    }
    if let Some(dims) = spec.strip_prefix("grid:") {
        let (w, h) = dims
            .split_once('x')
            .ok_or_else(|| Error::Input(format!("grid needs WxH: {spec}")))?;
        let w = w
            .parse()
            .map_err(|_| Error::Input(format!("bad grid width: {spec}")))?;
        let h = h
            .parse()
            .map_err(|_| Error::Input(format!("bad grid height: {spec}")))?;
        return DeviceGraph::grid(w, h);
    }
    DeviceGraph::from_json(&fs::read_to_string(spec)?)
}

fn parse_angles(text: &str, layers: usize, what: &str) -> Result<Vec<f64>, Error> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Input(format!("bad {what} list: {text}")))?;
    if values.len() == 1 && layers > 1 {
        return Ok(vec![values[0]; layers]);
    }
    if values.len() != layers {
        return Err(Error::Input(format!(
            "{what} needs {layers} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn build_options(args: &PipelineArgs) -> Result<(HcboProblem, DeviceGraph, CompileOptions), Error> {
    let problem = HcboProblem::from_json(&fs::read_to_string(&args.problem)?)?;
    let device = load_device(&args.device)?;
    let schedule = QaoaSchedule {
        gammas: parse_angles(&args.gamma, args.layers, "gamma")?,
        betas: parse_angles(&args.beta, args.layers, "beta")?,
        constraint_angles: None,
    };
    let opts = CompileOptions {
        max_constraint_len: args.max_constraint_len,
        seed: args.seed,
        budget: args.budget,
        restarts: args.restarts,
        cost_order: match args.cost {
            CostFlag::CnotFirst => CostOrder::CnotFirst,
            CostFlag::DepthFirst => CostOrder::DepthFirst,
        },
        schedule,
    };
    Ok((problem, device, opts))
}

/// Writes via a temp file in the same directory, then renames into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_compile(args: &PipelineArgs, out_dir: &Path, emit_files: bool) -> Result<(), Error> {
    let (problem, device, opts) = build_options(args)?;
    let out = compile(&problem, &device, &opts)?;

    let report_json = serde_json::to_string_pretty(&out.report)?;
    if emit_files {
        fs::create_dir_all(out_dir)?;
        let header = vec![
            format!("seed {}", opts.seed),
            format!("layers {}", opts.schedule.layers()),
            "exchange pairs emitted as a single first-order pass per layer".to_string(),
        ];
        let qasm_text = qasm::emit(
            &out.circuit.circuit,
            out.manifest.n_qreg,
            &out.circuit.prep,
            &header,
        );
        write_atomic(&out_dir.join("circuit.qasm"), &qasm_text)?;
        write_atomic(&out_dir.join("report.json"), &report_json)?;
        write_atomic(
            &out_dir.join("layout.json"),
            &serde_json::to_string_pretty(&out.manifest)?,
        )?;
        if args.trace {
            let mut lines = String::new();
            for event in &out.trace {
                lines.push_str(&serde_json::to_string(event)?);
                lines.push('\n');
            }
            write_atomic(&out_dir.join("trace.jsonl"), &lines)?;
        }
        println!(
            "compiled: {} constraint CNOTs ({} in SWAP baseline), {} ancillas -> {}",
            out.report.totals.cnots,
            out.report.swap_baseline.cnots,
            out.report.totals.ancillas,
            out_dir.display()
        );
    } else {
        println!("{report_json}");
    }
    Ok(())
}

fn run_verify(circuit: &Path, problem: &Path, layout: &Path, tol: f64) -> Result<(), Error> {
    let problem = HcboProblem::from_json(&fs::read_to_string(problem)?)?;
    let manifest = Manifest::from_json(&fs::read_to_string(layout)?)?;
    let qasm_text = fs::read_to_string(circuit)?;
    let outcome = verify_emitted(&problem, &manifest, &qasm_text, tol)?;
    println!(
        "equivalence: {} (max deviation {:.3e} over {} qubits), code space: {}",
        if outcome.equivalent { "ok" } else { "FAILED" },
        outcome.max_deviation,
        outcome.n_qubits_checked,
        if outcome.code_space_ok {
            "ok"
        } else {
            "FAILED"
        },
    );
    if !outcome.passed() {
        return Err(Error::Verification(
            "circuit does not match its target".into(),
        ));
    }
    Ok(())
}

fn run_steiner(device: &str, terminals: &str, exact: bool) -> Result<(), Error> {
    let device = load_device(device)?;
    let ids: BTreeSet<usize> = terminals
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Input(format!("bad terminal list: {terminals}")))?;
    let tree = if exact {
        parityc::device::exact_steiner(&device, &ids)?
    } else {
        steiner_tree(&device, &ids)?
    };
    println!("terminals: {ids:?}");
    println!("tree size: {} edges", tree.size());
    for (a, b) in &tree.edges {
        println!("  {a} -- {b}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile { args, out_dir } => run_compile(args, out_dir, true),
        Command::Stats { args } => run_compile(args, Path::new("."), false),
        Command::Verify {
            circuit,
            problem,
            layout,
            tol,
        } => run_verify(circuit, problem, layout, *tol),
        Command::Steiner {
            device,
            terminals,
            exact,
        } => run_steiner(device, terminals, *exact),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
