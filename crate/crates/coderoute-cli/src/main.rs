//! Command-line front end: compile tapes, evaluate them with any of the
//! three algorithms, account their cost, and verify small instances on the
//! qudit simulator.
//!
//! Exit codes: 1 for usage errors, 2 for validation errors (bad files,
//! malformed programs, structural problems), 3 for capability errors (tapes
//! the requested evaluator or the simulator cannot handle).

use clap::{Parser, Subcommand};
use coderoute::qsim::{run_quantum_tape, QsimError, SimConfig};
use coderoute::{
    compile_formula, compile_garden_hose, compile_theorem1_indicator, compile_theorem2,
    eval_depth_first, eval_modp, garden_hose_resource_pairs, get_owner, parse_formula, BitRef,
    EvalError, GardenHoseFunction, LibraryFunction, ProtocolTape, ProtocolTree, Side, SpanProgram,
};
use std::fmt::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "coderoute",
    version,
    about = "Code-routing protocols for the f-routing task"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Span-program operations.
    Sp {
        #[command(subcommand)]
        command: SpCommand,
    },
    /// Build protocol tapes.
    Compile {
        #[command(subcommand)]
        command: CompileCommand,
    },
    /// Evaluate and cost tapes.
    Tape {
        #[command(subcommand)]
        command: TapeCommand,
    },
    /// Quantum verification runs.
    Qsim {
        #[command(subcommand)]
        command: QsimCommand,
    },
    /// Summary tables.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum SpCommand {
    /// Evaluate a span program on one input.
    Eval {
        file: String,
        #[arg(long)]
        input: String,
    },
    /// Print the full truth table.
    Table { file: String },
    /// Decompose into a monotone indicator-function program.
    Decompose {
        file: String,
        #[arg(short, long)]
        output: String,
    },
}

#[derive(Subcommand)]
enum CompileCommand {
    /// General protocol from a span program, inputs split left/right.
    Theorem2 {
        file: String,
        #[arg(long)]
        left: usize,
        #[arg(long)]
        right: usize,
        #[arg(short, long)]
        output: String,
    },
    /// Concatenated threshold codes from a Boolean formula.
    Formula {
        expr: String,
        #[arg(short, long)]
        output: String,
    },
    /// Single-encoding protocol for a valid indicator function.
    Indicator {
        file: String,
        /// Comma-separated bit assignment, one per program input: L<i>,
        /// R<i>, or ~L<i>/~R<i> for negated bits.
        #[arg(long)]
        bits: String,
        #[arg(short, long)]
        output: String,
    },
    /// Per-input garden-hose tape for AND or OR.
    Gh {
        function: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(short, long)]
        output: String,
    },
}

#[derive(Subcommand)]
enum TapeCommand {
    /// Evaluate the routed side for one input.
    Eval {
        file: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "getowner")]
        evaluator: String,
        #[arg(long, default_value_t = 2)]
        p: u64,
    },
    /// Print entanglement cost and tree sizes.
    Cost {
        file: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
    },
}

#[derive(Subcommand)]
enum QsimCommand {
    /// Run the quantum protocol and the verifier's test for one input.
    Run {
        file: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Run the verifier's test for every input.
    Sweep { file: String },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Costs of the built-in example functions under each compiler.
    Library,
}

enum CliError {
    Usage(String),
    Validation(String),
    Capability(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Capability(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Capability(m) => m,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ArityExceeded { .. }
            | EvalError::FanInExceeded { .. }
            | EvalError::OverrideSetExceeded { .. } => CliError::Capability(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<QsimError> for CliError {
    fn from(e: QsimError) -> Self {
        match e {
            QsimError::Protocol(p) => CliError::Validation(p.to_string()),
            QsimError::Eval(inner) => inner.into(),
            other => CliError::Capability(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sp { command } => match command {
            SpCommand::Eval { file, input } => sp_eval(&file, &input),
            SpCommand::Table { file } => sp_table(&file),
            SpCommand::Decompose { file, output } => sp_decompose(&file, &output),
        },
        Command::Compile { command } => match command {
            CompileCommand::Theorem2 {
                file,
                left,
                right,
                output,
            } => {
                let sp = load_span_program(&file)?;
                let tape = compile_theorem2(&sp, left, right)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                write_file(&output, &tape.to_json())
            }
            CompileCommand::Formula { expr, output } => {
                let formula =
                    parse_formula(&expr).map_err(|e| CliError::Validation(e.to_string()))?;
                let tape =
                    compile_formula(&formula).map_err(|e| CliError::Validation(e.to_string()))?;
                write_file(&output, &tape.to_json())
            }
            CompileCommand::Indicator { file, bits, output } => {
                let msp = load_span_program(&file)?;
                let assignment = parse_assignment(&bits)?;
                let tape = compile_theorem1_indicator(&msp, &assignment)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                write_file(&output, &tape.to_json())
            }
            CompileCommand::Gh {
                function,
                x,
                y,
                output,
            } => {
                let f = GardenHoseFunction::parse(&function).ok_or_else(|| {
                    CliError::Usage(format!("unknown garden-hose function {function:?}"))
                })?;
                let tape = compile_garden_hose(f, parse_bit(&x)?, parse_bit(&y)?);
                write_file(&output, &tape.to_json())
            }
        },
        Command::Tape { command } => match command {
            TapeCommand::Eval {
                file,
                x,
                y,
                evaluator,
                p,
            } => tape_eval(&file, &x, &y, &evaluator, p),
            TapeCommand::Cost { file, x, y } => tape_cost(&file, x.as_deref(), y.as_deref()),
        },
        Command::Qsim { command } => match command {
            QsimCommand::Run { file, x, y } => {
                let tree = load_tree(&file)?;
                let x = parse_bits(&x)?;
                let y = parse_bits(&y)?;
                let report = run_quantum_tape(&tree, &x, &y, &SimConfig::default())?;
                println!(
                    "{}",
                    report_json(
                        &bits_string(&x),
                        &bits_string(&y),
                        report.owner,
                        report.success_prob,
                        report.wrong_side_trace_distance,
                        report.epr_pairs_used
                    )
                );
                Ok(())
            }
            QsimCommand::Sweep { file } => qsim_sweep(&file),
        },
        Command::Bench { command } => match command {
            BenchCommand::Library => bench_library(),
        },
    }
}

// ---------------------------------------------------------------------------
// sp
// ---------------------------------------------------------------------------

fn sp_eval(file: &str, input: &str) -> Result<(), CliError> {
    let sp = load_span_program(file)?;
    let z = parse_bits(input)?;
    let bit = sp
        .evaluate(&z)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!("{}", bit as u8);
    Ok(())
}

fn sp_table(file: &str) -> Result<(), CliError> {
    let sp = load_span_program(file)?;
    let n = sp.num_inputs();
    if n > 20 {
        return Err(CliError::Validation(format!(
            "{n} inputs exceed the table cap of 20"
        )));
    }
    for idx in 0..(1u32 << n) {
        // Lexicographic order of the printed string, input 1 leftmost.
        let z: Vec<bool> = (0..n).map(|k| idx >> (n - 1 - k) & 1 == 1).collect();
        let bit = sp
            .evaluate(&z)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        println!("{} {}", bits_string(&z), bit as u8);
    }
    Ok(())
}

fn sp_decompose(file: &str, output: &str) -> Result<(), CliError> {
    let sp = load_span_program(file)?;
    let result = sp
        .decompose()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let envelope = format!(
        "{{\n  \"msp\": {},\n  \"g\": {{\"m\": {}, \"description\": {}}},\n  \"original_size\": {},\n  \"msp_size\": {}\n}}\n",
        indent_json(&result.msp.to_json(), 2),
        result.g.m,
        serde_json::to_string(&result.g.describe()).expect("string"),
        result.original_size,
        result.msp_size,
    );
    write_file(output, &envelope)?;
    println!(
        "size {} -> msp size {}",
        result.original_size, result.msp_size
    );
    println!("g: {}", result.g.describe());
    Ok(())
}

fn indent_json(text: &str, spaces: usize) -> String {
    let pad = " ".repeat(spaces);
    text.lines().collect::<Vec<_>>().join(&format!("\n{pad}"))
}

// ---------------------------------------------------------------------------
// tape
// ---------------------------------------------------------------------------

fn tape_eval(file: &str, x: &str, y: &str, evaluator: &str, p: u64) -> Result<(), CliError> {
    let tree = load_tree(file)?;
    let x = parse_bits(x)?;
    let y = parse_bits(y)?;
    match evaluator {
        "getowner" => {
            let report = get_owner(&tree, &x, &y)?;
            println!("{}", report.owner.bit() as u8);
            println!("field_ops={} budget={}", report.field_ops, report.budget);
        }
        "modp" => {
            let side = eval_modp(&tree, &x, &y, p)?;
            println!("{}", side.bit() as u8);
            println!("p={p}");
        }
        "depthfirst" => {
            let report = eval_depth_first(&tree, &x, &y)?;
            println!("{}", report.owner.bit() as u8);
            println!(
                "peak_overrides={} prunes={}",
                report.peak_overrides, report.prunes
            );
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown evaluator {other:?} (expected getowner, modp or depthfirst)"
            )));
        }
    }
    Ok(())
}

fn tape_cost(file: &str, x: Option<&str>, y: Option<&str>) -> Result<(), CliError> {
    let tree = load_tree(file)?;
    let cost = match (x, y) {
        (Some(x), Some(y)) => {
            let x = parse_bits(x)?;
            let y = parse_bits(y)?;
            tree.entanglement_cost(&x, &y)
                .map_err(|e| CliError::Validation(e.to_string()))?
        }
        (None, None) => tree.entanglement_cost_static(),
        _ => {
            return Err(CliError::Usage(
                "provide both --x and --y, or neither".to_string(),
            ));
        }
    };
    println!("E={} H={} H~={}", cost, tree.size_h(), tree.weighted_size());
    Ok(())
}

// ---------------------------------------------------------------------------
// qsim
// ---------------------------------------------------------------------------

fn qsim_sweep(file: &str) -> Result<(), CliError> {
    let tree = load_tree(file)?;
    let left = tree.tape().left_bits;
    let right = tree.tape().right_bits;
    for xi in 0..(1u32 << left) {
        for yi in 0..(1u32 << right) {
            let x: Vec<bool> = (0..left).map(|k| xi >> (left - 1 - k) & 1 == 1).collect();
            let y: Vec<bool> = (0..right).map(|k| yi >> (right - 1 - k) & 1 == 1).collect();
            let report = run_quantum_tape(&tree, &x, &y, &SimConfig::default())?;
            println!(
                "{}",
                report_json(
                    &bits_string(&x),
                    &bits_string(&y),
                    report.owner,
                    report.success_prob,
                    report.wrong_side_trace_distance,
                    report.epr_pairs_used
                )
            );
        }
    }
    Ok(())
}

fn report_json(
    x: &str,
    y: &str,
    owner: u8,
    success_prob: f64,
    trace_distance: f64,
    pairs: u64,
) -> String {
    format!(
        "{{\"x\": \"{x}\", \"y\": \"{y}\", \"owner\": {owner}, \"success_prob\": {success_prob:.6}, \"wrong_side_trace_distance\": {trace_distance:.6}, \"epr_pairs_used\": {pairs}}}"
    )
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn bench_library() -> Result<(), CliError> {
    println!(
        "{:<9}{:>13}{:>10}{:>9}{:>13}{:>11}{:>7}",
        "function", "formula_size", "span_size", "msp_size", "E_theorem2", "E_formula", "E_gh"
    );
    for f in LibraryFunction::ALL {
        let sp = coderoute::library_program(f);
        let formula_text = match f {
            LibraryFunction::And => "AND(x1,y1)",
            LibraryFunction::Or => "OR(x1,y1)",
            LibraryFunction::Xor => "OR(AND(x1,NOT(y1)),AND(NOT(x1),y1))",
            LibraryFunction::Maj3 => "OR(AND(x1,x2),OR(AND(x1,y1),AND(x2,y1)))",
            LibraryFunction::Eq2 => "OR(AND(x1,y1),AND(NOT(x1),NOT(y1)))",
        };
        let formula = parse_formula(formula_text).expect("built-in formula");
        let formula_tape =
            compile_formula(&formula).map_err(|e| CliError::Validation(e.to_string()))?;
        let n = sp.num_inputs();
        let alpha = n / 2 + n % 2;
        let t2_tape = compile_theorem2(&sp, alpha, n - alpha)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let msp_size = sp.size() + 1;
        let gh = match f {
            LibraryFunction::And => garden_hose_resource_pairs(GardenHoseFunction::And).to_string(),
            LibraryFunction::Or => garden_hose_resource_pairs(GardenHoseFunction::Or).to_string(),
            _ => "-".to_string(),
        };
        let t2_cost = t2_tape
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?
            .entanglement_cost_static();
        let formula_cost = formula_tape
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?
            .entanglement_cost_static();
        println!(
            "{:<9}{:>13}{:>10}{:>9}{:>13}{:>11}{:>7}",
            f.name(),
            formula.size(),
            sp.size(),
            msp_size,
            t2_cost,
            formula_cost,
            gh
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))
}

fn write_file(path: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {path}: {e}")))
}

fn load_span_program(path: &str) -> Result<SpanProgram, CliError> {
    let text = read_file(path)?;
    // Accept either a bare span program or the decomposition envelope
    // written by `sp decompose`.
    let sp = if let Some(msp) = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("msp").cloned())
    {
        SpanProgram::from_json(&msp.to_string())
    } else {
        SpanProgram::from_json(&text)
    }
    .map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(note) = sp.width_note() {
        eprintln!("warning: {note}");
    }
    Ok(sp)
}

fn load_tree(path: &str) -> Result<ProtocolTree, CliError> {
    let tape = ProtocolTape::from_json(&read_file(path)?)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    tape.validate()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn parse_bits(text: &str) -> Result<Vec<bool>, CliError> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::Usage(format!(
                "invalid bit {other:?} in {text:?}"
            ))),
        })
        .collect()
}

fn parse_bit(text: &str) -> Result<bool, CliError> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::Usage(format!("expected 0 or 1, got {other:?}"))),
    }
}

fn bits_string(bits: &[bool]) -> String {
    let mut s = String::with_capacity(bits.len());
    for &b in bits {
        let _ = write!(s, "{}", b as u8);
    }
    s
}

/// One comma-separated token per program input: `L3`, `R1`, `~L2`, `~R4`.
fn parse_assignment(text: &str) -> Result<Vec<BitRef>, CliError> {
    text.split(',')
        .map(|token| {
            let token = token.trim();
            let (negated, rest) = match token.strip_prefix('~') {
                Some(rest) => (true, rest),
                None => (false, token),
            };
            let side = match rest.chars().next() {
                Some('L') | Some('l') => Side::Left,
                Some('R') | Some('r') => Side::Right,
                _ => {
                    return Err(CliError::Usage(format!(
                        "bad assignment token {token:?}: expected like L1, R2 or ~L3"
                    )));
                }
            };
            let index: usize = rest[1..]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad index in assignment token {token:?}")))?;
            if index == 0 {
                return Err(CliError::Usage("assignment indices are 1-based".into()));
            }
            Ok(BitRef {
                side,
                index,
                negated,
            })
        })
        .collect()
}
