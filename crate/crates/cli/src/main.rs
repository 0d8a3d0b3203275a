use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use stabform::circuit::{parse_circuit, EncodingSpec, StabCircuit};
use stabform::codedeform::{common_symplectic_basis, repetition_surgery, StabilizerGroup};
use stabform::f2linalg::BitVec;
use stabform::genform::general_form;
use stabform::logical::{logical_action, verify_logical, LogicalActionResult};
use stabform::sim::{simulate_complete, simulate_specific};
use stabform::verify::{compare_circuits, ComparisonVerdict};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "stabform", version, about = "Simulate, compare and verify stabilizer circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Seed for randomized choices.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report timings on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a circuit for one outcome path or for all of them.
    Simulate {
        circuit: PathBuf,
        /// Parametrize every outcome path.
        #[arg(long)]
        complete: bool,
        /// Values for random outcomes, one bit per outcome; drawn from the seed if absent.
        #[arg(long)]
        outcomes: Option<String>,
    },
    /// Equivalent general form circuit and outcome map.
    GeneralForm { circuit: PathBuf },
    /// Decide whether two circuits implement the same instrument.
    Compare {
        c1: Option<PathBuf>,
        c2: Option<PathBuf>,
        /// Write the correction for the first circuit here when one exists.
        #[arg(long)]
        emit_correction: Option<PathBuf>,
        /// File with one pair of circuit paths per line.
        #[arg(long, conflicts_with_all = ["c1", "c2", "emit_correction"])]
        batch: Option<PathBuf>,
    },
    /// Logical action of a circuit between two codes.
    LogicalAction {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        in_code: PathBuf,
        #[arg(long)]
        out_code: PathBuf,
    },
    /// Check a circuit against a reference logical circuit.
    VerifyLogical {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        in_code: PathBuf,
        #[arg(long)]
        out_code: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Common symplectic basis of two stabilizer groups.
    SymplecticBasis {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        m: PathBuf,
    },
    /// Repetition code lattice surgery example and its verification.
    SurgeryDemo {
        #[arg(long, default_value_t = 3)]
        d: usize,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Analysis(String),
}

fn input_err(path: &Path, msg: impl ToString) -> CliError {
    CliError::Input { path: path.display().to_string(), msg: msg.to_string() }
}

/// A finished command: the JSON report, its text rendering, and whether the verdict is positive.
struct Report {
    json: Value,
    text: String,
    ok: bool,
}

impl Report {
    fn positive(json: Value, text: String) -> Self {
        Report { json, text, ok: true }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_err(path, e))
}

fn load_circuit(path: &Path) -> Result<StabCircuit, CliError> {
    let c = parse_circuit(&read(path)?).map_err(|e| input_err(path, e))?;
    c.validate().map_err(|e| input_err(path, e))?;
    Ok(c)
}

fn load_code(path: &Path) -> Result<EncodingSpec, CliError> {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| input_err(path, e))?;
    EncodingSpec::from_json(&v).map_err(|e| input_err(path, e))
}

fn load_group(path: &Path, n: usize) -> Result<StabilizerGroup, CliError> {
    StabilizerGroup::parse(&read(path)?, n).map_err(|e| input_err(path, e))
}

fn analysis(e: impl ToString) -> CliError {
    CliError::Analysis(e.to_string())
}

fn simulate(path: &Path, complete: bool, outcomes: Option<&str>, seed: u64) -> Result<Report, CliError> {
    let c = load_circuit(path)?;
    if complete {
        let r = simulate_complete(&c).map_err(analysis)?;
        let text = format!("{} outcomes, {} random\nM:\n{}v0: {}\n", c.n_outcomes(), r.n_r(), r.m, r.v0);
        return Ok(Report::positive(r.to_json(), text));
    }
    let v_tilde = match outcomes {
        Some(bits) => {
            let v = BitVec::parse(bits).map_err(|e| CliError::Usage(format!("--outcomes: {e}")))?;
            if v.len() != c.n_outcomes() {
                return Err(CliError::Usage(format!("--outcomes needs {} bits, got {}", c.n_outcomes(), v.len())));
            }
            v
        }
        None => {
            let mut g = ChaCha8Rng::seed_from_u64(seed);
            BitVec::from_bools(&(0..c.n_outcomes()).map(|_| g.gen()).collect::<Vec<bool>>())
        }
    };
    let r = simulate_specific(&c, &v_tilde).map_err(analysis)?;
    let json = json!({
        "p": r.p.iter().map(|p| p.value()).collect::<Vec<_>>(),
        "Co": r.co.to_json(),
        "v": r.v.to_string(),
    });
    Ok(Report::positive(json, format!("outcomes: {}\n", r.v)))
}

fn general_form_cmd(path: &Path) -> Result<Report, CliError> {
    let c = load_circuit(path)?;
    let (g, map) = general_form(&c).map_err(analysis)?;
    let text = format!("k = {}, n_r = {}, n_m = {}\n{}", g.k, g.n_r, g.n_m(), g.to_circuit());
    Ok(Report::positive(g.to_json(&map), text))
}

fn verdict_text(v: &ComparisonVerdict) -> String {
    match v {
        ComparisonVerdict::Equivalent(_) => "equivalent\n".into(),
        ComparisonVerdict::NotEquivalent { stage, correction, reason } => {
            let mut s = format!("not equivalent at stage {stage}\n");
            match (correction, reason) {
                (Some(c), _) => s.push_str(&format!("correction:\n{}", c.to_stab())),
                (None, Some(r)) => s.push_str(&format!("no correction: {r}\n")),
                (None, None) => {}
            }
            s
        }
    }
}

fn compare(c1: &Path, c2: &Path, emit: Option<&Path>) -> Result<Report, CliError> {
    let (a, b) = (load_circuit(c1)?, load_circuit(c2)?);
    let v = compare_circuits(&a, &b).map_err(analysis)?;
    if let (Some(out), Some(corr)) = (emit, v.correction()) {
        fs::write(out, corr.to_stab()).map_err(|e| input_err(out, e))?;
    }
    Ok(Report { json: v.to_json(), text: verdict_text(&v), ok: v.is_equivalent() })
}

fn compare_batch(manifest: &Path) -> Result<Report, CliError> {
    let text = read(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(input_err(manifest, format!("line {}: expected two circuit paths", i + 1)));
        }
        pairs.push((base.join(parts[0]), base.join(parts[1])));
    }
    let results: Vec<Result<Report, CliError>> = pairs.par_iter().map(|(a, b)| compare(a, b, None)).collect();
    let mut entries = Vec::new();
    let mut out = String::new();
    let mut ok = true;
    for ((a, b), r) in pairs.iter().zip(results) {
        let (a, b) = (a.display().to_string(), b.display().to_string());
        let r = r?;
        ok &= r.ok;
        out.push_str(&format!("{a} {b}: {}", r.text));
        entries.push(json!({ "c1": a, "c2": b, "verdict": r.json }));
    }
    Ok(Report { json: Value::Array(entries), text: out, ok })
}

fn logical_action_cmd(circuit: &Path, in_code: &Path, out_code: &Path) -> Result<Report, CliError> {
    let c = load_circuit(circuit)?;
    let (a, b) = (load_code(in_code)?, load_code(out_code)?);
    let r = logical_action(&c, &a, &b).map_err(analysis)?;
    let text = match &r {
        LogicalActionResult::Logical(act) => {
            format!("logical\nk = {}, n_r = {}\n{}", act.gen.k, act.gen.n_r, act.gen.to_circuit())
        }
        LogicalActionResult::NotLogical { reason, correction } => {
            let fix = correction.as_ref().map(|c| format!("correction:\n{}", c.to_stab())).unwrap_or_default();
            format!("not logical: {reason}\n{fix}")
        }
    };
    Ok(Report { json: r.to_json(), text, ok: r.is_logical() })
}

fn verify_logical_cmd(circuit: &Path, in_code: &Path, out_code: &Path, reference: &Path) -> Result<Report, CliError> {
    let c = load_circuit(circuit)?;
    let (a, b) = (load_code(in_code)?, load_code(out_code)?);
    let r = load_circuit(reference)?;
    let v = verify_logical(&c, &a, &b, &r).map_err(analysis)?;
    let text = if v.is_true() { "verified\n".to_string() } else { format!("not verified\n{}\n", v.to_json()) };
    Ok(Report { json: v.to_json(), text, ok: v.is_true() })
}

fn symplectic_basis_cmd(s: &Path, m: &Path) -> Result<Report, CliError> {
    let qubits = |p: &Path| StabilizerGroup::qubits_in(&read(p)?).map_err(|e| input_err(p, e));
    let n = qubits(s)?.max(qubits(m)?);
    let (gs, gm) = (load_group(s, n)?, load_group(m, n)?);
    let b = common_symplectic_basis(&gs, &gm).map_err(analysis)?;
    let [d, cap, only_s, only_m, logical] = b.sizes();
    let text = format!("|Z_delta| = {d}, |Z_cap| = {cap}, |Z_S| = {only_s}, |Z_M| = {only_m}, |Z| = {logical}\n");
    Ok(Report::positive(b.to_json(), text))
}

fn surgery_demo(d: usize) -> Result<Report, CliError> {
    if d < 2 {
        return Err(CliError::Usage("--d must be at least 2".into()));
    }
    let inst = repetition_surgery(d).map_err(analysis)?;
    let v = verify_logical(&inst.circuit, &inst.s_code, &inst.s_code, &inst.reference).map_err(analysis)?;
    let json = json!({
        "d": d,
        "circuit": inst.circuit.to_string(),
        "s_code": inst.s_code.to_json(),
        "m_code": inst.m_code.to_json(),
        "basis": inst.basis.to_json(),
        "reference": inst.reference.to_string(),
        "xx_outcome": inst.xx_outcome,
        "verdict": v.to_json(),
    });
    let status = if v.is_true() { "verified" } else { "not verified" };
    let text =
        format!("d = {d}: {status}\nlogical XX outcome is o{}\nreference:\n{}", inst.xx_outcome + 1, inst.reference);
    Ok(Report { json, text, ok: v.is_true() })
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Simulate { circuit, complete, outcomes } => {
            simulate(circuit, *complete, outcomes.as_deref(), cli.seed)
        }
        Command::GeneralForm { circuit } => general_form_cmd(circuit),
        Command::Compare { batch: Some(manifest), .. } => compare_batch(manifest),
        Command::Compare { c1: Some(a), c2: Some(b), emit_correction, .. } => compare(a, b, emit_correction.as_deref()),
        Command::Compare { .. } => Err(CliError::Usage("compare needs two circuits or --batch".into())),
        Command::LogicalAction { circuit, in_code, out_code } => logical_action_cmd(circuit, in_code, out_code),
        Command::VerifyLogical { circuit, in_code, out_code, reference } => {
            verify_logical_cmd(circuit, in_code, out_code, reference)
        }
        Command::SymplecticBasis { s, m } => symplectic_basis_cmd(s, m),
        Command::SurgeryDemo { d } => surgery_demo(*d),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.verbose {
        eprintln!("done in {:.3}s", start.elapsed().as_secs_f64());
    }
    let body = match cli.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&report.json).expect("JSON values serialize")),
        Format::Text => report.text,
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = fs::write(path, body) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{body}"),
    }
    ExitCode::from(if report.ok { 0 } else { 1 })
}
