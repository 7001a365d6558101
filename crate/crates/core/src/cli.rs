//! The `opdiag` command line.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 mathematically
//! infeasible (no diagonal, not semisimple), 3 internal bound violation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::MatrixAlgebra;
use crate::certify::{build_certificate, verify_certificate};
use crate::cohomology::{h1_dimension, kernel_bimodule};
use crate::config::ToleranceConfig;
use crate::diagonal::{is_diagonal, solve_diagonal, TensorElement};
use crate::error::Error;
use crate::io::{self, AlgebraFile, BimoduleFile, CertificateFile, TermJson};
use crate::norms::{haagerup_lower, haagerup_upper, projective_upper};
use crate::wedderburn::decompose;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "opdiag", version, about = "Diagonals, Wedderburn splitting, H¹ and tensor norms for matrix algebras")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Residual threshold for invariant checks (overrides the config file).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the machine-readable report to stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output file (diagonal tensor or certificate).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// Haagerup norm bracket.
    H,
    /// Projective norm upper bound.
    Proj,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a diagonal and write it as a tensor file.
    Diagonal { algebra: PathBuf },
    /// Block sizes and signature of the Wedderburn decomposition.
    Decompose { algebra: PathBuf },
    /// Dimension of H¹ with coefficients in a bimodule (default: kernel of multiplication).
    H1 {
        algebra: PathBuf,
        #[arg(long)]
        bimodule: Option<PathBuf>,
    },
    /// Norm estimates for a tensor file.
    Norm {
        tensor: PathBuf,
        #[arg(long, value_enum, default_value = "h")]
        which: Which,
    },
    /// Build a spanning certificate, or check one with `--verify`.
    Certify {
        algebra: PathBuf,
        /// Perturb the functionals inside the allowed slack.
        #[arg(long)]
        fuzz: bool,
        /// Certificate file to verify instead of building one.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Diagonal { .. } => "diagonal",
            Command::Decompose { .. } => "decompose",
            Command::H1 { .. } => "h1",
            Command::Norm { .. } => "norm",
            Command::Certify { .. } => "certify",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

/// Machine-readable report. Wall time is printed to stderr only, so identical
/// inputs and seeds give identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Value>,
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Failure>,
    pub config: ToleranceConfig,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. }
        | Error::NotInner { .. }
        | Error::NoNonScalarCommutant
        | Error::WitnessSolveFailed { .. }
        | Error::BurnsideCheckFailed { .. } => EXIT_INFEASIBLE,
        Error::BoundViolated { .. }
        | Error::DiagonalInvalid { .. }
        | Error::CommutationCheckFailed { .. }
        | Error::NotInvariant { .. }
        | Error::DichotomyViolation { .. }
        | Error::RecursionDepthExceeded(_)
        | Error::OptimizerDiverged
        | Error::WitnessNotInKernel { .. }
        | Error::Backend(_) => EXIT_BOUND,
        _ => EXIT_INPUT,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_INFEASIBLE => "infeasible",
        EXIT_BOUND => "bound_violation",
        _ => "input",
    }
}

struct Run {
    cfg: ToleranceConfig,
    inputs: Vec<InputDigest>,
    residuals: Vec<Residual>,
}

/// Either a finished outcome or an error with the exit code it maps to.
type Step = std::result::Result<(Value, i32), (Error, i32)>;

impl Run {
    fn read<T: for<'de> serde::Deserialize<'de>>(&mut self, path: &Path) -> crate::Result<T> {
        let (value, sha256) = io::read_json(path)?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256 });
        Ok(value)
    }

    fn algebra(&mut self, path: &Path) -> crate::Result<MatrixAlgebra> {
        let file: AlgebraFile = self.read(path)?;
        file.build(&self.cfg)
    }

    fn residual(&mut self, name: &str, value: f64) {
        self.residuals.push(Residual { name: name.to_string(), value });
    }
}

fn default_out(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    input.with_file_name(format!("{stem}.{suffix}.json"))
}

fn fail(e: Error) -> (Error, i32) {
    let code = exit_code(&e);
    (e, code)
}

fn cmd_diagonal(run: &mut Run, algebra: &Path, out: Option<&Path>) -> Step {
    let alg = run.algebra(algebra).map_err(|e| (e, EXIT_INPUT))?;
    let u = match solve_diagonal(&alg, &run.cfg) {
        Ok(u) => u,
        Err(e) => {
            if let Error::Infeasible { residual } = e {
                run.residual("least_squares", residual);
            }
            return Err(fail(e));
        }
    };
    let rep = is_diagonal(&alg, &u, &run.cfg).map_err(fail)?;
    run.residual("unit", rep.unit_residual);
    run.residual("commutation", rep.commutation_residual);
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| default_out(algebra, "diagonal"));
    io::write_json(&path, &io::tensor_to_json(&u)).map_err(|e| (e, EXIT_INPUT))?;
    Ok((
        json!({
            "algebra_dim": alg.dim(),
            "terms": u.len(),
            "verdict": rep.verdict,
            "tensor_file": path.display().to_string(),
        }),
        EXIT_OK,
    ))
}

fn cmd_decompose(run: &mut Run, algebra: &Path) -> Step {
    let alg = run.algebra(algebra).map_err(|e| (e, EXIT_INPUT))?;
    let u = solve_diagonal(&alg, &run.cfg).map_err(|e| {
        if let Error::Infeasible { residual } = e {
            run.residual("least_squares", residual);
        }
        fail(e)
    })?;
    let r = decompose(&alg, &u, &run.cfg).map_err(fail)?;
    for (i, v) in r.residuals.off_block.iter().enumerate() {
        run.residual(&format!("off_block[{i}]"), *v);
    }
    for (i, v) in r.residuals.split_commutation.iter().enumerate() {
        run.residual(&format!("split_commutation[{i}]"), *v);
    }
    for (i, v) in r.residuals.split_witness.iter().enumerate() {
        run.residual(&format!("split_witness[{i}]"), *v);
    }
    let mut signature = r.signature.clone();
    signature.sort_unstable_by(|a, b| b.cmp(a));
    Ok((
        json!({
            "algebra_dim": alg.dim(),
            "block_sizes": r.block_sizes,
            "signature": signature,
            "block_dims": r.residuals.block_dims,
            "conjugator_condition": r.residuals.conjugator_condition,
        }),
        EXIT_OK,
    ))
}

fn cmd_h1(run: &mut Run, algebra: &Path, bimodule: Option<&Path>) -> Step {
    let alg = run.algebra(algebra).map_err(|e| (e, EXIT_INPUT))?;
    let (module, source) = match bimodule {
        Some(path) => {
            let file: BimoduleFile = run.read(path).map_err(|e| (e, EXIT_INPUT))?;
            (file.build(&alg, &run.cfg).map_err(|e| (e, EXIT_INPUT))?, path.display().to_string())
        }
        None => (kernel_bimodule(&alg, &run.cfg).map_err(fail)?.bimodule, "kernel".to_string()),
    };
    let h1 = h1_dimension(&alg, &module, &run.cfg).map_err(fail)?;
    Ok((
        json!({
            "algebra_dim": alg.dim(),
            "bimodule": source,
            "bimodule_dim": module.dim(),
            "h1_dimension": h1,
        }),
        EXIT_OK,
    ))
}

fn cmd_norm(run: &mut Run, tensor: &Path, which: Which) -> Step {
    let terms: Vec<TermJson> = run.read(tensor).map_err(|e| (e, EXIT_INPUT))?;
    let u: TensorElement = io::tensor_from_json(&terms).map_err(|e| (e, EXIT_INPUT))?;
    match which {
        Which::H => match haagerup_upper(&u, &run.cfg) {
            Ok(est) => Ok((
                json!({
                    "which": "h",
                    "lower": est.lower,
                    "upper": est.upper,
                    "converged": est.converged,
                    "iterations": est.iterations,
                    "restarts": est.restarts,
                    "achieving_rep": io::tensor_to_json(&est.achieving_rep),
                }),
                EXIT_OK,
            )),
            Err(Error::OptimizerDiverged) => Ok((
                json!({
                    "which": "h",
                    "lower": haagerup_lower(&u),
                    "upper": crate::norms::haagerup_eval(&u),
                    "converged": false,
                }),
                EXIT_OK,
            )),
            Err(e) => Err(fail(e)),
        },
        Which::Proj => {
            let est = projective_upper(&u, &run.cfg).map_err(fail)?;
            Ok((
                json!({
                    "which": "proj",
                    "upper": est.upper,
                    "iterations": est.iterations,
                    "achieving_rep": io::tensor_to_json(&est.achieving_rep),
                }),
                EXIT_OK,
            ))
        }
    }
}

fn cmd_certify(run: &mut Run, algebra: &Path, verify: Option<&Path>, out: Option<&Path>) -> Step {
    let alg = run.algebra(algebra).map_err(|e| (e, EXIT_INPUT))?;
    if let Some(path) = verify {
        let file: CertificateFile = run.read(path).map_err(|e| (e, EXIT_INPUT))?;
        let cert = file.to_certificate().map_err(|e| (e, EXIT_INPUT))?;
        let report = verify_certificate(&alg, &cert.diagonal, &cert, &run.cfg);
        for c in &report.checks {
            run.residual(c.name, c.value);
        }
        let code = if report.pass { EXIT_OK } else { EXIT_BOUND };
        return Ok((json!({ "verified": report.pass, "checks": report.checks }), code));
    }
    let u = solve_diagonal(&alg, &run.cfg).map_err(|e| {
        if let Error::Infeasible { residual } = e {
            run.residual("least_squares", residual);
        }
        fail(e)
    })?;
    let cert = build_certificate(&alg, &u, &run.cfg).map_err(|e| {
        if let Error::BoundViolated { beta } = e {
            run.residual("beta", beta);
        }
        fail(e)
    })?;
    run.residual("beta", cert.beta);
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| default_out(algebra, "certificate"));
    io::write_json(&path, &CertificateFile::from_certificate(&cert)).map_err(|e| (e, EXIT_INPUT))?;
    let code = if cert.span_rank == alg.dim() { EXIT_OK } else { EXIT_BOUND };
    Ok((
        json!({
            "algebra_dim": alg.dim(),
            "m": cert.m,
            "n_terms": cert.n_terms,
            "k": cert.k,
            "epsilon": cert.epsilon,
            "beta": cert.beta,
            "c_norm": crate::linalg::op_norm(&cert.c),
            "span_rank": cert.span_rank,
            "certificate_file": path.display().to_string(),
        }),
        code,
    ))
}

fn config(common: &Common, fuzz: bool) -> crate::Result<ToleranceConfig> {
    let mut cfg = ToleranceConfig::from_env()?;
    if let Some(t) = common.tol {
        cfg.verify_tol = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.fuzz |= fuzz;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and returns its report and exit code.
pub fn execute(cli: &Cli) -> (RunReport, i32) {
    let fuzz = matches!(cli.command, Command::Certify { fuzz: true, .. });
    let name = cli.command.name();
    let cfg = match config(&cli.common, fuzz) {
        Ok(cfg) => cfg,
        Err(e) => {
            let report = RunReport {
                command: name,
                inputs: Vec::new(),
                outcome: None,
                residuals: Vec::new(),
                error: Some(Failure { kind: "input", message: e.to_string() }),
                config: ToleranceConfig::default(),
            };
            return (report, EXIT_INPUT);
        }
    };
    let mut run = Run { cfg, inputs: Vec::new(), residuals: Vec::new() };
    let out = cli.common.out.as_deref();
    let step = match &cli.command {
        Command::Diagonal { algebra } => cmd_diagonal(&mut run, algebra, out),
        Command::Decompose { algebra } => cmd_decompose(&mut run, algebra),
        Command::H1 { algebra, bimodule } => cmd_h1(&mut run, algebra, bimodule.as_deref()),
        Command::Norm { tensor, which } => cmd_norm(&mut run, tensor, *which),
        Command::Certify { algebra, verify, .. } => cmd_certify(&mut run, algebra, verify.as_deref(), out),
    };
    let (outcome, error, code) = match step {
        Ok((v, EXIT_OK)) => (Some(v), None, EXIT_OK),
        Ok((v, code)) => (
            None,
            Some(Failure { kind: "bound_violation", message: format!("checks failed: {v}") }),
            code,
        ),
        Err((e, code)) => {
            let kind = if code == EXIT_INPUT { "input" } else { error_kind(&e) };
            (None, Some(Failure { kind, message: e.to_string() }), code)
        }
    };
    let report = RunReport {
        command: name,
        inputs: run.inputs,
        outcome,
        residuals: run.residuals,
        error,
        config: run.cfg,
    };
    (report, code)
}

fn print_human(report: &RunReport) {
    println!("command: {}", report.command);
    for i in &report.inputs {
        println!("input:   {} (sha256 {})", i.path, &i.sha256[..16]);
    }
    if let Some(Value::Object(map)) = &report.outcome {
        for (k, v) in map {
            if k == "achieving_rep" || k == "restarts" || k == "checks" {
                continue;
            }
            println!("{k}: {v}");
        }
    }
    for r in &report.residuals {
        println!("residual {}: {:.3e}", r.name, r.value);
    }
    if let Some(f) = &report.error {
        println!("error ({}): {}", f.kind, f.message);
    }
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let (report, code) = execute(&cli);
    if cli.common.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_human(&report);
    }
    eprintln!("wall_time: {:.3}s", start.elapsed().as_secs_f64());
    code
}
