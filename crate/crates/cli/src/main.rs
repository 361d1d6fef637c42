//! `axdecomp`: axial vectors, operator factorizations and certificate checking from the
//! command line.
//!
//! Every subcommand reads one JSON document (a path, or `-` for stdin) and writes JSON to
//! stdout. Exit codes: 0 success, 1 verification failed, 2 parse or usage error,
//! 3 degenerate input, 4 precondition failed. Errors carry a JSON diagnostic on stderr.

mod codec;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use axdecomp::basis_axis::{associated_cone, axial_vector};
use axdecomp::decompose::{decompose_conformal, decompose_invertible, decompose_orthogonal};
use axdecomp::operators::{is_conformal, is_orthogonal, is_reflectional, is_rotational};
use axdecomp::verify::{check_decomposition, generate, Claim, Instance, Kind};
use axdecomp::{Basis, Error, Matrix, Space, Tolerance};
use clap::{Parser, Subcommand, ValueEnum};
use codec::{
    encode_basis, encode_decomposition, encode_matrix, encode_vector, Document, ParseError,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "axdecomp",
    version,
    about = "Axial vectors and planar factorizations of linear operators"
)]
struct Cli {
    /// Relative tolerance; the absolute floor and rank threshold scale with it.
    #[arg(long, global = true, env = "AXDECOMP_TOLERANCE")]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Axial vector, vertex angle and axis direction of a basis.
    Axis { input: PathBuf },
    /// Factor a matrix into planar, axonal and diagonal pieces.
    Decompose {
        #[arg(long, value_enum)]
        mode: Mode,
        input: PathBuf,
    },
    /// Check a decomposition certificate against its matrix.
    Verify {
        #[arg(long, value_enum)]
        claim: Mode,
        input: PathBuf,
    },
    /// Emit a seeded random instance document.
    Generate {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file holding a Gram matrix, bare or as a document's "gram" field.
        #[arg(long)]
        gram_file: Option<PathBuf>,
    },
    /// Evaluate the operator predicates on a matrix.
    Classify { input: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Invertible,
    Conformal,
    Orthogonal,
}

impl From<Mode> for Claim {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Invertible => Claim::Invertible,
            Mode::Conformal => Claim::Conformal,
            Mode::Orthogonal => Claim::Orthogonal,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum GenKind {
    Invertible,
    Orthogonal,
    Conformal,
    EquimodularBasis,
    AxonalWitness,
}

impl From<GenKind> for Kind {
    fn from(k: GenKind) -> Self {
        match k {
            GenKind::Invertible => Kind::Invertible,
            GenKind::Orthogonal => Kind::Orthogonal,
            GenKind::Conformal => Kind::Conformal,
            GenKind::EquimodularBasis => Kind::EquimodularBasis,
            GenKind::AxonalWitness => Kind::AxonalWitness,
        }
    }
}

/// A failed command and its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Degenerate(String),
    Precondition(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Degenerate(_) => 3,
            Failure::Precondition(_) => 4,
        }
    }

    fn diagnostic(&self) -> Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Degenerate(m) => ("degenerate_input", m),
            Failure::Precondition(m) => ("precondition", m),
        };
        json!({ "error": kind, "message": message, "exit_code": self.code() })
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DependentBasis { .. } | Error::Singular { .. } | Error::ZeroVector => {
                Failure::Degenerate(msg)
            }
            Error::DimensionMismatch { .. }
            | Error::EmptySpace
            | Error::NotSymmetric(_)
            | Error::NotPositiveDefinite(_)
            | Error::MalformedFactor(_) => Failure::Usage(msg),
            Error::Precondition(_)
            | Error::NotConformal
            | Error::NotOrthogonal
            | Error::InadmissibleAngle { .. }
            | Error::Breakdown(_) => Failure::Precondition(msg),
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let mut text = String::new();
    let res = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

fn tolerance(rel: Option<f64>) -> Result<Tolerance, Failure> {
    match rel {
        None => Ok(Tolerance::default()),
        Some(r) => Tolerance::from_rel(r).map_err(|e| Failure::Usage(format!("--tolerance: {e}"))),
    }
}

fn load(path: &PathBuf, tol: Tolerance) -> Result<(Document, Space), Failure> {
    let doc = Document::parse(&read_input(path)?)?;
    let space = doc
        .space(tol)
        .map_err(|e| Failure::Usage(format!("gram: {e}")))?;
    Ok((doc, space))
}

fn axis(path: &PathBuf, tol: Tolerance) -> Result<Value, Failure> {
    let (doc, space) = load(path, tol)?;
    let basis = Basis::new(&space, doc.require_basis()?.to_vec())?;
    let cert = axial_vector(&space, &basis)?;
    let cone = associated_cone(&space, &basis)?;
    Ok(json!({
        "axial": encode_vector(&cert.axial),
        "vertex_angle": cert.vertex_angle,
        "axis_dir": encode_vector(&cone.axis_dir),
    }))
}

fn decompose(path: &PathBuf, mode: Mode, tol: Tolerance) -> Result<Value, Failure> {
    let (doc, space) = load(path, tol)?;
    let t = doc.require_matrix()?;
    let d = match mode {
        Mode::Invertible => decompose_invertible(&space, t),
        Mode::Conformal => decompose_conformal(&space, t),
        Mode::Orthogonal => decompose_orthogonal(&space, t),
    }?;
    Ok(encode_decomposition(&d))
}

/// Returns the report and whether it passed.
fn verify(path: &PathBuf, claim: Mode, tol: Tolerance) -> Result<(Value, bool), Failure> {
    let (doc, space) = load(path, tol)?;
    let t = doc.require_matrix()?;
    let factors = doc.require_factors(&space)?;
    let d = axdecomp::Decomposition {
        factors,
        residual: f64::NAN,
    };
    let report = check_decomposition(&space, t, &d, claim.into());
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({ "invariant": v.invariant, "measured": finite_or_null(v.measured), "threshold": v.threshold }))
        .collect();
    Ok((
        json!({
            "claim": Claim::from(claim).to_string(),
            "passed": report.passed,
            "residual": finite_or_null(report.residual),
            "violations": violations,
        }),
        report.passed,
    ))
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn read_gram(path: &PathBuf, dim: usize) -> Result<Matrix, Failure> {
    let value: Value = serde_json::from_str(&read_input(path)?)
        .map_err(|e| Failure::Usage(format!("gram file: invalid JSON: {e}")))?;
    let gram = value.get("gram").unwrap_or(&value);
    Ok(codec::square_matrix(gram, dim, "gram")?)
}

fn generate_doc(
    kind: GenKind,
    dim: usize,
    seed: u64,
    gram_file: Option<&PathBuf>,
    tol: Tolerance,
) -> Result<Value, Failure> {
    if dim == 0 {
        return Err(Failure::Usage("--dim must be at least 1".into()));
    }
    let gram = gram_file.map(|p| read_gram(p, dim)).transpose()?;
    let space = Space::with_tolerance(gram.clone().unwrap_or_else(|| Matrix::identity(dim)), tol)
        .map_err(|e| Failure::Usage(format!("gram: {e}")))?;
    let mut doc = serde_json::Map::new();
    doc.insert("dim".into(), json!(dim));
    if let Some(g) = &gram {
        doc.insert("gram".into(), encode_matrix(g));
    }
    match generate(&space, kind.into(), seed)? {
        Instance::Invertible(m)
        | Instance::Orthogonal(m)
        | Instance::Conformal { matrix: m, .. } => {
            doc.insert("matrix".into(), encode_matrix(&m));
        }
        Instance::EquimodularBasis(b) => {
            doc.insert("basis".into(), encode_basis(&b));
        }
        Instance::AxonalWitness { matrix, basis } => {
            doc.insert("matrix".into(), encode_matrix(&matrix));
            doc.insert("basis".into(), encode_basis(&basis));
        }
    }
    Ok(Value::Object(doc))
}

fn classify(path: &PathBuf, tol: Tolerance) -> Result<Value, Failure> {
    let (doc, space) = load(path, tol)?;
    let m = doc.require_matrix()?;
    let det = space.det(m).ok();
    let invertible = space.inverse(m).is_ok();
    let conformal = match is_conformal(&space, m) {
        Some(c) => json!({ "lambda": c.lambda }),
        None => json!(false),
    };
    Ok(json!({
        "invertible": invertible,
        "determinant": det,
        "orthogonal": is_orthogonal(&space, m),
        "rotational": is_rotational(&space, m),
        "reflectional": is_reflectional(&space, m),
        "conformal": conformal,
    }))
}

fn emit(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let tol = tolerance(cli.tolerance)?;
    let out = match &cli.command {
        Command::Axis { input } => axis(input, tol)?,
        Command::Decompose { mode, input } => decompose(input, *mode, tol)?,
        Command::Verify { claim, input } => {
            let (report, passed) = verify(input, *claim, tol)?;
            emit(&report);
            return Ok(if passed { 0 } else { 1 });
        }
        Command::Generate {
            kind,
            dim,
            seed,
            gram_file,
        } => generate_doc(*kind, *dim, *seed, gram_file.as_ref(), tol)?,
        Command::Classify { input } => classify(input, tol)?,
    };
    emit(&out);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 2 } else { 0 };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.diagnostic());
            ExitCode::from(f.code())
        }
    }
}
