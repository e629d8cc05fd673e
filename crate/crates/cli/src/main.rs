mod angle;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spheredyn::certificate::{verify, Witness, DEFAULT_SEED};
use spheredyn::circle::{fixed_points_numeric, involution_check, of_minimal_period, periodic_power, CircleMap, Stability};
use spheredyn::classify::{classify, classify_product, distality_verdict, expansivity_verdict, ClassifyOptions};
use spheredyn::product::{
    lift_witness, AnySystem, DistalityVerdict, ExpansivityVerdict, ProductDescription, ProductSphereSystem,
};
use spheredyn::sphere::SystemDescription;
use spheredyn::{AffineSphereSystem, Error, Vector};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  invalid input (malformed JSON, bad point, unwritable path, failed verification)
  2  homeomorphism condition ‖T⁻¹a‖ < 1 violated where it is required
  3  search exhausted: no witness found, verdict unknown";

#[derive(Parser)]
#[command(name = "spheredyn", version, about = "Dynamics of sphere maps x ↦ (a + Tx)/‖a + Tx‖", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Nondistal,
    Nonexpansive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Action {
    Classify,
    Apply,
    Certify,
}

#[derive(Subcommand)]
enum Command {
    /// Report certification, periodic points and distality/expansivity evidence.
    #[command(after_help = EXIT_CODES)]
    Classify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fail with exit code 2 unless the system is certified.
        #[arg(long)]
        require_homeo: bool,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 500)]
        horizon: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Count fixed and period-2 points of rotations over a (θ, α) grid.
    #[command(after_help = EXIT_CODES)]
    Sweep {
        /// start:stop:step in radians; `pi` literals allowed.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long)]
        alpha: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Dump the orbit segment between 0 and n.
    #[command(after_help = EXIT_CODES)]
    Orbit {
        #[arg(short, long)]
        input: PathBuf,
        /// Comma-separated coordinates; normalized before use.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(short, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search for a witness and write it as JSON.
    #[command(after_help = EXIT_CODES)]
    Certify {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Steps checked in each direction (non-expansive) or forward (non-distal pairs).
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Non-distal mode: emit a converging pair instead of a periodic point.
        #[arg(long)]
        pair: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Assemble a product of systems and classify, apply or certify it.
    #[command(after_help = EXIT_CODES)]
    Product {
        /// System or product JSON files, one per -i, in factor order.
        #[arg(short, long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "classify")]
        action: Action,
        #[arg(long, value_enum, default_value = "nondistal")]
        mode: Mode,
        /// Apply: concatenated factor coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(short, default_value_t = 1, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 500)]
        horizon: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a witness and report the recomputed bounds.
    #[command(after_help = EXIT_CODES)]
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Homeo(String),
    Exhausted(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Homeo(_) => 2,
            Self::Exhausted(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::HomeoConditionViolated { .. } | Error::NotInvertible => Self::Homeo(e.to_string()),
            Error::SearchExhausted(_) | Error::WitnessNotFound(_) => Self::Exhausted(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(output: Option<&Path>, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    emit(output, &text)
}

fn load_system(path: &Path, require_homeo: bool) -> Outcome<AffineSphereSystem> {
    let desc: SystemDescription =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(AffineSphereSystem::from_description(&desc, require_homeo)?)
}

/// Factors from a mix of system and product files.
fn load_factors(paths: &[PathBuf]) -> Outcome<Vec<AffineSphereSystem>> {
    let mut out = Vec::new();
    for path in paths {
        let text = read(path)?;
        if let Ok(p) = serde_json::from_str::<ProductDescription>(&text) {
            out.extend(ProductSphereSystem::from_description(&p, false)?.factors().iter().cloned());
            continue;
        }
        let desc: SystemDescription =
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        out.push(AffineSphereSystem::from_description(&desc, false)?);
    }
    Ok(out)
}

fn fmt_row(index: i64, v: &Vector) -> String {
    let mut row = index.to_string();
    for c in v.iter() {
        row.push_str(&format!(",{c:.16e}"));
    }
    row
}

fn cmd_classify(input: &Path, output: Option<&Path>, require_homeo: bool, opts: ClassifyOptions) -> Outcome {
    let sys = load_system(input, require_homeo)?;
    let report = classify(&sys, &opts)?;
    emit_json(output, &report)
}

fn cmd_sweep(theta: &str, alpha: &str, output: Option<&Path>, svg_path: Option<&Path>) -> Outcome {
    let theta = angle::parse_axis(theta).map_err(Failure::Input)?;
    let alpha = angle::parse_axis(alpha).map_err(Failure::Input)?;
    let grid = spheredyn::sweep::sweep(theta, alpha)?;
    emit(output, &grid.to_csv())?;
    if let Some(p) = svg_path {
        fs::write(p, svg::phase_diagram(&grid)).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OrbitRow {
    index: i64,
    point: Vec<f64>,
}

fn cmd_orbit(input: &Path, point: &str, n: i64, format: Format, output: Option<&Path>) -> Outcome {
    let sys = load_system(input, false)?;
    let raw = Vector::from_vec(angle::parse_point(point).map_err(Failure::Input)?);
    if raw.len() != sys.dim() {
        return Err(Failure::Input(format!("point has {} coordinates, system has {}", raw.len(), sys.dim())));
    }
    let x = spheredyn::sphere::normalized(&raw).map_err(|e| Failure::Input(format!("bad point: {e}")))?;
    if n < 0 && !sys.is_certified() {
        return Err(Failure::Homeo(format!(
            "backward orbit needs ‖T⁻¹a‖ < 1, got {}",
            sys.inverse_offset_norm()
        )));
    }
    let seg = sys.orbit(&x, n.min(0), n.max(0))?;
    match format {
        Format::Csv => {
            let mut text = String::from("index");
            for i in 1..=sys.dim() {
                text.push_str(&format!(",x{i}"));
            }
            text.push('\n');
            for (k, p) in seg.indices().zip(&seg.points) {
                text.push_str(&fmt_row(k, p));
                text.push('\n');
            }
            emit(output, &text)
        }
        Format::Json => {
            let rows: Vec<OrbitRow> = seg
                .indices()
                .zip(&seg.points)
                .map(|(index, p)| OrbitRow { index, point: p.iter().copied().collect() })
                .collect();
            emit_json(output, &rows)
        }
    }
}

/// A periodic point of minimal period at most 4, attracting ones first.
fn periodic_point_witness(sys: &AffineSphereSystem) -> Outcome<Witness> {
    if involution_check(sys)?.is_involution {
        return Err(Failure::Exhausted("the map is an involution (distal)".into()));
    }
    if let Some(k) = periodic_power(&CircleMap::from_system(sys)?) {
        return Err(Failure::Exhausted(format!("the map has finite order {k} (distal)")));
    }
    let any = AnySystem::Single(sys.clone());
    for p in 1..=4u32 {
        let mut records = match fixed_points_numeric(sys, p) {
            Ok(r) => of_minimal_period(&r, p),
            Err(Error::IdenticallyPeriodic { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        records.sort_by_key(|r| r.stability != Stability::Attracting);
        if let Some(r) = records.first() {
            return Ok(Witness::periodic_point(&any, &Vector::from_column_slice(&r.point), p)?);
        }
    }
    Err(Failure::Exhausted("no periodic point of period at most 4".into()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    mode: Mode,
    input: &Path,
    delta: f64,
    horizon: Option<u64>,
    seed: u64,
    pair: bool,
    output: Option<&Path>,
) -> Outcome {
    let sys = load_system(input, true)?;
    let w = match mode {
        Mode::Nondistal if sys.dim() == 2 && !pair => periodic_point_witness(&sys)?,
        Mode::Nondistal => match distality_verdict(&sys, horizon.unwrap_or(200))? {
            DistalityVerdict::NonDistal(w) => w,
            DistalityVerdict::Distal(r) => return Err(Failure::Exhausted(format!("distal: {r}"))),
            DistalityVerdict::Unknown(r) => return Err(Failure::Exhausted(r)),
        },
        Mode::Nonexpansive => {
            let opts = ClassifyOptions { delta, horizon: horizon.unwrap_or(500), seed, ..Default::default() };
            match expansivity_verdict(&sys, &opts)? {
                ExpansivityVerdict::NonExpansive(w) => w,
                ExpansivityVerdict::Unknown(r) => return Err(Failure::Exhausted(r)),
            }
        }
    };
    emit(output, &(w.to_json() + "\n"))
}

#[derive(Serialize)]
struct ApplyReport {
    n: i64,
    point: Vec<f64>,
    components: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_product(
    inputs: &[PathBuf],
    action: Action,
    mode: Mode,
    point: Option<&str>,
    n: i64,
    opts: ClassifyOptions,
    output: Option<&Path>,
) -> Outcome {
    let p = ProductSphereSystem::assemble(load_factors(inputs)?)?;
    match action {
        Action::Classify => emit_json(output, &classify_product(&p, &opts)?),
        Action::Apply => {
            let raw = angle::parse_point(point.ok_or_else(|| Failure::Input("apply needs --point".into()))?)
                .map_err(Failure::Input)?;
            if raw.len() != p.total_dim() {
                return Err(Failure::Input(format!("point has {} coordinates, product has {}", raw.len(), p.total_dim())));
            }
            let parts = p.components(&Vector::from_vec(raw))?;
            let parts = parts
                .iter()
                .map(|c| spheredyn::sphere::normalized(c).map_err(|e| Failure::Input(format!("bad point: {e}"))))
                .collect::<Outcome<Vec<_>>>()?;
            if n < 0 && !p.is_certified() {
                return Err(Failure::Homeo("backward iteration needs every factor certified".into()));
            }
            let mut v = ProductSphereSystem::concat(&parts);
            for _ in 0..n.unsigned_abs() {
                v = if n >= 0 { p.step(&v)? } else { p.step_inverse(&v)? };
            }
            let components = p.components(&v)?.iter().map(|c| c.iter().copied().collect()).collect();
            emit_json(output, &ApplyReport { n, point: v.iter().copied().collect(), components })
        }
        Action::Certify => {
            if !p.is_certified() {
                return Err(Failure::Homeo("every factor must satisfy ‖T⁻¹a‖ < 1".into()));
            }
            for (k, f) in p.factors().iter().enumerate() {
                let w = match mode {
                    Mode::Nondistal => match distality_verdict(f, 200)? {
                        DistalityVerdict::NonDistal(w) => w,
                        _ => continue,
                    },
                    Mode::Nonexpansive => match expansivity_verdict(f, &opts)? {
                        ExpansivityVerdict::NonExpansive(w) => w,
                        ExpansivityVerdict::Unknown(_) => continue,
                    },
                };
                let lifted = if p.factors().len() == 1 { w } else { lift_witness(&p, k, &w)? };
                return emit(output, &(lifted.to_json() + "\n"));
            }
            Err(Failure::Exhausted("no factor yields a witness".into()))
        }
    }
}

fn cmd_verify(input: &Path, output: Option<&Path>) -> Outcome {
    let w = Witness::from_json(&read(input)?)?;
    let report = verify(&w)?;
    emit_json(output, &report)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Input("witness failed verification".into()))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Classify { input, output, require_homeo, delta, horizon, seed } => {
            let opts = ClassifyOptions { delta, horizon, seed, ..Default::default() };
            cmd_classify(&input, output.as_deref(), require_homeo, opts)
        }
        Command::Sweep { theta, alpha, output, svg } => cmd_sweep(&theta, &alpha, output.as_deref(), svg.as_deref()),
        Command::Orbit { input, point, n, format, output } => cmd_orbit(&input, &point, n, format, output.as_deref()),
        Command::Certify { mode, input, delta, horizon, seed, pair, output } => {
            cmd_certify(mode, &input, delta, horizon, seed, pair, output.as_deref())
        }
        Command::Product { input, action, mode, point, n, delta, horizon, seed, output } => {
            let opts = ClassifyOptions { delta, horizon, seed, ..Default::default() };
            cmd_product(&input, action, mode, point.as_deref(), n, opts, output.as_deref())
        }
        Command::Verify { input, output } => cmd_verify(&input, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Input(m) | Failure::Homeo(m) | Failure::Exhausted(m) => m,
            };
            eprintln!("spheredyn: {msg}");
            ExitCode::from(f.code())
        }
    }
}
