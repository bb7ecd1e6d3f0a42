//! Command-line front end: loads a JSON problem spec, runs one pipeline from
//! the library, and prints a deterministic CSV or JSON table to stdout.
//!
//! Exit codes: 0 success, 2 spec error, 4 search budget exceeded, 3 any other
//! precondition violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thermocat::{
    barycentric, ceto2_scan, cooling_scan, decompose, decompose_mixture,
    eto_extremes_bruteforce, gibbs_stochastic_feasible, is_energy_preserving,
    mto_extreme_candidates, reconstruct, tensor, thermo_curve, thermomajorises, to_extreme_points,
    trajectory_report, CetoHandle, ComplexUnitary, CompositeContext, CoolingConfig, CoolingMode,
    PopulationVector, Provenance, SwapSequence, ThermalContext, ThermoError, DEFAULT_NODE_BUDGET,
};

const TOOL: &str = concat!("thermocat ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "thermocat", version, about = "Reachability and catalysis for thermal processes on energy populations")]
struct Cli {
    /// Cap on worker threads for parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thermomajorisation curve of the input state (CSV: elbows + samples).
    Curve { spec: PathBuf },
    /// Extreme points of the reachable set (JSON).
    Extremes {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassArg::Eto)]
        class: ClassArg,
    },
    /// Reachability of the target state from the input state (JSON).
    Majorize { spec: PathBuf },
    /// Qubit-catalyst scan or catalytic trajectory (CSV).
    Catalysis { spec: PathBuf },
    /// Catalytic cooling limits per catalyst dimension (CSV).
    Cooling { spec: PathBuf },
    /// Factor an energy-preserving unitary into two-level rotations (JSON).
    Decompose { spec: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    To,
    Eto,
    Mto,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSpec {
    energies: Vec<f64>,
    beta: f64,
    state: Option<Vec<f64>>,
    catalyst: Option<CatalystSpec>,
    target: Option<Vec<f64>>,
    #[serde(default)]
    options: Options,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalystSpec {
    dim: usize,
    distribution: Distribution,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Distribution {
    Named(String),
    Explicit(Vec<f64>),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Options {
    /// Extra evenly spaced curve samples (`curve`).
    samples: Option<usize>,
    /// Grid points of a catalyst scan (`catalysis` with distribution "scan").
    grid_points: Option<usize>,
    /// Inverse temperature of the hot source (`cooling`).
    beta_hot: Option<f64>,
    /// Catalyst dimensions to scan (`cooling`).
    dims: Option<Vec<usize>>,
    /// "exact" or "heuristic" formation enumeration (`cooling`).
    mode: Option<String>,
    /// Catalyst lattice resolution (`cooling`).
    grid_divisions: Option<usize>,
    /// Complex matrix file, JSON or CSV (`decompose`).
    matrix_file: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn spec(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<ThermoError> for Failure {
    fn from(e: ThermoError) -> Self {
        let code = match &e {
            ThermoError::PreconditionViolated(_) => 3,
            ThermoError::BudgetExceeded { .. } => 4,
            ThermoError::SolverFailure => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("thermocat: --threads must be positive");
            return ExitCode::from(2);
        }
        // Ignore failure: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("thermocat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Curve { spec } => cmd_curve(&load(spec)?),
        Command::Extremes { spec, class } => cmd_extremes(&load(spec)?, *class),
        Command::Majorize { spec } => cmd_majorize(&load(spec)?),
        Command::Catalysis { spec } => cmd_catalysis(&load(spec)?),
        Command::Cooling { spec } => cmd_cooling(&load(spec)?),
        Command::Decompose { spec } => cmd_decompose(&load(spec)?),
    }
}

struct LoadedSpec {
    spec: ProblemSpec,
    hash: String,
    dir: PathBuf,
}

fn load(path: &Path) -> Result<LoadedSpec, Failure> {
    let raw = std::fs::read(path)
        .map_err(|e| Failure::spec(format!("cannot read {}: {e}", path.display())))?;
    let hash = hex(&Sha256::digest(&raw));
    let spec: ProblemSpec = serde_json::from_slice(&raw)
        .map_err(|e| Failure::spec(format!("invalid spec {}: {e}", path.display())))?;
    if spec.energies.is_empty() {
        return Err(Failure::spec("spec lists no energies"));
    }
    if !(spec.beta > 0.0) {
        return Err(Failure::spec("beta must be positive"));
    }
    if let Some(state) = &spec.state {
        if state.len() != spec.energies.len() {
            return Err(Failure::spec(format!(
                "state dimension {} does not match {} energies",
                state.len(),
                spec.energies.len()
            )));
        }
    }
    let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    Ok(LoadedSpec { spec, hash, dir })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixed 12-significant-digit float format shared by every table.
fn num(x: f64) -> String {
    format!("{:.11e}", x)
}

/// The same rounding for JSON payloads, as a real JSON number.
fn jnum(x: f64) -> serde_json::Value {
    serde_json::Value::from(num(x).parse::<f64>().unwrap())
}

fn jvec(v: &[f64]) -> serde_json::Value {
    serde_json::Value::from(v.iter().map(|&x| jnum(x)).collect::<Vec<_>>())
}

fn csv_preamble(hash: &str) -> String {
    format!("# tool: {TOOL}\n# spec_sha256: {hash}\n")
}

fn context(spec: &ProblemSpec) -> Result<ThermalContext, Failure> {
    Ok(ThermalContext::new(&spec.energies, spec.beta)?)
}

fn state(spec: &ProblemSpec) -> Result<PopulationVector, Failure> {
    let raw = spec.state.as_ref().ok_or_else(|| Failure::spec("spec has no state"))?;
    Ok(PopulationVector::new(raw.clone()).map_err(|e| Failure::spec(e.to_string()))?)
}

fn budget() -> Result<u64, Failure> {
    match std::env::var("THERMOCAT_BUDGET") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::spec(format!("THERMOCAT_BUDGET is not a number: {v}"))),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn cmd_curve(loaded: &LoadedSpec) -> Result<(), Failure> {
    let ctx = context(&loaded.spec)?;
    let p = state(&loaded.spec)?;
    let curve = thermo_curve(&p, &ctx)?;
    // Report only genuine breakpoints: interior points where the slope does
    // not change (e.g. every point of the Gibbs diagonal) are dropped.
    let mut elbows: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in curve.elbows() {
        while elbows.len() >= 2 {
            let (x0, y0) = elbows[elbows.len() - 2];
            let (x1, y1) = elbows[elbows.len() - 1];
            if ((y1 - y0) * (x - x0) - (y - y0) * (x1 - x0)).abs() <= 1e-12 {
                elbows.pop();
            } else {
                break;
            }
        }
        elbows.push((x, y));
    }
    let mut out = csv_preamble(&loaded.hash);
    out.push_str("kind,x,y\n");
    for (x, y) in elbows {
        out.push_str(&format!("elbow,{},{}\n", num(x), num(y)));
    }
    let samples = loaded.spec.options.samples.unwrap_or(0);
    for k in 0..samples {
        let x = (k as f64 + 0.5) / samples as f64;
        out.push_str(&format!("sample,{},{}\n", num(x), num(curve.eval(x))));
    }
    print!("{out}");
    Ok(())
}

fn sequence_json(seq: &SwapSequence) -> serde_json::Value {
    serde_json::Value::from(
        seq.steps()
            .iter()
            .map(|s| {
                let (j, k) = s.levels();
                serde_json::json!({ "levels": [j, k], "lambda": jnum(s.lambda()) })
            })
            .collect::<Vec<_>>(),
    )
}

fn cmd_extremes(loaded: &LoadedSpec, class: ClassArg) -> Result<(), Failure> {
    let ctx = context(&loaded.spec)?;
    let p = state(&loaded.spec)?;
    let budget = budget()?;
    let (set, class_name) = match class {
        ClassArg::To => (to_extreme_points(&p, &ctx)?, "to"),
        ClassArg::Eto => {
            let d = p.dim();
            (eto_extremes_bruteforce(&p, &ctx, d * (d - 1) / 2, budget)?, "eto")
        }
        ClassArg::Mto => (mto_extreme_candidates(&p, &ctx, budget)?, "mto"),
    };
    // Fixed row order: vertices sorted lexicographically by entries.
    let mut rows: Vec<(usize, &PopulationVector)> = set.vertices().iter().enumerate().collect();
    rows.sort_by(|a, b| {
        a.1.as_slice()
            .iter()
            .zip(b.1.as_slice())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vertices: Vec<serde_json::Value> = rows
        .iter()
        .map(|&(i, v)| {
            let mut entry = serde_json::json!({ "state": jvec(v.as_slice()) });
            if v.dim() == 3 {
                let (x, y) = barycentric(v).unwrap();
                entry["barycentric"] = serde_json::Value::from(vec![jnum(x), jnum(y)]);
            }
            entry["provenance"] = match &set.provenance()[i] {
                Provenance::Tight(order) => serde_json::json!({
                    "kind": "tight", "order": order.one_based(),
                }),
                Provenance::Sequence(seq) => serde_json::json!({
                    "kind": "sequence", "swaps": sequence_json(seq),
                }),
                Provenance::Fill => serde_json::json!({ "kind": "fill" }),
            };
            entry
        })
        .collect();
    let doc = serde_json::json!({
        "tool": TOOL,
        "spec_sha256": loaded.hash,
        "class": class_name,
        "source": jvec(p.as_slice()),
        "vertices": vertices,
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}

fn cmd_majorize(loaded: &LoadedSpec) -> Result<(), Failure> {
    let ctx = context(&loaded.spec)?;
    let p = state(&loaded.spec)?;
    let raw = loaded.spec.target.as_ref().ok_or_else(|| Failure::spec("majorize needs a target"))?;
    let q = PopulationVector::new(raw.clone()).map_err(|e| Failure::spec(e.to_string()))?;
    let by_curve = thermomajorises(&p, &q, &ctx)?;
    let by_lp = gibbs_stochastic_feasible(&p, &q, &ctx)?;
    let doc = serde_json::json!({
        "tool": TOOL,
        "spec_sha256": loaded.hash,
        "thermomajorises": by_curve,
        "lp_feasible": by_lp,
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}

fn cmd_catalysis(loaded: &LoadedSpec) -> Result<(), Failure> {
    let spec = &loaded.spec;
    let ctx = context(spec)?;
    let p = state(spec)?;
    let cat = spec.catalyst.as_ref().ok_or_else(|| Failure::spec("catalysis needs a catalyst"))?;
    match &cat.distribution {
        Distribution::Named(name) if name == "scan" => {
            if cat.dim != 2 {
                return Err(Failure::spec("catalyst scans support dim 2 only"));
            }
            let n = spec.options.grid_points.unwrap_or(101).max(2);
            let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
            let mut w = vec![0.0; p.dim()];
            w[0] = 1.0;
            let points = ceto2_scan(&p, &ctx, &grid, &w)?;
            let mut out = csv_preamble(&loaded.hash);
            let qcols: Vec<String> = (0..p.dim()).map(|i| format!("q{}", i + 1)).collect();
            out.push_str(&format!("c1,objective,{}\n", qcols.join(",")));
            for pt in &points {
                let q: Vec<String> = pt.q.iter().map(num).collect();
                out.push_str(&format!("{},{},{}\n", num(pt.c1), num(pt.objective), q.join(",")));
            }
            print!("{out}");
            Ok(())
        }
        Distribution::Named(other) => {
            Err(Failure::spec(format!("unknown catalyst distribution \"{other}\"")))
        }
        Distribution::Explicit(raw) => {
            if raw.len() != cat.dim {
                return Err(Failure::spec("catalyst distribution does not match its dim"));
            }
            let c = PopulationVector::new(raw.clone()).map_err(|e| Failure::spec(e.to_string()))?;
            let cc = CompositeContext::with_degenerate_catalyst(ctx, cat.dim)?;
            let q = match &spec.target {
                Some(t) => PopulationVector::new(t.clone()).map_err(|e| Failure::spec(e.to_string()))?,
                None => {
                    let handle = CetoHandle::new(&p, &c, &cc)?;
                    let mut w = vec![0.0; p.dim()];
                    w[0] = 1.0;
                    handle.optimize(&w, true)?.0
                }
            };
            let joint_p = tensor(&p, &c, &cc)?;
            let joint_q = tensor(&q, &c, &cc)?;
            let decomp = decompose_mixture(&joint_p, &joint_q, &cc)?;
            let seq = decomp.recombined.ok_or_else(|| {
                Failure::from(ThermoError::PreconditionViolated(
                    "mixture certificate did not recombine into one sequence".into(),
                ))
            })?;
            let records = trajectory_report(&joint_p, &seq, &cc)?;
            let (ds, dc) = cc.dims();
            let mut out = csv_preamble(&loaded.hash);
            let mut cols = vec!["step".into(), "level_j".into(), "level_k".into(), "lambda".into()];
            cols.extend((0..ds * dc).map(|i| format!("joint{}", i + 1)));
            cols.extend((0..ds).map(|i| format!("system{}", i + 1)));
            cols.extend((0..dc).map(|i| format!("catalyst{}", i + 1)));
            for a in ["half", "one", "two"] {
                for part in ["composite", "system", "catalyst"] {
                    cols.push(format!("delta_f_{a}_{part}"));
                }
            }
            cols.push("mutual_information".into());
            out.push_str(&cols.join(","));
            out.push('\n');
            for (i, r) in records.iter().enumerate() {
                let mut row = Vec::with_capacity(cols.len());
                row.push(r.step.to_string());
                if i == 0 {
                    row.extend(["", "", ""].map(String::from));
                } else {
                    let s = &seq.steps()[i - 1];
                    let (j, k) = s.levels();
                    row.push(j.to_string());
                    row.push(k.to_string());
                    row.push(num(s.lambda()));
                }
                row.extend(r.state.iter().map(num));
                row.extend(r.system.iter().map(num));
                row.extend(r.catalyst.iter().map(num));
                for t in [&r.delta_f_half, &r.delta_f_one, &r.delta_f_two] {
                    row.push(num(t.composite));
                    row.push(num(t.system));
                    row.push(num(t.catalyst));
                }
                row.push(num(r.mutual_information));
                out.push_str(&row.join(","));
                out.push('\n');
            }
            print!("{out}");
            Ok(())
        }
    }
}

fn cmd_cooling(loaded: &LoadedSpec) -> Result<(), Failure> {
    let spec = &loaded.spec;
    let beta_hot = spec.options.beta_hot.ok_or_else(|| Failure::spec("cooling needs options.beta_hot"))?;
    let dims = spec.options.dims.clone().unwrap_or_else(|| vec![2]);
    let mode = match spec.options.mode.as_deref() {
        None | Some("exact") => CoolingMode::Exact,
        Some("heuristic") => CoolingMode::Heuristic,
        Some(other) => return Err(Failure::spec(format!("unknown cooling mode \"{other}\""))),
    };
    let mut config = CoolingConfig::default();
    if let Some(g) = spec.options.grid_divisions {
        config.grid_divisions = g;
    }
    if std::env::var("THERMOCAT_BUDGET").is_ok() {
        config.formation_budget = budget()?;
    }
    let report = cooling_scan(beta_hot, spec.beta, &spec.energies, &dims, mode, &config)?;
    let mut out = csv_preamble(&loaded.hash);
    out.push_str("label,dim,beta_c,catalyst\n");
    out.push_str(&format!("to_limit,1,{},1\n", num(report.beta_to)));
    out.push_str(&format!("eto_limit,1,{},1\n", num(report.beta_eto)));
    for d in &report.dims {
        let best: Vec<String> = d.best_catalyst.iter().map(num).collect();
        let worst: Vec<String> = d.worst_catalyst.iter().map(num).collect();
        out.push_str(&format!("best,{},{},{}\n", d.dim, num(d.best_beta), best.join(" ")));
        out.push_str(&format!("worst,{},{},{}\n", d.dim, num(d.worst_beta), worst.join(" ")));
    }
    print!("{out}");
    Ok(())
}

type C64 = Complex<f64>;

fn parse_complex_cell(cell: &str) -> Option<C64> {
    let cell = cell.trim();
    if let Ok(re) = cell.parse::<f64>() {
        return Some(C64::new(re, 0.0));
    }
    // a+bi / a-bi with the sign splitting the parts (exponents keep theirs).
    let body = cell.strip_suffix(['i', 'j'])?;
    for (idx, ch) in body.char_indices().skip(1) {
        if (ch == '+' || ch == '-') && !matches!(&body[idx - 1..idx], "e" | "E") {
            let re = body[..idx].parse::<f64>().ok()?;
            let im = match &body[idx..] {
                "+" => 1.0,
                "-" => -1.0,
                s => s.parse::<f64>().ok()?,
            };
            return Some(C64::new(re, im));
        }
    }
    body.parse::<f64>().ok().map(|im| C64::new(0.0, im))
}

fn read_matrix(path: &Path) -> Result<DMatrix<C64>, Failure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::spec(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<C64>> = if path.extension().is_some_and(|e| e == "csv") {
        raw.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|cell| {
                        parse_complex_cell(cell)
                            .ok_or_else(|| Failure::spec(format!("bad matrix entry \"{cell}\"")))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?
    } else {
        // JSON: entries are numbers or [re, im] pairs.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Real(f64),
            Pair([f64; 2]),
        }
        let parsed: Vec<Vec<Entry>> = serde_json::from_str(&raw)
            .map_err(|e| Failure::spec(format!("invalid matrix {}: {e}", path.display())))?;
        parsed
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| match e {
                        Entry::Real(re) => C64::new(re, 0.0),
                        Entry::Pair([re, im]) => C64::new(re, im),
                    })
                    .collect()
            })
            .collect()
    };
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Failure::spec("matrix must be square and non-empty"));
    }
    Ok(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
}

fn jcomplex(z: C64) -> serde_json::Value {
    serde_json::Value::from(vec![jnum(z.re), jnum(z.im)])
}

fn cmd_decompose(loaded: &LoadedSpec) -> Result<(), Failure> {
    let spec = &loaded.spec;
    let file = spec.options.matrix_file.as_ref().ok_or_else(|| Failure::spec("decompose needs options.matrix_file"))?;
    let path = if file.is_absolute() { file.clone() } else { loaded.dir.join(file) };
    let m = read_matrix(&path)?;
    if m.nrows() != spec.energies.len() {
        return Err(Failure::spec(format!(
            "matrix dimension {} does not match {} energies",
            m.nrows(),
            spec.energies.len()
        )));
    }
    if !is_energy_preserving(&m, &spec.energies) {
        return Err(Failure::from(ThermoError::PreconditionViolated(
            "matrix does not commute with the Hamiltonian".into(),
        )));
    }
    let u = ComplexUnitary::new(m.clone(), spec.energies.clone())?;
    let (factors, phases) = decompose(&u)?;
    let rec = reconstruct(&factors, &phases);
    let err = (&rec - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let doc = serde_json::json!({
        "tool": TOOL,
        "spec_sha256": loaded.hash,
        "factors": factors.iter().map(|f| {
            let (a, b) = f.levels();
            let bl = f.block();
            serde_json::json!({
                "levels": [a, b],
                "block": [
                    [jcomplex(bl[0][0]), jcomplex(bl[0][1])],
                    [jcomplex(bl[1][0]), jcomplex(bl[1][1])],
                ],
            })
        }).collect::<Vec<_>>(),
        "phases": phases.iter().map(|&z| jcomplex(z)).collect::<Vec<_>>(),
        "reconstruction_error": jnum(err),
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}
