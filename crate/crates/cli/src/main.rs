//! `xdecomp` command-line tool.
//!
//! Exit codes: 0 success, 1 the method found no answer (non-member, no
//! decomposition), 2 usage or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use xdecomp::decomposer::{decompose, DecompositionResult, GenericChange, SolverConfig};
use xdecomp::genpoly::{residual_system, GenMatrixFamily};
use xdecomp::io::{pairs, DecompositionJson, MultiwayJson, PolyJson, TensorJson, VarietyJson};
use xdecomp::border::BorderBasisCtx;
use xdecomp::vandermonde::{self, MultiwayTensor, OracleNodes, VandermondeDecomposition};
use xdecomp::variety::{exp_grank, hilbert_value, membership, select_b0, MembershipReport, VarietySpec};
use xdecomp::{Error, Field, SymTensor, C64, Q};

#[derive(Parser, Debug)]
#[command(name = "xdecomp", version, about = "Symmetric tensor decompositions on algebraic varieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether a tensor lies in the span of d-th powers of points of X.
    Membership {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        variety: PathBuf,
        /// Relative tolerance for floating-point inputs; rational inputs are checked exactly.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Flattening ranks, Hilbert value and expected generic rank.
    RankInfo {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        variety: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        flattening_tol: f64,
        #[arg(long, env = "XDECOMP_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Decompose a symmetric tensor on a variety.
    Decompose {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        variety: PathBuf,
        /// Try exactly this rank.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, env = "XDECOMP_SEED", default_value_t = 0)]
        seed: u64,
        /// Relative reconstruction error required for success.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = ChangeArg::Auto)]
        generic_change: ChangeArg,
        /// Write the polynomial residual system in w for the first attempted rank.
        #[arg(long)]
        dump_residuals: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Vandermonde decomposition of a k-way array.
    Vandermonde {
        #[arg(long)]
        tensor: PathBuf,
        /// Use the (d+1)^k-term interpolation decomposition instead of the solver.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = NodesArg::RootsOfUnity)]
        nodes: NodesArg,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, env = "XDECOMP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Time the recovery of planted Vandermonde decompositions; writes CSV.
    Bench {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, env = "XDECOMP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChangeArg {
    Auto,
    Never,
    Always,
}

impl From<ChangeArg> for GenericChange {
    fn from(c: ChangeArg) -> Self {
        match c {
            ChangeArg::Auto => GenericChange::Auto,
            ChangeArg::Never => GenericChange::Never,
            ChangeArg::Always => GenericChange::Always,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NodesArg {
    RootsOfUnity,
    Equispaced,
}

#[derive(Serialize, Debug)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    config: serde_json::Value,
    seed: u64,
    versions: serde_json::Value,
    wall_time: f64,
}

impl RunManifest {
    fn new(command: &str, inputs: &[&Path], config: serde_json::Value, seed: u64, started: Instant) -> Self {
        RunManifest {
            command: command.into(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            seed,
            versions: json!({ "xdecomp": env!("CARGO_PKG_VERSION") }),
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// Method-level failure, reported with exit code 1.
#[derive(Debug)]
struct Failure(String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

fn is_method_failure(e: &Error) -> bool {
    !matches!(e, Error::Invalid(_) | Error::Json(_) | Error::Io(_) | Error::NvarsMismatch(..) | Error::LengthMismatch { .. })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, value: &impl Serialize, manifest: &RunManifest) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let mtext = serde_json::to_string_pretty(manifest)?;
    match output {
        Some(p) => {
            fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            let mut name = p.as_os_str().to_owned();
            name.push(".manifest.json");
            fs::write(PathBuf::from(name), mtext + "\n")?;
        }
        None => {
            println!("{text}");
            eprintln!("manifest: {}", serde_json::to_string(manifest)?);
        }
    }
    Ok(())
}

fn show(c: &Complex64) -> String {
    if c.im.abs() < 5e-5 {
        format!("{:.4}", c.re)
    } else {
        format!("{:.4}{:+.4}i", c.re, c.im)
    }
}

fn report_line(r: &MembershipReport, x_gens: usize) -> String {
    match &r.violating {
        None => format!("member: all pairings vanish (worst {:.3e}, threshold {:.3e})", r.worst_violation, r.threshold),
        Some((t, beta)) => format!(
            "not a member: generator {t} of {x_gens} times x^{beta} pairs to a nonzero value (worst {:.3e}, threshold {:.3e})",
            r.worst_violation, r.threshold
        ),
    }
}

fn run_membership(tensor: &Path, variety: &Path, tol: f64) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let tj: TensorJson = read_json(tensor)?;
    let vj: VarietyJson = read_json(variety)?;
    let exact = match (tj.to_tensor::<Q>(), vj.to_variety::<Q>()) {
        (Ok(a), Ok(x)) => Some(check(&a, &x, tol)?),
        _ => None,
    };
    let (report, gens) = match exact {
        Some(r) => r,
        None => check(&tj.to_tensor::<C64>()?, &vj.to_variety::<C64>()?, tol)?,
    };
    eprintln!("{}", report_line(&report, gens));
    let manifest = RunManifest::new("membership", &[tensor, variety], json!({ "tol": tol }), 0, started);
    emit(None, &report, &manifest)?;
    Ok(if report.member { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn check<S: Field>(a: &SymTensor<S>, x: &VarietySpec<S>, tol: f64) -> anyhow::Result<(MembershipReport, usize)> {
    Ok((membership(a, x, tol)?, x.generators_h().len()))
}

fn run_rank_info(tensor: &Path, variety: &Path, tol: f64, seed: u64) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let a: SymTensor<C64> = read_json::<TensorJson>(tensor)?.to_tensor()?;
    let x: VarietySpec<C64> = read_json::<VarietyJson>(variety)?.to_variety()?;
    if a.n() != x.n() {
        return Err(anyhow!("tensor has n = {} but the variety lives in P^{}", a.n(), x.n()));
    }
    let ranks = a.flattening_ranks(tol);
    let h = hilbert_value(&x, a.order());
    let eg = exp_grank(&x, a.order(), seed).ok();
    let info = json!({
        "flattening_ranks": ranks,
        "max_flattening_rank": a.max_flattening_rank(tol),
        "hilbert_value": h,
        "exp_grank": eg,
    });
    eprintln!("flattening ranks {ranks:?}, hilbert value {h}, expected generic rank {eg:?}");
    let manifest = RunManifest::new("rank-info", &[tensor, variety], json!({ "flattening_tol": tol }), seed, started);
    emit(None, &info, &manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn decomposition_json(res: &DecompositionResult, seed: u64) -> DecompositionJson {
    let mut out = DecompositionJson {
        rank: res.rank_used,
        lambdas: pairs(&res.decomposition.weights),
        points: res.decomposition.points.iter().map(|p| pairs(p)).collect(),
        abs_error: res.abs_error,
        rel_error: res.rel_error,
        variety_violation: res.on_variety_violation,
        seed,
        points_at_infinity: None,
        weights_at_infinity: None,
    };
    if let Some(p) = &res.projective {
        let inf: Vec<usize> = (0..p.points.len()).filter(|&j| p.at_infinity[j]).collect();
        if !inf.is_empty() {
            out.points_at_infinity = Some(inf.iter().map(|&j| pairs(&p.points[j])).collect());
            out.weights_at_infinity = Some(inf.iter().map(|&j| [p.weights[j].re, p.weights[j].im]).collect());
        }
    }
    out
}

fn dump_residuals(a: &SymTensor<C64>, x: &VarietySpec<C64>, r: usize, cfg: &SolverConfig, path: &Path) -> anyhow::Result<()> {
    let b0 = select_b0(x, r, cfg.seed)?;
    let ctx = BorderBasisCtx::new(a.n(), b0.clone())?;
    let fam = GenMatrixFamily::numeric(a, &ctx, &cfg.generating)?;
    let rs = residual_system(&fam, x.generators_g())?;
    let doc = json!({
        "rank": r,
        "b0": b0.iter().map(|b| b.as_slice().to_vec()).collect::<Vec<_>>(),
        "params": rs.m(),
        "kinds": rs.kinds(),
        "polys": rs.polys().iter().map(PolyJson::from_poly).collect::<Vec<_>>(),
    });
    fs::write(path, serde_json::to_string_pretty(&doc)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_decompose(
    tensor: &Path,
    variety: &Path,
    rank: Option<usize>,
    max_rank: Option<usize>,
    restarts: usize,
    seed: u64,
    tol: f64,
    change: ChangeArg,
    dump: Option<&Path>,
    output: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let a: SymTensor<C64> = read_json::<TensorJson>(tensor)?.to_tensor()?;
    let x: VarietySpec<C64> = read_json::<VarietyJson>(variety)?.to_variety()?;
    if a.n() != x.n() {
        return Err(anyhow!("tensor has n = {} but the variety lives in P^{}", a.n(), x.n()));
    }
    let mut cfg = SolverConfig { restarts, seed, rel_tol: tol, generic_change: change.into(), ..Default::default() };
    if let Some(m) = max_rank {
        cfg.rank_max = m;
    }
    if let Some(r) = rank {
        cfg.rank_min = r;
        cfg.rank_max = r;
        cfg.flattening_tol = f64::INFINITY;
    }
    if let Some(path) = dump {
        let r = rank.unwrap_or_else(|| cfg.rank_min.max(a.max_flattening_rank(cfg.flattening_tol)));
        dump_residuals(&a, &x, r, &cfg, path)?;
    }
    let config = serde_json::to_value(&cfg)?;
    match decompose(&a, &x, &cfg) {
        Ok(res) => {
            for l in &res.trace {
                eprintln!("rank {}: {}", l.rank, l.outcome);
            }
            eprintln!("rank {} decomposition, abs error {:.3e}, relative {:.3e}", res.rank_used, res.abs_error, res.rel_error);
            for (l, v) in res.decomposition.weights.iter().zip(&res.decomposition.points) {
                eprintln!("  λ = {:>18}   v = ({})", show(l), v.iter().map(show).collect::<Vec<_>>().join(", "));
            }
            let manifest = RunManifest::new("decompose", &[tensor, variety], config, seed, started);
            emit(output, &decomposition_json(&res, seed), &manifest)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) if is_method_failure(&e) => {
            let note = if rank.is_some() { " (escalation disabled)" } else { "" };
            Err(Failure(format!("{e}{note}")).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn vandermonde_json(dec: &VandermondeDecomposition, rel: f64, seed: u64, oracle: bool) -> serde_json::Value {
    json!({
        "rank": dec.rank(),
        "k": dec.k,
        "d": dec.d,
        "terms": dec.terms.iter().map(|t| json!({
            "weight": [t.weight.re, t.weight.im],
            "pairs": t.pairs.iter().map(|(a, b)| [[a.re, a.im], [b.re, b.im]]).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "rel_error": rel,
        "seed": seed,
        "oracle": oracle,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_vandermonde(
    tensor: &Path,
    oracle: bool,
    nodes: NodesArg,
    rank: Option<usize>,
    max_rank: Option<usize>,
    restarts: usize,
    seed: u64,
    output: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let a = MultiwayTensor::from_json(&read_json::<MultiwayJson>(tensor)?)?;
    let mut cfg = SolverConfig { restarts, seed, ..Default::default() };
    if let Some(m) = max_rank {
        cfg.rank_max = m;
    }
    if let Some(r) = rank {
        cfg.rank_min = r;
        cfg.rank_max = r;
        cfg.flattening_tol = f64::INFINITY;
    }
    let result = if oracle {
        let which = match nodes {
            NodesArg::RootsOfUnity => OracleNodes::RootsOfUnity,
            NodesArg::Equispaced => OracleNodes::Equispaced,
        };
        vandermonde::vandermonde_oracle(&a, &which.nodes(a.order()))
    } else {
        vandermonde::vdecompose(&a, &cfg)
    };
    let dec = match result {
        Ok(d) => d,
        Err(e) if is_method_failure(&e) => return Err(Failure(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    let rel = dec.rel_error(&a);
    eprintln!("{} Vandermonde terms, relative error {rel:.3e}", dec.rank());
    let config = json!({ "oracle": oracle, "solver": serde_json::to_value(&cfg)? });
    let manifest = RunManifest::new("vandermonde", &[tensor], config, seed, started);
    emit(output, &vandermonde_json(&dec, rel, seed, oracle), &manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn run_bench(k: usize, d: usize, r: usize, trials: usize, seed: u64, output: Option<&Path>) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    if k < 2 {
        return Err(anyhow!("bench needs k ≥ 2"));
    }
    let cfg = SolverConfig { seed, ..Default::default() };
    let rows = vandermonde::bench(k, d, r, trials, seed, &cfg);
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    wtr.write_record(["k", "n", "d", "r", "time", "rel_error"])?;
    for row in &rows {
        wtr.serialize(row)?;
    }
    let text = String::from_utf8(wtr.into_inner()?)?;
    let manifest = RunManifest::new("bench", &[], json!({ "k": k, "d": d, "r": r, "trials": trials }), seed, started);
    match output {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            let mut name = p.as_os_str().to_owned();
            name.push(".manifest.json");
            fs::write(PathBuf::from(name), serde_json::to_string_pretty(&manifest)? + "\n")?;
        }
        None => {
            print!("{text}");
            eprintln!("manifest: {}", serde_json::to_string(&manifest)?);
        }
    }
    let ok = rows.iter().filter(|r| r.rel_error <= 1e-8).count();
    eprintln!("{ok}/{trials} trials reached relative error ≤ 1e-8");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Membership { tensor, variety, tol } => run_membership(&tensor, &variety, tol),
        Command::RankInfo { tensor, variety, flattening_tol, seed } => run_rank_info(&tensor, &variety, flattening_tol, seed),
        Command::Decompose { tensor, variety, rank, max_rank, restarts, seed, tol, generic_change, dump_residuals, output } => {
            run_decompose(
                &tensor,
                &variety,
                rank,
                max_rank,
                restarts,
                seed,
                tol,
                generic_change,
                dump_residuals.as_deref(),
                output.as_deref(),
            )
        }
        Command::Vandermonde { tensor, oracle, nodes, rank, max_rank, restarts, seed, output } => {
            run_vandermonde(&tensor, oracle, nodes, rank, max_rank, restarts, seed, output.as_deref())
        }
        Command::Bench { k, d, r, trials, seed, output } => run_bench(k, d, r, trials, seed, output.as_deref()),
    };
    match res {
        Ok(code) => code,
        Err(e) if e.is::<Failure>() => {
            eprintln!("failure: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
