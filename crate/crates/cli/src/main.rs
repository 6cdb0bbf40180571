use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tradegeom_core::equilibrium::{
    bloc_structure, bloc_symmetric_equilibria, find_all_equilibria, sigma_from_eps, EquilibriumError,
    MultiStartOptions, SolverOptions, DEFAULT_SEED,
};
use tradegeom_core::freeness::freeness_from_metric;
use tradegeom_core::io::{
    format_sig9, grid_csv, grid_svg, metric_document, parse_metric_document, parse_scenario_document, write_atomic,
    DocError,
};
use tradegeom_core::metric::{
    bipartite_metric, cut_metric, discrete_metric, graph_metric, MetricMatrix, WeightedGraph,
};
use tradegeom_core::scenario::scan_triangle;
use tradegeom_core::spectral::{eigenvalues_sym, is_cnd, mt_stability, schoenberg_embedding, SpectralError, CND_TOL};
use tradegeom_core::{Equilibrium, StabilityOptions};

const DEFAULT_INPUT_TOL: f64 = 1e-9;
/// Bisection width for reported indices, fine enough for 9 printed digits.
const INDEX_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "tradegeom", version, about = "Spectral stability of trade-cost metrics and trade equilibria")]
struct Cli {
    /// Tolerance for checking input documents; for `equilibrium`, the solver residual target
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit machine-readable JSON
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the multi-start equilibrium search
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the main output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a metric document for a standard family
    Generate(GenerateArgs),
    /// Check a metric or scenario document
    Validate { file: PathBuf },
    /// Eigenvalues of the freeness matrix at a given t
    Spectrum {
        file: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Stability flag and index of a metric
    Stability {
        file: PathBuf,
        #[arg(long, default_value_t = 1024)]
        grid_points: usize,
    },
    /// Squared-Euclidean embedding of a metric of negative type
    Embed { file: PathBuf },
    /// Solve the equilibrium system of a scenario
    Equilibrium {
        file: PathBuf,
        #[arg(long, default_value_t = 50)]
        starts: usize,
        /// Use the closed-form two-bloc construction when the economy allows it
        #[arg(long)]
        analytic: bool,
    },
    /// Classify the barycentric grid spanned by three metrics
    Scan {
        m1: PathBuf,
        m2: PathBuf,
        m3: PathBuf,
        #[arg(long, default_value_t = 100)]
        r: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        grid_points: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Bipartite,
    Cut,
    Discrete,
    Graph,
}

#[derive(Args)]
struct GenerateArgs {
    kind: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    /// Cut side, e.g. `5` or `0,1`
    #[arg(long, value_delimiter = ',')]
    set: Vec<usize>,
    /// Graph edges as `i:j:w` triples, e.g. `0:1:1,1:2:2.5`
    #[arg(long, value_delimiter = ',')]
    edges: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        let code = match e {
            DocError::Parse(_) | DocError::Io(_) => 2,
            DocError::Metric(_) | DocError::Scenario(_) => 3,
        };
        Self::new(code, e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let output = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Validate { file } => validate(cli, file),
        Command::Spectrum { file, t } => spectrum(cli, file, *t),
        Command::Stability { file, grid_points } => stability(cli, file, *grid_points),
        Command::Embed { file } => embed(cli, file),
        Command::Equilibrium { file, starts, analytic } => equilibrium(cli, file, *starts, *analytic),
        Command::Scan {
            m1,
            m2,
            m3,
            r,
            svg,
            grid_points,
        } => scan(cli, [m1, m2, m3], *r, svg.as_deref(), *grid_points),
    }?;
    emit(cli.out.as_deref(), &output)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))
}

fn input_tol(cli: &Cli) -> f64 {
    cli.tol.unwrap_or(DEFAULT_INPUT_TOL)
}

fn load_metric(cli: &Cli, path: &Path) -> Result<MetricMatrix, Failure> {
    Ok(parse_metric_document(&read(path)?, input_tol(cli))?)
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| format_sig9(x)).collect::<Vec<_>>().join(",")
}

fn generate(args: &GenerateArgs) -> Outcome {
    let metric = match args.kind {
        Family::Bipartite => {
            let m = args.m.ok_or_else(|| Failure::parse("bipartite needs --m"))?;
            bipartite_metric(args.n, m)
        }
        Family::Cut => cut_metric(args.n, &args.set),
        Family::Discrete => discrete_metric(args.n),
        Family::Graph => {
            let edges = args
                .edges
                .iter()
                .map(|e| parse_edge(e))
                .collect::<Result<Vec<_>, _>>()?;
            let g = WeightedGraph::new(args.n, edges).map_err(|e| Failure::parse(e.to_string()))?;
            graph_metric(&g)
        }
    }
    .map_err(|e| Failure::parse(e.to_string()))?;
    Ok(metric_document(&metric))
}

fn parse_edge(s: &str) -> Result<(usize, usize, f64), Failure> {
    let bad = || Failure::parse(format!("edge {s:?} is not of the form i:j:w"));
    let parts: Vec<&str> = s.split(':').collect();
    let [i, j, w] = parts.as_slice() else {
        return Err(bad());
    };
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
        w.trim().parse().map_err(|_| bad())?,
    ))
}

fn validate(cli: &Cli, path: &Path) -> Outcome {
    let text = read(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Failure::parse(e.to_string()))?;
    if doc.get("countries").is_some() {
        let file = parse_scenario_document(&text, input_tol(cli))?;
        let s = &file.scenario;
        let economy = s.economy().map_err(|e| Failure::new(3, e.to_string()))?;
        return Ok(if cli.json {
            to_json(&json!({
                "valid": true,
                "document": "scenario",
                "n": s.names().len(),
                "epsilon": s.eps(),
                "normalized": economy.is_normalized(),
                "degenerate": s.metric().is_degenerate(),
            }))
        } else {
            format!(
                "valid scenario n={} epsilon={} normalized={} degenerate={}\n",
                s.names().len(),
                format_sig9(s.eps()),
                economy.is_normalized(),
                s.metric().is_degenerate()
            )
        });
    }
    let m = parse_metric_document(&text, input_tol(cli))?;
    Ok(if cli.json {
        to_json(&json!({
            "valid": true,
            "document": "metric",
            "n": m.len(),
            "degenerate": m.is_degenerate(),
        }))
    } else {
        format!("valid metric n={} degenerate={}\n", m.len(), m.is_degenerate())
    })
}

fn spectrum(cli: &Cli, path: &Path, t: f64) -> Outcome {
    let m = load_metric(cli, path)?;
    let phi = freeness_from_metric(&m, t).map_err(|e| Failure::parse(e.to_string()))?;
    let report = eigenvalues_sym(phi.matrix()).map_err(|e| Failure::new(3, e.to_string()))?;
    Ok(if cli.json {
        to_json(&json!({
            "t": t,
            "eigenvalues": report.eigenvalues,
            "min_eigenvalue": report.min_eigenvalue,
            "psd": report.psd,
        }))
    } else {
        format!(
            "eigenvalues={}\nmin_eigenvalue={} psd={}\n",
            join(&report.eigenvalues),
            format_sig9(report.min_eigenvalue),
            report.psd
        )
    })
}

fn stability(cli: &Cli, path: &Path, grid_points: usize) -> Outcome {
    let m = load_metric(cli, path)?;
    let opts = StabilityOptions {
        grid_points,
        tol: INDEX_TOL,
    };
    let s = mt_stability(&m, &opts).map_err(|e| match e {
        SpectralError::InvalidOptions(_) => Failure::parse(e.to_string()),
        _ => Failure::new(3, e.to_string()),
    })?;
    let cnd = is_cnd(&m, CND_TOL);
    Ok(if cli.json {
        to_json(&json!({
            "stable": s.stable,
            "index": s.index,
            "witness_t": s.witness_t,
            "witness_eigenvalue": s.witness_eigenvalue,
            "cnd": cnd,
        }))
    } else {
        // a stable metric has index exactly 1
        let index = if s.stable { "1.0".to_string() } else { format_sig9(s.index) };
        let mut line = format!("stable={} index={index}", s.stable);
        if let (Some(t), Some(ev)) = (s.witness_t, s.witness_eigenvalue) {
            let _ = write!(line, " witness_t={} min_eigenvalue={:.6e}", format_sig9(t), ev);
        }
        line.push('\n');
        line
    })
}

fn embed(cli: &Cli, path: &Path) -> Outcome {
    let m = load_metric(cli, path)?;
    match schoenberg_embedding(&m) {
        Ok(e) => Ok(if cli.json {
            to_json(&json!({
                "dimension": e.dimension(),
                "points": e.points,
                "reconstruction_error": e.reconstruction_error(&m),
            }))
        } else {
            e.points.iter().map(|p| join(p) + "\n").collect()
        }),
        Err(SpectralError::NotNegativeType { min_eigenvalue }) => Err(Failure::new(
            5,
            format!("metric is not of negative type (Gram eigenvalue {min_eigenvalue:.6e})"),
        )),
        Err(e) => Err(Failure::new(3, e.to_string())),
    }
}

fn equilibrium(cli: &Cli, path: &Path, starts: usize, analytic: bool) -> Outcome {
    let file = parse_scenario_document(&read(path)?, DEFAULT_INPUT_TOL)?;
    let s = &file.scenario;
    let economy = s.economy().map_err(|e| Failure::new(3, e.to_string()))?;
    let sigma = file
        .sigma
        .unwrap_or_else(|| sigma_from_eps(economy.eps()).expect("economy has eps > 1"));

    let use_analytic = analytic && bloc_structure(&economy).is_some();
    if analytic && !use_analytic {
        eprintln!("note: no two-bloc structure detected; using the multi-start search");
    }
    let (equilibria, failed_starts) = if use_analytic {
        let eqs = bloc_symmetric_equilibria(&economy).map_err(|e| Failure::new(4, e.to_string()))?;
        (eqs, 0)
    } else {
        let opts = MultiStartOptions {
            starts,
            seed: cli.seed.unwrap_or(DEFAULT_SEED),
            solver: SolverOptions {
                tol: cli.tol.unwrap_or(SolverOptions::default().tol),
                ..SolverOptions::default()
            },
            ..MultiStartOptions::default()
        };
        match find_all_equilibria(&economy, &opts) {
            Ok(set) => (set.equilibria, set.failures.len()),
            Err(e @ EquilibriumError::InvalidOptions(_)) => return Err(Failure::parse(e.to_string())),
            Err(e) => return Err(Failure::new(4, e.to_string())),
        }
    };

    let wages = |e: &Equilibrium| e.wages(sigma).expect("sigma > 1 and v > 0");
    Ok(if cli.json {
        let list: Vec<Value> = equilibria
            .iter()
            .map(|e| {
                json!({
                    "kind": e.kind.as_str(),
                    "v": e.v,
                    "wages": wages(e),
                    "residual": e.residual_inf,
                })
            })
            .collect();
        to_json(&json!({
            "countries": s.names(),
            "epsilon": economy.eps(),
            "sigma": sigma,
            "method": if use_analytic { "analytic" } else { "multistart" },
            "count": equilibria.len(),
            "failed_starts": failed_starts,
            "equilibria": list,
        }))
    } else {
        let mut out = format!("equilibria={}\n", equilibria.len());
        for (k, e) in equilibria.iter().enumerate() {
            let _ = writeln!(
                out,
                "[{k}] kind={} residual={:.3e}\n  v={}\n  wages={}",
                e.kind.as_str(),
                e.residual_inf,
                join(&e.v),
                join(&wages(e))
            );
        }
        if failed_starts > 0 {
            let _ = writeln!(out, "failed_starts={failed_starts}");
        }
        out
    })
}

fn scan(cli: &Cli, files: [&PathBuf; 3], r: usize, svg: Option<&Path>, grid_points: usize) -> Outcome {
    if r == 0 {
        return Err(Failure::parse("--r must be at least 1"));
    }
    let [m1, m2, m3] = [load_metric(cli, files[0])?, load_metric(cli, files[1])?, load_metric(cli, files[2])?];
    let opts = StabilityOptions {
        grid_points,
        ..StabilityOptions::default()
    };
    let grid = scan_triangle(&m1, &m2, &m3, r, &opts).map_err(|e| Failure::new(3, e.to_string()))?;
    if let Some(svg_path) = svg {
        let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let labels = [stem(files[0]), stem(files[1]), stem(files[2])];
        let picture = grid_svg(&grid, [&labels[0], &labels[1], &labels[2]]);
        write_atomic(svg_path, picture.as_bytes())
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", svg_path.display())))?;
    }
    if cli.json {
        let cells: Vec<Value> = grid
            .cells
            .iter()
            .map(|c| json!({"alpha": c.alpha, "beta": c.beta, "gamma": c.gamma, "stable": c.stable, "index": c.index}))
            .collect();
        return Ok(to_json(&json!({"resolution": r, "cells": cells})));
    }
    Ok(grid_csv(&grid.cells))
}
