use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use wachspress::experiments::{
    csv_string, degeneration_fits, emit_csv, emit_svg_scatter, fits_vs_hk, max_lambda_per_n, mesh_stats_tables,
    run_degeneration, run_scaling_vs_hk, run_scaling_vs_n, spearman, svg_scatter, DegenerationConfig,
    DegenerationRecord, ScalingHkConfig, ScalingNConfig, ScalingRecord, Table,
};
use wachspress::polygen::{
    cvt_from_sites, cvt_mesh, eliminate_short_edges, family_k, mesh_stats, random_convex_polygon, Family,
};
use wachspress::{MultiIndex, PolyMesh, Polytope, RngStream, ShapeReport, Thresholds, WachspressBasis};

#[derive(Parser, Debug)]
#[command(name = "wachspress", version, about = "Wachspress coordinates, derivatives, bounds and experiments")]
struct Cli {
    /// Seed for random generators; overrides the seed in experiment configs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampling density; overrides the density in experiment configs.
    #[arg(long, global = true)]
    density: Option<usize>,
    /// JSON file with shape-regularity threshold overrides.
    #[arg(long, global = true, value_name = "FILE")]
    thresholds: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a polygon file and print its shape report.
    Validate { polygon: PathBuf },
    /// Evaluate coordinates or one partial derivative at a point.
    Eval {
        polygon: PathBuf,
        #[arg(long, value_name = "X,Y")]
        point: String,
        #[arg(long, value_name = "I,J")]
        alpha: Option<String>,
        /// Zero-based vertex index; all vertices if omitted.
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Print det M bounds, the weight-sum lower bound and the certified derivative bound.
    Bounds {
        polygon: PathBuf,
        #[arg(long, value_name = "I,J")]
        alpha: String,
    },
    /// Generate random polygons, a CVT mesh or a degeneration-family polygon.
    Gen(GenArgs),
    /// Shape statistics of every cell of a mesh file.
    Audit {
        mesh: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run one of the scaling studies.
    Experiment {
        name: Experiment,
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("kind").required(true).args(["random", "cvt", "family"])))]
struct GenArgs {
    /// Number of random polygons.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    /// Number of CVT cells in the unit square.
    #[arg(long, value_name = "N")]
    cvt: Option<usize>,
    /// Degeneration family K1, K2 or K3.
    #[arg(long, requires = "a")]
    family: Option<String>,
    /// Family parameter in (0, 1).
    #[arg(long)]
    a: Option<f64>,
    /// Points whose hull forms each random polygon.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// JSON array of initial CVT sites.
    #[arg(long, value_name = "FILE", requires = "cvt")]
    sites: Option<PathBuf>,
    #[arg(long, default_value_t = 200, requires = "cvt")]
    iters: usize,
    #[arg(long, default_value_t = 1e-6, requires = "cvt")]
    tol: f64,
    /// Collapse CVT edges shorter than `ratio · sqrt(area / n)`.
    #[arg(long, requires = "cvt")]
    fix_short_edges: bool,
    #[arg(long, default_value_t = 0.15)]
    ratio: f64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    #[value(name = "vs-hK", alias = "vs-hk")]
    VsHk,
    #[value(name = "vs-n")]
    VsN,
    #[value(name = "degeneration")]
    Degeneration,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(wachspress::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_geometry() => 2,
            CliError::Core(wachspress::Error::Unsupported(_)) => 2,
            CliError::Core(wachspress::Error::OutsideDomain(_)) => 3,
            CliError::Core(
                wachspress::Error::Io(_) | wachspress::Error::Json(_) | wachspress::Error::Csv(_),
            ) => 4,
            CliError::Core(_) => 1,
            CliError::Io(..) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<wachspress::Error> for CliError {
    fn from(e: wachspress::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Io(path.to_path_buf(), e.into()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn parse_list<T: std::str::FromStr>(s: &str, len: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(CliError::Usage(format!("{what} needs {len} comma-separated values, got {s:?}")));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| CliError::Usage(format!("bad {what} component {p:?}"))))
        .collect()
}

fn parse_alpha(s: &str) -> Result<MultiIndex> {
    Ok(MultiIndex::new(parse_list(s, 2, "alpha")?))
}

fn load_polygon(path: &Path) -> Result<Polytope> {
    Ok(Polytope::from_json_str(&read(path)?)?)
}

fn load_thresholds(cli: &Cli) -> Result<Thresholds> {
    cli.thresholds.as_deref().map_or(Ok(Thresholds::default()), parse_json)
}

fn validate(cli: &Cli, polygon: &Path) -> Result<String> {
    let t = load_thresholds(cli)?;
    match load_polygon(polygon) {
        Ok(p) => {
            let report = ShapeReport::compute(&p, &t)?;
            Ok(to_json(&json!({ "valid": true, "report": report })))
        }
        Err(CliError::Core(e)) if e.is_geometry() => {
            println!("{}", to_json(&json!({ "valid": false, "violations": [e.to_string()] })));
            Err(CliError::Core(e))
        }
        Err(e) => Err(e),
    }
}

fn eval(polygon: &Path, point: &str, alpha: Option<&str>, vertex: Option<usize>) -> Result<String> {
    let p = load_polygon(polygon)?;
    let x: Vec<f64> = parse_list(point, p.dim(), "point")?;
    let alpha = alpha.map(parse_alpha).transpose()?.unwrap_or_else(|| MultiIndex::zeros(p.dim()));
    if alpha.dim() != p.dim() {
        return Err(CliError::Usage(format!("alpha must have {} components", p.dim())));
    }
    let b = WachspressBasis::new(&p);
    if !b.contains(&x) {
        return Err(wachspress::Error::OutsideDomain(x).into());
    }
    match vertex {
        Some(v) if v >= p.num_vertices() => Err(CliError::Usage(format!(
            "vertex {v} out of range 0..{}",
            p.num_vertices()
        ))),
        Some(v) => Ok(to_json(&b.d_phi_at(v, &alpha, &x))),
        None => Ok(to_json(&b.d_phi_all(&alpha, &x))),
    }
}

#[derive(Serialize)]
struct DetMRow {
    vertex: usize,
    value: f64,
    lower: f64,
    upper: f64,
}

fn bounds(polygon: &Path, alpha: &str) -> Result<String> {
    let p = load_polygon(polygon)?;
    let alpha = parse_alpha(alpha)?;
    let b = WachspressBasis::new(&p);
    let det_m = (0..p.num_vertices())
        .map(|v| {
            let (lower, value, upper) = b.detm_bounds(v)?;
            Ok(DetMRow { vertex: v, value, lower, upper })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(to_json(&json!({
        "det_m": det_m,
        "w_lower_bound": b.w_lower_bound(),
        "certified_dphi_bound": b.certified_dphi_bound(&alpha),
    })))
}

fn gen(cli: &Cli, args: &GenArgs) -> Result<String> {
    create_dir(&args.out)?;
    let seed = cli.seed.unwrap_or(0);
    if let Some(n) = args.random {
        let root = RngStream::new(seed);
        for i in 0..n {
            let p = random_convex_polygon(&mut root.substream(i as u64), args.points);
            let path = args.out.join(format!("polygon_{i:04}.json"));
            write(&path, &to_json(&p.to_json()))?;
        }
        return Ok(to_json(&json!({ "polygons": n, "seed": seed })));
    }
    if let Some(n) = args.cvt {
        let mesh = match &args.sites {
            Some(path) => {
                let sites: Vec<[f64; 2]> = parse_json(path)?;
                if sites.len() != n {
                    return Err(CliError::Usage(format!("{} sites given for {n} cells", sites.len())));
                }
                cvt_from_sites(&sites, args.iters, args.tol)?.mesh
            }
            None => cvt_mesh(n, &mut RngStream::new(seed), args.iters, args.tol)?,
        };
        let mut summary = json!({ "cells": mesh.num_cells(), "vertices": mesh.vertices.len(), "seed": seed });
        let mesh = if args.fix_short_edges {
            let out = eliminate_short_edges(&mesh, args.ratio)?;
            summary["collapsed"] = out.collapsed.into();
            summary["merged_collinear"] = out.merged_collinear.into();
            summary["skipped"] = out.skipped.len().into();
            summary["vertices"] = out.mesh.vertices.len().into();
            out.mesh
        } else {
            mesh
        };
        write(&args.out.join("mesh.json"), &mesh.to_json_string()?)?;
        return Ok(to_json(&summary));
    }
    let family: Family = args.family.as_deref().unwrap_or_default().parse()?;
    let a = args.a.ok_or_else(|| CliError::Usage("--family needs --a".into()))?;
    let p = family_k(family, a)?;
    let name = format!("{family:?}").to_lowercase();
    write(&args.out.join(format!("{name}.json")), &to_json(&p.to_json()))?;
    Ok(to_json(&json!({ "family": family, "a": a, "h_star": p.h_star() })))
}

fn audit(cli: &Cli, mesh: &Path, out: &Path) -> Result<String> {
    let t = load_thresholds(cli)?;
    let mesh = PolyMesh::from_json_str(&read(mesh)?)?;
    mesh.validate()?;
    let stats = mesh_stats(&mesh, &t)?;
    let (cells, ngons) = mesh_stats_tables(&stats);
    create_dir(out)?;
    emit_csv(&cells, &out.join("cells.csv"))?;
    emit_csv(&stats.ratio_histogram, &out.join("ratio_histogram.csv"))?;
    emit_csv(&ngons, &out.join("ngon_counts.csv"))?;
    emit_svg_scatter(&stats.ratio_histogram, "lo", "count", false, &out.join("ratio_histogram.svg"))?;
    emit_svg_scatter(&ngons, "n", "count", false, &out.join("ngon_counts.svg"))?;
    Ok(to_json(&json!({
        "cells": mesh.num_cells(),
        "min_ratio": stats.min_ratio(),
        "max_ratio": stats.max_ratio(),
        "modal_ngon": stats.modal_ngon(),
    })))
}

fn config_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or(Ok(T::default()), parse_json)
}

fn alpha_tag(a: &MultiIndex) -> String {
    a.components().iter().map(u32::to_string).collect::<Vec<_>>().join("")
}

/// Maximum of `Λ_α` over polygons with `n` vertices.
struct PerN {
    alpha: MultiIndex,
    n: usize,
    max_lambda: f64,
}

impl Table for PerN {
    fn header() -> Vec<&'static str> {
        vec!["alpha_x", "alpha_y", "n_vertices", "max_lambda"]
    }

    fn row(&self) -> Vec<String> {
        let c = self.alpha.components();
        vec![c[0].to_string(), c[1].to_string(), self.n.to_string(), format!("{:e}", self.max_lambda)]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        match field {
            "n_vertices" => Some(self.n as f64),
            "max_lambda" => Some(self.max_lambda),
            _ => None,
        }
    }
}

/// One vertex's maximum at one degeneration step.
struct VertexRow {
    derivative: String,
    step: u32,
    h_star: f64,
    vertex: usize,
    incident: bool,
    max: f64,
}

impl Table for VertexRow {
    fn header() -> Vec<&'static str> {
        vec!["derivative", "step", "h_star", "vertex", "incident", "max"]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.derivative.clone(),
            self.step.to_string(),
            format!("{:e}", self.h_star),
            self.vertex.to_string(),
            self.incident.to_string(),
            format!("{:e}", self.max),
        ]
    }

    fn numeric(&self, field: &str) -> Option<f64> {
        match field {
            "h_star" => Some(self.h_star),
            "max" => Some(self.max),
            _ => None,
        }
    }
}

fn scaling_alphas(records: &[ScalingRecord]) -> Vec<MultiIndex> {
    let mut out: Vec<MultiIndex> = Vec::new();
    for r in records {
        if !out.contains(&r.alpha) {
            out.push(r.alpha.clone());
        }
    }
    out
}

fn records_for(records: &[ScalingRecord], a: &MultiIndex) -> Vec<ScalingRecord> {
    records.iter().filter(|r| &r.alpha == a).cloned().collect()
}

fn experiment(cli: &Cli, name: Experiment, config: Option<&Path>, out: &Path) -> Result<String> {
    create_dir(out)?;
    match name {
        Experiment::VsHk => {
            let mut cfg: ScalingHkConfig = config_or_default(config)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.density = cli.density.unwrap_or(cfg.density);
            let records = run_scaling_vs_hk(&cfg)?;
            write(&out.join("vs_hk.csv"), &csv_string(&records)?)?;
            let alphas = scaling_alphas(&records);
            for a in &alphas {
                let svg = svg_scatter(&records_for(&records, a), "h_k", "lambda", true);
                write(&out.join(format!("vs_hk_a{}.svg", alpha_tag(a))), &svg)?;
            }
            let fits = fits_vs_hk(&records, &alphas);
            let json = to_json(&json!({ "experiment": "vs-hK", "config": cfg, "fits": fits }));
            write(&out.join("fits.json"), &json)?;
            Ok(json)
        }
        Experiment::VsN => {
            let mut cfg: ScalingNConfig = config_or_default(config)?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            cfg.density = cli.density.unwrap_or(cfg.density);
            let records = run_scaling_vs_n(&cfg)?;
            write(&out.join("vs_n.csv"), &csv_string(&records)?)?;
            let mut per_n = Vec::new();
            let mut summary = Vec::new();
            for a in scaling_alphas(&records) {
                let rows: Vec<PerN> = max_lambda_per_n(&records, &a)
                    .into_iter()
                    .map(|(n, max_lambda)| PerN { alpha: a.clone(), n, max_lambda })
                    .collect();
                let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
                let ms: Vec<f64> = rows.iter().map(|r| r.max_lambda).collect();
                summary.push(json!({
                    "label": format!("D{a}"),
                    "per_n": rows.iter().map(|r| json!([r.n, r.max_lambda])).collect::<Vec<_>>(),
                    "spearman": spearman(&ns, &ms),
                }));
                let svg = svg_scatter(&records_for(&records, &a), "n_vertices", "lambda", false);
                write(&out.join(format!("vs_n_a{}.svg", alpha_tag(&a))), &svg)?;
                per_n.extend(rows);
            }
            write(&out.join("vs_n_summary.csv"), &csv_string(&per_n)?)?;
            let json = to_json(&json!({ "experiment": "vs-n", "config": cfg, "summary": summary }));
            write(&out.join("fits.json"), &json)?;
            Ok(json)
        }
        Experiment::Degeneration => {
            let mut cfg: DegenerationConfig = config_or_default(config)?;
            cfg.density = cli.density.unwrap_or(cfg.density);
            let records = run_degeneration(&cfg)?;
            write(&out.join("degeneration.csv"), &csv_string(&records)?)?;
            let mut labels: Vec<String> = Vec::new();
            for r in &records {
                let l = r.derivative.label();
                if !labels.contains(&l) {
                    labels.push(l);
                }
            }
            for (i, l) in labels.iter().enumerate() {
                let series: Vec<DegenerationRecord> =
                    records.iter().filter(|r| &r.derivative.label() == l).cloned().collect();
                let svg = svg_scatter(&series, "h_star", "lambda", true);
                write(&out.join(format!("degeneration_{i:02}.svg")), &svg)?;
            }
            let vertices: Vec<VertexRow> = records
                .iter()
                .flat_map(|r| {
                    r.per_vertex_max.iter().enumerate().map(move |(v, &max)| VertexRow {
                        derivative: r.derivative.label(),
                        step: r.step,
                        h_star: r.h_star,
                        vertex: v + 1,
                        incident: v < 2,
                        max,
                    })
                })
                .collect();
            write(&out.join("degeneration_vertices.csv"), &csv_string(&vertices)?)?;
            let fits = degeneration_fits(&records);
            let json = to_json(&json!({ "experiment": "degeneration", "config": cfg, "derivatives": labels, "fits": fits }));
            write(&out.join("fits.json"), &json)?;
            Ok(json)
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Validate { polygon } => validate(cli, polygon),
        Command::Eval { polygon, point, alpha, vertex } => eval(polygon, point, alpha.as_deref(), *vertex),
        Command::Bounds { polygon, alpha } => bounds(polygon, alpha),
        Command::Gen(args) => gen(cli, args),
        Command::Audit { mesh, out } => audit(cli, mesh, out),
        Command::Experiment { name, config, out } => experiment(cli, *name, config.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
