//! Command-line entry points.
//!
//! Exit codes: 0 success, 2 invalid input (flags, files, parameters),
//! 3 runtime failure. Seeds are voxel indices, not millimetres.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use templatecut_core::graph::{NodeWeights, RayGraph};
use templatecut_core::{
    align_shapes, cast_rays, cost, estimate_delta, evaluate, fit_pca, iterate_seed, normalize_template, segment, summarize,
    Dim, EvalReport, RaySampling, Rotation, ScalarField, SegmentConfig, TemplateShape, Vec3,
};

use crate::formats;
use crate::io;
use crate::params::{builtin_template, seed_quality, seed_to_world, SegmentParams};
use crate::phantom::{make_phantom, PhantomSpec};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "templatecut", version, about = "Template-based graph-cut segmentation")]
pub struct Cli {
    /// JSON-lines run log (appended).
    #[arg(long, global = true, env = "TEMPLATECUT_LOG", default_value = "templatecut-runs.jsonl")]
    pub log: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image or volume from a seed point.
    Segment(SegmentArgs),
    /// Compare masks by Dice overlap and volume.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic field and its ground-truth mask.
    Phantom(PhantomArgs),
    /// Build a statistical shape model from landmark files.
    TrainShape(TrainArgs),
    /// Run the HTTP service.
    Serve(crate::service::ServeArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// PGM image or volume header.
    #[arg(long)]
    pub input: PathBuf,
    /// Template file (TPL2/TPL3) or built-in name: circle, ellipse, square, star, icosphere.
    #[arg(long)]
    pub template: String,
    /// Seed in voxel indices: x,y or x,y,z.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub seed: Vec<f64>,
    /// Ray count (3D: an icosphere vertex count).
    #[arg(long)]
    pub rays: Option<usize>,
    /// Icosphere level for 3D rays.
    #[arg(long)]
    pub level: Option<u32>,
    /// Nodes per ray.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Smoothness: largest index change between neighbouring rays.
    #[arg(long)]
    pub delta: Option<usize>,
    /// Graph reach as a multiple of the template size.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Side length of the averaging window around the seed, mm.
    #[arg(long)]
    pub avg_window: Option<f64>,
    /// Template size in mm (default: a quarter of the smallest field extent).
    #[arg(long)]
    pub template_scale: Option<f64>,
    /// Template rotation about z, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub rotation: Option<f64>,
    #[arg(long)]
    pub out_mask: PathBuf,
    #[arg(long)]
    pub out_contour: Option<PathBuf>,
    /// Re-seed at the mask centroid up to N times.
    #[arg(long)]
    pub iterate: Option<usize>,
    /// Centroid shift (voxels) below which iteration stops.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Write the flow network in DIMACS form.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, requires = "reference", conflicts_with = "batch")]
    pub auto: Option<PathBuf>,
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// CSV with header `case,auto,ref`; paths relative to the list file.
    #[arg(long, required_unless_present = "auto")]
    pub batch: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out_field: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Landmark files (TPL2/TPL3) with corresponding vertices.
    #[arg(long, num_args = 1.., required = true)]
    pub shapes: Vec<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Mean shape as a template file.
    #[arg(long)]
    pub out_template: PathBuf,
    /// Mode amplitude, in standard deviations, covered by the suggested delta.
    #[arg(long, default_value_t = 2.0)]
    pub mode_sigma: f64,
    #[arg(long)]
    pub rays: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,
}

/// Failure with its exit code and one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<templatecut_core::Error> for Failure {
    fn from(e: templatecut_core::Error) -> Self {
        Failure { code: if e.is_validation() { EXIT_INVALID } else { EXIT_RUNTIME }, message: e.to_string() }
    }
}

impl From<io::IoError> for Failure {
    fn from(e: io::IoError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<formats::FormatError> for Failure {
    fn from(e: formats::FormatError) -> Self {
        match e {
            formats::FormatError::Core(c) => c.into(),
            other => Failure::invalid(other.to_string()),
        }
    }
}

/// Everything a command reports: stdout text plus fields for the run log.
#[derive(Default)]
struct Outcome {
    stdout: String,
    log: serde_json::Map<String, Value>,
    timings: serde_json::Map<String, Value>,
}

impl Outcome {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(stage.into(), json!(t.elapsed().as_secs_f64() * 1000.0));
        out
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            // Usage errors are logged too, to the path the flags would have chosen.
            let log = std::env::var_os("TEMPLATECUT_LOG").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("templatecut-runs.jsonl"));
            let record = json!({
                "command": argv.get(1).map(|a| a.to_string_lossy()),
                "version": env!("CARGO_PKG_VERSION"),
                "args": argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
                "exit_code": EXIT_INVALID,
                "error": e.kind().to_string(),
            });
            let _ = append_log(&log, &record);
            return EXIT_INVALID;
        }
    };
    if let Command::Serve(args) = cli.command {
        return match crate::service::serve(args) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_RUNTIME
            }
        };
    }
    let started = Instant::now();
    let mut outcome = Outcome::default();
    let (name, result) = match &cli.command {
        Command::Segment(a) => ("segment", cmd_segment(a, &mut outcome)),
        Command::Evaluate(a) => ("evaluate", cmd_evaluate(a, &mut outcome)),
        Command::Phantom(a) => ("phantom", cmd_phantom(a, &mut outcome)),
        Command::TrainShape(a) => ("train-shape", cmd_train_shape(a, &mut outcome)),
        Command::Serve(_) => unreachable!(),
    };
    let code = match &result {
        Ok(()) => {
            print!("{}", outcome.stdout);
            let _ = std::io::stdout().flush();
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    outcome.timings.insert("total".into(), json!(started.elapsed().as_secs_f64() * 1000.0));
    let mut record = serde_json::Map::new();
    record.insert("command".into(), json!(name));
    record.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    record.insert("args".into(), json!(argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>()));
    record.insert("exit_code".into(), json!(code));
    if let Err(f) = &result {
        record.insert("error".into(), json!(f.message));
    }
    record.insert("timings_ms".into(), Value::Object(outcome.timings));
    record.extend(outcome.log);
    if let Err(e) = append_log(&cli.log, &Value::Object(record)) {
        eprintln!("error: cannot write run log {}: {e}", cli.log.display());
        if code == EXIT_OK {
            return EXIT_RUNTIME;
        }
    }
    code
}

fn append_log(path: &Path, record: &Value) -> std::io::Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{record}")
}

fn load_template(spec: &str) -> Result<TemplateShape, Failure> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("Io: {spec}: {e}")))?;
        return Ok(formats::parse_template(&text)?);
    }
    builtin_template(spec).ok_or_else(|| Failure::invalid(format!("UnknownTemplate: {spec:?} is neither a file nor a built-in")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure { code: EXIT_RUNTIME, message: format!("Io: {}: {e}", path.display()) })
}

fn cmd_segment(a: &SegmentArgs, out: &mut Outcome) -> Result<(), Failure> {
    let field = out.time("load", || io::read_field(&a.input))?;
    let template = load_template(&a.template)?;
    let dim = field.grid.dim;
    let params = SegmentParams {
        rays: a.rays,
        level: a.level,
        nodes: a.nodes,
        delta: a.delta,
        scale: a.scale,
        avg_window: a.avg_window,
        template_scale: a.template_scale,
        rotation: a.rotation,
    };
    let config = params.to_config(dim).map_err(Failure::invalid)?;
    let seed = seed_to_world(&a.seed, field.grid.spacing, dim).map_err(Failure::invalid)?;
    if a.iterate == Some(0) {
        return Err(Failure::invalid("InvalidConfig: --iterate needs at least 1"));
    }
    if !(a.eps > 0.0) {
        return Err(Failure::invalid("InvalidConfig: --eps must be positive"));
    }

    let (result, trace) = out.time("segment", || -> Result<_, Failure> {
        match a.iterate {
            Some(n) => {
                let o = iterate_seed(&field, &template, seed, &config, n, a.eps * field.grid.min_spacing())?;
                let trace: Vec<Value> = o
                    .trace
                    .iter()
                    .map(|s| json!({"seed": s.seed.to_array(), "centroid": s.centroid.to_array(), "shift": s.shift}))
                    .collect();
                Ok((o.result, Some((trace, o.converged))))
            }
            None => Ok((segment(&field, &template, seed, &config)?, None)),
        }
    })?;

    if let Some(path) = &a.dump_graph {
        out.time("dump_graph", || -> Result<(), Failure> {
            let net = rebuild_network(&field, &template, result.seed, &config)?;
            write_file(path, formats::write_dimacs(&net).as_bytes())
        })?;
    }
    out.time("write", || -> Result<(), Failure> {
        io::write_mask(&result.mask, &a.out_mask).map_err(|e| Failure { code: EXIT_RUNTIME, message: e.to_string() })?;
        if let Some(c) = &a.out_contour {
            write_file(c, formats::write_contour(&result.contour).as_bytes())?;
        }
        Ok(())
    })?;

    let (lo, hi) = result.boundary_range();
    let runtime = out.timings.get("segment").and_then(Value::as_f64).unwrap_or(0.0);
    let quality = seed_quality(result.seed_window);
    out.stdout = format!(
        "cut_value={} boundary_min={lo} boundary_max={hi} runtime_ms={runtime:.1} voxels={} volume_cm={} seed_quality={quality} partial={}\n",
        result.cut_value,
        result.stats.voxel_count,
        result.stats.volume_cm(dim),
        result.is_partial(),
    );
    out.log.insert("cut_value".into(), json!(result.cut_value));
    out.log.insert("flow_value".into(), json!(result.flow_value));
    out.log.insert("boundary_min".into(), json!(lo));
    out.log.insert("boundary_max".into(), json!(hi));
    out.log.insert("voxels".into(), json!(result.stats.voxel_count));
    out.log.insert("seed_world".into(), json!(result.seed.to_array()));
    out.log.insert("avg_value".into(), json!(result.avg_value));
    out.log.insert("seed_quality".into(), json!(quality));
    out.log.insert("rays".into(), json!(result.fan.len()));
    out.log.insert("nodes".into(), json!(result.nodes_per_ray));
    out.log.insert("delta".into(), json!(result.delta));
    out.log.insert("scale_max".into(), json!(result.scale_max));
    out.log.insert("template_scale".into(), json!(result.fan.scale));
    out.log.insert("empty_rays".into(), json!(result.empty_rays));
    if let Some((trace, converged)) = trace {
        out.log.insert("iterations".into(), json!(trace));
        out.log.insert("converged".into(), json!(converged));
    }
    Ok(())
}

/// The flow network a segmentation run solves, for external cross-checks.
pub fn rebuild_network(
    field: &ScalarField,
    template: &TemplateShape,
    seed: Vec3,
    config: &SegmentConfig,
) -> Result<templatecut_core::FlowNetwork, templatecut_core::Error> {
    let fan = cast_rays(template, seed, config.sampling_for(field.grid.dim), &config.orientation)?
        .with_scale(config.template_scale_for(&field.grid));
    let p = config.nodes_for(field.grid.dim);
    let mut params = cost::CostParams::new(config.avg_window_for(field));
    params.estimate(field, seed)?;
    let mut graph = RayGraph::new(&fan, p, config.scale_max, config.delta)?;
    let costs = graph.node_pos.iter().map(|&q| cost::node_cost(field, &params, q)).collect::<Result<Vec<_>, _>>()?;
    let mut w = NodeWeights::from_costs(&costs, p)?;
    w.anchor_base_layer();
    graph.add_terminal_arcs(&w)?;
    Ok(graph.to_flow_network())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut Outcome) -> Result<(), Failure> {
    let cases: Vec<(String, PathBuf, PathBuf)> = match (&a.auto, &a.reference, &a.batch) {
        (Some(auto), Some(r), None) => vec![("case".into(), auto.clone(), r.clone())],
        (None, None, Some(list)) => read_batch(list)?,
        _ => return Err(Failure::invalid("give --auto with --ref, or --batch")),
    };
    let reports: Vec<(String, EvalReport)> = out.time("evaluate", || {
        cases
            .par_iter()
            .map(|(name, auto, r)| -> Result<_, Failure> {
                let a = io::read_mask(auto)?;
                let b = io::read_mask(r)?;
                Ok((name.clone(), evaluate(&a, &b)?))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = if reports.len() > 1 {
        Some(summarize(&reports.iter().map(|(_, r)| *r).collect::<Vec<_>>())?)
    } else {
        None
    };
    out.stdout = report::table(&reports, summary.as_ref());
    if let Some(path) = &a.csv {
        write_file(path, report::csv(&reports).as_bytes())?;
    }
    out.log.insert(
        "cases".into(),
        json!(reports.iter().map(|(n, r)| json!({"case": n, "dsc": r.dsc, "vol_auto": r.vol_auto, "vol_ref": r.vol_ref, "voxels_auto": r.voxels_auto, "voxels_ref": r.voxels_ref, "both_empty": r.both_empty})).collect::<Vec<_>>()),
    );
    if let Some(s) = &summary {
        let d = s.columns[0];
        out.log.insert("dsc_summary".into(), json!({"min": d.min, "max": d.max, "mean": d.mean, "std": d.std}));
    }
    Ok(())
}

fn read_batch(list: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, Failure> {
    let text = fs::read_to_string(list).map_err(|e| Failure::invalid(format!("Io: {}: {e}", list.display())))?;
    let base = list.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("case,auto,ref") {
        return Err(Failure::invalid("ParseError: batch list must start with the header case,auto,ref"));
    }
    let cases: Vec<_> = lines
        .map(|l| {
            let parts: Vec<&str> = l.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [name, auto, r] => Ok((name.to_string(), base.join(auto), base.join(r))),
                _ => Err(Failure::invalid(format!("ParseError: bad batch line {l:?}"))),
            }
        })
        .collect::<Result<_, _>>()?;
    if cases.is_empty() {
        return Err(templatecut_core::Error::EmptySet.into());
    }
    Ok(cases)
}

fn cmd_phantom(a: &PhantomArgs, out: &mut Outcome) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.spec).map_err(|e| Failure::invalid(format!("Io: {}: {e}", a.spec.display())))?;
    let spec = PhantomSpec::parse(&text).map_err(|e| Failure::invalid(e.to_string()))?;
    let (field, truth) = out.time("generate", || make_phantom(&spec)).map_err(|e| Failure::invalid(e.to_string()))?;
    io::write_field(&field, spec.elem, &a.out_field).map_err(|e| Failure { code: EXIT_RUNTIME, message: e.to_string() })?;
    io::write_mask(&truth, &a.out_truth).map_err(|e| Failure { code: EXIT_RUNTIME, message: e.to_string() })?;
    let c = spec.center_voxel();
    let center = match spec.kind.dim() {
        Dim::Two => format!("{},{}", c[0], c[1]),
        Dim::Three => format!("{},{},{}", c[0], c[1], c[2]),
    };
    out.stdout = format!("kind={} truth_voxels={} center={center}\n", spec.kind.token(), truth.count());
    out.log.insert("truth_voxels".into(), json!(truth.count()));
    Ok(())
}

fn cmd_train_shape(a: &TrainArgs, out: &mut Outcome) -> Result<(), Failure> {
    let mut sets = Vec::new();
    for path in &a.shapes {
        let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("Io: {}: {e}", path.display())))?;
        sets.push(formats::parse_template_points(&text)?);
    }
    let dim = sets[0].dim;
    if let Some(bad) = sets.iter().find(|s| s.dim != dim) {
        return Err(templatecut_core::Error::DimensionMismatch { expected: dim.as_usize(), got: bad.dim.as_usize() }.into());
    }
    let shapes: Vec<Vec<Vec3>> = sets.iter().map(|s| s.vertices.clone()).collect();
    let model = out.time("train", || -> Result<_, Failure> {
        let aligned = align_shapes(&shapes, dim)?;
        Ok(fit_pca(&aligned, dim)?)
    })?;
    let faces = sets[0].faces.clone();
    let mean = model.mean_points();
    let template = normalize_template(dim, &mean, &faces)?;
    let sampling = match dim {
        Dim::Two => RaySampling::Planar(a.rays.unwrap_or(templatecut_core::pipeline::DEFAULT_RAYS_2D)),
        Dim::Three => {
            let p = SegmentParams { rays: a.rays, ..Default::default() };
            p.to_config(dim).map_err(Failure::invalid)?.sampling_for(dim)
        }
    };
    let defaults = SegmentConfig::default();
    let nodes = a.nodes.unwrap_or(defaults.nodes_for(dim));
    let scale = a.scale.unwrap_or(defaults.scale_max);
    let fan = cast_rays(&template, Vec3::ZERO, sampling, &Rotation::IDENTITY)?;
    let delta = estimate_delta(&model, &fan, nodes, scale, a.mode_sigma)?;

    write_file(&a.out_model, formats::write_shape_model(&model).as_bytes())?;
    write_file(&a.out_template, formats::write_template(dim, &mean, &faces).as_bytes())?;
    out.stdout = format!(
        "shapes={} landmarks={} modes={} suggested_delta={delta}\n",
        shapes.len(),
        model.landmarks,
        model.mode_count()
    );
    out.log.insert("modes".into(), json!(model.mode_count()));
    out.log.insert("eigenvalues".into(), json!(model.eigenvalues));
    out.log.insert("suggested_delta".into(), json!(delta));
    Ok(())
}

