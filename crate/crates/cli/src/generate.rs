use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use foamforge_api::{
    foam_bytes, foam_file_name, slice_file_name, slice_svg_bytes, slices_json_bytes, GapSummary, GenerateReport, OptimizeRequest,
    ParamsPatch, Region, SessionParams, REPORT_SCHEMA_VERSION, TIMING_SCOPE,
};
use foamforge_client::FoamClient;
use foamforge_core::pipeline::{generate, prepare_mesh};
use foamforge_core::{optimize_rotation, EulerAngles, OptimizerConfig, OutputFormat, Parallelism, ScoreReport};

use crate::{read_mesh, CliError, CliResult, Threads, Triple};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Mesh to wrap (.stl, .ply or .obj).
    #[arg(long)]
    input: PathBuf,
    /// Blocks along x, y and z.
    #[arg(long, default_value = "30x18x18")]
    res: Triple<u32>,
    /// Block edge lengths in mm.
    #[arg(long, default_value = "15x15x22")]
    block: Triple<f64>,
    /// Rotation about x, y, z in degrees, applied in that order.
    #[arg(long, default_value = "0,0,0", value_parser = parse_angles, allow_hyphen_values = true)]
    angles: EulerAngles,
    /// Search for a better pose first, starting from --angles.
    #[arg(long)]
    optimize: bool,
    #[arg(long, default_value_t = 5.0)]
    optimize_step: f64,
    #[arg(long, default_value_t = 10)]
    optimize_rounds: u32,
    /// Depth texels per block edge.
    #[arg(long, default_value_t = 8)]
    supersample: u32,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = FoamFormat::Stl)]
    format: FoamFormat,
    #[arg(long, value_enum, default_value_t = SliceFormat::Svg)]
    slices: SliceFormat,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    #[arg(long, value_enum, default_value_t = Threads::Multi)]
    threads: Threads,
    /// Run through a foamforge service at this URL instead of in process.
    #[arg(long)]
    server: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FoamFormat {
    Stl,
    Ply,
}

impl FoamFormat {
    fn output(self) -> OutputFormat {
        match self {
            FoamFormat::Stl => OutputFormat::StlBinary,
            FoamFormat::Ply => OutputFormat::PlyAscii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SliceFormat {
    Svg,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    None,
}

fn parse_angles(s: &str) -> Result<EulerAngles, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad angle {p:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [psi, theta, phi] if v.iter().all(|a| a.is_finite()) => Ok(EulerAngles::new(psi, theta, phi)),
        _ => Err(format!("expected three finite angles like 0,15,90, got {s:?}")),
    }
}

/// Everything that ends up on disk, by path relative to the output dir.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    summary: Summary,
}

struct Summary {
    params: SessionParams,
    f: f64,
    counts: foamforge_core::block_map::LabelCounts,
    one_sided_columns: usize,
    gap: GapSummary,
    timing_ms: f64,
    optimize: Option<ScoreReport>,
}

pub fn run(args: GenerateArgs) -> CliResult<()> {
    let params = SessionParams {
        resolution: args.res.0,
        block_size_mm: args.block.0,
        angles_deg: args.angles,
        supersample: args.supersample,
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let opt = OptimizerConfig {
        step: args.optimize_step,
        max_rounds: args.optimize_rounds,
    };
    if args.optimize {
        opt.candidates().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let optimize = args.optimize.then_some(opt);

    let outputs = match &args.server {
        None => run_local(&args, params, optimize)?,
        Some(url) => run_remote(&args, url, params, optimize)?,
    };
    write_outputs(&args, outputs)
}

fn run_local(args: &GenerateArgs, mut params: SessionParams, optimize: Option<OptimizerConfig>) -> CliResult<Outputs> {
    let (_, _, mesh) = read_mesh(&args.input)?;
    let mesh = prepare_mesh(&mesh).map_err(|e| CliError::Input(e.to_string()))?;
    let par = match args.threads {
        Threads::Single => Parallelism::Sequential,
        Threads::Multi => Parallelism::Parallel,
    };
    let score = match optimize {
        Some(cfg) => {
            let space = params.space().map_err(|e| CliError::Usage(e.to_string()))?;
            let report = optimize_rotation(&mesh, &space, &cfg, params.angles_deg, params.supersample, par)?;
            params.angles_deg = report.angles;
            Some(report)
        }
        None => None,
    };
    let gp = params.generate_params().map_err(|e| CliError::Usage(e.to_string()))?;
    let result = generate(&mesh, &gp, par)?;

    let format = args.format.output();
    let mut files = Vec::new();
    for region in Region::BOTH {
        files.push((foam_file_name(region, format), foam_bytes(&result, region, format)));
    }
    match args.slices {
        SliceFormat::Json => files.push(("slices/slices.json".into(), slices_json_bytes(&result.slices))),
        SliceFormat::Svg => {
            for i in 0..result.slices.len() {
                let svg = slice_svg_bytes(&result.slices, i).expect("layer in range");
                files.push((format!("slices/{}", slice_file_name(i)), svg));
            }
        }
    }
    let counts = result.counts();
    Ok(Outputs {
        files,
        summary: Summary {
            params,
            f: result.score(),
            counts,
            one_sided_columns: result.block_map.one_sided_columns(),
            gap: (&result.gap).into(),
            timing_ms: result.timing_ms,
            optimize: score,
        },
    })
}

fn run_remote(args: &GenerateArgs, url: &str, params: SessionParams, optimize: Option<OptimizerConfig>) -> CliResult<Outputs> {
    let (bytes, _, _) = read_mesh(&args.input)?;
    let file_name = args
        .input
        .file_name()
        .map_or_else(|| "model".into(), |n| n.to_string_lossy().into_owned());
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async {
        let client = FoamClient::new(url);
        let model = client.upload_model(&file_name, bytes).await.map_err(|e| match e.status() {
            Some(s) if s.is_client_error() => CliError::Input(e.to_string()),
            _ => CliError::Other(e.into()),
        })?;
        let session = client.create_session(&model.model_id).await?;
        client.patch_params(&session.id, &ParamsPatch::from_params(&params)).await?;
        let score = match optimize {
            Some(cfg) => Some(
                client
                    .optimize_angle(&session.id, &OptimizeRequest {
                        step: Some(cfg.step),
                        max_rounds: Some(cfg.max_rounds),
                    })
                    .await?,
            ),
            None => None,
        };
        let summary = client.generate(&session.id).await?;

        let format = args.format.output();
        let mut files = Vec::new();
        for region in Region::BOTH {
            files.push((foam_file_name(region, format), client.foam(&session.id, region, format).await?));
        }
        match args.slices {
            SliceFormat::Json => files.push(("slices/slices.json".into(), client.slices_bytes(&session.id).await?)),
            SliceFormat::Svg => {
                for i in 0..summary.params.resolution[0] as usize {
                    files.push((format!("slices/{}", slice_file_name(i)), client.slice_svg(&session.id, i).await?));
                }
            }
        }
        Ok(Outputs {
            files,
            summary: Summary {
                params: summary.params,
                f: summary.f,
                counts: summary.counts,
                one_sided_columns: summary.one_sided_columns,
                gap: summary.gap_report,
                timing_ms: summary.timing_ms,
                optimize: score,
            },
        })
    })
}

fn write_outputs(args: &GenerateArgs, outputs: Outputs) -> CliResult<()> {
    let out = &args.out_dir;
    let write = |rel: &str, bytes: &[u8]| -> CliResult<()> {
        let path = out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))?;
        }
        std::fs::write(&path, bytes).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(())
    };
    for (rel, bytes) in &outputs.files {
        write(rel, bytes)?;
    }
    let s = outputs.summary;
    if args.report == ReportFormat::Json {
        let report = GenerateReport {
            schema_version: REPORT_SCHEMA_VERSION,
            input: display_path(&args.input),
            params: s.params,
            f: s.f,
            counts: s.counts,
            foam_blocks: s.counts.total_foam(),
            occupied_blocks: s.counts.occupied,
            one_sided_columns: s.one_sided_columns,
            gap: s.gap,
            timing_ms: s.timing_ms,
            timing_scope: TIMING_SCOPE.into(),
            optimize: s.optimize,
            outputs: outputs.files.iter().map(|(rel, _)| rel.clone()).collect(),
        };
        let mut json = serde_json::to_vec_pretty(&report)?;
        json.push(b'\n');
        write("report.json", &json)?;
    }
    eprintln!(
        "{}: F = {:.4}, {} foam / {} occupied blocks, {:.1} ms -> {}",
        display_path(&args.input),
        s.f,
        s.counts.total_foam(),
        s.counts.occupied,
        s.timing_ms,
        out.display()
    );
    Ok(())
}

fn display_path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
