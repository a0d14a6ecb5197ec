use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use foamforge_core::pipeline::{generate_block_map, prepare_mesh, GenerateParams};
use foamforge_core::{bounding_box, DesignSpace, EulerAngles, Parallelism};
use serde::{Deserialize, Serialize};

use crate::{read_mesh, CliError, CliResult, Triple};

/// Fraction of the object's extent left free on each axis when the block
/// size is fitted automatically.
const FIT_MARGIN: f64 = 0.05;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    /// Cubic resolutions N, each run at N×N×N.
    #[arg(long, default_value = "10,15,20,25,30", value_delimiter = ',')]
    res_list: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Pin the pipeline to one thread.
    #[arg(long)]
    single_thread: bool,
    /// Block size in mm; by default fitted so the design space just
    /// encloses the object at each resolution.
    #[arg(long)]
    block: Option<Triple<f64>>,
    #[arg(long, default_value_t = 8)]
    supersample: u32,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub resolution: [u32; 3],
    pub block_size_mm: [f64; 3],
    pub runs: usize,
    pub mean_ms: f64,
    /// Sample standard deviation over the runs.
    pub std_dev_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub single_threaded: bool,
    pub supersample: u32,
    pub timing_scope: String,
    pub rows: Vec<BenchRow>,
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    if args.runs < 5 {
        return Err(CliError::Usage("--runs must be at least 5".into()));
    }
    if args.res_list.is_empty() || args.res_list.contains(&0) {
        return Err(CliError::Usage("--res-list needs positive resolutions".into()));
    }
    let (_, _, mesh) = read_mesh(&args.input)?;
    let mesh = prepare_mesh(&mesh).map_err(|e| CliError::Input(e.to_string()))?;
    let (lo, hi) = bounding_box(&mesh).map_err(|e| CliError::Input(e.to_string()))?;
    let extent = hi - lo;
    let largest = extent.max().max(f64::MIN_POSITIVE);
    let par = if args.single_thread {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    let model = args
        .input
        .file_name()
        .map_or_else(|| args.input.display().to_string(), |n| n.to_string_lossy().into_owned());

    let mut rows = Vec::new();
    for &n in &args.res_list {
        let block = match args.block {
            Some(Triple(b)) => b,
            None => std::array::from_fn(|a| {
                let e = if extent[a] > 0.0 { extent[a] } else { largest };
                e * (1.0 + FIT_MARGIN) / n as f64
            }),
        };
        let space = DesignSpace::new([n; 3], block).map_err(|e| CliError::Usage(e.to_string()))?;
        let params = GenerateParams::new(space, EulerAngles::ZERO, args.supersample);
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let mut times = Vec::with_capacity(args.runs);
        for _ in 0..args.runs {
            let start = Instant::now();
            let bm = generate_block_map(&mesh, &params, par)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(bm);
        }
        let (mean_ms, std_dev_ms) = mean_std(&times);
        rows.push(BenchRow {
            model: model.clone(),
            vertex_count: mesh.vertex_count(),
            triangle_count: mesh.triangle_count(),
            resolution: [n; 3],
            block_size_mm: block,
            runs: args.runs,
            mean_ms,
            std_dev_ms,
            min_ms: times.iter().copied().fold(f64::INFINITY, f64::min),
            max_ms: times.iter().copied().fold(0.0, f64::max),
        });
    }
    let report = BenchReport {
        single_threaded: args.single_thread,
        supersample: args.supersample,
        timing_scope: foamforge_api::TIMING_SCOPE.into(),
        rows,
    };
    print_table(&report);
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(path) = &args.json {
        std::fs::write(path, format!("{json}\n")).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn print_table(report: &BenchReport) {
    println!(
        "{:<24} {:>9} {:>12} {:>10} {:>9} {:>5}",
        "model", "#V", "resolution", "mean ms", "std ms", "runs"
    );
    for r in &report.rows {
        let [a, b, c] = r.resolution;
        println!(
            "{:<24} {:>9} {:>12} {:>10.1} {:>9.1} {:>5}",
            r.model,
            r.vertex_count,
            format!("{a}x{b}x{c}"),
            r.mean_ms,
            r.std_dev_ms,
            r.runs
        );
    }
    println!(
        "({}, supersample {}; timed: {})",
        if report.single_threaded { "single thread" } else { "all threads" },
        report.supersample,
        report.timing_scope
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
