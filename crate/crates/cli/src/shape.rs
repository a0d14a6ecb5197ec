use std::path::PathBuf;

use clap::{Args, Subcommand};
use foamforge_core::{shapes, write_mesh, OutputFormat, TriangleMesh};

use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct ShapeArgs {
    #[command(subcommand)]
    kind: ShapeKind,
    /// Output file; .stl is binary STL, .ply is ASCII PLY.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ShapeKind {
    /// Ring torus around z; vertex count is major × minor segments.
    Torus {
        #[arg(long, default_value_t = 60.0)]
        major_radius: f64,
        #[arg(long, default_value_t = 25.0)]
        minor_radius: f64,
        #[arg(long, default_value_t = 120)]
        major_segments: u32,
        #[arg(long, default_value_t = 60)]
        minor_segments: u32,
    },
    /// Latitude/longitude sphere at the origin.
    Sphere {
        #[arg(long, default_value_t = 50.0)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        segments: u32,
        #[arg(long, default_value_t = 32)]
        rings: u32,
    },
    /// Axis-aligned box centered at the origin.
    Box {
        #[arg(long, default_value = "40x40x40")]
        size: crate::Triple<f64>,
    },
}

pub fn run(args: ShapeArgs) -> CliResult<()> {
    let out = args.out.ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let format = out
        .extension()
        .and_then(|e| e.to_str())
        .and_then(OutputFormat::from_extension)
        .ok_or_else(|| CliError::Usage(format!("{}: use a .stl or .ply file name", out.display())))?;
    let positive = |v: f64, name: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("{name} must be positive")))
        }
    };
    let mesh: TriangleMesh = match args.kind {
        ShapeKind::Torus {
            major_radius,
            minor_radius,
            major_segments,
            minor_segments,
        } => {
            positive(major_radius, "--major-radius")?;
            positive(minor_radius, "--minor-radius")?;
            if major_segments < 3 || minor_segments < 3 {
                return Err(CliError::Usage("torus needs at least 3 segments each way".into()));
            }
            shapes::torus(major_radius, minor_radius, major_segments, minor_segments)
        }
        ShapeKind::Sphere { radius, segments, rings } => {
            positive(radius, "--radius")?;
            if segments < 3 || rings < 2 {
                return Err(CliError::Usage("sphere needs at least 3 segments and 2 rings".into()));
            }
            shapes::uv_sphere([0.0; 3], radius, segments, rings)
        }
        ShapeKind::Box { size } => {
            let h: [f64; 3] = std::array::from_fn(|a| size.0[a] / 2.0);
            for v in h {
                positive(v, "--size")?;
            }
            shapes::cuboid(h.map(|v| -v), h)
        }
    };
    std::fs::write(&out, write_mesh(&mesh, format)).map_err(|e| anyhow::anyhow!("{}: {e}", out.display()))?;
    eprintln!("{}: {} vertices, {} triangles", out.display(), mesh.vertex_count(), mesh.triangle_count());
    Ok(())
}
