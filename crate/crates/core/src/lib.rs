//! Protective foam design from triangle meshes.
//!
//! The object is rendered into two orthographic depth textures along the
//! x axis, pooled down to a block grid, and everything that is not behind
//! both visible surfaces becomes foam. The foam is then split into two
//! height-field halves that can be pulled off the object along ±x.
//!
//! ```
//! use foamforge_core::{pipeline, shapes, DesignSpace, EulerAngles, Parallelism};
//!
//! let cube = shapes::cuboid([-10.0; 3], [10.0; 3]);
//! let space = DesignSpace::new([6, 6, 6], [10.0, 10.0, 10.0]).unwrap();
//! let params = pipeline::GenerateParams::new(space, EulerAngles::ZERO, 8);
//! let result = pipeline::generate(&cube, &params, Parallelism::Sequential).unwrap();
//! assert_eq!(result.block_map.counts().occupied, 4 * 2 * 2);
//! ```

pub mod angle;
pub mod block_map;
pub mod depth;
pub mod export;
pub mod gap;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod shapes;
pub mod space;

pub use angle::{foam_volume_score, optimize_rotation, OptimizerConfig, ScoreReport};
pub use block_map::{build_block_map, split_regions, BlockMap, Label};
pub use depth::{reduce_to_blocks, render_depth, ColumnDepthMap, DepthTexture, Direction};
pub use export::{extract_region_mesh, extract_slices, render_slice_svg, SliceStack};
pub use gap::{gap_volume, GapReport};
pub use io::{load_mesh, write_mesh, MeshFormat, OutputFormat};
pub use mesh::{bounding_box, center_mesh, rotate_mesh, EulerAngles, MeshError, TriangleMesh};
pub use pipeline::{FoamResult, Parallelism};
pub use space::DesignSpace;
