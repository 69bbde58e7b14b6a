// The guide's code snippets double as doctests: each chapter is included
// as the doc comment of an empty module, so `cargo test` compiles and runs
// every ```rust block in the book. One module per chapter keeps failures
// attributable to their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/spaces-and-poses.md")]
mod spaces_and_poses {}
#[doc = include_str!("../../../book/src/grids.md")]
mod grids {}
#[doc = include_str!("../../../book/src/spacewarp.md")]
mod spacewarp {}
#[doc = include_str!("../../../book/src/camera-uplift.md")]
mod camera_uplift {}
#[doc = include_str!("../../../book/src/lidar-encoding.md")]
mod lidar_encoding {}
#[doc = include_str!("../../../book/src/stereo.md")]
mod stereo {}
#[doc = include_str!("../../../book/src/fusion.md")]
mod fusion {}
#[doc = include_str!("../../../book/src/lidar-simulation.md")]
mod lidar_simulation {}
#[doc = include_str!("../../../book/src/gradients.md")]
mod gradients {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
