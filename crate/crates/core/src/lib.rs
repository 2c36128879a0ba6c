//! Two-dimensional TM inverse-scattering workbench.
//!
//! - [`operators`], [`forward`], [`mie`]: method-of-moments forward model and
//!   an analytic cylinder reference.
//! - [`bp`]: non-iterative back-propagation imaging.
//! - [`generators`], [`noise`], [`quality`], [`pipeline`], [`container`]:
//!   dataset production, Q_BP scoring, curation and the `ispds-1` format.
//! - [`metrics`]: RMSE, SSIM, TV and the composite training loss.

pub mod bp;
pub mod config;
pub mod container;
pub mod error;
pub mod forward;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod idx;
pub mod metrics;
pub mod mie;
pub mod noise;
pub mod operators;
pub mod pipeline;
pub mod quality;
pub mod special;

pub use bp::{backpropagate, BpImage};
pub use config::PhysicsConfig;
pub use container::{read_container, write_container, Dataset};
pub use error::{Error, Result};
pub use forward::{born_scatter, incident_fields, solve_forward, FieldSet, ScatterMatrix};
pub use geometry::{build_geometry, Geometry, Point2};
pub use grid::{ComplexGrid, ContrastMap, RealGrid};
pub use metrics::{loss_eval, rmse, ssim, tv, LossBreakdown, SsimParams};
pub use mie::mie_reference;
pub use operators::{assemble_operators, OperatorPair};
pub use pipeline::{GeneratorKind, PipelineOptions, Simulator};
pub use quality::{categorize, compose, compose_uniform, quality_factor, Category, SampleRecord};
