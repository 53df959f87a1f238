//! Expected accuracy of K-nearest-neighbor classification under label noise.
//!
//! The analytic side ([`plurality`]) gives the probability that the correct
//! label wins a K-NN plurality vote when the neighborhood labels are drawn
//! from a noisy distribution. The empirical side ([`knn`], [`noise`],
//! [`kmeans`]) injects noise into real feature datasets and measures what a
//! K-NN classifier actually does. [`curves`] puts both on a common
//! accuracy-versus-noise axis, and [`oracle`] holds brute-force references.

pub mod curves;
pub mod dataset;
pub mod distribution;
pub mod error;
pub mod io;
pub mod kmeans;
pub mod knn;
pub mod noise;
pub mod numeric;
pub mod oracle;
pub mod plurality;
pub mod seed;
pub mod synthetic;

pub use curves::{AccuracyCurve, CleanSample, CurveKind, CurvePoint};
pub use dataset::FeatureDataset;
pub use distribution::{CorruptionMatrix, LabelDistribution};
pub use error::{Error, Result};
pub use noise::{InjectionReport, NoiseRegime, NoiseSpec};
pub use plurality::{NeighborhoodSpec, SummationBounds};
