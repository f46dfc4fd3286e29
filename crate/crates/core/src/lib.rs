//! Interpretable few-shot time-series classification.
//!
//! Series are turned into SFA word histograms ([`sfa`]), embedded by a
//! small network trained with a prototypical objective ([`protonet`]) and
//! classified by their nearest class prototype. [`interpret`] explains a
//! trained model with a representative series per class and a
//! discriminative shapelet found by an F-test, and [`harness`] runs the
//! resampled few-shot evaluation protocol with 1-NN baselines.

pub mod error;
mod fourier;
pub mod harness;
pub mod interpret;
pub mod pipeline;
pub mod plot;
pub mod protonet;
pub mod series;
pub mod sfa;
pub mod synthetic;

pub use error::{Error, Result};
pub use harness::{FewShotTask, Method, RunResult, SamplingMode};
pub use interpret::{DistanceMode, ShapeletCandidate, ShapeletReport};
pub use pipeline::DpsnModel;
pub use protonet::{Prototypes, TrainConfig, TransformNet};
pub use series::{load_ucr, Dataset, Delimiter, TimeSeries};
pub use sfa::{FeatureVector, SfaModel, SfaParams};
