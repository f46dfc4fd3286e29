//! The end-to-end classifier: SFA features feeding the prototype network,
//! with on-disk bundles.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpret::{self, DistanceMode, ShapeletReport};
use crate::protonet::{self, Prototypes, TrainConfig, TransformNet};
use crate::series::Dataset;
use crate::sfa::{self, FeatureVector, SfaModel, SfaParams};

pub const SFA_FILE: &str = "sfa.json";
pub const NET_FILE: &str = "net.json";
pub const PROTOTYPES_FILE: &str = "prototypes.json";

#[derive(Debug, Clone, PartialEq)]
pub struct DpsnModel {
    /// Original label of each class index.
    pub classes: Vec<String>,
    pub sfa: SfaModel,
    pub net: TransformNet,
    pub prototypes: Prototypes,
    pub train_config: TrainConfig,
    pub final_loss: f64,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    classes: Vec<String>,
    train_config: TrainConfig,
    final_loss: f64,
    net: TransformNet,
}

#[derive(Serialize, Deserialize)]
struct PrototypesFile {
    classes: Vec<String>,
    #[serde(flatten)]
    prototypes: Prototypes,
}

fn refs(features: &[FeatureVector]) -> Vec<&[f64]> {
    features.iter().map(|f| &f[..]).collect()
}

impl DpsnModel {
    /// Fits SFA on `train` and trains the network on the resulting
    /// histograms. Also returns the training features.
    pub fn fit(
        train: &Dataset,
        params: &SfaParams,
        cfg: &TrainConfig,
    ) -> Result<(DpsnModel, Vec<FeatureVector>)> {
        let (sfa, features) = sfa::fit_transform(train, params)?;
        let trained = protonet::train(&refs(&features), &train.labels(), train.num_classes(), cfg)?;
        let model = DpsnModel {
            classes: train.classes.clone(),
            sfa,
            net: trained.net,
            prototypes: trained.prototypes,
            train_config: cfg.clone(),
            final_loss: trained.losses.last().copied().unwrap_or(f64::NAN),
        };
        Ok((model, features))
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.sfa.dim()
    }

    pub fn features(&self, values: &[f64]) -> Result<FeatureVector> {
        self.sfa.transform(values)
    }

    /// Predicted class index.
    pub fn predict(&self, values: &[f64]) -> Result<usize> {
        protonet::predict(&self.net, &self.prototypes, &self.features(values)?)
    }

    pub fn predict_proba(&self, values: &[f64]) -> Result<Vec<f64>> {
        protonet::class_probs(&self.net, &self.prototypes, &self.features(values)?)
    }

    /// Fraction of `test` predicted correctly. `test` must share this
    /// model's class coding.
    pub fn accuracy(&self, test: &Dataset) -> Result<f64> {
        let mut correct = 0usize;
        for s in &test.series {
            if self.predict(&s.values)? == s.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / test.len() as f64)
    }

    /// Representative samples and discriminative shapelets on `train`.
    pub fn explain(&self, train: &Dataset, mode: DistanceMode) -> Result<ShapeletReport> {
        let mut train = train.clone();
        train.align_classes(&self.classes)?;
        let features = self.sfa.transform_dataset(&train)?;
        interpret::discover(
            &self.net,
            &self.prototypes,
            &train,
            &refs(&features),
            &self.sfa.params,
            mode,
        )
    }

    fn check(&self) -> Result<()> {
        self.net.validate()?;
        if self.net.input_dim != self.sfa.dim() {
            return Err(Error::DimensionMismatch {
                context: "bundle network input vs SFA vocabulary",
                expected: self.sfa.dim(),
                actual: self.net.input_dim,
            });
        }
        if self.prototypes.num_classes() != self.classes.len() {
            return Err(Error::DimensionMismatch {
                context: "bundle prototype count",
                expected: self.classes.len(),
                actual: self.prototypes.num_classes(),
            });
        }
        if let Some(c) = self
            .prototypes
            .centers
            .iter()
            .find(|c| c.len() != self.net.output_dim)
        {
            return Err(Error::DimensionMismatch {
                context: "bundle prototype dimension",
                expected: self.net.output_dim,
                actual: c.len(),
            });
        }
        Ok(())
    }

    /// Writes `sfa.json`, `net.json` and `prototypes.json` into `dir`.
    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
        };
        write(SFA_FILE, self.sfa.to_json()?)?;
        write(
            NET_FILE,
            serde_json::to_string_pretty(&NetFile {
                classes: self.classes.clone(),
                train_config: self.train_config.clone(),
                final_loss: self.final_loss,
                net: self.net.clone(),
            })?,
        )?;
        write(
            PROTOTYPES_FILE,
            serde_json::to_string_pretty(&PrototypesFile {
                classes: self.classes.clone(),
                prototypes: self.prototypes.clone(),
            })?,
        )
    }

    pub fn load_bundle(dir: &Path) -> Result<DpsnModel> {
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let sfa = SfaModel::from_json(&read(SFA_FILE)?)?;
        let net: NetFile = serde_json::from_str(&read(NET_FILE)?)?;
        let protos: PrototypesFile = serde_json::from_str(&read(PROTOTYPES_FILE)?)?;
        if protos.classes != net.classes {
            return Err(Error::InvalidParameter(
                "net.json and prototypes.json disagree on class order".into(),
            ));
        }
        let model = DpsnModel {
            classes: net.classes,
            sfa,
            net: net.net,
            prototypes: protos.prototypes,
            train_config: net.train_config,
            final_loss: net.final_loss,
        };
        model.check()?;
        Ok(model)
    }
}
