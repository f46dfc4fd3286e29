//! The flat `--params` TOML file.

use std::fs;
use std::path::Path;

use dpsn::{SfaParams, TrainConfig};
use serde::Deserialize;

use crate::CliError;

/// Every key is optional. Absent `window_len`/`num_coeffs` are picked by
/// leave-one-out grid search on the training file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub window_len: Option<usize>,
    pub num_coeffs: Option<usize>,
    pub alphabet_size: Option<usize>,
    pub mean_norm: Option<bool>,
    pub norm_series: Option<bool>,
    pub stride: Option<usize>,
    pub grid_window_lens: Option<Vec<usize>>,
    pub grid_num_coeffs: Option<Vec<usize>>,
    pub znormalized_distance: Option<bool>,

    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub lr_decay: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_epsilon: Option<f64>,
    pub queries_per_class: Option<usize>,
    pub batch_per_class: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub output_dim: Option<usize>,
    pub normalize_features: Option<bool>,
    pub seed: Option<u64>,
}

macro_rules! take {
    ($src:expr, $dst:expr, $($field:ident),*) => {
        $(if let Some(v) = $src.$field.clone() { $dst.$field = v; })*
    };
}

impl ParamsFile {
    pub fn load(path: Option<&Path>) -> Result<ParamsFile, CliError> {
        let Some(path) = path else {
            return Ok(ParamsFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// SFA settings with the window parameters left at zero when absent.
    pub fn sfa_base(&self) -> SfaParams {
        let mut p = SfaParams::new(self.window_len.unwrap_or(0), self.num_coeffs.unwrap_or(0));
        take!(self, p, alphabet_size, mean_norm, norm_series, stride);
        p
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut c = TrainConfig::default();
        take!(
            self,
            c,
            epochs,
            learning_rate,
            lr_decay,
            beta1,
            beta2,
            adam_epsilon,
            hidden_dim,
            output_dim,
            normalize_features,
            seed
        );
        c.queries_per_class = self.queries_per_class.or(c.queries_per_class);
        c.batch_per_class = self.batch_per_class.or(c.batch_per_class);
        c
    }

    pub fn grid(&self) -> Vec<(usize, usize)> {
        let lens = self
            .grid_window_lens
            .clone()
            .unwrap_or_else(|| vec![8, 12, 16, 24, 32, 48, 64]);
        let coeffs = self
            .grid_num_coeffs
            .clone()
            .unwrap_or_else(|| vec![2, 3, 4]);
        lens.iter()
            .filter(|&&l| self.window_len.is_none_or(|w| w == l))
            .flat_map(|&l| {
                coeffs
                    .iter()
                    .filter(|&&c| self.num_coeffs.is_none_or(|w| w == c))
                    .map(move |&c| (l, c))
            })
            .collect()
    }
}
