//! Symbolic Fourier Approximation word histograms.
//!
//! Every window of a series is z-normalized, reduced to its leading Fourier
//! coefficients, and discretized coefficient by coefficient against
//! equi-depth breakpoints learned from the training windows (multiple
//! coefficient binning). Runs of identical consecutive words are counted
//! once. Words never seen in training are dropped, which keeps the
//! histogram dense.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fourier;
use crate::series::{self, Dataset, DEFAULT_EPSILON};

const SYMBOLS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfaParams {
    /// Window length `L_S` in samples.
    pub window_len: usize,
    /// Number of complex Fourier coefficients kept per window.
    pub num_coeffs: usize,
    #[serde(default = "default_alphabet")]
    pub alphabet_size: usize,
    /// Skip the DC coefficient.
    #[serde(default = "default_true")]
    pub mean_norm: bool,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Z-normalize each whole series before windowing.
    #[serde(default)]
    pub norm_series: bool,
}

fn default_alphabet() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    1
}

impl SfaParams {
    pub fn new(window_len: usize, num_coeffs: usize) -> Self {
        SfaParams {
            window_len,
            num_coeffs,
            alphabet_size: default_alphabet(),
            mean_norm: true,
            stride: 1,
            norm_series: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.num_coeffs == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter(
                "window_len, num_coeffs and stride must be positive".into(),
            ));
        }
        if 2 * self.num_coeffs > self.window_len {
            return Err(Error::InvalidParameter(format!(
                "2 * num_coeffs ({}) exceeds window_len ({})",
                2 * self.num_coeffs,
                self.window_len
            )));
        }
        if !(2..=SYMBOLS.len()).contains(&self.alphabet_size) {
            return Err(Error::InvalidParameter(format!(
                "alphabet_size must be in 2..={}, got {}",
                SYMBOLS.len(),
                self.alphabet_size
            )));
        }
        Ok(())
    }

    /// Length of a truncated coefficient vector.
    pub fn coeff_len(&self) -> usize {
        2 * self.num_coeffs
    }
}

/// One symbol per retained real/imaginary coefficient part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SfaWord(pub Vec<u8>);

impl fmt::Display for SfaWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", SYMBOLS[s as usize] as char)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SfaWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|b| {
                SYMBOLS
                    .iter()
                    .position(|&c| c == b)
                    .map(|p| p as u8)
                    .ok_or_else(|| Error::InvalidParameter(format!("bad SFA word {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()
            .map(SfaWord)
    }
}

impl Serialize for SfaWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SfaWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-coefficient breakpoints, `alphabet_size - 1` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfaBins {
    pub breakpoints: Vec<Vec<f64>>,
}

/// Dense column index for every word seen in training, in word order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SfaVocabulary {
    words: Vec<SfaWord>,
    index: BTreeMap<SfaWord, usize>,
}

impl SfaVocabulary {
    pub fn from_words(words: impl IntoIterator<Item = SfaWord>) -> Self {
        let index: BTreeMap<SfaWord, usize> = words.into_iter().map(|w| (w, 0)).collect();
        let words: Vec<SfaWord> = index.keys().cloned().collect();
        let index = words.iter().cloned().zip(0..).collect();
        SfaVocabulary { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &SfaWord) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[SfaWord] {
        &self.words
    }
}

impl Serialize for SfaVocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.words.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SfaVocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let words = Vec::<SfaWord>::deserialize(d)?;
        let n = words.len();
        let vocab = SfaVocabulary::from_words(words);
        if vocab.len() != n {
            return Err(serde::de::Error::custom("duplicate words in vocabulary"));
        }
        Ok(vocab)
    }
}

/// Dense word-count histogram over a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

/// Real and imaginary parts of the leading DFT coefficients of `window`,
/// interleaved `[re0, im0, re1, im1, ...]`. With `mean_norm` the DC term is
/// skipped and coefficients `1..=num_coeffs` are returned.
pub fn dft_truncate(window: &[f64], params: &SfaParams) -> Result<Vec<f64>> {
    if window.len() != params.window_len {
        return Err(Error::DimensionMismatch {
            context: "dft_truncate window",
            expected: params.window_len,
            actual: window.len(),
        });
    }
    let spectrum = fourier::forward(window);
    let first = usize::from(params.mean_norm);
    let mut out = Vec::with_capacity(params.coeff_len());
    for c in &spectrum[first..first + params.num_coeffs] {
        out.push(c.re);
        out.push(c.im);
    }
    Ok(out)
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Equi-depth breakpoints per coefficient dimension.
pub fn fit_bins(coeffs: &[Vec<f64>], params: &SfaParams) -> Result<SfaBins> {
    if coeffs.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    let dims = coeffs[0].len();
    if let Some(bad) = coeffs.iter().find(|c| c.len() != dims) {
        return Err(Error::DimensionMismatch {
            context: "fit_bins coefficient vector",
            expected: dims,
            actual: bad.len(),
        });
    }
    let breakpoints = (0..dims)
        .map(|d| {
            let mut column: Vec<f64> = coeffs.iter().map(|c| c[d]).collect();
            column.sort_by(f64::total_cmp);
            (1..params.alphabet_size)
                .map(|j| quantile(&column, j as f64 / params.alphabet_size as f64))
                .collect()
        })
        .collect();
    Ok(SfaBins { breakpoints })
}

/// Symbol `j` for value `v` is the number of breakpoints strictly below `v`.
pub fn word_of(coeffs: &[f64], bins: &SfaBins) -> SfaWord {
    SfaWord(
        coeffs
            .iter()
            .zip(&bins.breakpoints)
            .map(|(v, bps)| bps.iter().filter(|&&b| b < *v).count() as u8)
            .collect(),
    )
}

fn prepared_values(values: &[f64], params: &SfaParams) -> Result<Vec<f64>> {
    if params.norm_series {
        series::znormalize(values, DEFAULT_EPSILON)
    } else {
        Ok(values.to_vec())
    }
}

/// Truncated coefficient vectors for every window of `values`.
pub fn window_coefficients(values: &[f64], params: &SfaParams) -> Result<Vec<Vec<f64>>> {
    let values = prepared_values(values, params)?;
    series::sliding_windows(&values, params.window_len, params.stride)?
        .into_iter()
        .map(|(_, w)| {
            let z = series::znormalize(w, DEFAULT_EPSILON)?;
            dft_truncate(&z, params)
        })
        .collect()
}

/// Word sequence of `values` after numerosity reduction.
pub fn reduced_words(values: &[f64], bins: &SfaBins, params: &SfaParams) -> Result<Vec<SfaWord>> {
    let mut words: Vec<SfaWord> = Vec::new();
    for c in window_coefficients(values, params)? {
        let w = word_of(&c, bins);
        if words.last() != Some(&w) {
            words.push(w);
        }
    }
    Ok(words)
}

/// Raw word counts (fitting mode).
pub fn word_counts(
    values: &[f64],
    bins: &SfaBins,
    params: &SfaParams,
) -> Result<BTreeMap<SfaWord, u32>> {
    let mut counts = BTreeMap::new();
    for w in reduced_words(values, bins, params)? {
        *counts.entry(w).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Histogram over `vocab`; out-of-vocabulary words are not counted.
pub fn histogram(
    values: &[f64],
    bins: &SfaBins,
    params: &SfaParams,
    vocab: &SfaVocabulary,
) -> Result<FeatureVector> {
    let mut out = vec![0.0; vocab.len()];
    for w in reduced_words(values, bins, params)? {
        if let Some(i) = vocab.index_of(&w) {
            out[i] += 1.0;
        }
    }
    Ok(FeatureVector(out))
}

/// A fitted SFA transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfaModel {
    pub params: SfaParams,
    pub bins: SfaBins,
    pub vocabulary: SfaVocabulary,
}

impl SfaModel {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn transform(&self, values: &[f64]) -> Result<FeatureVector> {
        histogram(values, &self.bins, &self.params, &self.vocabulary)
    }

    pub fn transform_dataset(&self, data: &Dataset) -> Result<Vec<FeatureVector>> {
        data.series
            .iter()
            .map(|s| self.transform(&s.values))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SfaModel = serde_json::from_str(text)?;
        model.params.validate()?;
        Ok(model)
    }
}

/// Fits bins on every training window, builds the vocabulary from the words
/// seen in training, and returns the features in `train.series` order.
pub fn fit_transform(
    train: &Dataset,
    params: &SfaParams,
) -> Result<(SfaModel, Vec<FeatureVector>)> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let per_series: Vec<Vec<Vec<f64>>> = train
        .series
        .iter()
        .map(|s| window_coefficients(&s.values, params))
        .collect::<Result<_>>()?;
    let all: Vec<Vec<f64>> = per_series.iter().flatten().cloned().collect();
    let bins = fit_bins(&all, params)?;

    let counts: Vec<BTreeMap<SfaWord, u32>> = per_series
        .iter()
        .map(|coeffs| {
            let mut counts = BTreeMap::new();
            let mut last: Option<SfaWord> = None;
            for c in coeffs {
                let w = word_of(c, &bins);
                if last.as_ref() != Some(&w) {
                    *counts.entry(w.clone()).or_insert(0u32) += 1;
                    last = Some(w);
                }
            }
            counts
        })
        .collect();
    let vocabulary = SfaVocabulary::from_words(counts.iter().flat_map(|c| c.keys().cloned()));
    let features = counts
        .iter()
        .map(|c| {
            let mut v = vec![0.0; vocabulary.len()];
            for (w, &n) in c {
                v[vocabulary.index_of(w).expect("word from training")] = f64::from(n);
            }
            FeatureVector(v)
        })
        .collect();
    Ok((
        SfaModel {
            params: params.clone(),
            bins,
            vocabulary,
        },
        features,
    ))
}
