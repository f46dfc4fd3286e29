//! Representative samples and discriminative shapelets.
//!
//! The representative sample of a class is the training series whose
//! embedding lies closest to the class prototype. Its sliding windows,
//! low-pass filtered to the frequencies the SFA features keep, are the
//! shapelet candidates; the discriminative shapelet is the candidate whose
//! distances to all training series best separate the class from the rest
//! under a one-way F-test.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fourier;
use crate::protonet::{self, Prototypes, TransformNet};
use crate::series::{self, Dataset, DEFAULT_EPSILON};
use crate::sfa::SfaParams;

/// Training series closest to prototype `class` in embedding space, among
/// the series labeled `class`. Ties go to the lowest index.
pub fn representative_sample(
    net: &TransformNet,
    protos: &Prototypes,
    features: &[&[f64]],
    labels: &[usize],
    class: usize,
) -> Result<usize> {
    let center = protos.centers.get(class).ok_or(Error::EmptyClass(class))?;
    let mut best: Option<(usize, f64)> = None;
    for (i, (x, &y)) in features.iter().zip(labels).enumerate() {
        if y != class {
            continue;
        }
        let d = protonet::squared_distance(&net.forward(x)?, center);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyClass(class))
}

/// Inverse DFT of `window` keeping only the first `w` complex coefficients
/// (and their conjugate mirrors), so the result is real.
pub fn lowpass_reconstruct(window: &[f64], w: usize) -> Result<Vec<f64>> {
    let n = window.len();
    if n == 0 {
        return Err(Error::Empty("window"));
    }
    if w == 0 || w > n / 2 + 1 {
        return Err(Error::InvalidParameter(format!(
            "coefficient count {w} outside 1..={} for a window of {n}",
            n / 2 + 1
        )));
    }
    let mut spectrum = fourier::forward(window);
    for (k, c) in spectrum.iter_mut().enumerate() {
        let kept = k < w || n - k < w;
        if !kept {
            *c = Complex::new(0.0, 0.0);
        }
    }
    Ok(fourier::inverse(&spectrum)
        .into_iter()
        .map(|c| c.re)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Euclidean distance on raw values.
    #[default]
    Raw,
    /// Euclidean distance after z-normalizing both sides.
    ZNormalized,
}

/// Minimum Euclidean distance between `shapelet` and any equal-length
/// stride-1 subsequence of `series`.
pub fn shapelet_distance(shapelet: &[f64], series: &[f64]) -> Result<f64> {
    shapelet_distance_with(shapelet, series, DistanceMode::Raw)
}

pub fn shapelet_distance_with(shapelet: &[f64], series: &[f64], mode: DistanceMode) -> Result<f64> {
    let m = shapelet.len();
    if m == 0 {
        return Err(Error::Empty("shapelet"));
    }
    if m > series.len() {
        return Err(Error::WindowTooLong {
            window_len: m,
            series_len: series.len(),
        });
    }
    let s = match mode {
        DistanceMode::Raw => shapelet.to_vec(),
        DistanceMode::ZNormalized => series::znormalize(shapelet, DEFAULT_EPSILON)?,
    };
    let mut scratch = vec![0.0; m];
    let mut best = f64::INFINITY;
    for start in 0..=series.len() - m {
        let sub = &series[start..start + m];
        let sub = match mode {
            DistanceMode::Raw => sub,
            DistanceMode::ZNormalized => {
                scratch.copy_from_slice(sub);
                series::znormalize_in_place(&mut scratch, DEFAULT_EPSILON)?;
                &scratch
            }
        };
        // Early abandon: the summation order matches a full scan, so the
        // winning window's sum is bit-identical.
        let mut acc = 0.0;
        for (a, b) in sub.iter().zip(&s) {
            acc += (a - b) * (a - b);
            if acc >= best {
                break;
            }
        }
        if acc < best {
            best = acc;
        }
    }
    Ok(best.sqrt())
}

/// F-test of distances split into a positive and a negative group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScore {
    /// Between-group mean square (one degree of freedom).
    pub between: f64,
    /// Within-group mean square.
    pub within: f64,
    /// `between / within`; `+inf` for perfect separation.
    pub score: f64,
}

impl FScore {
    pub fn is_perfect(&self) -> bool {
        self.score == f64::INFINITY
    }

    /// Total order used to pick the best candidate: perfect separation
    /// outranks any finite score, and perfect scores compare by `between`.
    pub fn rank_cmp(&self, other: &FScore) -> Ordering {
        match (self.is_perfect(), other.is_perfect()) {
            (true, true) => self.between.total_cmp(&other.between),
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => self.score.total_cmp(&other.score),
        }
    }
}

fn group_stats(values: impl Iterator<Item = f64> + Clone) -> (usize, f64, f64) {
    let n = values.clone().count();
    let sum: f64 = values.clone().sum();
    let mean = sum / n as f64;
    let first = values.clone().next();
    let constant = values.clone().all(|v| Some(v) == first);
    let ss = if constant {
        0.0
    } else {
        values.map(|v| (v - mean) * (v - mean)).sum()
    };
    (n, sum, ss)
}

/// One-way F statistic of `distances` with groups given by `positive`.
pub fn f_test(distances: &[f64], positive: &[bool]) -> Result<FScore> {
    if distances.len() != positive.len() {
        return Err(Error::DimensionMismatch {
            context: "f_test labels",
            expected: distances.len(),
            actual: positive.len(),
        });
    }
    let n = distances.len();
    let pos = distances
        .iter()
        .zip(positive)
        .filter(|(_, p)| **p)
        .map(|(d, _)| *d);
    let neg = distances
        .iter()
        .zip(positive)
        .filter(|(_, p)| !**p)
        .map(|(d, _)| *d);
    let (n1, s1, ss1) = group_stats(pos);
    let (n2, s2, ss2) = group_stats(neg);
    if n1 == 0 || n2 == 0 {
        return Err(Error::Empty("f-test group"));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "f-test needs at least 3 distances, got {n}"
        )));
    }
    let groups = 2.0;
    let (m1, m2) = (s1 / n1 as f64, s2 / n2 as f64);
    let all_equal = distances.iter().all(|&d| d == distances[0]);
    let ssb = if all_equal {
        0.0
    } else {
        let mean = (s1 + s2) / n as f64;
        n1 as f64 * (m1 - mean) * (m1 - mean) + n2 as f64 * (m2 - mean) * (m2 - mean)
    };
    let ssw = ss1 + ss2;
    let dfw = n as f64 - groups;
    let between = ssb / (groups - 1.0);
    let within = ssw / dfw;
    let score = if ssw == 0.0 {
        if ssb > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        ssb * dfw / (ssw * (groups - 1.0))
    };
    Ok(FScore {
        between,
        within,
        score,
    })
}

/// F statistic with class `positive_class` against all other classes.
pub fn f_score(distances: &[f64], labels: &[usize], positive_class: usize) -> Result<FScore> {
    let mask: Vec<bool> = labels.iter().map(|&y| y == positive_class).collect();
    f_test(distances, &mask)
}

/// A score that may be `+inf`; JSON encodes infinity as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score(pub f64);

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Score(v)),
            Repr::Text(t) if t == "inf" => Ok(Score(f64::INFINITY)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad score {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletCandidate {
    pub source_series_id: usize,
    pub start: usize,
    pub length: usize,
    /// Low-pass reconstruction of the source window.
    pub values: Vec<f64>,
    pub f_score: Score,
    pub between: f64,
    pub within: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: usize,
    pub label: String,
    pub representative_id: usize,
    pub shapelet: ShapeletCandidate,
    /// Distance from the shapelet to every training series; `null` for
    /// series shorter than the shapelet.
    pub distances: Vec<Option<f64>>,
    /// F score of every candidate start of the representative series.
    pub scores: Vec<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletReport {
    pub window_len: usize,
    pub num_coeffs: usize,
    pub distance: DistanceMode,
    pub classes: Vec<ClassReport>,
}

impl ShapeletReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct Scored {
    values: Vec<f64>,
    distances: Vec<f64>,
    score: FScore,
}

/// Representative sample and discriminative shapelet for every class.
///
/// `features` must be aligned with `data.series`. Candidates are the
/// stride-1 windows of length `params.window_len` of each representative,
/// low-passed to `params.num_coeffs` coefficients.
pub fn discover(
    net: &TransformNet,
    protos: &Prototypes,
    data: &Dataset,
    features: &[&[f64]],
    params: &SfaParams,
    mode: DistanceMode,
) -> Result<ShapeletReport> {
    if data.num_classes() < 2 {
        return Err(Error::InvalidParameter(
            "shapelet discovery needs at least two classes".into(),
        ));
    }
    if features.len() != data.len() {
        return Err(Error::DimensionMismatch {
            context: "features per series",
            expected: data.len(),
            actual: features.len(),
        });
    }
    let len = params.window_len;
    let labels = data.labels();
    let usable: Vec<usize> = (0..data.len())
        .filter(|&i| data.series[i].len() >= len)
        .collect();
    if usable.len() < data.len() {
        log::warn!(
            "{} series shorter than {len} excluded from shapelet distances",
            data.len() - usable.len()
        );
    }
    let usable_labels: Vec<usize> = usable.iter().map(|&i| labels[i]).collect();

    let mut classes = Vec::with_capacity(data.num_classes());
    for k in 0..data.num_classes() {
        let rep = representative_sample(net, protos, features, &labels, k)?;
        let rep_values = &data.series[rep].values;
        let windows = series::sliding_windows(rep_values, len, 1)?;
        let scored: Vec<Scored> = windows
            .par_iter()
            .map(|(_, w)| {
                let values = lowpass_reconstruct(w, params.num_coeffs)?;
                let distances = usable
                    .iter()
                    .map(|&i| shapelet_distance_with(&values, &data.series[i].values, mode))
                    .collect::<Result<Vec<_>>>()?;
                let score = f_score(&distances, &usable_labels, k)?;
                Ok(Scored {
                    values,
                    distances,
                    score,
                })
            })
            .collect::<Result<_>>()?;

        let mut best = 0;
        for (i, s) in scored.iter().enumerate().skip(1) {
            if s.score.rank_cmp(&scored[best].score) == Ordering::Greater {
                best = i;
            }
        }
        let winner = &scored[best];
        let mut distances = vec![None; data.len()];
        for (&i, &d) in usable.iter().zip(&winner.distances) {
            distances[i] = Some(d);
        }
        classes.push(ClassReport {
            class: k,
            label: data.classes[k].clone(),
            representative_id: rep,
            shapelet: ShapeletCandidate {
                source_series_id: rep,
                start: windows[best].0,
                length: len,
                values: winner.values.clone(),
                f_score: Score(winner.score.score),
                between: winner.score.between,
                within: winner.score.within,
            },
            distances,
            scores: scored.iter().map(|s| Score(s.score.score)).collect(),
        });
    }
    Ok(ShapeletReport {
        window_len: len,
        num_coeffs: params.num_coeffs,
        distance: mode,
        classes,
    })
}
