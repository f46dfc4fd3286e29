//! Brute-force oracles and property checks shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use dpsn::harness::{self, SamplingMode};
use dpsn::interpret::{self, FScore};
use dpsn::protonet::{self, TransformNet};
use dpsn::sfa::{self, SfaParams};
use dpsn::synthetic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---- oracles ----

/// Full quadratic-time DFT, `(re, im)` per frequency.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
                let a = -2.0 * PI * (k * t) as f64 / n;
                (re + v * a.cos(), im + v * a.sin())
            })
        })
        .collect()
}

/// Inverse of [`naive_dft`] restricted to frequencies `k < w` and their
/// mirrors `n - k`.
pub fn naive_lowpass(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let spec = naive_dft(x);
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for (k, (re, im)) in spec.iter().enumerate() {
                if k < w || n - k < w {
                    let a = 2.0 * PI * (k * t) as f64 / n as f64;
                    acc += re * a.cos() - im * a.sin();
                }
            }
            acc / n as f64
        })
        .collect()
}

/// Minimum Euclidean distance over every alignment, no early exit.
pub fn scan_distance(s: &[f64], t: &[f64]) -> f64 {
    (0..=t.len() - s.len())
        .map(|i| {
            s.iter()
                .zip(&t[i..])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// One-way ANOVA F over two groups, from group means.
pub fn anova_f(d: &[f64], positive: &[bool]) -> f64 {
    let grand = d.iter().sum::<f64>() / d.len() as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in [true, false] {
        let xs: Vec<f64> = d
            .iter()
            .zip(positive)
            .filter(|(_, p)| **p == g)
            .map(|(v, _)| *v)
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        ssb += xs.len() as f64 * (m - grand).powi(2);
        ssw += xs.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    (ssb / 1.0) / (ssw / (d.len() - 2) as f64)
}

/// 1-NN by exhaustive scan; ties to the first reference.
pub fn nn_oracle(refs: &[Vec<f64>], labels: &[usize], q: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (r, &y) in refs.iter().zip(labels) {
        let d: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, y);
        }
    }
    best.1
}

// ---- gradient check ----

/// Magnitude below which gradient entries are compared absolutely: the
/// central difference itself carries ~1e-11 of round-off at h = 1e-5.
pub const GRAD_FLOOR: f64 = 1e-4;

/// Largest relative error between analytic and central-difference
/// gradients on one random episode.
pub fn gradient_instance(seed: u64, h: f64) -> Result<f64, String> {
    let mut rng = rng(seed);
    let dim = rng.random_range(5..=20);
    let k = rng.random_range(2..=4);
    let (hidden, out) = (8, 5);
    loop {
        let mut net = TransformNet::init(dim, hidden, out, &mut rng);
        net.l2_normalize_input = seed % 2 == 1;
        for b in net.params.b1.iter_mut().chain(net.params.b2.iter_mut()) {
            *b = rng.random_range(-0.5..0.5);
        }
        let mut sample = || -> Vec<f64> {
            (0..dim)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        0.0
                    } else {
                        f64::from(rng.random_range(1..5u8))
                    }
                })
                .collect()
        };
        let support: Vec<Vec<Vec<f64>>> = (0..k).map(|_| vec![sample(), sample()]).collect();
        let queries: Vec<(Vec<f64>, usize)> = (0..k)
            .flat_map(|c| [(sample(), c), (sample(), c)])
            .collect();

        // Resample instances that sit on a ReLU kink.
        let all = support
            .iter()
            .flatten()
            .chain(queries.iter().map(|(x, _)| x));
        let near_kink = all.clone().any(|x| {
            let mut scale = 1.0;
            if net.l2_normalize_input {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    scale = 1.0 / n;
                }
            }
            (0..hidden).any(|j| {
                let pre: f64 = net.params.b1[j]
                    + x.iter()
                        .enumerate()
                        .map(|(i, v)| net.params.w1[j * dim + i] * v * scale)
                        .sum::<f64>();
                pre.abs() < 1e-3
            })
        });
        if near_kink {
            continue;
        }

        let s_refs: Vec<Vec<&[f64]>> = support
            .iter()
            .map(|c| c.iter().map(Vec::as_slice).collect())
            .collect();
        let q_refs: Vec<(&[f64], usize)> =
            queries.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        let loss = |n: &TransformNet| protonet::episode_loss(n, &s_refs, &q_refs).map(|r| r.0);
        let (_, grads) =
            protonet::episode_loss(&net, &s_refs, &q_refs).map_err(|e| e.to_string())?;
        let analytic = grads.flat();
        let mut worst: f64 = 0.0;
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            *plus.params.flat_mut(i) += h;
            let mut minus = net.clone();
            *minus.params.flat_mut(i) -= h;
            let fd = (loss(&plus).map_err(|e| e.to_string())?
                - loss(&minus).map_err(|e| e.to_string())?)
                / (2.0 * h);
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(GRAD_FLOOR);
            worst = worst.max(err);
        }
        return Ok(worst);
    }
}

// ---- oracle equivalence suites, `cases` random instances each ----

pub fn check_shapelet_distance(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(2..40);
        let m = r.random_range(1..=n);
        let t = random_vec(&mut r, n);
        let s = if r.random_bool(0.2) {
            let at = r.random_range(0..=n - m);
            t[at..at + m].to_vec()
        } else {
            random_vec(&mut r, m)
        };
        let got = interpret::shapelet_distance(&s, &t).map_err(|e| e.to_string())?;
        let want = scan_distance(&s, &t);
        if !close(got, want, 1e-9) {
            return Err(format!("case {case}: distance {got} vs scan {want}"));
        }
    }
    Ok(())
}

pub fn check_dft(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let l = r.random_range(2..48);
        let w = r.random_range(1..=l / 2);
        let params = SfaParams {
            mean_norm: r.random_bool(0.5),
            ..SfaParams::new(l, w)
        };
        let x = random_vec(&mut r, l);
        let got = sfa::dft_truncate(&x, &params).map_err(|e| e.to_string())?;
        let first = usize::from(params.mean_norm);
        let spec = naive_dft(&x);
        for j in 0..w {
            let (re, im) = spec[first + j];
            if !close(got[2 * j], re, 1e-9) || !close(got[2 * j + 1], im, 1e-9) {
                return Err(format!(
                    "case {case}: coefficient {j} ({}, {}) vs ({re}, {im})",
                    got[2 * j],
                    got[2 * j + 1]
                ));
            }
        }
    }
    Ok(())
}

pub fn check_lowpass(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(1..40);
        let w = r.random_range(1..=n / 2 + 1);
        let x = random_vec(&mut r, n);
        let got = interpret::lowpass_reconstruct(&x, w).map_err(|e| e.to_string())?;
        let want = naive_lowpass(&x, w);
        if let Some(t) = (0..n).find(|&t| !close(got[t], want[t], 1e-9)) {
            return Err(format!(
                "case {case}: sample {t}: {} vs {}",
                got[t], want[t]
            ));
        }
    }
    Ok(())
}

pub fn check_nearest_neighbor(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let d = r.random_range(1..6);
        let n = r.random_range(1..10);
        // Small integer grid so ties actually happen.
        let point = |r: &mut ChaCha8Rng| {
            (0..d)
                .map(|_| f64::from(r.random_range(-2..=2i8)))
                .collect::<Vec<f64>>()
        };
        let refs: Vec<Vec<f64>> = (0..n).map(|_| point(&mut r)).collect();
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let q = point(&mut r);
        let rr: Vec<&[f64]> = refs.iter().map(Vec::as_slice).collect();
        let got = harness::baseline_nn(&rr, &labels, &q).map_err(|e| e.to_string())?;
        let want = nn_oracle(&refs, &labels, &q);
        if got != want {
            return Err(format!("case {case}: 1-NN {got} vs oracle {want}"));
        }
    }
    Ok(())
}

pub fn check_f_score(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(3..30);
        let labels: Vec<usize> = (0..n)
            .map(|i| if i < 2 { i } else { r.random_range(0..3) })
            .collect();
        let class = labels[0];
        let d: Vec<f64> = (0..n).map(|_| r.random_range(0.0..10.0)).collect();
        let positive: Vec<bool> = labels.iter().map(|&y| y == class).collect();
        if positive.iter().all(|p| *p) {
            continue;
        }
        let got: FScore = interpret::f_score(&d, &labels, class).map_err(|e| e.to_string())?;
        let want = anova_f(&d, &positive);
        if !close(got.score, want, 1e-9) {
            return Err(format!("case {case}: F {} vs ANOVA {want}", got.score));
        }
    }
    Ok(())
}

// ---- invariants ----

pub fn check_softmax_argmin(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let dim = r.random_range(2..10);
        let k = r.random_range(2..5);
        let net = TransformNet::init(dim, 6, 3, &mut r);
        let support: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|_| {
                (0..r.random_range(1..4))
                    .map(|_| random_vec(&mut r, dim))
                    .collect()
            })
            .collect();
        let refs: Vec<Vec<&[f64]>> = support
            .iter()
            .map(|c| c.iter().map(Vec::as_slice).collect())
            .collect();
        let protos = protonet::compute_prototypes(&net, &refs).map_err(|e| e.to_string())?;
        let x = random_vec(&mut r, dim);
        let p = protonet::class_probs(&net, &protos, &x).map_err(|e| e.to_string())?;
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("case {case}: probabilities sum to {sum}"));
        }
        let mut arg_max = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[arg_max] {
                arg_max = i;
            }
        }
        let z = net.forward(&x).map_err(|e| e.to_string())?;
        let mut arg_min = 0;
        let d = protos.squared_distances(&z);
        for (i, v) in d.iter().enumerate() {
            if *v < d[arg_min] {
                arg_min = i;
            }
        }
        let pred = protonet::predict(&net, &protos, &x).map_err(|e| e.to_string())?;
        if arg_max != arg_min || pred != arg_min {
            return Err(format!(
                "case {case}: argmax p {arg_max}, argmin d {arg_min}, predict {pred}"
            ));
        }
    }
    Ok(())
}

pub fn check_prototypes(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let dim = r.random_range(2..10);
        let net = TransformNet::init(dim, 6, 3, &mut r);
        let class: Vec<Vec<f64>> = (0..r.random_range(1..6))
            .map(|_| random_vec(&mut r, dim))
            .collect();
        let refs: Vec<&[f64]> = class.iter().map(Vec::as_slice).collect();
        let protos = protonet::compute_prototypes(&net, std::slice::from_ref(&refs))
            .map_err(|e| e.to_string())?;
        let mut mean = vec![0.0; 3];
        for x in &class {
            for (m, z) in mean
                .iter_mut()
                .zip(net.forward(x).map_err(|e| e.to_string())?)
            {
                *m += z / class.len() as f64;
            }
        }
        if protos.centers[0]
            .iter()
            .zip(&mean)
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(format!(
                "case {case}: center {:?} vs mean {mean:?}",
                protos.centers[0]
            ));
        }
        let mut shuffled = refs.clone();
        shuffled.reverse();
        shuffled.rotate_left(r.random_range(0..refs.len()));
        let again = protonet::compute_prototypes(&net, &[shuffled]).map_err(|e| e.to_string())?;
        if again.centers[0]
            .iter()
            .zip(&protos.centers[0])
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(format!("case {case}: support order changed the prototype"));
        }
    }
    Ok(())
}

pub fn check_vocabulary_pruning(seed: u64) -> Check {
    let train = synthetic::periodic_motifs(seed, 12, 80, 0.3);
    let (model, feats) =
        sfa::fit_transform(&train, &SfaParams::new(16, 3)).map_err(|e| e.to_string())?;
    for j in 0..model.dim() {
        if !feats.iter().any(|f| f[j] > 0.0) {
            return Err(format!(
                "column {j} ({}) is zero on every training series",
                model.vocabulary.words()[j]
            ));
        }
    }
    Ok(())
}

pub fn check_f_score_affine(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(4..20);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let d: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        let c = r.random_range(0.1..10.0);
        let a = r.random_range(-5.0..5.0);
        let moved: Vec<f64> = d.iter().map(|v| c * v + a).collect();
        let f0 = interpret::f_score(&d, &labels, 0)
            .map_err(|e| e.to_string())?
            .score;
        let f1 = interpret::f_score(&moved, &labels, 0)
            .map_err(|e| e.to_string())?
            .score;
        if !close(f0, f1, 1e-9) {
            return Err(format!("case {case}: F {f0} became {f1} under {c}*d + {a}"));
        }
    }
    Ok(())
}

pub fn check_stratified_tasks(seed: u64) -> Check {
    let pool = synthetic::periodic_motifs(seed, 31, 40, 0.1);
    let sizes: Vec<usize> = pool.indices_by_class().iter().map(Vec::len).collect();
    for mode in [
        SamplingMode::Shots(2),
        SamplingMode::Shots(5),
        SamplingMode::Ratio(0.3),
    ] {
        let tasks = harness::make_tasks(&pool, mode, 5, seed).map_err(|e| e.to_string())?;
        for t in &tasks {
            for (k, members) in t.indices.iter().enumerate() {
                let want = match mode {
                    SamplingMode::Shots(s) => s,
                    SamplingMode::Ratio(q) => ((q * sizes[k] as f64).round() as usize).max(1),
                };
                if members.len() != want {
                    return Err(format!(
                        "{mode} repeat {}: class {k} has {} of {want}",
                        t.repeat,
                        members.len()
                    ));
                }
                if members.iter().any(|&i| pool.series[i].label != k) {
                    return Err(format!(
                        "{mode} repeat {}: class {k} holds a foreign series",
                        t.repeat
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn check_windows(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let len = r.random_range(1..60);
        let wl = r.random_range(1..=len);
        let stride = r.random_range(1..6);
        let x = random_vec(&mut r, len);
        let got = dpsn::series::sliding_windows(&x, wl, stride).map_err(|e| e.to_string())?;
        let want = (len - wl) / stride + 1;
        if got.len() != want || dpsn::series::window_count(len, wl, stride) != want {
            return Err(format!(
                "case {case}: {} windows of {wl} in {len} at stride {stride}, want {want}",
                got.len()
            ));
        }
        if got
            .iter()
            .enumerate()
            .any(|(i, (s, w))| *s != i * stride || *w != &x[*s..*s + wl])
        {
            return Err(format!("case {case}: misplaced window"));
        }
    }
    Ok(())
}

pub fn check_znormalize_idempotent(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(2..40);
        let x: Vec<f64> = random_vec(&mut r, n)
            .iter()
            .map(|v| 7.0 * v + 3.0)
            .collect();
        let once = dpsn::series::znormalize(&x, 1e-8).map_err(|e| e.to_string())?;
        let twice = dpsn::series::znormalize(&once, 1e-8).map_err(|e| e.to_string())?;
        if once.iter().zip(&twice).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(format!("case {case}: second normalization moved values"));
        }
    }
    Ok(())
}

pub fn check_constant_tail(seed: u64) -> Check {
    let params = SfaParams::new(8, 2);
    let train = synthetic::periodic_motifs(seed, 9, 60, 0.3);
    let (model, _) = sfa::fit_transform(&train, &params).map_err(|e| e.to_string())?;
    let mut r = rng(seed);
    for case in 0..50 {
        let n = r.random_range(10..40);
        let mut x = random_vec(&mut r, n);
        let last = *x.last().unwrap();
        x.extend(std::iter::repeat_n(last, params.window_len));
        let base = model.transform(&x).map_err(|e| e.to_string())?;
        x.push(last);
        let longer = model.transform(&x).map_err(|e| e.to_string())?;
        if base != longer {
            return Err(format!(
                "case {case}: appending a constant sample changed the histogram"
            ));
        }
    }
    Ok(())
}

pub fn check_training_determinism(seed: u64) -> Check {
    let data = synthetic::periodic_motifs(seed, 12, 64, 0.3);
    let cfg = dpsn::TrainConfig {
        epochs: 50,
        hidden_dim: 16,
        output_dim: 8,
        seed,
        ..dpsn::TrainConfig::default()
    };
    let params = SfaParams::new(16, 2);
    let (a, _) = dpsn::DpsnModel::fit(&data, &params, &cfg).map_err(|e| e.to_string())?;
    let (b, _) = dpsn::DpsnModel::fit(&data, &params, &cfg).map_err(|e| e.to_string())?;
    if a != b {
        return Err("identical seed produced different parameters".into());
    }
    let ea = a
        .explain(&data, interpret::DistanceMode::Raw)
        .map_err(|e| e.to_string())?;
    let eb = b
        .explain(&data, interpret::DistanceMode::Raw)
        .map_err(|e| e.to_string())?;
    if ea.to_json().map_err(|e| e.to_string())? != eb.to_json().map_err(|e| e.to_string())? {
        return Err("identical models explained differently".into());
    }
    Ok(())
}

pub fn check_zero_distance_iff_subsequence(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(2..30);
        let m = r.random_range(1..=n);
        let t = random_vec(&mut r, n);
        let at = r.random_range(0..=n - m);
        let mut s = t[at..at + m].to_vec();
        let inside = r.random_bool(0.5);
        if !inside {
            let j = r.random_range(0..m);
            s[j] += 0.5;
        }
        let d = interpret::shapelet_distance(&s, &t).map_err(|e| e.to_string())?;
        let is_sub = t.windows(m).any(|w| w == s.as_slice());
        if (d <= 1e-12) != is_sub {
            return Err(format!(
                "case {case}: distance {d} but subsequence={is_sub}"
            ));
        }
    }
    Ok(())
}

pub fn check_lowpass_band(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.random_range(2..40);
        let x = random_vec(&mut r, n);
        let full = interpret::lowpass_reconstruct(&x, n / 2 + 1).map_err(|e| e.to_string())?;
        if x.iter().zip(&full).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(format!(
                "case {case}: full-band reconstruction is not the identity"
            ));
        }
        let w = r.random_range(1..=n / 2 + 1);
        let y = interpret::lowpass_reconstruct(&x, w).map_err(|e| e.to_string())?;
        for (k, (re, im)) in naive_dft(&y).into_iter().enumerate() {
            let freq = k.min(n - k);
            if freq >= w && re.hypot(im) > 1e-9 {
                return Err(format!("case {case}: energy at frequency {k} with w={w}"));
            }
        }
    }
    Ok(())
}

/// Recomputes every aggregate by hand on random results.
pub fn check_aggregation(cases: usize, seed: u64) -> Check {
    use dpsn::harness::{Method, RunResult};
    let methods = [Method::Dpsn, Method::NnSfa, Method::NnEuclid];
    let mut r = rng(seed);
    for case in 0..cases {
        let datasets = r.random_range(1..6);
        let repeats = r.random_range(1..6);
        let mut results = Vec::new();
        let mut raw = Vec::new();
        for d in 0..datasets {
            let mut row = Vec::new();
            for &m in &methods {
                // Coarse values make ties common.
                let accs: Vec<f64> = (0..repeats)
                    .map(|_| f64::from(r.random_range(0..5u8)) / 4.0)
                    .collect();
                results.push(RunResult::new(
                    format!("d{d}"),
                    m,
                    SamplingMode::Shots(2),
                    accs.clone(),
                ));
                row.push(accs);
            }
            raw.push(row);
        }
        let tables = harness::aggregate(&results).map_err(|e| e.to_string())?;
        let t = &tables[0];
        let mut rank_sum = [0.0; 3];
        let mut std_rank_sum = [0.0; 3];
        let mut wins = [0usize; 3];
        for (d, row) in raw.iter().enumerate() {
            let stats: Vec<(f64, f64)> = row
                .iter()
                .map(|a| {
                    let n = a.len() as f64;
                    let m = a.iter().sum::<f64>() / n;
                    (
                        m,
                        (a.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt(),
                    )
                })
                .collect();
            for (i, &(m, s)) in stats.iter().enumerate() {
                let (gm, gs) = t.rows[d].cells[i];
                if (gm - m).abs() > 1e-12 || (gs - s).abs() > 1e-12 {
                    return Err(format!("case {case}: cell ({d}, {i}) {gm}/{gs} vs {m}/{s}"));
                }
                // Mean-of-ties rank: 1 + #better + (#tied others) / 2.
                let better = stats.iter().filter(|o| o.0 > m).count() as f64;
                let tied = stats.iter().filter(|o| o.0 == m).count() as f64 - 1.0;
                rank_sum[i] += 1.0 + better + tied / 2.0;
                let better = stats.iter().filter(|o| o.1 < s).count() as f64;
                let tied = stats.iter().filter(|o| o.1 == s).count() as f64 - 1.0;
                std_rank_sum[i] += 1.0 + better + tied / 2.0;
                if stats.iter().all(|o| o.0 <= m) {
                    wins[i] += 1;
                }
            }
        }
        for i in 0..3 {
            let (ar, sr) = (
                rank_sum[i] / datasets as f64,
                std_rank_sum[i] / datasets as f64,
            );
            if (t.average_rank[i] - ar).abs() > 1e-12
                || (t.average_std_rank[i] - sr).abs() > 1e-12
                || t.wins[i] != wins[i]
            {
                return Err(format!("case {case}: method {i} ranks/wins disagree"));
            }
        }
    }
    Ok(())
}

pub fn check_ingestion(seed: u64) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("Toy_TRAIN.tsv");
    let data = synthetic::periodic_motifs(seed, 10, 30, 0.5);
    let text: String = data
        .series
        .iter()
        .map(|s| {
            let vals: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
            format!("{}\t{}\n", data.classes[s.label], vals.join("\t"))
        })
        .collect();
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    let a = dpsn::load_ucr(&path, dpsn::Delimiter::Auto).map_err(|e| e.to_string())?;
    let b = dpsn::load_ucr(&path, dpsn::Delimiter::Auto).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same bytes loaded differently".into());
    }
    if a.series
        .iter()
        .zip(&data.series)
        .any(|(x, y)| x.values != y.values)
    {
        return Err("values did not survive a text round trip".into());
    }
    Ok(())
}

/// The task's training subset shares no series with the test file.
pub fn check_no_leakage(seed: u64) -> Check {
    let train = synthetic::periodic_motifs(seed, 15, 40, 0.3);
    let test = synthetic::periodic_motifs(seed + 1000, 15, 40, 0.3);
    for t in
        harness::make_tasks(&train, SamplingMode::Shots(3), 3, seed).map_err(|e| e.to_string())?
    {
        let chosen = train.subset(&t.all_indices());
        if chosen
            .series
            .iter()
            .any(|s| test.series.iter().any(|q| q.values == s.values))
        {
            return Err(format!(
                "repeat {} shares a series with the test set",
                t.repeat
            ));
        }
    }
    Ok(())
}
