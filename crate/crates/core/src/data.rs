//! Datasets: synthetic generators, UCR-style text parsing, per-series
//! z-normalization, stratified 6:2:2 splits, noise injection and batching.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, shape_err, Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

/// Standard deviations below this are treated as this value when scaling.
pub const STD_FLOOR: f64 = 1e-8;

/// Series matrix `[M, n]` with integer class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    series: Vec<f64>,
    length: usize,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        series: Vec<f64>,
        length: usize,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if length == 0 {
            return Err(invalid!("series length must be positive"));
        }
        if series.len() != length * labels.len() {
            return Err(shape_err!(
                "{} values cannot form {} series of length {length}",
                series.len(),
                labels.len()
            ));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(invalid!("label {l} out of range for {class_count} classes"));
        }
        if let Some(i) = series.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("non-finite value in series {}", i / length));
        }
        Ok(LabeledDataset {
            name: name.into(),
            series,
            length,
            labels,
            class_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of series.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.length
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// All values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.series
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.series[i * self.length..(i + 1) * self.length]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.series.chunks_exact(self.length)
    }

    /// Instances per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset holding the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        if let Some(i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(invalid!("index {i} out of range for {} series", self.len()));
        }
        let mut series = Vec::with_capacity(indices.len() * self.length);
        for &i in indices {
            series.extend_from_slice(self.row(i));
        }
        Ok(LabeledDataset {
            name: self.name.clone(),
            series,
            length: self.length,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        })
    }

    /// Same labels and metadata with different values.
    fn with_values(&self, series: Vec<f64>) -> LabeledDataset {
        LabeledDataset {
            series,
            ..self.clone()
        }
    }
}

/// Two frequencies (cycles per series) summed into each class's signal.
pub type FrequencyPair = (f64, f64);

/// Which frequency table the synthetic generator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreqPreset {
    /// `(1,5), (1,20), (1,80)`. At integer time steps over 100 samples the
    /// 80-cycle tone aliases exactly onto the 20-cycle tone, so classes 2
    /// and 3 are indistinguishable.
    #[default]
    Paper,
    /// `(1,5), (1,20), (1,40)`: the same construction without the alias.
    WellPosed,
}

impl FreqPreset {
    pub fn table(self) -> Vec<FrequencyPair> {
        match self {
            FreqPreset::Paper => vec![(1.0, 5.0), (1.0, 20.0), (1.0, 80.0)],
            FreqPreset::WellPosed => vec![(1.0, 5.0), (1.0, 20.0), (1.0, 40.0)],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FreqPreset::Paper => "paper",
            FreqPreset::WellPosed => "well-posed",
        }
    }
}

impl FromStr for FreqPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(FreqPreset::Paper),
            "well-posed" => Ok(FreqPreset::WellPosed),
            other => Err(invalid!(
                "unknown frequency preset {other:?} (expected paper or well-posed)"
            )),
        }
    }
}

/// Parameters of the multi-tone synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub length: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma: f64,
    /// One pair per class.
    pub freqs: Vec<FrequencyPair>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_class: 2000,
            length: 100,
            sigma: 2.0,
            freqs: FreqPreset::Paper.table(),
        }
    }
}

impl SyntheticSpec {
    pub fn with_preset(mut self, preset: FreqPreset) -> Self {
        self.freqs = preset.table();
        self
    }
}

fn gaussian(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| invalid!("noise sigma {sigma}: {e}"))
}

/// Class `c` rows are `cos(2π f₁ t / n) + cos(2π f₂ t / n) + ω_t` for
/// `t = 1..=n`, `ω_t ~ N(0, σ²)`. Rows are grouped by class.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.length < 2 {
        return Err(invalid!("synthetic series length must be at least 2"));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(invalid!(
            "noise sigma must be finite and non-negative, got {}",
            spec.sigma
        ));
    }
    if spec.freqs.is_empty() {
        return Err(invalid!("frequency table is empty"));
    }
    let n = spec.length;
    let noise = gaussian(spec.sigma)?;
    let mut rng = rng::seeded(seed);
    let mut series = Vec::with_capacity(spec.freqs.len() * spec.n_per_class * n);
    let mut labels = Vec::with_capacity(spec.freqs.len() * spec.n_per_class);
    for (class, &(f1, f2)) in spec.freqs.iter().enumerate() {
        let clean: Vec<f64> = (1..=n)
            .map(|t| {
                let t = t as f64;
                math::cos(2.0 * PI * f1 * t / n as f64) + math::cos(2.0 * PI * f2 * t / n as f64)
            })
            .collect();
        for _ in 0..spec.n_per_class {
            if spec.sigma == 0.0 {
                series.extend_from_slice(&clean);
            } else {
                series.extend(clean.iter().map(|c| c + noise.sample(&mut rng)));
            }
            labels.push(class);
        }
    }
    let name = format!("synthetic(sigma={})", spec.sigma);
    LabeledDataset::new(name, series, n, labels, spec.freqs.len())
}

/// `(low, high)` tone frequencies, in cycles per half-series, used by
/// [`gen_phase_dataset`] for a series of length `length`.
pub fn phase_tones(length: usize) -> (usize, usize) {
    let half = length / 2;
    let low = (half / 25).max(1);
    let high = (half / 5).max(low + 1);
    (low, high)
}

/// Two classes with equal magnitude spectra but different time ordering.
///
/// Class 0 is a low tone on the first half followed by a high tone on the
/// second half; class 1 is the reverse. Each half-tone is
/// `cos(2π f (t + ½) / h)` on `h = length / 2` samples, which is
/// symmetric under time reversal, so class 1 is class 0 reversed. Whole-series
/// DCT magnitudes therefore coincide while half-series spectra differ.
pub fn gen_phase_dataset(
    n_per_class: usize,
    length: usize,
    sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !length.is_multiple_of(2) {
        return Err(invalid!("phase dataset length must be even, got {length}"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid!(
            "noise sigma must be finite and non-negative, got {sigma}"
        ));
    }
    let half = length / 2;
    let (low, high) = phase_tones(length);
    if 2 * high >= half {
        return Err(invalid!(
            "phase dataset length {length} is too short for two distinct tones"
        ));
    }
    let tone = |f: usize| -> Vec<f64> {
        (0..half)
            .map(|t| math::cos(2.0 * PI * f as f64 * (t as f64 + 0.5) / half as f64))
            .collect()
    };
    let (lo, hi) = (tone(low), tone(high));
    let class_a: Vec<f64> = lo.iter().chain(&hi).copied().collect();
    let class_b: Vec<f64> = hi.iter().chain(&lo).copied().collect();
    let noise = gaussian(sigma)?;
    let mut rng = rng::seeded(seed);
    let mut series = Vec::with_capacity(2 * n_per_class * length);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (class, clean) in [class_a, class_b].iter().enumerate() {
        for _ in 0..n_per_class {
            if sigma == 0.0 {
                series.extend_from_slice(clean);
            } else {
                series.extend(clean.iter().map(|c| c + noise.sample(&mut rng)));
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(format!("phase(sigma={sigma})"), series, length, labels, 2)
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses UCR-style text: one series per line, the class label first, then
/// the values. The delimiter (comma, tab, or runs of spaces) is detected
/// from the first non-blank line. Labels are remapped to `0..C` in sorted
/// order of their original numeric values.
pub fn parse_ucr(text: &str, name: &str) -> Result<LabeledDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let Some(&(_, first)) = lines.peek() else {
        return Err(invalid!("dataset {name:?} contains no series"));
    };
    let delim = if first.contains(',') {
        Some(',')
    } else if first.contains('\t') {
        Some('\t')
    } else {
        None
    };
    let mut raw_labels = Vec::new();
    let mut series = Vec::new();
    let mut length = None;
    for (lineno, line) in lines {
        let fields: Vec<&str> = match delim {
            Some(d) => line.split(d).map(str::trim).collect(),
            None => line.split_whitespace().collect(),
        };
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| parse_error(lineno, format!("not a number: {s:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(lineno, format!("non-finite value {s:?}")));
            }
            Ok(v)
        };
        let n = fields.len() - 1;
        if n == 0 {
            return Err(parse_error(lineno, "row has a label but no values"));
        }
        match length {
            None => length = Some(n),
            Some(expected) if expected != n => {
                return Err(parse_error(
                    lineno,
                    format!("row has {n} values, expected {expected}"),
                ))
            }
            _ => {}
        }
        raw_labels.push(parse(fields[0])?);
        for f in &fields[1..] {
            series.push(parse(f)?);
        }
    }
    let mut distinct = raw_labels.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let index: BTreeMap<u64, usize> = distinct
        .iter()
        .enumerate()
        .map(|(i, v)| (v.to_bits(), i))
        .collect();
    let labels = raw_labels.iter().map(|v| index[&v.to_bits()]).collect();
    LabeledDataset::new(
        name.to_string(),
        series,
        length.unwrap_or(0),
        labels,
        distinct.len(),
    )
}

/// Per-series mean and biased standard deviation.
pub fn series_stats(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, math::sqrt(var))
}

/// Each series to `(x - mean) / max(std, 1e-8)` with the biased std.
pub fn znormalize(ds: &LabeledDataset) -> LabeledDataset {
    let mut values = Vec::with_capacity(ds.series.len());
    for row in ds.rows() {
        let (mean, std) = series_stats(row);
        let scale = std.max(STD_FLOOR);
        values.extend(row.iter().map(|v| (v - mean) / scale));
    }
    ds.with_values(values)
}

/// Train/validation/test indices of one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Stratified 6:2:2 split. Each class is shuffled independently and cut at
/// `round(0.6 m)` and `round(0.6 m) + round(0.2 m)`. Index lists are sorted.
pub fn split(ds: &LabeledDataset, seed: u64) -> SplitSpec {
    let mut rng = rng::seeded(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let m = members.len();
        let n_train = ((m * 3 + 2) / 5).min(m);
        let n_val = ((m + 2) / 5).min(m - n_train);
        train.extend_from_slice(&members[..n_train]);
        val.extend_from_slice(&members[n_train..n_train + n_val]);
        test.extend_from_slice(&members[n_train + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    SplitSpec {
        train,
        val,
        test,
        seed,
    }
}

/// Adds i.i.d. `N(0, (sigma_rel · s)²)` noise, `s` being the standard
/// deviation of all values in the dataset.
pub fn add_noise(ds: &LabeledDataset, sigma_rel: f64, seed: u64) -> Result<LabeledDataset> {
    if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
        return Err(invalid!(
            "relative noise level must be finite and non-negative, got {sigma_rel}"
        ));
    }
    if sigma_rel == 0.0 {
        return Ok(ds.clone());
    }
    let (_, s) = series_stats(&ds.series);
    let noise = gaussian(sigma_rel * s)?;
    let mut rng = rng::seeded(seed);
    let values = ds
        .series
        .iter()
        .map(|v| v + noise.sample(&mut rng))
        .collect();
    Ok(ds.with_values(values))
}

/// One mini-batch: inputs `[B, 1, n]` and their labels.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

/// Iterator over mini-batches of a fixed index set.
pub struct Batches<'a> {
    ds: &'a LabeledDataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Iterator for Batches<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let idx = &self.order[self.pos..end];
        self.pos = end;
        let n = self.ds.length;
        let mut values = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            values.extend_from_slice(self.ds.row(i));
        }
        let inputs = Tensor::from_vec(&[idx.len(), 1, n], values).expect("batch shape");
        let labels = idx.iter().map(|&i| self.ds.labels[i]).collect();
        Some(Batch { inputs, labels })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl ExactSizeIterator for Batches<'_> {}

/// Mini-batches over `indices`; shuffled with `shuffle_seed` when given,
/// in index order otherwise. The last partial batch is kept.
pub fn batches<'a>(
    ds: &'a LabeledDataset,
    indices: &[usize],
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<Batches<'a>> {
    if batch_size < 1 {
        return Err(invalid!("batch size must be at least 1"));
    }
    if let Some(i) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(invalid!("index {i} out of range for {} series", ds.len()));
    }
    let mut order = indices.to_vec();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut rng::seeded(seed));
    }
    Ok(Batches {
        ds,
        order,
        batch_size,
        pos: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well_posed(n_per_class: usize, sigma: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_per_class,
            sigma,
            ..SyntheticSpec::default().with_preset(FreqPreset::WellPosed)
        }
    }

    #[test]
    fn noise_free_first_class_matches_formula() {
        let ds = gen_synthetic(
            &SyntheticSpec {
                n_per_class: 3,
                sigma: 0.0,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        assert_eq!(ds.len(), 9);
        for t in 1..=100 {
            let tf = t as f64;
            let expected = (2.0 * PI * tf / 100.0).cos() + (2.0 * PI * 5.0 * tf / 100.0).cos();
            assert!((ds.row(0)[t - 1] - expected).abs() < 1e-15);
        }
        for class in 0..3 {
            assert_eq!(ds.row(3 * class), ds.row(3 * class + 2));
        }
    }

    #[test]
    fn paper_table_aliases_last_two_classes() {
        let ds = gen_synthetic(
            &SyntheticSpec {
                n_per_class: 1,
                sigma: 0.0,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        for (a, b) in ds.row(1).iter().zip(ds.row(2)) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let wp = gen_synthetic(&well_posed(1, 0.0), 1).unwrap();
        let diff = wp
            .row(1)
            .iter()
            .zip(wp.row(2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 0.5);
    }

    #[test]
    fn generator_is_reproducible_and_checks_sigma() {
        let a = gen_synthetic(&well_posed(20, 2.0), 5).unwrap();
        assert_eq!(a, gen_synthetic(&well_posed(20, 2.0), 5).unwrap());
        assert_ne!(a, gen_synthetic(&well_posed(20, 2.0), 6).unwrap());
        assert!(gen_synthetic(&well_posed(2, -1.0), 0).is_err());
        assert!(gen_phase_dataset(2, 100, -0.1, 0).is_err());
    }

    #[test]
    fn phase_classes_mirror_each_other() {
        let ds = gen_phase_dataset(1, 100, 0.0, 0).unwrap();
        let rev: Vec<f64> = ds.row(0).iter().rev().copied().collect();
        for (a, b) in rev.iter().zip(ds.row(1)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gen_phase_dataset(1, 101, 0.0, 0).is_err());
        assert!(gen_phase_dataset(1, 8, 0.0, 0).is_err());
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (norm(a) * norm(b))
    }

    #[test]
    fn phase_classes_share_magnitude_spectra_only() {
        use crate::transform::dct;
        let ds = gen_phase_dataset(1, 100, 0.0, 0).unwrap();
        let (a, b) = (ds.row(0), ds.row(1));
        let magnitude =
            |x: &[f64]| -> Vec<f64> { dct(x).unwrap().coeffs().iter().map(|c| c.abs()).collect() };
        assert!(cosine(&magnitude(a), &magnitude(b)) > 0.99);
        // Time reversal flips the sign of every odd bin, so the signed
        // spectra are nearly orthogonal even though the magnitudes agree.
        let (sa, sb) = (dct(a).unwrap(), dct(b).unwrap());
        assert!(cosine(sa.coeffs(), sb.coeffs()).abs() < 0.5);
        let (ha, hb) = (dct(&a[..50]).unwrap(), dct(&b[..50]).unwrap());
        assert!(cosine(ha.coeffs(), hb.coeffs()) < 0.5);
    }

    #[test]
    fn parse_minimal_file() {
        let ds = parse_ucr("1,0.0,1.0\n2,1.0,0.0", "t").unwrap();
        assert_eq!((ds.len(), ds.series_len(), ds.class_count()), (2, 2, 2));
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.values(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(parse_ucr("1\t0.0\t1.0\n2\t1.0\t0.0\n", "t").unwrap(), ds);
        assert_eq!(parse_ucr("  1  0.0 1.0\n 2 1.0   0.0\n", "t").unwrap(), ds);
    }

    #[test]
    fn parse_remaps_labels_in_numeric_order() {
        let ds = parse_ucr("10,1\n-1,2\n2.0e0,3\n10,4\n", "t").unwrap();
        assert_eq!(ds.labels(), &[2, 0, 1, 2]);
        assert_eq!(ds.class_count(), 3);
    }

    #[test]
    fn parse_errors_name_the_line() {
        match parse_ucr("1,0,1\n\n2,1,0,5\n", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_ucr("1,0,1\n2,x,0\n", "t") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("\"x\""));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_ucr("\n  \n", "t").is_err());
        assert!(parse_ucr("1,nan\n", "t").is_err());
    }

    #[test]
    fn znormalize_rows() {
        let ds = LabeledDataset::new(
            "t",
            vec![3.0; 4]
                .into_iter()
                .chain([1.0, 2.0, 3.0, 6.0])
                .collect(),
            4,
            vec![0, 0],
            1,
        )
        .unwrap();
        let z = znormalize(&ds);
        assert!(z.row(0).iter().all(|v| *v == 0.0));
        let (m, s) = series_stats(z.row(1));
        assert!(m.abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_of_paper_sized_dataset() {
        let ds = gen_synthetic(
            &SyntheticSpec {
                sigma: 0.0,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let s = split(&ds, 42);
        assert_eq!(
            (s.train.len(), s.val.len(), s.test.len()),
            (3600, 1200, 1200)
        );
        for part in [&s.train, &s.val, &s.test] {
            let sub = ds.subset(part).unwrap();
            let expected = part.len() / 3;
            assert_eq!(sub.class_counts(), vec![expected; 3]);
        }
    }

    #[test]
    fn split_is_a_partition_and_seeded() {
        let ds = gen_synthetic(&well_posed(17, 0.0), 0).unwrap();
        let a = split(&ds, 1);
        assert_eq!(a, split(&ds, 1));
        let b = split(&ds, 2);
        assert_ne!(a.train, b.train);
        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.val)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        for part in [(&a.train, &b.train), (&a.val, &b.val), (&a.test, &b.test)] {
            assert_eq!(
                ds.subset(part.0).unwrap().class_counts(),
                ds.subset(part.1).unwrap().class_counts()
            );
        }
        // 17 per class: 10 / 3 / 4, each within one of 10.2 / 3.4 / 3.4.
        assert_eq!(ds.subset(&a.train).unwrap().class_counts(), vec![10; 3]);
        assert_eq!(ds.subset(&a.val).unwrap().class_counts(), vec![3; 3]);
    }

    #[test]
    fn zero_noise_is_identity() {
        let ds = gen_synthetic(&well_posed(5, 1.0), 0).unwrap();
        assert_eq!(add_noise(&ds, 0.0, 9).unwrap(), ds);
        let noisy = add_noise(&ds, 0.5, 9).unwrap();
        assert_ne!(noisy, ds);
        assert_eq!(noisy.labels(), ds.labels());
        assert!(add_noise(&ds, -1.0, 9).is_err());
    }

    #[test]
    fn batches_cover_indices_once() {
        let ds = gen_synthetic(&well_posed(100, 1.0), 0).unwrap();
        let idx: Vec<usize> = (0..300).step_by(2).collect();
        let it = batches(&ds, &idx, 64, Some(3)).unwrap();
        assert_eq!(it.len(), 3);
        let mut seen = Vec::new();
        let mut sizes = Vec::new();
        for b in it {
            sizes.push(b.labels.len());
            for (row, &label) in b.inputs.data().chunks(100).zip(&b.labels) {
                let i = (0..ds.len()).find(|&i| ds.row(i) == row).unwrap();
                assert_eq!(ds.labels()[i], label);
                seen.push(i);
            }
        }
        assert_eq!(sizes, vec![64, 64, 22]);
        let in_order = seen.clone();
        seen.sort_unstable();
        assert_eq!(seen, idx);
        assert_ne!(in_order, idx);
        assert!(batches(&ds, &idx, 0, None).is_err());
    }
}
