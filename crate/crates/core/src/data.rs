//! Synthetic binary classification instances.
//!
//! Each class owns `clusters_per_class` Gaussian clusters whose centroids sit
//! on distinct vertices of the hypercube `{±class_sep}^d`. Samples are
//! standard-normal deviations passed through a per-cluster random `d×d` mixing
//! matrix (entries uniform in `[−1, 1]`) to correlate features, then shifted to
//! the centroid. Features are min-max scaled into `[0, 2π]` and split into
//! train/test partitions by a plain seeded shuffle.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::class_counts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

/// Generation parameters; also written out as the dataset manifest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub d: usize,
    pub n: usize,
    pub class_sep: f64,
    pub clusters: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub d: usize,
    pub seed: u64,
    pub class_sep: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_split(&self) -> bool {
        !self.train_indices.is_empty() || !self.test_indices.is_empty()
    }

    fn subset(&self, indices: &[usize]) -> (Vec<Vec<f64>>, Vec<i8>) {
        (
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    pub fn train(&self) -> (Vec<Vec<f64>>, Vec<i8>) {
        self.subset(&self.train_indices)
    }

    pub fn test(&self) -> (Vec<Vec<f64>>, Vec<i8>) {
        self.subset(&self.test_indices)
    }

    pub fn partition_of(&self) -> Vec<Option<Partition>> {
        let mut out = vec![None; self.len()];
        for &i in &self.train_indices {
            out[i] = Some(Partition::Train);
        }
        for &i in &self.test_indices {
            out[i] = Some(Partition::Test);
        }
        out
    }

    /// Header `f0,…,f{d−1},label,partition`; floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let partitions = self.partition_of();
        if partitions.iter().any(Option::is_none) {
            return Err(Error::Argument("dataset must be split before saving".into()));
        }
        let mut header: Vec<String> = (0..self.d).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        header.push("partition".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, row) in self.features.iter().enumerate() {
            let mut fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            fields.push(self.labels[i].to_string());
            fields.push(
                match partitions[i] {
                    Some(Partition::Train) => "train",
                    _ => "test",
                }
                .into(),
            );
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`Dataset::write_csv`]. Seed and class
    /// separation are not stored in the file and come back as zero.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
        };
        let columns: Vec<&str> = header.trim().split(',').collect();
        if columns.len() < 3
            || columns[columns.len() - 2] != "label"
            || columns[columns.len() - 1] != "partition"
        {
            return Err(Error::Parse { line: 1, message: format!("bad header '{header}'") });
        }
        let d = columns.len() - 2;
        for (j, name) in columns[..d].iter().enumerate() {
            if *name != format!("f{j}") {
                return Err(Error::Parse { line: 1, message: format!("bad column name '{name}'") });
            }
        }
        let mut ds = Dataset {
            features: Vec::new(),
            labels: Vec::new(),
            train_indices: Vec::new(),
            test_indices: Vec::new(),
            d,
            seed: 0,
            class_sep: 0.0,
        };
        for (index, line) in lines {
            let line_no = index + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != d + 2 {
                return Err(parse_err(format!("expected {} fields, got {}", d + 2, fields.len())));
            }
            let row = fields[..d]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|e| parse_err(format!("'{v}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let label = match fields[d] {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return Err(parse_err(format!("label '{other}' is not ±1"))),
            };
            let i = ds.labels.len();
            match fields[d + 1] {
                "train" => ds.train_indices.push(i),
                "test" => ds.test_indices.push(i),
                other => return Err(parse_err(format!("partition '{other}' is not train/test"))),
            }
            ds.features.push(row);
            ds.labels.push(label);
        }
        Ok(ds)
    }
}

/// Draws an unscaled, unsplit instance. Deterministic in `seed`.
pub fn generate_dataset(
    d: usize,
    n_samples: usize,
    class_sep: f64,
    clusters_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if d == 0 {
        return Err(Error::Argument("need at least one feature".into()));
    }
    if n_samples == 0 || !n_samples.is_multiple_of(2) {
        return Err(Error::Argument(format!("n_samples must be even and positive, got {n_samples}")));
    }
    if !(class_sep > 0.0) {
        return Err(Error::Argument(format!("class_sep must be positive, got {class_sep}")));
    }
    if clusters_per_class == 0 {
        return Err(Error::Argument("need at least one cluster per class".into()));
    }
    let n_clusters = 2 * clusters_per_class;
    if d < usize::BITS as usize && n_clusters > 1usize << d {
        return Err(Error::Placement { clusters: n_clusters, dim: d });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices: HashSet<Vec<bool>> = HashSet::new();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(n_clusters);
    while centroids.len() < n_clusters {
        let vertex: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
        if vertices.insert(vertex.clone()) {
            centroids.push(vertex.iter().map(|&b| if b { class_sep } else { -class_sep }).collect());
        }
    }

    let per_class = n_samples / 2;
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for (c, centroid) in centroids.iter().enumerate() {
        let label: i8 = if c % 2 == 0 { -1 } else { 1 };
        let k = c / 2;
        let count = per_class / clusters_per_class + usize::from(k < per_class % clusters_per_class);
        let mixing: Vec<Vec<f64>> =
            (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
        for _ in 0..count {
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let row: Vec<f64> = (0..d)
                .map(|i| centroid[i] + (0..d).map(|j| z[j] * mixing[j][i]).sum::<f64>())
                .collect();
            features.push(row);
            labels.push(label);
        }
    }

    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut rng);
    Ok(Dataset {
        features: order.iter().map(|&i| features[i].clone()).collect(),
        labels: order.iter().map(|&i| labels[i]).collect(),
        train_indices: Vec::new(),
        test_indices: Vec::new(),
        d,
        seed,
        class_sep,
    })
}

/// Per-column affine map onto `[0, 2π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or_else(|| Error::Size("no rows to fit".into()))?;
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        if let Some(j) = (0..d).find(|&j| !(maxs[j] > mins[j])) {
            return Err(Error::DegenerateFeature(j));
        }
        Ok(Self { mins, maxs })
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| (v - self.mins[j]) / (self.maxs[j] - self.mins[j]) * TAU)
                    .collect()
            })
            .collect()
    }
}

/// Scales every column onto `[0, 2π]` using its own min and max.
pub fn minmax_scale(features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(MinMaxScaler::fit(features)?.transform(features))
}

/// Random partition with `round(ratio · n)` training points.
pub fn split(dataset: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let n = dataset.len();
    let n_train = (ratio * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Size(format!("ratio {ratio} leaves an empty side for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    let labels_of = |idx: &[usize]| idx.iter().map(|&i| dataset.labels[i]).collect::<Vec<_>>();
    class_counts(&labels_of(&train))?;
    class_counts(&labels_of(&test))?;
    Ok(Dataset {
        train_indices: train,
        test_indices: test,
        ..dataset.clone()
    })
}

/// Options for the generate → scale → split pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepareOptions {
    pub n_samples: usize,
    pub class_sep: f64,
    pub clusters_per_class: usize,
    pub train_ratio: f64,
    /// Fit the scaler on the training partition only.
    pub fit_scaler_on_train: bool,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            n_samples: 100,
            class_sep: 1.0,
            clusters_per_class: 2,
            train_ratio: 0.5,
            fit_scaler_on_train: false,
        }
    }
}

/// Generates, scales and splits one instance; a pure function of its inputs.
pub fn prepare_dataset(d: usize, options: &PrepareOptions, seed: u64) -> Result<Dataset> {
    let raw = generate_dataset(d, options.n_samples, options.class_sep, options.clusters_per_class, seed)?;
    // the split stream is decorrelated from the generation stream
    let split_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    if options.fit_scaler_on_train {
        let mut ds = split(&raw, options.train_ratio, split_seed)?;
        let (train, _) = ds.train();
        ds.features = MinMaxScaler::fit(&train)?.transform(&ds.features);
        Ok(ds)
    } else {
        let scaled = Dataset {
            features: minmax_scale(&raw.features)?,
            ..raw
        };
        split(&scaled, options.train_ratio, split_seed)
    }
}
