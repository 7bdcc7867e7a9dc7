//! Synthetic data generators and the CSV loader.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::config::{DataConfig, DataSource};
use crate::linalg::{matmul, qf, Matrix};
use crate::optim::{Dataset, Targets};

/// Draws `samples` columns from `N(0, Q·diag(spectrum)·Qᵀ)` with a seeded
/// random orthogonal `Q`, then subtracts the empirical mean exactly.
pub fn gen_gaussian_data(n: usize, samples: usize, spectrum: &[f64], seed: u64) -> Result<Matrix> {
    if spectrum.len() != n {
        return Err(Error::Input(format!(
            "spectrum has {} entries, expected {n}",
            spectrum.len()
        )));
    }
    if let Some(bad) = spectrum.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Input(format!(
            "spectrum entries must be positive, got {bad}"
        )));
    }
    if n == 0 || samples == 0 {
        return Err(Error::Input("empty data request".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = qf(&Matrix::random_normal(n, n, 1.0, &mut rng))?;
    let roots: Vec<f64> = spectrum.iter().map(|v| v.sqrt()).collect();
    let z = Matrix::random_normal(n, samples, 1.0, &mut rng).scale_rows(&roots)?;
    let mut x = matmul(&q, &z)?;
    center(&mut x);
    Ok(x)
}

/// Subtracts each row's mean.
pub fn center(x: &mut Matrix) {
    let means: Vec<f64> = x.row_means().iter().map(|m| -m).collect();
    x.add_to_rows(&means).expect("row count matches");
}

/// Default PCA spectrum: `p` leading values `p+3, …, 4`, then a tail
/// `1.5·0.85^k`, leaving a gap of more than 2× at `p`.
pub fn default_spectrum(n: usize, p: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i < p {
                (p - 1 - i) as f64 + 4.0
            } else {
                1.5 * 0.85f64.powi((i - p) as i32)
            }
        })
        .collect()
}

/// Labeled Gaussian mixture: class `c` has center `separation·μ_c` with
/// `μ_c ~ N(0, I/n)`, within-class noise `N(0, I)`. Labels cycle through
/// the classes so any contiguous split is balanced.
pub fn gaussian_mixture(
    n: usize,
    samples: usize,
    classes: usize,
    separation: f64,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    if n == 0 || samples == 0 || classes == 0 {
        return Err(Error::Input("empty data request".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = Matrix::random_normal(n, classes, separation / (n as f64).sqrt(), &mut rng);
    let mut x = Matrix::random_normal(n, samples, 1.0, &mut rng);
    let labels: Vec<usize> = (0..samples).map(|j| j % classes).collect();
    for (j, &c) in labels.iter().enumerate() {
        for i in 0..n {
            x.set(i, j, x.get(i, j) + centers.get(i, c));
        }
    }
    Ok((x, labels))
}

/// Inputs `x ~ N(0, I)` labeled by `argmax(A·Bᵀx)` with `A` (`classes × r`)
/// and `B` (`n × r`) Gaussian, so the Bayes-optimal map has rank `r`.
pub fn teacher_classification(
    n: usize,
    samples: usize,
    classes: usize,
    rank: usize,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    if n == 0 || samples == 0 || classes == 0 || rank == 0 {
        return Err(Error::Input("empty data request".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::random_normal(classes, rank, 1.0, &mut rng);
    let b = Matrix::random_normal(n, rank, 1.0 / (n as f64).sqrt(), &mut rng);
    let x = Matrix::random_normal(n, samples, 1.0, &mut rng);
    let logits = matmul(&a, &crate::linalg::matmul_tn(&b, &x)?)?;
    let labels = (0..samples)
        .map(|j| {
            (0..classes)
                .max_by(|&p, &q| logits.get(p, j).total_cmp(&logits.get(q, j)))
                .expect("classes > 0")
        })
        .collect();
    Ok((x, labels))
}

/// Reads a headerless numeric CSV, one sample per row. With `labels`, the
/// last column holds a nonnegative integer class.
pub fn load_csv(path: &Path, labels: bool) -> Result<(Matrix, Option<Vec<usize>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut classes = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let mut values = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Input(format!(
                    "{}:{}: not a number: {field:?}",
                    path.display(),
                    line + 1
                ))
            })?;
            values.push(v);
        }
        if labels {
            let last = values.pop().ok_or_else(|| {
                Error::Input(format!("{}:{}: empty row", path.display(), line + 1))
            })?;
            if last < 0.0 || last.fract() != 0.0 {
                return Err(Error::Input(format!(
                    "{}:{}: label {last} is not a class index",
                    path.display(),
                    line + 1
                )));
            }
            classes.push(last as usize);
        }
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(Error::Input(format!(
                    "{}:{}: expected {} features, found {}",
                    path.display(),
                    line + 1,
                    first.len(),
                    values.len()
                )));
            }
        }
        rows.push(values);
    }
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 {
        return Err(Error::Input(format!("{}: no data", path.display())));
    }
    let x = Matrix::from_fn(n, rows.len(), |i, j| rows[j][i]);
    if !x.is_finite() {
        return Err(Error::Input(format!(
            "{}: non-finite value",
            path.display()
        )));
    }
    Ok((x, labels.then_some(classes)))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Input(format!("{}: {e}", path.display()))
    }
}

/// Materializes the dataset a config describes. `rank` is used for the
/// default PCA spectrum.
pub fn build_dataset(config: &DataConfig, rank: usize) -> Result<Dataset> {
    let (n, samples, seed) = (config.n, config.samples, config.seed);
    Ok(match config.source {
        DataSource::SyntheticGaussian => {
            let spectrum = config
                .spectrum
                .clone()
                .unwrap_or_else(|| default_spectrum(n, rank.min(n)));
            Dataset {
                inputs: gen_gaussian_data(n, samples, &spectrum, seed)?,
                targets: Targets::Reconstruction,
            }
        }
        DataSource::GaussianMixture => {
            let (x, labels) =
                gaussian_mixture(n, samples, config.classes, config.separation, seed)?;
            Dataset {
                inputs: x,
                targets: Targets::Labels(labels),
            }
        }
        DataSource::Teacher => {
            let (x, labels) =
                teacher_classification(n, samples, config.classes, config.teacher_rank, seed)?;
            Dataset {
                inputs: x,
                targets: Targets::Labels(labels),
            }
        }
        DataSource::CsvFile => {
            let path = config
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("data.path is required for csv-file".into()))?;
            let (x, labels) = load_csv(path, config.labels)?;
            Dataset {
                inputs: x,
                targets: labels.map_or(Targets::Reconstruction, Targets::Labels),
            }
        }
    })
}

/// Number of classes in a labeled dataset.
pub fn class_count(dataset: &Dataset) -> Option<usize> {
    match &dataset.targets {
        Targets::Labels(l) => l.iter().max().map(|m| m + 1),
        _ => None,
    }
}
