//! Spatial data containers, distances, covariance construction and CSV I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelParams};
use crate::scalar::Scalar;

/// A planar sample location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Location<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !Float::is_finite(x) || !Float::is_finite(y) {
            return Err(Error::Domain("location coordinates must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn distance(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        Float::sqrt(dx * dx + dy * dy)
    }
}

/// Measurements at a finite set of distinct sites, with optional covariates
/// (first column is the intercept) and optional stratum labels in `1..=K`.
#[derive(Debug, Clone)]
pub struct GeoDataset<T> {
    locations: Vec<Location<T>>,
    y: DVector<T>,
    covariates: Option<DMatrix<T>>,
    strata: Option<Vec<usize>>,
}

impl<T: Scalar> GeoDataset<T> {
    pub fn new(
        locations: Vec<Location<T>>,
        y: DVector<T>,
        covariates: Option<DMatrix<T>>,
        strata: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = locations.len();
        if y.len() != n {
            return Err(Error::Shape(format!(
                "{} locations but {} responses",
                n,
                y.len()
            )));
        }
        if let Some(x) = &covariates {
            if x.nrows() != n {
                return Err(Error::Shape(format!(
                    "{} locations but covariate matrix has {} rows",
                    n,
                    x.nrows()
                )));
            }
        }
        if let Some(s) = &strata {
            if s.len() != n {
                return Err(Error::Shape(format!(
                    "{} locations but {} stratum labels",
                    n,
                    s.len()
                )));
            }
            let k = *s.iter().max().unwrap_or(&0);
            if s.iter().any(|&l| l == 0 || l > k) {
                return Err(Error::Design("stratum labels must lie in 1..=K".into()));
            }
            for label in 1..=k {
                if !s.contains(&label) {
                    return Err(Error::Design(format!("stratum {label} is empty")));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if locations[i] == locations[j] {
                    return Err(Error::DuplicateSite { i, j });
                }
            }
        }
        Ok(Self {
            locations,
            y,
            covariates,
            strata,
        })
    }

    pub fn n(&self) -> usize {
        self.locations.len()
    }

    pub fn locations(&self) -> &[Location<T>] {
        &self.locations
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn covariates(&self) -> Option<&DMatrix<T>> {
        self.covariates.as_ref()
    }

    pub fn strata(&self) -> Option<&[usize]> {
        self.strata.as_deref()
    }

    /// Number of mean coefficients the model expects for this dataset.
    pub fn mean_dim(&self) -> usize {
        self.covariates.as_ref().map_or(1, |x| x.ncols())
    }

    /// Mean vector `X beta` (or `mu 1` without covariates) over `subset`.
    pub fn mean_vector(&self, beta: &DVector<T>, subset: &[usize]) -> Result<DVector<T>> {
        match &self.covariates {
            Some(x) => {
                if beta.len() != x.ncols() {
                    return Err(Error::Shape(format!(
                        "{} mean coefficients but {} covariate columns",
                        beta.len(),
                        x.ncols()
                    )));
                }
                Ok(DVector::from_iterator(
                    subset.len(),
                    subset.iter().map(|&i| x.row(i).transpose().dot(beta)),
                ))
            }
            None => {
                if beta.len() != 1 {
                    return Err(Error::Shape(format!(
                        "scalar mean expected, got {} coefficients",
                        beta.len()
                    )));
                }
                Ok(DVector::from_element(subset.len(), beta[0]))
            }
        }
    }

    /// Dataset physically restricted to the given site indices.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        for &i in idx {
            if i >= self.n() {
                return Err(Error::Index {
                    index: i,
                    len: self.n(),
                });
            }
        }
        let locations = idx.iter().map(|&i| self.locations[i]).collect();
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        let covariates = self
            .covariates
            .as_ref()
            .map(|x| DMatrix::from_fn(idx.len(), x.ncols(), |r, c| x[(idx[r], c)]));
        let strata = self
            .strata
            .as_ref()
            .map(|s| idx.iter().map(|&i| s[i]).collect());
        // subsetting cannot introduce duplicates if indices are distinct
        Ok(Self {
            locations,
            y,
            covariates,
            strata,
        })
    }
}

/// Symmetric pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix<T> {
    m: DMatrix<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    /// Distance matrix restricted to the given site indices.
    pub fn sub(&self, idx: &[usize]) -> Self {
        Self {
            m: DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.m[(idx[r], idx[c])]),
        }
    }

    /// Median of the off-diagonal distances.
    pub fn median_offdiag(&self) -> T {
        let n = self.n();
        let mut v = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                v.push(self.m[(i, j)]);
            }
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = v.len() / 2;
        if v.len() % 2 == 1 {
            v[mid]
        } else {
            (v[mid - 1] + v[mid]) / T::of(2.0)
        }
    }
}

/// Euclidean pairwise distances. Duplicate sites are rejected because a zero
/// off-diagonal distance breaks the covariance models downstream.
pub fn pairwise_distances<T: Scalar>(locations: &[Location<T>]) -> Result<DistanceMatrix<T>> {
    let n = locations.len();
    if n < 2 {
        return Err(Error::Shape("need at least two locations".into()));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = locations[i].distance(&locations[j]);
            if d == T::zero() {
                return Err(Error::DuplicateSite { i, j });
            }
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { m })
}

/// Exponential correlation rho(u, phi) = exp(-u / phi).
pub fn exp_correlation<T: Scalar>(u: T, phi: T) -> Result<T> {
    if !(phi > T::zero()) {
        return Err(Error::Domain(format!(
            "range parameter must be positive, got {}",
            phi.to64()
        )));
    }
    if u < T::zero() {
        return Err(Error::Domain("distance must be nonnegative".into()));
    }
    Ok(Float::exp(-u / phi))
}

/// Exponential correlation matrix over all pairs in `d`.
pub fn correlation_matrix<T: Scalar>(d: &DistanceMatrix<T>, phi: T) -> Result<DMatrix<T>> {
    if !(phi > T::zero()) {
        return Err(Error::Domain("range parameter must be positive".into()));
    }
    let n = d.n();
    let mut r = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = Float::exp(-d.get(i, j) / phi);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Model covariance over the sites of `d` (optionally restricted to `subset`):
/// `tau2 I + sigma2 W R W` with `W = Delta^{-1/2}` under M3 and `W = I` otherwise.
pub fn covariance_matrix<T: Scalar>(
    params: &ModelParams<T>,
    d: &DistanceMatrix<T>,
    model: ModelKind,
    subset: Option<&[usize]>,
) -> Result<DMatrix<T>> {
    params.validate(model)?;
    let dsub;
    let d = match subset {
        Some(idx) => {
            for &i in idx {
                if i >= d.n() {
                    return Err(Error::Index {
                        index: i,
                        len: d.n(),
                    });
                }
            }
            dsub = d.sub(idx);
            &dsub
        }
        None => d,
    };
    let n = d.n();
    let mut sigma = correlation_matrix(d, params.phi)?;
    sigma *= params.sigma2;
    if model == ModelKind::M3 {
        let log_delta = params
            .log_delta
            .as_ref()
            .ok_or_else(|| Error::Domain("M3 requires log_delta".into()))?;
        let need = subset.map_or(n, |_| log_delta.len());
        if subset.is_none() && log_delta.len() != n {
            return Err(Error::Shape(format!(
                "log_delta has length {} but {} sites",
                log_delta.len(),
                need
            )));
        }
        let w: Vec<T> = match subset {
            Some(idx) => idx
                .iter()
                .map(|&i| {
                    if i < log_delta.len() {
                        Ok(Float::exp(-log_delta[i] / T::of(2.0)))
                    } else {
                        Err(Error::Shape(format!(
                            "log_delta has length {} but subset references site {}",
                            log_delta.len(),
                            i
                        )))
                    }
                })
                .collect::<Result<_>>()?,
            None => log_delta
                .iter()
                .map(|&ld| Float::exp(-ld / T::of(2.0)))
                .collect(),
        };
        for i in 0..n {
            for j in 0..n {
                sigma[(i, j)] *= w[i] * w[j];
            }
        }
    }
    for i in 0..n {
        sigma[(i, i)] += params.tau2;
    }
    Ok(sigma)
}

/// Cholesky with a single jitter retry: on failure, add `1e-10 * mean(diag)`
/// to the diagonal once and retry before reporting the matrix as not PD.
pub fn cholesky_with_jitter<T: Scalar>(m: &DMatrix<T>) -> Result<Cholesky<T, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let n = m.nrows();
    let mean_diag = m.diagonal().iter().copied().sum::<T>() / T::of(n as f64);
    let jitter = T::of(1e-10) * mean_diag;
    let mut jm = m.clone();
    for i in 0..n {
        jm[(i, i)] += jitter;
    }
    Cholesky::new(jm).ok_or(Error::NotPd)
}

const HEADER_X1: &str = "x1";
const HEADER_X2: &str = "x2";
const HEADER_Y: &str = "y";
const HEADER_STRATUM: &str = "stratum";

/// Read a dataset from CSV with columns `x1,x2,y[,stratum][,cov1..covp]`.
/// Covariate columns, when present, get an intercept column prepended.
pub fn read_dataset<T: Scalar>(path: &Path) -> Result<GeoDataset<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.len() < 3 || headers[0] != HEADER_X1 || headers[1] != HEADER_X2 || headers[2] != HEADER_Y
    {
        return Err(Error::Parse {
            row: 1,
            col: headers.first().cloned().unwrap_or_default(),
            msg: "header must start with x1,x2,y".into(),
        });
    }
    let has_stratum = headers.get(3).is_some_and(|h| h == HEADER_STRATUM);
    let cov_start = if has_stratum { 4 } else { 3 };
    let n_cov = headers.len() - cov_start;

    let mut locations = Vec::new();
    let mut y = Vec::new();
    let mut strata = Vec::new();
    let mut covs: Vec<Vec<T>> = Vec::new();

    let parse_num = |field: &str, row: usize, col: &str| -> Result<T> {
        field
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(T::of)
            .ok_or_else(|| Error::Parse {
                row,
                col: col.to_string(),
                msg: format!("expected a finite number, got '{field}'"),
            })
    };

    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = rec_idx + 2; // 1-based, after the header
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                col: String::new(),
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let x1 = parse_num(&record[0], row, HEADER_X1)?;
        let x2 = parse_num(&record[1], row, HEADER_X2)?;
        locations.push(Location::new(x1, x2)?);
        y.push(parse_num(&record[2], row, HEADER_Y)?);
        if has_stratum {
            let s: usize = record[3].trim().parse().map_err(|_| Error::Parse {
                row,
                col: HEADER_STRATUM.into(),
                msg: format!("expected a positive integer, got '{}'", &record[3]),
            })?;
            strata.push(s);
        }
        let mut cov_row = Vec::with_capacity(n_cov);
        for c in 0..n_cov {
            cov_row.push(parse_num(&record[cov_start + c], row, &headers[cov_start + c])?);
        }
        covs.push(cov_row);
    }

    let n = locations.len();
    let covariates = if n_cov > 0 {
        let mut x = DMatrix::from_element(n, n_cov + 1, T::one());
        for (i, row) in covs.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                x[(i, c + 1)] = v;
            }
        }
        Some(x)
    } else {
        None
    };
    GeoDataset::new(
        locations,
        DVector::from_vec(y),
        covariates,
        if has_stratum { Some(strata) } else { None },
    )
}

/// Write a dataset in the CSV schema used by [`read_dataset`]. Values are
/// written in shortest round-trip form, so read(write(d)) is exact.
pub fn write_dataset<T: Scalar>(dataset: &GeoDataset<T>, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let n_cov = dataset.covariates().map_or(0, |x| x.ncols() - 1);
    let mut header = vec![HEADER_X1.to_string(), HEADER_X2.into(), HEADER_Y.into()];
    if dataset.strata().is_some() {
        header.push(HEADER_STRATUM.into());
    }
    for c in 1..=n_cov {
        header.push(format!("cov{c}"));
    }
    writer.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut record = vec![
            format!("{}", dataset.locations()[i].x.to64()),
            format!("{}", dataset.locations()[i].y.to64()),
            format!("{}", dataset.y()[i].to64()),
        ];
        if let Some(s) = dataset.strata() {
            record.push(s[i].to_string());
        }
        if let Some(x) = dataset.covariates() {
            for c in 1..x.ncols() {
                record.push(format!("{}", x[(i, c)].to64()));
            }
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Dense row-major space-separated matrix dump, for debugging.
pub fn write_matrix_text<T: Scalar>(m: &DMatrix<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)].to64())).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}
