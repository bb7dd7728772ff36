//! Simulation scenarios: completely random sampling (CRS), CRS with
//! contaminated observations, preferential sampling, and the small
//! Student-t demonstration dataset.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geodata::{
    cholesky_with_jitter, correlation_matrix, pairwise_distances, GeoDataset, Location,
};
use crate::rng::derive_rng;
use crate::scalar::Scalar;

/// Latent signal S(x), piecewise constant on an m x m lattice over the unit
/// square.
#[derive(Debug, Clone)]
pub struct FieldGrid<T> {
    m: usize,
    /// Cell values, index iy * m + ix.
    values: Vec<T>,
    pub sigma2: T,
    pub phi: T,
}

impl<T: Scalar> FieldGrid<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Location<T> {
        let m = T::of(self.m as f64);
        let half = T::of(0.5);
        Location {
            x: (T::of(ix as f64) + half) / m,
            y: (T::of(iy as f64) + half) / m,
        }
    }

    fn coord_to_cell(&self, c: T) -> usize {
        let idx = (c * T::of(self.m as f64)).to64().floor();
        (idx.max(0.0) as usize).min(self.m - 1)
    }

    /// Value of the cell containing the location (nearest cell at boundaries).
    pub fn value_at(&self, loc: &Location<T>) -> T {
        let ix = self.coord_to_cell(loc.x);
        let iy = self.coord_to_cell(loc.y);
        self.values[iy * self.m + ix]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseLaw<T> {
    Gaussian,
    StudentT { nu: T },
}

/// Full specification of one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub mu: T,
    pub sigma2: T,
    pub phi: T,
    pub tau2: T,
    /// Intensity lambda(x) = exp(alpha + beta * S(x)).
    pub alpha: T,
    pub beta: T,
    pub m: usize,
    pub law: ResponseLaw<T>,
    /// Thin or augment the point pattern to exactly this count.
    pub fixed_n: Option<usize>,
    /// 0-based observation indices receiving a U(6,8) * sd increment.
    pub outliers: Vec<usize>,
    pub max_cells: usize,
    pub max_points: usize,
}

impl<T: Scalar> ScenarioConfig<T> {
    fn base() -> Self {
        Self {
            mu: T::of(4.0),
            sigma2: T::of(1.5),
            phi: T::of(0.15),
            tau2: T::of(0.25),
            alpha: T::of(4.605),
            beta: T::zero(),
            m: 64,
            law: ResponseLaw::Gaussian,
            fixed_n: Some(82),
            outliers: Vec::new(),
            max_cells: 4096,
            max_points: 10_000,
        }
    }

    /// Completely random sampling, expected count about 100, kept at n = 82.
    pub fn crs() -> Self {
        Self::base()
    }

    /// CRS with observations 10, 48, 50 and 82 contaminated.
    pub fn crs_outlier() -> Self {
        Self {
            outliers: vec![9, 47, 49, 81],
            ..Self::base()
        }
    }

    /// Preferential sampling, intensity tied to the field, n = 100.
    pub fn preferential() -> Self {
        Self {
            alpha: T::of(2.996),
            beta: T::one(),
            fixed_n: Some(100),
            ..Self::base()
        }
    }

    /// Small heavy-tailed dataset: n = 52 joint Student-t responses.
    pub fn student_demo() -> Self {
        Self {
            mu: T::of(2.0),
            sigma2: T::one(),
            phi: T::of(0.3),
            tau2: T::zero(),
            alpha: T::of((52.0f64).ln()),
            beta: T::zero(),
            law: ResponseLaw::StudentT { nu: T::of(3.0) },
            fixed_n: Some(52),
            ..Self::base()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Domain("grid size m must be at least 2".into()));
        }
        if !(self.sigma2 > T::zero() && self.phi > T::zero() && self.tau2 >= T::zero()) {
            return Err(Error::Domain(
                "need sigma2 > 0, phi > 0, tau2 >= 0".into(),
            ));
        }
        if let ResponseLaw::StudentT { nu } = self.law {
            if !(nu > T::zero()) {
                return Err(Error::Domain("nu must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ScenarioKind {
    Crs,
    CrsOutlier,
    Preferential,
    StudentDemo,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Crs,
        ScenarioKind::CrsOutlier,
        ScenarioKind::Preferential,
        ScenarioKind::StudentDemo,
    ];

    pub fn config<T: Scalar>(self) -> ScenarioConfig<T> {
        match self {
            ScenarioKind::Crs => ScenarioConfig::crs(),
            ScenarioKind::CrsOutlier => ScenarioConfig::crs_outlier(),
            ScenarioKind::Preferential => ScenarioConfig::preferential(),
            ScenarioKind::StudentDemo => ScenarioConfig::student_demo(),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioKind::Crs => "crs",
            ScenarioKind::CrsOutlier => "crs-outlier",
            ScenarioKind::Preferential => "preferential",
            ScenarioKind::StudentDemo => "student-demo",
        };
        write!(f, "{s}")
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "crs" => Ok(ScenarioKind::Crs),
            "crs-outlier" | "crs_outlier" | "outlier" => Ok(ScenarioKind::CrsOutlier),
            "preferential" => Ok(ScenarioKind::Preferential),
            "student-demo" | "student_demo" | "demo" => Ok(ScenarioKind::StudentDemo),
            other => Err(Error::Domain(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Exact joint draw of the lattice field via Cholesky of sigma2 * R over the
/// cell centers.
pub fn simulate_field<T: Scalar, R: Rng + ?Sized>(
    cfg: &ScenarioConfig<T>,
    rng: &mut R,
) -> Result<FieldGrid<T>> {
    cfg.validate()?;
    let cells = cfg.m * cfg.m;
    if cells > cfg.max_cells {
        return Err(Error::Capacity(format!(
            "lattice has {} cells, cap is {}",
            cells, cfg.max_cells
        )));
    }
    let mut grid = FieldGrid {
        m: cfg.m,
        values: vec![T::zero(); cells],
        sigma2: cfg.sigma2,
        phi: cfg.phi,
    };
    let centers: Vec<Location<T>> = (0..cells)
        .map(|idx| grid.cell_center(idx % cfg.m, idx / cfg.m))
        .collect();
    let d = pairwise_distances(&centers)?;
    let sigma = correlation_matrix(&d, cfg.phi)? * cfg.sigma2;
    let chol = cholesky_with_jitter(&sigma)?;
    let z = DVector::from_fn(cells, |_, _| T::sample_standard_normal(rng));
    let s = chol.l_dirty().lower_triangle() * z;
    grid.values.copy_from_slice(s.as_slice());
    Ok(grid)
}

/// Inhomogeneous Poisson pattern with cell-wise constant intensity
/// exp(alpha + beta * S); uniform placement within each cell.
pub fn sample_point_process<T: Scalar, R: Rng + ?Sized>(
    field: &FieldGrid<T>,
    alpha: T,
    beta: T,
    max_points: usize,
    rng: &mut R,
) -> Result<Vec<Location<T>>> {
    let m = field.m;
    let area = 1.0 / (m * m) as f64;
    let expected: f64 = field
        .values
        .iter()
        .map(|&s| Float::exp(alpha + beta * s).to64() * area)
        .sum();
    if !expected.is_finite() || expected > max_points as f64 {
        return Err(Error::Capacity(format!(
            "expected point count {expected:.1} exceeds cap {max_points}"
        )));
    }
    let mut points = Vec::new();
    for iy in 0..m {
        for ix in 0..m {
            let rate = Float::exp(alpha + beta * field.values[iy * m + ix]) * T::of(area);
            let count = T::sample_poisson(rate, rng);
            for _ in 0..count {
                points.push(uniform_in_cell(field, ix, iy, rng));
            }
        }
    }
    Ok(points)
}

fn uniform_in_cell<T: Scalar, R: Rng + ?Sized>(
    field: &FieldGrid<T>,
    ix: usize,
    iy: usize,
    rng: &mut R,
) -> Location<T> {
    let m = T::of(field.m as f64);
    Location {
        x: (T::of(ix as f64) + T::sample_uniform01(rng)) / m,
        y: (T::of(iy as f64) + T::sample_uniform01(rng)) / m,
    }
}

/// Responses at the sampled locations: independent Gaussian noise around
/// mu + S, or a joint Student-t draw with scale tau2 I + sigma2 R.
pub fn observe<T: Scalar, R: Rng + ?Sized>(
    field: &FieldGrid<T>,
    locations: &[Location<T>],
    mu: T,
    tau2: T,
    law: ResponseLaw<T>,
    rng: &mut R,
) -> Result<DVector<T>> {
    if locations.is_empty() {
        return Err(Error::Shape("no locations to observe".into()));
    }
    match law {
        ResponseLaw::Gaussian => {
            let sd = Float::sqrt(tau2);
            Ok(DVector::from_fn(locations.len(), |i, _| {
                mu + field.value_at(&locations[i]) + sd * T::sample_standard_normal(rng)
            }))
        }
        ResponseLaw::StudentT { nu } => {
            let n = locations.len();
            let d = pairwise_distances(locations)?;
            let mut scale = correlation_matrix(&d, field.phi)? * field.sigma2;
            for i in 0..n {
                scale[(i, i)] += tau2;
            }
            let chol = cholesky_with_jitter(&scale)?;
            let z = DVector::from_fn(n, |_, _| T::sample_standard_normal(rng));
            let chi2 = T::sample_gamma(nu / T::of(2.0), T::of(0.5), rng);
            let factor = Float::sqrt(nu / chi2);
            let noise = chol.l_dirty().lower_triangle() * z;
            Ok(DVector::from_fn(n, |i, _| mu + factor * noise[i]))
        }
    }
}

/// Adds u * sd increments, u ~ U(6,8) independently, at the given 0-based
/// indices.
pub fn contaminate<T: Scalar, R: Rng + ?Sized>(
    y: &DVector<T>,
    indices: &[usize],
    sd: T,
    rng: &mut R,
) -> Result<DVector<T>> {
    let mut out = y.clone();
    for &i in indices {
        if i >= y.len() {
            return Err(Error::Index {
                index: i,
                len: y.len(),
            });
        }
        out[i] += T::sample_uniform(T::of(6.0), T::of(8.0), rng) * sd;
    }
    Ok(out)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScenarioMeta {
    pub scenario: String,
    pub seed: u64,
    /// Point count before any fixed-n conditioning.
    pub n_raw: usize,
    pub n: usize,
    /// "none", "thinned" or "augmented".
    pub conditioning: String,
    pub outlier_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput<T> {
    pub dataset: GeoDataset<T>,
    pub field: FieldGrid<T>,
    pub meta: ScenarioMeta,
}

/// Runs a preset scenario end to end with per-stage derived streams.
pub fn simulate_scenario<T: Scalar>(kind: ScenarioKind, seed: u64) -> Result<ScenarioOutput<T>> {
    simulate_with(&kind.config(), &kind.to_string(), seed)
}

/// Field draw, point pattern, optional fixed-n conditioning, responses, and
/// optional contamination, each on its own RNG stream.
pub fn simulate_with<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    name: &str,
    seed: u64,
) -> Result<ScenarioOutput<T>> {
    cfg.validate()?;
    let field = simulate_field(cfg, &mut derive_rng(seed, 0))?;
    let mut points = sample_point_process(
        &field,
        cfg.alpha,
        cfg.beta,
        cfg.max_points,
        &mut derive_rng(seed, 1),
    )?;
    let n_raw = points.len();
    let mut conditioning = "none".to_string();
    if let Some(n) = cfg.fixed_n {
        if n == 0 {
            return Err(Error::Domain("fixed_n must be positive".into()));
        }
        let mut rng = derive_rng(seed, 2);
        match n_raw.cmp(&n) {
            std::cmp::Ordering::Greater => {
                // keep a uniform subset of the realized points
                for i in 0..n {
                    let j = rng.random_range(i..points.len());
                    points.swap(i, j);
                }
                points.truncate(n);
                conditioning = "thinned".into();
            }
            std::cmp::Ordering::Less => {
                // extra points from the same intensity
                let m = field.m;
                let weights: Vec<f64> = field
                    .values
                    .iter()
                    .map(|&s| Float::exp(cfg.alpha + cfg.beta * s).to64())
                    .collect();
                let total: f64 = weights.iter().sum();
                while points.len() < n {
                    let mut u = rng.random_range(0.0..total);
                    let mut cell = 0usize;
                    for (c, &w) in weights.iter().enumerate() {
                        if u < w {
                            cell = c;
                            break;
                        }
                        u -= w;
                        cell = c;
                    }
                    points.push(uniform_in_cell(&field, cell % m, cell / m, &mut rng));
                }
                conditioning = "augmented".into();
            }
            std::cmp::Ordering::Equal => {}
        }
    }
    if points.is_empty() {
        return Err(Error::Domain("point process produced no locations".into()));
    }
    let y = observe(
        &field,
        &points,
        cfg.mu,
        cfg.tau2,
        cfg.law,
        &mut derive_rng(seed, 3),
    )?;
    let y = if cfg.outliers.is_empty() {
        y
    } else {
        contaminate(
            &y,
            &cfg.outliers,
            Float::sqrt(cfg.sigma2),
            &mut derive_rng(seed, 4),
        )?
    };
    let n = points.len();
    let dataset = GeoDataset::new(points, y, None, None)?;
    Ok(ScenarioOutput {
        dataset,
        field,
        meta: ScenarioMeta {
            scenario: name.into(),
            seed,
            n_raw,
            n,
            conditioning,
            outlier_indices: cfg.outliers.clone(),
        },
    })
}
