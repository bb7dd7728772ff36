//! Likelihoods and conditional predictive samplers for the three spatial models.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geodata::{
    cholesky_with_jitter, correlation_matrix, covariance_matrix, pairwise_distances, DistanceMatrix,
    GeoDataset,
};
use crate::scalar::Scalar;
use crate::splits::SplitVector;

/// The three spatial response models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// Gaussian response.
    M1,
    /// Multivariate Student-t response.
    M2,
    /// Gaussian-Log-Gaussian scale mixture.
    M3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::M1, ModelKind::M2, ModelKind::M3];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::M1 => write!(f, "M1"),
            ModelKind::M2 => write!(f, "M2"),
            ModelKind::M3 => write!(f, "M3"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelKind::M1),
            "m2" => Ok(ModelKind::M2),
            "m3" => Ok(ModelKind::M3),
            other => Err(Error::Domain(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameters of the spatial models. Fields irrelevant to the active
/// [`ModelKind`] are `None` and ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// Mean coefficients; a single entry is the scalar mean `mu`.
    pub beta: DVector<T>,
    /// Partial sill, `> 0`.
    pub sigma2: T,
    /// Nugget, `>= 0`.
    pub tau2: T,
    /// Range of the exponential correlation, `> 0`.
    pub phi: T,
    /// Degrees of freedom (M2).
    pub nu: Option<T>,
    /// Mixing variance (M3).
    pub upsilon: Option<T>,
    /// Latent log mixing field ln delta(x_i) (M3), aligned with site indices.
    pub log_delta: Option<DVector<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn gaussian(mu: T, sigma2: T, tau2: T, phi: T) -> Self {
        Self {
            beta: DVector::from_element(1, mu),
            sigma2,
            tau2,
            phi,
            nu: None,
            upsilon: None,
            log_delta: None,
        }
    }

    pub fn student_t(mu: T, sigma2: T, tau2: T, phi: T, nu: T) -> Self {
        Self {
            nu: Some(nu),
            ..Self::gaussian(mu, sigma2, tau2, phi)
        }
    }

    pub fn glg(mu: T, sigma2: T, tau2: T, phi: T, upsilon: T, log_delta: DVector<T>) -> Self {
        Self {
            upsilon: Some(upsilon),
            log_delta: Some(log_delta),
            ..Self::gaussian(mu, sigma2, tau2, phi)
        }
    }

    pub fn with_beta(mut self, beta: DVector<T>) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self, model: ModelKind) -> Result<()> {
        if !(self.sigma2 > T::zero() && Float::is_finite(self.sigma2)) {
            return Err(Error::Domain("sigma2 must be positive and finite".into()));
        }
        if !(self.tau2 >= T::zero() && Float::is_finite(self.tau2)) {
            return Err(Error::Domain("tau2 must be nonnegative and finite".into()));
        }
        if !(self.phi > T::zero() && Float::is_finite(self.phi)) {
            return Err(Error::Domain("phi must be positive and finite".into()));
        }
        if self.beta.iter().any(|b| !Float::is_finite(*b)) {
            return Err(Error::Domain("mean coefficients must be finite".into()));
        }
        if model == ModelKind::M2 {
            match self.nu {
                Some(nu) if nu > T::zero() && Float::is_finite(nu) => {}
                _ => return Err(Error::Domain("M2 requires nu > 0".into())),
            }
        }
        if model == ModelKind::M3 {
            match self.upsilon {
                Some(u) if u > T::zero() && Float::is_finite(u) => {}
                _ => return Err(Error::Domain("M3 requires upsilon > 0".into())),
            }
            match &self.log_delta {
                Some(ld) if ld.iter().all(|v| Float::is_finite(*v)) => {}
                _ => return Err(Error::Domain("M3 requires a finite log_delta vector".into())),
            }
        }
        Ok(())
    }
}

/// Exact conditional law of the validation responses given the training ones:
/// mean plus covariance (M1, M3 given the completed mixing field), or
/// location, scale matrix and degrees of freedom (M2).
#[derive(Debug, Clone)]
pub struct ConditionalLaw<T> {
    pub mean: DVector<T>,
    /// Covariance (M1/M3) or multivariate-t scale matrix (M2).
    pub scale: DMatrix<T>,
    /// Degrees of freedom, `Some` only for M2.
    pub df: Option<T>,
}

impl<T: Scalar> ConditionalLaw<T> {
    /// Covariance of the conditional law (scale inflated by df/(df-2) for M2).
    pub fn covariance(&self) -> Result<DMatrix<T>> {
        match self.df {
            None => Ok(self.scale.clone()),
            Some(df) => {
                let two = T::of(2.0);
                if df <= two {
                    return Err(Error::Domain(
                        "conditional t covariance requires df > 2".into(),
                    ));
                }
                Ok(&self.scale * (df / (df - two)))
            }
        }
    }
}

fn mvn_quad_logdet<T: Scalar>(sigma: &DMatrix<T>, centered: &DVector<T>) -> Result<(T, T)> {
    let chol = cholesky_with_jitter(sigma)?;
    let l = chol.l_dirty();
    let mut logdet = T::zero();
    for i in 0..sigma.nrows() {
        logdet += T::of(2.0) * Float::ln(l[(i, i)]);
    }
    let z = chol.solve(centered);
    Ok((centered.dot(&z), logdet))
}

/// Log density of `y[subset]` under the model restricted to `subset`,
/// with pairwise distances recomputed from the dataset.
pub fn log_likelihood<T: Scalar>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    subset: &[usize],
) -> Result<T> {
    let d = pairwise_distances(data.locations())?;
    log_likelihood_with_dist(model, params, data, &d, subset)
}

/// [`log_likelihood`] with a precomputed full-data distance matrix, for hot loops.
pub fn log_likelihood_with_dist<T: Scalar>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    d: &DistanceMatrix<T>,
    subset: &[usize],
) -> Result<T> {
    if subset.is_empty() {
        return Err(Error::Shape("subset must be nonempty".into()));
    }
    if d.n() != data.n() {
        return Err(Error::Shape(format!(
            "distance matrix over {} sites but dataset has {}",
            d.n(),
            data.n()
        )));
    }
    params.validate(model)?;
    let n = subset.len();
    let mean = data.mean_vector(&params.beta, subset)?;
    let yc = DVector::from_iterator(n, subset.iter().map(|&i| data.y()[i])) - mean;
    let sigma = covariance_matrix(params, d, model, Some(subset))?;
    let (quad, logdet) = mvn_quad_logdet(&sigma, &yc)?;
    let nf = T::of(n as f64);
    let two = T::of(2.0);
    let ln_2pi = T::of((2.0 * std::f64::consts::PI).ln());
    let ll = match model {
        ModelKind::M1 | ModelKind::M3 => -(nf * ln_2pi + logdet + quad) / two,
        ModelKind::M2 => {
            let nu = params.nu.expect("validated");
            let ln_pi = T::of(std::f64::consts::PI.ln());
            Scalar::ln_gamma((nu + nf) / two) - Scalar::ln_gamma(nu / two)
                - nf / two * (Float::ln(nu) + ln_pi)
                - logdet / two
                - (nu + nf) / two * Float::ln(T::one() + quad / nu)
        }
    };
    Ok(ll)
}

struct JointBlocks<T> {
    sigma_tt: DMatrix<T>,
    sigma_vt: DMatrix<T>,
    sigma_vv: DMatrix<T>,
}

fn joint_blocks<T: Scalar>(
    params: &ModelParams<T>,
    d: &DistanceMatrix<T>,
    model: ModelKind,
    train: &[usize],
    valid: &[usize],
) -> Result<JointBlocks<T>> {
    let mut idx = train.to_vec();
    idx.extend_from_slice(valid);
    let sigma = covariance_matrix(params, d, model, Some(&idx))?;
    let nt = train.len();
    let nv = valid.len();
    Ok(JointBlocks {
        sigma_tt: sigma.view((0, 0), (nt, nt)).into(),
        sigma_vt: sigma.view((nt, 0), (nv, nt)).into(),
        sigma_vv: sigma.view((nt, nt), (nv, nv)).into(),
    })
}

fn gaussian_conditional<T: Scalar>(
    blocks: &JointBlocks<T>,
    mean_t: &DVector<T>,
    mean_v: &DVector<T>,
    y_t: &DVector<T>,
) -> Result<(DVector<T>, DMatrix<T>, T)> {
    let chol_tt = cholesky_with_jitter(&blocks.sigma_tt)?;
    let resid = y_t - mean_t;
    let alpha = chol_tt.solve(&resid);
    let mean = mean_v + &blocks.sigma_vt * &alpha;
    let cross_solved = chol_tt.solve(&blocks.sigma_vt.transpose());
    let schur = &blocks.sigma_vv - &blocks.sigma_vt * cross_solved;
    let mahal_t = resid.dot(&alpha);
    Ok((mean, schur, mahal_t))
}

/// Exact conditional moments of the validation responses given the training
/// data, used as the closed-form target for [`predictive_sample`].
pub fn conditional_moments<T: Scalar>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    split: &SplitVector,
) -> Result<ConditionalLaw<T>> {
    let d = pairwise_distances(data.locations())?;
    conditional_moments_with_dist(model, params, data, &d, split)
}

pub fn conditional_moments_with_dist<T: Scalar>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    d: &DistanceMatrix<T>,
    split: &SplitVector,
) -> Result<ConditionalLaw<T>> {
    if split.len() != data.n() {
        return Err(Error::Shape(format!(
            "split over {} sites but dataset has {}",
            split.len(),
            data.n()
        )));
    }
    params.validate(model)?;
    let train = split.training_indices();
    let valid = split.validation_indices();
    if model == ModelKind::M3 {
        let ld = params.log_delta.as_ref().expect("validated");
        if ld.len() != data.n() {
            return Err(Error::Shape(
                "M3 conditional moments require log_delta over all sites".into(),
            ));
        }
    }
    let mean_t = data.mean_vector(&params.beta, &train)?;
    let mean_v = data.mean_vector(&params.beta, &valid)?;
    let y_t = DVector::from_iterator(train.len(), train.iter().map(|&i| data.y()[i]));
    let blocks = joint_blocks(params, d, model, &train, &valid)?;
    let (mean, schur, mahal_t) = gaussian_conditional(&blocks, &mean_t, &mean_v, &y_t)?;
    match model {
        ModelKind::M1 | ModelKind::M3 => Ok(ConditionalLaw {
            mean,
            scale: schur,
            df: None,
        }),
        ModelKind::M2 => {
            let nu = params.nu.expect("validated");
            let nt = T::of(train.len() as f64);
            let factor = (nu + mahal_t) / (nu + nt);
            Ok(ConditionalLaw {
                mean,
                scale: schur * factor,
                df: Some(nu + nt),
            })
        }
    }
}

/// Completes the M3 latent field over the validation sites by drawing
/// `ln delta_V | ln delta_T` from its Gaussian conditional.
fn complete_log_delta<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    d: &DistanceMatrix<T>,
    train: &[usize],
    valid: &[usize],
    n: usize,
    rng: &mut R,
) -> Result<DVector<T>> {
    let upsilon = params.upsilon.expect("validated");
    let ld = params.log_delta.as_ref().expect("validated");
    let ld_t: DVector<T> = if ld.len() == n {
        DVector::from_iterator(train.len(), train.iter().map(|&i| ld[i]))
    } else if ld.len() == train.len() {
        ld.clone()
    } else {
        return Err(Error::Shape(format!(
            "log_delta has length {} but the split needs {} (training) or {} (all sites)",
            ld.len(),
            train.len(),
            n
        )));
    };
    let half_ups = upsilon / T::of(2.0);
    let r_tt = correlation_matrix(&d.sub(train), params.phi)?;
    let chol_tt = cholesky_with_jitter(&r_tt)?;
    let r_vt = DMatrix::from_fn(valid.len(), train.len(), |r, c| {
        Float::exp(-d.get(valid[r], train[c]) / params.phi)
    });
    let r_vv = correlation_matrix(&d.sub(valid), params.phi)?;
    let centered = ld_t.map(|v| v + half_ups);
    let alpha = chol_tt.solve(&centered);
    let mean_v = &r_vt * alpha - DVector::from_element(valid.len(), half_ups);
    let cross_solved = chol_tt.solve(&r_vt.transpose());
    let cov_v = (r_vv - &r_vt * cross_solved) * upsilon;
    let chol_v = cholesky_with_jitter(&cov_v)?;
    let z = DVector::from_fn(valid.len(), |_, _| T::sample_standard_normal(rng));
    let ld_v = mean_v + chol_v.l_dirty().lower_triangle() * z;
    let mut full = DVector::zeros(n);
    for (pos, &i) in train.iter().enumerate() {
        full[i] = ld_t[pos];
    }
    for (pos, &i) in valid.iter().enumerate() {
        full[i] = ld_v[pos];
    }
    Ok(full)
}

/// One draw from the conditional law of the validation responses given the
/// training responses and the parameters. For M3 the latent mixing field is
/// first completed at the validation sites; the completed `log_delta` is
/// returned alongside the draw so discrepancies can reuse it.
pub fn predictive_sample<T: Scalar, R: Rng + ?Sized>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    split: &SplitVector,
    rng: &mut R,
) -> Result<PredictiveDraw<T>> {
    let d = pairwise_distances(data.locations())?;
    predictive_sample_with_dist(model, params, data, &d, split, rng)
}

/// A replicated response over the validation sites of a split.
#[derive(Debug, Clone)]
pub struct PredictiveDraw<T> {
    pub y_rep: DVector<T>,
    /// Completed latent field over all sites (M3 only).
    pub log_delta_full: Option<DVector<T>>,
}

pub fn predictive_sample_with_dist<T: Scalar, R: Rng + ?Sized>(
    model: ModelKind,
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    d: &DistanceMatrix<T>,
    split: &SplitVector,
    rng: &mut R,
) -> Result<PredictiveDraw<T>> {
    if split.len() != data.n() {
        return Err(Error::Shape(format!(
            "split over {} sites but dataset has {}",
            split.len(),
            data.n()
        )));
    }
    params.validate(model)?;
    let train = split.training_indices();
    let valid = split.validation_indices();
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Split);
    }

    let effective;
    let (params_eff, log_delta_full) = if model == ModelKind::M3 {
        let full = complete_log_delta(params, d, &train, &valid, data.n(), rng)?;
        effective = ModelParams {
            log_delta: Some(full.clone()),
            ..params.clone()
        };
        (&effective, Some(full))
    } else {
        (params, None)
    };

    let law = conditional_moments_with_dist(model, params_eff, data, d, split)?;
    let chol = cholesky_with_jitter(&law.scale)?;
    let z = DVector::from_fn(valid.len(), |_, _| T::sample_standard_normal(rng));
    let mut perturb = chol.l_dirty().lower_triangle() * z;
    if let Some(df) = law.df {
        // t draw: scale the Gaussian perturbation by sqrt(df / chi^2_df)
        let two = T::of(2.0);
        let chi2 = T::sample_gamma(df / two, T::of(0.5), rng);
        perturb *= Float::sqrt(df / chi2);
    }
    let y_rep = law.mean + perturb;
    Ok(PredictiveDraw {
        y_rep,
        log_delta_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::Location;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn two_site_data() -> GeoDataset<f64> {
        // distance chosen so exp(-u/phi) = 0.5 with phi = 1
        let u = (2.0_f64).ln();
        let locs = vec![
            Location::new(0.0, 0.0).unwrap(),
            Location::new(u, 0.0).unwrap(),
        ];
        GeoDataset::new(locs, nalgebra::dvector![2.0, 0.0], None, None).unwrap()
    }

    #[test]
    fn gaussian_loglik_standard_normal_at_zero() {
        let locs = vec![
            Location::new(0.0, 0.0).unwrap(),
            Location::new(100.0, 0.0).unwrap(),
        ];
        let data = GeoDataset::new(locs, nalgebra::dvector![0.0, 1.0], None, None).unwrap();
        let params = ModelParams::gaussian(0.0, 0.5, 0.5, 0.1);
        let ll = log_likelihood(ModelKind::M1, &params, &data, &[0]).unwrap();
        assert_relative_eq!(ll, -0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-9);
    }

    #[test]
    fn m3_with_zero_log_delta_matches_m1() {
        let data = two_site_data();
        let m1 = ModelParams::gaussian(1.0, 1.3, 0.2, 0.4);
        let m3 = ModelParams::glg(1.0, 1.3, 0.2, 0.4, 0.7, nalgebra::dvector![0.0, 0.0]);
        for subset in [&[0usize][..], &[1], &[0, 1]] {
            let l1 = log_likelihood(ModelKind::M1, &m1, &data, subset).unwrap();
            let l3 = log_likelihood(ModelKind::M3, &m3, &data, subset).unwrap();
            assert_relative_eq!(l1, l3, epsilon = 1e-12);
        }
    }

    #[test]
    fn student_t_univariate_density_at_zero() {
        let locs = vec![
            Location::new(0.0, 0.0).unwrap(),
            Location::new(50.0, 0.0).unwrap(),
        ];
        let data = GeoDataset::new(locs, nalgebra::dvector![0.0, 0.0], None, None).unwrap();
        // sigma2 + tau2 = 1 so the marginal scale is one
        let params = ModelParams::student_t(0.0, 0.6, 0.4, 0.2, 3.0);
        let ll = log_likelihood(ModelKind::M2, &params, &data, &[0]).unwrap();
        // log density of standard t3 at 0
        let expected = crate::special::ln_gamma(2.0)
            - crate::special::ln_gamma(1.5)
            - 0.5 * (3.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(ll, expected, epsilon = 1e-9);
        assert_relative_eq!(expected, -1.0008888, epsilon = 1e-6);
    }

    #[test]
    fn m2_large_nu_approaches_m1() {
        let data = two_site_data();
        let m1 = ModelParams::gaussian(0.5, 1.0, 0.3, 1.0);
        let m2 = ModelParams::student_t(0.5, 1.0, 0.3, 1.0, 1e6);
        let l1 = log_likelihood(ModelKind::M1, &m1, &data, &[0, 1]).unwrap();
        let l2 = log_likelihood(ModelKind::M2, &m2, &data, &[0, 1]).unwrap();
        assert_relative_eq!(l1, l2, epsilon = 1e-3);
    }

    #[test]
    fn subset_loglik_matches_restricted_dataset() {
        let locs = vec![
            Location::new(0.1, 0.2).unwrap(),
            Location::new(0.7, 0.4).unwrap(),
            Location::new(0.3, 0.9).unwrap(),
            Location::new(0.8, 0.8).unwrap(),
        ];
        let data =
            GeoDataset::new(locs, nalgebra::dvector![1.0, -0.5, 2.0, 0.3], None, None).unwrap();
        let params = ModelParams::gaussian(0.4, 1.2, 0.25, 0.3);
        let subset = [0usize, 2, 3];
        let full = log_likelihood(ModelKind::M1, &params, &data, &subset).unwrap();
        let restricted = data.subset(&subset).unwrap();
        let direct = log_likelihood(ModelKind::M1, &params, &restricted, &[0, 1, 2]).unwrap();
        assert_relative_eq!(full, direct, epsilon = 1e-12);
    }

    #[test]
    fn kriging_two_site_conditional() {
        let data = two_site_data();
        let params = ModelParams::gaussian(0.0, 1.0, 0.0, 1.0);
        let split = SplitVector::from_flags(&[false, true]).unwrap();
        let law = conditional_moments(ModelKind::M1, &params, &data, &split).unwrap();
        assert_relative_eq!(law.mean[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(law.scale[(0, 0)], 0.75, epsilon = 1e-12);
        assert!(law.df.is_none());
    }

    #[test]
    fn conditional_t_degrees_of_freedom() {
        let data = two_site_data();
        let params = ModelParams::student_t(0.0, 1.0, 0.0, 1.0, 3.0);
        let split = SplitVector::from_flags(&[false, true]).unwrap();
        let law = conditional_moments(ModelKind::M2, &params, &data, &split).unwrap();
        assert_relative_eq!(law.df.unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(law.mean[0], 1.0, epsilon = 1e-12);
        // scale = (nu + d1)/(nu + n_T) * schur with d1 = 4
        assert_relative_eq!(law.scale[(0, 0)], 0.75 * 7.0 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_nugget_predictive_is_iid() {
        let data = two_site_data();
        // sigma2 ~ 0: draws should be N(mu, tau2) regardless of training data
        let params = ModelParams::gaussian(3.0, 1e-12, 2.0, 1.0);
        let split = SplitVector::from_flags(&[false, true]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let m = 100_000;
        let mut sum = 0.0;
        for _ in 0..m {
            sum += predictive_sample(ModelKind::M1, &params, &data, &split, &mut rng)
                .unwrap()
                .y_rep[0];
        }
        let mean = sum / m as f64;
        let se = (2.0_f64 / m as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * se, "mean {mean} vs 3.0");
    }

    #[test]
    fn all_training_split_is_rejected() {
        assert!(SplitVector::from_flags(&[false, false]).is_err());
    }
}
