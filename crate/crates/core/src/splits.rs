//! Split vectors, the uniform and stratified split priors, and their samplers.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geodata::Location;
use crate::rng::derive_rng;
use crate::scalar::Scalar;
use crate::special::ln_choose;

/// A 0/1 partition of the `n` sites: `false` = training, `true` = validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitVector {
    flags: Vec<bool>,
}

impl SplitVector {
    pub fn from_flags(flags: &[bool]) -> Result<Self> {
        let n_v = flags.iter().filter(|&&f| f).count();
        if n_v == 0 || n_v == flags.len() {
            return Err(Error::Split);
        }
        Ok(Self {
            flags: flags.to_vec(),
        })
    }

    pub fn from_validation_indices(n: usize, validation: &[usize]) -> Result<Self> {
        let mut flags = vec![false; n];
        for &i in validation {
            if i >= n {
                return Err(Error::Index { index: i, len: n });
            }
            flags[i] = true;
        }
        Self::from_flags(&flags)
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_validation(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn n_validation(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn n_training(&self) -> usize {
        self.len() - self.n_validation()
    }

    pub fn training_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.flags[i]).collect()
    }

    pub fn validation_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.flags[i]).collect()
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }
}

/// A uniform draw over all splits with exactly `n_v` validation sites,
/// via partial Fisher-Yates selection of the validation indices.
pub fn sample_uniform_split<R: Rng + ?Sized>(n: usize, n_v: usize, rng: &mut R) -> Result<SplitVector> {
    if n_v < 1 || n_v >= n {
        return Err(Error::Design(format!(
            "need 1 <= n_V < n, got n_V = {n_v}, n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..n_v {
        let j = k + rng.random_range(0..n - k);
        idx.swap(k, j);
    }
    SplitVector::from_validation_indices(n, &idx[..n_v])
}

/// Stratified sampling design: stratum labels per site plus per-stratum
/// validation sample sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedDesign {
    labels: Vec<usize>,
    n_k: Vec<usize>,
    n_vk: Vec<usize>,
}

impl StratifiedDesign {
    /// Build from site labels in `1..=K` and validation sizes per stratum.
    pub fn from_labels(labels: Vec<usize>, n_vk: Vec<usize>) -> Result<Self> {
        let k = *labels.iter().max().unwrap_or(&0);
        if k == 0 {
            return Err(Error::Design("no strata defined".into()));
        }
        if labels.iter().any(|&l| l == 0 || l > k) {
            return Err(Error::Design("stratum labels must lie in 1..=K".into()));
        }
        if n_vk.len() != k {
            return Err(Error::Design(format!(
                "{} strata but {} validation sizes",
                k,
                n_vk.len()
            )));
        }
        let mut n_k = vec![0usize; k];
        for &l in &labels {
            n_k[l - 1] += 1;
        }
        for s in 0..k {
            if n_k[s] == 0 {
                return Err(Error::Design(format!("stratum {} is empty", s + 1)));
            }
            if n_vk[s] < 1 || n_vk[s] >= n_k[s] {
                return Err(Error::Design(format!(
                    "stratum {}: need 1 <= n_Vk < n_k, got n_Vk = {}, n_k = {}",
                    s + 1,
                    n_vk[s],
                    n_k[s]
                )));
            }
        }
        Ok(Self { labels, n_k, n_vk })
    }

    /// Quadrant rule on the unit square: 1 = lower-left, 2 = lower-right,
    /// 3 = upper-left, 4 = upper-right.
    pub fn quadrant_labels<T: Scalar>(locations: &[Location<T>]) -> Vec<usize> {
        let half = T::of(0.5);
        locations
            .iter()
            .map(|loc| {
                let right = loc.x >= half;
                let upper = loc.y >= half;
                1 + usize::from(right) + 2 * usize::from(upper)
            })
            .collect()
    }

    pub fn n_strata(&self) -> usize {
        self.n_k.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn stratum_sizes(&self) -> &[usize] {
        &self.n_k
    }

    pub fn validation_sizes(&self) -> &[usize] {
        &self.n_vk
    }

    pub fn training_sizes(&self) -> Vec<usize> {
        self.n_k
            .iter()
            .zip(&self.n_vk)
            .map(|(&n, &v)| n - v)
            .collect()
    }

    pub fn n_validation(&self) -> usize {
        self.n_vk.iter().sum()
    }

    /// Stratum weight w_k = n_Vk / n_V.
    pub fn weight(&self, stratum: usize) -> f64 {
        self.n_vk[stratum] as f64 / self.n_validation() as f64
    }

    /// Validation sampling fraction f_Vk = n_Vk / n_k.
    pub fn validation_fraction(&self, stratum: usize) -> f64 {
        self.n_vk[stratum] as f64 / self.n_k[stratum] as f64
    }

    /// Site indices belonging to stratum `stratum` (0-based stratum index).
    pub fn sites_in(&self, stratum: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == stratum + 1)
            .collect()
    }

    /// Checks that a split respects the per-stratum validation counts.
    pub fn is_consistent(&self, split: &SplitVector) -> bool {
        if split.len() != self.n() {
            return false;
        }
        let mut counts = vec![0usize; self.n_strata()];
        for i in 0..split.len() {
            if split.is_validation(i) {
                counts[self.labels[i] - 1] += 1;
            }
        }
        counts == self.n_vk
    }
}

/// Within each stratum, validation sites are chosen uniformly without
/// replacement, independently across strata.
pub fn sample_stratified_split<R: Rng + ?Sized>(
    design: &StratifiedDesign,
    rng: &mut R,
) -> Result<SplitVector> {
    let mut validation = Vec::with_capacity(design.n_validation());
    for k in 0..design.n_strata() {
        let mut sites = design.sites_in(k);
        let n_vk = design.validation_sizes()[k];
        for pos in 0..n_vk {
            let j = pos + rng.random_range(0..sites.len() - pos);
            sites.swap(pos, j);
        }
        validation.extend_from_slice(&sites[..n_vk]);
    }
    SplitVector::from_validation_indices(design.n(), &validation)
}

/// Log prior mass of a split: `-log C(n, n_V)` under the uniform prior,
/// `-sum_k log C(n_k, n_Tk)` under the stratified prior. Splits violating the
/// per-stratum counts get `-inf` rather than an error.
pub fn split_log_prior(split: &SplitVector, design: Option<&StratifiedDesign>) -> f64 {
    match design {
        None => -ln_choose(split.len(), split.n_validation()),
        Some(d) => {
            if !d.is_consistent(split) {
                return f64::NEG_INFINITY;
            }
            let n_tk = d.training_sizes();
            -(0..d.n_strata())
                .map(|k| ln_choose(d.stratum_sizes()[k], n_tk[k]))
                .sum::<f64>()
        }
    }
}

/// A batch of splits produced by one generator run, shared across models so
/// MC and SIR runs consume identical splits.
#[derive(Debug, Clone)]
pub struct SplitBatch {
    pub splits: Vec<SplitVector>,
    pub seed: u64,
    pub descriptor: String,
}

impl SplitBatch {
    pub fn uniform(n: usize, n_v: usize, count: usize, seed: u64) -> Result<Self> {
        let splits = (0..count)
            .map(|i| sample_uniform_split(n, n_v, &mut derive_rng(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            splits,
            seed,
            descriptor: format!("uniform(n={n}, n_V={n_v})"),
        })
    }

    pub fn stratified(design: &StratifiedDesign, count: usize, seed: u64) -> Result<Self> {
        let splits = (0..count)
            .map(|i| sample_stratified_split(design, &mut derive_rng(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            splits,
            seed,
            descriptor: format!(
                "stratified(K={}, n_Vk={:?})",
                design.n_strata(),
                design.validation_sizes()
            ),
        })
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Common validation size, erroring if the batch is mixed.
    pub fn common_n_validation(&self) -> Result<usize> {
        let first = self
            .splits
            .first()
            .ok_or_else(|| Error::Design("empty split batch".into()))?
            .n_validation();
        if self.splits.iter().any(|s| s.n_validation() != first) {
            return Err(Error::Design(
                "split batch mixes different validation sizes".into(),
            ));
        }
        Ok(first)
    }

    /// One row per split, 0/1 columns `s1..sn`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.splits.first().map_or(0, |s| s.len());
        w.write_record((1..=n).map(|i| format!("s{i}")))?;
        for split in &self.splits {
            w.write_record(split.flags().iter().map(|&f| if f { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let n = r.headers()?.len();
        let mut splits = Vec::new();
        for (idx, record) in r.records().enumerate() {
            let record = record?;
            let row = idx + 2;
            if record.len() != n {
                return Err(Error::Parse {
                    row,
                    col: String::new(),
                    msg: format!("expected {} fields, found {}", n, record.len()),
                });
            }
            let mut flags = Vec::with_capacity(n);
            for (c, field) in record.iter().enumerate() {
                match field.trim() {
                    "0" => flags.push(false),
                    "1" => flags.push(true),
                    other => {
                        return Err(Error::Parse {
                            row,
                            col: format!("s{}", c + 1),
                            msg: format!("expected 0 or 1, got '{other}'"),
                        })
                    }
                }
            }
            splits.push(SplitVector::from_flags(&flags)?);
        }
        Ok(Self {
            splits,
            seed: 0,
            descriptor: format!("file:{}", path.display()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use std::collections::HashMap;

    #[test]
    fn uniform_split_n4_frequencies() {
        let mut rng = derive_rng(11, 0);
        let mut counts: HashMap<usize, usize> = HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            let s = sample_uniform_split(4, 1, &mut rng).unwrap();
            *counts.entry(s.validation_indices()[0]).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn uniform_split_fixed_size() {
        let mut rng = derive_rng(3, 0);
        for _ in 0..200 {
            let s = sample_uniform_split(82, 5, &mut rng).unwrap();
            assert_eq!(s.n_validation(), 5);
            assert_eq!(s.n_training(), 77);
        }
    }

    #[test]
    fn uniform_split_rejects_bad_sizes() {
        let mut rng = derive_rng(0, 0);
        assert!(sample_uniform_split(5, 0, &mut rng).is_err());
        assert!(sample_uniform_split(5, 5, &mut rng).is_err());
        assert!(sample_uniform_split(5, 6, &mut rng).is_err());
    }

    fn crs_design() -> StratifiedDesign {
        // stratum sizes 21, 17, 24, 20 with 2 validation sites each
        let mut labels = Vec::new();
        for (k, n_k) in [(1usize, 21usize), (2, 17), (3, 24), (4, 20)] {
            labels.extend(std::iter::repeat(k).take(n_k));
        }
        StratifiedDesign::from_labels(labels, vec![2, 2, 2, 2]).unwrap()
    }

    #[test]
    fn stratified_split_counts_match_design() {
        let design = crs_design();
        let mut rng = derive_rng(5, 0);
        for _ in 0..500 {
            let s = sample_stratified_split(&design, &mut rng).unwrap();
            assert!(design.is_consistent(&s));
            assert_eq!(s.n_validation(), 8);
        }
    }

    #[test]
    fn preferential_design_counts() {
        let mut labels = Vec::new();
        for (k, n_k) in [(1usize, 47usize), (2, 20), (3, 13), (4, 20)] {
            labels.extend(std::iter::repeat(k).take(n_k));
        }
        let design = StratifiedDesign::from_labels(labels, vec![5, 2, 1, 2]).unwrap();
        assert_eq!(design.n_validation(), 10);
        assert!((design.weight(0) - 0.5).abs() < 1e-12);
        assert!((design.weight(2) - 0.1).abs() < 1e-12);
        let mut rng = derive_rng(6, 0);
        for _ in 0..200 {
            let s = sample_stratified_split(&design, &mut rng).unwrap();
            assert!(design.is_consistent(&s));
        }
    }

    #[test]
    fn stratified_design_rejects_full_validation_stratum() {
        let labels = vec![1, 1, 2, 2];
        assert!(StratifiedDesign::from_labels(labels, vec![2, 1]).is_err());
    }

    #[test]
    fn split_log_prior_uniform_small() {
        let s = SplitVector::from_validation_indices(4, &[2]).unwrap();
        assert!((split_log_prior(&s, None) - 0.25_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn split_log_prior_crs_stratified() {
        let design = crs_design();
        let mut rng = derive_rng(9, 0);
        let s = sample_stratified_split(&design, &mut rng).unwrap();
        let expected = -(210.0_f64 * 136.0 * 276.0 * 190.0).ln();
        assert!((split_log_prior(&s, Some(&design)) - expected).abs() < 1e-9);
    }

    #[test]
    fn split_log_prior_violation_is_neg_inf() {
        let design = crs_design();
        // three validation sites in stratum 1
        let s = SplitVector::from_validation_indices(82, &[0, 1, 2, 21, 22, 38, 39, 62]).unwrap();
        assert!(split_log_prior(&s, Some(&design)).is_infinite());
    }

    #[test]
    fn inclusion_probabilities() {
        // uniform: each site included with probability n_V / n
        let (n, n_v, draws) = (10usize, 3usize, 10_000usize);
        let mut rng = derive_rng(21, 0);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            let s = sample_uniform_split(n, n_v, &mut rng).unwrap();
            for i in s.validation_indices() {
                counts[i] += 1;
            }
        }
        let p = n_v as f64 / n as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() < 3.0 * se + 1e-9, "freq {freq} vs {p}");
        }
    }

    #[test]
    fn exhaustive_prior_normalization_small_n() {
        // uniform prior, n = 6, n_V = 2
        let n = 6;
        let mut total = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let s = SplitVector::from_validation_indices(n, &[a, b]).unwrap();
                total += split_log_prior(&s, None).exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "total {total}");

        // stratified prior, two strata of 4 with one validation site each
        let labels = vec![1, 1, 1, 1, 2, 2, 2, 2];
        let design = StratifiedDesign::from_labels(labels, vec![1, 1]).unwrap();
        let mut total = 0.0;
        for a in 0..4 {
            for b in 4..8 {
                let s = SplitVector::from_validation_indices(8, &[a, b]).unwrap();
                total += split_log_prior(&s, Some(&design)).exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
    }

    #[test]
    fn batch_csv_roundtrip() {
        let batch = SplitBatch::uniform(12, 3, 20, 99).unwrap();
        let dir = std::env::temp_dir().join("geocv_split_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("splits.csv");
        batch.write_csv(&path).unwrap();
        let back = SplitBatch::read_csv(&path).unwrap();
        assert_eq!(batch.splits, back.splits);
    }
}
