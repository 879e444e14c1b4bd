use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CounterRng, Density, DensitySpec, SamplingError};

/// Redraws allowed for exact duplicate samples before giving up.
const DUPLICATE_RETRIES: u32 = 3;

/// `n` parameters on `R/LZ`, i.e. the empirical measure `(1/n) sum delta_{X_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<f64>,
    seed: u64,
    density: Density,
    sorted_index: Vec<usize>,
}

/// JSON sidecar written next to a sample CSV dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub seed: u64,
    pub n: usize,
    pub length: f64,
    pub density: DensitySpec,
}

fn sort_index(samples: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]).then(a.cmp(&b)));
    idx
}

/// Indices (in draw order) of samples equal to an earlier-sorted neighbour.
fn duplicates(samples: &[f64], sorted: &[usize]) -> Vec<usize> {
    let mut dup: Vec<usize> = sorted
        .windows(2)
        .filter(|w| samples[w[0]] == samples[w[1]])
        .map(|w| w[0].max(w[1]))
        .collect();
    dup.sort_unstable();
    dup.dedup();
    dup
}

/// Draws `n` i.i.d. samples from `density` by inverse-CDF transform of the
/// counter-based uniform stream `(seed, retry, index)`.
pub fn sample_iid(density: &Density, n: usize, seed: u64) -> Result<SampleSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySample);
    }
    let l = density.length();
    let draw = |retry: u32, index: usize| {
        let u = CounterRng::new(seed, retry as u64).uniform(index as u64);
        crate::curve::wrap(density.inverse_cdf(u), l)
    };
    let mut base = CounterRng::new(seed, 0);
    let mut samples: Vec<f64> = (0..n)
        .map(|i| crate::curve::wrap(density.inverse_cdf(base.uniform(i as u64)), l))
        .collect();
    let mut sorted = sort_index(&samples);
    let mut retry = 0;
    loop {
        let dup = duplicates(&samples, &sorted);
        if dup.is_empty() {
            break;
        }
        if retry == DUPLICATE_RETRIES {
            return Err(SamplingError::DuplicateSamples { retries: retry });
        }
        retry += 1;
        for i in dup {
            samples[i] = draw(retry, i);
        }
        sorted = sort_index(&samples);
    }
    Ok(SampleSet {
        samples,
        seed,
        density: density.clone(),
        sorted_index: sorted,
    })
}

impl SampleSet {
    /// Wraps explicit sample positions (deterministic designs, tests).
    pub fn from_values(density: &Density, values: Vec<f64>, seed: u64) -> Result<Self, SamplingError> {
        if values.is_empty() {
            return Err(SamplingError::EmptySample);
        }
        let l = density.length();
        if let Some(&value) = values.iter().find(|v| !(**v >= 0.0 && **v < l)) {
            return Err(SamplingError::OutOfRange { value, length: l });
        }
        let sorted_index = sort_index(&values);
        if !duplicates(&values, &sorted_index).is_empty() {
            return Err(SamplingError::DuplicateSamples { retries: 0 });
        }
        Ok(Self {
            samples: values,
            seed,
            density: density.clone(),
            sorted_index,
        })
    }

    /// Samples at the quantile midpoints `F^{-1}((i - 1/2)/n)`.
    pub fn quantile_midpoints(density: &Density, n: usize) -> Result<Self, SamplingError> {
        let values = (0..n)
            .map(|i| density.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        Self::from_values(density, values, 0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn length(&self) -> f64 {
        self.density.length()
    }

    pub fn sorted_index(&self) -> &[usize] {
        &self.sorted_index
    }

    pub fn sorted(&self) -> Vec<f64> {
        self.sorted_index.iter().map(|&i| self.samples[i]).collect()
    }

    /// Same samples listed in a different order.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let samples: Vec<f64> = perm.iter().map(|&i| self.samples[i]).collect();
        let sorted_index = sort_index(&samples);
        Self {
            samples,
            seed: self.seed,
            density: self.density.clone(),
            sorted_index,
        }
    }

    pub fn sidecar(&self) -> SampleSidecar {
        SampleSidecar {
            seed: self.seed,
            n: self.len(),
            length: self.length(),
            density: self.density.spec().clone(),
        }
    }

    /// Writes `index,x` rows to `csv_path` and the sidecar JSON to `sidecar_path`.
    pub fn dump(&self, csv_path: impl AsRef<Path>, sidecar_path: impl AsRef<Path>) -> Result<(), SamplingError> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["index", "x"])?;
        for (i, x) in self.samples.iter().enumerate() {
            w.write_record([i.to_string(), format!("{x:?}")])?;
        }
        w.flush()?;
        std::fs::write(sidecar_path, serde_json::to_string_pretty(&self.sidecar())?)?;
        Ok(())
    }

    /// Reads a dump written by [`SampleSet::dump`].
    pub fn load(csv_path: impl AsRef<Path>, sidecar_path: impl AsRef<Path>) -> Result<Self, SamplingError> {
        let side: SampleSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
        let density = side.density.build(side.length)?;
        let mut r = csv::Reader::from_path(csv_path)?;
        let mut values = Vec::with_capacity(side.n);
        for rec in r.records() {
            let rec = rec?;
            let x: f64 = rec
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|e| SamplingError::InvalidDensity(format!("bad sample value: {e}")))?;
            values.push(x);
        }
        Self::from_values(&density, values, side.seed)
    }
}

/// Kolmogorov–Smirnov / Glivenko–Cantelli statistic `sup_x |F_n(x) - F(x)|`
/// for the interval CDF on `[0, L)`, evaluated at the jump points.
pub fn gc_statistic(set: &SampleSet) -> f64 {
    let n = set.len() as f64;
    set.sorted()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = set.density().cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_sample_mean_within_clt_bound() {
        let d = Density::uniform(1.0).unwrap();
        let n = 4096;
        let s = sample_iid(&d, n, 7).unwrap();
        let mean = crate::numeric::mean(s.samples());
        assert!((mean - 0.5).abs() < 3.0 / (12.0 * n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Density::cosine(2.0, 0.3).unwrap();
        assert_eq!(sample_iid(&d, 500, 11).unwrap(), sample_iid(&d, 500, 11).unwrap());
        assert_ne!(sample_iid(&d, 500, 11).unwrap(), sample_iid(&d, 500, 12).unwrap());
        // prefix property of the counter stream
        let a = sample_iid(&d, 100, 3).unwrap();
        let b = sample_iid(&d, 50, 3).unwrap();
        assert_eq!(&a.samples()[..50], b.samples());
    }

    #[test]
    fn cosine_samples_pass_ks_test() {
        let d = Density::cosine(1.0, 0.5).unwrap();
        let n = 8192;
        let s = sample_iid(&d, n, 1).unwrap();
        // asymptotic two-sided KS critical value at alpha = 0.01
        let critical = 1.628 / (n as f64).sqrt();
        assert!(gc_statistic(&s) < critical);
        // histogram correlates positively with the pdf
        let bins = 16;
        let mut counts = vec![0.0; bins];
        for &x in s.samples() {
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1.0;
        }
        let pdf: Vec<f64> = (0..bins).map(|b| d.pdf((b as f64 + 0.5) / bins as f64)).collect();
        let (mc, mp) = (crate::numeric::mean(&counts), crate::numeric::mean(&pdf));
        let cov: f64 = counts.iter().zip(&pdf).map(|(c, p)| (c - mc) * (p - mp)).sum();
        assert!(cov > 0.0);
    }

    #[test]
    fn gc_statistic_hand_values() {
        let d = Density::uniform(1.0).unwrap();
        let s = SampleSet::from_values(&d, vec![0.75, 0.25], 0).unwrap();
        assert!((gc_statistic(&s) - 0.25).abs() < 1e-15);
        for x in [0.1, 0.5, 0.93] {
            let s = SampleSet::from_values(&d, vec![x], 0).unwrap();
            assert!((gc_statistic(&s) - f64::max(x, 1.0 - x)).abs() < 1e-15);
        }
        let n = 10;
        let s = SampleSet::from_values(&d, (1..n).map(|i| i as f64 / n as f64).chain([0.0]).collect(), 0).unwrap();
        assert!((gc_statistic(&s) - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_sets() {
        let d = Density::uniform(1.0).unwrap();
        assert!(matches!(sample_iid(&d, 0, 1), Err(SamplingError::EmptySample)));
        assert!(matches!(
            SampleSet::from_values(&d, vec![0.2, 0.2], 0),
            Err(SamplingError::DuplicateSamples { .. })
        ));
        assert!(matches!(
            SampleSet::from_values(&d, vec![1.0], 0),
            Err(SamplingError::OutOfRange { .. })
        ));
    }

    #[test]
    fn sorted_index_sorts() {
        let d = Density::uniform(3.0).unwrap();
        let s = sample_iid(&d, 1000, 5).unwrap();
        assert!(s.sorted().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn dump_and_load_round_trip() {
        let d = Density::cosine(2.0, 0.25).unwrap();
        let s = sample_iid(&d, 64, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = (dir.path().join("s.csv"), dir.path().join("s.json"));
        s.dump(&c, &j).unwrap();
        let text = std::fs::read_to_string(&c).unwrap();
        assert!(text.starts_with("index,x\n0,"));
        assert_eq!(SampleSet::load(&c, &j).unwrap(), s);
    }
}
