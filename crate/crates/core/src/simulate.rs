//! Monte Carlo study of the complexity number under a location-scale model.
//!
//! Responses are `y = mu + sigma * eps` with `mu` nondecreasing. Each
//! replicate draws one noise vector and reuses it for every `sigma` in the
//! grid, so the complexity numbers of one replicate can be compared
//! pointwise: pooling at `sigma` implies pooling at every larger `sigma`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pav::pav_fit_ranked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    StandardGaussian,
    StudentT { df: f64 },
    /// Uniform on `(-1, 1)`.
    Uniform,
}

impl NoiseFamily {
    /// Whether the noise vector has full support on `R^n`.
    pub fn full_support(&self) -> bool {
        !matches!(self, NoiseFamily::Uniform)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub mu: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub noise: NoiseFamily,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn invalid(field: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        message: message.into(),
    }
}

impl SimulationConfig {
    /// `mu_i = i` for `i = 1..=n`, unit weights.
    pub fn linear(n: usize, sigmas: Vec<f64>, noise: NoiseFamily, replicates: usize, seed: u64) -> Self {
        Self {
            n,
            mu: (1..=n).map(|i| i as f64).collect(),
            sigmas,
            noise,
            replicates,
            seed,
            weights: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.mu.len() != self.n {
            return Err(invalid("mu", format!("has {} entries, expected n = {}", self.mu.len(), self.n)));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(invalid("mu", "entries must be finite"));
        }
        if self.mu.windows(2).any(|p| p[0] > p[1]) {
            return Err(invalid("mu", "must be nondecreasing"));
        }
        if self.sigmas.is_empty() {
            return Err(invalid("sigmas", "must not be empty"));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(invalid("sigmas", "entries must be positive and finite"));
        }
        // Repeated values are allowed; they must produce identical fits.
        if self.sigmas.windows(2).any(|p| p[0] > p[1]) {
            return Err(invalid("sigmas", "must be sorted in increasing order"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if let NoiseFamily::StudentT { df } = self.noise {
            if !(df.is_finite() && df > 0.0) {
                return Err(invalid("noise", "student-t degrees of freedom must be positive"));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.n {
                return Err(invalid("weights", format!("has {} entries, expected n = {}", w.len(), self.n)));
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invalid("weights", "entries must be positive and finite"));
            }
        }
        Ok(())
    }

    /// Noise vector of replicate `r`, drawn from its own ChaCha stream so the
    /// result does not depend on which thread or in what order it is drawn.
    pub fn noise_vector(&self, replicate: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate as u64);
        draw(&mut rng, self.noise, self.n)
    }

    pub fn responses(&self, noise: &[f64], sigma: f64) -> Vec<f64> {
        self.mu.iter().zip(noise).map(|(m, e)| m + sigma * e).collect()
    }
}

fn draw<R: Rng>(rng: &mut R, noise: NoiseFamily, n: usize) -> Vec<f64> {
    match noise {
        NoiseFamily::StandardGaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        NoiseFamily::StudentT { df } => {
            let dist = StudentT::new(df).expect("df validated");
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        NoiseFamily::Uniform => {
            let dist = Uniform::new(-1.0, 1.0).expect("nonempty range");
            (0..n).map(|_| dist.sample(rng)).collect()
        }
    }
}

/// One replicate: a single noise draw and the responses it induces per sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledDraw {
    pub noise: Vec<f64>,
    /// `responses[s]` corresponds to `sigmas[s]`.
    pub responses: Vec<Vec<f64>>,
}

pub fn sample_coupled(config: &SimulationConfig) -> Result<Vec<CoupledDraw>> {
    config.validate()?;
    Ok((0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let noise = config.noise_vector(r);
            let responses = config.sigmas.iter().map(|&s| config.responses(&noise, s)).collect();
            CoupledDraw { noise, responses }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCurve {
    pub sigmas: Vec<f64>,
    pub mean_k: Vec<f64>,
    /// Standard error of the mean (sample standard deviation over `sqrt(R)`;
    /// zero for a single replicate).
    pub se_k: Vec<f64>,
    /// `k[r][s]`: complexity of replicate `r` at `sigmas[s]`.
    pub k: Vec<Vec<usize>>,
}

impl ComplexityCurve {
    /// Replicate/sigma-pair instances where the larger sigma has the larger K.
    pub fn pointwise_violations(&self) -> usize {
        self.k
            .iter()
            .map(|row| {
                (0..row.len())
                    .flat_map(|a| (a + 1..row.len()).map(move |b| (a, b)))
                    .filter(|&(a, b)| row[b] > row[a])
                    .count()
            })
            .sum()
    }
}

pub fn complexity_curve(config: &SimulationConfig) -> Result<ComplexityCurve> {
    config.validate()?;
    let weights = config.weights.as_deref();
    let k: Vec<Vec<usize>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let noise = config.noise_vector(r);
            config
                .sigmas
                .iter()
                .map(|&s| {
                    let y = config.responses(&noise, s);
                    pav_fit_ranked(&y, weights).map(|fit| fit.complexity())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let reps = k.len() as f64;
    let mut mean_k = Vec::with_capacity(config.sigmas.len());
    let mut se_k = Vec::with_capacity(config.sigmas.len());
    for s in 0..config.sigmas.len() {
        let mean = k.iter().map(|row| row[s] as f64).sum::<f64>() / reps;
        let se = if k.len() > 1 {
            let var = k.iter().map(|row| (row[s] as f64 - mean).powi(2)).sum::<f64>() / (reps - 1.0);
            (var / reps).sqrt()
        } else {
            0.0
        };
        mean_k.push(mean);
        se_k.push(se);
    }
    Ok(ComplexityCurve {
        sigmas: config.sigmas.clone(),
        mean_k,
        se_k,
        k,
    })
}

/// Count of coupled instances where K increases with sigma; zero is expected.
pub fn check_pointwise_monotone(config: &SimulationConfig) -> Result<usize> {
    if config.sigmas.len() < 2 {
        return Err(invalid("sigmas", "need at least two values to compare"));
    }
    Ok(complexity_curve(config)?.pointwise_violations())
}
