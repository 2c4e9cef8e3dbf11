//! Probability estimates with provenance, and the deterministic parallel
//! accumulation shared by every Monte-Carlo routine.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    #[serde(alias = "nested-quadrature")]
    Quadrature,
    ConditionalMc,
    #[serde(alias = "mc")]
    Simulate,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
            Method::ConditionalMc => "conditional-mc",
            Method::Simulate => "simulate",
        }
    }

    /// Whether estimates from this method carry a standard error.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Method::ClosedForm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed-form" | "closed" | "analytic" => Ok(Method::ClosedForm),
            "quadrature" | "nested-quadrature" => Ok(Method::Quadrature),
            "conditional-mc" | "cmc" => Ok(Method::ConditionalMc),
            "simulate" | "mc" | "simulation" => Ok(Method::Simulate),
            other => Err(Error::Usage(format!("unknown method `{other}`"))),
        }
    }
}

/// Poisson-series truncation used by a deterministic estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    /// `P(N > n_max)`, an upper bound on the omitted mass.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub value: f64,
    pub method: Method,
    pub stderr: Option<f64>,
    pub n_samples: Option<u64>,
    pub truncation: Option<Truncation>,
}

impl ProbEstimate {
    pub fn closed_form(value: f64) -> Self {
        ProbEstimate {
            value: clamp_prob(value),
            method: Method::ClosedForm,
            stderr: None,
            n_samples: None,
            truncation: None,
        }
    }

    pub fn sampled(method: Method, value: f64, stderr: f64, n_samples: u64) -> Self {
        ProbEstimate {
            value: clamp_prob(value),
            method,
            stderr: Some(stderr.max(0.0)),
            n_samples: Some(n_samples),
            truncation: None,
        }
    }

    pub fn stderr_or_zero(&self) -> f64 {
        self.stderr.unwrap_or(0.0)
    }

    /// `|a - b| <= z * sqrt(se_a^2 + se_b^2)`.
    pub fn agrees_with(&self, other: &ProbEstimate, z: f64) -> bool {
        let se = self.stderr_or_zero().hypot(other.stderr_or_zero());
        (self.value - other.value).abs() <= z * se
    }
}

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Running first and second moments plus a per-bucket breakdown of the sum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub buckets: Vec<f64>,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn push_bucketed(&mut self, bucket: usize, x: f64) {
        self.push(x);
        if self.buckets.len() <= bucket {
            self.buckets.resize(bucket + 1, 0.0);
        }
        self.buckets[bucket] += x;
    }

    pub fn merge(mut self, other: &Moments) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        if self.buckets.len() < other.buckets.len() {
            self.buckets.resize(other.buckets.len(), 0.0);
        }
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            *a += b;
        }
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

const CHUNK: u64 = 2048;

/// Runs `f(i, &mut moments)` for `i in 0..n` in fixed-size chunks on the
/// rayon pool, merging chunk results in index order. The floating-point
/// result is identical for any number of worker threads.
pub fn par_accumulate<F>(n: u64, f: F) -> Moments
where
    F: Fn(u64, &mut Moments) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(i, &mut m);
            }
            m
        })
        .collect();
    partials
        .iter()
        .fold(Moments::default(), |acc, m| acc.merge(m))
}
