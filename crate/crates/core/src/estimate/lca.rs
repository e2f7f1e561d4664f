//! Two-class latent class model for K binary tests under conditional
//! independence, fitted by EM.
//!
//! Only the conditional-independence model is fitted. Dependence between
//! tests within a class is not estimated; its effect on accuracy is
//! quantified through the generative engine instead
//! ([`conditional_covariance`](super::conditional_covariance)).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use super::{AccuracyEstimate, Correction, EstimateError, Provenance};
use crate::rng::Stream;

/// Lower and upper clamp for every probability inside EM.
pub const LCA_CLAMP: f64 = 1e-6;

/// Counts for each of the `2^k` response patterns. Pattern index `i` has
/// test `t1` as its most significant bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCounts {
    k: usize,
    counts: Vec<f64>,
}

impl PatternCounts {
    pub fn new(k: usize, counts: Vec<f64>) -> Result<Self, EstimateError> {
        if k < 3 {
            return Err(EstimateError::Underidentified { tests: k });
        }
        if k >= usize::BITS as usize || counts.len() != 1 << k {
            return Err(EstimateError::PatternTable {
                expected: 1usize.checked_shl(k as u32).unwrap_or(0),
                found: counts.len(),
            });
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(EstimateError::InvalidCount);
        }
        if counts.iter().sum::<f64>() <= 0.0 {
            return Err(EstimateError::EmptyCohort);
        }
        Ok(PatternCounts { k, counts })
    }

    /// Builds the table from `pattern -> count` entries; absent patterns
    /// count zero and repeated patterns accumulate.
    pub fn from_map(k: usize, map: &BTreeMap<Vec<u8>, f64>) -> Result<Self, EstimateError> {
        let mut counts = vec![0.0; 1usize.checked_shl(k as u32).unwrap_or(0)];
        for (pattern, &n) in map {
            if pattern.len() != k || pattern.iter().any(|&b| b > 1) {
                return Err(EstimateError::PatternTable {
                    expected: k,
                    found: pattern.len(),
                });
            }
            counts[pattern_index(pattern)] += n;
        }
        Self::new(k, counts)
    }

    /// Tallies complete rows of `k` test results.
    pub fn from_rows<'a, I>(k: usize, rows: I) -> Result<Self, EstimateError>
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let mut counts = vec![0.0; 1usize.checked_shl(k as u32).unwrap_or(0)];
        for row in rows {
            if row.len() != k || row.iter().any(|&b| b > 1) {
                return Err(EstimateError::PatternTable {
                    expected: k,
                    found: row.len(),
                });
            }
            counts[pattern_index(row)] += 1.0;
        }
        Self::new(k, counts)
    }

    pub fn tests(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn bit(&self, pattern: usize, test: usize) -> bool {
        (pattern >> (self.k - 1 - test)) & 1 == 1
    }
}

fn pattern_index(pattern: &[u8]) -> usize {
    pattern.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for LcaOptions {
    fn default() -> Self {
        LcaOptions {
            max_iter: 500,
            tol: 1e-8,
            restarts: 20,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestAccuracy {
    pub se: f64,
    pub sp: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Params {
    prevalence: f64,
    tests: Vec<TestAccuracy>,
}

impl Params {
    fn clamped(mut self) -> Self {
        let c = |v: f64| v.clamp(LCA_CLAMP, 1.0 - LCA_CLAMP);
        self.prevalence = c(self.prevalence);
        for t in &mut self.tests {
            t.se = c(t.se);
            t.sp = c(t.sp);
        }
        self
    }

    fn mean_youden(&self) -> f64 {
        self.tests.iter().map(|t| t.se + t.sp - 1.0).sum::<f64>() / self.tests.len() as f64
    }

    /// Swaps which latent class is called "present".
    fn flipped(&self) -> Self {
        Params {
            prevalence: 1.0 - self.prevalence,
            tests: self
                .tests
                .iter()
                .map(|t| TestAccuracy {
                    se: 1.0 - t.sp,
                    sp: 1.0 - t.se,
                })
                .collect(),
        }
    }
}

/// One EM run from one random start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcaRestart {
    pub index: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood at the start and after every iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcaResult {
    pub prevalence: f64,
    pub tests: Vec<TestAccuracy>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Restarts whose final log-likelihood is within `1e-6 * max(1, |ll|)`
    /// of the best.
    pub n_restarts_agreeing: usize,
    pub best_restart: usize,
    #[serde(skip)]
    pub restarts: Vec<LcaRestart>,
}

impl LcaResult {
    /// One corrected estimate per test, in input order.
    pub fn estimates(&self) -> Vec<AccuracyEstimate> {
        self.tests
            .iter()
            .map(|t| {
                AccuracyEstimate::from_operating_point(
                    t.se,
                    t.sp,
                    self.prevalence,
                    Provenance::Corrected(Correction::LatentClass),
                )
            })
            .collect()
    }
}

/// Log-likelihood at `params` and, when `next` is given, the EM update.
fn e_step(data: &PatternCounts, params: &Params, next: Option<&mut Params>) -> f64 {
    let k = data.k;
    let mut ll = 0.0;
    let mut post_total = 0.0;
    let mut se_num = vec![0.0; k];
    let mut sp_num = vec![0.0; k];
    for (pattern, &n) in data.counts.iter().enumerate() {
        if n == 0.0 {
            continue;
        }
        let mut l1 = params.prevalence;
        let mut l0 = 1.0 - params.prevalence;
        for (j, t) in params.tests.iter().enumerate() {
            if data.bit(pattern, j) {
                l1 *= t.se;
                l0 *= 1.0 - t.sp;
            } else {
                l1 *= 1.0 - t.se;
                l0 *= t.sp;
            }
        }
        let lik = l1 + l0;
        ll += n * libm::log(lik);
        let post = l1 / lik;
        post_total += n * post;
        for j in 0..k {
            if data.bit(pattern, j) {
                se_num[j] += n * post;
            } else {
                sp_num[j] += n * (1.0 - post);
            }
        }
    }
    if let Some(next) = next {
        let total = data.total();
        let neg_total = total - post_total;
        next.prevalence = post_total / total;
        for j in 0..k {
            next.tests[j] = TestAccuracy {
                se: if post_total > 0.0 { se_num[j] / post_total } else { 0.5 },
                sp: if neg_total > 0.0 { sp_num[j] / neg_total } else { 0.5 },
            };
        }
        *next = core::mem::replace(
            next,
            Params {
                prevalence: 0.0,
                tests: Vec::new(),
            },
        )
        .clamped();
    }
    ll
}

fn initial(k: usize, seed: u64, restart: usize) -> Params {
    let mut rng = Stream::new(seed, restart as u64);
    let prevalence = rng.uniform_in(0.1, 0.9);
    let tests = (0..k)
        .map(|_| {
            let se = rng.uniform_in(0.55, 0.95);
            let sp = rng.uniform_in(0.55, 0.95);
            TestAccuracy { se, sp }
        })
        .collect();
    Params { prevalence, tests }
}

fn run(data: &PatternCounts, options: &LcaOptions, restart: usize) -> (Params, LcaRestart) {
    let mut params = initial(data.k, options.seed, restart);
    let mut next = params.clone();
    let mut ll = e_step(data, &params, Some(&mut next));
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        core::mem::swap(&mut params, &mut next);
        let new_ll = e_step(data, &params, Some(&mut next));
        trace.push(new_ll);
        let delta = (new_ll - ll).abs();
        ll = new_ll;
        if delta < options.tol {
            converged = true;
            break;
        }
    }
    if params.mean_youden() < 0.0 {
        params = params.flipped();
    }
    let summary = LcaRestart {
        index: restart,
        log_likelihood: ll,
        iterations,
        converged,
        trace,
    };
    (params, summary)
}

/// Maximum-likelihood fit of prevalence and per-test Se/Sp, keeping the
/// best of `options.restarts` seeded random starts. Restart `r` draws its
/// start from substream `r` of `options.seed`.
///
/// Needs at least three tests: with two, the model has five parameters but
/// the pattern table only three degrees of freedom. For two tests with a
/// reference of known accuracy use
/// [`correct_for_known_reference`](super::correct_for_known_reference).
pub fn lca_em(data: &PatternCounts, options: &LcaOptions) -> Result<LcaResult, EstimateError> {
    if data.k < 3 {
        return Err(EstimateError::Underidentified { tests: data.k });
    }
    if options.restarts == 0 {
        return Err(EstimateError::EmptyCohort);
    }
    let mut best: Option<(Params, usize)> = None;
    let mut restarts = Vec::with_capacity(options.restarts);
    for r in 0..options.restarts {
        let (params, summary) = run(data, options, r);
        let better = match &best {
            None => true,
            Some((_, b)) => summary.log_likelihood > restarts_ll(&restarts, *b) + 1e-9,
        };
        if better {
            best = Some((params, r));
        }
        restarts.push(summary);
    }
    let (params, b) = best.expect("at least one restart");
    let best_ll = restarts[b].log_likelihood;
    let agree_tol = 1e-6 * best_ll.abs().max(1.0);
    Ok(LcaResult {
        prevalence: params.prevalence,
        tests: params.tests,
        log_likelihood: best_ll,
        iterations: restarts[b].iterations,
        converged: restarts[b].converged,
        n_restarts_agreeing: restarts
            .iter()
            .filter(|r| (r.log_likelihood - best_ll).abs() <= agree_tol)
            .count(),
        best_restart: b,
        restarts,
    })
}

fn restarts_ll(restarts: &[LcaRestart], index: usize) -> f64 {
    restarts[index].log_likelihood
}
