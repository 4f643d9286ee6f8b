//! Monte Carlo estimates of connection probabilities and bunkbed gaps.
//!
//! Sample `i` is drawn from random stream `i` of the seed, so every sample can
//! be regenerated on its own. Samples are processed in fixed-size chunks and
//! the per-chunk counts are summed, which makes the result independent of the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bunkbed::NodeRef;
use crate::connectivity::{ReachabilityQuery, Reacher};
use crate::error::{Error, Result};
use crate::exact::in_pool;
use crate::models::Family;
use crate::rng::StreamSource;

/// Samples per work unit.
pub const CHUNK: u64 = 1 << 16;

/// Default confidence level.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        McOptions {
            samples,
            seed,
            confidence: DEFAULT_CONFIDENCE,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Parameter("at least one sample is required".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Parameter(format!(
                "confidence {} is not in (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// A two-sided interval together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub method: &'static str,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.low > 0.0 || self.high < 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// How samples map to random streams, echoed so a run can be reproduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamLayout {
    pub seed: u64,
    pub generator: &'static str,
    pub stream_of_sample: &'static str,
    pub chunk: u64,
}

impl StreamLayout {
    fn new(seed: u64) -> Self {
        StreamLayout {
            seed,
            generator: "ChaCha8, key from seed",
            stream_of_sample: "sample i uses stream i",
            chunk: CHUNK,
        }
    }
}

/// Paired estimate of `P(u^(0) -> v^(1)) - P(u^(0) -> v^(0))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub n: u64,
    pub n_same: u64,
    pub n_cross: u64,
    /// Samples in which exactly one of the two events holds.
    pub n_disagree: u64,
    pub p_same: f64,
    pub p_cross: f64,
    pub mean_gap: f64,
    pub confidence: f64,
    /// Guaranteed interval (empirical Bernstein).
    pub ci: Interval,
    /// Guaranteed but wider (Hoeffding on a variable in [-1, 1]).
    pub hoeffding: Interval,
    /// Approximate paired-difference interval (Newcombe, Wilson-based).
    pub newcombe: Interval,
    pub p_same_wilson: Interval,
    pub p_cross_wilson: Interval,
    pub layout: StreamLayout,
}

/// Estimate of a single connection probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub n: u64,
    pub hits: u64,
    pub estimate: f64,
    pub confidence: f64,
    /// Guaranteed interval (Hoeffding).
    pub ci: Interval,
    pub wilson: Interval,
    pub layout: StreamLayout,
}

fn z_score(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `hits / n`.
pub fn wilson(hits: u64, n: u64, confidence: f64) -> Interval {
    let (n, p) = (n as f64, hits as f64 / n as f64);
    let z = z_score(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        method: "wilson",
        low: (centre - half).max(0.0),
        high: (centre + half).min(1.0),
    }
}

/// Hoeffding interval for the mean of `n` samples in an interval of length `range`.
pub fn hoeffding(mean: f64, n: u64, range: f64, confidence: f64) -> Interval {
    let alpha = 1.0 - confidence;
    let half = range * ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt();
    Interval {
        method: "hoeffding",
        low: mean - half,
        high: mean + half,
    }
}

/// Empirical Bernstein interval (Maurer and Pontil) for the mean of `n`
/// samples in an interval of length `range`, given the unbiased sample
/// variance. Each side holds with probability `1 - alpha/2`.
pub fn empirical_bernstein(
    mean: f64,
    variance: f64,
    n: u64,
    range: f64,
    confidence: f64,
) -> Interval {
    let alpha = 1.0 - confidence;
    let l = (4.0 / alpha).ln();
    let nf = n as f64;
    let half = if n < 2 {
        range
    } else {
        (2.0 * variance * l / nf).sqrt() + 7.0 * range * l / (3.0 * (nf - 1.0))
    };
    Interval {
        method: "empirical-bernstein",
        low: mean - half,
        high: mean + half,
    }
}

/// Newcombe's interval for a difference of paired proportions `p1 - p2`,
/// from the 2x2 table `both`, `only1`, `only2`, `neither`.
pub fn newcombe_paired(
    both: u64,
    only1: u64,
    only2: u64,
    neither: u64,
    confidence: f64,
) -> Interval {
    let n = both + only1 + only2 + neither;
    let (a, b, c, d) = (both as f64, only1 as f64, only2 as f64, neither as f64);
    let p1 = (a + b) / n as f64;
    let p2 = (a + c) / n as f64;
    let w1 = wilson(both + only1, n, confidence);
    let w2 = wilson(both + only2, n, confidence);
    let denom = ((a + b) * (c + d) * (a + c) * (b + d)).sqrt();
    let phi = if denom > 0.0 {
        (a * d - b * c) / denom
    } else {
        0.0
    };
    let theta = p1 - p2;
    let (d1l, d1u) = (p1 - w1.low, w1.high - p1);
    let (d2l, d2u) = (p2 - w2.low, w2.high - p2);
    let low = theta
        - (d1l * d1l - 2.0 * phi * d1l * d2u + d2u * d2u)
            .max(0.0)
            .sqrt();
    let high = theta
        + (d1u * d1u - 2.0 * phi * d1u * d2l + d2l * d2l)
            .max(0.0)
            .sqrt();
    Interval {
        method: "newcombe-paired",
        low,
        high,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct PairCounts {
    both: u64,
    same_only: u64,
    cross_only: u64,
}

impl std::ops::Add for PairCounts {
    type Output = PairCounts;
    fn add(self, o: PairCounts) -> PairCounts {
        PairCounts {
            both: self.both + o.both,
            same_only: self.same_only + o.same_only,
            cross_only: self.cross_only + o.cross_only,
        }
    }
}

fn chunk_ranges(samples: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(move |i| (i * CHUNK, ((i + 1) * CHUNK).min(samples)))
}

/// Paired estimate of the bunkbed gap at `(u, v)`: each sample draws one
/// configuration and tests both targets on it.
pub fn estimate_gap(fam: &Family<'_>, u: usize, v: usize, opts: McOptions) -> Result<GapEstimate> {
    opts.validate()?;
    let b = fam.instance();
    let n = b.vertex_count();
    if u >= n || v >= n {
        return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
    }
    let source = StreamSource::new(opts.seed);
    let counts = in_pool(opts.threads, || {
        chunk_ranges(opts.samples)
            .map(|(lo, hi)| {
                let mut reacher = Reacher::new(b);
                let mut config = fam.blank();
                let mut acc = PairCounts::default();
                for i in lo..hi {
                    fam.sample_into(&mut config, &source, i);
                    let reach = reacher.reach_from(b, &config, u);
                    match (reach.contains(v), reach.contains(n + v)) {
                        (true, true) => acc.both += 1,
                        (true, false) => acc.same_only += 1,
                        (false, true) => acc.cross_only += 1,
                        (false, false) => {}
                    }
                }
                acc
            })
            .reduce(PairCounts::default, |a, b| a + b)
    });
    Ok(gap_from_counts(counts, opts))
}

fn gap_from_counts(c: PairCounts, opts: McOptions) -> GapEstimate {
    let total = opts.samples;
    let nf = total as f64;
    let n_same = c.both + c.same_only;
    let n_cross = c.both + c.cross_only;
    let n_disagree = c.same_only + c.cross_only;
    let mean = (c.cross_only as f64 - c.same_only as f64) / nf;
    // differences are +1, -1 or 0; unbiased sample variance
    let variance = if total > 1 {
        (n_disagree as f64 - nf * mean * mean) / (nf - 1.0)
    } else {
        0.0
    };
    let neither = total - c.both - n_disagree;
    GapEstimate {
        n: total,
        n_same,
        n_cross,
        n_disagree,
        p_same: n_same as f64 / nf,
        p_cross: n_cross as f64 / nf,
        mean_gap: mean,
        confidence: opts.confidence,
        ci: empirical_bernstein(mean, variance.max(0.0), total, 2.0, opts.confidence),
        hoeffding: hoeffding(mean, total, 2.0, opts.confidence),
        newcombe: newcombe_paired(c.both, c.cross_only, c.same_only, neither, opts.confidence),
        p_same_wilson: wilson(n_same, total, opts.confidence),
        p_cross_wilson: wilson(n_cross, total, opts.confidence),
        layout: StreamLayout::new(opts.seed),
    }
}

/// Estimate of the probability that a reachability query holds.
pub fn estimate_probability(
    fam: &Family<'_>,
    q: &ReachabilityQuery,
    opts: McOptions,
) -> Result<ProbabilityEstimate> {
    opts.validate()?;
    if q.semantics != fam.semantics() {
        return Err(Error::SemanticsMismatch(format!(
            "query is {:?}, model is {:?}",
            q.semantics,
            fam.semantics()
        )));
    }
    let b = fam.instance();
    for node in [q.source, q.target] {
        if node.vertex >= b.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{}", node.vertex)));
        }
    }
    let (s, t) = (b.node_id(q.source), b.node_id(q.target));
    let source = StreamSource::new(opts.seed);
    let hits = in_pool(opts.threads, || {
        chunk_ranges(opts.samples)
            .map(|(lo, hi)| {
                let mut reacher = Reacher::new(b);
                let mut config = fam.blank();
                let mut hits = 0u64;
                for i in lo..hi {
                    fam.sample_into(&mut config, &source, i);
                    hits += u64::from(reacher.connects(b, &config, s, t));
                }
                hits
            })
            .sum::<u64>()
    });
    let estimate = hits as f64 / opts.samples as f64;
    let h = hoeffding(estimate, opts.samples, 1.0, opts.confidence);
    Ok(ProbabilityEstimate {
        n: opts.samples,
        hits,
        estimate,
        confidence: opts.confidence,
        ci: Interval {
            low: h.low.max(0.0),
            high: h.high.min(1.0),
            ..h
        },
        wilson: wilson(hits, opts.samples, opts.confidence),
        layout: StreamLayout::new(opts.seed),
    })
}

/// Convenience: the query `u^(0) -> v^(bunk)` under the family's semantics.
pub fn query(fam: &Family<'_>, source: NodeRef, target: NodeRef) -> ReachabilityQuery {
    ReachabilityQuery {
        source,
        target,
        semantics: fam.semantics(),
    }
}
