//! Exact Monte-Carlo simulation of the occupation field.
//!
//! The field holds unlabeled exchangeable particles, so one splitting step is
//! distributionally identical to moving every particle independently: at each
//! site, `Binomial(count, 1/2)` particles step right and the rest step left.
//! With p = 1/2 the binomial draw is just the popcount of `count` fair bits,
//! which is the per-particle definition itself, so the update is exact at
//! every count.
//!
//! Windows are sized so that truncation is impossible, not merely unlikely:
//! the walks have speed one, so a particle starting further than the horizon
//! from the readout region can never be seen. The samplers additionally
//! restrict each step to the shrinking cone of sites that can still reach the
//! readout in the remaining time; mass outside the cone is provably
//! irrelevant, and skipping it makes draws independent of any extra window
//! padding bit for bit.
//!
//! Replicates are embarrassingly parallel. Each replicate uses its own
//! counter-derived streams (field and walk separately), so batches are
//! reproducible for any worker count.

use crate::charlier::PolynomialObservable;
use crate::error::{Error, Result};
use crate::kernels::{ssrw_kernel, FiniteSiteSet, StepLaw};
use crate::parallel::{map_indexed, map_indexed_serial};
use crate::rng::{substream, SUBSTREAM_FIELD, SUBSTREAM_WALK};
use rand::Rng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

/// Exact `Binomial(count, 1/2)` draw: popcount of `count` fair bits.
pub fn binomial_half(count: u64, rng: &mut impl RngCore) -> u64 {
    let mut right = 0u64;
    let mut remaining = count;
    while remaining >= 64 {
        right += rng.next_u64().count_ones() as u64;
        remaining -= 64;
    }
    if remaining > 0 {
        right += (rng.next_u64() & ((1u64 << remaining) - 1)).count_ones() as u64;
    }
    right
}

fn poisson_count(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let dist = rand_distr::Poisson::new(lambda).expect("positive finite intensity");
    dist.sample(rng) as u64
}

/// Integer occupation counts over a fixed window of sites.
#[derive(Debug, Clone)]
pub struct FieldWindow {
    lo: i64,
    hi: i64,
    counts: Vec<u64>,
    scratch: Vec<u64>,
    time: u64,
}

impl FieldWindow {
    /// Empty window over `[lo, hi]`.
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "window bounds out of order");
        let width = (hi - lo + 1) as usize;
        Self {
            lo,
            hi,
            counts: vec![0; width],
            scratch: vec![0; width],
            time: 0,
        }
    }

    /// Window over `[lo, hi]` with i.i.d. Poisson(lambda) counts on the
    /// sub-range `[fill_lo, fill_hi]` and zeros elsewhere.
    pub fn poisson_on(
        lo: i64,
        hi: i64,
        fill_lo: i64,
        fill_hi: i64,
        lambda: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut w = Self::new(lo, hi);
        let a = fill_lo.max(lo);
        let b = fill_hi.min(hi);
        for x in a..=b {
            w.counts[(x - lo) as usize] = poisson_count(lambda, rng);
        }
        w
    }

    /// Window fully initialized with i.i.d. Poisson(lambda) counts.
    pub fn poisson(lo: i64, hi: i64, lambda: f64, rng: &mut ChaCha8Rng) -> Self {
        Self::poisson_on(lo, hi, lo, hi, lambda, rng)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn count_at(&self, x: i64) -> u64 {
        if x < self.lo || x > self.hi {
            0
        } else {
            self.counts[(x - self.lo) as usize]
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn sum_on(&self, sites: &FiniteSiteSet) -> u64 {
        sites.sites().iter().map(|&x| self.count_at(x)).sum()
    }

    /// One splitting step moving mass only from sites in `[src_lo, src_hi]`
    /// (clamped to the window); every other site ends up empty. Mass pushed
    /// past the window bounds is dropped.
    pub fn evolve_within(&mut self, src_lo: i64, src_hi: i64, rng: &mut impl RngCore) {
        self.scratch.fill(0);
        let a = (src_lo.max(self.lo) - self.lo) as usize;
        let b = (src_hi.min(self.hi) - self.lo) as usize;
        let width = self.counts.len();
        for i in a..=b.min(width - 1) {
            let c = self.counts[i];
            if c == 0 {
                continue;
            }
            let right = binomial_half(c, rng);
            if i + 1 < width {
                self.scratch[i + 1] += right;
            }
            if i > 0 {
                self.scratch[i - 1] += c - right;
            }
        }
        std::mem::swap(&mut self.counts, &mut self.scratch);
        self.time += 1;
    }

    /// One full-window splitting step.
    pub fn evolve(&mut self, rng: &mut impl RngCore) {
        self.evolve_within(self.lo, self.hi, rng)
    }

    /// Zero the counts on `sites` and return their sum.
    pub fn absorb(&mut self, sites: &FiniteSiteSet) -> u64 {
        let mut taken = 0;
        for &x in sites.sites() {
            if x >= self.lo && x <= self.hi {
                let i = (x - self.lo) as usize;
                taken += self.counts[i];
                self.counts[i] = 0;
            }
        }
        taken
    }
}

/// Sampling-walk trajectory `S_0 = 0, S_1, .., S_n`.
pub fn sample_walk(n: u64, law: StepLaw, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let mut path = Vec::with_capacity(n as usize + 1);
    let mut pos = 0i64;
    path.push(pos);
    for _ in 0..n {
        pos += if rng.random_bool(law.p_up()) { 1 } else { -1 };
        path.push(pos);
    }
    path
}

/// One exact draw of the cumulative occupation of `sites` over horizon `n`.
///
/// `pad` adds inert window sites on each side; draws are bit-identical for
/// any pad because initialization and evolution never touch the padding.
pub fn sample_wn_padded(
    n: u64,
    sites: &FiniteSiteSet,
    lambda: f64,
    pad: u64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let reach = n as i64;
    let (lo0, hi0) = (sites.min() - reach, sites.max() + reach);
    let mut w = FieldWindow::poisson_on(
        lo0 - pad as i64,
        hi0 + pad as i64,
        lo0,
        hi0,
        lambda,
        rng,
    );
    let mut total = 0u64;
    for m in 1..=n {
        let r = (n - m + 1) as i64;
        w.evolve_within(sites.min() - r, sites.max() + r, rng);
        total += w.sum_on(sites);
    }
    total as f64
}

/// One exact draw of the cumulative occupation (tight window).
pub fn sample_wn(n: u64, sites: &FiniteSiteSet, lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
    sample_wn_padded(n, sites, lambda, 0, rng)
}

/// One exact draw of the distinct-visitor count over horizon `n`: splitting
/// dynamics with absorption, so each particle is counted exactly once at its
/// first visit.
pub fn sample_dn_padded(
    n: u64,
    sites: &FiniteSiteSet,
    lambda: f64,
    pad: u64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let reach = n as i64;
    let (lo0, hi0) = (sites.min() - reach, sites.max() + reach);
    let mut w = FieldWindow::poisson_on(
        lo0 - pad as i64,
        hi0 + pad as i64,
        lo0,
        hi0,
        lambda,
        rng,
    );
    // particles sitting on A at time zero only count if they return
    let mut hits = 0u64;
    for m in 1..=n {
        let r = (n - m + 1) as i64;
        w.evolve_within(sites.min() - r, sites.max() + r, rng);
        hits += w.absorb(sites);
    }
    hits as f64
}

/// One exact draw of the distinct-visitor count (tight window).
pub fn sample_dn(n: u64, sites: &FiniteSiteSet, lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
    sample_dn_padded(n, sites, lambda, 0, rng)
}

/// One exact draw of the path-sampled polynomial sum over horizon `n`.
///
/// The walk is drawn from its own stream first; the field then evolves on the
/// window `[-2n, 2n]` and is read at the walk position after each step.
pub fn sample_y_padded(
    n: u64,
    phi: &PolynomialObservable,
    lambda: f64,
    law: StepLaw,
    pad: u64,
    field_rng: &mut ChaCha8Rng,
    walk_rng: &mut ChaCha8Rng,
) -> f64 {
    let reach = 2 * n as i64;
    let path = sample_walk(n, law, walk_rng);
    let mut w = FieldWindow::poisson_on(
        -reach - pad as i64,
        reach + pad as i64,
        -reach,
        reach,
        lambda,
        field_rng,
    );
    let mut total = 0.0;
    for m in 1..=n {
        let r = reach - (m as i64 - 1);
        w.evolve_within(-r, r, field_rng);
        total += phi.eval(w.count_at(path[m as usize]) as f64);
    }
    total
}

/// One exact draw of the path-sampled polynomial sum (tight window).
pub fn sample_y(
    n: u64,
    phi: &PolynomialObservable,
    lambda: f64,
    law: StepLaw,
    field_rng: &mut ChaCha8Rng,
    walk_rng: &mut ChaCha8Rng,
) -> f64 {
    sample_y_padded(n, phi, lambda, law, 0, field_rng, walk_rng)
}

/// Precomputed symmetric-kernel rows `Q_t(d)` for t = 1..=t_max, indexed by
/// `(d + t) / 2`. Shared across replicates of the walk pair functional.
pub struct SsrwTriangle {
    rows: Vec<Vec<f64>>,
}

impl SsrwTriangle {
    pub fn new(t_max: u64) -> Self {
        let rows = (1..=t_max)
            .map(|t| {
                (0..=t)
                    .map(|j| ssrw_kernel(t, 2 * j as i64 - t as i64))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    #[inline]
    pub fn q(&self, t: u64, d: i64) -> f64 {
        self.rows[(t - 1) as usize][((d + t as i64) / 2) as usize]
    }
}

/// One draw of the walk pair functional
/// `sum_{1 <= a < b <= n} Q_{b-a}(S_b - S_a)^q` (walk randomness only).
pub fn sample_sigma_sum(
    n: u64,
    q: u32,
    law: StepLaw,
    triangle: &SsrwTriangle,
    rng: &mut ChaCha8Rng,
) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let path = sample_walk(n, law, rng);
    let mut total = 0.0;
    for t in 1..n {
        let mut inner = 0.0;
        for a in 1..=(n - t) {
            let d = path[(a + t) as usize] - path[a as usize];
            inner += triangle.q(t, d).powi(q as i32);
        }
        total += inner;
    }
    total
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

/// What to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ObservableKind {
    /// Cumulative occupation of a site set.
    #[serde(rename = "W")]
    CumulativeOccupation { sites: FiniteSiteSet },
    /// Distinct particles visiting a site set.
    #[serde(rename = "D")]
    DistinctVisitors { sites: FiniteSiteSet },
    /// Polynomial of the field read along the sampling walk.
    #[serde(rename = "Y")]
    PathSampled { phi: PolynomialObservable },
    /// Kernel pair sum along the sampling walk (no field).
    #[serde(rename = "sigma")]
    WalkPairSum { q: u32 },
}

impl ObservableKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ObservableKind::CumulativeOccupation { .. } => "W",
            ObservableKind::DistinctVisitors { .. } => "D",
            ObservableKind::PathSampled { .. } => "Y",
            ObservableKind::WalkPairSum { .. } => "sigma",
        }
    }
}

/// A fully specified sampling job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub kind: ObservableKind,
    pub n: u64,
    pub lambda: f64,
    pub law: StepLaw,
}

impl Job {
    pub fn new(kind: ObservableKind, n: u64, lambda: f64, law: StepLaw) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config {
                field: "n",
                reason: "horizon must be at least 1".into(),
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidIntensity(lambda));
        }
        Ok(Self {
            kind,
            n,
            lambda,
            law,
        })
    }
}

/// An ordered batch of independent draws. Replicate i is a deterministic
/// function of `(master_seed, i)`, so regenerating the batch reproduces the
/// values bit for bit regardless of worker count.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    pub observable: String,
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub job: Job,
}

fn batch_draw(job: &Job, triangle: Option<&SsrwTriangle>, master_seed: u64, i: u64) -> f64 {
    let mut field = substream(master_seed, i, SUBSTREAM_FIELD);
    let mut walk = substream(master_seed, i, SUBSTREAM_WALK);
    match &job.kind {
        ObservableKind::CumulativeOccupation { sites } => {
            sample_wn(job.n, sites, job.lambda, &mut field)
        }
        ObservableKind::DistinctVisitors { sites } => {
            sample_dn(job.n, sites, job.lambda, &mut field)
        }
        ObservableKind::PathSampled { phi } => {
            sample_y(job.n, phi, job.lambda, job.law, &mut field, &mut walk)
        }
        ObservableKind::WalkPairSum { q } => {
            sample_sigma_sum(job.n, *q, job.law, triangle.expect("triangle"), &mut walk)
        }
    }
}

fn run_batch_impl(job: &Job, m: u64, master_seed: u64, serial: bool) -> SampleBatch {
    assert!(m >= 1, "need at least one replicate");
    let triangle = match &job.kind {
        ObservableKind::WalkPairSum { .. } if job.n >= 2 => Some(SsrwTriangle::new(job.n - 1)),
        ObservableKind::WalkPairSum { .. } => Some(SsrwTriangle::new(1)),
        _ => None,
    };
    let draw = |i: u64| batch_draw(job, triangle.as_ref(), master_seed, i);
    let values = if serial {
        map_indexed_serial(m, draw)
    } else {
        map_indexed(m, draw)
    };
    SampleBatch {
        observable: job.kind.tag().to_string(),
        values,
        master_seed,
        job: job.clone(),
    }
}

/// Draw `m` independent replicates (parallel when the feature is on).
pub fn run_batch(job: &Job, m: u64, master_seed: u64) -> SampleBatch {
    run_batch_impl(job, m, master_seed, false)
}

/// Sequential reference path producing bit-identical batches.
pub fn run_batch_serial(job: &Job, m: u64, master_seed: u64) -> SampleBatch {
    run_batch_impl(job, m, master_seed, true)
}
