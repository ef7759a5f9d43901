//! Exact stochastic simulation by two independent routes sharing one Poisson
//! realization, plus the statistical property tests built on them.
//!
//! Route one evolves the profile event by event: up steps travel left, down
//! steps travel right, colliding steps merge, and each nucleation inserts a
//! unit spike that immediately starts spreading. Route two evaluates the
//! growth variationally: the height at `(t, x)` is the best initial value
//! plus a curve-to-point last-passage count, computed per constancy piece by
//! a longest-chain scan in rotated coordinates. Both consume the identical
//! point set, so their outputs must agree exactly, sample by sample.
//!
//! Note on determinism: every sample derives its generator from (master
//! seed, sample index) as an independent counter-based stream, so batches
//! are bitwise reproducible regardless of how work is scheduled.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::height::{Height, HeightFunction};
use crate::par::{map_batch, ExecMode};

/// A space-time Poisson realization over the union of backward light cones
/// of a set of closed support intervals at horizon `t`.
#[derive(Clone, Debug)]
pub struct PoissonField {
    pub seed: u64,
    pub stream: u64,
    pub t: f64,
    supports: Vec<(f64, f64)>,
    pub points: Vec<(f64, f64)>,
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    // multiplicative method; fine at desk-scale means
    let limit = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

impl PoissonField {
    /// Rate-2 realization over the cones of isolated points `xs`.
    pub fn sample_for_points(t: f64, xs: &[f64], seed: u64, stream: u64) -> PoissonField {
        let supports: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
        Self::sample_for_intervals(t, &supports, seed, stream)
    }

    /// Rate-2 realization over the cones of closed intervals.
    pub fn sample_for_intervals(
        t: f64,
        supports: &[(f64, f64)],
        seed: u64,
        stream: u64,
    ) -> PoissonField {
        assert!(t >= 0.0);
        assert!(!supports.is_empty());
        let lo = supports.iter().map(|s| s.0).fold(f64::INFINITY, f64::min) - t;
        let hi = supports
            .iter()
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max)
            + t;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut points = Vec::new();
        if t > 0.0 && hi > lo {
            // sample on the bounding box, keep the cone union: a Poisson
            // process restricted to a subregion is Poisson on the subregion
            let mean = 2.0 * t * (hi - lo);
            let n = poisson_count(&mut rng, mean);
            for _ in 0..n {
                let u = t * rng.random::<f64>();
                let y = lo + (hi - lo) * rng.random::<f64>();
                let reach = t - u;
                if supports
                    .iter()
                    .any(|&(a, b)| y >= a - reach && y <= b + reach)
                {
                    points.push((u, y));
                }
            }
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        PoissonField {
            seed,
            stream,
            t,
            supports: supports.to_vec(),
            points,
        }
    }

    /// Whether the field region contains the backward cones of `(t, x)` for
    /// every requested point.
    pub fn covers_points(&self, t: f64, xs: &[f64]) -> bool {
        t <= self.t
            && xs.iter().all(|&x| {
                self.supports
                    .iter()
                    .any(|&(a, b)| x >= a - (self.t - t) && x <= b + (self.t - t))
            })
    }
}

// ---------------------------------------------------------------------------
// Event-driven route
// ---------------------------------------------------------------------------

/// Piecewise-constant profile: `levels[i]` holds on `(bounds[i-1], bounds[i])`.
#[derive(Clone, Debug)]
pub(crate) struct Profile {
    bounds: Vec<f64>,
    levels: Vec<Height>,
}

impl Profile {
    fn from_height_function(h: &HeightFunction, lo: f64, hi: f64) -> Profile {
        let mut bounds = Vec::new();
        let mut levels = vec![h.piece_value(lo)];
        for &(bp, v) in h.pieces() {
            if bp > lo && bp < hi {
                bounds.push(bp);
                levels.push(v);
            }
        }
        let mut profile = Profile { bounds, levels };
        for &(p, v) in h.spikes() {
            if p >= lo && p <= hi && v > profile.eval(p) {
                profile.insert_spike(p, v);
            }
        }
        profile.normalize();
        profile
    }

    fn eval(&self, x: f64) -> Height {
        match self.bounds.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(mut i) => {
                // boundary hit: collapse runs of equal positions, take the max
                let mut best = self.levels[i];
                while i < self.bounds.len() && self.bounds[i] == x {
                    i += 1;
                    best = best.max(self.levels[i]);
                }
                best
            }
            Err(i) => self.levels[i],
        }
    }

    fn sup_over(&self, a: f64, b: f64) -> Height {
        let mut best = self.eval(a).max(self.eval(b));
        for (i, level) in self.levels.iter().enumerate() {
            let start = if i == 0 {
                f64::NEG_INFINITY
            } else {
                self.bounds[i - 1]
            };
            let end = self.bounds.get(i).copied().unwrap_or(f64::INFINITY);
            if start < b && end > a {
                best = best.max(*level);
            }
        }
        best
    }

    fn insert_spike(&mut self, x: f64, v: Height) {
        let i = match self.bounds.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i + 1,
            Err(i) => i,
        };
        // split plateau i at x: [.., x) old, {x} spike, (x, ..] old
        let old = self.levels[i];
        self.bounds.insert(i, x);
        self.bounds.insert(i, x);
        self.levels.insert(i + 1, old);
        self.levels.insert(i + 1, v);
    }

    /// Removes boundaries between equal levels.
    fn normalize(&mut self) {
        let mut i = 0;
        while i < self.bounds.len() {
            if self.levels[i] == self.levels[i + 1] {
                self.bounds.remove(i);
                self.levels.remove(i + 1);
            } else {
                i += 1;
            }
        }
    }

    fn velocity(&self, i: usize) -> f64 {
        // boundary between levels[i] (left) and levels[i+1] (right): a down
        // step moves right, an up step moves left
        if self.levels[i] > self.levels[i + 1] {
            1.0
        } else {
            -1.0
        }
    }

    /// Advances the free dynamics by `dt`, processing collisions in order.
    fn advance(&mut self, mut dt: f64) {
        loop {
            self.normalize();
            if self.bounds.is_empty() || dt <= 0.0 {
                return;
            }
            // earliest collision among approaching adjacent pairs
            let mut first: Option<(usize, f64)> = None;
            for i in 0..self.bounds.len() - 1 {
                if self.velocity(i) > self.velocity(i + 1) {
                    let gap = (self.bounds[i + 1] - self.bounds[i]).max(0.0);
                    let when = gap / 2.0;
                    if first.map(|f| when < f.1).unwrap_or(true) {
                        first = Some((i, when));
                    }
                }
            }
            let step = first.map(|f| f.1).unwrap_or(f64::INFINITY).min(dt);
            let velocities: Vec<f64> = (0..self.bounds.len()).map(|i| self.velocity(i)).collect();
            for (i, vel) in velocities.iter().enumerate() {
                self.bounds[i] += vel * step;
            }
            dt -= step;
            if let Some((i, when)) = first {
                if when <= step {
                    // the pair (i, i+1) met: drop the middle plateau
                    let meet = 0.5 * (self.bounds[i] + self.bounds[i + 1]);
                    self.levels.remove(i + 1);
                    self.bounds.remove(i + 1);
                    self.bounds[i] = meet;
                    // equal outer levels annihilate in normalize()
                    continue;
                }
            }
            if dt <= 0.0 {
                return;
            }
        }
    }

    fn nucleate(&mut self, x: f64) {
        let v = self.eval(x).plus(1);
        if v == Height::NegInf {
            return;
        }
        self.insert_spike(x, v);
    }
}

/// Evolves the initial profile through the field's nucleations and reads the
/// heights at `(t, x_i)`. Exact over the field region.
pub fn sample_event_driven(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    field: &PoissonField,
) -> Result<Vec<Height>> {
    if !field.covers_points(t, xs) {
        return Err(Error::Precondition(
            "field region does not cover the requested backward cones".into(),
        ));
    }
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - t;
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + t;
    let mut profile = Profile::from_height_function(h, lo, hi);
    let mut now = 0.0;
    for &(u, y) in &field.points {
        if u > t {
            break;
        }
        profile.advance(u - now);
        profile.nucleate(y);
        now = u;
    }
    profile.advance(t - now);
    Ok(xs.iter().map(|&x| profile.eval(x)).collect())
}

// ---------------------------------------------------------------------------
// Last-passage route
// ---------------------------------------------------------------------------

/// Longest nondecreasing subsequence length (patience scan).
fn longest_nondecreasing(qs: &[f64]) -> usize {
    let mut tails: Vec<f64> = Vec::new();
    for &q in qs {
        // first strictly greater tail gets replaced
        let idx = tails.partition_point(|&x| x <= q);
        if idx == tails.len() {
            tails.push(q);
        } else {
            tails[idx] = q;
        }
    }
    tails.len()
}

/// Curve-to-point last-passage count from the start segment `[c, d]` at time
/// zero to `(t, x)`.
fn last_passage_count(points: &[(f64, f64)], t: f64, x: f64, c: f64, d: f64) -> usize {
    let mut pq: Vec<(f64, f64)> = Vec::new();
    for &(u, y) in points {
        if u > t {
            continue;
        }
        let p = u + y;
        let q = u - y;
        if p >= c && q >= -d && p <= t + x && q <= t - x {
            pq.push((p, q));
        }
    }
    pq.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let qs: Vec<f64> = pq.into_iter().map(|e| e.1).collect();
    longest_nondecreasing(&qs)
}

/// Variational evaluation: for each piece of constancy of the initial
/// profile meeting the backward cone, initial value plus last-passage count;
/// the height is the maximum over pieces.
pub fn sample_lastpassage(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    field: &PoissonField,
) -> Result<Vec<Height>> {
    if !field.covers_points(t, xs) {
        return Err(Error::Precondition(
            "field region does not cover the requested backward cones".into(),
        ));
    }
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut best = Height::NegInf;
        for (c, d, value) in h.constancy_pieces(x - t, x + t) {
            let count = last_passage_count(&field.points, t, x, c, d);
            best = best.max(value.plus(count as i64));
        }
        out.push(best);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Estimators and statistical tests
// ---------------------------------------------------------------------------

/// A batch of sampled height vectors with the configuration that produced
/// them. Per-sample generators derive from `(seed, stream)`, so the exact
/// Poisson realization behind any sample can be rebuilt for cross-checks.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub t: f64,
    pub xs: Vec<f64>,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub heights: Vec<Vec<Height>>,
}

impl SampleBatch {
    /// Draws `n_samples` independent event-driven samples in deterministic
    /// stream order, regardless of scheduling.
    pub fn collect(
        h: &HeightFunction,
        t: f64,
        xs: &[f64],
        n_samples: usize,
        seed: u64,
        mode: ExecMode,
    ) -> SampleBatch {
        let heights = map_batch(mode, n_samples, |idx| {
            let field = PoissonField::sample_for_points(t, xs, seed, idx as u64);
            sample_event_driven(h, t, xs, &field).expect("field covers its own cones")
        });
        SampleBatch {
            t,
            xs: xs.to_vec(),
            seed,
            streams: (0..n_samples as u64).collect(),
            heights,
        }
    }

    /// Rebuilds the exact point set that generated sample `i`.
    pub fn field(&self, i: usize) -> PoissonField {
        PoissonField::sample_for_points(self.t, &self.xs, self.seed, self.streams[i])
    }

    /// Empirical `P(h(t, x_i) <= r_i for all i)` with binomial standard
    /// error; several level vectors can be read off one batch.
    pub fn cdf_estimate(&self, rs: &[i64]) -> (f64, f64) {
        assert_eq!(rs.len(), self.xs.len());
        let hits = self
            .heights
            .iter()
            .filter(|sample| {
                sample
                    .iter()
                    .zip(rs)
                    .all(|(hh, &r)| *hh <= Height::Finite(r))
            })
            .count();
        let n = self.heights.len() as f64;
        let p = hits as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// Marginal samples at point index `i`, minus-infinity values mapped to
    /// `i64::MIN` for rank statistics.
    pub fn marginal(&self, i: usize) -> Vec<i64> {
        self.heights
            .iter()
            .map(|sample| match sample[i] {
                Height::Finite(v) => v,
                Height::NegInf => i64::MIN,
            })
            .collect()
    }
}

/// Monte Carlo estimate of `P(h(t, x_i) <= r_i for all i)` with binomial
/// standard error.
pub fn estimate_cdf(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    estimate_cdf_with_mode(h, t, xs, rs, n_samples, seed, ExecMode::Auto)
}

pub fn estimate_cdf_with_mode(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    n_samples: usize,
    seed: u64,
    mode: ExecMode,
) -> (f64, f64) {
    let batch = 256;
    let batches = n_samples.div_ceil(batch);
    let hits: u64 = map_batch(mode, batches, |bi| {
        let lo = bi * batch;
        let hi = ((bi + 1) * batch).min(n_samples);
        let mut count = 0u64;
        for idx in lo..hi {
            let field = PoissonField::sample_for_points(t, xs, seed, idx as u64);
            let heights =
                sample_event_driven(h, t, xs, &field).expect("field covers its own cones");
            if heights
                .iter()
                .zip(rs)
                .all(|(hh, &r)| *hh <= Height::Finite(r))
            {
                count += 1;
            }
        }
        count
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n_samples as f64;
    let se = (p * (1.0 - p) / n_samples as f64).sqrt();
    (p, se)
}

/// Outcome of the skew time-reversal comparison: the two estimated sides and
/// the discrepancy z-score.
#[derive(Clone, Debug)]
pub struct SkewReport {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub z: f64,
}

/// Constraint set carried by a ceiling profile: closed intervals, each with
/// the cap `-f` on it.
fn constraint_pieces(f: &HeightFunction, lo: f64, hi: f64) -> Vec<(f64, f64, i64)> {
    f.constancy_pieces(lo, hi)
        .into_iter()
        .filter_map(|(c, d, v)| v.finite().map(|vv| (c, d, -vv)))
        .collect()
}

fn finite_hull(h: &HeightFunction) -> Option<(f64, f64)> {
    if h.left_value().is_finite() {
        return None; // unbounded to the left
    }
    if let Some(last) = h.pieces().last() {
        if last.1.is_finite() {
            return None; // unbounded to the right
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &(bp, v)) in h.pieces().iter().enumerate() {
        if v.is_finite() {
            lo = lo.min(bp);
            let end = h.pieces().get(i + 1).map(|p| p.0).unwrap_or(f64::INFINITY);
            hi = hi.max(end);
        }
    }
    for &(p, v) in h.spikes() {
        if v.is_finite() {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    if lo.is_finite() && hi.is_finite() {
        Some((lo, hi))
    } else {
        None
    }
}

fn estimate_domination(
    start: &HeightFunction,
    ceiling: &HeightFunction,
    t: f64,
    n_samples: usize,
    seed: u64,
    stream_base: u64,
) -> Result<(f64, f64)> {
    // P(h(t, .; start) <= -ceiling(.) everywhere). The effective constraint
    // region is where the ceiling is finite, clipped to the spread of the
    // start profile when that is compactly supported.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    if let Some((a, b)) = finite_hull(start) {
        lo = a - t;
        hi = b + t;
    }
    let pieces = constraint_pieces(ceiling, lo, hi);
    if pieces.is_empty() {
        return Ok((1.0, 0.0));
    }
    let unbounded = !pieces.iter().all(|p| p.0.is_finite() && p.1.is_finite());
    if unbounded {
        return Err(Error::Precondition(
            "skew comparison needs one side with compact effective constraints".into(),
        ));
    }
    let supports: Vec<(f64, f64)> = pieces.iter().map(|&(c, d, _)| (c, d)).collect();
    let span_lo = supports.iter().map(|s| s.0).fold(f64::INFINITY, f64::min) - t;
    let span_hi = supports
        .iter()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max)
        + t;
    let batch = 256;
    let batches = n_samples.div_ceil(batch);
    let hits: u64 = map_batch(ExecMode::Auto, batches, |bi| {
        let b_lo = bi * batch;
        let b_hi = ((bi + 1) * batch).min(n_samples);
        let mut count = 0u64;
        for idx in b_lo..b_hi {
            let field =
                PoissonField::sample_for_intervals(t, &supports, seed, stream_base + idx as u64);
            let mut profile = Profile::from_height_function(start, span_lo, span_hi);
            let mut now = 0.0;
            for &(u, y) in &field.points {
                profile.advance(u - now);
                profile.nucleate(y);
                now = u;
            }
            profile.advance(t - now);
            let ok = pieces
                .iter()
                .all(|&(c, d, cap)| profile.sup_over(c, d) <= Height::Finite(cap));
            if ok {
                count += 1;
            }
        }
        count
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n_samples as f64;
    let se = (p * (1.0 - p) / n_samples as f64).sqrt();
    Ok((p, se))
}

/// Estimates both sides of the reversal identity
/// `P(h(t; g) <= -f) = P(h(t; f) <= -g)` by independent Monte Carlo.
pub fn skew_reversal_test(
    f: &HeightFunction,
    g: &HeightFunction,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SkewReport> {
    let (lhs, lhs_se) = estimate_domination(g, f, t, n_samples, seed, 0)?;
    let (rhs, rhs_se) = estimate_domination(f, g, t, n_samples, seed, 1 << 40)?;
    let denom = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let z = if denom > 0.0 {
        (lhs - rhs) / denom
    } else if lhs == rhs {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SkewReport {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        z,
    })
}

/// Outcome of the invariant-state test.
#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub mean_increment_z: f64,
}

/// Starts from the symmetric random-walk state (independent rate-1 up and
/// down jumps), evolves to time `t`, and chi-square-tests the jump counts of
/// `h(t, .)` in bins of the light-cone interior against the initial law.
/// Also z-tests the mean increment over `[0, 1]`.
pub fn invariance_test(t: f64, half_window: f64, n_samples: usize, seed: u64) -> InvarianceReport {
    let w = half_window;
    let l = w + t + 1.0;
    let n_bins = (2.0 * w).floor() as usize;
    let stats = map_batch(ExecMode::Auto, n_samples, |idx| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        // initial state on [-l, l]
        let n_up = poisson_count(&mut rng, 2.0 * l);
        let n_down = poisson_count(&mut rng, 2.0 * l);
        let mut jumps: Vec<(f64, i64)> = Vec::with_capacity(n_up + n_down);
        for _ in 0..n_up {
            jumps.push((-l + 2.0 * l * rng.random::<f64>(), 1));
        }
        for _ in 0..n_down {
            jumps.push((-l + 2.0 * l * rng.random::<f64>(), -1));
        }
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut bounds = Vec::with_capacity(jumps.len());
        let mut levels = vec![Height::Finite(0)];
        let mut level = 0i64;
        for (pos, sig) in jumps {
            level += sig;
            bounds.push(pos);
            levels.push(Height::Finite(level));
        }
        let mut profile = Profile { bounds, levels };
        profile.normalize();
        // nucleations over the cones of the observation window
        let field = PoissonField::sample_for_intervals(t, &[(-w, w)], seed, (1 << 40) + idx as u64);
        let mut now = 0.0;
        for &(u, y) in &field.points {
            profile.advance(u - now);
            profile.nucleate(y);
            now = u;
        }
        profile.advance(t - now);
        // bin the up/down jumps of the final profile inside [-w, w]
        let mut up = vec![0u64; n_bins];
        let mut down = vec![0u64; n_bins];
        for i in 0..profile.bounds.len() {
            let pos = profile.bounds[i];
            if pos <= -w || pos >= w {
                continue;
            }
            let bin = (((pos + w) / (2.0 * w)) * n_bins as f64) as usize;
            let bin = bin.min(n_bins - 1);
            if profile.levels[i + 1] > profile.levels[i] {
                up[bin] += 1;
            } else {
                down[bin] += 1;
            }
        }
        let inc = match (profile.eval(1.0), profile.eval(0.0)) {
            (Height::Finite(a), Height::Finite(b)) => (a - b) as f64,
            _ => 0.0,
        };
        (up, down, inc)
    });

    let mut up_tot = vec![0u64; n_bins];
    let mut down_tot = vec![0u64; n_bins];
    let mut inc_sum = 0.0;
    let mut inc_sq = 0.0;
    for (up, down, inc) in &stats {
        for b in 0..n_bins {
            up_tot[b] += up[b];
            down_tot[b] += down[b];
        }
        inc_sum += inc;
        inc_sq += inc * inc;
    }
    let n = n_samples as f64;
    let bin_len = 2.0 * w / n_bins as f64;
    let expected = n * bin_len; // rate-1 jumps per unit length
    let mut chi2 = 0.0;
    for b in 0..n_bins {
        let zu = (up_tot[b] as f64 - expected) / expected.sqrt();
        let zd = (down_tot[b] as f64 - expected) / expected.sqrt();
        chi2 += zu * zu + zd * zd;
    }
    let dof = 2 * n_bins;
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2);
    let mean = inc_sum / n;
    let var = (inc_sq / n - mean * mean).max(1e-12);
    let mean_increment_z = mean / (var / n).sqrt();
    InvarianceReport {
        chi2,
        dof,
        p_value,
        mean_increment_z,
    }
}

/// Two-sample Kolmogorov-Smirnov test on integer samples. Returns the
/// statistic and the asymptotic p-value (conservative under ties).
pub fn ks_two_sample(a: &[i64], b: &[i64]) -> (f64, f64) {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable();
    ys.sort_unstable();
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let values: std::collections::BTreeSet<i64> = xs.iter().chain(ys.iter()).copied().collect();
    let mut d: f64 = 0.0;
    for &v in &values {
        let fa = xs.partition_point(|&x| x <= v) as f64 / n;
        let fb = ys.partition_point(|&y| y <= v) as f64 / m;
        d = d.max((fa - fb).abs());
    }
    let lambda = d * (n * m / (n + m)).sqrt();
    (d, ks_sf(lambda))
}

/// One-sample KS uniformity test for p-values on [0, 1].
pub fn ks_uniform(ps: &[f64]) -> (f64, f64) {
    let mut xs = ps.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((x - lo).abs()).max((hi - x).abs());
    }
    let lambda = d * n.sqrt();
    (d, ks_sf(lambda))
}

fn ks_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
