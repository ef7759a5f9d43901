//! Hitting and no-hitting transition kernels of the rate-(1,1) walk against
//! the hypograph of a height profile.
//!
//! A path hits the hypograph of `h` on `[a, b]` if at some position `x` there
//! it sits at or below `h(x)`. Over a constant stretch the complementary
//! no-hit kernel has the reflection form, and a general piecewise profile is
//! handled by composing constant-stretch kernels with diagonal projections at
//! breakpoints and spikes. A direct jump-path Monte Carlo estimator serves as
//! the independent oracle.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::height::{Height, HeightFunction};
use crate::par::{map_batch, ExecMode};
use crate::walk::{bessel_i, heat_kernel, IntegerKernel, Window};

/// Extra index room added around requested windows before composing kernels,
/// so truncation tails stay far below the working tolerances.
pub const DEFAULT_BUFFER: i64 = 40;

/// Diagonal projection onto `{u > level}`.
pub fn proj_above(level: Height, w: Window) -> IntegerKernel {
    IntegerKernel::from_fn(w, |u, v| {
        if u == v && Height::Finite(u) > level {
            1.0
        } else {
            0.0
        }
    })
}

/// No-hit kernel against a constant barrier at `level` over a stretch of
/// length `s`, by the reflection principle: for `u, v > level`,
/// `e^{s Delta}(u, v) - e^{s Delta}(u, 2 level - v)`, and zero otherwise.
/// A barrier at minus infinity gives the free semigroup.
pub fn nohit_constant(level: Height, s: f64, w: Window) -> IntegerKernel {
    assert!(s >= 0.0, "nohit_constant needs s >= 0");
    let c = match level {
        Height::NegInf => return heat_kernel(s, w),
        Height::Finite(c) => c,
    };
    let scale = (-2.0 * s).exp();
    let max_offset = (2 * (w.hi - c).max(1) + w.len() as i64) as usize;
    let mut by_offset = Vec::with_capacity(max_offset + 1);
    for d in 0..=max_offset {
        by_offset.push(scale * bessel_i(d as u32, 2.0 * s));
    }
    IntegerKernel::from_fn(w, |u, v| {
        if u <= c || v <= c {
            return 0.0;
        }
        let direct = by_offset[(u - v).unsigned_abs() as usize];
        let reflected = by_offset[(u + v - 2 * c).unsigned_abs() as usize];
        direct - reflected
    })
}

/// Independent route to [`nohit_constant`]: uniformization of the killed
/// generator. The embedded jump chain (+-1 with probability 1/2 each,
/// absorbed at or below the barrier) is Poisson-randomized with rate `2s`,
/// summing powers until the Poisson tail falls below 1e-14 relative.
pub fn nohit_constant_uniformized(level: Height, s: f64, w: Window) -> IntegerKernel {
    assert!(s >= 0.0);
    // Work on an enlarged window so in-window entries see no truncation.
    let pad = DEFAULT_BUFFER + (4.0 * s).ceil() as i64;
    let work = Window::new(w.lo - pad, w.hi + pad);
    let n = work.len();
    let keep = |u: i64| Height::Finite(u) > level;

    let mut term = nalgebra::DMatrix::<f64>::zeros(n, n); // T^k applied, starts at I
    for u in work.iter() {
        if keep(u) {
            term[(work.index(u), work.index(u))] = 1.0;
        }
    }
    let mut weight = (-2.0 * s).exp(); // Poisson(2s) pmf at k = 0
    let mut sum = weight * &term;
    let mut cumulative = weight;
    let mut k = 1usize;
    while 1.0 - cumulative > 1e-14 {
        // one absorbing step of the embedded chain
        let mut next = nalgebra::DMatrix::<f64>::zeros(n, n);
        for u in work.iter() {
            if !keep(u) {
                continue;
            }
            let row = work.index(u);
            for &v in &[u - 1, u + 1] {
                if work.contains(v) && keep(v) {
                    let src = work.index(v);
                    for col in 0..n {
                        next[(row, col)] += 0.5 * term[(src, col)];
                    }
                }
            }
        }
        std::mem::swap(&mut term, &mut next);
        weight *= 2.0 * s / k as f64;
        sum += weight * &term;
        cumulative += weight;
        k += 1;
        if k > 10_000 {
            break;
        }
    }
    IntegerKernel::from_fn(w, |u, v| sum[(work.index(u), work.index(v))])
}

/// Working window for kernel compositions over `[a, b]`. Upward the walk is
/// unconstrained, so the window grows by the jump spread plus the buffer.
/// Downward the composition intermediates are floored at the lowest finite
/// barrier level, except where a free stretch meets another one with no
/// finite projection in between; only then is full downward room added.
pub(crate) fn composition_window(
    h: &HeightFunction,
    a: f64,
    b: f64,
    w: Window,
    buffer: i64,
) -> Window {
    let pad = buffer + (2.0 * (b - a).max(0.0)).ceil() as i64;
    let hi = w.hi + pad;
    let mut lo = w.lo;
    if let Some(min_level) = h.min_finite_value() {
        lo = lo.min(min_level - 2);
    }
    let free_junction = h
        .positions_within(a, b)
        .iter()
        .any(|&p| h.eval(p) == Height::NegInf);
    if free_junction {
        lo = lo.min(w.lo - pad);
    }
    Window::new(lo, hi)
}

/// Working window for the first-passage hit kernel: unlike the no-hit
/// composition, the catch states run below the barrier and back, so full
/// downward room is required as well.
pub(crate) fn hit_window(h: &HeightFunction, a: f64, b: f64, w: Window, buffer: i64) -> Window {
    let pad = buffer + (2.0 * (b - a).max(0.0)).ceil() as i64;
    let mut lo = w.lo;
    if let Some(min_level) = h.min_finite_value() {
        lo = lo.min(min_level);
    }
    Window::new(lo - pad, w.hi + pad)
}

fn restrict(k: &IntegerKernel, sub: Window) -> IntegerKernel {
    IntegerKernel::from_fn(sub, |u, v| k.entry(u, v))
}

/// No-hit composition evaluated directly on `work`, which the caller has
/// already padded (see [`composition_window`]).
pub(crate) fn nohit_on(h: &HeightFunction, a: f64, b: f64, work: Window) -> IntegerKernel {
    assert!(a <= b, "nohit needs a <= b");
    let mut acc = proj_above(h.eval(a), work);
    if a < b {
        let mut cuts = vec![a];
        cuts.extend(h.positions_within(a, b));
        cuts.push(b);
        for pair in cuts.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let level = h.piece_value(0.5 * (p + q));
            let stretch = nohit_constant(level, q - p, work);
            acc = acc.compose(&stretch);
            let proj = proj_above(h.eval(q), work);
            acc = acc.compose(&proj);
        }
    }
    acc
}

/// No-hit kernel for a piecewise profile on `[a, b]`: ordered composition of
/// constant-stretch reflection kernels, interleaved with projections onto
/// `{> h(p)}` at every breakpoint and spike position, including the
/// endpoints.
pub fn nohit(h: &HeightFunction, a: f64, b: f64, w: Window) -> IntegerKernel {
    nohit_buffered(h, a, b, w, DEFAULT_BUFFER)
}

pub fn nohit_buffered(h: &HeightFunction, a: f64, b: f64, w: Window, buffer: i64) -> IntegerKernel {
    let work = composition_window(h, a, b, w, buffer);
    restrict(&nohit_on(h, a, b, work), w)
}

/// Hit kernel by first-passage decomposition over the segment where the
/// first hypograph touch happens. Every term is a product of nonnegative
/// closed-form entries, so entries far above the barrier come out with
/// relative (not absolute) accuracy; the plain `heat - nohit` subtraction
/// would leave absolute-size roundoff there, which the triangular
/// conjugation later amplifies by about `e^{8t}`.
pub(crate) fn hit_on(h: &HeightFunction, a: f64, b: f64, work: Window) -> IntegerKernel {
    if a > b {
        return IntegerKernel::zeros(work);
    }
    // rows starting at or below the profile: hit immediately, then run free
    let start_level = h.eval(a);
    let free = heat_kernel(b - a, work);
    let mut sum = IntegerKernel::from_fn(work, |u, v| {
        if Height::Finite(u) <= start_level {
            free.entry(u, v)
        } else {
            0.0
        }
    });

    if a < b {
        let mut cuts = vec![a];
        cuts.extend(h.positions_within(a, b));
        cuts.push(b);
        let mut prefix = proj_above(start_level, work);
        for (i, pair) in cuts.windows(2).enumerate() {
            let (p, q) = (pair[0], pair[1]);
            let level = h.piece_value(0.5 * (p + q));
            let right_level = h.eval(q);
            // first passage inside this stretch or at its right junction:
            // reflected heat above the barrier, plain heat into the caught set
            let scale = (-2.0 * (q - p)).exp();
            let max_offset = (2 * (work.hi - work.lo) + 4) as usize;
            let mut by_offset = Vec::with_capacity(max_offset + 1);
            for d in 0..=max_offset {
                by_offset.push(scale * bessel_i(d as u32, 2.0 * (q - p)));
            }
            let caught = IntegerKernel::from_fn(work, |u, v| match level {
                Height::NegInf => {
                    if Height::Finite(v) <= right_level {
                        by_offset[(u - v).unsigned_abs() as usize]
                    } else {
                        0.0
                    }
                }
                Height::Finite(c) => {
                    if Height::Finite(v) <= right_level || u <= c {
                        by_offset[(u - v).unsigned_abs() as usize]
                    } else {
                        by_offset[(u + v - 2 * c).unsigned_abs() as usize]
                    }
                }
            });
            let tail = heat_kernel(b - q, work);
            sum = sum.add(&prefix.compose(&caught).compose(&tail));
            if i + 2 < cuts.len() {
                let stretch = nohit_constant(level, q - p, work);
                prefix = prefix.compose(&stretch);
                prefix = prefix.compose(&proj_above(right_level, work));
            }
        }
    }
    sum
}

/// Hit kernel on `[a, b]`: free semigroup minus no-hit. Zero when `a > b`;
/// the diagonal projection onto `{<= h(a)}` when `a == b`.
pub fn hit(h: &HeightFunction, a: f64, b: f64, w: Window) -> IntegerKernel {
    hit_buffered(h, a, b, w, DEFAULT_BUFFER)
}

pub fn hit_buffered(h: &HeightFunction, a: f64, b: f64, w: Window, buffer: i64) -> IntegerKernel {
    if a > b {
        return IntegerKernel::zeros(w);
    }
    let work = hit_window(h, a, b, w, buffer);
    restrict(&hit_on(h, a, b, work), w)
}

/// One sampled jump path of the rate-2 walk on `[a, b]` started at `u`:
/// returns the piecewise-constant trajectory as (segment start, level) with
/// an implicit final segment ending at `b`.
pub(crate) fn sample_walk_path(rng: &mut ChaCha8Rng, a: f64, b: f64, u: i64) -> Vec<(f64, i64)> {
    let mut path = vec![(a, u)];
    let mut time = a;
    let mut pos = u;
    loop {
        let wait = -rng.random::<f64>().max(f64::MIN_POSITIVE).ln() / 2.0;
        time += wait;
        if time >= b {
            return path;
        }
        pos += if rng.random::<bool>() { 1 } else { -1 };
        path.push((time, pos));
    }
}

pub(crate) fn path_hits(h: &HeightFunction, path: &[(f64, i64)], b: f64) -> bool {
    for (i, &(start, level)) in path.iter().enumerate() {
        let end = path.get(i + 1).map(|p| p.0).unwrap_or(b);
        if h.sup_over(start, end) >= Height::Finite(level) {
            return true;
        }
    }
    false
}

/// Direct Monte Carlo estimate of the hit-kernel entry
/// `P(tau in [a,b], N(b) = v | N(a) = u)` with its binomial standard error.
/// Deterministic for a given seed.
pub fn mc_walk_oracle(
    h: &HeightFunction,
    a: f64,
    b: f64,
    u: i64,
    v: i64,
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    let batch = 4096;
    let batches = n_samples.div_ceil(batch);
    let hits: u64 = map_batch(ExecMode::Auto, batches, |bi| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(bi as u64);
        let lo = bi * batch;
        let hi = ((bi + 1) * batch).min(n_samples);
        let mut count = 0u64;
        for _ in lo..hi {
            let path = sample_walk_path(&mut rng, a, b, u);
            if path.last().unwrap().1 == v && path_hits(h, &path, b) {
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
