//! Determinants, corner resolvents, and the height CDF.
//!
//! The joint CDF `P(h(t, x_i) <= r_i for all i)` is the Fredholm determinant
//! `det(I - K)` of the multipoint matrix kernel, evaluated by pivoted LU on
//! an `n m x n m` truncation. Convergence is established by doubling the
//! block size (and window buffers jointly) until the value moves less than
//! the tolerance on two consecutive doublings. Below the deterministic floor
//! (the running maximum of the initial profile over the backward cone) the
//! CDF is zero by construction and no determinant is evaluated; to probe the
//! truncated determinant in that regime anyway, build the kernel with
//! [`matrix_kernel`](crate::kernel::matrix_kernel) and call [`fredholm_det`]
//! directly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::height::{Height, HeightFunction};
use crate::kernel::{matrix_kernel_buffered, BlockKernel};
use crate::par::ExecMode;

/// Adaptive evaluation settings. `m0`/`buffer0` are the starting block size
/// and window buffer; both double together up to `max_doublings` times.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub m0: usize,
    pub buffer0: i64,
    pub tol: f64,
    pub max_doublings: usize,
    pub mode: ExecMode,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            m0: 60,
            buffer0: 40,
            tol: 1e-8,
            max_doublings: 4,
            mode: ExecMode::Auto,
        }
    }
}

/// Outcome of a determinant evaluation.
#[derive(Clone, Debug)]
pub struct FredholmResult {
    /// `det(I - K)` at the final truncation.
    pub value: f64,
    /// Corner resolvent: the n x n matrix `(I - K)^{-1}` sampled at block
    /// entry (1, 1). Absent when `I - K` is numerically singular.
    pub q: Option<DMatrix<f64>>,
    /// Final per-block truncation size.
    pub window_size: usize,
    pub converged: bool,
    /// Magnitude of the last doubling delta (heuristic tail size).
    pub tail_estimate: f64,
}

/// Determinant and corner resolvent of `I - K` at the kernel's own
/// truncation, no adaptivity.
pub fn fredholm_det(k: &BlockKernel) -> FredholmResult {
    let n = k.n_points();
    let m = k.block_size();
    let full = k.assemble();
    let dim = n * m;
    let mut i_minus_k = DMatrix::<f64>::identity(dim, dim);
    i_minus_k -= &full;
    let lu = i_minus_k.lu();
    let value = lu.determinant();

    // Q_ij = delta_ij + [(I-K)^{-1} K](block i, block j) at inner entry (1,1):
    // solve (I-K) y = K e_col for the n columns that matter.
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut singular = false;
    for j in 0..n {
        let col = full.column(j * m).clone_owned();
        match lu.solve(&col) {
            Some(y) => {
                for i in 0..n {
                    q[(i, j)] += y[i * m];
                }
            }
            None => {
                singular = true;
                break;
            }
        }
    }
    FredholmResult {
        value,
        q: if singular { None } else { Some(q) },
        window_size: m,
        converged: true,
        tail_estimate: 0.0,
    }
}

/// Deterministic floor levels `r_0(t, x_i)` for the given points.
pub fn floor_levels(h: &HeightFunction, t: f64, xs: &[f64]) -> Vec<Height> {
    xs.iter().map(|&x| h.running_max(t, x)).collect()
}

fn below_floor(h: &HeightFunction, t: f64, xs: &[f64], rs: &[i64]) -> bool {
    floor_levels(h, t, xs)
        .iter()
        .zip(rs)
        .any(|(floor, &r)| Height::Finite(r) < *floor)
}

/// Joint CDF at a fixed truncation (block size `m`, buffer), no adaptivity.
/// Intended for finite-difference stencils, where every evaluation must share
/// one resolution so the truncation error stays smooth in the parameters.
pub fn png_cdf_fixed(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    m: usize,
    buffer: i64,
) -> Result<FredholmResult> {
    if below_floor(h, t, xs, rs) {
        return Ok(FredholmResult {
            value: 0.0,
            q: None,
            window_size: m,
            converged: true,
            tail_estimate: 0.0,
        });
    }
    let k = matrix_kernel_buffered(h, t, xs, rs, m, buffer, ExecMode::Auto)?;
    Ok(fredholm_det(&k))
}

/// Joint CDF `P(h(t, x_i) <= r_i for all i)` with adaptive truncation.
pub fn png_cdf(h: &HeightFunction, t: f64, xs: &[f64], rs: &[i64]) -> Result<FredholmResult> {
    png_cdf_with(h, t, xs, rs, &Settings::default())
}

pub fn png_cdf_with(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    settings: &Settings,
) -> Result<FredholmResult> {
    assert_eq!(xs.len(), rs.len());
    if t < 0.0 {
        return Err(Error::Precondition("time must be nonnegative".into()));
    }
    for pair in xs.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::Precondition(
                "evaluation points must be strictly increasing".into(),
            ));
        }
    }
    if below_floor(h, t, xs, rs) {
        return Ok(FredholmResult {
            value: 0.0,
            q: None,
            window_size: 0,
            converged: true,
            tail_estimate: 0.0,
        });
    }

    let mut m = settings.m0;
    let mut buffer = settings.buffer0;
    let k = matrix_kernel_buffered(h, t, xs, rs, m, buffer, settings.mode)?;
    let mut result = fredholm_det(&k);
    let mut small_deltas = 0usize;
    let mut last_delta = f64::INFINITY;
    for _ in 0..settings.max_doublings {
        let m2 = m * 2;
        let buffer2 = buffer * 2;
        let k2 = matrix_kernel_buffered(h, t, xs, rs, m2, buffer2, settings.mode)?;
        let next = fredholm_det(&k2);
        last_delta = (next.value - result.value).abs();
        result = next;
        m = m2;
        buffer = buffer2;
        if last_delta < settings.tol {
            small_deltas += 1;
            if small_deltas >= 2 {
                result.converged = true;
                result.tail_estimate = last_delta;
                return Ok(result);
            }
        } else {
            small_deltas = 0;
        }
    }
    // Accept after one small doubling if the budget ran out, otherwise flag.
    result.converged = small_deltas >= 1;
    result.tail_estimate = last_delta;
    if !result.converged {
        return Err(Error::NoConvergence {
            delta: last_delta,
            m,
        });
    }
    Ok(result)
}
