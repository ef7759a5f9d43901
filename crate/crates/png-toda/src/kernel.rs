//! Assembly of the extended kernel and the multipoint matrix kernel whose
//! Fredholm determinant gives the joint height distribution.
//!
//! Every block is built in the triangular-conjugated form
//!
//! ```text
//! K(x_i, .; x_j, .) = -1{x_i < x_j} e^{(x_j - x_i) Delta}
//!                     + e^{-2t nabla - t Delta} P^hit_{x_i - t, x_j + t} e^{2t nabla - t Delta}
//! ```
//!
//! equivalent by the group law to conjugating the scattering transform with
//! the full drift factors, but with factorially decaying triangles in place
//! of exponentially growing ones. The raw drift-conjugated form exists only
//! as a test oracle.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::height::HeightFunction;
use crate::hit::{hit_buffered, hit_on, hit_window, DEFAULT_BUFFER};
use crate::par::{map_batch, ExecMode};
use crate::walk::{drift_kernel, heat_kernel, triangular_conjugator, IntegerKernel, Window};

/// Matrix kernel on the n-fold direct sum of half-line sequence spaces.
/// Block `(i, j)` holds `K(x_i, u + r_i; x_j, v + r_j)` for `u, v = 1..=m`.
#[derive(Clone, Debug)]
pub struct BlockKernel {
    points: Vec<f64>,
    shifts: Vec<i64>,
    m: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl BlockKernel {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn shifts(&self) -> &[i64] {
        &self.shifts
    }

    pub fn block(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.blocks[i * self.points.len() + j]
    }

    /// Entry `K_{ij}(u, v)` with `u, v` one-based block indices.
    pub fn entry(&self, i: usize, j: usize, u: usize, v: usize) -> f64 {
        self.block(i, j)[(u - 1, v - 1)]
    }

    /// The full `n m x n m` truncation, blocks laid out in point order.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.points.len();
        let m = self.m;
        let mut out = DMatrix::zeros(n * m, n * m);
        for i in 0..n {
            for j in 0..n {
                out.view_mut((i * m, j * m), (m, m))
                    .copy_from(self.block(i, j));
            }
        }
        out
    }
}

/// Extended-kernel block for a pair of space points on an explicit height
/// window, in the stable triangular-conjugated form.
pub fn extended_block(
    h: &HeightFunction,
    t: f64,
    xi: f64,
    xj: f64,
    w: Window,
) -> Result<IntegerKernel> {
    extended_block_buffered(h, t, xi, xj, w, DEFAULT_BUFFER)
}

pub fn extended_block_buffered(
    h: &HeightFunction,
    t: f64,
    xi: f64,
    xj: f64,
    w: Window,
    buffer: i64,
) -> Result<IntegerKernel> {
    assert!(t >= 0.0, "extended_block needs t >= 0");
    // room for the factorial triangles of the conjugators above the window
    let up = Window::new(w.lo, w.hi + (2.0 * t).ceil() as i64 + 8);
    let work = hit_window(h, xi - t, xj + t, up, buffer);
    let hit = hit_on(h, xi - t, xj + t, work);
    let left = triangular_conjugator(t, -1, work);
    let right = triangular_conjugator(t, 1, work);
    let mut scattering = left.compose(&hit).compose(&right);
    if xi < xj {
        let free = heat_kernel(xj - xi, work);
        scattering = scattering.sub(&free);
    }
    Ok(IntegerKernel::from_fn(w, |u, v| scattering.entry(u, v)))
}

/// Raw assembly through the drift-kernel conjugators, kept as a test oracle
/// for the group-law equivalence with [`extended_block`].
pub fn extended_block_raw(
    h: &HeightFunction,
    t: f64,
    xi: f64,
    xj: f64,
    w: Window,
    buffer: i64,
) -> Result<IntegerKernel> {
    let pad = buffer + (2.0 * t + xi.abs() + xj.abs() + (xj - xi + 2.0 * t).abs()).ceil() as i64;
    let work = Window::new(w.lo - pad, w.hi + pad);
    let hit = hit_buffered(h, xi - t, xj + t, work, buffer);
    // scattering transform: e^{(x_i - t) Delta} P^hit e^{-(x_j + t) Delta}
    let sa = drift_kernel(0.0, xi - t, work)?;
    let sb = drift_kernel(0.0, -(xj + t), work)?;
    let transform = sa.compose(&hit).compose(&sb);
    // conjugation: e^{-2t nabla - x_i Delta} T e^{2t nabla + x_j Delta}
    let ca = drift_kernel(-t, -xi, work)?;
    let cb = drift_kernel(t, xj, work)?;
    let mut out = ca.compose(&transform).compose(&cb);
    if xi < xj {
        out = out.sub(&heat_kernel(xj - xi, work));
    }
    Ok(IntegerKernel::from_fn(w, |u, v| out.entry(u, v)))
}

/// Builds the multipoint matrix kernel at block size `m`. Blocks are
/// assembled independently (in parallel under the default feature).
pub fn matrix_kernel(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    m: usize,
) -> Result<BlockKernel> {
    matrix_kernel_buffered(h, t, xs, rs, m, DEFAULT_BUFFER, ExecMode::Auto)
}

pub fn matrix_kernel_buffered(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    m: usize,
    buffer: i64,
    mode: ExecMode,
) -> Result<BlockKernel> {
    assert_eq!(xs.len(), rs.len());
    assert!(!xs.is_empty());
    for pair in xs.windows(2) {
        assert!(pair[0] < pair[1], "points must be strictly increasing");
    }
    let n = xs.len();
    let results = map_batch(mode, n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let lo = (rs[i] + 1).min(rs[j] + 1);
        let hi = (rs[i] + m as i64).max(rs[j] + m as i64);
        let kext = extended_block_buffered(h, t, xs[i], xs[j], Window::new(lo, hi), buffer)?;
        let mut block = DMatrix::zeros(m, m);
        for u in 1..=m {
            for v in 1..=m {
                block[(u - 1, v - 1)] = kext.entry(u as i64 + rs[i], v as i64 + rs[j]);
            }
        }
        Ok(block)
    });
    let blocks = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BlockKernel {
        points: xs.to_vec(),
        shifts: rs.to_vec(),
        m,
        blocks,
    })
}

/// Conjugates block `(i, j)` entrywise by the polynomial weights
/// `(1 + u^2)^{i+1} / (1 + v^2)^{j+1}` (one-based point indices). A diagonal
/// similarity: any equal-truncation determinant is unchanged.
pub fn theta_conjugate(k: &BlockKernel) -> BlockKernel {
    theta_weighted(k, 1)
}

/// Inverse of [`theta_conjugate`]; the round trip restores entries to the
/// last unit of precision.
pub fn theta_deconjugate(k: &BlockKernel) -> BlockKernel {
    theta_weighted(k, -1)
}

fn theta_weighted(k: &BlockKernel, direction: i32) -> BlockKernel {
    let n = k.points.len();
    let m = k.m;
    let theta =
        |i: usize, u: usize| (1.0 + (u as f64) * (u as f64)).powi(direction * (i as i32 + 1));
    let blocks = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            DMatrix::from_fn(m, m, |a, b| {
                k.block(i, j)[(a, b)] * theta(i, a + 1) / theta(j, b + 1)
            })
        })
        .collect();
    BlockKernel {
        points: k.points.clone(),
        shifts: k.shifts.clone(),
        m,
        blocks,
    }
}
