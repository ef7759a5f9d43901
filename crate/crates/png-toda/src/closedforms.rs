//! Narrow-wedge and flat closed forms, orthogonal polynomials on the unit
//! circle, and the discrete Painleve II / Ablowitz-Ladik checks.
//!
//! Everything here is built from the circle weight `e^{s(z + 1/z)}`, whose
//! Fourier moments are the modified Bessel values `I_k(2s)`.
//!
//! Conventions. `toeplitz_det(s, n)` is the `n x n` determinant
//! `det(I_{i-j}(2s))`. The Verblunsky coefficient is `alpha_r =
//! -pi_{r+1}(0; s)`, the negated constant coefficient of the monic
//! degree-(r+1) orthogonal polynomial; with this sign (no extra twist) the
//! computed sequence satisfies the discrete Painleve II recurrence
//! `-s (1 - alpha_r^2)(alpha_{r+1} + alpha_{r-1}) = (r+1) alpha_r` and the
//! Ablowitz-Ladik flow, which the tests pin down. The signs alternate,
//! starting from `alpha_0 = I_1(2s)/I_0(2s) > 0`.
//!
//! The flat closed form is stated in time units: the time-`t` flat CDF at
//! level `r` equals `e^{-s^2/2} det(I_{i-j}(2s) - I_{i+j+2}(2s))_{r x r}`
//! with circle parameter `s = 2t` (so the prefactor is `e^{-2t^2}`, matching
//! the `r = 0` boundary value).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::walk::{bessel_i, bessel_j};

/// Verblunsky coefficients `alpha_0..alpha_R` of the circle weight with
/// parameter `s`.
#[derive(Clone, Debug)]
pub struct VerblunskySequence {
    pub s: f64,
    pub alphas: Vec<f64>,
}

fn det(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.lu().determinant()
}

/// Toeplitz determinant `det(I_{i-j}(2s))` of the given matrix size.
pub fn toeplitz_det(s: f64, size: usize) -> f64 {
    let m = DMatrix::from_fn(size, size, |i, j| {
        bessel_i((i as i64 - j as i64).unsigned_abs() as u32, 2.0 * s)
    });
    det(m)
}

/// Narrow-wedge one-point CDF at level `r` and cone parameter `s`:
/// `e^{-s^2} det(I_{i-j}(2s))_{r x r}` (an empty determinant for `r = 0`).
/// Off the space axis this applies with `s = sqrt(t^2 - x^2)`.
pub fn narrow_wedge_toeplitz(s: f64, r: usize) -> f64 {
    (-s * s).exp() * toeplitz_det(s, r)
}

/// Flat one-point CDF at level `r` and time `t`:
/// `e^{-2t^2} det(I_{i-j}(4t) - I_{i+j+2}(4t))_{r x r}`.
pub fn flat_toeplitz_hankel(t: f64, r: usize) -> f64 {
    let s = 2.0 * t;
    (-0.5 * s * s).exp() * flat_th_det(s, r)
}

/// The Toeplitz-plus-Hankel determinant family at circle parameter `s`.
pub fn flat_th_det(s: f64, size: usize) -> f64 {
    let m = DMatrix::from_fn(size, size, |i, j| {
        bessel_i((i as i64 - j as i64).unsigned_abs() as u32, 2.0 * s)
            - bessel_i((i + j + 2) as u32, 2.0 * s)
    });
    det(m)
}

/// Discrete Bessel kernel in its integrable form,
/// `s (J_{u-1} J_v - J_u J_{v-1}) / (u - v)` at argument `2s`, with the
/// diagonal evaluated through the convergent bilinear series.
pub fn discrete_bessel_kernel(s: f64, u: i64, v: i64) -> f64 {
    if u != v {
        let ju1 = bessel_j(u - 1, 2.0 * s);
        let jv = bessel_j(v, 2.0 * s);
        let ju = bessel_j(u, 2.0 * s);
        let jv1 = bessel_j(v - 1, 2.0 * s);
        s * (ju1 * jv - ju * jv1) / (u - v) as f64
    } else {
        discrete_bessel_series(s, u, v)
    }
}

/// The bilinear series `sum_{l <= 0} J_{u-l}(2s) J_{v-l}(2s)`, truncated
/// adaptively; the independent route to [`discrete_bessel_kernel`].
pub fn discrete_bessel_series(s: f64, u: i64, v: i64) -> f64 {
    let mut sum = 0.0;
    let mut l = 0i64;
    let mut tiny_run = 0;
    loop {
        let term = bessel_j(u - l, 2.0 * s) * bessel_j(v - l, 2.0 * s);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            tiny_run += 1;
            if tiny_run > 4 {
                return sum;
            }
        } else {
            tiny_run = 0;
        }
        l -= 1;
        if l < -4000 {
            return sum;
        }
    }
}

/// Determinant `det(I - B_s)` truncated on indices `r+1 ..= r+size`; equals
/// the narrow-wedge CDF at level `r` once the truncation saturates.
pub fn discrete_bessel_det(s: f64, r: i64, size: usize) -> f64 {
    let m = DMatrix::from_fn(size, size, |a, b| {
        let u = r + 1 + a as i64;
        let v = r + 1 + b as i64;
        let k = discrete_bessel_kernel(s, u, v);
        if a == b {
            1.0 - k
        } else {
            -k
        }
    });
    det(m)
}

/// Constant coefficient `pi_k(0; s)` of the monic degree-`k` orthogonal
/// polynomial on the circle. Solves the k x k Toeplitz moment system.
fn monic_constant_coefficient(s: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let a = DMatrix::from_fn(k, k, |j, i| {
        bessel_i((j as i64 - i as i64).unsigned_abs() as u32, 2.0 * s)
    });
    let b = nalgebra::DVector::from_fn(k, |j, _| {
        -bessel_i((j as i64 - k as i64).unsigned_abs() as u32, 2.0 * s)
    });
    let solved = a
        .lu()
        .solve(&b)
        .ok_or(Error::IllConditioned { index: k, s })?;
    Ok(solved[0])
}

/// Verblunsky coefficients `alpha_r = -pi_{r+1}(0; s)` for `r = 0..=R`,
/// validated against the determinant magnitude identity
/// `1 - alpha_r^2 = D_{r+1} D_{r-1} / D_r^2` (sizes r+2, r, r+1 here).
pub fn verblunsky(s: f64, r_max: usize) -> Result<VerblunskySequence> {
    assert!(s > 0.0, "verblunsky needs s > 0");
    let mut alphas = Vec::with_capacity(r_max + 1);
    let mut dets = Vec::with_capacity(r_max + 3);
    for size in 0..=(r_max + 2) {
        dets.push(toeplitz_det(s, size));
    }
    for r in 0..=r_max {
        let alpha = -monic_constant_coefficient(s, r + 1)?;
        if alpha.abs() >= 1.0 {
            return Err(Error::IllConditioned { index: r, s });
        }
        let ratio = dets[r + 2] * dets[r] / (dets[r + 1] * dets[r + 1]);
        if dets[r + 1] <= 0.0 || ((1.0 - alpha * alpha) - ratio).abs() > 1e-8 {
            return Err(Error::IllConditioned { index: r, s });
        }
        alphas.push(alpha);
    }
    Ok(VerblunskySequence { s, alphas })
}

/// Absolute residual of the discrete Painleve II recurrence at index `r`.
pub fn dpii_residual(s: f64, r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::Domain(
            "discrete Painleve II needs r >= 1 (alpha_{r-1} must exist)".into(),
        ));
    }
    let seq = verblunsky(s, r + 1)?;
    let a = &seq.alphas;
    let lhs = -s * (1.0 - a[r] * a[r]) * (a[r + 1] + a[r - 1]);
    let rhs = (r as f64 + 1.0) * a[r];
    Ok((lhs - rhs).abs())
}

/// Ablowitz-Ladik flow residual at index `r` by central differences in `s`,
/// with a step-halving order estimate.
pub struct AlResidual {
    pub residual: f64,
    pub residual_half: f64,
    pub step: f64,
    pub richardson_order: f64,
}

pub fn ablowitz_ladik_residual(s: f64, r: usize, delta: f64) -> Result<AlResidual> {
    if r == 0 {
        return Err(Error::Domain(
            "Ablowitz-Ladik check needs r >= 1 (alpha_{r-1} must exist)".into(),
        ));
    }
    let here = verblunsky(s, r + 1)?;
    let eval = |d: f64| -> Result<f64> {
        let plus = verblunsky(s + d, r)?;
        let minus = verblunsky(s - d, r)?;
        let ds_alpha = (plus.alphas[r] - minus.alphas[r]) / (2.0 * d);
        let a = &here.alphas;
        let rhs = (1.0 - a[r] * a[r]) * (a[r + 1] - a[r - 1]);
        Ok(ds_alpha - rhs)
    };
    let full = eval(delta)?;
    let half = eval(delta / 2.0)?;
    Ok(AlResidual {
        residual: full.abs(),
        residual_half: half.abs(),
        step: delta,
        richardson_order: (full.abs() / half.abs().max(1e-300)).log2(),
    })
}

/// Deviation in the flat ratio identity
/// `TH_r(s)/TH_{r+1}(s) = (1 - pi_{2r+2}(0; s)) D_{2r+1}/D_{2r+2}`
/// relating the Toeplitz-plus-Hankel family to the circle polynomials
/// (`D` indices are matrix sizes).
pub fn flat_opuc_ratio(s: f64, r: usize) -> Result<f64> {
    let lhs = flat_th_det(s, r) / flat_th_det(s, r + 1);
    let k = 2 * r + 2;
    let pi0 = monic_constant_coefficient(s, k)?;
    let norm = toeplitz_det(s, k + 1) / toeplitz_det(s, k);
    if norm <= 0.0 {
        return Err(Error::IllConditioned { index: k, s });
    }
    let rhs = (1.0 - pi0) / norm;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}, diff {:e}", (a - b).abs());
    }

    // Frozen with 40-digit arithmetic from the Toeplitz/Hankel definitions.
    const NW_S1_R3: f64 = 0.998_740_715_924_251_3;
    const NW_S2_R3: f64 = 0.877_863_491_047_544_7;
    const FLAT_T05_R1: f64 = 0.964_770_020_806_407_4;
    const FLAT_T1_R2: f64 = 0.946_642_379_862_230_4;

    #[test]
    fn narrow_wedge_base_cases() {
        close(narrow_wedge_toeplitz(1.0, 0), (-1.0f64).exp(), 1e-15);
        // r = 1 is the 1x1 determinant I_0(2s)
        close(
            narrow_wedge_toeplitz(1.0, 1),
            (-1.0f64).exp() * bessel_i(0, 2.0),
            1e-15,
        );
        close(narrow_wedge_toeplitz(1.0, 3), NW_S1_R3, 1e-12);
        close(narrow_wedge_toeplitz(2.0, 3), NW_S2_R3, 1e-12);
    }

    #[test]
    fn flat_base_cases() {
        close(flat_toeplitz_hankel(0.5, 0), (-0.5f64).exp(), 1e-15);
        close(flat_toeplitz_hankel(0.5, 1), FLAT_T05_R1, 1e-12);
        close(flat_toeplitz_hankel(1.0, 2), FLAT_T1_R2, 1e-12);
        // r = 1 in closed form: e^{-2t^2} (I_0(4t) - I_2(4t))
        let t = 0.5f64;
        close(
            flat_toeplitz_hankel(t, 1),
            (-2.0 * t * t).exp() * (bessel_i(0, 4.0 * t) - bessel_i(2, 4.0 * t)),
            1e-15,
        );
    }

    #[test]
    fn toeplitz_determinants_positive() {
        for s in [0.5, 1.0, 2.0, 3.0] {
            for size in 1..=10 {
                assert!(toeplitz_det(s, size) > 0.0, "D at s={s}, size {size}");
            }
        }
    }

    #[test]
    fn discrete_bessel_forms_agree() {
        for (u, v) in [(2i64, 3i64), (1, 1), (4, 2), (-1, 5), (3, 3)] {
            let a = discrete_bessel_kernel(1.0, u, v);
            let b = discrete_bessel_series(1.0, u, v);
            close(a, b, 1e-11);
        }
        // frozen: B_1(2,3) and the diagonal B_1(2,2)
        close(
            discrete_bessel_kernel(1.0, 2, 3),
            0.050_127_080_984_469_57,
            1e-12,
        );
        close(
            discrete_bessel_kernel(1.0, 2, 2),
            0.142_324_955_625_562_65,
            1e-12,
        );
    }

    #[test]
    fn discrete_bessel_det_matches_toeplitz() {
        for (s, r) in [(1.0, 0i64), (1.0, 2), (0.5, 1), (2.0, 4)] {
            let fred = discrete_bessel_det(s, r, 40);
            let closed = narrow_wedge_toeplitz(s, r as usize);
            close(fred, closed, 1e-8);
        }
    }

    #[test]
    fn small_s_kernel_vanishes() {
        for u in 1..4 {
            assert!(discrete_bessel_kernel(1e-6, u, u).abs() < 1e-11);
        }
    }

    #[test]
    fn verblunsky_signs_and_magnitudes() {
        let seq = verblunsky(1.0, 5).unwrap();
        // alpha_0 = I_1/I_0 > 0, alternating after that
        close(seq.alphas[0], bessel_i(1, 2.0) / bessel_i(0, 2.0), 1e-12);
        for (r, a) in seq.alphas.iter().enumerate() {
            assert!(a.abs() < 1.0);
            let expected_sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            assert!(a * expected_sign > 0.0, "alpha_{r} = {a}");
        }
    }

    #[test]
    fn verblunsky_vanishes_with_s() {
        let seq = verblunsky(1e-4, 3).unwrap();
        for a in &seq.alphas {
            assert!(a.abs() < 1e-3);
        }
    }

    #[test]
    fn dpii_residuals_small() {
        for s in [0.5, 1.0, 2.0] {
            for r in 1..=6 {
                let res = dpii_residual(s, r).unwrap();
                assert!(res <= 1e-9, "s={s} r={r}: {res:e}");
            }
        }
    }

    #[test]
    fn ablowitz_ladik_second_order() {
        let rep = ablowitz_ladik_residual(1.0, 2, 1e-2).unwrap();
        assert!(
            rep.richardson_order > 1.5 && rep.richardson_order < 2.5,
            "order {}",
            rep.richardson_order
        );
        assert!(rep.residual_half < 1e-5);
    }

    #[test]
    fn flat_opuc_ratio_small() {
        for (s, r) in [(0.8, 0usize), (0.8, 1), (1.2, 2)] {
            let dev = flat_opuc_ratio(s, r).unwrap();
            assert!(dev <= 1e-7, "s={s} r={r}: {dev:e}");
        }
    }
}
