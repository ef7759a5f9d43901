//! Numerical verification of the wave-equation structure carried by the
//! determinants, and closed-form pinned-path data at time zero.
//!
//! Lattice directions are exact integer shifts of the level vector; only the
//! characteristic directions use finite differences. With the sum of the
//! space points written `xb`, the two characteristic derivatives are
//! `d_eta = (d_t + d_xb)/2` and `d_zeta = (d_t - d_xb)/2`, realized by
//! moving all space points together with time. Every stencil evaluation
//! shares one fixed truncation so the truncation error stays smooth and
//! cancels in the differences.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fredholm::png_cdf_fixed;
use crate::height::{Height, HeightFunction};
use crate::hit::{composition_window, nohit_on};
use crate::kernel::matrix_kernel_buffered;
use crate::par::ExecMode;
use crate::walk::{IntegerKernel, Window};

/// Truncation shared by every evaluation inside one finite-difference check.
#[derive(Clone, Copy, Debug)]
pub struct Resolution {
    pub m: usize,
    pub buffer: i64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { m: 60, buffer: 40 }
    }
}

/// A finite-difference residual with its step-halving order estimate.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub residual: f64,
    pub residual_half: f64,
    pub step: f64,
    /// log2 of residual(step) / residual(step/2); ~2 for second order.
    pub richardson_order: f64,
    pub location: Vec<f64>,
}

fn cdf_value(h: &HeightFunction, t: f64, xs: &[f64], rs: &[i64], res: Resolution) -> Result<f64> {
    Ok(png_cdf_fixed(h, t, xs, rs, res.m, res.buffer)?.value)
}

fn log_cdf(h: &HeightFunction, t: f64, xs: &[f64], rs: &[i64], res: Resolution) -> Result<f64> {
    let f = cdf_value(h, t, xs, rs, res)?;
    if f <= 0.0 {
        return Err(Error::Domain(format!(
            "CDF not positive ({f}) inside a stencil at t={t}"
        )));
    }
    Ok(f.ln())
}

/// Residual of the scalar wave identity
/// `(d_t^2 - d_x^2) log F_r / 4 = F_{r+1} F_{r-1} / F_r^2 - 1`
/// by second-order central differences, with a halving study.
pub fn toda_scalar_residual(
    h: &HeightFunction,
    t: f64,
    x: f64,
    r: i64,
    delta: f64,
    res: Resolution,
) -> Result<ResidualReport> {
    let floor = h.running_max(t, x);
    if Height::Finite(r) <= floor {
        return Err(Error::Domain(format!(
            "need r > floor level at (t={t}, x={x}), got r={r}, floor {floor}"
        )));
    }
    if t <= 2.0 * delta {
        return Err(Error::Domain("need t > 2 delta".into()));
    }
    let eval = |d: f64| -> Result<f64> {
        let at = |tt: f64, xx: f64, rr: i64| log_cdf(h, tt, &[xx], &[rr], res);
        let center = at(t, x, r)?;
        let dtt = (at(t + d, x, r)? - 2.0 * center + at(t - d, x, r)?) / (d * d);
        let dxx = (at(t, x + d, r)? - 2.0 * center + at(t, x - d, r)?) / (d * d);
        let f = cdf_value(h, t, &[x], &[r], res)?;
        let fp = cdf_value(h, t, &[x], &[r + 1], res)?;
        let fm = cdf_value(h, t, &[x], &[r - 1], res)?;
        Ok(0.25 * (dtt - dxx) - (fp * fm / (f * f) - 1.0))
    };
    let full = eval(delta)?;
    let half = eval(delta / 2.0)?;
    Ok(ResidualReport {
        residual: full.abs(),
        residual_half: half.abs(),
        step: delta,
        richardson_order: (full.abs() / half.abs().max(1e-300)).log2(),
        location: vec![t, x, r as f64],
    })
}

/// Residual of the lattice form on flat data, where the space derivative
/// drops: with `g_r = log F_r - log F_{r-1}` and doubled time,
/// `g_r'' = e^{g_{r+1} - g_r} - e^{g_r - g_{r-1}}`; the exponentials are the
/// determinant ratios `F_{r+1} F_{r-1} / F_r^2` and `F_r F_{r-2} / F_{r-1}^2`.
pub fn toda_1d_residual(t: f64, r: i64, delta: f64, res: Resolution) -> Result<ResidualReport> {
    if r < 1 {
        return Err(Error::Domain("lattice check needs r >= 1".into()));
    }
    let h = HeightFunction::flat();
    let x = 0.0;
    let eval = |d: f64| -> Result<f64> {
        let g = |tt: f64| -> Result<f64> {
            Ok(log_cdf(&h, tt, &[x], &[r], res)? - log_cdf(&h, tt, &[x], &[r - 1], res)?)
        };
        let gtt = (g(t + d)? - 2.0 * g(t)? + g(t - d)?) / (d * d);
        let f = cdf_value(&h, t, &[x], &[r], res)?;
        let fp = cdf_value(&h, t, &[x], &[r + 1], res)?;
        let fm = cdf_value(&h, t, &[x], &[r - 1], res)?;
        let fmm = if r >= 2 {
            cdf_value(&h, t, &[x], &[r - 2], res)?
        } else {
            0.0
        };
        let up = fp * fm / (f * f);
        let down = f * fmm / (fm * fm);
        Ok(0.25 * gtt - (up - down))
    };
    let full = eval(delta)?;
    let half = eval(delta / 2.0)?;
    Ok(ResidualReport {
        residual: full.abs(),
        residual_half: half.abs(),
        step: delta,
        richardson_order: (full.abs() / half.abs().max(1e-300)).log2(),
        location: vec![t, r as f64],
    })
}

fn corner_resolvent(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    shift: i64,
    res: Resolution,
) -> Result<DMatrix<f64>> {
    let shifted: Vec<i64> = rs.iter().map(|&r| r + shift).collect();
    let out = png_cdf_fixed(h, t, xs, &shifted, res.m, res.buffer)?;
    out.q
        .ok_or_else(|| Error::Domain("corner resolvent singular".into()))
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("matrix inversion failed in a residual check".into()))
}

/// Residual of the matrix wave identity `d_zeta V_r + U_{r+1} - U_r = 0`
/// with `U_r = Q_r Q_{r-1}^{-1}` and `V_r = -d_eta Q_r Q_r^{-1}`, measured in
/// the max entry norm.
pub fn nonabelian_residual(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    delta: f64,
    res: Resolution,
) -> Result<ResidualReport> {
    for (&x, &r) in xs.iter().zip(rs) {
        if Height::Finite(r) <= h.running_max(t, x) {
            return Err(Error::Domain(format!(
                "need r > floor level at x = {x}, got {r}"
            )));
        }
    }
    let q_at = |tt: f64, shift_x: f64, shift_r: i64| -> Result<DMatrix<f64>> {
        let moved: Vec<f64> = xs.iter().map(|&x| x + shift_x).collect();
        corner_resolvent(h, tt, &moved, rs, shift_r, res)
    };
    // d_eta Q at a base displaced by e along the zeta curve (t+e, xs-e)
    let v_at = |e: f64, d: f64| -> Result<DMatrix<f64>> {
        let plus = q_at(t + e + d, -e + d, 0)?;
        let minus = q_at(t + e - d, -e - d, 0)?;
        let deta = (plus - minus) / (4.0 * d);
        let q = q_at(t + e, -e, 0)?;
        Ok(-deta * invert(&q)?)
    };
    let eval = |d: f64| -> Result<f64> {
        let dzeta_v = (v_at(d, d)? - v_at(-d, d)?) / (4.0 * d);
        let q0 = q_at(t, 0.0, 0)?;
        let q_up = q_at(t, 0.0, 1)?;
        let q_dn = q_at(t, 0.0, -1)?;
        let u_up = &q_up * invert(&q0)?;
        let u = &q0 * invert(&q_dn)?;
        let res_mat = dzeta_v + u_up - u;
        Ok(res_mat.amax())
    };
    let full = eval(delta)?;
    let half = eval(delta / 2.0)?;
    Ok(ResidualReport {
        residual: full,
        residual_half: half,
        step: delta,
        richardson_order: (full / half.max(1e-300)).log2(),
        location: std::iter::once(t)
            .chain(xs.iter().copied())
            .chain(rs.iter().map(|&r| r as f64))
            .collect(),
    })
}

/// `|F(r+1)/F(r) - det Q_r|` at one parameter point.
pub fn ratio_identity_check(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    res: Resolution,
) -> Result<f64> {
    let base = png_cdf_fixed(h, t, xs, rs, res.m, res.buffer)?;
    let shifted: Vec<i64> = rs.iter().map(|&r| r + 1).collect();
    let up = png_cdf_fixed(h, t, xs, &shifted, res.m, res.buffer)?;
    let q = base
        .q
        .ok_or_else(|| Error::Domain("corner resolvent singular".into()))?;
    let det_q = q.lu().determinant();
    Ok((up.value / base.value - det_q).abs())
}

/// Max-entry residual of the lattice evolution identities
/// `d_eta K_r(u,v) = K_{r-1}(u+1,v) - K_r(u+1,v)` and
/// `d_zeta K_r(u,v) = K_{r-1}(u,v+1) - K_r(u,v+1)` over an interior
/// sub-window `u, v <= probe`.
pub fn kernel_evolution_residual(
    h: &HeightFunction,
    t: f64,
    xs: &[f64],
    rs: &[i64],
    delta: f64,
    probe: usize,
    res: Resolution,
) -> Result<ResidualReport> {
    let build = |tt: f64, shift_x: f64, shift_r: i64| -> Result<crate::kernel::BlockKernel> {
        let moved: Vec<f64> = xs.iter().map(|&x| x + shift_x).collect();
        let shifted: Vec<i64> = rs.iter().map(|&r| r + shift_r).collect();
        matrix_kernel_buffered(h, tt, &moved, &shifted, res.m, res.buffer, ExecMode::Auto)
    };
    assert!(probe < res.m, "probe window exceeds the truncation");
    let eval = |d: f64| -> Result<f64> {
        let k = build(t, 0.0, 0)?;
        let k_dn = build(t, 0.0, -1)?;
        let eta_p = build(t + d, d, 0)?;
        let eta_m = build(t - d, -d, 0)?;
        let zeta_p = build(t + d, -d, 0)?;
        let zeta_m = build(t - d, d, 0)?;
        let n = xs.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for u in 1..=probe {
                    for v in 1..=probe {
                        let deta = (eta_p.entry(i, j, u, v) - eta_m.entry(i, j, u, v)) / (4.0 * d);
                        let lhs_eta = deta - (k_dn.entry(i, j, u + 1, v) - k.entry(i, j, u + 1, v));
                        let dzeta =
                            (zeta_p.entry(i, j, u, v) - zeta_m.entry(i, j, u, v)) / (4.0 * d);
                        let lhs_zeta =
                            dzeta - (k_dn.entry(i, j, u, v + 1) - k.entry(i, j, u, v + 1));
                        worst = worst.max(lhs_eta.abs()).max(lhs_zeta.abs());
                    }
                }
            }
        }
        Ok(worst)
    };
    let full = eval(delta)?;
    let half = eval(delta / 2.0)?;
    Ok(ResidualReport {
        residual: full,
        residual_half: half,
        step: delta,
        richardson_order: (full / half.max(1e-300)).log2(),
        location: std::iter::once(t).chain(xs.iter().copied()).collect(),
    })
}

// ---------------------------------------------------------------------------
// Pinned-path matrices at time zero
// ---------------------------------------------------------------------------

/// Closed-form time-zero data: strictly upper triangular matrices of pinned
/// walk probabilities between the constraint points, with the walk held at
/// or above (or strictly above) the initial profile and capped at the
/// intermediate levels.
#[derive(Clone, Debug)]
pub struct PinnedPathMatrices {
    /// Pinned `r_i -> r_j`, at or above the profile, strictly below the caps.
    pub geq_lt: DMatrix<f64>,
    /// Pinned `r_i -> r_j`, at or above the profile, weakly below the caps.
    pub geq_leq: DMatrix<f64>,
    /// Pinned `r_i -> r_j`, strictly above the profile, weakly below caps.
    pub gt_leq: DMatrix<f64>,
    /// Pinned `r_i + 1 -> r_j`, at or above with at least one touch of the
    /// profile, weakly below the caps.
    pub touch: DMatrix<f64>,
    /// Same, restricted to a cap touch occurring at or after the first
    /// profile touch.
    pub touch_ordered: DMatrix<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FloorMode {
    AtOrAbove,
    StrictlyAbove,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CapMode {
    Strict,
    Weak,
}

fn cap_level(cap: i64, mode: CapMode) -> i64 {
    match mode {
        CapMode::Strict => cap - 1,
        CapMode::Weak => cap,
    }
}

/// Pinned-path probability from `(x_i, u)` to `(x_j, v)` staying above the
/// profile in the given sense, with `N(x_l) <= cap_l` at the interior
/// constraint points.
#[allow(clippy::too_many_arguments)]
fn pinned_prob(
    h: &HeightFunction,
    xs: &[f64],
    i: usize,
    j: usize,
    u: i64,
    v: i64,
    caps: &[i64],
    floor: FloorMode,
    cap_mode: CapMode,
) -> f64 {
    debug_assert!(i < j);
    let barrier = match floor {
        FloorMode::AtOrAbove => h.lower_by(1),
        FloorMode::StrictlyAbove => h.clone(),
    };
    let hi_need = caps[i..=j].iter().copied().chain([u, v]).max().unwrap_or(0);
    let span = Window::new(u.min(v).min(0), hi_need);
    let work = composition_window(&barrier, xs[i], xs[j], span, 40);
    let mut acc = nohit_on(&barrier, xs[i], xs[i], work);
    for l in i..j {
        let seg = nohit_on(&barrier, xs[l], xs[l + 1], work);
        acc = acc.compose(&seg);
        if l + 1 < j {
            let capped = cap_projection(cap_level(caps[l + 1], cap_mode), work);
            acc = acc.compose(&capped);
        }
    }
    acc.entry(u, v)
}

fn cap_projection(level: i64, w: Window) -> IntegerKernel {
    IntegerKernel::from_fn(w, |a, b| if a == b && a <= level { 1.0 } else { 0.0 })
}

/// Builds the full set of pinned matrices for strictly increasing points
/// `xs` with levels `rs`, all at time zero. Needs `r_i >= h(x_i)`.
pub fn pinned_matrices_t0(
    h: &HeightFunction,
    xs: &[f64],
    rs: &[i64],
) -> Result<PinnedPathMatrices> {
    let n = xs.len();
    assert_eq!(n, rs.len());
    for (&x, &r) in xs.iter().zip(rs) {
        if Height::Finite(r) < h.eval(x) {
            return Err(Error::Precondition(format!(
                "pinned matrices need r >= profile value at x = {x}"
            )));
        }
    }
    let entry = |i: usize, j: usize, u: i64, v: i64, floor: FloorMode, cap: CapMode| -> f64 {
        pinned_prob(h, xs, i, j, u, v, rs, floor, cap)
    };
    let build = |f: &dyn Fn(usize, usize) -> f64| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i < j { f(i, j) } else { 0.0 })
    };
    let geq_lt = build(&|i, j| entry(i, j, rs[i], rs[j], FloorMode::AtOrAbove, CapMode::Strict));
    let geq_leq = build(&|i, j| entry(i, j, rs[i], rs[j], FloorMode::AtOrAbove, CapMode::Weak));
    let gt_leq = build(&|i, j| entry(i, j, rs[i], rs[j], FloorMode::StrictlyAbove, CapMode::Weak));
    // touch = (at or above) - (strictly above), started one level up
    let touch = build(&|i, j| {
        entry(i, j, rs[i] + 1, rs[j], FloorMode::AtOrAbove, CapMode::Weak)
            - entry(
                i,
                j,
                rs[i] + 1,
                rs[j],
                FloorMode::StrictlyAbove,
                CapMode::Weak,
            )
    });
    // ordered touch: decompose over the last cap touch at x_k; the first
    // factor must touch the profile no later than x_k, the second stays
    // strictly below the caps afterwards
    let touch_ordered = build(&|i, j| {
        let mut total = 0.0;
        for k in (i + 1)..j {
            let first_weak = pinned_prob(
                h,
                &xs[i..=k],
                0,
                k - i,
                rs[i] + 1,
                rs[k],
                &rs[i..=k],
                FloorMode::AtOrAbove,
                CapMode::Weak,
            ) - pinned_prob(
                h,
                &xs[i..=k],
                0,
                k - i,
                rs[i] + 1,
                rs[k],
                &rs[i..=k],
                FloorMode::StrictlyAbove,
                CapMode::Weak,
            );
            let second = pinned_prob(
                h,
                &xs[k..=j],
                0,
                j - k,
                rs[k],
                rs[j],
                &rs[k..=j],
                FloorMode::AtOrAbove,
                CapMode::Strict,
            );
            total += first_weak * second;
        }
        total
    });
    Ok(PinnedPathMatrices {
        geq_lt,
        geq_leq,
        gt_leq,
        touch,
        touch_ordered,
    })
}

/// Time-zero comparison of the determinant pipeline against the pinned-path
/// closed forms.
#[derive(Clone, Debug)]
pub struct InitialDataReport {
    /// Max deviation of the pipeline corner resolvent at t = 0 against
    /// `I - geq_lt`.
    pub q_dev: f64,
    /// Max deviation of `(I - geq_lt)(I + geq_leq)` from the identity.
    pub inverse_dev: f64,
    /// Max deviation of the one-sided eta derivative of the corner resolvent
    /// against `touch - touch_ordered`; first order in the step.
    pub deta_dev: f64,
    pub step: f64,
}

pub fn initial_data_check(
    h: &HeightFunction,
    xs: &[f64],
    rs: &[i64],
    delta: f64,
    res: Resolution,
) -> Result<InitialDataReport> {
    let n = xs.len();
    let pinned = pinned_matrices_t0(h, xs, rs)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let q0_closed = &eye - &pinned.geq_lt;
    let q0 = corner_resolvent(h, 0.0, xs, rs, 0, res)?;
    let q_dev = (&q0 - &q0_closed).amax();
    let inverse_dev = (&q0_closed * (&eye + &pinned.geq_leq) - &eye).amax();
    // one-sided eta derivative: displace time and all points together
    let moved: Vec<f64> = xs.iter().map(|&x| x + delta).collect();
    let q_eps = corner_resolvent(h, delta, &moved, rs, 0, res)?;
    let deta_fd = (&q_eps - &q0) / (2.0 * delta);
    let deta_closed = &pinned.touch - &pinned.touch_ordered;
    let deta_dev = (deta_fd - deta_closed).amax();
    Ok(InitialDataReport {
        q_dev,
        inverse_dev,
        deta_dev,
        step: delta,
    })
}
