//! Command-line surface for the determinant pipeline, the samplers, and the
//! structure checks. Deterministic: the same config and seed produce
//! byte-identical output files.

mod config;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{check_xs, Common, FileConfig};
use png_toda::closedforms::{
    ablowitz_ladik_residual, dpii_residual, flat_toeplitz_hankel, narrow_wedge_toeplitz,
};
use png_toda::fredholm::{png_cdf_with, Settings};
use png_toda::height::parse_preset;
use png_toda::integrable::{
    initial_data_check, nonabelian_residual, toda_1d_residual, toda_scalar_residual, Resolution,
};
use png_toda::simulate::estimate_cdf;
use png_toda::HeightFunction;
use table::{join_list, Cell, Format, Table};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "png-toda",
    version,
    about = "Exact growth-model transition probabilities via Fredholm determinants of walk hit kernels, with Monte Carlo cross-validation and integrable-structure checks"
)]
struct Cli {
    /// TOML or JSON run configuration; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread cap (also PNG_TODA_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (stdout if omitted)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Master seed for anything stochastic
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit unconverged determinant rows instead of failing
    #[arg(long, global = true)]
    allow_unconverged: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PointArgs {
    /// Initial profile: flat | two-step | narrow-wedge:<y> (or config file)
    #[arg(long)]
    initial: Option<String>,

    /// Times, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Vec<f64>,

    /// Evaluation points, comma separated, strictly increasing
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,

    /// Levels, comma separated (one per point)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    r: Vec<i64>,

    /// Level range for one-point sweeps
    #[arg(long)]
    r_min: Option<i64>,
    #[arg(long)]
    r_max: Option<i64>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Joint CDF values from the determinant pipeline
    Cdf(PointArgs),
    /// Monte Carlo estimates from the event-driven sampler
    Simulate {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Monte Carlo against the determinant, with z-scores
    Compare {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Exit 4 if any |z| > 4
        #[arg(long)]
        check: bool,
    },
    /// Wave-identity residuals (scalar, lattice, or matrix form)
    TodaCheck {
        #[command(flatten)]
        points: PointArgs,
        /// scalar | lattice | matrix
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        /// Exit 4 unless second order with small residuals
        #[arg(long)]
        check: bool,
    },
    /// Discrete Painleve II and Ablowitz-Ladik residuals
    Painleve {
        /// Circle-weight parameters, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[arg(long)]
        r_min: Option<i64>,
        #[arg(long)]
        r_max: Option<i64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        check: bool,
    },
    /// Toeplitz / Toeplitz-plus-Hankel closed-form tables
    ClosedForm {
        /// narrow-wedge | flat
        #[arg(long)]
        family: Option<String>,
        /// Cone parameters (narrow-wedge) or times (flat), comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[arg(long)]
        r_min: Option<i64>,
        #[arg(long)]
        r_max: Option<i64>,
    },
    /// Time-zero pinned-path data against the determinant pipeline
    Initdata {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        check: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<png_toda::Error>()
                .map(|e| match e {
                    png_toda::Error::NoConvergence { .. }
                    | png_toda::Error::QuadratureDivergence { .. }
                    | png_toda::Error::IllConditioned { .. } => EXIT_NUMERICAL,
                    _ => EXIT_VALIDATION,
                })
                .unwrap_or(EXIT_VALIDATION);
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads).or_else(|| {
        std::env::var("PNG_TODA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        png_toda::par::configure_threads(n);
    }
    let format = cli.format.unwrap_or(match file.format.as_deref() {
        Some("jsonl") => Format::Jsonl,
        _ => Format::Csv,
    });
    let common = Common::resolve(&file, cli.seed);

    let (table, check_ok) = dispatch(&cli.command, &file, &common, cli.allow_unconverged)?;

    match &cli.output {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            table.write(&mut f, format)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write(&mut stdout.lock(), format)?;
        }
    }
    Ok(if check_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

fn resolve_profile(points_initial: &Option<String>, file: &FileConfig) -> Result<HeightFunction> {
    if let Some(name) = points_initial {
        return Ok(parse_preset(name)?);
    }
    if let Some(spec) = &file.initial {
        return Ok(spec.build()?);
    }
    bail!("no initial profile: pass --initial <preset> or set `initial` in the config");
}

struct ResolvedPoints {
    h: HeightFunction,
    ts: Vec<f64>,
    xs: Vec<f64>,
    level_sets: Vec<Vec<i64>>,
}

fn resolve_points(points: &PointArgs, file: &FileConfig) -> Result<ResolvedPoints> {
    let ts = if points.t.is_empty() {
        file.t.clone().unwrap_or_default()
    } else {
        points.t.clone()
    };
    if ts.is_empty() {
        bail!("no times: pass --t or set `t` in the config");
    }
    let mut resolved = resolve_space(points, file)?;
    resolved.ts = ts;
    Ok(resolved)
}

/// Profile, points and level sets, with no time requirement (`ts` empty).
fn resolve_space(points: &PointArgs, file: &FileConfig) -> Result<ResolvedPoints> {
    let h = resolve_profile(&points.initial, file)?;
    let ts = Vec::new();
    let xs = if points.x.is_empty() {
        file.xs.clone().unwrap_or_default()
    } else {
        points.x.clone()
    };
    check_xs(&xs)?;
    let rs = if points.r.is_empty() {
        file.rs.clone().unwrap_or_default()
    } else {
        points.r.clone()
    };
    let r_min = points.r_min.or(file.r_min);
    let r_max = points.r_max.or(file.r_max);
    let level_sets: Vec<Vec<i64>> = match (rs.is_empty(), r_min, r_max) {
        (false, None, None) => {
            if rs.len() != xs.len() {
                bail!(
                    "--r needs one level per point ({} != {})",
                    rs.len(),
                    xs.len()
                );
            }
            vec![rs]
        }
        (true, Some(lo), Some(hi)) => {
            if xs.len() != 1 {
                bail!("--r-min/--r-max sweeps need exactly one point");
            }
            if lo > hi {
                bail!("--r-min must not exceed --r-max");
            }
            (lo..=hi).map(|r| vec![r]).collect()
        }
        _ => bail!("levels: pass --r (one per point) or both --r-min and --r-max"),
    };
    Ok(ResolvedPoints {
        h,
        ts,
        xs,
        level_sets,
    })
}

fn dispatch(
    command: &Command,
    file: &FileConfig,
    common: &Common,
    allow_unconverged: bool,
) -> Result<(Table, bool)> {
    match command {
        Command::Cdf(points) => cmd_cdf(points, file, common, allow_unconverged),
        Command::Simulate { points, n_samples } => {
            cmd_simulate(points, file, common, n_samples.or(file.n_samples))
        }
        Command::Compare {
            points,
            n_samples,
            check,
        } => cmd_compare(
            points,
            file,
            common,
            n_samples.or(file.n_samples),
            *check,
            allow_unconverged,
        ),
        Command::TodaCheck {
            points,
            kind,
            delta,
            check,
        } => cmd_toda_check(points, file, common, kind.clone(), *delta, *check),
        Command::Painleve {
            s,
            r_min,
            r_max,
            delta,
            check,
        } => cmd_painleve(s, file, common, *r_min, *r_max, *delta, *check),
        Command::ClosedForm {
            family,
            s,
            r_min,
            r_max,
        } => cmd_closed_form(family.clone(), s, file, *r_min, *r_max),
        Command::Initdata {
            points,
            delta,
            check,
        } => cmd_initdata(points, file, common, *delta, *check),
    }
}

fn settings(common: &Common) -> Settings {
    Settings {
        m0: common.block_size,
        buffer0: common.buffer,
        tol: common.tolerance,
        max_doublings: 4,
        ..Settings::default()
    }
}

fn cmd_cdf(
    points: &PointArgs,
    file: &FileConfig,
    common: &Common,
    allow_unconverged: bool,
) -> Result<(Table, bool)> {
    let rp = resolve_points(points, file)?;
    let mut table = Table::new(
        "cdf",
        &[("tolerance", format!("{:e}", common.tolerance))],
        &[
            "t(time)",
            "xs(points;separated)",
            "rs(levels;separated)",
            "F(probability;det tol above)",
            "converged(bool)",
            "window(final block size)",
        ],
    );
    for &t in &rp.ts {
        for rs in &rp.level_sets {
            let res = png_cdf_with(&rp.h, t, &rp.xs, rs, &settings(common))?;
            if !res.converged && !allow_unconverged {
                bail!(png_toda::Error::NoConvergence {
                    delta: res.tail_estimate,
                    m: res.window_size,
                });
            }
            table.push(vec![
                Cell::Float(t),
                Cell::Text(join_list(&rp.xs)),
                Cell::Text(join_list(rs)),
                Cell::Float(res.value),
                Cell::Bool(res.converged),
                Cell::Int(res.window_size as i64),
            ]);
        }
    }
    Ok((table, true))
}

fn cmd_simulate(
    points: &PointArgs,
    file: &FileConfig,
    common: &Common,
    n_samples: Option<usize>,
) -> Result<(Table, bool)> {
    let rp = resolve_points(points, file)?;
    let n = n_samples.unwrap_or(common.n_samples);
    let mut table = Table::new(
        "simulate",
        &[
            ("seed", common.seed.to_string()),
            ("n_samples", n.to_string()),
        ],
        &[
            "t(time)",
            "xs(points;separated)",
            "rs(levels;separated)",
            "estimate(probability)",
            "stderr(binomial)",
        ],
    );
    for &t in &rp.ts {
        for rs in &rp.level_sets {
            let (p, se) = estimate_cdf(&rp.h, t, &rp.xs, rs, n, common.seed);
            table.push(vec![
                Cell::Float(t),
                Cell::Text(join_list(&rp.xs)),
                Cell::Text(join_list(rs)),
                Cell::Float(p),
                Cell::Float(se),
            ]);
        }
    }
    Ok((table, true))
}

fn cmd_compare(
    points: &PointArgs,
    file: &FileConfig,
    common: &Common,
    n_samples: Option<usize>,
    check: bool,
    allow_unconverged: bool,
) -> Result<(Table, bool)> {
    let rp = resolve_points(points, file)?;
    let n = n_samples.unwrap_or(common.n_samples);
    let mut table = Table::new(
        "compare",
        &[
            ("seed", common.seed.to_string()),
            ("n_samples", n.to_string()),
            ("tolerance", format!("{:e}", common.tolerance)),
        ],
        &[
            "t(time)",
            "xs(points;separated)",
            "rs(levels;separated)",
            "mc(probability)",
            "stderr(binomial)",
            "F(probability;determinant)",
            "z(discrepancy/stderr)",
        ],
    );
    let mut ok = true;
    for &t in &rp.ts {
        for rs in &rp.level_sets {
            let fred = png_cdf_with(&rp.h, t, &rp.xs, rs, &settings(common))?;
            if !fred.converged && !allow_unconverged {
                bail!(png_toda::Error::NoConvergence {
                    delta: fred.tail_estimate,
                    m: fred.window_size,
                });
            }
            let (mc, se) = estimate_cdf(&rp.h, t, &rp.xs, rs, n, common.seed);
            let z = if se > 0.0 {
                (mc - fred.value) / se
            } else if mc == fred.value {
                0.0
            } else {
                f64::INFINITY
            };
            if z.abs() > 4.0 {
                ok = false;
            }
            table.push(vec![
                Cell::Float(t),
                Cell::Text(join_list(&rp.xs)),
                Cell::Text(join_list(rs)),
                Cell::Float(mc),
                Cell::Float(se),
                Cell::Float(fred.value),
                Cell::Float(z),
            ]);
        }
    }
    Ok((table, !check || ok))
}

fn cmd_toda_check(
    points: &PointArgs,
    file: &FileConfig,
    common: &Common,
    kind: Option<String>,
    delta: Option<f64>,
    check: bool,
) -> Result<(Table, bool)> {
    let kind = kind
        .or(file.kind.clone())
        .unwrap_or_else(|| "scalar".into());
    let delta = delta.unwrap_or(common.delta);
    let res = Resolution {
        m: common.block_size.min(48),
        buffer: common.buffer,
    };
    let mut table = Table::new(
        "toda-check",
        &[("kind", kind.clone()), ("delta", format!("{delta:e}"))],
        &[
            "t(time)",
            "xs(points;separated)",
            "rs(levels;separated)",
            "residual(step=delta)",
            "residual_half(step=delta/2)",
            "order(log2 ratio)",
        ],
    );
    let mut ok = true;
    let rp = resolve_points(points, file)?;
    for &t in &rp.ts {
        for rs in &rp.level_sets {
            let rep = match kind.as_str() {
                "scalar" => {
                    if rp.xs.len() != 1 {
                        bail!("scalar check needs exactly one point");
                    }
                    toda_scalar_residual(&rp.h, t, rp.xs[0], rs[0], delta, res)?
                }
                "lattice" => toda_1d_residual(t, rs[0], delta, res)?,
                "matrix" => nonabelian_residual(&rp.h, t, &rp.xs, rs, delta, res)?,
                other => bail!("unknown kind {other:?}: expected scalar, lattice or matrix"),
            };
            let ratio = rep.residual / rep.residual_half.max(1e-300);
            let bound = if kind == "matrix" { 5e-4 } else { 1e-4 };
            if !(3.5..=4.5).contains(&ratio) || rep.residual_half > bound {
                ok = false;
            }
            table.push(vec![
                Cell::Float(t),
                Cell::Text(join_list(&rp.xs)),
                Cell::Text(join_list(rs)),
                Cell::Float(rep.residual),
                Cell::Float(rep.residual_half),
                Cell::Float(rep.richardson_order),
            ]);
        }
    }
    Ok((table, !check || ok))
}

fn cmd_painleve(
    s: &[f64],
    file: &FileConfig,
    common: &Common,
    r_min: Option<i64>,
    r_max: Option<i64>,
    delta: Option<f64>,
    check: bool,
) -> Result<(Table, bool)> {
    let ss = if s.is_empty() {
        file.s.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0])
    } else {
        s.to_vec()
    };
    let lo = r_min.or(file.r_min).unwrap_or(1).max(1);
    let hi = r_max.or(file.r_max).unwrap_or(6);
    let delta = delta.unwrap_or(common.delta);
    let mut table = Table::new(
        "painleve",
        &[("delta", format!("{delta:e}"))],
        &[
            "s(weight parameter)",
            "r(index)",
            "dpii(|recurrence residual|)",
            "al(|flow residual|;step=delta)",
            "al_half(step=delta/2)",
            "al_order(log2 ratio)",
        ],
    );
    let mut ok = true;
    for &sv in &ss {
        for r in lo..=hi {
            let dp = dpii_residual(sv, r as usize)?;
            let al = ablowitz_ladik_residual(sv, r as usize, delta)?;
            if dp > 1e-8 || al.residual_half > 1e-5 {
                ok = false;
            }
            table.push(vec![
                Cell::Float(sv),
                Cell::Int(r),
                Cell::Float(dp),
                Cell::Float(al.residual),
                Cell::Float(al.residual_half),
                Cell::Float(al.richardson_order),
            ]);
        }
    }
    Ok((table, !check || ok))
}

fn cmd_closed_form(
    family: Option<String>,
    s: &[f64],
    file: &FileConfig,
    r_min: Option<i64>,
    r_max: Option<i64>,
) -> Result<(Table, bool)> {
    let family = family
        .or(file.family.clone())
        .unwrap_or_else(|| "narrow-wedge".into());
    let ss = if s.is_empty() {
        file.s
            .clone()
            .or(file.t.clone())
            .unwrap_or_else(|| vec![0.5, 1.0])
    } else {
        s.to_vec()
    };
    let lo = r_min.or(file.r_min).unwrap_or(0).max(0);
    let hi = r_max.or(file.r_max).unwrap_or(8);
    let param_name = match family.as_str() {
        "narrow-wedge" => "s(cone parameter)",
        "flat" => "t(time)",
        other => bail!("unknown family {other:?}: expected narrow-wedge or flat"),
    };
    let mut table = Table::new(
        "closed-form",
        &[("family", family.clone())],
        &[param_name, "r(level)", "F(probability;closed form)"],
    );
    for &sv in &ss {
        for r in lo..=hi {
            let value = match family.as_str() {
                "narrow-wedge" => narrow_wedge_toeplitz(sv, r as usize),
                _ => flat_toeplitz_hankel(sv, r as usize),
            };
            table.push(vec![Cell::Float(sv), Cell::Int(r), Cell::Float(value)]);
        }
    }
    Ok((table, true))
}

fn cmd_initdata(
    points: &PointArgs,
    file: &FileConfig,
    common: &Common,
    delta: Option<f64>,
    check: bool,
) -> Result<(Table, bool)> {
    let rp = resolve_space(points, file)?;
    let delta = delta.unwrap_or(1e-3);
    let res = Resolution {
        m: common.block_size.min(50),
        buffer: common.buffer,
    };
    let mut table = Table::new(
        "initdata",
        &[("delta", format!("{delta:e}"))],
        &[
            "xs(points;separated)",
            "rs(levels;separated)",
            "q_dev(max entry)",
            "inverse_dev(max entry)",
            "deta_dev(max entry;first order in delta)",
        ],
    );
    let mut ok = true;
    for rs in &rp.level_sets {
        let rep = initial_data_check(&rp.h, &rp.xs, rs, delta, res)?;
        if rep.q_dev > 1e-9 || rep.inverse_dev > 1e-10 || rep.deta_dev > 5.0 * delta {
            ok = false;
        }
        table.push(vec![
            Cell::Text(join_list(&rp.xs)),
            Cell::Text(join_list(rs)),
            Cell::Float(rep.q_dev),
            Cell::Float(rep.inverse_dev),
            Cell::Float(rep.deta_dev),
        ]);
    }
    Ok((table, !check || ok))
}
