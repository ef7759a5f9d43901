//! Piecewise-constant upper-semicontinuous height profiles.
//!
//! A profile takes integer values (or minus infinity) and is described by a
//! value on the far left, a list of breakpoints with the value holding to the
//! right of each, and isolated spikes. Evaluation at a breakpoint or spike is
//! the maximum of left limit, right limit and spike value, so the function is
//! upper semicontinuous by construction; the representation itself never
//! stores those pointwise maxima.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer height compactified at minus infinity.
///
/// `NegInf` compares strictly below every finite value and absorbs addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Height {
    NegInf,
    Finite(i64),
}

impl Height {
    pub fn finite(self) -> Option<i64> {
        match self {
            Height::NegInf => None,
            Height::Finite(v) => Some(v),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Height::Finite(_))
    }

    /// Adds an integer; minus infinity absorbs.
    pub fn plus(self, k: i64) -> Height {
        match self {
            Height::NegInf => Height::NegInf,
            Height::Finite(v) => Height::Finite(v + k),
        }
    }

    pub fn negate(self) -> Height {
        match self {
            Height::NegInf => Height::NegInf,
            Height::Finite(v) => Height::Finite(-v),
        }
    }
}

impl From<i64> for Height {
    fn from(v: i64) -> Self {
        Height::Finite(v)
    }
}

impl std::fmt::Display for Height {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Height::NegInf => write!(f, "-inf"),
            Height::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// Upper-semicontinuous piecewise-constant profile with isolated spikes.
///
/// Pieces are half-open `[breakpoint_i, breakpoint_{i+1})`; `left_value` holds
/// on `(-inf, first breakpoint)`. A profile built by [`negate`](Self::negate)
/// carries a lower-semicontinuous flag so evaluation takes minima instead.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightFunction {
    left_value: Height,
    pieces: Vec<(f64, Height)>,
    spikes: Vec<(f64, Height)>,
    lower_semicontinuous: bool,
}

impl HeightFunction {
    /// Builds a profile from raw parts, validating ordering and finiteness.
    pub fn new(
        left_value: Height,
        pieces: Vec<(f64, Height)>,
        spikes: Vec<(f64, Height)>,
    ) -> Result<Self> {
        for w in pieces.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Precondition(format!(
                    "breakpoints must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        let mut positions: Vec<f64> = spikes.iter().map(|s| s.0).collect();
        positions.sort_by(f64::total_cmp);
        for w in positions.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Precondition(format!(
                    "spike positions must be distinct, got {} twice",
                    w[0]
                )));
            }
        }
        let some_finite = left_value.is_finite()
            || pieces.iter().any(|p| p.1.is_finite())
            || spikes.iter().any(|s| s.1.is_finite());
        if !some_finite {
            return Err(Error::Precondition(
                "profile must take at least one finite value".into(),
            ));
        }
        let mut spikes = spikes;
        spikes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(HeightFunction {
            left_value,
            pieces,
            spikes,
            lower_semicontinuous: false,
        })
    }

    /// The flat profile, identically zero.
    pub fn flat() -> Self {
        HeightFunction {
            left_value: Height::Finite(0),
            pieces: vec![],
            spikes: vec![],
            lower_semicontinuous: false,
        }
    }

    /// Narrow wedge at `y`: zero at `y`, minus infinity elsewhere.
    pub fn narrow_wedge(y: f64) -> Self {
        HeightFunction {
            left_value: Height::NegInf,
            pieces: vec![],
            spikes: vec![(y, Height::Finite(0))],
            lower_semicontinuous: false,
        }
    }

    /// Two-step example profile: 0 on `(-inf, 0)`, 1 on `[0, 0.7)`, -1 on
    /// `[0.7, inf)`.
    pub fn two_step() -> Self {
        HeightFunction {
            left_value: Height::Finite(0),
            pieces: vec![(0.0, Height::Finite(1)), (0.7, Height::Finite(-1))],
            spikes: vec![],
            lower_semicontinuous: false,
        }
    }

    pub fn left_value(&self) -> Height {
        self.left_value
    }

    pub fn pieces(&self) -> &[(f64, Height)] {
        &self.pieces
    }

    pub fn spikes(&self) -> &[(f64, Height)] {
        &self.spikes
    }

    pub fn is_lower_semicontinuous(&self) -> bool {
        self.lower_semicontinuous
    }

    /// Value of the piece containing `x`, ignoring breakpoint/spike maxima.
    /// At a breakpoint this is the value holding to the right.
    pub fn piece_value(&self, x: f64) -> Height {
        match self
            .pieces
            .binary_search_by(|p| p.0.partial_cmp(&x).unwrap())
        {
            Ok(i) => self.pieces[i].1,
            Err(0) => self.left_value,
            Err(i) => self.pieces[i - 1].1,
        }
    }

    fn spike_value(&self, x: f64) -> Option<Height> {
        self.spikes
            .binary_search_by(|s| s.0.partial_cmp(&x).unwrap())
            .ok()
            .map(|i| self.spikes[i].1)
    }

    fn left_limit(&self, x: f64) -> Height {
        // Value just to the left of x: the piece whose open interval has x as
        // its right endpoint, or the piece containing x if x is interior.
        match self
            .pieces
            .binary_search_by(|p| p.0.partial_cmp(&x).unwrap())
        {
            Ok(0) => self.left_value,
            Ok(i) => self.pieces[i - 1].1,
            Err(0) => self.left_value,
            Err(i) => self.pieces[i - 1].1,
        }
    }

    /// Semicontinuous evaluation: max (or min, for lower-semicontinuous
    /// profiles) of left limit, right value and spike value at `x`.
    pub fn eval(&self, x: f64) -> Height {
        let left = self.left_limit(x);
        let right = self.piece_value(x);
        let candidates = [Some(left), Some(right), self.spike_value(x)];
        let iter = candidates.into_iter().flatten();
        if self.lower_semicontinuous {
            iter.min().unwrap()
        } else {
            iter.max().unwrap()
        }
    }

    /// Supremum of the profile over the closed interval `[a, b]`.
    ///
    /// Exact: takes the max over endpoint evaluations, piece values on open
    /// intervals meeting `(a, b)`, and spikes strictly inside.
    pub fn sup_over(&self, a: f64, b: f64) -> Height {
        assert!(a <= b, "sup_over needs a <= b");
        let mut best = self.eval(a).max(self.eval(b));
        // Pieces intersecting the open interval (a, b).
        if self.left_value > best && !self.pieces.is_empty() && self.pieces[0].0 > a {
            best = self.left_value;
        }
        if self.pieces.is_empty() {
            best = best.max(self.left_value);
        }
        for (i, &(bp, v)) in self.pieces.iter().enumerate() {
            let end = self.pieces.get(i + 1).map(|p| p.0).unwrap_or(f64::INFINITY);
            if bp < b && end > a && v > best {
                best = v;
            }
        }
        for &(pos, v) in &self.spikes {
            if pos > a && pos < b && v > best {
                best = v;
            }
        }
        best
    }

    /// Level reached at `x` by the deterministic spreading dynamics after
    /// time `t`: the running maximum over the backward cone `[x-t, x+t]`.
    pub fn running_max(&self, t: f64, x: f64) -> Height {
        assert!(t >= 0.0, "running_max needs t >= 0");
        self.sup_over(x - t, x + t)
    }

    /// Spatial reflection `x -> -x`. Structural involution.
    pub fn reflect(&self) -> HeightFunction {
        // Open intervals map to open intervals; the stored right-values swap
        // roles with the left limits, so values shift by one slot.
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let n = self.pieces.len();
        for i in (0..n).rev() {
            let value = if i == 0 {
                self.left_value
            } else {
                self.pieces[i - 1].1
            };
            pieces.push((-self.pieces[i].0, value));
        }
        let left_value = self.pieces.last().map(|p| p.1).unwrap_or(self.left_value);
        let spikes = self.spikes.iter().rev().map(|&(p, v)| (-p, v)).collect();
        HeightFunction {
            left_value,
            pieces,
            spikes,
            lower_semicontinuous: self.lower_semicontinuous,
        }
    }

    /// Spatial shift by `y`.
    pub fn shift(&self, y: f64) -> HeightFunction {
        HeightFunction {
            left_value: self.left_value,
            pieces: self.pieces.iter().map(|&(p, v)| (p + y, v)).collect(),
            spikes: self.spikes.iter().map(|&(p, v)| (p + y, v)).collect(),
            lower_semicontinuous: self.lower_semicontinuous,
        }
    }

    /// Pointwise negation. Flips the semicontinuity convention, so negating
    /// an upper-semicontinuous profile yields its lower-semicontinuous
    /// counterpart.
    pub fn negate(&self) -> HeightFunction {
        HeightFunction {
            left_value: self.left_value.negate(),
            pieces: self.pieces.iter().map(|&(p, v)| (p, v.negate())).collect(),
            spikes: self.spikes.iter().map(|&(p, v)| (p, v.negate())).collect(),
            lower_semicontinuous: !self.lower_semicontinuous,
        }
    }

    /// Lowers every value by `k` (minus infinity absorbs).
    pub fn lower_by(&self, k: i64) -> HeightFunction {
        HeightFunction {
            left_value: self.left_value.plus(-k),
            pieces: self.pieces.iter().map(|&(p, v)| (p, v.plus(-k))).collect(),
            spikes: self.spikes.iter().map(|&(p, v)| (p, v.plus(-k))).collect(),
            lower_semicontinuous: self.lower_semicontinuous,
        }
    }

    /// Breakpoint and spike positions falling strictly inside `(a, b)`.
    pub fn positions_within(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| p.0)
            .chain(self.spikes.iter().map(|s| s.0))
            .filter(|&p| p > a && p < b)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Largest finite value anywhere on the profile, if any.
    pub fn max_finite_value(&self) -> Option<i64> {
        self.left_value
            .finite()
            .into_iter()
            .chain(self.pieces.iter().filter_map(|p| p.1.finite()))
            .chain(self.spikes.iter().filter_map(|s| s.1.finite()))
            .max()
    }

    /// Smallest finite value anywhere on the profile, if any.
    pub fn min_finite_value(&self) -> Option<i64> {
        self.left_value
            .finite()
            .into_iter()
            .chain(self.pieces.iter().filter_map(|p| p.1.finite()))
            .chain(self.spikes.iter().filter_map(|s| s.1.finite()))
            .min()
    }

    /// The maximal-value intervals of constancy, as closed intervals clipped
    /// to `[lo, hi]`, plus spikes, each with its value. Used by the
    /// variational samplers.
    pub fn constancy_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64, Height)> {
        let mut out = Vec::new();
        let mut starts = vec![f64::NEG_INFINITY];
        starts.extend(self.pieces.iter().map(|p| p.0));
        for (i, &start) in starts.iter().enumerate() {
            let value = if i == 0 {
                self.left_value
            } else {
                self.pieces[i - 1].1
            };
            let end = starts.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let (c, d) = (start.max(lo), end.min(hi));
            if c <= d && value.is_finite() {
                out.push((c, d, value));
            }
        }
        for &(p, v) in &self.spikes {
            if p >= lo && p <= hi && v.is_finite() {
                out.push((p, p, v));
            }
        }
        out
    }
}

/// Serializable description of an initial profile, as read from run configs:
/// either a preset string or the explicit piece/spike lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Preset(String),
    Explicit {
        left_value: HeightSpec,
        #[serde(default)]
        pieces: Vec<PointValue>,
        #[serde(default)]
        spikes: Vec<PointValue>,
    },
}

/// A height in config files: an integer or the string `"-inf"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeightSpec {
    Finite(i64),
    Symbol(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointValue {
    pub at: f64,
    pub value: HeightSpec,
}

impl HeightSpec {
    fn to_height(&self) -> Result<Height> {
        match self {
            HeightSpec::Finite(v) => Ok(Height::Finite(*v)),
            HeightSpec::Symbol(s) if s == "-inf" => Ok(Height::NegInf),
            HeightSpec::Symbol(s) => Err(Error::Precondition(format!(
                "unknown height value {s:?}, expected an integer or \"-inf\""
            ))),
        }
    }
}

impl ProfileSpec {
    /// Resolves the spec into a profile. Presets: `flat`, `two-step`,
    /// `narrow-wedge:<y>`.
    pub fn build(&self) -> Result<HeightFunction> {
        match self {
            ProfileSpec::Preset(name) => parse_preset(name),
            ProfileSpec::Explicit {
                left_value,
                pieces,
                spikes,
            } => {
                let pieces = pieces
                    .iter()
                    .map(|p| Ok((p.at, p.value.to_height()?)))
                    .collect::<Result<Vec<_>>>()?;
                let spikes = spikes
                    .iter()
                    .map(|p| Ok((p.at, p.value.to_height()?)))
                    .collect::<Result<Vec<_>>>()?;
                HeightFunction::new(left_value.to_height()?, pieces, spikes)
            }
        }
    }
}

/// Parses a preset name: `flat`, `two-step`, or `narrow-wedge:<y>`.
pub fn parse_preset(name: &str) -> Result<HeightFunction> {
    if name == "flat" {
        return Ok(HeightFunction::flat());
    }
    if name == "two-step" {
        return Ok(HeightFunction::two_step());
    }
    if let Some(rest) = name.strip_prefix("narrow-wedge:") {
        let y: f64 = rest
            .parse()
            .map_err(|_| Error::Precondition(format!("bad narrow-wedge position {rest:?}")))?;
        return Ok(HeightFunction::narrow_wedge(y));
    }
    if name == "narrow-wedge" {
        return Ok(HeightFunction::narrow_wedge(0.0));
    }
    Err(Error::Precondition(format!(
        "unknown preset {name:?}; expected flat, two-step or narrow-wedge:<y>"
    )))
}
