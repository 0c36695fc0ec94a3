//! Scalar disturbance inputs.
//!
//! Inputs are piecewise-constant step signals `u: [0, inf) -> R`. Breakpoints
//! are stored as integer nanosecond ticks, so translating a signal is exact and
//! the translation semigroup law holds bit for bit. Every integral of a step
//! signal is computed exactly from its pieces.
//!
//! Text form (used in scenario configs):
//!
//! ```text
//! steps: [(t1,v1),(t2,v2),...] tail: v
//! ```
//!
//! Level `v_i` holds on `[t_{i-1}, t_i)` with `t_0 = 0`, and `tail` holds on
//! `[t_m, inf)`. `steps: [] tail: c` is the constant signal `c`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

pub const TICKS_PER_SECOND: i64 = 1_000_000_000;

/// A non-negative instant or duration, in nanosecond ticks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub fn from_ticks(ticks: i64) -> Result<Time> {
        if ticks < 0 {
            return Err(Error::NegativeTime(ticks as f64 / TICKS_PER_SECOND as f64));
        }
        Ok(Time(ticks))
    }

    /// Rounds `secs` to the nearest tick.
    pub fn from_secs(secs: f64) -> Result<Time> {
        if !secs.is_finite() {
            return Err(invalid(format!("time {secs} is not finite")));
        }
        if secs < 0.0 {
            return Err(Error::NegativeTime(secs));
        }
        let ticks = (secs * TICKS_PER_SECOND as f64).round();
        if ticks > i64::MAX as f64 / 2.0 {
            return Err(invalid(format!("time {secs} out of range")));
        }
        Ok(Time(ticks as i64))
    }

    pub fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / TICKS_PER_SECOND as f64
    }

    pub fn saturating_sub(self, other: Time) -> Time {
        Time((self.0 - other.0).max(0))
    }
}

impl std::ops::Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl fmt::Display for Time {
    /// Exact decimal seconds.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / TICKS_PER_SECOND;
        let frac = self.0 % TICKS_PER_SECOND;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

/// Piecewise-constant scalar signal on `[0, inf)`.
///
/// Stored in canonical form: adjacent pieces carry different levels and the
/// last piece differs from the tail. Two signals are equal iff they agree as
/// functions (up to the right-continuous convention at breakpoints).
#[derive(Clone, Debug, PartialEq)]
pub struct StepSignal {
    breakpoints: Vec<Time>,
    values: Vec<f64>,
    tail: f64,
}

impl StepSignal {
    /// `breakpoints` must start at 0 and increase strictly; `values[i]` holds on
    /// `[breakpoints[i], breakpoints[i+1])`.
    pub fn new(breakpoints: Vec<Time>, values: Vec<f64>, tail: f64) -> Result<StepSignal> {
        if breakpoints.first() != Some(&Time::ZERO) {
            return Err(invalid("first breakpoint must be 0"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(invalid(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if !tail.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("signal levels must be finite"));
        }
        Ok(Self::canonical(breakpoints, values, tail))
    }

    /// Builds a signal from `(t_i, v_i)` pairs where `t_i` is the right end of
    /// the piece carrying `v_i`.
    pub fn from_steps(steps: &[(f64, f64)], tail: f64) -> Result<StepSignal> {
        let mut breakpoints = Vec::with_capacity(steps.len() + 1);
        breakpoints.push(Time::ZERO);
        let mut values = Vec::with_capacity(steps.len());
        for &(t, v) in steps {
            breakpoints.push(Time::from_secs(t)?);
            values.push(v);
        }
        StepSignal::new(breakpoints, values, tail)
    }

    pub fn constant(level: f64) -> StepSignal {
        StepSignal {
            breakpoints: vec![Time::ZERO],
            values: Vec::new(),
            tail: level,
        }
    }

    pub fn zero() -> StepSignal {
        StepSignal::constant(0.0)
    }

    fn canonical(breakpoints: Vec<Time>, values: Vec<f64>, tail: f64) -> StepSignal {
        let mut bps = vec![Time::ZERO];
        let mut vals: Vec<f64> = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if vals.last() == Some(&v) {
                continue;
            }
            if i > 0 {
                bps.push(breakpoints[i]);
            }
            vals.push(v);
        }
        // `bps` now holds the start of each kept piece; append the end of the last one.
        if !vals.is_empty() {
            bps.push(*breakpoints.last().expect("non-empty"));
        }
        while vals.last() == Some(&tail) {
            vals.pop();
            bps.pop();
        }
        if vals.is_empty() {
            bps.truncate(1);
        }
        StepSignal {
            breakpoints: bps,
            values: vals,
            tail,
        }
    }

    pub fn breakpoints(&self) -> &[Time] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Last breakpoint; the signal equals its tail from here on.
    pub fn support_end(&self) -> Time {
        *self.breakpoints.last().expect("breakpoints never empty")
    }

    pub fn is_compactly_supported(&self) -> bool {
        self.tail == 0.0
    }

    /// Level at `t` (right-hand level at a breakpoint).
    pub fn level_at(&self, t: Time) -> f64 {
        // index of the last breakpoint <= t
        let idx = self.breakpoints.partition_point(|&b| b <= t) - 1;
        self.values.get(idx).copied().unwrap_or(self.tail)
    }

    /// Level at `t` seconds.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.level_at(Time::from_secs(t)?))
    }

    /// First breakpoint strictly after `t`, if any.
    pub fn next_breakpoint_after(&self, t: Time) -> Option<Time> {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.breakpoints.get(idx).copied()
    }

    /// Left translation `t -> s(t + h)`.
    pub fn translate(&self, h: Time) -> StepSignal {
        if h == Time::ZERO {
            return self.clone();
        }
        if h >= self.support_end() {
            return StepSignal::constant(self.tail);
        }
        let idx = self.breakpoints.partition_point(|&b| b <= h) - 1;
        let mut bps = Vec::with_capacity(self.breakpoints.len() - idx);
        bps.push(Time::ZERO);
        bps.extend(self.breakpoints[idx + 1..].iter().map(|&b| Time(b.0 - h.0)));
        StepSignal::canonical(bps, self.values[idx..].to_vec(), self.tail)
    }

    /// Translation by `h` seconds.
    pub fn translate_secs(&self, h: f64) -> Result<StepSignal> {
        Ok(self.translate(Time::from_secs(h)?))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(self.tail.abs(), |acc, v| acc.max(v.abs()))
    }

    /// Pointwise multiple `factor * s`.
    pub fn scaled(&self, factor: f64) -> StepSignal {
        StepSignal::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.tail * factor,
        )
    }

    /// `s / sup_norm(s)`; fails on the zero signal.
    pub fn normalized(&self) -> Result<StepSignal> {
        let norm = self.sup_norm();
        if norm == 0.0 {
            return Err(invalid("cannot normalize the zero signal"));
        }
        Ok(self.scaled(1.0 / norm))
    }

    /// Pieces `(start, end, level)` clipped to `[a, b]`, in seconds.
    fn pieces_in(&self, a: Time, b: Time) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.values.len();
        (0..=n).filter_map(move |i| {
            let start = self.breakpoints[i];
            let end = if i < n { Some(self.breakpoints[i + 1]) } else { None };
            let level = if i < n { self.values[i] } else { self.tail };
            let lo = start.max(a);
            let hi = end.map_or(b, |e| e.min(b));
            (hi > lo).then(|| (lo.as_secs(), hi.as_secs(), level))
        })
    }

    /// Exact `int_a^b |s|^2`, with `a <= b` in seconds.
    pub fn l2_squared_window(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = (Time::from_secs(a)?, Time::from_secs(b)?);
        if a > b {
            return Err(invalid(format!("window [{a}, {b}] is reversed")));
        }
        // Sum in ticks to keep piece lengths exact.
        let total: f64 = self.pieces_in(a, b).map(|(lo, hi, v)| (hi - lo) * v * v).sum();
        Ok(total)
    }

    pub fn l2_norm_window(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.l2_squared_window(a, b)?.sqrt())
    }
}

impl fmt::Display for StepSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("steps: [")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", self.breakpoints[i + 1], v)?;
        }
        write!(f, "] tail: {}", self.tail)
    }
}

impl FromStr for StepSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<StepSignal> {
        let perr = |m: &str| Error::Parse(format!("{m} in `{s}`"));
        let rest = s
            .trim()
            .strip_prefix("steps:")
            .ok_or_else(|| perr("expected `steps:`"))?
            .trim_start();
        let rest = rest.strip_prefix('[').ok_or_else(|| perr("expected `[`"))?;
        let close = rest.find(']').ok_or_else(|| perr("missing `]`"))?;
        let (list, rest) = (&rest[..close], &rest[close + 1..]);
        let tail_text = rest
            .trim_start()
            .strip_prefix("tail:")
            .ok_or_else(|| perr("expected `tail:`"))?
            .trim();
        let tail: f64 = tail_text.parse().map_err(|_| perr("tail level is not a number"))?;

        let mut steps = Vec::new();
        let mut cursor = list.trim();
        while !cursor.is_empty() {
            let inner = cursor.strip_prefix('(').ok_or_else(|| perr("expected `(`"))?;
            let end = inner.find(')').ok_or_else(|| perr("missing `)`"))?;
            let (pair, after) = (&inner[..end], &inner[end + 1..]);
            let (t, v) = pair.split_once(',').ok_or_else(|| perr("expected `(t,v)`"))?;
            let t: f64 = t.trim().parse().map_err(|_| perr("bad breakpoint"))?;
            let v: f64 = v.trim().parse().map_err(|_| perr("bad level"))?;
            steps.push((t, v));
            cursor = after.trim_start();
            if let Some(next) = cursor.strip_prefix(',') {
                cursor = next.trim_start();
                if cursor.is_empty() {
                    return Err(perr("trailing `,`"));
                }
            } else if !cursor.is_empty() {
                return Err(perr("expected `,` between steps"));
            }
        }
        StepSignal::from_steps(&steps, tail)
    }
}

/// Finite sample of the translate hull of a base signal.
#[derive(Clone, Debug, PartialEq)]
pub struct HullSample {
    base: StepSignal,
    shifts: Vec<Time>,
    members: Vec<StepSignal>,
}

impl HullSample {
    /// Translates of `base` by `shifts` (0 is always added). Shifts producing an
    /// identical translate are collapsed onto the first such shift.
    pub fn new(base: StepSignal, shifts: &[Time]) -> HullSample {
        let mut sorted: Vec<Time> = std::iter::once(Time::ZERO).chain(shifts.iter().copied()).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut kept_shifts = Vec::with_capacity(sorted.len());
        let mut members: Vec<StepSignal> = Vec::with_capacity(sorted.len());
        for h in sorted {
            let member = base.translate(h);
            if !members.contains(&member) {
                kept_shifts.push(h);
                members.push(member);
            }
        }
        HullSample {
            base,
            shifts: kept_shifts,
            members,
        }
    }

    /// `count` shifts uniform over the support plus the tail translate.
    pub fn uniform(base: StepSignal, count: usize) -> HullSample {
        let end = base.support_end().ticks();
        let count = count.max(1) as i64;
        let shifts: Vec<Time> = (0..=count).map(|i| Time(end * i / count)).collect();
        HullSample::new(base, &shifts)
    }

    /// Default grid of 32 shifts.
    pub fn default_grid(base: StepSignal) -> HullSample {
        HullSample::uniform(base, 32)
    }

    pub fn singleton(base: StepSignal) -> HullSample {
        HullSample::new(base, &[])
    }

    pub fn base(&self) -> &StepSignal {
        &self.base
    }

    pub fn shifts(&self) -> &[Time] {
        &self.shifts
    }

    pub fn members(&self) -> &[StepSignal] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Result of [`check_translation_bound`].
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationBoundReport {
    pub window: (f64, f64),
    /// `(b - a) * sup_norm(base)^2`.
    pub bound: f64,
    /// `bound - int_a^b |v|^2` for each member, in hull order.
    pub margins: Vec<f64>,
    pub holds: bool,
}

/// Checks `int_a^b |v|^2 <= (b - a) ||u||_inf^2` for every sampled translate.
pub fn check_translation_bound(hull: &HullSample, a: f64, b: f64) -> Result<TranslationBoundReport> {
    if a > b {
        return Err(invalid(format!("window [{a}, {b}] is reversed")));
    }
    let sup = hull.base.sup_norm();
    let (ta, tb) = (Time::from_secs(a)?, Time::from_secs(b)?);
    let bound = (tb.as_secs() - ta.as_secs()) * sup * sup;
    let margins = hull
        .members
        .iter()
        .map(|v| v.l2_squared_window(a, b).map(|e| bound - e))
        .collect::<Result<Vec<_>>>()?;
    let slack = 1e-12 * bound.max(1.0);
    let holds = margins.iter().all(|&m| m >= -slack);
    Ok(TranslationBoundReport {
        window: (a, b),
        bound,
        margins,
        holds,
    })
}
