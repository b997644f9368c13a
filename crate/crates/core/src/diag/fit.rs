use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Time series with a fitting window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries<T> {
    samples: Vec<(T, T)>,
    window: (T, T),
}

impl<T: Real> DecaySeries<T> {
    /// Rejects non-increasing times and empty windows.
    pub fn new(samples: Vec<(T, T)>, window: (T, T)) -> Result<Self> {
        if let Some(k) = samples.windows(2).position(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Series(format!("time not strictly increasing at sample {}", k + 1)));
        }
        if !(window.1 > window.0) {
            return Err(Error::Series(format!("empty window [{}, {}]", window.0, window.1)));
        }
        Ok(DecaySeries { samples, window })
    }

    /// Window covering every sample.
    pub fn whole(samples: Vec<(T, T)>) -> Result<Self> {
        let lo = samples.first().map_or(T::zero(), |s| s.0);
        let hi = samples.last().map_or(T::one(), |s| s.0);
        Self::new(samples, (lo, if hi > lo { hi } else { lo + T::one() }))
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn window(&self) -> (T, T) {
        self.window
    }

    pub fn in_window(&self) -> impl Iterator<Item = &(T, T)> {
        let (lo, hi) = self.window;
        self.samples.iter().filter(move |s| s.0 >= lo && s.0 <= hi)
    }
}

/// `value ~ amplitude * t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit<T> {
    pub exponent: T,
    pub amplitude: T,
    pub r2: T,
}

/// Least-squares line through `(ln t, ln value)` over the window.
pub fn fit_power<T: Real>(series: &DecaySeries<T>) -> Result<PowerFit<T>> {
    let pts: Vec<(T, T)> = series.in_window().copied().collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!("{} samples in window, need at least 5", pts.len())));
    }
    fit_loglog(&pts)
}

/// Log-log least squares on any set of at least three positive points.
pub fn fit_loglog<T: Real>(pts: &[(T, T)]) -> Result<PowerFit<T>> {
    if pts.len() < 3 {
        return Err(Error::Fit(format!("{} points, need at least 3", pts.len())));
    }
    if let Some(&(t, v)) = pts.iter().find(|s| !(s.0 > T::zero()) || !(s.1 > T::zero())) {
        return Err(Error::Fit(format!("nonpositive sample ({t}, {v}) in window")));
    }
    let xs: Vec<T> = pts.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<T> = pts.iter().map(|s| s.1.ln()).collect();
    let n = T::from_count(pts.len());
    let xm = xs.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let ym = ys.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    if !(sxx > T::zero()) {
        return Err(Error::Fit("degenerate window: all sample times coincide in log scale".into()));
    }
    let exponent = sxy / sxx;
    let intercept = ym - exponent * xm;
    let mut ss_res = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let e = y - intercept - exponent * x;
        ss_res += e * e;
    }
    let r2 = if syy > T::zero() { (T::one() - ss_res / syy).max(T::zero()).min(T::one()) } else { T::one() };
    Ok(PowerFit { exponent, amplitude: intercept.exp(), r2 })
}

/// Data of the comparison lemma for `y' = g(y) + h'`.
#[derive(Clone)]
pub struct ZlotnikCase<T> {
    pub y0: T,
    pub g: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub n0: T,
    pub n1: T,
    pub zeta_bar: T,
}

impl<T: Real> std::fmt::Debug for ZlotnikCase<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZlotnikCase")
            .field("y0", &self.y0)
            .field("n0", &self.n0)
            .field("n1", &self.n1)
            .field("zeta_bar", &self.zeta_bar)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZlotnikOutcome<T> {
    /// The bound holds; `slack` is its smallest margin over the samples.
    Holds { slack: T },
    /// The bound fails first at `t` with the (negative) minimal slack.
    BoundFailed { slack: T, t: T },
    /// A hypothesis of the lemma does not hold on the data.
    HypothesisFailed { reason: String },
}

impl<T> ZlotnikOutcome<T> {
    pub fn passed(&self) -> bool {
        matches!(self, ZlotnikOutcome::Holds { .. })
    }
}

/// Sample points `zeta_bar + (2^(k/4) - 1) max(1, |zeta_bar|)` for the
/// sign check on `g`.
fn spot_grid<T: Real>(zeta_bar: T) -> Vec<T> {
    let s = zeta_bar.abs().max(T::one());
    (0..=80).map(|k| zeta_bar + (T::lit(2f64.powf(k as f64 / 4.0)) - T::one()) * s).collect()
}

/// Checks `y(t) <= max(y0, zeta_bar) + N0` on every sample after verifying
/// the hypotheses: `g <= -N1` beyond `zeta_bar` on a sample grid and
/// `h(t2) - h(t1) <= N0 + N1 (t2 - t1)` for all sampled pairs.
pub fn zlotnik_check<T: Real>(case: &ZlotnikCase<T>, y_series: &DecaySeries<T>, h_series: &DecaySeries<T>) -> Result<ZlotnikOutcome<T>> {
    if !(case.n0 >= T::zero()) || !(case.n1 >= T::zero()) {
        return Err(Error::Params(format!("N0 and N1 must be nonnegative (N0 = {}, N1 = {})", case.n0, case.n1)));
    }
    if y_series.samples().is_empty() {
        return Err(Error::Series("empty y series".into()));
    }
    for z in spot_grid(case.zeta_bar) {
        let gz = (case.g)(z);
        if !(gz <= -case.n1) {
            return Ok(ZlotnikOutcome::HypothesisFailed { reason: format!("g({z}) = {gz} exceeds -N1 = {}", -case.n1) });
        }
    }
    let hs = h_series.samples();
    let scale = hs.iter().fold(T::one(), |m, s| m.max(s.1.abs()));
    let tol = T::lit(1e-12) * scale;
    let mut best: Option<(T, T)> = None;
    for &(t, h) in hs {
        let shifted = h - case.n1 * t;
        if let Some((lo, t1)) = best {
            let excess = shifted - lo - case.n0;
            if excess > tol {
                return Ok(ZlotnikOutcome::HypothesisFailed {
                    reason: format!("increment of h on [{t1}, {t}] exceeds N0 + N1 dt by {excess}"),
                });
            }
        }
        if best.is_none_or(|(lo, _)| shifted < lo) {
            best = Some((shifted, t));
        }
    }
    let bound = case.y0.max(case.zeta_bar) + case.n0;
    let mut slack = T::infinity();
    let mut at = T::zero();
    for &(t, y) in y_series.samples() {
        if bound - y < slack {
            slack = bound - y;
            at = t;
        }
    }
    let tol = T::lit(1e-12) * bound.abs().max(T::one());
    if slack >= -tol {
        Ok(ZlotnikOutcome::Holds { slack })
    } else {
        Ok(ZlotnikOutcome::BoundFailed { slack, t: at })
    }
}
