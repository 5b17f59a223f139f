//! Loess smoothing and STL seasonal-trend decomposition.
//!
//! The decomposition follows the classical inner/outer loop: cycle-subseries
//! smoothing, a low-pass filter of the seasonal, trend smoothing of the
//! deseasonalized series, and bisquare robustness weights computed from the
//! remainder between outer passes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("loess window must be a positive odd number, got {0}")]
    Window(usize),
    #[error("loess degree must be 0, 1 or 2, got {0}")]
    Degree(usize),
    #[error("loess window {window} is too small for degree {degree}")]
    WindowTooSmall { window: usize, degree: usize },
    #[error("robustness weights have length {got}, series has {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("robustness weight {0} is outside [0, 1]")]
    WeightRange(f64),
    #[error("period must be at least 2, got {0}")]
    Period(usize),
    #[error("{name} window must be odd and at least {min}, got {got}")]
    StlWindow { name: &'static str, min: usize, got: usize },
    #[error("series of length {len} is shorter than two periods ({period} each)")]
    TooShort { len: usize, period: usize },
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("cannot smooth an empty series")]
    Empty,
}

/// A daily series starting at day index `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub start: i64,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        mean(&self.values)
    }
}

pub(crate) fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Components of an additive decomposition. `remainder` is defined as
/// `input - trend - seasonal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub remainder: Vec<f64>,
}

fn tricube(u: f64) -> f64 {
    let u = u.abs();
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Weighted polynomial fit evaluated at `x0`.
///
/// `xs` are the abscissae of the neighbourhood, `ys` the values and `ws` the
/// combined weights. Coordinates are centred on `x0` and scaled by `scale`,
/// so the fitted value is the constant coefficient. If the neighbourhood has
/// fewer distinct weighted points than the degree needs, the degree drops.
fn local_fit(xs: &[f64], ys: &[f64], ws: &[f64], x0: f64, scale: f64, degree: usize) -> f64 {
    let positive = ws.iter().filter(|&&w| w > 0.0).count();
    let degree = degree.min(positive.saturating_sub(1));
    for deg in (0..=degree).rev() {
        let p = deg + 1;
        // normal equations, p <= 3
        let mut a = [[0.0f64; 4]; 3];
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
            if w <= 0.0 {
                continue;
            }
            let u = (x - x0) / scale;
            let pow = [1.0, u, u * u];
            for r in 0..p {
                for c in 0..p {
                    a[r][c] += w * pow[r] * pow[c];
                }
                a[r][3] += w * pow[r] * y;
            }
        }
        if let Some(beta0) = solve_first(&mut a, p) {
            return beta0;
        }
    }
    // every weight zero: unweighted mean of the window
    ys.iter().sum::<f64>() / ys.len() as f64
}

/// Gaussian elimination with partial pivoting on a `p × (p+1)` augmented
/// system; returns the first unknown, or `None` when the system is singular.
fn solve_first(a: &mut [[f64; 4]; 3], p: usize) -> Option<f64> {
    let norm = (0..p).map(|r| a[r][r].abs()).fold(0.0, f64::max);
    if norm == 0.0 {
        return None;
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * norm {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            for c in col..p {
                a[r][c] -= f * a[col][c];
            }
            a[r][3] -= f * a[col][3];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..p).rev() {
        let mut s = a[r][3];
        for c in r + 1..p {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x[0])
}

/// Loess estimate at position `x0` (which may lie outside `0..n`) from values
/// at integer positions `0..n`.
fn loess_at(
    values: &[f64],
    x0: f64,
    window: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> f64 {
    let n = values.len();
    let q = window.min(n);
    // the q nearest neighbours, shifted inward at the edges
    let start = ((x0 - (q as f64 - 1.0) / 2.0).round().max(0.0) as usize).min(n - q);
    let end = start + q;
    let mut reach = (x0 - start as f64).max((end - 1) as f64 - x0);
    if window > n {
        reach += (window - n) as f64 / 2.0;
    }
    // half a step past the farthest neighbour keeps every neighbour weighted
    let scale = reach + 0.5;

    let xs: Vec<f64> = (start..end).map(|j| j as f64).collect();
    let ys = &values[start..end];
    let mut ws: Vec<f64> = xs.iter().map(|&x| tricube((x - x0) / scale)).collect();
    if let Some(r) = robustness {
        ws.iter_mut().zip(&r[start..end]).for_each(|(w, &rw)| *w *= rw);
    }
    if ws.iter().all(|&w| w <= 0.0) {
        ws.iter_mut().for_each(|w| *w = 1.0);
    }
    local_fit(&xs, ys, &ws, x0, scale, degree)
}

fn check_loess(
    n: usize,
    window: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Result<(), StlError> {
    if n == 0 {
        return Err(StlError::Empty);
    }
    if window == 0 || window % 2 == 0 {
        return Err(StlError::Window(window));
    }
    if degree > 2 {
        return Err(StlError::Degree(degree));
    }
    if window < degree + 1 {
        return Err(StlError::WindowTooSmall { window, degree });
    }
    if let Some(r) = robustness {
        if r.len() != n {
            return Err(StlError::WeightLength { expected: n, got: r.len() });
        }
        if let Some(&w) = r.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(StlError::WeightRange(w));
        }
    }
    Ok(())
}

/// Loess smoother over the `window` nearest neighbours of each point, with
/// tricube distance weights multiplied by optional robustness weights.
pub fn loess_smooth(
    values: &[f64],
    window: usize,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Result<Vec<f64>, StlError> {
    check_loess(values.len(), window, degree, robustness)?;
    Ok((0..values.len())
        .map(|i| loess_at(values, i as f64, window, degree, robustness))
        .collect())
}

/// Bisquare weights `(1 - (|r| / 6m)²)²` with `m = median |r|`, zero beyond
/// `6m`. A zero median gives all-ones.
pub fn robustness_weights(remainder: &[f64]) -> Vec<f64> {
    let mut abs: Vec<f64> = remainder.iter().map(|r| r.abs()).collect();
    if abs.is_empty() {
        return abs;
    }
    abs.sort_by(f64::total_cmp);
    let mid = abs.len() / 2;
    let median = if abs.len() % 2 == 1 { abs[mid] } else { 0.5 * (abs[mid - 1] + abs[mid]) };
    if median <= 0.0 {
        return vec![1.0; remainder.len()];
    }
    let h = 6.0 * median;
    remainder
        .iter()
        .map(|r| {
            let u = r.abs() / h;
            if u >= 1.0 {
                0.0
            } else {
                let t = 1.0 - u * u;
                t * t
            }
        })
        .collect()
}

fn next_odd_at_least(x: f64) -> usize {
    let n = x.ceil().max(1.0) as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StlParams {
    pub period: usize,
    pub seasonal_window: usize,
    pub trend_window: usize,
    pub low_pass_window: usize,
    pub inner_iters: usize,
    pub outer_iters: usize,
}

impl StlParams {
    /// Defaults for a period: seasonal window 7, trend window the next odd
    /// integer ≥ 1.5·period / (1 − 1.5/seasonal_window), low-pass window the
    /// next odd integer ≥ period, two inner passes and one robustness pass.
    pub fn for_period(period: usize) -> Self {
        let seasonal_window = 7;
        Self {
            period,
            seasonal_window,
            trend_window: Self::default_trend_window(period, seasonal_window),
            low_pass_window: next_odd_at_least(period as f64),
            inner_iters: 2,
            outer_iters: 1,
        }
    }

    pub fn default_trend_window(period: usize, seasonal_window: usize) -> usize {
        next_odd_at_least(1.5 * period as f64 / (1.0 - 1.5 / seasonal_window as f64))
    }

    pub fn validate(&self) -> Result<(), StlError> {
        if self.period < 2 {
            return Err(StlError::Period(self.period));
        }
        let check = |name, got: usize, min| {
            if got < min || got % 2 == 0 {
                Err(StlError::StlWindow { name, min, got })
            } else {
                Ok(())
            }
        };
        check("seasonal", self.seasonal_window, 3)?;
        check("trend", self.trend_window, 3)?;
        check("low-pass", self.low_pass_window, 3)?;
        Ok(())
    }
}

impl Default for StlParams {
    fn default() -> Self {
        Self::for_period(7)
    }
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    if x.len() < len {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(x.len() - len + 1);
    let mut sum: f64 = x[..len].iter().sum();
    out.push(sum / len as f64);
    for i in len..x.len() {
        sum += x[i] - x[i - len];
        out.push(sum / len as f64);
    }
    out
}

/// Seasonal-trend decomposition of an evenly spaced series.
pub fn stl_decompose(values: &[f64], params: &StlParams) -> Result<Decomposition, StlError> {
    params.validate()?;
    let n = values.len();
    let np = params.period;
    if n < 2 * np {
        return Err(StlError::TooShort { len: n, period: np });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StlError::NonFinite(i));
    }

    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    let mut weights: Option<Vec<f64>> = None;

    for pass in 0..=params.outer_iters {
        for _ in 0..params.inner_iters.max(1) {
            inner_pass(values, params, weights.as_deref(), &mut trend, &mut seasonal);
        }
        if pass < params.outer_iters {
            let rem: Vec<f64> =
                (0..n).map(|i| values[i] - trend[i] - seasonal[i]).collect();
            weights = Some(robustness_weights(&rem));
        }
    }

    let remainder = (0..n).map(|i| values[i] - trend[i] - seasonal[i]).collect();
    Ok(Decomposition { trend, seasonal, remainder })
}

fn inner_pass(
    y: &[f64],
    params: &StlParams,
    weights: Option<&[f64]>,
    trend: &mut [f64],
    seasonal: &mut [f64],
) {
    let n = y.len();
    let np = params.period;
    let detrended: Vec<f64> = y.iter().zip(trend.iter()).map(|(v, t)| v - t).collect();

    // Cycle-subseries smoothing, each subseries extended one step at both
    // ends. `cycle[t + np]` holds the smoothed value for time `t`, t in -np..n+np.
    let mut cycle = vec![0.0; n + 2 * np];
    for k in 0..np {
        let idx: Vec<usize> = (k..n).step_by(np).collect();
        let sub: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
        let sub_w: Option<Vec<f64>> = weights.map(|w| idx.iter().map(|&i| w[i]).collect());
        let m = sub.len();
        for j in 0..m + 2 {
            let x0 = j as f64 - 1.0;
            cycle[k + j * np] = loess_at(&sub, x0, params.seasonal_window, 1, sub_w.as_deref());
        }
    }

    let low = moving_average(&moving_average(&moving_average(&cycle, np), np), 3);
    debug_assert_eq!(low.len(), n);
    let low_window = params.low_pass_window;
    let low: Vec<f64> = (0..n).map(|i| loess_at(&low, i as f64, low_window, 1, None)).collect();

    for t in 0..n {
        seasonal[t] = cycle[t + np] - low[t];
    }
    let deseasonalized: Vec<f64> = y.iter().zip(seasonal.iter()).map(|(v, s)| v - s).collect();
    for (t, tr) in trend.iter_mut().enumerate() {
        *tr = loess_at(&deseasonalized, t as f64, params.trend_window, 1, weights);
    }
}
