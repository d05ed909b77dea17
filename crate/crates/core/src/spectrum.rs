//! Frequency series with per-point quality flags, and peak detection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KernelPolicy, ModelParams, ValidityFlags};

/// Perturbative order of the steady-state treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    #[default]
    First,
    Second,
}

impl Order {
    pub fn as_str(&self) -> &'static str {
        match self {
            Order::First => "first",
            Order::Second => "second",
        }
    }
}

/// Quality marker attached to every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    #[default]
    Ok,
    /// A kernel denominator fell below the pole threshold.
    Pole,
    /// The six-index series could not be certified at the configured cap.
    Truncation,
    /// A linear solve was singular or ill-conditioned.
    Singular,
    /// Result outside its physical range (negative population and the like).
    Unphysical,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::Pole => "pole",
            PointFlag::Truncation => "truncation",
            PointFlag::Singular => "singular",
            PointFlag::Unphysical => "unphysical",
        }
    }

    pub fn is_ok(&self) -> bool {
        *self == PointFlag::Ok
    }

    /// Flag for a numerical error raised while evaluating one point.
    /// Returns `None` for errors that should abort the whole sweep.
    pub fn from_error(err: &Error) -> Option<Self> {
        match err {
            Error::PoleProximity { .. } => Some(PointFlag::Pole),
            Error::CapTooSmall { .. } => Some(PointFlag::Truncation),
            Error::SingularMatrix { .. } => Some(PointFlag::Singular),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Values {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Complex(v) => v.len(),
            Values::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Provenance carried alongside every series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    /// Name of the sampled quantity, e.g. `transmission`.
    pub quantity: String,
    /// Name of the grid variable, e.g. `delta_c`.
    pub variable: String,
    pub params: ModelParams,
    pub policy: KernelPolicy,
    pub order: Order,
    pub validity: ValidityFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub grid: Vec<f64>,
    pub values: Values,
    pub flags: Vec<PointFlag>,
    pub meta: SeriesMeta,
}

/// A local maximum located by quadratic refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub height: f64,
}

impl SpectrumSeries {
    pub fn new(grid: Vec<f64>, values: Values, flags: Vec<PointFlag>, meta: SeriesMeta) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() || flags.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "series lengths disagree: grid {}, values {}, flags {}",
                grid.len(),
                values.len(),
                flags.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            flags,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Real view used for peak finding: |v|² for complex values, v itself
    /// for real ones. Flagged points read as NaN.
    pub fn intensity(&self) -> Vec<f64> {
        let raw: Vec<f64> = match &self.values {
            Values::Complex(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Values::Real(v) => v.clone(),
        };
        raw.into_iter()
            .zip(&self.flags)
            .map(|(x, f)| if f.is_ok() { x } else { f64::NAN })
            .collect()
    }

    pub fn complex_values(&self) -> Option<&[Complex64]> {
        match &self.values {
            Values::Complex(v) => Some(v),
            Values::Real(_) => None,
        }
    }

    pub fn real_values(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Real(v) => Some(v),
            Values::Complex(_) => None,
        }
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| !f.is_ok()).count()
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidInput(format!(
            "a sweep needs at least 2 points, got {points}"
        )));
    }
    if !(stop > start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sweep needs finite start < stop, got [{start}, {stop}]"
        )));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { stop } else { start + step * i as f64 })
        .collect())
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = x[0] - x[1];
    let d02 = x[0] - x[2];
    let d12 = x[1] - x[2];
    let a = (y[0] / (d01 * d02)) - (y[1] / (d01 * d12)) + (y[2] / (d02 * d12));
    let b = -(y[0] * (x[1] + x[2]) / (d01 * d02)) + (y[1] * (x[0] + x[2]) / (d01 * d12))
        - (y[2] * (x[0] + x[1]) / (d02 * d12));
    let c = y[0] * x[1] * x[2] / (d01 * d02) - y[1] * x[0] * x[2] / (d01 * d12)
        + y[2] * x[0] * x[1] / (d02 * d12);
    if a >= 0.0 || !a.is_finite() {
        return (x[1], y[1]);
    }
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    (xv, (a * xv + b) * xv + c)
}

/// Local maxima of the intensity view, refined by three-point quadratic
/// interpolation and sorted by frequency. Flagged points never form peaks.
///
/// A flat top of equal samples reports a single peak at its midpoint.
pub fn detect_peaks(series: &SpectrumSeries) -> Vec<Peak> {
    find_peaks(&series.grid, &series.intensity())
}

/// Peaks whose height is at least `rel` times the tallest one.
pub fn significant_peaks(series: &SpectrumSeries, rel: f64) -> Vec<Peak> {
    let peaks = detect_peaks(series);
    let top = peaks.iter().map(|p| p.height).fold(f64::NEG_INFINITY, f64::max);
    peaks.into_iter().filter(|p| p.height >= rel * top).collect()
}

pub fn find_peaks(grid: &[f64], y: &[f64]) -> Vec<Peak> {
    let n = grid.len().min(y.len());
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let mut i = 1;
    while i + 1 < n {
        let (l, c) = (y[i - 1], y[i]);
        if !(l.is_finite() && c.is_finite()) || c <= l {
            i += 1;
            continue;
        }
        // Walk across a plateau of equal values.
        let mut j = i;
        while j + 1 < n && y[j + 1] == c {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let r = y[j + 1];
        if r.is_finite() && r < c {
            if i == j {
                let (f, h) = parabola_vertex(
                    [grid[i - 1], grid[i], grid[i + 1]],
                    [l, c, r],
                );
                peaks.push(Peak {
                    frequency: f,
                    height: h,
                });
            } else {
                peaks.push(Peak {
                    frequency: 0.5 * (grid[i] + grid[j]),
                    height: c,
                });
            }
        }
        i = j + 1;
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_lorentzian_peak() {
        let grid = uniform_grid(-10.0, 10.0, 201).unwrap();
        let y: Vec<f64> = grid
            .iter()
            .map(|d| (1.0 / Complex64::new(1.0, *d)).norm_sqr())
            .collect();
        let peaks = find_peaks(&grid, &y);
        assert_eq!(peaks.len(), 1);
        assert!(peaks[0].frequency.abs() <= 0.05);
    }

    #[test]
    fn refinement_beats_grid() {
        let grid = uniform_grid(-3.0, 3.0, 13).unwrap();
        let y: Vec<f64> = grid.iter().map(|x| -(x - 0.17) * (x - 0.17)).collect();
        let peaks = find_peaks(&grid, &y);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].frequency - 0.17).abs() < 1e-12);
    }

    #[test]
    fn monotone_has_no_peaks() {
        let grid = uniform_grid(0.0, 1.0, 50).unwrap();
        assert!(find_peaks(&grid, &grid).is_empty());
    }

    #[test]
    fn flagged_points_are_skipped() {
        let grid = uniform_grid(0.0, 4.0, 5).unwrap();
        let y = [0.0, 1.0, f64::NAN, 1.0, 0.0];
        assert!(find_peaks(&grid, &y).is_empty());
    }

    #[test]
    fn plateau_reported_once() {
        let grid = uniform_grid(0.0, 5.0, 6).unwrap();
        let y = [0.0, 1.0, 2.0, 2.0, 1.0, 0.0];
        let peaks = find_peaks(&grid, &y);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].frequency, 2.5);
    }

    #[test]
    fn grid_rules() {
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        assert!(uniform_grid(1.0, 0.0, 5).is_err());
        let g = uniform_grid(-0.5, 0.5, 2001).unwrap();
        assert_eq!(g.len(), 2001);
        assert_eq!(*g.last().unwrap(), 0.5);
        assert!(check_grid(&[0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn peaks_sorted_and_inside(ys in proptest::collection::vec(-5.0f64..5.0, 3..60)) {
            let grid: Vec<f64> = (0..ys.len()).map(|i| i as f64 * 0.5).collect();
            let peaks = find_peaks(&grid, &ys);
            for w in peaks.windows(2) {
                prop_assert!(w[0].frequency < w[1].frequency);
            }
            for p in &peaks {
                prop_assert!(p.frequency >= grid[0] && p.frequency <= *grid.last().unwrap());
            }
        }
    }
}
