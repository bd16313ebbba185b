//! Piecewise-linear curves used by position-dependent elements.

use thiserror::Error;

use crate::float::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("a curve needs at least two breakpoints")]
    TooFewPoints,
    #[error("breakpoint abscissae must be strictly increasing")]
    NotIncreasing,
    #[error("breakpoint values must be finite")]
    NotFinite,
}

/// Piecewise-linear function of position, clamped to its end values outside
/// the breakpoint range (slope zero there).
#[derive(Debug, Clone, PartialEq)]
pub struct PwlCurve<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    /// Cumulative exact integral from `xs[0]` to `xs[i]`.
    cumulative: Vec<T>,
}

impl<T: Scalar> PwlCurve<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self, CurveError> {
        if points.len() < 2 {
            return Err(CurveError::TooFewPoints);
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for (x, y) in points {
            if !x.is_finite() || !y.is_finite() {
                return Err(CurveError::NotFinite);
            }
            if let Some(&last) = xs.last() {
                if x <= last {
                    return Err(CurveError::NotIncreasing);
                }
            }
            xs.push(x);
            ys.push(y);
        }
        let mut cumulative = Vec::with_capacity(xs.len());
        let mut acc = T::zero();
        cumulative.push(acc);
        for i in 1..xs.len() {
            acc = acc + (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) * T::of(0.5);
            cumulative.push(acc);
        }
        Ok(Self { xs, ys, cumulative })
    }

    /// Value and slope at `x`. Outside the breakpoint range the value clamps
    /// to the nearest end and the slope is zero.
    pub fn eval(&self, x: T) -> (T, T) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (self.ys[0], T::zero());
        }
        if x >= self.xs[n - 1] {
            return (self.ys[n - 1], T::zero());
        }
        let seg = self.segment_of(x);
        let dx = self.xs[seg + 1] - self.xs[seg];
        let slope = (self.ys[seg + 1] - self.ys[seg]) / dx;
        (self.ys[seg] + slope * (x - self.xs[seg]), slope)
    }

    /// Exact integral of the (clamp-extended) curve from `xs[0]` to `x`.
    pub fn integral_from_start(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (x - self.xs[0]) * self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.cumulative[n - 1] + (x - self.xs[n - 1]) * self.ys[n - 1];
        }
        let seg = self.segment_of(x);
        let (value, _) = self.eval(x);
        self.cumulative[seg] + (x - self.xs[seg]) * (self.ys[seg] + value) * T::of(0.5)
    }

    pub fn min_value(&self) -> T {
        self.ys.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_abs_value(&self) -> T {
        self.ys.iter().fold(T::zero(), |acc, y| acc.max(y.abs()))
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segment_of(&self, x: T) -> usize {
        // Index of the segment [xs[i], xs[i+1]) containing x; callers have
        // already excluded the clamp regions.
        let mut lo = 0usize;
        let mut hi = self.xs.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_clamps() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(c.eval(0.5), (1.0, 2.0));
        assert_eq!(c.eval(2.0), (2.0, 0.0));
        assert_eq!(c.eval(-1.0), (0.0, 0.0));
        assert_eq!(c.eval(10.0), (2.0, 0.0));
    }

    #[test]
    fn integral_matches_geometry() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(c.integral_from_start(1.0), 1.0);
        assert_eq!(c.integral_from_start(3.0), 5.0);
        assert_eq!(c.integral_from_start(4.0), 7.0);
        assert_eq!(c.integral_from_start(-1.0), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            PwlCurve::new(vec![(0.0, 1.0)]).unwrap_err(),
            CurveError::TooFewPoints
        );
        assert_eq!(
            PwlCurve::new(vec![(0.0, 1.0), (0.0, 2.0)]).unwrap_err(),
            CurveError::NotIncreasing
        );
    }
}
