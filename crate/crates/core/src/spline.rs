//! Monotone piecewise-cubic Hermite curves.

use crate::error::{Error, Result};

/// Knot derivatives that keep every Hermite segment monotone wherever the
/// knot values are.
///
/// Interior derivatives start at the mean of the neighbouring secants (0 when
/// they differ in sign or one is flat), end derivatives at the adjacent
/// secant. A flat segment zeroes both its end derivatives; otherwise a pair
/// with `a^2 + b^2 > 9` (`a`, `b` the derivatives over the secant) is scaled
/// back onto that circle.
pub fn fritsch_carlson(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_knots(t, y)?;
    let n = t.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (t[k + 1] - t[k])).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        d[k] = if delta[k - 1] * delta[k] > 0.0 {
            0.5 * (delta[k - 1] + delta[k])
        } else {
            0.0
        };
    }
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let a = d[k] / delta[k];
        let b = d[k + 1] / delta[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[k] = tau * a * delta[k];
            d[k + 1] = tau * b * delta[k];
        }
    }
    Ok(d)
}

fn check_knots(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} knots but {} values", t.len(), y.len())));
    }
    if t.len() < 2 {
        return Err(Error::InvalidArgument("a spline needs at least two knots".into()));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("knots and values must be finite".into()));
    }
    if let Some(k) = t.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "knots must be strictly increasing (t[{k}] = {}, t[{}] = {})",
            t[k],
            k + 1,
            t[k + 1]
        )));
    }
    Ok(())
}

/// A cubic Hermite curve through `(knots[q], values[q])` with Fritsch-Carlson
/// derivatives. Outside `[knots[0], knots[Q]]` it is flat at the boundary value.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve {
    pub variable: String,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl SplineCurve {
    pub fn new(variable: &str, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let derivs = fritsch_carlson(&knots, &values)?;
        Ok(SplineCurve {
            variable: variable.to_string(),
            knots,
            values,
            derivs,
        })
    }

    /// Builds a curve from stored derivatives (used when loading models).
    pub fn from_parts(variable: &str, knots: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        check_knots(&knots, &values)?;
        if derivs.len() != knots.len() || derivs.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("one finite derivative per knot is required".into()));
        }
        Ok(SplineCurve {
            variable: variable.to_string(),
            knots,
            values,
            derivs,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Number of knot intervals.
    pub fn n_intervals(&self) -> usize {
        self.knots.len() - 1
    }

    /// (value, derivative) at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let last = self.knots.len() - 1;
        let (a, b) = self.domain();
        if x < a {
            return (self.values[0], 0.0);
        }
        if x > b {
            return (self.values[last], 0.0);
        }
        if x == b {
            return (self.values[last], self.derivs[last]);
        }
        // t[k] <= x < t[k+1]
        let k = self.knots.partition_point(|&t| t <= x) - 1;
        let h = self.knots[k + 1] - self.knots[k];
        let s = (x - self.knots[k]) / h;
        let (y0, y1, d0, d1) = (self.values[k], self.values[k + 1], self.derivs[k], self.derivs[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h10 = s3 - 2.0 * s2 + s;
        let h11 = s3 - s2;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let value = y0 + h * (d0 * h10 + d1 * h11) + (y1 - y0) * h01;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let deriv = d0 * dh10 + d1 * dh11 + (y1 - y0) / h * dh01;
        (value, deriv)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Multiplies values and derivatives by `factor`.
    pub fn scaled(&self, factor: f64) -> SplineCurve {
        SplineCurve {
            variable: self.variable.clone(),
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            derivs: self.derivs.iter().map(|d| d * factor).collect(),
        }
    }
}

pub fn eval_spline(curve: &SplineCurve, x: f64) -> (f64, f64) {
    curve.eval(x)
}
