//! Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson slopes).
//!
//! Data that is monotone between two knots stays monotone between them, so the
//! interpolant never overshoots a plateau. Evaluation outside the knot range is
//! rejected; callers intersect domains before integrating or sampling.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    /// Integral from `xs[0]` to `xs[i]`.
    cumulative: Vec<f64>,
}

impl Pchip {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "abscissae and ordinates differ in length ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: xs.len(),
            });
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("interpolation knots"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonAscendingAbscissae);
        }

        let slopes = fritsch_carlson_slopes(xs, ys);
        let mut interp = Pchip {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
            cumulative: Vec::with_capacity(xs.len()),
        };
        let mut acc = 0.0;
        interp.cumulative.push(0.0);
        for k in 0..xs.len() - 1 {
            acc += interp.segment_integral(k, 1.0);
            interp.cumulative.push(acc);
        }
        Ok(interp)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (k, s) = self.locate(x)?;
        let h = self.xs[k + 1] - self.xs[k];
        if s == 0.0 {
            return Ok(self.ys[k]);
        }
        if s == 1.0 {
            return Ok(self.ys[k + 1]);
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.ys[k]
            + h10 * h * self.slopes[k]
            + h01 * self.ys[k + 1]
            + h11 * h * self.slopes[k + 1])
    }

    /// Exact integral of the interpolant over `[a, b]`; `a > b` gives the
    /// negated integral.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.antiderivative(b)? - self.antiderivative(a)?)
    }

    fn antiderivative(&self, x: f64) -> Result<f64> {
        let (k, s) = self.locate(x)?;
        Ok(self.cumulative[k] + self.segment_integral(k, s))
    }

    /// Integral over segment `k` from its left knot to local parameter `s`.
    fn segment_integral(&self, k: usize, s: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let i00 = s4 / 2.0 - s3 + s;
        let i10 = s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0;
        let i01 = -s4 / 2.0 + s3;
        let i11 = s4 / 4.0 - s3 / 3.0;
        h * (i00 * self.ys[k]
            + i10 * h * self.slopes[k]
            + i01 * self.ys[k + 1]
            + i11 * h * self.slopes[k + 1])
    }

    /// Segment index and local parameter in [0, 1].
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let last = self.xs.len() - 2;
        let k = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(last),
            Err(i) => (i - 1).min(last),
        };
        let s = ((x - self.xs[k]) / (self.xs[k + 1] - self.xs[k])).clamp(0.0, 1.0);
        Ok((k, s))
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();

    if n == 2 {
        return vec![delta[0]; 2];
    }

    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Three-point non-centred estimate, clamped so the end segment stays
/// shape-preserving.
fn endpoint_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
