//! Small numerical helpers shared by the other modules.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ComplexValue;

/// Exponent threshold above which `exp` is treated as overflowing.
pub const EXP_THRESHOLD: f64 = 700.0;

/// Below this modulus `Log(1 - x)` switches to its power series.
pub const LOG1M_SERIES_RADIUS: f64 = 0.5;

/// Series length for `Log(1 - x)`; 0.5^49/49 is below 1e-16.
const LOG1M_TERMS: usize = 48;

/// Maps an angle onto (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut r = theta.rem_euclid(two_pi);
    if r > PI {
        r -= two_pi;
    }
    if r <= -PI {
        r += two_pi;
    }
    r
}

/// Principal logarithm with the imaginary part in (-π, π].
pub fn principal_log(z: ComplexValue) -> Result<ComplexValue> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain("logarithm of zero".into()));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("logarithm of non-finite value {z}")));
    }
    let mut arg = z.im.atan2(z.re);
    // atan2 gives -π on the lower side of the negative axis
    if arg <= -PI {
        arg = PI;
    }
    Ok(Complex64::new(z.norm().ln(), arg))
}

/// Principal power `w^alpha = exp(alpha Log w)` for real `alpha`.
pub fn principal_pow(w: ComplexValue, alpha: f64) -> Result<ComplexValue> {
    Ok((principal_log(w)? * alpha).exp())
}

/// `Log(1 - x)`, by direct evaluation for |x| >= 1/2 and by power series below.
pub fn log_one_minus(x: ComplexValue) -> Result<ComplexValue> {
    if x.norm() < LOG1M_SERIES_RADIUS {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = x;
        for n in 1..=LOG1M_TERMS {
            acc -= pw / n as f64;
            pw *= x;
        }
        Ok(acc)
    } else {
        let y = Complex64::new(1.0, 0.0) - x;
        if y.im == 0.0 && y.re <= 0.0 {
            return Err(Error::Domain(format!("1 - x = {y} lies on the branch cut")));
        }
        principal_log(y)
    }
}

/// A complex number stored as `(log |z|, arg z)`.
///
/// Values of the model map have moduli like `exp(exp(700))`, so they only
/// exist in this form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub log_mod: f64,
    pub arg: f64,
}

impl LogComplex {
    pub fn new(log_mod: f64, arg: f64) -> Self {
        LogComplex {
            log_mod,
            arg: wrap_angle(arg),
        }
    }

    /// The number `exp(w)`.
    pub fn from_exponent(w: ComplexValue) -> Self {
        LogComplex::new(w.re, w.im)
    }

    pub fn from_complex(z: ComplexValue) -> Result<Self> {
        let l = principal_log(z)?;
        Ok(LogComplex::new(l.re, l.im))
    }

    pub fn to_complex(&self) -> Option<ComplexValue> {
        if self.log_mod > EXP_THRESHOLD {
            None
        } else {
            Some(Complex64::from_polar(self.log_mod.exp(), self.arg))
        }
    }

    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        LogComplex::new(self.log_mod + other.log_mod, self.arg + other.arg)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Ordinary least squares fit `y = a + b x`; returns `(a, b, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Degenerate("linear fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("linear fit with constant abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    Ok((a, b, (rss / n).sqrt()))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
