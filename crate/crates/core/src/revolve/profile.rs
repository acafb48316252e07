use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack allowed in `f'² ≤ 1 + f²` before a sample counts as inadmissible.
pub const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// The rotationally symmetric metric `dρ² + f(ρ)² dθ²`, sampled at uniform arclength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileMetric {
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub fprime: Vec<f64>,
}

impl ProfileMetric {
    pub fn new(rho: Vec<f64>, f: Vec<f64>, fprime: Vec<f64>) -> Result<Self> {
        if rho.len() < 5 || rho.len() != f.len() || rho.len() != fprime.len() {
            return Err(Error::InvalidArgument("profile needs at least 5 samples of equal length".into()));
        }
        let h = (rho[rho.len() - 1] - rho[0]) / (rho.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("profile arclength must increase".into()));
        }
        for k in 1..rho.len() {
            if ((rho[k] - rho[k - 1]) - h).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::InvalidArgument(format!("profile samples are not uniform at rho = {}", rho[k])));
            }
        }
        let mut f = f;
        // Roundoff at a closing pole.
        let last = f.len() - 1;
        for k in [0, last] {
            if f[k].abs() < 1e-13 {
                f[k] = 0.0;
            }
        }
        let p = ProfileMetric { rho, f, fprime };
        p.validate()?;
        Ok(p)
    }

    /// Samples `f` and `f'` at `n` uniform points of `[0, length]`.
    pub fn from_fn(f: impl Fn(f64) -> (f64, f64), length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || n < 5 {
            return Err(Error::InvalidArgument("profile needs positive length and at least 5 samples".into()));
        }
        let rho: Vec<f64> = (0..n).map(|k| length * k as f64 / (n - 1) as f64).collect();
        let (fs, ds) = rho.iter().map(|&r| f(r)).unzip();
        ProfileMetric::new(rho, fs, ds)
    }

    /// `f = sinh ρ`: the totally geodesic plane.
    pub fn plane(length: f64, n: usize) -> Result<Self> {
        Self::from_fn(|r| (r.sinh(), r.cosh()), length, n)
    }

    /// `f = ρ`: the flat metric, realized by a horosphere.
    pub fn flat(length: f64, n: usize) -> Result<Self> {
        Self::from_fn(|r| (r, 1.0), length, n)
    }

    /// `f = cosh d · sinh(ρ / cosh d)`: curvature `-1/cosh² d`, realized by an equidistant surface.
    pub fn equidistant(distance: f64, length: f64, n: usize) -> Result<Self> {
        let c = distance.cosh();
        Self::from_fn(|r| (c * (r / c).sinh(), (r / c).cosh()), length, n)
    }

    /// `f = sinh r · sin(ρ / sinh r)` on `[0, π sinh r]`: the geodesic sphere of radius `r`.
    pub fn sphere(radius: f64, n: usize) -> Result<Self> {
        let a = radius.sinh();
        Self::from_fn(|r| (a * (r / a).sin(), (r / a).cos()), std::f64::consts::PI * a, n)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.rho[self.len() - 1] - self.rho[0]) / (self.len() - 1) as f64
    }

    pub fn length(&self) -> f64 {
        self.rho[self.len() - 1] - self.rho[0]
    }

    /// `1 + f² - f'²`, non-negative exactly when the sample is admissible.
    pub fn slack(&self, k: usize) -> f64 {
        1.0 + self.f[k] * self.f[k] - self.fprime[k] * self.fprime[k]
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..self.len() {
            let (r, f, d) = (self.rho[k], self.f[k], self.fprime[k]);
            if !(r.is_finite() && f.is_finite() && d.is_finite()) {
                return Err(Error::Inadmissible { rho: r, reason: "non-finite sample".into() });
            }
            let end = k == 0 || k + 1 == self.len();
            if f < 0.0 || (f == 0.0 && !end) {
                return Err(Error::Inadmissible { rho: r, reason: format!("f = {f} is not positive") });
            }
            if self.slack(k) < -ADMISSIBILITY_SLACK * (1.0 + f * f) {
                return Err(Error::Inadmissible { rho: r, reason: format!("f'^2 = {} exceeds 1 + f^2 = {}", d * d, 1.0 + f * f) });
            }
        }
        Ok(())
    }

    /// Second derivative by fourth-order differences of `f'`.
    pub fn fsecond(&self) -> Vec<f64> {
        derivative(&self.fprime, self.step())
    }

    /// Profile curvature `-f''/f` per sample (undefined where `f = 0`).
    pub fn curvature(&self) -> Vec<Option<f64>> {
        self.fsecond().iter().zip(&self.f).map(|(dd, f)| (*f > 0.0).then(|| -dd / f)).collect()
    }

    /// Quintic Hermite value and derivative of `f` at the midpoint of every interval.
    pub fn midpoints(&self) -> Vec<(f64, f64)> {
        let h = self.step();
        let dd = self.fsecond();
        (0..self.len() - 1)
            .map(|k| {
                let (f0, f1, d0, d1, e0, e1) = (self.f[k], self.f[k + 1], self.fprime[k], self.fprime[k + 1], dd[k], dd[k + 1]);
                let f = 0.5 * (f0 + f1) + 0.15625 * h * (d0 - d1) + 0.015625 * h * h * (e0 + e1);
                let d = 1.875 * (f1 - f0) / h - 0.4375 * (d0 + d1) + 0.03125 * h * (e1 - e0);
                (f, d)
            })
            .collect()
    }

    /// Profile of the rotationally symmetric metric `e^{2w(ϑ)}` times the round metric, `ϑ` the polar angle.
    ///
    /// `ρ(ϑ) = ∫ e^w`, `f = e^w sin ϑ`, `df/dρ = w' sin ϑ + cos ϑ`; resampled at `n` uniform arclengths.
    pub fn from_polar_log_density(w: impl Fn(f64) -> f64, theta_max: f64, n: usize) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= std::f64::consts::PI) || n < 5 {
            return Err(Error::InvalidArgument("polar range must lie in (0, π] with at least 5 samples".into()));
        }
        let m = 16 * n;
        let dt = theta_max / m as f64;
        let th: Vec<f64> = (0..=m).map(|k| k as f64 * dt).collect();
        let ew: Vec<f64> = th.iter().map(|&t| w(t).exp()).collect();
        let mut rho = vec![0.0; m + 1];
        for k in 0..m {
            let mid = w(th[k] + 0.5 * dt).exp();
            rho[k + 1] = rho[k] + dt / 6.0 * (ew[k] + 4.0 * mid + ew[k + 1]);
        }
        let length = rho[m];
        let dw = |t: f64| {
            let e = 1e-5;
            (w(t + e) - w(t - e)) / (2.0 * e)
        };
        let mut out_r = Vec::with_capacity(n);
        let mut out_f = Vec::with_capacity(n);
        let mut out_d = Vec::with_capacity(n);
        let mut k = 0;
        for q in 0..n {
            let target = length * q as f64 / (n - 1) as f64;
            while k + 1 < m && rho[k + 1] < target {
                k += 1;
            }
            // Newton on ρ(ϑ) = target inside the bracketing interval.
            let mut t = th[k] + (target - rho[k]) / (rho[k + 1] - rho[k]) * dt;
            for _ in 0..30 {
                let a = th[k];
                let steps = 8;
                let hh = (t - a) / steps as f64;
                let mut acc = rho[k];
                for s in 0..steps {
                    let x0 = a + s as f64 * hh;
                    acc += hh / 6.0 * (w(x0).exp() + 4.0 * w(x0 + 0.5 * hh).exp() + w(x0 + hh).exp());
                }
                let dt_ = (target - acc) / w(t).exp();
                t += dt_;
                if dt_.abs() < 1e-15 {
                    break;
                }
            }
            let t = t.clamp(0.0, theta_max);
            out_r.push(target);
            out_f.push(w(t).exp() * t.sin());
            out_d.push(dw(t) * t.sin() + t.cos());
        }
        ProfileMetric::new(out_r, out_f, out_d)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["rho", "f", "fprime"]).map_err(io)?;
        for k in 0..self.len() {
            w.write_record([self.rho[k].to_string(), self.f[k].to_string(), self.fprime[k].to_string()]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let (mut rho, mut f, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if rec.len() != 3 {
                return Err(Error::Parse { line, msg: format!("expected 3 columns, found {}", rec.len()) });
            }
            let num = |c: usize| rec[c].trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("column {}: not a number", c + 1) });
            rho.push(num(0)?);
            f.push(num(1)?);
            d.push(num(2)?);
        }
        ProfileMetric::new(rho, f, d)
    }
}

/// Fourth-order finite-difference derivative of uniform samples (one-sided near the ends).
pub(crate) fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let s = if k < 2 {
                let a = &v[..5];
                if k == 0 {
                    -25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2] + 16.0 * a[3] - 3.0 * a[4]
                } else {
                    -3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2] - 6.0 * a[3] + a[4]
                }
            } else if k + 2 >= n {
                let a = &v[n - 5..];
                if k + 1 == n {
                    25.0 * a[4] - 48.0 * a[3] + 36.0 * a[2] - 16.0 * a[1] + 3.0 * a[0]
                } else {
                    3.0 * a[4] + 10.0 * a[3] - 18.0 * a[2] + 6.0 * a[1] - a[0]
                }
            } else {
                v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]
            };
            s / (12.0 * h)
        })
        .collect()
}
