use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Knot interval of the sampled representation; the bridge ends are always knots.
pub const KNOT_MIN: f64 = -1.0;
pub const KNOT_MAX: f64 = 3.0;
pub const DEFAULT_STEP: f64 = 1e-3;

/// A concave cut-off `φ`: the identity up to `1 - ε`, a smooth bridge, then the constant 1 from `1 + ε`.
///
/// The bridge has slope `1 - S(s)` with `S` the quintic smoothstep and
/// `s = (x - 1 + ε) / 2ε`, so it integrates to exactly 1 at `1 + ε`.
/// Values are stored at knots with their first two derivatives and
/// evaluated between knots by quintic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    pub bridge_epsilon: f64,
    pub step: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub ddphi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub knots: usize,
    pub min_margin: f64,
    pub min_margin_at: f64,
    pub min_midpoint_margin: f64,
    pub max_dphi: f64,
    pub min_dphi: f64,
    pub max_ddphi: f64,
}

fn smoothstep(s: f64) -> f64 {
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

fn smoothstep_d(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// `∫₀ˢ S`.
fn smoothstep_int(s: f64) -> f64 {
    s.powi(4) * (2.5 + s * (-3.0 + s))
}

impl CutoffFunction {
    fn closed(eps: f64, x: f64) -> (f64, f64, f64) {
        let a = 1.0 - eps;
        if x <= a {
            return (x, 1.0, 0.0);
        }
        if x >= 1.0 + eps {
            return (1.0, 0.0, 0.0);
        }
        let s = ((x - a) / (2.0 * eps)).clamp(0.0, 1.0);
        let phi = (a + 2.0 * eps * (s - smoothstep_int(s))).min(1.0);
        (phi, smoothstep(1.0 - s), -smoothstep_d(s) / (2.0 * eps))
    }

    fn bridge(&self) -> (f64, f64) {
        (1.0 - self.bridge_epsilon, 1.0 + self.bridge_epsilon)
    }

    /// Margin `e^{2(φ - x)} - φ'` of the exponential inequality.
    pub fn margin_at(phi: f64, dphi: f64, x: f64) -> f64 {
        (2.0 * (phi - x)).exp() - dphi
    }

    /// Builds and certifies the cut-off with knot spacing `step`.
    pub fn with_step(bridge_epsilon: f64, step: f64) -> Result<Self> {
        if !(bridge_epsilon > 0.0 && bridge_epsilon < 0.5) {
            return Err(Error::InvalidArgument(format!("bridge epsilon {bridge_epsilon} outside (0, 0.5)")));
        }
        if !(step > 0.0 && step <= DEFAULT_STEP) {
            return Err(Error::InvalidArgument(format!("knot step {step} outside (0, 1e-3]")));
        }
        // Bridge ends are knots so each interval sees a smooth piece.
        let breaks = [KNOT_MIN, 1.0 - bridge_epsilon, 1.0 + bridge_epsilon, KNOT_MAX];
        let mut x = vec![KNOT_MIN];
        for w in breaks.windows(2) {
            let m = ((w[1] - w[0]) / step).ceil() as usize;
            for k in 1..=m {
                x.push(if k == m { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / m as f64 });
            }
        }
        let f = Self::from_closed(bridge_epsilon, x);
        f.certify()?;
        Ok(f)
    }

    fn from_closed(bridge_epsilon: f64, x: Vec<f64>) -> Self {
        let vals: Vec<(f64, f64, f64)> = x.iter().map(|&t| Self::closed(bridge_epsilon, t)).collect();
        let step = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        CutoffFunction {
            bridge_epsilon,
            step,
            phi: vals.iter().map(|v| v.0).collect(),
            dphi: vals.iter().map(|v| v.1).collect(),
            ddphi: vals.iter().map(|v| v.2).collect(),
            x,
        }
    }

    /// Interval index and its width.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.x.partition_point(|&t| t <= x).saturating_sub(1).min(self.x.len() - 2);
        (k, self.x[k + 1] - self.x[k])
    }

    /// `(φ, φ', φ'')` at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (a, b) = self.bridge();
        if x <= a {
            return (x, 1.0, 0.0);
        }
        if x >= b {
            return (1.0, 0.0, 0.0);
        }
        let (k, h) = self.locate(x);
        let t = (x - self.x[k]) / h;
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let (d0, d1) = (self.dphi[k] * h, self.dphi[k + 1] * h);
        let (s0, s1) = (self.ddphi[k] * h * h, self.ddphi[k + 1] * h * h);
        // Quintic Hermite basis on [0, 1].
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        let d_h00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let d_h10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let d_h20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let d_h01 = -d_h00;
        let d_h11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let d_h21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let dd_h00 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
        let dd_h10 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
        let dd_h20 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3);
        let dd_h01 = -dd_h00;
        let dd_h11 = -24.0 * t + 84.0 * t2 - 60.0 * t3;
        let dd_h21 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3);
        let v = p0 * h00 + d0 * h10 + s0 * h20 + p1 * h01 + d1 * h11 + s1 * h21;
        let dv = p0 * d_h00 + d0 * d_h10 + s0 * d_h20 + p1 * d_h01 + d1 * d_h11 + s1 * d_h21;
        let ddv = p0 * dd_h00 + d0 * dd_h10 + s0 * dd_h20 + p1 * dd_h01 + d1 * dd_h11 + s1 * dd_h21;
        (v, dv / h, ddv / (h * h))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// Knot-wise certification of the four defining conditions, plus the
    /// exponential inequality at interval midpoints of the interpolant.
    pub fn certify(&self) -> Result<CertificationReport> {
        let fail = |x: f64, reason: String| Err(Error::Certification { x, reason });
        let mut rep = CertificationReport {
            knots: self.x.len(),
            min_margin: f64::INFINITY,
            min_margin_at: f64::NAN,
            min_midpoint_margin: f64::INFINITY,
            max_dphi: f64::NEG_INFINITY,
            min_dphi: f64::INFINITY,
            max_ddphi: f64::NEG_INFINITY,
        };
        for k in 0..self.x.len() {
            let (x, p, d, dd) = (self.x[k], self.phi[k], self.dphi[k], self.ddphi[k]);
            if !(p.is_finite() && d.is_finite() && dd.is_finite()) {
                return fail(x, "non-finite knot value".into());
            }
            if x <= 0.0 && p != x {
                return fail(x, format!("phi = {p} differs from x"));
            }
            if x >= 2.0 && p != 1.0 {
                return fail(x, format!("phi = {p} differs from 1"));
            }
            if (0.0..=2.0).contains(&x) {
                if !(0.0..=1.0).contains(&d) {
                    return fail(x, format!("phi' = {d} outside [0, 1]"));
                }
                if dd > 0.0 {
                    return fail(x, format!("phi'' = {dd} > 0"));
                }
                if x >= 0.0 && p > x {
                    return fail(x, format!("phi = {p} exceeds x"));
                }
                rep.max_dphi = rep.max_dphi.max(d);
                rep.min_dphi = rep.min_dphi.min(d);
                rep.max_ddphi = rep.max_ddphi.max(dd);
                let m = Self::margin_at(p, d, x);
                if m < 0.0 {
                    return fail(x, format!("exponential margin {m:e} < 0"));
                }
                if m < rep.min_margin {
                    rep.min_margin = m;
                    rep.min_margin_at = x;
                }
                if k + 1 < self.x.len() {
                    // Finite-difference checks of monotone slope and concavity between knots.
                    if self.dphi[k + 1] > d + 1e-15 {
                        return fail(x, "phi' increases between knots".into());
                    }
                    let dx = self.x[k + 1] - x;
                    let chord = (self.phi[k + 1] - p) / dx;
                    if chord > 1.0 + 1e-12 || chord < -1e-12 {
                        return fail(x, format!("chord slope {chord} outside [0, 1]"));
                    }
                    let xm = x + 0.5 * dx;
                    let (pm, dm, _) = self.eval3(xm);
                    let mm = Self::margin_at(pm, dm, xm);
                    if mm < 0.0 {
                        return fail(xm, format!("midpoint margin {mm:e} < 0"));
                    }
                    rep.min_midpoint_margin = rep.min_midpoint_margin.min(mm);
                }
            }
        }
        Ok(rep)
    }

    /// Same function with every knot interval halved.
    pub fn refined(&self) -> Result<Self> {
        let mut x = Vec::with_capacity(2 * self.x.len());
        for w in self.x.windows(2) {
            x.push(w[0]);
            x.push(0.5 * (w[0] + w[1]));
        }
        x.push(self.x[self.x.len() - 1]);
        let f = Self::from_closed(self.bridge_epsilon, x);
        f.certify()?;
        Ok(f)
    }

    /// Recertifies at half the step; returns the change in the minimum knot margin.
    pub fn refinement_stability(&self) -> Result<f64> {
        let coarse = self.certify()?;
        let fine = self.refined()?.certify()?;
        Ok((coarse.min_margin - fine.min_margin).abs())
    }

    /// `φ_n(x) = n + φ(x - n)`, exactly `x` below `n + 1 - ε` and `n + 1` above `n + 1 + ε`.
    pub fn phi_n(&self, n: i32, x: f64) -> f64 {
        self.phi_n3(n, x).0
    }

    pub fn phi_n3(&self, n: i32, x: f64) -> (f64, f64, f64) {
        let nf = n as f64;
        let (a, b) = self.bridge();
        if x <= nf + a {
            return (x, 1.0, 0.0);
        }
        if x >= nf + b {
            return (nf + 1.0, 0.0, 0.0);
        }
        let (p, d, dd) = self.eval3(x - nf);
        (nf + p, d, dd)
    }

    /// CSV with columns `x,phi,dphi,margin`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["x", "phi", "dphi", "margin"]).map_err(io)?;
        for k in 0..self.x.len() {
            let m = Self::margin_at(self.phi[k], self.dphi[k], self.x[k]);
            w.write_record([self.x[k].to_string(), self.phi[k].to_string(), self.dphi[k].to_string(), m.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads knots back; `φ''` is rebuilt by centered differences of `φ'` and the result is recertified.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let (mut x, mut phi, mut dphi) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if rec.len() != 4 {
                return Err(Error::Parse { line, msg: format!("expected 4 columns, found {}", rec.len()) });
            }
            let num = |c: usize| rec[c].trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("column {}: not a number", c + 1) });
            x.push(num(0)?);
            phi.push(num(1)?);
            dphi.push(num(2)?);
        }
        if x.len() < 3 {
            return Err(Error::Parse { line: 1, msg: "too few knots".into() });
        }
        for k in 1..x.len() {
            if !(x[k] > x[k - 1]) {
                return Err(Error::Parse { line: k + 2, msg: "knots are not increasing".into() });
            }
        }
        let step = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if step > DEFAULT_STEP * (1.0 + 1e-9) {
            return Err(Error::Parse { line: 1, msg: format!("knot spacing {step} exceeds {DEFAULT_STEP}") });
        }
        let n = x.len();
        let ddphi: Vec<f64> = (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (dphi[b] - dphi[a]) / (x[b] - x[a])
            })
            .collect();
        let start = (0..n).filter(|&k| dphi[k] == 1.0 && phi[k] == x[k]).map(|k| x[k]).fold(f64::NEG_INFINITY, f64::max);
        let end = (0..n).filter(|&k| dphi[k] == 0.0 && phi[k] == 1.0).map(|k| x[k]).fold(f64::INFINITY, f64::min);
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Parse { line: 1, msg: "knots do not contain a bridge between identity and constant parts".into() });
        }
        let f = CutoffFunction { bridge_epsilon: 0.5 * (end - start), step, x, phi, dphi, ddphi };
        f.certify()?;
        Ok(f)
    }
}

/// `build_cutoff` at the default knot step.
pub fn build_cutoff(bridge_epsilon: f64) -> Result<CutoffFunction> {
    CutoffFunction::with_step(bridge_epsilon, DEFAULT_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_exact() {
        let f = build_cutoff(0.2).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(-0.37), -0.37);
        assert_eq!(f.phi_n(3, 3.0), 3.0);
        assert_eq!(f.phi_n(3, 5.0), 4.0);
        assert_eq!(f.phi_n(4, 2.1), 2.1);
    }

    #[test]
    fn interpolant_matches_closed_form() {
        let f = build_cutoff(0.3).unwrap();
        for k in 0..500 {
            let x = 0.7 + 0.6 * k as f64 / 499.0 + 1.3e-5;
            let (p, d, dd) = f.eval3(x);
            let (q, e, ee) = CutoffFunction::closed(0.3, x);
            assert!((p - q).abs() < 1e-13 && (d - e).abs() < 1e-10 && (dd - ee).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(build_cutoff(0.0).is_err());
        assert!(build_cutoff(0.5).is_err());
    }

    #[test]
    fn csv_round_trip_recertifies() {
        let f = build_cutoff(0.2).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = CutoffFunction::read_csv(buf.as_slice()).unwrap();
        assert!((g.bridge_epsilon - 0.2).abs() < 2e-3);
        assert_eq!(g.phi, f.phi);
        assert!(CutoffFunction::read_csv("x,phi,dphi,margin\n1,2\n".as_bytes()).is_err());
    }
}
