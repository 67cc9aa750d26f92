use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Low-frequency weight `F_s(A)` of the Sobolev iterate bound.
///
/// At `s = -d/2` the logarithmic branch uses `log<A>`, so it does not match
/// the `A <= 1` branch at `A = 1`.
pub fn f_s(a: f64, s: f64, d: usize) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(LabError::InvalidArgument(format!("need A > 0, got {a}")));
    }
    if s >= 0.0 {
        return Err(LabError::Hypothesis(format!("hypothesis s<0 violated (s = {s})")));
    }
    let half_d = d as f64 / 2.0;
    if a <= 1.0 {
        return Ok(a.powf(half_d));
    }
    Ok(if is_critical(s, d) {
        (0.5 * (1.0 + a * a).ln()).sqrt()
    } else if s > -half_d {
        a.powf(s + half_d)
    } else {
        1.0
    })
}

pub(crate) fn is_critical(s: f64, d: usize) -> bool {
    (s + d as f64 / 2.0).abs() < 1e-12
}

/// Norms of the datum entering the envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub fl1: f64,
    pub l2: f64,
    pub hs: f64,
}

impl DataNorms {
    /// `‖u0‖_D` with `D = L2 ∩ FL1`.
    pub fn d(&self) -> f64 {
        self.fl1.max(self.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnvelopeVariant {
    /// Step `C_1 t^{1/(p-1)} ‖u0‖_FL1`.
    Standard { p: usize },
    /// Step `C_1 N t ‖u0‖_FL1`.
    Kawahara { n: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub fl1: f64,
    pub l2: f64,
    pub hs: f64,
}

/// Bounds on `‖I_n(t)‖` in FL1, L2 and H^s.
///
/// `c1` is the step constant of the FL1/L2 bounds, `c_hs` the per-level
/// constant of the Sobolev bound and `f_s` its low-frequency weight (1 for
/// the derivative variant).
pub fn envelope(n: usize, t: f64, norms: &DataNorms, variant: EnvelopeVariant, c1: f64, c_hs: f64, f_s: f64) -> Envelope {
    if n <= 1 {
        return Envelope { fl1: norms.fl1, l2: norms.l2, hs: norms.hs };
    }
    let time_step = match variant {
        EnvelopeVariant::Standard { p } => t.powf(1.0 / (p - 1) as f64),
        EnvelopeVariant::Kawahara { n } => n * t,
    };
    let k = (n - 1) as i32;
    let step = c1 * time_step * norms.fl1;
    Envelope {
        fl1: step.powi(k) * norms.fl1,
        l2: step.powi(k) * norms.l2,
        hs: c_hs.powi(n as i32) * time_step.powi(k) * norms.fl1.powi(n as i32 - 2) * norms.l2 * norms.l2 * f_s,
    }
}

/// Envelope ratio `r_n = (‖I_n‖_FL1 / ‖u0‖_FL1)^{1/(n-1)} / step` with
/// `step = t^{1/(p-1)} ‖u0‖_FL1` (or `N t ‖u0‖_FL1`).
pub fn envelope_ratio(n: usize, norm_fl1: f64, t: f64, data_fl1: f64, variant: EnvelopeVariant) -> f64 {
    let time_step = match variant {
        EnvelopeVariant::Standard { p } => t.powf(1.0 / (p - 1) as f64),
        EnvelopeVariant::Kawahara { n } => n * t,
    };
    (norm_fl1 / data_fl1).powf(1.0 / (n - 1) as f64) / (time_step * data_fl1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_s_branches() {
        assert!((f_s(16.0, -0.25, 1).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(f_s(100.0, -3.0, 2).unwrap(), 1.0);
        assert_eq!(f_s(0.25, -0.3, 2).unwrap(), 0.25);
        assert_eq!(f_s(1.0, -0.2, 1).unwrap(), 1.0);
        assert_eq!(f_s(1.0, -0.7, 1).unwrap(), 1.0);
        assert!((f_s(3.0, -0.5, 1).unwrap() - (0.5 * 10f64.ln()).sqrt()).abs() < 1e-12);
        assert!(matches!(f_s(2.0, 0.0, 1), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn first_envelope_is_the_data() {
        let norms = DataNorms { fl1: 3.0, l2: 2.0, hs: 0.5 };
        let e = envelope(1, 0.1, &norms, EnvelopeVariant::Standard { p: 2 }, 4.0, 4.0, 1.0);
        assert_eq!((e.fl1, e.l2, e.hs), (3.0, 2.0, 0.5));
    }

    #[test]
    fn envelope_is_geometric() {
        let norms = DataNorms { fl1: 3.0, l2: 2.0, hs: 0.5 };
        let (t, c1, p) = (0.01, 2.0, 3);
        let v = EnvelopeVariant::Standard { p };
        let r = |n: usize| envelope(n + p - 1, t, &norms, v, c1, 1.0, 1.0).fl1 / envelope(n, t, &norms, v, c1, 1.0, 1.0).fl1;
        let expect = (c1 * t.powf(0.5) * norms.fl1).powi(p as i32 - 1);
        for n in 1..6 {
            assert!((r(n) - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn derivative_second_level_sobolev_envelope() {
        let norms = DataNorms { fl1: 3.0, l2: 2.0, hs: 0.5 };
        let e = envelope(2, 1e-3, &norms, EnvelopeVariant::Kawahara { n: 64.0 }, 1.0, 1.0, 1.0);
        assert!((e.hs - 64.0 * 1e-3 * 4.0).abs() < 1e-12);
    }
}
