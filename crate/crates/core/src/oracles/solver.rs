use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equations::{EquationSpec, Multiplier};
use crate::error::{LabError, Result};
use crate::spectral::grid::fft_friendly_even;
use crate::spectral::{Norm, PeriodicFrame, SpectralField, MAX_DIM};

/// Blow-up factor over the contraction ball that counts as instability.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub dt: f64,
    /// Evenly spaced output times; the last one is the final time.
    pub snapshots: usize,
    /// Include `(i/2)(v - conj v)`; only meaningful for equations that carry it.
    pub mass_term: bool,
    /// Refuse final times beyond [`contraction_time`].
    pub enforce_radius: bool,
}

impl SolverOptions {
    pub fn new(eq: &EquationSpec, dt: f64) -> Self {
        Self { dt, snapshots: 1, mass_term: eq.mass_term, enforce_radius: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub steps: usize,
    pub dt: f64,
    pub radius_time: f64,
}

impl SolverRun {
    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("at least one state")
    }
}

/// Largest time for which the Duhamel map contracts on the `FL^1` ball of
/// radius `2 ||u0||_{FL^1}`, with the multiplier bounded over the grid.
pub fn contraction_time(eq: &EquationSpec, u0: &SpectralField, mass_term: bool) -> f64 {
    let r = u0.norm(Norm::FL1);
    let p = eq.degree() as i32;
    let grid = u0.grid();
    let mu_max = match eq.nonlinearity.multiplier {
        Multiplier::One | Multiplier::Omega => 1.0,
        Multiplier::IXi => grid.extent() * (grid.dim() as f64).sqrt(),
    };
    let fan = if eq.nonlinearity.real_reduction { 2f64.powi(p) } else { 1.0 };
    let lip = eq.nonlinearity.coefficient.norm() * mu_max * p as f64 * (2.0 * r).powi(p - 1) * fan
        + if mass_term { 1.0 } else { 0.0 };
    if lip == 0.0 {
        f64::INFINITY
    } else {
        0.5 / lip
    }
}

/// Nonlinear part of the right-hand side on the grid, products taken in a
/// zero-padded frame so nothing aliases back onto the grid.
struct Rhs<'a> {
    eq: &'a EquationSpec,
    frame: PeriodicFrame,
    frame_idx: Vec<usize>,
    /// Grid index of `-xi`, `None` when it falls off the grid.
    mirror: Vec<Option<usize>>,
    weight: Vec<Complex64>,
    /// Nodes whose tendency is kept; unpaired nodes stay empty for real data.
    keep: Vec<bool>,
    scale: f64,
    mass: bool,
}

impl<'a> Rhs<'a> {
    fn new(eq: &'a EquationSpec, u0: &SpectralField, mass: bool) -> Self {
        let grid = *u0.grid();
        let d = grid.dim();
        let p = eq.degree();
        let width = ((p + 1) * grid.points()).div_ceil(2) + 1;
        let frame = PeriodicFrame::new(&vec![fft_friendly_even(width); d]);
        let h = grid.spacing();
        let mut frame_idx = Vec::with_capacity(grid.len());
        let mut mirror = Vec::with_capacity(grid.len());
        let mut weight = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let o = grid.offsets_of(idx);
            let mut r = [0i64; MAX_DIM];
            let mut xi = [0.0; MAX_DIM];
            for a in 0..d {
                r[a] = -o[a];
                xi[a] = o[a] as f64 * h;
            }
            frame_idx.push(frame.index(&o[..d]));
            mirror.push(grid.contains_offsets(&r[..d]).then(|| grid.flat_index(&r[..d])));
            weight.push(eq.output_weight(&xi[..d]));
        }
        let scale = grid.cell_volume().powi(p as i32 - 1) / frame.len() as f64;
        // masking the tendency rather than the state keeps the scheme fourth order
        let keep = mirror.iter().map(|m| m.is_some() || !eq.preserves_real_data()).collect();
        Self { eq, frame, frame_idx, mirror, weight, keep, scale, mass }
    }

    fn eval(&self, v: &[Complex64]) -> Vec<Complex64> {
        let p = self.eq.degree();
        let m = self.eq.conj_count();
        let mut buf = self.frame.zeros();
        for (k, &fi) in self.frame_idx.iter().enumerate() {
            buf[fi] = v[k];
        }
        self.frame.inverse(&mut buf);
        for x in buf.iter_mut() {
            *x = if self.eq.nonlinearity.real_reduction {
                Complex64::new(2.0 * x.re, 0.0).powi(p as i32)
            } else {
                x.powi((p - m) as i32) * x.conj().powi(m as i32)
            };
        }
        self.frame.forward(&mut buf);
        let mut out: Vec<Complex64> =
            self.frame_idx.iter().zip(&self.weight).map(|(&fi, w)| w * self.scale * buf[fi]).collect();
        if self.mass {
            let half_i = Complex64::new(0.0, 0.5);
            for (k, o) in out.iter_mut().enumerate() {
                let reflected = self.mirror[k].map_or(Complex64::new(0.0, 0.0), |j| v[j].conj());
                *o += half_i * (v[k] - reflected);
            }
        }
        for (o, &k) in out.iter_mut().zip(&self.keep) {
            if !k {
                *o = Complex64::new(0.0, 0.0);
            }
        }
        out
    }
}

/// Solution at `t` from the integrating-factor fourth-order scheme.
pub fn step_solver(eq: &EquationSpec, u0: &SpectralField, t: f64, dt: f64) -> Result<SpectralField> {
    let run = solve(eq, u0, t, &SolverOptions::new(eq, dt))?;
    Ok(run.last().clone())
}

/// Integrates `v_t = i phi v + c mu N(v)` (plus the mass term when asked)
/// from `u0` up to `t` with the Lawson fourth-order Runge-Kutta scheme: the
/// linear flow is applied exactly and the nonlinearity is stepped explicitly.
pub fn solve(eq: &EquationSpec, u0: &SpectralField, t: f64, opts: &SolverOptions) -> Result<SolverRun> {
    let grid = *u0.grid();
    eq.check_dim(grid.dim())?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(LabError::InvalidArgument(format!("final time must be finite and non-negative, got {t}")));
    }
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(LabError::InvalidArgument(format!("time step must be positive, got {}", opts.dt)));
    }
    let mass = opts.mass_term && eq.mass_term;
    let radius_time = contraction_time(eq, u0, mass);
    if opts.enforce_radius && t > radius_time {
        return Err(LabError::Hypothesis(format!(
            "final time {t:.3e} exceeds the contraction radius {radius_time:.3e}"
        )));
    }
    let steps = ((t / opts.dt * (1.0 - 1e-12)).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let rhs = Rhs::new(eq, u0, mass);
    let h = grid.spacing();
    let d = grid.dim();
    let phase: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let o = grid.offsets_of(idx);
            let mut xi = [0.0; MAX_DIM];
            for a in 0..d {
                xi[a] = o[a] as f64 * h;
            }
            eq.phase(&xi[..d])
        })
        .collect();
    let e_half: Vec<Complex64> = phase.iter().map(|&ph| Complex64::from_polar(1.0, 0.5 * dt * ph)).collect();
    let e_full: Vec<Complex64> = e_half.iter().map(|z| z * z).collect();
    let mut v: Vec<Complex64> = u0.values().to_vec();
    if eq.preserves_real_data() {
        for (x, &k) in v.iter_mut().zip(&rhs.keep) {
            if !k {
                *x = Complex64::new(0.0, 0.0);
            }
        }
    }

    let limit = BLOWUP_FACTOR * 2.0 * u0.norm(Norm::FL1);
    let count = opts.snapshots.max(1);
    let marks: Vec<usize> = (1..=count).map(|j| (j * steps).div_ceil(count)).collect();
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    let mul = |e: &[Complex64], x: &[Complex64]| -> Vec<Complex64> { e.iter().zip(x).map(|(a, b)| a * b).collect() };
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
    };
    let mut next_mark = 0;
    for step in 1..=steps {
        let k1 = rhs.eval(&v);
        let k2 = rhs.eval(&mul(&e_half, &axpy(&v, 0.5 * dt, &k1)));
        let ev_half = mul(&e_half, &v);
        let k3 = rhs.eval(&axpy(&ev_half, 0.5 * dt, &k2));
        let ev_full = mul(&e_full, &v);
        let k4 = rhs.eval(&axpy(&ev_full, dt, &mul(&e_half, &k3)));
        for i in 0..v.len() {
            v[i] = ev_full[i] + dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        let size: f64 = v.iter().map(|z| z.norm()).sum::<f64>() * grid.cell_volume();
        if !size.is_finite() || (limit > 0.0 && size > limit) {
            return Err(LabError::Instability(format!(
                "FL1 norm {size:.3e} after step {step} exceeds {limit:.3e}"
            )));
        }
        while next_mark < marks.len() && marks[next_mark] == step {
            times.push(step as f64 * dt);
            states.push(SpectralField::from_values(grid, v.clone())?);
            next_mark += 1;
        }
    }
    Ok(SolverRun { times, states, steps, dt, radius_time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{DataFamily, GridSpec};

    fn bump(grid: GridSpec, center: f64, amp: f64) -> SpectralField {
        SpectralField::from_fn(grid, |xi| {
            let r2: f64 = xi.iter().map(|x| (x.abs() - center).powi(2)).sum();
            Complex64::new(amp * (-2.0 * r2).exp(), 0.0)
        })
    }

    #[test]
    fn linear_flow_is_exact() {
        let mut eq = EquationSpec::catalog("nls_uu").unwrap();
        eq.nonlinearity.coefficient = Complex64::new(0.0, 0.0);
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = bump(grid, 2.0, 1.0);
        let t = 0.7;
        let out = step_solver(&eq, &u0, t, 0.05).unwrap();
        let exact = u0.multiply_by(|xi| Complex64::from_polar(1.0, t * xi[0] * xi[0]));
        assert!(out.sub(&exact).unwrap().norm(Norm::L2) < 1e-12);
    }

    #[test]
    fn kawahara_keeps_real_data_real() {
        let eq = EquationSpec::kawahara(1).unwrap();
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = DataFamily::kawahara_window(3.0, -2.5).unwrap().build(&grid).unwrap().scale(Complex64::new(0.01, 0.0));
        let run = solve(&eq, &u0, 0.004, &SolverOptions { snapshots: 4, ..SolverOptions::new(&eq, 1e-4) }).unwrap();
        assert_eq!(run.states.len(), 4);
        for s in &run.states {
            assert!(s.hermitian_defect() < 1e-10);
        }
    }

    #[test]
    fn refuses_times_beyond_the_radius() {
        let eq = EquationSpec::catalog("nls_uu").unwrap();
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = bump(grid, 2.0, 10.0);
        let tr = contraction_time(&eq, &u0, false);
        assert!(matches!(step_solver(&eq, &u0, 2.0 * tr, tr / 10.0), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let eq = EquationSpec::catalog("nls_uu").unwrap();
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = bump(grid, 0.0, 3.0);
        let opts = SolverOptions { enforce_radius: false, ..SolverOptions::new(&eq, 0.5) };
        assert!(matches!(solve(&eq, &u0, 50.0, &opts), Err(LabError::Instability(_))));
    }

    #[test]
    fn mass_term_effect_is_linear_in_time() {
        let eq = EquationSpec::boussinesq(2).unwrap();
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = bump(grid, 2.0, 0.2);
        let t = 0.05;
        let with = step_solver(&eq, &u0, t, 0.005).unwrap();
        let opts = SolverOptions { mass_term: false, ..SolverOptions::new(&eq, 0.005) };
        let without = solve(&eq, &u0, t, &opts).unwrap();
        let gap = with.sub(without.last()).unwrap().norm(Norm::L2);
        assert!(gap > 0.0);
        assert!(gap <= 1.1 * t * u0.norm(Norm::L2));
    }
}
