//! Implicit midpoint time stepping and forcing.

use nalgebra::{DMatrix, DVector, Vector3, LU};
use serde::{Deserialize, Serialize};

use crate::coupled::{CoupledSystem, SecondOrderSystem, LOAD_CHANNELS};
use crate::energy::{energy, EnergyReport};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Time history of one load channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub enum Channel<T> {
    #[default]
    Zero,
    /// `amplitude * sin(angular_frequency * t + phase)`.
    Sinusoid {
        amplitude: T,
        angular_frequency: T,
        #[serde(default)]
        phase: T,
    },
    /// `rate * min(t, t_end)`.
    Ramp { rate: T, t_end: T },
    /// Piecewise linear through `(t, f)`, held constant outside.
    Table { t: Vec<T>, f: Vec<T> },
}

impl<T: Scalar> Channel<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            Channel::Zero => T::zero(),
            Channel::Sinusoid { amplitude, angular_frequency, phase } => *amplitude * (*angular_frequency * t + *phase).sin(),
            Channel::Ramp { rate, t_end } => *rate * t.min(*t_end).max(T::zero()),
            Channel::Table { t: ts, f } => {
                if t <= ts[0] {
                    return f[0];
                }
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return f[last];
                }
                let k = ts.partition_point(|&s| s <= t) - 1;
                let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
                f[k] + w * (f[k + 1] - f[k])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Channel::Zero => true,
            Channel::Sinusoid { amplitude, .. } => *amplitude == T::zero(),
            Channel::Ramp { rate, .. } => *rate == T::zero(),
            Channel::Table { f, .. } => f.iter().all(|v| *v == T::zero()),
        }
    }

    /// Checks well-formedness and that a table covers `[0, horizon]`.
    pub fn validate(&self, name: &str, horizon: T) -> Result<()> {
        let finite = |v: &T| v.is_finite();
        match self {
            Channel::Zero => Ok(()),
            Channel::Sinusoid { amplitude, angular_frequency, phase } => {
                if [amplitude, angular_frequency, phase].into_iter().all(finite) {
                    Ok(())
                } else {
                    Err(Error::Forcing(format!("{name}: non-finite sinusoid parameter")))
                }
            }
            Channel::Ramp { rate, t_end } => {
                if finite(rate) && finite(t_end) && *t_end >= T::zero() {
                    Ok(())
                } else {
                    Err(Error::Forcing(format!("{name}: ramp needs finite rate and t_end >= 0")))
                }
            }
            Channel::Table { t, f } => {
                if t.len() < 2 || t.len() != f.len() {
                    return Err(Error::Forcing(format!("{name}: table needs at least two (t, f) pairs of equal length")));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Forcing(format!("{name}: table times must increase strictly")));
                }
                if !t.iter().chain(f.iter()).all(finite) {
                    return Err(Error::Forcing(format!("{name}: non-finite table entry")));
                }
                if t[0] > T::zero() || t[t.len() - 1] < horizon {
                    return Err(Error::Forcing(format!("{name}: table does not cover [0, {horizon}]")));
                }
                Ok(())
            }
        }
    }
}

/// Loads on `[F_ext (3); F_tip; M_tip]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub struct ForcingSpec<T> {
    #[serde(default)]
    pub f_ext: [Channel<T>; 3],
    #[serde(default)]
    pub f_tip: Channel<T>,
    #[serde(default)]
    pub m_tip: Channel<T>,
}

impl<T: Scalar> ForcingSpec<T> {
    pub fn zero() -> Self {
        ForcingSpec { f_ext: [Channel::Zero, Channel::Zero, Channel::Zero], f_tip: Channel::Zero, m_tip: Channel::Zero }
    }

    pub fn channels(&self) -> [&Channel<T>; LOAD_CHANNELS] {
        [&self.f_ext[0], &self.f_ext[1], &self.f_ext[2], &self.f_tip, &self.m_tip]
    }

    pub fn eval(&self, t: T) -> DVector<T> {
        DVector::from_iterator(LOAD_CHANNELS, self.channels().iter().map(|c| c.eval(t)))
    }

    pub fn is_zero(&self) -> bool {
        self.channels().iter().all(|c| c.is_zero())
    }

    pub fn validate(&self, horizon: T) -> Result<()> {
        let names = ["f_ext[0]", "f_ext[1]", "f_ext[2]", "f_tip", "m_tip"];
        for (c, name) in self.channels().iter().zip(names) {
            c.validate(name, horizon)?;
        }
        Ok(())
    }
}

/// Initial data in reduced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData<T: Scalar> {
    pub v0: DVector<T>,
    pub v1: DVector<T>,
    pub q0: Vector3<T>,
    pub q1: Vector3<T>,
    /// Beam DOFs of nodes `1..n`.
    pub w0: DVector<T>,
    pub w1: DVector<T>,
}

impl<T: Scalar> InitialData<T> {
    pub fn zeros(sys: &CoupledSystem<T>) -> Self {
        let (ns, nb) = (sys.layout.n_surface, sys.layout.n_beam);
        InitialData {
            v0: DVector::zeros(ns),
            v1: DVector::zeros(ns),
            q0: Vector3::zeros(),
            q1: Vector3::zeros(),
            w0: DVector::zeros(nb),
            w1: DVector::zeros(nb),
        }
    }

    /// Builds reduced data from full beam fields, rejecting clamp mismatches above `1e-9`.
    pub fn from_full(
        sys: &CoupledSystem<T>,
        v0: DVector<T>,
        v1: DVector<T>,
        q0: Vector3<T>,
        q1: Vector3<T>,
        w0_full: &DVector<T>,
        w1_full: &DVector<T>,
    ) -> Result<Self> {
        let nf = sys.beam.n_dofs();
        if w0_full.len() != nf || w1_full.len() != nf {
            return Err(Error::Dimension(format!("beam fields need {nf} entries")));
        }
        let arm = sys.beam.params.y0 - sys.y_g;
        let tol = T::lit(1e-9);
        for (label, q, w) in [("position", &q0, w0_full), ("velocity", &q1, w1_full)] {
            let scale = T::one() + q.amax() * (T::one() + arm.abs());
            let dw = (w[0] - (q[0] + arm * q[2])).abs();
            let dr = (w[1] - q[2]).abs();
            if dw > tol * scale || dr > tol * scale {
                return Err(Error::Compatibility(format!("initial {label} violates the clamp conditions (mismatch {:e}, {:e})", dw, dr)));
            }
        }
        Ok(InitialData { v0, v1, q0, q1, w0: w0_full.rows(2, nf - 2).into_owned(), w1: w1_full.rows(2, nf - 2).into_owned() })
    }

    pub fn to_state(&self, sys: &CoupledSystem<T>) -> Result<SimState<T>> {
        let l = sys.layout;
        if self.v0.len() != l.n_surface || self.v1.len() != l.n_surface || self.w0.len() != l.n_beam || self.w1.len() != l.n_beam {
            return Err(Error::Dimension("initial data does not match the DOF layout".into()));
        }
        let pack = |v: &DVector<T>, q: &Vector3<T>, w: &DVector<T>| {
            let mut out = DVector::zeros(l.total());
            out.rows_range_mut(l.fluid()).copy_from(v);
            out.rows_range_mut(l.platform()).copy_from(q);
            out.rows_range_mut(l.beam()).copy_from(w);
            out
        };
        Ok(SimState { t: T::zero(), x: pack(&self.v0, &self.q0, &self.w0), y: pack(&self.v1, &self.q1, &self.w1), step: 0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T: Scalar> {
    pub t: T,
    pub x: DVector<T>,
    /// Velocities.
    pub y: DVector<T>,
    pub step: usize,
}

impl<T: Scalar> SimState<T> {
    pub fn zeros(n: usize) -> Self {
        SimState { t: T::zero(), x: DVector::zeros(n), y: DVector::zeros(n), step: 0 }
    }
}

/// Midpoint stepper holding the factorized `M + dt/2 G + dt^2/4 K`.
pub struct Integrator<'a, T: Scalar> {
    sys: &'a SecondOrderSystem<T>,
    dt: T,
    lhs: DMatrix<T>,
    scale: DVector<T>,
    lu: LU<T, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a, T: Scalar> Integrator<'a, T> {
    /// `dt` may be negative to run backwards.
    pub fn new(sys: &'a SecondOrderSystem<T>, dt: T) -> Result<Self> {
        if dt == T::zero() || !dt.is_finite() {
            return Err(Error::Config("time step must be finite and nonzero".into()));
        }
        let scale = DVector::from_fn(sys.dim(), |i, _| {
            let d = sys.mass[(i, i)];
            if d > T::zero() {
                T::one() / d.sqrt()
            } else {
                T::one()
            }
        });
        let (lhs, lu) = Self::factor(sys, dt, &scale)?;
        Ok(Integrator { sys, dt, lhs, scale, lu })
    }

    fn factor(sys: &SecondOrderSystem<T>, dt: T, scale: &DVector<T>) -> Result<(DMatrix<T>, LU<T, nalgebra::Dyn, nalgebra::Dyn>)> {
        let half = T::lit(0.5) * dt;
        let quarter = T::lit(0.25) * dt * dt;
        let lhs = &sys.mass + &sys.gyroscopic * half + &sys.stiffness * quarter;
        let scaled = DMatrix::from_fn(lhs.nrows(), lhs.ncols(), |i, j| scale[i] * lhs[(i, j)] * scale[j]);
        let lu = LU::new(scaled);
        if !lu.is_invertible() {
            return Err(Error::Solve("midpoint matrix is singular".into()));
        }
        Ok((lhs, lu))
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Refactors when the step size changes.
    pub fn set_dt(&mut self, dt: T) -> Result<()> {
        if dt != self.dt {
            if dt == T::zero() || !dt.is_finite() {
                return Err(Error::Config("time step must be finite and nonzero".into()));
            }
            let (lhs, lu) = Self::factor(self.sys, dt, &self.scale)?;
            self.dt = dt;
            self.lhs = lhs;
            self.lu = lu;
        }
        Ok(())
    }

    fn solve(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        let scaled = rhs.component_mul(&self.scale);
        let u = self.lu.solve(&scaled).ok_or_else(|| Error::Solve("midpoint solve failed".into()))?;
        Ok(u.component_mul(&self.scale))
    }

    /// One step; returns the new state and the midpoint work `dt f^T B^T (y0 + y1) / 2`.
    pub fn step(&self, state: &SimState<T>, forcing: &ForcingSpec<T>) -> Result<(SimState<T>, T)> {
        let dt = self.dt;
        let half = T::lit(0.5);
        let s = self.sys;
        let f = forcing.eval(state.t + half * dt);
        let bf = &s.load * &f;
        let ky = &s.stiffness * &state.y;
        let kx = &s.stiffness * &state.x;
        let rhs = &s.mass * &state.y - (&s.gyroscopic * &state.y) * (half * dt) - ky * (T::lit(0.25) * dt * dt) - kx * dt + &bf * dt;
        let mut y1 = self.solve(&rhs)?;
        let residual = &rhs - &self.lhs * &y1;
        y1 += self.solve(&residual)?;
        let vmid = (&state.y + &y1) * half;
        let x1 = &state.x + &vmid * dt;
        let step = state.step + 1;
        if !x1.iter().chain(y1.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step, what: "state vector".into() });
        }
        let work = dt * bf.dot(&vmid);
        Ok((SimState { t: state.t + dt, x: x1, y: y1, step }, work))
    }
}

/// Free-function form of a single midpoint step (factorizes on every call).
pub fn step_midpoint<T: Scalar>(sys: &SecondOrderSystem<T>, state: &SimState<T>, dt: T, forcing: &ForcingSpec<T>) -> Result<SimState<T>> {
    Integrator::new(sys, dt)?.step(state, forcing).map(|(s, _)| s)
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord<T> {
    pub step: usize,
    pub t: T,
    pub q: [T; 3],
    pub qd: [T; 3],
    pub w_tip: T,
    pub wth_tip: T,
    pub v_probe: T,
    pub energy: EnergyReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings<T> {
    pub dt: T,
    pub duration: T,
    pub output_every: usize,
    /// Surface abscissa sampled for `v_probe`.
    pub probe_x: T,
}

impl<T: Scalar> RunSettings<T> {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !(self.duration > T::zero()) || !self.dt.is_finite() || !self.duration.is_finite() {
            return Err(Error::Config("dt and duration must be positive".into()));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        let n = (self.duration / self.dt - T::lit(1e-9)).ceil();
        Ok(n.to_f64_lossy() as usize)
    }
}

pub fn record<T: Scalar>(sys: &CoupledSystem<T>, state: &SimState<T>, probe_x: T, e0: T, work: T) -> Result<SimRecord<T>> {
    let q = sys.platform_part(&state.x);
    let qd = sys.platform_part(&state.y);
    let l = sys.layout;
    let v = state.x.rows_range(l.fluid()).into_owned();
    let v_probe = if l.n_surface > 0 { interpolate(&sys.surface_x, &v, probe_x) } else { T::zero() };
    Ok(SimRecord {
        step: state.step,
        t: state.t,
        q: [q[0], q[1], q[2]],
        qd: [qd[0], qd[1], qd[2]],
        w_tip: state.x[l.tip_deflection()],
        wth_tip: state.x[l.tip_rotation()],
        v_probe,
        energy: energy(sys, &state.x, &state.y)?.with_balance(e0, work),
    })
}

fn interpolate<T: Scalar>(xs: &[T], v: &DVector<T>, x: T) -> T {
    match xs.iter().position(|&xi| xi >= x) {
        Some(0) => v[0],
        None => v[xs.len() - 1],
        Some(k) if xs[k] == x || xs[k] == xs[k - 1] => v[k],
        Some(k) => {
            let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            v[k - 1] * (T::one() - w) + v[k] * w
        }
    }
}

/// Runs the coupled system, handing every `output_every`-th record (and the last) to `sink`.
pub fn simulate_with<T: Scalar>(
    sys: &CoupledSystem<T>,
    init: &InitialData<T>,
    forcing: &ForcingSpec<T>,
    settings: &RunSettings<T>,
    mut sink: impl FnMut(&SimRecord<T>) -> Result<()>,
) -> Result<SimState<T>> {
    let steps = settings.steps()?;
    forcing.validate(settings.duration)?;
    let mut state = init.to_state(sys)?;
    let integrator = Integrator::new(&sys.system, settings.dt)?;
    let e0 = energy(sys, &state.x, &state.y)?.total;
    let mut work = T::zero();
    sink(&record(sys, &state, settings.probe_x, e0, work)?)?;
    for k in 1..=steps {
        let (mut next, dw) = integrator.step(&state, forcing).map_err(|e| Error::AtStep { step: k, source: Box::new(e) })?;
        next.t = settings.dt * T::from_usize_lossy(k);
        state = next;
        work += dw;
        if k % settings.output_every == 0 || k == steps {
            sink(&record(sys, &state, settings.probe_x, e0, work)?)?;
        }
    }
    Ok(state)
}

pub fn simulate<T: Scalar>(
    sys: &CoupledSystem<T>,
    init: &InitialData<T>,
    forcing: &ForcingSpec<T>,
    settings: &RunSettings<T>,
) -> Result<Vec<SimRecord<T>>> {
    let mut out = Vec::new();
    simulate_with(sys, init, forcing, settings, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::tests::small;
    use crate::coupled::AssemblyOptions;

    fn mixed_state(sys: &CoupledSystem<f64>) -> InitialData<f64> {
        let mut init = InitialData::zeros(sys);
        let n = sys.surface_x.len();
        init.v0 = DVector::from_fn(n, |i, _| (0.3 * sys.surface_x[i]).cos());
        init.q1 = Vector3::new(0.01, -0.02, 0.003);
        let tip = init.w0.len() - 2;
        init.w0[tip] = 0.05;
        init
    }

    #[test]
    fn zero_data_stays_zero() {
        let a = small(AssemblyOptions::default());
        let n = a.system.dim();
        let integ = Integrator::new(&a.system.system, 0.05).unwrap();
        let (s, w) = integ.step(&SimState::zeros(n), &ForcingSpec::zero()).unwrap();
        assert_eq!(s.x.amax(), 0.0);
        assert_eq!(s.y.amax(), 0.0);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn unforced_energy_conserved() {
        let a = small(AssemblyOptions::default());
        let settings = RunSettings { dt: 0.05, duration: 10.0, output_every: 1, probe_x: 20.0 };
        let rec = simulate(&a.system, &mixed_state(&a.system), &ForcingSpec::zero(), &settings).unwrap();
        let e0 = rec[0].energy.total;
        assert!(e0 > 0.0);
        for r in &rec {
            assert!(r.energy.residual.abs() <= 1e-10 * e0);
        }
        assert_eq!(rec.len(), 201);
    }

    #[test]
    fn forced_balance_holds() {
        let a = small(AssemblyOptions::default());
        let mut forcing = ForcingSpec::zero();
        forcing.f_tip = Channel::Sinusoid { amplitude: 1e3, angular_frequency: 1.3, phase: 0.0 };
        forcing.f_ext[0] = Channel::Ramp { rate: 50.0, t_end: 2.0 };
        let settings = RunSettings { dt: 0.05, duration: 5.0, output_every: 5, probe_x: 20.0 };
        let rec = simulate(&a.system, &mixed_state(&a.system), &forcing, &settings).unwrap();
        let e0 = rec[0].energy.total;
        for r in &rec {
            assert!(r.energy.residual.abs() <= 1e-9 * (e0 + r.energy.work.abs()));
        }
        assert!(rec.last().unwrap().energy.work != 0.0);
    }

    #[test]
    fn backward_steps_return() {
        let a = small(AssemblyOptions::default());
        let init = mixed_state(&a.system).to_state(&a.system).unwrap();
        let mut integ = Integrator::new(&a.system.system, 0.05).unwrap();
        let mut s = init.clone();
        for _ in 0..50 {
            s = integ.step(&s, &ForcingSpec::zero()).unwrap().0;
        }
        integ.set_dt(-0.05).unwrap();
        for _ in 0..50 {
            s = integ.step(&s, &ForcingSpec::zero()).unwrap().0;
        }
        let err = (&s.x - &init.x).amax().max((&s.y - &init.y).amax());
        assert!(err <= 1e-10 * init.x.amax().max(init.y.amax()), "{err}");
    }

    #[test]
    fn channel_evaluation() {
        let t: Channel<f64> = Channel::Table { t: vec![0.0, 1.0, 2.0], f: vec![0.0, 2.0, 0.0] };
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.5), 1.0);
        assert_eq!(t.eval(3.0), 0.0);
        assert!(t.validate("x", 2.0).is_ok());
        assert!(t.validate("x", 5.0).is_err());
        let bad: Channel<f64> = Channel::Table { t: vec![0.0, 0.0], f: vec![1.0, 1.0] };
        assert!(matches!(bad.validate("x", 0.0), Err(Error::Forcing(_))));
        let r: Channel<f64> = Channel::Ramp { rate: 2.0, t_end: 1.0 };
        assert_eq!(r.eval(3.0), 2.0);
    }

    #[test]
    fn incompatible_full_data_rejected() {
        let a = small(AssemblyOptions::default());
        let s = &a.system;
        let q0 = Vector3::new(0.1, 0.0, 0.02);
        let w0 = s.beam.rigid_field(&q0, s.y_g);
        let zero_v = DVector::zeros(s.layout.n_surface);
        let zero_w = DVector::zeros(s.beam.n_dofs());
        let ok = InitialData::from_full(s, zero_v.clone(), zero_v.clone(), q0, Vector3::zeros(), &w0, &zero_w);
        assert!(ok.is_ok());
        let mut bad = w0.clone();
        bad[0] += 1e-6;
        let err = InitialData::from_full(s, zero_v.clone(), zero_v, q0, Vector3::zeros(), &bad, &zero_w);
        assert!(matches!(err, Err(Error::Compatibility(_))));
    }
}
