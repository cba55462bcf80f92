//! Eight-term physical energy and the work balance.

use nalgebra::DVector;

use crate::coupled::CoupledSystem;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Energies per unit length (J/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T> {
    pub fluid_kinetic: T,
    pub fluid_potential: T,
    pub platform_kinetic: T,
    pub platform_potential: T,
    pub beam_kinetic: T,
    pub beam_potential: T,
    pub tip_translational: T,
    pub tip_rotational: T,
    pub total: T,
    pub work: T,
    /// `total - E(0) - work`.
    pub residual: T,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn terms(&self) -> [T; 8] {
        [
            self.fluid_kinetic,
            self.fluid_potential,
            self.platform_kinetic,
            self.platform_potential,
            self.beam_kinetic,
            self.beam_potential,
            self.tip_translational,
            self.tip_rotational,
        ]
    }

    /// Fills `work` and `residual` relative to the initial total `e0`.
    pub fn with_balance(mut self, e0: T, work: T) -> Self {
        self.work = work;
        self.residual = self.total - e0 - work;
        self
    }
}

/// Evaluates each term from its own block; `x`, `y` are positions and velocities.
pub fn energy<T: Scalar>(sys: &CoupledSystem<T>, x: &DVector<T>, y: &DVector<T>) -> Result<EnergyReport<T>> {
    let n = sys.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::Dimension(format!("state has {}/{} entries, expected {n}", x.len(), y.len())));
    }
    let half = T::lit(0.5);
    let rho = sys.fluid_density;
    let f = sys.layout.fluid();
    let v = x.rows_range(f.clone());
    let vt = y.rows_range(f);
    let q = sys.platform_part(x);
    let qd = sys.platform_part(y);
    let w = sys.beam_full(x);
    let wt = sys.beam_full(y);
    let (tw, tr) = sys.beam.tip_dofs();
    let report = EnergyReport {
        fluid_kinetic: half * rho / sys.gravity * vt.dot(&(&sys.surface_mass * vt)),
        fluid_potential: half * rho * v.dot(&(&sys.lambda_weak * v)),
        platform_kinetic: half * qd.dot(&(sys.total_mass * qd)),
        platform_potential: half * q.dot(&(sys.hydrostatic * q)),
        beam_kinetic: half * wt.dot(&(&sys.beam.bare_mass * &wt)),
        beam_potential: sys.beam.strain_energy(&w)?,
        tip_translational: half * sys.beam.tip_mass * wt[tw] * wt[tw],
        tip_rotational: half * sys.beam.tip_inertia * wt[tr] * wt[tr],
        total: T::zero(),
        work: T::zero(),
        residual: T::zero(),
    };
    let total = report.terms().iter().fold(T::zero(), |acc, &t| acc + t);
    Ok(EnergyReport { total, ..report })
}

/// Per-record `E_k - E_0 - W_k` and its largest magnitude.
pub fn balance_residual<T: Scalar>(history: &[EnergyReport<T>]) -> (Vec<T>, T) {
    let Some(first) = history.first() else {
        return (Vec::new(), T::zero());
    };
    let series: Vec<T> = history.iter().map(|r| r.total - first.total - r.work).collect();
    let max = series.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    (series, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::tests::small;
    use crate::coupled::AssemblyOptions;

    #[test]
    fn zero_state_has_zero_energy() {
        let a = small(AssemblyOptions::default());
        let z = DVector::zeros(a.system.dim());
        let e = energy(&a.system, &z, &z).unwrap();
        assert!(e.terms().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn heave_velocity_activates_platform_term() {
        let a = small(AssemblyOptions::default());
        let s = &a.system;
        let x = DVector::zeros(s.dim());
        let mut y = DVector::zeros(s.dim());
        y[s.layout.platform().start + 1] = 1.0;
        let e = energy(s, &x, &y).unwrap();
        assert!((e.total - 0.5 * s.total_mass[(1, 1)]).abs() <= 1e-12 * e.total);
    }

    #[test]
    fn constant_surface_has_no_potential_energy() {
        let a = small(AssemblyOptions::default());
        let s = &a.system;
        let mut x = DVector::zeros(s.dim());
        x.rows_range_mut(s.layout.fluid()).fill(0.7);
        let e = energy(s, &x, &DVector::zeros(s.dim())).unwrap();
        assert!(e.fluid_potential.abs() <= 1e-9 * s.lambda_weak.amax());
    }

    #[test]
    fn blocks_match_quadratic_form() {
        let a = small(AssemblyOptions::default());
        let s = &a.system;
        for seed in 0..20 {
            let x = DVector::from_fn(s.dim(), |i, _| (((i + 3 * seed) * 2654435761usize) % 1000) as f64 / 1000.0 - 0.5);
            let y = DVector::from_fn(s.dim(), |i, _| (((i + 7 * seed) * 40503usize) % 997) as f64 / 997.0 - 0.5);
            let e = energy(s, &x, &y).unwrap();
            let q = s.system.quadratic_energy(&x, &y);
            assert!((e.total - q).abs() <= 1e-12 * q, "{} vs {q}", e.total);
        }
    }

    #[test]
    fn balance_series() {
        let mk = |total: f64, work: f64| EnergyReport {
            fluid_kinetic: total,
            fluid_potential: 0.0,
            platform_kinetic: 0.0,
            platform_potential: 0.0,
            beam_kinetic: 0.0,
            beam_potential: 0.0,
            tip_translational: 0.0,
            tip_rotational: 0.0,
            total,
            work,
            residual: 0.0,
        };
        let (series, max) = balance_residual(&[mk(1.0, 0.0), mk(1.5, 0.5), mk(2.0, 0.75)]);
        assert_eq!(series, vec![0.0, 0.0, 0.25]);
        assert_eq!(max, 0.25);
    }
}
