//! Rigid-body matrices of the floating platform (per unit length).

use nalgebra::{Cholesky, DMatrix, Matrix3};

use crate::error::{Error, Result};
use crate::mesh::FluidGeometry;
use crate::potential::{KirchhoffSet, LaplaceSystem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformParams<T> {
    /// Platform mass per unit length (kg/m).
    pub mass: T,
    /// Pitch inertia about the mass centre (kg m^2 / m).
    pub inertia: T,
    pub y_g: T,
    pub fluid_density: T,
    pub gravity: T,
    /// Surge spring (N/m^2) standing in for moorings; keeps `K` definite.
    pub mooring_surge: T,
}

impl<T: Scalar> PlatformParams<T> {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("platform mass", self.mass),
            ("platform inertia", self.inertia),
            ("fluid density", self.fluid_density),
            ("gravity", self.gravity),
        ];
        for (name, v) in checks {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.mooring_surge < T::zero() || !self.mooring_surge.is_finite() {
            return Err(Error::Config("mooring_surge must be non-negative".into()));
        }
        Ok(())
    }

    pub fn mass_matrix(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(self.mass, self.mass, self.inertia))
    }
}

#[derive(Debug, Clone)]
pub struct HydroOperators<T> {
    pub platform_mass: Matrix3<T>,
    pub hydrostatic: Matrix3<T>,
    pub added_mass: Matrix3<T>,
    pub total_mass: Matrix3<T>,
    /// `C[i][j] = int_E psi_j d(phi_i)/dy`, shape `3 x N_E`.
    pub coupling: DMatrix<T>,
}

/// `rho_f int grad(phi_i) . grad(phi_j)`, evaluated once per pair and mirrored.
pub fn added_mass<T: Scalar>(kirchhoff: &KirchhoffSet<T>, sys: &LaplaceSystem<T>, fluid_density: T) -> Matrix3<T> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = fluid_density * sys.stiffness.bilinear(&kirchhoff.phi[i], &kirchhoff.phi[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Boundary form `rho_f int_{Gamma_w} nu_i phi_j`; equals [`added_mass`] up to solver precision.
pub fn added_mass_surface_form<T: Scalar>(kirchhoff: &KirchhoffSet<T>, fluid_density: T) -> Matrix3<T> {
    Matrix3::from_fn(|i, j| fluid_density * kirchhoff.neumann_load[i].dot(&kirchhoff.phi[j]))
}

/// Waterplane hydrostatics of the rectangular hull plus the surge mooring spring.
pub fn hydrostatic_stiffness<T: Scalar>(geom: &FluidGeometry<T>, params: &PlatformParams<T>) -> Result<Matrix3<T>> {
    let (a, d) = (geom.hull_half_beam, geom.hull_draft);
    let two = T::lit(2.0);
    let rho_g = params.fluid_density * params.gravity;
    let waterplane = two * a;
    let submerged_area = two * a * d;
    let centre_of_buoyancy = -d / two;
    let heave = rho_g * waterplane;
    let pitch = rho_g * (waterplane.powi(3) / T::lit(12.0) + submerged_area * (centre_of_buoyancy - params.y_g));
    let k = Matrix3::from_diagonal(&nalgebra::Vector3::new(params.mooring_surge, heave, pitch));
    for (name, v) in [("surge", params.mooring_surge), ("heave", heave), ("pitch", pitch)] {
        if !(v > T::zero()) {
            return Err(Error::Stability(format!("hydrostatic {name} stiffness {v:e} is not positive")));
        }
    }
    Ok(k)
}

/// Relative mismatch between buoyancy and the supported mass (0 at exact flotation).
pub fn buoyancy_imbalance<T: Scalar>(geom: &FluidGeometry<T>, params: &PlatformParams<T>, supported_mass: T) -> T {
    let displaced = params.fluid_density * T::lit(2.0) * geom.hull_half_beam * geom.hull_draft;
    (displaced - supported_mass) / displaced
}

/// Rows are the consistent free-surface fluxes of the three Kirchhoff potentials.
pub fn coupling_matrix<T: Scalar>(kirchhoff: &KirchhoffSet<T>) -> DMatrix<T> {
    let ns = kirchhoff.surface_flux[0].len();
    DMatrix::from_fn(3, ns, |i, j| kirchhoff.surface_flux[i][j])
}

pub fn build_hydro<T: Scalar>(
    geom: &FluidGeometry<T>,
    params: &PlatformParams<T>,
    sys: &LaplaceSystem<T>,
    kirchhoff: &KirchhoffSet<T>,
) -> Result<HydroOperators<T>> {
    params.validate()?;
    let platform_mass = params.mass_matrix();
    let hydrostatic = hydrostatic_stiffness(geom, params)?;
    let added = added_mass(kirchhoff, sys, params.fluid_density);
    let total_mass = platform_mass + added;
    if Cholesky::new(total_mass).is_none() {
        return Err(Error::Solve("total platform mass matrix is not positive definite".into()));
    }
    Ok(HydroOperators { platform_mass, hydrostatic, added_mass: added, total_mass, coupling: coupling_matrix(kirchhoff) })
}
