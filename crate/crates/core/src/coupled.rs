//! Monolithic second-order system `M x'' + G x' + K x = B f` and its spectrum.
//!
//! DOF layout: `x = [v (free-surface nodes); q (surge, heave, pitch); w_int (beam nodes 1..n)]`.
//! Loads: `f = [F_ext (3); F_tip; M_tip]`.

use std::ops::Range;

use nalgebra::{Cholesky, Complex, DMatrix, DVector, SymmetricEigen, Vector3};

use crate::beam::{assemble_beam, clamp_transform, BeamModel, BeamParams};
use crate::error::{Error, Result};
use crate::hydro::{build_hydro, HydroOperators, PlatformParams};
use crate::linalg::mirror_upper;
use crate::mesh::{generate_mesh, FluidGeometry, Mesh};
use crate::potential::{assemble_laplace_with_tolerance, dtn_schur, solve_kirchhoff, DtnOperator, KirchhoffSet, LaplaceSystem};
use crate::scalar::Scalar;

/// Number of load channels.
pub const LOAD_CHANNELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub n_surface: usize,
    /// Reduced beam DOFs (`2n`).
    pub n_beam: usize,
}

impl DofLayout {
    pub fn total(&self) -> usize {
        self.n_surface + 3 + self.n_beam
    }

    pub fn fluid(&self) -> Range<usize> {
        0..self.n_surface
    }

    pub fn platform(&self) -> Range<usize> {
        self.n_surface..self.n_surface + 3
    }

    pub fn beam(&self) -> Range<usize> {
        self.n_surface + 3..self.total()
    }

    /// Platform plus beam.
    pub fn structure(&self) -> Range<usize> {
        self.n_surface..self.total()
    }

    pub fn tip_deflection(&self) -> usize {
        self.total() - 2
    }

    pub fn tip_rotation(&self) -> usize {
        self.total() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Keep the fluid-platform coupling `C` (disable to decouple the fluid).
    pub couple_fluid: bool,
    /// Fault injection: use `+rho C` in the platform row, breaking skewness.
    pub flip_platform_coupling: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { couple_fluid: true, flip_platform_coupling: false }
    }
}

/// Matrices of `M x'' + G x' + K x = B f`.
#[derive(Debug, Clone)]
pub struct SecondOrderSystem<T> {
    pub mass: DMatrix<T>,
    pub gyroscopic: DMatrix<T>,
    pub stiffness: DMatrix<T>,
    pub load: DMatrix<T>,
}

impl<T: Scalar> SecondOrderSystem<T> {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// Keeps the listed DOFs; the rest are held at zero.
    pub fn restrict(&self, keep: &[usize]) -> SecondOrderSystem<T> {
        let n = keep.len();
        let pick = |a: &DMatrix<T>| DMatrix::from_fn(n, n, |i, j| a[(keep[i], keep[j])]);
        SecondOrderSystem {
            mass: pick(&self.mass),
            gyroscopic: pick(&self.gyroscopic),
            stiffness: pick(&self.stiffness),
            load: DMatrix::from_fn(n, self.load.ncols(), |i, j| self.load[(keep[i], j)]),
        }
    }

    /// `1/2 (y^T M y + x^T K x)`.
    pub fn quadratic_energy(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        T::lit(0.5) * (y.dot(&(&self.mass * y)) + x.dot(&(&self.stiffness * x)))
    }

    pub fn first_order(&self) -> Result<FirstOrderOperator<'_, T>> {
        let mass = Cholesky::new(self.mass.clone()).ok_or_else(|| Error::Solve("mass matrix is not positive definite".into()))?;
        Ok(FirstOrderOperator { system: self, mass })
    }
}

/// Action of `z = [x; y] -> [y; M^{-1}(-K x - G y)]` and the energy product.
pub struct FirstOrderOperator<'a, T: Scalar> {
    system: &'a SecondOrderSystem<T>,
    mass: Cholesky<T, nalgebra::Dyn>,
}

impl<T: Scalar> FirstOrderOperator<'_, T> {
    pub fn apply(&self, z: &DVector<T>) -> DVector<T> {
        let n = self.system.dim();
        let x = z.rows(0, n);
        let y = z.rows(n, n);
        let force = -(&self.system.stiffness * x) - &self.system.gyroscopic * y;
        let acc = self.mass.solve(&force);
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&y);
        out.rows_mut(n, n).copy_from(&acc);
        out
    }

    /// `<a, b>_X = a_x^T K b_x + a_y^T M b_y`.
    pub fn inner(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        let n = self.system.dim();
        let (ax, ay) = (a.rows(0, n), a.rows(n, n));
        let (bx, by) = (b.rows(0, n), b.rows(n, n));
        ax.dot(&(&self.system.stiffness * bx)) + ay.dot(&(&self.system.mass * by))
    }
}

/// The assembled coupled problem with its component blocks kept for post-processing.
#[derive(Debug, Clone)]
pub struct CoupledSystem<T> {
    pub layout: DofLayout,
    pub system: SecondOrderSystem<T>,
    pub options: AssemblyOptions,
    pub fluid_density: T,
    pub gravity: T,
    pub y_g: T,
    pub surface_mass: DMatrix<T>,
    pub lambda_weak: DMatrix<T>,
    pub surface_x: Vec<T>,
    pub total_mass: nalgebra::Matrix3<T>,
    pub hydrostatic: nalgebra::Matrix3<T>,
    pub coupling: DMatrix<T>,
    pub beam: BeamModel<T>,
    pub transform: DMatrix<T>,
}

pub fn assemble_monolithic<T: Scalar>(
    dtn: &DtnOperator<T>,
    hydro: &HydroOperators<T>,
    platform: &PlatformParams<T>,
    beam: &BeamModel<T>,
    transform: &DMatrix<T>,
    options: AssemblyOptions,
) -> Result<CoupledSystem<T>> {
    let ns = dtn.surface_count();
    let nb = beam.n_dofs() - 2;
    if dtn.lambda_weak.shape() != (ns, ns) || dtn.surface_mass.shape() != (ns, ns) {
        return Err(Error::Dimension("DtN blocks do not match the surface node count".into()));
    }
    if hydro.coupling.shape() != (3, ns) {
        return Err(Error::Dimension(format!("coupling matrix is {:?}, expected (3, {ns})", hydro.coupling.shape())));
    }
    if transform.shape() != (beam.n_dofs(), nb + 3) {
        return Err(Error::Dimension("clamp transform does not match the beam model".into()));
    }
    let layout = DofLayout { n_surface: ns, n_beam: nb };
    let n = layout.total();
    let rho = platform.fluid_density;
    let g = platform.gravity;
    let s0 = ns;

    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut gyro = DMatrix::zeros(n, n);

    mass.view_mut((0, 0), (ns, ns)).copy_from(&(&dtn.surface_mass * (rho / g)));
    stiffness.view_mut((0, 0), (ns, ns)).copy_from(&(&dtn.lambda_weak * rho));

    let beam_mass = transform.transpose() * &beam.mass * transform;
    let beam_stiff = transform.transpose() * &beam.stiffness * transform;
    let ms = nb + 3;
    for i in 0..ms {
        for j in i..ms {
            let (mut mv, mut kv) = (beam_mass[(i, j)], beam_stiff[(i, j)]);
            if i < 3 && j < 3 {
                mv += hydro.total_mass[(i, j)];
                kv += hydro.hydrostatic[(i, j)];
            }
            mass[(s0 + i, s0 + j)] = mv;
            stiffness[(s0 + i, s0 + j)] = kv;
        }
    }
    mirror_upper(&mut mass);
    mirror_upper(&mut stiffness);

    if options.couple_fluid {
        let sign = if options.flip_platform_coupling { -T::one() } else { T::one() };
        for i in 0..3 {
            for j in 0..ns {
                let c = rho * hydro.coupling[(i, j)];
                gyro[(j, s0 + i)] = c;
                gyro[(s0 + i, j)] = -sign * c;
            }
        }
    }

    let mut load = DMatrix::zeros(n, LOAD_CHANNELS);
    for k in 0..3 {
        load[(s0 + k, k)] = T::one();
    }
    load[(layout.tip_deflection(), 3)] = T::one();
    load[(layout.tip_rotation(), 4)] = T::one();

    Ok(CoupledSystem {
        layout,
        system: SecondOrderSystem { mass, gyroscopic: gyro, stiffness, load },
        options,
        fluid_density: rho,
        gravity: g,
        y_g: platform.y_g,
        surface_mass: dtn.surface_mass.clone(),
        lambda_weak: dtn.lambda_weak.clone(),
        surface_x: dtn.surface_x.clone(),
        total_mass: hydro.total_mass,
        hydrostatic: hydro.hydrostatic,
        coupling: hydro.coupling.clone(),
        beam: beam.clone(),
        transform: transform.clone(),
    })
}

impl<T: Scalar> CoupledSystem<T> {
    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    /// Full beam DOFs `T [q; w_int]` from a monolithic field.
    pub fn beam_full(&self, x: &DVector<T>) -> DVector<T> {
        &self.transform * x.rows_range(self.layout.structure())
    }

    pub fn platform_part(&self, x: &DVector<T>) -> Vector3<T> {
        let r = self.layout.platform();
        Vector3::new(x[r.start], x[r.start + 1], x[r.start + 2])
    }

    /// Total free-surface length `|E|`.
    pub fn surface_length(&self) -> T {
        self.surface_mass.sum()
    }

    /// `(1^T M_E v) / |E|`.
    pub fn surface_mean(&self, v: &DVector<T>) -> T {
        let ones = DVector::from_element(self.layout.n_surface, T::one());
        ones.dot(&(&self.surface_mass * v.rows_range(self.layout.fluid()))) / self.surface_length()
    }

    /// Energy norm with the constant fluid mode weighted by `rho_f |E| / h`-like scale `weight`.
    pub fn deflated_norm_sq(&self, z: &DVector<T>, weight: T) -> Result<T> {
        let n = self.dim();
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        let base = T::lit(2.0) * self.system.quadratic_energy(&x, &y);
        if self.layout.n_surface == 0 {
            return Ok(base);
        }
        let mean = self.surface_mean(&x);
        Ok(base + weight * mean * mean)
    }

    /// Default weight for [`Self::deflated_norm_sq`]: `rho_f |E| / depth`.
    pub fn deflation_weight(&self, depth: T) -> T {
        self.fluid_density * self.surface_length() / depth
    }

    /// Platform held fixed: fluid and beam DOFs only.
    pub fn locked_platform(&self) -> SecondOrderSystem<T> {
        let keep: Vec<usize> = self.layout.fluid().chain(self.layout.beam()).collect();
        self.system.restrict(&keep)
    }

    /// Position index fixed to remove the constant fluid mode, if the fluid is present.
    pub fn gauge(&self) -> Option<usize> {
        (self.layout.n_surface > 0).then_some(0)
    }

    /// Split of `x^T K x + y^T M y` into fluid, platform and beam-plus-tip shares.
    pub fn energy_split(&self, x: &DVector<T>, y: &DVector<T>) -> [T; 3] {
        let f = self.layout.fluid();
        let vx = x.rows_range(f.clone());
        let vy = y.rows_range(f);
        let rho = self.fluid_density;
        let fluid = rho * vx.dot(&(&self.lambda_weak * vx)) + rho / self.gravity * vy.dot(&(&self.surface_mass * vy));
        let q = self.platform_part(x);
        let qd = self.platform_part(y);
        let platform = q.dot(&(self.hydrostatic * q)) + qd.dot(&(self.total_mass * qd));
        let total = x.dot(&(&self.system.stiffness * x)) + y.dot(&(&self.system.mass * y));
        [fluid, platform, total - fluid - platform]
    }

    /// Spectrum of the gauge-fixed first-order operator.
    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        spectrum(&self.system, self.gauge())
    }
}

/// Eigen-decomposition of the first-order operator.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Scalar> {
    /// Purely imaginary up to roundoff, ascending in the imaginary part.
    pub values: Vec<Complex<T>>,
    /// Columns `[x; y]` in full position coordinates (gauge entry zero).
    pub modes: DMatrix<Complex<T>>,
    /// `||A z - lambda z||_X / ||z||_X` per mode.
    pub residuals: Vec<T>,
    pub gauge: Option<usize>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn max_abs_imag(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.im.abs()))
    }

    /// Eigenvalues with `|lambda| <= tol * max|Im lambda|`.
    pub fn zero_count(&self, tol: T) -> usize {
        let scale = self.max_abs_imag();
        self.values.iter().filter(|v| modulus(**v) <= tol * scale).count()
    }

    /// `max_k |lambda_k - conj(lambda_{n-1-k})| / max|Im|` over the sorted list.
    pub fn pairing_residual(&self) -> T {
        let n = self.values.len();
        let scale = self.max_abs_imag();
        if scale == T::zero() {
            return T::zero();
        }
        (0..n).fold(T::zero(), |m, k| m.max(modulus(self.values[k] - self.values[n - 1 - k].conj()) / scale))
    }

    /// Indices of the `k` smallest positive frequencies above `zero_tol * max|Im|`.
    pub fn lowest(&self, k: usize, zero_tol: T) -> Vec<usize> {
        let cut = zero_tol * self.max_abs_imag();
        let mut idx: Vec<usize> = (0..self.values.len()).filter(|&i| self.values[i].im > cut).collect();
        idx.sort_by(|&a, &b| self.values[a].im.partial_cmp(&self.values[b].im).expect("finite eigenvalue"));
        idx.truncate(k);
        idx
    }

    /// Real and imaginary parts of mode `k` split as `(x, y)` pairs.
    pub fn mode_parts(&self, k: usize) -> [(DVector<T>, DVector<T>); 2] {
        let n = self.modes.nrows() / 2;
        let col = self.modes.column(k);
        let re = DVector::from_fn(2 * n, |i, _| col[i].re);
        let im = DVector::from_fn(2 * n, |i, _| col[i].im);
        [(re.rows(0, n).into_owned(), re.rows(n, n).into_owned()), (im.rows(0, n).into_owned(), im.rows(n, n).into_owned())]
    }
}

fn modulus<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Energy form `E = blockdiag(K~, M)` and skew generator `S = [[0, K_r], [-K_r^T, -G]]`
/// where `K~` and `K_r` drop the gauge index from positions.
fn gauge_fixed_forms<T: Scalar>(sys: &SecondOrderSystem<T>, gauge: Option<usize>) -> (DMatrix<T>, DMatrix<T>) {
    let n = sys.dim();
    let pos: Vec<usize> = (0..n).filter(|&i| Some(i) != gauge).collect();
    let np = pos.len();
    let dim = np + n;
    let mut energy = DMatrix::zeros(dim, dim);
    let mut skew = DMatrix::zeros(dim, dim);
    for (a, &i) in pos.iter().enumerate() {
        for (b, &j) in pos.iter().enumerate() {
            energy[(a, b)] = sys.stiffness[(i, j)];
        }
        for j in 0..n {
            skew[(a, np + j)] = sys.stiffness[(i, j)];
            skew[(np + j, a)] = -sys.stiffness[(i, j)];
        }
    }
    for i in 0..n {
        for j in 0..n {
            energy[(np + i, np + j)] = sys.mass[(i, j)];
            skew[(np + i, np + j)] = -sys.gyroscopic[(i, j)];
        }
    }
    (energy, skew)
}

/// Eigenpairs via the Hermitian matrix `i R^{-1} S R^{-T}`, `E = R R^T`.
pub fn spectrum<T: Scalar>(sys: &SecondOrderSystem<T>, gauge: Option<usize>) -> Result<Spectrum<T>> {
    let n = sys.dim();
    let (energy, skew) = gauge_fixed_forms(sys, gauge);
    let dim = energy.nrows();
    let np = dim - n;
    let chol = Cholesky::new(energy).ok_or_else(|| Error::Convergence("energy form is not positive definite after gauge fixing".into()))?;
    let l = chol.l();
    let y = l.solve_lower_triangular(&skew.transpose()).ok_or_else(|| Error::Convergence("singular energy factor".into()))?;
    let w = l.solve_lower_triangular(&y.transpose()).ok_or_else(|| Error::Convergence("singular energy factor".into()))?;
    let w = (&w - w.transpose()) * T::lit(0.5);
    let h = w.map(|v| Complex::new(T::zero(), v));
    let eig = SymmetricEigen::try_new(h, T::unit_roundoff(), 0)
        .ok_or_else(|| Error::Convergence("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalue"));

    let lt = l.transpose();
    let mut values = Vec::with_capacity(dim);
    let mut residuals = Vec::with_capacity(dim);
    let mut modes = DMatrix::from_element(2 * n, dim, Complex::new(T::zero(), T::zero()));
    for (c, &k) in order.iter().enumerate() {
        let mu = eig.eigenvalues[k];
        // W u = -i mu u
        let lambda = Complex::new(T::zero(), -mu);
        let u = eig.eigenvectors.column(k);
        let ure = DVector::from_fn(dim, |i, _| u[i].re);
        let uim = DVector::from_fn(dim, |i, _| u[i].im);
        let r_re = &w * &ure - &uim * mu;
        let r_im = &w * &uim + &ure * mu;
        let unorm = (ure.norm_squared() + uim.norm_squared()).sqrt();
        residuals.push((r_re.norm_squared() + r_im.norm_squared()).sqrt() / unorm);
        values.push(lambda);
        let zre = lt.solve_upper_triangular(&ure).ok_or_else(|| Error::Convergence("singular energy factor".into()))?;
        let zim = lt.solve_upper_triangular(&uim).ok_or_else(|| Error::Convergence("singular energy factor".into()))?;
        let mut p = 0;
        for i in 0..n {
            if Some(i) != gauge {
                modes[(i, c)] = Complex::new(zre[p], zim[p]);
                p += 1;
            }
        }
        for i in 0..n {
            modes[(n + i, c)] = Complex::new(zre[np + i], zim[np + i]);
        }
    }
    values.reverse();
    residuals.reverse();
    let modes = DMatrix::from_fn(2 * n, dim, |i, c| modes[(i, dim - 1 - c)]);
    Ok(Spectrum { values, modes, residuals, gauge })
}

/// Dense gauge-fixed first-order matrix `E^{-1} S`, diagonally balanced by `sqrt(diag E)`.
pub fn dense_first_order<T: Scalar>(sys: &SecondOrderSystem<T>, gauge: Option<usize>) -> Result<DMatrix<T>> {
    let (energy, skew) = gauge_fixed_forms(sys, gauge);
    let d: Vec<T> = (0..energy.nrows()).map(|i| energy[(i, i)].sqrt()).collect();
    let chol = Cholesky::new(energy).ok_or_else(|| Error::Solve("energy form is not positive definite".into()))?;
    let a = chol.solve(&skew);
    Ok(DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)] / d[j]))
}

/// Everything built from the input blocks, in pipeline order.
#[derive(Debug, Clone)]
pub struct Assembly<T> {
    pub geometry: FluidGeometry<T>,
    pub mesh: Mesh<T>,
    pub laplace: LaplaceSystem<T>,
    pub kirchhoff: KirchhoffSet<T>,
    pub dtn: DtnOperator<T>,
    pub hydro: HydroOperators<T>,
    pub system: CoupledSystem<T>,
}

/// Mesh, potentials, DtN, hydrodynamics, beam and the monolithic system.
pub fn build_coupled<T: Scalar>(
    geom: &FluidGeometry<T>,
    platform: &PlatformParams<T>,
    beam: &BeamParams<T>,
    options: AssemblyOptions,
    solver_tolerance: T,
) -> Result<Assembly<T>> {
    if !geom.has_hull() {
        return Err(Error::Config("the coupled model needs a hull (hull_half_beam > 0)".into()));
    }
    if geom.y_g != platform.y_g {
        return Err(Error::Config("geometry and platform disagree on y_G".into()));
    }
    let mesh = generate_mesh(geom)?;
    let laplace = assemble_laplace_with_tolerance(&mesh, solver_tolerance)?;
    let kirchhoff = solve_kirchhoff(&laplace, &mesh, geom)?;
    let dtn = dtn_schur(&laplace, &mesh)?;
    let hydro = build_hydro(geom, platform, &laplace, &kirchhoff)?;
    let beam_model = assemble_beam(beam)?;
    let transform = clamp_transform(beam, platform.y_g);
    let system = assemble_monolithic(&dtn, &hydro, platform, &beam_model, &transform, options)?;
    Ok(Assembly { geometry: geom.clone(), mesh, laplace, kirchhoff, dtn, hydro, system })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{relative_asymmetry, symmetric_eigenvalues};

    pub(crate) fn small(options: AssemblyOptions) -> Assembly<f64> {
        let geom = FluidGeometry::new(10.0, 40.0, 5.0, 2.0, -1.0, 2.5).unwrap();
        let platform =
            PlatformParams { mass: 17500.0, inertia: 1.5e5, y_g: -1.0, fluid_density: 1000.0, gravity: 9.81, mooring_surge: 1e3 };
        let beam = BeamParams::uniform(0.0, 20.0, 100.0, 1e7, 500.0, 100.0, 8);
        build_coupled(&geom, &platform, &beam, options, crate::potential::default_tolerance()).unwrap()
    }

    #[test]
    fn structure_of_blocks() {
        let a = small(AssemblyOptions::default());
        let s = &a.system.system;
        assert_eq!(relative_asymmetry(&s.mass), 0.0);
        assert_eq!(relative_asymmetry(&s.stiffness), 0.0);
        assert_eq!((&s.gyroscopic + s.gyroscopic.transpose()).amax(), 0.0);
        let ev = symmetric_eigenvalues(&s.mass);
        assert!(ev[0] > 0.0);
        let kv = symmetric_eigenvalues(&s.stiffness);
        let scale = kv[kv.len() - 1];
        assert!(kv[0].abs() <= 1e-9 * scale);
        assert!(kv[1] > 1e-9 * scale);
        let r = a.system.layout.platform();
        let qblock = s.mass.view((r.start, r.start), (3, 3)).into_owned();
        let beam_part = &a.system.transform.transpose() * &a.system.beam.mass * &a.system.transform;
        let expected = a.hydro.total_mass + beam_part.view((0, 0), (3, 3));
        assert!((qblock - expected).amax() <= 1e-12 * expected.amax());
    }

    #[test]
    fn decoupled_fluid_has_no_cross_blocks() {
        let a = small(AssemblyOptions { couple_fluid: false, ..Default::default() });
        let s = &a.system.system;
        let l = a.system.layout;
        for i in l.fluid() {
            for j in l.structure() {
                assert_eq!(s.mass[(i, j)], 0.0);
                assert_eq!(s.stiffness[(i, j)], 0.0);
                assert_eq!(s.gyroscopic[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn fault_injection_breaks_skewness() {
        let a = small(AssemblyOptions { flip_platform_coupling: true, ..Default::default() });
        let g = &a.system.system.gyroscopic;
        assert!((g + g.transpose()).amax() > 0.0);
    }

    #[test]
    fn first_order_action_is_skew_in_energy_product() {
        let a = small(AssemblyOptions::default());
        let op = a.system.system.first_order().unwrap();
        let n = a.system.dim();
        assert_eq!(op.apply(&DVector::zeros(2 * n)).amax(), 0.0);
        let z = DVector::from_fn(2 * n, |i, _| ((i * 7919) % 113) as f64 / 113.0 - 0.5);
        let az = op.apply(&z);
        let norm = a.system.deflated_norm_sq(&z, a.system.deflation_weight(10.0)).unwrap();
        assert!((op.inner(&az, &z) + op.inner(&z, &az)).abs() <= 1e-10 * norm);
    }

    #[test]
    fn spectrum_properties() {
        let a = small(AssemblyOptions::default());
        let sp = a.system.spectrum().unwrap();
        assert_eq!(sp.zero_count(1e-10), 1);
        assert!(sp.pairing_residual() <= 1e-8);
        let worst = sp.residuals.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
        for v in &sp.values {
            assert_eq!(v.re, 0.0);
        }
    }

    #[test]
    fn dense_eigenvalues_are_imaginary() {
        let a = small(AssemblyOptions::default());
        let m = dense_first_order(&a.system.system, a.system.gauge()).unwrap();
        let ev = m.complex_eigenvalues();
        let max_im = ev.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let max_re = ev.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        assert!(max_re <= 1e-8 * max_im, "{max_re} {max_im}");
    }

    #[test]
    fn locked_platform_recovers_cantilever() {
        let a = small(AssemblyOptions::default());
        let locked = a.system.locked_platform();
        let sp = spectrum(&locked, Some(0)).unwrap();
        let cant = a.system.beam.cantilever_frequencies().unwrap();
        let freqs: Vec<f64> = sp.values.iter().map(|v| v.im).filter(|&w| w > 0.0).collect();
        for w in cant.iter().take(3) {
            let nearest = freqs.iter().map(|f| (f - w).abs() / w).fold(f64::INFINITY, f64::min);
            assert!(nearest <= 5e-3, "{w}: {nearest}");
        }
    }

    #[test]
    fn energy_split_sums_to_total() {
        let a = small(AssemblyOptions::default());
        let sp = a.system.spectrum().unwrap();
        let k = sp.lowest(3, 1e-10);
        assert_eq!(k.len(), 3);
        let [(x, y), _] = sp.mode_parts(k[0]);
        let split = a.system.energy_split(&x, &y);
        assert!(split.iter().all(|&v| v >= -1e-12 * split.iter().sum::<f64>().abs()));
    }
}
