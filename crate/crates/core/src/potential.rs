//! Mixed Laplace problems on the tank: Kirchhoff radiation potentials,
//! Dirichlet lifting and the discrete Dirichlet-to-Neumann operator.
//!
//! Everything is built on one P1 stiffness matrix `A` with the free-surface
//! nodes `S` as the only Dirichlet set. All other boundary parts carry
//! natural (Neumann) conditions. The weak normal derivative on `S` of a
//! discrete harmonic field `u` is read off the residual `(A u)_S`, so the
//! discrete Green identity
//!
//! `sum_{Gamma_w} (D v) nu_i = -v . (A phi_i)_S`
//!
//! holds to solver precision. The DtN matrix is the Schur complement
//! `A_SS - A_SI A_II^{-1} A_IS`, i.e. the same residual applied to lifts.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, FluidGeometry, Mesh};
use crate::scalar::Scalar;
use crate::sparse::{solve_refined, CsrMatrix, EnvelopeCholesky};

const MAX_REFINEMENTS: usize = 4;

/// Assembled P1 Laplacian with the interior block factorized.
#[derive(Debug, Clone)]
pub struct LaplaceSystem<T> {
    pub stiffness: CsrMatrix<T>,
    /// Free-surface node ids, in `Mesh::surface_node_index` order.
    pub dirichlet_set: Vec<usize>,
    /// Remaining node ids, ascending.
    pub interior: Vec<usize>,
    interior_position: Vec<Option<usize>>,
    interior_block: CsrMatrix<T>,
    factor: EnvelopeCholesky<T>,
    /// Relative residual target for every interior solve.
    pub tolerance: T,
}

/// Default relative residual target: `1e-10`, relaxed to the precision floor of `T`.
pub fn default_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::unit_roundoff() * T::lit(1e4))
}

pub fn assemble_laplace<T: Scalar>(mesh: &Mesh<T>) -> Result<LaplaceSystem<T>> {
    assemble_laplace_with_tolerance(mesh, default_tolerance())
}

pub fn assemble_laplace_with_tolerance<T: Scalar>(mesh: &Mesh<T>, tolerance: T) -> Result<LaplaceSystem<T>> {
    let n = mesh.node_count();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(*tri);
        if !(area > T::zero()) {
            return Err(Error::Assembly(format!("triangle {t} has non-positive area")));
        }
        let p = tri.map(|i| mesh.nodes[i]);
        // gradient of the hat of vertex k is (y_{k+1}-y_{k+2}, x_{k+2}-x_{k+1}) / (2 area)
        let grads: [[T; 2]; 3] = std::array::from_fn(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [a[1] - b[1], b[0] - a[0]]
        });
        let scale = T::one() / (T::lit(4.0) * area);
        for i in 0..3 {
            for j in 0..3 {
                let v = (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]) * scale;
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, triplets);

    let dirichlet_set = mesh.surface_node_index.clone();
    let mut is_dirichlet = vec![false; n];
    for &s in &dirichlet_set {
        is_dirichlet[s] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&i| !is_dirichlet[i]).collect();
    let mut interior_position = vec![None; n];
    for (k, &i) in interior.iter().enumerate() {
        interior_position[i] = Some(k);
    }
    let interior_block = stiffness.submatrix(&interior);
    let factor = EnvelopeCholesky::factor(&interior_block)
        .map_err(|e| Error::Solve(format!("interior Laplace block ({} nodes): {e}", interior.len())))?;
    Ok(LaplaceSystem { stiffness, dirichlet_set, interior, interior_position, interior_block, factor, tolerance })
}

impl<T: Scalar> LaplaceSystem<T> {
    pub fn node_count(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn surface_count(&self) -> usize {
        self.dirichlet_set.len()
    }

    /// Solves `A_II x = rhs` with iterative refinement.
    pub fn solve_interior(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        solve_refined(&self.interior_block, &self.factor, rhs, self.tolerance, MAX_REFINEMENTS)
    }

    /// Discrete harmonic field with `u|_S = surface` and natural conditions elsewhere.
    pub fn lift(&self, surface: &DVector<T>) -> Result<DVector<T>> {
        self.check_surface_len(surface)?;
        let mut rhs = DVector::zeros(self.interior.len());
        for (k, &s) in self.dirichlet_set.iter().enumerate() {
            if surface[k] == T::zero() {
                continue;
            }
            for (j, a) in self.stiffness.row(s) {
                if let Some(p) = self.interior_position[j] {
                    rhs[p] -= a * surface[k];
                }
            }
        }
        let inner = self.solve_interior(&rhs)?;
        Ok(self.scatter(surface, &inner))
    }

    /// Field vanishing on `S` that carries the given nodal Neumann load.
    pub fn solve_neumann(&self, load: &DVector<T>) -> Result<DVector<T>> {
        if load.len() != self.node_count() {
            return Err(Error::Dimension(format!("load has {} entries, mesh has {} nodes", load.len(), self.node_count())));
        }
        let rhs = DVector::from_fn(self.interior.len(), |k, _| load[self.interior[k]]);
        let inner = self.solve_interior(&rhs)?;
        Ok(self.scatter(&DVector::zeros(self.surface_count()), &inner))
    }

    fn scatter(&self, surface: &DVector<T>, inner: &DVector<T>) -> DVector<T> {
        let mut field = DVector::zeros(self.node_count());
        for (k, &s) in self.dirichlet_set.iter().enumerate() {
            field[s] = surface[k];
        }
        for (k, &i) in self.interior.iter().enumerate() {
            field[i] = inner[k];
        }
        field
    }

    /// Restriction of a nodal field to the free-surface unknowns.
    pub fn surface_trace(&self, field: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.surface_count(), |k, _| field[self.dirichlet_set[k]])
    }

    fn check_surface_len(&self, surface: &DVector<T>) -> Result<()> {
        if surface.len() != self.surface_count() {
            return Err(Error::Dimension(format!("surface field has {} entries, expected {}", surface.len(), self.surface_count())));
        }
        Ok(())
    }
}

/// Weak outward normal derivative on the free surface, `(A u)_S`.
///
/// The outward normal on `E` is `+y`, so this is the functional
/// `psi_j -> int_E psi_j du/dy` for a discrete harmonic `u`.
pub fn consistent_flux<T: Scalar>(sys: &LaplaceSystem<T>, field: &DVector<T>) -> Result<DVector<T>> {
    if field.len() != sys.node_count() {
        return Err(Error::Dimension(format!("field has {} entries, mesh has {} nodes", field.len(), sys.node_count())));
    }
    Ok(DVector::from_fn(sys.surface_count(), |k, _| {
        sys.stiffness.row(sys.dirichlet_set[k]).fold(T::zero(), |acc, (j, a)| acc + a * field[j])
    }))
}

/// Rigid-body normal velocity components `[n1, n2, (r - r_G)^perp . n]`.
pub fn rigid_normal_modes<T: Scalar>(point: [T; 2], normal: [T; 2], y_g: T) -> [T; 3] {
    let (x, y) = (point[0], point[1]);
    // (v1, v2)^perp = (-v2, v1) with v = (x, y - y_G)
    [normal[0], normal[1], -(y - y_g) * normal[0] + x * normal[1]]
}

/// Nodal loads `int_{Gamma_w} g_i psi_j` for a boundary datum `g` given per point and outward normal.
///
/// Two-point Gauss on each wetted edge; exact for data linear along the edge.
pub fn wetted_loads<T: Scalar>(mesh: &Mesh<T>, datum: impl Fn([T; 2], [T; 2]) -> [T; 3]) -> [DVector<T>; 3] {
    let n = mesh.node_count();
    let mut loads = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
    let g = T::lit(0.5) / T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    for edge in mesh.edges_with_tag(BoundaryTag::Wetted) {
        let [p, q] = edge.nodes;
        let (a, b) = (mesh.nodes[p], mesh.nodes[q]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        // fluid lies on the left of p -> q, so the outward normal is the right normal
        let normal = [dy / len, -dx / len];
        for s in [half - g, half + g] {
            let point = [a[0] + s * dx, a[1] + s * dy];
            let values = datum(point, normal);
            for i in 0..3 {
                loads[i][p] += half * len * values[i] * (T::one() - s);
                loads[i][q] += half * len * values[i] * s;
            }
        }
    }
    loads
}

/// The three Kirchhoff potentials (surge, heave, pitch) and their surface fluxes.
#[derive(Debug, Clone)]
pub struct KirchhoffSet<T> {
    pub phi: [DVector<T>; 3],
    /// Weak fluxes `int_E psi_j d(phi_i)/dy`, one vector per mode.
    pub surface_flux: [DVector<T>; 3],
    /// Nodal Neumann loads `int_{Gamma_w} nu_i psi_j`.
    pub neumann_load: [DVector<T>; 3],
}

pub fn solve_kirchhoff<T: Scalar>(sys: &LaplaceSystem<T>, mesh: &Mesh<T>, geom: &FluidGeometry<T>) -> Result<KirchhoffSet<T>> {
    let y_g = geom.y_g;
    solve_kirchhoff_with(sys, mesh, |p, n| rigid_normal_modes(p, n, y_g))
}

/// Kirchhoff-type solves for arbitrary wetted Neumann data.
pub fn solve_kirchhoff_with<T: Scalar>(
    sys: &LaplaceSystem<T>,
    mesh: &Mesh<T>,
    datum: impl Fn([T; 2], [T; 2]) -> [T; 3],
) -> Result<KirchhoffSet<T>> {
    let neumann_load = wetted_loads(mesh, datum);
    let phi = [sys.solve_neumann(&neumann_load[0])?, sys.solve_neumann(&neumann_load[1])?, sys.solve_neumann(&neumann_load[2])?];
    let surface_flux = [consistent_flux(sys, &phi[0])?, consistent_flux(sys, &phi[1])?, consistent_flux(sys, &phi[2])?];
    Ok(KirchhoffSet { phi, surface_flux, neumann_load })
}

/// Discrete DtN operator in weak form together with the surface mass matrix.
#[derive(Debug, Clone)]
pub struct DtnOperator<T> {
    pub lambda_weak: DMatrix<T>,
    pub surface_mass: DMatrix<T>,
    /// `x` coordinate of each surface unknown.
    pub surface_x: Vec<T>,
}

pub fn surface_mass_matrix<T: Scalar>(sys: &LaplaceSystem<T>, mesh: &Mesh<T>) -> DMatrix<T> {
    let ns = sys.surface_count();
    let mut position = vec![None; mesh.node_count()];
    for (k, &s) in sys.dirichlet_set.iter().enumerate() {
        position[s] = Some(k);
    }
    let mut m = DMatrix::zeros(ns, ns);
    let (third, sixth) = (T::one() / T::lit(3.0), T::one() / T::lit(6.0));
    for edge in mesh.edges_with_tag(BoundaryTag::FreeSurface) {
        let [p, q] = edge.nodes;
        let len = mesh.edge_length(p, q);
        let (pp, pq) = (position[p], position[q]);
        if let Some(i) = pp {
            m[(i, i)] += third * len;
        }
        if let Some(j) = pq {
            m[(j, j)] += third * len;
        }
        if let (Some(i), Some(j)) = (pp, pq) {
            m[(i, j)] += sixth * len;
            m[(j, i)] += sixth * len;
        }
    }
    m
}

/// Steklov-Poincare Schur complement on the free-surface unknowns.
pub fn dtn_schur<T: Scalar>(sys: &LaplaceSystem<T>, mesh: &Mesh<T>) -> Result<DtnOperator<T>> {
    let ns = sys.surface_count();
    let ni = sys.interior.len();
    // sparse columns of A_IS
    let coupling: Vec<Vec<(usize, T)>> = sys
        .dirichlet_set
        .iter()
        .map(|&s| sys.stiffness.row(s).filter_map(|(j, a)| sys.interior_position[j].map(|p| (p, a))).collect())
        .collect();
    let mut solves = Vec::with_capacity(ns);
    for col in &coupling {
        let mut rhs = DVector::zeros(ni);
        for &(p, a) in col {
            rhs[p] = a;
        }
        solves.push(sys.solve_interior(&rhs)?);
    }
    let mut lambda = DMatrix::zeros(ns, ns);
    for i in 0..ns {
        for j in i..ns {
            let direct = sys.stiffness.get(sys.dirichlet_set[i], sys.dirichlet_set[j]);
            let correction = coupling[i].iter().fold(T::zero(), |acc, &(p, a)| acc + a * solves[j][p]);
            let v = direct - correction;
            lambda[(i, j)] = v;
            lambda[(j, i)] = v;
        }
    }
    Ok(DtnOperator {
        lambda_weak: lambda,
        surface_mass: surface_mass_matrix(sys, mesh),
        surface_x: sys.dirichlet_set.iter().map(|&s| mesh.nodes[s][0]).collect(),
    })
}

impl<T: Scalar> DtnOperator<T> {
    pub fn surface_count(&self) -> usize {
        self.surface_x.len()
    }

    /// Generalized eigenpairs of `(lambda_weak, surface_mass)`, ascending.
    pub fn eigen(&self) -> Result<(Vec<T>, DMatrix<T>)> {
        crate::linalg::generalized_symmetric_eigen(&self.lambda_weak, &self.surface_mass)
    }

    /// Pointwise flux values `M_E^{-1} f` from a weak flux functional.
    pub fn flux_density(&self, weak_flux: &DVector<T>) -> Result<DVector<T>> {
        let chol = Cholesky::new(self.surface_mass.clone()).ok_or_else(|| Error::Solve("surface mass not SPD".into()))?;
        Ok(chol.solve(weak_flux))
    }

    /// `int_E v` for a nodal surface field.
    pub fn integrate(&self, surface: &DVector<T>) -> T {
        (&self.surface_mass * surface).sum()
    }

    /// Linear interpolation of a surface field at `x` (clamped to the nearest segment end).
    pub fn interpolate(&self, surface: &DVector<T>, x: T) -> T {
        let xs = &self.surface_x;
        match xs.iter().position(|&xi| xi >= x) {
            Some(0) => surface[0],
            None => surface[xs.len() - 1],
            Some(k) => {
                let (x0, x1) = (xs[k - 1], xs[k]);
                if x1 - x0 > (x0.abs() + x1.abs()) * T::lit(1e3) * T::unit_roundoff() && x > x0 {
                    let w = (x - x0) / (x1 - x0);
                    surface[k - 1] * (T::one() - w) + surface[k] * w
                } else {
                    surface[k]
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (FluidGeometry<f64>, Mesh<f64>, LaplaceSystem<f64>) {
        let g = FluidGeometry::new(10.0, 40.0, 5.0, 2.0, -1.0, 1.0).unwrap();
        let m = generate_mesh(&g).unwrap();
        let s = assemble_laplace(&m).unwrap();
        (g, m, s)
    }

    #[test]
    fn stiffness_kernel_and_area() {
        let (g, m, s) = setup();
        let ones = DVector::from_element(m.node_count(), 1.0);
        let r = s.stiffness.mul_vec(&ones);
        assert!(r.amax() <= 1e-12 * s.stiffness.max_abs());
        let x = DVector::from_fn(m.node_count(), |i, _| m.nodes[i][0]);
        let q = s.stiffness.bilinear(&x, &x);
        assert!((q - g.area()).abs() <= 1e-10 * g.area());
        assert!(s.stiffness.asymmetry() <= 1e-14);
    }

    #[test]
    fn stiffness_is_psd_on_random_fields() {
        let (_, m, s) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = DVector::from_fn(m.node_count(), |_, _| rng.random_range(-1.0..1.0));
            assert!(s.stiffness.bilinear(&u, &u) >= 0.0);
        }
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let (_, mut m, _) = setup();
        let t = m.triangles[0];
        m.triangles[0] = [t[0], t[0], t[1]];
        assert!(matches!(assemble_laplace(&m), Err(Error::Assembly(_))));
    }

    #[test]
    fn kirchhoff_vanishes_on_surface_and_zero_data_gives_zero() {
        let (g, m, s) = setup();
        let k = solve_kirchhoff(&s, &m, &g).unwrap();
        for phi in &k.phi {
            for &n in &s.dirichlet_set {
                assert_eq!(phi[n], 0.0);
            }
        }
        let zero = solve_kirchhoff_with(&s, &m, |_, _| [0.0; 3]).unwrap();
        for phi in &zero.phi {
            assert_eq!(phi.amax(), 0.0);
        }
    }

    #[test]
    fn kirchhoff_residual_is_small() {
        let (g, m, s) = setup();
        let k = solve_kirchhoff(&s, &m, &g).unwrap();
        for i in 0..3 {
            let r = s.stiffness.mul_vec(&k.phi[i]) - &k.neumann_load[i];
            let inner = DVector::from_fn(s.interior.len(), |p, _| r[s.interior[p]]);
            assert!(inner.norm() <= 1e-10 * k.neumann_load[i].norm());
        }
    }

    #[test]
    fn heave_potential_has_positive_energy_and_mirror_symmetry() {
        let (g, m, s) = setup();
        let k = solve_kirchhoff(&s, &m, &g).unwrap();
        assert!(k.neumann_load[1].dot(&k.phi[1]) > 0.0);
        let mirror: Vec<usize> = (0..m.node_count())
            .map(|i| {
                let p = m.nodes[i];
                m.nodes.iter().position(|q| q[0] == -p[0] && q[1] == p[1]).unwrap()
            })
            .collect();
        let parity = [-1.0, 1.0, -1.0];
        for (i, (phi, sign)) in k.phi.iter().zip(parity).enumerate() {
            let scale = phi.amax();
            let defect = (0..m.node_count()).map(|n| (phi[n] - sign * phi[mirror[n]]).abs()).fold(0.0, f64::max);
            assert!(defect <= 1e-8 * scale, "mode {i}: {defect}");
        }
    }

    #[test]
    fn dtn_symmetric_with_constant_kernel() {
        let (_, m, s) = setup();
        let dtn = dtn_schur(&s, &m).unwrap();
        assert_eq!(crate::linalg::relative_asymmetry(&dtn.lambda_weak), 0.0);
        let ones = DVector::from_element(dtn.surface_count(), 1.0);
        assert!((&dtn.lambda_weak * &ones).amax() <= 1e-12 * dtn.lambda_weak.amax());
        // the contact-point hats are not surface unknowns, so half an edge is missing at each side
        let total = dtn.integrate(&ones);
        assert!(total < 70.0 && total > 69.0, "{total}");
    }

    #[test]
    fn flux_of_constant_is_zero() {
        let (_, m, s) = setup();
        let c = DVector::from_element(m.node_count(), 2.5);
        let f = consistent_flux(&s, &c).unwrap();
        assert!(f.amax() <= 1e-12 * 2.5 * s.stiffness.max_abs());
    }

    #[test]
    fn lift_reproduces_surface_values() {
        let (_, m, s) = setup();
        let v = DVector::from_fn(s.surface_count(), |k, _| (k as f64 * 0.1).sin());
        let u = s.lift(&v).unwrap();
        assert_eq!(s.surface_trace(&u), v);
        let dtn = dtn_schur(&s, &m).unwrap();
        let via_flux = consistent_flux(&s, &u).unwrap();
        let via_schur = &dtn.lambda_weak * &v;
        assert!((via_flux - via_schur).amax() <= 1e-10 * dtn.lambda_weak.amax() * v.amax());
    }

    #[test]
    fn interpolation_hits_nodes() {
        let (_, m, s) = setup();
        let dtn = dtn_schur(&s, &m).unwrap();
        let v = DVector::from_fn(s.surface_count(), |k, _| dtn.surface_x[k] * 2.0);
        let x = dtn.surface_x[3];
        assert!((dtn.interpolate(&v, x) - 2.0 * x).abs() < 1e-12);
        let mid = 0.5 * (dtn.surface_x[3] + dtn.surface_x[4]);
        assert!((dtn.interpolate(&v, mid) - 2.0 * mid).abs() < 1e-12);
    }
}
