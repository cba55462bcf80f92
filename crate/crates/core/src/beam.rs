//! Hermite finite elements for the Euler-Bernoulli beam and its tip body.
//!
//! Full beam DOFs are `[w_0, w'_0, w_1, w'_1, ..., w_n, w'_n]`; node 0 is the
//! clamp, node `n` carries the tip mass.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GAUSS_POINTS: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GAUSS_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_85, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_85];

/// A positive coefficient along the beam axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient<T> {
    Constant(T),
    /// Piecewise-linear table, held constant outside its range.
    Table {
        y: Vec<T>,
        values: Vec<T>,
    },
}

impl<T: Scalar> Coefficient<T> {
    pub fn table(y: Vec<T>, values: Vec<T>) -> Result<Self> {
        if y.len() < 2 || y.len() != values.len() {
            return Err(Error::Config("coefficient table needs at least two (y, value) pairs".into()));
        }
        if y.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("coefficient table abscissae must increase strictly".into()));
        }
        Ok(Coefficient::Table { y, values })
    }

    pub fn eval(&self, at: T) -> T {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Table { y, values } => {
                let k = Self::segment(y, at);
                match k {
                    None if at <= y[0] => values[0],
                    None => values[values.len() - 1],
                    Some(k) => {
                        let s = (at - y[k]) / (y[k + 1] - y[k]);
                        values[k] + s * (values[k + 1] - values[k])
                    }
                }
            }
        }
    }

    /// One-sided (right) derivative in `y`.
    pub fn slope(&self, at: T) -> T {
        match self {
            Coefficient::Constant(_) => T::zero(),
            Coefficient::Table { y, values } => match Self::segment(y, at) {
                Some(k) => (values[k + 1] - values[k]) / (y[k + 1] - y[k]),
                None => T::zero(),
            },
        }
    }

    fn segment(y: &[T], at: T) -> Option<usize> {
        if at < y[0] || at >= y[y.len() - 1] {
            return None;
        }
        Some(y.partition_point(|&v| v <= at).saturating_sub(1).min(y.len() - 2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamParams<T> {
    /// Clamp height.
    pub y0: T,
    pub length: T,
    /// Mass per unit length.
    pub density: Coefficient<T>,
    /// Flexural rigidity `EI`.
    pub rigidity: Coefficient<T>,
    pub tip_mass: T,
    pub tip_inertia: T,
    pub n_elements: usize,
}

impl<T: Scalar> BeamParams<T> {
    pub fn uniform(y0: T, length: T, density: T, rigidity: T, tip_mass: T, tip_inertia: T, n_elements: usize) -> Self {
        BeamParams {
            y0,
            length,
            density: Coefficient::Constant(density),
            rigidity: Coefficient::Constant(rigidity),
            tip_mass,
            tip_inertia,
            n_elements,
        }
    }

    pub fn tip_height(&self) -> T {
        self.y0 + self.length
    }

    /// Tip inertia may be zero here so the bare cantilever stays representable.
    pub fn validate(&self) -> Result<()> {
        if !(self.length > T::zero()) || !self.length.is_finite() {
            return Err(Error::Config("beam length must be positive".into()));
        }
        if self.n_elements < 2 {
            return Err(Error::Config("beam needs at least two elements".into()));
        }
        if self.tip_mass < T::zero() || self.tip_inertia < T::zero() {
            return Err(Error::Config("tip mass and inertia must be non-negative".into()));
        }
        Ok(())
    }

    pub fn node_heights(&self) -> Vec<T> {
        let n = self.n_elements;
        (0..=n).map(|k| self.y0 + self.length * T::from_usize_lossy(k) / T::from_usize_lossy(n)).collect()
    }
}

/// Hermite basis on `[0, h]` at local coordinate `s` in `[0, 1]`: values and first three `y`-derivatives.
pub fn hermite_basis<T: Scalar>(s: T, h: T) -> [[T; 4]; 4] {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let six = T::lit(6.0);
    let twelve = T::lit(12.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let value = [one - three * s2 + two * s3, h * (s - two * s2 + s3), three * s2 - two * s3, h * (s3 - s2)];
    let d1 = [(six * s2 - six * s) / h, one - T::lit(4.0) * s + three * s2, (six * s - six * s2) / h, three * s2 - two * s];
    let d2 = [(twelve * s - six) / (h * h), (six * s - T::lit(4.0)) / h, (six - twelve * s) / (h * h), (six * s - two) / h];
    let d3 = [twelve / (h * h * h), six / (h * h), -twelve / (h * h * h), six / (h * h)];
    [value, d1, d2, d3]
}

#[derive(Debug, Clone)]
pub struct BeamModel<T> {
    pub params: BeamParams<T>,
    pub nodes: Vec<T>,
    /// Distributed mass only.
    pub bare_mass: DMatrix<T>,
    /// Distributed mass plus tip body.
    pub mass: DMatrix<T>,
    pub stiffness: DMatrix<T>,
    pub tip_mass: T,
    pub tip_inertia: T,
}

impl<T: Scalar> BeamModel<T> {
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Full-DOF indices of the tip deflection and rotation.
    pub fn tip_dofs(&self) -> (usize, usize) {
        let n = self.n_elements();
        (2 * n, 2 * n + 1)
    }

    /// Stiffness and mass with the clamp DOFs removed.
    pub fn clamped(&self) -> (DMatrix<T>, DMatrix<T>) {
        let m = self.n_dofs() - 2;
        (self.stiffness.view((2, 2), (m, m)).into_owned(), self.mass.view((2, 2), (m, m)).into_owned())
    }

    /// Clamped-base natural frequencies (rad/s), ascending.
    pub fn cantilever_frequencies(&self) -> Result<Vec<T>> {
        let (k, m) = self.clamped();
        let (values, _) = crate::linalg::generalized_symmetric_eigen(&k, &m)?;
        Ok(values.into_iter().map(|v| v.max(T::zero()).sqrt()).collect())
    }

    /// Full-DOF field of the rigid transverse motion `r(y) . q`.
    pub fn rigid_field(&self, q: &Vector3<T>, y_g: T) -> DVector<T> {
        let mut out = DVector::zeros(self.n_dofs());
        for (k, &y) in self.nodes.iter().enumerate() {
            out[2 * k] = q[0] + (y - y_g) * q[2];
            out[2 * k + 1] = q[2];
        }
        out
    }

    /// `[(EI w'')', 0, -EI w'' + (y0 - y_G)(EI w'')']` at the clamp, from the first element.
    pub fn internal_force(&self, w: &DVector<T>, y_g: T) -> Result<Vector3<T>> {
        if w.len() != self.n_dofs() {
            return Err(Error::Dimension(format!("beam field has {} entries, expected {}", w.len(), self.n_dofs())));
        }
        let h = self.nodes[1] - self.nodes[0];
        let basis = hermite_basis(T::zero(), h);
        let (mut w2, mut w3) = (T::zero(), T::zero());
        for a in 0..4 {
            w2 += basis[2][a] * w[a];
            w3 += basis[3][a] * w[a];
        }
        let y0 = self.params.y0;
        let ei = self.params.rigidity.eval(y0);
        let moment = ei * w2;
        let shear = self.params.rigidity.slope(y0) * w2 + ei * w3;
        Ok(Vector3::new(shear, T::zero(), -moment + (y0 - y_g) * shear))
    }
}

fn sample_positive<T: Scalar>(c: &Coefficient<T>, y: T, name: &str) -> Result<T> {
    let v = c.eval(y);
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::Assembly(format!("{name} sample {v:e} at y = {y:e} is not positive")));
    }
    Ok(v)
}

impl<T: Scalar> BeamModel<T> {
    /// `1/2 int EI (w'')^2` on the stiffness quadrature; equals `1/2 w^T K w` but does not
    /// lose digits to rigid motion the way the matrix form does.
    pub fn strain_energy(&self, w: &DVector<T>) -> Result<T> {
        let half = T::lit(0.5);
        let mut total = T::zero();
        for e in 0..self.n_elements() {
            let (ya, yb) = (self.nodes[e], self.nodes[e + 1]);
            let h = yb - ya;
            for (xi, wt) in GAUSS_POINTS.iter().zip(GAUSS_WEIGHTS) {
                let s = half * (T::one() + T::lit(*xi));
                let ei = sample_positive(&self.params.rigidity, ya + s * h, "rigidity")?;
                let d2 = hermite_basis(s, h)[2];
                let curvature = (0..4).fold(T::zero(), |acc, a| acc + d2[a] * w[2 * e + a]);
                total += T::lit(wt) * half * h * ei * curvature * curvature;
            }
        }
        Ok(half * total)
    }
}

/// Consistent mass and stiffness with 4-point Gauss quadrature, tip body included.
pub fn assemble_beam<T: Scalar>(params: &BeamParams<T>) -> Result<BeamModel<T>> {
    params.validate()?;
    let nodes = params.node_heights();
    let dofs = 2 * nodes.len();
    let mut mass = DMatrix::zeros(dofs, dofs);
    let mut stiffness = DMatrix::zeros(dofs, dofs);
    let half = T::lit(0.5);
    for e in 0..params.n_elements {
        let (ya, yb) = (nodes[e], nodes[e + 1]);
        let h = yb - ya;
        let mut me = [[T::zero(); 4]; 4];
        let mut ke = [[T::zero(); 4]; 4];
        for (xi, wt) in GAUSS_POINTS.iter().zip(GAUSS_WEIGHTS) {
            let s = half * (T::one() + T::lit(*xi));
            let y = ya + s * h;
            let rho = sample_positive(&params.density, y, "density")?;
            let ei = sample_positive(&params.rigidity, y, "rigidity")?;
            let jw = T::lit(wt) * half * h;
            let basis = hermite_basis(s, h);
            for a in 0..4 {
                for b in 0..4 {
                    me[a][b] += jw * rho * basis[0][a] * basis[0][b];
                    ke[a][b] += jw * ei * basis[2][a] * basis[2][b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                mass[(2 * e + a, 2 * e + b)] += me[a][b];
                stiffness[(2 * e + a, 2 * e + b)] += ke[a][b];
            }
        }
    }
    crate::linalg::mirror_upper(&mut mass);
    crate::linalg::mirror_upper(&mut stiffness);
    let model =
        BeamModel { params: params.clone(), nodes, bare_mass: mass.clone(), mass, stiffness, tip_mass: T::zero(), tip_inertia: T::zero() };
    Ok(apply_tip_mass(model, params.tip_mass, params.tip_inertia))
}

/// Adds `m` and `J` on the tip deflection and rotation diagonals.
pub fn apply_tip_mass<T: Scalar>(mut model: BeamModel<T>, m: T, j: T) -> BeamModel<T> {
    let (tw, tr) = model.tip_dofs();
    model.mass[(tw, tw)] += m;
    model.mass[(tr, tr)] += j;
    model.tip_mass += m;
    model.tip_inertia += j;
    model
}

/// Maps `[q (3); w_1, w'_1, ..., w_n, w'_n]` to the full beam DOFs.
pub fn clamp_transform<T: Scalar>(params: &BeamParams<T>, y_g: T) -> DMatrix<T> {
    let n = params.n_elements;
    let mut t = DMatrix::zeros(2 * n + 2, 2 * n + 3);
    t[(0, 0)] = T::one();
    t[(0, 2)] = params.y0 - y_g;
    t[(1, 2)] = T::one();
    for k in 0..2 * n {
        t[(2 + k, 3 + k)] = T::one();
    }
    t
}
