//! Text renderings of time series, spectra and operator summaries.

use std::io::Write;

use serde::Serialize;

use crate::coupled::{Assembly, CoupledSystem, Spectrum};
use crate::error::Result;
use crate::linalg::{relative_asymmetry, spd_condition_number};
use crate::mesh::{generate_mesh, FluidGeometry};
use crate::potential::{assemble_laplace_with_tolerance, dtn_schur, DtnOperator};
use crate::timeloop::SimRecord;

pub const TIMESERIES_HEADER: &str = "t,q1,q2,q3,qd1,qd2,qd3,w_tip,wth_tip,v_probe,E_fluid_kin,E_fluid_pot,E_plat_kin,E_plat_pot,E_beam_kin,E_beam_pot,E_tip_tr,E_tip_rot,E_total,work,residual";

pub const MODES_HEADER: &str = "index,omega,growth_rate,damping_ratio,fluid_share,platform_share,beam_share,residual";

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_row(r: &SimRecord<f64>) -> String {
    let e = &r.energy;
    let values = [
        r.t,
        r.q[0],
        r.q[1],
        r.q[2],
        r.qd[0],
        r.qd[1],
        r.qd[2],
        r.w_tip,
        r.wth_tip,
        r.v_probe,
        e.fluid_kinetic,
        e.fluid_potential,
        e.platform_kinetic,
        e.platform_potential,
        e.beam_kinetic,
        e.beam_potential,
        e.tip_translational,
        e.tip_rotational,
        e.total,
        e.work,
        e.residual,
    ];
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

/// Streams header and rows; returns a sink usable with `simulate_with`.
pub fn timeseries_writer<W: Write>(mut out: W) -> Result<impl FnMut(&SimRecord<f64>) -> Result<()>> {
    writeln!(out, "{TIMESERIES_HEADER}")?;
    Ok(move |r: &SimRecord<f64>| {
        writeln!(out, "{}", timeseries_row(r))?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub index: usize,
    pub omega: f64,
    pub growth_rate: f64,
    pub damping_ratio: f64,
    pub shares: [f64; 3],
    pub residual: f64,
}

/// The `k` lowest nonzero modes with their energy shares.
pub fn mode_rows(sys: &CoupledSystem<f64>, spectrum: &Spectrum<f64>, k: usize) -> Vec<ModeRow> {
    spectrum
        .lowest(k, 1e-10)
        .into_iter()
        .enumerate()
        .map(|(index, i)| {
            let lambda = spectrum.values[i];
            let modulus = (lambda.re * lambda.re + lambda.im * lambda.im).sqrt();
            let [(xr, yr), (xi, yi)] = spectrum.mode_parts(i);
            let a = sys.energy_split(&xr, &yr);
            let b = sys.energy_split(&xi, &yi);
            let parts = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let total: f64 = parts.iter().sum();
            ModeRow {
                index: index + 1,
                omega: lambda.im,
                growth_rate: lambda.re,
                damping_ratio: if modulus > 0.0 { -lambda.re / modulus + 0.0 } else { 0.0 },
                shares: parts.map(|p| p / total),
                residual: spectrum.residuals[i],
            }
        })
        .collect()
}

pub fn modes_csv(rows: &[ModeRow]) -> String {
    let mut s = String::from(MODES_HEADER);
    s.push('\n');
    for r in rows {
        let cols = [r.omega, r.growth_rate, r.damping_ratio, r.shares[0], r.shares[1], r.shares[2], r.residual];
        s.push_str(&r.index.to_string());
        for c in cols {
            s.push(',');
            s.push_str(&num(c));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct DtnRow {
    pub index: usize,
    pub eigenvalue: f64,
    /// `k tanh(k h)` for the same index in a tank without hull.
    pub open_tank_reference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlatformSummary {
    pub platform_mass: [[f64; 3]; 3],
    pub added_mass: [[f64; 3]; 3],
    pub added_mass_surface_form: [[f64; 3]; 3],
    pub added_mass_asymmetry: f64,
    pub total_mass: [[f64; 3]; 3],
    pub hydrostatic: [[f64; 3]; 3],
    pub coupling_row_norms: [f64; 3],
    pub coupling_row_sums: [f64; 3],
    pub condition_total_mass: f64,
    pub condition_hydrostatic: f64,
    pub condition_system_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub nodes: usize,
    pub surface_nodes: usize,
    pub dtn: Vec<DtnRow>,
    /// Absent for a tank without a hull.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platform: Option<PlatformSummary>,
}

fn rows3(m: &nalgebra::Matrix3<f64>) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

fn dtn_table(dtn: &DtnOperator<f64>, geom: &FluidGeometry<f64>, rows: usize) -> Result<Vec<DtnRow>> {
    let (values, _) = dtn.eigen()?;
    Ok(values
        .iter()
        .take(rows)
        .enumerate()
        .map(|(n, &v)| DtnRow {
            index: n,
            eigenvalue: v,
            open_tank_reference: crate::oracle::sloshing_eigenvalue(geom.depth, geom.tank_half_length, n),
        })
        .collect())
}

/// Mesh and DtN table only, for any geometry.
pub fn fluid_summary(geom: &FluidGeometry<f64>, solver_tolerance: f64, dtn_rows: usize) -> Result<OperatorSummary> {
    let mesh = generate_mesh(geom)?;
    let sys = assemble_laplace_with_tolerance(&mesh, solver_tolerance)?;
    let dtn = dtn_schur(&sys, &mesh)?;
    Ok(OperatorSummary {
        nodes: mesh.node_count(),
        surface_nodes: dtn.surface_count(),
        dtn: dtn_table(&dtn, geom, dtn_rows)?,
        platform: None,
    })
}

pub fn operator_summary(a: &Assembly<f64>, dtn_rows: usize) -> Result<OperatorSummary> {
    let c = &a.hydro.coupling;
    let surface = crate::hydro::added_mass_surface_form(&a.kirchhoff, a.system.fluid_density);
    let ma = nalgebra::DMatrix::from_fn(3, 3, |i, j| a.hydro.added_mass[(i, j)]);
    let k = nalgebra::DMatrix::from_fn(3, 3, |i, j| a.hydro.hydrostatic[(i, j)]);
    let mt = nalgebra::DMatrix::from_fn(3, 3, |i, j| a.hydro.total_mass[(i, j)]);
    Ok(OperatorSummary {
        nodes: a.mesh.node_count(),
        surface_nodes: a.system.layout.n_surface,
        dtn: dtn_table(&a.dtn, &a.geometry, dtn_rows)?,
        platform: Some(PlatformSummary {
            platform_mass: rows3(&a.hydro.platform_mass),
            added_mass: rows3(&a.hydro.added_mass),
            added_mass_surface_form: rows3(&surface),
            added_mass_asymmetry: relative_asymmetry(&ma),
            total_mass: rows3(&a.hydro.total_mass),
            hydrostatic: rows3(&a.hydro.hydrostatic),
            coupling_row_norms: [c.row(0).norm(), c.row(1).norm(), c.row(2).norm()],
            coupling_row_sums: [c.row(0).sum(), c.row(1).sum(), c.row(2).sum()],
            condition_total_mass: spd_condition_number(&mt),
            condition_hydrostatic: spd_condition_number(&k),
            condition_system_mass: spd_condition_number(&a.system.system.mass),
        }),
    })
}
