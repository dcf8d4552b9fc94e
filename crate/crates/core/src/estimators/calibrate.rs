//! Empirical constant `c` for `Φ = c·ρ²` and `Ψ_t = c·e^{-r₀t}·ρ`.

use serde::{Deserialize, Serialize};

use super::{check_r0, column_moments, coupled_samples, grid_steps, rho, McConfig};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::rng::domain;
use crate::segment::Segment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c: f64,
    /// `max_t E_Q[½∫|h|²] / ρ_Φ²`.
    pub c_phi: f64,
    /// `max_t E_Q‖Z_t‖_r e^{r₀t} / ρ_Ψ`.
    pub c_psi: f64,
    pub rho_phi2: f64,
    pub rho_psi: f64,
    pub r0: f64,
    pub t_grid: Vec<f64>,
    pub mean_entropy: Vec<f64>,
    pub mean_z: Vec<f64>,
}

impl Calibration {
    pub fn from_means(
        rho_phi2: f64,
        rho_psi: f64,
        r0: f64,
        t_grid: &[f64],
        mean_entropy: Vec<f64>,
        mean_z: Vec<f64>,
    ) -> Self {
        let (mut c_phi, mut c_psi) = (0.0f64, 0.0f64);
        if rho_phi2 > 0.0 {
            for (t, (e, z)) in t_grid.iter().zip(mean_entropy.iter().zip(&mean_z)) {
                c_phi = c_phi.max(e / rho_phi2);
                c_psi = c_psi.max(z * (r0 * t).exp() / rho_psi);
            }
        }
        Calibration {
            c: c_phi.max(c_psi),
            c_phi,
            c_psi,
            rho_phi2,
            rho_psi,
            r0,
            t_grid: t_grid.to_vec(),
            mean_entropy,
            mean_z,
        }
    }

    /// `Φ = c·ρ_Φ²`.
    pub fn phi(&self) -> f64 {
        self.c * self.rho_phi2
    }

    /// `Ψ_t = c·e^{-r₀t}·ρ_Ψ`.
    pub fn psi(&self, t: f64) -> f64 {
        self.c * (-self.r0 * t).exp() * self.rho_psi
    }
}

/// Calibrate `c` from a `Q` run of the coupling from `(ξ, η)`.
pub fn calibrate(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    mc: &McConfig,
    t_grid: &[f64],
    r0: f64,
) -> Result<Calibration> {
    let m = cs.model();
    if cs.measure() != Measure::Q {
        return Err(SfdeError::usage("calibration runs under Q"));
    }
    check_r0(m, r0)?;
    mc.check(m)?;
    let steps = grid_steps(t_grid, mc.dt)?;
    let rows = coupled_samples(cs, xi, eta, mc, &steps, domain::CALIBRATE, 0.0, |p, row| {
        row.push(p.entropy());
        row.push(p.z_norm());
    })?;
    let cols = column_moments(&rows);
    let (rp2, rp) = rho(m, xi, eta)?;
    let ent = (0..steps.len()).map(|i| cols[2 * i].mean()).collect();
    let z = (0..steps.len()).map(|i| cols[2 * i + 1].mean()).collect();
    Ok(Calibration::from_means(rp2, rp, r0, t_grid, ent, z))
}
