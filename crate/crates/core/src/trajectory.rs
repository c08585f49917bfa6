//! Stored solutions and their per-time diagnostics.

use std::io::{self, Write};

use crate::cosmo::{conserved_em_flux, hamiltonian_residual, CosmoState, PhysParams};
use crate::phase_space::{moment_number, sobolev_norm, GridError, GridFunction, SobolevParams};

pub const CSV_HEADER: &str = "t,E,U,W,Z,Phi,psi,ham_residual,flux,f_sobolev,f_min,f_mass";

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Completed,
    /// Integration stopped after `t_last`, the last time at which the state
    /// was inside the regime of validity.
    ValidityHorizon {
        t_last: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub ham_residual: Vec<f64>,
    pub flux: Vec<f64>,
    pub f_sobolev: Vec<f64>,
    pub f_min: Vec<f64>,
    pub f_mass: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CosmoState>,
    pub fields: Vec<GridFunction>,
    /// `(1/u⁰) Q(f, f)` at each stored time; empty unless requested.
    pub sources: Vec<GridFunction>,
    pub diagnostics: Diagnostics,
    pub status: SolveStatus,
    pub sobolev: SobolevParams,
    pub params: PhysParams,
}

impl Trajectory {
    pub fn new(sobolev: SobolevParams, params: PhysParams) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            fields: Vec::new(),
            sources: Vec::new(),
            diagnostics: Diagnostics::default(),
            status: SolveStatus::Completed,
            sobolev,
            params,
        }
    }

    /// Appends a record and computes its diagnostics.
    pub fn push(&mut self, t: f64, s: CosmoState, f: GridFunction) -> Result<(), GridError> {
        let d = &mut self.diagnostics;
        d.ham_residual.push(hamiltonian_residual(&s, &f, &self.params));
        d.flux.push(conserved_em_flux(&s));
        d.f_sobolev.push(sobolev_norm(&f, &self.sobolev)?);
        d.f_min.push(f.min());
        d.f_mass.push(moment_number(&f));
        self.times.push(t);
        self.states.push(s);
        self.fields.push(f);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn final_state(&self) -> Option<&CosmoState> {
        self.states.last()
    }

    pub fn final_field(&self) -> Option<&GridFunction> {
        self.fields.last()
    }

    pub fn completed(&self) -> bool {
        self.status == SolveStatus::Completed
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.diagnostics.ham_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest relative deviation of `Z/E³` from its initial value; absolute
    /// deviation when the initial flux vanishes.
    pub fn flux_drift(&self) -> f64 {
        let flux = &self.diagnostics.flux;
        let Some(&f0) = flux.first() else {
            return 0.0;
        };
        let scale = if f0 == 0.0 { 1.0 } else { f0.abs() };
        flux.iter().fold(0.0, |m, x| m.max((x - f0).abs() / scale))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        self.write_csv_every(out, 1)
    }

    /// Writes every `stride`-th record, always including the last one.
    pub fn write_csv_every<W: Write>(&self, mut out: W, stride: usize) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let d = &self.diagnostics;
        let stride = stride.max(1);
        let last = self.len().saturating_sub(1);
        for (i, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                t,
                s.e,
                s.u,
                s.w,
                s.z,
                s.phi,
                s.psi,
                d.ham_residual[i],
                d.flux[i],
                d.f_sobolev[i],
                d.f_min[i],
                d.f_mass[i]
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::make_grid;

    #[test]
    fn push_and_csv() {
        let p = PhysParams {
            lambda: 3.0,
            m: 1.0,
            rho: 0.0,
        };
        let mut tr = Trajectory::new(SobolevParams::new(2, 3.0).unwrap(), p);
        let grid = make_grid(2.0, 5).unwrap();
        let s = CosmoState {
            e: 1.0,
            u: 1.0,
            ..Default::default()
        };
        tr.push(0.0, s, GridFunction::zeros(grid)).unwrap();
        tr.push(0.5, CosmoState { z: 0.5, ..s }, GridFunction::zeros(grid))
            .unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.diagnostics.ham_residual, vec![0.0, -3.0 * std::f64::consts::PI]);
        assert_eq!(tr.flux_drift(), 0.5);
        let csv = tr.csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0e0,1e0,1e0,0e0,0e0,0e0,0e0,0e0,0e0,0e0,0e0,0e0"));
        assert_eq!(lines.clone().count(), 1);
        tr.push(1.0, s, GridFunction::zeros(grid)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv_every(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let times: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(times, ["0e0", "1e0"]);
    }
}
