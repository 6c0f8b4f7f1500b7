//! Manufactured solutions, space-time error norms, and convergence studies.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::ensemble::{energy_budget, run, EnergyVerdict, EnsembleError, Order, SchemeConfig};
use crate::fem::{h1_seminorm_error, l2_error, Degree, FemError};
use crate::field::ScalarField;
use crate::mesh::Point;
use crate::scenarios::{build_convergence_case, convergence_config};

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("error trajectory is empty")]
    EmptyTrajectory,
    #[error("no resolutions requested")]
    NoResolutions,
    #[error("run at m = {m} failed: {source}")]
    Run {
        m: usize,
        #[source]
        source: EnsembleError,
    },
    #[error("run at m = {m} did not retain the mean fields")]
    FieldsMissing { m: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// `p(s) = s^2 (s - 1)^2` and its first two derivatives.
fn p(s: f64) -> [f64; 3] {
    [s * s * (s - 1.0).powi(2), 2.0 * s * (s - 1.0) * (2.0 * s - 1.0), 12.0 * s * s - 12.0 * s + 2.0]
}

/// `q(s) = s (s - 1)(2s - 1)` and its first two derivatives.
fn q(s: f64) -> [f64; 3] {
    [s * (s - 1.0) * (2.0 * s - 1.0), 6.0 * s * s - 6.0 * s + 1.0, 12.0 * s - 6.0]
}

/// `T = 10 cos(t) (p(x) q(y) - q(x) p(y))` with members `T_j = (1 + eps_j) T`
/// and conductivities `k_j = k + eps_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub kappa: f64,
    pub epsilons: Vec<f64>,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        ManufacturedCase { kappa: 1.0, epsilons: vec![1e-2, -1e-2] }
    }
}

impl ManufacturedCase {
    pub fn members(&self) -> usize {
        self.epsilons.len()
    }

    /// Unperturbed solution.
    pub fn exact(x: Point, t: f64) -> f64 {
        let ([px, ..], [qx, ..], [py, ..], [qy, ..]) = (p(x[0]), q(x[0]), p(x[1]), q(x[1]));
        10.0 * t.cos() * (px * qy - qx * py)
    }

    pub fn exact_gradient(x: Point, t: f64) -> [f64; 2] {
        let (px, qx, py, qy) = (p(x[0]), q(x[0]), p(x[1]), q(x[1]));
        let c = 10.0 * t.cos();
        [c * (px[1] * qy[0] - qx[1] * py[0]), c * (px[0] * qy[1] - qx[0] * py[1])]
    }

    pub fn exact_laplacian(x: Point, t: f64) -> f64 {
        let (px, qx, py, qy) = (p(x[0]), q(x[0]), p(x[1]), q(x[1]));
        10.0 * t.cos() * (px[2] * qy[0] + px[0] * qy[2] - qx[2] * py[0] - qx[0] * py[2])
    }

    pub fn exact_time_derivative(x: Point, t: f64) -> f64 {
        -10.0 * t.sin() * Self::spatial(x)
    }

    fn spatial(x: Point) -> f64 {
        let ([px, ..], [qx, ..], [py, ..], [qy, ..]) = (p(x[0]), q(x[0]), p(x[1]), q(x[1]));
        px * qy - qx * py
    }

    pub fn conductivity(&self, j: usize) -> ScalarField {
        ScalarField::constant(self.kappa + self.epsilons[j])
    }

    pub fn member_exact(&self, j: usize) -> ScalarField {
        let s = 1.0 + self.epsilons[j];
        ScalarField::new(move |x, t| s * Self::exact(x, t))
    }

    pub fn member_source(&self, j: usize) -> ScalarField {
        manufactured_source(self, j)
    }
}

/// `f_j = d/dt T_j - k_j Lap T_j` for the constant member conductivity.
pub fn manufactured_source(case: &ManufacturedCase, j: usize) -> ScalarField {
    let s = 1.0 + case.epsilons[j];
    let k = case.kappa + case.epsilons[j];
    ScalarField::new(move |x, t| {
        s * ManufacturedCase::exact_time_derivative(x, t) - s * k * ManufacturedCase::exact_laplacian(x, t)
    })
}

/// Discrete time norm applied to a sequence of spatial norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeNorm {
    /// `max_n ||v^n||`.
    Max,
    /// `(dt sum_n ||v^n||^2)^{1/2}`.
    L2,
}

/// Space-time norm of a trajectory given its per-level spatial norms.
pub fn triple_norm(spatial: &[f64], dt: f64, norm: TimeNorm) -> Result<f64, VerificationError> {
    if spatial.is_empty() {
        return Err(VerificationError::EmptyTrajectory);
    }
    Ok(match norm {
        TimeNorm::Max => spatial.iter().fold(0.0, |a: f64, &b| a.max(b)),
        TimeNorm::L2 => (dt * spatial.iter().map(|v| v * v).sum::<f64>()).sqrt(),
    })
}

/// `log2(e1 / e2) / log2(dt1 / dt2)`.
pub fn rate(e1: f64, e2: f64, dt1: f64, dt2: f64) -> f64 {
    (e1 / e2).log2() / (dt1 / dt2).log2()
}

#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub m: usize,
    pub dt: f64,
    /// `max_n || <T_h>^n - T(t^n) ||`.
    pub linf_l2: f64,
    /// `(dt sum_n || grad <T_h>^n - grad T(t^n) ||^2)^{1/2}`.
    pub l2_h1: f64,
    /// Rates against the previous row.
    pub linf_l2_rate: Option<f64>,
    pub l2_h1_rate: Option<f64>,
    pub factorizations: usize,
    pub energy: EnergyVerdict,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub order: Order,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Rates between the two finest resolutions.
    pub fn finest_rates(&self) -> Option<(f64, f64)> {
        let last = self.rows.last()?;
        Some((last.linf_l2_rate?, last.l2_h1_rate?))
    }

    /// Comma-separated table: one row per resolution, rates blank on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,dt,linf_l2_error,linf_l2_rate,l2_h1_error,l2_h1_rate\n");
        let opt = |r: Option<f64>| r.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{}",
                r.m,
                r.dt,
                r.linf_l2,
                opt(r.linf_l2_rate),
                r.l2_h1,
                opt(r.l2_h1_rate)
            );
        }
        out
    }

    /// Aligned human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:>4}  {:>12}  {:>6}  {:>12}  {:>6}\n", "1/m", "LinfL2", "rate", "L2H1", "rate");
        let opt = |r: Option<f64>| r.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4}  {:>12.2e}  {:>6}  {:>12.2e}  {:>6}",
                r.m,
                r.linf_l2,
                opt(r.linf_l2_rate),
                r.l2_h1,
                opt(r.l2_h1_rate)
            );
        }
        out
    }
}

/// Adjusts the scheme configuration of every run in a study.
pub type ConfigHook = Arc<dyn Fn(&mut SchemeConfig) + Send + Sync>;

/// Settings of a convergence study beyond the order and resolutions.
#[derive(Clone)]
pub struct StudyOptions {
    pub degree: Degree,
    /// Resolutions run concurrently when above 1.
    pub workers: usize,
    pub configure: Option<ConfigHook>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { degree: Degree::P2, workers: 1, configure: None }
    }
}

impl std::fmt::Debug for StudyOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StudyOptions")
            .field("degree", &self.degree)
            .field("workers", &self.workers)
            .field("configure", &self.configure.is_some())
            .finish()
    }
}

fn run_resolution(order: Order, m: usize, options: &StudyOptions) -> Result<ErrorRow, VerificationError> {
    let wrap = |source| VerificationError::Run { m, source };
    let (problem, _) = build_convergence_case(m, options.degree).map_err(wrap)?;
    let mut config = convergence_config(order, m);
    if let Some(f) = &options.configure {
        f(&mut config);
    }
    config.retain_fields = true;
    let stats = run(&problem, &config).map_err(wrap)?;
    let energy = energy_budget(&stats, &problem, &config).map_err(wrap)?;
    if stats.mean.len() != stats.records.len() {
        return Err(VerificationError::FieldsMissing { m });
    }
    let mut l2 = Vec::with_capacity(stats.mean.len());
    let mut h1 = Vec::with_capacity(stats.mean.len());
    for (n, mean) in stats.mean.iter().enumerate().skip(1) {
        let t = n as f64 * config.dt;
        l2.push(l2_error(&problem.mesh, &stats.dofs, mean, |x| ManufacturedCase::exact(x, t))?);
        h1.push(h1_seminorm_error(&problem.mesh, &stats.dofs, mean, |x| ManufacturedCase::exact_gradient(x, t))?);
    }
    Ok(ErrorRow {
        m,
        dt: config.dt,
        linf_l2: triple_norm(&l2, config.dt, TimeNorm::Max)?,
        l2_h1: triple_norm(&h1, config.dt, TimeNorm::L2)?,
        linf_l2_rate: None,
        l2_h1_rate: None,
        factorizations: stats.metadata.factorizations,
        energy,
    })
}

/// Runs the manufactured case at each `m` with `dt = 0.5 / m` and `t* = 1`,
/// measuring the ensemble-mean error against the unperturbed solution.
pub fn convergence_study(order: Order, ms: &[usize], options: &StudyOptions) -> Result<ErrorReport, VerificationError> {
    if ms.is_empty() {
        return Err(VerificationError::NoResolutions);
    }
    let mut rows: Vec<ErrorRow> = if options.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(options.workers).build().map_err(|e| {
            VerificationError::Run { m: ms[0], source: EnsembleError::InvalidConfig(format!("cannot start worker pool: {e}")) }
        })?;
        pool.install(|| ms.par_iter().map(|&m| run_resolution(order, m, options)).collect::<Result<_, _>>())?
    } else {
        ms.iter().map(|&m| run_resolution(order, m, options)).collect::<Result<_, _>>()?
    };
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        let r1 = rate(a.linf_l2, b.linf_l2, a.dt, b.dt);
        let r2 = rate(a.l2_h1, b.l2_h1, a.dt, b.dt);
        rows[i].linf_l2_rate = Some(r1);
        rows[i].l2_h1_rate = Some(r2);
    }
    Ok(ErrorReport { order, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_norm_closed_forms() {
        let c = 0.37;
        let n = 40;
        let dt = 1.0 / n as f64;
        let v = vec![c; n];
        assert!((triple_norm(&v, dt, TimeNorm::Max).unwrap() - c).abs() < 1e-12);
        assert!((triple_norm(&v, dt, TimeNorm::L2).unwrap() - c).abs() < 1e-12);
        assert_eq!(triple_norm(&[0.0; 5], 0.1, TimeNorm::L2).unwrap(), 0.0);
        assert!((triple_norm(&[2.0], 0.25, TimeNorm::L2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(triple_norm(&[], 0.1, TimeNorm::Max), Err(VerificationError::EmptyTrajectory)));
    }

    #[test]
    fn rate_of_equal_errors_is_zero() {
        assert_eq!(rate(1e-3, 1e-3, 0.1, 0.05), 0.0);
        assert!((rate(4e-3, 1e-3, 0.1, 0.05) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn vanishes_on_boundary() {
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            for x in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                assert!(ManufacturedCase::exact(x, 0.3).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn printed_formula_at_a_point() {
        let (x, y) = (0.5_f64, 0.25_f64);
        let printed = 10.0
            * (x * x * (x - 1.0).powi(2) * y * (y - 1.0) * (2.0 * y - 1.0)
                - x * (x - 1.0) * (2.0 * x - 1.0) * y * y * (y - 1.0).powi(2));
        assert_eq!(ManufacturedCase::exact([x, y], 0.0), printed);
    }

    #[test]
    fn symmetric_sources_average_to_unperturbed() {
        let case = ManufacturedCase::default();
        let f0 = manufactured_source(&ManufacturedCase { kappa: 1.0, epsilons: vec![0.0] }, 0);
        let (a, b) = (manufactured_source(&case, 0), manufactured_source(&case, 1));
        for &(x, t) in &[([0.3, 0.8], 0.1), ([0.55, 0.2], 0.9)] {
            let avg = 0.5 * (a.eval(x, t) + b.eval(x, t));
            // (1 + e)^2 averages to 1 + e^2.
            let lap = ManufacturedCase::exact_laplacian(x, t);
            assert!((avg - (f0.eval(x, t) - 1e-4 * lap)).abs() < 1e-13);
        }
    }

    #[test]
    fn source_at_zero_cosine() {
        let case = ManufacturedCase { kappa: 1.0, epsilons: vec![0.0] };
        let f = manufactured_source(&case, 0);
        let t = std::f64::consts::FRAC_PI_2;
        let x = [0.3, 0.6];
        let expected = -10.0 * t.sin() * ManufacturedCase::spatial(x);
        assert!((f.eval(x, t) - expected).abs() < 1e-14);
    }
}
