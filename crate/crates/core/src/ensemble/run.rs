use crate::fem::{integrate, DofMap};
use crate::field::ScalarField;
use crate::linsolve::SolverPath;

use super::energy::{EnergyLedger, MemberLedger};
use super::problem::{mean_and_fluctuations, EnsembleProblem};
use super::stepper::{prepare, EnsembleState};
use super::{Bootstrap, EnsembleError, Order, SchemeConfig, Splitting};

/// Summary of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `||T_j||` in `L^2`, per member.
    pub member_norms: Vec<f64>,
    pub member_min: Vec<f64>,
    pub member_max: Vec<f64>,
    pub mean_norm: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    /// Largest pointwise variance over the dofs.
    pub max_variance: f64,
}

/// Member, mean and variance fields at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub members: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub order: Order,
    pub splitting: Splitting,
    pub solver: SolverPath,
    pub bootstrap: Option<Bootstrap>,
    pub variance_estimator: &'static str,
    pub factorizations: usize,
    pub steps: usize,
    pub dt: f64,
    pub final_time: f64,
    pub members: usize,
    pub dofs: usize,
    pub stability_ratio: f64,
    pub stability_threshold: f64,
    pub kappa_max: Option<f64>,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    pub dofs: DofMap,
    /// One record per level `0..=N`.
    pub records: Vec<StepRecord>,
    /// Mean field per level, when retained.
    pub mean: Vec<Vec<f64>>,
    /// Population variance field per level, when retained.
    pub variance: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    /// Member vectors at the final level.
    pub final_members: Vec<Vec<f64>>,
    /// Present for the ensemble-mean splitting.
    pub ledger: Option<EnergyLedger>,
    pub metadata: RunMetadata,
}

impl TrajectoryStats {
    pub fn final_mean(&self) -> Vec<f64> {
        ensemble_mean(&self.final_members)
    }
}

/// Dof-wise average, written as an offset from the first member so that
/// identical members average to themselves exactly.
pub(crate) fn ensemble_mean(members: &[Vec<f64>]) -> Vec<f64> {
    let first = &members[0];
    let j = members.len() as f64;
    (0..first.len())
        .map(|i| {
            let offset: f64 = members[1..].iter().map(|m| m[i] - first[i]).sum();
            first[i] + offset / j
        })
        .collect()
}

/// Dof-wise population variance (divide by `J`).
pub(crate) fn ensemble_variance(members: &[Vec<f64>], mean: &[f64]) -> Vec<f64> {
    let j = members.len() as f64;
    (0..mean.len()).map(|i| members.iter().map(|m| (m[i] - mean[i]).powi(2)).sum::<f64>() / j).collect()
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

struct Recorder<'a> {
    problem: &'a EnsembleProblem,
    config: &'a SchemeConfig,
    mean_kappa: ScalarField,
    stats_records: Vec<StepRecord>,
    mean: Vec<Vec<f64>>,
    variance: Vec<Vec<f64>>,
    snapshots: Vec<Snapshot>,
    ledger: Option<EnergyLedger>,
}

impl Recorder<'_> {
    fn source_norm(&self, j: usize, t: f64) -> f64 {
        let f = &self.problem.members[j].source;
        if f.as_constant() == Some(0.0) {
            return 0.0;
        }
        integrate(&self.problem.mesh, |p| f.eval(p, t).powi(2) / self.mean_kappa.eval(p, 0.0))
    }

    fn record(&mut self, state: &EnsembleState, members: &[Vec<f64>], step: usize, last: usize) {
        let time = step as f64 * self.config.dt;
        let mass = state.mass();
        let mean = ensemble_mean(members);
        let variance = ensemble_variance(members, &mean);
        let (mean_min, mean_max) = extrema(&mean);
        let (member_min, member_max) = members.iter().map(|m| extrema(m)).unzip();
        self.stats_records.push(StepRecord {
            step,
            time,
            member_norms: members.iter().map(|m| mass.quad_form(m).sqrt()).collect(),
            member_min,
            member_max,
            mean_norm: mass.quad_form(&mean).sqrt(),
            mean_min,
            mean_max,
            max_variance: variance.iter().fold(0.0, |a: f64, &b| a.max(b)),
        });
        if let Some(mut ledger) = self.ledger.take() {
            for (j, (l, m)) in ledger.members.iter_mut().zip(members).enumerate() {
                let s = if step == 0 { 0.0 } else { self.source_norm(j, time) };
                l.record(mass, state.mean_stiffness(), m, s);
            }
            self.ledger = Some(ledger);
        }
        let every = self.config.snapshot_every;
        if every > 0 && (step.is_multiple_of(every) || step == last) {
            self.snapshots.push(Snapshot {
                step,
                time,
                members: members.to_vec(),
                mean: mean.clone(),
                variance: variance.clone(),
            });
        }
        if self.config.retain_fields {
            self.mean.push(mean);
            self.variance.push(variance);
        }
    }
}

/// Prepares the ensemble and advances it to the final time, recording
/// per-level statistics, optional snapshots, and the energy ledger.
pub fn run(problem: &EnsembleProblem, config: &SchemeConfig) -> Result<TrajectoryStats, EnsembleError> {
    let steps = config.validate()?;
    let mut state = prepare(problem, config)?;
    let (mean_kappa, _) = mean_and_fluctuations(problem);
    let ledger = (config.splitting == Splitting::EnsembleMean)
        .then(|| EnergyLedger { members: vec![MemberLedger::default(); problem.len()] });
    let mut rec = Recorder {
        problem,
        config,
        mean_kappa,
        stats_records: Vec::with_capacity(steps + 1),
        mean: Vec::new(),
        variance: Vec::new(),
        snapshots: Vec::new(),
        ledger,
    };
    if let Some(prev) = state.previous() {
        rec.record(&state, prev, 0, steps);
    }
    rec.record(&state, state.current(), state.step_index(), steps);
    while state.step_index() < steps {
        state.step()?;
        rec.record(&state, state.current(), state.step_index(), steps);
    }

    let stability = state.stability();
    let metadata = RunMetadata {
        order: config.order,
        splitting: config.splitting,
        solver: state.solver_path(),
        bootstrap: state.bootstrap_used(),
        variance_estimator: "population",
        factorizations: state.factorization_count(),
        steps,
        dt: config.dt,
        final_time: config.final_time,
        members: problem.len(),
        dofs: state.dofs().num_dofs(),
        stability_ratio: stability.ratio,
        stability_threshold: stability.threshold,
        kappa_max: state.kappa_max(),
        workers: config.workers,
    };
    Ok(TrajectoryStats {
        dofs: state.dofs().clone(),
        records: rec.stats_records,
        mean: rec.mean,
        variance: rec.variance,
        snapshots: rec.snapshots,
        final_members: state.current().to_vec(),
        ledger: rec.ledger,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_identical_members_is_exact() {
        let v = vec![0.1, 0.7, -3.3];
        let members = vec![v.clone(); 3];
        let mean = ensemble_mean(&members);
        assert_eq!(mean, v);
        assert!(ensemble_variance(&members, &mean).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn population_variance() {
        let members = vec![vec![1.0], vec![3.0]];
        let mean = ensemble_mean(&members);
        assert_eq!(mean, vec![2.0]);
        assert_eq!(ensemble_variance(&members, &mean), vec![1.0]);
    }
}
