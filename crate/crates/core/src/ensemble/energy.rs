use crate::sparse::CsrMatrix;

use super::problem::EnsembleProblem;
use super::run::TrajectoryStats;
use super::{EnsembleError, Order, SchemeConfig, Splitting};

/// Relative slack allowed on the right-hand side.
const SLACK: f64 = 1e-8;

/// Per-step energy quantities of one member, indexed by time level `n = 0..=N`.
///
/// `||v||^2 = v^T M v` and `g[n] = ||<k>^{1/2} grad T^n||^2`. Entries that
/// are undefined at a level (an increment at `n = 0`, say) are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemberLedger {
    /// `||T^n||^2`.
    pub mass: Vec<f64>,
    /// `||T^n - T^{n-1}||^2`.
    pub increment: Vec<f64>,
    /// `g[n]`.
    pub gradient: Vec<f64>,
    /// `||<k>^{-1/2} f^n||^2` in `L^2`.
    pub source: Vec<f64>,
    /// `||2 T^n - T^{n-1}||^2`.
    pub extrapolated: Vec<f64>,
    /// `||T^n - 2 T^{n-1} + T^{n-2}||^2`.
    pub curvature: Vec<f64>,
    /// `||<k>^{1/2} grad (T^2 + ... + T^n)||^2`.
    pub summed_gradient: Vec<f64>,
    running_sum: Vec<f64>,
    /// `T^{n-1}` and `T^{n-2}` after recording level `n - 1`.
    recent: [Vec<f64>; 2],
}

impl MemberLedger {
    /// Records the next level `T^n` of the member.
    pub(crate) fn record(&mut self, mass: &CsrMatrix, stiffness: &CsrMatrix, t: &[f64], source: f64) {
        let n = self.mass.len();
        let combo = |a: f64, b: f64, c: f64| -> Vec<f64> {
            let p = &self.recent[0];
            let q = &self.recent[1];
            (0..t.len()).map(|i| a * t[i] + b * p[i] + if c == 0.0 { 0.0 } else { c * q[i] }).collect()
        };
        self.mass.push(mass.quad_form(t));
        self.gradient.push(stiffness.quad_form(t));
        self.source.push(if n == 0 { 0.0 } else { source });
        if n >= 1 {
            self.increment.push(mass.quad_form(&combo(1.0, -1.0, 0.0)));
            self.extrapolated.push(mass.quad_form(&combo(2.0, -1.0, 0.0)));
        } else {
            self.increment.push(0.0);
            self.extrapolated.push(0.0);
        }
        self.curvature.push(if n >= 2 { mass.quad_form(&combo(1.0, -2.0, 1.0)) } else { 0.0 });
        if n >= 2 {
            if self.running_sum.is_empty() {
                self.running_sum = vec![0.0; t.len()];
            }
            self.running_sum.iter_mut().zip(t).for_each(|(s, x)| *s += x);
            self.summed_gradient.push(stiffness.quad_form(&self.running_sum));
        } else {
            self.summed_gradient.push(0.0);
        }
        let older = std::mem::replace(&mut self.recent[0], t.to_vec());
        self.recent[1] = older;
    }

    pub fn levels(&self) -> usize {
        self.mass.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub members: Vec<MemberLedger>,
}

/// Which way the summed gradient term of the second-order bound is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    /// The first-order bound; only one arrangement exists.
    Single,
    /// `||<k>^{1/2} sum grad T||^2`, sum inside the norm.
    SumInside,
    /// `sum ||<k>^{1/2} grad T||^2`, sum outside the norm.
    SumOutside,
}

impl Arrangement {
    pub fn name(self) -> &'static str {
        match self {
            Arrangement::Single => "single",
            Arrangement::SumInside => "sum-inside",
            Arrangement::SumOutside => "sum-outside",
        }
    }
}

/// One arrangement evaluated at every admissible final level `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCheck {
    pub arrangement: Arrangement,
    /// Both sides at the last level of the run.
    pub lhs: f64,
    pub rhs: f64,
    /// Largest `lhs / rhs` over all levels checked.
    pub worst_ratio: f64,
    /// First level at which the bound failed, if any.
    pub first_failure: Option<usize>,
}

impl EnergyCheck {
    pub fn holds(&self) -> bool {
        self.first_failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberVerdict {
    pub member: usize,
    pub checks: Vec<EnergyCheck>,
}

impl MemberVerdict {
    /// True when at least one recorded arrangement holds at every level.
    pub fn holds(&self) -> bool {
        self.checks.iter().any(EnergyCheck::holds)
    }

    pub fn check(&self, arrangement: Arrangement) -> Option<&EnergyCheck> {
        self.checks.iter().find(|c| c.arrangement == arrangement)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVerdict {
    pub order: Order,
    pub members: Vec<MemberVerdict>,
}

impl EnergyVerdict {
    pub fn holds(&self) -> bool {
        self.members.iter().all(MemberVerdict::holds)
    }

    /// Whether a given arrangement holds for every member.
    pub fn holds_in(&self, arrangement: Arrangement) -> bool {
        self.members.iter().all(|m| m.check(arrangement).is_some_and(EnergyCheck::holds))
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn evaluate(arrangement: Arrangement, levels: impl Iterator<Item = (usize, f64, f64)>) -> EnergyCheck {
    let mut check = EnergyCheck { arrangement, lhs: 0.0, rhs: 0.0, worst_ratio: 0.0, first_failure: None };
    for (n, lhs, rhs) in levels {
        check.lhs = lhs;
        check.rhs = rhs;
        check.worst_ratio = check.worst_ratio.max(ratio(lhs, rhs));
        if check.first_failure.is_none() && lhs > rhs * (1.0 + SLACK) {
            check.first_failure = Some(n);
        }
    }
    check
}

fn first_order_check(l: &MemberLedger, dt: f64) -> EnergyCheck {
    let levels = l.levels();
    let rhs0 = l.mass[0] + dt * l.gradient[0];
    let (mut inc, mut grad, mut src) = (0.0, 0.0, 0.0);
    let rows = (1..levels).map(move |n| {
        inc += l.increment[n];
        grad += l.gradient[n];
        src += l.source[n];
        let lhs = l.mass[n] + inc + dt * l.gradient[n] + dt / 4.0 * grad;
        (n, lhs, 4.0 * dt * src + rhs0)
    });
    evaluate(Arrangement::Single, rows)
}

fn second_order_checks(l: &MemberLedger, dt: f64) -> [EnergyCheck; 2] {
    let levels = l.levels();
    let rhs0 = l.mass[0] + l.extrapolated[1] + 2.0 * dt * (l.gradient[1] + l.gradient[0]);
    let mut rows = Vec::new();
    let (mut curv, mut grad, mut src) = (0.0, 0.0, 0.0);
    for n in 2..levels {
        curv += l.curvature[n];
        grad += l.gradient[n];
        src += l.source[n];
        let common = l.mass[n] + l.extrapolated[n] + curv + 2.0 * dt * (l.gradient[n] + l.gradient[n - 1]);
        let rhs = 8.0 * dt * src + rhs0;
        rows.push((n, common + dt / 2.0 * l.summed_gradient[n], common + dt / 2.0 * grad, rhs));
    }
    [
        evaluate(Arrangement::SumInside, rows.iter().map(|&(n, a, _, r)| (n, a, r))),
        evaluate(Arrangement::SumOutside, rows.iter().map(|&(n, _, b, r)| (n, b, r))),
    ]
}

/// Evaluates both sides of the discrete energy bound for every member at
/// every level of a completed run. Second-order runs report both readings
/// of the summed gradient term.
pub fn energy_budget(
    stats: &TrajectoryStats,
    problem: &EnsembleProblem,
    config: &SchemeConfig,
) -> Result<EnergyVerdict, EnsembleError> {
    if config.splitting != Splitting::EnsembleMean {
        return Err(EnsembleError::EnergyNotApplicable);
    }
    let ledger = stats.ledger.as_ref().ok_or(EnsembleError::LedgerMissing)?;
    if ledger.members.len() != problem.len() {
        return Err(EnsembleError::LedgerMissing);
    }
    let members = ledger
        .members
        .iter()
        .enumerate()
        .map(|(member, l)| {
            let checks = match config.order {
                Order::First => vec![first_order_check(l, config.dt)],
                Order::Second => second_order_checks(l, config.dt).to_vec(),
            };
            MemberVerdict { member, checks }
        })
        .collect();
    Ok(EnergyVerdict { order: config.order, members })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(mass: &[f64], gradient: &[f64], source: &[f64]) -> MemberLedger {
        let n = mass.len();
        MemberLedger {
            mass: mass.to_vec(),
            increment: vec![0.0; n],
            gradient: gradient.to_vec(),
            source: source.to_vec(),
            extrapolated: vec![0.0; n],
            curvature: vec![0.0; n],
            summed_gradient: vec![0.0; n],
            running_sum: Vec::new(),
            recent: Default::default(),
        }
    }

    #[test]
    fn zero_data_holds_with_equality() {
        let l = ledger(&[0.0; 4], &[0.0; 4], &[0.0; 4]);
        let c = first_order_check(&l, 0.1);
        assert!(c.holds());
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(second_order_checks(&l, 0.1).iter().all(EnergyCheck::holds));
    }

    #[test]
    fn first_order_sides_by_hand() {
        let l = ledger(&[1.0, 2.0], &[3.0, 4.0], &[0.0, 10.0]);
        let c = first_order_check(&l, 0.5);
        assert_eq!(c.lhs, 2.0 + 0.5 * 4.0 + 0.125 * 4.0);
        assert_eq!(c.rhs, 4.0 * 0.5 * 10.0 + 1.0 + 0.5 * 3.0);
        assert!(c.holds());
    }

    #[test]
    fn violation_is_located() {
        let l = ledger(&[1.0, 1.0, 50.0], &[0.0; 3], &[0.0; 3]);
        let c = first_order_check(&l, 0.1);
        assert_eq!(c.first_failure, Some(2));
        assert!(c.worst_ratio > 1.0);
    }
}
