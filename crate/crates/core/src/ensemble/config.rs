use std::fmt;

use crate::linsolve::SolverPath;

use super::EnsembleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(k: u32) -> Option<Order> {
        match k {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    /// Largest admissible `max_j || k'_j / <k> ||_inf`.
    pub fn stability_threshold(self) -> f64 {
        match self {
            Order::First => 0.5,
            Order::Second => 1.0 / 16.0,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::First => f.write_str("first-order"),
            Order::Second => f.write_str("second-order"),
        }
    }
}

/// How the implicit operator is split from the lagged one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    /// Implicit `<k>`, lagged `k_j - <k>`.
    #[default]
    EnsembleMean,
    /// Implicit `k_max`, lagged `k_j - k_max`. First order only.
    KappaMax,
}

impl Splitting {
    pub fn name(self) -> &'static str {
        match self {
            Splitting::EnsembleMean => "mean",
            Splitting::KappaMax => "kmax",
        }
    }
}

/// How the second history level is produced for the second-order scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bootstrap {
    /// Exact solution when every member registers one, otherwise a backward-Euler step.
    #[default]
    Auto,
    /// Interpolate each member's exact solution at `t = dt`.
    Exact,
    /// One first-order ensemble step. Costs a second factorization.
    BackwardEuler,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub order: Order,
    pub dt: f64,
    pub final_time: f64,
    pub splitting: Splitting,
    pub bootstrap: Bootstrap,
    pub solver: SolverPath,
    /// CG relative residual target; ignored on the direct path.
    pub cg_tolerance: f64,
    /// Proceed even when the stability condition fails.
    pub allow_unstable: bool,
    /// Threads for per-member work; 1 runs everything on the calling thread.
    pub workers: usize,
    /// Keep member fields every this many steps (0 keeps none).
    pub snapshot_every: usize,
    /// Keep the per-step mean and variance fields.
    pub retain_fields: bool,
}

impl SchemeConfig {
    pub fn new(order: Order, dt: f64, final_time: f64) -> Self {
        SchemeConfig {
            order,
            dt,
            final_time,
            splitting: Splitting::EnsembleMean,
            bootstrap: Bootstrap::Auto,
            solver: SolverPath::Direct,
            cg_tolerance: 1e-10,
            allow_unstable: false,
            workers: 1,
            snapshot_every: 0,
            retain_fields: true,
        }
    }

    /// Number of steps `N` with `final_time = N dt`.
    pub fn steps(&self) -> Result<usize, EnsembleError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EnsembleError::InvalidConfig(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(EnsembleError::InvalidConfig(format!("final time must be positive, got {}", self.final_time)));
        }
        let n = (self.final_time / self.dt).round();
        if n < 1.0 || (n * self.dt - self.final_time).abs() > 1e-9 * self.final_time {
            return Err(EnsembleError::InvalidConfig(format!(
                "final time {} is not a positive integer multiple of dt = {}",
                self.final_time, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<usize, EnsembleError> {
        let n = self.steps()?;
        if self.splitting == Splitting::KappaMax && self.order == Order::Second {
            return Err(EnsembleError::InvalidConfig("kappa-max splitting is first order only".into()));
        }
        if self.order == Order::Second && n < 2 {
            return Err(EnsembleError::InvalidConfig("second-order runs need at least two steps".into()));
        }
        if self.workers == 0 {
            return Err(EnsembleError::InvalidConfig("worker count must be at least 1".into()));
        }
        if self.cg_tolerance.is_nan() || self.cg_tolerance <= 0.0 {
            return Err(EnsembleError::InvalidConfig("CG tolerance must be positive".into()));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_count() {
        assert_eq!(SchemeConfig::new(Order::First, 0.005, 0.01).steps().unwrap(), 2);
        assert_eq!(SchemeConfig::new(Order::First, 0.5 / 24.0, 1.0).steps().unwrap(), 48);
        assert!(SchemeConfig::new(Order::First, 0.3, 1.0).steps().is_err());
        assert!(SchemeConfig::new(Order::First, 0.0, 1.0).steps().is_err());
        assert!(SchemeConfig::new(Order::First, 2.0, 1.0).steps().is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(Order::First.stability_threshold(), 0.5);
        assert_eq!(Order::Second.stability_threshold(), 0.0625);
    }

    #[test]
    fn kappa_max_first_order_only() {
        let mut c = SchemeConfig::new(Order::Second, 0.1, 1.0);
        c.splitting = Splitting::KappaMax;
        assert!(c.validate().is_err());
    }
}
