use std::sync::Arc;

use crate::fem::element::Geometry;
use crate::fem::quadrature::TriangleRule;
use crate::fem::{BoundarySpec, Degree};
use crate::field::ScalarField;
use crate::mesh::{Mesh, Point};

use super::{EnsembleError, Order};

/// Data of one ensemble member.
#[derive(Debug, Clone)]
pub struct Member {
    /// Space-only conductivity.
    pub conductivity: ScalarField,
    pub source: ScalarField,
    pub initial: ScalarField,
    /// Exact solution, when known; used by the exact second-order bootstrap.
    pub exact: Option<ScalarField>,
}

impl Member {
    pub fn new(conductivity: ScalarField, source: ScalarField, initial: ScalarField) -> Self {
        Member { conductivity, source, initial, exact: None }
    }

    pub fn with_exact(mut self, exact: ScalarField) -> Self {
        self.exact = Some(exact);
        self
    }
}

/// `J` heat problems on one mesh with one boundary layout.
#[derive(Debug, Clone)]
pub struct EnsembleProblem {
    pub mesh: Arc<Mesh>,
    pub degree: Degree,
    pub boundary: BoundarySpec,
    pub members: Vec<Member>,
}

impl EnsembleProblem {
    pub fn new(mesh: Arc<Mesh>, degree: Degree, boundary: BoundarySpec, members: Vec<Member>) -> Result<Self, EnsembleError> {
        if members.is_empty() {
            return Err(EnsembleError::Empty);
        }
        mesh.ensure_valid()?;
        Ok(EnsembleProblem { mesh, degree, boundary, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Physical locations of the assembly quadrature nodes.
    pub fn quadrature_points(&self) -> Vec<Point> {
        quadrature_points(&self.mesh)
    }

    /// Fails on the first quadrature node where some member conductivity is not positive.
    pub fn check_conductivities(&self) -> Result<(), EnsembleError> {
        for p in self.quadrature_points() {
            for (j, m) in self.members.iter().enumerate() {
                let value = m.conductivity.eval(p, 0.0);
                if !(value > 0.0 && value.is_finite()) {
                    return Err(EnsembleError::NonPositiveConductivity { member: j, point: p, value });
                }
            }
        }
        Ok(())
    }

    /// Largest member conductivity over all quadrature nodes.
    pub fn kappa_max(&self) -> f64 {
        let pts = self.quadrature_points();
        self.members
            .iter()
            .map(|m| match m.conductivity.as_constant() {
                Some(c) => c,
                None => pts.iter().map(|&p| m.conductivity.eval(p, 0.0)).fold(f64::NEG_INFINITY, f64::max),
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn quadrature_points(mesh: &Mesh) -> Vec<Point> {
    let rule = TriangleRule::degree4();
    let mut pts = Vec::with_capacity(mesh.num_triangles() * rule.len());
    for t in 0..mesh.num_triangles() {
        let geom = Geometry::new(mesh.triangle_points(t));
        pts.extend(rule.points.iter().map(|&l| geom.map(l)));
    }
    pts
}

/// Member average written as an offset from the first member, so identical
/// members give a mean equal to each of them and fluctuations that are exactly zero.
fn shifted_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut it = values;
    let first = it.next().expect("nonempty ensemble");
    let mut count = 1usize;
    let mut offset = 0.0;
    for v in it {
        offset += v - first;
        count += 1;
    }
    first + offset / count as f64
}

/// Pointwise ensemble mean `<k>` and fluctuations `k'_j = k_j - <k>`.
pub fn mean_and_fluctuations(problem: &EnsembleProblem) -> (ScalarField, Vec<ScalarField>) {
    let kappas: Vec<ScalarField> = problem.members.iter().map(|m| m.conductivity.clone()).collect();
    let constants: Option<Vec<f64>> = kappas.iter().map(ScalarField::as_constant).collect();
    if let Some(cs) = constants {
        let mean = shifted_mean(cs.iter().copied());
        let fluct = cs.iter().map(|c| ScalarField::constant(c - mean)).collect();
        return (ScalarField::constant(mean), fluct);
    }
    let shared = Arc::new(kappas);
    let k = shared.clone();
    let mean = ScalarField::new(move |p, t| shifted_mean(k.iter().map(|f| f.eval(p, t))));
    let fluct = (0..shared.len())
        .map(|j| {
            let k = shared.clone();
            ScalarField::new(move |p, t| k[j].eval(p, t) - shifted_mean(k.iter().map(|f| f.eval(p, t))))
        })
        .collect();
    (mean, fluct)
}

/// Outcome of checking `max_j || k'_j / <k> ||_inf <= C` over quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub order: Order,
    pub ratio: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

pub fn check_stability_condition(problem: &EnsembleProblem, order: Order) -> Result<StabilityReport, EnsembleError> {
    let (mean, fluct) = mean_and_fluctuations(problem);
    let points = match mean.as_constant() {
        // Constant members: every node gives the same ratio.
        Some(_) => vec![[0.5, 0.5]],
        None => problem.quadrature_points(),
    };
    let mut ratio: f64 = 0.0;
    for p in points {
        let m = mean.eval(p, 0.0);
        if m.is_nan() || m <= 0.0 {
            return Err(EnsembleError::NonPositiveMean { point: p, value: m });
        }
        for f in &fluct {
            ratio = ratio.max(f.eval(p, 0.0).abs() / m);
        }
    }
    let threshold = order.stability_threshold();
    Ok(StabilityReport { order, ratio, threshold, satisfied: ratio <= threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Diagonal;

    fn problem(kappas: Vec<ScalarField>) -> EnsembleProblem {
        let mesh = Arc::new(Mesh::structured(3, Diagonal::default()).unwrap());
        let members = kappas.into_iter().map(|k| Member::new(k, ScalarField::zero(), ScalarField::zero())).collect();
        EnsembleProblem::new(mesh, Degree::P1, BoundarySpec::homogeneous_dirichlet(), members).unwrap()
    }

    fn constants(cs: &[f64]) -> EnsembleProblem {
        problem(cs.iter().map(|&c| ScalarField::constant(c)).collect())
    }

    #[test]
    fn laser_conductivities() {
        let p = constants(&[110.0, 100.0, 90.0]);
        let (mean, fl) = mean_and_fluctuations(&p);
        assert_eq!(mean.as_constant(), Some(100.0));
        let f: Vec<f64> = fl.iter().map(|f| f.as_constant().unwrap()).collect();
        assert_eq!(f, vec![10.0, 0.0, -10.0]);
    }

    #[test]
    fn single_member_has_no_fluctuation() {
        let p = problem(vec![ScalarField::spatial(|p| 1.0 + p[0])]);
        let (mean, fl) = mean_and_fluctuations(&p);
        assert_eq!(fl[0].eval([0.3, 0.7], 0.0), 0.0);
        assert_eq!(mean.eval([0.3, 0.7], 0.0), 1.3);
    }

    #[test]
    fn symmetric_perturbation() {
        let eps = 1e-2;
        let p = constants(&[1.0 + eps, 1.0 - eps]);
        let (mean, fl) = mean_and_fluctuations(&p);
        assert!((mean.as_constant().unwrap() - 1.0).abs() < 1e-15);
        assert!((fl[0].as_constant().unwrap() - eps).abs() < 1e-15);
        assert!((fl[1].as_constant().unwrap() + eps).abs() < 1e-15);
    }

    #[test]
    fn fluctuations_sum_to_zero_pointwise() {
        let p = problem(vec![
            ScalarField::spatial(|p| 1.0 + 0.2 * (5.0 * p[0]).sin()),
            ScalarField::spatial(|p| 2.0 + p[1] * p[1]),
            ScalarField::constant(0.7),
        ]);
        let (mean, fl) = mean_and_fluctuations(&p);
        for q in p.quadrature_points().into_iter().step_by(7) {
            let s: f64 = fl.iter().map(|f| f.eval(q, 0.0)).sum();
            assert!(s.abs() < 1e-15 * mean.eval(q, 0.0).abs().max(1.0));
            let naive = p.members.iter().map(|m| m.conductivity.eval(q, 0.0)).sum::<f64>() / 3.0;
            assert!((mean.eval(q, 0.0) - naive).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_members_give_exact_zero_fluctuation() {
        let p = problem(vec![ScalarField::spatial(|p| 0.1 + p[0]); 3]);
        let (_, fl) = mean_and_fluctuations(&p);
        for q in p.quadrature_points() {
            assert!(fl.iter().all(|f| f.eval(q, 0.0) == 0.0));
        }
    }

    #[test]
    fn stability_laser() {
        let p = constants(&[110.0, 100.0, 90.0]);
        let first = check_stability_condition(&p, Order::First).unwrap();
        assert_eq!(first.ratio, 0.1);
        assert!(first.satisfied);
        let second = check_stability_condition(&p, Order::Second).unwrap();
        assert_eq!(second.ratio, 0.1);
        assert!(!second.satisfied);
    }

    #[test]
    fn stability_single_member() {
        let p = problem(vec![ScalarField::spatial(|p| 1.0 + p[0] * p[1])]);
        for order in [Order::First, Order::Second] {
            let r = check_stability_condition(&p, order).unwrap();
            assert_eq!(r.ratio, 0.0);
            assert!(r.satisfied);
        }
    }

    #[test]
    fn nonpositive_mean_rejected() {
        let p = problem(vec![ScalarField::spatial(|p| p[0] - 0.5), ScalarField::spatial(|p| p[0] - 0.5)]);
        assert!(matches!(check_stability_condition(&p, Order::First), Err(EnsembleError::NonPositiveMean { .. })));
        assert!(matches!(p.check_conductivities(), Err(EnsembleError::NonPositiveConductivity { .. })));
    }

    #[test]
    fn kappa_max_over_members() {
        assert_eq!(constants(&[4.0, 1.0]).kappa_max(), 4.0);
    }

    #[test]
    fn empty_rejected() {
        let mesh = Arc::new(Mesh::structured(2, Diagonal::default()).unwrap());
        assert!(matches!(
            EnsembleProblem::new(mesh, Degree::P1, BoundarySpec::homogeneous_dirichlet(), vec![]),
            Err(EnsembleError::Empty)
        ));
    }
}
