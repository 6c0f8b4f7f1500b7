use std::collections::BTreeMap;

use crate::field::ScalarField;
use crate::mesh::Side;

use super::FemError;

/// Condition imposed on one tagged side of the square.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    HomogeneousDirichlet,
    Dirichlet(ScalarField),
    /// Prescribed normal flux `kappa grad T . n = g`.
    Neumann(ScalarField),
}

impl BoundaryCondition {
    pub fn is_dirichlet(&self) -> bool {
        !matches!(self, BoundaryCondition::Neumann(_))
    }
}

/// Assignment of a boundary condition to every side tag.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    conditions: BTreeMap<Side, BoundaryCondition>,
}

impl BoundarySpec {
    /// Every side must be assigned and at least one must be Dirichlet.
    pub fn new(conditions: impl IntoIterator<Item = (Side, BoundaryCondition)>) -> Result<Self, FemError> {
        let conditions: BTreeMap<_, _> = conditions.into_iter().collect();
        if let Some(side) = Side::ALL.into_iter().find(|s| !conditions.contains_key(s)) {
            return Err(FemError::UnassignedSide(side));
        }
        if !conditions.values().any(BoundaryCondition::is_dirichlet) {
            return Err(FemError::NoDirichletSegment);
        }
        Ok(BoundarySpec { conditions })
    }

    pub fn homogeneous_dirichlet() -> Self {
        BoundarySpec::new(Side::ALL.map(|s| (s, BoundaryCondition::HomogeneousDirichlet))).expect("all sides Dirichlet")
    }

    pub fn condition(&self, side: Side) -> &BoundaryCondition {
        &self.conditions[&side]
    }

    pub fn is_dirichlet(&self, side: Side) -> bool {
        self.condition(side).is_dirichlet()
    }

    pub fn dirichlet_sides(&self) -> impl Iterator<Item = Side> + '_ {
        self.conditions.iter().filter(|(_, c)| c.is_dirichlet()).map(|(s, _)| *s)
    }

    pub fn neumann_sides(&self) -> impl Iterator<Item = (Side, &ScalarField)> + '_ {
        self.conditions.iter().filter_map(|(s, c)| match c {
            BoundaryCondition::Neumann(g) => Some((*s, g)),
            _ => None,
        })
    }

    /// Prescribed value on a Dirichlet side; `None` for Neumann sides.
    pub fn dirichlet_value(&self, side: Side, p: crate::mesh::Point, t: f64) -> Option<f64> {
        match self.condition(side) {
            BoundaryCondition::HomogeneousDirichlet => Some(0.0),
            BoundaryCondition::Dirichlet(g) => Some(g.eval(p, t)),
            BoundaryCondition::Neumann(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requires_a_dirichlet_side() {
        let err = BoundarySpec::new(Side::ALL.map(|s| (s, BoundaryCondition::Neumann(ScalarField::zero())))).unwrap_err();
        assert_eq!(err, FemError::NoDirichletSegment);
    }

    #[test]
    fn requires_every_side() {
        let err = BoundarySpec::new([(Side::Left, BoundaryCondition::HomogeneousDirichlet)]).unwrap_err();
        assert_eq!(err, FemError::UnassignedSide(Side::Right));
    }

    #[test]
    fn mixed_assignment() {
        let layout = BoundarySpec::new([
            (Side::Left, BoundaryCondition::Neumann(1.0.into())),
            (Side::Top, BoundaryCondition::Neumann(1.0.into())),
            (Side::Right, BoundaryCondition::Dirichlet(1.0.into())),
            (Side::Bottom, BoundaryCondition::HomogeneousDirichlet),
        ])
        .unwrap();
        assert_eq!(layout.dirichlet_sides().collect::<Vec<_>>(), vec![Side::Right, Side::Bottom]);
        assert_eq!(layout.neumann_sides().count(), 2);
        assert_eq!(layout.dirichlet_value(Side::Right, [1.0, 0.3], 0.0), Some(1.0));
        assert_eq!(layout.dirichlet_value(Side::Left, [0.0, 0.3], 0.0), None);
    }
}
