use proptest::prelude::*;

use ensemble_heat::fem::{
    assemble_mass, assemble_stiffness, BoundaryCondition, BoundarySpec, Degree, DirichletLift, DofMap,
};
use ensemble_heat::linsolve::{factorize, FactorizationCounter};
use ensemble_heat::sparse::dot;
use ensemble_heat::{Diagonal, Mesh, ScalarField, Side};

fn degree() -> impl Strategy<Value = Degree> {
    prop_oneof![Just(Degree::P1), Just(Degree::P2)]
}

fn diagonal() -> impl Strategy<Value = Diagonal> {
    prop_oneof![Just(Diagonal::SouthWestNorthEast), Just(Diagonal::NorthWestSouthEast)]
}

fn boundary(dirichlet: [bool; 4]) -> BoundarySpec {
    BoundarySpec::new(Side::ALL.iter().zip(dirichlet).map(|(&s, d)| {
        (s, if d { BoundaryCondition::HomogeneousDirichlet } else { BoundaryCondition::Neumann(ScalarField::zero()) })
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_sums_to_area_and_stiffness_kills_constants(m in 1usize..10, d in degree(), diag in diagonal(), a in 0.1f64..5.0) {
        let mesh = Mesh::structured(m, diag).unwrap();
        let dofs = DofMap::new(&mesh, d, &BoundarySpec::homogeneous_dirichlet());
        let ones = vec![1.0; dofs.num_dofs()];
        let mass = assemble_mass(&mesh, &dofs).unwrap();
        prop_assert!((mass.quad_form(&ones) - 1.0).abs() <= 1e-12);
        prop_assert!(mass.symmetry_defect() <= 1e-12);
        let k = ScalarField::spatial(move |p| a + p[0] * p[1]);
        let stiff = assemble_stiffness(&mesh, &dofs, &k).unwrap();
        prop_assert!(stiff.symmetry_defect() <= 1e-12);
        let image = stiff.mul_vec(&ones);
        prop_assert!(image.iter().all(|v| v.abs() <= 1e-11 * stiff.max_abs()));
    }

    #[test]
    fn dirichlet_dofs_lie_on_dirichlet_sides(m in 1usize..8, d in degree(), mut sides in any::<[bool; 4]>()) {
        if !sides.iter().any(|&s| s) {
            sides[0] = true;
        }
        let layout = boundary(sides);
        let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
        let dofs = DofMap::new(&mesh, d, &layout);
        for (i, p) in dofs.coords().iter().enumerate() {
            let on_dirichlet = Side::ALL.iter().any(|&s| layout.is_dirichlet(s) && s.contains(*p, 1e-12));
            prop_assert_eq!(dofs.is_dirichlet(i), on_dirichlet);
        }
    }

    #[test]
    fn eliminated_systems_are_positive_definite(m in 1usize..8, d in degree(), c in 0.0f64..50.0, x in prop::collection::vec(-1.0f64..1.0, 300)) {
        let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
        let dofs = DofMap::new(&mesh, d, &boundary([false, true, true, false]));
        let full = assemble_mass(&mesh, &dofs).unwrap()
            .lin_comb(c, 1.0, &assemble_stiffness(&mesh, &dofs, &ScalarField::constant(1.0)).unwrap())
            .unwrap();
        let (system, _) = DirichletLift::eliminate(&full, &dofs.constrained_mask());
        let v = &x[..system.dim().min(x.len())];
        if v.len() == system.dim() && v.iter().any(|&t| t != 0.0) {
            prop_assert!(system.quad_form(v) > 0.0);
        }
        let f = factorize(&system, &FactorizationCounter::default()).unwrap();
        let b: Vec<f64> = (0..system.dim()).map(|i| (i as f64).sin()).collect();
        let y = f.solve(&b).unwrap();
        let r: Vec<f64> = system.mul_vec(&y).iter().zip(&b).map(|(p, q)| p - q).collect();
        prop_assert!(dot(&r, &r).sqrt() <= 1e-10 * dot(&b, &b).sqrt().max(1.0));
    }
}
