mod common;

use phfem::{
    build_1d_maps, build_2d_model, build_maps_2d, hodge_1d, hodge_2d, partition_boundary, CausalitySpec, ClassWeights,
    PhError, SimplexMesh, TriangleWeights,
};

#[test]
fn chain_hodge_values() {
    let h = hodge_1d(5, 0.5, 0.2).unwrap();
    assert_eq!(h.q_p, vec![10.0, 5.0, 5.0, 5.0, 5.0]);
    assert_eq!(h.q_q, vec![5.0, 5.0, 5.0, 5.0, 10.0]);
    assert_eq!(h.diagonal().len(), 10);
    for a in [1.0, 2.0, f64::INFINITY] {
        assert!(matches!(hodge_1d(5, a, 0.2), Err(PhError::SingularHodge(_))));
    }
    assert!(hodge_1d(5, 0.0, 0.0).is_err());
    assert!(build_1d_maps(5, 0.5).is_ok());
}

#[test]
fn uniform_weights_on_a_square() {
    // With equal thirds every interior node collects six faces of weight
    // 1/3, so its entry is 2 / (h² · 2).
    let mesh = SimplexMesh::rect(4, 4, 0.5).unwrap();
    let part = partition_boundary(&mesh, &CausalitySpec::default()).unwrap();
    let maps = build_maps_2d(&mesh, &part, &mesh.incidence(), &TriangleWeights::preset("set1").unwrap()).unwrap();
    let h = hodge_2d(&mesh, &maps).unwrap();
    let bnd = mesh.boundary_nodes();
    for (k, &node) in maps.effort_p.iter().enumerate() {
        if !bnd.contains(&node) {
            assert!((h.q_p[k] - 4.0).abs() <= 1e-12);
        }
    }
    assert!(h.diagonal().iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn scaling_with_mesh_width() {
    let w = TriangleWeights::preset("set3").unwrap();
    let c = CausalitySpec::default();
    let a = build_2d_model(3, 3, 1.0, &c, &w).unwrap();
    let b = build_2d_model(3, 3, 0.25, &c, &w).unwrap();
    let np = a.model.n_p;
    for k in 0..np {
        assert!((b.model.q[k] - 16.0 * a.model.q[k]).abs() <= 1e-9 * b.model.q[k]);
    }
    // q-entries are dimensionless ratios of stencil weights.
    for k in np..a.model.dim() {
        assert!((b.model.q[k] - a.model.q[k]).abs() <= 1e-12 * a.model.q[k]);
    }
}

#[test]
fn degenerate_weights_are_reported() {
    for (l, u) in [((1.0, 0.0), (1.0, 0.0)), ((0.0, 1.0), (0.0, 1.0)), ((0.0, 0.0), (0.0, 0.0))] {
        let w = TriangleWeights::new(ClassWeights::new(l.0, l.1), ClassWeights::new(u.0, u.1)).unwrap();
        let r = build_2d_model(3, 3, 1.0, &CausalitySpec::default(), &w);
        assert!(matches!(r, Err(PhError::DegenerateWeights(_))), "{l:?} {u:?}: {r:?}");
    }
}
