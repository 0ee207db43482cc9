#![allow(dead_code)]

pub mod printed;

use nalgebra::{DMatrix, DVector};
use phfem::mesh::{EdgeKind, Face, TriangleClass};
use phfem::{sparse, CausalitySpec, ClassWeights, Csr, SegmentSpec, Side, SimplexMesh, TriangleWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convex weights with every entry in [0.05, 0.9].
pub fn random_class(r: &mut impl Rng) -> ClassWeights {
    loop {
        let (a, b, c): (f64, f64, f64) = (r.gen_range(0.1..1.0), r.gen_range(0.1..1.0), r.gen_range(0.1..1.0));
        let s = a + b + c;
        let w = ClassWeights::new(a / s, b / s);
        if w.gamma > 0.05 {
            return w;
        }
    }
}

pub fn random_weights(r: &mut impl Rng) -> TriangleWeights {
    TriangleWeights::new(random_class(r), random_class(r)).unwrap()
}

pub fn dense(a: &Csr) -> DMatrix<f64> {
    sparse::to_dense(a)
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    (a - b).abs().max()
}

pub fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows[0].len();
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Four nodes, four boundary edges, one diagonal, two triangles, numbered
/// as in the elementary square example.
pub fn unit_square_fixture() -> SimplexMesh {
    let nodes = vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
    let edges = vec![[0, 1], [1, 2], [2, 3], [3, 0], [1, 3]];
    let kinds = vec![
        EdgeKind::Vertical,
        EdgeKind::Horizontal,
        EdgeKind::Vertical,
        EdgeKind::Horizontal,
        EdgeKind::Diagonal,
    ];
    let faces = vec![
        Face { edges: [(0, 1), (3, 1), (4, 1)], class: TriangleClass::Lower, alpha: 3, beta: 1, gamma: 0 },
        Face { edges: [(1, 1), (2, 1), (4, -1)], class: TriangleClass::Upper, alpha: 1, beta: 3, gamma: 2 },
    ];
    SimplexMesh::from_parts(nodes, edges, kinds, faces, 1.0).unwrap()
}

/// Causality specs exercised on every grid of the battery.
pub fn causality_battery() -> Vec<(&'static str, CausalitySpec)> {
    vec![
        ("all_q", CausalitySpec::default()),
        ("corner", CausalitySpec { p_segments: vec![SegmentSpec::Corner(phfem::Corner::BottomLeft)], q_segments: None }),
        ("bottom_side", CausalitySpec { p_segments: vec![SegmentSpec::Side(Side::Bottom)], q_segments: None }),
        (
            "two_sides",
            CausalitySpec {
                p_segments: vec![SegmentSpec::Side(Side::Left), SegmentSpec::Side(Side::Right)],
                q_segments: None,
            },
        ),
    ]
}

/// Grids of the structural battery.
pub const GRIDS: [(usize, usize); 7] = [(1, 1), (2, 1), (1, 3), (2, 2), (3, 2), (4, 4), (6, 6)];

/// The `n × m` grid with interior nodes moved by up to `amount · h`.
pub fn perturbed_grid(n: usize, m: usize, amount: f64, seed: u64) -> SimplexMesh {
    let base = SimplexMesh::rect(n, m, 1.0).unwrap();
    let boundary: std::collections::BTreeSet<usize> = base.boundary_nodes().into_iter().collect();
    let mut r = rng(seed);
    let nodes = base
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &[x, y])| {
            if boundary.contains(&i) {
                [x, y]
            } else {
                [x + amount * r.gen_range(-1.0..1.0), y + amount * r.gen_range(-1.0..1.0)]
            }
        })
        .collect();
    SimplexMesh::from_parts(nodes, base.edges.clone(), base.edge_kinds.clone(), base.faces.clone(), 1.0).unwrap()
}

/// Exact solution of `ẋ = A x + b sin²(πt/P)` via one matrix exponential of
/// the system augmented with the generator of `(1, cos ωt, sin ωt)`.
pub fn expm_reference(a: &DMatrix<f64>, b: &DVector<f64>, period: f64, times: &[f64]) -> Vec<DVector<f64>> {
    let n = a.nrows();
    let w = 2.0 * std::f64::consts::PI / period;
    let mut g = DMatrix::zeros(n + 3, n + 3);
    g.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        // sin² = (1 - cos)/2
        g[(i, n)] = 0.5 * b[i];
        g[(i, n + 1)] = -0.5 * b[i];
    }
    g[(n + 1, n + 2)] = -w;
    g[(n + 2, n + 1)] = w;
    let mut z0 = DVector::zeros(n + 3);
    z0[n] = 1.0;
    z0[n + 1] = 1.0;
    times.iter().map(|&t| (&g * t).exp() * &z0).map(|z| z.rows(0, n).into_owned()).collect()
}
