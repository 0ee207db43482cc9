//! Matrices of the three worked examples, evaluated at random weights.
//! Each check panics with the offending matrix on mismatch.

use super::*;
use nalgebra::DMatrix;
use phfem::{build_maps_2d, partition_boundary, CausalitySpec, MapSet, SegmentSpec, SimplexMesh, TriangleWeights};

pub const TOL: f64 = 1e-13;
const TRIALS: u64 = 25;

struct Sym {
    ai: f64,
    bi: f64,
    gi: f64,
    aii: f64,
    bii: f64,
    gii: f64,
}

impl Sym {
    fn new(w: &TriangleWeights) -> Self {
        Self {
            ai: w.lower.alpha,
            bi: w.lower.beta,
            gi: w.lower.gamma,
            aii: w.upper.alpha,
            bii: w.upper.beta,
            gii: w.upper.gamma,
        }
    }
    fn delta_i(&self) -> f64 {
        0.125 + 0.25 * (self.ai - self.bi)
    }
    fn delta_ii(&self) -> f64 {
        0.125 + 0.25 * (self.aii - self.bii)
    }
    fn eps_i(&self) -> f64 {
        0.125 - 0.25 * (self.ai - self.bi)
    }
    fn k(&self) -> f64 {
        0.5 * (self.ai - self.bi) + 0.5 * (self.aii - self.bii)
    }
}

fn maps(mesh: &SimplexMesh, spec: &CausalitySpec, w: &TriangleWeights) -> MapSet {
    let part = partition_boundary(mesh, spec).unwrap();
    build_maps_2d(mesh, &part, &mesh.incidence(), w).unwrap()
}

fn check(name: &str, got: &phfem::Csr, want: &DMatrix<f64>) {
    let d = max_diff(&dense(got), want);
    assert!(d <= TOL, "{name}: max deviation {d:e}\n got {}\nwant {want}", dense(got));
}

fn selector(rows: usize, cols: usize, idx: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for (r, &c) in idx.iter().enumerate() {
        m[(r, c)] = 1.0;
    }
    assert_eq!(idx.len(), rows);
    m
}

pub fn unit_square_incidence() {
    let inc = unit_square_fixture().incidence();
    let d_p = mat(&[&[1., 0., 0., 1., 1.], &[0., 1., 1., 0., -1.]]);
    let d_q = mat(&[
        &[-1., 1., 0., 0.],
        &[0., -1., 1., 0.],
        &[0., 0., -1., 1.],
        &[1., 0., 0., -1.],
        &[0., -1., 0., 1.],
    ]);
    check("d_p", &inc.d_p, &d_p);
    check("d_q", &inc.d_q, &d_q);
}

pub fn unit_square_maps() {
    let mesh = unit_square_fixture();
    let mut r = rng(11);
    for _ in 0..TRIALS {
        let w = random_weights(&mut r);
        let s = Sym::new(&w);
        let m = maps(&mesh, &CausalitySpec::default(), &w);
        check("T_q", &m.t_q, &selector(4, 5, &[0, 1, 2, 3]));
        check("P_eq", &m.p_eq, &selector(1, 5, &[4]));
        check("P_ep", &m.p_ep, &DMatrix::identity(4, 4));
        assert_eq!(m.t_p_hat.nrows(), 0);
        let p_fp = mat(&[&[s.gi, 0.], &[s.bi, s.aii], &[0., s.gii], &[s.ai, s.bii]]);
        check("P_fp", &m.p_fp, &p_fp);
        let s_p = mat(&[
            &[s.gi, s.bi, 0., s.ai],
            &[0., s.aii, s.gii, s.bii],
            &[0., s.aii, s.gii, s.bii],
            &[s.gi, s.bi, 0., s.ai],
        ]);
        check("S_p", &m.s_p, &s_p);
        let parts = m.parts.as_ref().unwrap();
        check("P_fq perp", &parts.perp, &mat(&[&[-s.gi / 2., -s.gii / 2., s.gii / 2., s.gi / 2., 0.]]));
        check("P_fq par", &parts.par, &mat(&[&[0., 0., 0., 0., s.k()]]));
        check("P_fq rot", &parts.rot, &DMatrix::zeros(1, 5));
        check("P_fq", &m.p_fq, &mat(&[&[-s.gi / 2., -s.gii / 2., s.gii / 2., s.gi / 2., s.k()]]));
    }
}

/// `P_fq - c d_p` with the printed coefficients `c` is a particular
/// solution. The printed particular vector agrees with it except in entry 1,
/// where it drops `α_I - β_II`; both coincide exactly when `α_I = β_II`.
pub fn unit_square_pfq_is_particular_plus_cycles() {
    let mesh = unit_square_fixture();
    let inc = mesh.incidence();
    let (d_p, d_q) = (dense(&inc.d_p), dense(&inc.d_q));
    let mut r = rng(12);
    for trial in 0..TRIALS {
        let mut w = random_weights(&mut r);
        if trial == 0 {
            w = TriangleWeights::new(phfem::ClassWeights::new(0.3, 0.2), phfem::ClassWeights::new(0.5, 0.3)).unwrap();
        }
        let s = Sym::new(&w);
        let m = maps(&mesh, &CausalitySpec::default(), &w);
        let c = mat(&[&[s.gi / 2., -s.ai + s.bii + s.gii / 2.]]);
        let particular = dense(&m.p_fq) - &c * &d_p;
        let corrected = mat(&[&[-s.gi, -s.gii + s.ai - s.bii, s.ai - s.bii, 0., 0.]]);
        assert!(max_diff(&particular, &corrected) <= TOL);
        let printed = mat(&[&[-s.gi, -s.gii, s.ai - s.bii, 0., 0.]]);
        let residual = max_diff(&(&printed * &d_q), &(&corrected * &d_q));
        assert!((residual - (s.ai - s.bii).abs()).abs() <= TOL);
        if trial == 0 {
            assert!(max_diff(&printed, &corrected) <= TOL);
        }
    }
}

pub fn two_by_one_incidence() {
    let inc = SimplexMesh::rect(2, 1, 1.0).unwrap().incidence();
    let d_p = mat(&[
        &[-1., 0., 0., 0., 0., 1., 0., 1., 0.],
        &[0., -1., 0., 0., 0., 0., 1., 0., 1.],
        &[0., 0., 1., 0., -1., 0., 0., -1., 0.],
        &[0., 0., 0., 1., 0., -1., 0., 0., -1.],
    ]);
    let d_q = mat(&[
        &[1., -1., 0., 0., 0., 0.],
        &[0., 1., -1., 0., 0., 0.],
        &[0., 0., 0., 1., -1., 0.],
        &[0., 0., 0., 0., 1., -1.],
        &[-1., 0., 0., 1., 0., 0.],
        &[0., -1., 0., 0., 1., 0.],
        &[0., 0., -1., 0., 0., 1.],
        &[1., 0., 0., 0., -1., 0.],
        &[0., 1., 0., 0., 0., -1.],
    ]);
    check("d_p", &inc.d_p, &d_p);
    check("d_q", &inc.d_q, &d_q);
}

fn pfp_edge_inputs(s: &Sym) -> DMatrix<f64> {
    mat(&[
        &[s.ai, 0., s.bii, 0.],
        &[s.gi, s.ai, 0., s.bii],
        &[0., s.gi, 0., 0.],
        &[0., 0., s.gii, 0.],
        &[s.bi, 0., s.aii, s.gii],
        &[0., s.bi, 0., s.aii],
    ])
}

fn sp_edge_inputs(s: &Sym) -> DMatrix<f64> {
    mat(&[
        &[-s.ai, -s.gi, 0., 0., -s.bi, 0.],
        &[0., -s.ai, -s.gi, 0., 0., -s.bi],
        &[s.bii, 0., 0., s.gii, s.aii, 0.],
        &[0., s.bii, 0., 0., s.gii, s.aii],
        &[-s.bii, 0., 0., -s.gii, -s.aii, 0.],
        &[0., s.ai, s.gi, 0., 0., s.bi],
    ])
}

fn perp_rows(s: &Sym) -> [[f64; 9]; 3] {
    let (gi, gii) = (s.gi / 2., s.gii / 2.);
    [
        [s.ai, 0., 0., s.aii, 0., 0., 0., 0., 0.],
        [-gi, 0., -gii, 0., -gii, -gi, 0., 0., 0.],
        [0., -gi, 0., -gii, 0., -gii, -gi, 0., 0.],
    ]
}

fn par_rows(s: &Sym) -> [[f64; 9]; 3] {
    let mut r = [[0.0; 9]; 3];
    r[0][5] = s.bi + s.bii - 1.0;
    r[1][7] = s.k();
    r[2][8] = s.k();
    r
}

fn rot_row(s: &Sym) -> [f64; 9] {
    let (di, dii) = (s.delta_i(), s.delta_ii());
    [-di, dii, di, -dii, -di, di + dii, -dii, 0., 0.]
}

fn rows(r: &[[f64; 9]]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), 9, |i, j| r[i][j])
}

pub fn two_by_one_edge_inputs() {
    let mesh = SimplexMesh::rect(2, 1, 1.0).unwrap();
    let mut r = rng(21);
    for _ in 0..TRIALS {
        let w = random_weights(&mut r);
        let s = Sym::new(&w);
        let m = maps(&mesh, &CausalitySpec::default(), &w);
        check("T_q", &m.t_q, &selector(6, 9, &[0, 1, 2, 3, 4, 6]));
        check("P_eq", &m.p_eq, &selector(3, 9, &[5, 7, 8]));
        check("P_ep", &m.p_ep, &DMatrix::identity(6, 6));
        check("P_fp", &m.p_fp, &pfp_edge_inputs(&s));
        check("S_p", &m.s_p, &sp_edge_inputs(&s));
        let parts = m.parts.as_ref().unwrap();
        check("perp", &parts.perp, &rows(&perp_rows(&s)));
        check("par", &parts.par, &rows(&par_rows(&s)));
        check("rot", &parts.rot, &rows(&[rot_row(&s), [0.0; 9], [0.0; 9]]));
        let total = rows(&perp_rows(&s)) + rows(&par_rows(&s)) + rows(&[rot_row(&s), [0.0; 9], [0.0; 9]]);
        check("P_fq", &m.p_fq, &total);
    }
}

fn mixed_spec() -> CausalitySpec {
    CausalitySpec { p_segments: vec![SegmentSpec::Nodes(vec![0, 1])], q_segments: None }
}

pub fn two_by_one_mixed_causality() {
    let mesh = SimplexMesh::rect(2, 1, 1.0).unwrap();
    let mut r = rng(31);
    for _ in 0..TRIALS {
        let w = random_weights(&mut r);
        let s = Sym::new(&w);
        let m = maps(&mesh, &mixed_spec(), &w);
        check("T_p_hat", &m.t_p_hat, &selector(2, 6, &[0, 1]));
        check("T_q", &m.t_q, &selector(5, 9, &[1, 2, 3, 4, 6]));
        check("P_eq", &m.p_eq, &selector(4, 9, &[0, 5, 7, 8]));
        check("P_ep", &m.p_ep, &selector(4, 6, &[2, 3, 4, 5]));

        let pfp1 = pfp_edge_inputs(&s);
        check("P_fp", &m.p_fp, &pfp1.rows(2, 4).into_owned());
        check("P_fp = P_ep P_fp,1", &m.p_fp, &(dense(&m.p_ep) * &pfp1));
        check("S_p", &m.s_p, &sp_edge_inputs(&s).rows(1, 5).into_owned());

        let p = perp_rows(&s);
        let mut first = [0.0; 9];
        first[5] = -s.bi;
        let perp = rows(&[first, p[0], p[1], p[2]]);
        let q = par_rows(&s);
        let mut first = [0.0; 9];
        first[0] = 0.5 - s.ai;
        let par = rows(&[first, q[0], q[1], q[2]]);
        let e = s.eps_i();
        let rot = rows(&[[-e, 0., e, 0., -e, e, 0., 0., 0.], rot_row(&s), [0.0; 9], [0.0; 9]]);
        let parts = m.parts.as_ref().unwrap();
        check("perp", &parts.perp, &perp);
        check("par", &parts.par, &par);
        check("rot", &parts.rot, &rot);
        check("P_fq", &m.p_fq, &(perp + par + rot));

        let s_q_hat = mat(&[
            &[s.ai - 0.5, 0., -s.bii, 0., s.bii, -s.ai, 0., s.bii - s.ai, 0.],
            &[s.gi - 0.5, s.ai, 0., -s.bii, 0., s.bii - s.gi, -s.ai, -s.gi, s.bii - s.ai],
        ]);
        check("S_q_hat", &m.s_q_hat, &s_q_hat);
    }
}

/// Ŝ_q from its defining product, with the p-sign of the 2D spec.
pub fn mixed_output_matrix_matches_its_definition() {
    let mesh = SimplexMesh::rect(2, 1, 1.0).unwrap();
    let d_q = dense(&mesh.incidence().d_q);
    let mut r = rng(41);
    for _ in 0..TRIALS {
        let w = random_weights(&mut r);
        let m = maps(&mesh, &mixed_spec(), &w);
        let left = {
            let a = d_q.transpose() * dense(&m.p_fq).transpose();
            let b = dense(&m.s_p).transpose();
            let mut l = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
            l.columns_mut(0, a.ncols()).copy_from(&a);
            l.columns_mut(a.ncols(), b.ncols()).copy_from(&b);
            l
        };
        let (pe, tq) = (dense(&m.p_eq), dense(&m.t_q));
        let mut stack = DMatrix::zeros(pe.nrows() + tq.nrows(), 9);
        stack.rows_mut(0, pe.nrows()).copy_from(&pe);
        stack.rows_mut(pe.nrows(), tq.nrows()).copy_from(&tq);
        let want = -(dense(&m.t_p_hat) * left * stack);
        check("S_q_hat", &m.s_q_hat, &want);
    }
}

/// Every check, by name.
pub const ALL: [(&str, fn()); 7] = [
    ("unit_square_incidence", unit_square_incidence),
    ("unit_square_maps", unit_square_maps),
    ("unit_square_pfq_is_particular_plus_cycles", unit_square_pfq_is_particular_plus_cycles),
    ("two_by_one_incidence", two_by_one_incidence),
    ("two_by_one_edge_inputs", two_by_one_edge_inputs),
    ("two_by_one_mixed_causality", two_by_one_mixed_causality),
    ("mixed_output_matrix_matches_its_definition", mixed_output_matrix_matches_its_definition),
];
