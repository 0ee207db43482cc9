//! Lowest-order Whitney forms and the mixed Galerkin matrices.
//!
//! All integrands are polynomials of degree at most two on each simplex,
//! so every entry is computed from closed-form barycentric integrals:
//! `∫ λ_i = A/3` and `∫ λ_i λ_j = A (1 + δ_ij) / 12`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::mesh::{BoundaryPartition, IncidencePair, SimplexMesh};
use crate::sparse::{self, Csr};

/// Form degrees of the two conserved quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormDegreeSpec {
    pub p: usize,
    pub q: usize,
    pub n: usize,
}

impl FormDegreeSpec {
    pub const WAVE_2D: Self = Self { p: 2, q: 1, n: 2 };
    pub const WAVE_1D: Self = Self { p: 1, q: 1, n: 1 };

    pub fn r(&self) -> usize {
        self.p * self.q + 1
    }

    /// `(-1)^r`.
    pub fn sign_r(&self) -> f64 {
        pow_sign(self.r())
    }

    pub fn validate(&self) -> Result<()> {
        if *self == Self::WAVE_2D || *self == Self::WAVE_1D {
            Ok(())
        } else {
            Err(PhError::UnsupportedSpec { p: self.p, q: self.q, n: self.n })
        }
    }

    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self::WAVE_1D),
            2 => Ok(Self::WAVE_2D),
            _ => Err(PhError::UnsupportedSpec { p: 0, q: 0, n: dim }),
        }
    }
}

fn pow_sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Entity {
    Node(usize),
    Edge(usize),
    Face(usize),
}

/// Value of a Whitney form at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FormValue {
    Scalar(f64),
    /// Components `(c_x, c_y)` of `c_x dx + c_y dy`.
    OneForm([f64; 2]),
    /// Coefficient of `dx ∧ dy` (or of `dz` on a chain edge).
    Density(f64),
}

/// Barycentric data of one triangle with vertices in role order (α, β, γ).
#[derive(Clone, Copy, Debug)]
pub(crate) struct TriGeom {
    pub verts: [usize; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
    pts: [[f64; 2]; 3],
}

impl TriGeom {
    pub fn new(mesh: &SimplexMesh, f: usize) -> Self {
        let verts = mesh.faces[f].vertices();
        let p = verts.map(|v| mesh.nodes[v]);
        let a2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grads[i] = [(p[j][1] - p[k][1]) / a2, (p[k][0] - p[j][0]) / a2];
        }
        Self { verts, area: 0.5 * a2.abs(), grads, pts: p }
    }

    pub fn local(&self, node: usize) -> Option<usize> {
        self.verts.iter().position(|&v| v == node)
    }

    pub fn bary(&self, x: [f64; 2]) -> [f64; 3] {
        let mut l = [0.0; 3];
        for i in 0..3 {
            let g = self.grads[i];
            l[i] = 1.0 + g[0] * (x[0] - self.pts[i][0]) + g[1] * (x[1] - self.pts[i][1]);
        }
        l
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.bary(x).iter().all(|&l| l >= -1e-12)
    }
}

fn cr(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// `∫_T λ_i λ_j`.
fn mass(area: f64, i: usize, j: usize) -> f64 {
    area * if i == j { 2.0 } else { 1.0 } / 12.0
}

/// Evaluates a Whitney form; returns zero outside its support.
pub fn eval_whitney(mesh: &SimplexMesh, entity: Entity, x: [f64; 2]) -> Result<FormValue> {
    if mesh.dim == 1 {
        return eval_chain(mesh, entity, x[0]);
    }
    let candidates: Vec<usize> = match entity {
        Entity::Node(i) => {
            check(i, mesh.node_count(), "node")?;
            (0..mesh.face_count()).filter(|&f| mesh.faces[f].vertices().contains(&i)).collect()
        }
        Entity::Edge(e) => {
            check(e, mesh.edge_count(), "edge")?;
            mesh.faces_of_edge(e).to_vec()
        }
        Entity::Face(f) => {
            check(f, mesh.face_count(), "face")?;
            vec![f]
        }
    };
    let hit = candidates.into_iter().map(|f| (f, TriGeom::new(mesh, f))).find(|(_, g)| g.contains(x));
    Ok(match (entity, hit) {
        (Entity::Node(_), None) => FormValue::Scalar(0.0),
        (Entity::Edge(_), None) => FormValue::OneForm([0.0; 2]),
        (Entity::Face(_), None) => FormValue::Density(0.0),
        (Entity::Node(i), Some((_, g))) => FormValue::Scalar(g.bary(x)[g.local(i).unwrap()]),
        (Entity::Edge(e), Some((_, g))) => {
            let [t, hd] = mesh.edges[e];
            let (a, b) = (g.local(t).unwrap(), g.local(hd).unwrap());
            let l = g.bary(x);
            let (ga, gb) = (g.grads[a], g.grads[b]);
            FormValue::OneForm([l[a] * gb[0] - l[b] * ga[0], l[a] * gb[1] - l[b] * ga[1]])
        }
        (Entity::Face(f), Some((_, g))) => FormValue::Density(mesh.face_orientation(f) / g.area),
    })
}

fn eval_chain(mesh: &SimplexMesh, entity: Entity, z: f64) -> Result<FormValue> {
    let h = mesh.h;
    Ok(match entity {
        Entity::Node(i) => {
            check(i, mesh.node_count(), "node")?;
            let d = (z - mesh.nodes[i][0]).abs() / h;
            FormValue::Scalar(if d <= 1.0 { 1.0 - d } else { 0.0 })
        }
        Entity::Edge(e) => {
            check(e, mesh.edge_count(), "edge")?;
            let [a, b] = mesh.edges[e];
            let (za, zb) = (mesh.nodes[a][0], mesh.nodes[b][0]);
            let inside = z >= za.min(zb) - 1e-12 && z <= za.max(zb) + 1e-12;
            FormValue::OneForm([if inside { (zb - za).signum() / h } else { 0.0 }, 0.0])
        }
        Entity::Face(_) => return Err(PhError::InvalidArgument("chains have no faces".into())),
    })
}

fn check(i: usize, n: usize, what: &str) -> Result<()> {
    if i < n {
        Ok(())
    } else {
        Err(PhError::InvalidArgument(format!("{what} index {i} out of range")))
    }
}

/// The mixed Galerkin matrices of one mesh and boundary partition.
#[derive(Clone, Debug)]
pub struct GalerkinMatrices {
    pub spec: FormDegreeSpec,
    pub m_p: Csr,
    pub m_q: Csr,
    pub k_p: Csr,
    pub k_q: Csr,
    /// `L_p^μ`, one per q-segment.
    pub l_p_segments: Vec<Csr>,
    /// `L_q^μ`, one per q-segment.
    pub l_q_segments: Vec<Csr>,
    /// `L̂_p^ν`, one per p-segment.
    pub l_p_hat_segments: Vec<Csr>,
    /// `L̂_q^ν`, one per p-segment.
    pub l_q_hat_segments: Vec<Csr>,
    pub l_p: Csr,
    pub l_q: Csr,
}

pub fn assemble(mesh: &SimplexMesh, part: &BoundaryPartition, spec: FormDegreeSpec) -> Result<GalerkinMatrices> {
    spec.validate()?;
    if spec.n != mesh.dim || part.dim != mesh.dim {
        return Err(PhError::UnsupportedSpec { p: spec.p, q: spec.q, n: mesh.dim });
    }
    let (m_p, m_q, k_p, k_q) = if mesh.dim == 2 { volume_2d(mesh, spec) } else { volume_1d(mesh, spec) };
    let seg = |items: &[usize]| boundary_pair(mesh, spec, items);
    let (l_p_segments, l_q_segments): (Vec<_>, Vec<_>) =
        part.q_segments.iter().map(|s| seg(s)).unzip();
    let (l_p_hat_segments, l_q_hat_segments): (Vec<_>, Vec<_>) = if mesh.dim == 2 {
        part.p_segment_edges.iter().map(|s| seg(s)).unzip()
    } else {
        part.p_segments.iter().map(|s| seg(s)).unzip()
    };
    let sum = |v: &[Csr], r: usize, c: usize| v.iter().fold(sparse::zeros(r, c), |acc, m| sparse::add(&acc, m));
    let (np, nq) = (k_p.nrows(), k_p.ncols());
    let l_p = sparse::add(&sum(&l_p_segments, np, nq), &sum(&l_p_hat_segments, np, nq));
    let l_q = sparse::add(&sum(&l_q_segments, nq, np), &sum(&l_q_hat_segments, nq, np));
    Ok(GalerkinMatrices {
        spec,
        m_p,
        m_q,
        k_p,
        k_q,
        l_p_segments,
        l_q_segments,
        l_p_hat_segments,
        l_q_hat_segments,
        l_p,
        l_q,
    })
}

fn volume_2d(mesh: &SimplexMesh, spec: FormDegreeSpec) -> (Csr, Csr, Csr, Csr) {
    let (nn, ne, nf) = (mesh.node_count(), mesh.edge_count(), mesh.face_count());
    let ckp = -pow_sign(spec.r() + spec.q);
    let ckq = -pow_sign(spec.p);
    let (mut tmp, mut tmq, mut tkp, mut tkq) = (vec![], vec![], vec![], vec![]);
    for f in 0..nf {
        let g = TriGeom::new(mesh, f);
        let sf = mesh.face_orientation(f);
        for &v in &g.verts {
            tmp.push((v, f, sf / 3.0));
        }
        // Local edge data: (global edge, tail local, head local).
        let loc: Vec<(usize, usize, usize)> = mesh.faces[f]
            .edges
            .iter()
            .map(|&(e, _)| {
                let [t, hd] = mesh.edges[e];
                (e, g.local(t).unwrap(), g.local(hd).unwrap())
            })
            .collect();
        for &(ej, a, b) in &loc {
            for &(el, c, d) in &loc {
                let (ga, gb, gc, gd) = (g.grads[a], g.grads[b], g.grads[c], g.grads[d]);
                let v = mass(g.area, a, c) * cr(gb, gd) - mass(g.area, a, d) * cr(gb, gc)
                    - mass(g.area, b, c) * cr(ga, gd)
                    + mass(g.area, b, d) * cr(ga, gc);
                tmq.push((ej, el, v));
            }
            for (il, &ni) in g.verts.iter().enumerate() {
                let gi = g.grads[il];
                let kp = g.area / 3.0 * (cr(gi, g.grads[b]) - cr(gi, g.grads[a]));
                tkp.push((ni, ej, ckp * kp));
                let kq = 2.0 * cr(g.grads[a], g.grads[b]) * g.area / 3.0;
                tkq.push((ej, ni, ckq * kq));
            }
        }
    }
    (
        sparse::from_triplets(nn, nf, &tmp),
        sparse::from_triplets(ne, ne, &tmq),
        sparse::from_triplets(nn, ne, &tkp),
        sparse::from_triplets(ne, nn, &tkq),
    )
}

fn volume_1d(mesh: &SimplexMesh, spec: FormDegreeSpec) -> (Csr, Csr, Csr, Csr) {
    let (nn, ne) = (mesh.node_count(), mesh.edge_count());
    let ckp = -pow_sign(spec.r() + spec.q);
    let ckq = -pow_sign(spec.p);
    let (mut tm, mut tkp, mut tkq) = (vec![], vec![], vec![]);
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let dir = (mesh.nodes[b][0] - mesh.nodes[a][0]).signum();
        tm.push((a, e, 0.5 * dir));
        tm.push((b, e, 0.5 * dir));
        // ∫_e λ_i' λ_j = ±1/2 with λ_a' = -1/h, λ_b' = +1/h along z.
        for (i, di) in [(a, -dir), (b, dir)] {
            for j in [a, b] {
                tkp.push((i, j, ckp * 0.5 * di));
                tkq.push((i, j, ckq * 0.5 * di));
            }
        }
    }
    let m = sparse::from_triplets(nn, ne, &tm);
    (m.clone(), m, sparse::from_triplets(nn, nn, &tkp), sparse::from_triplets(nn, nn, &tkq))
}

/// Boundary power matrices of one segment. In 2D `items` are boundary
/// edges; in 1D they are boundary nodes.
fn boundary_pair(mesh: &SimplexMesh, spec: FormDegreeSpec, items: &[usize]) -> (Csr, Csr) {
    let cp = pow_sign(spec.r() + spec.q);
    let cq = pow_sign(spec.p);
    let (mut tp, mut tq) = (vec![], vec![]);
    if mesh.dim == 2 {
        for &e in items {
            let o = mesh.boundary_sign(e);
            for n in mesh.edges[e] {
                tp.push((n, e, cp * o * 0.5));
                tq.push((e, n, cq * o * 0.5));
            }
        }
        let (nn, ne) = (mesh.node_count(), mesh.edge_count());
        (sparse::from_triplets(nn, ne, &tp), sparse::from_triplets(ne, nn, &tq))
    } else {
        let last = mesh.node_count() - 1;
        for &n in items {
            let o = if n == last { 1.0 } else { -1.0 };
            tp.push((n, n, cp * o));
            tq.push((n, n, cq * o));
        }
        let nn = mesh.node_count();
        (sparse::from_triplets(nn, nn, &tp), sparse::from_triplets(nn, nn, &tq))
    }
}

/// Residuals of the structural identities and the rank checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureReport {
    pub factorization_p: f64,
    pub factorization_q: f64,
    pub l_transpose: f64,
    pub lemma: f64,
    pub ranks: Option<RankReport>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RankReport {
    pub m_p: (usize, usize),
    pub kl_p: (usize, usize),
    pub d_p: (usize, usize),
    pub m_q: (usize, usize),
    pub kl_q: (usize, usize),
    pub d_q: (usize, usize),
    pub l_p: (usize, usize),
}

impl RankReport {
    pub fn matches(&self) -> bool {
        [self.m_p, self.kl_p, self.d_p, self.m_q, self.kl_q, self.d_q, self.l_p]
            .iter()
            .all(|(a, b)| a == b)
    }
}

/// Dense rank checks are only attempted below this many edges.
pub const RANK_CHECK_MAX_EDGES: usize = 400;

pub fn verify_structure(g: &GalerkinMatrices, inc: &IncidencePair, mesh: &SimplexMesh) -> StructureReport {
    let s = g.spec.sign_r();
    let kl_p = sparse::add(&g.k_p, &g.l_p);
    let kl_q = sparse::add(&g.k_q, &g.l_q);
    let rhs_p = sparse::scale(&sparse::mul(&g.m_p, &inc.d_p), -s);
    let rhs_q = sparse::scale(&sparse::mul(&g.m_q, &inc.d_q), -1.0);
    let factorization_p = sparse::max_abs_diff(&kl_p, &rhs_p);
    let factorization_q = sparse::max_abs_diff(&kl_q, &rhs_q);
    let l_transpose = sparse::max_abs_diff(&g.l_p, &sparse::transpose(&g.l_q));
    let lemma = sparse::max_abs_diff(&sparse::add(&kl_p, &sparse::transpose(&kl_q)), &g.l_p);
    let ranks = match (mesh.dim, mesh.grid) {
        (2, Some((n, m))) if n > 2 && m > 2 && mesh.edge_count() <= RANK_CHECK_MAX_EDGES => {
            Some(rank_report(g, inc, n, m))
        }
        _ => None,
    };
    let tol = 1e-12;
    let pass = factorization_p <= tol
        && factorization_q <= tol
        && l_transpose <= tol
        && lemma <= tol
        && ranks.as_ref().is_none_or(|r| r.matches());
    StructureReport { factorization_p, factorization_q, l_transpose, lemma, ranks, pass }
}

/// Computed vs expected ranks for an `N x M` grid with `N, M > 2`.
fn rank_report(g: &GalerkinMatrices, inc: &IncidencePair, n: usize, m: usize) -> RankReport {
    let r = |a: &Csr| sparse::rank(&sparse::to_dense(a), 1e-10);
    let mp = (n + 1) * (m + 1);
    let np = 2 * n * m;
    let dense_sum = |a: &Csr, b: &Csr| -> DMatrix<f64> { sparse::to_dense(a) + sparse::to_dense(b) };
    let rk = |d: DMatrix<f64>| sparse::rank(&d, 1e-10);
    RankReport {
        m_p: (r(&g.m_p), mp - 2),
        kl_p: (rk(dense_sum(&g.k_p, &g.l_p)), mp - 2),
        d_p: (r(&inc.d_p), np),
        m_q: (r(&g.m_q), 2 * (mp - 2)),
        kl_q: (rk(dense_sum(&g.k_q, &g.l_q)), mp - 1),
        d_q: (r(&inc.d_q), mp - 1),
        l_p: (r(&g.l_p), 2 * (m + n) - 1),
    }
}
