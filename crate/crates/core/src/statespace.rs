//! Image and input-output representations of the discrete Dirac
//! structure, and the explicit port-Hamiltonian model.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::hodge::HodgePair;
use crate::mesh::IncidencePair;
use crate::power_maps::{power_preservation_residual, MapSet};
use crate::sparse::{self, Csr};

/// Tolerance for the structural identities.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// `f̄ = Eᵀ λ`, `ē = Fᵀ λ` with `λ = (e_p, e_q)`.
#[derive(Clone, Debug)]
pub struct ImageRep {
    pub e: Csr,
    pub f: Csr,
}

impl ImageRep {
    /// Max-abs of `E Fᵀ + F Eᵀ`.
    pub fn skew_residual(&self) -> f64 {
        let efp = sparse::mul(&self.e, &sparse::transpose(&self.f));
        sparse::max_abs(&sparse::add(&efp, &sparse::transpose(&efp)))
    }

    pub fn rank_f(&self) -> usize {
        sparse::rank(&sparse::to_dense(&self.f), 1e-10)
    }
}

pub fn image_rep(maps: &MapSet, inc: &IncidencePair) -> Result<ImageRep> {
    let res = power_preservation_residual(maps, inc);
    if res > STRUCTURE_TOL {
        return Err(PhError::StructureViolation(format!("power-preservation residual {res:.3e}")));
    }
    let (mp, mq) = (maps.p_ep.ncols(), maps.p_eq.ncols());
    let fp = sparse::scale(&sparse::mul(&maps.p_fp, &inc.d_p), maps.spec.sign_r());
    let fq = sparse::mul(&maps.p_fq, &inc.d_q);
    let (np, nq, mbh, mb) = (maps.n_p(), maps.n_q(), maps.m_b_hat(), maps.m_b());
    // Rows (Ñ_p, Ñ_q, M̂_b, M_b) x columns (M_p, M_q); transposed on return.
    let mut te = Vec::new();
    let mut tf = Vec::new();
    let push = |t: &mut Vec<_>, m: &Csr, r0: usize, c0: usize| {
        t.extend(m.triplet_iter().map(|(i, j, &v)| (r0 + i, c0 + j, v)));
    };
    push(&mut te, &fp, 0, mp);
    push(&mut te, &fq, np, 0);
    push(&mut te, &maps.s_q_hat, np + nq, mp);
    push(&mut te, &maps.s_p, np + nq + mbh, 0);
    push(&mut tf, &maps.p_ep, 0, 0);
    push(&mut tf, &maps.p_eq, np, mp);
    push(&mut tf, &maps.t_p_hat, np + nq, 0);
    push(&mut tf, &maps.t_q, np + nq + mbh, mp);
    let rows = np + nq + mbh + mb;
    let e = sparse::from_triplets(rows, mp + mq, &te);
    let f = sparse::from_triplets(rows, mp + mq, &tf);
    Ok(ImageRep { e: sparse::transpose(&e), f: sparse::transpose(&f) })
}

/// Inverse of a stacked selector: transpose for signed permutations,
/// dense LU otherwise.
fn invert_stack(pi: &Csr, what: &str) -> Result<Csr> {
    if pi.nrows() != pi.ncols() {
        return Err(PhError::RankDeficiency(format!("{what} is {}x{}", pi.nrows(), pi.ncols())));
    }
    if sparse::is_signed_permutation(pi) {
        return Ok(sparse::transpose(pi));
    }
    if pi.nrows() > 4000 {
        return Err(PhError::RankDeficiency(format!("{what} is not a permutation and too large to invert")));
    }
    let inv = sparse::to_dense(pi)
        .lu()
        .try_inverse()
        .ok_or_else(|| PhError::RankDeficiency(format!("{what} is singular")))?;
    if !inv.iter().all(|v| v.is_finite()) {
        return Err(PhError::RankDeficiency(format!("{what} is singular")));
    }
    let cleaned = inv.map(|v| if v.abs() < 1e-15 { 0.0 } else { v });
    Ok(sparse::from_dense(&cleaned))
}

/// Block matrices of the explicit model.
#[derive(Clone, Debug)]
pub struct Jbcd {
    pub j: Csr,
    pub b: Csr,
    pub c: Csr,
    pub d: Csr,
    pub n_p: usize,
    pub n_q: usize,
    pub m_b_hat: usize,
    pub m_b: usize,
}

/// States `x = (p̃, q̃)`, inputs `u = (ê^b, e^b)`, outputs `y = (f̂^b, f^b)`.
pub fn io_rep(maps: &MapSet, inc: &IncidencePair) -> Result<Jbcd> {
    let res = power_preservation_residual(maps, inc);
    if res > STRUCTURE_TOL {
        return Err(PhError::StructureViolation(format!("power-preservation residual {res:.3e}")));
    }
    let (np, nq, mbh, mb) = (maps.n_p(), maps.n_q(), maps.m_b_hat(), maps.m_b());
    let pi_q_inv = invert_stack(&maps.pi_q(), "Π_q")?;
    let pi_p_inv = invert_stack(&maps.pi_p(), "Π_p")?;
    let fp = sparse::scale(&sparse::mul(&maps.p_fp, &inc.d_p), maps.spec.sign_r());
    let top = sparse::mul(&sparse::vstack(&[&fp, &maps.s_q_hat]), &pi_q_inv);
    let fq = sparse::mul(&maps.p_fq, &inc.d_q);
    let bot = sparse::mul(&sparse::vstack(&[&fq, &maps.s_p]), &pi_p_inv);
    let neg = |m: Csr| sparse::scale(&m, -1.0);
    let j_p = neg(sparse::slice(&top, 0, np, 0, nq));
    let b_p = neg(sparse::slice(&top, 0, np, nq, mb));
    let c_q = sparse::slice(&top, np, mbh, 0, nq);
    let d_q = sparse::slice(&top, np, mbh, nq, mb);
    let j_q = neg(sparse::slice(&bot, 0, nq, 0, np));
    let b_q = neg(sparse::slice(&bot, 0, nq, np, mbh));
    let c_p = sparse::slice(&bot, nq, mb, 0, np);
    let d_p = sparse::slice(&bot, nq, mb, np, mbh);
    let s = [np, nq];
    let u = [mbh, mb];
    Ok(Jbcd {
        j: sparse::block2(s, s, [[None, Some(&j_p)], [Some(&j_q), None]]),
        b: sparse::block2(s, u, [[None, Some(&b_p)], [Some(&b_q), None]]),
        c: sparse::block2(u, s, [[None, Some(&c_q)], [Some(&c_p), None]]),
        d: sparse::block2(u, u, [[None, Some(&d_q)], [Some(&d_p), None]]),
        n_p: np,
        n_q: nq,
        m_b_hat: mbh,
        m_b: mb,
    })
}

/// `ẋ = J Q x + B u`, `y = C Q x + D u`, `H(x) = ½ xᵀ Q x`.
#[derive(Clone, Debug)]
pub struct PHModel {
    pub j: Csr,
    pub b: Csr,
    pub c: Csr,
    pub d: Csr,
    /// Diagonal of Q.
    pub q: Vec<f64>,
    /// Size of the p̃ block (leading states).
    pub n_p: usize,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default)]
pub struct Labels {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Labels {
    pub fn from_maps(maps: &MapSet) -> Self {
        let pin: Vec<usize> = maps.t_p_hat.triplet_iter().map(|(_, j, _)| j).collect();
        let qin: Vec<usize> = maps.t_q.triplet_iter().map(|(_, j, _)| j).collect();
        let mut states: Vec<String> = maps.effort_p.iter().map(|i| format!("p{i}")).collect();
        states.extend(maps.effort_q.iter().map(|i| format!("q{i}")));
        let mut inputs: Vec<String> = pin.iter().map(|i| format!("ehat_b{i}")).collect();
        inputs.extend(qin.iter().map(|i| format!("e_b{i}")));
        let mut outputs: Vec<String> = pin.iter().map(|i| format!("fhat_b{i}")).collect();
        outputs.extend(qin.iter().map(|i| format!("f_b{i}")));
        Self { states, inputs, outputs }
    }
}

pub fn assemble_model(jbcd: Jbcd, hodge: &HodgePair, labels: Labels) -> Result<PHModel> {
    let q = hodge.diagonal();
    let n = jbcd.j.nrows();
    let m = jbcd.b.ncols();
    let ok = jbcd.j.ncols() == n
        && q.len() == n
        && jbcd.b.nrows() == n
        && jbcd.c.nrows() == m
        && jbcd.c.ncols() == n
        && jbcd.d.nrows() == m
        && jbcd.d.ncols() == m
        && hodge.q_p.len() == jbcd.n_p
        && labels.states.len() == n
        && labels.inputs.len() == m
        && labels.outputs.len() == m;
    if !ok {
        return Err(PhError::InvalidArgument("model dimensions disagree".into()));
    }
    if let Some(k) = q.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(PhError::SingularHodge(format!("state {k} has non-positive energy weight {}", q[k])));
    }
    Ok(PHModel {
        j: jbcd.j,
        b: jbcd.b,
        c: jbcd.c,
        d: jbcd.d,
        q,
        n_p: jbcd.n_p,
        state_labels: labels.states,
        input_labels: labels.inputs,
        output_labels: labels.outputs,
        meta: BTreeMap::new(),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelStructure {
    pub j_skew: f64,
    pub c_minus_bt: f64,
    pub d_skew: f64,
    pub q_min: f64,
}

impl ModelStructure {
    pub fn pass(&self, tol: f64) -> bool {
        self.j_skew <= tol && self.c_minus_bt <= tol && self.d_skew <= tol && self.q_min > 0.0
    }
}

impl PHModel {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.q).map(|(a, q)| a * a * q).sum::<f64>()
    }

    pub fn structure(&self) -> ModelStructure {
        let t = sparse::transpose;
        ModelStructure {
            j_skew: sparse::max_abs(&sparse::add(&self.j, &t(&self.j))),
            c_minus_bt: sparse::max_abs_diff(&self.c, &t(&self.b)),
            d_skew: sparse::max_abs(&sparse::add(&self.d, &t(&self.d))),
            q_min: self.q.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Dense `A = J Q`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let mut a = sparse::to_dense(&self.j);
        for (j, &qj) in self.q.iter().enumerate() {
            a.column_mut(j).scale_mut(qj);
        }
        a
    }

    /// Output `y = C Q x + D u`.
    pub fn output(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let qx: Vec<f64> = x.iter().zip(&self.q).map(|(a, b)| a * b).collect();
        let mut y = sparse::matvec(&self.c, &qx);
        for (yi, di) in y.iter_mut().zip(sparse::matvec(&self.d, u)) {
            *yi += di;
        }
        y
    }

    /// Co-energy variables `ẽ = Q x`.
    pub fn efforts(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.q).map(|(a, b)| a * b).collect()
    }

    /// Applies a state permutation `perm[new] = old` to every block.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.dim();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(PhError::InvalidArgument("not a permutation".into()));
        }
        let p = sparse::from_triplets(n, n, &perm.iter().enumerate().map(|(i, &o)| (i, o, 1.0)).collect::<Vec<_>>());
        let pt = sparse::transpose(&p);
        let mut out = self.clone();
        out.j = sparse::mul(&sparse::mul(&p, &self.j), &pt);
        out.b = sparse::mul(&p, &self.b);
        out.c = sparse::mul(&self.c, &pt);
        out.q = perm.iter().map(|&o| self.q[o]).collect();
        out.state_labels = perm.iter().map(|&o| self.state_labels[o].clone()).collect();
        Ok(out)
    }
}

/// Every intermediate object of a 2D build.
#[derive(Clone, Debug)]
pub struct Built2d {
    pub mesh: crate::mesh::SimplexMesh,
    pub part: crate::mesh::BoundaryPartition,
    pub inc: IncidencePair,
    pub maps: MapSet,
    pub hodge: HodgePair,
    pub model: PHModel,
}

/// Grid → partition → maps → Hodge → model.
pub fn build_2d_model(
    n: usize,
    m: usize,
    h: f64,
    causality: &crate::mesh::CausalitySpec,
    w: &crate::power_maps::TriangleWeights,
) -> Result<Built2d> {
    let mesh = crate::mesh::SimplexMesh::rect(n, m, h)?;
    let part = crate::mesh::partition_boundary(&mesh, causality)?;
    let inc = mesh.incidence();
    let maps = crate::power_maps::build_maps_2d(&mesh, &part, &inc, w)?;
    let hodge = crate::hodge::hodge_2d(&mesh, &maps)?;
    let labels = Labels::from_maps(&maps);
    let mut model = assemble_model(io_rep(&maps, &inc)?, &hodge, labels)?;
    model.meta.insert("dim".into(), "2".into());
    model.meta.insert("grid".into(), format!("{n}x{m}"));
    model.meta.insert("h".into(), format!("{h}"));
    model.meta.insert("weights_reasonable".into(), w.is_reasonable().to_string());
    Ok(Built2d { mesh, part, inc, maps, hodge, model })
}
