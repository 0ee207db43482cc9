//! Power-preserving maps between the primal and dual discretizations.
//!
//! Given trial efforts `e_p`, `e_q` and the exact discrete conservation
//! laws, the maps produce reduced efforts and flows together with the
//! boundary port variables such that the total discrete power vanishes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::mesh::{BoundaryPartition, IncidencePair, SimplexMesh, TriangleClass};
use crate::sparse::{self, Csr};
use crate::whitney::FormDegreeSpec;

/// Convex weights of one triangle class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ClassWeights {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, gamma: 1.0 - alpha - beta }
    }

    pub fn delta(&self) -> f64 {
        0.125 + (self.alpha - self.beta) / 4.0
    }

    pub fn epsilon(&self) -> f64 {
        0.125 - (self.alpha - self.beta) / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleWeights {
    pub lower: ClassWeights,
    pub upper: ClassWeights,
}

pub const PRESETS: [&str; 4] = ["set1", "set2", "set3", "set4"];

impl TriangleWeights {
    pub fn new(lower: ClassWeights, upper: ClassWeights) -> Result<Self> {
        let w = Self { lower, upper };
        w.validate()?;
        Ok(w)
    }

    /// Named parameter sets.
    pub fn preset(name: &str) -> Result<Self> {
        let (l, u) = match name {
            "set1" => ((1.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 1.0 / 3.0)),
            "set2" => ((0.5, 0.25), (0.25, 0.5)),
            "set3" => ((2.0 / 3.0, 1.0 / 12.0), (1.0 / 12.0, 2.0 / 3.0)),
            "set4" => ((15.0 / 16.0, 1.0 / 32.0), (1.0 / 32.0, 15.0 / 16.0)),
            _ => return Err(PhError::InvalidArgument(format!("unknown weight preset '{name}'"))),
        };
        Self::new(ClassWeights::new(l.0, l.1), ClassWeights::new(u.0, u.1))
    }

    pub fn class(&self, c: TriangleClass) -> ClassWeights {
        match c {
            TriangleClass::Lower => self.lower,
            TriangleClass::Upper => self.upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("lower", self.lower), ("upper", self.upper)] {
            let ok = [w.alpha, w.beta, w.gamma].iter().all(|v| v.is_finite() && (-1e-15..=1.0 + 1e-15).contains(v))
                && (w.alpha + w.beta + w.gamma - 1.0).abs() < 1e-12;
            if !ok {
                return Err(PhError::InvalidArgument(format!("{name} weights are not convex: {w:?}")));
            }
        }
        Ok(())
    }

    /// Sign condition shared by the well-behaved parameter sets.
    pub fn is_reasonable(&self) -> bool {
        let opp = |a: f64, b: f64| a.signum() == -b.signum() || (a == 0.0 && b == 0.0);
        opp(self.lower.delta(), self.upper.delta()) && opp(self.lower.epsilon(), self.upper.epsilon())
    }
}

/// Weights as given in a JSON config: a preset name or explicit α, β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsConfig {
    Preset(String),
    Custom {
        #[serde(rename = "alpha_I")]
        alpha_i: f64,
        #[serde(rename = "beta_I")]
        beta_i: f64,
        #[serde(rename = "alpha_II")]
        alpha_ii: f64,
        #[serde(rename = "beta_II")]
        beta_ii: f64,
    },
}

impl WeightsConfig {
    pub fn resolve(&self) -> Result<TriangleWeights> {
        match self {
            Self::Preset(name) => TriangleWeights::preset(name),
            Self::Custom { alpha_i, beta_i, alpha_ii, beta_ii } => {
                TriangleWeights::new(ClassWeights::new(*alpha_i, *beta_i), ClassWeights::new(*alpha_ii, *beta_ii))
            }
        }
    }
}

/// `P_fq = P_fq^⊥ + P_fq^∥ + P_fq^rot`.
#[derive(Clone, Debug)]
pub struct PfqParts {
    pub perp: Csr,
    pub par: Csr,
    pub rot: Csr,
}

/// Input selectors and effort maps.
#[derive(Clone, Debug)]
pub struct Selectors {
    pub t_q: Csr,
    pub t_p_hat: Csr,
    pub p_eq: Csr,
    pub p_ep: Csr,
    /// Entities kept as reduced p-efforts (rows of `P_ep`).
    pub effort_p: Vec<usize>,
    /// Entities kept as reduced q-efforts (rows of `P_eq`).
    pub effort_q: Vec<usize>,
}

/// All maps of one discretization.
#[derive(Clone, Debug)]
pub struct MapSet {
    pub spec: FormDegreeSpec,
    pub t_q: Csr,
    pub t_p_hat: Csr,
    pub p_eq: Csr,
    pub p_ep: Csr,
    pub p_fp: Csr,
    pub p_fq: Csr,
    pub s_p: Csr,
    pub s_q_hat: Csr,
    pub parts: Option<PfqParts>,
    pub effort_p: Vec<usize>,
    pub effort_q: Vec<usize>,
}

impl MapSet {
    /// `Π_q = [P_eq; T_q]`.
    pub fn pi_q(&self) -> Csr {
        sparse::vstack(&[&self.p_eq, &self.t_q])
    }

    /// `Π_p = [P_ep; T̂_p]`.
    pub fn pi_p(&self) -> Csr {
        sparse::vstack(&[&self.p_ep, &self.t_p_hat])
    }

    pub fn n_p(&self) -> usize {
        self.p_ep.nrows()
    }

    pub fn n_q(&self) -> usize {
        self.p_eq.nrows()
    }

    pub fn m_b(&self) -> usize {
        self.t_q.nrows()
    }

    pub fn m_b_hat(&self) -> usize {
        self.t_p_hat.nrows()
    }
}

pub fn build_selectors(mesh: &SimplexMesh, part: &BoundaryPartition) -> Selectors {
    let nn = mesh.node_count();
    if mesh.dim == 1 {
        let n = mesh.edge_count();
        return Selectors {
            t_q: sparse::selector(nn, &[0], 1.0),
            t_p_hat: sparse::selector(nn, &[n], -1.0),
            p_eq: sparse::selector(nn, &(1..=n).collect::<Vec<_>>(), 1.0),
            p_ep: sparse::selector(nn, &(0..n).collect::<Vec<_>>(), 1.0),
            effort_p: (0..n).collect(),
            effort_q: (1..=n).collect(),
        };
    }
    let ne = mesh.edge_count();
    let pin: BTreeSet<_> = part.p_inputs.iter().copied().collect();
    let qin: BTreeSet<_> = part.q_inputs.iter().copied().collect();
    let effort_p: Vec<_> = (0..nn).filter(|n| !pin.contains(n)).collect();
    let effort_q: Vec<_> = (0..ne).filter(|e| !qin.contains(e)).collect();
    Selectors {
        t_q: sparse::selector(ne, &part.q_inputs, 1.0),
        t_p_hat: sparse::selector(nn, &part.p_inputs, 1.0),
        p_eq: sparse::selector(ne, &effort_q, 1.0),
        p_ep: sparse::selector(nn, &effort_p, 1.0),
        effort_p,
        effort_q,
    }
}

/// Full node-by-face weight matrix: entry `[n, f]` is the weight that
/// node `n` carries in face `f`.
pub fn build_pfp_full(mesh: &SimplexMesh, w: &TriangleWeights) -> Csr {
    let mut t = Vec::with_capacity(3 * mesh.face_count());
    for (f, face) in mesh.faces.iter().enumerate() {
        let cw = w.class(face.class);
        t.push((face.alpha, f, cw.alpha));
        t.push((face.beta, f, cw.beta));
        t.push((face.gamma, f, cw.gamma));
    }
    sparse::from_triplets(mesh.node_count(), mesh.face_count(), &t)
}

/// `P_fp` with the rows of p-input nodes removed.
pub fn build_pfp(mesh: &SimplexMesh, sel: &Selectors, w: &TriangleWeights) -> Csr {
    sparse::mul(&sel.p_ep, &build_pfp_full(mesh, w))
}

fn dq(mesh: &SimplexMesh, e: usize, x: usize) -> f64 {
    let [t, hd] = mesh.edges[e];
    if x == hd {
        1.0
    } else if x == t {
        -1.0
    } else {
        0.0
    }
}

fn face_weights(mesh: &SimplexMesh, w: &TriangleWeights, f: usize) -> [(usize, f64); 3] {
    let face = &mesh.faces[f];
    let cw = w.class(face.class);
    [(face.alpha, cw.alpha), (face.beta, cw.beta), (face.gamma, cw.gamma)]
}

/// Builds `P_fq` row by row from the ⊥, ∥ and rot stencils.
fn build_pfq(
    mesh: &SimplexMesh,
    part: &BoundaryPartition,
    sel: &Selectors,
    w: &TriangleWeights,
    sign_r: f64,
) -> Result<PfqParts> {
    let pin: BTreeSet<_> = part.p_inputs.iter().copied().collect();
    let ne = mesh.edge_count();
    let (mut tperp, mut tpar, mut trot) = (vec![], vec![], vec![]);
    for (row, &i) in sel.effort_q.iter().enumerate() {
        let [u, v] = mesh.edges[i];
        // Target: row i of -(-1)^r d_pᵀ P_fpᵀ, supported on the nodes of the faces of i.
        let mut g: BTreeMap<usize, f64> = BTreeMap::new();
        for &f in mesh.faces_of_edge(i) {
            let s = mesh.faces[f].sign_of(i) as f64;
            for (x, wx) in face_weights(mesh, w, f) {
                *g.entry(x).or_default() += -sign_r * s * wx;
            }
        }
        let scale = g.values().fold(1.0_f64, |m, x| m.max(x.abs()));

        let mut chain: BTreeMap<usize, f64> = BTreeMap::new();
        for &f in mesh.faces_of_edge(i) {
            let face = &mesh.faces[f];
            let x = face.vertices().into_iter().find(|&n| n != u && n != v).unwrap();
            let gx = g[&x];
            let leg = |a: usize, b: usize| {
                mesh.edge_between(a, b)
                    .ok_or_else(|| PhError::Internal(format!("missing edge {a}-{b}")))
            };
            let legs = if x == face.gamma {
                vec![(leg(x, u)?, 0.5), (leg(x, v)?, 0.5)]
            } else {
                let gv = if face.gamma == u { u } else { v };
                vec![(leg(x, gv)?, 1.0)]
            };
            for (e, fr) in legs {
                *chain.entry(e).or_default() += fr * gx * dq(mesh, e, x);
            }
        }
        let mut m = g.clone();
        for (&e, &c) in &chain {
            for n in mesh.edges[e] {
                *m.entry(n).or_default() -= c * dq(mesh, e, n);
            }
        }
        if let Some((n, val)) = m.iter().find(|(n, val)| **n != u && **n != v && val.abs() > 1e-13 * scale) {
            return Err(PhError::Internal(format!("edge {i}: residual {val} left at node {n}")));
        }
        let (mut mu, mut mv) = (m.get(&u).copied().unwrap_or(0.0), m.get(&v).copied().unwrap_or(0.0));
        let s = mu + mv;
        if s.abs() > 1e-13 * scale {
            match (pin.contains(&u), pin.contains(&v)) {
                (true, true) => {
                    mu -= s / 2.0;
                    mv -= s / 2.0;
                }
                (true, false) => {
                    let k = mv * dq(mesh, i, v);
                    mu = k * dq(mesh, i, u);
                    mv = k * dq(mesh, i, v);
                }
                (false, true) => {
                    let k = mu * dq(mesh, i, u);
                    mu = k * dq(mesh, i, u);
                    mv = k * dq(mesh, i, v);
                }
                (false, false) => {
                    return Err(PhError::Internal(format!(
                        "edge {i}: unbalanced target without an adjacent p-input"
                    )))
                }
            }
        }
        let _ = mu;
        let par = mv * dq(mesh, i, v);

        let mut rot: BTreeMap<usize, f64> = BTreeMap::new();
        for &f in mesh.faces_of_edge(i) {
            let face = &mesh.faces[f];
            let Some(hyp) = mesh.hypotenuse(f) else { continue };
            if hyp == i {
                continue;
            }
            let Some(&fo) = mesh.faces_of_edge(hyp).iter().find(|&&o| o != f) else { continue };
            let mut circ: BTreeMap<usize, f64> = BTreeMap::new();
            for ff in [f, fo] {
                for &(e, s) in &mesh.faces[ff].edges {
                    *circ.entry(e).or_default() += s as f64;
                }
            }
            let cw = w.class(face.class);
            let other = if u == face.gamma { v } else { u };
            let pi = if other == face.beta { cw.delta() } else { -cw.epsilon() };
            let ci = circ.get(&i).copied().unwrap_or(0.0);
            for (&e, &c) in &circ {
                if c != 0.0 {
                    *rot.entry(e).or_default() += pi * ci * c;
                }
            }
        }
        tperp.extend(chain.into_iter().map(|(e, c)| (row, e, c)));
        tpar.push((row, i, par));
        trot.extend(rot.into_iter().map(|(e, c)| (row, e, c)));
    }
    let nr = sel.effort_q.len();
    Ok(PfqParts {
        perp: sparse::from_triplets(nr, ne, &tperp),
        par: sparse::from_triplets(nr, ne, &tpar),
        rot: sparse::from_triplets(nr, ne, &trot),
    })
}

/// Output matrices from the flow maps:
/// `S_p = -(-1)^r T_q d_pᵀ P_fp,fullᵀ` and
/// `Ŝ_q = -T̂_p (d_qᵀ P_fqᵀ P_eq + S_pᵀ T_q)`.
fn outputs_2d(sel: &Selectors, inc: &IncidencePair, p_full: &Csr, p_fq: &Csr, sign_r: f64) -> (Csr, Csr) {
    let s_p = sparse::scale(
        &sparse::mul(&sparse::mul(&sel.t_q, &sparse::transpose(&inc.d_p)), &sparse::transpose(p_full)),
        -sign_r,
    );
    let inner = sparse::add(
        &sparse::mul(&sparse::mul(&sparse::transpose(&inc.d_q), &sparse::transpose(p_fq)), &sel.p_eq),
        &sparse::mul(&sparse::transpose(&s_p), &sel.t_q),
    );
    let s_q_hat = sparse::scale(&sparse::mul(&sel.t_p_hat, &inner), -1.0);
    (s_p, s_q_hat)
}

/// Builds every map on a 2D triangulated grid.
pub fn build_maps_2d(
    mesh: &SimplexMesh,
    part: &BoundaryPartition,
    inc: &IncidencePair,
    w: &TriangleWeights,
) -> Result<MapSet> {
    if mesh.dim != 2 {
        return Err(PhError::InvalidArgument("build_maps_2d needs a 2D mesh".into()));
    }
    w.validate()?;
    let spec = FormDegreeSpec::WAVE_2D;
    let sel = build_selectors(mesh, part);
    let p_full = build_pfp_full(mesh, w);
    let p_fp = sparse::mul(&sel.p_ep, &p_full);
    let parts = build_pfq(mesh, part, &sel, w, spec.sign_r())?;
    let p_fq = sparse::add(&sparse::add(&parts.perp, &parts.par), &parts.rot);
    let (s_p, s_q_hat) = outputs_2d(&sel, inc, &p_full, &p_fq, spec.sign_r());
    let maps = MapSet {
        spec,
        t_q: sel.t_q,
        t_p_hat: sel.t_p_hat,
        p_eq: sel.p_eq,
        p_ep: sel.p_ep,
        p_fp,
        p_fq,
        s_p,
        s_q_hat,
        parts: Some(parts),
        effort_p: sel.effort_p,
        effort_q: sel.effort_q,
    };
    let res = power_preservation_residual(&maps, inc);
    if res > 1e-12 {
        return Err(PhError::Internal(format!("power-preservation residual {res:.3e}")));
    }
    Ok(maps)
}

/// Maps on a chain of `n` edges with parameter `alpha`: bidiagonal
/// `P_fq = P_fpᵀ` with `(1-α, α)`.
pub fn build_1d_maps(n: usize, alpha: f64) -> Result<MapSet> {
    if n < 2 {
        return Err(PhError::InvalidArgument("chain needs N >= 2".into()));
    }
    if !(alpha < 1.0) || !alpha.is_finite() {
        return Err(PhError::InvalidArgument(format!("alpha = {alpha} must be finite and < 1")));
    }
    let mesh = SimplexMesh::interval(n, 1.0)?;
    let part = BoundaryPartition::interval_default(&mesh);
    let sel = build_selectors(&mesh, &part);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 1.0 - alpha));
        if i + 1 < n {
            t.push((i, i + 1, alpha));
        }
    }
    let p_fq = sparse::from_triplets(n, n, &t);
    let p_fp = sparse::transpose(&p_fq);
    let s_p = sparse::from_triplets(1, n + 1, &[(0, 0, 1.0 - alpha), (0, 1, alpha)]);
    let s_q_hat = sparse::from_triplets(1, n + 1, &[(0, n - 1, alpha), (0, n, 1.0 - alpha)]);
    let maps = MapSet {
        spec: FormDegreeSpec::WAVE_1D,
        t_q: sel.t_q,
        t_p_hat: sel.t_p_hat,
        p_eq: sel.p_eq,
        p_ep: sel.p_ep,
        p_fp,
        p_fq,
        s_p,
        s_q_hat,
        parts: None,
        effort_p: sel.effort_p,
        effort_q: sel.effort_q,
    };
    let res = power_preservation_residual(&maps, &mesh.incidence());
    if res > 1e-12 {
        return Err(PhError::Internal(format!("power-preservation residual {res:.3e}")));
    }
    Ok(maps)
}

/// Max-abs of `(-1)^r d_pᵀ P_fpᵀ P_ep + P_eqᵀ P_fq d_q + T_qᵀ S_p + Ŝ_qᵀ T̂_p`.
pub fn power_preservation_residual(m: &MapSet, inc: &IncidencePair) -> f64 {
    let t = sparse::transpose;
    let a = sparse::scale(&sparse::mul(&sparse::mul(&t(&inc.d_p), &t(&m.p_fp)), &m.p_ep), m.spec.sign_r());
    let b = sparse::mul(&sparse::mul(&t(&m.p_eq), &m.p_fq), &inc.d_q);
    let c = sparse::mul(&t(&m.t_q), &m.s_p);
    let d = sparse::mul(&t(&m.s_q_hat), &m.t_p_hat);
    sparse::max_abs(&sparse::add(&sparse::add(&a, &b), &sparse::add(&c, &d)))
}

/// Discrete power balance for trial efforts `e_p`, `e_q`:
/// `⟨ẽ^p, f̃^p⟩ + ⟨ẽ^q, f̃^q⟩ + ⟨e^b, f^b⟩ + ⟨ê^b, f̂^b⟩`.
pub fn power_balance(m: &MapSet, inc: &IncidencePair, e_p: &[f64], e_q: &[f64]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let f_p: Vec<f64> = sparse::matvec(&inc.d_p, e_q).iter().map(|v| m.spec.sign_r() * v).collect();
    let f_q = sparse::matvec(&inc.d_q, e_p);
    let et_p = sparse::matvec(&m.p_ep, e_p);
    let et_q = sparse::matvec(&m.p_eq, e_q);
    let ft_p = sparse::matvec(&m.p_fp, &f_p);
    let ft_q = sparse::matvec(&m.p_fq, &f_q);
    let e_b = sparse::matvec(&m.t_q, e_q);
    let f_b = sparse::matvec(&m.s_p, e_p);
    let eh_b = sparse::matvec(&m.t_p_hat, e_p);
    let fh_b = sparse::matvec(&m.s_q_hat, e_q);
    dot(&et_p, &ft_p) + dot(&et_q, &ft_q) + dot(&e_b, &f_b) + dot(&eh_b, &fh_b)
}
