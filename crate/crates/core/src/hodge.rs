//! Diagonal discrete Hodge matrices for `ẽ = Q x̃`.

use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::mesh::{EdgeKind, SimplexMesh};
use crate::power_maps::MapSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HodgePair {
    pub q_p: Vec<f64>,
    pub q_q: Vec<f64>,
}

impl HodgePair {
    /// Concatenated diagonal `[Q_p; Q_q]`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.q_p.iter().chain(&self.q_q).copied().collect()
    }

    fn check(self) -> Result<Self> {
        if self.q_p.iter().chain(&self.q_q).all(|v| v.is_finite() && *v > 0.0) {
            Ok(self)
        } else {
            Err(PhError::SingularHodge("non-positive or non-finite diagonal entry".into()))
        }
    }
}

/// `Q_p,ii = 2 / (h² Σ_j P_fp,ij)` and `Q_q,ii = c / Σ_j |P_fq^⊥,ij|`
/// with `c = 2` on diagonal edges and 1 otherwise.
pub fn hodge_2d(mesh: &SimplexMesh, maps: &MapSet) -> Result<HodgePair> {
    let parts = maps
        .parts
        .as_ref()
        .ok_or_else(|| PhError::InvalidArgument("maps carry no ⊥ part".into()))?;
    let h = mesh.h;
    let mut q_p = Vec::with_capacity(maps.n_p());
    for (r, row) in maps.p_fp.row_iter().enumerate() {
        let s: f64 = row.values().iter().sum();
        if s <= 0.0 {
            return Err(PhError::DegenerateWeights(format!(
                "node {} has zero adjacent weight",
                maps.effort_p[r]
            )));
        }
        q_p.push(2.0 / (h * h * s));
    }
    let mut q_q = Vec::with_capacity(maps.n_q());
    for (r, row) in parts.perp.row_iter().enumerate() {
        let s: f64 = row.values().iter().map(|v| v.abs()).sum();
        let e = maps.effort_q[r];
        if s <= 0.0 {
            return Err(PhError::DegenerateWeights(format!("edge {e} has an empty ⊥ stencil")));
        }
        let c = if mesh.edge_kinds[e] == EdgeKind::Diagonal { 2.0 } else { 1.0 };
        q_q.push(c / s);
    }
    HodgePair { q_p, q_q }.check()
}

/// `Q_p = diag(1/(1-α), 1, …, 1)/h` and `Q_q = diag(1, …, 1, 1/(1-α))/h`.
pub fn hodge_1d(n: usize, alpha: f64, h: f64) -> Result<HodgePair> {
    if alpha >= 1.0 || !alpha.is_finite() {
        return Err(PhError::SingularHodge(format!("alpha = {alpha} makes the boundary entry singular")));
    }
    if !(h > 0.0) {
        return Err(PhError::InvalidArgument("h must be positive".into()));
    }
    let mut q_p = vec![1.0 / h; n];
    let mut q_q = vec![1.0 / h; n];
    q_p[0] /= 1.0 - alpha;
    q_q[n - 1] /= 1.0 - alpha;
    HodgePair { q_p, q_q }.check()
}
