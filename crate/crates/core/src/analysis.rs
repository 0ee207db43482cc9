//! Spectra of the 1D wave models, eigenvalue tables and convergence orders.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::hodge::{hodge_1d, HodgePair};
use crate::mesh::SimplexMesh;
use crate::power_maps::{build_1d_maps, build_selectors, power_preservation_residual, MapSet};
use crate::sparse::{self, Csr};
use crate::statespace::{assemble_model, io_rep, Labels, PHModel, STRUCTURE_TOL};
use crate::whitney::FormDegreeSpec;
use crate::mesh::BoundaryPartition;

/// Tolerance on real parts of a conservative spectrum.
pub const REAL_PART_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Parametrized flow maps with selector effort maps.
    Ours,
    /// Identity flow maps with convex effort averaging.
    Golo,
}

impl std::str::FromStr for Method {
    type Err = PhError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(Self::Ours),
            "golo" => Ok(Self::Golo),
            _ => Err(PhError::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// Exact eigenvalue `(2k-1)π/2` of the unit-length wave operator.
pub fn exact_eigenvalue(k: usize) -> f64 {
    (2 * k - 1) as f64 * PI / 2.0
}

/// Chain of `n` edges on `[0, 1]` with the `(1-α, α)` flow maps.
pub fn build_1d_model(n: usize, alpha: f64) -> Result<PHModel> {
    let maps = build_1d_maps(n, alpha)?;
    let mesh = SimplexMesh::interval(n, 1.0)?;
    let hodge = hodge_1d(n, alpha, mesh.h)?;
    finish_1d(&maps, &mesh, &hodge, "ours", alpha)
}

fn finish_1d(maps: &MapSet, mesh: &SimplexMesh, hodge: &HodgePair, method: &str, param: f64) -> Result<PHModel> {
    let inc = mesh.incidence();
    let mut model = assemble_model(io_rep(maps, &inc)?, hodge, Labels::from_maps(maps))?;
    model.meta.insert("dim".into(), "1".into());
    model.meta.insert("method".into(), method.into());
    model.meta.insert("n".into(), mesh.edge_count().to_string());
    model.meta.insert("parameter".into(), format!("{param}"));
    Ok(model)
}

/// Effort maps of the comparison method: row `i` of `P_ep` averages the
/// nodes of edge `i` with `(1-α', α')`, row `i` of `P_eq` with `(α', 1-α')`.
pub fn build_golo_1d_maps(n: usize, alpha_prime: f64) -> Result<MapSet> {
    if n < 2 {
        return Err(PhError::InvalidArgument("chain needs N >= 2".into()));
    }
    if !(alpha_prime > -1.0 && alpha_prime < 1.0) {
        return Err(PhError::InvalidArgument(format!("alpha' = {alpha_prime} outside (-1, 1)")));
    }
    let mesh = SimplexMesh::interval(n, 1.0)?;
    let part = BoundaryPartition::interval_default(&mesh);
    let sel = build_selectors(&mesh, &part);
    let inc = mesh.incidence();
    let a = alpha_prime;
    let (mut tp, mut tq) = (vec![], vec![]);
    for i in 0..n {
        tp.push((i, i, 1.0 - a));
        tp.push((i, i + 1, a));
        tq.push((i, i, a));
        tq.push((i, i + 1, 1.0 - a));
    }
    let p_ep = sparse::from_triplets(n, n + 1, &tp);
    let p_eq = sparse::from_triplets(n, n + 1, &tq);
    let id = sparse::identity(n);
    let spec = FormDegreeSpec::WAVE_1D;
    let t = sparse::transpose;
    let x = sparse::add(
        &sparse::scale(&sparse::mul(&t(&inc.d_p), &p_ep), spec.sign_r()),
        &sparse::mul(&t(&p_eq), &inc.d_q),
    );
    let (s_p, s_q_hat) = solve_outputs(&x, &sel.t_q, &sel.t_p_hat);
    let maps = MapSet {
        spec,
        t_q: sel.t_q,
        t_p_hat: sel.t_p_hat,
        p_eq,
        p_ep,
        p_fp: id.clone(),
        p_fq: id,
        s_p,
        s_q_hat,
        parts: None,
        effort_p: (0..n).collect(),
        effort_q: (0..n).collect(),
    };
    let res = power_preservation_residual(&maps, &inc);
    if res > STRUCTURE_TOL {
        return Err(PhError::Internal(format!("comparison maps leave residual {res:.3e}")));
    }
    Ok(maps)
}

/// Outputs from `X + T_qᵀ S_p + Ŝ_qᵀ T̂_p = 0` for row/column selectors
/// with orthonormal rows: `S_p = -T_q X`, `Ŝ_q = -T̂_p (X + T_qᵀ S_p)ᵀ`.
pub fn solve_outputs(x: &Csr, t_q: &Csr, t_p_hat: &Csr) -> (Csr, Csr) {
    let s_p = sparse::scale(&sparse::mul(t_q, x), -1.0);
    let rest = sparse::add(x, &sparse::mul(&sparse::transpose(t_q), &s_p));
    let s_q_hat = sparse::scale(&sparse::mul(t_p_hat, &sparse::transpose(&rest)), -1.0);
    (s_p, s_q_hat)
}

/// Comparison model: identity flow maps, averaged efforts, `Q = I/h`.
pub fn build_golo_1d_model(n: usize, alpha_prime: f64) -> Result<PHModel> {
    let maps = build_golo_1d_maps(n, alpha_prime)?;
    let mesh = SimplexMesh::interval(n, 1.0)?;
    let hodge = HodgePair { q_p: vec![1.0 / mesh.h; n], q_q: vec![1.0 / mesh.h; n] };
    let mut model = finish_1d(&maps, &mesh, &hodge, "golo", alpha_prime)?;
    model.meta.insert("convex".into(), (alpha_prime >= 0.0).to_string());
    Ok(model)
}

pub fn build_model(method: Method, n: usize, param: f64) -> Result<PHModel> {
    match method {
        Method::Ours => build_1d_model(n, param),
        Method::Golo => build_golo_1d_model(n, param),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    /// Positive imaginary parts, ascending.
    pub imag: Vec<f64>,
    pub max_abs_real: f64,
}

impl Spectrum {
    /// `k`-th smallest positive imaginary part (1-based).
    pub fn kth(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.imag.get(i).copied())
    }
}

/// Eigenvalues of `J Q`, computed on the similar skew matrix
/// `Q^{1/2} J Q^{1/2}`.
pub fn spectrum(model: &PHModel) -> Result<Spectrum> {
    let s: Vec<f64> = model.q.iter().map(|v| v.sqrt()).collect();
    let mut a = sparse::to_dense(&model.j);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            a[(i, j)] *= s[i] * s[j];
        }
    }
    let ev = a.complex_eigenvalues();
    let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let max_abs_real = ev.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if !ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(PhError::Numerical("eigen-solver returned non-finite values".into()));
    }
    if max_abs_real > REAL_PART_TOL {
        return Err(PhError::Numerical(format!("spectrum has real part {max_abs_real:.3e}")));
    }
    let mut imag: Vec<f64> = ev.iter().map(|z| z.im).filter(|&v| v > 1e-10 * scale).collect();
    imag.sort_by(f64::total_cmp);
    Ok(Spectrum { imag, max_abs_real })
}

pub const TABLE_KS: [usize; 9] = [1, 2, 3, 4, 5, 10, 20, 40, 80];
pub const TABLE_NS: [usize; 3] = [20, 40, 80];
pub const TABLE3_ALPHAS: [f64; 3] = [-1.0 / 12.0, 0.0, 1.0 / 6.0];
pub const TABLE4_ALPHAS: [f64; 3] = [1.0 / 12.0, 0.0, -1.0 / 6.0];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigCell {
    pub param: f64,
    pub n: usize,
    /// One entry per requested `k`; `None` where `k > N`.
    pub values: Vec<Option<f64>>,
    pub max_abs_real: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigTable {
    pub method: Method,
    pub ks: Vec<usize>,
    pub cells: Vec<EigCell>,
    pub exact: Vec<f64>,
}

impl EigTable {
    pub fn get(&self, param: f64, n: usize, k: usize) -> Option<f64> {
        let ki = self.ks.iter().position(|&x| x == k)?;
        self.cells.iter().find(|c| c.n == n && (c.param - param).abs() < 1e-12)?.values[ki]
    }

    /// CSV with one row per `k`, one column per `(parameter, N)` and a
    /// final column with the exact value.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let pname = match self.method {
            Method::Ours => "alpha",
            Method::Golo => "alpha_prime",
        };
        let mut header = vec!["k".to_string()];
        header.extend(self.cells.iter().map(|c| format!("{pname}={}_N={}", fmt_param(c.param), c.n)));
        header.push("exact".into());
        w.write_record(&header).map_err(csv_err)?;
        for (ki, &k) in self.ks.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(self.cells.iter().map(|c| c.values[ki].map_or(String::new(), |v| format!("{v:.6}"))));
            row.push(format!("{:.6}", self.exact[ki]));
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| PhError::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| PhError::Parse(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> PhError {
    PhError::Parse(e.to_string())
}

/// Short label for the table parameters.
pub fn fmt_param(p: f64) -> String {
    for (v, s) in [(-1.0 / 12.0, "-1/12"), (1.0 / 12.0, "1/12"), (1.0 / 6.0, "1/6"), (-1.0 / 6.0, "-1/6"), (0.5, "1/2")] {
        if (p - v).abs() < 1e-14 {
            return s.into();
        }
    }
    format!("{p}")
}

/// Spectra over a parameter × N grid, cells computed in parallel.
pub fn eig_table(method: Method, params: &[f64], ns: &[usize], ks: &[usize]) -> Result<EigTable> {
    let jobs: Vec<(f64, usize)> = params.iter().flat_map(|&p| ns.iter().map(move |&n| (p, n))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(param, n)| {
            let sp = spectrum(&build_model(method, n, param)?)?;
            Ok(EigCell {
                param,
                n,
                values: ks.iter().map(|&k| if k <= n { sp.kth(k) } else { None }).collect(),
                max_abs_real: sp.max_abs_real,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigTable { method, ks: ks.to_vec(), cells, exact: ks.iter().map(|&k| exact_eigenvalue(k)).collect() })
}

pub fn table3() -> Result<EigTable> {
    eig_table(Method::Ours, &TABLE3_ALPHAS, &TABLE_NS, &TABLE_KS)
}

pub fn table4() -> Result<EigTable> {
    eig_table(Method::Golo, &TABLE4_ALPHAS, &TABLE_NS, &TABLE_KS)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub k: usize,
    pub ns: Vec<usize>,
    pub rel_errors: Vec<f64>,
    /// Least-squares slope of `ln err` against `ln N`.
    pub slope: f64,
}

pub fn convergence_study(alphas: &[f64], ns: &[usize], ks: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if alphas.is_empty() || ns.is_empty() || ks.is_empty() {
        return Err(PhError::InvalidArgument("convergence study needs nonempty lists".into()));
    }
    let table = eig_table(Method::Ours, alphas, ns, ks)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &k in ks {
            let exact = exact_eigenvalue(k);
            let (mut used, mut errs) = (vec![], vec![]);
            for &n in ns {
                if let Some(v) = table.get(alpha, n, k) {
                    used.push(n);
                    errs.push((v - exact).abs() / exact);
                }
            }
            let slope = log_log_slope(&used, &errs);
            rows.push(ConvergenceRow { alpha, k, ns: used, rel_errors: errs, slope });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x` (NaN with fewer than two points).
pub fn log_log_slope(x: &[usize], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(&a, &b)| ((a as f64).ln(), b.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
