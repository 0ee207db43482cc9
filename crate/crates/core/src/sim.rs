//! Implicit-midpoint time integration with energy accounting.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::mesh::{CausalitySpec, Corner, SegmentSpec};
use crate::power_maps::TriangleWeights;
use crate::sparse::{self, Csr};
use crate::statespace::{build_2d_model, Built2d, PHModel};

/// Scalar input signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Zero,
    Constant { value: f64 },
    /// `amplitude · sin²(π t / period)` for `t < duration`, then 0.
    SinSquaredPulse { amplitude: f64, period: f64, duration: f64 },
    /// Piecewise-linear through the samples, held constant outside.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::SinSquaredPulse { amplitude, period, duration } => {
                if t >= 0.0 && t < *duration {
                    amplitude * (std::f64::consts::PI * t / period).sin().powi(2)
                } else {
                    0.0
                }
            }
            Self::Sampled { times, values } => {
                if times.is_empty() {
                    return 0.0;
                }
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    values[0]
                } else if k == times.len() {
                    values[k - 1]
                } else {
                    let (t0, t1) = (times[k - 1], times[k]);
                    let w = (t - t0) / (t1 - t0);
                    values[k - 1] * (1.0 - w) + values[k] * w
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::SinSquaredPulse { period, .. } if !(*period > 0.0) => {
                Err(PhError::InvalidArgument("pulse period must be positive".into()))
            }
            Self::Sampled { times, values } if times.len() != values.len() || times.windows(2).any(|w| w[1] <= w[0]) => {
                Err(PhError::InvalidArgument("sampled signal needs increasing times and matching values".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortSignal {
    pub port: usize,
    pub signal: Signal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Ports not listed receive zero input.
    #[serde(default)]
    pub inputs: Vec<PortSignal>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Keep every state (memory grows with the step count).
    #[serde(default)]
    pub store_states: bool,
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn validate(&self, model: &PHModel) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PhError::InvalidArgument("dt must be positive".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(PhError::InvalidArgument("t_end must be non-negative".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end + 1e-12).contains(&t)) {
            return Err(PhError::InvalidArgument(format!("snapshot time {t} outside [0, T]")));
        }
        for p in &self.inputs {
            if p.port >= model.inputs() {
                return Err(PhError::InvalidArgument(format!("input port {} does not exist", p.port)));
            }
            p.signal.validate()?;
        }
        Ok(())
    }

    pub fn input_at(&self, m: usize, t: f64) -> Vec<f64> {
        let mut u = vec![0.0; m];
        for p in &self.inputs {
            u[p.port] += p.signal.eval(t);
        }
        u
    }
}

enum Solver {
    Dense { lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> },
    /// Schur complement on the p̃ block of `J = [[0, J_pq], [J_qp, 0]]`.
    Block { lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, jpq_qq: Csr, jqp_qp: Csr, n_p: usize },
}

/// Implicit-midpoint stepper for a fixed `dt`; the factorization is reused.
pub struct MidpointStepper<'a> {
    model: &'a PHModel,
    dt: f64,
    solver: Solver,
}

fn is_zero_block(j: &Csr, r0: usize, nr: usize, c0: usize, nc: usize) -> bool {
    j.triplet_iter().all(|(i, k, &v)| !(i >= r0 && i < r0 + nr && k >= c0 && k < c0 + nc) || v == 0.0)
}

fn scale_cols(a: &Csr, d: &[f64]) -> Csr {
    sparse::mul(a, &sparse::diag(d))
}

impl<'a> MidpointStepper<'a> {
    pub fn new(model: &'a PHModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(PhError::InvalidArgument("dt must be positive".into()));
        }
        let n = model.dim();
        let np = model.n_p;
        let nq = n - np;
        let a = 0.5 * dt;
        let block = np > 0
            && nq > 0
            && is_zero_block(&model.j, 0, np, 0, np)
            && is_zero_block(&model.j, np, nq, np, nq);
        let solver = if block {
            let jpq_qq = scale_cols(&sparse::slice(&model.j, 0, np, np, nq), &model.q[np..]);
            let jqp_qp = scale_cols(&sparse::slice(&model.j, np, nq, 0, np), &model.q[..np]);
            let prod = sparse::to_dense(&sparse::mul(&jpq_qq, &jqp_qp));
            let s = DMatrix::identity(np, np) - prod * (a * a);
            Solver::Block { lu: s.lu(), jpq_qq, jqp_qp, n_p: np }
        } else {
            let m = DMatrix::identity(n, n) - model.system_matrix() * a;
            Solver::Dense { lu: m.lu() }
        };
        Ok(Self { model, dt, solver })
    }

    /// `x⁺ = 2x̄ - x` with `(I - dt/2 A) x̄ = x + dt/2 B u_mid`, which is the
    /// implicit midpoint rule. One step of iterative refinement on `x̄`
    /// keeps the unforced energy drift near round-off.
    pub fn step(&self, x: &[f64], u_mid: &[f64]) -> Result<Vec<f64>> {
        let a = 0.5 * self.dt;
        let bu = sparse::matvec(&self.model.b, u_mid);
        let rhs: Vec<f64> = x.iter().zip(&bu).map(|(xi, b)| xi + a * b).collect();
        let mut xb = self.solve(rhs.clone())?;
        let ax = sparse::matvec(&self.model.j, &self.model.efforts(&xb));
        let res: Vec<f64> = (0..x.len()).map(|i| rhs[i] - (xb[i] - a * ax[i])).collect();
        for (v, c) in xb.iter_mut().zip(self.solve(res)?) {
            *v += c;
        }
        let out: Vec<f64> = xb.iter().zip(x).map(|(m, xi)| 2.0 * m - xi).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(PhError::Numerical("non-finite state".into()));
        }
        Ok(out)
    }

    /// Solves `(I - dt/2 A) y = r`.
    fn solve(&self, r: Vec<f64>) -> Result<Vec<f64>> {
        let a = 0.5 * self.dt;
        match &self.solver {
            Solver::Dense { lu } => Ok(lu
                .solve(&DVector::from_vec(r))
                .ok_or_else(|| PhError::Numerical("singular midpoint matrix".into()))?
                .data
                .into()),
            Solver::Block { lu, jpq_qq, jqp_qp, n_p } => {
                let (rp, rq) = r.split_at(*n_p);
                let t = sparse::matvec(jpq_qq, rq);
                let rhs: Vec<f64> = rp.iter().zip(&t).map(|(p, v)| p + a * v).collect();
                let p = lu
                    .solve(&DVector::from_vec(rhs))
                    .ok_or_else(|| PhError::Numerical("singular Schur complement".into()))?;
                let p: Vec<f64> = p.data.into();
                let qv = sparse::matvec(jqp_qp, &p);
                let mut out = p;
                out.extend(rq.iter().zip(&qv).map(|(q, v)| q + a * v));
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Cumulative `Σ dt ȳᵀ u_mid` with `ȳ = C Q x̄ + D u_mid`; equals
    /// `H(t_n) - H(0)` for the midpoint rule.
    pub supplied: Vec<f64>,
    /// Cumulative `∫ y_hᵀ u dt` with `y_h` the piecewise-linear output
    /// interpolant and the exact input (3-point Gauss per step).
    pub supplied_continuous: Vec<f64>,
    /// `y(t_k) = C Q x_k + D u(t_k)`.
    pub outputs: Vec<Vec<f64>>,
    pub states: Option<Vec<Vec<f64>>>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_state: Vec<f64>,
}

impl Trajectory {
    /// `|H(T) - H(0) - ∫ yᵀu dt|` against the continuous-time supply.
    pub fn energy_balance_defect(&self) -> f64 {
        let n = self.energy.len() - 1;
        (self.energy[n] - self.energy[0] - self.supplied_continuous[n]).abs()
    }

    /// Max over steps of `|H_n - H_0 - Σ ȳᵀu dt|`.
    pub fn discrete_balance_defect(&self) -> f64 {
        self.energy
            .iter()
            .zip(&self.supplied)
            .map(|(h, w)| (h - self.energy[0] - w).abs())
            .fold(0.0, f64::max)
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

pub fn simulate(model: &PHModel, cfg: &SimConfig, x0: Option<&[f64]>) -> Result<Trajectory> {
    cfg.validate(model)?;
    let n = model.dim();
    let m = model.inputs();
    let mut x = match x0 {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(PhError::InvalidArgument(format!("initial state has length {}, expected {n}", v.len()))),
        None => vec![0.0; n],
    };
    let dt = cfg.dt;
    let steps = cfg.steps();
    let stepper = MidpointStepper::new(model, dt)?;
    let snap_steps: BTreeMap<usize, Vec<f64>> = cfg
        .snapshot_times
        .iter()
        .map(|&t| ((t / dt).round() as usize, t))
        .fold(BTreeMap::new(), |mut acc, (k, t)| {
            acc.entry(k).or_insert_with(Vec::new).push(t);
            acc
        });
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        supplied: Vec::with_capacity(steps + 1),
        supplied_continuous: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        states: cfg.store_states.then(Vec::new),
        snapshots: vec![],
        final_state: vec![],
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let record = |traj: &mut Trajectory, k: usize, x: &[f64], y: Vec<f64>| {
        traj.energy.push(model.energy(x));
        traj.outputs.push(y);
        if let Some(s) = traj.states.as_mut() {
            s.push(x.to_vec());
        }
        if let Some(ts) = snap_steps.get(&k) {
            for &t in ts {
                traj.snapshots.push((t, x.to_vec()));
            }
        }
    };
    traj.times.push(0.0);
    traj.supplied.push(0.0);
    traj.supplied_continuous.push(0.0);
    let y0 = model.output(&x, &cfg.input_at(m, 0.0));
    record(&mut traj, 0, &x, y0);
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let u_mid = cfg.input_at(m, t0 + 0.5 * dt);
        let x1 = stepper.step(&x, &u_mid)?;
        let xm: Vec<f64> = x.iter().zip(&x1).map(|(a, b)| 0.5 * (a + b)).collect();
        let ym = model.output(&xm, &u_mid);
        let w = traj.supplied[k] + dt * dot(&ym, &u_mid);
        let y1 = model.output(&x1, &cfg.input_at(m, t1));
        let y0 = &traj.outputs[k];
        let mut wc = 0.0;
        for (xi, wi) in GAUSS3 {
            let s = 0.5 * (1.0 + xi);
            let u = cfg.input_at(m, t0 + s * dt);
            let y: Vec<f64> = y0.iter().zip(&y1).map(|(a, b)| (1.0 - s) * a + s * b).collect();
            wc += 0.5 * dt * wi * dot(&y, &u);
        }
        let wc = traj.supplied_continuous[k] + wc;
        traj.times.push(t1);
        traj.supplied.push(w);
        traj.supplied_continuous.push(wc);
        record(&mut traj, k + 1, &x1, y1);
        x = x1;
    }
    traj.final_state = x;
    Ok(traj)
}

/// Setup of the corner-driven 2D wave run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Wave2dConfig {
    pub n: usize,
    pub preset: String,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

impl Default for Wave2dConfig {
    fn default() -> Self {
        Self { n: 40, preset: "set4".into(), dt: 0.05, t_end: 18.0, snapshot_times: vec![0.0, 6.0, 12.0, 18.0] }
    }
}

pub const WAVE2D_DOMAIN: f64 = 20.0;
pub const WAVE2D_REFERENCE_RADIUS: f64 = 14.0;

pub struct Wave2dResult {
    pub built: Built2d,
    pub model: PHModel,
    pub trajectory: Trajectory,
    /// `(t, ẽ^p)` per snapshot, listed on all mesh nodes (input node included).
    pub node_fields: Vec<(f64, Vec<f64>)>,
    pub meta: BTreeMap<String, String>,
}

impl Wave2dResult {
    /// `(r, ẽ^p)` along the main diagonal of the field at time `t`.
    pub fn diagonal_profile(&self, t: f64) -> Option<Vec<(f64, f64)>> {
        let (_, field) = self.node_fields.iter().find(|(s, _)| (s - t).abs() < 1e-9)?;
        let (n, _) = self.built.mesh.grid?;
        Some(
            (0..=n)
                .map(|i| {
                    let id = i * (n + 1) + i;
                    let [x, y] = self.built.mesh.nodes[id];
                    ((x * x + y * y).sqrt(), field[id])
                })
                .collect(),
        )
    }

    /// Radius of the largest diagonal effort at time `t`.
    pub fn front_radius(&self, t: f64) -> Option<f64> {
        let prof = self.diagonal_profile(t)?;
        prof.into_iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(r, _)| r)
    }
}

/// Square domain `(0, 20)²`, corner input `ê^b = sin²(πt/8)` for `t < 8`
/// at `(0, 0)`, zero q-efforts on the rest of the boundary, zero start.
pub fn wave2d_experiment(cfg: &Wave2dConfig) -> Result<Wave2dResult> {
    let w = TriangleWeights::preset(&cfg.preset)?;
    let h = WAVE2D_DOMAIN / cfg.n as f64;
    let causality = CausalitySpec { p_segments: vec![SegmentSpec::Corner(Corner::BottomLeft)], q_segments: None };
    let built = build_2d_model(cfg.n, cfg.n, h, &causality, &w)?;
    let model = built.model.clone();
    let sim = SimConfig {
        dt: cfg.dt,
        t_end: cfg.t_end,
        inputs: vec![PortSignal {
            port: 0,
            signal: Signal::SinSquaredPulse { amplitude: 1.0, period: 8.0, duration: 8.0 },
        }],
        snapshot_times: cfg.snapshot_times.clone(),
        store_states: false,
    };
    let trajectory = simulate(&model, &sim, None)?;
    let nn = built.mesh.node_count();
    let node_fields = trajectory
        .snapshots
        .iter()
        .map(|(t, x)| {
            let e = model.efforts(x);
            let mut field = vec![0.0; nn];
            for (k, &node) in built.maps.effort_p.iter().enumerate() {
                field[node] = e[k];
            }
            for &node in &built.part.p_inputs {
                field[node] = sim.input_at(model.inputs(), *t)[0];
            }
            (*t, field)
        })
        .collect();
    let mut meta = BTreeMap::new();
    meta.insert("mesh".into(), format!("{0}x{0}", cfg.n));
    meta.insert("h".into(), format!("{h}"));
    meta.insert("dt".into(), format!("{}", cfg.dt));
    meta.insert("integrator".into(), "implicit midpoint".into());
    meta.insert("preset".into(), cfg.preset.clone());
    meta.insert("reference_radius".into(), format!("{WAVE2D_REFERENCE_RADIUS}"));
    Ok(Wave2dResult { built, model, trajectory, node_fields, meta })
}
