//! Implementations of the subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use phfem::analysis::{self, Method, Spectrum};
use phfem::mesh::MeshSummary;
use phfem::sim::{Wave2dConfig, Wave2dResult};
use phfem::statespace::ModelStructure;
use phfem::whitney::{verify_structure, StructureReport};
use phfem::{
    assemble, build_1d_maps, build_2d_model, image_rep, io, power_preservation_residual, sparse, BoundaryPartition,
    FormDegreeSpec, IncidencePair, MapSet, PHModel, SimplexMesh,
};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, BuildConfig, InitialState, MeshConfig, SimulateConfig};
use crate::error::{exit, CliError, CliResult};
use crate::manifest::{now_unix, sha256_hex, ArtifactWriter, MANIFEST_FILE};

/// Residual threshold above which `build` refuses to export.
pub const BUILD_TOL: f64 = 1e-10;

pub const MODEL_FILE: &str = "model.json";
pub const STRUCTURE_FILE: &str = "structure.json";
/// Matrix files of a model directory.
pub const MATRIX_FILES: [&str; 7] = ["J.mtx", "B.mtx", "C.mtx", "D.mtx", "Q.mtx", "d_p.mtx", "d_q.mtx"];

/// Residuals gathered by `build`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub galerkin: StructureReport,
    pub power_preservation: f64,
    pub image_skew: f64,
    pub model: ModelStructure,
    pub incidence_product: f64,
    pub max_residual: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(
        galerkin: StructureReport,
        power_preservation: f64,
        image_skew: f64,
        model: ModelStructure,
        incidence_product: f64,
    ) -> Self {
        let max_residual = [
            galerkin.factorization_p,
            galerkin.factorization_q,
            galerkin.l_transpose,
            galerkin.lemma,
            power_preservation,
            image_skew,
            model.j_skew,
            model.c_minus_bt,
            model.d_skew,
            incidence_product,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let ranks_ok = galerkin.ranks.as_ref().is_none_or(|r| r.matches());
        let pass = max_residual <= BUILD_TOL && ranks_ok && model.q_min > 0.0;
        Self { galerkin, power_preservation, image_skew, model, incidence_product, max_residual, pass }
    }
}

/// A model together with the objects needed for export.
pub struct BuildOutput {
    pub mesh: SimplexMesh,
    pub inc: IncidencePair,
    pub maps: MapSet,
    pub model: PHModel,
    pub report: CheckReport,
}

/// Runs the pipeline of a build config and all structural checks.
pub fn build_from_config(cfg: &BuildConfig) -> CliResult<BuildOutput> {
    cfg.validate()?;
    let (mesh, part, maps, model) = match cfg.mesh {
        MeshConfig::Rect { n, m, h } => {
            let w = cfg.weights_or_default().resolve()?;
            let b = build_2d_model(n, m, h, &cfg.causality_or_default(), &w)?;
            (b.mesh, b.part, b.maps, b.model)
        }
        MeshConfig::Interval { n } => {
            let (method, param) = cfg.chain_method()?;
            let mesh = SimplexMesh::interval(n, 1.0)?;
            let part = BoundaryPartition::interval_default(&mesh);
            let maps = match method {
                Method::Ours => build_1d_maps(n, param)?,
                Method::Golo => analysis::build_golo_1d_maps(n, param)?,
            };
            let model = analysis::build_model(method, n, param)?;
            (mesh, part, maps, model)
        }
    };
    let inc = mesh.incidence();
    let g = assemble(&mesh, &part, FormDegreeSpec::for_dim(mesh.dim)?)?;
    let galerkin = verify_structure(&g, &inc, &mesh);
    let pp = power_preservation_residual(&maps, &inc);
    let img = image_rep(&maps, &inc)?.skew_residual();
    let dd = if mesh.dim == 2 { sparse::max_abs(&sparse::mul(&inc.d_p, &inc.d_q)) } else { 0.0 };
    let report = CheckReport::new(galerkin, pp, img, model.structure(), dd);
    Ok(BuildOutput { mesh, inc, maps, model, report })
}

/// Contents of `model.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    pub n_states: usize,
    pub n_inputs: usize,
    pub n_p: usize,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    /// Location of each state: its node, or its edge midpoint for 2D
    /// q-states and the states of the averaging method.
    pub state_points: Vec<[f64; 2]>,
    pub mesh: MeshSummary,
    pub mesh_hash: String,
    pub parameters: serde_json::Value,
    pub meta: BTreeMap<String, String>,
}

fn state_points(mesh: &SimplexMesh, maps: &MapSet, edge_states: bool) -> Vec<[f64; 2]> {
    let mid = |e: usize| {
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    };
    let at = |i: usize, edge: bool| if edge { mid(i) } else { mesh.nodes[i] };
    let p = maps.effort_p.iter().map(|&i| at(i, edge_states));
    p.chain(maps.effort_q.iter().map(|&i| at(i, edge_states || mesh.dim == 2))).collect()
}

fn mesh_hash(mesh: &SimplexMesh, inc: &IncidencePair) -> String {
    let mut s = String::new();
    for [x, y] in &mesh.nodes {
        let _ = writeln!(s, "{x} {y}");
    }
    s.push_str(&io::matrix_market(&inc.d_p, true));
    s.push_str(&io::matrix_market(&inc.d_q, true));
    sha256_hex(s.as_bytes())
}

/// Writes the model directory; refuses when a residual exceeds [`BUILD_TOL`].
pub fn cmd_build(cfg: &BuildConfig, out: &Path) -> CliResult<String> {
    let started = now_unix();
    let b = build_from_config(cfg)?;
    let mut w = ArtifactWriter::new(out)?;
    w.write_json(STRUCTURE_FILE, &b.report)?;
    if !b.report.pass {
        let report = serde_json::to_string_pretty(&b.report).expect("serializable");
        return Err(CliError::new(exit::STRUCTURE, format!("structural check failed:\n{report}")));
    }
    let m = &b.model;
    let mats: [(&str, sparse::Csr, bool); 7] = [
        ("J.mtx", m.j.clone(), false),
        ("B.mtx", m.b.clone(), false),
        ("C.mtx", m.c.clone(), false),
        ("D.mtx", m.d.clone(), false),
        ("Q.mtx", sparse::diag(&m.q), false),
        ("d_p.mtx", b.inc.d_p.clone(), true),
        ("d_q.mtx", b.inc.d_q.clone(), true),
    ];
    for (name, a, int) in &mats {
        w.write(name, io::matrix_market(a, *int))?;
    }
    let config = serde_json::to_value(cfg).expect("serializable");
    let file = ModelFile {
        dim: b.mesh.dim,
        n_states: m.dim(),
        n_inputs: m.inputs(),
        n_p: m.n_p,
        state_labels: m.state_labels.clone(),
        input_labels: m.input_labels.clone(),
        output_labels: m.output_labels.clone(),
        state_points: state_points(&b.mesh, &b.maps, m.meta.get("method").map(String::as_str) == Some("golo")),
        mesh: b.mesh.summary(),
        mesh_hash: mesh_hash(&b.mesh, &b.inc),
        parameters: config.clone(),
        meta: m.meta.clone(),
    };
    w.write_json(MODEL_FILE, &file)?;
    w.finish("build", config, started)?;
    Ok(format!(
        "built {} states, {} inputs; max residual {:.3e}; wrote {}",
        m.dim(),
        m.inputs(),
        b.report.max_residual,
        out.display()
    ))
}

/// Accepts a model directory or the path of its manifest.
pub fn resolve_model_dir(path: &Path) -> CliResult<PathBuf> {
    let dir = if path.is_file() { path.parent().map(Path::to_path_buf).unwrap_or_default() } else { path.to_path_buf() };
    if !dir.is_dir() {
        return Err(CliError::missing(format!("model directory {} does not exist", dir.display())));
    }
    for f in MATRIX_FILES.iter().take(5).chain([&MODEL_FILE]) {
        if !dir.join(f).is_file() {
            return Err(CliError::missing(format!("model directory {} lacks {f}", dir.display())));
        }
    }
    Ok(dir)
}

/// Loads an exported model and re-checks its structure.
pub fn load_model(path: &Path) -> CliResult<(PHModel, ModelFile)> {
    let dir = resolve_model_dir(path)?;
    let file: ModelFile = read_json(&dir.join(MODEL_FILE))?;
    let read = |name: &str| -> CliResult<sparse::Csr> {
        io::read_matrix_market(&dir.join(name)).map_err(|e| CliError::missing(format!("{name}: {e}")))
    };
    let q_mat = read("Q.mtx")?;
    let mut q = vec![0.0; q_mat.nrows()];
    for (i, j, &v) in q_mat.triplet_iter() {
        if i != j {
            return Err(CliError::new(exit::STRUCTURE, "Q.mtx is not diagonal"));
        }
        q[i] = v;
    }
    let model = PHModel {
        j: read("J.mtx")?,
        b: read("B.mtx")?,
        c: read("C.mtx")?,
        d: read("D.mtx")?,
        q,
        n_p: file.n_p,
        state_labels: file.state_labels.clone(),
        input_labels: file.input_labels.clone(),
        output_labels: file.output_labels.clone(),
        meta: file.meta.clone(),
    };
    let n = model.dim();
    let consistent = n == file.n_states
        && model.j.ncols() == n
        && model.b.nrows() == n
        && model.c.ncols() == n
        && model.b.ncols() == file.n_inputs
        && model.c.nrows() == file.n_inputs
        && model.d.nrows() == file.n_inputs
        && model.d.ncols() == file.n_inputs;
    if !consistent {
        return Err(CliError::new(exit::STRUCTURE, "matrix dimensions disagree with model.json"));
    }
    let s = model.structure();
    if !s.pass(BUILD_TOL) {
        return Err(CliError::new(exit::STRUCTURE, format!("loaded model violates structure: {s:?}")));
    }
    Ok((model, file))
}

fn csv_line(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let cells: Vec<String> = values.into_iter().map(|v| format!("{v}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn initial_state(init: &InitialState, n: usize) -> CliResult<Option<Vec<f64>>> {
    match init {
        InitialState::Zero => Ok(None),
        InitialState::Random { seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            Ok(Some((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()))
        }
        InitialState::Values { values } if values.len() == n => Ok(Some(values.clone())),
        InitialState::Values { values } => {
            Err(CliError::config(format!("initial state has {} values, model has {n} states", values.len())))
        }
    }
}

#[derive(Serialize)]
struct SnapshotEntry {
    index: usize,
    t: f64,
    file: String,
}

/// Writes `energy.csv`, `outputs.csv` and one `(x, y, value)` CSV per snapshot.
pub fn cmd_simulate(model_path: &Path, cfg: &SimulateConfig, out: &Path) -> CliResult<String> {
    let started = now_unix();
    let (model, file) = load_model(model_path)?;
    let x0 = initial_state(&cfg.initial_state, model.dim())?;
    let traj = phfem::simulate(&model, &cfg.sim, x0.as_deref())?;
    let mut w = ArtifactWriter::new(out)?;

    let mut energy = String::from("t,H_d,supplied\n");
    for k in 0..traj.times.len() {
        csv_line(&mut energy, [traj.times[k], traj.energy[k], traj.supplied[k]]);
    }
    w.write("energy.csv", energy)?;

    let mut outputs = format!("t,{}\n", model.output_labels.join(","));
    for (t, y) in traj.times.iter().zip(&traj.outputs) {
        csv_line(&mut outputs, std::iter::once(*t).chain(y.iter().copied()));
    }
    w.write("outputs.csv", outputs)?;

    let mut index = Vec::new();
    for (i, (t, x)) in traj.snapshots.iter().enumerate() {
        let e = model.efforts(x);
        let mut s = String::from("x,y,value\n");
        for k in 0..model.n_p {
            let [px, py] = file.state_points[k];
            csv_line(&mut s, [px, py, e[k]]);
        }
        let name = format!("snapshot_{i:03}.csv");
        w.write(&name, s)?;
        index.push(SnapshotEntry { index: i, t: *t, file: name });
    }
    w.write_json("snapshots.json", &index)?;

    let h0 = traj.energy[0];
    let hn = *traj.energy.last().expect("non-empty trajectory");
    let config = serde_json::json!({ "model": model_path, "simulation": cfg });
    w.finish("simulate", config, started)?;
    Ok(format!("simulated {} steps; H_d {h0:.6e} -> {hn:.6e}; wrote {}", traj.times.len() - 1, out.display()))
}

/// Model for `eigs`: from a directory or from chain parameters.
pub fn eigs_model(model: Option<&Path>, method: Method, n: usize, param: f64) -> CliResult<PHModel> {
    match model {
        Some(p) => Ok(load_model(p)?.0),
        None => Ok(analysis::build_model(method, n, param)?),
    }
}

/// CSV of the positive spectrum: `k, imag, exact, rel_error`.
pub fn spectrum_csv(s: &Spectrum, with_exact: bool) -> String {
    let mut out = String::from(if with_exact { "k,imag,exact,rel_error\n" } else { "k,imag\n" });
    for (i, &v) in s.imag.iter().enumerate() {
        let k = i + 1;
        if with_exact {
            let ex = analysis::exact_eigenvalue(k);
            let _ = writeln!(out, "{k},{v},{ex},{}", (v - ex).abs() / ex);
        } else {
            let _ = writeln!(out, "{k},{v}");
        }
    }
    out
}

/// Emits `text` as `name` in `out`, or on stdout without a directory.
fn emit(out: Option<&Path>, name: &str, text: String, command: &str, config: serde_json::Value, started: f64) -> CliResult<String> {
    match out {
        Some(dir) => {
            let mut w = ArtifactWriter::new(dir)?;
            w.write(name, text)?;
            w.finish(command, config, started)?;
            Ok(format!("wrote {}", dir.join(name).display()))
        }
        None => Ok(text.trim_end().to_string()),
    }
}

pub fn cmd_eigs(model: Option<&Path>, method: Method, n: usize, param: f64, out: Option<&Path>) -> CliResult<String> {
    let started = now_unix();
    let m = eigs_model(model, method, n, param)?;
    let s = analysis::spectrum(&m)?;
    let chain = model.is_none() || m.meta.get("dim").map(String::as_str) == Some("1");
    let config = match model {
        Some(p) => serde_json::json!({ "model": p }),
        None => serde_json::json!({ "method": method, "n": n, "parameter": param }),
    };
    emit(out, "eigs.csv", spectrum_csv(&s, chain), "eigs", config, started)
}

pub fn cmd_table(name: &str, out: Option<&Path>) -> CliResult<String> {
    let started = now_unix();
    let t = match name {
        "table3" => analysis::table3()?,
        "table4" => analysis::table4()?,
        _ => return Err(CliError::config(format!("unknown table '{name}'"))),
    };
    let csv = t.to_csv()?;
    emit(out, &format!("{name}.csv"), csv, name, serde_json::json!({ "table": name }), started)
}

pub fn cmd_convergence(alphas: &[f64], ns: &[usize], out: Option<&Path>) -> CliResult<String> {
    let started = now_unix();
    let rows = analysis::convergence_study(alphas, ns, &[1])?;
    let mut csv = String::from("alpha,k,N,rel_error,slope\n");
    for r in &rows {
        for (n, e) in r.ns.iter().zip(&r.rel_errors) {
            let _ = writeln!(csv, "{},{},{n},{e},{}", r.alpha, r.k, r.slope);
        }
    }
    let config = serde_json::json!({ "alphas": alphas, "ns": ns });
    emit(out, "convergence.csv", csv, "convergence", config, started)
}

fn fmt_time(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

/// Writes nodal snapshots, diagonal profiles, the energy series and metadata.
pub fn write_wave2d(res: &Wave2dResult, cfg: &Wave2dConfig, out: &Path, started: f64) -> CliResult<()> {
    let mut w = ArtifactWriter::new(out)?;
    let mesh = &res.built.mesh;
    let mut index = Vec::new();
    for (i, (t, field)) in res.node_fields.iter().enumerate() {
        let mut s = String::from("x,y,value\n");
        for (p, v) in mesh.nodes.iter().zip(field) {
            csv_line(&mut s, [p[0], p[1], *v]);
        }
        let name = format!("snapshot_t{}.csv", fmt_time(*t));
        w.write(&name, s)?;
        index.push(SnapshotEntry { index: i, t: *t, file: name });
        if let Some(prof) = res.diagonal_profile(*t) {
            let mut d = String::from("r,value\n");
            for (r, v) in prof {
                csv_line(&mut d, [r, v]);
            }
            w.write(&format!("diagonal_t{}.csv", fmt_time(*t)), d)?;
        }
    }
    w.write_json("snapshots.json", &index)?;
    let tr = &res.trajectory;
    let mut energy = String::from("t,H_d,supplied\n");
    for k in 0..tr.times.len() {
        csv_line(&mut energy, [tr.times[k], tr.energy[k], tr.supplied[k]]);
    }
    w.write("energy.csv", energy)?;
    let mut meta = res.meta.clone();
    if let Some(r) = res.front_radius(cfg.t_end) {
        meta.insert("front_radius".into(), format!("{r}"));
    }
    w.write_json("meta.json", &meta)?;
    w.finish("wave2d", serde_json::to_value(cfg).expect("serializable"), started)?;
    Ok(())
}

pub fn cmd_wave2d(cfg: &Wave2dConfig, out: &Path) -> CliResult<String> {
    let started = now_unix();
    let res = phfem::wave2d_experiment(cfg)?;
    write_wave2d(&res, cfg, out, started)?;
    let front = res.front_radius(cfg.t_end).map_or("n/a".into(), |r| format!("{r:.3}"));
    Ok(format!("wave2d {}x{} done; front radius at t = {}: {front}; wrote {}", cfg.n, cfg.n, cfg.t_end, out.display()))
}

/// True when `dir` holds exactly one manifest.
pub fn has_manifest(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}
