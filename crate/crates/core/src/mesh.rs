//! Simplicial meshes, incidence matrices and boundary causality partitions.
//!
//! Rectangular grids use a fixed numbering:
//! nodes row-major from the bottom-left corner, then horizontal edges
//! (oriented right to left), vertical edges (oriented upward) and diagonal
//! edges (top-right to bottom-left). All lower triangles come first in
//! row-major order, followed by all upper triangles.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};
use crate::sparse::{self, Csr};

pub const NUMBERING_VERSION: &str = "rect-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Horizontal,
    Vertical,
    Diagonal,
    /// Edge of a 1D chain.
    Interval,
}

/// Weight class of a triangle (class I = lower, class II = upper).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleClass {
    Lower,
    Upper,
}

/// A triangle given by its signed boundary edges and the nodes
/// carrying the α, β and γ weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub edges: [(usize, i8); 3],
    pub class: TriangleClass,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
}

impl Face {
    pub fn vertices(&self) -> [usize; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn sign_of(&self, e: usize) -> i8 {
        self.edges.iter().find(|(x, _)| *x == e).map_or(0, |(_, s)| *s)
    }
}

#[derive(Clone, Debug)]
pub struct SimplexMesh {
    pub dim: usize,
    pub h: f64,
    /// `(N, M)` cell counts for rectangular grids, `(N, 0)` for chains.
    pub grid: Option<(usize, usize)>,
    pub nodes: Vec<[f64; 2]>,
    pub edges: Vec<[usize; 2]>,
    pub edge_kinds: Vec<EdgeKind>,
    pub faces: Vec<Face>,
    edge_faces: Vec<Vec<usize>>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

/// The two incidence matrices. In 2D `d_p` is face-edge and `d_q` is
/// edge-node; in 1D both equal the edge-node matrix of the chain.
#[derive(Clone, Debug)]
pub struct IncidencePair {
    pub d_p: Csr,
    pub d_q: Csr,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeshSummary {
    pub dim: usize,
    pub nodes: usize,
    pub edges: usize,
    pub faces: usize,
    pub h: f64,
    pub grid: Option<(usize, usize)>,
    pub numbering: String,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl SimplexMesh {
    /// Canonical `N x M` triangulated grid with square cells of size `h`.
    pub fn rect(n: usize, m: usize, h: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(PhError::InvalidArgument("grid needs N, M >= 1".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(PhError::InvalidArgument(format!("cell size h = {h} must be positive")));
        }
        let nid = |i: usize, j: usize| j * (n + 1) + i;
        let mut nodes = Vec::with_capacity((n + 1) * (m + 1));
        for j in 0..=m {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut edges = Vec::new();
        let mut kinds = Vec::new();
        for j in 0..=m {
            for i in 0..n {
                edges.push([nid(i + 1, j), nid(i, j)]);
                kinds.push(EdgeKind::Horizontal);
            }
        }
        for j in 0..m {
            for i in 0..=n {
                edges.push([nid(i, j), nid(i, j + 1)]);
                kinds.push(EdgeKind::Vertical);
            }
        }
        for j in 0..m {
            for i in 0..n {
                edges.push([nid(i + 1, j + 1), nid(i, j)]);
                kinds.push(EdgeKind::Diagonal);
            }
        }
        let k0 = (m + 1) * n;
        let l0 = k0 + m * (n + 1);
        let hid = |i: usize, j: usize| j * n + i;
        let vid = |i: usize, j: usize| k0 + j * (n + 1) + i;
        let did = |i: usize, j: usize| l0 + j * n + i;
        let mut faces = Vec::with_capacity(2 * n * m);
        for j in 0..m {
            for i in 0..n {
                faces.push(Face {
                    edges: [(hid(i, j), -1), (vid(i + 1, j), 1), (did(i, j), 1)],
                    class: TriangleClass::Lower,
                    alpha: nid(i, j),
                    beta: nid(i + 1, j + 1),
                    gamma: nid(i + 1, j),
                });
            }
        }
        for j in 0..m {
            for i in 0..n {
                faces.push(Face {
                    edges: [(hid(i, j + 1), 1), (vid(i, j), -1), (did(i, j), -1)],
                    class: TriangleClass::Upper,
                    alpha: nid(i + 1, j + 1),
                    beta: nid(i, j),
                    gamma: nid(i, j + 1),
                });
            }
        }
        let mut mesh = Self::from_parts(nodes, edges, kinds, faces, h)?;
        mesh.grid = Some((n, m));
        Ok(mesh)
    }

    /// Uniform chain of `n` edges on `[0, length]`.
    pub fn interval(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(PhError::InvalidArgument("chain needs N >= 2".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(PhError::InvalidArgument("length must be positive".into()));
        }
        let h = length / n as f64;
        let nodes = (0..=n).map(|i| [i as f64 * h, 0.0]).collect();
        let edges: Vec<_> = (0..n).map(|i| [i, i + 1]).collect();
        let mut mesh = Self::assemble(1, nodes, edges, vec![EdgeKind::Interval; n], vec![], h);
        mesh.grid = Some((n, 0));
        Ok(mesh)
    }

    /// Generic 2D constructor with validation. Faces must be closed,
    /// non-degenerate triangles whose weight roles are their own vertices.
    pub fn from_parts(
        nodes: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        edge_kinds: Vec<EdgeKind>,
        faces: Vec<Face>,
        h: f64,
    ) -> Result<Self> {
        if edge_kinds.len() != edges.len() {
            return Err(PhError::InvalidArgument("edge_kinds length differs from edges".into()));
        }
        let nn = nodes.len();
        let mut seen = BTreeSet::new();
        for (e, &[a, b]) in edges.iter().enumerate() {
            if a >= nn || b >= nn || a == b {
                return Err(PhError::InvalidArgument(format!("edge {e} has bad endpoints")));
            }
            if !seen.insert(key(a, b)) {
                return Err(PhError::InvalidArgument(format!("edge {e} duplicated")));
            }
        }
        for (f, face) in faces.iter().enumerate() {
            let mut count: HashMap<usize, i32> = HashMap::new();
            let mut verts = BTreeSet::new();
            for &(e, s) in &face.edges {
                if e >= edges.len() || s.abs() != 1 {
                    return Err(PhError::InvalidArgument(format!("face {f} has bad edge entry")));
                }
                let [t, hd] = edges[e];
                *count.entry(t).or_default() -= s as i32;
                *count.entry(hd).or_default() += s as i32;
                verts.insert(t);
                verts.insert(hd);
            }
            if verts.len() != 3 || count.values().any(|&c| c != 0) {
                return Err(PhError::InvalidArgument(format!("face {f} is not a closed triangle")));
            }
            let roles: BTreeSet<_> = face.vertices().into_iter().collect();
            if roles != verts {
                return Err(PhError::InvalidArgument(format!("face {f} roles are not its vertices")));
            }
            let [a, b, c] = face.vertices();
            let area = cross(sub(nodes[b], nodes[a]), sub(nodes[c], nodes[a]));
            if area.abs() < 1e-14 {
                return Err(PhError::InvalidArgument(format!("face {f} is degenerate")));
            }
        }
        Ok(Self::assemble(2, nodes, edges, edge_kinds, faces, h))
    }

    fn assemble(
        dim: usize,
        nodes: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        edge_kinds: Vec<EdgeKind>,
        faces: Vec<Face>,
        h: f64,
    ) -> Self {
        let mut edge_faces = vec![Vec::new(); edges.len()];
        for (f, face) in faces.iter().enumerate() {
            for &(e, _) in &face.edges {
                edge_faces[e].push(f);
            }
        }
        let edge_lookup = edges.iter().enumerate().map(|(e, &[a, b])| (key(a, b), e)).collect();
        Self { dim, h, grid: None, nodes, edges, edge_kinds, faces, edge_faces, edge_lookup }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&key(a, b)).copied()
    }

    pub fn faces_of_edge(&self, e: usize) -> &[usize] {
        &self.edge_faces[e]
    }

    /// The α-β edge of a face.
    pub fn hypotenuse(&self, f: usize) -> Option<usize> {
        let face = &self.faces[f];
        self.edge_between(face.alpha, face.beta)
    }

    /// +1 if the face's edge cycle runs counter-clockwise.
    pub fn face_orientation(&self, f: usize) -> f64 {
        let face = &self.faces[f];
        let (e, s) = face.edges[0];
        let [t, hd] = self.edges[e];
        let (from, to) = if s > 0 { (t, hd) } else { (hd, t) };
        let x = face.vertices().into_iter().find(|v| *v != t && *v != hd).unwrap();
        let c = cross(sub(self.nodes[to], self.nodes[from]), sub(self.nodes[x], self.nodes[from]));
        c.signum()
    }

    /// Unsigned triangle area.
    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].vertices();
        0.5 * cross(sub(self.nodes[b], self.nodes[a]), sub(self.nodes[c], self.nodes[a])).abs()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let d = sub(self.nodes[b], self.nodes[a]);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }

    /// Boundary edges (2D only): edges with exactly one adjacent face.
    pub fn boundary_edges(&self) -> Vec<usize> {
        if self.dim != 2 {
            return vec![];
        }
        (0..self.edge_count()).filter(|&e| self.edge_faces[e].len() == 1).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        if self.dim == 1 {
            return vec![0, self.node_count() - 1];
        }
        let set: BTreeSet<_> =
            self.boundary_edges().into_iter().flat_map(|e| self.edges[e]).collect();
        set.into_iter().collect()
    }

    /// Orientation of a boundary edge relative to the counter-clockwise
    /// boundary traversal (+1 agrees, -1 opposes).
    pub fn boundary_sign(&self, e: usize) -> f64 {
        let f = self.edge_faces[e][0];
        self.faces[f].sign_of(e) as f64 * self.face_orientation(f)
    }

    pub fn incidence(&self) -> IncidencePair {
        let mut tq = Vec::with_capacity(2 * self.edge_count());
        for (e, &[t, hd]) in self.edges.iter().enumerate() {
            tq.push((e, t, -1.0));
            tq.push((e, hd, 1.0));
        }
        let d_q = sparse::from_triplets(self.edge_count(), self.node_count(), &tq);
        if self.dim == 1 {
            return IncidencePair { d_p: d_q.clone(), d_q };
        }
        let mut tp = Vec::with_capacity(3 * self.face_count());
        for (f, face) in self.faces.iter().enumerate() {
            for &(e, s) in &face.edges {
                tp.push((f, e, s as f64));
            }
        }
        let d_p = sparse::from_triplets(self.face_count(), self.edge_count(), &tp);
        IncidencePair { d_p, d_q }
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            dim: self.dim,
            nodes: self.node_count(),
            edges: self.edge_count(),
            faces: self.face_count(),
            h: self.h,
            grid: self.grid,
            numbering: NUMBERING_VERSION.to_string(),
        }
    }

    /// Nodes on one side of a rectangular grid, in increasing index order.
    pub fn side_nodes(&self, side: Side) -> Result<Vec<usize>> {
        let (n, m) = self.rect_shape()?;
        let nid = |i: usize, j: usize| j * (n + 1) + i;
        Ok(match side {
            Side::Bottom => (0..=n).map(|i| nid(i, 0)).collect(),
            Side::Top => (0..=n).map(|i| nid(i, m)).collect(),
            Side::Left => (0..=m).map(|j| nid(0, j)).collect(),
            Side::Right => (0..=m).map(|j| nid(n, j)).collect(),
        })
    }

    pub fn side_edges(&self, side: Side) -> Result<Vec<usize>> {
        let nodes: BTreeSet<_> = self.side_nodes(side)?.into_iter().collect();
        Ok(self
            .boundary_edges()
            .into_iter()
            .filter(|&e| nodes.contains(&self.edges[e][0]) && nodes.contains(&self.edges[e][1]))
            .collect())
    }

    pub fn corner_node(&self, c: Corner) -> Result<usize> {
        let (n, m) = self.rect_shape()?;
        let nid = |i: usize, j: usize| j * (n + 1) + i;
        Ok(match c {
            Corner::BottomLeft => nid(0, 0),
            Corner::BottomRight => nid(n, 0),
            Corner::TopLeft => nid(0, m),
            Corner::TopRight => nid(n, m),
        })
    }

    fn rect_shape(&self) -> Result<(usize, usize)> {
        match (self.dim, self.grid) {
            (2, Some(g)) => Ok(g),
            _ => Err(PhError::InvalidArgument("sides and corners need a rectangular grid".into())),
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

/// One boundary segment in a causality spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSpec {
    Nodes(Vec<usize>),
    Edges(Vec<usize>),
    Side(Side),
    Corner(Corner),
}

/// Which boundary parts take which input.
///
/// `p_segments` select nodes with prescribed p-efforts. `q_segments`
/// select edges with prescribed q-efforts; `None` means "every boundary
/// edge not spanned by a p-segment", as one segment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CausalitySpec {
    #[serde(default)]
    pub p_segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub q_segments: Option<Vec<SegmentSpec>>,
}

/// Validated boundary partition.
///
/// In 2D `q_segments` hold boundary edges; in 1D they hold the boundary
/// node carrying the q-input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub dim: usize,
    pub q_segments: Vec<Vec<usize>>,
    pub p_segments: Vec<Vec<usize>>,
    /// Sorted union of the q-segments (rows of T_q).
    pub q_inputs: Vec<usize>,
    /// Sorted union of the p-segments (rows of T̂_p).
    pub p_inputs: Vec<usize>,
    /// Boundary edges spanned by p-segment nodes, per segment.
    pub p_segment_edges: Vec<Vec<usize>>,
}

impl BoundaryPartition {
    /// The only causality supported on chains: q-input at z = 0,
    /// p-input at z = L.
    pub fn interval_default(mesh: &SimplexMesh) -> Self {
        let last = mesh.node_count() - 1;
        Self {
            dim: 1,
            q_segments: vec![vec![0]],
            p_segments: vec![vec![last]],
            q_inputs: vec![0],
            p_inputs: vec![last],
            p_segment_edges: vec![vec![]],
        }
    }
}

fn resolve_nodes(mesh: &SimplexMesh, s: &SegmentSpec) -> Result<Vec<usize>> {
    match s {
        SegmentSpec::Nodes(v) => Ok(v.clone()),
        SegmentSpec::Side(side) => mesh.side_nodes(*side),
        SegmentSpec::Corner(c) => Ok(vec![mesh.corner_node(*c)?]),
        SegmentSpec::Edges(_) => Err(PhError::InvalidPartition("p-segments select nodes".into())),
    }
}

fn resolve_edges(mesh: &SimplexMesh, s: &SegmentSpec) -> Result<Vec<usize>> {
    match s {
        SegmentSpec::Edges(v) => Ok(v.clone()),
        SegmentSpec::Side(side) => mesh.side_edges(*side),
        _ => Err(PhError::InvalidPartition("q-segments select edges or sides".into())),
    }
}

/// Validates a causality spec against a mesh.
pub fn partition_boundary(mesh: &SimplexMesh, spec: &CausalitySpec) -> Result<BoundaryPartition> {
    if mesh.dim == 1 {
        let def = BoundaryPartition::interval_default(mesh);
        let last = mesh.node_count() - 1;
        let p_ok = spec.p_segments.is_empty()
            || spec.p_segments == vec![SegmentSpec::Nodes(vec![last])];
        let q_ok = match &spec.q_segments {
            None => true,
            Some(q) => q.is_empty() || *q == vec![SegmentSpec::Nodes(vec![0])],
        };
        if !(p_ok && q_ok) {
            return Err(PhError::InvalidPartition(
                "chains support only the q-input at node 0 and the p-input at the last node".into(),
            ));
        }
        return Ok(def);
    }
    let bnodes: BTreeSet<_> = mesh.boundary_nodes().into_iter().collect();
    let bedges = mesh.boundary_edges();
    let bedge_set: BTreeSet<_> = bedges.iter().copied().collect();

    let mut p_segments = Vec::new();
    let mut p_used = BTreeSet::new();
    for s in &spec.p_segments {
        let mut nodes = resolve_nodes(mesh, s)?;
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(PhError::InvalidPartition("empty p-segment".into()));
        }
        for &n in &nodes {
            if n >= mesh.node_count() || !bnodes.contains(&n) {
                return Err(PhError::InvalidPartition(format!("node {n} is not a boundary node")));
            }
            if !p_used.insert(n) {
                return Err(PhError::InvalidPartition(format!("node {n} in two p-segments")));
            }
        }
        p_segments.push(nodes);
    }
    let p_segment_edges: Vec<Vec<usize>> = p_segments
        .iter()
        .map(|seg| {
            let set: BTreeSet<_> = seg.iter().copied().collect();
            bedges
                .iter()
                .copied()
                .filter(|&e| set.contains(&mesh.edges[e][0]) && set.contains(&mesh.edges[e][1]))
                .collect()
        })
        .collect();
    let spanned: BTreeSet<usize> = p_segment_edges.iter().flatten().copied().collect();
    // An edge whose endpoints lie in two different p-segments belongs to neither.
    let cross_seg: Vec<usize> = bedges
        .iter()
        .copied()
        .filter(|e| {
            !spanned.contains(e)
                && p_used.contains(&mesh.edges[*e][0])
                && p_used.contains(&mesh.edges[*e][1])
        })
        .collect();
    if let Some(e) = cross_seg.first() {
        return Err(PhError::InvalidPartition(format!(
            "boundary edge {e} joins two different p-segments"
        )));
    }

    let mut q_segments = Vec::new();
    match &spec.q_segments {
        None => {
            let rest: Vec<_> = bedges.iter().copied().filter(|e| !spanned.contains(e)).collect();
            if !rest.is_empty() {
                q_segments.push(rest);
            }
        }
        Some(list) => {
            for s in list {
                let mut edges = resolve_edges(mesh, s)?;
                edges.sort_unstable();
                edges.dedup();
                if edges.is_empty() {
                    return Err(PhError::InvalidPartition("empty q-segment".into()));
                }
                q_segments.push(edges);
            }
        }
    }
    let mut q_used = BTreeSet::new();
    for seg in &q_segments {
        for &e in seg {
            if !bedge_set.contains(&e) {
                return Err(PhError::InvalidPartition(format!("edge {e} is not a boundary edge")));
            }
            if spanned.contains(&e) {
                return Err(PhError::InvalidPartition(format!(
                    "edge {e} is both a q-input and spanned by a p-segment"
                )));
            }
            if !q_used.insert(e) {
                return Err(PhError::InvalidPartition(format!("edge {e} in two q-segments")));
            }
        }
    }
    if let Some(e) = bedges.iter().find(|e| !q_used.contains(e) && !spanned.contains(e)) {
        return Err(PhError::InvalidPartition(format!("boundary edge {e} is not covered")));
    }
    Ok(BoundaryPartition {
        dim: 2,
        q_inputs: q_used.into_iter().collect(),
        p_inputs: p_used.into_iter().collect(),
        q_segments,
        p_segments,
        p_segment_edges,
    })
}
