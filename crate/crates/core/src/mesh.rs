//! Uniform rectangular meshes, face topology and the numbering of hybrid
//! (skeleton) unknowns.
//!
//! Conventions used throughout the crate:
//! - elements are numbered `ix + n_x * iy`;
//! - vertical faces (normal `+e_x`) come first, numbered `ix + (n_x + 1) * iy`,
//!   followed by horizontal faces (normal `+e_y`) numbered
//!   `n_vertical + ix + n_x * iy`;
//! - face nodes are ordered by ascending coordinate along the face, and the
//!   hybrid index of `(face, node, angular element)` is
//!   `(face * (p + 1) + node) * N_a + a` (angular index fastest).

use serde::{Deserialize, Serialize};

use crate::angular::{AngularGrid, Flow};
use crate::error::{Error, Result};

/// Local faces of an element, in the order used by trace layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalFace {
    Left,
    Right,
    Bottom,
    Top,
}

impl LocalFace {
    pub const ALL: [LocalFace; 4] = [LocalFace::Left, LocalFace::Right, LocalFace::Bottom, LocalFace::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            LocalFace::Left => [-1.0, 0.0],
            LocalFace::Right => [1.0, 0.0],
            LocalFace::Bottom => [0.0, -1.0],
            LocalFace::Top => [0.0, 1.0],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Volume node index (`i + (p+1) j`) sitting at face node `m`.
    pub fn volume_node(self, p: usize, m: usize) -> usize {
        let n = p + 1;
        match self {
            LocalFace::Left => n * m,
            LocalFace::Right => p + n * m,
            LocalFace::Bottom => m,
            LocalFace::Top => m + n * p,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, LocalFace::Left | LocalFace::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// `X` for faces with normal `+e_x`.
    pub axis: Axis,
    /// Element on the negative side of the face normal.
    pub minus: Option<usize>,
    /// Element on the positive side.
    pub plus: Option<usize>,
    /// Unit normal pointing from `minus` to `plus`.
    pub normal: [f64; 2],
    /// Coordinate of the face line and the extent along it.
    pub position: f64,
    pub start: f64,
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none() || self.plus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 4]>,
}

pub fn build_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::InvalidMesh(format!("extents must be positive, got {lx} x {ly}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!(
            "element counts must be positive, got {nx} x {ny}"
        )));
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let elem = |ix: usize, iy: usize| ix + nx * iy;
    let mut faces = Vec::with_capacity((nx + 1) * ny + nx * (ny + 1));
    for iy in 0..ny {
        for ix in 0..=nx {
            faces.push(Face {
                axis: Axis::X,
                minus: (ix > 0).then(|| elem(ix - 1, iy)),
                plus: (ix < nx).then(|| elem(ix, iy)),
                normal: [1.0, 0.0],
                position: hx * ix as f64,
                start: hy * iy as f64,
                length: hy,
            });
        }
    }
    let n_vertical = faces.len();
    for iy in 0..=ny {
        for ix in 0..nx {
            faces.push(Face {
                axis: Axis::Y,
                minus: (iy > 0).then(|| elem(ix, iy - 1)),
                plus: (iy < ny).then(|| elem(ix, iy)),
                normal: [0.0, 1.0],
                position: hy * iy as f64,
                start: hx * ix as f64,
                length: hx,
            });
        }
    }
    let mut element_faces = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let left = ix + (nx + 1) * iy;
            let bottom = n_vertical + ix + nx * iy;
            element_faces.push([left, left + 1, bottom, bottom + nx]);
        }
    }
    Ok(Mesh {
        lx,
        ly,
        nx,
        ny,
        faces,
        element_faces,
    })
}

impl Mesh {
    pub fn extents(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn element_size(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    pub fn is_square(&self) -> bool {
        let (hx, hy) = self.element_size();
        (hx - hy).abs() <= 1e-12 * hx.max(hy)
    }

    /// Lower-left corner of element `e`.
    pub fn origin(&self, e: usize) -> (f64, f64) {
        let (hx, hy) = self.element_size();
        ((e % self.nx) as f64 * hx, (e / self.nx) as f64 * hy)
    }

    pub fn element_coords(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Global faces of element `e` in [`LocalFace::ALL`] order.
    pub fn element_faces(&self, e: usize) -> [usize; 4] {
        self.element_faces[e]
    }

    /// Element on the other side of local face `f` of `e`, if any.
    pub fn neighbor(&self, e: usize, f: LocalFace) -> Option<usize> {
        let face = &self.faces[self.element_faces[e][f.index()]];
        match f {
            LocalFace::Left | LocalFace::Bottom => face.minus,
            LocalFace::Right | LocalFace::Top => face.plus,
        }
    }

    /// Element containing `(x, y)`; points on shared edges go to the upper/right element.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let tol = 1e-12 * self.lx.max(self.ly);
        if x < -tol || y < -tol || x > self.lx + tol || y > self.ly + tol {
            return None;
        }
        let (hx, hy) = self.element_size();
        let ix = ((x / hx).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = ((y / hy).floor().max(0.0) as usize).min(self.ny - 1);
        Some(ix + self.nx * iy)
    }

    /// Physical coordinates of the `(p+1)^2` nodes of element `e`
    /// (`i + (p+1) j` ordering) given reference nodes on `[-1, 1]`.
    pub fn element_nodes(&self, e: usize, ref_nodes: &[f64]) -> Vec<(f64, f64)> {
        let (hx, hy) = self.element_size();
        let (x0, y0) = self.origin(e);
        let n = ref_nodes.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push((
                    x0 + 0.5 * hx * (ref_nodes[i] + 1.0),
                    y0 + 0.5 * hy * (ref_nodes[j] + 1.0),
                ));
            }
        }
        out
    }
}

/// Benchmark problem families with their own refinement schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    #[serde(rename = "idealized-1", alias = "idealized1")]
    Idealized1,
    #[serde(rename = "idealized-2", alias = "idealized2")]
    Idealized2,
    I3rc,
    Custom,
}

impl std::str::FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idealized-1" | "idealized1" => Ok(CaseTag::Idealized1),
            "idealized-2" | "idealized2" => Ok(CaseTag::Idealized2),
            "i3rc" => Ok(CaseTag::I3rc),
            "custom" => Ok(CaseTag::Custom),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseTag::Idealized1 => "idealized-1",
            CaseTag::Idealized2 => "idealized-2",
            CaseTag::I3rc => "i3rc",
            CaseTag::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Element counts `(n_x, n_y)` at refinement level `l`.
pub fn refinement_schedule(case: CaseTag, l: usize) -> Result<(usize, usize)> {
    match case {
        CaseTag::Idealized1 | CaseTag::Idealized2 => Ok((3 * (l + 2), 2 * (l + 2))),
        CaseTag::I3rc => Ok((13 * (l + 2), l + 2)),
        CaseTag::Custom => Err(Error::UnknownCase("custom cases have no refinement schedule".into())),
    }
}

/// One trace slot of an element: the hybrid unknown on local face `face`,
/// face node `node`, angular element `angle`, and the volume unknown
/// (`node_index * N_a + angle`) sitting at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSlot {
    pub face: LocalFace,
    pub node: usize,
    pub angle: usize,
    pub volume_dof: usize,
}

/// Ordering of an element's inflow and outflow trace slots: face-major in
/// [`LocalFace::ALL`] order, then face node ascending, then angular element
/// ascending. Identical for every element of a given `(p, N_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLayout {
    pub degree: usize,
    pub n_angles: usize,
    pub inflow: Vec<TraceSlot>,
    pub outflow: Vec<TraceSlot>,
}

impl TraceLayout {
    pub fn new(p: usize, grid: &AngularGrid) -> Self {
        let n_a = grid.len();
        let mut inflow = Vec::with_capacity(2 * (p + 1) * n_a);
        let mut outflow = Vec::with_capacity(2 * (p + 1) * n_a);
        for face in LocalFace::ALL {
            let normal = face.outward_normal();
            for node in 0..=p {
                let vnode = face.volume_node(p, node);
                for angle in 0..n_a {
                    let slot = TraceSlot {
                        face,
                        node,
                        angle,
                        volume_dof: vnode * n_a + angle,
                    };
                    match grid.classify(angle, normal) {
                        Flow::Inflow => inflow.push(slot),
                        Flow::Outflow => outflow.push(slot),
                    }
                }
            }
        }
        Self {
            degree: p,
            n_angles: n_a,
            inflow,
            outflow,
        }
    }

    pub fn n_in(&self) -> usize {
        self.inflow.len()
    }

    pub fn n_out(&self) -> usize {
        self.outflow.len()
    }

    pub fn n_volume(&self) -> usize {
        (self.degree + 1) * (self.degree + 1) * self.n_angles
    }
}

/// Global numbering of hybrid unknowns and per-element gather lists.
#[derive(Debug, Clone)]
pub struct SkeletonIndex {
    degree: usize,
    n_angles: usize,
    n_faces: usize,
    layout: TraceLayout,
    inflow: Vec<Vec<usize>>,
    outflow: Vec<Vec<usize>>,
}

pub fn skeleton_numbering(mesh: &Mesh, grid: &AngularGrid, p: usize) -> SkeletonIndex {
    let layout = TraceLayout::new(p, grid);
    let n_a = grid.len();
    let dof = |face: usize, node: usize, angle: usize| (face * (p + 1) + node) * n_a + angle;
    let gather = |e: usize, slots: &[TraceSlot]| -> Vec<usize> {
        let faces = mesh.element_faces(e);
        slots
            .iter()
            .map(|s| dof(faces[s.face.index()], s.node, s.angle))
            .collect()
    };
    let inflow = (0..mesh.n_elements()).map(|e| gather(e, &layout.inflow)).collect();
    let outflow = (0..mesh.n_elements()).map(|e| gather(e, &layout.outflow)).collect();
    SkeletonIndex {
        degree: p,
        n_angles: n_a,
        n_faces: mesh.n_faces(),
        layout,
        inflow,
        outflow,
    }
}

impl SkeletonIndex {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_dofs(&self) -> usize {
        self.n_faces * (self.degree + 1) * self.n_angles
    }

    pub fn dof(&self, face: usize, node: usize, angle: usize) -> usize {
        (face * (self.degree + 1) + node) * self.n_angles + angle
    }

    /// Inverse of [`SkeletonIndex::dof`].
    pub fn decompose(&self, dof: usize) -> (usize, usize, usize) {
        let angle = dof % self.n_angles;
        let rest = dof / self.n_angles;
        (rest / (self.degree + 1), rest % (self.degree + 1), angle)
    }

    pub fn layout(&self) -> &TraceLayout {
        &self.layout
    }

    /// Global hybrid indices of element `e`'s inflow slots (layout order).
    pub fn inflow(&self, e: usize) -> &[usize] {
        &self.inflow[e]
    }

    pub fn outflow(&self, e: usize) -> &[usize] {
        &self.outflow[e]
    }

    pub fn n_elements(&self) -> usize {
        self.inflow.len()
    }

    pub fn gather(&self, values: &[f64], list: &[usize]) -> Vec<f64> {
        list.iter().map(|&d| values[d]).collect()
    }

    pub fn scatter(&self, values: &mut [f64], list: &[usize], local: &[f64]) {
        for (&d, &v) in list.iter().zip(local) {
            values[d] = v;
        }
    }
}
