//! Closed, oriented triangle surfaces in 3-space.
//!
//! A [`Mesh`] is validated on construction and immutable afterwards: every
//! edge is shared by exactly two faces with opposite traversal, the surface
//! is connected, and faces wind counterclockwise when seen from outside.

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Faces with area below this fraction of the squared bounding-box diagonal are rejected.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    name: Option<String>,
    neighbors: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            for &i in face {
                if i >= nv {
                    return Err(Error::IndexOutOfRange {
                        face: f,
                        index: i,
                        vertex_count: nv,
                    });
                }
            }
        }

        let diag = bounding_diagonal(&vertices);
        let min_area = DEGENERATE_AREA_RATIO * diag * diag;
        for (f, face) in faces.iter().enumerate() {
            let area = if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                0.0
            } else {
                triangle_area(&vertices[face[0]], &vertices[face[1]], &vertices[face[2]])
            };
            if !(area >= min_area) || area == 0.0 {
                return Err(Error::DegenerateFace { face: f, area });
            }
        }

        // undirected edge -> directed occurrences (tail, head)
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for face in &faces {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((a, b));
            }
        }
        for (&(a, b), uses) in &edges {
            match uses.len() {
                1 => return Err(Error::BoundaryEdge { a, b }),
                2 => {
                    if uses[0] == uses[1] {
                        return Err(Error::InconsistentOrientation { a, b });
                    }
                }
                count => return Err(Error::NonManifoldEdge { a, b, count }),
            }
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        for (f, face) in faces.iter().enumerate() {
            for &i in face {
                vertex_faces[i].push(f);
            }
        }
        if let Some(v) = vertex_faces.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex { vertex: v });
        }

        let mut neighbors = vec![Vec::new(); nv];
        for &(a, b) in edges.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }

        let (components, unreached) = count_components(&neighbors);
        if components > 1 {
            return Err(Error::Disconnected {
                components,
                vertex: unreached.unwrap_or(0),
            });
        }

        let mesh = Mesh {
            vertices,
            faces,
            name: None,
            neighbors,
            vertex_faces,
        };
        let volume = mesh.signed_volume();
        if volume <= 0.0 {
            return Err(Error::InwardOrientation { volume });
        }
        Ok(mesh)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        // closed surface: every edge borders two faces
        3 * self.faces.len() / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Sorted 1-ring of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn incident_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Sorted vertices at combinatorial distance 1 or 2 from `v`.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut ring: Vec<usize> = self.neighbors[v]
            .iter()
            .flat_map(|&w| std::iter::once(w).chain(self.neighbors[w].iter().copied()))
            .filter(|&w| w != v)
            .collect();
        ring.sort_unstable();
        ring.dedup();
        ring
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Area-weighted (unnormalized) face normal: half the edge cross product.
    pub fn face_area_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_area_normal(f).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Barycentric vertex areas: one third of every incident face.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let third = self.face_area(f) / 3.0;
            for &i in face {
                areas[i] += third;
            }
        }
        areas
    }

    /// Enclosed volume via the divergence theorem; positive for outward orientation.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0
            })
            .sum()
    }

    /// Same connectivity, new coordinates. Re-validated.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Mesh> {
        let mut m = Mesh::new(vertices, self.faces.clone())?;
        m.name = self.name.clone();
        Ok(m)
    }

    /// Applies `f` to every vertex. Used for rigid motions and scalings in tests and sweeps.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Mesh> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Mesh> {
        self.map_vertices(|v| v * factor)
    }

    pub fn translated(&self, offset: Vec3) -> Result<Mesh> {
        self.map_vertices(|v| v + offset)
    }

    /// Area-weighted vertex centroid.
    pub fn centroid(&self) -> Vec3 {
        let areas = self.vertex_areas();
        let total: f64 = areas.iter().sum();
        let weighted = self
            .vertices
            .iter()
            .zip(&areas)
            .fold(Vec3::zeros(), |acc, (v, &w)| acc + v * w);
        weighted / total
    }
}

/// Per-vertex outward normal, orthonormal tangent basis and lumped area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexFrame {
    pub normal: Vec3,
    pub tangent: [Vec3; 2],
    pub area: f64,
}

impl VertexFrame {
    pub(crate) fn from_normal(normal: Vec3, area: f64) -> Self {
        // axis least aligned with the normal
        let axis = if normal.x.abs() <= normal.y.abs() && normal.x.abs() <= normal.z.abs() {
            Vec3::x()
        } else if normal.y.abs() <= normal.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let t1 = (axis - normal * normal.dot(&axis)).normalize();
        let t2 = normal.cross(&t1);
        VertexFrame {
            normal,
            tangent: [t1, t2],
            area,
        }
    }

    /// Coordinates of `d` in (tangent[0], tangent[1], normal).
    pub fn local(&self, d: &Vec3) -> Vec3 {
        Vec3::new(
            d.dot(&self.tangent[0]),
            d.dot(&self.tangent[1]),
            d.dot(&self.normal),
        )
    }
}

/// Normals are normalized area-weighted averages of incident face normals.
pub fn vertex_frames(mesh: &Mesh) -> Result<Vec<VertexFrame>> {
    let areas = mesh.vertex_areas();
    let mut sums = vec![Vec3::zeros(); mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let n = mesh.face_area_normal(f);
        for &i in face {
            sums[i] += n;
        }
    }
    sums.iter()
        .zip(&areas)
        .enumerate()
        .map(|(v, (sum, &area))| {
            let len = sum.norm();
            if len <= 1e-14 * area.max(f64::MIN_POSITIVE) {
                return Err(Error::ZeroNormal { vertex: v });
            }
            Ok(VertexFrame::from_normal(sum / len, area))
        })
        .collect()
}

/// Translates the mesh so its area-weighted vertex centroid sits at the origin.
pub fn centroid_recenter(mesh: &Mesh) -> Mesh {
    let c = mesh.centroid();
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v -= c;
    }
    out
}

pub(crate) fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Interior angle at `a` of triangle (a, b, c).
pub(crate) fn corner_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let u = b - a;
    let v = c - a;
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Cotangent of the angle at `a` of triangle (a, b, c).
pub(crate) fn corner_cot(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let u = b - a;
    let v = c - a;
    u.dot(&v) / u.cross(&v).norm()
}

fn bounding_diagonal(vertices: &[Vec3]) -> f64 {
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}

fn count_components(neighbors: &[Vec<usize>]) -> (usize, Option<usize>) {
    let mut label = vec![usize::MAX; neighbors.len()];
    let mut components = 0;
    let mut first_unreached = None;
    for start in 0..neighbors.len() {
        if label[start] != usize::MAX {
            continue;
        }
        if components == 1 {
            first_unreached = Some(start);
        }
        let mut stack = vec![start];
        label[start] = components;
        while let Some(v) = stack.pop() {
            for &w in &neighbors[v] {
                if label[w] == usize::MAX {
                    label[w] = components;
                    stack.push(w);
                }
            }
        }
        components += 1;
    }
    (components, first_unreached)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn tetrahedron() -> Mesh {
        let s = 1.0 / 2f64.sqrt();
        let vertices = vec![
            Vec3::new(1.0, 0.0, -s),
            Vec3::new(-1.0, 0.0, -s),
            Vec3::new(0.0, 1.0, s),
            Vec3::new(0.0, -1.0, s),
        ];
        let faces = vec![[0, 2, 3], [1, 3, 2], [0, 3, 1], [0, 1, 2]];
        Mesh::new(vertices, faces).unwrap()
    }

    /// Unit cube [-1,1]^3 with each face split into `n`×`n` quads, two triangles each.
    pub fn cube(n: usize) -> Mesh {
        let mut vertices: Vec<Vec3> = Vec::new();
        let mut index: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
        let mut faces = Vec::new();
        let mut id = |p: [i64; 3], vertices: &mut Vec<Vec3>| {
            *index.entry((p[0], p[1], p[2])).or_insert_with(|| {
                let h = n as f64 / 2.0;
                vertices.push(Vec3::new(
                    p[0] as f64 / h - 1.0,
                    p[1] as f64 / h - 1.0,
                    p[2] as f64 / h - 1.0,
                ));
                vertices.len() - 1
            })
        };
        let n = n as i64;
        // (normal axis, side) with (u, v) axes chosen so u × v points outward
        for axis in 0..3 {
            for side in [0, n] {
                let (u, v) = if side == n {
                    ((axis + 1) % 3, (axis + 2) % 3)
                } else {
                    ((axis + 2) % 3, (axis + 1) % 3)
                };
                for i in 0..n {
                    for j in 0..n {
                        let corner = |di: i64, dj: i64| {
                            let mut p = [0; 3];
                            p[axis] = side;
                            p[u] = i + di;
                            p[v] = j + dj;
                            p
                        };
                        let a = id(corner(0, 0), &mut vertices);
                        let b = id(corner(1, 0), &mut vertices);
                        let c = id(corner(1, 1), &mut vertices);
                        let d = id(corner(0, 1), &mut vertices);
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    }
                }
            }
        }
        Mesh::new(vertices, faces).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::shapes::{generate, AnalyticShape};

    #[test]
    fn tetrahedron_is_valid() {
        let m = tetrahedron();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.face_count(), 4);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn rejects_flipped_face() {
        let t = tetrahedron();
        let mut faces = t.faces().to_vec();
        faces[0] = [faces[0][0], faces[0][2], faces[0][1]];
        let err = Mesh::new(t.vertices().to_vec(), faces).unwrap_err();
        assert!(
            matches!(err, Error::InconsistentOrientation { .. }),
            "{err}"
        );
    }

    #[test]
    fn rejects_inward_orientation() {
        let t = tetrahedron();
        let faces = t.faces().iter().map(|&[a, b, c]| [a, c, b]).collect();
        let err = Mesh::new(t.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::InwardOrientation { .. }), "{err}");
    }

    #[test]
    fn rejects_open_surface() {
        let t = tetrahedron();
        let faces = t.faces()[..3].to_vec();
        let err = Mesh::new(t.vertices().to_vec(), faces).unwrap_err();
        assert!(matches!(err, Error::BoundaryEdge { .. }), "{err}");
    }

    #[test]
    fn rejects_two_components() {
        let t = tetrahedron();
        let mut vertices = t.vertices().to_vec();
        vertices.extend(t.vertices().iter().map(|v| v + Vec3::new(10.0, 0.0, 0.0)));
        let mut faces = t.faces().to_vec();
        faces.extend(t.faces().iter().map(|&[a, b, c]| [a + 4, b + 4, c + 4]));
        let err = Mesh::new(vertices, faces).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Disconnected {
                    components: 2,
                    vertex: 4
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn rejects_degenerate_and_out_of_range() {
        let t = tetrahedron();
        let mut faces = t.faces().to_vec();
        faces[1] = [1, 1, 2];
        assert!(matches!(
            Mesh::new(t.vertices().to_vec(), faces).unwrap_err(),
            Error::DegenerateFace { face: 1, .. }
        ));
        let mut faces = t.faces().to_vec();
        faces[2] = [0, 3, 9];
        assert!(matches!(
            Mesh::new(t.vertices().to_vec(), faces).unwrap_err(),
            Error::IndexOutOfRange {
                face: 2,
                index: 9,
                ..
            }
        ));
    }

    #[test]
    fn sphere_normals_are_radial() {
        // area weighting is first order on the irregular icosphere triangles
        let worst = |res| {
            let m = generate(&AnalyticShape::Sphere { radius: 1.0 }, res).unwrap();
            let frames = vertex_frames(&m).unwrap();
            m.vertices()
                .iter()
                .zip(&frames)
                .map(|(v, fr)| fr.normal.dot(&v.normalize()).clamp(-1.0, 1.0).acos())
                .fold(0.0, f64::max)
        };
        let (w3, w4) = (worst(3), worst(4));
        assert!(w4 < 6.5e-3, "worst angle {w4}");
        assert!(w4 < 0.55 * w3, "{w3} -> {w4}");
    }

    #[test]
    fn area_weights_sum_to_sphere_area() {
        let m = generate(&AnalyticShape::Sphere { radius: 1.0 }, 4).unwrap();
        let frames = vertex_frames(&m).unwrap();
        let total: f64 = frames.iter().map(|f| f.area).sum();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((total - exact).abs() / exact < 2e-3, "total {total}");
        assert!((total - m.total_area()).abs() <= 1e-9 * total);
    }

    #[test]
    fn frames_are_orthonormal() {
        let m = generate(
            &AnalyticShape::Torus {
                major: 2.0,
                minor: 0.5,
            },
            16,
        )
        .unwrap();
        for fr in vertex_frames(&m).unwrap() {
            assert!((fr.normal.norm() - 1.0).abs() < 1e-12);
            assert!(fr.normal.dot(&fr.tangent[0]).abs() < 1e-12);
            assert!(fr.normal.dot(&fr.tangent[1]).abs() < 1e-12);
            assert!(fr.tangent[0].dot(&fr.tangent[1]).abs() < 1e-12);
            assert!(fr.area > 0.0);
        }
    }

    #[test]
    fn cube_corner_normal_is_diagonal() {
        let m = cube(2);
        let frames = vertex_frames(&m).unwrap();
        let corner = m
            .vertices()
            .iter()
            .position(|v| (v - Vec3::new(1.0, 1.0, 1.0)).norm() < 1e-12)
            .unwrap();
        let diag = Vec3::new(1.0, 1.0, 1.0).normalize();
        assert!((frames[corner].normal - diag).norm() < 1e-12);
    }

    #[test]
    fn closure_of_face_normals() {
        for m in [
            cube(3),
            generate(&AnalyticShape::Sphere { radius: 1.0 }, 3).unwrap(),
        ] {
            let sum = (0..m.face_count()).fold(Vec3::zeros(), |acc, f| acc + m.face_area_normal(f));
            assert!(sum.norm() <= 1e-9 * m.total_area());
        }
    }

    #[test]
    fn recenter_sphere_and_idempotence() {
        let m = generate(&AnalyticShape::Sphere { radius: 1.0 }, 3).unwrap();
        let shifted = m.translated(Vec3::new(5.0, 0.0, 0.0)).unwrap();
        let back = centroid_recenter(&shifted);
        assert!(back.centroid().norm() < 1e-12);
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
        let again = centroid_recenter(&back);
        for (a, b) in again.vertices().iter().zip(back.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn recenter_shifted_torus() {
        let m = generate(
            &AnalyticShape::Torus {
                major: 2.0,
                minor: 0.5,
            },
            32,
        )
        .unwrap()
        .translated(Vec3::new(1.0, 2.0, 3.0))
        .unwrap();
        assert!(centroid_recenter(&m).centroid().norm() < 1e-9);
    }

    #[test]
    fn frames_unchanged_by_recentering() {
        let m = generate(&AnalyticShape::Sphere { radius: 1.0 }, 2)
            .unwrap()
            .translated(Vec3::new(0.3, -2.0, 1.0))
            .unwrap();
        let a = vertex_frames(&m).unwrap();
        let b = vertex_frames(&centroid_recenter(&m)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.normal - y.normal).norm() < 1e-12);
            for t in y.tangent {
                assert!(t.dot(&x.normal).abs() < 1e-12);
            }
            assert!((x.area - y.area).abs() < 1e-12);
        }
    }
}
