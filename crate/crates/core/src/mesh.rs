//! Tank geometry and its tagged triangulation.
//!
//! The fluid occupies the rectangle `[-Lx, Lx] x [-h, 0]` minus the rectangular
//! hull `[-a, a] x [-d, 0]`. The mesh is a graded tensor grid split into
//! triangles with mirrored diagonals so that it is exactly symmetric under
//! `x -> -x`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Closed rectangular tank with an optional rectangular hull at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidGeometry<T> {
    pub depth: T,
    pub tank_half_length: T,
    /// Hull half-beam `a`; zero for the open tank.
    pub hull_half_beam: T,
    /// Hull draft `d`; zero for the open tank.
    pub hull_draft: T,
    /// Vertical coordinate of the platform mass centre.
    pub y_g: T,
    pub mesh_target_size: T,
}

impl<T: Scalar> FluidGeometry<T> {
    /// Validated geometry with a floating hull.
    pub fn new(depth: T, tank_half_length: T, hull_half_beam: T, hull_draft: T, y_g: T, mesh_target_size: T) -> Result<Self> {
        let all = [
            ("depth", depth),
            ("tank_half_length", tank_half_length),
            ("hull_half_beam", hull_half_beam),
            ("hull_draft", hull_draft),
            ("mesh_target_size", mesh_target_size),
        ];
        for (name, v) in all {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Geometry(format!("{name} must be positive and finite")));
            }
        }
        if !y_g.is_finite() {
            return Err(Error::Geometry("y_g must be finite".into()));
        }
        if hull_draft >= depth {
            return Err(Error::Geometry("draft exceeds depth (hull must stay strictly above the seabed)".into()));
        }
        if hull_half_beam >= tank_half_length {
            return Err(Error::Geometry("hull touches wall (half-beam must be below tank half-length)".into()));
        }
        if mesh_target_size > depth {
            return Err(Error::Geometry("mesh_target_size larger than depth".into()));
        }
        Ok(Self { depth, tank_half_length, hull_half_beam, hull_draft, y_g, mesh_target_size })
    }

    /// Tank without a hull; the free surface spans the whole top.
    pub fn open_tank(depth: T, tank_half_length: T, mesh_target_size: T) -> Result<Self> {
        for (name, v) in [("depth", depth), ("tank_half_length", tank_half_length), ("mesh_target_size", mesh_target_size)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Geometry(format!("{name} must be positive and finite")));
            }
        }
        if mesh_target_size > depth {
            return Err(Error::Geometry("mesh_target_size larger than depth".into()));
        }
        Ok(Self { depth, tank_half_length, hull_half_beam: T::zero(), hull_draft: T::zero(), y_g: T::zero(), mesh_target_size })
    }

    pub fn has_hull(&self) -> bool {
        self.hull_half_beam > T::zero()
    }

    pub fn with_target_size(&self, mesh_target_size: T) -> Self {
        Self { mesh_target_size, ..self.clone() }
    }

    /// Measure of the free surface `E`.
    pub fn free_surface_length(&self) -> T {
        T::lit(2.0) * (self.tank_half_length - self.hull_half_beam)
    }

    /// Measure of the wetted hull boundary: two sides plus the bottom.
    pub fn wetted_length(&self) -> T {
        T::lit(2.0) * (self.hull_draft + self.hull_half_beam)
    }

    pub fn perimeter(&self) -> T {
        let two = T::lit(2.0);
        two * self.tank_half_length + two * self.depth + self.free_surface_length() + self.wetted_length()
    }

    pub fn area(&self) -> T {
        let two = T::lit(2.0);
        two * self.tank_half_length * self.depth - two * self.hull_half_beam * self.hull_draft
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    FreeSurface,
    Wetted,
    Seabed,
    Wall,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [BoundaryTag::FreeSurface, BoundaryTag::Wetted, BoundaryTag::Seabed, BoundaryTag::Wall];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::FreeSurface => "free_surface",
            BoundaryTag::Wetted => "wetted",
            BoundaryTag::Seabed => "seabed",
            BoundaryTag::Wall => "wall",
        }
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free_surface" => Ok(BoundaryTag::FreeSurface),
            "wetted" => Ok(BoundaryTag::Wetted),
            "seabed" => Ok(BoundaryTag::Seabed),
            "wall" => Ok(BoundaryTag::Wall),
            other => Err(Error::Parse(format!("unknown boundary tag `{other}`"))),
        }
    }
}

/// Boundary edge oriented with the fluid on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    pub nodes: Vec<[T; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Free-surface unknowns sorted by `x`; hull contact points are excluded.
    pub surface_node_index: Vec<usize>,
}

/// Summary statistics written next to an exported mesh.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeshQuality {
    pub nodes: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub surface_nodes: usize,
    pub min_area: f64,
    pub max_edge: f64,
    pub min_angle_deg: f64,
    pub tagged_lengths: BTreeMap<String, f64>,
}

impl<T: Scalar> Mesh<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn signed_area(&self, tri: [usize; 3]) -> T {
        let [a, b, c] = tri.map(|i| self.nodes[i]);
        T::lit(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_length(&self, a: usize, b: usize) -> T {
        let (p, q) = (self.nodes[a], self.nodes[b]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    pub fn tagged_length(&self, tag: BoundaryTag) -> T {
        self.boundary_edges.iter().filter(|e| e.tag == tag).fold(T::zero(), |acc, e| acc + self.edge_length(e.nodes[0], e.nodes[1]))
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn max_edge_length(&self) -> T {
        let mut max = T::zero();
        for t in &self.triangles {
            for k in 0..3 {
                max = max.max(self.edge_length(t[k], t[(k + 1) % 3]));
            }
        }
        max
    }

    /// Checks orientation, non-degeneracy and that each boundary edge is tagged once.
    pub fn validate(&self, target_size: T) -> Result<()> {
        let min_area = T::lit(1e-12) * target_size * target_size;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::Mesh(format!("triangle {i} references a missing node")));
            }
            if !(self.signed_area(*t) > min_area) {
                return Err(Error::Mesh(format!("triangle {i} is degenerate or clockwise")));
            }
        }
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut tagged: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            *tagged.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        for (key, count) in &edge_count {
            let on_boundary = *count == 1;
            match (on_boundary, tagged.get(key).copied().unwrap_or(0)) {
                (true, 1) | (false, 0) => {}
                (true, 0) => return Err(Error::Mesh(format!("untagged boundary edge {key:?}"))),
                (_, n) => return Err(Error::Mesh(format!("edge {key:?} tagged {n} times"))),
            }
        }
        if tagged.len() != self.boundary_edges.len() || tagged.keys().any(|k| edge_count.get(k) != Some(&1)) {
            return Err(Error::Mesh("tagged edge is not a boundary edge".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        for &s in &self.surface_node_index {
            if s >= self.nodes.len() || seen[s] {
                return Err(Error::Mesh(format!("surface node {s} missing or repeated")));
            }
            seen[s] = true;
        }
        if self.surface_node_index.windows(2).any(|w| !(self.nodes[w[0]][0] < self.nodes[w[1]][0])) {
            return Err(Error::Mesh("surface nodes are not sorted by x".into()));
        }
        Ok(())
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_area = f64::INFINITY;
        let mut min_angle = f64::INFINITY;
        for t in &self.triangles {
            min_area = min_area.min(self.signed_area(*t).to_f64_lossy());
            for k in 0..3 {
                let p = self.nodes[t[k]];
                let q = self.nodes[t[(k + 1) % 3]];
                let r = self.nodes[t[(k + 2) % 3]];
                let u = [(q[0] - p[0]).to_f64_lossy(), (q[1] - p[1]).to_f64_lossy()];
                let v = [(r[0] - p[0]).to_f64_lossy(), (r[1] - p[1]).to_f64_lossy()];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min_angle = min_angle.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        MeshQuality {
            nodes: self.nodes.len(),
            triangles: self.triangles.len(),
            boundary_edges: self.boundary_edges.len(),
            surface_nodes: self.surface_node_index.len(),
            min_area,
            max_edge: self.max_edge_length().to_f64_lossy(),
            min_angle_deg: min_angle,
            tagged_lengths: BoundaryTag::ALL.iter().map(|&t| (t.as_str().to_string(), self.tagged_length(t).to_f64_lossy())).collect(),
        }
    }

    /// Plain-text export: node, triangle, tagged-edge and surface tables.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("floatbeam-mesh 1\n");
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(out, "{:.16e} {:.16e}", p[0].to_f64_lossy(), p[1].to_f64_lossy());
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str());
        }
        let _ = writeln!(out, "surface {}", self.surface_node_index.len());
        for s in &self.surface_node_index {
            let _ = writeln!(out, "{s}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of mesh file, expected {what}")));
        if next("header")? != "floatbeam-mesh 1" {
            return Err(Error::Parse("missing `floatbeam-mesh 1` header".into()));
        }
        fn section(line: &str, name: &str) -> Result<usize> {
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next().map(str::parse::<usize>)) {
                (Some(n), Some(Ok(count))) if n == name => Ok(count),
                _ => Err(Error::Parse(format!("expected `{name} <count>`, found `{line}`"))),
            }
        }
        fn field<V: FromStr>(tok: Option<&str>, line: &str) -> Result<V> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse(format!("malformed line `{line}`")))
        }

        let n = section(next("nodes")?, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next("node")?;
            let mut it = line.split_whitespace();
            let x: f64 = field(it.next(), line)?;
            let y: f64 = field(it.next(), line)?;
            nodes.push([T::lit(x), T::lit(y)]);
        }
        let m = section(next("triangles")?, "triangles")?;
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let line = next("triangle")?;
            let mut it = line.split_whitespace();
            triangles.push([field(it.next(), line)?, field(it.next(), line)?, field(it.next(), line)?]);
        }
        let k = section(next("edges")?, "edges")?;
        let mut boundary_edges = Vec::with_capacity(k);
        for _ in 0..k {
            let line = next("edge")?;
            let mut it = line.split_whitespace();
            let a = field(it.next(), line)?;
            let b = field(it.next(), line)?;
            let tag = it.next().ok_or_else(|| Error::Parse(format!("missing tag in `{line}`")))?.parse()?;
            boundary_edges.push(BoundaryEdge { nodes: [a, b], tag });
        }
        let s = section(next("surface")?, "surface")?;
        let mut surface_node_index = Vec::with_capacity(s);
        for _ in 0..s {
            let line = next("surface node")?;
            surface_node_index.push(field(Some(line), line)?);
        }
        Ok(Self { nodes, triangles, boundary_edges, surface_node_index })
    }
}

/// Graded 1D subdivision of `[start, end]`.
///
/// Local spacing is half the target at each point of `fine_at`, growing
/// linearly back to the full target over two target lengths.
fn graded_points<T: Scalar>(start: T, end: T, target: T, fine_at: &[T]) -> Vec<T> {
    let len = (end - start).to_f64_lossy();
    let target_f = target.to_f64_lossy();
    let fine: Vec<f64> = fine_at.iter().map(|f| f.to_f64_lossy()).collect();
    let s0 = start.to_f64_lossy();
    let spacing = |x: f64| {
        let dist = fine.iter().map(|f| (x - f).abs()).fold(f64::INFINITY, f64::min);
        target_f * (0.5 + 0.25 * (dist / target_f - 0.5).max(0.0)).min(1.0)
    };
    let samples = 64 * ((len / target_f).ceil() as usize).max(1);
    let h = len / samples as f64;
    let mut cumulative = Vec::with_capacity(samples + 1);
    cumulative.push(0.0);
    for i in 0..samples {
        let xm = s0 + (i as f64 + 0.5) * h;
        let prev = cumulative[i];
        cumulative.push(prev + h / spacing(xm));
    }
    let total = cumulative[samples];
    let segments = (total - 1e-9).ceil().max(1.0) as usize;
    let mut points = Vec::with_capacity(segments + 1);
    points.push(start);
    let mut cursor = 0;
    for k in 1..segments {
        let level = total * k as f64 / segments as f64;
        while cumulative[cursor + 1] < level {
            cursor += 1;
        }
        let frac = (level - cumulative[cursor]) / (cumulative[cursor + 1] - cumulative[cursor]);
        points.push(T::lit(s0 + (cursor as f64 + frac) * h));
    }
    points.push(end);
    points
}

fn concat_segments<T: Scalar>(parts: Vec<Vec<T>>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for part in parts {
        let skip = usize::from(!out.is_empty());
        out.extend(part.into_iter().skip(skip));
    }
    out
}

/// Tensor-grid coordinates that resolve the hull corners.
fn grid_lines<T: Scalar>(geom: &FluidGeometry<T>) -> (Vec<T>, Vec<T>) {
    let target = geom.mesh_target_size;
    let (lx, a, d, h) = (geom.tank_half_length, geom.hull_half_beam, geom.hull_draft, geom.depth);
    let half_x = if geom.has_hull() {
        concat_segments(vec![graded_points(T::zero(), a, target, &[a]), graded_points(a, lx, target, &[a])])
    } else {
        graded_points(T::zero(), lx, target, &[])
    };
    // mirror so that the grid is exactly symmetric in x
    let mut xs: Vec<T> = half_x.iter().skip(1).rev().map(|&x| -x).collect();
    xs.extend(half_x.iter().copied());
    let ys = if geom.has_hull() {
        concat_segments(vec![graded_points(-h, -d, target, &[-d]), graded_points(-d, T::zero(), target, &[-d, T::zero()])])
    } else {
        graded_points(-h, T::zero(), target, &[])
    };
    (xs, ys)
}

/// Triangulates the tank with tagged boundary edges.
pub fn generate_mesh<T: Scalar>(geom: &FluidGeometry<T>) -> Result<Mesh<T>> {
    let (xs, ys) = grid_lines(geom);
    let (nx, ny) = (xs.len(), ys.len());
    if nx < 2 || ny < 2 {
        return Err(Error::Mesh("grid has fewer than two lines in a direction".into()));
    }
    let half = T::lit(0.5);
    let (a, d) = (geom.hull_half_beam, geom.hull_draft);
    let in_hull = |i: usize, j: usize| {
        let cx = half * (xs[i] + xs[i + 1]);
        let cy = half * (ys[j] + ys[j + 1]);
        geom.has_hull() && cx.abs() < a && cy > -d
    };

    let mut active = vec![false; nx * ny];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            if !in_hull(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    active[(i + di) * ny + j + dj] = true;
                }
            }
        }
    }
    let mut id = vec![usize::MAX; nx * ny];
    let mut nodes = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if active[i * ny + j] {
                id[i * ny + j] = nodes.len();
                nodes.push([xs[i], ys[j]]);
            }
        }
    }

    let mut triangles = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            if in_hull(i, j) {
                continue;
            }
            let sw = id[i * ny + j];
            let se = id[(i + 1) * ny + j];
            let ne = id[(i + 1) * ny + j + 1];
            let nw = id[i * ny + j + 1];
            if half * (xs[i] + xs[i + 1]) < T::zero() {
                triangles.push([sw, se, ne]);
                triangles.push([sw, ne, nw]);
            } else {
                triangles.push([sw, se, nw]);
                triangles.push([se, ne, nw]);
            }
        }
    }

    let mut edges: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (p, q) = (t[k], t[(k + 1) % 3]);
            let entry = edges.entry((p.min(q), p.max(q))).or_insert((0, [p, q]));
            entry.0 += 1;
        }
    }
    let tol = T::lit(1e-9) * (geom.tank_half_length + geom.depth);
    let mut boundary_edges = Vec::new();
    for (_, (count, [p, q])) in edges {
        if count != 1 {
            continue;
        }
        let mx = half * (nodes[p][0] + nodes[q][0]);
        let my = half * (nodes[p][1] + nodes[q][1]);
        let tag = if (my + geom.depth).abs() < tol {
            BoundaryTag::Seabed
        } else if (mx.abs() - geom.tank_half_length).abs() < tol {
            BoundaryTag::Wall
        } else if my.abs() < tol && mx.abs() > a - tol {
            BoundaryTag::FreeSurface
        } else if geom.has_hull() && (((mx.abs() - a).abs() < tol && my > -d - tol) || ((my + d).abs() < tol && mx.abs() < a + tol)) {
            BoundaryTag::Wetted
        } else {
            return Err(Error::Mesh(format!("untagged boundary edge ({p}, {q})")));
        };
        boundary_edges.push(BoundaryEdge { nodes: [p, q], tag });
    }

    let contact_tol = tol;
    let mut surface_node_index: Vec<usize> =
        (0..nodes.len()).filter(|&n| nodes[n][1].abs() < tol && (!geom.has_hull() || nodes[n][0].abs() > a + contact_tol)).collect();
    surface_node_index.sort_by(|&p, &q| nodes[p][0].partial_cmp(&nodes[q][0]).expect("finite coordinates"));

    let mesh = Mesh { nodes, triangles, boundary_edges, surface_node_index };
    mesh.validate(geom.mesh_target_size)?;
    if mesh.max_edge_length() > T::lit(1.5) * geom.mesh_target_size {
        return Err(Error::Mesh("edge longer than 1.5 x target size".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> FluidGeometry<f64> {
        FluidGeometry::new(10.0, 40.0, 5.0, 2.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn example_geometry_measures() {
        let g = example();
        assert_eq!(g.free_surface_length(), 70.0);
        assert_eq!(g.wetted_length(), 14.0);
    }

    #[test]
    fn rejects_invalid_geometry() {
        let err = FluidGeometry::new(10.0, 40.0, 5.0, 12.0, -1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("draft exceeds depth"));
        let err = FluidGeometry::new(10.0, 40.0, 40.0, 2.0, -1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("hull touches wall"));
        assert!(FluidGeometry::new(-10.0, 40.0, 5.0, 2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn all_tags_present_and_lengths_exact() {
        let g = example();
        let mesh = generate_mesh(&g).unwrap();
        for tag in BoundaryTag::ALL {
            assert!(mesh.edges_with_tag(tag).count() >= 1, "{tag:?}");
        }
        assert!((mesh.tagged_length(BoundaryTag::Wetted) - 14.0).abs() < 1e-9);
        assert!((mesh.tagged_length(BoundaryTag::FreeSurface) - 70.0).abs() < 1e-9);
        let total: f64 = BoundaryTag::ALL.iter().map(|&t| mesh.tagged_length(t)).sum();
        assert!((total - g.perimeter()).abs() <= 1e-9 * g.perimeter());
        let area: f64 = mesh.triangles.iter().map(|t| mesh.signed_area(*t)).sum();
        assert!((area - g.area()).abs() < 1e-9 * g.area());
        assert!(mesh.max_edge_length() <= 1.5 * g.mesh_target_size);
    }

    #[test]
    fn contact_points_are_not_surface_unknowns() {
        let mesh = generate_mesh(&example()).unwrap();
        for &s in &mesh.surface_node_index {
            assert!(mesh.nodes[s][0].abs() > 5.0);
            assert_eq!(mesh.nodes[s][1], 0.0);
        }
        let contact = mesh.nodes.iter().filter(|p| p[1] == 0.0 && p[0].abs() == 5.0).count();
        assert_eq!(contact, 2);
        let first = mesh.surface_node_index[0];
        let last = *mesh.surface_node_index.last().unwrap();
        assert_eq!(mesh.nodes[first][0], -40.0);
        assert_eq!(mesh.nodes[last][0], 40.0);
    }

    #[test]
    fn refinement_near_corners() {
        let g = example();
        let mesh = generate_mesh(&g).unwrap();
        // the smallest grid spacing next to a corner is half the target
        let near: Vec<f64> = mesh.nodes.iter().filter(|p| p[1] == 0.0 && p[0] > 5.0).map(|p| p[0] - 5.0).fold(vec![], |mut v, x| {
            v.push(x);
            v
        });
        let min = near.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min <= 0.55 * g.mesh_target_size, "{min}");
    }

    #[test]
    fn mesh_is_mirror_symmetric() {
        let mesh = generate_mesh(&example()).unwrap();
        for p in &mesh.nodes {
            assert!(mesh.nodes.iter().any(|q| q[0] == -p[0] && q[1] == p[1]));
        }
    }

    #[test]
    fn node_counts_grow_fourfold_under_refinement() {
        let g = FluidGeometry::new(10.0, 40.0, 5.0, 2.0, -1.0, 2.0).unwrap();
        let n0 = generate_mesh(&g).unwrap().node_count() as f64;
        let n1 = generate_mesh(&g.with_target_size(1.0)).unwrap().node_count() as f64;
        let n2 = generate_mesh(&g.with_target_size(0.5)).unwrap().node_count() as f64;
        for ratio in [n1 / n0, n2 / n1] {
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn open_tank_has_no_wetted_edges() {
        let g = FluidGeometry::<f64>::open_tank(10.0, 40.0, 1.0).unwrap();
        let mesh = generate_mesh(&g).unwrap();
        assert_eq!(mesh.edges_with_tag(BoundaryTag::Wetted).count(), 0);
        assert!((mesh.tagged_length(BoundaryTag::FreeSurface) - 80.0).abs() < 1e-9);
    }

    #[test]
    fn text_roundtrip_and_determinism() {
        let g = example();
        let a = generate_mesh(&g).unwrap();
        let b = generate_mesh(&g).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let parsed: Mesh<f64> = Mesh::from_text(&a.to_text()).unwrap();
        assert_eq!(parsed, a);
    }

    #[test]
    fn validate_detects_missing_tag() {
        let mut mesh = generate_mesh(&example()).unwrap();
        mesh.boundary_edges.pop();
        assert!(matches!(mesh.validate(1.0), Err(Error::Mesh(_))));
    }

    #[test]
    fn single_precision_mesh() {
        let g = FluidGeometry::<f32>::new(10.0, 40.0, 5.0, 2.0, -1.0, 1.0).unwrap();
        let mesh = generate_mesh(&g).unwrap();
        assert!((mesh.tagged_length(BoundaryTag::Wetted) - 14.0).abs() < 1e-4);
    }
}
