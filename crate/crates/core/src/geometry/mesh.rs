use super::{Chart, DomainSpec};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// A boundary edge of `cell`: local vertices `local_edge` and `(local_edge + 1) % 3`,
/// traversed in the direction of increasing chart parameter (`s0 < s1`, unwrapped).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub cell: usize,
    pub local_edge: usize,
    pub chart: usize,
    pub s0: f64,
    pub s1: f64,
}

/// Triangulation of a curved domain. Cells are straight triangles given by
/// vertex coordinates; boundary vertices lie on the charts.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: DomainSpec,
    pub charts: Vec<Chart>,
    pub chart_labels: Vec<String>,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Periodic identification: `master[v]` is the representative of vertex `v`.
    pub master: Vec<usize>,
    /// Maximum edge length.
    pub h: f64,
}

/// Build a structured chart-conforming mesh with target edge length `h`.
///
/// Disk: concentric rings with `6k` vertices on ring `k`. Annulus: rings with
/// arclength-uniform vertex counts. Channel: a periodic grid of split squares.
pub fn build_mesh(domain: &DomainSpec, h: f64) -> Result<Mesh> {
    domain.validate()?;
    if !(h > 0.0) || !h.is_finite() || h >= domain.min_feature() {
        return Err(Error::InfeasibleResolution(format!(
            "h = {h} must be positive and below the smallest feature {}",
            domain.min_feature()
        )));
    }
    let (vertices, cells, master) = match *domain {
        DomainSpec::Disk { radius } => disk(radius, h),
        DomainSpec::Annulus { inner, outer } => annulus(inner, outer, h),
        DomainSpec::Channel { length, height } => channel(length, height, h),
    };
    let charts_l = domain.charts();
    let mut mesh = Mesh {
        domain: *domain,
        charts: charts_l.iter().map(|c| c.1).collect(),
        chart_labels: charts_l.iter().map(|c| c.0.to_string()).collect(),
        vertices,
        cells,
        boundary_edges: Vec::new(),
        master,
        h: 0.0,
    };
    mesh.orient_and_check()?;
    mesh.find_boundary_edges()?;
    mesh.h = mesh.max_edge_length();
    mesh.validate()?;
    Ok(mesh)
}

fn ring_angles(n: usize, offset: f64) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * (i as f64 + offset) / n as f64).collect()
}

/// Triangulate the band between two concentric rings by merging their angle lists.
fn merge_rings(inner: &[usize], ia: &[f64], outer: &[usize], oa: &[f64], cells: &mut Vec<[usize; 3]>) {
    let (na, nb) = (inner.len(), outer.len());
    let next_angle = |angles: &[f64], k: usize| {
        if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + 2.0 * PI
        }
    };
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let ai = if i < na { next_angle(ia, i) } else { f64::INFINITY };
        let bj = if j < nb { next_angle(oa, j) } else { f64::INFINITY };
        if bj <= ai {
            cells.push([inner[i % na], outer[j % nb], outer[(j + 1) % nb]]);
            j += 1;
        } else {
            cells.push([inner[i % na], outer[j % nb], inner[(i + 1) % na]]);
            i += 1;
        }
    }
}

type Raw = (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<usize>);

fn disk(radius: f64, h: f64) -> Raw {
    let n = (radius / h).ceil() as usize;
    let mut vertices = vec![[0.0, 0.0]];
    let mut cells = Vec::new();
    let mut prev: Vec<usize> = vec![0];
    let mut prev_angles = vec![0.0];
    for k in 1..=n {
        let r = radius * k as f64 / n as f64;
        let angles = ring_angles(6 * k, 0.0);
        let start = vertices.len();
        for &a in &angles {
            let (s, c) = a.sin_cos();
            vertices.push(if k == n { [radius * c, radius * s] } else { [r * c, r * s] });
        }
        let ring: Vec<usize> = (start..vertices.len()).collect();
        if k == 1 {
            for i in 0..6 {
                cells.push([0, ring[i], ring[(i + 1) % 6]]);
            }
        } else {
            merge_rings(&prev, &prev_angles, &ring, &angles, &mut cells);
        }
        prev = ring;
        prev_angles = angles;
    }
    let m = (0..vertices.len()).collect();
    (vertices, cells, m)
}

fn annulus(inner: f64, outer: f64, h: f64) -> Raw {
    let layers = ((outer - inner) / h).ceil() as usize;
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    let mut prev_angles: Vec<f64> = Vec::new();
    for j in 0..=layers {
        let r = if j == layers { outer } else { inner + (outer - inner) * j as f64 / layers as f64 };
        let count = ((2.0 * PI * r / h).ceil() as usize).max(6);
        let angles = ring_angles(count, 0.0);
        let start = vertices.len();
        for &a in &angles {
            let (s, c) = a.sin_cos();
            vertices.push([r * c, r * s]);
        }
        let ring: Vec<usize> = (start..vertices.len()).collect();
        if j > 0 {
            merge_rings(&prev, &prev_angles, &ring, &angles, &mut cells);
        }
        prev = ring;
        prev_angles = angles;
    }
    let m = (0..vertices.len()).collect();
    (vertices, cells, m)
}

fn channel(length: f64, height: f64, h: f64) -> Raw {
    let nx = (length / h).ceil() as usize;
    let ny = (height / h).ceil() as usize;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut master = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { length } else { length * i as f64 / nx as f64 };
            let y = if j == ny { height } else { height * j as f64 / ny as f64 };
            vertices.push([x, y]);
            master.push(if i == nx { idx(0, j) } else { idx(i, j) });
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            } else {
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            }
        }
    }
    (vertices, cells, master)
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl Mesh {
    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        let t = self.cells[c];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, cc] = self.cell_coords(c);
        signed_area(a, b, cc)
    }

    fn orient_and_check(&mut self) -> Result<()> {
        for c in 0..self.cells.len() {
            let a = self.cell_area(c);
            if a < 0.0 {
                self.cells[c].swap(1, 2);
            }
            let a = self.cell_area(c).abs();
            if !(a > 1e-14 * self.domain.area()) {
                return Err(Error::MeshingFailure(format!("degenerate cell {c} with area {a:e}")));
            }
        }
        Ok(())
    }

    fn edge_key(&self, a: usize, b: usize) -> (usize, usize) {
        let (a, b) = (self.master[a], self.master[b]);
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn find_boundary_edges(&mut self) -> Result<()> {
        let mut count: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (c, t) in self.cells.iter().enumerate() {
            for e in 0..3 {
                count.entry(self.edge_key(t[e], t[(e + 1) % 3])).or_default().push((c, e));
            }
        }
        let mut edges = Vec::new();
        for (key, owners) in &count {
            if owners.len() > 2 {
                return Err(Error::MeshingFailure(format!("edge {key:?} shared by {} cells", owners.len())));
            }
            if owners.len() == 2 {
                continue;
            }
            let (cell, e) = owners[0];
            let t = self.cells[cell];
            let (pa, pb) = (self.vertices[t[e]], self.vertices[t[(e + 1) % 3]]);
            let chart = self
                .charts
                .iter()
                .position(|ch| ch.distance(pa) < 1e-12 && ch.distance(pb) < 1e-12)
                .ok_or_else(|| {
                    Error::InconsistentChart(format!("boundary edge {pa:?}-{pb:?} lies on no chart"))
                })?;
            let ch = self.charts[chart];
            let s0 = ch.parameter(pa);
            let mut s1 = ch.parameter(pb);
            let l = ch.length();
            // the channel wall parameter is not wrapped, so x = length keeps s = length
            if let Chart::Wall { .. } = ch {
                let along = |p: [f64; 2]| match ch {
                    Chart::Wall { top: true, length, .. } => length - p[0],
                    _ => p[0],
                };
                let (a0, a1) = (along(pa), along(pb));
                edges.push(BoundaryEdge { cell, local_edge: e, chart, s0: a0, s1: a1 });
                if a1 <= a0 {
                    return Err(Error::InconsistentChart(format!("edge {pa:?}-{pb:?} runs against the chart")));
                }
                continue;
            }
            while s1 - s0 > 0.5 * l {
                s1 -= l;
            }
            while s1 - s0 < -0.5 * l {
                s1 += l;
            }
            if s1 <= s0 {
                return Err(Error::InconsistentChart(format!("edge {pa:?}-{pb:?} runs against the chart")));
            }
            edges.push(BoundaryEdge { cell, local_edge: e, chart, s0, s1 });
        }
        edges.sort_by(|a, b| a.chart.cmp(&b.chart).then(a.s0.total_cmp(&b.s0)));
        self.boundary_edges = edges;
        Ok(())
    }

    fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in 0..self.cells.len() {
            let p = self.cell_coords(c);
            for e in 0..3 {
                let (a, b) = (p[e], p[(e + 1) % 3]);
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Check orientation, chart conformity and loop structure of the boundary.
    pub fn validate(&self) -> Result<()> {
        for c in 0..self.cells.len() {
            if !(self.cell_area(c) > 0.0) {
                return Err(Error::MeshingFailure(format!("cell {c} is not counterclockwise")));
            }
        }
        for e in &self.boundary_edges {
            let t = self.cells[e.cell];
            for v in [t[e.local_edge], t[(e.local_edge + 1) % 3]] {
                let d = self.charts[e.chart].distance(self.vertices[v]);
                if d > 1e-12 {
                    return Err(Error::InconsistentChart(format!("vertex {v} is {d:e} off its chart")));
                }
            }
        }
        let loops = self.boundary_loops()?;
        if loops != self.charts.len() {
            return Err(Error::MeshingFailure(format!(
                "{loops} boundary loops for {} boundary components",
                self.charts.len()
            )));
        }
        Ok(())
    }

    /// Number of closed boundary loops; errors if the boundary is not a union of cycles.
    pub fn boundary_loops(&self) -> Result<usize> {
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &self.boundary_edges {
            let t = self.cells[e.cell];
            let a = self.master[t[e.local_edge]];
            let b = self.master[t[(e.local_edge + 1) % 3]];
            if next.insert(a, b).is_some() {
                return Err(Error::MeshingFailure(format!("boundary vertex {a} starts two edges")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut loops = 0;
        for &start in next.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut v = start;
            loop {
                seen.insert(v);
                v = *next
                    .get(&v)
                    .ok_or_else(|| Error::MeshingFailure(format!("open boundary chain at vertex {v}")))?;
                if v == start {
                    break;
                }
                if seen.contains(&v) {
                    return Err(Error::MeshingFailure("boundary chain is not a simple loop".into()));
                }
            }
            loops += 1;
        }
        Ok(loops)
    }

    /// Plain-text export: a header line, then vertices, cells and boundary edges.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "vertices {} cells {} boundary_edges {}",
            self.vertices.len(),
            self.cells.len(),
            self.boundary_edges.len()
        );
        for v in &self.vertices {
            let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
        }
        for c in &self.cells {
            let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(
                out,
                "{} {} {} {:.16e} {:.16e}",
                e.cell, e.local_edge, self.chart_labels[e.chart], e.s0, e.s1
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_boundary_vertices_on_circle() {
        let m = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.2).unwrap();
        assert_eq!(m.boundary_loops().unwrap(), 1);
        for e in &m.boundary_edges {
            let t = m.cells[e.cell];
            for v in [t[e.local_edge], t[(e.local_edge + 1) % 3]] {
                let p = m.vertices[v];
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(m.boundary_edges.len(), 30);
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = build_mesh(&DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.1).unwrap();
        assert_eq!(m.boundary_loops().unwrap(), 2);
        let inner = m.boundary_edges.iter().filter(|e| e.chart == 0).count();
        let outer = m.boundary_edges.iter().filter(|e| e.chart == 1).count();
        assert!(inner > 0 && outer > inner);
    }

    #[test]
    fn channel_boundary_only_on_walls() {
        let m = build_mesh(&DomainSpec::Channel { length: 2.0, height: 1.0 }, 0.1).unwrap();
        assert_eq!(m.boundary_loops().unwrap(), 2);
        for e in &m.boundary_edges {
            let t = m.cells[e.cell];
            for v in [t[e.local_edge], t[(e.local_edge + 1) % 3]] {
                let y = m.vertices[v][1];
                assert!(y == 0.0 || y == 1.0);
            }
        }
        assert_eq!(m.boundary_edges.len(), 40);
    }

    #[test]
    fn refinement_halves_h() {
        for dom in [
            DomainSpec::Disk { radius: 1.0 },
            DomainSpec::Annulus { inner: 0.4, outer: 1.0 },
            DomainSpec::Channel { length: 2.0, height: 1.0 },
        ] {
            let mut prev = None;
            for h in [0.25, 0.125, 0.0625] {
                let m = build_mesh(&dom, h).unwrap();
                if let Some(p) = prev {
                    let r = m.h / p;
                    assert!((0.45..=0.55).contains(&r), "{dom:?}: ratio {r}");
                }
                prev = Some(m.h);
            }
        }
    }

    #[test]
    fn infeasible_resolution_is_rejected() {
        let e = build_mesh(&DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.3);
        assert!(matches!(e, Err(Error::InfeasibleResolution(_))));
        assert!(build_mesh(&DomainSpec::Disk { radius: 1.0 }, -1.0).is_err());
    }

    #[test]
    fn text_export_header() {
        let m = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.5).unwrap();
        let txt = m.to_text();
        let first = txt.lines().next().unwrap();
        assert_eq!(
            first,
            format!("vertices {} cells {} boundary_edges {}", m.vertices.len(), m.cells.len(), m.boundary_edges.len())
        );
        assert_eq!(txt.lines().count(), 1 + m.vertices.len() + m.cells.len() + m.boundary_edges.len());
    }
}
