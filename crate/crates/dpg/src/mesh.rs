//! Simplicial meshes of polygonal domains: skeleton facet enumeration with
//! a fixed orientation convention, uniform (red) refinement, affine element
//! maps, Piola transforms, and an ASCII file format.
//!
//! Facet convention: endpoints are stored with the lower global vertex index
//! first, which fixes the facet parameterization t in [0,1]. The stored unit
//! normal points from the lower-indexed adjacent element to the higher one
//! (outward on the boundary); each element records the sign relating its own
//! outward normal to the stored one. Skeleton fluxes are stored once per
//! facet relative to the stored normal and sign-flipped per element.

use crate::refelem::trace::EDGES;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Facet {
    /// Global endpoint vertex indices, `a < b`.
    pub a: usize,
    pub b: usize,
    /// Adjacent element indices, ascending; one entry on the boundary.
    pub elems: Vec<usize>,
    pub boundary: bool,
    /// Unit normal under the convention above.
    pub normal: [f64; 2],
    pub length: f64,
}

/// How one element sees one of its three facets.
#[derive(Debug, Clone, Copy)]
pub struct FacetUse {
    pub facet: usize,
    /// +1 if the element-outward normal equals the stored facet normal.
    pub sign: f64,
    /// True if the local edge parameter runs in the global a -> b direction.
    pub forward: bool,
}

/// Affine map G(x^) = A x^ + b from the reference triangle onto an element.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub det: f64,
    pub a_inv: [[f64; 2]; 2],
}

impl Affine {
    pub fn apply(&self, xh: [f64; 2]) -> [f64; 2] {
        [
            self.a[0][0] * xh[0] + self.a[0][1] * xh[1] + self.b[0],
            self.a[1][0] * xh[0] + self.a[1][1] * xh[1] + self.b[1],
        ]
    }

    pub fn pull(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.b[0], x[1] - self.b[1]];
        [
            self.a_inv[0][0] * d[0] + self.a_inv[0][1] * d[1],
            self.a_inv[1][0] * d[0] + self.a_inv[1][1] * d[1],
        ]
    }

    /// A^{-T} g, the push-forward of a reference gradient.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.a_inv[0][0] * g[0] + self.a_inv[1][0] * g[1],
            self.a_inv[0][1] * g[0] + self.a_inv[1][1] * g[1],
        ]
    }
}

/// Piola transforms of one element's affine map.
#[derive(Debug, Clone, Copy)]
pub struct PiolaMap {
    pub elem: usize,
    pub affine: Affine,
}

impl PiolaMap {
    /// H(div) push-forward: tau = A tau^ / det A.
    pub fn push_vector(&self, th: [f64; 2]) -> [f64; 2] {
        let a = &self.affine.a;
        [
            (a[0][0] * th[0] + a[0][1] * th[1]) / self.affine.det,
            (a[1][0] * th[0] + a[1][1] * th[1]) / self.affine.det,
        ]
    }

    /// Inverse of `push_vector`.
    pub fn pull_vector(&self, t: [f64; 2]) -> [f64; 2] {
        let ai = &self.affine.a_inv;
        [
            (ai[0][0] * t[0] + ai[0][1] * t[1]) * self.affine.det,
            (ai[1][0] * t[0] + ai[1][1] * t[1]) * self.affine.det,
        ]
    }

    /// Symmetric-matrix push-forward: tau = A tau^ A^T / det A.
    pub fn push_sym(&self, th: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let a = &self.affine.a;
        let mut at = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                at[i][j] = a[i][0] * th[0][j] + a[i][1] * th[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (at[i][0] * a[j][0] + at[i][1] * a[j][1]) / self.affine.det;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// Per element, its three facet uses in local edge order.
    pub tri_facets: Vec<[FacetUse; 3]>,
    pub affine: Vec<Affine>,
    pub boundary_vertex: Vec<bool>,
    pub h_max: f64,
    pub h_min: f64,
    /// Largest circumradius-to-inradius ratio over all elements.
    pub shape_ratio_max: f64,
}

/// Ratios above this are flagged as poorly shaped.
pub const SHAPE_RATIO_WARN: f64 = 20.0;

impl Mesh {
    /// Build from raw vertices and connectivity. With `reorient`, clockwise
    /// triangles are flipped; otherwise they are an error.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        mut tris: Vec<[usize; 3]>,
        reorient: bool,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        for (t, tri) in tris.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::MeshFormat(format!(
                        "triangle {t} references vertex {v} out of range ({nv} vertices)"
                    )));
                }
            }
            let det = tri_det(&vertices, tri);
            if det <= 0.0 {
                if reorient && det < 0.0 {
                    tri.swap(1, 2);
                } else {
                    return Err(Error::InvertedElement(t, det));
                }
            }
        }

        // Facets in first-encounter order over (element, local edge).
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut tri_facets = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let mut uses = [FacetUse {
                facet: 0,
                sign: 1.0,
                forward: true,
            }; 3];
            for e in 0..3 {
                let ga = tri[EDGES[e][0]];
                let gb = tri[EDGES[e][1]];
                let key = (ga.min(gb), ga.max(gb));
                let fid = match index.get(&key) {
                    Some(&fid) => {
                        let f = &mut facets[fid];
                        if f.elems.len() == 2 {
                            return Err(Error::NonManifold(key.0, key.1));
                        }
                        f.elems.push(t);
                        fid
                    }
                    None => {
                        let pa = vertices[key.0];
                        let pb = vertices[key.1];
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                        facets.push(Facet {
                            a: key.0,
                            b: key.1,
                            elems: vec![t],
                            boundary: true,
                            normal: [d[1] / length, -d[0] / length],
                            length,
                        });
                        index.insert(key, facets.len() - 1);
                        facets.len() - 1
                    }
                };
                uses[e].facet = fid;
                uses[e].forward = ga == key.0;
            }
            tri_facets.push(uses);
        }

        // Fix normals to the convention and record per-element signs.
        for f in &mut facets {
            f.boundary = f.elems.len() == 1;
            f.elems.sort_unstable();
            // Point the stored normal out of the lower-indexed element.
            let lo = f.elems[0];
            let out = outward_normal(&vertices, &tris[lo], f.a, f.b);
            if out[0] * f.normal[0] + out[1] * f.normal[1] < 0.0 {
                f.normal = [-f.normal[0], -f.normal[1]];
            }
        }
        for (t, tri) in tris.iter().enumerate() {
            for e in 0..3 {
                let fu = &mut tri_facets[t][e];
                let f = &facets[fu.facet];
                let out = outward_normal(&vertices, tri, f.a, f.b);
                fu.sign = if out[0] * f.normal[0] + out[1] * f.normal[1] > 0.0 {
                    1.0
                } else {
                    -1.0
                };
            }
        }

        let mut boundary_vertex = vec![false; nv];
        for f in &facets {
            if f.boundary {
                boundary_vertex[f.a] = true;
                boundary_vertex[f.b] = true;
            }
        }

        let mut affine = Vec::with_capacity(tris.len());
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut shape_ratio_max: f64 = 0.0;
        for tri in &tris {
            let p0 = vertices[tri[0]];
            let p1 = vertices[tri[1]];
            let p2 = vertices[tri[2]];
            let a = [
                [p1[0] - p0[0], p2[0] - p0[0]],
                [p1[1] - p0[1], p2[1] - p0[1]],
            ];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let a_inv = [
                [a[1][1] / det, -a[0][1] / det],
                [-a[1][0] / det, a[0][0] / det],
            ];
            affine.push(Affine {
                a,
                b: p0,
                det,
                a_inv,
            });

            let la = dist(p1, p2);
            let lb = dist(p2, p0);
            let lc = dist(p0, p1);
            let h = la.max(lb).max(lc);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            let area = 0.5 * det;
            let s = 0.5 * (la + lb + lc);
            let circum = la * lb * lc / (4.0 * area);
            let inr = area / s;
            shape_ratio_max = shape_ratio_max.max(circum / inr);
        }

        Ok(Mesh {
            vertices,
            tris,
            facets,
            tri_facets,
            affine,
            boundary_vertex,
            h_max,
            h_min,
            shape_ratio_max,
        })
    }

    /// 2 n^2 congruent right triangles on the unit square.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::Invalid("unit_square requires n >= 1".into()));
        }
        let nf = n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / nf, j as f64 / nf]);
            }
        }
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                tris.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
                tris.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        Mesh::from_parts(vertices, tris, false)
    }

    /// Single element equal to the reference triangle; all facets boundary.
    pub fn reference_triangle() -> Result<Mesh> {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            false,
        )
    }

    /// Red refinement: each triangle split into 4 congruent children.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let pa = vertices[key.0];
                let pb = vertices[key.1];
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.tris.len());
        for tri in &self.tris {
            let [v0, v1, v2] = *tri;
            let m01 = mid(v0, v1, &mut vertices);
            let m12 = mid(v1, v2, &mut vertices);
            let m02 = mid(v0, v2, &mut vertices);
            tris.push([v0, m01, m02]);
            tris.push([m01, v1, m12]);
            tris.push([m02, m12, v2]);
            tris.push([m01, m12, m02]);
        }
        Mesh::from_parts(vertices, tris, false)
    }

    pub fn n_elems(&self) -> usize {
        self.tris.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.facets.iter().filter(|f| f.boundary).count()
    }

    pub fn element_area(&self, t: usize) -> f64 {
        0.5 * self.affine[t].det
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elems()).map(|t| self.element_area(t)).sum()
    }

    pub fn piola(&self, elem: usize) -> PiolaMap {
        PiolaMap {
            elem,
            affine: self.affine[elem],
        }
    }

    /// Physical point on facet `f` at global parameter `t`.
    pub fn facet_point(&self, f: usize, t: f64) -> [f64; 2] {
        let fa = &self.facets[f];
        let pa = self.vertices[fa.a];
        let pb = self.vertices[fa.b];
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    }

    /// Serialize in the `dpgmesh 2` ASCII format.
    pub fn to_string_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dpgmesh 2");
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.tris.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        for t in &self.tris {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string_ascii())?;
        Ok(())
    }

    /// Parse the `dpgmesh 2` ASCII format.
    pub fn parse_ascii(text: &str, reorient: bool) -> Result<Mesh> {
        let mut tokens = text.split_whitespace();
        let magic = tokens.next().ok_or_else(|| malformed("empty file"))?;
        let dim = tokens
            .next()
            .ok_or_else(|| malformed("missing dimension"))?;
        if magic != "dpgmesh" {
            return Err(malformed(&format!("bad magic '{magic}'")));
        }
        if dim != "2" {
            return Err(malformed(&format!("unsupported dimension '{dim}'")));
        }
        let nv: usize = parse_tok(tokens.next(), "vertex count")?;
        let nt: usize = parse_tok(tokens.next(), "triangle count")?;
        if nv > 50_000_000 || nt > 50_000_000 {
            return Err(malformed("counts out of range"));
        }
        // Grow with actual tokens; a lying header must not drive allocation.
        let mut vertices = Vec::with_capacity(nv.min(65_536));
        for i in 0..nv {
            let x: f64 = parse_tok(tokens.next(), &format!("vertex {i} x"))?;
            let y: f64 = parse_tok(tokens.next(), &format!("vertex {i} y"))?;
            if !x.is_finite() || !y.is_finite() {
                return Err(malformed(&format!("vertex {i} is not finite")));
            }
            vertices.push([x, y]);
        }
        let mut tris = Vec::with_capacity(nt.min(65_536));
        for t in 0..nt {
            let i: usize = parse_tok(tokens.next(), &format!("triangle {t} index 0"))?;
            let j: usize = parse_tok(tokens.next(), &format!("triangle {t} index 1"))?;
            let k: usize = parse_tok(tokens.next(), &format!("triangle {t} index 2"))?;
            if i == j || j == k || i == k {
                return Err(malformed(&format!("triangle {t} has repeated vertices")));
            }
            tris.push([i, j, k]);
        }
        if tokens.next().is_some() {
            return Err(malformed("trailing tokens after connectivity"));
        }
        Mesh::from_parts(vertices, tris, reorient)
    }

    pub fn read_file(path: &Path, reorient: bool) -> Result<Mesh> {
        let text = std::fs::read_to_string(path)?;
        Mesh::parse_ascii(&text, reorient)
    }
}

fn malformed(msg: &str) -> Error {
    Error::MeshFormat(msg.to_string())
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| malformed(&format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| malformed(&format!("cannot parse {what}: '{tok}'")))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn tri_det(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let p0 = vertices[tri[0]];
    let p1 = vertices[tri[1]];
    let p2 = vertices[tri[2]];
    (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
}

/// Outward unit normal of triangle `tri` along the edge (a, b).
fn outward_normal(vertices: &[[f64; 2]], tri: &[usize; 3], a: usize, b: usize) -> [f64; 2] {
    let pa = vertices[a];
    let pb = vertices[b];
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let n = [d[1] / len, -d[0] / len];
    // The vertex opposite the edge decides the sign.
    let &opp = tri.iter().find(|&&v| v != a && v != b).unwrap();
    let po = vertices[opp];
    let to_opp = [po[0] - pa[0], po[1] - pa[1]];
    if n[0] * to_opp[0] + n[1] * to_opp[1] > 0.0 {
        [-n[0], -n[1]]
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::trace::{edge_outward_normal, edge_point};

    #[test]
    fn unit_square_counts() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(m.n_elems(), 2);
        assert_eq!(m.n_facets(), 5);
        assert_eq!(m.n_boundary_facets(), 4);
        let m2 = Mesh::unit_square(2).unwrap();
        assert_eq!(m2.n_elems(), 8);
        let m4 = Mesh::unit_square(4).unwrap();
        assert!((m4.h_max - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn areas_sum_to_domain_area() {
        for n in [1usize, 3, 5] {
            let m = Mesh::unit_square(n).unwrap();
            assert!((m.total_area() - 1.0).abs() < 1e-12);
        }
        let r = Mesh::reference_triangle().unwrap();
        assert!((r.total_area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn refine_quadruples_elements_and_halves_h() {
        let m = Mesh::unit_square(1).unwrap();
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.n_elems(), 8);
        assert!((r.h_max - 0.5 * m.h_max).abs() < 1e-15);
        assert_eq!(r.n_boundary_facets(), 2 * m.n_boundary_facets());
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        // Congruent children preserve shape regularity exactly.
        assert!((r.shape_ratio_max - m.shape_ratio_max).abs() < 1e-12);
    }

    #[test]
    fn interior_facets_have_two_elements() {
        let m = Mesh::unit_square(3).unwrap();
        for f in &m.facets {
            if f.boundary {
                assert_eq!(f.elems.len(), 1);
            } else {
                assert_eq!(f.elems.len(), 2);
            }
        }
        for aff in &m.affine {
            assert!(aff.det > 0.0);
        }
        assert!(m.shape_ratio_max < SHAPE_RATIO_WARN);
    }

    #[test]
    fn facet_normal_convention() {
        let m = Mesh::unit_square(2).unwrap();
        for f in &m.facets {
            if f.boundary {
                // Outward on the unit square boundary.
                let mid = [
                    0.5 * (m.vertices[f.a][0] + m.vertices[f.b][0]),
                    0.5 * (m.vertices[f.a][1] + m.vertices[f.b][1]),
                ];
                let outward = [mid[0] - 0.5, mid[1] - 0.5];
                assert!(f.normal[0] * outward[0] + f.normal[1] * outward[1] > 0.0);
            }
        }
        // Interior facets: the two adjacent elements see opposite signs.
        for (t, uses) in m.tri_facets.iter().enumerate() {
            for u in uses {
                let f = &m.facets[u.facet];
                if !f.boundary {
                    let other = f.elems.iter().find(|&&e| e != t).unwrap();
                    let ou = m.tri_facets[*other]
                        .iter()
                        .find(|v| v.facet == u.facet)
                        .unwrap();
                    assert_eq!(u.sign * ou.sign, -1.0);
                } else {
                    assert_eq!(u.sign, 1.0);
                }
            }
        }
    }

    #[test]
    fn roundtrip_through_ascii() {
        let m = Mesh::unit_square(3).unwrap();
        let text = m.to_string_ascii();
        let m2 = Mesh::parse_ascii(&text, false).unwrap();
        assert_eq!(m.tris, m2.tris);
        assert_eq!(m.vertices, m2.vertices);
    }

    #[test]
    fn nonmanifold_is_rejected() {
        // Facet (0,1) shared by three triangles.
        let text = "dpgmesh 2\n5 3\n0 0\n1 0\n0 1\n0.5 -1\n-0.5 0.5\n0 1 2\n0 3 1\n0 1 4\n";
        match Mesh::parse_ascii(text, true) {
            Err(Error::NonManifold(0, 1)) => {}
            other => panic!("expected NonManifold, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_triangle_reoriented_or_rejected() {
        let text = "dpgmesh 2\n3 1\n0 0\n1 0\n0 1\n0 2 1\n";
        assert!(matches!(
            Mesh::parse_ascii(text, false),
            Err(Error::InvertedElement(0, _))
        ));
        let m = Mesh::parse_ascii(text, true).unwrap();
        assert!(m.affine[0].det > 0.0);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        assert!(Mesh::parse_ascii("", false).is_err());
        assert!(Mesh::parse_ascii("notamesh 2\n0 0\n", false).is_err());
        assert!(Mesh::parse_ascii("dpgmesh 3\n0 0\n", false).is_err());
        assert!(Mesh::parse_ascii("dpgmesh 2\n3 1\n0 0\n1 0\n0 1\n0 1 2\nextra", false).is_err());
        assert!(Mesh::parse_ascii("dpgmesh 2\n3 1\n0 0\n1 0\nnan 1\n0 1 2\n", false).is_err());
    }

    #[test]
    fn piola_preserves_facet_flux_integrals() {
        // int_F (tau . n_out) mu ds = int_E (tau^ . n^_out) mu dt for the
        // H(div) Piola transform, edge by edge.
        let m = Mesh::unit_square(2).unwrap();
        let rule = crate::refelem::edge_rule(12).unwrap();
        let tau_hat = |x: f64, y: f64| [x * x + 0.3 * y, x * y - 1.0];
        for elem in [0usize, 3, 5] {
            let pk = m.piola(elem);
            for e in 0..3 {
                let fu = m.tri_facets[elem][e];
                let f = &m.facets[fu.facet];
                let mu = |t: f64| 1.5 * t - 0.25;
                // Parameterize both sides by the local edge parameter.
                let phys = rule.integrate(|t| {
                    let xh = edge_point(e, t);
                    let th = tau_hat(xh[0], xh[1]);
                    let tau = pk.push_vector(th);
                    let n_out = [fu.sign * f.normal[0], fu.sign * f.normal[1]];
                    (tau[0] * n_out[0] + tau[1] * n_out[1]) * mu(t) * f.length
                });
                let reference = rule.integrate(|t| {
                    let xh = edge_point(e, t);
                    let th = tau_hat(xh[0], xh[1]);
                    let nh = edge_outward_normal(e);
                    let lh = crate::refelem::trace::edge_lengths()[e];
                    (th[0] * nh[0] + th[1] * nh[1]) * mu(t) * lh
                });
                assert!(
                    (phys - reference).abs() < 1e-12 * (1.0 + reference.abs()),
                    "elem {elem} edge {e}: {phys} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn piola_divergence_relation() {
        // div(Piola tau^)(G(x^)) = det(A)^{-1} div^ tau^(x^).
        let m = Mesh::unit_square(3).unwrap();
        let tau_hat = |x: f64, y: f64| [x * x * y, y * y - x];
        let div_hat = |x: f64, y: f64| 2.0 * x * y + 2.0 * y;
        let elem = 7;
        let pk = m.piola(elem);
        let h = 1e-6;
        for &(xh, yh) in &[(0.21, 0.33), (0.5, 0.1), (0.05, 0.72)] {
            let x = m.affine[elem].apply([xh, yh]);
            let tau_at = |p: [f64; 2]| {
                let q = m.affine[elem].pull(p);
                pk.push_vector(tau_hat(q[0], q[1]))
            };
            let div_num = (tau_at([x[0] + h, x[1]])[0] - tau_at([x[0] - h, x[1]])[0]) / (2.0 * h)
                + (tau_at([x[0], x[1] + h])[1] - tau_at([x[0], x[1] - h])[1]) / (2.0 * h);
            let expect = div_hat(xh, yh) / m.affine[elem].det;
            assert!((div_num - expect).abs() < 1e-6 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn piola_sym_maps_symmetric_to_symmetric() {
        let m = Mesh::unit_square(2).unwrap();
        let pk = m.piola(1);
        let th = [[1.0, 0.3], [0.3, -2.0]];
        let t = pk.push_sym(th);
        assert!((t[0][1] - t[1][0]).abs() < 1e-15);
    }
}
