//! Global degree-of-freedom numbering for the trial space and the layout
//! of the broken test space.
//!
//! All-DOF order: element sigma/u blocks (elements ascending), facet flux
//! blocks (facets ascending), vertex trace values, facet trace edge modes,
//! then the global alpha scalar for elasticity. Trace DOFs on the domain
//! boundary are constrained to zero; the free numbering skips them.

use crate::mesh::Mesh;
use crate::refelem::dim_p;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Poisson,
    Elasticity,
}

impl ProblemKind {
    pub fn sigma_comps(self) -> usize {
        match self {
            ProblemKind::Poisson => 2,
            ProblemKind::Elasticity => 4,
        }
    }

    pub fn u_comps(self) -> usize {
        match self {
            ProblemKind::Poisson => 1,
            ProblemKind::Elasticity => 2,
        }
    }

    /// Traces and fluxes are scalar for Poisson, vector for elasticity.
    pub fn skel_comps(self) -> usize {
        match self {
            ProblemKind::Poisson => 1,
            ProblemKind::Elasticity => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialDofMap {
    pub kind: ProblemKind,
    pub p: usize,
    pub p_dim: usize,
    sigma_offset: Vec<usize>,
    u_offset: Vec<usize>,
    flux_offset: Vec<usize>,
    trace_vertex_base: usize,
    trace_edge_offset: Vec<usize>,
    pub alpha: Option<usize>,
    pub n_all: usize,
    pub n_free: usize,
    pub constrained: Vec<bool>,
    free_index: Vec<Option<usize>>,
}

impl TrialDofMap {
    pub fn build(mesh: &Mesh, p: usize, kind: ProblemKind) -> TrialDofMap {
        let p_dim = dim_p(p);
        let sc = kind.sigma_comps();
        let uc = kind.u_comps();
        let kc = kind.skel_comps();
        let ne = mesh.n_elems();
        let nf = mesh.n_facets();
        let nv = mesh.vertices.len();

        let mut next = 0;
        let mut sigma_offset = Vec::with_capacity(ne);
        let mut u_offset = Vec::with_capacity(ne);
        for _ in 0..ne {
            sigma_offset.push(next);
            next += sc * p_dim;
            u_offset.push(next);
            next += uc * p_dim;
        }
        let mut flux_offset = Vec::with_capacity(nf);
        for _ in 0..nf {
            flux_offset.push(next);
            next += kc * (p + 1);
        }
        let trace_vertex_base = next;
        next += kc * nv;
        let mut trace_edge_offset = Vec::with_capacity(nf);
        for _ in 0..nf {
            trace_edge_offset.push(next);
            next += kc * p;
        }
        let alpha = match kind {
            ProblemKind::Poisson => None,
            ProblemKind::Elasticity => {
                let a = next;
                next += 1;
                Some(a)
            }
        };
        let n_all = next;

        // Homogeneous Dirichlet data: constrain trace DOFs at boundary
        // vertices and trace edge modes on boundary facets.
        let mut constrained = vec![false; n_all];
        for (v, &on_boundary) in mesh.boundary_vertex.iter().enumerate() {
            if on_boundary {
                for c in 0..kc {
                    constrained[trace_vertex_base + v * kc + c] = true;
                }
            }
        }
        for (f, facet) in mesh.facets.iter().enumerate() {
            if facet.boundary {
                for k in 0..p {
                    for c in 0..kc {
                        constrained[trace_edge_offset[f] + k * kc + c] = true;
                    }
                }
            }
        }

        let mut free_index = vec![None; n_all];
        let mut n_free = 0;
        for (g, &fixed) in constrained.iter().enumerate() {
            if !fixed {
                free_index[g] = Some(n_free);
                n_free += 1;
            }
        }

        TrialDofMap {
            kind,
            p,
            p_dim,
            sigma_offset,
            u_offset,
            flux_offset,
            trace_vertex_base,
            trace_edge_offset,
            alpha,
            n_all,
            n_free,
            constrained,
            free_index,
        }
    }

    #[inline]
    pub fn free_of(&self, all_dof: usize) -> Option<usize> {
        self.free_index[all_dof]
    }

    pub fn sigma_dof(&self, elem: usize, scalar: usize, comp: usize) -> usize {
        self.sigma_offset[elem] + scalar * self.kind.sigma_comps() + comp
    }

    pub fn u_dof(&self, elem: usize, scalar: usize, comp: usize) -> usize {
        self.u_offset[elem] + scalar * self.kind.u_comps() + comp
    }

    pub fn flux_dof(&self, facet: usize, mode: usize, comp: usize) -> usize {
        self.flux_offset[facet] + mode * self.kind.skel_comps() + comp
    }

    pub fn trace_vertex_dof(&self, vertex: usize, comp: usize) -> usize {
        self.trace_vertex_base + vertex * self.kind.skel_comps() + comp
    }

    pub fn trace_edge_dof(&self, facet: usize, mode: usize, comp: usize) -> usize {
        self.trace_edge_offset[facet] + mode * self.kind.skel_comps() + comp
    }

    /// All-DOF indices touching element `elem`, in the canonical local
    /// column order of the element form blocks: sigma, u, trace vertex
    /// modes, trace edge modes, flux modes, then alpha.
    pub fn local_to_global(&self, mesh: &Mesh, elem: usize) -> Vec<usize> {
        let sc = self.kind.sigma_comps();
        let uc = self.kind.u_comps();
        let kc = self.kind.skel_comps();
        let mut out = Vec::with_capacity(self.n_local());
        for s in 0..self.p_dim {
            for c in 0..sc {
                out.push(self.sigma_dof(elem, s, c));
            }
        }
        for s in 0..self.p_dim {
            for c in 0..uc {
                out.push(self.u_dof(elem, s, c));
            }
        }
        for lv in 0..3 {
            let g = mesh.tris[elem][lv];
            for c in 0..kc {
                out.push(self.trace_vertex_dof(g, c));
            }
        }
        for le in 0..3 {
            let f = mesh.tri_facets[elem][le].facet;
            for k in 0..self.p {
                for c in 0..kc {
                    out.push(self.trace_edge_dof(f, k, c));
                }
            }
        }
        for le in 0..3 {
            let f = mesh.tri_facets[elem][le].facet;
            for k in 0..=self.p {
                for c in 0..kc {
                    out.push(self.flux_dof(f, k, c));
                }
            }
        }
        if let Some(a) = self.alpha {
            out.push(a);
        }
        out
    }

    /// Number of local trial columns per element.
    pub fn n_local(&self) -> usize {
        let sc = self.kind.sigma_comps();
        let uc = self.kind.u_comps();
        let kc = self.kind.skel_comps();
        let mut n = (sc + uc) * self.p_dim;
        n += kc * (3 + 3 * self.p); // traces on the element boundary
        n += kc * 3 * (self.p + 1); // fluxes
        if self.alpha.is_some() {
            n += 1;
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    Uniform(usize),
    /// (r_tau, r_v) = (p + 2, p + N); the two coincide at N = 2.
    Split,
}

/// Per-element layout of the discontinuous test space.
#[derive(Debug, Clone, Copy)]
pub struct TestLayout {
    pub kind: ProblemKind,
    pub p: usize,
    pub r_tau: usize,
    pub r_v: usize,
}

impl TestLayout {
    pub fn build(p: usize, mode: TestMode, kind: ProblemKind) -> Result<TestLayout> {
        let min = p + 2;
        let (r_tau, r_v) = match mode {
            TestMode::Uniform(r) => {
                if r < min {
                    return Err(Error::EnrichmentTooSmall { p, r, min });
                }
                (r, r)
            }
            TestMode::Split => (p + 2, p + 2),
        };
        Ok(TestLayout {
            kind,
            p,
            r_tau,
            r_v,
        })
    }

    /// Test hook: bypasses the r >= p + N validation.
    #[doc(hidden)]
    pub fn unvalidated(p: usize, r: usize, kind: ProblemKind) -> TestLayout {
        TestLayout {
            kind,
            p,
            r_tau: r,
            r_v: r,
        }
    }

    pub fn tau_comps(&self) -> usize {
        match self.kind {
            ProblemKind::Poisson => 2,
            ProblemKind::Elasticity => 3, // symmetric matrices
        }
    }

    pub fn v_comps(&self) -> usize {
        match self.kind {
            ProblemKind::Poisson => 1,
            ProblemKind::Elasticity => 2,
        }
    }

    pub fn tau_dim(&self) -> usize {
        self.tau_comps() * dim_p(self.r_tau)
    }

    pub fn v_dim(&self) -> usize {
        self.v_comps() * dim_p(self.r_v)
    }

    /// Skew-matrix block, degree p; elasticity only.
    pub fn q_dim(&self) -> usize {
        match self.kind {
            ProblemKind::Poisson => 0,
            ProblemKind::Elasticity => dim_p(self.p),
        }
    }

    /// Per-element test-space cardinality (the global beta scalar for
    /// elasticity lives outside the element blocks).
    pub fn n_test(&self) -> usize {
        self.tau_dim() + self.v_dim() + self.q_dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_element_poisson_p0_counts() {
        let mesh = Mesh::reference_triangle().unwrap();
        let map = TrialDofMap::build(&mesh, 0, ProblemKind::Poisson);
        // sigma 2, u 1, trace vertex 3 (all constrained), flux 3.
        assert_eq!(map.n_all, 2 + 1 + 3 + 3);
        assert_eq!(map.n_free, 6);
        let n_constrained = map.constrained.iter().filter(|&&c| c).count();
        assert_eq!(n_constrained, 3);
    }

    #[test]
    fn two_element_poisson_p0_counts() {
        // Manual enumeration: sigma 4, u 2, flux 5, trace vertices 4 (all on
        // the boundary, constrained), no edge modes at p = 0: free = 11.
        let mesh = Mesh::unit_square(1).unwrap();
        let map = TrialDofMap::build(&mesh, 0, ProblemKind::Poisson);
        assert_eq!(map.n_free, 11);
    }

    #[test]
    fn interior_structure_at_p2_n2() {
        let mesh = Mesh::unit_square(2).unwrap();
        let p = 2;
        let map = TrialDofMap::build(&mesh, p, ProblemKind::Poisson);
        // Direct count: field DOFs all free, fluxes all free, traces free
        // only off the boundary.
        let p_dim = dim_p(p);
        let field = mesh.n_elems() * 3 * p_dim;
        let flux = mesh.n_facets() * (p + 1);
        let free_vertices = mesh.boundary_vertex.iter().filter(|&&b| !b).count();
        let free_edges = mesh.facets.iter().filter(|f| !f.boundary).count() * p;
        assert_eq!(map.n_free, field + flux + free_vertices + free_edges);
    }

    #[test]
    fn elasticity_appends_exactly_one_alpha() {
        let mesh = Mesh::unit_square(2).unwrap();
        let map = TrialDofMap::build(&mesh, 1, ProblemKind::Elasticity);
        assert!(map.alpha.is_some());
        assert_eq!(map.alpha.unwrap(), map.n_all - 1);
        assert!(!map.constrained[map.alpha.unwrap()]);
        // Component-wise copies of the scalar layout plus alpha: sigma has
        // 4 comps (2x the scalar 2), u/traces/fluxes 2 comps each.
        let scalar = TrialDofMap::build(&mesh, 1, ProblemKind::Poisson);
        assert_eq!(map.n_all, 2 * scalar.n_all + 1);
    }

    #[test]
    fn rebuild_is_identical() {
        let mesh = Mesh::unit_square(3).unwrap();
        let a = TrialDofMap::build(&mesh, 1, ProblemKind::Poisson);
        let b = TrialDofMap::build(&mesh, 1, ProblemKind::Poisson);
        assert_eq!(a.n_free, b.n_free);
        for e in 0..mesh.n_elems() {
            assert_eq!(a.local_to_global(&mesh, e), b.local_to_global(&mesh, e));
        }
    }

    #[test]
    fn local_to_global_has_expected_length() {
        let mesh = Mesh::unit_square(2).unwrap();
        for p in 0..=2 {
            for kind in [ProblemKind::Poisson, ProblemKind::Elasticity] {
                let map = TrialDofMap::build(&mesh, p, kind);
                for e in 0..mesh.n_elems() {
                    assert_eq!(map.local_to_global(&mesh, e).len(), map.n_local());
                }
            }
        }
    }

    #[test]
    fn test_layout_dims() {
        let tl = TestLayout::build(0, TestMode::Uniform(2), ProblemKind::Poisson).unwrap();
        assert_eq!(tl.n_test(), 12 + 6);
        let split = TestLayout::build(1, TestMode::Split, ProblemKind::Poisson).unwrap();
        assert_eq!((split.r_tau, split.r_v), (3, 3));
        assert!(matches!(
            TestLayout::build(0, TestMode::Uniform(1), ProblemKind::Poisson),
            Err(Error::EnrichmentTooSmall { p: 0, r: 1, min: 2 })
        ));
        let el = TestLayout::build(1, TestMode::Uniform(3), ProblemKind::Elasticity).unwrap();
        assert_eq!(el.n_test(), 3 * 10 + 2 * 10 + 3);
    }
}
