//! Element-local matrices of the ultraweak bilinear forms and of the
//! test-space inner-product Gram.
//!
//! An [`ElementKit`] caches everything geometry-independent: the orthonormal
//! scalar table, quadrature, volume and edge tabulations, and the reference
//! integral tensors (mass, first-derivative, and stiffness-type moments).
//! Per element only the affine factors A^{-T} and det A enter, so local
//! blocks assemble from small dense contractions.
//!
//! Both trial fields and broken test functions are mapped by plain
//! composition with the inverse affine map (no h-renormalization); the test
//! space is broken, so no conformity is required of the mapping.

pub mod elasticity;
pub mod poisson;

#[cfg(test)]
pub(crate) mod elasticity_oracle;
#[cfg(test)]
pub(crate) mod poisson_oracle;

pub use elasticity::ComplianceTensor;

use crate::mesh::Mesh;
use crate::refelem::quadrature::{edge_rule, quadrature_rule, EdgeRule, QuadratureRule};
use crate::refelem::scalar::ScalarBasis;
use crate::refelem::trace::{edge_point, TraceBasis};
use crate::refelem::{dim_p, legendre_mode};
use crate::spaces::{ProblemKind, TestLayout};
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;

/// Element-local matrix of the bilinear form: rows are local test
/// functions, columns the local trial DOFs in the canonical order of
/// `TrialDofMap::local_to_global`.
#[derive(Debug, Clone)]
pub struct LocalFormBlocks {
    pub elem: usize,
    pub b: DMatrix<f64>,
    /// Elasticity: per-element slice of the global beta test row.
    pub beta_row: Option<DVector<f64>>,
    pub load: DVector<f64>,
}

/// SPD Gram of the test inner product on the local test basis, with its
/// Cholesky factor cached for the trial-to-test solves.
#[derive(Debug, Clone)]
pub struct LocalGram {
    pub elem: usize,
    pub g: DMatrix<f64>,
    pub chol: Cholesky<f64, Dyn>,
}

/// Geometry-independent data shared by all elements of one configuration.
pub struct ElementKit {
    pub kind: ProblemKind,
    pub layout: TestLayout,
    pub p: usize,
    pub d_max: usize,
    pub scalar: Arc<ScalarBasis>,
    pub trace: TraceBasis,
    pub vol: QuadratureRule,
    /// Boosted rule for the (generally non-polynomial) volume load.
    pub load_vol: QuadratureRule,
    pub edge: EdgeRule,
    /// Reference mass moments int phi_i phi_j (d_all x d_all).
    pub mass: DMatrix<f64>,
    /// ca[k][(i, j)] = int (d_k phi_i) phi_j.
    pub ca: [DMatrix<f64>; 2],
    /// kab[k][l][(i, j)] = int (d_k phi_i)(d_l phi_j).
    pub kab: [[DMatrix<f64>; 2]; 2],
    /// int phi_i over the reference triangle.
    pub intphi: DVector<f64>,
    /// Scalar values at edge quadrature points; [edge][dir] with dir = 0 for
    /// the forward (global a->b equals local) parameterization.
    pub edge_vals: [[DMatrix<f64>; 2]; 3],
    /// Trace-mode tables at the edge quadrature points in the global facet
    /// parameter: vertex hats, interior bubbles, flux Legendre modes.
    pub hat0: Vec<f64>,
    pub hat1: Vec<f64>,
    pub bubbles: DMatrix<f64>,
    pub flux_modes: DMatrix<f64>,
}

impl ElementKit {
    pub fn new(layout: TestLayout) -> Result<Self> {
        let q = 2 * layout.r_tau.max(layout.r_v).max(layout.p + 1) + 2;
        Self::with_exactness(layout, q)
    }

    pub fn with_exactness(layout: TestLayout, q: usize) -> Result<Self> {
        let p = layout.p;
        let r = layout.r_tau.max(layout.r_v);
        if q < p + r {
            return Err(Error::Invalid(format!(
                "quadrature exactness {q} is below p + r = {}",
                p + r
            )));
        }
        let d_max = r.max(p + 1);
        let scalar = Arc::new(ScalarBasis::orthonormal(d_max)?);
        let trace = TraceBasis::build(p)?;
        let vol = quadrature_rule(q)?;
        let load_vol = quadrature_rule(q.max(20))?;
        let edge = edge_rule(q)?;
        let d_all = dim_p(d_max);

        let [vals, gx, gy] = scalar.tabulate_grad(d_all, &vol);
        let w = DVector::from_column_slice(&vol.weights);
        let scale_rows = |m: &DMatrix<f64>| {
            let mut out = m.clone();
            for (i, mut row) in out.row_iter_mut().enumerate() {
                row *= w[i];
            }
            out
        };
        let wv = scale_rows(&vals);
        let mass = vals.transpose() * &wv;
        let ca = [gx.transpose() * &wv, gy.transpose() * &wv];
        let wgx = scale_rows(&gx);
        let wgy = scale_rows(&gy);
        let kab = [
            [gx.transpose() * &wgx, gx.transpose() * &wgy],
            [gy.transpose() * &wgx, gy.transpose() * &wgy],
        ];
        let intphi = wv.row_sum().transpose();

        let nq = edge.len();
        let mut edge_vals: [[DMatrix<f64>; 2]; 3] = Default::default();
        for e in 0..3 {
            for dir in 0..2 {
                let mut m = DMatrix::zeros(nq, d_all);
                for (qi, &t) in edge.points.iter().enumerate() {
                    let tt = if dir == 0 { t } else { 1.0 - t };
                    let xh = edge_point(e, tt);
                    let v = scalar.eval(d_all, xh[0], xh[1]);
                    for j in 0..d_all {
                        m[(qi, j)] = v[j];
                    }
                }
                edge_vals[e][dir] = m;
            }
        }

        let hat0: Vec<f64> = edge.points.iter().map(|&t| 1.0 - t).collect();
        let hat1: Vec<f64> = edge.points.clone();
        let mut bubbles = DMatrix::zeros(nq, p);
        for (qi, &t) in edge.points.iter().enumerate() {
            for k in 0..p {
                bubbles[(qi, k)] = trace.bubble(k, t);
            }
        }
        let mut flux_modes = DMatrix::zeros(nq, p + 1);
        for (qi, &t) in edge.points.iter().enumerate() {
            for k in 0..=p {
                flux_modes[(qi, k)] = legendre_mode(k, t);
            }
        }

        Ok(ElementKit {
            kind: layout.kind,
            layout,
            p,
            d_max,
            scalar,
            trace,
            vol,
            load_vol,
            edge,
            mass,
            ca,
            kab,
            intphi,
            edge_vals,
            hat0,
            hat1,
            bubbles,
            flux_modes,
        })
    }

    /// A^{-T} of an element as a 2x2 array indexed [row][col].
    pub(crate) fn a_inv_t(&self, mesh: &Mesh, elem: usize) -> [[f64; 2]; 2] {
        let ai = mesh.affine[elem].a_inv;
        [[ai[0][0], ai[1][0]], [ai[0][1], ai[1][1]]]
    }

    /// Local trial column layout sizes: (sigma, u, trace, flux, alpha).
    pub fn col_counts(&self) -> (usize, usize, usize, usize, usize) {
        let p_dim = dim_p(self.p);
        let sc = self.kind.sigma_comps();
        let uc = self.kind.u_comps();
        let kc = self.kind.skel_comps();
        let alpha = match self.kind {
            ProblemKind::Poisson => 0,
            ProblemKind::Elasticity => 1,
        };
        (
            sc * p_dim,
            uc * p_dim,
            kc * (3 + 3 * self.p),
            kc * 3 * (self.p + 1),
            alpha,
        )
    }

    pub fn n_cols(&self) -> usize {
        let (s, u, t, f, a) = self.col_counts();
        s + u + t + f + a
    }

    /// Trace-mode value at edge-quadrature point `qi` in the global facet
    /// parameter. Local trace modes are ordered: 3 vertex hats then 3*p
    /// edge bubbles, matching `TrialDofMap::local_to_global`. Modes live in
    /// the global parameter, so no direction flip enters here.
    #[inline]
    pub(crate) fn trace_mode_at(
        &self,
        mesh: &Mesh,
        elem: usize,
        le: usize,
        mode: usize,
        qi: usize,
    ) -> f64 {
        if mode < 3 {
            // Vertex hat: nonzero only if the vertex is an endpoint of the
            // facet; value (1 - t) at the facet's a-end, t at the b-end.
            let g = mesh.tris[elem][mode];
            let f = &mesh.facets[mesh.tri_facets[elem][le].facet];
            if f.a == g {
                self.hat0[qi]
            } else if f.b == g {
                self.hat1[qi]
            } else {
                0.0
            }
        } else {
            let m = mode - 3;
            if self.p == 0 {
                return 0.0;
            }
            let (me, k) = (m / self.p, m % self.p);
            if me != le {
                return 0.0;
            }
            self.bubbles[(qi, k)]
        }
    }
}
