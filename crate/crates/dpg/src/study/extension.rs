//! Element-wise minimum-energy polynomial extensions: the computable
//! surrogates for the fractional trace and flux norms.
//!
//! Traces lift into P_{p+1}(K) minimizing the full H1(K) energy subject to
//! matching the boundary trace; fluxes lift into the degree-p
//! Raviart-Thomas space (Piola-mapped) minimizing the H(div,K) energy
//! subject to matching the normal trace. The same lifts define the
//! discrete U-norm Gram used in the operator reports.

use crate::mesh::Mesh;
use crate::refelem::quadrature::{edge_rule, quadrature_rule, QuadratureRule};
use crate::refelem::scalar::ScalarBasis;
use crate::refelem::trace::{edge_lengths, edge_outward_normal, edge_point, TraceBasis};
use crate::refelem::{dim_p, legendre_mode, monomial};
use crate::spaces::TrialDofMap;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use sprs::{CsMat, TriMat};
use std::sync::Arc;

/// Reference tables shared by all elements for one trial degree p.
pub struct LiftKit {
    pub p: usize,
    vol: QuadratureRule,
    /// Scalar-basis values/grads at volume points (degree p+1 slice).
    g_vals: DMatrix<f64>,
    g_gx: DMatrix<f64>,
    g_gy: DMatrix<f64>,
    /// Edge moment tables: edge_mom[le][dir][(k, j)] = int phi_j(x(t)) b_k(t) dt.
    edge_mom: [[DMatrix<f64>; 2]; 3],
    /// Vertex evaluations of the degree-(p+1) basis.
    vertex_vals: DMatrix<f64>,
    /// Hat-bubble moments: int (1-t) b_k and int t b_k.
    hb0: Vec<f64>,
    hb1: Vec<f64>,
    /// RT generators: values and divergences at volume points.
    n_gen: usize,
    rt_vals: [DMatrix<f64>; 2],
    rt_div: DMatrix<f64>,
    /// Normal-trace moment tables: rt_mom[le][dir][(j, g)] =
    /// int (gen_g . n_out)(x(t)) mu_j(t) dt.
    rt_mom: [[DMatrix<f64>; 2]; 3],
}

impl LiftKit {
    pub fn new(p: usize) -> Result<Self> {
        let d = p + 1;
        let scalar = Arc::new(ScalarBasis::orthonormal(d)?);
        let trace = TraceBasis::build(p)?;
        let q = 2 * (p + 2) + 2;
        let vol = quadrature_rule(q)?;
        let edge = edge_rule(q)?;
        let n1 = dim_p(d);

        let [g_vals, g_gx, g_gy] = scalar.tabulate_grad(n1, &vol);

        let mut vertex_vals = DMatrix::zeros(3, n1);
        for (lv, v) in crate::refelem::trace::VERTS.iter().enumerate() {
            let vals = scalar.eval(n1, v[0], v[1]);
            for j in 0..n1 {
                vertex_vals[(lv, j)] = vals[j];
            }
        }

        let mut edge_mom: [[DMatrix<f64>; 2]; 3] = Default::default();
        for le in 0..3 {
            for dir in 0..2 {
                let mut m = DMatrix::zeros(p, n1);
                for (qi, &t) in edge.points.iter().enumerate() {
                    let tl = if dir == 0 { t } else { 1.0 - t };
                    let xh = edge_point(le, tl);
                    let vals = scalar.eval(n1, xh[0], xh[1]);
                    for k in 0..p {
                        let bk = trace.bubble(k, t) * edge.weights[qi];
                        for j in 0..n1 {
                            m[(k, j)] += bk * vals[j];
                        }
                    }
                }
                edge_mom[le][dir] = m;
            }
        }

        let mut hb0 = vec![0.0; p];
        let mut hb1 = vec![0.0; p];
        for k in 0..p {
            hb0[k] = edge.integrate(|t| (1.0 - t) * trace.bubble(k, t));
            hb1[k] = edge.integrate(|t| t * trace.bubble(k, t));
        }

        // RT_p generators: orthonormal scalars of degree p times e_c, plus
        // centered position times homogeneous centered monomials of exact
        // degree p.
        let p_dim = dim_p(p);
        let n_gen = 2 * p_dim + (p + 1);
        let homog: Vec<(usize, usize)> = (0..=p).map(|i| (p - i, i)).collect();
        let gen_val = |g: usize, x: f64, y: f64| -> [f64; 2] {
            if g < 2 * p_dim {
                let (s, c) = (g / 2, g % 2);
                let v = scalar.eval(p_dim.max(s + 1), x, y)[s];
                if c == 0 {
                    [v, 0.0]
                } else {
                    [0.0, v]
                }
            } else {
                let (i, j) = homog[g - 2 * p_dim];
                let (xc, yc) = (x - monomial::CENTER, y - monomial::CENTER);
                let m = xc.powi(i as i32) * yc.powi(j as i32);
                [xc * m, yc * m]
            }
        };
        let gen_div = |g: usize, x: f64, y: f64| -> f64 {
            if g < 2 * p_dim {
                let (s, c) = (g / 2, g % 2);
                let (_, grads) = scalar.eval_grad(p_dim.max(s + 1), x, y);
                grads[s][c]
            } else {
                let (i, j) = homog[g - 2 * p_dim];
                let (xc, yc) = (x - monomial::CENTER, y - monomial::CENTER);
                (p as f64 + 2.0) * xc.powi(i as i32) * yc.powi(j as i32)
            }
        };

        let mut rt_vals = [
            DMatrix::zeros(vol.len(), n_gen),
            DMatrix::zeros(vol.len(), n_gen),
        ];
        let mut rt_div = DMatrix::zeros(vol.len(), n_gen);
        for qi in 0..vol.len() {
            let [x, y] = vol.xy(qi);
            for g in 0..n_gen {
                let v = gen_val(g, x, y);
                rt_vals[0][(qi, g)] = v[0];
                rt_vals[1][(qi, g)] = v[1];
                rt_div[(qi, g)] = gen_div(g, x, y);
            }
        }

        let mut rt_mom: [[DMatrix<f64>; 2]; 3] = Default::default();
        for le in 0..3 {
            let nh = edge_outward_normal(le);
            for dir in 0..2 {
                let mut m = DMatrix::zeros(p + 1, n_gen);
                for (qi, &t) in edge.points.iter().enumerate() {
                    let tl = if dir == 0 { t } else { 1.0 - t };
                    let xh = edge_point(le, tl);
                    for g in 0..n_gen {
                        let v = gen_val(g, xh[0], xh[1]);
                        let vn = v[0] * nh[0] + v[1] * nh[1];
                        for j in 0..=p {
                            m[(j, g)] += edge.weights[qi] * legendre_mode(j, t) * vn;
                        }
                    }
                }
                rt_mom[le][dir] = m;
            }
        }

        Ok(LiftKit {
            p,
            vol,
            g_vals,
            g_gx,
            g_gy,
            edge_mom,
            vertex_vals,
            hb0,
            hb1,
            n_gen,
            rt_vals,
            rt_div,
            rt_mom,
        })
    }

    pub fn n_trace_local(&self) -> usize {
        3 + 3 * self.p
    }

    pub fn n_flux_local(&self) -> usize {
        3 * (self.p + 1)
    }
}

/// One element's minimum-energy lifts: L maps local boundary coefficients
/// to lift coefficients, Q is the energy Gram, so the lifted energy of a
/// coefficient vector z is z^T (L^T Q L) z.
pub struct ElementLifts {
    pub grad_l: DMatrix<f64>,
    pub grad_q: DMatrix<f64>,
    pub flux_l: DMatrix<f64>,
    pub flux_q: DMatrix<f64>,
    /// Energy matrices L^T Q L.
    pub grad_w: DMatrix<f64>,
    pub flux_w: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftSolver {
    Kkt,
    NullspaceCholesky,
}

pub fn build_lifts(
    kit: &LiftKit,
    mesh: &Mesh,
    elem: usize,
    solver: LiftSolver,
) -> Result<ElementLifts> {
    let (grad_c, grad_d, grad_q) = grad_system(kit, mesh, elem);
    let grad_l = constrained_minimizer(&grad_q, &grad_c, &grad_d, solver, "trace lift")?;
    let (flux_c, flux_d, flux_q) = flux_system(kit, mesh, elem);
    let flux_l = constrained_minimizer(&flux_q, &flux_c, &flux_d, solver, "flux lift")?;
    let grad_w = symmetrize(&(grad_l.transpose() * &grad_q * &grad_l));
    let flux_w = symmetrize(&(flux_l.transpose() * &flux_q * &flux_l));
    Ok(ElementLifts {
        grad_l,
        grad_q,
        flux_l,
        flux_q,
        grad_w,
        flux_w,
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Constraint matrix, data map, and energy Gram of the H1 lift.
fn grad_system(
    kit: &LiftKit,
    mesh: &Mesh,
    elem: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = kit.p;
    let n1 = dim_p(p + 1);
    let n_tr = kit.n_trace_local();
    let n_c = 3 + 3 * p;
    let aff = &mesh.affine[elem];
    let det = aff.det;

    let mut c = DMatrix::<f64>::zeros(n_c, n1);
    let mut d = DMatrix::<f64>::zeros(n_c, n_tr);
    for lv in 0..3 {
        for j in 0..n1 {
            c[(lv, j)] = kit.vertex_vals[(lv, j)];
        }
        d[(lv, lv)] = 1.0;
    }
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let dir = if fu.forward { 0 } else { 1 };
        // Which local vertices sit at the facet's a- and b-ends.
        let (l0, l1) = (
            crate::refelem::trace::EDGES[le][0],
            crate::refelem::trace::EDGES[le][1],
        );
        let (la, lb) = if fu.forward { (l0, l1) } else { (l1, l0) };
        for k in 0..p {
            let row = 3 + le * p + k;
            for j in 0..n1 {
                c[(row, j)] = kit.edge_mom[le][dir][(k, j)];
            }
            d[(row, la)] += kit.hb0[k];
            d[(row, lb)] += kit.hb1[k];
            d[(row, 3 + le * p + k)] += 1.0;
        }
    }

    // Mapped H1 energy.
    let ait = [
        [aff.a_inv[0][0], aff.a_inv[1][0]],
        [aff.a_inv[0][1], aff.a_inv[1][1]],
    ];
    let mut met = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            for a in 0..2 {
                met[k][l] += ait[a][k] * ait[a][l];
            }
        }
    }
    let mut q = DMatrix::<f64>::zeros(n1, n1);
    for qi in 0..kit.vol.len() {
        let w = kit.vol.weights[qi] * det;
        for i in 0..n1 {
            for j in 0..n1 {
                let grads = met[0][0] * kit.g_gx[(qi, i)] * kit.g_gx[(qi, j)]
                    + met[0][1] * kit.g_gx[(qi, i)] * kit.g_gy[(qi, j)]
                    + met[1][0] * kit.g_gy[(qi, i)] * kit.g_gx[(qi, j)]
                    + met[1][1] * kit.g_gy[(qi, i)] * kit.g_gy[(qi, j)];
                q[(i, j)] += w * (kit.g_vals[(qi, i)] * kit.g_vals[(qi, j)] + grads);
            }
        }
    }
    (c, d, q)
}

/// Constraint matrix, data map, and energy Gram of the H(div) lift.
fn flux_system(
    kit: &LiftKit,
    mesh: &Mesh,
    elem: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = kit.p;
    let n_gen = kit.n_gen;
    let n_fx = kit.n_flux_local();
    let aff = &mesh.affine[elem];
    let det = aff.det;
    let ref_len = edge_lengths();

    let mut c = DMatrix::<f64>::zeros(n_fx, n_gen);
    let mut d = DMatrix::<f64>::zeros(n_fx, n_fx);
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let facet = &mesh.facets[fu.facet];
        let dir = if fu.forward { 0 } else { 1 };
        let scale = fu.sign * ref_len[le] / facet.length;
        for j in 0..=p {
            let row = le * (p + 1) + j;
            for g in 0..n_gen {
                c[(row, g)] = scale * kit.rt_mom[le][dir][(j, g)];
            }
            d[(row, row)] = 1.0;
        }
    }

    // Mapped H(div) energy via the Piola transform:
    // |tau|^2 = det^{-1} |A tau^|^2, |div tau|^2 = det^{-1} |div^ tau^|^2.
    let a = aff.a;
    let mut ata = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                ata[i][j] += a[k][i] * a[k][j];
            }
        }
    }
    let mut q = DMatrix::<f64>::zeros(n_gen, n_gen);
    for qi in 0..kit.vol.len() {
        let w = kit.vol.weights[qi] / det;
        for i in 0..n_gen {
            for j in 0..n_gen {
                let mut val = kit.rt_div[(qi, i)] * kit.rt_div[(qi, j)];
                for aa in 0..2 {
                    for bb in 0..2 {
                        val += ata[aa][bb] * kit.rt_vals[aa][(qi, i)] * kit.rt_vals[bb][(qi, j)];
                    }
                }
                q[(i, j)] += w * val;
            }
        }
    }
    (c, d, q)
}

/// Minimize x^T Q x subject to C x = D z for every column z; returns the
/// matrix L with x = L z.
fn constrained_minimizer(
    q: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    solver: LiftSolver,
    what: &str,
) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let m = c.nrows();
    match solver {
        LiftSolver::Kkt => {
            let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
            kkt.view_mut((0, 0), (n, n)).copy_from(q);
            kkt.view_mut((n, 0), (m, n)).copy_from(c);
            kkt.view_mut((0, n), (n, m)).copy_from(&c.transpose());
            let mut rhs = DMatrix::<f64>::zeros(n + m, d.ncols());
            rhs.view_mut((n, 0), (m, d.ncols())).copy_from(d);
            let lu = kkt.lu();
            let sol = lu.solve(&rhs).ok_or_else(|| Error::Singular {
                context: format!("{what} KKT system"),
                sigma_min: 0.0,
            })?;
            Ok(sol.view((0, 0), (n, d.ncols())).into_owned())
        }
        LiftSolver::NullspaceCholesky => {
            // Minimum-norm particular solution + nullspace correction.
            let cct = c * c.transpose();
            let cct_inv = cct.try_inverse().ok_or_else(|| Error::Singular {
                context: format!("{what} constraint normal matrix"),
                sigma_min: 0.0,
            })?;
            let xp = c.transpose() * &cct_inv * d;
            // Nullspace of C from the small eigenvalues of C^T C.
            let ctc = c.transpose() * c;
            let eig = ctc.symmetric_eigen();
            let lam_max = eig.eigenvalues.max();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
            let null_dim = n - m;
            for &i in order[..null_dim].iter() {
                if eig.eigenvalues[i] > 1e-18 * lam_max.max(1.0) + 1e-300 {
                    // Tolerated: tiny but nonzero numerical eigenvalues.
                }
            }
            let mut z = DMatrix::<f64>::zeros(n, null_dim);
            for (col, &i) in order[..null_dim].iter().enumerate() {
                z.set_column(col, &eig.eigenvectors.column(i));
            }
            if null_dim == 0 {
                return Ok(xp);
            }
            let zqz = z.transpose() * q * &z;
            let chol = zqz.cholesky().ok_or_else(|| Error::Singular {
                context: format!("{what} reduced energy"),
                sigma_min: 0.0,
            })?;
            let rhs = -(z.transpose() * q * &xp);
            let y = chol.solve(&rhs);
            Ok(xp + z * y)
        }
    }
}

/// Per-element lifts for a whole mesh, plus the assembled discrete U-Gram.
pub struct TraceNorms {
    pub p: usize,
    pub lifts: Vec<ElementLifts>,
}

impl TraceNorms {
    pub fn build(kit: &LiftKit, mesh: &Mesh) -> Result<TraceNorms> {
        let lifts = (0..mesh.n_elems())
            .map(|e| build_lifts(kit, mesh, e, LiftSolver::Kkt))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceNorms { p: kit.p, lifts })
    }

    /// Discrete U-norm Gram over free DOFs: L2 mass for fields, summed lift
    /// energies for traces and fluxes, 1 for alpha.
    pub fn ugram(&self, mesh: &Mesh, dofmap: &TrialDofMap) -> CsMat<f64> {
        let n = dofmap.n_free;
        let mut tri = TriMat::new((n, n));
        let kc = dofmap.kind.skel_comps();
        let sc = dofmap.kind.sigma_comps();
        let uc = dofmap.kind.u_comps();
        let p = dofmap.p;

        for elem in 0..mesh.n_elems() {
            let det = mesh.affine[elem].det;
            for s in 0..dofmap.p_dim {
                for c in 0..sc {
                    if let Some(fi) = dofmap.free_of(dofmap.sigma_dof(elem, s, c)) {
                        tri.add_triplet(fi, fi, det);
                    }
                }
                for c in 0..uc {
                    if let Some(fi) = dofmap.free_of(dofmap.u_dof(elem, s, c)) {
                        tri.add_triplet(fi, fi, det);
                    }
                }
            }

            let lift = &self.lifts[elem];
            let tr_dofs = local_trace_dofs(mesh, dofmap, elem);
            let fx_dofs = local_flux_dofs(mesh, dofmap, elem);
            for c in 0..kc {
                for (i, gi) in tr_dofs.iter().enumerate() {
                    let Some(fi) = dofmap.free_of(gi + c) else {
                        continue;
                    };
                    for (j, gj) in tr_dofs.iter().enumerate() {
                        if let Some(fj) = dofmap.free_of(gj + c) {
                            tri.add_triplet(fi, fj, lift.grad_w[(i, j)]);
                        }
                    }
                }
                for (i, gi) in fx_dofs.iter().enumerate() {
                    let Some(fi) = dofmap.free_of(gi + c) else {
                        continue;
                    };
                    for (j, gj) in fx_dofs.iter().enumerate() {
                        if let Some(fj) = dofmap.free_of(gj + c) {
                            tri.add_triplet(fi, fj, lift.flux_w[(i, j)]);
                        }
                    }
                }
            }
            let _ = p;
        }
        if let Some(a) = dofmap.alpha {
            let fa = dofmap.free_of(a).expect("alpha is never constrained");
            tri.add_triplet(fa, fa, 1.0);
        }
        tri.to_csr()
    }

    /// Summed lifted energies of an all-DOF coefficient vector:
    /// (trace part, flux part), component-wise.
    pub fn energies(&self, mesh: &Mesh, dofmap: &TrialDofMap, all: &[f64]) -> (f64, f64) {
        let kc = dofmap.kind.skel_comps();
        let mut tr2 = 0.0;
        let mut fx2 = 0.0;
        for elem in 0..mesh.n_elems() {
            let lift = &self.lifts[elem];
            let tr_dofs = local_trace_dofs(mesh, dofmap, elem);
            let fx_dofs = local_flux_dofs(mesh, dofmap, elem);
            for c in 0..kc {
                let z = DVector::from_iterator(tr_dofs.len(), tr_dofs.iter().map(|&g| all[g + c]));
                tr2 += (&lift.grad_w * &z).dot(&z);
                let zf = DVector::from_iterator(fx_dofs.len(), fx_dofs.iter().map(|&g| all[g + c]));
                fx2 += (&lift.flux_w * &zf).dot(&zf);
            }
        }
        (tr2, fx2)
    }
}

/// All-DOF indices (component 0) of the local trace coefficients, in the
/// lift's ordering: 3 vertices then 3*p edge modes.
pub(crate) fn local_trace_dofs(mesh: &Mesh, dofmap: &TrialDofMap, elem: usize) -> Vec<usize> {
    let p = dofmap.p;
    let mut out = Vec::with_capacity(3 + 3 * p);
    for lv in 0..3 {
        out.push(dofmap.trace_vertex_dof(mesh.tris[elem][lv], 0));
    }
    for le in 0..3 {
        let f = mesh.tri_facets[elem][le].facet;
        for k in 0..p {
            out.push(dofmap.trace_edge_dof(f, k, 0));
        }
    }
    out
}

/// All-DOF indices (component 0) of the local flux coefficients.
pub(crate) fn local_flux_dofs(mesh: &Mesh, dofmap: &TrialDofMap, elem: usize) -> Vec<usize> {
    let p = dofmap.p;
    let mut out = Vec::with_capacity(3 * (p + 1));
    for le in 0..3 {
        let f = mesh.tri_facets[elem][le].facet;
        for k in 0..=p {
            out.push(dofmap.flux_dof(f, k, 0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::ProblemKind;

    #[test]
    fn zero_trace_lifts_to_zero() {
        let kit = LiftKit::new(1).unwrap();
        let mesh = Mesh::unit_square(1).unwrap();
        let lifts = build_lifts(&kit, &mesh, 0, LiftSolver::Kkt).unwrap();
        let z = DVector::<f64>::zeros(kit.n_trace_local());
        let e = (&lifts.grad_w * &z).dot(&z);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn kkt_and_nullspace_minimizers_agree() {
        // Dual-implementation oracle for both lift types.
        let mesh = Mesh::unit_square(2).unwrap();
        for p in 0..=2 {
            let kit = LiftKit::new(p).unwrap();
            for elem in [0usize, 5] {
                let a = build_lifts(&kit, &mesh, elem, LiftSolver::Kkt).unwrap();
                let b = build_lifts(&kit, &mesh, elem, LiftSolver::NullspaceCholesky).unwrap();
                let dg = (&a.grad_l - &b.grad_l).abs().max();
                let df = (&a.flux_l - &b.flux_l).abs().max();
                let sg = a.grad_l.abs().max().max(1.0);
                let sf = a.flux_l.abs().max().max(1.0);
                assert!(dg <= 1e-10 * sg, "p={p} elem={elem} grad diff {dg:.2e}");
                assert!(df <= 1e-10 * sf, "p={p} elem={elem} flux diff {df:.2e}");
            }
        }
    }

    #[test]
    fn lift_satisfies_trace_constraints() {
        // The lifted polynomial matches the prescribed boundary data: check
        // vertex values and flux normal-trace moments after lifting.
        let p = 1;
        let kit = LiftKit::new(p).unwrap();
        let mesh = Mesh::unit_square(2).unwrap();
        let elem = 3;
        let (c, d, _q) = grad_system(&kit, &mesh, elem);
        let lifts = build_lifts(&kit, &mesh, elem, LiftSolver::Kkt).unwrap();
        let n_tr = kit.n_trace_local();
        for col in 0..n_tr {
            let z = DVector::from_fn(n_tr, |i, _| if i == col { 1.0 } else { 0.0 });
            let x = &lifts.grad_l * &z;
            let cx = &c * &x;
            let dz = &d * &z;
            assert!((cx - dz).abs().max() < 1e-10);
        }
        let (cf, df, _qf) = flux_system(&kit, &mesh, elem);
        let n_fx = kit.n_flux_local();
        for col in 0..n_fx {
            let z = DVector::from_fn(n_fx, |i, _| if i == col { 1.0 } else { 0.0 });
            let x = &lifts.flux_l * &z;
            let cx = &cf * &x;
            let dz = &df * &z;
            assert!((cx - dz).abs().max() < 1e-10);
        }
    }

    #[test]
    fn p0_flux_lift_is_the_unique_rt0_field() {
        // RT_0 has exactly as many DOFs as constraints: the "minimizer" is
        // the interpolant, and its divergence is constant.
        let kit = LiftKit::new(0).unwrap();
        let mesh = Mesh::reference_triangle().unwrap();
        let lifts = build_lifts(&kit, &mesh, 0, LiftSolver::Kkt).unwrap();
        assert_eq!(lifts.flux_l.nrows(), 3);
        assert_eq!(lifts.flux_l.ncols(), 3);
    }

    #[test]
    fn ugram_is_spd_and_scales_with_area() {
        let mesh = Mesh::unit_square(2).unwrap();
        let dofmap = TrialDofMap::build(&mesh, 1, ProblemKind::Poisson);
        let kit = LiftKit::new(1).unwrap();
        let tn = TraceNorms::build(&kit, &mesh).unwrap();
        let m = tn.ugram(&mesh, &dofmap);
        assert_eq!(m.rows(), dofmap.n_free);
        // Field diagonal entries equal the element Jacobian.
        let fi = dofmap.free_of(dofmap.sigma_dof(0, 0, 0)).unwrap();
        let d = m.get(fi, fi).copied().unwrap();
        assert!((d - mesh.affine[0].det).abs() < 1e-14);
        // SPD via dense Cholesky at this size.
        let dense = m.to_dense();
        let nd = DMatrix::from_fn(m.rows(), m.rows(), |i, j| dense[[i, j]]);
        assert!(nd.cholesky().is_some());
    }
}
