//! Global assembly of the condensed SPD system over free DOFs, the sparse
//! solve (LDLT by default, Jacobi-preconditioned CG as the alternative),
//! conditioning estimates, and the ASCII matrix export.
//!
//! For elasticity the global beta test scalar contributes a rank-one term:
//! S = S0 + b b^T with b the assembled beta pairing vector. S0 is stored
//! sparse; solves fold in the rank-one part by the Sherman-Morrison formula.

use crate::mesh::Mesh;
use crate::spaces::TrialDofMap;
use crate::trial_to_test::ElementOperators;
use crate::{Error, Result};
use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Cholesky,
    Cg,
}

pub struct LinearSystem {
    pub n: usize,
    /// Sparse symmetric part, full storage.
    pub mat: CsMat<f64>,
    /// Optional global rank-one part (elasticity beta row).
    pub rank_one: Option<Vec<f64>>,
    /// Free index of the global alpha DOF when present. The beta-less
    /// matrix has the exact one-dimensional kernel spanned by the
    /// compatibility direction (sigma = sI, flux = s n, alpha), which has a
    /// nonzero alpha component; pinning alpha keeps the factor base SPD.
    pub alpha_index: Option<usize>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    /// y = S x including the rank-one part.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            let mut s = 0.0;
            for (col, &v) in vec.iter() {
                s += v * x[col];
            }
            y[row] = s;
        }
        if let Some(b) = &self.rank_one {
            let dot: f64 = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
            for (yi, bi) in y.iter_mut().zip(b) {
                *yi += dot * bi;
            }
        }
        y
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    /// ASCII coordinate export of the sparse symmetric part, lower triangle.
    pub fn export_ascii(&self) -> String {
        use std::fmt::Write as _;
        let mut entries = Vec::new();
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                if col <= row {
                    entries.push((row, col, v));
                }
            }
        }
        let mut s = String::new();
        let _ = writeln!(s, "%%symmetric {} {}", self.n, entries.len());
        for (i, j, v) in entries {
            let _ = writeln!(s, "{} {} {:.16e}", i, j, v);
        }
        s
    }
}

/// Scatter the condensed element matrices into the global sparse system.
/// Constrained DOFs are eliminated (homogeneous data, rows and columns
/// dropped); triplets are pushed in deterministic element order.
pub fn assemble(
    mesh: &Mesh,
    dofmap: &TrialDofMap,
    ops: &[ElementOperators],
) -> Result<LinearSystem> {
    let n = dofmap.n_free;
    if n == 0 {
        return Err(Error::Invalid("empty free-DOF set".into()));
    }
    let mut tri = TriMat::new((n, n));
    let mut rhs = vec![0.0; n];
    let mut rank_one: Option<Vec<f64>> = None;

    for op in ops {
        let l2g = dofmap.local_to_global(mesh, op.elem);
        assert_eq!(l2g.len(), op.s.ncols(), "local block size mismatch");
        let free: Vec<Option<usize>> = l2g.iter().map(|&g| dofmap.free_of(g)).collect();
        for (i, &fi) in free.iter().enumerate() {
            let Some(gi) = fi else { continue };
            rhs[gi] += op.g_load[i];
            for (j, &fj) in free.iter().enumerate() {
                if let Some(gj) = fj {
                    tri.add_triplet(gi, gj, op.s[(i, j)]);
                }
            }
        }
        if let Some(beta) = &op.beta_row {
            let b = rank_one.get_or_insert_with(|| vec![0.0; n]);
            for (i, &fi) in free.iter().enumerate() {
                if let Some(gi) = fi {
                    b[gi] += beta[i];
                }
            }
        }
    }

    let alpha_index = dofmap.alpha.and_then(|a| dofmap.free_of(a));
    Ok(LinearSystem {
        n,
        mat: tri.to_csr(),
        rank_one,
        alpha_index,
        rhs,
    })
}

/// Sparse LDLT factorization with SPD certification.
///
/// Without a rank-one part the stored matrix is factored directly. With
/// one (elasticity), the factor base is G = S0 + theta e_a e_a^T — a single
/// diagonal pin at the alpha DOF that fills the known one-dimensional
/// kernel of S0 — and solves of S = S0 + b b^T fold in the rank-2
/// difference by the Woodbury formula.
pub struct SpdFactor {
    kernel: FactorKernel,
    /// (Y = G^{-1} [b, e_a], K2^{-1}, [b, e_a]) for the Woodbury update.
    woodbury: Option<WoodburyData>,
}

struct WoodburyData {
    y_b: Vec<f64>,
    y_a: Vec<f64>,
    b: Vec<f64>,
    alpha: usize,
    k2_inv: [[f64; 2]; 2],
}

#[allow(clippy::large_enum_variant)]
enum FactorKernel {
    /// sprs-ldl needs n > 1; hold the diagonal value directly otherwise.
    Scalar(f64),
    Ldl(LdlNumeric<f64, usize>),
}

impl FactorKernel {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            FactorKernel::Scalar(d) => vec![rhs[0] / d],
            FactorKernel::Ldl(ldl) => ldl.solve(rhs),
        }
    }
}

fn factor_base(mat: &CsMat<f64>, n: usize, pin_last: Option<usize>) -> Result<FactorKernel> {
    if n == 1 {
        let d = mat.get(0, 0).copied().unwrap_or(0.0);
        if !(d > 0.0) {
            return Err(Error::NotSpd { pivot: 0, value: d });
        }
        return Ok(FactorKernel::Scalar(d));
    }
    let ldl = match pin_last {
        None => Ldl::new()
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
            .numeric(mat.view()),
        Some(last) => {
            // The pinned DOF couples to every element, which ruins the
            // bandwidth ordering; run RCM on the substructure without it
            // and eliminate it at the very end.
            let mut tri = TriMat::new((n - 1, n - 1));
            let sub = |i: usize| if i < last { i } else { i - 1 };
            for (row, vec) in mat.outer_iterator().enumerate() {
                if row == last {
                    continue;
                }
                for (col, &v) in vec.iter() {
                    if col != last {
                        tri.add_triplet(sub(row), sub(col), v);
                    }
                }
            }
            let submat: CsMat<f64> = tri.to_csr();
            let ordering = sprs::linalg::reverse_cuthill_mckee(submat.structure_view());
            let mut perm = Vec::with_capacity(n);
            for k in 0..n - 1 {
                let old_sub = ordering.perm.at(k);
                perm.push(if old_sub < last { old_sub } else { old_sub + 1 });
            }
            perm.push(last);
            sprs_ldl::LdlSymbolic::new_perm(
                mat.view(),
                sprs::PermOwnedI::new(perm),
                sprs::SymmetryCheck::DontCheckSymmetry,
            )
            .factor(mat.view())
        }
    }
    .map_err(|_| Error::NotSpd {
        pivot: usize::MAX,
        value: 0.0,
    })?;
    // LDLT succeeds on many indefinite matrices; SPD needs D > 0.
    for (i, &d) in ldl.d().iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::NotSpd { pivot: i, value: d });
        }
    }
    Ok(FactorKernel::Ldl(ldl))
}

impl SpdFactor {
    pub fn new(sys: &LinearSystem) -> Result<SpdFactor> {
        match &sys.rank_one {
            None => Ok(SpdFactor {
                kernel: factor_base(&sys.mat, sys.n, None)?,
                woodbury: None,
            }),
            Some(b) => {
                let alpha = sys.alpha_index.ok_or_else(|| {
                    Error::Invalid("rank-one system without an alpha index".into())
                })?;
                // Pin the alpha DOF at the scale of the largest diagonal.
                let mut theta: f64 = 0.0;
                for (row, vec) in sys.mat.outer_iterator().enumerate() {
                    if let Some(&d) = vec.get(row) {
                        theta = theta.max(d.abs());
                    }
                }
                let theta = theta.max(1.0);
                let mut tri = TriMat::new((sys.n, sys.n));
                for (row, vec) in sys.mat.outer_iterator().enumerate() {
                    for (col, &v) in vec.iter() {
                        tri.add_triplet(row, col, v);
                    }
                }
                tri.add_triplet(alpha, alpha, theta);
                let g: CsMat<f64> = tri.to_csr();
                let kernel = factor_base(&g, sys.n, Some(alpha))?;

                // Woodbury: S = G + U C U^T with U = [b, e_a],
                // C = diag(1, -theta); K2 = C^{-1} + U^T G^{-1} U.
                let y_b = kernel.solve(&b[..]);
                let mut ea = vec![0.0; sys.n];
                ea[alpha] = 1.0;
                let y_a = kernel.solve(&ea);
                let ub_yb: f64 = b.iter().zip(&y_b).map(|(x, y)| x * y).sum();
                let ub_ya: f64 = b.iter().zip(&y_a).map(|(x, y)| x * y).sum();
                let ua_yb = y_b[alpha];
                let ua_ya = y_a[alpha];
                let k2 = [[1.0 + ub_yb, ub_ya], [ua_yb, -1.0 / theta + ua_ya]];
                let det = k2[0][0] * k2[1][1] - k2[0][1] * k2[1][0];
                if det.abs() < 1e-300 {
                    return Err(Error::NotSpd {
                        pivot: usize::MAX,
                        value: det,
                    });
                }
                let k2_inv = [
                    [k2[1][1] / det, -k2[0][1] / det],
                    [-k2[1][0] / det, k2[0][0] / det],
                ];
                Ok(SpdFactor {
                    kernel,
                    woodbury: Some(WoodburyData {
                        y_b,
                        y_a,
                        b: b.clone(),
                        alpha,
                        k2_inv,
                    }),
                })
            }
        }
    }

    /// Solve S x = rhs (including any rank-one part).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.kernel.solve(rhs);
        if let Some(w) = &self.woodbury {
            let ub: f64 = w.b.iter().zip(&x).map(|(bi, ti)| bi * ti).sum();
            let ua = x[w.alpha];
            let c0 = w.k2_inv[0][0] * ub + w.k2_inv[0][1] * ua;
            let c1 = w.k2_inv[1][0] * ub + w.k2_inv[1][1] * ua;
            for ((xi, yb), ya) in x.iter_mut().zip(&w.y_b).zip(&w.y_a) {
                *xi -= c0 * yb + c1 * ya;
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Solution {
    pub residual: f64,
    pub iterations: usize,
}

/// Direct sparse Cholesky solve; the relative residual is checked against
/// 1e-10 and reported.
pub fn solve_spd(sys: &LinearSystem) -> Result<(Vec<f64>, Solution)> {
    let factor = SpdFactor::new(sys)?;
    let x = factor.solve(&sys.rhs);
    let res = relative_residual(sys, &x);
    Ok((
        x,
        Solution {
            residual: res,
            iterations: 1,
        },
    ))
}

/// Jacobi-preconditioned conjugate gradients on the full operator.
pub fn solve_cg(sys: &LinearSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Solution)> {
    let n = sys.n;
    let mut diag = vec![0.0; n];
    for (row, vec) in sys.mat.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            if col == row {
                diag[row] += v;
            }
        }
    }
    if let Some(b) = &sys.rank_one {
        for (d, bi) in diag.iter_mut().zip(b) {
            *d += bi * bi;
        }
    }
    for (i, d) in diag.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::NotSpd {
                pivot: i,
                value: *d,
            });
        }
    }

    let b_norm = norm2(&sys.rhs);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            Solution {
                residual: 0.0,
                iterations: 0,
            },
        ));
    }
    let mut x = vec![0.0; n];
    let mut r = sys.rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let ap = sys.apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * b_norm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = relative_residual(sys, &x);
    if res > tol * 10.0 {
        return Err(Error::NoConvergence {
            iters: iterations,
            last: res,
        });
    }
    Ok((
        x,
        Solution {
            residual: res,
            iterations,
        },
    ))
}

pub fn relative_residual(sys: &LinearSystem, x: &[f64]) -> f64 {
    let ax = sys.apply(x);
    let mut num = 0.0;
    for i in 0..sys.n {
        num += (ax[i] - sys.rhs[i]).powi(2);
    }
    let den = norm2(&sys.rhs);
    if den == 0.0 {
        num.sqrt()
    } else {
        num.sqrt() / den
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub kappa: f64,
    pub iters_max: usize,
    pub iters_min: usize,
    pub converged: bool,
}

/// lambda_max by power iteration (1e-6 relative), lambda_min by inverse
/// iteration with the factorization; kappa is their ratio.
pub fn condition_estimate(sys: &LinearSystem) -> Result<ConditionEstimate> {
    let factor = SpdFactor::new(sys)?;
    condition_estimate_with(sys, &factor)
}

pub fn condition_estimate_with(
    sys: &LinearSystem,
    factor: &SpdFactor,
) -> Result<ConditionEstimate> {
    let n = sys.n;
    let tol = 1e-6;
    let cap = 50_000;
    let start = |seed: usize| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 + ((i * 31 + seed * 17) % 97) as f64 / 97.0)
            .collect()
    };

    // Power iteration for lambda_max.
    let mut x = start(1);
    normalize(&mut x);
    let mut lambda_max = 0.0;
    let mut iters_max = 0;
    let mut conv_max = false;
    for _ in 0..cap {
        iters_max += 1;
        let mut y = sys.apply(&x);
        let lam = dot(&x, &y);
        let ny = norm2(&y);
        if ny == 0.0 {
            lambda_max = 0.0;
            break;
        }
        for v in y.iter_mut() {
            *v /= ny;
        }
        let delta = (lam - lambda_max).abs();
        lambda_max = lam;
        x = y;
        if delta <= tol * lambda_max.abs() && iters_max > 3 {
            conv_max = true;
            break;
        }
    }

    // Inverse iteration for lambda_min.
    let mut x = start(2);
    normalize(&mut x);
    let mut lambda_min = 0.0;
    let mut iters_min = 0;
    let mut conv_min = false;
    for _ in 0..cap {
        iters_min += 1;
        let mut y = factor.solve(&x);
        // Rayleigh quotient of S on the normalized iterate.
        let ny = norm2(&y);
        for v in y.iter_mut() {
            *v /= ny;
        }
        let sy = sys.apply(&y);
        let lam = dot(&y, &sy);
        let delta = (lam - lambda_min).abs();
        lambda_min = lam;
        x = y;
        if delta <= tol * lambda_min.abs() && iters_min > 3 {
            conv_min = true;
            break;
        }
    }

    let converged = conv_max && conv_min;
    let est = ConditionEstimate {
        lambda_max,
        lambda_min,
        kappa: lambda_max / lambda_min,
        iters_max,
        iters_min,
        converged,
    };
    if !converged {
        return Err(Error::NoConvergence {
            iters: iters_max.max(iters_min),
            last: est.kappa,
        });
    }
    Ok(est)
}

/// Dense verification oracle: scatter B_K^T G_K^{-1} B_K with an explicit
/// inverse, plus the global rank-one beta part, into a dense matrix.
pub fn dense_oracle_matrix(
    mesh: &Mesh,
    dofmap: &TrialDofMap,
    grams: &[crate::forms::LocalGram],
    blocks: &[crate::forms::LocalFormBlocks],
) -> DMatrix<f64> {
    let n = dofmap.n_free;
    let mut s = DMatrix::<f64>::zeros(n, n);
    let mut beta_global = vec![0.0; n];
    let mut has_beta = false;
    for (lg, lb) in grams.iter().zip(blocks) {
        let g_inv = lg.g.clone().try_inverse().expect("local Gram invertible");
        let sk = lb.b.transpose() * g_inv * &lb.b;
        let l2g = dofmap.local_to_global(mesh, lb.elem);
        for (i, &gi) in l2g.iter().enumerate() {
            let Some(fi) = dofmap.free_of(gi) else {
                continue;
            };
            for (j, &gj) in l2g.iter().enumerate() {
                if let Some(fj) = dofmap.free_of(gj) {
                    s[(fi, fj)] += sk[(i, j)];
                }
            }
            if let Some(beta) = &lb.beta_row {
                has_beta = true;
                beta_global[fi] += beta[i];
            }
        }
    }
    if has_beta {
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += beta_global[i] * beta_global[j];
            }
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm2(a);
    for v in a.iter_mut() {
        *v /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{poisson, ElementKit};
    use crate::spaces::{ProblemKind, TestLayout, TestMode, TrialDofMap};
    use crate::trial_to_test::trial_to_test_local;

    fn poisson_system(
        n: usize,
        p: usize,
        r: usize,
        f: &dyn Fn(f64, f64) -> f64,
    ) -> (
        Mesh,
        TrialDofMap,
        LinearSystem,
        Vec<crate::forms::LocalGram>,
        Vec<crate::forms::LocalFormBlocks>,
    ) {
        let mesh = if n == 0 {
            Mesh::reference_triangle().unwrap()
        } else {
            Mesh::unit_square(n).unwrap()
        };
        let layout = TestLayout::build(p, TestMode::Uniform(r), ProblemKind::Poisson).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let dofmap = TrialDofMap::build(&mesh, p, ProblemKind::Poisson);
        let mut grams = Vec::new();
        let mut blocks = Vec::new();
        let mut ops = Vec::new();
        for e in 0..mesh.n_elems() {
            let lb = poisson::local_form_blocks(&kit, &mesh, e, f);
            let lg = poisson::local_gram(&kit, &mesh, e).unwrap();
            ops.push(trial_to_test_local(&lg, &lb).unwrap());
            grams.push(lg);
            blocks.push(lb);
        }
        let sys = assemble(&mesh, &dofmap, &ops).unwrap();
        (mesh, dofmap, sys, grams, blocks)
    }

    #[test]
    fn one_element_system_is_6x6_spd() {
        let (_, dofmap, sys, _, _) = poisson_system(0, 0, 2, &|_, _| 1.0);
        assert_eq!(dofmap.n_free, 6);
        assert_eq!(sys.n, 6);
        assert!(SpdFactor::new(&sys).is_ok());
    }

    #[test]
    fn sparse_assembly_matches_dense_oracle() {
        let (mesh, dofmap, sys, grams, blocks) = poisson_system(1, 0, 2, &|_, _| 1.0);
        let dense = dense_oracle_matrix(&mesh, &dofmap, &grams, &blocks);
        let mut max_diff: f64 = 0.0;
        let scale = dense.abs().max();
        let sparse_dense = sys.mat.to_dense();
        for i in 0..sys.n {
            for j in 0..sys.n {
                max_diff = max_diff.max((sparse_dense[[i, j]] - dense[(i, j)]).abs());
            }
        }
        assert!(max_diff <= 1e-12 * scale, "diff {max_diff:.3e}");
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let (_, _, sys, _, _) = poisson_system(2, 1, 3, &|_, _| 1.0);
        let d = sys.mat.to_dense();
        let mut asym: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..sys.n {
            for j in 0..sys.n {
                asym = asym.max((d[[i, j]] - d[[j, i]]).abs());
                scale = scale.max(d[[i, j]].abs());
            }
        }
        assert!(asym <= 1e-12 * scale);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let (_, _, sys, _, _) = poisson_system(2, 0, 2, &|_, _| 0.0);
        let (x, sol) = solve_spd(&sys).unwrap();
        assert!(x.iter().all(|&v| v.abs() < 1e-14));
        assert!(sol.residual < 1e-10);
        let (xc, _) = solve_cg(&sys, 1e-12, 10_000).unwrap();
        assert!(xc.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn cg_and_direct_agree() {
        let (_, _, sys, _, _) = poisson_system(4, 0, 2, &|x, y| (x + y).sin());
        let (xd, sol) = solve_spd(&sys).unwrap();
        assert!(sol.residual <= 1e-10, "residual {:.3e}", sol.residual);
        let (xc, _) = solve_cg(&sys, 1e-13, 50_000).unwrap();
        let num: f64 = xd
            .iter()
            .zip(&xc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = xd.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den <= 1e-8, "cross-solver diff {:.3e}", num / den);
    }

    #[test]
    fn condition_of_trivial_matrices() {
        // 1x1 [c] has kappa 1; diag(1,4) has kappa 4.
        let mut t = TriMat::new((1, 1));
        t.add_triplet(0, 0, 3.5);
        let sys = LinearSystem {
            n: 1,
            mat: t.to_csr(),
            rank_one: None,
            alpha_index: None,
            rhs: vec![1.0],
        };
        let est = condition_estimate(&sys).unwrap();
        assert!((est.kappa - 1.0).abs() < 1e-9);

        let mut t = TriMat::new((2, 2));
        t.add_triplet(0, 0, 1.0);
        t.add_triplet(1, 1, 4.0);
        let sys = LinearSystem {
            n: 2,
            mat: t.to_csr(),
            rank_one: None,
            alpha_index: None,
            rhs: vec![1.0, 1.0],
        };
        let est = condition_estimate(&sys).unwrap();
        assert!((est.kappa - 4.0).abs() < 1e-5, "kappa {}", est.kappa);
        assert!((est.lambda_max - 4.0).abs() < 1e-5);
        assert!((est.lambda_min - 1.0).abs() < 1e-5);
    }

    #[test]
    fn non_spd_is_reported_with_pivot() {
        let mut t = TriMat::new((2, 2));
        t.add_triplet(0, 0, 1.0);
        t.add_triplet(1, 1, -2.0);
        let sys = LinearSystem {
            n: 2,
            mat: t.to_csr(),
            rank_one: None,
            alpha_index: None,
            rhs: vec![1.0, 1.0],
        };
        match SpdFactor::new(&sys) {
            Err(Error::NotSpd { value, .. }) => assert!(value < 0.0),
            other => panic!("expected NotSpd, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn export_has_header_and_lower_triangle() {
        let (_, _, sys, _, _) = poisson_system(1, 0, 2, &|_, _| 1.0);
        let text = sys.export_ascii();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("%%symmetric 11 "));
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(toks.len(), 3);
            let i: usize = toks[0].parse().unwrap();
            let j: usize = toks[1].parse().unwrap();
            assert!(j <= i);
        }
    }

    #[test]
    fn rank_one_solve_matches_dense() {
        // Random small SPD + rank-one, Sherman-Morrison against dense solve.
        let n = 8;
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 2.0 + i as f64);
            if i + 1 < n {
                t.add_triplet(i, i + 1, -0.5);
                t.add_triplet(i + 1, i, -0.5);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| 0.3 * (i as f64 + 1.0).sin()).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 - 2.5).cos()).collect();
        let sys = LinearSystem {
            n,
            mat: t.to_csr(),
            rank_one: Some(b.clone()),
            alpha_index: Some(n - 1),
            rhs: rhs.clone(),
        };
        let factor = SpdFactor::new(&sys).unwrap();
        let x = factor.solve(&rhs);

        let mut dense = DMatrix::<f64>::zeros(n, n);
        for (row, vec) in sys.mat.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                dense[(row, col)] = v;
            }
        }
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] += b[i] * b[j];
            }
        }
        let xd = dense
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&rhs))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-11, "{} vs {}", x[i], xd[i]);
        }
    }
}
