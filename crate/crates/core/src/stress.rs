//! The patch-stress system: the bipartite graph Laplacian `ℒ_Γ` with its
//! pseudoinverse, the coordinate matrices `B` and `D`, and the patch-stress
//! matrix `C = D - B ℒ_Γ† Bᵀ` whose quadratic form
//! `F(S) = Tr(C S Sᵀ)` is the alignment error after the translations and
//! per-point consensus positions have been eliminated in closed form.
//!
//! Conventions (pinned by the least-squares oracle below): `B` is `md×(n+m)`
//! with row-block `i` holding `x_{k,i}` in column `k` for each incidence
//! `(k,i)`, `-Σ_k x_{k,i}` in column `n+i`, zeros elsewhere; `D` is
//! block-diagonal with `D_ii = Σ_k x_{k,i} x_{k,i}ᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::framework::PatchFramework;
use crate::linalg;
use crate::manifold::Alignment;
use crate::Result;

/// The assembled stress system for one framework.
#[derive(Debug, Clone)]
pub struct StressSystem {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    /// Incidences (point, view), in view-major order.
    pub edges: Vec<(usize, usize)>,
    /// Bipartite graph Laplacian, (n+m)×(n+m).
    pub laplacian: DMatrix<f64>,
    /// Moore-Penrose pseudoinverse of the Laplacian.
    pub laplacian_pinv: DMatrix<f64>,
    /// Second-smallest Laplacian eigenvalue (algebraic connectivity).
    pub lambda2_laplacian: f64,
    /// md×(n+m) coordinate matrix.
    pub b: DMatrix<f64>,
    /// md×md block-diagonal second-moment matrix.
    pub d_mat: DMatrix<f64>,
    /// md×md patch-stress matrix, symmetrized.
    pub c: DMatrix<f64>,
    /// Eigenvalues of C, ascending.
    pub eigs_c: DVector<f64>,
    /// Matching eigenvector columns.
    pub eigvecs_c: DMatrix<f64>,
}

impl StressSystem {
    /// `λ_{idx}(C)` with 1-based `idx`.
    pub fn eig_c(&self, idx: usize) -> f64 {
        self.eigs_c[idx - 1]
    }

    /// Rank of C with the shared spectral threshold.
    pub fn rank_c(&self) -> usize {
        linalg::rank_from_eigenvalues(&self.eigs_c, self.m * self.d)
    }

    /// Row-block `i` of `C·S` (stacked alignment), `d×d`.
    pub fn c_times(&self, s: &Alignment) -> DMatrix<f64> {
        &self.c * s.stacked()
    }
}

/// Builds the bipartite graph Laplacian and its pseudoinverse. The Laplacian
/// has vertex degrees on the diagonal (point degree = number of views
/// containing it, view degree = number of points it contains) and -1 per
/// incidence. Errors on a disconnected graph.
pub fn build_graph_laplacian(fw: &PatchFramework) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let (connected, components) = fw.connectivity();
    if !connected {
        return Err(Error::Disconnected { components });
    }
    let size = fw.n() + fw.m();
    let mut lap = DMatrix::zeros(size, size);
    for (k, i, _) in fw.edges() {
        let v = fw.n() + i;
        lap[(k, k)] += 1.0;
        lap[(v, v)] += 1.0;
        lap[(k, v)] -= 1.0;
        lap[(v, k)] -= 1.0;
    }
    let (pinv, lambda2) = linalg::pinv_connected_laplacian(&lap).ok_or_else(|| {
        Error::contract("laplacian shift failed to factor; graph connectivity is suspect")
    })?;
    Ok((lap, pinv, lambda2))
}

/// Builds the coordinate matrices `B` (md×(n+m)) and `D` (md×md).
pub fn build_patch_matrices(fw: &PatchFramework) -> (DMatrix<f64>, DMatrix<f64>) {
    let (d, n, m) = (fw.d(), fw.n(), fw.m());
    let mut b = DMatrix::zeros(m * d, n + m);
    let mut d_mat = DMatrix::zeros(m * d, m * d);
    for i in 0..m {
        let mut col_sum = DVector::zeros(d);
        for (k, x) in fw.view(i) {
            b.view_mut((i * d, *k), (d, 1)).copy_from(x);
            col_sum += x;
            let outer = x * x.transpose();
            let mut dblock = d_mat.view_mut((i * d, i * d), (d, d));
            dblock += outer;
        }
        b.view_mut((i * d, n + i), (d, 1)).copy_from(&(-col_sum));
    }
    (b, d_mat)
}

/// Builds the full stress system: Laplacian, pseudoinverse, `B`, `D`,
/// `C = D - B ℒ† Bᵀ` (symmetrized) and the eigendecomposition of `C`.
pub fn build_patch_stress(fw: &PatchFramework) -> Result<StressSystem> {
    let (laplacian, laplacian_pinv, lambda2) = build_graph_laplacian(fw)?;
    let (b, d_mat) = build_patch_matrices(fw);
    let c = &d_mat - &b * &laplacian_pinv * b.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let (eigs_c, eigvecs_c) = linalg::sym_eigen_ascending(&c);
    Ok(StressSystem {
        d: fw.d(),
        n: fw.n(),
        m: fw.m(),
        edges: fw.edges().map(|(k, i, _)| (k, i)).collect(),
        laplacian,
        laplacian_pinv,
        lambda2_laplacian: lambda2,
        b,
        d_mat,
        c,
        eigs_c,
        eigvecs_c,
    })
}

/// The alignment error `F(S) = Tr(C S Sᵀ)`, clamped at zero from below.
/// Errors when a block of `S` is not orthogonal to 1e-9 or the dimensions
/// do not match the system.
pub fn alignment_error(sys: &StressSystem, s: &Alignment) -> Result<f64> {
    check_alignment(sys, s)?;
    let stacked = s.stacked();
    let val = (&sys.c * &stacked).dot(&stacked);
    Ok(val.max(0.0))
}

fn check_alignment(sys: &StressSystem, s: &Alignment) -> Result<()> {
    if s.m() != sys.m || s.d() != sys.d {
        return Err(Error::contract(format!(
            "alignment has {} blocks of size {}, system expects {} of size {}",
            s.m(),
            s.d(),
            sys.m,
            sys.d
        )));
    }
    let id = DMatrix::identity(sys.d, sys.d);
    for (i, blk) in s.blocks().iter().enumerate() {
        let drift = (blk.transpose() * blk - &id).norm();
        if drift > 1e-9 {
            return Err(Error::contract(format!(
                "alignment block {} is not orthogonal (drift {drift:.3e})",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Minimum-norm solution `U = ℒ† Σ_i B_iᵀ S_i` of the inner least squares:
/// rows 1..n are the consensus point positions, rows n+1..n+m the view
/// translations.
pub fn optimal_positions(sys: &StressSystem, s: &Alignment) -> DMatrix<f64> {
    let (d, n, m) = (sys.d, sys.n, sys.m);
    let mut w = DMatrix::zeros(n + m, d);
    for i in 0..m {
        w += sys.b.rows(i * d, d).transpose() * s.block(i);
    }
    let mut u = DMatrix::zeros(n + m, d);
    // ℒ† · w without forming intermediate copies per column
    u.gemm(1.0, &sys.laplacian_pinv, &w, 0.0);
    u
}

/// The alignment error evaluated as the residual sum of squares
/// `Σ_e ‖S_iᵀ x_{k,i} + t_i - x_k‖²` at the optimal positions. Equal to
/// `Tr(C S Sᵀ)` in exact arithmetic but free of its cancellation noise, so
/// it resolves values down to the square of the per-edge round-off. Used as
/// the internal objective of the descent loop.
pub fn alignment_error_residual(sys: &StressSystem, s: &Alignment) -> f64 {
    let d = sys.d;
    let u = optimal_positions(sys, s);
    let mut total = 0.0;
    for &(k, i) in &sys.edges {
        let x = sys.b.view((i * d, k), (d, 1));
        let local = s.block(i).transpose() * x;
        let mut r2 = 0.0;
        for p in 0..d {
            let r = local[(p, 0)] + u[(sys.n + i, p)] - u[(k, p)];
            r2 += r * r;
        }
        total += r2;
    }
    total
}

/// Brute-force oracle for the alignment error: solves the inner least
/// squares `min_{t, x} Σ_{(k,i)} ‖S_iᵀ x_{k,i} + t_i - x_k‖²` directly by a
/// QR least-squares solve of the edge incidence system, independent of the
/// `C = D - B ℒ† Bᵀ` construction. The one-dimensional translation kernel
/// (the all-ones direction, annihilated by the incidence rows exactly) is
/// grounded by fixing the last view's translation to zero; the minimum
/// value is invariant under that gauge choice.
pub fn alignment_error_oracle(fw: &PatchFramework, s: &Alignment) -> Result<f64> {
    if s.m() != fw.m() || s.d() != fw.d() {
        return Err(Error::contract("oracle: alignment does not match framework"));
    }
    let (n, m, d) = (fw.n(), fw.m(), fw.d());
    let edges = fw.edge_count();
    let cols = n + m - 1; // t_m ≡ 0
    // Row per edge over unknown rows U = [x_1..x_n, t_1..t_{m-1}]:
    //   residual_e = U^T a_e + S_i^T x_{k,i},  a_e = e_{n+i} - e_k.
    let mut a = DMatrix::zeros(edges, cols);
    let mut rhs = DMatrix::zeros(edges, d);
    for (row, (k, i, x)) in fw.edges().enumerate() {
        a[(row, k)] = -1.0;
        if n + i < cols {
            a[(row, n + i)] = 1.0;
        }
        let local = s.block(i).transpose() * x;
        rhs.view_mut((row, 0), (1, d)).copy_from(&local.transpose());
    }
    let qr = a.clone().qr();
    let qt_rhs = qr.q().transpose() * (-&rhs);
    let solution = qr
        .r()
        .solve_upper_triangular(&qt_rhs)
        .ok_or_else(|| Error::contract("incidence system is rank deficient"))?;
    let residual = a * solution + rhs;
    Ok(residual.norm_squared())
}
