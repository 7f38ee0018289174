//! Small dense linear-algebra helpers shared across the crate: sorted
//! symmetric eigendecompositions, PSD pseudoinverse, rank detection with a
//! scale-relative singular-value threshold, polar rounding and Haar-uniform
//! orthogonal sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn sym_eigen_ascending(mat: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = mat.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix via full
/// eigendecomposition. Eigenvalues with magnitude at most `kernel_tol` are
/// treated as zero. Returns the pseudoinverse and the kernel dimension.
pub fn pinv_psd(mat: &DMatrix<f64>, kernel_tol: f64) -> (DMatrix<f64>, usize) {
    let (values, vectors) = sym_eigen_ascending(mat);
    let n = values.len();
    let mut kernel_dim = 0;
    let mut inv = DVector::zeros(n);
    for i in 0..n {
        if values[i].abs() <= kernel_tol {
            kernel_dim += 1;
        } else {
            inv[i] = 1.0 / values[i];
        }
    }
    let pinv = &vectors * DMatrix::from_diagonal(&inv) * vectors.transpose();
    // Symmetrize to remove round-off asymmetry from the triple product.
    let pinv = (&pinv + pinv.transpose()) * 0.5;
    (pinv, kernel_dim)
}

/// Moore-Penrose pseudoinverse of a connected-graph Laplacian via the
/// identity `ℒ† = J (ℒ + α/N·𝟙𝟙ᵀ)⁻¹ J` with `J = I - 𝟙𝟙ᵀ/N`: the shifted
/// matrix is positive definite, so a Cholesky solve avoids the accuracy loss
/// of an iterative eigendecomposition. Also returns `λ₂` (the algebraic
/// connectivity), computed by power iteration on the pseudoinverse with the
/// ones-direction deflated.
pub fn pinv_connected_laplacian(lap: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let n = lap.nrows();
    let alpha = (lap.trace() / n as f64).max(1.0);
    let shift = alpha / n as f64;
    let shifted = lap + DMatrix::from_element(n, n, shift);
    let inv = shifted.cholesky()?.inverse();
    // center rows and columns: J M J with J = I - 11ᵀ/N
    let mut pinv = inv;
    let col_means: Vec<f64> = (0..n).map(|j| pinv.column(j).mean()).collect();
    for (j, mean) in col_means.iter().enumerate() {
        pinv.column_mut(j).add_scalar_mut(-mean);
    }
    let row_means: Vec<f64> = (0..n).map(|i| pinv.row(i).mean()).collect();
    for (i, mean) in row_means.iter().enumerate() {
        pinv.row_mut(i).add_scalar_mut(-mean);
    }
    let pinv = (&pinv + pinv.transpose()) * 0.5;

    // λ₂(ℒ) = 1 / λ_max(ℒ†), via deflated power iteration.
    let mut v = DVector::from_fn(n, |i, _| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5);
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda_inv = 0.0;
    for _ in 0..500 {
        v -= &ones * ones.dot(&v);
        let norm = v.norm();
        if norm == 0.0 {
            break;
        }
        v /= norm;
        let w = &pinv * &v;
        let next = v.dot(&w);
        let converged = (next - lambda_inv).abs() <= 1e-12 * next.abs().max(1e-300);
        lambda_inv = next;
        v = w;
        if converged {
            break;
        }
    }
    let lambda2 = if lambda_inv > 0.0 {
        1.0 / lambda_inv
    } else {
        f64::INFINITY
    };
    Some((pinv, lambda2))
}

/// Singular values of an arbitrary matrix, sorted descending.
pub fn singular_values(mat: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = mat.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (spectral norm); 0 for an empty matrix.
pub fn spectral_norm(mat: &DMatrix<f64>) -> f64 {
    if mat.is_empty() {
        return 0.0;
    }
    singular_values(mat).first().copied().unwrap_or(0.0)
}

/// Zero threshold used for every rank / eigenvalue-sign decision:
/// `size * eps * max(1, scale) * 100`. The absolute floor of 1 keeps the
/// threshold meaningful for matrices with tiny norm, and the factor 100
/// absorbs the round-off injected by the upstream pseudoinverse.
pub fn zero_threshold(size: usize, scale: f64) -> f64 {
    size.max(1) as f64 * f64::EPSILON * scale.max(1.0) * 100.0
}

/// Rank of a matrix: number of singular values above [`zero_threshold`]
/// computed from the largest dimension and the largest singular value.
/// Returns the rank and the descending singular values.
pub fn rank_with_values(mat: &DMatrix<f64>) -> (usize, Vec<f64>) {
    if mat.is_empty() {
        return (0, Vec::new());
    }
    let sv = singular_values(mat);
    let tol = zero_threshold(mat.nrows().max(mat.ncols()), sv[0]);
    let rank = sv.iter().take_while(|&&s| s > tol).count();
    (rank, sv)
}

/// Rank of a symmetric matrix from its eigenvalues (count of |lambda| above
/// the threshold derived from the largest magnitude eigenvalue).
pub fn rank_from_eigenvalues(values: &DVector<f64>, size: usize) -> usize {
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = zero_threshold(size, scale);
    values.iter().filter(|v| v.abs() > tol).count()
}

/// Nearest orthogonal matrix in Frobenius norm (polar factor `U Vᵀ` of the
/// SVD). Returns the rounding together with the smallest singular value of
/// the input, which measures how close the input was to singular.
pub fn polar_orthogonal(mat: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let svd = mat.clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let sigma_min = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    (u * vt, sigma_min)
}

/// Haar-uniform sample from the full orthogonal group 𝕆(d): QR of a Gaussian
/// matrix with the R-diagonal sign fix. Both components (det = ±1) occur with
/// probability 1/2.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Uniform sample from the closed ball of the given radius in ℝᵈ.
pub fn sample_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> DVector<f64> {
    let mut dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 {
        return DVector::zeros(d);
    }
    dir /= norm;
    let u: f64 = rng.gen::<f64>();
    dir * (radius * u.powf(1.0 / d as f64))
}

/// Random skew-symmetric matrix with Gaussian upper-triangular entries.
pub fn random_skew<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in (r + 1)..d {
            let v: f64 = rng.sample(StandardNormal);
            s[(r, c)] = v;
            s[(c, r)] = -v;
        }
    }
    s
}

/// Skew part `(A - Aᵀ)/2`.
pub fn skew_part(mat: &DMatrix<f64>) -> DMatrix<f64> {
    (mat - mat.transpose()) * 0.5
}
