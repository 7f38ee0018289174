//! Non-degeneracy certification. From an alignment `S` and the stress system
//! this module assembles the aligned stress matrices
//!
//! * `C(S) = blockdiag(S)ᵀ C blockdiag(S)`,
//! * `Ĉ(S) = blockdiag([C(S) I_dᵐ]_i)` (block row sums), and
//! * `L(S) = C(S) - Ĉ(S)`,
//!
//! then the coordinate-permuted `ℒ(S) = P L(S) Pᵀ` and the reduced matrix
//! `𝕃(S)` acting on the flattened skew coordinates `ω`, for which
//! `Tr(Ωᵀ L(S) Ω) = ωᵀ 𝕃(S) ω`. A critical alignment is a non-degenerate
//! local minimum of the quotient objective iff `λ_{d(d-1)/2+1}(𝕃(S)) > 0`,
//! which is what [`nondegeneracy_test`] decides. [`convergence_radius`]
//! turns the extreme curvature eigenvalues into the guaranteed-descent
//! radius `δ` and the linear rate `q`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Error;
use crate::linalg;
use crate::manifold::{self, Alignment, HorizontalTangent};
use crate::stress::StressSystem;
use crate::Result;

/// Aligned stress matrices at a given alignment.
#[derive(Debug, Clone)]
pub struct AlignedStress {
    pub d: usize,
    pub m: usize,
    /// `C(S)`, md×md, unitarily equivalent to `C`.
    pub c_of_s: DMatrix<f64>,
    /// The d×d block row sums `[C(S) I_dᵐ]_i`; `Ĉ(S)` is their block diagonal.
    pub hat_blocks: Vec<DMatrix<f64>>,
    /// `L(S) = C(S) - Ĉ(S)`; symmetric at critical points.
    pub l_of_s: DMatrix<f64>,
    /// Whether `S` is critical: `max_i ‖hat_i - hat_iᵀ‖_F ≤ tol_crit`.
    pub critical: bool,
    pub critical_residual: f64,
    pub tol_crit: f64,
    /// `F(S) = Σ_i Tr(hat_i)` (the sum over all d×d blocks of `C(S)`).
    pub f_value: f64,
    /// `‖C‖_F` of the originating system, for scale-relative tolerances.
    pub c_norm: f64,
}

/// The permuted and reduced certificate matrices with the spectral data of
/// the symmetrized `𝕃(S)`.
#[derive(Debug, Clone)]
pub struct CertificateMatrix {
    pub d: usize,
    pub m: usize,
    /// `ℒ(S) = P L_sym(S) Pᵀ`, md×md, blocks `ℒ_{p,q}` of size m.
    pub mathcal_l: DMatrix<f64>,
    /// `𝕃(S)`, of size m·d(d-1)/2.
    pub mathbb_l: DMatrix<f64>,
    /// Eigenvalues of the symmetrized `𝕃(S)`, ascending.
    pub eigs: DVector<f64>,
    pub eigvecs: DMatrix<f64>,
    /// `λ_{d(d-1)/2+1}(𝕃(S))`; +∞ when the horizontal space is trivial.
    pub lambda_minus: f64,
    /// Largest eigenvalue of `𝕃(S)`.
    pub lambda_plus: f64,
    /// Zero threshold used for rank and sign decisions on `𝕃(S)`.
    pub tau: f64,
}

/// Outcome of the non-degeneracy test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NonDegenerate,
    Degenerate,
    /// The alignment is not critical, so the second-order test does not
    /// apply; never reported as a certificate either way.
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub verdict: Verdict,
    /// `λ_{d(d-1)/2+1}(𝕃(S))`.
    pub lambda_key: f64,
    pub min_eig: f64,
    pub rank: usize,
    pub rank_target: usize,
    pub tau: f64,
}

/// Convergence radius and rate around a non-degenerate alignment.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusReport {
    /// `max_i σ_max(C_{i,:})` over the d×md row blocks of C.
    pub c1: f64,
    /// `max_i σ_max([CS]_i)`.
    pub c2: f64,
    /// `σ_max(L(S))` (noisy branch).
    pub c3: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// `δ(S) = λ₋ / 2(c1 + c2 + 2 c3)`.
    pub delta: f64,
    /// Noiseless variant `δ₀(S) = λ₋ / 2(c1 + 2 σ_max(C))`, present when
    /// `F(S) ≈ 0`.
    pub delta0: Option<f64>,
    pub zeta: f64,
    pub gamma: f64,
    /// `r = (1-ζ)λ₋ / (λ₊ + ζλ₋)`.
    pub rate_r: f64,
    /// `q = 1 - 2γ(1-γ) r (1+r)`.
    pub rate_q: f64,
}

/// Criticality tolerance `1e-7·(1 + ‖C‖_F)`: certification must accept the
/// output of a gradient-tolerance RGD run.
pub fn criticality_tolerance(sys: &StressSystem) -> f64 {
    1e-7 * (1.0 + sys.c.norm())
}

/// Criticality residual `max_i ‖S_iᵀ[CS]_i - [CS]_iᵀS_i‖_F` and the verdict
/// at the given tolerance.
pub fn is_critical(sys: &StressSystem, s: &Alignment, tol: f64) -> (bool, f64) {
    let d = sys.d;
    let cs = sys.c_times(s);
    let mut residual = 0.0f64;
    for i in 0..sys.m {
        let hat = s.block(i).transpose() * cs.view((i * d, 0), (d, d));
        residual = residual.max((&hat - hat.transpose()).norm());
    }
    (residual <= tol, residual)
}

/// Assembles `C(S)`, `Ĉ(S)` and `L(S)` and evaluates the criticality flag.
pub fn build_aligned_stress(sys: &StressSystem, s: &Alignment) -> Result<AlignedStress> {
    if s.m() != sys.m || s.d() != sys.d {
        return Err(Error::contract("alignment does not match the stress system"));
    }
    let (d, m) = (sys.d, sys.m);
    let mut blockdiag = DMatrix::zeros(m * d, m * d);
    for i in 0..m {
        blockdiag.view_mut((i * d, i * d), (d, d)).copy_from(s.block(i));
    }
    let c_of_s = blockdiag.transpose() * &sys.c * &blockdiag;
    let mut hat_blocks = Vec::with_capacity(m);
    let mut l_of_s = c_of_s.clone();
    let mut residual = 0.0f64;
    for i in 0..m {
        let mut hat = DMatrix::zeros(d, d);
        for j in 0..m {
            hat += c_of_s.view((i * d, j * d), (d, d));
        }
        residual = residual.max((&hat - hat.transpose()).norm());
        let mut diag = l_of_s.view_mut((i * d, i * d), (d, d));
        diag -= &hat;
        hat_blocks.push(hat);
    }
    let tol_crit = criticality_tolerance(sys);
    let f_value = hat_blocks.iter().map(|h| h.trace()).sum::<f64>().max(0.0);
    Ok(AlignedStress {
        d,
        m,
        critical: residual <= tol_crit,
        critical_residual: residual,
        tol_crit,
        f_value,
        c_norm: sys.c.norm(),
        c_of_s,
        hat_blocks,
        l_of_s,
    })
}

impl AlignedStress {
    /// Symmetrized `(L(S) + L(S)ᵀ)/2`, used for the certificate matrices at
    /// non-critical points (at critical points `L(S)` is already symmetric).
    pub fn l_symmetrized(&self) -> DMatrix<f64> {
        (&self.l_of_s + self.l_of_s.transpose()) * 0.5
    }

    /// Whether `F(S) ≈ 0` (perfect alignment up to round-off).
    pub fn is_noiseless(&self) -> bool {
        self.f_value <= 1e-12 * (1.0 + self.c_norm)
    }
}

/// `ℒ(S) = P L Pᵀ`: entry `(i·d + p, j·d + q)` of `L` moves to
/// `(p·m + i, q·m + j)`, so the `(p,q)` block of `ℒ` gathers the
/// coordinate-(p,q) interactions across view pairs.
pub fn permute_to_coordinate_blocks(l: &DMatrix<f64>, d: usize, m: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m * d, m * d);
    for i in 0..m {
        for p in 0..d {
            for j in 0..m {
                for q in 0..d {
                    out[(p * m + i, q * m + j)] = l[(i * d + p, j * d + q)];
                }
            }
        }
    }
    out
}

/// Assembles `𝕃(S)` from the m×m blocks of `ℒ(S)` by the pair-indexed
/// case table: rows/columns are indexed by pairs (r,s), r < s, in the same
/// column-major order as the `ω` flattening.
pub fn assemble_reduced_matrix(mathcal_l: &DMatrix<f64>, d: usize, m: usize) -> DMatrix<f64> {
    let pairs = manifold::upper_pairs(d);
    let np = pairs.len();
    let block = |p: usize, q: usize| mathcal_l.view((p * m, q * m), (m, m));
    let mut out = DMatrix::zeros(np * m, np * m);
    for (a, &(r1, s1)) in pairs.iter().enumerate() {
        for (b, &(r2, s2)) in pairs.iter().enumerate() {
            let mut dst = out.view_mut((a * m, b * m), (m, m));
            if r1 == r2 && s1 == s2 {
                dst.copy_from(&(block(r1, r1) + block(s1, s1)));
            } else if r1 != r2 && r1 != s2 && s1 != r2 && s1 != s2 {
                // disjoint pairs: zero block
            } else if r1 == r2 {
                dst.copy_from(&block(s1, s2));
            } else if s1 == s2 {
                dst.copy_from(&block(r1, r2));
            } else if s1 == r2 {
                dst.copy_from(&(-block(r1, s2)));
            } else {
                // r1 == s2
                dst.copy_from(&(-block(s1, r2)));
            }
        }
    }
    out
}

/// Builds `ℒ(S)`, `𝕃(S)` and the spectral data of the symmetrized `𝕃(S)`.
/// Works at non-critical points through the symmetrized `L`.
pub fn build_certificate_matrix(aligned: &AlignedStress) -> CertificateMatrix {
    let (d, m) = (aligned.d, aligned.m);
    let l_sym = aligned.l_symmetrized();
    let mathcal_l = permute_to_coordinate_blocks(&l_sym, d, m);
    let mathbb_l = assemble_reduced_matrix(&mathcal_l, d, m);
    let mathbb_sym = (&mathbb_l + mathbb_l.transpose()) * 0.5;
    let size = mathbb_sym.nrows();
    let (eigs, eigvecs) = if size > 0 {
        linalg::sym_eigen_ascending(&mathbb_sym)
    } else {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    };
    let dd2 = d * (d - 1) / 2;
    let lambda_max = if size > 0 { eigs[size - 1] } else { 0.0 };
    let tau = linalg::zero_threshold(size, lambda_max);
    let lambda_minus = if dd2 < size { eigs[dd2] } else { f64::INFINITY };
    let lambda_plus = if size > 0 { eigs[size - 1] } else { f64::INFINITY };
    CertificateMatrix {
        d,
        m,
        mathcal_l,
        mathbb_l,
        eigs,
        eigvecs,
        lambda_minus,
        lambda_plus,
        tau,
    }
}

/// The quotient Hessian quadratic form `Tr(Ωᵀ(L(S)+L(S)ᵀ)Ω)` at a
/// horizontal direction; equals `2 Tr(Ωᵀ L(S) Ω)` at critical points.
pub fn hessian_quadratic_form(aligned: &AlignedStress, omega: &HorizontalTangent) -> f64 {
    let stacked = omega.stacked();
    let l = &aligned.l_of_s;
    ((l * &stacked).dot(&stacked)) + ((l.transpose() * &stacked).dot(&stacked))
}

/// The skew blocks `Ω̂_i` of the lifted Hessian direction: at critical
/// points `[LΩ]_i - [LΩ]_iᵀ`, otherwise
/// `½{[(L+Lᵀ)Ω]_i - [(L+Lᵀ)Ω]_iᵀ}`. In both branches this is the
/// skew-difference of `(L used)·Ω` with `L used = L` when critical and the
/// symmetrized `(L+Lᵀ)/2` otherwise.
pub fn hessian_operator_blocks(
    aligned: &AlignedStress,
    omega: &HorizontalTangent,
) -> Vec<DMatrix<f64>> {
    let (d, m) = (aligned.d, aligned.m);
    let stacked = omega.stacked();
    let prod = if aligned.critical {
        &aligned.l_of_s * &stacked
    } else {
        aligned.l_symmetrized() * &stacked
    };
    (0..m)
        .map(|i| {
            let blk = prod.view((i * d, 0), (d, d));
            blk - blk.transpose()
        })
        .collect()
}

/// Non-degeneracy verdict: at a critical alignment, non-degenerate iff
/// `𝕃(S)` is PSD to tolerance and `λ_{d(d-1)/2+1}(𝕃(S)) > τ`. A
/// non-critical input yields `NotApplicable`, never a certificate.
pub fn nondegeneracy_test(
    aligned: &AlignedStress,
    cert: &CertificateMatrix,
) -> NondegeneracyReport {
    let (d, m) = (cert.d, cert.m);
    let dd2 = d * (d - 1) / 2;
    let rank_target = (m - 1) * dd2;
    let size = cert.eigs.len();
    let rank = if size > 0 {
        linalg::rank_from_eigenvalues(&cert.eigs, size)
    } else {
        0
    };
    let min_eig = if size > 0 { cert.eigs[0] } else { 0.0 };
    let verdict = if !aligned.critical {
        Verdict::NotApplicable
    } else if rank_target == 0 {
        // d = 1 or a single view: the quotient Hessian acts on a trivial
        // space and the alignment is vacuously non-degenerate.
        Verdict::NonDegenerate
    } else if cert.lambda_minus > cert.tau && min_eig >= -cert.tau {
        Verdict::NonDegenerate
    } else {
        Verdict::Degenerate
    };
    NondegeneracyReport {
        verdict,
        lambda_key: cert.lambda_minus,
        min_eig,
        rank,
        rank_target,
        tau: cert.tau,
    }
}

/// Computes the curvature constants `c1, c2, c3`, the radius `δ(S)` (and
/// `δ₀(S)` on noiseless input) and the linear rate `q` for a non-degenerate
/// alignment. Errors on a degenerate or non-critical alignment.
pub fn convergence_radius(
    sys: &StressSystem,
    aligned: &AlignedStress,
    cert: &CertificateMatrix,
    zeta: f64,
    gamma: f64,
) -> Result<RadiusReport> {
    if !(zeta > 0.0 && zeta < 1.0) || !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::contract("zeta and gamma must lie in (0,1)"));
    }
    let report = nondegeneracy_test(aligned, cert);
    if report.verdict != Verdict::NonDegenerate {
        return Err(Error::NotApplicable(format!(
            "convergence radius requires a non-degenerate critical alignment \
             (verdict: {:?})",
            report.verdict
        )));
    }
    if report.rank_target == 0 {
        return Err(Error::NotApplicable(
            "the quotient Hessian is trivial (d = 1 or a single view); \
             no curvature bounds to compute"
                .into(),
        ));
    }
    let (d, m) = (sys.d, sys.m);
    let c1 = (0..m)
        .map(|i| linalg::spectral_norm(&sys.c.rows(i * d, d).into_owned()))
        .fold(0.0f64, f64::max);
    // [CS]_i = S_i · hat_i, so σ_max([CS]_i) = σ_max(hat_i).
    let c2 = aligned
        .hat_blocks
        .iter()
        .map(linalg::spectral_norm)
        .fold(0.0f64, f64::max);
    let c3 = linalg::spectral_norm(&aligned.l_of_s);
    let lambda_minus = cert.lambda_minus;
    let lambda_plus = cert.lambda_plus;
    let delta = lambda_minus / (2.0 * (c1 + c2 + 2.0 * c3));
    let delta0 = aligned.is_noiseless().then(|| {
        let c3_noiseless = sys.eigs_c[sys.m * sys.d - 1].max(0.0);
        lambda_minus / (2.0 * (c1 + 2.0 * c3_noiseless))
    });
    let rate_r = (1.0 - zeta) * lambda_minus / (lambda_plus + zeta * lambda_minus);
    let rate_q = 1.0 - 2.0 * gamma * (1.0 - gamma) * rate_r * (1.0 + rate_r);
    Ok(RadiusReport {
        c1,
        c2,
        c3,
        lambda_minus,
        lambda_plus,
        delta,
        delta0,
        zeta,
        gamma,
        rate_r,
        rate_q,
    })
}

/// Serializable certification summary for the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub critical: bool,
    pub critical_residual: f64,
    pub verdict: Verdict,
    pub nondegenerate: Option<bool>,
    pub lambda_key: f64,
    pub rank_ll: usize,
    pub rank_target: usize,
    pub f_value: f64,
    pub delta: Option<f64>,
    pub delta0: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Agreement of the verdict and key eigenvalue at a random gauge `SQ`.
    pub invariance_check: Option<bool>,
}

/// Runs the full certification pipeline; when `invariance_seed` is set, also
/// re-runs the verdict at a random gauge `SQ` and reports agreement.
pub fn certify(
    sys: &StressSystem,
    s: &Alignment,
    zeta: f64,
    gamma: f64,
    invariance_seed: Option<u64>,
) -> Result<CertificationReport> {
    let aligned = build_aligned_stress(sys, s)?;
    let cert = build_certificate_matrix(&aligned);
    let nd = nondegeneracy_test(&aligned, &cert);
    let radius = if nd.verdict == Verdict::NonDegenerate && nd.rank_target > 0 {
        Some(convergence_radius(sys, &aligned, &cert, zeta, gamma)?)
    } else {
        None
    };
    let invariance_check = match invariance_seed {
        Some(seed) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let q = linalg::haar_orthogonal(sys.d, &mut rng);
            let rotated = build_aligned_stress(sys, &s.act(&q))?;
            let cert_q = build_certificate_matrix(&rotated);
            let nd_q = nondegeneracy_test(&rotated, &cert_q);
            let eig_agree = if nd.lambda_key.is_finite() {
                (nd.lambda_key - nd_q.lambda_key).abs()
                    <= 1e-9 * (1.0 + nd.lambda_key.abs())
            } else {
                nd_q.lambda_key.is_infinite()
            };
            Some(nd_q.verdict == nd.verdict && eig_agree)
        }
        None => None,
    };
    Ok(CertificationReport {
        critical: aligned.critical,
        critical_residual: aligned.critical_residual,
        verdict: nd.verdict,
        nondegenerate: match nd.verdict {
            Verdict::NonDegenerate => Some(true),
            Verdict::Degenerate => Some(false),
            Verdict::NotApplicable => None,
        },
        lambda_key: nd.lambda_key,
        rank_ll: nd.rank,
        rank_target: nd.rank_target,
        f_value: aligned.f_value,
        delta: radius.as_ref().map(|r| r.delta),
        delta0: radius.as_ref().and_then(|r| r.delta0),
        q: radius.as_ref().map(|r| r.rate_q),
        r: radius.as_ref().map(|r| r.rate_r),
        c1: radius.as_ref().map(|r| r.c1),
        c2: radius.as_ref().map(|r| r.c2),
        c3: radius.as_ref().map(|r| r.c3),
        invariance_check,
    })
}
