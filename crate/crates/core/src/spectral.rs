//! Spectral initialization and the experiment harness. The initializer takes
//! the `d` eigenvectors of `C` with smallest eigenvalues, scales them by
//! `√m` and rounds each `d×d` block to the nearest orthogonal matrix; on a
//! noiseless affinely rigid framework (`rank C = (m-1)d`) this recovers a
//! perfect alignment exactly. The sweep injects bounded noise at increasing
//! levels, refines the spectral alignment with gradient descent and records
//! the spectral-gap, convergence and stability diagnostics.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::certify;
use crate::error::Error;
use crate::framework::{NoiseSpec, PatchFramework};
use crate::linalg;
use crate::manifold::{self, Alignment};
use crate::rgd::{self, RgdConfig};
use crate::stress::{self, StressSystem};
use crate::Result;

/// Output of the spectral initializer.
#[derive(Debug, Clone)]
pub struct SpectralInit {
    pub alignment: Alignment,
    /// The `d` smallest eigenvalues of C.
    pub bottom_eigs: Vec<f64>,
    /// Spectral gap `λ_{d+1}(C) - λ_d(C)`.
    pub gap: f64,
    /// Per-block distance from the scaled eigenvector block to its
    /// orthogonal rounding.
    pub rounding_residuals: Vec<f64>,
    /// Blocks whose smallest singular value fell below the zero threshold
    /// before rounding (completed to orthogonal, flagged).
    pub degenerate_blocks: Vec<usize>,
}

/// Rounds the bottom-`d` eigenvector blocks of `C` to an alignment. The
/// output gauge is fixed by right-multiplying so that block 1 is the
/// identity.
pub fn spectral_init(sys: &StressSystem) -> SpectralInit {
    let (d, m) = (sys.d, sys.m);
    let scale = (m as f64).sqrt();
    let mut blocks = Vec::with_capacity(m);
    let mut rounding_residuals = Vec::with_capacity(m);
    let mut degenerate_blocks = Vec::new();
    for i in 0..m {
        let mut raw = DMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                raw[(r, c)] = sys.eigvecs_c[(i * d + r, c)] * scale;
            }
        }
        let (rounded, sigma_min) = linalg::polar_orthogonal(&raw);
        if sigma_min < linalg::zero_threshold(d, linalg::spectral_norm(&raw)) {
            degenerate_blocks.push(i + 1);
        }
        rounding_residuals.push((&raw - &rounded).norm());
        blocks.push(rounded);
    }
    let mut alignment = Alignment::new(d, blocks).expect("polar rounding is orthogonal");
    // gauge: block 1 ↦ I
    let q = alignment.block(0).transpose();
    alignment = alignment.act(&q);
    let gap = if m * d > d {
        sys.eigs_c[d] - sys.eigs_c[d - 1]
    } else {
        // single view: C has no eigenvalue beyond the kernel block
        f64::INFINITY
    };
    SpectralInit {
        alignment,
        bottom_eigs: (0..d).map(|i| sys.eigs_c[i]).collect(),
        gap,
        rounding_residuals,
        degenerate_blocks,
    }
}

/// One row of the noise sweep (a single trial).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub trial: usize,
    /// `λ_{d+1}(C)` of the noisy system.
    pub lambda_d1: f64,
    pub f_spec: f64,
    pub f_final: f64,
    /// Procrustes distance from the spectral alignment to the noiseless
    /// ground truth.
    pub dist_spec_to_truth: f64,
    /// Procrustes distance from the refined alignment to the ground truth.
    pub dist_final_to_truth: f64,
    pub iterations: usize,
    /// Least-squares slope of the log ratio curve (None before 3 points).
    pub ratio_slope: Option<f64>,
    pub k1: f64,
    pub k2: f64,
    /// `‖C - C₀‖_F` measured.
    pub c_shift: f64,
    /// Right side of the perturbation bound `K₁ε + K₂ε²`.
    pub c_shift_bound: f64,
    /// Left side of the noise-stability condition.
    pub stability_lhs: f64,
    /// `δ(S*)` at the refined alignment when it certifies non-degenerate.
    pub delta_star: Option<f64>,
    /// Whether the sufficient stability condition held (None when
    /// `λ_{d+1}(C)` is below the zero threshold, where the bound does not
    /// apply).
    pub bound_satisfied: Option<bool>,
    pub converged: bool,
    /// Bound `4m‖C - C₀‖_F / λ_{d+1}(C₀)` on the distance between the
    /// noisy optimum and the noiseless alignment.
    pub dist_bound: f64,
}

/// Aggregated sweep output.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepResult {
    pub rows: Vec<SweepRow>,
    /// Median `λ_{d+1}(C)` per noise level, in sweep order.
    pub lambda_medians: Vec<(f64, f64)>,
}

impl NoiseSweepResult {
    /// Number of decreases in the per-level median of `λ_{d+1}(C)`.
    pub fn lambda_median_inversions(&self) -> usize {
        self.lambda_medians
            .windows(2)
            .filter(|w| w[1].1 < w[0].1 - 1e-12 * (1.0 + w[0].1.abs()))
            .count()
    }

    /// CSV serialization of the per-trial rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "eps,trial,lambda_d1,F_spec,F_final,dist_spec_to_S0,dist_final_to_S0,iters,\
             ratio_slope,K1,K2,c_shift,c_shift_bound,bound_lhs,delta_star,bound_satisfied,\
             converged,dist_bound\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{:.12e},{:.12e},{:.12e},\
                 {:.12e},{:.12e},{},{},{},{:.12e}\n",
                r.epsilon,
                r.trial,
                r.lambda_d1,
                r.f_spec,
                r.f_final,
                r.dist_spec_to_truth,
                r.dist_final_to_truth,
                r.iterations,
                r.ratio_slope.map_or_else(|| "".into(), |v| format!("{v:.6e}")),
                r.k1,
                r.k2,
                r.c_shift,
                r.c_shift_bound,
                r.stability_lhs,
                r.delta_star.map_or_else(|| "".into(), |v| format!("{v:.6e}")),
                r.bound_satisfied.map_or_else(|| "".into(), |v| v.to_string()),
                r.converged,
                r.dist_bound,
            ));
        }
        out
    }
}

/// The two noise-amplification constants of the stability bound, computed
/// from the noiseless system and realization:
/// `K₁ = 2√(n|E|)(4·max_k‖x_k‖·√(n|E|)/λ₂(ℒ) + 1)` and
/// `K₂ = 2√(n|E|)(2·√(n|E|)/λ₂(ℒ) + 1)`.
pub fn stability_constants(sys0: &StressSystem, max_point_norm: f64) -> (f64, f64) {
    let ne = (sys0.n * sys0.edges.len()) as f64;
    let root = ne.sqrt();
    let lambda2 = sys0.lambda2_laplacian;
    let k1 = 2.0 * root * (4.0 * max_point_norm * root / lambda2 + 1.0);
    let k2 = 2.0 * root * (2.0 * root / lambda2 + 1.0);
    (k1, k2)
}

/// Runs the noise sweep: for each level and trial, inject noise, build the
/// stress system, spectral-initialize, refine with gradient descent
/// (default 100 iterations) and record the diagnostics. Trials run in
/// parallel. Requires a noiseless framework whose ground truth is a unique
/// perfect alignment (`rank C₀ = (m-1)d`).
pub fn noise_sweep_experiment(
    fw0: &PatchFramework,
    truth: &Alignment,
    eps_list: &[f64],
    trials: usize,
    cfg: &RgdConfig,
    base_seed: u64,
) -> Result<NoiseSweepResult> {
    let sys0 = stress::build_patch_stress(fw0)?;
    let rank0 = sys0.rank_c();
    if rank0 != (sys0.m - 1) * sys0.d {
        return Err(Error::NotApplicable(format!(
            "noise sweep requires rank C₀ = (m-1)d = {}, found {rank0}",
            (sys0.m - 1) * sys0.d
        )));
    }
    let lambda_d1_0 = sys0.eig_c(sys0.d + 1);
    let real0 = crate::rigidity::realize(&sys0, truth)?;
    let max_point_norm = (0..sys0.n)
        .map(|k| real0.points.column(k).norm())
        .fold(0.0f64, f64::max);
    let (k1, k2) = stability_constants(&sys0, max_point_norm);

    let jobs: Vec<(usize, usize)> = (0..eps_list.len())
        .flat_map(|e| (0..trials).map(move |t| (e, t)))
        .collect();
    let rows: Result<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(eps_idx, trial)| {
            let epsilon = eps_list[eps_idx];
            let seed = base_seed
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add((eps_idx * 1000 + trial) as u64);
            run_trial(fw0, truth, &sys0, lambda_d1_0, k1, k2, epsilon, trial, seed, cfg)
        })
        .collect();
    let rows = rows?;
    let lambda_medians = eps_list
        .iter()
        .map(|&eps| {
            let mut vals: Vec<f64> = rows
                .iter()
                .filter(|r| (r.epsilon - eps).abs() < 1e-15)
                .map(|r| r.lambda_d1)
                .collect();
            vals.sort_by(f64::total_cmp);
            let median = if vals.is_empty() {
                f64::NAN
            } else {
                vals[vals.len() / 2]
            };
            (eps, median)
        })
        .collect();
    Ok(NoiseSweepResult {
        rows,
        lambda_medians,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    fw0: &PatchFramework,
    truth: &Alignment,
    sys0: &StressSystem,
    lambda_d1_0: f64,
    k1: f64,
    k2: f64,
    epsilon: f64,
    trial: usize,
    seed: u64,
    cfg: &RgdConfig,
) -> Result<SweepRow> {
    let noisy = fw0.inject_noise(&NoiseSpec { epsilon, seed });
    let sys = stress::build_patch_stress(&noisy)?;
    let lambda_d1 = sys.eig_c(sys.d + 1);
    let init = spectral_init(&sys);
    let f_spec = stress::alignment_error(&sys, &init.alignment)?;
    let (dist_spec, _) = manifold::procrustes_distance(&init.alignment, truth)?;
    let (refined, trace) = rgd::run_rgd(&sys, &init.alignment.project(), cfg, None)?;
    let refined_lift = refined.canonical_lift();
    let (dist_final, _) = manifold::procrustes_distance(&refined_lift, truth)?;
    let converged = trace.termination == rgd::TerminationReason::GradientTolerance
        || trace.final_grad_norm() <= 1e-6 * (1.0 + sys.c.norm());
    let c_shift = (&sys.c - &sys0.c).norm();
    let c_shift_bound = k1 * epsilon + k2 * epsilon.powi(2);
    let dist_bound = 4.0 * sys.m as f64 * c_shift / lambda_d1_0;
    // certification of the refined point, for δ(S*)
    let delta_star = certify::certify(&sys, &refined_lift, 0.5, cfg.gamma, None)
        .ok()
        .and_then(|report| report.delta);
    let lambda_applicable =
        lambda_d1 > linalg::zero_threshold(sys.m * sys.d, sys.eigs_c[sys.m * sys.d - 1]);
    let stability_lhs = if lambda_applicable {
        4.0 * (sys.m as f64).sqrt()
            * (std::f64::consts::PI * ((sys.d * (sys.d + 1)) as f64).sqrt() / lambda_d1
                + (sys.m as f64).sqrt() / lambda_d1_0)
            * (k1 * epsilon + k2 * epsilon.powi(2))
    } else {
        f64::NAN
    };
    let bound_satisfied = match (lambda_applicable, delta_star) {
        (true, Some(delta)) => Some(stability_lhs < delta),
        _ => None,
    };
    Ok(SweepRow {
        epsilon,
        trial,
        lambda_d1,
        f_spec,
        f_final: trace.final_f(),
        dist_spec_to_truth: dist_spec,
        dist_final_to_truth: dist_final,
        iterations: trace.iterations,
        ratio_slope: trace.log_ratio_slope(1e-14),
        k1,
        k2,
        c_shift,
        c_shift_bound,
        stability_lhs,
        delta_star,
        bound_satisfied,
        converged,
        dist_bound,
    })
}

/// Quadratic-growth check: on a noiseless affinely rigid system,
/// `Tr(C₀ S Sᵀ) ≥ (λ_{d+1}(C₀)/2)·min_Q‖S - S₀Q‖²` for every `S ∈ 𝕆(d)ᵐ`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadGrowthReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest observed ratio LHS/RHS over samples with RHS above noise.
    pub tightest_ratio: f64,
}

pub fn quad_growth_check(
    sys0: &StressSystem,
    truth: &Alignment,
    samples: usize,
    seed: u64,
) -> Result<QuadGrowthReport> {
    use rand::SeedableRng;
    if sys0.rank_c() != (sys0.m - 1) * sys0.d {
        return Err(Error::NotApplicable(
            "quadratic growth requires rank C₀ = (m-1)d".into(),
        ));
    }
    let lambda = sys0.eig_c(sys0.d + 1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..samples {
        let s = Alignment::new(
            sys0.d,
            (0..sys0.m)
                .map(|_| linalg::haar_orthogonal(sys0.d, &mut rng))
                .collect(),
        )?;
        let lhs = stress::alignment_error(sys0, &s)?;
        let (dist, _) = manifold::procrustes_distance(&s, truth)?;
        let rhs = lambda / 2.0 * dist * dist;
        if lhs < rhs - 1e-9 {
            violations += 1;
        }
        if rhs > 1e-9 {
            tightest = tightest.min(lhs / rhs);
        }
    }
    Ok(QuadGrowthReport {
        samples,
        violations,
        tightest_ratio: tightest,
    })
}

/// Sides of the noise-stability condition for one noisy instance.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub k1: f64,
    pub k2: f64,
    pub c_shift: f64,
    pub c_shift_bound: f64,
    pub lambda_d1_noisy: f64,
    pub lambda_d1_clean: f64,
    pub stability_lhs: Option<f64>,
    pub delta_star: Option<f64>,
    pub sufficient_condition_holds: Option<bool>,
    /// Measured `min_Q ‖S* - S₀Q‖_F` and its perturbation bound.
    pub dist_star_to_truth: f64,
    pub dist_bound: f64,
}

/// Computes the stability constants and both sides of the noise-stability
/// inequality for a noisy framework and a refined alignment `S*`. The
/// verdicts are informational; when `λ_{d+1}(C)` sits below the zero
/// threshold the bound is marked inapplicable rather than divided by
/// near-zero.
pub fn noise_stability_bound(
    fw0: &PatchFramework,
    noisy: &PatchFramework,
    truth: &Alignment,
    refined: &Alignment,
    epsilon: f64,
    gamma: f64,
) -> Result<StabilityReport> {
    let sys0 = stress::build_patch_stress(fw0)?;
    if sys0.rank_c() != (sys0.m - 1) * sys0.d {
        return Err(Error::NotApplicable(
            "stability bound requires rank C₀ = (m-1)d".into(),
        ));
    }
    let sys = stress::build_patch_stress(noisy)?;
    let real0 = crate::rigidity::realize(&sys0, truth)?;
    let max_point_norm = (0..sys0.n)
        .map(|k| real0.points.column(k).norm())
        .fold(0.0f64, f64::max);
    let (k1, k2) = stability_constants(&sys0, max_point_norm);
    let lambda_d1_clean = sys0.eig_c(sys0.d + 1);
    let lambda_d1_noisy = sys.eig_c(sys.d + 1);
    let c_shift = (&sys.c - &sys0.c).norm();
    let (dist_star, _) = manifold::procrustes_distance(refined, truth)?;
    let delta_star = certify::certify(&sys, refined, 0.5, gamma, None)
        .ok()
        .and_then(|r| r.delta);
    let applicable =
        lambda_d1_noisy > linalg::zero_threshold(sys.m * sys.d, sys.eigs_c[sys.m * sys.d - 1]);
    let stability_lhs = applicable.then(|| {
        4.0 * (sys.m as f64).sqrt()
            * (std::f64::consts::PI * ((sys.d * (sys.d + 1)) as f64).sqrt() / lambda_d1_noisy
                + (sys.m as f64).sqrt() / lambda_d1_clean)
            * (k1 * epsilon + k2 * epsilon.powi(2))
    });
    let sufficient_condition_holds = match (stability_lhs, delta_star) {
        (Some(lhs), Some(delta)) => Some(lhs < delta),
        _ => None,
    };
    Ok(StabilityReport {
        epsilon,
        k1,
        k2,
        c_shift,
        c_shift_bound: k1 * epsilon + k2 * epsilon.powi(2),
        lambda_d1_noisy,
        lambda_d1_clean,
        stability_lhs,
        delta_star,
        sufficient_condition_holds,
        dist_star_to_truth: dist_star,
        dist_bound: 4.0 * sys.m as f64 * c_shift / lambda_d1_clean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::PatchFramework;
    use crate::framework::{generate_grid, GridParams};

    fn grid(seed: u64) -> crate::framework::GridFramework {
        generate_grid(&GridParams {
            resolution: 6,
            d: 2,
            tiles: 2,
            overlap: 0.5,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn spectral_init_recovers_noiseless_affinely_rigid_frameworks() {
        let g = grid(1);
        let sys = stress::build_patch_stress(&g.framework).unwrap();
        let init = spectral_init(&sys);
        let f = stress::alignment_error(&sys, &init.alignment).unwrap();
        assert!(f <= 1e-8 * sys.c.norm(), "F(S_spec) = {f:.3e}");
        let (dist, _) = manifold::procrustes_distance(&init.alignment, &g.ground_truth).unwrap();
        assert!(dist <= 1e-6, "distance to ground truth {dist:.3e}");
        assert!(init.gap > 1e-3, "spectral gap must be open");
        assert!(init.degenerate_blocks.is_empty());
        // gauge convention: first block is the identity
        assert!((init.alignment.block(0) - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn single_view_spectral_init_is_trivially_perfect() {
        let fw = PatchFramework::new(
            2,
            3,
            vec![vec![
                (0, nalgebra::DVector::from_column_slice(&[0.0, 0.0])),
                (1, nalgebra::DVector::from_column_slice(&[1.0, 0.0])),
                (2, nalgebra::DVector::from_column_slice(&[0.0, 1.0])),
            ]],
        )
        .unwrap();
        let sys = stress::build_patch_stress(&fw).unwrap();
        let init = spectral_init(&sys);
        let f = stress::alignment_error(&sys, &init.alignment).unwrap();
        assert!(f <= 1e-10);
    }

    #[test]
    fn rgd_refinement_never_increases_the_spectral_error() {
        let g = grid(2);
        let noisy = g.framework.inject_noise(&NoiseSpec {
            epsilon: 0.05,
            seed: 2,
        });
        let sys = stress::build_patch_stress(&noisy).unwrap();
        let init = spectral_init(&sys);
        let f_spec = stress::alignment_error(&sys, &init.alignment).unwrap();
        assert!(f_spec > 0.0, "noisy data must misalign");
        let (_, trace) = rgd::run_rgd(
            &sys,
            &init.alignment.project(),
            &RgdConfig {
                max_iters: 100,
                ..RgdConfig::default()
            },
            None,
        )
        .unwrap();
        assert!(trace.final_f() < f_spec, "refinement must strictly decrease F");
    }

    #[test]
    fn sweep_covers_the_grid_and_zero_noise_is_exact() {
        let g = grid(3);
        let eps = [0.0, 0.05, 0.1];
        let result = noise_sweep_experiment(
            &g.framework,
            &g.ground_truth,
            &eps,
            2,
            &RgdConfig {
                max_iters: 100,
                ..RgdConfig::default()
            },
            7,
        )
        .unwrap();
        assert_eq!(result.rows.len(), 6);
        let sys0 = stress::build_patch_stress(&g.framework).unwrap();
        for row in result.rows.iter().filter(|r| r.epsilon == 0.0) {
            assert!((row.lambda_d1 - sys0.eig_c(3)).abs() <= 1e-9 * (1.0 + row.lambda_d1));
            assert!(row.f_final <= 1e-16 * (1.0 + sys0.c.norm()));
            assert!(row.c_shift <= 1e-12);
            assert!(row.dist_bound <= 1e-10);
        }
        // the sufficient stability condition, when satisfied, must co-occur
        // with convergence (implication direction only)
        for row in &result.rows {
            if row.bound_satisfied == Some(true) {
                assert!(row.converged, "eps {}: bound held but run diverged", row.epsilon);
            }
        }
        // perturbation bound with 10% slack on the measured norms
        for row in &result.rows {
            assert!(
                row.c_shift <= 1.1 * row.c_shift_bound + 1e-9,
                "‖C-C₀‖ = {:.3e} exceeds K₁ε+K₂ε² = {:.3e}",
                row.c_shift,
                row.c_shift_bound
            );
            assert!(
                row.dist_final_to_truth <= row.dist_bound + 1e-9,
                "distance bound violated"
            );
        }
        let csv = result.to_csv();
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn rounding_residual_vanishes_with_the_noise() {
        let g = grid(6);
        let mut residuals = Vec::new();
        for (idx, eps) in [0.2, 0.1, 0.05, 0.0].into_iter().enumerate() {
            let noisy = g.framework.inject_noise(&NoiseSpec {
                epsilon: eps,
                seed: 100 + idx as u64,
            });
            let sys = stress::build_patch_stress(&noisy).unwrap();
            let init = spectral_init(&sys);
            let mean: f64 = init.rounding_residuals.iter().sum::<f64>()
                / init.rounding_residuals.len() as f64;
            residuals.push(mean);
        }
        for pair in residuals.windows(2) {
            assert!(
                pair[1] <= pair[0] * 1.2 + 1e-12,
                "rounding residual should shrink with the noise: {residuals:?}"
            );
        }
        assert!(residuals.last().unwrap() <= &1e-8, "noiseless residual near zero");
    }

    #[test]
    fn quad_growth_holds_on_samples() {
        let g = grid(4);
        let sys0 = stress::build_patch_stress(&g.framework).unwrap();
        let report = quad_growth_check(&sys0, &g.ground_truth, 50, 11).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.tightest_ratio >= 1.0);
        // at a gauge transform of the truth both sides vanish
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let q = linalg::haar_orthogonal(2, &mut rng);
        let gauged = g.ground_truth.act(&q);
        let lhs = stress::alignment_error(&sys0, &gauged).unwrap();
        let (dist, _) = manifold::procrustes_distance(&gauged, &g.ground_truth).unwrap();
        assert!(lhs <= 1e-10 * (1.0 + sys0.c.norm()));
        assert!(dist <= 1e-10);
    }

    #[test]
    fn quad_growth_refuses_rank_deficient_systems() {
        let fixture = crate::fixtures::by_name("four-view-chain").unwrap();
        let sys = stress::build_patch_stress(&fixture.framework).unwrap();
        assert!(matches!(
            quad_growth_check(&sys, &fixture.perfect, 10, 0),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn stability_report_zero_noise_degenerates_to_zero() {
        let g = grid(5);
        let report = noise_stability_bound(
            &g.framework,
            &g.framework,
            &g.ground_truth,
            &g.ground_truth,
            0.0,
            0.1,
        )
        .unwrap();
        assert!(report.c_shift <= 1e-14);
        assert!(report.c_shift_bound == 0.0);
        assert!(report.dist_star_to_truth <= 1e-12);
        assert!(report.dist_bound <= 1e-10);
        assert!(report.k1 > 0.0 && report.k2 > 0.0);
    }
}
