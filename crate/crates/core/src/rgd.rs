//! Riemannian gradient descent on the quotient manifold: the Riemannian
//! gradient of the alignment error, Armijo backtracking, and the iteration
//! loop with per-iterate diagnostics.
//!
//! Each iteration lifts the quotient iterate canonically to `Sᵏ = [I_d; S̃ᵏ]`,
//! steps along the negative gradient through the exponential-map retraction
//! and projects back. The stopping rule is a gradient-norm threshold (the
//! criterion is ours; see `RgdConfig::grad_tol`).

use serde::Serialize;

use crate::error::Error;
use crate::manifold::{self, Alignment, HorizontalTangent, QuotientAlignment};
use crate::stress::{alignment_error, alignment_error_residual, StressSystem};
use crate::Result;

/// Line-search and stopping parameters.
#[derive(Debug, Clone, Copy)]
pub struct RgdConfig {
    /// Backtracking factor in (0,1).
    pub beta: f64,
    /// Sufficient-decrease factor in (0,1).
    pub gamma: f64,
    /// Stop when `‖grad F‖_F` falls below this. When `None`, defaults to
    /// `1e-10·(1 + ‖C‖_F)` at run time.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for RgdConfig {
    fn default() -> Self {
        RgdConfig {
            beta: 0.5,
            gamma: 0.1,
            grad_tol: None,
            max_iters: 1000,
            max_backtracks: 60,
        }
    }
}

impl RgdConfig {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) || !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::contract("beta and gamma must lie in (0,1)"));
        }
        if let Some(tol) = self.grad_tol {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::contract("grad_tol must be positive"));
            }
        }
        Ok(())
    }

    pub fn resolved_grad_tol(&self, sys: &StressSystem) -> f64 {
        self.grad_tol.unwrap_or(1e-10 * (1.0 + sys.c.norm()))
    }
}

/// One per-iteration record of an RGD run.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    /// Step size taken from this iterate (0 for the final record).
    pub alpha: f64,
    /// Procrustes distance to the reference alignment, when supplied.
    pub dist_to_ref: Option<f64>,
    /// `(F(S̃ᵏ) - F*) / (F(S̃⁰) - F*)`.
    pub ratio: f64,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    GradientTolerance,
    MaxIterations,
    /// Backtracking exhausted its budget: at a noisy minimum the objective
    /// cannot resolve decreases below `eps·F*`, so the gradient has reached
    /// the evaluation noise floor even if it sits above `grad_tol`.
    StepSizeFloor,
}

/// Full trace of an RGD run.
#[derive(Debug, Clone, Serialize)]
pub struct RgdTrace {
    pub rows: Vec<TraceRow>,
    pub termination: TerminationReason,
    /// The `F*` used for the ratio column: `F(reference)` when a reference
    /// was supplied, the best value seen otherwise.
    pub f_star: f64,
    pub iterations: usize,
}

impl RgdTrace {
    pub fn final_f(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.f_value)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// Least-squares slope of `log ratio` against the iteration counter,
    /// over rows with `ratio > floor`. `None` with fewer than 3 usable rows.
    pub fn log_ratio_slope(&self, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.ratio > floor)
            .map(|r| (r.iter as f64, r.ratio.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        (denom.abs() > 1e-12).then(|| (n * sxy - sx * sy) / denom)
    }

    /// Serializes as the trace CSV (`iter,F,grad_norm,alpha,dist_to_ref,ratio`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,F,grad_norm,alpha,dist_to_ref,ratio\n");
        for r in &self.rows {
            let dist = r
                .dist_to_ref
                .map_or_else(|| "".into(), |v| format!("{v:.17e}"));
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{},{:.17e}\n",
                r.iter, r.f_value, r.grad_norm, r.alpha, dist, r.ratio
            ));
        }
        out
    }
}

/// Riemannian gradient of `F` at `S`: skew generators
/// `Ω_i = S_iᵀ[CS]_i - [CS]_iᵀS_i` (horizontal because `C` is symmetric).
pub fn riemannian_gradient(sys: &StressSystem, s: &Alignment) -> HorizontalTangent {
    let d = sys.d;
    let cs = sys.c_times(s);
    let skews = (0..sys.m)
        .map(|i| {
            let csi = cs.view((i * d, 0), (d, d));
            let sti_csi = s.block(i).transpose() * csi;
            &sti_csi - sti_csi.transpose()
        })
        .collect();
    manifold::from_skews(skews)
}

/// Armijo step size: the largest `β^l`, `l ≥ 0`, with
/// `F(R(S, -β^l grad)) - F(S) ≤ -γ β^l ‖grad‖²_F`
/// (using `g(∇F, grad F) = ‖grad F‖²_F`). `F` is evaluated through the
/// least-squares residual form, which resolves decreases far below the
/// cancellation floor of `Tr(C S Sᵀ)`. Errors after `max_backtracks`
/// halvings, which signals a gradient below numerical noise.
pub fn armijo_step_size(
    sys: &StressSystem,
    s: &Alignment,
    grad: &HorizontalTangent,
    cfg: &RgdConfig,
) -> Result<f64> {
    cfg.validate()?;
    let f0 = alignment_error(sys, s).map(|_| alignment_error_residual(sys, s))?;
    let g2 = grad.norm().powi(2);
    if g2 == 0.0 {
        return Err(Error::contract("armijo step on a zero gradient"));
    }
    let mut alpha = 1.0;
    for _ in 0..=cfg.max_backtracks {
        let candidate = manifold::retract(s, &grad.as_tangent(), -alpha);
        let f1 = alignment_error_residual(sys, &candidate);
        if f1 - f0 <= -cfg.gamma * alpha * g2 {
            return Ok(alpha);
        }
        alpha *= cfg.beta;
    }
    Err(Error::StepFailure {
        backtracks: cfg.max_backtracks,
        f_value: f0,
        grad_norm: g2.sqrt(),
    })
}

/// Runs the descent from `S̃⁰`. The trace records every iterate (including
/// the final one with `alpha = 0`). An exhausted line search terminates the
/// run with `TerminationReason::StepSizeFloor` and the trace up to that
/// point; only non-numeric errors propagate.
pub fn run_rgd(
    sys: &StressSystem,
    start: &QuotientAlignment,
    cfg: &RgdConfig,
    reference: Option<&Alignment>,
) -> Result<(QuotientAlignment, RgdTrace)> {
    cfg.validate()?;
    if start.m() != sys.m || start.d() != sys.d {
        return Err(Error::contract("start point does not match the system"));
    }
    if let Some(r) = reference {
        if r.m() != sys.m || r.d() != sys.d {
            return Err(Error::contract("reference does not match the system"));
        }
    }
    let grad_tol = cfg.resolved_grad_tol(sys);
    let mut current = start.clone();
    let mut raw_rows: Vec<(usize, f64, f64, f64, Option<f64>)> = Vec::new();
    let mut termination = TerminationReason::MaxIterations;
    let mut iterations = 0;

    for k in 0..=cfg.max_iters {
        let lift = current.canonical_lift();
        let f = alignment_error_residual(sys, &lift);
        let grad = riemannian_gradient(sys, &lift);
        let gnorm = grad.norm();
        let dist = match reference {
            Some(r) => Some(manifold::procrustes_distance(&lift, r)?.0),
            None => None,
        };
        if gnorm <= grad_tol {
            raw_rows.push((k, f, gnorm, 0.0, dist));
            termination = TerminationReason::GradientTolerance;
            iterations = k;
            break;
        }
        if k == cfg.max_iters {
            raw_rows.push((k, f, gnorm, 0.0, dist));
            termination = TerminationReason::MaxIterations;
            iterations = k;
            break;
        }
        let alpha = match armijo_step_size(sys, &lift, &grad, cfg) {
            Ok(alpha) => alpha,
            Err(Error::StepFailure { .. }) => {
                raw_rows.push((k, f, gnorm, 0.0, dist));
                termination = TerminationReason::StepSizeFloor;
                iterations = k;
                break;
            }
            Err(other) => return Err(other),
        };
        raw_rows.push((k, f, gnorm, alpha, dist));
        current = manifold::retract(&lift, &grad.as_tangent(), -alpha).project();
    }

    let f_star = match reference {
        Some(r) => alignment_error(sys, r).map(|_| alignment_error_residual(sys, r))?,
        None => raw_rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
    };
    let f0 = raw_rows.first().map_or(0.0, |r| r.1);
    let denom = f0 - f_star;
    let rows = raw_rows
        .into_iter()
        .map(|(iter, f_value, grad_norm, alpha, dist_to_ref)| TraceRow {
            iter,
            f_value,
            grad_norm,
            alpha,
            dist_to_ref,
            ratio: if denom > 0.0 {
                ((f_value - f_star) / denom).max(0.0)
            } else {
                0.0
            },
        })
        .collect();
    Ok((
        current,
        RgdTrace {
            rows,
            termination,
            f_star,
            iterations,
        },
    ))
}
