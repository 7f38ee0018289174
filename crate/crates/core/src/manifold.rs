//! Geometry of `𝕆(d)ᵐ` and its quotient by a global orthogonal transform:
//! tangent/vertical/horizontal projections, horizontal lifts, the quotient
//! metric, exponential-map retractions and the Procrustes distance.
//!
//! An alignment is a stack of `m` orthogonal `d×d` blocks. Two alignments are
//! equivalent when they differ by right-multiplication with a common
//! `Q ∈ 𝕆(d)`; the quotient representative is `S̃ = S_{2:m} S₁ᵀ`, with
//! canonical lift `[I_d; S̃]`. Tangent vectors at `S` are `Z_i = S_i Ω_i`
//! with `Ω_i` skew; the horizontal subspace is cut out by `Σ Ω_i = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::Result;

/// Orthogonality tolerance for alignment blocks.
pub const ORTHO_TOL: f64 = 1e-9;

/// A stack of `m` orthogonal `d×d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    d: usize,
    blocks: Vec<DMatrix<f64>>,
}

/// A representative of the quotient `𝕆(d)ᵐ/∼`: the `m-1` blocks of
/// `S_{2:m} S₁ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientAlignment {
    d: usize,
    blocks: Vec<DMatrix<f64>>,
}

/// Tangent vector at some alignment, stored through its skew generators
/// (`Z_i = S_i Ω_i`). The base point is supplied alongside wherever it is
/// needed.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub skews: Vec<DMatrix<f64>>,
}

/// Horizontal tangent vector: skew generators summing to zero, together with
/// the flattened coordinate vector `ω` (blocks `ω_{r,s} ∈ ℝᵐ` for
/// `1 ≤ r < s ≤ d`, pairs ordered (1,2),(1,3),(2,3),...).
#[derive(Debug, Clone)]
pub struct HorizontalTangent {
    pub skews: Vec<DMatrix<f64>>,
    pub omega: DVector<f64>,
}

impl Alignment {
    /// Builds an alignment, checking each block is orthogonal to 1e-9.
    pub fn new(d: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::contract("alignment needs at least one block"));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::contract(format!(
                    "block {} of alignment is {}x{}, expected {d}x{d}",
                    i + 1,
                    b.nrows(),
                    b.ncols()
                )));
            }
            let drift = (b.transpose() * b - DMatrix::identity(d, d)).norm();
            if drift > ORTHO_TOL {
                return Err(Error::contract(format!(
                    "block {} of alignment is not orthogonal (|SᵀS - I| = {drift:.3e})",
                    i + 1
                )));
            }
        }
        Ok(Alignment { d, blocks })
    }

    /// Identity alignment (every block `I_d`).
    pub fn identity(d: usize, m: usize) -> Self {
        Alignment {
            d,
            blocks: vec![DMatrix::identity(d, d); m],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// The stacked `md×d` matrix `[S_1; ...; S_m]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (d, m) = (self.d, self.m());
        let mut s = DMatrix::zeros(m * d, d);
        for (i, b) in self.blocks.iter().enumerate() {
            s.view_mut((i * d, 0), (d, d)).copy_from(b);
        }
        s
    }

    /// Right-multiplies every block by `q`.
    pub fn act(&self, q: &DMatrix<f64>) -> Alignment {
        Alignment {
            d: self.d,
            blocks: self.blocks.iter().map(|b| b * q).collect(),
        }
    }

    /// Projection `π(S) = S_{2:m} S₁ᵀ` onto the quotient.
    pub fn project(&self) -> QuotientAlignment {
        let s1t = self.blocks[0].transpose();
        QuotientAlignment {
            d: self.d,
            blocks: self.blocks[1..].iter().map(|b| b * &s1t).collect(),
        }
    }

    /// Re-orthonormalizes every block via polar rounding when the drift
    /// exceeds the tolerance. The exponential map preserves orthogonality
    /// analytically but not over thousands of floating-point iterations.
    pub fn renormalize(&mut self) {
        let id = DMatrix::identity(self.d, self.d);
        for b in &mut self.blocks {
            if (b.transpose() * &*b - &id).norm() > ORTHO_TOL {
                let (rounded, _) = linalg::polar_orthogonal(b);
                *b = rounded;
            }
        }
    }
}

impl QuotientAlignment {
    pub fn new(d: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let inner = Alignment::new(d, blocks)?;
        Ok(QuotientAlignment {
            d,
            blocks: inner.blocks,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of views `m` (one more than the number of stored blocks).
    pub fn m(&self) -> usize {
        self.blocks.len() + 1
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Canonical representative `[I_d; S̃] ∈ π⁻¹(S̃)`.
    pub fn canonical_lift(&self) -> Alignment {
        let mut blocks = Vec::with_capacity(self.blocks.len() + 1);
        blocks.push(DMatrix::identity(self.d, self.d));
        blocks.extend(self.blocks.iter().cloned());
        Alignment {
            d: self.d,
            blocks,
        }
    }

    /// Frobenius distance between quotient representatives.
    pub fn distance(&self, other: &QuotientAlignment) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl TangentVector {
    /// Frobenius norm of the stacked tangent vector (`‖Z‖_F = ‖Ω‖_F`).
    pub fn norm(&self) -> f64 {
        self.skews.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }

    /// Ambient representative `Z_i = S_i Ω_i` at the given base.
    pub fn ambient(&self, base: &Alignment) -> Vec<DMatrix<f64>> {
        self.skews
            .iter()
            .zip(base.blocks())
            .map(|(omega, s)| s * omega)
            .collect()
    }

    pub fn scale(&self, t: f64) -> TangentVector {
        TangentVector {
            skews: self.skews.iter().map(|s| s * t).collect(),
        }
    }
}

impl HorizontalTangent {
    pub fn norm(&self) -> f64 {
        self.skews.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, t: f64) -> HorizontalTangent {
        from_skews(self.skews.iter().map(|s| s * t).collect())
    }

    pub fn as_tangent(&self) -> TangentVector {
        TangentVector {
            skews: self.skews.clone(),
        }
    }

    /// The stacked `md×d` matrix `[Ω_1; ...; Ω_m]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let d = self.skews[0].nrows();
        let m = self.skews.len();
        let mut out = DMatrix::zeros(m * d, d);
        for (i, s) in self.skews.iter().enumerate() {
            out.view_mut((i * d, 0), (d, d)).copy_from(s);
        }
        out
    }
}

/// Builds a horizontal tangent from skew blocks, computing the flattened
/// `ω` coordinates. `ω_{r,s}[i] = Ω_i(r,s)`, pairs (r,s) with r < s ordered
/// column-major: (1,2),(1,3),(2,3),(1,4),...
pub fn from_skews(skews: Vec<DMatrix<f64>>) -> HorizontalTangent {
    let d = skews[0].nrows();
    let m = skews.len();
    let pairs = upper_pairs(d);
    let mut omega = DVector::zeros(pairs.len() * m);
    for (p, &(r, s)) in pairs.iter().enumerate() {
        for (i, sk) in skews.iter().enumerate() {
            omega[p * m + i] = sk[(r, s)];
        }
    }
    HorizontalTangent { skews, omega }
}

/// Inverse of the `ω` flattening: rebuilds the skew blocks from the
/// coordinate vector.
pub fn skews_from_omega(omega: &DVector<f64>, d: usize, m: usize) -> Vec<DMatrix<f64>> {
    let pairs = upper_pairs(d);
    assert_eq!(omega.len(), pairs.len() * m, "omega length mismatch");
    let mut skews = vec![DMatrix::zeros(d, d); m];
    for (p, &(r, s)) in pairs.iter().enumerate() {
        for (i, sk) in skews.iter_mut().enumerate() {
            let v = omega[p * m + i];
            sk[(r, s)] = v;
            sk[(s, r)] = -v;
        }
    }
    skews
}

/// Strictly-upper index pairs of a `d×d` matrix in column-major order.
pub fn upper_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for s in 0..d {
        for r in 0..s {
            pairs.push((r, s));
        }
    }
    pairs
}

/// Orthogonal projection of `m` stacked ambient `d×d` matrices onto the
/// tangent space at `S`: `Ω_i = Skew(S_iᵀ ξ_i)`.
pub fn project_tangent(base: &Alignment, xi: &[DMatrix<f64>]) -> TangentVector {
    let skews = base
        .blocks()
        .iter()
        .zip(xi)
        .map(|(s, x)| linalg::skew_part(&(s.transpose() * x)))
        .collect();
    TangentVector { skews }
}

/// Projection onto the horizontal subspace: subtracts the block mean of the
/// skew generators, so the result satisfies `Σ Ω_i = 0`.
pub fn horizontal_project(z: &TangentVector) -> HorizontalTangent {
    let m = z.skews.len();
    let d = z.skews[0].nrows();
    let mut mean = DMatrix::zeros(d, d);
    for s in &z.skews {
        mean += s;
    }
    mean /= m as f64;
    from_skews(z.skews.iter().map(|s| s - &mean).collect())
}

/// Vertical component: the common block mean repeated in every slot.
pub fn vertical_project(z: &TangentVector) -> TangentVector {
    let m = z.skews.len();
    let d = z.skews[0].nrows();
    let mut mean = DMatrix::zeros(d, d);
    for s in &z.skews {
        mean += s;
    }
    mean /= m as f64;
    TangentVector {
        skews: vec![mean; m],
    }
}

/// Horizontal lift of a quotient tangent vector (skew generators `Ω̃_i` at
/// `S̃`) to the representative `S ∈ π⁻¹(S̃)`:
///
/// `Ω₁ = -m⁻¹ S₁ᵀ(Σ Ω̃_i) S₁`, `Ω_{i+1} = S₁ᵀ Ω̃_i S₁ + Ω₁`.
pub fn horizontal_lift(
    quotient: &QuotientAlignment,
    tilde_skews: &[DMatrix<f64>],
    base: &Alignment,
) -> Result<HorizontalTangent> {
    let d = quotient.d();
    let m = quotient.m();
    if base.m() != m || base.d() != d {
        return Err(Error::contract("lift base has mismatched dimensions"));
    }
    if tilde_skews.len() != m - 1 {
        return Err(Error::contract(format!(
            "expected {} quotient skew blocks, got {}",
            m - 1,
            tilde_skews.len()
        )));
    }
    let mismatch = base.project().distance(quotient);
    if mismatch > 1e-9 * (m as f64).sqrt() {
        return Err(Error::contract(format!(
            "base is not a representative of the quotient point (|π(S) - S̃| = {mismatch:.3e})"
        )));
    }
    let s1 = base.block(0);
    let mut sum = DMatrix::zeros(d, d);
    for t in tilde_skews {
        sum += t;
    }
    let omega1 = -(s1.transpose() * sum * s1) / m as f64;
    let mut skews = Vec::with_capacity(m);
    skews.push(omega1.clone());
    for t in tilde_skews {
        skews.push(s1.transpose() * t * s1 + &omega1);
    }
    Ok(from_skews(skews))
}

/// Canonical metric `g(Z, W) = Σ Tr(Z_iᵀ W_i) = Σ Tr(Ω_iᵀ Υ_i)`.
pub fn metric(z: &TangentVector, w: &TangentVector) -> f64 {
    z.skews
        .iter()
        .zip(&w.skews)
        .map(|(a, b)| a.dot(b))
        .sum()
}

/// Quotient metric `g̃(Z̃, W̃)`: the canonical metric of the horizontal
/// lifts at any representative (independent of the choice).
pub fn quotient_metric(
    quotient: &QuotientAlignment,
    z_tilde: &[DMatrix<f64>],
    w_tilde: &[DMatrix<f64>],
) -> Result<f64> {
    let base = quotient.canonical_lift();
    let z = horizontal_lift(quotient, z_tilde, &base)?;
    let w = horizontal_lift(quotient, w_tilde, &base)?;
    Ok(metric(&z.as_tangent(), &w.as_tangent()))
}

/// Closed form of the quotient metric in the quotient generators:
/// `Σ Tr(Ũ_iᵀ Ṽ_i) - m⁻¹ Σ_{i,j} Tr(Ũ_iᵀ Ṽ_j)`.
pub fn quotient_metric_closed_form(
    m: usize,
    z_tilde: &[DMatrix<f64>],
    w_tilde: &[DMatrix<f64>],
) -> f64 {
    let direct: f64 = z_tilde.iter().zip(w_tilde).map(|(a, b)| a.dot(b)).sum();
    let d = z_tilde[0].nrows();
    let mut zsum = DMatrix::zeros(d, d);
    let mut wsum = DMatrix::zeros(d, d);
    for a in z_tilde {
        zsum += a;
    }
    for b in w_tilde {
        wsum += b;
    }
    direct - zsum.dot(&wsum) / m as f64
}

/// Matrix exponential of a skew-symmetric matrix: closed form for d ≤ 3
/// (planar rotation / Rodrigues), scaling-and-squaring Taylor otherwise.
pub fn expm_skew(omega: &DMatrix<f64>) -> DMatrix<f64> {
    let d = omega.nrows();
    match d {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::identity(1, 1),
        2 => {
            let a = omega[(0, 1)];
            DMatrix::from_row_slice(2, 2, &[a.cos(), a.sin(), -a.sin(), a.cos()])
        }
        3 => {
            let theta2 = omega[(0, 1)].powi(2) + omega[(0, 2)].powi(2) + omega[(1, 2)].powi(2);
            let theta = theta2.sqrt();
            // sin(θ)/θ and (1-cos θ)/θ² with series fallbacks near 0.
            let (c1, c2) = if theta < 1e-4 {
                (
                    1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
                    0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
                )
            } else {
                (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
            };
            DMatrix::identity(3, 3) + omega * c1 + omega * omega * c2
        }
        _ => expm_scaling_squaring(omega),
    }
}

fn expm_scaling_squaring(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let d = mat.nrows();
    let norm = mat.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = mat / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..=24 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.norm() < 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exponential-map retraction `R(S, Z)_i = S_i exp(scale · Ω_i)`.
pub fn retract(base: &Alignment, z: &TangentVector, scale: f64) -> Alignment {
    let blocks = base
        .blocks()
        .iter()
        .zip(&z.skews)
        .map(|(s, omega)| s * expm_skew(&(omega * scale)))
        .collect();
    let mut out = Alignment {
        d: base.d(),
        blocks,
    };
    out.renormalize();
    out
}

/// Quotient retraction `R̃(S̃, Z̃) = π(R(S, Z))` evaluated at the canonical
/// representative; independent of the representative by construction.
pub fn quotient_retract(
    quotient: &QuotientAlignment,
    tilde_skews: &[DMatrix<f64>],
    scale: f64,
) -> Result<QuotientAlignment> {
    let base = quotient.canonical_lift();
    let lift = horizontal_lift(quotient, tilde_skews, &base)?;
    Ok(retract(&base, &lift.as_tangent(), scale).project())
}

/// Procrustes distance `min_{Q ∈ 𝕆(d)} ‖S - T Q‖_F` between two alignments,
/// together with the minimizing `Q` (polar factor of `Tᵀ S`).
pub fn procrustes_distance(s: &Alignment, t: &Alignment) -> Result<(f64, DMatrix<f64>)> {
    if s.m() != t.m() || s.d() != t.d() {
        return Err(Error::contract(format!(
            "procrustes distance between incompatible alignments ({}x{} vs {}x{})",
            s.m(),
            s.d(),
            t.m(),
            t.d()
        )));
    }
    let d = s.d();
    let mut cross = DMatrix::zeros(d, d);
    for (a, b) in t.blocks().iter().zip(s.blocks()) {
        cross += a.transpose() * b;
    }
    let (q, _) = linalg::polar_orthogonal(&cross);
    let dist2: f64 = s
        .blocks()
        .iter()
        .zip(t.blocks())
        .map(|(a, b)| (a - b * &q).norm_squared())
        .sum();
    Ok((dist2.max(0.0).sqrt(), q))
}

// ── JSON formats ────────────────────────────────────────────────────────────

/// Serialized form: `{ "d": int, "m": int, "blocks": [[row-major d·d floats]] }`.
#[derive(Serialize, Deserialize)]
struct AlignmentJson {
    d: usize,
    m: usize,
    blocks: Vec<Vec<f64>>,
}

impl Alignment {
    pub fn to_json(&self) -> String {
        let json = AlignmentJson {
            d: self.d,
            m: self.m(),
            blocks: self
                .blocks
                .iter()
                .map(|b| b.transpose().as_slice().to_vec())
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("alignment serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: AlignmentJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "alignment".into(),
            reason: e.to_string(),
        })?;
        if json.blocks.len() != json.m {
            return Err(Error::Parse {
                path: "alignment.blocks".into(),
                reason: format!("expected {} blocks, found {}", json.m, json.blocks.len()),
            });
        }
        let mut blocks = Vec::with_capacity(json.m);
        for (i, raw) in json.blocks.iter().enumerate() {
            if raw.len() != json.d * json.d {
                return Err(Error::Parse {
                    path: format!("alignment.blocks[{i}]"),
                    reason: format!("expected {} entries, found {}", json.d * json.d, raw.len()),
                });
            }
            blocks.push(DMatrix::from_row_slice(json.d, json.d, raw));
        }
        Alignment::new(json.d, blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_alignment(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Alignment {
        Alignment::new(d, (0..m).map(|_| linalg::haar_orthogonal(d, rng)).collect()).unwrap()
    }

    fn random_horizontal(d: usize, m: usize, rng: &mut ChaCha8Rng) -> HorizontalTangent {
        horizontal_project(&TangentVector {
            skews: (0..m).map(|_| linalg::random_skew(d, rng)).collect(),
        })
    }

    #[test]
    fn projection_kills_symmetric_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_alignment(3, 4, &mut rng);
        // ξ_i = S_i M with M symmetric projects to zero.
        let g = DMatrix::from_fn(3, 3, |_, _| rng.gen::<f64>());
        let sym = (&g + g.transpose()) * 0.5;
        let xi: Vec<_> = s.blocks().iter().map(|b| b * &sym).collect();
        let z = project_tangent(&s, &xi);
        assert!(z.norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_residual_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_alignment(3, 3, &mut rng);
        let xi: Vec<_> = (0..3)
            .map(|_| DMatrix::from_fn(3, 3, |_, _| rng.gen::<f64>() - 0.5))
            .collect();
        let z = project_tangent(&s, &xi);
        let z2 = project_tangent(&s, &z.ambient(&s));
        let diff: f64 = z
            .skews
            .iter()
            .zip(&z2.skews)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12, "projection not idempotent: {diff}");
        // residual g-orthogonal to the projection
        let xi_norm2: f64 = xi.iter().map(|x| x.norm_squared()).sum();
        let zamb = z.ambient(&s);
        let inner: f64 = xi
            .iter()
            .zip(&zamb)
            .map(|(x, za)| (x - za).dot(za))
            .sum();
        assert!(inner.abs() <= 1e-10 * xi_norm2);
    }

    #[test]
    fn vertical_vectors_have_zero_horizontal_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let omega0 = linalg::random_skew(2, &mut rng);
        let z = TangentVector {
            skews: vec![omega0; 5],
        };
        let h = horizontal_project(&z);
        assert!(h.norm() < 1e-13);
    }

    #[test]
    fn horizontal_vertical_decomposition_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = TangentVector {
            skews: (0..4).map(|_| linalg::random_skew(3, &mut rng)).collect(),
        };
        let h = horizontal_project(&z);
        let v = vertical_project(&z);
        for i in 0..4 {
            assert_relative_eq!(
                (&h.skews[i] + &v.skews[i] - &z.skews[i]).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
        let g = metric(&h.as_tangent(), &v);
        assert!(g.abs() <= 1e-10 * z.norm().powi(2));
        // already-horizontal input is unchanged
        let h2 = horizontal_project(&h.as_tangent());
        for i in 0..4 {
            assert!((&h2.skews[i] - &h.skews[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn lift_two_views_matches_hand_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let st = QuotientAlignment::new(3, vec![linalg::haar_orthogonal(3, &mut rng)]).unwrap();
        let base = st.canonical_lift(); // S = (I, S̃₁)
        let omega_t = linalg::random_skew(3, &mut rng);
        let lift = horizontal_lift(&st, std::slice::from_ref(&omega_t), &base).unwrap();
        assert!((&lift.skews[0] + &omega_t * 0.5).norm() < 1e-12);
        assert!((&lift.skews[1] - &omega_t * 0.5).norm() < 1e-12);
        // zero lifts to zero
        let zero = horizontal_lift(&st, &[DMatrix::zeros(3, 3)], &base).unwrap();
        assert!(zero.norm() == 0.0);
    }

    #[test]
    fn lift_pushes_forward_to_the_quotient_vector() {
        // Dπ[S](Z)_i = S_{i+1}Ω_{i+1}S₁ᵀ + S_{i+1}Ω₁ᵀS₁ᵀ must equal S̃_iΩ̃_i.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(d, m) in &[(2usize, 3usize), (3, 5)] {
            let s = random_alignment(d, m, &mut rng);
            let st = s.project();
            let tilde: Vec<_> = (0..m - 1).map(|_| linalg::random_skew(d, &mut rng)).collect();
            let lift = horizontal_lift(&st, &tilde, &s).unwrap();
            let sum: DMatrix<f64> = lift.skews.iter().fold(DMatrix::zeros(d, d), |a, b| a + b);
            assert!(sum.norm() < 1e-10, "lift not horizontal");
            for (i, tilde_i) in tilde.iter().enumerate() {
                let pushed = s.block(i + 1) * &lift.skews[i + 1] * s.block(0).transpose()
                    + s.block(i + 1) * lift.skews[0].transpose() * s.block(0).transpose();
                let expected = &st.blocks()[i] * tilde_i;
                assert!((pushed - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn lift_norm_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (d, m) = (3usize, 4usize);
            let s = random_alignment(d, m, &mut rng);
            let st = s.project();
            let tilde: Vec<_> = (0..m - 1).map(|_| linalg::random_skew(d, &mut rng)).collect();
            let z_tilde_norm = tilde.iter().map(|t| t.norm_squared()).sum::<f64>().sqrt();
            let lift = horizontal_lift(&st, &tilde, &s).unwrap();
            let z_norm = lift.norm();
            assert!(z_norm <= z_tilde_norm + 1e-12);
            assert!(z_tilde_norm <= ((m + 1) as f64).sqrt() * z_norm + 1e-12);
        }
    }

    #[test]
    fn quotient_metric_is_representative_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (d, m) = (3usize, 4usize);
        let s = random_alignment(d, m, &mut rng);
        let st = s.project();
        let zt: Vec<_> = (0..m - 1).map(|_| linalg::random_skew(d, &mut rng)).collect();
        let wt: Vec<_> = (0..m - 1).map(|_| linalg::random_skew(d, &mut rng)).collect();
        let za = horizontal_lift(&st, &zt, &s).unwrap();
        let wa = horizontal_lift(&st, &wt, &s).unwrap();
        let ga = metric(&za.as_tangent(), &wa.as_tangent());
        let q = linalg::haar_orthogonal(d, &mut rng);
        let sq = s.act(&q);
        let zb = horizontal_lift(&st, &zt, &sq).unwrap();
        let wb = horizontal_lift(&st, &wt, &sq).unwrap();
        let gb = metric(&zb.as_tangent(), &wb.as_tangent());
        assert_relative_eq!(ga, gb, epsilon = 1e-10 * (1.0 + ga.abs()));
        let gc = quotient_metric_closed_form(m, &zt, &wt);
        assert_relative_eq!(ga, gc, epsilon = 1e-10 * (1.0 + ga.abs()));
        // positive definite on nonzero vectors
        let gz = quotient_metric(&st, &zt, &zt).unwrap();
        assert!(gz > 0.0);
    }

    #[test]
    fn quotient_metric_closed_form_two_views_single_generator() {
        // m = 2, d = 2, single skew generator a and b in the only quotient
        // slot: g̃ = Tr(ŨᵀṼ)(1 - 1/2) = ab·2·(1/2) = ab.
        let a = 0.7;
        let b = -1.3;
        let za = DMatrix::from_row_slice(2, 2, &[0.0, a, -a, 0.0]);
        let zb = DMatrix::from_row_slice(2, 2, &[0.0, b, -b, 0.0]);
        let g = quotient_metric_closed_form(2, &[za], &[zb]);
        assert_relative_eq!(g, a * b, epsilon = 1e-14);
    }

    #[test]
    fn expm_matches_series_and_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [2usize, 3, 4, 5] {
            for _ in 0..20 {
                let omega = linalg::random_skew(d, &mut rng);
                let e = expm_skew(&omega);
                let drift = (e.transpose() * &e - DMatrix::identity(d, d)).norm();
                assert!(drift < 1e-12, "exp not orthogonal for d={d}: {drift}");
                let series = expm_scaling_squaring(&omega);
                assert!((e - series).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn retraction_is_first_order_and_exact_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_alignment(3, 3, &mut rng);
        let z = TangentVector {
            skews: (0..3).map(|_| linalg::random_skew(3, &mut rng)).collect(),
        };
        let zero = retract(&s, &z, 0.0);
        assert_eq!(zero, s);
        let t = 1e-5;
        let moved = retract(&s, &z, t);
        let zamb = z.ambient(&s);
        for (i, za) in zamb.iter().enumerate() {
            let lin = s.block(i) + za * t;
            assert!((moved.block(i) - lin).norm() < 10.0 * t * t * z.norm().powi(2));
        }
    }

    #[test]
    fn retraction_linearization_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = random_alignment(3, 1, &mut rng);
            let mut omega = linalg::random_skew(3, &mut rng);
            let norm = omega.norm();
            if norm > 1.0 {
                omega /= norm * 1.0001;
            }
            let z = TangentVector {
                skews: vec![omega.clone()],
            };
            let r = retract(&s, &z, 1.0);
            let lin = s.block(0) + s.block(0) * &omega;
            let lhs = (r.block(0) - lin).norm();
            assert!(lhs <= (std::f64::consts::E - 1.0) * omega.norm_squared() + 1e-12);
        }
    }

    #[test]
    fn quotient_retract_is_representative_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (d, m) = (3usize, 4usize);
        let s = random_alignment(d, m, &mut rng);
        let st = s.project();
        let tilde: Vec<_> = (0..m - 1)
            .map(|_| linalg::random_skew(d, &mut rng) * 0.3)
            .collect();
        let za = horizontal_lift(&st, &tilde, &s).unwrap();
        let ra = retract(&s, &za.as_tangent(), 1.0).project();
        let q = linalg::haar_orthogonal(d, &mut rng);
        let sq = s.act(&q);
        let zb = horizontal_lift(&st, &tilde, &sq).unwrap();
        let rb = retract(&sq, &zb.as_tangent(), 1.0).project();
        assert!(ra.distance(&rb) <= 1e-9);
        let rc = quotient_retract(&st, &tilde, 1.0).unwrap();
        assert!(ra.distance(&rc) <= 1e-9);
    }

    #[test]
    fn procrustes_recovers_the_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_alignment(3, 4, &mut rng);
        let q0 = linalg::haar_orthogonal(3, &mut rng);
        let t = s.act(&q0.transpose());
        let (dist, q) = procrustes_distance(&s, &t).unwrap();
        assert!(dist < 1e-12);
        assert!((q - q0).norm() < 1e-10);
        let (d1, _) = procrustes_distance(&s, &t).unwrap();
        let (d2, _) = procrustes_distance(&t, &s).unwrap();
        assert_relative_eq!(d1, d2, epsilon = 1e-10);
    }

    #[test]
    fn procrustes_matches_grid_search_in_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = random_alignment(2, 3, &mut rng);
        let t = random_alignment(2, 3, &mut rng);
        let (dist, _) = procrustes_distance(&s, &t).unwrap();
        // brute force over rotations and reflections at 1 degree resolution
        let mut best = f64::INFINITY;
        for refl in [1.0f64, -1.0] {
            for deg in 0..360 {
                let a = (deg as f64).to_radians();
                let q = DMatrix::from_row_slice(
                    2,
                    2,
                    &[a.cos(), -refl * a.sin(), a.sin(), refl * a.cos()],
                );
                let d2: f64 = s
                    .blocks()
                    .iter()
                    .zip(t.blocks())
                    .map(|(x, y)| (x - y * &q).norm_squared())
                    .sum();
                best = best.min(d2.sqrt());
            }
        }
        assert!(dist <= best + 1e-12);
        // grid resolution bound: 1 degree of rotation moves each block by at
        // most |θ|·√2, so the grid minimum is within that of the true one.
        let slack = (std::f64::consts::PI / 180.0) * (2.0f64).sqrt() * 3.0;
        assert!(best <= dist + slack);
    }

    #[test]
    fn canonical_lift_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let st = QuotientAlignment::new(
            2,
            (0..4).map(|_| linalg::haar_orthogonal(2, &mut rng)).collect(),
        )
        .unwrap();
        let back = st.canonical_lift().project();
        assert!(st.distance(&back) < 1e-12);
    }

    #[test]
    fn tangent_dimensions_by_sampled_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let (d, m) = (3usize, 4usize);
        let tangent_dim = m * d * (d - 1) / 2;
        let horiz_dim = (m - 1) * d * (d - 1) / 2;
        let samples = 2 * tangent_dim;
        let mut tangent_mat = DMatrix::zeros(m * d * d, samples);
        let mut horiz_mat = DMatrix::zeros(m * d * d, samples);
        for j in 0..samples {
            let z = TangentVector {
                skews: (0..m).map(|_| linalg::random_skew(d, &mut rng)).collect(),
            };
            let h = horizontal_project(&z);
            for i in 0..m {
                for r in 0..d {
                    for c in 0..d {
                        tangent_mat[(i * d * d + r * d + c, j)] = z.skews[i][(r, c)];
                        horiz_mat[(i * d * d + r * d + c, j)] = h.skews[i][(r, c)];
                    }
                }
            }
        }
        assert_eq!(linalg::rank_with_values(&tangent_mat).0, tangent_dim);
        assert_eq!(linalg::rank_with_values(&horiz_mat).0, horiz_dim);
    }

    #[test]
    fn omega_flattening_is_an_isometry_up_to_sqrt2() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = random_horizontal(3, 5, &mut rng);
        let omega_norm2 = h.omega.norm_squared();
        assert_relative_eq!(omega_norm2, h.norm().powi(2) / 2.0, epsilon = 1e-12);
        let back = skews_from_omega(&h.omega, 3, 5);
        for (a, b) in back.iter().zip(&h.skews) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn retractions_stay_orthogonal_and_project_back(
                seed in 0u64..10_000,
                scale in -3.0f64..3.0,
                m in 2usize..5,
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_alignment(3, m, &mut rng);
                let z = TangentVector {
                    skews: (0..m).map(|_| linalg::random_skew(3, &mut rng)).collect(),
                };
                let moved = retract(&s, &z, scale);
                let id = DMatrix::identity(3, 3);
                for b in moved.blocks() {
                    prop_assert!((b.transpose() * b - &id).norm() <= 1e-10);
                }
                // π of the canonical lift is the identity on the quotient
                let st = moved.project();
                prop_assert!(st.canonical_lift().project().distance(&st) <= 1e-12);
            }
        }
    }

    #[test]
    fn alignment_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let s = random_alignment(3, 2, &mut rng);
        let text = s.to_json();
        let back = Alignment::from_json(&text).unwrap();
        assert_eq!(s, back);
    }
}
