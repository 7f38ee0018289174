//! Realizations and rigidity analysis. A perfect alignment realizes the
//! point cloud via the per-point consensus of the aligned views; this module
//! computes that realization, tests its infinitesimal rigidity through the
//! rank of the rigidity matrix, evaluates the overlap-rank conditions
//! (pairwise, partition-based and through the coarsened overlap graphs
//! 𝔾 and 𝔾̄), and extracts kernel certificates of `L(S)` together with the
//! infinitesimal flexes they induce.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certify::{AlignedStress, CertificateMatrix};
use crate::error::Error;
use crate::framework::PatchFramework;
use crate::linalg;
use crate::manifold::{self, Alignment};
use crate::stress::{optimal_positions, StressSystem};
use crate::Result;

/// Global point positions and view translations induced by an alignment.
#[derive(Debug, Clone)]
pub struct Realization {
    /// d×n matrix of consensus positions, translated to zero mean.
    pub points: DMatrix<f64>,
    /// Per-view translations t_i (consistent with the centered points).
    pub translations: Vec<DVector<f64>>,
    /// Geometric scale: max point norm after centering.
    pub scale: f64,
}

impl Realization {
    pub fn point(&self, k: usize) -> DVector<f64> {
        self.points.column(k).into_owned()
    }

    /// Largest per-edge residual `‖S_iᵀx_{k,i} + t_i - x_k‖` of the
    /// realization against a framework and alignment.
    pub fn max_edge_residual(&self, fw: &PatchFramework, s: &Alignment) -> f64 {
        let mut worst = 0.0f64;
        for (k, i, x) in fw.edges() {
            let predicted = s.block(i).transpose() * x + &self.translations[i];
            worst = worst.max((predicted - self.point(k)).norm());
        }
        worst
    }
}

/// Computes the realization: the minimum-norm solution of the inner least
/// squares gives the consensus positions (rows 1..n) and translations (rows
/// n+1..n+m); the whole realization is then translated to zero mean.
pub fn realize(sys: &StressSystem, s: &Alignment) -> Result<Realization> {
    if s.m() != sys.m || s.d() != sys.d {
        return Err(Error::contract("alignment does not match the system"));
    }
    let (d, n, m) = (sys.d, sys.n, sys.m);
    let u = optimal_positions(sys, s);
    let mut mean = DVector::zeros(d);
    for k in 0..n {
        mean += u.row(k).transpose();
    }
    mean /= n as f64;
    let mut points = DMatrix::zeros(d, n);
    for k in 0..n {
        points.set_column(k, &(u.row(k).transpose() - &mean));
    }
    let translations = (0..m)
        .map(|i| u.row(n + i).transpose() - &mean)
        .collect();
    let scale = (0..n).map(|k| points.column(k).norm()).fold(1.0f64, f64::max);
    Ok(Realization {
        points,
        translations,
        scale,
    })
}

/// Rigidity-matrix test: one row per unordered within-view point pair with
/// blocks `(x_{k1} - x_{k2})ᵀ` at `k1` and its negation at `k2`; the
/// realization is infinitesimally rigid iff `rank ≥ nd - d(d+1)/2`. Views
/// with fewer than two points contribute no rows. Returns (rank, verdict).
pub fn infinitesimal_rigidity_test(
    fw: &PatchFramework,
    realization: &Realization,
) -> (usize, bool) {
    let (d, n) = (fw.d(), fw.n());
    // Gram accumulation Rᵀ R keeps the working set at (nd)² regardless of
    // the pair count; singular values are the square roots.
    let mut gram = DMatrix::zeros(n * d, n * d);
    for i in 0..fw.m() {
        let ids: Vec<usize> = fw.view(i).iter().map(|(k, _)| *k).collect();
        for a in 0..ids.len() {
            for b in (a + 1)..ids.len() {
                let (k1, k2) = (ids[a], ids[b]);
                let diff = realization.point(k1) - realization.point(k2);
                for p in 0..d {
                    for q in 0..d {
                        let v = diff[p] * diff[q];
                        gram[(k1 * d + p, k1 * d + q)] += v;
                        gram[(k2 * d + p, k2 * d + q)] += v;
                        gram[(k1 * d + p, k2 * d + q)] -= v;
                        gram[(k2 * d + p, k1 * d + q)] -= v;
                    }
                }
            }
        }
    }
    let (eigs, _) = linalg::sym_eigen_ascending(&gram);
    // the Gram squares the singular values, so the zero threshold must be
    // applied to the eigenvalues themselves
    let lmax = eigs[eigs.len() - 1].max(0.0);
    let tol = linalg::zero_threshold(n * d, lmax);
    let rank = eigs.iter().filter(|&&l| l > tol).count();
    (rank, rank >= n * d - d * (d + 1) / 2)
}

/// Rank of the centered pairwise overlap matrix `B̄_{i,j}` (columns are view
/// `i`'s coordinates of the points shared with view `j`). No alignment is
/// needed: the rank is invariant under the rigid motion of view `i`.
/// Returns (rank, descending singular values); empty overlap gives rank 0.
pub fn overlap_rank_pair(fw: &PatchFramework, i: usize, j: usize) -> (usize, Vec<f64>) {
    let shared = fw.overlap(i, j);
    centered_rank(
        fw.d(),
        shared
            .iter()
            .map(|&k| fw.coord(k, i).expect("shared point in view").clone())
            .collect(),
    )
}

fn centered_rank(d: usize, columns: Vec<DVector<f64>>) -> (usize, Vec<f64>) {
    if columns.is_empty() {
        return (0, Vec::new());
    }
    let mut mat = DMatrix::zeros(d, columns.len());
    for (c, col) in columns.iter().enumerate() {
        mat.set_column(c, col);
    }
    let mean = mat.column_mean();
    for mut col in mat.column_iter_mut() {
        col -= &mean;
    }
    linalg::rank_with_values(&mat)
}

/// Rank of the centered set-overlap matrix `B̄(S)_{A,B}` whose columns are
/// the aligned coordinates of points shared across the (A, B) cut. Requires
/// a perfect alignment; when a shared point lies in several views of `A`,
/// the lowest view index supplies the column and agreement of the others is
/// verified within `1e-8 · scale`.
pub fn overlap_rank_sets(
    fw: &PatchFramework,
    s: &Alignment,
    realization: &Realization,
    a: &[usize],
    b: &[usize],
) -> Result<(usize, Vec<f64>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("overlap rank needs non-empty view sets"));
    }
    if a.iter().any(|i| b.contains(i)) {
        return Err(Error::contract("view sets must be disjoint"));
    }
    let tol = 1e-8 * realization.scale;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    for k in 0..fw.n() {
        let in_a: Vec<usize> = a
            .iter()
            .copied()
            .filter(|&i| fw.coord(k, i).is_some())
            .collect();
        if in_a.is_empty() {
            continue;
        }
        if !b.iter().any(|&j| fw.coord(k, j).is_some()) {
            continue;
        }
        let column = |i: usize| {
            s.block(i).transpose() * fw.coord(k, i).expect("checked")
                + &realization.translations[i]
        };
        let first = column(in_a[0]);
        for &i in &in_a[1..] {
            let other = column(i);
            if (&other - &first).norm() > tol {
                return Err(Error::NotApplicable(format!(
                    "aligned coordinates of point {} disagree across views {} and {} \
                     (the alignment is not perfect)",
                    k + 1,
                    in_a[0] + 1,
                    i + 1
                )));
            }
        }
        columns.push(first);
    }
    Ok(centered_rank(fw.d(), columns))
}

/// Two-view verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct TwoViewReport {
    /// Symmetry of `B̄(S)₁₂ B̄(S)₂₁ᵀ` within tolerance (criticality).
    pub critical: bool,
    pub asymmetry: f64,
    /// Non-degeneracy through the three general-setting conditions.
    pub nondegenerate: bool,
    /// Uniqueness: `rank(B̄₁₂ B̄₂₁ᵀ) = d`.
    pub unique: bool,
    pub overlap_points: usize,
    pub rank_product: usize,
    pub rank_overlap: usize,
}

/// Evaluates the two-view tests: symmetry of `M = B̄(S)₁₂ B̄(S)₂₁ᵀ`,
/// positivity of `Tr(Ωᵀ M Ω)` over the skew basis, and the rank conditions
/// `rank ≥ d-1` (non-degeneracy) and `rank = d` (uniqueness).
pub fn two_view_tests(fw: &PatchFramework, s: &Alignment) -> Result<TwoViewReport> {
    if fw.m() != 2 {
        return Err(Error::contract(format!(
            "two-view tests require m = 2, framework has m = {}",
            fw.m()
        )));
    }
    if s.m() != 2 || s.d() != fw.d() {
        return Err(Error::contract("alignment does not match the framework"));
    }
    let d = fw.d();
    let shared = fw.overlap(0, 1);
    let n_shared = shared.len();
    let centered = |view: usize| -> DMatrix<f64> {
        let mut mat = DMatrix::zeros(d, n_shared);
        for (c, &k) in shared.iter().enumerate() {
            mat.set_column(c, fw.coord(k, view).expect("shared"));
        }
        if n_shared > 0 {
            let mean = mat.column_mean();
            for mut col in mat.column_iter_mut() {
                col -= &mean;
            }
        }
        mat
    };
    // B̄(S)₁₂ B̄(S)₂₁ᵀ = S₁ᵀ B̄₁₂ B̄₂₁ᵀ S₂ (centering removes translations)
    let b12 = centered(0);
    let b21 = centered(1);
    let product = s.block(0).transpose() * &b12 * b21.transpose() * s.block(1);
    let scale = linalg::spectral_norm(&product).max(1.0);
    let asymmetry = (&product - product.transpose()).norm();
    let critical = asymmetry <= 1e-9 * scale;

    // positivity of Tr(Ωᵀ M Ω) over Skew(d): assemble the quadratic form on
    // the upper-triangular coordinates and check its eigenvalues
    let pairs = manifold::upper_pairs(d);
    let mut form = DMatrix::zeros(pairs.len(), pairs.len());
    let basis: Vec<DMatrix<f64>> = pairs
        .iter()
        .map(|&(r, c)| {
            let mut e = DMatrix::zeros(d, d);
            e[(r, c)] = 1.0;
            e[(c, r)] = -1.0;
            e
        })
        .collect();
    let sym = (&product + product.transpose()) * 0.5;
    for (a, ea) in basis.iter().enumerate() {
        for (b, eb) in basis.iter().enumerate() {
            form[(a, b)] = (&sym * eb).dot(ea);
        }
    }
    let psd = if pairs.is_empty() {
        true
    } else {
        let (eigs, _) = linalg::sym_eigen_ascending(&form);
        eigs[0] >= -linalg::zero_threshold(pairs.len(), eigs[eigs.len() - 1].abs())
    };

    let (rank_product, _) = linalg::rank_with_values(&product);
    let (rank_overlap, _) = overlap_rank_pair(fw, 0, 1);
    let nondegenerate = critical && psd && rank_product + 1 >= d;
    let unique = rank_product == d;
    Ok(TwoViewReport {
        critical,
        asymmetry,
        nondegenerate,
        unique,
        overlap_points: n_shared,
        rank_product,
        rank_overlap,
    })
}

/// Result of building and coarsening the overlap graphs.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapGraphReport {
    /// Connected components of 𝔾 (edge iff pairwise overlap rank ≥ d-1).
    pub graph_components: usize,
    /// Connected components of 𝔾̄ (edge iff pairwise overlap rank = d).
    pub graph_bar_components: usize,
    /// Component counts after each coarsening round.
    pub coarsening_rounds: Vec<usize>,
    pub coarsening_rounds_bar: Vec<usize>,
    /// |𝔾*(S)|: super-views remaining at the fixpoint.
    pub coarse_size: usize,
    /// |𝔾̄*(S)|.
    pub coarse_size_bar: usize,
    /// Sufficiency verdicts (their failure is inconclusive).
    pub nondegenerate_sufficient: bool,
    pub unique_sufficient: bool,
}

/// Builds 𝔾 and 𝔾̄ from the pairwise overlap ranks and coarsens each to its
/// fixpoint: views in a common component merge into a super-view holding the
/// union of their points with the aligned global coordinates, the graph is
/// rebuilt, and the procedure repeats. Requires a perfect alignment, since
/// the merge uses the consensus coordinates.
pub fn overlap_graph_analysis(
    fw: &PatchFramework,
    s: &Alignment,
    sys: &StressSystem,
) -> Result<OverlapGraphReport> {
    let realization = realize(sys, s)?;
    let residual = realization.max_edge_residual(fw, s);
    if residual > 1e-8 * realization.scale.max(1.0) {
        return Err(Error::NotApplicable(format!(
            "coarsening requires a perfect alignment (max edge residual {residual:.3e})"
        )));
    }
    let d = fw.d();
    // super-view = sorted point set; coordinates come from the realization
    let initial: Vec<Vec<usize>> = (0..fw.m())
        .map(|i| fw.view(i).iter().map(|(k, _)| *k).collect())
        .collect();

    let run = |required_rank: usize| -> (usize, Vec<usize>, usize) {
        let mut groups = initial.clone();
        let mut rounds = Vec::new();
        let mut first_components = 0;
        loop {
            let count = groups.len();
            let mut adjacency = vec![Vec::new(); count];
            for i in 0..count {
                for j in (i + 1)..count {
                    let shared = sorted_intersection(&groups[i], &groups[j]);
                    let (rank, _) = centered_rank(
                        d,
                        shared.iter().map(|&k| realization.point(k)).collect(),
                    );
                    if rank >= required_rank {
                        adjacency[i].push(j);
                        adjacency[j].push(i);
                    }
                }
            }
            let labels = components(&adjacency);
            let n_comp = labels.iter().copied().max().map_or(0, |mx| mx + 1);
            if rounds.is_empty() {
                first_components = n_comp;
            }
            rounds.push(n_comp);
            if n_comp == count {
                return (first_components, rounds, count);
            }
            let mut merged: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
            for (g, &label) in labels.iter().enumerate() {
                merged[label].extend(groups[g].iter().copied());
            }
            for group in &mut merged {
                group.sort_unstable();
                group.dedup();
            }
            groups = merged;
        }
    };

    let (graph_components, coarsening_rounds, coarse_size) = run(d.saturating_sub(1));
    let (graph_bar_components, coarsening_rounds_bar, coarse_size_bar) = run(d);
    Ok(OverlapGraphReport {
        graph_components,
        graph_bar_components,
        nondegenerate_sufficient: coarse_size == 1,
        unique_sufficient: coarse_size_bar == 1,
        coarsening_rounds,
        coarsening_rounds_bar,
        coarse_size,
        coarse_size_bar,
    })
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[p]);
                p += 1;
                q += 1;
            }
        }
    }
    out
}

fn components(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let mut labels = vec![usize::MAX; adjacency.len()];
    let mut next = 0;
    for start in 0..adjacency.len() {
        if labels[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if labels[w] == usize::MAX {
                    labels[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    labels
}

/// Minimum over all non-trivial bipartitions of the views.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub partitions_checked: usize,
    pub min_rank: usize,
    /// 1-based view indices of the minimizing side containing view 1.
    pub min_partition: Vec<usize>,
    /// Necessary condition for non-degeneracy: min rank ≥ d-1.
    pub nondegeneracy_necessary_holds: bool,
    /// Necessary condition for uniqueness: min rank = d.
    pub uniqueness_necessary_holds: bool,
}

/// Enumerates all `2^{m-1} - 1` bipartitions (the side containing view 1
/// against the rest) and reports the minimizing overlap rank. Failing a
/// necessary condition certifies degeneracy / non-uniqueness; passing is
/// inconclusive. Refuses for `m > max_m`.
pub fn partition_necessary_check(
    fw: &PatchFramework,
    s: &Alignment,
    sys: &StressSystem,
    max_m: usize,
) -> Result<PartitionReport> {
    let m = fw.m();
    if m > max_m {
        return Err(Error::NotApplicable(format!(
            "partition enumeration over m = {m} views needs 2^{} subsets; \
             raise max_m (currently {max_m}) explicitly to force it",
            m - 1
        )));
    }
    if m < 2 {
        return Err(Error::contract("partitions need at least two views"));
    }
    let realization = realize(sys, s)?;
    let d = fw.d();
    let mut min_rank = usize::MAX;
    let mut min_partition = Vec::new();
    let mut checked = 0;
    // view 0 stays in A; the mask enumerates membership of views 1..m
    for mask in 0..(1u64 << (m - 1)) {
        let mut a = vec![0usize];
        let mut b = Vec::new();
        for v in 1..m {
            if mask >> (v - 1) & 1 == 1 {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        if b.is_empty() {
            continue;
        }
        checked += 1;
        let (rank, _) = overlap_rank_sets(fw, s, &realization, &a, &b)?;
        if rank < min_rank {
            min_rank = rank;
            min_partition = a.iter().map(|v| v + 1).collect();
        }
    }
    Ok(PartitionReport {
        partitions_checked: checked,
        min_rank,
        min_partition,
        nondegeneracy_necessary_holds: min_rank + 1 >= d,
        uniqueness_necessary_holds: min_rank == d,
    })
}

/// A kernel certificate of `L(S)`: a stack of skew blocks annihilated by
/// `L(S)`, its triviality flag, and the induced point perturbation.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub skews: Vec<DMatrix<f64>>,
    /// Trivial when all blocks agree (a global infinitesimal rotation).
    pub trivial: bool,
    /// d×n induced perturbation of the realization points.
    pub perturbation: DMatrix<f64>,
}

/// Extracts the kernel of `𝕃(S)` as skew certificates and maps each to the
/// point perturbation `p_k = Ωᵀ blockdiag(Sᵀ) B ℒ† e_k`. Requires a
/// noiseless critical alignment (`Ĉ(S) ≈ 0`); refuses on noisy input where
/// the kernel has no flex interpretation.
pub fn extract_certificates(
    sys: &StressSystem,
    s: &Alignment,
    aligned: &AlignedStress,
    cert: &CertificateMatrix,
) -> Result<Vec<Certificate>> {
    if !aligned.critical {
        return Err(Error::NotApplicable(
            "certificates require a critical alignment".into(),
        ));
    }
    if !aligned.is_noiseless() {
        return Err(Error::NotApplicable(format!(
            "certificates require a noiseless (perfect) alignment; F = {:.3e}",
            aligned.f_value
        )));
    }
    let (d, m, n) = (sys.d, sys.m, sys.n);
    let mut out = Vec::new();
    // P = Ωᵀ blockdiag(Sᵀ) B ℒ†; build blockdiag(Sᵀ)·B once
    let mut sb = DMatrix::zeros(m * d, n + m);
    for i in 0..m {
        let rows = sys.b.rows(i * d, d);
        sb.view_mut((i * d, 0), (d, n + m))
            .copy_from(&(s.block(i).transpose() * rows));
    }
    let sbl = &sb * &sys.laplacian_pinv;
    for idx in 0..cert.eigs.len() {
        if cert.eigs[idx].abs() > cert.tau {
            continue;
        }
        let omega_vec = cert.eigvecs.column(idx).into_owned();
        let skews = manifold::skews_from_omega(&omega_vec, d, m);
        let mut mean = DMatrix::zeros(d, d);
        for sk in &skews {
            mean += sk;
        }
        mean /= m as f64;
        let trivial = skews
            .iter()
            .all(|sk| (sk - &mean).norm() <= 1e-8 * (1.0 + mean.norm()));
        let stacked = manifold::from_skews(skews.clone()).stacked();
        let perturbation = (stacked.transpose() * &sbl).columns(0, n).into_owned();
        out.push(Certificate {
            skews,
            trivial,
            perturbation,
        });
    }
    Ok(out)
}

/// Combined rigidity report.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub rank_rigidity_matrix: usize,
    pub rank_rigidity_target: usize,
    pub infinitesimally_rigid: bool,
    pub rank_c: usize,
    pub rank_c_target: usize,
    pub affinely_rigid: bool,
    pub two_view: Option<TwoViewReport>,
    /// None when the alignment is not perfect (coarsening inapplicable).
    pub graphs: Option<OverlapGraphReport>,
    /// None when the alignment is not perfect or m exceeds the cap.
    pub partitions: Option<PartitionReport>,
    /// None on noisy input, where the kernel has no flex interpretation.
    pub certificates_total: Option<usize>,
    pub certificates_nontrivial: Option<usize>,
    pub max_edge_residual: f64,
}

/// Runs the full rigidity analysis for a (preferably perfect) alignment:
/// rigidity-matrix rank, affine-rigidity rank of C, two-view verdicts when
/// m = 2, overlap-graph coarsening and the partition check (skipped above
/// `max_m`), plus certificate extraction on noiseless critical input.
pub fn analyze(
    fw: &PatchFramework,
    sys: &StressSystem,
    s: &Alignment,
    aligned: &AlignedStress,
    cert: &CertificateMatrix,
    max_m: usize,
) -> Result<RigidityReport> {
    let realization = realize(sys, s)?;
    let (rank_r, inf_rigid) = infinitesimal_rigidity_test(fw, &realization);
    let rank_c = sys.rank_c();
    let affinely_rigid = rank_c == (sys.m - 1) * sys.d;
    let two_view = if fw.m() == 2 {
        Some(two_view_tests(fw, s)?)
    } else {
        None
    };
    let graphs = overlap_graph_analysis(fw, s, sys).ok();
    let partitions = if fw.m() >= 2 && fw.m() <= max_m {
        partition_necessary_check(fw, s, sys, max_m).ok()
    } else {
        None
    };
    let certificates = extract_certificates(sys, s, aligned, cert).ok();
    Ok(RigidityReport {
        rank_rigidity_matrix: rank_r,
        rank_rigidity_target: fw.n() * fw.d() - fw.d() * (fw.d() + 1) / 2,
        infinitesimally_rigid: inf_rigid,
        rank_c,
        rank_c_target: (sys.m - 1) * sys.d,
        affinely_rigid,
        two_view,
        graphs,
        partitions,
        certificates_total: certificates.as_ref().map(Vec::len),
        certificates_nontrivial: certificates
            .as_ref()
            .map(|list| list.iter().filter(|c| !c.trivial).count()),
        max_edge_residual: realization.max_edge_residual(fw, s),
    })
}
