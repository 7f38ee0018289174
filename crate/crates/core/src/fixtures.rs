//! Named planar fixtures with known alignment/rigidity behavior, used by the
//! CLI (`generate --fixture ...`) and the test suites. All fixtures are
//! constructed in the aligned gauge (local coordinates equal the global
//! ones), so the identity stack is a perfect alignment;
//! [`with_random_gauges`] scrambles each view by a random rigid motion and
//! returns the matching ground truth.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::framework::PatchFramework;
use crate::linalg;
use crate::manifold::Alignment;
use crate::Result;

/// A fixture: framework in the aligned gauge, the identity perfect
/// alignment, and the behavior it demonstrates.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub framework: PatchFramework,
    /// A perfect alignment of the framework (identity blocks).
    pub perfect: Alignment,
}

fn vec2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_column_slice(&[x, y])
}

fn build(name: &'static str, summary: &'static str, n: usize, views: Vec<Vec<(usize, (f64, f64))>>) -> Fixture {
    let views = views
        .into_iter()
        .map(|view| view.into_iter().map(|(k, (x, y))| (k, vec2(x, y))).collect())
        .collect();
    let framework = PatchFramework::new(2, n, views).expect("fixture geometry is valid");
    let perfect = Alignment::identity(2, framework.m());
    Fixture {
        name,
        summary,
        framework,
        perfect,
    }
}

/// Two views sharing a single point: the views can rotate independently
/// around the pin, so the perfect alignment is degenerate.
pub fn two_view_1pt() -> Fixture {
    build(
        "two-view-1pt",
        "two views pinned at one shared point: degenerate",
        5,
        vec![
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (0.2, 1.0))],
            vec![(0, (0.0, 0.0)), (3, (-1.0, 0.2)), (4, (-0.3, -1.0))],
        ],
    )
}

/// Two views sharing two distinct points: non-degenerate (rank of the
/// centered overlap is 1), but the second view can flip across the shared
/// axis, so the perfect alignment is not unique.
pub fn two_view_2pt() -> Fixture {
    build(
        "two-view-2pt",
        "two views sharing two points: non-degenerate, not unique",
        4,
        vec![
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (0.3, 1.1))],
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (3, (0.6, -0.9))],
        ],
    )
}

/// Two views sharing three non-collinear points: the perfect alignment is
/// unique (centered overlap has full rank 2).
pub fn two_view_3pt() -> Fixture {
    build(
        "two-view-3pt",
        "two views sharing three non-collinear points: unique",
        5,
        vec![
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (0.4, 0.9)), (3, (-0.5, 0.3))],
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (0.4, 0.9)), (4, (1.2, 0.7))],
        ],
    )
}

/// Chain of four views whose consecutive overlaps are two points each, all
/// overlap points collinear on one line; every view also holds an exclusive
/// off-line point. The alignment is non-degenerate (the overlap graph is a
/// connected path) yet rank C stays at 3 < (m-1)d = 6: the realization is
/// locally rigid but neither affinely rigid nor unique (the tail can flip
/// across the shared line).
pub fn four_view_chain() -> Fixture {
    // overlap points on the x-axis, exclusive points off it
    build(
        "four-view-chain",
        "four chained views with collinear overlaps: non-degenerate, rank C = 3",
        10,
        vec![
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (6, (0.5, 1.0))],
            vec![
                (0, (0.0, 0.0)),
                (1, (1.0, 0.0)),
                (2, (2.0, 0.0)),
                (3, (3.0, 0.0)),
                (7, (1.5, -1.0)),
            ],
            vec![
                (2, (2.0, 0.0)),
                (3, (3.0, 0.0)),
                (4, (4.0, 0.0)),
                (5, (5.0, 0.0)),
                (8, (3.5, 1.2)),
            ],
            vec![(4, (4.0, 0.0)), (5, (5.0, 0.0)), (9, (4.5, -0.8))],
        ],
    )
}

/// Four views forming a cyclic quadrilateral of bodies pinned at the four
/// corners: the classic flexible four-bar linkage. Every bipartition of the
/// views still shares at least two distinct points (partition rank ≥ 1),
/// yet the alignment is degenerate.
pub fn four_bar_linkage() -> Fixture {
    build(
        "four-bar-linkage",
        "cyclic quadrilateral of views pinned at corners: degenerate",
        8,
        vec![
            vec![(0, (0.0, 0.0)), (1, (1.0, 0.0)), (4, (0.5, -0.3))],
            vec![(1, (1.0, 0.0)), (2, (1.0, 1.0)), (5, (1.3, 0.5))],
            vec![(2, (1.0, 1.0)), (3, (0.0, 1.0)), (6, (0.5, 1.3))],
            vec![(3, (0.0, 1.0)), (0, (0.0, 0.0)), (7, (-0.3, 0.5))],
        ],
    )
}

/// Three views pinned pairwise at three non-collinear points: rigid as an
/// assembly (non-degenerate alignment), yet every pairwise overlap is a
/// single point, so the pairwise overlap graph stays edgeless and its
/// coarsening never merges (|𝔾*| = 3).
pub fn pinned_triangle() -> Fixture {
    build(
        "pinned-triangle",
        "three views pinned pairwise at triangle corners: non-degenerate, edgeless overlap graph",
        6,
        vec![
            vec![(0, (1.0, 0.0)), (1, (-0.5, 0.8)), (3, (0.3, 0.5))],
            vec![(1, (-0.5, 0.8)), (2, (-0.5, -0.8)), (4, (-0.8, 0.1))],
            vec![(2, (-0.5, -0.8)), (0, (1.0, 0.0)), (5, (0.2, -0.6))],
        ],
    )
}

/// All fixture constructors by name.
pub fn all() -> Vec<Fixture> {
    vec![
        two_view_1pt(),
        two_view_2pt(),
        two_view_3pt(),
        four_view_chain(),
        four_bar_linkage(),
        pinned_triangle(),
    ]
}

/// Looks a fixture up by its CLI name.
pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

/// Applies an independent random rigid motion (Haar orthogonal transform
/// plus translation) to every view's local coordinates, returning the new
/// framework and the ground-truth alignment that undoes the motions.
pub fn with_random_gauges(fw: &PatchFramework, seed: u64) -> Result<(PatchFramework, Alignment)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = fw.d();
    let mut views = Vec::with_capacity(fw.m());
    let mut blocks = Vec::with_capacity(fw.m());
    for i in 0..fw.m() {
        let q = linalg::haar_orthogonal(d, &mut rng);
        let b = DVector::from_fn(d, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        views.push(
            fw.view(i)
                .iter()
                .map(|(k, x)| (*k, &q * x + &b))
                .collect::<Vec<_>>(),
        );
        blocks.push(q);
    }
    let framework = PatchFramework::new(d, fw.n(), views)?;
    let ground_truth = Alignment::new(d, blocks)?;
    Ok((framework, ground_truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stress;

    #[test]
    fn fixtures_are_valid_and_identity_is_perfect() {
        for fixture in all() {
            let report = fixture.framework.validate();
            assert!(report.pass, "{} must validate: {report:?}", fixture.name);
            let sys = stress::build_patch_stress(&fixture.framework).unwrap();
            let f = stress::alignment_error(&sys, &fixture.perfect).unwrap();
            assert!(
                f <= 1e-12 * (1.0 + sys.c.norm()),
                "{}: identity must be a perfect alignment, F = {f:.3e}",
                fixture.name
            );
        }
    }

    #[test]
    fn random_gauges_preserve_perfection() {
        let fixture = two_view_3pt();
        let (fw, gt) = with_random_gauges(&fixture.framework, 7).unwrap();
        let sys = stress::build_patch_stress(&fw).unwrap();
        let f = stress::alignment_error(&sys, &gt).unwrap();
        assert!(f <= 1e-12 * (1.0 + sys.c.norm()));
    }

    #[test]
    fn lookup_by_name() {
        assert!(by_name("four-bar-linkage").is_some());
        assert!(by_name("nope").is_none());
        let names: Vec<_> = all().iter().map(|f| f.name).collect();
        assert_eq!(names.len(), 6);
    }
}
