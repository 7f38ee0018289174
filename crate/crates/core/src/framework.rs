//! Patch frameworks: a bipartite incidence between `n` points and `m` views
//! together with the local coordinates each view assigns to its points.
//! Includes validation, a synthetic grid generator with known ground truth,
//! bounded-noise injection and the JSON file format.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::manifold::Alignment;
use crate::Result;

/// A patch framework. Points and views are indexed 0-based internally; the
/// JSON file format and report output use 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFramework {
    d: usize,
    n: usize,
    /// Per view: sorted list of (point index, local coordinate).
    views: Vec<Vec<(usize, DVector<f64>)>>,
}

/// Bounded-noise parameters: every local coordinate is perturbed by an
/// independent vector drawn uniformly from the ball of radius `epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
}

/// Outcome of [`PatchFramework::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub components: usize,
    /// Number of points in each view.
    pub view_point_counts: Vec<usize>,
    /// Per view: does the centered coordinate matrix have rank d?
    pub affine_nondegenerate: Vec<bool>,
    /// 1-based indices of affinely degenerate views.
    pub offending_views: Vec<usize>,
    pub pass: bool,
}

impl PatchFramework {
    /// Builds a framework from per-view point lists, checking the structural
    /// invariants: indices in range, no duplicate (point, view) incidence,
    /// coordinates of length `d` with finite entries, every view non-empty
    /// and every point appearing in at least one view.
    pub fn new(d: usize, n: usize, views: Vec<Vec<(usize, DVector<f64>)>>) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("ambient dimension must be at least 1"));
        }
        if n < 1 || views.is_empty() {
            return Err(Error::invalid("framework needs at least one point and one view"));
        }
        let mut covered = vec![false; n];
        let mut views = views;
        for (i, view) in views.iter_mut().enumerate() {
            if view.is_empty() {
                return Err(Error::invalid(format!("view {} contains no points", i + 1)));
            }
            view.sort_by_key(|(k, _)| *k);
            let mut prev = usize::MAX;
            for (k, x) in view.iter() {
                if *k >= n {
                    return Err(Error::invalid(format!(
                        "view {} references point {} outside 1..={n}",
                        i + 1,
                        k + 1
                    )));
                }
                if *k == prev {
                    return Err(Error::invalid(format!(
                        "duplicate incidence of point {} in view {}",
                        k + 1,
                        i + 1
                    )));
                }
                prev = *k;
                if x.len() != d {
                    return Err(Error::invalid(format!(
                        "coordinate of point {} in view {} has length {}, expected {d}",
                        k + 1,
                        i + 1,
                        x.len()
                    )));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!(
                        "coordinate of point {} in view {} is not finite",
                        k + 1,
                        i + 1
                    )));
                }
                covered[*k] = true;
            }
        }
        if let Some(k) = covered.iter().position(|c| !c) {
            return Err(Error::invalid(format!(
                "point {} does not appear in any view",
                k + 1
            )));
        }
        Ok(PatchFramework { d, n, views })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn edge_count(&self) -> usize {
        self.views.iter().map(|v| v.len()).sum()
    }

    /// Points of view `i` with their local coordinates, sorted by point id.
    pub fn view(&self, i: usize) -> &[(usize, DVector<f64>)] {
        &self.views[i]
    }

    /// Local coordinate of point `k` in view `i`, if the incidence exists.
    pub fn coord(&self, k: usize, i: usize) -> Option<&DVector<f64>> {
        self.views[i]
            .binary_search_by_key(&k, |(p, _)| *p)
            .ok()
            .map(|idx| &self.views[i][idx].1)
    }

    /// Iterates all incidences as (point, view, coordinate).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &DVector<f64>)> {
        self.views
            .iter()
            .enumerate()
            .flat_map(|(i, view)| view.iter().map(move |(k, x)| (*k, i, x)))
    }

    /// Point ids shared by views `i` and `j`, sorted.
    pub fn overlap(&self, i: usize, j: usize) -> Vec<usize> {
        let (a, b) = (&self.views[i], &self.views[j]);
        let mut out = Vec::new();
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].0.cmp(&b[q].0) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[p].0);
                    p += 1;
                    q += 1;
                }
            }
        }
        out
    }

    /// Connectivity of the bipartite point-view graph.
    pub fn connectivity(&self) -> (bool, usize) {
        let total = self.n + self.m();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
        for (k, i, _) in self.edges() {
            adj[k].push(self.n + i);
            adj[self.n + i].push(k);
        }
        let mut seen = vec![false; total];
        let mut components = 0;
        for start in 0..total {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        (components == 1, components)
    }

    /// Centered local coordinate matrix of view `i` (columns are the view's
    /// coordinates minus their mean).
    pub fn centered_view_matrix(&self, i: usize) -> DMatrix<f64> {
        let pts = &self.views[i];
        let mut mat = DMatrix::zeros(self.d, pts.len());
        for (c, (_, x)) in pts.iter().enumerate() {
            mat.set_column(c, x);
        }
        let mean = mat.column_mean();
        for mut col in mat.column_iter_mut() {
            col -= &mean;
        }
        mat
    }

    /// Reports Γ-connectivity, per-view point counts and per-view affine
    /// non-degeneracy (the centered coordinate matrix has rank `d`, with
    /// singular values thresholded at `1e-9 · σ_max`).
    pub fn validate(&self) -> ValidationReport {
        let (connected, components) = self.connectivity();
        let mut affine = Vec::with_capacity(self.m());
        let mut offending = Vec::new();
        for i in 0..self.m() {
            let sv = linalg::singular_values(&self.centered_view_matrix(i));
            let rank = match sv.first() {
                Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > 1e-9 * smax).count(),
                _ => 0,
            };
            let ok = rank == self.d;
            affine.push(ok);
            if !ok {
                offending.push(i + 1);
            }
        }
        let pass = connected && offending.is_empty();
        ValidationReport {
            connected,
            components,
            view_point_counts: self.views.iter().map(|v| v.len()).collect(),
            affine_nondegenerate: affine,
            offending_views: offending,
            pass,
        }
    }

    /// Perturbs every local coordinate by an independent vector drawn
    /// uniformly from the `epsilon`-ball. Deterministic given the seed; the
    /// graph structure is unchanged. `epsilon <= 0` returns a bitwise copy.
    pub fn inject_noise(&self, spec: &NoiseSpec) -> PatchFramework {
        if spec.epsilon <= 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let views = self
            .views
            .iter()
            .map(|view| {
                view.iter()
                    .map(|(k, x)| (*k, x + linalg::sample_ball(self.d, spec.epsilon, &mut rng)))
                    .collect()
            })
            .collect();
        PatchFramework {
            d: self.d,
            n: self.n,
            views,
        }
    }
}

// ── Grid generator ──────────────────────────────────────────────────────────

/// Parameters of the synthetic unit-cube grid generator.
#[derive(Debug, Clone, Copy)]
pub struct GridParams {
    /// Points per axis (coordinates j/(resolution-1)); at least 2.
    pub resolution: usize,
    /// Ambient dimension, 1..=3.
    pub d: usize,
    /// Tiles per axis; the framework has tiles^d views.
    pub tiles: usize,
    /// Desired shared fraction of a tile with its neighbor, in (0,1).
    pub overlap: f64,
    pub seed: u64,
}

/// Generator output: the framework, the ground-truth perfect alignment, the
/// inverse translations and the global point coordinates (one column per
/// point).
#[derive(Debug, Clone)]
pub struct GridFramework {
    pub framework: PatchFramework,
    pub ground_truth: Alignment,
    pub global_points: DMatrix<f64>,
}

/// Generates points on a unit-cube grid covered by overlapping axis-aligned
/// tiles. Each view's local coordinates are a Haar-random orthogonal
/// transform plus translation of the global coordinates, so the inverse
/// transforms form a perfect alignment. Adjacent tiles share at least two
/// grid planes, hence at least d+1 affinely independent points.
pub fn generate_grid(params: &GridParams) -> Result<GridFramework> {
    if params.resolution < 2 {
        return Err(Error::Generation("resolution must be at least 2".into()));
    }
    if !(1..=3).contains(&params.d) {
        return Err(Error::Generation("grid generator supports d in 1..=3".into()));
    }
    if !(params.overlap > 0.0 && params.overlap < 1.0) {
        return Err(Error::Generation("overlap fraction must lie in (0,1)".into()));
    }
    if params.tiles < 1 {
        return Err(Error::Generation("need at least one tile per axis".into()));
    }
    let windows = axis_windows(params.resolution, params.tiles, params.overlap)?;
    let d = params.d;
    let r = params.resolution;
    let n = r.pow(d as u32);
    let m = params.tiles.pow(d as u32);

    let step = 1.0 / (r - 1) as f64;
    let mut global = DMatrix::zeros(d, n);
    for k in 0..n {
        let mut rem = k;
        for axis in 0..d {
            global[(axis, k)] = (rem % r) as f64 * step;
            rem /= r;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut views = Vec::with_capacity(m);
    let mut gt_blocks = Vec::with_capacity(m);
    for tile in 0..m {
        // multi-index of the tile over axes
        let mut rem = tile;
        let mut ranges = Vec::with_capacity(d);
        for _ in 0..d {
            ranges.push(windows[rem % params.tiles]);
            rem /= params.tiles;
        }
        let q = linalg::haar_orthogonal(d, &mut rng);
        let b = DVector::from_fn(d, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let mut view = Vec::new();
        for k in 0..n {
            let mut rem = k;
            let mut inside = true;
            for &(lo, hi) in &ranges {
                let idx = rem % r;
                rem /= r;
                if idx < lo || idx > hi {
                    inside = false;
                    break;
                }
            }
            if inside {
                let x = DVector::from_iterator(d, global.column(k).iter().copied());
                view.push((k, &q * x + &b));
            }
        }
        if view.len() < d + 1 {
            return Err(Error::Generation(format!(
                "tile {} contains {} points, need at least {}",
                tile + 1,
                view.len(),
                d + 1
            )));
        }
        views.push(view);
        gt_blocks.push(q);
    }
    let framework = PatchFramework::new(d, n, views)
        .map_err(|e| Error::Generation(format!("generated framework invalid: {e}")))?;
    let ground_truth = Alignment::new(d, gt_blocks)?;
    Ok(GridFramework {
        framework,
        ground_truth,
        global_points: global,
    })
}

/// Index windows [lo, hi] (inclusive) of `tiles` overlapping intervals
/// covering 0..resolution-1, with at least 2 shared indices between
/// neighbors.
fn axis_windows(resolution: usize, tiles: usize, overlap: f64) -> Result<Vec<(usize, usize)>> {
    if tiles == 1 {
        return Ok(vec![(0, resolution - 1)]);
    }
    // Window length w chosen so that w*(1-overlap) strides cover the axis;
    // grown if rounding leaves a neighbor overlap below 2 indices.
    let ideal = resolution as f64 / (1.0 + (1.0 - overlap) * (tiles - 1) as f64);
    let mut w = (ideal.round() as usize).max(2);
    loop {
        if w > resolution {
            return Err(Error::Generation(format!(
                "{tiles} tiles with overlap do not fit a resolution-{resolution} axis"
            )));
        }
        let stride = (resolution - w) as f64 / (tiles - 1) as f64;
        if stride < 1.0 - 1e-9 {
            return Err(Error::Generation(format!(
                "{tiles} tiles of {w} points exceed a resolution-{resolution} axis \
                 (tiles too small or too many)"
            )));
        }
        let mut starts: Vec<usize> = (0..tiles)
            .map(|a| (a as f64 * stride).round() as usize)
            .collect();
        starts[tiles - 1] = resolution - w;
        let max_gap = starts.windows(2).map(|p| p[1] - p[0]).max().unwrap_or(0);
        if max_gap + 2 <= w {
            return Ok(starts.iter().map(|&s| (s, s + w - 1)).collect());
        }
        w = max_gap + 2;
    }
}

// ── JSON file format ────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct PointJson {
    id: usize,
    #[serde(default)]
    coords: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ViewJson {
    index: usize,
    points: Vec<PointJson>,
}

#[derive(Serialize, Deserialize)]
struct FrameworkJson {
    d: usize,
    n: usize,
    m: usize,
    views: Vec<ViewJson>,
}

/// Parses the framework JSON format. Unknown fields are ignored for forward
/// compatibility; duplicate (id, view) pairs and missing coordinates are
/// rejected with the offending location.
pub fn parse_framework(text: &str) -> Result<PatchFramework> {
    let json: FrameworkJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "framework".into(),
        reason: e.to_string(),
    })?;
    if json.views.len() != json.m {
        return Err(Error::Parse {
            path: "framework.views".into(),
            reason: format!("m = {} but {} views listed", json.m, json.views.len()),
        });
    }
    let mut seen_index = vec![false; json.m];
    let mut views = vec![Vec::new(); json.m];
    for view in &json.views {
        if view.index < 1 || view.index > json.m {
            return Err(Error::Parse {
                path: format!("framework.views[index={}]", view.index),
                reason: format!("view index outside 1..={}", json.m),
            });
        }
        if seen_index[view.index - 1] {
            return Err(Error::Parse {
                path: format!("framework.views[index={}]", view.index),
                reason: "duplicate view index".into(),
            });
        }
        seen_index[view.index - 1] = true;
        let mut entries = Vec::with_capacity(view.points.len());
        for pt in &view.points {
            let coords = pt.coords.as_ref().ok_or_else(|| Error::Parse {
                path: format!("views[index={}].points[id={}]", view.index, pt.id),
                reason: "missing coords".into(),
            })?;
            if pt.id < 1 || pt.id > json.n {
                return Err(Error::Parse {
                    path: format!("views[index={}].points[id={}]", view.index, pt.id),
                    reason: format!("point id outside 1..={}", json.n),
                });
            }
            entries.push((pt.id - 1, DVector::from_column_slice(coords)));
        }
        views[view.index - 1] = entries;
    }
    PatchFramework::new(json.d, json.n, views).map_err(|e| match e {
        Error::InvalidFramework(reason) => Error::Parse {
            path: "framework".into(),
            reason,
        },
        other => other,
    })
}

/// Serializes to the framework JSON format (1-based ids).
pub fn serialize_framework(fw: &PatchFramework) -> String {
    let json = FrameworkJson {
        d: fw.d,
        n: fw.n,
        m: fw.m(),
        views: fw
            .views
            .iter()
            .enumerate()
            .map(|(i, view)| ViewJson {
                index: i + 1,
                points: view
                    .iter()
                    .map(|(k, x)| PointJson {
                        id: k + 1,
                        coords: Some(x.iter().copied().collect()),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&json).expect("framework serialization")
}
