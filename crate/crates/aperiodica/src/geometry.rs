//! Exact region algebra for finite disjoint unions of axis-aligned boxes.
//!
//! Measures and translations are exact for any scalar; boundary-tube
//! measures `mu(E^{+eps})` are exact for every 1D region (the boundary of
//! an interval union is a finite point set, so its tube is again an
//! interval union) and closed-form for single boxes in higher dimension
//! via the Steiner dilation/erosion formula. Remaining shapes fall back to
//! a bracketing grid estimator that reports its achieved error bound.

use crate::scalar::Scalar;
use crate::{Error, Quad, Result};
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A point with exact coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point<S>(pub Vec<S>);

impl<S: Scalar> Point<S> {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn scalar_1d(&self) -> &S {
        &self.0[0]
    }

    /// Squared Euclidean distance; stays in the scalar field.
    pub fn dist_sq(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a.clone() - b.clone();
                d.clone() * d
            })
            .fold(S::zero(), |acc, v| acc + v)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64()).collect()
    }
}

impl<S: Scalar> fmt::Display for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "\t")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Axis-aligned box with `lo[k] < hi[k]` on every axis; empty boxes are
/// not representable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisBox<S> {
    lo: Vec<S>,
    hi: Vec<S>,
}

impl<S: Scalar> AxisBox<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "box corner dimensions {} vs {}",
                lo.len(),
                hi.len()
            )));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if a >= b {
                return Err(Error::InvalidParameter(format!(
                    "degenerate box axis [{a}, {b}]"
                )));
            }
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn interval(a: S, b: S) -> Result<Self> {
        AxisBox::new(vec![a], vec![b])
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[S] {
        &self.lo
    }

    pub fn hi(&self) -> &[S] {
        &self.hi
    }

    pub fn side(&self, k: usize) -> S {
        self.hi[k].clone() - self.lo[k].clone()
    }

    pub fn volume(&self) -> S {
        (0..self.dimension()).fold(S::one(), |acc, k| acc * self.side(k))
    }

    pub fn translate(&self, x: &[S]) -> Result<Self> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        AxisBox::new(
            self.lo
                .iter()
                .zip(x)
                .map(|(a, t)| a.clone() + t.clone())
                .collect(),
            self.hi
                .iter()
                .zip(x)
                .map(|(a, t)| a.clone() + t.clone())
                .collect(),
        )
    }

    pub fn scale(&self, s: &S) -> Result<Self> {
        if !s.is_positive() {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        AxisBox::new(
            self.lo.iter().map(|a| a.clone() * s.clone()).collect(),
            self.hi.iter().map(|a| a.clone() * s.clone()).collect(),
        )
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dimension()
            && self
                .lo
                .iter()
                .zip(&self.hi)
                .zip(x)
                .all(|((a, b), v)| a <= v && v <= b)
    }

    fn lo_f64(&self) -> Vec<f64> {
        self.lo.iter().map(|v| v.to_f64()).collect()
    }

    fn hi_f64(&self) -> Vec<f64> {
        self.hi.iter().map(|v| v.to_f64()).collect()
    }
}

/// Euclidean distance from `x` to the boundary of the box (f64 kernel).
pub fn box_boundary_distance(lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    let mut outside_sq = 0.0;
    let mut inside_min = f64::INFINITY;
    let mut inside = true;
    for k in 0..lo.len() {
        let below = lo[k] - x[k];
        let above = x[k] - hi[k];
        if below > 0.0 {
            outside_sq += below * below;
            inside = false;
        } else if above > 0.0 {
            outside_sq += above * above;
            inside = false;
        } else {
            inside_min = inside_min.min((-below).min(-above));
        }
    }
    if inside {
        inside_min
    } else {
        outside_sq.sqrt()
    }
}

/// Finite disjoint union of axis-aligned boxes sharing one dimension.
///
/// Canonical form: 1D components are sorted by left endpoint and merged
/// when they overlap or touch; in higher dimension the boxes must be
/// pairwise separated (disjoint closures).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region<S> {
    boxes: Vec<AxisBox<S>>,
    dimension: usize,
}

impl<S: Scalar> Region<S> {
    pub fn empty(dimension: usize) -> Self {
        Region {
            boxes: Vec::new(),
            dimension,
        }
    }

    pub fn from_box(b: AxisBox<S>) -> Self {
        let dimension = b.dimension();
        Region {
            boxes: vec![b],
            dimension,
        }
    }

    pub fn interval(a: S, b: S) -> Result<Self> {
        Ok(Region::from_box(AxisBox::interval(a, b)?))
    }

    pub fn interval_int(a: i64, b: i64) -> Self {
        Region::interval(S::from_int(a), S::from_int(b)).expect("a < b")
    }

    pub fn from_boxes(boxes: Vec<AxisBox<S>>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidParameter(
                "region needs at least one box; use Region::empty".into(),
            ));
        }
        let dimension = boxes[0].dimension();
        if boxes.iter().any(|b| b.dimension() != dimension) {
            return Err(Error::InvalidParameter(
                "boxes of mixed dimension in one region".into(),
            ));
        }
        if dimension == 1 {
            let mut iv: Vec<(S, S)> = boxes
                .into_iter()
                .map(|b| (b.lo[0].clone(), b.hi[0].clone()))
                .collect();
            iv.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered scalar"));
            let mut merged: Vec<(S, S)> = Vec::with_capacity(iv.len());
            for (a, b) in iv {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => {
                        if b > last.1 {
                            last.1 = b;
                        }
                    }
                    _ => merged.push((a, b)),
                }
            }
            let boxes = merged
                .into_iter()
                .map(|(a, b)| AxisBox::interval(a, b).expect("nonempty"))
                .collect();
            Ok(Region {
                boxes,
                dimension: 1,
            })
        } else {
            for i in 0..boxes.len() {
                for j in (i + 1)..boxes.len() {
                    let separated = (0..dimension).any(|k| {
                        boxes[i].hi[k] < boxes[j].lo[k] || boxes[j].hi[k] < boxes[i].lo[k]
                    });
                    if !separated {
                        return Err(Error::InvalidParameter(
                            "boxes of a d>=2 region must have disjoint closures".into(),
                        ));
                    }
                }
            }
            Ok(Region { boxes, dimension })
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn boxes(&self) -> &[AxisBox<S>] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Lebesgue measure; exact.
    pub fn measure(&self) -> S {
        self.boxes
            .iter()
            .fold(S::zero(), |acc, b| acc + b.volume())
    }

    pub fn translate(&self, x: &[S]) -> Result<Self> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(Region {
            boxes: self
                .boxes
                .iter()
                .map(|b| b.translate(x))
                .collect::<Result<_>>()?,
            dimension: self.dimension,
        })
    }

    /// Translate a 1D region by a single scalar.
    pub fn translate_1d(&self, x: &S) -> Result<Self> {
        self.translate(std::slice::from_ref(x))
    }

    pub fn scale(&self, s: &S) -> Result<Self> {
        Ok(Region {
            boxes: self
                .boxes
                .iter()
                .map(|b| b.scale(s))
                .collect::<Result<_>>()?,
            dimension: self.dimension,
        })
    }

    pub fn contains_point(&self, x: &[S]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn bounding_box(&self) -> Option<AxisBox<S>> {
        let first = self.boxes.first()?;
        let mut lo = first.lo.clone();
        let mut hi = first.hi.clone();
        for b in &self.boxes[1..] {
            for k in 0..self.dimension {
                if b.lo[k] < lo[k] {
                    lo[k] = b.lo[k].clone();
                }
                if b.hi[k] > hi[k] {
                    hi[k] = b.hi[k].clone();
                }
            }
        }
        Some(AxisBox { lo, hi })
    }

    /// The single interval (lo, hi) if this is a one-component 1D region.
    pub fn as_interval(&self) -> Option<(S, S)> {
        if self.dimension == 1 && self.boxes.len() == 1 {
            Some((self.boxes[0].lo[0].clone(), self.boxes[0].hi[0].clone()))
        } else {
            None
        }
    }

    /// Gaps between consecutive 1D components (canonical order).
    pub fn component_gaps(&self) -> Vec<S> {
        assert_eq!(self.dimension, 1);
        self.boxes
            .windows(2)
            .map(|w| w[1].lo[0].clone() - w[0].hi[0].clone())
            .collect()
    }

    /// 1D set inclusion: every component of `self` covered by `other`.
    pub fn contained_in_1d(&self, other: &Region<S>) -> bool {
        assert!(self.dimension == 1 && other.dimension == 1);
        self.boxes.iter().all(|b| {
            other
                .boxes
                .iter()
                .any(|o| o.lo[0] <= b.lo[0] && b.hi[0] <= o.hi[0])
        })
    }

    /// Euclidean distance from `x` to the boundary of the region (f64).
    /// Valid because components have disjoint closures.
    pub fn boundary_distance_f64(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|b| box_boundary_distance(&b.lo_f64(), &b.hi_f64(), x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_f64_region(&self) -> Region<f64> {
        Region {
            boxes: self
                .boxes
                .iter()
                .map(|b| AxisBox {
                    lo: b.lo_f64(),
                    hi: b.hi_f64(),
                })
                .collect(),
            dimension: self.dimension,
        }
    }
}

impl<S: Scalar> fmt::Display for Region<S> {
    /// Literal form: `[a,b]` intervals, `x` for products, `u` for unions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boxes.is_empty() {
            return write!(f, "empty");
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if i > 0 {
                write!(f, "u")?;
            }
            for k in 0..b.dimension() {
                if k > 0 {
                    write!(f, "x")?;
                }
                write!(f, "[{},{}]", b.lo[k], b.hi[k])?;
            }
        }
        Ok(())
    }
}

impl FromStr for Region<Quad> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut boxes = Vec::new();
        for term in s.split('u') {
            let term = term.trim();
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for iv in term.split('x') {
                let iv = iv.trim();
                let inner = iv
                    .strip_prefix('[')
                    .and_then(|t| t.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse(format!("expected [a,b], got {iv:?}")))?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("expected two endpoints in {iv:?}")))?;
                lo.push(a.trim().parse::<Quad>()?);
                hi.push(b.trim().parse::<Quad>()?);
            }
            boxes.push(AxisBox::new(lo, hi)?);
        }
        Region::from_boxes(boxes)
    }
}

/// Boundary-tube measure `mu(E^{+eps})` with its exactness status.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TubeMeasure<S> {
    /// Set on the exact path (1D interval unions).
    pub exact_value: Option<S>,
    /// Floating value, always populated.
    pub value: f64,
    /// Bound on |value - mu|; zero on the exact path.
    pub error_bound: f64,
}

impl<S: Scalar> TubeMeasure<S> {
    fn exact(v: S) -> Self {
        let value = v.to_f64();
        TubeMeasure {
            exact_value: Some(v),
            value,
            error_bound: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact_value.is_some()
    }
}

/// Configuration for the bracketing grid estimator.
#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub target_rel_error: f64,
    pub cell_budget: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            target_rel_error: 1e-6,
            cell_budget: 100_000_000,
        }
    }
}

/// The boundary tube of a 1D region as an exact region: the union of
/// `[p - eps, p + eps]` over all component endpoints `p`.
pub fn boundary_tube_region_1d<S: Scalar>(region: &Region<S>, eps: &S) -> Result<Region<S>> {
    if region.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: region.dimension(),
        });
    }
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let mut tubes = Vec::new();
    for b in region.boxes() {
        for p in [&b.lo[0], &b.hi[0]] {
            tubes.push(AxisBox::interval(
                p.clone() - eps.clone(),
                p.clone() + eps.clone(),
            )?);
        }
    }
    Region::from_boxes(tubes)
}

/// Unit-ball volumes kappa_0, ..., kappa_d via kappa_m = kappa_{m-2} * 2 pi / m.
fn unit_ball_volumes(d: usize) -> Vec<f64> {
    let mut k = vec![1.0, 2.0];
    while k.len() <= d {
        let m = k.len();
        k.push(k[m - 2] * 2.0 * std::f64::consts::PI / m as f64);
    }
    k.truncate(d + 1);
    k
}

/// Elementary symmetric polynomials e_0..e_d of the side lengths.
fn elementary_symmetric(sides: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; sides.len() + 1];
    e[0] = 1.0;
    for &s in sides {
        for j in (1..e.len()).rev() {
            e[j] += e[j - 1] * s;
        }
    }
    e
}

/// Steiner closed form for a single box: mu(box ⊕ B_eps) - mu(box ⊖ B_eps).
fn steiner_tube_single_box(sides: &[f64], eps: f64) -> f64 {
    let d = sides.len();
    let kappa = unit_ball_volumes(d);
    let e = elementary_symmetric(sides);
    // dilation: sum over codimension j of e_{d-j} * kappa_j * eps^j
    let mut dilation = 0.0;
    let mut eps_pow = 1.0;
    for j in 0..=d {
        dilation += e[d - j] * kappa[j] * eps_pow;
        eps_pow *= eps;
    }
    let erosion: f64 = sides.iter().map(|s| (s - 2.0 * eps).max(0.0)).product();
    dilation - erosion
}

/// Boundary-tube measure `mu(E^{+eps})`.
///
/// Exact for 1D regions; closed-form (f64 rounding only) for single boxes
/// in d >= 2; bracketing grid estimate otherwise.
pub fn tube_measure<S: Scalar>(region: &Region<S>, eps: &S) -> Result<TubeMeasure<S>> {
    tube_measure_with(region, eps, &EstimatorConfig::default())
}

pub fn tube_measure_with<S: Scalar>(
    region: &Region<S>,
    eps: &S,
    cfg: &EstimatorConfig,
) -> Result<TubeMeasure<S>> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "tube radius must be positive, got {eps}"
        )));
    }
    if region.is_empty() {
        return Ok(TubeMeasure::exact(S::zero()));
    }
    if region.dimension() == 1 {
        let tube = boundary_tube_region_1d(region, eps)?;
        return Ok(TubeMeasure::exact(tube.measure()));
    }
    if region.boxes().len() == 1 {
        let b = &region.boxes()[0];
        let sides: Vec<f64> = (0..b.dimension()).map(|k| b.side(k).to_f64()).collect();
        let value = steiner_tube_single_box(&sides, eps.to_f64());
        return Ok(TubeMeasure {
            exact_value: None,
            value,
            error_bound: value.abs() * 1e-12,
        });
    }
    let (value, error_bound) = grid_tube_estimate(&region.to_f64_region(), eps.to_f64(), cfg);
    Ok(TubeMeasure {
        exact_value: None,
        value,
        error_bound,
    })
}

/// Bracketing grid estimate of the tube measure for d >= 2 box unions.
/// Halves the cell size until the bracket is below the target relative
/// error or the cell budget is exhausted; reports the achieved bound.
fn grid_tube_estimate(region: &Region<f64>, eps: f64, cfg: &EstimatorConfig) -> (f64, f64) {
    let bb = region.bounding_box().expect("nonempty");
    let d = region.dimension();
    let lo: Vec<f64> = bb.lo().iter().map(|v| v - eps).collect();
    let hi: Vec<f64> = bb.hi().iter().map(|v| v + eps).collect();
    let extent: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    let max_extent = extent.iter().cloned().fold(0.0, f64::max);

    let mut h = max_extent / 32.0;
    let mut best = (0.0, f64::INFINITY);
    loop {
        let dims: Vec<usize> = extent.iter().map(|e| (e / h).ceil() as usize).collect();
        let cells: u64 = dims.iter().map(|&n| n as u64).product();
        if cells > cfg.cell_budget {
            return best;
        }
        let cell_radius = h * (d as f64).sqrt() / 2.0;
        let cell_vol = h.powi(d as i32);
        let mut full = 0u64;
        let mut boundary = 0u64;
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        'cells: loop {
            for k in 0..d {
                x[k] = lo[k] + (idx[k] as f64 + 0.5) * h;
            }
            let dist = region.boundary_distance_f64(&x);
            if dist + cell_radius <= eps {
                full += 1;
            } else if dist - cell_radius <= eps {
                boundary += 1;
            }
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    continue 'cells;
                }
                idx[k] = 0;
            }
            break;
        }
        let lower = full as f64 * cell_vol;
        let upper = (full + boundary) as f64 * cell_vol;
        let value = (lower + upper) / 2.0;
        let err = (upper - lower) / 2.0;
        if err < best.1 {
            best = (value, err);
        }
        if value > 0.0 && err / value < cfg.target_rel_error {
            return best;
        }
        h /= 2.0;
    }
}

/// Monte Carlo estimate of the tube measure; the independent oracle used
/// to cross-validate the Steiner kernel. Returns (estimate, one sigma).
pub fn tube_measure_monte_carlo<S: Scalar>(
    region: &Region<S>,
    eps: f64,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    use rand::SeedableRng;
    let fr = region.to_f64_region();
    let bb = fr.bounding_box().expect("nonempty region");
    let lo: Vec<f64> = bb.lo().iter().map(|v| v - eps).collect();
    let hi: Vec<f64> = bb.hi().iter().map(|v| v + eps).collect();
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut x = vec![0.0; fr.dimension()];
    for _ in 0..samples {
        for k in 0..fr.dimension() {
            x[k] = rng.random_range(lo[k]..hi[k]);
        }
        if fr.boundary_distance_f64(&x) <= eps {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let sigma = vol * (p * (1.0 - p) / samples as f64).sqrt();
    (vol * p, sigma)
}

/// Result of a sampled tube-inclusion check.
#[derive(Clone, Debug, Serialize)]
pub struct TubeInclusion {
    pub holds: bool,
    pub samples: u64,
    pub counterexample: Option<Vec<f64>>,
}

/// Checks `(E^{+l})^{+r} ⊆ E^{+(l+r)}`.
///
/// 1D: exact, by comparing interval unions (n_samples is ignored).
/// d >= 2: grid sampling over a superset of `(E^{+l})^{+r}`; every sampled
/// point is checked to lie in `E^{+(l+r)}` by distance-to-boundary.
pub fn check_tube_inclusion<S: Scalar>(
    region: &Region<S>,
    l: &S,
    r: &S,
    n_samples: u64,
) -> Result<TubeInclusion> {
    if !l.is_positive() || !r.is_positive() {
        return Err(Error::InvalidParameter("l and r must be positive".into()));
    }
    if region.is_empty() {
        return Ok(TubeInclusion {
            holds: true,
            samples: 0,
            counterexample: None,
        });
    }
    if region.dimension() == 1 {
        let inner = boundary_tube_region_1d(region, l)?;
        let double = boundary_tube_region_1d(&inner, r)?;
        let target = boundary_tube_region_1d(region, &(l.clone() + r.clone()))?;
        let holds = double.contained_in_1d(&target);
        return Ok(TubeInclusion {
            holds,
            samples: double.boxes().len() as u64,
            counterexample: None,
        });
    }

    let d = region.dimension();
    let fr = region.to_f64_region();
    let (lf, rf) = (l.to_f64(), r.to_f64());
    let reach = (lf + rf) * 1.05;
    let bb = fr.bounding_box().expect("nonempty");
    let lo: Vec<f64> = bb.lo().iter().map(|v| v - reach).collect();
    let hi: Vec<f64> = bb.hi().iter().map(|v| v + reach).collect();
    let per_axis = (n_samples as f64).powf(1.0 / d as f64).ceil().max(2.0) as usize;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut tested = 0u64;
    loop {
        for k in 0..d {
            x[k] = lo[k] + (hi[k] - lo[k]) * (idx[k] as f64 + 0.5) / per_axis as f64;
        }
        let dist = fr.boundary_distance_f64(&x);
        // necessary condition for membership in (E^{+l})^{+r}
        if (dist - lf).abs() <= rf {
            tested += 1;
            if dist > lf + rf + 1e-9 * (lf + rf) {
                return Ok(TubeInclusion {
                    holds: false,
                    samples: tested,
                    counterexample: Some(x.clone()),
                });
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                return Ok(TubeInclusion {
                    holds: true,
                    samples: tested,
                    counterexample: None,
                });
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Checks `mu(E^{+l}) <= l^d * mu(E^{+1})` for `l >= 1`.
/// Exact comparison on the exact path; error bounds folded in otherwise.
pub fn check_tube_scaling<S: Scalar>(region: &Region<S>, l: &S) -> Result<bool> {
    if l < &S::one() {
        return Err(Error::InvalidParameter("l must be >= 1".into()));
    }
    let t_l = tube_measure(region, l)?;
    let t_1 = tube_measure(region, &S::one())?;
    let d = region.dimension() as u32;
    match (&t_l.exact_value, &t_1.exact_value) {
        (Some(a), Some(b)) => {
            let mut scale = S::one();
            for _ in 0..d {
                scale = scale * l.clone();
            }
            Ok(a.clone() <= scale * b.clone())
        }
        _ => {
            let scale = l.to_f64().powi(d as i32);
            let lhs = t_l.value - t_l.error_bound;
            let rhs = scale * (t_1.value + t_1.error_bound);
            Ok(lhs <= rhs * (1.0 + 1e-9))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Quad;

    fn q(v: i64) -> Quad {
        Quad::from_int(v)
    }

    fn region(s: &str) -> Region<Quad> {
        s.parse().unwrap()
    }

    #[test]
    fn measure_examples() {
        assert_eq!(region("[0,1]").measure(), q(1));
        assert_eq!(region("[0,2]u[5,8]").measure(), q(5));
        assert_eq!(region("[0,3]x[0,2]").measure(), q(6));
    }

    #[test]
    fn canonical_form_merges_1d_overlaps() {
        let r = region("[1,3]u[0,2]u[5,6]");
        assert_eq!(r.boxes().len(), 2);
        assert_eq!(r.measure(), q(4));
        // touching intervals merge: the shared endpoint is interior
        let r = region("[0,1]u[1,2]");
        assert_eq!(r.boxes().len(), 1);
        assert_eq!(r.component_gaps().len(), 0);
    }

    #[test]
    fn rejects_degenerate_and_overlapping() {
        assert!(region_err("[1,1]"));
        assert!(region_err("[2,1]"));
        // overlapping 2D boxes are not a valid region
        let a = AxisBox::new(vec![q(0), q(0)], vec![q(2), q(2)]).unwrap();
        let b = AxisBox::new(vec![q(1), q(1)], vec![q(3), q(3)]).unwrap();
        assert!(Region::from_boxes(vec![a, b]).is_err());
    }

    fn region_err(s: &str) -> bool {
        s.parse::<Region<Quad>>().is_err()
    }

    #[test]
    fn translate_examples() {
        let r = region("[0,1]").translate(&[q(5)]).unwrap();
        assert_eq!(r, region("[5,6]"));
        let r = region("[0,1]u[3,4]").translate(&[q(-1)]).unwrap();
        assert_eq!(r, region("[-1,0]u[2,3]"));
        assert!(region("[0,1]").translate(&[q(1), q(1)]).is_err());
    }

    #[test]
    fn tube_measure_1d_exact() {
        let one = q(1);
        let t = tube_measure(&region("[0,10]"), &one).unwrap();
        assert_eq!(t.exact_value.unwrap(), q(4));
        let t = tube_measure(&region("[0,1]"), &one).unwrap();
        assert_eq!(t.exact_value.unwrap(), q(3)); // tube = [-1,2]
        let t = tube_measure(&region("[0,10]"), &q(3)).unwrap();
        assert_eq!(t.exact_value.unwrap(), q(12)); // min(10,6)+6
        assert_eq!(t.error_bound, 0.0);
        // components closer than 2 eps: tubes overlap across the gap
        let t = tube_measure(&region("[0,4]u[5,9]"), &one).unwrap();
        // endpoints 0,4,5,9 -> [-1,1] u [3,6] u [8,10]: 2 + 3 + 2
        assert_eq!(t.exact_value.unwrap(), q(7));
    }

    #[test]
    fn tube_measure_rejects_bad_eps() {
        assert!(tube_measure(&region("[0,1]"), &q(0)).is_err());
        assert!(tube_measure(&region("[0,1]"), &q(-1)).is_err());
    }

    #[test]
    fn steiner_square_matches_hand_value() {
        // [0,4]^2, eps=1: (36 - 4 + pi) - 4 = 28 + pi
        let t = tube_measure(&region("[0,4]x[0,4]"), &q(1)).unwrap();
        assert!(!t.is_exact());
        assert!((t.value - (28.0 + std::f64::consts::PI)).abs() < 1e-9);
        // erosion clamps at empty: [0,1]^2 with eps=1
        let t = tube_measure(&region("[0,1]x[0,1]"), &q(1)).unwrap();
        let expect = 1.0 + 4.0 + std::f64::consts::PI; // dilation only
        assert!((t.value - expect).abs() < 1e-9);
    }

    #[test]
    fn grid_estimator_brackets_steiner() {
        let r = region("[0,3]x[0,2]u[6,8]x[0,1]");
        let cfg = EstimatorConfig {
            target_rel_error: 5e-3,
            cell_budget: 40_000_000,
        };
        let t = tube_measure_with(&r, &q(1), &cfg).unwrap();
        assert!(!t.is_exact());
        // boxes are separated by more than 2 eps, so tubes are disjoint:
        // sum of per-box Steiner values is the truth
        let truth = steiner_tube_single_box(&[3.0, 2.0], 1.0)
            + steiner_tube_single_box(&[2.0, 1.0], 1.0);
        assert!(
            (t.value - truth).abs() <= t.error_bound + 1e-9,
            "estimate {} +- {} vs {}",
            t.value,
            t.error_bound,
            truth
        );
    }

    #[test]
    fn monte_carlo_agrees_with_steiner() {
        let r = region("[0,4]x[0,4]");
        let (mc, sigma) = tube_measure_monte_carlo(&r, 1.0, 200_000, 7);
        let truth = 28.0 + std::f64::consts::PI;
        assert!(
            (mc - truth).abs() < 4.0 * sigma,
            "mc {mc} sigma {sigma} truth {truth}"
        );
    }

    #[test]
    fn tube_inclusion_1d_exact() {
        let r = region("[0,10]");
        let chk = check_tube_inclusion(&r, &q(1), &q(1), 0).unwrap();
        assert!(chk.holds);
        let chk = check_tube_inclusion(&region("[0,2]u[5,8]"), &q(2), &q(1), 0).unwrap();
        assert!(chk.holds);
    }

    #[test]
    fn tube_inclusion_2d_sampled() {
        let r = region("[0,4]x[0,4]");
        let chk = check_tube_inclusion(&r, &q(1), &q(2), 10_000).unwrap();
        assert!(chk.holds, "counterexample: {:?}", chk.counterexample);
        assert!(chk.samples > 0);
    }

    #[test]
    fn tube_scaling_examples() {
        assert!(check_tube_scaling(&region("[0,10]"), &q(3)).unwrap());
        assert!(check_tube_scaling(&region("[0,1]"), &q(1)).unwrap());
        assert!(check_tube_scaling(&region("[0,4]x[0,4]"), &q(2)).unwrap());
        assert!(check_tube_scaling(&region("[0,1]"), &q(0)).is_err());
    }

    #[test]
    fn tube_monotone_in_eps() {
        let r = region("[0,2]u[5,8]u[20,21]");
        let mut prev = Quad::from_int(0);
        for e in 1..=8 {
            let eps = Quad::ratio(e, 2);
            let t = tube_measure(&r, &eps).unwrap().exact_value.unwrap();
            assert!(t >= prev, "tube not monotone at eps={eps}");
            prev = t;
        }
    }

    #[test]
    fn region_literal_round_trip() {
        for s in ["[0,1]", "[0,2]u[5,8]", "[0,3]x[0,2]", "[-1/2,21/2]"] {
            let r = region(s);
            let again: Region<Quad> = r.to_string().parse().unwrap();
            assert_eq!(r, again);
        }
        let r = region("[0,1/2+1/2*sqrt5]");
        assert_eq!(r.measure(), Quad::phi());
    }

    #[test]
    fn boundary_distance_kernel() {
        let r = region("[0,4]x[0,4]");
        // center: distance 2 to nearest face
        assert!((r.boundary_distance_f64(&[2.0, 2.0]) - 2.0).abs() < 1e-12);
        // outside near a corner
        let d = r.boundary_distance_f64(&[5.0, 5.0]);
        assert!((d - (2.0f64).sqrt()).abs() < 1e-12);
        // on the boundary
        assert!(r.boundary_distance_f64(&[0.0, 2.0]).abs() < 1e-12);
    }
}
