//! Finite-window bounded-distance machinery: bottleneck perfect matching
//! with exact thresholds, Hall witnesses, and the count-ratio test for
//! bounded-distance inequivalence.
//!
//! Distances are compared through their squares, which stay inside the
//! scalar field, so the optimal bottleneck threshold is exact rather than
//! a tolerance.

use crate::discrepancy::van_hove_check;
use crate::geometry::{tube_measure, Point};
use crate::pointsets::PointSource;
use crate::scalar::Scalar;
use crate::search::{find_deviant, DeviantFind, DeviantScan};
use crate::{Error, QRegion, Quad, Result};
use serde::Serialize;

/// A bipartite matching instance under the Euclidean metric.
#[derive(Clone, Debug)]
pub struct MatchInstance<S> {
    pub left: Vec<Point<S>>,
    pub right: Vec<Point<S>>,
}

impl<S: Scalar> MatchInstance<S> {
    pub fn new(left: Vec<Point<S>>, right: Vec<Point<S>>) -> Result<Self> {
        let dims: Vec<usize> = left
            .iter()
            .chain(&right)
            .map(|p| p.dimension())
            .collect();
        if let Some(&d0) = dims.first() {
            if dims.iter().any(|&d| d != d0) {
                return Err(Error::InvalidParameter(
                    "points of mixed dimension".into(),
                ));
            }
        }
        Ok(MatchInstance { left, right })
    }

    fn dist_sq(&self, i: usize, j: usize) -> S {
        self.left[i].dist_sq(&self.right[j])
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MatchOutcome<S> {
    /// Minimal-bottleneck perfect matching; `pairs[i] = (i, j)` uses input
    /// indices. Optimality is certified by infeasibility at the largest
    /// smaller candidate threshold.
    Perfect {
        bottleneck: f64,
        bottleneck_sq: S,
        pairs: Vec<(usize, usize)>,
    },
    /// Side sizes differ; the count defect is the reported statistic.
    Defect { defect_count: usize },
    /// No perfect matching at the queried threshold; `hall_set` indexes a
    /// left-side set with fewer neighbors than members.
    Witness {
        threshold: f64,
        hall_set: Vec<usize>,
        neighbor_count: usize,
    },
}

/// Hopcroft-Karp maximum matching. `adj[i]` lists right-neighbors of left
/// vertex `i`. Returns (size, match_of_left, match_of_right).
pub fn hopcroft_karp(
    n_left: usize,
    n_right: usize,
    adj: &[Vec<usize>],
) -> (usize, Vec<Option<usize>>, Vec<Option<usize>>) {
    const INF: u32 = u32::MAX;
    let mut match_l: Vec<Option<usize>> = vec![None; n_left];
    let mut match_r: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![INF; n_left];
    let mut queue = std::collections::VecDeque::new();
    let mut size = 0usize;

    loop {
        queue.clear();
        for i in 0..n_left {
            if match_l[i].is_none() {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = INF;
            }
        }
        let mut found_augmenting = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                match match_r[j] {
                    None => found_augmenting = true,
                    Some(i2) => {
                        if dist[i2] == INF {
                            dist[i2] = dist[i] + 1;
                            queue.push_back(i2);
                        }
                    }
                }
            }
        }
        if !found_augmenting {
            break;
        }
        for i in 0..n_left {
            if match_l[i].is_none() && dfs(i, adj, &mut match_l, &mut match_r, &mut dist) {
                size += 1;
            }
        }
    }
    (size, match_l, match_r)
}

fn dfs(
    i: usize,
    adj: &[Vec<usize>],
    match_l: &mut [Option<usize>],
    match_r: &mut [Option<usize>],
    dist: &mut [u32],
) -> bool {
    let d = std::mem::replace(&mut dist[i], u32::MAX);
    for &j in &adj[i] {
        let ok = match match_r[j] {
            None => true,
            Some(i2) => d != u32::MAX && dist[i2] == d + 1 && dfs(i2, adj, match_l, match_r, dist),
        };
        if ok {
            match_l[i] = Some(j);
            match_r[j] = Some(i);
            return true;
        }
    }
    false
}

fn adjacency_at_threshold<S: Scalar>(inst: &MatchInstance<S>, t_sq: &S) -> Vec<Vec<usize>> {
    let n = inst.left.len();
    let m = inst.right.len();
    let mut adj = vec![Vec::new(); n];
    for (i, row) in adj.iter_mut().enumerate() {
        for j in 0..m {
            if &inst.dist_sq(i, j) <= t_sq {
                row.push(j);
            }
        }
    }
    adj
}

/// Minimal-bottleneck perfect matching.
///
/// Candidate thresholds are the exact sorted pairwise squared distances, so
/// the optimum is exact. Equal-size 1D instances take the order-preserving
/// fast path (sorted matching is bottleneck-optimal on the line); its
/// optimality certificate is still obtained by an infeasibility check at
/// the next-smaller candidate.
pub fn bottleneck_match<S: Scalar>(inst: &MatchInstance<S>) -> Result<MatchOutcome<S>> {
    let n = inst.left.len();
    if n == 0 || inst.right.is_empty() {
        return Err(Error::InvalidParameter("empty side in match instance".into()));
    }
    if n != inst.right.len() {
        return Ok(MatchOutcome::Defect {
            defect_count: n.abs_diff(inst.right.len()),
        });
    }

    let dim = inst.left[0].dimension();
    if dim == 1 {
        return Ok(bottleneck_1d(inst));
    }

    let mut candidates: Vec<S> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            candidates.push(inst.dist_sq(i, j));
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("total order"));
    candidates.dedup();

    // binary search the minimal feasible candidate
    let mut lo = 0usize; // invariant: everything below lo is infeasible
    let mut hi = candidates.len() - 1; // feasible by pigeonhole at max distance
    while lo < hi {
        let mid = (lo + hi) / 2;
        let adj = adjacency_at_threshold(inst, &candidates[mid]);
        let (size, _, _) = hopcroft_karp(n, n, &adj);
        if size == n {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t_sq = candidates[lo].clone();
    let adj = adjacency_at_threshold(inst, &t_sq);
    let (size, match_l, _) = hopcroft_karp(n, n, &adj);
    debug_assert_eq!(size, n);
    let pairs = match_l
        .iter()
        .enumerate()
        .map(|(i, j)| (i, j.expect("perfect")))
        .collect();
    Ok(MatchOutcome::Perfect {
        bottleneck: t_sq.to_f64().max(0.0).sqrt(),
        bottleneck_sq: t_sq,
        pairs,
    })
}

fn bottleneck_1d<S: Scalar>(inst: &MatchInstance<S>) -> MatchOutcome<S> {
    let n = inst.left.len();
    let mut li: Vec<usize> = (0..n).collect();
    let mut ri: Vec<usize> = (0..n).collect();
    li.sort_by(|&a, &b| {
        inst.left[a]
            .scalar_1d()
            .partial_cmp(inst.left[b].scalar_1d())
            .expect("total order")
    });
    ri.sort_by(|&a, &b| {
        inst.right[a]
            .scalar_1d()
            .partial_cmp(inst.right[b].scalar_1d())
            .expect("total order")
    });
    let mut t_sq = S::zero();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let d = inst.dist_sq(li[k], ri[k]);
        if d > t_sq {
            t_sq = d;
        }
        pairs.push((li[k], ri[k]));
    }
    pairs.sort();
    MatchOutcome::Perfect {
        bottleneck: t_sq.to_f64().max(0.0).sqrt(),
        bottleneck_sq: t_sq,
        pairs,
    }
}

/// Exhaustive bottleneck optimum over all bijections; reference oracle for
/// small instances (n <= 10 or so).
pub fn bottleneck_brute_force<S: Scalar>(inst: &MatchInstance<S>) -> Option<S> {
    let n = inst.left.len();
    if n != inst.right.len() || n == 0 {
        return None;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<S> = None;
    permute(&mut perm, 0, &mut |p| {
        let mut worst = S::zero();
        for (i, &j) in p.iter().enumerate() {
            let d = inst.dist_sq(i, j);
            if d > worst {
                worst = d;
            }
        }
        if best.as_ref().map(|b| &worst < b).unwrap_or(true) {
            best = Some(worst);
        }
    });
    best
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// If no perfect matching exists at threshold `t`, returns a left-side set
/// A with |N(A)| < |A| (alternating reachability from the unmatched left
/// vertices of a maximum matching); `None` when a perfect matching exists.
pub fn hall_witness<S: Scalar>(
    inst: &MatchInstance<S>,
    t: f64,
) -> Result<Option<(Vec<usize>, usize)>> {
    if inst.left.is_empty() {
        return Ok(None);
    }
    let tq = S::from_ratio(0, 1) + exact_threshold::<S>(t)?;
    let t_sq = tq.clone() * tq;
    let adj = adjacency_at_threshold(inst, &t_sq);
    let (size, match_l, match_r) = hopcroft_karp(inst.left.len(), inst.right.len(), &adj);
    if size == inst.left.len() {
        return Ok(None);
    }
    let mut in_a = vec![false; inst.left.len()];
    let mut in_n = vec![false; inst.right.len()];
    let mut queue: std::collections::VecDeque<usize> = (0..inst.left.len())
        .filter(|&i| match_l[i].is_none())
        .collect();
    for &i in &queue {
        in_a[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !in_n[j] {
                in_n[j] = true;
                if let Some(i2) = match_r[j] {
                    if !in_a[i2] {
                        in_a[i2] = true;
                        queue.push_back(i2);
                    }
                }
            }
        }
    }
    let hall_set: Vec<usize> = (0..inst.left.len()).filter(|&i| in_a[i]).collect();
    let neighbor_count = in_n.iter().filter(|&&b| b).count();
    debug_assert!(neighbor_count < hall_set.len());
    Ok(Some((hall_set, neighbor_count)))
}

fn exact_threshold<S: Scalar>(t: f64) -> Result<S> {
    let r = num_rational::BigRational::from_float(t)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite threshold {t}")))?;
    let num: i64 = r
        .numer()
        .try_into()
        .map_err(|_| Error::InvalidParameter("threshold mantissa exceeds i64".into()))?;
    let den: i64 = r
        .denom()
        .try_into()
        .map_err(|_| Error::InvalidParameter("threshold exponent exceeds i64".into()))?;
    Ok(S::from_ratio(num, den))
}

#[derive(Clone, Debug, Serialize)]
pub struct NonBdRatio {
    pub index: usize,
    pub count_left: u64,
    pub count_right: u64,
    pub ratio_exact: Option<Quad>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RatioVerdict {
    /// Finite-scale proxy for a diverging ratio sequence; evidence of
    /// bounded-distance inequivalence.
    RatiosGrow,
    /// No growth detected; NOT a bounded-distance equivalence claim.
    RatiosBounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonBdReport {
    pub ratios: Vec<NonBdRatio>,
    pub verdict: RatioVerdict,
}

/// The count-difference ratio `|#(S1 ∩ A_i) - #(S2 ∩ A_i)| / mu(A_i^{+1})`
/// along a van Hove sequence. Growth rule: last ratio exceeds four times
/// the first nonzero ratio and the running maximum increases at three or
/// more distinct indices.
pub fn non_bd_ratio(
    s1: &PointSource,
    s2: &PointSource,
    seq: &[QRegion],
) -> Result<NonBdReport> {
    let diag = van_hove_check(seq, &[1.0], 1e-2)?;
    if !diag.verdict.pass {
        return Err(Error::InvalidParameter(format!(
            "sequence is not van Hove: {:?}",
            diag.verdict.reason
        )));
    }
    let mut ratios = Vec::with_capacity(seq.len());
    for (index, region) in seq.iter().enumerate() {
        let c1 = s1.count_in(region)?;
        let c2 = s2.count_in(region)?;
        let diff = Quad::from_int(c1.abs_diff(c2) as i64);
        let tube = tube_measure(region, &Quad::from_int(1))?;
        let ratio_exact = tube.exact_value.as_ref().map(|t| diff.clone() / t.clone());
        let ratio = ratio_exact
            .as_ref()
            .map(|r| r.to_f64())
            .unwrap_or(diff.to_f64() / tube.value);
        ratios.push(NonBdRatio {
            index,
            count_left: c1,
            count_right: c2,
            ratio_exact,
            ratio,
        });
    }
    let verdict = growth_verdict(&ratios);
    Ok(NonBdReport { ratios, verdict })
}

fn growth_verdict(ratios: &[NonBdRatio]) -> RatioVerdict {
    let first_nonzero = ratios.iter().find(|r| r.ratio > 0.0);
    let last = ratios.last();
    let (first, last) = match (first_nonzero, last) {
        (Some(f), Some(l)) => (f, l),
        _ => return RatioVerdict::RatiosBounded,
    };
    let grows_enough = last.ratio > 4.0 * first.ratio;
    let mut running_max = f64::NEG_INFINITY;
    let mut increases = 0u32;
    for r in ratios {
        if r.ratio > running_max {
            if running_max > f64::NEG_INFINITY {
                increases += 1;
            }
            running_max = r.ratio;
        }
    }
    if grows_enough && increases >= 3 {
        RatioVerdict::RatiosGrow
    } else {
        RatioVerdict::RatiosBounded
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum LatticeBdVerdict {
    /// A region violating the deviance bound at level c was found.
    Violated(Box<DeviantFind>),
    /// No violation within the candidate budget; carries the supremum of
    /// the ratios seen.
    NotViolatedWithinBudget { sup_ratio: f64 },
}

/// Scans the windows for a region with deviance ratio above `c`
/// (the finite surrogate of the lattice bounded-distance criterion).
pub fn lattice_bd_scan(
    source: &PointSource,
    rho: &Quad,
    c: f64,
    windows: &[QRegion],
    candidate_budget: u64,
) -> Result<LatticeBdVerdict> {
    let mut sup: f64 = 0.0;
    for w in windows {
        let scan: DeviantScan = find_deviant(source, rho, c, w, candidate_budget)?;
        sup = sup.max(scan.sup_ratio_f64);
        if let Some(find) = scan.find {
            return Ok(LatticeBdVerdict::Violated(Box::new(find)));
        }
    }
    Ok(LatticeBdVerdict::NotViolatedWithinBudget { sup_ratio: sup })
}
