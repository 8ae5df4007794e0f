//! Density-relative discrepancy, c-deviance classification and van Hove
//! diagnostics.

use crate::geometry::{tube_measure, Point, Region, TubeMeasure};
use crate::pointsets::PointSource;
use crate::scalar::Scalar;
use crate::{Error, QPoint, QRegion, Quad, Result};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Per-region discrepancy record: count vs. expectation, normalized by the
/// unit boundary-tube measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub region: QRegion,
    pub count: u64,
    /// rho * mu(E); exact.
    pub expected: Quad,
    /// mu(E^{+1}).
    pub tube1: TubeMeasure<Quad>,
    /// count - expected, signed; exact.
    pub discrepancy: Quad,
    /// |discrepancy| / tube1, exact when the tube is exact.
    pub ratio_exact: Option<Quad>,
    pub ratio: f64,
}

impl DiscrepancyReport {
    pub fn sign(&self) -> i32 {
        self.discrepancy.sign()
    }
}

/// Builds the discrepancy report of `source` against density `rho` on `region`.
pub fn discrepancy_report(
    source: &PointSource,
    rho: &Quad,
    region: &QRegion,
) -> Result<DiscrepancyReport> {
    if !rho.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "density must be positive, got {rho}"
        )));
    }
    if region.is_empty() {
        return Err(Error::InvalidParameter("empty region".into()));
    }
    let count = source.count_in(region)?;
    let expected = rho.clone() * region.measure();
    let tube1 = tube_measure(region, &Quad::from_int(1))?;
    let discrepancy = Quad::from_int(count as i64) - expected.clone();
    let ratio_exact = tube1
        .exact_value
        .as_ref()
        .map(|t| discrepancy.abs() / t.clone());
    let ratio = ratio_exact
        .as_ref()
        .map(|r| r.to_f64())
        .unwrap_or_else(|| discrepancy.abs().to_f64() / tube1.value);
    Ok(DiscrepancyReport {
        region: region.clone(),
        count,
        expected,
        tube1,
        discrepancy,
        ratio_exact,
        ratio,
    })
}

/// `true` when the report's deviance ratio exceeds `c`. Exact comparison
/// whenever the ratio is exact (every f64 `c` is a rational number).
pub fn is_c_deviant(report: &DiscrepancyReport, c: f64) -> bool {
    match (&report.ratio_exact, Quad::from_f64_exact(c)) {
        (Some(r), Ok(cq)) => r > &cq,
        _ => report.ratio > c,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsRatios {
    pub eps: f64,
    /// mu(A_i^{+eps}) / mu(A_i) per index.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VanHoveVerdict {
    pub pass: bool,
    pub failing_eps: Option<f64>,
    pub failing_index: Option<usize>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VanHoveDiagnostics {
    pub per_eps: Vec<EpsRatios>,
    pub threshold: f64,
    pub verdict: VanHoveVerdict,
}

/// Finite-data van Hove test: for every requested eps the final tube/measure
/// ratio must fall below `threshold` and the last quarter of the sequence
/// must be monotone nonincreasing.
pub fn van_hove_check<S: Scalar>(
    seq: &[Region<S>],
    eps_list: &[f64],
    threshold: f64,
) -> Result<VanHoveDiagnostics> {
    if seq.is_empty() {
        return Err(Error::InvalidParameter("empty region sequence".into()));
    }
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("empty eps list".into()));
    }
    let mut per_eps = Vec::with_capacity(eps_list.len());
    let mut verdict = VanHoveVerdict {
        pass: true,
        failing_eps: None,
        failing_index: None,
        reason: None,
    };
    for &eps in eps_list {
        if eps <= 0.0 {
            return Err(Error::InvalidParameter(format!("eps {eps} <= 0")));
        }
        let eps_s = exact_eps::<S>(eps)?;
        let mut ratios = Vec::with_capacity(seq.len());
        for r in seq {
            let t = tube_measure(r, &eps_s)?;
            ratios.push(t.value / r.measure().to_f64());
        }
        let n = ratios.len();
        if verdict.pass {
            if *ratios.last().unwrap() >= threshold {
                verdict = VanHoveVerdict {
                    pass: false,
                    failing_eps: Some(eps),
                    failing_index: Some(n - 1),
                    reason: Some(format!(
                        "final ratio {} >= threshold {threshold}",
                        ratios[n - 1]
                    )),
                };
            } else {
                let tail_start = n - (n / 4).max(1);
                for i in tail_start..n.saturating_sub(1) {
                    if ratios[i + 1] > ratios[i] {
                        verdict = VanHoveVerdict {
                            pass: false,
                            failing_eps: Some(eps),
                            failing_index: Some(i + 1),
                            reason: Some("tail not monotone nonincreasing".into()),
                        };
                        break;
                    }
                }
            }
        }
        per_eps.push(EpsRatios { eps, ratios });
    }
    Ok(VanHoveDiagnostics {
        per_eps,
        threshold,
        verdict,
    })
}

fn exact_eps<S: Scalar>(eps: f64) -> Result<S> {
    // keep the exact tube path exact: represent the f64 as a ratio
    let r = num_rational::BigRational::from_float(eps)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite eps {eps}")))?;
    let num = r
        .numer()
        .try_into()
        .map_err(|_| Error::InvalidParameter(format!("eps {eps} too fine for i64 ratio")))?;
    let den = r
        .denom()
        .try_into()
        .map_err(|_| Error::InvalidParameter(format!("eps {eps} too fine for i64 ratio")))?;
    Ok(S::from_ratio(num, den))
}

/// Checks the premise of the deviance-implies-van-Hove lemma (each report
/// exceeds its c_i and the c_i increase) and then runs the van Hove test
/// on the regions.
pub fn deviant_implies_van_hove(
    reports: &[DiscrepancyReport],
    c_seq: &[f64],
) -> Result<VanHoveDiagnostics> {
    if reports.is_empty() || reports.len() != c_seq.len() {
        return Err(Error::InvalidParameter(format!(
            "{} reports vs {} c values",
            reports.len(),
            c_seq.len()
        )));
    }
    for (i, (rep, &c)) in reports.iter().zip(c_seq).enumerate() {
        if !is_c_deviant(rep, c) {
            return Err(Error::InvalidParameter(format!(
                "report {i} has ratio {} <= c_{i} = {c}",
                rep.ratio
            )));
        }
    }
    // finite surrogate for "c_i unbounded": strictly increasing
    for i in 1..c_seq.len() {
        if c_seq[i] <= c_seq[i - 1] {
            return Err(Error::InvalidParameter(format!(
                "c sequence not strictly increasing at index {i}"
            )));
        }
    }
    let regions: Vec<QRegion> = reports.iter().map(|r| r.region.clone()).collect();
    van_hove_check(&regions, &[1.0], 1e-2)
}

/// Largest inscribed (Euclidean) ball. 1D: midpoint and half-length of the
/// longest component. d >= 2: per box, center and half of the smallest
/// side, maximized over boxes. Ties break to the lexicographically
/// smallest center.
pub fn largest_inscribed_ball<S: Scalar>(region: &Region<S>) -> Result<(Point<S>, S)> {
    if region.is_empty() {
        return Err(Error::InvalidParameter("empty region".into()));
    }
    let mut best: Option<(Point<S>, S)> = None;
    for b in region.boxes() {
        let radius = (0..b.dimension())
            .map(|k| b.side(k))
            .reduce(S::min_of)
            .expect("nonzero dimension")
            .half();
        let center = Point(
            (0..b.dimension())
                .map(|k| (b.lo()[k].clone() + b.hi()[k].clone()).half())
                .collect(),
        );
        let replace = match &best {
            None => true,
            Some((bc, br)) => {
                radius > *br
                    || (radius == *br
                        && center
                            .0
                            .iter()
                            .zip(&bc.0)
                            .find_map(|(a, b)| {
                                if a < b {
                                    Some(true)
                                } else if a > b {
                                    Some(false)
                                } else {
                                    None
                                }
                            })
                            .unwrap_or(false))
            }
        };
        if replace {
            best = Some((center, radius));
        }
    }
    Ok(best.expect("nonempty region"))
}

/// Built-in van Hove family: centered intervals [-i, i], i = 1..=max_i.
pub fn family_centered_intervals(max_i: u32) -> Vec<QRegion> {
    (1..=max_i as i64)
        .map(|i| QRegion::interval_int(-i, i))
        .collect()
}

/// Built-in van Hove family: centered squares [-i, i]^2.
pub fn family_centered_boxes(max_i: u32) -> Vec<QRegion> {
    (1..=max_i as i64)
        .map(|i| {
            let b = crate::geometry::AxisBox::new(
                vec![Quad::from_int(-i), Quad::from_int(-i)],
                vec![Quad::from_int(i), Quad::from_int(i)],
            )
            .expect("valid box");
            QRegion::from_box(b)
        })
        .collect()
}

/// Built-in van Hove family: Fibonacci windows [0, F_k], k = 1..=max_i.
pub fn family_fibonacci_windows(max_i: u32) -> Vec<QRegion> {
    let mut f = (1i64, 2i64);
    let mut out = Vec::with_capacity(max_i as usize);
    for _ in 0..max_i {
        out.push(QRegion::interval_int(0, f.0));
        f = (f.1, f.0 + f.1);
    }
    out
}

/// The rich-region family Q_i = [0, 2^i + 1], i = 1..=max_i.
pub fn family_qi(max_i: u32) -> Vec<QRegion> {
    (1..=max_i)
        .map(|i| QRegion::interval_int(0, 2i64.pow(i) + 1))
        .collect()
}

/// Named family lookup used by the CLI.
pub fn family_by_name(name: &str, max_i: u32) -> Result<Vec<QRegion>> {
    match name {
        "centered" => Ok(family_centered_intervals(max_i)),
        "boxes" => Ok(family_centered_boxes(max_i)),
        "fib" => Ok(family_fibonacci_windows(max_i)),
        "Qi" | "qi" => Ok(family_qi(max_i)),
        other => Err(Error::InvalidParameter(format!(
            "unknown family {other:?} (expected centered|boxes|fib|Qi)"
        ))),
    }
}

/// Convenience: point with all-zero coordinates.
pub fn origin(d: usize) -> QPoint {
    Point(vec![Quad::zero(); d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsets::PointSource;

    fn q(v: i64) -> Quad {
        Quad::from_int(v)
    }

    #[test]
    fn report_on_integer_lattice() {
        let z = PointSource::lattice_z();
        let rep = discrepancy_report(&z, &q(1), &QRegion::interval_int(0, 10)).unwrap();
        assert_eq!(rep.count, 11);
        assert_eq!(rep.expected, q(10));
        assert_eq!(rep.tube1.exact_value.clone().unwrap(), q(4));
        assert_eq!(rep.discrepancy, q(1));
        assert_eq!(rep.ratio_exact.clone().unwrap(), Quad::ratio(1, 4));
    }

    #[test]
    fn lattice_aligned_window_has_zero_discrepancy() {
        let z = PointSource::lattice_z();
        let e: QRegion = "[1/2,21/2]".parse().unwrap();
        let rep = discrepancy_report(&z, &q(1), &e).unwrap();
        assert_eq!(rep.count, 10);
        assert!(rep.discrepancy.is_zero());
        assert_eq!(rep.ratio_exact.clone().unwrap(), Quad::zero());
    }

    #[test]
    fn rich_q10_report() {
        let l = PointSource::example_l();
        let rep = discrepancy_report(&l, &q(1), &QRegion::interval_int(0, 1025)).unwrap();
        assert_eq!(rep.discrepancy, q(12));
        assert_eq!(rep.ratio_exact.clone().unwrap(), q(3));
        assert!(is_c_deviant(&rep, 2.0));
        assert!(!is_c_deviant(&rep, 3.0)); // strict inequality
    }

    #[test]
    fn c_deviance_thresholds() {
        let z = PointSource::lattice_z();
        let rep = discrepancy_report(&z, &q(1), &QRegion::interval_int(0, 10)).unwrap();
        assert!(!is_c_deviant(&rep, 1.0)); // ratio 1/4
        assert!(is_c_deviant(&rep, 0.0)); // any positive ratio beats c = 0
    }

    #[test]
    fn rejects_bad_rho_and_empty_region() {
        let z = PointSource::lattice_z();
        assert!(discrepancy_report(&z, &q(0), &QRegion::interval_int(0, 1)).is_err());
        assert!(discrepancy_report(&z, &q(-1), &QRegion::interval_int(0, 1)).is_err());
        assert!(discrepancy_report(&z, &q(1), &QRegion::empty(1)).is_err());
    }

    #[test]
    fn centered_intervals_are_van_hove() {
        let fam = family_centered_intervals(30);
        let d = van_hove_check(&fam, &[0.5, 1.0, 2.0], 1e-1).unwrap();
        assert!(d.verdict.pass, "{:?}", d.verdict);
        // ratio at eps=1 is 4 / (2i)
        let r = &d.per_eps[1].ratios;
        assert!((r[0] - 2.0).abs() < 1e-12);
        assert!((r[29] - 2.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_second_component_still_van_hove() {
        let seq: Vec<QRegion> = (3..=40)
            .map(|i| {
                format!("[0,{i}]u[{},{}]", 2 * i, 2 * i + 1)
                    .parse()
                    .unwrap()
            })
            .collect();
        let d = van_hove_check(&seq, &[1.0], 0.25).unwrap();
        assert!(d.verdict.pass, "{:?}", d.verdict);
        // exact kernel: ratio = 7 / (i + 1) for i >= 4
        let r = &d.per_eps[0].ratios;
        assert!((r[10] - 7.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn constant_size_sequence_fails() {
        let seq: Vec<QRegion> = (1..=20)
            .map(|i| QRegion::interval_int(i, i + 1))
            .collect();
        let d = van_hove_check(&seq, &[1.0], 1e-2).unwrap();
        assert!(!d.verdict.pass);
        // tube([i, i+1], 1) = 3, so the ratio is constant 3
        assert!((d.per_eps[0].ratios[0] - 3.0).abs() < 1e-12);
        assert_eq!(d.verdict.failing_eps, Some(1.0));
    }

    #[test]
    fn deviant_sequence_diagnostics() {
        let l = PointSource::example_l();
        let reports: Vec<DiscrepancyReport> = (1..=12)
            .map(|i| {
                discrepancy_report(&l, &q(1), &QRegion::interval_int(0, 2i64.pow(i) + 1)).unwrap()
            })
            .collect();
        // ratio of Q_i is (i+1)/4 > i/4
        let c: Vec<f64> = (1..=12).map(|i| i as f64 / 4.0).collect();
        let d = deviant_implies_van_hove(&reports, &c).unwrap();
        assert!(d.verdict.pass, "{:?}", d.verdict);

        // constant-size deviant sequence cannot satisfy the precondition
        let constant: Vec<DiscrepancyReport> = (0..4)
            .map(|_| discrepancy_report(&l, &q(1), &QRegion::interval_int(0, 9)).unwrap())
            .collect();
        let c = vec![1.0, 2.0, 3.0, 4.0];
        assert!(deviant_implies_van_hove(&constant, &c).is_err());
    }

    #[test]
    fn inscribed_ball_examples() {
        let (c, r) = largest_inscribed_ball(&"[0,2]u[5,11]".parse::<QRegion>().unwrap()).unwrap();
        assert_eq!(c.0[0], q(8));
        assert_eq!(r, q(3));
        let (c, r) = largest_inscribed_ball(&"[0,4]x[0,2]".parse::<QRegion>().unwrap()).unwrap();
        assert_eq!(c.0, vec![q(2), q(1)]);
        assert_eq!(r, q(1));
        // centered intervals: radius i, unbounded along the family
        for i in [1i64, 5, 20] {
            let (_, r) = largest_inscribed_ball(&QRegion::interval_int(-i, i)).unwrap();
            assert_eq!(r, q(i));
        }
        // tie-break: two components of equal length -> leftmost center
        let (c, _) = largest_inscribed_ball(&"[0,2]u[5,7]".parse::<QRegion>().unwrap()).unwrap();
        assert_eq!(c.0[0], q(1));
    }
}
