//! Verifiers for the dynamical properties of Andreev tables.
//!
//! * the derivative of the boundary map, analytic against finite differences;
//! * invariance of `cos φ dr dφ`, by Monte Carlo;
//! * the orientation flip of the flow across Andreev impacts;
//! * direction sets and rationality of polygons;
//! * closed flows on rational tables.
//!
//! Boundary points use the departure chart `(side, r, φ)`: the ball leaves
//! `side` at arclength `r` with angle `φ` from the inward normal, positive
//! toward the side's end point. Arrivals are reported as incidence angles on
//! the target side.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::andreev::{andreev_flow, AndreevPhasePoint, AndreevTable};
use crate::billiard::{transit, Parity, SingularityKind, SingularityReport};
use crate::geometry::{
    cast_ray, mirror_in_line, point_segment_distance, vector_angle, Angle, GeometryError, Point, PolygonTable,
    Tolerances, Vec2,
};
use crate::par::{map_indexed, Exec};
use crate::sampling::{derive_seed, stream, uniform};
use crate::scalar::{Rational, Scalar};

pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

/// Finite-difference step for Jacobians.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Smallest `cos φ'` accepted by the analytic derivative.
pub const TANGENCY_EPS: f64 = 1e-9;
/// Entrywise and determinant tolerance of the Jacobian checks.
pub const JACOBIAN_TOL: f64 = 1e-5;
pub const MIN_MEASURE_SAMPLES: usize = 1000;
/// Largest direction set explored before giving up.
pub const DIRECTION_BOUND: usize = 10_000;
const DIRECTION_DEDUP: f64 = 1e-9;
/// Angle tolerance (radians) of the rationality test.
pub const ANGLE_EPS: f64 = 1e-12;
pub const Q_MAX: u64 = 1_000_000;
/// Path length budget, in table diameters, when looking for an Andreev hit.
pub const A_HIT_DIAMETERS: f64 = 1e3;

const MEASURE_GRID: usize = 64;
const MAX_TRIES: usize = 10_000;

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("near-tangential impact (cos φ' = {0:e})")]
    NearTangency(f64),
    #[error("a perturbed trajectory left the chart (expected side {expected}, found {found:?})")]
    ChartBreak { expected: usize, found: Option<usize> },
    #[error(transparent)]
    Singular(#[from] SingularityReport),
    #[error("{singular} of {total} samples hit singularities")]
    TooManySingular { singular: usize, total: usize },
    #[error("at least {min} samples are required, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("a perturbed neighbour followed a different itinerary")]
    ItineraryMismatch,
    #[error("direction set exceeded {0} members")]
    NotClosed(usize),
    #[error("no Andreev hit within path length {0}")]
    NoAHit(f64),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("the table has no side of the requested kind")]
    NoSuchSide,
    #[error("no admissible sample after {0} attempts")]
    SamplingFailed(usize),
}

fn geometry_singularity(e: GeometryError, at: Point) -> SingularityReport {
    match e {
        GeometryError::CornerHit { side, point, tau } => SingularityReport {
            kind: SingularityKind::Corner,
            location: point,
            time: tau,
            side: Some(side),
        },
        _ => SingularityReport {
            kind: SingularityKind::Escape,
            location: at,
            time: 0.0,
            side: None,
        },
    }
}

/// A point of the boundary phase space in the departure chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPhase {
    pub side: usize,
    pub r: f64,
    pub phi: f64,
}

/// The next impact of a departing ray, in the incidence chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arrival {
    pub side: usize,
    pub r: f64,
    pub phi: f64,
    pub tau: f64,
}

/// `(−1/cos φ')·[[cos φ, τ], [0, cos φ']]`.
pub fn analytic_jacobian(phi: f64, phi_prime: f64, tau: f64) -> Result<Mat2, VerifyError> {
    let cp = phi_prime.cos();
    if cp < TANGENCY_EPS {
        return Err(VerifyError::NearTangency(cp));
    }
    let k = -1.0 / cp;
    Ok([[k * phi.cos(), k * tau], [0.0, k * cp]])
}

pub fn next_impact(table: &AndreevTable, at: &BoundaryPhase) -> Result<Arrival, VerifyError> {
    let base = table.base();
    let side = base.side(at.side);
    let p = side.point_at(at.r);
    let v = side.departure_vector(at.phi);
    let cand = cast_ray(base, &p, &v, Some(at.side), &Tolerances::default()).map_err(|e| geometry_singularity(e, p))?;
    Ok(Arrival {
        side: cand.side,
        r: cand.r,
        phi: base.side(cand.side).incidence(&v),
        tau: cand.tau,
    })
}

/// One step of the boundary map, departure chart to departure chart.
pub fn collision_map(table: &AndreevTable, at: &BoundaryPhase) -> Result<BoundaryPhase, VerifyError> {
    let a = next_impact(table, at)?;
    let phi = if table.is_andreev(a.side) { -a.phi } else { a.phi };
    Ok(BoundaryPhase {
        side: a.side,
        r: a.r,
        phi,
    })
}

/// Inverse of [`collision_map`].
pub fn inverse_collision_map(table: &AndreevTable, at: &BoundaryPhase) -> Result<BoundaryPhase, VerifyError> {
    let base = table.base();
    let side = base.side(at.side);
    let p = side.point_at(at.r);
    let out = side.departure_vector(at.phi);
    let incoming = if table.is_andreev(at.side) {
        out.neg()
    } else {
        mirror_in_line(&out, &side.edge())
    };
    let cand = cast_ray(base, &p, &incoming.neg(), Some(at.side), &Tolerances::default())
        .map_err(|e| geometry_singularity(e, p))?;
    Ok(BoundaryPhase {
        side: cand.side,
        r: cand.r,
        phi: base.side(cand.side).departure(&incoming),
    })
}

/// Central-difference derivative of `(r, φ) ↦ (r', φ')`, departure chart
/// to incidence chart.
pub fn numeric_jacobian(table: &AndreevTable, at: &BoundaryPhase, h: f64) -> Result<Mat2, VerifyError> {
    let center = next_impact(table, at)?;
    let len = table.base().side(at.side).length;
    if at.r - h <= 0.0 || at.r + h >= len {
        return Err(VerifyError::ChartBreak {
            expected: center.side,
            found: None,
        });
    }
    let probe = |dr: f64, dphi: f64| -> Result<Arrival, VerifyError> {
        let shifted = BoundaryPhase {
            side: at.side,
            r: at.r + dr,
            phi: at.phi + dphi,
        };
        match next_impact(table, &shifted) {
            Ok(a) if a.side == center.side => Ok(a),
            Ok(a) => Err(VerifyError::ChartBreak {
                expected: center.side,
                found: Some(a.side),
            }),
            Err(_) => Err(VerifyError::ChartBreak {
                expected: center.side,
                found: None,
            }),
        }
    };
    let (rp, rm) = (probe(h, 0.0)?, probe(-h, 0.0)?);
    let (pp, pm) = (probe(0.0, h)?, probe(0.0, -h)?);
    let d = 2.0 * h;
    Ok([
        [(rp.r - rm.r) / d, (pp.r - pm.r) / d],
        [(rp.phi - rm.phi) / d, (pp.phi - pm.phi) / d],
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianResult {
    pub at: BoundaryPhase,
    pub target_side: usize,
    pub phi_prime: f64,
    pub tau: f64,
    pub analytic: Mat2,
    pub numeric: Mat2,
    pub det_analytic: f64,
    pub det_expected: f64,
    pub det_numeric: f64,
    pub max_abs_entry_error: f64,
    /// Largest `|numeric − analytic| / max(|analytic|, 1)` over the entries.
    pub max_rel_entry_error: f64,
    pub det_relative_error: f64,
    pub pass: bool,
}

pub fn jacobian_check(table: &AndreevTable, at: &BoundaryPhase, h: f64) -> Result<JacobianResult, VerifyError> {
    let arrival = next_impact(table, at)?;
    let analytic = analytic_jacobian(at.phi, arrival.phi, arrival.tau)?;
    let numeric = numeric_jacobian(table, at, h)?;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = (numeric[i][j] - analytic[i][j]).abs();
            max_abs = max_abs.max(e);
            max_rel = max_rel.max(e / analytic[i][j].abs().max(1.0));
        }
    }
    let det_expected = at.phi.cos() / arrival.phi.cos();
    let det_numeric = det2(&numeric);
    let det_relative_error = (det_numeric - det_expected).abs() / det_expected.abs();
    Ok(JacobianResult {
        at: *at,
        target_side: arrival.side,
        phi_prime: arrival.phi,
        tau: arrival.tau,
        analytic,
        numeric,
        det_analytic: det2(&analytic),
        det_expected,
        det_numeric,
        max_abs_entry_error: max_abs,
        max_rel_entry_error: max_rel,
        det_relative_error,
        pass: max_rel < JACOBIAN_TOL && det_relative_error < JACOBIAN_TOL,
    })
}

/// Random non-tangential departures, one per index, each checked against
/// the analytic derivative. Samples that fall in a chart break are redrawn.
pub fn jacobian_suite(
    table: &AndreevTable,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Vec<Result<JacobianResult, VerifyError>> {
    let sides = table.base().side_count();
    map_indexed(exec, n, |i| {
        let mut rng = stream(seed, i as u64);
        for _ in 0..MAX_TRIES {
            let side = rng.random_range(0..sides);
            let len = table.base().side(side).length;
            let at = BoundaryPhase {
                side,
                r: uniform(&mut rng, 1e-3 * len, (1.0 - 1e-3) * len),
                phi: uniform(&mut rng, -1.4, 1.4),
            };
            match jacobian_check(table, &at, JACOBIAN_STEP) {
                Ok(res) if res.phi_prime.cos() > 0.05 => return Ok(res),
                _ => continue,
            }
        }
        Err(VerifyError::SamplingFailed(MAX_TRIES))
    })
}

/// A rectangle `[r0, r1] × [φ0, φ1]` in the departure chart of one side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseRegion {
    pub side: usize,
    pub r: (f64, f64),
    pub phi: (f64, f64),
}

impl PhaseRegion {
    /// `∬ cos φ dr dφ` in closed form.
    pub fn measure(&self) -> f64 {
        (self.r.1 - self.r.0) * (self.phi.1.sin() - self.phi.0.sin())
    }

    pub fn contains(&self, p: &BoundaryPhase) -> bool {
        p.side == self.side && p.r >= self.r.0 && p.r <= self.r.1 && p.phi >= self.phi.0 && p.phi <= self.phi.1
    }

    /// The whole phase space over one side.
    pub fn full_side(table: &AndreevTable, side: usize) -> Self {
        PhaseRegion {
            side,
            r: (0.0, table.base().side(side).length),
            phi: (-FRAC_PI_2, FRAC_PI_2),
        }
    }

    fn validate(&self, table: &AndreevTable) -> Result<(), VerifyError> {
        if self.side >= table.base().side_count() {
            return Err(VerifyError::InvalidRegion(format!("side {} out of range", self.side)));
        }
        let len = table.base().side(self.side).length;
        let ok_r = 0.0 <= self.r.0 && self.r.0 < self.r.1 && self.r.1 <= len;
        let ok_phi = -FRAC_PI_2 <= self.phi.0 && self.phi.0 < self.phi.1 && self.phi.1 <= FRAC_PI_2;
        if ok_r && ok_phi {
            Ok(())
        } else {
            Err(VerifyError::InvalidRegion(format!(
                "r {:?} must lie in [0, {len}] and φ {:?} in [-π/2, π/2]",
                self.r, self.phi
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    pub region: PhaseRegion,
    pub steps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub measure_exact: f64,
    /// Monte Carlo estimate of the measure of the region.
    pub measure_before: f64,
    /// Monte Carlo estimate of the measure of its image.
    pub measure_after: f64,
    pub relative_error: f64,
    pub singular_samples: usize,
}

fn iterate(table: &AndreevTable, mut p: BoundaryPhase, steps: usize, inverse: bool) -> Option<BoundaryPhase> {
    for _ in 0..steps {
        p = if inverse {
            inverse_collision_map(table, &p).ok()?
        } else {
            collision_map(table, &p).ok()?
        };
    }
    Some(p)
}

/// Cell layout over the bounding box of the image samples on one side.
#[derive(Clone, Copy)]
struct ImageGrid {
    r0: f64,
    phi0: f64,
    dr: f64,
    dphi: f64,
}

impl ImageGrid {
    fn around<'a>(points: impl Iterator<Item = &'a BoundaryPhase>) -> Option<Self> {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = (lo.0.min(p.r), lo.1.min(p.phi));
            hi = (hi.0.max(p.r), hi.1.max(p.phi));
        }
        if lo.0 > hi.0 {
            return None;
        }
        let g = MEASURE_GRID as f64;
        Some(ImageGrid {
            r0: lo.0,
            phi0: lo.1,
            dr: (hi.0 - lo.0).max(1e-12) / g,
            dphi: (hi.1 - lo.1).max(1e-12) / g,
        })
    }

    fn cell(&self, p: &BoundaryPhase) -> (isize, isize) {
        let top = MEASURE_GRID as isize - 1;
        let i = ((p.r - self.r0) / self.dr).floor() as isize;
        let j = ((p.phi - self.phi0) / self.dphi).floor() as isize;
        (i.clamp(0, top), j.clamp(0, top))
    }
}

/// Compares the measure of a region with the measure of its image under
/// `steps` applications of the boundary map.
///
/// The image is covered by cells of a grid laid over the bounding box of the
/// pushed-forward samples on each side.
/// The cells are then sampled uniformly and each sample is pulled back
/// through the inverse map to test membership, so the image measure is
/// estimated without using any derivative.
pub fn check_measure_preservation(
    table: &AndreevTable,
    region: &PhaseRegion,
    steps: usize,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<MeasureReport, VerifyError> {
    if n < MIN_MEASURE_SAMPLES {
        return Err(VerifyError::TooFewSamples {
            got: n,
            min: MIN_MEASURE_SAMPLES,
        });
    }
    if steps == 0 {
        return Err(VerifyError::InvalidRegion("at least one step is required".into()));
    }
    region.validate(table)?;

    let area = (region.r.1 - region.r.0) * (region.phi.1 - region.phi.0);
    let forward = map_indexed(exec, n, |i| {
        let mut rng = stream(seed, i as u64);
        let p = BoundaryPhase {
            side: region.side,
            r: uniform(&mut rng, region.r.0, region.r.1),
            phi: uniform(&mut rng, region.phi.0, region.phi.1),
        };
        (p.phi.cos(), iterate(table, p, steps, false))
    });
    let measure_before = area * forward.iter().map(|(c, _)| c).sum::<f64>() / n as f64;
    let singular = forward.iter().filter(|(_, img)| img.is_none()).count();
    if singular * 100 > n {
        return Err(VerifyError::TooManySingular { singular, total: n });
    }

    let images: Vec<&BoundaryPhase> = forward.iter().filter_map(|(_, img)| img.as_ref()).collect();
    let sides = table.base().side_count();
    let grids: Vec<Option<ImageGrid>> = (0..sides)
        .map(|s| ImageGrid::around(images.iter().copied().filter(|p| p.side == s)))
        .collect();
    let mut cover = BTreeSet::new();
    for img in &images {
        let Some(grid) = grids[img.side] else { continue };
        let (i, j) = grid.cell(img);
        for di in -1..=1 {
            for dj in -1..=1 {
                cover.insert((img.side, i + di, j + dj));
            }
        }
    }
    let cells: Vec<(usize, isize, isize)> = cover.into_iter().collect();
    let m = cells.len();
    if m == 0 {
        return Err(VerifyError::TooManySingular { singular, total: n });
    }
    let n_after = n.max(m);
    let back_seed = derive_seed(seed, 1);
    let pulled = map_indexed(exec, n_after, |k| {
        let (s, i, j) = cells[k % m];
        let grid = grids[s].expect("covered sides have a grid");
        let mut rng = stream(back_seed, k as u64);
        let p = BoundaryPhase {
            side: s,
            r: grid.r0 + (i as f64 + rng.random::<f64>()) * grid.dr,
            phi: grid.phi0 + (j as f64 + rng.random::<f64>()) * grid.dphi,
        };
        let len = table.base().side(s).length;
        if !(0.0..=len).contains(&p.r) || p.phi.abs() >= FRAC_PI_2 {
            return 0.0;
        }
        match iterate(table, p, steps, true) {
            Some(q) if region.contains(&q) => p.phi.cos(),
            _ => 0.0,
        }
    });
    let mut sums = vec![(0.0, 0usize); m];
    for (k, v) in pulled.iter().enumerate() {
        sums[k % m].0 += v;
        sums[k % m].1 += 1;
    }
    let measure_after: f64 = cells
        .iter()
        .zip(&sums)
        .map(|(&(s, _, _), &(sum, count))| {
            let grid = grids[s].expect("covered sides have a grid");
            grid.dr * grid.dphi * sum / count as f64
        })
        .sum();

    Ok(MeasureReport {
        region: *region,
        steps,
        n_samples: n,
        seed,
        measure_exact: region.measure(),
        measure_before,
        measure_after,
        relative_error: (measure_after - measure_before).abs() / measure_before.max(f64::MIN_POSITIVE),
        singular_samples: singular,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TotalMeasureReport {
    /// Perimeter times `∫ cos φ dφ = 2`.
    pub exact: f64,
    pub before: f64,
    pub after: f64,
    pub per_side: Vec<MeasureReport>,
}

/// Total phase-space measure, region by region over every side, and the
/// measure of its image under one step.
pub fn total_phase_measure(
    table: &AndreevTable,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<TotalMeasureReport, VerifyError> {
    let mut per_side = Vec::new();
    for side in 0..table.base().side_count() {
        let region = PhaseRegion::full_side(table, side);
        per_side.push(check_measure_preservation(
            table,
            &region,
            1,
            n,
            derive_seed(seed, side as u64),
            exec,
        )?);
    }
    Ok(TotalMeasureReport {
        exact: 2.0 * table.base().perimeter(),
        before: per_side.iter().map(|r| r.measure_before).sum(),
        after: per_side.iter().map(|r| r.measure_after).sum(),
        per_side,
    })
}

/// Random rectangles in the departure chart, kept away from the corners.
pub fn random_regions(table: &AndreevTable, count: usize, seed: u64) -> Vec<PhaseRegion> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let side = rng.random_range(0..table.base().side_count());
            let len = table.base().side(side).length;
            let a = uniform(&mut rng, 0.05, 0.95) * len;
            let b = uniform(&mut rng, 0.05, 0.95) * len;
            let p = uniform(&mut rng, -1.2, 1.2);
            let q = uniform(&mut rng, -1.2, 1.2);
            PhaseRegion {
                side,
                r: (a.min(b), a.max(b).max(a.min(b) + 1e-2 * len)),
                phi: (p.min(q), p.max(q).max(p.min(q) + 1e-2)),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Free,
    Specular,
    Andreev,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeSignReport {
    pub segment: (f64, f64),
    pub andreev_hits: usize,
    pub specular_hits: usize,
    pub det_numeric: f64,
    pub expected_sign: i8,
    pub pass: bool,
}

fn traced_flow(
    table: &AndreevTable,
    start: &AndreevPhasePoint,
    t: f64,
) -> Result<(AndreevPhasePoint, Vec<usize>), SingularityReport> {
    let retro = |i: usize| table.is_andreev(i);
    let mut state = start.clone();
    let mut on = None;
    let mut remaining = t;
    let mut sides = Vec::new();
    loop {
        let tr = transit(
            table.base(),
            &state.position,
            &state.direction,
            on,
            state.parity,
            &retro,
        )?;
        if tr.param > remaining {
            state.position = state.position.add(&state.direction.scale(&remaining));
            return Ok((state, sides));
        }
        remaining -= tr.param;
        sides.push(tr.side);
        state = AndreevPhasePoint::from_vectors(tr.hit, tr.outgoing, tr.parity);
        on = Some(tr.side);
    }
}

fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Determinant of the finite-difference Jacobian of
/// `(x, y, θ) ↦ flow_t(x, y, θ)`.
pub fn flow_jacobian_sign(
    table: &AndreevTable,
    state: &AndreevPhasePoint,
    t: f64,
    h: f64,
) -> Result<VolumeSignReport, VerifyError> {
    let (_, itinerary) = traced_flow(table, state, t)?;
    let theta = state.angle().radians();
    let perturbed = |k: usize, sign: f64| -> Result<(f64, f64, f64), VerifyError> {
        let mut pos = state.position;
        let mut th = theta;
        match k {
            0 => pos.x += sign * h,
            1 => pos.y += sign * h,
            _ => th += sign * h,
        }
        let s = AndreevPhasePoint::new(pos, Angle::new(th), state.parity);
        let (end, sides) = traced_flow(table, &s, t)?;
        if sides != itinerary {
            return Err(VerifyError::ItineraryMismatch);
        }
        Ok((end.position.x, end.position.y, end.angle().radians()))
    };
    let mut cols = [[0.0; 3]; 3];
    for (k, col) in cols.iter_mut().enumerate() {
        let plus = perturbed(k, 1.0)?;
        let minus = perturbed(k, -1.0)?;
        *col = [
            (plus.0 - minus.0) / (2.0 * h),
            (plus.1 - minus.1) / (2.0 * h),
            wrap_pi(plus.2 - minus.2) / (2.0 * h),
        ];
    }
    let jac = [0, 1, 2].map(|i| [cols[0][i], cols[1][i], cols[2][i]]);
    let andreev_hits = itinerary.iter().filter(|&&s| table.is_andreev(s)).count();
    let expected_sign: i8 = if andreev_hits % 2 == 0 { 1 } else { -1 };
    let det_numeric = det3(&jac);
    Ok(VolumeSignReport {
        segment: (0.0, t),
        andreev_hits,
        specular_hits: itinerary.len() - andreev_hits,
        det_numeric,
        expected_sign,
        pass: (det_numeric - f64::from(expected_sign)).abs() < JACOBIAN_TOL,
    })
}

/// Uniform interior point at distance at least `margin` from the boundary.
pub fn sample_interior<R: Rng>(table: &PolygonTable, rng: &mut R, margin: f64) -> Point {
    let (lo, hi) = table.bounding_box();
    loop {
        let p = Point::new(uniform(rng, lo.x, hi.x), uniform(rng, lo.y, hi.y));
        if !table.contains(&p, 0.0) {
            continue;
        }
        let clear = table
            .sides()
            .iter()
            .all(|s| point_segment_distance(&p, &s.a, &s.b) > margin);
        if clear {
            return p;
        }
    }
}

fn sample_segment<R: Rng>(table: &AndreevTable, kind: SegmentKind, rng: &mut R) -> Option<(AndreevPhasePoint, f64)> {
    let base = table.base();
    let tol = Tolerances::default();
    if kind == SegmentKind::Free {
        let p = sample_interior(base, rng, 1e-3);
        let dir = Angle::new(uniform(rng, 0.0, TAU));
        let cand = cast_ray(base, &p, &dir.unit(), None, &tol).ok()?;
        let t = uniform(rng, 0.1, 0.9) * cand.tau;
        return Some((AndreevPhasePoint::new(p, dir, Parity::Plus), t));
    }
    let want = kind == SegmentKind::Andreev;
    let sides: Vec<usize> = (0..base.side_count())
        .filter(|&i| table.is_andreev(i) == want)
        .collect();
    let side_idx = sides[rng.random_range(0..sides.len())];
    let side = base.side(side_idx);
    let p = side.point_at(uniform(rng, 0.1, 0.9) * side.length);
    let out = side.departure_vector(uniform(rng, -1.2, 1.2));
    let incoming = if want {
        out.neg()
    } else {
        mirror_in_line(&out, &side.edge())
    };
    let back = cast_ray(base, &p, &incoming.neg(), Some(side_idx), &tol).ok()?;
    let fwd = cast_ray(base, &p, &out, Some(side_idx), &tol).ok()?;
    let a = uniform(rng, 0.2, 0.8) * back.tau;
    let start = p.sub(&incoming.scale(&a));
    let t = a + uniform(rng, 0.2, 0.8) * fwd.tau;
    let dir = Angle::from_vector(incoming.x, incoming.y);
    Some((AndreevPhasePoint::new(start, dir, Parity::Plus), t))
}

/// Volume-sign checks on `n` random segments of the given kind.
pub fn volume_sign_suite(
    table: &AndreevTable,
    kind: SegmentKind,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<VolumeSignReport>, VerifyError> {
    let has_side = match kind {
        SegmentKind::Free => true,
        SegmentKind::Andreev => !table.andreev_sides().is_empty(),
        SegmentKind::Specular => (0..table.base().side_count()).any(|i| !table.is_andreev(i)),
    };
    if !has_side {
        return Err(VerifyError::NoSuchSide);
    }
    map_indexed(exec, n, |i| {
        let mut rng = stream(seed, i as u64);
        for _ in 0..MAX_TRIES {
            let Some((state, t)) = sample_segment(table, kind, &mut rng) else {
                continue;
            };
            if let Ok(rep) = flow_jacobian_sign(table, &state, t, JACOBIAN_STEP) {
                return Ok(rep);
            }
        }
        Err(VerifyError::SamplingFailed(MAX_TRIES))
    })
    .into_iter()
    .collect()
}

/// Directions reachable from a base direction by reflections in the sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionSet {
    pub base: Angle,
    /// Sorted by angle.
    pub members: Vec<Angle>,
    /// Order of the dihedral group generated by the side reflections, or 0
    /// when it could not be identified.
    pub group_order: usize,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: Angle, tol: f64) -> bool {
        self.members.iter().any(|m| m.distance(a) <= tol)
    }
}

fn side_inclinations(table: &PolygonTable) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for s in table.sides() {
        let g = s.inclination.radians();
        if !out
            .iter()
            .any(|&h| Angle::new(2.0 * (g - h)).distance(Angle::new(0.0)) < 1e-12)
        {
            out.push(g);
        }
    }
    out
}

pub fn direction_orbit(theta: Angle, table: &PolygonTable) -> Result<DirectionSet, VerifyError> {
    direction_orbit_bounded(theta, table, DIRECTION_BOUND)
}

pub fn direction_orbit_bounded(theta: Angle, table: &PolygonTable, bound: usize) -> Result<DirectionSet, VerifyError> {
    let gammas = side_inclinations(table);
    let slots = (TAU / DIRECTION_DEDUP).round() as i64;
    let key = |a: Angle| (a.radians() / DIRECTION_DEDUP).round() as i64;
    let mut seen: BTreeMap<i64, Angle> = BTreeMap::new();
    let known = |seen: &BTreeMap<i64, Angle>, a: Angle| {
        let k = key(a);
        [k - 1, k, k + 1]
            .iter()
            .filter_map(|c| seen.get(&c.rem_euclid(slots)))
            .any(|m| m.distance(a) <= DIRECTION_DEDUP)
    };
    let mut queue = VecDeque::from([theta]);
    seen.insert(key(theta).rem_euclid(slots), theta);
    while let Some(a) = queue.pop_front() {
        for &g in &gammas {
            let b = Angle::new(2.0 * g - a.radians());
            if known(&seen, b) {
                continue;
            }
            if seen.len() >= bound {
                return Err(VerifyError::NotClosed(bound));
            }
            seen.insert(key(b).rem_euclid(slots), b);
            queue.push_back(b);
        }
    }
    let mut members: Vec<Angle> = seen.into_values().collect();
    members.sort_by(|a, b| a.radians().total_cmp(&b.radians()));
    Ok(DirectionSet {
        base: theta,
        members,
        group_order: dihedral_order(&gammas),
    })
}

fn dihedral_order(gammas: &[f64]) -> usize {
    let mut lcm = BigInt::one();
    for g in &gammas[1..] {
        match rational_approximation((g - gammas[0]) / PI, ANGLE_EPS, Q_MAX) {
            Some((_, q)) => lcm = lcm.lcm(&BigInt::from(q)),
            None => return 0,
        }
    }
    lcm.to_usize().map_or(0, |n| 2 * n)
}

fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    if lo.is_positive() {
        let fl = lo.floor();
        if fl == *lo {
            return fl;
        }
        let next = fl.clone() + <Rational as One>::one();
        if next <= *hi {
            return next;
        }
        let inner = simplest_between(&(hi.clone() - fl.clone()).recip(), &(lo.clone() - fl.clone()).recip());
        fl + inner.recip()
    } else if hi.is_negative() {
        -simplest_between(&-hi.clone(), &-lo.clone())
    } else {
        <Rational as Zero>::zero()
    }
}

/// The fraction `p/q` with the smallest denominator in `[x − eps, x + eps]`,
/// if that denominator is at most `q_max`.
pub fn rational_approximation(x: f64, eps: f64, q_max: u64) -> Option<(i64, u64)> {
    let c = Rational::from_float(x)?;
    let e = Rational::from_float(eps)?;
    let best = simplest_between(&(c.clone() - e.clone()), &(c + e));
    let q = best.denom().to_u64()?;
    if q > q_max {
        return None;
    }
    Some((best.numer().to_i64()?, q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleWitness {
    pub vertex: usize,
    pub radians: f64,
    /// `(p, q)` with the angle equal to `pπ/q` within tolerance.
    pub fraction: Option<(i64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalityWitness {
    pub rational: bool,
    pub angles: Vec<AngleWitness>,
}

pub fn is_rational(table: &PolygonTable) -> RationalityWitness {
    is_rational_with(table, ANGLE_EPS, Q_MAX)
}

/// Tests every interior angle against `pπ/q`, `q ≤ q_max`, within `eps`
/// radians.
pub fn is_rational_with(table: &PolygonTable, eps: f64, q_max: u64) -> RationalityWitness {
    let angles: Vec<AngleWitness> = (0..table.vertices().len())
        .map(|i| {
            let radians = table.interior_angle(i);
            AngleWitness {
                vertex: i,
                radians,
                fraction: rational_approximation(radians / PI, eps / PI, q_max),
            }
        })
        .collect();
    RationalityWitness {
        rational: angles.iter().all(|a| a.fraction.is_some()),
        angles,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFlowReport {
    /// Path length forward to the first Andreev hit of the ordinary flow.
    pub t0: f64,
    /// Path length backward to the first Andreev hit of the ordinary flow.
    pub t1: f64,
    /// Candidate period `2(t0 + t1)`.
    pub period: f64,
    pub closed: bool,
    pub residual: f64,
    /// The alternative period `2 t0 + t1`, reported for comparison only.
    pub literal_period: f64,
    pub literal_residual: Option<f64>,
}

/// Ray parameter of the first Andreev impact when every side reflects
/// specularly.
fn first_andreev_param<S: Scalar>(
    table: &AndreevTable<S>,
    position: &Vec2<S>,
    direction: &Vec2<S>,
) -> Result<S, VerifyError> {
    let budget = A_HIT_DIAMETERS * table.base().diameter();
    let mut pos = position.clone();
    let mut dir = direction.clone();
    let mut on = None;
    let mut param = S::zero();
    let mut length = 0.0;
    let plain = |_: usize| false;
    loop {
        let tr = transit(table.base(), &pos, &dir, on, Parity::Plus, &plain)?;
        param = param + tr.param.clone();
        if table.is_andreev(tr.side) {
            return Ok(param);
        }
        length += tr.event.tau;
        if length > budget {
            return Err(VerifyError::NoAHit(budget));
        }
        pos = tr.hit;
        dir = tr.outgoing;
        on = Some(tr.side);
    }
}

fn phase_residual<S: Scalar>(a: &AndreevPhasePoint<S>, b: &AndreevPhasePoint<S>) -> f64 {
    if S::EXACT && a == b {
        return 0.0;
    }
    let pos = a.position.to_f64().distance(&b.position.to_f64());
    let ang = vector_angle(&a.direction.to_f64(), &b.direction.to_f64());
    let par = if a.parity == b.parity { 0.0 } else { 1.0 };
    pos + ang + par
}

/// Runs the Andreev flow for the candidate period built from the first
/// forward and backward Andreev hits and measures how far the state is
/// from its start. Exact scalars require exact return.
pub fn closed_flow_check<S: Scalar>(
    table: &AndreevTable<S>,
    position: &Vec2<S>,
    direction: &Vec2<S>,
    tol: f64,
) -> Result<ClosedFlowReport, VerifyError> {
    let fwd = first_andreev_param(table, position, direction)?;
    let bwd = first_andreev_param(table, position, &direction.neg())?;
    let speed = direction.norm_f64();
    let two = S::from_i64(2);
    let start = AndreevPhasePoint::from_vectors(position.clone(), direction.clone(), Parity::Plus);
    let period_param = two.clone() * (fwd.clone() + bwd.clone());
    let end = andreev_flow(table, &start, period_param.clone())?;
    let residual = phase_residual(&start, &end);
    let closed = if S::EXACT { end == start } else { residual < tol };
    let literal_param = two * fwd.clone() + bwd.clone();
    let literal_residual = andreev_flow(table, &start, literal_param.clone())
        .ok()
        .map(|e| phase_residual(&start, &e));
    Ok(ClosedFlowReport {
        t0: fwd.to_f64() * speed,
        t1: bwd.to_f64() * speed,
        period: period_param.to_f64() * speed,
        closed,
        residual,
        literal_period: literal_param.to_f64() * speed,
        literal_residual,
    })
}

/// Float convenience form taking a direction angle.
pub fn closed_flow_check_angle(
    table: &AndreevTable,
    x: Point,
    theta: Angle,
    tol: f64,
) -> Result<ClosedFlowReport, VerifyError> {
    closed_flow_check(table, &x, &theta.unit(), tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFlowRecord {
    pub index: usize,
    pub seed: u64,
    pub position: Point,
    pub theta: Angle,
    pub pass: bool,
    pub report: Option<ClosedFlowReport>,
    pub error: Option<String>,
}

/// Closed-flow checks from `n` random interior points in uniformly random
/// directions.
pub fn closed_flow_suite(table: &AndreevTable, n: usize, seed: u64, tol: f64, exec: Exec) -> Vec<ClosedFlowRecord> {
    map_indexed(exec, n, |i| {
        let mut rng = stream(seed, i as u64);
        let position = sample_interior(table.base(), &mut rng, 1e-3);
        let theta = Angle::new(uniform(&mut rng, 0.0, TAU));
        let outcome = closed_flow_check_angle(table, position, theta, tol);
        ClosedFlowRecord {
            index: i,
            seed,
            position,
            theta,
            pass: matches!(&outcome, Ok(r) if r.closed),
            error: outcome.as_ref().err().map(ToString::to_string),
            report: outcome.ok(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_polygon;
    use crate::scalar::ratio;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn square() -> PolygonTable {
        validate_polygon(vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]).unwrap()
    }

    fn square_andreev() -> AndreevTable {
        AndreevTable::with_default_axis(square(), &[1]).unwrap()
    }

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() < tol))
    }

    #[test]
    fn analytic_examples() {
        let m = analytic_jacobian(0.0, 0.0, 1.0).unwrap();
        assert!(close(&m, &[[-1.0, -1.0], [0.0, -1.0]], 1e-15));
        assert!((det2(&m) - 1.0).abs() < 1e-15);
        let m = analytic_jacobian(FRAC_PI_3, 0.0, 2.0).unwrap();
        assert!(close(&m, &[[-0.5, -2.0], [0.0, -1.0]], 1e-15));
        assert!((det2(&m) - 0.5).abs() < 1e-15);
        assert!(matches!(
            analytic_jacobian(0.0, FRAC_PI_2 - 1e-12, 1.0),
            Err(VerifyError::NearTangency(_))
        ));
    }

    #[test]
    fn numeric_matches_analytic_on_square() {
        let t = square_andreev();
        let at = BoundaryPhase {
            side: 0,
            r: 0.3,
            phi: 0.4,
        };
        let res = jacobian_check(&t, &at, JACOBIAN_STEP).unwrap();
        assert!(close(&res.numeric, &res.analytic, 1e-5), "{res:?}");
        assert!(res.pass);
        assert!((res.det_analytic - res.det_expected).abs() < 1e-10);
    }

    #[test]
    fn corner_crossing_breaks_the_chart() {
        let t = square_andreev();
        // aimed 1e-7 below the corner (1, 1)
        let phi = (0.5f64 / (1.0 - 1e-7)).atan();
        let at = BoundaryPhase { side: 0, r: 0.5, phi };
        assert!(matches!(
            numeric_jacobian(&t, &at, JACOBIAN_STEP),
            Err(VerifyError::ChartBreak { .. })
        ));
    }

    #[test]
    fn jacobian_suite_passes() {
        let t = square_andreev();
        let res = jacobian_suite(&t, 100, 11, Exec::Parallel);
        assert_eq!(res.len(), 100);
        for r in res {
            let r = r.unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.det_relative_error < 1e-5);
        }
    }

    #[test]
    fn inverse_map_undoes_forward_map() {
        let t = square_andreev();
        for (side, r, phi) in [(0, 0.3, 0.4), (1, 0.6, -0.7), (2, 0.2, 1.1), (3, 0.9, -0.2)] {
            let at = BoundaryPhase { side, r, phi };
            let back = inverse_collision_map(&t, &collision_map(&t, &at).unwrap()).unwrap();
            assert_eq!(back.side, side);
            assert!((back.r - r).abs() < 1e-12 && (back.phi - phi).abs() < 1e-12);
        }
    }

    #[test]
    fn total_measure_of_square_is_eight() {
        let t = square_andreev();
        let rep = total_phase_measure(&t, 20_000, 3, Exec::Parallel).unwrap();
        assert_eq!(rep.exact, 8.0);
        assert!((rep.before - 8.0).abs() < 8e-2);
        assert!((rep.after - 8.0).abs() < 8e-2, "{}", rep.after);
    }

    #[test]
    fn measure_preserved_under_one_and_two_steps() {
        let t = square_andreev();
        let d = PhaseRegion {
            side: 0,
            r: (0.0, 1.0),
            phi: (-FRAC_PI_4, FRAC_PI_4),
        };
        for steps in [1, 2] {
            let rep = check_measure_preservation(&t, &d, steps, 20_000, 5, Exec::Parallel).unwrap();
            assert!(rep.relative_error < 1e-2, "{rep:?}");
        }
    }

    #[test]
    fn measure_guards() {
        let t = square_andreev();
        let d = PhaseRegion::full_side(&t, 0);
        assert!(matches!(
            check_measure_preservation(&t, &d, 1, 999, 0, Exec::Sequential),
            Err(VerifyError::TooFewSamples { .. })
        ));
        let bad = PhaseRegion {
            side: 0,
            r: (0.5, 2.0),
            phi: (0.0, 0.1),
        };
        assert!(matches!(
            check_measure_preservation(&t, &bad, 1, 1000, 0, Exec::Sequential),
            Err(VerifyError::InvalidRegion(_))
        ));
    }

    #[test]
    fn volume_sign_by_segment_kind() {
        let t = square_andreev();
        for (kind, sign) in [
            (SegmentKind::Free, 1.0),
            (SegmentKind::Specular, 1.0),
            (SegmentKind::Andreev, -1.0),
        ] {
            let reps = volume_sign_suite(&t, kind, 20, 9, Exec::Parallel).unwrap();
            for r in reps {
                assert!((r.det_numeric - sign).abs() < 1e-5, "{kind:?} {r:?}");
                assert!(r.pass);
                let hits = r.andreev_hits + r.specular_hits;
                assert_eq!(hits, usize::from(kind != SegmentKind::Free));
            }
        }
    }

    #[test]
    fn free_flight_determinant_is_one() {
        let t = square_andreev();
        let s = AndreevPhasePoint::new(p(0.3, 0.4), Angle::new(0.3), Parity::Plus);
        let r = flow_jacobian_sign(&t, &s, 0.2, JACOBIAN_STEP).unwrap();
        assert!((r.det_numeric - 1.0).abs() < 1e-6);
    }

    #[test]
    fn direction_orbit_examples() {
        let sq = square();
        let d = direction_orbit(Angle::new(0.3), &sq).unwrap();
        assert_eq!(d.len(), 4);
        for a in [0.3, -0.3, PI - 0.3, PI + 0.3] {
            assert!(d.contains(Angle::new(a), 1e-12));
        }
        assert_eq!(d.group_order, 4);
        assert_eq!(direction_orbit(Angle::new(0.0), &sq).unwrap().len(), 2);
        let h = 3f64.sqrt() / 2.0;
        let tri = validate_polygon(vec![p(0., 0.), p(1., 0.), p(0.5, h)]).unwrap();
        let d = direction_orbit(Angle::new(0.1), &tri).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d.group_order, 6);
    }

    #[test]
    fn irrational_table_does_not_close() {
        let tri = validate_polygon(vec![p(0., 0.), p(1., 0.), p(1f64.cos(), 1f64.sin())]).unwrap();
        assert!(matches!(
            direction_orbit_bounded(Angle::new(0.2), &tri, 500),
            Err(VerifyError::NotClosed(500))
        ));
    }

    #[test]
    fn rationality_examples() {
        let w = is_rational(&square());
        assert!(w.rational);
        assert!(w.angles.iter().all(|a| a.fraction == Some((1, 2))));
        let tri = validate_polygon(vec![p(0., 0.), p(1., 0.), p(0., 1.)]).unwrap();
        let w = is_rational(&tri);
        assert!(w.rational);
        let mut fr: Vec<_> = w.angles.iter().map(|a| a.fraction.unwrap()).collect();
        fr.sort();
        assert_eq!(fr, vec![(1, 2), (1, 4), (1, 4)]);
        let one_rad = validate_polygon(vec![p(0., 0.), p(1., 0.), p(1f64.cos(), 1f64.sin())]).unwrap();
        let w = is_rational(&one_rad);
        assert!(!w.rational);
        assert!(w.angles[0].fraction.is_none());
        assert!((w.angles[0].radians - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simplest_fraction_examples() {
        assert_eq!(rational_approximation(0.5, 1e-12, 10), Some((1, 2)));
        assert_eq!(rational_approximation(-0.75, 1e-12, 10), Some((-3, 4)));
        assert_eq!(rational_approximation(1.0 / 3.0, 1e-12, 10), Some((1, 3)));
        assert_eq!(rational_approximation(PI, 1e-3, 1000), Some((201, 64)));
        assert_eq!(rational_approximation(PI, 1e-6, 100), None);
    }

    proptest! {
        #[test]
        fn simplest_fraction_matches_brute_force(x in -3.0f64..3.0, e in 1e-6f64..1e-2) {
            let q_max = 300u64;
            let brute = (1..=q_max).find_map(|q| {
                let p = (x * q as f64).round();
                ((x - p / q as f64).abs() <= e).then_some((p as i64, q))
            });
            let got = rational_approximation(x, e, q_max);
            // compare denominators; ties in the numerator cannot occur at a fixed q
            prop_assert_eq!(got.map(|g| g.1), brute.map(|b| b.1));
        }

        #[test]
        fn direction_set_is_a_group_orbit(th in 0.0f64..TAU, pick in 0usize..8) {
            let tri = validate_polygon(vec![p(0., 0.), p(1., 0.), p(0., 1.)]).unwrap();
            let d = direction_orbit(Angle::new(th), &tri).unwrap();
            let other = d.members[pick % d.len()];
            let e = direction_orbit(other, &tri).unwrap();
            prop_assert_eq!(d.len(), e.len());
            for m in &d.members {
                prop_assert!(e.contains(*m, 1e-8));
            }
        }
    }

    #[test]
    fn closed_flow_square_horizontal() {
        let t = square_andreev();
        let (a, b) = (0.3, 0.6);
        let r = closed_flow_check_angle(&t, p(a, b), Angle::new(0.0), 1e-9).unwrap();
        assert!((r.t0 - (1.0 - a)).abs() < 1e-15);
        assert!((r.t1 - (1.0 + a)).abs() < 1e-15);
        assert!((r.period - 4.0).abs() < 1e-15);
        assert!(r.closed);
        assert!(r.literal_residual.unwrap() > 1e-3);
    }

    #[test]
    fn closed_flow_square_exact() {
        let sq = validate_polygon(vec![
            Vec2::new(ratio(0, 1), ratio(0, 1)),
            Vec2::new(ratio(1, 1), ratio(0, 1)),
            Vec2::new(ratio(1, 1), ratio(1, 1)),
            Vec2::new(ratio(0, 1), ratio(1, 1)),
        ])
        .unwrap();
        let t = AndreevTable::with_default_axis(sq, &[1]).unwrap();
        let x = Vec2::new(ratio(1, 3), ratio(2, 7));
        let r = closed_flow_check(&t, &x, &Vec2::new(ratio(1, 1), ratio(0, 1)), 0.0).unwrap();
        assert_eq!(r.period, 4.0);
        assert!(r.closed);
        assert_eq!(r.residual, 0.0);
        let r = closed_flow_check(&t, &x, &Vec2::new(ratio(2, 1), ratio(1, 1)), 0.0).unwrap();
        assert!(r.closed);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn closed_flow_exceptional_and_generic() {
        let t = square_andreev();
        assert!(matches!(
            closed_flow_check_angle(&t, p(0.5, 0.5), Angle::new(FRAC_PI_2), 1e-9),
            Err(VerifyError::NoAHit(_))
        ));
        let r = closed_flow_check_angle(&t, p(0.5, 0.5), Angle::new(0.5f64.atan()), 1e-9).unwrap();
        assert!(r.closed && r.residual < 1e-9);
    }

    #[test]
    fn closed_flow_suite_square_and_triangle() {
        let sq = square_andreev();
        let tri =
            AndreevTable::with_default_axis(validate_polygon(vec![p(0., 0.), p(1., 0.), p(0., 1.)]).unwrap(), &[2])
                .unwrap();
        for t in [sq, tri] {
            let recs = closed_flow_suite(&t, 100, 21, 1e-9, Exec::Parallel);
            let ok = recs.iter().filter(|r| r.pass).count();
            assert!(ok >= 99, "{ok}");
        }
    }
}
