//! Perturbed rectangles: a rectangular pocket on one side of a host
//! rectangle, T-fractal prefractals on top of a unit square, and the orbit
//! classification used to compare them with the unperturbed wire.

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::{transit, Parity, SingularityReport};
use crate::geometry::{mirror_in_line, validate_polygon, vector_angle, Angle, GeometryError, Point, Polygon, Vec2};
use crate::par::{map_indexed, Exec};
use crate::scalar::{format_rational, is_dyadic, ratio, Rational, Scalar};

/// Highest T-fractal level built by default.
pub const MAX_TFRACTAL_LEVEL: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("level {level} exceeds the maximum {max}")]
    LevelTooHigh { level: usize, max: usize },
    #[error("the orbit never crossed the mouth inward")]
    NeverEnters,
    #[error("the orbit did not leave the perturbation within {0} events")]
    NoExit(usize),
    #[error(transparent)]
    Singular(#[from] SingularityReport),
    #[error("basepoint {0} is a dyadic rational")]
    DyadicBasepoint(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Side of the host rectangle `[0, W] × [0, H]`, in counterclockwise order
/// from the bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostSide {
    Bottom,
    Right,
    Top,
    Left,
}

impl HostSide {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// A rectangular pocket opening off one side of a `width × height` host.
/// The offset is measured from the end of the side with the smaller
/// coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct NotchSpec<S = f64> {
    pub host_width: S,
    pub host_height: S,
    pub side: HostSide,
    pub offset: S,
    pub width: S,
    pub depth: S,
}

/// The opening of a perturbation: a transparent segment and the direction
/// pointing into the perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mouth<S = f64> {
    pub a: Vec2<S>,
    pub b: Vec2<S>,
    pub into: Vec2<S>,
}

impl<S: Scalar> NotchSpec<S> {
    fn validate(&self) -> Result<(), FractalError> {
        let zero = S::zero();
        let (side_len, across) = match self.side {
            HostSide::Bottom | HostSide::Top => (&self.host_width, &self.host_height),
            HostSide::Left | HostSide::Right => (&self.host_height, &self.host_width),
        };
        let fail = |m: &str| Err(FractalError::InvalidSpec(m.to_string()));
        if self.host_width <= zero || self.host_height <= zero {
            return fail("host dimensions must be positive");
        }
        if self.width <= zero || self.depth <= zero {
            return fail("notch width and depth must be positive");
        }
        if self.offset <= zero || self.offset.clone() + self.width.clone() >= *side_len {
            return fail("notch must lie strictly inside the side");
        }
        if self.depth >= *across {
            return fail("notch depth must be less than the opposing extent");
        }
        Ok(())
    }

    pub fn mouth(&self) -> Result<Mouth<S>, FractalError> {
        self.validate()?;
        let (w, h) = (self.host_width.clone(), self.host_height.clone());
        let (o, e) = (self.offset.clone(), self.offset.clone() + self.width.clone());
        let z = S::zero();
        let one = S::one();
        let v = |x: &S, y: &S| Vec2::new(x.clone(), y.clone());
        Ok(match self.side {
            HostSide::Bottom => Mouth {
                a: v(&o, &z),
                b: v(&e, &z),
                into: v(&z, &-one),
            },
            HostSide::Right => Mouth {
                a: v(&w, &o),
                b: v(&w, &e),
                into: v(&one, &z),
            },
            HostSide::Top => Mouth {
                a: v(&o, &h),
                b: v(&e, &h),
                into: v(&z, &one),
            },
            HostSide::Left => Mouth {
                a: v(&z, &o),
                b: v(&z, &e),
                into: v(&-one, &z),
            },
        })
    }
}

/// Host rectangle with the pocket attached; 8 vertices, counterclockwise.
pub fn build_notched_rect<S: Scalar>(spec: &NotchSpec<S>) -> Result<Polygon<S>, FractalError> {
    spec.validate()?;
    let (w, h, d) = (spec.host_width.clone(), spec.host_height.clone(), spec.depth.clone());
    let (o, e) = (spec.offset.clone(), spec.offset.clone() + spec.width.clone());
    let z = S::zero();
    let v = |x: &S, y: &S| Vec2::new(x.clone(), y.clone());
    let pts = match spec.side {
        HostSide::Bottom => vec![
            v(&z, &z),
            v(&o, &z),
            v(&o, &-d.clone()),
            v(&e, &-d.clone()),
            v(&e, &z),
            v(&w, &z),
            v(&w, &h),
            v(&z, &h),
        ],
        HostSide::Right => {
            let wd = w.clone() + d;
            vec![
                v(&z, &z),
                v(&w, &z),
                v(&w, &o),
                v(&wd, &o),
                v(&wd, &e),
                v(&w, &e),
                v(&w, &h),
                v(&z, &h),
            ]
        }
        HostSide::Top => {
            let hd = h.clone() + d;
            vec![
                v(&z, &z),
                v(&w, &z),
                v(&w, &h),
                v(&e, &h),
                v(&e, &hd),
                v(&o, &hd),
                v(&o, &h),
                v(&z, &h),
            ]
        }
        HostSide::Left => vec![
            v(&z, &z),
            v(&w, &z),
            v(&w, &h),
            v(&z, &h),
            v(&z, &e),
            v(&-d.clone(), &e),
            v(&-d, &o),
            v(&z, &o),
        ],
    };
    Ok(validate_polygon(pts)?)
}

/// Level-`n` T-fractal prefractal over a square of side `base_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct TFractalSpec<S = f64> {
    pub level: usize,
    pub base_width: S,
    pub stem_ratio: S,
    pub crossbar_ratio: S,
}

impl<S: Scalar> TFractalSpec<S> {
    /// Unit base and both ratios 1/2.
    pub fn new(level: usize) -> Self {
        let half = S::one() / S::from_i64(2);
        Self {
            level,
            base_width: S::one(),
            stem_ratio: half.clone(),
            crossbar_ratio: half,
        }
    }
}

fn t_piece<S: Scalar>(spec: &TFractalSpec<S>, cx: S, len: S, y: S, level: usize, out: &mut Vec<Vec2<S>>) {
    let two = S::from_i64(2);
    let stem = spec.stem_ratio.clone() * len.clone();
    let half_stem = stem.clone() / two.clone();
    let half = len.clone() / two.clone();
    let y_bar = y.clone() + stem.clone();
    let y_top = y_bar.clone() + spec.crossbar_ratio.clone() * stem;
    out.push(Vec2::new(cx.clone() + half_stem.clone(), y.clone()));
    out.push(Vec2::new(cx.clone() + half_stem.clone(), y_bar.clone()));
    out.push(Vec2::new(cx.clone() + half.clone(), y_bar.clone()));
    out.push(Vec2::new(cx.clone() + half.clone(), y_top.clone()));
    if level > 1 {
        let shift = S::from_i64(5) * len.clone() / S::from_i64(16);
        t_piece(
            spec,
            cx.clone() + shift.clone(),
            half.clone(),
            y_top.clone(),
            level - 1,
            out,
        );
        t_piece(spec, cx.clone() - shift, half.clone(), y_top.clone(), level - 1, out);
    }
    out.push(Vec2::new(cx.clone() - half.clone(), y_top));
    out.push(Vec2::new(cx.clone() - half, y_bar.clone()));
    out.push(Vec2::new(cx.clone() - half_stem.clone(), y_bar));
    out.push(Vec2::new(cx - half_stem, y));
}

pub fn build_tfractal<S: Scalar>(spec: &TFractalSpec<S>) -> Result<Polygon<S>, FractalError> {
    build_tfractal_with_max(spec, MAX_TFRACTAL_LEVEL)
}

/// Children of a T-piece of width `ℓ` have width `ℓ/2` and sit at
/// `±5ℓ/16` from its centre, so the stem ratio must stay below `3/4`.
pub fn build_tfractal_with_max<S: Scalar>(
    spec: &TFractalSpec<S>,
    max_level: usize,
) -> Result<Polygon<S>, FractalError> {
    if spec.level > max_level {
        return Err(FractalError::LevelTooHigh {
            level: spec.level,
            max: max_level,
        });
    }
    let zero = S::zero();
    let one = S::one();
    if spec.base_width <= zero {
        return Err(FractalError::InvalidSpec("base width must be positive".into()));
    }
    let three_quarters = S::from_i64(3) / S::from_i64(4);
    if spec.stem_ratio <= zero || spec.stem_ratio >= three_quarters {
        return Err(FractalError::InvalidSpec("stem ratio must lie in (0, 3/4)".into()));
    }
    if spec.crossbar_ratio <= zero || spec.crossbar_ratio >= one {
        return Err(FractalError::InvalidSpec("crossbar ratio must lie in (0, 1)".into()));
    }
    let w = spec.base_width.clone();
    let mut pts = vec![
        Vec2::new(zero.clone(), zero.clone()),
        Vec2::new(w.clone(), zero.clone()),
        Vec2::new(w.clone(), w.clone()),
    ];
    if spec.level > 0 {
        let cx = w.clone() / S::from_i64(2);
        t_piece(spec, cx, w.clone(), w.clone(), spec.level, &mut pts);
    }
    pts.push(Vec2::new(zero, w));
    Ok(validate_polygon(pts)?)
}

/// The opening of the level-1 stem on top of the base square.
pub fn tfractal_mouth<S: Scalar>(spec: &TFractalSpec<S>) -> Mouth<S> {
    let two = S::from_i64(2);
    let w = spec.base_width.clone();
    let cx = w.clone() / two.clone();
    let hs = spec.stem_ratio.clone() * w.clone() / two;
    Mouth {
        a: Vec2::new(cx.clone() - hs.clone(), w.clone()),
        b: Vec2::new(cx + hs, w),
        into: Vec2::new(S::zero(), S::one()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    AntiParallelReturn,
    PassThroughEquivalent,
    Other,
}

/// A crossing of the mouth segment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MouthCrossing {
    pub point: Point,
    pub direction: Angle,
    /// Path length from the start of the orbit.
    pub time: f64,
    /// Wall impacts before this crossing.
    pub event_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationVerdict {
    pub kind: VerdictKind,
    pub entry: MouthCrossing,
    pub exit: MouthCrossing,
    /// Exit direction minus entry direction.
    pub direction_delta: Angle,
    /// Signed distance along the mouth from the entry point to the exit
    /// point.
    pub exit_shift: f64,
}

/// Parameter in `(0, limit)` at which the ray `p + s d` crosses the mouth,
/// with the crossing sense (`true` for inward).
fn mouth_crossing<S: Scalar>(mouth: &Mouth<S>, p: &Vec2<S>, d: &Vec2<S>, limit: &S) -> Option<(S, bool)> {
    let e = mouth.b.sub(&mouth.a);
    let den = d.cross(&e);
    if den.is_zero_value() {
        return None;
    }
    let w = mouth.a.sub(p);
    let s = w.cross(&e) / den.clone();
    let u = w.cross(d) / den;
    let zero = S::zero();
    let inside = if S::EXACT {
        u > zero && u < S::one()
    } else {
        let uf = u.to_f64();
        uf > 0.0 && uf < 1.0
    };
    if !inside || s <= zero || s >= *limit {
        return None;
    }
    let inward = d.dot(&mouth.into) > S::zero();
    Some((s, inward))
}

fn same_direction<S: Scalar>(a: &Vec2<S>, b: &Vec2<S>, tol: f64) -> bool {
    if S::EXACT {
        a == b
    } else {
        vector_angle(&a.to_f64(), &b.to_f64()) <= tol
    }
}

/// Follows the ordinary billiard orbit from `start` until it crosses the
/// mouth inward and then outward again, and compares the exit direction
/// with the entry direction (anti-parallel return) and with the specular
/// image of the entry direction in the mouth line (the unperturbed wall).
pub fn classify_perturbation_orbit<S: Scalar>(
    table: &Polygon<S>,
    mouth: &Mouth<S>,
    start: &Vec2<S>,
    direction: &Vec2<S>,
    max_events: usize,
    tol: f64,
) -> Result<PerturbationVerdict, FractalError> {
    let plain = |_: usize| false;
    let speed = direction.norm_f64();
    let mut pos = start.clone();
    let mut dir = direction.clone();
    let mut on = None;
    let mut length = 0.0;
    let mut entry: Option<(MouthCrossing, Vec2<S>, Vec2<S>)> = None;
    for k in 0..=max_events {
        let tr = transit(table, &pos, &dir, on, Parity::Plus, &plain)?;
        if let Some((s, inward)) = mouth_crossing(mouth, &pos, &dir, &tr.param) {
            let at = pos.add(&dir.scale(&s));
            let d = dir.to_f64();
            let crossing = MouthCrossing {
                point: at.to_f64(),
                direction: Angle::from_vector(d.x, d.y),
                time: length + s.to_f64() * speed,
                event_index: k,
            };
            match (&entry, inward) {
                (None, true) => entry = Some((crossing, at, dir.clone())),
                (Some((first, at_in, dir_in)), false) => {
                    let anti = same_direction(&dir, &dir_in.neg(), tol);
                    let mirror = mirror_in_line(dir_in, &mouth.b.sub(&mouth.a));
                    let kind = if anti {
                        VerdictKind::AntiParallelReturn
                    } else if same_direction(&dir, &mirror, tol) {
                        VerdictKind::PassThroughEquivalent
                    } else {
                        VerdictKind::Other
                    };
                    let e = mouth.b.sub(&mouth.a).to_f64();
                    let shift = at.sub(at_in).to_f64();
                    let exit_shift = (shift.x * e.x + shift.y * e.y) / e.norm();
                    return Ok(PerturbationVerdict {
                        kind,
                        direction_delta: Angle::new(crossing.direction.radians() - first.direction.radians()),
                        entry: first.clone(),
                        exit: crossing,
                        exit_shift,
                    });
                }
                _ => {}
            }
        }
        if k == max_events {
            break;
        }
        length += tr.event.tau;
        pos = tr.hit;
        dir = tr.outgoing;
        on = Some(tr.side);
    }
    Err(match entry {
        None => FractalError::NeverEnters,
        Some(_) => FractalError::NoExit(max_events),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotchScanRecord {
    pub index: usize,
    /// Exact basepoint abscissa on the bottom edge, as `p/q`.
    pub x0: String,
    pub verdict: Option<PerturbationVerdict>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotchScan {
    pub anti_parallel: usize,
    pub pass_through: usize,
    pub other: usize,
    pub failed: usize,
    pub records: Vec<NotchScanRecord>,
}

/// Exact classification from `n` evenly spaced basepoints
/// `x0 = (2k + 1) W / (2n)` on the host's bottom edge, all in the same
/// direction.
pub fn notch_scan(
    spec: &NotchSpec<Rational>,
    direction: &Vec2<Rational>,
    n: usize,
    max_events: usize,
    exec: Exec,
) -> Result<NotchScan, FractalError> {
    if n == 0 {
        return Err(FractalError::InvalidSpec("scan needs at least one basepoint".into()));
    }
    let table = build_notched_rect(spec)?;
    let mouth = spec.mouth()?;
    let records = map_indexed(exec, n, |k| {
        let x0 = ratio(2 * k as i64 + 1, 2 * n as i64) * spec.host_width.clone();
        let start = Vec2::new(x0.clone(), Rational::from_i64(0));
        let res = classify_perturbation_orbit(&table, &mouth, &start, direction, max_events, 0.0);
        NotchScanRecord {
            index: k,
            x0: format_rational(&x0),
            error: res.as_ref().err().map(ToString::to_string),
            verdict: res.ok(),
        }
    });
    let count = |kind| {
        records
            .iter()
            .filter(|r| r.verdict.as_ref().is_some_and(|v| v.kind == kind))
            .count()
    };
    Ok(NotchScan {
        anti_parallel: count(VerdictKind::AntiParallelReturn),
        pass_through: count(VerdictKind::PassThroughEquivalent),
        other: count(VerdictKind::Other),
        failed: records.iter().filter(|r| r.verdict.is_none()).count(),
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TFractalReport {
    pub level: usize,
    pub p: u64,
    pub x0: String,
    pub periodic: bool,
    pub anti_parallel_exit: bool,
    pub period_events: usize,
    pub period_length: f64,
    /// Completed excursions above the base square.
    pub excursions: usize,
}

/// Exact orbit from `(x0, 0)` in direction `(p, 1)` on the level-`n`
/// prefractal. Excursions are the stretches of the orbit above the top line
/// of the base square.
pub fn tfractal_theorem_check(
    level: usize,
    p: u64,
    x0: &Rational,
    max_events: usize,
) -> Result<TFractalReport, FractalError> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(FractalError::InvalidSpec(format!("p = {p} must be an odd integer > 1")));
    }
    if !x0.is_positive() || *x0 >= Rational::from_i64(1) {
        return Err(FractalError::InvalidSpec(format!("x0 = {x0} must lie in (0, 1)")));
    }
    if is_dyadic(x0) {
        return Err(FractalError::DyadicBasepoint(format_rational(x0)));
    }
    let spec = TFractalSpec::<Rational>::new(level);
    let table = build_tfractal(&spec)?;
    let top = Rational::from_i64(1);
    let start = Vec2::new(x0.clone(), Rational::from_i64(0));
    let start_dir = Vec2::new(Rational::from_integer(p.into()), Rational::from_i64(1));
    let plain = |_: usize| false;
    let mut pos = start.clone();
    let mut dir = start_dir.clone();
    let mut on = None;
    let mut length = 0.0;
    let mut open: Option<Vec2<Rational>> = None;
    let mut anti = true;
    let mut excursions = 0;
    for k in 0..max_events {
        let tr = transit(&table, &pos, &dir, on, Parity::Plus, &plain)?;
        let below = |y: &Rational| *y < top;
        let above = |y: &Rational| *y > top;
        if below(&pos.y) && above(&tr.hit.y) {
            open = Some(dir.clone());
        } else if above(&pos.y) && below(&tr.hit.y) {
            if let Some(entry) = open.take() {
                excursions += 1;
                anti &= dir == entry.neg();
            }
        }
        length += tr.event.tau;
        if tr.hit == start && tr.outgoing == start_dir {
            return Ok(TFractalReport {
                level,
                p,
                x0: format_rational(x0),
                periodic: true,
                anti_parallel_exit: anti,
                period_events: k + 1,
                period_length: length,
                excursions,
            });
        }
        pos = tr.hit;
        dir = tr.outgoing;
        on = Some(tr.side);
    }
    Ok(TFractalReport {
        level,
        p,
        x0: format_rational(x0),
        periodic: false,
        anti_parallel_exit: anti,
        period_events: 0,
        period_length: length,
        excursions,
    })
}
