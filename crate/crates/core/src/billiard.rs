//! Classical polygonal billiard: collision map, flow and orbits.
//!
//! The stepping kernel here also drives the Andreev dynamics; it takes a
//! predicate telling which sides retro-reflect and carries a parity label.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cast_ray, mirror_in_line, Angle, GeometryError, Point, Polygon, Tolerances, Vec2};
use crate::scalar::Scalar;

/// Electron/hole label carried by the ball; serialised as `+1` / `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Parity::Plus => 1,
            Parity::Minus => -1,
        }
    }
}

impl From<Parity> for i8 {
    fn from(p: Parity) -> i8 {
        p.sign()
    }
}

impl TryFrom<i8> for Parity {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Parity::Plus),
            -1 => Ok(Parity::Minus),
            _ => Err(format!("parity must be +1 or -1, got {v}")),
        }
    }
}

/// Position and direction of the ball. On the boundary the direction points
/// inward.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<S = f64> {
    pub position: Vec2<S>,
    /// Velocity; a unit vector in float mode, an integer or rational slope
    /// vector in exact mode.
    pub direction: Vec2<S>,
}

impl<S: Scalar> PhasePoint<S> {
    pub fn from_vectors(position: Vec2<S>, direction: Vec2<S>) -> Self {
        Self { position, direction }
    }

    pub fn reversed(&self) -> Self {
        Self::from_vectors(self.position.clone(), self.direction.neg())
    }

    pub fn angle(&self) -> Angle {
        let d = self.direction.to_f64();
        Angle::from_vector(d.x, d.y)
    }
}

impl PhasePoint<f64> {
    pub fn new(position: Point, direction: Angle) -> Self {
        Self::from_vectors(position, direction.unit())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionKind {
    Specular,
    Andreev,
}

/// One boundary impact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub side: usize,
    pub hit: Point,
    pub r: f64,
    /// Incidence angle from the inward normal, positive toward the side's end.
    pub phi: f64,
    /// Path length since the previous event (or the start).
    pub tau: f64,
    pub incoming: Angle,
    pub outgoing: Angle,
    pub kind: ReflectionKind,
    pub parity_after: Parity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityKind {
    Corner,
    Grazing,
    /// The ray left the table: the state was not inside it.
    Escape,
}

/// Where and when the flow stopped being defined.
#[derive(Clone, Debug, PartialEq, Serialize, Error)]
#[error("{kind:?} singularity at ({}, {}) after path length {time}", .location.x, .location.y)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    pub location: Point,
    pub time: f64,
    pub side: Option<usize>,
}

impl SingularityReport {
    fn delayed(mut self, by: f64) -> Self {
        self.time += by;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxEvents,
    Singularity(SingularityReport),
    Periodic { period_events: usize, period_length: f64 },
}

/// Recurrence detection mode for orbits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Periodicity {
    Off,
    /// Position and direction within the tolerance, confirmed by a second
    /// recurrence after twice as many events.
    Float(f64),
    Exact,
}

impl Periodicity {
    /// Exact comparison for exact scalars, 1e-9 tolerance otherwise.
    pub fn default_for<S: Scalar>() -> Self {
        if S::EXACT {
            Periodicity::Exact
        } else {
            Periodicity::Float(1e-9)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<S = f64> {
    pub initial: PhasePoint<S>,
    pub events: Vec<CollisionEvent>,
    pub termination: Termination,
}

/// Result of moving from a point to the next boundary impact.
#[derive(Clone, Debug)]
pub(crate) struct Transit<S> {
    pub side: usize,
    pub param: S,
    pub hit: Vec2<S>,
    pub outgoing: Vec2<S>,
    pub parity: Parity,
    pub event: CollisionEvent,
}

pub(crate) fn transit<S: Scalar>(
    table: &Polygon<S>,
    position: &Vec2<S>,
    direction: &Vec2<S>,
    exclude: Option<usize>,
    parity: Parity,
    retro: &dyn Fn(usize) -> bool,
) -> Result<Transit<S>, SingularityReport> {
    let tol = Tolerances::default();
    let cand = cast_ray(table, position, direction, exclude, &tol).map_err(|e| match e {
        GeometryError::CornerHit { side, point, tau } => SingularityReport {
            kind: SingularityKind::Corner,
            location: point,
            time: tau,
            side: Some(side),
        },
        _ => SingularityReport {
            kind: SingularityKind::Escape,
            location: position.to_f64(),
            time: 0.0,
            side: None,
        },
    })?;
    let side = table.side(cand.side);
    let v = direction.to_f64();
    let speed = v.norm();
    let unit_v = Point::new(v.x / speed, v.y / speed);
    let t = side.tangent();
    let sin_impact = (unit_v.x * t.y - unit_v.y * t.x).abs();
    if !S::EXACT && sin_impact < tol.grazing {
        return Err(SingularityReport {
            kind: SingularityKind::Grazing,
            location: cand.hit.to_f64(),
            time: cand.tau,
            side: Some(cand.side),
        });
    }
    let (kind, outgoing, parity) = if retro(cand.side) {
        (ReflectionKind::Andreev, direction.neg(), parity.flip())
    } else {
        (
            ReflectionKind::Specular,
            mirror_in_line(direction, &side.edge()),
            parity,
        )
    };
    let out = outgoing.to_f64();
    let event = CollisionEvent {
        side: cand.side,
        hit: cand.hit.to_f64(),
        r: cand.r,
        phi: side.incidence(&unit_v),
        tau: cand.tau,
        incoming: Angle::from_vector(v.x, v.y),
        outgoing: Angle::from_vector(out.x, out.y),
        kind,
        parity_after: parity,
    };
    Ok(Transit {
        side: cand.side,
        param: cand.param,
        hit: cand.hit,
        outgoing,
        parity,
        event,
    })
}

/// Moving state used by flows and orbit runners.
#[derive(Clone, Debug)]
pub(crate) struct Carrier<S> {
    pub position: Vec2<S>,
    pub direction: Vec2<S>,
    pub parity: Parity,
    /// Side the carrier sits on, if it just reflected there.
    pub on_side: Option<usize>,
}

/// Transports the carrier by ray parameter `t >= 0`.
pub(crate) fn advance<S: Scalar>(
    table: &Polygon<S>,
    mut c: Carrier<S>,
    t: S,
    retro: &dyn Fn(usize) -> bool,
) -> Result<Carrier<S>, SingularityReport> {
    let mut remaining = t;
    let mut elapsed = 0.0;
    while remaining > S::zero() {
        let tr =
            transit(table, &c.position, &c.direction, c.on_side, c.parity, retro).map_err(|s| s.delayed(elapsed))?;
        if tr.param > remaining {
            c.position = c.position.add(&c.direction.scale(&remaining));
            c.on_side = None;
            return Ok(c);
        }
        remaining = remaining - tr.param.clone();
        elapsed += tr.event.tau;
        c = Carrier {
            position: tr.hit,
            direction: tr.outgoing,
            parity: tr.parity,
            on_side: Some(tr.side),
        };
    }
    Ok(c)
}

/// Flow for any real time: negative times run the reversed dynamics.
pub(crate) fn signed_flow<S: Scalar>(
    table: &Polygon<S>,
    c: Carrier<S>,
    t: S,
    retro: &dyn Fn(usize) -> bool,
) -> Result<Carrier<S>, SingularityReport> {
    if t < S::zero() {
        let back = Carrier {
            direction: c.direction.neg(),
            ..c
        };
        let mut out = advance(table, back, -t, retro)?;
        out.direction = out.direction.neg();
        Ok(out)
    } else {
        advance(table, c, t, retro)
    }
}

/// Parameter `s` at which the reference point lies on the segment
/// `p + s d`, `0 <= s < len`, with matching direction and parity.
fn recurrence_offset<S: Scalar>(c: &Carrier<S>, len: &S, start: &Carrier<S>, mode: Periodicity) -> Option<S> {
    if c.parity != start.parity {
        return None;
    }
    let s = start.position.sub(&c.position).dot(&c.direction) / c.direction.norm_sq();
    match mode {
        Periodicity::Off => None,
        Periodicity::Exact => {
            let hit = c.direction == start.direction
                && s >= S::zero()
                && s < *len
                && c.position.add(&c.direction.scale(&s)) == start.position;
            hit.then_some(s)
        }
        Periodicity::Float(tol) => {
            let d = c.direction.to_f64();
            let d0 = start.direction.to_f64();
            if crate::geometry::vector_angle(&d, &d0) > tol {
                return None;
            }
            let sf = s.to_f64();
            if sf < -tol || sf >= len.to_f64() {
                return None;
            }
            let q = c.position.add(&c.direction.scale(&s)).to_f64();
            (q.distance(&start.position.to_f64()) <= tol).then_some(s)
        }
    }
}

pub(crate) struct Run {
    pub events: Vec<CollisionEvent>,
    pub termination: Termination,
}

/// Accumulates events until `max_events`, a singularity, or the first
/// (confirmed) recurrence of the starting phase point.
pub(crate) fn run_orbit<S: Scalar>(
    table: &Polygon<S>,
    start: Carrier<S>,
    max_events: usize,
    mode: Periodicity,
    retro: &dyn Fn(usize) -> bool,
) -> Run {
    let mut events: Vec<CollisionEvent> = Vec::new();
    let mut c = start.clone();
    let mut length = 0.0;
    let mut candidate: Option<(usize, f64)> = None;
    loop {
        let next = transit(table, &c.position, &c.direction, c.on_side, c.parity, retro);
        let tr = match next {
            Ok(tr) => tr,
            Err(_) if events.len() >= max_events => {
                return Run {
                    events,
                    termination: Termination::MaxEvents,
                }
            }
            Err(s) => {
                return Run {
                    events,
                    termination: Termination::Singularity(s.delayed(length)),
                }
            }
        };
        let k = events.len();
        if k >= 1 && mode != Periodicity::Off {
            if let Some(s) = recurrence_offset(&c, &tr.param, &start, mode) {
                let total = length + s.to_f64() * c.direction.norm_f64();
                let confirmed = match (mode, candidate) {
                    (Periodicity::Exact, _) => Some((k, total)),
                    (Periodicity::Float(tol), Some((k1, l1))) if k == 2 * k1 => {
                        ((total - 2.0 * l1).abs() <= tol * total.max(1.0)).then_some((k1, l1))
                    }
                    _ => None,
                };
                if let Some((period_events, period_length)) = confirmed {
                    events.truncate(period_events);
                    return Run {
                        events,
                        termination: Termination::Periodic {
                            period_events,
                            period_length,
                        },
                    };
                }
                if candidate.is_none_or(|(k1, _)| k > 2 * k1) {
                    candidate = Some((k, total));
                }
            }
        }
        if k >= max_events {
            return Run {
                events,
                termination: Termination::MaxEvents,
            };
        }
        length += tr.event.tau;
        events.push(tr.event);
        c = Carrier {
            position: tr.hit,
            direction: tr.outgoing,
            parity: tr.parity,
            on_side: Some(tr.side),
        };
    }
}

fn specular(_: usize) -> bool {
    false
}

/// One application of the collision map.
pub fn collision_step<S: Scalar>(
    table: &Polygon<S>,
    state: &PhasePoint<S>,
    exclude_side: Option<usize>,
) -> Result<(CollisionEvent, PhasePoint<S>), SingularityReport> {
    let tr = transit(
        table,
        &state.position,
        &state.direction,
        exclude_side,
        Parity::Plus,
        &specular,
    )?;
    Ok((tr.event, PhasePoint::from_vectors(tr.hit, tr.outgoing)))
}

/// Billiard flow by ray parameter `t` (arc length for unit directions).
/// Negative `t` runs the reversed flow.
pub fn flow<S: Scalar>(table: &Polygon<S>, state: &PhasePoint<S>, t: S) -> Result<PhasePoint<S>, SingularityReport> {
    let c = Carrier {
        position: state.position.clone(),
        direction: state.direction.clone(),
        parity: Parity::Plus,
        on_side: None,
    };
    let out = signed_flow(table, c, t, &specular)?;
    Ok(PhasePoint::from_vectors(out.position, out.direction))
}

pub fn orbit<S: Scalar>(
    table: &Polygon<S>,
    initial: &PhasePoint<S>,
    max_events: usize,
    periodicity: Periodicity,
) -> Orbit<S> {
    let start = Carrier {
        position: initial.position.clone(),
        direction: initial.direction.clone(),
        parity: Parity::Plus,
        on_side: None,
    };
    let run = run_orbit(table, start, max_events, periodicity, &specular);
    Orbit {
        initial: initial.clone(),
        events: run.events,
        termination: run.termination,
    }
}
