//! Andreev tables: retro-reflection with a parity flip on a set of vertical
//! sides, and the equivalent picture of two mirror copies glued along them.
//!
//! The working representation keeps the ball in the base polygon and
//! carries a parity. [`GluedTable`] steps the two-copy picture directly and
//! is used to cross-check the parity form.

use serde::Serialize;
use thiserror::Error;

use crate::billiard::{
    run_orbit, signed_flow, transit, Carrier, CollisionEvent, Parity, Periodicity, SingularityKind, SingularityReport,
    Termination,
};
use crate::geometry::{
    cast_ray, mirror_in_line, validate_polygon, Angle, GeometryError, Point, Polygon, Tolerances, Vec2,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AndreevError {
    #[error("an Andreev table needs at least one Andreev side")]
    NoAndreevSides,
    #[error("side index {0} is out of range")]
    SideOutOfRange(usize),
    #[error("Andreev side {0} is not vertical")]
    NotVertical(usize),
    #[error("mirror axis crosses the interior of the table")]
    AxisCrossesInterior,
    #[error("a vertex lies inside Andreev side {0}")]
    VertexOnSide(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A polygon with a set of retro-reflecting vertical sides and the vertical
/// mirror axis `x = c` used by the two-copy picture.
#[derive(Clone, Debug, PartialEq)]
pub struct AndreevTable<S = f64> {
    base: Polygon<S>,
    retro: Vec<bool>,
    andreev_sides: Vec<usize>,
    mirror_axis: S,
}

fn is_vertical<S: Scalar>(a: &Vec2<S>, b: &Vec2<S>, length: f64) -> bool {
    (a.x.clone() - b.x.clone()).near_zero(1e-12 * length)
}

impl<S: Scalar> AndreevTable<S> {
    pub fn new(base: Polygon<S>, sides: &[usize], mirror_axis: S) -> Result<Self, AndreevError> {
        if sides.is_empty() {
            return Err(AndreevError::NoAndreevSides);
        }
        let n = base.side_count();
        let mut retro = vec![false; n];
        for &i in sides {
            if i >= n {
                return Err(AndreevError::SideOutOfRange(i));
            }
            let s = base.side(i);
            if !is_vertical(&s.a, &s.b, s.length) {
                return Err(AndreevError::NotVertical(i));
            }
            for v in base.vertices() {
                if *v == s.a || *v == s.b {
                    continue;
                }
                let on_line = is_vertical(v, &s.a, s.length);
                let (lo, hi) = if s.a.y <= s.b.y {
                    (&s.a.y, &s.b.y)
                } else {
                    (&s.b.y, &s.a.y)
                };
                if on_line && *lo <= v.y && v.y <= *hi {
                    return Err(AndreevError::VertexOnSide(i));
                }
            }
            retro[i] = true;
        }
        let left = base.vertices().iter().all(|v| v.x <= mirror_axis);
        let right = base.vertices().iter().all(|v| v.x >= mirror_axis);
        if !left && !right {
            return Err(AndreevError::AxisCrossesInterior);
        }
        let mut andreev_sides: Vec<usize> = sides.to_vec();
        andreev_sides.sort_unstable();
        andreev_sides.dedup();
        Ok(Self {
            base,
            retro,
            andreev_sides,
            mirror_axis,
        })
    }

    /// Uses the line through the first Andreev side as the mirror axis when
    /// it leaves the table on one side, otherwise the rightmost vertical
    /// support line.
    pub fn with_default_axis(base: Polygon<S>, sides: &[usize]) -> Result<Self, AndreevError> {
        let first = *sides.first().ok_or(AndreevError::NoAndreevSides)?;
        if first >= base.side_count() {
            return Err(AndreevError::SideOutOfRange(first));
        }
        let c = base.side(first).a.x.clone();
        let left = base.vertices().iter().all(|v| v.x <= c);
        let right = base.vertices().iter().all(|v| v.x >= c);
        let axis = if left || right {
            c
        } else {
            base.vertices()
                .iter()
                .map(|v| v.x.clone())
                .fold(c, |m, x| if x > m { x } else { m })
        };
        Self::new(base, sides, axis)
    }

    pub fn base(&self) -> &Polygon<S> {
        &self.base
    }

    pub fn andreev_sides(&self) -> &[usize] {
        &self.andreev_sides
    }

    pub fn is_andreev(&self, side: usize) -> bool {
        self.retro.get(side).copied().unwrap_or(false)
    }

    pub fn mirror_axis(&self) -> &S {
        &self.mirror_axis
    }

    pub fn to_f64(&self) -> AndreevTable<f64> {
        AndreevTable {
            base: self.base.to_f64(),
            retro: self.retro.clone(),
            andreev_sides: self.andreev_sides.clone(),
            mirror_axis: self.mirror_axis.to_f64(),
        }
    }

    pub(crate) fn retro_fn(&self) -> impl Fn(usize) -> bool + '_ {
        move |i| self.retro[i]
    }
}

/// Position, direction and parity.
#[derive(Clone, Debug, PartialEq)]
pub struct AndreevPhasePoint<S = f64> {
    pub position: Vec2<S>,
    pub direction: Vec2<S>,
    pub parity: Parity,
}

impl<S: Scalar> AndreevPhasePoint<S> {
    pub fn from_vectors(position: Vec2<S>, direction: Vec2<S>, parity: Parity) -> Self {
        Self {
            position,
            direction,
            parity,
        }
    }

    pub fn angle(&self) -> Angle {
        let d = self.direction.to_f64();
        Angle::from_vector(d.x, d.y)
    }

    fn carrier(&self, on_side: Option<usize>) -> Carrier<S> {
        Carrier {
            position: self.position.clone(),
            direction: self.direction.clone(),
            parity: self.parity,
            on_side,
        }
    }

    fn from_carrier(c: Carrier<S>) -> Self {
        Self::from_vectors(c.position, c.direction, c.parity)
    }
}

impl AndreevPhasePoint<f64> {
    pub fn new(position: Point, direction: Angle, parity: Parity) -> Self {
        Self::from_vectors(position, direction.unit(), parity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AndreevOrbit<S = f64> {
    pub initial: AndreevPhasePoint<S>,
    /// Events carry the parity after each impact.
    pub events: Vec<CollisionEvent>,
    pub termination: Termination,
}

/// One impact: specular off ordinary sides, retro-reflection with a parity
/// flip off Andreev sides.
pub fn andreev_step<S: Scalar>(
    table: &AndreevTable<S>,
    state: &AndreevPhasePoint<S>,
    exclude_side: Option<usize>,
) -> Result<(CollisionEvent, AndreevPhasePoint<S>), SingularityReport> {
    let tr = transit(
        &table.base,
        &state.position,
        &state.direction,
        exclude_side,
        state.parity,
        &table.retro_fn(),
    )?;
    Ok((
        tr.event,
        AndreevPhasePoint::from_vectors(tr.hit, tr.outgoing, tr.parity),
    ))
}

/// Flow by ray parameter `t` (arc length for unit directions); negative
/// times run the reversed dynamics, still flipping parity at Andreev sides.
pub fn andreev_flow<S: Scalar>(
    table: &AndreevTable<S>,
    state: &AndreevPhasePoint<S>,
    t: S,
) -> Result<AndreevPhasePoint<S>, SingularityReport> {
    let c = signed_flow(&table.base, state.carrier(None), t, &table.retro_fn())?;
    Ok(AndreevPhasePoint::from_carrier(c))
}

/// Orbit with recurrence on position, direction and parity.
pub fn andreev_orbit<S: Scalar>(
    table: &AndreevTable<S>,
    initial: &AndreevPhasePoint<S>,
    max_events: usize,
    periodicity: Periodicity,
) -> AndreevOrbit<S> {
    let run = run_orbit(
        &table.base,
        initial.carrier(None),
        max_events,
        periodicity,
        &table.retro_fn(),
    );
    AndreevOrbit {
        initial: initial.clone(),
        events: run.events,
        termination: run.termination,
    }
}

/// Which copy of the glued table a point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoCopyPoint<S = f64> {
    pub sheet: Sheet,
    pub position: Vec2<S>,
    pub direction: Vec2<S>,
}

impl<S: Scalar> TwoCopyPoint<S> {
    pub fn angle(&self) -> Angle {
        let d = self.direction.to_f64();
        Angle::from_vector(d.x, d.y)
    }
}

/// Reflection of a point across `x = c`.
pub fn mirror_point<S: Scalar>(p: &Vec2<S>, c: &S) -> Vec2<S> {
    Vec2::new(c.clone() + c.clone() - p.x.clone(), p.y.clone())
}

/// Reflection of a direction across a vertical line: `θ ↦ π − θ`.
pub fn mirror_direction<S: Scalar>(d: &Vec2<S>) -> Vec2<S> {
    Vec2::new(-d.x.clone(), d.y.clone())
}

pub fn to_two_copy<S: Scalar>(state: &AndreevPhasePoint<S>, table: &AndreevTable<S>) -> TwoCopyPoint<S> {
    match state.parity {
        Parity::Plus => TwoCopyPoint {
            sheet: Sheet::Plus,
            position: state.position.clone(),
            direction: state.direction.clone(),
        },
        Parity::Minus => TwoCopyPoint {
            sheet: Sheet::Minus,
            position: mirror_point(&state.position, &table.mirror_axis),
            direction: mirror_direction(&state.direction),
        },
    }
}

pub fn from_two_copy<S: Scalar>(point: &TwoCopyPoint<S>, table: &AndreevTable<S>) -> AndreevPhasePoint<S> {
    match point.sheet {
        Sheet::Plus => AndreevPhasePoint::from_vectors(point.position.clone(), point.direction.clone(), Parity::Plus),
        Sheet::Minus => AndreevPhasePoint::from_vectors(
            mirror_point(&point.position, &table.mirror_axis),
            mirror_direction(&point.direction),
            Parity::Minus,
        ),
    }
}

/// Two mirror copies of the base polygon with the Andreev sides acting as
/// gates between them.
#[derive(Clone, Debug)]
pub struct GluedTable<S = f64> {
    plus: Polygon<S>,
    minus: Polygon<S>,
    gate_plus: Vec<Option<usize>>,
    gate_minus: Vec<Option<usize>>,
    axis: S,
}

/// A glued-table point plus the side it sits on, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct GluedState<S = f64> {
    pub point: TwoCopyPoint<S>,
    pub on_side: Option<usize>,
}

impl<S: Scalar> GluedTable<S> {
    pub fn new(table: &AndreevTable<S>) -> Result<Self, AndreevError> {
        let axis = table.mirror_axis.clone();
        let plus = table.base.clone();
        let mirrored: Vec<Vec2<S>> = plus.vertices().iter().map(|v| mirror_point(v, &axis)).collect();
        let minus = validate_polygon(mirrored)?;
        let mut gate_plus = vec![None; plus.side_count()];
        let mut gate_minus = vec![None; minus.side_count()];
        for &i in &table.andreev_sides {
            let s = plus.side(i);
            let (ma, mb) = (mirror_point(&s.a, &axis), mirror_point(&s.b, &axis));
            let j = minus
                .sides()
                .iter()
                .position(|t| (t.a == ma && t.b == mb) || (t.a == mb && t.b == ma))
                .expect("mirrored polygon has the mirrored side");
            gate_plus[i] = Some(j);
            gate_minus[j] = Some(i);
        }
        Ok(Self {
            plus,
            minus,
            gate_plus,
            gate_minus,
            axis,
        })
    }

    pub fn sheet(&self, sheet: Sheet) -> &Polygon<S> {
        match sheet {
            Sheet::Plus => &self.plus,
            Sheet::Minus => &self.minus,
        }
    }

    /// Moves to the next wall or gate. Walls reflect specularly within the
    /// sheet; a gate sends `(y, v)` to `(ρ(y), r(v) + π)` on the other sheet,
    /// where `r` is the mirror in the gate's line.
    pub fn step(&self, state: &GluedState<S>) -> Result<GluedState<S>, SingularityReport> {
        let (poly, gates, other) = match state.point.sheet {
            Sheet::Plus => (&self.plus, &self.gate_plus, Sheet::Minus),
            Sheet::Minus => (&self.minus, &self.gate_minus, Sheet::Plus),
        };
        let v = &state.point.direction;
        let cand =
            cast_ray(poly, &state.point.position, v, state.on_side, &Tolerances::default()).map_err(|e| match e {
                GeometryError::CornerHit { side, point, tau } => SingularityReport {
                    kind: SingularityKind::Corner,
                    location: point,
                    time: tau,
                    side: Some(side),
                },
                _ => SingularityReport {
                    kind: SingularityKind::Escape,
                    location: state.point.position.to_f64(),
                    time: 0.0,
                    side: None,
                },
            })?;
        let edge = poly.side(cand.side).edge();
        let reflected = mirror_in_line(v, &edge);
        Ok(match gates[cand.side] {
            Some(j) => GluedState {
                point: TwoCopyPoint {
                    sheet: other,
                    position: mirror_point(&cand.hit, &self.axis),
                    direction: reflected.neg(),
                },
                on_side: Some(j),
            },
            None => GluedState {
                point: TwoCopyPoint {
                    sheet: state.point.sheet,
                    position: cand.hit,
                    direction: reflected,
                },
                on_side: Some(cand.side),
            },
        })
    }

    /// Side index in the sheet of `point` that corresponds to base side `i`.
    pub fn sheet_side(&self, sheet: Sheet, base_side: usize) -> usize {
        match sheet {
            Sheet::Plus => base_side,
            Sheet::Minus => {
                let s = self.plus.side(base_side);
                let (ma, mb) = (mirror_point(&s.a, &self.axis), mirror_point(&s.b, &self.axis));
                self.minus
                    .sides()
                    .iter()
                    .position(|t| (t.a == ma && t.b == mb) || (t.a == mb && t.b == ma))
                    .expect("mirrored side exists")
            }
        }
    }
}
