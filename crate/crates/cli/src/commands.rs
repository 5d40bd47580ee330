use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use andreev_core::andreev::andreev_orbit;
use andreev_core::billiard::orbit;
use andreev_core::fractal::{build_notched_rect, build_tfractal, tfractal_theorem_check, NotchSpec, TFractalSpec};
use andreev_core::sampling::{derive_seed, stream, uniform};
use andreev_core::scalar::{is_dyadic, parse_rational};
use andreev_core::verify::{
    check_measure_preservation, closed_flow_suite, jacobian_suite, random_regions, sample_interior,
    total_phase_measure, volume_sign_suite, SegmentKind, VerifyError, MIN_MEASURE_SAMPLES,
};
use andreev_core::{
    AndreevPhasePoint, AndreevTable, CollisionEvent, ExactTable, Exec, Parity, Periodicity, PhasePoint, Point, Polygon,
    Rational, Scalar, Termination, Vec2,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{MakeArgs, Shape, SimulateArgs, Suite, VerifyArgs};
use crate::config::{exact_direction, float_direction, parse_point, DirectionSpec, RunConfig};
use crate::error::{CliError, Status};
use crate::render::{svg, write_events_csv};
use crate::tablefile::{LoadedTable, TableFile};

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn length(text: &str, what: &str) -> Result<Rational, CliError> {
    let v = parse_rational(text).ok_or_else(|| CliError::Config(format!("{what} {text:?} is not a number")))?;
    if v <= Rational::from_i64(0) {
        return Err(CliError::Config(format!("{what} must be positive, got {text}")));
    }
    Ok(v)
}

fn rectangle(w: Rational, h: Rational) -> Result<ExactTable, CliError> {
    let z = Rational::from_i64(0);
    Polygon::new(vec![
        Vec2::new(z.clone(), z.clone()),
        Vec2::new(w.clone(), z.clone()),
        Vec2::new(w, h.clone()),
        Vec2::new(z, h),
    ])
    .map_err(config_err)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn table_make(args: &MakeArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let one = Rational::from_i64(1);
    let polygon = match &args.shape {
        Shape::Square => rectangle(one.clone(), one)?,
        Shape::Rect { width, height } => rectangle(length(width, "width")?, length(height, "height")?)?,
        Shape::Tfractal { level } => build_tfractal(&TFractalSpec::<Rational>::new(*level)).map_err(config_err)?,
        Shape::Notch {
            width,
            height,
            side,
            offset,
            notch_width,
            depth,
        } => {
            let spec = NotchSpec {
                host_width: length(width, "width")?,
                host_height: length(height, "height")?,
                side: *side,
                offset: parse_rational(offset)
                    .ok_or_else(|| CliError::Config(format!("offset {offset:?} is not a number")))?,
                width: length(notch_width, "notch width")?,
                depth: length(depth, "depth")?,
            };
            build_notched_rect(&spec).map_err(config_err)?
        }
    };
    let file = TableFile::from_polygon(&polygon, &args.andreev_sides, args.mode);
    file.build()?;
    let text = file.to_json();
    match &args.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(Status::Pass)
}

/// Config file (if any) with command-line overrides applied.
pub fn resolve_config(args: &SimulateArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.position {
        cfg.initial.position = Some(parse_point(p)?);
    }
    if let Some(theta) = args.direction {
        cfg.initial.direction = Some(DirectionSpec::Radians(theta));
    }
    if let Some(s) = &args.slope {
        cfg.initial.direction = Some(DirectionSpec::Slope(s.clone()));
    }
    if let Some(p) = args.parity {
        cfg.initial.parity = p;
    }
    if let Some(m) = args.max_events {
        cfg.max_events = m;
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.csv.is_some() {
        cfg.outputs.csv.clone_from(&args.csv);
    }
    if args.svg.is_some() {
        cfg.outputs.svg.clone_from(&args.svg);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Trace {
    start: Point,
    events: Vec<CollisionEvent>,
    termination: Termination,
}

fn trace<S: Scalar>(
    polygon: &Polygon<S>,
    andreev: Option<&AndreevTable<S>>,
    position: Vec2<S>,
    direction: Vec2<S>,
    parity: Parity,
    max_events: usize,
    periodicity: Periodicity,
) -> Trace {
    let start = position.to_f64();
    match andreev {
        Some(t) => {
            let o = andreev_orbit(
                t,
                &AndreevPhasePoint::from_vectors(position, direction, parity),
                max_events,
                periodicity,
            );
            Trace {
                start,
                events: o.events,
                termination: o.termination,
            }
        }
        None => {
            let mut o = orbit(
                polygon,
                &PhasePoint::from_vectors(position, direction),
                max_events,
                periodicity,
            );
            for e in &mut o.events {
                e.parity_after = parity;
            }
            Trace {
                start,
                events: o.events,
                termination: o.termination,
            }
        }
    }
}

fn start_position(cfg: &RunConfig, polygon: &andreev_core::PolygonTable) -> Result<Option<Vec2<Rational>>, CliError> {
    let Some([x, y]) = &cfg.initial.position else {
        let mut rng = stream(cfg.seed, 0);
        let p = sample_interior(polygon, &mut rng, 1e-3);
        return Ok(Vec2::<Rational>::from_f64(&p));
    };
    match (x.to_rational(), y.to_rational()) {
        (Some(x), Some(y)) => Ok(Some(Vec2::new(x, y))),
        _ => Err(CliError::Config(format!("cannot parse start position ({x}, {y})"))),
    }
}

fn random_direction(seed: u64) -> Point {
    let mut rng = stream(seed, 1);
    let theta: f64 = uniform(&mut rng, 0.0, TAU);
    Point::new(theta.cos(), theta.sin())
}

fn open_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let table = TableFile::load(&args.table)?.build()?;
    let cfg = resolve_config(args)?;
    let parity = cfg.parity()?;
    let outline = table.polygon_f64();
    let position =
        start_position(&cfg, &outline)?.ok_or_else(|| CliError::Config("start position is not finite".into()))?;
    if !outline.contains(&position.to_f64(), cfg.tolerance) {
        return Err(CliError::Config(format!(
            "start position ({}, {}) lies outside the table",
            position.x, position.y
        )));
    }
    let run = match &table {
        LoadedTable::Float { polygon, andreev } => {
            let dir = match &cfg.initial.direction {
                Some(d) => float_direction(d)?,
                None => random_direction(cfg.seed),
            };
            let pos = position.to_f64();
            trace(
                polygon,
                andreev.as_ref(),
                pos,
                dir,
                parity,
                cfg.max_events,
                Periodicity::Float(cfg.tolerance),
            )
        }
        LoadedTable::Exact { polygon, andreev } => {
            let dir = match &cfg.initial.direction {
                Some(d) => exact_direction(d)?,
                None => return Err(CliError::Config("rational tables need an explicit slope".into())),
            };
            trace(
                polygon,
                andreev.as_ref(),
                position,
                dir,
                parity,
                cfg.max_events,
                Periodicity::Exact,
            )
        }
    };

    let singular = match &run.termination {
        Termination::Singularity(s) => Some(s),
        _ => None,
    };
    match &cfg.outputs.csv {
        Some(path) => {
            let mut f = open_output(path)?;
            write_events_csv(&mut f, &run.events, singular, parity)?;
            f.flush().map_err(|e| CliError::io(path, e))?;
            let summary = json!({
                "events": run.events.len(),
                "termination": run.termination,
            });
            writeln!(out, "{summary}")?;
        }
        None => write_events_csv(&mut *out, &run.events, singular, parity)?,
    }
    if let Some(path) = &cfg.outputs.svg {
        let mut points = vec![run.start];
        points.extend(run.events.iter().map(|e| e.hit));
        match &run.termination {
            Termination::Singularity(s) => points.push(s.location),
            Termination::Periodic { .. } => points.push(run.start),
            Termination::MaxEvents => {}
        }
        write_file(path, svg(&outline, &table.andreev_sides(), &points).as_bytes())?;
    }
    Ok(if singular.is_some() {
        Status::Singular
    } else {
        Status::Pass
    })
}

/// One report line: the check's own fields plus `check`, `index`, `pass`
/// and `seed`. Failed computations carry an `error` field instead.
fn report_line<T: Serialize>(check: &str, index: usize, seed: u64, pass: bool, body: Result<&T, String>) -> Value {
    let mut map = match body {
        Ok(b) => match serde_json::to_value(b) {
            Ok(Value::Object(m)) => m,
            Ok(v) => Map::from_iter([("value".to_owned(), v)]),
            Err(e) => Map::from_iter([("error".to_owned(), Value::String(e.to_string()))]),
        },
        Err(e) => Map::from_iter([("error".to_owned(), Value::String(e))]),
    };
    map.insert("check".into(), check.into());
    map.insert("index".into(), index.into());
    map.insert("pass".into(), pass.into());
    map.insert("seed".into(), seed.into());
    Value::Object(map)
}

fn andreev_table(args: &VerifyArgs) -> Result<AndreevTable, CliError> {
    let path = args
        .table
        .as_ref()
        .ok_or_else(|| CliError::Config("this suite needs --table".into()))?;
    TableFile::load(path)?
        .build()?
        .andreev_f64()
        .ok_or_else(|| CliError::Config("the table has no Andreev sides".into()))
}

fn positive_tol(args: &VerifyArgs, default: f64) -> Result<f64, CliError> {
    let tol = args.tol.unwrap_or(default);
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Config(format!("tolerance must be positive, got {tol}")))
    }
}

fn measure_error(e: VerifyError) -> Result<String, CliError> {
    match e {
        VerifyError::TooFewSamples { .. } | VerifyError::InvalidRegion(_) => Err(config_err(e)),
        other => Ok(other.to_string()),
    }
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let exec = if args.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let seed = args.seed;
    let lines: Vec<Value> = match args.suite {
        Suite::Jacobian => {
            let t = andreev_table(args)?;
            jacobian_suite(&t, args.samples.unwrap_or(100), seed, exec)
                .iter()
                .enumerate()
                .map(|(i, r)| match r {
                    Ok(r) => report_line("jacobian", i, seed, r.pass, Ok(r)),
                    Err(e) => report_line::<()>("jacobian", i, seed, false, Err(e.to_string())),
                })
                .collect()
        }
        Suite::Measure => {
            let t = andreev_table(args)?;
            let n = args.samples.unwrap_or(100_000);
            if n < MIN_MEASURE_SAMPLES {
                return Err(CliError::Config(format!(
                    "measure needs at least {MIN_MEASURE_SAMPLES} samples, got {n}"
                )));
            }
            let tol = positive_tol(args, 1e-2)?;
            let mut lines = Vec::new();
            for (i, region) in random_regions(&t, args.regions, seed).iter().enumerate() {
                let s = derive_seed(seed, i as u64);
                lines.push(match check_measure_preservation(&t, region, args.steps, n, s, exec) {
                    Ok(r) => report_line("measure", i, s, r.relative_error < tol, Ok(&r)),
                    Err(e) => report_line::<()>("measure", i, s, false, Err(measure_error(e)?)),
                });
            }
            lines.push(match total_phase_measure(&t, n, seed, exec) {
                Ok(r) => {
                    let pass = (r.after - r.exact).abs() < tol && (r.before - r.exact).abs() < tol;
                    let mut line = report_line("total_measure", args.regions, seed, pass, Ok(&r));
                    if let Value::Object(m) = &mut line {
                        m.remove("per_side");
                    }
                    line
                }
                Err(e) => report_line::<()>("total_measure", args.regions, seed, false, Err(measure_error(e)?)),
            });
            lines
        }
        Suite::VolumeSign => {
            let t = andreev_table(args)?;
            let n = args.samples.unwrap_or(50);
            let mut lines = Vec::new();
            for kind in [SegmentKind::Free, SegmentKind::Specular, SegmentKind::Andreev] {
                let name = serde_json::to_value(kind).unwrap_or_default();
                match volume_sign_suite(&t, kind, n, seed, exec) {
                    Ok(reps) => {
                        for r in &reps {
                            let mut line = report_line("volume_sign", lines.len(), seed, r.pass, Ok(r));
                            if let Value::Object(m) = &mut line {
                                m.insert("segment_kind".into(), name.clone());
                            }
                            lines.push(line);
                        }
                    }
                    Err(VerifyError::NoSuchSide) => {}
                    Err(e) => lines.push(report_line::<()>(
                        "volume_sign",
                        lines.len(),
                        seed,
                        false,
                        Err(e.to_string()),
                    )),
                }
            }
            lines
        }
        Suite::ClosedFlow => {
            let t = andreev_table(args)?;
            let tol = positive_tol(args, 1e-9)?;
            closed_flow_suite(&t, args.samples.unwrap_or(100), seed, tol, exec)
                .iter()
                .map(|r| report_line("closed_flow", r.index, r.seed, r.pass, Ok(r)))
                .collect()
        }
        Suite::Tfractal => tfractal_lines(args, exec)?,
    };
    let mut all = true;
    for line in &lines {
        all &= line["pass"] == Value::Bool(true);
        writeln!(out, "{line}")?;
    }
    Ok(if all && !lines.is_empty() {
        Status::Pass
    } else {
        Status::Failed
    })
}

fn tfractal_lines(args: &VerifyArgs, exec: Exec) -> Result<Vec<Value>, CliError> {
    let levels = if args.level.is_empty() {
        vec![1, 2]
    } else {
        args.level.clone()
    };
    let ps = if args.p.is_empty() { vec![3, 5] } else { args.p.clone() };
    let x0s: Vec<Rational> = if args.x0.is_empty() {
        vec!["1/3", "1/5", "2/3"]
            .into_iter()
            .filter_map(parse_rational)
            .collect()
    } else {
        args.x0
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| CliError::Config(format!("basepoint {s:?} is not a fraction"))))
            .collect::<Result<_, _>>()?
    };
    if let Some(x) = x0s.iter().find(|x| is_dyadic(x)) {
        return Err(CliError::Config(format!("basepoint {x} is a dyadic rational")));
    }
    let mut cases = Vec::new();
    for &level in &levels {
        for &p in &ps {
            for x0 in &x0s {
                cases.push((level, p, x0.clone()));
            }
        }
    }
    let max_events = args.max_events;
    let results = andreev_core::par::map_slice(exec, &cases, |(level, p, x0)| {
        tfractal_theorem_check(*level, *p, x0, max_events)
    });
    cases
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, ((level, p, x0), r))| match r {
            Ok(r) => Ok(report_line(
                "tfractal",
                i,
                args.seed,
                r.periodic && r.anti_parallel_exit,
                Ok(&r),
            )),
            Err(e @ andreev_core::fractal::FractalError::InvalidSpec(_))
            | Err(e @ andreev_core::fractal::FractalError::LevelTooHigh { .. }) => Err(config_err(e)),
            Err(e) => {
                let mut line = report_line::<()>("tfractal", i, args.seed, false, Err(e.to_string()));
                if let Value::Object(m) = &mut line {
                    m.insert("level".into(), (*level).into());
                    m.insert("p".into(), (*p).into());
                    m.insert("x0".into(), x0.to_string().into());
                }
                Ok(line)
            }
        })
        .collect()
}
