//! CSV event tables and SVG drawings.

use std::fmt::Write as _;
use std::io::Write;

use andreev_core::{CollisionEvent, Parity, Point, PolygonTable, ReflectionKind, SingularityReport};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 9] = [
    "event_index",
    "side",
    "hit_x",
    "hit_y",
    "r",
    "phi",
    "tau",
    "kind",
    "parity_after",
];

/// Seventeen significant digits.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn kind_name(kind: ReflectionKind) -> &'static str {
    match kind {
        ReflectionKind::Specular => "specular",
        ReflectionKind::Andreev => "andreev",
    }
}

/// Writes the event table; a singular stop adds a final `singularity` row
/// holding the stopping point and the free path leading to it.
pub fn write_events_csv<W: Write>(
    out: W,
    events: &[CollisionEvent],
    singularity: Option<&SingularityReport>,
    start_parity: Parity,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (i, e) in events.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.side.to_string(),
            sig17(e.hit.x),
            sig17(e.hit.y),
            sig17(e.r),
            sig17(e.phi),
            sig17(e.tau),
            kind_name(e.kind).to_owned(),
            i8::from(e.parity_after).to_string(),
        ])?;
    }
    if let Some(s) = singularity {
        let travelled: f64 = events.iter().map(|e| e.tau).sum();
        let parity = events.last().map_or(start_parity, |e| e.parity_after);
        w.write_record([
            events.len().to_string(),
            s.side.map(|i| i.to_string()).unwrap_or_default(),
            sig17(s.location.x),
            sig17(s.location.y),
            String::new(),
            String::new(),
            sig17(s.time - travelled),
            "singularity".to_owned(),
            i8::from(parity).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const MARGIN: f64 = 0.05;

/// Screen y, with `-0` normalised to `0`.
fn flip(y: f64) -> f64 {
    0.0 - y
}

fn pt(p: &Point) -> String {
    format!("{},{}", p.x, flip(p.y))
}

/// The table outline, its Andreev sides drawn over it in a second stroke,
/// and the trajectory as a single path. The y axis points up.
pub fn svg(table: &PolygonTable, andreev_sides: &[usize], trajectory: &[Point]) -> String {
    let (lo, hi) = table.bounding_box();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let (mx, my) = (MARGIN * w, MARGIN * h);
    let stroke = 0.004 * w.max(h);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\">",
        lo.x - mx,
        flip(hi.y + my),
        w + 2.0 * mx,
        h + 2.0 * my
    );
    let outline: Vec<String> = table.vertices().iter().map(pt).collect();
    let _ = writeln!(
        s,
        "  <polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\" stroke-linejoin=\"round\"/>",
        outline.join(" ")
    );
    for &i in andreev_sides {
        let side = table.side(i);
        let _ = writeln!(
            s,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"crimson\" stroke-width=\"{}\"/>",
            side.a.x,
            flip(side.a.y),
            side.b.x,
            flip(side.b.y),
            2.5 * stroke
        );
    }
    if let Some((first, rest)) = trajectory.split_first() {
        let mut d = format!("M {}", pt(first).replace(',', " "));
        for p in rest {
            let _ = write!(d, " L {}", pt(p).replace(',', " "));
        }
        let _ = writeln!(
            s,
            "  <path d=\"{d}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"{}\"/>",
            0.5 * stroke
        );
    }
    s.push_str("</svg>\n");
    s
}
