//! Deterministic SVG output for logic forms.
//!
//! Coordinates are written in model units with the y axis flipped, so the
//! viewBox is the (expanded) bounding box of the diagram. Sizes given in
//! pixels are converted to model units from the canvas width.
//!
//! Element ids: `obj-<kind>-<labels>` (labels joined by `-`), `pt-<label>`
//! and `label-<label>`. A prime in a label is written as `.` in ids.

use std::fmt::Write;

use thiserror::Error;

use crate::canonical::fmt_real;
use crate::geom::Vec2;
use crate::logic_form::{LogicForm, ObjectDecl, Shape};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub stroke_width: f64,
    pub point_radius: f64,
    pub font_size: f64,
    /// Padding on each side as a fraction of the bounding box.
    pub margin: f64,
    /// Dash and gap lengths in pixels for auxiliary objects.
    pub dash: (f64, f64),
    /// Width of the output image in pixels.
    pub canvas: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            stroke_width: 2.0,
            point_radius: 3.0,
            font_size: 14.0,
            margin: 0.1,
            dash: (6.0, 4.0),
            canvas: 512.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("nothing to render: the form has no points")]
    EmptyForm,
    #[error("style field `{0}` must be positive")]
    InvalidStyle(&'static str),
    #[error("object {0} refers to an unknown point")]
    DanglingObject(String),
}

impl RenderStyle {
    fn check(&self) -> Result<(), RenderError> {
        let fields = [
            ("stroke_width", self.stroke_width),
            ("point_radius", self.point_radius),
            ("font_size", self.font_size),
            ("margin", self.margin),
            ("dash", self.dash.0.min(self.dash.1)),
            ("canvas", self.canvas),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RenderError::InvalidStyle(name));
            }
        }
        Ok(())
    }
}

/// Model-space bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Frame {
    lo: Vec2,
    hi: Vec2,
}

impl Frame {
    fn union(self, o: Frame) -> Frame {
        Frame {
            lo: Vec2::new(self.lo.x.min(o.lo.x), self.lo.y.min(o.lo.y)),
            hi: Vec2::new(self.hi.x.max(o.hi.x), self.hi.y.max(o.hi.y)),
        }
    }
}

fn frame_of(lf: &LogicForm) -> Option<Frame> {
    lf.bounds().map(|(lo, hi)| Frame { lo, hi })
}

pub fn render_svg(lf: &LogicForm, style: &RenderStyle) -> Result<String, RenderError> {
    style.check()?;
    let frame = frame_of(lf).ok_or(RenderError::EmptyForm)?;
    draw(lf, style, frame)
}

/// One document per frame, all sharing the union viewBox.
pub fn render_trajectory(frames: &[LogicForm], style: &RenderStyle) -> Result<Vec<String>, RenderError> {
    style.check()?;
    let shared = frames
        .iter()
        .filter_map(frame_of)
        .reduce(Frame::union)
        .ok_or(RenderError::EmptyForm)?;
    frames.iter().map(|lf| draw(lf, style, shared)).collect()
}

fn id_label(label: &str) -> String {
    label.replace('\'', ".")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn object_id(o: &ObjectDecl) -> String {
    let labels: Vec<String> = o.labels().iter().map(|l| id_label(l)).collect();
    format!("obj-{}-{}", o.kind().as_str(), labels.join("-"))
}

fn draw(lf: &LogicForm, style: &RenderStyle, frame: Frame) -> Result<String, RenderError> {
    let mut w = frame.hi.x - frame.lo.x;
    let mut h = frame.hi.y - frame.lo.y;
    let mut lo = frame.lo;
    if w < 1e-12 {
        lo.x -= 0.5;
        w = 1.0;
    }
    if h < 1e-12 {
        lo.y -= 0.5;
        h = 1.0;
    }
    let (mx, my) = (w * style.margin, h * style.margin);
    let (vx, vw) = (lo.x - mx, w + 2.0 * mx);
    // y is flipped: the top edge of the view is -(hi.y + margin).
    let (vy, vh) = (-(lo.y + h + my), h + 2.0 * my);
    let px = vw / style.canvas;
    let height_px = style.canvas * vh / vw;
    let n = fmt_real;

    let pos = |label: &str, what: &ObjectDecl| {
        lf.pos(label)
            .map(|p| Vec2::new(p.x, -p.y))
            .ok_or_else(|| RenderError::DanglingObject(what.to_string()))
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        n(style.canvas),
        n(height_px),
        n(vx),
        n(vy),
        n(vw),
        n(vh)
    );
    let _ = writeln!(
        out,
        r#"<g id="objects" fill="none" stroke="black" stroke-width="{}">"#,
        n(style.stroke_width * px)
    );
    let mut objects: Vec<&ObjectDecl> = lf.objects.iter().collect();
    objects.sort_by(|a, b| (a.kind(), a.labels()).cmp(&(b.kind(), b.labels())));
    let dash = format!(
        r#" stroke-dasharray="{},{}""#,
        n(style.dash.0 * px),
        n(style.dash.1 * px)
    );
    for o in objects {
        let id = object_id(o);
        let extra = if o.is_auxiliary() { dash.as_str() } else { "" };
        match &o.shape {
            Shape::Circle { center, radius } => {
                let c = pos(center, o)?;
                let _ = writeln!(
                    out,
                    r#"<circle id="{id}" cx="{}" cy="{}" r="{}"{extra}/>"#,
                    n(c.x),
                    n(c.y),
                    n(*radius)
                );
            }
            Shape::Line([a, b]) => {
                let (p, q) = (pos(a, o)?, pos(b, o)?);
                let _ = writeln!(
                    out,
                    r#"<line id="{id}" x1="{}" y1="{}" x2="{}" y2="{}"{extra}/>"#,
                    n(p.x),
                    n(p.y),
                    n(q.x),
                    n(q.y)
                );
            }
            Shape::Polygon(labels) => {
                let mut pts = Vec::with_capacity(labels.len());
                for l in labels {
                    let p = pos(l, o)?;
                    pts.push(format!("{},{}", n(p.x), n(p.y)));
                }
                let _ = writeln!(out, r#"<polygon id="{id}" points="{}"{extra}/>"#, pts.join(" "));
            }
        }
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"points\" stroke=\"none\">\n");
    let r = style.point_radius * px;
    for p in &lf.points {
        let fill = if p.auxiliary { "gray" } else { "black" };
        let _ = writeln!(
            out,
            r#"<circle id="pt-{}" cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            id_label(&p.name),
            n(p.x),
            n(-p.y),
            n(r)
        );
    }
    out.push_str("</g>\n");

    let _ = writeln!(
        out,
        r#"<g id="labels" font-family="sans-serif" font-size="{}">"#,
        n(style.font_size * px)
    );
    let offset = 1.5 * r;
    for p in &lf.points {
        let _ = writeln!(
            out,
            r#"<text id="label-{}" x="{}" y="{}">{}</text>"#,
            id_label(&p.name),
            n(p.x + offset),
            n(-p.y - offset),
            escape(&p.name)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
