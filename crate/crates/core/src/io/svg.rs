//! SVG rendering of a floorplan.

use std::fmt::Write as _;

use crate::model::{bounding_box, Floorplan, OutlineSpec, ProblemInstance, Rect};

/// One `<rect>` per module with its name and a tick marking the rotated
/// top edge, pads as dots, and the outline frame when given. The y axis
/// points up as in the floorplan.
pub fn render_svg(instance: &ProblemInstance, plan: &Floorplan, outline: Option<&OutlineSpec>) -> String {
    let mut view = if plan.is_empty() { Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 } } else { bounding_box(instance, plan) };
    if let Some(o) = outline {
        view = Rect { x0: view.x0.min(0.0), y0: view.y0.min(0.0), x1: view.x1.max(o.width), y1: view.y1.max(o.height) };
    }
    let pad = 0.04 * view.width().max(view.height()).max(1.0);
    let (vx, vy, vw, vh) = (view.x0 - pad, view.y0 - pad, view.width() + 2.0 * pad, view.height() + 2.0 * pad);
    let stroke = vw.max(vh) / 600.0;
    let font = vw.max(vh) / 60.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{vx} {} {vw} {vh}" width="640" height="{}">"#,
        -(vy + vh),
        (640.0 * vh / vw).round()
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-width="{stroke}">"#);
    if let Some(o) = outline {
        let _ = writeln!(
            s,
            r##"<rect class="outline" x="0" y="0" width="{}" height="{}" fill="none" stroke="#c0392b" stroke-dasharray="{}"/>"##,
            o.width,
            o.height,
            4.0 * stroke
        );
    }
    for (i, m) in instance.modules().iter().enumerate() {
        let r = plan.rect(instance, i);
        let _ = writeln!(
            s,
            r##"<rect class="module" x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" fill-opacity="0.7" stroke="#08519c"><title>{} r={}</title></rect>"##,
            r.x0,
            r.y0,
            r.width(),
            r.height(),
            escape(&m.name),
            plan.r[i].code()
        );
        // tick from the center toward the side that was on top before rotation
        let (dx, dy) = plan.r[i].rotate((0.0, m.height / 2.0));
        let (cx, cy) = (plan.x[i], plan.y[i]);
        let _ = writeln!(
            s,
            r##"<line class="tick" x1="{cx}" y1="{cy}" x2="{}" y2="{}" stroke="#08519c"/>"##,
            cx + 0.8 * dx,
            cy + 0.8 * dy
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="{font}" text-anchor="middle" transform="scale(1,-1)">{}</text>"#,
            -cy,
            escape(&m.name)
        );
    }
    for p in instance.pads() {
        let _ = writeln!(s, r##"<circle class="pad" cx="{}" cy="{}" r="{}" fill="#636363"/>"##, p.x, p.y, 2.0 * stroke);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
