use std::fmt::Write as _;
use std::fs;

use super::{RenderArgs, RenderFormat};
use crate::error::{Error, Result};
use crate::skeleton::{read_coordinate_csv, JointFrame, JOINT_NAMES, LIMBS};

/// Bounding box `(x_min, y_min, width, height)` of every joint in every
/// frame, padded and never empty.
fn view_box(frames: &[JointFrame]) -> (f64, f64, f64, f64) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for j in frames.iter().flat_map(|f| f.joints.iter()) {
        x0 = x0.min(j.x);
        y0 = y0.min(j.y);
        x1 = x1.max(j.x);
        y1 = y1.max(j.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1.0);
    let pad = 0.1 * span;
    (
        x0 - pad,
        y0 - pad,
        (x1 - x0).max(1.0) + 2.0 * pad,
        (y1 - y0).max(1.0) + 2.0 * pad,
    )
}

/// One stick figure: 14 limb lines and 15 joint circles, image y pointing
/// down as in pixel coordinates.
pub fn render_frame_svg(frame: &JointFrame, view: (f64, f64, f64, f64)) -> String {
    let (x, y, w, h) = view;
    let r = 0.01 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x:.3} {y:.3} {w:.3} {h:.3}" width="400" height="{:.0}">"#,
        400.0 * h / w
    );
    for &(a, b) in LIMBS.iter() {
        let (p, q) = (frame.joints[a], frame.joints[b]);
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-width="{:.3}"/>"#,
            p.x,
            p.y,
            q.x,
            q.y,
            0.5 * r
        );
    }
    for (j, p) in frame.joints.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{r:.3}" fill="red"><title>{}</title></circle>"#,
            p.x, p.y, JOINT_NAMES[j]
        );
    }
    s.push_str("</svg>\n");
    s
}

pub(super) fn run(args: &RenderArgs) -> Result<()> {
    let frames = read_coordinate_csv(&args.motion)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    match args.format {
        RenderFormat::Svg => {
            let view = view_box(&frames);
            for (t, f) in frames.iter().enumerate() {
                let path = args.out.join(format!("frame_{t:05}.svg"));
                fs::write(&path, render_frame_svg(f, view)).map_err(|e| Error::io(&path, e))?;
            }
        }
        RenderFormat::Csv => {
            let path = args.out.join("segments.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["frame", "limb", "from", "to", "x1", "y1", "x2", "y2"])?;
            for (t, f) in frames.iter().enumerate() {
                for (e, &(a, b)) in LIMBS.iter().enumerate() {
                    let (p, q) = (f.joints[a], f.joints[b]);
                    w.write_record([
                        t.to_string(),
                        e.to_string(),
                        JOINT_NAMES[a].to_string(),
                        JOINT_NAMES[b].to_string(),
                        p.x.to_string(),
                        p.y.to_string(),
                        q.x.to_string(),
                        q.y.to_string(),
                    ])?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    println!("rendered {} frames into {}", frames.len(), args.out.display());
    Ok(())
}
