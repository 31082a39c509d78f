use std::fmt::Write as _;

use super::{ArtCodeDocument, DocJoint, DocObb, PredictionDialect};
use crate::articulation::JointType;
use crate::geom::Obb;
use crate::{Error, Result};

/// Fixed four-decimal notation, ties to even, never `-0.0000`.
pub fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

fn vec3(v: &[f64; 3]) -> String {
    format!("[{}, {}, {}]", fmt4(v[0]), fmt4(v[1]), fmt4(v[2]))
}

fn bbox_line(out: &mut String, i: usize, b: &DocObb) {
    let _ = writeln!(
        out,
        "bbox_{i} = OBB(center={}, R=[{}, {}, {}], half={})",
        vec3(&b.center),
        vec3(&b.rotation[0]),
        vec3(&b.rotation[1]),
        vec3(&b.rotation[2]),
        vec3(&b.half)
    );
}

/// Predictor prompt: one `bbox_<i>` line per box, then `joints = [`.
pub fn emit_prompt(obbs: &[Obb]) -> Result<String> {
    let docs: Vec<DocObb> = obbs.iter().map(DocObb::from_obb).collect();
    emit_prompt_doc(&docs)
}

pub(crate) fn emit_prompt_doc(obbs: &[DocObb]) -> Result<String> {
    if obbs.is_empty() {
        return Err(Error::EmptyInput("prompt needs at least one box"));
    }
    let mut out = String::new();
    for (i, b) in obbs.iter().enumerate() {
        bbox_line(&mut out, i, b);
    }
    out.push_str("joints = [\n");
    Ok(out)
}

pub fn emit_joint_line(j: &DocJoint) -> Result<String> {
    let head = |t: JointType, p: usize, c: usize| format!("Joint(type=\"{t}\", parent={p}, child={c}");
    let line = match j {
        DocJoint::EdgeAxis(r) => {
            r.validate()?;
            let mut s = format!(
                "{}, axis=Axis(box={}, idx={}, sign={})",
                head(r.joint_type, r.parent, r.child),
                r.child,
                r.axis_idx,
                r.axis_sign
            );
            if let Some((s1, s2)) = r.edge_signs {
                let _ = write!(s, ", pivot=Edge(s1={s1}, s2={s2})");
            }
            s
        }
        DocJoint::Absolute(a) => {
            let mut s = format!("{}, axis={}", head(a.joint_type, a.parent, a.child), vec3(&a.axis));
            if let Some(p) = &a.pos {
                let _ = write!(s, ", pos={}", vec3(p));
            }
            s
        }
        DocJoint::CenterRelative(r) => {
            if r.axis_idx > 2 {
                return Err(Error::InvalidAxisIndex(r.axis_idx as i64));
            }
            let mut s = format!(
                "{}, axis=Axis(box={}, idx={}, sign={})",
                head(r.joint_type, r.parent, r.child),
                r.child,
                r.axis_idx,
                r.axis_sign
            );
            if let Some((u, v)) = r.offset {
                let _ = write!(s, ", pos=Offset(u={}, v={})", fmt4(u), fmt4(v));
            }
            s
        }
    };
    Ok(line + "),")
}

/// `joints = [`, one line per joint, `]`.
pub fn emit_joints(joints: &[DocJoint], dialect: PredictionDialect) -> Result<String> {
    let mut out = String::from("joints = [\n");
    for j in joints {
        if j.dialect() != dialect {
            return Err(Error::InvalidValue(format!(
                "{} joint in a {} list",
                j.dialect().name(),
                dialect.name()
            )));
        }
        out.push_str(&emit_joint_line(j)?);
        out.push('\n');
    }
    out.push_str("]\n");
    Ok(out)
}

/// Full `.artcode` text: version comment, boxes, joint list.
pub fn emit_document(doc: &ArtCodeDocument) -> Result<String> {
    let mut out = format!("# artcode {}\n", doc.format_version);
    for (i, b) in doc.obbs.iter().enumerate() {
        bbox_line(&mut out, i, b);
    }
    out.push_str(&emit_joints(&doc.joints, doc.dialect)?);
    Ok(out)
}
