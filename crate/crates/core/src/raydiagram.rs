//! Geometrical construction of coincidence images.
//!
//! The image is first found the ordinary way, tracing the object through the
//! imaging lens toward the source. The source and the beamsplitter then act
//! as mirrors: entangled light reflects the intermediate image twice (source,
//! then beamsplitter), thermal light once (beamsplitter only, the source
//! acting as a phase-conjugate mirror).
//!
//! Axial coordinates are measured from the source along the unfolded arm 2;
//! arm 1 is drawn below it with the same origin.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Correlation, Geometry, Reality, Scheme, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracedImage {
    /// Axial position of the image.
    pub position: f64,
    /// Signed distance from the lens, positive past the lens (real).
    pub distance: f64,
    pub height: f64,
}

/// Thin-lens image of the point `(height, axial)` through a lens at
/// `lens = (position, f)`, with light travelling from the object to the lens.
pub fn trace_ordinary(object: (f64, f64), lens: (f64, f64)) -> Result<TracedImage> {
    let (_, zo) = object;
    trace_directed(object, lens, (lens.0 - zo).signum())
}

/// Thin-lens image with light travelling along `dir` (±1). An object lying
/// past the lens along `dir` is virtual (converging incident light).
pub fn trace_directed(object: (f64, f64), lens: (f64, f64), dir: f64) -> Result<TracedImage> {
    let (h, zo) = object;
    let (zl, f) = lens;
    if !(h.is_finite() && zo.is_finite() && zl.is_finite() && f.is_finite()) || f == 0.0 {
        return Err(Error::invalid("trace needs finite positions and a nonzero focal length"));
    }
    let u = dir * (zl - zo);
    if u == 0.0 {
        return Err(Error::degenerate("object in the lens plane"));
    }
    if u == f {
        return Err(Error::degenerate("object in the focal plane"));
    }
    let v = u * f / (u - f);
    Ok(TracedImage {
        position: zl + dir * v,
        distance: v,
        height: -h * v / u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldRule {
    QuantumDoubleReflection,
    ClassicalSingleReflection,
}

impl FoldRule {
    pub fn for_correlation(c: Correlation) -> Self {
        match c {
            Correlation::Quantum => FoldRule::QuantumDoubleReflection,
            Correlation::Classical => FoldRule::ClassicalSingleReflection,
        }
    }

    /// Maps an arm-2 axial coordinate measured from the source onto arm 1.
    /// Each rule is its own inverse.
    pub fn reflect(self, u: f64) -> f64 {
        match self {
            FoldRule::QuantumDoubleReflection => -u,
            FoldRule::ClassicalSingleReflection => u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedImage {
    /// Signed distance from the source along arm 1.
    pub distance: f64,
    pub height: f64,
    pub reality: Reality,
}

/// Folds an intermediate image lying `v` from the imaging lens toward the
/// source (lens at `z2`) onto arm 1. Heights are preserved.
pub fn fold(v: f64, height: f64, z2: f64, rule: FoldRule) -> FoldedImage {
    let d = rule.reflect(z2 - v);
    FoldedImage {
        distance: d,
        height,
        reality: Reality::from_distance(d),
    }
}

/// Inverse of [`fold`]: the lens-side distance `v` of the intermediate image.
pub fn unfold(d: f64, z2: f64, rule: FoldRule) -> f64 {
    z2 - rule.reflect(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Source { z: f64 },
    BeamSplitter { z: f64 },
    Lens { arm: Arm, z: f64, f: f64, label: &'static str },
    Object { arm: Arm, z: f64 },
    Detector { arm: Arm, z: f64, label: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub arm: Arm,
    /// `(axial, transverse)` vertices.
    pub points: Vec<(f64, f64)>,
    /// Back-extension toward a virtual image.
    pub dashed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub arm: Arm,
    pub z: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayScene {
    pub scheme: Scheme,
    pub correlation: Correlation,
    pub fold: FoldRule,
    pub object_height: f64,
    pub elements: Vec<Element>,
    pub rays: Vec<Ray>,
    /// Object arrow on arm 2 that the ordinary construction starts from.
    pub construction_object: Option<Marker>,
    /// Drawn dashed: the ordinary image before folding (scheme I) or the
    /// object moved onto the lens axis (scheme II).
    pub intermediate_image: Option<Marker>,
    pub final_image: Option<(Marker, Reality)>,
    /// Final image distance in its own arm frame: `z1` for scheme I, `z3`
    /// for scheme II.
    pub image_distance: f64,
    pub image_height: f64,
}

/// Rays of the two-ray construction for an object point through a lens,
/// light travelling along `dir`.
fn construction_rays(arm: Arm, obj: (f64, f64), lens_z: f64, f: f64, dir: f64, img: &TracedImage) -> Vec<Ray> {
    let (zo, h) = obj;
    let u = dir * (lens_z - zo);
    let reach = u.abs().max(f.abs());
    let chief = |z: f64| h * (z - lens_z) / (zo - lens_z);
    let focal = |z: f64| h * (1.0 - (z - lens_z) / (dir * f));
    let start = if u > 0.0 { zo } else { lens_z - dir * reach };
    let end = if img.distance > 0.0 { img.position } else { lens_z + dir * reach };
    let mut rays = vec![
        Ray {
            arm,
            points: vec![(start, chief(start)), (lens_z, 0.0), (end, chief(end))],
            dashed: false,
        },
        Ray {
            arm,
            points: vec![(start, h), (lens_z, h), (end, focal(end))],
            dashed: false,
        },
    ];
    let mut extend = |a: (f64, f64), b: (f64, f64)| {
        rays.push(Ray {
            arm,
            points: vec![a, b],
            dashed: true,
        })
    };
    if u < 0.0 {
        extend((lens_z, 0.0), (zo, h));
        extend((lens_z, h), (zo, h));
    }
    if img.distance < 0.0 {
        extend((lens_z, 0.0), (img.position, img.height));
        extend((lens_z, h), (img.position, img.height));
    }
    rays
}

/// Ray construction of the coincidence image of one branch.
///
/// Scheme I uses `z2`, `z3`, `f`; scheme II uses `z1`, `z2`, `f`. The other
/// distance is the one being constructed and is ignored if present.
pub fn build_scene(geom: &Geometry, correlation: Correlation, object_height: f64) -> Result<RayScene> {
    let g = geom.with_unknown_cleared();
    g.validate()?;
    if !object_height.is_finite() {
        return Err(Error::invalid("object height must be finite"));
    }
    let rule = FoldRule::for_correlation(correlation);
    let sign = correlation.joint_sign();
    let (z2, f, fc) = (g.z2, g.f, g.fc);
    let mut scene = RayScene {
        scheme: g.scheme,
        correlation,
        fold: rule,
        object_height,
        elements: vec![Element::Source { z: 0.0 }, Element::BeamSplitter { z: 0.0 }],
        rays: Vec::new(),
        construction_object: None,
        intermediate_image: None,
        final_image: None,
        image_distance: 0.0,
        image_height: 0.0,
    };
    match g.scheme {
        Scheme::I => {
            let z3 = g.require_z3()?;
            let zo = z2 + z3;
            let img = trace_directed((object_height, zo), (z2, f), -1.0)?;
            let folded = fold(img.distance, img.height, z2, rule);
            if folded.distance == 0.0 {
                return Err(Error::degenerate("coincidence image at the source"));
            }
            scene.image_distance = folded.distance;
            scene.image_height = folded.height;
            scene.elements.extend([
                Element::Lens { arm: Arm::Two, z: z2, f, label: "F" },
                Element::Object { arm: Arm::Two, z: zo },
                Element::Lens { arm: Arm::Two, z: zo + fc, f: fc, label: "Fc" },
                Element::Detector { arm: Arm::Two, z: zo + 2.0 * fc, label: "D2" },
                Element::Detector { arm: Arm::One, z: folded.distance, label: "D1" },
            ]);
            if object_height != 0.0 {
                scene.rays = construction_rays(Arm::Two, (zo, object_height), z2, f, -1.0, &img);
                scene.construction_object = Some(Marker { arm: Arm::Two, z: zo, height: object_height });
                scene.intermediate_image = Some(Marker { arm: Arm::Two, z: img.position, height: img.height });
                scene.final_image = Some((
                    Marker { arm: Arm::One, z: folded.distance, height: folded.height },
                    folded.reality,
                ));
            }
        }
        Scheme::II => {
            let z1 = g.require_z1()?;
            let joint = z2 + sign * z1;
            if joint == 0.0 {
                return Err(Error::degenerate("joint path is zero"));
            }
            // the object moved onto the lens axis, reflected through the
            // source for entangled light; virtual when the joint path is
            // negative
            let zo = z2 - joint;
            let img = trace_directed((object_height, zo), (z2, f), 1.0)?;
            scene.image_distance = img.distance;
            scene.image_height = img.height;
            scene.elements.extend([
                Element::Object { arm: Arm::One, z: z1 },
                Element::Lens { arm: Arm::One, z: z1 + fc, f: fc, label: "Fc" },
                Element::Detector { arm: Arm::One, z: z1 + 2.0 * fc, label: "D1" },
                Element::Lens { arm: Arm::Two, z: z2, f, label: "F" },
                Element::Detector { arm: Arm::Two, z: img.position, label: "D2" },
            ]);
            if object_height != 0.0 {
                scene.rays = construction_rays(Arm::Two, (zo, object_height), z2, f, 1.0, &img);
                scene.construction_object = Some(Marker { arm: Arm::One, z: z1, height: object_height });
                scene.intermediate_image = Some(Marker { arm: Arm::Two, z: zo, height: object_height });
                scene.final_image = Some((
                    Marker { arm: Arm::Two, z: img.position, height: img.height },
                    Reality::from_distance(img.distance),
                ));
            }
        }
    }
    Ok(scene)
}

/// One scene per correlation branch of the source.
pub fn build_scenes(geom: &Geometry, src: SourceKind, object_height: f64) -> Result<Vec<RayScene>> {
    let branches = match src.correlation() {
        Some(c) => vec![c],
        None => vec![Correlation::Classical, Correlation::Quantum],
    };
    branches
        .into_iter()
        .map(|c| build_scene(geom, c, object_height).map_err(|e| e.in_branch(c.branch())))
        .collect()
}

struct Canvas {
    arm_gap: f64,
}

impl Canvas {
    fn y(&self, arm: Arm, x: f64) -> f64 {
        match arm {
            Arm::Two => -x,
            Arm::One => self.arm_gap - x,
        }
    }
}

fn num(v: f64) -> String {
    let s = format!("{:.4}", v);
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// Scalable vector graphics for a scene; units are millimetres.
pub fn render(scene: &RayScene) -> String {
    let mut heights = vec![scene.object_height.abs(), scene.image_height.abs(), 1.0];
    let mut zs = vec![0.0];
    for e in &scene.elements {
        match e {
            Element::Source { z }
            | Element::BeamSplitter { z }
            | Element::Lens { z, .. }
            | Element::Object { z, .. }
            | Element::Detector { z, .. } => zs.push(*z),
        }
    }
    for r in &scene.rays {
        for (z, x) in &r.points {
            zs.push(*z);
            heights.push(x.abs());
        }
    }
    for m in scene.intermediate_image.iter().chain(scene.final_image.iter().map(|(m, _)| m)) {
        zs.push(m.z);
        heights.push(m.height.abs());
    }
    let hmax = heights.iter().cloned().fold(0.0, f64::max) * 1.2;
    let canvas = Canvas {
        arm_gap: 2.0 * hmax + 6.0,
    };
    let zmin = zs.iter().cloned().fold(f64::INFINITY, f64::min) - 5.0;
    let zmax = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 5.0;
    let top = -hmax - 4.0;
    let bottom = canvas.arm_gap + hmax + 8.0;
    let (w, h) = (zmax - zmin, bottom - top);
    let stroke = (w.max(h) / 400.0).max(0.05);
    let font = (w.max(h) / 60.0).max(0.5);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}mm" height="{}mm" viewBox="{} {} {} {}" data-unit="mm" data-scale="1">"#,
        num(w),
        num(h),
        num(zmin),
        num(top),
        num(w),
        num(h)
    );
    let title = format!(
        "scheme {} {} coincidence image",
        match scene.scheme {
            Scheme::I => "I",
            Scheme::II => "II",
        },
        match scene.correlation {
            Correlation::Classical => "thermal",
            Correlation::Quantum => "entangled",
        }
    );
    let _ = writeln!(s, "<title>{title}</title>");
    let _ = writeln!(
        s,
        r#"<g fill="none" stroke="black" stroke-width="{}" font-family="sans-serif" font-size="{}">"#,
        num(stroke),
        num(font)
    );
    for arm in [Arm::Two, Arm::One] {
        let y = canvas.y(arm, 0.0);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray"/>"#,
            num(zmin),
            num(y),
            num(zmax),
            num(y)
        );
    }
    let label = |s: &mut String, z: f64, y: f64, text: &str| {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="black" stroke="none" text-anchor="middle">{}</text>"#,
            num(z),
            num(y),
            text
        );
    };
    for e in &scene.elements {
        match e {
            Element::Source { z } => {
                let (y1, y2) = (canvas.y(Arm::Two, 0.0), canvas.y(Arm::One, 0.0));
                let _ = writeln!(
                    s,
                    r#"<circle class="source" cx="{}" cy="{}" r="{}" fill="black"/>"#,
                    num(*z),
                    num(y1),
                    num(2.0 * stroke)
                );
                let _ = writeln!(
                    s,
                    r#"<line class="fold" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray"/>"#,
                    num(*z),
                    num(y1),
                    num(*z),
                    num(y2)
                );
                label(&mut s, *z, y1 - hmax - 1.0, "S");
            }
            Element::BeamSplitter { z } => {
                let y = canvas.y(Arm::One, 0.0);
                let d = hmax * 0.5;
                let _ = writeln!(
                    s,
                    r#"<line class="beamsplitter" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                    num(z - d),
                    num(y + d),
                    num(z + d),
                    num(y - d)
                );
                label(&mut s, *z, y + hmax + 2.0 * font, "BS");
            }
            Element::Lens { arm, z, label: text, .. } => {
                let y0 = canvas.y(*arm, hmax);
                let y1 = canvas.y(*arm, -hmax);
                let _ = writeln!(
                    s,
                    r#"<line class="lens" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
                    num(*z),
                    num(y0),
                    num(*z),
                    num(y1),
                    num(2.0 * stroke)
                );
                label(&mut s, *z, y0 - 1.0, text);
            }
            Element::Object { arm, z } => {
                let y = canvas.y(*arm, 0.0);
                let _ = writeln!(
                    s,
                    r#"<rect class="object" x="{}" y="{}" width="{}" height="{}"/>"#,
                    num(z - stroke),
                    num(y - hmax * 0.5),
                    num(2.0 * stroke),
                    num(hmax)
                );
                label(&mut s, *z, y + hmax + font, "T");
            }
            Element::Detector { arm, z, label: text } => {
                let y = canvas.y(*arm, 0.0);
                let _ = writeln!(
                    s,
                    r#"<line class="detector" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
                    num(*z),
                    num(y - hmax * 0.7),
                    num(*z),
                    num(y + hmax * 0.7),
                    num(3.0 * stroke)
                );
                label(&mut s, *z, y + hmax + font, text);
            }
        }
    }
    for r in &scene.rays {
        let pts: Vec<String> = r
            .points
            .iter()
            .map(|(z, x)| format!("{},{}", num(*z), num(canvas.y(r.arm, *x))))
            .collect();
        let style = if r.dashed {
            format!(r#" class="extension" stroke-dasharray="{} {}""#, num(3.0 * stroke), num(3.0 * stroke))
        } else {
            r#" class="ray""#.to_string()
        };
        let _ = writeln!(s, r#"<polyline{} points="{}" stroke="royalblue"/>"#, style, pts.join(" "));
    }
    let arrow = |s: &mut String, m: &Marker, class: &str, extra: &str| {
        let y0 = canvas.y(m.arm, 0.0);
        let y1 = canvas.y(m.arm, m.height);
        let _ = writeln!(
            s,
            r#"<line class="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"{}/>"#,
            class,
            num(m.z),
            num(y0),
            num(m.z),
            num(y1),
            num(2.0 * stroke),
            extra
        );
    };
    if let Some(m) = &scene.construction_object {
        arrow(&mut s, m, "object-arrow", "");
    }
    if let Some(m) = &scene.intermediate_image {
        let dash = format!(r#" stroke-dasharray="{} {}""#, num(4.0 * stroke), num(2.0 * stroke));
        arrow(&mut s, m, "intermediate", &dash);
    }
    if let Some((m, reality)) = &scene.final_image {
        arrow(&mut s, m, "final-image", "");
        let (class, fill) = match reality {
            Reality::Real => ("final real", "black"),
            Reality::Virtual => ("final virtual", "white"),
        };
        let _ = writeln!(
            s,
            r#"<circle class="{}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            class,
            num(m.z),
            num(canvas.y(m.arm, m.height)),
            num(3.0 * stroke),
            fill
        );
        let text = match reality {
            Reality::Real => "real image",
            Reality::Virtual => "virtual image",
        };
        label(&mut s, m.z, canvas.y(m.arm, 0.0) + hmax + 2.5 * font, text);
    }
    let _ = writeln!(
        s,
        r#"<text class="legend" x="{}" y="{}" fill="black" stroke="none">{}; beamsplitter drawn at the source, which the construction does not require</text>"#,
        num(zmin + 1.0),
        num(bottom - 1.0),
        title
    );
    s.push_str("</g>\n</svg>\n");
    s
}

/// Writes the rendered scene through a temporary file in the target
/// directory, renamed into place.
pub fn render_to_file(scene: &RayScene, path: &Path) -> Result<()> {
    write_atomic(path, render(scene).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_coincidence_image;
    use proptest::prelude::*;

    const K: f64 = 7853.981633974483;

    #[test]
    fn ordinary_conjugates() {
        let img = trace_ordinary((1.0, 0.0), (20.0, 10.0)).unwrap();
        assert!((img.distance - 20.0).abs() < 1e-12 && (img.height + 1.0).abs() < 1e-12);
        assert!((img.position - 40.0).abs() < 1e-12);
        let img = trace_ordinary((0.5, 35.0), (20.0, 10.0)).unwrap();
        assert!((img.distance - 30.0).abs() < 1e-12 && (img.height + 1.0).abs() < 1e-12);
        assert!((img.position + 10.0).abs() < 1e-12);
        let img = trace_ordinary((0.5, 25.0), (20.0, 10.0)).unwrap();
        assert!((img.distance + 10.0).abs() < 1e-12 && (img.height - 1.0).abs() < 1e-12);
        assert!(matches!(trace_ordinary((1.0, 10.0), (20.0, 10.0)), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn fold_examples() {
        let q = fold(30.0, 1.0, 20.0, FoldRule::QuantumDoubleReflection);
        assert_eq!((q.distance, q.reality), (10.0, Reality::Real));
        let c = fold(30.0, 1.0, 20.0, FoldRule::ClassicalSingleReflection);
        assert_eq!((c.distance, c.reality), (-10.0, Reality::Virtual));
        let c = fold(-10.0, 1.0, 20.0, FoldRule::ClassicalSingleReflection);
        assert_eq!((c.distance, c.reality), (30.0, Reality::Real));
        for rule in [FoldRule::QuantumDoubleReflection, FoldRule::ClassicalSingleReflection] {
            assert_eq!(unfold(fold(17.0, 1.0, 20.0, rule).distance, 20.0, rule), 17.0);
            assert_eq!(rule.reflect(rule.reflect(3.5)), 3.5);
        }
    }

    fn scheme_i(z2: f64, z3: f64) -> Geometry {
        Geometry::scheme_i(z2, z3, 10.0, 50.0, K)
    }

    #[test]
    fn caption_analogs() {
        // v = 30 > z2 = 20
        let g = scheme_i(20.0, 15.0);
        let q = build_scene(&g, Correlation::Quantum, 1.0).unwrap();
        assert_eq!(q.final_image.unwrap().1, Reality::Real);
        // v = 30 > z2 = 40 fails: quantum virtual, classical real
        let g = scheme_i(40.0, 15.0);
        assert_eq!(build_scene(&g, Correlation::Quantum, 1.0).unwrap().final_image.unwrap().1, Reality::Virtual);
        assert_eq!(build_scene(&g, Correlation::Classical, 1.0).unwrap().final_image.unwrap().1, Reality::Real);
        // scheme II, z2 ± z1 > f
        let g = Geometry::scheme_ii(5.0, 25.0, 10.0, 50.0, K);
        for c in [Correlation::Classical, Correlation::Quantum] {
            assert_eq!(build_scene(&g, c, 1.0).unwrap().final_image.unwrap().1, Reality::Real);
        }
    }

    #[test]
    fn empty_object_has_elements_only() {
        let scene = build_scene(&scheme_i(20.0, 15.0), Correlation::Quantum, 0.0).unwrap();
        assert!(scene.rays.is_empty() && scene.final_image.is_none() && scene.intermediate_image.is_none());
        let svg = render(&scene);
        assert!(svg.contains(r#"class="lens""#));
        assert!(!svg.contains("polyline") && !svg.contains(r#"class="final"#));
    }

    #[test]
    fn rendered_markers() {
        let svg = render(&build_scene(&scheme_i(20.0, 15.0), Correlation::Quantum, 1.0).unwrap());
        assert_eq!(svg.matches(r#"class="intermediate""#).count(), 1);
        assert_eq!(svg.matches(r#"class="final real""#).count(), 1);
        assert_eq!(svg.matches(r#"class="final virtual""#).count(), 0);
        assert!(svg.contains("stroke-dasharray"));
        let svg = render(&build_scene(&scheme_i(40.0, 15.0), Correlation::Quantum, 1.0).unwrap());
        assert_eq!(svg.matches(r#"class="final virtual""#).count(), 1);
    }

    #[test]
    fn rendering_is_deterministic() {
        let scene = build_scene(&scheme_i(20.0, 5.0), Correlation::Classical, 0.7).unwrap();
        assert_eq!(render(&scene), render(&scene.clone()));
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        render_to_file(&scene, &a).unwrap();
        render_to_file(&scene, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        let missing = dir.path().join("nope").join("c.svg");
        assert!(matches!(render_to_file(&scene, &missing), Err(Error::Io(_))));
    }

    #[test]
    fn dual_source_builds_two_scenes() {
        let w = crate::geometry::DualWeights::new(1.0, 1.0).unwrap();
        let scenes = build_scenes(&scheme_i(20.0, 15.0), SourceKind::DualTypeI(w), 1.0).unwrap();
        assert_eq!(scenes.len(), 2);
        assert_ne!(scenes[0].final_image.unwrap().1, scenes[1].final_image.unwrap().1);
    }

    proptest! {
        #[test]
        fn scenes_agree_with_solver(
            z2 in 1.0f64..100.0,
            z3 in 1.0f64..100.0,
            f in prop_oneof![-50.0f64..-1.0, 1.0f64..50.0],
            h in 0.1f64..3.0,
            quantum in any::<bool>(),
        ) {
            prop_assume!((z3 - f).abs() > 1e-3);
            let c = if quantum { Correlation::Quantum } else { Correlation::Classical };
            let src = if quantum { SourceKind::QuantumEntangled } else { SourceKind::ThermalClassical };
            let g = Geometry::scheme_i(z2, z3, f, 50.0, K);
            let sol = solve_coincidence_image(&g, src);
            prop_assume!(sol.is_ok());
            let sol = sol.unwrap();
            let scene = build_scene(&g, c, h).unwrap();
            let tol = 1e-9 * sol.image_distance.abs().max(1.0);
            prop_assert!((scene.image_distance - sol.image_distance).abs() <= tol);
            prop_assert!((scene.image_height - sol.magnification * h).abs() <= 1e-9 * (sol.magnification * h).abs().max(1e-12));
            prop_assert_eq!(scene.final_image.unwrap().1, sol.reality);
        }
    }
}
