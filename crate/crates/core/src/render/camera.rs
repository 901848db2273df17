use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Pinhole camera. World points map to camera space as `R·p + t`; the camera
/// looks down `+z` with `x` right and `y` down.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidParams("focal lengths must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParams("image size must be at least 1x1".into()));
        }
        let finite = self.rotation.iter().flatten().chain(&self.translation).all(|v| v.is_finite())
            && self.cx.is_finite()
            && self.cy.is_finite();
        if !finite {
            return Err(Error::InvalidParams("camera has non-finite entries".into()));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`; `up` is the world direction that
    /// appears upward on screen. Horizontal field of view `fov_x` in radians.
    pub fn look_at(eye: [f64; 3], target: [f64; 3], up: [f64; 3], fov_x: f64, width: usize, height: usize) -> Self {
        let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        let cross = |a: [f64; 3], b: [f64; 3]| {
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        };
        let norm = |a: [f64; 3]| {
            let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            a.map(|v| v / n)
        };
        let forward = norm(sub(target, eye));
        let right = norm(cross(forward, up));
        let down = cross(forward, right);
        let rotation = [right, down, forward];
        let translation = std::array::from_fn(|r| -(0..3).map(|c| rotation[r][c] * eye[c]).sum::<f64>());
        let fx = width as f64 / (2.0 * (fov_x / 2.0).tan());
        Camera {
            rotation,
            translation,
            fx,
            fy: fx,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|r| (0..3).map(|c| self.rotation[r][c] * p[c]).sum::<f64>() + self.translation[r])
    }

    /// World-space camera center `-Rᵀ t`.
    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|c| -(0..3).map(|r| self.rotation[r][c] * self.translation[r]).sum::<f64>())
    }

    /// Parses the text camera description: one `name values...` line per
    /// field (`rotation` has 9 row-major values, `translation` 3), `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rotation = None;
        let mut translation = None;
        let (mut fx, mut fy, mut cx, mut cy, mut width, mut height) = (None, None, None, None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let values: Vec<f64> = parts
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("camera line {}: {e}", lineno + 1)))?;
            let want = |n: usize| -> Result<()> {
                if values.len() == n {
                    Ok(())
                } else {
                    Err(Error::Parse(format!(
                        "camera line {}: `{key}` needs {n} values, got {}",
                        lineno + 1,
                        values.len()
                    )))
                }
            };
            match key {
                "rotation" => {
                    want(9)?;
                    rotation = Some(std::array::from_fn(|r| std::array::from_fn(|c| values[r * 3 + c])));
                }
                "translation" => {
                    want(3)?;
                    translation = Some([values[0], values[1], values[2]]);
                }
                "fx" | "fy" | "cx" | "cy" | "width" | "height" => {
                    want(1)?;
                    let v = values[0];
                    match key {
                        "fx" => fx = Some(v),
                        "fy" => fy = Some(v),
                        "cx" => cx = Some(v),
                        "cy" => cy = Some(v),
                        "width" => width = Some(dimension(v, lineno)?),
                        _ => height = Some(dimension(v, lineno)?),
                    }
                }
                other => return Err(Error::Parse(format!("camera line {}: unknown field `{other}`", lineno + 1))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("camera is missing `{name}`"));
        let cam = Camera {
            rotation: rotation.ok_or_else(|| missing("rotation"))?,
            translation: translation.ok_or_else(|| missing("translation"))?,
            fx: fx.ok_or_else(|| missing("fx"))?,
            fy: fy.ok_or_else(|| missing("fy"))?,
            cx: cx.ok_or_else(|| missing("cx"))?,
            cy: cy.ok_or_else(|| missing("cy"))?,
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("rotation");
        for v in self.rotation.iter().flatten() {
            let _ = write!(s, " {v:?}");
        }
        s.push_str("\ntranslation");
        for v in &self.translation {
            let _ = write!(s, " {v:?}");
        }
        let _ = write!(
            s,
            "\nfx {:?}\nfy {:?}\ncx {:?}\ncy {:?}\nwidth {}\nheight {}\n",
            self.fx, self.fy, self.cx, self.cy, self.width, self.height
        );
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn dimension(v: f64, lineno: usize) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e6 {
        Ok(v as usize)
    } else {
        Err(Error::Parse(format!("camera line {}: bad image dimension {v}", lineno + 1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let cam = Camera::look_at([0.3, -0.2, -2.5], [0.0; 3], [0.0, -1.0, 0.0], 0.8, 64, 48);
        let back = Camera::parse(&cam.to_text()).unwrap();
        assert_eq!(back, cam);
    }

    #[test]
    fn look_at_puts_target_on_axis() {
        let cam = Camera::look_at([1.0, 2.0, -3.0], [0.1, 0.2, 0.3], [0.0, -1.0, 0.0], 1.0, 32, 32);
        let p = cam.to_camera([0.1, 0.2, 0.3]);
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12 && p[2] > 0.0);
        let c = cam.center();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12 && (c[2] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(Camera::parse("rotation 1 0 0 0 1 0 0 0 1\n").is_err());
        assert!(Camera::parse("bogus 1\n").is_err());
        let text = "rotation 1 0 0 0 1 0 0 0 1\ntranslation 0 0 0\nfx 0\nfy 1\ncx 0\ncy 0\nwidth 4\nheight 4\n";
        assert!(Camera::parse(text).is_err());
        let ok = text.replace("fx 0", "fx 10 # focal");
        assert_eq!(Camera::parse(&ok).unwrap().fx, 10.0);
        assert!(Camera::parse(&ok.replace("width 4", "width 4.5")).is_err());
    }
}
