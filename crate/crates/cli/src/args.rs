//! Parsers for the range-style flag values.

use critpoints::critstats::Window;
use serde::Serialize;
use std::str::FromStr;

/// `a:b:h`, the points `a, a + h, ...` up to and including `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let g = Grid { start: num(a)?, stop: num(b)?, step: num(h)? };
        if !(g.start.is_finite() && g.stop.is_finite()) || g.step.is_nan() || g.step <= 0.0 || g.stop < g.start {
            return Err(format!("need finite start <= stop and step > 0, got {s:?}"));
        }
        if (g.stop - g.start) / g.step > 1e7 {
            return Err("grid has more than 10^7 points".into());
        }
        Ok(g)
    }
}

/// `lo:hi` with `inf` allowed as the upper end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowArg(pub Window);

impl FromStr for WindowArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let bound = |t: &str| match t.trim() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            t => t.parse::<f64>().map_err(|e| format!("{t:?}: {e}")),
        };
        Window::new(bound(a)?, bound(b)?).map(WindowArg).map_err(|e| e.to_string())
    }
}

impl Serialize for WindowArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&window_label(&self.0))
    }
}

pub fn window_label(w: &Window) -> String {
    if w.upper.is_infinite() {
        format!("{}:inf", w.lower)
    } else {
        format!("{}:{}", w.lower, w.upper)
    }
}
