//! The multi-well potential `W`, its primitive `Phi`, and midpoint-rule
//! discretizations of the three energies:
//!
//! - `E1`: bulk + `sigma * |D beta|` (edge-wise total variation),
//! - `E2`: bulk + `sigma^2 * |D beta|^2` (all four forward differences),
//! - `EA`: bulk + `sigma^2 ((d1 b1)^2 + (d2 b2)^2)` (anisotropic pair).

use crate::error::{Error, Result};
use crate::field::VectorField2D;
use crate::geom::{Point, Rect};
use serde::{Deserialize, Serialize};

/// Which regularizer accompanies the bulk term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyKind {
    E1,
    E2,
    EA,
}

impl EnergyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyKind::E1 => "E1",
            EnergyKind::E2 => "E2",
            EnergyKind::EA => "EA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(EnergyKind::E1),
            "E2" => Ok(EnergyKind::E2),
            "EA" | "A" => Ok(EnergyKind::EA),
            other => Err(Error::invalid(format!("unknown energy kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bulk / regularizer split of an energy evaluation on a region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub regularizer: f64,
    pub total: f64,
    pub region: Rect,
}

impl EnergyBreakdown {
    fn new(bulk: f64, regularizer: f64, region: Rect) -> Self {
        EnergyBreakdown {
            bulk,
            regularizer,
            total: bulk + regularizer,
            region,
        }
    }

    fn zero(region: Rect) -> Self {
        Self::new(0.0, 0.0, region)
    }
}

/// The multi-well density `W(b) = (1 - b1^2)^2 + (1 - b2^2)^2`; vanishes
/// exactly on the four wells `(+-1, +-1)`.
#[inline]
pub fn eval_w(b: [f64; 2]) -> f64 {
    let a = 1.0 - b[0] * b[0];
    let c = 1.0 - b[1] * b[1];
    a * a + c * c
}

/// Euclidean distance from `b` to the well set `K = {(+-1, +-1)}`.
#[inline]
pub fn dist_to_wells(b: [f64; 2]) -> f64 {
    let d1 = (b[0].abs() - 1.0).abs();
    let d2 = (b[1].abs() - 1.0).abs();
    d1.hypot(d2)
}

/// Primitive of `|1 - t^2|` with `Phi(0) = 0`; odd and strictly increasing.
///
/// Closed form: `t - t^3/3` on `|t| <= 1`, `sign(t) (|t|^3/3 - |t| + 4/3)`
/// outside.
#[inline]
pub fn eval_phi(t: f64) -> f64 {
    let a = t.abs();
    let v = if a <= 1.0 {
        a - a * a * a / 3.0
    } else {
        a * a * a / 3.0 - a + 4.0 / 3.0
    };
    v.copysign(t)
}

/// Energy of `f` on `region` (a sub-rectangle of the domain) at weight
/// `sigma`. Bulk is the midpoint-rule sum of `W` over cells whose centers lie
/// in the region; the regularizer couples cells through edges interior to the
/// region.
pub fn energy(
    kind: EnergyKind,
    f: &VectorField2D,
    sigma: f64,
    region: &Rect,
) -> Result<EnergyBreakdown> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!(
            "energy needs sigma > 0, got {sigma}"
        )));
    }
    if region.is_degenerate() {
        return Ok(EnergyBreakdown::zero(*region));
    }
    if !f.spec().domain().contains_rect(region) {
        return Err(Error::invalid(
            "energy region must lie inside the grid domain",
        ));
    }
    let (bulk, reg) = energy_masked(kind, f, sigma, &|p: &Point| region.contains_point(p));
    Ok(EnergyBreakdown::new(bulk, reg, *region))
}

/// Energy on the annulus `B_R(center) \ B_r(center)`; used by the annulus
/// lower-bound rows. Same discretization as [`energy`], cells selected by
/// their center.
pub fn annulus_energy(
    kind: EnergyKind,
    f: &VectorField2D,
    sigma: f64,
    center: &Point,
    r: f64,
    big_r: f64,
) -> Result<EnergyBreakdown> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("annulus energy needs sigma > 0"));
    }
    if !(0.0 < r && r < big_r) {
        return Err(Error::invalid(format!(
            "annulus needs 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let c = *center;
    let (bulk, reg) = energy_masked(kind, f, sigma, &|p: &Point| {
        let d = p.dist(&c);
        d >= r && d <= big_r
    });
    Ok(EnergyBreakdown::new(
        bulk,
        reg,
        Rect::new(c.x - big_r, c.y - big_r, c.x + big_r, c.y + big_r),
    ))
}

/// Edge-wise total variation of `f` over an annulus, without the `sigma`
/// weight (the raw `|D beta|` surrogate).
pub fn annulus_tv(f: &VectorField2D, center: &Point, r: f64, big_r: f64) -> Result<f64> {
    if !(0.0 < r && r < big_r) {
        return Err(Error::invalid(format!(
            "annulus needs 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let c = *center;
    let (_, tv) = energy_masked(EnergyKind::E1, f, 1.0, &|p: &Point| {
        let d = p.dist(&c);
        d >= r && d <= big_r
    });
    Ok(tv)
}

/// Shared kernel: bulk and regularizer over the cells selected by `mask`
/// (cell centers), edges counted when both endpoint cells are selected.
fn energy_masked(
    kind: EnergyKind,
    f: &VectorField2D,
    sigma: f64,
    mask: &dyn Fn(&Point) -> bool,
) -> (f64, f64) {
    let spec = f.spec();
    let n = spec.n();
    let h = spec.h();
    let mut inside = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            inside[j * n + i] = mask(&spec.center(i, j));
        }
    }

    let mut bulk = 0.0;
    for j in 0..n {
        for i in 0..n {
            if inside[j * n + i] {
                bulk += h * h * eval_w(f.get(i, j));
            }
        }
    }

    let mut reg = 0.0;
    match kind {
        EnergyKind::E1 => {
            for j in 0..n {
                for i in 0..n {
                    if !inside[j * n + i] {
                        continue;
                    }
                    let v = f.get(i, j);
                    if i + 1 < n && inside[j * n + i + 1] {
                        let w = f.get(i + 1, j);
                        reg += h * (w[0] - v[0]).hypot(w[1] - v[1]);
                    }
                    if j + 1 < n && inside[(j + 1) * n + i] {
                        let w = f.get(i, j + 1);
                        reg += h * (w[0] - v[0]).hypot(w[1] - v[1]);
                    }
                }
            }
            reg *= sigma;
        }
        EnergyKind::E2 => {
            for j in 0..n {
                for i in 0..n {
                    if !inside[j * n + i] {
                        continue;
                    }
                    let v = f.get(i, j);
                    if i + 1 < n && inside[j * n + i + 1] {
                        let w = f.get(i + 1, j);
                        let (d0, d1) = (w[0] - v[0], w[1] - v[1]);
                        reg += d0 * d0 + d1 * d1;
                    }
                    if j + 1 < n && inside[(j + 1) * n + i] {
                        let w = f.get(i, j + 1);
                        let (d0, d1) = (w[0] - v[0], w[1] - v[1]);
                        reg += d0 * d0 + d1 * d1;
                    }
                }
            }
            reg *= sigma * sigma;
        }
        EnergyKind::EA => {
            for j in 0..n {
                for i in 0..n {
                    if !inside[j * n + i] {
                        continue;
                    }
                    let v = f.get(i, j);
                    if i + 1 < n && inside[j * n + i + 1] {
                        let d = f.get(i + 1, j)[0] - v[0];
                        reg += d * d;
                    }
                    if j + 1 < n && inside[(j + 1) * n + i] {
                        let d = f.get(i, j + 1)[1] - v[1];
                        reg += d * d;
                    }
                }
            }
            reg *= sigma * sigma;
        }
    }
    (bulk, reg)
}

/// Axis of a one-dimensional slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    /// `I x {y}`: runs in the x-direction at fixed height.
    Horizontal,
    /// `{x} x I`: runs in the y-direction at fixed abscissa.
    Vertical,
}

/// One-dimensional energy of `f` restricted to a grid line.
///
/// The requested coordinate snaps to the nearest line of cell centers. The
/// variation term is taken along the slice direction (tangential reading);
/// E2/EA use the squared-difference analogue, with EA keeping only the
/// diagonal component that varies along the slice.
pub fn slice_energy(
    kind: EnergyKind,
    f: &VectorField2D,
    sigma: f64,
    axis: SliceAxis,
    index: f64,
    interval: (f64, f64),
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("slice energy needs sigma > 0"));
    }
    let spec = f.spec();
    let dom = spec.domain();
    let n = spec.n();
    let h = spec.h();
    let (lo, hi) = interval;
    if hi <= lo {
        return Ok(0.0);
    }
    let (offset, span_lo, span_hi) = match axis {
        SliceAxis::Vertical => (dom.x0, dom.y0, dom.y1),
        SliceAxis::Horizontal => (dom.y0, dom.x0, dom.x1),
    };
    let line_min = match axis {
        SliceAxis::Vertical => dom.x0,
        SliceAxis::Horizontal => dom.y0,
    };
    let line_max = line_min + dom.width();
    if index < line_min - 1e-12 || index > line_max + 1e-12 {
        return Err(Error::invalid(format!(
            "slice coordinate {index} outside the domain"
        )));
    }
    if lo < span_lo - 1e-12 || hi > span_hi + 1e-12 {
        return Err(Error::invalid("slice interval outside the domain side"));
    }
    // snap to the nearest line of cell centers
    let line = (((index - offset) / h - 0.5).round().max(0.0) as usize).min(n - 1);

    let at = |k: usize| -> [f64; 2] {
        match axis {
            SliceAxis::Vertical => f.get(line, k),
            SliceAxis::Horizontal => f.get(k, line),
        }
    };
    let coord = |k: usize| span_lo + (k as f64 + 0.5) * h;

    let mut bulk = 0.0;
    for k in 0..n {
        let t = coord(k);
        if t >= lo && t <= hi {
            bulk += h * eval_w(at(k));
        }
    }
    let mut reg = 0.0;
    for k in 0..n - 1 {
        let (t0, t1) = (coord(k), coord(k + 1));
        if t0 >= lo && t1 <= hi {
            let a = at(k);
            let b = at(k + 1);
            match kind {
                EnergyKind::E1 => {
                    reg += sigma * (b[0] - a[0]).hypot(b[1] - a[1]);
                }
                EnergyKind::E2 => {
                    let (d0, d1) = (b[0] - a[0], b[1] - a[1]);
                    reg += sigma * sigma * (d0 * d0 + d1 * d1) / h;
                }
                EnergyKind::EA => {
                    // component whose derivative along the slice enters EA
                    let d = match axis {
                        SliceAxis::Vertical => b[1] - a[1],
                        SliceAxis::Horizontal => b[0] - a[0],
                    };
                    reg += sigma * sigma * d * d / h;
                }
            }
        }
    }
    Ok(bulk + reg)
}
