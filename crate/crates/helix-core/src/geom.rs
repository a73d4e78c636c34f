use serde::{Deserialize, Serialize};

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// The open unit square `(0,1)^2`.
    pub fn unit() -> Self {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.width() <= 0.0 || self.height() <= 0.0
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// `other` lies inside `self`, up to a relative slack on the side lengths.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        let slack = 1e-12 * self.width().abs().max(self.height().abs()).max(1.0);
        other.x0 >= self.x0 - slack
            && other.y0 >= self.y0 - slack
            && other.x1 <= self.x1 + slack
            && other.y1 <= self.y1 + slack
    }

    /// Distance from `inner`'s boundary to `self`'s boundary (the minimal gap
    /// over the four sides). Negative when `inner` pokes outside.
    pub fn boundary_gap(&self, inner: &Rect) -> f64 {
        (inner.x0 - self.x0)
            .min(self.x1 - inner.x1)
            .min(inner.y0 - self.y0)
            .min(self.y1 - inner.y1)
    }

    /// Distance from a point inside the rectangle to the boundary.
    pub fn dist_to_boundary(&self, p: &Point) -> f64 {
        (p.x - self.x0)
            .min(self.x1 - p.x)
            .min(p.y - self.y0)
            .min(self.y1 - p.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_gap_and_containment() {
        let outer = Rect::unit();
        let inner = Rect::new(0.25, 0.25, 0.75, 0.75);
        assert!(outer.contains_rect(&inner));
        assert!(!inner.contains_rect(&outer));
        assert!((outer.boundary_gap(&inner) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rect() {
        assert!(Rect::new(0.3, 0.1, 0.3, 0.9).is_degenerate());
        assert!(!Rect::unit().is_degenerate());
    }
}
