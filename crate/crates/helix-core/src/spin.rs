//! The discrete J1-J3 lattice model: ferromagnetic nearest-neighbor and
//! antiferromagnetic second-neighbor interactions in rows and columns,
//! spiral ground states, angular-velocity fields, plaquette vortex
//! detection, and the map onto the continuum energy.
//!
//! Spins are stored as angles, so unit norm is exact and angular arithmetic
//! is exact modulo `2 pi`.

use crate::error::{Error, Result};
use crate::field::{GridSpec, VectorField2D, VorticityMeasure};
use crate::geom::{Point, Rect};
use std::f64::consts::PI;

/// Unit spin field on the lattice `eps Z^2 cap [0,1)^2` with `eps = 1/m`.
#[derive(Debug, Clone)]
pub struct SpinField {
    m: usize,
    angles: Vec<f64>,
}

impl SpinField {
    pub fn from_angles(m: usize, angles: Vec<f64>) -> Result<Self> {
        if m < 3 {
            return Err(Error::invalid("spin lattice needs m >= 3"));
        }
        if angles.len() != m * m {
            return Err(Error::invalid(format!(
                "angle storage has {} entries, lattice wants {}",
                angles.len(),
                m * m
            )));
        }
        Ok(SpinField { m, angles })
    }

    /// Sample a continuum angle function at the lattice sites `(i eps, j eps)`.
    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let eps = 1.0 / m as f64;
        let mut angles = vec![0.0; m * m];
        for j2 in 0..m {
            for j1 in 0..m {
                angles[j2 * m + j1] = f(j1 as f64 * eps, j2 as f64 * eps);
            }
        }
        Self::from_angles(m, angles)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn angle(&self, j1: usize, j2: usize) -> f64 {
        self.angles[j2 * self.m + j1]
    }

    /// Rotate every spin by a fixed angle.
    pub fn rotated(&self, phi: f64) -> SpinField {
        SpinField {
            m: self.m,
            angles: self.angles.iter().map(|a| a + phi).collect(),
        }
    }
}

/// Lattice spacing plus the frustration parameter `alpha = 4 (1 - delta)`.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub alpha: f64,
    pub delta: f64,
    pub eps: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 4.0) {
            return Err(Error::invalid(format!(
                "frustrated regime needs alpha in (0, 4), got {alpha}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        Ok(ModelParams {
            alpha,
            delta: (4.0 - alpha) / 4.0,
            eps,
        })
    }

    /// The continuum regularization weight `sigma = eps / sqrt(2 delta)`.
    pub fn sigma(&self) -> f64 {
        self.eps / (2.0 * self.delta).sqrt()
    }

    /// Optimal rotation angle `arccos(alpha / 4)` of the spiral states.
    pub fn spiral_angle(&self) -> f64 {
        (self.alpha / 4.0).acos()
    }
}

/// Interaction energy: `-alpha` on nearest-neighbor pairs plus `+1` on
/// second-neighbor pairs in rows and columns, free boundary (pairs fully
/// inside the box), each unordered pair counted once.
pub fn spin_energy(s: &SpinField, alpha: f64) -> f64 {
    let m = s.m();
    let mut nn = 0.0;
    let mut second = 0.0;
    for j2 in 0..m {
        for j1 in 0..m {
            let a = s.angle(j1, j2);
            if j1 + 1 < m {
                nn += (s.angle(j1 + 1, j2) - a).cos();
            }
            if j2 + 1 < m {
                nn += (s.angle(j1, j2 + 1) - a).cos();
            }
            if j1 + 2 < m {
                second += (s.angle(j1 + 2, j2) - a).cos();
            }
            if j2 + 2 < m {
                second += (s.angle(j1, j2 + 2) - a).cos();
            }
        }
    }
    -alpha * nn + second
}

/// Number of interior triples in the two directions: `(horizontal, vertical)`.
pub fn triple_count(s: &SpinField) -> (usize, usize) {
    let m = s.m();
    (m.saturating_sub(2) * m, m.saturating_sub(2) * m)
}

/// The nonnegative rewritten energy
/// `1/2 sum_j |u(j) - (alpha/2) u(j+eps e) + u(j+2 eps e)|^2` over both
/// directions (interior triples only). It differs from [`spin_energy`] by
/// `(1 + alpha^2/8)` per triple plus boundary pair corrections, and it
/// vanishes exactly on the optimal spirals.
pub fn renormalized_energy(s: &SpinField, alpha: f64) -> f64 {
    let m = s.m();
    let mut acc = 0.0;
    for j2 in 0..m {
        for j1 in 0..m {
            let t0 = s.angle(j1, j2);
            if j1 + 2 < m {
                let t1 = s.angle(j1 + 1, j2);
                let t2 = s.angle(j1 + 2, j2);
                acc += triple_sq(t0, t1, t2, alpha);
            }
            if j2 + 2 < m {
                let t1 = s.angle(j1, j2 + 1);
                let t2 = s.angle(j1, j2 + 2);
                acc += triple_sq(t0, t1, t2, alpha);
            }
        }
    }
    0.5 * acc
}

/// `|u0 - (alpha/2) u1 + u2|^2` for unit spins at the given angles. Clamped
/// at zero: the cosine form can round a vanishing square slightly negative.
#[inline]
pub fn triple_sq(t0: f64, t1: f64, t2: f64, alpha: f64) -> f64 {
    (2.0 + alpha * alpha / 4.0 + 2.0 * (t2 - t0).cos()
        - alpha * ((t1 - t0).cos() + (t2 - t1).cos()))
    .max(0.0)
}

/// Spiral state rotating by `arccos(alpha/4)` per step, with independent
/// senses in rows and columns.
pub fn build_spiral(p: &ModelParams, m: usize, chi_row: i8, chi_col: i8) -> Result<SpinField> {
    if chi_row.abs() != 1 || chi_col.abs() != 1 {
        return Err(Error::invalid("spiral senses must be +-1"));
    }
    let phi = p.spiral_angle();
    let mut angles = vec![0.0; m * m];
    for j2 in 0..m {
        for j1 in 0..m {
            angles[j2 * m + j1] = (chi_row as f64 * j1 as f64 + chi_col as f64 * j2 as f64) * phi;
        }
    }
    SpinField::from_angles(m, angles)
}

/// Wrap to `(-pi, pi]`.
#[inline]
fn wrap_angle(d: f64) -> f64 {
    let r = d.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Signed angular change along bonds: `e^{i hor(j)} u(j) = u(j + eps e1)` and
/// likewise vertically. Values lie in `(-pi, pi)`.
#[derive(Debug, Clone)]
pub struct AngleFields {
    m: usize,
    hor: Vec<f64>, // (m-1) x m, index j2 * (m-1) + j1
    ver: Vec<f64>, // m x (m-1), index j2 * m + j1
}

impl AngleFields {
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn hor(&self, j1: usize, j2: usize) -> f64 {
        self.hor[j2 * (self.m - 1) + j1]
    }

    #[inline]
    pub fn ver(&self, j1: usize, j2: usize) -> f64 {
        self.ver[j2 * self.m + j1]
    }
}

/// Extract the angular-velocity fields. Antipodal neighbors leave the sign
/// undefined and are reported as an error listing the offending bonds.
pub fn extract_angles(s: &SpinField) -> Result<AngleFields> {
    let m = s.m();
    let mut hor = vec![0.0; (m - 1) * m];
    let mut ver = vec![0.0; m * (m - 1)];
    let mut degenerate: Vec<String> = Vec::new();
    for j2 in 0..m {
        for j1 in 0..m {
            if j1 + 1 < m {
                let d = wrap_angle(s.angle(j1 + 1, j2) - s.angle(j1, j2));
                if PI - d.abs() < 1e-12 {
                    degenerate.push(format!("hor ({j1},{j2})"));
                }
                hor[j2 * (m - 1) + j1] = d;
            }
            if j2 + 1 < m {
                let d = wrap_angle(s.angle(j1, j2 + 1) - s.angle(j1, j2));
                if PI - d.abs() < 1e-12 {
                    degenerate.push(format!("ver ({j1},{j2})"));
                }
                ver[j2 * m + j1] = d;
            }
        }
    }
    if !degenerate.is_empty() {
        degenerate.truncate(8);
        return Err(Error::Degenerate(format!(
            "antipodal neighbors at {}",
            degenerate.join(", ")
        )));
    }
    Ok(AngleFields { m, hor, ver })
}

/// Plaquettes where the discrete curl of the angle fields is `+-2 pi`, with
/// the winding sign. The plaquette combination is `2 pi`-quantized by
/// construction; anything else beyond tolerance is an internal error.
pub fn detect_vortices(a: &AngleFields) -> Result<Vec<((usize, usize), i8)>> {
    let m = a.m();
    let mut out = Vec::new();
    for j2 in 0..m - 1 {
        for j1 in 0..m - 1 {
            let w = a.hor(j1, j2) + a.ver(j1 + 1, j2) - a.hor(j1, j2 + 1) - a.ver(j1, j2);
            let tol = 1e-9;
            if w.abs() <= tol {
                continue;
            }
            if (w - 2.0 * PI).abs() <= tol {
                out.push(((j1, j2), 1));
            } else if (w + 2.0 * PI).abs() <= tol {
                out.push(((j1, j2), -1));
            } else {
                return Err(Error::Data(format!(
                    "plaquette ({j1},{j2}): curl {w} is not in {{-2pi, 0, 2pi}}"
                )));
            }
        }
    }
    Ok(out)
}

/// Convention for the mass each lattice vortex carries in the continuum
/// measure. The circulation condition gives `2 pi sigma`; the continuum
/// admissibility classes are normalized to `sigma`. Both are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassConvention {
    Sigma,
    TwoPiSigma,
}

/// Map a spin field to the continuum: `beta = (hor, ver) / sqrt(2 delta)`
/// interpolated to cell centers, `sigma = eps / sqrt(2 delta)`, and one
/// measure atom per detected vortex (mass per `convention`).
pub fn to_continuum(
    s: &SpinField,
    p: &ModelParams,
    convention: MassConvention,
) -> Result<(VectorField2D, f64, VorticityMeasure)> {
    let angles = extract_angles(s)?;
    let m = s.m();
    let eps = s.eps();
    let scale = 1.0 / (2.0 * p.delta).sqrt();
    let spec = GridSpec::unit(m)?;

    // hor(j1, j2) lives at bond midpoint ((j1 + 1/2) eps, j2 eps); average the
    // two bond rows adjacent to the cell center, clamping at the far edges.
    let mut values = vec![[0.0f64; 2]; m * m];
    for j in 0..m {
        for i in 0..m {
            let i_h = i.min(m - 2);
            let b1 = if j + 1 < m {
                0.5 * (angles.hor(i_h, j) + angles.hor(i_h, j + 1))
            } else {
                angles.hor(i_h, j)
            };
            let j_v = j.min(m - 2);
            let b2 = if i + 1 < m {
                0.5 * (angles.ver(i, j_v) + angles.ver(i + 1, j_v))
            } else {
                angles.ver(i, j_v)
            };
            // the per-bond angular change already carries the eps step, so
            // beta is the change divided by sqrt(2 delta) directly
            values[j * m + i] = [scale * b1, scale * b2];
        }
    }
    let field = VectorField2D::from_values(spec, values)?;

    let sigma = p.sigma();
    let mass = match convention {
        MassConvention::Sigma => sigma,
        MassConvention::TwoPiSigma => 2.0 * PI * sigma,
    };
    let vortices = detect_vortices(&angles)?;
    let atoms: Vec<(Point, i8)> = vortices
        .iter()
        .map(|((j1, j2), g)| {
            (
                Point::new((*j1 as f64 + 0.5) * eps, (*j2 as f64 + 0.5) * eps),
                *g,
            )
        })
        .collect();
    let measure = VorticityMeasure::new(mass, eps, atoms, &Rect::unit())?;
    Ok((field, sigma, measure))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_pair_counts() {
        // m = 4, alpha = 2: 24 nearest pairs, 16 second pairs -> -2*24 + 16
        let s = SpinField::from_fn(4, |_, _| 0.7).unwrap();
        let f = spin_energy(&s, 2.0);
        assert!((f - (-32.0)).abs() < 1e-12);
    }

    #[test]
    fn flipping_a_spin_raises_the_energy_of_an_aligned_state() {
        let alpha = 4.5; // ferromagnetic regime
        let s = SpinField::from_fn(6, |_, _| 0.0).unwrap();
        let f0 = spin_energy(&s, alpha);
        let mut angles: Vec<f64> = (0..36).map(|_| 0.0).collect();
        angles[3 * 6 + 2] = PI * 0.9;
        let flipped = SpinField::from_angles(6, angles).unwrap();
        assert!(spin_energy(&flipped, alpha) > f0);
    }

    #[test]
    fn alpha_zero_leaves_only_second_neighbors() {
        let s = SpinField::from_fn(5, |x, y| 3.0 * x - y).unwrap();
        let f = spin_energy(&s, 0.0);
        // recompute just the second-neighbor sum
        let mut second = 0.0;
        for j2 in 0..5 {
            for j1 in 0..5 {
                let a = s.angle(j1, j2);
                if j1 + 2 < 5 {
                    second += (s.angle(j1 + 2, j2) - a).cos();
                }
                if j2 + 2 < 5 {
                    second += (s.angle(j1, j2 + 2) - a).cos();
                }
            }
        }
        assert!((f - second).abs() < 1e-12);
    }

    #[test]
    fn spiral_zeroes_every_triple() {
        for &alpha in &[1.0, 2.0, 2.0 * std::f64::consts::SQRT_2, 3.9] {
            let p = ModelParams::new(alpha, 1.0 / 16.0).unwrap();
            let s = build_spiral(&p, 16, 1, 1).unwrap();
            let (th, tv) = triple_count(&s);
            let per_triple = renormalized_energy(&s, alpha) / (th + tv) as f64;
            assert!(per_triple.abs() < 1e-12, "alpha = {alpha}: {per_triple}");
        }
        // alpha = 2 sqrt(2) rotates by pi/4
        let p = ModelParams::new(2.0 * std::f64::consts::SQRT_2, 0.1).unwrap();
        assert!((p.spiral_angle() - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_field_excess_is_positive_below_alpha_four() {
        let alpha = 3.0;
        let s = SpinField::from_fn(8, |_, _| 0.2).unwrap();
        let (th, tv) = triple_count(&s);
        let per_triple = renormalized_energy(&s, alpha) / (th + tv) as f64;
        // |1 - alpha/2 + 1|^2 = (2 - alpha/2)^2 per triple
        let expected = 0.5 * (2.0 - alpha / 2.0) * (2.0 - alpha / 2.0);
        assert!((per_triple - expected).abs() < 1e-12);
        assert!(per_triple > 0.0);

        // at alpha = 4 the constant field zeroes the triples
        let s4 = SpinField::from_fn(8, |_, _| -1.1).unwrap();
        assert!(renormalized_energy(&s4, 4.0).abs() < 1e-12);
    }

    #[test]
    fn rewrite_matches_interaction_energy_up_to_boundary_terms() {
        // F = excess - (1 + alpha^2/8) * #triples + (alpha/2) * boundary pairs
        let alpha = 2.3;
        let s = SpinField::from_fn(9, |x, y| 2.0 * x + (3.0 * y).sin()).unwrap();
        let m = s.m();
        let excess = renormalized_energy(&s, alpha);
        let (th, tv) = triple_count(&s);
        // nearest pairs appearing in only one triple: the first and last of
        // each row/column
        let mut edge_nn = 0.0;
        for j2 in 0..m {
            edge_nn += (s.angle(1, j2) - s.angle(0, j2)).cos();
            edge_nn += (s.angle(m - 1, j2) - s.angle(m - 2, j2)).cos();
        }
        for j1 in 0..m {
            edge_nn += (s.angle(j1, 1) - s.angle(j1, 0)).cos();
            edge_nn += (s.angle(j1, m - 1) - s.angle(j1, m - 2)).cos();
        }
        let f = spin_energy(&s, alpha);
        let reconstructed =
            excess - (1.0 + alpha * alpha / 8.0) * (th + tv) as f64 - (alpha / 2.0) * edge_nn;
        assert!(
            (f - reconstructed).abs() < 1e-10,
            "F = {f}, reconstructed = {reconstructed}"
        );
    }

    #[test]
    fn angle_extraction_consistency() {
        let s = SpinField::from_fn(12, |x, y| (2.0 * PI * x).sin() + y).unwrap();
        let a = extract_angles(&s).unwrap();
        let m = s.m();
        for j2 in 0..m {
            for j1 in 0..m - 1 {
                let lhs = wrap_angle(s.angle(j1, j2) + a.hor(j1, j2) - s.angle(j1 + 1, j2));
                assert!(lhs.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_has_zero_angles_and_no_vortices() {
        let s = SpinField::from_fn(8, |_, _| 1.3).unwrap();
        let a = extract_angles(&s).unwrap();
        assert!(a.hor.iter().chain(a.ver.iter()).all(|v| *v == 0.0));
        assert!(detect_vortices(&a).unwrap().is_empty());
    }

    #[test]
    fn spiral_angle_fields_are_constant_and_vortex_free() {
        let alpha = 2.0;
        let p = ModelParams::new(alpha, 1.0 / 10.0).unwrap();
        let s = build_spiral(&p, 10, 1, 1).unwrap();
        let a = extract_angles(&s).unwrap();
        let phi = p.spiral_angle();
        for j2 in 0..10 {
            for j1 in 0..9 {
                assert!((a.hor(j1, j2) - phi).abs() < 1e-12);
            }
        }
        assert!(detect_vortices(&a).unwrap().is_empty());
    }

    #[test]
    fn antipodal_neighbors_are_rejected() {
        let mut angles = vec![0.0; 9];
        angles[4] = PI;
        let s = SpinField::from_angles(3, angles).unwrap();
        assert!(matches!(extract_angles(&s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hand_built_vortex_is_detected_and_neutrality_holds() {
        let m = 9;
        let (cx, cy) = (0.5, 0.5); // center of the middle plaquette region
        let s = SpinField::from_fn(m, |x, y| (y - cy).atan2(x - cx)).unwrap();
        let a = extract_angles(&s).unwrap();
        let v = detect_vortices(&a).unwrap();
        assert_eq!(v.len(), 1, "vortices: {v:?}");
        assert_eq!(v[0].1, 1);

        // winding along the outer boundary equals the enclosed charge
        let mut boundary = 0.0;
        for j1 in 0..m - 1 {
            boundary += a.hor(j1, 0);
        }
        for j2 in 0..m - 1 {
            boundary += a.ver(m - 1, j2);
        }
        for j1 in (0..m - 1).rev() {
            boundary -= a.hor(j1, m - 1);
        }
        for j2 in (0..m - 1).rev() {
            boundary -= a.ver(0, j2);
        }
        let total: i32 = v.iter().map(|(_, g)| *g as i32).sum();
        assert!((boundary - 2.0 * PI * total as f64).abs() < 1e-9);
    }

    #[test]
    fn global_rotation_is_a_gauge_symmetry() {
        let alpha = 2.7;
        let s = SpinField::from_fn(10, |x, y| (5.0 * x).sin() * (3.0 * y).cos()).unwrap();
        let r = s.rotated(1.234);
        assert!((spin_energy(&s, alpha) - spin_energy(&r, alpha)).abs() < 1e-10);
        assert!((renormalized_energy(&s, alpha) - renormalized_energy(&r, alpha)).abs() < 1e-10);
        let a = extract_angles(&s).unwrap();
        let b = extract_angles(&r).unwrap();
        for (x, y) in a.hor.iter().zip(b.hor.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(detect_vortices(&a).unwrap(), detect_vortices(&b).unwrap());
    }

    #[test]
    fn path_reconstruction_off_vortices() {
        let s = SpinField::from_fn(16, |x, y| 0.8 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos())
            .unwrap();
        let a = extract_angles(&s).unwrap();
        assert!(detect_vortices(&a).unwrap().is_empty());
        let m = s.m();
        for (t1, t2) in [(5usize, 7usize), (15, 15), (0, 9)] {
            // row-first path
            let mut acc_row = s.angle(0, 0);
            for j1 in 0..t1 {
                acc_row += a.hor(j1, 0);
            }
            for j2 in 0..t2 {
                acc_row += a.ver(t1, j2);
            }
            // column-first path
            let mut acc_col = s.angle(0, 0);
            for j2 in 0..t2 {
                acc_col += a.ver(0, j2);
            }
            for j1 in 0..t1 {
                acc_col += a.hor(j1, t2);
            }
            let target = s.angle(t1, t2);
            assert!(wrap_angle(acc_row - target).abs() < 1e-10);
            assert!(wrap_angle(acc_col - target).abs() < 1e-10);
            let _ = m;
        }
    }

    #[test]
    fn spiral_maps_to_a_well_for_small_delta() {
        let delta = 0.01;
        let alpha = 4.0 * (1.0 - delta);
        let m = 64;
        let p = ModelParams::new(alpha, 1.0 / m as f64).unwrap();
        let s = build_spiral(&p, m, 1, 1).unwrap();
        let (field, sigma, mu) = to_continuum(&s, &p, MassConvention::TwoPiSigma).unwrap();
        assert!(mu.is_empty());
        assert!((sigma - p.sigma()).abs() < 1e-15);
        let v = field.get(m / 2, m / 2);
        assert!((v[0] - 1.0).abs() < 0.01, "beta_1 = {}", v[0]);
        assert!((v[1] - 1.0).abs() < 0.01, "beta_2 = {}", v[1]);
    }

    #[test]
    fn constant_spins_map_to_the_origin() {
        let p = ModelParams::new(3.0, 1.0 / 8.0).unwrap();
        let s = SpinField::from_fn(8, |_, _| 0.4).unwrap();
        let (field, _, mu) = to_continuum(&s, &p, MassConvention::Sigma).unwrap();
        assert!(mu.is_empty());
        let v = field.get(3, 3);
        assert_eq!(v, [0.0, 0.0]);
        assert_eq!(crate::energy::eval_w(v), 2.0);
    }
}
