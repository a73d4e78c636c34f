//! Grids, sampled vector fields, the mollifier, discrete circulation and
//! vorticity measures. Everything downstream consumes these types.
//!
//! Fields are sampled at cell centers of a uniform `n x n` grid over a square
//! domain (default `(0,1)^2`). Circulation loops connect four adjacent cell
//! centers, so edge midpoints are averages of the two adjacent samples and a
//! closed loop telescopes exactly for sampled discrete gradients.

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::quad::adaptive_simpson;
use std::sync::OnceLock;

/// Uniform `n x n` grid of square cells over `domain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    domain: Rect,
}

impl GridSpec {
    /// Grid over the unit square.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, Rect::unit())
    }

    pub fn new(n: usize, domain: Rect) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid needs n >= 2, got {n}")));
        }
        let w = domain.width();
        let h = domain.height();
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::invalid("grid domain must have positive area"));
        }
        if (w - h).abs() > 1e-12 * w.abs().max(h.abs()) {
            return Err(Error::invalid(
                "grid domain must be square (one spacing h serves both axes)",
            ));
        }
        Ok(GridSpec { n, domain })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    /// Cell spacing; `h * n` recovers the domain side length exactly.
    pub fn h(&self) -> f64 {
        self.domain.width() / self.n as f64
    }

    /// Center of cell `(i, j)`, `0 <= i, j < n`.
    pub fn center(&self, i: usize, j: usize) -> Point {
        let h = self.h();
        Point::new(
            self.domain.x0 + (i as f64 + 0.5) * h,
            self.domain.y0 + (j as f64 + 0.5) * h,
        )
    }
}

/// A sampled field `beta: domain -> R^2`, one `[b1, b2]` pair per cell center.
#[derive(Debug, Clone)]
pub struct VectorField2D {
    spec: GridSpec,
    values: Vec<[f64; 2]>,
}

impl VectorField2D {
    pub fn constant(spec: GridSpec, value: [f64; 2]) -> Self {
        VectorField2D {
            spec,
            values: vec![value; spec.n * spec.n],
        }
    }

    /// Sample `f(x, y)` at every cell center.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> [f64; 2] + Sync) -> Self {
        let n = spec.n;
        let mut values = vec![[0.0; 2]; n * n];
        for j in 0..n {
            for i in 0..n {
                let c = spec.center(i, j);
                values[j * n + i] = f(c.x, c.y);
            }
        }
        VectorField2D { spec, values }
    }

    pub fn from_values(spec: GridSpec, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != spec.n * spec.n {
            return Err(Error::invalid(format!(
                "field storage has {} entries, grid wants {}",
                values.len(),
                spec.n * spec.n
            )));
        }
        if values
            .iter()
            .any(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::invalid("field contains non-finite entries"));
        }
        Ok(VectorField2D { spec, values })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[j * self.spec.n + i]
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }
}

/// Normalization of the unit bump `rho(y) = Z^-1 exp(-1/(1-|4y|^2))` on
/// `B_{1/4}(0)`, computed once by radial quadrature.
fn unit_bump_normalization() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        let integrand = |r: f64| {
            let s = 16.0 * r * r;
            if s >= 1.0 {
                0.0
            } else {
                2.0 * std::f64::consts::PI * r * (-1.0 / (1.0 - s)).exp()
            }
        };
        adaptive_simpson(&integrand, 0.0, 0.25, 1e-15)
    })
}

/// `Q(t) = int_0^t exp(-1/u) du`; the radial mass of the bump reduces to it
/// by the substitution `u = 1 - 16 r^2`. Evaluated adaptively so the mass
/// profile stays smooth to quadrature tolerance (a lookup table would leave
/// interpolation kinks that pollute discrete curls).
fn unit_bump_mass_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let f = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    adaptive_simpson(&f, 0.0, t.min(1.0), 1e-14)
}

fn unit_bump_mass_q1() -> f64 {
    static Q1: OnceLock<f64> = OnceLock::new();
    *Q1.get_or_init(|| unit_bump_mass_q(1.0))
}

/// Mollifier `rho_eps(x) = eps^-2 rho(x/eps)` with support radius `eps/4` and
/// unit mass.
#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    eps: f64,
    z: f64,
}

impl MollifierSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!(
                "mollifier needs eps > 0, got {eps}"
            )));
        }
        Ok(MollifierSpec {
            eps,
            z: unit_bump_normalization(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Normalization constant of the unit bump.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn support_radius(&self) -> f64 {
        self.eps / 4.0
    }

    /// Value at offset `(dx, dy)` from the bump center. Total function: zero
    /// outside the support, smooth inside.
    pub fn value(&self, dx: f64, dy: f64) -> f64 {
        let s = 16.0 * (dx * dx + dy * dy) / (self.eps * self.eps);
        if s >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s)).exp() / (self.z * self.eps * self.eps)
        }
    }

    /// Mass inside radius `r`: `int_{B_r} rho_eps`, exactly 1 beyond the
    /// support radius. By radial substitution this is
    /// `1 - Q(1 - 16 r^2/eps^2) / Q(1)` with `Q` the cumulative of
    /// `exp(-1/u)`.
    pub fn mass_within(&self, r: f64) -> f64 {
        if r >= self.support_radius() {
            return 1.0;
        }
        if r <= 0.0 {
            return 0.0;
        }
        let t = 1.0 - 16.0 * r * r / (self.eps * self.eps);
        1.0 - unit_bump_mass_q(t) / unit_bump_mass_q1()
    }
}

/// A signed atom of a vorticity measure.
#[derive(Debug, Clone, Copy)]
pub struct Atom {
    pub center: Point,
    pub gamma: i8,
}

/// The measure `sigma * sum_i gamma_i delta_{x_i} * rho_eps`.
///
/// Construction validates the admissibility requirements: every `eps`-ball
/// around an atom lies inside the domain and the balls are pairwise disjoint.
/// Violations are errors, never silently clamped.
#[derive(Debug, Clone)]
pub struct VorticityMeasure {
    sigma: f64,
    mollifier: MollifierSpec,
    atoms: Vec<Atom>,
}

impl VorticityMeasure {
    pub fn new(sigma: f64, eps: f64, atoms: Vec<(Point, i8)>, domain: &Rect) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!(
                "measure needs sigma > 0, got {sigma}"
            )));
        }
        let mollifier = MollifierSpec::new(eps)?;
        let slack = 1.0 - 1e-12;
        for (p, g) in &atoms {
            if *g != 1 && *g != -1 {
                return Err(Error::invalid(format!("atom sign must be +-1, got {g}")));
            }
            if domain.dist_to_boundary(p) < eps * slack {
                return Err(Error::invalid(format!(
                    "atom at ({}, {}): eps-ball not contained in the domain",
                    p.x, p.y
                )));
            }
        }
        for a in 0..atoms.len() {
            for b in (a + 1)..atoms.len() {
                if atoms[a].0.dist(&atoms[b].0) < 2.0 * eps * slack {
                    return Err(Error::invalid(format!(
                        "atoms {a} and {b}: eps-balls overlap"
                    )));
                }
            }
        }
        Ok(VorticityMeasure {
            sigma,
            mollifier,
            atoms: atoms
                .into_iter()
                .map(|(center, gamma)| Atom { center, gamma })
                .collect(),
        })
    }

    /// Measure with no atoms (curl-free admissibility class).
    pub fn empty(sigma: f64, eps: f64) -> Result<Self> {
        Self::new(sigma, eps, Vec::new(), &Rect::unit())
    }

    /// Bypass the invariant checks. Intended for exercising rejection paths;
    /// everything downstream assumes validated measures.
    pub fn new_unchecked(sigma: f64, eps: f64, atoms: Vec<(Point, i8)>) -> Self {
        VorticityMeasure {
            sigma,
            mollifier: MollifierSpec::new(eps).expect("eps > 0"),
            atoms: atoms
                .into_iter()
                .map(|(center, gamma)| Atom { center, gamma })
                .collect(),
        }
    }

    /// Re-run the construction invariants against a domain.
    pub fn validate(&self, domain: &Rect) -> Result<()> {
        let atoms: Vec<(Point, i8)> = self.atoms.iter().map(|a| (a.center, a.gamma)).collect();
        Self::new(self.sigma, self.eps(), atoms, domain).map(|_| ())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.mollifier.eps()
    }

    pub fn mollifier(&self) -> &MollifierSpec {
        &self.mollifier
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass `sigma * sum gamma_i`.
    pub fn total_mass(&self) -> f64 {
        self.sigma * self.atoms.iter().map(|a| a.gamma as f64).sum::<f64>()
    }

    /// Density of the mollified measure at a point.
    pub fn density(&self, p: &Point) -> f64 {
        let r = self.mollifier.support_radius();
        let mut acc = 0.0;
        for a in &self.atoms {
            let dx = p.x - a.center.x;
            let dy = p.y - a.center.y;
            if dx.abs() <= r && dy.abs() <= r {
                acc += a.gamma as f64 * self.mollifier.value(dx, dy);
            }
        }
        self.sigma * acc
    }
}

/// Closed line integral of `beta . tau` around the plaquette whose corners are
/// the cell centers `(i,j), (i+1,j), (i+1,j+1), (i,j+1)`; edge-midpoint
/// trapezoid sums. Equals `h^2` times the discrete curl at the plaquette.
pub fn cell_circulation(f: &VectorField2D, i: usize, j: usize) -> Result<f64> {
    let n = f.spec().n();
    if i + 1 >= n || j + 1 >= n {
        return Err(Error::invalid(format!(
            "plaquette ({i}, {j}) out of range for n = {n} (need i, j < n-1)"
        )));
    }
    Ok(circulation_unchecked(f, i, j))
}

#[inline]
fn circulation_unchecked(f: &VectorField2D, i: usize, j: usize) -> f64 {
    let h = f.spec().h();
    let bl = f.get(i, j);
    let br = f.get(i + 1, j);
    let tr = f.get(i + 1, j + 1);
    let tl = f.get(i, j + 1);
    0.5 * h * ((bl[0] + br[0]) + (br[1] + tr[1]) - (tl[0] + tr[0]) - (bl[1] + tl[1]))
}

/// Position of the plaquette center for plaquette `(i, j)`.
fn plaquette_center(spec: &GridSpec, i: usize, j: usize) -> Point {
    let h = spec.h();
    Point::new(
        spec.domain().x0 + (i as f64 + 1.0) * h,
        spec.domain().y0 + (j as f64 + 1.0) * h,
    )
}

/// Maximal cell-averaged mismatch between the discrete curl of `f` and the
/// mollified measure: `max_plaquettes |circulation - integral of mu| / h^2`.
///
/// When atoms are present the grid must resolve the mollifier (`h <= eps/8`);
/// a coarser grid is an error rather than a meaningless number.
pub fn curl_residual(f: &VectorField2D, mu: &VorticityMeasure) -> Result<f64> {
    let spec = f.spec();
    let n = spec.n();
    let h = spec.h();
    if !mu.is_empty() && h > mu.eps() / 8.0 * (1.0 + 1e-12) {
        return Err(Error::grid(format!(
            "h = {h:.3e} does not resolve the mollifier (need h <= eps/8 = {:.3e})",
            mu.eps() / 8.0
        )));
    }

    // Mollified density at plaquette centers, accumulated atom by atom over
    // each atom's support stencil.
    let mut density = vec![0.0f64; (n - 1) * (n - 1)];
    let r = mu.mollifier().support_radius();
    let dom = spec.domain();
    for a in mu.atoms() {
        // plaquette center (i+1)h, so i = x/h - 1
        let i_lo = (((a.center.x - r - dom.x0) / h - 1.0).floor().max(0.0)) as usize;
        let j_lo = (((a.center.y - r - dom.y0) / h - 1.0).floor().max(0.0)) as usize;
        let i_hi = ((((a.center.x + r - dom.x0) / h - 1.0).ceil()) as usize).min(n - 2);
        let j_hi = ((((a.center.y + r - dom.y0) / h - 1.0).ceil()) as usize).min(n - 2);
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let c = plaquette_center(&spec, i, j);
                let v = mu.mollifier().value(c.x - a.center.x, c.y - a.center.y);
                if v != 0.0 {
                    density[j * (n - 1) + i] += mu.sigma() * a.gamma as f64 * v;
                }
            }
        }
    }

    let h2 = h * h;
    let mut worst = 0.0f64;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let circ = circulation_unchecked(f, i, j);
            let res = (circ / h2 - density[j * (n - 1) + i]).abs();
            if res > worst {
                worst = res;
            }
        }
    }
    Ok(worst)
}

/// `beta_2` along the left boundary `x = x0`, extrapolated from the first two
/// grid columns by one-sided linear extrapolation. Returns one value per row.
pub fn left_boundary_trace(f: &VectorField2D) -> Vec<f64> {
    let n = f.spec().n();
    (0..n)
        .map(|j| 1.5 * f.get(0, j)[1] - 0.5 * f.get(1, j)[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_vanishes_on_support_boundary() {
        let m = MollifierSpec::new(0.1).unwrap();
        assert_eq!(m.value(0.025, 0.0), 0.0);
        assert_eq!(m.value(0.025 + 1e-9, 0.0), 0.0);
        assert!(m.value(0.024, 0.0) > 0.0);
    }

    #[test]
    fn mollifier_center_value_matches_independent_quadrature() {
        // Oracle: Z = (pi/16) * int_0^1 exp(-1/w) dw via the substitution
        // w = 1 - 16 r^2, independent of the radial route used by the library.
        let z_oracle = std::f64::consts::PI / 16.0
            * adaptive_simpson(&|w: f64| (-1.0 / w).exp(), 1e-300, 1.0, 1e-15);
        let m = MollifierSpec::new(1.0).unwrap();
        assert!(
            (m.z() - z_oracle).abs() <= 1e-10 * z_oracle,
            "z = {}, oracle = {}",
            m.z(),
            z_oracle
        );
        let expected = (-1.0f64).exp() / z_oracle;
        assert!((m.value(0.0, 0.0) - expected).abs() <= 1e-9 * expected);

        // Scaling: eps^-2 prefactor.
        let m2 = MollifierSpec::new(0.01).unwrap();
        assert!((m2.value(0.0, 0.0) - expected * 1e4).abs() <= 1e-5 * expected * 1e4);
    }

    #[test]
    fn mollifier_radial_mass_profile() {
        let eps = 0.03;
        let m = MollifierSpec::new(eps).unwrap();
        assert_eq!(m.mass_within(eps / 4.0), 1.0);
        assert_eq!(m.mass_within(0.0), 0.0);
        // oracle: direct radial quadrature of 2 pi r rho_eps(r)
        for &r in &[0.2, 0.5, 0.8, 0.95] {
            let r = r * eps / 4.0;
            let oracle = adaptive_simpson(
                &|t: f64| 2.0 * std::f64::consts::PI * t * m.value(t, 0.0),
                0.0,
                r,
                1e-13,
            );
            let got = m.mass_within(r);
            assert!(
                (got - oracle).abs() < 1e-7,
                "r = {r}: {got} vs oracle {oracle}"
            );
        }
        // monotone
        let mut prev = 0.0;
        for k in 1..=100 {
            let v = m.mass_within(k as f64 / 100.0 * eps / 4.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn mollifier_mass_converges_at_second_order() {
        // Discrete mass over cell centers approaches 1 like O(h^2).
        let mass = |n: usize| {
            let eps = 0.8;
            let m = MollifierSpec::new(eps).unwrap();
            let spec = GridSpec::new(n, Rect::new(-0.5, -0.5, 0.5, 0.5)).unwrap();
            let h = spec.h();
            let mut acc = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let c = spec.center(i, j);
                    acc += h * h * m.value(c.x, c.y);
                }
            }
            acc
        };
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| (mass(n) - 1.0).abs())
            .collect();
        assert!(errs[0] < 1e-3);
        assert!(errs[2] < 1e-6, "mass error at n=256: {}", errs[2]);
        // rate check across the three resolutions
        let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());
        assert!(order > 1.7, "observed order {order}");
    }

    #[test]
    fn constant_field_is_curl_free() {
        let spec = GridSpec::unit(16).unwrap();
        let f = VectorField2D::constant(spec, [1.0, 1.0]);
        assert_eq!(cell_circulation(&f, 3, 5).unwrap(), 0.0);
    }

    #[test]
    fn exact_gradient_is_curl_free() {
        // grad(x*y) = (y, x), sampled exactly
        let spec = GridSpec::unit(32).unwrap();
        let f = VectorField2D::from_fn(spec, |x, y| [y, x]);
        for (i, j) in [(0, 0), (5, 9), (30, 30), (13, 2)] {
            assert!(cell_circulation(&f, i, j).unwrap().abs() < 1e-12);
        }
        let mu = VorticityMeasure::empty(0.1, 0.01).unwrap();
        assert!(curl_residual(&f, &mu).unwrap() < 1e-12);
    }

    #[test]
    fn winding_field_circulation_recovers_sigma() {
        // beta = sigma/(2 pi) * x_perp / |x|^2 around a loop of cells
        // enclosing the origin: summed circulation = sigma + O(h).
        let sigma = 0.37;
        let spec = GridSpec::new(64, Rect::new(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let f = VectorField2D::from_fn(spec, |x, y| {
            let r2 = x * x + y * y;
            [
                -sigma / (2.0 * std::f64::consts::PI) * y / r2,
                sigma / (2.0 * std::f64::consts::PI) * x / r2,
            ]
        });
        // Sum plaquette circulations over a square block around the center;
        // circulation additivity makes this the outer loop integral.
        let n = spec.n();
        let (lo, hi) = (n / 2 - 8, n / 2 + 8);
        let mut total = 0.0;
        for j in lo..hi {
            for i in lo..hi {
                total += cell_circulation(&f, i, j).unwrap();
            }
        }
        let h = spec.h();
        assert!(
            (total - sigma).abs() < 10.0 * h * sigma,
            "total = {total}, sigma = {sigma}"
        );
    }

    #[test]
    fn circulation_additivity_is_exact() {
        // Union-rectangle circulation equals the sum of member plaquettes.
        let spec = GridSpec::unit(24).unwrap();
        let f = VectorField2D::from_fn(spec, |x, y| {
            [x.sin() * (3.0 * y).cos(), (2.0 * x).cos() + y * y]
        });
        let (i0, j0, w, hgt) = (3usize, 5usize, 7usize, 6usize);
        let mut sum = 0.0;
        for j in j0..j0 + hgt {
            for i in i0..i0 + w {
                sum += cell_circulation(&f, i, j).unwrap();
            }
        }
        // Outer loop by edge-midpoint sums over the union boundary.
        let h = spec.h();
        let mut outer = 0.0;
        for i in i0..i0 + w {
            outer += 0.5 * h * (f.get(i, j0)[0] + f.get(i + 1, j0)[0]);
            outer -= 0.5 * h * (f.get(i, j0 + hgt)[0] + f.get(i + 1, j0 + hgt)[0]);
        }
        for j in j0..j0 + hgt {
            outer += 0.5 * h * (f.get(i0 + w, j)[1] + f.get(i0 + w, j + 1)[1]);
            outer -= 0.5 * h * (f.get(i0, j)[1] + f.get(i0, j + 1)[1]);
        }
        assert!((sum - outer).abs() <= 1e-12 * outer.abs().max(1.0));
    }

    #[test]
    fn constant_field_misses_an_atom_by_peak_density() {
        let spec = GridSpec::unit(256).unwrap();
        let f = VectorField2D::constant(spec, [1.0, 1.0]);
        let sigma = 0.05;
        let eps = 0.1;
        // atom exactly at a plaquette center so the peak is sampled exactly
        let h = spec.h();
        let atom = Point::new(128.0 * h, 128.0 * h);
        let mu = VorticityMeasure::new(sigma, eps, vec![(atom, 1)], &spec.domain()).unwrap();
        let res = curl_residual(&f, &mu).unwrap();
        let peak = sigma * mu.mollifier().value(0.0, 0.0);
        assert!(
            (res - peak).abs() <= 1e-12 * peak,
            "res = {res}, peak = {peak}"
        );
    }

    #[test]
    fn measure_rejects_boundary_and_overlap() {
        let dom = Rect::unit();
        // ball pokes out of the domain
        assert!(VorticityMeasure::new(0.1, 0.2, vec![(Point::new(0.1, 0.5), 1)], &dom).is_err());
        // overlapping eps-balls
        assert!(VorticityMeasure::new(
            0.1,
            0.2,
            vec![(Point::new(0.4, 0.5), 1), (Point::new(0.5, 0.5), -1)],
            &dom
        )
        .is_err());
        // valid pair
        let mu = VorticityMeasure::new(
            0.1,
            0.1,
            vec![(Point::new(0.3, 0.5), 1), (Point::new(0.7, 0.5), -1)],
            &dom,
        )
        .unwrap();
        assert_eq!(mu.total_mass(), 0.0);
    }

    #[test]
    fn unresolved_grid_is_an_error() {
        let spec = GridSpec::unit(16).unwrap();
        let f = VectorField2D::constant(spec, [1.0, 1.0]);
        let mu = VorticityMeasure::new(0.1, 0.1, vec![(Point::new(0.5, 0.5), 1)], &spec.domain())
            .unwrap();
        assert!(matches!(curl_residual(&f, &mu), Err(Error::Grid(_))));
    }

    #[test]
    fn boundary_trace_extrapolates_linearly() {
        let spec = GridSpec::unit(64).unwrap();
        // beta_2 linear in x: trace must be exact
        let f = VectorField2D::from_fn(spec, |x, y| [0.0, 0.5 + 3.0 * x + 0.0 * y]);
        for v in left_boundary_trace(&f) {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }
}
