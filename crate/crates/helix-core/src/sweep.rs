//! Parameter sweeps over `(sigma, theta, eps)`, min-over-competitor records,
//! log-log slope fits, inequality reports, and CSV/JSON emission.

use crate::balls::{require_admissible, vortex_core_ratio};
use crate::construct::{
    admissibility_report, best_branching, build_uniform, build_vortex_array, scaling_s, Competitor,
    CompetitorKind, ScalingParams,
};
use crate::energy::{annulus_energy, annulus_tv, energy, EnergyKind};
use crate::error::{Error, Result};
use crate::field::{cell_circulation, GridSpec, VectorField2D, VorticityMeasure};
use crate::geom::{Point, Rect};
use serde::{Deserialize, Serialize};
use std::io::Write;

const SQRT2_PI: f64 = std::f64::consts::SQRT_2 * std::f64::consts::PI;

/// How `sigma` values are generated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SigmaRule {
    /// Explicit values, crossed with every theta.
    List { values: Vec<f64> },
    /// Per-theta logarithmic window: `points` values spanning `decades`
    /// decades and ending at `hi_factor * theta`.
    PerThetaLog {
        hi_factor: f64,
        decades: f64,
        points: usize,
    },
}

/// How `eps` is derived from `sigma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpsRule {
    /// Explicit list paired with the sigma list (same length).
    FixedList { values: Vec<f64> },
    /// `eps = kappa * sigma` with `kappa < 1/(sqrt(2) pi)`.
    Proportional { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Sweep configuration; serialized as JSON for the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub theta_list: Vec<f64>,
    pub sigma_rule: SigmaRule,
    pub eps_rule: EpsRule,
    /// Fixed grid size; omit for the automatic per-triple choice
    /// `min(2048, max(256, ceil(8/eps)))`.
    #[serde(default)]
    pub grid_n: Option<usize>,
    pub energies: Vec<EnergyKind>,
    pub competitors: Vec<CompetitorKind>,
    pub output: String,
    pub format: OutputFormat,
    /// Reserved for randomized test fields; sweeps themselves are
    /// deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Record wall-clock build+evaluate times. Off by default so repeated
    /// runs are byte-identical.
    #[serde(default)]
    pub record_runtime: bool,
}

impl SweepConfig {
    /// The default scaling sweep: four boundary fractions, two decades of
    /// `sigma` per theta ending near the vortex builder's regime ceiling,
    /// `eps = sigma / 10`, `E1` only, all three competitors.
    pub fn default_sweep(output: impl Into<String>, format: OutputFormat) -> Self {
        SweepConfig {
            theta_list: vec![0.05, 0.1, 0.25, 0.5],
            sigma_rule: SigmaRule::PerThetaLog {
                hi_factor: 0.9,
                decades: 2.0,
                points: 9,
            },
            eps_rule: EpsRule::Proportional { kappa: 0.1 },
            grid_n: None,
            energies: vec![EnergyKind::E1],
            competitors: vec![
                CompetitorKind::Uniform,
                CompetitorKind::Branching,
                CompetitorKind::VortexArray,
            ],
            output: output.into(),
            format,
            seed: 0,
            record_runtime: false,
        }
    }

    /// Every `(sigma, theta, eps)` triple of the sweep, in deterministic
    /// config order.
    pub fn triples(&self) -> Result<Vec<ScalingParams>> {
        let mut out = Vec::new();
        for &theta in &self.theta_list {
            let sigmas: Vec<f64> = match &self.sigma_rule {
                SigmaRule::List { values } => values.clone(),
                SigmaRule::PerThetaLog {
                    hi_factor,
                    decades,
                    points,
                } => {
                    if *points < 1 || !(*hi_factor > 0.0) || !(*decades > 0.0) {
                        return Err(Error::invalid("malformed per-theta sigma rule"));
                    }
                    let hi = hi_factor * theta;
                    let lo = hi * (10.0f64).powf(-decades);
                    (0..*points)
                        .map(|k| lo * (hi / lo).powf(k as f64 / (*points as f64 - 1.0).max(1.0)))
                        .collect()
                }
            };
            let epss: Vec<f64> = match &self.eps_rule {
                EpsRule::FixedList { values } => {
                    if values.len() != sigmas.len() {
                        return Err(Error::invalid(
                            "eps fixed list must match the sigma list length",
                        ));
                    }
                    values.clone()
                }
                EpsRule::Proportional { kappa } => {
                    if !(*kappa > 0.0 && *kappa < 1.0 / SQRT2_PI) {
                        return Err(Error::invalid(format!(
                            "proportional eps rule needs 0 < kappa < 1/(sqrt(2) pi) = {:.4}, got {kappa}",
                            1.0 / SQRT2_PI
                        )));
                    }
                    sigmas.iter().map(|s| kappa * s).collect()
                }
            };
            for (s, e) in sigmas.iter().zip(epss.iter()) {
                out.push(ScalingParams::new(*s, theta, *e)?);
            }
        }
        Ok(out)
    }

    /// Default grid for a triple: resolve the mollifier (`h <= eps/8`) but
    /// stay desk-scale.
    pub fn grid_n_for(&self, p: &ScalingParams) -> usize {
        match self.grid_n {
            Some(n) => n,
            None => {
                let want = (8.0 / p.eps).ceil() as usize;
                want.clamp(256, 2048)
            }
        }
    }
}

/// One sweep row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sigma: f64,
    pub theta: f64,
    pub eps: f64,
    pub competitor: String,
    pub energy_kind: String,
    pub bulk: f64,
    pub regularizer: f64,
    pub total: f64,
    pub s_value: f64,
    pub ratio: f64,
    pub grid_n: usize,
    pub runtime_ms: u64,
}

/// A parameter point a builder refused, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedPoint {
    pub sigma: f64,
    pub theta: f64,
    pub eps: f64,
    pub competitor: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkippedPoint>,
}

fn build_competitor(kind: CompetitorKind, p: &ScalingParams, g: &GridSpec) -> Result<Competitor> {
    match kind {
        CompetitorKind::Uniform => build_uniform(p, g),
        CompetitorKind::Branching => best_branching(p, g),
        CompetitorKind::VortexArray => build_vortex_array(p, g),
    }
}

/// Run the sweep: build every requested competitor at every triple, check
/// admissibility, evaluate every requested energy, and append min-over-
/// competitor rows labelled `best`. Regime and grid refusals become skipped
/// points, not failures. Points are processed in parallel; output order is
/// the deterministic config order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let triples = cfg.triples()?;
    if cfg.competitors.is_empty() || cfg.energies.is_empty() {
        return Ok(SweepOutcome::default());
    }

    use rayon::prelude::*;
    let per_point: Vec<(Vec<SweepRecord>, Vec<SkippedPoint>)> =
        triples.par_iter().map(|p| sweep_point(cfg, p)).collect();

    let mut out = SweepOutcome::default();
    for (recs, skips) in per_point {
        out.records.extend(recs);
        out.skipped.extend(skips);
    }
    Ok(out)
}

fn sweep_point(cfg: &SweepConfig, p: &ScalingParams) -> (Vec<SweepRecord>, Vec<SkippedPoint>) {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let n = cfg.grid_n_for(p);
    let g = match GridSpec::unit(n) {
        Ok(g) => g,
        Err(e) => {
            for kind in &cfg.competitors {
                skipped.push(SkippedPoint {
                    sigma: p.sigma,
                    theta: p.theta,
                    eps: p.eps,
                    competitor: kind.as_str().to_string(),
                    reason: e.to_string(),
                });
            }
            return (records, skipped);
        }
    };
    let s_value = scaling_s(p);

    // per energy kind: the running minimum for the "best" row
    let mut best: Vec<Option<SweepRecord>> = vec![None; cfg.energies.len()];

    for kind in &cfg.competitors {
        let t0 = std::time::Instant::now();
        let built = build_competitor(*kind, p, &g);
        let c = match built {
            Ok(c) => c,
            Err(e) => {
                skipped.push(SkippedPoint {
                    sigma: p.sigma,
                    theta: p.theta,
                    eps: p.eps,
                    competitor: kind.as_str().to_string(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let tol = c.trace_tol.max(c.curl_tol);
        let rep = admissibility_report(&c, tol);
        if !rep.pass {
            skipped.push(SkippedPoint {
                sigma: p.sigma,
                theta: p.theta,
                eps: p.eps,
                competitor: kind.as_str().to_string(),
                reason: format!(
                    "admissibility failed: trace {:.3e}, curl {:.3e}, tol {:.3e}",
                    rep.max_trace_deviation, rep.curl_residual, tol
                ),
            });
            continue;
        }
        for (ei, ek) in cfg.energies.iter().enumerate() {
            let e = match energy(*ek, &c.field, p.sigma, &g.domain()) {
                Ok(e) => e,
                Err(err) => {
                    skipped.push(SkippedPoint {
                        sigma: p.sigma,
                        theta: p.theta,
                        eps: p.eps,
                        competitor: kind.as_str().to_string(),
                        reason: err.to_string(),
                    });
                    continue;
                }
            };
            let runtime_ms = if cfg.record_runtime {
                t0.elapsed().as_millis() as u64
            } else {
                0
            };
            let rec = SweepRecord {
                sigma: p.sigma,
                theta: p.theta,
                eps: p.eps,
                competitor: kind.as_str().to_string(),
                energy_kind: ek.as_str().to_string(),
                bulk: e.bulk,
                regularizer: e.regularizer,
                total: e.total,
                s_value,
                ratio: e.total / s_value,
                grid_n: n,
                runtime_ms,
            };
            match &best[ei] {
                Some(b) if b.total <= rec.total => {}
                _ => best[ei] = Some(rec.clone()),
            }
            records.push(rec);
        }
    }
    for b in best.into_iter().flatten() {
        let mut b = b;
        b.competitor = "best".to_string();
        records.push(b);
    }
    (records, skipped)
}

/// Least-squares fit of `ln(y)` against `ln(x)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_points: usize,
}

/// Record field accessor by CSV column name.
fn record_field(r: &SweepRecord, name: &str) -> Result<f64> {
    Ok(match name {
        "sigma" => r.sigma,
        "theta" => r.theta,
        "eps" => r.eps,
        "bulk" => r.bulk,
        "regularizer" => r.regularizer,
        "total" => r.total,
        "s_value" => r.s_value,
        "ratio" => r.ratio,
        other => {
            return Err(Error::Data(format!(
                "unknown numeric field '{other}' for fitting"
            )))
        }
    })
}

/// Fit a log-log line through the records' `(x_field, y_field)` pairs.
pub fn fit_loglog(records: &[SweepRecord], x_field: &str, y_field: &str) -> Result<FitResult> {
    if records.len() < 3 {
        return Err(Error::Data(format!(
            "log-log fit needs >= 3 records, got {}",
            records.len()
        )));
    }
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for r in records {
        let x = record_field(r, x_field)?;
        let y = record_field(r, y_field)?;
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Data(format!(
                "log-log fit needs positive values, got ({x}, {y})"
            )));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::Data("log-log fit needs spread in x".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let stderr = if records.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        n_points: records.len(),
    })
}

/// Geometry for the inequality rows; fields default from the measure when
/// omitted.
#[derive(Debug, Clone, Copy)]
pub struct InequalityGeometry {
    /// Center of the annulus rows; defaults to the first atom.
    pub annulus_center: Option<Point>,
    pub annulus_r: Option<f64>,
    pub annulus_big_r: Option<f64>,
    pub elliptic_inner: Rect,
    pub elliptic_outer: Rect,
}

impl Default for InequalityGeometry {
    fn default() -> Self {
        InequalityGeometry {
            annulus_center: None,
            annulus_r: None,
            annulus_big_r: None,
            elliptic_inner: Rect::new(0.3, 0.3, 0.7, 0.7),
            elliptic_outer: Rect::new(0.1, 0.1, 0.9, 0.9),
        }
    }
}

/// One evaluated inequality: measured left-hand side, the right-hand shape
/// (the bound with its unknown universal constant set to 1), and the ratio.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityRow {
    pub name: String,
    pub lhs: f64,
    pub rhs_shape: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
}

/// Evaluate both sides of the testable lower-bound inequalities on a field:
/// per-atom core energies, the annulus bound, the pure-variation annulus
/// bound, and the full-gradient elliptic control on nested rectangles.
/// Universal constants are reported as output ratios, never inputs.
pub fn inequality_report(
    f: &VectorField2D,
    mu: &VorticityMeasure,
    p: &ScalingParams,
    geom: &InequalityGeometry,
) -> Result<InequalityReport> {
    require_admissible(f, mu)?;
    let dom = f.spec().domain();
    let mut rows = Vec::new();

    // vortex-core rows: int_{B_eps} W vs sigma^4/eps^2
    if !mu.is_empty() {
        let ratios = vortex_core_ratio(f, mu)?;
        let scale = p.sigma.powi(4) / (p.eps * p.eps);
        for (k, r) in ratios.iter().enumerate() {
            rows.push(InequalityRow {
                name: format!("vortex_core[{k}]"),
                lhs: r * scale,
                rhs_shape: scale,
                ratio: Some(*r),
            });
        }
    }

    // annulus rows around one atom (or the supplied center)
    let center = geom
        .annulus_center
        .or_else(|| mu.atoms().first().map(|a| a.center));
    if let Some(center) = center {
        let r = geom.annulus_r.unwrap_or(2.0 * p.eps);
        let big_r = geom.annulus_big_r.unwrap_or_else(|| {
            let border = dom.dist_to_boundary(&center);
            let nearest_other = mu
                .atoms()
                .iter()
                .map(|a| a.center.dist(&center))
                .filter(|d| *d > 1e-15)
                .fold(f64::INFINITY, f64::min);
            (0.9 * border).min(0.45 * nearest_other).min(8.0 * r)
        });
        if !(big_r > 1.5 * r) {
            return Err(Error::geometry(format!(
                "annulus rows need R > 1.5 r, got r = {r}, R = {big_r}"
            )));
        }
        if dom.dist_to_boundary(&center) < big_r {
            return Err(Error::geometry("annulus extends outside the domain"));
        }
        // enclosed curl mass and absence of atoms inside the annulus
        let mut enclosed = 0.0;
        for a in mu.atoms() {
            let d = a.center.dist(&center);
            if d + p.eps / 4.0 <= r {
                enclosed += a.gamma as f64 * mu.sigma();
            } else if d - p.eps / 4.0 <= big_r {
                return Err(Error::geometry(
                    "annulus rows need a curl-free annulus (atom support intersects it)",
                ));
            }
        }
        let log_ratio = (big_r / r).ln();
        let e1 = annulus_energy(EnergyKind::E1, f, p.sigma, &center, r, big_r)?;
        let shape = p.sigma * enclosed.abs() * log_ratio;
        rows.push(InequalityRow {
            name: "annulus_energy".into(),
            lhs: e1.total,
            rhs_shape: shape,
            ratio: if shape > 0.0 {
                Some(e1.total / shape)
            } else {
                None
            },
        });
        let tv = annulus_tv(f, &center, r, big_r)?;
        let tv_shape = enclosed.abs() * log_ratio;
        rows.push(InequalityRow {
            name: "annulus_tv".into(),
            lhs: tv,
            rhs_shape: tv_shape,
            ratio: if tv_shape > 0.0 {
                Some(tv / tv_shape)
            } else {
                None
            },
        });
    }

    // elliptic row: full gradient L2 on the inner rectangle vs the
    // anisotropic derivatives + A^-2 |beta|^2 + |curl|^2 on the outer one
    let inner = geom.elliptic_inner;
    let outer = geom.elliptic_outer;
    let a_gap = outer.boundary_gap(&inner);
    if a_gap <= 0.0 || !dom.contains_rect(&outer) {
        return Err(Error::geometry(
            "elliptic row needs inner strictly inside outer inside the domain",
        ));
    }
    let (lhs, rhs) = elliptic_sides(f, &inner, &outer, a_gap)?;
    rows.push(InequalityRow {
        name: "elliptic_gradient".into(),
        lhs,
        rhs_shape: rhs,
        ratio: if rhs > 0.0 { Some(lhs / rhs) } else { None },
    });

    Ok(InequalityReport { rows })
}

fn elliptic_sides(f: &VectorField2D, inner: &Rect, outer: &Rect, a_gap: f64) -> Result<(f64, f64)> {
    let spec = f.spec();
    let n = spec.n();
    let h = spec.h();
    let mut grad2_inner = 0.0;
    let mut aniso_outer = 0.0;
    let mut l2_outer = 0.0;
    for j in 0..n {
        for i in 0..n {
            let c = spec.center(i, j);
            let v = f.get(i, j);
            if outer.contains_point(&c) {
                l2_outer += h * h * (v[0] * v[0] + v[1] * v[1]);
            }
            if i + 1 < n {
                let w = f.get(i + 1, j);
                let (d0, d1) = ((w[0] - v[0]) / h, (w[1] - v[1]) / h);
                if inner.contains_point(&c) {
                    grad2_inner += h * h * (d0 * d0 + d1 * d1);
                }
                if outer.contains_point(&c) {
                    aniso_outer += h * h * d0 * d0;
                }
            }
            if j + 1 < n {
                let w = f.get(i, j + 1);
                let (d0, d1) = ((w[0] - v[0]) / h, (w[1] - v[1]) / h);
                if inner.contains_point(&c) {
                    grad2_inner += h * h * (d0 * d0 + d1 * d1);
                }
                if outer.contains_point(&c) {
                    aniso_outer += h * h * d1 * d1;
                }
            }
        }
    }
    let mut curl2_outer = 0.0;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let c = Point::new(
                spec.domain().x0 + (i as f64 + 1.0) * h,
                spec.domain().y0 + (j as f64 + 1.0) * h,
            );
            if outer.contains_point(&c) {
                let circ = cell_circulation(f, i, j)?;
                let curl = circ / (h * h);
                curl2_outer += h * h * curl * curl;
            }
        }
    }
    Ok((
        grad2_inner,
        aniso_outer + l2_outer / (a_gap * a_gap) + curl2_outer,
    ))
}

/// Render a float with 17 significant digits (round-trip exact for f64).
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const CSV_HEADER: &str =
    "sigma,theta,eps,competitor,energy_kind,bulk,regularizer,total,s_value,ratio,grid_n,runtime_ms";

/// Serialize records to CSV (bit-specified header and float rendering).
pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.sigma),
            fmt_f64(r.theta),
            fmt_f64(r.eps),
            r.competitor,
            r.energy_kind,
            fmt_f64(r.bulk),
            fmt_f64(r.regularizer),
            fmt_f64(r.total),
            fmt_f64(r.s_value),
            fmt_f64(r.ratio),
            r.grid_n,
            r.runtime_ms
        ));
    }
    out
}

/// Serialize records to a JSON array with the same field names and float
/// rendering as the CSV.
pub fn to_json(records: &[SweepRecord]) -> String {
    let mut out = String::from("[\n");
    for (k, r) in records.iter().enumerate() {
        out.push_str(&format!(
            "  {{\"sigma\": {}, \"theta\": {}, \"eps\": {}, \"competitor\": \"{}\", \
             \"energy_kind\": \"{}\", \"bulk\": {}, \"regularizer\": {}, \"total\": {}, \
             \"s_value\": {}, \"ratio\": {}, \"grid_n\": {}, \"runtime_ms\": {}}}{}\n",
            fmt_f64(r.sigma),
            fmt_f64(r.theta),
            fmt_f64(r.eps),
            r.competitor,
            r.energy_kind,
            fmt_f64(r.bulk),
            fmt_f64(r.regularizer),
            fmt_f64(r.total),
            fmt_f64(r.s_value),
            fmt_f64(r.ratio),
            r.grid_n,
            r.runtime_ms,
            if k + 1 < records.len() { "," } else { "" }
        ));
    }
    out.push_str("]\n");
    out
}

/// Write records to `path` in the requested format.
pub fn emit(records: &[SweepRecord], format: OutputFormat, path: &str) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::Json => to_json(records),
    };
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    file.write_all(body.as_bytes())
        .map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
    Ok(())
}

/// Parse records back from the JSON emitted by [`to_json`].
pub fn records_from_json(text: &str) -> Result<Vec<SweepRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Data(format!("bad records JSON: {e}")))
}
