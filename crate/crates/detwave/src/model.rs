//! Model definition: convex flux, bump-type ignition function, and scalar
//! parameters (heat release `q`, reaction rate `k`), with validation.
//!
//! The governing system couples a viscous conservation law for the
//! gas-dynamical variable `u` with a reactant fraction `z` consumed at rate
//! `k*phi(u)*z`. Everything downstream (wave construction, spectral work,
//! Riemann solutions, time stepping) consumes a [`ValidatedConfig`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sample points used when validating flux convexity on a grid.
pub const FLUX_VALIDATION_GRID: usize = 1000;

/// Convex flux `f(u)` with `f' > 0`, `f'' > 0` on its domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FluxSpec {
    /// `f(u) = u^2 / 2`, restricted to `u > 0` so that `f' > 0`.
    Burgers,
    /// `f(u) = exp(u)`, valid on the whole line.
    Exponential,
    /// User-supplied monotone-convex C^2 cubic spline through `(x_i, f_i)`
    /// knots, with analytic first and second derivatives.
    TabulatedCubic { knots_x: Vec<f64>, knots_f: Vec<f64> },
}

impl FluxSpec {
    /// Lower domain bound (exclusive for Burgers, knot range for splines).
    pub fn domain(&self) -> (f64, f64) {
        match self {
            FluxSpec::Burgers => (0.0, f64::INFINITY),
            FluxSpec::Exponential => (f64::NEG_INFINITY, f64::INFINITY),
            FluxSpec::TabulatedCubic { knots_x, .. } => (
                knots_x.first().copied().unwrap_or(f64::NAN),
                knots_x.last().copied().unwrap_or(f64::NAN),
            ),
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        let (lo, hi) = self.domain();
        match self {
            FluxSpec::Burgers => u > lo,
            FluxSpec::Exponential => true,
            FluxSpec::TabulatedCubic { .. } => u >= lo && u <= hi,
        }
    }
}

/// Flux value and its first two derivatives at `u`.
pub fn flux_eval(flux: &FluxSpec, u: f64) -> Result<(f64, f64, f64)> {
    if !flux.contains(u) {
        return Err(Error::Domain(format!(
            "u = {u} outside flux domain {:?}",
            flux.domain()
        )));
    }
    Ok(match flux {
        FluxSpec::Burgers => (0.5 * u * u, u, 1.0),
        FluxSpec::Exponential => {
            let e = u.exp();
            (e, e, e)
        }
        FluxSpec::TabulatedCubic { knots_x, knots_f } => {
            spline_eval(knots_x, knots_f, u)?
        }
    })
}

/// Natural cubic spline evaluation with analytic derivatives.
///
/// Second-derivative knot values come from the standard tridiagonal system;
/// convexity of the result is checked by `validate_config`, not here.
fn spline_eval(xs: &[f64], fs: &[f64], u: f64) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 3 || fs.len() != n {
        return Err(Error::Validation(vec![
            "tabulated flux needs at least 3 knots with matching values".into(),
        ]));
    }
    let m = spline_second_derivatives(xs, fs);
    // Locate the containing interval.
    let i = match xs.binary_search_by(|x| x.partial_cmp(&u).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    let h = xs[i + 1] - xs[i];
    let a = (xs[i + 1] - u) / h;
    let b = (u - xs[i]) / h;
    let f = a * fs[i]
        + b * fs[i + 1]
        + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    let fp = (fs[i + 1] - fs[i]) / h
        + ((3.0 * b * b - 1.0) * m[i + 1] - (3.0 * a * a - 1.0) * m[i]) * h / 6.0;
    let fpp = a * m[i] + b * m[i + 1];
    Ok((f, fp, fpp))
}

fn spline_second_derivatives(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    // Thomas algorithm on the interior rows; natural ends (m = 0).
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let rhs = 6.0 * ((fs[i + 1] - fs[i]) / h1 - (fs[i] - fs[i - 1]) / h0);
        let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

/// Ignition function shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IgnitionMode {
    /// Quartic bump `amplitude * [(u - u_i)(u_sup - u)]_+^2 * (2/(u_sup - u_i))^4`,
    /// C^1, vanishing outside the band, peak equal to `amplitude` at midband.
    PolynomialBump,
    /// Ignition thresholds derived from a concave temperature map
    /// `T(u) = -gamma M^2 u^2 + (gamma M^2 + 1) u` cut at temperature `t_i`;
    /// the band endpoints are the two roots of `T(u) = t_i`.
    ZndTemperature { mach: f64, gamma_gas: f64, t_i: f64 },
}

/// Ignition window and amplitude. `phi(u) = 0` outside `(u_i, u_sup)` and
/// `phi > 0` strictly inside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IgnitionSpec {
    pub u_i: f64,
    pub u_sup: f64,
    pub amplitude: f64,
    #[serde(flatten)]
    pub mode: IgnitionMode,
}

impl IgnitionSpec {
    pub fn bump(u_i: f64, u_sup: f64, amplitude: f64) -> Self {
        IgnitionSpec {
            u_i,
            u_sup,
            amplitude,
            mode: IgnitionMode::PolynomialBump,
        }
    }

    /// Build a ZND-temperature ignition spec; the band `(u_i, u_sup)` is
    /// solved from `T(u) = t_i` and must give two distinct real roots.
    pub fn znd(mach: f64, gamma_gas: f64, t_i: f64, amplitude: f64) -> Result<Self> {
        if !(0.0 < mach && mach < 1.0) {
            return Err(Error::Validation(vec![format!(
                "Mach number must lie in (0,1), got {mach}"
            )]));
        }
        if gamma_gas <= 1.0 {
            return Err(Error::Validation(vec![format!(
                "gas constant must exceed 1, got {gamma_gas}"
            )]));
        }
        let a = gamma_gas * mach * mach;
        // -a u^2 + (a+1) u - t_i = 0
        let disc = (a + 1.0) * (a + 1.0) - 4.0 * a * t_i;
        if disc <= 0.0 {
            return Err(Error::Validation(vec![
                "temperature map never reaches the ignition temperature at two points".into(),
            ]));
        }
        let sq = disc.sqrt();
        let u_i = ((a + 1.0) - sq) / (2.0 * a);
        let u_sup = ((a + 1.0) + sq) / (2.0 * a);
        Ok(IgnitionSpec {
            u_i,
            u_sup,
            amplitude,
            mode: IgnitionMode::ZndTemperature { mach, gamma_gas, t_i },
        })
    }

    /// Temperature map of the ZND mode, with derivative.
    pub fn temperature(&self, u: f64) -> Option<(f64, f64)> {
        match &self.mode {
            IgnitionMode::PolynomialBump => None,
            IgnitionMode::ZndTemperature { mach, gamma_gas, .. } => {
                let a = gamma_gas * mach * mach;
                Some((-a * u * u + (a + 1.0) * u, -2.0 * a * u + (a + 1.0)))
            }
        }
    }
}

/// `(phi, phi')` at `u`. Exactly zero (both components) outside the band.
pub fn ignition_eval(ignition: &IgnitionSpec, u: f64) -> (f64, f64) {
    let (u_i, u_sup) = (ignition.u_i, ignition.u_sup);
    if u <= u_i || u >= u_sup {
        return (0.0, 0.0);
    }
    match &ignition.mode {
        IgnitionMode::PolynomialBump => {
            let scale = 2.0 / (u_sup - u_i);
            let scale4 = scale.powi(4);
            let g = (u - u_i) * (u_sup - u);
            let gp = u_i + u_sup - 2.0 * u;
            (
                ignition.amplitude * g * g * scale4,
                ignition.amplitude * 2.0 * g * gp * scale4,
            )
        }
        IgnitionMode::ZndTemperature { t_i, .. } => {
            // phi = amplitude * ((T - t_i)/(T_max - t_i))^2 inside the band.
            let (t, tp) = ignition.temperature(u).expect("znd mode");
            let (t_mid, _) = ignition
                .temperature(0.5 * (u_i + u_sup))
                .expect("znd mode");
            let span = t_mid - t_i;
            let w = (t - t_i) / span;
            (
                ignition.amplitude * w * w,
                ignition.amplitude * 2.0 * w * tp / span,
            )
        }
    }
}

/// Full model instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub flux: FluxSpec,
    pub ignition: IgnitionSpec,
    /// Heat release, > 0 (exothermic).
    pub q: f64,
    /// Reaction rate, > 0.
    pub k: f64,
}

fn default_schema_version() -> u32 {
    1
}

impl Default for ModelConfig {
    /// The default Burgers instance used throughout the tests and docs:
    /// ignition band (0.5, 2.5) with unit amplitude, q = 0.5, k = 1.
    fn default() -> Self {
        ModelConfig {
            schema_version: 1,
            flux: FluxSpec::Burgers,
            ignition: IgnitionSpec::bump(0.5, 2.5, 1.0),
            q: 0.5,
            k: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }
}

/// A config that passed `validate_config`. All numerical routines take this.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidatedConfig(ModelConfig);

impl std::ops::Deref for ValidatedConfig {
    type Target = ModelConfig;
    fn deref(&self) -> &ModelConfig {
        &self.0
    }
}

impl ValidatedConfig {
    /// Flux triple `(f, f', f'')`; panics only on domain violations already
    /// guarded by callers, so exposes the checked variant too.
    pub fn flux(&self, u: f64) -> Result<(f64, f64, f64)> {
        flux_eval(&self.0.flux, u)
    }

    /// `f(u)` alone.
    pub fn f(&self, u: f64) -> Result<f64> {
        Ok(self.flux(u)?.0)
    }

    /// Characteristic speed `a(u) = f'(u)`.
    pub fn a(&self, u: f64) -> Result<f64> {
        Ok(self.flux(u)?.1)
    }

    pub fn phi(&self, u: f64) -> f64 {
        ignition_eval(&self.0.ignition, u).0
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        ignition_eval(&self.0.ignition, u).1
    }

    pub fn ignition_band(&self) -> (f64, f64) {
        (self.0.ignition.u_i, self.0.ignition.u_sup)
    }

    pub fn into_inner(self) -> ModelConfig {
        self.0
    }
}

/// Check every model invariant; on success return the normalized config.
///
/// Violations are accumulated so a bad config reports everything at once.
pub fn validate_config(cfg: ModelConfig) -> Result<ValidatedConfig> {
    let mut violations = Vec::new();

    if !(cfg.q > 0.0) {
        violations.push(format!("q must be positive, got {}", cfg.q));
    }
    if !(cfg.k > 0.0) {
        violations.push(format!("k must be positive, got {}", cfg.k));
    }
    if !(cfg.ignition.u_sup > cfg.ignition.u_i) {
        violations.push(format!(
            "ignition band empty: u_i = {} >= u_sup = {}",
            cfg.ignition.u_i, cfg.ignition.u_sup
        ));
    }
    if !(cfg.ignition.amplitude > 0.0) {
        violations.push(format!(
            "ignition amplitude must be positive, got {}",
            cfg.ignition.amplitude
        ));
    }

    // Convexity on a validation grid. Analytic kinds satisfy this by
    // construction; the grid check is what certifies tabulated fluxes.
    let (lo, hi) = cfg.flux.domain();
    let (grid_lo, grid_hi) = match cfg.flux {
        FluxSpec::Burgers => (1e-6, cfg.ignition.u_sup.max(1.0) * 4.0),
        FluxSpec::Exponential => (-10.0, cfg.ignition.u_sup.max(1.0) * 2.0),
        FluxSpec::TabulatedCubic { .. } => (lo, hi),
    };
    let mut convex_ok = true;
    for j in 0..FLUX_VALIDATION_GRID {
        let t = (j as f64 + 0.5) / FLUX_VALIDATION_GRID as f64;
        let u = grid_lo + t * (grid_hi - grid_lo);
        match flux_eval(&cfg.flux, u) {
            Ok((_, fp, fpp)) => {
                if !(fp > 0.0 && fpp > 0.0) {
                    convex_ok = false;
                }
            }
            Err(_) => convex_ok = false,
        }
    }
    if !convex_ok {
        violations.push("flux is not strictly increasing and convex on its domain".into());
    }

    // C^1 matching at the band edges: one-sided difference quotients of phi
    // must vanish to tolerance relative to the bump scale.
    if cfg.ignition.u_sup > cfg.ignition.u_i && cfg.ignition.amplitude > 0.0 {
        let width = cfg.ignition.u_sup - cfg.ignition.u_i;
        let tol = 1e-6 * cfg.ignition.amplitude / width;
        let h = 1e-8 * width;
        for edge in [cfg.ignition.u_i, cfg.ignition.u_sup] {
            let inward = if edge == cfg.ignition.u_i { h } else { -h };
            let (phi_in, _) = ignition_eval(&cfg.ignition, edge + inward);
            let slope = phi_in / h;
            if slope.abs() > tol {
                violations.push(format!(
                    "ignition function is not C^1 at u = {edge}: one-sided slope {slope:e}"
                ));
            }
        }
    }

    // ZND mode: band endpoints must sit on the ignition isotherm.
    if let IgnitionMode::ZndTemperature { t_i, .. } = &cfg.ignition.mode {
        for edge in [cfg.ignition.u_i, cfg.ignition.u_sup] {
            let (t, _) = cfg.ignition.temperature(edge).expect("znd mode");
            if (t - t_i).abs() > 1e-12 * t_i.abs().max(1.0) {
                violations.push(format!(
                    "temperature at band edge u = {edge} is {t}, expected {t_i}"
                ));
            }
        }
    }

    if violations.is_empty() {
        Ok(ValidatedConfig(cfg))
    } else {
        Err(Error::Validation(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> ValidatedConfig {
        validate_config(ModelConfig::default()).unwrap()
    }

    #[test]
    fn burgers_closed_form() {
        let (f, fp, fpp) = flux_eval(&FluxSpec::Burgers, 2.0).unwrap();
        assert_eq!((f, fp, fpp), (2.0, 2.0, 1.0));
        assert!(matches!(
            flux_eval(&FluxSpec::Burgers, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exponential_at_zero() {
        let (f, fp, fpp) = flux_eval(&FluxSpec::Exponential, 0.0).unwrap();
        assert_eq!((f, fp, fpp), (1.0, 1.0, 1.0));
    }

    #[test]
    fn bump_vanishes_below_ignition() {
        let ig = IgnitionSpec::bump(0.5, 2.5, 1.0);
        assert_eq!(ignition_eval(&ig, 0.2), (0.0, 0.0));
        assert_eq!(ignition_eval(&ig, 0.5), (0.0, 0.0));
        assert_eq!(ignition_eval(&ig, 2.5), (0.0, 0.0));
    }

    #[test]
    fn bump_peaks_at_midpoint_with_zero_slope() {
        // phi = [(u-0.5)(2.5-u)]^2 at u = 1.5 is exactly 1 with phi' = 0.
        let ig = IgnitionSpec::bump(0.5, 2.5, 1.0);
        let (phi, dphi) = ignition_eval(&ig, 1.5);
        assert!((phi - 1.0).abs() < 1e-15);
        assert!(dphi.abs() < 1e-15);
    }

    #[test]
    fn bump_derivative_matches_central_difference() {
        let ig = IgnitionSpec::bump(0.5, 2.5, 0.7);
        let h = 1e-6;
        for j in 0..40 {
            let u = 0.6 + 1.8 * j as f64 / 39.0;
            let (_, dphi) = ignition_eval(&ig, u);
            let fd = (ignition_eval(&ig, u + h).0 - ignition_eval(&ig, u - h).0) / (2.0 * h);
            assert!(
                (dphi - fd).abs() <= 1e-6 * dphi.abs().max(1.0),
                "u={u}: {dphi} vs fd {fd}"
            );
        }
    }

    #[test]
    fn bump_nonnegative_and_supported_on_band() {
        let ig = IgnitionSpec::bump(0.5, 2.5, 1.0);
        for j in 0..2000 {
            let u = -1.0 + 5.0 * j as f64 / 1999.0;
            let (phi, _) = ignition_eval(&ig, u);
            assert!(phi >= 0.0);
            let inside = u > 0.5 && u < 2.5;
            assert_eq!(phi > 0.0, inside, "u = {u}");
        }
    }

    #[test]
    fn znd_band_sits_on_isotherm_and_is_concave() {
        let ig = IgnitionSpec::znd(0.5, 1.4, 0.21, 1.0).unwrap();
        let (t_lo, _) = ig.temperature(ig.u_i).unwrap();
        let (t_hi, _) = ig.temperature(ig.u_sup).unwrap();
        assert!((t_lo - 0.21).abs() < 1e-12);
        assert!((t_hi - 0.21).abs() < 1e-12);
        // T'' = -2 gamma M^2 < 0.
        let a = 1.4 * 0.25;
        let h = 1e-4;
        let (t0, _) = ig.temperature(1.0 - h).unwrap();
        let (t1, _) = ig.temperature(1.0).unwrap();
        let (t2, _) = ig.temperature(1.0 + h).unwrap();
        let second = (t0 - 2.0 * t1 + t2) / (h * h);
        assert!((second + 2.0 * a).abs() < 1e-6);

        let cfg = validate_config(ModelConfig {
            ignition: ig,
            ..ModelConfig::default()
        })
        .unwrap();
        let (phi_mid, _) = ignition_eval(&cfg.ignition, 0.5 * (cfg.ignition.u_i + cfg.ignition.u_sup));
        assert!((phi_mid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_config_validates() {
        let cfg = p0();
        assert_eq!(cfg.q, 0.5);
        assert_eq!(cfg.k, 1.0);
    }

    #[test]
    fn negative_q_rejected() {
        let bad = ModelConfig {
            q: -0.1,
            ..ModelConfig::default()
        };
        match validate_config(bad) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|m| m.contains("q must be positive")))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn inverted_band_rejected() {
        let bad = ModelConfig {
            ignition: IgnitionSpec::bump(2.5, 0.5, 1.0),
            ..ModelConfig::default()
        };
        assert!(matches!(validate_config(bad), Err(Error::Validation(_))));
    }

    #[test]
    fn flux_convexity_on_random_points() {
        let cfg = p0();
        let mut state = 0x243f6a8885a308d3u64;
        for _ in 0..1000 {
            // xorshift, domain (0, 10]
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = 10.0 * ((state >> 11) as f64 / (1u64 << 53) as f64) + 1e-9;
            let (_, fp, fpp) = cfg.flux(u).unwrap();
            assert!(fp > 0.0 && fpp > 0.0);
        }
    }

    #[test]
    fn tabulated_cubic_tracks_its_generator() {
        // Knots sampled from a convex function; spline must stay increasing
        // and convex on the grid check, and match values at the knots.
        let xs: Vec<f64> = (0..25).map(|i| 0.2 + 0.2 * i as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| x * x * 0.5 + 0.1 * x).collect();
        let flux = FluxSpec::TabulatedCubic {
            knots_x: xs.clone(),
            knots_f: fs.clone(),
        };
        let (f, fp, _) = flux_eval(&flux, 2.0).unwrap();
        assert!((f - (2.0 + 0.2)).abs() < 2e-3);
        assert!((fp - 2.1).abs() < 2e-2);
        let cfg = validate_config(ModelConfig {
            flux,
            ignition: IgnitionSpec::bump(0.5, 2.5, 1.0),
            ..ModelConfig::default()
        });
        assert!(cfg.is_ok(), "{cfg:?}");
    }
}
