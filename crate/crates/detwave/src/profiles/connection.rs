//! The connection problem: heteroclinic orbits of the traveling-wave ODE.
//!
//! The planar system is
//!
//! ```text
//! u' = F(u, z) = f(u) - f(u_+) - s (u - u_+) - s q (z - 1)
//! z' = G(u, z) = (k/s) phi(u) z
//! ```
//!
//! anchored at the burned-side right state `(u_+, 1)`. Weak detonations are
//! shot forward along the unstable manifold of the saddle `(u_-, 0)`; the
//! reactant level at which that orbit first reaches the ignition threshold
//! defines the separation function `d = zhat - 1`, whose roots are the weak
//! detonation speeds. Strong detonations are traced backward from the
//! attracting side. All profiles are translation-normalized so that `u`
//! crosses the endstate midpoint at `x = 0` and resampled onto a uniform
//! grid suitable for quadrature and finite-difference residual checks.

use serde::{Deserialize, Serialize};

use super::endstates::{rh_states, RhBranch, WaveClass, WaveSpec};
use crate::error::{Error, Result};
use crate::model::ValidatedConfig;
use crate::ode::{integrate_to_points, integrate_with_event, EventOutcome, OdeOptions};

/// Truncation and resolution policy for profile construction.
#[derive(Debug, Clone)]
pub struct LPolicy {
    /// Endstate proximity demanded at the truncation points.
    pub delta_tail: f64,
    /// Launch offset along the relevant eigendirection, relative to the
    /// wave amplitude.
    pub launch_offset: f64,
    /// Half-length cap expressed as `rate_cap / min decay rate`.
    pub rate_cap: f64,
    /// Target grid spacing times the fastest decay rate.
    pub h_per_rate: f64,
    /// Hard ceiling on the number of grid points.
    pub max_points: usize,
    /// Backward-trace stopping distance for degenerate deflagrations.
    pub degenerate_stop: f64,
    /// Degenerate tails are truncated at this multiple of the exponential
    /// side's length.
    pub defl_tail_factor: f64,
    /// Integrator tolerances for shooting.
    pub rtol: f64,
    pub atol: f64,
}

impl Default for LPolicy {
    fn default() -> Self {
        LPolicy {
            delta_tail: 1e-8,
            launch_offset: 1e-7,
            rate_cap: 200.0,
            h_per_rate: 0.02,
            max_points: 4_000_000,
            degenerate_stop: 1e-6,
            defl_tail_factor: 10.0,
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl LPolicy {
    fn opts(&self) -> OdeOptions {
        OdeOptions::with_tol(self.rtol, self.atol)
    }
}

/// Traveling-wave vector field anchored at the burned right state.
#[derive(Clone)]
pub(crate) struct Field<'a> {
    cfg: &'a ValidatedConfig,
    pub u_plus: f64,
    pub s: f64,
    f_plus: f64,
}

impl<'a> Field<'a> {
    pub fn new(cfg: &'a ValidatedConfig, u_plus: f64, s: f64) -> Result<Self> {
        Ok(Field {
            cfg,
            u_plus,
            s,
            f_plus: cfg.f(u_plus)?,
        })
    }

    /// `F(u, z)`, the `u`-component of the field (zero on the nullcline).
    pub fn f_comp(&self, u: f64, z: f64) -> f64 {
        let f_u = self.cfg.f(u).unwrap_or(f64::NAN);
        f_u - self.f_plus - self.s * (u - self.u_plus) - self.s * self.cfg.q * (z - 1.0)
    }

    pub fn g_comp(&self, u: f64, z: f64) -> f64 {
        (self.cfg.k / self.s) * self.cfg.phi(u) * z
    }

    pub fn rhs(&self, y: &[f64; 2]) -> [f64; 2] {
        [self.f_comp(y[0], y[1]), self.g_comp(y[0], y[1])]
    }

    /// Scalar field on a frozen-reactant line `z = z0`.
    pub fn scalar_rhs(&self, u: f64, z0: f64) -> f64 {
        self.f_comp(u, z0)
    }
}

/// Outcome of the unstable-manifold shot for a weak-branch left state.
#[derive(Debug, Clone)]
pub(crate) struct Shot {
    pub u_minus: f64,
    /// Reactant level where the orbit first reaches the ignition threshold.
    pub zhat: f64,
    /// Crossing abscissa relative to the launch point.
    pub x_hat: f64,
    /// Launch state and offset used.
    pub launch: [f64; 2],
    pub alpha_minus: f64,
    pub reactive_rate: f64,
}

/// Separation function value and optional derivative data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MelnikovResult {
    /// `zhat - 1`.
    pub d: f64,
    /// Derivative in the wave speed by quadrature along a profile.
    pub dd_ds: Option<f64>,
    /// Centered finite-difference derivative, for cross-checking.
    pub dd_ds_fd: Option<f64>,
    /// Finite-difference partials in `(u_+, k, q)`.
    pub partials: Option<[f64; 3]>,
}

pub(crate) fn shoot_unstable_manifold(
    cfg: &ValidatedConfig,
    u_plus: f64,
    s: f64,
    policy: &LPolicy,
) -> Result<Shot> {
    let roots = rh_states(cfg, u_plus, s, RhBranch::Detonation)?;
    let u_minus = roots.weak;
    let (u_i, u_sup) = cfg.ignition_band();
    if !(u_minus > u_i && u_minus < u_sup) {
        return Err(Error::IgnitionPlacement(format!(
            "weak-branch left state {u_minus} lies outside the ignition band"
        )));
    }
    let alpha_minus = cfg.a(u_minus)? - s;
    let g_minus = (cfg.k / s) * cfg.phi(u_minus);
    if g_minus <= 0.0 {
        return Err(Error::Solve(
            "unstable manifold undefined: reactive rate vanishes at the left state".into(),
        ));
    }

    let field = Field::new(cfg, u_plus, s)?;
    let amp = (u_minus - u_plus).abs().max(1e-3);
    let eps = policy.launch_offset * amp;

    // Unstable eigendirection of the saddle, oriented into {du < 0, dz > 0}.
    let v = [-s * cfg.q, g_minus - alpha_minus];
    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let v = [v[0] / norm, v[1] / norm];
    if v[1] <= 0.0 {
        return Err(Error::Solve("unstable eigendirection does not enter z > 0".into()));
    }
    let launch = [u_minus + eps * v[0], eps * v[1]];

    // Height of the nullcline at the ignition threshold: the rest point the
    // orbit converges into when the reaction is too slow to punch through.
    let sq = s * cfg.q;
    let z_star = 1.0 + (cfg.f(u_i)? - cfg.f(u_plus)? - s * (u_i - u_plus)) / sq;
    let delta_near = 0.2 * (u_minus - u_i);
    let w_band = 1e-6;

    // Funnel indicator: nonpositive once the orbit rides the quasi-steady
    // sheet z = z_null(u) + G/|alpha| close to the threshold, at which point
    // the terminal height is z_star to within the sheet thickness.
    let funnel = |y: &[f64; 2]| -> f64 {
        let du = y[0] - u_i;
        let alpha = cfg.a(y[0]).unwrap_or(f64::NAN) - s;
        if alpha >= -1e-6 {
            return 1.0;
        }
        let w = -field.f_comp(y[0], y[1]) / sq;
        let w_qs = field.g_comp(y[0], y[1]) / alpha.abs();
        let c1 = du - delta_near;
        let c2 = w_qs - w_band;
        let c3 = (w - w_qs).abs() - 0.2 * (w_qs + 1e-12);
        c1.max(c2).max(c3)
    };

    let f_slack = 1e-6 * (1.0 + sq + amp);
    let x_limit = 8.0 * ((amp / eps).ln().max(1.0) + 5.0) / g_minus
        + 500.0 / alpha_minus.abs().min(1.0).max(0.01)
        + 1000.0;
    let opts = policy.opts();
    let outcome = integrate_with_event(
        |_, y: &[f64; 2]| field.rhs(y),
        0.0,
        &launch,
        x_limit,
        |_, y| (y[0] - u_i).min(funnel(y)),
        |x, y| {
            // The orbit must stay inside the trapping region {F <= 0, z >= 0}
            // until it exits through u = u_i.
            if y[1] < -1e-9 {
                return Err(Error::Solve(format!("orbit left z >= 0 at x = {x}")));
            }
            if field.f_comp(y[0], y[1]) > f_slack && y[0] > u_i + 1e-9 {
                return Err(Error::Solve(format!(
                    "orbit escaped the trapping region F <= 0 at x = {x}, u = {}",
                    y[0]
                )));
            }
            if y[0] > u_minus + f_slack {
                return Err(Error::Solve(format!("orbit moved above u_- at x = {x}")));
            }
            Ok(())
        },
        &opts,
    )?;

    match outcome {
        EventOutcome::Event { x, y } => {
            if y[0] - u_i <= 1e-7 * (1.0 + u_i.abs()) {
                // Transversal crossing of the threshold.
                Ok(Shot {
                    u_minus,
                    zhat: y[1],
                    x_hat: x,
                    launch,
                    alpha_minus,
                    reactive_rate: g_minus,
                })
            } else {
                // Quasi-steady funnel: the orbit converges into the rest
                // point (u_i, z_star) without crossing; its terminal height
                // is z_star up to the sheet thickness.
                let w = -field.f_comp(y[0], y[1]) / sq;
                Ok(Shot {
                    u_minus,
                    zhat: z_star + w,
                    x_hat: x,
                    launch,
                    alpha_minus,
                    reactive_rate: g_minus,
                })
            }
        }
        EventOutcome::ReachedLimit { x, .. } => Err(Error::Solve(format!(
            "unstable manifold failed to reach the ignition threshold by x = {x}"
        ))),
    }
}

/// Separation function `d(u_+, s) = zhat - 1` for the weak-branch left state.
///
/// `d = 0` characterizes weak detonation connections; `d < 0` means the
/// orbit undershoots (a strong detonation profile exists instead).
pub fn melnikov_separation(cfg: &ValidatedConfig, u_plus: f64, s: f64) -> Result<MelnikovResult> {
    let shot = shoot_unstable_manifold(cfg, u_plus, s, &LPolicy::default())?;
    Ok(MelnikovResult {
        d: shot.zhat - 1.0,
        dd_ds: None,
        dd_ds_fd: None,
        partials: None,
    })
}

/// Finite-difference partials of `d` in `(u_+, k, q)`.
pub fn melnikov_partials(cfg: &ValidatedConfig, u_plus: f64, s: f64) -> Result<[f64; 3]> {
    let rel = 1e-5;
    let base = cfg.clone().into_inner();
    let d_at = |cfg2: &ValidatedConfig, up: f64| -> Result<f64> {
        Ok(melnikov_separation(cfg2, up, s)?.d)
    };
    let h_u = rel * u_plus.abs().max(0.1);
    let du = (d_at(cfg, u_plus + h_u)? - d_at(cfg, u_plus - h_u)?) / (2.0 * h_u);
    let h_k = rel * base.k;
    let mut kp = base.clone();
    kp.k += h_k;
    let mut km = base.clone();
    km.k -= h_k;
    let dk = (d_at(&crate::model::validate_config(kp)?, u_plus)?
        - d_at(&crate::model::validate_config(km)?, u_plus)?)
        / (2.0 * h_k);
    let h_q = rel * base.q;
    let mut qp = base.clone();
    qp.q += h_q;
    let mut qm = base.clone();
    qm.q -= h_q;
    let dq = (d_at(&crate::model::validate_config(qp)?, u_plus)?
        - d_at(&crate::model::validate_config(qm)?, u_plus)?)
        / (2.0 * h_q);
    Ok([du, dk, dq])
}

/// Result of the threshold-speed search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WeakSpeed {
    /// Speed at which the separation function vanishes.
    Threshold(f64),
    /// `d <= 0` throughout the bracket: strong profiles exist at every
    /// admissible speed and no weak detonation occurs.
    NoThreshold,
}

/// Locate the weak-detonation speed by monotone bisection of `d(s)`.
pub fn find_weak_detonation_speed(
    cfg: &ValidatedConfig,
    u_plus: f64,
    bracket: (f64, f64),
) -> Result<WeakSpeed> {
    let (s_lo, s_hi) = bracket;
    if !(s_hi > s_lo) {
        return Err(Error::Bracket(format!("empty bracket ({s_lo}, {s_hi})")));
    }
    let d_lo = melnikov_separation(cfg, u_plus, s_lo)?.d;
    if d_lo <= 0.0 {
        // d is nonincreasing in s, so the whole bracket is nonpositive.
        return Ok(WeakSpeed::NoThreshold);
    }
    let d_hi = melnikov_separation(cfg, u_plus, s_hi)?.d;
    if d_hi > 0.0 {
        return Err(Error::Bracket(format!(
            "d > 0 at both ends of ({s_lo}, {s_hi}); raise the upper speed"
        )));
    }

    let mut a = s_lo;
    let mut b = s_hi;
    let mut da = d_lo;
    let mut db = d_hi;
    let mut best = (b, db);
    for _ in 0..200 {
        // Secant guess clamped into the bracket interior, bisection fallback.
        let mut m = b - db * (b - a) / (db - da);
        if !m.is_finite() || m <= a + 0.01 * (b - a) || m >= b - 0.01 * (b - a) {
            m = 0.5 * (a + b);
        }
        let dm = melnikov_separation(cfg, u_plus, m)?.d;
        if dm.abs() < best.1.abs() {
            best = (m, dm);
        }
        if dm.abs() <= 1e-11 {
            return Ok(WeakSpeed::Threshold(m));
        }
        if dm > 0.0 {
            a = m;
            da = dm;
        } else {
            b = m;
            db = dm;
        }
        if (b - a) <= 1e-14 * b.abs().max(1.0) {
            break;
        }
    }
    if best.1.abs() <= 1e-8 {
        Ok(WeakSpeed::Threshold(best.0))
    } else {
        Err(Error::Solve(format!(
            "threshold bisection stalled: |d| = {:e} at s = {}",
            best.1, best.0
        )))
    }
}

/// A computed traveling-wave profile on a uniform grid over `[-L, L]`,
/// translation-normalized so that `u` crosses the endstate midpoint at 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub wave: WaveSpec,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    /// Stored derivatives (the ODE right-hand side at the grid points).
    pub du: Vec<f64>,
    pub dz: Vec<f64>,
    pub l: f64,
    /// Reactant level at the ignition-threshold crossing, when the wave has
    /// one (detonations).
    pub zhat: Option<f64>,
    /// Set when the burned-side endstate sits on an ignition threshold and
    /// the decay is consequently slower than exponential.
    pub degenerate: bool,
    /// Fitted exponential tail rates `(toward -inf, toward +inf)`; the first
    /// is positive, the second negative for nondegenerate waves.
    pub tail_decay_rates: (f64, f64),
    /// Achieved endstate distances at `-L` and `+L`.
    pub endstate_error: (f64, f64),
}

impl Profile {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn h(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// Cubic Hermite evaluation of `(u, z)` using the stored derivatives;
    /// clamps to the endstates outside the grid.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        if x <= self.x[0] {
            return (self.u[0], self.z[0]);
        }
        if x >= self.x[n - 1] {
            return (self.u[n - 1], self.z[n - 1]);
        }
        let h = self.h();
        let j = (((x - self.x[0]) / h) as usize).min(n - 2);
        let t = (x - self.x[j]) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + d0 * h * (t3 - 2.0 * t2 + t)
                + y1 * (-2.0 * t3 + 3.0 * t2)
                + d1 * h * (t3 - t2)
        };
        (
            hermite(self.u[j], self.u[j + 1], self.du[j], self.du[j + 1]),
            hermite(self.z[j], self.z[j + 1], self.dz[j], self.dz[j + 1]),
        )
    }

    /// Natural ODE scale used by the residual bound: `max(1, max |rhs|)`.
    pub fn rhs_scale(&self) -> f64 {
        let m = self
            .du
            .iter()
            .chain(self.dz.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        m.max(1.0)
    }

    /// Maximum deviation between stored derivatives obtained by 4th-order
    /// finite differences of the grid samples and the stored right-hand
    /// side. Small values certify the grid actually samples an orbit.
    pub fn fd_residual_max(&self) -> f64 {
        let n = self.n();
        if n < 5 {
            return f64::NAN;
        }
        let h = self.h();
        let deriv = |y: &[f64], j: usize| -> f64 {
            if j >= 2 && j + 2 < n {
                (-y[j + 2] + 8.0 * y[j + 1] - 8.0 * y[j - 1] + y[j - 2]) / (12.0 * h)
            } else if j < 2 {
                let o = j;
                // 4th-order forward stencils at the left edge.
                if o == 0 {
                    (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4])
                        / (12.0 * h)
                } else {
                    (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
                }
            } else {
                let m = n - 1 - j;
                if m == 0 {
                    (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4]
                        + 3.0 * y[n - 5])
                        / (12.0 * h)
                } else {
                    (3.0 * y[n - 1] + 10.0 * y[n - 2] - 18.0 * y[n - 3] + 6.0 * y[n - 4]
                        - y[n - 5])
                        / (12.0 * h)
                }
            }
        };
        let mut worst = 0.0f64;
        for j in 0..n {
            worst = worst.max((deriv(&self.u, j) - self.du[j]).abs());
            worst = worst.max((deriv(&self.z, j) - self.dz[j]).abs());
        }
        worst
    }

    /// L2 distance to another profile minimized over a relative shift;
    /// used to verify translation normalization.
    pub fn distance_up_to_shift(&self, other: &Profile) -> f64 {
        let eval_dist = |tau: f64| -> f64 {
            let mut acc = 0.0f64;
            let mut count = 0usize;
            for (j, &x) in self.x.iter().enumerate() {
                let (u2, z2) = other.eval(x + tau);
                if x + tau >= other.x[0] && x + tau <= other.x[other.n() - 1] {
                    let du = self.u[j] - u2;
                    let dz = self.z[j] - z2;
                    acc = acc.max(du.abs().max(dz.abs()));
                    count += 1;
                }
            }
            if count == 0 {
                f64::INFINITY
            } else {
                acc
            }
        };
        // Golden-section refinement around zero shift.
        let mut a = -0.5;
        let mut b = 0.5;
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = eval_dist(c);
        let mut fd = eval_dist(d);
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = eval_dist(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = eval_dist(d);
            }
        }
        fc.min(fd)
    }
}

fn detect_degenerate(cfg: &ValidatedConfig, u_plus: f64) -> bool {
    let (u_i, u_sup) = cfg.ignition_band();
    let tol = 1e-9 * (1.0 + u_plus.abs());
    (u_plus - u_i).abs() <= tol || (u_plus - u_sup).abs() <= tol
}

/// Least-squares exponential rate of a tail deviation, with the rms misfit
/// of the log-linear model; `None` when the window holds too few points.
fn fit_tail_rate(xs: &[f64], delta: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(delta)
        .filter(|(_, &d)| d > lo && d < hi)
        .map(|(&x, &d)| (x, d.ln()))
        .collect();
    if pts.len() < 8 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let misfit = (pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some((slope, misfit))
}

/// Tail rate from whichever component (u or z deviation) follows a clean
/// single exponential; mixtures of nearby rates can corrupt one component
/// while leaving the other exact.
fn best_tail_rate(
    xs: &[f64],
    du: &[f64],
    dz: &[f64],
    lo: f64,
    hi: f64,
) -> f64 {
    let fu = fit_tail_rate(xs, du, lo, hi);
    let fz = fit_tail_rate(xs, dz, lo, hi);
    match (fu, fz) {
        (Some((ru, mu)), Some((rz, mz))) => {
            if mz < mu {
                rz
            } else {
                ru
            }
        }
        (Some((ru, _)), None) => ru,
        (None, Some((rz, _))) => rz,
        (None, None) => f64::NAN,
    }
}

struct GridSpec {
    l: f64,
    n: usize,
}

/// Grid spacing resolving both the fastest exponential rate and, when the
/// profile crosses an ignition threshold, the third-derivative jump there
/// (the C^1 ignition function leaves the orbit only C^2 at the corner, so
/// 4th-order stencils see O(h^2 J) locally).
fn choose_grid(l_needed: f64, rate_max: f64, corner_jump: f64, policy: &LPolicy) -> GridSpec {
    let mut h = policy.h_per_rate / rate_max.max(1e-3);
    if corner_jump > 0.0 {
        h = h.min((0.5e-6 / (0.15 * corner_jump)).sqrt());
    }
    let mut n = (2.0 * l_needed / h).ceil() as usize + 1;
    if n > policy.max_points {
        n = policy.max_points;
    }
    if n < 401 {
        n = 401;
    }
    // Odd point count gives a midpoint node at x = 0.
    if n % 2 == 0 {
        n += 1;
    }
    GridSpec { l: l_needed, n }
}

/// Estimated jump of the reactant third derivative at an ignition corner
/// `(u_c, z_c)`: `(k/s) phi''(u_c) F(u_c, z_c)^2 z_c` with the curvature
/// taken one-sidedly just inside the band.
fn corner_sharpness(cfg: &ValidatedConfig, field: &Field, u_c: f64, z_c: f64) -> f64 {
    let (u_i, u_sup) = cfg.ignition_band();
    let delta = 1e-5 * (u_sup - u_i);
    let inward = if (u_c - u_i).abs() < (u_c - u_sup).abs() {
        delta
    } else {
        -delta
    };
    let phi_pp = (cfg.phi_prime(u_c + inward) / inward).abs();
    let f_c = field.f_comp(u_c, z_c);
    (cfg.k / field.s) * phi_pp * f_c * f_c * z_c.abs()
}

/// Build a traveling-wave profile for the given classified wave.
///
/// `StrongDetonation`: trace the stable manifold of `(u_+, 1)` backward
/// (a scalar equation on `z = 1` down to the ignition threshold, then the
/// full system to the repelling left state). `WeakDetonation`: integrate the
/// unstable manifold of the saddle forward; the speed must be a separation
/// root to `1e-6`. `WeakDeflagration`: backward center-manifold trace from
/// the upper ignition threshold, always degenerate. `InertShock`: scalar
/// viscous connection with frozen reactant.
pub fn compute_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    policy: &LPolicy,
) -> Result<Profile> {
    match wave.class {
        WaveClass::StrongDetonation => strong_detonation_profile(cfg, wave, policy),
        WaveClass::WeakDetonation => weak_detonation_profile(cfg, wave, policy),
        WaveClass::WeakDeflagration => weak_deflagration_profile(cfg, wave, policy),
        WaveClass::InertShock => inert_shock_profile(cfg, wave, policy),
        WaveClass::CJDetonation | WaveClass::CJDeflagration => Err(Error::NoConnection(
            "sonic waves decay algebraically and are outside the profile machinery".into(),
        )),
        WaveClass::InertRarefaction => Err(Error::NoConnection(
            "rarefactions are fans, not traveling profiles".into(),
        )),
    }
}

/// Locate the x where a monotone scalar coordinate crosses `target`,
/// integrating `rhs` from `(x0, y0)` toward `x_limit`.
fn locate_crossing<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: &[f64; N],
    x_limit: f64,
    pick: impl Fn(&[f64; N]) -> f64,
    target: f64,
    opts: &OdeOptions,
) -> Result<(f64, [f64; N])> {
    match integrate_with_event(rhs, x0, y0, x_limit, |_, y| pick(y) - target, |_, _| Ok(()), opts)? {
        EventOutcome::Event { x, y } => Ok((x, y)),
        EventOutcome::ReachedLimit { x, .. } => Err(Error::Solve(format!(
            "crossing of {target} not reached by x = {x}"
        ))),
    }
}

fn assemble_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    grid: GridSpec,
    fill: impl Fn(&[f64], &mut [f64], &mut [f64]) -> Result<()>,
    zhat: Option<f64>,
    degenerate: bool,
) -> Result<Profile> {
    let n = grid.n;
    let l = grid.l;
    let xs: Vec<f64> = (0..n)
        .map(|j| -l + 2.0 * l * j as f64 / (n - 1) as f64)
        .collect();
    let mut us = vec![0.0; n];
    let mut zs = vec![0.0; n];
    fill(&xs, &mut us, &mut zs)?;

    let field = Field::new(cfg, wave.u_plus, wave.s)?;
    let mut du = vec![0.0; n];
    let mut dz = vec![0.0; n];
    for j in 0..n {
        // Inert waves carry no reaction regardless of phi.
        if wave.class == WaveClass::InertShock {
            du[j] = cfg.f(us[j])? - cfg.f(wave.u_minus)? - wave.s * (us[j] - wave.u_minus);
            dz[j] = 0.0;
        } else {
            let r = field.rhs(&[us[j], zs[j]]);
            du[j] = r[0];
            dz[j] = r[1];
        }
    }

    let err_minus = (us[0] - wave.u_minus).abs() + (zs[0] - wave.z_minus).abs();
    let err_plus = (us[n - 1] - wave.u_plus).abs() + (zs[n - 1] - wave.z_plus).abs();

    let amp = (wave.u_minus - wave.u_plus).abs().max(1e-3);
    let du_minus: Vec<f64> = us.iter().map(|&u| (u - wave.u_minus).abs()).collect();
    let dz_minus: Vec<f64> = zs.iter().map(|&z| (z - wave.z_minus).abs()).collect();
    let du_plus: Vec<f64> = us.iter().map(|&u| (u - wave.u_plus).abs()).collect();
    let dz_plus: Vec<f64> = zs.iter().map(|&z| (z - wave.z_plus).abs()).collect();
    let rate_minus = best_tail_rate(&xs, &du_minus, &dz_minus, 1e-7 * amp, 1e-4 * amp);
    let rate_plus = best_tail_rate(&xs, &du_plus, &dz_plus, 1e-7 * amp, 1e-4 * amp);

    Ok(Profile {
        wave: wave.clone(),
        x: xs,
        u: us,
        z: zs,
        du,
        dz,
        l,
        zhat,
        degenerate,
        tail_decay_rates: (rate_minus, rate_plus),
        endstate_error: (err_minus, err_plus),
    })
}

fn strong_detonation_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    policy: &LPolicy,
) -> Result<Profile> {
    let (u_i, _) = cfg.ignition_band();
    if detect_degenerate(cfg, wave.u_plus) {
        // At the threshold there is a one-parameter subalgebraic family;
        // only detection is supported.
        return Err(Error::DegenerateProfile(
            "burned state on an ignition threshold: exponential profile construction \
             does not apply"
                .into(),
        ));
    }
    let field = Field::new(cfg, wave.u_plus, wave.s)?;
    let opts = policy.opts();

    let alpha_plus = wave.alpha_plus; // < 0
    let alpha_minus = wave.alpha_minus; // > 0
    let g_minus = (cfg.k / wave.s) * cfg.phi(wave.u_minus);
    let amp = wave.u_minus - wave.u_plus;

    let scalar = |_: f64, y: &[f64; 1]| [field.scalar_rhs(y[0], 1.0)];
    let full = |_: f64, y: &[f64; 2]| field.rhs(y);

    // Everything is anchored at the corner (u_i, 1) where the profile
    // enters the frozen-reactant line; both integration directions away
    // from it are contracting, so the two sections stay consistent.
    let corner = [u_i, 1.0];
    let corner_scalar = [u_i];
    let target_prox = 0.9 * policy.delta_tail;

    // Plus tail: forward on z = 1 until within delta of u_+.
    let x_budget_plus =
        (((u_i - wave.u_plus) / target_prox).ln() + 30.0) / alpha_plus.abs() + 50.0;
    let (x_plus_raw, _) = locate_crossing(
        &scalar,
        0.0,
        &corner_scalar,
        x_budget_plus,
        |y| y[0] - wave.u_plus,
        target_prox,
        &opts,
    )?;

    // Backward with the full system to the repelling left state.
    let min_rate = alpha_minus.min(g_minus).max(1e-6);
    let x_budget_minus = ((amp / target_prox).ln() + 30.0) / min_rate + 100.0;
    let x_minus_raw = {
        let out = integrate_with_event(
            &full,
            0.0,
            &corner,
            -x_budget_minus,
            |_, y| (y[0] - wave.u_minus).abs() + y[1].abs() - target_prox,
            |x, y| {
                if y[1] < -1e-9 || y[1] > 1.0 + 1e-9 {
                    return Err(Error::Solve(format!(
                        "backward trace left 0 <= z <= 1 at x = {x}"
                    )));
                }
                // The orbit may overshoot u_- (burned-side spike) before
                // settling onto the repellor, but a runaway means there is
                // no connection at this speed.
                if y[0] > wave.u_minus + 10.0 * (amp + wave.s * cfg.q) {
                    return Err(Error::NoConnection(format!(
                        "backward trace escaped at x = {x}: no strong profile at s = {}",
                        wave.s
                    )));
                }
                Ok(())
            },
            &opts,
        )?;
        match out {
            EventOutcome::Event { x, .. } => x,
            EventOutcome::ReachedLimit { x, .. } => {
                return Err(Error::Solve(format!(
                    "backward trace did not reach the left state by x = {x}"
                )));
            }
        }
    };

    // Translation normalization: u crosses the endstate midpoint at 0.
    let mid = 0.5 * (wave.u_minus + wave.u_plus);
    let x_mid_raw = if mid >= u_i {
        locate_crossing(&full, 0.0, &corner, x_minus_raw, |y| y[0], mid, &opts)?.0
    } else {
        locate_crossing(&scalar, 0.0, &corner_scalar, x_plus_raw, |y| y[0], mid, &opts)?.0
    };

    let l_needed = (x_mid_raw - x_minus_raw).max(x_plus_raw - x_mid_raw);
    let l_cap = policy.rate_cap / alpha_minus.min(g_minus).min(alpha_plus.abs()).max(1e-9);
    if l_needed > l_cap {
        return Err(Error::Solve(format!(
            "required half-length {l_needed} exceeds the cap {l_cap}"
        )));
    }
    let rate_max = alpha_minus.max(alpha_plus.abs()).max(g_minus);
    let corner_j = corner_sharpness(cfg, &field, u_i, 1.0);
    let grid = choose_grid(l_needed, rate_max, corner_j, policy);

    let x_corner = -x_mid_raw;

    assemble_profile(
        cfg,
        wave,
        grid,
        |xs, us, zs| {
            let n = xs.len();
            // Full system backward of the corner, frozen scalar beyond it.
            let split = xs.partition_point(|&x| x <= x_corner);
            if split > 0 {
                let mut targets: Vec<f64> = xs[..split].to_vec();
                targets.reverse();
                let states = integrate_to_points(&full, x_corner, &corner, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split - 1 - j] = st[0];
                    zs[split - 1 - j] = st[1];
                }
            }
            if split < n {
                let targets: Vec<f64> = xs[split..].to_vec();
                let states =
                    integrate_to_points(&scalar, x_corner, &corner_scalar, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split + j] = st[0];
                    zs[split + j] = 1.0;
                }
            }
            Ok(())
        },
        Some(1.0),
        false,
    )
}

fn weak_detonation_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    policy: &LPolicy,
) -> Result<Profile> {
    let (u_i, _) = cfg.ignition_band();
    let degenerate = detect_degenerate(cfg, wave.u_plus);
    let shot = shoot_unstable_manifold(cfg, wave.u_plus, wave.s, policy)?;
    if (shot.u_minus - wave.u_minus).abs() > 1e-6 * (1.0 + wave.u_minus.abs()) {
        return Err(Error::NotAWave(format!(
            "left state {} is not the weak-branch root {}",
            wave.u_minus, shot.u_minus
        )));
    }
    let d = shot.zhat - 1.0;
    if d.abs() > 1e-6 {
        return Err(Error::NoConnection(format!(
            "separation d = {d:e} at s = {}: not a weak-detonation speed",
            wave.s
        )));
    }

    let field = Field::new(cfg, wave.u_plus, wave.s)?;
    let opts = policy.opts();
    let full = |_: f64, y: &[f64; 2]| field.rhs(y);
    let zf = shot.zhat;
    let field_s = field.clone();
    let scalar = move |_: f64, y: &[f64; 1]| [field_s.scalar_rhs(y[0], zf)];

    let alpha_minus = shot.alpha_minus; // < 0
    let g_minus = shot.reactive_rate; // > 0
    let alpha_plus = wave.alpha_plus; // < 0
    let eps_vec = [shot.launch[0] - wave.u_minus, shot.launch[1]];
    let target_prox = 0.9 * policy.delta_tail;

    // Effective attractor on the frozen-reactant line (zhat is within 1e-6
    // of 1, so this sits within O(d) of u_+).
    let mut u_attr = wave.u_plus;
    for _ in 0..8 {
        let (f, fp, _) = cfg.flux(u_attr)?;
        let val = f - cfg.f(wave.u_plus)? - wave.s * (u_attr - wave.u_plus)
            - wave.s * cfg.q * (zf - 1.0);
        u_attr -= val / (fp - wave.s);
    }

    // Forward scalar tail beyond the ignition crossing.
    let x_budget_plus = ((u_i - u_attr).abs() / target_prox).ln().max(1.0) / alpha_plus.abs()
        * 2.0
        + 100.0;
    let (x_plus_raw, _) = locate_crossing(
        &scalar,
        shot.x_hat,
        &[u_i],
        shot.x_hat + x_budget_plus,
        |y| (y[0] - u_attr).abs() + (zf - 1.0).abs(),
        target_prox.max((zf - 1.0).abs() * 1.5 + 1e-13),
        &opts,
    )?;

    // Left truncation where the linear tail reaches the proximity target.
    let eps_norm = (eps_vec[0] * eps_vec[0] + eps_vec[1] * eps_vec[1]).sqrt();
    let x_minus_raw = -((eps_norm / target_prox).ln().max(0.0)) / g_minus * 1.1 - 5.0;

    // Midpoint normalization, anchored at the ignition corner where the
    // backward direction is well-conditioned (the forward pass from the
    // saddle carries an exponentially amplified phase error).
    let corner = [u_i, shot.zhat];
    let mid = 0.5 * (wave.u_minus + wave.u_plus);
    let x_mid_raw = if mid > u_i {
        locate_crossing(&full, shot.x_hat, &corner, -x_budget_plus, |y| y[0], mid, &opts)?.0
    } else {
        locate_crossing(
            &scalar,
            shot.x_hat,
            &[u_i],
            shot.x_hat + x_budget_plus,
            |y| y[0],
            mid,
            &opts,
        )?
        .0
    };

    let l_needed = (x_mid_raw - x_minus_raw).max(x_plus_raw - x_mid_raw);
    let l_cap = policy.rate_cap
        / alpha_minus
            .abs()
            .min(g_minus)
            .min(alpha_plus.abs())
            .max(1e-9);
    if l_needed > l_cap && !degenerate {
        return Err(Error::Solve(format!(
            "required half-length {l_needed} exceeds the cap {l_cap}"
        )));
    }
    let rate_max = alpha_minus.abs().max(alpha_plus.abs()).max(g_minus);
    let corner_j = corner_sharpness(cfg, &field, u_i, zf);
    let grid = choose_grid(l_needed, rate_max, corner_j, policy);

    let x_launch = -x_mid_raw;
    let x_hat = shot.x_hat - x_mid_raw;
    let u_minus = wave.u_minus;

    let profile = assemble_profile(
        cfg,
        wave,
        grid,
        |xs, us, zs| {
            let n = xs.len();
            // Linear saddle tail for x <= launch.
            let lin_end = xs.partition_point(|&x| x <= x_launch);
            for j in 0..lin_end {
                let decay = (g_minus * (xs[j] - x_launch)).exp();
                us[j] = u_minus + eps_vec[0] * decay;
                zs[j] = eps_vec[1] * decay;
            }
            // Reactive section, traced backward from the ignition corner so
            // that phase errors contract instead of amplifying.
            let full_end = xs[lin_end..].partition_point(|&x| x <= x_hat) + lin_end;
            if full_end > lin_end {
                let mut targets: Vec<f64> = xs[lin_end..full_end].to_vec();
                targets.reverse();
                let states = integrate_to_points(&full, x_hat, &corner, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[full_end - 1 - j] = st[0];
                    zs[full_end - 1 - j] = st[1];
                }
            }
            // Frozen-reactant scalar tail.
            if full_end < n {
                let targets: Vec<f64> = xs[full_end..].to_vec();
                let states = integrate_to_points(&scalar, x_hat, &[u_i], &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[full_end + j] = st[0];
                    zs[full_end + j] = zf;
                }
            }
            Ok(())
        },
        Some(shot.zhat),
        degenerate,
    )?;
    Ok(profile)
}

fn weak_deflagration_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    policy: &LPolicy,
) -> Result<Profile> {
    let (_, u_sup) = cfg.ignition_band();
    if (wave.u_plus - u_sup).abs() > 1e-9 * (1.0 + u_sup.abs()) {
        return Err(Error::NoConnection(format!(
            "weak deflagrations terminate at the upper ignition threshold {u_sup}, got u_+ = {}",
            wave.u_plus
        )));
    }
    let field = Field::new(cfg, wave.u_plus, wave.s)?;
    let opts = policy.opts();
    let full = |_: f64, y: &[f64; 2]| field.rhs(y);

    let alpha_plus = wave.alpha_plus; // > 0 for deflagrations
    let alpha_minus = wave.alpha_minus; // > 0 (repellor side)
    let g_minus = (cfg.k / wave.s) * cfg.phi(wave.u_minus);
    let amp = wave.u_plus - wave.u_minus;
    let target_prox = 0.9 * policy.delta_tail;

    // Center-manifold expansion at (u_sup, 1): u = u_sup + c w + h2 w^2 with
    // w = z - 1 <= 0 and c = s q / alpha_+.
    let sq = wave.s * cfg.q;
    let c1 = sq / alpha_plus;
    let (_, _, fpp) = cfg.flux(u_sup)?;
    let dphi = 1e-6 * (u_sup - cfg.ignition_band().0);
    let phi_pp = (cfg.phi_prime(u_sup - dphi) - cfg.phi_prime(u_sup)) / (-dphi);
    let h2 = (0.5 * c1.powi(3) * (cfg.k / wave.s) * phi_pp - 0.5 * fpp * c1 * c1) / alpha_plus;
    let cm_u = |w: f64| u_sup + c1 * w + h2 * w * w;

    // Launch depth chosen so the algebraic tail is truncated at the policy
    // factor times the exponential side's length.
    let l_nominal = ((amp / target_prox).ln() + 5.0) / alpha_minus.min(g_minus).max(1e-6);
    let l_tail = policy.defl_tail_factor * l_nominal;
    let gamma = ((cfg.k / wave.s) * 0.5 * phi_pp * c1 * c1).abs().max(1e-12);
    let w0 = -1.0 / (gamma * l_tail);
    let launch = [cm_u(w0), 1.0 + w0];

    // Backward trace to the repelling left state; the first stretch crawls
    // algebraically, so the budget is dominated by 1/(gamma |w0|).
    let x_budget = 10.0 * (1.0 / (gamma * w0.abs()) + l_nominal + 100.0);
    let out = integrate_with_event(
        &full,
        0.0,
        &launch,
        -x_budget,
        |_, y| (y[0] - wave.u_minus).abs() + y[1].abs() - target_prox,
        |x, y| {
            if y[1] < -1e-9 || y[1] > 1.0 + 1e-9 {
                return Err(Error::Solve(format!(
                    "deflagration trace left 0 <= z <= 1 at x = {x}"
                )));
            }
            Ok(())
        },
        &opts,
    )?;
    let x_minus_raw = match out {
        EventOutcome::Event { x, .. } => x,
        EventOutcome::ReachedLimit { x, .. } => {
            return Err(Error::Solve(format!(
                "deflagration backward trace did not reach the left state by x = {x}"
            )))
        }
    };

    let mid = 0.5 * (wave.u_minus + wave.u_plus);
    let (x_mid_raw, _) = locate_crossing(&full, 0.0, &launch, x_minus_raw, |y| y[0], mid, &opts)?;

    let l_needed = (x_mid_raw - x_minus_raw).max(l_tail - x_mid_raw);
    let rate_max = alpha_minus.max(g_minus).max(alpha_plus);
    let grid = choose_grid(l_needed, rate_max, 0.0, policy);
    let x_launch = -x_mid_raw;

    // Reduced center-manifold flow for the forward tail: w' = G(u(w), 1+w).
    let field_cm = field.clone();
    let cm_rhs = move |_: f64, y: &[f64; 1]| [field_cm.g_comp(cm_u(y[0]), 1.0 + y[0])];

    assemble_profile(
        cfg,
        wave,
        grid,
        |xs, us, zs| {
            let n = xs.len();
            let split = xs.partition_point(|&x| x <= x_launch);
            if split > 0 {
                let mut targets: Vec<f64> = xs[..split].to_vec();
                targets.reverse();
                let states = integrate_to_points(&full, x_launch, &launch, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split - 1 - j] = st[0];
                    zs[split - 1 - j] = st[1];
                }
            }
            if split < n {
                let targets: Vec<f64> = xs[split..].to_vec();
                let states = integrate_to_points(&cm_rhs, x_launch, &[w0], &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split + j] = cm_u(st[0]);
                    zs[split + j] = 1.0 + st[0];
                }
            }
            Ok(())
        },
        None,
        true,
    )
}

fn inert_shock_profile(
    cfg: &ValidatedConfig,
    wave: &WaveSpec,
    policy: &LPolicy,
) -> Result<Profile> {
    if !(wave.u_minus > wave.u_plus) {
        return Err(Error::NoConnection(
            "inert viscous shocks require a decreasing jump".into(),
        ));
    }
    let z0 = wave.z_minus;
    // The reactant must be frozen along the whole connection.
    if z0 > 0.0 {
        let (u_i, u_sup) = cfg.ignition_band();
        if wave.u_plus < u_sup && wave.u_minus > u_i {
            return Err(Error::UnsupportedData(
                "inert shock path crosses the ignition band with unburned reactant".into(),
            ));
        }
    }
    let f_minus = cfg.f(wave.u_minus)?;
    let s = wave.s;
    let u_minus = wave.u_minus;
    let cfg2 = cfg.clone();
    let scalar = move |_: f64, y: &[f64; 1]| {
        [cfg2.f(y[0]).unwrap_or(f64::NAN) - f_minus - s * (y[0] - u_minus)]
    };
    let opts = policy.opts();

    let alpha_l = wave.alpha_minus; // > 0
    let alpha_r = wave.alpha_plus; // < 0
    let amp = wave.u_minus - wave.u_plus;
    let target_prox = 0.9 * policy.delta_tail;
    let mid = [0.5 * (wave.u_minus + wave.u_plus)];

    let budget_r = ((amp / target_prox).ln() + 10.0) / alpha_r.abs() + 50.0;
    let (x_plus_raw, _) = locate_crossing(
        &scalar,
        0.0,
        &mid,
        budget_r,
        |y| y[0] - wave.u_plus,
        target_prox,
        &opts,
    )?;
    let budget_l = ((amp / target_prox).ln() + 10.0) / alpha_l + 50.0;
    let (x_minus_raw, _) = locate_crossing(
        &scalar,
        0.0,
        &mid,
        -budget_l,
        |y| wave.u_minus - y[0],
        target_prox,
        &opts,
    )?;

    let l_needed = (-x_minus_raw).max(x_plus_raw);
    let rate_max = alpha_l.max(alpha_r.abs());
    let grid = choose_grid(l_needed, rate_max, 0.0, policy);

    assemble_profile(
        cfg,
        wave,
        grid,
        |xs, us, zs| {
            let n = xs.len();
            let split = xs.partition_point(|&x| x <= 0.0);
            if split > 0 {
                let mut targets: Vec<f64> = xs[..split].to_vec();
                targets.reverse();
                let states = integrate_to_points(&scalar, 0.0, &mid, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split - 1 - j] = st[0];
                }
            }
            if split < n {
                let targets: Vec<f64> = xs[split..].to_vec();
                let states = integrate_to_points(&scalar, 0.0, &mid, &targets, &opts)?;
                for (j, st) in states.iter().enumerate() {
                    us[split + j] = st[0];
                }
            }
            zs.fill(z0);
            Ok(())
        },
        None,
        false,
    )
}

/// Derivative data produced by the separation-function quadrature.
#[derive(Debug, Clone)]
pub struct MelnikovDerivative {
    /// Exact derivative of the separation function in the speed.
    pub dd_ds: f64,
    /// The Duhamel integral anchored at the profile's `x = 0`; this is the
    /// object appearing in the derivative formula for the Evans function.
    pub duhamel: f64,
    /// Accumulated trace integral up to the ignition crossing.
    pub tau_hat: f64,
    /// `u'` at the ignition crossing.
    pub ux_hat: f64,
    pub x_hat: f64,
}

/// Quadrature derivative of the separation function along a stored
/// weak-detonation profile.
///
/// The Duhamel integral is
/// `J = int exp(-int_0^x tr) (z_x / s)(2 u' - (f(u) - f(u_+))) dx` with
/// `tr = alpha(u) + (k/s) phi(u)`; the separation derivative measured at
/// the section `u = u_i` is `dd/ds = -exp(tau_hat) J / u'(x_hat)`, which is
/// strictly negative along weak detonations.
pub fn melnikov_derivative_quadrature(
    cfg: &ValidatedConfig,
    profile: &Profile,
) -> Result<MelnikovDerivative> {
    if profile.degenerate {
        return Err(Error::DegenerateProfile(
            "separation quadrature requires exponential decay".into(),
        ));
    }
    if profile.wave.class != WaveClass::WeakDetonation {
        return Err(Error::DegenerateProfile(format!(
            "separation quadrature applies to weak detonations, got {:?}",
            profile.wave.class
        )));
    }
    let n = profile.n();
    let h = profile.h();
    let s = profile.wave.s;
    let (u_i, _) = cfg.ignition_band();
    let f_plus = cfg.f(profile.wave.u_plus)?;

    // Trace of the linearized field and its x-derivative at the nodes.
    let mut tr = vec![0.0; n];
    let mut dtr = vec![0.0; n];
    for j in 0..n {
        let u = profile.u[j];
        let (_, fp, fpp) = cfg.flux(u)?;
        tr[j] = (fp - s) + (cfg.k / s) * cfg.phi(u);
        dtr[j] = (fpp + (cfg.k / s) * cfg.phi_prime(u)) * profile.du[j];
    }
    // Cumulative integral of the trace from x = 0 (grid midpoint node).
    let mut tau = vec![0.0; n];
    let mid_idx = n / 2;
    debug_assert!(profile.x[mid_idx].abs() < 1e-9);
    for j in mid_idx..n - 1 {
        let panel = 0.5 * h * (tr[j] + tr[j + 1]) + h * h / 12.0 * (dtr[j] - dtr[j + 1]);
        tau[j + 1] = tau[j] + panel;
    }
    for j in (0..mid_idx).rev() {
        let panel = 0.5 * h * (tr[j] + tr[j + 1]) + h * h / 12.0 * (dtr[j] - dtr[j + 1]);
        tau[j] = tau[j + 1] - panel;
    }

    let integrand: Vec<f64> = (0..n)
        .map(|j| {
            let w = (-tau[j]).exp();
            let fu = cfg.f(profile.u[j]).unwrap_or(f64::NAN);
            w * (profile.dz[j] / s) * (2.0 * profile.du[j] - (fu - f_plus))
        })
        .collect();
    // Composite Simpson; the grid always has an odd number of nodes.
    let mut duhamel = 0.0;
    let mut j = 0;
    while j + 2 < n {
        duhamel += h / 3.0 * (integrand[j] + 4.0 * integrand[j + 1] + integrand[j + 2]);
        j += 2;
    }
    if j + 1 < n {
        duhamel += 0.5 * h * (integrand[j] + integrand[j + 1]);
    }
    // Left-tail closure: beyond -L the integrand decays like
    // exp(|alpha_-| (x + L)), which for |alpha_-| below the profile's own
    // proximity rate still carries visible mass.
    let alpha_minus = profile.wave.alpha_minus;
    if alpha_minus < -1e-12 {
        duhamel += integrand[0] / alpha_minus.abs();
    }

    // Ignition crossing and the gauge factors that convert the anchored
    // integral into the section-measured derivative.
    let k_cross = (0..n - 1)
        .find(|&j| (profile.u[j] - u_i) * (profile.u[j + 1] - u_i) <= 0.0 && profile.u[j] > u_i)
        .ok_or_else(|| Error::Solve("profile never crosses the ignition threshold".into()))?;
    // Refine by bisection on the Hermite interpolant.
    let mut a = profile.x[k_cross];
    let mut b = profile.x[k_cross + 1];
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let (um, _) = profile.eval(m);
        if um > u_i {
            a = m;
        } else {
            b = m;
        }
    }
    let x_hat = 0.5 * (a + b);
    let (u_hat, z_hat) = profile.eval(x_hat);
    let field = Field::new(cfg, profile.wave.u_plus, s)?;
    let ux_hat = field.f_comp(u_hat, z_hat);
    // tau at x_hat: node value plus a partial trapezoid panel.
    let frac = (x_hat - profile.x[k_cross]) / h;
    let tr_hat = (cfg.a(u_hat)? - s) + (cfg.k / s) * cfg.phi(u_hat);
    let tau_hat = tau[k_cross] + 0.5 * frac * h * (tr[k_cross] + tr_hat);

    let dd_ds = -(tau_hat.exp()) * duhamel / ux_hat;
    Ok(MelnikovDerivative {
        dd_ds,
        duhamel,
        tau_hat,
        ux_hat,
        x_hat,
    })
}

/// Speed derivative of the separation function along a weak-detonation
/// profile, cross-checked against a centered finite difference.
pub fn melnikov_derivative_s(cfg: &ValidatedConfig, profile: &Profile) -> Result<MelnikovResult> {
    let deriv = melnikov_derivative_quadrature(cfg, profile)?;
    let s = profile.wave.s;
    let h = 1e-4 * s;
    let d_p = melnikov_separation(cfg, profile.wave.u_plus, s + h)?.d;
    let d_m = melnikov_separation(cfg, profile.wave.u_plus, s - h)?.d;
    let fd = (d_p - d_m) / (2.0 * h);
    Ok(MelnikovResult {
        d: profile.zhat.map(|z| z - 1.0).unwrap_or(f64::NAN),
        dd_ds: Some(deriv.dd_ds),
        dd_ds_fd: Some(fd),
        partials: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, ModelConfig};
    use crate::profiles::endstates::classify_wave;

    fn p0() -> ValidatedConfig {
        validate_config(ModelConfig::default()).unwrap()
    }

    #[test]
    fn separation_negative_for_small_rate() {
        let cfg = validate_config(ModelConfig::default().with_k(1e-3)).unwrap();
        let d = melnikov_separation(&cfg, 0.2, 1.5).unwrap().d;
        assert!(d < 0.0, "small-rate separation must be negative, got {d}");
    }

    #[test]
    fn separation_monotone_in_speed() {
        let cfg = p0();
        let d1 = melnikov_separation(&cfg, 0.2, 1.5).unwrap().d;
        let d2 = melnikov_separation(&cfg, 0.2, 1.6).unwrap().d;
        assert!(d1 >= d2, "d must be nonincreasing in s: {d1} vs {d2}");
    }

    #[test]
    fn strong_profile_monotone_with_matching_tails() {
        let cfg = p0();
        let wave = classify_wave(&cfg, 1.9358898944, 0.2, 1.5).unwrap();
        let profile = compute_profile(&cfg, &wave, &LPolicy::default()).unwrap();
        assert!(!profile.degenerate);
        assert!(profile.endstate_error.0 <= 1e-8);
        assert!(profile.endstate_error.1 <= 1e-8);
        // z is nondecreasing; u need not be monotone for strong waves (this
        // orbit leaves the repellor with a burned-side spike above u_-
        // before descending through the front), but it must be unimodal.
        let mut sign_changes = 0;
        for j in 1..profile.n() {
            assert!(profile.z[j] >= profile.z[j - 1] - 1e-12);
            assert!(profile.z[j] >= -1e-12 && profile.z[j] <= 1.0 + 1e-12);
            if j >= 2 {
                let d0 = profile.u[j - 1] - profile.u[j - 2];
                let d1 = profile.u[j] - profile.u[j - 1];
                if d0 > 1e-10 && d1 < -1e-10 {
                    sign_changes += 1;
                }
            }
        }
        assert!(sign_changes <= 1, "u should rise at most once, then fall");
        // Finite-difference residual against the stored field.
        let resid = profile.fd_residual_max();
        assert!(
            resid <= 1e-6 * profile.rhs_scale(),
            "residual {resid} too large"
        );
        // Tail rates: -inf side is a mix of alpha_- = 0.4359 and the
        // reactive rate (k/s) phi(u_-) = 0.4374; +inf side is alpha_+ = -1.3.
        let (rl, rr) = profile.tail_decay_rates;
        let g_minus = (cfg.k / 1.5) * cfg.phi(1.9358898944);
        let best_l = [wave.alpha_minus, g_minus]
            .iter()
            .map(|r| (rl - r).abs() / r.abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best_l < 0.05, "left tail rate {rl} off by {best_l}");
        assert!((rr - wave.alpha_plus).abs() / wave.alpha_plus.abs() < 0.05);
        // Translation normalization: u(0) is the endstate midpoint.
        let (u0, _) = profile.eval(0.0);
        assert!((u0 - 0.5 * (1.9358898944 + 0.2)).abs() < 1e-9);
        assert_eq!(profile.zhat, Some(1.0));
    }

    #[test]
    fn translation_normalization_is_solver_independent() {
        // Rebuilding with a different step-size sequence must give the same
        // normalized profile up to a single shift.
        let cfg = p0();
        let wave = classify_wave(&cfg, 1.9358898944, 0.2, 1.5).unwrap();
        let p1 = compute_profile(&cfg, &wave, &LPolicy::default()).unwrap();
        let p2 = compute_profile(
            &cfg,
            &wave,
            &LPolicy {
                rtol: 1e-11,
                atol: 1e-13,
                ..LPolicy::default()
            },
        )
        .unwrap();
        let dist = p1.distance_up_to_shift(&p2);
        assert!(dist <= 1e-8, "profiles differ by {dist} after shift fitting");
    }

    #[test]
    fn inert_shock_profile_connects() {
        let cfg = p0();
        let wave = WaveSpec {
            u_minus: 2.0,
            u_plus: 1.0,
            z_minus: 0.0,
            z_plus: 0.0,
            s: 1.5,
            class: WaveClass::InertShock,
            alpha_minus: 0.5,
            alpha_plus: -0.5,
        };
        let p = compute_profile(&cfg, &wave, &LPolicy::default()).unwrap();
        assert!(p.endstate_error.0 <= 1e-8 && p.endstate_error.1 <= 1e-8);
        assert!(p.fd_residual_max() <= 1e-6 * p.rhs_scale());
        // Viscous Burgers shock in a moving frame is a tanh of slope set by
        // the half-jump.
        let (u0, _) = p.eval(0.0);
        assert!((u0 - 1.5).abs() < 1e-9);
    }

    #[test]
    fn cj_profile_rejected() {
        let cfg = p0();
        let wave = WaveSpec {
            u_minus: 1.3708203932,
            u_plus: 0.2,
            z_minus: 0.0,
            z_plus: 1.0,
            s: 1.3708203932,
            class: WaveClass::CJDetonation,
            alpha_minus: 0.0,
            alpha_plus: -1.1708203932,
        };
        assert!(matches!(
            compute_profile(&cfg, &wave, &LPolicy::default()),
            Err(Error::NoConnection(_))
        ));
    }
}
