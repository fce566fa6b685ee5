//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) for the
//! small real and complex systems used by the wave and spectral routines.
//!
//! The integrator is deliberately minimal: fixed-dimension states, FSAL,
//! a standard step controller, exact stopping at target abscissae, and
//! event location by bracketing plus bisection/secant refinement on
//! re-integrated mini-steps. Both integration directions are supported.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// State vectors the integrator can advance.
pub trait OdeState: Clone {
    fn zero_like(&self) -> Self;
    /// `self + h * sum(coeffs[i] * ks[i])`, skipping zero coefficients.
    fn rk_combine(&self, h: f64, coeffs: &[f64], ks: &[Self]) -> Self;
    /// Weighted RMS norm of `err` against `atol + rtol * max(|y0|,|y1|)`.
    fn wrms(&self, y1: &Self, err: &Self, atol: f64, rtol: f64) -> f64;
    fn is_finite(&self) -> bool;
    /// Max component magnitude, for overflow guards.
    fn max_abs(&self) -> f64;
}

impl<const N: usize> OdeState for [f64; N] {
    fn zero_like(&self) -> Self {
        [0.0; N]
    }
    fn rk_combine(&self, h: f64, coeffs: &[f64], ks: &[Self]) -> Self {
        let mut out = *self;
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                for i in 0..N {
                    out[i] += h * c * k[i];
                }
            }
        }
        out
    }
    fn wrms(&self, y1: &Self, err: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = atol + rtol * self[i].abs().max(y1[i].abs());
            let r = err[i] / scale;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<const N: usize> OdeState for [Complex64; N] {
    fn zero_like(&self) -> Self {
        [Complex64::new(0.0, 0.0); N]
    }
    fn rk_combine(&self, h: f64, coeffs: &[f64], ks: &[Self]) -> Self {
        let mut out = *self;
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                for i in 0..N {
                    out[i] += h * c * k[i];
                }
            }
        }
        out
    }
    fn wrms(&self, y1: &Self, err: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = atol + rtol * self[i].norm().max(y1[i].norm());
            let r = err[i].norm() / scale;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b_hat, applied to all seven stages.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Abort if any component magnitude exceeds this (rescaled systems
    /// should stay O(1); blowup means the formulation is wrong).
    pub max_magnitude: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            max_magnitude: 1e100,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..OdeOptions::default()
        }
    }
}

/// One accepted step of the integration, for callers that need the path.
#[derive(Debug, Clone)]
pub struct StepRecord<S> {
    pub x: f64,
    pub y: S,
}

struct Stepper<'a, S, F>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    rhs: F,
    opts: &'a OdeOptions,
    k1: Option<S>,
    steps_taken: usize,
}

impl<'a, S, F> Stepper<'a, S, F>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    fn new(rhs: F, opts: &'a OdeOptions) -> Self {
        Stepper {
            rhs,
            opts,
            k1: None,
            steps_taken: 0,
        }
    }

    /// Attempt steps from `(x, y)` until one is accepted; returns the new
    /// point and the suggested next step size.
    fn advance(&mut self, x: f64, y: &S, h_try: f64) -> Result<(f64, S, f64)> {
        let mut h = h_try;
        loop {
            self.steps_taken += 1;
            if self.steps_taken > self.opts.max_steps {
                return Err(Error::Solve(format!(
                    "step budget exhausted after {} steps at x = {x}",
                    self.opts.max_steps
                )));
            }
            if h.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(Error::Solve(format!("step size underflow at x = {x}")));
            }

            let k1 = match &self.k1 {
                Some(k) => k.clone(),
                None => (self.rhs)(x, y),
            };
            let y2 = y.rk_combine(h, &A2, std::slice::from_ref(&k1));
            let k2 = (self.rhs)(x + C[1] * h, &y2);
            let ks12 = [k1.clone(), k2];
            let y3 = y.rk_combine(h, &A3, &ks12);
            let k3 = (self.rhs)(x + C[2] * h, &y3);
            let ks123 = [ks12[0].clone(), ks12[1].clone(), k3];
            let y4 = y.rk_combine(h, &A4, &ks123);
            let k4 = (self.rhs)(x + C[3] * h, &y4);
            let ks1234 = [
                ks123[0].clone(),
                ks123[1].clone(),
                ks123[2].clone(),
                k4,
            ];
            let y5 = y.rk_combine(h, &A5, &ks1234);
            let k5 = (self.rhs)(x + C[4] * h, &y5);
            let ks = [
                ks1234[0].clone(),
                ks1234[1].clone(),
                ks1234[2].clone(),
                ks1234[3].clone(),
                k5,
            ];
            let y6 = y.rk_combine(h, &A6, &ks);
            let k6 = (self.rhs)(x + C[5] * h, &y6);
            let ks6 = [
                ks[0].clone(),
                ks[1].clone(),
                ks[2].clone(),
                ks[3].clone(),
                ks[4].clone(),
                k6,
            ];
            let y_new = y.rk_combine(h, &B, &ks6);
            let k7 = (self.rhs)(x + h, &y_new);
            let ks7 = [
                ks6[0].clone(),
                ks6[1].clone(),
                ks6[2].clone(),
                ks6[3].clone(),
                ks6[4].clone(),
                ks6[5].clone(),
                k7.clone(),
            ];
            let err = y.zero_like().rk_combine(h, &E, &ks7);
            let err_norm = y.wrms(&y_new, &err, self.opts.atol, self.opts.rtol);

            if !y_new.is_finite() || !err_norm.is_finite() {
                h *= 0.25;
                self.k1 = None;
                continue;
            }

            if err_norm <= 1.0 {
                if y_new.max_abs() > self.opts.max_magnitude {
                    return Err(Error::Integration(format!(
                        "solution magnitude exceeded {:e} at x = {}",
                        self.opts.max_magnitude,
                        x + h
                    )));
                }
                let factor = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                let h_next = (h * factor).clamp(-self.opts.h_max, self.opts.h_max);
                self.k1 = Some(k7);
                return Ok((x + h, y_new, h_next));
            }
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            // k1 stays valid: same starting point.
            self.k1 = Some(ks7[0].clone());
        }
    }
}

fn initial_step<S: OdeState>(rhs: &impl Fn(f64, &S) -> S, x0: f64, y0: &S, dir: f64) -> f64 {
    let f0 = rhs(x0, y0).max_abs();
    let scale = y0.max_abs().max(1e-6);
    let h = if f0 > 1e-12 { 0.01 * scale / f0 } else { 1e-3 };
    dir * h.clamp(1e-10, 1.0)
}

/// Integrate from `x0` to `x1` (either direction), returning the endpoint state.
pub fn integrate<S: OdeState>(
    rhs: impl Fn(f64, &S) -> S,
    x0: f64,
    y0: &S,
    x1: f64,
    opts: &OdeOptions,
) -> Result<S> {
    if x0 == x1 {
        return Ok(y0.clone());
    }
    let dir = (x1 - x0).signum();
    let mut stepper = Stepper::new(&rhs, opts);
    let mut x = x0;
    let mut y = y0.clone();
    let mut h = initial_step(&rhs, x0, y0, dir);
    while (x1 - x) * dir > 0.0 {
        let clipped = (x + h - x1) * dir > 0.0;
        let h_clip = if clipped { x1 - x } else { h };
        let (xn, yn, h_next) = stepper.advance(x, &y, h_clip)?;
        x = xn;
        y = yn;
        h = if clipped {
            h.abs().max(h_next.abs()) * dir
        } else {
            h_next
        };
    }
    Ok(y)
}

/// Integrate forward hitting every abscissa in `xs` exactly (xs monotone in
/// the direction of integration, first entry may equal `x0`).
pub fn integrate_to_points<S: OdeState>(
    rhs: impl Fn(f64, &S) -> S,
    x0: f64,
    y0: &S,
    xs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut x = x0;
    let mut y = y0.clone();
    for &target in xs {
        y = integrate(&rhs, x, &y, target, opts)?;
        x = target;
        out.push(y.clone());
    }
    Ok(out)
}

/// Result of an event-terminated integration.
#[derive(Debug, Clone)]
pub enum EventOutcome<S> {
    /// The event function crossed zero at `x` with state `y`.
    Event { x: f64, y: S },
    /// The abscissa limit was reached without a crossing.
    ReachedLimit { x: f64, y: S },
}

/// Integrate from `x0` toward `x_limit` until `event(x, y)` changes sign.
///
/// The crossing is refined to near machine precision by bisection/secant on
/// re-integrations inside the bracketing step. A `watch` callback sees every
/// accepted step and may abort with an error (used for trapping-region checks).
pub fn integrate_with_event<S: OdeState>(
    rhs: impl Fn(f64, &S) -> S,
    x0: f64,
    y0: &S,
    x_limit: f64,
    event: impl Fn(f64, &S) -> f64,
    mut watch: impl FnMut(f64, &S) -> Result<()>,
    opts: &OdeOptions,
) -> Result<EventOutcome<S>> {
    let dir = (x_limit - x0).signum();
    if dir == 0.0 {
        return Ok(EventOutcome::ReachedLimit {
            x: x0,
            y: y0.clone(),
        });
    }
    let mut stepper = Stepper::new(&rhs, opts);
    let mut x = x0;
    let mut y = y0.clone();
    let mut g = event(x0, y0);
    let mut h = initial_step(&rhs, x0, y0, dir);
    loop {
        if (x_limit - x) * dir <= 0.0 {
            return Ok(EventOutcome::ReachedLimit { x, y });
        }
        let h_clip = if (x + h - x_limit) * dir > 0.0 {
            x_limit - x
        } else {
            h
        };
        let (xn, yn, h_next) = stepper.advance(x, &y, h_clip)?;
        let gn = event(xn, &yn);
        if g != 0.0 && gn != 0.0 && g.signum() != gn.signum() {
            // Refine inside [x, xn] by bisection with secant acceleration.
            let refine_opts = OdeOptions {
                max_steps: opts.max_steps,
                ..opts.clone()
            };
            let (mut a, mut b) = (x, xn);
            let (mut ga, mut gb) = (g, gn);
            let base = y.clone();
            let mut best = (xn, yn.clone());
            for _ in 0..80 {
                if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
                    break;
                }
                // Secant guess, clamped into the middle 96% of the bracket.
                let mut m = b - gb * (b - a) / (gb - ga);
                let lo = a + 0.02 * (b - a);
                let hi = b - 0.02 * (b - a);
                if !m.is_finite() || (m - lo) * (m - hi) > 0.0 {
                    m = 0.5 * (a + b);
                }
                let ym = integrate(&rhs, x, &base, m, &refine_opts)?;
                let gm = event(m, &ym);
                best = (m, ym);
                if gm == 0.0 {
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                    gb = gm;
                }
            }
            return Ok(EventOutcome::Event {
                x: best.0,
                y: best.1,
            });
        }
        watch(xn, &yn)?;
        x = xn;
        y = yn;
        g = gn;
        h = h_next;
    }
}

/// Convenience wrapper collecting the accepted-step path from `x0` to `x1`.
pub fn integrate_path<S: OdeState>(
    rhs: impl Fn(f64, &S) -> S,
    x0: f64,
    y0: &S,
    x1: f64,
    opts: &OdeOptions,
) -> Result<Vec<StepRecord<S>>> {
    let dir = (x1 - x0).signum();
    let mut stepper = Stepper::new(&rhs, opts);
    let mut path = vec![StepRecord {
        x: x0,
        y: y0.clone(),
    }];
    let mut x = x0;
    let mut y = y0.clone();
    let mut h = initial_step(&rhs, x0, y0, dir);
    while (x1 - x) * dir > 0.0 {
        let h_clip = if (x + h - x1) * dir > 0.0 { x1 - x } else { h };
        let (xn, yn, h_next) = stepper.advance(x, &y, h_clip)?;
        x = xn;
        y = yn.clone();
        path.push(StepRecord { x, y: yn });
        h = h_next;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = OdeOptions::with_tol(1e-11, 1e-13);
        let y = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, &[1.0], 10.0, &opts).unwrap();
        assert!((y[0] - (-10.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::with_tol(1e-11, 1e-13);
        let y = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, &[1.0], -3.0, &opts).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn oscillator_stays_on_circle() {
        let opts = OdeOptions::with_tol(1e-11, 1e-13);
        let y = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            &[1.0, 0.0],
            20.0 * std::f64::consts::PI,
            &opts,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8, "{y:?}");
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn complex_rotation() {
        let opts = OdeOptions::with_tol(1e-11, 1e-13);
        let i = Complex64::new(0.0, 1.0);
        let y = integrate(
            move |_, y: &[Complex64; 1]| [i * y[0]],
            0.0,
            &[Complex64::new(1.0, 0.0)],
            std::f64::consts::PI,
            &opts,
        )
        .unwrap();
        assert!((y[0] + 1.0).norm() < 1e-10);
    }

    #[test]
    fn event_location_hits_log_two() {
        let opts = OdeOptions::with_tol(1e-12, 1e-14);
        let out = integrate_with_event(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            &[1.0],
            50.0,
            |_, y| y[0] - 0.5,
            |_, _| Ok(()),
            &opts,
        )
        .unwrap();
        match out {
            EventOutcome::Event { x, y } => {
                assert!((x - std::f64::consts::LN_2).abs() < 1e-11, "x = {x}");
                assert!((y[0] - 0.5).abs() < 1e-11);
            }
            other => panic!("expected event, got {other:?}"),
        }
    }

    #[test]
    fn event_limit_reached_cleanly() {
        let opts = OdeOptions::default();
        let out = integrate_with_event(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            &[1.0],
            1.0,
            |_, y| y[0] + 1.0, // never crosses
            |_, _| Ok(()),
            &opts,
        )
        .unwrap();
        assert!(matches!(out, EventOutcome::ReachedLimit { .. }));
    }

    #[test]
    fn hits_grid_points_exactly() {
        let opts = OdeOptions::with_tol(1e-11, 1e-13);
        let xs: Vec<f64> = (1..=10).map(|i| 0.3 * i as f64).collect();
        let ys = integrate_to_points(|_, y: &[f64; 1]| [-2.0 * y[0]], 0.0, &[1.0], &xs, &opts)
            .unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - (-2.0 * x).exp()).abs() < 1e-11);
        }
    }
}
