//! Dormand–Prince 5(4) with PI step-size control.
//!
//! Fixed-size state (`[f64; N]`), FSAL stage reuse, optional checkpoints that
//! accepted steps land on exactly, and an observer that may stop the
//! integration after any accepted step.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steps smaller than `max(min_step_rel · |t|, min_step_abs)` count as underflow.
    pub min_step_rel: f64,
    pub min_step_abs: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, min_step_rel: 1e-14, min_step_abs: 0.0, max_steps: 2_000_000 }
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    ReachedEnd,
    Stopped,
    StepUnderflow { t: f64, step: f64 },
    NonFinite { t: f64 },
    MaxSteps { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub outcome: Outcome,
    pub accepted: usize,
    pub rejected: usize,
}

fn add_scaled<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn is_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn weighted_rms<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    ctl: &StepControl,
) -> f64 {
    let sc: [f64; N] = std::array::from_fn(|i| ctl.abs_tol + ctl.rel_tol * y0[i].abs());
    let d0 = weighted_rms(y0, &sc);
    let d1 = weighted_rms(f0, &sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span.max(t0.abs()) } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = add_scaled(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    if !is_finite(&f1) {
        return h0 * 1e-3;
    }
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = weighted_rms(&diff, &sc) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6 * h0) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
///
/// `checkpoints` must be sorted; accepted steps are shortened so each one
/// inside `(t0, t_end]` becomes a step endpoint. The observer sees every
/// accepted `(t, y)` and can stop the run.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctl: &StepControl,
    checkpoints: &[f64],
    mut observer: impl FnMut(f64, &[f64; N]) -> Flow,
) -> Summary {
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut accepted = 0;
    let mut rejected = 0;
    if !is_finite(&k1) || !is_finite(&y) {
        return Summary { outcome: Outcome::NonFinite { t }, accepted, rejected };
    }
    let mut h = initial_step(&f, t0, &y0, &k1, t_end - t0, ctl);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut next_cp = checkpoints.iter().position(|&c| c > t0).unwrap_or(checkpoints.len());

    while t < t_end {
        if accepted + rejected >= ctl.max_steps {
            return Summary { outcome: Outcome::MaxSteps { t }, accepted, rejected };
        }
        let min_step = (ctl.min_step_rel * t.abs()).max(ctl.min_step_abs);
        if h < min_step || h <= 0.0 {
            return Summary { outcome: Outcome::StepUnderflow { t, step: h }, accepted, rejected };
        }

        // Clip to the next checkpoint or the end.
        let mut target = t_end;
        while next_cp < checkpoints.len() && checkpoints[next_cp] <= t {
            next_cp += 1;
        }
        if next_cp < checkpoints.len() && checkpoints[next_cp] < t_end {
            target = checkpoints[next_cp];
        }
        let mut lands = false;
        if t + h >= target {
            h = target - t;
            lands = true;
        }

        let k2 = f(t + C2 * h, &add_scaled(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &add_scaled(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &add_scaled(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &add_scaled(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &add_scaled(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = add_scaled(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);

        let finite = is_finite(&y_new) && is_finite(&k7);
        let err = if finite {
            let e: [f64; N] = std::array::from_fn(|i| {
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            let sc: [f64; N] =
                std::array::from_fn(|i| ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs()));
            weighted_rms(&e, &sc)
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            t = if lands { target } else { t + h };
            y = y_new;
            k1 = k7;
            accepted += 1;
            if lands && next_cp < checkpoints.len() && target == checkpoints[next_cp] {
                next_cp += 1;
            }
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-(0.2 - 0.75 * BETA)) * err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX)
            };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            err_old = err.max(1e-4);
            last_rejected = false;
            if observer(t, &y) == Flow::Stop {
                return Summary { outcome: Outcome::Stopped, accepted, rejected };
            }
            h *= fac;
        } else {
            rejected += 1;
            last_rejected = true;
            if err.is_finite() {
                h *= (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            } else {
                h *= 0.1;
            }
            let floor = (ctl.min_step_rel * t.abs()).max(ctl.min_step_abs);
            if h < floor && !finite {
                return Summary { outcome: Outcome::NonFinite { t }, accepted, rejected };
            }
        }
    }
    Summary { outcome: Outcome::ReachedEnd, accepted, rejected }
}
