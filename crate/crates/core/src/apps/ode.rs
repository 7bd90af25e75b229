//! Dormand–Prince 5(4) with PI step-size control and cubic Hermite dense
//! output.

use crate::error::{Error, Result};

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

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, h_init: None, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    /// `(t, y)` at the requested sample times, in request order.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to the last entry of `times`
/// (which must be monotone in the direction of integration).
///
/// `admissible` is consulted on every candidate step; a step producing an
/// inadmissible state is retried with half the step size, and the error
/// returned by `admissible` is propagated once the step would fall below
/// `h_min`.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    opts: &OdeOptions,
    mut admissible: G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let Some(&t_end) = times.last() else {
        return Ok(OdeSolution { samples: Vec::new(), accepted: 0, rejected: 0, evaluations: 0 });
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    if times.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (times[0] - t0) * dir < 0.0 {
        return Err(Error::InvalidInput("sample times must be monotone in the integration direction".into()));
    }
    if !(opts.rtol > 0.0) || !(opts.atol >= 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }

    let mut samples = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == t0 {
        samples.push((t0, y0.to_vec()));
        next += 1;
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0]);
    let mut evals = 1;
    let span = (t_end - t0).abs();
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&y, &k[0], opts, span));
    let mut err_prev: f64 = 1e-4;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    while next < times.len() {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow(t));
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = h * dir;

        for i in 0..n {
            ytmp[i] = y[i] + hs * A21 * k[0][i];
        }
        f(t + C2 * hs, &ytmp, &mut k[1]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * hs, &ytmp, &mut k[2]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * hs, &ytmp, &mut k[3]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * hs, &ytmp, &mut k[4]);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        f(t + hs, &ytmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i] + hs * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        let t_new = if last { t_end } else { t + hs };
        f(t_new, &ynew, &mut k[6]);
        evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            rejected += 1;
            h *= FAC_MIN;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow(t));
            }
            continue;
        }

        if let Err(e) = admissible(t_new, &ynew) {
            rejected += 1;
            h *= 0.5;
            if h < opts.h_min {
                return Err(e);
            }
            continue;
        }

        if err <= 1.0 {
            // Emit samples falling inside (t, t_new].
            while next < times.len() && (times[next] - t_new) * dir <= 0.0 {
                let s = times[next];
                let theta = if hs == 0.0 { 1.0 } else { (s - t) / hs };
                samples.push((s, hermite(&y, &ynew, &k[0], &k[6], hs, theta)));
                next += 1;
            }
            let fac = (SAFETY * err.max(1e-10).powf(-ALPHA) * err_prev.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
            err_prev = err.max(1e-4);
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            accepted += 1;
            h *= fac;
        } else {
            rejected += 1;
            let fac = (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
            h *= fac;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow(t));
            }
        }
    }
    Ok(OdeSolution { samples, accepted, rejected, evaluations: evals })
}

/// Cubic Hermite interpolant on `[t, t + h]` at fraction `s`.
fn hermite(y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], h: f64, s: f64) -> Vec<f64> {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

fn initial_step(y: &[f64], f0: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.max(f64::MIN_POSITIVE))
}
