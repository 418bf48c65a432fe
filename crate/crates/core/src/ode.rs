//! Dormand–Prince 5(4) integrator with error control, reporting the state
//! exactly on a caller-supplied output grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steps shorter than this fraction of the grid span abort the run.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            min_step_fraction: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `grid[0]` and calls `sink(i, y)` with
/// the state at every `grid[i]` (including the initial one).
///
/// `grid` must be strictly increasing.
pub fn integrate_on_grid<F, S>(
    f: F,
    y0: &[f64],
    grid: &[f64],
    settings: &OdeSettings,
    mut sink: S,
) -> Result<OdeStats>
where
    F: Fn(f64, &[f64], &mut [f64]),
    S: FnMut(usize, &[f64]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    if grid.is_empty() {
        return Ok(stats);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid", "must be strictly increasing"));
    }
    let mut y = y0.to_vec();
    sink(0, &y);
    if grid.len() == 1 {
        return Ok(stats);
    }
    let span = grid[grid.len() - 1] - grid[0];
    let h_min = settings.min_step_fraction * span;

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut t = grid[0];
    f(t, &y, &mut k1);
    let mut h = initial_step(&y, &k1, settings, grid[1] - grid[0]);

    for (idx, &target) in grid.iter().enumerate().skip(1) {
        while t < target {
            if stats.accepted + stats.rejected >= settings.max_steps {
                return Err(Error::StepUnderflow { t, step: h });
            }
            let remaining = target - t;
            let clamped = h >= remaining;
            let step = if clamped { remaining } else { h };

            for i in 0..n {
                tmp[i] = y[i] + step * A21 * k1[i];
            }
            f(t + C2 * step, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * step, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * step, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * step, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + step, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] =
                    y[i] + step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(t + step, &y_new, &mut k7);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();

            if err <= 1.0 {
                stats.accepted += 1;
                t = if clamped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A short clamped step says nothing about the natural step size.
                if !clamped || step >= 0.5 * h {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StepUnderflow { t, step: h });
                }
            }
        }
        sink(idx, &y);
    }
    Ok(stats)
}

fn initial_step(y: &[f64], dy: &[f64], settings: &OdeSettings, first_interval: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (&yi, &fi) in y.iter().zip(dy) {
        let sc = settings.abs_tol + settings.rel_tol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-3 * first_interval
    } else {
        0.01 * (d0 / d1).sqrt()
    };
    h.min(first_interval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_grid_exactly() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let mut out = vec![0.0; grid.len()];
        integrate_on_grid(
            |_, y, dy| dy[0] = -1.3 * y[0],
            &[1.0],
            &grid,
            &OdeSettings::default(),
            |i, y| out[i] = y[0],
        )
        .unwrap();
        for (t, v) in grid.iter().zip(&out) {
            assert!((v - (-1.3 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.25).collect();
        let mut last = [0.0; 2];
        integrate_on_grid(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            &grid,
            &OdeSettings::default(),
            |_, y| last.copy_from_slice(y),
        )
        .unwrap();
        assert!((last[0] - 50f64.cos()).abs() < 1e-8);
        assert!((last[1] + 50f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn stiff_guard_trips() {
        let s = OdeSettings {
            max_steps: 50,
            ..Default::default()
        };
        let grid = [0.0, 1.0];
        let err = integrate_on_grid(
            |_, y, dy| dy[0] = -1e9 * y[0] + 1e9,
            &[0.0],
            &grid,
            &s,
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }
}
