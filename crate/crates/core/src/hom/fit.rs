use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{side_peaks, CoincidenceHistogram, PeakSelection};
use crate::error::{Error, Result};

const BASELINE: usize = 0;
const TAU: usize = 1;
const OFFSET: usize = 2;
const FIRST_PEAK: usize = 3;

/// Peaks are truncated this many decay times from their centre.
const TAIL_CUT: f64 = 40.0;
const MIN_TAU: f64 = 1e-6;
const MIN_MEAN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub max_iterations: usize,
    /// Convergence threshold on the Newton decrement `gᵀ I⁻¹ g`.
    pub tolerance: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

/// Unit-height double-exponential peak `e^{-|t-c|/τ}`.
pub fn peak_profile(t: f64, center: f64, tau: f64) -> f64 {
    (-(t - center).abs() / tau).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTrainFit {
    /// Counts per bin.
    pub baseline: f64,
    pub tau_ns: f64,
    /// Common shift of all peak centres (ns).
    pub offset_ns: f64,
    /// Peak heights in counts per bin.
    pub amplitudes: Vec<f64>,
    /// Repetition index of each peak.
    pub peak_indices: Vec<i64>,
    /// Row-major covariance of `[B, τ, t0, A_0, A_1, ...]`.
    pub covariance: Vec<f64>,
    /// Pearson χ² per degree of freedom.
    pub reduced_chi_square: f64,
    pub deviance: f64,
    pub iterations: usize,
    pub bins_used: usize,
    pub window_ns: [f64; 2],
    pub bin_width_ns: f64,
    pub rep_period_ns: f64,
    pub hom_delay_ns: f64,
}

impl PeakTrainFit {
    pub fn parameter_count(&self) -> usize {
        FIRST_PEAK + self.amplitudes.len()
    }

    pub fn amplitude_param(&self, peak: usize) -> usize {
        FIRST_PEAK + peak
    }

    pub fn centers(&self) -> Vec<f64> {
        self.peak_indices
            .iter()
            .map(|&i| i as f64 * self.rep_period_ns + self.offset_ns)
            .collect()
    }

    /// Peak areas `2 A_i τ` (counts·ns per bin).
    pub fn areas(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| 2.0 * a * self.tau_ns)
            .collect()
    }

    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.parameter_count() + j]
    }

    /// `vᵀ C v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.parameter_count();
        let mut s = 0.0;
        for i in 0..n {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                s += v[i] * self.covariance[i * n + j] * v[j];
            }
        }
        s
    }

    /// Linear response of every parameter to a unit shift of the baseline
    /// with the others re-optimised: `C[:, B] / C[B, B]`.
    pub fn baseline_response(&self) -> Vec<f64> {
        let n = self.parameter_count();
        let var_b = self.covariance[BASELINE * n + BASELINE];
        if var_b <= 0.0 {
            return vec![0.0; n];
        }
        (0..n)
            .map(|i| self.covariance[i * n + BASELINE] / var_b)
            .collect()
    }

    fn theta(&self) -> Vec<f64> {
        let mut t = vec![self.baseline, self.tau_ns, self.offset_ns];
        t.extend(&self.amplitudes);
        t
    }

    /// Expected counts in the bin centred at `t`.
    pub fn expected(&self, t: f64) -> f64 {
        let mut mu = self.baseline;
        let cut = TAIL_CUT * self.tau_ns;
        for (c, a) in self.centers().iter().zip(&self.amplitudes) {
            if (t - c).abs() < cut + self.bin_width_ns {
                mu += a * bin_average(
                    t - 0.5 * self.bin_width_ns - c,
                    self.bin_width_ns,
                    self.tau_ns,
                )
                .0;
            }
        }
        mu
    }

    /// `(delay, counts, expected, Pearson residual)` for every bin in the window.
    pub fn residuals(&self, h: &CoincidenceHistogram) -> Vec<(f64, f64, f64, f64)> {
        h.bin_centers
            .iter()
            .zip(&h.counts)
            .filter(|(t, _)| in_window(**t, self.window_ns))
            .map(|(&t, &y)| {
                let mu = self.expected(t);
                (t, y, mu, (y - mu) / mu.max(MIN_MEAN).sqrt())
            })
            .collect()
    }

    /// Likelihood-ratio interval (deviance + 1) on the zero-delay ratio
    /// `A_0 / ⟨A⟩` of an interference histogram, profiling every other
    /// parameter.
    pub fn zero_peak_ratio_interval(
        &self,
        h: &CoincidenceHistogram,
        n_uncorrelated: usize,
        settings: &FitSettings,
    ) -> Result<[f64; 2]> {
        let side = side_peaks(self, n_uncorrelated, PeakSelection::Hom)?;
        let zero = self.peak_indices.iter().position(|&i| i == 0).unwrap();
        let problem = Problem::new(h, self.window_ns, self.peak_indices.clone())?;
        let param = FIRST_PEAK + zero;
        let mut fixed = vec![false; self.parameter_count()];
        fixed[param] = true;
        let best = self.theta();
        let ratio = |theta: &[f64]| {
            let mean = side.iter().map(|&p| theta[FIRST_PEAK + p]).sum::<f64>() / side.len() as f64;
            theta[param] / mean
        };
        let sigma = self
            .covariance_entry(param, param)
            .max(0.0)
            .sqrt()
            .max(1e-12 * (1.0 + best[param]));

        let bound = |direction: f64| -> Result<f64> {
            let mut warm = best.clone();
            let profile = |a: f64, warm: &mut Vec<f64>| -> Result<f64> {
                let mut start = warm.clone();
                start[param] = a;
                let sol = solve(&problem, start, &fixed, settings)?;
                *warm = sol.theta;
                Ok((sol.deviance - self.deviance).max(0.0).sqrt() - 1.0)
            };
            let mut lo = (best[param], -1.0, best.clone());
            let mut step = sigma;
            let hi = loop {
                let mut a = best[param] + direction * step;
                if a <= 0.0 {
                    a = 0.0;
                }
                let f = profile(a, &mut warm)?;
                if f >= 0.0 {
                    break (a, f, warm.clone());
                }
                if a == 0.0 {
                    return Ok(ratio(&warm));
                }
                lo = (a, f, warm.clone());
                step *= 2.0;
                if step > 1e6 * sigma {
                    return Err(Error::FitNonConvergence {
                        iterations: 0,
                        residual: f,
                    });
                }
            };
            // Illinois false position on sqrt(Δdeviance) - 1.
            let (mut a0, mut f0, mut a1, mut f1) = (lo.0, lo.1, hi.0, hi.1);
            let mut theta = hi.2;
            warm = lo.2;
            for _ in 0..80 {
                if f1.abs() < 1e-7 || (a1 - a0).abs() < 1e-10 * sigma {
                    break;
                }
                let a = (a0 * f1 - a1 * f0) / (f1 - f0);
                let f = profile(a, &mut warm)?;
                theta = warm.clone();
                if f * f1 < 0.0 {
                    a0 = a1;
                    f0 = f1;
                } else {
                    f0 *= 0.5;
                }
                a1 = a;
                f1 = f;
            }
            Ok(ratio(&theta))
        };
        let upper = bound(1.0)?;
        let lower = bound(-1.0)?;
        Ok([lower.min(upper), upper.max(lower)])
    }
}

fn in_window(t: f64, w: [f64; 2]) -> bool {
    t >= w[0] && t <= w[1]
}

/// Average of `e^{-|t-c|/τ}` over the bin `[c + ua, c + ua + w]`, with its
/// derivatives with respect to the centre and to `τ`.
fn bin_average(ua: f64, w: f64, tau: f64) -> (f64, f64, f64) {
    let ub = ua + w;
    let l = |u: f64| (-u.abs() / tau).exp();
    let m = |u: f64| {
        let x = u.abs() / tau;
        (-x).exp() * (1.0 + x)
    };
    let (integral, d_tau) = if ub <= 0.0 {
        (tau * (l(ub) - l(ua)), m(ub) - m(ua))
    } else if ua >= 0.0 {
        (tau * (l(ua) - l(ub)), m(ua) - m(ub))
    } else {
        (tau * (2.0 - l(ua) - l(ub)), 2.0 - m(ua) - m(ub))
    };
    let d_center = -(l(ub) - l(ua));
    (integral / w, d_center / w, d_tau / w)
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    width: f64,
    period: f64,
    peaks: Vec<i64>,
}

struct Evaluation {
    deviance: f64,
    gradient: Vec<f64>,
    fisher: DMatrix<f64>,
    pearson: f64,
}

impl<'a> Problem<'a> {
    fn new(h: &'a CoincidenceHistogram, window: [f64; 2], peaks: Vec<i64>) -> Result<Self> {
        let lo = h.bin_centers.partition_point(|&t| t < window[0]);
        let hi = h.bin_centers.partition_point(|&t| t <= window[1]);
        if hi <= lo {
            return Err(Error::invalid("window", "contains no bins"));
        }
        Ok(Self {
            t: &h.bin_centers[lo..hi],
            y: &h.counts[lo..hi],
            width: h.bin_width(),
            period: h.rep_period_ns,
            peaks,
        })
    }

    fn params(&self) -> usize {
        FIRST_PEAK + self.peaks.len()
    }

    /// Calls `visit(p, avg, d_center, d_tau)` for each peak touching bin `k`.
    fn for_peaks_at<F: FnMut(usize, f64, f64, f64)>(&self, k: usize, theta: &[f64], mut visit: F) {
        let tau = theta[TAU];
        let t0 = theta[OFFSET];
        let cut = TAIL_CUT * tau + self.width;
        let t = self.t[k];
        let first = self.peaks[0];
        let i_lo = ((t - t0 - cut) / self.period).ceil() as i64;
        let i_hi = ((t - t0 + cut) / self.period).floor() as i64;
        for i in i_lo.max(first)..=i_hi.min(first + self.peaks.len() as i64 - 1) {
            let p = (i - first) as usize;
            let c = i as f64 * self.period + t0;
            let (avg, dc, dtau) = bin_average(t - 0.5 * self.width - c, self.width, tau);
            visit(p, avg, dc, dtau);
        }
    }

    fn mean(&self, k: usize, theta: &[f64]) -> f64 {
        let mut mu = theta[BASELINE];
        self.for_peaks_at(k, theta, |p, avg, _, _| mu += theta[FIRST_PEAK + p] * avg);
        mu
    }

    fn deviance(&self, theta: &[f64]) -> f64 {
        (0..self.t.len())
            .map(|k| deviance_term(self.y[k], self.mean(k, theta)))
            .sum()
    }

    fn evaluate(&self, theta: &[f64]) -> Evaluation {
        let n = self.params();
        let mut fisher = DMatrix::zeros(n, n);
        let mut gradient = vec![0.0; n];
        let mut deviance = 0.0;
        let mut pearson = 0.0;
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(8);
        for k in 0..self.t.len() {
            entries.clear();
            let mut mu = theta[BASELINE];
            let mut d_tau = 0.0;
            let mut d_offset = 0.0;
            self.for_peaks_at(k, theta, |p, avg, dc, dt| {
                let a = theta[FIRST_PEAK + p];
                mu += a * avg;
                d_tau += a * dt;
                d_offset += a * dc;
                entries.push((FIRST_PEAK + p, avg));
            });
            entries.push((BASELINE, 1.0));
            entries.push((TAU, d_tau));
            entries.push((OFFSET, d_offset));
            let y = self.y[k];
            deviance += deviance_term(y, mu);
            let m = mu.max(MIN_MEAN);
            pearson += (y - mu).powi(2) / m;
            let w = 1.0 / m;
            let r = 1.0 - y / m;
            for &(i, di) in &entries {
                gradient[i] += r * di;
                for &(j, dj) in &entries {
                    fisher[(i, j)] += w * di * dj;
                }
            }
        }
        Evaluation {
            deviance,
            gradient,
            fisher,
            pearson,
        }
    }
}

fn deviance_term(y: f64, mu: f64) -> f64 {
    let mu = mu.max(MIN_MEAN);
    if y > 0.0 {
        2.0 * (mu - y + y * (y / mu).ln())
    } else {
        2.0 * mu
    }
}

fn lower_bound(param: usize) -> f64 {
    match param {
        OFFSET => f64::NEG_INFINITY,
        TAU => MIN_TAU,
        _ => 0.0,
    }
}

struct Solution {
    theta: Vec<f64>,
    deviance: f64,
    evaluation: Evaluation,
    iterations: usize,
}

/// Bound-constrained Fisher scoring with Levenberg–Marquardt damping on the
/// Poisson deviance.
fn solve(
    problem: &Problem,
    mut theta: Vec<f64>,
    fixed: &[bool],
    settings: &FitSettings,
) -> Result<Solution> {
    let n = problem.params();
    let mut lambda = 1e-3;
    let mut eval = problem.evaluate(&theta);
    for iteration in 0..settings.max_iterations {
        // Free parameters that are not pinned against their bound.
        let active: Vec<usize> = (0..n)
            .filter(|&j| !fixed[j] && !(theta[j] <= lower_bound(j) && eval.gradient[j] > 0.0))
            .collect();
        let m = active.len();
        let info = DMatrix::from_fn(m, m, |a, b| eval.fisher[(active[a], active[b])]);
        let grad = DVector::from_fn(m, |a, _| eval.gradient[active[a]]);
        let decrement = match info.clone().cholesky() {
            Some(ch) => grad.dot(&ch.solve(&grad)),
            None => f64::INFINITY,
        };
        if decrement < settings.tolerance {
            return Ok(Solution {
                deviance: eval.deviance,
                theta,
                evaluation: eval,
                iterations: iteration,
            });
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = info.clone();
            for a in 0..m {
                damped[(a, a)] += lambda * info[(a, a)].max(1e-300);
            }
            let Some(ch) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = ch.solve(&(-&grad));
            let mut trial = theta.clone();
            for (a, &j) in active.iter().enumerate() {
                trial[j] = (theta[j] + step[a]).max(lower_bound(j));
            }
            let d = problem.deviance(&trial);
            if d.is_finite() && d <= eval.deviance {
                improved = d < eval.deviance;
                if improved {
                    theta = trial;
                }
                lambda = (lambda * 0.1).max(1e-12);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent left; accept only if the remaining decrease is negligible.
            if decrement < 1e-6 * (1.0 + eval.deviance.abs()) {
                return Ok(Solution {
                    deviance: eval.deviance,
                    theta,
                    evaluation: eval,
                    iterations: iteration,
                });
            }
            return Err(Error::FitNonConvergence {
                iterations: iteration,
                residual: eval.deviance,
            });
        }
        eval = problem.evaluate(&theta);
    }
    Err(Error::FitNonConvergence {
        iterations: settings.max_iterations,
        residual: eval.deviance,
    })
}

/// Moment estimates to start the fit.
fn initial_guess(problem: &Problem) -> Vec<f64> {
    let mut sorted = problem.y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[sorted.len() / 2];
    let half = 0.4 * problem.period;
    let first_t = problem.t[0];
    let bin_of = |t: f64| {
        (((t - first_t) / problem.width).round().max(0.0) as usize).min(problem.t.len() - 1)
    };

    let mut excess = Vec::with_capacity(problem.peaks.len());
    for &i in &problem.peaks {
        let c = i as f64 * problem.period;
        let (lo, hi) = (bin_of(c - half), bin_of(c + half));
        let mut area = 0.0;
        let mut height: f64 = 0.0;
        for k in lo..=hi {
            let e = problem.y[k] - baseline;
            area += e;
            height = height.max(e);
        }
        excess.push((area.max(0.0), height.max(0.0), lo, hi, c));
    }
    let mut by_height: Vec<usize> = (0..excess.len()).collect();
    by_height.sort_by(|&a, &b| excess[b].1.total_cmp(&excess[a].1));
    let top = &by_height[..by_height.len().min(10)];

    let mut taus: Vec<f64> = top
        .iter()
        .filter(|&&p| excess[p].1 > 0.0)
        .map(|&p| excess[p].0 * problem.width / (2.0 * excess[p].1))
        .collect();
    taus.sort_by(f64::total_cmp);
    let tau = taus
        .get(taus.len() / 2)
        .copied()
        .unwrap_or(problem.width)
        .clamp(0.25 * problem.width, 0.25 * problem.period);

    let (mut num, mut den) = (0.0, 0.0);
    for &p in top {
        let (_, _, lo, hi, c) = excess[p];
        for k in lo..=hi {
            let e = (problem.y[k] - baseline).max(0.0);
            if (problem.t[k] - c).abs() < 5.0 * tau {
                num += e * (problem.t[k] - c);
                den += e;
            }
        }
    }
    let offset = if den > 0.0 { num / den } else { 0.0 };

    let mut theta = vec![baseline, tau, offset];
    theta.extend(excess.iter().map(|e| e.0 * problem.width / (2.0 * tau)));
    theta
}

/// Fit `B + Σ A_i e^{-|t - i·T_rep - t0|/τ}` (averaged over each bin) to the
/// bins inside `window`, maximising the Poisson likelihood.
pub fn fit_peak_train(
    h: &CoincidenceHistogram,
    window: [f64; 2],
    settings: &FitSettings,
) -> Result<PeakTrainFit> {
    h.validate()?;
    if !(window[1] - window[0] >= 10.0 * h.rep_period_ns) {
        return Err(Error::invalid(
            "window",
            "must cover at least 10 repetition periods",
        ));
    }
    let i_lo = (window[0] / h.rep_period_ns).ceil() as i64;
    let i_hi = (window[1] / h.rep_period_ns).floor() as i64;
    let peaks: Vec<i64> = (i_lo..=i_hi).collect();
    if !peaks.contains(&0) {
        return Err(Error::invalid("window", "must contain zero delay"));
    }
    let problem = Problem::new(h, window, peaks.clone())?;
    if problem.y.iter().all(|&y| y == 0.0) {
        return Err(Error::DegenerateData(
            "all counts in the window are zero".into(),
        ));
    }
    let n = problem.params();
    let sol = solve(&problem, initial_guess(&problem), &vec![false; n], settings)?;

    let covariance = match sol.evaluation.fisher.clone().try_inverse() {
        Some(c) => c,
        None => {
            return Err(Error::DegenerateData("singular Fisher information".into()));
        }
    };
    let dof = problem.t.len().saturating_sub(n).max(1);
    Ok(PeakTrainFit {
        baseline: sol.theta[BASELINE],
        tau_ns: sol.theta[TAU],
        offset_ns: sol.theta[OFFSET],
        amplitudes: sol.theta[FIRST_PEAK..].to_vec(),
        peak_indices: peaks,
        covariance: (0..n * n)
            .map(|idx| covariance[(idx / n, idx % n)])
            .collect(),
        reduced_chi_square: sol.evaluation.pearson / dof as f64,
        deviance: sol.deviance,
        iterations: sol.iterations,
        bins_used: problem.t.len(),
        window_ns: window,
        bin_width_ns: problem.width,
        rep_period_ns: h.rep_period_ns,
        hom_delay_ns: h.hom_delay_ns,
    })
}
