//! Two-photon coincidence histograms: peak-train fits, `g²(0)` and the
//! corrected HOM indistinguishability.

mod fit;
mod synth;

pub use fit::{fit_peak_train, peak_profile, FitSettings, PeakTrainFit};
pub use synth::{SyntheticHistogram, SyntheticKind};

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 82 MHz laser.
pub const DEFAULT_REP_PERIOD_NS: f64 = 12.195;
pub const DEFAULT_HOM_DELAY_NS: f64 = 12.2;
pub const DEFAULT_WINDOW_NS: [f64; 2] = [-15.0, 600.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_centers: Vec<f64>,
    /// Counts per bin. Stored as reals so that expected (noise-free)
    /// histograms can be fitted too.
    pub counts: Vec<f64>,
    pub rep_period_ns: f64,
    pub hom_delay_ns: f64,
}

impl CoincidenceHistogram {
    pub fn new(bin_centers: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let h = Self {
            bin_centers,
            counts,
            rep_period_ns: DEFAULT_REP_PERIOD_NS,
            hom_delay_ns: DEFAULT_HOM_DELAY_NS,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_centers.len() != self.counts.len() {
            return Err(Error::invalid(
                "histogram",
                "bin and count columns differ in length",
            ));
        }
        if self.bin_centers.len() < 2 {
            return Err(Error::invalid("histogram", "needs at least two bins"));
        }
        if let Some(c) = self.counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(
                "counts",
                format!("must be finite and >= 0, got {c}"),
            ));
        }
        let w = self.bin_width();
        if !(w > 0.0) {
            return Err(Error::invalid("bin_centers", "must be increasing"));
        }
        let t0 = self.bin_centers[0];
        for (i, &t) in self.bin_centers.iter().enumerate() {
            if ((t - t0) - i as f64 * w).abs() > 1e-6 * w * (i.max(1) as f64) {
                return Err(Error::invalid("bin_centers", "bin spacing must be uniform"));
            }
        }
        if !(self.rep_period_ns > 0.0 && self.hom_delay_ns >= 0.0) {
            return Err(Error::invalid("rep_period_ns", "must be > 0"));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        let n = self.bin_centers.len();
        (self.bin_centers[n - 1] - self.bin_centers[0]) / (n - 1) as f64
    }

    /// Two delimited columns `delay_ns counts`; `#` starts a comment.
    /// Commas, semicolons, tabs and spaces all separate fields.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut t = Vec::new();
        let mut c = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body
                .split(|ch: char| ch == ',' || ch == ';' || ch.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let err = |reason: String| Error::Parse {
                line: n + 1,
                reason,
            };
            if fields.len() != 2 {
                return Err(err(format!("expected 2 columns, found {}", fields.len())));
            }
            let delay: f64 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad delay {:?}", fields[0])))?;
            let count: f64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad count {:?}", fields[1])))?;
            if !(count >= 0.0) {
                return Err(err(format!("negative count {count}")));
            }
            t.push(delay);
            c.push(count);
        }
        Self::new(t, c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn write<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# delay_ns counts")?;
        for (t, c) in self.bin_centers.iter().zip(&self.counts) {
            writeln!(out, "{t} {c}")?;
        }
        Ok(())
    }
}

/// Which side peaks normalise the zero-delay peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakSelection {
    /// Autocorrelation: every peak but zero delay.
    Hbt,
    /// Interference: also skip the peaks at plus and minus the interferometer delay.
    Hom,
}

impl PeakSelection {
    /// 50 uncorrelated peaks for the autocorrelation; every peak left in
    /// the default window (48) for the interference histogram.
    pub fn default_count(self) -> usize {
        match self {
            PeakSelection::Hbt => 50,
            PeakSelection::Hom => 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    /// Zero-delay area over the mean side-peak area.
    pub g2_zero: f64,
    /// Combined statistical and baseline uncertainty.
    pub error: f64,
    pub statistical: f64,
    pub baseline: f64,
    pub peaks_used: usize,
}

/// `area_0 / mean(area_i)` over the `n_uncorrelated` side peaks nearest
/// zero delay.
///
/// The error combines the fit covariance with the shift caused by moving
/// the baseline by its own shot noise.
pub fn extract_g2(
    fit: &PeakTrainFit,
    n_uncorrelated: usize,
    selection: PeakSelection,
) -> Result<G2Estimate> {
    let zero = fit
        .peak_indices
        .iter()
        .position(|&i| i == 0)
        .ok_or(Error::InsufficientPeaks {
            needed: 1,
            found: 0,
        })?;
    let side = side_peaks(fit, n_uncorrelated, selection)?;
    let n = side.len() as f64;
    let mean = side.iter().map(|&p| fit.amplitudes[p]).sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::DegenerateData("side peaks have zero area".into()));
    }
    let a0 = fit.amplitudes[zero];
    let g2 = a0 / mean;

    // Gradient with respect to the full parameter vector.
    let mut grad = vec![0.0; fit.parameter_count()];
    grad[fit.amplitude_param(zero)] += 1.0 / mean;
    for &p in &side {
        grad[fit.amplitude_param(p)] -= a0 / (n * mean * mean);
    }
    let var = fit.quadratic_form(&grad);
    let statistical = var.max(0.0).sqrt();
    let baseline = (dot(&grad, &fit.baseline_response()) * fit.baseline.sqrt()).abs();
    Ok(G2Estimate {
        g2_zero: g2,
        error: statistical.hypot(baseline),
        statistical,
        baseline,
        peaks_used: side.len(),
    })
}

/// The `n` side peaks nearest zero delay, as indices into the fit.
pub(crate) fn side_peaks(
    fit: &PeakTrainFit,
    n: usize,
    selection: PeakSelection,
) -> Result<Vec<usize>> {
    let delay_index = ((fit.hom_delay_ns / fit.rep_period_ns).round() as i64).max(1);
    let excluded = |i: i64| match selection {
        PeakSelection::Hbt => i == 0,
        PeakSelection::Hom => i == 0 || i.abs() == delay_index,
    };
    let mut side: Vec<usize> = (0..fit.peak_indices.len())
        .filter(|&p| !excluded(fit.peak_indices[p]))
        .collect();
    if n == 0 || side.len() < n {
        return Err(Error::InsufficientPeaks {
            needed: n.max(1),
            found: side.len(),
        });
    }
    side.sort_by_key(|&p| (fit.peak_indices[p].abs(), fit.peak_indices[p]));
    side.truncate(n);
    Ok(side)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamSplitter {
    pub r: f64,
    pub t: f64,
    /// One minus the classical interferometer visibility.
    pub epsilon: f64,
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self {
            r: 0.5,
            t: 0.5,
            epsilon: 0.0,
        }
    }
}

impl BeamSplitter {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0 && self.t > 0.0 && self.t < 1.0) {
            return Err(Error::invalid("R, T", "must lie in (0, 1)"));
        }
        if (self.r + self.t - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("R, T", "must sum to 1"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", "must lie in [0, 1)"));
        }
        Ok(())
    }

    fn offset(&self) -> f64 {
        (self.r * self.r + self.t * self.t) / (2.0 * self.r * self.t)
    }

    fn slope(&self) -> f64 {
        (self.r + self.t).powi(2) / (2.0 * self.r * self.t)
    }

    fn visibility_sq(&self) -> f64 {
        (1.0 - self.epsilon).powi(2)
    }

    /// `A_0/⟨A⟩` of an interference histogram for a source with
    /// indistinguishability `i` and autocorrelation `g2`.
    pub fn zero_delay_ratio(&self, i: f64, g2: f64) -> f64 {
        (g2 + self.offset() - i * self.visibility_sq()) / self.slope()
    }

    /// `[g2 + (R²+T²)/2RT − (R+T)²/2RT · ratio] / (1−ε)²`.
    pub fn indistinguishability(&self, g2: f64, ratio: f64) -> f64 {
        (g2 + self.offset() - self.slope() * ratio) / self.visibility_sq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HOMResult {
    pub g2_zero: f64,
    pub a0_over_mean: f64,
    /// Visibility without the `g²` and interferometer corrections.
    pub i_raw: f64,
    pub i_corrected: f64,
    /// `i_corrected` clamped to `[0, 1]`.
    pub i_reported: f64,
    /// Set when `i_corrected` falls outside `[0, 1]`.
    pub outside_physical: bool,
    /// Lower and upper error bounds, within `[0, 1]`.
    pub lower: f64,
    pub upper: f64,
    pub r: f64,
    pub t: f64,
    pub epsilon: f64,
}

impl HOMResult {
    pub fn contains(&self, i: f64) -> bool {
        self.lower <= i && i <= self.upper
    }
}

/// Corrected indistinguishability; bounds collapse onto the clamped value
/// until [`HOMResult::with_errors`] supplies uncertainties.
pub fn corrected_indistinguishability(
    g2_zero: f64,
    a0_over_mean: f64,
    r: f64,
    t: f64,
    epsilon: f64,
) -> Result<HOMResult> {
    if !g2_zero.is_finite() || !a0_over_mean.is_finite() {
        return Err(Error::invalid("g2_zero, A0_over_mean", "must be finite"));
    }
    let bs = BeamSplitter { r, t, epsilon };
    bs.validate()?;
    let i = bs.indistinguishability(g2_zero, a0_over_mean);
    let i_raw = bs.offset() - bs.slope() * a0_over_mean;
    let reported = i.clamp(0.0, 1.0);
    Ok(HOMResult {
        g2_zero,
        a0_over_mean,
        i_raw,
        i_corrected: i,
        i_reported: reported,
        outside_physical: !(0.0..=1.0).contains(&i),
        lower: reported,
        upper: reported,
        r,
        t,
        epsilon,
    })
}

impl HOMResult {
    /// Attach bounds from a `g²` error and a (possibly asymmetric) interval
    /// on the zero-delay ratio, plus a symmetric systematic on the ratio.
    pub fn with_errors(
        mut self,
        g2_error: f64,
        ratio_interval: [f64; 2],
        ratio_systematic: f64,
    ) -> Self {
        let bs = BeamSplitter {
            r: self.r,
            t: self.t,
            epsilon: self.epsilon,
        };
        let i = self.i_corrected;
        let up_stat = bs.indistinguishability(self.g2_zero, ratio_interval[0]) - i;
        let down_stat = i - bs.indistinguishability(self.g2_zero, ratio_interval[1]);
        let g2_term = g2_error / bs.visibility_sq();
        let sys_term = ratio_systematic * bs.slope() / bs.visibility_sq();
        let up = (up_stat.max(0.0).powi(2) + g2_term * g2_term + sys_term * sys_term).sqrt();
        let down = (down_stat.max(0.0).powi(2) + g2_term * g2_term + sys_term * sys_term).sqrt();
        self.upper = (i + up).clamp(0.0, 1.0);
        self.lower = (i - down).clamp(0.0, 1.0);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomAnalysisParams {
    pub window_ns: [f64; 2],
    pub beam_splitter: BeamSplitter,
    /// Side peaks normalising the autocorrelation; 50 when absent.
    pub hbt_peaks: Option<usize>,
    /// Side peaks normalising the interference histogram; 48 when absent.
    pub hom_peaks: Option<usize>,
    pub fit: FitSettings,
}

impl Default for HomAnalysisParams {
    fn default() -> Self {
        Self {
            window_ns: DEFAULT_WINDOW_NS,
            beam_splitter: BeamSplitter::default(),
            hbt_peaks: None,
            hom_peaks: None,
            fit: FitSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomReport {
    pub hbt_fit: PeakTrainFit,
    pub hom_fit: PeakTrainFit,
    pub g2: G2Estimate,
    pub zero_delay_ratio: G2Estimate,
    /// Likelihood-ratio interval on the zero-delay ratio.
    pub ratio_interval: [f64; 2],
    pub result: HOMResult,
}

/// Fit both histograms and combine them into a corrected indistinguishability.
pub fn analyze_hom(
    hbt: &CoincidenceHistogram,
    hom: &CoincidenceHistogram,
    params: &HomAnalysisParams,
) -> Result<HomReport> {
    params.beam_splitter.validate()?;
    let hbt_fit = fit_peak_train(hbt, params.window_ns, &params.fit)?;
    let hom_fit = fit_peak_train(hom, params.window_ns, &params.fit)?;
    let n_hbt = params
        .hbt_peaks
        .unwrap_or(PeakSelection::Hbt.default_count());
    let n_hom = params
        .hom_peaks
        .unwrap_or(PeakSelection::Hom.default_count());
    let g2 = extract_g2(&hbt_fit, n_hbt, PeakSelection::Hbt)?;
    let ratio = extract_g2(&hom_fit, n_hom, PeakSelection::Hom)?;
    let ratio_interval = hom_fit.zero_peak_ratio_interval(hom, n_hom, &params.fit)?;
    let bs = params.beam_splitter;
    let result = corrected_indistinguishability(g2.g2_zero, ratio.g2_zero, bs.r, bs.t, bs.epsilon)?
        .with_errors(g2.error, ratio_interval, ratio.baseline);
    Ok(HomReport {
        hbt_fit,
        hom_fit,
        g2,
        zero_delay_ratio: ratio,
        ratio_interval,
        result,
    })
}
