use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{fit::peak_profile, BeamSplitter, CoincidenceHistogram};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Autocorrelation: zero-delay peak scaled by `g²(0)`.
    Hbt,
    /// Unbalanced interferometer with delay equal to the repetition period:
    /// zero-delay peak set by the indistinguishability, the peaks at plus and
    /// minus the delay at three quarters of the rest.
    Hom,
}

/// Forward model for coincidence histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticHistogram {
    pub kind: SyntheticKind,
    pub indistinguishability: f64,
    pub g2: f64,
    pub tau_ns: f64,
    /// Baseline counts per bin at the start of the window.
    pub baseline_per_bin: f64,
    /// Relative baseline change from start to end of the window.
    pub baseline_drift: f64,
    /// Height of the uncorrelated peaks, counts per bin.
    pub side_amplitude: f64,
    pub bin_width_ns: f64,
    pub window_ns: [f64; 2],
    pub rep_period_ns: f64,
    pub hom_delay_ns: f64,
    pub offset_ns: f64,
    pub beam_splitter: BeamSplitter,
}

impl Default for SyntheticHistogram {
    fn default() -> Self {
        Self {
            kind: SyntheticKind::Hom,
            indistinguishability: 0.9,
            g2: 0.02,
            tau_ns: 0.2,
            baseline_per_bin: 2.0,
            baseline_drift: 0.0,
            side_amplitude: 2000.0,
            bin_width_ns: 0.05,
            window_ns: super::DEFAULT_WINDOW_NS,
            rep_period_ns: super::DEFAULT_REP_PERIOD_NS,
            hom_delay_ns: super::DEFAULT_HOM_DELAY_NS,
            offset_ns: 0.0,
            beam_splitter: BeamSplitter::default(),
        }
    }
}

impl SyntheticHistogram {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_ns", self.tau_ns),
            ("bin_width_ns", self.bin_width_ns),
            ("rep_period_ns", self.rep_period_ns),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        let non_negative = [
            ("baseline_per_bin", self.baseline_per_bin),
            ("side_amplitude", self.side_amplitude),
            ("g2", self.g2),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.indistinguishability) {
            return Err(Error::invalid("indistinguishability", "must lie in [0, 1]"));
        }
        if !(self.window_ns[1] > self.window_ns[0]) {
            return Err(Error::invalid("window_ns", "must be increasing"));
        }
        if !(self.baseline_drift > -1.0) {
            return Err(Error::invalid("baseline_drift", "must be > -1"));
        }
        self.beam_splitter.validate()?;
        if self.kind == SyntheticKind::Hom && self.zero_delay_ratio() < 0.0 {
            return Err(Error::invalid(
                "indistinguishability",
                "implies a negative zero-delay peak",
            ));
        }
        Ok(())
    }

    /// Programmed `A_0/⟨A⟩`.
    pub fn zero_delay_ratio(&self) -> f64 {
        match self.kind {
            SyntheticKind::Hbt => self.g2,
            SyntheticKind::Hom => self
                .beam_splitter
                .zero_delay_ratio(self.indistinguishability, self.g2),
        }
    }

    /// `(index, centre, height)` for every peak that reaches into the window.
    pub fn peaks(&self) -> Vec<(i64, f64, f64)> {
        let reach = 40.0 * self.tau_ns;
        let lo = ((self.window_ns[0] - reach - self.offset_ns) / self.rep_period_ns).ceil() as i64;
        let hi = ((self.window_ns[1] + reach - self.offset_ns) / self.rep_period_ns).floor() as i64;
        let delay_index = ((self.hom_delay_ns / self.rep_period_ns).round() as i64).max(1);
        (lo..=hi)
            .map(|i| {
                let scale = match (self.kind, i) {
                    (_, 0) => self.zero_delay_ratio(),
                    (SyntheticKind::Hom, i) if i.abs() == delay_index => 0.75,
                    _ => 1.0,
                };
                (
                    i,
                    i as f64 * self.rep_period_ns + self.offset_ns,
                    scale * self.side_amplitude,
                )
            })
            .collect()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        let n = ((self.window_ns[1] - self.window_ns[0]) / self.bin_width_ns).floor() as usize;
        (0..n)
            .map(|k| self.window_ns[0] + (k as f64 + 0.5) * self.bin_width_ns)
            .collect()
    }

    /// Noise-free histogram: each bin integrates the peak shapes numerically.
    pub fn expected(&self) -> Result<CoincidenceHistogram> {
        self.validate()?;
        let quad = QuadSettings {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            ..QuadSettings::default()
        };
        let peaks = self.peaks();
        let centers = self.bin_centers();
        let span = self.window_ns[1] - self.window_ns[0];
        let w = self.bin_width_ns;
        let reach = 40.0 * self.tau_ns;
        let mut counts = Vec::with_capacity(centers.len());
        for &t in &centers {
            let mut mu = self.baseline_per_bin
                * (1.0 + self.baseline_drift * (t - self.window_ns[0]) / span);
            let (a, b) = (t - 0.5 * w, t + 0.5 * w);
            for &(_, c, height) in &peaks {
                if height == 0.0 || (t - c).abs() > reach + w {
                    continue;
                }
                let f = |u: f64| peak_profile(u, c, self.tau_ns);
                let integral = if a < c && c < b {
                    integrate(f, a, c, &quad)?.value + integrate(f, c, b, &quad)?.value
                } else {
                    integrate(f, a, b, &quad)?.value
                };
                mu += height * integral / w;
            }
            counts.push(mu);
        }
        let mut h = CoincidenceHistogram::new(centers, counts)?;
        h.rep_period_ns = self.rep_period_ns;
        h.hom_delay_ns = self.hom_delay_ns;
        Ok(h)
    }

    /// Poisson-sampled histogram; the same seed gives the same counts.
    pub fn sample(&self, seed: u64) -> Result<CoincidenceHistogram> {
        let mut h = self.expected()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in h.counts.iter_mut() {
            *c = if *c > 0.0 {
                Poisson::new(*c)
                    .map_err(|e| Error::Domain(format!("Poisson mean {c}: {e}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
        }
        Ok(h)
    }
}
