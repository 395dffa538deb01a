//! Signal phase and timing information stream: exact switching times for the
//! fixed-time setting, clamped-normal stochastic predictions for the actuated
//! setting, and a CSV dump/replay path for auditing sample streams.

use std::io;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Ground-truth signal description: the light is red from simulation start
/// until `true_switch_time_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalTiming {
    pub true_switch_time_s: f64,
    pub red_at_start: bool,
}

impl SignalTiming {
    pub fn red_until(switch_time_s: f64) -> Self {
        Self {
            true_switch_time_s: switch_time_s,
            red_at_start: true,
        }
    }

    pub fn is_red(&self, now_s: f64) -> bool {
        self.red_at_start && now_s < self.true_switch_time_s
    }

    pub fn validate(&self) -> Vec<String> {
        if self.true_switch_time_s >= 0.0 {
            Vec::new()
        } else {
            vec!["SignalTiming.true_switch_time_s must be >= 0".into()]
        }
    }
}

/// Quality of the switching-time prediction source: a systematic bias added
/// to the distribution mean and the standard deviation of the random error.
/// Held constant over a run; `seed` pins the sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictionModel {
    pub bias_s: f64,
    pub sd_s: f64,
    pub seed: u64,
}

impl Default for PredictionModel {
    fn default() -> Self {
        Self { bias_s: 0.0, sd_s: 0.0, seed: 0 }
    }
}

impl PredictionModel {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.sd_s >= 0.0) {
            problems.push("PredictionModel.sd_s must be >= 0".into());
        }
        if !(self.bias_s >= 0.0) {
            problems.push("PredictionModel.bias_s must be >= 0".into());
        }
        problems
    }
}

/// One per-step prediction together with the parameters of the distribution
/// it was drawn from, so consumers can reason about its quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatSample {
    pub issued_at_s: f64,
    pub predicted_switch_time_s: f64,
    pub bias_s: f64,
    pub sd_s: f64,
}

impl SpatSample {
    /// Exact knowledge of the switch, as transmitted by a fixed-time signal.
    pub fn exact(true_switch_time_s: f64, now_s: f64) -> Self {
        Self {
            issued_at_s: now_s,
            predicted_switch_time_s: true_switch_time_s.max(now_s),
            bias_s: 0.0,
            sd_s: 0.0,
        }
    }
}

/// Draws one prediction: normal around the true switch plus bias, clamped
/// below at the current time (a prediction never points to the past). With
/// zero spread the draw is skipped entirely so degenerate streams are
/// bitwise-stable regardless of generator state.
pub fn sample_prediction(
    timing: &SignalTiming,
    model: &PredictionModel,
    now_s: f64,
    rng: &mut impl Rng,
) -> SpatSample {
    let mean = timing.true_switch_time_s + model.bias_s;
    let predicted = if model.sd_s == 0.0 {
        mean
    } else {
        let normal = Normal::new(mean, model.sd_s).expect("sd validated non-negative");
        normal.sample(rng)
    };
    SpatSample {
        issued_at_s: now_s,
        predicted_switch_time_s: predicted.max(now_s),
        bias_s: model.bias_s,
        sd_s: model.sd_s,
    }
}

/// Two-sided error bound at the given confidence: bias + z * sd, where z is
/// the standard-normal quantile at (1 + confidence)/2.
pub fn error_bound(model: &PredictionModel, confidence: f64) -> f64 {
    assert!(confidence > 0.0 && confidence < 1.0, "confidence must be in (0, 1)");
    model.bias_s + standard_normal_quantile(0.5 + confidence / 2.0) * model.sd_s
}

/// Inverse standard-normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 over the open unit interval).
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Per-step prediction source consumed by a planning run.
#[derive(Debug, Clone)]
pub enum SpatSource {
    /// Fixed-time signal: the exact switch every step.
    Exact,
    /// Actuated signal: fresh clamped-normal draw every step.
    Model { model: PredictionModel, rng: ChaCha8Rng },
    /// Replays a previously dumped stream in order.
    Replay { samples: Vec<SpatSample>, cursor: usize },
}

impl SpatSource {
    pub fn exact() -> Self {
        SpatSource::Exact
    }

    pub fn from_model(model: PredictionModel) -> Self {
        use rand::SeedableRng;
        let rng = ChaCha8Rng::seed_from_u64(model.seed);
        SpatSource::Model { model, rng }
    }

    pub fn replay(samples: Vec<SpatSample>) -> Self {
        SpatSource::Replay { samples, cursor: 0 }
    }

    /// Next prediction at `now_s`. Replay exhaustion falls back to the last
    /// replayed sample clamped to now.
    pub fn next_sample(&mut self, timing: &SignalTiming, now_s: f64) -> SpatSample {
        match self {
            SpatSource::Exact => SpatSample::exact(timing.true_switch_time_s, now_s),
            SpatSource::Model { model, rng } => sample_prediction(timing, model, now_s, rng),
            SpatSource::Replay { samples, cursor } => {
                let idx = (*cursor).min(samples.len().saturating_sub(1));
                *cursor += 1;
                let s = samples.get(idx).copied().unwrap_or(SpatSample {
                    issued_at_s: now_s,
                    predicted_switch_time_s: now_s,
                    bias_s: 0.0,
                    sd_s: 0.0,
                });
                SpatSample {
                    issued_at_s: now_s,
                    predicted_switch_time_s: s.predicted_switch_time_s.max(now_s),
                    ..s
                }
            }
        }
    }
}

/// Dumps a sample stream for audit or replay (columns: issued_at_s,
/// predicted_switch_time_s).
pub fn write_stream_csv<W: io::Write>(writer: W, samples: &[SpatSample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["issued_at_s", "predicted_switch_time_s"])?;
    for s in samples {
        w.write_record([s.issued_at_s.to_string(), s.predicted_switch_time_s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream_csv<R: io::Read>(reader: R) -> csv::Result<Vec<SpatSample>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let issued: f64 = record.get(0).unwrap_or("0").parse().unwrap_or(0.0);
        let predicted: f64 = record.get(1).unwrap_or("0").parse().unwrap_or(0.0);
        samples.push(SpatSample {
            issued_at_s: issued,
            predicted_switch_time_s: predicted,
            bias_s: 0.0,
            sd_s: 0.0,
        });
    }
    Ok(samples)
}

pub fn read_stream_csv_path(path: &Path) -> csv::Result<Vec<SpatSample>> {
    let file = std::fs::File::open(path).map_err(csv::Error::from)?;
    read_stream_csv(io::BufReader::new(file))
}
