//! Time-domain response by Grünwald–Letnikov differences.
//!
//! Each derivative `D^g y(nh)` is replaced by `h^-g * sum_j w_j y((n-j)h)`
//! over the full history, with zero initial conditions. The implicit
//! recurrence is solved for `y(nh)` one step at a time.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::emit::fmt_num;
use crate::fracnum::{Bindings, FracError, FracOrder, FracSystem, QuasiPolynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation settings: {0}")]
    Config(String),
    #[error("parameter {0} is unbound")]
    Unbound(String),
    #[error("orders must lie in [0, 2] with a positive top order; got {0}")]
    Orders(String),
    #[error("implicit coefficient vanishes at step {0}; change the step size")]
    VanishingStep(f64),
    #[error(transparent)]
    Frac(#[from] FracError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Input {
    Step(f64),
    /// Unit area delivered over the first step.
    Impulse(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub input: Input,
    /// `|y|` above this ends the run as diverged.
    pub bound: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: 0.01,
            horizon: 50.0,
            input: Input::Step(1.0),
            bound: 1e6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step {} must be positive", self.step));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        if self.step > self.horizon / 100.0 {
            return bad(format!(
                "step {} exceeds horizon/100 = {}",
                self.step,
                self.horizon / 100.0
            ));
        }
        if !(self.bound >= 1e3) {
            return bad(format!("bound {} must be at least 1e3", self.bound));
        }
        let amp = match self.input {
            Input::Step(a) | Input::Impulse(a) => a,
        };
        if !amp.is_finite() {
            return bad(format!("input amplitude {amp} is not finite"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    fn input_at(&self, n: usize) -> f64 {
        match self.input {
            Input::Step(a) if n >= 1 => a,
            Input::Impulse(area) if n == 1 => area / self.step,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "verdict")]
pub enum SimVerdict {
    Bounded,
    Diverged { at: f64 },
    Inconclusive,
}

impl SimVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimVerdict::Bounded => "bounded",
            SimVerdict::Diverged { .. } => "diverged",
            SimVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub outputs: Vec<f64>,
    pub verdict: SimVerdict,
    pub peak: f64,
}

impl SimResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.times.len() * 24);
        out.push_str("t,y\n");
        for (t, y) in self.times.iter().zip(&self.outputs) {
            writeln!(out, "{},{}", fmt_num(*t), fmt_num(*y)).unwrap();
        }
        out
    }

    pub fn to_json(&self, cfg: &SimConfig) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            verdict: &'a str,
            diverged_at: Option<f64>,
            peak: f64,
            samples: usize,
            config: &'a SimConfig,
        }
        let diverged_at = match self.verdict {
            SimVerdict::Diverged { at } => Some(at),
            _ => None,
        };
        serde_json::to_string_pretty(&View {
            verdict: self.verdict.as_str(),
            diverged_at,
            peak: self.peak,
            samples: self.times.len(),
            config: cfg,
        })
        .expect("simulation summary serializes")
    }

    /// Mean output over the last `fraction` of the samples.
    pub fn trailing_mean(&self, fraction: f64) -> f64 {
        let n = self.outputs.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        self.outputs[n - k..].iter().sum::<f64>() / k as f64
    }
}

/// `w_j` of `(1 - z)^order`, `j = 0..len`.
pub fn gl_weights(order: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    if len == 0 {
        return w;
    }
    w.push(1.0);
    for j in 1..len {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (order + 1.0) / j as f64));
    }
    w
}

/// `sum_i c_i h^-g_i w_j(g_i)` for every history offset `j`.
fn combined_weights(terms: &[(f64, FracOrder)], h: f64, len: usize) -> Vec<f64> {
    let mut total = vec![0.0; len];
    for &(c, g) in terms {
        let scale = c * h.powf(-g.value());
        for (t, w) in total.iter_mut().zip(gl_weights(g.value(), len)) {
            *t += scale * w;
        }
    }
    total
}

fn known_terms(qp: &QuasiPolynomial) -> Result<Vec<(f64, FracOrder)>, SimError> {
    qp.known_terms().ok_or_else(|| {
        SimError::Unbound(qp.unknowns().first().copied().unwrap_or_default().to_string())
    })
}

/// Response of `D(s) Y = k U` for a fully known denominator.
pub fn gl_simulate(qp: &QuasiPolynomial, forcing: f64, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let input: Vec<f64> = (0..=cfg.steps()).map(|n| forcing * cfg.input_at(n)).collect();
    run(qp, &input, cfg)
}

/// Response of a bound system `gain * N(s) / D(s)`; the numerator acts on
/// the input through the same differences.
pub fn simulate_system(
    sys: &FracSystem,
    bindings: &Bindings,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let sys = sys.substitute(bindings)?;
    let steps = cfg.steps();
    let u: Vec<f64> = (0..=steps).map(|n| cfg.input_at(n)).collect();
    let num = known_terms(sys.numerator())?;
    let weights = combined_weights(&num, cfg.step, steps + 1);
    let drive: Vec<f64> = (0..=steps)
        .map(|n| sys.gain() * (0..=n).map(|j| weights[j] * u[n - j]).sum::<f64>())
        .collect();
    run(sys.denominator(), &drive, cfg)
}

fn run(qp: &QuasiPolynomial, drive: &[f64], cfg: &SimConfig) -> Result<SimResult, SimError> {
    let terms = known_terms(qp)?;
    let two = FracOrder::integer(2)?;
    let top = qp.degree();
    if top.is_zero() || terms.iter().any(|(_, g)| *g > two) {
        let orders: Vec<String> = terms.iter().map(|(_, g)| g.to_string()).collect();
        return Err(SimError::Orders(orders.join(", ")));
    }
    let h = cfg.step;
    let len = drive.len();
    let w = combined_weights(&terms, h, len);
    let w0_scale: f64 = terms
        .iter()
        .map(|(c, g)| (c * h.powf(-g.value())).abs())
        .sum();
    if w[0].abs() <= 1e-12 * w0_scale {
        return Err(SimError::VanishingStep(h));
    }

    let mut times = Vec::with_capacity(len);
    let mut y: Vec<f64> = Vec::with_capacity(len);
    times.push(0.0);
    y.push(0.0);
    let mut peak = 0.0f64;
    let mut verdict = None;
    for n in 1..len {
        let history: f64 = (1..=n).map(|j| w[j] * y[n - j]).sum();
        let yn = (drive[n] - history) / w[0];
        let t = n as f64 * h;
        times.push(t);
        y.push(yn);
        if !yn.is_finite() || yn.abs() > cfg.bound {
            verdict = Some(SimVerdict::Diverged { at: t });
            break;
        }
        peak = peak.max(yn.abs());
    }
    let verdict = verdict.unwrap_or_else(|| envelope_verdict(&y));
    Ok(SimResult {
        times,
        outputs: y,
        verdict,
        peak,
    })
}

/// Bounded when the peak over the last tenth of the run does not exceed the
/// peak over the tenth before it by more than 5 %.
fn envelope_verdict(y: &[f64]) -> SimVerdict {
    let n = y.len();
    let k = (n / 10).max(1);
    if n < 2 * k {
        return SimVerdict::Inconclusive;
    }
    let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = peak(&y[n - k..]);
    let before = peak(&y[n - 2 * k..n - k]);
    if last <= 1.05 * before {
        SimVerdict::Bounded
    } else {
        SimVerdict::Inconclusive
    }
}
