//! Random-variate generation for the jump-diffusions.
//!
//! Every simulated path owns one [`RngStream`], addressed by a master seed and
//! a stream index. Streams are ChaCha8 keystreams: the seed selects the key and
//! the index selects the 64-bit stream word, so path `k` draws the same
//! variates no matter which thread runs it or in which order.
//!
//! Jumps are a compound Poisson process described by a [`JumpSpec`]: a finite
//! total intensity `ν(ℝ)`, a mark law (the normalised intensity measure) and a
//! jump function giving the fractional displacement applied at each event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre_on;

/// Number of Gauss–Legendre nodes used to discretise uniform marks.
pub const UNIFORM_MARK_NODES: usize = 32;

/// A reproducible, single-owner random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Rewinds the stream to its first variate.
    pub fn reset(&mut self) {
        *self = Self::new(self.master_seed, self.stream_index);
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    /// Unchecked `N(0, dt)` draw for the integrator hot loop.
    #[inline]
    pub(crate) fn brownian(&mut self, dt: f64) -> f64 {
        self.standard_normal() * dt.sqrt()
    }
}

/// Draws a Brownian increment over a step of length `dt`.
pub fn sample_brownian_increment(stream: &mut RngStream, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be positive and finite, got {dt}")));
    }
    Ok(stream.brownian(dt))
}

/// Law of the jump marks, i.e. the intensity measure normalised to mass one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkDistribution {
    PointMass { at: f64 },
    Uniform { low: f64, high: f64 },
    Discrete { points: Vec<f64>, probs: Vec<f64> },
}

impl MarkDistribution {
    fn validate(&self) -> Result<()> {
        match self {
            MarkDistribution::PointMass { at } => {
                if !at.is_finite() {
                    return Err(invalid("point mass location must be finite"));
                }
            }
            MarkDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(invalid(format!(
                        "uniform marks need finite low < high, got [{low}, {high}]"
                    )));
                }
            }
            MarkDistribution::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(invalid(
                        "discrete marks need equally many (non-zero) points and probabilities",
                    ));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(invalid("discrete mark points must be finite"));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(invalid("discrete mark probabilities must be non-negative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!(
                        "discrete mark probabilities sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, stream: &mut RngStream) -> f64 {
        match self {
            MarkDistribution::PointMass { at } => *at,
            MarkDistribution::Uniform { low, high } => low + (high - low) * stream.uniform(),
            MarkDistribution::Discrete { points, probs } => {
                let u = stream.uniform();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(probs) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                // u landed in the rounding gap above the cumulative sum
                *points.last().unwrap()
            }
        }
    }
}

/// Fractional displacement applied at a jump with a given mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpFunction {
    Constant { value: f64 },
    /// Linear interpolation through `(knots[i], values[i])`, held constant
    /// outside the knot range.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
}

impl JumpFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            JumpFunction::Constant { value } => *value,
            JumpFunction::PiecewiseLinear { knots, values } => {
                let n = knots.len();
                if y <= knots[0] {
                    return values[0];
                }
                if y >= knots[n - 1] {
                    return values[n - 1];
                }
                let k = knots.partition_point(|&x| x <= y) - 1;
                let w = (y - knots[k]) / (knots[k + 1] - knots[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            JumpFunction::Constant { value } => {
                if !value.is_finite() {
                    return Err(invalid("constant jump value must be finite"));
                }
            }
            JumpFunction::PiecewiseLinear { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(invalid(
                        "piecewise-linear jump function needs at least two (knot, value) pairs",
                    ));
                }
                if knots.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(invalid("piecewise-linear knots must be strictly increasing"));
                }
                if knots.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(invalid("piecewise-linear table must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Finite-activity jump measure together with its jump function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpSpec {
    total_mass: f64,
    marks: MarkDistribution,
    function: JumpFunction,
}

/// `∫h dν` and `∫h² dν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpIntegrals {
    pub int_h: f64,
    pub int_h_sq: f64,
}

/// One event of the compound Poisson process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: f64,
}

impl JumpSpec {
    pub fn new(total_mass: f64, marks: MarkDistribution, function: JumpFunction) -> Result<Self> {
        if !(total_mass >= 0.0 && total_mass.is_finite()) {
            return Err(invalid(format!(
                "total mass must be finite and non-negative, got {total_mass}"
            )));
        }
        marks.validate()?;
        function.validate()?;
        let spec = Self {
            total_mass,
            marks,
            function,
        };
        let (lo, hi) = spec.range_on_support();
        if !(lo > -1.0 && hi < 1.0) {
            return Err(invalid(format!(
                "jump function must lie in (-1, 1) on the mark support, found [{lo}, {hi}]"
            )));
        }
        Ok(spec)
    }

    /// Constant jump function with a point-mass mark law, the form used by
    /// every built-in parameter set.
    pub fn constant(total_mass: f64, value: f64) -> Result<Self> {
        Self::new(
            total_mass,
            MarkDistribution::PointMass { at: 0.0 },
            JumpFunction::Constant { value },
        )
    }

    /// No jumps at all.
    pub fn none() -> Self {
        Self {
            total_mass: 0.0,
            marks: MarkDistribution::PointMass { at: 0.0 },
            function: JumpFunction::Constant { value: 0.0 },
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    pub fn function(&self) -> &JumpFunction {
        &self.function
    }

    #[inline]
    pub fn eval(&self, mark: f64) -> f64 {
        self.function.eval(mark)
    }

    /// Minimum and maximum of the jump function over the mark support.
    pub fn range_on_support(&self) -> (f64, f64) {
        let probe: Vec<f64> = match &self.marks {
            MarkDistribution::PointMass { at } => vec![*at],
            MarkDistribution::Discrete { points, .. } => points.clone(),
            MarkDistribution::Uniform { low, high } => {
                let mut v = vec![*low, *high];
                if let JumpFunction::PiecewiseLinear { knots, .. } = &self.function {
                    v.extend(knots.iter().copied().filter(|k| k > low && k < high));
                }
                v
            }
        };
        probe.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            let h = self.eval(y);
            (lo.min(h), hi.max(h))
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.range_on_support().0 >= 0.0
    }

    /// `(h(y), ν-weight)` pairs discretising `∫ F(h(y)) ν(dy)`: exact for
    /// point-mass and discrete marks, Gauss–Legendre for uniform marks.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        if self.total_mass == 0.0 {
            return Vec::new();
        }
        match &self.marks {
            MarkDistribution::PointMass { at } => vec![(self.eval(*at), self.total_mass)],
            MarkDistribution::Discrete { points, probs } => points
                .iter()
                .zip(probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&y, &p)| (self.eval(y), p * self.total_mass))
                .collect(),
            MarkDistribution::Uniform { low, high } => {
                let density = self.total_mass / (high - low);
                gauss_legendre_on(UNIFORM_MARK_NODES, *low, *high)
                    .into_iter()
                    .map(|(y, w)| (self.eval(y), w * density))
                    .collect()
            }
        }
    }
}

/// Closed-form `∫h dν` and `∫h² dν`.
pub fn compute_jump_integrals(spec: &JumpSpec) -> JumpIntegrals {
    let mass = spec.total_mass;
    if mass == 0.0 {
        return JumpIntegrals {
            int_h: 0.0,
            int_h_sq: 0.0,
        };
    }
    if let JumpFunction::Constant { value } = spec.function {
        return JumpIntegrals {
            int_h: value * mass,
            int_h_sq: value * value * mass,
        };
    }
    match &spec.marks {
        MarkDistribution::PointMass { at } => {
            let h = spec.eval(*at);
            JumpIntegrals {
                int_h: h * mass,
                int_h_sq: h * h * mass,
            }
        }
        MarkDistribution::Discrete { points, probs } => {
            let (m1, m2) = points.iter().zip(probs).fold((0.0, 0.0), |(a, b), (&y, &p)| {
                let h = spec.eval(y);
                (a + p * h, b + p * h * h)
            });
            JumpIntegrals {
                int_h: m1 * mass,
                int_h_sq: m2 * mass,
            }
        }
        MarkDistribution::Uniform { low, high } => {
            // h is linear between consecutive breakpoints, so the trapezoid
            // rule is exact for h and the three-term formula is exact for h².
            let mut breaks = vec![*low];
            if let JumpFunction::PiecewiseLinear { knots, .. } = &spec.function {
                breaks.extend(knots.iter().copied().filter(|k| k > low && k < high));
            }
            breaks.push(*high);
            let (mut m1, mut m2) = (0.0, 0.0);
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (ha, hb) = (spec.eval(a), spec.eval(b));
                m1 += (b - a) * (ha + hb) / 2.0;
                m2 += (b - a) * (ha * ha + ha * hb + hb * hb) / 3.0;
            }
            let density = mass / (high - low);
            JumpIntegrals {
                int_h: m1 * density,
                int_h_sq: m2 * density,
            }
        }
    }
}

/// Jump events of the compound Poisson process on `(t0, t1]`, generated from
/// exponential inter-arrival times.
pub fn sample_jump_events(
    stream: &mut RngStream,
    spec: &JumpSpec,
    t0: f64,
    t1: f64,
) -> Result<Vec<JumpEvent>> {
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid(format!("need finite t1 > t0, got ({t0}, {t1}]")));
    }
    let mut events = Vec::new();
    if spec.total_mass == 0.0 {
        return Ok(events);
    }
    let mut t = t0;
    loop {
        t += stream.standard_exponential() / spec.total_mass;
        if t > t1 {
            break;
        }
        // Consecutive arrivals can coincide in floating point only for
        // absurd rates; drop the duplicate to keep times strictly increasing.
        if events.last().is_some_and(|e: &JumpEvent| e.time >= t) {
            continue;
        }
        let mark = spec.marks.sample(stream);
        events.push(JumpEvent { time: t, mark });
    }
    Ok(events)
}
