//! Probability current, boundary flux and the detection-time distribution.

use crate::domain::{BoundaryKind, BoundarySpec, PhysicalConstants, Side};
use crate::error::{Error, Result};
use crate::propagator::EvolutionRecord;
use crate::scalar::{lit, to_f64, Real, C};
use crate::wave::WaveFunction;

/// Default tolerance for the finite-horizon warning.
pub const HORIZON_THRESHOLD: f64 = 1e-3;

/// `∂ₓψ`: centred in the interior, second-order one-sided at the ends.
pub fn derivative<T: Real>(values: &[C<T>], dx: T) -> Vec<C<T>> {
    let n = values.len();
    let zero = C::new(T::zero(), T::zero());
    if n < 2 {
        return vec![zero; n];
    }
    let inv2 = T::one() / (lit::<T>(2.0) * dx);
    let mut d = vec![zero; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) * inv2;
    }
    if n >= 3 {
        let (three, four) = (lit::<T>(3.0), lit::<T>(4.0));
        d[0] = (values[0] * (-three) + values[1] * four - values[2]) * inv2;
        d[n - 1] = (values[n - 1] * three - values[n - 2] * four + values[n - 3]) * inv2;
    } else {
        d[0] = (values[1] - values[0]) / dx;
        d[1] = d[0];
    }
    d
}

/// `j = (ħ/m) Im(ψ* ∂ₓψ)` at every node, one-sided differences at the ends.
pub fn probability_current<T: Real>(
    psi: &WaveFunction<T>,
    constants: &PhysicalConstants<T>,
) -> Vec<T> {
    let d = derivative(psi.values(), psi.domain().dx());
    let s = constants.hbar / constants.mass;
    psi.values()
        .iter()
        .zip(&d)
        .map(|(z, dz)| s * (z.conj() * dz).im)
        .collect()
}

/// Like [`probability_current`], but at the end nodes the derivative is
/// replaced by the one the boundary condition prescribes.
pub fn probability_current_with_bc<T: Real>(
    psi: &WaveFunction<T>,
    constants: &PhysicalConstants<T>,
    left: &BoundaryKind<T>,
    right: &BoundaryKind<T>,
) -> Vec<T> {
    current_with_bc(psi.values(), psi.domain().dx(), constants, left, right)
}

/// [`probability_current_with_bc`] on raw nodal amplitudes.
pub fn current_with_bc<T: Real>(
    values: &[C<T>],
    dx: T,
    constants: &PhysicalConstants<T>,
    left: &BoundaryKind<T>,
    right: &BoundaryKind<T>,
) -> Vec<T> {
    let d = derivative(values, dx);
    let s = constants.hbar / constants.mass;
    let mut j: Vec<T> = values
        .iter()
        .zip(&d)
        .map(|(z, dz)| s * (z.conj() * dz).im)
        .collect();
    let n = j.len();
    let v = values;
    if let Some(beta) = right.log_derivative() {
        j[n - 1] = end_current(v[n - 1], beta, constants);
    } else {
        j[n - 1] = T::zero();
    }
    if let Some(beta) = left.log_derivative() {
        // outward normal points to −x
        j[0] = -end_current(v[0], beta, constants);
    } else {
        j[0] = T::zero();
    }
    j
}

fn end_current<T: Real>(psi: C<T>, beta: C<T>, constants: &PhysicalConstants<T>) -> T {
    constants.hbar / constants.mass * (psi.conj() * beta * psi).im
}

/// Outward flux `(ħκ/m)|ψ_b|²` through an absorbing endpoint.
pub fn boundary_flux<T: Real>(
    psi: &WaveFunction<T>,
    bc: &BoundarySpec<T>,
    constants: &PhysicalConstants<T>,
) -> Result<T> {
    let kappa = match bc.kind {
        BoundaryKind::AbsorbingRobin { kappa, .. } => kappa,
        other => return Err(Error::WrongBoundary { kind: other.name() }),
    };
    let v = psi.values();
    let z = match bc.side {
        Side::Left => v[0],
        Side::Right => v[v.len() - 1],
    };
    Ok(constants.velocity(kappa) * z.norm_sqr())
}

/// Where inside the shell detections happened.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMarginal<T> {
    pub positions: Vec<T>,
    pub mass: Vec<T>,
}

impl<T: Real> PositionMarginal<T> {
    pub fn total(&self) -> T {
        self.mass.iter().copied().sum()
    }

    /// Mean detection position; `None` if nothing was detected.
    pub fn mean(&self) -> Option<T> {
        let total = self.total();
        if total > T::zero() {
            let s: T = self
                .positions
                .iter()
                .zip(&self.mass)
                .map(|(&x, &m)| x * m)
                .sum();
            Some(s / total)
        } else {
            None
        }
    }
}

/// Distribution of the detection time `T` (and place, per endpoint).
///
/// `times` are the grid times `t₀ … t_N`. `density[e][k]` is the detection
/// rate at endpoint `e` on `[t_k, t_{k+1}]`; `cumulative[k]` is the detected
/// mass up to `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionDistribution<T> {
    pub times: Vec<T>,
    pub endpoint_labels: Vec<String>,
    pub density: Vec<Vec<T>>,
    pub cumulative: Vec<T>,
    /// `‖ψ(t_final)‖²`, the finite-horizon stand-in for `Prob(Z = ∞)`.
    pub prob_never: T,
    pub initial_norm: T,
    /// Final detection rate times the horizon length.
    pub horizon_residual: T,
    pub horizon_warning: bool,
    pub position_marginal: Option<PositionMarginal<T>>,
}

impl<T: Real> DetectionDistribution<T> {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_final(&self) -> T {
        self.times[self.steps()]
    }

    pub fn dt(&self) -> T {
        if self.steps() == 0 {
            T::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Summed rate over endpoints during step `k`.
    pub fn total_density(&self, k: usize) -> T {
        self.density.iter().fold(T::zero(), |a, d| a + d[k])
    }

    pub fn total_density_series(&self) -> Vec<T> {
        (0..self.steps()).map(|k| self.total_density(k)).collect()
    }

    pub fn detected(&self) -> T {
        self.cumulative[self.steps()]
    }

    /// Detected mass up to `t` (piecewise-linear between grid times).
    pub fn cumulative_at(&self, t: T) -> Result<T> {
        let (t0, tf) = (self.times[0], self.t_final());
        let slack = self.dt() * lit(1e-9);
        if t < t0 - slack || t > tf + slack || t.is_nan() {
            return Err(Error::OutOfRange {
                time: to_f64(t),
                t_final: to_f64(tf),
            });
        }
        if self.steps() == 0 {
            return Ok(T::zero());
        }
        let pos = ((t - t0) / self.dt()).max(T::zero());
        let k = pos.floor().to_usize().unwrap_or(0).min(self.steps() - 1);
        let frac = (pos - T::from_usize(k).unwrap()).min(T::one());
        Ok(self.cumulative[k] + frac * self.dt() * self.total_density(k))
    }

    /// Time-midpoint of step `k`.
    pub fn midpoint(&self, k: usize) -> T {
        (self.times[k] + self.times[k + 1]) * lit(0.5)
    }
}

/// Builds the distribution with the default horizon threshold.
pub fn detection_distribution<T: Real>(record: &EvolutionRecord<T>) -> DetectionDistribution<T> {
    detection_distribution_with(record, lit(HORIZON_THRESHOLD))
}

pub fn detection_distribution_with<T: Real>(
    record: &EvolutionRecord<T>,
    horizon_threshold: T,
) -> DetectionDistribution<T> {
    let steps = record.steps();
    let mut labels: Vec<String> = record
        .boundary_flux
        .iter()
        .map(|f| f.side.label().to_string())
        .collect();
    let mut density: Vec<Vec<T>> = record
        .boundary_flux
        .iter()
        .map(|f| f.values.clone())
        .collect();
    if !record.shell_marginal.is_empty() {
        labels.push("shell".to_string());
        density.push(record.shell_density.clone());
    }
    let mut cumulative = Vec::with_capacity(steps + 1);
    cumulative.push(T::zero());
    let mut acc = T::zero();
    for k in 0..steps {
        let rate = density.iter().fold(T::zero(), |a, d| a + d[k]);
        acc = acc + record.dt * rate;
        cumulative.push(acc);
    }
    let prob_never = record.norms[steps];
    let last_rate = if steps > 0 {
        record.total_rate(steps - 1)
    } else {
        T::zero()
    };
    let horizon_residual = last_rate * (record.t_final() - record.times[0]);
    let horizon_warning = prob_never > horizon_threshold && horizon_residual > horizon_threshold;
    if horizon_warning {
        log::warn!(
            "finite horizon: ‖ψ(t_final)‖² = {:e} with detection still ongoing (residual {:e})",
            prob_never,
            horizon_residual
        );
    }
    let position_marginal = if record.shell_marginal.is_empty() {
        None
    } else {
        let d = record.final_state.domain();
        let (positions, mass) = record
            .shell_marginal
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > T::zero())
            .map(|(i, &m)| (d.x(i), m))
            .unzip();
        Some(PositionMarginal { positions, mass })
    };
    DetectionDistribution {
        times: record.times.clone(),
        endpoint_labels: labels,
        density,
        cumulative,
        prob_never,
        initial_norm: record.initial_norm,
        horizon_residual,
        horizon_warning,
        position_marginal,
    }
}

/// `Prob(T > t or Z = ∞)`, i.e. initial norm minus the mass detected by `t`.
pub fn survival_probability<T: Real>(dist: &DetectionDistribution<T>, t: T) -> Result<T> {
    Ok(dist.initial_norm - dist.cumulative_at(t)?)
}

/// Statistics of `T` conditioned on detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStatistics<T> {
    pub mean: T,
    pub median: T,
    pub detected_fraction: T,
}

pub fn summary_statistics<T: Real>(
    dist: &DetectionDistribution<T>,
) -> Result<SummaryStatistics<T>> {
    let detected = dist.detected();
    if !(detected > T::zero()) {
        return Err(Error::NothingDetected);
    }
    let dt = dist.dt();
    let mean = (0..dist.steps())
        .map(|k| dist.midpoint(k) * dist.total_density(k) * dt)
        .fold(T::zero(), |a, b| a + b)
        / detected;
    let half = detected * lit(0.5);
    let k = dist
        .cumulative
        .partition_point(|&c| c < half)
        .clamp(1, dist.steps());
    let (c0, c1) = (dist.cumulative[k - 1], dist.cumulative[k]);
    let frac = if c1 > c0 {
        (half - c0) / (c1 - c0)
    } else {
        T::zero()
    };
    let median = dist.times[k - 1] + frac * dt;
    Ok(SummaryStatistics {
        mean,
        median,
        detected_fraction: detected / dist.initial_norm,
    })
}
