//! Reflection off the detecting surface measured with narrowband packets.
//!
//! A packet of mean wave number `k` and spread `σ_k` is sent at the surface
//! and run until its slowest relevant components (`k − 5σ_k`) have hit the
//! surface and left again. Whatever is still in the domain was reflected.

use rayon::prelude::*;

use crate::analytic::{bandwidth_averaged_reflection, reflection_coefficient_general};
use crate::domain::{PhysicalConstants, SimulationDomain};
use crate::error::{invalid, Result};
use crate::propagator::{packet_k_max, recommended_dt, Propagator, PropagatorConfig};
use crate::scalar::{lit, Real};
use crate::wave::{make_gaussian_packet, norm_squared};

/// Default `σ_k / k`.
pub const DEFAULT_BANDWIDTH_RATIO: f64 = 0.05;

/// Surface and numerics shared by all points of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSetup<T> {
    pub kappa: T,
    pub nu: T,
    pub constants: PhysicalConstants<T>,
    pub dx: T,
    /// `σ_k / k`.
    pub bandwidth_ratio: T,
    /// Multiplies the `dx·m/(ħ k_max)` step.
    pub dt_factor: T,
}

impl<T: Real> ReflectionSetup<T> {
    pub fn new(kappa: T, nu: T, constants: PhysicalConstants<T>, dx: T) -> Self {
        Self {
            kappa,
            nu,
            constants,
            dx,
            bandwidth_ratio: lit(DEFAULT_BANDWIDTH_RATIO),
            dt_factor: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint<T> {
    pub k: T,
    pub sigma_k: T,
    /// Norm left in the domain after the encounter.
    pub r_simulated: T,
    /// Plane-wave `|(ik − ν − iκ)/(ik + ν + iκ)|²` at `k`.
    pub r_plane_wave: T,
    /// Plane-wave reflection averaged over the packet's momentum spread.
    pub r_averaged: T,
    pub detected: T,
    pub t_final: T,
    pub dt: T,
}

impl<T: Real> ReflectionPoint<T> {
    pub fn error(&self) -> T {
        (self.r_simulated - self.r_averaged).abs()
    }
}

/// Runs one narrowband packet at mean wave number `k`.
pub fn simulate_reflection<T: Real>(
    k: T,
    setup: &ReflectionSetup<T>,
) -> Result<ReflectionPoint<T>> {
    if !(k > T::zero()) {
        return Err(invalid("k", "must be positive"));
    }
    if !(setup.bandwidth_ratio > T::zero()) || setup.bandwidth_ratio > lit(0.2) {
        return Err(invalid("bandwidth_ratio", "must lie in (0, 0.2]"));
    }
    let c = setup.constants;
    let sigma_k = k * setup.bandwidth_ratio;
    let sigma = T::one() / (lit::<T>(2.0) * sigma_k);
    let x0 = -lit::<T>(8.0) * sigma;
    let five = lit::<T>(5.0);
    let v_slow = c.velocity(k - five * sigma_k);
    let v_fast = c.velocity(k + five * sigma_k);
    let horizon = (x0.abs() + lit::<T>(6.0) * sigma) / v_slow;
    // the fastest reflected component must still be inside at the horizon
    let spread = sigma
        * (T::one() + (c.hbar * horizon / (lit::<T>(2.0) * c.mass * sigma * sigma)).powi(2)).sqrt();
    let reach = (v_fast * horizon - x0.abs()).max(T::zero());
    let x_min = -(reach + lit::<T>(10.0) * spread).max(x0.abs() + lit::<T>(10.0) * sigma);
    let domain = SimulationDomain::with_spacing(x_min, T::zero(), setup.dx)?;
    let dt = recommended_dt(domain.dx(), &c, packet_k_max(k, sigma)) * setup.dt_factor;
    let steps = (horizon / dt).ceil();
    let t_final = steps * dt;

    let cfg = PropagatorConfig::hard_detector(domain, c, setup.kappa, setup.nu, dt)?;
    let psi0 = make_gaussian_packet(&domain, x0, sigma, k)?;
    let rec = Propagator::new(cfg)?.evolve(&psi0, t_final, 0)?;
    Ok(ReflectionPoint {
        k,
        sigma_k,
        r_simulated: norm_squared(&rec.final_state) / rec.initial_norm,
        r_plane_wave: reflection_coefficient_general(k, setup.kappa, setup.nu)?.probability,
        r_averaged: bandwidth_averaged_reflection(k, sigma_k, setup.kappa, setup.nu)?,
        detected: rec.detected_mass() / rec.initial_norm,
        t_final,
        dt,
    })
}

/// [`simulate_reflection`] for every `k`, in parallel; output order follows `ks`.
pub fn reflection_scan<T: Real>(
    ks: &[T],
    setup: &ReflectionSetup<T>,
) -> Result<Vec<ReflectionPoint<T>>> {
    ks.par_iter()
        .map(|&k| simulate_reflection(k, setup))
        .collect()
}
