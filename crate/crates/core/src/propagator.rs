//! Crank–Nicolson propagation with complex Robin, Neumann and Dirichlet ends.
//!
//! The Hamiltonian is the three-point finite-difference operator
//! `−(ħ²/2m)∂²ₓ + V` with complex `V`. A Robin end `∂ψ/∂n = βψ` is folded
//! into the last row through a ghost node, which makes the matrix symmetric
//! in the trapezoid-weighted inner product with `Im β = κ` appearing only on
//! the diagonal. Consequently one step obeys exactly
//!
//! ```text
//! ‖ψₙ₊₁‖² − ‖ψₙ‖² = −dt·[ (ħκ/m)|φ_b|² + (2/ħ) Σᵢ wᵢ (−Im Vᵢ) |φᵢ|² ],   φ = (ψₙ + ψₙ₊₁)/2
//! ```
//!
//! and the bracket is what the record stores as the detection density.

use crate::domain::{
    BoundaryKind, BoundarySpec, PhysicalConstants, PotentialSpec, Side, SimulationDomain,
};
use crate::error::{invalid, Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real, C};
use crate::tridiag::{ThomasFactors, Tridiagonal};
use crate::wave::{norm_squared, WaveFunction};

/// Mass allowed inside the guard region at `x_min` before a run is aborted.
pub const TRUNCATION_MASS_LIMIT: f64 = 1e-6;

/// Fraction of the domain length used as guard region by default.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.05;

/// Largest step that resolves the fastest phase of a packet: `dx·m/(ħ k_max)`.
pub fn recommended_dt<T: Real>(dx: T, constants: &PhysicalConstants<T>, k_max: T) -> T {
    dx * constants.mass / (constants.hbar * k_max.abs())
}

/// `k0 + 5/σ`, the wave number bound used with [`recommended_dt`].
pub fn packet_k_max<T: Real>(k0: T, sigma: T) -> T {
    k0.abs() + lit::<T>(5.0) / sigma
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig<T> {
    pub dt: T,
    pub domain: SimulationDomain<T>,
    pub constants: PhysicalConstants<T>,
    pub potential: PotentialSpec<T>,
    pub left_bc: BoundarySpec<T>,
    pub right_bc: BoundarySpec<T>,
    /// Width of the monitored region next to a Dirichlet wall at `x_min`.
    pub truncation_guard: Option<T>,
}

impl<T: Real> PropagatorConfig<T> {
    pub fn new(
        domain: SimulationDomain<T>,
        constants: PhysicalConstants<T>,
        potential: PotentialSpec<T>,
        left_bc: BoundarySpec<T>,
        right_bc: BoundarySpec<T>,
        dt: T,
    ) -> Result<Self> {
        let guard = if matches!(left_bc.kind, BoundaryKind::Dirichlet) {
            Some((domain.x_max() - domain.x_min()) * lit(DEFAULT_GUARD_FRACTION))
        } else {
            None
        };
        let cfg = Self {
            dt,
            domain,
            constants,
            potential,
            left_bc,
            right_bc,
            truncation_guard: guard,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Dirichlet wall at `x_min`, free interior, `∂ψ/∂n = (ν+iκ)ψ` at the right end.
    pub fn hard_detector(
        domain: SimulationDomain<T>,
        constants: PhysicalConstants<T>,
        kappa: T,
        nu: T,
        dt: T,
    ) -> Result<Self> {
        Self::new(
            domain,
            constants,
            PotentialSpec::free(),
            BoundarySpec::dirichlet(Side::Left),
            BoundarySpec::absorbing(Side::Right, kappa, nu)?,
            dt,
        )
    }

    pub fn with_guard(mut self, width: Option<T>) -> Self {
        self.truncation_guard = width;
        self
    }

    pub fn with_potential(mut self, potential: PotentialSpec<T>) -> Result<Self> {
        self.potential = potential;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if self.left_bc.side != Side::Left {
            return Err(invalid("left_bc", "boundary spec is for the right side"));
        }
        if self.right_bc.side != Side::Right {
            return Err(invalid("right_bc", "boundary spec is for the left side"));
        }
        self.left_bc.kind.validate()?;
        self.right_bc.kind.validate()?;
        self.potential.sample(&self.domain)?;
        if let Some(g) = self.truncation_guard {
            if !(g > T::zero()) {
                return Err(invalid("truncation_guard", "must be positive"));
            }
        }
        Ok(())
    }

    /// Boundaries carrying an outward flux, in (left, right) order.
    pub fn detecting_sides(&self) -> Vec<Side> {
        [self.left_bc, self.right_bc]
            .iter()
            .filter(|b| b.kind.is_absorbing())
            .map(|b| b.side)
            .collect()
    }
}

/// Absorbing endpoint: node index and `ħκ/m`.
#[derive(Debug, Clone, Copy)]
struct Absorber<T> {
    node: usize,
    speed: T,
}

/// Outward detection rates during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFluxes<T> {
    /// One entry per absorbing endpoint, ordered as [`PropagatorConfig::detecting_sides`].
    pub boundary: Vec<T>,
    pub shell: T,
}

impl<T: Real> StepFluxes<T> {
    pub fn total(&self) -> T {
        self.boundary.iter().fold(self.shell, |a, &b| a + b)
    }
}

/// A configured and factorized Crank–Nicolson stepper.
#[derive(Debug, Clone)]
pub struct Propagator<T> {
    config: PropagatorConfig<T>,
    explicit: Tridiagonal<T>,
    implicit: ThomasFactors<T>,
    hamiltonian: Tridiagonal<T>,
    absorbers: Vec<Absorber<T>>,
    /// `(2/ħ)·wᵢ·(−Im Vᵢ)` for nodes with absorption.
    shell_rates: Vec<(usize, T)>,
    pinned: Vec<usize>,
    guard_nodes: usize,
    weights: Vec<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(config: PropagatorConfig<T>) -> Result<Self> {
        config.validate()?;
        let d = config.domain;
        let n = d.n_nodes();
        let dx = d.dx();
        let c = config.constants;
        let a = c.kinetic_prefactor() / (dx * dx);
        let two = lit::<T>(2.0);
        let potential = config.potential.sample(&d)?;
        let re = |x: T| C::new(x, T::zero());

        let mut h = Tridiagonal::zeros(n);
        for i in 0..n {
            h.lower[i] = re(-a);
            h.upper[i] = re(-a);
            h.diag[i] = re(two * a) + potential[i];
        }
        let mut pinned = Vec::new();
        match config.left_bc.kind.log_derivative() {
            Some(beta) => {
                h.upper[0] = re(-two * a);
                h.diag[0] = h.diag[0] - beta * (two * a * dx);
            }
            None => pinned.push(0),
        }
        match config.right_bc.kind.log_derivative() {
            Some(beta) => {
                h.lower[n - 1] = re(-two * a);
                h.diag[n - 1] = h.diag[n - 1] - beta * (two * a * dx);
            }
            None => pinned.push(n - 1),
        }

        let tau = C::new(T::zero(), config.dt / (two * c.hbar));
        let one = re(T::one());
        let mut plus = Tridiagonal::zeros(n);
        let mut minus = Tridiagonal::zeros(n);
        for i in 0..n {
            plus.lower[i] = tau * h.lower[i];
            plus.diag[i] = one + tau * h.diag[i];
            plus.upper[i] = tau * h.upper[i];
            minus.lower[i] = -tau * h.lower[i];
            minus.diag[i] = one - tau * h.diag[i];
            minus.upper[i] = -tau * h.upper[i];
        }
        let zero = re(T::zero());
        for &p in &pinned {
            plus.lower[p] = zero;
            plus.upper[p] = zero;
            plus.diag[p] = one;
            minus.lower[p] = zero;
            minus.upper[p] = zero;
            minus.diag[p] = zero;
        }
        let implicit = plus.factorize()?;

        let mut absorbers = Vec::new();
        for (bc, node) in [(config.left_bc, 0), (config.right_bc, n - 1)] {
            if let BoundaryKind::AbsorbingRobin { kappa, .. } = bc.kind {
                absorbers.push(Absorber {
                    node,
                    speed: c.velocity(kappa),
                });
            }
        }
        let weights = d.weights();
        let shell_rates = potential
            .iter()
            .enumerate()
            .filter(|(_, v)| v.im < T::zero())
            .map(|(i, v)| (i, two / c.hbar * weights[i] * (-v.im)))
            .collect();
        let guard_nodes = match (config.truncation_guard, config.left_bc.kind) {
            (Some(g), BoundaryKind::Dirichlet) => {
                let k = (g / dx).ceil().to_usize().unwrap_or(0);
                k.clamp(1, n)
            }
            _ => 0,
        };

        Ok(Self {
            config,
            explicit: minus,
            implicit,
            hamiltonian: h,
            absorbers,
            shell_rates,
            pinned,
            guard_nodes,
            weights,
        })
    }

    pub fn config(&self) -> &PropagatorConfig<T> {
        &self.config
    }

    pub fn dt(&self) -> T {
        self.config.dt
    }

    /// The discrete Hamiltonian (boundary rows already eliminated).
    pub fn hamiltonian(&self) -> &Tridiagonal<T> {
        &self.hamiltonian
    }

    pub fn has_shell(&self) -> bool {
        !self.shell_rates.is_empty()
    }

    /// Advances raw amplitudes by one step: `next = M₊⁻¹ M₋ current`.
    pub fn step_slice(&self, current: &[C<T>], next: &mut [C<T>]) {
        self.explicit.mul_into(current, next);
        for &p in &self.pinned {
            next[p] = C::new(T::zero(), T::zero());
        }
        self.implicit.solve_in_place(next);
    }

    /// Detection rates for the step `before → after`, evaluated at the
    /// step midpoint so that they close the norm balance exactly.
    pub fn step_fluxes(&self, before: &[C<T>], after: &[C<T>]) -> StepFluxes<T> {
        let half = lit::<T>(0.5);
        let mid = |i: usize| ((before[i] + after[i]) * half).norm_sqr();
        let boundary = self
            .absorbers
            .iter()
            .map(|a| a.speed * mid(a.node))
            .collect();
        let shell = self
            .shell_rates
            .iter()
            .fold(T::zero(), |acc, &(i, r)| acc + r * mid(i));
        StepFluxes { boundary, shell }
    }

    /// One step of the evolution.
    pub fn step(&self, psi: &WaveFunction<T>) -> Result<WaveFunction<T>> {
        self.check_grid(psi)?;
        let mut out = psi.clone();
        self.step_slice(psi.values(), out.values_mut());
        let t = psi.time() + self.config.dt;
        out.set_time(t);
        if out
            .values()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { time: to_f64(t) });
        }
        Ok(out)
    }

    fn check_grid(&self, psi: &WaveFunction<T>) -> Result<()> {
        if psi.domain().same_grid(&self.config.domain) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn step_count(&self, t_final: T) -> Result<usize> {
        if !(t_final >= T::zero()) || !t_final.is_finite() {
            return Err(invalid("t_final", "must be non-negative"));
        }
        let ratio = t_final / self.config.dt;
        let n = ratio.round();
        if (ratio - n).abs() > lit::<T>(1e-6) * n.max(T::one()) {
            return Err(invalid("t_final", "must be an integer multiple of dt"));
        }
        n.to_usize()
            .ok_or_else(|| invalid("t_final", "too many steps"))
    }

    /// Runs to `t_final`, storing every `snapshot_stride`-th state (0 = none).
    pub fn evolve(
        &self,
        psi0: &WaveFunction<T>,
        t_final: T,
        snapshot_stride: usize,
    ) -> Result<EvolutionRecord<T>> {
        self.evolve_observed(psi0, t_final, snapshot_stride, |_| Ok(()))
    }

    /// As [`evolve`](Self::evolve), calling `observer` after every step with
    /// the states on either side of it.
    pub fn evolve_observed<F>(
        &self,
        psi0: &WaveFunction<T>,
        t_final: T,
        snapshot_stride: usize,
        mut observer: F,
    ) -> Result<EvolutionRecord<T>>
    where
        F: FnMut(StepView<'_, T>) -> Result<()>,
    {
        self.check_grid(psi0)?;
        let steps = self.step_count(t_final)?;
        let dt = self.config.dt;
        let n = self.config.domain.n_nodes();
        let sides = self.config.detecting_sides();

        let mut current = psi0.values().to_vec();
        // The truncation wall is not part of the state space.
        for &p in &self.pinned {
            current[p] = C::new(T::zero(), T::zero());
        }
        let initial_norm = norm_squared(psi0);
        let mut record = EvolutionRecord {
            dt,
            times: Vec::with_capacity(steps + 1),
            boundary_flux: sides
                .iter()
                .map(|&side| EndpointFlux {
                    side,
                    values: Vec::with_capacity(steps),
                })
                .collect(),
            shell_density: Vec::with_capacity(steps),
            shell_marginal: if self.has_shell() {
                vec![T::zero(); n]
            } else {
                Vec::new()
            },
            norms: Vec::with_capacity(steps + 1),
            snapshots: Vec::new(),
            snapshot_stride,
            initial_norm,
            final_state: psi0.clone(),
            constants: self.config.constants,
            left_bc: self.config.left_bc.kind,
            right_bc: self.config.right_bc.kind,
        };
        record.times.push(psi0.time());
        record.norms.push(initial_norm);
        if snapshot_stride > 0 {
            record.snapshots.push(psi0.clone());
        }
        if steps == 0 {
            return Ok(record);
        }

        let guard_limit = lit::<T>(TRUNCATION_MASS_LIMIT);
        let mut next = vec![C::new(T::zero(), T::zero()); n];
        let t0 = psi0.time();
        for k in 0..steps {
            let t = t0 + from_usize::<T>(k) * dt;
            let t_next = t0 + from_usize::<T>(k + 1) * dt;
            self.step_slice(&current, &mut next);

            let fl = self.step_fluxes(&current, &next);
            for (slot, v) in record.boundary_flux.iter_mut().zip(&fl.boundary) {
                slot.values.push(*v);
            }
            record.shell_density.push(fl.shell);
            if self.has_shell() {
                let half = lit::<T>(0.5);
                for &(i, r) in &self.shell_rates {
                    let m = ((current[i] + next[i]) * half).norm_sqr();
                    record.shell_marginal[i] = record.shell_marginal[i] + dt * r * m;
                }
            }

            let norm = next
                .iter()
                .zip(&self.weights)
                .fold(T::zero(), |a, (z, &w)| a + w * z.norm_sqr());
            if !norm.is_finite() {
                return Err(Error::NonFinite {
                    time: to_f64(t_next),
                });
            }
            if self.guard_nodes > 0 {
                let guard = next[..self.guard_nodes]
                    .iter()
                    .zip(&self.weights)
                    .fold(T::zero(), |a, (z, &w)| a + w * z.norm_sqr());
                if guard > guard_limit {
                    return Err(Error::TruncationViolation {
                        time: to_f64(t_next),
                        mass: to_f64(guard),
                    });
                }
            }
            record.times.push(t_next);
            record.norms.push(norm);

            observer(StepView {
                index: k,
                t0: t,
                dt,
                before: &current,
                after: &next,
            })?;

            std::mem::swap(&mut current, &mut next);
            if snapshot_stride > 0 && (k + 1) % snapshot_stride == 0 {
                record.snapshots.push(WaveFunction::new(
                    self.config.domain,
                    current.clone(),
                    t_next,
                )?);
            }
        }
        record.final_state = WaveFunction::new(
            self.config.domain,
            current,
            t0 + from_usize::<T>(steps) * dt,
        )?;
        Ok(record)
    }

    /// `W_t ψ₀`.
    pub fn apply(&self, psi0: &WaveFunction<T>, t: T) -> Result<WaveFunction<T>> {
        Ok(self.evolve(psi0, t, 0)?.final_state)
    }
}

/// The two states around one completed step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a, T> {
    pub index: usize,
    pub t0: T,
    pub dt: T,
    pub before: &'a [C<T>],
    pub after: &'a [C<T>],
}

/// Detection rate at one absorbing endpoint, one entry per step.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointFlux<T> {
    pub side: Side,
    pub values: Vec<T>,
}

/// Everything recorded while evolving.
///
/// `times` has one entry per grid time `t₀ … t_N`; the per-step arrays
/// (`boundary_flux`, `shell_density`) have `N` entries, entry `k` being the
/// rate on `[t_k, t_{k+1}]`.
#[derive(Debug, Clone)]
pub struct EvolutionRecord<T> {
    pub dt: T,
    pub times: Vec<T>,
    pub boundary_flux: Vec<EndpointFlux<T>>,
    pub shell_density: Vec<T>,
    /// Detected mass per grid node inside the shell (empty without a shell).
    pub shell_marginal: Vec<T>,
    /// `‖ψ(t_k)‖²`, computed from the state itself.
    pub norms: Vec<T>,
    pub snapshots: Vec<WaveFunction<T>>,
    pub snapshot_stride: usize,
    pub initial_norm: T,
    pub final_state: WaveFunction<T>,
    pub constants: PhysicalConstants<T>,
    pub left_bc: BoundaryKind<T>,
    pub right_bc: BoundaryKind<T>,
}

impl<T: Real> EvolutionRecord<T> {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_final(&self) -> T {
        *self
            .times
            .last()
            .expect("record has at least the initial time")
    }

    /// Total detection rate during step `k`.
    pub fn total_rate(&self, k: usize) -> T {
        self.boundary_flux
            .iter()
            .fold(self.shell_density[k], |a, f| a + f.values[k])
    }

    /// `dt · Σ_k rate_k`.
    pub fn detected_mass(&self) -> T {
        (0..self.steps()).fold(T::zero(), |a, k| a + self.total_rate(k)) * self.dt
    }

    /// Largest `|‖ψ_{k+1}‖² − ‖ψ_k‖² + dt·rate_k|` over the run.
    pub fn max_step_balance_error(&self) -> T {
        (0..self.steps())
            .map(|k| (self.norms[k + 1] - self.norms[k] + self.dt * self.total_rate(k)).abs())
            .fold(T::zero(), T::max)
    }
}

/// One Crank–Nicolson step under `config`.
pub fn step<T: Real>(
    psi: &WaveFunction<T>,
    config: &PropagatorConfig<T>,
) -> Result<WaveFunction<T>> {
    Propagator::new(config.clone())?.step(psi)
}

pub fn evolve<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    config: &PropagatorConfig<T>,
    snapshot_stride: usize,
) -> Result<EvolutionRecord<T>> {
    Propagator::new(config.clone())?.evolve(psi0, t_final, snapshot_stride)
}

/// `W_t ψ₀`, the final state only.
pub fn apply_semigroup<T: Real>(
    psi0: &WaveFunction<T>,
    t: T,
    config: &PropagatorConfig<T>,
) -> Result<WaveFunction<T>> {
    Propagator::new(config.clone())?.apply(psi0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{l2_distance, make_gaussian_packet};

    fn small_hard(kappa: f64) -> (PropagatorConfig<f64>, WaveFunction<f64>) {
        let d = SimulationDomain::new(-40.0, 0.0, 1600).unwrap();
        let cfg =
            PropagatorConfig::hard_detector(d, PhysicalConstants::natural(), kappa, 0.0, 0.01)
                .unwrap();
        let psi = make_gaussian_packet(&d, -15.0, 2.0, 1.5).unwrap();
        (cfg, psi)
    }

    #[test]
    fn absorbing_step_contracts() {
        let (cfg, psi) = small_hard(1.0);
        let p = Propagator::new(cfg).unwrap();
        let mut cur = psi;
        for _ in 0..1500 {
            let next = p.step(&cur).unwrap();
            assert!(norm_squared(&next) <= norm_squared(&cur) + 1e-12);
            cur = next;
        }
        assert!(norm_squared(&cur) < 0.9);
    }

    #[test]
    fn dirichlet_ends_preserve_norm() {
        let d = SimulationDomain::<f64>::new(-20.0, 0.0, 400).unwrap();
        let cfg = PropagatorConfig::new(
            d,
            PhysicalConstants::natural(),
            PotentialSpec::free(),
            BoundarySpec::dirichlet(Side::Left),
            BoundarySpec::dirichlet(Side::Right),
            0.02,
        )
        .unwrap()
        .with_guard(None);
        let psi = make_gaussian_packet(&d, -8.0, 1.0, 3.0).unwrap();
        let p = Propagator::new(cfg).unwrap();
        let mut cur = psi;
        for _ in 0..200 {
            let next = p.step(&cur).unwrap();
            assert!((norm_squared(&next) - norm_squared(&cur)).abs() < 1e-12);
            cur = next;
        }
    }

    #[test]
    fn constant_is_stationary_with_neumann_ends() {
        let d = SimulationDomain::<f64>::new(-5.0, 0.0, 100).unwrap();
        let cfg = PropagatorConfig::new(
            d,
            PhysicalConstants::natural(),
            PotentialSpec::free(),
            BoundarySpec::neumann(Side::Left),
            BoundarySpec::neumann(Side::Right),
            0.01,
        )
        .unwrap();
        let psi = WaveFunction::from_fn(d, |_| C::new(0.3, -0.1)).unwrap();
        let next = step(&psi, &cfg).unwrap();
        for (a, b) in psi.values().iter().zip(next.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let (cfg, psi) = small_hard(1.0);
        let out = apply_semigroup(&psi, 0.0, &cfg).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn step_is_linear() {
        let (cfg, psi) = small_hard(2.0);
        let d = cfg.domain;
        let phi = make_gaussian_packet(&d, -12.0, 0.8, -0.5).unwrap();
        let a = C::new(0.3, -1.2);
        let b = C::new(-0.7, 0.4);
        let lhs = step(&psi.combine(a, &phi, b).unwrap(), &cfg).unwrap();
        let rhs = step(&psi, &cfg)
            .unwrap()
            .combine(a, &step(&phi, &cfg).unwrap(), b)
            .unwrap();
        assert!(l2_distance(&lhs, &rhs).unwrap() < 1e-13);
    }

    #[test]
    fn per_step_balance_is_exact() {
        let (cfg, psi) = small_hard(1.5);
        let rec = evolve(&psi, 15.0, &cfg, 0).unwrap();
        assert!(
            rec.max_step_balance_error() < 1e-13,
            "{}",
            rec.max_step_balance_error()
        );
        assert!(rec.detected_mass() > 0.5);
    }

    #[test]
    fn non_multiple_horizon_rejected() {
        let (cfg, psi) = small_hard(1.0);
        assert!(evolve(&psi, 0.015, &cfg, 0).is_err());
        assert!(evolve(&psi, -1.0, &cfg, 0).is_err());
    }

    #[test]
    fn guard_catches_truncation() {
        let d = SimulationDomain::<f64>::new(-20.0, 0.0, 400).unwrap();
        let cfg = PropagatorConfig::hard_detector(d, PhysicalConstants::natural(), 1.0, 0.0, 0.02)
            .unwrap();
        // moving left towards the wall
        let psi = make_gaussian_packet(&d, -10.0, 1.0, -3.0).unwrap();
        let err = evolve(&psi, 10.0, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::TruncationViolation { .. }));
    }

    #[test]
    fn mismatched_boundary_side_rejected() {
        let d = SimulationDomain::<f64>::new(-20.0, 0.0, 400).unwrap();
        let r = PropagatorConfig::new(
            d,
            PhysicalConstants::natural(),
            PotentialSpec::free(),
            BoundarySpec::dirichlet(Side::Right),
            BoundarySpec::dirichlet(Side::Right),
            0.02,
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_precision_contracts() {
        let d = SimulationDomain::<f32>::new(-40.0, 0.0, 800).unwrap();
        let cfg = PropagatorConfig::hard_detector(d, PhysicalConstants::natural(), 1.5, 0.0, 0.02)
            .unwrap();
        let psi = make_gaussian_packet(&d, -15.0, 2.0, 1.5).unwrap();
        let rec = evolve(&psi, 16.0, &cfg, 0).unwrap();
        let n = norm_squared(&rec.final_state);
        assert!(n < 0.2 && n >= 0.0);
        assert!(rec.max_step_balance_error() < 1e-5);
    }
}
