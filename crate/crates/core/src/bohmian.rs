//! Bohmian trajectories `dX/dt = j(X,t)/|ψ(X,t)|²` in the absorbed field.
//!
//! The velocity is built from nodal current and density, both interpolated
//! linearly in `x` and in `t`. At an absorbing end node the current uses the
//! boundary condition, so a particle leaves through `x = 0` with velocity
//! `ħκ/m`. Particles are pushed with classical RK4 at half the field step and
//! stop for good on exit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{BoundaryKind, PhysicalConstants, SimulationDomain};
use crate::error::{invalid, Error, Result};
use crate::observables::{current_with_bc, detection_distribution, DetectionDistribution};
use crate::propagator::{EvolutionRecord, Propagator, PropagatorConfig};
use crate::scalar::{from_usize, lit, to_f64, Real, C};
use crate::wave::WaveFunction;

/// Density below which the velocity field is treated as singular.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Step halvings allowed before a particle counts as stalled.
pub const RETRY_BUDGET: u32 = 20;

/// Fraction of stalled particles above which an ensemble is invalid.
pub const STALL_LIMIT: f64 = 0.01;

/// Nodal current and density at one time level.
#[derive(Debug, Clone)]
struct FieldSlice<T> {
    t: T,
    j: Vec<T>,
    rho: Vec<T>,
}

impl<T: Real> FieldSlice<T> {
    fn new(values: &[C<T>], t: T, frame: &Frame<T>) -> Self {
        Self {
            t,
            j: current_with_bc(
                values,
                frame.domain.dx(),
                &frame.constants,
                &frame.left,
                &frame.right,
            ),
            rho: values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Frame<T> {
    domain: SimulationDomain<T>,
    constants: PhysicalConstants<T>,
    left: BoundaryKind<T>,
    right: BoundaryKind<T>,
}

impl<T: Real> Frame<T> {
    fn of_record(record: &EvolutionRecord<T>) -> Result<Self> {
        let frame = Self {
            domain: *record.final_state.domain(),
            constants: record.constants,
            left: record.left_bc,
            right: record.right_bc,
        };
        frame.check()?;
        Ok(frame)
    }

    fn of_config(config: &PropagatorConfig<T>) -> Result<Self> {
        let frame = Self {
            domain: config.domain,
            constants: config.constants,
            left: config.left_bc.kind,
            right: config.right_bc.kind,
        };
        frame.check()?;
        Ok(frame)
    }

    fn check(&self) -> Result<()> {
        if self.right.is_absorbing() {
            Ok(())
        } else {
            Err(Error::WrongBoundary {
                kind: self.right.name(),
            })
        }
    }

    fn surface(&self) -> T {
        self.domain.x_max()
    }
}

/// Two consecutive time levels of the field.
struct Interval<'a, T> {
    a: &'a FieldSlice<T>,
    b: &'a FieldSlice<T>,
    domain: &'a SimulationDomain<T>,
}

impl<T: Real> Interval<'_, T> {
    fn velocity(&self, t: T, x: T) -> Result<T> {
        let d = self.domain;
        let span = self.b.t - self.a.t;
        let theta = if span > T::zero() {
            ((t - self.a.t) / span).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let x = x.max(d.x_min()).min(d.x_max());
        let i = d.cell_of(x);
        let s = ((x - d.x(i)) / d.dx()).max(T::zero()).min(T::one());
        let at = |f: &dyn Fn(&FieldSlice<T>) -> &Vec<T>| {
            let node = |k: usize| (T::one() - theta) * f(self.a)[k] + theta * f(self.b)[k];
            (T::one() - s) * node(i) + s * node(i + 1)
        };
        let rho = at(&|f| &f.rho);
        if !(rho >= lit(DENSITY_FLOOR)) {
            return Err(Error::NodeVicinity {
                x: to_f64(x),
                time: to_f64(t),
                density: to_f64(rho),
            });
        }
        Ok(at(&|f| &f.j) / rho)
    }

    fn rk4(&self, t: T, x: T, h: T) -> Result<T> {
        let half = lit::<T>(0.5);
        let k1 = self.velocity(t, x)?;
        let k2 = self.velocity(t + h * half, x + h * half * k1)?;
        let k3 = self.velocity(t + h * half, x + h * half * k2)?;
        let k4 = self.velocity(t + h, x + h * k3)?;
        Ok(x + h / lit(6.0) * (k1 + lit::<T>(2.0) * (k2 + k3) + k4))
    }
}

#[derive(Debug, Clone)]
struct Particle<T> {
    x: T,
    exit_time: Option<T>,
    exit_velocity: Option<T>,
    stall: Option<Error>,
    path: Option<Vec<(T, T)>>,
}

impl<T: Real> Particle<T> {
    fn new(x: T, t0: T, keep_path: bool) -> Self {
        Self {
            x,
            exit_time: None,
            exit_velocity: None,
            stall: None,
            path: keep_path.then(|| vec![(t0, x)]),
        }
    }

    fn active(&self) -> bool {
        self.exit_time.is_none() && self.stall.is_none()
    }

    /// Pushes the particle across one field interval in two RK4 substeps,
    /// halving on contact with a node.
    fn advance(&mut self, iv: &Interval<'_, T>, surface: T) {
        if !self.active() {
            return;
        }
        if self.x >= surface {
            self.exit(iv, iv.a.t, surface, None);
            return;
        }
        let (t0, t1) = (iv.a.t, iv.b.t);
        let nominal = (t1 - t0) * lit(0.5);
        let eps = (t1 - t0) * lit(1e-9);
        let mut t = t0;
        let mut halvings = 0u32;
        while t1 - t > eps {
            let h = (nominal / lit::<T>(2.0).powi(halvings as i32)).min(t1 - t);
            match iv.rk4(t, self.x, h) {
                Ok(x_new) => {
                    if x_new >= surface {
                        let frac = (surface - self.x) / (x_new - self.x);
                        let t_exit = t + frac * h;
                        self.exit(iv, t_exit, surface, Some((x_new - self.x) / h));
                        return;
                    }
                    self.x = x_new;
                    t = t + h;
                    halvings = 0;
                    if let Some(p) = self.path.as_mut() {
                        p.push((t, x_new));
                    }
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > RETRY_BUDGET {
                        self.stall = Some(e);
                        return;
                    }
                }
            }
        }
    }

    fn exit(&mut self, iv: &Interval<'_, T>, t_exit: T, surface: T, fallback: Option<T>) {
        let v = iv.velocity(t_exit, surface).ok().or(fallback);
        self.exit_time = Some(t_exit);
        self.exit_velocity = v;
        self.x = surface;
        if let Some(p) = self.path.as_mut() {
            p.push((t_exit, surface));
        }
    }
}

/// `j/|ψ|²` at `(t, x)` from the record's snapshots (linear in `x` and `t`).
pub fn velocity_field<T: Real>(record: &EvolutionRecord<T>, t: T, x: T) -> Result<T> {
    let frame = Frame::of_record(record)?;
    let (a, b) = snapshot_pair(record, t)?;
    let sa = FieldSlice::new(a.values(), a.time(), &frame);
    let sb = FieldSlice::new(b.values(), b.time(), &frame);
    Interval {
        a: &sa,
        b: &sb,
        domain: &frame.domain,
    }
    .velocity(t, x)
}

fn snapshot_pair<T: Real>(
    record: &EvolutionRecord<T>,
    t: T,
) -> Result<(&WaveFunction<T>, &WaveFunction<T>)> {
    let snaps = &record.snapshots;
    if record.snapshot_stride == 0 || snaps.len() < 2 {
        return Err(invalid("record", "velocity field needs stored snapshots"));
    }
    let t0 = snaps[0].time();
    let tl = snaps[snaps.len() - 1].time();
    if t < t0 || t > tl || t.is_nan() {
        return Err(Error::OutOfRange {
            time: to_f64(t),
            t_final: to_f64(tl),
        });
    }
    let span = snaps[1].time() - t0;
    let k = ((t - t0) / span)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(snaps.len() - 2);
    Ok((&snaps[k], &snaps[k + 1]))
}

/// One trajectory with its full path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult<T> {
    pub path: Vec<(T, T)>,
    pub exit_time: Option<T>,
    pub exit_velocity: Option<T>,
}

/// Integrates a single trajectory through the record's snapshots.
pub fn integrate_trajectory<T: Real>(
    record: &EvolutionRecord<T>,
    x_start: T,
) -> Result<TrajectoryResult<T>> {
    let frame = Frame::of_record(record)?;
    let d = frame.domain;
    if !(x_start > d.x_min() && x_start < frame.surface()) {
        return Err(invalid("x_start", "must lie inside (x_min, 0)"));
    }
    let snaps = &record.snapshots;
    if record.snapshot_stride == 0 || snaps.len() < 2 {
        return Err(invalid("record", "trajectories need stored snapshots"));
    }
    let mut p = Particle::new(x_start, snaps[0].time(), true);
    let mut prev = FieldSlice::new(snaps[0].values(), snaps[0].time(), &frame);
    for s in &snaps[1..] {
        let next = FieldSlice::new(s.values(), s.time(), &frame);
        p.advance(
            &Interval {
                a: &prev,
                b: &next,
                domain: &d,
            },
            frame.surface(),
        );
        if let Some(e) = p.stall.take() {
            return Err(e);
        }
        if p.exit_time.is_some() {
            break;
        }
        prev = next;
    }
    Ok(TrajectoryResult {
        path: p.path.unwrap_or_default(),
        exit_time: p.exit_time,
        exit_velocity: p.exit_velocity,
    })
}

/// `n` positions drawn from `|ψ|²` (piecewise-linear density) with a seeded
/// ChaCha8 stream, sorted ascending.
pub fn sample_positions<T: Real>(psi: &WaveFunction<T>, n: usize, seed: u64) -> Vec<T> {
    let d = psi.domain();
    let rho: Vec<f64> = psi.density().into_iter().map(to_f64).collect();
    let dx = to_f64(d.dx());
    let mut cdf = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in rho.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<T> = (0..n)
        .map(|_| {
            let target = rng.gen::<f64>() * acc;
            let i = cdf
                .partition_point(|&c| c <= target)
                .clamp(1, rho.len() - 1)
                - 1;
            let (a, b) = (rho[i], rho[i + 1]);
            let r = (target - cdf[i]) / dx;
            let tau = if (b - a).abs() < 1e-12 * (a + b) {
                r / a.max(f64::MIN_POSITIVE)
            } else {
                (-a + (a * a + 2.0 * (b - a) * r).max(0.0).sqrt()) / (b - a)
            };
            d.x(i) + lit::<T>(tau.clamp(0.0, 1.0) * dx)
        })
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite positions"));
    xs
}

/// Exit statistics of an `|ψ₀|²`-distributed ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStatistics<T> {
    pub seed: u64,
    /// Sorted starting positions.
    pub initial_positions: Vec<T>,
    pub exit_times: Vec<Option<T>>,
    pub exit_velocities: Vec<Option<T>>,
    pub stalled: Vec<bool>,
    pub stall_count: usize,
    pub never_exit_fraction: T,
    /// Flux-based `Prob(no detection by t_final)`, normalized to the initial norm.
    pub flux_prob_never: T,
    /// Kolmogorov–Smirnov distance between the empirical exit-time CDF and
    /// the flux CDF of the same run.
    pub ks_distance: T,
    /// `ħκ/m`.
    pub expected_exit_velocity: T,
    pub mean_exit_velocity: T,
    /// `max |v_exit/(ħκ/m) − 1|`.
    pub max_exit_velocity_error: T,
    /// Adjacent pairs (by starting position) found out of order at any step.
    pub order_violations: usize,
    pub valid: bool,
}

impl<T: Real> EnsembleStatistics<T> {
    pub fn n_samples(&self) -> usize {
        self.initial_positions.len()
    }

    /// Fraction of non-stalled particles that exited by `t`.
    pub fn exit_cdf(&self, t: T) -> T {
        let counted = self.n_samples() - self.stall_count;
        if counted == 0 {
            return T::zero();
        }
        let hits = self
            .exit_times
            .iter()
            .filter(|e| e.is_some_and(|te| te <= t))
            .count();
        from_usize::<T>(hits) / from_usize(counted)
    }
}

struct Swarm<T> {
    particles: Vec<Particle<T>>,
    order_violations: usize,
}

impl<T: Real> Swarm<T> {
    fn new(positions: &[T], t0: T) -> Self {
        Self {
            particles: positions
                .iter()
                .map(|&x| Particle::new(x, t0, false))
                .collect(),
            order_violations: 0,
        }
    }

    fn advance(&mut self, iv: &Interval<'_, T>, surface: T) {
        self.particles
            .par_iter_mut()
            .for_each(|p| p.advance(iv, surface));
        self.order_violations += self
            .particles
            .windows(2)
            .filter(|w| out_of_order(&w[0], &w[1]))
            .count();
    }
}

/// `left` started to the left of `right`; it must stay left and exit later.
fn out_of_order<T: Real>(left: &Particle<T>, right: &Particle<T>) -> bool {
    if left.stall.is_some() || right.stall.is_some() {
        return false;
    }
    match (left.exit_time, right.exit_time) {
        (None, None) => left.x > right.x,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => a < b,
    }
}

fn summarize<T: Real>(
    swarm: Swarm<T>,
    positions: Vec<T>,
    seed: u64,
    dist: &DetectionDistribution<T>,
    frame: &Frame<T>,
) -> Result<EnsembleStatistics<T>> {
    let n = positions.len();
    let stalled: Vec<bool> = swarm.particles.iter().map(|p| p.stall.is_some()).collect();
    let stall_count = stalled.iter().filter(|&&s| s).count();
    let counted = n - stall_count;
    if counted == 0 {
        return Err(invalid("ensemble", "every particle stalled"));
    }
    let exit_times: Vec<Option<T>> = swarm.particles.iter().map(|p| p.exit_time).collect();
    let exit_velocities: Vec<Option<T>> = swarm.particles.iter().map(|p| p.exit_velocity).collect();

    let mut times: Vec<T> = exit_times.iter().flatten().copied().collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite exit times"));
    let norm0 = dist.initial_norm;
    let nf = from_usize::<T>(counted);
    let mut ks = T::zero();
    for (i, &t) in times.iter().enumerate() {
        let f = dist.cumulative_at(t.min(dist.t_final()))? / norm0;
        let above = from_usize::<T>(i + 1) / nf - f;
        let below = f - from_usize::<T>(i) / nf;
        ks = ks.max(above).max(below);
    }
    let tail = (from_usize::<T>(times.len()) / nf - dist.detected() / norm0).abs();
    ks = ks.max(tail);

    let kappa = frame.right.kappa();
    let expected = frame.constants.velocity(kappa);
    let vs: Vec<T> = exit_velocities.iter().flatten().copied().collect();
    let mean_v = if vs.is_empty() {
        T::nan()
    } else {
        vs.iter().copied().sum::<T>() / from_usize(vs.len())
    };
    let max_err = vs
        .iter()
        .map(|&v| (v / expected - T::one()).abs())
        .fold(T::zero(), T::max);
    let never = from_usize::<T>(counted - times.len()) / nf;
    Ok(EnsembleStatistics {
        seed,
        initial_positions: positions,
        exit_times,
        exit_velocities,
        stalled,
        stall_count,
        never_exit_fraction: never,
        flux_prob_never: dist.prob_never / norm0,
        ks_distance: ks,
        expected_exit_velocity: expected,
        mean_exit_velocity: mean_v,
        max_exit_velocity_error: max_err,
        order_violations: swarm.order_violations,
        valid: from_usize::<T>(stall_count) <= lit::<T>(STALL_LIMIT) * from_usize(n),
    })
}

/// Ensemble statistics from a record with stored snapshots.
pub fn ensemble_exit_statistics<T: Real>(
    record: &EvolutionRecord<T>,
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleStatistics<T>> {
    if n_samples < 100 {
        return Err(invalid("n_samples", "need at least 100 samples"));
    }
    let frame = Frame::of_record(record)?;
    let snaps = &record.snapshots;
    if record.snapshot_stride == 0 || snaps.len() < 2 {
        return Err(invalid("record", "trajectories need stored snapshots"));
    }
    let positions = sample_positions(&snaps[0], n_samples, seed);
    let mut swarm = Swarm::new(&positions, snaps[0].time());
    let mut prev = FieldSlice::new(snaps[0].values(), snaps[0].time(), &frame);
    for s in &snaps[1..] {
        let next = FieldSlice::new(s.values(), s.time(), &frame);
        swarm.advance(
            &Interval {
                a: &prev,
                b: &next,
                domain: &frame.domain,
            },
            frame.surface(),
        );
        prev = next;
    }
    let dist = detection_distribution(record);
    summarize(swarm, positions, seed, &dist, &frame)
}

/// Evolves `psi0` and moves an `|ψ₀|²`-sampled ensemble along in the same
/// pass, one field step at a time, without storing snapshots.
pub fn co_integrated_ensemble<T: Real>(
    config: &PropagatorConfig<T>,
    psi0: &WaveFunction<T>,
    t_final: T,
    n_samples: usize,
    seed: u64,
) -> Result<(EnsembleStatistics<T>, DetectionDistribution<T>)> {
    if n_samples < 100 {
        return Err(invalid("n_samples", "need at least 100 samples"));
    }
    let frame = Frame::of_config(config)?;
    let prop = Propagator::new(config.clone())?;
    let positions = sample_positions(psi0, n_samples, seed);
    let mut swarm = Swarm::new(&positions, psi0.time());
    let mut prev = FieldSlice::new(psi0.values(), psi0.time(), &frame);
    let record = prop.evolve_observed(psi0, t_final, 0, |view| {
        let next = FieldSlice::new(view.after, view.t0 + view.dt, &frame);
        swarm.advance(
            &Interval {
                a: &prev,
                b: &next,
                domain: &frame.domain,
            },
            frame.surface(),
        );
        prev = next;
        Ok(())
    })?;
    let dist = detection_distribution(&record);
    let stats = summarize(swarm, positions, seed, &dist, &frame)?;
    Ok((stats, dist))
}
