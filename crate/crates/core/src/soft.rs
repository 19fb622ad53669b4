//! Soft detectors: an absorbing shell `−iv` on `[0, L]` behind the surface,
//! closed by a back wall at `x = L`, and the harness that drives such a shell
//! towards the hard (boundary-condition) detector.
//!
//! The shell removes probability at rate `γ|ψ|²` per unit length with
//! `γ = 2v/ħ`, which is what the Crank–Nicolson norm balance produces for the
//! potential `−iv`.

use rayon::prelude::*;

use crate::analytic::soft_kappa_eff;
use crate::domain::{
    BoundaryKind, BoundarySpec, PhysicalConstants, PotentialSpec, Side, SimulationDomain,
    SoftDetectorSpec,
};
use crate::error::{invalid, Result};
use crate::observables::{detection_distribution, DetectionDistribution};
use crate::propagator::{EvolutionRecord, Propagator, PropagatorConfig};
use crate::scalar::{from_usize, lit, to_f64, Real, C};
use crate::wave::{l2_distance, WaveFunction};

/// Minimum number of grid cells across the shell.
pub const MIN_SHELL_CELLS: usize = 16;

/// Largest final L1 distance a sweep may end on and still count as converging.
pub const SWEEP_FINAL_DISTANCE_LIMIT: f64 = 0.05;

/// A propagator configuration on `[x_min, L]` carrying a soft detector.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftRunConfig<T> {
    pub base: PropagatorConfig<T>,
    pub spec: SoftDetectorSpec<T>,
}

impl<T: Real> SoftRunConfig<T> {
    /// Builds the extended grid with spacing at most `dx`, refined so that
    /// the shell holds at least [`MIN_SHELL_CELLS`] cells and `L` is a node.
    pub fn new(
        x_min: T,
        dx: T,
        constants: PhysicalConstants<T>,
        spec: SoftDetectorSpec<T>,
        dt: T,
    ) -> Result<Self> {
        if !(dx > T::zero()) {
            return Err(invalid("dx", "must be positive"));
        }
        let cells = (spec.width / dx - lit(1e-9))
            .ceil()
            .max(from_usize(MIN_SHELL_CELLS));
        let h = spec.width / cells;
        let domain = SimulationDomain::with_spacing(x_min, spec.width, h)?;
        Self::on_domain(domain, constants, spec, dt)
    }

    /// Uses `domain` as given; it must end at `x = L` with enough shell cells.
    pub fn on_domain(
        domain: SimulationDomain<T>,
        constants: PhysicalConstants<T>,
        spec: SoftDetectorSpec<T>,
        dt: T,
    ) -> Result<Self> {
        let dx = domain.dx();
        if (domain.x_max() - spec.width).abs() > dx * lit(1e-6) {
            return Err(invalid("domain.x_max", "must equal the shell width"));
        }
        let shell_cells = (spec.width / dx).round();
        if shell_cells < from_usize(MIN_SHELL_CELLS) {
            return Err(invalid(
                "dx",
                format!("shell must contain at least {MIN_SHELL_CELLS} cells"),
            ));
        }
        let base = PropagatorConfig::new(
            domain,
            constants,
            PotentialSpec::shell(spec.strength, spec.width)?,
            BoundarySpec::dirichlet(Side::Left),
            BoundarySpec::new(Side::Right, spec.back_boundary)?,
            dt,
        )?;
        Ok(Self { base, spec })
    }

    pub fn domain(&self) -> &SimulationDomain<T> {
        &self.base.domain
    }

    /// `γ = 2v/ħ`.
    pub fn rate_constant(&self) -> T {
        lit::<T>(2.0) * self.spec.strength / self.base.constants.hbar
    }
}

/// Places `psi0`, given on `[x_min, 0]` or already on the target grid, onto
/// `domain` (zero beyond `x = 0`).
pub fn extend_to_domain<T: Real>(
    psi0: &WaveFunction<T>,
    domain: &SimulationDomain<T>,
) -> Result<WaveFunction<T>> {
    let src = psi0.domain();
    let origin = src.origin_index();
    let tiny = lit::<T>(1e-24);
    let outside: T = psi0.values()[origin + 1..]
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b);
    if outside > tiny {
        return Err(invalid("psi0", "initial state must vanish for x > 0"));
    }
    if src.same_grid(domain) {
        return Ok(psi0.clone());
    }
    let dx = domain.dx();
    if (src.dx() - dx).abs() > dx * lit(1e-9)
        || (src.x_min() - domain.x_min()).abs() > dx * lit(1e-6)
    {
        return Err(invalid(
            "psi0",
            "initial state must share x_min and dx with the detector grid",
        ));
    }
    let mut values = vec![C::new(T::zero(), T::zero()); domain.n_nodes()];
    values[..=origin].copy_from_slice(&psi0.values()[..=origin]);
    WaveFunction::new(*domain, values, psi0.time())
}

/// Evolves `psi0` under the soft detector, returning the full record.
pub fn run_soft<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    cfg: &SoftRunConfig<T>,
) -> Result<EvolutionRecord<T>> {
    let start = extend_to_domain(psi0, cfg.domain())?;
    Propagator::new(cfg.base.clone())?.evolve(&start, t_final, 0)
}

/// Detection-time density `γ ∫₀ᴸ |ψ_t|² dx` with its shell position marginal.
pub fn soft_detection_distribution<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    cfg: &SoftRunConfig<T>,
) -> Result<DetectionDistribution<T>> {
    Ok(detection_distribution(&run_soft(psi0, t_final, cfg)?))
}

/// Parameters of a soft-to-hard sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings<T> {
    /// `L₀`, the shell width of the first term.
    pub initial_width: T,
    pub terms: usize,
    pub back_boundary: BoundaryKind<T>,
    pub dt: T,
    pub constants: PhysicalConstants<T>,
}

impl<T: Real> SweepSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if self.terms < 3 {
            return Err(invalid("sweep_len", "need at least 3 terms"));
        }
        if !(self.initial_width > T::zero()) {
            return Err(invalid("soft.width", "must be positive"));
        }
        if !(self.dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        self.back_boundary.validate()
    }

    pub fn width(&self, j: usize) -> T {
        self.initial_width / lit::<T>(2.0).powi(j as i32)
    }

    /// Grid spacing that puts [`MIN_SHELL_CELLS`] cells across the thinnest shell.
    pub fn required_dx(&self) -> T {
        self.width(self.terms - 1) / from_usize(MIN_SHELL_CELLS)
    }

    /// The hard rule the sweep should approach: `∂ψ/∂n = (c + iκ)ψ` for a
    /// Robin back wall `∂ψ/∂n = cψ`, `∂ψ/∂n = iκψ` otherwise.
    pub fn limit_boundary(&self, kappa: T) -> Result<BoundaryKind<T>> {
        let nu = match self.back_boundary {
            BoundaryKind::Robin { c } => c,
            _ => T::zero(),
        };
        BoundaryKind::absorbing(kappa, nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepItem<T> {
    pub strength: T,
    pub width: T,
    pub vl: T,
    /// `∫|ρ_soft − ρ_hard| dt`.
    pub l1_distance: T,
    pub kappa_eff: T,
    /// `κ_eff ħ² / (m vL)`.
    pub kappa_constant: T,
    pub detected_mass: T,
    pub mean_detection_position: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVerdict {
    Converging,
    NotConverging,
}

impl SweepVerdict {
    pub fn label(self) -> &'static str {
        match self {
            SweepVerdict::Converging => "CONVERGING",
            SweepVerdict::NotConverging => "NOT-CONVERGING",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSweepResult<T> {
    pub items: Vec<SweepItem<T>>,
    pub kappa_target: T,
    pub back_boundary: BoundaryKind<T>,
    /// Boundary condition of the hard reference run.
    pub reference: BoundaryKind<T>,
    pub reference_detected_mass: T,
    pub verdict: SweepVerdict,
}

impl<T: Real> LimitSweepResult<T> {
    pub fn distances(&self) -> Vec<T> {
        self.items.iter().map(|i| i.l1_distance).collect()
    }

    /// A Dirichlet back wall is expected not to reproduce the hard rule.
    pub fn failure_expected(&self) -> bool {
        matches!(self.back_boundary, BoundaryKind::Dirichlet)
    }

    pub fn final_distance(&self) -> T {
        self.items.last().map(|i| i.l1_distance).unwrap_or(T::nan())
    }
}

/// Strictly decreasing distances ending below [`SWEEP_FINAL_DISTANCE_LIMIT`].
pub fn sweep_verdict<T: Real>(distances: &[T]) -> SweepVerdict {
    let finite = distances.iter().all(|d| d.is_finite());
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let small = distances
        .last()
        .is_some_and(|&d| d < lit(SWEEP_FINAL_DISTANCE_LIMIT));
    if finite && decreasing && small {
        SweepVerdict::Converging
    } else {
        SweepVerdict::NotConverging
    }
}

/// Runs shells `(v_j, L_j) = (2ʲ v₀, L₀/2ʲ)`, `j = 0 … terms−1`, with `vL`
/// fixed by `κ_target = 2m vL/ħ²`, and compares each detection-time density
/// with the hard rule on the same time grid.
///
/// `psi0` must live on `[x_min, 0]` with spacing [`SweepSettings::required_dx`]
/// (or a divisor of it). Terms run in parallel.
pub fn hard_limit_sweep<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    kappa_target: T,
    settings: &SweepSettings<T>,
) -> Result<LimitSweepResult<T>> {
    settings.validate()?;
    if !(kappa_target > T::zero()) {
        return Err(invalid("kappa", "must be positive"));
    }
    let d0 = *psi0.domain();
    if d0.x_max() != T::zero() {
        return Err(invalid("psi0", "must be given on [x_min, 0]"));
    }
    let dx = d0.dx();
    let ratio = settings.required_dx() / dx;
    if (ratio - ratio.round()).abs() > lit(1e-6) || ratio.round() < T::one() {
        return Err(invalid(
            "dx",
            format!(
                "grid spacing must divide the thinnest shell into ≥ {MIN_SHELL_CELLS} cells (dx = {:e})",
                to_f64(settings.required_dx())
            ),
        ));
    }
    let c = settings.constants;
    let vl = kappa_target * c.kinetic_prefactor();
    let reference = settings.limit_boundary(kappa_target)?;

    let hard_cfg = PropagatorConfig::new(
        d0,
        c,
        PotentialSpec::free(),
        BoundarySpec::dirichlet(Side::Left),
        BoundarySpec::new(Side::Right, reference)?,
        settings.dt,
    )?;
    let hard = detection_distribution(&Propagator::new(hard_cfg)?.evolve(psi0, t_final, 0)?);
    let hard_density = hard.total_density_series();

    let items = (0..settings.terms)
        .into_par_iter()
        .map(|j| {
            let width = settings.width(j);
            let strength = vl / width;
            let spec = SoftDetectorSpec::new(width, strength, settings.back_boundary)?;
            let domain = SimulationDomain::with_spacing(d0.x_min(), width, dx)?;
            let cfg = SoftRunConfig::on_domain(domain, c, spec, settings.dt)?;
            let soft = soft_detection_distribution(psi0, t_final, &cfg)?;
            let l1 = soft
                .total_density_series()
                .iter()
                .zip(&hard_density)
                .fold(T::zero(), |a, (s, h)| a + (*s - *h).abs())
                * settings.dt;
            let kappa_eff = soft_kappa_eff(strength, width, &c, &settings.back_boundary)?;
            let mean = soft
                .position_marginal
                .as_ref()
                .and_then(|m| m.mean())
                .unwrap_or(T::nan());
            Ok(SweepItem {
                strength,
                width,
                vl: strength * width,
                l1_distance: l1,
                kappa_eff,
                kappa_constant: kappa_eff * c.hbar * c.hbar / (c.mass * strength * width),
                detected_mass: soft.detected(),
                mean_detection_position: mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let distances: Vec<T> = items.iter().map(|i| i.l1_distance).collect();
    let verdict = sweep_verdict(&distances);
    Ok(LimitSweepResult {
        items,
        kappa_target,
        back_boundary: settings.back_boundary,
        reference,
        reference_detected_mass: hard.detected(),
        verdict,
    })
}

/// A shell filling `[0, width]` with a large absorption strength.
#[derive(Debug, Clone)]
pub struct AllcockRun<T> {
    pub strength: T,
    pub distribution: DetectionDistribution<T>,
    /// Final state restricted to `[x_min, 0]`.
    pub interior: WaveFunction<T>,
}

/// Evolves `psi0` against a shell `−iv` covering `[0, width]` (Neumann far
/// end) and keeps the interior part of the final state.
pub fn allcock_case<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    strength: T,
    width: T,
    dt: T,
    constants: PhysicalConstants<T>,
) -> Result<AllcockRun<T>> {
    let d0 = *psi0.domain();
    let spec = SoftDetectorSpec::neumann(width, strength)?;
    let domain = SimulationDomain::with_spacing(d0.x_min(), width, d0.dx())?;
    let cfg = SoftRunConfig::on_domain(domain, constants, spec, dt)?;
    let rec = run_soft(psi0, t_final, &cfg)?;
    let origin = d0.origin_index();
    let interior = WaveFunction::new(
        d0,
        rec.final_state.values()[..=origin].to_vec(),
        rec.final_state.time(),
    )?;
    Ok(AllcockRun {
        strength,
        distribution: detection_distribution(&rec),
        interior,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllcockPoint<T> {
    pub strength: T,
    pub detected_mass: T,
    /// `‖ψ_int(t) − ψ_Dirichlet(t)‖` on `[x_min, 0]`.
    pub l2_to_dirichlet: T,
}

/// [`allcock_case`] for each strength, compared with a Dirichlet wall at `x = 0`.
pub fn allcock_series<T: Real>(
    psi0: &WaveFunction<T>,
    t_final: T,
    strengths: &[T],
    width: T,
    dt: T,
    constants: PhysicalConstants<T>,
) -> Result<Vec<AllcockPoint<T>>> {
    let d0 = *psi0.domain();
    let wall = PropagatorConfig::new(
        d0,
        constants,
        PotentialSpec::free(),
        BoundarySpec::dirichlet(Side::Left),
        BoundarySpec::dirichlet(Side::Right),
        dt,
    )?;
    let reference = Propagator::new(wall)?.apply(psi0, t_final)?;
    strengths
        .par_iter()
        .map(|&v| {
            let run = allcock_case(psi0, t_final, v, width, dt, constants)?;
            Ok(AllcockPoint {
                strength: v,
                detected_mass: run.distribution.detected(),
                l2_to_dirichlet: l2_distance(&run.interior, &reference)?,
            })
        })
        .collect()
}
