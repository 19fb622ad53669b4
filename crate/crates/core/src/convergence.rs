//! Grid-refinement studies for the hard-detector evolution.

use rayon::prelude::*;

use crate::domain::{PhysicalConstants, SimulationDomain};
use crate::error::{invalid, Result};
use crate::propagator::{Propagator, PropagatorConfig};
use crate::scalar::{lit, Real};
use crate::wave::{l2_distance, make_gaussian_packet, WaveFunction};

/// Injects `fine` onto the nodes of `coarse`; the spacings must divide.
pub fn restrict<T: Real>(
    fine: &WaveFunction<T>,
    coarse: &SimulationDomain<T>,
) -> Result<WaveFunction<T>> {
    let f = fine.domain();
    let ratio = coarse.dx() / f.dx();
    let r = ratio.round();
    if (ratio - r).abs() > lit(1e-6) || r < T::one() {
        return Err(invalid(
            "grid",
            "coarse spacing must be an integer multiple of the fine one",
        ));
    }
    let offset = (coarse.x_min() - f.x_min()) / f.dx();
    if (offset - offset.round()).abs() > lit(1e-6) || offset.round() < T::zero() {
        return Err(invalid(
            "grid",
            "coarse nodes must coincide with fine nodes",
        ));
    }
    let (r, o) = (
        r.to_usize().unwrap_or(1),
        offset.round().to_usize().unwrap_or(0),
    );
    let last = o + r * coarse.n_cells();
    if last >= f.n_nodes() {
        return Err(invalid("grid", "coarse domain extends beyond the fine one"));
    }
    let values = (0..coarse.n_nodes())
        .map(|i| fine.values()[o + r * i])
        .collect();
    WaveFunction::new(*coarse, values, fine.time())
}

/// `log(e_i/e_{i+1}) / log(h_i/h_{i+1})` for consecutive levels.
pub fn observed_orders<T: Real>(steps: &[T], errors: &[T]) -> Vec<T> {
    steps
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Which discretization parameters a study refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Both,
    Space,
    Time,
}

/// A Gaussian packet hitting an absorbing surface; smooth enough for
/// asymptotic rates to show.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBenchmark<T> {
    pub x_min: T,
    pub kappa: T,
    pub x0: T,
    pub sigma: T,
    pub k0: T,
    pub t_final: T,
    pub constants: PhysicalConstants<T>,
}

impl<T: Real> SmoothBenchmark<T> {
    /// `κ = 2`, packet at −10 with `σ = 1`, `k₀ = 2` on `[−20, 0]`, horizon 6.
    pub fn reference() -> Self {
        Self {
            x_min: lit(-20.0),
            kappa: lit(2.0),
            x0: lit(-10.0),
            sigma: T::one(),
            k0: lit(2.0),
            t_final: lit(6.0),
            constants: PhysicalConstants::natural(),
        }
    }

    pub fn run(&self, dx: T, dt: T) -> Result<WaveFunction<T>> {
        let d = SimulationDomain::with_spacing(self.x_min, T::zero(), dx)?;
        let cfg = PropagatorConfig::hard_detector(d, self.constants, self.kappa, T::zero(), dt)?;
        let psi0 = make_gaussian_packet(&d, self.x0, self.sigma, self.k0)?;
        Propagator::new(cfg)?.apply(&psi0, self.t_final)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLevel<T> {
    pub dx: T,
    pub dt: T,
    pub error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy<T> {
    pub refinement: Refinement,
    pub levels: Vec<ConvergenceLevel<T>>,
    pub orders: Vec<T>,
}

impl<T: Real> ConvergenceStudy<T> {
    pub fn min_order(&self) -> T {
        self.orders.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Halves the refined parameters `levels − 1` times starting from
/// `(dx0, dt0)` and measures the L2 error on each level's grid against a run
/// refined 4× beyond the finest level.
pub fn convergence_study<T: Real>(
    bench: &SmoothBenchmark<T>,
    dx0: T,
    dt0: T,
    levels: usize,
    refinement: Refinement,
) -> Result<ConvergenceStudy<T>> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two levels"));
    }
    let two = lit::<T>(2.0);
    let (space, time) = match refinement {
        Refinement::Both => (true, true),
        Refinement::Space => (true, false),
        Refinement::Time => (false, true),
    };
    let params: Vec<(T, T)> = (0..levels)
        .map(|l| {
            let f = two.powi(l as i32);
            (
                if space { dx0 / f } else { dx0 },
                if time { dt0 / f } else { dt0 },
            )
        })
        .collect();
    let (dx_f, dt_f) = params[levels - 1];
    let four = lit::<T>(4.0);
    let reference = bench.run(
        if space { dx_f / four } else { dx_f },
        if time { dt_f / four } else { dt_f },
    )?;
    let levels = params
        .par_iter()
        .map(|&(dx, dt)| {
            let psi = bench.run(dx, dt)?;
            let exact = restrict(&reference, psi.domain())?;
            Ok(ConvergenceLevel {
                dx,
                dt,
                error: l2_distance(&psi, &exact)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<T> = levels
        .iter()
        .map(|l| if space { l.dx } else { l.dt })
        .collect();
    let errors: Vec<T> = levels.iter().map(|l| l.error).collect();
    Ok(ConvergenceStudy {
        refinement,
        orders: observed_orders(&steps, &errors),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    #[test]
    fn restriction_picks_coinciding_nodes() {
        let fine = SimulationDomain::new(-4.0, 0.0, 8).unwrap();
        let coarse = SimulationDomain::new(-4.0, 0.0, 4).unwrap();
        let psi = WaveFunction::from_fn(fine, |x: f64| C::new(x, 0.0)).unwrap();
        let r = restrict(&psi, &coarse).unwrap();
        let xs: Vec<f64> = r.values().iter().map(|z| z.re).collect();
        assert_eq!(xs, vec![-4.0, -3.0, -2.0, -1.0, 0.0]);
        let odd = SimulationDomain::new(-4.0, 0.0, 3).unwrap();
        assert!(restrict(&psi, &odd).is_err());
    }

    #[test]
    fn orders_of_exact_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        for o in observed_orders(&h, &e) {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }
}
