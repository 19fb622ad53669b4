//! Wave functions on a [`SimulationDomain`] and the quadratures over them.

use crate::domain::{PhysicalConstants, SimulationDomain};
use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, to_f64, Real, C};

/// Tail mass above which a packet is rejected as not fitting the domain.
pub const PACKET_TAIL_LIMIT: f64 = 1e-8;

/// Complex amplitudes at every grid node at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T> {
    domain: SimulationDomain<T>,
    values: Vec<C<T>>,
    time: T,
}

impl<T: Real> WaveFunction<T> {
    pub fn new(domain: SimulationDomain<T>, values: Vec<C<T>>, time: T) -> Result<Self> {
        if values.len() != domain.n_nodes() {
            return Err(Error::GridMismatch);
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { time: to_f64(time) });
        }
        Ok(Self {
            domain,
            values,
            time,
        })
    }

    pub fn zeros(domain: SimulationDomain<T>) -> Self {
        Self {
            domain,
            values: vec![C::new(T::zero(), T::zero()); domain.n_nodes()],
            time: T::zero(),
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(domain: SimulationDomain<T>, f: impl Fn(T) -> C<T>) -> Result<Self> {
        let values = domain.nodes().into_iter().map(f).collect();
        Self::new(domain, values, T::zero())
    }

    pub fn domain(&self) -> &SimulationDomain<T> {
        &self.domain
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.values
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: T) {
        self.time = t;
    }

    pub fn into_values(self) -> Vec<C<T>> {
        self.values
    }

    /// Rescales to unit norm. A zero state is left unchanged.
    pub fn normalized(mut self) -> Self {
        let n = norm_squared(&self);
        if n > T::zero() {
            let s = T::one() / n.sqrt();
            for z in &mut self.values {
                *z = *z * s;
            }
        }
        self
    }

    pub fn scaled(&self, a: C<T>) -> Self {
        let mut out = self.clone();
        for z in &mut out.values {
            *z = *z * a;
        }
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C<T>, other: &Self, b: C<T>) -> Result<Self> {
        if !self.domain.same_grid(&other.domain) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * a + y * b)
            .collect();
        Ok(Self {
            domain: self.domain,
            values,
            time: self.time,
        })
    }

    /// `|ψ|²` at each node.
    pub fn density(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Quadrature of `|ψ|²` over the nodes with index in `range`,
    /// using the full-grid trapezoid weights.
    pub fn mass_in(&self, range: std::ops::Range<usize>) -> T {
        let w = self.domain.weights();
        range
            .map(|i| w[i] * self.values[i].norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }
}

/// `‖ψ‖²` by the trapezoidal rule.
pub fn norm_squared<T: Real>(psi: &WaveFunction<T>) -> T {
    psi.mass_in(0..psi.values.len())
}

/// `⟨a|b⟩`, antilinear in `a`.
pub fn inner_product<T: Real>(a: &WaveFunction<T>, b: &WaveFunction<T>) -> Result<C<T>> {
    if !a.domain.same_grid(&b.domain) {
        return Err(Error::GridMismatch);
    }
    let w = a.domain.weights();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .zip(&w)
        .map(|((x, y), &w)| x.conj() * y * w)
        .fold(C::new(T::zero(), T::zero()), |acc, z| acc + z))
}

/// `‖a − b‖`.
pub fn l2_distance<T: Real>(a: &WaveFunction<T>, b: &WaveFunction<T>) -> Result<T> {
    let d = a.combine(C::new(T::one(), T::zero()), b, C::new(-T::one(), T::zero()))?;
    Ok(norm_squared(&d).sqrt())
}

/// `⟨ψ| −iħ∂ₓ |ψ⟩` with centered differences (one-sided at the ends).
pub fn mean_momentum<T: Real>(psi: &WaveFunction<T>, constants: &PhysicalConstants<T>) -> T {
    let d = crate::observables::derivative(psi.values(), psi.domain.dx());
    let w = psi.domain.weights();
    let acc = psi
        .values
        .iter()
        .zip(&d)
        .zip(&w)
        .map(|((z, dz), &w)| (z.conj() * dz).im * w)
        .fold(T::zero(), |a, b| a + b);
    constants.hbar * acc
}

/// `∫ x |ψ|² dx`.
pub fn mean_position<T: Real>(psi: &WaveFunction<T>) -> T {
    let w = psi.domain.weights();
    psi.values
        .iter()
        .enumerate()
        .map(|(i, z)| psi.domain.x(i) * z.norm_sqr() * w[i])
        .fold(T::zero(), |a, b| a + b)
}

/// Probability that a normalized Gaussian packet centred at `x0` with
/// position spread `sigma` (so `|ψ|²` has standard deviation `sigma`) lies
/// beyond `edge` on the far side from `x0`.
pub fn gaussian_tail_mass(x0: f64, sigma: f64, edge: f64) -> f64 {
    let z = (edge - x0).abs() / (sigma * std::f64::consts::SQRT_2);
    0.5 * libm::erfc(z)
}

/// Normalized `exp(−(x−x0)²/4σ²)·exp(i k0 x)` on the grid.
///
/// The packet must sit inside `[x_min, 0]`; tail mass beyond either end
/// above [`PACKET_TAIL_LIMIT`] is an error.
pub fn make_gaussian_packet<T: Real>(
    domain: &SimulationDomain<T>,
    x0: T,
    sigma: T,
    k0: T,
) -> Result<WaveFunction<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be positive"));
    }
    if !k0.is_finite() {
        return Err(invalid("k0", "must be finite"));
    }
    let right_edge = domain.x_max().min(T::zero());
    if !(x0 > domain.x_min() && x0 < right_edge) {
        return Err(invalid("x0", "packet centre must lie in (x_min, 0)"));
    }
    let (x0f, sf) = (to_f64(x0), to_f64(sigma));
    let right = gaussian_tail_mass(x0f, sf, to_f64(right_edge));
    if right > PACKET_TAIL_LIMIT {
        return Err(Error::PacketTooWide {
            tail_mass: right,
            side: "right",
        });
    }
    let left = gaussian_tail_mass(x0f, sf, to_f64(domain.x_min()));
    if left > PACKET_TAIL_LIMIT {
        return Err(Error::PacketTooWide {
            tail_mass: left,
            side: "left",
        });
    }
    if left.max(right) > 1e-12 {
        log::warn!("packet tail mass {:e} exceeds 1e-12", left.max(right));
    }
    let four_var = lit::<T>(4.0) * sigma * sigma;
    let psi = WaveFunction::from_fn(*domain, |x| {
        if x > right_edge {
            return C::new(T::zero(), T::zero());
        }
        let env = (-(x - x0) * (x - x0) / four_var).exp();
        C::from_polar(env, k0 * x)
    })?;
    Ok(psi.normalized())
}
