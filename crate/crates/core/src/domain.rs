//! Grids, boundary conditions, potentials and physical constants.
//!
//! The detecting surface sits at `x = 0`. The region `[x_min, 0]` is the
//! particle's domain; a soft detector extends the grid to `[x_min, L]`.

use crate::error::{invalid, Result};
use crate::scalar::{from_usize, lit, Real, C};

/// Reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    pub hbar: T,
    pub mass: T,
}

impl<T: Real> PhysicalConstants<T> {
    pub fn new(hbar: T, mass: T) -> Result<Self> {
        if !(hbar > T::zero()) || !hbar.is_finite() {
            return Err(invalid("hbar", "must be positive and finite"));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(invalid("mass", "must be positive and finite"));
        }
        Ok(Self { hbar, mass })
    }

    /// `ħ = m = 1`.
    pub fn natural() -> Self {
        Self {
            hbar: T::one(),
            mass: T::one(),
        }
    }

    /// `ħ²/2m`, the coefficient of `-∂²ₓ` in the Hamiltonian.
    pub fn kinetic_prefactor(&self) -> T {
        self.hbar * self.hbar / (lit::<T>(2.0) * self.mass)
    }

    /// Group velocity `ħk/m` of wave number `k`.
    pub fn velocity(&self, k: T) -> T {
        self.hbar * k / self.mass
    }

    /// Energy `ħ²k²/2m` of wave number `k`.
    pub fn energy(&self, k: T) -> T {
        self.kinetic_prefactor() * k * k
    }
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self::natural()
    }
}

/// Uniform grid on `[x_min, x_max]` with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationDomain<T> {
    x_min: T,
    x_max: T,
    n_cells: usize,
}

impl<T: Real> SimulationDomain<T> {
    pub fn new(x_min: T, x_max: T, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(invalid("domain", "bounds must be finite"));
        }
        if !(x_min < T::zero()) {
            return Err(invalid("x_min", "must be negative"));
        }
        if x_max < T::zero() {
            return Err(invalid(
                "x_max",
                "must be 0 (hard detector) or a positive shell width",
            ));
        }
        if n_cells < 2 {
            return Err(invalid("n_cells", "need at least two cells"));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    /// Grid with spacing `dx` on which `x = 0` is a node.
    ///
    /// `x_min` is moved outward to the nearest multiple of `dx`; `x_max` must
    /// already be a multiple of `dx` (to one part in 10⁶).
    pub fn with_spacing(x_min: T, x_max: T, dx: T) -> Result<Self> {
        if !(dx > T::zero()) {
            return Err(invalid("dx", "must be positive"));
        }
        if !(x_min < T::zero()) {
            return Err(invalid("x_min", "must be negative"));
        }
        let right = x_max / dx;
        let n_right = right.round();
        if (right - n_right).abs() > lit(1e-6) {
            return Err(invalid("dx", "x_max must be an integer multiple of dx"));
        }
        let left = -x_min / dx;
        let n_left = if (left - left.round()).abs() < lit(1e-6) {
            left.round()
        } else {
            left.ceil()
        };
        let n_cells = (n_left + n_right)
            .to_usize()
            .ok_or_else(|| invalid("dx", "cell count overflow"))?;
        Self::new(-n_left * dx, n_right * dx, n_cells)
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / from_usize(self.n_cells)
    }

    pub fn x(&self, i: usize) -> T {
        self.x_min + from_usize::<T>(i) * self.dx()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<T> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_nodes()];
        w[0] = dx * lit(0.5);
        w[self.n_cells] = dx * lit(0.5);
        w
    }

    /// Index of the node closest to `x = 0`.
    pub fn origin_index(&self) -> usize {
        let i = (-self.x_min / self.dx()).round();
        i.to_usize().unwrap_or(0).min(self.n_cells)
    }

    /// Index of the last node at or left of `x`, clamped to a valid cell.
    pub fn cell_of(&self, x: T) -> usize {
        let s = ((x - self.x_min) / self.dx()).floor();
        match s.to_isize() {
            Some(i) if i <= 0 => 0,
            Some(i) => (i as usize).min(self.n_cells - 1),
            None => 0,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells
            && (self.x_min - other.x_min).abs() <= T::epsilon() * self.x_min.abs() * lit(4.0)
            && (self.x_max - other.x_max).abs()
                <= T::epsilon() * (self.x_max.abs() + self.x_min.abs()) * lit(4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Boundary condition in terms of the outward normal derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind<T> {
    /// `∂ψ/∂n = (ν + iκ) ψ`, `κ > 0`: the ideal detecting surface.
    AbsorbingRobin { kappa: T, nu: T },
    /// `∂ψ/∂n = c ψ` with real `c`; lossless.
    Robin { c: T },
    /// `∂ψ/∂n = 0`.
    Neumann,
    /// `ψ = 0`.
    Dirichlet,
}

impl<T: Real> BoundaryKind<T> {
    pub fn absorbing(kappa: T, nu: T) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(invalid("kappa", "absorbing boundary requires kappa > 0"));
        }
        if !nu.is_finite() {
            return Err(invalid("nu", "must be finite"));
        }
        Ok(Self::AbsorbingRobin { kappa, nu })
    }

    pub fn robin(c: T) -> Result<Self> {
        if !c.is_finite() {
            return Err(invalid("c", "must be finite"));
        }
        Ok(Self::Robin { c })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::AbsorbingRobin { kappa, nu } => Self::absorbing(kappa, nu).map(|_| ()),
            Self::Robin { c } => Self::robin(c).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// `β` in `∂ψ/∂n = β ψ`; `None` for Dirichlet.
    pub fn log_derivative(&self) -> Option<C<T>> {
        match *self {
            Self::AbsorbingRobin { kappa, nu } => Some(C::new(nu, kappa)),
            Self::Robin { c } => Some(C::new(c, T::zero())),
            Self::Neumann => Some(C::new(T::zero(), T::zero())),
            Self::Dirichlet => None,
        }
    }

    /// Sensitivity wave number, zero for lossless conditions.
    pub fn kappa(&self) -> T {
        match *self {
            Self::AbsorbingRobin { kappa, .. } => kappa,
            _ => T::zero(),
        }
    }

    pub fn is_absorbing(&self) -> bool {
        matches!(self, Self::AbsorbingRobin { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AbsorbingRobin { .. } => "absorbing-robin",
            Self::Robin { .. } => "robin",
            Self::Neumann => "neumann",
            Self::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec<T> {
    pub kind: BoundaryKind<T>,
    pub side: Side,
}

impl<T: Real> BoundarySpec<T> {
    pub fn new(side: Side, kind: BoundaryKind<T>) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, side })
    }

    pub fn absorbing(side: Side, kappa: T, nu: T) -> Result<Self> {
        Self::new(side, BoundaryKind::absorbing(kappa, nu)?)
    }

    pub fn dirichlet(side: Side) -> Self {
        Self {
            kind: BoundaryKind::Dirichlet,
            side,
        }
    }

    pub fn neumann(side: Side) -> Self {
        Self {
            kind: BoundaryKind::Neumann,
            side,
        }
    }
}

/// Constant value on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    pub value: T,
}

/// One component (real or imaginary) of the potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Zero,
    /// Piecewise constant; overlapping segments add.
    Segments(Vec<Segment<T>>),
    /// One value per grid node.
    Nodal(Vec<T>),
}

impl<T: Real> Profile<T> {
    /// Values at the grid nodes. Segments are averaged over each node's dual
    /// cell, so the trapezoidal integral of a segment is exact.
    pub fn sample(&self, domain: &SimulationDomain<T>) -> Result<Vec<T>> {
        let n = domain.n_nodes();
        match self {
            Profile::Zero => Ok(vec![T::zero(); n]),
            Profile::Nodal(values) => {
                if values.len() != n {
                    return Err(invalid(
                        "potential",
                        format!("nodal table has {} entries, grid has {n}", values.len()),
                    ));
                }
                Ok(values.clone())
            }
            Profile::Segments(segments) => {
                let dx = domain.dx();
                let half = dx * lit(0.5);
                let mut out = vec![T::zero(); n];
                for (i, slot) in out.iter_mut().enumerate() {
                    let x = domain.x(i);
                    let lo = (x - half).max(domain.x_min());
                    let hi = (x + half).min(domain.x_max());
                    let width = hi - lo;
                    let mut acc = T::zero();
                    for s in segments {
                        let overlap = hi.min(s.end) - lo.max(s.start);
                        if overlap > T::zero() {
                            acc = acc + s.value * overlap;
                        }
                    }
                    *slot = acc / width;
                }
                Ok(out)
            }
        }
    }

    fn any_positive(&self) -> bool {
        match self {
            Profile::Zero => false,
            Profile::Segments(s) => s.iter().any(|s| s.value > T::zero()),
            Profile::Nodal(v) => v.iter().any(|&v| v > T::zero()),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Segments(s) => s
                .iter()
                .all(|s| s.value.is_finite() && s.start.is_finite() && s.end.is_finite()),
            Profile::Nodal(v) => v.iter().all(|v| v.is_finite()),
        }
    }
}

/// `V(x) = real(x) + i·imag(x)` with `imag ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    real: Profile<T>,
    imag: Profile<T>,
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(real: Profile<T>, imag: Profile<T>) -> Result<Self> {
        if !real.all_finite() || !imag.all_finite() {
            return Err(invalid("potential", "entries must be finite"));
        }
        if imag.any_positive() {
            return Err(invalid(
                "potential.imag",
                "imaginary part must be ≤ 0 (a positive value would create probability)",
            ));
        }
        if let Profile::Segments(s) = &imag {
            if s.iter()
                .any(|s| s.value != T::zero() && s.start < T::zero())
            {
                return Err(invalid(
                    "potential.imag",
                    "imaginary part must vanish inside the particle domain x < 0",
                ));
            }
        }
        Ok(Self { real, imag })
    }

    pub fn free() -> Self {
        Self {
            real: Profile::Zero,
            imag: Profile::Zero,
        }
    }

    pub fn real_only(real: Profile<T>) -> Result<Self> {
        Self::new(real, Profile::Zero)
    }

    /// Detector shell: `-i·strength` on `[0, width]`.
    pub fn shell(strength: T, width: T) -> Result<Self> {
        Self::free().with_shell(strength, width)
    }

    pub fn with_shell(self, strength: T, width: T) -> Result<Self> {
        if strength < T::zero() || !(width > T::zero()) {
            return Err(invalid("soft", "shell needs strength ≥ 0 and width > 0"));
        }
        let imag = if strength == T::zero() {
            Profile::Zero
        } else {
            Profile::Segments(vec![Segment {
                start: T::zero(),
                end: width,
                value: -strength,
            }])
        };
        Self::new(self.real, imag)
    }

    pub fn real(&self) -> &Profile<T> {
        &self.real
    }

    pub fn imag(&self) -> &Profile<T> {
        &self.imag
    }

    pub fn has_absorption(&self) -> bool {
        !matches!(self.imag, Profile::Zero)
    }

    /// Nodal complex potential on `domain`.
    pub fn sample(&self, domain: &SimulationDomain<T>) -> Result<Vec<C<T>>> {
        let re = self.real.sample(domain)?;
        let im = self.imag.sample(domain)?;
        for (i, &v) in im.iter().enumerate() {
            if v > T::zero() {
                return Err(invalid("potential.imag", "imaginary part must be ≤ 0"));
            }
            // The interface node's dual cell straddles x = 0; allow it.
            if v != T::zero() && domain.x(i) < -domain.dx() * lit(0.5 + 1e-9) {
                return Err(invalid(
                    "potential.imag",
                    "imaginary part must vanish inside the particle domain x < 0",
                ));
            }
        }
        Ok(re.into_iter().zip(im).map(|(r, i)| C::new(r, i)).collect())
    }
}

/// Soft detector: absorbing shell of width `width` and strength `strength`
/// (the `v` in `-iv`), backed by `back_boundary` at `x = width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftDetectorSpec<T> {
    pub width: T,
    pub strength: T,
    pub back_boundary: BoundaryKind<T>,
}

impl<T: Real> SoftDetectorSpec<T> {
    pub fn new(width: T, strength: T, back_boundary: BoundaryKind<T>) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(invalid("soft.width", "must be positive"));
        }
        if !(strength >= T::zero()) || !strength.is_finite() {
            return Err(invalid("soft.strength", "must be non-negative"));
        }
        back_boundary.validate()?;
        Ok(Self {
            width,
            strength,
            back_boundary,
        })
    }

    /// Neumann-backed shell.
    pub fn neumann(width: T, strength: T) -> Result<Self> {
        Self::new(width, strength, BoundaryKind::Neumann)
    }

    /// `κ = (2m/ħ²)·v·L`, the hard-detector parameter this shell approximates.
    pub fn nominal_kappa(&self, constants: &PhysicalConstants<T>) -> T {
        self.strength * self.width / constants.kinetic_prefactor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_reject_nonpositive() {
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 2.0).is_ok());
    }

    #[test]
    fn absorbing_rejects_nonpositive_kappa() {
        assert!(BoundaryKind::absorbing(0.0, 0.0).is_err());
        assert!(BoundaryKind::absorbing(-1.0, 0.3).is_err());
        assert!(BoundaryKind::absorbing(f64::NAN, 0.0).is_err());
        assert!(BoundarySpec::absorbing(Side::Right, 1.0, -2.0).is_ok());
    }

    #[test]
    fn potential_rejects_positive_imaginary_part() {
        let bad = Profile::Segments(vec![Segment {
            start: 0.0,
            end: 1.0,
            value: 0.5,
        }]);
        assert!(PotentialSpec::new(Profile::Zero, bad).is_err());
        assert!(PotentialSpec::new(Profile::Zero, Profile::Nodal(vec![0.0, 1e-300])).is_err());
        assert!(PotentialSpec::shell(2.0, 0.5).is_ok());
    }

    #[test]
    fn potential_rejects_absorption_inside_domain() {
        let leak = Profile::Segments(vec![Segment {
            start: -1.0,
            end: 1.0,
            value: -0.5,
        }]);
        assert!(PotentialSpec::new(Profile::Zero, leak).is_err());
    }

    #[test]
    fn grid_geometry() {
        let d = SimulationDomain::<f64>::new(-60.0, 0.0, 3000).unwrap();
        assert!((d.dx() - 0.02).abs() < 1e-15);
        assert_eq!(d.origin_index(), 3000);
        assert_eq!(d.n_nodes(), 3001);
        let w: f64 = d.weights().iter().sum();
        assert!((w - 60.0).abs() < 1e-10);
        assert!(SimulationDomain::new(1.0, 2.0, 10).is_err());
        assert!(SimulationDomain::<f64>::new(-1.0, 0.0, 1).is_err());
    }

    #[test]
    fn spacing_keeps_origin_on_grid() {
        let d = SimulationDomain::<f64>::with_spacing(-60.03, 0.8, 0.00625).unwrap();
        let i0 = d.origin_index();
        assert!(d.x(i0).abs() < 1e-10);
        assert!(d.x_min() <= -60.03);
        assert!((d.x_max() - 0.8).abs() < 1e-12);
        assert!(SimulationDomain::with_spacing(-1.0, 0.33, 0.1).is_err());
    }

    #[test]
    fn shell_sampling_integrates_exactly() {
        let d = SimulationDomain::with_spacing(-2.0, 0.5, 0.5 / 16.0).unwrap();
        let v = PotentialSpec::shell(3.0, 0.5).unwrap().sample(&d).unwrap();
        let w = d.weights();
        let integral: f64 = v.iter().zip(&w).map(|(v, w)| v.im * w).sum();
        assert!((integral + 1.5).abs() < 1e-12);
        let i0 = d.origin_index();
        assert_eq!(v[i0].im, -1.5);
        assert_eq!(v[i0 - 1].im, 0.0);
        assert_eq!(v[d.n_cells()].im, -3.0);
    }

    #[test]
    fn nominal_kappa_uses_two_m_over_hbar_squared() {
        let c = PhysicalConstants::<f64>::new(0.5, 2.0).unwrap();
        let s = SoftDetectorSpec::neumann(0.1, 3.0).unwrap();
        // 2m/ħ² = 16
        assert!((s.nominal_kappa(&c) - 16.0 * 0.3).abs() < 1e-12);
    }
}
