//! Closed-form reference results: reflection off the ideal detecting
//! surface, off a soft absorbing slab, and free Gaussian evolution.

use crate::domain::{BoundaryKind, PhysicalConstants};
use crate::error::{invalid, Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real, C};

fn check_positive<T: Real>(field: &'static str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be positive"))
    }
}

/// `R_k = (k − κ)² / (k + κ)²`.
pub fn reflection_hard<T: Real>(k: T, kappa: T) -> Result<T> {
    check_positive("k", k)?;
    check_positive("kappa", kappa)?;
    let r = (k - kappa) / (k + kappa);
    Ok(r * r)
}

/// `A_k = 1 − R_k`.
pub fn absorption_hard<T: Real>(k: T, kappa: T) -> Result<T> {
    Ok(T::one() - reflection_hard(k, kappa)?)
}

/// Reflected amplitude and probability for `∂ψ/∂n = (ν + iκ)ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralReflection<T> {
    pub amplitude: C<T>,
    pub probability: T,
}

/// Matches `e^{ikx} + c·e^{−ikx}` to `ψ'(0) = (ν + iκ)ψ(0)`:
/// `c = (ik − ν − iκ) / (ik + ν + iκ)`.
pub fn reflection_coefficient_general<T: Real>(
    k: T,
    kappa: T,
    nu: T,
) -> Result<GeneralReflection<T>> {
    check_positive("k", k)?;
    check_positive("kappa", kappa)?;
    if !nu.is_finite() {
        return Err(invalid("nu", "must be finite"));
    }
    let amplitude = reflection_amplitude(k, C::new(nu, kappa));
    Ok(GeneralReflection {
        amplitude,
        probability: amplitude.norm_sqr(),
    })
}

/// Reflection amplitude of `e^{ikx}` off `ψ'(0) = Λ ψ(0)`.
pub fn reflection_amplitude<T: Real>(k: T, log_derivative: C<T>) -> C<T> {
    let ik = C::new(T::zero(), k);
    (ik - log_derivative) / (ik + log_derivative)
}

/// `tan(z)` that stays finite for large `|Im z|`.
fn tan_stable<T: Real>(z: C<T>) -> C<T> {
    let two = lit::<T>(2.0);
    let (a2, b2) = (z.re * two, z.im * two);
    if b2.abs() > lit(40.0) {
        let decay = (-b2.abs()).exp();
        C::new(two * a2.sin() * decay, b2.signum())
    } else {
        let den = a2.cos() + b2.cosh();
        C::new(a2.sin() / den, b2.sinh() / den)
    }
}

/// Complex wave number inside a slab with potential `−iv`:
/// `q = √(k² + 2imv/ħ²)`, principal branch (`Im q ≥ 0`).
pub fn slab_wave_number<T: Real>(k: T, v: T, constants: &PhysicalConstants<T>) -> C<T> {
    let q2 = C::new(k * k, v / constants.kinetic_prefactor());
    q2.sqrt()
}

/// `ψ'(0)/ψ(0)` for the solution inside `[0, L]` that satisfies `back` at `x = L`.
///
/// Only `q·tan(qL)` and `tan(qL)/q` enter, both even in `q`, so the
/// square-root branch does not affect the result.
pub fn slab_log_derivative<T: Real>(q: C<T>, width: T, back: &BoundaryKind<T>) -> C<T> {
    let t = tan_stable(q * width);
    match back.log_derivative() {
        Some(beta) => (q * t + beta) / (C::new(T::one(), T::zero()) - beta * t / q),
        None => -q / t,
    }
}

/// Soft-slab reflection: amplitude, probability and the matching residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabReflection<T> {
    pub amplitude: C<T>,
    pub probability: T,
    pub log_derivative: C<T>,
    pub residual: T,
}

/// Residual above which the slab solution is rejected.
pub const SLAB_RESIDUAL_LIMIT: f64 = 1e-10;

/// Reflection of `e^{ikx}` from an absorbing slab `−iv` on `[0, L]` with
/// boundary condition `back` at `x = L`.
pub fn reflection_soft_slab<T: Real>(
    k: T,
    v: T,
    width: T,
    constants: &PhysicalConstants<T>,
    back: &BoundaryKind<T>,
) -> Result<SlabReflection<T>> {
    check_positive("k", k)?;
    check_positive("v", v)?;
    check_positive("L", width)?;
    let q = slab_wave_number(k, v, constants);
    let lambda = slab_log_derivative(q, width, back);
    let r = reflection_amplitude(k, lambda);
    let one = C::new(T::one(), T::zero());
    let ik = C::new(T::zero(), k);

    // value/derivative continuity at x = 0
    let lhs = ik * (one - r);
    let rhs = lambda * (one + r);
    let scale = lhs.norm() + lambda.norm() * (one.norm() + r.norm()) + T::epsilon();
    let mut residual = (lhs - rhs).norm() / scale;

    // Carry the interface data back to x = L and check the wall condition,
    // as long as the slab is not so lossy that the growing mode swamps it.
    let ql = q * width;
    if ql.im.abs() < lit(3.0) {
        let two = one + one;
        let psi0 = two * ik / (ik + lambda);
        let dpsi0 = psi0 * lambda;
        let (c, s) = (ql.cos(), ql.sin());
        let psi_l = psi0 * c + dpsi0 * s / q;
        let dpsi_l = -psi0 * q * s + dpsi0 * c;
        let wall = match back.log_derivative() {
            Some(beta) => {
                (dpsi_l - beta * psi_l).norm()
                    / (dpsi_l.norm() + (beta * psi_l).norm() + psi0.norm())
            }
            None => psi_l.norm() / (psi0.norm() + dpsi0.norm() / q.norm()),
        };
        residual = residual.max(wall);
    }
    let probability = r.norm_sqr();
    if !(residual <= lit(SLAB_RESIDUAL_LIMIT)) || !probability.is_finite() {
        return Err(Error::BranchFailure {
            residual: to_f64(residual),
        });
    }
    Ok(SlabReflection {
        amplitude: r,
        probability,
        log_derivative: lambda,
        residual,
    })
}

/// `(k/κ, A_k)` for `k/κ = 0, step, 2·step, … ≤ ratio_max`; `A → 0` at `k = 0`.
pub fn absorption_curve<T: Real>(ratio_max: T, step: T) -> Result<Vec<(T, T)>> {
    check_positive("step", step)?;
    check_positive("ratio_max", ratio_max)?;
    let n = (ratio_max / step + lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let per_unit = (T::one() / step).round();
    let exact = (T::one() / step - per_unit).abs() < lit(1e-9);
    (0..=n)
        .map(|i| {
            let r = if exact {
                from_usize::<T>(i) / per_unit
            } else {
                from_usize::<T>(i) * step
            };
            let a = if i == 0 {
                T::zero()
            } else {
                absorption_hard(r, T::one())?
            };
            Ok((r, a))
        })
        .collect()
}

/// Reflection off a semi-infinite region with potential `−iv` (no back wall).
pub fn reflection_semi_infinite<T: Real>(
    k: T,
    v: T,
    constants: &PhysicalConstants<T>,
) -> Result<T> {
    check_positive("k", k)?;
    check_positive("v", v)?;
    let q = slab_wave_number(k, v, constants);
    Ok(reflection_amplitude(k, C::new(T::zero(), T::one()) * q).norm_sqr())
}

/// Free Gaussian on the full line, initially `(2πσ²)^{-1/4} e^{−(x−x0)²/4σ²} e^{ik0x}`.
pub fn free_gaussian<T: Real>(
    x: T,
    t: T,
    x0: T,
    sigma: T,
    k0: T,
    constants: &PhysicalConstants<T>,
) -> C<T> {
    let two = lit::<T>(2.0);
    let norm = (two * T::PI() * sigma * sigma).powf(lit(-0.25));
    let spread = C::new(
        T::one(),
        constants.hbar * t / (two * constants.mass * sigma * sigma),
    );
    let y = x - x0 - constants.velocity(k0) * t;
    let gauss = (-(C::new(y * y, T::zero())) / (spread * (lit::<T>(4.0) * sigma * sigma))).exp();
    let omega = constants.energy(k0) / constants.hbar;
    let phase = C::from_polar(T::one(), k0 * x - omega * t);
    gauss * phase * norm / spread.sqrt()
}

/// `∫ f(k) ρ(k) dk` with `ρ` the normal density `N(k0, σ_k²)`, by Simpson's
/// rule over `k0 ± 8σ_k`.
pub fn bandwidth_average<T: Real>(k0: T, sigma_k: T, f: impl Fn(T) -> T) -> T {
    let n = 1600usize;
    let lo = k0 - lit::<T>(8.0) * sigma_k;
    let h = lit::<T>(16.0) * sigma_k / from_usize(n);
    let norm = T::one() / (sigma_k * (two_pi::<T>()).sqrt());
    let mut acc = T::zero();
    for i in 0..=n {
        let k = lo + from_usize::<T>(i) * h;
        let z = (k - k0) / sigma_k;
        let w = if i == 0 || i == n {
            T::one()
        } else if i % 2 == 1 {
            lit(4.0)
        } else {
            lit(2.0)
        };
        acc = acc + w * f(k) * norm * (-(z * z) * lit(0.5)).exp();
    }
    acc * h / lit(3.0)
}

fn two_pi<T: Real>() -> T {
    lit::<T>(2.0) * T::PI()
}

/// Hard-surface reflection averaged over a packet's momentum distribution.
/// Components with `k ≤ 0` never reach the surface and count as reflected.
pub fn bandwidth_averaged_reflection<T: Real>(k0: T, sigma_k: T, kappa: T, nu: T) -> Result<T> {
    check_positive("sigma_k", sigma_k)?;
    check_positive("kappa", kappa)?;
    Ok(bandwidth_average(k0, sigma_k, |k| {
        if k <= T::zero() {
            T::one()
        } else {
            reflection_amplitude(k, C::new(nu, kappa)).norm_sqr()
        }
    }))
}

/// Number of wave numbers in the κ_eff fit.
pub const FIT_POINTS: usize = 64;

/// Least-squares fit of the surface reflection `|(ik − ν − iκ)/(ik + ν + iκ)|²`
/// (fixed `ν`) to `reflection(k)` over a log grid of [`FIT_POINTS`] wave
/// numbers spanning `[κ₀/4, 4κ₀]`.
pub fn fit_kappa_eff<T: Real>(
    kappa_nominal: T,
    nu: T,
    reflection: impl Fn(T) -> Result<T>,
) -> Result<T> {
    check_positive("kappa", kappa_nominal)?;
    let (lo, hi) = (
        (kappa_nominal / lit(4.0)).ln(),
        (kappa_nominal * lit(4.0)).ln(),
    );
    let ks: Vec<T> = (0..FIT_POINTS)
        .map(|j| (lo + (hi - lo) * from_usize::<T>(j) / from_usize::<T>(FIT_POINTS - 1)).exp())
        .collect();
    let target = ks
        .iter()
        .map(|&k| reflection(k))
        .collect::<Result<Vec<T>>>()?;
    let cost = |log_kappa: T| -> T {
        let kappa = log_kappa.exp();
        ks.iter()
            .zip(&target)
            .map(|(&k, &r)| {
                let e = reflection_amplitude(k, C::new(nu, kappa)).norm_sqr() - r;
                e * e
            })
            .fold(T::zero(), |a, b| a + b)
    };
    // coarse scan over two decades either side, then golden section
    let span = lit::<T>(100.0).ln();
    let (a0, b0) = (kappa_nominal.ln() - span, kappa_nominal.ln() + span);
    let scan = 400usize;
    let step = (b0 - a0) / from_usize(scan);
    let best = (0..=scan)
        .map(|i| (i, cost(a0 + from_usize::<T>(i) * step)))
        .fold((0usize, T::infinity()), |acc, (i, c)| {
            if c < acc.1 {
                (i, c)
            } else {
                acc
            }
        });
    let mut a = a0 + from_usize::<T>(best.0.saturating_sub(1)) * step;
    let mut b = a0 + from_usize::<T>((best.0 + 1).min(scan)) * step;
    let g = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    Ok(((a + b) / lit(2.0)).exp())
}

/// κ_eff of a soft slab `(v, L, back)` fitted around its nominal `2m·vL/ħ²`.
/// A Robin back wall `∂ψ/∂n = cψ` is fitted with `ν = c`.
pub fn soft_kappa_eff<T: Real>(
    v: T,
    width: T,
    constants: &PhysicalConstants<T>,
    back: &BoundaryKind<T>,
) -> Result<T> {
    let nominal = v * width / constants.kinetic_prefactor();
    let nu = match back {
        BoundaryKind::Robin { c } => *c,
        _ => T::zero(),
    };
    fit_kappa_eff(nominal, nu, |k| {
        reflection_soft_slab(k, v, width, constants, back).map(|s| s.probability)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hard_reflection_values() {
        assert_eq!(reflection_hard(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(reflection_hard(3.0, 1.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(absorption_hard(3.0, 1.0).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(absorption_hard(2.5, 2.5).unwrap(), 1.0);
        assert!(reflection_hard(1e-12, 1.0).unwrap() > 1.0 - 1e-11);
        assert!(reflection_hard(0.0, 1.0).is_err());
        assert!(reflection_hard(1.0, -1.0).is_err());
    }

    #[test]
    fn absorption_unimodal_on_scan() {
        let kappa = 1.3;
        let ks: Vec<f64> = (1..=1000)
            .map(|i| i as f64 * 5.0 * kappa / 1000.0)
            .collect();
        let a: Vec<f64> = ks
            .iter()
            .map(|&k| absorption_hard(k, kappa).unwrap())
            .collect();
        for w in ks.windows(2).zip(a.windows(2)) {
            let ((k0, k1), (a0, a1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            if k1 <= kappa {
                assert!(a1 > a0);
            } else if k0 >= kappa {
                assert!(a1 < a0);
            }
        }
    }

    #[test]
    fn general_reduces_to_hard() {
        let g = reflection_coefficient_general(1.0, 1.0, 0.0).unwrap();
        assert_eq!(g.amplitude.norm(), 0.0);
        for &k in &[0.1, 0.5, 2.0, 7.0] {
            let g = reflection_coefficient_general(k, 1.7f64, 0.0).unwrap();
            assert!(g.amplitude.im.abs() < 1e-14);
            assert_abs_diff_eq!(g.amplitude.re, (k - 1.7) / (k + 1.7), epsilon = 1e-14);
            assert_abs_diff_eq!(
                g.probability,
                reflection_hard(k, 1.7).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn nonzero_nu_prevents_full_absorption() {
        for &nu in &[0.5, -0.5, 2.0, -2.0] {
            let min_r = (1..2000)
                .map(|i| {
                    reflection_coefficient_general(i as f64 * 0.005, 1.0, nu)
                        .unwrap()
                        .probability
                })
                .fold(f64::INFINITY, f64::min);
            assert!(min_r > 0.0);
        }
    }

    #[test]
    fn lossless_cavity_reflects_everything() {
        let c = PhysicalConstants::<f64>::natural();
        for &k in &[0.3, 1.0, 2.5] {
            let r = reflection_soft_slab(k, 1e-9, 1.0, &c, &BoundaryKind::Neumann).unwrap();
            assert!((r.probability - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn slab_probability_bounds_and_huge_losses() {
        let c = PhysicalConstants::<f64>::natural();
        for &(v, l) in &[
            (1e-3, 0.1),
            (1.0, 1.0),
            (1e6, 1.0),
            (1e8, 1e-8),
            (5.0, 50.0),
        ] {
            for back in [
                BoundaryKind::Neumann,
                BoundaryKind::Dirichlet,
                BoundaryKind::Robin { c: 1.0 },
            ] {
                let r =
                    reflection_soft_slab(1.0, v, l, &c, &back).expect(&format!("{v} {l} {back:?}"));
                assert!((0.0..=1.0).contains(&r.probability), "{v} {l} {r:?}");
            }
        }
    }

    #[test]
    fn thick_slab_matches_semi_infinite_absorber() {
        let c = PhysicalConstants::<f64>::natural();
        let slab = reflection_soft_slab(1.0, 2.0, 60.0, &c, &BoundaryKind::Neumann).unwrap();
        let semi = reflection_semi_infinite(1.0, 2.0, &c).unwrap();
        assert_abs_diff_eq!(slab.probability, semi, epsilon = 1e-12);
    }

    #[test]
    fn hard_formula_scale_covariant() {
        for &lambda in &[0.1, 3.0, 17.0] {
            assert_abs_diff_eq!(
                reflection_hard(2.0 * lambda, 0.7 * lambda).unwrap(),
                reflection_hard(2.0, 0.7).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn free_gaussian_initial_and_motion() {
        let c = PhysicalConstants::new(1.0, 1.0).unwrap();
        let (x0, s, k0) = (-3.0, 0.8, 1.5);
        let n0 = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
        for &x in &[-5.0, -3.0, -1.2] {
            let z = free_gaussian(x, 0.0, x0, s, k0, &c);
            let expect = C::from_polar(n0 * (-(x - x0) * (x - x0) / (4.0 * s * s)).exp(), k0 * x);
            assert!((z - expect).norm() < 1e-15);
        }
        // ⟨x⟩ and norm at t = 4 by quadrature
        let (mut m0, mut m1) = (0.0, 0.0);
        let h = 0.005;
        for i in 0..=12000 {
            let x = -30.0 + i as f64 * h;
            let p = free_gaussian(x, 4.0, x0, s, k0, &c).norm_sqr() * h;
            m0 += p;
            m1 += x * p;
        }
        assert!((m0 - 1.0).abs() < 1e-10);
        assert!((m1 - (x0 + 1.5 * 4.0)).abs() < 1e-8);
    }

    #[test]
    fn free_gaussian_solves_schrodinger() {
        // finite-difference residual of iħψ_t + (ħ²/2m)ψ_xx at a few points
        let c = PhysicalConstants::new(0.7, 1.3).unwrap();
        let f = |x: f64, t: f64| free_gaussian(x, t, 0.0, 1.0, 2.0, &c);
        let (h, e) = (1e-3, 1e-4);
        for &(x, t) in &[(0.5, 0.3), (1.5, 1.0), (-0.5, 0.1)] {
            let dt = (f(x, t + e) - f(x, t - e)) / (2.0 * e);
            let dxx = (f(x + h, t) - f(x, t) * 2.0 + f(x - h, t)) / (h * h);
            let res = C::new(0.0, c.hbar) * dt + dxx * c.kinetic_prefactor();
            assert!(res.norm() < 1e-5, "{res}");
        }
    }

    #[test]
    fn bandwidth_average_of_constant_and_linear() {
        assert_abs_diff_eq!(bandwidth_average(2.0, 0.1, |_| 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bandwidth_average(2.0, 0.1, |k| k), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            bandwidth_average(0.0, 0.5, |k| k * k),
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fit_recovers_hard_kappa() {
        let k = fit_kappa_eff(1.0, 0.0, |k| reflection_hard(k, 1.37)).unwrap();
        assert_abs_diff_eq!(k, 1.37, epsilon = 1e-6);
    }

    #[test]
    fn thin_neumann_slab_behaves_like_hard_surface() {
        let c = PhysicalConstants::<f64>::new(0.5, 2.0).unwrap();
        let width = 1e-5;
        // nominal κ = 2m vL/ħ² = 1.5
        let v = 1.5 * c.kinetic_prefactor() / width;
        let k = soft_kappa_eff(v, width, &c, &BoundaryKind::Neumann).unwrap();
        assert!((k / 1.5 - 1.0).abs() < 1e-3, "{k}");
    }

    #[test]
    fn thin_robin_slab_matches_shifted_rule() {
        let c = PhysicalConstants::<f64>::natural();
        let width = 1e-5;
        let v = 2.0 * c.kinetic_prefactor() / width;
        let back = BoundaryKind::Robin { c: 1.0 };
        let k = soft_kappa_eff(v, width, &c, &back).unwrap();
        assert!((k / 2.0 - 1.0).abs() < 1e-3, "{k}");
        let slab = reflection_soft_slab(1.3, v, width, &c, &back).unwrap();
        let rule = reflection_coefficient_general(1.3, 2.0, 1.0).unwrap();
        assert!((slab.probability - rule.probability).abs() < 1e-3);
    }

    #[test]
    fn absorption_curve_rows() {
        let rows = absorption_curve(5.0, 0.01).unwrap();
        assert_eq!(rows.len(), 501);
        assert_eq!(rows[0], (0.0, 0.0));
        assert_eq!(rows[100].1, 1.0);
        assert_abs_diff_eq!(rows[300].1, 0.75, epsilon = 1e-12);
        assert!(rows[1].1 < 0.04);
    }
}
