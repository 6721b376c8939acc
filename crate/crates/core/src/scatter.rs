//! Stationary scattering states of a rectangular barrier.
//!
//! For a wavenumber `k` with kinetic energy `E = ħ²k²/2m` below the barrier
//! height, the stationary state is
//!
//! ```text
//! region I   (x < 0):   ψ = e^{ikx} + r e^{-ikx}
//! region II  (0 < x < a): ψ = α e^{-κx} + β e^{κx}
//! region III (x > a):   ψ = t e^{ikx}
//! ```
//!
//! with `κ = sqrt((V₀ − E)/(ħ²/2m))`. The four coefficients come from a direct
//! linear solve of the value/derivative matching conditions at `x = 0` and
//! `x = a`. The closed-form transmission amplitude is exposed separately
//! because the phase time is defined on it; the test suite uses it as the
//! independent check on the linear solve.
//!
//! Units throughout: eV, Å, s.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fixed electron constants in the eV/Å/s unit system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    hbar2_over_2m: f64,
}

impl PhysicalConstants {
    pub const ELECTRON: Self = Self {
        hbar: 6.582119569e-16,
        hbar2_over_2m: 3.8099821,
    };

    /// ħ in eV·s.
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// ħ²/2m in eV·Å².
    pub fn hbar2_over_2m(&self) -> f64 {
        self.hbar2_over_2m
    }

    /// ħ/m in Å²/s.
    pub fn hbar_over_m(&self) -> f64 {
        2.0 * self.hbar2_over_2m / self.hbar
    }

    /// Kinetic energy in eV of a plane wave with wavenumber `k` (Å⁻¹).
    pub fn energy(&self, k: f64) -> f64 {
        self.hbar2_over_2m * k * k
    }

    /// Wavenumber in Å⁻¹ for kinetic energy `e` (eV).
    pub fn wavenumber(&self, e: f64) -> f64 {
        (e / self.hbar2_over_2m).sqrt()
    }

    /// Group velocity ħk/m in Å/s.
    pub fn velocity(&self, k: f64) -> f64 {
        self.hbar_over_m() * k
    }

    /// Angular frequency E/ħ in s⁻¹.
    pub fn angular_frequency(&self, k: f64) -> f64 {
        self.energy(k) / self.hbar
    }
}

const CONSTS: PhysicalConstants = PhysicalConstants::ELECTRON;

/// Rectangular barrier of height `v0` (eV) on the interval `(0, a)` (Å).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierSpec {
    v0: f64,
    a: f64,
}

impl BarrierSpec {
    /// A barrier with `v0 > 0`. `a = 0` is accepted and scatters nothing.
    pub fn new(v0: f64, a: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::domain(format!("barrier height must be > 0, got {v0}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::domain(format!("barrier width must be >= 0, got {a}")));
        }
        Ok(Self { v0, a })
    }

    /// Zero potential over a nominal interval `(0, a)`: the free-particle
    /// reference configuration. Every `k > 0` is admissible.
    pub fn transparent(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::domain(format!("barrier width must be >= 0, got {a}")));
        }
        Ok(Self { v0: 0.0, a })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn width(&self) -> f64 {
        self.a
    }

    pub fn is_transparent(&self) -> bool {
        self.v0 == 0.0
    }

    /// Wavenumber of a component whose energy equals the barrier top, or
    /// `None` for a transparent barrier.
    pub fn cutoff_wavenumber(&self) -> Option<f64> {
        (!self.is_transparent()).then(|| CONSTS.wavenumber(self.v0))
    }

    pub fn region(&self, x: f64) -> Region {
        if x < 0.0 {
            Region::Incident
        } else if x <= self.a {
            Region::Barrier
        } else {
            Region::Transmitted
        }
    }

    /// Potential energy (eV) used with [`BarrierSpec::region`]'s convention.
    pub fn potential(&self, x: f64) -> f64 {
        match self.region(x) {
            Region::Barrier => self.v0,
            _ => 0.0,
        }
    }
}

/// Regions I, II, III. The barrier region is taken closed, `[0, a]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Incident,
    Barrier,
    Transmitted,
}

/// Coefficients of the stationary state at one wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringAmplitudes {
    pub k: f64,
    /// Decay constant inside the barrier. Zero for a transparent barrier.
    pub kappa: f64,
    pub r: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub t: Complex64,
    a: f64,
    // β e^{2κa}; keeps the growing exponential O(1) for opaque barriers.
    beta_scaled: Complex64,
    transparent: bool,
}

/// Decay constant κ (Å⁻¹) inside the barrier for a sub-barrier component.
pub fn inside_wavenumber(k: f64, barrier: &BarrierSpec) -> Result<f64> {
    let energy = CONSTS.energy(k);
    if energy >= barrier.v0 {
        return Err(Error::OverBarrierComponent {
            k,
            energy,
            v0: barrier.v0,
        });
    }
    Ok(((barrier.v0 - energy) / CONSTS.hbar2_over_2m).sqrt())
}

/// Solves the matching conditions for the stationary state at `k`.
pub fn scattering_amplitudes(k: f64, barrier: &BarrierSpec) -> Result<ScatteringAmplitudes> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(format!("wavenumber must be > 0, got {k}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if barrier.is_transparent() {
        return Ok(ScatteringAmplitudes {
            k,
            kappa: 0.0,
            r: zero,
            alpha: one,
            beta: zero,
            t: one,
            a: barrier.a,
            beta_scaled: zero,
            transparent: true,
        });
    }
    let kappa = inside_wavenumber(k, barrier)?;
    let a = barrier.a;
    let ik = Complex64::new(0.0, k);
    let decay = (-2.0 * kappa * a).exp();

    // Unknowns: r, α, b = β e^{2κa}, τ = t e^{ika} e^{κa}. The x = a rows are
    // multiplied through by e^{κa} so every entry and unknown is O(1).
    let m = [
        [one, -one, -decay * one, zero, -one],
        [-ik, kappa * one, -kappa * decay * one, zero, -ik],
        [zero, one, one, -one, zero],
        [zero, -kappa * one, kappa * one, -ik, zero],
    ];
    let [r, alpha, b, tau] = solve4(m).ok_or_else(|| {
        Error::numerical(format!("singular matching system at k = {k}, κ = {kappa}"))
    })?;

    let t = tau * (-kappa * a).exp() * Complex64::from_polar(1.0, -k * a);
    Ok(ScatteringAmplitudes {
        k,
        kappa,
        r,
        alpha,
        beta: b * decay,
        t,
        a,
        beta_scaled: b,
        transparent: false,
    })
}

/// Stationary wavefunction and its x-derivative at `x`.
pub fn stationary_field(x: f64, amps: &ScatteringAmplitudes) -> (Complex64, Complex64) {
    let k = amps.k;
    let ik = Complex64::new(0.0, k);
    if amps.transparent {
        let psi = Complex64::from_polar(1.0, k * x);
        return (psi, ik * psi);
    }
    if x < 0.0 {
        let fwd = Complex64::from_polar(1.0, k * x);
        let back = amps.r * fwd.conj();
        (fwd + back, ik * (fwd - back))
    } else if x <= amps.a {
        let kappa = amps.kappa;
        let dec = amps.alpha * (-kappa * x).exp();
        let grow = amps.beta_scaled * (kappa * (x - 2.0 * amps.a)).exp();
        (dec + grow, kappa * (grow - dec))
    } else {
        let psi = amps.t * Complex64::from_polar(1.0, k * x);
        (psi, ik * psi)
    }
}

/// Closed-form transmission amplitude `t` for `ψ_III = t e^{ikx}`.
pub fn transmission_closed_form(k: f64, barrier: &BarrierSpec) -> Result<Complex64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(format!("wavenumber must be > 0, got {k}")));
    }
    if barrier.is_transparent() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let kappa = inside_wavenumber(k, barrier)?;
    let a = barrier.a;
    let ka = kappa * a;
    // cosh(κa) + i (κ² − k²)/(2kκ) sinh(κa), scaled by e^{-κa} to stay finite.
    let half = 0.5 * (1.0 + (-2.0 * ka).exp());
    let half_sinh = 0.5 * (1.0 - (-2.0 * ka).exp());
    let denom = Complex64::new(half, (kappa * kappa - k * k) / (2.0 * k * kappa) * half_sinh);
    Ok((-ka).exp() * Complex64::from_polar(1.0, -k * a) / denom)
}

fn solve4(mut m: [[Complex64; 5]; 4]) -> Option<[Complex64; 4]> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for c in col..5 {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 4];
    for row in (0..4).rev() {
        let mut acc = m[row][4];
        for c in row + 1..4 {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
