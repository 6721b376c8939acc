//! Gaussian wave packets built as k-superpositions of stationary states.
//!
//! The spectral weight is `G(k) = C exp[-(k − k̄)²/(2Δk)²]`. Note the `(2Δk)²`:
//! `|G|²` is then a normal density in k with standard deviation `Δk`, and `G`
//! itself has standard deviation `√2 Δk`. The k support spans five standard
//! deviations of `G` on either side, `k̄ ± 5√2 Δk`, where `G` has dropped to
//! `e^{-12.5} ≈ 3.7e-6` of its peak.
//!
//! The packet is
//!
//! ```text
//! Ψ(x, t) = Σ_j w_j G(k_j) ψ_{k_j}(x) e^{-i E_j t/ħ}
//! ```
//!
//! summed over a composite Gauss–Legendre grid, with `C` fixed on that same
//! grid so that the synthesized incident packet carries unit probability.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss_legendre, TimeGrid};
use crate::scatter::{scattering_amplitudes, stationary_field, BarrierSpec, PhysicalConstants, ScatteringAmplitudes};

const CONSTS: PhysicalConstants = PhysicalConstants::ELECTRON;

/// Lower bound of every k grid (Å⁻¹).
pub const K_FLOOR: f64 = 1e-6;
/// Gap kept below the barrier-top wavenumber (Å⁻¹).
pub const K_GUARD: f64 = 1e-6;
/// Half-width of the k support in units of `Δk`: five standard deviations
/// of `G`, whose standard deviation is `√2 Δk`.
pub const SUPPORT_HALF_WIDTH: f64 = 5.0 * std::f64::consts::SQRT_2;

/// What to do with spectral components at or above the barrier top.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OverBarrierPolicy {
    /// Drop them from the k support.
    #[default]
    Exclude,
    /// Refuse to build the grid.
    Error,
}

/// Spectral parameters of the incident Gaussian packet. The centroid is
/// fixed at `x₀ = 0`, `t₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacketSpec {
    k_bar: f64,
    dk: f64,
    policy: OverBarrierPolicy,
}

impl PacketSpec {
    pub fn new(k_bar: f64, dk: f64) -> Result<Self> {
        if !(k_bar.is_finite() && k_bar > 0.0) {
            return Err(Error::domain(format!("k̄ must be > 0, got {k_bar}")));
        }
        if !(dk.is_finite() && dk > 0.0) {
            return Err(Error::domain(format!("Δk must be > 0, got {dk}")));
        }
        Ok(Self {
            k_bar,
            dk,
            policy: OverBarrierPolicy::Exclude,
        })
    }

    /// Packet with mean kinetic energy `ebar` (eV), i.e. `k̄ = sqrt(Ē/(ħ²/2m))`.
    pub fn from_energy(ebar: f64, dk: f64) -> Result<Self> {
        if !(ebar.is_finite() && ebar > 0.0) {
            return Err(Error::domain(format!("Ē must be > 0, got {ebar}")));
        }
        Self::new(CONSTS.wavenumber(ebar), dk)
    }

    pub fn with_policy(mut self, policy: OverBarrierPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn x0(&self) -> f64 {
        0.0
    }

    pub fn t0(&self) -> f64 {
        0.0
    }

    pub fn policy(&self) -> OverBarrierPolicy {
        self.policy
    }

    pub fn mean_energy(&self) -> f64 {
        CONSTS.energy(self.k_bar)
    }

    pub fn mean_velocity(&self) -> f64 {
        CONSTS.velocity(self.k_bar)
    }

    /// Unnormalised profile `exp[-(k − k̄)²/(2Δk)²]`.
    pub fn profile(&self, k: f64) -> f64 {
        let d = (k - self.k_bar) / (2.0 * self.dk);
        (-d * d).exp()
    }

    /// k interval actually integrated over.
    pub fn support(&self, barrier: &BarrierSpec) -> Result<(f64, f64)> {
        let half = SUPPORT_HALF_WIDTH * self.dk;
        let lo = (self.k_bar - half).max(K_FLOOR);
        let mut hi = self.k_bar + half;
        if let Some(kc) = barrier.cutoff_wavenumber() {
            let top = kc - K_GUARD;
            if hi > top {
                match self.policy {
                    OverBarrierPolicy::Exclude => hi = top,
                    OverBarrierPolicy::Error => {
                        return Err(Error::OverBarrierComponent {
                            k: hi,
                            energy: CONSTS.energy(hi),
                            v0: barrier.v0(),
                        })
                    }
                }
            }
        }
        if !(hi > lo) {
            return Err(Error::domain(format!(
                "empty k support: packet k̄ = {} Å⁻¹ lies above the barrier top",
                self.k_bar
            )));
        }
        Ok((lo, hi))
    }
}

/// `c_norm · exp[-(k − k̄)²/(2Δk)²]`.
pub fn gaussian_weight(k: f64, packet: &PacketSpec, c_norm: f64) -> f64 {
    c_norm * packet.profile(k)
}

/// Analytic normalisation of the untruncated packet, `(2π)^{-3/4} Δk^{-1/2}`.
pub fn analytic_normalization(dk: f64) -> f64 {
    (std::f64::consts::TAU).powf(-0.75) / dk.sqrt()
}

/// Quadrature grid in k.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub c_norm: f64,
}

impl KGrid {
    pub fn build(barrier: &BarrierSpec, packet: &PacketSpec, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::domain("k grid needs at least one panel"));
        }
        let (lo, hi) = packet.support(barrier)?;
        let (nodes, weights) = composite_gauss_legendre(lo, hi, panels);
        let mut grid = Self {
            nodes,
            weights,
            c_norm: 0.0,
        };
        grid.c_norm = normalization(&grid, packet)?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fraction of the untruncated `|G|²` mass that lies outside the grid.
    pub fn truncated_mass(&self, packet: &PacketSpec) -> f64 {
        let kept: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&k, w)| w * packet.profile(k).powi(2))
            .sum();
        let full = (std::f64::consts::TAU).sqrt() * packet.dk();
        (1.0 - kept / full).max(0.0)
    }
}

/// `C` such that `2π Σ_j w_j |G(k_j)|² = 1` on the grid.
pub fn normalization(grid: &KGrid, packet: &PacketSpec) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::domain("cannot normalise over an empty k grid"));
    }
    let mass: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&k, w)| w * packet.profile(k).powi(2))
        .sum();
    if !(mass > 0.0) {
        return Err(Error::numerical("packet has no spectral mass on the grid"));
    }
    Ok(1.0 / (std::f64::consts::TAU * mass).sqrt())
}

/// Ψ and its derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    /// ∂Ψ/∂x, per Å.
    pub dpsi_dx: Complex64,
    /// ∂Ψ/∂t, per s, summed from `-iE/ħ` times each term.
    pub dpsi_dt: Complex64,
    /// ∂²Ψ/∂x², from `ψ'' = (V − E)/(ħ²/2m) ψ` per term.
    pub d2psi_dx2: Complex64,
}

impl FieldSample {
    pub fn density(&self) -> f64 {
        self.psi.norm_sqr()
    }

    /// `J = Re[(iħ/m) Ψ ∂Ψ*/∂x]`, per s.
    pub fn flux(&self) -> f64 {
        flux_from(self.psi, self.dpsi_dx)
    }

    /// `∂ρ/∂t = 2 Re[Ψ* ∂Ψ/∂t]`.
    pub fn density_rate(&self) -> f64 {
        2.0 * (self.psi.conj() * self.dpsi_dt).re
    }

    /// `∂J/∂x = (ħ/m) Im[Ψ* ∂²Ψ/∂x²]`.
    pub fn flux_gradient(&self) -> f64 {
        CONSTS.hbar_over_m() * (self.psi.conj() * self.d2psi_dx2).im
    }
}

#[inline]
fn flux_from(psi: Complex64, dpsi: Complex64) -> f64 {
    (Complex64::new(0.0, CONSTS.hbar_over_m()) * psi * dpsi.conj()).re
}

/// A synthesized packet: grid, per-node amplitudes and spectral coefficients.
#[derive(Clone, Debug)]
pub struct PacketField {
    barrier: BarrierSpec,
    packet: PacketSpec,
    grid: KGrid,
    amps: Vec<ScatteringAmplitudes>,
    // w_j G(k_j)
    coeffs: Vec<f64>,
    omegas: Vec<f64>,
}

/// Which wave a time series is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    /// The full scattering solution.
    Scattered,
    /// The incident plane waves alone, `r := 0` and `e^{ikx}` everywhere.
    Incident,
}

impl PacketField {
    pub fn new(barrier: BarrierSpec, packet: PacketSpec, grid: KGrid) -> Result<Self> {
        let amps = grid
            .nodes
            .iter()
            .map(|&k| scattering_amplitudes(k, &barrier))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&k, w)| w * gaussian_weight(k, &packet, grid.c_norm))
            .collect();
        let omegas = grid.nodes.iter().map(|&k| CONSTS.angular_frequency(k)).collect();
        Ok(Self {
            barrier,
            packet,
            grid,
            amps,
            coeffs,
            omegas,
        })
    }

    pub fn build(barrier: BarrierSpec, packet: PacketSpec, panels: usize) -> Result<Self> {
        let grid = KGrid::build(&barrier, &packet, panels)?;
        Self::new(barrier, packet, grid)
    }

    pub fn barrier(&self) -> &BarrierSpec {
        &self.barrier
    }

    pub fn packet(&self) -> &PacketSpec {
        &self.packet
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[ScatteringAmplitudes] {
        &self.amps
    }

    pub fn evaluate_field(&self, x: f64, t: f64) -> FieldSample {
        let v_minus = self.barrier.potential(x);
        let mut s = FieldSample {
            psi: Complex64::default(),
            dpsi_dx: Complex64::default(),
            dpsi_dt: Complex64::default(),
            d2psi_dx2: Complex64::default(),
        };
        for ((amp, &c), &w) in self.amps.iter().zip(&self.coeffs).zip(&self.omegas) {
            let (psi, dpsi) = stationary_field(x, amp);
            let term = c * Complex64::from_polar(1.0, -w * t);
            let energy = CONSTS.energy(amp.k);
            let p = term * psi;
            s.psi += p;
            s.dpsi_dx += term * dpsi;
            s.dpsi_dt += Complex64::new(0.0, -w) * p;
            s.d2psi_dx2 += p * ((v_minus - energy) / CONSTS.hbar2_over_2m());
        }
        s
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.evaluate_field(x, t).density()
    }

    pub fn flux(&self, x: f64, t: f64) -> f64 {
        self.evaluate_field(x, t).flux()
    }

    /// Spectral transmission probability `2π Σ w |G|² |t|²`.
    pub fn transmission_probability(&self) -> f64 {
        std::f64::consts::TAU
            * self
                .amps
                .iter()
                .zip(&self.grid.weights)
                .map(|(a, w)| w * (self.grid.c_norm * self.packet.profile(a.k)).powi(2) * a.t.norm_sqr())
                .sum::<f64>()
    }

    fn spatial_columns(&self, x: f64, wave: Wave) -> (Vec<Complex64>, Vec<Complex64>) {
        self.amps
            .iter()
            .zip(&self.coeffs)
            .map(|(amp, &c)| {
                let (psi, dpsi) = match wave {
                    Wave::Scattered => stationary_field(x, amp),
                    Wave::Incident => {
                        let e = Complex64::from_polar(1.0, amp.k * x);
                        (e, Complex64::new(0.0, amp.k) * e)
                    }
                };
                (c * psi, c * dpsi)
            })
            .unzip()
    }

    /// J(x, t) on the time grid for each x, as `[x][t]`.
    pub fn flux_table(&self, xs: &[f64], times: &TimeGrid, wave: Wave) -> Vec<Vec<f64>> {
        let cols: Vec<_> = xs.iter().map(|&x| self.spatial_columns(x, wave)).collect();
        let by_time: Vec<Vec<f64>> = (0..times.n)
            .into_par_iter()
            .map_init(
                || vec![Complex64::default(); self.omegas.len()],
                |phases, i| {
                    self.fill_phases(times.time(i), phases);
                    cols.iter()
                        .map(|(a, b)| {
                            let (psi, dpsi) = dot2(phases, a, b);
                            flux_from(psi, dpsi)
                        })
                        .collect()
                },
            )
            .collect();
        (0..xs.len())
            .map(|ix| by_time.iter().map(|row| row[ix]).collect())
            .collect()
    }

    /// `∫dt ∫dx ρ` with the given spatial quadrature, on the time grid.
    pub fn presence_integral(&self, xs: &[f64], x_weights: &[f64], times: &TimeGrid) -> f64 {
        assert_eq!(xs.len(), x_weights.len());
        let cols: Vec<Vec<Complex64>> = xs
            .iter()
            .map(|&x| self.spatial_columns(x, Wave::Scattered).0)
            .collect();
        let per_time: Vec<f64> = (0..times.n)
            .into_par_iter()
            .map_init(
                || vec![Complex64::default(); self.omegas.len()],
                |phases, i| {
                    self.fill_phases(times.time(i), phases);
                    cols.iter()
                        .zip(x_weights)
                        .map(|(a, wx)| wx * dot(phases, a).norm_sqr())
                        .sum::<f64>()
                },
            )
            .collect();
        per_time.iter().zip(times.weights()).map(|(v, w)| v * w).sum()
    }

    fn fill_phases(&self, t: f64, out: &mut [Complex64]) {
        for (p, &w) in out.iter_mut().zip(&self.omegas) {
            let (s, c) = (-w * t).sin_cos();
            *p = Complex64::new(c, s);
        }
    }
}

#[inline]
fn dot(phases: &[Complex64], a: &[Complex64]) -> Complex64 {
    phases.iter().zip(a).map(|(p, x)| p * x).sum()
}

#[inline]
fn dot2(phases: &[Complex64], a: &[Complex64], b: &[Complex64]) -> (Complex64, Complex64) {
    let mut sa = Complex64::default();
    let mut sb = Complex64::default();
    for ((p, x), y) in phases.iter().zip(a).zip(b) {
        sa += p * x;
        sb += p * y;
    }
    (sa, sb)
}
