//! Time statistics of the probability flux.
//!
//! At a fixed position the flux `J(x, t)` is split pointwise into its
//! positive and negative parts `J₊ = max(J, 0)` and `J₋ = min(J, 0)`.
//! Normalised, each part is a probability density in t for passing through
//! `x` moving forward or backward:
//!
//! ```text
//! w±(x, t)  = J±(x, t) / ∫ J±(x, t) dt
//! ⟨t±(x)⟩   = ∫ t w±(x, t) dt
//! D t±(x)   = ∫ t² w±(x, t) dt − ⟨t±(x)⟩²
//! ```
//!
//! Durations are differences of mean passage times and their variances are
//! sums of the endpoint variances:
//!
//! | kind         | mean                    | variance              |
//! |--------------|-------------------------|-----------------------|
//! | Transmission | ⟨t₊(x_f)⟩ − ⟨t₊(x_i)⟩   | D t₊(x_f) + D t₊(x_i) |
//! | Tunnelling   | ⟨t₊(a)⟩ − ⟨t₊(0)⟩       | D t₊(a) + D t₊(0)     |
//! | Penetration  | ⟨t₊(x)⟩ − ⟨t₊(0)⟩       | D t₊(x) + D t₊(0)     |
//! | Return       | ⟨t₋(x)⟩ − ⟨t₊(x)⟩       | D t₋(x) + D t₊(x)     |
//! | Reflection   | ⟨t₋(x)⟩ − ⟨t₊(x)⟩       | D t₋(x) + D t₊(x)     |
//!
//! The reflection variance uses `D t₋ + D t₊`. An older printed form repeats
//! `D t₋(x_i)` twice; that reading is not implemented.

use crate::error::{Error, Result};
use crate::quadrature::TimeGrid;
use crate::scatter::{transmission_closed_form, BarrierSpec, PhysicalConstants};

/// Relative floor on `|∫J± dt|`, measured against `∫|J| dt` at the same x.
pub const NORM_FLOOR: f64 = 1e-6;

/// Endpoint `|J|` must be below this fraction of the peak `|J|`.
pub const ENDPOINT_FLUX_RATIO: f64 = 1e-6;

/// Negative variances within this fraction of `⟨t²⟩` are rounding noise.
pub const VARIANCE_SLACK: f64 = 1e-3;

/// Relative energy step of the phase-time difference stencil.
pub const PHASE_TIME_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Sampled flux at one position, with its positive and negative parts.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxSeries {
    pub x: f64,
    pub times: TimeGrid,
    pub j: Vec<f64>,
    pub j_plus: Vec<f64>,
    pub j_minus: Vec<f64>,
}

impl FluxSeries {
    pub fn part(&self, sign: Sign) -> &[f64] {
        match sign {
            Sign::Plus => &self.j_plus,
            Sign::Minus => &self.j_minus,
        }
    }

    /// `∫ |J| dt`.
    pub fn total_unsigned(&self) -> f64 {
        integrate(&self.times, &self.j, |_, j| j.abs())
    }
}

/// Splits `J` into its pointwise positive and negative parts.
pub fn split_flux(x: f64, times: TimeGrid, j: Vec<f64>) -> Result<FluxSeries> {
    if j.len() != times.n {
        return Err(Error::domain(format!(
            "flux has {} samples for a {}-node time grid",
            j.len(),
            times.n
        )));
    }
    let j_plus = j.iter().map(|&v| v.max(0.0)).collect();
    let j_minus = j.iter().map(|&v| v.min(0.0)).collect();
    Ok(FluxSeries {
        x,
        times,
        j,
        j_plus,
        j_minus,
    })
}

fn integrate(times: &TimeGrid, values: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    times
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(times.time(i), values[i]))
        .sum()
}

/// Zeroth, first and second moments of `J₊` or `J₋` in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeMoments {
    /// `∫ J± dt`; negative for `J₋`.
    pub norm: f64,
    /// `⟨t±⟩` in s.
    pub mean: f64,
    /// `D t±` in s².
    pub variance: f64,
    pub reliable: bool,
}

impl TimeMoments {
    pub fn require_reliable(&self, what: &'static str) -> Result<&Self> {
        if self.reliable {
            Ok(self)
        } else {
            Err(Error::UnreliableStatistic {
                what,
                norm: self.norm,
            })
        }
    }
}

/// Moments of `J₊` or `J₋` at the series position.
///
/// Fails with [`Error::WindowTooNarrow`] if the flux at either end of the
/// window is not negligible. A part whose integral falls below
/// [`NORM_FLOOR`] of `∫|J| dt` is returned with `reliable = false`; its mean
/// and variance are then zero or numerically meaningless.
pub fn time_moments(series: &FluxSeries, sign: Sign) -> Result<TimeMoments> {
    check_window(series)?;
    raw_moments(series, sign)
}

/// [`time_moments`] without the window check. On an under-resolved grid the
/// packet recurs inside the window and these moments are artefacts.
pub fn raw_moments(series: &FluxSeries, sign: Sign) -> Result<TimeMoments> {
    let part = series.part(sign);
    let norm = integrate(&series.times, part, |_, j| j);
    let total = series.total_unsigned();
    let reliable = total > 0.0 && norm.abs() >= NORM_FLOOR * total;
    if norm == 0.0 {
        return Ok(TimeMoments {
            norm,
            mean: 0.0,
            variance: 0.0,
            reliable: false,
        });
    }
    let mean = integrate(&series.times, part, |t, j| t * j) / norm;
    let second = integrate(&series.times, part, |t, j| t * t * j) / norm;
    let mut variance = second - mean * mean;
    if variance < 0.0 {
        if reliable && -variance > VARIANCE_SLACK * second.abs() {
            return Err(Error::numerical(format!(
                "negative variance {variance:.3e} s² at x = {} Å",
                series.x
            )));
        }
        variance = 0.0;
    }
    Ok(TimeMoments {
        norm,
        mean,
        variance,
        reliable,
    })
}

fn check_window(series: &FluxSeries) -> Result<()> {
    let peak = series.j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let first = series.j.first().copied().unwrap_or(0.0).abs();
    let last = series.j.last().copied().unwrap_or(0.0).abs();
    let ratio = first.max(last) / peak;
    if ratio >= ENDPOINT_FLUX_RATIO {
        return Err(Error::WindowTooNarrow { x: series.x, ratio });
    }
    Ok(())
}

/// The weights `w±(x, t) = J± / ∫J± dt` on the time grid.
pub fn passage_weights(series: &FluxSeries, sign: Sign) -> Vec<f64> {
    let part = series.part(sign);
    let norm = integrate(&series.times, part, |_, j| j);
    if norm == 0.0 {
        return vec![0.0; part.len()];
    }
    part.iter().map(|j| j / norm).collect()
}

/// Both passage-time distributions at one position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointMoments {
    pub x: f64,
    pub plus: TimeMoments,
    pub minus: TimeMoments,
}

impl EndpointMoments {
    pub fn from_series(series: &FluxSeries) -> Result<Self> {
        Ok(Self {
            x: series.x,
            plus: time_moments(series, Sign::Plus)?,
            minus: time_moments(series, Sign::Minus)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DurationKind {
    Transmission,
    Tunnelling,
    Penetration,
    Return,
    Reflection,
    /// Dwell time in `(x_i, x_f)`. Not composed from passage moments; see
    /// [`dwell_time_flux`] and [`dwell_time_density`].
    Dwell,
}

impl DurationKind {
    pub const ALL: [DurationKind; 6] = [
        DurationKind::Transmission,
        DurationKind::Tunnelling,
        DurationKind::Penetration,
        DurationKind::Return,
        DurationKind::Reflection,
        DurationKind::Dwell,
    ];
}

/// Mean and variance of one process duration between `x_i` and `x_f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DurationReport {
    pub kind: DurationKind,
    pub x_i: f64,
    pub x_f: f64,
    /// s
    pub mean: f64,
    /// s²
    pub variance: f64,
    pub reliable: bool,
}

/// Composes a duration from the passage-time moments at its endpoints.
///
/// Domains: transmission `x_i < 0`, `x_f > a`; tunnelling `(0, a)`;
/// penetration `x_i = 0 ≤ x_f ≤ a`; return `x_i = x_f ∈ [0, a]`;
/// reflection `x_i = x_f ≤ 0`. For return and reflection both arguments
/// must be the moments at the same point.
pub fn duration(
    kind: DurationKind,
    barrier: &BarrierSpec,
    initial: &EndpointMoments,
    fin: &EndpointMoments,
) -> Result<DurationReport> {
    let a = barrier.width();
    let (xi, xf) = (initial.x, fin.x);
    let ok = match kind {
        DurationKind::Transmission => xi < 0.0 && xf > a,
        DurationKind::Tunnelling => xi == 0.0 && xf == a,
        DurationKind::Penetration => xi == 0.0 && (0.0..=a).contains(&xf),
        DurationKind::Return => xi == xf && (0.0..=a).contains(&xi),
        DurationKind::Reflection => xi == xf && xi <= 0.0,
        DurationKind::Dwell => false,
    };
    if !ok {
        return Err(Error::domain(format!(
            "{kind:?} duration undefined for x_i = {xi} Å, x_f = {xf} Å, a = {a} Å"
        )));
    }
    let (exit, entry) = match kind {
        DurationKind::Transmission | DurationKind::Tunnelling | DurationKind::Penetration => {
            (&fin.plus, &initial.plus)
        }
        DurationKind::Return | DurationKind::Reflection => (&fin.minus, &initial.plus),
        DurationKind::Dwell => unreachable!(),
    };
    Ok(DurationReport {
        kind,
        x_i: xi,
        x_f: xf,
        mean: exit.mean - entry.mean,
        variance: exit.variance + entry.variance,
        reliable: exit.reliable && entry.reliable,
    })
}

/// Dwell time from the flux moments at the two ends of `(x_i, x_f)`:
/// `[∫t J(x_f) dt − ∫t J(x_i) dt] / ∫J_in(x_i) dt`.
pub fn dwell_time_flux(
    barrier: &BarrierSpec,
    at_initial: &FluxSeries,
    at_final: &FluxSeries,
    incident: &FluxSeries,
) -> Result<f64> {
    check_dwell_domain(barrier, at_initial.x, at_final.x)?;
    if incident.x != at_initial.x {
        return Err(Error::domain("incident flux must be sampled at x_i"));
    }
    let denom = incident_norm(incident)?;
    let out = integrate(&at_final.times, &at_final.j, |t, j| t * j);
    let inn = integrate(&at_initial.times, &at_initial.j, |t, j| t * j);
    Ok((out - inn) / denom)
}

/// Dwell time from the presence integral `∫dt ∫_{x_i}^{x_f} ρ dx`.
pub fn dwell_time_density(
    barrier: &BarrierSpec,
    x_f: f64,
    presence: f64,
    incident: &FluxSeries,
) -> Result<f64> {
    check_dwell_domain(barrier, incident.x, x_f)?;
    Ok(presence / incident_norm(incident)?)
}

fn check_dwell_domain(barrier: &BarrierSpec, xi: f64, xf: f64) -> Result<()> {
    if xi < 0.0 && xf > barrier.width() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "dwell time needs x_i < 0 < a < x_f, got ({xi}, {xf}) with a = {}",
            barrier.width()
        )))
    }
}

fn incident_norm(incident: &FluxSeries) -> Result<f64> {
    let n = integrate(&incident.times, &incident.j, |_, j| j);
    if n < NORM_FLOOR {
        return Err(Error::UnreliableStatistic {
            what: "incident flux",
            norm: n,
        });
    }
    Ok(n)
}

/// Stationary-phase transit time from `x_i ≤ 0` to `x_f ≥ a` at mean
/// wavenumber `k_bar`: `ħ d/dE [arg t(E) + k(E)(x_f − x_i)]`, by a central
/// difference in E.
pub fn phase_time(k_bar: f64, barrier: &BarrierSpec, x_i: f64, x_f: f64) -> Result<f64> {
    let c = PhysicalConstants::ELECTRON;
    if !(x_i <= 0.0 && x_f >= barrier.width()) {
        return Err(Error::domain(format!(
            "phase time needs x_i <= 0 and x_f >= a, got ({x_i}, {x_f})"
        )));
    }
    let e = c.energy(k_bar);
    let h = PHASE_TIME_STEP * e;
    if !barrier.is_transparent() && e + h >= barrier.v0() {
        return Err(Error::domain(format!(
            "Ē = {e} eV too close to V₀ = {} eV for the difference stencil",
            barrier.v0()
        )));
    }
    let (k_lo, k_hi) = (c.wavenumber(e - h), c.wavenumber(e + h));
    let t_lo = transmission_closed_form(k_lo, barrier)?;
    let t_hi = transmission_closed_form(k_hi, barrier)?;
    let d_arg = (t_hi / t_lo).arg();
    let d_path = (k_hi - k_lo) * (x_f - x_i);
    Ok(c.hbar() * (d_arg + d_path) / (2.0 * h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `N>`: probability on `(x, ∞)` carried in by `J₊`.
    Right,
    /// `N<`: probability on `(−∞, x)` carried in by `J₋`.
    Left,
}

/// Running `N>(t) = ∫_{t_min}^{t} J₊ dt'` or `N<(t) = −∫_{t_min}^{t} J₋ dt'`
/// on the time grid (cumulative trapezoid).
pub fn presence_n(series: &FluxSeries, side: Side) -> Vec<f64> {
    let (part, s) = match side {
        Side::Right => (&series.j_plus, 1.0),
        Side::Left => (&series.j_minus, -1.0),
    };
    let h = series.times.step;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(part.len());
    out.push(0.0);
    for w in part.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]) * s;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(-1.0, 1.0, n).unwrap()
    }

    fn series(j: impl Fn(f64) -> f64, n: usize) -> FluxSeries {
        let g = grid(n);
        let v = g.times().into_iter().map(j).collect();
        split_flux(0.0, g, v).unwrap()
    }

    #[test]
    fn split_reconstructs_flux() {
        let s = series(|t| (7.0 * t).sin() * (-t * t * 30.0).exp(), 401);
        for i in 0..s.j.len() {
            assert_eq!(s.j_plus[i] + s.j_minus[i], s.j[i]);
            assert!(s.j_plus[i] >= 0.0 && s.j_minus[i] <= 0.0);
        }
        let pos = series(|t| (-t * t * 30.0).exp(), 401);
        assert!(pos.j_minus.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_pulse_mean_is_its_centre() {
        let s = series(|t| (-(t - 0.2f64).powi(2) * 200.0).exp(), 2001);
        let m = time_moments(&s, Sign::Plus).unwrap();
        assert_relative_eq!(m.mean, 0.2, epsilon = 1e-12);
        assert!(m.reliable);
        let minus = time_moments(&s, Sign::Minus).unwrap();
        assert!(!minus.reliable);
        assert!(minus.require_reliable("J₋").is_err());
    }

    #[test]
    fn rectangular_pulse_variance() {
        // Width 0.5 on a grid that hits the edges exactly.
        let s = series(|t| if (-0.25..=0.25).contains(&t) { 1.0 } else { 0.0 }, 8001);
        let m = time_moments(&s, Sign::Plus).unwrap();
        assert!(m.mean.abs() < 1e-12);
        assert_relative_eq!(m.variance, 0.25 / 12.0, max_relative = 2e-3);
    }

    #[test]
    fn weights_are_normalised() {
        let s = series(|t| (9.0 * t).sin() * (-t * t * 20.0).exp(), 1001);
        for sign in [Sign::Plus, Sign::Minus] {
            let w = passage_weights(&s, sign);
            let total = integrate(&s.times, &w, |_, v| v);
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn window_check() {
        let s = series(|t| (-t * t * 2.0).exp(), 401);
        assert!(matches!(time_moments(&s, Sign::Plus), Err(Error::WindowTooNarrow { .. })));
    }

    fn endpoint(x: f64, plus: (f64, f64), minus: (f64, f64)) -> EndpointMoments {
        EndpointMoments {
            x,
            plus: TimeMoments {
                norm: 1.0,
                mean: plus.0,
                variance: plus.1,
                reliable: true,
            },
            minus: TimeMoments {
                norm: -0.5,
                mean: minus.0,
                variance: minus.1,
                reliable: true,
            },
        }
    }

    #[test]
    fn duration_composition() {
        let b = BarrierSpec::new(10.0, 5.0).unwrap();
        let e0 = endpoint(0.0, (-2.0, 0.5), (3.0, 0.7));
        let ea = endpoint(5.0, (1.0, 0.25), (0.0, 0.0));
        let tun = duration(DurationKind::Tunnelling, &b, &e0, &ea).unwrap();
        assert_eq!(tun.mean, 3.0);
        assert_eq!(tun.variance, 0.75);
        let pen0 = duration(DurationKind::Penetration, &b, &e0, &e0).unwrap();
        assert_eq!(pen0.mean, 0.0);
        let refl = duration(DurationKind::Reflection, &b, &e0, &e0).unwrap();
        assert_eq!(refl.mean, 5.0);
        assert_eq!(refl.variance, 1.2);
        let ret = duration(DurationKind::Return, &b, &e0, &e0).unwrap();
        assert_eq!(ret, DurationReport { kind: DurationKind::Return, ..refl });

        let zero = endpoint(0.0, (0.0, 0.0), (0.0, 0.0));
        assert_eq!(duration(DurationKind::Penetration, &b, &zero, &zero).unwrap().variance, 0.0);
    }

    #[test]
    fn duration_domains() {
        let b = BarrierSpec::new(10.0, 5.0).unwrap();
        let at = |x| endpoint(x, (0.0, 0.0), (0.0, 0.0));
        let bad = [
            (DurationKind::Transmission, at(0.0), at(6.0)),
            (DurationKind::Transmission, at(-1.0), at(5.0)),
            (DurationKind::Tunnelling, at(0.0), at(4.0)),
            (DurationKind::Penetration, at(0.0), at(6.0)),
            (DurationKind::Penetration, at(1.0), at(2.0)),
            (DurationKind::Return, at(1.0), at(2.0)),
            (DurationKind::Return, at(6.0), at(6.0)),
            (DurationKind::Reflection, at(1.0), at(1.0)),
        ];
        for (kind, i, f) in bad {
            assert!(matches!(duration(kind, &b, &i, &f), Err(Error::Domain(_))), "{kind:?}");
        }
        assert!(duration(DurationKind::Transmission, &b, &at(-1.0), &at(6.0)).is_ok());
        assert!(duration(DurationKind::Reflection, &b, &at(-2.0), &at(-2.0)).is_ok());
    }

    #[test]
    fn unreliable_endpoint_propagates() {
        let b = BarrierSpec::new(10.0, 5.0).unwrap();
        let mut e = endpoint(2.0, (1.0, 0.0), (2.0, 0.0));
        e.minus.reliable = false;
        let r = duration(DurationKind::Return, &b, &e, &e).unwrap();
        assert!(!r.reliable);
    }

    #[test]
    fn presence_counts_are_monotone() {
        let s = series(|t| (5.0 * t).cos() * (-t * t * 10.0).exp(), 2001);
        let right = presence_n(&s, Side::Right);
        let left = presence_n(&s, Side::Left);
        assert_eq!(right[0], 0.0);
        assert_eq!(left[0], 0.0);
        assert!(right.windows(2).all(|w| w[1] >= w[0]));
        assert!(left.windows(2).all(|w| w[1] >= w[0]));
        // dN>/dt ≈ J₊
        let h = s.times.step;
        for i in (100..1900).step_by(97) {
            let d = (right[i + 1] - right[i - 1]) / (2.0 * h);
            assert!((d - s.j_plus[i]).abs() < 1e-3, "{d} vs {}", s.j_plus[i]);
        }
    }

    #[test]
    fn phase_time_opaque_and_free_limits() {
        let c = PhysicalConstants::ELECTRON;
        let k = c.wavenumber(5.0);
        let kappa = k;
        let asymptote = c.hbar() / (c.hbar2_over_2m() * k * kappa);
        assert_relative_eq!(asymptote, 1.3164e-16, max_relative = 1e-4);
        let b10 = BarrierSpec::new(10.0, 10.0).unwrap();
        let b5 = BarrierSpec::new(10.0, 5.0).unwrap();
        let p10 = phase_time(k, &b10, 0.0, 10.0).unwrap();
        let p5 = phase_time(k, &b5, 0.0, 5.0).unwrap();
        assert_relative_eq!(p10, asymptote, max_relative = 1e-3);
        assert!((p5 - p10).abs() / p10 < 0.02);

        let free = BarrierSpec::transparent(5.0).unwrap();
        assert_relative_eq!(phase_time(k, &free, 0.0, 5.0).unwrap(), 5.0 / c.velocity(k), max_relative = 1e-9);
    }

    #[test]
    fn phase_time_domain_errors() {
        let b = BarrierSpec::new(10.0, 5.0).unwrap();
        let c = PhysicalConstants::ELECTRON;
        let k_top = c.wavenumber(10.0 * (1.0 - 1e-6));
        assert!(matches!(phase_time(k_top, &b, 0.0, 5.0), Err(Error::Domain(_))));
        assert!(phase_time(1.0, &b, 1.0, 5.0).is_err());
    }
}
