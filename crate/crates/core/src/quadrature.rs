//! Grids and the refine-until-stable protocol.
//!
//! k-integrals use composite Gauss–Legendre panels, t- and x-integrals use
//! composite Simpson on uniform grids. [`refine_until_stable`] doubles the
//! k-panel, t-interval and x-interval counts together until every reported
//! duration stops moving and keeps its sign.

use crate::chronostats::{DurationKind, DurationReport};
use crate::error::{Error, Result};
use crate::packet::PacketSpec;
use crate::scatter::{BarrierSpec, PhysicalConstants};

/// Nodes per Gauss–Legendre panel in k.
pub const PANEL_ORDER: usize = 16;

/// Default half-width of the time window (s).
pub const DEFAULT_HALF_WINDOW: f64 = 1e-13;

/// Default relative tolerance on reported durations.
pub const DEFAULT_TOL: f64 = 1e-3;

pub const DEFAULT_MAX_LEVELS: usize = 8;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre order must be >= 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[lo, hi]` with `panels` equal panels.
pub fn composite_gauss_legendre(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (ref_nodes, ref_weights) = gauss_legendre(PANEL_ORDER);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (x, w) in ref_nodes.iter().zip(&ref_weights) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Composite Simpson weights for `intervals` uniform steps of width `step`.
///
/// An odd interval count closes with the 3/8 rule on the last three
/// intervals; a single interval falls back to the trapezoid.
pub fn simpson_weights(intervals: usize, step: f64) -> Vec<f64> {
    assert!(intervals >= 1);
    let mut w = vec![0.0; intervals + 1];
    if intervals == 1 {
        w[0] = 0.5 * step;
        w[1] = 0.5 * step;
        return w;
    }
    let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += step / 3.0;
        w[i + 1] += 4.0 * step / 3.0;
        w[i + 2] += step / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        let c = 3.0 * step / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

/// Uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TimeGridOverrides {
    /// Explicit `(t_min, t_max)` in seconds.
    pub window: Option<(f64, f64)>,
    /// Explicit node count.
    pub n: Option<usize>,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::Config(format!("invalid time window [{t_min}, {t_max}]")));
        }
        if n < 2 {
            return Err(Error::Config(format!("time grid needs >= 2 nodes, got {n}")));
        }
        Ok(Self {
            t_min,
            t_max,
            n,
            step: (t_max - t_min) / (n - 1) as f64,
        })
    }

    pub fn intervals(&self) -> usize {
        self.n - 1
    }

    pub fn window(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t_max
        } else {
            self.t_min + i as f64 * self.step
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        simpson_weights(self.intervals(), self.step)
    }

    /// Same window with `intervals` intervals.
    pub fn with_intervals(&self, intervals: usize) -> Self {
        Self {
            t_min: self.t_min,
            t_max: self.t_max,
            n: intervals + 1,
            step: self.window() / intervals as f64,
        }
    }
}

/// Temporal extension `1/(v̄ Δk)` of the packet, in seconds.
pub fn packet_extension(packet: &PacketSpec) -> f64 {
    1.0 / (PhysicalConstants::ELECTRON.velocity(packet.k_bar()) * packet.dk())
}

/// Builds the integration grid in t.
///
/// The default window is `[-1e-13, 1e-13]` s and the default step is at most
/// one fiftieth of the packet extension, with an even interval count.
pub fn build_time_grid(packet: &PacketSpec, overrides: TimeGridOverrides) -> Result<TimeGrid> {
    let extension = packet_extension(packet);
    let (t_min, t_max) = overrides
        .window
        .unwrap_or((-DEFAULT_HALF_WINDOW, DEFAULT_HALF_WINDOW));
    if !(t_max > t_min) {
        return Err(Error::Config(format!("invalid time window [{t_min}, {t_max}]")));
    }
    let window = t_max - t_min;
    if window < 10.0 * extension {
        return Err(Error::Config(format!(
            "time window {window:.3e} s is shorter than 10× the packet extension {extension:.3e} s"
        )));
    }
    let n = match overrides.n {
        Some(n) => n,
        None => {
            let mut intervals = (window / (extension / 50.0)).ceil() as usize;
            intervals += intervals % 2;
            intervals + 1
        }
    };
    TimeGrid::new(t_min, t_max, n)
}

/// Grid resolution. Each refinement level doubles every count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Resolution {
    /// Gauss–Legendre panels over the k support.
    pub k_panels: usize,
    /// Intervals of the time grid.
    pub t_intervals: usize,
    /// Simpson intervals per Å for spatial integrals.
    pub x_intervals_per_angstrom: usize,
}

impl Resolution {
    pub fn refined(&self, level: usize) -> Self {
        let f = 1usize << level;
        Self {
            k_panels: self.k_panels * f,
            t_intervals: self.t_intervals * f,
            x_intervals_per_angstrom: self.x_intervals_per_angstrom * f,
        }
    }

    pub fn k_nodes(&self) -> usize {
        self.k_panels * PANEL_ORDER
    }

    /// Starting resolution for a packet, barrier and x-range.
    ///
    /// The k panels are sized so that the fastest phase `k x − E t/ħ`
    /// accumulates at most four cycles per panel over the time grid.
    pub fn base(
        barrier: &BarrierSpec,
        packet: &PacketSpec,
        times: &TimeGrid,
        max_abs_x: f64,
    ) -> Result<Self> {
        let (lo, hi) = packet.support(barrier)?;
        let v_max = PhysicalConstants::ELECTRON.velocity(hi);
        let t_max = times.t_min.abs().max(times.t_max.abs());
        let phase_rate = max_abs_x + v_max * t_max;
        let cycles = (hi - lo) * phase_rate / std::f64::consts::TAU;
        let k_panels = ((cycles / 4.0).ceil() as usize).max(2);
        Ok(Self {
            k_panels,
            t_intervals: times.intervals(),
            x_intervals_per_angstrom: 10,
        })
    }

    /// Divides every count by `2^levels`, keeping the counts valid.
    pub fn coarsened(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        let t = (self.t_intervals / f).max(2);
        Self {
            k_panels: (self.k_panels / f).max(1),
            t_intervals: t + t % 2,
            x_intervals_per_angstrom: (self.x_intervals_per_angstrom / f).max(2),
        }
    }
}

/// Uniform positions over `[0, a]`, both endpoints included.
pub fn build_x_profile(barrier: &BarrierSpec, n_x: usize) -> Result<Vec<f64>> {
    if n_x < 2 {
        return Err(Error::domain(format!("profile needs n_x >= 2, got {n_x}")));
    }
    let a = barrier.width();
    let step = a / (n_x - 1) as f64;
    Ok((0..n_x)
        .map(|i| if i + 1 == n_x { a } else { i as f64 * step })
        .collect())
}

/// One evaluation of the refinement task.
#[derive(Clone, Debug)]
pub struct RefinementLevel {
    pub resolution: Resolution,
    /// `Err` only for failures a finer grid may cure.
    pub result: Result<Vec<DurationReport>>,
}

#[derive(Clone, Debug)]
pub struct RefinementReport {
    pub levels: Vec<RefinementLevel>,
    pub converged: bool,
    /// Largest relative change between the last two successful levels.
    pub final_rel_change: f64,
}

impl RefinementReport {
    /// Reports of the last successful level.
    pub fn last(&self) -> Option<&[DurationReport]> {
        self.levels
            .iter()
            .rev()
            .find_map(|l| l.result.as_ref().ok().map(Vec::as_slice))
    }

    pub fn first(&self) -> Option<&[DurationReport]> {
        self.levels.first()?.result.as_ref().ok().map(Vec::as_slice)
    }

    /// Index of the last level evaluated.
    pub fn final_level(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// Evaluates `task` at `base`, `base` refined once, twice, ... until two
/// consecutive levels agree.
///
/// Agreement means, for each duration kind separately, every reliable mean
/// changed by at most `tol` times the largest reliable magnitude of that
/// kind, and every mean above that noise level kept its sign. A `tol` of
/// zero or less can never be met.
pub fn refine_until_stable<F>(
    base: Resolution,
    tol: f64,
    max_levels: usize,
    mut task: F,
) -> Result<RefinementReport>
where
    F: FnMut(&Resolution) -> Result<Vec<DurationReport>>,
{
    if max_levels == 0 {
        return Err(Error::Config("max_levels must be >= 1".into()));
    }
    let mut levels: Vec<RefinementLevel> = Vec::new();
    let mut previous: Option<Vec<DurationReport>> = None;
    let mut final_rel_change = f64::INFINITY;
    for level in 0..max_levels {
        let resolution = base.refined(level);
        let result = match task(&resolution) {
            Ok(reports) => {
                if let Some(bad) = reports.iter().find(|r| !r.mean.is_finite() || !r.variance.is_finite()) {
                    return Err(Error::numerical(format!(
                        "non-finite {:?} duration at x = {} Å (level {level})",
                        bad.kind, bad.x_f
                    )));
                }
                Ok(reports)
            }
            Err(e) if e.is_resolution_limited() => Err(e),
            Err(e) => return Err(e),
        };
        let current = result.as_ref().ok().cloned();
        levels.push(RefinementLevel { resolution, result });
        if let (Some(prev), Some(cur)) = (&previous, &current) {
            let (change, signs_stable) = compare_levels(prev, cur, tol)?;
            final_rel_change = change;
            if tol > 0.0 && change <= tol && signs_stable {
                return Ok(RefinementReport {
                    levels,
                    converged: true,
                    final_rel_change,
                });
            }
        }
        previous = current;
    }
    Ok(RefinementReport {
        levels,
        converged: false,
        final_rel_change,
    })
}

fn compare_levels(prev: &[DurationReport], cur: &[DurationReport], tol: f64) -> Result<(f64, bool)> {
    if prev.len() != cur.len() {
        return Err(Error::numerical("refinement task changed its output length"));
    }
    let mut change: f64 = 0.0;
    let mut stable = true;
    for kind in DurationKind::ALL {
        let scale = cur
            .iter()
            .filter(|r| r.kind == kind && r.reliable)
            .map(|r| r.mean.abs())
            .fold(0.0, f64::max);
        for (p, c) in prev.iter().zip(cur) {
            if c.kind != kind || !(p.reliable && c.reliable) {
                continue;
            }
            let diff = (c.mean - p.mean).abs();
            if scale > 0.0 {
                change = change.max(diff / scale);
            } else if diff > 0.0 {
                change = f64::INFINITY;
            }
            if c.mean.abs() > tol.max(0.0) * scale && c.mean.signum() != p.mean.signum() {
                stable = false;
            }
        }
    }
    Ok((change, stable))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_low_orders() {
        let (x, w) = gauss_legendre(2);
        assert_relative_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert_relative_eq!(x[2], 0.6f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(PANEL_ORDER);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for deg in 0..2 * PANEL_ORDER {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn composite_rule_integrates_oscillation() {
        let (x, w) = composite_gauss_legendre(0.0, 10.0, 8);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert_relative_eq!(q, (30f64).sin() / 3.0, epsilon = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 10.0, epsilon = 1e-13);
    }

    #[test]
    fn simpson_even_and_odd() {
        for n in [1usize, 2, 3, 4, 5, 7, 10, 4095] {
            let h = 2.0 / n as f64;
            let w = simpson_weights(n, h);
            let x: Vec<f64> = (0..=n).map(|i| -1.0 + i as f64 * h).collect();
            let len: f64 = w.iter().sum();
            assert_relative_eq!(len, 2.0, epsilon = 1e-12);
            if n >= 2 {
                let cubic: f64 = x.iter().zip(&w).map(|(x, w)| w * (x * x * x + x * x)).sum();
                assert_relative_eq!(cubic, 2.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    fn packet(e: f64, dk: f64) -> PacketSpec {
        PacketSpec::from_energy(e, dk).unwrap()
    }

    #[test]
    fn time_grid_defaults() {
        let p = packet(5.0, 0.01);
        assert_relative_eq!(packet_extension(&p), 7.5403e-15, max_relative = 1e-4);
        let g = build_time_grid(&p, TimeGridOverrides::default()).unwrap();
        assert_relative_eq!(g.window(), 2e-13);
        assert!(g.step <= packet_extension(&p) / 50.0);
        assert_eq!(g.intervals() % 2, 0);
        assert_relative_eq!(packet_extension(&packet(5.0, 0.15)), 5.027e-16, max_relative = 1e-3);
    }

    #[test]
    fn time_grid_explicit_count() {
        let g = build_time_grid(
            &packet(5.0, 0.01),
            TimeGridOverrides {
                n: Some(4096),
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(g.step, 2e-13 / 4095.0);
        assert_eq!(g.time(4095), 1e-13);
    }

    #[test]
    fn narrow_window_is_rejected() {
        let err = build_time_grid(
            &packet(5.0, 0.01),
            TimeGridOverrides {
                window: Some((-2e-14, 2e-14)),
                n: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn x_profiles() {
        let b5 = BarrierSpec::new(10.0, 5.0).unwrap();
        assert_eq!(build_x_profile(&b5, 2).unwrap(), vec![0.0, 5.0]);
        let p = build_x_profile(&b5, 11).unwrap();
        assert_relative_eq!(p[1] - p[0], 0.5);
        assert_eq!(p[10], 5.0);
        let b10 = BarrierSpec::new(10.0, 10.0).unwrap();
        let p = build_x_profile(&b10, 11).unwrap();
        assert_relative_eq!(p[3], 3.0);
        assert!(build_x_profile(&b5, 1).is_err());
    }

    fn report(kind: DurationKind, mean: f64) -> DurationReport {
        DurationReport {
            kind,
            x_i: 0.0,
            x_f: 1.0,
            mean,
            variance: 0.0,
            reliable: true,
        }
    }

    fn base() -> Resolution {
        Resolution {
            k_panels: 2,
            t_intervals: 100,
            x_intervals_per_angstrom: 4,
        }
    }

    #[test]
    fn constant_task_converges_on_second_level() {
        let rep = refine_until_stable(base(), DEFAULT_TOL, DEFAULT_MAX_LEVELS, |_| {
            Ok(vec![report(DurationKind::Penetration, 1e-15)])
        })
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.levels.len(), 2);
        assert_eq!(rep.final_rel_change, 0.0);
    }

    #[test]
    fn zero_tolerance_never_converges() {
        let rep = refine_until_stable(base(), 0.0, 4, |_| {
            Ok(vec![report(DurationKind::Penetration, 1e-15)])
        })
        .unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.levels.len(), 4);
    }

    #[test]
    fn counts_double_per_level() {
        let mut seen = Vec::new();
        let _ = refine_until_stable(base(), 0.0, 4, |r| {
            seen.push(*r);
            Ok(vec![])
        });
        for w in seen.windows(2) {
            assert_eq!(w[1].k_nodes(), 2 * w[0].k_nodes());
            assert_eq!(w[1].t_intervals, 2 * w[0].t_intervals);
        }
    }

    #[test]
    fn sign_flip_blocks_convergence() {
        let mut calls = 0;
        let rep = refine_until_stable(base(), DEFAULT_TOL, 6, |_| {
            calls += 1;
            let m = match calls {
                1 => -1e-15,
                2 => 1e-15,
                _ => 2e-15,
            };
            Ok(vec![report(DurationKind::Penetration, 3e-15), report(DurationKind::Penetration, m)])
        })
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.levels.len(), 4);
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let err = refine_until_stable(base(), DEFAULT_TOL, 3, |_| {
            Ok(vec![report(DurationKind::Tunnelling, f64::NAN)])
        })
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn resolution_limited_failures_are_recorded() {
        let mut calls = 0;
        let rep = refine_until_stable(base(), DEFAULT_TOL, 5, |_| {
            calls += 1;
            if calls == 1 {
                Err(Error::WindowTooNarrow { x: 0.0, ratio: 1e-2 })
            } else {
                Ok(vec![report(DurationKind::Tunnelling, 1e-15)])
            }
        })
        .unwrap();
        assert!(rep.converged);
        assert!(rep.levels[0].result.is_err());
        assert_eq!(rep.levels.len(), 3);
    }
}
