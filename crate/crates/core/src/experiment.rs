//! End-to-end runs: build the packet at a resolution, sample fluxes, and
//! compose durations, with or without the refinement controller.

use crate::chronostats::{
    duration, dwell_time_density, dwell_time_flux, phase_time, split_flux, DurationKind, DurationReport,
    EndpointMoments, FluxSeries,
};
use crate::error::{Error, Result};
use crate::packet::{PacketField, PacketSpec, Wave};
use crate::quadrature::{
    build_time_grid, build_x_profile, refine_until_stable, simpson_weights, RefinementReport, Resolution, TimeGrid,
    TimeGridOverrides,
};
use crate::scatter::BarrierSpec;

/// A barrier, a packet and a time window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub barrier: BarrierSpec,
    pub packet: PacketSpec,
    pub time: TimeGridOverrides,
}

impl Scenario {
    pub fn new(barrier: BarrierSpec, packet: PacketSpec) -> Self {
        Self {
            barrier,
            packet,
            time: TimeGridOverrides::default(),
        }
    }

    /// Barrier `(v0, a)` with a packet of mean energy `ebar` and width `dk`.
    pub fn from_parameters(v0: f64, a: f64, ebar: f64, dk: f64) -> Result<Self> {
        let barrier = BarrierSpec::new(v0, a)?;
        if ebar >= v0 {
            return Err(Error::domain(format!("Ē = {ebar} eV is not below V₀ = {v0} eV")));
        }
        Ok(Self::new(barrier, PacketSpec::from_energy(ebar, dk)?))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        build_time_grid(&self.packet, self.time)
    }

    /// Starting resolution for positions up to `max_abs_x` from the origin.
    pub fn base_resolution(&self, max_abs_x: f64) -> Result<Resolution> {
        Resolution::base(&self.barrier, &self.packet, &self.time_grid()?, max_abs_x)
    }

    pub fn simulate(&self, resolution: &Resolution) -> Result<Simulation> {
        let times = self.time_grid()?.with_intervals(resolution.t_intervals);
        let field = PacketField::build(self.barrier, self.packet, resolution.k_panels)?;
        Ok(Simulation {
            scenario: *self,
            resolution: *resolution,
            times,
            field,
        })
    }

    /// Stationary-phase time across the barrier at `k̄`.
    pub fn phase_time(&self) -> Result<f64> {
        phase_time(self.packet.k_bar(), &self.barrier, 0.0, self.barrier.width())
    }

    /// Penetration and return profile over `n_x` points of `[0, a]`, refined
    /// until stable.
    pub fn profile_refined(&self, n_x: usize, base: Resolution, tol: f64, max_levels: usize) -> Result<ProfileRun> {
        let xs = build_x_profile(&self.barrier, n_x)?;
        let report = refine_until_stable(base, tol, max_levels, |res| {
            let sim = self.simulate(res)?;
            let points = sim.profile(&xs)?;
            Ok(points.iter().flat_map(|p| [p.penetration, p.ret]).collect())
        })?;
        let points = report
            .last()
            .map(|reports| {
                reports
                    .chunks(2)
                    .map(|c| ProfilePoint {
                        x: c[0].x_f,
                        penetration: c[0],
                        ret: c[1],
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(ProfileRun { points, report })
    }

    /// Tunnelling time and reflection time at the entrance, refined.
    pub fn tunnelling_refined(&self, base: Resolution, tol: f64, max_levels: usize) -> Result<(DurationReport, DurationReport, RefinementReport)> {
        let report = refine_until_stable(base, tol, max_levels, |res| {
            let sim = self.simulate(res)?;
            Ok(vec![sim.tunnelling()?, sim.reflection(0.0)?])
        })?;
        let (tun, refl) = match report.last() {
            Some(last) => (last[0], last[1]),
            None => return Err(Error::numerical("no refinement level produced a result")),
        };
        Ok((tun, refl, report))
    }

    /// Tunnelling, entrance reflection and dwell time in `(x_i, x_f)`,
    /// refined together.
    pub fn summary_refined(&self, x_i: f64, x_f: f64, base: Resolution, tol: f64, max_levels: usize) -> Result<SummaryRun> {
        let report = refine_until_stable(base, tol, max_levels, |res| {
            let sim = self.simulate(res)?;
            let [flux, density] = sim.dwell_reports(x_i, x_f)?;
            Ok(vec![sim.tunnelling()?, sim.reflection(0.0)?, flux, density])
        })?;
        let [tunnelling, reflection, flux, density] = match report.last() {
            Some(&[a, b, c, d]) => [a, b, c, d],
            _ => return Err(Error::numerical("no refinement level produced a result")),
        };
        Ok(SummaryRun {
            tunnelling,
            reflection,
            dwell: DwellTimes {
                flux_form: flux.mean,
                density_form: density.mean,
            },
            report,
        })
    }
}

/// Refined values of the quantities reported for a single scenario.
#[derive(Clone, Debug)]
pub struct SummaryRun {
    pub tunnelling: DurationReport,
    /// Reflection at the entrance, τ_R(0, 0).
    pub reflection: DurationReport,
    pub dwell: DwellTimes,
    pub report: RefinementReport,
}

/// τ_Pen(0, x) and τ_Ret(x, x) at one depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub x: f64,
    pub penetration: DurationReport,
    pub ret: DurationReport,
}

#[derive(Clone, Debug)]
pub struct ProfileRun {
    pub points: Vec<ProfilePoint>,
    pub report: RefinementReport,
}

/// Dwell time in both forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellTimes {
    pub flux_form: f64,
    pub density_form: f64,
}

/// A scenario evaluated at one resolution.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub scenario: Scenario,
    pub resolution: Resolution,
    pub times: TimeGrid,
    pub field: PacketField,
}

impl Simulation {
    pub fn flux_series(&self, xs: &[f64], wave: Wave) -> Result<Vec<FluxSeries>> {
        self.field
            .flux_table(xs, &self.times, wave)
            .into_iter()
            .zip(xs)
            .map(|(j, &x)| split_flux(x, self.times.clone(), j))
            .collect()
    }

    pub fn endpoint_moments(&self, xs: &[f64]) -> Result<Vec<EndpointMoments>> {
        self.flux_series(xs, Wave::Scattered)?
            .iter()
            .map(EndpointMoments::from_series)
            .collect()
    }

    /// τ_Pen(0, x) and τ_Ret(x, x) at each `x` in `[0, a]`.
    pub fn profile(&self, xs: &[f64]) -> Result<Vec<ProfilePoint>> {
        let mut all = Vec::with_capacity(xs.len() + 1);
        all.push(0.0);
        all.extend_from_slice(xs);
        let moments = self.endpoint_moments(&all)?;
        let entry = &moments[0];
        let barrier = &self.scenario.barrier;
        moments[1..]
            .iter()
            .map(|m| {
                Ok(ProfilePoint {
                    x: m.x,
                    penetration: duration(DurationKind::Penetration, barrier, entry, m)?,
                    ret: duration(DurationKind::Return, barrier, m, m)?,
                })
            })
            .collect()
    }

    pub fn tunnelling(&self) -> Result<DurationReport> {
        let a = self.scenario.barrier.width();
        let m = self.endpoint_moments(&[0.0, a])?;
        duration(DurationKind::Tunnelling, &self.scenario.barrier, &m[0], &m[1])
    }

    pub fn reflection(&self, x: f64) -> Result<DurationReport> {
        let m = self.endpoint_moments(&[x])?;
        duration(DurationKind::Reflection, &self.scenario.barrier, &m[0], &m[0])
    }

    pub fn transmission(&self, x_i: f64, x_f: f64) -> Result<DurationReport> {
        let m = self.endpoint_moments(&[x_i, x_f])?;
        duration(DurationKind::Transmission, &self.scenario.barrier, &m[0], &m[1])
    }

    pub fn dwell_time_flux(&self, x_i: f64, x_f: f64) -> Result<f64> {
        let s = self.flux_series(&[x_i, x_f], Wave::Scattered)?;
        let inc = self.flux_series(&[x_i], Wave::Incident)?;
        dwell_time_flux(&self.scenario.barrier, &s[0], &s[1], &inc[0])
    }

    /// The density form, integrating ρ over `(x_i, x_f)` with Simpson's rule
    /// on each of the regions the interval crosses.
    pub fn dwell_time_density(&self, x_i: f64, x_f: f64) -> Result<f64> {
        let (xs, ws) = self.spatial_rule(x_i, x_f);
        let presence = self.field.presence_integral(&xs, &ws, &self.times);
        let inc = self.flux_series(&[x_i], Wave::Incident)?;
        dwell_time_density(&self.scenario.barrier, x_f, presence, &inc[0])
    }

    pub fn dwell_times(&self, x_i: f64, x_f: f64) -> Result<DwellTimes> {
        Ok(DwellTimes {
            flux_form: self.dwell_time_flux(x_i, x_f)?,
            density_form: self.dwell_time_density(x_i, x_f)?,
        })
    }

    /// Both dwell forms as reports, flux form first, for the refinement
    /// controller. The variance field is unused and zero.
    pub fn dwell_reports(&self, x_i: f64, x_f: f64) -> Result<[DurationReport; 2]> {
        let d = self.dwell_times(x_i, x_f)?;
        let report = |mean| DurationReport {
            kind: DurationKind::Dwell,
            x_i,
            x_f,
            mean,
            variance: 0.0,
            reliable: true,
        };
        Ok([report(d.flux_form), report(d.density_form)])
    }

    fn spatial_rule(&self, x_i: f64, x_f: f64) -> (Vec<f64>, Vec<f64>) {
        let a = self.scenario.barrier.width();
        let mut breaks = vec![x_i];
        breaks.extend([0.0, a].into_iter().filter(|&b| b > x_i && b < x_f));
        breaks.push(x_f);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for seg in breaks.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi <= lo {
                continue;
            }
            let mut n = ((hi - lo) * self.resolution.x_intervals_per_angstrom as f64).ceil() as usize;
            n = n.max(2);
            n += n % 2;
            let h = (hi - lo) / n as f64;
            for (i, w) in simpson_weights(n, h).into_iter().enumerate() {
                xs.push(if i == n { hi } else { lo + i as f64 * h });
                ws.push(w);
            }
        }
        (xs, ws)
    }
}
