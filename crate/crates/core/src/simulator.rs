//! Event-driven integration of the perturbed piecewise system and the
//! Poincaré return map on `{y = 0, x > 0}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{curves, h_of_u, Curve, EnergyLevel, Mode, UCoord, ZoneId};
use crate::melnikov::reduce;
use crate::ode::{next_step, trial_step, State, Trial};
use crate::perturbation::PerturbationSpec;
use crate::zeros::count_zeros;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eps: f64,
    pub rtol: f64,
    pub atol: f64,
    pub event_tol: f64,
    pub max_steps: usize,
    /// Samples of the displacement when scanning for cycles.
    pub grid_points: usize,
    /// Relative width at which cycle bisection stops.
    pub h_rel_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            rtol: 1e-12,
            atol: 1e-14,
            event_tol: 1e-12,
            max_steps: 100_000,
            grid_points: 96,
            h_rel_tol: 1e-9,
        }
    }
}

impl SimConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.rtol, self.atol, self.event_tol, self.h_rel_tol];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) || !self.eps.is_finite() || self.max_steps == 0 {
            return Err(Error::Domain(format!("invalid simulation settings: {self:?}")));
        }
        Ok(())
    }
}

/// One transversal passage through a switching curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub curve: Curve,
    pub from_zone: u8,
    pub to_zone: u8,
    /// `∇(level)·F` on the departing side.
    pub normal_speed: f64,
}

/// Position along the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub x: f64,
    pub y: f64,
    pub zone: u8,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapSample {
    pub h_in: f64,
    pub h_out: f64,
    pub displacement: f64,
    pub crossings: Vec<Crossing>,
    pub period: f64,
    pub steps: usize,
}

/// Expected `(curve, sign of x)` for each crossing of one revolution from the section.
fn crossing_order(mode: Mode) -> &'static [(Curve, bool)] {
    use Curve::{Lower, Upper};
    match mode {
        Mode::FourZone => &[(Lower, true), (Lower, false), (Upper, false), (Upper, true)],
        Mode::TwoZoneUpper => &[(Upper, false), (Upper, true)],
        Mode::TwoZoneLower => &[(Lower, true), (Lower, false)],
    }
}

/// Zone from the sides of the switching curves (`above[c]` = level > 0) and the sign of `x`.
fn zone_from_sides(mode: Mode, above_upper: bool, above_lower: bool, x_positive: bool) -> u8 {
    match mode {
        Mode::FourZone if above_upper => 4,
        Mode::FourZone if !above_lower => 2,
        Mode::FourZone if x_positive => 1,
        Mode::FourZone => 3,
        Mode::TwoZoneUpper if above_upper => 4,
        Mode::TwoZoneLower if !above_lower => 4,
        _ => 1,
    }
}

struct Flow<'a> {
    spec: &'a PerturbationSpec,
    eps: f64,
}

impl Flow<'_> {
    fn field(&self, zone: ZoneId, s: State) -> State {
        let (f, g) = self.spec.field(zone, s[0], s[1]);
        [s[1] + self.eps * f, -s[0] + self.eps * g]
    }

    fn normal_speed(&self, zone: ZoneId, curve: Curve, s: State) -> f64 {
        let (gx, gy) = curve.gradient(s[0]);
        let v = self.field(zone, s);
        gx * v[0] + gy * v[1]
    }
}

/// Earliest root in `(0, 1]` of `g(θ)` given `g(0)` and `g(1)` of opposite signs (Illinois).
fn locate(g: impl Fn(f64) -> f64, g0: f64, g1: f64, tol: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (0.0, 1.0, g0, g1);
    let mut side = 0;
    let mut c = 1.0;
    for _ in 0..200 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = g(c);
        if fc.abs() < tol || b - a < 1e-15 {
            break;
        }
        if (fc > 0.0) == (fa > 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    c
}

/// First sign change of `level` along the step, checked at interior dense
/// points so that a double passage inside one step is not missed.
fn first_sign_change(trial: &Trial, level: impl Fn(State) -> f64, sign: bool) -> Option<(f64, f64)> {
    const PROBES: usize = 8;
    let mut prev = 0.0;
    for k in 1..=PROBES {
        let theta = k as f64 / PROBES as f64;
        let v = level(if k == PROBES { trial.y1 } else { trial.dense(theta) });
        if (v > 0.0) != sign && v != 0.0 {
            return Some((prev, theta));
        }
        prev = theta;
    }
    None
}

/// Integrates one revolution from `(√h0, 0)` and returns the return-map sample.
pub fn return_map(spec: &PerturbationSpec, cfg: &SimConfig, h0: EnergyLevel) -> Result<ReturnMapSample> {
    cfg.validate()?;
    let mode = spec.mode();
    let flow = Flow { spec, eps: cfg.eps };
    let order = crossing_order(mode);
    let active = curves(mode);
    let x0 = h0.radius();
    let mut s: State = [x0, 0.0];
    let mut t = 0.0;
    let mut zone = ZoneId::new(1, mode)?;
    // side of each curve the trajectory is on (level > 0)
    let mut above = [s[1] - s[0] * s[0] > 0.0, s[1] + s[0] * s[0] > 0.0];
    let curve_index = |c: Curve| if c == Curve::Upper { 0 } else { 1 };
    let mut crossings: Vec<Crossing> = Vec::new();
    let mut section_armed = false;
    let mut y_positive = false;
    let mut h = 1e-3 * (2.0 * std::f64::consts::PI);
    let h_max = 0.02 * 2.0 * std::f64::consts::PI;
    let fail = |reason: String, trace: &[Crossing]| Error::Integration {
        reason,
        trace: trace.to_vec(),
    };

    for step in 0..cfg.max_steps {
        let f = |y: State| flow.field(zone, y);
        let k1 = f(s);
        let trial = trial_step(&f, t, s, k1, h);
        let err = trial.error_norm(cfg.rtol, cfg.atol);
        if !err.is_finite() {
            return Err(fail(format!("non-finite state at t = {t}"), &crossings));
        }
        if err > 1.0 {
            h = next_step(h, err);
            if h < 1e-14 {
                return Err(fail(format!("step size underflow at t = {t}"), &crossings));
            }
            continue;
        }

        // earliest event inside the accepted step
        let mut event: Option<(f64, Option<Curve>)> = None;
        for &curve in active {
            let side = above[curve_index(curve)];
            if let Some((lo, hi)) = first_sign_change(&trial, |y| curve.level(y[0], y[1]), side) {
                let g = |th: f64| {
                    let y = trial.dense(lo + th * (hi - lo));
                    curve.level(y[0], y[1])
                };
                let th = locate(g, g(0.0), g(1.0), cfg.event_tol);
                let theta = lo + th * (hi - lo);
                if event.is_none_or(|(e, _)| theta < e) {
                    event = Some((theta, Some(curve)));
                }
            }
        }
        if section_armed && y_positive {
            if let Some((lo, hi)) = first_sign_change(&trial, |y| y[1], true) {
                let g = |th: f64| trial.dense(lo + th * (hi - lo))[1];
                let th = locate(g, g(0.0), g(1.0), cfg.event_tol);
                let theta = lo + th * (hi - lo);
                if event.is_none_or(|(e, _)| theta < e) {
                    event = Some((theta, None));
                }
            }
        }

        let Some((theta, what)) = event else {
            s = trial.y1;
            t = trial.t1();
            y_positive = s[1] > 0.0;
            h = next_step(h, err).min(h_max);
            continue;
        };

        // redo the step exactly up to the event
        let dt = theta * trial.h;
        let exact = trial_step(&f, t, s, k1, dt);
        let at = exact.y1;
        t += dt;
        match what {
            None => {
                if at[0] <= 0.0 {
                    return Err(fail(format!("section reached at x = {} ≤ 0", at[0]), &crossings));
                }
                let h_out = at[0] * at[0] + at[1] * at[1];
                return Ok(ReturnMapSample {
                    h_in: h0.value(),
                    h_out,
                    displacement: h_out - h0.value(),
                    crossings,
                    period: t,
                    steps: step + 1,
                });
            }
            Some(curve) => {
                let idx = curve_index(curve);
                let expected = order.get(crossings.len()).copied();
                if expected != Some((curve, at[0] > 0.0)) {
                    return Err(fail(
                        format!("unexpected crossing of {curve:?} at ({}, {})", at[0], at[1]),
                        &crossings,
                    ));
                }
                let before = flow.normal_speed(zone, curve, at);
                above[idx] = !above[idx];
                let next = ZoneId::new(zone_from_sides(mode, above[0], above[1], at[0] > 0.0), mode)?;
                let after = flow.normal_speed(next, curve, at);
                if before.abs() <= cfg.event_tol || after.abs() <= cfg.event_tol || (before > 0.0) != (after > 0.0) {
                    return Err(fail(
                        format!("non-transversal crossing of {curve:?}: normal speeds {before}, {after}"),
                        &crossings,
                    ));
                }
                crossings.push(Crossing {
                    t,
                    x: at[0],
                    y: at[1],
                    curve,
                    from_zone: zone.index(),
                    to_zone: next.index(),
                    normal_speed: before,
                });
                zone = next;
                s = nudge(&flow, zone, curve, at, above[idx], &mut t);
                y_positive = s[1] > 0.0;
                if crossings.len() == order.len() {
                    section_armed = true;
                }
            }
        }
    }
    Err(fail(format!("max_steps = {} exceeded", cfg.max_steps), &crossings))
}

/// Advances a minimal step with the new zone's field until the state is
/// strictly on the new side of the crossed curve.
fn nudge(flow: &Flow, zone: ZoneId, curve: Curve, s: State, above: bool, t: &mut f64) -> State {
    let f = |y: State| flow.field(zone, y);
    let mut dt = 1e-13 * (1.0 + s[0].abs() + s[1].abs());
    for _ in 0..60 {
        let y = trial_step(&f, *t, s, f(s), dt).y1;
        let v = curve.level(y[0], y[1]);
        if (v > 0.0) == above && v != 0.0 {
            *t += dt;
            return y;
        }
        dt *= 2.0;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// Displacement positive inside, negative outside.
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub h: f64,
    pub u: f64,
    pub stability: Stability,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleScan {
    pub cycles: Vec<LimitCycle>,
    /// Samples that failed to integrate, with the reason.
    pub failures: Vec<(f64, String)>,
}

/// Brackets sign changes of the displacement on a geometric `h` grid and
/// bisects each to a fixed point of the return map.
pub fn find_limit_cycles(
    spec: &PerturbationSpec,
    cfg: &SimConfig,
    h_lo: EnergyLevel,
    h_hi: EnergyLevel,
) -> Result<CycleScan> {
    let (lo, hi) = (h_lo.value(), h_hi.value());
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::Domain(format!("need h_lo < h_hi, got {lo} ≥ {hi}")));
    }
    cfg.validate()?;
    let n = cfg.grid_points.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let d = |h: f64| return_map(spec, cfg, EnergyLevel::new(h)?).map(|s| s.displacement);
    let samples: Vec<(f64, Result<f64>)> = grid.par_iter().map(|&h| (h, d(h))).collect();
    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (h, r) in samples {
        match r {
            Ok(v) => ok.push((h, v)),
            Err(e) => failures.push((h, e.to_string())),
        }
    }
    let brackets: Vec<((f64, f64), (f64, f64))> = ok
        .windows(2)
        .filter(|w| w[0].1 != 0.0 && w[1].1 != 0.0 && (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .map(|w| (w[0], w[1]))
        .collect();
    let refined: Vec<std::result::Result<LimitCycle, (f64, String)>> = brackets
        .par_iter()
        .map(|&((a, da), (b, db))| bisect_cycle(&d, a, da, b, db, cfg.h_rel_tol))
        .collect();
    let mut cycles = Vec::new();
    for r in refined {
        match r {
            Ok(c) => cycles.push(c),
            Err(f) => failures.push(f),
        }
    }
    Ok(CycleScan { cycles, failures })
}

fn bisect_cycle(
    d: &(impl Fn(f64) -> Result<f64> + Sync),
    mut a: f64,
    da: f64,
    mut b: f64,
    db: f64,
    rel_tol: f64,
) -> std::result::Result<LimitCycle, (f64, String)> {
    let stability = if da > 0.0 { Stability::Stable } else { Stability::Unstable };
    let sa = da > 0.0;
    let _ = db;
    while (b - a) > rel_tol * b {
        let mid = (a * b).sqrt();
        let dm = d(mid).map_err(|e| (mid, e.to_string()))?;
        if dm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if (dm > 0.0) == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    let h = 0.5 * (a + b);
    Ok(LimitCycle {
        h,
        u: crate::geometry::u_of_h(EnergyLevel::new(h).map_err(|e| (h, e.to_string()))?).value(),
        stability,
        bracket: (a, b),
    })
}

/// Simulated cycles at one `ε`, paired with the zeros of `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRun {
    pub eps: f64,
    pub count: usize,
    pub cycles: Vec<LimitCycle>,
    /// `|h*(ε) - h*_M| / h*_M`, in increasing `h`; empty when counts differ.
    pub relative_drift: Vec<f64>,
    pub max_drift: Option<f64>,
    pub failures: Vec<(f64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Levels `h = u⁴ + u²` of the zeros of `M` in the scanned window.
    pub melnikov_zeros: Vec<f64>,
    pub h_range: (f64, f64),
    pub runs: Vec<EpsRun>,
    pub counts_match: bool,
    pub drift_decreasing: bool,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Window scanned when `M` has no zeros to center on.
const DEFAULT_H_RANGE: (f64, f64) = (1e-2, 1e2);

/// Compares simulated cycles with the zeros of `M` for each `ε` in `eps_list`.
pub fn cross_validate(spec: &PerturbationSpec, eps_list: &[f64]) -> Result<CrossValidation> {
    cross_validate_with(spec, eps_list, &SimConfig::default())
}

pub fn cross_validate_with(spec: &PerturbationSpec, eps_list: &[f64], base: &SimConfig) -> Result<CrossValidation> {
    if eps_list.is_empty() {
        return Err(Error::Domain("eps list is empty".into()));
    }
    let mut notes = Vec::new();
    if eps_list.windows(2).any(|w| w[1].abs() >= w[0].abs()) {
        notes.push("eps list is not strictly decreasing in magnitude".to_string());
    }
    let (_, uf) = reduce(spec)?;
    let report = count_zeros(&uf, 10.0, 1e-13)?;
    let zeros: Vec<f64> = report
        .zeros
        .iter()
        .map(|z| h_of_u(UCoord::new(z.u).expect("positive zero")).value())
        .collect();
    let h_range = match (zeros.first(), zeros.last()) {
        (Some(&a), Some(&b)) => (0.5 * a, 2.0 * b),
        _ => DEFAULT_H_RANGE,
    };
    let mut runs = Vec::new();
    for &eps in eps_list {
        let cfg = SimConfig { eps, ..*base };
        let scan = find_limit_cycles(spec, &cfg, EnergyLevel::new(h_range.0)?, EnergyLevel::new(h_range.1)?)?;
        let relative_drift: Vec<f64> = if scan.cycles.len() == zeros.len() {
            scan.cycles.iter().zip(&zeros).map(|(c, &z)| (c.h - z).abs() / z).collect()
        } else {
            Vec::new()
        };
        let max_drift = relative_drift.iter().copied().reduce(f64::max);
        runs.push(EpsRun {
            eps,
            count: scan.cycles.len(),
            cycles: scan.cycles,
            relative_drift,
            max_drift,
            failures: scan.failures,
        });
    }
    let counts_match = runs.last().is_some_and(|r| r.count == zeros.len());
    if !counts_match {
        notes.push(format!(
            "count mismatch at smallest eps: {} cycles vs {} zeros of M",
            runs.last().map_or(0, |r| r.count),
            zeros.len()
        ));
    }
    let drifts: Vec<Option<f64>> = runs.iter().map(|r| r.max_drift).collect();
    let drift_decreasing = drifts.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b <= a,
        (None, None) => zeros.is_empty(),
        _ => false,
    });
    Ok(CrossValidation {
        melnikov_zeros: zeros,
        h_range,
        passed: counts_match && drift_decreasing,
        runs,
        counts_match,
        drift_decreasing,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::zone_of;
    use crate::geometry::ZoneClass;
    use crate::perturbation::Table::B;

    fn lvl(h: f64) -> EnergyLevel {
        EnergyLevel::new(h).unwrap()
    }

    #[test]
    fn zone_sides_agree_with_classifier() {
        for mode in Mode::ALL {
            for &(x, y) in &[(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (0.3, 0.5), (-0.3, -0.5)] {
                let ZoneClass::Zone(z) = zone_of(x, y, mode) else { panic!() };
                assert_eq!(zone_from_sides(mode, y > x * x, y > -x * x, x > 0.0), z.index(), "{mode} ({x},{y})");
            }
        }
    }

    #[test]
    fn unperturbed_orbit_closes() {
        for mode in Mode::ALL {
            let spec = PerturbationSpec::random(2, mode, &mut rand::thread_rng());
            for h in [0.5, 2.0, 10.0] {
                let s = return_map(&spec, &SimConfig::with_eps(0.0), lvl(h)).unwrap();
                assert!(s.displacement.abs() <= 1e-9 * h, "{mode} h={h}: {}", s.displacement);
                assert!((s.period - 2.0 * std::f64::consts::PI).abs() < 1e-9);
                assert_eq!(s.crossings.len(), crossing_order(mode).len());
            }
        }
    }

    #[test]
    fn crossing_sequence_four_zone() {
        let spec = PerturbationSpec::zero(1, Mode::FourZone);
        let s = return_map(&spec, &SimConfig::default(), lvl(2.0)).unwrap();
        let zones: Vec<(u8, u8)> = s.crossings.iter().map(|c| (c.from_zone, c.to_zone)).collect();
        assert_eq!(zones, vec![(1, 2), (2, 3), (3, 4), (4, 1)]);
        // B = (1, -1)
        assert!((s.crossings[0].x - 1.0).abs() < 1e-10 && (s.crossings[0].y + 1.0).abs() < 1e-10);
    }

    #[test]
    fn displacement_tracks_melnikov() {
        let spec = PerturbationSpec::zero(1, Mode::FourZone).with(B, 1, 0, 1, 1.0).unwrap();
        let h = lvl(2.0);
        let m = crate::melnikov::melnikov_direct(&spec, h).unwrap();
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| return_map(&spec, &SimConfig::with_eps(eps), h).unwrap().displacement / eps)
            .collect();
        for r in &ratios {
            assert!((r / (2.0 * m) - 1.0).abs() < 0.05, "{ratios:?} vs 2M = {}", 2.0 * m);
        }
    }

    #[test]
    fn zero_spec_has_no_cycles() {
        let spec = PerturbationSpec::zero(1, Mode::TwoZoneUpper);
        let cfg = SimConfig { grid_points: 16, ..SimConfig::default() };
        let scan = find_limit_cycles(&spec, &cfg, lvl(0.1), lvl(5.0)).unwrap();
        assert!(scan.cycles.is_empty() && scan.failures.is_empty());
    }
}
