use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{FieldHistory, GuidanceField, Side, SpinRule};
use crate::grid_field::Point;
use crate::par::{for_each_mut, Execution};
use crate::{Error, Result, Units};

/// Time-ordered positions of one particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub outcome: Option<String>,
    /// Trapped at a node after exhausting step halvings; the trajectory
    /// stops at the last good position.
    pub flagged: bool,
}

impl Trajectory {
    pub fn start(t: f64, x: Point) -> Self {
        Self { times: vec![t], positions: vec![x], outcome: None, flagged: false }
    }

    pub fn last_position(&self) -> Point {
        *self.positions.last().expect("trajectory has at least one point")
    }

    /// Position at `t`, linearly interpolated between recorded samples.
    pub fn position_at(&self, t: f64) -> Option<Point> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        let tol = 1e-9 * (1.0 + t.abs());
        if t < first - tol || t > last + tol {
            return None;
        }
        let i = self.times.partition_point(|&s| s < t - tol);
        if i >= self.times.len() {
            return self.positions.last().copied();
        }
        if (self.times[i] - t).abs() <= tol || i == 0 {
            return Some(self.positions[i]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.positions[i - 1], self.positions[i]);
        Some([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    /// Base step; estimated as `dx / (4·max|v|)` when absent.
    pub dt: Option<f64>,
    pub node_epsilon: f64,
    pub spin_rule: SpinRule,
    pub max_halvings: u32,
    /// Extra times at which positions are recorded (start and end always are).
    pub checkpoints: Vec<f64>,
    pub record_every_step: bool,
    pub execution: Execution,
    pub units: Units,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt: None,
            node_epsilon: super::sampling::default_node_epsilon(),
            spin_rule: SpinRule::default(),
            max_halvings: 10,
            checkpoints: Vec::new(),
            record_every_step: false,
            execution: Execution::default(),
            units: Units::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub trajectories: Vec<Trajectory>,
    pub flagged: usize,
    pub dt: f64,
    pub steps: usize,
}

impl EnsembleRun {
    /// Positions of unflagged trajectories at `t`.
    pub fn positions_at(&self, t: f64) -> Vec<Point> {
        self.trajectories.iter().filter(|tr| !tr.flagged).filter_map(|tr| tr.position_at(t)).collect()
    }
}

/// Guidance snapshots computed once per time and shared by all trajectories.
struct Snapshots<'a, H: FieldHistory> {
    history: &'a H,
    rule: SpinRule,
    units: Units,
    cache: Mutex<HashMap<(u64, bool), Arc<GuidanceField>>>,
}

impl<'a, H: FieldHistory> Snapshots<'a, H> {
    fn get(&self, t: f64, side: Side) -> Result<Arc<GuidanceField>> {
        let key = (t.to_bits(), side == Side::After);
        if let Some(g) = self.cache.lock().expect("snapshot cache poisoned").get(&key) {
            return Ok(g.clone());
        }
        let field = self.history.field_at(t, side)?;
        let g = Arc::new(GuidanceField::new(&field, self.rule, self.units));
        self.cache.lock().expect("snapshot cache poisoned").insert(key, g.clone());
        Ok(g)
    }

    fn clear(&self) {
        self.cache.lock().expect("snapshot cache poisoned").clear();
    }
}

fn rk4(x: &Point, h: f64, eps: f64, a: &GuidanceField, m: &GuidanceField, b: &GuidanceField) -> Result<Point> {
    let add = |p: &Point, v: &Point, s: f64| [p[0] + s * v[0], p[1] + s * v[1]];
    let k1 = a.velocity(x, eps)?;
    let k2 = m.velocity(&add(x, &k1, 0.5 * h), eps)?;
    let k3 = m.velocity(&add(x, &k2, 0.5 * h), eps)?;
    let k4 = b.velocity(&add(x, &k3, h), eps)?;
    Ok([
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

struct Step<'s, 'a, H: FieldHistory> {
    snaps: &'s Snapshots<'a, H>,
    eps: f64,
    max_halvings: u32,
}

impl<H: FieldHistory> Step<'_, '_, H> {
    /// RK4 over `[ta, tb]`, recursively halving on node proximity.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        x: &Point,
        ta: f64,
        tb: f64,
        a: &GuidanceField,
        m: &GuidanceField,
        b: &GuidanceField,
        depth: u32,
    ) -> Result<Point> {
        match rk4(x, tb - ta, self.eps, a, m, b) {
            Err(Error::NodeProximity { .. }) if depth < self.max_halvings => {
                let tm = 0.5 * (ta + tb);
                let q1 = self.snaps.get(0.5 * (ta + tm), Side::Before)?;
                let q3 = self.snaps.get(0.5 * (tm + tb), Side::Before)?;
                let xm = self.advance(x, ta, tm, a, &q1, m, depth + 1)?;
                self.advance(&xm, tm, tb, m, &q3, b, depth + 1)
            }
            other => other,
        }
    }
}

struct State {
    x: Point,
    active: bool,
    trajectory: Trajectory,
}

/// Step size from the fastest on-grid guidance speed at the start, at every
/// event and at the end.
fn estimate_dt<H: FieldHistory>(snaps: &Snapshots<'_, H>, t0: f64, t_end: f64, events: &[f64]) -> Result<f64> {
    let mut vmax = 0.0f64;
    let mut dx = f64::INFINITY;
    let mut times = vec![(t0, Side::After), (t_end, Side::Before), (0.5 * (t0 + t_end), Side::Before)];
    times.extend(events.iter().map(|&t| (t, Side::After)));
    for (t, side) in times {
        let g = snaps.get(t, side)?;
        vmax = vmax.max(g.max_speed(1e-6));
        for a in 0..g.grid().dims() {
            dx = dx.min(g.grid().dx(a));
        }
    }
    let span = t_end - t0;
    let dt = if vmax > 0.0 { dx / (4.0 * vmax) } else { span };
    Ok(dt.min(span / 10.0))
}

/// Integrates every start position through `history` from `t0` to `t_end`
/// in lockstep, so each guidance snapshot is computed once per step.
pub fn integrate_ensemble<H: FieldHistory + Sync>(
    history: &H,
    starts: &[Point],
    t0: f64,
    t_end: f64,
    options: &IntegrationOptions,
) -> Result<EnsembleRun> {
    if !(t_end > t0) {
        return Err(Error::NegativeDuration(t_end - t0));
    }
    if let Some(dt) = options.dt {
        if !(dt > 0.0) {
            return Err(Error::NegativeDuration(dt));
        }
    }
    let snaps = Snapshots { history, rule: options.spin_rule, units: options.units, cache: Mutex::new(HashMap::new()) };
    let events: Vec<f64> = history.event_times().into_iter().filter(|&t| t > t0 && t < t_end).collect();
    let dt = match options.dt {
        Some(dt) => dt,
        None => estimate_dt(&snaps, t0, t_end, &events)?,
    };
    snaps.clear();

    let mut breaks = vec![t0, t_end];
    breaks.extend(events.iter().copied());
    breaks.extend(options.checkpoints.iter().copied().filter(|&t| t > t0 && t < t_end));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + b.abs()));
    let is_checkpoint = |t: f64| options.checkpoints.iter().any(|&c| (c - t).abs() < 1e-12 * (1.0 + t.abs()));

    let mut states: Vec<State> = starts
        .iter()
        .map(|&x| State { x, active: true, trajectory: Trajectory::start(t0, x) })
        .collect();

    let step = Step { snaps: &snaps, eps: options.node_epsilon, max_halvings: options.max_halvings };
    let mut steps = 0;
    for w in breaks.windows(2) {
        let (sa_t, sb_t) = (w[0], w[1]);
        let n = ((sb_t - sa_t) / dt).ceil().max(1.0) as usize;
        let h = (sb_t - sa_t) / n as f64;
        let mut a = snaps.get(sa_t, Side::After)?;
        for k in 0..n {
            let ta = sa_t + k as f64 * h;
            let tb = if k + 1 == n { sb_t } else { sa_t + (k + 1) as f64 * h };
            let m = snaps.get(0.5 * (ta + tb), Side::Before)?;
            let b = snaps.get(tb, Side::Before)?;
            let record = options.record_every_step || k + 1 == n && (tb == t_end || is_checkpoint(tb));
            for_each_mut(options.execution, &mut states, |_, s| {
                if !s.active {
                    return;
                }
                match step.advance(&s.x, ta, tb, &a, &m, &b, 0) {
                    Ok(x) => s.x = x,
                    Err(_) => {
                        s.active = false;
                        s.trajectory.flagged = true;
                    }
                }
                if record && s.active {
                    s.trajectory.times.push(tb);
                    s.trajectory.positions.push(s.x);
                }
            });
            steps += 1;
            snaps.clear();
            a = b;
        }
    }
    let trajectories: Vec<Trajectory> = states.into_iter().map(|s| s.trajectory).collect();
    let flagged = trajectories.iter().filter(|t| t.flagged).count();
    Ok(EnsembleRun { trajectories, flagged, dt, steps })
}

/// Single trajectory, recorded at every step.
pub fn integrate_trajectory<H: FieldHistory + Sync>(
    history: &H,
    x0: Point,
    dt: f64,
    t_end: f64,
    options: &IntegrationOptions,
) -> Result<Trajectory> {
    let opts = IntegrationOptions {
        dt: Some(dt),
        record_every_step: true,
        execution: Execution::Sequential,
        ..options.clone()
    };
    let run = integrate_ensemble(history, &[x0], history.start_time(), t_end, &opts)?;
    Ok(run.trajectories.into_iter().next().expect("one start position"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bohmian::{Event, Timeline};
    use crate::grid_field::{synthesize_packets, GridSpec, PacketParams, Region, WaveField};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_displacement() {
        let grid = GridSpec::line(0.0, 16.0 * PI, 512).unwrap();
        // p = 2 is periodic on this grid
        let f = WaveField::from_fn(grid, |x| Complex64::from_polar(1.0, 2.0 * x[0])).unwrap();
        let tl = Timeline::new(f, Units::default());
        let tr = integrate_trajectory(&tl, [3.0, 0.0], 0.01, 1.0, &IntegrationOptions::default()).unwrap();
        assert!((tr.last_position()[0] - 5.0).abs() < 1e-8);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }

    #[test]
    fn spreading_gaussian_is_self_similar() {
        let grid = GridSpec::line(-40.0, 80.0, 2048).unwrap();
        let sigma0 = 1.0;
        let f = synthesize_packets(&grid, 1, &[PacketParams::new(0.0, sigma0)], Units::default()).unwrap();
        let tl = Timeline::new(f, Units::default());
        let t_end = 4.0;
        let tr = integrate_trajectory(&tl, [sigma0, 0.0], 0.01, t_end, &IntegrationOptions::default()).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.positions) {
            let sigma_t = sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt();
            assert!((x[0] - sigma_t).abs() < 1e-4, "t={t}: {} vs {sigma_t}", x[0]);
        }
    }

    #[test]
    fn impulsive_event_keeps_position_continuous() {
        let grid = GridSpec::line(-32.0, 64.0, 1024).unwrap();
        let f = synthesize_packets(&grid, 1, &[PacketParams::new(-2.0, 1.0).with_momentum(1.0)], Units::default()).unwrap();
        let region = Region::intervals(&[0.0, 16.0], ["D"]).unwrap();
        let tl = Timeline::new(f, Units::default())
            .with_event(1.0, Event::Impulse { region, etas: vec![3.0], tau: 0.5 })
            .unwrap();
        let tr = integrate_trajectory(&tl, [-1.5, 0.0], 0.005, 2.0, &IntegrationOptions::default()).unwrap();
        let dx = 64.0 / 1024.0;
        for w in tr.positions.windows(2) {
            assert!((w[1][0] - w[0][0]).abs() < dx);
        }
    }

    #[test]
    fn ensemble_modes_are_bit_identical() {
        let grid = GridSpec::line(-32.0, 64.0, 512).unwrap();
        let f = synthesize_packets(&grid, 1, &[PacketParams::new(-3.0, 1.0), PacketParams::new(3.0, 1.0)], Units::default())
            .unwrap();
        let tl = Timeline::new(f, Units::default());
        let starts: Vec<Point> = (0..64).map(|i| [-5.0 + 10.0 * i as f64 / 64.0, 0.0]).collect();
        let run = |execution| {
            let opts = IntegrationOptions { execution, checkpoints: vec![0.5], ..Default::default() };
            integrate_ensemble(&tl, &starts, 0.0, 1.0, &opts).unwrap()
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
        let r = run(Execution::Parallel);
        assert_eq!(r.trajectories[0].times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn position_interpolation() {
        let tr = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            positions: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 4.0]],
            outcome: None,
            flagged: false,
        };
        assert_eq!(tr.position_at(0.5), Some([1.0, 0.0]));
        assert_eq!(tr.position_at(2.0), Some([2.0, 4.0]));
        assert_eq!(tr.position_at(2.5), None);
    }
}
