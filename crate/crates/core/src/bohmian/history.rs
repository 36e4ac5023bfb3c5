use crate::grid_field::{apply_piecewise_impulse, apply_sg_deflection, free_propagate, Region, SgDeflection, WaveField};
use crate::{Error, Result, Units};

/// Which limit to take at an instantaneous event time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// Time-indexed source of guiding fields.
pub trait FieldHistory {
    fn start_time(&self) -> f64;
    /// Times of instantaneous field updates, ascending.
    fn event_times(&self) -> Vec<f64>;
    fn field_at(&self, t: f64, side: Side) -> Result<WaveField>;
}

/// Instantaneous update applied to the field.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Phase imprint `e^{-iηₖτ/ħ}` inside each box; free propagation resumes
    /// afterwards, so an impulse at `t` followed by the timeline up to `t+τ`
    /// is the extended impulsive evolution.
    Impulse { region: Region, etas: Vec<f64>, tau: f64 },
    Deflection(SgDeflection),
}

/// Free evolution punctuated by instantaneous events.
#[derive(Debug, Clone)]
pub struct Timeline {
    base: WaveField,
    units: Units,
    /// `(time, event, field just after the event)`.
    events: Vec<(f64, Event, WaveField)>,
}

impl Timeline {
    pub fn new(base: WaveField, units: Units) -> Self {
        Self { base, units, events: Vec::new() }
    }

    pub fn with_event(mut self, t: f64, event: Event) -> Result<Self> {
        let last = self.events.last().map_or(self.base.time(), |e| e.0);
        if !(t >= last) {
            return Err(Error::NegativeDuration(t - last));
        }
        let before = self.field_at(t, Side::Before)?;
        let after = match &event {
            Event::Impulse { region, etas, tau } => apply_piecewise_impulse(&before, region, etas, *tau, self.units)?,
            Event::Deflection(d) => apply_sg_deflection(&before, d, self.units)?,
        };
        self.events.push((t, event, after));
        Ok(self)
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn base(&self) -> &WaveField {
        &self.base
    }
}

impl FieldHistory for Timeline {
    fn start_time(&self) -> f64 {
        self.base.time()
    }

    fn event_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.0).collect()
    }

    fn field_at(&self, t: f64, side: Side) -> Result<WaveField> {
        let latest = self.events.iter().rev().find(|(te, _, _)| match side {
            Side::Before => *te < t,
            Side::After => *te <= t,
        });
        let (from, t_from) = match latest {
            Some((te, _, field)) => (field, *te),
            None => (&self.base, self.base.time()),
        };
        free_propagate(from, t - t_from, self.units)
    }
}
