//! Symbolic sliding-window batching.
//!
//! Windows are never stored. A [`Batcher`] keeps a reference to the raw
//! per-day feature arrays and slices window `i` out of them on request: the
//! inputs for days `[i, i + l_seq)` of every gauge plus the targets of the
//! following day. Memory beyond the raw arrays is one batch at a time.

use std::cell::Cell;
use std::rc::Rc;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Windows of `l_seq` days in a span of `day_total` days:
/// `day_total − l_seq + 1`.
pub fn batches_per_epoch(day_total: usize, l_seq: usize) -> Result<usize> {
    if l_seq == 0 || l_seq > day_total {
        return Err(Error::Domain(format!(
            "sequence length {l_seq} does not fit in {day_total} days"
        )));
    }
    Ok(day_total - l_seq + 1)
}

/// Values in one batch: `l_seq × gauges × input properties`.
pub fn batch_size(l_seq: usize, n_gauges: usize, n_input_properties: usize) -> usize {
    l_seq * n_gauges * n_input_properties
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchPlan {
    /// Days that can appear as window inputs.
    pub day_total: usize,
    pub l_seq: usize,
    pub n_gauges: usize,
    pub n_input_properties: usize,
}

impl BatchPlan {
    pub fn new(day_total: usize, l_seq: usize, n_gauges: usize, n_input_properties: usize) -> Result<Self> {
        batches_per_epoch(day_total, l_seq)?;
        Ok(BatchPlan {
            day_total,
            l_seq,
            n_gauges,
            n_input_properties,
        })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.day_total - self.l_seq + 1
    }

    pub fn batch_size(&self) -> usize {
        batch_size(self.l_seq, self.n_gauges, self.n_input_properties)
    }
}

/// Scaled model inputs and targets for a whole dataset, stored once.
///
/// Input row for `(day, gauge)` is the concatenation
/// `[observed series ⊕ static ⊕ space encodings ⊕ time encodings]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStore {
    /// One `n_days × n_catchments` matrix per observed input series.
    pub observed: Vec<Matrix>,
    /// `n_catchments × n_static`
    pub static_features: Matrix,
    /// `n_catchments × n_space`
    pub space: Matrix,
    /// `n_days × n_time`
    pub time: Matrix,
    /// One `n_days × n_catchments` matrix per target series.
    pub targets: Vec<Matrix>,
}

impl FeatureStore {
    pub fn n_days(&self) -> usize {
        self.time.rows()
    }

    pub fn n_catchments(&self) -> usize {
        self.space.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.observed.len() + self.static_features.cols() + self.space.cols() + self.time.cols()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (d, c) = (self.n_days(), self.n_catchments());
        let series_ok = self
            .observed
            .iter()
            .chain(&self.targets)
            .all(|m| m.shape() == (d, c));
        if !series_ok || self.static_features.rows() != c {
            return Err(Error::Shape("feature store arrays disagree on days or catchments".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Contract("feature store has no targets".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn write_input_row(&self, day: usize, gauge: usize, out: &mut [f64]) {
        let mut k = 0;
        for m in &self.observed {
            out[k] = m[(day, gauge)];
            k += 1;
        }
        for src in [self.static_features.row(gauge), self.space.row(gauge), self.time.row(day)] {
            out[k..k + src.len()].copy_from_slice(src);
            k += src.len();
        }
    }

    pub fn target_row(&self, day: usize, gauge: usize) -> Vec<f64> {
        self.targets.iter().map(|m| m[(day, gauge)]).collect()
    }
}

/// The gauges and contiguous day range a batcher draws windows from.
/// The last day of the range only ever serves as a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowView {
    pub gauges: Vec<usize>,
    pub first_day: usize,
    pub n_days: usize,
}

impl WindowView {
    pub fn n_windows(&self, l_seq: usize) -> usize {
        self.n_days.saturating_sub(l_seq)
    }

    /// Plan for horizon-1 windows: inputs may use all but the final day.
    pub fn plan(&self, l_seq: usize, n_inputs: usize) -> Result<BatchPlan> {
        if self.gauges.is_empty() {
            return Err(Error::Contract("window view has no gauges".into()));
        }
        if self.n_days < l_seq + 1 {
            return Err(Error::Domain(format!(
                "{} days cannot hold a {l_seq}-day window plus a target day",
                self.n_days
            )));
        }
        BatchPlan::new(self.n_days - 1, l_seq, self.gauges.len(), n_inputs)
    }
}

/// One materialized window.
#[derive(Debug)]
pub struct Batch {
    pub index: usize,
    /// Absolute day of the targets.
    pub target_day: usize,
    /// One `n_gauges × n_inputs` matrix per day in the window.
    pub inputs: Vec<Matrix>,
    /// `n_gauges × n_targets`
    pub targets: Matrix,
    _live: LiveToken,
}

#[derive(Debug)]
struct LiveToken {
    live: Rc<Cell<usize>>,
}

impl Drop for LiveToken {
    fn drop(&mut self) {
        self.live.set(self.live.get() - 1);
    }
}

pub struct Batcher<'a> {
    store: &'a FeatureStore,
    view: WindowView,
    plan: BatchPlan,
    live: Rc<Cell<usize>>,
    peak: Cell<usize>,
}

impl<'a> Batcher<'a> {
    pub fn new(store: &'a FeatureStore, view: WindowView, l_seq: usize) -> Result<Self> {
        store.validate()?;
        if view.first_day + view.n_days > store.n_days()
            || view.gauges.iter().any(|&g| g >= store.n_catchments())
        {
            return Err(Error::Bounds {
                index: view.first_day + view.n_days,
                len: store.n_days(),
            });
        }
        let plan = view.plan(l_seq, store.n_inputs())?;
        Ok(Batcher {
            store,
            view,
            plan,
            live: Rc::new(Cell::new(0)),
            peak: Cell::new(0),
        })
    }

    pub fn plan(&self) -> &BatchPlan {
        &self.plan
    }

    pub fn view(&self) -> &WindowView {
        &self.view
    }

    pub fn len(&self) -> usize {
        self.plan.batches_per_epoch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Batches currently alive.
    pub fn live_batches(&self) -> usize {
        self.live.get()
    }

    /// Most batches ever alive at once.
    pub fn peak_live_batches(&self) -> usize {
        self.peak.get()
    }

    pub fn batch_at(&self, i: usize) -> Result<Batch> {
        let n = self.len();
        if i >= n {
            return Err(Error::Bounds { index: i, len: n });
        }
        let start = self.view.first_day + i;
        let n_in = self.plan.n_input_properties;
        let gauges = &self.view.gauges;
        let inputs = (start..start + self.plan.l_seq)
            .map(|day| {
                let mut m = Matrix::zeros(gauges.len(), n_in);
                for (r, &g) in gauges.iter().enumerate() {
                    self.store.write_input_row(day, g, m.row_mut(r));
                }
                m
            })
            .collect();
        let target_day = start + self.plan.l_seq;
        let mut targets = Matrix::zeros(gauges.len(), self.store.n_targets());
        for (r, &g) in gauges.iter().enumerate() {
            for (k, t) in self.store.targets.iter().enumerate() {
                targets[(r, k)] = t[(target_day, g)];
            }
        }
        self.live.set(self.live.get() + 1);
        self.peak.set(self.peak.get().max(self.live.get()));
        Ok(Batch {
            index: i,
            target_day,
            inputs,
            targets,
            _live: LiveToken {
                live: Rc::clone(&self.live),
            },
        })
    }
}
