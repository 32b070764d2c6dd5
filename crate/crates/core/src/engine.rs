//! Per-sample loop: clustering step, then every enabled index.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::cvi::{IcviInit, IndexKind, IndexState};
use crate::error::{Error, Result};
use crate::io::{EventKind, EventRecord, TraceRecord};
use crate::oec::{oec_init, OecConfig, OecEvent, OecState};
use crate::skmeans::{skmeans_init, SkMeansState};
use crate::types::{MembershipVector, PrototypeSet, StreamPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    SkMeans { k: usize },
    Oec(OecConfig),
}

impl Algorithm {
    /// Points consumed by initialization before the first index update.
    pub fn warmup(&self, p: usize) -> usize {
        match self {
            Algorithm::SkMeans { k } => *k,
            Algorithm::Oec(_) => p + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub indices: Vec<IndexKind>,
    /// Forgetting factor of the `_lambda` indices.
    pub lambda: f64,
    pub icvi_init: IcviInit,
    /// Recorded for reproducibility; the clusterers themselves are deterministic.
    pub seed: u64,
    /// Add the winning cluster to every trace record.
    pub emit_labels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Oec(OecConfig::default()),
            indices: IndexKind::ALL.to_vec(),
            lambda: 0.9,
            icvi_init: IcviInit::default(),
            seed: 0,
            emit_labels: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::Config("no index enabled".into()));
        }
        for (i, kind) in self.indices.iter().enumerate() {
            if self.indices[..i].contains(kind) {
                return Err(Error::Config(format!("index {kind} listed twice")));
            }
        }
        if self.indices.iter().any(|k| k.forgets()) && !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!("λ = {} outside (0, 1)", self.lambda)));
        }
        if let Algorithm::SkMeans { k: 0 } = self.algorithm {
            return Err(Error::Config("sequential k-means needs k ≥ 1".into()));
        }
        Ok(())
    }
}

/// One index state per enabled kind, all for `k` clusters.
pub fn init_icvi_state(
    indices: &[IndexKind],
    k: usize,
    p: usize,
    lambda: f64,
    mode: IcviInit,
    n_warmup: u64,
) -> Result<Vec<IndexState>> {
    indices
        .iter()
        .map(|&kind| IndexState::with_init(kind, k, p, lambda, mode, n_warmup))
        .collect()
}

#[derive(Debug, Clone)]
enum Clusterer {
    SkMeans(SkMeansState),
    Oec(OecState),
}

struct ClusterStep {
    u: MembershipVector,
    v_old: PrototypeSet,
    v_new: PrototypeSet,
    events: Vec<OecEvent>,
}

impl Clusterer {
    fn step(&mut self, x: &[f64], harden: bool) -> Result<ClusterStep> {
        Ok(match self {
            Clusterer::SkMeans(s) => {
                let st = s.step(x)?;
                ClusterStep {
                    u: st.u,
                    v_old: st.v_old,
                    v_new: st.v_new,
                    events: Vec::new(),
                }
            }
            Clusterer::Oec(s) => {
                let st = s.step(x)?;
                ClusterStep {
                    u: if harden { st.u.hardened() } else { st.u },
                    v_old: st.v_old,
                    v_new: st.v_new,
                    events: st.events,
                }
            }
        })
    }

    fn k(&self) -> usize {
        match self {
            Clusterer::SkMeans(s) => s.k(),
            Clusterer::Oec(s) => s.k(),
        }
    }

    fn footprint(&self) -> usize {
        match self {
            Clusterer::SkMeans(s) => s.footprint(),
            Clusterer::Oec(s) => s.footprint(),
        }
    }
}

#[derive(Debug, Clone)]
struct Running {
    clusterer: Clusterer,
    indices: Vec<IndexState>,
}

/// Output of pushing one point. Warm-up points produce no record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutput {
    pub record: Option<TraceRecord>,
    pub events: Vec<EventRecord>,
}

/// Streaming engine: feed points in order with [`Engine::push`].
#[derive(Debug, Clone)]
pub struct Engine {
    config: RunConfig,
    dim: Option<usize>,
    warmup: Vec<StreamPoint>,
    running: Option<Running>,
    /// Per index slot: whether the previous value was undefined.
    undefined_run: [bool; 4],
    undefined_steps: u64,
}

impl Engine {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            dim: None,
            warmup: Vec::new(),
            running: None,
            undefined_run: [false; 4],
            undefined_steps: 0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Current number of clusters; `None` during warm-up.
    pub fn k(&self) -> Option<usize> {
        self.running.as_ref().map(|r| r.clusterer.k())
    }

    /// Trace rows with at least one undefined enabled index.
    pub fn undefined_steps(&self) -> u64 {
        self.undefined_steps
    }

    pub fn index_states(&self) -> &[IndexState] {
        self.running.as_ref().map_or(&[], |r| &r.indices)
    }

    /// Number of scalars held by the engine state.
    pub fn footprint(&self) -> usize {
        let warm = self.warmup.iter().map(|p| p.dim() + 1).sum::<usize>();
        let run = self.running.as_ref().map_or(0, |r| {
            r.clusterer.footprint() + r.indices.iter().map(IndexState::footprint).sum::<usize>()
        });
        warm + run + 6
    }

    pub fn push(&mut self, point: &StreamPoint) -> Result<StepOutput> {
        let p = *self.dim.get_or_insert(point.dim());
        if point.dim() != p {
            return Err(Error::Structural(format!(
                "point {} has dimension {}, stream dimension is {p}",
                point.n(),
                point.dim()
            )));
        }
        match self.running.as_mut() {
            None => {
                self.warmup.push(point.clone());
                let mut out = StepOutput::default();
                if self.warmup.len() == self.config.algorithm.warmup(p) {
                    out.events = self.start(p, point.n())?;
                }
                Ok(out)
            }
            Some(_) => self.evaluate(point),
        }
    }

    fn start(&mut self, p: usize, n: u64) -> Result<Vec<EventRecord>> {
        let first = std::mem::take(&mut self.warmup);
        let mut events = Vec::new();
        let clusterer = match &self.config.algorithm {
            Algorithm::SkMeans { k } => Clusterer::SkMeans(skmeans_init(&first, *k)?),
            Algorithm::Oec(cfg) => {
                let (state, init_events) = oec_init(&first, cfg)?;
                events.extend(init_events.into_iter().map(|e| oec_record(n, e)));
                Clusterer::Oec(state)
            }
        };
        let indices = init_icvi_state(
            &self.config.indices,
            clusterer.k(),
            p,
            self.config.lambda,
            self.config.icvi_init,
            first.len() as u64,
        )?;
        debug!("warm-up done after {} points, k = {}", first.len(), clusterer.k());
        self.running = Some(Running { clusterer, indices });
        Ok(events)
    }

    fn evaluate(&mut self, point: &StreamPoint) -> Result<StepOutput> {
        let harden = matches!(&self.config.algorithm, Algorithm::Oec(c) if c.harden);
        let run = self.running.as_mut().expect("running");
        let step = run.clusterer.step(point.x(), harden)?;
        let n = point.n();
        let mut events = Vec::new();
        for e in step.events {
            if matches!(e, OecEvent::ClusterCreated { .. }) {
                for idx in run.indices.iter_mut() {
                    idx.add_cluster()?;
                }
            }
            events.push(oec_record(n, e));
        }

        let mut values = [None; 4];
        let mut any_undefined = false;
        for idx in run.indices.iter_mut() {
            let kind = idx.kind();
            let v = idx.update(&step.v_old, &step.v_new, &step.u, point.x())?;
            match v.value {
                Ok(x) => {
                    values[kind.slot()] = Some(x);
                    self.undefined_run[kind.slot()] = false;
                }
                Err(why) => {
                    any_undefined = true;
                    if !self.undefined_run[kind.slot()] {
                        events.push(EventRecord {
                            n,
                            kind: EventKind::IndexUndefined,
                            detail: format!("{kind}: {why}"),
                        });
                    }
                    self.undefined_run[kind.slot()] = true;
                }
            }
        }
        if any_undefined {
            self.undefined_steps += 1;
        }
        Ok(StepOutput {
            record: Some(TraceRecord {
                n,
                k: step.v_new.k(),
                values,
                label: self.config.emit_labels.then(|| step.u.winner()),
            }),
            events,
        })
    }
}

fn oec_record(n: u64, e: OecEvent) -> EventRecord {
    match e {
        OecEvent::ClusterCreated { index, mean } => EventRecord {
            n,
            kind: EventKind::ClusterCreated,
            detail: format!("cluster {index} at {mean:?}"),
        },
        OecEvent::CovarianceRegularized { cluster, delta } => EventRecord {
            n,
            kind: EventKind::CovarianceRegularized,
            detail: match cluster {
                Some(i) => format!("cluster {i}: added {delta:?}·I"),
                None => format!("forgetful prototype: added {delta:?}·I"),
            },
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    /// Engine events merged with the ground-truth changes, ordered by `n`.
    pub events: Vec<EventRecord>,
    pub final_k: usize,
    pub undefined_steps: u64,
}

/// Runs a whole stream. `change_events` are copied into the event log.
pub fn run(points: &[StreamPoint], change_events: &[u64], config: &RunConfig) -> Result<RunOutput> {
    let p = points.first().map_or(0, StreamPoint::dim);
    let warm = config.algorithm.warmup(p);
    if points.len() <= warm {
        return Err(Error::Config(format!(
            "stream of {} points is too short: warm-up needs {warm} and evaluation at least one more",
            points.len()
        )));
    }
    let mut engine = Engine::new(config.clone())?;
    let mut trace = Vec::with_capacity(points.len() - warm);
    let mut events = Vec::new();
    let mut changes = change_events.iter().peekable();
    for pt in points {
        while let Some(&&c) = changes.peek() {
            if c > pt.n() {
                break;
            }
            events.push(EventRecord {
                n: c,
                kind: EventKind::GroundTruthChange,
                detail: String::new(),
            });
            changes.next();
        }
        let out = engine.push(pt)?;
        trace.extend(out.record);
        events.extend(out.events);
    }
    events.extend(changes.map(|&c| EventRecord {
        n: c,
        kind: EventKind::GroundTruthChange,
        detail: String::new(),
    }));
    Ok(RunOutput {
        trace,
        events,
        final_k: engine.k().expect("past warm-up"),
        undefined_steps: engine.undefined_steps(),
    })
}
