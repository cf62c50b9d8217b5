use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::stream::{EventStream, ObjectKind};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Configuration, Neighbor, Site};

/// Which recovery marks are honoured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecoveryMask {
    /// Every site recovers.
    Full,
    /// Only sites with `‖x‖∞ ≤ N` recover; infections outside survive forever.
    OnlyInside(usize),
    /// No recoveries: the infection only grows.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LightConeTarget {
    /// Abort when any copy infects a shell site.
    AllCopies,
    /// Abort when the copies disagree at a shell site.
    Discrepancy,
}

/// Abort a run when the tracked infection reaches the outer `shell` sites of
/// the window, where the finite window stops emulating `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LightConeGuard {
    pub shell: usize,
    pub target: LightConeTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub recovery: RecoveryMask,
    /// Non-decreasing observation times.
    pub probes: Vec<f64>,
    /// Region whose first contact defines the hitting time σ.
    pub guard: Option<Vec<Site>>,
    /// Stop once every copy has met the guard (or died).
    pub stop_at_guard: bool,
    pub track_discrepancy: bool,
    pub light_cone: Option<LightConeGuard>,
    /// Last time simulated; defaults to the stream horizon.
    pub until: Option<f64>,
}

impl EvolveConfig {
    pub fn new(probes: Vec<f64>) -> Self {
        EvolveConfig {
            recovery: RecoveryMask::Full,
            probes,
            guard: None,
            stop_at_guard: false,
            track_discrepancy: false,
            light_cone: None,
            until: None,
        }
    }

    pub fn recovery(mut self, mask: RecoveryMask) -> Self {
        self.recovery = mask;
        self
    }

    pub fn guard(mut self, sites: Vec<Site>) -> Self {
        self.guard = Some(sites);
        self
    }

    pub fn stop_at_guard(mut self) -> Self {
        self.stop_at_guard = true;
        self
    }

    pub fn track_discrepancy(mut self) -> Self {
        self.track_discrepancy = true;
        self
    }

    pub fn light_cone(mut self, shell: usize, target: LightConeTarget) -> Self {
        self.light_cone = Some(LightConeGuard { shell, target });
        self
    }

    pub fn until(mut self, t: f64) -> Self {
        self.until = Some(t);
        self
    }
}

/// Observed path of one copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub probe_times: Vec<f64>,
    /// State at each probe time. After an early stop at the guard, the state
    /// at the stopping time.
    pub snapshots: Vec<Configuration>,
    /// First time the window holds no infection; `None` if not before `end_time`.
    pub extinction_time: Option<f64>,
    /// First time the infection meets the guard; `None` if not before `end_time`.
    pub guard_hit_time: Option<f64>,
    /// `|ξ_i Δ ξ_0|` at each probe, relative to the first copy.
    pub discrepancy: Option<Vec<usize>>,
    pub end_time: f64,
    pub alive_at_end: bool,
}

impl Trajectory {
    pub fn counts(&self) -> Vec<usize> {
        self.snapshots.iter().map(Configuration::infected_count).collect()
    }

    pub fn final_state(&self) -> Option<&Configuration> {
        self.snapshots.last()
    }

    pub fn to_json(&self, with_snapshots: bool) -> TrajectoryJson {
        TrajectoryJson {
            probe_times: self.probe_times.clone(),
            counts: self.counts(),
            extinction_time: self.extinction_time,
            guard_hit_time: self.guard_hit_time,
            end_time: self.end_time,
            snapshots: with_snapshots.then(|| self.snapshots.iter().map(|c| c.to_hex()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryJson {
    pub probe_times: Vec<f64>,
    pub counts: Vec<usize>,
    pub extinction_time: Option<f64>,
    pub guard_hit_time: Option<f64>,
    pub end_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<String>>,
}

/// Extinction time τ, guard hitting time σ, and τ_N (τ if the guard is never
/// hit, otherwise infinite). `None` means "not before the end of the run".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingTimes {
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub tau_n: Option<f64>,
}

pub fn stopping_times(traj: &Trajectory) -> StoppingTimes {
    let tau = traj.extinction_time;
    let sigma = traj.guard_hit_time;
    StoppingTimes {
        tau,
        sigma,
        tau_n: if sigma.is_none() { tau } else { None },
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    id: u64,
    obj: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Engine<'a> {
    stream: &'a EventStream,
    arrivals: Vec<Option<Cow<'a, [f64]>>>,
    next: Vec<u32>,
    scheduled: FixedBitSet,
    heap: BinaryHeap<Pending>,
    copies: Vec<FixedBitSet>,
    counts: Vec<usize>,
    occupancy: Vec<u16>,
    recovers: FixedBitSet,
    exterior: bool,
}

impl<'a> Engine<'a> {
    fn arrivals(&mut self, obj: usize) -> &[f64] {
        if self.arrivals[obj].is_none() {
            self.arrivals[obj] = Some(self.stream.arrivals(obj));
        }
        self.arrivals[obj].as_deref().unwrap()
    }

    fn schedule(&mut self, obj: usize, now: f64) {
        if self.scheduled.contains(obj) {
            return;
        }
        let arr = self.arrivals(obj);
        let i = arr.partition_point(|&s| s <= now);
        if let Some(&time) = arr.get(i) {
            self.next[obj] = i as u32;
            self.scheduled.insert(obj);
            let id = self.stream.object_id(obj);
            self.heap.push(Pending {
                time,
                id,
                obj: obj as u32,
            });
        }
    }

    fn advance(&mut self, obj: usize) {
        let i = self.next[obj] as usize + 1;
        let next = self.arrivals(obj).get(i).copied();
        match next {
            Some(time) => {
                self.next[obj] = i as u32;
                let id = self.stream.object_id(obj);
                self.heap.push(Pending {
                    time,
                    id,
                    obj: obj as u32,
                });
            }
            None => self.scheduled.set(obj, false),
        }
    }

    /// Schedule the clocks that can act once `x` is infected in some copy.
    fn activate(&mut self, x: Site, now: f64) {
        let geom = self.stream.geometry().clone();
        if self.recovers.contains(x) {
            self.schedule(self.stream.recovery_object(x), now);
        }
        for k in 0..geom.directions() {
            if let Neighbor::Site(y) = geom.neighbor(x, k) {
                self.schedule(self.stream.arrow_object(y, k ^ 1), now);
            }
        }
    }

    fn source_infected(&self, copy: usize, from: Neighbor) -> bool {
        match from {
            Neighbor::Site(s) => self.copies[copy].contains(s),
            Neighbor::Exterior => self.exterior,
        }
    }

    fn source_active(&self, from: Neighbor) -> bool {
        match from {
            Neighbor::Site(s) => self.occupancy[s] > 0,
            Neighbor::Exterior => self.exterior,
        }
    }
}

fn validate(initials: &[Configuration], stream: &EventStream, cfg: &EvolveConfig) -> Result<f64> {
    let Some(first) = initials.first() else {
        return Err(Error::InvalidParameter("no initial configurations".into()));
    };
    let geom = stream.geometry();
    for c in initials {
        if **c.geometry() != **geom {
            return Err(Error::GeometryMismatch(format!(
                "initial configuration {first:?} does not live on the stream window"
            )));
        }
    }
    let horizon = stream.horizon();
    let until = cfg.until.unwrap_or(horizon);
    if !(0.0..=horizon).contains(&until) {
        return Err(Error::ProbeBeyondHorizon { probe: until, horizon });
    }
    let mut last = 0.0;
    for &p in &cfg.probes {
        if p > until {
            return Err(Error::ProbeBeyondHorizon { probe: p, horizon: until });
        }
        if !(p >= last) {
            return Err(Error::InvalidParameter(format!(
                "probe times must be non-negative and sorted, got {p} after {last}"
            )));
        }
        last = p;
    }
    if let Some(g) = &cfg.guard {
        for &x in g {
            geom.check_site(x)?;
        }
    }
    if initials.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many coupled copies".into()));
    }
    Ok(until)
}

/// Evolve one initial configuration through the stream.
pub fn evolve(initial: &Configuration, stream: &EventStream, cfg: &EvolveConfig) -> Result<Trajectory> {
    Ok(evolve_coupled(std::slice::from_ref(initial), stream, cfg)?
        .pop()
        .expect("one trajectory"))
}

/// Evolve several initial configurations through the same stream in one pass.
///
/// Each returned trajectory is identical to [`evolve`] on its initial
/// configuration. Only clocks that can change some copy are scheduled: the
/// recovery mark of a site infected in some copy and the arrows leaving it.
pub fn evolve_coupled(
    initials: &[Configuration],
    stream: &EventStream,
    cfg: &EvolveConfig,
) -> Result<Vec<Trajectory>> {
    let until = validate(initials, stream, cfg)?;
    let geom = stream.geometry().clone();
    let n_sites = geom.site_count();
    let n_obj = stream.object_count();
    let n_copies = initials.len();

    let mut recovers = FixedBitSet::with_capacity(n_sites);
    for x in 0..n_sites {
        let on = match cfg.recovery {
            RecoveryMask::Full => true,
            RecoveryMask::OnlyInside(r) => geom.sup_norm(x) <= r,
            RecoveryMask::None => false,
        };
        recovers.set(x, on);
    }
    let guard = cfg.guard.as_ref().map(|g| {
        let mut b = FixedBitSet::with_capacity(n_sites);
        g.iter().for_each(|&x| b.insert(x));
        b
    });
    let shell = cfg.light_cone.map(|lc| {
        let mut b = FixedBitSet::with_capacity(n_sites);
        geom.shell(lc.shell).into_iter().for_each(|x| b.insert(x));
        (b, lc.target)
    });

    let mut eng = Engine {
        stream,
        arrivals: vec![None; n_obj],
        next: vec![0; n_obj],
        scheduled: FixedBitSet::with_capacity(n_obj),
        heap: BinaryHeap::new(),
        copies: initials.iter().map(|c| c.bits().clone()).collect(),
        counts: initials.iter().map(Configuration::infected_count).collect(),
        occupancy: vec![0; n_sites],
        recovers,
        exterior: geom.boundary() == Boundary::InfectedExterior,
    };
    for c in &eng.copies {
        for x in c.ones() {
            eng.occupancy[x] += 1;
        }
    }

    let mut tau: Vec<Option<f64>> = eng.counts.iter().map(|&n| (n == 0).then_some(0.0)).collect();
    let mut sigma: Vec<Option<f64>> = vec![None; n_copies];
    if let Some(g) = &guard {
        for (i, c) in eng.copies.iter().enumerate() {
            if !c.is_disjoint(g) {
                sigma[i] = Some(0.0);
            }
        }
    }

    for x in 0..n_sites {
        if eng.occupancy[x] > 0 {
            eng.activate(x, 0.0);
        }
    }
    if eng.exterior {
        for y in 0..n_sites {
            for k in 0..geom.directions() {
                if geom.neighbor(y, k) == Neighbor::Exterior {
                    eng.schedule(stream.arrow_object(y, k), 0.0);
                }
            }
        }
    }

    let mut snapshots: Vec<Vec<FixedBitSet>> = vec![Vec::with_capacity(cfg.probes.len()); n_copies];
    let mut probe = 0;
    let mut end_time = until;
    let all_hit = |sigma: &[Option<f64>], tau: &[Option<f64>]| {
        sigma.iter().zip(tau).all(|(s, t)| s.is_some() || t.is_some())
    };
    let mut stopped = cfg.stop_at_guard && guard.is_some() && all_hit(&sigma, &tau);

    while !stopped {
        let Some(&top) = eng.heap.peek() else { break };
        if top.time > until {
            break;
        }
        while probe < cfg.probes.len() && cfg.probes[probe] < top.time {
            for (i, c) in eng.copies.iter().enumerate() {
                snapshots[i].push(c.clone());
            }
            probe += 1;
        }
        eng.heap.pop();
        let obj = top.obj as usize;
        let t = top.time;
        match stream.kind(obj) {
            ObjectKind::Recovery(x) => {
                if eng.occupancy[x] == 0 {
                    eng.scheduled.set(obj, false);
                    continue;
                }
                for i in 0..n_copies {
                    if eng.copies[i].contains(x) {
                        eng.copies[i].set(x, false);
                        eng.occupancy[x] -= 1;
                        eng.counts[i] -= 1;
                        if eng.counts[i] == 0 && tau[i].is_none() {
                            tau[i] = Some(t);
                        }
                    }
                }
            }
            ObjectKind::Arrow { from, to } => {
                if !eng.source_active(from) {
                    eng.scheduled.set(obj, false);
                    continue;
                }
                let before = eng.occupancy[to];
                for i in 0..n_copies {
                    if eng.source_infected(i, from) && !eng.copies[i].contains(to) {
                        eng.copies[i].insert(to);
                        eng.occupancy[to] += 1;
                        eng.counts[i] += 1;
                        if let Some(g) = &guard {
                            if sigma[i].is_none() && g.contains(to) {
                                sigma[i] = Some(t);
                            }
                        }
                    }
                }
                let after = eng.occupancy[to];
                if let Some((sh, target)) = &shell {
                    if after > before && sh.contains(to) {
                        let violated = match target {
                            LightConeTarget::AllCopies => true,
                            LightConeTarget::Discrepancy => (after as usize) < n_copies,
                        };
                        if violated {
                            return Err(Error::LightCone {
                                time: t,
                                site: geom.coords(to),
                            });
                        }
                    }
                }
                if before == 0 && after > 0 {
                    eng.activate(to, t);
                }
            }
        }
        eng.advance(obj);

        if !eng.exterior && eng.counts.iter().all(|&n| n == 0) {
            break;
        }
        if cfg.stop_at_guard && guard.is_some() && all_hit(&sigma, &tau) {
            stopped = true;
            end_time = t;
        }
    }
    while probe < cfg.probes.len() {
        for (i, c) in eng.copies.iter().enumerate() {
            snapshots[i].push(c.clone());
        }
        probe += 1;
    }

    let mut discrepancy: Vec<Option<Vec<usize>>> = (0..n_copies)
        .map(|i| {
            cfg.track_discrepancy.then(|| {
                snapshots[i]
                    .iter()
                    .zip(&snapshots[0])
                    .map(|(a, b)| a.symmetric_difference(b).count())
                    .collect()
            })
        })
        .collect();
    let mut out = Vec::with_capacity(n_copies);
    for (i, initial) in initials.iter().enumerate() {
        let snaps = std::mem::take(&mut snapshots[i])
            .into_iter()
            .map(|b| Configuration::from_bits(&geom, b))
            .collect::<Result<Vec<_>>>()?;
        out.push(Trajectory {
            initial: initial.clone(),
            probe_times: cfg.probes.clone(),
            snapshots: snaps,
            extinction_time: tau[i],
            guard_hit_time: sigma[i],
            discrepancy: discrepancy[i].take(),
            end_time,
            alive_at_end: eng.exterior || eng.counts[i] > 0,
        });
    }
    Ok(out)
}
