use std::borrow::Cow;
use std::sync::{Arc, OnceLock};

use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry, ModelParams, Neighbor, Site};
use crate::seeds;

/// What a Poisson clock in the graphical construction does when it rings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObjectKind {
    /// Recovery mark at a site (rate 1).
    Recovery(Site),
    /// Infection arrow `from → to` (rate λ). `from` may be the exterior.
    Arrow { from: Neighbor, to: Site },
}

/// One event of a materialized stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub id: u64,
    #[serde(skip)]
    pub kind: ObjectKind,
}

impl Serialize for Neighbor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Neighbor::Site(x) => s.serialize_some(x),
            Neighbor::Exterior => s.serialize_none(),
        }
    }
}

struct BaseStream {
    seed: u64,
    geom: Arc<Geometry>,
    params: ModelParams,
    horizon: f64,
    ids: Vec<u64>,
    cells: Vec<OnceLock<Box<[f64]>>>,
}

impl BaseStream {
    fn generate(&self, obj: usize) -> Box<[f64]> {
        let slots = self.geom.directions() + 1;
        let (site, slot) = (obj / slots, obj % slots);
        let rate = if slot == 0 {
            1.0
        } else {
            if self.geom.neighbor(site, slot - 1) == Neighbor::Exterior
                && self.geom.boundary() != Boundary::InfectedExterior
            {
                return Box::new([]);
            }
            self.params.lambda
        };
        if rate == 0.0 {
            return Box::new([]);
        }
        let exp = Exp::new(rate).expect("positive rate");
        let mut rng = seeds::substream(self.seed, self.ids[obj]);
        let mut t = 0.0;
        let mut out = Vec::with_capacity((rate * self.horizon * 1.5) as usize + 4);
        loop {
            t += exp.sample(&mut rng);
            if t > self.horizon {
                break;
            }
            out.push(t);
        }
        out.into_boxed_slice()
    }

    fn arrivals(&self, obj: usize) -> &[f64] {
        self.cells[obj].get_or_init(|| self.generate(obj))
    }
}

/// Replayable Poisson clocks of the graphical construction on a window.
///
/// Clocks are keyed by lattice coordinates, so two streams with the same seed
/// on different windows agree on every clock they share. Arrival lists are
/// generated on first access and cached; cloning a stream shares the cache.
///
/// A stream is a view `[offset, offset + horizon]` of its base clocks, read
/// forward or time-reversed with arrows flipped (see [`dual_reverse`]).
#[derive(Clone)]
pub struct EventStream {
    base: Arc<BaseStream>,
    offset: f64,
    horizon: f64,
    reversed: bool,
}

impl std::fmt::Debug for EventStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventStream")
            .field("seed", &self.base.seed)
            .field("offset", &self.offset)
            .field("horizon", &self.horizon)
            .field("reversed", &self.reversed)
            .finish()
    }
}

/// Build the event stream of `geom` with clocks on `[0, horizon]`.
pub fn make_stream(
    seed: u64,
    geom: &Arc<Geometry>,
    params: ModelParams,
    horizon: f64,
) -> Result<EventStream> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let slots = geom.directions() + 1;
    let n = geom.site_count() * slots;
    let ids = (0..n)
        .map(|obj| seeds::object_id(&geom.coords(obj / slots), (obj % slots) as u64))
        .collect();
    let cells = (0..n).map(|_| OnceLock::new()).collect();
    Ok(EventStream {
        base: Arc::new(BaseStream {
            seed,
            geom: Arc::clone(geom),
            params,
            horizon,
            ids,
            cells,
        }),
        offset: 0.0,
        horizon,
        reversed: false,
    })
}

/// The dual stream on `[0, t]`: arrow `x→y` at time `s` becomes `y→x` at
/// `t − s`, recovery at `(x, s)` becomes `(x, t − s)`. Applying it twice with
/// the same `t` gives back the stream restricted to `[0, t]`.
pub fn dual_reverse(stream: &EventStream, t: f64) -> Result<EventStream> {
    if !(t > 0.0 && t <= stream.horizon) {
        return Err(Error::InvalidParameter(format!(
            "reversal time {t} must lie in (0, {}]",
            stream.horizon
        )));
    }
    if stream.base.geom.boundary() == Boundary::InfectedExterior {
        return Err(Error::InvalidParameter(
            "time reversal is undefined with an infected exterior".into(),
        ));
    }
    let offset = if stream.reversed {
        stream.offset + stream.horizon - t
    } else {
        stream.offset
    };
    Ok(EventStream {
        base: Arc::clone(&stream.base),
        offset,
        horizon: t,
        reversed: !stream.reversed,
    })
}

impl EventStream {
    pub fn seed(&self) -> u64 {
        self.base.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.base.geom
    }

    pub fn params(&self) -> ModelParams {
        self.base.params
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn object_count(&self) -> usize {
        self.base.cells.len()
    }

    pub fn slots(&self) -> usize {
        self.base.geom.directions() + 1
    }

    #[inline]
    pub fn recovery_object(&self, x: Site) -> usize {
        x * self.slots()
    }

    /// The arrow into `to` from its neighbour in direction `k`.
    #[inline]
    pub fn arrow_object(&self, to: Site, k: usize) -> usize {
        to * self.slots() + 1 + k
    }

    pub fn kind(&self, obj: usize) -> ObjectKind {
        let slots = self.slots();
        let (site, slot) = (obj / slots, obj % slots);
        if slot == 0 {
            ObjectKind::Recovery(site)
        } else {
            ObjectKind::Arrow {
                from: self.base.geom.neighbor(site, slot - 1),
                to: site,
            }
        }
    }

    /// Tie-breaking id of an object, stable across windows.
    pub fn object_id(&self, obj: usize) -> u64 {
        self.base.ids[obj]
    }

    /// Base object whose clock this view reads for `obj`.
    fn source_object(&self, obj: usize) -> Option<usize> {
        if !self.reversed {
            return Some(obj);
        }
        match self.kind(obj) {
            ObjectKind::Recovery(_) => Some(obj),
            ObjectKind::Arrow { from, to } => match from {
                Neighbor::Site(s) => {
                    let k = (obj % self.slots()) - 1;
                    debug_assert_eq!(self.base.geom.neighbor(s, k ^ 1), Neighbor::Site(to));
                    Some(self.arrow_object(s, k ^ 1))
                }
                Neighbor::Exterior => None,
            },
        }
    }

    /// Sorted arrival times of `obj` on `[0, horizon]`.
    pub fn arrivals(&self, obj: usize) -> Cow<'_, [f64]> {
        let Some(src) = self.source_object(obj) else {
            return Cow::Borrowed(&[]);
        };
        let all = self.base.arrivals(src);
        let lo = all.partition_point(|&s| s < self.offset);
        let hi = all.partition_point(|&s| s <= self.offset + self.horizon);
        let window = &all[lo..hi];
        if self.reversed {
            let end = self.offset + self.horizon;
            Cow::Owned(window.iter().rev().map(|&s| end - s).collect())
        } else if self.offset == 0.0 {
            Cow::Borrowed(window)
        } else {
            Cow::Owned(window.iter().map(|&s| s - self.offset).collect())
        }
    }

    /// Every event of the stream sorted by time, ties by object id.
    pub fn events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for obj in 0..self.object_count() {
            let id = self.object_id(obj);
            let kind = self.kind(obj);
            out.extend(self.arrivals(obj).iter().map(|&time| Event { time, id, kind }));
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
        out
    }
}
