use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::request::{AddressLayout, AiaRequest, ArrayId, IndexResolver};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    /// Processor resolves each index itself: two round trips per index.
    Baseline,
    /// One request, lookups performed next to memory.
    Aia,
}

impl AccessMode {
    pub const BOTH: [AccessMode; 2] = [AccessMode::Baseline, AccessMode::Aia];

    pub fn name(self) -> &'static str {
        match self {
            AccessMode::Baseline => "baseline",
            AccessMode::Aia => "aia",
        }
    }
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    IndexFetch,
    DataFetch,
}

impl AccessKind {
    pub fn name(self) -> &'static str {
        match self {
            AccessKind::IndexFetch => "index-fetch",
            AccessKind::DataFetch => "data-fetch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AccessEvent {
    pub array: ArrayId,
    pub index: usize,
    pub addr: u64,
    pub kind: AccessKind,
    /// Performed inside the memory-side engine; invisible to processor caches.
    pub internal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTrace {
    pub mode: AccessMode,
    pub events: Vec<AccessEvent>,
    pub round_trips: usize,
}

impl AccessTrace {
    pub fn empty(mode: AccessMode) -> Self {
        Self {
            mode,
            events: Vec::new(),
            round_trips: 0,
        }
    }

    pub fn data_fetches(&self) -> impl Iterator<Item = &AccessEvent> {
        self.events
            .iter()
            .filter(|e| e.kind == AccessKind::DataFetch)
    }

    /// Sorted `(array, index)` pairs of all data fetches.
    pub fn data_multiset(&self) -> Vec<(ArrayId, usize)> {
        let mut v: Vec<_> = self.data_fetches().map(|e| (e.array, e.index)).collect();
        v.sort_unstable();
        v
    }

    /// Appends another trace's events and round trips.
    pub fn extend(&mut self, other: AccessTrace) {
        debug_assert_eq!(self.mode, other.mode);
        self.events.extend(other.events);
        self.round_trips += other.round_trips;
    }
}

/// Expands one ranged indirect request into the memory accesses it causes.
///
/// Baseline: for each `i`, fetch `b[i]`, then the `r` elements it points at,
/// costing two round trips per index. AIA: all index fetches happen inside the
/// engine (flagged `internal`), then the data elements are returned as one
/// stream in ascending address order, costing a single round trip.
pub fn expand_trace(
    req: &AiaRequest,
    resolver: &impl IndexResolver,
    layout: &AddressLayout,
    mode: AccessMode,
) -> Result<AccessTrace> {
    if req.n == 0 {
        return Ok(AccessTrace::empty(mode));
    }
    let addr_of = |array: ArrayId, index: usize| {
        layout.addr(array, index).ok_or(Error::ResolverFailure {
            array: array.name(),
            index,
        })
    };
    let mut index_events = Vec::with_capacity(req.n);
    let mut data_events = Vec::with_capacity(req.n * req.r);
    let mut events = Vec::with_capacity(req.n * (req.r + 1));
    for i in req.b_offset..req.b_offset + req.n {
        let target = resolver
            .resolve(req.b.id, i)
            .ok_or(Error::ResolverFailure {
                array: req.b.id.name(),
                index: i,
            })?;
        let index_event = AccessEvent {
            array: req.b.id,
            index: i,
            addr: addr_of(req.b.id, i)?,
            kind: AccessKind::IndexFetch,
            internal: mode == AccessMode::Aia,
        };
        let first_data = data_events.len();
        for e in target..target + req.r {
            data_events.push(AccessEvent {
                array: req.a.id,
                index: e,
                addr: addr_of(req.a.id, e)?,
                kind: AccessKind::DataFetch,
                internal: false,
            });
        }
        match mode {
            AccessMode::Baseline => {
                events.push(index_event);
                events.extend_from_slice(&data_events[first_data..]);
            }
            AccessMode::Aia => index_events.push(index_event),
        }
    }
    let round_trips = match mode {
        AccessMode::Baseline => 2 * req.n,
        AccessMode::Aia => {
            data_events.sort_by_key(|e| e.addr);
            events = index_events;
            events.append(&mut data_events);
            1
        }
    };
    Ok(AccessTrace {
        mode,
        events,
        round_trips,
    })
}

/// Writes one line per event: `<mode> <array> <index> <addr-hex> <kind>`.
pub fn write_trace_dump<W: Write>(mut w: W, trace: &AccessTrace) -> std::io::Result<()> {
    for e in &trace.events {
        writeln!(
            w,
            "{} {} {} {:#x} {}",
            trace.mode,
            e.array,
            e.index,
            e.addr,
            e.kind.name()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aia::request::Dst;

    fn layout() -> AddressLayout {
        AddressLayout::new(&[(ArrayId::ColA, 16), (ArrayId::RptB, 32)])
    }

    fn resolver(b: Vec<usize>) -> impl IndexResolver {
        move |array: ArrayId, i: usize| {
            if array == ArrayId::ColA {
                b.get(i).copied()
            } else {
                None
            }
        }
    }

    #[test]
    fn round_trip_counts() {
        let req = AiaRequest::new(Dst::Aia2, 4, 2, ArrayId::RptB, ArrayId::ColA, 0);
        let res = resolver(vec![9, 2, 20, 2]);
        let base = expand_trace(&req, &res, &layout(), AccessMode::Baseline).unwrap();
        let aia = expand_trace(&req, &res, &layout(), AccessMode::Aia).unwrap();
        assert_eq!(base.round_trips, 8);
        assert_eq!(aia.round_trips, 1);
        assert_eq!(base.data_multiset(), aia.data_multiset());
        assert_eq!(base.events.len(), 4 * 3);
        // baseline interleaves index, then its range
        assert_eq!(base.events[0].kind, AccessKind::IndexFetch);
        assert_eq!((base.events[1].index, base.events[2].index), (9, 10));
        // aia: internal index fetches first, then ascending data stream
        assert!(aia.events[..4]
            .iter()
            .all(|e| e.internal && e.kind == AccessKind::IndexFetch));
        let addrs: Vec<u64> = aia.data_fetches().map(|e| e.addr).collect();
        assert!(addrs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_request() {
        let req = AiaRequest::new(Dst::Aia2, 0, 2, ArrayId::RptB, ArrayId::ColA, 0);
        let t = expand_trace(&req, &resolver(vec![]), &layout(), AccessMode::Aia).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.round_trips, 0);
    }

    #[test]
    fn duplicate_indices_fetch_twice() {
        let req = AiaRequest::new(Dst::Aia2, 2, 1, ArrayId::RptB, ArrayId::ColA, 0);
        let res = resolver(vec![7, 7]);
        for mode in AccessMode::BOTH {
            let t = expand_trace(&req, &res, &layout(), mode).unwrap();
            assert_eq!(
                t.data_multiset(),
                vec![(ArrayId::RptB, 7), (ArrayId::RptB, 7)]
            );
        }
    }

    #[test]
    fn resolver_failure() {
        let req = AiaRequest::new(Dst::Aia2, 3, 2, ArrayId::RptB, ArrayId::ColA, 0);
        let err =
            expand_trace(&req, &resolver(vec![1]), &layout(), AccessMode::Baseline).unwrap_err();
        assert!(matches!(
            err,
            Error::ResolverFailure {
                array: "col_a",
                index: 1
            }
        ));
        // target range leaving the array
        let req = AiaRequest::new(Dst::Aia2, 1, 2, ArrayId::RptB, ArrayId::ColA, 0);
        assert!(expand_trace(&req, &resolver(vec![31]), &layout(), AccessMode::Aia).is_err());
    }

    #[test]
    fn dump_format() {
        let req = AiaRequest::new(Dst::Aia2, 1, 1, ArrayId::RptB, ArrayId::ColA, 0);
        let t = expand_trace(&req, &resolver(vec![1]), &layout(), AccessMode::Baseline).unwrap();
        let mut out = Vec::new();
        write_trace_dump(&mut out, &t).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "baseline col_a 0 0x0 index-fetch\nbaseline rpt_b 1 0x48 data-fetch\n"
        );
    }
}
