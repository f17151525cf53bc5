//! Piecewise-constant switching signals over a finite family of topologies.
//!
//! A schedule is a list of `(duration, topology)` segments starting at `t = 0`,
//! optionally repeated with period equal to the total duration. Active
//! intervals are closed on the left: at a switch instant the new topology is
//! already in force.

use std::fmt;

use crate::digraph::{has_jointly_strongly_connected_basis, DiGraph};
use crate::error::{Error, Result};

/// One piece of a schedule. `topology` is a 0-based index into the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub topology: usize,
}

impl Segment {
    pub fn new(duration: f64, topology: usize) -> Self {
        Segment { duration, topology }
    }
}

/// A half-open time interval `[start, end)` on which one topology is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub topology: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSchedule {
    topologies: Vec<DiGraph>,
    /// Start of each merged run within one pass; `starts[0] == 0`.
    starts: Vec<f64>,
    indices: Vec<usize>,
    /// Period for periodic schedules, otherwise the end of the last run
    /// (possibly infinite).
    end: f64,
    periodic: bool,
}

impl SwitchSchedule {
    /// Build a schedule. Adjacent segments on the same topology are merged.
    /// Only the last segment of a non-periodic schedule may be infinite.
    pub fn new(topologies: Vec<DiGraph>, segments: &[Segment], periodic: bool) -> Result<Self> {
        let n = topologies
            .first()
            .ok_or_else(|| Error::arg("schedule needs at least one topology"))?
            .n();
        if let Some(g) = topologies.iter().find(|g| g.n() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: g.n(),
            });
        }
        if segments.is_empty() {
            return Err(Error::arg("schedule needs at least one segment"));
        }
        let mut starts = Vec::new();
        let mut indices: Vec<usize> = Vec::new();
        let mut t = 0.0f64;
        for (j, seg) in segments.iter().enumerate() {
            if seg.topology >= topologies.len() {
                return Err(Error::arg(format!(
                    "segment {} refers to topology {} but only {} are defined",
                    j + 1,
                    seg.topology + 1,
                    topologies.len()
                )));
            }
            let last = j + 1 == segments.len();
            let infinite_ok = last && !periodic && seg.duration == f64::INFINITY;
            if !(seg.duration > 0.0 && (seg.duration.is_finite() || infinite_ok)) {
                return Err(Error::arg(format!(
                    "segment {} has duration {}; durations must be positive and finite",
                    j + 1,
                    seg.duration
                )));
            }
            if indices.last() != Some(&seg.topology) {
                starts.push(t);
                indices.push(seg.topology);
            }
            t += seg.duration;
        }
        Ok(SwitchSchedule {
            topologies,
            starts,
            indices,
            end: t,
            periodic,
        })
    }

    /// A single topology held forever.
    pub fn fixed(g: DiGraph) -> Self {
        SwitchSchedule {
            topologies: vec![g],
            starts: vec![0.0],
            indices: vec![0],
            end: f64::INFINITY,
            periodic: false,
        }
    }

    pub fn topologies(&self) -> &[DiGraph] {
        &self.topologies
    }

    pub fn n(&self) -> usize {
        self.topologies[0].n()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then_some(self.end)
    }

    /// End of a non-periodic schedule (infinite if the last segment is).
    pub fn end(&self) -> f64 {
        if self.periodic {
            f64::INFINITY
        } else {
            self.end
        }
    }

    pub fn initial_index(&self) -> usize {
        self.indices[0]
    }

    /// Switch instants within one pass (for periodic schedules, within the
    /// first period, excluding the wraparound at the period boundary).
    pub fn switch_times(&self) -> &[f64] {
        &self.starts[1..]
    }

    /// Topology active on each merged run of one pass, aligned with
    /// `[0] ++ switch_times()`.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// The merged runs of one pass as `(duration, topology)` segments.
    pub fn segments(&self) -> Vec<Segment> {
        (0..self.starts.len())
            .map(|j| {
                let stop = self.starts.get(j + 1).copied().unwrap_or(self.end);
                Segment::new(stop - self.starts[j], self.indices[j])
            })
            .collect()
    }

    /// Shortest run in one pass. Infinite trailing runs count as infinite.
    pub fn min_segment_length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|s| s.duration)
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the topology active at `t`.
    pub fn topology_at(&self, t: f64) -> Result<usize> {
        if t.is_nan() || t < 0.0 || t.is_infinite() {
            return Err(Error::arg(format!(
                "time {t} must be finite and nonnegative"
            )));
        }
        let tau = if self.periodic {
            t.rem_euclid(self.end)
        } else {
            if t > self.end {
                return Err(Error::OutOfRange { t, end: self.end });
            }
            t
        };
        let j = self.starts.partition_point(|&s| s <= tau);
        Ok(self.indices[j.saturating_sub(1)])
    }

    /// Active intervals covering `[0, horizon]`, adjacent equal topologies merged.
    pub fn intervals(&self, horizon: f64) -> Result<Vec<Interval>> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::arg(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        if !self.periodic && horizon > self.end {
            return Err(Error::OutOfRange {
                t: horizon,
                end: self.end,
            });
        }
        let runs = self.segments();
        let mut out: Vec<Interval> = Vec::new();
        let mut pass = 0u64;
        'outer: loop {
            let offset = if self.periodic {
                pass as f64 * self.end
            } else {
                0.0
            };
            for (j, seg) in runs.iter().enumerate() {
                let start = offset + self.starts[j];
                if start >= horizon {
                    break 'outer;
                }
                let end = if j + 1 < runs.len() {
                    offset + self.starts[j + 1]
                } else {
                    offset + self.end
                }
                .min(horizon);
                match out.last_mut() {
                    Some(prev) if prev.topology == seg.topology => prev.end = end,
                    _ => out.push(Interval {
                        start,
                        end,
                        topology: seg.topology,
                    }),
                }
            }
            if !self.periodic {
                break;
            }
            pass += 1;
        }
        Ok(out)
    }

    /// Switch instants of the periodic pattern as phases in `[0, period)`,
    /// including `0` when the pattern changes topology across the wraparound.
    fn cyclic_switch_phases(&self) -> Vec<f64> {
        let mut phases = Vec::new();
        if self.indices.first() != self.indices.last() {
            phases.push(0.0);
        }
        phases.extend_from_slice(self.switch_times());
        phases
    }

    /// Runs of one period with the wraparound merged, as `(start, end, topology)`;
    /// a merged wraparound run gets `end > period`.
    fn cyclic_runs(&self) -> Vec<(f64, f64, usize)> {
        let mut runs: Vec<(f64, f64, usize)> = self
            .segments()
            .iter()
            .zip(&self.starts)
            .map(|(s, &start)| (start, start + s.duration, s.topology))
            .collect();
        if runs.len() > 1 && runs[0].2 == runs[runs.len() - 1].2 {
            let first = runs.remove(0);
            let last = runs.last_mut().expect("at least one run remains");
            last.1 = self.end + first.1;
        }
        runs
    }

    /// Observed minimum time between consecutive switches and, per topology,
    /// the longest wait between a deactivation and the next activation.
    pub fn dwell_times(&self) -> DwellTimes {
        let m = self.topologies.len();
        if self.periodic {
            let phases = self.cyclic_switch_phases();
            let tau_min = match phases.len() {
                0 => f64::INFINITY,
                k => {
                    let wrap = phases[0] + self.end - phases[k - 1];
                    phases.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min)
                }
            };
            let runs = self.cyclic_runs();
            let gaps = (0..m)
                .map(|l| {
                    let mine: Vec<_> = runs.iter().filter(|r| r.2 == l).collect();
                    if mine.is_empty() {
                        return f64::INFINITY;
                    }
                    if runs.len() == 1 {
                        return 0.0;
                    }
                    let k = mine.len();
                    (0..k)
                        .map(|a| {
                            let next_start = if a + 1 < k {
                                mine[a + 1].0
                            } else {
                                mine[0].0 + self.end
                            };
                            next_start - mine[a].1
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            DwellTimes {
                tau_min,
                reactivation_gaps: gaps,
            }
        } else {
            let sw = self.switch_times();
            let tau_min = sw
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let runs = self.segments();
            let gaps = (0..m)
                .map(|l| {
                    let mine: Vec<usize> =
                        (0..runs.len()).filter(|&j| runs[j].topology == l).collect();
                    let Some(&last) = mine.last() else {
                        return f64::INFINITY;
                    };
                    if last + 1 != runs.len() {
                        // Switched away and never seen again.
                        return f64::INFINITY;
                    }
                    mine.windows(2)
                        .map(|w| self.starts[w[1]] - self.starts[w[0] + 1])
                        .fold(0.0, f64::max)
                })
                .collect();
            DwellTimes {
                tau_min,
                reactivation_gaps: gaps,
            }
        }
    }

    /// Check the switching assumptions. Failures are recorded in the report.
    pub fn validate(&self) -> ValidationReport {
        let joint_basis = has_jointly_strongly_connected_basis(&self.topologies).unwrap_or(false);
        let dwell = self.dwell_times();
        ValidationReport {
            joint_basis,
            tau_min: dwell.tau_min,
            min_segment: self.min_segment_length(),
            reactivation_gaps: dwell.reactivation_gaps,
            periodic: self.periodic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellTimes {
    pub tau_min: f64,
    pub reactivation_gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub joint_basis: bool,
    pub tau_min: f64,
    /// Shortest active run, including the run before the first switch.
    pub min_segment: f64,
    pub reactivation_gaps: Vec<f64>,
    pub periodic: bool,
}

impl ValidationReport {
    pub fn dwell_ok(&self) -> bool {
        self.tau_min > 0.0
    }

    pub fn reactivation_ok(&self) -> bool {
        self.reactivation_gaps.iter().all(|g| g.is_finite())
    }

    pub fn passed(&self) -> bool {
        self.joint_basis && self.dwell_ok() && self.reactivation_ok()
    }

    /// Warnings about runs shorter than an integrator step.
    pub fn step_warnings(&self, step: f64) -> Vec<String> {
        let mut w = Vec::new();
        if self.tau_min < step {
            w.push(format!(
                "observed dwell time {} is shorter than the integrator step {step}",
                self.tau_min
            ));
        }
        if self.min_segment < step && self.min_segment != self.tau_min {
            w.push(format!(
                "shortest active run {} is shorter than the integrator step {step}",
                self.min_segment
            ));
        }
        w
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "joint_basis = {}", self.joint_basis)?;
        writeln!(f, "tau_min = {}", self.tau_min)?;
        writeln!(f, "min_segment = {}", self.min_segment)?;
        writeln!(f, "periodic = {}", self.periodic)?;
        for (l, g) in self.reactivation_gaps.iter().enumerate() {
            writeln!(f, "reactivation_gap.G{} = {}", l + 1, g)?;
        }
        writeln!(f, "dwell_ok = {}", self.dwell_ok())?;
        writeln!(f, "reactivation_ok = {}", self.reactivation_ok())?;
        write!(
            f,
            "result = {}",
            if self.passed() { "pass" } else { "fail" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> DiGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        DiGraph::from_edges(n, &e).unwrap()
    }

    /// Period-2 pattern G1 [0,0.5), G2 [0.5,1), G3 [1,2) over three 2-node graphs.
    fn period_two() -> SwitchSchedule {
        let gs = vec![
            DiGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap(),
            DiGraph::from_edges(2, &[(1, 0, 1.0)]).unwrap(),
            ring(2),
        ];
        let segs = [
            Segment::new(0.5, 0),
            Segment::new(0.5, 1),
            Segment::new(1.0, 2),
        ];
        SwitchSchedule::new(gs, &segs, true).unwrap()
    }

    #[test]
    fn topology_at_examples() {
        let s = period_two();
        assert_eq!(s.topology_at(1.7).unwrap(), 2);
        assert_eq!(s.topology_at(2.3).unwrap(), 0);
        assert_eq!(s.topology_at(0.0).unwrap(), 0);
        assert_eq!(s.topology_at(0.5).unwrap(), 1);
        assert_eq!(s.topology_at(1.0).unwrap(), 2);
        assert_eq!(s.topology_at(2.0).unwrap(), 0);
        assert!(s.topology_at(-1.0).is_err());

        let f = SwitchSchedule::fixed(ring(3));
        for t in [0.0, 1.0, 1e6] {
            assert_eq!(f.topology_at(t).unwrap(), 0);
        }
    }

    #[test]
    fn finite_schedule_out_of_range() {
        let s = SwitchSchedule::new(vec![ring(2)], &[Segment::new(1.0, 0)], false).unwrap();
        assert_eq!(s.topology_at(1.0).unwrap(), 0);
        assert!(matches!(s.topology_at(1.5), Err(Error::OutOfRange { .. })));
        assert!(s.intervals(2.0).is_err());
    }

    #[test]
    fn construction_errors() {
        let g = || vec![ring(2)];
        assert!(SwitchSchedule::new(vec![], &[Segment::new(1.0, 0)], false).is_err());
        assert!(SwitchSchedule::new(g(), &[], false).is_err());
        assert!(SwitchSchedule::new(g(), &[Segment::new(0.0, 0)], false).is_err());
        assert!(SwitchSchedule::new(g(), &[Segment::new(1.0, 1)], false).is_err());
        assert!(SwitchSchedule::new(g(), &[Segment::new(f64::INFINITY, 0)], true).is_err());
        assert!(SwitchSchedule::new(
            g(),
            &[Segment::new(f64::INFINITY, 0), Segment::new(1.0, 0)],
            false
        )
        .is_err());
        assert!(
            SwitchSchedule::new(vec![ring(2), ring(3)], &[Segment::new(1.0, 0)], false).is_err()
        );
    }

    #[test]
    fn equal_neighbors_merge() {
        let s = SwitchSchedule::new(
            vec![ring(2), ring(2)],
            &[
                Segment::new(1.0, 0),
                Segment::new(1.0, 0),
                Segment::new(1.0, 1),
            ],
            false,
        )
        .unwrap();
        assert_eq!(s.switch_times(), &[2.0]);
        assert_eq!(s.indices(), &[0, 1]);
    }

    #[test]
    fn dwell_examples() {
        let d = period_two().dwell_times();
        assert_eq!(d.tau_min, 0.5);
        assert_eq!(d.reactivation_gaps, vec![1.5, 1.5, 1.0]);

        let d = SwitchSchedule::fixed(ring(2)).dwell_times();
        assert_eq!(d.tau_min, f64::INFINITY);
        assert_eq!(d.reactivation_gaps, vec![0.0]);
    }

    #[test]
    fn periodic_wraparound_merges() {
        // G1 [0,1), G2 [1,2), G1 [2,3) repeating: G1 really runs [2,4).
        let s = SwitchSchedule::new(
            vec![ring(2), ring(2)],
            &[
                Segment::new(1.0, 0),
                Segment::new(1.0, 1),
                Segment::new(1.0, 0),
            ],
            true,
        )
        .unwrap();
        let d = s.dwell_times();
        assert_eq!(d.tau_min, 1.0);
        assert_eq!(d.reactivation_gaps, vec![1.0, 2.0]);
        let iv = s.intervals(5.0).unwrap();
        let starts: Vec<f64> = iv.iter().map(|i| i.start).collect();
        assert_eq!(starts, vec![0.0, 1.0, 2.0, 4.0]);
        assert_eq!(iv.last().unwrap().end, 5.0);
    }

    #[test]
    fn validate_examples() {
        // Build a family that passes: each 2-node edge alone has a singleton
        // basis bicomponent, but the 2-cycle's basis covers everything.
        assert!(period_two().validate().passed());

        let e = DiGraph::edgeless(2).unwrap();
        let s = SwitchSchedule::new(
            vec![e.clone(), e],
            &[Segment::new(1.0, 0), Segment::new(1.0, 1)],
            true,
        )
        .unwrap();
        let r = s.validate();
        assert!(!r.joint_basis);
        assert!(!r.passed());

        // Topology 2 shows up once, then topology 1 holds forever.
        let s = SwitchSchedule::new(
            vec![ring(2), ring(2)],
            &[
                Segment::new(1.0, 0),
                Segment::new(1.0, 1),
                Segment::new(f64::INFINITY, 0),
            ],
            false,
        )
        .unwrap();
        let r = s.validate();
        assert!(r.joint_basis);
        assert!(!r.reactivation_ok());
        assert_eq!(r.reactivation_gaps[1], f64::INFINITY);
        assert!(!r.passed());
    }

    #[test]
    fn tiny_segment_is_reported() {
        let s = SwitchSchedule::new(
            vec![ring(2), ring(2)],
            &[
                Segment::new(1.0, 0),
                Segment::new(1e-9, 1),
                Segment::new(1.0, 0),
            ],
            true,
        )
        .unwrap();
        let r = s.validate();
        assert_eq!(r.tau_min, 1e-9 + 1.0 - 1.0);
        assert!(!r.step_warnings(1e-3).is_empty());
    }

    #[test]
    fn intervals_cover_horizon() {
        let iv = period_two().intervals(3.25).unwrap();
        let ends: Vec<f64> = iv.iter().map(|i| i.end).collect();
        assert_eq!(ends, vec![0.5, 1.0, 2.0, 2.5, 3.0, 3.25]);
        let tops: Vec<usize> = iv.iter().map(|i| i.topology).collect();
        assert_eq!(tops, vec![0, 1, 2, 0, 1, 2]);
    }
}
