//! Closed-loop simulation over a switching schedule.
//!
//! Integration runs segment by segment: each interval on which one topology
//! is active is covered by fixed RK4 steps whose last step is shortened to land
//! exactly on the next switch instant. The augmented state is carried across
//! switches unchanged.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::digraph::{DiGraph, Laplacian};
use crate::dynamics::{self, ControllerParams, GainVector};
use crate::error::{Error, Result};
use crate::integrator::{steps_for, Rk4};
use crate::schedule::SwitchSchedule;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 40.0;
pub const DEFAULT_RECORD_EVERY: usize = 5;
/// Any state component beyond this magnitude aborts the run.
pub const DIVERGENCE_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Single integrators, `x' = b u`.
    Si,
    /// Double integrators, `x' = v`, `v' = b u`.
    Di,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Si => "si",
            Model::Di => "di",
        }
    }

    /// Per-agent block count of the augmented state.
    pub fn blocks(self) -> usize {
        match self {
            Model::Si => 3,
            Model::Di => 4,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(Model::Si),
            "di" => Ok(Model::Di),
            other => Err(Error::arg(format!(
                "unknown model `{other}` (expected si or di)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub horizon: f64,
    pub step: f64,
    pub record_every: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

/// A complete, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    schedule: SwitchSchedule,
    gains: GainVector,
    params: ControllerParams,
    model: Model,
    x0: Vec<f64>,
    v0: Vec<f64>,
    settings: SimSettings,
}

impl Scenario {
    /// `v0` is only used by double-integrator runs and defaults to zero.
    pub fn new(
        schedule: SwitchSchedule,
        gains: GainVector,
        params: ControllerParams,
        model: Model,
        x0: Vec<f64>,
        v0: Option<Vec<f64>>,
        settings: SimSettings,
    ) -> Result<Self> {
        let n = schedule.n();
        let dim = |what: &str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{what} has {got} entries but the graphs have {n} agents"
                )))
            }
        };
        dim("gains", gains.len())?;
        dim("x0", x0.len())?;
        let v0 = v0.unwrap_or_else(|| vec![0.0; n]);
        dim("v0", v0.len())?;
        if x0.iter().chain(&v0).any(|v| !v.is_finite()) {
            return Err(Error::config("initial conditions must be finite"));
        }
        let SimSettings {
            horizon,
            step,
            record_every,
        } = settings;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon {horizon} must be positive")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::config(format!("step {step} must be positive")));
        }
        if record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if !schedule.is_periodic() && horizon > schedule.end() {
            return Err(Error::config(format!(
                "horizon {horizon} runs past the end of the schedule ({})",
                schedule.end()
            )));
        }
        let shortest = schedule.min_segment_length();
        if step > shortest {
            return Err(Error::config(format!(
                "step {step} exceeds the shortest active interval {shortest}"
            )));
        }
        Ok(Scenario {
            schedule,
            gains,
            params,
            model,
            x0,
            v0,
            settings,
        })
    }

    pub fn schedule(&self) -> &SwitchSchedule {
        &self.schedule
    }

    pub fn gains(&self) -> &GainVector {
        &self.gains
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    pub fn settings(&self) -> SimSettings {
        self.settings
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    /// Copy with different model/horizon/step, revalidated.
    pub fn with_overrides(
        &self,
        model: Option<Model>,
        horizon: Option<f64>,
        step: Option<f64>,
    ) -> Result<Self> {
        let mut settings = self.settings;
        if let Some(h) = horizon {
            settings.horizon = h;
        }
        if let Some(s) = step {
            settings.step = s;
        }
        Scenario::new(
            self.schedule.clone(),
            self.gains.clone(),
            self.params,
            model.unwrap_or(self.model),
            self.x0.clone(),
            Some(self.v0.clone()),
            settings,
        )
    }

    /// Same scenario with different plant gains.
    pub fn with_gains(&self, gains: GainVector) -> Result<Self> {
        Scenario::new(
            self.schedule.clone(),
            gains,
            self.params,
            self.model,
            self.x0.clone(),
            Some(self.v0.clone()),
            self.settings,
        )
    }

    fn initial_state(&self) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; self.model.blocks() * n];
        y[..n].copy_from_slice(&self.x0);
        if self.model == Model::Di {
            y[n..2 * n].copy_from_slice(&self.v0);
        }
        y
    }
}

/// Sampled closed-loop solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: Model,
    pub n: usize,
    pub params: ControllerParams,
    pub times: Vec<f64>,
    /// Flat augmented state per sample: `[x, z1, z2]` or `[x, v, zbar1, zbar2]`.
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// `S_i` (SI) or `R_i` (DI) per sample.
    pub nussbaum: Vec<Vec<f64>>,
    /// 0-based topology index in force from each sample time onward.
    pub active_topology: Vec<usize>,
    /// Laplacians of the schedule's topologies, indexed like `active_topology`.
    pub laplacians: Vec<Laplacian>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn positions(&self, k: usize) -> &[f64] {
        &self.states[k][..self.n]
    }

    /// Velocities of sample `k` for DI runs.
    pub fn velocities(&self, k: usize) -> Option<&[f64]> {
        (self.model == Model::Di).then(|| &self.states[k][self.n..2 * self.n])
    }

    /// First integral state (`z1` or `zbar1`) of sample `k`.
    pub fn integral1(&self, k: usize) -> &[f64] {
        let n = self.n;
        match self.model {
            Model::Si => &self.states[k][n..2 * n],
            Model::Di => &self.states[k][2 * n..3 * n],
        }
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Header `t,topology,x1..xn[,v1..vn],u1..un,S1..Sn`.
    pub fn csv_header(&self) -> String {
        let n = self.n;
        let mut cols = vec!["t".to_string(), "topology".to_string()];
        cols.extend((1..=n).map(|i| format!("x{i}")));
        if self.model == Model::Di {
            cols.extend((1..=n).map(|i| format!("v{i}")));
        }
        cols.extend((1..=n).map(|i| format!("u{i}")));
        cols.extend((1..=n).map(|i| format!("S{i}")));
        cols.join(",")
    }

    /// One row per sample; reals at 17 significant digits, topology 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            line.push_str(&format!(
                "{:.16e},{}",
                self.times[k],
                self.active_topology[k] + 1
            ));
            let width = match self.model {
                Model::Si => self.n,
                Model::Di => 2 * self.n,
            };
            for v in self.states[k][..width]
                .iter()
                .chain(&self.controls[k])
                .chain(&self.nussbaum[k])
            {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

struct Recorder<'a> {
    model: Model,
    n: usize,
    params: &'a ControllerParams,
    laplacians: &'a [Laplacian],
    traj: Trajectory,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, y: &[f64], topology: usize) {
        let l = &self.laplacians[topology];
        let (u, s) = match self.model {
            Model::Si => (
                dynamics::si_controls(y, l, self.params),
                dynamics::si_nussbaum_values(y, self.n, self.params),
            ),
            Model::Di => (
                dynamics::di_controls(y, l, self.params),
                dynamics::di_nussbaum_values(y, self.n, self.params),
            ),
        };
        self.traj.times.push(t);
        self.traj.states.push(y.to_vec());
        self.traj.controls.push(u);
        self.traj.nussbaum.push(s);
        self.traj.active_topology.push(topology);
    }
}

fn check_finite(y: &[f64], t: f64) -> Result<()> {
    for v in y {
        if !v.is_finite() {
            return Err(Error::Diverged {
                time: t,
                reason: "non-finite state".into(),
            });
        }
        if v.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged {
                time: t,
                reason: format!("|state| exceeded {DIVERGENCE_BOUND:e}"),
            });
        }
    }
    Ok(())
}

/// Run the closed loop over `[0, horizon]`.
///
/// Samples are taken at `t = 0`, after every `record_every`-th step, and at
/// every switch instant and the horizon. Each sample is labeled with the
/// topology in force from that instant on.
pub fn simulate(sc: &Scenario) -> Result<Trajectory> {
    let n = sc.n();
    let model = sc.model;
    let SimSettings {
        horizon,
        step,
        record_every,
    } = sc.settings;
    let laplacians: Vec<Laplacian> = sc
        .schedule
        .topologies()
        .iter()
        .map(DiGraph::laplacian)
        .collect();
    let intervals = sc.schedule.intervals(horizon)?;
    let b = sc.gains.as_slice();
    let p = &sc.params;

    let mut rec = Recorder {
        model,
        n,
        params: p,
        laplacians: &laplacians,
        traj: Trajectory {
            model,
            n,
            params: *p,
            times: Vec::new(),
            states: Vec::new(),
            controls: Vec::new(),
            nussbaum: Vec::new(),
            active_topology: Vec::new(),
            laplacians: laplacians.clone(),
        },
    };

    let mut y = sc.initial_state();
    let mut rk = Rk4::new(y.len());
    let mut counter = 0usize;
    rec.record(0.0, &y, intervals[0].topology);

    for (j, iv) in intervals.iter().enumerate() {
        let l = &laplacians[iv.topology];
        let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| match model {
            Model::Si => dynamics::si_rhs_into(y, l, b, p, dy),
            Model::Di => dynamics::di_rhs_into(y, l, b, p, dy),
        };
        let steps = steps_for(iv.end - iv.start, step);
        for s in 0..steps {
            let a = iv.start + s as f64 * step;
            let last = s + 1 == steps;
            let z = if last {
                iv.end
            } else {
                iv.start + (s + 1) as f64 * step
            };
            rk.step(&mut rhs, a, &mut y, z - a);
            check_finite(&y, z)?;
            counter += 1;
            if last {
                let next = match intervals.get(j + 1) {
                    Some(nx) => nx.topology,
                    None => sc.schedule.topology_at(z).unwrap_or(iv.topology),
                };
                rec.record(z, &y, next);
            } else if counter.is_multiple_of(record_every) {
                rec.record(z, &y, iv.topology);
            }
        }
    }
    Ok(rec.traj)
}

/// Run on a single fixed graph; logs a warning when it is not strongly connected.
#[allow(clippy::too_many_arguments)]
pub fn simulate_fixed_graph(
    graph: DiGraph,
    gains: GainVector,
    params: ControllerParams,
    model: Model,
    x0: Vec<f64>,
    v0: Option<Vec<f64>>,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if !graph.is_strongly_connected() {
        log::warn!("fixed graph is not strongly connected; consensus is not guaranteed");
    }
    let sc = Scenario::new(
        SwitchSchedule::fixed(graph),
        gains,
        params,
        model,
        x0,
        v0,
        SimSettings {
            horizon,
            step,
            record_every: DEFAULT_RECORD_EVERY,
        },
    )?;
    simulate(&sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Segment;

    fn ring(n: usize) -> DiGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        DiGraph::from_edges(n, &e).unwrap()
    }

    fn switching(model: Model, horizon: f64) -> Scenario {
        let gs = vec![
            DiGraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            DiGraph::from_edges(3, &[(1, 2, 1.0), (2, 1, 1.0)]).unwrap(),
        ];
        let sched =
            SwitchSchedule::new(gs, &[Segment::new(0.3, 0), Segment::new(0.45, 1)], true).unwrap();
        Scenario::new(
            sched,
            GainVector::new(vec![1.0, -2.0, 3.0]).unwrap(),
            ControllerParams::new(0.4, 0.2, 0.55).unwrap(),
            model,
            vec![-1.0, 0.5, 1.0],
            Some(vec![0.1, 0.0, -0.1]),
            SimSettings {
                horizon,
                step: 1e-2,
                record_every: 7,
            },
        )
        .unwrap()
    }

    #[test]
    fn scenario_validation() {
        let sc = switching(Model::Si, 2.0);
        assert!(sc.with_overrides(None, Some(-1.0), None).is_err());
        assert!(sc.with_overrides(None, None, Some(0.5)).is_err());
        assert!(sc.with_gains(GainVector::new(vec![1.0]).unwrap()).is_err());
        let finite = SwitchSchedule::new(vec![ring(3)], &[Segment::new(1.0, 0)], false).unwrap();
        let r = Scenario::new(
            finite,
            GainVector::new(vec![1.0; 3]).unwrap(),
            ControllerParams::new(0.4, 0.2, 0.55).unwrap(),
            Model::Si,
            vec![0.0; 3],
            None,
            SimSettings::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn switch_times_are_samples_and_labels_right_continuous() {
        for model in [Model::Si, Model::Di] {
            let sc = switching(model, 3.0);
            let tr = simulate(&sc).unwrap();
            assert_eq!(tr.times[0], 0.0);
            assert_eq!(*tr.times.last().unwrap(), 3.0);
            assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
            for iv in sc.schedule().intervals(3.0).unwrap() {
                let k = tr
                    .times
                    .iter()
                    .position(|&t| t == iv.start)
                    .expect("switch sampled");
                assert_eq!(tr.active_topology[k], iv.topology);
            }
        }
    }

    #[test]
    fn consensus_state_is_equilibrium() {
        let sc = switching(Model::Di, 2.0);
        let sc = Scenario::new(
            sc.schedule().clone(),
            sc.gains().clone(),
            *sc.params(),
            Model::Di,
            vec![0.8; 3],
            None,
            sc.settings(),
        )
        .unwrap();
        let tr = simulate(&sc).unwrap();
        for k in 0..tr.len() {
            assert_eq!(tr.positions(k), &[0.8; 3]);
            assert_eq!(tr.velocities(k).unwrap(), &[0.0; 3]);
        }
    }

    #[test]
    fn deterministic() {
        let sc = switching(Model::Si, 2.0);
        assert_eq!(simulate(&sc).unwrap(), simulate(&sc).unwrap());
    }

    #[test]
    fn divergence_reported() {
        // Huge initial spread pushes S far up; an enormous step makes RK4 blow up.
        let sc = Scenario::new(
            SwitchSchedule::fixed(ring(2)),
            GainVector::new(vec![1.0, 1.0]).unwrap(),
            ControllerParams::new(5.0, 5.0, 1.0).unwrap(),
            Model::Si,
            vec![-50.0, 50.0],
            None,
            SimSettings {
                horizon: 10.0,
                step: 0.5,
                record_every: 1,
            },
        )
        .unwrap();
        assert!(matches!(simulate(&sc), Err(Error::Diverged { .. })));
    }

    #[test]
    fn csv_layout() {
        let tr = simulate(&switching(Model::Di, 1.0)).unwrap();
        assert_eq!(
            tr.csv_header(),
            "t,topology,x1,x2,x3,v1,v2,v3,u1,u2,u3,S1,S2,S3"
        );
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), tr.len() + 1);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 14);
        assert_eq!(first[1], "1");
        assert_eq!(first[2].parse::<f64>().unwrap(), -1.0);
    }

    #[test]
    fn model_parsing() {
        assert_eq!("SI".parse::<Model>().unwrap(), Model::Si);
        assert_eq!("di".parse::<Model>().unwrap(), Model::Di);
        assert!("tri".parse::<Model>().is_err());
    }
}
