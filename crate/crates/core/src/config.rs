//! TOML scenario files.
//!
//! ```toml
//! graphs = ["g1.txt", "g2.txt", { n = 2, edges = [[1, 2, 1.0]] }]
//! model = "si"
//! gains = [1, -4, -3, 6]
//!
//! [schedule]
//! periodic = true
//! segments = [{ duration = 0.5, topology = 1 }, { duration = 1.5, topology = 2 }]
//!
//! [params]
//! lambda1 = 0.4
//! lambda2 = 0.2
//! rho = 0.55          # required for model = "di"
//!
//! [initial]
//! x0 = [-1, 1.2, -3, 1.5]
//! v0 = [-0.2, -1, 0.2, 1]   # optional, double integrators only
//!
//! [sim]
//! horizon = 40.0
//! step = 1e-3
//! record_every = 5
//!
//! [output]
//! directory = "out/si"
//! ```
//!
//! Graph file paths are resolved relative to the config file. Agent and
//! topology indices are 1-based. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digraph::DiGraph;
use crate::dynamics::{ControllerParams, GainVector};
use crate::error::{Error, Result};
use crate::schedule::{Segment, SwitchSchedule};
use crate::simulate::{
    Model, Scenario, SimSettings, DEFAULT_HORIZON, DEFAULT_RECORD_EVERY, DEFAULT_STEP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File(String),
    Inline(InlineGraph),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineGraph {
    pub n: usize,
    /// `[from, to, weight]`, 1-based agents.
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub duration: f64,
    /// 1-based topology index.
    pub topology: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub periodic: bool,
    pub segments: Vec<SegmentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graphs: Vec<GraphSource>,
    pub model: String,
    pub gains: Vec<f64>,
    pub schedule: ScheduleConfig,
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// Read a graph edge-list file.
pub fn load_graph(path: &Path) -> Result<DiGraph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    DiGraph::parse_edge_list(&text, &path.display().to_string())
}

impl ScenarioConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn model(&self) -> Result<Model> {
        self.model.parse()
    }

    /// Load every referenced graph; file paths are taken relative to `base_dir`.
    pub fn load_graphs(&self, base_dir: &Path) -> Result<Vec<DiGraph>> {
        if self.graphs.is_empty() {
            return Err(Error::config("`graphs` is empty"));
        }
        self.graphs
            .iter()
            .enumerate()
            .map(|(k, src)| match src {
                GraphSource::File(p) => load_graph(&resolve(base_dir, p)),
                GraphSource::Inline(g) => {
                    let edges: Vec<_> = g
                        .edges
                        .iter()
                        .map(|&(a, b, w)| {
                            if a == 0 || b == 0 {
                                Err(Error::config(format!(
                                    "graph {}: agent indices are 1-based",
                                    k + 1
                                )))
                            } else {
                                Ok((a - 1, b - 1, w))
                            }
                        })
                        .collect::<Result<_>>()?;
                    DiGraph::from_edges(g.n, &edges)
                }
            })
            .collect()
    }

    pub fn build_schedule(&self, graphs: Vec<DiGraph>) -> Result<SwitchSchedule> {
        let segments = self
            .schedule
            .segments
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if s.topology == 0 {
                    Err(Error::config(format!(
                        "segment {}: topology indices are 1-based",
                        j + 1
                    )))
                } else {
                    Ok(Segment::new(s.duration, s.topology - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SwitchSchedule::new(graphs, &segments, self.schedule.periodic)
    }

    pub fn controller_params(&self, model: Model) -> Result<ControllerParams> {
        let p = &self.params;
        match (model, p.rho) {
            (_, Some(rho)) => ControllerParams::new(p.lambda1, p.lambda2, rho),
            (Model::Si, None) => ControllerParams::single_integrator(p.lambda1, p.lambda2),
            (Model::Di, None) => Err(Error::config("model `di` needs params.rho")),
        }
    }

    /// Build the validated scenario.
    pub fn to_scenario(&self, base_dir: &Path) -> Result<Scenario> {
        let model = self.model()?;
        let schedule = self.build_schedule(self.load_graphs(base_dir)?)?;
        let params = self.controller_params(model)?;
        Scenario::new(
            schedule,
            GainVector::new(self.gains.clone())?,
            params,
            model,
            self.initial.x0.clone(),
            self.initial.v0.clone(),
            SimSettings {
                horizon: self.sim.horizon,
                step: self.sim.step,
                record_every: self.sim.record_every,
            },
        )
    }

    /// Self-contained config (graphs inlined) that rebuilds `sc` exactly.
    pub fn from_scenario(sc: &Scenario, output: Option<String>) -> Self {
        let graphs = sc
            .schedule()
            .topologies()
            .iter()
            .map(|g| {
                GraphSource::Inline(InlineGraph {
                    n: g.n(),
                    edges: g
                        .edges()
                        .into_iter()
                        .map(|(a, b, w)| (a + 1, b + 1, w))
                        .collect(),
                })
            })
            .collect();
        let segments = sc
            .schedule()
            .segments()
            .into_iter()
            .map(|s| SegmentConfig {
                duration: s.duration,
                topology: s.topology + 1,
            })
            .collect();
        let s = sc.settings();
        let p = sc.params();
        ScenarioConfig {
            graphs,
            model: sc.model().as_str().to_string(),
            gains: sc.gains().as_slice().to_vec(),
            schedule: ScheduleConfig {
                periodic: sc.schedule().is_periodic(),
                segments,
            },
            params: ParamsConfig {
                lambda1: p.lambda1(),
                lambda2: p.lambda2(),
                rho: Some(p.rho()),
            },
            initial: InitialConfig {
                x0: sc.x0().to_vec(),
                v0: Some(sc.v0().to_vec()),
            },
            sim: SimConfig {
                horizon: s.horizon,
                step: s.step,
                record_every: s.record_every,
            },
            output: output.map(|directory| OutputConfig { directory }),
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
