//! Diagnostics that turn the asymptotic claims (consensus, bounded Nussbaum
//! arguments, vanishing products and velocities) into finite-horizon numbers.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use crate::dynamics::GainVector;
use crate::error::{Error, Result};
use crate::simulate::{Model, Trajectory};

/// Fraction of the horizon, measured from the end, used for tail statistics.
pub const TAIL_FRACTION: f64 = 0.1;

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// `max_{i,k} |x_i - x_k|` per sample.
pub fn consensus_diameter(tr: &Trajectory) -> Vec<f64> {
    (0..tr.len()).map(|k| spread(tr.positions(k))).collect()
}

/// `max_{i,k} |v_i - v_k|` per sample, DI only.
pub fn velocity_diameter(tr: &Trajectory) -> Option<Vec<f64>> {
    (tr.model == Model::Di).then(|| {
        (0..tr.len())
            .map(|k| spread(tr.velocities(k).unwrap_or(&[])))
            .collect()
    })
}

/// Maximum of `series` over samples in the last [`TAIL_FRACTION`] of the horizon.
pub fn tail_max(times: &[f64], series: &[f64]) -> f64 {
    let Some(&t_end) = times.last() else {
        return 0.0;
    };
    let cutoff = (1.0 - TAIL_FRACTION) * t_end;
    times
        .iter()
        .zip(series)
        .filter(|(&t, _)| t >= cutoff)
        .fold(0.0, |m, (_, &v)| m.max(v))
}

/// `2 (pi + 1/|b_i|)`, the bound on how far `S_i` (or `R_i`) can drift.
pub fn nussbaum_bound(b_i: f64) -> f64 {
    2.0 * (PI + 1.0 / b_i.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentBound {
    pub bound: f64,
    pub max_deviation: f64,
    /// `bound - max_deviation`; nonnegative when the bound holds.
    pub margin: f64,
    pub violations: usize,
}

impl AgentBound {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NussbaumBoundReport {
    pub agents: Vec<AgentBound>,
}

impl NussbaumBoundReport {
    pub fn passed(&self) -> bool {
        self.agents.iter().all(AgentBound::passed)
    }

    pub fn violations(&self) -> usize {
        self.agents.iter().map(|a| a.violations).sum()
    }
}

/// Check `|S_i(t) - S_i(0)| <= 2 (pi + 1/|b_i|)` at every sample.
pub fn nussbaum_bound_check(tr: &Trajectory, b: &GainVector) -> Result<NussbaumBoundReport> {
    if b.len() != tr.n {
        return Err(Error::Dimension {
            expected: tr.n,
            got: b.len(),
        });
    }
    let agents = b
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &bi)| {
            let bound = nussbaum_bound(bi);
            let s0 = tr.nussbaum.first().map_or(0.0, |s| s[i]);
            let mut max_deviation = 0.0f64;
            let mut violations = 0;
            for s in &tr.nussbaum {
                let dev = (s[i] - s0).abs();
                max_deviation = max_deviation.max(dev);
                if dev > bound {
                    violations += 1;
                }
            }
            AgentBound {
                bound,
                max_deviation,
                margin: bound - max_deviation,
                violations,
            }
        })
        .collect();
    Ok(NussbaumBoundReport { agents })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDecay {
    /// `max_i |x_i e_i|` (SI) or `max_i |q_i r_i|` (DI) per sample.
    pub series: Vec<f64>,
    pub tail: f64,
}

/// Per-agent products `x_i e_i` (SI) or `q_i r_i` (DI) at sample `k`,
/// evaluated with topology `topology`.
fn products_at(tr: &Trajectory, k: usize, topology: usize) -> Vec<f64> {
    let n = tr.n;
    let l = &tr.laplacians[topology];
    let y = &tr.states[k];
    match tr.model {
        Model::Si => (0..n).map(|i| y[i] * l.row_dot(i, &y[..n])).collect(),
        Model::Di => {
            let rho = tr.params.rho();
            let (x, v) = (&y[..n], &y[n..2 * n]);
            (0..n)
                .map(|i| (v[i] + rho * x[i]) * (l.row_dot(i, v) + rho * l.row_dot(i, x)))
                .collect()
        }
    }
}

pub fn product_decay(tr: &Trajectory) -> ProductDecay {
    let series: Vec<f64> = (0..tr.len())
        .map(|k| {
            products_at(tr, k, tr.active_topology[k])
                .iter()
                .fold(0.0f64, |m, p| m.max(p.abs()))
        })
        .collect();
    let tail = tail_max(&tr.times, &series);
    ProductDecay { series, tail }
}

/// `max_i |v_i|` over the tail of a DI run.
pub fn velocity_decay(tr: &Trajectory) -> Result<f64> {
    if tr.model != Model::Di {
        return Err(Error::Model(
            "velocity decay needs a double-integrator trajectory".into(),
        ));
    }
    let series: Vec<f64> = (0..tr.len())
        .map(|k| {
            tr.velocities(k)
                .unwrap_or(&[])
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    Ok(tail_max(&tr.times, &series))
}

/// Relative gap per agent between the recorded first integral state and a
/// trapezoidal quadrature of its integrand over the recorded samples.
///
/// Between samples `k` and `k + 1` the topology labeled at `k` is in force,
/// so both endpoints are evaluated with it.
pub fn integral_state_check(tr: &Trajectory) -> Vec<f64> {
    let n = tr.n;
    let mut acc = vec![0.0; n];
    let integrand = |k: usize, top: usize| -> Vec<f64> {
        let prods = products_at(tr, k, top);
        match tr.model {
            Model::Si => prods.iter().map(|p| p * p).collect(),
            Model::Di => {
                let l1 = tr.params.lambda1();
                let v = tr.velocities(k).unwrap_or(&[]);
                prods
                    .iter()
                    .zip(v)
                    .map(|(p, vi)| l1 * p * p + vi * vi)
                    .collect()
            }
        }
    };
    for k in 0..tr.len().saturating_sub(1) {
        let top = tr.active_topology[k];
        let h = tr.times[k + 1] - tr.times[k];
        let a = integrand(k, top);
        let b = integrand(k + 1, top);
        for i in 0..n {
            acc[i] += 0.5 * h * (a[i] + b[i]);
        }
    }
    let last = tr.len() - 1;
    let recorded = tr.integral1(last);
    (0..n)
        .map(|i| {
            let scale = recorded[i].abs().max(f64::MIN_POSITIVE);
            (acc[i] - recorded[i]).abs() / scale
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupNorms {
    pub x: f64,
    pub v: Option<f64>,
    pub u: f64,
    pub nussbaum: f64,
}

fn sup(rows: impl Iterator<Item = f64>) -> f64 {
    rows.fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sup_norms(tr: &Trajectory) -> SupNorms {
    SupNorms {
        x: sup((0..tr.len()).flat_map(|k| tr.positions(k).iter().copied())),
        v: (tr.model == Model::Di).then(|| {
            sup((0..tr.len()).flat_map(|k| tr.velocities(k).unwrap_or(&[]).iter().copied()))
        }),
        u: sup(tr.controls.iter().flatten().copied()),
        nussbaum: sup(tr.nussbaum.iter().flatten().copied()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub times: Vec<f64>,
    pub consensus_diameter: Vec<f64>,
    pub velocity_diameter: Option<Vec<f64>>,
    pub nussbaum: NussbaumBoundReport,
    pub product: ProductDecay,
    pub velocity_tail: Option<f64>,
    pub boundedness: SupNorms,
}

impl DiagnosticsReport {
    pub fn new(tr: &Trajectory, b: &GainVector) -> Result<Self> {
        Ok(DiagnosticsReport {
            times: tr.times.clone(),
            consensus_diameter: consensus_diameter(tr),
            velocity_diameter: velocity_diameter(tr),
            nussbaum: nussbaum_bound_check(tr, b)?,
            product: product_decay(tr),
            velocity_tail: velocity_decay(tr).ok(),
            boundedness: sup_norms(tr),
        })
    }

    pub fn initial_diameter(&self) -> f64 {
        self.consensus_diameter.first().copied().unwrap_or(0.0)
    }

    pub fn final_diameter(&self) -> f64 {
        self.consensus_diameter.last().copied().unwrap_or(0.0)
    }

    /// Time series as CSV: `t,diameter[,velocity_diameter],product`.
    pub fn series_csv(&self) -> String {
        let mut s = String::from("t,diameter");
        if self.velocity_diameter.is_some() {
            s.push_str(",velocity_diameter");
        }
        s.push_str(",product\n");
        for k in 0..self.times.len() {
            let _ = write!(
                s,
                "{:.16e},{:.16e}",
                self.times[k], self.consensus_diameter[k]
            );
            if let Some(vd) = &self.velocity_diameter {
                let _ = write!(s, ",{:.16e}", vd[k]);
            }
            let _ = writeln!(s, ",{:.16e}", self.product.series[k]);
        }
        s
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon = {}", self.times.last().copied().unwrap_or(0.0))?;
        writeln!(f, "initial_diameter = {}", self.initial_diameter())?;
        writeln!(f, "final_diameter = {}", self.final_diameter())?;
        if let Some(vd) = &self.velocity_diameter {
            writeln!(
                f,
                "final_velocity_diameter = {}",
                vd.last().copied().unwrap_or(0.0)
            )?;
        }
        writeln!(f, "product_tail = {}", self.product.tail)?;
        if let Some(v) = self.velocity_tail {
            writeln!(f, "velocity_tail = {v}")?;
        }
        for (i, a) in self.nussbaum.agents.iter().enumerate() {
            writeln!(f, "nussbaum_bound.{} = {}", i + 1, a.bound)?;
            writeln!(f, "nussbaum_max_deviation.{} = {}", i + 1, a.max_deviation)?;
            writeln!(f, "nussbaum_margin.{} = {}", i + 1, a.margin)?;
        }
        writeln!(f, "nussbaum_bound_ok = {}", self.nussbaum.passed())?;
        writeln!(f, "sup_x = {}", self.boundedness.x)?;
        if let Some(v) = self.boundedness.v {
            writeln!(f, "sup_v = {v}")?;
        }
        writeln!(f, "sup_u = {}", self.boundedness.u)?;
        write!(f, "sup_nussbaum = {}", self.boundedness.nussbaum)
    }
}
