//! Nonlinear-PI control laws and closed-loop vector fields.
//!
//! The integral terms of both controllers are carried as extra ODE states, so
//! every law here is a memoryless function of the augmented state and the
//! active Laplacian. Plant gains `b_i` live in [`GainVector`] and are only
//! consumed by the `*_rhs` functions; the control laws never see them.

use crate::digraph::Laplacian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    lambda1: f64,
    lambda2: f64,
    rho: f64,
}

impl ControllerParams {
    pub fn new(lambda1: f64, lambda2: f64, rho: f64) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("rho", rho)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(ControllerParams {
            lambda1,
            lambda2,
            rho,
        })
    }

    /// Parameters for single-integrator runs, where `rho` is unused (set to 1).
    pub fn single_integrator(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(lambda1, lambda2, 1.0)
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Input gains `b_i` of the plant. Their signs are unknown to the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::arg("gain vector is empty"));
        }
        if let Some((i, v)) = b
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v != 0.0))
        {
            return Err(Error::arg(format!(
                "gain b[{i}] = {v} must be finite and nonzero"
            )));
        }
        Ok(GainVector(b))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Single-integrator augmented state `[x, z1, z2]`, stored flat.
///
/// `z1_i` integrates `(x_i e_i)^2` and `z2_i` integrates `x_i e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiState {
    n: usize,
    data: Vec<f64>,
}

impl SiState {
    pub fn new(x: &[f64], z1: &[f64], z2: &[f64]) -> Result<Self> {
        let n = x.len();
        check_len(n, z1.len())?;
        check_len(n, z2.len())?;
        if z1.iter().any(|&z| z < 0.0) {
            return Err(Error::arg("z1 integrates a square and must be nonnegative"));
        }
        Ok(SiState {
            n,
            data: [x, z1, z2].concat(),
        })
    }

    /// Positions `x0` with zero integral states.
    pub fn initial(x0: &[f64]) -> Self {
        let n = x0.len();
        let mut data = vec![0.0; 3 * n];
        data[..n].copy_from_slice(x0);
        SiState { n, data }
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self> {
        if !data.len().is_multiple_of(3) {
            return Err(Error::arg("flat SI state length must be a multiple of 3"));
        }
        Ok(SiState {
            n: data.len() / 3,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.data[..self.n]
    }

    pub fn z1(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }

    pub fn z2(&self) -> &[f64] {
        &self.data[2 * self.n..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Double-integrator augmented state `[x, v, zbar1, zbar2]`, stored flat.
///
/// `zbar1_i` integrates `lambda1 (q_i r_i)^2 + v_i^2`, `zbar2_i` integrates `q_i r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiState {
    n: usize,
    data: Vec<f64>,
}

impl DiState {
    pub fn new(x: &[f64], v: &[f64], zbar1: &[f64], zbar2: &[f64]) -> Result<Self> {
        let n = x.len();
        check_len(n, v.len())?;
        check_len(n, zbar1.len())?;
        check_len(n, zbar2.len())?;
        if zbar1.iter().any(|&z| z < 0.0) {
            return Err(Error::arg(
                "zbar1 integrates squares and must be nonnegative",
            ));
        }
        Ok(DiState {
            n,
            data: [x, v, zbar1, zbar2].concat(),
        })
    }

    pub fn initial(x0: &[f64], v0: &[f64]) -> Result<Self> {
        let n = x0.len();
        check_len(n, v0.len())?;
        let mut data = vec![0.0; 4 * n];
        data[..n].copy_from_slice(x0);
        data[n..2 * n].copy_from_slice(v0);
        Ok(DiState { n, data })
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self> {
        if !data.len().is_multiple_of(4) {
            return Err(Error::arg("flat DI state length must be a multiple of 4"));
        }
        Ok(DiState {
            n: data.len() / 4,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.data[..self.n]
    }

    pub fn v(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }

    pub fn zbar1(&self) -> &[f64] {
        &self.data[2 * self.n..3 * self.n]
    }

    pub fn zbar2(&self) -> &[f64] {
        &self.data[3 * self.n..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `e = L y`.
pub fn neighborhood_errors(l: &Laplacian, y: &[f64]) -> Result<Vec<f64>> {
    l.apply(y)
}

/// `S_i = x_i^2 / 2 + lambda1 z1_i + lambda2 z2_i^2 / 2`.
pub fn si_nussbaum_value(x_i: f64, z1_i: f64, z2_i: f64, p: &ControllerParams) -> f64 {
    0.5 * x_i * x_i + p.lambda1 * z1_i + 0.5 * p.lambda2 * z2_i * z2_i
}

fn si_control_scalar(x: f64, z1: f64, z2: f64, e: f64, p: &ControllerParams) -> f64 {
    let s = si_nussbaum_value(x, z1, z2, p);
    s * s.cos() * e * (p.lambda1 * x * e + p.lambda2 * z2)
}

/// `u_i = S_i cos(S_i) e_i (lambda1 x_i e_i + lambda2 z2_i)`.
///
/// `e` is the neighborhood-error vector for the active topology.
pub fn si_control(i: usize, st: &SiState, e: &[f64], p: &ControllerParams) -> f64 {
    si_control_scalar(st.x()[i], st.z1()[i], st.z2()[i], e[i], p)
}

/// Closed-loop single-integrator vector field on a flat `[x, z1, z2]` slice.
pub(crate) fn si_rhs_into(
    y: &[f64],
    l: &Laplacian,
    b: &[f64],
    p: &ControllerParams,
    dy: &mut [f64],
) {
    let n = b.len();
    let (x, rest) = y.split_at(n);
    let (z1, z2) = rest.split_at(n);
    for i in 0..n {
        let e = l.row_dot(i, x);
        let xe = x[i] * e;
        dy[i] = b[i] * si_control_scalar(x[i], z1[i], z2[i], e, p);
        dy[n + i] = xe * xe;
        dy[2 * n + i] = xe;
    }
}

/// Time derivative of the single-integrator augmented state under topology `l`.
pub fn si_rhs(
    st: &SiState,
    l: &Laplacian,
    b: &GainVector,
    p: &ControllerParams,
) -> Result<SiState> {
    check_len(st.n, l.n())?;
    check_len(st.n, b.len())?;
    let mut d = vec![0.0; 3 * st.n];
    si_rhs_into(&st.data, l, b.as_slice(), p, &mut d);
    Ok(SiState { n: st.n, data: d })
}

fn di_nussbaum_scalar(x: f64, v: f64, zb1: f64, zb2: f64, p: &ControllerParams) -> f64 {
    let q = v + p.rho * x;
    0.5 * q * q + 0.5 * p.rho * x * x + zb1 + 0.5 * p.lambda2 * zb2 * zb2
}

/// `R_i = (v_i + rho x_i)^2 / 2 + rho x_i^2 / 2 + zbar1_i + lambda2 zbar2_i^2 / 2`.
pub fn di_nussbaum_value(st: &DiState, i: usize, p: &ControllerParams) -> f64 {
    di_nussbaum_scalar(st.x()[i], st.v()[i], st.zbar1()[i], st.zbar2()[i], p)
}

/// Returns `(u_i, q_i r_i)` given agent `i`'s own states and `r_i`.
fn di_control_scalar(
    x: f64,
    v: f64,
    zb1: f64,
    zb2: f64,
    r: f64,
    p: &ControllerParams,
) -> (f64, f64) {
    let rr = di_nussbaum_scalar(x, v, zb1, zb2, p);
    let q = v + p.rho * x;
    let qr = q * r;
    let u = rr * rr.cos() * ((p.rho + 1.0) * v + r * (p.lambda1 * qr + p.lambda2 * zb2));
    (u, qr)
}

/// `u_i = R_i cos(R_i) [(rho + 1) v_i + r_i (lambda1 q_i r_i + lambda2 zbar2_i)]`
/// with `q_i = v_i + rho x_i` and `r_i = (L v)_i + rho (L x)_i`.
///
/// Only row `i` of `l` is read.
pub fn di_control(i: usize, st: &DiState, l: &Laplacian, p: &ControllerParams) -> f64 {
    let r = l.row_dot(i, st.v()) + p.rho * l.row_dot(i, st.x());
    di_control_scalar(st.x()[i], st.v()[i], st.zbar1()[i], st.zbar2()[i], r, p).0
}

/// Closed-loop double-integrator vector field on a flat `[x, v, zbar1, zbar2]` slice.
pub(crate) fn di_rhs_into(
    y: &[f64],
    l: &Laplacian,
    b: &[f64],
    p: &ControllerParams,
    dy: &mut [f64],
) {
    let n = b.len();
    let x = &y[..n];
    let v = &y[n..2 * n];
    let zb1 = &y[2 * n..3 * n];
    let zb2 = &y[3 * n..];
    for i in 0..n {
        let r = l.row_dot(i, v) + p.rho * l.row_dot(i, x);
        let (u, qr) = di_control_scalar(x[i], v[i], zb1[i], zb2[i], r, p);
        dy[i] = v[i];
        dy[n + i] = b[i] * u;
        dy[2 * n + i] = p.lambda1 * qr * qr + v[i] * v[i];
        dy[3 * n + i] = qr;
    }
}

/// Time derivative of the double-integrator augmented state under topology `l`.
pub fn di_rhs(
    st: &DiState,
    l: &Laplacian,
    b: &GainVector,
    p: &ControllerParams,
) -> Result<DiState> {
    check_len(st.n, l.n())?;
    check_len(st.n, b.len())?;
    let mut d = vec![0.0; 4 * st.n];
    di_rhs_into(&st.data, l, b.as_slice(), p, &mut d);
    Ok(DiState { n: st.n, data: d })
}

/// `u` for every agent given a flat SI state.
pub(crate) fn si_controls(y: &[f64], l: &Laplacian, p: &ControllerParams) -> Vec<f64> {
    let n = l.n();
    (0..n)
        .map(|i| si_control_scalar(y[i], y[n + i], y[2 * n + i], l.row_dot(i, &y[..n]), p))
        .collect()
}

pub(crate) fn si_nussbaum_values(y: &[f64], n: usize, p: &ControllerParams) -> Vec<f64> {
    (0..n)
        .map(|i| si_nussbaum_value(y[i], y[n + i], y[2 * n + i], p))
        .collect()
}

pub(crate) fn di_controls(y: &[f64], l: &Laplacian, p: &ControllerParams) -> Vec<f64> {
    let n = l.n();
    let (x, v) = (&y[..n], &y[n..2 * n]);
    (0..n)
        .map(|i| {
            let r = l.row_dot(i, v) + p.rho * l.row_dot(i, x);
            di_control_scalar(x[i], v[i], y[2 * n + i], y[3 * n + i], r, p).0
        })
        .collect()
}

pub(crate) fn di_nussbaum_values(y: &[f64], n: usize, p: &ControllerParams) -> Vec<f64> {
    (0..n)
        .map(|i| di_nussbaum_scalar(y[i], y[n + i], y[2 * n + i], y[3 * n + i], p))
        .collect()
}
