use nlpi_consensus::dynamics::{
    di_control, di_nussbaum_value, di_rhs, neighborhood_errors, si_control, si_nussbaum_value,
    si_rhs,
};
use nlpi_consensus::{ControllerParams, DiGraph, DiState, GainVector, Laplacian, SiState};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn params() -> ControllerParams {
    ControllerParams::new(0.4, 0.2, 0.55).unwrap()
}

fn g1() -> DiGraph {
    DiGraph::from_edges(4, &[(0, 1, 1.0), (0, 2, 0.5), (1, 0, 1.0)]).unwrap()
}

fn gains() -> GainVector {
    GainVector::new(vec![1.0, -4.0, -3.0, 6.0]).unwrap()
}

fn vec4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 4)
}

proptest! {
    #[test]
    fn si_nussbaum_argument_nonnegative(x in -50.0..50.0f64, z1 in 0.0..100.0f64, z2 in -50.0..50.0f64) {
        prop_assert!(si_nussbaum_value(x, z1, z2, &params()) >= 0.0);
    }

    #[test]
    fn di_nussbaum_argument_nonnegative(x in vec4(), v in vec4(), z2 in vec4(), z1 in prop::collection::vec(0.0..10.0f64, 4)) {
        let st = DiState::new(&x, &v, &z1, &z2).unwrap();
        for i in 0..4 {
            prop_assert!(di_nussbaum_value(&st, i, &params()) >= 0.0);
        }
    }

    #[test]
    fn first_integrals_are_nondecreasing(x in vec4(), v in vec4(), z2 in vec4()) {
        let l = g1().laplacian();
        let si = si_rhs(&SiState::new(&x, &[0.0; 4], &z2).unwrap(), &l, &gains(), &params()).unwrap();
        prop_assert!(si.z1().iter().all(|&d| d >= 0.0));
        let di = di_rhs(&DiState::new(&x, &v, &[0.0; 4], &z2).unwrap(), &l, &gains(), &params()).unwrap();
        prop_assert!(di.zbar1().iter().all(|&d| d >= 0.0));
    }

    /// dS_i/dt along the flow equals [1 + b_i S_i cos S_i] x_i e_i (lambda1 x_i e_i + lambda2 z2_i).
    #[test]
    fn si_nussbaum_derivative_chain_rule(x in vec4(), z1 in prop::collection::vec(0.0..2.0f64, 4), z2 in vec4()) {
        let p = params();
        let l = g1().laplacian();
        let b = gains();
        let st = SiState::new(&x, &z1, &z2).unwrap();
        let f = si_rhs(&st, &l, &b, &p).unwrap();
        let e = neighborhood_errors(&l, &x).unwrap();
        let h = 1e-6;
        let shifted = |sign: f64| {
            let y: Vec<f64> = st.as_slice().iter().zip(f.as_slice()).map(|(y, d)| y + sign * h * d).collect();
            SiState::from_flat(y).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        for i in 0..4 {
            let s = si_nussbaum_value(x[i], z1[i], z2[i], &p);
            let xe = x[i] * e[i];
            let analytic = (1.0 + b.as_slice()[i] * s * s.cos()) * xe * (p.lambda1() * xe + p.lambda2() * z2[i]);
            let fd = (si_nussbaum_value(plus.x()[i], plus.z1()[i], plus.z2()[i], &p)
                - si_nussbaum_value(minus.x()[i], minus.z1()[i], minus.z2()[i], &p)) / (2.0 * h);
            prop_assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0), "agent {i}: {fd} vs {analytic}");
        }
    }

    /// dR_i/dt along the flow equals [1 + b_i R_i cos R_i] q_i [(rho + 1) v_i + r_i (lambda1 q_i r_i + lambda2 zbar2_i)].
    #[test]
    fn di_nussbaum_derivative_chain_rule(x in vec4(), v in vec4(), z1 in prop::collection::vec(0.0..2.0f64, 4), z2 in vec4()) {
        let p = params();
        let l = g1().laplacian();
        let b = gains();
        let st = DiState::new(&x, &v, &z1, &z2).unwrap();
        let f = di_rhs(&st, &l, &b, &p).unwrap();
        let lx = l.apply(&x).unwrap();
        let lv = l.apply(&v).unwrap();
        let h = 1e-6;
        let shifted = |sign: f64| {
            let y: Vec<f64> = st.as_slice().iter().zip(f.as_slice()).map(|(y, d)| y + sign * h * d).collect();
            DiState::from_flat(y).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        let rho = p.rho();
        for i in 0..4 {
            let rr = di_nussbaum_value(&st, i, &p);
            let q = v[i] + rho * x[i];
            let r = lv[i] + rho * lx[i];
            let analytic = (1.0 + b.as_slice()[i] * rr * rr.cos())
                * q * ((rho + 1.0) * v[i] + r * (p.lambda1() * q * r + p.lambda2() * z2[i]));
            let fd = (di_nussbaum_value(&plus, i, &p) - di_nussbaum_value(&minus, i, &p)) / (2.0 * h);
            prop_assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0), "agent {i}: {fd} vs {analytic}");
        }
    }

    /// u_i only reads agent i's own states and the positions (velocities) of in-neighbors.
    #[test]
    fn controls_are_decentralized(x in vec4(), v in vec4(), z2 in vec4(), j in 0usize..4, i in 0usize..4, delta in -2.0..2.0f64) {
        let g = g1();
        prop_assume!(i != j && !g.has_edge(j, i));
        let l = g.laplacian();
        let p = params();
        let z1 = [0.3; 4];
        let mut xp = x.clone();
        let mut vp = v.clone();
        let mut z2p = z2.clone();
        xp[j] += delta;
        vp[j] -= delta;
        z2p[j] += 2.0 * delta;

        let si = SiState::new(&x, &z1, &z2).unwrap();
        let sip = SiState::new(&xp, &z1, &z2p).unwrap();
        let u = si_control(i, &si, &neighborhood_errors(&l, &x).unwrap(), &p);
        let up = si_control(i, &sip, &neighborhood_errors(&l, &xp).unwrap(), &p);
        prop_assert_eq!(u, up);

        let di = DiState::new(&x, &v, &z1, &z2).unwrap();
        let dip = DiState::new(&xp, &vp, &z1, &z2p).unwrap();
        prop_assert_eq!(di_control(i, &di, &l, &p), di_control(i, &dip, &l, &p));
    }
}

/// Central-difference Jacobian of a vector field.
fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, y: &[f64]) -> Vec<Vec<f64>> {
    let h = 1e-6;
    (0..y.len())
        .map(|c| {
            let mut a = y.to_vec();
            let mut b = y.to_vec();
            a[c] += h;
            b[c] -= h;
            f(&a)
                .iter()
                .zip(f(&b))
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect()
        })
        .collect()
}

#[test]
fn vector_fields_are_locally_lipschitz() {
    let l = g1().laplacian();
    let b = gains();
    let p = params();
    let si = |y: &[f64]| {
        si_rhs(&SiState::from_flat(y.to_vec()).unwrap(), &l, &b, &p)
            .unwrap()
            .as_slice()
            .to_vec()
    };
    let di = |y: &[f64]| {
        di_rhs(&DiState::from_flat(y.to_vec()).unwrap(), &l, &b, &p)
            .unwrap()
            .as_slice()
            .to_vec()
    };
    let mut rng = StdRng::seed_from_u64(7);
    for (f, dim) in [(&si as &dyn Fn(&[f64]) -> Vec<f64>, 12), (&di, 16)] {
        let mut sup = 0.0f64;
        for _ in 0..200 {
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let jac = fd_jacobian(f, &y);
            assert!(jac.iter().flatten().all(|d| d.is_finite()));
            sup = sup.max(jac.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs())));
            // A second point nearby: the difference quotient is controlled by the local Jacobian bound.
            let z: Vec<f64> = y
                .iter()
                .map(|v| v + rng.random_range(-1e-4..1e-4))
                .collect();
            let num = f(&y)
                .iter()
                .zip(f(&z))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let den = y.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum::<f64>();
            let local = jac.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
            assert!(num <= 2.0 * local * den + 1e-12);
        }
        assert!(sup < 1e5, "Jacobian entries on the box reach {sup}");
    }
}

/// Hand transcription of the closed loop at t = 0 on G1 with the shipped
/// initial condition, written out agent by agent.
fn l_g1() -> [[f64; 4]; 4] {
    // Row i: in-neighbors of agent i. Agent 1 hears 2 (w 1), agent 2 hears 1 (w 1), agent 3 hears 1 (w 0.5).
    [
        [1.0, -1.0, 0.0, 0.0],
        [-1.0, 1.0, 0.0, 0.0],
        [-0.5, 0.0, 0.5, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
}

fn mat_vec(m: &[[f64; 4]; 4], y: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|k| m[i][k] * y[k]).sum();
    }
    out
}

const X0: [f64; 4] = [-1.0, 1.2, -3.0, 1.5];
const V0: [f64; 4] = [-0.2, -1.0, 0.2, 1.0];
const B: [f64; 4] = [1.0, -4.0, -3.0, 6.0];

#[test]
fn laplacian_matches_transcription() {
    let l = g1().laplacian();
    let m = l_g1();
    for i in 0..4 {
        for k in 0..4 {
            assert_eq!(l.get(i, k), m[i][k]);
        }
    }
    assert_eq!(Laplacian::from_rows(&l.rows()).unwrap(), l);
}

#[test]
fn si_rhs_matches_transcription() {
    let l1 = 0.4;
    let e = mat_vec(&l_g1(), &X0);
    let mut expected = vec![0.0; 12];
    for i in 0..4 {
        // z1 = z2 = 0 at t = 0.
        let s = 0.5 * X0[i] * X0[i];
        let u = s * s.cos() * e[i] * (l1 * X0[i] * e[i]);
        expected[i] = B[i] * u;
        expected[4 + i] = (X0[i] * e[i]).powi(2);
        expected[8 + i] = X0[i] * e[i];
    }
    let got = si_rhs(
        &SiState::initial(&X0),
        &g1().laplacian(),
        &gains(),
        &params(),
    )
    .unwrap();
    for (g, e) in got.as_slice().iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-14 * e.abs().max(1.0), "{g} vs {e}");
    }
}

#[test]
fn di_control_and_rhs_match_transcription() {
    let (l1, rho) = (0.4, 0.55);
    let lx = mat_vec(&l_g1(), &X0);
    let lv = mat_vec(&l_g1(), &V0);
    let mut expected = vec![0.0; 16];
    let mut controls = [0.0; 4];
    for i in 0..4 {
        let q = V0[i] + rho * X0[i];
        let r = lv[i] + rho * lx[i];
        let big_r = 0.5 * q * q + 0.5 * rho * X0[i] * X0[i];
        controls[i] = big_r * big_r.cos() * ((rho + 1.0) * V0[i] + r * (l1 * q * r));
        expected[i] = V0[i];
        expected[4 + i] = B[i] * controls[i];
        expected[8 + i] = l1 * (q * r).powi(2) + V0[i] * V0[i];
        expected[12 + i] = q * r;
    }
    let st = DiState::initial(&X0, &V0).unwrap();
    let l = g1().laplacian();
    for i in 0..4 {
        let u = di_control(i, &st, &l, &params());
        assert!((u - controls[i]).abs() <= 1e-14 * controls[i].abs().max(1.0));
    }
    let got = di_rhs(&st, &l, &gains(), &params()).unwrap();
    for (g, e) in got.as_slice().iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-14 * e.abs().max(1.0), "{g} vs {e}");
    }
}

#[test]
fn sign_flip_of_all_gains_negates_input_channel_only() {
    let l = g1().laplacian();
    let st = SiState::new(&X0, &[0.1; 4], &[0.2; 4]).unwrap();
    let flipped = GainVector::new(B.iter().map(|b| -b).collect()).unwrap();
    let a = si_rhs(&st, &l, &gains(), &params()).unwrap();
    let b = si_rhs(&st, &l, &flipped, &params()).unwrap();
    for i in 0..4 {
        assert_eq!(a.x()[i], -b.x()[i]);
    }
    assert_eq!(a.z1(), b.z1());
    assert_eq!(a.z2(), b.z2());
}
