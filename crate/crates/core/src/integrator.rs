/// Classical fixed-step Runge-Kutta 4 with reusable scratch buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advance `y` in place from `t` to `t + h`. `f(t, y, dy)` writes the derivative.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let half = 0.5 * h;
        f(t, y, &mut self.k1);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k2);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k3);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = yi + h * k;
        }
        f(t + h, &self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Number of steps of nominal size `h` needed to cover `len`, treating a
/// ratio within `1e-9` of an integer as exact.
pub fn steps_for(len: f64, h: f64) -> usize {
    let ratio = len / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        (nearest as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

/// Integrate over `[t0, t1]` with nominal step `h`; the last step is shortened
/// so the end lands exactly on `t1`.
pub fn integrate<F>(mut f: F, y0: &[f64], t0: f64, t1: f64, h: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    let mut rk = Rk4::new(y.len());
    let steps = steps_for(t1 - t0, h);
    for s in 0..steps {
        let a = t0 + s as f64 * h;
        let b = if s + 1 == steps {
            t1
        } else {
            t0 + (s + 1) as f64 * h
        };
        rk.step(&mut f, a, &mut y, b - a);
    }
    y
}
