//! Dormand–Prince 5(4) stepper for planar systems, with the fourth-order
//! continuous extension used for event location. Systems are autonomous.

pub type State = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy(y: State, terms: &[(f64, State)], h: f64) -> State {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One trial step: the fifth-order solution, the error estimate and the
/// stages needed for dense output.
#[derive(Debug, Clone, Copy)]
pub struct Trial {
    pub t0: f64,
    pub h: f64,
    pub y0: State,
    pub y1: State,
    pub err: State,
    k: [State; 7],
}

pub fn trial_step<F: Fn(State) -> State>(f: &F, t0: f64, y0: State, k1: State, h: f64) -> Trial {
    let k2 = f(axpy(y0, &[(A21, k1)], h));
    let k3 = f(axpy(y0, &[(A31, k1), (A32, k2)], h));
    let k4 = f(axpy(y0, &[(A41, k1), (A42, k2), (A43, k3)], h));
    let k5 = f(axpy(y0, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
    let k6 = f(axpy(y0, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h));
    let y1 = axpy(y0, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
    let k7 = f(y1);
    let mut err = [0.0; 2];
    for (i, e) in err.iter_mut().enumerate() {
        *e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Trial {
        t0,
        h,
        y0,
        y1,
        err,
        k: [k1, k2, k3, k4, k5, k6, k7],
    }
}

impl Trial {
    /// Scaled RMS error norm; the step is acceptable when this is `≤ 1`.
    pub fn error_norm(&self, rtol: f64, atol: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            let sc = atol + rtol * self.y0[i].abs().max(self.y1[i].abs());
            s += (self.err[i] / sc).powi(2);
        }
        (s / 2.0).sqrt()
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Derivative at the end of the step (first stage of the next step).
    pub fn last_stage(&self) -> State {
        self.k[6]
    }

    /// Continuous extension at `t0 + θh`, `θ ∈ [0, 1]`.
    pub fn dense(&self, theta: f64) -> State {
        let [k1, _, k3, k4, k5, k6, k7] = self.k;
        let h = self.h;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let r1 = self.y0[i];
            let r2 = self.y1[i] - self.y0[i];
            let r3 = h * k1[i] - r2;
            let r4 = r2 - h * k7[i] - r3;
            let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            out[i] = r1 + theta * (r2 + (1.0 - theta) * (r3 + theta * (r4 + (1.0 - theta) * r5)));
        }
        out
    }
}

/// Step-size controller with the usual safety factor and growth limits.
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    h * factor
}
