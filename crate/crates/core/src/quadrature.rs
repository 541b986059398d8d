//! Adaptive Gauss–Kronrod quadrature and oriented line integrals along the
//! level circle. Everything here is independent of the closed forms in
//! [`crate::basis`]; it is the numerical oracle those forms are checked against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{u_of_h, EnergyLevel};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_panels: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (k, &node) in XGK.iter().take(7).enumerate() {
        let dx = half * node;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[k] = (f1, f2);
        kronrod += WGK[k] * (f1 + f2);
        abs_sum += WGK[k] * (f1.abs() + f2.abs());
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (k, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[k] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();

    // QUADPACK error rescaling
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel {
        a,
        b,
        value,
        error,
        abs: res_abs,
    }
}

/// Integrates `f` over `[a, b]` to within `max(tol, tol·|I|)`, or to the
/// rounding floor `100ε·∫|f|` when that is larger.
///
/// `b < a` is allowed and yields the negated integral over `[b, a]`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with(
        f,
        a,
        b,
        QuadratureOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with(f, b, a, opts).map(|v| -v);
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_abs = first.abs;
    heap.push(first);
    while total_err > opts.tol.max(opts.tol * total.abs()).max(100.0 * f64::EPSILON * total_abs) {
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
            });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of incremental updates
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Arcs of the level circle between consecutive corner points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcLabel {
    /// Right arc, A → B, through `(√h, 0)`.
    AB,
    /// Bottom arc, B → C.
    BC,
    /// Left arc, C → D.
    CD,
    /// Top arc, D → A.
    DA,
    /// A → D the long way (right, bottom, left); zone 1 of the two-zone upper mode.
    AdLower,
    /// C → B the long way (left, top, right); zone 1 of the two-zone lower mode.
    CbUpper,
}

/// Corner labels used for arc endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

impl Corner {
    /// Signs `(sx, sy)` with the corner at `(sx·u, sy·u²)`.
    pub fn signs(self) -> (i32, i32) {
        match self {
            Corner::A => (1, 1),
            Corner::B => (1, -1),
            Corner::C => (-1, -1),
            Corner::D => (-1, 1),
        }
    }
}

impl ArcLabel {
    pub fn endpoints(self) -> (Corner, Corner) {
        match self {
            ArcLabel::AB => (Corner::A, Corner::B),
            ArcLabel::BC => (Corner::B, Corner::C),
            ArcLabel::CD => (Corner::C, Corner::D),
            ArcLabel::DA => (Corner::D, Corner::A),
            ArcLabel::AdLower => (Corner::A, Corner::D),
            ArcLabel::CbUpper => (Corner::C, Corner::B),
        }
    }
}

/// An oriented arc. Unreversed arcs follow the clockwise flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub label: ArcLabel,
    pub reversed: bool,
}

impl Arc {
    pub const fn new(label: ArcLabel) -> Self {
        Self {
            label,
            reversed: false,
        }
    }

    pub fn reverse(self) -> Self {
        Self {
            reversed: !self.reversed,
            ..self
        }
    }

    /// Start and end angles on the circle of level `h`.
    pub fn angles(self, h: EnergyLevel) -> (f64, f64) {
        let ta = u_of_h(h).value().atan();
        let (t0, t1) = match self.label {
            ArcLabel::AB => (ta, -ta),
            ArcLabel::BC => (-ta, -PI + ta),
            ArcLabel::CD => (-PI + ta, -PI - ta),
            ArcLabel::DA => (-PI - ta, -2.0 * PI + ta),
            ArcLabel::AdLower => (ta, -PI - ta),
            ArcLabel::CbUpper => (PI + ta, -ta),
        };
        if self.reversed {
            (t1, t0)
        } else {
            (t0, t1)
        }
    }
}

impl From<ArcLabel> for Arc {
    fn from(label: ArcLabel) -> Self {
        Arc::new(label)
    }
}

/// Differential of a line integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    Dx,
    Dy,
}

/// Integrates `g(x, y)·dx + f(x, y)·dy`-style forms: `integrand(x, y)` returns
/// the coefficients `(p, q)` of `p dx + q dy`.
pub fn arc_integral<F>(arc: Arc, h: EnergyLevel, integrand: F, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let r = h.radius();
    let (t0, t1) = arc.angles(h);
    integrate_1d(
        |t| {
            let (s, c) = t.sin_cos();
            let (x, y) = (r * c, r * s);
            let (p, q) = integrand(x, y);
            -p * r * s + q * r * c
        },
        t0,
        t1,
        tol,
    )
}

/// `∫ x^i y^j dx` (or `dy`) along `arc` at level `h`.
pub fn arc_moment(arc: Arc, i: u32, j: u32, form: Form, h: EnergyLevel) -> Result<f64> {
    arc_moment_tol(arc, i, j, form, h, QuadratureOptions::default().tol)
}

pub fn arc_moment_tol(arc: Arc, i: u32, j: u32, form: Form, h: EnergyLevel, tol: f64) -> Result<f64> {
    arc_integral(
        arc,
        h,
        |x, y| {
            let m = x.powi(i as i32) * y.powi(j as i32);
            match form {
                Form::Dx => (m, 0.0),
                Form::Dy => (0.0, m),
            }
        },
        tol,
    )
}
