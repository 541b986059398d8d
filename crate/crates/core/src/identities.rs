//! Numerical identity suite: Green's formulas, the moment recurrences,
//! symmetries, vanishing moments, the corner factors and the closed forms,
//! each side evaluated independently.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{base_integrals, moment, Family, MomentId};
use crate::error::Result;
use crate::geometry::{u_of_h, EnergyLevel, Mode};
use crate::melnikov::{eval_w, phi_factors};
use crate::quadrature::{arc_moment_tol, integrate_1d, Arc, ArcLabel, Form};

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Largest error over all cases: relative when `relative`, else absolute.
    pub max_error: f64,
    pub tolerance: f64,
    pub relative: bool,
    pub cases: usize,
    pub passed: bool,
}

struct Collector {
    name: &'static str,
    tolerance: f64,
    relative: bool,
    max_error: f64,
    cases: usize,
}

impl Collector {
    fn new(name: &'static str, tolerance: f64, relative: bool) -> Self {
        Self {
            name,
            tolerance,
            relative,
            max_error: 0.0,
            cases: 0,
        }
    }

    fn compare(&mut self, lhs: f64, rhs: f64) {
        let diff = (lhs - rhs).abs();
        let e = if self.relative { diff / rhs.abs().max(lhs.abs()).max(1e-300) } else { diff };
        // exact zeros on both sides compare equal
        let e = if diff == 0.0 { 0.0 } else { e };
        self.max_error = self.max_error.max(e);
        self.cases += 1;
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name.to_string(),
            max_error: self.max_error,
            tolerance: self.tolerance,
            relative: self.relative,
            cases: self.cases,
            passed: self.max_error <= self.tolerance && self.max_error.is_finite(),
        }
    }
}

fn q(arc: ArcLabel, i: u32, j: u32, form: Form, h: EnergyLevel) -> Result<f64> {
    arc_moment_tol(Arc::new(arc), i, j, form, h, QUAD_TOL)
}

fn sign(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Levels used by every check: a fixed set plus three drawn from `seed`.
pub fn levels(seed: u64) -> Vec<EnergyLevel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hs = vec![0.5, 2.0, 5.0];
    hs.extend((0..3).map(|_| 10f64.powf(rng.gen_range(-1.3..1.3))));
    hs.into_iter().map(|h| EnergyLevel::new(h).expect("positive level")).collect()
}

/// `∬_Ω x^a y^b dx dy` over the region bounded by arc AB and the two parabolas.
fn region_moment(a: u32, b: u32, h: EnergyLevel) -> Result<f64> {
    let (u, r) = (u_of_h(h).value(), h.radius());
    // ∫ y^b dy between the bounds, in closed form
    let strip = |lo: f64, hi: f64| (hi.powi(b as i32 + 1) - lo.powi(b as i32 + 1)) / (b + 1) as f64;
    let inner = integrate_1d(|x| x.powi(a as i32) * strip(-x * x, x * x), 0.0, u, QUAD_TOL)?;
    let outer = integrate_1d(
        |x| {
            let c = (h.value() - x * x).max(0.0).sqrt();
            x.powi(a as i32) * strip(-c, c)
        },
        u,
        r,
        QUAD_TOL,
    )?;
    Ok(inner + outer)
}

fn pairs(max: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..=max).flat_map(move |i| (0..=max - i).map(move |j| (i, j)))
}

pub fn run_identities(seed: u64) -> Result<Vec<IdentityCheck>> {
    let hs = levels(seed);
    let mut out = Vec::new();

    // Green's formula on Ω for both forms
    let mut dx = Collector::new("green-dx", 1e-9, false);
    let mut dy = Collector::new("green-dy", 1e-9, false);
    for &h in &hs {
        let s = u_of_h(h).value().powi(2);
        for (i, j) in pairs(4) {
            let area = if j == 0 { 0.0 } else { j as f64 * region_moment(i, j - 1, h)? };
            let k = (i + 2 * j + 1) as f64;
            let rhs = area - (1.0 - sign(j)) / k * s.powf(k / 2.0);
            dx.compare(q(ArcLabel::AB, i, j, Form::Dx, h)?, rhs);

            let area = if i == 0 { 0.0 } else { -(i as f64) * region_moment(i - 1, j, h)? };
            let k = (i + 2 * j + 2) as f64;
            let rhs = area - 2.0 * (1.0 + sign(j)) / k * s.powf(k / 2.0);
            dy.compare(q(ArcLabel::AB, i, j, Form::Dy, h)?, rhs);
        }
    }
    out.push(dx.finish());
    out.push(dy.finish());

    // ∫ x^i y^j dy in terms of dx-moments, on each arc
    let mut c = Collector::new("dy-to-dx", 1e-9, false);
    for &h in &hs {
        let s = u_of_h(h).value().powi(2);
        for (i, j) in pairs(5) {
            let p = s.powf((i + 2 * j + 2) as f64 / 2.0);
            let e = (j + 1) as f64;
            let corner = [
                (ArcLabel::AB, -(1.0 + sign(j))),
                (ArcLabel::BC, sign(j) * (1.0 - sign(i))),
                (ArcLabel::CD, sign(i) * (1.0 + sign(j))),
                (ArcLabel::DA, 1.0 - sign(i)),
            ];
            for (arc, k) in corner {
                let lower = if i == 0 { 0.0 } else { -(i as f64) / e * q(arc, i - 1, j + 1, Form::Dx, h)? };
                c.compare(q(arc, i, j, Form::Dy, h)?, lower + k / e * p);
            }
        }
    }
    out.push(c.finish());

    // recurrences on AB
    let mut r10 = Collector::new("recurrence-lower-i", 1e-9, false);
    let mut r11 = Collector::new("recurrence-circle", 1e-9, false);
    let mut r12 = Collector::new("recurrence-i", 1e-9, false);
    let mut r13 = Collector::new("recurrence-j", 1e-9, false);
    for &h in &hs {
        let hv = h.value();
        let s = u_of_h(h).value().powi(2);
        let i_ = |i, j| q(ArcLabel::AB, i, j, Form::Dx, h);
        for (i, j) in pairs(6) {
            let odd = 1.0 - sign(j);
            if i >= 2 {
                let e = (i + 2 * j + 3) as f64 / 2.0;
                let rhs = (i - 1) as f64 / (j + 2) as f64 * i_(i - 2, j + 2)? + odd / (j + 2) as f64 * s.powf(e);
                r10.compare(i_(i, j)?, rhs);
                let rhs = ((i - 1) as f64 * hv * i_(i - 2, j)? + odd * s.powf(e)) / (i + j + 1) as f64;
                r12.compare(i_(i, j)?, rhs);
            }
            if j >= 2 {
                r11.compare(i_(i, j)?, hv * i_(i, j - 2)? - i_(i + 2, j - 2)?);
                let e = (i + 2 * j + 1) as f64 / 2.0;
                let rhs = (j as f64 * hv * i_(i, j - 2)? - odd * s.powf(e)) / (i + j + 1) as f64;
                r13.compare(i_(i, j)?, rhs);
            }
        }
    }
    out.extend([r10.finish(), r11.finish(), r12.finish(), r13.finish()]);

    // low-order reduction table; the I₂₃ and I₄₁ middle terms carry +h·s^(7/2)/4
    let mut t = Collector::new("reduction-table", 1e-9, true);
    for &h in &hs {
        let hv = h.value();
        let s = u_of_h(h).value().powi(2);
        let i01 = q(ArcLabel::AB, 0, 1, Form::Dx, h)?;
        let table = [
            ((0, 3), 0.75 * hv * i01 - 0.5 * s.powf(3.5)),
            ((2, 1), 0.25 * hv * i01 + 0.5 * s.powf(3.5)),
            ((0, 5), 0.625 * hv * hv * i01 - 5.0 / 12.0 * hv * s.powf(3.5) - s.powf(5.5) / 3.0),
            ((2, 3), 0.125 * hv * hv * i01 + 0.25 * hv * s.powf(3.5) - s.powf(4.5) / 3.0),
            ((4, 1), 0.125 * hv * hv * i01 + 0.25 * hv * s.powf(3.5) + s.powf(4.5) / 3.0),
        ];
        for ((i, j), rhs) in table {
            t.compare(q(ArcLabel::AB, i, j, Form::Dx, h)?, rhs);
            t.compare(moment(MomentId::new(Family::I, i, j), h), rhs);
        }
    }
    out.push(t.finish());

    // exact reduction against quadrature for every family
    let mut red = Collector::new("reduction-vs-quadrature", 1e-9, false);
    for &h in &hs {
        for family in [Family::I, Family::J, Family::ITilde, Family::JTilde, Family::U, Family::V] {
            for (i, j) in pairs(6) {
                let quad = q(family.arc(), i, j, Form::Dx, h)?;
                let scale = 1.0 + quad.abs();
                red.compare(moment(MomentId::new(family, i, j), h) / scale, quad / scale);
            }
        }
    }
    out.push(red.finish());

    // point reflection through the origin and vanishing moments
    let mut sym = Collector::new("half-turn-symmetry", 1e-10, false);
    let mut van = Collector::new("vanishing-moments", 1e-10, false);
    for &h in &hs {
        for (i, j) in pairs(6) {
            let flip = sign(i + j + 1);
            sym.compare(q(ArcLabel::CD, i, j, Form::Dx, h)?, flip * q(ArcLabel::AB, i, j, Form::Dx, h)?);
            sym.compare(q(ArcLabel::DA, i, j, Form::Dx, h)?, flip * q(ArcLabel::BC, i, j, Form::Dx, h)?);
            if j % 2 == 0 {
                van.compare(q(ArcLabel::AB, i, j, Form::Dx, h)?, 0.0);
            }
            if i % 2 == 1 {
                van.compare(q(ArcLabel::BC, i, j, Form::Dx, h)?, 0.0);
                van.compare(q(ArcLabel::AdLower, i, j, Form::Dx, h)?, 0.0);
            }
        }
    }
    out.extend([sym.finish(), van.finish()]);

    let mut phi = Collector::new("corner-factors", 1e-12, false);
    for k in 0..=24 {
        let h = EnergyLevel::new(10f64.powf(-3.0 + 0.25 * k as f64))?;
        for mode in Mode::ALL {
            for f in phi_factors(h, mode)? {
                phi.compare(f, 1.0);
            }
        }
    }
    out.push(phi.finish());

    let mut w = Collector::new("w-closed-form", 1e-12, false);
    for u in [1e-3_f64, 0.05, 0.3, 1.0, 3.0, 30.0] {
        let upper = 1.0 / (1.0 + u * u).sqrt();
        w.compare(eval_w(u), integrate_1d(|t| (1.0 - t * t).sqrt(), 0.0, upper, QUAD_TOL)?);
    }
    out.push(w.finish());

    let mut base = Collector::new("base-closed-forms", 1e-10, false);
    for &h in &hs {
        let b = base_integrals(h);
        let pairs = [
            (b.i01, ArcLabel::AB, 0, 1),
            (b.i11, ArcLabel::AB, 1, 1),
            (b.j00, ArcLabel::BC, 0, 0),
            (b.j01, ArcLabel::BC, 0, 1),
            (b.u00, ArcLabel::AdLower, 0, 0),
            (b.u01, ArcLabel::AdLower, 0, 1),
            (b.v00, ArcLabel::DA, 0, 0),
            (b.v01, ArcLabel::DA, 0, 1),
        ];
        for (closed, arc, i, j) in pairs {
            let quad = q(arc, i, j, Form::Dx, h)?;
            base.compare(closed / (1.0 + quad.abs()), quad / (1.0 + quad.abs()));
        }
    }
    let two = base_integrals(EnergyLevel::new(2.0)?);
    base.compare(two.u01, 1.5 * PI - 1.0);
    out.push(base.finish());
    Ok(out)
}
