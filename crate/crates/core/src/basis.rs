//! Closed forms for the base integrals and exact reduction of every arc
//! moment `∫ x^i y^j dx` to one base integral plus boundary terms.
//!
//! Two relations hold on any arc `P → Q` of the circle `x² + y² = h`:
//!
//! * `x dx + y dy = 0`, which after integrating by parts gives
//!   `K[i,j] = (i-1)/(j+2)·K[i-2,j+2] - E(i-1,j+2)/(j+2)`;
//! * `x² + y² = h`, i.e. `K[i,j] = h·K[i,j-2] - K[i+2,j-2]`.
//!
//! Here `E(p,q) = [x^p y^q]_P^Q`. Every corner is `(±u, ±u²)`, so `E(p,q)` is
//! an integer multiple of `u^(p+2q)`. Eliminating between the two relations
//! lowers `j` (or `i`) by two per step while multiplying by `h`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::geometry::{u_of_h, EnergyLevel};
use crate::melnikov::{eval_w, w_deficit};
use crate::poly::{rat, rat_int, rat_to_f64, Rational};
use crate::quadrature::{ArcLabel, Corner};

/// Moment families, named after the arc they integrate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    /// Arc AB (zone 1 of the four-zone system).
    I,
    /// Arc BC.
    J,
    /// Arc CD.
    ITilde,
    /// Arc DA.
    JTilde,
    /// Arc A → D through the bottom (two-zone).
    U,
    /// Arc D → A over the top (two-zone).
    V,
}

impl Family {
    pub fn arc(self) -> ArcLabel {
        match self {
            Family::I => ArcLabel::AB,
            Family::J => ArcLabel::BC,
            Family::ITilde => ArcLabel::CD,
            Family::JTilde | Family::V => ArcLabel::DA,
            Family::U => ArcLabel::AdLower,
        }
    }

    pub fn is_two_zone(self) -> bool {
        matches!(self, Family::U | Family::V)
    }

    /// Moments that vanish by the reflection symmetry of the arc.
    pub fn vanishes(self, i: u32, j: u32) -> bool {
        match self {
            // AB and CD are symmetric about the x-axis
            Family::I | Family::ITilde => j.is_multiple_of(2),
            // BC, DA and the long arcs are symmetric about the y-axis
            Family::J | Family::JTilde | Family::U | Family::V => i % 2 == 1,
        }
    }

    fn base_at(self, i: u32, j: u32) -> Option<BaseIntegral> {
        use BaseIntegral::*;
        match (self, i, j) {
            (Family::I, 0, 1) => Some(I01),
            (Family::I, 1, 1) => Some(I11),
            (Family::J, 0, 0) => Some(J00),
            (Family::J, 0, 1) => Some(J01),
            (Family::U, 0, 0) => Some(U00),
            (Family::U, 0, 1) => Some(U01),
            (Family::V, 0, 0) => Some(V00),
            (Family::V, 0, 1) => Some(V01),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MomentId {
    pub family: Family,
    pub i: u32,
    pub j: u32,
}

impl MomentId {
    pub const fn new(family: Family, i: u32, j: u32) -> Self {
        Self { family, i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BaseIntegral {
    I01,
    I11,
    J00,
    J01,
    U00,
    U01,
    V00,
    V01,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseTerm {
    pub base: BaseIntegral,
    pub coeff: Rational,
    pub h_power: u32,
}

/// `coeff·h^m·B(h) + Σ c·h^p·s^(k/2)` with `s = (√(1+4h) - 1)/2 = u²`.
///
/// Boundary terms are keyed by `(p, k)`: the power of `h` and the power of
/// `u` (twice the exponent of `s`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReducedMoment {
    pub base: Option<BaseTerm>,
    pub boundary: BTreeMap<(u32, u32), Rational>,
}

impl ReducedMoment {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_none() && self.boundary.is_empty()
    }

    fn of_base(base: BaseIntegral) -> Self {
        Self {
            base: Some(BaseTerm {
                base,
                coeff: Rational::one(),
                h_power: 0,
            }),
            boundary: BTreeMap::new(),
        }
    }

    fn add_boundary(&mut self, coeff: Rational, h_power: u32, u_power: u32) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.boundary.entry((h_power, u_power)).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.boundary.remove(&(h_power, u_power));
        }
    }

    /// `c·h·self`.
    fn times_h(&self, c: &Rational) -> Self {
        let mut out = Self::zero();
        if c.is_zero() {
            return out;
        }
        out.base = self.base.as_ref().map(|b| BaseTerm {
            base: b.base,
            coeff: &b.coeff * c,
            h_power: b.h_power + 1,
        });
        for (&(p, k), v) in &self.boundary {
            out.add_boundary(v * c, p + 1, k);
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            base: self.base.as_ref().map(|b| BaseTerm {
                coeff: &b.coeff * c,
                ..b.clone()
            }),
            boundary: self.boundary.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Boundary terms as `(coeff, h power, exponent of s in halves)`.
    pub fn boundary_terms(&self) -> impl Iterator<Item = (&Rational, u32, u32)> {
        self.boundary.iter().map(|(&(p, k), c)| (c, p, k))
    }

    pub fn eval(&self, h: EnergyLevel) -> f64 {
        let hv = h.value();
        let u = u_of_h(h).value();
        let mut total = 0.0;
        if let Some(b) = &self.base {
            let values = base_integrals(h);
            total += rat_to_f64(&b.coeff) * hv.powi(b.h_power as i32) * values.get(b.base);
        }
        for (&(p, k), c) in &self.boundary {
            total += rat_to_f64(c) * hv.powi(p as i32) * u.powi(k as i32);
        }
        total
    }
}

/// `[x^p y^q]` from the start to the end of `arc`, as a multiple of `u^(p+2q)`.
pub fn endpoint_difference(arc: ArcLabel, p: u32, q: u32) -> i64 {
    let (start, end) = arc.endpoints();
    let mono = |c: Corner| {
        let (sx, sy) = c.signs();
        sx.pow(p) as i64 * sy.pow(q) as i64
    };
    mono(end) - mono(start)
}

fn cache() -> &'static RwLock<HashMap<MomentId, Arc<ReducedMoment>>> {
    static CACHE: OnceLock<RwLock<HashMap<MomentId, Arc<ReducedMoment>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Exact reduction of a moment to its base integral plus boundary terms.
///
/// Results are memoized in a process-wide table; concurrent callers may race
/// to fill an entry, and whichever value lands first is kept (they are equal).
pub fn reduce_moment(id: MomentId) -> Arc<ReducedMoment> {
    if let Some(hit) = cache().read().expect("moment cache poisoned").get(&id) {
        return Arc::clone(hit);
    }
    let value = Arc::new(compute_reduction(id));
    let mut table = cache().write().expect("moment cache poisoned");
    Arc::clone(table.entry(id).or_insert(value))
}

fn compute_reduction(id: MomentId) -> ReducedMoment {
    let MomentId { family, i, j } = id;
    match family {
        // CD is the image of AB and DA the image of BC under (x, y) → (-x, -y),
        // which keeps orientation and sends x^i y^j dx to (-1)^(i+j+1) x^i y^j dx.
        Family::ITilde | Family::JTilde => {
            let source = if family == Family::ITilde { Family::I } else { Family::J };
            let sign = if (i + j + 1) % 2 == 0 { 1 } else { -1 };
            reduce_moment(MomentId::new(source, i, j)).scale(&rat_int(sign))
        }
        _ => reduce_on_arc(family, i, j),
    }
}

fn reduce_on_arc(family: Family, i: u32, j: u32) -> ReducedMoment {
    if family.vanishes(i, j) {
        return ReducedMoment::zero();
    }
    if let Some(base) = family.base_at(i, j) {
        return ReducedMoment::of_base(base);
    }
    let arc = family.arc();
    let denom = (i + j + 1) as i64;
    if j >= 2 {
        // K[i,j] = (j·h·K[i,j-2] + E(i+1,j)) / (i+j+1)
        let lower = reduce_moment(MomentId::new(family, i, j - 2));
        let mut out = lower.times_h(&rat(j as i64, denom));
        out.add_boundary(rat(endpoint_difference(arc, i + 1, j), denom), 0, i + 1 + 2 * j);
        out
    } else if i >= 2 {
        // K[i,j] = ((i-1)·h·K[i-2,j] - E(i-1,j+2)) / (i+j+1)
        let lower = reduce_moment(MomentId::new(family, i - 2, j));
        let mut out = lower.times_h(&rat((i - 1) as i64, denom));
        out.add_boundary(rat(-endpoint_difference(arc, i - 1, j + 2), denom), 0, i + 3 + 2 * j);
        out
    } else {
        // i, j ∈ {0, 1} without a base: pure boundary values
        let mut out = ReducedMoment::zero();
        match (i, j) {
            (0, 0) => out.add_boundary(rat_int(endpoint_difference(arc, 1, 0)), 0, 1),
            (1, 0) => out.add_boundary(rat(endpoint_difference(arc, 2, 0), 2), 0, 2),
            (1, 1) => out.add_boundary(rat(-endpoint_difference(arc, 0, 3), 3), 0, 6),
            _ => unreachable!("every family has a base or vanishing rule for (0, 1)"),
        }
        out
    }
}

/// Numerical value of a moment through its exact reduction.
pub fn moment(id: MomentId, h: EnergyLevel) -> f64 {
    reduce_moment(id).eval(h)
}

/// Closed-form values of the base integrals at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseValues {
    pub i01: f64,
    pub i11: f64,
    pub j00: f64,
    pub j01: f64,
    pub u00: f64,
    pub u01: f64,
    pub v00: f64,
    pub v01: f64,
}

impl BaseValues {
    pub fn get(&self, base: BaseIntegral) -> f64 {
        match base {
            BaseIntegral::I01 => self.i01,
            BaseIntegral::I11 => self.i11,
            BaseIntegral::J00 => self.j00,
            BaseIntegral::J01 => self.j01,
            BaseIntegral::U00 => self.u00,
            BaseIntegral::U01 => self.u01,
            BaseIntegral::V00 => self.v00,
            BaseIntegral::V01 => self.v01,
        }
    }
}

/// `∫₀^u √(h - x²) dx = u√(h-u²)/2 + (h/2)·asin(u/√h) = h·W(u)`.
pub fn half_chord_area(h: EnergyLevel) -> f64 {
    h.value() * eval_w(u_of_h(h).value())
}

pub fn base_integrals(h: EnergyLevel) -> BaseValues {
    let hv = h.value();
    let u = u_of_h(h).value();
    let area = half_chord_area(h);
    let j01 = 2.0 * area;
    // πh/2 - 2hW, written through the deficit π/4 - W to avoid cancellation
    let i01 = 2.0 * hv * w_deficit(u);
    BaseValues {
        i01,
        // (2/3)(h - u²)^(3/2) with h - u² = u⁴
        i11: 2.0 / 3.0 * u.powi(6),
        j00: -2.0 * u,
        j01,
        u00: -2.0 * u,
        u01: std::f64::consts::PI * hv - j01,
        v00: 2.0 * u,
        v01: j01,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{arc_moment, Arc as ArcPath, Form};
    use std::f64::consts::PI;

    fn lvl(h: f64) -> EnergyLevel {
        EnergyLevel::new(h).unwrap()
    }

    fn quad(family: Family, i: u32, j: u32, h: EnergyLevel) -> f64 {
        arc_moment(ArcPath::new(family.arc()), i, j, Form::Dx, h).unwrap()
    }

    #[test]
    fn base_values_at_h2() {
        let b = base_integrals(lvl(2.0));
        assert!((b.j00 + 2.0).abs() < 1e-15);
        assert!((b.i11 - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.j01 - (1.0 + PI / 2.0)).abs() < 1e-14);
        assert!((b.i01 - (PI / 2.0 - 1.0)).abs() < 1e-14);
        assert!((b.u01 - (1.5 * PI - 1.0)).abs() < 1e-14);
        assert_eq!(b.v00, 2.0);
    }

    #[test]
    fn low_order_reductions_match_table() {
        let r = reduce_moment(MomentId::new(Family::I, 0, 3));
        let base = r.base.as_ref().unwrap();
        assert_eq!((base.base, base.coeff.clone(), base.h_power), (BaseIntegral::I01, rat(3, 4), 1));
        assert_eq!(r.boundary.len(), 1);
        assert_eq!(r.boundary[&(0, 7)], rat(-1, 2));

        let r = reduce_moment(MomentId::new(Family::I, 2, 1));
        assert_eq!(r.base.as_ref().unwrap().coeff, rat(1, 4));
        assert_eq!(r.boundary[&(0, 7)], rat(1, 2));

        assert!(reduce_moment(MomentId::new(Family::I, 0, 2)).is_zero());
        assert!(reduce_moment(MomentId::new(Family::J, 3, 2)).is_zero());
    }

    #[test]
    fn i41_middle_term_is_positive() {
        // h·s^(7/2) enters I_{4,1} with +1/4; brute-force quadrature agrees
        let r = reduce_moment(MomentId::new(Family::I, 4, 1));
        let base = r.base.as_ref().unwrap();
        assert_eq!((base.coeff.clone(), base.h_power), (rat(1, 8), 2));
        assert_eq!(r.boundary[&(1, 7)], rat(1, 4));
        assert_eq!(r.boundary[&(0, 9)], rat(1, 3));
        let h = lvl(2.0);
        assert!((r.eval(h) - (PI / 4.0 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((quad(Family::I, 4, 1, h) - (PI / 4.0 + 1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn numeric_values_at_h2() {
        let h = lvl(2.0);
        assert!((moment(MomentId::new(Family::I, 0, 3), h) - (0.75 * PI - 2.0)).abs() < 1e-12);
        assert!((moment(MomentId::new(Family::I, 2, 1), h) - PI / 4.0).abs() < 1e-12);
        // CD is the point reflection of AB; x² y dx keeps its sign
        let tilde = moment(MomentId::new(Family::ITilde, 2, 1), h);
        assert!((tilde - PI / 4.0).abs() < 1e-12);
        assert!((quad(Family::ITilde, 2, 1, h) - tilde).abs() < 1e-10);
    }

    #[test]
    fn tilde_families_follow_point_reflection() {
        let h = lvl(3.3);
        for i in 0..=4 {
            for j in 0..=4 {
                let i_val = quad(Family::I, i, j, h);
                let it = quad(Family::ITilde, i, j, h);
                let j_val = quad(Family::J, i, j, h);
                let jt = quad(Family::JTilde, i, j, h);
                let sign = if (i + j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                assert!((it - sign * i_val).abs() < 1e-9 * (1.0 + it.abs()));
                assert!((jt - sign * j_val).abs() < 1e-9 * (1.0 + jt.abs()));
            }
        }
        // J̃₀₀ = x_A - x_D = 2u, the opposite sign of J₀₀
        assert!((quad(Family::JTilde, 0, 0, h) + quad(Family::J, 0, 0, h)).abs() < 1e-12);
    }

    #[test]
    fn reductions_agree_with_quadrature() {
        let families = [Family::I, Family::J, Family::ITilde, Family::JTilde, Family::U, Family::V];
        for h in [0.5, 1.0, 2.0, 5.0, 20.0] {
            let h = lvl(h);
            for family in families {
                for n in 0..=6u32 {
                    for i in 0..=n {
                        let j = n - i;
                        let exact = moment(MomentId::new(family, i, j), h);
                        let q = quad(family, i, j, h);
                        assert!(
                            (exact - q).abs() <= 1e-9 * (1.0 + q.abs()),
                            "{family:?}[{i},{j}] h={}: {exact} vs {q}",
                            h.value()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn base_powers_follow_brackets() {
        for family in [Family::I, Family::J, Family::U, Family::V] {
            for n in 0..=9u32 {
                for i in 0..=n {
                    let j = n - i;
                    let r = reduce_moment(MomentId::new(family, i, j));
                    if let Some(b) = &r.base {
                        let expected = match b.base {
                            BaseIntegral::I01
                            | BaseIntegral::J01
                            | BaseIntegral::U01
                            | BaseIntegral::V01 => (n - 1) / 2,
                            BaseIntegral::J00 | BaseIntegral::U00 | BaseIntegral::V00 => n / 2,
                            BaseIntegral::I11 => (n - 2) / 2,
                        };
                        assert_eq!(b.h_power, expected, "{family:?}[{i},{j}]");
                    }
                    for (_, p, k) in r.boundary_terms() {
                        assert!(4 * p + k <= 2 * n + 1, "{family:?}[{i},{j}] h^{p} u^{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn concurrent_reductions_agree() {
        let ids: Vec<_> = (0..40u32).map(|k| MomentId::new(Family::U, 2 * (k % 5), 11 - k % 7)).collect();
        let results: Vec<Vec<Arc<ReducedMoment>>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| s.spawn(|| ids.iter().map(|&id| reduce_moment(id)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for r in &results[1..] {
            for (a, b) in r.iter().zip(&results[0]) {
                assert_eq!(**a, **b);
            }
        }
    }
}
