//! First-order Melnikov function of the perturbed piecewise center, computed
//! by direct arc quadrature and, independently, through its exact reduced form
//! `α·I₀₁ + β·I₁₁ + γ·J₀₀ + δ·J₀₁ + φ(u)` and the `u`-space form
//! `u·P(u) + (u⁴+u²)·Qc(u⁴+u²)·W(u)`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;

use crate::basis::{endpoint_difference, reduce_moment, BaseIntegral, Family, MomentId, ReducedMoment};
use crate::error::{Error, Result};
use crate::geometry::{corner_points, u_of_h, Curve, EnergyLevel, Mode, Point, ZoneId};
use crate::perturbation::PerturbationSpec;
use crate::poly::{horner, rat, rat_from_f64, rat_int, PiPoly, Poly, Rational};
use crate::quadrature::{arc_integral, Arc, ArcLabel, QuadratureOptions};

/// `W(u) = ∫₀^{1/√(1+u²)} √(1-t²) dt = (u/(1+u²) + atan2(1, u)) / 2`.
pub fn eval_w(u: f64) -> f64 {
    0.5 * (u / (1.0 + u * u) + 1.0_f64.atan2(u))
}

/// `π/4 - W(u)`, accurate for small `u` where `W` itself is `≈ π/4`.
pub fn w_deficit(u: f64) -> f64 {
    if u.abs() <= 0.05 {
        // Σ_{k≥1} (-1)^(k+1) k/(2k+1) u^(2k+1)
        let u2 = u * u;
        let mut term = u * u2;
        let mut sum = 0.0;
        for k in 1..=14 {
            let c = k as f64 / (2 * k + 1) as f64;
            sum += if k % 2 == 1 { c * term } else { -c * term };
            term *= u2;
        }
        sum
    } else {
        0.5 * (u.atan() - u / (1.0 + u * u))
    }
}

/// Arc traversed inside each zone, in flow order.
pub fn zone_arcs(mode: Mode) -> &'static [(u8, ArcLabel)] {
    match mode {
        Mode::FourZone => &[(1, ArcLabel::AB), (2, ArcLabel::BC), (3, ArcLabel::CD), (4, ArcLabel::DA)],
        Mode::TwoZoneUpper => &[(1, ArcLabel::AdLower), (4, ArcLabel::DA)],
        Mode::TwoZoneLower => &[(1, ArcLabel::CbUpper), (4, ArcLabel::BC)],
    }
}

/// Gradient `(H_x, H_y)` of one zone's Hamiltonian.
pub type Gradient = fn(f64, f64) -> (f64, f64);

/// Gradient of `H = (x² + y²)/2`, shared by every zone.
pub fn center_gradient(x: f64, y: f64) -> (f64, f64) {
    (x, y)
}

/// `H_x(P) + H_y(P)·f'(P.x)` for the parabola through `P`.
pub fn transversal_bracket(grad: Gradient, p: Point, curve: Curve) -> f64 {
    let (hx, hy) = grad(p.x, p.y);
    hx + hy * curve.slope(p.x)
}

/// The factors `Φ_k` multiplying each zone's arc integral, from the ratio of
/// transversal brackets of neighbouring zones at the corners.
///
/// `grads[k-1]` is the gradient of zone `k` (entries for absent zones are
/// ignored). Returns one factor per zone in [`Mode::zones`] order.
pub fn phi_factors_with(grads: [Gradient; 4], h: EnergyLevel, mode: Mode) -> Result<Vec<f64>> {
    let c = corner_points(h);
    let br = |zone: usize, p: Point, curve: Curve| transversal_bracket(grads[zone - 1], p, curve);
    let ratio = |num: f64, den: f64, at: &str| {
        if den.abs() <= f64::MIN_POSITIVE || !den.is_finite() {
            Err(Error::DegenerateCorner(format!("vanishing bracket at {at}, h = {}", h.value())))
        } else {
            Ok(num / den)
        }
    };
    use Curve::{Lower, Upper};
    match mode {
        Mode::FourZone => {
            let ra = ratio(br(1, c.a, Upper), br(4, c.a, Upper), "A")?;
            let rb = ratio(br(2, c.b, Lower), br(1, c.b, Lower), "B")?;
            let rc = ratio(br(3, c.c, Lower), br(2, c.c, Lower), "C")?;
            let rd = ratio(br(4, c.d, Upper), br(3, c.d, Upper), "D")?;
            Ok(vec![ra * rb * rc * rd, ra * rc * rd, ra * rd, ra])
        }
        Mode::TwoZoneUpper => {
            let ra = ratio(br(1, c.a, Upper), br(4, c.a, Upper), "A")?;
            let rd = ratio(br(4, c.d, Upper), br(1, c.d, Upper), "D")?;
            Ok(vec![ra * rd, ra])
        }
        Mode::TwoZoneLower => {
            let rc = ratio(br(1, c.c, Lower), br(4, c.c, Lower), "C")?;
            let rb = ratio(br(4, c.b, Lower), br(1, c.b, Lower), "B")?;
            Ok(vec![rc * rb, rc])
        }
    }
}

pub fn phi_factors(h: EnergyLevel, mode: Mode) -> Result<Vec<f64>> {
    phi_factors_with([center_gradient; 4], h, mode)
}

/// `M(h)` as the sum over zones of `Φ_k ∫ g_k dx - f_k dy` along the zone's arc.
pub fn melnikov_direct(spec: &PerturbationSpec, h: EnergyLevel) -> Result<f64> {
    melnikov_direct_tol(spec, h, QuadratureOptions::default().tol)
}

pub fn melnikov_direct_tol(spec: &PerturbationSpec, h: EnergyLevel, tol: f64) -> Result<f64> {
    let mode = spec.mode();
    let phi = phi_factors(h, mode)?;
    let mut total = 0.0;
    for (&(zone, arc), factor) in zone_arcs(mode).iter().zip(phi) {
        let zone = ZoneId::new(zone, mode)?;
        let part = arc_integral(
            Arc::new(arc),
            h,
            |x, y| {
                let (f, g) = spec.field(zone, x, y);
                (g, -f)
            },
            tol,
        )?;
        total += factor * part;
    }
    Ok(total)
}

/// Exact reduced form of `M`.
///
/// Four-zone: `α(h)I₀₁ + β(h)I₁₁ + γ(h)J₀₀ + δ(h)J₀₁ + φ(u)`.
/// Two-zone: `α(h)U₀₀ + β(h)U₀₁ + γ(h)V₀₀ + δ(h)V₀₁ + φ(u)`; the lower mode is
/// carried in the frame rotated by a half turn, where it is an upper-mode form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalForm {
    pub mode: Mode,
    pub n: u32,
    pub alpha: Poly,
    pub beta: Poly,
    pub gamma: Poly,
    pub delta: Poly,
    pub phi: Poly,
}

fn floor_half(k: i64) -> i64 {
    k.div_euclid(2)
}

/// One violated degree bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeViolation {
    pub polynomial: &'static str,
    pub degree: usize,
    pub bound: i64,
}

impl CanonicalForm {
    /// Degree bounds `(α, β, γ, δ, φ)`; a negative bound means "identically zero".
    pub fn degree_bounds(mode: Mode, n: u32) -> [i64; 5] {
        let n = n as i64;
        match mode {
            Mode::FourZone => [
                floor_half(n - 1),
                floor_half(n - 2),
                floor_half(n),
                floor_half(n - 1),
                2 * n + if n % 2 == 0 { 2 } else { 1 },
            ],
            _ => [floor_half(n), floor_half(n - 1), floor_half(n), floor_half(n - 1), 2 * n + 1],
        }
    }

    pub fn degree_violations(&self) -> Vec<DegreeViolation> {
        let bounds = Self::degree_bounds(self.mode, self.n);
        let polys = [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("delta", &self.delta),
            ("phi", &self.phi),
        ];
        let mut out: Vec<_> = polys
            .iter()
            .zip(bounds)
            .filter(|((_, p), b)| !p.degree_within(*b))
            .map(|((name, p), bound)| DegreeViolation {
                polynomial: name,
                degree: p.degree().unwrap_or(0),
                bound,
            })
            .collect();
        if self.mode.is_two_zone() {
            // φ = u³·ψ(u²): only odd powers from u³ on
            if let Some((k, _)) = self
                .phi
                .coeffs()
                .iter()
                .enumerate()
                .find(|(k, c)| !c.is_zero() && (k % 2 == 0 || *k < 3))
            {
                out.push(DegreeViolation {
                    polynomial: "phi (u³·even structure)",
                    degree: k,
                    bound: -1,
                });
            }
        }
        out
    }

    pub fn eval(&self, h: EnergyLevel) -> f64 {
        let hv = h.value();
        let u = u_of_h(h).value();
        let b = crate::basis::base_integrals(h);
        let (b0, b1, b2, b3) = match self.mode {
            Mode::FourZone => (b.i01, b.i11, b.j00, b.j01),
            _ => (b.u00, b.u01, b.v00, b.v01),
        };
        self.alpha.eval(hv) * b0
            + self.beta.eval(hv) * b1
            + self.gamma.eval(hv) * b2
            + self.delta.eval(hv) * b3
            + self.phi.eval(u)
    }
}

struct Accumulator {
    slots: BTreeMap<BaseIntegral, Poly>,
    phi: Poly,
    h_in_u: Vec<Poly>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            slots: BTreeMap::new(),
            phi: Poly::zero(),
            // (u⁴ + u²)^0
            h_in_u: vec![Poly::constant(rat_int(1))],
        }
    }

    fn h_power_in_u(&mut self, p: usize) -> &Poly {
        let h = Poly::from_coeffs(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0), rat_int(1)]);
        while self.h_in_u.len() <= p {
            let next = self.h_in_u.last().expect("nonempty") * &h;
            self.h_in_u.push(next);
        }
        &self.h_in_u[p]
    }

    fn add_boundary(&mut self, c: &Rational, h_power: u32, u_power: u32) {
        let term = self.h_power_in_u(h_power as usize).shift(u_power as usize).scale(c);
        self.phi += &term;
    }

    fn add_moment(&mut self, c: &Rational, m: &ReducedMoment) {
        if c.is_zero() {
            return;
        }
        if let Some(b) = &m.base {
            self.slots
                .entry(b.base)
                .or_insert_with(Poly::zero)
                .add_term(&(&b.coeff * c), b.h_power as usize);
        }
        for (k, p, u_pow) in m.boundary_terms() {
            self.add_boundary(&(k * c), p, u_pow);
        }
    }

    fn take(&mut self, base: BaseIntegral) -> Poly {
        self.slots.remove(&base).unwrap_or_else(Poly::zero)
    }
}

fn family_for(mode: Mode, zone: u8) -> Family {
    match (mode, zone) {
        (Mode::FourZone, 1) => Family::I,
        (Mode::FourZone, 2) => Family::J,
        (Mode::FourZone, 3) => Family::ITilde,
        (Mode::FourZone, 4) => Family::JTilde,
        (_, 1) => Family::U,
        (_, _) => Family::V,
    }
}

/// Assembles the exact reduced form.
///
/// For each zone, `∫ x^i y^j dy = -(i/(j+1))·K[i-1,j+1] + [x^i y^(j+1)]/(j+1)`
/// turns the `f_k` part into `dx`-moments plus corner terms, and every moment
/// is then replaced by its exact reduction.
pub fn canonical_form(spec: &PerturbationSpec) -> Result<CanonicalForm> {
    let original_mode = spec.mode();
    let rotated;
    let working = if original_mode == Mode::TwoZoneLower {
        rotated = spec.rotated_half_turn();
        &rotated
    } else {
        spec
    };
    let mode = working.mode();
    let n = working.degree();
    let exact = |v: f64| {
        rat_from_f64(v).ok_or_else(|| Error::InvalidSpec(format!("coefficient {v} is not finite")))
    };

    let mut acc = Accumulator::new();
    for (zone, coeffs) in working.zones() {
        let family = family_for(mode, zone.index());
        let arc = family.arc();
        for (i, j, b) in coeffs.b.nonzero() {
            acc.add_moment(&exact(b)?, &reduce_moment(MomentId::new(family, i, j)));
        }
        for (i, j, a) in coeffs.a.nonzero() {
            // -a·∫ x^i y^j dy
            let a = exact(a)?;
            if i >= 1 {
                let c = &a * rat(i as i64, (j + 1) as i64);
                acc.add_moment(&c, &reduce_moment(MomentId::new(family, i - 1, j + 1)));
            }
            let e = endpoint_difference(arc, i, j + 1);
            if e != 0 {
                let c = -&a * rat(e, (j + 1) as i64);
                acc.add_boundary(&c, 0, i + 2 * j + 2);
            }
        }
    }

    use BaseIntegral::*;
    let (alpha, beta, gamma, delta) = match mode {
        Mode::FourZone => (acc.take(I01), acc.take(I11), acc.take(J00), acc.take(J01)),
        _ => (acc.take(U00), acc.take(U01), acc.take(V00), acc.take(V01)),
    };
    debug_assert!(acc.slots.values().all(Poly::is_zero), "stray base integrals");
    Ok(CanonicalForm {
        mode: original_mode,
        n,
        alpha,
        beta,
        gamma,
        delta,
        phi: acc.phi,
    })
}

/// `M(u) = u·P(u) + (u⁴+u²)·Qc(u⁴+u²)·W(u)`; `P` has coefficients in `ℚ + ℚπ`.
///
/// Evaluation uses `W = π/4 - (π/4 - W)`: the `π/4` part is folded into one
/// polynomial `A(u)` so that `M = A(u) - (u⁴+u²)Qc(u⁴+u²)·(π/4 - W(u))` keeps full
/// relative accuracy as `u → 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UForm {
    pub mode: Mode,
    pub n: u32,
    pub p: PiPoly,
    pub qc: Poly,
    #[serde(skip)]
    p_f64: Vec<f64>,
    #[serde(skip)]
    qc_f64: Vec<f64>,
    #[serde(skip)]
    a_f64: Vec<f64>,
    #[serde(skip)]
    vq_f64: Vec<f64>,
}

/// Substitutes `h = u⁴ + u²` into a polynomial in `h`.
pub fn compose_h(p: &Poly) -> Poly {
    let h = Poly::from_coeffs(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0), rat_int(1)]);
    p.coeffs()
        .iter()
        .enumerate()
        .fold(Poly::zero(), |acc, (k, c)| &acc + &h.pow(k as u32).scale(c))
}

/// Substitutes the closed forms of the base integrals and `h = u⁴ + u²`.
///
/// Four-zone: `I₀₁ = h(π/2 - 2W)`, `I₁₁ = (2/3)u⁶`, `J₀₀ = -2u`, `J₀₁ = 2hW`.
/// Two-zone: `U₀₀ = -2u`, `V₀₀ = 2u`, `U₀₁ = πh - 2hW`, `V₀₁ = 2hW`.
pub fn u_form(cf: &CanonicalForm) -> UForm {
    let h_u = compose_h(&Poly::monomial(rat_int(1), 1));
    let alpha = compose_h(&cf.alpha);
    let beta = compose_h(&cf.beta);
    let gamma = compose_h(&cf.gamma);
    let two = rat_int(2);
    let (rational, pi, qc) = match cf.mode {
        Mode::FourZone => {
            let rational = &(&beta.shift(6).scale(&rat(2, 3)) - &gamma.shift(1).scale(&two)) + &cf.phi;
            let pi = (&h_u * &alpha).scale(&rat(1, 2));
            let qc = (&cf.delta - &cf.alpha).scale(&two);
            (rational, pi, qc)
        }
        _ => {
            let rational = &(&gamma - &alpha).shift(1).scale(&two) + &cf.phi;
            let pi = &h_u * &beta;
            let qc = (&cf.delta - &cf.beta).scale(&two);
            (rational, pi, qc)
        }
    };
    let p = PiPoly {
        rational: rational.unshift(1).expect("M(u) vanishes at u = 0"),
        pi: pi.unshift(1).expect("M(u) vanishes at u = 0"),
    };
    UForm::new(cf.mode, cf.n, p, qc)
}

impl UForm {
    pub fn new(mode: Mode, n: u32, p: PiPoly, qc: Poly) -> Self {
        let p_f64 = p.to_f64();
        let qc_f64 = qc.to_f64();
        let vq = compose_h(&qc.shift(1));
        let a = PiPoly {
            rational: p.rational.shift(1),
            pi: &p.pi.shift(1) + &vq.scale(&rat(1, 4)),
        };
        Self {
            mode,
            n,
            p,
            qc,
            p_f64,
            qc_f64,
            a_f64: a.to_f64(),
            vq_f64: vq.to_f64(),
        }
    }

    pub fn p_coeffs(&self) -> &[f64] {
        &self.p_f64
    }

    pub fn qc_coeffs(&self) -> &[f64] {
        &self.qc_f64
    }

    /// Coefficients in `u` of `M(u)` with `W` replaced by `π/4`.
    pub fn quarter_disk_coeffs(&self) -> &[f64] {
        &self.a_f64
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.qc.is_zero()
    }

    /// `M` at `u > 0`.
    pub fn eval_u(&self, u: f64) -> f64 {
        horner(&self.a_f64, u) - horner(&self.vq_f64, u) * w_deficit(u)
    }

    /// Sum of the absolute values of every term; sets the rounding floor of [`Self::eval_u`].
    pub fn magnitude_u(&self, u: f64) -> f64 {
        let abs_horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k.abs());
        abs_horner(&self.a_f64, u) + abs_horner(&self.vq_f64, u) * w_deficit(u).abs()
    }
}

/// `M(h)` through the `u`-space form.
pub fn melnikov_canonical(uf: &UForm, h: EnergyLevel) -> f64 {
    uf.eval_u(u_of_h(h).value())
}

/// Canonical and `u`-space forms in one call.
pub fn reduce(spec: &PerturbationSpec) -> Result<(CanonicalForm, UForm)> {
    let cf = canonical_form(spec)?;
    let uf = u_form(&cf);
    Ok((cf, uf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::Table::{A, B};
    use crate::quadrature::integrate_1d;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn lvl(h: f64) -> EnergyLevel {
        EnergyLevel::new(h).unwrap()
    }

    #[test]
    fn w_reference_values() {
        assert!((eval_w(0.0) - FRAC_PI_4).abs() < 1e-16);
        assert!((eval_w(1.0) - (0.25 + PI / 8.0)).abs() < 1e-15);
        assert!(eval_w(1e9) < 1e-8);
        for u in [0.01_f64, 0.3, 1.0, 4.0] {
            let upper = 1.0 / (1.0 + u * u).sqrt();
            let q = integrate_1d(|t| (1.0 - t * t).sqrt(), 0.0, upper, 1e-13).unwrap();
            assert!((eval_w(u) - q).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn w_deficit_is_continuous_and_matches_taylor() {
        let below = w_deficit(0.05);
        let above = 0.5 * (0.05_f64.atan() - 0.05 / (1.0 + 0.0025));
        assert!((below - above).abs() < 1e-17);
        for u in [1e-6, 1e-4, 1e-2, 0.1] {
            let rem = (w_deficit(u) - u * u * u / 3.0).abs() / u.powi(4);
            assert!(rem < 0.41 * u + 1e-9, "u={u} rem={rem}");
        }
    }

    #[test]
    fn phi_factors_are_one() {
        for h in [1e-3, 0.01, 2.0, 1e3] {
            for mode in Mode::ALL {
                for f in phi_factors(lvl(h), mode).unwrap() {
                    assert!((f - 1.0).abs() < 1e-12);
                }
            }
        }
        let a = corner_points(lvl(2.0)).a;
        assert_eq!(transversal_bracket(center_gradient, a, Curve::Upper), 3.0);
    }

    #[test]
    fn phi_factors_see_distinct_hamiltonians() {
        fn doubled(x: f64, y: f64) -> (f64, f64) {
            (2.0 * x, 2.0 * y)
        }
        let grads: [Gradient; 4] = [center_gradient, center_gradient, center_gradient, doubled];
        let phi = phi_factors_with(grads, lvl(2.0), Mode::FourZone).unwrap();
        // zone 4 sits in the denominator at A and the numerator at D
        assert!((phi[3] - 0.5).abs() < 1e-15);
        assert!((phi[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direct_reference_values() {
        let h = lvl(2.0);
        let zero = PerturbationSpec::zero(2, Mode::FourZone);
        assert_eq!(melnikov_direct(&zero, h).unwrap(), 0.0);
        let s = PerturbationSpec::zero(1, Mode::FourZone).with(B, 1, 0, 1, 1.0).unwrap();
        assert!((melnikov_direct(&s, h).unwrap() - (PI / 2.0 - 1.0)).abs() < 1e-11);
        let s = PerturbationSpec::zero(1, Mode::FourZone).with(A, 1, 0, 0, 1.0).unwrap();
        assert!((melnikov_direct(&s, h).unwrap() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn n1_four_zone_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = PerturbationSpec::random(1, Mode::FourZone, &mut rng);
        let cf = canonical_form(&s).unwrap();
        let q = |t, z, i, j| rat_from_f64(s.get(t, z, i, j)).unwrap();
        let alpha = q(B, 1, 0, 1) + q(B, 3, 0, 1) + q(A, 1, 1, 0) + q(A, 3, 1, 0);
        // J̃₀₀ = -J₀₀ and J̃₀₁ = J₀₁ on the top arc
        let gamma = q(B, 2, 0, 0) - q(B, 4, 0, 0);
        let delta = q(B, 2, 0, 1) + q(B, 4, 0, 1) + q(A, 2, 1, 0) + q(A, 4, 1, 0);
        let phi2 = (q(A, 1, 0, 0) - q(A, 3, 0, 0)) * rat_int(2);
        let phi3 = (q(A, 1, 1, 0) - q(A, 2, 1, 0) + q(A, 3, 1, 0) - q(A, 4, 1, 0)) * rat_int(2);
        assert_eq!(cf.alpha, Poly::constant(alpha));
        assert!(cf.beta.is_zero());
        assert_eq!(cf.gamma, Poly::constant(gamma));
        assert_eq!(cf.delta, Poly::constant(delta));
        assert_eq!(cf.phi, Poly::from_coeffs(vec![rat_int(0), rat_int(0), phi2, phi3]));
    }

    #[test]
    fn zero_spec_gives_zero_forms() {
        for mode in Mode::ALL {
            let (cf, uf) = reduce(&PerturbationSpec::zero(3, mode)).unwrap();
            assert!(cf.alpha.is_zero() && cf.beta.is_zero() && cf.gamma.is_zero());
            assert!(cf.delta.is_zero() && cf.phi.is_zero());
            assert!(uf.is_zero());
            assert_eq!(melnikov_canonical(&uf, lvl(1.3)), 0.0);
        }
    }

    #[test]
    fn n1_two_zone_u_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = PerturbationSpec::random(1, Mode::TwoZoneUpper, &mut rng);
        let (_, uf) = reduce(&s).unwrap();
        let g = |t, z, i, j| s.get(t, z, i, j);
        let p = uf.p_coeffs();
        // M(u) = 2(b⁴₀₀-b¹₀₀)u + π(b¹₀₁+a¹₁₀)(u²+u⁴) + 2(a¹₁₀-a⁴₁₀)u³ + λ(u⁴+u²)W
        assert!((p[0] - 2.0 * (g(B, 4, 0, 0) - g(B, 1, 0, 0))).abs() < 1e-14);
        let c2 = PI * (g(B, 1, 0, 1) + g(A, 1, 1, 0));
        assert!((p[1] - c2).abs() < 1e-14 && (p[3] - c2).abs() < 1e-14);
        assert!((p[2] - 2.0 * (g(A, 1, 1, 0) - g(A, 4, 1, 0))).abs() < 1e-14);
        let lam = 2.0 * (g(B, 4, 0, 1) + g(A, 4, 1, 0) - g(B, 1, 0, 1) - g(A, 1, 1, 0));
        assert_eq!(uf.qc_coeffs().len(), 1);
        assert!((uf.qc_coeffs()[0] - lam).abs() < 1e-14);
    }

    #[test]
    fn canonical_matches_direct_for_small_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for mode in Mode::ALL {
            for n in 0..=4 {
                let s = PerturbationSpec::random(n, mode, &mut rng);
                let (cf, uf) = reduce(&s).unwrap();
                assert!(cf.degree_violations().is_empty(), "{:?}", cf.degree_violations());
                for h in [0.05, 0.5, 2.0, 5.0, 50.0] {
                    let h = lvl(h);
                    let direct = melnikov_direct(&s, h).unwrap();
                    let via_cf = cf.eval(h);
                    let via_u = melnikov_canonical(&uf, h);
                    let tol = 1e-8 * (1.0 + direct.abs());
                    assert!((via_cf - direct).abs() < tol, "{mode} n={n} h={h:?}: {via_cf} vs {direct}");
                    assert!((via_u - direct).abs() < tol, "{mode} n={n} h={h:?}: {via_u} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn n2_degree_bounds() {
        assert_eq!(CanonicalForm::degree_bounds(Mode::FourZone, 2), [0, 0, 1, 0, 6]);
        assert_eq!(CanonicalForm::degree_bounds(Mode::FourZone, 1), [0, -1, 0, 0, 3]);
        assert_eq!(CanonicalForm::degree_bounds(Mode::TwoZoneUpper, 1), [0, 0, 0, 0, 3]);
    }

    #[test]
    fn melnikov_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for mode in Mode::ALL {
            let s1 = PerturbationSpec::random(3, mode, &mut rng);
            let s2 = PerturbationSpec::random(3, mode, &mut rng);
            let sum = s1.add(&s2).unwrap();
            for h in [0.2, 3.0] {
                let h = lvl(h);
                let lhs = melnikov_direct(&sum, h).unwrap();
                let rhs = melnikov_direct(&s1, h).unwrap() + melnikov_direct(&s2, h).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }
}
