//! Positive zeros of `M(u)`: counting, the known upper bounds, and the
//! constructive degree-one configurations attaining them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{h_of_u, Mode, UCoord};
use crate::melnikov::{reduce, UForm};
use crate::perturbation::{PerturbationSpec, Table};

/// Odd/even discrimination only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    OddSimple,
    EvenSuspected,
}

impl Multiplicity {
    pub fn weight(self) -> u32 {
        match self {
            Multiplicity::OddSimple => 1,
            Multiplicity::EvenSuspected => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub u: f64,
    pub h: f64,
    /// Width of the final bracket; for even-suspected zeros, of the last refinement window.
    pub width: f64,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub zeros: Vec<Zero>,
    /// Distinct zeros found in `(0, u_max]`.
    pub count: usize,
    /// `count` with even-suspected zeros weighted twice.
    pub multiplicity_total: u32,
    pub bound: Option<u32>,
    pub bound_satisfied: bool,
    pub u_max: f64,
    /// Sign changes between `u_max` and `64·u_max`; not included in `count`.
    pub tail_sign_changes: usize,
    pub warnings: Vec<String>,
}

/// `H(n)`: 4 (four-zone) or 3 (two-zone) for `n = 1`, otherwise `2n + 5⌊(n-1)/2⌋ + 4`.
pub fn theoretical_bound(n: u32, mode: Mode) -> Result<u32> {
    match (n, mode) {
        (0, _) => Err(Error::Unsupported("the bound is stated for n ≥ 1".into())),
        (1, Mode::FourZone) => Ok(4),
        (1, _) => Ok(3),
        (n, _) => Ok(2 * n + 5 * ((n - 1) / 2) + 4),
    }
}

/// Tuning of [`count_zeros_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub grid_points: usize,
    /// Each refinement level samples this many sub-intervals of the window.
    pub refine_factor: usize,
    pub max_depth: u32,
    /// Smallest scanned `u`, relative to `u_max`.
    pub u_min_ratio: f64,
    pub tail_factor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            refine_factor: 4,
            max_depth: 8,
            u_min_ratio: 1e-6,
            tail_factor: 64.0,
        }
    }
}

/// Evaluates `M(u)` and classifies its sign against the rounding floor.
struct Sampler<'a> {
    uf: &'a UForm,
}

impl Sampler<'_> {
    const FLOOR: f64 = 64.0 * f64::EPSILON;

    fn value(&self, u: f64) -> f64 {
        self.uf.eval_u(u)
    }

    fn floor(&self, u: f64) -> f64 {
        Self::FLOOR * self.uf.magnitude_u(u)
    }

    /// `(M(u), sign)` with sign 0 when `|M|` is below the rounding floor.
    fn sample(&self, u: f64) -> (f64, i8) {
        let m = self.value(u);
        let s = if m.abs() <= self.floor(u) { 0 } else if m > 0.0 { 1 } else { -1 };
        (m, s)
    }

    /// Bisects a sign change on `[a, b]` (`sign(a) = sa ≠ 0`) to width `tol`.
    fn bisect(&self, mut a: f64, mut b: f64, sa: i8, tol: f64) -> (f64, f64) {
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            match self.sample(mid).1 {
                0 => return (mid, b - a),
                s if s == sa => a = mid,
                _ => b = mid,
            }
        }
        (0.5 * (a + b), b - a)
    }

    fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        (0..=points).map(|k| lo + (hi - lo) * k as f64 / points as f64).collect()
    }
}

fn scan_grid(u_max: f64, opts: &ScanOptions) -> Vec<f64> {
    let half = opts.grid_points / 2;
    let lo = u_max * opts.u_min_ratio;
    let ratio = (u_max / lo).ln();
    let mut g: Vec<f64> = (0..half)
        .map(|k| lo * (ratio * k as f64 / half as f64).exp())
        .chain((1..=opts.grid_points - half).map(|k| u_max * k as f64 / (opts.grid_points - half) as f64))
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    if let Some(last) = g.last_mut() {
        *last = u_max;
    }
    g
}

/// Counts positive zeros of `M(u)` on `(0, u_max]`, bisecting brackets to width `tol`.
pub fn count_zeros(uf: &UForm, u_max: f64, tol: f64) -> Result<ZeroReport> {
    count_zeros_with(uf, u_max, tol, &ScanOptions::default())
}

pub fn count_zeros_with(uf: &UForm, u_max: f64, tol: f64, opts: &ScanOptions) -> Result<ZeroReport> {
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::Domain(format!("u_max must be positive, got {u_max}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let bound = theoretical_bound(uf.n, uf.mode).ok();
    let mut warnings = Vec::new();
    if uf.is_zero() {
        return Ok(ZeroReport {
            zeros: Vec::new(),
            count: 0,
            multiplicity_total: 0,
            bound,
            bound_satisfied: true,
            u_max,
            tail_sign_changes: 0,
            warnings: vec!["M vanishes identically".into()],
        });
    }
    let sampler = Sampler { uf };
    let grid = scan_grid(u_max, opts);
    let samples: Vec<(f64, i8)> = grid.iter().map(|&u| sampler.sample(u)).collect();

    let mut zeros = Vec::new();
    // sign changes, allowing unresolved samples inside the bracket
    let mut last: Option<usize> = None;
    for k in 0..grid.len() {
        let s = samples[k].1;
        if s == 0 {
            continue;
        }
        if let Some(j) = last {
            let sj = samples[j].1;
            if k - j > 1 {
                resolve_gap(&sampler, grid[j], grid[k], sj, s, tol, opts, &mut zeros)?;
            } else if sj != s {
                let (u, width) = sampler.bisect(grid[j], grid[k], sj, tol);
                zeros.push(odd_zero(u, width));
            }
        } else if k > 0 {
            warnings.push(format!(
                "|M| below rounding floor on (0, {:.3e}); no zeros reported there",
                grid[k]
            ));
        }
        last = Some(k);
    }
    if last.is_none() {
        return Err(Error::Resolution { lo: grid[0], hi: u_max });
    }

    // tangential zeros: local minima of |M| without a sign change
    for k in 1..grid.len() - 1 {
        let (m0, s0) = samples[k - 1];
        let (m1, s1) = samples[k];
        let (m2, s2) = samples[k + 1];
        if s1 == 0 || s0 != s1 || s2 != s1 || m1.abs() > m0.abs() || m1.abs() > m2.abs() {
            continue;
        }
        refine_minimum(&sampler, grid[k - 1], grid[k + 1], s1, tol, opts, &mut zeros);
    }
    zeros.sort_by(|a, b| a.u.total_cmp(&b.u));
    zeros.dedup_by(|a, b| (a.u - b.u).abs() <= tol.max(a.width).max(b.width));

    let tail_sign_changes = tail_check(&sampler, u_max, opts);
    if tail_sign_changes > 0 {
        warnings.push(format!(
            "{tail_sign_changes} sign change(s) of M in ({u_max}, {}]",
            u_max * opts.tail_factor
        ));
    }
    let multiplicity_total = zeros.iter().map(|z| z.multiplicity.weight()).sum();
    Ok(ZeroReport {
        count: zeros.len(),
        multiplicity_total,
        bound,
        bound_satisfied: bound.is_none_or(|b| multiplicity_total <= b),
        zeros,
        u_max,
        tail_sign_changes,
        warnings,
    })
}

fn odd_zero(u: f64, width: f64) -> Zero {
    Zero {
        u,
        h: h_of_u(UCoord::new(u).expect("positive u")).value(),
        width,
        multiplicity: Multiplicity::OddSimple,
    }
}

/// Brackets separated by unresolved samples: refine until every sub-bracket
/// has known signs, or report the cluster.
#[allow(clippy::too_many_arguments)]
fn resolve_gap(
    sampler: &Sampler,
    a: f64,
    b: f64,
    sa: i8,
    sb: i8,
    tol: f64,
    opts: &ScanOptions,
    zeros: &mut Vec<Zero>,
) -> Result<()> {
    let mut points = 2 * opts.refine_factor;
    for _ in 0..opts.max_depth {
        let g = Sampler::grid(a, b, points);
        let s: Vec<i8> = g.iter().map(|&u| sampler.sample(u).1).collect();
        let known: Vec<usize> = (0..g.len()).filter(|&k| s[k] != 0).collect();
        let gaps = known.windows(2).any(|w| w[1] - w[0] > 1);
        if !gaps {
            for w in known.windows(2) {
                if s[w[0]] != s[w[1]] {
                    let (u, width) = sampler.bisect(g[w[0]], g[w[1]], s[w[0]], tol);
                    zeros.push(odd_zero(u, width));
                }
            }
            return Ok(());
        }
        points *= opts.refine_factor;
    }
    if sa != sb {
        // a sign change certifies an odd zero, located to the cluster width
        zeros.push(odd_zero(0.5 * (a + b), b - a));
        return Ok(());
    }
    Err(Error::Resolution { lo: a, hi: b })
}

fn refine_minimum(sampler: &Sampler, mut a: f64, mut b: f64, sign: i8, tol: f64, opts: &ScanOptions, zeros: &mut Vec<Zero>) {
    let points = 2 * opts.refine_factor;
    let mut best = (0.5 * (a + b), f64::INFINITY);
    for _ in 0..opts.max_depth {
        let g = Sampler::grid(a, b, points);
        let s: Vec<(f64, i8)> = g.iter().map(|&u| sampler.sample(u)).collect();
        if let Some(k) = s.iter().position(|&(_, sk)| sk == -sign) {
            // two crossings hidden between grid samples
            let first = (0..k).rev().find(|&j| s[j].1 == sign).unwrap_or(0);
            let (u1, w1) = sampler.bisect(g[first], g[k], sign, tol);
            zeros.push(odd_zero(u1, w1));
            if let Some(back) = (k + 1..g.len()).find(|&j| s[j].1 == sign) {
                let last = (k..back).rev().find(|&j| s[j].1 == -sign).unwrap_or(k);
                let (u2, w2) = sampler.bisect(g[last], g[back], -sign, tol);
                zeros.push(odd_zero(u2, w2));
            }
            return;
        }
        let k = (0..g.len())
            .min_by(|&i, &j| s[i].0.abs().total_cmp(&s[j].0.abs()))
            .expect("nonempty grid");
        best = (g[k], s[k].0.abs());
        if s[k].1 == 0 {
            break;
        }
        let step = (b - a) / points as f64;
        a = (g[k] - step).max(a);
        b = (g[k] + step).min(b);
        if b - a <= tol {
            break;
        }
    }
    let (u, m) = best;
    let threshold = sampler.floor(u).max(tol * sampler.uf.magnitude_u(u));
    if m <= threshold {
        zeros.push(Zero {
            u,
            h: h_of_u(UCoord::new(u).expect("positive u")).value(),
            width: b - a,
            multiplicity: Multiplicity::EvenSuspected,
        });
    }
}

fn tail_check(sampler: &Sampler, u_max: f64, opts: &ScanOptions) -> usize {
    let n = 512;
    let ratio = opts.tail_factor.ln();
    let signs: Vec<i8> = (0..=n)
        .map(|k| sampler.sample(u_max * (ratio * k as f64 / n as f64).exp()).1)
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Low-order coefficients of degree-one forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaCoeffs {
    /// `M(u) = λ₄u⁴ + λ₃u³ + λ₂u² + λ₁u + λ₀(u⁴+u²)W(u)`
    /// `   = λ₁u + μ₂u² + λ₃u³ + μ₄u⁴ + μ₅u⁵ + O(u⁷)`.
    FourZone {
        lambda: [f64; 5],
        mu2: f64,
        mu4: f64,
        mu5: f64,
    },
    /// `M(u) = u(τ₀ + τ₁(u + u³) + τ₂u² + τ₄u⁴ + O(u⁶))`.
    TwoZone { tau0: f64, tau1: f64, tau2: f64, tau4: f64 },
}

impl LambdaCoeffs {
    /// Coordinates matched during realization: `(λ₁, μ₂, λ₃, μ₄, μ₅)` or `(τ₀, τ₁, τ₂, τ₄)`.
    pub fn series(&self) -> Vec<f64> {
        match *self {
            LambdaCoeffs::FourZone { lambda, mu2, mu4, mu5 } => vec![lambda[1], mu2, lambda[3], mu4, mu5],
            LambdaCoeffs::TwoZone { tau0, tau1, tau2, tau4 } => vec![tau0, tau1, tau2, tau4],
        }
    }
}

pub fn lambda_coeffs(spec: &PerturbationSpec) -> Result<LambdaCoeffs> {
    if spec.degree() != 1 {
        return Err(Error::Unsupported(format!(
            "λ/τ coefficients are defined for n = 1, got n = {}",
            spec.degree()
        )));
    }
    let (_, uf) = reduce(spec)?;
    Ok(lambda_from_uform(&uf))
}

fn lambda_from_uform(uf: &UForm) -> LambdaCoeffs {
    let p = |k: usize| uf.p_coeffs().get(k).copied().unwrap_or(0.0);
    let l0 = uf.qc_coeffs().first().copied().unwrap_or(0.0);
    match uf.mode {
        Mode::FourZone => LambdaCoeffs::FourZone {
            lambda: [l0, p(0), p(1), p(2), p(3)],
            mu2: p(1) + PI * l0 / 4.0,
            mu4: p(3) + PI * l0 / 4.0,
            mu5: -l0 / 3.0,
        },
        _ => LambdaCoeffs::TwoZone {
            tau0: p(0),
            tau1: p(1) + PI * l0 / 4.0,
            tau2: p(2),
            tau4: -l0 / 3.0,
        },
    }
}

/// Coefficients varied during realization; all others stay zero.
pub fn free_coefficients(mode: Mode) -> &'static [(Table, u8, u32, u32)] {
    use Table::{A, B};
    match mode {
        Mode::FourZone => &[(B, 2, 0, 1), (B, 2, 0, 0), (A, 1, 0, 0), (A, 2, 1, 0), (B, 1, 0, 1)],
        _ => &[(B, 4, 0, 1), (B, 1, 0, 1), (A, 1, 1, 0), (B, 1, 0, 0)],
    }
}

fn unit_spec(mode: Mode, c: (Table, u8, u32, u32)) -> PerturbationSpec {
    PerturbationSpec::zero(1, mode)
        .with(c.0, c.1, c.2, c.3, 1.0)
        .expect("free coefficient within the n = 1 triangle")
}

/// Jacobian of the realization coordinates with respect to the free coefficients.
///
/// The lower two-zone mode shares the upper-mode map (it is realized in the
/// half-turn frame).
pub fn jacobian(mode: Mode) -> Result<DMatrix<f64>> {
    let mode = if mode == Mode::TwoZoneLower { Mode::TwoZoneUpper } else { mode };
    let cols: Vec<Vec<f64>> = free_coefficients(mode)
        .iter()
        .map(|&c| lambda_coeffs(&unit_spec(mode, c)).map(|l| l.series()))
        .collect::<Result<_>>()?;
    let n = cols.len();
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

fn spec_from_free(mode: Mode, x: &DVector<f64>) -> Result<PerturbationSpec> {
    let mut spec = PerturbationSpec::zero(1, mode);
    for (&(t, z, i, j), &v) in free_coefficients(mode).iter().zip(x.iter()) {
        spec.set(t, z, i, j, v)?;
    }
    Ok(spec)
}

/// Coefficients of `c·∏(u - rᵢ)` (ascending) for four-zone, or of
/// `∏(u - rᵢ)·(Au + B)` with the `u` and `u³` coefficients equal for two-zone,
/// scaled so the largest coefficient has magnitude 1.
pub fn target_series(targets: &[f64], mode: Mode) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &r in targets {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= r * c;
        }
        poly = next;
    }
    let series = if mode == Mode::FourZone {
        poly
    } else {
        // ∏(u - rᵢ) = u³ - e₁u² + e₂u - e₃
        let (e1, e2, e3) = (-poly[2], poly[1], -poly[0]);
        let (a, b) = (1.0, (e1 - e3) / (1.0 - e2));
        let mut out = [0.0; 5];
        for (k, &c) in poly.iter().enumerate() {
            out[k] += b * c;
            out[k + 1] += a * c;
        }
        // τ order: (u⁰, u¹ = u³, u², u⁴)
        vec![out[0], out[1], out[2], out[4]]
    };
    let scale = series.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    series.iter().map(|c| c / scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeOptions {
    pub u_cap: f64,
    pub max_retries: u32,
    /// Relative distance allowed between a realized zero and its target.
    pub target_tol: f64,
    /// Re-solve so that the full `M` vanishes at the targets when the truncated-series inversion misses them.
    pub collocation: bool,
    pub u_max: f64,
    pub tol: f64,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            u_cap: 0.5,
            max_retries: 6,
            target_tol: 0.1,
            collocation: true,
            u_max: 10.0,
            tol: 1e-12,
        }
    }
}

/// A realized configuration and the report that certified it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Realization {
    pub spec: PerturbationSpec,
    pub targets: Vec<f64>,
    pub report: ZeroReport,
    pub method: RealizationMethod,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealizationMethod {
    SeriesInversion,
    Collocation,
}

pub fn realize_max_zeros(targets: &[f64], mode: Mode) -> Result<PerturbationSpec> {
    realize_with(targets, mode, &RealizeOptions::default()).map(|r| r.spec)
}

/// Builds a degree-one spec whose `M` has a zero near each target, verifying
/// the zero set on the full `M` and halving the targets on failure.
pub fn realize_with(targets: &[f64], mode: Mode, opts: &RealizeOptions) -> Result<Realization> {
    let expected = theoretical_bound(1, mode)? as usize;
    if targets.len() != expected {
        return Err(Error::InvalidSpec(format!(
            "{mode} needs exactly {expected} targets, got {}",
            targets.len()
        )));
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.iter().any(|&r| !(r > 0.0 && r <= opts.u_cap)) {
        return Err(Error::InvalidSpec(format!("targets must lie in (0, {}]", opts.u_cap)));
    }
    if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-9 * w[1]) {
        return Err(Error::InvalidSpec("targets must be distinct".into()));
    }
    if mode == Mode::TwoZoneLower {
        let mut r = realize_with(&sorted, Mode::TwoZoneUpper, opts)?;
        r.spec = r.spec.rotated_half_turn();
        return Ok(r);
    }

    let jac = jacobian(mode)?.lu();
    let mut last = None;
    for attempt in 0..=opts.max_retries {
        let scaled: Vec<f64> = sorted.iter().map(|r| r * 0.5_f64.powi(attempt as i32)).collect();
        let rhs = DVector::from_vec(target_series(&scaled, mode));
        let x = jac.solve(&rhs).ok_or(Error::Singular)?;
        let spec = spec_from_free(mode, &x)?;
        let report = verify(&spec, &scaled, opts)?;
        if accepted(&report, &scaled, opts) {
            return Ok(Realization {
                spec,
                targets: scaled,
                report,
                method: RealizationMethod::SeriesInversion,
                attempts: attempt + 1,
            });
        }
        last = Some(report);
        if opts.collocation {
            let spec = collocate(mode, &scaled, rhs[rhs.len() - 1])?;
            let report = verify(&spec, &scaled, opts)?;
            if accepted(&report, &scaled, opts) {
                return Ok(Realization {
                    spec,
                    targets: scaled,
                    report,
                    method: RealizationMethod::Collocation,
                    attempts: attempt + 1,
                });
            }
            last = Some(report);
        }
    }
    Err(Error::Realization {
        attempts: (opts.max_retries + 1) as usize,
        last: Box::new(last),
    })
}

/// Solves `M(rᵢ) = 0` at every target with the leading series coordinate fixed.
fn collocate(mode: Mode, targets: &[f64], leading: f64) -> Result<PerturbationSpec> {
    let free = free_coefficients(mode);
    let forms: Vec<UForm> = free
        .iter()
        .map(|&c| reduce(&unit_spec(mode, c)).map(|(_, uf)| uf))
        .collect::<Result<_>>()?;
    let jac = jacobian(mode)?;
    let n = free.len();
    let last = jac.nrows() - 1;
    let a = DMatrix::from_fn(n, n, |i, j| if i < targets.len() { forms[j].eval_u(targets[i]) } else { jac[(last, j)] });
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = leading;
    let x = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    spec_from_free(mode, &x)
}

fn verify(spec: &PerturbationSpec, targets: &[f64], opts: &RealizeOptions) -> Result<ZeroReport> {
    let (_, uf) = reduce(spec)?;
    let _ = targets;
    count_zeros(&uf, opts.u_max, opts.tol)
}

fn accepted(report: &ZeroReport, targets: &[f64], opts: &RealizeOptions) -> bool {
    report.count == targets.len()
        && report.zeros.iter().all(|z| z.multiplicity == Multiplicity::OddSimple)
        && report
            .zeros
            .iter()
            .zip(targets)
            .all(|(z, &r)| (z.u - r).abs() <= opts.target_tol * r)
}
