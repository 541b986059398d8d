//! Zone-wise polynomial perturbations `f_k = Σ a^k_{i,j} x^i y^j`,
//! `g_k = Σ b^k_{i,j} x^i y^j` with `i + j ≤ n`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mode, ZoneId};

/// Coefficients `c_{i,j}` for `i + j ≤ n`, stored by total degree then `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    n: u32,
    values: Vec<f64>,
}

#[inline]
fn tri_index(i: u32, j: u32) -> usize {
    let d = (i + j) as usize;
    d * (d + 1) / 2 + i as usize
}

impl CoefficientTable {
    pub fn zero(n: u32) -> Self {
        let len = tri_index(0, n + 1);
        Self {
            n,
            values: vec![0.0; len],
        }
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        if i + j > self.n {
            0.0
        } else {
            self.values[tri_index(i, j)]
        }
    }

    pub fn set(&mut self, i: u32, j: u32, v: f64) -> Result<()> {
        if i + j > self.n {
            return Err(Error::InvalidSpec(format!(
                "coefficient ({i}, {j}) exceeds degree {}",
                self.n
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidSpec(format!("coefficient ({i}, {j}) is not finite")));
        }
        self.values[tri_index(i, j)] = v;
        Ok(())
    }

    /// `(i, j, value)` for every slot, zero or not.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..=self.n).flat_map(move |d| (0..=d).map(move |i| (i, d - i, self.values[tri_index(i, d - i)])))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.iter().filter(|&(_, _, v)| v != 0.0)
    }

    /// `Σ c_{i,j} x^i y^j`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        let mut yj = 1.0;
        for j in 0..=self.n {
            let mut xi = 1.0;
            for i in 0..=(self.n - j) {
                total += self.values[tri_index(i, j)] * xi * yj;
                xi *= x;
            }
            yj *= y;
        }
        total
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneCoefficients {
    /// `f_k`, the perturbation of `ẋ`.
    pub a: CoefficientTable,
    /// `g_k`, the perturbation of `ẏ`.
    pub b: CoefficientTable,
}

impl ZoneCoefficients {
    pub fn zero(n: u32) -> Self {
        Self {
            a: CoefficientTable::zero(n),
            b: CoefficientTable::zero(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    A,
    B,
}

/// Degree, switching mode and the coefficient tables of every zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    n: u32,
    mode: Mode,
    zones: BTreeMap<u8, ZoneCoefficients>,
}

impl PerturbationSpec {
    pub fn zero(n: u32, mode: Mode) -> Self {
        let zones = mode.zones().iter().map(|&k| (k, ZoneCoefficients::zero(n))).collect();
        Self { n, mode, zones }
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn zone(&self, zone: ZoneId) -> &ZoneCoefficients {
        &self.zones[&zone.index()]
    }

    pub fn zones(&self) -> impl Iterator<Item = (ZoneId, &ZoneCoefficients)> {
        self.zones
            .iter()
            .map(|(&k, z)| (ZoneId::new(k, self.mode).expect("zones match mode"), z))
    }

    fn zone_mut(&mut self, zone: u8) -> Result<&mut ZoneCoefficients> {
        let mode = self.mode;
        self.zones
            .get_mut(&zone)
            .ok_or_else(|| Error::InvalidSpec(format!("zone {zone} does not exist in {mode} mode")))
    }

    pub fn set(&mut self, table: Table, zone: u8, i: u32, j: u32, v: f64) -> Result<()> {
        let z = self.zone_mut(zone)?;
        match table {
            Table::A => z.a.set(i, j, v),
            Table::B => z.b.set(i, j, v),
        }
    }

    pub fn get(&self, table: Table, zone: u8, i: u32, j: u32) -> f64 {
        self.zones.get(&zone).map_or(0.0, |z| match table {
            Table::A => z.a.get(i, j),
            Table::B => z.b.get(i, j),
        })
    }

    pub fn set_a(&mut self, zone: u8, i: u32, j: u32, v: f64) -> Result<()> {
        self.set(Table::A, zone, i, j, v)
    }

    pub fn set_b(&mut self, zone: u8, i: u32, j: u32, v: f64) -> Result<()> {
        self.set(Table::B, zone, i, j, v)
    }

    /// Builder form of [`Self::set`] for tests and examples.
    pub fn with(mut self, table: Table, zone: u8, i: u32, j: u32, v: f64) -> Result<Self> {
        self.set(table, zone, i, j, v)?;
        Ok(self)
    }

    /// `(f_k(x, y), g_k(x, y))`.
    pub fn field(&self, zone: ZoneId, x: f64, y: f64) -> (f64, f64) {
        let z = self.zone(zone);
        (z.a.eval(x, y), z.b.eval(x, y))
    }

    pub fn is_zero(&self) -> bool {
        self.zones
            .values()
            .all(|z| z.a.nonzero().next().is_none() && z.b.nonzero().next().is_none())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.combine(other, |a, b| a + b))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.combine(self, |a, _| c * a)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.mode != other.mode {
            return Err(Error::InvalidSpec("perturbations differ in degree or mode".into()));
        }
        Ok(())
    }

    fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64 + Copy) -> Self {
        let zones = self
            .zones
            .iter()
            .map(|(k, z)| {
                let o = &other.zones[k];
                (
                    *k,
                    ZoneCoefficients {
                        a: z.a.zip_with(&o.a, op),
                        b: z.b.zip_with(&o.b, op),
                    },
                )
            })
            .collect();
        Self {
            n: self.n,
            mode: self.mode,
            zones,
        }
    }

    /// Every coefficient uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: u32, mode: Mode, rng: &mut R) -> Self {
        let mut spec = Self::zero(n, mode);
        for z in spec.zones.values_mut() {
            for v in z.a.values.iter_mut().chain(z.b.values.iter_mut()) {
                *v = rng.gen_range(-1.0..=1.0);
            }
        }
        spec
    }

    /// The same perturbation seen through `(x, y) → (-x, -y)`.
    ///
    /// This rotation maps `y = -x²` onto `y = x²`, keeps the clockwise center
    /// and each zone label, and turns `c_{i,j}` into `(-1)^(i+j+1) c_{i,j}`.
    /// A two-zone-lower perturbation becomes a two-zone-upper one with the
    /// same Melnikov function.
    pub fn rotated_half_turn(&self) -> Self {
        let mode = match self.mode {
            Mode::TwoZoneLower => Mode::TwoZoneUpper,
            Mode::TwoZoneUpper => Mode::TwoZoneLower,
            Mode::FourZone => Mode::FourZone,
        };
        let flip = |t: &CoefficientTable| {
            let mut out = t.clone();
            for (i, j, v) in t.iter() {
                let sign = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
                out.values[tri_index(i, j)] = sign * v;
            }
            out
        };
        let zones = self
            .zones
            .iter()
            .map(|(&k, z)| {
                // zones 1 ↔ 3 and 2 ↔ 4 swap under the half turn in four-zone mode
                let target = match (self.mode, k) {
                    (Mode::FourZone, 1) => 3,
                    (Mode::FourZone, 3) => 1,
                    (Mode::FourZone, 2) => 4,
                    (Mode::FourZone, 4) => 2,
                    _ => k,
                };
                (
                    target,
                    ZoneCoefficients {
                        a: flip(&z.a),
                        b: flip(&z.b),
                    },
                )
            })
            .collect();
        Self { n: self.n, mode, zones }
    }
}
