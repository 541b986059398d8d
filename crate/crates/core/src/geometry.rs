//! Level circles of the center, the switching parabolas `y = ±x²`, and the
//! four corner points where a level circle meets them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level value `h` of the circle `x² + y² = h` (radius `√h`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EnergyLevel(f64);

impl EnergyLevel {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(Self(h))
        } else {
            Err(Error::Domain(format!("energy level must be positive, got {h}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn radius(self) -> f64 {
        self.0.sqrt()
    }
}

/// The abscissa `u > 0` of the corner `A = (u, u²)`, so that `h = u⁴ + u²`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct UCoord(f64);

impl UCoord {
    pub fn new(u: f64) -> Result<Self> {
        if u.is_finite() && u > 0.0 {
            Ok(Self(u))
        } else {
            Err(Error::Domain(format!("u must be positive, got {u}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `u = sqrt((sqrt(1 + 4h) - 1) / 2)`, evaluated as `u² = 2h / (sqrt(1 + 4h) + 1)`
/// so that small `h` does not cancel.
pub fn u_of_h(h: EnergyLevel) -> UCoord {
    let h = h.value();
    let u2 = 2.0 * h / ((1.0 + 4.0 * h).sqrt() + 1.0);
    UCoord(u2.sqrt())
}

pub fn h_of_u(u: UCoord) -> EnergyLevel {
    let u2 = u.value() * u.value();
    EnergyLevel(u2 * u2 + u2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Intersections of the level circle with the switching parabolas.
///
/// `A` and `D` lie on `y = x²`, `B` and `C` on `y = -x²`; the flow of the
/// unperturbed center is clockwise and visits them in the order A, B, C, D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerPoints {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
}

impl CornerPoints {
    pub fn a_h(&self) -> f64 {
        self.a.x
    }
    pub fn b_h(&self) -> f64 {
        self.b.x
    }
    pub fn c_h(&self) -> f64 {
        self.c.x
    }
    pub fn d_h(&self) -> f64 {
        self.d.x
    }
}

pub fn corner_points(h: EnergyLevel) -> CornerPoints {
    let u = u_of_h(h).value();
    let u2 = u * u;
    CornerPoints {
        a: Point::new(u, u2),
        b: Point::new(u, -u2),
        c: Point::new(-u, -u2),
        d: Point::new(-u, u2),
    }
}

/// Which switching curves are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Both `y = x²` and `y = -x²`; zones 1..=4.
    FourZone,
    /// Only `y = x²`; zone 1 below, zone 4 above.
    TwoZoneUpper,
    /// Only `y = -x²`; zone 1 above, zone 4 below.
    TwoZoneLower,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::FourZone, Mode::TwoZoneUpper, Mode::TwoZoneLower];

    pub fn zones(self) -> &'static [u8] {
        match self {
            Mode::FourZone => &[1, 2, 3, 4],
            Mode::TwoZoneUpper | Mode::TwoZoneLower => &[1, 4],
        }
    }

    pub fn is_two_zone(self) -> bool {
        !matches!(self, Mode::FourZone)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FourZone => "four-zone",
            Mode::TwoZoneUpper => "two-zone-upper",
            Mode::TwoZoneLower => "two-zone-lower",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four-zone" => Ok(Mode::FourZone),
            "two-zone-upper" => Ok(Mode::TwoZoneUpper),
            "two-zone-lower" => Ok(Mode::TwoZoneLower),
            other => Err(Error::InvalidSpec(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZoneId(u8);

impl ZoneId {
    pub fn new(index: u8, mode: Mode) -> Result<Self> {
        if mode.zones().contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidSpec(format!("zone {index} does not exist in {mode} mode")))
        }
    }

    #[inline]
    pub fn index(self) -> u8 {
        self.0
    }
}

/// The switching curve `y = sign·x²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Curve {
    /// `y = x²`
    Upper,
    /// `y = -x²`
    Lower,
}

impl Curve {
    /// `y - x²` or `y + x²`; positive above the curve.
    #[inline]
    pub fn level(self, x: f64, y: f64) -> f64 {
        match self {
            Curve::Upper => y - x * x,
            Curve::Lower => y + x * x,
        }
    }

    /// Gradient of [`Curve::level`].
    #[inline]
    pub fn gradient(self, x: f64) -> (f64, f64) {
        match self {
            Curve::Upper => (-2.0 * x, 1.0),
            Curve::Lower => (2.0 * x, 1.0),
        }
    }

    /// Slope of the parabola, `f'_±(x)`.
    #[inline]
    pub fn slope(self, x: f64) -> f64 {
        match self {
            Curve::Upper => 2.0 * x,
            Curve::Lower => -2.0 * x,
        }
    }
}

pub fn curves(mode: Mode) -> &'static [Curve] {
    match mode {
        Mode::FourZone => &[Curve::Upper, Curve::Lower],
        Mode::TwoZoneUpper => &[Curve::Upper],
        Mode::TwoZoneLower => &[Curve::Lower],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneClass {
    Zone(ZoneId),
    /// Within tolerance of the given switching curve.
    Boundary(Curve),
}

pub fn boundary_tolerance(x: f64, y: f64) -> f64 {
    1e-10 * (x * x + y * y).max(1.0)
}

/// Classifies `(x, y)` into a zone, or reports that it sits on a switching curve.
pub fn zone_of(x: f64, y: f64, mode: Mode) -> ZoneClass {
    let tol = boundary_tolerance(x, y);
    for &curve in curves(mode) {
        if curve.level(x, y).abs() <= tol {
            return ZoneClass::Boundary(curve);
        }
    }
    let above_upper = y > x * x;
    let below_lower = y < -x * x;
    let index = match mode {
        Mode::FourZone => {
            if above_upper {
                4
            } else if below_lower {
                2
            } else if x > 0.0 {
                1
            } else {
                3
            }
        }
        Mode::TwoZoneUpper => {
            if above_upper {
                4
            } else {
                1
            }
        }
        Mode::TwoZoneLower => {
            if below_lower {
                4
            } else {
                1
            }
        }
    };
    ZoneClass::Zone(ZoneId(index))
}
