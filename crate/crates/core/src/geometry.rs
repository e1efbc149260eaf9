//! Parametric catalog of finite waveguides: a basic domain Ω with rectangular
//! branches attached along straight segments of its boundary.
//!
//! All square-based domains use Ω = [-1, 0]², so that the right side (x = 0)
//! and the top side (y = 0) meet at the origin. The quarter disk is the sector
//! of the unit disk in the third quadrant, centred at the origin, so that its
//! two radii coincide with the right and top sides of the square.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Straight segment from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    /// Point at normalized arclength `s` ∈ [0, 1].
    pub fn point_at(&self, s: f64) -> Point {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }

    /// Normalized arclength of the orthogonal projection of `p`.
    pub fn project(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        ((p[0] - self.start[0]) * d[0] + (p[1] - self.start[1]) * d[1]) / len2
    }

    /// Distance from `p` to the supporting line.
    pub fn line_distance(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let cross = (p[0] - self.start[0]) * d[1] - (p[1] - self.start[1]) * d[0];
        cross.abs() / self.length()
    }
}

/// Side of the square Ω = [-1, 0]² a branch is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Top,
    Left,
    Bottom,
}

impl Side {
    /// Interface segment Γ on ∂Ω.
    pub fn segment(self) -> Segment {
        match self {
            Side::Right => Segment { start: [0.0, -1.0], end: [0.0, 0.0] },
            Side::Top => Segment { start: [-1.0, 0.0], end: [0.0, 0.0] },
            Side::Left => Segment { start: [-1.0, -1.0], end: [-1.0, 0.0] },
            Side::Bottom => Segment { start: [-1.0, -1.0], end: [0.0, -1.0] },
        }
    }

    /// Outward unit normal of Ω on this side (the branch direction).
    pub fn normal(self) -> Point {
        match self {
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
        }
    }
}

/// Rectangular branch Q_i of length `length` and width `width`, attached to Ω
/// along the segment Γ_i.
///
/// Local frame: `x` ∈ [0, length] runs along the branch away from Ω, `y` ∈
/// [0, width] runs across it from `interface.start` to `interface.end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub length: f64,
    pub width: f64,
    pub attachment: Side,
}

impl BranchSpec {
    pub fn new(length: f64, attachment: Side) -> Self {
        Self { length, width: 1.0, attachment }
    }

    pub fn interface(&self) -> Segment {
        self.attachment.segment()
    }

    pub fn normal(&self) -> Point {
        self.attachment.normal()
    }

    /// Map local branch coordinates to the plane.
    pub fn to_global(&self, x: f64, y: f64) -> Point {
        let seg = self.interface();
        let base = seg.point_at(y / self.width);
        let n = self.normal();
        [base[0] + x * n[0], base[1] + x * n[1]]
    }

    /// Map a point of the plane to local branch coordinates (x, y).
    pub fn to_local(&self, p: Point) -> (f64, f64) {
        let seg = self.interface();
        let n = self.normal();
        let x = (p[0] - seg.start[0]) * n[0] + (p[1] - seg.start[1]) * n[1];
        let y = seg.project(p) * self.width;
        (x, y)
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

/// Shape of the basic domain Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasicDomainSpec {
    UnitSquare,
    QuarterDisk,
    /// Square with the corner (-1, -1) cut along x + y = -1 - ℓ.
    TruncatedSquare { ell: f64 },
    /// Triangle x + y > -1 inside [-1, 0]² (legs of length 1).
    RightTriangle,
    /// Square split by a slit along x + y = -1 with a centred opening of
    /// length ε.
    CoupledSquare { epsilon: f64 },
}

impl BasicDomainSpec {
    pub fn area(&self) -> f64 {
        match *self {
            BasicDomainSpec::UnitSquare | BasicDomainSpec::CoupledSquare { .. } => 1.0,
            BasicDomainSpec::QuarterDisk => FRAC_PI_4,
            BasicDomainSpec::TruncatedSquare { ell } => 1.0 - 0.5 * (1.0 - ell) * (1.0 - ell),
            BasicDomainSpec::RightTriangle => 0.5,
        }
    }

    /// Sides that are straight segments of ∂Ω of unit length.
    pub fn attachable_sides(&self) -> &'static [Side] {
        match self {
            BasicDomainSpec::UnitSquare | BasicDomainSpec::CoupledSquare { .. } => {
                &[Side::Right, Side::Top, Side::Left, Side::Bottom]
            }
            BasicDomainSpec::QuarterDisk
            | BasicDomainSpec::TruncatedSquare { .. }
            | BasicDomainSpec::RightTriangle => &[Side::Right, Side::Top],
        }
    }

    /// Whether `p` lies in the closure of Ω (the slit of the coupled square is
    /// ignored).
    pub fn contains(&self, p: Point) -> bool {
        const TOL: f64 = 1e-12;
        let in_square = p[0] >= -1.0 - TOL && p[0] <= TOL && p[1] >= -1.0 - TOL && p[1] <= TOL;
        match *self {
            BasicDomainSpec::UnitSquare | BasicDomainSpec::CoupledSquare { .. } => in_square,
            BasicDomainSpec::QuarterDisk => {
                p[0] <= TOL && p[1] <= TOL && p[0].hypot(p[1]) <= 1.0 + TOL
            }
            BasicDomainSpec::TruncatedSquare { ell } => in_square && p[0] + p[1] >= -1.0 - ell - TOL,
            BasicDomainSpec::RightTriangle => in_square && p[0] + p[1] >= -1.0 - TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BasicDomainSpec::TruncatedSquare { ell } if !(0.0..=1.0).contains(&ell) => {
                Err(Error::InvalidParameter(format!("ℓ = {ell} outside [0, 1]")))
            }
            BasicDomainSpec::CoupledSquare { epsilon }
                if !(0.0..=SQRT_2 + 1e-12).contains(&epsilon) =>
            {
                Err(Error::InvalidParameter(format!("ε = {epsilon} outside [0, √2]")))
            }
            _ => Ok(()),
        }
    }
}

/// Finite waveguide D = Ω ∪ Q_1 ∪ … ∪ Q_M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    pub name: String,
    pub basic: BasicDomainSpec,
    pub branches: Vec<BranchSpec>,
}

impl WaveguideSpec {
    pub fn new(name: impl Into<String>, basic: BasicDomainSpec, branches: Vec<BranchSpec>) -> Result<Self> {
        let spec = Self { name: name.into(), basic, branches };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.basic.validate()?;
        let allowed = self.basic.attachable_sides();
        for (i, b) in self.branches.iter().enumerate() {
            if !(b.length > 0.0) || !b.length.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "branch {i} has non-positive length {}",
                    b.length
                )));
            }
            if (b.width - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "branch {i} has width {}, catalog domains use unit width",
                    b.width
                )));
            }
            if !allowed.contains(&b.attachment) {
                return Err(Error::InvalidParameter(format!(
                    "side {:?} is not a straight unit segment of {:?}",
                    b.attachment, self.basic
                )));
            }
            if self.branches[..i].iter().any(|o| o.attachment == b.attachment) {
                return Err(Error::InvalidParameter(format!(
                    "two branches attached to side {:?}",
                    b.attachment
                )));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.basic.area() + self.branches.iter().map(BranchSpec::area).sum::<f64>()
    }

    pub fn branch(&self, index: usize) -> Result<&BranchSpec> {
        self.branches
            .get(index)
            .ok_or(Error::BranchIndex { index, count: self.branches.len() })
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.length).collect()
    }

    /// Same Ω with every branch length replaced by `a`.
    pub fn with_uniform_length(&self, a: f64) -> Result<Self> {
        let mut spec = self.clone();
        for b in &mut spec.branches {
            b.length = a;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for WaveguideSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Catalog identifiers accepted by [`build_domain`].
pub const CATALOG: [&str; 9] = [
    "l_shape",
    "cross",
    "bent_strip",
    "truncated_l",
    "coupled_cross",
    "rectangle",
    "quarter_disk",
    "right_triangle",
    "unit_square",
];

fn branches_on(sides: &[Side], lengths: &[f64]) -> Result<Vec<BranchSpec>> {
    let mut out = Vec::new();
    for (&side, &a) in sides.iter().zip(lengths) {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("negative branch length {a}")));
        }
        if a > 0.0 {
            out.push(BranchSpec::new(a, side));
        }
    }
    Ok(out)
}

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{name} takes {n} parameters, got {}",
            params.len()
        )));
    }
    Ok(())
}

/// Build a catalog waveguide. Zero-length branches are omitted.
pub fn build_domain(name: &str, params: &[f64]) -> Result<WaveguideSpec> {
    const SQUARE_SIDES: [Side; 4] = [Side::Right, Side::Top, Side::Left, Side::Bottom];
    const BEND_SIDES: [Side; 2] = [Side::Right, Side::Top];
    let label = format!(
        "{name}({})",
        params.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(",")
    );
    let (basic, branches) = match name {
        "l_shape" => {
            expect_params(name, params, 2)?;
            (BasicDomainSpec::UnitSquare, branches_on(&BEND_SIDES, params)?)
        }
        "cross" => {
            expect_params(name, params, 4)?;
            (BasicDomainSpec::UnitSquare, branches_on(&SQUARE_SIDES, params)?)
        }
        "bent_strip" => {
            expect_params(name, params, 2)?;
            (BasicDomainSpec::QuarterDisk, branches_on(&BEND_SIDES, params)?)
        }
        "truncated_l" => {
            expect_params(name, params, 3)?;
            let ell = params[0];
            if !(0.0..=1.0).contains(&ell) {
                return Err(Error::InvalidParameter(format!("ℓ = {ell} outside [0, 1]")));
            }
            (BasicDomainSpec::TruncatedSquare { ell }, branches_on(&BEND_SIDES, &params[1..])?)
        }
        "coupled_cross" => {
            expect_params(name, params, 5)?;
            let epsilon = params[0];
            if !(0.0..=SQRT_2 + 1e-12).contains(&epsilon) {
                return Err(Error::InvalidParameter(format!("ε = {epsilon} outside [0, √2]")));
            }
            (
                BasicDomainSpec::CoupledSquare { epsilon: epsilon.min(SQRT_2) },
                branches_on(&SQUARE_SIDES, &params[1..])?,
            )
        }
        "rectangle" => {
            expect_params(name, params, 1)?;
            (BasicDomainSpec::UnitSquare, branches_on(&[Side::Right], params)?)
        }
        "quarter_disk" => {
            expect_params(name, params, 0)?;
            (BasicDomainSpec::QuarterDisk, Vec::new())
        }
        "right_triangle" => {
            expect_params(name, params, 0)?;
            (BasicDomainSpec::RightTriangle, Vec::new())
        }
        "unit_square" => {
            expect_params(name, params, 0)?;
            (BasicDomainSpec::UnitSquare, Vec::new())
        }
        other => return Err(Error::UnknownDomain(other.to_string())),
    };
    WaveguideSpec::new(label, basic, branches)
}

/// Parse `name(p1,p2,…)` or a bare `name` into a catalog domain.
pub fn parse_domain(text: &str) -> Result<WaveguideSpec> {
    let text = text.trim();
    let (name, params) = match text.find('(') {
        Some(open) => {
            let close = text
                .rfind(')')
                .filter(|&c| c > open)
                .ok_or_else(|| Error::InvalidParameter(format!("unbalanced parentheses in `{text}`")))?;
            let inner = &text[open + 1..close];
            let params = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidParameter(format!("cannot parse `{}` as a number", p.trim()))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            (text[..open].trim(), params)
        }
        None => (text, Vec::new()),
    };
    build_domain(name, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn catalog_areas() {
        assert!((build_domain("l_shape", &[1.0, 1.0]).unwrap().area() - 3.0).abs() < 1e-15);
        assert!((build_domain("bent_strip", &[0.0, 0.0]).unwrap().area() - PI / 4.0).abs() < 1e-15);
        assert!((build_domain("cross", &[5.0; 4]).unwrap().area() - 21.0).abs() < 1e-15);
        assert!((build_domain("truncated_l", &[0.0, 1.0, 1.0]).unwrap().area() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn zero_length_branches_are_dropped() {
        let spec = build_domain("cross", &[2.0, 0.0, 3.0, 0.0]).unwrap();
        assert_eq!(spec.branches.len(), 2);
        assert_eq!(spec.branches[0].attachment, Side::Right);
        assert_eq!(spec.branches[1].attachment, Side::Left);
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(build_domain("z_shape", &[]), Err(Error::UnknownDomain(_))));
        assert!(matches!(build_domain("l_shape", &[-1.0, 1.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_domain("truncated_l", &[1.5, 1.0, 1.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_domain("coupled_cross", &[1.5, 1.0, 1.0, 1.0, 1.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_domain("cross", &[1.0]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn degenerate_parameters_match_other_kinds() {
        let t1 = BasicDomainSpec::TruncatedSquare { ell: 1.0 };
        assert!((t1.area() - BasicDomainSpec::UnitSquare.area()).abs() < 1e-15);
        let t0 = BasicDomainSpec::TruncatedSquare { ell: 0.0 };
        assert!((t0.area() - BasicDomainSpec::RightTriangle.area()).abs() < 1e-15);
        for p in [[-0.2, -0.3], [-0.9, -0.05], [-0.6, -0.6]] {
            assert_eq!(t0.contains(p), BasicDomainSpec::RightTriangle.contains(p));
            assert_eq!(t1.contains(p), BasicDomainSpec::UnitSquare.contains(p));
        }
    }

    #[test]
    fn branch_frame_round_trip() {
        for side in [Side::Right, Side::Top, Side::Left, Side::Bottom] {
            let b = BranchSpec::new(3.0, side);
            let p = b.to_global(1.25, 0.4);
            let (x, y) = b.to_local(p);
            assert!((x - 1.25).abs() < 1e-14 && (y - 0.4).abs() < 1e-14);
            // x = 0 lies on Γ.
            assert!(b.interface().line_distance(b.to_global(0.0, 0.7)) < 1e-15);
        }
    }

    #[test]
    fn parse_catalog_strings() {
        let spec = parse_domain("cross(5, 5, 5, 5)").unwrap();
        assert_eq!(spec.branches.len(), 4);
        assert_eq!(parse_domain("unit_square").unwrap().branches.len(), 0);
        assert!(parse_domain("cross(5,5").is_err());
    }
}
