//! Domain types: modules, pads, nets, floorplans and outline arithmetic.
//!
//! Floorplan coordinates are module *centers*. Lower-left corners only show
//! up in legalization and in Bookshelf `.pl` files, and every conversion goes
//! through [`Floorplan::lower_left`] / [`Floorplan::set_lower_left`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("module `{name}` has non-positive or non-finite dimensions {width} x {height}")]
    InvalidDimensions { name: String, width: f64, height: f64 },
    #[error("pad `{name}` has non-finite coordinates")]
    InvalidPad { name: String },
    #[error("instance has no modules")]
    NoModules,
    #[error("net {net} is empty")]
    EmptyNet { net: usize },
    #[error("net {net} references {endpoint} which does not exist")]
    DanglingPin { net: usize, endpoint: Endpoint },
    #[error("net {net} lists {endpoint} more than once")]
    DuplicatePin { net: usize, endpoint: Endpoint },
    #[error("orientation code {0} is outside 0..=3")]
    InvalidOrientation(u8),
    #[error("floorplan has {got} entries, instance has {expected} modules")]
    PlanSize { expected: usize, got: usize },
    #[error("outline needs positive area and ratio and non-negative whitespace (A={area}, R={ratio}, gamma={gamma})")]
    InvalidOutline { area: f64, ratio: f64, gamma: f64 },
}

/// A hard rectangular block. Its id is its index in [`ProblemInstance::modules`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub name: String,
    pub width: f64,
    pub height: f64,
}

impl Module {
    pub fn new(name: impl Into<String>, width: f64, height: f64) -> Result<Self, ModelError> {
        let name = name.into();
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(ModelError::InvalidDimensions { name, width, height });
        }
        Ok(Self { name, width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn max_dim(&self) -> f64 {
        self.width.max(self.height)
    }
}

/// Fixed I/O pad, a point at `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pad {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

impl Pad {
    pub fn new(name: impl Into<String>, x: f64, y: f64) -> Result<Self, ModelError> {
        let name = name.into();
        if !(x.is_finite() && y.is_finite()) {
            return Err(ModelError::InvalidPad { name });
        }
        Ok(Self { name, x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Endpoint {
    Module(usize),
    Pad(usize),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Module(i) => write!(f, "module {i}"),
            Endpoint::Pad(i) => write!(f, "pad {i}"),
        }
    }
}

/// One pin of a net. `offset` is the pin position relative to the module
/// center in percent of the unrotated half-width / half-height; it is
/// ignored for pads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub endpoint: Endpoint,
    pub offset: (f64, f64),
}

impl Pin {
    pub fn center(endpoint: Endpoint) -> Self {
        Self { endpoint, offset: (0.0, 0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub pins: Vec<Pin>,
}

impl Net {
    pub fn new(pins: Vec<Pin>) -> Self {
        Self { pins }
    }

    pub fn from_endpoints(endpoints: impl IntoIterator<Item = Endpoint>) -> Self {
        Self { pins: endpoints.into_iter().map(Pin::center).collect() }
    }
}

/// Modules, fixed pads and the nets connecting them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    modules: Vec<Module>,
    pads: Vec<Pad>,
    nets: Vec<Net>,
}

impl ProblemInstance {
    pub fn new(modules: Vec<Module>, pads: Vec<Pad>, nets: Vec<Net>) -> Result<Self, ModelError> {
        if modules.is_empty() {
            return Err(ModelError::NoModules);
        }
        for m in &modules {
            Module::new(m.name.clone(), m.width, m.height)?;
        }
        for p in &pads {
            Pad::new(p.name.clone(), p.x, p.y)?;
        }
        for (k, net) in nets.iter().enumerate() {
            if net.pins.is_empty() {
                return Err(ModelError::EmptyNet { net: k });
            }
            let mut seen = std::collections::HashSet::with_capacity(net.pins.len());
            for pin in &net.pins {
                let valid = match pin.endpoint {
                    Endpoint::Module(i) => i < modules.len(),
                    Endpoint::Pad(i) => i < pads.len(),
                };
                if !valid {
                    return Err(ModelError::DanglingPin { net: k, endpoint: pin.endpoint });
                }
                if !seen.insert(pin.endpoint) {
                    return Err(ModelError::DuplicatePin { net: k, endpoint: pin.endpoint });
                }
            }
        }
        Ok(Self { modules, pads, nets })
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn pads(&self) -> &[Pad] {
        &self.pads
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }
}

/// Clockwise rotation by `code * 90` degrees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orientation(u8);

impl Orientation {
    pub const R0: Orientation = Orientation(0);
    pub const R90: Orientation = Orientation(1);
    pub const R180: Orientation = Orientation(2);
    pub const R270: Orientation = Orientation(3);
    pub const ALL: [Orientation; 4] = [Self::R0, Self::R90, Self::R180, Self::R270];

    pub fn new(code: u8) -> Result<Self, ModelError> {
        if code < 4 {
            Ok(Self(code))
        } else {
            Err(ModelError::InvalidOrientation(code))
        }
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Odd codes (90 and 270 degrees) swap width and height.
    pub fn swaps_dims(self) -> bool {
        self.0 % 2 == 1
    }

    /// Rotates a vector clockwise by this orientation.
    pub fn rotate(self, (dx, dy): (f64, f64)) -> (f64, f64) {
        match self.0 {
            0 => (dx, dy),
            1 => (dy, -dx),
            2 => (-dx, -dy),
            _ => (-dy, dx),
        }
    }
}

/// Width and height of a module after rotation.
pub fn effective_dims(module: &Module, r: Orientation) -> (f64, f64) {
    if r.swaps_dims() {
        (module.height, module.width)
    } else {
        (module.width, module.height)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { x0: cx - w / 2.0, y0: cy - h / 2.0, x1: cx + w / 2.0, y1: cy + h / 2.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Area of the intersection with `other` (zero for touching rectangles).
    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// Center coordinates and orientation codes for every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<Orientation>,
}

impl Floorplan {
    pub fn new(x: Vec<f64>, y: Vec<f64>, r: Vec<Orientation>) -> Result<Self, ModelError> {
        if x.len() != y.len() || x.len() != r.len() {
            return Err(ModelError::PlanSize { expected: x.len(), got: y.len().min(r.len()) });
        }
        Ok(Self { x, y, r })
    }

    /// All modules at the origin, unrotated.
    pub fn zeros(n: usize) -> Self {
        Self { x: vec![0.0; n], y: vec![0.0; n], r: vec![Orientation::R0; n] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn check(&self, instance: &ProblemInstance) -> Result<(), ModelError> {
        let n = instance.len();
        for got in [self.x.len(), self.y.len(), self.r.len()] {
            if got != n {
                return Err(ModelError::PlanSize { expected: n, got });
            }
        }
        Ok(())
    }

    pub fn dims(&self, instance: &ProblemInstance) -> Vec<(f64, f64)> {
        instance.modules().iter().zip(&self.r).map(|(m, &r)| effective_dims(m, r)).collect()
    }

    pub fn rect(&self, instance: &ProblemInstance, i: usize) -> Rect {
        let (w, h) = effective_dims(&instance.modules()[i], self.r[i]);
        Rect::from_center(self.x[i], self.y[i], w, h)
    }

    pub fn rects(&self, instance: &ProblemInstance) -> Vec<Rect> {
        (0..self.len()).map(|i| self.rect(instance, i)).collect()
    }

    pub fn lower_left(&self, instance: &ProblemInstance, i: usize) -> (f64, f64) {
        let (w, h) = effective_dims(&instance.modules()[i], self.r[i]);
        (self.x[i] - w / 2.0, self.y[i] - h / 2.0)
    }

    pub fn set_lower_left(&mut self, instance: &ProblemInstance, i: usize, x0: f64, y0: f64) {
        let (w, h) = effective_dims(&instance.modules()[i], self.r[i]);
        self.x[i] = x0 + w / 2.0;
        self.y[i] = y0 + h / 2.0;
    }
}

/// Sum of module areas, `A`.
pub fn total_module_area(instance: &ProblemInstance) -> f64 {
    instance.modules().iter().map(Module::area).sum()
}

/// Bounding box of all module rectangles.
pub fn bounding_box(instance: &ProblemInstance, plan: &Floorplan) -> Rect {
    plan.rects(instance).into_iter().fold(
        Rect { x0: f64::INFINITY, y0: f64::INFINITY, x1: f64::NEG_INFINITY, y1: f64::NEG_INFINITY },
        |acc, r| Rect {
            x0: acc.x0.min(r.x0),
            y0: acc.y0.min(r.y0),
            x1: acc.x1.max(r.x1),
            y1: acc.y1.max(r.y1),
        },
    )
}

/// Floorplan area `S`: the bounding-box area of the placement.
pub fn bounding_area(instance: &ProblemInstance, plan: &Floorplan) -> f64 {
    let bb = bounding_box(instance, plan);
    bb.width() * bb.height()
}

/// `(S - A) / A`.
pub fn whitespace_from_areas(floorplan_area: f64, module_area: f64) -> f64 {
    (floorplan_area - module_area) / module_area
}

pub fn whitespace_ratio(instance: &ProblemInstance, plan: &Floorplan) -> f64 {
    whitespace_from_areas(bounding_area(instance, plan), total_module_area(instance))
}

/// Fixed-outline region `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlineSpec {
    pub width: f64,
    pub height: f64,
    pub aspect_ratio: f64,
    pub whitespace: Option<f64>,
}

impl OutlineSpec {
    pub fn new(width: f64, height: f64) -> Result<Self, ModelError> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(ModelError::InvalidOutline { area: width * height, ratio: height / width, gamma: 0.0 });
        }
        Ok(Self { width, height, aspect_ratio: height / width, whitespace: None })
    }

    /// Outline with area `(1 + gamma) * area` and `height / width = ratio`.
    pub fn from_ratio(area: f64, ratio: f64, gamma: f64) -> Result<Self, ModelError> {
        let ok = area.is_finite() && ratio.is_finite() && gamma.is_finite();
        if !ok || area <= 0.0 || ratio <= 0.0 || gamma < 0.0 {
            return Err(ModelError::InvalidOutline { area, ratio, gamma });
        }
        let total = (1.0 + gamma) * area;
        Ok(Self {
            width: (total / ratio).sqrt(),
            height: (total * ratio).sqrt(),
            aspect_ratio: ratio,
            whitespace: Some(gamma),
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn half_perimeter(&self) -> f64 {
        self.width + self.height
    }

    /// True when every module fits inside the outline under some orientation.
    pub fn admits(&self, instance: &ProblemInstance) -> bool {
        instance.modules().iter().all(|m| {
            (m.width <= self.width && m.height <= self.height)
                || (m.height <= self.width && m.width <= self.height)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn module(w: f64, h: f64) -> Module {
        Module::new("m", w, h).unwrap()
    }

    fn instance(dims: &[(f64, f64)]) -> ProblemInstance {
        let modules = dims.iter().enumerate().map(|(i, &(w, h))| Module::new(format!("m{i}"), w, h).unwrap()).collect();
        ProblemInstance::new(modules, vec![], vec![]).unwrap()
    }

    #[test]
    fn effective_dims_examples() {
        assert_eq!(effective_dims(&module(3.0, 5.0), Orientation::R0), (3.0, 5.0));
        assert_eq!(effective_dims(&module(3.0, 5.0), Orientation::R90), (5.0, 3.0));
        assert_eq!(effective_dims(&module(4.0, 4.0), Orientation::R270), (4.0, 4.0));
        assert_eq!(effective_dims(&module(3.0, 5.0), Orientation::R180), (3.0, 5.0));
    }

    #[test]
    fn orientation_codes() {
        assert!(Orientation::new(4).is_err());
        assert_eq!(Orientation::new(3).unwrap().code(), 3);
        // a vector pointing right rotated a quarter turn clockwise points down
        assert_eq!(Orientation::R90.rotate((1.0, 0.0)), (0.0, -1.0));
    }

    #[test]
    fn module_area_sums() {
        assert_eq!(total_module_area(&instance(&[(2.0, 3.0)])), 6.0);
        assert_eq!(total_module_area(&instance(&[(2.0, 3.0), (1.0, 1.0)])), 7.0);
        assert_eq!(ProblemInstance::new(vec![], vec![], vec![]), Err(ModelError::NoModules));
        assert!(Module::new("bad", 0.0, 1.0).is_err());
        assert!(Module::new("bad", 1.0, f64::NAN).is_err());
    }

    #[test]
    fn invalid_nets_rejected() {
        let m = vec![module(1.0, 1.0)];
        let dangling = Net::from_endpoints([Endpoint::Module(0), Endpoint::Pad(0)]);
        assert!(matches!(
            ProblemInstance::new(m.clone(), vec![], vec![dangling]),
            Err(ModelError::DanglingPin { net: 0, .. })
        ));
        let dup = Net::from_endpoints([Endpoint::Module(0), Endpoint::Module(0)]);
        assert!(matches!(ProblemInstance::new(m.clone(), vec![], vec![dup]), Err(ModelError::DuplicatePin { .. })));
        assert!(matches!(ProblemInstance::new(m, vec![], vec![Net::new(vec![])]), Err(ModelError::EmptyNet { net: 0 })));
    }

    #[test]
    fn bounding_area_examples() {
        let one = instance(&[(2.0, 2.0)]);
        let plan = Floorplan::new(vec![17.0], vec![-3.0], vec![Orientation::R0]).unwrap();
        assert_eq!(bounding_area(&one, &plan), 4.0);

        let two = instance(&[(1.0, 1.0), (1.0, 1.0)]);
        let plan = Floorplan::new(vec![0.5, 2.5], vec![0.5, 0.5], vec![Orientation::R0; 2]).unwrap();
        assert_eq!(bounding_area(&two, &plan), 3.0);

        let same = instance(&[(2.0, 2.0), (2.0, 2.0)]);
        let plan = Floorplan::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![Orientation::R0; 2]).unwrap();
        assert_eq!(bounding_area(&same, &plan), 4.0);
    }

    #[test]
    fn whitespace_examples() {
        assert_relative_eq!(whitespace_from_areas(115.0, 100.0), 0.15, epsilon = 1e-12);
        assert_eq!(whitespace_from_areas(100.0, 100.0), 0.0);
        assert_eq!(whitespace_from_areas(200.0, 100.0), 1.0);
    }

    #[test]
    fn outline_examples() {
        let o = OutlineSpec::from_ratio(100.0, 1.0, 0.15).unwrap();
        assert_relative_eq!(o.width, 115f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(o.width, 10.7238, epsilon = 1e-4);
        assert_relative_eq!(o.height, o.width);

        let o = OutlineSpec::from_ratio(100.0, 4.0, 0.0).unwrap();
        assert_relative_eq!(o.width, 5.0, epsilon = 1e-12);
        assert_relative_eq!(o.height, 20.0, epsilon = 1e-12);

        let o = OutlineSpec::from_ratio(1.0, 1.0, 0.0).unwrap();
        assert_eq!((o.width, o.height), (1.0, 1.0));

        assert!(OutlineSpec::from_ratio(0.0, 1.0, 0.1).is_err());
        assert!(OutlineSpec::from_ratio(1.0, -1.0, 0.1).is_err());
        assert!(OutlineSpec::from_ratio(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn center_lower_left_conversion() {
        let inst = instance(&[(4.0, 2.0)]);
        let mut plan = Floorplan::new(vec![0.0], vec![0.0], vec![Orientation::R90]).unwrap();
        plan.set_lower_left(&inst, 0, 1.0, 1.0);
        // rotated: 2 wide, 4 tall
        assert_eq!((plan.x[0], plan.y[0]), (2.0, 3.0));
        assert_eq!(plan.lower_left(&inst, 0), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn rotation_preserves_area(w in 0.1f64..100.0, h in 0.1f64..100.0, code in 0u8..4) {
            let m = module(w, h);
            let (ew, eh) = effective_dims(&m, Orientation::new(code).unwrap());
            prop_assert_eq!(ew * eh, w * h);
        }

        #[test]
        fn outline_area_and_ratio(a in 1e-3f64..1e7, r in 0.05f64..20.0, g in 0.0f64..2.0) {
            let o = OutlineSpec::from_ratio(a, r, g).unwrap();
            prop_assert!(((o.width * o.height) / ((1.0 + g) * a) - 1.0).abs() < 1e-9);
            prop_assert!(((o.height / o.width) / r - 1.0).abs() < 1e-9);
            let back = whitespace_from_areas(o.area(), a);
            prop_assert!((back - g).abs() < 1e-9 * (1.0 + g));
        }
    }
}
