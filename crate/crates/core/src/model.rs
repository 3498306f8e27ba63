//! Seven-parameter articulatory space and the surrogate vocal-tract model.
//!
//! Parameters are expressed in standard-deviation units around a neutral
//! configuration and live in the closed cube `[-3, 3]^7`. The all-zero vector
//! is the neutral uniform tube. Each parameter perturbs the log-area profile
//! (or section lengths) with a smooth, documented term; see [`ModelConfig`]
//! for the constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of articulatory parameters.
pub const DIM: usize = 7;
/// Bound of each parameter in standard-deviation units.
pub const PARAM_LIMIT: f64 = 3.0;

/// Articulatory parameters in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Jaw = 0,
    TonguePos = 1,
    TongueShape = 2,
    Apex = 3,
    LipAperture = 4,
    LipProtrusion = 5,
    Larynx = 6,
}

impl Param {
    pub const ALL: [Param; DIM] = [
        Param::Jaw,
        Param::TonguePos,
        Param::TongueShape,
        Param::Apex,
        Param::LipAperture,
        Param::LipProtrusion,
        Param::Larynx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Jaw => "jaw",
            Param::TonguePos => "tongue_pos",
            Param::TongueShape => "tongue_shape",
            Param::Apex => "apex",
            Param::LipAperture => "lip_aperture",
            Param::LipProtrusion => "lip_protrusion",
            Param::Larynx => "larynx",
        }
    }
}

/// A point of the articulatory space. Every component lies in `[-3, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArticulatoryVector([f64; DIM]);

impl ArticulatoryVector {
    pub const NEUTRAL: ArticulatoryVector = ArticulatoryVector([0.0; DIM]);

    pub fn new(values: [f64; DIM]) -> Result<Self> {
        for (param, &value) in Param::ALL.iter().zip(values.iter()) {
            if !(-PARAM_LIMIT..=PARAM_LIMIT).contains(&value) {
                return Err(Error::OutOfRange {
                    param: param.name(),
                    value,
                });
            }
        }
        Ok(ArticulatoryVector(values))
    }

    /// Builds a vector by clamping every component into range. NaN becomes 0.
    pub fn clamped(values: [f64; DIM]) -> Self {
        let mut out = [0.0; DIM];
        for (o, v) in out.iter_mut().zip(values) {
            *o = if v.is_nan() {
                0.0
            } else {
                v.clamp(-PARAM_LIMIT, PARAM_LIMIT)
            };
        }
        ArticulatoryVector(out)
    }

    pub fn as_array(&self) -> &[f64; DIM] {
        &self.0
    }

    pub fn get(&self, param: Param) -> f64 {
        self.0[param as usize]
    }

    pub fn with(mut self, param: Param, value: f64) -> Result<Self> {
        self.0[param as usize] = value;
        ArticulatoryVector::new(self.0)
    }

    pub fn jaw(&self) -> f64 {
        self.0[0]
    }
    pub fn tongue_pos(&self) -> f64 {
        self.0[1]
    }
    pub fn tongue_shape(&self) -> f64 {
        self.0[2]
    }
    pub fn apex(&self) -> f64 {
        self.0[3]
    }
    pub fn lip_aperture(&self) -> f64 {
        self.0[4]
    }
    pub fn lip_protrusion(&self) -> f64 {
        self.0[5]
    }
    pub fn larynx(&self) -> f64 {
        self.0[6]
    }

    /// Squared Euclidean distance in standard-deviation units.
    pub fn distance_sq(&self, other: &ArticulatoryVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl fmt::Display for ArticulatoryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Parses the text form: seven comma-separated decimals.
impl FromStr for ArticulatoryVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != DIM {
            return Err(Error::Parse(format!(
                "articulatory vector needs {DIM} comma-separated values, got {}",
                parts.len()
            )));
        }
        let mut values = [0.0; DIM];
        for (slot, part) in values.iter_mut().zip(parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::Parse(format!("invalid number `{part}`")))?;
        }
        ArticulatoryVector::new(values)
    }
}

/// One cylindrical tube section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    /// Cross-sectional area, cm².
    pub area: f64,
    /// Length, cm.
    pub length: f64,
}

/// Cross-sectional areas from glottis (first) to lips (last).
#[derive(Debug, Clone, PartialEq)]
pub struct AreaFunction {
    sections: Vec<Section>,
}

impl AreaFunction {
    pub fn new(sections: Vec<Section>) -> Result<Self> {
        for s in &sections {
            if !(s.length > 0.0) || !(s.area >= 0.0) {
                return Err(Error::Config(format!(
                    "invalid tube section (area {}, length {})",
                    s.area, s.length
                )));
            }
        }
        Ok(AreaFunction { sections })
    }

    /// `n` sections of equal length and area.
    pub fn uniform(n: usize, total_length: f64, area: f64) -> Result<Self> {
        let length = total_length / n as f64;
        AreaFunction::new(vec![Section { area, length }; n])
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.sections.iter().map(|s| s.length).sum()
    }

    pub fn min_area(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| s.area)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_open(&self, epsilon_closure: f64) -> bool {
        !self.sections.is_empty() && self.min_area() > epsilon_closure
    }

    /// Same shape with every area multiplied by `factor`.
    pub fn scale_areas(&self, factor: f64) -> AreaFunction {
        AreaFunction {
            sections: self
                .sections
                .iter()
                .map(|s| Section {
                    area: s.area * factor,
                    length: s.length,
                })
                .collect(),
        }
    }

    /// Same shape with every length multiplied by `factor`.
    pub fn scale_lengths(&self, factor: f64) -> AreaFunction {
        AreaFunction {
            sections: self
                .sections
                .iter()
                .map(|s| Section {
                    area: s.area,
                    length: s.length * factor,
                })
                .collect(),
        }
    }
}

/// Location and size of the narrowest section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constriction {
    /// Midpoint of the narrowest section, cm from the glottis.
    pub place: f64,
    /// Its area, cm².
    pub area: f64,
}

/// Narrowest section of the tract. Ties go to the section nearest the glottis.
pub fn constriction_profile(af: &AreaFunction) -> Result<Constriction> {
    let mut best: Option<Constriction> = None;
    let mut start = 0.0;
    for s in af.sections() {
        let place = start + 0.5 * s.length;
        start += s.length;
        match best {
            Some(b) if s.area >= b.area => {}
            _ => best = Some(Constriction { place, area: s.area }),
        }
    }
    best.ok_or(Error::EmptyAreaFunction)
}

/// Constants of the surrogate vocal-tract model.
///
/// Along the tube, `x` is the neutral midpoint coordinate of a section in cm.
/// The log-area of section `x` is
///
/// ```text
/// ln A(x) = ln A0
///         + jaw_area_gain * jaw                        (oral half, x > L/2)
///         + mouth_opening_gain * la * ramp(x)          (oral half)
///         - body_depth(v) * exp(-(x - x_c)^2 / (2 w^2))
/// ```
///
/// where `ramp(x) = clamp(2x/L - 1, 0, 1)` rises from zero at mid-tract to one
/// at the lips. The tongue-body constriction is centred at
/// `x_c = tongue_center - tongue_place_gain * (tongue_pos + alpha * jaw)`
/// (positive tongue position is posterior) with a depth
///
/// ```text
/// body_depth = closure_depth * (exp(r * ts) - 1) / (exp(3 r) - 1)
///            + dorsum_depth_gain * (tongue_pos + alpha * jaw)^2
/// ```
///
/// which vanishes at the neutral vector and closes the tract when
/// `tongue_shape` reaches `+3`. The apex adds a linear-depth bump
/// `1 - apex_depth_gain * |apex| * g(x)` near `apex_center + apex_place_gain *
/// apex`. The last `lip_sections` sections take the lip area
/// `A0 * (exp(k (la + 3)) - 1) / (exp(3 k) - 1)`, which equals `A0` at the
/// neutral aperture and vanishes at `la = -3`. Protrusion scales the length
/// of the `lip_sections` sections just behind the lips exponentially, so the
/// total length grows by `protrusion_max_length` at `lp = +3`. The larynx
/// scales the first section length by `1 + larynx_length_gain * larynx`.
///
/// With `jaw_area_gain = 0` the jaw acts only through the compensated
/// coordinate, so tongue position exactly compensates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub section_count: usize,
    pub neutral_length: f64,
    pub neutral_area: f64,
    pub epsilon_closure: f64,
    pub alpha_compensation: f64,
    pub jaw_area_gain: f64,
    pub tongue_center: f64,
    pub tongue_place_gain: f64,
    pub tongue_width: f64,
    pub closure_depth: f64,
    pub tongue_shape_rate: f64,
    pub dorsum_depth_gain: f64,
    pub apex_center: f64,
    pub apex_place_gain: f64,
    pub apex_depth_gain: f64,
    pub apex_width: f64,
    pub lip_sections: usize,
    pub lip_area_rate: f64,
    pub protrusion_max_length: f64,
    pub larynx_length_gain: f64,
    /// Log-area gain of lip aperture on the oral cavity, ramping from zero at
    /// mid-tract to full at the lips.
    pub mouth_opening_gain: f64,
    /// Weight of lip aperture on the opening axis.
    pub opening_lip_weight: f64,
    /// Weight of the compensated tongue coordinate on the opening axis.
    pub opening_tongue_weight: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            section_count: 32,
            neutral_length: 17.5,
            neutral_area: 4.0,
            epsilon_closure: 0.05,
            alpha_compensation: 0.66,
            jaw_area_gain: 0.0,
            tongue_center: 11.9,
            tongue_place_gain: 1.8,
            tongue_width: 1.1,
            closure_depth: 4.6,
            tongue_shape_rate: 10.0,
            dorsum_depth_gain: 0.11,
            apex_center: 13.0,
            apex_place_gain: 0.5,
            apex_depth_gain: 0.02,
            apex_width: 1.0,
            lip_sections: 2,
            lip_area_rate: 0.22,
            protrusion_max_length: 2.5,
            larynx_length_gain: 0.05,
            mouth_opening_gain: 1.0,
            opening_lip_weight: 0.8,
            opening_tongue_weight: 0.03,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.section_count < 8 {
            return bad("section_count must be at least 8");
        }
        if !(self.neutral_length > 0.0) {
            return bad("neutral_length must be positive");
        }
        if !(self.neutral_area > 0.0) {
            return bad("neutral_area must be positive");
        }
        if !(self.alpha_compensation > 0.0) {
            return bad("alpha_compensation must be positive");
        }
        if !(self.epsilon_closure >= 0.0) {
            return bad("epsilon_closure must be non-negative");
        }
        if self.lip_sections == 0 || self.lip_sections >= self.section_count {
            return bad("lip_sections must be between 1 and section_count - 1");
        }
        if !(self.tongue_width > 0.0) || !(self.apex_width > 0.0) {
            return bad("bump widths must be positive");
        }
        if !(self.tongue_shape_rate > 0.0) || !(self.lip_area_rate > 0.0) {
            return bad("shape rates must be positive");
        }
        if !(self.protrusion_max_length > -self.lip_length()) {
            return bad("protrusion_max_length would collapse the lip tube");
        }
        if !(self.larynx_length_gain.abs() * PARAM_LIMIT < 1.0) {
            return bad("larynx_length_gain must keep the first section positive");
        }
        if !(self.opening_lip_weight > 0.0) || !(self.opening_tongue_weight >= 0.0) {
            return bad("opening weights must be positive");
        }
        Ok(())
    }

    pub fn section_length(&self) -> f64 {
        self.neutral_length / self.section_count as f64
    }

    /// Neutral length of the lip region, cm.
    pub fn lip_length(&self) -> f64 {
        self.section_length() * self.lip_sections as f64
    }

    /// Lip-region length scale such that `lp = +3` adds `protrusion_max_length`.
    fn protrusion_rate(&self) -> f64 {
        (1.0 + self.protrusion_max_length / self.lip_length()).ln() / PARAM_LIMIT
    }

    pub fn lip_area(&self, lip_aperture: f64) -> f64 {
        let k = self.lip_area_rate;
        self.neutral_area * ((k * (lip_aperture + PARAM_LIMIT)).exp() - 1.0)
            / ((k * PARAM_LIMIT).exp() - 1.0)
    }

    /// The compensated tongue coordinate `tongue_pos + alpha * jaw`.
    pub fn dorsum(&self, v: &ArticulatoryVector) -> f64 {
        v.tongue_pos() + self.alpha_compensation * v.jaw()
    }
}

/// Maps a parameter vector to its area function. Deterministic and
/// continuous; invalid (closed) shapes are representable.
pub fn to_area_function(v: &ArticulatoryVector, cfg: &ModelConfig) -> AreaFunction {
    let n = cfg.section_count;
    let dx = cfg.section_length();
    let dorsum = cfg.dorsum(v);

    let x_c = cfg.tongue_center - cfg.tongue_place_gain * dorsum;
    let r = cfg.tongue_shape_rate;
    let body_depth = cfg.closure_depth * ((r * v.tongue_shape()).exp() - 1.0)
        / ((r * PARAM_LIMIT).exp() - 1.0)
        + cfg.dorsum_depth_gain * dorsum * dorsum;
    let two_w2 = 2.0 * cfg.tongue_width * cfg.tongue_width;

    let apex_c = cfg.apex_center + cfg.apex_place_gain * v.apex();
    let apex_depth = cfg.apex_depth_gain * v.apex().abs();
    let two_aw2 = 2.0 * cfg.apex_width * cfg.apex_width;

    let lip_start = n - cfg.lip_sections;
    let front_start = lip_start - cfg.lip_sections;
    let lip_area = cfg.lip_area(v.lip_aperture());
    let lip_length = dx * (cfg.protrusion_rate() * v.lip_protrusion()).exp();

    let mut sections = Vec::with_capacity(n);
    for i in 0..n {
        let x = (i as f64 + 0.5) * dx;
        let length = if i == 0 {
            dx * (1.0 + cfg.larynx_length_gain * v.larynx())
        } else if i >= front_start && i < lip_start {
            lip_length
        } else {
            dx
        };
        let area = if i >= lip_start {
            lip_area
        } else {
            let mut log_area = cfg.neutral_area.ln();
            if 2 * i >= n {
                log_area += cfg.jaw_area_gain * v.jaw();
                let ramp = (2.0 * x / cfg.neutral_length - 1.0).clamp(0.0, 1.0);
                log_area += cfg.mouth_opening_gain * v.lip_aperture() * ramp;
            }
            let dx_c = x - x_c;
            log_area -= body_depth * (-dx_c * dx_c / two_w2).exp();
            let dx_a = x - apex_c;
            let apex_factor = 1.0 - apex_depth * (-dx_a * dx_a / two_aw2).exp();
            log_area.exp() * apex_factor.max(0.0)
        };
        sections.push(Section { area, length });
    }
    AreaFunction { sections }
}

pub fn is_valid(v: &ArticulatoryVector, cfg: &ModelConfig) -> bool {
    to_area_function(v, cfg).is_open(cfg.epsilon_closure)
}

/// Values of a vector on the phonetic constraint axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintAxes {
    pub dorsum_value: f64,
    pub opening_value: f64,
    /// Always zero: the model has no lip-stretch parameter.
    pub stretch_value: f64,
    pub protrusion_value: f64,
}

pub fn constraint_axes(v: &ArticulatoryVector, cfg: &ModelConfig) -> ConstraintAxes {
    let dorsum = cfg.dorsum(v);
    let compensated = dorsum / (1.0 + cfg.alpha_compensation);
    ConstraintAxes {
        dorsum_value: dorsum,
        opening_value: cfg.opening_lip_weight * v.lip_aperture()
            + cfg.opening_tongue_weight * compensated,
        stretch_value: 0.0,
        protrusion_value: v.lip_protrusion(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_with(param: Param, value: f64) -> ArticulatoryVector {
        ArticulatoryVector::NEUTRAL.with(param, value).unwrap()
    }

    #[test]
    fn neutral_is_uniform_tube() {
        let cfg = ModelConfig::default();
        let af = to_area_function(&ArticulatoryVector::NEUTRAL, &cfg);
        assert_eq!(af.len(), 32);
        for s in af.sections() {
            assert!((s.area - 4.0).abs() < 1e-12);
            assert!((s.length - 0.546875).abs() < 1e-12);
        }
        assert!((af.total_length() - 17.5).abs() < 1e-12);
        assert!(is_valid(&ArticulatoryVector::NEUTRAL, &cfg));
    }

    #[test]
    fn out_of_range_rejected() {
        let err = ArticulatoryVector::new([0.0, 0.0, 3.0001, 0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { param: "tongue_shape", .. }));
        assert!(ArticulatoryVector::new([3.0, -3.0, 3.0, -3.0, 3.0, -3.0, 3.0]).is_ok());
    }

    #[test]
    fn tongue_shape_extreme_closes() {
        let cfg = ModelConfig::default();
        let v = vec_with(Param::TongueShape, 3.0);
        let af = to_area_function(&v, &cfg);
        // Deepest section is 21 (midpoint 11.7578 cm), full closure depth 4.6.
        let dx: f64 = 21.5 * 0.546875 - 11.9;
        let expected = 4.0 * (-4.6f64 * (-(dx * dx) / (2.0 * 1.1 * 1.1)).exp()).exp();
        assert!((af.min_area() - expected).abs() < 1e-12);
        assert!(af.min_area() <= cfg.epsilon_closure);
        assert!(!is_valid(&v, &cfg));
    }

    #[test]
    fn lip_closing_extreme_is_invalid() {
        let cfg = ModelConfig::default();
        let v = vec_with(Param::LipAperture, -3.0);
        assert_eq!(to_area_function(&v, &cfg).min_area(), 0.0);
        assert!(!is_valid(&v, &cfg));
        assert!(is_valid(&vec_with(Param::LipAperture, -2.0), &cfg));
    }

    #[test]
    fn protrusion_extends_length() {
        let cfg = ModelConfig::default();
        let af = to_area_function(&vec_with(Param::LipProtrusion, 3.0), &cfg);
        assert!((af.total_length() - (17.5 + 2.5)).abs() < 1e-12);
        let af = to_area_function(&vec_with(Param::LipProtrusion, -3.0), &cfg);
        assert!(af.total_length() < 17.5);
    }

    #[test]
    fn larynx_scales_first_section() {
        let cfg = ModelConfig::default();
        let af = to_area_function(&vec_with(Param::Larynx, 2.0), &cfg);
        assert!((af.sections()[0].length - 0.546875 * 1.1).abs() < 1e-12);
    }

    #[test]
    fn constriction_uniform_tie_goes_to_glottis() {
        let af = AreaFunction::uniform(32, 17.5, 4.0).unwrap();
        let c = constriction_profile(&af).unwrap();
        assert_eq!(c.area, 4.0);
        assert!((c.place - 0.546875 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn constriction_two_equal_minima() {
        let mut sections = vec![Section { area: 3.0, length: 1.0 }; 10];
        sections[2].area = 1.0;
        sections[7].area = 1.0;
        let c = constriction_profile(&AreaFunction::new(sections).unwrap()).unwrap();
        assert_eq!(c.place, 2.5);
        assert_eq!(c.area, 1.0);
    }

    #[test]
    fn constriction_follows_tongue_bump() {
        let cfg = ModelConfig::default();
        // ts = 2.9 gives a pronounced constriction at x_c = 11.9 (dorsum 0).
        let v = vec_with(Param::TongueShape, 2.9);
        let c = constriction_profile(&to_area_function(&v, &cfg)).unwrap();
        assert!((c.place - 11.9).abs() <= cfg.section_length());
        assert!(c.area < 4.0);
    }

    #[test]
    fn empty_area_function_has_no_constriction() {
        let af = AreaFunction::new(vec![]).unwrap();
        assert!(matches!(constriction_profile(&af), Err(Error::EmptyAreaFunction)));
    }

    #[test]
    fn axes_examples() {
        let cfg = ModelConfig::default();
        assert_eq!(
            constraint_axes(&ArticulatoryVector::NEUTRAL, &cfg),
            ConstraintAxes::default()
        );
        let v = ArticulatoryVector::new([1.0, -0.66, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(constraint_axes(&v, &cfg).dorsum_value.abs() < 1e-15);

        let v = ArticulatoryVector::new([1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let axes = constraint_axes(&v, &cfg);
        assert!((axes.dorsum_value - 1.66).abs() < 1e-15);
        let opening = cfg.opening_lip_weight + cfg.opening_tongue_weight * 1.66 / 1.66;
        assert!((axes.opening_value - opening).abs() < 1e-15);
        assert_eq!(axes.protrusion_value, 0.0);
        assert_eq!(axes.stretch_value, 0.0);
    }

    #[test]
    fn parse_text_form() {
        let v: ArticulatoryVector = "1, -0.5, 0, 0, 2.5, 0, -3".parse().unwrap();
        assert_eq!(v.as_array(), &[1.0, -0.5, 0.0, 0.0, 2.5, 0.0, -3.0]);
        assert!("1,2,3".parse::<ArticulatoryVector>().is_err());
        assert!("1,2,3,4,5,6,x".parse::<ArticulatoryVector>().is_err());
        assert!("0,0,0,0,0,0,4".parse::<ArticulatoryVector>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let cfg = ModelConfig {
            section_count: 4,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            alpha_compensation: 0.0,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
