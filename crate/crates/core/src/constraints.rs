//! Phonetic constraints for French oral vowels and the phonetic score.
//!
//! Every vowel is classified on four constraint types: tongue dorsum
//! position (D), mouth opening (O), lip stretching (S) and lip protrusion
//! (P). A category level maps to a target `θ` and a margin `σ` on the
//! matching model axis; inside `[θ - σ, θ + σ]` a vector scores 1 for that
//! type, outside the score decays exponentially with the distance to the
//! interval. The overall score is the weighted sum of the four components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{self, constraint_axes, ArticulatoryVector, ConstraintAxes, ModelConfig, DIM, PARAM_LIMIT};
use crate::vowel::Vowel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintType {
    Dorsum = 0,
    Opening = 1,
    Stretch = 2,
    Protrusion = 3,
}

impl ConstraintType {
    pub const ALL: [ConstraintType; 4] = [
        ConstraintType::Dorsum,
        ConstraintType::Opening,
        ConstraintType::Stretch,
        ConstraintType::Protrusion,
    ];

    pub fn letter(self) -> char {
        match self {
            ConstraintType::Dorsum => 'D',
            ConstraintType::Opening => 'O',
            ConstraintType::Stretch => 'S',
            ConstraintType::Protrusion => 'P',
        }
    }

    /// Inclusive level range of the classification scale. The dorsum scale
    /// also covers consonant places (0 = bilabial ... 9 = uvular).
    pub fn level_range(self) -> (u8, u8) {
        match self {
            ConstraintType::Dorsum => (0, 9),
            _ => (1, 4),
        }
    }

    fn axis_value(self, axes: &ConstraintAxes) -> f64 {
        match self {
            ConstraintType::Dorsum => axes.dorsum_value,
            ConstraintType::Opening => axes.opening_value,
            ConstraintType::Stretch => axes.stretch_value,
            ConstraintType::Protrusion => axes.protrusion_value,
        }
    }
}

/// Category levels of one vowel, indexed by [`ConstraintType`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VowelLevels(pub [u8; 4]);

impl VowelLevels {
    pub fn level(&self, t: ConstraintType) -> u8 {
        self.0[t as usize]
    }
}

/// Category levels of the ten oral vowels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintTable {
    rows: [VowelLevels; 10],
}

impl Default for ConstraintTable {
    /// The standard classification of French oral vowels.
    fn default() -> Self {
        let r = |d, o, s, p| VowelLevels([d, o, s, p]);
        ConstraintTable {
            rows: [
                r(6, 1, 4, 1), // i
                r(6, 2, 3, 1), // e
                r(6, 3, 2, 1), // ɛ
                r(7, 4, 1, 1), // a
                r(6, 1, 1, 4), // y
                r(6, 2, 1, 3), // ø
                r(6, 3, 1, 2), // œ
                r(8, 1, 1, 4), // u
                r(8, 2, 1, 3), // o
                r(8, 3, 1, 2), // ɔ
            ],
        }
    }
}

impl ConstraintTable {
    pub fn new(rows: [VowelLevels; 10]) -> Result<Self> {
        for (v, row) in Vowel::ALL.iter().zip(rows.iter()) {
            for t in ConstraintType::ALL {
                let (lo, hi) = t.level_range();
                let level = row.level(t);
                if level < lo || level > hi {
                    return Err(Error::Config(format!(
                        "/{v}/: {}{level} outside {}{lo}..{}{hi}",
                        t.letter(),
                        t.letter(),
                        t.letter()
                    )));
                }
            }
        }
        Ok(ConstraintTable { rows })
    }

    pub fn levels(&self, v: Vowel) -> VowelLevels {
        self.rows[v.index()]
    }

    /// Text form of one row, e.g. `D6 O1 S4 P1`.
    pub fn row_text(&self, v: Vowel) -> String {
        let row = self.levels(v);
        ConstraintType::ALL
            .iter()
            .map(|t| format!("{}{}", t.letter(), row.level(*t)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses a row in the form produced by [`ConstraintTable::row_text`].
    pub fn parse_row(text: &str) -> Result<VowelLevels> {
        let mut levels = [None; 4];
        for token in text.split_whitespace() {
            let mut chars = token.chars();
            let letter = chars.next().unwrap_or(' ');
            let t = ConstraintType::ALL
                .into_iter()
                .find(|t| t.letter() == letter.to_ascii_uppercase())
                .ok_or_else(|| Error::Parse(format!("unknown constraint `{token}`")))?;
            let level: u8 = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid level `{token}`")))?;
            levels[t as usize] = Some(level);
        }
        let mut out = [0; 4];
        for (o, l) in out.iter_mut().zip(levels) {
            *o = l.ok_or_else(|| Error::Parse(format!("row `{text}` must list D, O, S and P")))?;
        }
        Ok(VowelLevels(out))
    }

    pub fn set_row(&mut self, v: Vowel, levels: VowelLevels) -> Result<()> {
        let mut rows = self.rows;
        rows[v.index()] = levels;
        *self = ConstraintTable::new(rows)?;
        Ok(())
    }
}

/// Target and margin of one vowel on one constraint axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub target: f64,
    pub margin: f64,
    /// Decay length of the score outside the interval.
    pub decay: f64,
}

impl Interval {
    pub fn lower(&self) -> f64 {
        self.target - self.margin
    }
    pub fn upper(&self) -> f64 {
        self.target + self.margin
    }
    pub fn contains(&self, value: f64) -> bool {
        (value - self.target).abs() <= self.margin
    }
}

/// Numeric constraint intervals for all vowels plus per-type weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    intervals: [[Interval; 4]; 10],
    weights: [f64; 4],
}

/// Options for deriving a [`ConstraintSpec`] from a table.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecOptions {
    /// Margin as a fraction of the spacing between adjacent targets.
    pub margin_fraction: f64,
    /// Decay length as a multiple of the margin.
    pub decay_factor: f64,
    /// Raw weights for D, O, S, P; normalised to sum to one.
    pub weights: [f64; 4],
}

impl Default for SpecOptions {
    fn default() -> Self {
        SpecOptions {
            margin_fraction: 0.5,
            decay_factor: 1.0,
            weights: [1.0, 1.0, 0.0, 1.0],
        }
    }
}

/// Achievable range of each constraint axis over `[-3, 3]^7`.
pub fn axis_range(t: ConstraintType, cfg: &ModelConfig) -> (f64, f64) {
    let half = match t {
        ConstraintType::Dorsum => PARAM_LIMIT * (1.0 + cfg.alpha_compensation),
        ConstraintType::Opening => {
            PARAM_LIMIT * (cfg.opening_lip_weight.abs() + cfg.opening_tongue_weight.abs())
        }
        // Stretch has no model parameter; its nominal range is one parameter's.
        ConstraintType::Stretch | ConstraintType::Protrusion => PARAM_LIMIT,
    };
    (-half, half)
}

impl ConstraintSpec {
    pub fn from_table(table: &ConstraintTable, cfg: &ModelConfig) -> Self {
        ConstraintSpec::with_options(table, cfg, &SpecOptions::default())
            .expect("default options are valid")
    }

    /// Levels map affinely onto each axis range: a scale of `k` levels cuts
    /// the range into `k` equal cells and targets sit at the cell centres.
    pub fn with_options(table: &ConstraintTable, cfg: &ModelConfig, opts: &SpecOptions) -> Result<Self> {
        if !(opts.margin_fraction > 0.0) || !(opts.decay_factor > 0.0) {
            return Err(Error::Config("margin and decay factors must be positive".into()));
        }
        if opts.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("constraint weights must be non-negative".into()));
        }
        let mut weights = opts.weights;
        weights[ConstraintType::Stretch as usize] = 0.0;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("at least one constraint weight must be positive".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);

        let mut intervals = [[Interval {
            target: 0.0,
            margin: 1.0,
            decay: 1.0,
        }; 4]; 10];
        for v in Vowel::ALL {
            let row = table.levels(v);
            for t in ConstraintType::ALL {
                let (lo, hi) = axis_range(t, cfg);
                let (first, last) = t.level_range();
                let spacing = (hi - lo) / f64::from(last - first + 1);
                let target = lo + (f64::from(row.level(t) - first) + 0.5) * spacing;
                let margin = opts.margin_fraction * spacing;
                intervals[v.index()][t as usize] = Interval {
                    target,
                    margin,
                    decay: opts.decay_factor * margin,
                };
            }
        }
        Ok(ConstraintSpec { intervals, weights })
    }

    pub fn interval(&self, v: Vowel, t: ConstraintType) -> Interval {
        self.intervals[v.index()][t as usize]
    }

    pub fn set_interval(&mut self, v: Vowel, t: ConstraintType, interval: Interval) -> Result<()> {
        if !(interval.margin > 0.0) || !(interval.decay > 0.0) {
            return Err(Error::Config("margins and decay lengths must be positive".into()));
        }
        self.intervals[v.index()][t as usize] = interval;
        Ok(())
    }

    /// Normalised weight of each type; stretch is always zero.
    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn weight(&self, t: ConstraintType) -> f64 {
        self.weights[t as usize]
    }
}

/// 1 inside `[θ - σ, θ + σ]`, else `exp(-(|value - θ| - σ) / τ)`.
pub fn component_score(value: f64, target: f64, margin: f64, decay: f64) -> f64 {
    let excess = (value - target).abs() - margin;
    if excess <= 0.0 {
        1.0
    } else {
        (-excess / decay).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhoneticScore {
    pub overall: f64,
    /// Indexed by [`ConstraintType`].
    pub components: [f64; 4],
}

impl PhoneticScore {
    pub fn component(&self, t: ConstraintType) -> f64 {
        self.components[t as usize]
    }
}

pub fn phonetic_score(
    v: &ArticulatoryVector,
    vowel: Vowel,
    spec: &ConstraintSpec,
    cfg: &ModelConfig,
) -> PhoneticScore {
    score_axes(&constraint_axes(v, cfg), vowel, spec)
}

pub fn score_axes(axes: &ConstraintAxes, vowel: Vowel, spec: &ConstraintSpec) -> PhoneticScore {
    let mut components = [0.0; 4];
    // Accumulate the shortfall so that a perfect match is exactly 1.
    let mut deficit = 0.0;
    for t in ConstraintType::ALL {
        let iv = spec.interval(vowel, t);
        let c = component_score(t.axis_value(axes), iv.target, iv.margin, iv.decay);
        components[t as usize] = c;
        deficit += spec.weight(t) * (1.0 - c);
    }
    PhoneticScore {
        overall: (1.0 - deficit).clamp(0.0, 1.0),
        components,
    }
}

/// True when every weighted axis value lies inside its validity interval.
pub fn in_ideal_domain(axes: &ConstraintAxes, vowel: Vowel, spec: &ConstraintSpec) -> bool {
    ConstraintType::ALL.iter().all(|&t| {
        spec.weight(t) == 0.0 || spec.interval(vowel, t).contains(t.axis_value(axes))
    })
}

/// Draws attempted per requested sample before giving up.
pub const SAMPLING_ATTEMPTS_PER_SAMPLE: usize = 20_000;

/// Uniform samples of the ideal domain of `vowel` that are also valid
/// (open-tract) shapes.
///
/// Rejection sampling: lip protrusion is drawn directly from its interval,
/// every other parameter uniformly from `[-3, 3]`, and a draw is kept when
/// its dorsum and opening values fall in their intervals and the tract is
/// open. Unconstrained parameters (tongue shape, apex, larynx) stay free.
pub fn ideal_domain_sample(
    vowel: Vowel,
    spec: &ConstraintSpec,
    cfg: &ModelConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<ArticulatoryVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (vowel.index() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let budget = n.saturating_mul(SAMPLING_ATTEMPTS_PER_SAMPLE);
    let p = spec.interval(vowel, ConstraintType::Protrusion);
    let (p_lo, p_hi) = if spec.weight(ConstraintType::Protrusion) > 0.0 {
        (p.lower().max(-PARAM_LIMIT), p.upper().min(PARAM_LIMIT))
    } else {
        (-PARAM_LIMIT, PARAM_LIMIT)
    };
    if p_lo >= p_hi {
        return Err(Error::SamplingFailed {
            vowel: vowel.sampa(),
            attempts: 0,
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= budget {
            return Err(Error::SamplingFailed {
                vowel: vowel.sampa(),
                attempts,
            });
        }
        attempts += 1;
        let mut x = [0.0; DIM];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if i == model::Param::LipProtrusion as usize {
                rng.random_range(p_lo..=p_hi)
            } else {
                rng.random_range(-PARAM_LIMIT..=PARAM_LIMIT)
            };
        }
        let v = ArticulatoryVector::clamped(x);
        if in_ideal_domain(&constraint_axes(&v, cfg), vowel, spec) && model::is_valid(&v, cfg) {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Param;

    fn setup() -> (ModelConfig, ConstraintSpec) {
        let cfg = ModelConfig::default();
        let spec = ConstraintSpec::from_table(&ConstraintTable::default(), &cfg);
        (cfg, spec)
    }

    #[test]
    fn default_table_cells() {
        let table = ConstraintTable::default();
        let expected = [
            "D6 O1 S4 P1",
            "D6 O2 S3 P1",
            "D6 O3 S2 P1",
            "D7 O4 S1 P1",
            "D6 O1 S1 P4",
            "D6 O2 S1 P3",
            "D6 O3 S1 P2",
            "D8 O1 S1 P4",
            "D8 O2 S1 P3",
            "D8 O3 S1 P2",
        ];
        for (v, row) in Vowel::ALL.iter().zip(expected) {
            assert_eq!(table.row_text(*v), row);
            assert_eq!(ConstraintTable::parse_row(row).unwrap(), table.levels(*v));
        }
    }

    #[test]
    fn table_rejects_bad_levels() {
        let mut rows = [VowelLevels([6, 1, 1, 1]); 10];
        assert!(ConstraintTable::new(rows).is_ok());
        rows[3] = VowelLevels([6, 5, 1, 1]);
        assert!(ConstraintTable::new(rows).is_err());
        assert!(ConstraintTable::parse_row("D6 O1 S1").is_err());
        assert!(ConstraintTable::parse_row("D6 O1 S1 Q2").is_err());
    }

    #[test]
    fn protrusion_targets() {
        let (_, spec) = setup();
        let p = |v| spec.interval(v, ConstraintType::Protrusion);
        // i: P1, œ: P2, ø: P3, y: P4
        let got = [p(Vowel::I), p(Vowel::Oe), p(Vowel::Oslash), p(Vowel::Y)];
        for (iv, want) in got.iter().zip([-2.25, -0.75, 0.75, 2.25]) {
            assert!((iv.target - want).abs() < 1e-12);
            assert!((iv.margin - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn shared_levels_share_targets() {
        let (_, spec) = setup();
        for t in [ConstraintType::Dorsum, ConstraintType::Opening] {
            assert_eq!(spec.interval(Vowel::I, t), spec.interval(Vowel::Y, t));
        }
        let o = |v| spec.interval(v, ConstraintType::Opening).target;
        assert!(o(Vowel::A) > o(Vowel::OpenE));
        assert!(o(Vowel::OpenE) > o(Vowel::E));
        assert!(o(Vowel::E) > o(Vowel::I));
    }

    #[test]
    fn dorsum_uses_consonant_scale() {
        let (cfg, spec) = setup();
        let (lo, hi) = axis_range(ConstraintType::Dorsum, &cfg);
        let cell = (hi - lo) / 10.0;
        let d6 = spec.interval(Vowel::I, ConstraintType::Dorsum);
        assert!((d6.target - (lo + 6.5 * cell)).abs() < 1e-12);
        assert!((d6.margin - 0.5 * cell).abs() < 1e-12);
        let d8 = spec.interval(Vowel::U, ConstraintType::Dorsum);
        assert!(d8.target > d6.target);
    }

    #[test]
    fn weights_equal_without_stretch() {
        let (_, spec) = setup();
        let w = spec.weights();
        assert_eq!(w[ConstraintType::Stretch as usize], 0.0);
        for t in [ConstraintType::Dorsum, ConstraintType::Opening, ConstraintType::Protrusion] {
            assert!((spec.weight(t) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn component_score_shape() {
        assert_eq!(component_score(0.3, 0.3, 0.5, 0.5), 1.0);
        assert_eq!(component_score(-0.2, 0.3, 0.5, 0.5), 1.0);
        let s = component_score(0.3 + 0.5 + 0.7, 0.3, 0.5, 0.7);
        assert!((s - (-1.0f64).exp()).abs() < 1e-12);
        let inside = component_score(0.8, 0.3, 0.5, 0.5);
        let outside = component_score(0.8 + 1e-7, 0.3, 0.5, 0.5);
        assert!((inside - outside).abs() < 1e-6);
    }

    #[test]
    fn perfect_score_at_targets() {
        let (cfg, spec) = setup();
        let axes = ConstraintAxes {
            dorsum_value: spec.interval(Vowel::U, ConstraintType::Dorsum).target,
            opening_value: spec.interval(Vowel::U, ConstraintType::Opening).target,
            stretch_value: 0.0,
            protrusion_value: spec.interval(Vowel::U, ConstraintType::Protrusion).target,
        };
        assert_eq!(score_axes(&axes, Vowel::U, &spec).overall, 1.0);
        let _ = cfg;
    }

    #[test]
    fn stretch_irrelevant_and_protrusion_discriminates() {
        let (cfg, spec) = setup();
        let v = ArticulatoryVector::NEUTRAL
            .with(Param::LipProtrusion, spec.interval(Vowel::U, ConstraintType::Protrusion).target)
            .unwrap();
        let for_u = phonetic_score(&v, Vowel::U, &spec, &cfg);
        let for_i = phonetic_score(&v, Vowel::I, &spec, &cfg);
        assert!(for_i.component(ConstraintType::Protrusion) < for_u.component(ConstraintType::Protrusion));
        // Parameters that feed no weighted axis leave the score unchanged.
        for p in [Param::TongueShape, Param::Apex, Param::Larynx] {
            let moved = phonetic_score(&v.with(p, 2.5).unwrap(), Vowel::U, &spec, &cfg);
            assert_eq!(moved, for_u);
        }
    }

    #[test]
    fn ideal_samples_score_one() {
        let (cfg, spec) = setup();
        for vowel in Vowel::ALL {
            let samples = ideal_domain_sample(vowel, &spec, &cfg, 20, 7).unwrap();
            assert_eq!(samples.len(), 20);
            for v in &samples {
                assert_eq!(phonetic_score(v, vowel, &spec, &cfg).overall, 1.0);
                assert!(model::is_valid(v, &cfg));
            }
        }
        assert!(ideal_domain_sample(Vowel::A, &spec, &cfg, 0, 1).unwrap().is_empty());
        assert_eq!(
            ideal_domain_sample(Vowel::E, &spec, &cfg, 5, 3).unwrap(),
            ideal_domain_sample(Vowel::E, &spec, &cfg, 5, 3).unwrap()
        );
    }
}
