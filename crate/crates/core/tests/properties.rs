use proptest::prelude::*;

use artinv::acoustics::{self, bark, bark_distance, bark_to_hz, AcousticConfig, FormantTriple};
use artinv::constraints::{component_score, phonetic_score, ConstraintSpec, ConstraintTable};
use artinv::forward::{ForwardMap, Synthesizer};
use artinv::model::{self, AreaFunction, ArticulatoryVector, ModelConfig, Param, Section};
use artinv::partition::{classify, PartitionMode, PartitionModel, VowelPrototype};
use artinv::vowel::Vowel;

fn vector() -> impl Strategy<Value = ArticulatoryVector> {
    proptest::array::uniform7(-3.0..=3.0f64).prop_map(|a| ArticulatoryVector::new(a).unwrap())
}

fn spec() -> ConstraintSpec {
    ConstraintSpec::from_table(&ConstraintTable::default(), &ModelConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn area_functions_are_well_formed(v in vector()) {
        let cfg = ModelConfig::default();
        let af = model::to_area_function(&v, &cfg);
        prop_assert_eq!(af.len(), cfg.section_count);
        for s in af.sections() {
            prop_assert!(s.area >= 0.0 && s.area.is_finite());
            prop_assert!(s.length > 0.0);
        }
        prop_assert_eq!(model::to_area_function(&v, &cfg), af);
    }

    #[test]
    fn formants_are_ordered_and_in_band(v in vector()) {
        let synth = Synthesizer::default();
        if let Some(f) = synth.evaluate(&v) {
            prop_assert!(synth.acoustic.min_hz <= f.f1 && f.f1 < f.f2 && f.f2 < f.f3);
            prop_assert!(f.f3 <= synth.acoustic.max_hz);
            prop_assert_eq!(synth.formants(&v).unwrap(), f);
        } else {
            prop_assert!(!synth.is_valid(&v) || synth.formants(&v).is_err());
        }
    }

    #[test]
    fn jaw_is_compensated_by_tongue_position(v in vector(), delta in -1.0..1.0f64) {
        let cfg = ModelConfig::default();
        let jaw = v.jaw() + delta;
        let tongue = v.tongue_pos() - cfg.alpha_compensation * delta;
        prop_assume!(jaw.abs() <= 3.0 && tongue.abs() <= 3.0);
        let w = v.with(Param::Jaw, jaw).unwrap().with(Param::TonguePos, tongue).unwrap();
        let (a, b) = (model::to_area_function(&v, &cfg), model::to_area_function(&w, &cfg));
        for (x, y) in a.sections().iter().zip(b.sections()) {
            prop_assert!((x.area - y.area).abs() <= 1e-9 * x.area.max(1.0));
            prop_assert_eq!(x.length, y.length);
        }
    }

    #[test]
    fn area_scaling_leaves_formants(v in vector(), k in 0.25..4.0f64) {
        let synth = Synthesizer::default();
        prop_assume!(synth.is_valid(&v));
        let af = model::to_area_function(&v, &synth.model);
        let scaled = AreaFunction::new(
            af.sections().iter().map(|s| Section { area: k * s.area, length: s.length }).collect(),
        )
        .unwrap();
        let (a, b) = (acoustics::formants(&af, &synth.acoustic), acoustics::formants(&scaled, &synth.acoustic));
        if let (Ok(a), Ok(b)) = (a, b) {
            for (x, y) in a.to_array().into_iter().zip(b.to_array()) {
                prop_assert!((x - y).abs() <= synth.acoustic.refine_tolerance_hz);
            }
        }
    }

    #[test]
    fn shorter_uniform_tubes_resonate_higher(length in 10.0..20.0f64) {
        let cfg = AcousticConfig::default();
        let f = acoustics::formants(&AreaFunction::uniform(32, length, 3.0).unwrap(), &cfg).unwrap();
        let quarter = cfg.speed_of_sound / (4.0 * length);
        for (k, got) in f.to_array().into_iter().enumerate() {
            let want = (2 * k + 1) as f64 * quarter;
            prop_assert!((got - want).abs() <= 1.0, "{} vs {}", got, want);
        }
    }

    #[test]
    fn bark_round_trips(hz in 50.0..8000.0f64) {
        prop_assert!((bark_to_hz(bark(hz)) - hz).abs() < 1e-9 * hz);
        prop_assert!(bark(hz + 1.0) > bark(hz));
    }

    #[test]
    fn bark_distance_is_a_metric(a in proptest::array::uniform3(200.0..4000.0f64), b in proptest::array::uniform3(200.0..4000.0f64)) {
        let mut a = a;
        let mut b = b;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (Ok(fa), Ok(fb)) = (FormantTriple::from_array(a), FormantTriple::from_array(b)) else {
            return Ok(());
        };
        prop_assert_eq!(bark_distance(&fa, &fa), 0.0);
        prop_assert_eq!(bark_distance(&fa, &fb), bark_distance(&fb, &fa));
    }

    #[test]
    fn scores_stay_in_unit_interval(v in vector()) {
        let spec = spec();
        let cfg = ModelConfig::default();
        for vowel in Vowel::ALL {
            let s = phonetic_score(&v, vowel, &spec, &cfg);
            prop_assert!((0.0..=1.0).contains(&s.overall));
            prop_assert!(s.components.iter().all(|c| (0.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn component_score_is_monotone(target in -3.0..3.0f64, margin in 0.01..2.0f64, decay in 0.01..2.0f64, a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        let sn = component_score(target + near, target, margin, decay);
        let sf = component_score(target + far, target, margin, decay);
        prop_assert!(sn >= sf);
        prop_assert!((component_score(target - near, target, margin, decay) - sn).abs() <= 1e-12);
    }

    #[test]
    fn vectors_round_trip_through_text(v in vector()) {
        let text = v.to_string();
        let back: ArticulatoryVector = text.parse().unwrap();
        for (x, y) in back.as_array().iter().zip(v.as_array()) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn prototype_means_classify_to_themselves(shift in 0.0..200.0f64, weighted in any::<bool>()) {
        let mode = if weighted { PartitionMode::Weighted } else { PartitionMode::Voronoi };
        let protos: Vec<VowelPrototype> = Vowel::ALL
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let i = i as f64;
                VowelPrototype::new(v, [250.0 + 60.0 * i + shift, 900.0 + 150.0 * i, 2400.0 + 40.0 * i], [30.0, 90.0, 120.0])
                    .unwrap()
            })
            .collect();
        let pm = PartitionModel::new(protos, mode).unwrap();
        for p in pm.prototypes() {
            let f = FormantTriple::from_array(p.mean).unwrap();
            prop_assert_eq!(classify(&f, &pm), p.vowel);
        }
        let back = PartitionModel::from_csv(&pm.to_csv(), mode).unwrap();
        prop_assert_eq!(back.prototypes().len(), 10);
    }
}

#[test]
fn formant_text_parses() {
    let f: FormantTriple = "300, 2000,2800".parse().unwrap();
    assert_eq!(f.to_array(), [300.0, 2000.0, 2800.0]);
    assert!("300,2000".parse::<FormantTriple>().is_err());
    assert!("2000,300,2800".parse::<FormantTriple>().is_err());
    assert!("a,b,c".parse::<FormantTriple>().is_err());
}
