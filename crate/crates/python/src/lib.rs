//! Python bindings: `import pyartinv`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use artinv::acoustics::{self, FormantTriple};
use artinv::codebook::Codebook as CoreCodebook;
use artinv::config::Config;
use artinv::constraints::{phonetic_score, ConstraintSpec};
use artinv::error::Error;
use artinv::forward::{ForwardMap, Synthesizer as CoreSynthesizer};
use artinv::inversion::{self, FormantTrack, Frame, InversionOptions};
use artinv::model::{self, ArticulatoryVector, DIM};
use artinv::partition::{self, PartitionMode, PartitionModel as CorePartitionModel};
use artinv::vowel::Vowel;

fn err(e: Error) -> PyErr {
    match e {
        Error::Unreachable { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vector(values: Vec<f64>) -> PyResult<ArticulatoryVector> {
    let a: [f64; DIM] = values
        .try_into()
        .map_err(|v: Vec<f64>| PyValueError::new_err(format!("expected {DIM} parameters, got {}", v.len())))?;
    ArticulatoryVector::new(a).map_err(err)
}

fn triple(f: (f64, f64, f64)) -> PyResult<FormantTriple> {
    FormantTriple::new(f.0, f.1, f.2).map_err(err)
}

fn load_config(toml: Option<&str>) -> PyResult<Config> {
    toml.map_or_else(|| Ok(Config::default()), |t| Config::from_toml(t).map_err(err))
}

fn parse_mode(name: &str) -> PyResult<PartitionMode> {
    name.parse().map_err(err)
}

/// Forward model: articulatory vector to area function and formants.
#[pyclass(frozen)]
pub struct Synthesizer {
    inner: CoreSynthesizer,
    cfg: Config,
}

#[pymethods]
impl Synthesizer {
    /// `config` is the text of a TOML configuration file.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        let cfg = load_config(config)?;
        Ok(Synthesizer { inner: cfg.synthesizer().map_err(err)?, cfg })
    }

    fn formants(&self, v: Vec<f64>) -> PyResult<(f64, f64, f64)> {
        let f = self.inner.formants(&vector(v)?).map_err(err)?;
        Ok((f.f1, f.f2, f.f3))
    }

    fn is_valid(&self, v: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.is_valid(&vector(v)?))
    }

    /// `(length_cm, area_cm2)` per section, glottis first.
    fn area_function(&self, v: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let af = model::to_area_function(&vector(v)?, &self.inner.model);
        Ok(af.sections().iter().map(|s| (s.length, s.area)).collect())
    }

    /// `(place_cm, area_cm2)` of the narrowest section.
    fn constriction(&self, v: Vec<f64>) -> PyResult<(f64, f64)> {
        let c = model::constriction_profile(&model::to_area_function(&vector(v)?, &self.inner.model))
            .map_err(err)?;
        Ok((c.place, c.area))
    }

    /// `(overall, [D, O, S, P])` for a vowel given as X-SAMPA or IPA.
    fn score(&self, v: Vec<f64>, vowel: &str) -> PyResult<(f64, Vec<f64>)> {
        let vowel: Vowel = vowel.parse().map_err(err)?;
        let s = phonetic_score(&vector(v)?, vowel, &self.spec()?, &self.inner.model);
        Ok((s.overall, s.components.to_vec()))
    }
}

impl Synthesizer {
    fn spec(&self) -> PyResult<ConstraintSpec> {
        self.cfg.spec().map_err(err)
    }
}

#[pyclass(frozen)]
pub struct Codebook {
    inner: CoreCodebook,
}

#[pymethods]
impl Codebook {
    #[staticmethod]
    #[pyo3(signature = (synth, max_depth=None, threshold_bark=None))]
    fn build(py: Python<'_>, synth: &Synthesizer, max_depth: Option<u32>, threshold_bark: Option<f64>) -> PyResult<Self> {
        let mut cfg = synth.cfg.build.clone();
        cfg.max_depth = max_depth.unwrap_or(cfg.max_depth);
        cfg.linearity_threshold = threshold_bark.unwrap_or(cfg.linearity_threshold);
        let s = synth.inner.clone();
        let inner = py.detach(move || CoreCodebook::build(&s, &cfg)).map_err(err)?;
        Ok(Codebook { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Codebook { inner: CoreCodebook::load(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.cubes().len()
    }

    /// `points_sampled`, `cube_count`, `vertex_count`, `volume_fraction_kept`
    /// and `mean_interp_error_hz`.
    fn stats(&self) -> (u64, u64, u64, f64, f64) {
        let s = self.inner.stats();
        (s.points_sampled, s.cube_count, s.vertex_count, s.volume_fraction_kept, s.mean_interp_error_hz)
    }

    /// Ids of the cubes whose acoustic image may contain `formants`.
    fn lookup(&self, formants: (f64, f64, f64)) -> PyResult<Vec<usize>> {
        Ok(self.inner.lookup(&triple(formants)?))
    }

    /// Centre and half-edge of cube `id`.
    fn cube(&self, id: usize) -> PyResult<(Vec<f64>, f64)> {
        let c = self.inner.cubes().get(id).ok_or_else(|| PyValueError::new_err("cube id out of range"))?;
        Ok((c.center.to_vec(), c.half_edge))
    }

    #[pyo3(signature = (id, formants, n, tolerance_bark=0.3, seed=1))]
    fn sample_inverse(&self, id: usize, formants: (f64, f64, f64), n: usize, tolerance_bark: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let c = self.inner.cubes().get(id).ok_or_else(|| PyValueError::new_err("cube id out of range"))?;
        let sols = c
            .sample_inverse(self.inner.synthesizer(), &triple(formants)?, n, tolerance_bark, seed)
            .map_err(err)?;
        Ok(sols.iter().map(|v| v.as_array().to_vec()).collect())
    }
}

/// Vowel prototypes in formant space.
#[pyclass(frozen)]
pub struct PartitionModel {
    inner: CorePartitionModel,
}

#[pymethods]
impl PartitionModel {
    #[staticmethod]
    #[pyo3(signature = (synth, samples=200, seed=1, mode="weighted"))]
    fn calibrate(synth: &Synthesizer, samples: usize, seed: u64, mode: &str) -> PyResult<Self> {
        let pm = partition::calibrate_prototypes(&synth.inner, &synth.spec()?, samples, seed, parse_mode(mode)?)
            .map_err(err)?;
        Ok(PartitionModel { inner: pm })
    }

    #[staticmethod]
    #[pyo3(signature = (text, mode="weighted"))]
    fn from_csv(text: &str, mode: &str) -> PyResult<Self> {
        Ok(PartitionModel { inner: CorePartitionModel::from_csv(text, parse_mode(mode)?).map_err(err)? })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    /// X-SAMPA symbol of the region containing `formants`.
    fn classify(&self, formants: (f64, f64, f64)) -> PyResult<String> {
        Ok(partition::classify(&triple(formants)?, &self.inner).to_string())
    }

    /// Mean formants of a vowel's prototype.
    fn prototype(&self, vowel: &str) -> PyResult<(f64, f64, f64)> {
        let v: Vowel = vowel.parse().map_err(err)?;
        let p = self.inner.prototype(v).ok_or_else(|| PyValueError::new_err("vowel not calibrated"))?;
        Ok((p.mean[0], p.mean[1], p.mean[2]))
    }
}

/// Inverts a formant track given as `(t_ms, f1, f2, f3)` rows. Returns one
/// `(t_ms, vector, score, acoustic_error_bark)` tuple per frame. Raises
/// `RuntimeError` when a frame has no inverse solution.
#[pyfunction]
#[pyo3(signature = (codebook, prototypes, track, dyn_weight=1.0, phon_weight=1.0, candidates=64, tolerance_bark=0.3, seed=1, config=None))]
#[allow(clippy::too_many_arguments)]
fn invert(
    py: Python<'_>,
    codebook: &Codebook,
    prototypes: &PartitionModel,
    track: Vec<(f64, f64, f64, f64)>,
    dyn_weight: f64,
    phon_weight: f64,
    candidates: usize,
    tolerance_bark: f64,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Vec<(f64, Vec<f64>, f64, f64)>> {
    let mut cfg = load_config(config)?;
    cfg.model = codebook.inner.synthesizer().model.clone();
    let spec = cfg.spec().map_err(err)?;
    let frames = track
        .into_iter()
        .map(|(t_ms, f1, f2, f3)| Ok(Frame { t_ms, formants: triple((f1, f2, f3))? }))
        .collect::<PyResult<Vec<_>>>()?;
    let track = FormantTrack::new(frames).map_err(err)?;
    let opts = InversionOptions { dyn_weight, phon_weight, candidates, tolerance_bark, seed, ..cfg.inversion };
    let cb = &codebook.inner;
    let pm = &prototypes.inner;
    let traj = py.detach(|| inversion::invert_track(&track, cb, &spec, pm, &opts)).map_err(err)?;
    Ok(traj
        .frames
        .iter()
        .map(|f| (f.t_ms, f.vector.as_array().to_vec(), f.score, f.acoustic_error))
        .collect())
}

#[pyfunction]
fn bark(hz: f64) -> f64 {
    acoustics::bark(hz)
}

/// Formants of a uniform tube of `length_cm` split into `sections` pieces.
#[pyfunction]
#[pyo3(signature = (length_cm, sections=32, area_cm2=4.0))]
fn uniform_tube_formants(length_cm: f64, sections: usize, area_cm2: f64) -> PyResult<(f64, f64, f64)> {
    let af = model::AreaFunction::uniform(sections, length_cm, area_cm2).map_err(err)?;
    let f = acoustics::formants(&af, &Default::default()).map_err(err)?;
    Ok((f.f1, f.f2, f.f3))
}

#[pymodule]
fn pyartinv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Synthesizer>()?;
    m.add_class::<Codebook>()?;
    m.add_class::<PartitionModel>()?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(bark, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_tube_formants, m)?)?;
    Ok(())
}
