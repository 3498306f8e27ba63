//! The articulatory-to-acoustic map consumed by the codebook and inversion.

use crate::acoustics::{self, AcousticConfig, FormantTriple};
use crate::error::{Error, Result};
use crate::model::{self, ArticulatoryVector, ModelConfig};

/// Forward map from articulatory parameters to formants.
///
/// `formants` fails for vectors whose tract is closed or otherwise yields no
/// formant triple; such vectors count as invalid vertices.
pub trait ForwardMap: Sync {
    fn formants(&self, v: &ArticulatoryVector) -> Result<FormantTriple>;

    fn is_valid(&self, v: &ArticulatoryVector) -> bool;

    /// Formants of a valid vector, `None` for invalid ones.
    fn evaluate(&self, v: &ArticulatoryVector) -> Option<FormantTriple> {
        if self.is_valid(v) {
            self.formants(v).ok()
        } else {
            None
        }
    }
}

/// Surrogate model followed by lossless tube acoustics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Synthesizer {
    pub model: ModelConfig,
    pub acoustic: AcousticConfig,
}

impl Synthesizer {
    pub fn new(model: ModelConfig, mut acoustic: AcousticConfig) -> Result<Self> {
        model.validate()?;
        acoustic.validate()?;
        // A single closure threshold governs validity and analysis.
        acoustic.epsilon_closure = model.epsilon_closure;
        Ok(Synthesizer { model, acoustic })
    }
}

impl ForwardMap for Synthesizer {
    fn formants(&self, v: &ArticulatoryVector) -> Result<FormantTriple> {
        let af = model::to_area_function(v, &self.model);
        acoustics::formants(&af, &self.acoustic)
    }

    fn is_valid(&self, v: &ArticulatoryVector) -> bool {
        model::is_valid(v, &self.model)
    }

    fn evaluate(&self, v: &ArticulatoryVector) -> Option<FormantTriple> {
        let af = model::to_area_function(v, &self.model);
        // Validity is the same open-area test the analysis applies.
        if af.is_open(self.model.epsilon_closure) {
            acoustics::formants(&af, &self.acoustic).ok()
        } else {
            None
        }
    }
}

/// Affine formant map `F = offset + matrix * v`, valid everywhere.
///
/// Used as a test seam: every cube of an affine map is exactly linear.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub offset: [f64; 3],
    pub matrix: [[f64; 7]; 3],
}

impl AffineMap {
    /// A well-conditioned map whose formants stay ordered over `[-3, 3]^7`.
    pub fn example() -> Self {
        AffineMap {
            offset: [500.0, 1500.0, 2500.0],
            matrix: [
                [40.0, 10.0, -20.0, 0.0, 30.0, -5.0, 2.0],
                [-60.0, -90.0, 15.0, 20.0, 10.0, -40.0, 5.0],
                [30.0, -20.0, 10.0, 40.0, -15.0, -60.0, -10.0],
            ],
        }
    }
}

impl ForwardMap for AffineMap {
    fn formants(&self, v: &ArticulatoryVector) -> Result<FormantTriple> {
        let mut f = self.offset;
        for (fi, row) in f.iter_mut().zip(self.matrix.iter()) {
            *fi += row.iter().zip(v.as_array()).map(|(a, x)| a * x).sum::<f64>();
        }
        FormantTriple::from_array(f).map_err(|_| Error::FormantOrder(f[0], f[1], f[2]))
    }

    fn is_valid(&self, _v: &ArticulatoryVector) -> bool {
        true
    }
}
