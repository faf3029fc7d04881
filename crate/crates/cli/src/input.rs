//! JSON input files. Everything read here is re-validated through the library
//! constructors, so a file that deserializes but is not a state or channel is
//! rejected before any computation.

use std::path::Path;

use serde::Deserialize;

use cohdist::coherence::KrausChannel;
use cohdist::linalg::{ComplexMatrix, DensityMatrix, PureState, SystemLayout, C64};
use cohdist::{Error, Result};

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A state as a density matrix or a state vector; the layout defaults to one
/// factor "B".
#[derive(Clone, Deserialize)]
#[serde(untagged)]
pub enum StateInput {
    Density { matrix: ComplexMatrix, layout: Option<SystemLayout> },
    Pure { vector: Vec<[f64; 2]>, layout: Option<SystemLayout> },
}

impl StateInput {
    fn layout(layout: Option<SystemLayout>, dim: usize) -> SystemLayout {
        layout.unwrap_or_else(|| SystemLayout::single("B", dim))
    }

    pub fn density(self) -> Result<DensityMatrix> {
        match self {
            StateInput::Density { matrix, layout } => {
                let d = matrix.rows();
                DensityMatrix::new(matrix, Self::layout(layout, d))
            }
            pure @ StateInput::Pure { .. } => Ok(pure.pure()?.density()),
        }
    }

    pub fn pure(self) -> Result<PureState> {
        match self {
            StateInput::Pure { vector, layout } => {
                let v: Vec<C64> = vector.iter().map(|&[re, im]| C64::new(re, im)).collect();
                let d = v.len();
                PureState::new(v, Self::layout(layout, d))
            }
            StateInput::Density { .. } => Err(Error::Parse("expected a state vector (\"vector\"), got a density matrix".into())),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub rho: ComplexMatrix,
    pub sigma: ComplexMatrix,
}

impl PairInput {
    pub fn validated(self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        for (name, m) in [("rho", &self.rho), ("sigma", &self.sigma)] {
            if !m.is_square() {
                return Err(Error::Dimension(format!("{name} is not square")));
            }
            if !m.is_hermitian(1e-9) {
                return Err(Error::Domain(format!("{name} is not Hermitian")));
            }
        }
        if self.rho.rows() != self.sigma.rows() {
            return Err(Error::Dimension("rho and sigma have different dimensions".into()));
        }
        Ok((self.rho, self.sigma))
    }
}

/// Protocol file: a state, an optional preprocessing channel (identity when
/// absent), an optional hash table (searched when absent) and an optional ε.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolInput {
    pub state: StateInput,
    pub channel: Option<KrausChannel>,
    pub hash_table: Option<Vec<usize>>,
    /// Output alphabet size for `hash_table`; defaults to max entry + 1.
    pub l_size: Option<usize>,
    pub eps: Option<f64>,
}

impl ProtocolInput {
    pub fn channel_or_identity(&self, state: &DensityMatrix) -> Result<KrausChannel> {
        match &self.channel {
            Some(ch) => {
                ch.validate()?;
                Ok(ch.clone())
            }
            None => Ok(KrausChannel::identity(state.layout().clone())),
        }
    }
}

pub fn parse_state(path: &Path) -> Result<DensityMatrix> {
    read_json::<StateInput>(path)?.density()
}
