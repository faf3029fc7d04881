//! Randomness extraction: Stinespring dilation of the preprocessing channel,
//! dephasing and hashing of the classical register, and the secrecy of the
//! result against everything else (environment and purifying reference).

use serde::{Deserialize, Serialize};

use super::dsec::{dsec_cq, DsecResult};
use super::hash::{restricted_growth_hashes, sampled_universal_hashes, HashFunction, SAMPLED_HASH_COUNT};
use crate::coherence::KrausChannel;
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::linalg::{partial_trace, permute_vector, purify, ComplexMatrix, DensityMatrix, PureState, SystemLayout, C64, ZERO};

/// Label of the Stinespring environment.
pub const ENV_LABEL: &str = "E";
/// Label of the purifying reference.
pub const REF_LABEL: &str = "R";
/// Label of the hashed register.
pub const HASH_LABEL: &str = "L";
/// Slack on `d_sec ≤ ε` when deciding whether a hash succeeds. The d_sec
/// values are certified to about 1e-7 in fidelity, and ε on a grid boundary
/// must not flip on round-off.
pub const EXTRACTION_SLACK: f64 = 1e-9;
/// Largest |C| searched exhaustively.
pub const EXHAUSTIVE_MAX_LETTERS: usize = 6;

/// Isometry V with V†V = I between labeled layouts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Isometry {
    pub mat: ComplexMatrix,
    pub in_layout: SystemLayout,
    pub out_layout: SystemLayout,
}

impl Isometry {
    /// ‖V†V − I‖_max.
    pub fn defect(&self) -> f64 {
        self.mat.adjoint().matmul(&self.mat).max_diff(&ComplexMatrix::identity(self.mat.cols()))
    }
}

/// V = Σ_k K_k ⊗ |k⟩_E, with output layout `out ⊗ E` and |E| the Kraus count.
pub fn stinespring(ch: &KrausChannel) -> Result<Isometry> {
    let ne = ch.kraus().len();
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let mut mat = ComplexMatrix::zeros(dout * ne, din);
    for (k, op) in ch.kraus().iter().enumerate() {
        for c in 0..dout {
            for b in 0..din {
                mat[(c * ne + k, b)] = op[(c, b)];
            }
        }
    }
    let out_layout = ch.out_layout().join(&SystemLayout::new(vec![(ENV_LABEL, ne)])?)?;
    Ok(Isometry { mat, in_layout: ch.in_layout().clone(), out_layout })
}

/// (V ⊗ I_rest)|ψ⟩ where V acts on the leading factors of ψ matching its input.
fn apply_isometry_front(v: &Isometry, psi: &PureState) -> Result<PureState> {
    let din = v.in_layout.dim();
    let rest_dim = psi.vector().len() / din;
    let rest = SystemLayout::new(psi.layout().factors()[v.in_layout.factors().len()..].to_vec())?;
    let dout = v.mat.rows();
    let mut out = vec![ZERO; dout * rest_dim];
    let x = psi.vector();
    for i in 0..dout {
        for b in 0..din {
            let vb = v.mat[(i, b)];
            if vb == ZERO {
                continue;
            }
            for r in 0..rest_dim {
                out[i * rest_dim + r] += vb * x[b * rest_dim + r];
            }
        }
    }
    PureState::new(out, v.out_layout.join(&rest)?)
}

/// Pure state after dilation, with the classical register and the adversary's factors named.
#[derive(Clone, Debug)]
pub struct PreparedExtraction {
    /// Global pure state.
    pub phi: PureState,
    /// Register that gets dephased and hashed.
    pub register: String,
    /// Factors held by the adversary.
    pub eve: Vec<String>,
    /// ω_c restricted to the adversary, one per register letter.
    letters: Vec<ComplexMatrix>,
}

impl PreparedExtraction {
    pub fn new(phi: PureState, register: &str, eve: &[&str]) -> Result<Self> {
        let layout = phi.layout().clone();
        let dc = layout.dim_of(register)?;
        let mut order = vec![register];
        let others: Vec<&str> = layout.labels().into_iter().filter(|&l| l != register).collect();
        order.extend(others.iter().copied());
        let (v, perm_layout) = permute_vector(phi.vector(), &layout, &order)?;
        let rest = perm_layout.restrict(&others)?;
        let rd = rest.dim();
        let mut letters = Vec::with_capacity(dc);
        for c in 0..dc {
            let slice = &v[c * rd..(c + 1) * rd];
            let full = ComplexMatrix::outer(slice, slice);
            let (m, _) = partial_trace(&full, &rest, eve)?;
            letters.push(m);
        }
        Ok(PreparedExtraction {
            phi,
            register: register.into(),
            eve: eve.iter().map(|s| s.to_string()).collect(),
            letters,
        })
    }

    pub fn register_dim(&self) -> usize {
        self.letters.len()
    }

    /// Adversary blocks ω_l = Σ_{c ∈ f⁻¹(l)} ω_c.
    pub fn hashed_blocks(&self, f: &HashFunction) -> Result<Vec<ComplexMatrix>> {
        if f.domain_size() != self.letters.len() {
            return Err(Error::Dimension(format!("hash on {} letters for a register of {}", f.domain_size(), self.letters.len())));
        }
        let d = self.letters[0].rows();
        let mut blocks = vec![ComplexMatrix::zeros(d, d); f.l_size()];
        for (c, w) in self.letters.iter().enumerate() {
            blocks[f.apply(c)] += w;
        }
        Ok(blocks)
    }

    pub fn secrecy(&self, f: &HashFunction) -> Result<DsecResult> {
        dsec_cq(&self.hashed_blocks(f)?)
    }

    /// Σ_l |l⟩⟨l| ⊗ Σ_{c ∈ f⁻¹(l)} ⟨c|φ⟩⟨φ|c⟩ on (other factors with L in place of the register).
    pub fn hashed_state(&self, f: &HashFunction) -> Result<DensityMatrix> {
        let layout = self.phi.layout();
        let reg = self.register.as_str();
        let others: Vec<&str> = layout.labels().into_iter().filter(|&l| l != reg).collect();
        let mut order = vec![reg];
        order.extend(others.iter().copied());
        let (v, perm_layout) = permute_vector(self.phi.vector(), layout, &order)?;
        let rest = perm_layout.restrict(&others)?;
        let rd = rest.dim();
        let mut blocks = vec![ComplexMatrix::zeros(rd, rd); f.l_size()];
        for c in 0..self.letters.len() {
            let slice: &[C64] = &v[c * rd..(c + 1) * rd];
            blocks[f.apply(c)] += &ComplexMatrix::outer(slice, slice);
        }
        let l_layout = SystemLayout::new(vec![(HASH_LABEL, f.l_size())])?;
        let front = DensityMatrix::new(ComplexMatrix::direct_sum(&blocks), l_layout.join(&rest)?)?;
        // Put L where the register was.
        let pos = layout.position(reg)?;
        let mut target: Vec<&str> = others.clone();
        target.insert(pos, HASH_LABEL);
        front.permute(&target)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub output_state: DensityMatrix,
    pub d_sec: f64,
    pub log_l: f64,
    pub secrecy: DsecResult,
    pub hash: HashFunction,
}

fn outcome(prep: &PreparedExtraction, f: &HashFunction) -> Result<ExtractionOutcome> {
    let secrecy = prep.secrecy(f)?;
    Ok(ExtractionOutcome {
        output_state: prep.hashed_state(f)?,
        d_sec: secrecy.value,
        log_l: (f.l_size() as f64).log2(),
        secrecy,
        hash: f.clone(),
    })
}

fn single_output_label(ch: &KrausChannel) -> Result<String> {
    match ch.out_layout().labels().as_slice() {
        [c] => Ok(c.to_string()),
        _ => Err(Error::Layout("preprocessing channel must have a single output factor".into())),
    }
}

fn aligned_input(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    if rho.layout().dim() != ch.in_dim() {
        return Err(Error::Dimension(format!("state of dimension {} into a channel on {}", rho.dim(), ch.in_dim())));
    }
    if rho.layout().factors().len() == ch.in_layout().factors().len() {
        rho.clone().with_layout(ch.in_layout().clone())
    } else {
        Err(Error::Layout("state and channel input have different factor structure".into()))
    }
}

/// Dilation of Λ applied to a purification of ρ_B: pure state on (C, E, R).
pub fn prepare_extraction(rho_b: &DensityMatrix, lambda: &KrausChannel) -> Result<PreparedExtraction> {
    let c = single_output_label(lambda)?;
    let psi = purify(&aligned_input(rho_b, lambda)?, REF_LABEL)?;
    let phi = apply_isometry_front(&stinespring(lambda)?, &psi)?;
    PreparedExtraction::new(phi, &c, &[ENV_LABEL, REF_LABEL])
}

/// Λ: B → C, dephase and hash C with `f`; secrecy of L against E and R.
pub fn run_extraction(rho_b: &DensityMatrix, lambda: &KrausChannel, f: &HashFunction) -> Result<ExtractionOutcome> {
    outcome(&prepare_extraction(rho_b, lambda)?, f)
}

/// Λ: AB → A'B' with output factors (Alice, Bob); Bob's output is hashed and
/// Alice's is kept by her, out of the adversary's reach.
pub fn prepare_assisted_extraction(rho_ab: &DensityMatrix, lambda: &KrausChannel) -> Result<PreparedExtraction> {
    let labels = lambda.out_layout().labels();
    let [_, bob] = labels.as_slice() else {
        return Err(Error::Layout("assisted preprocessing needs output factors (Alice, Bob)".into()));
    };
    let bob = bob.to_string();
    let psi = purify(&aligned_input(rho_ab, lambda)?, REF_LABEL)?;
    let phi = apply_isometry_front(&stinespring(lambda)?, &psi)?;
    PreparedExtraction::new(phi, &bob, &[ENV_LABEL, REF_LABEL])
}

/// Output layout (A', L, E, R).
pub fn run_assisted_extraction(rho_ab: &DensityMatrix, lambda: &KrausChannel, f: &HashFunction) -> Result<ExtractionOutcome> {
    outcome(&prepare_assisted_extraction(rho_ab, lambda)?, f)
}

/// Λ: AB → C with a single output register; nothing stays with Alice.
pub fn prepare_alternative_extraction(rho_ab: &DensityMatrix, lambda: &KrausChannel) -> Result<PreparedExtraction> {
    let c = single_output_label(lambda)?;
    let psi = purify(&aligned_input(rho_ab, lambda)?, REF_LABEL)?;
    let phi = apply_isometry_front(&stinespring(lambda)?, &psi)?;
    PreparedExtraction::new(phi, &c, &[ENV_LABEL, REF_LABEL])
}

pub fn run_alternative_assisted_extraction(rho_ab: &DensityMatrix, lambda: &KrausChannel, f: &HashFunction) -> Result<ExtractionOutcome> {
    outcome(&prepare_alternative_extraction(rho_ab, lambda)?, f)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Allow registers above the exhaustive limit by sampling a two-universal family.
    pub sampled: bool,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Option<Execution>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub log_l: f64,
    pub l_size: usize,
    pub hash: HashFunction,
    pub d_sec: f64,
    /// True when candidates came from the sampled family, so the rate is only a lower bound on the exhaustive one.
    pub sampled: bool,
    pub candidates_checked: usize,
}

/// Largest log|L| over hashes with d_sec ≤ ε (+ [`EXTRACTION_SLACK`]). Ties
/// between hashes of the winning |L| go to the lexicographically smallest table.
pub fn best_hash(prep: &PreparedExtraction, eps: f64, opts: &SearchOptions) -> Result<SearchResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("ε = {eps} outside [0, 1)")));
    }
    let n = prep.register_dim();
    let sampled = n > EXHAUSTIVE_MAX_LETTERS;
    if sampled && !opts.sampled {
        return Err(Error::Guard(format!(
            "exhaustive hash search is limited to |C| ≤ {EXHAUSTIVE_MAX_LETTERS} (got {n}); enable sampled hashing"
        )));
    }
    let exec = opts.exec.unwrap_or_default();
    let mut checked = 0;
    for l_size in (1..=n).rev() {
        let candidates = if sampled {
            sampled_universal_hashes(n, l_size, SAMPLED_HASH_COUNT, opts.seed)?
        } else {
            restricted_growth_hashes(n, l_size)?
        };
        checked += candidates.len();
        let values = map_slice(&candidates, exec, |f| prep.secrecy(f).map(|r| r.value));
        for (f, v) in candidates.iter().zip(values) {
            let v = v?;
            if v <= eps + EXTRACTION_SLACK {
                return Ok(SearchResult {
                    log_l: (l_size as f64).log2(),
                    l_size,
                    hash: f.clone(),
                    d_sec: v,
                    sampled,
                    candidates_checked: checked,
                });
            }
        }
    }
    Err(Error::Numerical("no hash met the secrecy target, not even the constant one".into()))
}

pub fn extractable_randomness_exhaustive(
    rho_b: &DensityMatrix,
    lambda: &KrausChannel,
    eps: f64,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    best_hash(&prepare_extraction(rho_b, lambda)?, eps, opts)
}

pub fn assisted_extractable_randomness_exhaustive(
    rho_ab: &DensityMatrix,
    lambda: &KrausChannel,
    eps: f64,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    best_hash(&prepare_assisted_extraction(rho_ab, lambda)?, eps, opts)
}

pub fn alternative_extractable_randomness_exhaustive(
    rho_ab: &DensityMatrix,
    lambda: &KrausChannel,
    eps: f64,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    best_hash(&prepare_alternative_extraction(rho_ab, lambda)?, eps, opts)
}
