//! Bipartite free operations with explicit witnesses, and composition with a
//! DIIO post-processing on Bob's output.
//!
//! LICC/LQICC operations are kept as round structures, never flattened to bare
//! Kraus lists, so that the last local map can be replaced.

use serde::{Deserialize, Serialize};

use crate::coherence::{
    check_diio, check_qip, check_si_kraus, check_sqi_kraus, ClassCertificate, CoherenceClass, KrausChannel, ProductWitness,
    Residual, CHOI_TOL, COMPLETENESS_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, SystemLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RoundKind {
    /// Both parties restricted to incoherent local maps.
    Licc,
    /// Only Bob restricted; Alice's local maps are arbitrary.
    Lqicc,
}

/// Local instrument: one Kraus set per classical outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub branches: Vec<Vec<ComplexMatrix>>,
}

/// One party acts. The instrument is chosen by the previous round's outcome
/// (the first round has a single instrument); earlier messages are not used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub party: Party,
    pub instruments: Vec<Instrument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStructure {
    pub kind: RoundKind,
    /// (Alice, Bob) input factors.
    pub in_layout: SystemLayout,
    /// (Alice, Bob) output factors.
    pub out_layout: SystemLayout,
    pub rounds: Vec<Round>,
}

fn two_factors(layout: &SystemLayout) -> Result<(usize, usize)> {
    match layout.factors() {
        [(_, a), (_, b)] => Ok((*a, *b)),
        _ => Err(Error::Layout("round structures act on exactly two factors (Alice, Bob)".into())),
    }
}

/// Largest off-diagonal entry of Σ_k K|j⟩⟨j|K† over basis inputs j.
fn branch_mio_defect(kraus: &[ComplexMatrix]) -> f64 {
    let (dout, din) = (kraus[0].rows(), kraus[0].cols());
    let mut worst: f64 = 0.0;
    for j in 0..din {
        for r in 0..dout {
            for s in 0..dout {
                if r != s {
                    let v: crate::linalg::C64 = kraus.iter().map(|k| k[(r, j)] * k[(s, j)].conj()).sum();
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    worst
}

impl RoundStructure {
    fn class(&self) -> CoherenceClass {
        match self.kind {
            RoundKind::Licc => CoherenceClass::Licc,
            RoundKind::Lqicc => CoherenceClass::Lqicc,
        }
    }

    fn restricted(&self, party: Party) -> bool {
        party == Party::Bob || self.kind == RoundKind::Licc
    }

    /// Checks shapes and message routing; returns per-round (Alice, Bob) dimensions after each round.
    fn shapes(&self) -> Result<Vec<(usize, usize)>> {
        let (mut da, mut db) = two_factors(&self.in_layout)?;
        two_factors(&self.out_layout)?;
        if self.rounds.is_empty() {
            return Err(Error::Domain("round structure has no rounds".into()));
        }
        let mut messages = 1;
        let mut dims = Vec::with_capacity(self.rounds.len());
        for (r, round) in self.rounds.iter().enumerate() {
            if round.instruments.len() != messages {
                return Err(Error::Layout(format!("round {r} has {} instruments for {messages} incoming messages", round.instruments.len())));
            }
            let din = if round.party == Party::Alice { da } else { db };
            let mut dout = None;
            let mut outcomes = None;
            for (i, inst) in round.instruments.iter().enumerate() {
                if inst.branches.is_empty() || inst.branches.iter().any(|b| b.is_empty()) {
                    return Err(Error::Domain(format!("round {r} instrument {i} has an empty branch")));
                }
                if *outcomes.get_or_insert(inst.branches.len()) != inst.branches.len() {
                    return Err(Error::Layout(format!("round {r} instruments disagree on the number of outcomes")));
                }
                for k in inst.branches.iter().flatten() {
                    if k.cols() != din || *dout.get_or_insert(k.rows()) != k.rows() {
                        return Err(Error::Layout(format!("round {r} instrument {i}: Kraus operator {}x{} does not fit", k.rows(), k.cols())));
                    }
                }
            }
            match round.party {
                Party::Alice => da = dout.unwrap(),
                Party::Bob => db = dout.unwrap(),
            }
            messages = outcomes.unwrap();
            dims.push((da, db));
        }
        if (da, db) != two_factors(&self.out_layout)? {
            return Err(Error::Layout(format!("rounds end on ({da}, {db}), output layout says otherwise")));
        }
        Ok(dims)
    }

    /// Completeness of every instrument and incoherence of every restricted branch.
    pub fn certify(&self) -> Result<ClassCertificate> {
        self.shapes()?;
        let mut completeness: f64 = 0.0;
        let mut mio: f64 = 0.0;
        let mut offending = None;
        for (r, round) in self.rounds.iter().enumerate() {
            for (i, inst) in round.instruments.iter().enumerate() {
                let din = inst.branches[0][0].cols();
                let mut acc = ComplexMatrix::zeros(din, din);
                for branch in &inst.branches {
                    for k in branch {
                        acc += &k.adjoint().matmul(k);
                    }
                }
                completeness = completeness.max(acc.max_diff(&ComplexMatrix::identity(din)));
                if self.restricted(round.party) {
                    for (x, branch) in inst.branches.iter().enumerate() {
                        let defect = branch_mio_defect(branch);
                        mio = mio.max(defect);
                        if defect > CHOI_TOL && offending.is_none() {
                            offending = Some(format!("round {r} instrument {i} outcome {x} is not MIO"));
                        }
                    }
                }
            }
        }
        Ok(ClassCertificate::from_residuals(
            self.class(),
            false,
            vec![
                Residual::new("instrument completeness", completeness, COMPLETENESS_TOL),
                Residual::new("conditional map off-diagonal output", mio, CHOI_TOL),
            ],
            offending,
        ))
    }

    /// The overall channel, summing over all message paths.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        self.shapes()?;
        let (da0, db0) = two_factors(&self.in_layout)?;
        // Each partial path: (current Alice dim, Bob dim, incoming message, accumulated operator).
        let mut paths = vec![(da0, db0, 0usize, ComplexMatrix::identity(da0 * db0))];
        for round in &self.rounds {
            let mut next = Vec::new();
            for (da, db, msg, acc) in &paths {
                for (x, branch) in round.instruments[*msg].branches.iter().enumerate() {
                    for k in branch {
                        let (local, nda, ndb) = match round.party {
                            Party::Alice => (kron(k, &ComplexMatrix::identity(*db)), k.rows(), *db),
                            Party::Bob => (kron(&ComplexMatrix::identity(*da), k), *da, k.rows()),
                        };
                        next.push((nda, ndb, x, local.matmul(acc)));
                    }
                }
            }
            paths = next;
        }
        let kraus = paths.into_iter().map(|(_, _, _, m)| m).collect();
        KrausChannel::new(kraus, self.in_layout.clone(), self.out_layout.clone())
    }
}

/// A bipartite channel together with the evidence of its class.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum WitnessedChannel {
    /// Certified by the Choi identity; `bob_in` names Bob's input factor.
    Qip { channel: KrausChannel, bob_in: String },
    /// Channel carrying a product witness with both factors incoherent.
    Si { channel: KrausChannel },
    /// Channel carrying a product witness with Bob's factors incoherent.
    Sqi { channel: KrausChannel },
    Rounds { structure: RoundStructure },
}

impl WitnessedChannel {
    pub fn channel(&self) -> Result<KrausChannel> {
        match self {
            WitnessedChannel::Qip { channel, .. } | WitnessedChannel::Si { channel } | WitnessedChannel::Sqi { channel } => Ok(channel.clone()),
            WitnessedChannel::Rounds { structure } => structure.to_channel(),
        }
    }

    pub fn certify(&self) -> Result<ClassCertificate> {
        match self {
            WitnessedChannel::Qip { channel, bob_in } => {
                let out = channel.out_layout().labels();
                let bob_out = out.last().ok_or_else(|| Error::Layout("channel has no output factor".into()))?;
                check_qip(channel, bob_in, &[bob_out])
            }
            WitnessedChannel::Si { channel } => check_si_kraus(channel),
            WitnessedChannel::Sqi { channel } => check_sqi_kraus(channel),
            WitnessedChannel::Rounds { structure } => structure.certify(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Composite {
    pub witnessed: WitnessedChannel,
    pub channel: KrausChannel,
    pub certificate: ClassCertificate,
}

/// Output layout of Λ with Bob's (last) factor replaced by Γ's output.
fn replace_bob_output(out: &SystemLayout, gamma: &KrausChannel) -> Result<SystemLayout> {
    let (alice, _) = out.factors().first().cloned().ok_or_else(|| Error::Layout("empty layout".into()))?;
    let (gl, gd) = gamma.out_layout().factors()[0].clone();
    SystemLayout::new(vec![(alice.clone(), out.dim_of(&alice)?), (gl, gd)])
}

/// Γ ∘ Λ with Γ acting on Bob's output, certified in Λ's class.
///
/// Γ must be DIIO. Λ's own witness is checked first; a failing or missing
/// witness is a [`Error::Witness`].
pub fn compose_and_certify(lambda: &WitnessedChannel, gamma: &KrausChannel) -> Result<Composite> {
    if gamma.in_layout().factors().len() != 1 || gamma.out_layout().factors().len() != 1 {
        return Err(Error::Layout("post-processing must act on a single factor".into()));
    }
    if !check_diio(gamma)?.verdict {
        return Err(Error::Precondition("post-processing is not certified DIIO".into()));
    }
    let own = lambda.certify()?;
    if !own.verdict {
        return Err(Error::Witness(format!("witness does not certify the channel's class: {:?}", own.offending)));
    }
    let lambda_ch = lambda.channel()?;
    let out = lambda_ch.out_layout().clone();
    if out.factors().len() != 2 {
        return Err(Error::Layout("bipartite channel must have output factors (Alice, Bob)".into()));
    }
    let bob_out = out.factors()[1].0.clone();
    if out.dim_of(&bob_out)? != gamma.in_dim() {
        return Err(Error::Dimension("post-processing input does not match Bob's output".into()));
    }
    let witnessed = match lambda {
        WitnessedChannel::Qip { bob_in, .. } => {
            let channel = lambda_ch.then(&gamma.on_factor(&out, &bob_out)?)?;
            WitnessedChannel::Qip { channel, bob_in: bob_in.clone() }
        }
        WitnessedChannel::Si { channel } | WitnessedChannel::Sqi { channel } => {
            let w = channel.witness().ok_or_else(|| Error::Witness("channel carries no product-form witness".into()))?;
            let terms = w
                .terms
                .iter()
                .flat_map(|(a, b)| gamma.kraus().iter().map(move |k| (a.clone(), k.matmul(b))))
                .collect();
            let new = KrausChannel::from_witness(ProductWitness { terms }, channel.in_layout().clone(), replace_bob_output(&out, gamma)?)?;
            if matches!(lambda, WitnessedChannel::Si { .. }) {
                WitnessedChannel::Si { channel: new }
            } else {
                WitnessedChannel::Sqi { channel: new }
            }
        }
        WitnessedChannel::Rounds { structure } => {
            let mut s = structure.clone();
            let last = s.rounds.last_mut().expect("validated nonempty");
            if last.party == Party::Bob {
                for inst in &mut last.instruments {
                    for branch in &mut inst.branches {
                        *branch = branch.iter().flat_map(|k| gamma.kraus().iter().map(move |g| g.matmul(k))).collect();
                    }
                }
            } else {
                let messages = last.instruments[0].branches.len();
                let inst = Instrument { branches: vec![gamma.kraus().to_vec()] };
                s.rounds.push(Round { party: Party::Bob, instruments: vec![inst; messages] });
            }
            s.out_layout = replace_bob_output(&out, gamma)?;
            WitnessedChannel::Rounds { structure: s }
        }
    };
    let certificate = witnessed.certify()?;
    let channel = witnessed.channel()?;
    Ok(Composite { witnessed, channel, certificate })
}
