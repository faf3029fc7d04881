use serde::Serialize;

use cohdist::asymptotics::{curve_csv, second_order_curve, strong_converse_curve, CurvePoint, Reference};
use cohdist::coherence::{check_dio, check_diio, check_io_given_kraus, check_mio, check_qip, ClassCertificate, KrausChannel};
use cohdist::entropy::{dh, entropy_report};
use cohdist::exec::Execution;
use cohdist::linalg::DensityMatrix;
use cohdist::ns::verify_reduction_connections;
use cohdist::protocols::{
    best_hash, build_assisted_distiller, build_distiller_from_extraction, hashing_bound_check, prepare_alternative_extraction,
    prepare_assisted_extraction, prepare_extraction, run_alternative_assisted_extraction, run_assisted_extraction,
    run_extraction, DistillerReport, ExtractionOutcome, HashFunction, HashingBoundCheck, PreparedExtraction, SearchOptions,
    SearchResult,
};
use cohdist::validation::{run_selftest, Scale};
use cohdist::{Error, Result};

use crate::input::{parse_state, read_json, PairInput, ProtocolInput, StateInput};
use crate::{Command, Format, SearchArgs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    pub stdout: String,
    /// False only for a failing self-test.
    pub success: bool,
}

fn json<T: Serialize>(v: &T) -> Result<Output> {
    Ok(Output { stdout: serde_json::to_string_pretty(v)? + "\n", success: true })
}

fn curve(points: &[CurvePoint], format: Format) -> Result<Output> {
    match format {
        Format::Csv => Ok(Output { stdout: curve_csv(points, VERSION), success: true }),
        Format::Json => json(&points),
    }
}

fn check_eps(eps: f64) -> Result<f64> {
    if (0.0..1.0).contains(&eps) {
        Ok(eps)
    } else {
        Err(Error::Domain(format!("ε = {eps} outside [0, 1)")))
    }
}

#[derive(Serialize)]
struct ProtocolReport {
    d_sec: f64,
    #[serde(rename = "log_L")]
    log_l: f64,
    eps: Option<f64>,
    /// Present when the hash was searched rather than given.
    search: Option<SearchResult>,
    certificates: Vec<ClassCertificate>,
    outcome: ExtractionOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    hashing_bounds: Option<HashingBoundCheck>,
}

#[derive(Serialize)]
struct DistillReport {
    #[serde(rename = "error_P")]
    error_p: f64,
    #[serde(rename = "log_L")]
    log_l: f64,
    eps: Option<f64>,
    hash: HashFunction,
    search: Option<SearchResult>,
    distiller: DistillerReport,
}

/// The file's hash table, or the best hash for ε found by search.
fn choose_hash(
    p: &ProtocolInput,
    prep: &PreparedExtraction,
    eps: Option<f64>,
    search: &SearchArgs,
) -> Result<(HashFunction, Option<SearchResult>)> {
    match &p.hash_table {
        Some(table) => {
            let l = p.l_size.unwrap_or_else(|| table.iter().max().map_or(1, |m| m + 1));
            Ok((HashFunction::new(table.clone(), l)?, None))
        }
        None => {
            let eps = eps.ok_or_else(|| Error::Domain("without a hash_table an ε is needed for the search".into()))?;
            let opts = SearchOptions { sampled: search.sampled_hash, seed: search.seed, exec: None };
            let r = best_hash(prep, eps, &opts)?;
            Ok((r.hash.clone(), Some(r)))
        }
    }
}

fn eps_of(p: &ProtocolInput, search: &SearchArgs) -> Result<Option<f64>> {
    search.eps.or(p.eps).map(check_eps).transpose()
}

fn bob_label(state: &DensityMatrix) -> Result<String> {
    match state.layout().labels().as_slice() {
        [_, b] => Ok(b.to_string()),
        _ => Err(Error::Layout("assisted commands need a bipartite (A, B) state layout".into())),
    }
}

fn unassisted_certificates(ch: &KrausChannel) -> Result<Vec<ClassCertificate>> {
    Ok(vec![check_mio(ch)?, check_dio(ch)?, check_io_given_kraus(ch)?, check_diio(ch)?])
}

fn protocol(path: &std::path::Path, search: &SearchArgs, eta: Option<f64>) -> Result<Output> {
    let p: ProtocolInput = read_json(path)?;
    let eps = eps_of(&p, search)?;
    let has_channel = p.channel.is_some();
    let state = parse_state_input(&p.state)?;
    let ch = p.channel_or_identity(&state)?;
    let prep = prepare_extraction(&state, &ch)?;
    let (f, found) = choose_hash(&p, &prep, eps, search)?;
    let outcome = run_extraction(&state, &ch, &f)?;
    let hashing_bounds = match eta {
        None => None,
        Some(_) if has_channel => return Err(Error::Domain("hashing bounds are for identity preprocessing only".into())),
        Some(eta) => {
            let eps = eps.ok_or_else(|| Error::Domain("hashing bounds need an ε".into()))?;
            Some(hashing_bound_check(&state, eps, eta)?)
        }
    };
    json(&ProtocolReport {
        d_sec: outcome.d_sec,
        log_l: outcome.log_l,
        eps,
        search: found,
        certificates: unassisted_certificates(&ch)?,
        outcome,
        hashing_bounds,
    })
}

fn parse_state_input(s: &StateInput) -> Result<DensityMatrix> {
    s.clone().density()
}

fn distill(path: &std::path::Path, search: &SearchArgs, assisted: bool) -> Result<Output> {
    let p: ProtocolInput = read_json(path)?;
    if p.channel.is_some() {
        return Err(Error::Domain("distillers are built on identity preprocessing; drop \"channel\"".into()));
    }
    let eps = eps_of(&p, search)?;
    let state = parse_state_input(&p.state)?;
    let id = KrausChannel::identity(state.layout().clone());
    let prep = if assisted { prepare_assisted_extraction(&state, &id)? } else { prepare_extraction(&state, &id)? };
    let (f, found) = choose_hash(&p, &prep, eps, search)?;
    // Without ε the precondition is vacuous and the report shows the achieved d_sec.
    let target = eps.unwrap_or(1.0);
    let distiller = if assisted {
        build_assisted_distiller(&state, &f, target)?
    } else {
        build_distiller_from_extraction(&state, &f, target)?
    };
    json(&DistillReport {
        error_p: distiller.error_p,
        log_l: (f.l_size() as f64).log2(),
        eps,
        hash: f,
        search: found,
        distiller,
    })
}

fn assisted_extract(path: &std::path::Path, search: &SearchArgs, alternative: bool) -> Result<Output> {
    let p: ProtocolInput = read_json(path)?;
    let eps = eps_of(&p, search)?;
    let state = parse_state_input(&p.state)?;
    let bob = bob_label(&state)?;
    let ch = match &p.channel {
        Some(_) => p.channel_or_identity(&state)?,
        // Alice's share is discarded by default in the alternative setting.
        None if alternative => KrausChannel::partial_trace(state.layout().clone(), &[&bob])?,
        None => KrausChannel::identity(state.layout().clone()),
    };
    let in_bob = ch.in_layout().labels().get(1).map(|s| s.to_string()).unwrap_or(bob);
    let prep = if alternative {
        prepare_alternative_extraction(&state, &ch)?
    } else {
        prepare_assisted_extraction(&state, &ch)?
    };
    let (f, found) = choose_hash(&p, &prep, eps, search)?;
    let outcome = if alternative {
        run_alternative_assisted_extraction(&state, &ch, &f)?
    } else {
        run_assisted_extraction(&state, &ch, &f)?
    };
    let out_labels = ch.out_layout().labels();
    let out_bob = *out_labels.last().expect("layouts are nonempty");
    let certificates = vec![check_qip(&ch, &in_bob, &[out_bob])?];
    json(&ProtocolReport { d_sec: outcome.d_sec, log_l: outcome.log_l, eps, search: found, certificates, outcome, hashing_bounds: None })
}

pub fn run(cmd: Command) -> Result<Output> {
    match cmd {
        Command::Entropy { pair, eps, n } => {
            let (rho, sigma) = read_json::<PairInput>(&pair)?.validated()?;
            for &e in &eps {
                check_eps(e)?;
            }
            json(&entropy_report(&rho, &sigma, &eps, &n)?)
        }
        Command::Dh { pair, eps } => {
            let (rho, sigma) = read_json::<PairInput>(&pair)?.validated()?;
            json(&dh(&rho, &sigma, check_eps(eps)?)?)
        }
        Command::Protocol { protocol: path, search, eta } => protocol(&path, &search, eta),
        Command::Distill { protocol: path, search } => distill(&path, &search, false),
        Command::AssistedDistill { protocol: path, search } => distill(&path, &search, true),
        Command::AssistedExtract { protocol: path, search } => assisted_extract(&path, &search, false),
        Command::AltExtract { protocol: path, search } => assisted_extract(&path, &search, true),
        Command::Sweep { state, eps, n, assisted, max_dim, format } => {
            let rho = parse_state(&state)?;
            let which = match assisted {
                Some(label) => Reference::Assisted(label),
                None => Reference::Unassisted,
            };
            curve(&second_order_curve(&rho, eps, &n, &which, max_dim, Execution::default())?, format)
        }
        Command::StrongConverse { state, rate, n, format } => {
            let rho = parse_state(&state)?;
            curve(&strong_converse_curve(&rho, rate, &n)?, format)
        }
        Command::VerifyRelations { state, eps, delta } => {
            let psi = read_json::<StateInput>(&state)?.pure()?;
            json(&verify_reduction_connections(&psi, eps, delta)?)
        }
        Command::Selftest { seed, quick, inject_failure } => {
            let scale = if quick { Scale::Quick } else { Scale::Full };
            let report = run_selftest(seed, scale, inject_failure);
            for c in &report.checks {
                eprintln!("{}", c.line());
            }
            Ok(Output { stdout: report.to_json()? + "\n", success: report.passed })
        }
    }
}
