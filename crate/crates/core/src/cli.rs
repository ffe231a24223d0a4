//! Run configurations and JSON reports for the `poset-cstar` binary. The
//! same entry point backs the C interface.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::embedding::{
    check_psi_compat, check_tau_l, check_theta_welldef, circle_tested_anchors, isometry_check, l_field,
    lattice_generators, lemma_lim_check, norm_preservation_probe, random_formal_sum, random_monomial_field,
    theta_injectivity, ChainPartition,
};
use crate::error::{Error, Result};
use crate::poset::{brute_force_directed_family, maximal_directed_subsets, Poset, PosetFile, SearchLimits};
use crate::semigroup::PrimeSequence;
use crate::toeplitz::{evaluate, operator_norm, symbol_sup_norm, OperatorPoly};
use crate::topology::circle::CircleExample;
use crate::topology::{base_sets, check_base_monotone, generate_topology, neighborhood_chain};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Symbol norms of `x` and of its dilated cell components must agree to
/// this absolute tolerance.
pub const SYMBOL_TOLERANCE: f64 = 1e-9;
/// Truncated-matrix norms must agree with symbol norms to this tolerance.
pub const MATRIX_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Circle,
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Example::Circle),
            other => Err(Error::Parse(format!("unknown example `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Decompose(DecomposeConfig),
    Topology(TopologyConfig),
    Norms(NormsConfig),
    VerifyEmbedding(EmbeddingConfig),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub poset: PosetFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poset: Option<PosetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<Example>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u64>,
    #[serde(default = "default_chain_depth")]
    pub depth: usize,
}

fn default_chain_depth() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub poly: String,
    #[serde(rename = "N")]
    pub dim: usize,
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub example: Example,
    pub resolution: u64,
    pub depth: usize,
    pub primes: PrimeSequence,
    /// Dimension of the truncated matrices.
    pub trunc: usize,
    pub grid: usize,
    /// Grid index of the chain's point.
    pub point: usize,
    pub seed: u64,
    /// Number of random formal sums in the norm probe.
    pub sums: usize,
    /// Largest degree of a random formal sum at its stage.
    pub degree: u64,
    /// Monomials `T^m`, `m <= max_exponent`, are used for the cocone and
    /// well-definedness checks.
    pub max_exponent: u64,
    pub tested_anchors: usize,
    pub presentation_samples: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            example: Example::Circle,
            resolution: 64,
            depth: 5,
            primes: PrimeSequence::explicit(&[2, 3, 5, 7, 11]).expect("primes"),
            trunc: 512,
            grid: 16384,
            point: 0,
            seed: 0,
            sums: 100,
            degree: 8,
            max_exponent: 20,
            tested_anchors: 24,
            presentation_samples: 20,
        }
    }
}

/// A finished run: the report and whether every check in it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub report: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Exit code for an error that stopped a run: 1 when a check ran and
/// failed, 2 for bad input.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) | Error::CofinalityFailure(..) | Error::IncompatibleCocone { .. } => 1,
        _ => 2,
    }
}

/// Report for a run that stopped with an error.
pub fn error_report(command: &str, e: &Error) -> Value {
    json!({
        "schema": SCHEMA,
        "version": VERSION,
        "command": command,
        "pass": false,
        "error": e.to_string(),
    })
}

pub fn command_name(config: &RunConfig) -> &'static str {
    match config {
        RunConfig::Decompose(_) => "decompose",
        RunConfig::Topology(_) => "topology",
        RunConfig::Norms(_) => "norms",
        RunConfig::VerifyEmbedding(_) => "verify-embedding",
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let (pass, body) = match config {
        RunConfig::Decompose(c) => decompose(c)?,
        RunConfig::Topology(c) => topology(c)?,
        RunConfig::Norms(c) => norms(c)?,
        RunConfig::VerifyEmbedding(c) => verify_embedding(c)?,
    };
    let mut report = json!({
        "schema": SCHEMA,
        "version": VERSION,
        "command": command_name(config),
        "config": config,
        "pass": pass,
    });
    let map = report.as_object_mut().expect("object");
    if let Value::Object(body) = body {
        map.extend(body);
    }
    Ok(Outcome { pass, report })
}

/// Parses a JSON run configuration and runs it.
pub fn run_json(text: &str) -> Result<Outcome> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    run(&config)
}

fn decompose(c: &DecomposeConfig) -> Result<(bool, Value)> {
    let poset = Poset::from_file(&c.poset)?;
    let family = maximal_directed_subsets(&poset)?;
    let validation = family.validate(&poset);
    let limits = SearchLimits::from_env();
    let oracle = match brute_force_directed_family(&poset, limits) {
        Ok(brute) => json!({ "pass": brute == family }),
        Err(Error::SizeLimit { size, bound }) => json!({ "skipped": format!("size {size} exceeds bound {bound}") }),
        Err(e) => return Err(e),
    };
    let pass = validation.is_ok() && oracle.get("pass").is_none_or(|p| p == &json!(true));
    Ok((
        pass,
        json!({
            "members": family.member_names(&poset),
            "valid": match &validation {
                Ok(()) => json!({ "pass": true }),
                Err(w) => json!({ "pass": false, "witness": w }),
            },
            "oracle": oracle,
        }),
    ))
}

fn topology(c: &TopologyConfig) -> Result<(bool, Value)> {
    match (&c.poset, c.example) {
        (Some(file), None) => poset_topology(file, c.depth),
        (None, Some(Example::Circle)) => {
            let q = c
                .resolution
                .ok_or_else(|| Error::Parse("--resolution is required for the circle example".into()))?;
            circle_topology(q, c.depth)
        }
        _ => Err(Error::Parse("give exactly one of a poset file or --example".into())),
    }
}

fn poset_topology(file: &PosetFile, depth: usize) -> Result<(bool, Value)> {
    let poset = Poset::from_file(file)?;
    let family = maximal_directed_subsets(&poset)?;
    let topology = generate_topology(&poset, &family, SearchLimits::from_env())?;
    let monotone = check_base_monotone(&poset, &family);
    let bases: Vec<Value> = base_sets(&poset, &family)
        .into_iter()
        .map(|b| json!({ "anchor": poset.name(b.anchor), "indices": b.indices }))
        .collect();
    let isolated = topology.isolated_points();
    let mut chains = Vec::new();
    for point in 0..family.len() {
        if isolated.contains(&point) {
            continue;
        }
        chains.push(match neighborhood_chain(&poset, &family, &topology, point, depth) {
            Ok(ch) => json!({
                "point": point,
                "anchors": ch.anchors.iter().map(|&a| poset.name(a)).collect::<Vec<_>>(),
                "domains": ch.domains,
            }),
            Err(e @ Error::ChainUnavailable { .. }) => json!({ "point": point, "unavailable": e.to_string() }),
            Err(e) => return Err(e),
        });
    }
    let monotone_json = json!({
        "pass": monotone.pass,
        "checked": monotone.checked,
        "witness": monotone.witness.map(|(a, b)| [poset.name(a), poset.name(b)]),
    });
    Ok((
        monotone.pass,
        json!({
            "index_count": family.len(),
            "members": family.member_names(&poset),
            "base_sets": bases,
            "is_T1": topology.is_t1(),
            "isolated_points": isolated,
            "open_sets": topology.opens().len(),
            "base_monotone": monotone_json,
            "chains": chains,
        }),
    ))
}

fn circle_topology(q: u64, depth: usize) -> Result<(bool, Value)> {
    let example = CircleExample::new(q)?;
    let mut routes_agree = true;
    let bases: Vec<Value> = example
        .arcs()
        .iter()
        .map(|a| {
            let indices = example.base_set(a);
            routes_agree &= indices == example.base_set_by_membership(a);
            json!({ "anchor": a, "indices": indices })
        })
        .collect();
    let isolated = example.isolated_points();
    let is_t1 = example.is_t1();
    let chains = (0..example.index_count())
        .map(|k| example.neighborhood_chain(k, depth))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        routes_agree && is_t1 && isolated.is_empty(),
        json!({
            "index_count": example.index_count(),
            "base_sets": bases,
            "base_set_routes_agree": routes_agree,
            "is_T1": is_t1,
            "isolated_points": isolated,
            "chains": chains,
        }),
    ))
}

fn norms(c: &NormsConfig) -> Result<(bool, Value)> {
    let poly: OperatorPoly = c.poly.parse()?;
    let matrix_norm = operator_norm(&evaluate(&poly, c.dim)?, c.tol)?;
    let symbol_norm = symbol_sup_norm(&poly, c.grid)?;
    Ok((
        true,
        json!({
            "poly": poly,
            "N": c.dim,
            "matrix_norm": matrix_norm,
            "symbol_norm": symbol_norm,
            "diff": (matrix_norm - symbol_norm).abs(),
        }),
    ))
}

/// Runs every embedding check on the configured circle chain.
pub fn verify_embedding(c: &EmbeddingConfig) -> Result<(bool, Value)> {
    let Example::Circle = c.example;
    if c.depth < 2 {
        return Err(Error::ChainTooShort {
            stage: 2,
            depth: c.depth,
        });
    }
    let example = CircleExample::new(c.resolution)?;
    let chain = example.neighborhood_chain(c.point, c.depth)?;
    let part = ChainPartition::from_chain(&chain)?;
    let primes = &c.primes;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

    let mut tau_stages = Vec::new();
    let mut tau_pass = true;
    for n in 1..c.depth {
        let r = check_tau_l(primes, &part, n)?;
        tau_pass &= r.pass;
        tau_stages.push(json!({ "n": n, "pass": r.pass, "checked": r.checked, "witness": r.witness }));
    }

    let monomials: Vec<OperatorPoly> = (0..=c.max_exponent).map(OperatorPoly::monomial).collect();
    let mut psi_stages = Vec::new();
    let mut psi_pass = true;
    for n in 1..c.depth {
        let r = check_psi_compat(primes, &part, n, &monomials)?;
        psi_pass &= r.pass;
        psi_stages.push(json!({ "n": n, "pass": r.pass, "checked": r.checked, "witness": r.witness }));
    }

    let mut iso_fields = Vec::new();
    let mut iso_pass = true;
    for n in 1..=c.depth {
        let r = isometry_check(&l_field(primes, &part, n)?, c.trunc)?;
        iso_pass &= r.pass;
        iso_fields.push(json!({ "n": n, "pass": r.pass, "components": r.components }));
    }

    let generators = lattice_generators(primes, c.depth, c.max_exponent)?;
    let welldef = check_theta_welldef(primes, &part, &generators)?;
    let injective = theta_injectivity(primes, &part, &generators)?;

    let sums = (0..c.sums)
        .map(|_| random_formal_sum(&mut rng, primes, c.depth - 1, c.degree))
        .collect::<Result<Vec<_>>>()?;
    let probe = norm_preservation_probe(primes, &part, &sums, c.grid, Some(c.trunc))?;
    let probe_pass = probe
        .iter()
        .all(|e| e.diff <= SYMBOL_TOLERANCE && e.matrix_diff.is_none_or(|d| d <= MATRIX_TOLERANCE));
    let worst_symbol = probe.iter().map(|e| e.diff).fold(0.0, f64::max);
    let worst_matrix = probe.iter().filter_map(|e| e.matrix_diff).fold(0.0, f64::max);

    let tested = circle_tested_anchors(&example, &chain, c.tested_anchors, &mut rng);
    let samples = (0..c.presentation_samples)
        .map(|_| random_monomial_field(&mut rng, part.domain(1)?, 64))
        .collect::<Result<Vec<_>>>()?;
    let lemma = lemma_lim_check(&part, &tested, &samples)?;

    let pass = tau_pass && psi_pass && iso_pass && welldef.pass && injective.pass && probe_pass && lemma.pass;
    Ok((
        pass,
        json!({
            "chain": {
                "point": c.point,
                "anchors": chain.anchors,
                "domain_sizes": part.domains().iter().map(|d| d.len()).collect::<Vec<_>>(),
                "cells": part.cells(),
                "residual": part.residual(),
            },
            "tauL": { "pass": tau_pass, "stages": tau_stages },
            "psi_compat": { "pass": psi_pass, "max_exponent": c.max_exponent, "stages": psi_stages },
            "isometry": { "pass": iso_pass, "dim": c.trunc, "fields": iso_fields },
            "theta_welldef": welldef,
            "theta_injective": injective,
            "norm_probe": probe,
            "norm_probe_summary": {
                "pass": probe_pass,
                "symbol_tolerance": SYMBOL_TOLERANCE,
                "matrix_tolerance": MATRIX_TOLERANCE,
                "max_symbol_diff": worst_symbol,
                "max_matrix_diff": worst_matrix,
            },
            "lemma_lim": {
                "pass": lemma.pass,
                "checked": lemma.checked,
                "witness": lemma.witness,
                "tested_anchors": tested.len(),
                "samples": samples.len(),
            },
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let text = r#"{"command":"verify-embedding","depth":3,"primes":{"rule":"increasing"},"sums":2}"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        match &config {
            RunConfig::VerifyEmbedding(c) => {
                assert_eq!(c.depth, 3);
                assert_eq!(c.resolution, 64);
            }
            other => panic!("{other:?}"),
        }
        let back: RunConfig = serde_json::from_value(serde_json::to_value(&config).unwrap()).unwrap();
        assert_eq!(back, config);
        assert!(
            serde_json::from_str::<RunConfig>(r#"{"command":"norms","poly":"T","N":4,"grid":8,"bogus":1}"#).is_err()
        );
    }

    #[test]
    fn decompose_lambda() {
        let text = r#"{"command":"decompose","poset":{"elements":["a","b","c"],"leq":[["a","c"],["b","c"]]}}"#;
        let out = run_json(text).unwrap();
        assert!(out.pass);
        assert_eq!(out.report["members"].as_array().unwrap().len(), 1);
        let v = r#"{"command":"decompose","poset":{"elements":["a","b","c"],"leq":[["a","b"],["a","c"]]}}"#;
        let out = run_json(v).unwrap();
        assert_eq!(out.report["members"].as_array().unwrap().len(), 2);
        assert_eq!(out.report["schema"], 1);
    }

    #[test]
    fn small_embedding_run_passes() {
        let config = EmbeddingConfig {
            resolution: 16,
            depth: 4,
            trunc: 512,
            grid: 4096,
            sums: 4,
            tested_anchors: 8,
            presentation_samples: 4,
            ..EmbeddingConfig::default()
        };
        let out = run(&RunConfig::VerifyEmbedding(config)).unwrap();
        assert!(out.pass, "{}", out.render());
        for key in [
            "tauL",
            "psi_compat",
            "isometry",
            "theta_welldef",
            "norm_probe",
            "lemma_lim",
        ] {
            assert!(out.report.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(error_exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(error_exit_code(&Error::NonConvergence(3)), 1);
        assert!(matches!(run_json("{"), Err(Error::Parse(_))));
    }
}
