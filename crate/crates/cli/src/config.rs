//! The JSON network description.
//!
//! ```json
//! {
//!   "kind": "wireline",
//!   "nodes": [1, 2, 3],
//!   "arcs": [
//!     {"from": 1, "to": 2, "injection": {"type": "poisson", "rate": 1.0},
//!      "loss": {"type": "iid", "eps": 0.0}},
//!     {"from": 2, "to": 3, "z": 0.5}
//!   ]
//! }
//! ```
//!
//! Wireline arcs carry either a reception rate `z` or an `injection` process
//! with an optional `loss` process (`none`, `iid` or `markov`, the last
//! referring to an entry of the top-level `chains` list). A stated `z` takes
//! precedence over any process fields.
//!
//! Wireless files list `hyperarcs` with `from` and a receiver set `to`, plus
//! one of: `z`, a list of `{"set": [...], "rate": r}` reception rates;
//! `aloha`, `{"q": p, "table": [...]}` for slotted Aloha; or `injection`
//! together with `reception`, a list of `{"set": [...], "p": p}`. The
//! optional `interferers` object maps a node label to the labels whose
//! transmissions collide there.

use std::collections::BTreeMap;
use std::path::Path;

use packetcode::capacity::NodeSet;
use packetcode::netmodel::{
    AlohaTableEntry, Arc, ArcProcess, HyperarcProcess, Injection, Loss, MarkovChain, Network,
    WirelessHyperarc, WirelessNetwork, WirelineNetwork,
};
use serde::de::{Deserializer, Error as _};
use serde::Deserialize;

use crate::CliError;

/// A finite nonnegative number.
#[derive(Clone, Copy, Debug)]
struct Rate(f64);

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        if x >= 0.0 && x.is_finite() {
            Ok(Rate(x))
        } else {
            Err(D::Error::custom(format!("rate {x} must be finite and nonnegative")))
        }
    }
}

/// A number in `[0, 1]`.
#[derive(Clone, Copy, Debug)]
struct Prob(f64);

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        if (0.0..=1.0).contains(&x) {
            Ok(Prob(x))
        } else {
            Err(D::Error::custom(format!("probability {x} must lie in [0, 1]")))
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Wireline,
    Wireless,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    kind: Kind,
    nodes: Vec<u32>,
    #[serde(default)]
    chains: Vec<ChainSpec>,
    arcs: Option<Vec<ArcSpec>>,
    hyperarcs: Option<Vec<HyperarcSpec>>,
    interferers: Option<BTreeMap<u32, Vec<u32>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSpec {
    /// Transition rates; diagonal entries are ignored.
    rates: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum InjectionSpec {
    Poisson { rate: Rate },
    Regular,
    Trace { times: Vec<Rate> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LossSpec {
    None,
    Iid {
        eps: Prob,
    },
    Markov {
        chain: usize,
        eps: Vec<Prob>,
        rates: Option<Vec<Rate>>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcSpec {
    from: u32,
    to: u32,
    z: Option<Rate>,
    injection: Option<InjectionSpec>,
    loss: Option<LossSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRate {
    set: Vec<u32>,
    rate: Rate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetProb {
    set: Vec<u32>,
    p: Prob,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlohaRow {
    /// Indices of the other transmitting hyperarcs.
    others: Vec<usize>,
    reception: Vec<SetProb>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlohaSpec {
    q: Prob,
    #[serde(default)]
    table: Vec<AlohaRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperarcSpec {
    from: u32,
    to: Vec<u32>,
    z: Option<Vec<SetRate>>,
    aloha: Option<AlohaSpec>,
    injection: Option<InjectionSpec>,
    reception: Option<Vec<SetProb>>,
}

/// Reads and validates a network file.
pub fn parse_network(path: &Path) -> Result<Network, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_network_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses a network description. Errors name the offending field and, for
/// malformed or out-of-range values, the line and column.
pub fn parse_network_str(text: &str) -> Result<Network, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: NetworkFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            inner.to_string()
        } else {
            format!("{path}: {inner}")
        }
    })?;
    build(file)
}

struct Labels<'a>(&'a [u32]);

impl Labels<'_> {
    fn index(&self, label: u32, field: &str) -> Result<usize, String> {
        self.0
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| format!("{field}: node {label} is not listed in `nodes`"))
    }

    fn set(&self, labels: &[u32], field: &str) -> Result<NodeSet, String> {
        labels.iter().map(|&l| self.index(l, field)).collect()
    }
}

fn injection(spec: InjectionSpec) -> Injection {
    match spec {
        InjectionSpec::Poisson { rate } => Injection::Poisson { rate: rate.0 },
        InjectionSpec::Regular => Injection::Regular,
        InjectionSpec::Trace { times } => Injection::Trace {
            times: times.into_iter().map(|t| t.0).collect(),
        },
    }
}

fn loss(spec: LossSpec) -> Loss {
    match spec {
        LossSpec::None => Loss::None,
        LossSpec::Iid { eps } => Loss::Iid { eps: eps.0 },
        LossSpec::Markov { chain, eps, rates } => Loss::Markov {
            chain,
            eps: eps.into_iter().map(|p| p.0).collect(),
            rates: rates.map(|r| r.into_iter().map(|x| x.0).collect()),
        },
    }
}

fn build(file: NetworkFile) -> Result<Network, String> {
    if file.nodes.is_empty() {
        return Err("nodes: at least one node is required".into());
    }
    let labels = Labels(&file.nodes);
    match file.kind {
        Kind::Wireline => {
            if file.hyperarcs.is_some() || file.interferers.is_some() {
                return Err("a wireline network takes `arcs`, not `hyperarcs` or `interferers`".into());
            }
            let chains = file
                .chains
                .into_iter()
                .enumerate()
                .map(|(i, c)| MarkovChain::new(c.rates).map_err(|e| format!("chains[{i}]: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            let specs = file.arcs.ok_or("arcs: a wireline network needs an `arcs` list")?;
            let mut arcs = Vec::with_capacity(specs.len());
            for (a, spec) in specs.into_iter().enumerate() {
                let field = format!("arcs[{a}]");
                let process = match (spec.z, spec.injection) {
                    (Some(z), _) => ArcProcess::Rate(z.0),
                    (None, Some(inj)) => ArcProcess::Process {
                        injection: injection(inj),
                        loss: spec.loss.map_or(Loss::None, loss),
                    },
                    (None, None) => {
                        return Err(format!("{field}: needs either `z` or an `injection` process"))
                    }
                };
                arcs.push(Arc {
                    from: labels.index(spec.from, &format!("{field}.from"))?,
                    to: labels.index(spec.to, &format!("{field}.to"))?,
                    process,
                });
            }
            WirelineNetwork::new(file.nodes.clone(), chains, arcs)
                .map(Network::Wireline)
                .map_err(|e| e.to_string())
        }
        Kind::Wireless => {
            if file.arcs.is_some() || !file.chains.is_empty() {
                return Err("a wireless network takes `hyperarcs`, not `arcs` or `chains`".into());
            }
            let specs = file
                .hyperarcs
                .ok_or("hyperarcs: a wireless network needs a `hyperarcs` list")?;
            let mut hyperarcs = Vec::with_capacity(specs.len());
            for (a, spec) in specs.into_iter().enumerate() {
                let field = format!("hyperarcs[{a}]");
                let set_probs = |v: Vec<SetProb>, name: &str| -> Result<Vec<(NodeSet, f64)>, String> {
                    v.into_iter()
                        .enumerate()
                        .map(|(i, e)| Ok((labels.set(&e.set, &format!("{field}.{name}[{i}].set"))?, e.p.0)))
                        .collect()
                };
                let process = if let Some(z) = spec.z {
                    let rates = z
                        .into_iter()
                        .enumerate()
                        .map(|(i, e)| Ok((labels.set(&e.set, &format!("{field}.z[{i}].set"))?, e.rate.0)))
                        .collect::<Result<Vec<_>, String>>()?;
                    HyperarcProcess::Rates(rates)
                } else if let Some(aloha) = spec.aloha {
                    if spec.injection.is_some() || spec.reception.is_some() {
                        return Err(format!(
                            "{field}: `aloha` cannot be combined with `injection` or `reception`"
                        ));
                    }
                    let table = aloha
                        .table
                        .into_iter()
                        .enumerate()
                        .map(|(i, row)| {
                            Ok(AlohaTableEntry {
                                others: row.others,
                                reception: set_probs(row.reception, &format!("aloha.table[{i}].reception"))?,
                            })
                        })
                        .collect::<Result<Vec<_>, String>>()?;
                    HyperarcProcess::Aloha { q: aloha.q.0, table }
                } else if let Some(inj) = spec.injection {
                    let reception = spec
                        .reception
                        .ok_or_else(|| format!("{field}: an `injection` process needs a `reception` list"))?;
                    HyperarcProcess::Random {
                        injection: injection(inj),
                        reception: set_probs(reception, "reception")?,
                    }
                } else {
                    return Err(format!("{field}: needs `z`, `aloha`, or an `injection` process"));
                };
                hyperarcs.push(WirelessHyperarc {
                    from: labels.index(spec.from, &format!("{field}.from"))?,
                    to: labels.set(&spec.to, &format!("{field}.to"))?,
                    process,
                });
            }
            let interferers = match file.interferers {
                None => None,
                Some(map) => {
                    let mut sets = vec![NodeSet::empty(); file.nodes.len()];
                    for (node, list) in map {
                        let field = format!("interferers.{node}");
                        let j = labels.index(node, &field)?;
                        sets[j] = labels.set(&list, &field)?;
                    }
                    Some(sets)
                }
            };
            WirelessNetwork::new(file.nodes.clone(), hyperarcs, interferers)
                .map(Network::Wireless)
                .map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_takes_precedence_over_a_process() {
        let net = parse_network_str(
            r#"{"kind": "wireline", "nodes": [4, 9], "arcs": [
                {"from": 4, "to": 9, "z": 0.7, "injection": {"type": "poisson", "rate": 2.0}}]}"#,
        )
        .unwrap();
        let Network::Wireline(w) = net else { panic!() };
        assert_eq!(w.arcs()[0].process, ArcProcess::Rate(0.7));
        assert_eq!((w.arcs()[0].from, w.arcs()[0].to), (0, 1));
    }

    #[test]
    fn out_of_range_values_report_field_and_line() {
        let err = parse_network_str(
            "{\"kind\": \"wireline\", \"nodes\": [1, 2],\n \"arcs\": [\n {\"from\": 1, \"to\": 2, \"z\": -1}]}",
        )
        .unwrap_err();
        assert!(err.starts_with("arcs[0].z:"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        let err = parse_network_str(
            r#"{"kind": "wireline", "nodes": [1, 2], "arcs": [{"from": 1, "to": 2,
               "injection": {"type": "poisson", "rate": 1}, "loss": {"type": "iid", "eps": 1.5}}]}"#,
        )
        .unwrap_err();
        assert!(err.contains("arcs[0].loss") && err.contains("[0, 1]"), "{err}");
    }

    #[test]
    fn unknown_nodes_and_missing_processes_are_rejected() {
        let err = parse_network_str(r#"{"kind": "wireline", "nodes": [1, 2], "arcs": [{"from": 1, "to": 3, "z": 1}]}"#)
            .unwrap_err();
        assert_eq!(err, "arcs[0].to: node 3 is not listed in `nodes`");
        let err = parse_network_str(r#"{"kind": "wireline", "nodes": [1, 2], "arcs": [{"from": 1, "to": 2}]}"#)
            .unwrap_err();
        assert!(err.contains("arcs[0]: needs either"), "{err}");
        let err = parse_network_str(r#"{"kind": "wireless", "nodes": [1, 2], "hyperarcs": [{"from": 1, "to": [2]}]}"#)
            .unwrap_err();
        assert!(err.contains("hyperarcs[0]: needs"), "{err}");
        assert!(parse_network_str(r#"{"kind": "mesh", "nodes": []}"#).is_err());
        assert!(parse_network_str(r#"{"kind": "wireline", "nodes": [1], "arcs": [], "extra": 1}"#).is_err());
    }

    #[test]
    fn wireless_files_build_rates_and_interferers() {
        let net = parse_network_str(
            r#"{"kind": "wireless", "nodes": [1, 2, 3],
                "interferers": {"3": [1, 2]},
                "hyperarcs": [
                  {"from": 1, "to": [2, 3], "z": [{"set": [2], "rate": 0.3}, {"set": [2, 3], "rate": 0.1}]},
                  {"from": 2, "to": [3], "injection": {"type": "poisson", "rate": 1},
                   "reception": [{"set": [3], "p": 0.5}]}]}"#,
        )
        .unwrap();
        let Network::Wireless(w) = net else { panic!() };
        assert_eq!(w.interferers()[2], [0, 1].into_iter().collect());
        assert_eq!(w.interferers()[0], NodeSet::empty());
        let total: f64 = w.reception_rates(0).iter().map(|&(_, r)| r).sum();
        assert!((total - 0.4).abs() < 1e-12);
        assert!((w.reception_rates(1)[0].1 - 0.5).abs() < 1e-12);
    }
}
