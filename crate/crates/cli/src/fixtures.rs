//! Generators for the bundled network descriptions.

use serde_json::{json, Value};

use crate::args::{FixtureArgs, FixtureKind};
use crate::CliError;

/// Two-link tandem: Poisson injections of rate 1 on both links, the second
/// losing half its packets, so `z = (1, 0.5)`.
pub fn tandem2() -> Value {
    iid_tandem(1.0, &[0.0, 0.5])
}

/// `L`-link tandem `1 -> 2 -> ... -> L+1` with reception rates stated
/// directly.
pub fn tandem(z: &[f64]) -> Value {
    let arcs: Vec<Value> = z
        .iter()
        .enumerate()
        .map(|(i, &z)| json!({"from": i + 1, "to": i + 2, "z": z}))
        .collect();
    json!({"kind": "wireline", "nodes": (1..=z.len() + 1).collect::<Vec<_>>(), "arcs": arcs})
}

/// Tandem with Poisson injections of rate `r` and i.i.d. losses `eps`.
pub fn iid_tandem(r: f64, eps: &[f64]) -> Value {
    let arcs: Vec<Value> = eps
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            json!({
                "from": i + 1,
                "to": i + 2,
                "injection": {"type": "poisson", "rate": r},
                "loss": {"type": "iid", "eps": e}
            })
        })
        .collect();
    json!({"kind": "wireline", "nodes": (1..=eps.len() + 1).collect::<Vec<_>>(), "arcs": arcs})
}

/// Relay network: node 1 broadcasts to {2, 3}, node 2 to {3}, both slotted
/// Aloha with transmit probability `q`; simultaneous transmissions collide
/// at node 3 only.
pub fn aloha_relay(q: f64) -> Value {
    json!({
        "kind": "wireless",
        "nodes": [1, 2, 3],
        "interferers": {"3": [1, 2]},
        "hyperarcs": [
            {"from": 1, "to": [2, 3], "aloha": {"q": q}},
            {"from": 2, "to": [3], "aloha": {"q": q}}
        ]
    })
}

pub fn generate(a: &FixtureArgs) -> Result<String, CliError> {
    let value = match a.kind {
        FixtureKind::Tandem2 => tandem2(),
        FixtureKind::AlohaRelay => aloha_relay(a.q),
        FixtureKind::Tandem => match (a.z.is_empty(), a.injection) {
            (false, None) if a.eps.is_empty() => tandem(&a.z),
            (true, Some(r)) if !a.eps.is_empty() => iid_tandem(r, &a.eps),
            _ => {
                return Err(CliError::Config(
                    "a tandem takes either --z, or --injection with --eps".into(),
                ))
            }
        },
    };
    let text = serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n";
    // round-trip through the parser so generated files are always valid
    crate::config::parse_network_str(&text).map_err(CliError::Config)?;
    Ok(text)
}
