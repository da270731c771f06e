//! Protocol sources: `builtin:<name>?k=v&k=v` or a path to a JSON protocol.

use std::collections::BTreeMap;
use std::path::Path;

use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::protocol::{random_protocol, ProtocolSpec};
use crate::qpir::{builtin, BuiltinParams, QpirProtocol};

/// Built-ins accepted after `builtin:`.
pub const SOURCE_BUILTINS: &[&str] =
    &["trivial-qpir", "trivial", "index-in-clear", "noisy-trivial", "random-qpir", "random", "random-protocol"];

/// Defaults used when a source string leaves a parameter out.
#[derive(Clone, Debug, Default)]
pub struct SourceDefaults {
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub enum Loaded {
    Qpir(QpirProtocol),
    Protocol(ProtocolSpec),
}

impl Loaded {
    pub fn spec(&self) -> &ProtocolSpec {
        match self {
            Loaded::Qpir(q) => q.spec(),
            Loaded::Protocol(p) => p,
        }
    }

    pub fn qpir(self) -> Result<QpirProtocol> {
        match self {
            Loaded::Qpir(q) => Ok(q),
            Loaded::Protocol(p) => QpirProtocol::new(p, "file"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Param(format!("bad value `{v}` for `{key}`")))
}

fn query(q: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in q.split('&').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Param(format!("expected key=value, found `{part}`")))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

pub fn load(source: &str, defaults: &SourceDefaults, cfg: &LabConfig) -> Result<Loaded> {
    let Some(rest) = source.strip_prefix("builtin:") else {
        return load_file(Path::new(source));
    };
    let (name, q) = rest.split_once('?').unwrap_or((rest, ""));
    let mut params = query(q)?;
    let mut take = |k: &str| params.remove(k);
    let n = match take("n") {
        Some(v) => Some(parse::<usize>("n", &v)?),
        None => defaults.n,
    };
    let seed = match take("seed") {
        Some(v) => parse::<u64>("seed", &v)?,
        None => defaults.seed.unwrap_or(0),
    };
    let delta = match take("delta") {
        Some(v) => Some(parse::<f64>("delta", &v)?),
        None => defaults.delta,
    };
    let rounds = take("rounds").map(|v| parse::<usize>("rounds", &v)).transpose()?;
    let leak = take("leak").map(|v| parse::<f64>("leak", &v)).transpose()?;
    let s = take("s").map(|v| parse::<usize>("s", &v)).transpose()?;
    let budget = take("budget").map(|v| parse::<usize>("budget", &v)).transpose()?;
    if let Some(k) = params.keys().next() {
        return Err(Error::Param(format!("unknown parameter `{k}` for builtin `{name}`")));
    }
    if name == "random-protocol" {
        let spec = random_protocol(seed, s.or(rounds).unwrap_or(2), budget.unwrap_or(4))?;
        return Ok(Loaded::Protocol(spec));
    }
    if !SOURCE_BUILTINS.contains(&name) {
        return Err(Error::UnknownBuiltin(name.to_string()));
    }
    let n = n.ok_or_else(|| Error::Param(format!("builtin `{name}` needs n")))?;
    let p = BuiltinParams { delta, seed, rounds: rounds.or(s).unwrap_or(2), leak };
    Ok(Loaded::Qpir(builtin(name, n, &p, cfg)?))
}

pub fn load_file(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Param(format!("{}: {e}", path.display())))?;
    let spec: ProtocolSpec =
        serde_json::from_str(&text).map_err(|e| Error::Param(format!("{}: {e}", path.display())))?;
    let name = path.display().to_string();
    // a file is a QPIR protocol when its input spaces have the QPIR shape
    let n = spec.b_space(0).total_dim();
    if n <= 40 && spec.a_space(0).total_dim() == 1usize << n {
        Ok(Loaded::Qpir(QpirProtocol::new(spec, name)?))
    } else {
        Ok(Loaded::Protocol(spec))
    }
}
