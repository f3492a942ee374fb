//! Parsing of the command-line object specifications: assemblages,
//! inequalities, states and untrusted measurements.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qubitbell::generate::{Builtin, MultipartyState, PartyMeasurements, UntrustedMeasurementSet};
use qubitbell::inequality::{build_chained_svetlichny, build_chsh, build_svetlichny, chsh_symmetries, BellInequality};
use qubitbell::{Assemblage, BlochVector};

use crate::report::InputRecord;

/// A loaded object together with what identifies it in the manifest.
pub struct Loaded<T> {
    pub value: T,
    pub record: InputRecord,
}

fn read_file(path: &Path) -> Result<(String, InputRecord)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let record = InputRecord::file(path, &bytes);
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    Ok((text, record))
}

/// An existing file is read as an assemblage document; otherwise the spec
/// must name a built-in assemblage.
pub fn load_assemblage(spec: &str) -> Result<Loaded<Assemblage>> {
    let path = Path::new(spec);
    if path.is_file() {
        let (text, record) = read_file(path)?;
        let value = Assemblage::from_json_str(&text).with_context(|| format!("in {spec}"))?;
        return Ok(Loaded { value, record });
    }
    let builtin = Builtin::parse(spec).map_err(|_| {
        anyhow!(
            "{spec:?} is neither a file nor a built-in assemblage ({})",
            Builtin::NAMES.join(", ")
        )
    })?;
    Ok(Loaded {
        value: builtin.build()?,
        record: InputRecord::builtin("assemblage", spec),
    })
}

pub const INEQUALITY_NAMES: &str = "chsh, chsh-sym<0-7>, svetlichny, chained:<m>";

fn builtin_inequality(spec: &str) -> Option<Result<BellInequality>> {
    let lower = spec.to_ascii_lowercase();
    if lower == "chsh" {
        return Some(Ok(build_chsh()));
    }
    if lower == "svetlichny" {
        return Some(Ok(build_svetlichny()));
    }
    if let Some(k) = lower.strip_prefix("chsh-sym") {
        return Some(
            k.parse::<usize>()
                .ok()
                .and_then(|k| chsh_symmetries().into_iter().nth(k))
                .ok_or_else(|| anyhow!("CHSH symmetries are numbered 0 to 7")),
        );
    }
    if let Some(m) = lower.strip_prefix("chained:") {
        return Some(
            m.parse::<usize>()
                .map_err(|_| anyhow!("chained:<m> needs an integer m, got {m:?}"))
                .and_then(|m| build_chained_svetlichny(m).map_err(Into::into)),
        );
    }
    None
}

/// A built-in name or an inequality document.
pub fn load_inequality(spec: &str) -> Result<Loaded<BellInequality>> {
    if let Some(built) = builtin_inequality(spec) {
        return Ok(Loaded {
            value: built?,
            record: InputRecord::builtin("inequality", spec),
        });
    }
    let path = Path::new(spec);
    if !path.is_file() {
        bail!("{spec:?} is neither a file nor a built-in inequality ({INEQUALITY_NAMES})");
    }
    let (text, record) = read_file(path)?;
    let value = BellInequality::from_json_str(&text).with_context(|| format!("in {spec}"))?;
    Ok(Loaded { value, record })
}

/// `singlet`, `werner:<v>`, `ghz<n>` / `ghz-<n>`, or a density-matrix document.
pub fn load_state(spec: &str) -> Result<Loaded<MultipartyState>> {
    let lower = spec.to_ascii_lowercase();
    let builtin = |value| Loaded {
        value,
        record: InputRecord::builtin("state", spec),
    };
    if lower == "singlet" {
        return Ok(builtin(MultipartyState::singlet()));
    }
    if let Some(v) = lower.strip_prefix("werner:") {
        let v: f64 = v.parse().map_err(|_| anyhow!("werner:<v> needs a number, got {v:?}"))?;
        return Ok(builtin(MultipartyState::werner(v)?));
    }
    if let Some(n) = lower.strip_prefix("ghz") {
        let n = n.trim_start_matches('-');
        if let Ok(n) = n.parse::<usize>() {
            return Ok(builtin(MultipartyState::ghz(n)?));
        }
    }
    let path = Path::new(spec);
    if !path.is_file() {
        bail!("{spec:?} is neither a file nor a built-in state (singlet, werner:<v>, ghz<n>)");
    }
    let (text, record) = read_file(path)?;
    let value = MultipartyState::from_json_str(&text).with_context(|| format!("in {spec}"))?;
    Ok(Loaded { value, record })
}

fn axis(c: char) -> Option<BlochVector> {
    match c.to_ascii_uppercase() {
        'X' => Some(BlochVector::X),
        'Y' => Some(BlochVector::Y),
        'Z' => Some(BlochVector::Z),
        _ => None,
    }
}

fn direction_token(token: &str) -> Result<BlochVector> {
    let token = token.trim();
    let mut chars = token.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        return axis(c).ok_or_else(|| anyhow!("unknown axis {c:?}"));
    }
    if let Some(deg) = token.strip_prefix("phi=") {
        let phi = deg.parse::<f64>().map_err(|_| anyhow!("bad angle in {token:?}"))?.to_radians();
        return Ok(BlochVector::new(phi.cos(), phi.sin(), 0.0));
    }
    let parts: Vec<f64> = token
        .split(':')
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("bad direction {token:?}"))?;
    match parts[..] {
        [x, y, z] => Ok(BlochVector::new(x, y, z)),
        _ => bail!("a direction needs three components x:y:z, got {token:?}"),
    }
}

/// Untrusted qubit measurements: one group per party separated by `/`, or a
/// single group shared by all parties. A group is either a run of axis
/// letters (`ZX`, one per input) or comma-separated directions, each an
/// axis letter, `phi=<degrees>` in the xy-plane, or `x:y:z`.
pub fn parse_measurements(spec: &str, untrusted_dims: &[usize]) -> Result<UntrustedMeasurementSet> {
    let groups: Vec<&str> = spec.split('/').collect();
    let parties = untrusted_dims.len();
    if groups.len() != 1 && groups.len() != parties {
        bail!("{} measurement groups given for {parties} untrusted parties", groups.len());
    }
    let mut out = Vec::with_capacity(parties);
    for (i, &dim) in untrusted_dims.iter().enumerate() {
        if dim != 2 {
            bail!("party {} has dimension {dim}; direction measurements need qubits", i + 1);
        }
        let group = groups[if groups.len() == 1 { 0 } else { i }].trim();
        let directions = if group.contains([',', ':', '=']) {
            group.split(',').map(direction_token).collect::<Result<Vec<_>>>()?
        } else {
            group
                .chars()
                .map(|c| axis(c).ok_or_else(|| anyhow!("unknown axis {c:?} in {group:?}")))
                .collect::<Result<Vec<_>>>()?
        };
        if directions.is_empty() {
            bail!("party {} has no measurement directions", i + 1);
        }
        out.push(PartyMeasurements::qubit_directions(&directions).with_context(|| format!("party {}", i + 1))?);
    }
    Ok(UntrustedMeasurementSet::new(out))
}
