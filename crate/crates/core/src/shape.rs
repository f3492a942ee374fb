//! Scenario shapes and the flat encoding of multi-party index strings.
//!
//! Output strings `b = (b_1, …, b_{N-1})` and input strings `y` are flattened
//! to one integer in row-major order, party 1 most significant. Distribution
//! and coefficient tensors are indexed `(a, b, x, y)`, again row-major.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of outcomes of every trusted-side measurement.
pub const TRUSTED_OUTPUTS: usize = 2;

/// Input and output counts of every party in a one-sided scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScenarioShape {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    trusted_inputs: usize,
}

impl ScenarioShape {
    /// `inputs[i]` and `outputs[i]` describe untrusted party `i + 1`.
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>, trusted_inputs: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::ShapeMismatch("at least one untrusted party is required".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} input counts but {} output counts",
                inputs.len(),
                outputs.len()
            )));
        }
        if trusted_inputs == 0 || inputs.iter().chain(&outputs).any(|&c| c == 0) {
            return Err(Error::ShapeMismatch("input and output counts must be positive".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            trusted_inputs,
        })
    }

    /// Every party (trusted included) has `inputs` inputs; untrusted parties
    /// have `outputs` outputs.
    pub fn uniform(untrusted_parties: usize, inputs: usize, outputs: usize) -> Result<Self> {
        Self::new(vec![inputs; untrusted_parties], vec![outputs; untrusted_parties], inputs)
    }

    /// Two parties, two inputs and two outputs each.
    pub fn bipartite_2222() -> Self {
        Self::uniform(1, 2, 2).expect("static shape")
    }

    pub fn untrusted_parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs_per_party(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs_per_party(&self) -> &[usize] {
        &self.outputs
    }

    pub fn trusted_inputs(&self) -> usize {
        self.trusted_inputs
    }

    pub fn is_bipartite_2222(&self) -> bool {
        *self == Self::bipartite_2222()
    }

    /// Number of joint untrusted output strings.
    pub fn output_strings(&self) -> usize {
        self.outputs.iter().product()
    }

    /// Number of joint untrusted input strings.
    pub fn input_strings(&self) -> usize {
        self.inputs.iter().product()
    }

    /// Length of a dense `(a, b, x, y)` tensor.
    pub fn tensor_len(&self) -> usize {
        TRUSTED_OUTPUTS * self.output_strings() * self.trusted_inputs * self.input_strings()
    }

    /// Flat offset of `(a, b, x, y)` in a dense tensor.
    #[inline]
    pub fn tensor_index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((a * self.output_strings() + b) * self.trusted_inputs + x) * self.input_strings() + y
    }

    /// Flattens per-party outputs into a single output-string index.
    pub fn encode_outputs(&self, digits: &[usize]) -> Result<usize> {
        encode(digits, &self.outputs, "output")
    }

    pub fn encode_inputs(&self, digits: &[usize]) -> Result<usize> {
        encode(digits, &self.inputs, "input")
    }

    pub fn decode_outputs(&self, b: usize) -> Vec<usize> {
        decode(b, &self.outputs)
    }

    pub fn decode_inputs(&self, y: usize) -> Vec<usize> {
        decode(y, &self.inputs)
    }

    /// Same shape with untrusted parties reordered: new party `i` is old party `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.untrusted_parties())?;
        Self::new(
            perm.iter().map(|&p| self.inputs[p]).collect(),
            perm.iter().map(|&p| self.outputs[p]).collect(),
            self.trusted_inputs,
        )
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!("permutation of length {} for {n} parties", perm.len())));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

fn encode(digits: &[usize], radices: &[usize], what: &str) -> Result<usize> {
    if digits.len() != radices.len() {
        return Err(Error::IndexOutOfRange(format!(
            "{what} string has {} digits, expected {}",
            digits.len(),
            radices.len()
        )));
    }
    let mut idx = 0;
    for (i, (&d, &r)) in digits.iter().zip(radices).enumerate() {
        if d >= r {
            return Err(Error::IndexOutOfRange(format!("{what} {d} of party {} exceeds count {r}", i + 1)));
        }
        idx = idx * r + d;
    }
    Ok(idx)
}

fn decode(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = idx % r;
        idx /= r;
    }
    digits
}

/// Renders an index string as concatenated digits, or dot-separated when a
/// count exceeds ten.
pub(crate) fn format_digits(digits: &[usize], radices: &[usize]) -> String {
    if radices.iter().all(|&r| r <= 10) {
        digits.iter().map(|d| d.to_string()).collect()
    } else {
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(".")
    }
}

pub(crate) fn parse_digits(text: &str, radices: &[usize]) -> Result<Vec<usize>> {
    let bad = || Error::Format(format!("cannot parse index string `{text}`"));
    let digits: Vec<usize> = if text.contains('.') {
        text.split('.').map(|t| t.parse().map_err(|_| bad())).collect::<Result<_>>()?
    } else {
        text.chars()
            .map(|ch| ch.to_digit(10).map(|d| d as usize).ok_or_else(bad))
            .collect::<Result<_>>()?
    };
    if digits.len() != radices.len() {
        return Err(bad());
    }
    Ok(digits)
}

#[derive(Serialize, Deserialize)]
struct ShapeFile {
    untrusted_parties: usize,
    inputs_per_party: Vec<usize>,
    outputs_per_party: Vec<usize>,
    trusted_inputs: usize,
    trusted_outputs: usize,
}

impl Serialize for ScenarioShape {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ShapeFile {
            untrusted_parties: self.untrusted_parties(),
            inputs_per_party: self.inputs.clone(),
            outputs_per_party: self.outputs.clone(),
            trusted_inputs: self.trusted_inputs,
            trusted_outputs: TRUSTED_OUTPUTS,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScenarioShape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = ShapeFile::deserialize(d)?;
        if f.trusted_outputs != TRUSTED_OUTPUTS {
            return Err(D::Error::custom(format!(
                "trusted_outputs must be {TRUSTED_OUTPUTS}, got {}",
                f.trusted_outputs
            )));
        }
        if f.inputs_per_party.len() != f.untrusted_parties {
            return Err(D::Error::custom(format!(
                "untrusted_parties is {} but inputs_per_party has {} entries",
                f.untrusted_parties,
                f.inputs_per_party.len()
            )));
        }
        Self::new(f.inputs_per_party, f.outputs_per_party, f.trusted_inputs).map_err(D::Error::custom)
    }
}
