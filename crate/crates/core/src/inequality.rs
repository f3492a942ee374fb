//! Linear Bell inequalities, conditional distributions and local mixings of
//! the trusted party's outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::local_bound_enumerate;
use crate::shape::{check_permutation, ScenarioShape, TRUSTED_OUTPUTS};
use crate::tol;

/// Whether an inequality is known to be well behaved, i.e. its violations
/// never grow under local mixings of the trusted outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellBehaved {
    /// A standard inequality from the family the criterion is known to cover.
    Established,
    /// Nothing is known; the criterion's maximality claim is not guaranteed.
    Unverified,
}

/// `{β, β_L}` meaning `β·P ≤ β_L` for every local `P`. Coefficients are a
/// dense `(a, b, x, y)` tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInequality {
    shape: ScenarioShape,
    coefficients: Vec<f64>,
    local_bound: f64,
    name: Option<String>,
    well_behaved: WellBehaved,
}

impl BellInequality {
    pub fn new(shape: ScenarioShape, coefficients: Vec<f64>, local_bound: f64) -> Result<Self> {
        if coefficients.len() != shape.tensor_len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients supplied, shape requires {}",
                coefficients.len(),
                shape.tensor_len()
            )));
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("coefficient {i} is not finite")));
        }
        if !local_bound.is_finite() {
            return Err(Error::InvalidParameter("local bound is not finite".into()));
        }
        Ok(Self {
            shape,
            coefficients,
            local_bound,
            name: None,
            well_behaved: WellBehaved::Unverified,
        })
    }

    /// Coefficients from `f(a, b, x, y)` with flat string indices.
    pub fn from_fn(shape: ScenarioShape, local_bound: f64, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let coefficients = tensor_from_fn(&shape, f);
        Self::new(shape, coefficients, local_bound)
    }

    /// Builds the coefficient tensor and sets `β_L` by enumerating local
    /// deterministic strategies.
    pub fn with_enumerated_bound(shape: ScenarioShape, coefficients: Vec<f64>) -> Result<Self> {
        let mut ineq = Self::new(shape, coefficients, 0.0)?;
        ineq.local_bound = local_bound_enumerate(&ineq)?;
        Ok(ineq)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_well_behaved(mut self, status: WellBehaved) -> Self {
        self.well_behaved = status;
        self
    }

    pub fn shape(&self) -> &ScenarioShape {
        &self.shape
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    #[inline]
    pub fn coefficient(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.coefficients[self.shape.tensor_index(a, b, x, y)]
    }

    pub fn local_bound(&self) -> f64 {
        self.local_bound
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn well_behaved(&self) -> WellBehaved {
        self.well_behaved
    }

    /// Overall sign change, stored again in the `≤` direction with the bound
    /// re-enumerated.
    pub fn negated(&self) -> Result<Self> {
        let coefficients = self.coefficients.iter().map(|c| -c).collect();
        let mut out = Self::with_enumerated_bound(self.shape.clone(), coefficients)?;
        out.name = self.name.as_ref().map(|n| format!("-{n}"));
        out.well_behaved = self.well_behaved;
        Ok(out)
    }

    /// Relabels trusted inputs: new input `x` is old input `perm[x]`.
    pub fn permute_trusted_inputs(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.shape.trusted_inputs())?;
        let coefficients = tensor_from_fn(&self.shape, |a, b, x, y| self.coefficient(a, b, perm[x], y));
        Ok(Self {
            coefficients,
            ..self.clone()
        })
    }

    /// Reorders untrusted parties: new party `i` is old party `perm[i]`.
    /// The local bound is carried over unchanged.
    pub fn permute_untrusted(&self, perm: &[usize]) -> Result<Self> {
        let shape = self.shape.permuted(perm)?;
        let n = perm.len();
        let remap = |new_digits: Vec<usize>| {
            let mut old = vec![0; n];
            for (i, &p) in perm.iter().enumerate() {
                old[p] = new_digits[i];
            }
            old
        };
        let coefficients = tensor_from_fn(&shape, |a, b, x, y| {
            let ob = self.shape.encode_outputs(&remap(shape.decode_outputs(b))).expect("permuted index");
            let oy = self.shape.encode_inputs(&remap(shape.decode_inputs(y))).expect("permuted index");
            self.coefficient(a, ob, x, oy)
        });
        Ok(Self {
            shape,
            coefficients,
            ..self.clone()
        })
    }

    pub fn to_json_string(&self) -> String {
        let doc = InequalityFile {
            name: self.name.clone(),
            shape: self.shape.clone(),
            coefficients: self.coefficients.iter().map(|&c| crate::qubit::canonical_zero(c)).collect(),
            local_bound: self.local_bound,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("inequality serializes");
        s.push('\n');
        s
    }

    /// Reads an inequality file. File-supplied inequalities are `Unverified`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: InequalityFile = serde_json::from_str(text)?;
        let mut ineq = Self::new(doc.shape, doc.coefficients, doc.local_bound)?;
        ineq.name = doc.name;
        Ok(ineq)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InequalityFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    shape: ScenarioShape,
    coefficients: Vec<f64>,
    local_bound: f64,
}

fn tensor_from_fn(shape: &ScenarioShape, f: impl Fn(usize, usize, usize, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; shape.tensor_len()];
    for a in 0..TRUSTED_OUTPUTS {
        for b in 0..shape.output_strings() {
            for x in 0..shape.trusted_inputs() {
                for y in 0..shape.input_strings() {
                    out[shape.tensor_index(a, b, x, y)] = f(a, b, x, y);
                }
            }
        }
    }
    out
}

fn sign(exponent: usize) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// CHSH: `β_{a,b,x,y} = (−1)^{a+b}(−1)^{xy}`, `β_L = 2`.
pub fn build_chsh() -> BellInequality {
    BellInequality::from_fn(ScenarioShape::bipartite_2222(), 2.0, |a, b, x, y| sign(a + b + x * y))
        .expect("static inequality")
        .named("chsh")
        .with_well_behaved(WellBehaved::Established)
}

/// The eight CHSH variants generated by `x → 1−x`, `y → 1−y` and an overall
/// sign change. Index bits: 1 = negate x, 2 = negate y, 4 = flip sign.
pub fn chsh_symmetries() -> Vec<BellInequality> {
    let base = build_chsh();
    (0..8)
        .map(|k| {
            let (nx, ny, flip) = (k & 1 != 0, k & 2 != 0, k & 4 != 0);
            let shape = base.shape().clone();
            let coeffs = tensor_from_fn(&shape, |a, b, x, y| {
                let x = if nx { 1 - x } else { x };
                let y = if ny { 1 - y } else { y };
                base.coefficient(a, b, x, y)
            });
            let ineq = BellInequality::new(shape, coeffs, 2.0).expect("static inequality");
            let ineq = if flip { ineq.negated().expect("enumerable") } else { ineq };
            ineq.named(format!("chsh-sym{k}")).with_well_behaved(WellBehaved::Established)
        })
        .collect()
}

/// Three-party Svetlichny inequality with `β = (−1)^{a+b1+b2}` on inputs
/// `(0,0,0)` and `(1,1,1)` and `(−1)^{a+b1+b2+1}` elsewhere. The local bound
/// is enumerated.
pub fn build_svetlichny() -> BellInequality {
    let shape = ScenarioShape::uniform(2, 2, 2).expect("static shape");
    let coeffs = tensor_from_fn(&shape, |a, b, x, y| {
        let bs = shape.decode_outputs(b);
        let ys = shape.decode_inputs(y);
        let parity = a + bs[0] + bs[1];
        if (x, ys[0], ys[1]) == (0, 0, 0) || (x, ys[0], ys[1]) == (1, 1, 1) {
            sign(parity)
        } else {
            sign(parity + 1)
        }
    });
    BellInequality::with_enumerated_bound(shape, coeffs)
        .expect("enumerable")
        .named("svetlichny")
        .with_well_behaved(WellBehaved::Established)
}

/// Chained Svetlichny-like inequality with `m` inputs per party:
/// `β = (−1)^{a+b1+b2+⌊(y2+x)/m⌋+1} δ_{y1, (y2+x) mod 2}`.
///
/// The local bound is enumerated; for `m > 6` this takes noticeably longer.
pub fn build_chained_svetlichny(m: usize) -> Result<BellInequality> {
    let shape = chained_shape(m)?;
    if m > 6 {
        log::warn!("enumerating the local bound of chained:{m} ({} strategies)", 1u64 << (2 * m));
    }
    let coeffs = chained_coefficients(&shape, m);
    Ok(BellInequality::with_enumerated_bound(shape, coeffs)?
        .named(format!("chained:{m}"))
        .with_well_behaved(WellBehaved::Established))
}

/// Same coefficients as [`build_chained_svetlichny`] with a caller-supplied bound.
pub fn build_chained_svetlichny_with_bound(m: usize, local_bound: f64) -> Result<BellInequality> {
    let shape = chained_shape(m)?;
    let coeffs = chained_coefficients(&shape, m);
    Ok(BellInequality::new(shape, coeffs, local_bound)?
        .named(format!("chained:{m}"))
        .with_well_behaved(WellBehaved::Established))
}

fn chained_shape(m: usize) -> Result<ScenarioShape> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("chained inequality needs m >= 2, got {m}")));
    }
    ScenarioShape::uniform(2, m, 2)
}

fn chained_coefficients(shape: &ScenarioShape, m: usize) -> Vec<f64> {
    tensor_from_fn(shape, |a, b, x, y| {
        let bs = shape.decode_outputs(b);
        let ys = shape.decode_inputs(y);
        if ys[0] != (ys[1] + x) % 2 {
            return 0.0;
        }
        sign(a + bs[0] + bs[1] + (ys[1] + x) / m + 1)
    })
}

/// `P(a, b | x, y)` as a dense `(a, b, x, y)` tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    shape: ScenarioShape,
    table: Vec<f64>,
}

impl Distribution {
    pub fn new(shape: ScenarioShape, table: Vec<f64>) -> Result<Self> {
        if table.len() != shape.tensor_len() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries supplied, shape requires {}",
                table.len(),
                shape.tensor_len()
            )));
        }
        Ok(Self { shape, table })
    }

    pub fn from_fn(shape: ScenarioShape, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let table = tensor_from_fn(&shape, f);
        Self { shape, table }
    }

    pub fn shape(&self) -> &ScenarioShape {
        &self.shape
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.table[self.shape.tensor_index(a, b, x, y)]
    }

    /// Deterministic local point: the trusted party answers `alice[x]`, the
    /// untrusted parties answer `untrusted[i][y_i]`.
    pub fn deterministic(shape: ScenarioShape, alice: &[usize], untrusted: &[Vec<usize>]) -> Self {
        Self::from_fn(shape.clone(), |a, b, x, y| {
            let ys = shape.decode_inputs(y);
            let bs: Vec<usize> = untrusted.iter().zip(&ys).map(|(s, &yi)| s[yi]).collect();
            let hit = a == alice[x] && shape.encode_outputs(&bs).ok() == Some(b);
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Member-wise `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("mixing distributions of different shapes".into()));
        }
        let table = self.table.iter().zip(&other.table).map(|(p, q)| w * p + (1.0 - w) * q).collect();
        Ok(Self {
            shape: self.shape.clone(),
            table,
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Nonnegative entries and unit row sums for every `(x, y)`, within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        if self.table.iter().any(|&p| !(p >= -tol)) {
            return false;
        }
        let s = &self.shape;
        (0..s.trusted_inputs()).all(|x| {
            (0..s.input_strings()).all(|y| {
                let total: f64 = (0..TRUSTED_OUTPUTS)
                    .flat_map(|a| (0..s.output_strings()).map(move |b| (a, b)))
                    .map(|(a, b)| self.get(a, b, x, y))
                    .sum();
                (total - 1.0).abs() <= tol
            })
        })
    }
}

/// `β·P = Σ β_{a,b,x,y} P(a,b|x,y)`.
pub fn bell_value(ineq: &BellInequality, p: &Distribution) -> Result<f64> {
    if ineq.shape != p.shape {
        return Err(Error::ShapeMismatch("inequality and distribution shapes differ".into()));
    }
    Ok(ineq.coefficients.iter().zip(&p.table).map(|(b, p)| b * p).sum())
}

/// `q(a | a', x)` stored as `q[x][a][a']`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingKernel {
    q: Vec<[[f64; 2]; 2]>,
}

impl MixingKernel {
    pub fn new(q: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        let k = Self { q };
        k.check(tol::NRM)?;
        Ok(k)
    }

    fn check(&self, tol: f64) -> Result<()> {
        for (x, slice) in self.q.iter().enumerate() {
            for (ap, (&p0, &p1)) in slice[0].iter().zip(&slice[1]).enumerate() {
                let col = [p0, p1];
                if col.iter().any(|&v| !(v >= -tol)) || (col[0] + col[1] - 1.0).abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "kernel column (a'={ap}, x={x}) is not a probability vector: {col:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn identity(inputs: usize) -> Self {
        Self {
            q: vec![[[1.0, 0.0], [0.0, 1.0]]; inputs],
        }
    }

    pub fn uniform(inputs: usize) -> Self {
        Self {
            q: vec![[[0.5, 0.5], [0.5, 0.5]]; inputs],
        }
    }

    /// Kernel from per-input response functions `f_x(a') = a`, each encoded as
    /// `[f(0), f(1)]`.
    pub fn deterministic(responses: &[[usize; 2]]) -> Self {
        let q = responses
            .iter()
            .map(|f| {
                let mut s = [[0.0; 2]; 2];
                for ap in 0..2 {
                    s[f[ap]][ap] = 1.0;
                }
                s
            })
            .collect();
        Self { q }
    }

    /// All `4^inputs` deterministic kernels, identity first.
    pub fn all_deterministic(inputs: usize) -> impl Iterator<Item = Self> {
        const RESPONSES: [[usize; 2]; 4] = [[0, 1], [1, 0], [0, 0], [1, 1]];
        let total = 4usize.pow(inputs as u32);
        (0..total).map(move |mut code| {
            let responses: Vec<[usize; 2]> = (0..inputs)
                .map(|_| {
                    let r = RESPONSES[code % 4];
                    code /= 4;
                    r
                })
                .collect();
            Self::deterministic(&responses)
        })
    }

    /// Builds a kernel by stacking per-input slices `[[q(0|0), q(0|1)], [q(1|0), q(1|1)]]`.
    pub fn from_slices(slices: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        Self::new(slices)
    }

    pub fn inputs(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self, a: usize, a_prime: usize, x: usize) -> f64 {
        self.q[x][a][a_prime]
    }

    pub fn slice(&self, x: usize) -> [[f64; 2]; 2] {
        self.q[x]
    }

    /// `(self ∘ first)(a | a'') = Σ_{a'} self(a | a') first(a' | a'')`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.q.len() != first.q.len() {
            return Err(Error::ShapeMismatch("composing kernels with different input counts".into()));
        }
        let q = self
            .q
            .iter()
            .zip(&first.q)
            .map(|(k2, k1)| {
                let mut s = [[0.0; 2]; 2];
                for (a, row) in s.iter_mut().enumerate() {
                    for (app, v) in row.iter_mut().enumerate() {
                        *v = (0..2).map(|ap| k2[a][ap] * k1[ap][app]).sum();
                    }
                }
                s
            })
            .collect();
        Ok(Self { q })
    }
}

/// `P_lm(a,b|x,y) = Σ_{a'} q(a|a',x) P(a',b|x,y)`.
pub fn apply_local_mixing(p: &Distribution, k: &MixingKernel) -> Result<Distribution> {
    let s = &p.shape;
    if k.inputs() != s.trusted_inputs() {
        return Err(Error::ShapeMismatch(format!(
            "kernel covers {} inputs, distribution has {}",
            k.inputs(),
            s.trusted_inputs()
        )));
    }
    k.check(tol::NRM)?;
    Ok(Distribution::from_fn(s.clone(), |a, b, x, y| {
        (0..TRUSTED_OUTPUTS).map(|ap| k.q(a, ap, x) * p.get(ap, b, x, y)).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_2222() -> Distribution {
        Distribution::from_fn(ScenarioShape::bipartite_2222(), |_, _, _, _| 0.25)
    }

    #[test]
    fn chsh_coefficients() {
        let c = build_chsh();
        assert_eq!(c.coefficient(0, 0, 1, 1), -1.0);
        assert_eq!(c.coefficient(1, 0, 0, 1), -1.0);
        assert_eq!(c.coefficient(0, 0, 0, 0), 1.0);
        assert_eq!(c.local_bound(), 2.0);
        for b in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    assert_eq!(c.coefficient(0, b, x, y) + c.coefficient(1, b, x, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn chsh_values() {
        let c = build_chsh();
        assert_eq!(bell_value(&c, &uniform_2222()).unwrap(), 0.0);
        let det = Distribution::deterministic(ScenarioShape::bipartite_2222(), &[0, 0], &[vec![0, 0]]);
        assert_eq!(bell_value(&c, &det).unwrap(), 2.0);
    }

    #[test]
    fn chsh_symmetry_variants() {
        let syms = chsh_symmetries();
        assert_eq!(syms.len(), 8);
        let base = build_chsh();
        for (i, s) in syms.iter().enumerate() {
            assert_eq!(s.local_bound(), 2.0, "variant {i}");
            for (j, t) in syms[..i].iter().enumerate() {
                assert_ne!(s.coefficients(), t.coefficients(), "variants {i} and {j} coincide");
            }
        }
        assert_eq!(syms[0].coefficients(), base.coefficients());
        for b in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    assert_eq!(syms[1].coefficient(0, b, x, y), base.coefficient(0, b, 1 - x, y));
                    assert_eq!(syms[4].coefficient(0, b, x, y), -base.coefficient(0, b, x, y));
                }
            }
        }
    }

    #[test]
    fn svetlichny_coefficients_and_bound() {
        let s = build_svetlichny();
        let sh = s.shape().clone();
        let b00 = sh.encode_outputs(&[0, 0]).unwrap();
        let y00 = sh.encode_inputs(&[0, 0]).unwrap();
        let y11 = sh.encode_inputs(&[1, 1]).unwrap();
        assert_eq!(s.coefficient(0, b00, 0, y00), 1.0);
        assert_eq!(s.coefficient(0, b00, 1, y00), -1.0);
        assert_eq!(s.coefficient(1, b00, 1, y11), -1.0);
        assert_eq!(s.local_bound(), 4.0);
    }

    #[test]
    fn svetlichny_algebraic_maximum_is_eight() {
        // Maximize over all product-free assignments of P: each (x, y) row puts
        // its unit mass on the largest coefficient.
        let s = build_svetlichny();
        let sh = s.shape();
        let mut total = 0.0;
        for x in 0..2 {
            for y in 0..sh.input_strings() {
                let best = (0..2)
                    .flat_map(|a| (0..sh.output_strings()).map(move |b| (a, b)))
                    .map(|(a, b)| s.coefficient(a, b, x, y))
                    .fold(f64::NEG_INFINITY, f64::max);
                total += best;
            }
        }
        assert_eq!(total, 8.0);
    }

    #[test]
    fn chained_coefficients() {
        let c = build_chained_svetlichny(2).unwrap();
        let sh = c.shape().clone();
        let b00 = sh.encode_outputs(&[0, 0]).unwrap();
        assert_eq!(c.coefficient(0, b00, 0, sh.encode_inputs(&[0, 0]).unwrap()), -1.0);
        assert_eq!(c.coefficient(0, b00, 1, sh.encode_inputs(&[0, 1]).unwrap()), 1.0);
        for m in 2..5 {
            let c = build_chained_svetlichny(m).unwrap();
            let sh = c.shape().clone();
            for y in 0..sh.input_strings() {
                let ys = sh.decode_inputs(y);
                for x in 0..m {
                    if ys[0] != (ys[1] + x) % 2 {
                        for b in 0..4 {
                            assert_eq!(c.coefficient(0, b, x, y), 0.0);
                            assert_eq!(c.coefficient(1, b, x, y), 0.0);
                        }
                    }
                }
            }
        }
        assert!(build_chained_svetlichny(1).is_err());
    }

    #[test]
    fn kernel_examples() {
        let p = Distribution::from_fn(ScenarioShape::bipartite_2222(), |a, b, x, y| {
            [0.1, 0.2, 0.3, 0.4][(a + b + x + y) % 4] / 1.0
        });
        assert_eq!(apply_local_mixing(&p, &MixingKernel::identity(2)).unwrap(), p);
        let mixed = apply_local_mixing(&p, &MixingKernel::uniform(2)).unwrap();
        for b in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    assert_eq!(mixed.get(0, b, x, y), mixed.get(1, b, x, y));
                }
            }
        }
        let flip0 = MixingKernel::deterministic(&[[1, 0], [0, 1]]);
        let flipped = apply_local_mixing(&p, &flip0).unwrap();
        for b in 0..2 {
            for y in 0..2 {
                assert_eq!(flipped.get(0, b, 0, y), p.get(1, b, 0, y));
                assert_eq!(flipped.get(1, b, 1, y), p.get(1, b, 1, y));
            }
        }
        assert_eq!(MixingKernel::all_deterministic(2).count(), 16);
        assert_eq!(MixingKernel::all_deterministic(2).next().unwrap(), MixingKernel::identity(2));
        assert!(MixingKernel::new(vec![[[0.6, 0.0], [0.6, 1.0]]]).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = uniform_2222();
        assert!(bell_value(&build_svetlichny(), &p).is_err());
        assert!(apply_local_mixing(&p, &MixingKernel::identity(3)).is_err());
        assert!(BellInequality::new(ScenarioShape::bipartite_2222(), vec![0.0; 3], 1.0).is_err());
    }

    #[test]
    fn inequality_file_round_trip() {
        let s = build_svetlichny();
        let text = s.to_json_string();
        let back = BellInequality::from_json_str(&text).unwrap();
        assert_eq!(back.coefficients(), s.coefficients());
        assert_eq!(back.local_bound(), 4.0);
        assert_eq!(back.name(), Some("svetlichny"));
        assert_eq!(back.well_behaved(), WellBehaved::Unverified);
    }

    #[test]
    fn permuting_untrusted_parties() {
        let s = build_chained_svetlichny(3).unwrap();
        let swapped = s.permute_untrusted(&[1, 0]).unwrap();
        let sh = s.shape().clone();
        for b in 0..4 {
            for y in 0..9 {
                let (bs, ys) = (sh.decode_outputs(b), sh.decode_inputs(y));
                let b2 = sh.encode_outputs(&[bs[1], bs[0]]).unwrap();
                let y2 = sh.encode_inputs(&[ys[1], ys[0]]).unwrap();
                assert_eq!(swapped.coefficient(1, b2, 2, y2), s.coefficient(1, b, 2, y));
            }
        }
        assert_eq!(swapped.permute_untrusted(&[1, 0]).unwrap().coefficients(), s.coefficients());
    }

    fn arb_dist() -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.01..1.0f64, 16).prop_map(|raw| {
            let s = ScenarioShape::bipartite_2222();
            let mut table = vec![0.0; 16];
            for x in 0..2 {
                for y in 0..2 {
                    let idx: Vec<usize> = (0..2)
                        .flat_map(|a| (0..2).map(move |b| (a, b)))
                        .map(|(a, b)| s.tensor_index(a, b, x, y))
                        .collect();
                    let total: f64 = idx.iter().map(|&i| raw[i]).sum();
                    for i in idx {
                        table[i] = raw[i] / total;
                    }
                }
            }
            Distribution::new(s, table).unwrap()
        })
    }

    fn arb_kernel() -> impl Strategy<Value = MixingKernel> {
        prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 2).prop_map(|cols| {
            MixingKernel::new(cols.into_iter().map(|(p, q)| [[p, q], [1.0 - p, 1.0 - q]]).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mixing_preserves_normalization(p in arb_dist(), k in arb_kernel()) {
            prop_assert!(p.is_normalized(1e-12));
            prop_assert!(apply_local_mixing(&p, &k).unwrap().is_normalized(1e-12));
        }

        #[test]
        fn mixing_composes(p in arb_dist(), k1 in arb_kernel(), k2 in arb_kernel()) {
            let twice = apply_local_mixing(&apply_local_mixing(&p, &k1).unwrap(), &k2).unwrap();
            let once = apply_local_mixing(&p, &k2.compose(&k1).unwrap()).unwrap();
            prop_assert!(twice.max_abs_diff(&once) < 1e-14);
        }

        #[test]
        fn kernels_are_convex_combinations_of_deterministic_ones(p in arb_dist(), k in arb_kernel()) {
            // With per-input independent weights, the mixed value is the
            // weighted sum of deterministic-kernel values.
            let chsh = build_chsh();
            let value = bell_value(&chsh, &apply_local_mixing(&p, &k).unwrap()).unwrap();
            let weights: Vec<[f64; 4]> = (0..2).map(|x| {
                let (p0, p1) = (k.q(0, 0, x), k.q(0, 1, x));
                // weights of identity, flip, const-0, const-1 reproducing (q(0|0), q(0|1))
                let c0 = p0.min(p1);
                [p0 - c0, p1 - c0, c0, 1.0 - p0.max(p1)]
            }).collect();
            let mut combo = 0.0;
            for (code, kern) in MixingKernel::all_deterministic(2).enumerate() {
                let w = weights[0][code % 4] * weights[1][code / 4];
                combo += w * bell_value(&chsh, &apply_local_mixing(&p, &kern).unwrap()).unwrap();
            }
            prop_assert!((value - combo).abs() < 1e-9, "value {value} vs convex combination {combo}");
        }
    }
}
