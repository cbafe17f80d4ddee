//! Token encodings of reals, matrices, and task solutions.
//!
//! Two schemes are supported, both rounding to three significant digits
//! (half away from zero):
//!
//! - **P1000**: three tokens per value — sign (`+`/`-`), mantissa (`M0`,
//!   `M100`…`M999`), exponent (`E-102`…`E100`); the value is `s·m·10^e`.
//! - **FP15**: one token per value — `F{s}{m}E{e}` with `m` in 100…999 and
//!   `e` in -16…16, plus the dedicated zero token `F0E0`. 59,401 value tokens.
//!
//! Sequences open with a dimension token `V{n}`, then carry coefficients
//! row-major. Token surfaces are the canonical on-disk representation; the
//! surface ↔ id mapping is a fixed bijection per scheme.

use crate::linalg::{Matrix, Spectrum};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::OnceLock;
use thiserror::Error;

/// Largest matrix side with a dimension token.
pub const MAX_DIM: usize = 30;

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const P1000_EXP_MIN: i32 = -102;
const P1000_EXP_MAX: i32 = 100;
const FP15_EXP_MIN: i32 = -16;
const FP15_EXP_MAX: i32 = 16;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("value {value:e} is outside the {scheme} range")]
    EncodeRange { value: f64, scheme: Scheme },
    #[error("value {value} is not finite")]
    NonFinite { value: f64 },
    #[error("dimension {n} has no token (1..={MAX_DIM})")]
    DimensionRange { n: usize },
    #[error("decode error at token {position}: {reason}")]
    Decode { position: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, CodecError>;

fn decode_err(position: usize, reason: impl Into<String>) -> CodecError {
    CodecError::Decode {
        position,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    P1000,
    Fp15,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::P1000 => "p1000",
            Scheme::Fp15 => "fp15",
        }
    }

    /// Tokens per encoded coefficient.
    pub fn tokens_per_value(self) -> usize {
        match self {
            Scheme::P1000 => 3,
            Scheme::Fp15 => 1,
        }
    }

    pub fn vocab(self) -> &'static Vocab {
        match self {
            Scheme::P1000 => {
                static V: OnceLock<Vocab> = OnceLock::new();
                V.get_or_init(|| Vocab::build(Scheme::P1000))
            }
            Scheme::Fp15 => {
                static V: OnceLock<Vocab> = OnceLock::new();
                V.get_or_init(|| Vocab::build(Scheme::Fp15))
            }
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p1000" => Ok(Scheme::P1000),
            "fp15" => Ok(Scheme::Fp15),
            other => Err(format!("unknown scheme `{other}` (p1000|fp15)")),
        }
    }
}

/// Fixed bijection between token surfaces and ids for one scheme.
pub struct Vocab {
    scheme: Scheme,
    surfaces: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn build(scheme: Scheme) -> Vocab {
        let mut surfaces: Vec<String> =
            vec!["<pad>".into(), "<bos>".into(), "<eos>".into()];
        match scheme {
            Scheme::P1000 => {
                surfaces.push("+".into());
                surfaces.push("-".into());
                surfaces.push("M0".into());
                for m in 100..=999 {
                    surfaces.push(format!("M{m}"));
                }
                for e in P1000_EXP_MIN..=P1000_EXP_MAX {
                    surfaces.push(format!("E{e}"));
                }
            }
            Scheme::Fp15 => {
                surfaces.push("F0E0".into());
                for sign in ["+", "-"] {
                    for m in 100..=999 {
                        for e in FP15_EXP_MIN..=FP15_EXP_MAX {
                            surfaces.push(format!("F{sign}{m}E{e}"));
                        }
                    }
                }
            }
        }
        for n in 1..=MAX_DIM {
            surfaces.push(format!("V{n}"));
        }
        let index = surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Vocab {
            scheme,
            surfaces,
            index,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_of(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface_of(&self, id: u32) -> Option<&str> {
        self.surfaces.get(id as usize).map(|s| s.as_str())
    }

    fn dim_base(&self) -> u32 {
        (self.surfaces.len() - MAX_DIM) as u32
    }

    pub fn dim_token(&self, n: usize) -> Result<u32> {
        if n == 0 || n > MAX_DIM {
            return Err(CodecError::DimensionRange { n });
        }
        Ok(self.dim_base() + (n as u32 - 1))
    }

    pub fn dim_of(&self, id: u32) -> Option<usize> {
        let base = self.dim_base();
        if id >= base && id < base + MAX_DIM as u32 {
            Some((id - base) as usize + 1)
        } else {
            None
        }
    }
}

// P1000 id layout: 3 specials, 2 signs, M0 + M100..M999, E-102..E100, V1..V30.
const P1000_SIGN_BASE: u32 = 3;
const P1000_MANT_BASE: u32 = 5;
const P1000_EXP_BASE: u32 = P1000_MANT_BASE + 901;
// FP15 id layout: 3 specials, F0E0, the value grid, V1..V30.
const FP15_ZERO: u32 = 3;
const FP15_VALUE_BASE: u32 = 4;
const FP15_EXP_COUNT: u32 = (FP15_EXP_MAX - FP15_EXP_MIN + 1) as u32;

/// Sign/mantissa/exponent of a 3-significant-digit rounding of `x`, or `None`
/// for zero. Rounds half away from zero; mantissa 1000 renormalizes upward.
fn round_to_grid(x: f64) -> Result<Option<(bool, u32, i32)>> {
    if !x.is_finite() {
        return Err(CodecError::NonFinite { value: x });
    }
    if x == 0.0 {
        return Ok(None);
    }
    let a = x.abs();
    let mut e = a.log10().floor() as i32 - 2;
    // f64::round is round-half-away-from-zero.
    let mut m = (a / 10f64.powi(e)).round();
    // log10 can misjudge by one near powers of ten; renormalize.
    while m >= 1000.0 {
        e += 1;
        m = (a / 10f64.powi(e)).round();
    }
    if m < 100.0 {
        e -= 1;
        m = (a / 10f64.powi(e)).round();
        if m >= 1000.0 {
            e += 1;
            m = (a / 10f64.powi(e)).round();
        }
    }
    Ok(Some((x < 0.0, m as u32, e)))
}

/// Encodes one value as P1000 (sign, mantissa, exponent) token ids.
pub fn encode_value_p1000(x: f64) -> Result<[u32; 3]> {
    let zero_exp = P1000_EXP_BASE + (-P1000_EXP_MIN) as u32;
    match round_to_grid(x)? {
        None => Ok([P1000_SIGN_BASE, P1000_MANT_BASE, zero_exp]),
        Some((neg, m, e)) => {
            if e > P1000_EXP_MAX {
                return Err(CodecError::EncodeRange {
                    value: x,
                    scheme: Scheme::P1000,
                });
            }
            if e < P1000_EXP_MIN {
                // Below the grid: round to zero, same policy as FP15.
                return encode_value_p1000(0.0);
            }
            let sign = P1000_SIGN_BASE + u32::from(neg);
            let mant = P1000_MANT_BASE + 1 + (m - 100);
            let exp = P1000_EXP_BASE + (e - P1000_EXP_MIN) as u32;
            Ok([sign, mant, exp])
        }
    }
}

fn p1000_mantissa_of(id: u32) -> Option<u32> {
    if id == P1000_MANT_BASE {
        Some(0)
    } else if id > P1000_MANT_BASE && id < P1000_EXP_BASE {
        Some(100 + (id - P1000_MANT_BASE - 1))
    } else {
        None
    }
}

fn p1000_exponent_of(id: u32) -> Option<i32> {
    let max = P1000_EXP_BASE + (P1000_EXP_MAX - P1000_EXP_MIN) as u32;
    if (P1000_EXP_BASE..=max).contains(&id) {
        Some(P1000_EXP_MIN + (id - P1000_EXP_BASE) as i32)
    } else {
        None
    }
}

/// Decodes three P1000 tokens (sign, mantissa, exponent) back to a real.
pub fn decode_value_p1000(tokens: &[u32]) -> Result<f64> {
    if tokens.len() != 3 {
        return Err(decode_err(
            tokens.len().min(3),
            format!("expected 3 tokens for a P1000 value, got {}", tokens.len()),
        ));
    }
    let sign = match tokens[0] {
        t if t == P1000_SIGN_BASE => 1.0,
        t if t == P1000_SIGN_BASE + 1 => -1.0,
        _ => return Err(decode_err(0, "expected a sign token")),
    };
    let m = p1000_mantissa_of(tokens[1])
        .ok_or_else(|| decode_err(1, "expected a mantissa token"))?;
    let e = p1000_exponent_of(tokens[2])
        .ok_or_else(|| decode_err(2, "expected an exponent token"))?;
    Ok(sign * m as f64 * 10f64.powi(e))
}

/// Encodes one value as a single FP15 token id. Values below the grid round
/// to the zero token; values above it are an error.
pub fn encode_value_fp15(x: f64) -> Result<u32> {
    match round_to_grid(x)? {
        None => Ok(FP15_ZERO),
        Some((neg, m, e)) => {
            if e > FP15_EXP_MAX {
                return Err(CodecError::EncodeRange {
                    value: x,
                    scheme: Scheme::Fp15,
                });
            }
            if e < FP15_EXP_MIN {
                return Ok(FP15_ZERO);
            }
            let sign_block = u32::from(neg) * 900 * FP15_EXP_COUNT;
            let mant_block = (m - 100) * FP15_EXP_COUNT;
            let exp_off = (e - FP15_EXP_MIN) as u32;
            Ok(FP15_VALUE_BASE + sign_block + mant_block + exp_off)
        }
    }
}

/// Decodes a single FP15 token id back to a real.
pub fn decode_value_fp15(token: u32) -> Result<f64> {
    if token == FP15_ZERO {
        return Ok(0.0);
    }
    let grid = 2 * 900 * FP15_EXP_COUNT;
    if token < FP15_VALUE_BASE || token >= FP15_VALUE_BASE + grid {
        return Err(decode_err(0, "expected a value token"));
    }
    let off = token - FP15_VALUE_BASE;
    let neg = off / (900 * FP15_EXP_COUNT) == 1;
    let rem = off % (900 * FP15_EXP_COUNT);
    let m = 100 + rem / FP15_EXP_COUNT;
    let e = FP15_EXP_MIN + (rem % FP15_EXP_COUNT) as i32;
    let sign = if neg { -1.0 } else { 1.0 };
    Ok(sign * m as f64 * 10f64.powi(e))
}

fn encode_value(x: f64, scheme: Scheme, out: &mut Vec<u32>) -> Result<()> {
    match scheme {
        Scheme::P1000 => out.extend_from_slice(&encode_value_p1000(x)?),
        Scheme::Fp15 => out.push(encode_value_fp15(x)?),
    }
    Ok(())
}

fn decode_values(tokens: &[u32], count: usize, scheme: Scheme, offset: usize) -> Result<Vec<f64>> {
    let per = scheme.tokens_per_value();
    if tokens.len() != count * per {
        return Err(decode_err(
            offset + tokens.len(),
            format!(
                "expected {} value tokens ({count} values), got {}",
                count * per,
                tokens.len()
            ),
        ));
    }
    let mut values = Vec::with_capacity(count);
    for (k, chunk) in tokens.chunks(per).enumerate() {
        let v = match scheme {
            Scheme::P1000 => decode_value_p1000(chunk),
            Scheme::Fp15 => decode_value_fp15(chunk[0]),
        };
        values.push(v.map_err(|e| match e {
            CodecError::Decode { position, reason } => CodecError::Decode {
                position: offset + k * per + position,
                reason,
            },
            other => other,
        })?);
    }
    Ok(values)
}

/// Ordered token ids in one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub scheme: Scheme,
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn new(scheme: Scheme, ids: Vec<u32>) -> Self {
        Self { scheme, ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Canonical space-separated surface form.
    pub fn to_text(&self) -> String {
        let vocab = self.scheme.vocab();
        self.ids
            .iter()
            .map(|&id| vocab.surface_of(id).expect("id within vocabulary"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses space-separated surfaces; unknown surfaces are decode errors
    /// carrying the token position.
    pub fn from_text(scheme: Scheme, text: &str) -> Result<Self> {
        let vocab = scheme.vocab();
        let mut ids = Vec::new();
        for (k, word) in text.split_whitespace().enumerate() {
            let id = vocab
                .id_of(word)
                .ok_or_else(|| decode_err(k, format!("unknown token `{word}`")))?;
            ids.push(id);
        }
        Ok(Self { scheme, ids })
    }
}

/// The three tasks a model can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Eigenvalues,
    Diagonalization,
    Inversion,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [
        TaskKind::Eigenvalues,
        TaskKind::Diagonalization,
        TaskKind::Inversion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Eigenvalues => "eigenvalues",
            TaskKind::Diagonalization => "diagonalization",
            TaskKind::Inversion => "inversion",
        }
    }

    /// Number of real values in a solution for an n×n problem.
    pub fn solution_values(self, n: usize) -> usize {
        match self {
            TaskKind::Eigenvalues => n,
            TaskKind::Diagonalization => n + n * n,
            TaskKind::Inversion => n * n,
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        TaskKind::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

/// A decoded task solution. Values are plain vectors: model predictions need
/// not satisfy the `Spectrum` ordering invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Eigenvalues(Vec<f64>),
    Diagonalization { values: Vec<f64>, basis: Matrix },
    Inversion(Matrix),
}

impl Solution {
    pub fn from_eigen(spectrum: &Spectrum) -> Self {
        Solution::Eigenvalues(spectrum.values().to_vec())
    }
}

/// Input sequence length for an n×n matrix: `1 + n²·(tokens per value)`.
pub fn input_len(n: usize, scheme: Scheme) -> usize {
    1 + n * n * scheme.tokens_per_value()
}

/// Target sequence length for a task on n×n matrices.
pub fn target_len(task: TaskKind, n: usize, scheme: Scheme) -> usize {
    task.solution_values(n) * scheme.tokens_per_value()
}

/// `V{n}` then the n² coefficients row-major.
pub fn encode_input(m: &Matrix, scheme: Scheme) -> Result<TokenSequence> {
    let vocab = scheme.vocab();
    let mut ids = Vec::with_capacity(input_len(m.n(), scheme));
    ids.push(vocab.dim_token(m.n())?);
    for &v in m.entries() {
        encode_value(v, scheme, &mut ids)?;
    }
    Ok(TokenSequence::new(scheme, ids))
}

/// Inverse of `encode_input`; the matrix side is read from the `V{n}` prefix.
pub fn decode_input(tokens: &[u32], scheme: Scheme) -> Result<Matrix> {
    let vocab = scheme.vocab();
    let first = *tokens
        .first()
        .ok_or_else(|| decode_err(0, "empty input sequence"))?;
    let n = vocab
        .dim_of(first)
        .ok_or_else(|| decode_err(0, "expected a dimension token"))?;
    let values = decode_values(&tokens[1..], n * n, scheme, 1)?;
    Matrix::from_vec(n, values).map_err(|e| decode_err(0, e.to_string()))
}

/// Flattens a solution to the coefficient order fixed by the task grammar:
/// eigenvalues, then (for diagonalization) the basis row-major.
pub fn encode_target(task: TaskKind, solution: &Solution, scheme: Scheme) -> Result<TokenSequence> {
    let mut ids = Vec::new();
    match (task, solution) {
        (TaskKind::Eigenvalues, Solution::Eigenvalues(values)) => {
            for &v in values {
                encode_value(v, scheme, &mut ids)?;
            }
        }
        (TaskKind::Diagonalization, Solution::Diagonalization { values, basis }) => {
            for &v in values {
                encode_value(v, scheme, &mut ids)?;
            }
            for &v in basis.entries() {
                encode_value(v, scheme, &mut ids)?;
            }
        }
        (TaskKind::Inversion, Solution::Inversion(p)) => {
            for &v in p.entries() {
                encode_value(v, scheme, &mut ids)?;
            }
        }
        (task, _) => {
            return Err(decode_err(0, format!("solution does not match task {task}")));
        }
    }
    Ok(TokenSequence::new(scheme, ids))
}

/// Parses a target sequence for `task` on n×n problems. Wrong token counts
/// and out-of-category tokens yield structured errors, never panics.
pub fn decode_target(task: TaskKind, tokens: &[u32], n: usize, scheme: Scheme) -> Result<Solution> {
    let values = decode_values(tokens, task.solution_values(n), scheme, 0)?;
    match task {
        TaskKind::Eigenvalues => Ok(Solution::Eigenvalues(values)),
        TaskKind::Diagonalization => {
            let basis = Matrix::from_vec(n, values[n..].to_vec())
                .map_err(|e| decode_err(n, e.to_string()))?;
            Ok(Solution::Diagonalization {
                values: values[..n].to_vec(),
                basis,
            })
        }
        TaskKind::Inversion => {
            let p = Matrix::from_vec(n, values).map_err(|e| decode_err(0, e.to_string()))?;
            Ok(Solution::Inversion(p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1000_surfaces(x: f64) -> Vec<String> {
        let vocab = Scheme::P1000.vocab();
        encode_value_p1000(x)
            .unwrap()
            .iter()
            .map(|&id| vocab.surface_of(id).unwrap().to_string())
            .collect()
    }

    #[test]
    fn p1000_examples() {
        assert_eq!(p1000_surfaces(3.14), ["+", "M314", "E-2"]);
        assert_eq!(p1000_surfaces(-10.0), ["-", "M100", "E-1"]);
        assert_eq!(p1000_surfaces(0.0), ["+", "M0", "E0"]);
        assert_eq!(p1000_surfaces(999.5), ["+", "M100", "E1"]);
        assert_eq!(p1000_surfaces(1.0), ["+", "M100", "E-2"]);
    }

    #[test]
    fn p1000_decode_examples() {
        let vocab = Scheme::P1000.vocab();
        let ids: Vec<u32> = ["+", "M314", "E-2"]
            .iter()
            .map(|s| vocab.id_of(s).unwrap())
            .collect();
        assert_eq!(decode_value_p1000(&ids).unwrap(), 3.14);
        let ids: Vec<u32> = ["-", "M999", "E0"]
            .iter()
            .map(|s| vocab.id_of(s).unwrap())
            .collect();
        assert_eq!(decode_value_p1000(&ids).unwrap(), -999.0);
    }

    #[test]
    fn p1000_malformed_category_order() {
        let vocab = Scheme::P1000.vocab();
        let m = vocab.id_of("M314").unwrap();
        let s = vocab.id_of("+").unwrap();
        let e = vocab.id_of("E-2").unwrap();
        match decode_value_p1000(&[m, s, e]) {
            Err(CodecError::Decode { position: 0, .. }) => {}
            other => panic!("expected decode error at 0, got {other:?}"),
        }
        match decode_value_p1000(&[s, e, e]) {
            Err(CodecError::Decode { position: 1, .. }) => {}
            other => panic!("expected decode error at 1, got {other:?}"),
        }
    }

    #[test]
    fn fp15_examples() {
        let vocab = Scheme::Fp15.vocab();
        let id = encode_value_fp15(3.14).unwrap();
        assert_eq!(vocab.surface_of(id).unwrap(), "F+314E-2");
        assert_eq!(encode_value_fp15(0.0).unwrap(), FP15_ZERO);
        assert_eq!(vocab.surface_of(FP15_ZERO).unwrap(), "F0E0");
        assert_eq!(decode_value_fp15(id).unwrap(), 3.14);
    }

    #[test]
    fn fp15_vocab_size_matches_grid() {
        // 3 specials + (2·900·33 + 1) value tokens + 30 dimension tokens.
        assert_eq!(Scheme::Fp15.vocab().len(), 3 + 59_401 + 30);
        assert_eq!(Scheme::P1000.vocab().len(), 3 + 2 + 901 + 203 + 30);
    }

    #[test]
    fn fp15_range_behavior() {
        assert!(matches!(
            encode_value_fp15(1e20),
            Err(CodecError::EncodeRange { .. })
        ));
        // Below the grid rounds to zero.
        assert_eq!(encode_value_fp15(1e-17).unwrap(), FP15_ZERO);
        // Smallest representable magnitude.
        let id = encode_value_fp15(1.0e-14).unwrap();
        assert_eq!(decode_value_fp15(id).unwrap(), 100.0 * 10f64.powi(-16));
    }

    #[test]
    fn p1000_range_behavior() {
        assert!(matches!(
            encode_value_p1000(1e103),
            Err(CodecError::EncodeRange { .. })
        ));
        let ids = encode_value_p1000(1e-120).unwrap();
        assert_eq!(decode_value_p1000(&ids).unwrap(), 0.0);
    }

    #[test]
    fn vocab_bijectivity() {
        for scheme in [Scheme::P1000, Scheme::Fp15] {
            let vocab = scheme.vocab();
            for id in 0..vocab.len() as u32 {
                let surface = vocab.surface_of(id).unwrap();
                assert_eq!(vocab.id_of(surface), Some(id), "{scheme} id {id}");
            }
        }
    }

    #[test]
    fn input_layout_and_lengths() {
        let m = Matrix::identity(5);
        assert_eq!(encode_input(&m, Scheme::Fp15).unwrap().len(), 26);
        assert_eq!(encode_input(&m, Scheme::P1000).unwrap().len(), 76);

        let m2 = Matrix::identity(2);
        let seq = encode_input(&m2, Scheme::P1000).unwrap();
        assert_eq!(
            seq.to_text(),
            "V2 + M100 E-2 + M0 E0 + M0 E0 + M100 E-2"
        );
        let back = decode_input(&seq.ids, Scheme::P1000).unwrap();
        assert_eq!(back, m2);
    }

    #[test]
    fn target_layout_and_lengths() {
        let s = Spectrum::new(vec![1.0, 1.0]).unwrap();
        let seq =
            encode_target(TaskKind::Eigenvalues, &Solution::from_eigen(&s), Scheme::P1000)
                .unwrap();
        assert_eq!(seq.to_text(), "+ M100 E-2 + M100 E-2");

        let diag = Solution::Diagonalization {
            values: vec![1.0; 5],
            basis: Matrix::identity(5),
        };
        let seq = encode_target(TaskKind::Diagonalization, &diag, Scheme::Fp15).unwrap();
        assert_eq!(seq.len(), 30);
        match decode_target(TaskKind::Diagonalization, &seq.ids, 5, Scheme::Fp15).unwrap() {
            Solution::Diagonalization { values, basis } => {
                assert_eq!(values, vec![1.0; 5]);
                assert_eq!(basis, Matrix::identity(5));
            }
            other => panic!("wrong variant {other:?}"),
        }
    }

    #[test]
    fn decode_target_rejects_wrong_count() {
        let s = Spectrum::new(vec![2.0, 1.0]).unwrap();
        let seq =
            encode_target(TaskKind::Eigenvalues, &Solution::from_eigen(&s), Scheme::P1000)
                .unwrap();
        let err = decode_target(TaskKind::Eigenvalues, &seq.ids[..4], 2, Scheme::P1000);
        assert!(matches!(err, Err(CodecError::Decode { .. })));
    }

    #[test]
    fn text_round_trip_and_unknown_tokens() {
        let m = Matrix::from_diag(&[1.5, -2.25]);
        let seq = encode_input(&m, Scheme::Fp15).unwrap();
        let text = seq.to_text();
        let back = TokenSequence::from_text(Scheme::Fp15, &text).unwrap();
        assert_eq!(back, seq);
        assert!(matches!(
            TokenSequence::from_text(Scheme::Fp15, "V2 BOGUS"),
            Err(CodecError::Decode { position: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn p1000_round_trip_within_half_percent(x in -10.0f64..10.0) {
            let ids = encode_value_p1000(x).unwrap();
            let back = decode_value_p1000(&ids).unwrap();
            prop_assert!((back - x).abs() <= 5e-3 * x.abs() + 1e-300);
        }

        #[test]
        fn fp15_round_trip_within_half_percent(x in -10.0f64..10.0) {
            let id = encode_value_fp15(x).unwrap();
            let back = decode_value_fp15(id).unwrap();
            prop_assert!((back - x).abs() <= 5e-3 * x.abs() + 1e-300);
        }

        #[test]
        fn grid_points_round_trip_exactly(m in 100u32..=999, e in -14i32..=14, neg in proptest::bool::ANY) {
            let v = if neg { -1.0 } else { 1.0 } * m as f64 * 10f64.powi(e);
            let ids = encode_value_p1000(v).unwrap();
            prop_assert_eq!(decode_value_p1000(&ids).unwrap(), v);
            let id = encode_value_fp15(v).unwrap();
            prop_assert_eq!(decode_value_fp15(id).unwrap(), v);
        }

        #[test]
        fn decode_never_panics_on_random_ids(ids in proptest::collection::vec(0u32..70_000, 0..40)) {
            for scheme in [Scheme::P1000, Scheme::Fp15] {
                let _ = decode_input(&ids, scheme);
                for task in TaskKind::ALL {
                    let _ = decode_target(task, &ids, 3, scheme);
                }
            }
        }
    }
}
