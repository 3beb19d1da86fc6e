//! Categorical distributions, column-stochastic matrices and the information
//! measures the rest of the engine is built on.
//!
//! Probabilities are kept in natural space so traces show the numbers a
//! reader would expect. Any logarithm of a probability goes through
//! [`floored_ln`], which clamps at [`LOG_FLOOR`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied before taking the logarithm of a probability.
pub const LOG_FLOOR: f64 = 1e-16;

/// Tolerance on the total mass of a [`Categorical`].
pub const NORM_TOL: f64 = 1e-9;

#[inline]
pub fn floored_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// A normalized distribution over a finite set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Validates `probs` as-is: non-empty, finite, non-negative, summing to 1.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::dim("one-hot index", n, index));
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }
}

impl<'de> Deserialize<'de> for Categorical {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        Categorical::new(probs).map_err(serde::de::Error::custom)
    }
}

impl AsRef<[f64]> for Categorical {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

fn check_entries(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput { index });
        }
        if x < 0.0 {
            return Err(Error::NegativeEntry { index, value: x });
        }
    }
    Ok(())
}

/// Divides a non-negative vector by its sum.
pub fn normalize(v: &[f64]) -> Result<Categorical> {
    check_entries(v)?;
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(Categorical {
        probs: v.iter().map(|x| x / sum).collect(),
    })
}

/// `exp(v - max v)`, normalized.
pub fn softmax(v: &[f64]) -> Result<Categorical> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(Categorical {
        probs: exps.into_iter().map(|e| e / sum).collect(),
    })
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &Categorical) -> f64 {
    -p.probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `KL(p || q)` in nats. `q` is floored before the logarithm.
pub fn kl_divergence(p: &Categorical, q: &Categorical) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim("kl_divergence operands", p.len(), q.len()));
    }
    let kl = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.ln() - floored_ln(qi)))
        .sum::<f64>();
    // Rounding can leave a tiny negative residue when p == q.
    Ok(kl.max(0.0))
}

/// Likelihood precision: a positive, finite sharpness exponent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Precision(f64);

impl Precision {
    pub const ONE: Precision = Precision(1.0);

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self(gamma))
        } else {
            Err(Error::InvalidPrecision(gamma))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::ONE
    }
}

impl<'de> Deserialize<'de> for Precision {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Precision::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Column-stochastic matrix, stored as one [`Categorical`] per column.
///
/// Rows index outcomes (or next states), columns index the conditioning state.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    columns: Vec<Categorical>,
}

/// The likelihood mapping from latent states (columns) to outcomes (rows).
pub type LikelihoodMatrix = StochasticMatrix;

impl StochasticMatrix {
    pub fn from_columns(columns: Vec<Categorical>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::Empty);
        };
        let rows = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::dim("matrix column", rows, bad.len()));
        }
        Ok(Self { columns })
    }

    /// Builds from row-major data (`rows[i][j]` = P(row i | column j)).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Empty);
        };
        let n_cols = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::dim("matrix row", n_cols, bad.len()));
        }
        let columns = (0..n_cols)
            .map(|j| Categorical::new(rows.iter().map(|r| r[j]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(columns)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_columns(
            (0..n)
                .map(|j| Categorical::one_hot(n, j))
                .collect::<Result<_>>()?,
        )
    }

    /// Every column uniform.
    pub fn flat(rows: usize, cols: usize) -> Result<Self> {
        let col = Categorical::uniform(rows)?;
        Self::from_columns(vec![col; cols])
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col].probs[row]
    }

    pub fn column(&self, col: usize) -> &Categorical {
        &self.columns[col]
    }

    pub fn columns(&self) -> &[Categorical] {
        &self.columns
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|i| self.columns.iter().map(|c| c.probs[i]).collect())
            .collect()
    }

    /// Matrix-vector product `M x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols() {
            return Err(Error::dim("matrix-vector operand", self.n_cols(), x.len()));
        }
        let mut out = vec![0.0; self.n_rows()];
        for (col, &w) in self.columns.iter().zip(x) {
            for (o, &p) in out.iter_mut().zip(&col.probs) {
                *o += p * w;
            }
        }
        Ok(out)
    }

    /// `M x` for a distribution `x`, which is again a distribution.
    pub fn push_forward(&self, x: &Categorical) -> Result<Categorical> {
        let out = self.apply(x.probs())?;
        Categorical::new(out)
    }
}

/// Per-action state transition matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    per_action: Vec<StochasticMatrix>,
}

impl TransitionModel {
    pub fn new(per_action: Vec<StochasticMatrix>) -> Result<Self> {
        let Some(first) = per_action.first() else {
            return Err(Error::InvalidModel(
                "transition model needs at least one action".into(),
            ));
        };
        let n = first.n_cols();
        for m in &per_action {
            if m.n_rows() != m.n_cols() {
                return Err(Error::dim(
                    "square transition matrix",
                    m.n_cols(),
                    m.n_rows(),
                ));
            }
            if m.n_cols() != n {
                return Err(Error::dim("transition matrix states", n, m.n_cols()));
            }
        }
        Ok(Self { per_action })
    }

    /// A single "null" action that leaves states unchanged.
    pub fn identity(n_states: usize) -> Result<Self> {
        Self::new(vec![StochasticMatrix::identity(n_states)?])
    }

    pub fn n_actions(&self) -> usize {
        self.per_action.len()
    }

    pub fn n_states(&self) -> usize {
        self.per_action[0].n_cols()
    }

    pub fn action(&self, action: usize) -> Result<&StochasticMatrix> {
        self.per_action.get(action).ok_or(Error::UnknownAction {
            action,
            n_actions: self.per_action.len(),
        })
    }

    pub fn per_action(&self) -> &[StochasticMatrix] {
        &self.per_action
    }
}

/// Preferred outcome distribution. Risk is measured as KL divergence to it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector(Categorical);

impl PreferenceVector {
    pub fn new(prefs: Categorical) -> Self {
        Self(prefs)
    }

    pub fn dist(&self) -> &Categorical {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sharpens (gamma > 1) or flattens (gamma < 1) each likelihood column:
/// column `j` becomes `softmax(gamma * ln A[:, j])`.
pub fn precision_weight(a: &LikelihoodMatrix, gamma: Precision) -> Result<LikelihoodMatrix> {
    let g = gamma.value();
    let columns = a
        .columns
        .iter()
        .map(|col| {
            let logits: Vec<f64> = col.probs.iter().map(|&p| g * floored_ln(p)).collect();
            softmax(&logits)
        })
        .collect::<Result<Vec<_>>>()?;
    StochasticMatrix::from_columns(columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
    }

    #[test]
    fn normalize_examples() {
        close(normalize(&[2.0, 2.0]).unwrap().probs(), &[0.5, 0.5], 1e-15);
        close(
            normalize(&[1.0, 0.0, 0.0]).unwrap().probs(),
            &[1.0, 0.0, 0.0],
            0.0,
        );
        close(
            normalize(&[0.45, 0.10]).unwrap().probs(),
            &[0.818_181_818_181_818_2, 0.181_818_181_818_181_8],
            1e-12,
        );
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::ZeroMass)));
        assert!(matches!(
            normalize(&[1.0, -0.5]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(normalize(&[]), Err(Error::Empty)));
    }

    #[test]
    fn softmax_examples() {
        close(
            softmax(&[0.0, 0.0, 0.0]).unwrap().probs(),
            &[1.0 / 3.0; 3],
            1e-15,
        );
        for c in [-40.0, 0.0, 3.5, 700.0] {
            close(
                softmax(&[c, c + 3f64.ln()]).unwrap().probs(),
                &[0.25, 0.75],
                1e-12,
            );
        }
        close(
            softmax(&[1.0, 2.0, 3.0]).unwrap().probs(),
            &[
                0.090_030_573_170_380_46,
                0.244_728_471_054_797_65,
                0.665_240_955_774_821_9,
            ],
            1e-12,
        );
        assert!(matches!(
            softmax(&[0.0, f64::NAN]),
            Err(Error::NonFiniteInput { index: 1 })
        ));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Categorical::new(vec![1.0, 0.0]).unwrap()), 0.0);
        assert_abs_diff_eq!(
            entropy(&Categorical::new(vec![0.5, 0.5]).unwrap()),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            entropy(&Categorical::new(vec![0.9, 0.1]).unwrap()),
            0.325_082_973_391_448_24,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_examples() {
        let p = Categorical::new(vec![0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(kl_divergence(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        let one_hot = Categorical::new(vec![1.0, 0.0]).unwrap();
        let half = Categorical::uniform(2).unwrap();
        assert_abs_diff_eq!(
            kl_divergence(&one_hot, &half).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let p = Categorical::new(vec![0.8, 0.2]).unwrap();
        assert_abs_diff_eq!(
            kl_divergence(&p, &half).unwrap(),
            0.192_744_757_021_757_43,
            epsilon = 1e-12
        );
        let three = Categorical::uniform(3).unwrap();
        assert!(matches!(
            kl_divergence(&p, &three),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kl_against_zero_support_is_finite() {
        let p = Categorical::new(vec![0.5, 0.5]).unwrap();
        let q = Categorical::new(vec![1.0, 0.0]).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl.is_finite() && kl > 10.0);
    }

    fn two_by_two() -> LikelihoodMatrix {
        StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    #[test]
    fn precision_weight_examples() {
        let a = two_by_two();
        let same = precision_weight(&a, Precision::ONE).unwrap();
        for j in 0..2 {
            close(same.column(j).probs(), a.column(j).probs(), 1e-12);
        }
        let flat = precision_weight(&a, Precision::new(1e-12).unwrap()).unwrap();
        for j in 0..2 {
            close(flat.column(j).probs(), &[0.5, 0.5], 1e-9);
        }
        let sharp = precision_weight(&a, Precision::new(2.0).unwrap()).unwrap();
        close(
            &sharp.to_rows().concat(),
            &[
                0.987_804_878_048_780_5,
                0.012_195_121_951_219_51,
                0.012_195_121_951_219_51,
                0.987_804_878_048_780_5,
            ],
            1e-12,
        );
    }

    #[test]
    fn precision_rejects_non_positive() {
        assert!(Precision::new(0.0).is_err());
        assert!(Precision::new(-1.0).is_err());
        assert!(Precision::new(f64::INFINITY).is_err());
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Categorical::new(vec![0.5, 0.49]).is_err());
        assert!(Categorical::new(vec![]).is_err());
        assert!(StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5]]).is_err());
        assert!(TransitionModel::new(vec![]).is_err());
        let rect = StochasticMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert!(TransitionModel::new(vec![rect]).is_err());
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<Categorical>("[0.25, 0.75]").is_ok());
        assert!(serde_json::from_str::<Categorical>("[0.25, 0.7]").is_err());
        assert!(serde_json::from_str::<Precision>("0").is_err());
    }

    fn vec_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..10.0, 1..=max_len)
    }

    fn matrix_strategy() -> impl Strategy<Value = LikelihoodMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(rows, cols)| {
            prop::collection::vec(prop::collection::vec(0.001f64..1.0, rows), cols).prop_map(
                |cols| {
                    StochasticMatrix::from_columns(
                        cols.iter().map(|c| normalize(c).unwrap()).collect(),
                    )
                    .unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn normalize_yields_valid_categorical(v in vec_strategy(12)) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            let c = normalize(&v).unwrap();
            prop_assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(Categorical::new(c.into_vec()).is_ok());
        }

        #[test]
        fn softmax_shift_invariant(
            v in prop::collection::vec(-20.0f64..20.0, 1..10),
            c in -100.0f64..100.0,
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = softmax(&v).unwrap();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn gibbs_inequality((p, q) in (1usize..=8).prop_flat_map(|n| (
            prop::collection::vec(0.0f64..10.0, n),
            prop::collection::vec(0.0f64..10.0, n),
        ))) {
            prop_assume!(p.iter().sum::<f64>() > 0.0 && q.iter().sum::<f64>() > 0.0);
            let p = normalize(&p).unwrap();
            let q = normalize(&q).unwrap();
            prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            let h = entropy(&p);
            prop_assert!(h >= 0.0 && h <= (p.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn precision_sharpens_monotonically(
            a in matrix_strategy(),
            g1 in 0.1f64..5.0,
            g2 in 0.1f64..5.0,
        ) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let wl = precision_weight(&a, Precision::new(lo).unwrap()).unwrap();
            let wh = precision_weight(&a, Precision::new(hi).unwrap()).unwrap();
            for j in 0..a.n_cols() {
                prop_assert!(entropy(wh.column(j)) <= entropy(wl.column(j)) + 1e-12);
            }
        }

        #[test]
        fn precision_commutes_with_column_permutation(
            a in matrix_strategy(),
            g in 0.1f64..5.0,
            rot in 0usize..6,
        ) {
            let n = a.n_cols();
            let perm: Vec<usize> = (0..n).map(|j| (j + rot) % n).collect();
            let permuted = StochasticMatrix::from_columns(
                perm.iter().map(|&j| a.column(j).clone()).collect(),
            ).unwrap();
            let gamma = Precision::new(g).unwrap();
            let w = precision_weight(&a, gamma).unwrap();
            let wp = precision_weight(&permuted, gamma).unwrap();
            for (k, &j) in perm.iter().enumerate() {
                prop_assert_eq!(wp.column(k), w.column(j));
            }
        }
    }
}
