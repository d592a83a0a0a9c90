//! Shared domain types: privacy budgets, datasets split into public and
//! private parts, problem geometry, and the seeded-randomness contract.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vecops::norm;

/// The random stream handed to every mechanism, learner and generator.
///
/// ChaCha is counter based, so a stream is fully determined by its key.
pub type RandomStream = ChaCha12Rng;

/// An (epsilon, delta) privacy budget.
///
/// `epsilon = +inf` is accepted and denotes the non-private limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    /// Non-private limit used by tests and baselines.
    pub fn non_private() -> Self {
        Self {
            epsilon: f64::INFINITY,
            delta: 0.5,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

/// Radius of the constraint ball, feature-norm bound and prediction range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemGeometry {
    radius: f64,
    norm_x: f64,
    range: f64,
}

impl ProblemGeometry {
    /// Geometry for linear predictors; the range is `radius * norm_x`.
    pub fn linear(radius: f64, norm_x: f64) -> Result<Self> {
        Self::new(radius, norm_x, radius * norm_x)
    }

    pub fn new(radius: f64, norm_x: f64, range: f64) -> Result<Self> {
        for (name, v) in [("D", radius), ("norm_X", norm_x), ("R", range)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if range > radius * norm_x * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "R = {range} exceeds D * norm_X = {}",
                radius * norm_x
            )));
        }
        Ok(Self {
            radius,
            norm_x,
            range,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn norm_x(&self) -> f64 {
        self.norm_x
    }

    pub fn range(&self) -> f64 {
        self.range
    }
}

/// Labeled private examples plus (optionally labeled) public features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitDataset {
    pub d: usize,
    pub public_features: Vec<Vec<f64>>,
    pub public_labels: Option<Vec<f64>>,
    pub private_examples: Vec<(Vec<f64>, f64)>,
}

impl SplitDataset {
    pub fn new(
        d: usize,
        public_features: Vec<Vec<f64>>,
        public_labels: Option<Vec<f64>>,
        private_examples: Vec<(Vec<f64>, f64)>,
    ) -> Result<Self> {
        if let Some(labels) = &public_labels {
            if labels.len() != public_features.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} public labels for {} public rows",
                    labels.len(),
                    public_features.len()
                )));
            }
        }
        let ds = Self {
            d,
            public_features,
            public_labels,
            private_examples,
        };
        ds.check_dims()?;
        Ok(ds)
    }

    pub fn n_pub(&self) -> usize {
        self.public_features.len()
    }

    pub fn n_priv(&self) -> usize {
        self.private_examples.len()
    }

    pub fn n(&self) -> usize {
        self.n_pub() + self.n_priv()
    }

    /// Public rows paired with their labels, failing if any label is missing.
    pub fn labeled_public(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        if self.public_features.is_empty() {
            return Ok(Vec::new());
        }
        let labels = self.public_labels.as_ref().ok_or(Error::UnlabeledPublic)?;
        Ok(self
            .public_features
            .iter()
            .cloned()
            .zip(labels.iter().copied())
            .collect())
    }

    /// All labeled examples, public first.
    pub fn all_labeled(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        let mut all = self.labeled_public()?;
        all.extend(self.private_examples.iter().cloned());
        Ok(all)
    }

    fn features(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.public_features
            .iter()
            .chain(self.private_examples.iter().map(|(x, _)| x))
    }

    fn check_dims(&self) -> Result<()> {
        for x in self.features() {
            if x.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: x.len(),
                });
            }
        }
        Ok(())
    }

    /// Reads the `split,y,x0..x{d-1}` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "split" || &headers[1] != "y" {
            return Err(Error::InvalidParameter(
                "dataset header must start with `split,y`".into(),
            ));
        }
        let d = headers.len() - 2;
        for (j, h) in headers.iter().skip(2).enumerate() {
            if h != format!("x{j}") {
                return Err(Error::InvalidParameter(format!(
                    "expected column x{j}, found `{h}`"
                )));
            }
        }
        let mut public_features = Vec::new();
        let mut public_labels: Vec<Option<f64>> = Vec::new();
        let mut private_examples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != d + 2 {
                return Err(Error::DimensionMismatch {
                    expected: d + 2,
                    found: rec.len(),
                });
            }
            let x = rec
                .iter()
                .skip(2)
                .map(|s| parse_f64(s, row))
                .collect::<Result<Vec<f64>>>()?;
            let y = match rec[1].trim() {
                "" => None,
                s => Some(parse_f64(s, row)?),
            };
            match &rec[0] {
                "pub" => {
                    public_features.push(x);
                    public_labels.push(y);
                }
                "priv" => {
                    let y = y.ok_or_else(|| {
                        Error::InvalidParameter(format!("private row {row} has no label"))
                    })?;
                    private_examples.push((x, y));
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "row {row}: unknown split `{other}`"
                    )))
                }
            }
        }
        let labels = if public_labels.iter().all(Option::is_some) && !public_labels.is_empty() {
            Some(public_labels.into_iter().flatten().collect())
        } else {
            None
        };
        Self::new(d, public_features, labels, private_examples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["split".to_string(), "y".to_string()];
        header.extend((0..self.d).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for (i, x) in self.public_features.iter().enumerate() {
            let y = self
                .public_labels
                .as_ref()
                .map(|l| fmt_f64(l[i]))
                .unwrap_or_default();
            let mut row = vec!["pub".to_string(), y];
            row.extend(x.iter().map(|v| fmt_f64(*v)));
            w.write_record(&row)?;
        }
        for (x, y) in &self.private_examples {
            let mut row = vec!["priv".to_string(), fmt_f64(*y)];
            row.extend(x.iter().map(|v| fmt_f64(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("row {row}: cannot parse `{s}` as a number")))
}

/// Lossless float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Checks dimension consistency and the feature-norm bound of `geom`.
pub fn validate_dataset(ds: &SplitDataset, geom: &ProblemGeometry) -> Result<()> {
    ds.check_dims()?;
    let bound = geom.norm_x() * (1.0 + 1e-12);
    for (index, x) in ds.features().enumerate() {
        let n = norm(x);
        if n > bound {
            return Err(Error::NormBoundViolated {
                index,
                norm: n,
                bound: geom.norm_x(),
            });
        }
    }
    Ok(())
}

/// Identifies one trial's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, trial_index: u64) -> Self {
        Self {
            base_seed,
            trial_index,
        }
    }

    /// 32-byte key derived by hashing `(base_seed, trial_index)`.
    pub fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"padp/stream/v1");
        h.update(self.base_seed.to_le_bytes());
        h.update(self.trial_index.to_le_bytes());
        let out = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&out);
        key
    }

    /// First 8 bytes of the key, recorded in sweep output.
    pub fn fingerprint(&self) -> u64 {
        let key = self.key();
        u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
    }
}

/// Reproducible per-trial stream: a pure function of the seed spec.
pub fn derive_rng(spec: SeedSpec) -> RandomStream {
    ChaCha12Rng::from_seed(spec.key())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn privacy_params_validation() {
        assert!(PrivacyParams::new(1.0, 1e-5).is_ok());
        assert!(PrivacyParams::new(f64::INFINITY, 0.0).is_ok());
        assert!(PrivacyParams::pure(0.5).unwrap().is_pure());
        assert!(PrivacyParams::new(0.0, 1e-5).is_err());
        assert!(PrivacyParams::new(-1.0, 1e-5).is_err());
        assert!(PrivacyParams::new(f64::NAN, 1e-5).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, -1e-9).is_err());
    }

    #[test]
    fn geometry_rejects_range_above_linear_bound() {
        assert!(ProblemGeometry::new(1.0, 2.0, 2.0).is_ok());
        assert!(ProblemGeometry::new(1.0, 2.0, 2.5).is_err());
        assert!(ProblemGeometry::linear(0.0, 1.0).is_err());
    }

    #[test]
    fn same_spec_same_stream() {
        let mut a = derive_rng(SeedSpec::new(42, 0));
        let mut b = derive_rng(SeedSpec::new(42, 0));
        let xa: Vec<u64> = (0..100).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.random()).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn distinct_trials_distinct_streams() {
        let mut a = derive_rng(SeedSpec::new(42, 0));
        let mut b = derive_rng(SeedSpec::new(42, 1));
        let xa: Vec<u64> = (0..100).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
        assert!(xa.iter().zip(&xb).all(|(x, y)| x != y));
    }

    #[test]
    fn uniform_draws_have_mean_one_half() {
        for trial in 0..3 {
            let mut rng = derive_rng(SeedSpec::new(7, trial));
            let n = 100_000;
            let mean: f64 = (0..n).map(|_| rng.random::<f64>()).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        }
    }

    fn geom() -> ProblemGeometry {
        ProblemGeometry::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_vectors_validate() {
        let ds = SplitDataset::new(
            3,
            vec![vec![0.0; 3]; 2],
            None,
            vec![(vec![0.0; 3], 1.0)],
        )
        .unwrap();
        validate_dataset(&ds, &geom()).unwrap();
    }

    #[test]
    fn oversized_vector_reports_index() {
        let ds = SplitDataset {
            d: 2,
            public_features: vec![vec![0.1, 0.0]],
            public_labels: None,
            private_examples: vec![(vec![0.0, 0.5], 1.0), (vec![2.0, 0.0], 1.0)],
        };
        match validate_dataset(&ds, &geom()) {
            Err(Error::NormBoundViolated { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let ds = SplitDataset {
            d: 3,
            public_features: vec![vec![0.0; 3]],
            public_labels: None,
            private_examples: vec![(vec![0.0; 4], 1.0)],
        };
        assert!(matches!(
            validate_dataset(&ds, &geom()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(SplitDataset::new(3, vec![vec![0.0; 3], vec![0.0; 4]], None, vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_with_unlabeled_public_rows() {
        let ds = SplitDataset::new(
            2,
            vec![vec![0.1, -0.2], vec![1.0 / 3.0, 0.0]],
            None,
            vec![(vec![0.5, 0.25], -1.0), (vec![-0.75, 1e-17], 0.3)],
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("split,y,x0,x1\npub,,"));
        let back = SplitDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_rejects_bad_split() {
        let text = "split,y,x0\nfoo,1,0.5\n";
        assert!(SplitDataset::read_csv(text.as_bytes()).is_err());
        let text = "split,y,x0\npriv,,0.5\n";
        assert!(SplitDataset::read_csv(text.as_bytes()).is_err());
    }
}
