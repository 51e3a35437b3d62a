use serde::{Deserialize, Serialize};

use crate::error::CertError;
use crate::json::{self, Rows};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemMeta {
    /// Number of grid cells (0 for systems not produced by a discretization).
    #[serde(default)]
    pub grid: usize,
    #[serde(default)]
    pub scheme: String,
    #[serde(default)]
    pub provenance: String,
}

/// Finite-dimensional system `x' = Ax + Bu, y = Cx + Du` on the state space
/// `C^m` with inner product `<f, g> = g* M f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
    pub m: CMat,
    pub meta: SystemMeta,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    #[serde(rename = "M")]
    m: Rows,
    #[serde(default)]
    inputs: Option<usize>,
    #[serde(default)]
    meta: SystemMeta,
}

impl DiscreteSystem {
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat, m: CMat) -> Result<Self, CertError> {
        let sys = DiscreteSystem { a, b, c, d, m, meta: SystemMeta::default() };
        sys.check_dims()?;
        Ok(sys)
    }

    /// System with the Euclidean energy weight `M = I`.
    pub fn euclidean(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self, CertError> {
        let m = linalg::eye(a.nrows());
        Self::new(a, b, c, d, m)
    }

    pub fn with_meta(mut self, meta: SystemMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn check_dims(&self) -> Result<(), CertError> {
        let m = self.a.nrows();
        let (p, k) = (self.b.ncols(), self.c.nrows());
        let ok = self.a.shape() == (m, m)
            && self.b.nrows() == m
            && self.c.ncols() == m
            && self.d.shape() == (k, p)
            && self.m.shape() == (m, m);
        if ok {
            Ok(())
        } else {
            Err(CertError::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}, M {:?}",
                self.a.shape(),
                self.b.shape(),
                self.c.shape(),
                self.d.shape(),
                self.m.shape()
            )))
        }
    }

    /// Checks `M = M* > 0` and returns its lower Cholesky factor.
    pub fn check_weight(&self) -> Result<CMat, CertError> {
        self.check_dims()?;
        let defect = linalg::hermitian_defect(&self.m);
        if defect > 1e-12 * (1.0 + self.m.norm()) {
            return Err(CertError::NonHermitianM(defect));
        }
        linalg::cholesky(&linalg::herm(&self.m)).map_err(|_| CertError::NotPositiveDefiniteM)
    }

    /// Spectral norm of `[[A, B], [C, D]]`.
    pub fn norm(&self) -> f64 {
        let top = linalg::hstack(&self.a, &self.b);
        let bottom = linalg::hstack(&self.c, &self.d);
        linalg::norm2(&linalg::vstack(&top, &bottom))
    }

    /// `||x||_M^2`.
    pub fn energy(&self, x: &linalg::CVec) -> f64 {
        linalg::inner_re(x, &self.m, x)
    }

    pub fn to_json(&self) -> String {
        let doc = SystemDoc {
            a: json::encode(&self.a),
            b: json::encode(&self.b),
            c: json::encode(&self.c),
            d: json::encode(&self.d),
            m: json::encode(&self.m),
            inputs: Some(self.inputs()),
            meta: self.meta.clone(),
        };
        json::to_string_fixed(&doc).expect("system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CertError> {
        let doc: SystemDoc = serde_json::from_str(text).map_err(|e| CertError::DimensionMismatch(e.to_string()))?;
        let err = CertError::DimensionMismatch;
        let m = json::decode(&doc.m, None, "M").map_err(err)?;
        let states = m.nrows();
        let a = json::decode(&doc.a, Some(states), "A").map_err(err)?;
        let b = json::decode(&doc.b, doc.inputs, "B").map_err(err)?;
        let c = json::decode(&doc.c, Some(states), "C").map_err(err)?;
        let d = json::decode(&doc.d, Some(b.ncols()), "D").map_err(err)?;
        let d = if d.nrows() == 0 && c.nrows() == 0 { linalg::zeros(0, b.ncols()) } else { d };
        let sys = DiscreteSystem { a, b, c, d, m, meta: doc.meta };
        sys.check_dims()?;
        Ok(sys)
    }
}
