//! First-order port-Hamiltonian boundary control systems
//!
//! ```text
//! dx/dt = P1 d/dzeta (H x) + P0 (H x)          zeta in [a, b]
//! [u; 0] = [Wb1; Wb2] [(Hx)(b); (Hx)(a)]
//!      y = Wc [(Hx)(b); (Hx)(a)]
//! ```
//!
//! together with validation of the standing assumptions (Hermitian,
//! invertible `P1`; uniformly positive `H`; full-rank boundary matrix;
//! boundary complementarity) and the derived boundary matrices `R0`, `Xi`.

use serde::{Deserialize, Serialize};

use crate::error::PhsError;
use crate::json::{self, Rows};
use crate::linalg::{self, r, CMat, RANK_RTOL};

/// Energy density `H(zeta)`.
#[derive(Debug, Clone, PartialEq)]
pub enum HField {
    Constant(CMat),
    /// Piecewise-linear interpolation of `values` on the strictly increasing `mesh`.
    Mesh {
        mesh: Vec<f64>,
        values: Vec<CMat>,
    },
}

impl HField {
    pub fn eval(&self, zeta: f64) -> CMat {
        match self {
            HField::Constant(h) => h.clone(),
            HField::Mesh { mesh, values } => {
                let last = mesh.len() - 1;
                if zeta <= mesh[0] {
                    return values[0].clone();
                }
                if zeta >= mesh[last] {
                    return values[last].clone();
                }
                let i = mesh.partition_point(|&m| m <= zeta) - 1;
                let t = (zeta - mesh[i]) / (mesh[i + 1] - mesh[i]);
                &values[i] * r(1.0 - t) + &values[i + 1] * r(t)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, HField::Constant(_))
    }

    fn dim(&self) -> Option<(usize, usize)> {
        match self {
            HField::Constant(h) => Some(h.shape()),
            HField::Mesh { values, .. } => values.first().map(|v| v.shape()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhsSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub p1: CMat,
    pub p0: CMat,
    pub h: HField,
    /// `p x 2n`, input rows.
    pub wb1: CMat,
    /// `(n-p) x 2n`, homogeneous rows.
    pub wb2: CMat,
    /// `k x 2n`, output rows.
    pub wc: CMat,
    /// Declared coercivity constant: `H(zeta) >= c I`.
    pub coercivity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum HDoc {
    Constant { constant: Rows },
    Mesh { mesh: Vec<f64>, values: Vec<Rows> },
}

#[derive(Debug, Serialize, Deserialize)]
struct PhsDoc {
    #[serde(default)]
    name: String,
    n: usize,
    p: usize,
    k: usize,
    interval: [f64; 2],
    #[serde(rename = "P1")]
    p1: Rows,
    #[serde(rename = "P0")]
    p0: Rows,
    #[serde(rename = "H")]
    h: HDoc,
    #[serde(rename = "Wb1")]
    wb1: Rows,
    #[serde(rename = "Wb2")]
    wb2: Rows,
    #[serde(rename = "Wc")]
    wc: Rows,
    #[serde(default = "default_coercivity")]
    c: f64,
}

fn default_coercivity() -> f64 {
    1e-8
}

impl PhsSpec {
    pub fn from_json(text: &str) -> Result<Self, PhsError> {
        let doc: PhsDoc = serde_json::from_str(text).map_err(|e| PhsError::Schema(e.to_string()))?;
        let n = doc.n;
        let two_n = 2 * n;
        let dec = |rows: &Rows, cols: usize, name: &str| json::decode(rows, Some(cols), name).map_err(PhsError::Schema);
        let h = match &doc.h {
            HDoc::Constant { constant } => HField::Constant(dec(constant, n, "H.constant")?),
            HDoc::Mesh { mesh, values } => {
                let values = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| dec(v, n, &format!("H.values[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                HField::Mesh { mesh: mesh.clone(), values }
            }
        };
        let spec = PhsSpec {
            name: doc.name,
            n,
            p: doc.p,
            k: doc.k,
            a: doc.interval[0],
            b: doc.interval[1],
            p1: dec(&doc.p1, n, "P1")?,
            p0: dec(&doc.p0, n, "P0")?,
            h,
            wb1: dec(&doc.wb1, two_n, "Wb1")?,
            wb2: dec(&doc.wb2, two_n, "Wb2")?,
            wc: dec(&doc.wc, two_n, "Wc")?,
            coercivity: doc.c,
        };
        spec.check_dims()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let h = match &self.h {
            HField::Constant(m) => HDoc::Constant { constant: json::encode(m) },
            HField::Mesh { mesh, values } => {
                HDoc::Mesh { mesh: mesh.clone(), values: values.iter().map(json::encode).collect() }
            }
        };
        let doc = PhsDoc {
            name: self.name.clone(),
            n: self.n,
            p: self.p,
            k: self.k,
            interval: [self.a, self.b],
            p1: json::encode(&self.p1),
            p0: json::encode(&self.p0),
            h,
            wb1: json::encode(&self.wb1),
            wb2: json::encode(&self.wb2),
            wc: json::encode(&self.wc),
            c: self.coercivity,
        };
        json::to_string_fixed(&doc).expect("spec serializes")
    }

    /// Full boundary matrix `[Wb1; Wb2]`, `n x 2n`.
    pub fn wb(&self) -> CMat {
        linalg::vstack(&self.wb1, &self.wb2)
    }

    pub fn check_dims(&self) -> Result<(), PhsError> {
        let n = self.n;
        let mismatch = |what: String| Err(PhsError::DimensionMismatch(what));
        if n == 0 {
            return mismatch("n must be positive".into());
        }
        if self.p > n || self.k > n {
            return mismatch(format!("p = {}, k = {} must not exceed n = {n}", self.p, self.k));
        }
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return mismatch(format!("interval ({}, {}) must satisfy a < b", self.a, self.b));
        }
        for (name, m, shape) in [
            ("P1", &self.p1, (n, n)),
            ("P0", &self.p0, (n, n)),
            ("Wb1", &self.wb1, (self.p, 2 * n)),
            ("Wb2", &self.wb2, (n - self.p, 2 * n)),
            ("Wc", &self.wc, (self.k, 2 * n)),
        ] {
            if m.shape() != shape {
                return mismatch(format!("{name} is {:?}, expected {shape:?}", m.shape()));
            }
        }
        if self.h.dim() != Some((n, n)) {
            return mismatch(format!("H is {:?}, expected ({n}, {n})", self.h.dim()));
        }
        if let HField::Mesh { mesh, values } = &self.h {
            if mesh.len() < 2 || mesh.len() != values.len() {
                return mismatch("H mesh needs >= 2 points and one value per point".into());
            }
            if mesh.windows(2).any(|w| !(w[0] < w[1])) {
                return mismatch("H mesh must be strictly increasing".into());
            }
            if values.iter().any(|v| v.shape() != (n, n)) {
                return mismatch("H mesh values must all be n x n".into());
            }
            if mesh[0] > self.a || mesh[mesh.len() - 1] < self.b {
                return mismatch("H mesh must cover [a, b]".into());
            }
        }
        if !(self.coercivity > 0.0) {
            return mismatch("coercivity constant c must be positive".into());
        }
        Ok(())
    }

    pub fn eval_h(&self, zeta: f64) -> Result<CMat, PhsError> {
        if zeta < self.a || zeta > self.b {
            return Err(PhsError::OutOfInterval { zeta, a: self.a, b: self.b });
        }
        Ok(self.h.eval(zeta))
    }

    /// Points at which sampled conditions are checked: `samples` equispaced
    /// points, plus mesh points and mesh midpoints inside `[a, b]`.
    pub fn sample_points(&self, samples: usize) -> Vec<f64> {
        let samples = samples.max(2);
        let mut pts: Vec<f64> =
            (0..samples).map(|i| self.a + (self.b - self.a) * i as f64 / (samples - 1) as f64).collect();
        if let HField::Mesh { mesh, .. } = &self.h {
            for w in mesh.windows(2) {
                pts.push(w[0]);
                pts.push(0.5 * (w[0] + w[1]));
            }
            pts.push(mesh[mesh.len() - 1]);
        }
        pts.retain(|z| *z >= self.a && *z <= self.b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub error: Option<PhsError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Regularity of the diagonalization was only sampled (non-constant H).
    pub sampled_only: bool,
    pub samples: Vec<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_error(&self) -> Option<&PhsError> {
        self.checks.iter().find_map(|c| c.error.as_ref())
    }

    pub fn ensure(&self) -> Result<(), PhsError> {
        match self.first_error() {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    fn push(&mut self, name: &str, result: Result<String, PhsError>) {
        let (passed, detail, error) = match result {
            Ok(d) => (true, d, None),
            Err(e) => (false, e.to_string(), Some(e)),
        };
        self.checks.push(Check { name: name.into(), passed, detail, error });
    }
}

fn hermitian_tol(m: &CMat) -> f64 {
    1e-12 * (1.0 + m.norm())
}

/// Checks the standing assumptions on a port-Hamiltonian spec.
///
/// Only dimension errors abort; every other condition is recorded as a
/// pass/fail entry so the report always covers all checks.
pub fn validate_spec(spec: &PhsSpec, samples: usize) -> Result<ValidationReport, PhsError> {
    spec.check_dims()?;
    let pts = spec.sample_points(samples);
    let mut report = ValidationReport { checks: Vec::new(), sampled_only: !spec.h.is_constant(), samples: pts.clone() };

    report.push("P1 Hermitian", {
        let d = linalg::hermitian_defect(&spec.p1);
        if d <= hermitian_tol(&spec.p1) {
            Ok(format!("defect {d:.3e}"))
        } else {
            Err(PhsError::NonHermitian { name: "P1".into(), zeta: f64::NAN })
        }
    });
    report.push("P1 invertible", {
        let rank = linalg::rank(&spec.p1, RANK_RTOL);
        if rank == spec.n {
            Ok(format!("condition number {:.3e}", linalg::cond(&spec.p1)))
        } else {
            Err(PhsError::RankDeficient { rank, expected: spec.n })
        }
    });
    report.push("P0 skew-Hermitian", {
        let d = (&spec.p0 + spec.p0.adjoint()).norm();
        if d <= 1e-12 * (1.0 + spec.p0.norm()) {
            Ok(format!("defect {d:.3e}"))
        } else {
            Err(PhsError::NonSkewP0 { defect: d })
        }
    });
    report.push("H Hermitian", {
        pts.iter()
            .find_map(|&z| {
                let h = spec.h.eval(z);
                (linalg::hermitian_defect(&h) > hermitian_tol(&h))
                    .then(|| PhsError::NonHermitian { name: "H".into(), zeta: z })
            })
            .map_or(Ok(format!("{} samples", pts.len())), Err)
    });
    report.push("H >= cI", {
        let mut worst = (f64::INFINITY, spec.a);
        for &z in &pts {
            let m = linalg::min_eig(&spec.h.eval(z));
            if m < worst.0 {
                worst = (m, z);
            }
        }
        if worst.0 >= spec.coercivity {
            Ok(format!("min eigenvalue {:.6e} at zeta = {}", worst.0, worst.1))
        } else {
            Err(PhsError::PositivityViolation { zeta: worst.1, min_eig: worst.0 })
        }
    });
    let wb = spec.wb();
    report.push("rank [Wb1; Wb2] = n", {
        let rank = linalg::rank(&wb, RANK_RTOL);
        if rank == spec.n {
            Ok(format!("rank {rank}"))
        } else {
            Err(PhsError::RankDeficient { rank, expected: spec.n })
        }
    });
    // The complementarity check needs the eigen-split, which in turn needs the
    // Hermitian/positivity checks above.
    if report.passed() {
        report.push("complementarity", complementarity(spec, &wb).map(|c| format!("condition number {c:.3e}")));
        report.push("diagonalization regularity", {
            let mut worst = 0.0_f64;
            let mut failure = None;
            for &z in &pts {
                match diagonalize_p1h(spec, z) {
                    Ok(d) => worst = worst.max(d.reconstruction_error(spec, z)),
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            match failure {
                Some(e) => Err(e),
                None if report.sampled_only => {
                    Ok(format!("sampled-only: {} points, max reconstruction error {worst:.3e}", pts.len()))
                }
                None => Ok(format!("constant H, reconstruction error {worst:.3e}")),
            }
        });
    }
    Ok(report)
}

fn complementarity(spec: &PhsSpec, wb: &CMat) -> Result<f64, PhsError> {
    let n = spec.n;
    let w_b = wb.columns(0, n).clone_owned();
    let w_a = wb.columns(n, n).clone_owned();
    let at_b = diagonalize_p1h(spec, spec.b)?;
    let at_a = diagonalize_p1h(spec, spec.a)?;
    let left = w_b * spec.h.eval(spec.b) * &at_b.v_plus;
    let right = w_a * spec.h.eval(spec.a) * &at_a.v_minus;
    let m = linalg::hstack(&left, &right);
    let rank = linalg::rank(&m, RANK_RTOL);
    let cond = linalg::cond(&m);
    if m.ncols() == n && rank == n {
        Ok(cond)
    } else {
        Err(PhsError::ComplementarityFailure { cond })
    }
}

/// `P1 H(zeta) = S^{-1} diag(Lambda, Theta) S`.
#[derive(Debug, Clone, PartialEq)]
pub struct P1hDiagonalization {
    /// Positive eigenvalues, descending magnitude.
    pub lambda: Vec<f64>,
    /// Negative eigenvalues, descending magnitude.
    pub theta: Vec<f64>,
    pub s: CMat,
    pub s_inv: CMat,
    /// Eigenvectors for the positive eigenvalues (columns).
    pub v_plus: CMat,
    /// Eigenvectors for the negative eigenvalues (columns).
    pub v_minus: CMat,
}

impl P1hDiagonalization {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.lambda.iter().chain(self.theta.iter()).copied().collect()
    }

    pub fn reconstruction_error(&self, spec: &PhsSpec, zeta: f64) -> f64 {
        let target = &spec.p1 * spec.h.eval(zeta);
        let d = linalg::diag_real(&self.eigenvalues());
        (&self.s_inv * d * &self.s - &target).norm() / target.norm().max(f64::MIN_POSITIVE)
    }
}

/// Diagonalizes `P1 H(zeta)` through the Hermitian matrix `H^{1/2} P1 H^{1/2}`.
pub fn diagonalize_p1h(spec: &PhsSpec, zeta: f64) -> Result<P1hDiagonalization, PhsError> {
    let h = spec.eval_h(zeta)?;
    let h_half =
        linalg::herm_sqrt(&h).map_err(|_| PhsError::PositivityViolation { zeta, min_eig: linalg::min_eig(&h) })?;
    let h_inv_half =
        linalg::herm_inv_sqrt(&h).map_err(|_| PhsError::PositivityViolation { zeta, min_eig: linalg::min_eig(&h) })?;
    let g = linalg::herm(&(&h_half * &spec.p1 * &h_half));
    let eig = g.symmetric_eigen();
    let scale = linalg::norm2(&(&spec.p1 * &h));
    let n = spec.n;
    for i in 0..n {
        let mag = eig.eigenvalues[i].abs();
        if mag < 1e-12 * scale {
            return Err(PhsError::SingularP1H { zeta, magnitude: mag });
        }
    }
    let mut pos: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    let by_mag = |i: &usize, j: &usize| eig.eigenvalues[*j].abs().total_cmp(&eig.eigenvalues[*i].abs());
    pos.sort_by(by_mag);
    neg.sort_by(by_mag);
    let order: Vec<usize> = pos.iter().chain(neg.iter()).copied().collect();
    let q = linalg::canonical_phase(CMat::from_fn(n, n, |row, col| eig.eigenvectors[(row, order[col])]));
    let s = q.adjoint() * &h_half;
    let s_inv = &h_inv_half * &q;
    let v_plus = s_inv.columns(0, pos.len()).clone_owned();
    let v_minus = s_inv.columns(pos.len(), neg.len()).clone_owned();
    Ok(P1hDiagonalization {
        lambda: pos.iter().map(|&i| eig.eigenvalues[i]).collect(),
        theta: neg.iter().map(|&i| eig.eigenvalues[i]).collect(),
        s,
        s_inv,
        v_plus,
        v_minus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMatrices {
    pub r0: CMat,
    pub r0_inv: CMat,
    /// Flip matrix `[[0, I], [I, 0]]`.
    pub xi: CMat,
    pub wb1: CMat,
    pub wb2: CMat,
    pub wc: CMat,
}

impl BoundaryMatrices {
    pub fn wb(&self) -> CMat {
        linalg::vstack(&self.wb1, &self.wb2)
    }
}

pub fn flip_matrix(n: usize) -> CMat {
    let i = linalg::eye(n);
    let z = linalg::zeros(n, n);
    linalg::block2(&z, &i, &i, &z)
}

pub fn boundary_matrices(spec: &PhsSpec) -> Result<BoundaryMatrices, PhsError> {
    spec.check_dims()?;
    let n = spec.n;
    let s = r(std::f64::consts::FRAC_1_SQRT_2);
    let i = linalg::eye(n);
    let p1_inv = linalg::inverse(&spec.p1).map_err(|_| PhsError::SingularR0)?;
    let r0 = linalg::block2(&spec.p1, &(-&spec.p1), &i, &i) * s;
    let r0_inv = linalg::block2(&p1_inv, &i, &(-&p1_inv), &i) * s;
    Ok(BoundaryMatrices {
        wb1: &spec.wb1 * &r0_inv,
        wb2: &spec.wb2 * &r0_inv,
        wc: &spec.wc * &r0_inv,
        xi: flip_matrix(n),
        r0,
        r0_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::linalg::{c, real_matrix};

    #[test]
    fn wave_example_passes_all_checks() {
        let spec = corpus::wave();
        let report = validate_spec(&spec, 11).unwrap();
        assert!(report.passed(), "{report:#?}");
        assert!(!report.sampled_only);
    }

    #[test]
    fn skew_p1_is_rejected() {
        let mut spec = corpus::wave();
        spec.p1 = real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let report = validate_spec(&spec, 5).unwrap();
        assert!(matches!(report.first_error(), Some(PhsError::NonHermitian { .. })));
    }

    #[test]
    fn duplicate_boundary_rows_are_rank_deficient() {
        let mut spec = corpus::wave();
        spec.wb2 = spec.wb1.clone();
        let report = validate_spec(&spec, 5).unwrap();
        assert!(matches!(report.first_error(), Some(PhsError::RankDeficient { rank: 1, expected: 2 })));
    }

    #[test]
    fn indefinite_h_is_a_positivity_violation() {
        let mut spec = corpus::wave();
        spec.h = HField::Constant(linalg::diag_real(&[1.0, -0.5]));
        let report = validate_spec(&spec, 5).unwrap();
        assert!(matches!(report.first_error(), Some(PhsError::PositivityViolation { .. })));
    }

    #[test]
    fn complementarity_failure_detected() {
        // The input row only sees the incoming characteristic's complement at b.
        let mut spec = corpus::wave();
        spec.wb1 = real_matrix(1, 4, &[1.0, -1.0, 0.0, 0.0]);
        let report = validate_spec(&spec, 5).unwrap();
        assert!(matches!(report.first_error(), Some(PhsError::ComplementarityFailure { .. })));
    }

    #[test]
    fn dimension_mismatch_aborts() {
        let mut spec = corpus::wave();
        spec.wc = linalg::zeros(1, 3);
        assert!(matches!(validate_spec(&spec, 5), Err(PhsError::DimensionMismatch(_))));
    }

    #[test]
    fn diagonalize_wave() {
        let spec = corpus::wave();
        let d = diagonalize_p1h(&spec, 0.3).unwrap();
        assert_eq!(d.lambda.len(), 1);
        assert!((d.lambda[0] - 1.0).abs() < 1e-14);
        assert!((d.theta[0] + 1.0).abs() < 1e-14);
        assert!(d.reconstruction_error(&spec, 0.3) < 1e-12);
    }

    #[test]
    fn diagonalize_scalar_positive() {
        let mut spec = corpus::transport_scattering();
        spec.h = HField::Constant(real_matrix(1, 1, &[2.0]));
        let d = diagonalize_p1h(&spec, 0.5).unwrap();
        assert_eq!(d.lambda.len(), 1);
        assert!((d.lambda[0] - 2.0).abs() < 1e-14);
        assert!(d.theta.is_empty());
    }

    #[test]
    fn diagonalize_anisotropic_wave() {
        let mut spec = corpus::wave();
        spec.h = HField::Constant(linalg::diag_real(&[4.0, 1.0]));
        let d = diagonalize_p1h(&spec, 0.0).unwrap();
        assert!((d.lambda[0] - 2.0).abs() < 1e-13);
        assert!((d.theta[0] + 2.0).abs() < 1e-13);
        assert!(d.reconstruction_error(&spec, 0.0) < 1e-12);
    }

    #[test]
    fn r0_for_scalar_identity() {
        let spec = corpus::transport_scattering();
        let bm = boundary_matrices(&spec).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((&bm.r0 - real_matrix(2, 2, &[h, -h, h, h])).norm() < 1e-15);
        assert!((&bm.r0_inv - real_matrix(2, 2, &[h, h, -h, h])).norm() < 1e-15);
    }

    #[test]
    fn rows_of_r0_map_to_unit_rows() {
        let mut spec = corpus::wave();
        let r0 = boundary_matrices(&spec).unwrap().r0;
        spec.wb1 = r0.rows(0, 1).clone_owned();
        spec.wb2 = r0.rows(1, 1).clone_owned();
        let bm = boundary_matrices(&spec).unwrap();
        assert!((bm.wb() - linalg::eye(4).rows(0, 2)).norm() < 1e-14);
        assert!((&bm.wb1 * &bm.r0 - &spec.wb1).norm() < 1e-12);
    }

    #[test]
    fn boundary_form_identity() {
        for spec in corpus::specs() {
            let bm = boundary_matrices(&spec).unwrap();
            let n = spec.n;
            let j = linalg::block_diag(&[spec.p1.clone(), -&spec.p1]);
            let lhs = bm.r0.adjoint() * &bm.xi * &bm.r0;
            assert!((lhs - j).norm() < 1e-14 * (1.0 + spec.p1.norm()), "{}", spec.name);
            assert_eq!(bm.xi.shape(), (2 * n, 2 * n));
        }
    }

    #[test]
    fn flip_is_fixed() {
        let xi = flip_matrix(2);
        assert_eq!(xi[(0, 2)], c(1.0, 0.0));
        assert_eq!(xi[(3, 1)], c(1.0, 0.0));
        assert_eq!(xi[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn json_round_trip_preserves_spec() {
        let spec = corpus::wave_variable_h();
        let back = PhsSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = PhsSpec::from_json("{\"n\": 2, ").unwrap_err();
        match err {
            PhsError::Schema(msg) => assert!(msg.contains("line 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mesh_interpolation_is_linear() {
        let h =
            HField::Mesh { mesh: vec![0.0, 1.0], values: vec![real_matrix(1, 1, &[1.0]), real_matrix(1, 1, &[3.0])] };
        assert!((h.eval(0.25)[(0, 0)].re - 1.5).abs() < 1e-15);
    }
}
