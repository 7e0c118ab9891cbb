//! Transfer-function evaluation and sample files.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fileio;
use crate::linalg::{self, C64, CMat};

/// Relative gap below which a right and a left point use the Hermite branch.
pub const HERMITE_TOL: f64 = 1e-8;

pub fn hermite_coincident(a: C64, b: C64) -> bool {
    (a - b).norm() <= HERMITE_TOL * a.norm().max(1.0)
}

/// Real state-space model `G(s) = C (sI - A)^{-1} B + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let ok = a.is_square() && b.nrows() == n && c.ncols() == n && d.nrows() == c.nrows() && d.ncols() == b.ncols();
        if !ok {
            return Err(Error::DimensionMismatch {
                context: "state-space model",
                detail: format!(
                    "A {:?}, B {:?}, C {:?}, D {:?}",
                    a.shape(),
                    b.shape(),
                    c.shape(),
                    d.shape()
                ),
            });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn to_complex(&self) -> Realization {
        Realization {
            a: linalg::to_complex(&self.a),
            b: linalg::to_complex(&self.b),
            c: linalg::to_complex(&self.c),
            d: linalg::to_complex(&self.d),
        }
    }

    pub fn check_hurwitz(&self) -> Result<()> {
        let max_real = linalg::spectrum(&linalg::to_complex(&self.a))?.max_real_part;
        if self.n() > 0 && max_real >= 0.0 {
            return Err(Error::NotHurwitz { max_real });
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&fileio::parse_json(&text, &path.display().to_string())?)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = fileio::as_usize(fileio::field(v, "n", "model")?, "model.n")?;
        let m = fileio::as_usize(fileio::field(v, "m", "model")?, "model.m")?;
        let p = fileio::as_usize(fileio::field(v, "p", "model")?, "model.p")?;
        let a = fileio::as_real_matrix(fileio::field(v, "A", "model")?, n, n, "model.A")?;
        let b = fileio::as_real_matrix(fileio::field(v, "B", "model")?, n, m, "model.B")?;
        let c = fileio::as_real_matrix(fileio::field(v, "C", "model")?, p, n, "model.C")?;
        let d = fileio::as_real_matrix(fileio::field(v, "D", "model")?, p, m, "model.D")?;
        Self::new(a, b, c, d)
    }

    pub fn to_json_value(&self) -> Result<ModelJson> {
        Ok(ModelJson {
            n: self.n(),
            m: self.m(),
            p: self.p(),
            a: fileio::real_matrix(&self.a)?,
            b: fileio::real_matrix(&self.b)?,
            c: fileio::real_matrix(&self.c)?,
            d: fileio::real_matrix(&self.d)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_with(path, None)
    }

    /// Write the model file with extra top-level metadata fields.
    pub fn write_with(&self, path: &Path, metadata: Option<&Value>) -> Result<()> {
        fileio::write_atomic(path, fileio::to_json_with(&self.to_json_value()?, metadata)?.as_bytes())
    }
}

type RawMatrix = Vec<Vec<Box<RawValue>>>;

#[derive(Serialize)]
pub struct ModelJson {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(rename = "A")]
    pub a: RawMatrix,
    #[serde(rename = "B")]
    pub b: RawMatrix,
    #[serde(rename = "C")]
    pub c: RawMatrix,
    #[serde(rename = "D")]
    pub d: RawMatrix,
}

/// Complex realization, used for reduced models and error systems.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl Realization {
    fn resolvent_solve(&self, s: C64, rhs: &CMat) -> Result<CMat> {
        let n = self.a.nrows();
        let shifted = linalg::eye(n) * s - &self.a;
        let lu = shifted.lu();
        let x = lu.solve(rhs).ok_or(Error::SingularResolvent { s })?;
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::SingularResolvent { s });
        }
        Ok(x)
    }

    /// `C (sI - A)^{-1} B` without the feedthrough.
    pub fn eval_strictly_proper(&self, s: C64) -> Result<CMat> {
        if self.a.nrows() == 0 {
            return Ok(CMat::zeros(self.c.nrows(), self.b.ncols()));
        }
        Ok(&self.c * self.resolvent_solve(s, &self.b)?)
    }

    pub fn eval(&self, s: C64) -> Result<CMat> {
        Ok(self.eval_strictly_proper(s)? + &self.d)
    }

    /// `-C (sI - A)^{-2} B`.
    pub fn eval_derivative(&self, s: C64) -> Result<CMat> {
        if self.a.nrows() == 0 {
            return Ok(CMat::zeros(self.c.nrows(), self.b.ncols()));
        }
        let x = self.resolvent_solve(s, &self.b)?;
        let y = self.resolvent_solve(s, &x)?;
        Ok(-(&self.c * y))
    }
}

pub fn eval_transfer(ss: &StateSpace, s: C64) -> Result<CMat> {
    ss.to_complex().eval(s)
}

pub fn eval_derivative(ss: &StateSpace, s: C64) -> Result<CMat> {
    ss.to_complex().eval_derivative(s)
}

/// One sample: point, `H(s) = G(s) - D` and optionally `H'(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub s: C64,
    pub value: CMat,
    pub derivative: Option<CMat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub right: Vec<SamplePoint>,
    pub left: Vec<SamplePoint>,
    pub feedthrough: DMatrix<f64>,
    pub m: usize,
    pub p: usize,
}

fn check_distinct(points: &[C64], side: &str) -> Result<()> {
    let scale = points.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= 1e-12 * scale {
                return Err(Error::DegeneratePoints(format!(
                    "{side} points {i} and {j} coincide ({})",
                    points[i]
                )));
            }
        }
    }
    Ok(())
}

/// Check that the points can be paired with their conjugates.
pub fn check_conjugate_closed(points: &[C64], side: &str) -> Result<()> {
    for (i, z) in points.iter().enumerate() {
        let tol = 1e-10 * z.norm().max(1.0);
        if !points.iter().any(|w| (w - z.conj()).norm() <= tol) {
            return Err(Error::InvariantViolation(format!(
                "{side} point {i} ({z}) has no conjugate partner"
            )));
        }
    }
    Ok(())
}

impl SampleSet {
    pub fn right_points(&self) -> Vec<C64> {
        self.right.iter().map(|p| p.s).collect()
    }
    pub fn left_points(&self) -> Vec<C64> {
        self.left.iter().map(|p| p.s).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.feedthrough.shape() != (self.p, self.m) {
            return Err(Error::DimensionMismatch {
                context: "sample set feedthrough",
                detail: format!("expected {}x{}, got {:?}", self.p, self.m, self.feedthrough.shape()),
            });
        }
        for (side, pts) in [("right", &self.right), ("left", &self.left)] {
            for (i, pt) in pts.iter().enumerate() {
                let bad = pt.value.shape() != (self.p, self.m)
                    || pt.derivative.as_ref().is_some_and(|d| d.shape() != (self.p, self.m));
                if bad {
                    return Err(Error::DimensionMismatch {
                        context: "sample value",
                        detail: format!("{side} point {i} is not {}x{}", self.p, self.m),
                    });
                }
            }
            let s: Vec<C64> = pts.iter().map(|p| p.s).collect();
            check_distinct(&s, side)?;
            check_conjugate_closed(&s, side)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_json_with(None)
    }

    /// Sample file text with extra top-level metadata fields.
    pub fn to_json_with(&self, metadata: Option<&Value>) -> Result<String> {
        #[derive(Serialize)]
        struct Point {
            s: [Box<RawValue>; 2],
            #[serde(rename = "H")]
            h: Vec<Vec<[Box<RawValue>; 2]>>,
            #[serde(rename = "dH", skip_serializing_if = "Option::is_none")]
            dh: Option<Vec<Vec<[Box<RawValue>; 2]>>>,
        }
        #[derive(Serialize)]
        struct File {
            m: usize,
            p: usize,
            feedthrough: RawMatrix,
            right: Vec<Point>,
            left: Vec<Point>,
        }
        let conv = |pts: &[SamplePoint]| -> Result<Vec<Point>> {
            pts.iter()
                .map(|pt| {
                    Ok(Point {
                        s: fileio::complex_number(pt.s)?,
                        h: fileio::complex_matrix(&pt.value)?,
                        dh: pt.derivative.as_ref().map(fileio::complex_matrix).transpose()?,
                    })
                })
                .collect()
        };
        let file = File {
            m: self.m,
            p: self.p,
            feedthrough: fileio::real_matrix(&self.feedthrough)?,
            right: conv(&self.right)?,
            left: conv(&self.left)?,
        };
        fileio::to_json_with(&file, metadata)
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let v = fileio::parse_json(text, source)?;
        let m = fileio::as_usize(fileio::field(&v, "m", "samples")?, "samples.m")?;
        let p = fileio::as_usize(fileio::field(&v, "p", "samples")?, "samples.p")?;
        let feedthrough =
            fileio::as_real_matrix(fileio::field(&v, "feedthrough", "samples")?, p, m, "samples.feedthrough")?;
        let side = |name: &str| -> Result<Vec<SamplePoint>> {
            let path = format!("samples.{name}");
            let arr = fileio::as_array(fileio::field(&v, name, "samples")?, &path)?;
            arr.iter()
                .enumerate()
                .map(|(i, pt)| {
                    let pp = format!("{path}[{i}]");
                    let s = fileio::as_complex(fileio::field(pt, "s", &pp)?, &format!("{pp}.s"))?;
                    let value = fileio::as_complex_matrix(fileio::field(pt, "H", &pp)?, p, m, &format!("{pp}.H"))?;
                    let derivative = match pt.get("dH") {
                        Some(Value::Null) | None => None,
                        Some(d) => Some(fileio::as_complex_matrix(d, p, m, &format!("{pp}.dH"))?),
                    };
                    Ok(SamplePoint { s, value, derivative })
                })
                .collect()
        };
        let set = SampleSet { right: side("right")?, left: side("left")?, feedthrough, m, p };
        set.validate()?;
        Ok(set)
    }
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let text = std::fs::read_to_string(path)?;
    SampleSet::from_json(&text, &path.display().to_string())
}

pub fn write_samples(set: &SampleSet, path: &Path) -> Result<()> {
    write_samples_with(set, path, None)
}

/// Write a sample file with extra top-level metadata fields.
pub fn write_samples_with(set: &SampleSet, path: &Path, metadata: Option<&Value>) -> Result<()> {
    set.validate()?;
    fileio::write_atomic(path, set.to_json_with(metadata)?.as_bytes())
}

/// Sample `H = G - D` at the given right and left points. Derivatives are
/// attached to points that coincide with a point on the other side.
pub fn generate_samples(ss: &StateSpace, right: &[C64], left: &[C64]) -> Result<SampleSet> {
    ss.check_hurwitz()?;
    for (side, pts) in [("right", right), ("left", left)] {
        check_distinct(pts, side)?;
        check_conjugate_closed(pts, side)?;
    }
    let real = ss.to_complex();
    let sample = |s: C64, other: &[C64]| -> Result<SamplePoint> {
        let value = real.eval_strictly_proper(s)?;
        let derivative = if other.iter().any(|&o| hermite_coincident(s, o)) {
            Some(real.eval_derivative(s)?)
        } else {
            None
        };
        Ok(SamplePoint { s, value, derivative })
    };
    let right_pts = right.par_iter().map(|&s| sample(s, left)).collect::<Result<Vec<_>>>()?;
    let left_pts = left.par_iter().map(|&s| sample(s, right)).collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { right: right_pts, left: left_pts, feedthrough: ss.d.clone(), m: ss.m(), p: ss.p() })
}

/// Conjugate-closed point list `offset ± j·omega_k` for the given positive frequencies.
pub fn conjugate_points(omegas: &[f64], offset: f64) -> Vec<C64> {
    omegas
        .iter()
        .flat_map(|&w| [C64::new(offset, w), C64::new(offset, -w)])
        .collect()
}

pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => {
            let (a, b) = (start.log10(), stop.log10());
            (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn first_order() -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn random_stable(seed: u64, n: usize, m: usize, p: usize) -> StateSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |r, c| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a0 = g(n, n);
        let shift = linalg::spectrum(&linalg::to_complex(&a0)).unwrap().max_real_part + 1.0;
        let a = a0 - DMatrix::identity(n, n) * shift;
        StateSpace::new(a, g(n, m), g(p, n), g(p, m)).unwrap()
    }

    #[test]
    fn first_order_values() {
        let ss = first_order();
        assert!((eval_transfer(&ss, c64(0.0, 0.0)).unwrap()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((eval_transfer(&ss, c64(0.0, 1.0)).unwrap()[(0, 0)] - c64(0.5, -0.5)).norm() < 1e-15);
        assert!((eval_derivative(&ss, c64(0.0, 0.0)).unwrap()[(0, 0)] - c64(-1.0, 0.0)).norm() < 1e-15);
        assert!((eval_derivative(&ss, c64(0.0, 1.0)).unwrap()[(0, 0)] - c64(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn singular_resolvent_is_reported() {
        let ss = first_order();
        assert!(matches!(eval_transfer(&ss, c64(-1.0, 0.0)), Err(Error::SingularResolvent { .. })));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let ss = random_stable(11, 5, 2, 3);
        let s = c64(0.0, 2.0);
        let h = 1e-6 * s.norm().max(1.0);
        let fd = (eval_transfer(&ss, s + c64(0.0, h)).unwrap() - eval_transfer(&ss, s - c64(0.0, h)).unwrap())
            / c64(0.0, 2.0 * h);
        let d = eval_derivative(&ss, s).unwrap();
        assert!((fd - &d).norm() <= 1e-5 * d.norm());
    }

    #[test]
    fn empty_lists_give_feedthrough_only() {
        let ss = random_stable(1, 3, 1, 1);
        let set = generate_samples(&ss, &[], &[]).unwrap();
        assert!(set.right.is_empty() && set.left.is_empty());
        assert_eq!(set.feedthrough, ss.d);
    }

    #[test]
    fn non_conjugate_closed_file_is_rejected() {
        let text = r#"{"m":1,"p":1,"feedthrough":[[0]],
            "right":[{"s":[0,1],"H":[[[1,0]]]}],
            "left":[{"s":[0,2],"H":[[[1,0]]]},{"s":[0,-2],"H":[[[1,0]]]}]}"#;
        assert!(matches!(SampleSet::from_json(text, "t"), Err(Error::InvariantViolation(_))));
        let ok = r#"{"m":1,"p":1,"feedthrough":[[0]],
            "right":[{"s":[0,1],"H":[[[1,0]]]},{"s":[0,-1],"H":[[[1,0]]]}],
            "left":[{"s":[0,2],"H":[[[1,0]]]},{"s":[0,-2],"H":[[[1,0]]]}]}"#;
        assert!(SampleSet::from_json(ok, "t").is_ok());
    }

    #[test]
    fn hermite_points_carry_derivatives() {
        let ss = random_stable(2, 4, 1, 1);
        let pts = conjugate_points(&[1.0, 3.0], 0.0);
        let set = generate_samples(&ss, &pts, &pts).unwrap();
        assert!(set.right.iter().chain(&set.left).all(|p| p.derivative.is_some()));
        let set = generate_samples(&ss, &pts, &conjugate_points(&[2.0], 0.0)).unwrap();
        assert!(set.right.iter().all(|p| p.derivative.is_none()));
    }

    #[test]
    fn metadata_is_ignored_on_read() {
        let ss = random_stable(3, 3, 1, 1);
        let set = generate_samples(&ss, &conjugate_points(&[1.0], 0.0), &conjugate_points(&[2.0], 0.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let meta = serde_json::json!({"config": {"offset": 0.0}});
        write_samples_with(&set, &path, Some(&meta)).unwrap();
        let raw: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(raw["config"]["offset"], 0.0);
        assert_eq!(read_samples(&path).unwrap(), set);
        let model = dir.path().join("m.json");
        ss.write_with(&model, Some(&meta)).unwrap();
        assert_eq!(StateSpace::read(&model).unwrap(), ss);
        assert!(write_samples_with(&set, &path, Some(&serde_json::json!([1]))).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn samples_match_transfer_and_conjugate(seed in 0u64..1000) {
            let ss = random_stable(seed, 4, 2, 2);
            let pts = conjugate_points(&[0.3, 2.0, 7.0], 0.1);
            let set = generate_samples(&ss, &pts, &conjugate_points(&[0.5, 4.0], 0.1)).unwrap();
            let dd = linalg::to_complex(&set.feedthrough);
            for pt in set.right.iter().chain(&set.left) {
                let g = eval_transfer(&ss, pt.s).unwrap();
                prop_assert!((&pt.value + &dd - &g).norm() <= 1e-13 * g.norm());
            }
            for k in 0..3 {
                let (a, b) = (&set.right[2 * k].value, &set.right[2 * k + 1].value);
                prop_assert!((a.map(|z| z.conj()) - b).norm() <= 1e-12 * a.norm());
            }
        }

        #[test]
        fn write_read_round_trip(seed in 0u64..1000) {
            let ss = random_stable(seed, 3, 2, 1);
            let set = generate_samples(&ss, &conjugate_points(&[1.0, 2.5], 0.0), &conjugate_points(&[1.0, 4.0], 0.0)).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.json");
            write_samples(&set, &path).unwrap();
            let back = read_samples(&path).unwrap();
            prop_assert_eq!(back, set);
        }
    }
}
