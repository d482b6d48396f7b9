use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Body, Ellipsoid, Source};
use crate::error::{Error, Result};

/// Square matrix given either flat in row-major order or as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRepr {
    pub fn to_matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        match self {
            MatrixRepr::Flat(v) => {
                if v.len() != n * n {
                    return Err(Error::body(format!(
                        "matrix must have n² = {} entries, got {}",
                        n * n,
                        v.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(n, n, v))
            }
            MatrixRepr::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::body(format!("matrix must be {n}×{n}")));
                }
                Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
            }
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRepr::Flat(m.transpose().iter().copied().collect())
    }
}

/// JSON form of a [`Body`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    Ball {
        n: usize,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Ellipsoid {
        n: usize,
        matrix: MatrixRepr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Cube {
        n: usize,
        half_width: f64,
    },
    PolytopeV {
        n: usize,
        vertices: Vec<Vec<f64>>,
    },
    PolytopeH {
        n: usize,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

fn center_vec(n: usize, c: &Option<Vec<f64>>) -> Result<DVector<f64>> {
    match c {
        None => Ok(DVector::zeros(n)),
        Some(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
        Some(v) => Err(Error::body(format!("center must have {n} coordinates, got {}", v.len()))),
    }
}

fn nonzero_center(c: &DVector<f64>) -> Option<Vec<f64>> {
    c.iter().any(|&x| x != 0.0).then(|| c.iter().copied().collect())
}

impl BodySpec {
    pub fn build(&self) -> Result<Body> {
        match self {
            BodySpec::Ball { n, radius, center } => Body::ball_at(*n, *radius, center_vec(*n, center)?),
            BodySpec::Ellipsoid { n, matrix, center } => {
                let m = matrix.to_matrix(*n)?;
                Ok(Body::Ellipsoid(Ellipsoid::new(m, Some(center_vec(*n, center)?))?))
            }
            BodySpec::Cube { n, half_width } => Body::cube(*n, *half_width),
            BodySpec::PolytopeV { n, vertices } => Body::polytope_v(*n, vertices.clone()),
            BodySpec::PolytopeH { n, a, b } => {
                if let Some(row) = a.iter().find(|r| r.len() != *n) {
                    return Err(Error::body(format!(
                        "rows of A must have {n} entries, got {}",
                        row.len()
                    )));
                }
                let m = DMatrix::from_fn(a.len(), *n, |r, c| a[r][c]);
                Body::polytope_h(m, b.clone())
            }
        }
    }

    pub fn parse(json: &str) -> Result<Body> {
        let parsed: BodySpec = serde_json::from_str(json)?;
        parsed.build()
    }
}

impl Body {
    pub fn to_spec(&self) -> BodySpec {
        match self {
            Body::Ball { n, radius, center } => BodySpec::Ball {
                n: *n,
                radius: *radius,
                center: nonzero_center(center),
            },
            Body::Ellipsoid(e) => BodySpec::Ellipsoid {
                n: e.n(),
                matrix: MatrixRepr::from_matrix(e.matrix()),
                center: nonzero_center(e.center()),
            },
            Body::Cube { n, half_width } => BodySpec::Cube {
                n: *n,
                half_width: *half_width,
            },
            Body::PolytopeV(p) | Body::PolytopeH(p) => match &p.source {
                Source::V(v) => BodySpec::PolytopeV {
                    n: p.n,
                    vertices: v.clone(),
                },
                Source::H(a, b) => BodySpec::PolytopeH {
                    n: p.n,
                    a: (0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect(),
                    b: b.clone(),
                },
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_spec()).expect("body specs always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let c = BodySpec::parse(r#"{"type":"cube","n":3,"half_width":1}"#).unwrap();
        assert_eq!(c.volume(), 8.0);
        let e = BodySpec::parse(r#"{"type":"ellipsoid","n":2,"matrix":[2,0,0,0.5]}"#).unwrap();
        assert!((e.volume() - std::f64::consts::PI).abs() < 1e-12);
        let e2 = BodySpec::parse(r#"{"type":"ellipsoid","n":2,"matrix":[[2,0],[0,0.5]]}"#).unwrap();
        assert_eq!(e, e2);
        let h = BodySpec::parse(r#"{"type":"polytope_h","n":1,"A":[[1],[-1]],"b":[1,2]}"#).unwrap();
        assert_eq!(h.volume(), 3.0);
    }

    #[test]
    fn first_violation_reported() {
        let err = BodySpec::parse(r#"{"type":"ellipsoid","n":2,"matrix":[1,0.5,0,1]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("not symmetric"), "{err}");
        let err = BodySpec::parse(r#"{"type":"ellipsoid","n":2,"matrix":[1,0,0,-1]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("positive definite"), "{err}");
        let err = BodySpec::parse(r#"{"type":"ball","n":3,"radius":-1}"#).unwrap_err().to_string();
        assert!(err.contains("radius"), "{err}");
        assert!(BodySpec::parse(r#"{"type":"sphere","n":3}"#).is_err());
    }

    #[test]
    fn round_trip() {
        for json in [
            r#"{"type":"ball","n":3,"radius":2.0}"#,
            r#"{"type":"ball","n":2,"radius":1.0,"center":[0.5,0.0]}"#,
            r#"{"type":"ellipsoid","n":2,"matrix":[2.0,0.1,0.1,0.5]}"#,
            r#"{"type":"cube","n":4,"half_width":0.5}"#,
            r#"{"type":"polytope_v","n":2,"vertices":[[1,0],[0,1],[-1,-1],[0,0]]}"#,
            r#"{"type":"polytope_h","n":2,"A":[[1,0],[0,1],[-1,-1]],"b":[1,1,1]}"#,
        ] {
            let body = BodySpec::parse(json).unwrap();
            let again = BodySpec::parse(&body.to_json().to_string()).unwrap();
            assert_eq!(body, again, "{json}");
        }
    }
}
