use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::solver::{solve_elastic_net, ElasticNetParams, SparseCode};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub concept_id: usize,
    pub name: String,
    pub coefficient: f64,
}

/// Decomposes `z` and lists the `top_m` non-zero coefficients by descending
/// magnitude (ties by ascending id).
pub fn decomposition_report<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    names: &[String],
    params: &ElasticNetParams<T>,
    top_m: usize,
) -> Result<(Vec<ReportRow>, SparseCode<T>)> {
    if names.len() != dict.ncols() {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: dict.ncols(),
        });
    }
    let code = solve_elastic_net(z, dict, params)?;
    let mut rows: Vec<ReportRow> = code
        .indices
        .iter()
        .zip(&code.values)
        .map(|(&j, &v)| ReportRow {
            concept_id: j,
            name: names[j].clone(),
            coefficient: v.as_f64(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.coefficient
            .abs()
            .total_cmp(&a.coefficient.abs())
            .then(a.concept_id.cmp(&b.concept_id))
    });
    rows.truncate(top_m);
    Ok((rows, code))
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("concept_id,name,coefficient\n");
    for r in rows {
        let name = if r.name.contains([',', '"', '\n']) {
            format!("\"{}\"", r.name.replace('"', "\"\""))
        } else {
            r.name.clone()
        };
        out.push_str(&format!("{},{},{}\n", r.concept_id, name, r.coefficient));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_by_magnitude() {
        let d = DMatrix::<f64>::identity(3, 3);
        let z = DVector::from_vec(vec![0.5, -2.0, 0.01]);
        let names: Vec<String> = ["a", "b,c", "d"].iter().map(|s| s.to_string()).collect();
        let (rows, _) = decomposition_report(&z, &d, &names, &ElasticNetParams::new(0.05, 1.0), 10).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].concept_id, 1);
        let csv = report_csv(&rows);
        assert!(csv.starts_with("concept_id,name,coefficient\n1,\"b,c\","));
    }
}
