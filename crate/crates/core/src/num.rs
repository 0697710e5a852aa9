//! Serde helpers that write integral floats as JSON integers, so sample
//! indices stored as `f64` read naturally (`100` rather than `100.0`).

use serde::ser::SerializeSeq;
use serde::Serializer;

const EXACT: f64 = 9_007_199_254_740_992.0;

fn is_integral(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0 && x.abs() < EXACT
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if is_integral(*x) {
        s.serialize_i64(*x as i64)
    } else {
        s.serialize_f64(*x)
    }
}

pub fn serialize_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if is_integral(*x) {
            seq.serialize_element(&(*x as i64))?;
        } else {
            seq.serialize_element(x)?;
        }
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    #[derive(serde::Serialize)]
    struct T {
        #[serde(serialize_with = "super::serialize")]
        a: f64,
        #[serde(serialize_with = "super::serialize_vec")]
        b: Vec<f64>,
    }

    #[test]
    fn integral_values_drop_the_fraction() {
        let t = T {
            a: 100.0,
            b: vec![1.0, 2.5, -3.0],
        };
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"a":100,"b":[1,2.5,-3]}"#);
    }
}
