//! Matrix and field dumps. Matrices go out as `sym-coo v1 <N>` followed by
//! upper-triangle `row col value` triples; fields as `field v1 <N>` followed
//! by `dof value` lines.

use crate::error::{Error, Result};
use crate::sparse::{SymCsr, SymTriplets};
use crate::textio::{content_lines, fmt_g17, parse_f64, parse_usize};

pub fn write_matrix(m: &SymCsr) -> String {
    let mut out = format!("sym-coo v1 {}\n", m.dim());
    for (i, j, v) in m.upper_entries() {
        out.push_str(&format!("{i} {j} {}\n", fmt_g17(v)));
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<SymCsr> {
    let mut lines = content_lines(text);
    let n = match lines.next() {
        Some((lineno, line)) => {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 3 || tokens[0] != "sym-coo" || tokens[1] != "v1" {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected header 'sym-coo v1 <N>', got '{line}'"),
                });
            }
            parse_usize(tokens[2], lineno)?
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty matrix file".to_string(),
            })
        }
    };
    let mut t = SymTriplets::new(n);
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: "matrix lines read: <row> <col> <value>".to_string(),
            });
        }
        let i = parse_usize(tokens[0], lineno)?;
        let j = parse_usize(tokens[1], lineno)?;
        if i > j {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("lower-triangle entry ({i}, {j}) in a sym-coo dump"),
            });
        }
        if j >= n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("index ({i}, {j}) outside a {n}x{n} matrix"),
            });
        }
        t.add(i, j, parse_f64(tokens[2], lineno)?);
    }
    Ok(t.freeze())
}

pub fn write_field(values: &[f64]) -> String {
    let mut out = format!("field v1 {}\n", values.len());
    for (dof, &v) in values.iter().enumerate() {
        out.push_str(&format!("{dof} {}\n", fmt_g17(v)));
    }
    out
}

pub fn parse_field(text: &str) -> Result<Vec<f64>> {
    let mut lines = content_lines(text);
    let n = match lines.next() {
        Some((lineno, line)) => {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 3 || tokens[0] != "field" || tokens[1] != "v1" {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected header 'field v1 <N>', got '{line}'"),
                });
            }
            parse_usize(tokens[2], lineno)?
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty field file".to_string(),
            })
        }
    };
    let mut values = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: "field lines read: <dof> <value>".to_string(),
            });
        }
        let dof = parse_usize(tokens[0], lineno)?;
        if dof >= n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("DOF {dof} outside a field of {n}"),
            });
        }
        if seen[dof] {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("DOF {dof} listed twice"),
            });
        }
        seen[dof] = true;
        values[dof] = parse_f64(tokens[1], lineno)?;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::invalid(format!(
            "field dump is missing DOF {missing}"
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let mut t = SymTriplets::new(3);
        t.add(0, 0, 2.0);
        t.add(0, 1, -1.0 / 3.0);
        t.add(2, 2, 0.1);
        let m = t.freeze();
        let text = write_matrix(&m);
        assert!(text.starts_with("sym-coo v1 3\n"));
        let back = parse_matrix(&text).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j).to_bits(), back.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn field_round_trip() {
        let values = vec![1.0, -0.5, 1.0 / 3.0];
        let text = write_field(&values);
        let back = parse_field(&text).unwrap();
        assert_eq!(values.len(), back.len());
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_dumps() {
        assert!(parse_matrix("sym-coo v2 3\n").is_err());
        assert!(parse_matrix("sym-coo v1 2\n1 0 5.0\n").is_err());
        assert!(parse_matrix("sym-coo v1 2\n0 5 1.0\n").is_err());
        assert!(parse_field("field v1 2\n0 1.0\n").is_err());
        assert!(parse_field("field v1 2\n0 1.0\n0 2.0\n1 0.0\n").is_err());
    }
}
