//! Shared text-format helpers: float formatting pinned to 17 significant
//! digits (exact round-trip for f64) and tokenized line reading.

/// Formats with 17 significant digits in scientific notation.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Non-blank, non-comment lines as (1-based line number, trimmed text).
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            None
        } else {
            Some((k + 1, line))
        }
    })
}

pub(crate) fn parse_f64(token: &str, line: usize) -> crate::error::Result<f64> {
    token.parse::<f64>().map_err(|_| crate::error::Error::Parse {
        line,
        msg: format!("expected a number, got '{token}'"),
    })
}

pub(crate) fn parse_usize(token: &str, line: usize) -> crate::error::Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| crate::error::Error::Parse {
            line,
            msg: format!("expected a non-negative integer, got '{token}'"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02214076e23,
            5e-324,
        ] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let text = "a 1\n\n# whole line\nb 2 # trailing\n";
        let lines: Vec<_> = content_lines(text).collect();
        assert_eq!(lines, vec![(1, "a 1"), (4, "b 2")]);
    }
}
