//! Complex arguments written as `re+imi`, e.g. `0+1i`, `-0.5-2e-3i`, `1i`, `0.7`.

use num_complex::Complex64 as C64;

pub fn parse_complex(s: &str) -> Result<C64, String> {
    let s = s.trim();
    let bad = || format!("cannot read {s:?} as a complex number (expected re+imi, e.g. 0+1i)");
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(num(s)?, 0.0));
    };
    // the sign that starts the imaginary part is the last one not opening an
    // exponent and not at the very start
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(j) => (num(&body[..j])?, &body[j..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => num(other)?,
    };
    Ok(C64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_complex("0+1i"), Ok(C64::new(0.0, 1.0)));
        assert_eq!(parse_complex("i"), Ok(C64::new(0.0, 1.0)));
        assert_eq!(parse_complex("-i"), Ok(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("0.3-0.4i"), Ok(C64::new(0.3, -0.4)));
        assert_eq!(parse_complex("-2.5"), Ok(C64::new(-2.5, 0.0)));
        assert_eq!(parse_complex("1e-3+2E+1i"), Ok(C64::new(1e-3, 20.0)));
        assert_eq!(parse_complex("-1e-3-2i"), Ok(C64::new(-1e-3, -2.0)));
        assert_eq!(parse_complex("0.5i"), Ok(C64::new(0.0, 0.5)));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("abc").is_err());
    }
}
