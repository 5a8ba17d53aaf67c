//! Parser for masks written as Laurent polynomials,
//! e.g. `a(z) = 1/8 + 1/2 z + 3/4 z^2 + 1/2*z^3 + 1/8 z^4`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, t: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, what: &str) -> Result<T> {
        Err(Error::Parse(format!("{what} at byte {}", self.pos)))
    }

    fn number(&mut self) -> Result<Option<f64>> {
        self.skip_ws();
        let start = self.pos;
        let s = self.s;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i == start {
            return Ok(None);
        }
        // exponent part, e.g. 1e-3
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        self.pos = i;
        text.parse::<f64>()
            .map(Some)
            .or_else(|_| self.err(&format!("bad number `{text}`")))
    }

    fn integer(&mut self) -> Result<i64> {
        let paren = self.eat(b'(');
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer exponent");
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii slice");
        let v: i64 = text
            .parse()
            .or_else(|_| self.err("exponent out of range"))?;
        if paren && !self.eat(b')') {
            return self.err("expected `)`");
        }
        Ok(if neg { -v } else { v })
    }
}

/// Parses a Laurent polynomial in `z` into (exponent → coefficient).
/// Repeated exponents are summed.
pub fn parse_laurent(text: &str) -> Result<BTreeMap<i64, f64>> {
    let body = match text.find('=') {
        Some(eq) => {
            let lhs = text[..eq].trim();
            if !lhs.is_empty() && !lhs.chars().all(|c| c.is_alphanumeric() || "()_ ".contains(c)) {
                return Err(Error::Parse(format!("unexpected left-hand side `{lhs}`")));
            }
            &text[eq + 1..]
        }
        None => text,
    };
    let mut cur = Cursor {
        s: body.as_bytes(),
        pos: 0,
    };
    let mut terms = BTreeMap::new();
    let mut first = true;
    loop {
        if cur.peek().is_none() {
            if first {
                return cur.err("empty polynomial");
            }
            break;
        }
        let mut sign = 1.0;
        if cur.eat(b'-') {
            sign = -1.0;
        } else if !cur.eat(b'+') && !first {
            return cur.err("expected `+` or `-`");
        }
        first = false;
        let parsed = cur.number()?;
        let had_number = parsed.is_some();
        let mut coeff = match parsed {
            Some(c) => {
                if cur.eat(b'/') {
                    let d = match cur.number()? {
                        Some(d) => d,
                        None => return cur.err("expected denominator"),
                    };
                    c / d
                } else {
                    c
                }
            }
            None => 1.0,
        };
        cur.eat(b'*');
        let exponent = if cur.eat(b'z') {
            if cur.eat_str("**") || cur.eat(b'^') {
                cur.integer()?
            } else {
                1
            }
        } else {
            if !had_number {
                return cur.err("expected coefficient or `z`");
            }
            0
        };
        coeff *= sign;
        if !coeff.is_finite() {
            return Err(Error::NonFinite);
        }
        *terms.entry(exponent).or_insert(0.0) += coeff;
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_text() {
        let t = parse_laurent("a(z) = 1/8 + 1/2 z + 3/4 z^2 + 1/2*z^3 + 1/8 z^4").unwrap();
        let v: Vec<(i64, f64)> = t.into_iter().collect();
        assert_eq!(v, vec![(0, 0.125), (1, 0.5), (2, 0.75), (3, 0.5), (4, 0.125)]);
    }

    #[test]
    fn negative_exponents_and_repeats() {
        let t = parse_laurent("-0.0625*z^-3 + 0.5625 z^(-1) + 1 + 0.5625z - 0.0625 z**3 + z").unwrap();
        assert_eq!(t[&-3], -0.0625);
        assert_eq!(t[&-1], 0.5625);
        assert_eq!(t[&0], 1.0);
        assert_eq!(t[&1], 1.5625);
        assert_eq!(t[&3], -0.0625);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_laurent("").is_err());
        assert!(parse_laurent("1 2").is_err());
        assert!(parse_laurent("z^").is_err());
        assert!(parse_laurent("1/0").is_err());
        assert!(parse_laurent("x = 1 + y").is_err());
    }
}
