//! Recursive-descent parser for polynomial expressions in `x` and `y`.
//!
//! Grammar (whitespace insignificant between tokens):
//!
//! ```text
//! expr   := ('+'|'-')? term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := coeff | var pow? | '(' expr ')'
//! var    := 'x' | 'y'
//! pow    := '^' uint
//! coeff  := int | decimal | '(' int '/' int ')'
//! ```
//!
//! Coefficients are kept exact: decimals become scaled integers and
//! fractions stay fractions. The expanded result is rejected above
//! [`MAX_DEGREE`](super::MAX_DEGREE).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Poly2, PolyError, MAX_DEGREE};

pub fn parse_poly(text: &str) -> Result<Poly2, PolyError> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.err("empty expression"));
    }
    let poly = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.err("unexpected trailing input"));
    }
    check_degree(&poly)?;
    Ok(poly)
}

fn check_degree(p: &Poly2) -> Result<(), PolyError> {
    if p.degree() > MAX_DEGREE {
        Err(PolyError::Overflow { degree: p.degree() })
    } else {
        Ok(())
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> PolyError {
        PolyError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly2, PolyError> {
        self.skip_ws();
        let mut negate = false;
        if self.eat(b'-') {
            negate = true;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => break,
            }
            check_degree(&acc)?;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly2, PolyError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let f = self.factor()?;
                acc = acc.mul(&f);
                check_degree(&acc)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly2, PolyError> {
        self.skip_ws();
        match self.peek() {
            Some(b'x') | Some(b'y') => {
                let var = self.bump().unwrap();
                let exp = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.uint()?
                } else {
                    1
                };
                if exp > MAX_DEGREE {
                    return Err(PolyError::Overflow { degree: exp });
                }
                let (i, j) = if var == b'x' { (exp, 0) } else { (0, exp) };
                let mut coeffs = vec![BigRational::zero(); (i + 1) * (j + 1)];
                *coeffs.last_mut().unwrap() = BigRational::one();
                Ok(Poly2::from_rational_grid(coeffs, i + 1, j + 1))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                Ok(Poly2::constant(n))
            }
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                // A parenthesized integer fraction is a coefficient; anything
                // else reopens as a grouped subexpression.
                if let Some(frac) = self.try_fraction() {
                    return Ok(Poly2::constant(frac?));
                }
                self.pos = open + 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(_) => Err(self.err("expected coefficient, variable, or '('")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    /// Attempt `int '/' int ')'` right after an opening parenthesis.
    /// Returns None (with position restored by the caller) when the contents
    /// are not a fraction.
    fn try_fraction(&mut self) -> Option<Result<BigRational, PolyError>> {
        let start = self.pos;
        self.skip_ws();
        let neg = self.eat(b'-');
        let numer = match self.raw_digits() {
            Some(d) => d,
            None => {
                self.pos = start;
                return None;
            }
        };
        self.skip_ws();
        if !self.eat(b'/') {
            self.pos = start;
            return None;
        }
        self.skip_ws();
        let denom = match self.raw_digits() {
            Some(d) => d,
            None => return Some(Err(self.err("expected denominator digits"))),
        };
        self.skip_ws();
        if !self.eat(b')') {
            return Some(Err(self.err("expected ')' after fraction")));
        }
        let mut n: BigInt = numer.parse().unwrap();
        let d: BigInt = denom.parse().unwrap();
        if d.is_zero() {
            return Some(Err(PolyError::Syntax {
                offset: start,
                message: "zero denominator".to_string(),
            }));
        }
        if neg {
            n = -n;
        }
        Some(Ok(BigRational::new(n, d)))
    }

    fn raw_digits(&mut self) -> Option<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            Some(std::str::from_utf8(&self.bytes[start..self.pos]).unwrap().to_string())
        }
    }

    fn uint(&mut self) -> Result<usize, PolyError> {
        let d = self.raw_digits().ok_or_else(|| self.err("expected exponent digits"))?;
        d.parse().map_err(|_| self.err("exponent out of range"))
    }

    /// Integer or decimal literal, exact.
    fn number(&mut self) -> Result<BigRational, PolyError> {
        let int_part = self.raw_digits().ok_or_else(|| self.err("expected digits"))?;
        let mut numer: BigInt = int_part.parse().unwrap();
        let mut denom = BigInt::one();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let frac = self.raw_digits().ok_or_else(|| self.err("expected digits after '.'"))?;
            for c in frac.bytes() {
                numer = numer * 10 + BigInt::from((c - b'0') as u32);
                denom *= 10;
            }
        }
        Ok(BigRational::new(numer, denom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use proptest::prelude::*;

    #[test]
    fn parses_unit_circle() {
        let p = parse_poly("x^2 + y^2 - 1").unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(Point::new(1.0, 0.0)), 0.0);
        assert_eq!(p.eval(Point::new(0.0, 0.0)), -1.0);
    }

    #[test]
    fn parses_fraction_coefficient() {
        let p = parse_poly("(1/4)*x^2 + y^2 - 1").unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(Point::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn parses_decimals_exactly() {
        let p = parse_poly("0.25*x^2 - 1").unwrap();
        let q = parse_poly("(1/4)*x^2 - 1").unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parenthesized_subexpression() {
        let p = parse_poly("(x + y)*(x - y)").unwrap();
        assert_eq!(p, parse_poly("x^2 - y^2").unwrap());
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse_poly("x^2 + $") {
            Err(PolyError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_poly("").is_err());
        assert!(parse_poly("x^2 +").is_err());
        assert!(parse_poly("(1/0)").is_err());
    }

    #[test]
    fn degree_overflow_rejected() {
        assert_eq!(
            parse_poly("x^65"),
            Err(PolyError::Overflow { degree: 65 })
        );
        assert!(parse_poly("x^64").is_ok());
        assert!(matches!(
            parse_poly("x^40*x^40"),
            Err(PolyError::Overflow { .. })
        ));
    }

    proptest! {
        /// print -> parse is the identity on coefficients.
        #[test]
        fn display_parse_round_trip(
            terms in proptest::collection::vec(
                (0usize..6, 0usize..6, -40i32..40, 1u32..9),
                1..10,
            )
        ) {
            use num_bigint::BigInt;
            use num_rational::BigRational;
            use num_traits::Zero;
            let nx = terms.iter().map(|t| t.0).max().unwrap() + 1;
            let ny = terms.iter().map(|t| t.1).max().unwrap() + 1;
            let mut grid = vec![BigRational::zero(); nx * ny];
            for &(i, j, n, d) in &terms {
                grid[i * ny + j] += BigRational::new(BigInt::from(n), BigInt::from(d));
            }
            let p = Poly2::from_rational_grid(grid, nx, ny);
            let printed = p.to_string();
            let reparsed = parse_poly(&printed).unwrap();
            prop_assert_eq!(reparsed, p);
        }
    }
}
