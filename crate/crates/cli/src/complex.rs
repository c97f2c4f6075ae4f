//! Complex literals written as "re+im i" strings: "0.6", "-0.8i",
//! "0.6+0.8i", "1e-3-2i", "i". Plain TOML numbers are accepted as reals.

use std::fmt;
use std::str::FromStr;

use conhist::C64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CNum(pub C64);

impl CNum {
    pub fn value(self) -> C64 {
        self.0
    }
}

impl From<C64> for CNum {
    fn from(z: C64) -> Self {
        CNum(z)
    }
}

impl fmt::Display for CNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let C64 { re, im } = self.0;
        if im == 0.0 {
            write!(f, "{re}")
        } else if re == 0.0 {
            write!(f, "{im}i")
        } else {
            write!(f, "{re}{im:+}i")
        }
    }
}

fn parse_real(s: &str, whole: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("invalid complex number {whole:?}"))
}

impl FromStr for CNum {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err("empty complex number".into());
        }
        let Some(body) = s.strip_suffix('i') else {
            return Ok(CNum(C64::new(parse_real(&s, text)?, 0.0)));
        };
        // split at the last sign that does not belong to an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (parse_real(&body[..k], text)?, &body[k..]),
            None => (0.0, body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_real(other, text)?,
        };
        Ok(CNum(C64::new(re, im)))
    }
}

impl Serialize for CNum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CNum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CVisitor;

        impl Visitor<'_> for CVisitor {
            type Value = CNum;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a complex string such as \"0.6+0.8i\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<CNum, E> {
                Ok(CNum(C64::new(v, 0.0)))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<CNum, E> {
                Ok(CNum(C64::new(v as f64, 0.0)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<CNum, E> {
                Ok(CNum(C64::new(v as f64, 0.0)))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<CNum, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(CVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> C64 {
        s.parse::<CNum>().unwrap().0
    }

    #[test]
    fn parses_forms() {
        assert_eq!(p("0.6"), C64::new(0.6, 0.0));
        assert_eq!(p("0.8i"), C64::new(0.0, 0.8));
        assert_eq!(p("0.6+0.8i"), C64::new(0.6, 0.8));
        assert_eq!(p("0.6 - 0.8 i"), C64::new(0.6, -0.8));
        assert_eq!(p("-i"), C64::new(0.0, -1.0));
        assert_eq!(p("i"), C64::new(0.0, 1.0));
        assert_eq!(p("1e-3+2.5e-1i"), C64::new(1e-3, 0.25));
        assert_eq!(p("-1E+2-1e-2i"), C64::new(-100.0, -0.01));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1+2", "1+2j", "++i", "nan"] {
            assert!(s.parse::<CNum>().is_err(), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        for z in [
            C64::new(0.0, 0.0),
            C64::new(-0.5, 0.0),
            C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2),
            C64::new(1e-20, 3.5),
            C64::new(0.6, -0.8),
        ] {
            assert_eq!(p(&CNum(z).to_string()), z);
        }
    }
}
