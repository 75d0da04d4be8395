use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Symbolic description of a compact connected subgroup `K` of `U(N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupSpec {
    /// `U(N)`.
    FullUnitary(usize),
    /// `SU(N)`.
    SpecialUnitary(usize),
    /// One-parameter torus `{ diag(e^{i a_1 t}, ..., e^{i a_N t}) }`.
    Torus(Vec<i64>),
    /// `SU(2) (x) ... (x) SU(2)`, `n` factors.
    Local(usize),
    TensorProd(Box<GroupSpec>, Box<GroupSpec>),
    DirectSum(Box<GroupSpec>, Box<GroupSpec>),
}

impl GroupSpec {
    pub fn torus(weights: Vec<i64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().all(|&w| w == 0) {
            return Err(Error::InvalidArgument(
                "torus weights must be non-empty and not all zero".into(),
            ));
        }
        Ok(Self::Torus(weights))
    }

    pub fn prod(a: GroupSpec, b: GroupSpec) -> Self {
        Self::TensorProd(Box::new(a), Box::new(b))
    }

    pub fn sum(a: GroupSpec, b: GroupSpec) -> Self {
        Self::DirectSum(Box::new(a), Box::new(b))
    }

    /// Dimension `N` of the space the group acts on.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::FullUnitary(n) | Self::SpecialUnitary(n) => *n,
            Self::Torus(w) => w.len(),
            Self::Local(n) => 1usize << n,
            Self::TensorProd(a, b) => a.ambient_dim() * b.ambient_dim(),
            Self::DirectSum(a, b) => a.ambient_dim() + b.ambient_dim(),
        }
    }

    /// Checks the structural invariants; parsed specs always satisfy them.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FullUnitary(0) | Self::SpecialUnitary(0) | Self::Local(0) => Err(
                Error::InvalidArgument(format!("{self}: dimension must be positive")),
            ),
            Self::Local(n) if *n > 16 => Err(Error::InvalidArgument(format!(
                "{self}: too many factors"
            ))),
            Self::Torus(w) if w.is_empty() || w.iter().all(|&x| x == 0) => Err(
                Error::InvalidArgument("torus weights must not all be zero".into()),
            ),
            Self::TensorProd(a, b) | Self::DirectSum(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FullUnitary(n) => write!(f, "u({n})"),
            Self::SpecialUnitary(n) => write!(f, "su({n})"),
            Self::Torus(w) => {
                let ws: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "torus({})", ws.join(","))
            }
            Self::Local(n) => write!(f, "loc({n})"),
            Self::TensorProd(a, b) => write!(f, "prod({a},{b})"),
            Self::DirectSum(a, b) => write!(f, "sum({a},{b})"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let cleaned: Vec<char> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .flat_map(|c| c.to_lowercase())
            .collect();
        let mut p = Parser { s: &cleaned, pos: 0 };
        let spec = p.spec()?;
        if p.pos != cleaned.len() {
            return Err(p.err("trailing input"));
        }
        spec.validate()?;
        Ok(spec)
    }
}

struct Parser<'a> {
    s: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        let text: String = self.s.iter().collect();
        Error::Parse(format!("group spec '{text}' at {}: {msg}", self.pos))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        self.s[start..self.pos].iter().collect()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn int(&mut self) -> Result<i64> {
        let start = self.pos;
        if matches!(self.s.get(self.pos), Some('-') | Some('+')) {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text: String = self.s[start..self.pos].iter().collect();
        text.parse().map_err(|_| self.err("expected integer"))
    }

    fn count(&mut self) -> Result<usize> {
        let v = self.int()?;
        usize::try_from(v).map_err(|_| self.err("expected non-negative integer"))
    }

    fn spec(&mut self) -> Result<GroupSpec> {
        let name = self.ident();
        self.expect('(')?;
        let spec = match name.as_str() {
            "u" => GroupSpec::FullUnitary(self.count()?),
            "su" => GroupSpec::SpecialUnitary(self.count()?),
            "loc" => GroupSpec::Local(self.count()?),
            "torus" => {
                let mut w = vec![self.int()?];
                while self.s.get(self.pos) == Some(&',') {
                    self.pos += 1;
                    w.push(self.int()?);
                }
                GroupSpec::Torus(w)
            }
            "sum" | "prod" => {
                let a = self.spec()?;
                self.expect(',')?;
                let b = self.spec()?;
                if name == "sum" {
                    GroupSpec::sum(a, b)
                } else {
                    GroupSpec::prod(a, b)
                }
            }
            other => return Err(self.err(&format!("unknown group '{other}'"))),
        };
        self.expect(')')?;
        Ok(spec)
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar() {
        let s: GroupSpec = " PROD( u(2) , Su(3) ) ".parse().unwrap();
        assert_eq!(
            s,
            GroupSpec::prod(GroupSpec::FullUnitary(2), GroupSpec::SpecialUnitary(3))
        );
        assert_eq!(s.to_string(), "prod(u(2),su(3))");
        assert_eq!(s.ambient_dim(), 6);

        let t: GroupSpec = "torus(1, -1)".parse().unwrap();
        assert_eq!(t, GroupSpec::Torus(vec![1, -1]));
        let l: GroupSpec = "sum(loc(2),torus(3))".parse().unwrap();
        assert_eq!(l.ambient_dim(), 5);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["u(0)", "torus(0,0)", "foo(2)", "u(2", "prod(u(2))", "u(2)x", "loc(-1)"] {
            assert!(bad.parse::<GroupSpec>().is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["u(4)", "su(3)", "torus(1,-1,2)", "loc(3)", "sum(prod(u(2),loc(1)),su(2))"] {
            let g: GroupSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
    }
}
