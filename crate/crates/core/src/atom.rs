//! Atom specifications: nuclear charge plus a closed-shell occupation list,
//! with the plain-text config format and shell-string syntax used by the CLI.

use crate::error::{HfError, Result};
use serde::{Deserialize, Serialize};

pub const L_LETTERS: [char; 5] = ['s', 'p', 'd', 'f', 'g'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shell {
    pub n: u32,
    pub l: u32,
    pub occupancy: u32,
}

impl Shell {
    pub fn label(&self) -> String {
        let letter = L_LETTERS.get(self.l as usize).copied().unwrap_or('?');
        format!("{}{}", self.n, letter)
    }

    pub fn max_occupancy(&self) -> u32 {
        2 * (2 * self.l + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub z: u32,
    pub shells: Vec<Shell>,
}

impl AtomSpec {
    /// Validated constructor. Shells must be distinct, consistent with
    /// n > l >= 0, and closed: full for l > 0, occupancy 1 or 2 for s
    /// shells (a lone s electron is still spherically symmetric).
    pub fn new(z: u32, mut shells: Vec<Shell>) -> Result<Self> {
        if z == 0 {
            return Err(HfError::Config("nuclear charge Z must be positive".into()));
        }
        if shells.is_empty() {
            return Err(HfError::Config("at least one occupied shell required".into()));
        }
        for s in &shells {
            if s.l >= s.n {
                return Err(HfError::Config(format!(
                    "shell {} violates n > l",
                    s.label()
                )));
            }
            if s.occupancy == 0 || s.occupancy > s.max_occupancy() {
                return Err(HfError::Config(format!(
                    "shell {} occupancy {} out of range 1..={}",
                    s.label(),
                    s.occupancy,
                    s.max_occupancy()
                )));
            }
            if s.occupancy != s.max_occupancy() && !(s.l == 0 && s.occupancy == 1) {
                return Err(HfError::Config(format!(
                    "open shell {}^{} rejected: only closed shells (and single s electrons) are supported",
                    s.label(),
                    s.occupancy
                )));
            }
        }
        shells.sort_by_key(|s| (s.l, s.n));
        for w in shells.windows(2) {
            if w[0].n == w[1].n && w[0].l == w[1].l {
                return Err(HfError::Config(format!(
                    "duplicate shell {}",
                    w[0].label()
                )));
            }
        }
        Ok(AtomSpec { z, shells })
    }

    pub fn electron_count(&self) -> u32 {
        self.shells.iter().map(|s| s.occupancy).sum()
    }

    pub fn is_neutral(&self) -> bool {
        self.electron_count() == self.z
    }

    pub fn max_l(&self) -> u32 {
        self.shells.iter().map(|s| s.l).max().unwrap_or(0)
    }

    pub fn shells_with_l(&self, l: u32) -> impl Iterator<Item = &Shell> {
        self.shells.iter().filter(move |s| s.l == l)
    }

    /// Occupied-state count for angular momentum l (the n_{l_o} of the
    /// Levinson bookkeeping).
    pub fn occupied_count_l(&self, l: u32) -> usize {
        self.shells_with_l(l).count()
    }

    /// Parse `1s2 2s2 2p6`-style shell strings.
    pub fn parse_shells(text: &str) -> Result<Vec<Shell>> {
        let mut shells = Vec::new();
        for token in text.split_whitespace() {
            let mut chars = token.chars().peekable();
            let mut n_str = String::new();
            while let Some(c) = chars.peek() {
                if c.is_ascii_digit() {
                    n_str.push(*c);
                    chars.next();
                } else {
                    break;
                }
            }
            let letter = chars
                .next()
                .ok_or_else(|| HfError::Config(format!("bad shell token `{token}`")))?;
            let occ_str: String = chars.collect();
            let n: u32 = n_str
                .parse()
                .map_err(|_| HfError::Config(format!("bad principal number in `{token}`")))?;
            let l = L_LETTERS
                .iter()
                .position(|&c| c == letter)
                .ok_or_else(|| {
                    HfError::Config(format!("unknown angular letter `{letter}` in `{token}`"))
                })? as u32;
            let occupancy: u32 = occ_str
                .parse()
                .map_err(|_| HfError::Config(format!("bad occupancy in `{token}`")))?;
            shells.push(Shell { n, l, occupancy });
        }
        if shells.is_empty() {
            return Err(HfError::Config("empty shell list".into()));
        }
        Ok(shells)
    }

    /// Closed-shell atoms known by name.
    pub fn named(symbol: &str) -> Option<AtomSpec> {
        let (z, shells) = match symbol {
            "H" => (1, "1s1"),
            "He" => (2, "1s2"),
            "Be" => (4, "1s2 2s2"),
            "Ne" => (10, "1s2 2s2 2p6"),
            "Mg" => (12, "1s2 2s2 2p6 3s2"),
            "Ar" => (18, "1s2 2s2 2p6 3s2 3p6"),
            "Ca" => (20, "1s2 2s2 2p6 3s2 3p6 4s2"),
            "Kr" => (36, "1s2 2s2 2p6 3s2 3p6 3d10 4s2 4p6"),
            _ => return None,
        };
        Some(AtomSpec::new(z, Self::parse_shells(shells).ok()?).expect("table is valid"))
    }

    /// Plain-text key-value config:
    /// ```text
    /// Z = 18
    /// shells = 1s2 2s2 2p6 3s2 3p6
    /// ```
    pub fn from_config_text(text: &str) -> Result<AtomSpec> {
        let mut z: Option<u32> = None;
        let mut shells: Option<Vec<Shell>> = None;
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HfError::Config(format!("expected key = value, got `{line}`")))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "z" => {
                    z = Some(value.trim().parse().map_err(|_| {
                        HfError::Config(format!("bad Z value `{}`", value.trim()))
                    })?)
                }
                "shells" => shells = Some(Self::parse_shells(value)?),
                other => {
                    return Err(HfError::Config(format!("unknown config key `{other}`")));
                }
            }
        }
        let z = z.ok_or_else(|| HfError::Config("config missing Z".into()))?;
        let shells = shells.ok_or_else(|| HfError::Config("config missing shells".into()))?;
        AtomSpec::new(z, shells)
    }

    /// Slater-rule screened charge for a shell, used to seed the SCF with
    /// hydrogenic orbitals (deterministic, reproducible traces).
    pub fn slater_screened_charge(&self, target: &Shell) -> f64 {
        let mut s = 0.0;
        let group_n = target.n;
        let in_d_or_f = target.l >= 2;
        for other in &self.shells {
            for e in 0..other.occupancy {
                // skip the target electron itself once
                let same_shell = other.n == target.n && other.l == target.l;
                if same_shell && e == 0 {
                    continue;
                }
                let same_group = if in_d_or_f {
                    same_shell
                } else {
                    other.n == group_n && other.l <= 1 && target.l <= 1
                };
                if same_group {
                    s += if group_n == 1 { 0.30 } else { 0.35 };
                } else if in_d_or_f {
                    if other.n <= group_n {
                        s += 1.0;
                    }
                } else if other.n + 1 == group_n {
                    s += 0.85;
                } else if other.n + 1 < group_n {
                    s += 1.0;
                }
                // shells above the target group do not screen
            }
        }
        (self.z as f64 - s).max(0.65)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_validate() {
        let ar = AtomSpec::named("Ar").unwrap();
        assert_eq!(ar.z, 18);
        assert_eq!(ar.electron_count(), 18);
        assert!(ar.is_neutral());
        assert_eq!(ar.max_l(), 1);
        assert_eq!(ar.occupied_count_l(0), 3);
        assert_eq!(ar.occupied_count_l(1), 2);

        // ions with closed shells allowed
        let ion = AtomSpec::new(18, AtomSpec::parse_shells("1s2 2s2 2p6").unwrap()).unwrap();
        assert!(!ion.is_neutral());

        // open shells rejected
        assert!(AtomSpec::new(5, AtomSpec::parse_shells("1s2 2s2 2p1").unwrap()).is_err());
        // n <= l rejected
        assert!(AtomSpec::new(3, vec![Shell { n: 1, l: 1, occupancy: 6 }]).is_err());
        // over-occupancy rejected
        assert!(AtomSpec::new(3, vec![Shell { n: 1, l: 0, occupancy: 3 }]).is_err());
        // duplicates rejected
        assert!(AtomSpec::new(
            4,
            vec![
                Shell { n: 1, l: 0, occupancy: 2 },
                Shell { n: 1, l: 0, occupancy: 2 }
            ]
        )
        .is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let spec = AtomSpec::from_config_text("# argon\nZ = 18\nshells = 1s2 2s2 2p6 3s2 3p6\n")
            .unwrap();
        assert_eq!(spec, AtomSpec::named("Ar").unwrap());
        assert!(AtomSpec::from_config_text("Z = 18").is_err());
        assert!(AtomSpec::from_config_text("bogus").is_err());
    }

    #[test]
    fn slater_screening_reference_values() {
        // textbook Slater values: He 1s -> 1.70, Ar 3p -> 6.75, Ar 1s -> 17.70
        let he = AtomSpec::named("He").unwrap();
        let z1s = he.slater_screened_charge(&he.shells[0]);
        assert!((z1s - 1.70).abs() < 1e-12);
        let ar = AtomSpec::named("Ar").unwrap();
        let s3p = ar
            .shells
            .iter()
            .find(|s| s.n == 3 && s.l == 1)
            .copied()
            .unwrap();
        assert!((ar.slater_screened_charge(&s3p) - 6.75).abs() < 1e-9);
        let s1s = ar.shells.iter().find(|s| s.n == 1).copied().unwrap();
        assert!((ar.slater_screened_charge(&s1s) - 17.70).abs() < 1e-9);
    }
}
