use serde::{Deserialize, Serialize};

/// One of the six effective levels. Each Kramers pair is a single level.
///
/// The discriminant is the matrix index used everywhere in the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    /// Ground state, m_s = ±1/2.
    GsHalf = 0,
    /// Ground state, m_s = ±3/2.
    GsThreeHalf = 1,
    /// Excited state, m_s = ±1/2.
    EsHalf = 2,
    /// Excited state, m_s = ±3/2.
    EsThreeHalf = 3,
    /// Effective e³ doublet manifold.
    Ms1 = 4,
    /// Effective v²e doublet manifold.
    Ms2 = 5,
}

impl Level {
    pub const COUNT: usize = 6;
    pub const ALL: [Level; 6] = [
        Level::GsHalf,
        Level::GsThreeHalf,
        Level::EsHalf,
        Level::EsThreeHalf,
        Level::Ms1,
        Level::Ms2,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::GsHalf => "GS1/2",
            Level::GsThreeHalf => "GS3/2",
            Level::EsHalf => "ES1/2",
            Level::EsThreeHalf => "ES3/2",
            Level::Ms1 => "MS1",
            Level::Ms2 => "MS2",
        }
    }
}

/// Spin-conserving optical line. O1 couples the ±1/2 ground and excited
/// states, O2 the ±3/2 ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    O1,
    O2,
}

impl Transition {
    pub fn ground(self) -> Level {
        match self {
            Transition::O1 => Level::GsHalf,
            Transition::O2 => Level::GsThreeHalf,
        }
    }

    pub fn excited(self) -> Level {
        match self {
            Transition::O1 => Level::EsHalf,
            Transition::O2 => Level::EsThreeHalf,
        }
    }

    pub fn other(self) -> Transition {
        match self {
            Transition::O1 => Transition::O2,
            Transition::O2 => Transition::O1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transition::O1 => "O1",
            Transition::O2 => "O2",
        }
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Transition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "O1" => Ok(Transition::O1),
            "O2" => Ok(Transition::O2),
            other => Err(format!("unknown transition `{other}` (expected O1 or O2)")),
        }
    }
}

/// Metastable manifold selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metastable {
    Ms1,
    Ms2,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_total_and_dense() {
        for (i, l) in Level::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(Level::from_index(i), Some(*l));
        }
        assert_eq!(Level::from_index(6), None);
        assert!(Level::GsHalf < Level::Ms2);
    }

    #[test]
    fn transitions_pair_matching_spin_subspaces() {
        assert_eq!(Transition::O1.ground(), Level::GsHalf);
        assert_eq!(Transition::O1.excited(), Level::EsHalf);
        assert_eq!(Transition::O2.ground(), Level::GsThreeHalf);
        assert_eq!(Transition::O2.excited(), Level::EsThreeHalf);
        assert_eq!("o2".parse::<Transition>().unwrap(), Transition::O2);
        assert!("O3".parse::<Transition>().is_err());
    }
}
