/// Resource caps shared by the exact and series routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest `p` for which a recurrence table or row is built.
    pub max_p: u64,
    /// Largest `a` for partition enumeration.
    pub max_a: u64,
    /// Largest truncation order for rational series.
    pub max_n: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_p: 5000,
            max_a: 64,
            max_n: 2000,
        }
    }
}
