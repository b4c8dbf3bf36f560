use crate::error::{Error, Result};

/// Node-count budget for searches and enumerations. Every operation that can
/// blow up on adversarial input charges its work against one of these and
/// aborts with `Error::BudgetExceeded` instead of running away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: u64,
}

impl Budget {
    pub const DEFAULT_NODES: u64 = 50_000_000;

    pub fn new(max_nodes: u64) -> Self {
        Budget { max_nodes }
    }

    /// Effectively unlimited; for oracles on inputs already known to be tiny.
    pub fn unlimited() -> Self {
        Budget {
            max_nodes: u64::MAX,
        }
    }

    pub fn meter(&self) -> Meter {
        Meter {
            remaining: self.max_nodes,
            spent: 0,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: Self::DEFAULT_NODES,
        }
    }
}

/// Mutable counter drawn down by a single operation run.
#[derive(Debug, Clone)]
pub struct Meter {
    remaining: u64,
    spent: u64,
}

impl Meter {
    pub fn tick(&mut self) -> Result<()> {
        self.charge(1)
    }

    pub fn charge(&mut self, n: u64) -> Result<()> {
        if self.remaining < n {
            return Err(Error::BudgetExceeded);
        }
        self.remaining -= n;
        self.spent += n;
        Ok(())
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }
}
