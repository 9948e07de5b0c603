//! Banked operand memory. Observational only: conflicts are counted, never
//! stalled on.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryModel {
    pub banks: u32,
    pub ports_per_bank: u32,
    pub accesses: u64,
    pub conflicts: u64,
    pub cycles_observed: u64,
}

impl Default for MemoryModel {
    fn default() -> Self {
        MemoryModel::new(16, 1)
    }
}

impl MemoryModel {
    pub fn new(banks: u32, ports_per_bank: u32) -> Self {
        assert!(banks >= 1 && ports_per_bank >= 1, "memory needs at least one bank and one port");
        MemoryModel { banks, ports_per_bank, accesses: 0, conflicts: 0, cycles_observed: 0 }
    }

    /// Records the word addresses issued in one modeled cycle and returns the
    /// number of accesses beyond the per-bank port count.
    pub fn memory_access(&mut self, addresses: &[u64], _cycle: u64) -> u64 {
        let mut per_bank = vec![0u32; self.banks as usize];
        for &a in addresses {
            per_bank[(a % self.banks as u64) as usize] += 1;
        }
        let conflicts: u64 =
            per_bank.iter().map(|&c| c.saturating_sub(self.ports_per_bank) as u64).sum();
        self.accesses += addresses.len() as u64;
        self.conflicts += conflicts;
        self.cycles_observed += 1;
        conflicts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let mut m = MemoryModel::new(4, 1);
        assert_eq!(m.memory_access(&[7], 0), 0);
        let mut m2 = MemoryModel::new(4, 2);
        assert_eq!(m2.memory_access(&[1, 5, 9], 0), 1);
        let mut rr = MemoryModel::new(4, 1);
        for c in 0..8u64 {
            let addrs: Vec<u64> = (0..4).map(|b| c * 4 + b).collect();
            assert_eq!(rr.memory_access(&addrs, c), 0);
        }
        assert_eq!(rr.accesses, 32);
        assert_eq!(rr.conflicts, 0);
    }
}
