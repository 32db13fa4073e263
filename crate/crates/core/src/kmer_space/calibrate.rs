use std::collections::BTreeMap;

use super::{Base, ChannelMapping, KmerState};
use crate::error::{NncError, Result};

/// A base sequence and the mean level reported at each τ-mer window
/// (`levels.len() == bases.len() - tau + 1`).
#[derive(Debug, Clone)]
pub struct CalibrationRecord {
    pub bases: Vec<Base>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub observed: usize,
    pub total: usize,
    pub missing: Vec<KmerState>,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        self.observed as f64 / self.total as f64
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Averages window levels over identical τ-mers across all records.
/// Unobserved τ-mers are left out of the mapping and listed in the report.
pub fn calibrate_mapping(records: &[CalibrationRecord], tau: usize) -> Result<(ChannelMapping, CoverageReport)> {
    let mut sums: BTreeMap<KmerState, (f64, usize)> = BTreeMap::new();
    for (r, rec) in records.iter().enumerate() {
        let windows = rec.bases.len().checked_sub(tau - 1).unwrap_or(0);
        if rec.bases.len() < tau || rec.levels.len() != windows {
            return Err(NncError::InvalidModel(format!(
                "record {r}: {} bases need {} levels, got {}",
                rec.bases.len(),
                windows,
                rec.levels.len()
            )));
        }
        for (w, &x) in rec.bases.windows(tau).zip(&rec.levels) {
            let k = KmerState::from_bases(w)?;
            let entry = sums.entry(k).or_insert((0.0, 0));
            entry.0 += x;
            entry.1 += 1;
        }
    }
    let mut mapping = ChannelMapping::new(tau)?;
    for (k, (sum, n)) in &sums {
        mapping.insert(*k, sum / *n as f64, None)?;
    }
    let missing: Vec<KmerState> = KmerState::all(tau)?.filter(|k| !sums.contains_key(k)).collect();
    let total = 1usize << (2 * tau);
    Ok((mapping, CoverageReport { observed: total - missing.len(), total, missing }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::{de_bruijn_linear, parse_bases};

    #[test]
    fn single_record_copies_levels() {
        let rec = CalibrationRecord { bases: parse_bases("ACGTT").unwrap(), levels: vec![0.1, 0.2, 0.3] };
        let (m, cov) = calibrate_mapping(&[rec], 3).unwrap();
        assert_eq!(m.level(&"ACG".parse().unwrap()), Some(0.1));
        assert_eq!(m.level(&"CGT".parse().unwrap()), Some(0.2));
        assert_eq!(m.level(&"GTT".parse().unwrap()), Some(0.3));
        assert_eq!(cov.observed, 3);
        assert!(!cov.is_complete());
        assert_eq!(cov.missing.len(), 61);
    }

    #[test]
    fn repeated_kmer_is_averaged() {
        let a = CalibrationRecord { bases: parse_bases("ACG").unwrap(), levels: vec![1.0] };
        let b = CalibrationRecord { bases: parse_bases("TACG").unwrap(), levels: vec![5.0, 2.0] };
        let (m, _) = calibrate_mapping(&[a, b], 3).unwrap();
        assert_eq!(m.level(&"ACG".parse().unwrap()), Some(1.5));
        assert_eq!(m.level(&"TAC".parse().unwrap()), Some(5.0));
    }

    #[test]
    fn de_bruijn_input_gives_full_coverage() {
        let tau = 4;
        let bases = de_bruijn_linear(tau);
        let levels: Vec<f64> = bases
            .windows(tau)
            .map(|w| KmerState::from_bases(w).unwrap().index() as f64 * 0.01)
            .collect();
        let (m, cov) = calibrate_mapping(&[CalibrationRecord { bases, levels }], tau).unwrap();
        assert!(cov.is_complete());
        assert_eq!(cov.fraction(), 1.0);
        assert!(m.is_complete());
        let k: KmerState = "GATC".parse().unwrap();
        assert!((m.level(&k).unwrap() - k.index() as f64 * 0.01).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_rejected() {
        let rec = CalibrationRecord { bases: parse_bases("ACGT").unwrap(), levels: vec![1.0] };
        assert!(calibrate_mapping(&[rec], 3).is_err());
    }
}
