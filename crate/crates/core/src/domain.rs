//! Indicator algebra for target-population membership.
//!
//! Three elementary indicators describe every student:
//!
//! * `BP`  - born in Italy,
//! * `CIT` - holds Italian citizenship,
//! * `PA`  - both parents had Italian nationality at birth.
//!
//! Membership is `delta = |BP * CIT * PA - 1|`, with two exceptions: the
//! patterns `(0,0,1)` and `(1,0,1)` cannot occur under citizenship by descent
//! and are rejected, and `(0,1,1)` (born abroad to Italian parents) is
//! mapped to "no migrant background".
//!
//! The register records `BP` and `CIT` for everyone but never `PA`. Outside
//! the `BP = CIT = 1` stratum `PA` is redundant: enumerating the admissible
//! rows shows `PA = 0` is the only value compatible with `(1,0)`, `(0,0)`,
//! and the member row of `(0,1)`. See [`resolve_membership`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("indicator combination (BP={bp}, CIT={cit}, PA={pa}) is excluded by citizenship-by-descent law")]
    ExcludedCombination { bp: u8, cit: u8, pa: u8 },
    #[error("{0} must be observed; only PA may be unobserved")]
    MustBeObserved(&'static str),
    #[error("unknown migrant background code {0}")]
    UnknownKind(u8),
}

/// A binary indicator that may be unobserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriIndicator {
    Zero,
    One,
    Unobserved,
}

impl TriIndicator {
    pub fn observed(value: bool) -> Self {
        if value {
            TriIndicator::One
        } else {
            TriIndicator::Zero
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            TriIndicator::Zero => Some(false),
            TriIndicator::One => Some(true),
            TriIndicator::Unobserved => None,
        }
    }
}

impl From<bool> for TriIndicator {
    fn from(v: bool) -> Self {
        TriIndicator::observed(v)
    }
}

/// The five-level migrant background typology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BackgroundKind {
    NoBackground = 0,
    SecondGenItalian = 1,
    SecondGenForeign = 2,
    ItalianMigrantExperience = 3,
    Foreign = 4,
}

impl BackgroundKind {
    pub const ALL: [BackgroundKind; 5] = [
        BackgroundKind::NoBackground,
        BackgroundKind::SecondGenItalian,
        BackgroundKind::SecondGenForeign,
        BackgroundKind::ItalianMigrantExperience,
        BackgroundKind::Foreign,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, DomainError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(DomainError::UnknownKind(code))
    }

    pub fn label(self) -> &'static str {
        match self {
            BackgroundKind::NoBackground => "No migrant background",
            BackgroundKind::SecondGenItalian => "2nd generation Italian",
            BackgroundKind::SecondGenForeign => "2nd generation foreign",
            BackgroundKind::ItalianMigrantExperience => "Italian with migrant experience",
            BackgroundKind::Foreign => "Foreign",
        }
    }
}

impl fmt::Display for BackgroundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Membership flag plus typology. The flag is derived from the kind, so the
/// two can never disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MigrantBackground {
    kind: BackgroundKind,
}

impl MigrantBackground {
    pub fn new(kind: BackgroundKind) -> Self {
        Self { kind }
    }

    pub fn kind(self) -> BackgroundKind {
        self.kind
    }

    /// `delta`: 1 iff the student belongs to the target population.
    pub fn delta(self) -> bool {
        self.kind != BackgroundKind::NoBackground
    }
}

/// The `(BP, CIT, PA)` triple of one student.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MembershipIndicators {
    bp: bool,
    cit: bool,
    pa: TriIndicator,
}

impl MembershipIndicators {
    pub fn new(bp: TriIndicator, cit: TriIndicator, pa: TriIndicator) -> Result<Self, DomainError> {
        let bp = bp.value().ok_or(DomainError::MustBeObserved("BP"))?;
        let cit = cit.value().ok_or(DomainError::MustBeObserved("CIT"))?;
        if let Some(pa_value) = pa.value() {
            check_admissible(bp, cit, pa_value)?;
        }
        Ok(Self { bp, cit, pa })
    }

    /// Indicators as read from the register, where PA is never recorded.
    pub fn from_register(bp: bool, cit: bool) -> Self {
        Self {
            bp,
            cit,
            pa: TriIndicator::Unobserved,
        }
    }

    pub fn bp(&self) -> bool {
        self.bp
    }

    pub fn cit(&self) -> bool {
        self.cit
    }

    pub fn pa(&self) -> TriIndicator {
        self.pa
    }

    pub fn with_pa(self, pa: bool) -> Result<Self, DomainError> {
        Self::new(self.bp.into(), self.cit.into(), pa.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipStatus {
    Known(MigrantBackground),
    /// `BP = CIT = 1` with PA unobserved: membership hinges on PA.
    NeedsPa,
}

fn bit(v: bool) -> u8 {
    v as u8
}

fn check_admissible(bp: bool, cit: bool, pa: bool) -> Result<(), DomainError> {
    if !cit && pa {
        return Err(DomainError::ExcludedCombination {
            bp: bit(bp),
            cit: 0,
            pa: 1,
        });
    }
    Ok(())
}

/// Membership flag `delta` for a fully observed triple.
pub fn compute_delta(bp: bool, cit: bool, pa: bool) -> Result<bool, DomainError> {
    check_admissible(bp, cit, pa)?;
    if !bp && cit && pa {
        return Ok(false);
    }
    let product = bit(bp) * bit(cit) * bit(pa);
    Ok((product as i8 - 1).unsigned_abs() == 1)
}

/// Typology for a fully observed triple.
pub fn compute_delta_type(bp: bool, cit: bool, pa: bool) -> Result<MigrantBackground, DomainError> {
    check_admissible(bp, cit, pa)?;
    let kind = match (bp, cit, pa) {
        (true, true, true) | (false, true, true) => BackgroundKind::NoBackground,
        (true, true, false) => BackgroundKind::SecondGenItalian,
        (true, false, false) => BackgroundKind::SecondGenForeign,
        (false, true, false) => BackgroundKind::ItalianMigrantExperience,
        (false, false, false) => BackgroundKind::Foreign,
        (_, false, true) => unreachable!("rejected by check_admissible"),
    };
    let background = MigrantBackground::new(kind);
    debug_assert_eq!(background.delta(), compute_delta(bp, cit, pa)?);
    Ok(background)
}

/// Resolves membership from possibly partial indicators.
///
/// With PA unobserved and `(BP, CIT) != (1, 1)`, PA is set to 0: `CIT = 0`
/// forces `PA = 0` by the exclusions, and for `(0, 1)` the only member row
/// has `PA = 0`. The register cannot tell `(0,1,1)` apart from `(0,1,0)`, so
/// this resolution counts every foreign-born Italian citizen as a member.
pub fn resolve_membership(ind: MembershipIndicators) -> MembershipStatus {
    let pa = match ind.pa.value() {
        Some(pa) => pa,
        None if ind.bp && ind.cit => return MembershipStatus::NeedsPa,
        None => false,
    };
    let background = compute_delta_type(ind.bp, ind.cit, pa)
        .expect("MembershipIndicators are admissible by construction");
    MembershipStatus::Known(background)
}

/// Population counts per kind with both percentage bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub n_total: u64,
    /// `N`, the number of members.
    pub n_members: u64,
    pub kind_counts: [u64; 5],
    /// Share of all students, in percent, indexed by kind code.
    pub pct_of_all: [f64; 5],
    /// Share of members, in percent, for kinds 1-4 (`None` for kind 0, and
    /// for every kind when there are no members).
    pub pct_of_members: [Option<f64>; 5],
}

impl PopulationEstimate {
    pub fn from_kind_counts(kind_counts: [u64; 5]) -> Self {
        let n_total: u64 = kind_counts.iter().sum();
        let n_members: u64 = kind_counts[1..].iter().sum();
        let mut pct_of_all = [0.0; 5];
        let mut pct_of_members = [None; 5];
        for (k, &count) in kind_counts.iter().enumerate() {
            if n_total > 0 {
                pct_of_all[k] = 100.0 * count as f64 / n_total as f64;
            }
            if k > 0 && n_members > 0 {
                pct_of_members[k] = Some(100.0 * count as f64 / n_members as f64);
            }
        }
        Self {
            n_total,
            n_members,
            kind_counts,
            pct_of_all,
            pct_of_members,
        }
    }

    pub fn count(&self, kind: BackgroundKind) -> u64 {
        self.kind_counts[kind.code() as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples() -> impl Iterator<Item = (bool, bool, bool)> {
        (0..8u8).map(|m| (m & 4 != 0, m & 2 != 0, m & 1 != 0))
    }

    #[test]
    fn table_rows() {
        let cases = [
            ((true, true, true), false, BackgroundKind::NoBackground),
            ((true, true, false), true, BackgroundKind::SecondGenItalian),
            ((true, false, false), true, BackgroundKind::SecondGenForeign),
            ((false, true, false), true, BackgroundKind::ItalianMigrantExperience),
            ((false, false, false), true, BackgroundKind::Foreign),
            ((false, true, true), false, BackgroundKind::NoBackground),
        ];
        for ((bp, cit, pa), delta, kind) in cases {
            assert_eq!(compute_delta(bp, cit, pa).unwrap(), delta);
            assert_eq!(compute_delta_type(bp, cit, pa).unwrap().kind(), kind);
        }
    }

    #[test]
    fn exclusions() {
        for (bp, cit, pa) in [(false, false, true), (true, false, true)] {
            assert!(matches!(
                compute_delta(bp, cit, pa),
                Err(DomainError::ExcludedCombination { .. })
            ));
            assert!(compute_delta_type(bp, cit, pa).is_err());
            assert!(MembershipIndicators::new(bp.into(), cit.into(), pa.into()).is_err());
        }
    }

    #[test]
    fn enumeration_counts() {
        let errors = triples()
            .filter(|&(b, c, p)| compute_delta(b, c, p).is_err())
            .count();
        assert_eq!(errors, 2);
    }

    #[test]
    fn delta_matches_kind() {
        for (b, c, p) in triples() {
            if let Ok(bg) = compute_delta_type(b, c, p) {
                assert_eq!(bg.delta(), bg.kind() != BackgroundKind::NoBackground);
                assert_eq!(bg.delta(), compute_delta(b, c, p).unwrap());
            }
        }
    }

    #[test]
    fn pa_redundant_outside_italian_born_citizens() {
        for (b, c) in [(false, false), (true, false), (false, true)] {
            let status = resolve_membership(MembershipIndicators::from_register(b, c));
            let expected = compute_delta_type(b, c, false).unwrap();
            assert_eq!(status, MembershipStatus::Known(expected));
        }
    }

    #[test]
    fn resolve_examples() {
        let foreign = resolve_membership(MembershipIndicators::from_register(false, false));
        assert_eq!(
            foreign,
            MembershipStatus::Known(MigrantBackground::new(BackgroundKind::Foreign))
        );
        assert_eq!(
            resolve_membership(MembershipIndicators::from_register(true, true)),
            MembershipStatus::NeedsPa
        );
        let full = MembershipIndicators::new(
            TriIndicator::One,
            TriIndicator::One,
            TriIndicator::One,
        )
        .unwrap();
        assert_eq!(
            resolve_membership(full),
            MembershipStatus::Known(MigrantBackground::new(BackgroundKind::NoBackground))
        );
    }

    #[test]
    fn bp_and_cit_must_be_observed() {
        let err = MembershipIndicators::new(
            TriIndicator::Unobserved,
            TriIndicator::One,
            TriIndicator::Unobserved,
        );
        assert_eq!(err, Err(DomainError::MustBeObserved("BP")));
    }

    #[test]
    fn population_percentages() {
        let est = PopulationEstimate::from_kind_counts([30_891, 2_828, 132, 662, 1_869]);
        assert_eq!(est.n_total, 36_382);
        assert_eq!(est.n_members, 5_491);
        let all: f64 = est.pct_of_all.iter().sum();
        let members: f64 = est.pct_of_members.iter().flatten().sum();
        assert!((all - 100.0).abs() < 0.1);
        assert!((members - 100.0).abs() < 0.1);
        assert!(est.pct_of_members[0].is_none());
    }

    #[test]
    fn empty_membership() {
        let est = PopulationEstimate::from_kind_counts([10, 0, 0, 0, 0]);
        assert_eq!(est.n_members, 0);
        assert!(est.pct_of_members.iter().all(Option::is_none));
    }
}
