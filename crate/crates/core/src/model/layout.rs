//! Feature-row layouts for the four mapped feature combinations.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EmovcError, Result};

pub const MCC_ORDER: usize = 36;
pub const CWT_SCALES: usize = 10;
/// Feature heights are zero-padded up to a multiple of this.
pub const HEIGHT_ALIGN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureCombo {
    /// Spectrum only; F0 goes through the log-Gaussian transform.
    Mcc,
    /// Spectrum plus continuous log F0 as one row.
    MccLf0,
    /// Spectrum plus the 10-scale wavelet decomposition of log F0.
    MccLf0Cwt,
    /// As above plus the decomposition of log energy.
    MccLf0CwtLeCwt,
}

impl FeatureCombo {
    pub const ALL: [FeatureCombo; 4] = [
        FeatureCombo::Mcc,
        FeatureCombo::MccLf0,
        FeatureCombo::MccLf0Cwt,
        FeatureCombo::MccLf0CwtLeCwt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureCombo::Mcc => "mcc",
            FeatureCombo::MccLf0 => "mcc+lf0",
            FeatureCombo::MccLf0Cwt => "mcc+lf0cwt",
            FeatureCombo::MccLf0CwtLeCwt => "mcc+lf0cwt+lecwt",
        }
    }

    /// Row label used in reports ("CycleGAN-1".."CycleGAN-4").
    pub fn model_label(self) -> &'static str {
        match self {
            FeatureCombo::Mcc => "CycleGAN-1",
            FeatureCombo::MccLf0 => "CycleGAN-2",
            FeatureCombo::MccLf0Cwt => "CycleGAN-3",
            FeatureCombo::MccLf0CwtLeCwt => "CycleGAN-4",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn layout(self) -> FeatureLayout {
        FeatureLayout::for_combo(self)
    }

    pub fn has_lf0(self) -> bool {
        !matches!(self, FeatureCombo::Mcc)
    }

    pub fn has_energy(self) -> bool {
        matches!(self, FeatureCombo::MccLf0CwtLeCwt)
    }
}

impl fmt::Display for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureCombo {
    type Err = EmovcError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| {
                EmovcError::Config(format!(
                    "unknown feature combo {s:?}; expected one of mcc, mcc+lf0, mcc+lf0cwt, mcc+lf0cwt+lecwt"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Mcc,
    Lf0,
    Lf0Cwt,
    LeCwt,
    Pad,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub rows: Range<usize>,
}

/// Ordered, contiguous row segments covering `0..height`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub combo: FeatureCombo,
    pub segments: Vec<Segment>,
    pub height: usize,
}

impl FeatureLayout {
    pub fn for_combo(combo: FeatureCombo) -> Self {
        let mut parts = vec![(SegmentKind::Mcc, MCC_ORDER)];
        match combo {
            FeatureCombo::Mcc => {}
            FeatureCombo::MccLf0 => parts.push((SegmentKind::Lf0, 1)),
            FeatureCombo::MccLf0Cwt => parts.push((SegmentKind::Lf0Cwt, CWT_SCALES)),
            FeatureCombo::MccLf0CwtLeCwt => {
                parts.push((SegmentKind::Lf0Cwt, CWT_SCALES));
                parts.push((SegmentKind::LeCwt, CWT_SCALES));
            }
        }
        let used: usize = parts.iter().map(|p| p.1).sum();
        let height = used.div_ceil(HEIGHT_ALIGN) * HEIGHT_ALIGN;
        if height > used {
            parts.push((SegmentKind::Pad, height - used));
        }
        let mut start = 0;
        let segments = parts
            .into_iter()
            .map(|(kind, n)| {
                let s = Segment {
                    kind,
                    rows: start..start + n,
                };
                start += n;
                s
            })
            .collect();
        Self {
            combo,
            segments,
            height,
        }
    }

    pub fn rows(&self, kind: SegmentKind) -> Option<Range<usize>> {
        self.segments.iter().find(|s| s.kind == kind).map(|s| s.rows.clone())
    }

    /// Rows carrying features (everything but padding).
    pub fn feature_rows(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.kind != SegmentKind::Pad)
            .map(|s| s.rows.len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_heights() {
        let h: Vec<(usize, usize)> = FeatureCombo::ALL
            .iter()
            .map(|c| (c.layout().feature_rows(), c.layout().height))
            .collect();
        assert_eq!(h, vec![(36, 40), (37, 40), (46, 48), (56, 56)]);
    }

    #[test]
    fn segments_are_contiguous_and_cover() {
        for combo in FeatureCombo::ALL {
            let l = combo.layout();
            let mut next = 0;
            for s in &l.segments {
                assert_eq!(s.rows.start, next);
                assert!(!s.rows.is_empty());
                next = s.rows.end;
            }
            assert_eq!(next, l.height);
            assert_eq!(l.height % HEIGHT_ALIGN, 0);
        }
    }

    #[test]
    fn no_padding_for_full_combo() {
        let l = FeatureCombo::MccLf0CwtLeCwt.layout();
        assert!(l.rows(SegmentKind::Pad).is_none());
        assert_eq!(l.rows(SegmentKind::LeCwt), Some(46..56));
    }

    #[test]
    fn names_parse_back() {
        for combo in FeatureCombo::ALL {
            assert_eq!(combo.name().parse::<FeatureCombo>().unwrap(), combo);
            assert_eq!(FeatureCombo::from_code(combo.code()), Some(combo));
        }
        assert!("mfcc".parse::<FeatureCombo>().is_err());
    }
}
