use serde::{Deserialize, Serialize};

use crate::logvalue::LogValue;

/// Evidence buckets for heatmaps. Each bucket is half-open, `[lower, upper)`;
/// a value exactly on a threshold belongs to the higher bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Green,
    Yellow,
    Orange,
    Red,
    DarkRed,
    Black,
}

/// Lower edges of `Yellow..=Black`.
pub const BUCKET_THRESHOLDS: [f64; 5] = [10.0, 100.0, 1e8, 1e14, 1e20];

impl Bucket {
    const ALL: [Bucket; 6] = [
        Bucket::Green,
        Bucket::Yellow,
        Bucket::Orange,
        Bucket::Red,
        Bucket::DarkRed,
        Bucket::Black,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Green => "green",
            Bucket::Yellow => "yellow",
            Bucket::Orange => "orange",
            Bucket::Red => "red",
            Bucket::DarkRed => "darkred",
            Bucket::Black => "black",
        }
    }

    pub fn hex(self) -> &'static str {
        match self {
            Bucket::Green => "#2ca02c",
            Bucket::Yellow => "#ffdf00",
            Bucket::Orange => "#ff7f0e",
            Bucket::Red => "#d62728",
            Bucket::DarkRed => "#8b0000",
            Bucket::Black => "#000000",
        }
    }

    pub fn from_name(name: &str) -> Option<Bucket> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }
}

/// Thresholds are compared on the natural-log scale, so a value built from
/// the exact linear threshold lands in the upper bucket.
pub fn colorize(v: LogValue) -> Bucket {
    let ln = v.ln();
    let above = BUCKET_THRESHOLDS
        .iter()
        .take_while(|&&t| ln >= libm::log(t))
        .count();
    Bucket::ALL[above]
}
