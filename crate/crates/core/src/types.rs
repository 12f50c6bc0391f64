//! Domain vocabulary shared by every module: class identifiers, clip
//! identities, time segments, and frame polarities.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum clip duration. Source corpora are excerpts of at most ten seconds.
pub const MAX_CLIP_DUR: Duration = Duration::from_secs(10);

/// Machine identifier of a sound class, e.g. `/m/09x0r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mid(String);

impl Mid {
    pub fn new(id: impl Into<String>) -> Self {
        Mid(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Mid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Mid {
    fn from(s: &str) -> Self {
        Mid(s.to_owned())
    }
}

impl From<String> for Mid {
    fn from(s: String) -> Self {
        Mid(s)
    }
}

impl Borrow<str> for Mid {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Mid {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Identity of one audio excerpt: source id plus its absolute start/end
/// offsets within the source material.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClipId {
    ytid: String,
    start: Duration,
    end: Duration,
}

impl ClipId {
    /// Build a clip id, enforcing `end > start`, a non-empty source id,
    /// and the ten-second excerpt cap.
    pub fn new(ytid: impl Into<String>, start: Duration, end: Duration) -> Result<Self> {
        let ytid = ytid.into();
        if ytid.is_empty() {
            return Err(Error::validation("clip id must be non-empty"));
        }
        if end <= start {
            return Err(Error::validation(format!(
                "clip {ytid}: end ({end:?}) must exceed start ({start:?})"
            )));
        }
        if end - start > MAX_CLIP_DUR {
            return Err(Error::validation(format!(
                "clip {ytid}: duration {:?} exceeds {MAX_CLIP_DUR:?}",
                end - start
            )));
        }
        Ok(ClipId { ytid, start, end })
    }

    /// Conventional full-length clip starting at `start`.
    pub fn ten_second(ytid: impl Into<String>, start: Duration) -> Result<Self> {
        ClipId::new(ytid, start, start + MAX_CLIP_DUR)
    }

    pub fn ytid(&self) -> &str {
        &self.ytid
    }

    pub fn start(&self) -> Duration {
        self.start
    }

    pub fn end(&self) -> Duration {
        self.end
    }

    pub fn duration(&self) -> Duration {
        self.end - self.start
    }

    /// Canonical `<ytid>_<start milliseconds>` form used by strong-label and
    /// framed-label files.
    pub fn segment_id(&self) -> String {
        format!("{}_{}", self.ytid, self.start.as_millis())
    }
}

impl fmt::Display for ClipId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segment_id())
    }
}

/// Half-open time interval `[start, end)` relative to a clip start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub start: Duration,
    pub end: Duration,
}

impl Segment {
    pub fn new(start: Duration, end: Duration) -> Result<Self> {
        if end <= start {
            return Err(Error::validation(format!(
                "segment end ({end:?}) must exceed start ({start:?})"
            )));
        }
        Ok(Segment { start, end })
    }

    pub fn duration(&self) -> Duration {
        self.end - self.start
    }

    /// Length of the intersection with `other`; zero when disjoint.
    pub fn overlap(&self, other: &Segment) -> Duration {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if hi > lo {
            hi - lo
        } else {
            Duration::ZERO
        }
    }
}

/// Polarity of a frame-level label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    ComplementaryNegative,
    ExplicitNegative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "POS",
            Polarity::ComplementaryNegative => "COMP_NEG",
            Polarity::ExplicitNegative => "EXP_NEG",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "POS" => Ok(Polarity::Positive),
            "COMP_NEG" => Ok(Polarity::ComplementaryNegative),
            "EXP_NEG" => Ok(Polarity::ExplicitNegative),
            other => Err(Error::validation(format!("unknown polarity {other:?}"))),
        }
    }
}
