//! Versioning shared by every file format the crate reads or writes.

use crate::error::{Error, Result};

pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_VERSION: &str = "1.0";

pub(crate) fn current_version() -> String {
    FORMAT_VERSION.to_string()
}

/// Accepts `"<major>"` or `"<major>.<minor>"` when the major matches.
pub fn check_version(found: &str) -> Result<()> {
    let major = found.split('.').next().unwrap_or_default();
    match major.trim().parse::<u32>() {
        Ok(m) if m == FORMAT_MAJOR => Ok(()),
        _ => Err(Error::UnsupportedVersion {
            found: found.to_string(),
            supported: FORMAT_MAJOR,
        }),
    }
}
