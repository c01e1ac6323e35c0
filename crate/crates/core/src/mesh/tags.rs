//! Tag semantics: which atomic facet tags a logical boundary name covers, and
//! which logical names each fiber method needs.

use super::Mesh;
use crate::error::{Error, Result};
use std::fmt;

/// Fiber generation method, used to pick the required tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rrbm,
    Brbm,
    Drbm,
    AtrialLa,
    AtrialRa,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rrbm => "R-RBM",
            Method::Brbm => "B-RBM",
            Method::Drbm => "D-RBM",
            Method::AtrialLa => "ATRIAL-LA",
            Method::AtrialRa => "ATRIAL-RA",
        })
    }
}

/// Required logical boundaries of a method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSchema {
    pub method: Method,
    pub required_tags: Vec<&'static str>,
}

impl TagSchema {
    pub fn for_method(method: Method) -> Self {
        let required_tags = match method {
            Method::Rrbm => vec!["epi", "lv", "rs", "rv-s", "base"],
            Method::Brbm => vec!["epi", "lv", "rv", "rings", "la-apex"],
            Method::Drbm => vec!["epi", "lv", "rv", "mv", "av", "tv", "pv", "la-apex", "ra-apex"],
            Method::AtrialLa => vec!["epi", "endo", "appendage", "mv", "lpv", "rpv"],
            Method::AtrialRa => vec![
                "epi", "endo", "appendage", "icv", "scv", "cs", "tv-s", "tv-f", "top-epi",
                "top-endo",
            ],
        };
        TagSchema { method, required_tags }
    }

    /// Checks that every required boundary is present and nonempty.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let missing: Vec<&str> = self
            .required_tags
            .iter()
            .copied()
            .filter(|t| resolve_tags(mesh, t).is_err())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Tag(format!(
                "TagSchema {} requires boundaries {:?}; missing or empty: {:?}. \
                 Tag the corresponding facets and list them in the tag map.",
                self.method, self.required_tags, missing
            )))
        }
    }
}

/// Atomic tags covered by a logical name. Patches carved out of a larger
/// surface (septum, apex patches, valve ring halves) stay part of that surface.
fn aliases(name: &str) -> &[&str] {
    match name {
        "lv" => &["lv", "la-apex"],
        "rv" => &["rv", "rs", "rv-s", "ra-apex"],
        "rv-s" => &["rv-s", "ra-apex"],
        "base" | "rings" => &["base", "rings", "mv", "av", "tv", "tv-s", "tv-f", "pv"],
        "lring" => &["mv", "av"],
        "rring" => &["tv", "tv-s", "tv-f", "pv"],
        "tv" => &["tv", "tv-s", "tv-f"],
        "top" => &["top-epi", "top-endo"],
        _ => &[],
    }
}

/// Resolves a logical boundary name to the tag ids present on the mesh.
/// Fails if no facet carries any of them.
pub fn resolve_tags(mesh: &Mesh, name: &str) -> Result<Vec<i32>> {
    let list = aliases(name);
    let candidates: Vec<&str> = if list.is_empty() { vec![name] } else { list.to_vec() };
    let ids: Vec<i32> = candidates
        .iter()
        .filter_map(|n| mesh.tags().id(n))
        .filter(|id| mesh.facets().iter().any(|f| f.tag == *id))
        .collect();
    if ids.is_empty() {
        Err(Error::Tag(format!("no facets tagged '{name}'")))
    } else {
        Ok(ids)
    }
}
