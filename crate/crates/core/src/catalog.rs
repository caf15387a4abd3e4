//! Catalog of named warping maps: `identity`, `alpha:<α>`, `ln`, `tensor:<id>,...`.

use crate::error::{invalid, Error, Result};
use crate::radial_warping::{family_component, radial_map, tensor_map, Family, SlowStartParams};
use crate::warping_core::WarpingMap;

/// Builds a catalog map of dimension `dim`. Tensor ids take 1-d parts and
/// ignore `dim` except for a consistency check.
pub fn map_from_id(id: &str, dim: usize) -> Result<WarpingMap> {
    map_with_params(id, dim, None)
}

/// As [`map_from_id`], with explicit slow-start parameters for the radial families.
pub fn map_with_params(id: &str, dim: usize, params: Option<SlowStartParams>) -> Result<WarpingMap> {
    let id = id.trim();
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    if id == "identity" {
        return Ok(WarpingMap::identity(dim));
    }
    if let Some(rest) = id.strip_prefix("tensor:") {
        let parts = rest
            .split(',')
            .map(|p| map_with_params(p, 1, params))
            .collect::<Result<Vec<_>>>()?;
        if parts.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: parts.len(),
            });
        }
        return tensor_map(&parts);
    }
    let family = Family::parse(id)?;
    radial_map(&family_component(family, params)?, dim)
}
