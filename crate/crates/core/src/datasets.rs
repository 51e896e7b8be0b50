//! Bundled example maps.
//!
//! `giips` and `country` are the two worked applications (a five-country
//! network of sectors and one country's sub-dimensions); `two_country_case*`
//! are the three small variants of the two-country illustration. Nodes carry
//! published reference figures where available.

use crate::document::{DocumentError, GraphDocument};

pub const GIIPS: &str = include_str!("../data/giips.json");
pub const COUNTRY: &str = include_str!("../data/country.json");
pub const TWO_COUNTRY_CASE1: &str = include_str!("../data/two_country_case1.json");
pub const TWO_COUNTRY_CASE2: &str = include_str!("../data/two_country_case2.json");
pub const TWO_COUNTRY_CASE3: &str = include_str!("../data/two_country_case3.json");

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 5] = [
    "giips",
    "country",
    "two-country-1",
    "two-country-2",
    "two-country-3",
];

pub fn by_name(name: &str) -> Option<Result<GraphDocument, DocumentError>> {
    let text = match name {
        "giips" => GIIPS,
        "country" => COUNTRY,
        "two-country-1" => TWO_COUNTRY_CASE1,
        "two-country-2" => TWO_COUNTRY_CASE2,
        "two-country-3" => TWO_COUNTRY_CASE3,
        _ => return None,
    };
    Some(GraphDocument::from_json(text))
}
