//! Ingestion of events, snapshots, covariates and bot lists, plus CDX index
//! query plumbing for snapshot discovery.

mod bots;
pub mod cdx;
mod io;

pub use bots::{default_botlist, filter_bots_snapshots, filter_bots_tenures, DEFAULT_BOTS};
pub use cdx::{parse_cdx_response, CdxQuery, CdxRecord, CdxTransport, RetryPolicy};
pub use io::*;

pub fn build_cdx_query(community: &str, from_year: i32, to_year: i32) -> crate::Result<String> {
    CdxQuery::moderators_page(community, from_year, to_year).map(|q| q.to_url())
}
