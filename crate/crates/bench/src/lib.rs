//! Benchmark-only crate; see `benches/`.

use ratchet_core::presets::transport_fixture;
use ratchet_core::RatchetParams;

/// The transport fixture at `n` nodes.
pub fn fixture(n: usize) -> RatchetParams {
    transport_fixture(n).expect("fixture is admissible")
}
