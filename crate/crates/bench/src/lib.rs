//! Shared fixtures for the kernel benchmarks.

use etlab_core::{build_main_term, sieve_table, ArithFnId, MainTermModel, SieveTable, ZetaContext};

pub struct Fixture {
    pub table: SieveTable,
    pub model: MainTermModel,
    pub ctx: ZetaContext,
}

impl Fixture {
    pub fn new(id: ArithFnId, n_max: u64) -> Self {
        let ctx = ZetaContext::new().expect("default zeta context");
        let table = sieve_table(id, n_max).expect("sieve");
        let model = build_main_term(id, &ctx).expect("main term");
        Self { table, model, ctx }
    }
}
