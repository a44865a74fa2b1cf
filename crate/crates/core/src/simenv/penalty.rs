use super::types::PenaltyConfig;

/// Demand charge for a billing period whose highest total load was `peak_load_kw`.
///
/// The overload above contract capacity is billed at twice the base rate up
/// to `tier_threshold * contract_kw`, and at three times the base rate beyond.
pub fn penalty_cost(peak_load_kw: f64, cfg: &PenaltyConfig) -> f64 {
    let excess = (peak_load_kw - cfg.contract_kw).max(0.0);
    let knee = cfg.tier_threshold * cfg.contract_kw;
    2.0 * cfg.base_rate_usd_per_kw * excess.min(knee) + 3.0 * cfg.base_rate_usd_per_kw * (excess - knee).max(0.0)
}

/// Load above contract capacity in one slot, zero when under contract.
pub fn instantaneous_excess(load_kw: f64, contract_kw: f64) -> f64 {
    (load_kw - contract_kw).max(0.0)
}
