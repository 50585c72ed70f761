#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pbm::bench {

/// Text of a bundled asset: watertanks.pbl, watertanks_power.pbl,
/// single_stage.pbs, stage1.pbs, stage2.pbs, two_stage.json.
std::string asset(std::string_view name);
std::vector<std::string> asset_names();

}  // namespace pbm::bench
