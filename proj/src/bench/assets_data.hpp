#pragma once

#include <string_view>
#include <vector>

namespace pbm::bench::detail {

struct AssetEntry {
    std::string_view name;
    std::string_view text;
};

const std::vector<AssetEntry>& asset_table();

}  // namespace pbm::bench::detail
