#include "pbm/bench/assets.hpp"

#include <stdexcept>

#include "bench/assets_data.hpp"

namespace pbm::bench {

std::string asset(std::string_view name) {
    for (const auto& e : detail::asset_table()) {
        if (e.name == name) return std::string(e.text);
    }
    throw std::out_of_range("no bundled asset named '" + std::string(name) + "'");
}

std::vector<std::string> asset_names() {
    std::vector<std::string> out;
    for (const auto& e : detail::asset_table()) out.emplace_back(e.name);
    return out;
}

}  // namespace pbm::bench
