#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Files under core/assets/ compiled into the library.
namespace vulnval::assets {

std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> list(std::string_view prefix);

} // namespace vulnval::assets
