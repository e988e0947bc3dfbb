#include "semstream/prefixes.hpp"

namespace semstream {

void PrefixTable::add(const std::string& prefix, const std::string& base) {
    map_[prefix] = base;
}

std::optional<std::string> PrefixTable::lookup(const std::string& prefix) const {
    auto it = map_.find(prefix);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> PrefixTable::expand(const std::string& prefixedName) const {
    auto colon = prefixedName.find(':');
    if (colon == std::string::npos) return std::nullopt;
    auto base = lookup(prefixedName.substr(0, colon));
    if (!base) return std::nullopt;
    return *base + prefixedName.substr(colon + 1);
}

} // namespace semstream
