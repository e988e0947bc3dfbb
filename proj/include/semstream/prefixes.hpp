#pragma once

#include <map>
#include <optional>
#include <string>

namespace semstream {

/// Maps prefix labels (without the trailing colon; "" is the empty prefix)
/// to IRI bases. Used by the query parser and the scenario loader.
class PrefixTable {
public:
    /// Adds or replaces a mapping.
    void add(const std::string& prefix, const std::string& base);

    bool has(const std::string& prefix) const { return map_.count(prefix) != 0; }

    /// Base IRI for a prefix label, if declared.
    std::optional<std::string> lookup(const std::string& prefix) const;

    /// Expands "pfx:local" / ":local" to a full IRI; nullopt if the prefix is
    /// undeclared or the name has no colon.
    std::optional<std::string> expand(const std::string& prefixedName) const;

    const std::map<std::string, std::string>& entries() const { return map_; }

private:
    std::map<std::string, std::string> map_;
};

} // namespace semstream
