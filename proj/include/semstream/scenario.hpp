#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semstream/broker.hpp"
#include "semstream/prefixes.hpp"
#include "semstream/query.hpp"
#include "semstream/reasoner.hpp"
#include "semstream/term.hpp"
#include "semstream/window.hpp"

namespace semstream {

/// One replayed message: published on its stream at `emitTime` (virtual ms).
struct ReplayFrame {
    std::int64_t emitTime = 0;
    Graph graph;
};

struct StreamSpec {
    Term topic;
    Graph metadata;
    std::vector<ReplayFrame> frames;
};

struct QuerySpec {
    QueryAST ast;
    std::string origin;       // file path or "<node> queries[k]", for diagnostics
    std::string resultsPath;  // output-relative; "" = no results log
    std::string teePath;      // output-relative; "" = no tee of published frames
};

struct NodeSpec {
    Term id;
    Graph backgroundKG;
    std::int64_t joinTime = 0;
    std::optional<std::int64_t> leaveTime;
    std::vector<StreamSpec> streams;
    std::vector<QuerySpec> queries;
};

/// A fully loaded scenario: every referenced graph, query and replay file is
/// parsed at load time. See docs/scenario-format.md for the file schema.
struct Scenario {
    PrefixTable prefixes;
    Ontology ontology;
    Closure closure;
    std::int64_t duration = 0;
    std::uint64_t seed = 0;  // reserved knob; recorded in metrics, replay is deterministic
    LatencyTable latency;
    std::vector<NodeSpec> nodes;
};

/// Loads and validates a scenario file. Query parse failures propagate as
/// QuerySyntaxError / QueryValidationError (message prefixed with the file);
/// everything else throws ScenarioError.
Scenario loadScenario(const std::string& path);

/// Checks everything loadScenario would, collecting problems instead of
/// throwing at the first one. Empty report == loadable.
std::vector<std::string> validateScenario(const std::string& path);

struct RunReport {
    /// Output file contents keyed by output-relative path: every results log
    /// and tee file named by the scenario (present even when empty) plus
    /// "metrics.txt". The CLI writes these under --out.
    std::map<std::string, std::string> outputs;
    /// Ground selectors never seen in any registry; --strict reports them.
    std::vector<std::string> unresolved;
    BrokerMetrics broker;
};

/// Executes the scenario under virtual time until `duration`. Deterministic:
/// the same scenario produces byte-identical outputs across runs and across
/// run modes. The scenario must outlive the call.
RunReport runScenario(const Scenario& scenario, RunMode mode);

} // namespace semstream
