#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semstream/query.hpp"
#include "semstream/reasoner.hpp"

namespace semstream {

/// One timestamped message as delivered by the broker.
struct StreamElement {
    Term topic;
    Graph graph;
    std::uint64_t seq = 0;  // broker-assigned, monotone per run
};

/// Bindings that became derivable by the triggering event, stamped with the
/// watermark at emission. For CONSTRUCT queries the caller instantiates the
/// template via constructOutput.
struct ResultDelta {
    BindingSet newBindings;
    std::int64_t atTime = 0;
};

struct QueryMetrics {
    std::uint64_t elementsIngested = 0;
    std::uint64_t lateDrops = 0;
    std::uint64_t timestampDrops = 0;
    std::uint64_t duplicateTimestamps = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t resultsEmitted = 0;
};

/// Application time of a message: the timestamp literal object of the
/// canonically first triple whose predicate is `onPredicate`. Literals typed
/// xsd:dateTime are parsed as UTC ISO 8601; anything else must be an integer
/// count of milliseconds. Throws MissingTimestampError / MalformedTimestampError.
std::int64_t extractAppTime(const Graph& graph, const Term& onPredicate);

/// As above, also reporting whether more than one candidate triple existed.
std::int64_t extractAppTime(const Graph& graph, const Term& onPredicate, bool& duplicate);

/// Binding restricted to the given variables (unbound names are skipped).
Binding projectBinding(const Binding& b, const std::vector<std::string>& vars);

/// Continuous-query state: per-(stream pattern, topic) sliding windows,
/// incremental join with provenance, and duplicate suppression such that a
/// result re-emits only after every derivation of it has been evicted and it
/// becomes derivable again.
class QueryRuntime {
public:
    QueryRuntime(QueryAST ast, Graph knowledgeGraph, Closure closure);

    const QueryAST& ast() const { return ast_; }
    const QueryMetrics& metrics() const { return metrics_; }
    std::int64_t watermark() const { return watermark_; }

    /// Replaces the topic set feeding one stream pattern. Windows of retained
    /// topics are preserved; removed topics drop their buffered state.
    void setTopics(std::size_t streamPattern, const std::set<Term>& topics);
    const std::set<Term>& topics(std::size_t streamPattern) const;
    bool subscribesTo(const Term& topic) const;

    /// Swaps the background knowledge graph (and closure) and re-seeds the
    /// static bindings. Results newly derivable under the new metadata are
    /// returned as a delta.
    ResultDelta setKnowledgeGraph(Graph knowledgeGraph, Closure closure);

    /// Feeds one element to every stream pattern subscribed to its topic.
    /// Throws MissingTimestampError only if no subscribed pattern can extract
    /// an application time.
    ResultDelta ingest(const StreamElement& element);

    /// Non-incremental evaluation of the current state; the dual route used
    /// as an oracle and after knowledge-graph swaps.
    BindingSet evaluateFull() const;

    /// Union of template instantiations over the given bindings; rows whose
    /// substitution fails are skipped.
    Graph constructOutput(const BindingSet& bindings) const;

    /// Buffered application times per topic of one stream pattern (testing
    /// and metrics).
    std::map<Term, std::vector<std::int64_t>> bufferedAppTimes(std::size_t streamPattern) const;

private:
    struct Buffered {
        std::int64_t appTime = 0;
        std::uint64_t seq = 0;
        Graph graph;
    };

    /// Window plus all live derivations of stream-pattern bindings from it.
    /// A derivation records which element seqs contributed; a binding stays
    /// current while at least one derivation survives eviction.
    struct TopicWindow {
        std::map<std::pair<std::int64_t, std::uint64_t>, Buffered> elements;
        std::map<Binding, std::set<std::set<std::uint64_t>>> derivations;
    };

    using Tagged = std::pair<Triple, std::uint64_t>;

    void reseed();
    bool evict(std::int64_t watermark);
    void pruneEmitted();
    bool live(const Binding& b) const;
    BindingSet patternCurrent(std::size_t sp) const;
    std::map<Binding, std::set<std::set<std::uint64_t>>> derive(
        const std::vector<TriplePattern>& patterns, const std::vector<Tagged>& oldTriples,
        const std::vector<Tagged>& newTriples) const;
    BindingSet joinAcross(std::size_t forcedPattern, const BindingSet& forcedBindings) const;

    QueryAST ast_;
    Graph kg_;
    Closure closure_;
    BindingSet seeds_;
    std::vector<std::set<Term>> topics_;                 // per stream pattern
    std::vector<std::map<Term, TopicWindow>> windows_;   // per stream pattern
    BindingSet emitted_;
    std::int64_t watermark_;
    QueryMetrics metrics_;
};

} // namespace semstream
