#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semstream/node.hpp"
#include "semstream/query.hpp"
#include "semstream/window.hpp"

namespace semstream {

/// Predicate of the provenance triple advertised for derived streams
/// (`output :generatedBy query`); same vocabulary the bundled scenarios use
/// for sensor metadata.
inline const std::string kGeneratedByIri = "http://example.org/fleet#generatedBy";

/// Static patterns transitively connected to `var` through shared variables.
/// These are the patterns that constrain a variable stream selector.
std::vector<TriplePattern> selectorComponent(const QueryAST& ast, const std::string& var);

/// Topic sets feeding each stream pattern under the current registry.
/// Ground selectors resolve to themselves whether or not the topic is known
/// yet (discovery is asynchronous); a variable selector matches every
/// registry topic for which its selector component has an entailed match in
/// `effectiveKG` with the variable bound to the topic. Topics in `exclude`
/// never match a variable selector.
std::vector<std::set<Term>> resolveSelectors(const QueryAST& ast, const Registry& registry,
                                             const Graph& effectiveKG, const Closure& closure,
                                             const std::set<Term>& exclude = {});

class Federation;

/// One continuous query deployed on a node.
class DeployedQuery {
public:
    const QueryAST& ast() const { return runtime_.ast(); }
    const QueryRuntime& runtime() const { return runtime_; }

    /// True for REGISTER … CONSTRUCT queries, whose deltas become a stream.
    bool publishes() const;
    const Term& outputTopic() const { return *runtime_.ast().registerIri; }

    const std::vector<std::set<Term>>& resolvedStreams() const { return resolved_; }
    std::uint64_t outputsPublished() const { return outputsPublished_; }

    /// Observes every non-empty result delta (the SELECT sink; fires for
    /// CONSTRUCT queries too, after the output message is queued). `source`
    /// is the topic whose delivery triggered the delta — for deltas caused by
    /// a knowledge-graph change it is the discovery topic.
    void onResults(std::function<void(const Term& source, const ResultDelta&, Effects&)> sink);

private:
    friend class Federation;
    DeployedQuery(QueryAST ast, Graph kg, Closure closure, std::string key);

    QueryRuntime runtime_;
    std::string key_;  // subscription key on the hosting node
    std::vector<std::set<Term>> resolved_;
    std::set<Term> subscribed_;
    std::uint64_t kgVersionSeen_ = 0;
    std::uint64_t nextSeq_ = 0;
    std::uint64_t outputsPublished_ = 0;
    std::vector<std::function<void(const Term&, const ResultDelta&, Effects&)>> sinks_;
};

/// The adaptive federator of one node: deploys queries, keeps their input
/// subscriptions in step with the stream registry, and republishes CONSTRUCT
/// deltas as derived streams, advertised and discoverable like any sensor
/// stream. Queries run on the node that issues them; federation here means
/// subscribing across node boundaries, not query placement.
class Federation {
public:
    /// Installs a registry hook on `node`; the federation must outlive any
    /// further broker stepping. Deploy after the node has joined.
    explicit Federation(SemanticNode& node, Term provenancePredicate = Term::iri(kGeneratedByIri));

    SemanticNode& node() { return node_; }

    /// Deploys `ast`. A REGISTER query declares and advertises its output
    /// topic with a provenance triple before the first result. Throws
    /// TopicAlreadyRegisteredError when the output topic is already
    /// advertised or declared.
    DeployedQuery& deploy(const QueryAST& ast, Effects& effects);

    const std::vector<std::unique_ptr<DeployedQuery>>& queries() const { return queries_; }

    /// Ground selectors naming topics the registry still has not seen;
    /// subscriptions for them are open and waiting. The CLI strict mode
    /// reports these at end of run.
    std::vector<std::pair<const DeployedQuery*, Term>> unresolvedGroundSelectors() const;

private:
    void refresh(Effects& effects);
    void syncQuery(DeployedQuery& q, Effects& effects);
    void ingest(DeployedQuery& q, const Term& topic, const Graph& graph, Effects& effects);
    void emitDelta(DeployedQuery& q, const Term& source, const ResultDelta& delta, Effects& effects);

    SemanticNode& node_;
    Term provenancePredicate_;
    std::vector<std::unique_ptr<DeployedQuery>> queries_;
};

} // namespace semstream
