#include "semstream/federation.hpp"

#include <utility>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/vocab.hpp"

namespace semstream {

std::vector<TriplePattern> selectorComponent(const QueryAST& ast, const std::string& var) {
    const auto& statics = ast.staticPatterns;
    std::vector<std::set<std::string>> vars(statics.size());
    for (std::size_t i = 0; i < statics.size(); ++i) collectVariables(statics[i], vars[i]);

    std::set<std::string> reached{var};
    std::vector<bool> in(statics.size(), false);
    bool grew = true;
    while (grew) {
        grew = false;
        for (std::size_t i = 0; i < statics.size(); ++i) {
            if (in[i]) continue;
            bool touches = false;
            for (const std::string& v : vars[i])
                if (reached.count(v) != 0) {
                    touches = true;
                    break;
                }
            if (!touches) continue;
            in[i] = true;
            reached.insert(vars[i].begin(), vars[i].end());
            grew = true;
        }
    }
    std::vector<TriplePattern> out;
    for (std::size_t i = 0; i < statics.size(); ++i)
        if (in[i]) out.push_back(statics[i]);
    return out;
}

std::vector<std::set<Term>> resolveSelectors(const QueryAST& ast, const Registry& registry,
                                             const Graph& effectiveKG, const Closure& closure,
                                             const std::set<Term>& exclude) {
    std::vector<std::set<Term>> out(ast.streamPatterns.size());
    for (std::size_t k = 0; k < ast.streamPatterns.size(); ++k) {
        const PatternTerm& selector = ast.streamPatterns[k].selector;
        if (selector.isGround()) {
            out[k].insert(selector.term());
            continue;
        }
        if (!selector.isVar()) continue;
        const auto component = selectorComponent(ast, selector.varName());
        for (const auto& [topic, info] : registry) {
            if (exclude.count(topic) != 0) continue;
            Binding seed;
            seed.bind(selector.varName(), topic);
            if (!entailedMatchBGP(component, effectiveKG, closure, seed).empty())
                out[k].insert(topic);
        }
    }
    return out;
}

DeployedQuery::DeployedQuery(QueryAST ast, Graph kg, Closure closure, std::string key)
    : runtime_(std::move(ast), std::move(kg), std::move(closure)), key_(std::move(key)) {}

bool DeployedQuery::publishes() const {
    return runtime_.ast().registerIri.has_value() &&
           runtime_.ast().form == QueryAST::Form::Construct;
}

void DeployedQuery::onResults(
    std::function<void(const Term&, const ResultDelta&, Effects&)> sink) {
    sinks_.push_back(std::move(sink));
}

Federation::Federation(SemanticNode& node, Term provenancePredicate)
    : node_(node), provenancePredicate_(std::move(provenancePredicate)) {
    node_.onRegistryChange([this](Effects& eff) { refresh(eff); });
}

DeployedQuery& Federation::deploy(const QueryAST& ast, Effects& effects) {
    if (ast.registerIri) {
        const Term& topic = *ast.registerIri;
        if (node_.registry().count(topic) != 0 || node_.declaredStreams().count(topic) != 0)
            throw TopicAlreadyRegisteredError("output topic already in use: " +
                                              serializeTerm(topic));
    }
    const std::string key = "q" + std::to_string(queries_.size());
    queries_.push_back(std::unique_ptr<DeployedQuery>(
        new DeployedQuery(ast, node_.effectiveKG(), node_.closure(), key)));
    DeployedQuery& q = *queries_.back();
    q.kgVersionSeen_ = node_.kgVersion();
    if (q.publishes()) {
        // the query names both itself and its output stream
        Graph provenance;
        provenance.insert({q.outputTopic(), provenancePredicate_, q.outputTopic()});
        node_.declareStream(q.outputTopic(), std::move(provenance), effects);
    }
    syncQuery(q, effects);
    return q;
}

std::vector<std::pair<const DeployedQuery*, Term>> Federation::unresolvedGroundSelectors() const {
    std::vector<std::pair<const DeployedQuery*, Term>> out;
    for (const auto& q : queries_)
        for (const StreamPattern& sp : q->ast().streamPatterns)
            if (sp.selector.isGround() && node_.registry().count(sp.selector.term()) == 0)
                out.emplace_back(q.get(), sp.selector.term());
    return out;
}

void Federation::refresh(Effects& effects) {
    for (const auto& qp : queries_) {
        DeployedQuery& q = *qp;
        syncQuery(q, effects);
        if (q.kgVersionSeen_ != node_.kgVersion()) {
            q.kgVersionSeen_ = node_.kgVersion();
            emitDelta(q, Term::iri(vocab::kDiscoveryTopic),
                      q.runtime_.setKnowledgeGraph(node_.effectiveKG(), node_.closure()), effects);
        }
    }
}

void Federation::syncQuery(DeployedQuery& q, Effects& effects) {
    std::set<Term> exclude;
    if (q.publishes()) exclude.insert(q.outputTopic());
    q.resolved_ =
        resolveSelectors(q.ast(), node_.registry(), node_.effectiveKG(), node_.closure(), exclude);
    for (std::size_t k = 0; k < q.resolved_.size(); ++k) q.runtime_.setTopics(k, q.resolved_[k]);

    std::set<Term> want;
    for (const auto& topics : q.resolved_) want.insert(topics.begin(), topics.end());
    for (const Term& topic : q.subscribed_)
        if (want.count(topic) == 0) node_.unsubscribe(topic, q.key_, effects);
    DeployedQuery* target = &q;
    for (const Term& topic : want) {
        if (q.subscribed_.count(topic) != 0) continue;
        node_.subscribe(topic, q.key_,
                        [this, target](const Term& t, const Graph& g, std::int64_t, Effects& eff) {
                            ingest(*target, t, g, eff);
                        },
                        effects);
    }
    q.subscribed_ = std::move(want);
}

void Federation::ingest(DeployedQuery& q, const Term& topic, const Graph& graph,
                        Effects& effects) {
    emitDelta(q, topic, q.runtime_.ingest(StreamElement{topic, graph, q.nextSeq_++}), effects);
}

void Federation::emitDelta(DeployedQuery& q, const Term& source, const ResultDelta& delta,
                           Effects& effects) {
    if (delta.newBindings.empty()) return;
    if (q.publishes()) {
        Graph out = q.runtime_.constructOutput(delta.newBindings);
        if (!out.empty()) {
            node_.publish(q.outputTopic(), out, effects);
            ++q.outputsPublished_;
        }
    }
    for (const auto& sink : q.sinks_) sink(source, delta, effects);
}

} // namespace semstream
