#include "semstream/node.hpp"

#include <utility>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/vocab.hpp"

namespace semstream {

namespace {

constexpr std::int64_t kServiceTimeoutMs = 5000;

Term discoveryTopic() { return Term::iri(vocab::kDiscoveryTopic); }
Term serviceTopicOf(const Term& node) { return Term::iri(vocab::serviceTopic(node.iriValue())); }

void reach(const Term& term, std::set<Term>& out) {
    if (!out.insert(term).second) return;
    if (term.isQuoted()) {
        reach(term.quotedTriple().subject, out);
        reach(term.quotedTriple().predicate, out);
        reach(term.quotedTriple().object, out);
    }
}

} // namespace

Graph reachableFrom(const Term& root, const Graph& graph) {
    std::set<Term> reached;
    reach(root, reached);
    Graph out;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const Triple& t : graph) {
            if (out.contains(t) || reached.count(t.subject) == 0) continue;
            out.insert(t);
            reach(t.object, reached);
            grew = true;
        }
    }
    return out;
}

std::optional<ParsedAdvertisement> parseAdvertisement(const Graph& graph) {
    const Term eventPred = Term::iri(vocab::kSysEvent);
    const Term streamPred = Term::iri(vocab::kSysStream);
    for (const Triple& t : graph) {
        if (t.predicate != eventPred || !t.object.isLiteral()) continue;
        const std::string& event = t.object.lexicalForm();
        if (event != "join" && event != "leave") continue;
        ParsedAdvertisement adv;
        adv.node = t.subject;
        adv.join = event == "join";
        for (const Triple& s : graph)
            if (s.predicate == streamPred && s.subject == adv.node)
                adv.streams.emplace_back(s.object, reachableFrom(s.object, graph));
        return adv;
    }
    return std::nullopt;
}

Graph registryDumpGraph(const Registry& registry) {
    const Term streamPred = Term::iri(vocab::kSysStream);
    Graph out;
    for (const auto& [topic, info] : registry) {
        out.insert({info.node, streamPred, topic});
        out.merge(info.metadata);
    }
    return out;
}

Registry parseRegistryDump(const Graph& graph) {
    const Term streamPred = Term::iri(vocab::kSysStream);
    Registry out;
    for (const Triple& t : graph)
        if (t.predicate == streamPred)
            out[t.object] = StreamInfo{t.subject, reachableFrom(t.object, graph)};
    return out;
}

SemanticNode::SemanticNode(Broker& broker, Term id, Graph backgroundKG, Closure closure)
    : broker_(broker),
      id_(std::move(id)),
      backgroundKG_(std::move(backgroundKG)),
      closure_(std::move(closure)),
      effectiveKG_(backgroundKG_) {}

void SemanticNode::join(Effects& effects) {
    broker_.attachNode(id_);
    joined_ = true;
    effects.subscribe(id_, discoveryTopic(), "sys", [this](const Delivery& d, Effects& eff) {
        handleDiscovery(decode(d.payload), eff);
    });
    effects.subscribe(id_, serviceTopicOf(id_), "sys", [this](const Delivery& d, Effects& eff) {
        handleService(decode(d.payload), eff);
    });
    // The subscribe above lands first, so the node sees its own advertisement
    // and its registry covers its own streams too.
    effects.publish(id_, discoveryTopic(), buildAdvertisement(true));
}

void SemanticNode::leave(Effects& effects) {
    if (!joined_) return;
    effects.publish(id_, discoveryTopic(), buildAdvertisement(false));
    // Detach now: the queued Leave resolves its audience at apply time, so
    // everyone else still receives it while this node stops getting mail.
    broker_.detachNode(id_);
    joined_ = false;
    subscriptions_.clear();
}

void SemanticNode::declareStream(const Term& topic, Graph metadata, Effects& effects) {
    streams_[topic] = std::move(metadata);
    if (joined_) effects.publish(id_, discoveryTopic(), buildAdvertisement(true));
}

void SemanticNode::publish(const Term& topic, const Graph& graph, Effects& effects) {
    if (!joined_ || streams_.count(topic) == 0)
        throw UndeclaredTopicError("node " + serializeTerm(id_) + " publishing undeclared topic " +
                                   serializeTerm(topic));
    effects.publish(id_, topic, graph);
}

void SemanticNode::subscribe(const Term& topic, std::string key, MessageHandler handler,
                             Effects& effects) {
    subscriptions_[topic].insert(key);
    effects.subscribe(id_, topic, std::move(key),
                      [handler = std::move(handler)](const Delivery& d, Effects& eff) {
                          handler(d.topic, decode(d.payload), d.time, eff);
                      });
}

void SemanticNode::unsubscribe(const Term& topic, const std::string& key, Effects& effects) {
    auto it = subscriptions_.find(topic);
    if (it != subscriptions_.end()) {
        it->second.erase(key);
        if (it->second.empty()) subscriptions_.erase(it);
    }
    effects.unsubscribe(id_, topic, key);
}

Graph SemanticNode::callService(const Term& target, const Graph& request) {
    if (!broker_.alive(target))
        throw NodeUnavailableError("service target offline: " + serializeTerm(target));
    const Term corr = Term::iri(id_.iriValue() + "/call/" + std::to_string(nextCall_++));
    Graph frame = request;
    frame.insert({corr, Term::iri(vocab::kSysEvent), Term::literal("request")});
    frame.insert({corr, Term::iri(vocab::kSysFrom), id_});
    broker_.perform([&](Effects& eff) { eff.publish(id_, serviceTopicOf(target), frame); });
    const std::int64_t deadline = broker_.now() + kServiceTimeoutMs;
    while (pendingResponses_.count(corr) == 0) {
        const auto next = broker_.nextEventTime();
        if (!next || *next > deadline)
            throw ServiceTimeoutError("no response from " + serializeTerm(target) + " within " +
                                      std::to_string(kServiceTimeoutMs) + "ms");
        broker_.step();
    }
    Graph response = std::move(pendingResponses_.at(corr));
    pendingResponses_.erase(corr);
    return response;
}

void SemanticNode::setServiceHandler(std::function<Graph(const Graph&)> handler) {
    serviceHandler_ = std::move(handler);
}

void SemanticNode::onRegistryChange(std::function<void(Effects&)> callback) {
    registryCallbacks_.push_back(std::move(callback));
}

Graph SemanticNode::buildAdvertisement(bool join) const {
    Graph adv;
    adv.insert({id_, Term::iri(vocab::kSysEvent), Term::literal(join ? "join" : "leave")});
    if (!join) return adv;
    for (const auto& [topic, metadata] : streams_) {
        adv.insert({id_, Term::iri(vocab::kSysStream), topic});
        adv.merge(metadata);
    }
    return adv;
}

void SemanticNode::handleDiscovery(const Graph& message, Effects& effects) {
    const auto adv = parseAdvertisement(message);
    if (!adv) return;
    applyRegistryDelta(*adv, effects);
}

void SemanticNode::handleService(const Graph& message, Effects& effects) {
    const Term eventPred = Term::iri(vocab::kSysEvent);
    const Term fromPred = Term::iri(vocab::kSysFrom);
    Term corr;
    bool isRequest = false;
    bool found = false;
    for (const Triple& t : message) {
        if (t.predicate != eventPred || !t.object.isLiteral()) continue;
        const std::string& event = t.object.lexicalForm();
        if (event != "request" && event != "response") continue;
        corr = t.subject;
        isRequest = event == "request";
        found = true;
        break;
    }
    if (!found) return;
    Graph payload;
    Term caller;
    bool haveCaller = false;
    for (const Triple& t : message) {
        if (t.subject == corr && t.predicate == fromPred) {
            caller = t.object;
            haveCaller = true;
            continue;
        }
        if (t.subject == corr && t.predicate == eventPred) continue;
        payload.insert(t);
    }
    if (isRequest) {
        if (!haveCaller) return;  // no way to answer
        Graph response = serviceHandler_ ? serviceHandler_(payload) : registryDumpGraph(registry_);
        response.insert({corr, eventPred, Term::literal("response")});
        effects.publish(id_, serviceTopicOf(caller), response);
    } else {
        pendingResponses_[corr] = std::move(payload);
    }
}

void SemanticNode::applyRegistryDelta(const ParsedAdvertisement& adv, Effects& effects) {
    Registry next = registry_;
    std::set<Term> previous;  // topics this node advertised before
    for (auto it = next.begin(); it != next.end();) {
        if (it->second.node == adv.node) {
            previous.insert(it->first);
            it = next.erase(it);
        } else {
            ++it;
        }
    }
    if (adv.join)
        for (const auto& [topic, metadata] : adv.streams)
            next[topic] = StreamInfo{adv.node, metadata};
    // Drop our own live subscriptions to topics that just disappeared.
    for (const Term& topic : previous) {
        if (next.count(topic) != 0) continue;
        auto subIt = subscriptions_.find(topic);
        if (subIt == subscriptions_.end()) continue;
        for (const std::string& key : subIt->second) effects.unsubscribe(id_, topic, key);
        subscriptions_.erase(subIt);
    }
    // Answer the first Join we see from a peer with our own advertisement so
    // newcomers learn the existing streams. The seen-set keeps this from
    // turning into a broadcast storm.
    if (adv.join && adv.node != id_ && seenNodes_.insert(adv.node).second)
        effects.publish(id_, discoveryTopic(), buildAdvertisement(true));
    if (next == registry_) return;
    registry_ = std::move(next);
    rebuildEffectiveKG(effects);
}

void SemanticNode::rebuildEffectiveKG(Effects& effects) {
    Graph merged = backgroundKG_;
    for (const auto& [topic, info] : registry_) merged.merge(info.metadata);
    if (merged != effectiveKG_) {
        effectiveKG_ = std::move(merged);
        ++kgVersion_;
    }
    for (const auto& callback : registryCallbacks_) callback(effects);
}

} // namespace semstream
