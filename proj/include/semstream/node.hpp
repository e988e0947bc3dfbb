#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semstream/broker.hpp"
#include "semstream/reasoner.hpp"
#include "semstream/term.hpp"

namespace semstream {

/// Everything a node knows about one discovered stream.
struct StreamInfo {
    Term node;       // advertising node
    Graph metadata;  // topic-rooted description (:generatedBy, :mountedOn…)

    friend bool operator==(const StreamInfo& a, const StreamInfo& b) {
        return a.node == b.node && a.metadata == b.metadata;
    }
    friend bool operator!=(const StreamInfo& a, const StreamInfo& b) { return !(a == b); }
};

/// topic -> info; a pure function of the advertisement history the node saw.
using Registry = std::map<Term, StreamInfo>;

/// Directed reachability from `root` (objects, and components of quoted
/// terms). Advertisements carry all streams' metadata in one graph; each
/// stream's share is whatever its topic IRI can reach.
Graph reachableFrom(const Term& root, const Graph& graph);

struct ParsedAdvertisement {
    Term node;
    bool join = false;
    std::vector<std::pair<Term, Graph>> streams;
};
/// Empty when the graph carries no well-formed advertisement.
std::optional<ParsedAdvertisement> parseAdvertisement(const Graph& graph);

Graph registryDumpGraph(const Registry& registry);
Registry parseRegistryDump(const Graph& graph);

using MessageHandler =
    std::function<void(const Term& topic, const Graph& graph, std::int64_t time, Effects&)>;

/// A processing unit on the broker: owns a background knowledge graph,
/// publishes and subscribes semantic streams, answers services, and keeps a
/// stream registry fed by the discovery protocol.
///
/// Lifecycle calls (join, leave) and callService belong in action/driver
/// context; publish/subscribe are safe anywhere an Effects buffer exists.
class SemanticNode {
public:
    SemanticNode(Broker& broker, Term id, Graph backgroundKG, Closure closure);

    const Term& id() const { return id_; }
    Broker& broker() { return broker_; }
    const Closure& closure() const { return closure_; }
    const Registry& registry() const { return registry_; }
    const Graph& backgroundKG() const { return backgroundKG_; }
    /// backgroundKG merged with all registry metadata.
    const Graph& effectiveKG() const { return effectiveKG_; }
    /// Bumps whenever effectiveKG changes; lets query runtimes re-seed lazily.
    std::uint64_t kgVersion() const { return kgVersion_; }
    bool joined() const { return joined_; }

    /// Attaches to the broker (DuplicateNodeIdError on id reuse), opens the
    /// reserved subscriptions, and broadcasts a Join advertisement. Existing
    /// nodes answer with their own advertisements.
    void join(Effects& effects);

    /// Broadcasts Leave and detaches; in-flight deliveries to this node die.
    void leave(Effects& effects);

    /// Declares (or updates) a published stream. Re-advertises when joined.
    void declareStream(const Term& topic, Graph metadata, Effects& effects);
    const std::map<Term, Graph>& declaredStreams() const { return streams_; }

    /// UndeclaredTopicError unless declareStream came first.
    void publish(const Term& topic, const Graph& graph, Effects& effects);

    void subscribe(const Term& topic, std::string key, MessageHandler handler, Effects& effects);
    void unsubscribe(const Term& topic, const std::string& key, Effects& effects);

    /// Synchronous request/response over the target's service topic; drives
    /// the broker until the answer arrives (virtual timeout 5000 ms).
    /// Driver context only. Throws NodeUnavailableError / ServiceTimeoutError.
    Graph callService(const Term& target, const Graph& request);

    /// Replaces the registry-dump default answering service requests.
    void setServiceHandler(std::function<Graph(const Graph&)> handler);

    /// Runs after every registry change (the federation hook).
    void onRegistryChange(std::function<void(Effects&)> callback);

private:
    Graph buildAdvertisement(bool join) const;
    void handleDiscovery(const Graph& message, Effects& effects);
    void handleService(const Graph& message, Effects& effects);
    void applyRegistryDelta(const ParsedAdvertisement& adv, Effects& effects);
    void rebuildEffectiveKG(Effects& effects);

    Broker& broker_;
    Term id_;
    Graph backgroundKG_;
    Closure closure_;
    bool joined_ = false;
    std::map<Term, Graph> streams_;          // declared topic -> metadata
    std::map<Term, std::set<std::string>> subscriptions_;  // own, by topic
    Registry registry_;
    Graph effectiveKG_;
    std::uint64_t kgVersion_ = 0;
    std::set<Term> seenNodes_;  // whose Join we already answered
    std::map<Term, Graph> pendingResponses_;
    std::uint64_t nextCall_ = 0;
    std::function<Graph(const Graph&)> serviceHandler_;
    std::vector<std::function<void(Effects&)>> registryCallbacks_;
};

} // namespace semstream
