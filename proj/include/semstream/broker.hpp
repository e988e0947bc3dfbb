#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "semstream/term.hpp"

namespace semstream {

class Broker;
class Effects;

/// One message as it reaches a subscriber.
struct Delivery {
    Term topic;
    Term publisher;       // node the message was published from
    std::string payload;  // wire text (message-codec format)
    std::int64_t time = 0;
    std::uint64_t seq = 0;
};

using Handler = std::function<void(const Delivery&, Effects&)>;
using Action = std::function<void(Broker&, Effects&)>;

/// Fixed per-link virtual latencies; anything not listed uses `defaultMs`.
struct LatencyTable {
    std::int64_t defaultMs = 0;
    std::map<std::pair<Term, Term>, std::int64_t> links;  // (from, to) -> ms

    std::int64_t of(const Term& from, const Term& to) const {
        auto it = links.find({from, to});
        return it == links.end() ? defaultMs : it->second;
    }
};

enum class RunMode { Reference, Threaded };

struct BrokerMetrics {
    std::uint64_t published = 0;
    std::uint64_t delivered = 0;
    std::uint64_t skipped = 0;  // arrived after the subscription was gone
};

/// Buffer for everything a handler does to the outside world. Effects are
/// recorded in call order and applied by the broker in the deterministic
/// event order, which is what makes reference and threaded runs agree.
class Effects {
public:
    void publish(const Term& publisher, const Term& topic, Graph graph);

    /// Subscriptions are keyed (owner, topic, key) by the caller, so they
    /// can be created and removed without the broker minting ids mid-wave.
    void subscribe(const Term& owner, const Term& topic, std::string key, Handler handler);
    void unsubscribe(const Term& owner, const Term& topic, std::string key);

private:
    friend class Broker;
    struct Item {
        enum class Kind { Publish, Subscribe, Unsubscribe } kind;
        Term node;  // publisher or owner
        Term topic;
        std::string key;
        Graph graph;
        Handler handler;
    };
    std::vector<Item> items_;
};

/// Deterministic in-process publish/subscribe simulation under virtual time.
///
/// Events (deliveries and scheduled actions) live in one priority queue
/// ordered by (time, seq). Processing is wave-based: all queued events
/// sharing the earliest time are taken together, handlers run against the
/// pre-wave subscription state (in threaded mode handlers for different
/// owners run in parallel), and the buffered effects are then applied in
/// event order. Actions always run alone, between delivery segments.
///
/// Per (topic, subscription) delivery never reorders: a message's delivery
/// time is clamped to its channel predecessor's, so each subscriber sees
/// every topic in publish order even when link latencies differ.
class Broker {
public:
    explicit Broker(RunMode mode = RunMode::Reference, LatencyTable latency = {});

    RunMode mode() const { return mode_; }
    std::int64_t now() const { return now_; }
    bool idle() const { return queue_.empty(); }
    /// Time of the next queued wave; empty when idle.
    std::optional<std::int64_t> nextEventTime() const {
        return queue_.empty() ? std::nullopt : std::optional<std::int64_t>(queue_.top().time);
    }
    const BrokerMetrics& metrics() const { return metrics_; }

    /// Registers a node id. Throws DuplicateNodeIdError on reuse (ids stay
    /// reserved after detach; a departed id cannot rejoin as a new node).
    void attachNode(const Term& id);
    /// Marks the node dead and drops every subscription it owns.
    void detachNode(const Term& id);
    bool alive(const Term& id) const;

    /// Enqueues an action at `time` (>= now). Actions run serially with
    /// direct broker access; their effects apply immediately after.
    void scheduleAction(std::int64_t time, Action action);

    /// Runs `fn` right now as if it were a scheduled action. For driver
    /// code between waves (tests, the scenario runner, service calls);
    /// must not be called from inside a handler.
    void perform(const std::function<void(Effects&)>& fn);

    /// Processes one wave (all queued events at the earliest time).
    /// Returns false when the queue is empty.
    bool step();
    void runUntil(std::int64_t deadline);  // waves with time <= deadline
    void runAll();

    /// Subscriptions currently attached to a topic, in delivery order.
    std::vector<std::pair<Term, std::string>> subscribersOf(const Term& topic) const;

private:
    struct Subscription {
        Term owner;
        Handler handler;
        std::int64_t lastDelivery;
    };
    struct Event {
        std::int64_t time = 0;
        std::uint64_t seq = 0;
        bool isAction = false;
        Term topic;
        Term owner;
        std::string key;
        Term publisher;
        std::shared_ptr<const std::string> payload;
        Action action;
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    void applyEffects(Effects& effects);
    void applyPublish(const Term& publisher, const Term& topic, const Graph& graph);
    void runSegment(std::vector<Event>& segment);

    RunMode mode_;
    LatencyTable latency_;
    std::int64_t now_ = 0;
    std::uint64_t nextSeq_ = 0;
    std::uint64_t nextMessage_ = 0;
    bool inWave_ = false;
    std::map<Term, bool> nodes_;  // id -> alive
    std::map<Term, std::map<std::pair<Term, std::string>, Subscription>> topics_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    BrokerMetrics metrics_;
};

} // namespace semstream
