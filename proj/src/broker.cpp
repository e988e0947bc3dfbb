#include "semstream/broker.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"

namespace semstream {

namespace {
constexpr std::int64_t kNever = INT64_MIN;
}

void Effects::publish(const Term& publisher, const Term& topic, Graph graph) {
    Item item{Item::Kind::Publish, publisher, topic, {}, std::move(graph), {}};
    items_.push_back(std::move(item));
}

void Effects::subscribe(const Term& owner, const Term& topic, std::string key, Handler handler) {
    Item item{Item::Kind::Subscribe, owner, topic, std::move(key), {}, std::move(handler)};
    items_.push_back(std::move(item));
}

void Effects::unsubscribe(const Term& owner, const Term& topic, std::string key) {
    Item item{Item::Kind::Unsubscribe, owner, topic, std::move(key), {}, {}};
    items_.push_back(std::move(item));
}

Broker::Broker(RunMode mode, LatencyTable latency) : mode_(mode), latency_(std::move(latency)) {
    if (latency_.defaultMs < 0) throw Error("negative default latency");
    for (const auto& [link, ms] : latency_.links)
        if (ms < 0)
            throw Error("negative latency on link " + serializeTerm(link.first) + " -> " +
                        serializeTerm(link.second));
}

void Broker::attachNode(const Term& id) {
    if (!nodes_.emplace(id, true).second)
        throw DuplicateNodeIdError("node id already in use: " + serializeTerm(id));
}

void Broker::detachNode(const Term& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || !it->second) return;
    it->second = false;
    for (auto topicIt = topics_.begin(); topicIt != topics_.end();) {
        auto& subs = topicIt->second;
        for (auto subIt = subs.begin(); subIt != subs.end();)
            subIt = subIt->first.first == id ? subs.erase(subIt) : std::next(subIt);
        topicIt = subs.empty() ? topics_.erase(topicIt) : std::next(topicIt);
    }
}

bool Broker::alive(const Term& id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && it->second;
}

void Broker::scheduleAction(std::int64_t time, Action action) {
    if (time < now_) throw Error("action scheduled in the past");
    Event ev;
    ev.time = time;
    ev.seq = nextSeq_++;
    ev.isAction = true;
    ev.action = std::move(action);
    queue_.push(std::move(ev));
}

void Broker::perform(const std::function<void(Effects&)>& fn) {
    if (inWave_) throw Error("perform() called from inside a handler");
    Effects effects;
    fn(effects);
    applyEffects(effects);
}

bool Broker::step() {
    if (queue_.empty()) return false;
    const std::int64_t t = queue_.top().time;
    std::vector<Event> wave;
    while (!queue_.empty() && queue_.top().time == t) {
        wave.push_back(queue_.top());
        queue_.pop();
    }
    now_ = t;
    inWave_ = true;
    try {
        std::vector<Event> segment;
        for (Event& ev : wave) {
            if (!ev.isAction) {
                segment.push_back(std::move(ev));
                continue;
            }
            runSegment(segment);
            segment.clear();
            Effects effects;
            ev.action(*this, effects);
            applyEffects(effects);
        }
        runSegment(segment);
    } catch (...) {
        inWave_ = false;
        throw;
    }
    inWave_ = false;
    return true;
}

void Broker::runUntil(std::int64_t deadline) {
    while (!queue_.empty() && queue_.top().time <= deadline) step();
    now_ = std::max(now_, deadline);
}

void Broker::runAll() {
    while (step()) {
    }
}

std::vector<std::pair<Term, std::string>> Broker::subscribersOf(const Term& topic) const {
    std::vector<std::pair<Term, std::string>> out;
    auto it = topics_.find(topic);
    if (it == topics_.end()) return out;
    for (const auto& [key, sub] : it->second) out.push_back(key);
    return out;
}

/// Handlers see the pre-segment subscription table; their effects apply
/// afterwards in event order. Reference and threaded mode share this exact
/// sequence — threading only spreads the handler bodies across owners.
void Broker::runSegment(std::vector<Event>& segment) {
    if (segment.empty()) return;
    struct Slot {
        const Event* event;
        const Subscription* sub;
        Effects effects;
        std::exception_ptr error;
    };
    std::vector<Slot> slots;
    slots.reserve(segment.size());
    for (const Event& ev : segment) {
        const Subscription* sub = nullptr;
        auto topicIt = topics_.find(ev.topic);
        if (topicIt != topics_.end()) {
            auto subIt = topicIt->second.find({ev.owner, ev.key});
            if (subIt != topicIt->second.end()) sub = &subIt->second;
        }
        if (sub == nullptr) {
            ++metrics_.skipped;
            continue;
        }
        ++metrics_.delivered;
        slots.push_back(Slot{&ev, sub, {}, nullptr});
    }

    std::map<Term, std::vector<std::size_t>> byOwner;
    for (std::size_t i = 0; i < slots.size(); ++i)
        byOwner[slots[i].event->owner].push_back(i);
    std::vector<const std::vector<std::size_t>*> groups;
    groups.reserve(byOwner.size());
    for (const auto& [owner, indices] : byOwner) groups.push_back(&indices);

    const auto runGroup = [&slots](const std::vector<std::size_t>& indices) {
        for (std::size_t i : indices) {
            Slot& slot = slots[i];
            const Event& ev = *slot.event;
            const Delivery delivery{ev.topic, ev.publisher, *ev.payload, ev.time, ev.seq};
            try {
                slot.sub->handler(delivery, slot.effects);
            } catch (...) {
                slot.error = std::current_exception();
            }
        }
    };
    if (mode_ == RunMode::Threaded) {
        const int n = static_cast<int>(groups.size());
#pragma omp parallel for schedule(dynamic)
        for (int g = 0; g < n; ++g) runGroup(*groups[g]);
    } else {
        for (const auto* group : groups) runGroup(*group);
    }

    for (Slot& slot : slots) {
        if (slot.error) std::rethrow_exception(slot.error);
        applyEffects(slot.effects);
    }
}

void Broker::applyEffects(Effects& effects) {
    for (Effects::Item& item : effects.items_) {
        switch (item.kind) {
        case Effects::Item::Kind::Publish:
            applyPublish(item.node, item.topic, item.graph);
            break;
        case Effects::Item::Kind::Subscribe:
            topics_[item.topic][{item.node, item.key}] =
                Subscription{item.node, std::move(item.handler), kNever};
            break;
        case Effects::Item::Kind::Unsubscribe: {
            auto it = topics_.find(item.topic);
            if (it == topics_.end()) break;
            it->second.erase({item.node, item.key});
            if (it->second.empty()) topics_.erase(it);
            break;
        }
        }
    }
    effects.items_.clear();
}

void Broker::applyPublish(const Term& publisher, const Term& topic, const Graph& graph) {
    ++metrics_.published;
    // per-message blank-node scope: labels never collide across messages
    const std::string scope = "m" + std::to_string(nextMessage_++);
    const auto payload = std::make_shared<const std::string>(encode(scopeBlankNodes(graph, scope)));
    auto it = topics_.find(topic);
    if (it == topics_.end()) return;
    for (auto& [key, sub] : it->second) {
        Event ev;
        ev.time = std::max(now_ + latency_.of(publisher, sub.owner), sub.lastDelivery);
        ev.seq = nextSeq_++;
        ev.topic = topic;
        ev.owner = sub.owner;
        ev.key = key.second;
        ev.publisher = publisher;
        ev.payload = payload;
        sub.lastDelivery = ev.time;
        queue_.push(std::move(ev));
    }
}

} // namespace semstream
