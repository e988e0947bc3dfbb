#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "semstream/broker.hpp"
#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/node.hpp"
#include "semstream/reasoner.hpp"
#include "semstream/vocab.hpp"

#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace semstream;
using namespace semstream::testing;

namespace {

Term agent(const std::string& name) { return demoIri("agent/" + name); }
Term topicIri(const std::string& name) { return demoIri("stream/" + name); }

Closure emptyClosure() { return computeClosure(Ontology{}); }

/// Topic-rooted metadata: topic -> sensor -> platform.
Graph sensorMeta(const Term& topic, const std::string& sensor, const std::string& platform) {
    Graph g;
    g.insert({topic, demoIri("generatedBy"), demoIri(sensor)});
    g.insert({demoIri(sensor), demoIri("mountedOn"), demoIri(platform)});
    return g;
}

Graph agentKG(const std::string& name) {
    Graph g;
    g.insert({agent(name), rdfType(), demoIri("Agent")});
    return g;
}

void drain(Broker& broker, const std::function<void(Effects&)>& fn) {
    broker.perform(fn);
    broker.runAll();
}

/// Raw wiretap on the discovery channel; frames arrive in publish order.
struct DiscoveryTap {
    std::vector<Graph> frames;

    void attach(Broker& broker) {
        const Term id = demoIri("tap");
        broker.attachNode(id);
        broker.perform([&](Effects& eff) {
            eff.subscribe(id, Term::iri(vocab::kDiscoveryTopic), "tap",
                          [this](const Delivery& d, Effects&) {
                              frames.push_back(decode(d.payload));
                          });
        });
    }
};

/// Registry as a left fold over advertisement history: later frames from a
/// node replace its earlier entries. The live registries must agree with it.
Registry foldRegistry(const std::vector<Graph>& frames) {
    Registry reg;
    for (const Graph& frame : frames) {
        const auto adv = parseAdvertisement(frame);
        if (!adv) continue;
        for (auto it = reg.begin(); it != reg.end();)
            it = it->second.node == adv->node ? reg.erase(it) : std::next(it);
        if (adv->join)
            for (const auto& [topic, meta] : adv->streams) reg[topic] = StreamInfo{adv->node, meta};
    }
    return reg;
}

} // namespace

TEST_CASE("reachableFrom walks objects and quoted-term components") {
    const Term root = topicIri("cam0");
    const Term quoted = Term::quoted(demoIri("a"), demoIri("b"), demoIri("c"));
    Graph g;
    g.insert({root, demoIri("annotation"), quoted});
    g.insert({demoIri("a"), demoIri("p"), demoIri("z")});
    g.insert({demoIri("c"), demoIri("q"), demoIri("w")});
    g.insert({demoIri("elsewhere"), demoIri("p"), root});  // wrong direction

    const Graph out = reachableFrom(root, g);
    CHECK(out.size() == 3);
    CHECK(out.contains({root, demoIri("annotation"), quoted}));
    CHECK(out.contains({demoIri("a"), demoIri("p"), demoIri("z")}));
    CHECK(out.contains({demoIri("c"), demoIri("q"), demoIri("w")}));

    CHECK(reachableFrom(demoIri("w"), g).empty());
}

TEST_CASE("advertisements parse back into per-stream partitions") {
    const Term node = agent("a");
    Graph adv;
    adv.insert({node, Term::iri(vocab::kSysEvent), Term::literal("join")});
    adv.insert({node, Term::iri(vocab::kSysStream), topicIri("cam0")});
    adv.insert({node, Term::iri(vocab::kSysStream), topicIri("lidar0")});
    adv.merge(sensorMeta(topicIri("cam0"), "camera0", "car1"));
    adv.merge(sensorMeta(topicIri("lidar0"), "lidar0", "car1"));

    const auto parsed = parseAdvertisement(adv);
    REQUIRE(parsed.has_value());
    CHECK(parsed->node == node);
    CHECK(parsed->join);
    REQUIRE(parsed->streams.size() == 2);
    CHECK(parsed->streams[0].first == topicIri("cam0"));
    CHECK(parsed->streams[0].second == sensorMeta(topicIri("cam0"), "camera0", "car1"));
    CHECK(parsed->streams[1].first == topicIri("lidar0"));
    CHECK(parsed->streams[1].second == sensorMeta(topicIri("lidar0"), "lidar0", "car1"));

    Graph leave;
    leave.insert({node, Term::iri(vocab::kSysEvent), Term::literal("leave")});
    const auto parsedLeave = parseAdvertisement(leave);
    REQUIRE(parsedLeave.has_value());
    CHECK(!parsedLeave->join);
    CHECK(parsedLeave->streams.empty());

    CHECK(!parseAdvertisement(Graph{}).has_value());
    Graph service;
    service.insert({demoIri("call0"), Term::iri(vocab::kSysEvent), Term::literal("request")});
    CHECK(!parseAdvertisement(service).has_value());
}

TEST_CASE("registry dumps round-trip") {
    Registry reg;
    reg[topicIri("cam0")] = StreamInfo{agent("a"), sensorMeta(topicIri("cam0"), "camera0", "car1")};
    reg[topicIri("gps0")] = StreamInfo{agent("b"), sensorMeta(topicIri("gps0"), "gps0", "car2")};
    CHECK(parseRegistryDump(registryDumpGraph(reg)) == reg);
    CHECK(parseRegistryDump(registryDumpGraph(Registry{})) == Registry{});
}

TEST_CASE("the first node joins an empty domain") {
    Broker broker;
    SemanticNode a(broker, agent("a"), agentKG("a"), emptyClosure());
    CHECK(!a.joined());
    drain(broker, [&](Effects& eff) { a.join(eff); });

    CHECK(a.joined());
    CHECK(broker.alive(agent("a")));
    CHECK(a.registry().empty());
    CHECK(a.effectiveKG() == agentKG("a"));
    CHECK(a.kgVersion() == 0);
    CHECK(broker.metrics().published == 1);  // its own Join advertisement
}

TEST_CASE("two nodes discover each other's streams") {
    Broker broker;
    DiscoveryTap tap;
    tap.attach(broker);

    SemanticNode a(broker, agent("a"), agentKG("a"), emptyClosure());
    SemanticNode b(broker, agent("b"), agentKG("b"), emptyClosure());
    drain(broker, [&](Effects& eff) {
        a.declareStream(topicIri("cam0"), sensorMeta(topicIri("cam0"), "camera0", "car1"), eff);
        a.join(eff);
    });
    drain(broker, [&](Effects& eff) {
        b.declareStream(topicIri("gps0"), sensorMeta(topicIri("gps0"), "gps0", "car1"), eff);
        b.join(eff);
    });

    Registry expected;
    expected[topicIri("cam0")] =
        StreamInfo{agent("a"), sensorMeta(topicIri("cam0"), "camera0", "car1")};
    expected[topicIri("gps0")] =
        StreamInfo{agent("b"), sensorMeta(topicIri("gps0"), "gps0", "car1")};
    CHECK(a.registry() == expected);
    CHECK(b.registry() == expected);
    CHECK(a.registry() == foldRegistry(tap.frames));

    Graph kgA = agentKG("a");
    kgA.merge(sensorMeta(topicIri("cam0"), "camera0", "car1"));
    kgA.merge(sensorMeta(topicIri("gps0"), "gps0", "car1"));
    CHECK(a.effectiveKG() == kgA);
    CHECK(a.kgVersion() == 2);  // own stream, then b's

    // join(a) + join(b) + a's response + b's re-advertisement
    CHECK(tap.frames.size() == 4);
}

TEST_CASE("duplicate node ids cannot join") {
    Broker broker;
    SemanticNode a(broker, agent("a"), Graph{}, emptyClosure());
    SemanticNode impostor(broker, agent("a"), Graph{}, emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    CHECK_THROWS_AS(broker.perform([&](Effects& eff) { impostor.join(eff); }),
                    DuplicateNodeIdError);
}

TEST_CASE("publishing requires a declared stream") {
    Broker broker;
    SemanticNode a(broker, agent("a"), Graph{}, emptyClosure());
    SemanticNode b(broker, agent("b"), Graph{}, emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    drain(broker, [&](Effects& eff) { b.join(eff); });

    Graph detection;
    detection.insert({demoIri("obs1"), rdfType(), demoIri("Detection")});

    CHECK_THROWS_AS(
        broker.perform([&](Effects& eff) { a.publish(topicIri("cam0"), detection, eff); }),
        UndeclaredTopicError);

    std::vector<std::pair<std::int64_t, Graph>> got;
    drain(broker, [&](Effects& eff) {
        b.subscribe(topicIri("cam0"), "w",
                    [&got](const Term&, const Graph& g, std::int64_t t, Effects&) {
                        got.emplace_back(t, g);
                    },
                    eff);
    });
    drain(broker, [&](Effects& eff) {
        a.declareStream(topicIri("cam0"), sensorMeta(topicIri("cam0"), "camera0", "car1"), eff);
    });
    broker.scheduleAction(25, [&](Broker&, Effects& eff) {
        a.publish(topicIri("cam0"), detection, eff);
    });
    broker.runAll();

    REQUIRE(got.size() == 1);
    CHECK(got[0].first == 25);
    CHECK(got[0].second == detection);
}

TEST_CASE("declaring a stream while joined re-advertises without a storm") {
    Broker broker;
    DiscoveryTap tap;
    tap.attach(broker);
    SemanticNode a(broker, agent("a"), Graph{}, emptyClosure());
    SemanticNode b(broker, agent("b"), Graph{}, emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    drain(broker, [&](Effects& eff) { b.join(eff); });
    const std::size_t handshake = tap.frames.size();

    drain(broker, [&](Effects& eff) {
        a.declareStream(topicIri("cam1"), sensorMeta(topicIri("cam1"), "camera1", "car1"), eff);
    });
    CHECK(tap.frames.size() == handshake + 1);  // one update, no responses
    CHECK(b.registry().count(topicIri("cam1")) == 1);
    CHECK(b.registry() == a.registry());
    CHECK(b.registry() == foldRegistry(tap.frames));

    // Re-declaring the same stream is idempotent for every observer.
    const auto before = b.registry();
    const auto versionBefore = b.kgVersion();
    drain(broker, [&](Effects& eff) {
        a.declareStream(topicIri("cam1"), sensorMeta(topicIri("cam1"), "camera1", "car1"), eff);
    });
    CHECK(tap.frames.size() == handshake + 2);
    CHECK(b.registry() == before);
    CHECK(b.kgVersion() == versionBefore);
    CHECK(b.registry() == foldRegistry(tap.frames));
}

TEST_CASE("leave removes registry entries and cancels dead subscriptions") {
    Broker broker;
    SemanticNode a(broker, agent("a"), agentKG("a"), emptyClosure());
    SemanticNode b(broker, agent("b"), agentKG("b"), emptyClosure());
    SemanticNode c(broker, agent("c"), agentKG("c"), emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    drain(broker, [&](Effects& eff) {
        b.declareStream(topicIri("gps0"), sensorMeta(topicIri("gps0"), "gps0", "car1"), eff);
        b.join(eff);
    });
    drain(broker, [&](Effects& eff) { c.join(eff); });
    drain(broker, [&](Effects& eff) {
        c.subscribe(topicIri("gps0"), "w",
                    [](const Term&, const Graph&, std::int64_t, Effects&) {}, eff);
    });
    CHECK(broker.subscribersOf(topicIri("gps0")).size() == 1);
    CHECK(c.registry().count(topicIri("gps0")) == 1);
    const auto versionBefore = c.kgVersion();

    drain(broker, [&](Effects& eff) { b.leave(eff); });

    CHECK(!b.joined());
    CHECK(!broker.alive(agent("b")));
    CHECK(a.registry().empty());
    CHECK(c.registry().empty());
    CHECK(broker.subscribersOf(topicIri("gps0")).empty());
    CHECK(c.effectiveKG() == agentKG("c"));
    CHECK(c.kgVersion() == versionBefore + 1);
}

TEST_CASE("registry change callbacks fire once per change") {
    Broker broker;
    SemanticNode a(broker, agent("a"), agentKG("a"), emptyClosure());
    int fired = 0;
    a.onRegistryChange([&fired](Effects&) { ++fired; });
    drain(broker, [&](Effects& eff) { a.join(eff); });
    CHECK(fired == 0);

    SemanticNode b(broker, agent("b"), agentKG("b"), emptyClosure());
    drain(broker, [&](Effects& eff) {
        b.declareStream(topicIri("gps0"), sensorMeta(topicIri("gps0"), "gps0", "car1"), eff);
        b.join(eff);
    });
    CHECK(fired == 1);
    CHECK(a.kgVersion() == 1);

    // a topic with empty metadata changes the registry but not the KG
    drain(broker, [&](Effects& eff) { b.declareStream(topicIri("mute"), Graph{}, eff); });
    CHECK(fired == 2);
    CHECK(a.kgVersion() == 1);
}

TEST_CASE("service requests return the registry dump by default") {
    Broker broker;
    SemanticNode a(broker, agent("a"), agentKG("a"), emptyClosure());
    SemanticNode b(broker, agent("b"), agentKG("b"), emptyClosure());
    drain(broker, [&](Effects& eff) {
        a.declareStream(topicIri("cam0"), sensorMeta(topicIri("cam0"), "camera0", "car1"), eff);
        a.join(eff);
    });
    drain(broker, [&](Effects& eff) { b.join(eff); });

    const Graph response = b.callService(agent("a"), Graph{});
    CHECK(response == registryDumpGraph(a.registry()));
    CHECK(parseRegistryDump(response) == a.registry());

    // self-call answers from the same code path as a remote one
    const Graph self = a.callService(agent("a"), Graph{});
    CHECK(self == registryDumpGraph(a.registry()));
}

TEST_CASE("custom service handlers see the bare request") {
    Broker broker;
    SemanticNode a(broker, agent("a"), Graph{}, emptyClosure());
    SemanticNode b(broker, agent("b"), Graph{}, emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    drain(broker, [&](Effects& eff) { b.join(eff); });

    Graph request;
    request.insert({demoIri("q1"), demoIri("asksFor"), demoIri("speed")});

    Graph seen;
    b.setServiceHandler([&seen](const Graph& req) {
        seen = req;
        Graph out = req;
        out.insert({demoIri("q1"), demoIri("answer"), Term::literal("42", vocab::kXsdInteger)});
        return out;
    });

    const Graph response = a.callService(agent("b"), request);
    CHECK(seen == request);  // envelope stripped before the handler runs
    Graph expected = request;
    expected.insert({demoIri("q1"), demoIri("answer"), Term::literal("42", vocab::kXsdInteger)});
    CHECK(response == expected);
}

TEST_CASE("service calls fail fast or time out") {
    LatencyTable lat;
    lat.links[{agent("b"), agent("a")}] = 6000;  // responses can never make it back
    Broker broker(RunMode::Reference, lat);
    SemanticNode a(broker, agent("a"), Graph{}, emptyClosure());
    SemanticNode b(broker, agent("b"), Graph{}, emptyClosure());
    drain(broker, [&](Effects& eff) { a.join(eff); });
    drain(broker, [&](Effects& eff) { b.join(eff); });

    CHECK_THROWS_AS(a.callService(agent("ghost"), Graph{}), NodeUnavailableError);
    CHECK_THROWS_AS(a.callService(agent("b"), Graph{}), ServiceTimeoutError);

    drain(broker, [&](Effects& eff) { b.leave(eff); });
    CHECK_THROWS_AS(a.callService(agent("b"), Graph{}), NodeUnavailableError);
}

TEST_CASE("registries converge across randomized membership schedules") {
    for (std::uint64_t seed = 700; seed < 730; ++seed) {
        CAPTURE(seed);
        Rng rng(seed);
        Broker broker;
        DiscoveryTap tap;
        tap.attach(broker);

        const int n = rng.intIn(3, 5);
        std::vector<std::unique_ptr<SemanticNode>> nodes;
        for (int i = 0; i < n; ++i) {
            const std::string name = "r" + std::to_string(i);
            nodes.push_back(std::make_unique<SemanticNode>(broker, agent(name), agentKG(name),
                                                           emptyClosure()));
            const int streams = rng.intIn(0, 2);
            for (int s = 0; s < streams; ++s) {
                const Term topic = topicIri(name + "/t" + std::to_string(s));
                Graph meta = sensorMeta(topic, "sensor_" + name + std::to_string(s),
                                        "car" + std::to_string(rng.intIn(1, 2)));
                if (rng.chance(0.3)) {
                    const Term note = Term::blank("note" + std::to_string(s));
                    meta.insert({topic, demoIri("note"), note});
                    meta.insert({note, demoIri("value"), Term::literal(name)});
                }
                broker.perform([&](Effects& eff) { nodes[i]->declareStream(topic, meta, eff); });
            }

            SemanticNode* node = nodes[i].get();
            const std::int64_t joinAt = rng.intIn(0, 40);
            broker.scheduleAction(joinAt, [node](Broker&, Effects& eff) { node->join(eff); });
            if (rng.chance(0.3)) {
                broker.scheduleAction(joinAt + rng.intIn(1, 40),
                                      [node](Broker&, Effects& eff) { node->leave(eff); });
            } else if (rng.chance(0.4)) {
                const Term late = topicIri(name + "/late");
                broker.scheduleAction(joinAt + rng.intIn(1, 20),
                                      [node, late](Broker&, Effects& eff) {
                                          if (node->joined())
                                              node->declareStream(late, Graph{}, eff);
                                      });
            }
        }
        broker.runAll();

        const Registry oracle = foldRegistry(tap.frames);
        for (const auto& node : nodes) {
            if (!node->joined()) continue;
            CHECK(node->registry() == oracle);
            Graph expected = node->backgroundKG();
            for (const auto& [topic, info] : node->registry()) expected.merge(info.metadata);
            CHECK(node->effectiveKG() == expected);
        }
    }
}
